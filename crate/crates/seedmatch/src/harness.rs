//! Experiment orchestration: repeated trials over synthetic or loaded graph
//! pairs, accuracy and runtime statistics, seed-fraction sweeps, and the
//! file formats shared with the command-line driver.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csbm::{mix_seed, sample_instance, CsbmParams, Instance};
use crate::error::{Error, Result};
use crate::graph::{align_pair, intersect, largest_connected_component, load_edgelist, Graph};
use crate::matchers::{run_method, Method};

/// Where trial instances come from: fresh model draws, or a pair of edge
/// lists with the identity correspondence on common labels (optionally
/// overridden by an explicit correspondence file).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Synthetic(CsbmParams),
    RealPair {
        a_path: PathBuf,
        b_path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correspondence: Option<PathBuf>,
    },
}

/// One experiment: a source, a seed fraction, the methods to run, and the
/// trial count. `rng_seed` drives all randomness; any seed inside synthetic
/// parameters is replaced per trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialConfig {
    pub source: Source,
    pub seed_fraction: f64,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub rng_seed: u64,
    #[serde(default = "default_fw_iterations")]
    pub fw_iterations: usize,
}

fn default_fw_iterations() -> usize {
    30
}

/// Sweep-file shape: a trial config plus an optional list of seed fractions
/// to sweep; when absent, only the config's own fraction is run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub base: TrialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub param: f64,
    pub mean_acc: f64,
    pub sd_acc: f64,
    pub mean_runtime_s: f64,
    pub sd_runtime_s: f64,
    pub trials: usize,
    pub u_size: usize,
    pub giant_size: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParam("trials must be at least 1".to_string()));
        }
        if self.fw_iterations == 0 {
            return Err(Error::InvalidParam(
                "fw_iterations must be at least 1".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&self.seed_fraction) {
            return Err(Error::InvalidParam(format!(
                "seed_fraction must lie in [0, 1), got {}",
                self.seed_fraction
            )));
        }
        if let Source::Synthetic(params) = &self.source {
            params.validate()?;
        }
        Ok(())
    }
}

/// Fraction of unrevealed vertices mapped to their true image.
pub fn accuracy(pi_hat: &[usize], pi_star: &[usize], unrevealed: &[usize]) -> Result<f64> {
    if unrevealed.is_empty() {
        return Err(Error::EmptyUnrevealed);
    }
    let correct = unrevealed
        .iter()
        .filter(|&&u| pi_hat[u] == pi_star[u])
        .count();
    Ok(correct as f64 / unrevealed.len() as f64)
}

fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// A fixed pair of graphs with ground truth, shared by all trials of a
/// real-pair run.
struct LoadedPair {
    a: Graph,
    b: Graph,
    truth: Vec<usize>,
    giant: usize,
}

fn parse_correspondence(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(x), Some(y), None) => pairs.push((x.to_string(), y.to_string())),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: "expected exactly two labels".to_string(),
                })
            }
        }
    }
    Ok(pairs)
}

fn load_pair(
    a_path: &Path,
    b_path: &Path,
    correspondence: Option<&Path>,
) -> Result<LoadedPair> {
    let (ga, map_a) = load_edgelist(a_path)?;
    let (gb, map_b) = load_edgelist(b_path)?;
    let (a, b, truth) = match correspondence {
        None => align_pair(&ga, &gb, &map_a, &map_b)?,
        Some(corr_path) => {
            let pairs = parse_correspondence(corr_path)?;
            if pairs.is_empty() {
                return Err(Error::EmptyIntersection);
            }
            let mut sorted = pairs;
            sorted.sort();
            let resolve = |label: &str, map: &crate::graph::VertexMap, side: &str| {
                map.get(label).ok_or_else(|| {
                    Error::InvalidParam(format!(
                        "correspondence label {label} is missing from the {side} graph"
                    ))
                })
            };
            let mut a_old = Vec::with_capacity(sorted.len());
            let mut b_old = Vec::with_capacity(sorted.len());
            for (la, lb) in &sorted {
                a_old.push(resolve(la, &map_a, "first")?);
                b_old.push(resolve(lb, &map_b, "second")?);
            }
            let check_distinct = |v: &[usize], side: &str| {
                let mut seen = v.to_vec();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != v.len() {
                    return Err(Error::InvalidParam(format!(
                        "correspondence repeats a {side} label"
                    )));
                }
                Ok(())
            };
            check_distinct(&a_old, "first")?;
            check_distinct(&b_old, "second")?;
            let n = sorted.len();
            // reindex the second side by sorted old index so both restricted
            // graphs use ascending label order
            let mut b_rank: Vec<usize> = (0..n).collect();
            b_rank.sort_by_key(|&i| b_old[i]);
            let mut b_new = vec![0usize; n];
            for (rank, &i) in b_rank.iter().enumerate() {
                b_new[i] = rank;
            }
            let restrict = |g: &Graph, old: &[usize], new_of_pos: &dyn Fn(usize) -> usize| {
                let mut new_index = vec![usize::MAX; g.n()];
                for (pos, &o) in old.iter().enumerate() {
                    new_index[o] = new_of_pos(pos);
                }
                let edges: Vec<(usize, usize)> = g
                    .edges()
                    .filter(|&(u, v)| new_index[u] != usize::MAX && new_index[v] != usize::MAX)
                    .map(|(u, v)| (new_index[u], new_index[v]))
                    .collect();
                Graph::from_edges(n, edges)
            };
            let a = restrict(&ga, &a_old, &|pos| pos);
            let b = restrict(&gb, &b_old, &|pos| b_new[pos]);
            let truth: Vec<usize> = (0..n).map(|pos| b_new[pos]).collect();
            (a, b, truth)
        }
    };
    let giant = largest_connected_component(&intersect(&a, &b, &truth)?).1.len();
    Ok(LoadedPair { a, b, truth, giant })
}

struct TrialData {
    a: Graph,
    b: Graph,
    revealed: Vec<usize>,
    pi_r: Vec<usize>,
    truth: Vec<usize>,
    unrevealed: Vec<usize>,
    giant: usize,
}

fn synthetic_trial(params: &CsbmParams, delta: f64, trial_seed: u64) -> Result<TrialData> {
    let mut p = *params;
    p.rng_seed = trial_seed;
    let inst: Instance = sample_instance(&p, delta)?;
    let pi_r: Vec<usize> = inst.revealed.iter().map(|&r| inst.pi_star[r]).collect();
    let giant = largest_connected_component(&intersect(&inst.a, &inst.b, &inst.pi_star)?)
        .1
        .len();
    Ok(TrialData {
        revealed: inst.revealed.clone(),
        pi_r,
        unrevealed: inst.unrevealed(),
        giant,
        truth: inst.pi_star,
        a: inst.a,
        b: inst.b,
    })
}

fn loaded_trial(pair: &LoadedPair, delta: f64, trial_seed: u64) -> Result<TrialData> {
    let n = pair.a.n();
    let k = (delta * n as f64).floor() as usize;
    if k >= n {
        return Err(Error::InvalidParam(format!(
            "seed fraction {delta} reveals all {n} vertices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut revealed: Vec<usize> = order[..k].to_vec();
    revealed.sort_unstable();
    let mut is_revealed = vec![false; n];
    for &r in &revealed {
        is_revealed[r] = true;
    }
    let pi_r: Vec<usize> = revealed.iter().map(|&r| pair.truth[r]).collect();
    Ok(TrialData {
        a: pair.a.clone(),
        b: pair.b.clone(),
        revealed,
        pi_r,
        truth: pair.truth.clone(),
        unrevealed: (0..n).filter(|&u| !is_revealed[u]).collect(),
        giant: pair.giant,
    })
}

fn build_trial(
    cfg: &TrialConfig,
    delta: f64,
    loaded: Option<&LoadedPair>,
    trial_seed: u64,
) -> Result<TrialData> {
    match (&cfg.source, loaded) {
        (Source::Synthetic(params), _) => synthetic_trial(params, delta, trial_seed),
        (Source::RealPair { .. }, Some(pair)) => loaded_trial(pair, delta, trial_seed),
        (Source::RealPair { .. }, None) => unreachable!("real pair not loaded"),
    }
}

struct TrialRecord {
    accs: Vec<f64>,
    runtimes: Vec<f64>,
    giant: usize,
    u_size: usize,
}

fn run_one_trial(cfg: &TrialConfig, delta: f64, loaded: Option<&LoadedPair>, trial_seed: u64) -> Result<TrialRecord> {
    let data = build_trial(cfg, delta, loaded, trial_seed)?;
    let mut accs = Vec::with_capacity(cfg.methods.len());
    let mut runtimes = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let result = run_method(
            method,
            &data.a,
            &data.b,
            &data.revealed,
            &data.pi_r,
            cfg.fw_iterations,
        )?;
        let acc = accuracy(&result.pi_hat, &data.truth, &data.unrevealed)?;
        accs.push(acc);
        runtimes.push(result.elapsed_seconds);
    }
    Ok(TrialRecord { accs, runtimes, giant: data.giant, u_size: data.unrevealed.len() })
}

fn run_trials_at(cfg: &TrialConfig, delta: f64, loaded: Option<&LoadedPair>) -> Result<Vec<SweepRow>> {
    // one discarded warm-up trial so allocator and cache effects stay out of
    // the recorded runtimes
    run_one_trial(cfg, delta, loaded, mix_seed(cfg.rng_seed, u64::MAX))?;
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let record = run_one_trial(cfg, delta, loaded, mix_seed(cfg.rng_seed, t as u64))?;
            log::info!(
                "delta {delta} trial {t}: {}",
                cfg.methods
                    .iter()
                    .zip(&record.accs)
                    .map(|(m, a)| format!("{m} {a:.4}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    let u_size = records[0].u_size;
    let giant_size =
        records.iter().map(|r| r.giant as f64).sum::<f64>() / records.len() as f64;
    let mut rows: Vec<SweepRow> = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(idx, &method)| {
            let accs: Vec<f64> = records.iter().map(|r| r.accs[idx]).collect();
            let times: Vec<f64> = records.iter().map(|r| r.runtimes[idx]).collect();
            let (mean_acc, sd_acc) = mean_sd(&accs);
            let (mean_runtime_s, sd_runtime_s) = mean_sd(&times);
            SweepRow {
                method,
                param: delta,
                mean_acc,
                sd_acc,
                mean_runtime_s,
                sd_runtime_s,
                trials: cfg.trials,
                u_size,
                giant_size,
            }
        })
        .collect();
    rows.sort_by(|x, y| x.method.as_str().cmp(y.method.as_str()));
    Ok(rows)
}

fn load_source(cfg: &TrialConfig) -> Result<Option<LoadedPair>> {
    match &cfg.source {
        Source::Synthetic(_) => Ok(None),
        Source::RealPair { a_path, b_path, correspondence } => Ok(Some(load_pair(
            a_path,
            b_path,
            correspondence.as_deref(),
        )?)),
    }
}

/// Runs the configured trials at the config's own seed fraction.
pub fn run_trials(cfg: &TrialConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let loaded = load_source(cfg)?;
    let rows = run_trials_at(cfg, cfg.seed_fraction, loaded.as_ref())?;
    Ok(SweepResult { rows })
}

/// Runs the configured trials once per seed fraction in `deltas`, which must
/// be ascending; the pair is loaded once and shared across fractions.
pub fn sweep_seed_fraction(cfg: &TrialConfig, deltas: &[f64]) -> Result<SweepResult> {
    cfg.validate()?;
    if deltas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParam(
            "seed fractions must be sorted ascending".to_string(),
        ));
    }
    let loaded = load_source(cfg)?;
    let mut rows = Vec::new();
    for &delta in deltas {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParam(format!(
                "seed fraction must lie in [0, 1), got {delta}"
            )));
        }
        rows.extend(run_trials_at(cfg, delta, loaded.as_ref())?);
    }
    Ok(SweepResult { rows })
}

pub const CSV_HEADER: &str =
    "method,param,mean_acc,sd_acc,mean_runtime_s,sd_runtime_s,trials,u_size,giant_size";

/// Renders rows sorted by method name, then parameter, with six-decimal
/// floats.
pub fn csv_string(result: &SweepResult) -> String {
    let mut rows = result.rows.clone();
    rows.sort_by(|x, y| {
        x.method
            .as_str()
            .cmp(y.method.as_str())
            .then(x.param.total_cmp(&y.param))
    });
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.6}\n",
            r.method,
            r.param,
            r.mean_acc,
            r.sd_acc,
            r.mean_runtime_s,
            r.sd_runtime_s,
            r.trials,
            r.u_size,
            r.giant_size
        ));
    }
    out
}

pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    fs::write(path, csv_string(result)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a file produced by `write_csv` back into rows.
pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != CSV_HEADER {
        return Err(Error::Parse {
            path: "<csv>".to_string(),
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let fail = |message: String| Error::Parse {
            path: "<csv>".to_string(),
            line: idx + 2,
            message,
        };
        if fields.len() != 9 {
            return Err(fail(format!("expected 9 fields, got {}", fields.len())));
        }
        let method: Method = fields[0]
            .parse()
            .map_err(|_| fail(format!("unknown method {:?}", fields[0])))?;
        let float = |s: &str| s.parse::<f64>().map_err(|e| fail(format!("bad float {s:?}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| fail(format!("bad integer {s:?}: {e}")));
        rows.push(SweepRow {
            method,
            param: float(fields[1])?,
            mean_acc: float(fields[2])?,
            sd_acc: float(fields[3])?,
            mean_runtime_s: float(fields[4])?,
            sd_runtime_s: float(fields[5])?,
            trials: int(fields[6])?,
            u_size: int(fields[7])?,
            giant_size: float(fields[8])?,
        });
    }
    Ok(SweepResult { rows })
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(content.as_bytes()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Serializes an instance as `A.edges`, `B.edges`, `seeds.csv` (revealed
/// vertex, image, community), and `truth.csv` (every vertex).
pub fn write_instance_files(inst: &Instance, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let edges_text = |g: &Graph| {
        let mut out = String::new();
        for (u, v) in g.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    };
    write_file(&dir.join("A.edges"), &edges_text(&inst.a))?;
    write_file(&dir.join("B.edges"), &edges_text(&inst.b))?;
    let mut seeds = String::from("u,pi_u,sigma_u\n");
    for &r in &inst.revealed {
        seeds.push_str(&format!("{r},{},{}\n", inst.pi_star[r], inst.sigma_star[r]));
    }
    write_file(&dir.join("seeds.csv"), &seeds)?;
    let mut truth = String::from("u,pi_u,sigma_u\n");
    for u in 0..inst.n() {
        truth.push_str(&format!("{u},{},{}\n", inst.pi_star[u], inst.sigma_star[u]));
    }
    write_file(&dir.join("truth.csv"), &truth)
}

/// Reads a whitespace-separated edge list whose labels are vertex indices.
/// Returns the edges plus one past the largest endpoint (0 for an empty
/// file).
pub fn read_indexed_edges(path: &Path) -> Result<(Vec<(usize, usize)>, usize)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut edges = Vec::new();
    let mut n = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fail = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message,
        };
        let mut tokens = line.split_whitespace();
        let (u, v) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(u), Some(v), None) => (u, v),
            _ => return Err(fail("expected exactly two vertex indices".to_string())),
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| fail(format!("bad vertex index {s:?}: {e}")))
        };
        let (u, v) = (parse(u)?, parse(v)?);
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v));
    }
    Ok((edges, n))
}

/// Reads a `seeds.csv`/`truth.csv`-style file: a header line, then rows of
/// vertex, image, community sign.
pub fn read_seed_rows(path: &Path) -> Result<Vec<(usize, usize, i8)>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if idx == 0 {
            if raw.trim() != "u,pi_u,sigma_u" {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: 1,
                    message: format!("unexpected header {raw:?}"),
                });
            }
            continue;
        }
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fail = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(fail(format!("expected 3 fields, got {}", fields.len())));
        }
        let u = fields[0]
            .parse::<usize>()
            .map_err(|e| fail(format!("bad vertex {:?}: {e}", fields[0])))?;
        let pi_u = fields[1]
            .parse::<usize>()
            .map_err(|e| fail(format!("bad image {:?}: {e}", fields[1])))?;
        let sigma = match fields[2] {
            "1" => 1i8,
            "-1" => -1i8,
            other => return Err(fail(format!("bad community sign {other:?}"))),
        };
        rows.push((u, pi_u, sigma));
    }
    Ok(rows)
}
