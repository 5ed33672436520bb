//! Command-line driver: sample instances, match graph pairs, sweep seed
//! fractions, and run the Monte-Carlo estimators. Machine-readable output
//! goes to stdout; logs and errors go to stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use seedmatch::csbm::{mix_seed, sample_instance, CsbmParams};
use seedmatch::graph::Graph;
use seedmatch::harness::{
    self, accuracy, read_indexed_edges, read_seed_rows, write_csv, write_instance_files,
    SweepConfig,
};
use seedmatch::matchers::{run_method, Method};
use seedmatch::oracle::{expected_isolated_count, isolation_report, score_tail_estimate};
use seedmatch::relax::{lp_text, SeededBlocks};
use seedmatch::scores::SeededPair;
use seedmatch::{Error, Result};

#[derive(Parser)]
#[command(
    name = "seedmatch",
    version,
    about = "Seeded graph matching on correlated block-model pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a correlated graph pair and write it as files
    Generate(GenerateArgs),
    /// Match a graph pair from files and print the result as JSON
    Match(MatchArgs),
    /// Run a multi-trial experiment from a JSON config and write a CSV
    Sweep(SweepArgs),
    /// Monte-Carlo estimators for isolation counts and score tails
    Oracle(OracleArgs),
    /// Write the reduced matching LP for a sampled instance in LP format
    LpDump(LpDumpArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Number of vertices
    #[arg(long)]
    n: usize,
    /// Intra-community edge rate, as a multiple of ln(n)/n
    #[arg(long)]
    a: f64,
    /// Inter-community edge rate, as a multiple of ln(n)/n
    #[arg(long)]
    b: f64,
    /// Edge subsampling probability
    #[arg(long)]
    s: f64,
    /// Base RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn params(&self) -> CsbmParams {
        CsbmParams {
            n: self.n,
            a: self.a,
            b: self.b,
            s: self.s,
            rng_seed: self.seed,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Fraction of vertices revealed as seeds
    #[arg(long)]
    delta: f64,
    /// Output directory for A.edges, B.edges, seeds.csv, truth.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy)]
enum MethodArg {
    Hungarian,
    Greedy,
    Lp,
    Fw,
    Hop2,
}

impl From<MethodArg> for Method {
    fn from(arg: MethodArg) -> Method {
        match arg {
            MethodArg::Hungarian => Method::OverlapHungarian,
            MethodArg::Greedy => Method::OverlapGreedy,
            MethodArg::Lp => Method::LpExact,
            MethodArg::Fw => Method::FwLinear,
            MethodArg::Hop2 => Method::Hop2,
        }
    }
}

#[derive(Args)]
struct MatchArgs {
    /// Edge list of the first graph
    #[arg(long)]
    a: PathBuf,
    /// Edge list of the second graph
    #[arg(long)]
    b: PathBuf,
    /// Seed file: header plus u,pi_u,sigma_u rows for revealed vertices
    #[arg(long)]
    seeds: PathBuf,
    /// Optional truth file in the same format covering every vertex;
    /// enables the accuracy field
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Matching method
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Frank-Wolfe iteration count
    #[arg(long, default_value_t = 30)]
    fw_iters: usize,
    /// Refuse to run the LP when the unrevealed block exceeds this size
    #[arg(long, default_value_t = 500)]
    lp_cap: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = ArgGroup::new("mode").required(true).args(["isolated", "hard_isolated", "score_tails"]))]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Estimate the mean number of isolated unrevealed vertices
    #[arg(long)]
    isolated: bool,
    /// Estimate hard-isolation frequencies (same-community pair rate)
    #[arg(long)]
    hard_isolated: bool,
    /// Estimate score tail frequencies at thresholds eps * ln(n)
    #[arg(long)]
    score_tails: bool,
    /// Number of unrevealed vertices per sampled instance
    #[arg(long)]
    u_size: usize,
    /// Monte-Carlo trial count
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Threshold multiplier for --score-tails; repeat for a grid
    #[arg(long)]
    eps: Vec<f64>,
}

#[derive(Args)]
struct LpDumpArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Fraction of vertices revealed as seeds
    #[arg(long)]
    delta: f64,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Match(args) => cmd_match(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Oracle(args) => cmd_oracle(&args),
        Command::LpDump(args) => cmd_lp_dump(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let inst = sample_instance(&args.model.params(), args.delta)?;
    write_instance_files(&inst, &args.out)?;
    log::info!(
        "wrote instance files for n={} ({} seeds) to {}",
        inst.n(),
        inst.revealed.len(),
        args.out.display()
    );
    Ok(())
}

fn load_match_inputs(args: &MatchArgs) -> Result<(Graph, Graph, Vec<usize>, Vec<usize>, Option<Vec<usize>>)> {
    let (edges_a, n_a) = read_indexed_edges(&args.a)?;
    let (edges_b, n_b) = read_indexed_edges(&args.b)?;
    let seed_rows = read_seed_rows(&args.seeds)?;
    let truth_rows = args.truth.as_deref().map(read_seed_rows).transpose()?;
    // the vertex set is whatever the files mention; isolated tail vertices
    // only exist if a seed or truth row names them
    let mut n = n_a.max(n_b);
    for &(u, p, _) in &seed_rows {
        n = n.max(u + 1).max(p + 1);
    }
    if let Some(rows) = &truth_rows {
        for &(u, p, _) in rows {
            n = n.max(u + 1).max(p + 1);
        }
    }
    let mut seeds = seed_rows
        .iter()
        .map(|&(u, p, _)| (u, p))
        .collect::<Vec<_>>();
    seeds.sort_unstable();
    let revealed: Vec<usize> = seeds.iter().map(|&(u, _)| u).collect();
    if revealed.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParam(
            "seed file repeats a revealed vertex".to_string(),
        ));
    }
    let pi_r: Vec<usize> = seeds.iter().map(|&(_, p)| p).collect();
    let truth = truth_rows
        .map(|rows| {
            let mut pi_star = vec![usize::MAX; n];
            for (u, p, _) in rows {
                pi_star[u] = p;
            }
            if pi_star.contains(&usize::MAX) {
                return Err(Error::InvalidParam(
                    "truth file must cover every vertex".to_string(),
                ));
            }
            Ok(pi_star)
        })
        .transpose()?;
    Ok((
        Graph::from_edges(n, edges_a),
        Graph::from_edges(n, edges_b),
        revealed,
        pi_r,
        truth,
    ))
}

fn cmd_match(args: &MatchArgs) -> Result<()> {
    let method = Method::from(args.method);
    let (a, b, revealed, pi_r, truth) = load_match_inputs(args)?;
    let u_size = a.n() - revealed.len();
    if method == Method::LpExact && u_size > args.lp_cap {
        return Err(Error::InvalidParam(format!(
            "lp refused: {u_size} unrevealed vertices exceed --lp-cap {}; \
             raise the cap or use fw",
            args.lp_cap
        )));
    }
    let mut result = run_method(method, &a, &b, &revealed, &pi_r, args.fw_iters)?;
    if let Some(pi_star) = truth {
        let mut is_revealed = vec![false; a.n()];
        for &r in &revealed {
            is_revealed[r] = true;
        }
        let unrevealed: Vec<usize> = (0..a.n()).filter(|&u| !is_revealed[u]).collect();
        result.accuracy = Some(accuracy(&result.pi_hat, &pi_star, &unrevealed)?);
    }
    println!("{}", serde_json::to_string(&result).expect("serializable result"));
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let config: SweepConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: args.config.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let result = match &config.deltas {
        Some(deltas) => harness::sweep_seed_fraction(&config.base, deltas)?,
        None => harness::run_trials(&config.base)?,
    };
    write_csv(&result, &args.out)?;
    log::info!("wrote {} rows to {}", result.rows.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct IsolatedSummary {
    n: usize,
    u_size: usize,
    trials: u64,
    mean_isolated: f64,
    se_isolated: f64,
    expected_isolated: f64,
    mean_hard_isolated: f64,
}

#[derive(Serialize)]
struct HardIsolatedSummary {
    n: usize,
    u_size: usize,
    trials: u64,
    mean_hard_isolated: f64,
    same_community_pair_freq: f64,
    same_community_pair_se: f64,
}

fn oracle_delta(params: &CsbmParams, u_size: usize) -> Result<f64> {
    if u_size == 0 || u_size >= params.n || (params.n - u_size) % 2 != 0 {
        return Err(Error::InvalidParam(format!(
            "u_size must leave an even positive seed count, got {u_size} of {}",
            params.n
        )));
    }
    Ok((params.n - u_size) as f64 / params.n as f64)
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let params = args.model.params();
    params.validate()?;
    if args.score_tails {
        let eps = if args.eps.is_empty() {
            vec![0.0, 0.5, 1.0]
        } else {
            args.eps.clone()
        };
        let report = score_tail_estimate(&params, args.u_size, args.trials as usize, &eps)?;
        println!("{}", serde_json::to_string(&report).expect("serializable report"));
        return Ok(());
    }
    let delta = oracle_delta(&params, args.u_size)?;
    struct TrialStats {
        isolated: usize,
        hard: usize,
        same_community_pair: bool,
    }
    let stats = (0..args.trials)
        .into_par_iter()
        .map(|t| {
            let mut p = params;
            p.rng_seed = mix_seed(params.rng_seed, t);
            let inst = sample_instance(&p, delta)?;
            let report = isolation_report(&inst, &p);
            let plus = report
                .hard_isolated
                .iter()
                .filter(|&&u| inst.sigma_star[u] == 1)
                .count();
            let minus = report.hard_isolated.len() - plus;
            Ok(TrialStats {
                isolated: report.isolated.len(),
                hard: report.hard_isolated.len(),
                same_community_pair: plus >= 2 || minus >= 2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let trials = stats.len() as f64;
    let mean_hard = stats.iter().map(|s| s.hard as f64).sum::<f64>() / trials;
    if args.isolated {
        let mean_isolated = stats.iter().map(|s| s.isolated as f64).sum::<f64>() / trials;
        let var = stats
            .iter()
            .map(|s| (s.isolated as f64 - mean_isolated).powi(2))
            .sum::<f64>()
            / (trials - 1.0).max(1.0);
        let summary = IsolatedSummary {
            n: params.n,
            u_size: args.u_size,
            trials: args.trials,
            mean_isolated,
            se_isolated: (var / trials).sqrt(),
            expected_isolated: expected_isolated_count(&params, args.u_size),
            mean_hard_isolated: mean_hard,
        };
        println!("{}", serde_json::to_string(&summary).expect("serializable summary"));
    } else {
        let freq = stats.iter().filter(|s| s.same_community_pair).count() as f64 / trials;
        let summary = HardIsolatedSummary {
            n: params.n,
            u_size: args.u_size,
            trials: args.trials,
            mean_hard_isolated: mean_hard,
            same_community_pair_freq: freq,
            same_community_pair_se: (freq * (1.0 - freq) / trials).sqrt(),
        };
        println!("{}", serde_json::to_string(&summary).expect("serializable summary"));
    }
    Ok(())
}

fn cmd_lp_dump(args: &LpDumpArgs) -> Result<()> {
    let inst = sample_instance(&args.model.params(), args.delta)?;
    let pi_r: Vec<usize> = inst.revealed.iter().map(|&r| inst.pi_star[r]).collect();
    let pair = SeededPair::new(&inst.a, &inst.b, &inst.revealed, &pi_r)?;
    let blocks = SeededBlocks::new(&inst.a, &inst.b, &pair);
    let text = lp_text(&blocks);
    match &args.out {
        Some(path) => write_text(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
