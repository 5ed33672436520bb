//! Brute-force references and theory-side estimators used by tests and the
//! impossibility-regime experiments.

use itertools::Itertools;
use serde::Serialize;

use crate::assign::Assignment;
use crate::csbm::{sample_instance, CsbmParams, Instance};
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Vertices isolated in the intersection graph under the true alignment,
/// the subset whose swaps are statistically invisible, and the analytic
/// expectation of the former.
#[derive(Debug, Clone, Serialize)]
pub struct IsolationReport {
    pub isolated: Vec<usize>,
    pub hard_isolated: Vec<usize>,
    pub expected_isolated: f64,
}

/// Unrevealed vertices with no incident edge in the intersection graph under
/// the true correspondence.
pub fn isolated_set(inst: &Instance) -> Vec<usize> {
    inst.unrevealed()
        .into_iter()
        .filter(|&u| {
            !inst.a.neighbors(u).iter().any(|&v| {
                inst.b
                    .has_edge(inst.pi_star[u], inst.pi_star[v as usize])
            })
        })
        .collect()
}

/// Hard isolated vertices: isolated, with no edges into the unrevealed set
/// on either side, and none of their revealed neighbors' images adjacent to
/// any unrevealed vertex of the second graph.
pub fn hard_isolated_set(inst: &Instance) -> Vec<usize> {
    let n = inst.n();
    let mut revealed = vec![false; n];
    for &r in &inst.revealed {
        revealed[r] = true;
    }
    let mut b_revealed = vec![false; n];
    for &r in &inst.revealed {
        b_revealed[inst.pi_star[r]] = true;
    }
    let b_has_unrevealed_neighbor = |y: usize| {
        inst.b.neighbors(y).iter().any(|&w| !b_revealed[w as usize])
    };
    isolated_set(inst)
        .into_iter()
        .filter(|&u| {
            let no_unrevealed_a = !inst
                .a
                .neighbors(u)
                .iter()
                .any(|&w| !revealed[w as usize]);
            let no_unrevealed_b = !b_has_unrevealed_neighbor(inst.pi_star[u]);
            let seed_edges_unclaimable = inst
                .a
                .neighbors(u)
                .iter()
                .filter(|&&v| revealed[v as usize])
                .all(|&v| !b_has_unrevealed_neighbor(inst.pi_star[v as usize]));
            no_unrevealed_a && no_unrevealed_b && seed_edges_unclaimable
        })
        .collect()
}

/// Exact finite-n expectation of the isolated-vertex count:
/// `u_size * (1 - s^2 p_intra)^(n/2) * (1 - s^2 p_inter)^(n/2)`,
/// with the same probability clamping as the sampler.
pub fn expected_isolated_count(params: &CsbmParams, u_size: usize) -> f64 {
    let (p_intra, p_inter) = params.edge_probs();
    let s2 = params.s * params.s;
    let half = params.n as f64 / 2.0;
    u_size as f64 * (1.0 - s2 * p_intra).powf(half) * (1.0 - s2 * p_inter).powf(half)
}

pub fn isolation_report(inst: &Instance, params: &CsbmParams) -> IsolationReport {
    IsolationReport {
        isolated: isolated_set(inst),
        hard_isolated: hard_isolated_set(inst),
        expected_isolated: expected_isolated_count(params, inst.unrevealed().len()),
    }
}

/// Exhaustive maximum-trace assignment: enumerates all m! bijections in
/// lexicographic order and keeps the first one attaining the maximum, which
/// matches the assignment solvers' tie-break.
pub fn brute_force_best_trace(values: &Mat) -> Result<Assignment> {
    if !values.is_square() {
        return Err(Error::SizeMismatch(format!(
            "assignment requires a square matrix, got {}x{}",
            values.rows(),
            values.cols()
        )));
    }
    let m = values.rows();
    if m > 9 {
        return Err(Error::SizeGuard("brute-force assignment size", m));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in (0..m).permutations(m) {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| values[(i, j)]).sum();
        if best.as_ref().is_none_or(|(bt, _)| total > *bt) {
            best = Some((total, perm));
        }
    }
    let (total, mapping) = best.unwrap_or((0.0, Vec::new()));
    Ok(Assignment { mapping, total })
}

/// Empirical tail frequencies of the seed-overlap score at thresholds
/// `eps * ln(n)`: how often a fixed wrong pair scores at least the threshold
/// and how often the true pair scores at most it.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreTailReport {
    pub n: usize,
    pub u_size: usize,
    pub trials: usize,
    pub eps: Vec<f64>,
    pub false_pair_freq: Vec<f64>,
    pub false_pair_se: Vec<f64>,
    pub true_pair_freq: Vec<f64>,
    pub true_pair_se: Vec<f64>,
}

/// Monte-Carlo estimate of the score tail frequencies. Each trial samples a
/// fresh instance, scores the first unrevealed vertex against its true image
/// and against one fixed wrong image.
pub fn score_tail_estimate(
    params: &CsbmParams,
    u_size: usize,
    trials: usize,
    eps: &[f64],
) -> Result<ScoreTailReport> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be positive".to_string()));
    }
    if u_size == 0 || u_size >= params.n || (params.n - u_size) % 2 != 0 {
        return Err(Error::InvalidParam(format!(
            "u_size must leave an even positive seed count, got {u_size} of {}",
            params.n
        )));
    }
    let delta = (params.n - u_size) as f64 / params.n as f64;
    let log_n = (params.n as f64).ln();
    let mut false_hits = vec![0usize; eps.len()];
    let mut true_hits = vec![0usize; eps.len()];
    for trial in 0..trials {
        let mut p = *params;
        p.rng_seed = crate::csbm::mix_seed(params.rng_seed, trial as u64);
        let inst = sample_instance(&p, delta)?;
        let unrevealed = inst.unrevealed();
        let u = unrevealed[0];
        let truth = inst.pi_star[u];
        let b_unrevealed: Vec<usize> = {
            let mut taken = vec![false; p.n];
            for &r in &inst.revealed {
                taken[inst.pi_star[r]] = true;
            }
            (0..p.n).filter(|&y| !taken[y]).collect()
        };
        let wrong = *b_unrevealed.iter().find(|&&y| y != truth).ok_or_else(|| {
            Error::InvalidParam("need at least two unrevealed vertices".to_string())
        })?;
        let mut revealed_mask = vec![false; p.n];
        for &r in &inst.revealed {
            revealed_mask[r] = true;
        }
        let score = |target: usize| -> i64 {
            inst.a
                .neighbors(u)
                .iter()
                .filter(|&&r| revealed_mask[r as usize])
                .filter(|&&r| inst.b.has_edge(target, inst.pi_star[r as usize]))
                .count() as i64
        };
        let true_score = score(truth) as f64;
        let false_score = score(wrong) as f64;
        for (k, &e) in eps.iter().enumerate() {
            if false_score >= e * log_n {
                false_hits[k] += 1;
            }
            if true_score <= e * log_n {
                true_hits[k] += 1;
            }
        }
    }
    let freq_se = |hits: &[usize]| {
        let freq: Vec<f64> = hits.iter().map(|&h| h as f64 / trials as f64).collect();
        let se: Vec<f64> = freq
            .iter()
            .map(|&f| (f * (1.0 - f) / trials as f64).sqrt())
            .collect();
        (freq, se)
    };
    let (false_pair_freq, false_pair_se) = freq_se(&false_hits);
    let (true_pair_freq, true_pair_se) = freq_se(&true_hits);
    Ok(ScoreTailReport {
        n: params.n,
        u_size,
        trials,
        eps: eps.to_vec(),
        false_pair_freq,
        false_pair_se,
        true_pair_freq,
        true_pair_se,
    })
}
