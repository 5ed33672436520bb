//! End-to-end matching pipelines: seed-overlap scores with Hungarian or
//! greedy assignment, the two-hop variant, the exact LP relaxation, and the
//! Frank-Wolfe descent, each completing a partial correspondence to a full
//! permutation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assign::{greedy_match, hungarian_max};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::relax::{
    fw_step, project_to_permutation, solve_reduced_lp, FwState, LpStatus, SeededBlocks,
};
use crate::scores::{build_hop2_scores_for, build_scores_for, SeededPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OverlapHungarian,
    OverlapGreedy,
    LpExact,
    FwLinear,
    Hop2,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::OverlapHungarian,
        Method::OverlapGreedy,
        Method::LpExact,
        Method::FwLinear,
        Method::Hop2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::OverlapHungarian => "overlap_hungarian",
            Method::OverlapGreedy => "overlap_greedy",
            Method::LpExact => "lp_exact",
            Method::FwLinear => "fw_linear",
            Method::Hop2 => "hop2",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostics {
    Lp { objective: f64, status: LpStatus },
    Fw { objective_trace: Vec<f64> },
}

/// A completed correspondence: the full permutation, agreeing with the
/// revealed map on seeds, plus timing for the matching stage alone.
#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub elapsed_seconds: f64,
    #[serde(rename = "permutation")]
    pub pi_hat: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

fn assemble(n: usize, pair: &SeededPair, block_mapping: &[usize]) -> Vec<usize> {
    let mut pi_hat = vec![usize::MAX; n];
    for (i, &r) in pair.seeds.iter().enumerate() {
        pi_hat[r] = pair.seed_images[i];
    }
    for (i, &u) in pair.u_vertices.iter().enumerate() {
        pi_hat[u] = pair.v_vertices[block_mapping[i]];
    }
    pi_hat
}

fn finish(
    method: Method,
    n: usize,
    pair: &SeededPair,
    block_mapping: &[usize],
    started: Instant,
    diagnostics: Option<Diagnostics>,
) -> MatchResult {
    MatchResult {
        method,
        accuracy: None,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        pi_hat: assemble(n, pair, block_mapping),
        diagnostics,
    }
}

pub fn match_overlap_hungarian(
    a: &Graph,
    b: &Graph,
    revealed: &[usize],
    pi_r: &[usize],
) -> Result<MatchResult> {
    let pair = SeededPair::new(a, b, revealed, pi_r)?;
    let started = Instant::now();
    let scores = build_scores_for(a, b, &pair).to_mat();
    let assignment = hungarian_max(&scores)?;
    Ok(finish(Method::OverlapHungarian, a.n(), &pair, &assignment.mapping, started, None))
}

pub fn match_overlap_greedy(
    a: &Graph,
    b: &Graph,
    revealed: &[usize],
    pi_r: &[usize],
) -> Result<MatchResult> {
    let pair = SeededPair::new(a, b, revealed, pi_r)?;
    let started = Instant::now();
    let scores = build_scores_for(a, b, &pair).to_mat();
    let assignment = greedy_match(&scores)?;
    Ok(finish(Method::OverlapGreedy, a.n(), &pair, &assignment.mapping, started, None))
}

pub fn match_hop2(
    a: &Graph,
    b: &Graph,
    revealed: &[usize],
    pi_r: &[usize],
) -> Result<MatchResult> {
    let pair = SeededPair::new(a, b, revealed, pi_r)?;
    let started = Instant::now();
    let scores = build_hop2_scores_for(a, b, &pair).to_mat();
    let assignment = hungarian_max(&scores)?;
    Ok(finish(Method::Hop2, a.n(), &pair, &assignment.mapping, started, None))
}

pub fn match_lp(
    a: &Graph,
    b: &Graph,
    revealed: &[usize],
    pi_r: &[usize],
) -> Result<MatchResult> {
    let pair = SeededPair::new(a, b, revealed, pi_r)?;
    let started = Instant::now();
    if pair.m() == 0 {
        return Ok(finish(Method::LpExact, a.n(), &pair, &[], started, None));
    }
    let blocks = SeededBlocks::new(a, b, &pair);
    let solution = solve_reduced_lp(&blocks)?;
    let mapping = project_to_permutation(&solution.d)?;
    let diagnostics = Diagnostics::Lp { objective: solution.objective, status: solution.status };
    Ok(finish(Method::LpExact, a.n(), &pair, &mapping, started, Some(diagnostics)))
}

pub fn match_fw(
    a: &Graph,
    b: &Graph,
    revealed: &[usize],
    pi_r: &[usize],
    iterations: usize,
) -> Result<MatchResult> {
    let pair = SeededPair::new(a, b, revealed, pi_r)?;
    let started = Instant::now();
    if pair.m() == 0 {
        return Ok(finish(Method::FwLinear, a.n(), &pair, &[], started, None));
    }
    let blocks = SeededBlocks::new(a, b, &pair);
    let mut state = FwState::init(&blocks);
    for _ in 0..iterations {
        fw_step(&mut state, &blocks)?;
    }
    let mapping = project_to_permutation(&state.d)?;
    let diagnostics = Diagnostics::Fw { objective_trace: state.objective_trace };
    Ok(finish(Method::FwLinear, a.n(), &pair, &mapping, started, Some(diagnostics)))
}

/// Dispatches by method; `fw_iterations` only affects the Frank-Wolfe run.
pub fn run_method(
    method: Method,
    a: &Graph,
    b: &Graph,
    revealed: &[usize],
    pi_r: &[usize],
    fw_iterations: usize,
) -> Result<MatchResult> {
    match method {
        Method::OverlapHungarian => match_overlap_hungarian(a, b, revealed, pi_r),
        Method::OverlapGreedy => match_overlap_greedy(a, b, revealed, pi_r),
        Method::LpExact => match_lp(a, b, revealed, pi_r),
        Method::FwLinear => match_fw(a, b, revealed, pi_r, fw_iterations),
        Method::Hop2 => match_hop2(a, b, revealed, pi_r),
    }
}
