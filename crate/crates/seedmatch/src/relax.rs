//! Bistochastic relaxations of the seeded matching objective: the reduced
//! exact LP and the Frank-Wolfe l1 descent, both over the unrevealed block.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use serde::Serialize;

use crate::assign::hungarian_max;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mat::Mat;
use crate::scores::{build_scores_for, SeededPair};

/// Dense blocks of the pair in canonical order: seed rows first (sorted
/// revealed vertices, their images on the second side), then the unrevealed
/// vertices ascending. The second graph is implicitly relabeled so the seed
/// correspondence becomes the identity on the first `k` indices.
pub struct SeededBlocks {
    pub k: usize,
    pub m: usize,
    /// seed x unrevealed adjacency of the first graph
    pub a_ru: Mat,
    /// unrevealed x seed adjacency of the first graph (transpose of `a_ru`)
    pub a_ur: Mat,
    /// unrevealed x unrevealed adjacency of the first graph
    pub a_uu: Mat,
    /// seed-image x unrevealed-image adjacency of the second graph
    pub bt_ru: Mat,
    pub bt_ur: Mat,
    pub bt_uu: Mat,
    /// seed-overlap scores on the unrevealed block, exact integers
    pub scores: Mat,
}

impl SeededBlocks {
    pub fn new(a: &Graph, b: &Graph, pair: &SeededPair) -> SeededBlocks {
        let k = pair.seed_count();
        let m = pair.m();
        let edge = |g: &Graph, u: usize, v: usize| if g.has_edge(u, v) { 1.0 } else { 0.0 };
        let a_ru = Mat::from_fn(k, m, |i, j| edge(a, pair.seeds[i], pair.u_vertices[j]));
        let bt_ru = Mat::from_fn(k, m, |i, j| edge(b, pair.seed_images[i], pair.v_vertices[j]));
        let a_uu = Mat::from_fn(m, m, |i, j| edge(a, pair.u_vertices[i], pair.u_vertices[j]));
        let bt_uu = Mat::from_fn(m, m, |i, j| edge(b, pair.v_vertices[i], pair.v_vertices[j]));
        SeededBlocks {
            k,
            m,
            a_ur: a_ru.transpose(),
            bt_ur: bt_ru.transpose(),
            a_ru,
            a_uu,
            bt_ru,
            bt_uu,
            scores: build_scores_for(a, b, pair).to_mat(),
        }
    }
}

/// Square matrix with unit row and column sums up to 1e-9 and entries no
/// more negative than -1e-12 (clamped to zero on read).
#[derive(Debug, Clone)]
pub struct DoublyStochastic {
    values: Mat,
}

impl DoublyStochastic {
    pub fn new(values: Mat) -> Result<DoublyStochastic> {
        let d = DoublyStochastic { values };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(m: usize) -> DoublyStochastic {
        if m == 0 {
            return DoublyStochastic { values: Mat::zeros(0, 0) };
        }
        DoublyStochastic { values: Mat::filled(m, m, 1.0 / m as f64) }
    }

    pub fn from_permutation(perm: &[usize]) -> DoublyStochastic {
        DoublyStochastic { values: Mat::from_permutation(perm) }
    }

    pub fn m(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)].max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.values.is_square() {
            return Err(Error::SizeMismatch(format!(
                "doubly stochastic block must be square, got {}x{}",
                self.values.rows(),
                self.values.cols()
            )));
        }
        let m = self.values.rows();
        for i in 0..m {
            for j in 0..m {
                let v = self.values[(i, j)];
                if !v.is_finite() || v < -1e-12 {
                    return Err(Error::InvalidParam(format!(
                        "entry ({i}, {j}) = {v} is not a valid transport weight"
                    )));
                }
            }
        }
        for i in 0..m {
            let row: f64 = self.values.row(i).iter().sum();
            if (row - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParam(format!("row {i} sums to {row}")));
            }
        }
        for j in 0..m {
            let col: f64 = (0..m).map(|i| self.values[(i, j)]).sum();
            if (col - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParam(format!("column {j} sums to {col}")));
            }
        }
        Ok(())
    }
}

fn mat_sub(x: &Mat, y: &Mat) -> Mat {
    Mat::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - y[(i, j)])
}

fn sign_mat(r: &Mat) -> Mat {
    Mat::from_fn(r.rows(), r.cols(), |i, j| {
        let v = r[(i, j)];
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Residuals of the alignment equation restricted to the three non-constant
/// blocks: seed x unrevealed, unrevealed x seed, unrevealed x unrevealed.
struct Residuals {
    ru: Mat,
    ur: Mat,
    uu: Mat,
}

fn residual_blocks(blocks: &SeededBlocks, d: &Mat) -> Residuals {
    Residuals {
        ru: mat_sub(&blocks.a_ru.matmul(d), &blocks.bt_ru),
        ur: mat_sub(&blocks.a_ur, &d.matmul(&blocks.bt_ur)),
        uu: mat_sub(&blocks.a_uu.matmul(d), &d.matmul(&blocks.bt_uu)),
    }
}

fn three_block_objective(r: &Residuals) -> f64 {
    r.ru.l1_norm() + r.ur.l1_norm() + r.uu.l1_norm()
}

/// Subgradient of the three-block l1 objective with respect to the
/// unrevealed transport block; zero residuals contribute zero.
fn fw_gradient(blocks: &SeededBlocks, r: &Residuals) -> Mat {
    let g_ru = sign_mat(&r.ru);
    let g_ur = sign_mat(&r.ur);
    let g_uu = sign_mat(&r.uu);
    let mut grad = mat_sub(&blocks.a_ur.matmul(&g_ru), &g_ur.matmul(&blocks.bt_ru));
    let term_uu = mat_sub(&blocks.a_uu.matmul(&g_uu), &g_uu.matmul(&blocks.bt_uu));
    for i in 0..grad.rows() {
        for j in 0..grad.cols() {
            grad[(i, j)] += term_uu[(i, j)];
        }
    }
    grad
}

/// Linearized alignment objective on the unrevealed block with the additive
/// constant dropped: -4 * sum(D .* Score) plus the l1 norm of the
/// unrevealed-block residual.
pub fn reduced_objective(blocks: &SeededBlocks, d: &DoublyStochastic) -> Result<f64> {
    if d.m() != blocks.m {
        return Err(Error::SizeMismatch(format!(
            "transport block is {}x{}, expected {}x{}",
            d.m(),
            d.m(),
            blocks.m,
            blocks.m
        )));
    }
    let linear: f64 = blocks
        .scores
        .iter()
        .zip(d.values().iter())
        .map(|(s, w)| s * w)
        .sum();
    let phi = mat_sub(&blocks.a_uu.matmul(d.values()), &d.values().matmul(&blocks.bt_uu)).l1_norm();
    Ok(-4.0 * linear + phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub d: DoublyStochastic,
    pub objective: f64,
    pub status: LpStatus,
}

/// Solves the reduced LP exactly: minimize the linearized score term plus
/// slack bounding the unrevealed residual from both sides, over doubly
/// stochastic transport blocks. Slack variables whose residual entry has a
/// fixed sign (empty adjacency row or column) are folded into the objective
/// as linear terms, so only genuinely two-sided entries keep a variable.
pub fn solve_reduced_lp(blocks: &SeededBlocks) -> Result<LpSolution> {
    let m = blocks.m;
    if m == 0 {
        return Err(Error::EmptyUnrevealed);
    }
    let a_row_empty: Vec<bool> = (0..m).map(|i| blocks.a_uu.row(i).iter().all(|&v| v == 0.0)).collect();
    let bt_col_empty: Vec<bool> = (0..m)
        .map(|j| (0..m).all(|w| blocks.bt_uu[(w, j)] == 0.0))
        .collect();
    let mut d_obj: Vec<f64> = blocks.scores.data().iter().map(|&s| -4.0 * s).collect();
    let mut keep_y = vec![false; m * m];
    for i in 0..m {
        for j in 0..m {
            match (a_row_empty[i], bt_col_empty[j]) {
                (true, true) => {}
                // the residual entry is a one-signed sum, so its absolute
                // value is linear in d and needs no slack variable
                (true, false) => {
                    for w in 0..m {
                        let coef = blocks.bt_uu[(w, j)];
                        if coef != 0.0 {
                            d_obj[i * m + w] += coef;
                        }
                    }
                }
                (false, true) => {
                    for w in 0..m {
                        let coef = blocks.a_uu[(i, w)];
                        if coef != 0.0 {
                            d_obj[w * m + j] += coef;
                        }
                    }
                }
                (false, false) => keep_y[i * m + j] = true,
            }
        }
    }
    let mut prob = Problem::new(OptimizationDirection::Minimize);
    let d_vars: Vec<Variable> = d_obj.iter().map(|&c| prob.add_var(c, (0.0, 1.0))).collect();
    let y_vars: Vec<Option<Variable>> = keep_y
        .iter()
        .map(|&kept| kept.then(|| prob.add_var(1.0, (0.0, f64::INFINITY))))
        .collect();
    for i in 0..m {
        let row: Vec<(Variable, f64)> = (0..m).map(|j| (d_vars[i * m + j], 1.0)).collect();
        prob.add_constraint(&row, ComparisonOp::Eq, 1.0);
    }
    for j in 0..m {
        let col: Vec<(Variable, f64)> = (0..m).map(|i| (d_vars[i * m + j], 1.0)).collect();
        prob.add_constraint(&col, ComparisonOp::Eq, 1.0);
    }
    for i in 0..m {
        for j in 0..m {
            let Some(y) = y_vars[i * m + j] else { continue };
            let mut terms: Vec<(Variable, f64)> = Vec::new();
            for w in 0..m {
                let coef = blocks.a_uu[(i, w)];
                if coef != 0.0 {
                    terms.push((d_vars[w * m + j], coef));
                }
            }
            for w in 0..m {
                let coef = blocks.bt_uu[(w, j)];
                if coef != 0.0 {
                    terms.push((d_vars[i * m + w], -coef));
                }
            }
            let mut pos = terms.clone();
            pos.push((y, -1.0));
            prob.add_constraint(&pos, ComparisonOp::Le, 0.0);
            let mut neg: Vec<(Variable, f64)> = terms.iter().map(|&(v, c)| (v, -c)).collect();
            neg.push((y, -1.0));
            prob.add_constraint(&neg, ComparisonOp::Le, 0.0);
        }
    }
    let solution = prob
        .solve()
        .map_err(|e| Error::LpBackend(format!("reduced LP failed: {e}")))?;
    // the backend reports feasible values up to its own tolerance; round off
    // negative dust before the strict validation
    let values = Mat::from_fn(m, m, |i, j| {
        let v = solution[d_vars[i * m + j]];
        if (-1e-7..0.0).contains(&v) {
            0.0
        } else {
            v
        }
    });
    let d = DoublyStochastic::new(values)?;
    let objective = reduced_objective(blocks, &d)?;
    Ok(LpSolution { d, objective, status: LpStatus::Optimal })
}

/// Frank-Wolfe state over the unrevealed block. The objective trace holds
/// the three-block l1 value at every iterate, starting with the initial one.
pub struct FwState {
    pub t: usize,
    pub d: DoublyStochastic,
    pub objective_trace: Vec<f64>,
}

impl FwState {
    /// Starts from the uniform doubly stochastic block.
    pub fn init(blocks: &SeededBlocks) -> FwState {
        let d = DoublyStochastic::uniform(blocks.m);
        let f0 = three_block_objective(&residual_blocks(blocks, d.values()));
        FwState { t: 0, d, objective_trace: vec![f0] }
    }
}

/// One conditional-gradient update: move toward the permutation minimizing
/// the linearized objective, with step size 1/(t+2).
pub fn fw_step(state: &mut FwState, blocks: &SeededBlocks) -> Result<()> {
    let m = blocks.m;
    let residuals = residual_blocks(blocks, state.d.values());
    let grad = fw_gradient(blocks, &residuals);
    let neg = Mat::from_fn(m, m, |i, j| -grad[(i, j)]);
    let target = hungarian_max(&neg)?;
    let gamma = 1.0 / (state.t as f64 + 2.0);
    let mut values = state.d.values().clone();
    for i in 0..m {
        for j in 0..m {
            values[(i, j)] *= 1.0 - gamma;
        }
    }
    for (i, &j) in target.mapping.iter().enumerate() {
        values[(i, j)] += gamma;
    }
    state.d = DoublyStochastic { values };
    state
        .objective_trace
        .push(three_block_objective(&residual_blocks(blocks, state.d.values())));
    state.t += 1;
    Ok(())
}

pub fn run_fw(blocks: &SeededBlocks, iterations: usize) -> Result<FwState> {
    let mut state = FwState::init(blocks);
    for _ in 0..iterations {
        fw_step(&mut state, blocks)?;
    }
    Ok(state)
}

/// Rounds a transport block to the maximum-weight permutation; exact on
/// permutation matrices.
pub fn project_to_permutation(d: &DoublyStochastic) -> Result<Vec<usize>> {
    Ok(hungarian_max(d.values())?.mapping)
}

fn push_term(lines: &mut Vec<String>, line: &mut String, coef: f64, name: &str) {
    let sign = if coef < 0.0 { '-' } else { '+' };
    let mag = coef.abs();
    let term = if mag == 1.0 {
        format!(" {sign} {name}")
    } else {
        format!(" {sign} {mag} {name}")
    };
    if line.len() + term.len() > 200 {
        lines.push(std::mem::take(line));
        line.push(' ');
    }
    line.push_str(&term);
}

/// Renders the reduced LP (without the structural-zero presolve) in the LP
/// text interchange format, for cross-checking with external solvers.
pub fn lp_text(blocks: &SeededBlocks) -> String {
    let m = blocks.m;
    let mut lines: Vec<String> = vec![format!("\\ reduced seeded-matching LP, block size {m}")];
    lines.push("Minimize".to_string());
    let mut line = String::from(" obj:");
    for i in 0..m {
        for j in 0..m {
            let s = blocks.scores[(i, j)];
            if s != 0.0 {
                push_term(&mut lines, &mut line, -4.0 * s, &format!("d_{i}_{j}"));
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            push_term(&mut lines, &mut line, 1.0, &format!("y_{i}_{j}"));
        }
    }
    lines.push(std::mem::take(&mut line));
    lines.push("Subject To".to_string());
    for i in 0..m {
        line = format!(" row_{i}:");
        for j in 0..m {
            push_term(&mut lines, &mut line, 1.0, &format!("d_{i}_{j}"));
        }
        line.push_str(" = 1");
        lines.push(std::mem::take(&mut line));
    }
    for j in 0..m {
        line = format!(" col_{j}:");
        for i in 0..m {
            push_term(&mut lines, &mut line, 1.0, &format!("d_{i}_{j}"));
        }
        line.push_str(" = 1");
        lines.push(std::mem::take(&mut line));
    }
    for i in 0..m {
        for j in 0..m {
            for (label, flip) in [("pos", 1.0), ("neg", -1.0)] {
                line = format!(" {label}_{i}_{j}:");
                for w in 0..m {
                    let coef = blocks.a_uu[(i, w)];
                    if coef != 0.0 {
                        push_term(&mut lines, &mut line, flip * coef, &format!("d_{w}_{j}"));
                    }
                }
                for w in 0..m {
                    let coef = blocks.bt_uu[(w, j)];
                    if coef != 0.0 {
                        push_term(&mut lines, &mut line, -flip * coef, &format!("d_{i}_{w}"));
                    }
                }
                push_term(&mut lines, &mut line, -1.0, &format!("y_{i}_{j}"));
                line.push_str(" <= 0");
                lines.push(std::mem::take(&mut line));
            }
        }
    }
    lines.push("Bounds".to_string());
    for i in 0..m {
        for j in 0..m {
            lines.push(format!(" d_{i}_{j} <= 1"));
        }
    }
    lines.push("End".to_string());
    lines.push(String::new());
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csbm::{sample_instance, CsbmParams};
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn csbm_blocks(n: usize, a: f64, b: f64, s: f64, seed: u64, delta: f64) -> (SeededBlocks, crate::csbm::Instance, SeededPair) {
        let params = CsbmParams { n, a, b, s, rng_seed: seed };
        let inst = sample_instance(&params, delta).unwrap();
        let pi_r: Vec<usize> = inst.revealed.iter().map(|&r| inst.pi_star[r]).collect();
        let pair = SeededPair::new(&inst.a, &inst.b, &inst.revealed, &pi_r).unwrap();
        let blocks = SeededBlocks::new(&inst.a, &inst.b, &pair);
        (blocks, inst, pair)
    }

    fn random_feasible(m: usize, rng: &mut ChaCha8Rng) -> DoublyStochastic {
        let mut values = Mat::zeros(m, m);
        let mut weights = [0.0f64; 4];
        let mut total = 0.0;
        for w in &mut weights {
            *w = rng.gen_range(0.1..1.0);
            total += *w;
        }
        for &w in &weights {
            let mut perm: Vec<usize> = (0..m).collect();
            use rand::seq::SliceRandom;
            perm.shuffle(rng);
            for (i, &j) in perm.iter().enumerate() {
                values[(i, j)] += w / total;
            }
        }
        DoublyStochastic::new(values).unwrap()
    }

    fn dense_embedding_l1(
        inst: &crate::csbm::Instance,
        pair: &SeededPair,
        d: &DoublyStochastic,
    ) -> f64 {
        let n = inst.n();
        let full = |g: &Graph| {
            Mat::from_fn(n, n, |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 })
        };
        let a_full = full(&inst.a);
        let b_full = full(&inst.b);
        let mut d_full = Mat::zeros(n, n);
        for (i, &r) in pair.seeds.iter().enumerate() {
            d_full[(r, pair.seed_images[i])] = 1.0;
        }
        for (i, &u) in pair.u_vertices.iter().enumerate() {
            for (j, &v) in pair.v_vertices.iter().enumerate() {
                d_full[(u, v)] = d.values()[(i, j)];
            }
        }
        mat_sub(&a_full.matmul(&d_full), &d_full.matmul(&b_full)).l1_norm()
    }

    #[test]
    fn reduced_objective_matches_dense_embedding_up_to_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for seed in 0..12 {
            let n = 12 + 2 * (seed as usize % 8);
            let (blocks, inst, pair) = csbm_blocks(n, 4.0, 1.5, 0.7, seed, 0.5);
            let base = DoublyStochastic::uniform(blocks.m);
            let c = dense_embedding_l1(&inst, &pair, &base)
                - reduced_objective(&blocks, &base).unwrap();
            for _ in 0..4 {
                let d = random_feasible(blocks.m, &mut rng);
                let dense = dense_embedding_l1(&inst, &pair, &d);
                let reduced = reduced_objective(&blocks, &d).unwrap();
                assert!(
                    (dense - (reduced + c)).abs() <= 1e-8,
                    "dense {dense} vs reduced {reduced} + {c}"
                );
            }
        }
    }

    #[test]
    fn equal_graphs_at_identity_leave_only_the_score_term() {
        let (_, inst, _) = csbm_blocks(20, 4.0, 1.0, 1.0, 3, 0.5);
        let revealed = inst.revealed.clone();
        let pi_r: Vec<usize> = revealed.clone();
        let pair = SeededPair::new(&inst.a, &inst.a, &revealed, &pi_r).unwrap();
        let blocks = SeededBlocks::new(&inst.a, &inst.a, &pair);
        let m = blocks.m;
        let identity = DoublyStochastic::from_permutation(&(0..m).collect::<Vec<_>>());
        let diag_sum: f64 = (0..m).map(|i| blocks.scores[(i, i)]).sum();
        let value = reduced_objective(&blocks, &identity).unwrap();
        assert_eq!(value, -4.0 * diag_sum);
    }

    #[test]
    fn edgeless_graphs_give_zero_objective_everywhere() {
        let a = Graph::empty(8);
        let pair = SeededPair::new(&a, &a, &[0, 1, 2], &[0, 1, 2]).unwrap();
        let blocks = SeededBlocks::new(&a, &a, &pair);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let d = random_feasible(blocks.m, &mut rng);
            assert_eq!(reduced_objective(&blocks, &d).unwrap(), 0.0);
            let r = residual_blocks(&blocks, d.values());
            assert_eq!(three_block_objective(&r), 0.0);
        }
    }

    #[test]
    fn hand_worked_three_vertex_instance() {
        // seed 0 maps to itself; first graph has edge (0,1), second (0,2),
        // so the only nonzero score is for pairing 1 with 2
        let a = Graph::from_edges(3, [(0, 1)]);
        let b = Graph::from_edges(3, [(0, 2)]);
        let pair = SeededPair::new(&a, &b, &[0], &[0]).unwrap();
        let blocks = SeededBlocks::new(&a, &b, &pair);
        assert_eq!(blocks.scores[(0, 1)], 1.0);
        let d = DoublyStochastic::new(Mat::from_fn(2, 2, |i, j| {
            [[0.3, 0.7], [0.7, 0.3]][i][j]
        }))
        .unwrap();
        let value = reduced_objective(&blocks, &d).unwrap();
        assert!((value - (-4.0 * 0.7)).abs() < 1e-12);
        let r = residual_blocks(&blocks, d.values());
        assert!((three_block_objective(&r) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn trace_objective_differs_from_reduced_by_a_constant() {
        let (blocks, _, _) = csbm_blocks(24, 4.0, 1.5, 0.8, 11, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let base = DoublyStochastic::uniform(blocks.m);
        let offset = three_block_objective(&residual_blocks(&blocks, base.values()))
            - reduced_objective(&blocks, &base).unwrap();
        for _ in 0..6 {
            let d = random_feasible(blocks.m, &mut rng);
            let f = three_block_objective(&residual_blocks(&blocks, d.values()));
            let reduced = reduced_objective(&blocks, &d).unwrap();
            assert!((f - reduced - offset).abs() <= 1e-9);
        }
    }

    #[test]
    fn lp_on_equal_graphs_attains_the_identity_optimum() {
        let (_, inst, _) = csbm_blocks(20, 5.0, 2.0, 1.0, 5, 0.5);
        let revealed = inst.revealed.clone();
        let pair = SeededPair::new(&inst.a, &inst.a, &revealed, &revealed).unwrap();
        let blocks = SeededBlocks::new(&inst.a, &inst.a, &pair);
        let sol = solve_reduced_lp(&blocks).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let m = blocks.m;
        let identity = DoublyStochastic::from_permutation(&(0..m).collect::<Vec<_>>());
        let at_identity = reduced_objective(&blocks, &identity).unwrap();
        assert!((sol.objective - at_identity).abs() <= 1e-6);
    }

    #[test]
    fn lp_lower_bounds_every_permutation() {
        for seed in 0..6 {
            let (blocks, _, _) = csbm_blocks(16, 4.0, 1.5, 0.6, 20 + seed, 0.7);
            assert!(blocks.m <= 6, "block came out {}", blocks.m);
            let sol = solve_reduced_lp(&blocks).unwrap();
            let perm_min = (0..blocks.m)
                .permutations(blocks.m)
                .map(|p| {
                    reduced_objective(&blocks, &DoublyStochastic::from_permutation(&p)).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(
                sol.objective <= perm_min + 1e-7,
                "LP {} above permutation minimum {perm_min}",
                sol.objective
            );
        }
    }

    fn solve_without_presolve(blocks: &SeededBlocks) -> f64 {
        let m = blocks.m;
        let mut prob = Problem::new(OptimizationDirection::Minimize);
        let d_vars: Vec<Variable> = (0..m * m)
            .map(|idx| prob.add_var(-4.0 * blocks.scores.data()[idx], (0.0, 1.0)))
            .collect();
        let y_vars: Vec<Variable> = (0..m * m)
            .map(|_| prob.add_var(1.0, (0.0, f64::INFINITY)))
            .collect();
        for i in 0..m {
            let row: Vec<(Variable, f64)> = (0..m).map(|j| (d_vars[i * m + j], 1.0)).collect();
            prob.add_constraint(&row, ComparisonOp::Eq, 1.0);
            let col: Vec<(Variable, f64)> = (0..m).map(|j| (d_vars[j * m + i], 1.0)).collect();
            prob.add_constraint(&col, ComparisonOp::Eq, 1.0);
        }
        for i in 0..m {
            for j in 0..m {
                let mut terms: Vec<(Variable, f64)> = Vec::new();
                for w in 0..m {
                    if blocks.a_uu[(i, w)] != 0.0 {
                        terms.push((d_vars[w * m + j], blocks.a_uu[(i, w)]));
                    }
                }
                for w in 0..m {
                    if blocks.bt_uu[(w, j)] != 0.0 {
                        terms.push((d_vars[i * m + w], -blocks.bt_uu[(w, j)]));
                    }
                }
                let mut pos = terms.clone();
                pos.push((y_vars[i * m + j], -1.0));
                prob.add_constraint(&pos, ComparisonOp::Le, 0.0);
                let mut neg: Vec<(Variable, f64)> =
                    terms.iter().map(|&(v, c)| (v, -c)).collect();
                neg.push((y_vars[i * m + j], -1.0));
                prob.add_constraint(&neg, ComparisonOp::Le, 0.0);
            }
        }
        prob.solve().unwrap().objective()
    }

    #[test]
    fn slack_presolve_preserves_the_optimum_on_sparse_instances() {
        // low density leaves many empty adjacency rows and columns, which is
        // exactly the regime the substitution presolve rewrites
        for seed in 0..8 {
            let (blocks, _, _) = csbm_blocks(18, 1.0, 0.4, 0.5, 40 + seed, 0.5);
            let sol = solve_reduced_lp(&blocks).unwrap();
            let reference = solve_without_presolve(&blocks);
            assert!(
                (sol.objective - reference).abs() <= 1e-6,
                "presolved {} vs direct {reference}",
                sol.objective
            );
        }
    }

    #[test]
    fn lp_single_vertex_block_is_forced() {
        let a = Graph::from_edges(3, [(0, 1), (1, 2)]);
        let pair = SeededPair::new(&a, &a, &[0, 1], &[0, 1]).unwrap();
        let blocks = SeededBlocks::new(&a, &a, &pair);
        assert_eq!(blocks.m, 1);
        let sol = solve_reduced_lp(&blocks).unwrap();
        assert_eq!(sol.d.values()[(0, 0)], 1.0);
        let identity = DoublyStochastic::from_permutation(&[0]);
        assert_eq!(sol.objective, reduced_objective(&blocks, &identity).unwrap());
    }

    #[test]
    fn empty_block_is_rejected_by_the_lp() {
        let a = Graph::from_edges(2, [(0, 1)]);
        let pair = SeededPair::new(&a, &a, &[0, 1], &[0, 1]).unwrap();
        let blocks = SeededBlocks::new(&a, &a, &pair);
        assert!(matches!(solve_reduced_lp(&blocks), Err(Error::EmptyUnrevealed)));
    }

    #[test]
    fn subgradient_matches_central_differences_away_from_kinks() {
        let (blocks, _, _) = csbm_blocks(20, 4.0, 2.0, 0.7, 9, 0.5);
        let m = blocks.m;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = random_feasible(m, &mut rng);
        let r = residual_blocks(&blocks, d.values());
        let grad = fw_gradient(&blocks, &r);
        let eps = 1e-6;
        let mut checked = 0;
        for i in 0..m {
            for j in 0..m {
                let mut near_kink = false;
                for w in 0..blocks.k {
                    if blocks.a_ru[(w, i)] != 0.0 && r.ru[(w, j)].abs() < 1e-4 {
                        near_kink = true;
                    }
                }
                for c in 0..m {
                    if blocks.bt_ur[(j, c)] != 0.0 && r.ur[(i, c)].abs() < 1e-4 {
                        near_kink = true;
                    }
                    if blocks.a_uu[(c, i)] != 0.0 && r.uu[(c, j)].abs() < 1e-4 {
                        near_kink = true;
                    }
                    if blocks.bt_uu[(j, c)] != 0.0 && r.uu[(i, c)].abs() < 1e-4 {
                        near_kink = true;
                    }
                }
                if near_kink {
                    continue;
                }
                let eval = |delta: f64| {
                    let mut values = d.values().clone();
                    values[(i, j)] += delta;
                    three_block_objective(&residual_blocks(&blocks, &values))
                };
                let slope = (eval(eps) - eval(-eps)) / (2.0 * eps);
                assert!(
                    (slope - grad[(i, j)]).abs() <= 1e-6 * grad[(i, j)].abs().max(1.0),
                    "slope {slope} vs gradient {} at ({i}, {j})",
                    grad[(i, j)]
                );
                checked += 1;
            }
        }
        assert!(checked > 10, "only {checked} coordinates were away from kinks");
    }

    #[test]
    fn iterates_stay_feasible_and_trace_grows() {
        let (blocks, _, _) = csbm_blocks(30, 4.0, 1.5, 0.8, 23, 0.5);
        let mut state = FwState::init(&blocks);
        for t in 1..=25 {
            fw_step(&mut state, &blocks).unwrap();
            state.d.validate().unwrap();
            assert_eq!(state.t, t);
            assert_eq!(state.objective_trace.len(), t + 1);
        }
        let f_last = *state.objective_trace.last().unwrap();
        let recomputed = three_block_objective(&residual_blocks(&blocks, state.d.values()));
        assert_eq!(f_last, recomputed);
    }

    #[test]
    fn zero_residuals_step_toward_the_identity() {
        let a = Graph::empty(6);
        let pair = SeededPair::new(&a, &a, &[0, 1], &[0, 1]).unwrap();
        let blocks = SeededBlocks::new(&a, &a, &pair);
        let mut state = FwState::init(&blocks);
        fw_step(&mut state, &blocks).unwrap();
        let m = blocks.m;
        for i in 0..m {
            for j in 0..m {
                let expected = 0.5 / m as f64 + if i == j { 0.5 } else { 0.0 };
                assert!((state.d.values()[(i, j)] - expected).abs() < 1e-15);
            }
        }
        fw_step(&mut state, &blocks).unwrap();
        let after_two = 2.0 / 3.0 * 0.5 / m as f64;
        assert!((state.d.values()[(0, 1)] - after_two).abs() < 1e-12);
    }

    #[test]
    fn singleton_block_never_moves() {
        let a = Graph::from_edges(3, [(0, 2)]);
        let pair = SeededPair::new(&a, &a, &[0, 1], &[0, 1]).unwrap();
        let blocks = SeededBlocks::new(&a, &a, &pair);
        let mut state = FwState::init(&blocks);
        for _ in 0..5 {
            fw_step(&mut state, &blocks).unwrap();
            assert_eq!(state.d.values()[(0, 0)], 1.0);
        }
    }

    #[test]
    fn projection_is_exact_on_permutation_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        use rand::seq::SliceRandom;
        for _ in 0..20 {
            let m = rng.gen_range(1..=8);
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut rng);
            let d = DoublyStochastic::from_permutation(&perm);
            assert_eq!(project_to_permutation(&d).unwrap(), perm);
        }
    }

    #[test]
    fn projection_tie_breaks_uniform_to_identity() {
        let d = DoublyStochastic::uniform(4);
        assert_eq!(project_to_permutation(&d).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn projection_picks_the_heavier_convex_component() {
        let p1entry = 0.6;
        let mut values = Mat::zeros(3, 3);
        for i in 0..3 {
            values[(i, i)] = p1entry;
            values[(i, (i + 1) % 3)] = 1.0 - p1entry;
        }
        let d = DoublyStochastic::new(values).unwrap();
        assert_eq!(project_to_permutation(&d).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn malformed_blocks_are_rejected() {
        assert!(DoublyStochastic::new(Mat::zeros(2, 3)).is_err());
        assert!(DoublyStochastic::new(Mat::filled(2, 2, 0.4)).is_err());
        let mut values = Mat::from_permutation(&[0, 1]);
        values[(0, 0)] = -1e-6;
        values[(0, 1)] = 1.0 + 1e-6;
        assert!(DoublyStochastic::new(values).is_err());
        let tiny = Mat::from_fn(2, 2, |i, j| {
            if i == j {
                -5e-13
            } else {
                1.0 + 5e-13
            }
        });
        let d = DoublyStochastic::new(tiny).unwrap();
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.get(0, 1), 1.0 + 5e-13);
    }

    #[test]
    fn lp_text_lists_every_variable_and_section() {
        let a = Graph::from_edges(4, [(0, 2), (1, 3), (2, 3)]);
        let pair = SeededPair::new(&a, &a, &[0, 1], &[0, 1]).unwrap();
        let blocks = SeededBlocks::new(&a, &a, &pair);
        let text = lp_text(&blocks);
        for section in ["Minimize", "Subject To", "Bounds", "End"] {
            assert!(text.contains(section), "missing section {section}");
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!(text.contains(&format!("d_{i}_{j} <= 1")));
                assert!(text.contains(&format!("pos_{i}_{j}:")));
                assert!(text.contains(&format!("neg_{i}_{j}:")));
            }
        }
        assert!(text.contains("row_0:"));
        assert!(text.contains("col_1:"));
    }
}
