//! Exact maximum-weight linear assignment and greedy assignment.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// A bijection between row and column indices of a square value matrix,
/// together with the sum of the selected values.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub mapping: Vec<usize>,
    pub total: f64,
}

impl Assignment {
    fn from_mapping(values: &Mat, mapping: Vec<usize>) -> Assignment {
        let total = mapping
            .iter()
            .enumerate()
            .map(|(i, &j)| values[(i, j)])
            .sum();
        Assignment { mapping, total }
    }
}

fn check_input(values: &Mat) -> Result<()> {
    if !values.is_square() {
        return Err(Error::SizeMismatch(format!(
            "assignment requires a square matrix, got {}x{}",
            values.rows(),
            values.cols()
        )));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParam(
            "assignment matrix contains a non-finite entry".to_string(),
        ));
    }
    Ok(())
}

/// Maximum-weight assignment, exact. Among optimal mappings the
/// lexicographically smallest one is returned: row 0 gets the smallest column
/// it can take in any optimum, then row 1, and so on.
pub fn hungarian_max(values: &Mat) -> Result<Assignment> {
    check_input(values)?;
    let m = values.rows();
    if m == 0 {
        return Ok(Assignment { mapping: Vec::new(), total: 0.0 });
    }
    // Minimize negated values, then resolve ties on the optimal face.
    let cost = Mat::from_fn(m, m, |i, j| -values[(i, j)]);
    let (row_to_col, pot_u, pot_v) = jv_min_assignment(&cost);

    let scale = values.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let tol = 1e-9 * scale;
    let mut tight: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| cost[(i, j)] - pot_u[i] - pot_v[j] <= tol)
                .collect()
        })
        .collect();
    // The solver's own assignment is tight by complementary slackness; make
    // sure rounding never drops it from the candidate lists.
    for (i, &j) in row_to_col.iter().enumerate() {
        if let Err(pos) = tight[i].binary_search(&j) {
            tight[i].insert(pos, j);
        }
    }
    let mapping = lex_min_perfect_matching(&tight, row_to_col.clone());
    Ok(Assignment::from_mapping(values, mapping))
}

/// Jonker–Volgenant style shortest augmenting path solver for min-cost
/// assignment. Returns the assignment and the final dual potentials, which
/// satisfy cost(i,j) >= u(i) + v(j) with equality on assigned pairs.
fn jv_min_assignment(cost: &Mat) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let m = cost.rows();
    // 1-indexed working arrays; index 0 is the virtual unassigned column.
    let mut u = vec![0.0f64; m + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut col_to_row = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        col_to_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = col_to_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[col_to_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_to_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_to_row[j0] = col_to_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; m];
    for j in 1..=m {
        row_to_col[col_to_row[j] - 1] = j - 1;
    }
    let pot_u = (1..=m).map(|i| u[i]).collect();
    let pot_v = (1..=m).map(|j| v[j]).collect();
    (row_to_col, pot_u, pot_v)
}

/// Lexicographically smallest perfect matching of the bipartite graph given
/// by per-row candidate columns, starting from a known perfect matching.
/// Every perfect matching of `tight` is an optimal assignment, so fixing the
/// smallest feasible column row by row yields the lex-min optimum.
fn lex_min_perfect_matching(tight: &[Vec<usize>], mut matching: Vec<usize>) -> Vec<usize> {
    let m = tight.len();
    let mut col_to_row: Vec<usize> = vec![usize::MAX; m];
    for (i, &j) in matching.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut fixed_col = vec![false; m];
    for i in 0..m {
        for &j in &tight[i] {
            if fixed_col[j] {
                continue;
            }
            if j >= matching[i] {
                break;
            }
            // Try to hand column `matching[i]` to the row currently on `j`
            // through an alternating path that avoids fixed columns and `j`.
            let displaced = col_to_row[j];
            let freed = matching[i];
            let mut visited = vec![false; m];
            visited[j] = true;
            if rematch(displaced, tight, &mut matching, &mut col_to_row, &fixed_col, &mut visited, freed) {
                matching[i] = j;
                col_to_row[j] = i;
                break;
            }
        }
        fixed_col[matching[i]] = true;
    }
    matching
}

/// Depth-first alternating search: give `row` a new column, recursively
/// displacing other rows, until the freed column `target` is reached.
fn rematch(
    row: usize,
    tight: &[Vec<usize>],
    matching: &mut Vec<usize>,
    col_to_row: &mut Vec<usize>,
    fixed_col: &[bool],
    visited: &mut Vec<bool>,
    target: usize,
) -> bool {
    for &j in &tight[row] {
        if visited[j] || fixed_col[j] {
            continue;
        }
        visited[j] = true;
        if j == target
            || rematch(
                col_to_row[j],
                tight,
                matching,
                col_to_row,
                fixed_col,
                visited,
                target,
            )
        {
            matching[row] = j;
            col_to_row[j] = row;
            return true;
        }
    }
    false
}

/// Greedy assignment: pairs are processed in order of value descending, then
/// row ascending, then column ascending; a pair is selected iff both its row
/// and column are still unmatched.
pub fn greedy_match(values: &Mat) -> Result<Assignment> {
    check_input(values)?;
    let m = values.rows();
    let mut order: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .collect();
    order.sort_unstable_by(|&(i1, j1), &(i2, j2)| {
        values[(i2, j2)]
            .total_cmp(&values[(i1, j1)])
            .then(i1.cmp(&i2))
            .then(j1.cmp(&j2))
    });
    let mut mapping = vec![usize::MAX; m];
    let mut col_taken = vec![false; m];
    let mut selected = 0usize;
    for (i, j) in order {
        if selected == m {
            break;
        }
        if mapping[i] == usize::MAX && !col_taken[j] {
            mapping[i] = j;
            col_taken[j] = true;
            selected += 1;
        }
    }
    Ok(Assignment::from_mapping(values, mapping))
}
