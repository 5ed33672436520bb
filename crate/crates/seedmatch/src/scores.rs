//! Seed-neighborhood overlap scores and the two-hop signature variant.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mat::Mat;

/// Integer score matrix over the unrevealed vertices: rows index the first
/// graph's unrevealed set, columns the second graph's, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreMatrix {
    pub u_vertices: Vec<usize>,
    pub v_vertices: Vec<usize>,
    values: Vec<i64>,
}

impl ScoreMatrix {
    pub fn m(&self) -> usize {
        self.u_vertices.len()
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.values[i * self.v_vertices.len() + j]
    }

    /// The values as a dense f64 matrix (entries are small integers, so the
    /// conversion is exact).
    pub fn to_mat(&self) -> Mat {
        Mat::from_fn(self.m(), self.m(), |i, j| self.get(i, j) as f64)
    }

    /// CSV rendering with vertex indices as header row and column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u");
        for &v in &self.v_vertices {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
        for (i, &u) in self.u_vertices.iter().enumerate() {
            out.push_str(&u.to_string());
            for j in 0..self.v_vertices.len() {
                out.push_str(&format!(",{}", self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

/// The seeded pair layout shared by every matcher: the sorted revealed set,
/// its images under the seed map, and the two unrevealed vertex lists.
#[derive(Debug, Clone)]
pub struct SeededPair {
    pub seeds: Vec<usize>,
    pub seed_images: Vec<usize>,
    pub u_vertices: Vec<usize>,
    pub v_vertices: Vec<usize>,
}

impl SeededPair {
    /// Validates the revealed set and seed map and lays out both unrevealed
    /// sides in ascending order.
    pub fn new(a: &Graph, b: &Graph, revealed: &[usize], pi_r: &[usize]) -> Result<SeededPair> {
        let n = a.n();
        if b.n() != n {
            return Err(Error::SizeMismatch(format!(
                "graphs have different sizes: {} vs {}",
                n,
                b.n()
            )));
        }
        if revealed.len() != pi_r.len() {
            return Err(Error::SizeMismatch(format!(
                "revealed set has {} vertices but seed map has {}",
                revealed.len(),
                pi_r.len()
            )));
        }
        let mut seeds: Vec<(usize, usize)> =
            revealed.iter().copied().zip(pi_r.iter().copied()).collect();
        seeds.sort_unstable();
        let mut in_revealed = vec![false; n];
        let mut image_taken = vec![false; n];
        for &(r, img) in &seeds {
            if r >= n || img >= n {
                return Err(Error::InvalidParam(format!(
                    "seed pair ({r}, {img}) out of range for n={n}"
                )));
            }
            if in_revealed[r] {
                return Err(Error::InvalidParam(format!("vertex {r} revealed twice")));
            }
            if image_taken[img] {
                return Err(Error::InvalidParam(format!(
                    "seed map is not injective: image {img} repeated"
                )));
            }
            in_revealed[r] = true;
            image_taken[img] = true;
        }
        let u_vertices: Vec<usize> = (0..n).filter(|&u| !in_revealed[u]).collect();
        let v_vertices: Vec<usize> = (0..n).filter(|&v| !image_taken[v]).collect();
        Ok(SeededPair {
            seeds: seeds.iter().map(|&(r, _)| r).collect(),
            seed_images: seeds.iter().map(|&(_, img)| img).collect(),
            u_vertices,
            v_vertices,
        })
    }

    pub fn seed_count(&self) -> usize {
        self.seeds.len()
    }

    pub fn m(&self) -> usize {
        self.u_vertices.len()
    }
}

/// One bit per seed position; bit k of `row(x)` is set iff x is adjacent to
/// the k-th seed (first graph) or to its image (second graph).
struct SeedBits {
    words: usize,
    bits: Vec<u64>,
}

impl SeedBits {
    fn new(graph: &Graph, targets: &[usize]) -> SeedBits {
        let n = graph.n();
        let words = targets.len().div_ceil(64);
        let mut seed_pos = vec![usize::MAX; n];
        for (k, &t) in targets.iter().enumerate() {
            seed_pos[t] = k;
        }
        let mut bits = vec![0u64; n * words];
        for x in 0..n {
            let row = &mut bits[x * words..(x + 1) * words];
            for &nb in graph.neighbors(x) {
                let k = seed_pos[nb as usize];
                if k != usize::MAX {
                    row[k / 64] |= 1 << (k % 64);
                }
            }
        }
        SeedBits { words, bits }
    }

    fn row(&self, x: usize) -> &[u64] {
        &self.bits[x * self.words..(x + 1) * self.words]
    }

    /// Signature of x extended to two-hop reachability: the union of x's row
    /// with the rows of all its neighbors.
    fn two_hop_row(&self, graph: &Graph, x: usize) -> Vec<u64> {
        let mut sig = self.row(x).to_vec();
        for &nb in graph.neighbors(x) {
            for (word, &other) in sig.iter_mut().zip(self.row(nb as usize)) {
                *word |= other;
            }
        }
        sig
    }
}

fn overlap(lhs: &[u64], rhs: &[u64]) -> i64 {
    lhs.iter()
        .zip(rhs)
        .map(|(&x, &y)| (x & y).count_ones() as i64)
        .sum()
}

/// Score(u, v) = number of seeds r with an edge u-r in the first graph and
/// an edge v-pi_R(r) in the second.
pub fn build_scores(a: &Graph, b: &Graph, revealed: &[usize], pi_r: &[usize]) -> Result<ScoreMatrix> {
    let pair = SeededPair::new(a, b, revealed, pi_r)?;
    Ok(build_scores_for(a, b, &pair))
}

pub fn build_scores_for(a: &Graph, b: &Graph, pair: &SeededPair) -> ScoreMatrix {
    let a_bits = SeedBits::new(a, &pair.seeds);
    let b_bits = SeedBits::new(b, &pair.seed_images);
    let m = pair.m();
    let mut values = Vec::with_capacity(m * m);
    for &u in &pair.u_vertices {
        for &v in &pair.v_vertices {
            values.push(overlap(a_bits.row(u), b_bits.row(v)));
        }
    }
    ScoreMatrix {
        u_vertices: pair.u_vertices.clone(),
        v_vertices: pair.v_vertices.clone(),
        values,
    }
}

/// Binary two-hop variant: the signature bit for seed r is set iff a path of
/// length at most two (through any vertex) connects the vertex to r, and
/// scores are signature inner products.
pub fn build_hop2_scores(
    a: &Graph,
    b: &Graph,
    revealed: &[usize],
    pi_r: &[usize],
) -> Result<ScoreMatrix> {
    let pair = SeededPair::new(a, b, revealed, pi_r)?;
    Ok(build_hop2_scores_for(a, b, &pair))
}

pub fn build_hop2_scores_for(a: &Graph, b: &Graph, pair: &SeededPair) -> ScoreMatrix {
    let a_bits = SeedBits::new(a, &pair.seeds);
    let b_bits = SeedBits::new(b, &pair.seed_images);
    let a_sigs: Vec<Vec<u64>> = pair
        .u_vertices
        .iter()
        .map(|&u| a_bits.two_hop_row(a, u))
        .collect();
    let b_sigs: Vec<Vec<u64>> = pair
        .v_vertices
        .iter()
        .map(|&v| b_bits.two_hop_row(b, v))
        .collect();
    let m = pair.m();
    let mut values = Vec::with_capacity(m * m);
    for a_sig in &a_sigs {
        for b_sig in &b_sigs {
            values.push(overlap(a_sig, b_sig));
        }
    }
    ScoreMatrix {
        u_vertices: pair.u_vertices.clone(),
        v_vertices: pair.v_vertices.clone(),
        values,
    }
}
