//! Correlated stochastic block model sampling, seed-set construction, and
//! threshold arithmetic.

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Model parameters: a balanced two-community graph on `n` vertices with
/// intra-community edge probability `a ln(n)/n` and inter-community
/// probability `b ln(n)/n`, each edge retained independently with
/// probability `s` in the two observed copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsbmParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub s: f64,
    /// Overridden per trial by multi-trial drivers; defaults to 0 in configs.
    #[serde(default)]
    pub rng_seed: u64,
}

impl CsbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 2 != 0 {
            return Err(Error::InvalidParam(format!(
                "n must be positive and even, got {}",
                self.n
            )));
        }
        if !(self.a > 0.0) || !(self.b > 0.0) {
            return Err(Error::InvalidParam(format!(
                "a and b must be positive, got a={}, b={}",
                self.a, self.b
            )));
        }
        if !(0.0..=1.0).contains(&self.s) {
            return Err(Error::InvalidParam(format!(
                "s must lie in [0,1], got {}",
                self.s
            )));
        }
        Ok(())
    }

    /// Intra- and inter-community edge probabilities, clamped to 1.
    pub fn edge_probs(&self) -> (f64, f64) {
        let scale = (self.n as f64).ln() / self.n as f64;
        let clamp = |label: &str, p: f64| {
            if p > 1.0 {
                warn!("{label} edge probability {p:.4} exceeds 1, clamping");
                1.0
            } else {
                p
            }
        };
        (
            clamp("intra-community", self.a * scale),
            clamp("inter-community", self.b * scale),
        )
    }

    /// Average density parameter (a + b) / 2.
    pub fn lambda(&self) -> f64 {
        (self.a + self.b) / 2.0
    }
}

/// A sampled model instance: the two observed graphs, the hidden community
/// labels and vertex correspondence, and the revealed seed set.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub a: Graph,
    pub b: Graph,
    /// Community label of each vertex, +1 or -1.
    pub sigma_star: Vec<i8>,
    /// True correspondence: vertex u of `a` is vertex `pi_star[u]` of `b`.
    pub pi_star: Vec<usize>,
    /// Revealed vertices, sorted ascending.
    pub revealed: Vec<usize>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    /// Unrevealed vertices of the first graph, sorted ascending.
    pub fn unrevealed(&self) -> Vec<usize> {
        let mut is_revealed = vec![false; self.n()];
        for &r in &self.revealed {
            is_revealed[r] = true;
        }
        (0..self.n()).filter(|&u| !is_revealed[u]).collect()
    }

    /// The seed map restricted to the revealed set, as (r, pi_star(r)) pairs.
    pub fn seed_pairs(&self) -> Vec<(usize, usize)> {
        self.revealed.iter().map(|&r| (r, self.pi_star[r])).collect()
    }
}

/// RNG streams drawn from the instance seed, in a fixed documented order.
enum Stream {
    CommunityShuffle = 0,
    PiStar = 1,
    ParentEdges = 2,
    RetentionA = 3,
    RetentionB = 4,
    SeedSet = 5,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Derives the instance seed for one trial of a multi-trial run from the
/// run-level seed, so trials are independent yet reproducible.
pub fn mix_seed(base: u64, trial: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = base ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Samples an instance. All randomness derives from `params.rng_seed`; the
/// same seed always produces the identical instance. The seed count is
/// `floor(seed_fraction * n)` rounded down to an even number, taken half
/// from each community.
pub fn sample_instance(params: &CsbmParams, seed_fraction: f64) -> Result<Instance> {
    params.validate()?;
    if !(0.0..1.0).contains(&seed_fraction) {
        return Err(Error::InvalidParam(format!(
            "seed_fraction must lie in [0,1), got {seed_fraction}"
        )));
    }
    let n = params.n;
    let (p_intra, p_inter) = params.edge_probs();

    let mut sigma_star: Vec<i8> = vec![1; n / 2];
    sigma_star.extend(std::iter::repeat(-1).take(n / 2));
    sigma_star.shuffle(&mut stream_rng(params.rng_seed, Stream::CommunityShuffle));

    let mut pi_star: Vec<usize> = (0..n).collect();
    pi_star.shuffle(&mut stream_rng(params.rng_seed, Stream::PiStar));

    // Parent graph and the two retention masks share the row-major pair
    // order; each stream consumes one draw per vertex pair.
    let mut parent = stream_rng(params.rng_seed, Stream::ParentEdges);
    let mut keep_a = stream_rng(params.rng_seed, Stream::RetentionA);
    let mut keep_b = stream_rng(params.rng_seed, Stream::RetentionB);
    let mut edges_a = Vec::new();
    let mut edges_b = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if sigma_star[u] == sigma_star[v] { p_intra } else { p_inter };
            let g = parent.gen::<f64>() < p;
            let x = keep_a.gen::<f64>() < params.s;
            let y = keep_b.gen::<f64>() < params.s;
            if g && x {
                edges_a.push((u, v));
            }
            if g && y {
                edges_b.push((pi_star[u], pi_star[v]));
            }
        }
    }
    let a = Graph::from_edges(n, edges_a);
    let b = Graph::from_edges(n, edges_b);

    let seed_count = ((seed_fraction * n as f64).floor() as usize) & !1;
    let mut community_one: Vec<usize> = (0..n).filter(|&u| sigma_star[u] == 1).collect();
    let mut community_two: Vec<usize> = (0..n).filter(|&u| sigma_star[u] == -1).collect();
    let mut seed_rng = stream_rng(params.rng_seed, Stream::SeedSet);
    community_one.shuffle(&mut seed_rng);
    community_two.shuffle(&mut seed_rng);
    let mut revealed: Vec<usize> = community_one[..seed_count / 2]
        .iter()
        .chain(community_two[..seed_count / 2].iter())
        .copied()
        .collect();
    revealed.sort_unstable();

    Ok(Instance { a, b, sigma_star, pi_star, revealed })
}

/// The seed-sparsity exponent: alpha = 1 - ln(u_size)/ln(n), so that
/// `u_size = n^(1-alpha)` unrevealed vertices remain.
pub fn alpha_from_unrevealed(n: usize, u_size: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("n must be at least 2, got {n}")));
    }
    if u_size == 0 || u_size > n {
        return Err(Error::InvalidParam(format!(
            "u_size must lie in 1..=n, got {u_size}"
        )));
    }
    Ok(1.0 - (u_size as f64).ln() / (n as f64).ln())
}

/// Which side of the recovery threshold a parameter point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Achievable,
    Impossible,
    Critical,
}

/// Compares lambda * s^2 against 1 - alpha: above is achievable, below is
/// impossible, equality (within 1e-12) is critical.
pub fn threshold_predicate(a: f64, b: f64, s: f64, alpha: f64) -> Regime {
    let lhs = (a + b) / 2.0 * s * s;
    let rhs = 1.0 - alpha;
    if (lhs - rhs).abs() <= 1e-12 {
        Regime::Critical
    } else if lhs > rhs {
        Regime::Achievable
    } else {
        Regime::Impossible
    }
}
