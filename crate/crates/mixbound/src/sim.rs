//! Monte Carlo realization of the block coupling construction.
//!
//! Two copies of the chain are driven through a quadruple process
//! `(eta1, eta2, xi, zeta)`: while `zeta` is set the components move through
//! the residual kernels of their current pair and each block merges them with
//! probability equal to the pairwise overlap; once merged, the common point
//! `xi` moves by the plain kernel and `zeta` stays cleared forever. Each
//! component, viewed on its own, is distributed exactly like the original
//! chain, which the tests verify both statistically and by exact enumeration.

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, Distribution, TransitionMatrix};
use crate::error::{Error, Result};
use crate::operators::{build_pair_operator, PairDomain};

/// The trial-splitting rule recorded in every [`CouplingStats`].
pub const RNG_STREAM_RULE: &str = "chacha12/seed_from_u64(seed)/set_stream(trial)";

/// One state of the coupling quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplingState {
    pub eta1: usize,
    pub eta2: usize,
    pub xi: usize,
    /// `true` while the pair has not yet merged; once cleared it stays
    /// cleared (absorption).
    pub zeta: bool,
}

impl CouplingState {
    /// The pair of chain positions this state represents:
    /// `(eta1, eta2)` before merging, `(xi, xi)` after.
    pub fn project(&self) -> (usize, usize) {
        if self.zeta {
            (self.eta1, self.eta2)
        } else {
            (self.xi, self.xi)
        }
    }
}

/// Per-block statistics of a batch of coupled trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    pub chain: String,
    pub trials: u64,
    /// Number of block steps taken; statistics index `0..=blocks`.
    pub blocks: usize,
    /// Block size in chain steps.
    pub m: usize,
    pub seed: u64,
    /// The exact stream-splitting rule, for reproducibility.
    pub rng_stream: String,
    /// Empirical probability that the pair has not merged after `b` blocks.
    pub p_not_coupled: Vec<f64>,
    /// Per-block occupation counts of the first component.
    pub marginal_hist1: Vec<Vec<u64>>,
    /// Per-block occupation counts of the second component.
    pub marginal_hist2: Vec<Vec<u64>>,
}

fn sample_weighted(rng: &mut impl Rng, weights: ArrayView1<'_, f64>, total: f64) -> usize {
    let mut u = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last_positive
}

fn sample_row(kernel: &TransitionMatrix, x: usize, rng: &mut impl Rng) -> usize {
    sample_weighted(rng, kernel.row(x), 1.0)
}

/// Draws the initial quadruple from two initial laws: merge immediately with
/// probability equal to their overlap, drawing the common point from the
/// normalized overlap; otherwise draw the components independently from the
/// normalized residuals.
pub fn initial_coupling(
    mu1: &Distribution,
    mu2: &Distribution,
    rng: &mut impl Rng,
) -> Result<CouplingState> {
    if mu1.len() != mu2.len() {
        return Err(Error::LengthMismatch {
            left: mu1.len(),
            right: mu2.len(),
        });
    }
    let n = mu1.len();
    let mut overlap = Array1::zeros(n);
    let mut r1 = Array1::zeros(n);
    let mut r2 = Array1::zeros(n);
    let mut alpha = 0.0;
    for y in 0..n {
        let o = mu1.probs()[y].min(mu2.probs()[y]);
        overlap[y] = o;
        r1[y] = mu1.probs()[y] - o;
        r2[y] = mu2.probs()[y] - o;
        alpha += o;
    }
    let mass1 = r1.sum();
    let mass2 = r2.sum();

    if mass1 == 0.0 && mass2 == 0.0 {
        // Identical laws: merged from the start.
        let xi = sample_weighted(rng, mu1.probs().view(), 1.0);
        return Ok(CouplingState {
            eta1: xi,
            eta2: xi,
            xi,
            zeta: false,
        });
    }
    if alpha == 0.0 {
        let eta1 = sample_weighted(rng, mu1.probs().view(), 1.0);
        let eta2 = sample_weighted(rng, mu2.probs().view(), 1.0);
        return Ok(CouplingState {
            eta1,
            eta2,
            xi: eta1,
            zeta: true,
        });
    }
    if rng.random::<f64>() < alpha {
        let xi = sample_weighted(rng, overlap.view(), alpha);
        Ok(CouplingState {
            eta1: xi,
            eta2: xi,
            xi,
            zeta: false,
        })
    } else {
        let eta1 = sample_weighted(rng, r1.view(), mass1);
        let eta2 = sample_weighted(rng, r2.view(), mass2);
        Ok(CouplingState {
            eta1,
            eta2,
            xi: eta1,
            zeta: true,
        })
    }
}

/// Advances the quadruple by one `m`-step block starting at time `t`.
pub fn coupled_block_step(
    chain: &ChainSpec,
    t: usize,
    m: usize,
    state: &CouplingState,
    rng: &mut impl Rng,
) -> Result<CouplingState> {
    let kernel = chain.m_step_kernel(t, m)?;
    Ok(step_with_kernel(&kernel, state, rng))
}

/// The components move through the residual split of their current pair;
/// equal or fully overlapping rows fall back to independent draws from the
/// common row.
fn evolve_etas(
    kernel: &TransitionMatrix,
    eta1: usize,
    eta2: usize,
    rng: &mut impl Rng,
) -> (usize, usize) {
    if eta1 == eta2 {
        return (sample_row(kernel, eta1, rng), sample_row(kernel, eta1, rng));
    }
    let n = kernel.n();
    let row1 = kernel.row(eta1);
    let row2 = kernel.row(eta2);
    let mut r1 = Array1::zeros(n);
    let mut r2 = Array1::zeros(n);
    let mut mass1 = 0.0;
    let mut mass2 = 0.0;
    for y in 0..n {
        let o = row1[y].min(row2[y]);
        r1[y] = row1[y] - o;
        r2[y] = row2[y] - o;
        mass1 += r1[y];
        mass2 += r2[y];
    }
    if mass1 == 0.0 && mass2 == 0.0 {
        return (sample_row(kernel, eta1, rng), sample_row(kernel, eta1, rng));
    }
    if mass1 == 0.0 || mass2 == 0.0 {
        // Cannot happen for stochastic rows; degrade to independent moves.
        return (sample_row(kernel, eta1, rng), sample_row(kernel, eta2, rng));
    }
    (
        sample_weighted(rng, r1.view(), mass1),
        sample_weighted(rng, r2.view(), mass2),
    )
}

pub(crate) fn step_with_kernel(
    kernel: &TransitionMatrix,
    state: &CouplingState,
    rng: &mut impl Rng,
) -> CouplingState {
    if !state.zeta {
        // Already merged: the common point moves by the kernel and the flag
        // stays cleared. The eta components keep evolving through the
        // residual construction; they no longer influence the projection.
        let (eta1, eta2) = evolve_etas(kernel, state.eta1, state.eta2, rng);
        let xi = sample_row(kernel, state.xi, rng);
        return CouplingState {
            eta1,
            eta2,
            xi,
            zeta: false,
        };
    }

    let n = kernel.n();
    let row1 = kernel.row(state.eta1);
    let row2 = kernel.row(state.eta2);
    let mut overlap = Array1::zeros(n);
    let mut r1 = Array1::zeros(n);
    let mut r2 = Array1::zeros(n);
    let mut alpha = 0.0;
    for y in 0..n {
        let o = row1[y].min(row2[y]);
        overlap[y] = o;
        r1[y] = row1[y] - o;
        r2[y] = row2[y] - o;
        alpha += o;
    }
    let mass1 = r1.sum();
    let mass2 = r2.sum();

    if mass1 == 0.0 && mass2 == 0.0 {
        // Full overlap: merging is certain; both components are redrawn from
        // the common row and need not coincide.
        let eta1 = sample_row(kernel, state.eta1, rng);
        let eta2 = sample_row(kernel, state.eta1, rng);
        let xi = sample_row(kernel, state.eta1, rng);
        return CouplingState {
            eta1,
            eta2,
            xi,
            zeta: false,
        };
    }
    if alpha == 0.0 {
        // Disjoint rows: merging at this block is impossible and the
        // residuals are the rows themselves; the merge point moves from its
        // previous position.
        let eta1 = sample_weighted(rng, r1.view(), mass1);
        let eta2 = sample_weighted(rng, r2.view(), mass2);
        let xi = sample_row(kernel, state.xi, rng);
        return CouplingState {
            eta1,
            eta2,
            xi,
            zeta: true,
        };
    }

    let merged = rng.random::<f64>() < alpha;
    let eta1 = sample_weighted(rng, r1.view(), mass1);
    let eta2 = sample_weighted(rng, r2.view(), mass2);
    let xi = sample_weighted(rng, overlap.view(), alpha);
    CouplingState {
        eta1,
        eta2,
        xi,
        zeta: !merged,
    }
}

/// Runs independent coupled trajectories and collects per-block statistics.
///
/// Trial `k` draws from an independent ChaCha stream derived from
/// `(seed, k)`, so results are reproducible regardless of execution order.
pub fn simulate(
    chain: &ChainSpec,
    mu1: &Distribution,
    mu2: &Distribution,
    m: usize,
    n_blocks: usize,
    trials: u64,
    seed: u64,
) -> Result<CouplingStats> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1"));
    }
    let n = chain.n_states();
    if mu1.len() != n || mu2.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if mu1.len() != n { mu1.len() } else { mu2.len() },
        });
    }
    let mut kernels = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        kernels.push(chain.m_step_kernel(b * m, m)?);
    }

    let mut not_coupled = vec![0u64; n_blocks + 1];
    let mut hist1 = vec![vec![0u64; n]; n_blocks + 1];
    let mut hist2 = vec![vec![0u64; n]; n_blocks + 1];

    for trial in 0..trials {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut state = initial_coupling(mu1, mu2, &mut rng)?;
        record(&state, 0, &mut not_coupled, &mut hist1, &mut hist2);
        for (b, kernel) in kernels.iter().enumerate() {
            state = step_with_kernel(kernel, &state, &mut rng);
            record(&state, b + 1, &mut not_coupled, &mut hist1, &mut hist2);
        }
    }

    Ok(CouplingStats {
        chain: chain.name().to_string(),
        trials,
        blocks: n_blocks,
        m,
        seed,
        rng_stream: RNG_STREAM_RULE.to_string(),
        p_not_coupled: not_coupled
            .iter()
            .map(|&c| c as f64 / trials as f64)
            .collect(),
        marginal_hist1: hist1,
        marginal_hist2: hist2,
    })
}

fn record(
    state: &CouplingState,
    block: usize,
    not_coupled: &mut [u64],
    hist1: &mut [Vec<u64>],
    hist2: &mut [Vec<u64>],
) {
    if state.zeta {
        not_coupled[block] += 1;
    }
    let (x1, x2) = state.project();
    hist1[block][x1] += 1;
    hist2[block][x2] += 1;
}

/// Exact non-merging probabilities `P(zeta = 1 after b blocks)` for
/// `b = 0..=n_blocks`, computed by propagating the survival-weighted pair law
/// through the pair operators.
pub fn not_coupled_exact(
    chain: &ChainSpec,
    mu1: &Distribution,
    mu2: &Distribution,
    m: usize,
    n_blocks: usize,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::ZeroSteps);
    }
    let n = chain.n_states();
    if mu1.len() != n || mu2.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if mu1.len() != n { mu1.len() } else { mu2.len() },
        });
    }

    let mut overlap_mass = 0.0;
    let mut r1 = Array1::zeros(n);
    let mut r2 = Array1::zeros(n);
    for y in 0..n {
        let o = mu1.probs()[y].min(mu2.probs()[y]);
        r1[y] = mu1.probs()[y] - o;
        r2[y] = mu2.probs()[y] - o;
        overlap_mass += o;
    }
    let mass1 = r1.sum();
    let mass2 = r2.sum();

    // Survival-weighted law of the unmerged pair, over ordered pairs.
    let mut w = Array1::zeros(n * n);
    if mass1 != 0.0 || mass2 != 0.0 {
        if overlap_mass == 0.0 {
            for x1 in 0..n {
                for x2 in 0..n {
                    w[x1 * n + x2] = mu1.probs()[x1] * mu2.probs()[x2];
                }
            }
        } else {
            let scale = 1.0 - overlap_mass;
            for x1 in 0..n {
                for x2 in 0..n {
                    w[x1 * n + x2] = r1[x1] * r2[x2] / scale;
                }
            }
        }
    }

    let mut out = Vec::with_capacity(n_blocks + 1);
    out.push(w.sum());
    for b in 0..n_blocks {
        let op = build_pair_operator(chain, b * m, m, PairDomain::FullSquare)?;
        w = w.dot(op.entries());
        out.push(w.sum());
    }
    Ok(out)
}
