//! Sub-stochastic operators on ordered state pairs.
//!
//! For a kernel `K` and a pair `(x1, x2)` with overlap `a = alpha(x1, x2)`,
//! the residual kernels are the normalized leftovers of the two rows after
//! removing the common part. The pair operator has entries
//!
//! ```text
//! V[(x1, x2), (y1, y2)] = r1(y1) r2(y2) / (1 - a),   r_i(y) = K[x_i, y] - min(K[x1, y], K[x2, y])
//! ```
//!
//! so each off-diagonal row sums to `1 - alpha(x1, x2)`; powers of `V` bound
//! the probability that the coupled pair has not merged. Degenerate pairs
//! follow the coupling construction: full overlap gives a zero row (merging is
//! certain), zero overlap gives the independent product kernel.

use ndarray::{Array1, Array2};

use crate::chain::{ChainSpec, Distribution, TransitionMatrix};
use crate::error::{Error, Result};
use crate::spectral::{self, DEFAULT_TOL};

/// Tolerance for the sanity check that both residual masses agree.
const RESIDUAL_MASS_TOL: f64 = 1e-12;

/// Index space of a pair operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairDomain {
    /// All ordered pairs, row-major: `(x1, x2) -> x1 * n + x2`. Diagonal rows
    /// are identically zero.
    FullSquare,
    /// Ordered pairs with `x1 != x2`, in the same order with diagonal indices
    /// removed.
    OffDiagonal,
}

/// Number of pair indices for a base space of `n` states.
pub fn domain_dim(n: usize, domain: PairDomain) -> usize {
    match domain {
        PairDomain::FullSquare => n * n,
        PairDomain::OffDiagonal => n * n - n,
    }
}

/// Pair index of `(x1, x2)`; `None` for diagonal pairs in the off-diagonal
/// domain. This mapping is part of the public contract.
pub fn pair_index(n: usize, domain: PairDomain, x1: usize, x2: usize) -> Option<usize> {
    match domain {
        PairDomain::FullSquare => Some(x1 * n + x2),
        PairDomain::OffDiagonal => {
            if x1 == x2 {
                None
            } else {
                Some(x1 * (n - 1) + x2 - usize::from(x2 > x1))
            }
        }
    }
}

/// Inverse of [`pair_index`].
pub fn pair_at(n: usize, domain: PairDomain, index: usize) -> (usize, usize) {
    match domain {
        PairDomain::FullSquare => (index / n, index % n),
        PairDomain::OffDiagonal => {
            let x1 = index / (n - 1);
            let rem = index % (n - 1);
            let x2 = rem + usize::from(rem >= x1);
            (x1, x2)
        }
    }
}

/// A nonnegative sub-stochastic matrix over ordered state pairs.
#[derive(Debug, Clone)]
pub struct PairOperator {
    n: usize,
    domain: PairDomain,
    m: usize,
    t: usize,
    entries: Array2<f64>,
}

impl PairOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> PairDomain {
        self.domain
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn pair_index(&self, x1: usize, x2: usize) -> Option<usize> {
        pair_index(self.n, self.domain, x1, x2)
    }

    pub fn pair_at(&self, index: usize) -> (usize, usize) {
        pair_at(self.n, self.domain, index)
    }

    /// Operator norm: the maximum row sum. For positive operators this equals
    /// `sup_x V 1(x)`, i.e. the largest `1 - alpha(x1, x2)`.
    pub fn norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for row in self.entries.rows() {
            worst = worst.max(row.sum());
        }
        worst
    }

    /// Matrix-vector action `V v`.
    pub fn apply(&self, v: &Array1<f64>) -> Array1<f64> {
        self.entries.dot(v)
    }

    /// `V^n` applied to the all-ones vector.
    pub fn ones_power(&self, n: usize) -> Array1<f64> {
        let mut v = Array1::from_elem(self.dim(), 1.0);
        for _ in 0..n {
            v = self.apply(&v);
        }
        v
    }

    /// Gelfand estimate of the spectral radius.
    pub fn spectral_radius(&self, tol: f64) -> Result<f64> {
        spectral::spectral_radius(&self.entries, tol)
    }
}

/// Residual split of two kernel rows: the overlap mass and, unless merging is
/// certain, the normalized leftover law of each component.
#[derive(Debug, Clone)]
pub struct ResidualKernels {
    /// Overlap mass `alpha(x1, x2)`.
    pub alpha: f64,
    /// `None` when the rows coincide (`alpha = 1`): merging happens surely
    /// and there is nothing left to draw from. With zero overlap the residuals
    /// degenerate to the original rows.
    pub phis: Option<(Distribution, Distribution)>,
}

struct RawResiduals {
    alpha: f64,
    r1: Array1<f64>,
    r2: Array1<f64>,
    mass1: f64,
    mass2: f64,
}

fn raw_residuals(kernel: &TransitionMatrix, x1: usize, x2: usize) -> Result<RawResiduals> {
    let row1 = kernel.row(x1);
    let row2 = kernel.row(x2);
    let mut alpha = 0.0;
    let mut r1 = Array1::zeros(kernel.n());
    let mut r2 = Array1::zeros(kernel.n());
    for y in 0..kernel.n() {
        let overlap = row1[y].min(row2[y]);
        alpha += overlap;
        r1[y] = row1[y] - overlap;
        r2[y] = row2[y] - overlap;
    }
    let mass1 = r1.sum();
    let mass2 = r2.sum();
    if (mass1 - mass2).abs() > RESIDUAL_MASS_TOL {
        return Err(Error::ResidualMassMismatch { mass1, mass2 });
    }
    Ok(RawResiduals {
        alpha,
        r1,
        r2,
        mass1,
        mass2,
    })
}

/// Residual kernels of a distinct pair of kernel rows.
pub fn residual_kernels(
    kernel: &TransitionMatrix,
    x1: usize,
    x2: usize,
) -> Result<ResidualKernels> {
    let n = kernel.n();
    for &x in &[x1, x2] {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
    }
    if x1 == x2 {
        return Err(Error::DiagonalPair { state: x1 });
    }
    let raw = raw_residuals(kernel, x1, x2)?;
    if raw.mass1 == 0.0 && raw.mass2 == 0.0 {
        return Ok(ResidualKernels {
            alpha: 1.0,
            phis: None,
        });
    }
    let phis = if raw.alpha == 0.0 {
        (
            Distribution::from_slice(&kernel.row(x1).to_vec())?,
            Distribution::from_slice(&kernel.row(x2).to_vec())?,
        )
    } else {
        let scale = 1.0 - raw.alpha;
        (
            Distribution::from_normalized(raw.r1.mapv(|v| v / scale)),
            Distribution::from_normalized(raw.r2.mapv(|v| v / scale)),
        )
    };
    Ok(ResidualKernels {
        alpha: raw.alpha,
        phis: Some(phis),
    })
}

/// Builds the pair operator of the `m`-step kernel at time `t`.
pub fn build_pair_operator(
    chain: &ChainSpec,
    t: usize,
    m: usize,
    domain: PairDomain,
) -> Result<PairOperator> {
    let kernel = chain.m_step_kernel(t, m)?;
    build_from_kernel(&kernel, t, m, domain)
}

pub(crate) fn build_from_kernel(
    kernel: &TransitionMatrix,
    t: usize,
    m: usize,
    domain: PairDomain,
) -> Result<PairOperator> {
    let n = kernel.n();
    let dim = domain_dim(n, domain);
    let mut entries = Array2::zeros((dim, dim));
    for x1 in 0..n {
        for x2 in 0..n {
            if x1 == x2 {
                continue;
            }
            let row_idx = pair_index(n, domain, x1, x2).unwrap();
            let raw = raw_residuals(kernel, x1, x2)?;
            if raw.mass1 == 0.0 && raw.mass2 == 0.0 {
                continue; // merging certain: zero row
            }
            // Diagonal targets carry no mass in either branch: residual
            // supports are disjoint, and zero overlap means the raw rows
            // already have disjoint supports.
            for y1 in 0..n {
                for y2 in 0..n {
                    if y1 == y2 {
                        continue;
                    }
                    let value = if raw.alpha == 0.0 {
                        kernel.rows()[[x1, y1]] * kernel.rows()[[x2, y2]]
                    } else {
                        raw.r1[y1] * raw.r2[y2] / (1.0 - raw.alpha)
                    };
                    if value != 0.0 {
                        let col_idx = pair_index(n, domain, y1, y2).unwrap();
                        entries[[row_idx, col_idx]] = value;
                    }
                }
            }
        }
    }
    Ok(PairOperator {
        n,
        domain,
        m,
        t,
        entries,
    })
}

/// Asymptotic rate bound `(r(V_hat^(m)) + eps)^floor(n/m)` for homogeneous
/// chains. Valid for `n` large enough; the report machinery records the
/// crossover against the exact diameter.
pub fn spectral_bound(chain: &ChainSpec, m: usize, n: usize, eps: f64) -> Result<f64> {
    if !chain.is_homogeneous() {
        return Err(Error::NotHomogeneous {
            op: "spectral_bound",
        });
    }
    if m == 0 {
        return Err(Error::ZeroSteps);
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidArgument("eps must be finite and >= 0"));
    }
    let op = build_pair_operator(chain, 0, m, PairDomain::OffDiagonal)?;
    let radius = op.spectral_radius(DEFAULT_TOL)?;
    Ok((radius + eps).powi((n / m) as i32))
}

/// Pointwise bound `((V^(m))^n 1)(x1, x2)` on the distance between the laws
/// started at `x1` and `x2` after `n` blocks of `m` steps, arranged as a
/// state-pair matrix. Sharper than the norm bound raised to `n`.
pub fn pointwise_bound(chain: &ChainSpec, m: usize, n_blocks: usize) -> Result<Array2<f64>> {
    if !chain.is_homogeneous() {
        return Err(Error::NotHomogeneous {
            op: "pointwise_bound",
        });
    }
    if m == 0 || n_blocks == 0 {
        return Err(Error::ZeroSteps);
    }
    let op = build_pair_operator(chain, 0, m, PairDomain::FullSquare)?;
    let v = op.ones_power(n_blocks);
    let n = chain.n_states();
    let mut out = Array2::zeros((n, n));
    for x1 in 0..n {
        for x2 in 0..n {
            out[[x1, x2]] = v[x1 * n + x2];
        }
    }
    Ok(out)
}

/// Non-homogeneous product bounds over `n_blocks` blocks of `m` steps.
#[derive(Debug, Clone, Copy)]
pub struct ProductBound {
    /// Product of per-block operator norms.
    pub norm_product: f64,
    /// Supremum over starting pairs of the time-ordered operator product
    /// applied to the all-ones vector. Never exceeds the norm product.
    pub operator_product_sup: f64,
}

/// Computes both product bounds. Homogeneous chains are accepted and reduce
/// to powers of the single block operator.
pub fn product_bound(chain: &ChainSpec, m: usize, n_blocks: usize) -> Result<ProductBound> {
    if m == 0 {
        return Err(Error::ZeroSteps);
    }
    let mut ops = Vec::with_capacity(n_blocks);
    for i in 0..n_blocks {
        ops.push(build_pair_operator(
            chain,
            i * m,
            m,
            PairDomain::OffDiagonal,
        )?);
    }
    let norm_product = ops.iter().map(PairOperator::norm).product();
    let dim = domain_dim(chain.n_states(), PairDomain::OffDiagonal);
    let mut v = Array1::from_elem(dim, 1.0);
    for op in ops.iter().rev() {
        v = op.apply(&v);
    }
    let operator_product_sup = v.iter().fold(0.0f64, |acc, &x| acc.max(x));
    Ok(ProductBound {
        norm_product,
        operator_product_sup,
    })
}
