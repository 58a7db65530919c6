//! Finite-state chains and their kernel algebra.
//!
//! Distances are reported in the set-supremum convention
//! `d(p, q) = (1/2) * sum_i |p_i - q_i|`, which lives in `[0, 1]`. Every bound
//! in this crate is expressed in the same convention, so values are directly
//! comparable; the full variation norm is `2 d`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg;

/// Row sums of a validated transition matrix must match 1 this tightly.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Residual tolerance enforced on stationary distributions.
pub const STATIONARY_TOL: f64 = 1e-12;

/// A row-stochastic matrix over a finite state space.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Array2<f64>,
}

impl TransitionMatrix {
    /// Validates a raw square array as a transition matrix. Does not
    /// renormalize: rows must already sum to 1 within [`ROW_SUM_TOL`].
    pub fn validate(raw: Array2<f64>) -> Result<Self> {
        let (r, c) = raw.dim();
        if r != c {
            return Err(Error::NonSquare { rows: r, cols: c });
        }
        if r == 0 {
            return Err(Error::Empty);
        }
        for i in 0..r {
            let mut sum = 0.0;
            for j in 0..c {
                let v = raw[[i, j]];
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: "transition matrix entry",
                    });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowSumViolation { row: i, sum });
            }
        }
        Ok(Self { rows: raw })
    }

    /// Validates a matrix given as nested rows.
    pub fn from_rows(raw: &[Vec<f64>]) -> Result<Self> {
        let n = raw.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut arr = Array2::zeros((n, n));
        for (i, row) in raw.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NonSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                arr[[i, j]] = v;
            }
        }
        Self::validate(arr)
    }

    /// Wraps a matrix that is stochastic by construction (products of
    /// validated kernels). Row sums may drift by accumulated roundoff, which
    /// stays far below 1e-10 per factor at desk scale.
    pub(crate) fn from_stochastic_product(rows: Array2<f64>) -> Self {
        debug_assert!(rows.nrows() == rows.ncols() && rows.nrows() > 0);
        Self { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn row(&self, x: usize) -> ArrayView1<'_, f64> {
        self.rows.row(x)
    }

    /// Kernel composition: apply `self` first, then `next`.
    pub fn compose(&self, next: &Self) -> Self {
        Self::from_stochastic_product(self.rows.dot(&next.rows))
    }

    /// Checks primitivity (irreducible and aperiodic): some power up to the
    /// Wielandt exponent `n^2 - 2n + 2` must be entrywise positive. Positivity
    /// of powers is monotone for stochastic matrices, so squaring the boolean
    /// sign pattern suffices.
    pub fn check_primitive(&self) -> Result<()> {
        let n = self.n();
        let wielandt = (n - 1) * (n - 1) + 1;
        let mut pattern: Vec<bool> = self.rows.iter().map(|&v| v > 0.0).collect();
        let mut exponent = 1usize;
        while exponent < wielandt && !all_true(&pattern) {
            pattern = bool_square(&pattern, n);
            exponent *= 2;
        }
        if all_true(&pattern) {
            return Ok(());
        }
        let zero = pattern.iter().position(|&b| !b).unwrap();
        Err(Error::NotPrimitive {
            from: zero / n,
            to: zero % n,
            exponent: wielandt,
        })
    }

    /// Stationary distribution of a primitive matrix, by solving the balance
    /// equations `(P^T - I) pi = 0` with the normalization `sum pi = 1`.
    pub fn stationary_distribution(&self) -> Result<Distribution> {
        self.check_primitive()?;
        let n = self.n();
        // Replace the last balance equation by the normalization row; the
        // dropped equation is linearly dependent on the rest.
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = self.rows[[j, i]] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..n {
            a[[n - 1, j]] = 1.0;
        }
        let mut b = Array1::zeros(n);
        b[n - 1] = 1.0;
        let mut pi = linalg::solve(&a, &b).ok_or(Error::ToleranceNotMet {
            context: "stationary distribution solve",
            residual: f64::INFINITY,
            tol: STATIONARY_TOL,
        })?;

        // Roundoff can leave entries a few ulps below zero.
        for v in pi.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total: f64 = pi.sum();
        pi.mapv_inplace(|v| v / total);

        let residual = (&pi.dot(&self.rows) - &pi)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if residual > STATIONARY_TOL {
            return Err(Error::ToleranceNotMet {
                context: "stationary distribution residual",
                residual,
                tol: STATIONARY_TOL,
            });
        }
        Distribution::validate(pi)
    }
}

fn all_true(pattern: &[bool]) -> bool {
    pattern.iter().all(|&b| b)
}

fn bool_square(pattern: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if pattern[i * n + k] {
                for j in 0..n {
                    if pattern[k * n + j] {
                        out[i * n + j] = true;
                    }
                }
            }
        }
    }
    out
}

/// A probability vector over the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Array1<f64>,
}

impl Distribution {
    pub fn validate(probs: Array1<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty);
        }
        for (i, &v) in probs.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "probability entry",
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeProbability { index: i, value: v });
            }
        }
        let sum = probs.sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn from_slice(probs: &[f64]) -> Result<Self> {
        Self::validate(Array1::from(probs.to_vec()))
    }

    /// The point mass at state `x`.
    pub fn point_mass(n: usize, x: usize) -> Result<Self> {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
        let mut probs = Array1::zeros(n);
        probs[x] = 1.0;
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            probs: Array1::from_elem(n, 1.0 / n as f64),
        })
    }

    pub(crate) fn from_normalized(probs: Array1<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &Array1<f64> {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// How a time-varying kernel list covers the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// `P_t = matrices[t mod len]`, defined for all `t`.
    Cyclic,
    /// `P_t = matrices[t]`, defined only for `t < len`.
    Finite,
}

#[derive(Debug, Clone)]
pub enum ChainVariant {
    Homogeneous(TransitionMatrix),
    TimeVarying {
        matrices: Vec<TransitionMatrix>,
        schedule: Schedule,
    },
}

/// A homogeneous chain or a scheduled sequence of transition matrices.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    name: String,
    variant: ChainVariant,
}

impl ChainSpec {
    pub fn homogeneous(name: impl Into<String>, matrix: TransitionMatrix) -> Self {
        Self {
            name: name.into(),
            variant: ChainVariant::Homogeneous(matrix),
        }
    }

    pub fn time_varying(
        name: impl Into<String>,
        matrices: Vec<TransitionMatrix>,
        schedule: Schedule,
    ) -> Result<Self> {
        let first = matrices.first().ok_or(Error::Empty)?;
        let n = first.n();
        for m in &matrices {
            if m.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.n(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            variant: ChainVariant::TimeVarying {
                matrices,
                schedule,
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variant(&self) -> &ChainVariant {
        &self.variant
    }

    pub fn n_states(&self) -> usize {
        match &self.variant {
            ChainVariant::Homogeneous(m) => m.n(),
            ChainVariant::TimeVarying { matrices, .. } => matrices[0].n(),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.variant, ChainVariant::Homogeneous(_))
    }

    /// The one-step kernel in force at time `t`.
    pub fn kernel_at(&self, t: usize) -> Result<&TransitionMatrix> {
        match &self.variant {
            ChainVariant::Homogeneous(m) => Ok(m),
            ChainVariant::TimeVarying { matrices, schedule } => match schedule {
                Schedule::Cyclic => Ok(&matrices[t % matrices.len()]),
                Schedule::Finite => matrices.get(t).ok_or(Error::HorizonExceeded {
                    t,
                    horizon: matrices.len(),
                }),
            },
        }
    }

    /// Ordered product of `len` one-step kernels starting at time `t`;
    /// `len = 0` yields the identity.
    pub(crate) fn kernel_product(&self, t: usize, len: usize) -> Result<Array2<f64>> {
        let n = self.n_states();
        let mut acc = Array2::eye(n);
        for s in t..t + len {
            acc = acc.dot(self.kernel_at(s)?.rows());
        }
        Ok(acc)
    }

    /// The `m`-step kernel starting at time `t`: `P_t P_{t+1} ... P_{t+m-1}`.
    /// For homogeneous chains this is `P^m` and `t` is irrelevant.
    pub fn m_step_kernel(&self, t: usize, m: usize) -> Result<TransitionMatrix> {
        if m == 0 {
            return Err(Error::ZeroSteps);
        }
        Ok(TransitionMatrix::from_stochastic_product(
            self.kernel_product(t, m)?,
        ))
    }

    /// Law at time `n` started from `initial` at time 0.
    pub fn marginal(&self, initial: &Distribution, n: usize) -> Result<Distribution> {
        if initial.len() != self.n_states() {
            return Err(Error::DimensionMismatch {
                expected: self.n_states(),
                found: initial.len(),
            });
        }
        let mut v = initial.probs().clone();
        for t in 0..n {
            v = v.dot(self.kernel_at(t)?.rows());
        }
        Ok(Distribution::from_normalized(v))
    }

    /// Exact worst-case distance at time `n`:
    /// `max_{x, x'} d(mu^x_n, mu^{x'}_n)`. This is the oracle every bound in
    /// the crate is compared against.
    pub fn tv_diameter(&self, n: usize) -> Result<f64> {
        let kernel = self.kernel_product(0, n)?;
        Ok(max_pairwise_row_tv(&kernel))
    }
}

/// Largest total variation distance between any two rows of a matrix.
pub(crate) fn max_pairwise_row_tv(kernel: &Array2<f64>) -> f64 {
    let n = kernel.nrows();
    let mut worst = 0.0f64;
    for x1 in 0..n {
        for x2 in (x1 + 1)..n {
            worst = worst.max(tv_rows(kernel.row(x1), kernel.row(x2)));
        }
    }
    worst
}

pub(crate) fn tv_rows(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let sum: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum();
    (0.5 * sum).clamp(0.0, 1.0)
}

/// Total variation distance in the set-supremum convention,
/// `d(p, q) = (1/2) sum |p_i - q_i|`, in `[0, 1]`.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(tv_rows(p.probs().view(), q.probs().view()))
}
