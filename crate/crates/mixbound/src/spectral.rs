//! Spectral radius estimation by the Gelfand formula, and the
//! second-eigenvalue reference rate for primitive chains.
//!
//! The radius is estimated from `||A^(2^k)||^(1/2^k)` with repeated squaring.
//! The iterate is renormalized each step and the scale is carried in log
//! space, so the routine survives spectral radii far from 1 and handles
//! complex second eigenvalues without ever computing an eigenvector. Each
//! estimate is an upper bound on the true radius, and the sequence is
//! non-increasing up to roundoff.

use ndarray::Array2;

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};

/// Default stopping tolerance for [`spectral_radius`].
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_SQUARINGS: usize = 60;

/// The norm sequence can plateau for a few doublings before the spectral
/// term takes over (cycle structures produce `||A^(2k)|| = ||A||^(2k)`
/// exactly at first), so a single sub-tolerance step is not a safe stop.
const MIN_SQUARINGS: usize = 8;
const STABLE_STEPS: usize = 2;

/// Maximum absolute row sum (the operator norm induced by the sup norm).
pub fn inf_norm(a: &Array2<f64>) -> f64 {
    let mut worst = 0.0f64;
    for row in a.rows() {
        let sum: f64 = row.iter().map(|v| v.abs()).sum();
        worst = worst.max(sum);
    }
    worst
}

/// Spectral radius of a square matrix via Gelfand repeated squaring.
///
/// Stops when consecutive estimates differ by less than `tol` or after 60
/// squarings. The returned value never exceeds `inf_norm(a)` and never falls
/// below the true radius by more than `tol`.
pub fn spectral_radius(a: &Array2<f64>, tol: f64) -> Result<f64> {
    gelfand(a, tol).map(|(radius, _)| radius)
}

/// Same as [`spectral_radius`] but also reports the last estimate delta.
pub(crate) fn gelfand(a: &Array2<f64>, tol: f64) -> Result<(f64, f64)> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "spectral radius input",
        });
    }
    let norm = inf_norm(a);
    if norm == 0.0 {
        return Ok((0.0, 0.0));
    }

    // mat = A^(2^k) / exp(log_scale), kept at unit norm.
    let mut mat = a.mapv(|v| v / norm);
    let mut log_scale = norm.ln();
    let mut estimate = norm;
    let mut delta = f64::INFINITY;
    let mut stable = 0usize;

    for k in 1..=MAX_SQUARINGS {
        mat = mat.dot(&mat);
        let s = inf_norm(&mat);
        if s == 0.0 {
            // A^(2^k) vanished: nilpotent, radius exactly zero.
            return Ok((0.0, 0.0));
        }
        if !s.is_finite() {
            return Err(Error::NonFinite {
                context: "spectral radius iterate",
            });
        }
        mat.mapv_inplace(|v| v / s);
        log_scale = 2.0 * log_scale + s.ln();
        let next = (log_scale / 2f64.powi(k as i32)).exp();
        delta = (estimate - next).abs();
        estimate = next;
        stable = if delta < tol { stable + 1 } else { 0 };
        if k >= MIN_SQUARINGS && stable >= STABLE_STEPS {
            break;
        }
    }
    Ok((estimate, delta))
}

/// How a [`SpectralGap`] value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMethod {
    /// Gelfand estimate on the Perron-deflated matrix.
    DeflatedGelfand,
    /// Characteristic polynomial, available for up to three states; the
    /// Gelfand estimate is cross-checked against it.
    AnalyticSmall,
}

/// The modulus of the second-largest eigenvalue of a primitive transition
/// matrix; the true asymptotic convergence rate in total variation.
#[derive(Debug, Clone, Copy)]
pub struct SpectralGap {
    pub lambda2_modulus: f64,
    pub method: SpectralMethod,
    /// Achieved accuracy: last Gelfand delta, or the deviation from the
    /// analytic value when one exists.
    pub residual: f64,
}

/// Second eigenvalue modulus of a primitive matrix, computed by removing the
/// Perron eigenvalue through the rank-one deflation `A = P - 1 pi^T` and
/// estimating the spectral radius of the remainder.
pub fn lambda2_modulus(p: &TransitionMatrix, tol: f64) -> Result<SpectralGap> {
    let pi = p.stationary_distribution()?;
    let n = p.n();
    let mut deflated = p.rows().clone();
    for x in 0..n {
        for y in 0..n {
            deflated[[x, y]] -= pi.probs()[y];
        }
    }
    let (radius, delta) = gelfand(&deflated, tol)?;

    if n <= 3 {
        let analytic = analytic_second_modulus(p.rows());
        let residual = (radius - analytic).abs();
        if residual > 1e-9 {
            return Err(Error::ToleranceNotMet {
                context: "second eigenvalue cross-check",
                residual,
                tol: 1e-9,
            });
        }
        return Ok(SpectralGap {
            lambda2_modulus: analytic,
            method: SpectralMethod::AnalyticSmall,
            residual,
        });
    }
    Ok(SpectralGap {
        lambda2_modulus: radius,
        method: SpectralMethod::DeflatedGelfand,
        residual: delta,
    })
}

/// Second eigenvalue modulus from the characteristic polynomial, after
/// factoring out the known Perron root 1. Only for `n <= 3`.
fn analytic_second_modulus(p: &Array2<f64>) -> f64 {
    match p.nrows() {
        1 => 0.0,
        2 => (p[[0, 0]] + p[[1, 1]] - 1.0).abs(),
        3 => {
            let trace = p[[0, 0]] + p[[1, 1]] + p[[2, 2]];
            let minors = minor(p, 0, 1) + minor(p, 0, 2) + minor(p, 1, 2);
            // lambda^3 - trace lambda^2 + minors lambda - det
            //   = (lambda - 1)(lambda^2 + b lambda + c)
            let b = 1.0 - trace;
            let c = minors + b;
            let disc = b * b - 4.0 * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                (((-b + sq) / 2.0).abs()).max(((-b - sq) / 2.0).abs())
            } else {
                c.sqrt()
            }
        }
        _ => unreachable!("analytic route is limited to n <= 3"),
    }
}

fn minor(p: &Array2<f64>, i: usize, j: usize) -> f64 {
    p[[i, i]] * p[[j, j]] - p[[i, j]] * p[[j, i]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn p2() -> TransitionMatrix {
        TransitionMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    fn c3() -> TransitionMatrix {
        TransitionMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn radius_of_diagonal() {
        let a = arr2(&[[0.7, 0.0], [0.0, 0.7]]);
        assert!((spectral_radius(&a, DEFAULT_TOL).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn radius_of_nilpotent_is_zero() {
        let a = arr2(&[[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(spectral_radius(&a, DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn radius_of_general_two_by_two() {
        // Eigenvalues 0.9 and 0.5.
        let a = arr2(&[[0.6, 0.3], [0.1, 0.8]]);
        assert!((spectral_radius(&a, DEFAULT_TOL).unwrap() - 0.9).abs() < 1e-9);
    }

    #[test]
    fn radius_handles_complex_pairs() {
        // Rotation: eigenvalues +-i, radius 1.
        let a = arr2(&[[0.0, -1.0], [1.0, 0.0]]);
        assert!((spectral_radius(&a, DEFAULT_TOL).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn radius_never_exceeds_norm() {
        let a = arr2(&[[0.2, 0.7, 0.0], [0.4, 0.1, 0.3], [0.0, 0.5, 0.2]]);
        let r = spectral_radius(&a, DEFAULT_TOL).unwrap();
        assert!(r <= inf_norm(&a));
    }

    #[test]
    fn lambda2_of_p2_is_the_trace_gap() {
        let gap = lambda2_modulus(&p2(), DEFAULT_TOL).unwrap();
        assert!((gap.lambda2_modulus - 0.7).abs() < 1e-12);
        assert_eq!(gap.method, SpectralMethod::AnalyticSmall);
    }

    #[test]
    fn lambda2_of_c3_is_a_complex_pair_modulus() {
        let gap = lambda2_modulus(&c3(), DEFAULT_TOL).unwrap();
        assert!((gap.lambda2_modulus - 0.5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn lambda2_of_rank_one_matrix_is_zero() {
        let k = TransitionMatrix::from_rows(&[
            vec![0.2, 0.5, 0.3],
            vec![0.2, 0.5, 0.3],
            vec![0.2, 0.5, 0.3],
        ])
        .unwrap();
        let gap = lambda2_modulus(&k, DEFAULT_TOL).unwrap();
        assert!(gap.lambda2_modulus.abs() < 1e-12);
    }

    #[test]
    fn lambda2_requires_primitivity() {
        let flip = TransitionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            lambda2_modulus(&flip, DEFAULT_TOL).unwrap_err(),
            Error::NotPrimitive { .. }
        ));
    }

    #[test]
    fn lambda2_below_one_for_positive_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        for _ in 0..20 {
            let n = rng.random_range(2..=6);
            let mut arr = Array2::zeros((n, n));
            for i in 0..n {
                let row: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0f64)).collect();
                let total: f64 = row.iter().sum();
                for (j, v) in row.iter().enumerate() {
                    arr[[i, j]] = v / total;
                }
            }
            let k = TransitionMatrix::validate(arr).unwrap();
            let gap = lambda2_modulus(&k, DEFAULT_TOL).unwrap();
            assert!((0.0..1.0).contains(&gap.lambda2_modulus), "n={n}");
        }
    }

    #[test]
    fn deflation_annihilates_perron_directions() {
        for k in [p2(), c3()] {
            let pi = k.stationary_distribution().unwrap();
            let n = k.n();
            let mut deflated = k.rows().clone();
            for x in 0..n {
                for y in 0..n {
                    deflated[[x, y]] -= pi.probs()[y];
                }
            }
            // Row sums: A 1 = 0.
            for x in 0..n {
                let s: f64 = deflated.row(x).sum();
                assert!(s.abs() < 1e-12);
            }
            // Left action: pi^T A = 0.
            let left = pi.probs().dot(&deflated);
            for v in left.iter() {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gelfand_probes_respect_power_norms() {
        let a = arr2(&[[0.2, 0.7, 0.0], [0.4, 0.1, 0.3], [0.0, 0.5, 0.2]]);
        let r = spectral_radius(&a, DEFAULT_TOL).unwrap();
        let mut power = a.clone();
        for _ in 0..5 {
            power = power.dot(&power);
        }
        // r^(2^5) must not exceed ||A^(2^5)|| beyond roundoff.
        assert!(r.powi(32) <= inf_norm(&power) * (1.0 + 1e-8));
    }

    #[test]
    fn estimates_decrease_monotonically() {
        // Reproduce the estimate sequence and check monotonicity.
        let a = arr2(&[[0.2, 0.7, 0.0], [0.4, 0.1, 0.3], [0.0, 0.5, 0.2]]);
        let norm = inf_norm(&a);
        let mut mat = a.mapv(|v| v / norm);
        let mut log_scale = norm.ln();
        let mut prev = norm;
        for k in 1..=30 {
            mat = mat.dot(&mat);
            let s = inf_norm(&mat);
            mat.mapv_inplace(|v| v / s);
            log_scale = 2.0 * log_scale + s.ln();
            let est = (log_scale / 2f64.powi(k)).exp();
            assert!(est <= prev * (1.0 + 1e-12), "k={k} est={est} prev={prev}");
            prev = est;
        }
    }
}
