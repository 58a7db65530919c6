//! Ergodic coefficients in the Markov–Dobrushin sense and the contraction
//! bounds they induce.
//!
//! For an `m`-step kernel `K`, the pairwise coefficient
//! `alpha(x, x') = sum_y min(K[x, y], K[x', y])` is the overlap mass of the two
//! rows; the chain-level coefficient is the minimum over distinct pairs. One
//! minus the coefficient contracts total variation per `m`-step block.

use ndarray::Array2;

use crate::chain::{ChainSpec, TransitionMatrix};
use crate::error::{Error, Result};

/// Ergodic coefficients of one `m`-step kernel.
#[derive(Debug, Clone)]
pub struct MdCoefficients {
    /// Block size the kernel spans.
    pub m: usize,
    /// Start time of the block (0 for homogeneous chains).
    pub t: usize,
    /// Minimum pairwise overlap over distinct ordered pairs; 1 for a
    /// single-state chain.
    pub alpha: f64,
    /// `1 - alpha`.
    pub delta: f64,
    /// Pairwise overlaps `alpha(x, x')`, symmetric with unit diagonal.
    pub pairwise: Array2<f64>,
}

/// Overlap mass of rows `x1` and `x2` of a kernel:
/// `sum_y min(K[x1, y], K[x2, y])`. Symmetric, in `[0, 1]`, and 1 when
/// `x1 == x2`.
pub fn pairwise_alpha(kernel: &TransitionMatrix, x1: usize, x2: usize) -> Result<f64> {
    let n = kernel.n();
    for &x in &[x1, x2] {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
    }
    Ok(overlap(kernel, x1, x2))
}

pub(crate) fn overlap(kernel: &TransitionMatrix, x1: usize, x2: usize) -> f64 {
    kernel
        .row(x1)
        .iter()
        .zip(kernel.row(x2).iter())
        .map(|(a, b)| a.min(*b))
        .sum()
}

/// All pairwise coefficients of the `m`-step kernel at time `t`, together
/// with their minimum.
pub fn md_coefficients(chain: &ChainSpec, t: usize, m: usize) -> Result<MdCoefficients> {
    let kernel = chain.m_step_kernel(t, m)?;
    let n = kernel.n();
    let mut pairwise = Array2::from_elem((n, n), 1.0);
    let mut alpha = 1.0f64;
    for x1 in 0..n {
        for x2 in (x1 + 1)..n {
            let a = overlap(&kernel, x1, x2);
            pairwise[[x1, x2]] = a;
            pairwise[[x2, x1]] = a;
            alpha = alpha.min(a);
        }
    }
    Ok(MdCoefficients {
        m,
        t,
        alpha,
        delta: 1.0 - alpha,
        pairwise,
    })
}

/// The Markov–Dobrushin bound on the worst-case total variation at time `n`,
/// built from `m`-step blocks (set-supremum convention).
///
/// Homogeneous chains: `(1 - alpha^(m))^floor(n/m)`. Time-varying chains:
/// the product of `(1 - alpha_{tm}^(m))` over the complete blocks inside
/// `[0, n)`, times `(1 - alpha^(r))` for the trailing partial block of length
/// `r = n mod m` (an empty trailing block contributes the factor 1).
pub fn md_bound(chain: &ChainSpec, m: usize, n: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::ZeroSteps);
    }
    if n == 0 {
        return Ok(1.0);
    }
    if chain.is_homogeneous() {
        let coeff = md_coefficients(chain, 0, m)?;
        return Ok(coeff.delta.powi((n / m) as i32));
    }
    let blocks = n / m;
    let residual = n - blocks * m;
    let mut bound = 1.0;
    for b in 0..blocks {
        bound *= md_coefficients(chain, b * m, m)?.delta;
    }
    if residual > 0 {
        bound *= md_coefficients(chain, blocks * m, residual)?.delta;
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Schedule;

    fn p2_chain() -> ChainSpec {
        ChainSpec::homogeneous(
            "p2",
            TransitionMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap(),
        )
    }

    fn c3_chain() -> ChainSpec {
        ChainSpec::homogeneous(
            "c3",
            TransitionMatrix::from_rows(&[
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.5, 0.5, 0.0],
            ])
            .unwrap(),
        )
    }

    #[test]
    fn pairwise_alpha_examples() {
        let k = p2_chain().m_step_kernel(0, 1).unwrap();
        assert_eq!(pairwise_alpha(&k, 0, 0).unwrap(), 1.0);
        assert!((pairwise_alpha(&k, 0, 1).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(
            pairwise_alpha(&k, 0, 1).unwrap(),
            pairwise_alpha(&k, 1, 0).unwrap()
        );

        let c = c3_chain().m_step_kernel(0, 1).unwrap();
        assert_eq!(pairwise_alpha(&c, 0, 1).unwrap(), 0.0);

        assert!(matches!(
            pairwise_alpha(&k, 0, 5).unwrap_err(),
            Error::IndexOutOfRange { index: 5, n: 2 }
        ));
    }

    #[test]
    fn md_coefficients_of_p2() {
        let chain = p2_chain();
        let one = md_coefficients(&chain, 0, 1).unwrap();
        assert!((one.alpha - 0.3).abs() < 1e-15);
        assert!((one.delta - 0.7).abs() < 1e-15);
        let two = md_coefficients(&chain, 0, 2).unwrap();
        assert!((two.alpha - 0.51).abs() < 1e-15);
    }

    #[test]
    fn md_coefficients_of_c3_show_the_degenerate_m() {
        let chain = c3_chain();
        assert_eq!(md_coefficients(&chain, 0, 1).unwrap().alpha, 0.0);
        assert_eq!(md_coefficients(&chain, 0, 2).unwrap().alpha, 0.0);
        let three = md_coefficients(&chain, 0, 3).unwrap();
        assert!((three.alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_state_couples_instantly() {
        let chain = ChainSpec::homogeneous(
            "one",
            TransitionMatrix::from_rows(&[vec![1.0]]).unwrap(),
        );
        let coeff = md_coefficients(&chain, 0, 1).unwrap();
        assert_eq!(coeff.alpha, 1.0);
        assert_eq!(coeff.delta, 0.0);
    }

    #[test]
    fn md_bound_examples() {
        let chain = p2_chain();
        assert_eq!(md_bound(&chain, 1, 0).unwrap(), 1.0);
        assert!((md_bound(&chain, 1, 4).unwrap() - 0.2401).abs() < 1e-15);
        assert!((md_bound(&chain, 2, 4).unwrap() - 0.2401).abs() < 1e-15);
    }

    #[test]
    fn md_bound_dominates_oracle_on_a_cyclic_pair() {
        let a = TransitionMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let b = TransitionMatrix::from_rows(&[vec![0.6, 0.4], vec![0.3, 0.7]]).unwrap();
        let chain = ChainSpec::time_varying("ab", vec![a, b], Schedule::Cyclic).unwrap();
        for m in 1..=3 {
            for n in 0..=12 {
                let bound = md_bound(&chain, m, n).unwrap();
                let exact = chain.tv_diameter(n).unwrap();
                assert!(
                    bound >= exact - 1e-10,
                    "m={m} n={n} bound={bound} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn delta_identity_with_row_tv() {
        // 1 - alpha(x, x') is exactly the TV distance between the two rows.
        let chain = p2_chain();
        for m in 1..=4 {
            let kernel = chain.m_step_kernel(0, m).unwrap();
            let coeff = md_coefficients(&chain, 0, m).unwrap();
            let tv = crate::chain::max_pairwise_row_tv(kernel.rows());
            assert!((coeff.delta - tv).abs() < 1e-12, "m={m}");
        }
    }

    mod properties {
        use super::*;
        use ndarray::Array2;
        use proptest::prelude::*;

        fn stochastic(n: usize) -> impl Strategy<Value = TransitionMatrix> {
            proptest::collection::vec(0.001f64..1.0, n * n).prop_map(move |raw| {
                let mut arr = Array2::zeros((n, n));
                for i in 0..n {
                    let total: f64 = raw[i * n..(i + 1) * n].iter().sum();
                    for j in 0..n {
                        arr[[i, j]] = raw[i * n + j] / total;
                    }
                }
                TransitionMatrix::validate(arr).unwrap()
            })
        }

        proptest! {
            #[test]
            fn multi_step_delta_never_worse(m in stochastic(4), steps in 1usize..6) {
                let chain = ChainSpec::homogeneous("prop", m);
                let delta1 = md_coefficients(&chain, 0, 1).unwrap().delta;
                let deltam = md_coefficients(&chain, 0, steps).unwrap().delta;
                prop_assert!(deltam <= delta1.powi(steps as i32) + 1e-12);
                // delta^(km) <= (delta^(m))^k is the same statement one level up.
                let delta2m = md_coefficients(&chain, 0, 2 * steps).unwrap().delta;
                prop_assert!(delta2m <= deltam.powi(2) + 1e-12);
            }

            #[test]
            fn block_delta_submultiplicative(m in stochastic(4), m1 in 1usize..=6, m2 in 1usize..=6) {
                let chain = ChainSpec::homogeneous("prop", m);
                let a = md_coefficients(&chain, 0, m1).unwrap().delta;
                let b = md_coefficients(&chain, 0, m2).unwrap().delta;
                let ab = md_coefficients(&chain, 0, m1 + m2).unwrap().delta;
                prop_assert!(ab <= a * b + 1e-12);
            }

            #[test]
            fn pairwise_matches_symmetrized_form(m in stochastic(5)) {
                // Evaluating the overlap through densities with respect to the
                // summed reference measure (or its half) gives the same value.
                let kernel = ChainSpec::homogeneous("prop", m).m_step_kernel(0, 1).unwrap();
                for x1 in 0..5 {
                    for x2 in (x1 + 1)..5 {
                        let direct = pairwise_alpha(&kernel, x1, x2).unwrap();
                        for scale in [1.0, 0.5] {
                            let mut symmetrized = 0.0;
                            for y in 0..5 {
                                let lambda = scale * (kernel.rows()[[x1, y]] + kernel.rows()[[x2, y]]);
                                if lambda > 0.0 {
                                    let f = kernel.rows()[[x1, y]] / lambda;
                                    let g = kernel.rows()[[x2, y]] / lambda;
                                    symmetrized += f.min(g) * lambda;
                                }
                            }
                            prop_assert!((direct - symmetrized).abs() < 1e-12);
                        }
                    }
                }
            }

            #[test]
            fn delta_equals_kernel_tv_diameter(m in stochastic(5), steps in 1usize..5) {
                let chain = ChainSpec::homogeneous("prop", m);
                let coeff = md_coefficients(&chain, 0, steps).unwrap();
                let kernel = chain.m_step_kernel(0, steps).unwrap();
                let tv = crate::chain::max_pairwise_row_tv(kernel.rows());
                prop_assert!((coeff.delta - tv).abs() < 1e-12);
            }

            #[test]
            fn md_bound_improves_along_divisors(m in stochastic(4), steps in 1usize..5, j in 1usize..4) {
                let chain = ChainSpec::homogeneous("prop", m);
                let delta1 = md_coefficients(&chain, 0, 1).unwrap().delta;
                let coeff = md_coefficients(&chain, 0, steps).unwrap();
                if coeff.alpha >= 1.0 - delta1.powi(steps as i32) {
                    let n = steps * j;
                    let refined = md_bound(&chain, steps, n).unwrap();
                    let plain = md_bound(&chain, 1, n).unwrap();
                    prop_assert!(refined <= plain + 1e-12);
                }
            }
        }
    }
}
