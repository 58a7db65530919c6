//! Shared helpers for the integration suites: seeded random corpora and the
//! brute-force enumeration of the coupling quadruple.
//!
//! The enumeration is written directly from the transition-density formulas
//! of the construction and never touches the pair operators or the sampler,
//! so it can serve as an independent oracle for both.

use mixbound::chain::{ChainSpec, Distribution, Schedule, TransitionMatrix};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Seeded corpus of strictly positive (hence primitive) random chains with
/// 2..=max_states states.
pub fn seeded_primitive_chains(count: usize, max_states: usize, seed: u64) -> Vec<ChainSpec> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = 2 + i % (max_states - 1);
            ChainSpec::homogeneous(format!("rand{i}"), random_matrix(n, &mut rng))
        })
        .collect()
}

/// Seeded corpus of 2-block cyclic time-varying chains.
pub fn seeded_cyclic_pairs(count: usize, max_states: usize, seed: u64) -> Vec<ChainSpec> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = 2 + i % (max_states - 1);
            let a = random_matrix(n, &mut rng);
            let b = random_matrix(n, &mut rng);
            ChainSpec::time_varying(format!("cyc{i}"), vec![a, b], Schedule::Cyclic).unwrap()
        })
        .collect()
}

pub fn random_matrix(n: usize, rng: &mut ChaCha12Rng) -> TransitionMatrix {
    let mut arr = Array2::zeros((n, n));
    for i in 0..n {
        let mut row: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = row.iter().sum();
        for v in &mut row {
            *v /= total;
        }
        for (j, &v) in row.iter().enumerate() {
            arr[[i, j]] = v;
        }
    }
    TransitionMatrix::validate(arr).unwrap()
}

/// Exact law of the coupling quadruple, block by block.
pub struct EnumeratedLaw {
    /// `P(zeta = 1)` after `b` blocks, `b = 0..=blocks`.
    pub p_not_coupled: Vec<f64>,
    /// Exact law of the first projected component per block.
    pub marginal1: Vec<Vec<f64>>,
    /// Exact law of the second projected component per block.
    pub marginal2: Vec<Vec<f64>>,
}

/// Propagates the full distribution of `(eta1, eta2, xi, zeta)` through the
/// product of the four conditional densities of the construction.
pub fn enumerate_coupling(
    chain: &ChainSpec,
    mu1: &Distribution,
    mu2: &Distribution,
    m: usize,
    blocks: usize,
) -> EnumeratedLaw {
    let n = chain.n_states();
    let dim = n * n * n * 2;
    let at = |e1: usize, e2: usize, xi: usize, zeta: usize| ((e1 * n + e2) * n + xi) * 2 + zeta;

    // Initial law: all four coordinates independent given the split between
    // immediate merging (weight alpha0) and the residual branch.
    let mut w = vec![0.0f64; dim];
    {
        let p1 = mu1.probs();
        let p2 = mu2.probs();
        let overlap: Vec<f64> = (0..n).map(|y| p1[y].min(p2[y])).collect();
        let alpha0: f64 = overlap.iter().sum();
        let r1: Vec<f64> = (0..n).map(|y| p1[y] - overlap[y]).collect();
        let r2: Vec<f64> = (0..n).map(|y| p2[y] - overlap[y]).collect();
        let mass1: f64 = r1.iter().sum();
        let mass2: f64 = r2.iter().sum();
        if mass1 == 0.0 && mass2 == 0.0 {
            for x in 0..n {
                w[at(x, x, x, 0)] += p1[x];
            }
        } else if alpha0 == 0.0 {
            for e1 in 0..n {
                for e2 in 0..n {
                    w[at(e1, e2, e1, 1)] += p1[e1] * p2[e2];
                }
            }
        } else {
            for e1 in 0..n {
                for e2 in 0..n {
                    let pair = (r1[e1] / mass1) * (r2[e2] / mass2);
                    if pair == 0.0 {
                        continue;
                    }
                    for xi in 0..n {
                        let xi_p = overlap[xi] / alpha0;
                        if xi_p == 0.0 {
                            continue;
                        }
                        w[at(e1, e2, xi, 0)] += alpha0 * pair * xi_p;
                        w[at(e1, e2, xi, 1)] += (1.0 - alpha0) * pair * xi_p;
                    }
                }
            }
        }
    }

    let mut law = EnumeratedLaw {
        p_not_coupled: Vec::with_capacity(blocks + 1),
        marginal1: Vec::with_capacity(blocks + 1),
        marginal2: Vec::with_capacity(blocks + 1),
    };
    observe(&w, n, &mut law);

    for b in 0..blocks {
        let kernel = chain.m_step_kernel(b * m, m).unwrap();
        let mut next = vec![0.0f64; dim];
        for e1 in 0..n {
            for e2 in 0..n {
                for xi in 0..n {
                    for zeta in 0..2usize {
                        let mass = w[at(e1, e2, xi, zeta)];
                        if mass == 0.0 {
                            continue;
                        }
                        // Component laws of the four coordinates given the
                        // source state.
                        let row1 = kernel.row(e1);
                        let row2 = kernel.row(e2);
                        let overlap: Vec<f64> = (0..n).map(|y| row1[y].min(row2[y])).collect();
                        let alpha: f64 = overlap.iter().sum();
                        let r1: Vec<f64> = (0..n).map(|y| row1[y] - overlap[y]).collect();
                        let r2: Vec<f64> = (0..n).map(|y| row2[y] - overlap[y]).collect();
                        let mass1: f64 = r1.iter().sum();
                        let mass2: f64 = r2.iter().sum();
                        let full_overlap = mass1 == 0.0 && mass2 == 0.0;

                        let q1: Vec<f64>;
                        let q2: Vec<f64>;
                        if full_overlap {
                            q1 = row1.to_vec();
                            q2 = row1.to_vec();
                        } else if alpha == 0.0 {
                            q1 = row1.to_vec();
                            q2 = row2.to_vec();
                        } else {
                            q1 = r1.iter().map(|v| v / mass1).collect();
                            q2 = r2.iter().map(|v| v / mass2).collect();
                        }

                        // Merge-point law and the flag transition.
                        let q3: Vec<f64>;
                        let p_stay; // probability the flag stays raised
                        if zeta == 1 {
                            if full_overlap {
                                q3 = kernel.row(e1).to_vec();
                                p_stay = 0.0;
                            } else if alpha == 0.0 {
                                q3 = kernel.row(xi).to_vec();
                                p_stay = 1.0;
                            } else {
                                q3 = overlap.iter().map(|v| v / alpha).collect();
                                p_stay = 1.0 - alpha;
                            }
                        } else {
                            q3 = kernel.row(xi).to_vec();
                            p_stay = 0.0;
                        }

                        for (y1, &p_1) in q1.iter().enumerate() {
                            if p_1 == 0.0 {
                                continue;
                            }
                            for (y2, &p_2) in q2.iter().enumerate() {
                                if p_2 == 0.0 {
                                    continue;
                                }
                                for (y3, &p_3) in q3.iter().enumerate() {
                                    if p_3 == 0.0 {
                                        continue;
                                    }
                                    let base = mass * p_1 * p_2 * p_3;
                                    if p_stay > 0.0 {
                                        next[at(y1, y2, y3, 1)] += base * p_stay;
                                    }
                                    if p_stay < 1.0 {
                                        next[at(y1, y2, y3, 0)] += base * (1.0 - p_stay);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        w = next;
        observe(&w, n, &mut law);
    }
    law
}

fn observe(w: &[f64], n: usize, law: &mut EnumeratedLaw) {
    let at = |e1: usize, e2: usize, xi: usize, zeta: usize| ((e1 * n + e2) * n + xi) * 2 + zeta;
    let mut p_raised = 0.0;
    let mut m1 = vec![0.0f64; n];
    let mut m2 = vec![0.0f64; n];
    for e1 in 0..n {
        for e2 in 0..n {
            for xi in 0..n {
                let raised = w[at(e1, e2, xi, 1)];
                let merged = w[at(e1, e2, xi, 0)];
                p_raised += raised;
                m1[e1] += raised;
                m2[e2] += raised;
                m1[xi] += merged;
                m2[xi] += merged;
            }
        }
    }
    law.p_not_coupled.push(p_raised);
    law.marginal1.push(m1);
    law.marginal2.push(m2);
}
