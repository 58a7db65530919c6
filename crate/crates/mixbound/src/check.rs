//! Invariant suite over the bundled corpus, behind the `check` CLI verb.

use crate::chain::{ChainSpec, Distribution};
use crate::coeff::{md_bound, md_coefficients};
use crate::corpus;
use crate::error::Result;
use crate::operators::{build_pair_operator, product_bound, PairDomain};
use crate::sim::{not_coupled_exact, simulate};
use crate::spectral::{lambda2_modulus, DEFAULT_TOL};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn push(results: &mut Vec<CheckResult>, name: String, pass: bool, detail: String) {
    results.push(CheckResult { name, pass, detail });
}

/// Runs every invariant over the bundled chains; returns one line per check.
pub fn run_checks() -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();

    for chain in corpus::bundled() {
        norm_and_radius_checks(&chain, &mut results)?;
        dominance_checks(&chain, &mut results)?;
        coupling_checks(&chain, &mut results)?;
    }
    reference_rate_checks(&mut results)?;
    witness_check(&mut results)?;
    product_checks(&mut results)?;

    Ok(results)
}

fn norm_and_radius_checks(chain: &ChainSpec, results: &mut Vec<CheckResult>) -> Result<()> {
    for m in 1..=3 {
        let coeff = md_coefficients(chain, 0, m)?;
        let hat = build_pair_operator(chain, 0, m, PairDomain::OffDiagonal)?;
        let full = build_pair_operator(chain, 0, m, PairDomain::FullSquare)?;

        let norm_gap = (hat.norm() - coeff.delta).abs();
        push(
            results,
            format!("{}: ||V_hat^({m})|| = 1 - alpha^({m})", chain.name()),
            norm_gap < 1e-12,
            format!("gap {norm_gap:.3e}"),
        );
        let domain_gap = (hat.norm() - full.norm()).abs();
        push(
            results,
            format!("{}: ||V_hat^({m})|| = ||V^({m})||", chain.name()),
            domain_gap < 1e-12,
            format!("gap {domain_gap:.3e}"),
        );
        let r_hat = hat.spectral_radius(DEFAULT_TOL)?;
        let r_full = full.spectral_radius(DEFAULT_TOL)?;
        push(
            results,
            format!("{}: r(V_hat^({m})) = r(V^({m}))", chain.name()),
            (r_hat - r_full).abs() < 1e-12,
            format!("gap {:.3e}", (r_hat - r_full).abs()),
        );
        push(
            results,
            format!("{}: r(V^({m})) <= ||V^({m})||", chain.name()),
            r_hat <= hat.norm() + 1e-9,
            format!("r {r_hat:.6} norm {:.6}", hat.norm()),
        );

        // Row sums and diagonal targets.
        let mut worst_row_gap = 0.0f64;
        let mut diag_mass = 0.0f64;
        let n = chain.n_states();
        for idx in 0..hat.dim() {
            let (x1, x2) = hat.pair_at(idx);
            let expect = 1.0 - coeff.pairwise[[x1, x2]];
            worst_row_gap = worst_row_gap.max((hat.entries().row(idx).sum() - expect).abs());
        }
        for x in 0..n {
            let row = full.pair_index(x, x).unwrap();
            diag_mass += full.entries().row(row).sum();
        }
        let mut diag_target_mass = 0.0f64;
        for idx in 0..full.dim() {
            for x in 0..n {
                diag_target_mass += full.entries()[[idx, full.pair_index(x, x).unwrap()]];
            }
        }
        push(
            results,
            format!("{}: V^({m}) row sums are 1 - alpha(x1, x2)", chain.name()),
            worst_row_gap < 1e-12,
            format!("worst gap {worst_row_gap:.3e}"),
        );
        push(
            results,
            format!("{}: V^({m}) puts no mass on the diagonal", chain.name()),
            diag_mass == 0.0 && diag_target_mass == 0.0,
            format!("rows {diag_mass:.3e} cols {diag_target_mass:.3e}"),
        );
    }
    Ok(())
}

fn dominance_checks(chain: &ChainSpec, results: &mut Vec<CheckResult>) -> Result<()> {
    let mut md_ok = true;
    let mut md_worst = 0.0f64;
    for m in 1..=3 {
        for n in 0..=12 {
            let bound = md_bound(chain, m, n)?;
            let exact = chain.tv_diameter(n)?;
            if bound < exact - 1e-10 {
                md_ok = false;
                md_worst = md_worst.max(exact - bound);
            }
        }
    }
    push(
        results,
        format!("{}: MD bound dominates the oracle", chain.name()),
        md_ok,
        format!("worst shortfall {md_worst:.3e}"),
    );

    let mut norm_ok = true;
    for m in 1..=2 {
        let op = build_pair_operator(chain, 0, m, PairDomain::OffDiagonal)?;
        // One operator only bounds homogeneous chains; for time-varying ones
        // use the product form below.
        if !chain.is_homogeneous() {
            continue;
        }
        for blocks in 1..=6 {
            let exact = chain.tv_diameter(blocks * m)?;
            if exact > op.norm().powi(blocks as i32) + 1e-10 {
                norm_ok = false;
            }
        }
    }
    if chain.is_homogeneous() {
        push(
            results,
            format!("{}: norm powers dominate the oracle", chain.name()),
            norm_ok,
            String::new(),
        );
    }
    Ok(())
}

fn coupling_checks(chain: &ChainSpec, results: &mut Vec<CheckResult>) -> Result<()> {
    let n = chain.n_states();
    let mu1 = Distribution::point_mass(n, 0)?;
    let mu2 = Distribution::point_mass(n, n - 1)?;
    let m = 1;
    let blocks = 5;
    let trials = 20_000;
    let stats = simulate(chain, &mu1, &mu2, m, blocks, trials, 20_260_810)?;
    let dp = not_coupled_exact(chain, &mu1, &mu2, m, blocks)?;

    let mut sigma_ok = true;
    let mut bound_ok = true;
    for (b, (&exact, &empirical)) in dp.iter().zip(&stats.p_not_coupled).enumerate() {
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        if (empirical - exact).abs() > 4.0 * sigma + 1e-12 {
            sigma_ok = false;
        }
        if exact > md_bound(chain, m, b * m)? + 1e-12 {
            bound_ok = false;
        }
    }
    push(
        results,
        format!("{}: simulated non-merging tracks the exact value", chain.name()),
        sigma_ok,
        format!("dp {:?}", &dp[..=blocks.min(3)]),
    );
    push(
        results,
        format!("{}: exact non-merging below the MD bound", chain.name()),
        bound_ok,
        String::new(),
    );

    let mut marginal_ok = true;
    let mut worst_tv = 0.0f64;
    for b in 0..=blocks {
        let exact1 = chain.marginal(&mu1, b * m)?;
        let tv: f64 = stats.marginal_hist1[b]
            .iter()
            .zip(exact1.probs().iter())
            .map(|(&c, &p)| (c as f64 / trials as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        worst_tv = worst_tv.max(tv);
        if tv > 0.02 {
            marginal_ok = false;
        }
    }
    push(
        results,
        format!("{}: simulated marginals match the chain law", chain.name()),
        marginal_ok,
        format!("worst TV {worst_tv:.4}"),
    );
    Ok(())
}

fn reference_rate_checks(results: &mut Vec<CheckResult>) -> Result<()> {
    let cases = [
        ("p2", corpus::p2(), 0.7, 1e-9),
        ("c3", corpus::c3(), 0.5f64.sqrt(), 1e-8),
        ("instant", corpus::instant(), 0.0, 1e-9),
    ];
    for (name, chain, expect, tol) in cases {
        let gap = lambda2_modulus(&chain.m_step_kernel(0, 1)?, DEFAULT_TOL)?;
        push(
            results,
            format!("{name}: second eigenvalue modulus"),
            (gap.lambda2_modulus - expect).abs() < tol,
            format!("got {:.12}", gap.lambda2_modulus),
        );
    }

    for chain in [corpus::p2(), corpus::c3(), corpus::witness3()] {
        let gap = lambda2_modulus(&chain.m_step_kernel(0, 1)?, DEFAULT_TOL)?;
        let empirical = chain.tv_diameter(64)?.powf(1.0 / 64.0);
        push(
            results,
            format!("{}: empirical rate approaches |lambda_2|", chain.name()),
            (empirical - gap.lambda2_modulus).abs() < 0.02,
            format!("empirical {empirical:.6} reference {:.6}", gap.lambda2_modulus),
        );
    }

    for chain in [corpus::p2(), corpus::c3(), corpus::witness3(), corpus::instant()] {
        let kernel = chain.m_step_kernel(0, 1)?;
        let pi = kernel.stationary_distribution()?;
        let residual = (&pi.probs().dot(kernel.rows()) - pi.probs())
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        push(
            results,
            format!("{}: stationary balance residual", chain.name()),
            residual <= 1e-12,
            format!("{residual:.3e}"),
        );
    }
    Ok(())
}

fn witness_check(results: &mut Vec<CheckResult>) -> Result<()> {
    let chain = corpus::witness3();
    let v1 = build_pair_operator(&chain, 0, 1, PairDomain::OffDiagonal)?;
    let v2 = build_pair_operator(&chain, 0, 2, PairDomain::OffDiagonal)?;
    let r1 = v1.spectral_radius(DEFAULT_TOL)?;
    let r2 = v2.spectral_radius(DEFAULT_TOL)?;
    let gap = (r2 - r1 * r1).abs();
    push(
        results,
        "witness3: r(V^(2)) differs from r(V^(1))^2".to_string(),
        gap > 1e-6,
        format!("|r(V^(2)) - r(V^(1))^2| = {gap:.6}"),
    );
    Ok(())
}

fn product_checks(results: &mut Vec<CheckResult>) -> Result<()> {
    let chain = corpus::cyclic2();
    let mut ok = true;
    let mut detail = String::new();
    for m in 1..=2 {
        for blocks in 1..=5 {
            let pb = product_bound(&chain, m, blocks)?;
            let exact = chain.tv_diameter(blocks * m)?;
            if pb.operator_product_sup > pb.norm_product + 1e-10
                || exact > pb.operator_product_sup + 1e-10
            {
                ok = false;
                detail = format!(
                    "m={m} blocks={blocks} exact={exact} sup={} norm={}",
                    pb.operator_product_sup, pb.norm_product
                );
            }
        }
    }
    push(
        results,
        "cyclic2: product bounds are ordered and dominate".to_string(),
        ok,
        detail,
    );

    let instant = corpus::instant();
    let pb = product_bound(&instant, 1, 2)?;
    push(
        results,
        "instant: one all-equal block collapses the product to zero".to_string(),
        pb.norm_product == 0.0 && pb.operator_product_sup == 0.0,
        format!("norm {} sup {}", pb.norm_product, pb.operator_product_sup),
    );
    Ok(())
}
