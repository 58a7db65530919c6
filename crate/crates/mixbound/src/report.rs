//! Chain file parsing, the rate-comparison report, and its CSV/JSON forms.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, Distribution, Schedule, TransitionMatrix};
use crate::coeff::{md_bound, md_coefficients};
use crate::error::{Error, Result};
use crate::operators::{build_pair_operator, PairDomain};
use crate::sim::simulate;
use crate::spectral::{lambda2_modulus, DEFAULT_TOL};

/// Slack used when comparing bound rows against the oracle rows.
pub const DOMINANCE_TOL: f64 = 1e-10;

/// A bound or reference method appearing in a report row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Reference rate `|lambda_2|^n`; not an upper bound (the constant in
    /// front is out of reach), reported for comparison only.
    Lambda2,
    /// Markov-Dobrushin block bound.
    MD,
    /// Operator norm bound `||V_hat^(m)||^floor(n/m)` (homogeneous chains).
    SpectralNorm,
    /// Asymptotic bound `(r(V_hat^(m)) + eps)^floor(n/m)`; valid above its
    /// recorded crossover only.
    SpectralRadius,
    /// Product of per-block operator norms.
    ProductNorm,
    /// Supremum of the ordered operator product applied to the ones vector.
    ProductOperator,
    /// Exact worst-case total variation (the oracle).
    OracleTV,
    /// Empirical non-merging probability of the simulated coupling.
    SimCoupling,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lambda2 => "Lambda2",
            Method::MD => "MD",
            Method::SpectralNorm => "SpectralNorm",
            Method::SpectralRadius => "SpectralRadius",
            Method::ProductNorm => "ProductNorm",
            Method::ProductOperator => "ProductOperator",
            Method::OracleTV => "OracleTV",
            Method::SimCoupling => "SimCoupling",
        }
    }

    /// Methods whose rows must dominate the oracle unconditionally.
    fn is_unconditional_bound(&self) -> bool {
        matches!(
            self,
            Method::MD | Method::SpectralNorm | Method::ProductNorm | Method::ProductOperator
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Lambda2" => Method::Lambda2,
            "MD" => Method::MD,
            "SpectralNorm" => Method::SpectralNorm,
            "SpectralRadius" => Method::SpectralRadius,
            "ProductNorm" => Method::ProductNorm,
            "ProductOperator" => Method::ProductOperator,
            "OracleTV" => Method::OracleTV,
            "SimCoupling" => Method::SimCoupling,
            other => return Err(Error::Parse(format!("unknown method `{other}`"))),
        })
    }
}

/// One grid value. `m = 0` marks methods that do not depend on a block size
/// (`OracleTV`, `Lambda2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub value: f64,
}

/// First grid time from which a method's rows dominate the oracle through
/// `n_max`; `None` if that never happens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub method: Method,
    pub m: usize,
    pub n: Option<usize>,
}

/// Per-method rate estimate `value(n_max)^(1/n_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRate {
    pub method: Method,
    pub m: usize,
    pub rate: f64,
}

/// Per-block-size summary: `(1 - alpha^(m))^(1/m)` and, for homogeneous
/// chains, `r(V_hat^(m))^(1/m)`; both approach the second eigenvalue modulus
/// as `m` grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRate {
    pub m: usize,
    pub md_rate: f64,
    pub radius_rate: Option<f64>,
}

/// The full comparison of every applicable method against the exact oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub chain: String,
    pub n_max: usize,
    pub m_list: Vec<usize>,
    pub eps: f64,
    /// Second eigenvalue modulus; homogeneous chains only.
    pub lambda2: Option<f64>,
    pub rows: Vec<RateRow>,
    pub crossovers: Vec<Crossover>,
    pub asymptotic_rates: Vec<AsymptoticRate>,
    pub block_rates: Vec<BlockRate>,
}

/// Optional Monte Carlo companion rows for the report.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
}

/// Output format of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

// ---------------------------------------------------------------------------
// Chain files
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    name: String,
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    matrices: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    schedule: Option<String>,
}

/// Parses the JSON chain schema:
/// `{"name", "matrix"}` for homogeneous chains, or
/// `{"name", "matrices", "schedule": "cyclic"|"finite"}` for time-varying
/// ones. Parsing validates stochasticity but not ergodicity.
pub fn parse_chain_json(text: &str) -> Result<ChainSpec> {
    let file: ChainFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match (file.matrix, file.matrices) {
        (Some(_), Some(_)) => Err(Error::Parse(
            "specify either `matrix` or `matrices`, not both".into(),
        )),
        (Some(matrix), None) => {
            if file.schedule.is_some() {
                return Err(Error::Parse(
                    "`schedule` is only valid together with `matrices`".into(),
                ));
            }
            let tm = TransitionMatrix::from_rows(&matrix)
                .map_err(|e| Error::Parse(format!("matrix: {e}")))?;
            Ok(ChainSpec::homogeneous(file.name, tm))
        }
        (None, Some(matrices)) => {
            let schedule = match file.schedule.as_deref() {
                Some("cyclic") => Schedule::Cyclic,
                Some("finite") => Schedule::Finite,
                Some(other) => {
                    return Err(Error::Parse(format!(
                        "unknown schedule `{other}` (expected \"cyclic\" or \"finite\")"
                    )))
                }
                None => {
                    return Err(Error::Parse(
                        "`matrices` requires a `schedule` field".into(),
                    ))
                }
            };
            let mut validated = Vec::with_capacity(matrices.len());
            for (i, raw) in matrices.iter().enumerate() {
                validated.push(
                    TransitionMatrix::from_rows(raw)
                        .map_err(|e| Error::Parse(format!("matrix {i}: {e}")))?,
                );
            }
            ChainSpec::time_varying(file.name, validated, schedule)
                .map_err(|e| Error::Parse(e.to_string()))
        }
        (None, None) => Err(Error::Parse(
            "chain file needs a `matrix` or a `matrices` field".into(),
        )),
    }
}

pub fn parse_chain_file(path: impl AsRef<Path>) -> Result<ChainSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_chain_json(&text)
}

// ---------------------------------------------------------------------------
// Report construction
// ---------------------------------------------------------------------------

/// Fills the whole method grid for one chain and checks the dominance
/// invariant; any failure aborts the report (no partial output).
pub fn run_report(
    chain: &ChainSpec,
    m_list: &[usize],
    n_max: usize,
    eps: f64,
    sim: Option<SimConfig>,
) -> Result<RateReport> {
    if m_list.is_empty() {
        return Err(Error::InvalidArgument("m list must not be empty"));
    }
    if m_list.contains(&0) {
        return Err(Error::ZeroSteps);
    }
    let max_m = *m_list.iter().max().unwrap();
    if n_max < max_m {
        return Err(Error::InvalidArgument("n_max must be >= max(m_list)"));
    }

    let mut rows = Vec::new();
    let mut block_rates = Vec::new();
    let mut asymptotic_rates = Vec::new();

    // Oracle values, computed once.
    let mut oracle = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        oracle.push(chain.tv_diameter(n)?);
    }
    for (n, &value) in oracle.iter().enumerate() {
        rows.push(RateRow {
            method: Method::OracleTV,
            m: 0,
            n,
            value,
        });
    }

    let lambda2 = if chain.is_homogeneous() {
        let kernel = chain.m_step_kernel(0, 1)?;
        Some(lambda2_modulus(&kernel, DEFAULT_TOL)?.lambda2_modulus)
    } else {
        None
    };
    if let Some(rate) = lambda2 {
        for n in 0..=n_max {
            rows.push(RateRow {
                method: Method::Lambda2,
                m: 0,
                n,
                value: rate.powi(n as i32),
            });
        }
    }

    for &m in m_list {
        for n in 0..=n_max {
            rows.push(RateRow {
                method: Method::MD,
                m,
                n,
                value: md_bound(chain, m, n)?,
            });
        }

        let coeff = md_coefficients(chain, 0, m)?;
        let mut radius_rate = None;

        if chain.is_homogeneous() {
            let op = build_pair_operator(chain, 0, m, PairDomain::OffDiagonal)?;
            let norm = op.norm();
            let radius = op.spectral_radius(DEFAULT_TOL)?;
            radius_rate = Some(radius.powf(1.0 / m as f64));
            for n in 0..=n_max {
                let blocks = (n / m) as i32;
                rows.push(RateRow {
                    method: Method::SpectralNorm,
                    m,
                    n,
                    value: norm.powi(blocks),
                });
                rows.push(RateRow {
                    method: Method::SpectralRadius,
                    m,
                    n,
                    value: (radius + eps).powi(blocks),
                });
            }
        }

        // Product bounds, grown block by block.
        let max_blocks = n_max / m;
        let mut norm_products = Vec::with_capacity(max_blocks + 1);
        let mut operator_sups = Vec::with_capacity(max_blocks + 1);
        norm_products.push(1.0);
        operator_sups.push(1.0);
        let dim = crate::operators::domain_dim(chain.n_states(), PairDomain::OffDiagonal);
        let mut running = ndarray::Array2::<f64>::eye(dim);
        let mut running_norm = 1.0;
        for k in 0..max_blocks {
            let op = build_pair_operator(chain, k * m, m, PairDomain::OffDiagonal)?;
            running_norm *= op.norm();
            running = running.dot(op.entries());
            norm_products.push(running_norm);
            let sup = running
                .rows()
                .into_iter()
                .map(|r| r.sum())
                .fold(0.0f64, f64::max);
            operator_sups.push(sup);
        }
        for n in 0..=n_max {
            rows.push(RateRow {
                method: Method::ProductNorm,
                m,
                n,
                value: norm_products[n / m],
            });
            rows.push(RateRow {
                method: Method::ProductOperator,
                m,
                n,
                value: operator_sups[n / m],
            });
        }

        if let Some(cfg) = sim {
            // Start the two copies at the hardest pair for this block size.
            let (x1, x2) = worst_pair(&coeff.pairwise);
            let n_states = chain.n_states();
            let mu1 = Distribution::point_mass(n_states, x1)?;
            let mu2 = Distribution::point_mass(n_states, x2)?;
            let stats = simulate(chain, &mu1, &mu2, m, max_blocks, cfg.trials, cfg.seed)?;
            for n in 0..=n_max {
                rows.push(RateRow {
                    method: Method::SimCoupling,
                    m,
                    n,
                    value: stats.p_not_coupled[n / m],
                });
            }
        }

        block_rates.push(BlockRate {
            m,
            md_rate: coeff.delta.powf(1.0 / m as f64),
            radius_rate,
        });
    }

    // Crossovers and terminal rates per (method, m).
    let mut crossovers = Vec::new();
    let mut keys: Vec<(Method, usize)> = Vec::new();
    for row in &rows {
        if row.method == Method::OracleTV {
            continue;
        }
        let key = (row.method, row.m);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (method, m) in keys {
        let values: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.method == method && r.m == m)
            .map(|r| (r.n, r.value))
            .collect();
        crossovers.push(Crossover {
            method,
            m,
            n: crossover_point(&values, &oracle),
        });
        if let Some(&(n, value)) = values.iter().find(|(n, _)| *n == n_max) {
            asymptotic_rates.push(AsymptoticRate {
                method,
                m,
                rate: value.powf(1.0 / n as f64),
            });
        }
    }

    let report = RateReport {
        chain: chain.name().to_string(),
        n_max,
        m_list: m_list.to_vec(),
        eps,
        lambda2,
        rows,
        crossovers,
        asymptotic_rates,
        block_rates,
    };
    report.verify_dominance()?;
    Ok(report)
}

fn worst_pair(pairwise: &ndarray::Array2<f64>) -> (usize, usize) {
    let n = pairwise.nrows();
    let mut best = (0, if n > 1 { 1 } else { 0 });
    let mut best_alpha = f64::INFINITY;
    for x1 in 0..n {
        for x2 in 0..n {
            if x1 != x2 && pairwise[[x1, x2]] < best_alpha {
                best_alpha = pairwise[[x1, x2]];
                best = (x1, x2);
            }
        }
    }
    best
}

fn crossover_point(values: &[(usize, f64)], oracle: &[f64]) -> Option<usize> {
    let mut candidate = None;
    for &(n, value) in values {
        if value >= oracle[n] - 1e-12 {
            if candidate.is_none() {
                candidate = Some(n);
            }
        } else {
            candidate = None;
        }
    }
    candidate
}

impl RateReport {
    /// Every unconditional bound row must dominate the oracle at the same
    /// time; spectral radius rows must do so from their recorded crossover
    /// on. Reference rows (`Lambda2`, `SimCoupling`) are informational.
    pub fn verify_dominance(&self) -> Result<()> {
        let oracle: Vec<f64> = {
            let mut v = vec![0.0; self.n_max + 1];
            for row in self.rows.iter().filter(|r| r.method == Method::OracleTV) {
                v[row.n] = row.value;
            }
            v
        };
        for row in &self.rows {
            if row.method.is_unconditional_bound() && row.value < oracle[row.n] - DOMINANCE_TOL {
                return Err(Error::ToleranceNotMet {
                    context: "bound row fell below the oracle",
                    residual: oracle[row.n] - row.value,
                    tol: DOMINANCE_TOL,
                });
            }
        }
        for cross in &self.crossovers {
            if cross.method != Method::SpectralRadius {
                continue;
            }
            let Some(start) = cross.n else { continue };
            for row in self
                .rows
                .iter()
                .filter(|r| r.method == Method::SpectralRadius && r.m == cross.m && r.n >= start)
            {
                if row.value < oracle[row.n] - DOMINANCE_TOL {
                    return Err(Error::ToleranceNotMet {
                        context: "spectral radius row fell below the oracle past its crossover",
                        residual: oracle[row.n] - row.value,
                        tol: DOMINANCE_TOL,
                    });
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

/// CSV with columns `chain,method,m,n,value`; values carry 17 significant
/// digits so they round-trip exactly.
pub fn to_csv(report: &RateReport) -> String {
    let mut out = String::from("chain,method,m,n,value\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{:.16e}\n",
            report.chain, row.method, row.m, row.n, row.value
        ));
    }
    out
}

pub fn to_json(report: &RateReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))
}

pub fn report_from_json(text: &str) -> Result<RateReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Renders the report and writes it to `path`.
pub fn emit_report(report: &RateReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = render_report(report, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn render_report(report: &RateReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(to_csv(report)),
        ReportFormat::Json => to_json(report),
    }
}
