//! Python bindings: a `Chain` class wrapping the full bound toolkit, plus the
//! standalone total variation and spectral radius helpers.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mixbound::chain::{ChainSpec, Distribution, Schedule, TransitionMatrix};
use mixbound::operators::PairDomain;
use mixbound::report::{render_report, run_report, ReportFormat, SimConfig};
use mixbound::spectral::DEFAULT_TOL;

fn to_py(err: mixbound::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<TransitionMatrix> {
    TransitionMatrix::from_rows(rows).map_err(to_py)
}

fn distribution(probs: &[f64]) -> PyResult<Distribution> {
    Distribution::from_slice(probs).map_err(to_py)
}

fn rows_to_vec(m: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// A finite Markov chain, homogeneous or time-varying.
#[pyclass]
struct Chain {
    spec: ChainSpec,
}

#[pymethods]
impl Chain {
    /// Build a homogeneous chain from a row-stochastic matrix.
    #[staticmethod]
    fn homogeneous(name: &str, matrix: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            spec: ChainSpec::homogeneous(name, matrix_from_rows(&matrix)?),
        })
    }

    /// Build a time-varying chain; `schedule` is "cyclic" or "finite".
    #[staticmethod]
    fn time_varying(name: &str, matrices: Vec<Vec<Vec<f64>>>, schedule: &str) -> PyResult<Self> {
        let schedule = match schedule {
            "cyclic" => Schedule::Cyclic,
            "finite" => Schedule::Finite,
            other => {
                return Err(PyValueError::new_err(format!(
                    "schedule must be \"cyclic\" or \"finite\", got {other:?}"
                )))
            }
        };
        let mut validated = Vec::with_capacity(matrices.len());
        for rows in &matrices {
            validated.push(matrix_from_rows(rows)?);
        }
        Ok(Self {
            spec: ChainSpec::time_varying(name, validated, schedule).map_err(to_py)?,
        })
    }

    /// Parse the JSON chain schema used by the CLI.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            spec: mixbound::parse_chain_json(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(Self {
            spec: mixbound::parse_chain_file(path).map_err(to_py)?,
        })
    }

    fn name(&self) -> &str {
        self.spec.name()
    }

    fn n_states(&self) -> usize {
        self.spec.n_states()
    }

    fn is_homogeneous(&self) -> bool {
        self.spec.is_homogeneous()
    }

    /// The m-step kernel starting at time t, as nested lists.
    fn m_step_kernel(&self, t: usize, m: usize) -> PyResult<Vec<Vec<f64>>> {
        let kernel = self.spec.m_step_kernel(t, m).map_err(to_py)?;
        Ok(rows_to_vec(kernel.rows()))
    }

    /// Law at time n started from the given initial law.
    fn marginal(&self, initial: Vec<f64>, n: usize) -> PyResult<Vec<f64>> {
        let initial = distribution(&initial)?;
        let out = self.spec.marginal(&initial, n).map_err(to_py)?;
        Ok(out.probs().to_vec())
    }

    /// Exact worst-case total variation between two starting points at time n.
    fn tv_diameter(&self, n: usize) -> PyResult<f64> {
        self.spec.tv_diameter(n).map_err(to_py)
    }

    /// Stationary distribution (homogeneous, primitive chains).
    fn stationary(&self) -> PyResult<Vec<f64>> {
        if !self.spec.is_homogeneous() {
            return Err(PyValueError::new_err(
                "stationary distribution requires a homogeneous chain",
            ));
        }
        let kernel = self.spec.m_step_kernel(0, 1).map_err(to_py)?;
        Ok(kernel
            .stationary_distribution()
            .map_err(to_py)?
            .probs()
            .to_vec())
    }

    /// Second eigenvalue modulus |lambda_2| (homogeneous, primitive chains).
    #[pyo3(signature = (tol = 1e-10))]
    fn lambda2(&self, tol: f64) -> PyResult<f64> {
        if !self.spec.is_homogeneous() {
            return Err(PyValueError::new_err(
                "the second-eigenvalue rate requires a homogeneous chain",
            ));
        }
        let kernel = self.spec.m_step_kernel(0, 1).map_err(to_py)?;
        Ok(mixbound::lambda2_modulus(&kernel, tol)
            .map_err(to_py)?
            .lambda2_modulus)
    }

    /// The ergodic coefficient alpha^(m) of the block starting at time t.
    fn md_alpha(&self, t: usize, m: usize) -> PyResult<f64> {
        Ok(mixbound::md_coefficients(&self.spec, t, m)
            .map_err(to_py)?
            .alpha)
    }

    /// All pairwise coefficients alpha^(m)(x, x') of one block.
    fn md_pairwise(&self, t: usize, m: usize) -> PyResult<Vec<Vec<f64>>> {
        let coeff = mixbound::md_coefficients(&self.spec, t, m).map_err(to_py)?;
        Ok(rows_to_vec(&coeff.pairwise))
    }

    /// Markov-Dobrushin bound at time n built from m-step blocks.
    fn md_bound(&self, m: usize, n: usize) -> PyResult<f64> {
        mixbound::md_bound(&self.spec, m, n).map_err(to_py)
    }

    /// Norm of the pair operator of the block starting at time t.
    fn operator_norm(&self, t: usize, m: usize) -> PyResult<f64> {
        let op = mixbound::build_pair_operator(&self.spec, t, m, PairDomain::OffDiagonal)
            .map_err(to_py)?;
        Ok(op.norm())
    }

    /// Spectral radius of the pair operator (homogeneous chains).
    #[pyo3(signature = (m, tol = 1e-10))]
    fn operator_radius(&self, m: usize, tol: f64) -> PyResult<f64> {
        if !self.spec.is_homogeneous() {
            return Err(PyValueError::new_err(
                "the operator spectral radius requires a homogeneous chain",
            ));
        }
        let op = mixbound::build_pair_operator(&self.spec, 0, m, PairDomain::OffDiagonal)
            .map_err(to_py)?;
        op.spectral_radius(tol).map_err(to_py)
    }

    /// Asymptotic bound (r(V^(m)) + eps)^floor(n/m).
    #[pyo3(signature = (m, n, eps = 1e-6))]
    fn spectral_bound(&self, m: usize, n: usize, eps: f64) -> PyResult<f64> {
        mixbound::spectral_bound(&self.spec, m, n, eps).map_err(to_py)
    }

    /// Pointwise bound matrix ((V^(m))^blocks 1)(x1, x2).
    fn pointwise_bound(&self, m: usize, blocks: usize) -> PyResult<Vec<Vec<f64>>> {
        let out = mixbound::pointwise_bound(&self.spec, m, blocks).map_err(to_py)?;
        Ok(rows_to_vec(&out))
    }

    /// Product bounds over blocks: (norm_product, operator_product_sup).
    fn product_bound(&self, m: usize, blocks: usize) -> PyResult<(f64, f64)> {
        let pb = mixbound::product_bound(&self.spec, m, blocks).map_err(to_py)?;
        Ok((pb.norm_product, pb.operator_product_sup))
    }

    /// Exact per-block non-merging probabilities of the coupling.
    fn not_coupled_exact(
        &self,
        mu1: Vec<f64>,
        mu2: Vec<f64>,
        m: usize,
        blocks: usize,
    ) -> PyResult<Vec<f64>> {
        let mu1 = distribution(&mu1)?;
        let mu2 = distribution(&mu2)?;
        mixbound::not_coupled_exact(&self.spec, &mu1, &mu2, m, blocks).map_err(to_py)
    }

    /// Monte Carlo coupling run; returns the statistics as a JSON string.
    #[pyo3(signature = (mu1, mu2, m, blocks, trials, seed = 0))]
    fn simulate(
        &self,
        mu1: Vec<f64>,
        mu2: Vec<f64>,
        m: usize,
        blocks: usize,
        trials: u64,
        seed: u64,
    ) -> PyResult<String> {
        let mu1 = distribution(&mu1)?;
        let mu2 = distribution(&mu2)?;
        let stats =
            mixbound::simulate(&self.spec, &mu1, &mu2, m, blocks, trials, seed).map_err(to_py)?;
        serde_json::to_string(&stats).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Full rate-comparison report as JSON (or CSV with `csv=True`).
    #[pyo3(signature = (m_list, n_max, eps = 1e-6, trials = None, seed = 0, csv = false))]
    fn report(
        &self,
        m_list: Vec<usize>,
        n_max: usize,
        eps: f64,
        trials: Option<u64>,
        seed: u64,
        csv: bool,
    ) -> PyResult<String> {
        let sim = trials.map(|trials| SimConfig { trials, seed });
        let report = run_report(&self.spec, &m_list, n_max, eps, sim).map_err(to_py)?;
        let format = if csv {
            ReportFormat::Csv
        } else {
            ReportFormat::Json
        };
        render_report(&report, format).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Chain(name={:?}, states={}, homogeneous={})",
            self.spec.name(),
            self.spec.n_states(),
            self.spec.is_homogeneous()
        )
    }
}

/// Total variation distance between two probability vectors, in [0, 1].
#[pyfunction]
fn total_variation(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let p = distribution(&p)?;
    let q = distribution(&q)?;
    mixbound::total_variation(&p, &q).map_err(to_py)
}

/// Gelfand spectral radius of an arbitrary square matrix.
#[pyfunction]
#[pyo3(signature = (matrix, tol = DEFAULT_TOL))]
fn spectral_radius(matrix: Vec<Vec<f64>>, tol: f64) -> PyResult<f64> {
    let n = matrix.len();
    let mut arr = ndarray::Array2::zeros((n, matrix.first().map_or(0, Vec::len)));
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != arr.ncols() {
            return Err(PyValueError::new_err("matrix rows have unequal lengths"));
        }
        for (j, &v) in row.iter().enumerate() {
            arr[[i, j]] = v;
        }
    }
    mixbound::spectral_radius(&arr, tol).map_err(to_py)
}

#[pymodule]
fn mixbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Chain>()?;
    m.add_function(wrap_pyfunction!(total_variation, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    Ok(())
}
