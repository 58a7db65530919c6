//! Convergence-rate bounds in total variation for finite Markov chains.
//!
//! The crate computes and compares, against a brute-force oracle:
//!
//! - the second-eigenvalue reference rate `|lambda_2(P)|` of a primitive
//!   transition matrix;
//! - Markov-Dobrushin `m`-step ergodic coefficients and the block bounds they
//!   induce, for homogeneous and time-varying chains;
//! - sub-stochastic pair operators `V^(m)` built from the coupling
//!   construction, their norms, spectral radii, and non-homogeneous operator
//!   products;
//! - a Monte Carlo simulator of the exact coupling quadruple, validated by a
//!   dynamic-programming oracle.
//!
//! All distances use the set-supremum convention `d = ||.||_TV / 2`, so every
//! number lies in `[0, 1]` and bounds are directly comparable.
//!
//! ```
//! use mixbound::{ChainSpec, TransitionMatrix};
//!
//! let p = TransitionMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]])?;
//! let chain = ChainSpec::homogeneous("p2", p);
//!
//! // Exact worst-case distance at time 4 and two bounds on it.
//! let exact = chain.tv_diameter(4)?;
//! let md = mixbound::md_bound(&chain, 1, 4)?;
//! let op = mixbound::build_pair_operator(&chain, 0, 1, mixbound::PairDomain::OffDiagonal)?;
//! assert!((exact - 0.7f64.powi(4)).abs() < 1e-12);
//! assert!(md >= exact - 1e-10);
//! assert!(op.norm().powi(4) >= exact - 1e-10);
//! # Ok::<(), mixbound::Error>(())
//! ```

pub mod chain;
pub mod check;
pub mod coeff;
pub mod corpus;
pub mod error;
mod linalg;
pub mod operators;
pub mod report;
pub mod sim;
pub mod spectral;

pub use chain::{
    total_variation, ChainSpec, ChainVariant, Distribution, Schedule, TransitionMatrix,
};
pub use coeff::{md_bound, md_coefficients, pairwise_alpha, MdCoefficients};
pub use error::{Error, Result};
pub use operators::{
    build_pair_operator, pointwise_bound, product_bound, residual_kernels, spectral_bound,
    PairDomain, PairOperator, ProductBound, ResidualKernels,
};
pub use report::{
    parse_chain_file, parse_chain_json, run_report, Method, RateReport, ReportFormat, SimConfig,
};
pub use sim::{
    coupled_block_step, initial_coupling, not_coupled_exact, simulate, CouplingState,
    CouplingStats,
};
pub use spectral::{lambda2_modulus, spectral_radius, SpectralGap, SpectralMethod};
