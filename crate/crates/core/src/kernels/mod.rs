//! Absorption kernels h(t), their primitives, the flat supersolutions and
//! the threshold quantities that separate the two blow-up regimes.

mod kernel;
pub mod lemma1;
mod omega;
mod problem;
pub mod thresholds;

pub use kernel::AbsorptionKernel;
pub use lemma1::{
    find_beta, lemma1_constant, ln_lemma1_constant, verify_boundary_row, verify_subsolution_inequality, BetaResult,
    Lemma1Params, ScanGrid, ScanVerdict,
};
pub use omega::{read_table, OmegaSpec};
pub use problem::{
    eval_u, eval_utilde, exponential_barrier, flat_supersolution, power_barrier, Barrier,
    Nonlinearity, ProblemSpec,
};
pub use thresholds::{alpha_ell, dini_classify, dyadic_cutoffs, ell_star, theta_exponent, DiniClass};
