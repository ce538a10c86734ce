//! Exact operator residuals and Monte-Carlo tests of the fixed-point equation.

pub mod grid;
pub mod ks;
pub mod mc;
pub mod negative;
pub mod operator;

use serde::{Deserialize, Serialize};

pub use grid::{default_grid, Grid};
pub use ks::{ks_critical, ks_two_sample, KsResult};
pub use mc::{mc_fixed_point_test, McReport};
pub use negative::{
    alpha_negative, minimax_mc_test, minimax_residual, minimax_sample, mixed_case_check, ut_operator, MinimaxMcReport,
    MinimaxReport, MixedReport,
};
pub use operator::{
    apply_min_operator, atom_residuals, general_operator, harmonic_sum, iterate_operator, max_operator,
    neg_min_operator, residual_report, AtomResidual, OperatorValue, PointResidual, VerificationReport,
};

pub const DEFAULT_GRID_POINTS: usize = 257;
pub const DEFAULT_EPS_TRUNC: f64 = 1e-14;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub grid_points: usize,
    /// Target bound on the probability mass of omitted tail factors.
    pub eps_trunc: f64,
    /// Forces exactly this many tail terms (geometric tails only).
    pub tail_cut: Option<usize>,
    pub max_tail_terms: usize,
    pub residual_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            grid_points: DEFAULT_GRID_POINTS,
            eps_trunc: DEFAULT_EPS_TRUNC,
            tail_cut: None,
            max_tail_terms: 100_000,
            residual_tol: DEFAULT_RESIDUAL_TOL,
        }
    }
}
