//! Inferential statistics: rank tests, correlation, OLS and a
//! random-intercept mixed model, plus the special functions behind p-values.

mod correlation;
mod design;
mod kruskal;
pub mod linalg;
mod lmm;
mod ols;
pub mod special;

pub use correlation::pearson;
pub use design::{
    build_design, DesignMatrix, DesignSpec, Formula, References, Term, Variable, INTERCEPT,
};
pub use kruskal::{eta_squared, kruskal_wallis, mid_ranks, KwResult};
pub use lmm::{lmm_fit, lmm_fit_at, pseudo_r2, reml_loglik, LmmFit, LOG_LAMBDA_TOL};
pub use ols::{ols, ols_fit, Coefficient, OlsFit};
pub use special::{chi2_sf, t_sf, t_two_sided};
