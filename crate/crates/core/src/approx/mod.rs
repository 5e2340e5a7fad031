//! Plaintext, public-side numerics: piecewise polynomial tables and Newton
//! iteration plans.

mod fit;
mod newton;
mod piecewise;

pub use fit::{
    certify, exp_spec, fit_exp, fit_gelu, fit_piece, fit_piecewise, fit_tanh1, gelu, gelu_spec, tanh1,
    tanh1_spec, FitSpec, DEFAULT_COEF_FRAC, FIT_DELTA,
};
pub use newton::{determine_invsqrt, determine_recip, NewtonKind, NewtonPlan};
pub use piecewise::{fxp_powers, PiecewisePoly, Tail, FORMAT_HEADER};
