//! Secure non-linear functions built from the primitives: piecewise
//! polynomial evaluation, Newton iterations, softmax and layer norm.

mod layernorm;
mod newton;
mod oppe;
mod softmax;
pub mod tables;

pub use layernorm::{ln_scale_exponent, LayerNormParams, LnAffine, LN_DOMAIN};
pub use newton::NewtonPrecision;
pub use oppe::OppeVariant;
pub use softmax::SOFTMAX_RECIP_DELTA;
pub use tables::Activation;

#[cfg(test)]
mod tests;
