mod compare;
mod max;
mod mul;
mod ot;
mod share;
mod trunc;

pub use share::{reconstruct, reconstruct_bits, share, AShare, BShare};
pub use trunc::{trunc_local, TruncMode};
