//! Two-party secure inference for Transformer encoders over additive
//! secret sharing in the ring of `ell`-bit integers.

pub mod approx;
pub mod dealer;
pub mod encoder;
pub mod error;
pub mod nonlinear;
pub mod party;
pub mod primitives;
pub mod ring;
pub mod transport;

pub use error::{Error, Result};
pub use party::{run_pair, run_pair_tcp, PairRun, Party, CLIENT, SERVER};
pub use primitives::{AShare, BShare, TruncMode};
pub use ring::{FxpConfig, RingValue};
