use super::tables::recip_plan;
use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::AShare;

pub const SOFTMAX_RECIP_DELTA: f64 = 1.0 / 1024.0;

impl Party {
    /// Row-wise softmax of a `rows x n` matrix. Every step is batched over
    /// all rows, so the round count does not depend on `rows`.
    pub fn softmax(&mut self, x: &AShare) -> Result<AShare> {
        self.softmax_with_support(x, x.cols)
    }

    /// Softmax where at most `support` entries per row can have a nonzero
    /// exponential, e.g. when the remaining columns are masked far below the
    /// row maximum. The reciprocal plan covers `[1, support]`.
    pub fn softmax_with_support(&mut self, x: &AShare, support: usize) -> Result<AShare> {
        let n = x.cols;
        if n == 0 {
            return Err(Error::Shape("softmax over empty rows".into()));
        }
        if support == 0 || support > n {
            return Err(Error::Config(format!("softmax support {support} outside 1..={n}")));
        }
        let cfg = self.cfg();
        let plan = recip_plan(1.0, support as f64, SOFTMAX_RECIP_DELTA)?;
        let tau = self.max_rows(x)?;
        let z = x.sub(&cfg, &tau.broadcast_cols(n))?;
        let e = self.exp_neg(&z)?;
        let s = e.row_sums(&cfg);
        let inv = self.reciprocal(&s, &plan)?;
        self.mul(&e, &inv.broadcast_cols(n))
    }
}
