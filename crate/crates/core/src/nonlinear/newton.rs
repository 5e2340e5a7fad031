use crate::approx::{NewtonKind, NewtonPlan};
use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::{AShare, TruncMode};

/// Fixed-point working precision and truncation flavour for a Newton run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NewtonPrecision {
    pub frac: u32,
    pub mode: TruncMode,
}

impl Party {
    fn precision_default(&self) -> NewtonPrecision {
        NewtonPrecision {
            frac: self.cfg().frac(),
            mode: TruncMode::Faithful,
        }
    }

    /// Share times a public real, truncated back to `frac`.
    fn mul_public_real(&mut self, x: &AShare, c: f64, p: NewtonPrecision) -> Result<AShare> {
        let cfg = self.cfg();
        let k = cfg.encode_at(c, p.frac)?;
        self.trunc(&x.scale(&cfg, k), p.frac, p.mode)
    }

    fn check_plan(plan: &NewtonPlan, kind: NewtonKind) -> Result<()> {
        if plan.kind != kind {
            return Err(Error::Config(format!("expected a {kind:?} plan, got {:?}", plan.kind)));
        }
        Ok(())
    }

    pub fn reciprocal(&mut self, x: &AShare, plan: &NewtonPlan) -> Result<AShare> {
        let p = self.precision_default();
        self.reciprocal_with(x, plan, p)
    }

    /// `y <- y (2 - x y)` for `plan.t` steps from the public `y0`; the first
    /// step only needs local scalar products.
    pub fn reciprocal_with(&mut self, x: &AShare, plan: &NewtonPlan, p: NewtonPrecision) -> Result<AShare> {
        Self::check_plan(plan, NewtonKind::Reciprocal)?;
        let cfg = self.cfg();
        let two = 2u64 << p.frac;
        if plan.t == 0 {
            let y0 = cfg.encode_at(plan.y0, p.frac)?;
            return Ok(AShare::zeros(x.party, x.rows, x.cols).add_public_scalar(&cfg, y0));
        }
        let xy = self.mul_public_real(x, plan.y0, p)?;
        let mut y = self.mul_public_real(&xy.rsub_public_scalar(&cfg, two), plan.y0, p)?;
        for _ in 1..plan.t {
            let xy = self.mul_trunc(x, &y, p.frac, p.mode)?;
            y = self.mul_trunc(&y, &xy.rsub_public_scalar(&cfg, two), p.frac, p.mode)?;
        }
        Ok(y)
    }

    pub fn invsqrt(&mut self, x: &AShare, plan: &NewtonPlan) -> Result<AShare> {
        let p = self.precision_default();
        self.invsqrt_with(x, plan, p)
    }

    /// `y <- y (3 - x y^2) / 2`, halving folded into the last truncation.
    pub fn invsqrt_with(&mut self, x: &AShare, plan: &NewtonPlan, p: NewtonPrecision) -> Result<AShare> {
        Self::check_plan(plan, NewtonKind::InvSqrt)?;
        let cfg = self.cfg();
        let three = 3u64 << p.frac;
        if plan.t == 0 {
            let y0 = cfg.encode_at(plan.y0, p.frac)?;
            return Ok(AShare::zeros(x.party, x.rows, x.cols).add_public_scalar(&cfg, y0));
        }
        let xy2 = self.mul_public_real(x, plan.y0 * plan.y0, p)?;
        let mut y = self.mul_public_real(&xy2.rsub_public_scalar(&cfg, three), 0.5 * plan.y0, p)?;
        for _ in 1..plan.t {
            let y2 = self.mul_trunc(&y, &y, p.frac, p.mode)?;
            let xy2 = self.mul_trunc(x, &y2, p.frac, p.mode)?;
            y = self.mul_trunc(&y, &xy2.rsub_public_scalar(&cfg, three), p.frac + 1, p.mode)?;
        }
        Ok(y)
    }
}
