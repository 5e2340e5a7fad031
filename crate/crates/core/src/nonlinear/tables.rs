//! Process-wide caches for the fitted activation tables and Newton plans.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::approx::{self, NewtonPlan, PiecewisePoly};
use crate::error::Result;
use crate::ring::FxpConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Gelu,
    Tanh1,
    Exp,
}

type TableKey = (Activation, u32, u32);
type PlanKey = (u8, u64, u64, u64);

fn table_cache() -> &'static Mutex<HashMap<TableKey, PiecewisePoly>> {
    static C: OnceLock<Mutex<HashMap<TableKey, PiecewisePoly>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

fn plan_cache() -> &'static Mutex<HashMap<PlanKey, NewtonPlan>> {
    static C: OnceLock<Mutex<HashMap<PlanKey, NewtonPlan>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

/// Fitted table for `act`, certified under `cfg`. Fitting is deterministic,
/// so both parties obtain identical tables.
pub fn table(act: Activation, cfg: &FxpConfig) -> Result<PiecewisePoly> {
    let key = (act, cfg.ell(), cfg.frac());
    if let Some(p) = table_cache().lock().unwrap().get(&key) {
        return Ok(p.clone());
    }
    let p = match act {
        Activation::Gelu => approx::fit_gelu(cfg)?,
        Activation::Tanh1 => approx::fit_tanh1(cfg)?,
        Activation::Exp => approx::fit_exp(cfg)?,
    };
    table_cache().lock().unwrap().insert(key, p.clone());
    Ok(p)
}

fn cached_plan(kind: u8, a: f64, b: f64, delta: f64, make: impl Fn() -> Result<NewtonPlan>) -> Result<NewtonPlan> {
    let key = (kind, a.to_bits(), b.to_bits(), delta.to_bits());
    if let Some(p) = plan_cache().lock().unwrap().get(&key) {
        return Ok(p.clone());
    }
    let p = make()?;
    plan_cache().lock().unwrap().insert(key, p.clone());
    Ok(p)
}

pub fn recip_plan(a: f64, b: f64, delta: f64) -> Result<NewtonPlan> {
    cached_plan(0, a, b, delta, || approx::determine_recip(a, b, delta))
}

pub fn invsqrt_plan(a: f64, b: f64, delta: f64) -> Result<NewtonPlan> {
    cached_plan(1, a, b, delta, || approx::determine_invsqrt(a, b, delta))
}
