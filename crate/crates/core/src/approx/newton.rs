use std::fmt::Write as _;

use super::piecewise::parse_num;
use crate::error::{Error, Result};
use crate::ring::{FxpConfig, RingValue};

const GRID_POINTS: usize = 10_000;
const BISECT_TOL: f64 = 1.0 / (1u64 << 30) as f64;
const MAX_ITERS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NewtonKind {
    Reciprocal,
    InvSqrt,
}

impl NewtonKind {
    pub fn step(self, x: f64, y: f64) -> f64 {
        match self {
            NewtonKind::Reciprocal => y * (2.0 - x * y),
            NewtonKind::InvSqrt => 0.5 * y * (3.0 - x * y * y),
        }
    }

    pub fn target(self, x: f64) -> f64 {
        match self {
            NewtonKind::Reciprocal => 1.0 / x,
            NewtonKind::InvSqrt => 1.0 / x.sqrt(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            NewtonKind::Reciprocal => "reciprocal",
            NewtonKind::InvSqrt => "invsqrt",
        }
    }
}

/// Public initial value and iteration count for a Newton evaluation on
/// `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPlan {
    pub kind: NewtonKind,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub y0: f64,
    pub t: u32,
    /// Largest float error seen on the verification grid.
    pub grid_max_error: f64,
}

/// Set `{y > 0 : g_k(y) >= l}` for the iteration map at coefficient `k`,
/// as `[lo, hi]`.
fn preimage(kind: NewtonKind, k: f64, l: f64) -> (f64, f64) {
    match kind {
        NewtonKind::Reciprocal => {
            if l <= 0.0 {
                return (0.0, 2.0 / k);
            }
            let r = (1.0 - k * l).max(0.0).sqrt();
            ((1.0 - r) / k, (1.0 + r) / k)
        }
        NewtonKind::InvSqrt => {
            let top = 1.0 / k.sqrt();
            let end = (3.0 / k).sqrt();
            if l <= 0.0 {
                return (0.0, end);
            }
            let g = |y: f64| kind.step(k, y);
            // g rises on (0, top) and falls on (top, end)
            let lo = bisect(|y| g(y) >= l, 0.0, top, false);
            let hi = bisect(|y| g(y) >= l, top, end, true);
            (lo, hi)
        }
    }
}

/// Boundary of a predicate that flips once on `[lo, hi]`. With
/// `holds_left` the predicate is true at `lo`.
fn bisect(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, holds_left: bool) -> f64 {
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if pred(mid) == holds_left {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if holds_left {
        lo
    } else {
        hi
    }
}

fn determine(kind: NewtonKind, a: f64, b: f64, delta: f64) -> Result<NewtonPlan> {
    if !(a > 0.0 && a <= b && delta > 0.0) {
        return Err(Error::Config(format!("invalid Newton interval [{a}, {b}] with delta {delta}")));
    }
    let mut la = kind.target(a) - delta;
    let mut lb = kind.target(b) - delta;
    let mut hb = kind.target(b) + delta;
    let mut t = 0u32;
    while hb < la {
        if t >= MAX_ITERS {
            return Err(Error::Config(format!("Newton plan for [{a}, {b}] does not converge")));
        }
        la = preimage(kind, a, la).0;
        let (nlb, nhb) = preimage(kind, b, lb);
        lb = nlb;
        hb = nhb;
        t += 1;
    }
    let mut plan = NewtonPlan {
        kind,
        a,
        b,
        delta,
        y0: 0.5 * (hb + la),
        t,
        grid_max_error: 0.0,
    };
    plan.grid_max_error = plan.grid_error();
    while plan.grid_max_error > delta && plan.t < MAX_ITERS {
        plan.t += 1;
        plan.grid_max_error = plan.grid_error();
    }
    Ok(plan)
}

pub fn determine_recip(a: f64, b: f64, delta: f64) -> Result<NewtonPlan> {
    determine(NewtonKind::Reciprocal, a, b, delta)
}

pub fn determine_invsqrt(a: f64, b: f64, delta: f64) -> Result<NewtonPlan> {
    determine(NewtonKind::InvSqrt, a, b, delta)
}

impl NewtonPlan {
    pub fn eval_f64(&self, x: f64) -> f64 {
        (0..self.t).fold(self.y0, |y, _| self.kind.step(x, y))
    }

    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..GRID_POINTS).map(move |k| self.a + (self.b - self.a) * k as f64 / (GRID_POINTS - 1) as f64)
    }

    pub fn grid_error(&self) -> f64 {
        self.grid()
            .map(|x| (self.eval_f64(x) - self.kind.target(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Plaintext model of the secure iteration with floor truncation after
    /// every product.
    pub fn eval_fxp(&self, cfg: &FxpConfig, x: f64) -> Result<f64> {
        let f = cfg.frac();
        let tr = |v: u64| cfg.arith_shift_right(RingValue(v), f).0;
        let xe = cfg.encode(x)?.0;
        let mut y = cfg.encode(self.y0)?.0;
        for _ in 0..self.t {
            y = match self.kind {
                NewtonKind::Reciprocal => {
                    let xy = tr(cfg.mul(xe, y));
                    tr(cfg.mul(y, cfg.sub(2 << f, xy)))
                }
                NewtonKind::InvSqrt => {
                    let y2 = tr(cfg.mul(y, y));
                    let xy2 = tr(cfg.mul(xe, y2));
                    let h = tr(cfg.mul(y, cfg.sub(3 << f, xy2)));
                    cfg.arith_shift_right(RingValue(h), 1).0
                }
            };
        }
        Ok(cfg.decode(RingValue(y)))
    }

    /// Grid error of the fixed-point model.
    pub fn fxp_grid_error(&self, cfg: &FxpConfig) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in self.grid() {
            let x = cfg.decode(cfg.encode(x)?);
            worst = worst.max((self.eval_fxp(cfg, x)? - self.kind.target(x)).abs());
        }
        Ok(worst)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sharedtf-newton v1");
        let _ = writeln!(s, "kind {}", self.kind.name());
        let _ = writeln!(s, "a {:e}", self.a);
        let _ = writeln!(s, "b {:e}", self.b);
        let _ = writeln!(s, "delta {:e}", self.delta);
        let _ = writeln!(s, "y0 {:e}", self.y0);
        let _ = writeln!(s, "t {}", self.t);
        let _ = writeln!(s, "max_error {:e}", self.grid_max_error);
        s
    }

    pub fn from_text(text: &str) -> Result<NewtonPlan> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("sharedtf-newton v1") {
            return Err(Error::Format("missing newton header".into()));
        }
        let mut kv = std::collections::HashMap::new();
        for line in lines {
            let (k, v) = line
                .trim()
                .split_once(' ')
                .ok_or_else(|| Error::Format(format!("malformed line {line:?}")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| kv.get(k).ok_or_else(|| Error::Format(format!("missing field {k}")));
        let kind = match get("kind")?.as_str() {
            "reciprocal" => NewtonKind::Reciprocal,
            "invsqrt" => NewtonKind::InvSqrt,
            other => return Err(Error::Format(format!("unknown plan kind {other}"))),
        };
        Ok(NewtonPlan {
            kind,
            a: parse_num(get("a")?)?,
            b: parse_num(get("b")?)?,
            delta: parse_num(get("delta")?)?,
            y0: parse_num(get("y0")?)?,
            t: parse_num(get("t")?)?,
            grid_max_error: parse_num(get("max_error")?)?,
        })
    }
}
