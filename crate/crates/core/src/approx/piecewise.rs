use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ring::{FxpConfig, RingValue};

/// Behaviour outside the fitted interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// Zero below the first breakpoint, `f(x) = x` past the last one.
    ZeroLeftIdentityRight,
    /// Zero below the first breakpoint, constant past the last one.
    ZeroLeftConstantRight(f64),
    /// Zero below the first breakpoint; the last fitted piece extends right.
    Finite,
}

impl Tail {
    fn to_text(self) -> String {
        match self {
            Tail::ZeroLeftIdentityRight => "zero-left,identity-right".into(),
            Tail::ZeroLeftConstantRight(k) => format!("zero-left,constant-right({k:e})"),
            Tail::Finite => "finite".into(),
        }
    }

    fn parse(s: &str) -> Result<Tail> {
        if s == "zero-left,identity-right" {
            return Ok(Tail::ZeroLeftIdentityRight);
        }
        if s == "finite" {
            return Ok(Tail::Finite);
        }
        if let Some(k) = s
            .strip_prefix("zero-left,constant-right(")
            .and_then(|r| r.strip_suffix(')'))
        {
            return k
                .parse()
                .map(Tail::ZeroLeftConstantRight)
                .map_err(|_| Error::Format(format!("bad tail constant {k}")));
        }
        Err(Error::Format(format!("unknown tail {s}")))
    }
}

/// `m` polynomial pieces of degree `d`. Piece `i` applies on
/// `(w_i, w_{i+1}]`, the last piece on `(w_{m-1}, inf)`, and the result is 0
/// at or below `w_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly {
    pub name: String,
    pub d: usize,
    pub breakpoints: Vec<f64>,
    /// Row-major `m x (d+1)` monomial coefficients, constant term first.
    pub coeffs: Vec<f64>,
    pub tail: Tail,
    /// Fractional bits used for the public coefficients.
    pub coef_frac: u32,
    pub delta: f64,
    /// Certified maximum error over the dense grid, under simulated FXP.
    pub max_error: f64,
}

pub const FORMAT_HEADER: &str = "sharedtf-piecewise v1";

impl PiecewisePoly {
    pub fn m(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn coeff(&self, piece: usize, j: usize) -> f64 {
        self.coeffs[piece * (self.d + 1) + j]
    }

    /// Index of the active piece, `None` at or left of `w_0`.
    pub fn piece_of(&self, x: f64) -> Option<usize> {
        self.breakpoints.iter().rposition(|&w| x > w)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        match self.piece_of(x) {
            None => 0.0,
            Some(i) => (0..=self.d).rev().fold(0.0, |acc, j| acc * x + self.coeff(i, j)),
        }
    }

    /// Coefficient precision actually usable under `cfg`.
    pub fn effective_coef_frac(&self, cfg: &FxpConfig) -> u32 {
        let room = cfg.ell().saturating_sub(2 * cfg.frac() + 8);
        self.coef_frac.min(room)
    }

    pub fn encoded_breakpoints(&self, cfg: &FxpConfig) -> Result<Vec<u64>> {
        self.breakpoints.iter().map(|&w| cfg.encode(w).map(|v| v.0)).collect()
    }

    pub fn encoded_coeffs(&self, cfg: &FxpConfig) -> Result<Vec<u64>> {
        let fc = self.effective_coef_frac(cfg);
        self.coeffs.iter().map(|&c| cfg.encode_at(c, fc)).collect()
    }

    /// Bit-exact plaintext model of the secure evaluation with floor
    /// truncation: powers by repeated doubling, products with the
    /// coefficients at `coef_frac`, one final shift.
    pub fn eval_fxp(&self, cfg: &FxpConfig, x: f64) -> Result<f64> {
        let xe = cfg.encode(x)?.0;
        let f = cfg.frac();
        let pows = fxp_powers(cfg, xe, self.d);
        let ws = self.encoded_breakpoints(cfg)?;
        let piece = ws.iter().rposition(|&w| cfg.to_signed(xe) > cfg.to_signed(w));
        let Some(i) = piece else { return Ok(0.0) };
        let fc = self.effective_coef_frac(cfg);
        let mut acc = 0u64;
        for j in 0..=self.d {
            let c = cfg.encode_at(self.coeff(i, j), fc)?;
            let xj = if j == 0 { 1u64 << f } else { pows[j] };
            acc = cfg.add(acc, cfg.mul(c, xj));
        }
        Ok(cfg.decode(cfg.arith_shift_right(RingValue(acc), fc)))
    }

    /// Versioned text form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FORMAT_HEADER}");
        let _ = writeln!(s, "name {}", self.name);
        let _ = writeln!(s, "m {}", self.m());
        let _ = writeln!(s, "d {}", self.d);
        let _ = writeln!(s, "coef_frac {}", self.coef_frac);
        let _ = writeln!(s, "tail {}", self.tail.to_text());
        let _ = writeln!(s, "delta {:e}", self.delta);
        let _ = writeln!(s, "max_error {:e}", self.max_error);
        let bp: Vec<String> = self.breakpoints.iter().map(|w| format!("{w:e}")).collect();
        let _ = writeln!(s, "breakpoints {}", bp.join(" "));
        for i in 0..self.m() {
            let row: Vec<String> = (0..=self.d).map(|j| format!("{:e}", self.coeff(i, j))).collect();
            let _ = writeln!(s, "coef {}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<PiecewisePoly> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(FORMAT_HEADER) {
            return Err(Error::Format("missing piecewise header".into()));
        }
        let mut name = None;
        let (mut m, mut d, mut coef_frac) = (None, None, None);
        let (mut tail, mut delta, mut max_error) = (None, None, None);
        let mut breakpoints = Vec::new();
        let mut coeffs = Vec::new();
        for line in lines {
            let (key, rest) = line.trim().split_once(' ').unwrap_or((line.trim(), ""));
            match key {
                "name" => name = Some(rest.to_string()),
                "m" => m = Some(parse_num::<usize>(rest)?),
                "d" => d = Some(parse_num::<usize>(rest)?),
                "coef_frac" => coef_frac = Some(parse_num::<u32>(rest)?),
                "tail" => tail = Some(Tail::parse(rest)?),
                "delta" => delta = Some(parse_num::<f64>(rest)?),
                "max_error" => max_error = Some(parse_num::<f64>(rest)?),
                "breakpoints" => {
                    breakpoints = rest.split_whitespace().map(parse_num::<f64>).collect::<Result<_>>()?
                }
                "coef" => {
                    for v in rest.split_whitespace() {
                        coeffs.push(parse_num::<f64>(v)?);
                    }
                }
                other => return Err(Error::Format(format!("unknown key {other}"))),
            }
        }
        let miss = |k: &str| Error::Format(format!("missing field {k}"));
        let m = m.ok_or_else(|| miss("m"))?;
        let d = d.ok_or_else(|| miss("d"))?;
        if breakpoints.len() != m || coeffs.len() != m * (d + 1) {
            return Err(Error::Format("table size does not match m and d".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("breakpoints not strictly increasing".into()));
        }
        Ok(PiecewisePoly {
            name: name.ok_or_else(|| miss("name"))?,
            d,
            breakpoints,
            coeffs,
            tail: tail.ok_or_else(|| miss("tail"))?,
            coef_frac: coef_frac.ok_or_else(|| miss("coef_frac"))?,
            delta: delta.ok_or_else(|| miss("delta"))?,
            max_error: max_error.ok_or_else(|| miss("max_error"))?,
        })
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse number {s:?}")))
}

/// Plaintext mirror of the doubling power schedule, `pows[j] = x^j` at
/// scale `f` (index 0 unused).
pub fn fxp_powers(cfg: &FxpConfig, x: u64, d: usize) -> Vec<u64> {
    let f = cfg.frac();
    let mut pows = vec![0u64; d + 1];
    if d >= 1 {
        pows[1] = x;
    }
    let mut j = 1;
    while j < d {
        let t = j.min(d - j);
        for k in 1..=t {
            pows[j + k] = cfg.arith_shift_right(RingValue(cfg.mul(pows[k], pows[j])), f).0;
        }
        j += t;
    }
    pows
}
