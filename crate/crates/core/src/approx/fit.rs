use super::piecewise::{PiecewisePoly, Tail};
use crate::error::{Error, Result};
use crate::ring::FxpConfig;

pub const DEFAULT_COEF_FRAC: u32 = 28;
const CERT_POINTS: usize = 10_000;
const REFINE_ROUNDS: usize = 80;
const NODES_PER_DEGREE: usize = 8;
const PIECE_PROBES: usize = 96;
const SNAP: f64 = (1u64 << 40) as f64;

/// Fitting request. `pieces` counts every row of the final table, tail row
/// included.
#[derive(Clone, Debug)]
pub struct FitSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub pieces: usize,
    pub degree: usize,
    pub delta: f64,
    pub tail: Tail,
    /// Extra range probed by the certificate left of `lo` (and right of
    /// `hi` unless the tail is finite).
    pub margin: f64,
}

/// Least-squares fit of one piece on Chebyshev nodes, returned as monomial
/// coefficients in `x`.
pub fn fit_piece(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, d: usize) -> Vec<f64> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let n = NODES_PER_DEGREE * (d + 1);
    let mut ata = vec![0.0; (d + 1) * (d + 1)];
    let mut atb = vec![0.0; d + 1];
    for k in 0..n {
        let t = -((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
        let y = f(c + h * t);
        let mut p = vec![1.0; d + 1];
        for j in 1..=d {
            p[j] = p[j - 1] * t;
        }
        for r in 0..=d {
            atb[r] += p[r] * y;
            for s in 0..=d {
                ata[r * (d + 1) + s] += p[r] * p[s];
            }
        }
    }
    let a = solve(&mut ata, &mut atb, d + 1);
    // expand sum_k a_k ((x - c)/h)^k into powers of x
    let mut out = vec![0.0; d + 1];
    for (k, &ak) in a.iter().enumerate() {
        let scale = ak / h.powi(k as i32);
        for j in 0..=k {
            out[j] += scale * binom(k, j) * (-c).powi((k - j) as i32);
        }
    }
    out
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(a: &mut [f64], b: &mut [f64], n: usize) -> Vec<f64> {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let fac = a[r * n + col] / p;
            for k in col..n {
                a[r * n + k] -= fac * a[col * n + k];
            }
            b[r] -= fac * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn piece_error(f: &dyn Fn(f64) -> f64, c: &[f64], lo: f64, hi: f64) -> f64 {
    (0..=PIECE_PROBES)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / PIECE_PROBES as f64;
            (horner(c, x) - f(x)).abs()
        })
        .fold(0.0, f64::max)
}

fn build(spec: &FitSpec, f: &dyn Fn(f64) -> f64, edges: &[f64]) -> PiecewisePoly {
    let d = spec.degree;
    let mut breakpoints: Vec<f64> = edges[..edges.len() - 1].to_vec();
    let mut coeffs = Vec::new();
    for w in edges.windows(2) {
        coeffs.extend(fit_piece(f, w[0], w[1], d));
    }
    let mut tail_row = |row: Vec<f64>| {
        breakpoints.push(spec.hi);
        coeffs.extend(row);
    };
    match spec.tail {
        Tail::ZeroLeftIdentityRight => {
            let mut r = vec![0.0; d + 1];
            r[1] = 1.0;
            tail_row(r);
        }
        Tail::ZeroLeftConstantRight(k) => {
            let mut r = vec![0.0; d + 1];
            r[0] = k;
            tail_row(r);
        }
        Tail::Finite => {}
    }
    // snap to a 2^-40 grid so exact fits come out exact
    for c in coeffs.iter_mut() {
        *c = (*c * SNAP).round() / SNAP;
    }
    PiecewisePoly {
        name: spec.name.clone(),
        d,
        breakpoints,
        coeffs,
        tail: spec.tail,
        coef_frac: DEFAULT_COEF_FRAC,
        delta: spec.delta,
        max_error: f64::NAN,
    }
}

/// Max error of the simulated fixed-point evaluation against `f` over a
/// dense grid of representable points, tails included.
pub fn certify(poly: &PiecewisePoly, f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, cfg: &FxpConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..CERT_POINTS {
        let x = lo + (hi - lo) * k as f64 / (CERT_POINTS - 1) as f64;
        let x = cfg.decode(cfg.encode(x)?);
        let err = (poly.eval_fxp(cfg, x)? - f(x)).abs();
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Piecewise polynomial fit with adaptive breakpoint equidistribution. The
/// result carries its fixed-point certificate; a table that misses
/// `spec.delta` is reported as [`Error::Fit`].
pub fn fit_piecewise(f: &dyn Fn(f64) -> f64, spec: &FitSpec, cfg: &FxpConfig) -> Result<PiecewisePoly> {
    let fitted = match spec.tail {
        Tail::Finite => spec.pieces,
        _ => spec.pieces.checked_sub(1).unwrap_or(0),
    };
    if fitted == 0 || spec.degree == 0 || !(spec.lo < spec.hi) {
        return Err(Error::Config(format!(
            "invalid fit request: {} pieces of degree {} on [{}, {}]",
            spec.pieces, spec.degree, spec.lo, spec.hi
        )));
    }
    let span = spec.hi - spec.lo;
    let mut widths = vec![span / fitted as f64; fitted];
    let edges_of = |w: &[f64]| {
        let mut e = vec![spec.lo];
        for x in w {
            e.push(e.last().unwrap() + x);
        }
        *e.last_mut().unwrap() = spec.hi;
        e
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let expo = 1.0 / (spec.degree as f64 + 1.0);
    for _ in 0..REFINE_ROUNDS {
        let edges = edges_of(&widths);
        let errs: Vec<f64> = edges
            .windows(2)
            .map(|w| piece_error(f, &fit_piece(f, w[0], w[1], spec.degree), w[0], w[1]).max(1e-15))
            .collect();
        let worst = errs.iter().copied().fold(0.0, f64::max);
        if best.as_ref().map_or(true, |(b, _)| worst < *b) {
            best = Some((worst, edges.clone()));
        }
        // equidistribute: err_i ~ C_i w_i^(d+1), damped halfway step
        let target: Vec<f64> = widths
            .iter()
            .zip(&errs)
            .map(|(w, e)| w * e.powf(-expo))
            .collect();
        let total: f64 = target.iter().sum();
        for (w, t) in widths.iter_mut().zip(&target) {
            *w = (*w * t * span / total).sqrt();
        }
        let norm: f64 = widths.iter().sum();
        for w in widths.iter_mut() {
            *w *= span / norm;
        }
    }
    let (_, edges) = best.expect("at least one refinement round");
    let mut poly = build(spec, f, &edges);
    let grid_hi = match spec.tail {
        Tail::Finite => spec.hi,
        _ => spec.hi + spec.margin,
    };
    poly.max_error = certify(&poly, f, spec.lo - spec.margin, grid_hi, cfg)?;
    if poly.max_error > spec.delta {
        return Err(Error::Fit {
            target: spec.delta,
            achieved: poly.max_error,
        });
    }
    Ok(poly)
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// `tanh(x) + 1`, which vanishes on the far left like the other tables.
pub fn tanh1(x: f64) -> f64 {
    x.tanh() + 1.0
}

pub const FIT_DELTA: f64 = 1.0 / 256.0;

pub fn gelu_spec() -> FitSpec {
    FitSpec {
        name: "gelu".into(),
        lo: -5.0,
        hi: 5.0,
        pieces: 8,
        degree: 3,
        delta: FIT_DELTA,
        tail: Tail::ZeroLeftIdentityRight,
        margin: 3.0,
    }
}

pub fn tanh1_spec() -> FitSpec {
    FitSpec {
        name: "tanh1".into(),
        lo: -4.0,
        hi: 4.0,
        pieces: 7,
        degree: 3,
        delta: FIT_DELTA,
        tail: Tail::ZeroLeftConstantRight(2.0),
        margin: 3.0,
    }
}

pub fn exp_spec() -> FitSpec {
    FitSpec {
        name: "exp".into(),
        lo: -16.0,
        hi: 0.0,
        pieces: 8,
        degree: 3,
        delta: FIT_DELTA,
        tail: Tail::Finite,
        margin: 4.0,
    }
}

pub fn fit_gelu(cfg: &FxpConfig) -> Result<PiecewisePoly> {
    fit_piecewise(&gelu, &gelu_spec(), cfg)
}

pub fn fit_tanh1(cfg: &FxpConfig) -> Result<PiecewisePoly> {
    fit_piecewise(&tanh1, &tanh1_spec(), cfg)
}

pub fn fit_exp(cfg: &FxpConfig) -> Result<PiecewisePoly> {
    fit_piecewise(&f64::exp, &exp_spec(), cfg)
}
