use super::newton::NewtonPrecision;
use super::tables::invsqrt_plan;
use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::{AShare, TruncMode};

/// Server-held affine parameters of a layer normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct LnAffine {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerNormParams {
    pub eps: f64,
    /// Static bound on `|x_j|`, used to scale the sum of squares into the
    /// inverse square root domain.
    pub input_bound: f64,
    pub delta: f64,
}

impl Default for LayerNormParams {
    fn default() -> Self {
        LayerNormParams {
            eps: 1e-5,
            input_bound: 16.0,
            delta: 1.0 / 4096.0,
        }
    }
}

/// Domain of the scaled sum of squares handed to the inverse square root.
pub const LN_DOMAIN: (f64, f64) = (1.0 / 4096.0, 4.0);

/// Public scaling exponent `k` with `sum z^2 * 2^(-2k) <= 4`.
pub fn ln_scale_exponent(n: usize, input_bound: f64) -> u32 {
    ((n as f64).powf(1.5) * input_bound).log2().ceil().max(0.0) as u32
}

impl Party {
    /// Layer normalization of each row of `x`. The server passes its
    /// `affine` parameters, the client passes `None`.
    pub fn layernorm(&mut self, x: &AShare, affine: Option<&LnAffine>, params: &LayerNormParams) -> Result<AShare> {
        let cfg = self.cfg();
        let (rows, n) = (x.rows, x.cols);
        let f = cfg.frac();
        let fw = (f + 12).min((cfg.ell() - 16) / 2).max(f);
        let k = ln_scale_exponent(n, params.input_bound);
        if let Some(a) = affine {
            if a.gamma.len() != n || a.beta.len() != n {
                return Err(Error::Shape(format!("layernorm affine of width {} on rows of {n}", a.gamma.len())));
            }
        }
        if self.id() == 0 && affine.is_none() {
            return Err(Error::Config("the server must supply layernorm weights".into()));
        }

        // z_j = n x_j - sum x, s = sum z^2 + n^3 eps at scale 2f
        let total = x.row_sums(&cfg).broadcast_cols(n);
        let z = x.scale(&cfg, n as u64).sub(&cfg, &total)?;
        let zz = self.mul_raw(&z, &z)?;
        let nf = n as f64;
        let eps = cfg.encode_at(nf * nf * nf * params.eps, 2 * f)?;
        let s = zz.row_sums(&cfg).add_public_scalar(&cfg, eps);

        // s * 2^(-2k) at the working precision fw
        let s_scaled = if 2 * f + 2 * k >= fw {
            self.trunc(&s, 2 * f + 2 * k - fw, TruncMode::KnownMsb0)?
        } else {
            s.scale(&cfg, 1u64 << (fw - 2 * f - 2 * k))
        };
        let plan = invsqrt_plan(LN_DOMAIN.0, LN_DOMAIN.1, params.delta)?;
        let prec = NewtonPrecision {
            frac: fw,
            mode: TruncMode::KnownMsb0,
        };
        let r = self.invsqrt_with(&s_scaled, &plan, prec)?;

        // u = z * r * 2^(-k), exact so that z = 0 stays 0
        let zr = self.mul_raw(&z, &r.broadcast_cols(n))?;
        let z_max = 2.0 * nf * params.input_bound * cfg.scale();
        let r_max = LN_DOMAIN.0.powf(-0.5) * 2f64.powi(fw as i32);
        let bound = (2.0 * z_max * r_max).min(2f64.powi(cfg.ell() as i32 - 3)) as u64;
        let u = self.trunc(&zr, fw + k, TruncMode::Exact { bound })?;

        let (g, b) = match affine {
            Some(a) => {
                let g: Vec<u64> = a
                    .gamma
                    .iter()
                    .map(|&v| cfg.encode(v * nf.sqrt()).map(|r| r.0))
                    .collect::<Result<_>>()?;
                let b: Vec<u64> = a.beta.iter().map(|&v| cfg.encode(v).map(|r| r.0)).collect::<Result<_>>()?;
                (g, b)
            }
            None => (vec![0; n], vec![0; n]),
        };
        let g_rows: Vec<u64> = (0..rows).flat_map(|_| g.iter().copied()).collect();
        let b_rows: Vec<u64> = (0..rows).flat_map(|_| b.iter().copied()).collect();
        let gs = AShare::public(x.party, rows, n, &g_rows);
        let y = self.mul(&u, &gs)?;
        y.add_public(&cfg, &b_rows)
    }
}
