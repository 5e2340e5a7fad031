use super::tables::{table, Activation};
use crate::approx::PiecewisePoly;
use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::{AShare, TruncMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OppeVariant {
    /// Selection by MUX over telescoped piece values.
    East,
    /// B2A of the comparison bits, one-hot piece mask and share-by-share
    /// products with the selected coefficients.
    NfgenBaseline,
}

impl Party {
    /// Powers `(1, x, ..., x^d)` by the doubling schedule. Index 0 is the
    /// public constant 1 held by party 0.
    pub fn calculate_kx(&mut self, x: &AShare, d: usize) -> Result<Vec<AShare>> {
        if d == 0 {
            return Err(Error::Config("polynomial degree must be at least 1".into()));
        }
        let cfg = self.cfg();
        let one = AShare::zeros(x.party, x.rows, x.cols).add_public_scalar(&cfg, 1u64 << cfg.frac());
        let mut pows = vec![one, x.clone()];
        let mut j = 1;
        while j < d {
            let t = j.min(d - j);
            let lhs: Vec<&AShare> = pows[1..=t].iter().collect();
            let rhs: Vec<&AShare> = std::iter::repeat(&pows[j]).take(t).collect();
            let prod = self.mul(&AShare::concat(&lhs), &AShare::concat(&rhs))?;
            let n = x.len();
            for k in 0..t {
                let part = AShare::vector(x.party, prod.data[k * n..(k + 1) * n].to_vec());
                pows.push(part.reshape(x.rows, x.cols)?);
            }
            j += t;
        }
        Ok(pows)
    }

    /// Oblivious evaluation of a public piecewise polynomial.
    pub fn oppe(&mut self, x: &AShare, poly: &PiecewisePoly, variant: OppeVariant) -> Result<AShare> {
        let cfg = self.cfg();
        let n = x.len();
        let m = poly.m();
        let d = poly.d;
        let fc = poly.effective_coef_frac(&cfg);
        let ws = poly.encoded_breakpoints(&cfg)?;
        let cs = poly.encoded_coeffs(&cfg)?;

        // all m comparisons in one batch: block i holds 1{x > w_i}
        let reps: Vec<&AShare> = std::iter::repeat(x).take(m).collect();
        let xr = AShare::concat(&reps);
        let thresholds: Vec<u64> = ws.iter().flat_map(|&w| std::iter::repeat(w).take(n)).collect();
        let comp = self.gt_const(&xr, &thresholds)?;
        let pows = self.calculate_kx(x, d)?;

        let sum_blocks = |v: &AShare| -> Vec<u64> {
            let mut out = vec![0u64; n];
            for i in 0..m {
                for e in 0..n {
                    out[e] = cfg.add(out[e], v.data[i * n + e]);
                }
            }
            out
        };

        let raw = match variant {
            OppeVariant::East => {
                // y_i at scale f + fc, then z_i = y_i - y_{i-1}
                let mut z = Vec::with_capacity(m * n);
                let mut prev = vec![0u64; n];
                for i in 0..m {
                    let mut y = vec![0u64; n];
                    for (j, p) in pows.iter().enumerate() {
                        let c = cs[i * (d + 1) + j];
                        for e in 0..n {
                            y[e] = cfg.add(y[e], cfg.mul(c, p.data[e]));
                        }
                    }
                    for e in 0..n {
                        z.push(cfg.sub(y[e], prev[e]));
                    }
                    prev = y;
                }
                let v = self.mux(&comp, &AShare::vector(x.party, z))?;
                sum_blocks(&v)
            }
            OppeVariant::NfgenBaseline => {
                let b = self.b2a(&comp)?;
                // mask_i = b_i - b_{i+1}: one-hot on the active piece
                let mut coeff = vec![vec![0u64; n]; d + 1];
                for i in 0..m {
                    for e in 0..n {
                        let bi = b.data[i * n + e];
                        let next = if i + 1 < m { b.data[(i + 1) * n + e] } else { 0 };
                        let mask = cfg.sub(bi, next);
                        for (j, cj) in coeff.iter_mut().enumerate() {
                            cj[e] = cfg.add(cj[e], cfg.mul(mask, cs[i * (d + 1) + j]));
                        }
                    }
                }
                let coeff: Vec<AShare> = coeff.into_iter().map(|c| AShare::vector(x.party, c)).collect();
                let flat: Vec<AShare> = pows.iter().map(|p| AShare::vector(x.party, p.data.clone())).collect();
                let pairs: Vec<(&AShare, &AShare)> = coeff.iter().zip(&flat).collect();
                let prods = self.mul_raw_many(&pairs)?;
                let mut out = vec![0u64; n];
                for p in &prods {
                    for e in 0..n {
                        out[e] = cfg.add(out[e], p.data[e]);
                    }
                }
                out
            }
        };
        let y = AShare::matrix(x.party, x.rows, x.cols, raw)?;
        self.trunc(&y, fc, TruncMode::Faithful)
    }

    pub fn gelu(&mut self, x: &AShare) -> Result<AShare> {
        self.gelu_with(x, OppeVariant::East)
    }

    pub fn gelu_with(&mut self, x: &AShare, variant: OppeVariant) -> Result<AShare> {
        let t = table(Activation::Gelu, &self.cfg())?;
        self.oppe(x, &t, variant)
    }

    pub fn tanh(&mut self, x: &AShare) -> Result<AShare> {
        self.tanh_with(x, OppeVariant::East)
    }

    pub fn tanh_with(&mut self, x: &AShare, variant: OppeVariant) -> Result<AShare> {
        let cfg = self.cfg();
        let t = table(Activation::Tanh1, &cfg)?;
        let y = self.oppe(x, &t, variant)?;
        Ok(y.add_public_scalar(&cfg, cfg.neg(1u64 << cfg.frac())))
    }

    /// `exp(x)` for inputs known to be non-positive.
    pub fn exp_neg(&mut self, x: &AShare) -> Result<AShare> {
        self.exp_neg_with(x, OppeVariant::East)
    }

    pub fn exp_neg_with(&mut self, x: &AShare, variant: OppeVariant) -> Result<AShare> {
        let t = table(Activation::Exp, &self.cfg())?;
        self.oppe(x, &t, variant)
    }
}
