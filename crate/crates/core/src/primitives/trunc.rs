use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::AShare;
use crate::ring::FxpConfig;

/// How a share is divided by a power of two.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncMode {
    /// Local share shifting with the usual one-bit error. Zero communication;
    /// fails with probability about `|x| / 2^(ell-1)` on the raw value.
    Faithful,
    /// The caller guarantees the signed value is non-negative (MSB 0). The
    /// wrap bit is computed with one OT, so the result never fails.
    KnownMsb0,
    /// `|x| <= bound` (raw ring units, at the input scale). Computes the
    /// known-MSB truncation of `x + bound` and subtracts `bound >> bits`.
    PublicOffset { bound: u64 },
    /// Exact floor division for `|x| <= bound`: the low-bit carry is
    /// computed with a comparison, so the reconstruction does not depend on
    /// the share randomness.
    Exact { bound: u64 },
}

fn offset_for(cfg: &FxpConfig, bound: u64, bits: u32) -> Result<u64> {
    let step = 1u64 << bits;
    let offset = bound
        .checked_add(step - 1)
        .map(|b| b / step * step)
        .ok_or_else(|| Error::Config("truncation bound overflow".into()))?;
    if offset >= 1u64 << (cfg.ell() - 2) {
        return Err(Error::Config(format!(
            "truncation bound {bound} leaves no headroom at ell {}",
            cfg.ell()
        )));
    }
    Ok(offset)
}

/// Local truncation of one party's share: party 0 shifts its share, party 1
/// shifts the negation of its share.
pub fn trunc_local(cfg: &FxpConfig, x: &AShare, bits: u32) -> AShare {
    if bits == 0 {
        return x.clone();
    }
    if x.party == 0 {
        x.map(|v| v >> bits)
    } else {
        x.map(|v| cfg.neg(cfg.neg(v) >> bits))
    }
}

impl Party {
    pub fn trunc(&mut self, x: &AShare, bits: u32, mode: TruncMode) -> Result<AShare> {
        let cfg = self.cfg();
        if bits >= cfg.ell() - 1 {
            return Err(Error::Config(format!("truncation by {bits} bits at ell {}", cfg.ell())));
        }
        let mode = if self.exact_trunc {
            match mode {
                TruncMode::Faithful => TruncMode::Exact {
                    bound: 1u64 << (cfg.ell() - 3),
                },
                TruncMode::KnownMsb0 => TruncMode::Exact { bound: 0 },
                TruncMode::PublicOffset { bound } | TruncMode::Exact { bound } => TruncMode::Exact { bound },
            }
        } else {
            mode
        };
        match mode {
            TruncMode::Faithful => Ok(trunc_local(&cfg, x, bits)),
            TruncMode::KnownMsb0 => self.trunc_known_msb(x, bits),
            TruncMode::PublicOffset { bound } | TruncMode::Exact { bound } => {
                let offset = offset_for(&cfg, bound, bits)?;
                let shifted = x.add_public_scalar(&cfg, offset);
                let t = if matches!(mode, TruncMode::Exact { .. }) {
                    self.trunc_exact_msb0(&shifted, bits)?
                } else {
                    self.trunc_known_msb(&shifted, bits)?
                };
                Ok(t.add_public_scalar(&cfg, cfg.neg(offset >> bits)))
            }
        }
    }

    /// Shares of `m0 * m1` for the local MSBs of a share pair, plus the
    /// local MSB bits.
    fn msb_product(&mut self, x: &AShare) -> Result<(Vec<u8>, Vec<u64>)> {
        let cfg = self.cfg();
        let n = x.len();
        let my_msb: Vec<u8> = x.data.iter().map(|&v| cfg.msb(v)).collect();
        let prod = if self.id() == 0 {
            let vals: Vec<u64> = my_msb.iter().map(|&m| m as u64).collect();
            self.ot_product_one(0, Some(&vals), None, n)?
        } else {
            self.ot_product_one(0, None, Some(&my_msb), n)?
        };
        Ok((my_msb, prod))
    }

    /// Exact `floor(x / 2^bits)` for a non-negative shared value:
    /// `x0 >> k + x1 >> k + carry(low bits) - wrap * 2^(ell-k)`.
    fn trunc_exact_msb0(&mut self, x: &AShare, bits: u32) -> Result<AShare> {
        let cfg = self.cfg();
        let n = x.len();
        if bits == 0 || n == 0 {
            return Ok(x.clone());
        }
        // wrap = m0 OR m1 when the value itself has MSB 0
        let (my_msb, prod) = self.msb_product(x)?;
        let low_mask = (1u64 << bits) - 1;
        let inputs: Vec<u64> = if self.id() == 0 {
            x.data.iter().map(|v| v & low_mask).collect()
        } else {
            x.data.iter().map(|v| low_mask - (v & low_mask)).collect()
        };
        let carry = self.millionaires(&inputs, bits)?;
        let carry = self.b2a(&carry)?;
        let high = 1u64 << (cfg.ell() - bits);
        let data = (0..n)
            .map(|k| {
                let wrap = cfg.sub(my_msb[k] as u64, prod[k]);
                cfg.sub(cfg.add(x.data[k] >> bits, carry.data[k]), cfg.mul(wrap, high))
            })
            .collect();
        self.counters.trunc_exact_slots += n as u64;
        Ok(AShare {
            party: x.party,
            rows: x.rows,
            cols: x.cols,
            data,
        })
    }

    fn trunc_known_msb(&mut self, x: &AShare, bits: u32) -> Result<AShare> {
        let cfg = self.cfg();
        let n = x.len();
        if bits == 0 || n == 0 {
            return Ok(x.clone());
        }
        // with MSB(x) = 0 the shares wrap iff either share has its MSB set;
        // nowrap = (1 - m0)(1 - m1) = 1 - m0 - m1 + m0*m1
        let (my_msb, prod) = self.msb_product(x)?;
        let high = 1u64 << (cfg.ell() - bits);
        let data = (0..n)
            .map(|k| {
                let v = x.data[k];
                let local = if self.id() == 0 {
                    v >> bits
                } else {
                    // floor((2^ell - v) / 2^bits) with 2^ell - 0 = 2^ell
                    let t = ((1u128 << cfg.ell()) - v as u128) >> bits;
                    cfg.neg(t as u64 & cfg.mask())
                };
                let mut nowrap = cfg.sub(prod[k], my_msb[k] as u64);
                if self.id() == 0 {
                    nowrap = cfg.add(nowrap, 1);
                }
                cfg.add(local, cfg.mul(nowrap, high))
            })
            .collect();
        self.counters.trunc_exact_slots += n as u64;
        Ok(AShare {
            party: x.party,
            rows: x.rows,
            cols: x.cols,
            data,
        })
    }
}
