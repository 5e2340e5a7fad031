//! Arithmetic in `Z_{2^ell}` and the two's-complement fixed-point encoding
//! used by every protocol in the crate.
//!
//! Ring elements are stored in a `u64` and reduced with [`FxpConfig::mask`];
//! for `ell = 64` the mask is all ones and reduction is the native wrap.

use crate::error::{Error, Result};

/// Ring width and fraction bits shared by both parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FxpConfig {
    ell: u32,
    frac: u32,
}

impl Default for FxpConfig {
    fn default() -> Self {
        FxpConfig { ell: 64, frac: 12 }
    }
}

/// A single element of `Z_{2^ell}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct RingValue(pub u64);

impl FxpConfig {
    pub fn new(ell: u32, frac: u32) -> Result<Self> {
        if !(8..=64).contains(&ell) {
            return Err(Error::Config(format!("ring width {ell} not in [8, 64]")));
        }
        if frac + 2 >= ell {
            return Err(Error::Config(format!(
                "fraction bits {frac} must be below ell - 2 = {}",
                ell - 2
            )));
        }
        Ok(FxpConfig { ell, frac })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn frac(&self) -> u32 {
        self.frac
    }

    /// Same ring width, different number of fraction bits. Used by
    /// sub-protocols that run at a higher internal precision.
    pub fn with_frac(&self, frac: u32) -> Result<Self> {
        FxpConfig::new(self.ell, frac)
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        if self.ell == 64 {
            u64::MAX
        } else {
            (1u64 << self.ell) - 1
        }
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u64 {
        v & self.mask()
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask()
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask()
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a.wrapping_mul(b) & self.mask()
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        a.wrapping_neg() & self.mask()
    }

    #[inline]
    pub fn msb(&self, v: u64) -> u8 {
        ((v >> (self.ell - 1)) & 1) as u8
    }

    /// Signed (two's-complement) interpretation of a reduced ring element.
    #[inline]
    pub fn to_signed(&self, v: u64) -> i64 {
        let shift = 64 - self.ell;
        ((v << shift) as i64) >> shift
    }

    /// Embeds a signed integer into the ring.
    #[inline]
    pub fn from_signed(&self, v: i64) -> u64 {
        (v as u64) & self.mask()
    }

    /// Largest real magnitude bound: the representable range is
    /// `[-2^(ell-1-f), 2^(ell-1-f))`.
    pub fn max_real(&self) -> f64 {
        2f64.powi((self.ell - 1 - self.frac) as i32)
    }

    pub fn scale(&self) -> f64 {
        2f64.powi(self.frac as i32)
    }

    pub fn ulp(&self) -> f64 {
        1.0 / self.scale()
    }

    /// `round(x * 2^f)` mod `2^ell`, ties away from zero.
    pub fn encode(&self, x: f64) -> Result<RingValue> {
        let lim = self.max_real();
        if !x.is_finite() || x < -lim || x >= lim {
            return Err(Error::Range {
                value: x,
                ell: self.ell,
                frac: self.frac,
            });
        }
        // f64::round rounds half away from zero
        let scaled = (x * self.scale()).round();
        let hi = 2f64.powi(self.ell as i32 - 1);
        let clamped = scaled.clamp(-hi, hi - 1.0);
        Ok(RingValue(self.from_signed(clamped as i64)))
    }

    /// Encodes at an explicit fraction-bit count, ignoring `self.frac`.
    pub fn encode_at(&self, x: f64, frac: u32) -> Result<u64> {
        let c = FxpConfig { ell: self.ell, frac };
        c.encode(x).map(|v| v.0)
    }

    pub fn decode(&self, v: RingValue) -> f64 {
        self.to_signed(v.0) as f64 / self.scale()
    }

    pub fn decode_at(&self, v: u64, frac: u32) -> f64 {
        self.to_signed(v) as f64 / 2f64.powi(frac as i32)
    }

    /// Sign-extending right shift of the signed interpretation.
    pub fn arith_shift_right(&self, v: RingValue, k: u32) -> RingValue {
        debug_assert!(k < self.ell);
        RingValue(self.from_signed(self.to_signed(v.0) >> k))
    }

    pub fn encode_vec(&self, xs: &[f64]) -> Result<Vec<u64>> {
        xs.iter().map(|&x| self.encode(x).map(|v| v.0)).collect()
    }

    pub fn decode_vec(&self, vs: &[u64]) -> Vec<f64> {
        vs.iter().map(|&v| self.decode(RingValue(v))).collect()
    }

    /// Bytes needed to carry one ring element on the wire.
    pub fn elem_bytes(&self) -> usize {
        self.ell.div_ceil(8) as usize
    }

    /// Little-endian packing of ring elements using [`Self::elem_bytes`] bytes each.
    pub fn pack(&self, vs: &[u64]) -> Vec<u8> {
        let w = self.elem_bytes();
        let mut out = Vec::with_capacity(vs.len() * w);
        for v in vs {
            out.extend_from_slice(&v.to_le_bytes()[..w]);
        }
        out
    }

    pub fn unpack(&self, bytes: &[u8]) -> Result<Vec<u64>> {
        let w = self.elem_bytes();
        if bytes.len() % w != 0 {
            return Err(Error::Protocol(format!(
                "payload of {} bytes is not a multiple of {w}",
                bytes.len()
            )));
        }
        Ok(bytes
            .chunks_exact(w)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..w].copy_from_slice(c);
                self.reduce(u64::from_le_bytes(buf))
            })
            .collect())
    }
}

/// Packs 0/1 bytes into a bit vector, LSB first.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (i % 8);
    }
    out
}

pub fn unpack_bits(bytes: &[u8], n: usize) -> Result<Vec<u8>> {
    if bytes.len() != n.div_ceil(8) {
        return Err(Error::Protocol(format!(
            "expected {} packed bytes for {n} bits, got {}",
            n.div_ceil(8),
            bytes.len()
        )));
    }
    Ok((0..n).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect())
}

/// Packs values of `width` bits each (width <= 8) densely.
pub fn pack_small(vals: &[u8], width: u32) -> Vec<u8> {
    let total = vals.len() * width as usize;
    let mut out = vec![0u8; total.div_ceil(8)];
    for (i, &v) in vals.iter().enumerate() {
        for b in 0..width as usize {
            let bit = (v >> b) & 1;
            let pos = i * width as usize + b;
            out[pos / 8] |= bit << (pos % 8);
        }
    }
    out
}

pub fn unpack_small(bytes: &[u8], n: usize, width: u32) -> Result<Vec<u8>> {
    let total = n * width as usize;
    if bytes.len() != total.div_ceil(8) {
        return Err(Error::Protocol(format!(
            "expected {} packed bytes, got {}",
            total.div_ceil(8),
            bytes.len()
        )));
    }
    Ok((0..n)
        .map(|i| {
            let mut v = 0u8;
            for b in 0..width as usize {
                let pos = i * width as usize + b;
                v |= ((bytes[pos / 8] >> (pos % 8)) & 1) << b;
            }
            v
        })
        .collect())
}
