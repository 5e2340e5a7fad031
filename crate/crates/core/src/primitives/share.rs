use rand::Rng;

use crate::error::{Error, Result};
use crate::party::Party;
use crate::ring::FxpConfig;

/// One party's additive share of a ring tensor: `<x>_0 + <x>_1 = x mod 2^ell`.
/// Tensors are row-major; vectors have one row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AShare {
    pub party: u8,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

/// One party's XOR share of a bit per slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BShare {
    pub party: u8,
    pub bits: Vec<u8>,
}

impl AShare {
    pub fn vector(party: u8, data: Vec<u64>) -> Self {
        AShare {
            party,
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    pub fn matrix(party: u8, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix from {} values",
                data.len()
            )));
        }
        Ok(AShare {
            party,
            rows,
            cols,
            data,
        })
    }

    pub fn zeros(party: u8, rows: usize, cols: usize) -> Self {
        AShare {
            party,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    /// Share of a public tensor: party 0 holds the values, party 1 zeros.
    pub fn public(party: u8, rows: usize, cols: usize, vals: &[u64]) -> Self {
        let data = if party == 0 {
            vals.to_vec()
        } else {
            vec![0; vals.len()]
        };
        AShare {
            party,
            rows,
            cols,
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(mut self, rows: usize, cols: usize) -> Result<Self> {
        if rows * cols != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {} values to {rows}x{cols}",
                self.data.len()
            )));
        }
        self.rows = rows;
        self.cols = cols;
        Ok(self)
    }

    fn same_len(&self, o: &AShare) -> Result<()> {
        if self.data.len() != o.data.len() {
            return Err(Error::Shape(format!(
                "element-wise op on {} vs {} slots",
                self.data.len(),
                o.data.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, cfg: &FxpConfig, o: &AShare) -> Result<AShare> {
        self.same_len(o)?;
        Ok(self.map2(o, |a, b| cfg.add(a, b)))
    }

    pub fn sub(&self, cfg: &FxpConfig, o: &AShare) -> Result<AShare> {
        self.same_len(o)?;
        Ok(self.map2(o, |a, b| cfg.sub(a, b)))
    }

    pub fn neg(&self, cfg: &FxpConfig) -> AShare {
        self.map(|a| cfg.neg(a))
    }

    /// Adds public ring values slot-wise (party 0 applies them).
    pub fn add_public(&self, cfg: &FxpConfig, vals: &[u64]) -> Result<AShare> {
        if vals.len() != self.data.len() {
            return Err(Error::Shape("public operand length".into()));
        }
        if self.party != 0 {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        for (d, &v) in out.data.iter_mut().zip(vals) {
            *d = cfg.add(*d, v);
        }
        Ok(out)
    }

    pub fn add_public_scalar(&self, cfg: &FxpConfig, v: u64) -> AShare {
        if self.party != 0 {
            return self.clone();
        }
        self.map(|a| cfg.add(a, v))
    }

    /// `public - self`.
    pub fn rsub_public_scalar(&self, cfg: &FxpConfig, v: u64) -> AShare {
        self.neg(cfg).add_public_scalar(cfg, v)
    }

    /// Multiplies every slot by a public ring element (no truncation).
    pub fn scale(&self, cfg: &FxpConfig, k: u64) -> AShare {
        self.map(|a| cfg.mul(a, k))
    }

    /// Slot-wise product with public ring values (no truncation).
    pub fn mul_public(&self, cfg: &FxpConfig, vals: &[u64]) -> Result<AShare> {
        if vals.len() != self.data.len() {
            return Err(Error::Shape("public operand length".into()));
        }
        Ok(AShare {
            party: self.party,
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(vals)
                .map(|(&a, &b)| cfg.mul(a, b))
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(u64) -> u64) -> AShare {
        AShare {
            party: self.party,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    fn map2(&self, o: &AShare, f: impl Fn(u64, u64) -> u64) -> AShare {
        AShare {
            party: self.party,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Sum of each row, as a column vector (`rows x 1`).
    pub fn row_sums(&self, cfg: &FxpConfig) -> AShare {
        let data = self
            .data
            .chunks(self.cols.max(1))
            .map(|r| r.iter().fold(0u64, |acc, &v| cfg.add(acc, v)))
            .collect();
        AShare {
            party: self.party,
            rows: self.rows,
            cols: 1,
            data,
        }
    }

    /// Repeats each slot of a column vector `cols` times.
    pub fn broadcast_cols(&self, cols: usize) -> AShare {
        let data = self
            .data
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, cols))
            .collect();
        AShare {
            party: self.party,
            rows: self.data.len(),
            cols,
            data,
        }
    }

    pub fn transpose(&self) -> AShare {
        let mut data = vec![0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        AShare {
            party: self.party,
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Columns `[start, start + width)` as a new matrix.
    pub fn col_slice(&self, start: usize, width: usize) -> AShare {
        let mut data = Vec::with_capacity(self.rows * width);
        for i in 0..self.rows {
            data.extend_from_slice(&self.data[i * self.cols + start..i * self.cols + start + width]);
        }
        AShare {
            party: self.party,
            rows: self.rows,
            cols: width,
            data,
        }
    }

    /// Rows `[start, start + n)`.
    pub fn row_slice(&self, start: usize, n: usize) -> AShare {
        AShare {
            party: self.party,
            rows: n,
            cols: self.cols,
            data: self.data[start * self.cols..(start + n) * self.cols].to_vec(),
        }
    }

    /// Horizontal concatenation of equally tall matrices.
    pub fn hconcat(parts: &[AShare]) -> Result<AShare> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::Shape("hconcat of different heights".into()));
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(&p.data[i * p.cols..(i + 1) * p.cols]);
            }
        }
        Ok(AShare {
            party: parts.first().map_or(0, |p| p.party),
            rows,
            cols,
            data,
        })
    }

    /// Concatenates the slot vectors of several shares.
    pub fn concat(parts: &[&AShare]) -> AShare {
        let data: Vec<u64> = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        AShare::vector(parts.first().map_or(0, |p| p.party), data)
    }
}

impl BShare {
    pub fn new(party: u8, bits: Vec<u8>) -> Self {
        BShare { party, bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// XOR with a public bit vector (party 0 applies it).
    pub fn xor_public(&self, pubs: &[u8]) -> BShare {
        if self.party != 0 {
            return self.clone();
        }
        BShare {
            party: self.party,
            bits: self.bits.iter().zip(pubs).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub fn not(&self) -> BShare {
        self.xor_public(&vec![1; self.bits.len()])
    }

    pub fn xor(&self, o: &BShare) -> BShare {
        BShare {
            party: self.party,
            bits: self.bits.iter().zip(&o.bits).map(|(a, b)| a ^ b).collect(),
        }
    }
}

/// Splits `x` into two uniformly random additive shares.
pub fn share<R: Rng>(cfg: &FxpConfig, x: &[u64], rng: &mut R) -> (AShare, AShare) {
    let s0: Vec<u64> = x.iter().map(|_| rng.gen::<u64>() & cfg.mask()).collect();
    let s1 = x.iter().zip(&s0).map(|(&v, &r)| cfg.sub(v, r)).collect();
    (AShare::vector(0, s0), AShare::vector(1, s1))
}

pub fn reconstruct(cfg: &FxpConfig, s0: &AShare, s1: &AShare) -> Vec<u64> {
    s0.data.iter().zip(&s1.data).map(|(&a, &b)| cfg.add(a, b)).collect()
}

pub fn reconstruct_bits(s0: &BShare, s1: &BShare) -> Vec<u8> {
    s0.bits.iter().zip(&s1.bits).map(|(a, b)| a ^ b).collect()
}

impl Party {
    /// Secret-shares `owner`'s private values (`Some` on the owner, `None` on
    /// the peer) with one message from the owner.
    pub fn share_input(
        &mut self,
        owner: u8,
        values: Option<&[u64]>,
        rows: usize,
        cols: usize,
    ) -> Result<AShare> {
        let cfg = self.cfg();
        let n = rows * cols;
        if self.id() == owner {
            let vals = values.ok_or_else(|| Error::Protocol("owner must supply input".into()))?;
            if vals.len() != n {
                return Err(Error::Shape(format!("input of {} values for {rows}x{cols}", vals.len())));
            }
            let mask: Vec<u64> = (0..n).map(|_| self.rng.gen::<u64>() & cfg.mask()).collect();
            let other: Vec<u64> = vals.iter().zip(&mask).map(|(&v, &m)| cfg.sub(v, m)).collect();
            self.chan.send(&cfg.pack(&other))?;
            self.chan.flush()?;
            AShare::matrix(self.id(), rows, cols, mask)
        } else {
            let got = cfg.unpack(&self.chan.recv()?)?;
            if got.len() != n {
                return Err(Error::Protocol("input share length".into()));
            }
            AShare::matrix(self.id(), rows, cols, got)
        }
    }

    /// Reveals a shared tensor to both parties.
    pub fn open(&mut self, x: &AShare) -> Result<Vec<u64>> {
        let cfg = self.cfg();
        let other = self.exchange_ring(&x.data)?;
        Ok(x.data.iter().zip(&other).map(|(&a, &b)| cfg.add(a, b)).collect())
    }

    /// Reveals shared bits to both parties.
    pub fn open_bits(&mut self, b: &BShare) -> Result<Vec<u8>> {
        let got = self.chan.exchange(&crate::ring::pack_bits(&b.bits))?;
        let other = crate::ring::unpack_bits(&got, b.len())?;
        Ok(b.bits.iter().zip(other).map(|(x, y)| x ^ y).collect())
    }
}
