//! Secure comparison on additive shares: a millionaires' protocol over
//! 4-bit digits, MSB extraction and the derived `>` tests.

use rand::Rng;

use crate::dealer::NOtHalf;
use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::{AShare, BShare};
use crate::ring::{pack_bits, pack_small, unpack_bits, unpack_small};

const DIGIT: u32 = 4;
const RADIX: usize = 1 << DIGIT;

impl Party {
    /// AND of XOR-shared bit vectors with one boolean Beaver triple per slot.
    pub fn and_bits(&mut self, x: &BShare, y: &BShare) -> Result<BShare> {
        let n = x.len();
        if y.len() != n {
            return Err(Error::Shape("and operand lengths".into()));
        }
        if n == 0 {
            return Ok(BShare::new(self.id(), Vec::new()));
        }
        let t = self.dealer.bit_triples(n)?;
        let mut masked: Vec<u8> = x.bits.iter().zip(&t.a).map(|(v, a)| v ^ a).collect();
        masked.extend(y.bits.iter().zip(&t.b).map(|(v, b)| v ^ b));
        let peer = unpack_bits(&self.chan.exchange(&pack_bits(&masked))?, 2 * n)?;
        let p0 = self.id() == 0;
        let bits = (0..n)
            .map(|i| {
                let d = masked[i] ^ peer[i];
                let e = masked[n + i] ^ peer[n + i];
                t.c[i] ^ (d & t.b[i]) ^ (e & t.a[i]) ^ if p0 { d & e } else { 0 }
            })
            .collect();
        self.counters.and_slots += n as u64;
        Ok(BShare::new(self.id(), bits))
    }

    /// Shares of `1{a > b}` where party 0 holds `a` and party 1 holds `b`,
    /// both `width`-bit unsigned values. Pass the own input, the peer's
    /// slice is ignored.
    pub fn millionaires(&mut self, mine: &[u64], width: u32) -> Result<BShare> {
        let n = mine.len();
        if n == 0 {
            return Ok(BShare::new(self.id(), Vec::new()));
        }
        let q = (width.max(1)).div_ceil(DIGIT) as usize;
        let digit = |v: u64, j: usize| ((v >> (DIGIT as usize * (q - 1 - j))) & (RADIX as u64 - 1)) as u8;
        let slots = n * q;
        let half = self.dealer.random_n_ot(0, slots, RADIX, 2)?;
        // leaf shares: lt[i*q+j] for "greater" and eq for "equal", chunk 0 is most significant
        let (mut g, mut e) = (Vec::with_capacity(slots), Vec::with_capacity(slots));
        match half {
            NOtHalf::Sender(keys) if self.id() == 0 => {
                let shifts = unpack_small(&self.chan.recv()?, slots, DIGIT)?;
                let mut msgs = Vec::with_capacity(slots * RADIX);
                for i in 0..n {
                    for j in 0..q {
                        let s = i * q + j;
                        let a = digit(mine[i], j) as usize;
                        let rg: u8 = self.rng.gen::<u8>() & 1;
                        let re: u8 = self.rng.gen::<u8>() & 1;
                        g.push(rg);
                        e.push(re);
                        for k in 0..RADIX {
                            let m = ((a > k) as u8 ^ rg) | (((a == k) as u8 ^ re) << 1);
                            let kidx = (k + RADIX - shifts[s] as usize) % RADIX;
                            msgs.push(m ^ keys.keys[s * RADIX + kidx]);
                        }
                    }
                }
                self.chan.send(&pack_small(&msgs, 2))?;
                self.chan.flush()?;
            }
            NOtHalf::Receiver(keys) if self.id() == 1 => {
                let mut shifts = Vec::with_capacity(slots);
                let mut choice = Vec::with_capacity(slots);
                for i in 0..n {
                    for j in 0..q {
                        let b = digit(mine[i], j);
                        choice.push(b);
                        shifts.push((b as usize + RADIX - keys.choice[i * q + j] as usize) as u8 % RADIX as u8);
                    }
                }
                self.chan.send(&pack_small(&shifts, DIGIT))?;
                self.chan.flush()?;
                let z = unpack_small(&self.chan.recv()?, slots * RADIX, 2)?;
                for s in 0..slots {
                    let m = z[s * RADIX + choice[s] as usize] ^ keys.key[s];
                    g.push(m & 1);
                    e.push((m >> 1) & 1);
                }
            }
            _ => return Err(Error::Protocol("1-of-N OT role mismatch".into())),
        }
        // combine adjacent chunks level by level, all elements together
        let mut width_now = q;
        while width_now > 1 {
            let pairs = width_now / 2;
            let odd = width_now % 2 == 1;
            let last = width_now / 2 == 1 && !odd;
            let (mut ehi, mut glo, mut elo) = (Vec::new(), Vec::new(), Vec::new());
            for i in 0..n {
                for p in 0..pairs {
                    let hi = i * width_now + 2 * p;
                    ehi.push(e[hi]);
                    glo.push(g[hi + 1]);
                    elo.push(e[hi + 1]);
                }
            }
            let np = ehi.len();
            let mut lhs = ehi.clone();
            let mut rhs = glo;
            if !last {
                lhs.extend_from_slice(&ehi);
                rhs.extend_from_slice(&elo);
            }
            let prod = self.and_bits(&BShare::new(self.id(), lhs), &BShare::new(self.id(), rhs))?;
            let next_w = pairs + odd as usize;
            let (mut ng, mut ne) = (Vec::with_capacity(n * next_w), Vec::with_capacity(n * next_w));
            for i in 0..n {
                for p in 0..pairs {
                    let hi = i * width_now + 2 * p;
                    let k = i * pairs + p;
                    ng.push(g[hi] ^ prod.bits[k]);
                    ne.push(if last { 0 } else { prod.bits[np + k] });
                }
                if odd {
                    ng.push(g[i * width_now + width_now - 1]);
                    ne.push(e[i * width_now + width_now - 1]);
                }
            }
            g = ng;
            e = ne;
            width_now = next_w;
        }
        Ok(BShare::new(self.id(), g))
    }

    /// Shares of the most significant bit of each shared ring element.
    pub fn msb(&mut self, x: &AShare) -> Result<BShare> {
        let cfg = self.cfg();
        let w = cfg.ell() - 1;
        let low_mask = (1u64 << w) - 1;
        let inputs: Vec<u64> = if self.id() == 0 {
            x.data.iter().map(|v| v & low_mask).collect()
        } else {
            x.data.iter().map(|v| low_mask - (v & low_mask)).collect()
        };
        let carry = self.millionaires(&inputs, w)?;
        let bits = x
            .data
            .iter()
            .zip(&carry.bits)
            .map(|(&v, &c)| ((v >> w) as u8 & 1) ^ c)
            .collect();
        Ok(BShare::new(self.id(), bits))
    }

    /// `1{x_i > w_i}` for public thresholds; valid while `|x - w| < 2^(ell-1)`.
    pub fn gt_const(&mut self, x: &AShare, w: &[u64]) -> Result<BShare> {
        if w.len() != x.len() {
            return Err(Error::Shape("gt_const threshold length".into()));
        }
        let cfg = self.cfg();
        let d = x.neg(&cfg).add_public(&cfg, w)?;
        self.counters.gt_slots += x.len() as u64;
        self.msb(&d)
    }

    pub fn gt_scalar(&mut self, x: &AShare, w: u64) -> Result<BShare> {
        self.gt_const(x, &vec![w; x.len()])
    }

    /// Exact signed `1{x_i > y_i}` over the whole ring.
    pub fn gt(&mut self, x: &AShare, y: &AShare) -> Result<BShare> {
        let n = x.len();
        if y.len() != n {
            return Err(Error::Shape("gt operand lengths".into()));
        }
        let cfg = self.cfg();
        let diff = y.sub(&cfg, x)?;
        let all = AShare::concat(&[x, y, &diff]);
        let m = self.msb(&all)?;
        let sx = BShare::new(self.id(), m.bits[..n].to_vec());
        let sy = BShare::new(self.id(), m.bits[n..2 * n].to_vec());
        let md = BShare::new(self.id(), m.bits[2 * n..].to_vec());
        let t = self.and_bits(&sx.xor(&sy), &sx.not().xor(&md))?;
        self.counters.gt_slots += n as u64;
        Ok(md.xor(&t))
    }
}
