use crate::dealer::ring_matmul;
use crate::error::{Error, Result};
use crate::party::Party;
use crate::primitives::{AShare, TruncMode};

impl Party {
    /// Element-wise Beaver product without truncation. One round.
    pub fn mul_raw(&mut self, x: &AShare, y: &AShare) -> Result<AShare> {
        if x.len() != y.len() {
            return Err(Error::Shape(format!("mul of {} and {} slots", x.len(), y.len())));
        }
        let cfg = self.cfg();
        let n = x.len();
        if n == 0 {
            return Ok(x.clone());
        }
        let t = self.dealer.triples(n)?;
        let mut masked = Vec::with_capacity(2 * n);
        masked.extend(x.data.iter().zip(&t.a).map(|(&u, &a)| cfg.sub(u, a)));
        masked.extend(y.data.iter().zip(&t.b).map(|(&v, &b)| cfg.sub(v, b)));
        let other = self.exchange_ring(&masked)?;
        let i = self.id() as u64;
        let data = (0..n)
            .map(|k| {
                let e = cfg.add(masked[k], other[k]);
                let f = cfg.add(masked[n + k], other[n + k]);
                let mut z = cfg.add(cfg.mul(t.a[k], f), cfg.mul(e, t.b[k]));
                z = cfg.add(z, t.c[k]);
                cfg.add(z, cfg.mul(i, cfg.mul(e, f)))
            })
            .collect();
        self.counters.mul_calls += 1;
        self.counters.mul_slots += n as u64;
        Ok(AShare {
            party: x.party,
            rows: x.rows,
            cols: x.cols,
            data,
        })
    }

    /// Fixed-point element-wise product: Beaver multiplication followed by
    /// local truncation by `f` bits.
    pub fn mul(&mut self, x: &AShare, y: &AShare) -> Result<AShare> {
        let f = self.cfg().frac();
        self.mul_trunc(x, y, f, TruncMode::Faithful)
    }

    pub fn mul_trunc(&mut self, x: &AShare, y: &AShare, bits: u32, mode: TruncMode) -> Result<AShare> {
        let z = self.mul_raw(x, y)?;
        self.trunc(&z, bits, mode)
    }

    /// Several independent element-wise products packed into one round.
    pub fn mul_raw_many(&mut self, pairs: &[(&AShare, &AShare)]) -> Result<Vec<AShare>> {
        let xs: Vec<&AShare> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<&AShare> = pairs.iter().map(|p| p.1).collect();
        for (x, y) in pairs {
            if x.len() != y.len() {
                return Err(Error::Shape("mul_raw_many operand lengths".into()));
            }
        }
        let z = self.mul_raw(&AShare::concat(&xs), &AShare::concat(&ys))?;
        self.counters.mul_calls += pairs.len().saturating_sub(1) as u64;
        let mut out = Vec::with_capacity(pairs.len());
        let mut off = 0;
        for x in xs {
            out.push(AShare {
                party: x.party,
                rows: x.rows,
                cols: x.cols,
                data: z.data[off..off + x.len()].to_vec(),
            });
            off += x.len();
        }
        Ok(out)
    }

    /// Matrix products with matrix Beaver triples, all pairs in one round,
    /// without truncation.
    pub fn matmul_raw_many(&mut self, pairs: &[(&AShare, &AShare)]) -> Result<Vec<AShare>> {
        let cfg = self.cfg();
        let mut triples = Vec::with_capacity(pairs.len());
        let mut masked = Vec::new();
        for (x, y) in pairs {
            if x.cols != y.rows {
                return Err(Error::Shape(format!(
                    "matmul {}x{} by {}x{}",
                    x.rows, x.cols, y.rows, y.cols
                )));
            }
            let t = self.dealer.matmul_triple(x.rows, x.cols, y.cols)?;
            masked.extend(x.data.iter().zip(&t.a).map(|(&u, &a)| cfg.sub(u, a)));
            masked.extend(y.data.iter().zip(&t.b).map(|(&v, &b)| cfg.sub(v, b)));
            triples.push(t);
        }
        if masked.is_empty() {
            return Ok(pairs
                .iter()
                .map(|(x, y)| AShare::zeros(x.party, x.rows, y.cols))
                .collect());
        }
        let other = self.exchange_ring(&masked)?;
        let opened: Vec<u64> = masked.iter().zip(&other).map(|(&a, &b)| cfg.add(a, b)).collect();
        let mut off = 0;
        let mut out = Vec::with_capacity(pairs.len());
        for ((x, y), t) in pairs.iter().zip(triples) {
            let (p, q, r) = (x.rows, x.cols, y.cols);
            let e = &opened[off..off + p * q];
            let f = &opened[off + p * q..off + p * q + q * r];
            off += p * q + q * r;
            let eb = ring_matmul(&cfg, e, &t.b, p, q, r);
            let af = ring_matmul(&cfg, &t.a, f, p, q, r);
            let mut z: Vec<u64> = (0..p * r)
                .map(|k| cfg.add(cfg.add(eb[k], af[k]), t.c[k]))
                .collect();
            if self.id() == 0 {
                let ef = ring_matmul(&cfg, e, f, p, q, r);
                for (zk, v) in z.iter_mut().zip(ef) {
                    *zk = cfg.add(*zk, v);
                }
            }
            out.push(AShare {
                party: x.party,
                rows: p,
                cols: r,
                data: z,
            });
        }
        self.counters.matmul_calls += pairs.len() as u64;
        Ok(out)
    }

    /// Fixed-point matrix product truncated by `f` bits.
    pub fn matmul(&mut self, x: &AShare, y: &AShare) -> Result<AShare> {
        let z = self.matmul_raw_many(&[(x, y)])?.pop().unwrap();
        let f = self.cfg().frac();
        self.trunc(&z, f, TruncMode::Faithful)
    }
}
