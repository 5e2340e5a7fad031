//! Trusted-dealer emulation of the offline phase.
//!
//! The dealer produces input-independent correlations: arithmetic Beaver
//! triples, matrix triples, boolean AND triples, random 1-of-2 OT with
//! ring-valued keys and random 1-of-N OT with short keys. Generation is a
//! deterministic function of a seed. During a session each party runs a
//! [`CorrelationSource`] seeded identically; both sides draw the same stream
//! in the same order and keep only their own half, and each party is charged
//! the serialized size of its half as offline traffic.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::ring::FxpConfig;
use crate::transport::{Phase, TrafficStats};

/// One party's share of a batch of Beaver triples (`c = a * b` slot-wise).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TripleShares {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub c: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeaverTripleBatch {
    pub ell: u32,
    pub shares: [TripleShares; 2],
}

/// One party's share of a matrix triple `C = A B` with `A: p x q`, `B: q x r`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MatmulTripleShares {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub c: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatmulTriple {
    pub shares: [MatmulTripleShares; 2],
}

/// XOR-shared AND triples over single bits.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BitTripleShares {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
    pub c: Vec<u8>,
}

/// Sender half of random 1-of-2 OT with ring-valued keys.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OtSenderKeys {
    pub k0: Vec<u64>,
    pub k1: Vec<u64>,
}

/// Receiver half: a random choice bit and the chosen key.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OtReceiverKeys {
    pub choice: Vec<u8>,
    pub key: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomOtBatch {
    pub ell: u32,
    pub sender: OtSenderKeys,
    pub receiver: OtReceiverKeys,
}

/// Sender half of random 1-of-N OT whose keys are `width`-bit strings.
/// `keys[i * n + k]` is key `k` of instance `i`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NOtSenderKeys {
    pub n: usize,
    pub width: u32,
    pub keys: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NOtReceiverKeys {
    pub n: usize,
    pub width: u32,
    pub choice: Vec<u8>,
    pub key: Vec<u8>,
}

fn ring_vec(rng: &mut ChaCha20Rng, cfg: &FxpConfig, n: usize) -> Vec<u64> {
    (0..n).map(|_| rng.gen::<u64>() & cfg.mask()).collect()
}

fn triples_from(rng: &mut ChaCha20Rng, count: usize, cfg: &FxpConfig) -> BeaverTripleBatch {
    let a = ring_vec(rng, cfg, count);
    let b = ring_vec(rng, cfg, count);
    let a0 = ring_vec(rng, cfg, count);
    let b0 = ring_vec(rng, cfg, count);
    let c0 = ring_vec(rng, cfg, count);
    let mut s1 = TripleShares::default();
    for i in 0..count {
        s1.a.push(cfg.sub(a[i], a0[i]));
        s1.b.push(cfg.sub(b[i], b0[i]));
        s1.c.push(cfg.sub(cfg.mul(a[i], b[i]), c0[i]));
    }
    BeaverTripleBatch {
        ell: cfg.ell(),
        shares: [
            TripleShares {
                a: a0,
                b: b0,
                c: c0,
            },
            s1,
        ],
    }
}

/// Plain ring matrix product, row-major.
pub fn ring_matmul(cfg: &FxpConfig, x: &[u64], y: &[u64], p: usize, q: usize, r: usize) -> Vec<u64> {
    let mut out = vec![0u64; p * r];
    for i in 0..p {
        for k in 0..q {
            let xv = x[i * q + k];
            if xv == 0 {
                continue;
            }
            let row = &y[k * r..(k + 1) * r];
            let o = &mut out[i * r..(i + 1) * r];
            for (oj, &yv) in o.iter_mut().zip(row) {
                *oj = oj.wrapping_add(xv.wrapping_mul(yv));
            }
        }
    }
    out.iter_mut().for_each(|v| *v &= cfg.mask());
    out
}

fn matmul_from(
    rng: &mut ChaCha20Rng,
    p: usize,
    q: usize,
    r: usize,
    cfg: &FxpConfig,
) -> MatmulTriple {
    let a = ring_vec(rng, cfg, p * q);
    let b = ring_vec(rng, cfg, q * r);
    let c = ring_matmul(cfg, &a, &b, p, q, r);
    let a0 = ring_vec(rng, cfg, p * q);
    let b0 = ring_vec(rng, cfg, q * r);
    let c0 = ring_vec(rng, cfg, p * r);
    let sub = |x: &[u64], y: &[u64]| x.iter().zip(y).map(|(&u, &v)| cfg.sub(u, v)).collect();
    MatmulTriple {
        shares: [
            MatmulTripleShares {
                p,
                q,
                r,
                a: a0.clone(),
                b: b0.clone(),
                c: c0.clone(),
            },
            MatmulTripleShares {
                p,
                q,
                r,
                a: sub(&a, &a0),
                b: sub(&b, &b0),
                c: sub(&c, &c0),
            },
        ],
    }
}

fn bit_triples_from(rng: &mut ChaCha20Rng, count: usize) -> [BitTripleShares; 2] {
    let mut s = [BitTripleShares::default(), BitTripleShares::default()];
    for _ in 0..count {
        let bits: u8 = rng.gen();
        let (a, b) = (bits & 1, (bits >> 1) & 1);
        let (a0, b0, c0) = ((bits >> 2) & 1, (bits >> 3) & 1, (bits >> 4) & 1);
        s[0].a.push(a0);
        s[0].b.push(b0);
        s[0].c.push(c0);
        s[1].a.push(a ^ a0);
        s[1].b.push(b ^ b0);
        s[1].c.push((a & b) ^ c0);
    }
    s
}

fn rot_from(rng: &mut ChaCha20Rng, count: usize, cfg: &FxpConfig) -> RandomOtBatch {
    let k0 = ring_vec(rng, cfg, count);
    let k1 = ring_vec(rng, cfg, count);
    let choice: Vec<u8> = (0..count).map(|_| rng.gen::<u8>() & 1).collect();
    let key = choice
        .iter()
        .enumerate()
        .map(|(i, &c)| if c == 0 { k0[i] } else { k1[i] })
        .collect();
    RandomOtBatch {
        ell: cfg.ell(),
        sender: OtSenderKeys { k0, k1 },
        receiver: OtReceiverKeys { choice, key },
    }
}

fn not_from(
    rng: &mut ChaCha20Rng,
    count: usize,
    n: usize,
    width: u32,
) -> (NOtSenderKeys, NOtReceiverKeys) {
    let wmask = ((1u16 << width) - 1) as u8;
    let keys: Vec<u8> = (0..count * n).map(|_| rng.gen::<u8>() & wmask).collect();
    let choice: Vec<u8> = (0..count).map(|_| rng.gen_range(0..n) as u8).collect();
    let key = choice
        .iter()
        .enumerate()
        .map(|(i, &c)| keys[i * n + c as usize])
        .collect();
    (
        NOtSenderKeys { n, width, keys },
        NOtReceiverKeys {
            n,
            width,
            choice,
            key,
        },
    )
}

/// Beaver triples for `count` slots, deterministic in `seed`.
pub fn gen_triples(seed: u64, count: usize, cfg: &FxpConfig) -> BeaverTripleBatch {
    triples_from(&mut ChaCha20Rng::seed_from_u64(seed), count, cfg)
}

pub fn gen_matmul_triple(seed: u64, p: usize, q: usize, r: usize, cfg: &FxpConfig) -> MatmulTriple {
    matmul_from(&mut ChaCha20Rng::seed_from_u64(seed), p, q, r, cfg)
}

pub fn gen_random_ot(seed: u64, count: usize, cfg: &FxpConfig) -> RandomOtBatch {
    rot_from(&mut ChaCha20Rng::seed_from_u64(seed), count, cfg)
}

pub fn gen_bit_triples(seed: u64, count: usize) -> [BitTripleShares; 2] {
    bit_triples_from(&mut ChaCha20Rng::seed_from_u64(seed), count)
}

pub fn gen_random_n_ot(
    seed: u64,
    count: usize,
    n: usize,
    width: u32,
) -> (NOtSenderKeys, NOtReceiverKeys) {
    not_from(&mut ChaCha20Rng::seed_from_u64(seed), count, n, width)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Triple = 0,
    Matmul = 1,
    BitTriple = 2,
    Rot = 3,
    NOt = 4,
}

const KINDS: usize = 5;

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Triple => "beaver triples",
            Kind::Matmul => "matrix triple elements",
            Kind::BitTriple => "boolean triples",
            Kind::Rot => "random 1-of-2 OT",
            Kind::NOt => "random 1-of-N OT",
        }
    }
}

/// Per-kind correlation counts, used both as consumption report and as budget.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CorrelationUsage {
    pub triples: usize,
    /// Sum of `p*q + q*r + p*r` over all matrix triples.
    pub matmul_elems: usize,
    pub bit_triples: usize,
    pub rot: usize,
    pub n_ot: usize,
}

impl CorrelationUsage {
    fn get(&self, k: Kind) -> usize {
        match k {
            Kind::Triple => self.triples,
            Kind::Matmul => self.matmul_elems,
            Kind::BitTriple => self.bit_triples,
            Kind::Rot => self.rot,
            Kind::NOt => self.n_ot,
        }
    }

    fn slot(&mut self, k: Kind) -> &mut usize {
        match k {
            Kind::Triple => &mut self.triples,
            Kind::Matmul => &mut self.matmul_elems,
            Kind::BitTriple => &mut self.bit_triples,
            Kind::Rot => &mut self.rot,
            Kind::NOt => &mut self.n_ot,
        }
    }

    pub fn since(&self, earlier: &CorrelationUsage) -> CorrelationUsage {
        CorrelationUsage {
            triples: self.triples - earlier.triples,
            matmul_elems: self.matmul_elems - earlier.matmul_elems,
            bit_triples: self.bit_triples - earlier.bit_triples,
            rot: self.rot - earlier.rot,
            n_ot: self.n_ot - earlier.n_ot,
        }
    }
}

/// Streams one party's half of the dealer's correlations.
pub struct CorrelationSource {
    party: u8,
    cfg: FxpConfig,
    rngs: Vec<ChaCha20Rng>,
    used: CorrelationUsage,
    budget: Option<CorrelationUsage>,
    stats: Arc<TrafficStats>,
}

impl CorrelationSource {
    pub fn new(seed: u64, party: u8, cfg: FxpConfig, stats: Arc<TrafficStats>) -> Self {
        let rngs = (0..KINDS)
            .map(|k| {
                let mut r = ChaCha20Rng::seed_from_u64(seed);
                r.set_stream(k as u64 + 1);
                r
            })
            .collect();
        CorrelationSource {
            party,
            cfg,
            rngs,
            used: CorrelationUsage::default(),
            budget: None,
            stats,
        }
    }

    /// Caps total consumption; requests beyond the cap fail with
    /// [`Error::Exhausted`] instead of generating fresh material.
    pub fn with_budget(mut self, budget: CorrelationUsage) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn usage(&self) -> CorrelationUsage {
        self.used
    }

    fn take(&mut self, kind: Kind, n: usize) -> Result<()> {
        if let Some(b) = &self.budget {
            let remaining = b.get(kind).saturating_sub(self.used.get(kind));
            if n > remaining {
                return Err(Error::Exhausted {
                    kind: kind.name(),
                    requested: n,
                    remaining,
                });
            }
        }
        *self.used.slot(kind) += n;
        Ok(())
    }

    fn charge(&self, bytes: usize) {
        self.stats.add_bytes(Phase::Offline, bytes as u64);
    }

    pub fn triples(&mut self, count: usize) -> Result<TripleShares> {
        self.take(Kind::Triple, count)?;
        let cfg = self.cfg;
        let batch = triples_from(&mut self.rngs[Kind::Triple as usize], count, &cfg);
        self.charge(3 * count * cfg.elem_bytes());
        let [s0, s1] = batch.shares;
        Ok(if self.party == 0 { s0 } else { s1 })
    }

    pub fn matmul_triple(&mut self, p: usize, q: usize, r: usize) -> Result<MatmulTripleShares> {
        let elems = p * q + q * r + p * r;
        self.take(Kind::Matmul, elems)?;
        let cfg = self.cfg;
        let t = matmul_from(&mut self.rngs[Kind::Matmul as usize], p, q, r, &cfg);
        self.charge(elems * cfg.elem_bytes());
        let [s0, s1] = t.shares;
        Ok(if self.party == 0 { s0 } else { s1 })
    }

    pub fn bit_triples(&mut self, count: usize) -> Result<BitTripleShares> {
        self.take(Kind::BitTriple, count)?;
        let [s0, s1] = bit_triples_from(&mut self.rngs[Kind::BitTriple as usize], count);
        self.charge((3 * count).div_ceil(8));
        Ok(if self.party == 0 { s0 } else { s1 })
    }

    /// Random 1-of-2 OT where `sender` holds the key pairs. Returns this
    /// party's half.
    pub fn random_ot(&mut self, sender: u8, count: usize) -> Result<RotHalf> {
        self.take(Kind::Rot, count)?;
        let cfg = self.cfg;
        let batch = rot_from(&mut self.rngs[Kind::Rot as usize], count, &cfg);
        let eb = cfg.elem_bytes();
        if self.party == sender {
            self.charge(2 * count * eb);
            Ok(RotHalf::Sender(batch.sender))
        } else {
            self.charge(count * eb + count.div_ceil(8));
            Ok(RotHalf::Receiver(batch.receiver))
        }
    }

    pub fn random_n_ot(&mut self, sender: u8, count: usize, n: usize, width: u32) -> Result<NOtHalf> {
        self.take(Kind::NOt, count)?;
        let (s, r) = not_from(&mut self.rngs[Kind::NOt as usize], count, n, width);
        let choice_bits = usize::BITS - (n - 1).leading_zeros();
        if self.party == sender {
            self.charge((count * n * width as usize).div_ceil(8));
            Ok(NOtHalf::Sender(s))
        } else {
            self.charge((count * (choice_bits + width) as usize).div_ceil(8));
            Ok(NOtHalf::Receiver(r))
        }
    }
}

pub enum RotHalf {
    Sender(OtSenderKeys),
    Receiver(OtReceiverKeys),
}

pub enum NOtHalf {
    Sender(NOtSenderKeys),
    Receiver(NOtReceiverKeys),
}

const MAGIC: &[u8; 4] = b"STFC";
const VERSION: u8 = 1;
const KIND_TRIPLE: u8 = 1;
const KIND_ROT_SENDER: u8 = 2;
const KIND_ROT_RECEIVER: u8 = 3;

fn write_header(w: &mut impl Write, kind: u8, ell: u32, count: usize) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION, kind, ell as u8])?;
    w.write_all(&(count as u64).to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read, want_kind: u8) -> Result<(u32, usize)> {
    let mut head = [0u8; 15];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("bad correlation file magic".into()));
    }
    if head[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", head[4])));
    }
    if head[5] != want_kind {
        return Err(Error::Format(format!(
            "correlation kind {} where {want_kind} expected",
            head[5]
        )));
    }
    let count = u64::from_le_bytes(head[7..15].try_into().unwrap()) as usize;
    Ok((head[6] as u32, count))
}

fn write_u64s(w: &mut impl Write, vs: &[u64]) -> Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64s(r: &mut impl Read, n: usize) -> Result<Vec<u64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Writes one party's triple shares: `magic ‖ version ‖ kind ‖ ell ‖ count ‖ a ‖ b ‖ c`.
pub fn export_triples(w: &mut impl Write, ell: u32, s: &TripleShares) -> Result<()> {
    write_header(w, KIND_TRIPLE, ell, s.a.len())?;
    write_u64s(w, &s.a)?;
    write_u64s(w, &s.b)?;
    write_u64s(w, &s.c)
}

pub fn import_triples(r: &mut impl Read) -> Result<(u32, TripleShares)> {
    let (ell, n) = read_header(r, KIND_TRIPLE)?;
    Ok((
        ell,
        TripleShares {
            a: read_u64s(r, n)?,
            b: read_u64s(r, n)?,
            c: read_u64s(r, n)?,
        },
    ))
}

pub fn export_ot_sender(w: &mut impl Write, ell: u32, s: &OtSenderKeys) -> Result<()> {
    write_header(w, KIND_ROT_SENDER, ell, s.k0.len())?;
    write_u64s(w, &s.k0)?;
    write_u64s(w, &s.k1)
}

pub fn import_ot_sender(r: &mut impl Read) -> Result<(u32, OtSenderKeys)> {
    let (ell, n) = read_header(r, KIND_ROT_SENDER)?;
    Ok((
        ell,
        OtSenderKeys {
            k0: read_u64s(r, n)?,
            k1: read_u64s(r, n)?,
        },
    ))
}

pub fn export_ot_receiver(w: &mut impl Write, ell: u32, s: &OtReceiverKeys) -> Result<()> {
    write_header(w, KIND_ROT_RECEIVER, ell, s.key.len())?;
    w.write_all(&s.choice)?;
    write_u64s(w, &s.key)
}

pub fn import_ot_receiver(r: &mut impl Read) -> Result<(u32, OtReceiverKeys)> {
    let (ell, n) = read_header(r, KIND_ROT_RECEIVER)?;
    let mut choice = vec![0u8; n];
    r.read_exact(&mut choice)?;
    Ok((
        ell,
        OtReceiverKeys {
            choice,
            key: read_u64s(r, n)?,
        },
    ))
}
