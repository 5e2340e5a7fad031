use super::reference::Magnitudes;
use super::weights::{Dense, EncoderShape, EncoderWeights};
use crate::error::{Error, Result};
use crate::nonlinear::{LayerNormParams, OppeVariant};
use crate::party::Party;
use crate::primitives::{AShare, TruncMode};
use crate::ring::FxpConfig;
use crate::transport::TrafficSnapshot;

/// How the `1/sqrt(d_k)` factor on attention scores is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreScaling {
    /// Extra truncation bits; needs `d_k` to be a power of 4.
    Truncation,
    /// The server scales `W_K` and `B_K` before sharing.
    FoldIntoKey,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig {
    pub shape: EncoderShape,
    pub scaling: ScoreScaling,
    pub ln: LayerNormParams,
    pub variant: OppeVariant,
    /// Calibrated magnitudes; when present, matmul outputs use public-offset
    /// truncation with these bounds.
    pub bounds: Option<Magnitudes>,
    /// Pad the sequence to this many rows and mask the padding, instead of
    /// processing only the real rows.
    pub pad_to: Option<usize>,
    pub mask_value: f64,
}

pub fn is_power_of_four(n: usize) -> bool {
    n.is_power_of_two() && n.trailing_zeros() % 2 == 0
}

impl EncoderConfig {
    /// Truncation scaling when `d_k` allows it, key folding otherwise.
    pub fn new(shape: EncoderShape) -> EncoderConfig {
        let scaling = if is_power_of_four(shape.head_dim()) {
            ScoreScaling::Truncation
        } else {
            ScoreScaling::FoldIntoKey
        };
        EncoderConfig {
            shape,
            scaling,
            ln: LayerNormParams::default(),
            variant: OppeVariant::East,
            bounds: None,
            pad_to: None,
            mask_value: -64.0,
        }
    }

    fn extra_score_bits(&self) -> Result<u32> {
        let dk = self.shape.head_dim();
        match self.scaling {
            ScoreScaling::FoldIntoKey => Ok(0),
            ScoreScaling::Truncation if is_power_of_four(dk) => Ok(dk.trailing_zeros() / 2),
            ScoreScaling::Truncation => Err(Error::Config(format!(
                "head dim {dk} is not a power of 4; fold the score scaling into the key weights"
            ))),
        }
    }
}

/// Safety factor applied to calibrated magnitudes.
pub const BOUND_SAFETY: f64 = 4.0;

fn offset_mode(cfg: &FxpConfig, bounds: Option<&Magnitudes>, pick: impl Fn(&Magnitudes) -> f64) -> TruncMode {
    match bounds {
        None => TruncMode::Faithful,
        Some(m) => {
            let raw = (pick(m) * BOUND_SAFETY + 1.0) * cfg.scale() * cfg.scale();
            TruncMode::PublicOffset { bound: raw as u64 }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Matmul,
    Softmax,
    Ln,
    Gelu,
    Residual,
}

/// The encoder's layer list: index and protocol of each step.
pub const LAYER_TABLE: [(u8, LayerKind); 10] = [
    (1, LayerKind::Matmul),
    (2, LayerKind::Matmul),
    (3, LayerKind::Softmax),
    (4, LayerKind::Matmul),
    (5, LayerKind::Matmul),
    (6, LayerKind::Ln),
    (7, LayerKind::Matmul),
    (8, LayerKind::Gelu),
    (9, LayerKind::Matmul),
    (10, LayerKind::Ln),
];

#[derive(Clone, Debug, PartialEq)]
pub struct LayerRecord {
    pub index: u8,
    pub kind: LayerKind,
    pub traffic: TrafficSnapshot,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<LayerRecord>,
}

impl Trace {
    /// Executed protocol layers, residual additions left out.
    pub fn layer_sequence(&self) -> Vec<(u8, LayerKind)> {
        self.records
            .iter()
            .filter(|r| r.kind != LayerKind::Residual)
            .map(|r| (r.index, r.kind))
            .collect()
    }
}

struct Recorder {
    start: TrafficSnapshot,
    trace: Trace,
}

impl Recorder {
    fn new(p: &Party) -> Recorder {
        Recorder {
            start: p.traffic(),
            trace: Trace::default(),
        }
    }

    fn mark(&mut self, p: &Party, index: u8, kind: LayerKind) {
        let now = p.traffic();
        self.trace.records.push(LayerRecord {
            index,
            kind,
            traffic: now.since(&self.start),
        });
        self.start = now;
    }
}

fn encode_dense(cfg: &FxpConfig, d: Option<&Dense>, inputs: usize, outputs: usize) -> Result<(Vec<u64>, Vec<u64>)> {
    match d {
        Some(d) => {
            if d.inputs != inputs || d.outputs != outputs {
                return Err(Error::Shape(format!(
                    "dense layer is {}x{}, expected {inputs}x{outputs}",
                    d.inputs, d.outputs
                )));
            }
            Ok((cfg.encode_vec(&d.w)?, cfg.encode_vec(&d.b)?))
        }
        None => Ok((vec![0; inputs * outputs], vec![0; outputs])),
    }
}

fn combined_qkv(w: &EncoderWeights, scaling: ScoreScaling) -> Dense {
    let dm = w.shape.model_dim;
    let ks = match scaling {
        ScoreScaling::FoldIntoKey => 1.0 / (w.shape.head_dim() as f64).sqrt(),
        ScoreScaling::Truncation => 1.0,
    };
    let mut out = Dense::zeros(dm, 3 * dm);
    for r in 0..dm {
        for c in 0..dm {
            out.w[r * 3 * dm + c] = w.q.w[r * dm + c];
            out.w[r * 3 * dm + dm + c] = w.k.w[r * dm + c] * ks;
            out.w[r * 3 * dm + 2 * dm + c] = w.v.w[r * dm + c];
        }
    }
    for c in 0..dm {
        out.b[c] = w.q.b[c];
        out.b[dm + c] = w.k.b[c] * ks;
        out.b[2 * dm + c] = w.v.b[c];
    }
    out
}

impl Party {
    /// `x W + b` with server-held `W`, `b`; the client passes `None` and the
    /// public shape.
    pub fn linear(
        &mut self,
        x: &AShare,
        dense: Option<&Dense>,
        inputs: usize,
        outputs: usize,
        mode: TruncMode,
    ) -> Result<AShare> {
        let cfg = self.cfg();
        if x.cols != inputs {
            return Err(Error::Shape(format!("linear input has {} columns, expected {inputs}", x.cols)));
        }
        let (w, b) = encode_dense(&cfg, dense, inputs, outputs)?;
        let ws = AShare::public(x.party, inputs, outputs, &w);
        let z = self.matmul_raw_many(&[(x, &ws)])?.remove(0);
        let z = self.trunc(&z, cfg.frac(), mode)?;
        let bias: Vec<u64> = (0..x.rows).flat_map(|_| b.iter().copied()).collect();
        z.add_public(&cfg, &bias)
    }

    /// Q, K and V from one matmul against the concatenated weight block.
    pub fn qkv_combined(
        &mut self,
        x: &AShare,
        weights: Option<&EncoderWeights>,
        ecfg: &EncoderConfig,
    ) -> Result<[AShare; 3]> {
        let dm = ecfg.shape.model_dim;
        let block = weights.map(|w| combined_qkv(w, ecfg.scaling));
        let mode = offset_mode(&self.cfg(), ecfg.bounds.as_ref(), |m| m.qkv);
        let y = self.linear(x, block.as_ref(), dm, 3 * dm, mode)?;
        Ok([y.col_slice(0, dm), y.col_slice(dm, dm), y.col_slice(2 * dm, dm)])
    }

    /// Three independent linear layers; the reference point for
    /// [`Party::qkv_combined`].
    pub fn qkv_separate(
        &mut self,
        x: &AShare,
        weights: Option<&EncoderWeights>,
        ecfg: &EncoderConfig,
    ) -> Result<[AShare; 3]> {
        let dm = ecfg.shape.model_dim;
        let block = weights.map(|w| combined_qkv(w, ecfg.scaling));
        let mode = offset_mode(&self.cfg(), ecfg.bounds.as_ref(), |m| m.qkv);
        let mut out = Vec::with_capacity(3);
        for part in 0..3 {
            let d = block.as_ref().map(|b| {
                let mut d = Dense::zeros(dm, dm);
                for r in 0..dm {
                    d.w[r * dm..(r + 1) * dm].copy_from_slice(&b.w[r * 3 * dm + part * dm..r * 3 * dm + (part + 1) * dm]);
                }
                d.b.copy_from_slice(&b.b[part * dm..(part + 1) * dm]);
                d
            });
            out.push(self.linear(x, d.as_ref(), dm, dm, mode)?);
        }
        let v = out.pop().unwrap();
        let k = out.pop().unwrap();
        let q = out.pop().unwrap();
        Ok([q, k, v])
    }

    /// Multi-head attention for `rows x model_dim` Q, K, V with every head
    /// batched into the same rounds. Key columns at or beyond `valid` are
    /// masked out.
    pub fn attention(
        &mut self,
        q: &AShare,
        k: &AShare,
        v: &AShare,
        valid: usize,
        ecfg: &EncoderConfig,
        rec: Option<&mut dyn FnMut(&Party, u8, LayerKind)>,
    ) -> Result<AShare> {
        let cfg = self.cfg();
        let (h, dk) = (ecfg.shape.heads, ecfg.shape.head_dim());
        let rows = q.rows;
        let extra = ecfg.extra_score_bits()?;
        let mut noop = |_: &Party, _: u8, _: LayerKind| {};
        let rec: &mut dyn FnMut(&Party, u8, LayerKind) = match rec {
            Some(r) => r,
            None => &mut noop,
        };

        let qs: Vec<AShare> = (0..h).map(|i| q.col_slice(i * dk, dk)).collect();
        let kts: Vec<AShare> = (0..h).map(|i| k.col_slice(i * dk, dk).transpose()).collect();
        let pairs: Vec<(&AShare, &AShare)> = qs.iter().zip(&kts).collect();
        let raw = self.matmul_raw_many(&pairs)?;
        let stacked = AShare::concat(&raw.iter().collect::<Vec<_>>()).reshape(h * rows, rows)?;
        let mode = offset_mode(&cfg, ecfg.bounds.as_ref(), |m| m.scores);
        let mut scores = self.trunc(&stacked, cfg.frac() + extra, mode)?;
        if valid < rows {
            let m = cfg.encode(ecfg.mask_value)?.0;
            let mask: Vec<u64> = (0..h * rows)
                .flat_map(|_| (0..rows).map(move |j| if j >= valid { m } else { 0 }))
                .collect();
            scores = scores.add_public(&cfg, &mask)?;
        }
        rec(self, 2, LayerKind::Matmul);

        let probs = self.softmax_with_support(&scores, valid)?;
        rec(self, 3, LayerKind::Softmax);

        let ps: Vec<AShare> = (0..h).map(|i| probs.row_slice(i * rows, rows)).collect();
        let vs: Vec<AShare> = (0..h).map(|i| v.col_slice(i * dk, dk)).collect();
        let pairs: Vec<(&AShare, &AShare)> = ps.iter().zip(&vs).collect();
        let heads = self.matmul_raw_many(&pairs)?;
        let joined = AShare::hconcat(&heads)?;
        let mode = offset_mode(&cfg, ecfg.bounds.as_ref(), |m| m.attn);
        let out = self.trunc(&joined, cfg.frac(), mode)?;
        rec(self, 4, LayerKind::Matmul);
        Ok(out)
    }

    /// One encoder layer over the client's shared embeddings. Returns the
    /// output for the real rows and the per-layer execution trace.
    pub fn encoder_forward(
        &mut self,
        x: &AShare,
        weights: Option<&EncoderWeights>,
        ecfg: &EncoderConfig,
    ) -> Result<(AShare, Trace)> {
        let cfg = self.cfg();
        let s = ecfg.shape;
        let dm = s.model_dim;
        if x.cols != dm {
            return Err(Error::Shape(format!("input has {} columns, model dim is {dm}", x.cols)));
        }
        if self.id() == 0 && weights.is_none() {
            return Err(Error::Config("the server must supply encoder weights".into()));
        }
        let valid = x.rows;
        let x = match ecfg.pad_to {
            Some(p) if p > valid => {
                let pad = AShare::zeros(x.party, p - valid, dm);
                AShare::concat(&[x, &pad]).reshape(p, dm)?
            }
            Some(p) if p < valid => {
                return Err(Error::Shape(format!("sequence of {valid} rows exceeds padding {p}")));
            }
            _ => x.clone(),
        };
        let bounds = ecfg.bounds.as_ref();
        let mut rec = Recorder::new(self);

        let [q, k, v] = self.qkv_combined(&x, weights, ecfg)?;
        rec.mark(self, 1, LayerKind::Matmul);
        let o4 = {
            let mut cb = |p: &Party, i: u8, kind: LayerKind| rec.mark(p, i, kind);
            self.attention(&q, &k, &v, valid, ecfg, Some(&mut cb))?
        };
        let o5 = self.linear(&o4, weights.map(|w| &w.o), dm, dm, offset_mode(&cfg, bounds, |m| m.out_proj))?;
        rec.mark(self, 5, LayerKind::Matmul);
        let r1 = x.add(&cfg, &o5)?;
        rec.mark(self, 6, LayerKind::Residual);
        let o6 = self.layernorm(&r1, weights.map(|w| &w.ln1), &ecfg.ln)?;
        rec.mark(self, 6, LayerKind::Ln);
        let o7 = self.linear(&o6, weights.map(|w| &w.ffn1), dm, s.ffn_dim, offset_mode(&cfg, bounds, |m| m.ffn1))?;
        rec.mark(self, 7, LayerKind::Matmul);
        let o8 = self.gelu_with(&o7, ecfg.variant)?;
        rec.mark(self, 8, LayerKind::Gelu);
        let o9 = self.linear(&o8, weights.map(|w| &w.ffn2), s.ffn_dim, dm, offset_mode(&cfg, bounds, |m| m.ffn2))?;
        rec.mark(self, 9, LayerKind::Matmul);
        let r2 = o6.add(&cfg, &o9)?;
        rec.mark(self, 10, LayerKind::Residual);
        let out = self.layernorm(&r2, weights.map(|w| &w.ln2), &ecfg.ln)?;
        rec.mark(self, 10, LayerKind::Ln);
        Ok((out.row_slice(0, valid), rec.trace))
    }

    /// Classification head on the first row: linear, tanh, linear.
    pub fn pooler_head(&mut self, x: &AShare, weights: Option<&EncoderWeights>, ecfg: &EncoderConfig) -> Result<AShare> {
        let cfg = self.cfg();
        let s = ecfg.shape;
        let first = x.row_slice(0, 1);
        let bounds = ecfg.bounds.as_ref();
        let pre = self.linear(&first, weights.map(|w| &w.pooler), s.model_dim, s.model_dim, offset_mode(&cfg, bounds, |m| m.pooler))?;
        let act = self.tanh_with(&pre, ecfg.variant)?;
        self.linear(&act, weights.map(|w| &w.classifier), s.model_dim, s.classes, offset_mode(&cfg, bounds, |m| m.logits))
    }
}
