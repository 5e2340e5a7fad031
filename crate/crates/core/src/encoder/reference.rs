//! Float64 plaintext encoder used as the accuracy oracle and for
//! calibrating truncation bounds.

use super::weights::{Dense, EncoderWeights};
use crate::approx::gelu;
use crate::nonlinear::LnAffine;

pub fn softmax_rows(x: &[f64], cols: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(cols) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        out.extend(e.iter().map(|v| v / s));
    }
    out
}

pub fn layernorm_rows(x: &[f64], cols: usize, ln: &LnAffine, eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(cols) {
        let n = cols as f64;
        let mu = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        let inv = 1.0 / (var + eps).sqrt();
        out.extend(
            row.iter()
                .enumerate()
                .map(|(j, v)| (v - mu) * inv * ln.gamma[j] + ln.beta[j]),
        );
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest magnitude seen at each truncation site of the secure pass.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Magnitudes {
    pub qkv: f64,
    pub scores: f64,
    pub attn: f64,
    pub out_proj: f64,
    pub ffn1: f64,
    pub ffn2: f64,
    pub pooler: f64,
    pub logits: f64,
}

impl Magnitudes {
    pub fn merge(&self, o: &Magnitudes) -> Magnitudes {
        Magnitudes {
            qkv: self.qkv.max(o.qkv),
            scores: self.scores.max(o.scores),
            attn: self.attn.max(o.attn),
            out_proj: self.out_proj.max(o.out_proj),
            ffn1: self.ffn1.max(o.ffn1),
            ffn2: self.ffn2.max(o.ffn2),
            pooler: self.pooler.max(o.pooler),
            logits: self.logits.max(o.logits),
        }
    }
}

/// Intermediate tensors of one reference pass, named after the layer list.
#[derive(Clone, Debug)]
pub struct ReferencePass {
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    pub scores: Vec<f64>,
    pub probs: Vec<f64>,
    pub o4: Vec<f64>,
    pub o5: Vec<f64>,
    pub o6: Vec<f64>,
    pub o7: Vec<f64>,
    pub o8: Vec<f64>,
    pub o9: Vec<f64>,
    pub out: Vec<f64>,
    pub magnitudes: Magnitudes,
}

pub fn reference_forward(w: &EncoderWeights, x: &[f64], rows: usize, eps: f64) -> ReferencePass {
    let s = w.shape;
    let (dm, h, dk) = (s.model_dim, s.heads, s.head_dim());
    let q = w.q.apply(x, rows);
    let k = w.k.apply(x, rows);
    let v = w.v.apply(x, rows);
    let scale = 1.0 / (dk as f64).sqrt();
    // scores stacked per head: (h * rows) x rows
    let mut scores = vec![0.0; h * rows * rows];
    for hh in 0..h {
        for i in 0..rows {
            for j in 0..rows {
                let mut acc = 0.0;
                for c in 0..dk {
                    acc += q[i * dm + hh * dk + c] * k[j * dm + hh * dk + c];
                }
                scores[(hh * rows + i) * rows + j] = acc * scale;
            }
        }
    }
    let probs = softmax_rows(&scores, rows);
    let mut o4 = vec![0.0; rows * dm];
    for hh in 0..h {
        for i in 0..rows {
            for c in 0..dk {
                let mut acc = 0.0;
                for j in 0..rows {
                    acc += probs[(hh * rows + i) * rows + j] * v[j * dm + hh * dk + c];
                }
                o4[i * dm + hh * dk + c] = acc;
            }
        }
    }
    let o5 = w.o.apply(&o4, rows);
    let res1: Vec<f64> = x.iter().zip(&o5).map(|(a, b)| a + b).collect();
    let o6 = layernorm_rows(&res1, dm, &w.ln1, eps);
    let o7 = w.ffn1.apply(&o6, rows);
    let o8: Vec<f64> = o7.iter().map(|&v| gelu(v)).collect();
    let o9 = w.ffn2.apply(&o8, rows);
    let res2: Vec<f64> = o6.iter().zip(&o9).map(|(a, b)| a + b).collect();
    let out = layernorm_rows(&res2, dm, &w.ln2, eps);
    let (pooled, logits) = pooler_reference(&w.pooler, &w.classifier, &out);
    let magnitudes = Magnitudes {
        qkv: max_abs(&q).max(max_abs(&k)).max(max_abs(&v)),
        scores: max_abs(&scores) / scale,
        attn: max_abs(&o4),
        out_proj: max_abs(&o5),
        ffn1: max_abs(&o7),
        ffn2: max_abs(&o9),
        pooler: max_abs(&pooled),
        logits: max_abs(&logits),
    };
    ReferencePass {
        q,
        k,
        v,
        scores,
        probs,
        o4,
        o5,
        o6,
        o7,
        o8,
        o9,
        out,
        magnitudes,
    }
}

/// Pooler on the first row: `tanh(x_0 W_p + b_p) W_c + b_c`. Returns the
/// pre-activation and the logits.
pub fn pooler_reference(pooler: &Dense, classifier: &Dense, encoded: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let first = &encoded[..pooler.inputs];
    let pre = pooler.apply(first, 1);
    let act: Vec<f64> = pre.iter().map(|v| v.tanh()).collect();
    let logits = classifier.apply(&act, 1);
    (pre, logits)
}
