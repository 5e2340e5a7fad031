use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::archive::Tensor;
use crate::error::{Error, Result};
use crate::nonlinear::LnAffine;
use crate::ring::FxpConfig;

/// Public dimensions of an encoder layer; both parties know these.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderShape {
    pub model_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub classes: usize,
}

impl EncoderShape {
    pub fn new(model_dim: usize, heads: usize, ffn_dim: usize, classes: usize) -> Result<Self> {
        if heads == 0 || model_dim % heads != 0 {
            return Err(Error::Config(format!("model dim {model_dim} not divisible into {heads} heads")));
        }
        Ok(EncoderShape {
            model_dim,
            heads,
            ffn_dim,
            classes,
        })
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }
}

/// A dense layer `y = x W + b`, `W` stored row-major as `inputs x outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Dense {
        Dense {
            inputs,
            outputs,
            w: vec![0.0; inputs * outputs],
            b: vec![0.0; outputs],
        }
    }

    fn random(rng: &mut ChaCha20Rng, inputs: usize, outputs: usize, bias: f64) -> Dense {
        let s = 1.0 / (inputs as f64).sqrt();
        Dense {
            inputs,
            outputs,
            w: (0..inputs * outputs).map(|_| rng.gen_range(-s..s) * 1.7).collect(),
            b: (0..outputs).map(|_| rng.gen_range(-bias..bias)).collect(),
        }
    }

    /// Plain float application to `rows` row vectors.
    pub fn apply(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows * self.outputs];
        for r in 0..rows {
            for k in 0..self.inputs {
                let xv = x[r * self.inputs + k];
                for j in 0..self.outputs {
                    out[r * self.outputs + j] += xv * self.w[k * self.outputs + j];
                }
            }
            for j in 0..self.outputs {
                out[r * self.outputs + j] += self.b[j];
            }
        }
        out
    }
}

/// Server-held parameters of one encoder layer plus the pooler head.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderWeights {
    pub shape: EncoderShape,
    pub q: Dense,
    pub k: Dense,
    pub v: Dense,
    pub o: Dense,
    pub ffn1: Dense,
    pub ffn2: Dense,
    pub ln1: LnAffine,
    pub ln2: LnAffine,
    pub pooler: Dense,
    pub classifier: Dense,
}

impl EncoderWeights {
    /// Deterministic random weights of roughly unit gain.
    pub fn random(shape: EncoderShape, seed: u64) -> EncoderWeights {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (dm, df) = (shape.model_dim, shape.ffn_dim);
        let ln = |rng: &mut ChaCha20Rng| LnAffine {
            gamma: (0..dm).map(|_| rng.gen_range(0.8..1.2)).collect(),
            beta: (0..dm).map(|_| rng.gen_range(-0.1..0.1)).collect(),
        };
        EncoderWeights {
            shape,
            q: Dense::random(&mut rng, dm, dm, 0.1),
            k: Dense::random(&mut rng, dm, dm, 0.1),
            v: Dense::random(&mut rng, dm, dm, 0.1),
            o: Dense::random(&mut rng, dm, dm, 0.1),
            ffn1: Dense::random(&mut rng, dm, df, 0.1),
            ffn2: Dense::random(&mut rng, df, dm, 0.1),
            ln1: ln(&mut rng),
            ln2: ln(&mut rng),
            pooler: Dense::random(&mut rng, dm, dm, 0.1),
            classifier: Dense::random(&mut rng, dm, shape.classes, 0.1),
        }
    }

    fn dense_tensors(name: &str, d: &Dense, cfg: &FxpConfig) -> Result<[Tensor; 2]> {
        Ok([
            Tensor::encode(&format!("{name}.w"), vec![d.inputs, d.outputs], &d.w, cfg)?,
            Tensor::encode(&format!("{name}.b"), vec![d.outputs], &d.b, cfg)?,
        ])
    }

    /// Flattens the weights into named tensors for the archive format.
    pub fn to_tensors(&self, cfg: &FxpConfig) -> Result<Vec<Tensor>> {
        let s = self.shape;
        let mut out = vec![Tensor::encode(
            "shape",
            vec![4],
            &[s.model_dim as f64, s.heads as f64, s.ffn_dim as f64, s.classes as f64],
            &FxpConfig::new(cfg.ell(), 0)?,
        )?];
        for (name, d) in self.named_dense() {
            out.extend(Self::dense_tensors(name, d, cfg)?);
        }
        for (name, ln) in [("ln1", &self.ln1), ("ln2", &self.ln2)] {
            out.push(Tensor::encode(&format!("{name}.gamma"), vec![s.model_dim], &ln.gamma, cfg)?);
            out.push(Tensor::encode(&format!("{name}.beta"), vec![s.model_dim], &ln.beta, cfg)?);
        }
        Ok(out)
    }

    fn named_dense(&self) -> [(&'static str, &Dense); 8] {
        [
            ("q", &self.q),
            ("k", &self.k),
            ("v", &self.v),
            ("o", &self.o),
            ("ffn1", &self.ffn1),
            ("ffn2", &self.ffn2),
            ("pooler", &self.pooler),
            ("classifier", &self.classifier),
        ]
    }

    pub fn from_tensors(tensors: &[Tensor]) -> Result<EncoderWeights> {
        let get = |name: &str| {
            tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::Format(format!("archive lacks tensor {name}")))
        };
        let dims = get("shape")?.decode();
        if dims.len() != 4 {
            return Err(Error::Format("shape tensor must have 4 entries".into()));
        }
        let shape = EncoderShape::new(dims[0] as usize, dims[1] as usize, dims[2] as usize, dims[3] as usize)?;
        let dense = |name: &str, i: usize, o: usize| -> Result<Dense> {
            let w = get(&format!("{name}.w"))?;
            let b = get(&format!("{name}.b"))?;
            if w.shape != [i, o] || b.shape != [o] {
                return Err(Error::Shape(format!("tensor {name} has shape {:?}", w.shape)));
            }
            Ok(Dense {
                inputs: i,
                outputs: o,
                w: w.decode(),
                b: b.decode(),
            })
        };
        let ln = |name: &str| -> Result<LnAffine> {
            Ok(LnAffine {
                gamma: get(&format!("{name}.gamma"))?.decode(),
                beta: get(&format!("{name}.beta"))?.decode(),
            })
        };
        let (dm, df) = (shape.model_dim, shape.ffn_dim);
        Ok(EncoderWeights {
            shape,
            q: dense("q", dm, dm)?,
            k: dense("k", dm, dm)?,
            v: dense("v", dm, dm)?,
            o: dense("o", dm, dm)?,
            ffn1: dense("ffn1", dm, df)?,
            ffn2: dense("ffn2", df, dm)?,
            ln1: ln("ln1")?,
            ln2: ln("ln2")?,
            pooler: dense("pooler", dm, dm)?,
            classifier: dense("classifier", dm, shape.classes)?,
        })
    }
}
