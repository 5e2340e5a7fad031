//! Benchmark configuration: a versioned TOML file whose keys mirror the
//! command-line flags. Flags override file values.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sharedtf::encoder::EncoderShape;
use sharedtf::nonlinear::OppeVariant;
use sharedtf::FxpConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Gelu,
    Tanh,
    Exp,
    Softmax,
    Layernorm,
    Reciprocal,
    Invsqrt,
    Mul,
    Encoder,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Gelu => "gelu",
            Protocol::Tanh => "tanh",
            Protocol::Exp => "exp",
            Protocol::Softmax => "softmax",
            Protocol::Layernorm => "layernorm",
            Protocol::Reciprocal => "reciprocal",
            Protocol::Invsqrt => "invsqrt",
            Protocol::Mul => "mul",
            Protocol::Encoder => "encoder",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    East,
    Nfgen,
}

impl Variant {
    pub fn oppe(self) -> OppeVariant {
        match self {
            Variant::East => OppeVariant::East,
            Variant::Nfgen => OppeVariant::NfgenBaseline,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::East => "east",
            Variant::Nfgen => "nfgen",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub version: u32,
    pub protocol: Protocol,
    pub variant: Variant,
    /// Elements per row (element-wise protocols) or row length.
    pub n: usize,
    pub rows: usize,
    /// Encoder sequence length.
    pub seq: usize,
    pub pad_to: Option<usize>,
    pub model_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub classes: usize,
    pub ell: u32,
    pub frac: u32,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            version: CONFIG_VERSION,
            protocol: Protocol::Gelu,
            variant: Variant::East,
            n: 1024,
            rows: 1,
            seq: 8,
            pad_to: None,
            model_dim: 16,
            heads: 2,
            ffn_dim: 64,
            classes: 2,
            ell: 64,
            frac: 12,
            seed: 1,
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<BenchConfig> {
        let c: BenchConfig = toml::from_str(text).context("parsing benchmark config")?;
        if c.version != CONFIG_VERSION {
            bail!("unsupported config version {} (expected {CONFIG_VERSION})", c.version);
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<BenchConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        BenchConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn fxp(&self) -> Result<FxpConfig> {
        Ok(FxpConfig::new(self.ell, self.frac)?)
    }

    pub fn shape(&self) -> Result<EncoderShape> {
        Ok(EncoderShape::new(self.model_dim, self.heads, self.ffn_dim, self.classes)?)
    }

    /// Input tensor shape as `[rows, cols]`.
    pub fn input_shape(&self) -> [usize; 2] {
        match self.protocol {
            Protocol::Encoder => [self.seq, self.model_dim],
            _ => [self.rows, self.n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fxp()?;
        let [r, c] = self.input_shape();
        if r == 0 || c == 0 {
            bail!("empty input shape {r}x{c}");
        }
        if self.protocol == Protocol::Encoder {
            self.shape()?;
            if let Some(p) = self.pad_to {
                if p < self.seq {
                    bail!("pad_to {p} is shorter than seq {}", self.seq);
                }
            }
        }
        Ok(())
    }

    /// Digest both parties compare before running. Covers every field, so
    /// any disagreement in ring, shapes, workload or seed aborts the run.
    pub fn digest(&self) -> [u8; 32] {
        let canon = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canon).into()
    }
}
