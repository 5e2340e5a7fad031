//! Synthetic workloads, plaintext oracles and the party drivers.

use std::net::{TcpListener, ToSocketAddrs};
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sharedtf::approx;
use sharedtf::encoder::{reference_forward, softmax_rows, EncoderConfig, EncoderWeights};
use sharedtf::nonlinear::{tables, LayerNormParams, LnAffine};
use sharedtf::transport::{Channel, TrafficSnapshot};
use sharedtf::{run_pair, AShare, Party, CLIENT, SERVER};

use crate::config::{BenchConfig, Protocol};
use crate::report::BenchReport;

pub const RECIP_RANGE: (f64, f64) = (1.0, 64.0);
pub const INVSQRT_RANGE: (f64, f64) = (0.25, 16.0);
pub const NEWTON_DELTA: f64 = 1.0 / 1024.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Role {
    Server,
    Client,
}

/// What one party observed: the opened output and the traffic of the
/// protocol itself (input sharing, handshake and opening excluded).
#[derive(Clone, Debug)]
pub struct PartyOutcome {
    pub output: Vec<f64>,
    pub traffic: TrafficSnapshot,
    pub wall_time_s: f64,
}

fn rng(c: &BenchConfig, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(c.seed);
    r.set_stream(stream);
    r
}

/// The client's synthetic input, quantized to the configured ring.
pub fn synthetic_input(c: &BenchConfig) -> Result<Vec<f64>> {
    let fxp = c.fxp()?;
    let [rows, cols] = c.input_shape();
    let mut r = rng(c, 1);
    let mut uniform = |lo: f64, hi: f64| (0..rows * cols).map(|_| r.gen_range(lo..hi)).collect::<Vec<f64>>();
    let xs = match c.protocol {
        Protocol::Gelu => uniform(-8.0, 8.0),
        Protocol::Tanh => uniform(-6.0, 6.0),
        Protocol::Exp => uniform(-18.0, 0.0),
        Protocol::Softmax => uniform(-10.0, 10.0),
        Protocol::Reciprocal => uniform(RECIP_RANGE.0, RECIP_RANGE.1),
        Protocol::Invsqrt => uniform(INVSQRT_RANGE.0, INVSQRT_RANGE.1),
        Protocol::Mul => uniform(-100.0, 100.0),
        Protocol::Encoder => uniform(-1.5, 1.5),
        Protocol::Layernorm => {
            let mut out = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let mu = r.gen_range(-2.0..2.0);
                let sd = r.gen_range(0.5..3.0);
                out.extend((0..cols).map(|_| mu + sd * r.gen_range(-1.7..1.7)));
            }
            out
        }
    };
    Ok(fxp.decode_vec(&fxp.encode_vec(&xs)?))
}

/// Server-side model parameters, derived from the seed so that either party
/// can recompute the plaintext oracle.
pub fn encoder_weights(c: &BenchConfig) -> Result<EncoderWeights> {
    Ok(EncoderWeights::random(c.shape()?, c.seed ^ 0x7765_6967_6874))
}

pub fn ln_affine(c: &BenchConfig) -> LnAffine {
    let mut r = rng(c, 2);
    LnAffine {
        gamma: (0..c.n).map(|_| r.gen_range(0.5..1.5)).collect(),
        beta: (0..c.n).map(|_| r.gen_range(-0.5..0.5)).collect(),
    }
}

pub fn oracle(c: &BenchConfig, x: &[f64]) -> Result<Vec<f64>> {
    let [rows, cols] = c.input_shape();
    Ok(match c.protocol {
        Protocol::Gelu => x.iter().map(|&v| approx::gelu(v)).collect(),
        Protocol::Tanh => x.iter().map(|v| v.tanh()).collect(),
        Protocol::Exp => x.iter().map(|v| v.min(0.0).exp()).collect(),
        Protocol::Softmax => softmax_rows(x, cols),
        Protocol::Reciprocal => x.iter().map(|v| 1.0 / v).collect(),
        Protocol::Invsqrt => x.iter().map(|v| 1.0 / v.sqrt()).collect(),
        Protocol::Mul => x.iter().map(|v| v * v).collect(),
        Protocol::Layernorm => {
            let aff = ln_affine(c);
            sharedtf::encoder::layernorm_rows(x, cols, &aff, LayerNormParams::default().eps)
        }
        Protocol::Encoder => reference_forward(&encoder_weights(c)?, x, rows, LayerNormParams::default().eps).out,
    })
}

/// Exchanges config digests; any mismatch aborts before the workload runs.
pub fn handshake(p: &mut Party, c: &BenchConfig) -> Result<()> {
    let mine = c.digest();
    let theirs = p.channel().exchange(&mine)?;
    if theirs != mine {
        bail!("configuration mismatch with peer (digest differs)");
    }
    Ok(())
}

fn protocol(p: &mut Party, c: &BenchConfig, x: &AShare) -> Result<AShare> {
    let server = p.id() == SERVER;
    let v = c.variant.oppe();
    Ok(match c.protocol {
        Protocol::Gelu => p.gelu_with(x, v)?,
        Protocol::Tanh => p.tanh_with(x, v)?,
        Protocol::Exp => p.exp_neg_with(x, v)?,
        Protocol::Softmax => p.softmax(x)?,
        Protocol::Mul => p.mul(x, x)?,
        Protocol::Reciprocal => {
            let plan = tables::recip_plan(RECIP_RANGE.0, RECIP_RANGE.1, NEWTON_DELTA)?;
            p.reciprocal(x, &plan)?
        }
        Protocol::Invsqrt => {
            let plan = tables::invsqrt_plan(INVSQRT_RANGE.0, INVSQRT_RANGE.1, NEWTON_DELTA)?;
            p.invsqrt(x, &plan)?
        }
        Protocol::Layernorm => {
            let aff = server.then(|| ln_affine(c));
            p.layernorm(x, aff.as_ref(), &LayerNormParams::default())?
        }
        Protocol::Encoder => {
            let w = if server { Some(encoder_weights(c)?) } else { None };
            let mut ecfg = EncoderConfig::new(c.shape()?);
            ecfg.variant = v;
            ecfg.pad_to = c.pad_to;
            p.encoder_forward(x, w.as_ref(), &ecfg)?.0
        }
    })
}

/// Runs the configured workload on one party: handshake, client input
/// sharing, the protocol, then opening the result to both sides.
pub fn execute(p: &mut Party, c: &BenchConfig) -> Result<PartyOutcome> {
    c.validate()?;
    handshake(p, c)?;
    let fxp = p.cfg();
    let [rows, cols] = c.input_shape();
    let input = if p.id() == CLIENT { Some(fxp.encode_vec(&synthetic_input(c)?)?) } else { None };
    let x = p.share_input(CLIENT, input.as_deref(), rows, cols)?;
    p.channel().flush()?;
    let before = p.traffic();
    let start = Instant::now();
    let y = protocol(p, c, &x)?;
    p.channel().flush()?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let traffic = p.traffic().since(&before);
    let output = fxp.decode_vec(&p.open(&y)?);
    Ok(PartyOutcome { output, traffic, wall_time_s })
}

pub fn build_report(c: &BenchConfig, party: &str, traffic: TrafficSnapshot, wall_time_s: f64, output: &[f64]) -> Result<BenchReport> {
    let x = synthetic_input(c)?;
    let want = oracle(c, &x)?;
    if want.len() != output.len() {
        bail!("output has {} values, oracle {}", output.len(), want.len());
    }
    let max_abs_error = output.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let max_row_sum_error = (c.protocol == Protocol::Softmax).then(|| {
        output.chunks(c.n).map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    });
    Ok(BenchReport {
        protocol: c.protocol.name().into(),
        variant: c.variant.name().into(),
        party: party.into(),
        shape: c.input_shape().to_vec(),
        ell: c.ell,
        frac: c.frac,
        seed: c.seed,
        online_bytes: traffic.online_bytes,
        offline_bytes: traffic.offline_bytes,
        rounds: traffic.rounds,
        wall_time_s,
        max_abs_error,
        max_row_sum_error,
    })
}

/// Both parties in one process over an in-memory channel.
pub fn run_local(c: &BenchConfig) -> Result<BenchReport> {
    c.validate()?;
    let run = run_pair(c.fxp()?, c.seed, |p| {
        execute(p, c).map_err(|e| sharedtf::Error::Protocol(e.to_string()))
    })?;
    let [a, b] = &run.outputs;
    let traffic = TrafficSnapshot {
        online_bytes: a.traffic.online_bytes + b.traffic.online_bytes,
        offline_bytes: a.traffic.offline_bytes + b.traffic.offline_bytes,
        rounds: a.traffic.rounds.max(b.traffic.rounds),
        messages: a.traffic.messages + b.traffic.messages,
    };
    build_report(c, "both", traffic, a.wall_time_s.max(b.wall_time_s), &a.output)
}

fn finish(mut p: Party, c: &BenchConfig, role: Role) -> Result<BenchReport> {
    let out = execute(&mut p, c)?;
    let label = match role {
        Role::Server => "server",
        Role::Client => "client",
    };
    build_report(c, label, out.traffic, out.wall_time_s, &out.output)
}

/// Server side over TCP on an already-bound listener.
pub fn serve(listener: &TcpListener, c: &BenchConfig) -> Result<BenchReport> {
    let chan = Channel::tcp_accept(listener)?;
    finish(Party::new(c.fxp()?, chan, c.seed), c, Role::Server)
}

/// Client side over TCP, retrying the connection for up to `timeout`.
pub fn connect(addr: impl ToSocketAddrs + Clone, c: &BenchConfig, timeout: Duration) -> Result<BenchReport> {
    let chan = Channel::tcp_connect(addr, timeout)?;
    finish(Party::new(c.fxp()?, chan, c.seed), c, Role::Client)
}
