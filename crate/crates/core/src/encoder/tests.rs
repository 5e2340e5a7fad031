use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::party::{run_pair, PairRun};
use crate::primitives::{reconstruct, share, AShare};
use crate::ring::FxpConfig;
use crate::Party;

fn split(cfg: &FxpConfig, xs: &[f64], rows: usize, seed: u64) -> [AShare; 2] {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (a, b) = share(cfg, &cfg.encode_vec(xs).unwrap(), &mut rng);
    let cols = xs.len() / rows;
    [a.reshape(rows, cols).unwrap(), b.reshape(rows, cols).unwrap()]
}

fn open(cfg: &FxpConfig, run: &PairRun<AShare>) -> Vec<f64> {
    cfg.decode_vec(&reconstruct(cfg, &run.outputs[0], &run.outputs[1]))
}

fn embeddings(rows: usize, dm: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..rows * dm).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

fn server<'a>(p: &Party, w: &'a EncoderWeights) -> Option<&'a EncoderWeights> {
    (p.id() == 0).then_some(w)
}

#[test]
fn combined_qkv_matches_separate_layers() {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(16, 2, 32, 2).unwrap();
    let w = EncoderWeights::random(shape, 1);
    let ecfg = EncoderConfig::new(shape);
    let x = split(&cfg, &embeddings(4, 16, 2), 4, 3);
    let comb = run_pair(cfg, 4, |p| {
        let [q, k, v] = p.qkv_combined(&x[p.id() as usize], server(p, &w), &ecfg)?;
        Ok(AShare::hconcat(&[q, k, v])?)
    })
    .unwrap();
    let sep = run_pair(cfg, 4, |p| {
        let [q, k, v] = p.qkv_separate(&x[p.id() as usize], server(p, &w), &ecfg)?;
        Ok(AShare::hconcat(&[q, k, v])?)
    })
    .unwrap();
    let a = reconstruct(&cfg, &comb.outputs[0], &comb.outputs[1]);
    let b = reconstruct(&cfg, &sep.outputs[0], &sep.outputs[1]);
    for (u, v) in a.iter().zip(&b) {
        assert!(cfg.to_signed(cfg.sub(*u, *v)).abs() <= 1);
    }
    assert!(comb.offline_bytes() < sep.offline_bytes());
}

#[test]
fn zero_input_gives_biases() {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(8, 2, 16, 2).unwrap();
    let w = EncoderWeights::random(shape, 5);
    let mut ecfg = EncoderConfig::new(shape);
    ecfg.scaling = ScoreScaling::Truncation;
    let x = split(&cfg, &[0.0; 16], 2, 6);
    let run = run_pair(cfg, 7, |p| {
        let [q, _, _] = p.qkv_combined(&x[p.id() as usize], server(p, &w), &ecfg)?;
        Ok(q)
    })
    .unwrap();
    let q = open(&cfg, &run);
    for r in 0..2 {
        for c in 0..8 {
            assert!((q[r * 8 + c] - w.q.b[c]).abs() <= 2.0 * cfg.ulp());
        }
    }
}

#[test]
fn score_scaling_configuration() {
    let s8 = EncoderShape::new(16, 2, 32, 2).unwrap();
    assert_eq!(EncoderConfig::new(s8).scaling, ScoreScaling::FoldIntoKey);
    let mut c = EncoderConfig::new(s8);
    c.scaling = ScoreScaling::Truncation;
    let cfg = FxpConfig::default();
    let x = split(&cfg, &[0.5; 16], 1, 1);
    let r = run_pair(cfg, 1, |p| {
        let i = p.id() as usize;
        p.attention(&x[i], &x[i], &x[i], 1, &c, None)
    });
    assert!(matches!(r, Err(crate::Error::Config(_))));
    let s64 = EncoderShape::new(128, 2, 32, 2).unwrap();
    assert_eq!(EncoderConfig::new(s64).scaling, ScoreScaling::Truncation);
    assert!(is_power_of_four(64) && !is_power_of_four(8));
}

fn attention_vs_reference(rows: usize, heads: usize, dm: usize, seed: u64) -> (f64, PairRun<AShare>) {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(dm, heads, 2 * dm, 2).unwrap();
    let w = EncoderWeights::random(shape, seed);
    let ecfg = EncoderConfig::new(shape);
    let xs = embeddings(rows, dm, seed + 1);
    let x = split(&cfg, &xs, rows, seed + 2);
    let run = run_pair(cfg, seed, |p| {
        let [q, k, v] = p.qkv_combined(&x[p.id() as usize], server(p, &w), &ecfg)?;
        p.attention(&q, &k, &v, rows, &ecfg, None)
    })
    .unwrap();
    let got = open(&cfg, &run);
    let want = reference_forward(&w, &xs, rows, 1e-5).o4;
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (err, run)
}

#[test]
fn tiny_head_matches_reference() {
    let (err, _) = attention_vs_reference(4, 1, 4, 10);
    assert!(err <= 5e-2, "{err}");
}

#[test]
fn single_row_attention_returns_value_row() {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(4, 1, 8, 2).unwrap();
    let ecfg = EncoderConfig::new(shape);
    let q = split(&cfg, &[0.3, -1.0, 2.0, 0.5], 1, 1);
    let v = split(&cfg, &[1.25, -0.5, 3.0, 0.0], 1, 2);
    let run = run_pair(cfg, 3, |p| {
        let i = p.id() as usize;
        p.attention(&q[i], &q[i], &v[i], 1, &ecfg, None)
    })
    .unwrap();
    for (g, w) in open(&cfg, &run).iter().zip([1.25, -0.5, 3.0, 0.0]) {
        assert!((g - w).abs() <= 1e-2);
    }
}

#[test]
fn heads_share_rounds() {
    let (_, one) = attention_vs_reference(4, 1, 16, 20);
    let (_, four) = attention_vs_reference(4, 4, 16, 20);
    assert_eq!(one.rounds(), four.rounds());
}

#[test]
fn forward_trace_and_accuracy() {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(16, 2, 64, 2).unwrap();
    let w = EncoderWeights::random(shape, 30);
    let ecfg = EncoderConfig::new(shape);
    let xs = embeddings(8, 16, 31);
    let x = split(&cfg, &xs, 8, 32);
    let run = run_pair(cfg, 33, |p| p.encoder_forward(&x[p.id() as usize], server(p, &w), &ecfg)).unwrap();
    let (o0, t0) = &run.outputs[0];
    let (o1, _) = &run.outputs[1];
    let got = cfg.decode_vec(&reconstruct(&cfg, o0, o1));
    let want = reference_forward(&w, &xs, 8, ecfg.ln.eps).out;
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 0.1, "{err}");
    assert_eq!(t0.layer_sequence(), LAYER_TABLE.to_vec());
    for r in t0.records.iter().filter(|r| r.kind == LayerKind::Residual) {
        assert_eq!(r.traffic.online_bytes + r.traffic.offline_bytes + r.traffic.rounds, 0);
    }
}

#[test]
fn pooler_with_zero_projection() {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(4, 1, 8, 3).unwrap();
    let mut w = EncoderWeights::random(shape, 40);
    w.pooler.w.iter_mut().for_each(|v| *v = 0.0);
    let ecfg = EncoderConfig::new(shape);
    let x = split(&cfg, &embeddings(2, 4, 41), 2, 42);
    let run = run_pair(cfg, 43, |p| p.pooler_head(&x[p.id() as usize], server(p, &w), &ecfg)).unwrap();
    let act: Vec<f64> = w.pooler.b.iter().map(|b| b.tanh()).collect();
    let want = w.classifier.apply(&act, 1);
    for (g, v) in open(&cfg, &run).iter().zip(&want) {
        assert!((g - v).abs() <= 1e-2);
    }
}

#[test]
fn archive_roundtrip() {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(8, 2, 16, 2).unwrap();
    let w = EncoderWeights::random(shape, 50);
    let mut buf = Vec::new();
    write_archive(&mut buf, &w.to_tensors(&cfg).unwrap()).unwrap();
    let back = EncoderWeights::from_tensors(&read_archive(&mut buf.as_slice()).unwrap()).unwrap();
    assert_eq!(back.shape, shape);
    for (a, b) in back.ffn1.w.iter().zip(&w.ffn1.w) {
        assert!((a - b).abs() <= cfg.ulp());
    }
    assert!(read_archive(&mut &b"XXXX"[..]).is_err());
}
