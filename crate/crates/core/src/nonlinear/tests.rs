use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::approx::{determine_invsqrt, determine_recip, PiecewisePoly, Tail};
use crate::party::run_pair;
use crate::primitives::{reconstruct, share, AShare};
use crate::ring::FxpConfig;

fn split(cfg: &FxpConfig, xs: &[f64], rows: usize, seed: u64) -> [AShare; 2] {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (a, b) = share(cfg, &cfg.encode_vec(xs).unwrap(), &mut rng);
    let cols = xs.len() / rows;
    [a.reshape(rows, cols).unwrap(), b.reshape(rows, cols).unwrap()]
}

fn eval<F>(cfg: FxpConfig, xs: &[f64], rows: usize, f: F) -> (Vec<f64>, crate::party::PairRun<AShare>)
where
    F: Fn(&mut crate::Party, &AShare) -> crate::Result<AShare> + Sync,
{
    let s = split(&cfg, xs, rows, 7);
    let run = run_pair(cfg, 8, |p| {
        let i = p.id() as usize;
        f(p, &s[i])
    })
    .unwrap();
    let out = cfg.decode_vec(&reconstruct(&cfg, &run.outputs[0], &run.outputs[1]));
    (out, run)
}

#[test]
fn powers_by_doubling() {
    let cfg = FxpConfig::default();
    let s = split(&cfg, &[2.0], 1, 1);
    let run = run_pair(cfg, 2, |p| p.calculate_kx(&s[p.id() as usize], 3)).unwrap();
    let got: Vec<f64> = (0..4)
        .map(|j| cfg.decode_vec(&reconstruct(&cfg, &run.outputs[0][j], &run.outputs[1][j]))[0])
        .collect();
    for (g, w) in got.iter().zip([1.0, 2.0, 4.0, 8.0]) {
        assert!((g - w).abs() <= 4.0 * cfg.ulp());
    }
    assert_eq!(run.rounds(), 2);
    let run = run_pair(cfg, 2, |p| p.calculate_kx(&s[p.id() as usize], 1)).unwrap();
    assert_eq!(run.rounds(), 0);
}

#[test]
fn identity_table() {
    let cfg = FxpConfig::default();
    let poly = PiecewisePoly {
        name: "id".into(),
        d: 1,
        breakpoints: vec![-1000.0],
        coeffs: vec![0.0, 1.0],
        tail: Tail::ZeroLeftIdentityRight,
        coef_frac: 20,
        delta: 0.0,
        max_error: 0.0,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let xs: Vec<f64> = (0..1000).map(|_| rng.gen_range(-100.0..100.0)).collect();
    let (got, _) = eval(cfg, &xs, 1, |p, x| p.oppe(x, &poly, OppeVariant::East));
    for (g, x) in got.iter().zip(&xs) {
        assert!((g - cfg.decode(cfg.encode(*x).unwrap())).abs() <= cfg.ulp());
    }
}

#[test]
fn variants_agree_and_only_baseline_converts() {
    let cfg = FxpConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let xs: Vec<f64> = (0..1000).map(|_| rng.gen_range(-7.0..7.0)).collect();
    let (east, re) = eval(cfg, &xs, 1, |p, x| p.gelu_with(x, OppeVariant::East));
    let (base, rb) = eval(cfg, &xs, 1, |p, x| p.gelu_with(x, OppeVariant::NfgenBaseline));
    for (a, b) in east.iter().zip(&base) {
        assert!((a - b).abs() <= 2.0 * cfg.ulp());
    }
    assert_eq!(re.counters[0].b2a_slots, 0);
    assert_eq!(rb.counters[0].b2a_slots, 8 * 1000);
    assert!(re.online_bytes() <= rb.online_bytes());
}

#[test]
fn activation_fixed_points_and_tails() {
    let cfg = FxpConfig::default();
    let u = cfg.ulp();
    let (g, _) = eval(cfg, &[0.0, 8.0, -6.0, 1.0], 1, |p, x| p.gelu(x));
    assert!(g[0].abs() <= 2.0 * u);
    assert!((g[1] - 8.0).abs() <= 2.0 * u);
    assert_eq!(g[2], 0.0);
    assert!((g[3] - 0.8413).abs() <= 1.0 / 256.0 + 4.0 * u);
    let (t, _) = eval(cfg, &[0.0, 10.0, -10.0], 1, |p, x| p.tanh(x));
    assert!(t[0].abs() <= 2.0 * u);
    assert!((t[1] - 1.0).abs() <= 2.0 * u);
    assert!((t[2] + 1.0).abs() <= 2.0 * u);
    let (e, _) = eval(cfg, &[0.0, -20.0, -1.0], 1, |p, x| p.exp_neg(x));
    assert!((e[0] - 1.0).abs() <= 1.0 / 256.0 + 2.0 * u);
    assert_eq!(e[1], 0.0);
    assert!((e[2] - (-1f64).exp()).abs() <= 1.0 / 256.0 + 4.0 * u);
}

#[test]
fn newton_protocols() {
    let cfg = FxpConfig::default();
    let plan = determine_recip(1.0, 128.0, 1.0 / 1024.0).unwrap();
    let (r, _) = eval(cfg, &[1.0, 2.0, 100.0], 1, |p, x| p.reciprocal(x, &plan));
    let slack = plan.t as f64 * 4.0 * cfg.ulp();
    for (g, x) in r.iter().zip([1.0, 2.0, 100.0]) {
        assert!((g - 1.0 / x).abs() <= 1.0 / 1024.0 + slack, "1/{x} = {g}");
    }
    let plan = determine_invsqrt(0.25, 16.0, 1.0 / 1024.0).unwrap();
    let (r, _) = eval(cfg, &[4.0, 0.25, 16.0, 1.0], 1, |p, x| p.invsqrt(x, &plan));
    let slack = plan.t as f64 * 4.0 * cfg.ulp();
    for (g, x) in r.iter().zip([4.0, 0.25, 16.0, 1.0]) {
        assert!((g - 1.0 / f64::sqrt(x)).abs() <= 1.0 / 1024.0 + slack, "x={x} got {g}");
    }
}

#[test]
fn softmax_examples() {
    let cfg = FxpConfig::default();
    let (s, _) = eval(cfg, &[0.0, 0.0, 0.0, 0.0], 1, |p, x| p.softmax(x));
    for v in s {
        assert!((v - 0.25).abs() <= 1e-2);
    }
    let (s, _) = eval(cfg, &[10.0, -10.0], 1, |p, x| p.softmax(x));
    assert!((s[0] - 1.0).abs() <= 1e-2 && s[1].abs() <= 1e-2);
}

#[test]
fn softmax_rounds_do_not_depend_on_rows() {
    let cfg = FxpConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..64).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let (_, one) = eval(cfg, &xs[..8], 1, |p, x| p.softmax(x));
    let (_, many) = eval(cfg, &xs, 8, |p, x| p.softmax(x));
    assert_eq!(one.rounds(), many.rounds());
}

fn ln_ref(x: &[f64], g: &[f64], b: &[f64], eps: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    x.iter()
        .zip(g.iter().zip(b))
        .map(|(v, (g, b))| (v - mu) / (var + eps).sqrt() * g + b)
        .collect()
}

#[test]
fn layernorm_examples() {
    let cfg = FxpConfig::default();
    let params = LayerNormParams::default();
    let aff = LnAffine {
        gamma: vec![1.0, 1.0],
        beta: vec![0.0, 0.0],
    };
    let (y, _) = eval(cfg, &[1.0, 3.0], 1, |p, x| {
        let a = if p.id() == 0 { Some(&aff) } else { None };
        p.layernorm(x, a, &params)
    });
    assert!((y[0] + 1.0).abs() <= 1e-2 && (y[1] - 1.0).abs() <= 1e-2, "{y:?}");

    let aff = LnAffine {
        gamma: vec![0.5, 2.0, -1.0, 1.5],
        beta: vec![0.25, -0.75, 1.0, 3.0],
    };
    let (y, _) = eval(cfg, &[2.5; 4], 1, |p, x| {
        let a = if p.id() == 0 { Some(&aff) } else { None };
        p.layernorm(x, a, &params)
    });
    for (v, b) in y.iter().zip(&aff.beta) {
        assert!((v - b).abs() <= 2.0 * cfg.ulp(), "{v} vs {b}");
    }

    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let n = 64;
    let rows = 16;
    let mut xs = Vec::new();
    for _ in 0..rows {
        let mu = rng.gen_range(-2.0..2.0);
        let sd = rng.gen_range(0.5..3.0);
        xs.extend((0..n).map(|_| mu + sd * rng.gen_range(-1.7..1.7)));
    }
    let aff = LnAffine {
        gamma: (0..n).map(|_| rng.gen_range(0.5..1.5)).collect(),
        beta: (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect(),
    };
    let (y, _) = eval(cfg, &xs, rows, |p, x| {
        let a = if p.id() == 0 { Some(&aff) } else { None };
        p.layernorm(x, a, &params)
    });
    let mut worst: f64 = 0.0;
    for r in 0..rows {
        let want = ln_ref(&xs[r * n..(r + 1) * n], &aff.gamma, &aff.beta, params.eps);
        for j in 0..n {
            worst = worst.max((y[r * n + j] - want[j]).abs());
        }
    }
    assert!(worst <= 1e-2, "worst {worst}");
}
