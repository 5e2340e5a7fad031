//! Acceptance checks. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sharedtf::approx::{self, determine_invsqrt, determine_recip, FIT_DELTA};
use sharedtf::encoder::{
    pooler_reference, reference_forward, EncoderConfig, EncoderShape, EncoderWeights,
};
use sharedtf::nonlinear::{tables, Activation, LayerNormParams, LnAffine, OppeVariant};
use sharedtf::primitives::{reconstruct, reconstruct_bits, share};
use sharedtf::{run_pair, AShare, BShare, FxpConfig, PairRun, Party, TruncMode};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($c:expr, $($f:tt)+) => {
        if !$c {
            return Err(format!($($f)+));
        }
    };
}

fn split_raw(cfg: &FxpConfig, raw: &[u64], rows: usize, seed: u64) -> [AShare; 2] {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (a, b) = share(cfg, raw, &mut rng);
    let cols = raw.len() / rows;
    [a.reshape(rows, cols).unwrap(), b.reshape(rows, cols).unwrap()]
}

fn split(cfg: &FxpConfig, xs: &[f64], rows: usize, seed: u64) -> [AShare; 2] {
    split_raw(cfg, &cfg.encode_vec(xs).unwrap(), rows, seed)
}

fn open(cfg: &FxpConfig, run: &PairRun<AShare>) -> Vec<f64> {
    cfg.decode_vec(&reconstruct(cfg, &run.outputs[0], &run.outputs[1]))
}

fn eval<F>(cfg: FxpConfig, xs: &[f64], rows: usize, seed: u64, f: F) -> (Vec<f64>, PairRun<AShare>)
where
    F: Fn(&mut Party, &AShare) -> sharedtf::Result<AShare> + Sync,
{
    let s = split(&cfg, xs, rows, seed);
    let run = run_pair(cfg, seed + 1, |p| {
        let i = p.id() as usize;
        f(p, &s[i])
    })
    .unwrap();
    (open(&cfg, &run), run)
}

fn max_err(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn oppe_ratio() -> Outcome {
    let cfg = FxpConfig::default();
    let poly = tables::table(Activation::Exp, &cfg).unwrap();
    ensure!(poly.m() == 8 && poly.d == 3, "exp table has m={} d={}", poly.m(), poly.d);
    let xs = grid(-16.0, 0.0, 4096);
    let (_, east) = eval(cfg, &xs, 1, 1, |p, x| p.exp_neg_with(x, OppeVariant::East));
    let (_, base) = eval(cfg, &xs, 1, 1, |p, x| p.exp_neg_with(x, OppeVariant::NfgenBaseline));
    let off = base.offline_bytes() as f64 / east.offline_bytes() as f64;
    let on = base.online_bytes() as f64 / east.online_bytes() as f64;
    let detail = format!(
        "offline east {} baseline {} ({off:.3}x), online east {} baseline {} ({on:.3}x)",
        east.offline_bytes(),
        base.offline_bytes(),
        east.online_bytes(),
        base.online_bytes()
    );
    ensure!(east.offline_bytes() as f64 <= base.offline_bytes() as f64 / 2.5, "{detail}");
    ensure!(east.online_bytes() <= base.online_bytes(), "{detail}");
    Ok(detail)
}

fn b2a_elimination() -> Outcome {
    let cfg = FxpConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let xs: Vec<f64> = (0..256).map(|_| rng.gen_range(-8.0..8.0)).collect();
    let neg: Vec<f64> = xs.iter().map(|v| -v.abs()).collect();
    let mut notes = Vec::new();
    for (name, act, input) in [("gelu", Activation::Gelu, &xs), ("tanh", Activation::Tanh1, &xs), ("exp", Activation::Exp, &neg)] {
        let m = tables::table(act, &cfg).unwrap().m() as u64;
        for n in [1usize, input.len()] {
            let x = &input[..n];
            let run_variant = |v: OppeVariant| {
                eval(cfg, x, 1, 3, move |p, s| match act {
                    Activation::Gelu => p.gelu_with(s, v),
                    Activation::Tanh1 => p.tanh_with(s, v),
                    Activation::Exp => p.exp_neg_with(s, v),
                })
                .1
            };
            let e = run_variant(OppeVariant::East);
            let b = run_variant(OppeVariant::NfgenBaseline);
            for c in &e.counters {
                ensure!(c.b2a_slots == 0, "{name} east n={n}: {} b2a slots", c.b2a_slots);
            }
            for c in &b.counters {
                ensure!(c.b2a_slots == m * n as u64, "{name} baseline n={n}: {} b2a slots, want {}", c.b2a_slots, m * n as u64);
            }
        }
        notes.push(format!("{name} m={m}"));
    }
    let (_, sm) = eval(cfg, &xs, 16, 4, |p, s| p.softmax(s));
    ensure!(sm.counters[0].b2a_slots == 0, "softmax used {} b2a slots", sm.counters[0].b2a_slots);
    Ok(format!("east 0 conversions, baseline m per element per call ({})", notes.join(", ")))
}

fn activation_accuracy() -> Outcome {
    let cfg = FxpConfig::default();
    let tol = FIT_DELTA + 4.0 * cfg.ulp();
    let mut notes = Vec::new();
    let cases: [(&str, Activation, f64, f64, fn(f64) -> f64); 3] = [
        ("gelu", Activation::Gelu, -8.0, 8.0, approx::gelu),
        ("tanh", Activation::Tanh1, -7.0, 7.0, f64::tanh),
        ("exp_neg", Activation::Exp, -20.0, 0.0, f64::exp),
    ];
    for (name, act, lo, hi, f) in cases {
        let xs = grid(lo, hi, 10_000);
        let xq: Vec<f64> = cfg.decode_vec(&cfg.encode_vec(&xs).unwrap());
        let (got, _) = eval(cfg, &xs, 1, 5, move |p, s| match act {
            Activation::Gelu => p.gelu(s),
            Activation::Tanh1 => p.tanh(s),
            Activation::Exp => p.exp_neg(s),
        });
        let want: Vec<f64> = xq.iter().map(|&x| f(x)).collect();
        let e = max_err(&got, &want);
        ensure!(e <= tol, "{name} max error {e:.3e} > {tol:.3e}");
        notes.push(format!("{name} {e:.2e}"));
    }
    let w0 = tables::table(Activation::Gelu, &cfg).unwrap().breakpoints[0];
    let tail = grid(w0 - 8.0, w0, 1000);
    let (got, _) = eval(cfg, &tail, 1, 6, |p, s| p.gelu(s));
    ensure!(got.iter().all(|&v| v == 0.0), "gelu left tail not exactly zero");
    Ok(format!("max errors {} (tolerance {tol:.3e}), gelu tail exact", notes.join(", ")))
}

fn determine_correctness() -> Outcome {
    let cfg = FxpConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut worst_t = 0;
    for trial in 0..20 {
        let a = rng.gen_range(1.0..255.0f64);
        let b = rng.gen_range(a + 0.5..=256.0f64);
        let delta = 2f64.powf(-rng.gen_range(6.0..=12.0f64));
        for (kind, plan) in [("recip", determine_recip(a, b, delta)), ("invsqrt", determine_invsqrt(a, b, delta))] {
            let plan = plan.map_err(|e| format!("{kind} [{a}, {b}] {delta}: {e}"))?;
            let fe = plan.grid_error();
            ensure!(fe <= delta, "trial {trial} {kind} [{a:.3}, {b:.3}] float error {fe:.3e} > {delta:.3e}");
            let slack = delta + plan.t as f64 * 4.0 * cfg.ulp();
            let xe = plan.fxp_grid_error(&cfg).unwrap();
            ensure!(xe <= slack, "trial {trial} {kind} [{a:.3}, {b:.3}] fxp error {xe:.3e} > {slack:.3e}");
            worst_t = worst_t.max(plan.t);
            if trial < 4 {
                let xs = grid(a, b, 200);
                let (got, _) = eval(cfg, &xs, 1, 8, |p, s| match kind {
                    "recip" => p.reciprocal(s, &plan),
                    _ => p.invsqrt(s, &plan),
                });
                for (g, x) in got.iter().zip(&xs) {
                    let want = plan.kind.target(cfg.decode(cfg.encode(*x).unwrap()));
                    ensure!((g - want).abs() <= slack, "trial {trial} secure {kind}({x}) = {g}, want {want}");
                }
            }
        }
    }
    Ok(format!("20 recip and 20 invsqrt plans within bounds, max t = {worst_t}"))
}

fn softmax_accuracy() -> Outcome {
    let cfg = FxpConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut by_n: std::collections::BTreeMap<usize, Vec<Vec<f64>>> = Default::default();
    for _ in 0..1000 {
        let n = rng.gen_range(1..=128usize);
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        by_n.entry(n).or_default().push(cfg.decode_vec(&cfg.encode_vec(&row).unwrap()));
    }
    let (mut worst, mut worst_sum, mut gaps) = (0.0f64, 0.0f64, Vec::new());
    for (n, rows) in &by_n {
        let flat: Vec<f64> = rows.concat();
        let (got, _) = eval(cfg, &flat, rows.len(), 10 + *n as u64, |p, s| p.softmax(s));
        for (r, row) in rows.iter().enumerate() {
            let g = &got[r * n..(r + 1) * n];
            let want = sharedtf::encoder::softmax_rows(row, *n);
            worst = worst.max(max_err(g, &want));
            let sum_dev = (g.iter().sum::<f64>() - 1.0).abs();
            ensure!(sum_dev <= *n as f64 * 4.0 * cfg.ulp(), "row sum off by {sum_dev:.3e} at n={n}");
            worst_sum = worst_sum.max(sum_dev / *n as f64);
            let (i, j) = (argmax(g), argmax(&want));
            if i != j {
                gaps.push(format!("{:.0}", (row[j] - row[i]) / cfg.ulp()));
            }
        }
    }
    ensure!(worst <= 1e-2, "max element error {worst:.3e}");
    ensure!(
        gaps.is_empty(),
        "max element error {worst:.2e}; {} argmax mismatches, top-two input gaps {} ulp",
        gaps.len(),
        gaps.join(", ")
    );
    Ok(format!("max element error {worst:.2e}, worst row-sum deviation per element {worst_sum:.2e}, argmax 1000/1000"))
}

fn ln_ref(x: &[f64], g: &[f64], b: &[f64], eps: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    x.iter().zip(g.iter().zip(b)).map(|(v, (g, b))| (v - mu) / (var + eps).sqrt() * g + b).collect()
}

fn layernorm_accuracy() -> Outcome {
    let cfg = FxpConfig::default();
    let params = LayerNormParams::default();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let n = 64;
    let rows = 1000;
    let mut xs = Vec::with_capacity(rows * n);
    for _ in 0..rows {
        let mu = rng.gen_range(-3.0..3.0);
        let sd = rng.gen_range(0.5..3.0);
        xs.extend((0..n).map(|_| mu + sd * rng.gen_range(-1.7..1.7)));
    }
    let xs = cfg.decode_vec(&cfg.encode_vec(&xs).unwrap());
    let aff = LnAffine {
        gamma: (0..n).map(|_| rng.gen_range(0.5..1.5)).collect(),
        beta: (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect(),
    };
    let (y, _) = eval(cfg, &xs, rows, 12, |p, s| {
        let a = (p.id() == 0).then_some(&aff);
        p.layernorm(s, a, &params)
    });
    let mut worst = 0.0f64;
    for r in 0..rows {
        let want = ln_ref(&xs[r * n..(r + 1) * n], &aff.gamma, &aff.beta, params.eps);
        worst = worst.max(max_err(&y[r * n..(r + 1) * n], &want));
    }
    ensure!(worst <= 1e-2, "max error {worst:.3e}");
    let (c, _) = eval(cfg, &vec![1.75; n * 4], 4, 13, |p, s| {
        let a = (p.id() == 0).then_some(&aff);
        p.layernorm(s, a, &params)
    });
    for (k, v) in c.iter().enumerate() {
        let b = aff.beta[k % n];
        let want = cfg.decode(cfg.encode(b).unwrap());
        ensure!((v - want).abs() <= 2.0 * cfg.ulp(), "constant input gave {v}, beta {b}");
    }
    Ok(format!("max error {worst:.2e} over 1000 vectors, constant input returns beta"))
}

fn bits_split(bits: &[u8], seed: u64) -> [BShare; 2] {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let r: Vec<u8> = bits.iter().map(|_| rng.gen_range(0..2u8)).collect();
    let other = r.iter().zip(bits).map(|(a, b)| a ^ b).collect();
    [BShare::new(0, r), BShare::new(1, other)]
}

fn primitive_oracles() -> Outcome {
    let c8 = FxpConfig::new(8, 2).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for a in 0..256u64 {
        for b in 0..256u64 {
            xs.push(a);
            ys.push(b);
        }
    }
    let sx = split_raw(&c8, &xs, 1, 20);
    let sy = split_raw(&c8, &ys, 1, 21);
    let run = run_pair(c8, 22, |p| {
        let i = p.id() as usize;
        p.gt(&sx[i], &sy[i])
    })
    .unwrap();
    let got = reconstruct_bits(&run.outputs[0], &run.outputs[1]);
    for k in 0..xs.len() {
        let want = c8.to_signed(xs[k]) > c8.to_signed(ys[k]);
        ensure!((got[k] == 1) == want, "gt({}, {}) = {}", c8.to_signed(xs[k]), c8.to_signed(ys[k]), got[k]);
    }

    let (mut cs, mut as_) = (Vec::new(), Vec::new());
    for c in 0..2u8 {
        for a in 0..256u64 {
            cs.push(c);
            as_.push(a);
        }
    }
    let sc = bits_split(&cs, 23);
    let sa = split_raw(&c8, &as_, 1, 24);
    let run = run_pair(c8, 25, |p| {
        let i = p.id() as usize;
        p.mux(&sc[i], &sa[i])
    })
    .unwrap();
    let got = reconstruct(&c8, &run.outputs[0], &run.outputs[1]);
    for k in 0..cs.len() {
        let want = if cs[k] == 1 { as_[k] } else { 0 };
        ensure!(got[k] == want, "mux({}, {}) = {}", cs[k], as_[k], got[k]);
    }

    let cfg = FxpConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(26);
    let n = 100_000;
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
    let (ra, rb) = (cfg.encode_vec(&a).unwrap(), cfg.encode_vec(&b).unwrap());
    let sa = split_raw(&cfg, &ra, 1, 27);
    let sb = split_raw(&cfg, &rb, 1, 28);
    let run = run_pair(cfg, 29, |p| {
        let i = p.id() as usize;
        p.mul(&sa[i], &sb[i])
    })
    .unwrap();
    let got = reconstruct(&cfg, &run.outputs[0], &run.outputs[1]);
    let mut worst = 0i64;
    for k in 0..n {
        let prod = cfg.to_signed(ra[k]) as i128 * cfg.to_signed(rb[k]) as i128;
        let want = (prod >> cfg.frac()) as i64;
        worst = worst.max((cfg.to_signed(got[k]) - want).abs());
    }
    ensure!(worst <= 2, "mul off by {worst} ulp");
    Ok(format!("gt 65536/65536, mux 512/512 at ell=8; mul max deviation {worst} ulp over 1e5 pairs"))
}

fn truncation_equivalence() -> Outcome {
    let cfg = FxpConfig::default();
    let f = cfg.frac();
    let bound_real = 4096.0;
    let mut rng = ChaCha20Rng::seed_from_u64(30);
    let n = 100_000;
    let raw: Vec<u64> = (0..n).map(|_| cfg.encode_at(rng.gen_range(-bound_real..bound_real), 2 * f).unwrap()).collect();
    let bound = cfg.encode_at(bound_real, 2 * f).unwrap();
    let s = split_raw(&cfg, &raw, 1, 31);
    let run = run_pair(cfg, 32, |p| {
        let i = p.id() as usize;
        let a = p.trunc(&s[i], f, TruncMode::PublicOffset { bound })?;
        let b = p.trunc(&s[i], f, TruncMode::Faithful)?;
        Ok((a, b))
    })
    .unwrap();
    let off = reconstruct(&cfg, &run.outputs[0].0, &run.outputs[1].0);
    let fai = reconstruct(&cfg, &run.outputs[0].1, &run.outputs[1].1);
    let mut worst = 0;
    for k in 0..n {
        worst = worst.max(cfg.to_signed(cfg.sub(off[k], fai[k])).abs());
    }
    ensure!(worst <= 1, "public offset and faithful differ by {worst} ulp");
    Ok(format!("max difference {worst} ulp over 1e5 values with |x| <= {bound_real}"))
}

fn server<'a>(p: &Party, w: &'a EncoderWeights) -> Option<&'a EncoderWeights> {
    (p.id() == 0).then_some(w)
}

fn embeddings(rows: usize, dm: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    (0..rows * dm).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

fn combined_qkv() -> Outcome {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(64, 4, 128, 2).unwrap();
    let w = EncoderWeights::random(shape, 40);
    let ecfg = EncoderConfig::new(shape);
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let x = split(&cfg, &embeddings(8, 64, &mut rng), 8, 42);
    let go = |combined: bool| {
        run_pair(cfg, 43, |p| {
            let i = p.id() as usize;
            let [q, k, v] = if combined {
                p.qkv_combined(&x[i], server(p, &w), &ecfg)?
            } else {
                p.qkv_separate(&x[i], server(p, &w), &ecfg)?
            };
            AShare::hconcat(&[q, k, v])
        })
        .unwrap()
    };
    let (c, s) = (go(true), go(false));
    let a = reconstruct(&cfg, &c.outputs[0], &c.outputs[1]);
    let b = reconstruct(&cfg, &s.outputs[0], &s.outputs[1]);
    let worst = a.iter().zip(&b).map(|(u, v)| cfg.to_signed(cfg.sub(*u, *v)).abs()).max().unwrap();
    ensure!(worst <= 1, "combined and separate differ by {worst} ulp");
    ensure!(c.offline_bytes() < s.offline_bytes(), "offline {} vs {}", c.offline_bytes(), s.offline_bytes());
    Ok(format!("max difference {worst} ulp, offline bytes {} vs {}", c.offline_bytes(), s.offline_bytes()))
}

fn tiny_encoder() -> Outcome {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(16, 2, 64, 2).unwrap();
    let ecfg = EncoderConfig::new(shape);
    let mut rng = ChaCha20Rng::seed_from_u64(50);
    let (mut worst, mut agree) = (0.0f64, 0);
    for inst in 0..100u64 {
        let w = EncoderWeights::random(shape, 1000 + inst);
        let xs = cfg.decode_vec(&cfg.encode_vec(&embeddings(8, 16, &mut rng)).unwrap());
        let x = split(&cfg, &xs, 8, 2000 + inst);
        let run = run_pair(cfg, 3000 + inst, |p| {
            let (h, _) = p.encoder_forward(&x[p.id() as usize], server(p, &w), &ecfg)?;
            let logits = p.pooler_head(&h, server(p, &w), &ecfg)?;
            Ok((h, logits))
        })
        .unwrap();
        let h = cfg.decode_vec(&reconstruct(&cfg, &run.outputs[0].0, &run.outputs[1].0));
        let logits = cfg.decode_vec(&reconstruct(&cfg, &run.outputs[0].1, &run.outputs[1].1));
        let reference = reference_forward(&w, &xs, 8, ecfg.ln.eps);
        worst = worst.max(max_err(&h, &reference.out));
        let (_, want) = pooler_reference(&w.pooler, &w.classifier, &reference.out);
        if argmax(&logits) == argmax(&want) {
            agree += 1;
        }
    }
    ensure!(worst <= 0.1, "max encoder error {worst:.3e}");
    ensure!(agree >= 95, "pooler argmax agreement {agree}/100");
    Ok(format!("max encoder error {worst:.3e}, pooler argmax agreement {agree}/100"))
}

fn padding_elision() -> Outcome {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(16, 2, 64, 2).unwrap();
    let w = EncoderWeights::random(shape, 60);
    let mut rng = ChaCha20Rng::seed_from_u64(61);
    let x = split(&cfg, &embeddings(8, 16, &mut rng), 8, 62);
    let go = |pad: Option<usize>| {
        let mut ecfg = EncoderConfig::new(shape);
        ecfg.pad_to = pad;
        run_pair(cfg, 63, |p| {
            p.set_exact_truncation(true);
            Ok(p.encoder_forward(&x[p.id() as usize], server(p, &w), &ecfg)?.0)
        })
        .unwrap()
    };
    let (short, padded) = (go(None), go(Some(128)));
    let a = reconstruct(&cfg, &short.outputs[0], &short.outputs[1]);
    let b = reconstruct(&cfg, &padded.outputs[0], &padded.outputs[1]);
    let differing = a.iter().zip(&b).filter(|(u, v)| u != v).count();
    ensure!(a.len() == b.len() && differing == 0, "{differing} of {} entries differ", a.len());
    let ratio = padded.online_bytes() as f64 / short.online_bytes() as f64;
    ensure!(ratio >= 10.0, "online traffic ratio {ratio:.2}");
    Ok(format!("identical reconstructions on 8 real rows, online bytes {} vs {} ({ratio:.1}x)", short.online_bytes(), padded.online_bytes()))
}

fn packed_rounds() -> Outcome {
    let cfg = FxpConfig::default();
    let recip = determine_recip(1.0, 64.0, 1.0 / 1024.0).unwrap();
    let inv = determine_invsqrt(0.25, 16.0, 1.0 / 1024.0).unwrap();
    type Prog<'a> = (&'a str, Box<dyn Fn(&mut Party, &AShare) -> sharedtf::Result<AShare> + Sync + 'a>);
    let progs: Vec<Prog> = vec![
        ("mul", Box::new(|p, x| p.mul(x, x))),
        ("trunc", Box::new(|p, x| p.trunc(x, 4, TruncMode::Faithful))),
        ("exact-trunc", Box::new(|p, x| p.trunc(x, 4, TruncMode::Exact { bound: 1 << 40 }))),
        ("msb+b2a", Box::new(|p, x| {
            let b = p.msb(x)?;
            p.b2a(&b)
        })),
        ("gt+mux", Box::new(|p, x| {
            let c = p.gt_scalar(x, 0)?;
            p.mux(&c, x)
        })),
        ("gelu", Box::new(|p, x| p.gelu(x))),
        ("tanh", Box::new(|p, x| p.tanh(x))),
        ("exp_neg", Box::new(|p, x| p.exp_neg(x))),
        ("reciprocal", Box::new(|p, x| p.reciprocal(x, &recip))),
        ("invsqrt", Box::new(|p, x| p.invsqrt(x, &inv))),
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(70);
    let xs: Vec<f64> = (0..4096).map(|_| rng.gen_range(1.0..8.0)).collect();
    let mut notes = Vec::new();
    for (name, prog) in &progs {
        let mut rounds = Vec::new();
        for n in [1usize, 64, 4096] {
            let (_, run) = eval(cfg, &xs[..n], 1, 71, |p, s| prog(p, s));
            rounds.push(run.rounds());
        }
        ensure!(rounds.iter().all(|&r| r == rounds[0]), "{name}: rounds {rounds:?} for sizes 1, 64, 4096");
        notes.push(format!("{name} {}", rounds[0]));
    }
    let mut rounds = Vec::new();
    for rows in [1usize, 64, 4096] {
        let m: Vec<f64> = (0..rows * 8).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let (_, run) = eval(cfg, &m, rows, 72, |p, s| p.softmax(s));
        rounds.push(run.rounds());
    }
    ensure!(rounds.iter().all(|&r| r == rounds[0]), "softmax rows: rounds {rounds:?}");
    notes.push(format!("softmax {}", rounds[0]));
    Ok(format!("rounds per protocol: {}", notes.join(", ")))
}

fn main() {
    let checks: [(u8, &str, fn() -> Outcome); 12] = [
        (1, "OPPE communication ratio", oppe_ratio),
        (2, "B2A elimination", b2a_elimination),
        (3, "activation accuracy", activation_accuracy),
        (4, "Newton plan determination", determine_correctness),
        (5, "softmax", softmax_accuracy),
        (6, "layer normalization", layernorm_accuracy),
        (7, "primitive oracles", primitive_oracles),
        (8, "truncation equivalence", truncation_equivalence),
        (9, "combined QKV", combined_qkv),
        (10, "tiny encoder", tiny_encoder),
        (11, "padding elision", padding_elision),
        (12, "packed rounds", packed_rounds),
    ];
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in checks {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = std::time::Instant::now();
        let res = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion check(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all checks passed");
}
