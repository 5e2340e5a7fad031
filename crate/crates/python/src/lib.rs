//! Python bindings: fixed-point encoding, fitted tables, Newton plans and
//! in-process two-party runs of the sharedtf protocols.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use sharedtf::approx::{determine_invsqrt, determine_recip};
use sharedtf::encoder::{reference_forward, EncoderConfig, EncoderShape, EncoderWeights};
use sharedtf::nonlinear::{tables, Activation, LayerNormParams, LnAffine, OppeVariant};
use sharedtf::{run_pair, AShare, FxpConfig, Party, PairRun, CLIENT, SERVER};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fxp(ell: u32, frac: u32) -> PyResult<FxpConfig> {
    FxpConfig::new(ell, frac).map_err(err)
}

fn variant(name: &str) -> PyResult<OppeVariant> {
    match name {
        "east" => Ok(OppeVariant::East),
        "nfgen" => Ok(OppeVariant::NfgenBaseline),
        _ => Err(err(format!("unknown variant {name:?} (east or nfgen)"))),
    }
}

fn activation(name: &str) -> PyResult<Activation> {
    match name {
        "gelu" => Ok(Activation::Gelu),
        "tanh1" => Ok(Activation::Tanh1),
        "exp" => Ok(Activation::Exp),
        _ => Err(err(format!("unknown activation {name:?} (gelu, tanh1 or exp)"))),
    }
}

/// Encodes reals as ring elements (unsigned integers).
#[pyfunction]
#[pyo3(signature = (values, ell=64, frac=12))]
fn encode(values: Vec<f64>, ell: u32, frac: u32) -> PyResult<Vec<u64>> {
    fxp(ell, frac)?.encode_vec(&values).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (values, ell=64, frac=12))]
fn decode(values: Vec<u64>, ell: u32, frac: u32) -> PyResult<Vec<f64>> {
    Ok(fxp(ell, frac)?.decode_vec(&values))
}

/// Text form of the fitted piecewise table for `name`.
#[pyfunction]
#[pyo3(signature = (name, ell=64, frac=12))]
fn fitted_table(name: &str, ell: u32, frac: u32) -> PyResult<String> {
    Ok(tables::table(activation(name)?, &fxp(ell, frac)?).map_err(err)?.to_text())
}

/// Newton plan for `kind` in {"recip", "invsqrt"} on `[a, b]`.
#[pyfunction]
fn newton_plan<'py>(py: Python<'py>, kind: &str, a: f64, b: f64, delta: f64) -> PyResult<Bound<'py, PyDict>> {
    let plan = match kind {
        "recip" => determine_recip(a, b, delta),
        "invsqrt" => determine_invsqrt(a, b, delta),
        _ => return Err(err(format!("unknown plan kind {kind:?}"))),
    }
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("y0", plan.y0)?;
    d.set_item("t", plan.t)?;
    d.set_item("grid_error", plan.grid_error())?;
    d.set_item("text", plan.to_text())?;
    Ok(d)
}

fn summary<'py>(py: Python<'py>, cfg: &FxpConfig, run: &PairRun<AShare>) -> PyResult<Bound<'py, PyDict>> {
    let out = sharedtf::primitives::reconstruct(cfg, &run.outputs[0], &run.outputs[1]);
    let d = PyDict::new(py);
    d.set_item("output", cfg.decode_vec(&out))?;
    d.set_item("online_bytes", run.online_bytes())?;
    d.set_item("offline_bytes", run.offline_bytes())?;
    d.set_item("rounds", run.rounds())?;
    d.set_item("b2a_slots", run.counters[0].b2a_slots)?;
    Ok(d)
}

fn client_input(p: &mut Party, cfg: &FxpConfig, xs: &[f64], rows: usize) -> sharedtf::Result<AShare> {
    let cols = xs.len() / rows;
    let vals = if p.id() == CLIENT { Some(cfg.encode_vec(xs)?) } else { None };
    let x = p.share_input(CLIENT, vals.as_deref(), rows, cols)?;
    p.channel().flush()?;
    Ok(x)
}

/// Runs a protocol on `values` (client input, `rows` rows) with both
/// parties in this process. Returns the opened output and traffic.
///
/// `protocol` is one of gelu, tanh, exp, softmax, layernorm, reciprocal,
/// invsqrt. Layer normalization uses gamma = 1 and beta = 0.
#[pyfunction]
#[pyo3(signature = (protocol, values, rows=1, variant_name="east", seed=1, ell=64, frac=12))]
#[allow(clippy::too_many_arguments)]
fn run_protocol<'py>(
    py: Python<'py>,
    protocol: &str,
    values: Vec<f64>,
    rows: usize,
    variant_name: &str,
    seed: u64,
    ell: u32,
    frac: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = fxp(ell, frac)?;
    let v = variant(variant_name)?;
    if rows == 0 || values.is_empty() || values.len() % rows != 0 {
        return Err(err(format!("{} values do not split into {rows} rows", values.len())));
    }
    let cols = values.len() / rows;
    let recip = tables::recip_plan(1.0, 64.0, 1.0 / 1024.0).map_err(err)?;
    let inv = tables::invsqrt_plan(0.25, 16.0, 1.0 / 1024.0).map_err(err)?;
    let aff = LnAffine { gamma: vec![1.0; cols], beta: vec![0.0; cols] };
    let known = ["gelu", "tanh", "exp", "softmax", "layernorm", "reciprocal", "invsqrt"];
    if !known.contains(&protocol) {
        return Err(err(format!("unknown protocol {protocol:?}")));
    }
    let run = py
        .detach(|| {
            run_pair(cfg, seed, |p| {
                let x = client_input(p, &cfg, &values, rows)?;
                match protocol {
                    "gelu" => p.gelu_with(&x, v),
                    "tanh" => p.tanh_with(&x, v),
                    "exp" => p.exp_neg_with(&x, v),
                    "softmax" => p.softmax(&x),
                    "layernorm" => {
                        let a = (p.id() == SERVER).then_some(&aff);
                        p.layernorm(&x, a, &LayerNormParams::default())
                    }
                    "reciprocal" => p.reciprocal(&x, &recip),
                    _ => p.invsqrt(&x, &inv),
                }
            })
        })
        .map_err(err)?;
    summary(py, &cfg, &run)
}

/// One secure encoder layer on random weights (from `seed`) and the given
/// `seq x model_dim` embeddings, with the float64 reference for comparison.
#[pyfunction]
#[pyo3(signature = (values, seq, model_dim=16, heads=2, ffn_dim=64, seed=1))]
fn encoder_forward<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    seq: usize,
    model_dim: usize,
    heads: usize,
    ffn_dim: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = FxpConfig::default();
    let shape = EncoderShape::new(model_dim, heads, ffn_dim, 2).map_err(err)?;
    if values.len() != seq * model_dim {
        return Err(err(format!("expected {} values, got {}", seq * model_dim, values.len())));
    }
    let w = EncoderWeights::random(shape, seed);
    let ecfg = EncoderConfig::new(shape);
    let run = py
        .detach(|| {
            run_pair(cfg, seed, |p| {
                let x = client_input(p, &cfg, &values, seq)?;
                let weights = (p.id() == SERVER).then_some(&w);
                Ok(p.encoder_forward(&x, weights, &ecfg)?.0)
            })
        })
        .map_err(err)?;
    let d = summary(py, &cfg, &run)?;
    let xq = cfg.decode_vec(&cfg.encode_vec(&values).map_err(err)?);
    d.set_item("reference", reference_forward(&w, &xq, seq, ecfg.ln.eps).out)?;
    Ok(d)
}

#[pymodule]
fn sharedtf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(fitted_table, m)?)?;
    m.add_function(wrap_pyfunction!(newton_plan, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(encoder_forward, m)?)?;
    Ok(())
}
