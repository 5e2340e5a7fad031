//! Self-describing binary tensor archive: magic, version, tensor count, then
//! per tensor its name, shape, fractional bits and raw ring values (LE).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::ring::{FxpConfig, RingValue};

const MAGIC: &[u8; 4] = b"STFT";
const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub ell: u32,
    pub frac: u32,
    pub data: Vec<u64>,
}

impl Tensor {
    pub fn encode(name: &str, shape: Vec<usize>, vals: &[f64], cfg: &FxpConfig) -> Result<Tensor> {
        if shape.iter().product::<usize>() != vals.len() {
            return Err(Error::Shape(format!("tensor {name}: {} values for shape {shape:?}", vals.len())));
        }
        Ok(Tensor {
            name: name.to_string(),
            shape,
            ell: cfg.ell(),
            frac: cfg.frac(),
            data: cfg.encode_vec(vals)?,
        })
    }

    pub fn decode(&self) -> Vec<f64> {
        let cfg = FxpConfig::new(self.ell, self.frac).expect("archive tensors carry a valid config");
        self.data.iter().map(|&v| cfg.decode(RingValue(v))).collect()
    }
}

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_bytes<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn write_archive(w: &mut impl Write, tensors: &[Tensor]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    put_u32(w, tensors.len() as u32)?;
    for t in tensors {
        let name = t.name.as_bytes();
        if name.len() > u16::MAX as usize {
            return Err(Error::Format("tensor name too long".into()));
        }
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&[t.shape.len() as u8, t.ell as u8, t.frac as u8])?;
        for &d in &t.shape {
            put_u32(w, d as u32)?;
        }
        for &v in &t.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_archive(r: &mut impl Read) -> Result<Vec<Tensor>> {
    if &get_bytes::<4>(r)? != MAGIC {
        return Err(Error::Format("not a tensor archive".into()));
    }
    let [version] = get_bytes::<1>(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported archive version {version}")));
    }
    let count = u32::from_le_bytes(get_bytes(r)?) as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = u16::from_le_bytes(get_bytes(r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        let [ndim, ell, frac] = get_bytes::<3>(r)?;
        FxpConfig::new(ell as u32, frac as u32)?;
        let shape: Vec<usize> = (0..ndim)
            .map(|_| get_bytes::<4>(r).map(|b| u32::from_le_bytes(b) as usize))
            .collect::<Result<_>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| get_bytes::<8>(r).map(u64::from_le_bytes))
            .collect::<Result<_>>()?;
        out.push(Tensor {
            name,
            shape,
            ell: ell as u32,
            frac: frac as u32,
            data,
        });
    }
    Ok(out)
}
