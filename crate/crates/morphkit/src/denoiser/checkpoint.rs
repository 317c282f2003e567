//! Binary checkpoints.
//!
//! Model container: magic "MRPH", format version u32, an 8-field u32 config
//! block, then named weight records (name length + name, shape rank + dims,
//! little-endian f32 data). Adapters use the same record layout under magic
//! "MRPL" with rank and alpha appended to the config block.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::config::DenoiserConfig;
use super::lora::{LoraAdapter, LoraPair};
use super::model::Model;
use super::params::ModelParams;
use super::DenoiserError;
use crate::numerics::{Rng, Tensor};

const MODEL_MAGIC: &[u8; 4] = b"MRPH";
const ADAPTER_MAGIC: &[u8; 4] = b"MRPL";
const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_config(out: &mut Vec<u8>, cfg: &DenoiserConfig) {
    for v in [
        cfg.m,
        cfg.d_model,
        cfg.n_blocks,
        cfg.n_heads,
        cfg.d_cond,
        cfg.steps,
        cfg.channels_in,
        cfg.channels_out,
    ] {
        put_u32(out, v as u32);
    }
}

fn put_record(out: &mut Vec<u8>, name: &str, t: &Tensor) {
    put_u32(out, name.len() as u32);
    out.extend_from_slice(name.as_bytes());
    put_u32(out, t.shape().len() as u32);
    for &d in t.shape() {
        put_u32(out, d as u32);
    }
    for &v in t.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DenoiserError> {
        if self.pos + n > self.buf.len() {
            return Err(DenoiserError::BadCheckpoint("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DenoiserError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self) -> Result<f32, DenoiserError> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn config(&mut self) -> Result<DenoiserConfig, DenoiserError> {
        Ok(DenoiserConfig {
            m: self.u32()? as usize,
            d_model: self.u32()? as usize,
            n_blocks: self.u32()? as usize,
            n_heads: self.u32()? as usize,
            d_cond: self.u32()? as usize,
            steps: self.u32()? as usize,
            channels_in: self.u32()? as usize,
            channels_out: self.u32()? as usize,
        })
    }

    fn record(&mut self) -> Result<(String, Tensor), DenoiserError> {
        let name_len = self.u32()? as usize;
        let name = String::from_utf8(self.take(name_len)?.to_vec())
            .map_err(|_| DenoiserError::BadCheckpoint("non-utf8 record name".into()))?;
        let rank = self.u32()? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(self.u32()? as usize);
        }
        let n: usize = dims.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(self.f32()? as f64);
        }
        let t = Tensor::from_vec(&dims, data)
            .map_err(|e| DenoiserError::BadCheckpoint(e.to_string()))?;
        Ok((name, t))
    }
}

/// Serialize a model to MRPH bytes. Weights are stored as f32.
pub fn model_to_bytes(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut out, VERSION);
    put_config(&mut out, &model.cfg);
    let mut count = 0u32;
    model.params.visit(|_, _| count += 1);
    put_u32(&mut out, count);
    model.params.visit(|name, t| put_record(&mut out, name, t));
    out
}

pub fn save_model(path: &Path, model: &Model) -> Result<(), DenoiserError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&model_to_bytes(model))?;
    Ok(())
}

pub fn model_from_bytes(buf: &[u8]) -> Result<Model, DenoiserError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(DenoiserError::BadCheckpoint("bad magic, expected MRPH".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(DenoiserError::BadCheckpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let cfg = r.config()?;
    cfg.validate()?;
    let count = r.u32()? as usize;
    let mut records: BTreeMap<String, Tensor> = BTreeMap::new();
    for _ in 0..count {
        let (name, t) = r.record()?;
        records.insert(name, t);
    }
    let mut params = ModelParams::init(&cfg, &mut Rng::new(0));
    let mut missing = Vec::new();
    params.visit_mut(|name, slot| match records.remove(name) {
        Some(t) if t.shape() == slot.shape() => *slot = t,
        Some(t) => missing.push(format!("{name}: shape {:?} vs {:?}", t.shape(), slot.shape())),
        None => missing.push(format!("{name}: absent")),
    });
    if !missing.is_empty() {
        return Err(DenoiserError::BadCheckpoint(format!("bad records: {}", missing.join("; "))));
    }
    if !records.is_empty() {
        let extras: Vec<String> = records.keys().cloned().collect();
        return Err(DenoiserError::BadCheckpoint(format!("unknown records: {}", extras.join("; "))));
    }
    Model::new(cfg, params)
}

pub fn load_model(path: &Path) -> Result<Model, DenoiserError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    model_from_bytes(&buf)
}

/// Serialize an adapter to MRPL bytes, tagged with the base model config.
pub fn adapter_to_bytes(adapter: &LoraAdapter, base: &DenoiserConfig) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(ADAPTER_MAGIC);
    put_u32(&mut out, VERSION);
    put_config(&mut out, base);
    put_u32(&mut out, adapter.rank as u32);
    out.extend_from_slice(&(adapter.alpha as f32).to_le_bytes());
    let names = adapter.record_names();
    put_u32(&mut out, names.len() as u32);
    for (i, name) in names.iter().enumerate() {
        let pair = &adapter.pairs[i / 2];
        let t = if i % 2 == 0 { &pair.a } else { &pair.b };
        put_record(&mut out, name, t);
    }
    out
}

pub fn save_adapter(
    path: &Path,
    adapter: &LoraAdapter,
    base: &DenoiserConfig,
) -> Result<(), DenoiserError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&adapter_to_bytes(adapter, base))?;
    Ok(())
}

pub fn adapter_from_bytes(buf: &[u8]) -> Result<(LoraAdapter, DenoiserConfig), DenoiserError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != ADAPTER_MAGIC {
        return Err(DenoiserError::BadCheckpoint("bad magic, expected MRPL".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(DenoiserError::BadCheckpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let cfg = r.config()?;
    let rank = r.u32()? as usize;
    let alpha = r.f32()? as f64;
    let count = r.u32()? as usize;
    let mut adapter = LoraAdapter {
        rank,
        alpha,
        n_blocks: cfg.n_blocks,
        pairs: vec![
            LoraPair {
                a: Tensor::zeros(&[rank, cfg.d_model]),
                b: Tensor::zeros(&[cfg.d_model, rank]),
            };
            cfg.n_blocks * super::lora::TARGETS_PER_BLOCK
        ],
    };
    let names = adapter.record_names();
    if count != names.len() {
        return Err(DenoiserError::BadCheckpoint(format!(
            "expected {} records, found {count}",
            names.len()
        )));
    }
    let mut records: BTreeMap<String, Tensor> = BTreeMap::new();
    for _ in 0..count {
        let (name, t) = r.record()?;
        records.insert(name, t);
    }
    for (i, name) in names.iter().enumerate() {
        let t = records
            .remove(name)
            .ok_or_else(|| DenoiserError::BadCheckpoint(format!("{name}: absent")))?;
        let pair = &mut adapter.pairs[i / 2];
        let slot = if i % 2 == 0 { &mut pair.a } else { &mut pair.b };
        if t.shape() != slot.shape() {
            return Err(DenoiserError::BadCheckpoint(format!(
                "{name}: shape {:?} vs {:?}",
                t.shape(),
                slot.shape()
            )));
        }
        *slot = t;
    }
    Ok((adapter, cfg))
}

pub fn load_adapter(path: &Path) -> Result<(LoraAdapter, DenoiserConfig), DenoiserError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    adapter_from_bytes(&buf)
}
