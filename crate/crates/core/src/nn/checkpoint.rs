//! `HPRM` parameter checkpoints.
//!
//! Layout (little-endian): magic `HPRM`, u32 version, u32 input_dim, u32 hidden,
//! u32 dense, u32 heads, u32 task flags (1 quality, 2 intelligibility), u32 tensor
//! count, then per tensor: u32 name length, UTF-8 name, u32 rows, u32 cols,
//! `rows·cols` f32 values row-major.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::model::{ModelConfig, ModelParams, TaskSet};
use super::{NnError, Result};
use crate::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HPRM";
pub const CHECKPOINT_VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> NnError {
    NnError::Checkpoint(msg.into())
}

pub fn write_checkpoint<T: Scalar, W: Write>(w: W, params: &ModelParams<T>) -> Result<()> {
    let mut w = BufWriter::new(w);
    let c = &params.config;
    w.write_all(CHECKPOINT_MAGIC)?;
    let tensors = params.named_tensors();
    for v in [
        CHECKPOINT_VERSION,
        c.input_dim as u32,
        c.hidden as u32,
        c.dense as u32,
        c.heads as u32,
        c.tasks.flags(),
        tensors.len() as u32,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.rows() as u32).to_le_bytes())?;
        w.write_all(&(t.cols() as u32).to_le_bytes())?;
        for v in t.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| bad(format!("truncated: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

/// Reads a checkpoint, validating every tensor name and shape against the stored config.
pub fn read_checkpoint<T: Scalar, R: Read>(r: R) -> Result<ModelParams<T>> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("missing magic"))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let input_dim = read_u32(&mut r)? as usize;
    let hidden = read_u32(&mut r)? as usize;
    let dense = read_u32(&mut r)? as usize;
    let heads = read_u32(&mut r)? as usize;
    let flags = read_u32(&mut r)?;
    let tasks = TaskSet::from_flags(flags).ok_or_else(|| bad(format!("bad task flags {flags}")))?;
    let config = ModelConfig { input_dim, hidden, dense, heads, tasks };
    config.validate()?;
    let mut params = ModelParams::<T>::zeros(config);
    let expected: Vec<(String, (usize, usize))> =
        params.named_tensors().into_iter().map(|(n, t)| (n, t.shape())).collect();
    let count = read_u32(&mut r)? as usize;
    if count != expected.len() {
        return Err(bad(format!("{count} tensors, expected {}", expected.len())));
    }
    for (slot, (name, shape)) in params.tensors_mut().into_iter().zip(expected) {
        let len = read_u32(&mut r)? as usize;
        if len > 256 {
            return Err(bad("tensor name too long"));
        }
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf).map_err(|_| bad("truncated name"))?;
        let got = String::from_utf8(buf).map_err(|_| bad("tensor name not UTF-8"))?;
        if got != name {
            return Err(bad(format!("tensor {got:?} where {name:?} expected")));
        }
        let dims = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
        if dims != shape {
            return Err(bad(format!("{name}: shape {dims:?}, expected {shape:?}")));
        }
        let mut b = [0u8; 4];
        for v in slot.data_mut() {
            r.read_exact(&mut b).map_err(|_| bad(format!("{name}: truncated data")))?;
            let x = f32::from_le_bytes(b);
            if !x.is_finite() {
                return Err(bad(format!("{name}: non-finite value")));
            }
            *v = T::lit(x as f64);
        }
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(bad("trailing bytes"));
    }
    Ok(params)
}

pub fn save_checkpoint<T: Scalar>(path: impl AsRef<Path>, params: &ModelParams<T>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    write_checkpoint(fs::File::create(&tmp)?, params)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<ModelParams<T>> {
    read_checkpoint(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(tasks: TaskSet) -> ModelParams<f32> {
        let cfg = ModelConfig { input_dim: 4, hidden: 3, dense: 4, heads: 2, tasks };
        ModelParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn round_trip_preserves_f32_params() {
        for tasks in [TaskSet::Both, TaskSet::IntelligibilityOnly] {
            let p = toy(tasks);
            let mut bytes = Vec::new();
            write_checkpoint(&mut bytes, &p).unwrap();
            assert_eq!(&bytes[..4], b"HPRM");
            assert_eq!(read_checkpoint::<f32, _>(&bytes[..]).unwrap(), p);
        }
    }

    #[test]
    fn corrupted_files_rejected() {
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &toy(TaskSet::Both)).unwrap();
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(read_checkpoint::<f32, _>(&wrong_magic[..]).is_err());
        assert!(read_checkpoint::<f32, _>(&bytes[..bytes.len() - 2]).is_err());
        let mut wrong_hidden = bytes.clone();
        wrong_hidden[12] = 9;
        assert!(read_checkpoint::<f32, _>(&wrong_hidden[..]).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(read_checkpoint::<f32, _>(&extra[..]).is_err());
    }
}
