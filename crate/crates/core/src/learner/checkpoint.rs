//! Binary checkpoint format, all integers and floats little-endian:
//!
//! | bytes            | content                                              |
//! |------------------|------------------------------------------------------|
//! | 8                | magic `SFLCKPT1`                                     |
//! | 4                | `u32` layer count (always 4)                         |
//! | 8 per layer      | `u32` fan_in, `u32` fan_out                          |
//! | 4                | `u32` log-std length (0 for a discrete head)         |
//! | 4 per weight     | `f32` data: per layer W (fan_in x fan_out, row-major) then b, then log-std |
//! | 8                | `u64` Adam step count                                |
//! | 4 per weight     | `f32` Adam first moments, same order as the weights  |
//! | 4 per weight     | `f32` Adam second moments                            |
//!
//! Layers are trunk 1, trunk 2, policy head, value head. Weights are stored as
//! `f32`, so a reloaded network matches the saved one to single precision.

use std::fs;
use std::path::Path;

use super::network::{AdamState, HeadKind, NetShape, PolicyParams};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SFLCKPT1";

pub fn checkpoint_bytes(params: &PolicyParams) -> Vec<u8> {
    let shape = params.shape;
    let n = params.theta.len();
    let mut out = Vec::with_capacity(8 + 4 + 32 + 4 + 8 + 12 * n);
    out.extend_from_slice(MAGIC);
    let layers = shape.layer_shapes();
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for (fan_in, fan_out) in layers {
        out.extend_from_slice(&(fan_in as u32).to_le_bytes());
        out.extend_from_slice(&(fan_out as u32).to_le_bytes());
    }
    out.extend_from_slice(&(shape.log_std_len() as u32).to_le_bytes());
    // the flat layout already follows W1 b1 W2 b2 Wp bp Wv bv log_std
    let put = |out: &mut Vec<u8>, xs: &[f64]| {
        for &w in xs {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
    };
    put(&mut out, &params.theta);
    out.extend_from_slice(&params.adam.step.to_le_bytes());
    put(&mut out, &params.adam.m);
    put(&mut out, &params.adam.v);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(4 * n)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect())
    }
}

pub fn params_from_bytes(buf: &[u8]) -> Result<PolicyParams> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let layers = r.u32()?;
    if layers != 4 {
        return Err(Error::Checkpoint(format!("expected 4 layers, found {layers}")));
    }
    let mut dims = [(0, 0); 4];
    for d in &mut dims {
        *d = (r.u32()?, r.u32()?);
    }
    let log_std_len = r.u32()?;
    let (obs_dim, hidden) = dims[0];
    let outputs = dims[2].1;
    let head = if log_std_len == 0 { HeadKind::Discrete(outputs) } else { HeadKind::Continuous(outputs) };
    let shape = NetShape { obs_dim, hidden, head };
    if shape.layer_shapes() != dims || (log_std_len != 0 && log_std_len != outputs) {
        return Err(Error::Checkpoint(format!("inconsistent layer shapes {dims:?}")));
    }
    let n = shape.param_count();
    let theta = r.f32s(n)?;
    let step = r.u64()?;
    let m = r.f32s(n)?;
    let v = r.f32s(n)?;
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(PolicyParams { shape, theta, adam: AdamState { step, m, v } })
}

pub fn save_checkpoint(params: &PolicyParams, path: &Path) -> Result<()> {
    fs::write(path, checkpoint_bytes(params))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyParams> {
    params_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn roundtrip_to_single_precision() {
        for head in [HeadKind::Discrete(3), HeadKind::Continuous(2)] {
            let shape = NetShape { obs_dim: 7, hidden: 5, head };
            let mut p = PolicyParams::init(shape, &mut stream(1, &[]));
            p.adam.step = 17;
            p.adam.m.iter_mut().enumerate().for_each(|(i, m)| *m = i as f64 * 0.5);
            let bytes = checkpoint_bytes(&p);
            assert_eq!(bytes.len(), 8 + 4 + 32 + 4 + 8 + 12 * shape.param_count());
            let q = params_from_bytes(&bytes).unwrap();
            assert_eq!(q.shape, p.shape);
            assert_eq!(q.adam.step, 17);
            assert_eq!(q.adam.m, p.adam.m);
            for (a, b) in p.theta.iter().zip(&q.theta) {
                assert_eq!(*a as f32, *b as f32);
            }
            // a second roundtrip is exact
            assert_eq!(checkpoint_bytes(&q), bytes);
        }
    }

    #[test]
    fn corrupt_files_rejected() {
        let p = PolicyParams::zeros(NetShape { obs_dim: 2, hidden: 3, head: HeadKind::Discrete(2) });
        let bytes = checkpoint_bytes(&p);
        assert!(params_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(params_from_bytes(&bad), Err(Error::Checkpoint(_))));
        let mut long = bytes;
        long.push(0);
        assert!(params_from_bytes(&long).is_err());
    }
}
