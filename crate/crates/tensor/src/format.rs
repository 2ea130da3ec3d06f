//! LMT1, the on-disk tensor format.
//!
//! Layout (all little-endian): 4-byte magic `LMT1`, `u32` rank, `rank` times
//! `u64` dimension sizes, then the row-major data as raw `f64` bits. Values
//! round-trip bit-exactly (including `-0.0` and subnormals). Blobs are
//! self-delimiting, so several can be streamed back-to-back in one file —
//! checkpoints rely on that.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

pub const LMT1_MAGIC: [u8; 4] = *b"LMT1";

/// Dimensions above this rank are rejected as corrupt rather than allocated.
const MAX_RANK: u32 = 16;

/// Serialize one tensor as an LMT1 blob.
pub fn write_tensor<W: Write>(w: &mut W, t: &Tensor) -> Result<()> {
    w.write_all(&LMT1_MAGIC)?;
    let shape = t.shape();
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in &shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    t.with_data(|data| -> Result<()> {
        for &v in data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    })
}

/// Deserialize one LMT1 blob, leaving the reader positioned after it. The
/// result is a plain leaf with `requires_grad = false`. Non-finite values,
/// bad magic, and implausible shapes are all reported as corruption.
pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != LMT1_MAGIC {
        return Err(TensorError::Format(format!("bad magic {magic:?}, expected \"LMT1\"")));
    }
    let mut rank_buf = [0u8; 4];
    r.read_exact(&mut rank_buf)?;
    let rank = u32::from_le_bytes(rank_buf);
    if rank > MAX_RANK {
        return Err(TensorError::Format(format!("implausible rank {rank}")));
    }
    let mut shape = Vec::with_capacity(rank as usize);
    let mut numel: usize = 1;
    for _ in 0..rank {
        let mut dim_buf = [0u8; 8];
        r.read_exact(&mut dim_buf)?;
        let d = u64::from_le_bytes(dim_buf);
        let d: usize = d
            .try_into()
            .map_err(|_| TensorError::Format(format!("dimension {d} too large")))?;
        numel = numel
            .checked_mul(d)
            .ok_or_else(|| TensorError::Format("element count overflow".into()))?;
        shape.push(d);
    }
    if numel > (1usize << 32) {
        return Err(TensorError::Format(format!("implausible element count {numel}")));
    }
    let mut data = Vec::with_capacity(numel);
    let mut val_buf = [0u8; 8];
    for _ in 0..numel {
        r.read_exact(&mut val_buf)?;
        let v = f64::from_le_bytes(val_buf);
        if !v.is_finite() {
            return Err(TensorError::Format("non-finite value in tensor data".into()));
        }
        data.push(v);
    }
    Tensor::from_vec(data, &shape)
}

/// Write a single tensor to `path`.
pub fn save_tensor(path: &Path, t: &Tensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

/// Read a single tensor from `path`; trailing bytes are corruption.
pub fn load_tensor(path: &Path) -> Result<Tensor> {
    let mut r = BufReader::new(File::open(path)?);
    let t = read_tensor(&mut r)?;
    let mut rest = [0u8; 1];
    match r.read(&mut rest)? {
        0 => Ok(t),
        _ => Err(TensorError::Format("trailing data after tensor".into())),
    }
}
