//! Little-endian binary matrices (`GBFT`) and model checkpoints (`GBMD`).
//!
//! Both formats store values as `f32`, so reading back loses precision
//! relative to the in-memory `f64` values.

use std::path::Path;

use gcnboost_core::gcn::{GcnDims, GcnModel};
use gcnboost_core::linalg::Matrix;

use crate::error::{CliError, Result};

pub const FEATURES_MAGIC: &[u8; 4] = b"GBFT";
pub const MODEL_MAGIC: &[u8; 4] = b"GBMD";

fn push_u32(out: &mut Vec<u8>, v: usize, path: &Path) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| CliError::format(path, format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn push_f32s(out: &mut Vec<u8>, values: &[f64]) {
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn read_u32(bytes: &[u8], at: usize) -> usize {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice")) as usize
}

fn read_f32s(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
        .collect()
}

/// 16-byte header (magic, rows, cols, reserved zero word) then row-major data.
pub fn encode_matrix(m: &Matrix, path: &Path) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * m.rows() * m.cols());
    out.extend_from_slice(FEATURES_MAGIC);
    push_u32(&mut out, m.rows(), path)?;
    push_u32(&mut out, m.cols(), path)?;
    push_u32(&mut out, 0, path)?;
    push_f32s(&mut out, m.as_slice());
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<Matrix> {
    if bytes.len() < 16 || &bytes[..4] != FEATURES_MAGIC {
        return Err(CliError::format(path, "missing GBFT header"));
    }
    let (rows, cols) = (read_u32(bytes, 4), read_u32(bytes, 8));
    let body = &bytes[16..];
    if body.len() != 4 * rows * cols {
        return Err(CliError::format(
            path,
            format!("header declares {rows}x{cols} but body holds {} bytes", body.len()),
        ));
    }
    let m = Matrix::from_vec(rows, cols, read_f32s(body));
    if !m.is_finite() {
        return Err(CliError::format(path, "non-finite feature value"));
    }
    Ok(m)
}

/// Magic, `(d, h, k)` as u32, then the flat parameter vector.
pub fn encode_model(model: &GcnModel, path: &Path) -> Result<Vec<u8>> {
    let dims = model.dims();
    let mut out = Vec::with_capacity(16 + 4 * dims.param_count());
    out.extend_from_slice(MODEL_MAGIC);
    push_u32(&mut out, dims.input, path)?;
    push_u32(&mut out, dims.hidden, path)?;
    push_u32(&mut out, dims.classes, path)?;
    push_f32s(&mut out, model.as_slice());
    Ok(out)
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<GcnModel> {
    if bytes.len() < 16 || &bytes[..4] != MODEL_MAGIC {
        return Err(CliError::format(path, "missing GBMD header"));
    }
    let dims = GcnDims {
        input: read_u32(bytes, 4),
        hidden: read_u32(bytes, 8),
        classes: read_u32(bytes, 12),
    };
    let body = &bytes[16..];
    if body.len() != 4 * dims.param_count() {
        return Err(CliError::format(path, "parameter count does not match dims"));
    }
    Ok(GcnModel::from_params(dims, read_f32s(body))?)
}
