//! The `TNS1` binary container for tensors and observation masks.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TNS1"
//! 4       4     format version (1)
//! 8       4     element type: 1 = f64 tensor payload, 2 = u64 mask offsets
//! 12      12    dimensions n1, n2, n3 as u32
//! 24      ...   payload
//! ```
//!
//! A tensor payload holds `n1 * n2 * n3` f64 values in layout order (first
//! index fastest); a 1x1x1 tensor file is exactly 32 bytes. A mask payload
//! (conventionally a `.msk` file) holds the strictly increasing u64 flat
//! offsets of the observed entries; the dimensions record the shape of the
//! tensor the mask belongs to.

use super::ObservationMask;
use crate::tensor::Tensor3;
use crate::{Error, Result};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"TNS1";
const VERSION: u32 = 1;
const ELEM_F64: u32 = 1;
const ELEM_OFFSETS: u32 = 2;

const OFF_MAGIC: u64 = 0;
const OFF_VERSION: u64 = 4;
const OFF_ELEM: u64 = 8;
const OFF_DIMS: u64 = 12;
const HEADER_LEN: usize = 24;

fn format_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn header(elem: u32, shape: (usize, usize, usize)) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&elem.to_le_bytes());
    for d in [shape.0, shape.1, shape.2] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

fn parse_header(path: &Path, bytes: &[u8], want_elem: u32) -> Result<(usize, usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            path,
            bytes.len() as u64,
            format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len()),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_err(path, OFF_MAGIC, "bad magic, expected \"TNS1\""));
    }
    let version = read_u32(bytes, OFF_VERSION as usize);
    if version != VERSION {
        return Err(format_err(
            path,
            OFF_VERSION,
            format!("unsupported version {version}"),
        ));
    }
    let elem = read_u32(bytes, OFF_ELEM as usize);
    if elem != want_elem {
        return Err(format_err(
            path,
            OFF_ELEM,
            format!("element type {elem}, expected {want_elem}"),
        ));
    }
    let d1 = read_u32(bytes, OFF_DIMS as usize) as usize;
    let d2 = read_u32(bytes, OFF_DIMS as usize + 4) as usize;
    let d3 = read_u32(bytes, OFF_DIMS as usize + 8) as usize;
    if d1 == 0 || d2 == 0 || d3 == 0 {
        return Err(format_err(path, OFF_DIMS, "zero dimension"));
    }
    let n = d1
        .checked_mul(d2)
        .and_then(|v| v.checked_mul(d3))
        .and_then(|v| v.checked_mul(8));
    if n.is_none() {
        return Err(format_err(path, OFF_DIMS, "dimension overflow"));
    }
    Ok((d1, d2, d3))
}

/// Writes a tensor as a `TNS1` file. The write is bitwise reproducible.
pub fn save_tensor(t: &Tensor3, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = header(ELEM_F64, t.shape());
    bytes.reserve(t.len() * 8);
    for v in t.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a tensor written by [`save_tensor`]; the round-trip is bitwise exact.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let shape = parse_header(path, &bytes, ELEM_F64)?;
    let n = shape.0 * shape.1 * shape.2;
    let expect = HEADER_LEN + n * 8;
    if bytes.len() != expect {
        return Err(format_err(
            path,
            bytes.len().min(expect) as u64,
            format!("payload of {} bytes, expected {expect} total", bytes.len()),
        ));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor3::from_vec(shape, data)
}

/// Writes a mask as a `TNS1` offset-list file (element type 2).
pub fn save_mask(mask: &ObservationMask, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = header(ELEM_OFFSETS, mask.shape());
    bytes.reserve(mask.len() * 8);
    for off in mask.indices() {
        bytes.extend_from_slice(&off.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a mask written by [`save_mask`].
pub fn load_mask(path: impl AsRef<Path>) -> Result<ObservationMask> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let shape = parse_header(path, &bytes, ELEM_OFFSETS)?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() % 8 != 0 {
        return Err(format_err(
            path,
            bytes.len() as u64,
            "truncated offset payload",
        ));
    }
    let indices: Vec<u64> = payload
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ObservationMask::from_indices(shape, indices).map_err(|e| {
        format_err(path, HEADER_LEN as u64, format!("invalid offsets: {e}"))
    })
}
