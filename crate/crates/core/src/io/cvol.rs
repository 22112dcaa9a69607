//! `.cvol` raw volume format.
//!
//! Little-endian: magic `CVOL`, `u32` nx, ny, nz, `f64` Δx, Δy, Δz, then
//! nx·ny·nz bytes in x-fastest order. A file that stops after the three
//! dimensions (no spacing block) is accepted with unit spacing.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::VoxelVolume;

pub const MAGIC: &[u8; 4] = b"CVOL";
const DIMS_END: usize = 16;
const HEADER_LEN: usize = 40;

pub fn encode(vol: &VoxelVolume) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + vol.len());
    out.extend_from_slice(MAGIC);
    for d in vol.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for s in vol.spacing() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.extend_from_slice(vol.data());
    out
}

pub fn write(path: impl AsRef<Path>, vol: &VoxelVolume) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(vol)).map_err(|e| Error::io(path, e))
}

/// Decodes raw bytes; non-zero payload bytes are binarized to 1.
pub fn decode(bytes: &[u8], path: &Path) -> Result<VoxelVolume> {
    if bytes.len() < DIMS_END || &bytes[..4] != MAGIC {
        return Err(Error::format(path, "not a CVOL file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let dims = [u32_at(4), u32_at(8), u32_at(12)];
    if dims.contains(&0) {
        return Err(Error::format(path, format!("zero-size dimension {dims:?}")));
    }
    let n = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or_else(|| Error::format(path, "dimensions overflow"))?;

    let (spacing, payload) = if bytes.len() == HEADER_LEN + n {
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let spacing = [f64_at(16), f64_at(24), f64_at(32)];
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::format(path, format!("non-positive spacing {spacing:?}")));
        }
        (spacing, &bytes[HEADER_LEN..])
    } else if bytes.len() == DIMS_END + n {
        log::warn!("{}: no spacing in header, assuming 1 mm isotropic", path.display());
        ([1.0; 3], &bytes[DIMS_END..])
    } else {
        return Err(Error::format(
            path,
            format!("payload size mismatch for dims {dims:?} ({} bytes total)", bytes.len()),
        ));
    };
    let data = payload.iter().map(|&b| (b != 0) as u8).collect();
    VoxelVolume::new(dims, spacing, data)
}
