//! Minimal NIfTI-1 single-file (`n+1`) reader and writer.
//!
//! Orientation (qform/sform) is ignored; only dim, datatype, pixdim,
//! vox_offset and scl_slope/scl_inter are interpreted.

use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::volume::{Dims, Spacing};

pub const HEADER_SIZE: usize = 348;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    U8,
    I8,
    I16,
    U16,
    I32,
    U32,
    I64,
    U64,
    F32,
    F64,
}

impl DataType {
    fn from_code(code: i16) -> Option<Self> {
        Some(match code {
            2 => DataType::U8,
            4 => DataType::I16,
            8 => DataType::I32,
            16 => DataType::F32,
            64 => DataType::F64,
            256 => DataType::I8,
            512 => DataType::U16,
            768 => DataType::U32,
            1024 => DataType::I64,
            1280 => DataType::U64,
            _ => return None,
        })
    }

    fn code(self) -> i16 {
        match self {
            DataType::U8 => 2,
            DataType::I16 => 4,
            DataType::I32 => 8,
            DataType::F32 => 16,
            DataType::F64 => 64,
            DataType::I8 => 256,
            DataType::U16 => 512,
            DataType::U32 => 768,
            DataType::I64 => 1024,
            DataType::U64 => 1280,
        }
    }

    fn size(self) -> usize {
        match self {
            DataType::U8 | DataType::I8 => 1,
            DataType::I16 | DataType::U16 => 2,
            DataType::I32 | DataType::U32 | DataType::F32 => 4,
            DataType::I64 | DataType::U64 | DataType::F64 => 8,
        }
    }
}

/// Decoded image: voxel values in x-fastest order, already scaled by scl_slope/scl_inter.
#[derive(Debug, Clone)]
pub struct NiftiImage {
    pub dims: Dims,
    pub spacing: Spacing,
    pub datatype: DataType,
    pub values: Vec<f64>,
}

/// True if `bytes` look like a NIfTI-1 header in either byte order.
pub fn sniff(bytes: &[u8]) -> bool {
    if bytes.len() < 4 {
        return false;
    }
    let raw: [u8; 4] = bytes[..4].try_into().unwrap();
    i32::from_le_bytes(raw) == HEADER_SIZE as i32 || i32::from_be_bytes(raw) == HEADER_SIZE as i32
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<NiftiImage> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::format(path, "truncated NIfTI header"));
    }
    let raw: [u8; 4] = bytes[..4].try_into().unwrap();
    let le = if i32::from_le_bytes(raw) == HEADER_SIZE as i32 {
        true
    } else if i32::from_be_bytes(raw) == HEADER_SIZE as i32 {
        false
    } else {
        return Err(Error::format(path, "bad sizeof_hdr, not a NIfTI-1 file"));
    };
    let i16_at = |o: usize| {
        let b = [bytes[o], bytes[o + 1]];
        if le { i16::from_le_bytes(b) } else { i16::from_be_bytes(b) }
    };
    let f32_at = |o: usize| {
        let b: [u8; 4] = bytes[o..o + 4].try_into().unwrap();
        if le { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
    };

    if &bytes[344..347] == b"ni1" {
        return Err(Error::format(path, "two-file (.hdr/.img) NIfTI is not supported"));
    }

    let ndim = i16_at(40);
    let dim: Vec<i16> = (0..8).map(|k| i16_at(40 + 2 * k)).collect();
    if !(3..=7).contains(&ndim) || dim[4..=ndim as usize].iter().any(|&d| d != 1) {
        return Err(Error::format(path, format!("expected a 3D volume, dim = {dim:?}")));
    }
    if dim[1..=3].iter().any(|&d| d <= 0) {
        return Err(Error::format(path, format!("zero-size dimension, dim = {dim:?}")));
    }
    let dims = [dim[1] as usize, dim[2] as usize, dim[3] as usize];

    let code = i16_at(70);
    let datatype = DataType::from_code(code)
        .ok_or_else(|| Error::format(path, format!("unsupported datatype code {code}")))?;

    let spacing = [f32_at(80) as f64, f32_at(84) as f64, f32_at(88) as f64];
    if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::format(path, format!("non-positive pixdim spacing {spacing:?}")));
    }

    let offset = f32_at(108);
    let offset = if offset >= HEADER_SIZE as f32 { offset as usize } else { 352 };
    let n = dims[0] * dims[1] * dims[2];
    let need = offset + n * datatype.size();
    if bytes.len() < need {
        return Err(Error::format(
            path,
            format!("truncated voxel data: need {need} bytes, have {}", bytes.len()),
        ));
    }

    let slope = f32_at(112) as f64;
    let inter = f32_at(116) as f64;
    let scale = slope != 0.0 && slope.is_finite() && (slope != 1.0 || inter != 0.0);

    let payload = &bytes[offset..need];
    let sz = datatype.size();
    let values = payload
        .chunks_exact(sz)
        .map(|c| {
            let v = read_value(datatype, c, le);
            if scale {
                v * slope + inter
            } else {
                v
            }
        })
        .collect();
    Ok(NiftiImage {
        dims,
        spacing,
        datatype,
        values,
    })
}

macro_rules! read_as {
    ($t:ty, $c:expr, $le:expr) => {{
        let b = $c.try_into().unwrap();
        (if $le { <$t>::from_le_bytes(b) } else { <$t>::from_be_bytes(b) }) as f64
    }};
}

fn read_value(dt: DataType, c: &[u8], le: bool) -> f64 {
    match dt {
        DataType::U8 => c[0] as f64,
        DataType::I8 => c[0] as i8 as f64,
        DataType::I16 => read_as!(i16, c, le),
        DataType::U16 => read_as!(u16, c, le),
        DataType::I32 => read_as!(i32, c, le),
        DataType::U32 => read_as!(u32, c, le),
        DataType::I64 => read_as!(i64, c, le),
        DataType::U64 => read_as!(u64, c, le),
        DataType::F32 => read_as!(f32, c, le),
        DataType::F64 => read_as!(f64, c, le),
    }
}

/// Encodes a little-endian single-file NIfTI-1 image.
pub fn encode(dims: Dims, spacing: Spacing, datatype: DataType, values: &[f64]) -> Vec<u8> {
    let mut h = vec![0u8; HEADER_SIZE];
    h[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    let dim: [i16; 8] = [3, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    for (k, d) in dim.iter().enumerate() {
        h[40 + 2 * k..42 + 2 * k].copy_from_slice(&d.to_le_bytes());
    }
    h[70..72].copy_from_slice(&datatype.code().to_le_bytes());
    h[72..74].copy_from_slice(&((datatype.size() * 8) as i16).to_le_bytes());
    let pixdim: [f32; 8] = [1.0, spacing[0] as f32, spacing[1] as f32, spacing[2] as f32, 0.0, 0.0, 0.0, 0.0];
    for (k, p) in pixdim.iter().enumerate() {
        h[76 + 4 * k..80 + 4 * k].copy_from_slice(&p.to_le_bytes());
    }
    h[108..112].copy_from_slice(&352f32.to_le_bytes());
    h[112..116].copy_from_slice(&1f32.to_le_bytes());
    h[344..348].copy_from_slice(b"n+1\0");
    h.extend_from_slice(&[0u8; 4]);
    for &v in values {
        match datatype {
            DataType::U8 => h.push(v as u8),
            DataType::I8 => h.push(v as i8 as u8),
            DataType::I16 => h.extend_from_slice(&(v as i16).to_le_bytes()),
            DataType::U16 => h.extend_from_slice(&(v as u16).to_le_bytes()),
            DataType::I32 => h.extend_from_slice(&(v as i32).to_le_bytes()),
            DataType::U32 => h.extend_from_slice(&(v as u32).to_le_bytes()),
            DataType::I64 => h.extend_from_slice(&(v as i64).to_le_bytes()),
            DataType::U64 => h.extend_from_slice(&(v as u64).to_le_bytes()),
            DataType::F32 => h.extend_from_slice(&(v as f32).to_le_bytes()),
            DataType::F64 => h.extend_from_slice(&v.to_le_bytes()),
        }
    }
    h
}

/// Writes a `.nii` file, gzip-compressed when the path ends in `.gz`.
pub fn write(path: impl AsRef<Path>, dims: Dims, spacing: Spacing, datatype: DataType, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(dims, spacing, datatype, values);
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let res = if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(f, Compression::default());
        enc.write_all(&bytes).and_then(|_| enc.finish().map(|_| ()))
    } else {
        let mut f = f;
        f.write_all(&bytes)
    };
    res.map_err(|e| Error::io(path, e))
}

/// Reads a file into memory, transparently inflating gzip content.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::format(path, format!("gzip: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_roundtrip_every_datatype() {
        let values = [0.0, 3.0, 0.0, 117.0, 1.0, 0.0];
        for dt in [
            DataType::U8,
            DataType::I8,
            DataType::I16,
            DataType::U16,
            DataType::I32,
            DataType::U32,
            DataType::I64,
            DataType::U64,
            DataType::F32,
            DataType::F64,
        ] {
            let bytes = encode([3, 2, 1], [0.5, 0.5, 0.8], dt, &values);
            let img = decode(&bytes, Path::new("t.nii")).unwrap();
            assert_eq!(img.dims, [3, 2, 1]);
            assert_eq!(img.datatype, dt);
            assert_eq!(img.values, values);
            assert!((img.spacing[2] - 0.8).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_4d() {
        let mut bytes = encode([2, 2, 2], [1.0; 3], DataType::U8, &[0.0; 8]);
        bytes[40..42].copy_from_slice(&4i16.to_le_bytes());
        bytes[48..50].copy_from_slice(&2i16.to_le_bytes());
        assert!(decode(&bytes, Path::new("t.nii")).is_err());
    }

    #[test]
    fn accepts_singleton_fourth_dim() {
        let mut bytes = encode([2, 2, 2], [1.0; 3], DataType::U8, &[1.0; 8]);
        bytes[40..42].copy_from_slice(&4i16.to_le_bytes());
        assert_eq!(decode(&bytes, Path::new("t.nii")).unwrap().dims, [2, 2, 2]);
    }

    #[test]
    fn applies_scaling() {
        let mut bytes = encode([2, 1, 1], [1.0; 3], DataType::I16, &[2.0, 0.0]);
        bytes[112..116].copy_from_slice(&0.5f32.to_le_bytes());
        bytes[116..120].copy_from_slice(&(-1.0f32).to_le_bytes());
        let img = decode(&bytes, Path::new("t.nii")).unwrap();
        assert_eq!(img.values, vec![0.0, -1.0]);
    }

    #[test]
    fn big_endian_header() {
        let mut h = vec![0u8; 352];
        h[0..4].copy_from_slice(&348i32.to_be_bytes());
        for (k, d) in [3i16, 1, 1, 2, 1, 1, 1, 1].iter().enumerate() {
            h[40 + 2 * k..42 + 2 * k].copy_from_slice(&d.to_be_bytes());
        }
        h[70..72].copy_from_slice(&4i16.to_be_bytes());
        for k in 1..4 {
            h[76 + 4 * k..80 + 4 * k].copy_from_slice(&2f32.to_be_bytes());
        }
        h[108..112].copy_from_slice(&352f32.to_be_bytes());
        h.extend_from_slice(&7i16.to_be_bytes());
        h.extend_from_slice(&0i16.to_be_bytes());
        let img = decode(&h, Path::new("t.nii")).unwrap();
        assert_eq!(img.values, vec![7.0, 0.0]);
        assert_eq!(img.spacing, [2.0; 3]);
    }
}
