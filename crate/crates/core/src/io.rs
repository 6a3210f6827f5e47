//! Raw 8-bit volumes with a JSON sidecar.
//!
//! The payload is headerless unsigned bytes in x-fastest order. The sidecar
//! sits next to it with the extension replaced by `.json`:
//!
//! ```text
//! {"dims":[64,64,64],"dtype":"u8","intensity_range":[0,255]}
//! ```
//!
//! Binary volumes use the same container with labels 0/1 and an intensity
//! range of `[0,1]`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryVolume, Dims, IntensityRange, Volume};

pub const DTYPE_U8: &str = "u8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub dims: [usize; 3],
    pub dtype: String,
    pub intensity_range: [f64; 2],
}

/// Sidecar location for a payload path.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let sc_path = sidecar_path(path);
    if !sc_path.is_file() {
        return Err(Error::MissingSidecar(sc_path));
    }
    let text = fs::read_to_string(&sc_path).map_err(|e| Error::io(&sc_path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::BadSidecar { path: sc_path, message: e.to_string() })
}

fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let sc_path = sidecar_path(path);
    let mut text = serde_json::to_string(sidecar).map_err(|e| Error::Report(e.to_string()))?;
    text.push('\n');
    fs::write(&sc_path, text).map_err(|e| Error::io(sc_path, e))
}

fn quantize(v: f64) -> u8 {
    // f64::round rounds half away from zero.
    v.round().clamp(0.0, 255.0) as u8
}

pub fn load_volume(path: &Path) -> Result<Volume> {
    let sidecar = read_sidecar(path)?;
    if sidecar.dtype != DTYPE_U8 {
        return Err(Error::UnsupportedDtype(sidecar.dtype));
    }
    let [nx, ny, nz] = sidecar.dims;
    let dims = Dims::new(nx, ny, nz)?;
    let range = IntensityRange::new(sidecar.intensity_range[0], sidecar.intensity_range[1])?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != dims.len() {
        return Err(Error::SizeMismatch { expected: dims.len(), found: bytes.len() });
    }
    Volume::with_range(dims, bytes.into_iter().map(f64::from).collect(), range)
}

pub fn save_volume(v: &Volume, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = v.data().iter().map(|&x| quantize(x)).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let d = v.dims();
    write_sidecar(
        path,
        &Sidecar { dims: d.as_array(), dtype: DTYPE_U8.to_string(), intensity_range: [v.range().lo, v.range().hi] },
    )
}

pub fn load_binary(path: &Path) -> Result<BinaryVolume> {
    BinaryVolume::from_volume(&load_volume(path)?)
}

pub fn save_binary(b: &BinaryVolume, path: &Path) -> Result<()> {
    save_volume(&b.to_volume(), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_identity_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.raw");
        fs::write(&p, (0u8..8).collect::<Vec<_>>()).unwrap();
        fs::write(sidecar_path(&p), r#"{"dims":[2,2,2],"dtype":"u8","intensity_range":[0,255]}"#).unwrap();
        let v = load_volume(&p).unwrap();
        assert_eq!(v.data(), &(0..8).map(f64::from).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.raw");
        fs::write(&p, [0u8; 8]).unwrap();
        fs::write(sidecar_path(&p), r#"{"dims":[3,3,3],"dtype":"u8","intensity_range":[0,255]}"#).unwrap();
        assert!(matches!(load_volume(&p), Err(Error::SizeMismatch { expected: 27, found: 8 })));
    }

    #[test]
    fn missing_sidecar_and_bad_dtype() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.raw");
        fs::write(&p, [0u8; 8]).unwrap();
        assert!(matches!(load_volume(&p), Err(Error::MissingSidecar(_))));
        fs::write(sidecar_path(&p), r#"{"dims":[2,2,2],"dtype":"u16","intensity_range":[0,255]}"#).unwrap();
        assert!(matches!(load_volume(&p), Err(Error::UnsupportedDtype(_))));
    }

    #[test]
    fn constant_volume_writes_repeated_byte() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.raw");
        let v = Volume::filled(Dims::cube(3).unwrap(), 7.0).unwrap();
        save_volume(&v, &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), vec![7u8; 27]);
    }

    #[test]
    fn rounds_half_away_from_zero() {
        assert_eq!(quantize(2.5), 3);
        assert_eq!(quantize(2.4999), 2);
        assert_eq!(quantize(254.5), 255);
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.raw");
        let b = BinaryVolume::new(Dims::new(3, 1, 1).unwrap(), vec![1, 0, 1]).unwrap();
        save_binary(&b, &p).unwrap();
        assert_eq!(load_binary(&p).unwrap(), b);
    }
}
