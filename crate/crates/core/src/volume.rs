//! Volumetric data model.
//!
//! Voxels are stored x-fastest, then y, then z, so every z-plane is a
//! contiguous run of `nx * ny` values. Intensities are `f64` on the
//! file's intensity scale (0..=255 for 8-bit data); quantization happens
//! only when a volume is written back to disk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed intensity interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityRange {
    pub lo: f64,
    pub hi: f64,
}

impl IntensityRange {
    pub const U8: IntensityRange = IntensityRange { lo: 0.0, hi: 255.0 };
    pub const BINARY: IntensityRange = IntensityRange { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("intensity range [{lo}, {hi}] must be finite with lo < hi")));
        }
        Ok(IntensityRange { lo, hi })
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

impl Default for IntensityRange {
    fn default() -> Self {
        IntensityRange::U8
    }
}

/// Voxel grid extents `(nx, ny, nz)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidDims([nx, ny, nz]));
        }
        nx.checked_mul(ny).and_then(|p| p.checked_mul(nz)).ok_or(Error::InvalidDims([nx, ny, nz]))?;
        Ok(Dims { nx, ny, nz })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Dims::new(n, n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.ny + y) * self.nx + x
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.nx;
        let y = (index / self.nx) % self.ny;
        let z = index / self.plane();
        [x, y, z]
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }
}

fn check_intensities(data: &[f64], range: IntensityRange) -> Result<()> {
    match data.iter().position(|v| !range.contains(*v)) {
        Some(index) => Err(Error::IntensityOutOfRange { index, value: data[index], lo: range.lo, hi: range.hi }),
        None => Ok(()),
    }
}

/// A 3D scalar intensity field.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: Dims,
    data: Vec<f64>,
    range: IntensityRange,
}

impl Volume {
    /// Builds a volume on the default 0..=255 scale.
    pub fn new(dims: Dims, data: Vec<f64>) -> Result<Self> {
        Volume::with_range(dims, data, IntensityRange::U8)
    }

    pub fn with_range(dims: Dims, data: Vec<f64>, range: IntensityRange) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::SizeMismatch { expected: dims.len(), found: data.len() });
        }
        check_intensities(&data, range)?;
        Ok(Volume { dims, data, range })
    }

    pub fn filled(dims: Dims, value: f64) -> Result<Self> {
        Volume::new(dims, vec![value; dims.len()])
    }

    /// Builds a volume, clamping every value into `range`. Non-finite
    /// values are still rejected.
    pub fn clamped(dims: Dims, mut data: Vec<f64>, range: IntensityRange) -> Result<Self> {
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite intensity {} at index {index}", data[index])));
        }
        for v in &mut data {
            *v = range.clamp(*v);
        }
        Volume::with_range(dims, data, range)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn range(&self) -> IntensityRange {
        self.range
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.dims.index(x, y, z)]
    }

    pub fn extract_slice(&self, z: usize) -> Result<Slice> {
        if z >= self.dims.nz {
            return Err(Error::SliceOutOfRange { z, nz: self.dims.nz });
        }
        let plane = self.dims.plane();
        Ok(Slice { nx: self.dims.nx, ny: self.dims.ny, data: self.data[z * plane..(z + 1) * plane].to_vec() })
    }

    /// Returns a copy of `self` with plane `z` replaced by `slice`.
    pub fn insert_slice(&self, z: usize, slice: &Slice) -> Result<Volume> {
        if z >= self.dims.nz {
            return Err(Error::SliceOutOfRange { z, nz: self.dims.nz });
        }
        if slice.nx != self.dims.nx || slice.ny != self.dims.ny {
            return Err(Error::InvalidParameter(format!(
                "slice is {}x{}, volume planes are {}x{}",
                slice.nx, slice.ny, self.dims.nx, self.dims.ny
            )));
        }
        check_intensities(&slice.data, self.range)?;
        let plane = self.dims.plane();
        let mut data = self.data.clone();
        data[z * plane..(z + 1) * plane].copy_from_slice(&slice.data);
        Ok(Volume { dims: self.dims, data, range: self.range })
    }

    pub fn slices(&self) -> impl Iterator<Item = Slice> + '_ {
        let (nx, ny) = (self.dims.nx, self.dims.ny);
        self.data.chunks(self.dims.plane()).map(move |plane| Slice { nx, ny, data: plane.to_vec() })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// One z-plane of a volume, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Slice {
    pub fn new(nx: usize, ny: usize, data: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidDims([nx, ny, 1]));
        }
        if data.len() != nx * ny {
            return Err(Error::SizeMismatch { expected: nx * ny, found: data.len() });
        }
        Ok(Slice { nx, ny, data })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.nx + x]
    }

    /// Sample with clamp-to-edge addressing.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.nx as isize - 1) as usize;
        let yc = y.clamp(0, self.ny as isize - 1) as usize;
        self.data[yc * self.nx + xc]
    }
}

/// Per-voxel pore/material labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryVolume {
    dims: Dims,
    labels: Vec<u8>,
}

impl BinaryVolume {
    pub const PORE: u8 = 0;
    pub const MATERIAL: u8 = 1;

    pub fn new(dims: Dims, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != dims.len() {
            return Err(Error::SizeMismatch { expected: dims.len(), found: labels.len() });
        }
        if let Some(index) = labels.iter().position(|&l| l > 1) {
            return Err(Error::NotBinary { index, value: labels[index] as f64 });
        }
        Ok(BinaryVolume { dims, labels })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u8> {
        self.labels
    }

    pub fn is_material(&self, index: usize) -> bool {
        self.labels[index] == Self::MATERIAL
    }

    pub fn material_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Self::MATERIAL).count()
    }

    pub fn pore_count(&self) -> usize {
        self.labels.len() - self.material_count()
    }

    /// Fraction of pore voxels.
    pub fn porosity(&self) -> f64 {
        self.pore_count() as f64 / self.labels.len() as f64
    }

    /// The labels as a volume on the `[0, 1]` intensity scale.
    pub fn to_volume(&self) -> Volume {
        Volume { dims: self.dims, data: self.labels.iter().map(|&l| l as f64).collect(), range: IntensityRange::BINARY }
    }

    pub fn from_volume(v: &Volume) -> Result<Self> {
        let labels = v
            .data()
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if value == 0.0 {
                    Ok(Self::PORE)
                } else if value == 1.0 {
                    Ok(Self::MATERIAL)
                } else {
                    Err(Error::NotBinary { index, value })
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        BinaryVolume::new(v.dims(), labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(nx: usize, ny: usize, nz: usize) -> Dims {
        Dims::new(nx, ny, nz).unwrap()
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(matches!(Volume::new(dims(2, 2, 2), vec![0.0; 7]), Err(Error::SizeMismatch { expected: 8, found: 7 })));
        assert!(BinaryVolume::new(dims(2, 1, 1), vec![0]).is_err());
    }

    #[test]
    fn rejects_zero_dims() {
        assert!(Dims::new(0, 3, 3).is_err());
    }

    #[test]
    fn rejects_out_of_range_intensity() {
        assert!(Volume::new(dims(1, 1, 2), vec![0.0, 256.0]).is_err());
        assert!(Volume::new(dims(1, 1, 1), vec![f64::NAN]).is_err());
    }

    #[test]
    fn binary_rejects_other_labels() {
        assert!(matches!(BinaryVolume::new(dims(3, 1, 1), vec![0, 1, 2]), Err(Error::NotBinary { index: 2, .. })));
    }

    #[test]
    fn extract_middle_slice_of_column() {
        let v = Volume::new(dims(1, 1, 3), vec![10.0, 20.0, 30.0]).unwrap();
        assert_eq!(v.extract_slice(1).unwrap().data, vec![20.0]);
        assert!(matches!(v.extract_slice(3), Err(Error::SliceOutOfRange { z: 3, nz: 3 })));
    }

    #[test]
    fn insert_rejects_wrong_shape() {
        let v = Volume::filled(dims(2, 2, 2), 0.0).unwrap();
        let s = Slice::new(1, 4, vec![0.0; 4]).unwrap();
        assert!(v.insert_slice(0, &s).is_err());
    }

    #[test]
    fn insert_replaces_only_target_plane() {
        let v = Volume::new(dims(2, 1, 3), (0..6).map(f64::from).collect()).unwrap();
        let s = Slice::new(2, 1, vec![100.0, 101.0]).unwrap();
        let w = v.insert_slice(2, &s).unwrap();
        assert_eq!(w.data(), &[0.0, 1.0, 2.0, 3.0, 100.0, 101.0]);
    }

    #[test]
    fn coords_invert_index() {
        let d = dims(3, 4, 5);
        for i in 0..d.len() {
            let [x, y, z] = d.coords(i);
            assert_eq!(d.index(x, y, z), i);
        }
    }

    #[test]
    fn binary_volume_round_trips_through_volume() {
        let b = BinaryVolume::new(dims(2, 2, 1), vec![0, 1, 1, 0]).unwrap();
        assert_eq!(BinaryVolume::from_volume(&b.to_volume()).unwrap(), b);
        assert_eq!(b.porosity(), 0.5);
    }
}
