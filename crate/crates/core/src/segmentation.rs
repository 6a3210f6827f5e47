//! Histogram thresholding with the equal-variance, unequal-weight Gaussian
//! mixture criterion (unbalanced Otsu).
//!
//! For a cut `t`, class 0 holds bins `0..=t` and class 1 bins `t+1..=255`.
//! With class weights `w0`, `w1` and pooled within-class variance
//! `sw2 = w0*var0 + w1*var1`, the maximized log-likelihood per voxel is,
//! up to constants,
//!
//! ```text
//! J(t) = w0 ln w0 + w1 ln w1 - 0.5 ln sw2
//! ```
//!
//! Cuts that leave a class empty are not candidates. A cut whose classes are
//! both non-empty but have zero pooled variance separates the data perfectly;
//! its likelihood is unbounded and it scores `+inf`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::volume::{BinaryVolume, Volume};

pub const BINS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Histogram {
    bins: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.len() != BINS {
            return Err(Error::InvalidParameter(format!("histogram needs {BINS} bins, got {}", counts.len())));
        }
        Ok(Histogram { bins: counts.to_vec(), total: counts.iter().sum() })
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn occupied_bins(&self) -> usize {
        self.bins.iter().filter(|&&c| c > 0).count()
    }
}

/// Bin index of an intensity: rounded half away from zero, clamped to 0..=255.
#[inline]
pub fn bin_of(v: f64) -> usize {
    v.round().clamp(0.0, 255.0) as usize
}

pub fn histogram(v: &Volume) -> Histogram {
    let mut bins = vec![0u64; BINS];
    for &x in v.data() {
        bins[bin_of(x)] += 1;
    }
    let total = v.len() as u64;
    Histogram { bins, total }
}

/// Exact integer class moments (count, sum of bin, sum of bin squared).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassMoments {
    pub count: u64,
    pub sum: u128,
    pub sum_sq: u128,
}

impl ClassMoments {
    fn add(&mut self, bin: usize, count: u64) {
        let (b, c) = (bin as u128, count as u128);
        self.count += count;
        self.sum += b * c;
        self.sum_sq += b * b * c;
    }

    fn minus(&self, other: &ClassMoments) -> ClassMoments {
        ClassMoments { count: self.count - other.count, sum: self.sum - other.sum, sum_sq: self.sum_sq - other.sum_sq }
    }

    /// Sum of squared deviations from the class mean.
    fn scatter(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let n = self.count as f64;
        let s = self.sum as f64;
        (self.sum_sq as f64 - s * s / n).max(0.0)
    }
}

/// Criterion value for a cut given the two classes' moments, or `None` when
/// a class is empty.
pub fn criterion(low: &ClassMoments, high: &ClassMoments) -> Option<f64> {
    if low.count == 0 || high.count == 0 {
        return None;
    }
    let total = (low.count + high.count) as f64;
    let w0 = low.count as f64 / total;
    let w1 = high.count as f64 / total;
    let pooled = (low.scatter() + high.scatter()) / total;
    if pooled <= 0.0 {
        return Some(f64::INFINITY);
    }
    Some(w0 * w0.ln() + w1 * w1.ln() - 0.5 * pooled.ln())
}

/// Criterion value at every cut `t` in `0..=254` (`None` for invalid cuts).
pub fn criterion_curve(hist: &Histogram) -> Vec<Option<f64>> {
    let mut all = ClassMoments::default();
    for (b, &c) in hist.bins.iter().enumerate() {
        all.add(b, c);
    }
    let mut low = ClassMoments::default();
    (0..BINS - 1)
        .map(|t| {
            low.add(t, hist.bins[t]);
            criterion(&low, &all.minus(&low))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub t: u8,
    pub criterion: f64,
}

/// The cut maximizing the criterion; ties go to the smallest cut.
pub fn unbalanced_otsu_threshold(hist: &Histogram) -> Result<Threshold> {
    if hist.occupied_bins() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let mut best: Option<Threshold> = None;
    for (t, j) in criterion_curve(hist).into_iter().enumerate() {
        let Some(j) = j else { continue };
        if best.is_none_or(|b| j > b.criterion) {
            best = Some(Threshold { t: t as u8, criterion: j });
        }
    }
    best.ok_or(Error::DegenerateHistogram)
}

/// Voxels brighter than `t` become material.
pub fn binarize(v: &Volume, t: f64) -> BinaryVolume {
    let labels = v.data().iter().map(|&x| if x > t { BinaryVolume::MATERIAL } else { BinaryVolume::PORE }).collect();
    BinaryVolume::new(v.dims(), labels).expect("labels match dims")
}

/// How the segmentation threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    #[default]
    Auto,
    Fixed(u8),
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(ThresholdMode::Auto),
            n => n
                .parse::<u8>()
                .map(ThresholdMode::Fixed)
                .map_err(|_| Error::InvalidParameter(format!("threshold {n:?} is neither auto nor 0..=255"))),
        }
    }
}

impl std::fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdMode::Auto => f.write_str("auto"),
            ThresholdMode::Fixed(t) => write!(f, "{t}"),
        }
    }
}

/// Voxels whose histogram bin lies above `t` become material, so the two
/// classes are exactly the ones the threshold criterion scored.
pub fn binarize_bins(v: &Volume, t: u8) -> BinaryVolume {
    let labels = v
        .data()
        .iter()
        .map(|&x| if bin_of(x) > t as usize { BinaryVolume::MATERIAL } else { BinaryVolume::PORE })
        .collect();
    BinaryVolume::new(v.dims(), labels).expect("labels match dims")
}

/// Resolves the threshold and binarizes by histogram bin. Returns the threshold used and,
/// in auto mode, the criterion value it attained.
pub fn segment(v: &Volume, mode: ThresholdMode) -> Result<(BinaryVolume, u8, Option<f64>)> {
    let (t, j) = match mode {
        ThresholdMode::Fixed(t) => (t, None),
        ThresholdMode::Auto => {
            let th = unbalanced_otsu_threshold(&histogram(v))?;
            (th.t, Some(th.criterion))
        }
    };
    Ok((binarize_bins(v, t), t, j))
}
