//! Porous-structure CT analysis.
//!
//! The pipeline denoises a volume with one of four edge-aware filters,
//! segments it with the unbalanced Otsu criterion, and counts
//! "levitating stones": material components that do not touch the bulk.
//! Single-voxel stones serve as a noise estimate, which drives the choice
//! of filter parameters under a distortion budget. Stones that survive can
//! then be removed or kept according to their distance from the bulk.
//!
//! Module map:
//!
//! - [`volume`], [`io`]: data model and the raw + JSON sidecar format
//! - [`filters`]: median, anisotropic diffusion, bilateral, guided
//! - [`segmentation`]: histogram, unbalanced Otsu threshold, binarization
//! - [`components`]: labeling, bulk/stone split, distances
//! - [`selection`], [`grid`]: distortion budget and parameter search
//! - [`postprocess`]: relative-distance stone resolution
//! - [`phantom`]: synthetic test volumes and noise
//! - [`report`]: CSV output

pub mod components;
pub mod error;
pub mod filters;
pub mod grid;
pub mod io;
pub mod phantom;
pub mod postprocess;
pub mod report;
pub mod segmentation;
pub mod selection;
pub mod volume;

pub use error::{Error, Result};
pub use filters::{apply_filter, FilterFamily, FilterSpec};
pub use volume::{BinaryVolume, Dims, IntensityRange, Slice, Volume};
