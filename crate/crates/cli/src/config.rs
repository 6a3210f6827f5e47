//! Run configuration: an optional TOML file overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use poreseg::components::Connectivity;
use poreseg::phantom::{NoiseModel, PhantomSpec};
use poreseg::segmentation::ThresholdMode;
use poreseg::selection::DeltaMaxMode;
use poreseg::volume::Dims;
use poreseg::FilterSpec;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, CliResult};

/// Every setting any subcommand reads. Unset fields fall back to the
/// subcommand's defaults; resolved values are written back so the record
/// of a run is complete.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration_filter: Option<FilterSpec>,
    #[serde(default, deserialize_with = "str_or_num", skip_serializing_if = "Option::is_none")]
    pub threshold: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connectivity: Option<Connectivity>,
    #[serde(default, deserialize_with = "str_or_num", skip_serializing_if = "Option::is_none")]
    pub delta_max: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub porosity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grain_radius: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub material: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pore: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
}

/// Accepts `threshold = 120` as well as `threshold = "auto"`.
fn str_or_num<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Scalar {
        Int(i64),
        Float(f64),
        Str(String),
    }
    Ok(Some(match Scalar::deserialize(d)? {
        Scalar::Int(i) => i.to_string(),
        Scalar::Float(f) => f.to_string(),
        Scalar::Str(s) => s,
    }))
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay!(
            self,
            top,
            input,
            output,
            truth,
            report,
            grid,
            filter,
            calibration_filter,
            threshold,
            connectivity,
            delta_max,
            tau,
            seed,
            threads,
            dims,
            porosity,
            grain_radius,
            material,
            pore,
            noise
        );
        self
    }

    pub fn input(&self) -> CliResult<PathBuf> {
        self.input.clone().ok_or_else(|| usage("--input is required"))
    }

    pub fn output(&self) -> CliResult<PathBuf> {
        self.output.clone().ok_or_else(|| usage("--output is required"))
    }

    pub fn report(&self) -> CliResult<PathBuf> {
        self.report.clone().ok_or_else(|| usage("--report is required"))
    }

    pub fn filter(&self) -> CliResult<FilterSpec> {
        self.filter.ok_or_else(|| usage("--filter is required"))
    }

    pub fn noise(&self) -> CliResult<NoiseModel> {
        self.noise.ok_or_else(|| usage("--noise is required"))
    }

    pub fn threshold(&mut self) -> CliResult<ThresholdMode> {
        let mode: ThresholdMode = self.threshold.as_deref().unwrap_or("auto").parse()?;
        self.threshold = Some(mode.to_string());
        Ok(mode)
    }

    pub fn delta_max(&mut self) -> CliResult<DeltaMaxMode> {
        let mode: DeltaMaxMode = self.delta_max.as_deref().unwrap_or("calibrate").parse()?;
        self.delta_max = Some(mode.to_string());
        Ok(mode)
    }

    pub fn connectivity(&mut self) -> Connectivity {
        *self.connectivity.get_or_insert_with(Connectivity::default)
    }

    pub fn calibration_filter(&mut self) -> FilterSpec {
        *self.calibration_filter.get_or_insert(poreseg::selection::CALIBRATION_FILTER)
    }

    pub fn tau(&mut self) -> f64 {
        *self.tau.get_or_insert(poreseg::postprocess::DEFAULT_TAU)
    }

    pub fn seed(&mut self) -> u64 {
        *self.seed.get_or_insert(0)
    }

    /// Phantom parameters with defaults filled in.
    pub fn phantom_spec(&mut self) -> CliResult<PhantomSpec> {
        let d = PhantomSpec::default();
        let dims = match self.dims.get_or_insert_with(|| d.dims.as_array().to_vec()).as_slice() {
            &[n] => Dims::cube(n)?,
            &[nx, ny, nz] => Dims::new(nx, ny, nz)?,
            other => return Err(usage(format!("dims needs 1 or 3 values, got {}", other.len()))),
        };
        let radius = match self.grain_radius.get_or_insert_with(|| vec![d.grain_radius.0, d.grain_radius.1]).as_slice()
        {
            &[r] => (r, r),
            &[lo, hi] => (lo, hi),
            other => return Err(usage(format!("grain radius needs 1 or 2 values, got {}", other.len()))),
        };
        let spec = PhantomSpec {
            dims,
            target_porosity: *self.porosity.get_or_insert(d.target_porosity),
            grain_radius: radius,
            material_intensity: *self.material.get_or_insert(d.material_intensity),
            pore_intensity: *self.pore.get_or_insert(d.pore_intensity),
            seed: self.seed(),
        };
        spec.validate()?;
        Ok(spec)
    }
}
