//! Distortion-constrained filter selection.
//!
//! Each candidate filter is scored by running the whole chain (filter,
//! threshold, label) and counting one-voxel stones. Candidates whose
//! distortion exceeds the budget are infeasible; among the rest the fewest
//! one-voxel stones wins.

use std::cmp::Ordering;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::components::{analyze, Connectivity};
use crate::error::{Error, Result};
use crate::filters::{apply_filter_with, FilterFamily, FilterOptions, FilterSpec};
use crate::grid::{ParameterGrid, SweepGrid};
use crate::segmentation::{segment, ThresholdMode};
use crate::volume::Volume;

/// `sqrt(sum (a - b)^2) / V`: the Euclidean norm of the difference divided
/// by the voxel count (not by its square root).
pub fn distortion(original: &Volume, filtered: &Volume) -> Result<f64> {
    if original.dims() != filtered.dims() {
        return Err(Error::InvalidParameter(format!(
            "distortion of volumes with dims {:?} and {:?}",
            original.dims(),
            filtered.dims()
        )));
    }
    let sum_sq: f64 = original.data().iter().zip(filtered.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum_sq.sqrt() / original.len() as f64)
}

/// Reference filter whose distortion sets the budget.
pub const CALIBRATION_FILTER: FilterSpec = FilterSpec::Median { h: 3, w: 3 };

/// Distortion budget: the distortion of a 3×3 median on `v`.
pub fn calibrate_delta_max(v: &Volume) -> Result<f64> {
    calibrate_delta_max_with(v, &CALIBRATION_FILTER)
}

pub fn calibrate_delta_max_with(v: &Volume, reference: &FilterSpec) -> Result<f64> {
    distortion(v, &apply_filter_with(v, reference, &FilterOptions::default())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DeltaMaxMode {
    #[default]
    Calibrate,
    Explicit(f64),
}

impl DeltaMaxMode {
    pub fn resolve(&self, v: &Volume) -> Result<f64> {
        match *self {
            DeltaMaxMode::Calibrate => calibrate_delta_max(v),
            DeltaMaxMode::Explicit(d) => Ok(d),
        }
    }
}

impl FromStr for DeltaMaxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "calibrate" => Ok(DeltaMaxMode::Calibrate),
            x => {
                x.parse::<f64>().ok().filter(|d| !d.is_nan()).map(DeltaMaxMode::Explicit).ok_or_else(|| {
                    Error::InvalidParameter(format!("delta-max {x:?} is neither calibrate nor a number"))
                })
            }
        }
    }
}

impl std::fmt::Display for DeltaMaxMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeltaMaxMode::Calibrate => f.write_str("calibrate"),
            DeltaMaxMode::Explicit(d) => write!(f, "{d}"),
        }
    }
}

/// Settings shared by every evaluation of one search.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalOptions {
    pub threshold: ThresholdMode,
    pub connectivity: Connectivity,
    pub filter: FilterOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub spec: FilterSpec,
    pub delta: f64,
    pub one_voxel_stones: usize,
    pub total_stones: usize,
    pub threshold_used: u8,
}

impl Evaluation {
    pub fn is_feasible(&self, delta_max: f64) -> bool {
        self.delta <= delta_max
    }

    /// Selection order: fewer one-voxel stones, then smaller distortion,
    /// then fewer stones overall.
    fn rank(&self, other: &Evaluation) -> Ordering {
        self.one_voxel_stones
            .cmp(&other.one_voxel_stones)
            .then(self.delta.total_cmp(&other.delta))
            .then(self.total_stones.cmp(&other.total_stones))
    }
}

/// Filter, threshold, label, and count.
pub fn evaluate_config(v: &Volume, spec: &FilterSpec, opts: &EvalOptions) -> Result<Evaluation> {
    let filtered = apply_filter_with(v, spec, &opts.filter)?;
    let delta = distortion(v, &filtered)?;
    let (binary, threshold_used, _) = segment(&filtered, opts.threshold)?;
    let (_, report) = analyze(&binary, opts.connectivity)?;
    Ok(Evaluation {
        spec: *spec,
        delta,
        one_voxel_stones: report.one_voxel_count,
        total_stones: report.total_stones(),
        threshold_used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyWinner {
    pub family: FilterFamily,
    /// `None` when no grid point of the family meets the budget.
    pub winner: Option<Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    /// Every grid point in grid order.
    pub evaluations: Vec<Evaluation>,
    pub best_per_family: Vec<FamilyWinner>,
    pub best_overall: Option<Evaluation>,
    pub delta_max: f64,
}

impl SelectionResult {
    pub fn infeasible_families(&self) -> Vec<FilterFamily> {
        self.best_per_family.iter().filter(|w| w.winner.is_none()).map(|w| w.family).collect()
    }

    pub fn is_infeasible(&self) -> bool {
        self.best_overall.is_none()
    }

    pub fn winner(&self, family: FilterFamily) -> Option<&Evaluation> {
        self.best_per_family.iter().find(|w| w.family == family).and_then(|w| w.winner.as_ref())
    }
}

/// Best feasible evaluation; earlier grid points win exact ties.
pub fn best_feasible<'a>(evals: impl IntoIterator<Item = &'a Evaluation>, delta_max: f64) -> Option<Evaluation> {
    let mut best: Option<&Evaluation> = None;
    for e in evals.into_iter().filter(|e| e.is_feasible(delta_max)) {
        if best.is_none_or(|b| e.rank(b) == Ordering::Less) {
            best = Some(e);
        }
    }
    best.copied()
}

/// Evaluates every grid point (in parallel on the current rayon pool) and
/// picks the winners.
pub fn grid_search(v: &Volume, grid: &ParameterGrid, delta_max: f64, opts: &EvalOptions) -> Result<SelectionResult> {
    let points = grid.points()?;
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let evaluations = points.par_iter().map(|spec| evaluate_config(v, spec, opts)).collect::<Result<Vec<_>>>()?;

    let best_per_family = FilterFamily::ALL
        .iter()
        .filter(|f| evaluations.iter().any(|e| e.spec.family() == **f))
        .map(|&family| FamilyWinner {
            family,
            winner: best_feasible(evaluations.iter().filter(|e| e.spec.family() == family), delta_max),
        })
        .collect();
    let best_overall = best_feasible(&evaluations, delta_max);
    for e in &evaluations {
        log::debug!("{} delta={} one_voxel={} total={}", e.spec, e.delta, e.one_voxel_stones, e.total_stones);
    }
    Ok(SelectionResult { evaluations, best_per_family, best_overall, delta_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param1: f64,
    pub param2: f64,
    pub delta: f64,
    pub one_voxel_stones: usize,
    pub total_stones: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub param1: String,
    pub param2: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the fewest one-voxel stones among rows within the budget.
    /// Ties go to the smaller distortion, then the earlier row.
    pub fn feasible_minimizer(&self, delta_max: f64) -> Option<&SweepRow> {
        let mut best: Option<&SweepRow> = None;
        for r in self.rows.iter().filter(|r| r.delta <= delta_max) {
            let better = best.is_none_or(|b| {
                (r.one_voxel_stones, r.delta).partial_cmp(&(b.one_voxel_stones, b.delta)) == Some(Ordering::Less)
            });
            if better {
                best = Some(r);
            }
        }
        best
    }
}

/// Evaluates a two-parameter sweep, one row per grid point.
pub fn param_sweep_report(v: &Volume, grid: &SweepGrid, opts: &EvalOptions) -> Result<SweepTable> {
    let points = grid.points()?;
    let rows = points
        .par_iter()
        .map(|(a, b, spec)| {
            evaluate_config(v, spec, opts).map(|e| SweepRow {
                param1: *a,
                param2: *b,
                delta: e.delta,
                one_voxel_stones: e.one_voxel_stones,
                total_stones: e.total_stones,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { param1: grid.axis1.name.clone(), param2: grid.axis2.name.clone(), rows })
}
