//! Attach-or-remove resolution of the stones left after filtering.
//!
//! A stone's relative distance is `d / cbrt(V_s)`: its gap to the bulk
//! measured in units of its own linear size. Stones whose relative distance
//! exceeds `tau` are erased; the others are kept as material. Keeping a
//! stone does not add any voxels between it and the bulk.

use std::fmt;

use serde::Serialize;

use crate::components::{distances_to_bulk, StoneReport};
use crate::error::{Error, Result};
use crate::volume::BinaryVolume;

pub const DEFAULT_TAU: f64 = 1.0;

pub fn stone_metric(d: f64, v_s: usize) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) || v_s == 0 {
        return Err(Error::InvalidParameter(format!("stone metric needs d > 0 and V_s >= 1 (got d={d}, V_s={v_s})")));
    }
    Ok(d / (v_s as f64).cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StoneAction {
    Remove,
    Attach,
}

impl fmt::Display for StoneAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoneAction::Remove => "remove",
            StoneAction::Attach => "attach",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoneDecision {
    pub stone_id: u32,
    pub size: usize,
    pub d: f64,
    pub d_hat: f64,
    pub action: StoneAction,
}

/// Decides every stone and erases the removed ones. A relative distance
/// equal to `tau` attaches.
pub fn resolve_stones(b: &BinaryVolume, report: &StoneReport, tau: f64) -> Result<(BinaryVolume, Vec<StoneDecision>)> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidParameter(format!("tau={tau} must be > 0")));
    }
    let dims = b.dims();
    let in_bounds = |p: &[usize; 3]| p[0] < dims.nx && p[1] < dims.ny && p[2] < dims.nz;
    let consistent = std::iter::once(&report.bulk)
        .chain(&report.stones)
        .flat_map(|c| &c.voxels)
        .all(|p| in_bounds(p) && b.is_material(dims.index(p[0], p[1], p[2])));
    if !consistent {
        return Err(Error::InvalidParameter("stone report does not match the binary volume".into()));
    }

    let distances = distances_to_bulk(dims, report);
    let mut labels = b.labels().to_vec();
    let mut decisions = Vec::with_capacity(report.stones.len());
    for (stone, &d) in report.stones.iter().zip(&distances) {
        let d_hat = stone_metric(d, stone.size())?;
        let action = if d_hat > tau { StoneAction::Remove } else { StoneAction::Attach };
        if action == StoneAction::Remove {
            for p in &stone.voxels {
                labels[dims.index(p[0], p[1], p[2])] = BinaryVolume::PORE;
            }
        }
        decisions.push(StoneDecision { stone_id: stone.id, size: stone.size(), d, d_hat, action });
    }
    Ok((BinaryVolume::new(dims, labels)?, decisions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{analyze, Connectivity};
    use crate::volume::Dims;

    #[test]
    fn metric_examples() {
        assert_eq!(stone_metric(4.0, 8).unwrap(), 2.0);
        assert_eq!(stone_metric(1.0, 1).unwrap(), 1.0);
        assert_eq!(stone_metric(3.0, 27).unwrap(), 1.0);
        assert!(stone_metric(0.0, 1).is_err());
        assert!(stone_metric(1.0, 0).is_err());
        assert!(stone_metric(f64::NAN, 1).is_err());
    }

    fn slab_with_stones() -> BinaryVolume {
        // Bulk: the x = 0 plane. Stones: single voxels at x = 2 and x = 5.
        let d = Dims::new(7, 4, 4).unwrap();
        let mut labels = vec![0u8; d.len()];
        for z in 0..4 {
            for y in 0..4 {
                labels[d.index(0, y, z)] = 1;
            }
        }
        labels[d.index(2, 1, 1)] = 1;
        labels[d.index(5, 2, 2)] = 1;
        BinaryVolume::new(d, labels).unwrap()
    }

    #[test]
    fn tau_controls_removal() {
        let b = slab_with_stones();
        let (_, report) = analyze(&b, Connectivity::TwentySix).unwrap();

        let (out, dec) = resolve_stones(&b, &report, f64::INFINITY).unwrap();
        assert_eq!(out, b);
        assert!(dec.iter().all(|d| d.action == StoneAction::Attach));

        let (out, dec) = resolve_stones(&b, &report, 1e-9).unwrap();
        assert_eq!(out.material_count(), 16);
        assert!(dec.iter().all(|d| d.action == StoneAction::Remove));

        // d_hat = 2 and 5; tau = 2 keeps the first (equality attaches).
        let (out, dec) = resolve_stones(&b, &report, 2.0).unwrap();
        assert_eq!(out.material_count(), 17);
        let mut by_d: Vec<(f64, StoneAction)> = dec.iter().map(|d| (d.d, d.action)).collect();
        by_d.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(by_d, vec![(2.0, StoneAction::Attach), (5.0, StoneAction::Remove)]);
    }

    #[test]
    fn rejects_bad_tau_and_mismatched_report() {
        let b = slab_with_stones();
        let (_, report) = analyze(&b, Connectivity::TwentySix).unwrap();
        assert!(resolve_stones(&b, &report, 0.0).is_err());
        assert!(resolve_stones(&b, &report, -1.0).is_err());
        let empty = BinaryVolume::new(b.dims(), vec![0; b.dims().len()]).unwrap();
        assert!(resolve_stones(&empty, &report, 1.0).is_err());
    }
}
