//! Connected material components, the bulk, and levitating stones.
//!
//! Components are labelled canonically: sorted by size (largest first),
//! ties broken by the smallest linear voxel index, and numbered `1..=C` in
//! that order. The bulk is therefore always label 1.

mod edt;
mod union_find;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryVolume, Dims};

pub use edt::squared_distance_transform;
pub use union_find::UnionFind;

/// Voxel neighbourhood used for connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    /// Face neighbours.
    Six,
    /// Face and edge neighbours.
    Eighteen,
    /// Face, edge and corner neighbours.
    #[default]
    TwentySix,
}

impl Connectivity {
    pub fn count(&self) -> u8 {
        match self {
            Connectivity::Six => 6,
            Connectivity::Eighteen => 18,
            Connectivity::TwentySix => 26,
        }
    }

    fn max_nonzero_axes(&self) -> usize {
        match self {
            Connectivity::Six => 1,
            Connectivity::Eighteen => 2,
            Connectivity::TwentySix => 3,
        }
    }

    /// Neighbour offsets `(dx, dy, dz)` that precede the centre in
    /// x-fastest scan order.
    fn backward_offsets(&self) -> Vec<[isize; 3]> {
        let mut out = Vec::new();
        for dz in -1..=0isize {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    if (dz, dy, dx) >= (0, 0, 0) {
                        continue;
                    }
                    let nonzero = [dx, dy, dz].iter().filter(|&&d| d != 0).count();
                    if nonzero <= self.max_nonzero_axes() {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            _ => Err(Error::InvalidParameter(format!("connectivity must be 6, 18 or 26, got {n}"))),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        c.count()
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<u8>()
            .map_err(|_| Error::InvalidParameter(format!("connectivity {s:?} is not 6, 18 or 26")))?
            .try_into()
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundingBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl BoundingBox {
    fn point(p: [usize; 3]) -> Self {
        BoundingBox { min: p, max: p }
    }

    fn grow(&mut self, p: [usize; 3]) {
        self.min = std::array::from_fn(|k| self.min[k].min(p[k]));
        self.max = std::array::from_fn(|k| self.max[k].max(p[k]));
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        let mut b = *self;
        b.grow(other.min);
        b.grow(other.max);
        b
    }
}

/// One connected set of material voxels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: u32,
    /// Voxel coordinates `[x, y, z]`, in scan order.
    pub voxels: Vec<[usize; 3]>,
    pub bbox: BoundingBox,
}

impl Component {
    pub fn size(&self) -> usize {
        self.voxels.len()
    }
}

/// Per-voxel component ids; 0 marks pore voxels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelField {
    pub dims: Dims,
    pub labels: Vec<u32>,
}

pub fn label_components(b: &BinaryVolume, connectivity: Connectivity) -> (LabelField, Vec<Component>) {
    let dims = b.dims();
    let offsets = connectivity.backward_offsets();
    let mut provisional = vec![u32::MAX; dims.len()];
    let mut uf = UnionFind::new();

    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                let i = dims.index(x, y, z);
                if !b.is_material(i) {
                    continue;
                }
                let mut current = u32::MAX;
                for &[dx, dy, dz] in &offsets {
                    let (nx, ny, nz) = (x as isize + dx, y as isize + dy, z as isize + dz);
                    if nx < 0 || ny < 0 || nz < 0 || nx >= dims.nx as isize || ny >= dims.ny as isize {
                        continue;
                    }
                    let n = provisional[dims.index(nx as usize, ny as usize, nz as usize)];
                    if n == u32::MAX {
                        continue;
                    }
                    current = if current == u32::MAX { n } else { uf.union(current, n) };
                }
                provisional[i] = if current == u32::MAX { uf.make_set() } else { current };
            }
        }
    }

    // Gather voxels per root; first-seen order equals smallest linear index.
    let mut root_slot: Vec<u32> = vec![u32::MAX; uf.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in provisional.iter().enumerate() {
        if *p == u32::MAX {
            continue;
        }
        let root = uf.find(*p) as usize;
        if root_slot[root] == u32::MAX {
            root_slot[root] = groups.len() as u32;
            groups.push(Vec::new());
        }
        groups[root_slot[root] as usize].push(i);
    }
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let mut labels = vec![0u32; dims.len()];
    let components = groups
        .into_iter()
        .enumerate()
        .map(|(k, indices)| {
            let id = k as u32 + 1;
            let mut bbox = BoundingBox::point(dims.coords(indices[0]));
            let voxels = indices
                .iter()
                .map(|&i| {
                    labels[i] = id;
                    let c = dims.coords(i);
                    bbox.grow(c);
                    c
                })
                .collect();
            Component { id, voxels, bbox }
        })
        .collect();
    (LabelField { dims, labels }, components)
}

/// The bulk and every other component ("levitating stones").
#[derive(Debug, Clone, PartialEq)]
pub struct StoneReport {
    pub bulk: Component,
    pub stones: Vec<Component>,
    pub one_voxel_count: usize,
    /// Stone size to number of stones with that size.
    pub size_histogram: BTreeMap<usize, usize>,
}

impl StoneReport {
    /// Splits components into bulk and stones. The bulk is the largest
    /// component, ties going to the one with the smallest first voxel.
    pub fn new(mut components: Vec<Component>) -> Result<StoneReport> {
        if components.is_empty() {
            return Err(Error::NoMaterial);
        }
        let bulk_pos = components
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                b.size().cmp(&a.size()).then(a.voxels[0].iter().rev().cmp(b.voxels[0].iter().rev()))
            })
            .map(|(i, _)| i)
            .unwrap();
        let bulk = components.remove(bulk_pos);
        let mut size_histogram = BTreeMap::new();
        for s in &components {
            *size_histogram.entry(s.size()).or_insert(0) += 1;
        }
        let one_voxel_count = size_histogram.get(&1).copied().unwrap_or(0);
        Ok(StoneReport { bulk, stones: components, one_voxel_count, size_histogram })
    }

    pub fn bulk_id(&self) -> u32 {
        self.bulk.id
    }

    pub fn total_stones(&self) -> usize {
        self.stones.len()
    }
}

pub fn stone_report(components: &[Component]) -> Result<StoneReport> {
    StoneReport::new(components.to_vec())
}

/// Labels the material and splits off the bulk.
pub fn analyze(b: &BinaryVolume, connectivity: Connectivity) -> Result<(LabelField, StoneReport)> {
    let (field, components) = label_components(b, connectivity);
    Ok((field, StoneReport::new(components)?))
}

/// Shortest centre-to-centre distance between two voxel sets, computed with
/// a distance transform over their joint bounding box.
pub fn distance_to_bulk(stone: &Component, bulk: &Component) -> Result<f64> {
    if stone.voxels.is_empty() || bulk.voxels.is_empty() {
        return Err(Error::EmptyComponent);
    }
    let bbox = stone.bbox.union(&bulk.bbox);
    let ext: [usize; 3] = std::array::from_fn(|k| bbox.max[k] - bbox.min[k] + 1);
    let local = Dims::new(ext[0], ext[1], ext[2])?;
    let to_local = |p: &[usize; 3]| local.index(p[0] - bbox.min[0], p[1] - bbox.min[1], p[2] - bbox.min[2]);
    let mut seed = vec![false; local.len()];
    for p in &bulk.voxels {
        seed[to_local(p)] = true;
    }
    let dt = squared_distance_transform(local, |i| seed[i]);
    let d2 = stone.voxels.iter().map(|p| dt[to_local(p)]).fold(f64::INFINITY, f64::min);
    Ok(d2.sqrt())
}

/// Distances from every stone to the bulk using one full-volume transform.
pub fn distances_to_bulk(dims: Dims, report: &StoneReport) -> Vec<f64> {
    if report.stones.is_empty() {
        return Vec::new();
    }
    let mut seed = vec![false; dims.len()];
    for p in &report.bulk.voxels {
        seed[dims.index(p[0], p[1], p[2])] = true;
    }
    let dt = squared_distance_transform(dims, |i| seed[i]);
    report
        .stones
        .iter()
        .map(|s| s.voxels.iter().map(|p| dt[dims.index(p[0], p[1], p[2])]).fold(f64::INFINITY, f64::min).sqrt())
        .collect()
}
