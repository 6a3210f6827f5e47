//! Synthetic porous volumes with known ground truth.
//!
//! Material is a union of overlapping spherical grains grown as a single
//! cluster: every new grain must overlap material already placed, so the
//! material phase is one connected body (even under 6-connectivity).
//! Grains are added until the pore fraction falls within
//! [`POROSITY_TOLERANCE`] of the target.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryVolume, Dims, Volume};

pub const POROSITY_TOLERANCE: f64 = 0.02;
const MAX_ATTEMPTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: Dims,
    /// Target pore fraction in (0, 1).
    pub target_porosity: f64,
    /// Inclusive grain radius range in voxels.
    pub grain_radius: (f64, f64),
    pub material_intensity: f64,
    pub pore_intensity: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            dims: Dims { nx: 64, ny: 64, nz: 64 },
            target_porosity: 0.4,
            grain_radius: (14.0, 20.0),
            material_intensity: 200.0,
            pore_intensity: 60.0,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.target_porosity > 0.0 && self.target_porosity < 1.0) {
            return bad(format!("target porosity {} must lie in (0, 1)", self.target_porosity));
        }
        let (lo, hi) = self.grain_radius;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return bad(format!("grain radius range ({lo}, {hi}) is invalid"));
        }
        for v in [self.material_intensity, self.pore_intensity] {
            if !(0.0..=255.0).contains(&v) {
                return bad(format!("intensity {v} outside [0, 255]"));
            }
        }
        if self.material_intensity <= self.pore_intensity {
            return bad(format!(
                "material intensity {} must exceed pore intensity {}",
                self.material_intensity, self.pore_intensity
            ));
        }
        Ok(())
    }
}

/// A clean two-level volume and the labels it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub volume: Volume,
    pub truth: BinaryVolume,
}

/// Voxels of the ball of radius `r` around `c`, clipped to the grid.
fn ball(dims: Dims, c: [usize; 3], r: f64) -> impl Iterator<Item = usize> {
    let ri = r.floor() as isize;
    let r2 = r * r;
    let c = c.map(|x| x as isize);
    let lim = dims.as_array().map(|x| x as isize);
    (-ri..=ri).flat_map(move |dz| {
        (-ri..=ri).flat_map(move |dy| {
            (-ri..=ri).filter_map(move |dx| {
                let p = [c[0] + dx, c[1] + dy, c[2] + dz];
                let inside = (0..3).all(|k| p[k] >= 0 && p[k] < lim[k]);
                let d2 = (dx * dx + dy * dy + dz * dz) as f64;
                (inside && d2 <= r2).then(|| dims.index(p[0] as usize, p[1] as usize, p[2] as usize))
            })
        })
    })
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let dims = spec.dims;
    let total = dims.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut material = vec![false; total];
    let mut members: Vec<usize> = Vec::new();
    let (lo_target, hi_target) = (spec.target_porosity - POROSITY_TOLERANCE, spec.target_porosity + POROSITY_TOLERANCE);
    let porosity = |n: usize| (total - n) as f64 / total as f64;

    let mut attempts = 0;
    while members.is_empty() || porosity(members.len()) > hi_target {
        if attempts == MAX_ATTEMPTS {
            return Err(Error::PorosityUnreachable {
                target: spec.target_porosity,
                reached: porosity(members.len()),
                attempts,
            });
        }
        attempts += 1;
        let (rlo, rhi) = spec.grain_radius;
        let r = if rlo == rhi { rlo } else { rng.random_range(rlo..=rhi) };
        let centre = if members.is_empty() {
            [rng.random_range(0..dims.nx), rng.random_range(0..dims.ny), rng.random_range(0..dims.nz)]
        } else {
            // Jitter around an existing grain voxel so the new grain overlaps.
            let anchor = dims.coords(members[rng.random_range(0..members.len())]);
            let reach = r.floor() as i64;
            let lim = dims.as_array();
            std::array::from_fn(|k| {
                let off = if reach > 0 { rng.random_range(-reach..=reach) } else { 0 };
                (anchor[k] as i64 + off).clamp(0, lim[k] as i64 - 1) as usize
            })
        };
        let voxels: Vec<usize> = ball(dims, centre, r).collect();
        let overlaps = members.is_empty() || voxels.iter().any(|&i| material[i]);
        if !overlaps {
            continue;
        }
        let added = voxels.iter().filter(|&&i| !material[i]).count();
        if porosity(members.len() + added) < lo_target {
            continue;
        }
        for i in voxels {
            if !material[i] {
                material[i] = true;
                members.push(i);
            }
        }
    }

    let labels: Vec<u8> = material.iter().map(|&m| m as u8).collect();
    let data = material.iter().map(|&m| if m { spec.material_intensity } else { spec.pore_intensity }).collect();
    Ok(Phantom { volume: Volume::new(dims, data)?, truth: BinaryVolume::new(dims, labels)? })
}

/// Noise models. Parsed from `gaussian:sigma=8` or
/// `saltpepper:p=0.005,salt=255,pepper=0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    SaltPepper { p: f64, salt: f64, pepper: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidParameter(format!("noise sigma={sigma} must be finite and >= 0")))
            }
            NoiseModel::SaltPepper { p, .. } if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidParameter(format!("flip probability p={p} must lie in [0, 1]")))
            }
            NoiseModel::SaltPepper { salt, pepper, .. }
                if !(0.0..=255.0).contains(&salt) || !(0.0..=255.0).contains(&pepper) =>
            {
                Err(Error::InvalidParameter(format!("salt/pepper values {salt}/{pepper} outside [0, 255]")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Gaussian { sigma } => write!(f, "gaussian:sigma={sigma}"),
            NoiseModel::SaltPepper { p, salt, pepper } => write!(f, "saltpepper:p={p},salt={salt},pepper={pepper}"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let err = |m: &str| Error::InvalidParameter(format!("noise spec {input:?}: {m}"));
        let (kind, rest) = input.trim().split_once(':').unwrap_or((input.trim(), ""));
        let mut sigma = None;
        let (mut p, mut salt, mut pepper) = (None, 255.0, 0.0);
        for pair in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| err("expected key=value"))?;
            let v: f64 = v.trim().parse().map_err(|_| err("not a number"))?;
            match (kind, k.trim()) {
                ("gaussian", "sigma") => sigma = Some(v),
                ("saltpepper", "p") => p = Some(v),
                ("saltpepper", "salt") => salt = v,
                ("saltpepper", "pepper") => pepper = v,
                _ => return Err(err(&format!("unknown key {k:?}"))),
            }
        }
        let model = match kind {
            "gaussian" => NoiseModel::Gaussian { sigma: sigma.ok_or_else(|| err("missing sigma"))? },
            "saltpepper" => NoiseModel::SaltPepper { p: p.ok_or_else(|| err("missing p"))?, salt, pepper },
            _ => return Err(err("unknown noise model")),
        };
        model.validate()?;
        Ok(model)
    }
}

impl TryFrom<String> for NoiseModel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NoiseModel> for String {
    fn from(m: NoiseModel) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub seed: u64,
}

pub fn add_noise(v: &Volume, spec: &NoiseSpec) -> Result<Volume> {
    spec.model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let range = v.range();
    let data: Vec<f64> = match spec.model {
        NoiseModel::Gaussian { sigma } => {
            if sigma == 0.0 {
                return Ok(v.clone());
            }
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            v.data().iter().map(|&x| range.clamp(x + normal.sample(&mut rng))).collect()
        }
        NoiseModel::SaltPepper { p, salt, pepper } => v
            .data()
            .iter()
            .map(|&x| {
                let u: f64 = rng.random();
                if u < p / 2.0 {
                    salt
                } else if u < p {
                    pepper
                } else {
                    x
                }
            })
            .collect(),
    };
    Volume::clamped(v.dims(), data, range)
}
