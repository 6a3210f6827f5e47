//! The four denoising filters, applied plane by plane.
//!
//! Every filter uses clamp-to-edge sampling at slice borders. Range-domain
//! parameters (`sigma_r` of the bilateral filter, `eps` of the guided filter)
//! are given in normalized intensity units by default, i.e. relative to the
//! span of the volume's intensity range; [`RangeUnits::Raw`] interprets them
//! on the raw intensity scale instead.

mod bilateral;
mod diffusion;
mod guided;
mod median;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Slice, Volume};

pub use bilateral::{bilateral_filter, bilateral_weights};
pub use diffusion::{anisotropic_diffusion, diffusion_step, edge_stopping};
pub use guided::guided_filter;
pub use median::median_filter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterFamily {
    Median,
    #[serde(rename = "aniso")]
    AnisotropicDiffusion,
    Bilateral,
    Guided,
}

impl FilterFamily {
    pub const ALL: [FilterFamily; 4] =
        [FilterFamily::Median, FilterFamily::AnisotropicDiffusion, FilterFamily::Bilateral, FilterFamily::Guided];

    pub fn name(&self) -> &'static str {
        match self {
            FilterFamily::Median => "median",
            FilterFamily::AnisotropicDiffusion => "aniso",
            FilterFamily::Bilateral => "bilateral",
            FilterFamily::Guided => "guided",
        }
    }

    /// Canonical parameter names in grammar order.
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            FilterFamily::Median => &["h", "w"],
            FilterFamily::AnisotropicDiffusion => &["N", "lambda", "K"],
            FilterFamily::Bilateral => &["h", "w", "sigma_s", "sigma_r"],
            FilterFamily::Guided => &["w", "eps"],
        }
    }

    /// Maps accepted aliases onto the canonical parameter name.
    pub fn canonical_param(&self, name: &str) -> Option<&'static str> {
        let canonical = match (self, name) {
            (FilterFamily::AnisotropicDiffusion, "n") => "N",
            (FilterFamily::AnisotropicDiffusion, "k") => "K",
            (FilterFamily::Bilateral, "sigma_space") => "sigma_s",
            (FilterFamily::Bilateral, "sigma_color") => "sigma_r",
            (FilterFamily::Guided, "epsilon" | "sigma_k") => "eps",
            _ => name,
        };
        self.param_names().iter().copied().find(|p| *p == canonical)
    }
}

impl fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(FilterFamily::Median),
            "aniso" | "anisotropic" | "diffusion" => Ok(FilterFamily::AnisotropicDiffusion),
            "bilateral" => Ok(FilterFamily::Bilateral),
            "guided" => Ok(FilterFamily::Guided),
            other => {
                Err(Error::FilterSyntax { input: s.to_string(), message: format!("unknown filter family {other:?}") })
            }
        }
    }
}

/// A filter family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FilterSpec {
    Median { h: usize, w: usize },
    AnisotropicDiffusion { iterations: usize, lambda: f64, k: f64 },
    Bilateral { h: usize, w: usize, sigma_s: f64, sigma_r: f64 },
    Guided { w: usize, eps: f64 },
}

fn check_window(name: &str, n: usize) -> Result<()> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("window {name}={n} must be odd and >= 1")));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidParameter(format!("{name}={x} must be finite and > 0")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 0.25) {
        return Err(Error::InvalidParameter(format!("lambda={lambda} must lie in (0, 0.25]")));
    }
    Ok(())
}

impl FilterSpec {
    /// The filter that returns its input unchanged.
    pub const IDENTITY: FilterSpec = FilterSpec::Median { h: 1, w: 1 };

    pub fn family(&self) -> FilterFamily {
        match self {
            FilterSpec::Median { .. } => FilterFamily::Median,
            FilterSpec::AnisotropicDiffusion { .. } => FilterFamily::AnisotropicDiffusion,
            FilterSpec::Bilateral { .. } => FilterFamily::Bilateral,
            FilterSpec::Guided { .. } => FilterFamily::Guided,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FilterSpec::Median { h, w } => {
                check_window("h", h)?;
                check_window("w", w)
            }
            FilterSpec::AnisotropicDiffusion { lambda, k, .. } => {
                check_lambda(lambda)?;
                check_positive("K", k)
            }
            FilterSpec::Bilateral { h, w, sigma_s, sigma_r } => {
                check_window("h", h)?;
                check_window("w", w)?;
                check_positive("sigma_s", sigma_s)?;
                check_positive("sigma_r", sigma_r)
            }
            FilterSpec::Guided { w, eps } => {
                check_window("w", w)?;
                check_positive("eps", eps)
            }
        }
    }

    /// Parameter values in the order of [`FilterFamily::param_names`].
    pub fn param_values(&self) -> Vec<f64> {
        match *self {
            FilterSpec::Median { h, w } => vec![h as f64, w as f64],
            FilterSpec::AnisotropicDiffusion { iterations, lambda, k } => {
                vec![iterations as f64, lambda, k]
            }
            FilterSpec::Bilateral { h, w, sigma_s, sigma_r } => {
                vec![h as f64, w as f64, sigma_s, sigma_r]
            }
            FilterSpec::Guided { w, eps } => vec![w as f64, eps],
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        let family = self.family();
        let canonical = family.canonical_param(name)?;
        let pos = family.param_names().iter().position(|p| *p == canonical)?;
        Some(self.param_values()[pos])
    }

    /// Returns a copy with one parameter replaced. Integer parameters must
    /// receive integral values.
    pub fn with_param(&self, name: &str, value: f64) -> Result<FilterSpec> {
        let family = self.family();
        let canonical = family
            .canonical_param(name)
            .ok_or_else(|| Error::InvalidParameter(format!("{family} has no parameter {name:?}")))?;
        let mut values = self.param_values();
        let pos = family.param_names().iter().position(|p| *p == canonical).unwrap();
        values[pos] = value;
        FilterSpec::from_values(family, &values)
    }

    fn from_values(family: FilterFamily, v: &[f64]) -> Result<FilterSpec> {
        fn int(name: &str, x: f64) -> Result<usize> {
            if x.is_finite() && x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::InvalidParameter(format!("{name}={x} must be a non-negative integer")))
            }
        }
        let spec = match family {
            FilterFamily::Median => FilterSpec::Median { h: int("h", v[0])?, w: int("w", v[1])? },
            FilterFamily::AnisotropicDiffusion => {
                FilterSpec::AnisotropicDiffusion { iterations: int("N", v[0])?, lambda: v[1], k: v[2] }
            }
            FilterFamily::Bilateral => {
                FilterSpec::Bilateral { h: int("h", v[0])?, w: int("w", v[1])?, sigma_s: v[2], sigma_r: v[3] }
            }
            FilterFamily::Guided => FilterSpec::Guided { w: int("w", v[0])?, eps: v[1] },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `h=1,w=3` style parameter list, without the family prefix.
    pub fn params_string(&self) -> String {
        self.family()
            .param_names()
            .iter()
            .zip(self.param_values())
            .map(|(name, value)| format!("{name}={value}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family(), self.params_string())
    }
}

impl FromStr for FilterSpec {
    type Err = Error;

    /// Parses `family:key=value,...`, e.g. `aniso:N=8,lambda=0.2,K=20`.
    fn from_str(input: &str) -> Result<Self> {
        let syntax = |message: String| Error::FilterSyntax { input: input.to_string(), message };
        let (family, rest) =
            input.trim().split_once(':').ok_or_else(|| syntax("expected family:key=value,...".into()))?;
        let family: FilterFamily = family.trim().parse()?;
        let names = family.param_names();
        let mut values: Vec<Option<f64>> = vec![None; names.len()];
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                pair.split_once('=').ok_or_else(|| syntax(format!("expected key=value, found {pair:?}")))?;
            let key = key.trim();
            let canonical =
                family.canonical_param(key).ok_or_else(|| syntax(format!("unknown parameter {key:?} for {family}")))?;
            let value: f64 = value.trim().parse().map_err(|_| syntax(format!("{key}: not a number: {value:?}")))?;
            let slot = names.iter().position(|n| *n == canonical).unwrap();
            if values[slot].replace(value).is_some() {
                return Err(syntax(format!("parameter {canonical} given twice")));
            }
        }
        let values = values
            .into_iter()
            .zip(names)
            .map(|(v, n)| v.ok_or_else(|| syntax(format!("missing parameter {n}"))))
            .collect::<Result<Vec<f64>>>()?;
        FilterSpec::from_values(family, &values)
    }
}

impl TryFrom<String> for FilterSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FilterSpec> for String {
    fn from(spec: FilterSpec) -> String {
        spec.to_string()
    }
}

/// Units of the range-domain parameters `sigma_r` and `eps`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeUnits {
    /// Relative to the span of the volume's intensity range (0..=1).
    #[default]
    Normalized,
    /// On the raw intensity scale (0..=255 for 8-bit data).
    Raw,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterOptions {
    pub range_units: RangeUnits,
}

/// Applies a 2D filter to one slice. `span` is the intensity span used to
/// convert normalized range parameters to raw units.
pub fn filter_slice(s: &Slice, spec: &FilterSpec, span: f64, opts: &FilterOptions) -> Result<Slice> {
    spec.validate()?;
    let scale = match opts.range_units {
        RangeUnits::Normalized => span,
        RangeUnits::Raw => 1.0,
    };
    match *spec {
        FilterSpec::Median { h, w } => median_filter(s, h, w),
        FilterSpec::AnisotropicDiffusion { iterations, lambda, k } => anisotropic_diffusion(s, iterations, lambda, k),
        FilterSpec::Bilateral { h, w, sigma_s, sigma_r } => bilateral_filter(s, h, w, sigma_s, sigma_r * scale),
        FilterSpec::Guided { w, eps } => guided_filter(s, w, eps * scale * scale),
    }
}

/// Filters every z-plane independently and clamps the result to the
/// volume's intensity range.
pub fn apply_filter(v: &Volume, spec: &FilterSpec) -> Result<Volume> {
    apply_filter_with(v, spec, &FilterOptions::default())
}

pub fn apply_filter_with(v: &Volume, spec: &FilterSpec, opts: &FilterOptions) -> Result<Volume> {
    spec.validate()?;
    let dims = v.dims();
    let range = v.range();
    let planes = v
        .data()
        .par_chunks(dims.plane())
        .map(|plane| {
            let s = Slice { nx: dims.nx, ny: dims.ny, data: plane.to_vec() };
            filter_slice(&s, spec, range.span(), opts).map(|out| out.data)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Volume::clamped(dims, planes.concat(), range)
}

/// Window offsets `-(n/2)..=n/2` for an odd window length.
pub(crate) fn half(n: usize) -> isize {
    (n / 2) as isize
}
