//! Parameter grids for selection and two-axis sweeps.
//!
//! Grid files are TOML with one table per filter family. Every parameter of
//! the family must be listed, either as a single number or an array:
//!
//! ```toml
//! [median]
//! h = [1, 3, 5]
//! w = [1, 3, 5]
//!
//! [aniso]
//! N = 8
//! lambda = [0.1, 0.2]
//! K = [10, 20, 30]
//! ```
//!
//! Sweep files name a base filter and the two parameters to vary:
//!
//! ```toml
//! [sweep]
//! base = "aniso:N=8,lambda=0.2,K=20"
//! param1 = "lambda"
//! values1 = [0.05, 0.1, 0.15, 0.2, 0.25]
//! param2 = "K"
//! values2 = [5, 10, 15, 20]
//! ```

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filters::{FilterFamily, FilterSpec};

/// Value lists for each parameter of one family, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyGrid {
    pub family: FilterFamily,
    pub axes: Vec<Vec<f64>>,
}

impl FamilyGrid {
    pub fn new(family: FilterFamily, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != family.param_names().len() {
            return Err(Error::GridFormat(format!(
                "{family} expects {} parameter axes, got {}",
                family.param_names().len(),
                axes.len()
            )));
        }
        let grid = FamilyGrid { family, axes };
        // Validate every point up front.
        grid.points()?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product with the last parameter varying fastest.
    pub fn points(&self) -> Result<Vec<FilterSpec>> {
        let n = self.len();
        let names = self.family.param_names();
        let template = default_point(self.family);
        (0..n)
            .map(|mut flat| {
                let mut values = vec![0.0; self.axes.len()];
                for (k, axis) in self.axes.iter().enumerate().rev() {
                    values[k] = axis[flat % axis.len()];
                    flat /= axis.len();
                }
                names
                    .iter()
                    .zip(&values)
                    .try_fold(template, |spec, (name, &v)| spec.with_param(name, v))
                    .map_err(|e| Error::GridFormat(format!("{}: {e}", self.family)))
            })
            .collect()
    }
}

/// A valid representative of each family; grids overwrite every parameter.
fn default_point(family: FilterFamily) -> FilterSpec {
    match family {
        FilterFamily::Median => FilterSpec::Median { h: 1, w: 1 },
        FilterFamily::AnisotropicDiffusion => FilterSpec::AnisotropicDiffusion { iterations: 0, lambda: 0.25, k: 1.0 },
        FilterFamily::Bilateral => FilterSpec::Bilateral { h: 1, w: 1, sigma_s: 1.0, sigma_r: 1.0 },
        FilterFamily::Guided => FilterSpec::Guided { w: 1, eps: 1.0 },
    }
}

/// Grids for any subset of the four families.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterGrid {
    pub families: Vec<FamilyGrid>,
}

fn steps(first: i64, last: i64, step: i64, denom: f64) -> Vec<f64> {
    (first..=last).step_by(step as usize).map(|k| k as f64 / denom).collect()
}

impl ParameterGrid {
    /// The built-in search grids. Each brackets the optimum reported for
    /// its family on the cermet membrane (median h=1,w=3; diffusion N=8,
    /// lambda=0.2, K=20; bilateral h=1,w=7, sigma_s=1.3, sigma_r=0.5;
    /// guided w=3, eps=0.275).
    pub fn default_grids() -> ParameterGrid {
        let f = |family, axes| FamilyGrid::new(family, axes).expect("built-in grid is valid");
        ParameterGrid {
            families: vec![
                f(FilterFamily::Median, vec![vec![1.0, 3.0, 5.0], vec![1.0, 3.0, 5.0]]),
                f(
                    FilterFamily::AnisotropicDiffusion,
                    vec![steps(1, 16, 1, 1.0), steps(1, 5, 1, 20.0), steps(5, 50, 5, 1.0)],
                ),
                f(
                    FilterFamily::Bilateral,
                    vec![vec![1.0, 3.0], vec![3.0, 5.0, 7.0, 9.0], steps(5, 25, 4, 10.0), steps(1, 10, 1, 10.0)],
                ),
                f(FilterFamily::Guided, vec![vec![3.0, 5.0, 7.0], steps(1, 20, 1, 40.0)]),
            ],
        }
    }

    pub fn single(family: FamilyGrid) -> ParameterGrid {
        ParameterGrid { families: vec![family] }
    }

    /// Every grid point, families in canonical order.
    pub fn points(&self) -> Result<Vec<FilterSpec>> {
        let mut out = Vec::new();
        for family in FilterFamily::ALL {
            for g in self.families.iter().filter(|g| g.family == family) {
                out.extend(g.points()?);
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.families.iter().map(FamilyGrid::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn from_toml(text: &str) -> Result<ParameterGrid> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::GridFormat(e.to_string()))?;
        let mut families = Vec::new();
        for (key, value) in &table {
            let family: FilterFamily = key.parse().map_err(|_| Error::GridFormat(format!("unknown family [{key}]")))?;
            if families.iter().any(|g: &FamilyGrid| g.family == family) {
                return Err(Error::GridFormat(format!("family {family} listed twice")));
            }
            let params = value.as_table().ok_or_else(|| Error::GridFormat(format!("[{key}] must be a table")))?;
            let names = family.param_names();
            let mut axes: Vec<Option<Vec<f64>>> = vec![None; names.len()];
            for (pkey, pval) in params {
                let canonical = family
                    .canonical_param(pkey)
                    .ok_or_else(|| Error::GridFormat(format!("{family} has no parameter {pkey:?}")))?;
                let slot = names.iter().position(|n| *n == canonical).unwrap();
                axes[slot] = Some(number_list(pval).map_err(|m| Error::GridFormat(format!("{family}.{pkey}: {m}")))?);
            }
            let axes = axes
                .into_iter()
                .zip(names)
                .map(|(a, n)| a.ok_or_else(|| Error::GridFormat(format!("{family}: missing parameter {n}"))))
                .collect::<Result<Vec<_>>>()?;
            families.push(FamilyGrid::new(family, axes)?);
        }
        let grid = ParameterGrid { families };
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(grid)
    }
}

fn number(v: &toml::Value) -> std::result::Result<f64, String> {
    match v {
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::Float(f) => Ok(*f),
        other => Err(format!("expected a number, found {other}")),
    }
}

fn number_list(v: &toml::Value) -> std::result::Result<Vec<f64>, String> {
    match v {
        toml::Value::Array(items) => items.iter().map(number).collect(),
        scalar => Ok(vec![number(scalar)?]),
    }
}

/// One varied parameter of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// A base filter with exactly two of its parameters varied.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub base: FilterSpec,
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
}

#[derive(Deserialize)]
struct SweepFile {
    sweep: SweepSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    base: String,
    param1: String,
    values1: Vec<toml::Value>,
    param2: String,
    values2: Vec<toml::Value>,
}

impl SweepGrid {
    pub fn new(base: FilterSpec, axis1: SweepAxis, axis2: SweepAxis) -> Result<SweepGrid> {
        let family = base.family();
        let canon = |a: &SweepAxis| {
            family
                .canonical_param(&a.name)
                .ok_or_else(|| Error::NotTwoDimensional(format!("{family} has no parameter {:?}", a.name)))
        };
        let (n1, n2) = (canon(&axis1)?, canon(&axis2)?);
        if n1 == n2 {
            return Err(Error::NotTwoDimensional(format!("both axes vary {n1}")));
        }
        if axis1.values.is_empty() || axis2.values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let grid = SweepGrid {
            base,
            axis1: SweepAxis { name: n1.to_string(), values: axis1.values },
            axis2: SweepAxis { name: n2.to_string(), values: axis2.values },
        };
        grid.points()?;
        Ok(grid)
    }

    /// Grid points as `(value1, value2, spec)`, axis 2 varying fastest.
    pub fn points(&self) -> Result<Vec<(f64, f64, FilterSpec)>> {
        let mut out = Vec::with_capacity(self.axis1.values.len() * self.axis2.values.len());
        for &a in &self.axis1.values {
            for &b in &self.axis2.values {
                let spec = self.base.with_param(&self.axis1.name, a)?.with_param(&self.axis2.name, b)?;
                out.push((a, b, spec));
            }
        }
        Ok(out)
    }

    /// Diffusion over lambda x K at N = 8.
    pub fn default_diffusion() -> SweepGrid {
        SweepGrid::new(
            FilterSpec::AnisotropicDiffusion { iterations: 8, lambda: 0.2, k: 20.0 },
            SweepAxis { name: "lambda".into(), values: steps(1, 5, 1, 20.0) },
            SweepAxis { name: "K".into(), values: steps(5, 50, 5, 1.0) },
        )
        .expect("built-in sweep is valid")
    }

    pub fn from_toml(text: &str) -> Result<SweepGrid> {
        let file: SweepFile = toml::from_str(text).map_err(|e| Error::GridFormat(e.to_string()))?;
        let s = file.sweep;
        let list = |vals: &[toml::Value], key: &str| {
            vals.iter()
                .map(number)
                .collect::<std::result::Result<Vec<f64>, String>>()
                .map_err(|m| Error::GridFormat(format!("sweep.{key}: {m}")))
        };
        SweepGrid::new(
            s.base.parse()?,
            SweepAxis { name: s.param1, values: list(&s.values1, "values1")? },
            SweepAxis { name: s.param2, values: list(&s.values2, "values2")? },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_sizes_and_reported_optima() {
        let g = ParameterGrid::default_grids();
        let sizes: Vec<usize> = g.families.iter().map(FamilyGrid::len).collect();
        assert_eq!(sizes, vec![9, 16 * 5 * 10, 2 * 4 * 6 * 10, 3 * 20]);
        let points = g.points().unwrap();
        for optimum in [
            "median:h=1,w=3",
            "aniso:N=8,lambda=0.2,K=20",
            "bilateral:h=1,w=7,sigma_s=1.3,sigma_r=0.5",
            "guided:w=3,eps=0.275",
        ] {
            let spec: FilterSpec = optimum.parse().unwrap();
            assert!(points.contains(&spec), "{optimum} is not a grid point");
        }
    }

    #[test]
    fn last_parameter_varies_fastest() {
        let g = FamilyGrid::new(FilterFamily::Median, vec![vec![1.0, 3.0], vec![1.0, 5.0]]).unwrap();
        let names: Vec<String> = g.points().unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["median:h=1,w=1", "median:h=1,w=5", "median:h=3,w=1", "median:h=3,w=5"]);
    }

    #[test]
    fn parses_grid_file() {
        let g =
            ParameterGrid::from_toml("[guided]\nw = 3\neps = [0.1, 0.2]\n\n[median]\nh = [1]\nw = [1, 3]\n").unwrap();
        let points: Vec<String> = g.points().unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(points, ["median:h=1,w=1", "median:h=1,w=3", "guided:w=3,eps=0.1", "guided:w=3,eps=0.2"]);
    }

    #[test]
    fn grid_file_errors() {
        assert!(matches!(ParameterGrid::from_toml(""), Err(Error::EmptyGrid)));
        assert!(matches!(ParameterGrid::from_toml("[median]\nh = []\nw = [1]"), Err(Error::EmptyGrid)));
        assert!(ParameterGrid::from_toml("[median]\nh = [1]").is_err());
        assert!(ParameterGrid::from_toml("[median]\nh = [2]\nw = [1]").is_err());
        assert!(ParameterGrid::from_toml("[gauss]\ns = [1]").is_err());
        assert!(ParameterGrid::from_toml("[median]\nh = [1]\nw = [1]\nq = 3").is_err());
    }

    #[test]
    fn sweep_file_and_validation() {
        let s = SweepGrid::from_toml(
            "[sweep]\nbase = \"aniso:N=8,lambda=0.2,K=20\"\nparam1 = \"lambda\"\nvalues1 = [0.1, 0.2, 0.25]\nparam2 = \"k\"\nvalues2 = [5, 10, 15, 20]\n",
        )
        .unwrap();
        assert_eq!(s.axis2.name, "K");
        assert_eq!(s.points().unwrap().len(), 12);

        let base: FilterSpec = "aniso:N=8,lambda=0.2,K=20".parse().unwrap();
        let ax = |n: &str| SweepAxis { name: n.into(), values: vec![1.0] };
        assert!(matches!(SweepGrid::new(base, ax("K"), ax("K")), Err(Error::NotTwoDimensional(_))));
        assert!(matches!(SweepGrid::new(base, ax("K"), ax("eps")), Err(Error::NotTwoDimensional(_))));
    }
}
