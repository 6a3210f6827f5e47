use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use poreseg::components::Connectivity;
use poreseg::phantom::NoiseModel;
use poreseg::FilterSpec;

use crate::config::RunConfig;
use crate::error::EXIT_CODES;

#[derive(Debug, Parser)]
#[command(name = "poreseg", version, about = "Filtering, segmentation and stone analysis for porous CT volumes")]
#[command(after_help = EXIT_CODES)]
pub struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for filtering and grid search (results do not depend on it).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Seed for phantom and noise generation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a two-level phantom and its ground-truth labels.
    Phantom(PhantomArgs),
    /// Add Gaussian or salt-and-pepper noise to a volume.
    Noise(NoiseArgs),
    /// Apply one filter slice by slice.
    Filter(FilterArgs),
    /// Threshold a volume into pore (0) and material (1).
    Segment(SegmentArgs),
    /// Label a binary volume and report the bulk and its stones.
    Analyze(AnalyzeArgs),
    /// Grid-search filter parameters under a distortion budget.
    Select(SelectArgs),
    /// Evaluate a two-parameter sweep of one filter.
    Sweep(SweepArgs),
    /// Remove or keep stones by their relative distance to the bulk.
    Postprocess(PostprocessArgs),
    /// Phantom, noise, select, segment and postprocess in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args, Default)]
pub struct PhantomFlags {
    /// Volume size: one value for a cube or NX,NY,NZ.
    #[arg(long, value_delimiter = ',', num_args = 1..=3)]
    pub dims: Option<Vec<usize>>,
    /// Target pore fraction.
    #[arg(long)]
    pub porosity: Option<f64>,
    /// Grain radius range MIN,MAX in voxels.
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    pub grain_radius: Option<Vec<f64>>,
    /// Material intensity.
    #[arg(long)]
    pub material: Option<f64>,
    /// Pore intensity.
    #[arg(long)]
    pub pore: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct SegmentFlags {
    /// `auto` (unbalanced Otsu) or a fixed threshold 0..=255.
    #[arg(long)]
    pub threshold: Option<String>,
    /// 6, 18 or 26.
    #[arg(long)]
    pub connectivity: Option<Connectivity>,
}

#[derive(Debug, Args, Default)]
pub struct BudgetFlags {
    /// `calibrate` or an explicit distortion budget.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max: Option<String>,
    /// Reference filter used by `--delta-max calibrate`.
    #[arg(long)]
    pub calibration_filter: Option<FilterSpec>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Ground-truth labels; defaults to `<output stem>_truth.raw`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub phantom: PhantomFlags,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// `gaussian:sigma=8` or `saltpepper:p=0.005[,salt=255,pepper=0]`.
    #[arg(long)]
    pub noise: Option<NoiseModel>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// e.g. `median:h=1,w=3`, `aniso:N=8,lambda=0.2,K=20`,
    /// `bilateral:h=1,w=7,sigma_s=1.3,sigma_r=0.5`, `guided:w=3,eps=0.275`.
    #[arg(long)]
    pub filter: Option<FilterSpec>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Summary CSV; the histogram goes next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Binary volume.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Per-stone CSV; size histogram and summary go next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub connectivity: Option<Connectivity>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Writes the volume filtered with the overall winner.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Grid TOML with one table per family; built-in grids if omitted.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Per-family winners CSV; all evaluations and a summary go next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub segment: SegmentFlags,
    #[command(flatten)]
    pub budget: BudgetFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Sweep TOML (`[sweep]` with base, param1, values1, param2, values2);
    /// diffusion over lambda x K if omitted.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub segment: SegmentFlags,
    #[command(flatten)]
    pub budget: BudgetFlags,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    /// Binary volume.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Stones with d / cbrt(V_s) above tau are removed.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub connectivity: Option<Connectivity>,
    /// Per-stone decisions CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Existing volume to analyse instead of a generated phantom.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Noise added to the phantom; default `saltpepper:p=0.005`.
    #[arg(long)]
    pub noise: Option<NoiseModel>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub phantom: PhantomFlags,
    #[command(flatten)]
    pub segment: SegmentFlags,
    #[command(flatten)]
    pub budget: BudgetFlags,
}

impl PhantomFlags {
    fn apply(self, c: &mut RunConfig) {
        c.dims = self.dims;
        c.porosity = self.porosity;
        c.grain_radius = self.grain_radius;
        c.material = self.material;
        c.pore = self.pore;
    }
}

impl SegmentFlags {
    fn apply(self, c: &mut RunConfig) {
        c.threshold = self.threshold;
        c.connectivity = self.connectivity;
    }
}

impl BudgetFlags {
    fn apply(self, c: &mut RunConfig) {
        c.delta_max = self.delta_max;
        c.calibration_filter = self.calibration_filter;
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Phantom(_) => "phantom",
            Command::Noise(_) => "noise",
            Command::Filter(_) => "filter",
            Command::Segment(_) => "segment",
            Command::Analyze(_) => "analyze",
            Command::Select(_) => "select",
            Command::Sweep(_) => "sweep",
            Command::Postprocess(_) => "postprocess",
            Command::Pipeline(_) => "pipeline",
        }
    }

    /// The settings given on the command line, everything else unset.
    pub fn into_flags(self) -> RunConfig {
        let mut c = RunConfig::default();
        match self {
            Command::Phantom(a) => {
                c.output = a.output;
                c.truth = a.truth;
                a.phantom.apply(&mut c);
            }
            Command::Noise(a) => {
                c.input = a.input;
                c.output = a.output;
                c.noise = a.noise;
            }
            Command::Filter(a) => {
                c.input = a.input;
                c.output = a.output;
                c.filter = a.filter;
            }
            Command::Segment(a) => {
                c.input = a.input;
                c.output = a.output;
                c.report = a.report;
                c.threshold = a.threshold;
            }
            Command::Analyze(a) => {
                c.input = a.input;
                c.report = a.report;
                c.connectivity = a.connectivity;
            }
            Command::Select(a) => {
                c.input = a.input;
                c.output = a.output;
                c.grid = a.grid;
                c.report = a.report;
                a.segment.apply(&mut c);
                a.budget.apply(&mut c);
            }
            Command::Sweep(a) => {
                c.input = a.input;
                c.grid = a.grid;
                c.report = a.report;
                a.segment.apply(&mut c);
                a.budget.apply(&mut c);
            }
            Command::Postprocess(a) => {
                c.input = a.input;
                c.output = a.output;
                c.tau = a.tau;
                c.connectivity = a.connectivity;
                c.report = a.report;
            }
            Command::Pipeline(a) => {
                c.input = a.input;
                c.output = a.output;
                c.grid = a.grid;
                c.noise = a.noise;
                c.tau = a.tau;
                a.phantom.apply(&mut c);
                a.segment.apply(&mut c);
                a.budget.apply(&mut c);
            }
        }
        c
    }
}
