use std::fs;
use std::path::{Path, PathBuf};

use poreseg::components::{analyze, StoneReport};
use poreseg::grid::{ParameterGrid, SweepGrid};
use poreseg::io::{load_binary, load_volume, save_binary, save_volume};
use poreseg::phantom::{add_noise, generate_phantom, NoiseModel, NoiseSpec};
use poreseg::postprocess::{resolve_stones, StoneAction, StoneDecision, DEFAULT_TAU};
use poreseg::report::{self, sig6};
use poreseg::segmentation::{histogram, segment};
use poreseg::selection::{
    calibrate_delta_max_with, evaluate_config, grid_search, param_sweep_report, DeltaMaxMode, EvalOptions,
    SelectionResult,
};
use poreseg::{apply_filter, BinaryVolume, FilterSpec, Volume};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Collects written files for the run record.
struct Outputs(Vec<PathBuf>);

impl Outputs {
    fn new() -> Self {
        Outputs(Vec::new())
    }

    fn volume(&mut self, v: &Volume, path: &Path) -> CliResult<()> {
        save_volume(v, path)?;
        self.0.push(path.to_path_buf());
        Ok(())
    }

    fn binary(&mut self, b: &BinaryVolume, path: &Path) -> CliResult<()> {
        save_binary(b, path)?;
        self.0.push(path.to_path_buf());
        Ok(())
    }

    fn csv(&mut self, path: &Path, write: impl FnOnce(fs::File) -> poreseg::Result<()>) -> CliResult<()> {
        report::to_file(path, write)?;
        self.0.push(path.to_path_buf());
        Ok(())
    }
}

/// `dir/stem.tag.csv` next to `report`.
fn sibling(report: &Path, tag: &str) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    report.with_file_name(format!("{stem}.{tag}.csv"))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes the resolved config and the list of outputs to `path`.
fn write_record(path: &Path, command: &str, cfg: &RunConfig, outputs: &Outputs) -> CliResult<()> {
    let record = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "outputs": outputs.0,
    });
    let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| poreseg::Error::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

fn log_config(command: &str, cfg: &RunConfig) {
    log::info!("{command}: {}", serde_json::to_string(cfg).expect("config serializes"));
}

/// Records next to the first output, or next to the report.
fn finish(command: &str, cfg: &RunConfig, outputs: Outputs) -> CliResult<()> {
    log_config(command, cfg);
    if let Some(first) = outputs.0.first() {
        write_record(&with_suffix(first, ".run.json"), command, cfg, &outputs)?;
    }
    Ok(())
}

fn eval_options(cfg: &mut RunConfig) -> CliResult<EvalOptions> {
    Ok(EvalOptions { threshold: cfg.threshold()?, connectivity: cfg.connectivity(), ..EvalOptions::default() })
}

fn resolve_delta_max(cfg: &mut RunConfig, v: &Volume) -> CliResult<f64> {
    let mode = cfg.delta_max()?;
    let reference = cfg.calibration_filter();
    let d = match mode {
        DeltaMaxMode::Calibrate => calibrate_delta_max_with(v, &reference)?,
        DeltaMaxMode::Explicit(d) => d,
    };
    log::info!("delta_max = {} ({mode})", sig6(d));
    Ok(d)
}

fn load_grid(cfg: &RunConfig) -> CliResult<ParameterGrid> {
    match &cfg.grid {
        None => Ok(ParameterGrid::default_grids()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read grid {}: {e}", path.display())))?;
            Ok(ParameterGrid::from_toml(&text)?)
        }
    }
}

fn load_sweep(cfg: &RunConfig) -> CliResult<SweepGrid> {
    match &cfg.grid {
        None => Ok(SweepGrid::default_diffusion()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read sweep grid {}: {e}", path.display())))?;
            Ok(SweepGrid::from_toml(&text)?)
        }
    }
}

pub fn phantom(mut cfg: RunConfig) -> CliResult<()> {
    let spec = cfg.phantom_spec()?;
    let output = cfg.output()?;
    let truth = cfg.truth.get_or_insert_with(|| {
        let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        output.with_file_name(format!("{stem}_truth.raw"))
    });
    let truth = truth.clone();
    let p = generate_phantom(&spec)?;
    log::info!("phantom porosity {}", sig6(p.truth.porosity()));
    let mut out = Outputs::new();
    out.volume(&p.volume, &output)?;
    out.binary(&p.truth, &truth)?;
    finish("phantom", &cfg, out)
}

pub fn noise(mut cfg: RunConfig) -> CliResult<()> {
    let v = load_volume(&cfg.input()?)?;
    let spec = NoiseSpec { model: cfg.noise()?, seed: cfg.seed() };
    let noisy = add_noise(&v, &spec)?;
    let mut out = Outputs::new();
    out.volume(&noisy, &cfg.output()?)?;
    finish("noise", &cfg, out)
}

pub fn filter(cfg: RunConfig) -> CliResult<()> {
    let v = load_volume(&cfg.input()?)?;
    let spec = cfg.filter()?;
    let filtered = apply_filter(&v, &spec)?;
    log::info!("{spec}: delta = {}", sig6(poreseg::selection::distortion(&v, &filtered)?));
    let mut out = Outputs::new();
    out.volume(&filtered, &cfg.output()?)?;
    finish("filter", &cfg, out)
}

pub fn segment_cmd(mut cfg: RunConfig) -> CliResult<()> {
    let v = load_volume(&cfg.input()?)?;
    let mode = cfg.threshold()?;
    let output = cfg.output()?;
    let (b, t, j) = segment(&v, mode)?;
    match j {
        Some(j) => log::info!("threshold t* = {t}, J(t*) = {}", sig6(j)),
        None => log::info!("threshold t = {t} (fixed)"),
    }
    let mut out = Outputs::new();
    out.binary(&b, &output)?;
    if let Some(rep) = cfg.report.clone() {
        let rows = [
            ("threshold", t.to_string()),
            ("criterion", j.map(sig6).unwrap_or_default()),
            ("material_voxels", b.material_count().to_string()),
            ("porosity", sig6(b.porosity())),
        ];
        out.csv(&rep, |f| report::write_summary(f, &rows))?;
        let hist = histogram(&v);
        out.csv(&sibling(&rep, "histogram"), |f| report::write_histogram(f, &hist))?;
    }
    finish("segment", &cfg, out)
}

fn stone_rows(report: &StoneReport) -> Vec<(&'static str, String)> {
    vec![
        ("bulk_size", report.bulk.size().to_string()),
        ("total_stones", report.total_stones().to_string()),
        ("one_voxel_stones", report.one_voxel_count.to_string()),
    ]
}

/// Distances and relative distances of every stone, without changing the volume.
fn measure(b: &BinaryVolume, report: &StoneReport) -> CliResult<Vec<StoneDecision>> {
    Ok(resolve_stones(b, report, DEFAULT_TAU)?.1)
}

pub fn analyze_cmd(mut cfg: RunConfig) -> CliResult<()> {
    let b = load_binary(&cfg.input()?)?;
    let conn = cfg.connectivity();
    let rep = cfg.report()?;
    let (_, stones) = analyze(&b, conn)?;
    let decisions = measure(&b, &stones)?;
    log::info!(
        "bulk {} voxels, {} stones, {} one-voxel",
        stones.bulk.size(),
        stones.total_stones(),
        stones.one_voxel_count
    );
    let mut out = Outputs::new();
    out.csv(&rep, |f| report::write_stones(f, &stones, Some(&decisions)))?;
    out.csv(&sibling(&rep, "sizes"), |f| report::write_size_histogram(f, &stones))?;
    let mut rows = stone_rows(&stones);
    rows.push(("porosity", sig6(b.porosity())));
    out.csv(&sibling(&rep, "summary"), |f| report::write_summary(f, &rows))?;
    finish("analyze", &cfg, out)
}

fn selection_summary(
    delta_max: f64,
    grid_len: usize,
    baseline: &poreseg::selection::Evaluation,
    r: &SelectionResult,
) -> Vec<(&'static str, String)> {
    let infeasible: Vec<&str> = r.infeasible_families().iter().map(|f| f.name()).collect();
    vec![
        ("delta_max", sig6(delta_max)),
        ("grid_points", grid_len.to_string()),
        ("baseline_one_voxel_stones", baseline.one_voxel_stones.to_string()),
        ("baseline_total_stones", baseline.total_stones.to_string()),
        ("best_filter", r.best_overall.map(|e| e.spec.to_string()).unwrap_or_default()),
        ("best_one_voxel_stones", r.best_overall.map(|e| e.one_voxel_stones.to_string()).unwrap_or_default()),
        ("best_delta", r.best_overall.map(|e| sig6(e.delta)).unwrap_or_default()),
        ("infeasible_families", infeasible.join(" ")),
    ]
}

/// Runs the search and writes the three selection CSVs next to `rep`.
fn run_selection(
    cfg: &mut RunConfig,
    v: &Volume,
    rep: &Path,
    out: &mut Outputs,
) -> CliResult<(SelectionResult, EvalOptions)> {
    let grid = load_grid(cfg)?;
    if grid.is_empty() {
        return Err(poreseg::Error::EmptyGrid.into());
    }
    let opts = eval_options(cfg)?;
    let delta_max = resolve_delta_max(cfg, v)?;
    let baseline = evaluate_config(v, &FilterSpec::IDENTITY, &opts)?;
    log::info!("evaluating {} grid points", grid.len());
    let result = grid_search(v, &grid, delta_max, &opts)?;
    for fw in &result.best_per_family {
        match &fw.winner {
            Some(e) => log::info!("{}: {} one-voxel={} delta={}", fw.family, e.spec, e.one_voxel_stones, sig6(e.delta)),
            None => log::warn!("{}: no feasible point", fw.family),
        }
    }
    out.csv(rep, |f| report::write_selection_table(f, &baseline, &result))?;
    out.csv(&sibling(rep, "evaluations"), |f| report::write_evaluations(f, &result))?;
    let rows = selection_summary(delta_max, grid.len(), &baseline, &result);
    out.csv(&sibling(rep, "summary"), |f| report::write_summary(f, &rows))?;
    Ok((result, opts))
}

pub fn select(mut cfg: RunConfig) -> CliResult<()> {
    let v = load_volume(&cfg.input()?)?;
    let rep = cfg.report()?;
    let mut out = Outputs::new();
    let (result, _) = run_selection(&mut cfg, &v, &rep, &mut out)?;
    if let Some(path) = cfg.output.clone() {
        match result.best_overall {
            Some(best) => out.volume(&apply_filter(&v, &best.spec)?, &path)?,
            None => log::warn!("nothing feasible; {} not written", path.display()),
        }
    }
    finish("select", &cfg, out)
}

pub fn sweep(mut cfg: RunConfig) -> CliResult<()> {
    let v = load_volume(&cfg.input()?)?;
    let rep = cfg.report()?;
    let grid = load_sweep(&cfg)?;
    let opts = eval_options(&mut cfg)?;
    let delta_max = resolve_delta_max(&mut cfg, &v)?;
    let table = param_sweep_report(&v, &grid, &opts)?;
    let best = table.feasible_minimizer(delta_max).copied();
    let mut rows = vec![("delta_max", sig6(delta_max)), ("base", grid.base.to_string())];
    match best {
        Some(r) => {
            log::info!(
                "feasible minimizer {}={} {}={}: one-voxel={} delta={}",
                table.param1,
                sig6(r.param1),
                table.param2,
                sig6(r.param2),
                r.one_voxel_stones,
                sig6(r.delta)
            );
            rows.extend([
                ("best_param1", sig6(r.param1)),
                ("best_param2", sig6(r.param2)),
                ("best_one_voxel_stones", r.one_voxel_stones.to_string()),
                ("best_delta", sig6(r.delta)),
            ]);
        }
        None => log::warn!("no sweep point within delta_max"),
    }
    let mut out = Outputs::new();
    out.csv(&rep, |f| report::write_sweep(f, &table))?;
    out.csv(&sibling(&rep, "summary"), |f| report::write_summary(f, &rows))?;
    finish("sweep", &cfg, out)
}

fn count(decisions: &[StoneDecision], action: StoneAction) -> usize {
    decisions.iter().filter(|d| d.action == action).count()
}

pub fn postprocess(mut cfg: RunConfig) -> CliResult<()> {
    let b = load_binary(&cfg.input()?)?;
    let tau = cfg.tau();
    let conn = cfg.connectivity();
    let output = cfg.output()?;
    let (_, stones) = analyze(&b, conn)?;
    let (cleaned, decisions) = resolve_stones(&b, &stones, tau)?;
    log::info!(
        "tau = {tau}: removed {}, attached {}",
        count(&decisions, StoneAction::Remove),
        count(&decisions, StoneAction::Attach)
    );
    let mut out = Outputs::new();
    out.binary(&cleaned, &output)?;
    if let Some(rep) = cfg.report.clone() {
        out.csv(&rep, |f| report::write_decisions(f, &decisions))?;
    }
    finish("postprocess", &cfg, out)
}

pub fn pipeline(mut cfg: RunConfig) -> CliResult<()> {
    let dir = cfg.output()?;
    fs::create_dir_all(&dir).map_err(|e| poreseg::Error::Io { path: dir.clone(), source: e })?;
    let mut out = Outputs::new();
    let mut rows: Vec<(&'static str, String)> = Vec::new();

    let (v, truth) = match cfg.input.clone() {
        Some(path) => (load_volume(&path)?, None),
        None => {
            let spec = cfg.phantom_spec()?;
            let p = generate_phantom(&spec)?;
            out.volume(&p.volume, &dir.join("phantom.raw"))?;
            out.binary(&p.truth, &dir.join("truth.raw"))?;
            let model = *cfg.noise.get_or_insert(NoiseModel::SaltPepper { p: 0.005, salt: 255.0, pepper: 0.0 });
            // Offset so the noise stream differs from the phantom's.
            let noisy = add_noise(&p.volume, &NoiseSpec { model, seed: spec.seed.wrapping_add(1) })?;
            out.volume(&noisy, &dir.join("noisy.raw"))?;
            rows.push(("truth_porosity", sig6(p.truth.porosity())));
            (noisy, Some(p.truth))
        }
    };

    let (result, opts) = run_selection(&mut cfg, &v, &dir.join("selection.csv"), &mut out)?;
    let best = result.best_overall.map(|e| e.spec).unwrap_or_else(|| {
        log::warn!("no feasible filter; continuing unfiltered");
        FilterSpec::IDENTITY
    });
    let filtered = apply_filter(&v, &best)?;
    out.volume(&filtered, &dir.join("filtered.raw"))?;

    let (b, t, _) = segment(&filtered, opts.threshold)?;
    out.binary(&b, &dir.join("segmented.raw"))?;
    let (_, stones) = analyze(&b, opts.connectivity)?;
    let tau = cfg.tau();
    let (cleaned, decisions) = resolve_stones(&b, &stones, tau)?;
    out.binary(&cleaned, &dir.join("cleaned.raw"))?;
    let stones_csv = dir.join("stones.csv");
    out.csv(&stones_csv, |f| report::write_decisions(f, &decisions))?;
    out.csv(&sibling(&stones_csv, "sizes"), |f| report::write_size_histogram(f, &stones))?;

    rows.extend([
        ("filter", best.to_string()),
        ("threshold", t.to_string()),
        ("segmented_porosity", sig6(b.porosity())),
        ("removed_stones", count(&decisions, StoneAction::Remove).to_string()),
        ("attached_stones", count(&decisions, StoneAction::Attach).to_string()),
        ("cleaned_porosity", sig6(cleaned.porosity())),
    ]);
    rows.extend(stone_rows(&stones));
    if let Some(truth) = truth {
        let agree = truth.labels().iter().zip(cleaned.labels()).filter(|(a, b)| a == b).count();
        rows.push(("voxel_agreement", sig6(agree as f64 / truth.labels().len() as f64)));
    }
    out.csv(&dir.join("summary.csv"), |f| report::write_summary(f, &rows))?;

    log_config("pipeline", &cfg);
    write_record(&dir.join("run.json"), "pipeline", &cfg, &out)
}
