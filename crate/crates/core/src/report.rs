//! CSV reports. Floats are written with six significant digits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::components::StoneReport;
use crate::error::{Error, Result};
use crate::postprocess::StoneDecision;
use crate::segmentation::{criterion_curve, Histogram};
use crate::selection::{Evaluation, SelectionResult, SweepTable};

/// Formats like C's `%.6g`.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    // Exponent after rounding to the requested precision.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn evaluation_row(e: &Evaluation, delta_max: f64) -> [String; 6] {
    [
        e.spec.family().to_string(),
        e.spec.params_string(),
        e.one_voxel_stones.to_string(),
        e.total_stones.to_string(),
        sig6(e.delta),
        e.is_feasible(delta_max).to_string(),
    ]
}

const TABLE_HEADER: [&str; 6] = ["family", "params", "one_voxel_stones", "total_stones", "delta", "feasible"];

/// Unfiltered baseline, then one row per family: its winner, or an empty
/// infeasible row.
pub fn write_selection_table<W: Write>(out: W, baseline: &Evaluation, result: &SelectionResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    w.write_record([
        "none".to_string(),
        "-".to_string(),
        baseline.one_voxel_stones.to_string(),
        baseline.total_stones.to_string(),
        sig6(baseline.delta),
        baseline.is_feasible(result.delta_max).to_string(),
    ])?;
    for fw in &result.best_per_family {
        match &fw.winner {
            Some(e) => w.write_record(evaluation_row(e, result.delta_max))?,
            None => w.write_record([fw.family.name(), "-", "", "", "", "false"])?,
        }
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

/// Every evaluated grid point.
pub fn write_evaluations<W: Write>(out: W, result: &SelectionResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for e in &result.evaluations {
        w.write_record(evaluation_row(e, result.delta_max))?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

pub fn write_sweep<W: Write>(out: W, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([table.param1.as_str(), table.param2.as_str(), "delta", "one_voxel_stones", "total_stones"])?;
    for r in &table.rows {
        w.write_record([
            sig6(r.param1),
            sig6(r.param2),
            sig6(r.delta),
            r.one_voxel_stones.to_string(),
            r.total_stones.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

/// Per-stone rows. Distances and metrics are optional columns, left empty
/// when not computed.
pub fn write_stones<W: Write>(out: W, report: &StoneReport, decisions: Option<&[StoneDecision]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "size", "d", "d_hat"])?;
    for (k, s) in report.stones.iter().enumerate() {
        let (d, d_hat) = match decisions.and_then(|d| d.get(k)) {
            Some(dec) => (sig6(dec.d), sig6(dec.d_hat)),
            None => (String::new(), String::new()),
        };
        w.write_record([s.id.to_string(), s.size().to_string(), d, d_hat])?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

pub fn write_size_histogram<W: Write>(out: W, report: &StoneReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["size", "count"])?;
    for (size, count) in &report.size_histogram {
        w.write_record([size.to_string(), count.to_string()])?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

pub fn write_decisions<W: Write>(out: W, decisions: &[StoneDecision]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stone_id", "size", "d", "d_hat", "action"])?;
    for d in decisions {
        w.write_record([d.stone_id.to_string(), d.size.to_string(), sig6(d.d), sig6(d.d_hat), d.action.to_string()])?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

/// Intensity histogram with the threshold criterion of the cut after each
/// bin (empty where the cut leaves a class empty, and for the last bin).
pub fn write_histogram<W: Write>(out: W, hist: &Histogram) -> Result<()> {
    let curve = criterion_curve(hist);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "count", "criterion"])?;
    for (b, &count) in hist.bins().iter().enumerate() {
        let j = curve.get(b).copied().flatten().map(sig6).unwrap_or_default();
        w.write_record([b.to_string(), count.to_string(), j])?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

/// Two-column `key,value` summary.
pub fn write_summary<W: Write>(out: W, rows: &[(&str, String)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([*k, v.as_str()])?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

/// Opens `path` and hands it to one of the writers above.
pub fn to_file(path: &Path, write: impl FnOnce(File) -> Result<()>) -> Result<()> {
    write(create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{FilterFamily, FilterSpec};
    use crate::selection::FamilyWinner;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0072), "0.0072");
        assert_eq!(sig6(0.00719999), "0.00719999");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(123456789.0), "1.23457e+08");
        assert_eq!(sig6(0.000012345678), "1.23457e-05");
        assert_eq!(sig6(20.0), "20");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(999999.5), "1e+06");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn table_quotes_params_and_flags_infeasible() {
        let e = Evaluation {
            spec: FilterSpec::Median { h: 1, w: 3 },
            delta: 0.0072,
            one_voxel_stones: 9,
            total_stones: 12,
            threshold_used: 120,
        };
        let base = Evaluation {
            spec: FilterSpec::IDENTITY,
            delta: 0.0,
            one_voxel_stones: 473,
            total_stones: 500,
            threshold_used: 120,
        };
        let result = SelectionResult {
            evaluations: vec![e],
            best_per_family: vec![
                FamilyWinner { family: FilterFamily::Median, winner: Some(e) },
                FamilyWinner { family: FilterFamily::Guided, winner: None },
            ],
            best_overall: Some(e),
            delta_max: 0.0072,
        };
        let mut buf = Vec::new();
        write_selection_table(&mut buf, &base, &result).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "family,params,one_voxel_stones,total_stones,delta,feasible\n\
             none,-,473,500,0,true\n\
             median,\"h=1,w=3\",9,12,0.0072,true\n\
             guided,-,,,,false\n"
        );
    }
}
