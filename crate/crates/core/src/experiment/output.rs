//! Result files: CSV series, JSON summary and a plain-text run log.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    ArmResult, CompareReport, ConvergenceReport, CrossCheck, ExperimentConfig, ExperimentError, KickedTopReport,
    SingleReport, SUMMARY_SCHEMA_VERSION, TOOL_VERSION,
};
use crate::dynamics::RunStats;
use crate::metrology::CurveMax;

/// Version of the CSV column layout.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const SERIES_HEADER: [&str; 8] = [
    "scenario",
    "time_s",
    "qfi",
    "qfi_rescaled",
    "fisher_sz",
    "fisher_sz_rescaled",
    "delta_b_optimal",
    "delta_b_sz",
];

pub const KICKED_TOP_HEADER: [&str; 5] = ["f", "alpha", "k", "n", "qfi_alpha"];

/// Paths of the files written by one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifacts {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub log: PathBuf,
}

impl RunArtifacts {
    fn in_dir(dir: &Path, stem: &str) -> Self {
        RunArtifacts {
            csv: dir.join(format!("{stem}.csv")),
            summary: dir.join(format!("{stem}_summary.json")),
            log: dir.join(format!("{stem}.log")),
        }
    }
}

fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

fn csv_err(e: csv::Error) -> ExperimentError {
    ExperimentError::Io(e.to_string())
}

fn series_csv(arms: &[&ArmResult]) -> Result<Vec<u8>, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SERIES_HEADER).map_err(csv_err)?;
    for arm in arms {
        let s = &arm.series;
        for i in 0..s.len() {
            w.write_record([
                arm.label.clone(),
                sci(s.times[i]),
                sci(s.qfi[i]),
                sci(s.qfi_rescaled[i]),
                sci(s.fisher_sz[i]),
                sci(s.fisher_sz_rescaled[i]),
                sci(s.delta_b_optimal[i]),
                sci(s.delta_b_sz[i]),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| ExperimentError::Io(e.to_string()))
}

fn kicked_top_csv(report: &KickedTopReport) -> Result<Vec<u8>, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(KICKED_TOP_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([sci(r.f), sci(r.alpha), sci(r.k), r.n.to_string(), sci(r.qfi_alpha)])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| ExperimentError::Io(e.to_string()))
}

#[derive(Serialize)]
struct ArmSummary<'a> {
    label: &'a str,
    kicks_enabled: bool,
    snapshots: usize,
    max_qfi_rescaled: CurveMax,
    max_fisher_sz_rescaled: CurveMax,
    delta_b_optimal_at_max: f64,
    delta_b_sz_at_max: f64,
    cross_check: &'a CrossCheck,
    stats: RunStats,
}

impl<'a> ArmSummary<'a> {
    fn new(arm: &'a ArmResult) -> Self {
        let q = arm.max_qfi_rescaled();
        let f = arm.max_fisher_rescaled();
        ArmSummary {
            label: &arm.label,
            kicks_enabled: arm.kicks_enabled,
            snapshots: arm.series.len(),
            delta_b_optimal_at_max: arm.series.delta_b_optimal[q.index],
            delta_b_sz_at_max: arm.series.delta_b_sz[f.index],
            max_qfi_rescaled: q,
            max_fisher_sz_rescaled: f,
            cross_check: &arm.cross_check,
            stats: arm.combined_stats(),
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    csv_schema_version: u32,
    tool_version: &'static str,
    scenario: String,
    config_fingerprint: String,
    csv_file: String,
    arms: Vec<ArmSummary<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    improvement_optimal_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    improvement_sz_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convergence: Option<&'a ConvergenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kicked_top_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kicked_top_k0_max_relative_error: Option<f64>,
    warnings: &'a [String],
    config: &'a ExperimentConfig,
}

impl<'a> Summary<'a> {
    fn new(cfg: &'a ExperimentConfig, files: &RunArtifacts, warnings: &'a [String]) -> Self {
        Summary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            csv_schema_version: CSV_SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            scenario: cfg.scenario.to_string(),
            config_fingerprint: cfg.fingerprint(),
            csv_file: files
                .csv
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            arms: Vec::new(),
            improvement_optimal_percent: None,
            improvement_sz_percent: None,
            convergence: None,
            kicked_top_rows: None,
            kicked_top_k0_max_relative_error: None,
            warnings,
            config: cfg,
        }
    }

    fn to_bytes(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut v = serde_json::to_vec_pretty(self).map_err(|e| ExperimentError::Io(e.to_string()))?;
        v.push(b'\n');
        Ok(v)
    }
}

fn arm_log(out: &mut String, arm: &ArmResult) {
    let s = arm.combined_stats();
    out.push_str(&format!(
        "[{}] periods {} free steps {} pulse substeps {}\n",
        arm.label, s.periods, s.free_steps, s.pulse_steps
    ));
    out.push_str(&format!(
        "[{}] max trace drift {:e}, cumulative trace correction {:e}, max hermiticity drift {:e}, min eigenvalue {:e}\n",
        arm.label, s.max_trace_drift, s.cumulative_trace_correction, s.max_hermiticity_drift, s.min_eigenvalue
    ));
    out.push_str(&format!(
        "[{}] QFI cross-check on {} snapshots: worst relative difference {:e}, max Fisher/QFI {:.6}\n",
        arm.label,
        arm.cross_check.samples,
        arm.cross_check.worst_relative_difference,
        arm.cross_check.max_fisher_over_qfi
    ));
    for line in &arm.diagnostics {
        out.push_str(&format!("[{}] {line}\n", arm.label));
    }
}

fn log_text(cfg: &ExperimentConfig, warnings: &[String], arms: &[&ArmResult], conv: Option<&ConvergenceReport>) -> String {
    let mut out = format!(
        "serf-chaos {TOOL_VERSION} scenario {} config {}\n",
        cfg.scenario,
        cfg.fingerprint()
    );
    for w in warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    for arm in arms {
        arm_log(&mut out, arm);
    }
    if let Some(c) = conv {
        for k in &c.checks {
            out.push_str(&format!(
                "convergence {} {}: {:e} -> {:e} (relative change {:e}, {})\n",
                k.arm,
                k.refinement,
                k.baseline,
                k.refined,
                k.relative_change,
                if k.passed { "ok" } else { "FAILED" }
            ));
        }
    }
    out
}

/// Writes every file to a temporary sibling first and renames only when all
/// writes succeeded, so a failed run leaves no partial outputs behind.
fn commit(files: &[(&Path, Vec<u8>)]) -> Result<(), ExperimentError> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::new();
    let mut result = Ok(());
    for (path, bytes) in files {
        let tmp = path.with_extension(format!(
            "{}.partial",
            path.extension().and_then(|e| e.to_str()).unwrap_or("")
        ));
        if let Err(e) = fs::write(&tmp, bytes) {
            let _ = fs::remove_file(&tmp);
            result = Err(ExperimentError::Io(format!("{}: {e}", tmp.display())));
            break;
        }
        staged.push((tmp, path));
    }
    if result.is_ok() {
        for (i, (tmp, path)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, path) {
                for (_, done) in &staged[..i] {
                    let _ = fs::remove_file(done);
                }
                result = Err(ExperimentError::Io(format!("{}: {e}", path.display())));
                break;
            }
        }
    }
    for (tmp, _) in &staged {
        let _ = fs::remove_file(tmp);
    }
    result
}

fn prepare(cfg: &ExperimentConfig, stem: &str) -> Result<RunArtifacts, ExperimentError> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| ExperimentError::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    Ok(RunArtifacts::in_dir(&cfg.output_dir, stem))
}

pub fn write_compare(report: &CompareReport, cfg: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    let files = prepare(cfg, "serf_compare")?;
    let arms = [&report.kicked, &report.unkicked];
    let mut summary = Summary::new(cfg, &files, &report.warnings);
    summary.arms = arms.iter().map(|a| ArmSummary::new(a)).collect();
    summary.improvement_optimal_percent = Some(100.0 * report.improvement_optimal);
    summary.improvement_sz_percent = Some(100.0 * report.improvement_sz);
    summary.convergence = report.convergence.as_ref();
    commit(&[
        (&files.csv, series_csv(&arms)?),
        (&files.summary, summary.to_bytes()?),
        (&files.log, log_text(cfg, &report.warnings, &arms, report.convergence.as_ref()).into_bytes()),
    ])?;
    Ok(files)
}

pub fn write_single(report: &SingleReport, cfg: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    let files = prepare(cfg, "serf_single")?;
    let arms = [&report.arm];
    let mut summary = Summary::new(cfg, &files, &report.warnings);
    summary.arms = vec![ArmSummary::new(&report.arm)];
    summary.convergence = report.convergence.as_ref();
    commit(&[
        (&files.csv, series_csv(&arms)?),
        (&files.summary, summary.to_bytes()?),
        (&files.log, log_text(cfg, &report.warnings, &arms, report.convergence.as_ref()).into_bytes()),
    ])?;
    Ok(files)
}

pub fn write_kicked_top_sweep(report: &KickedTopReport, cfg: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    let files = prepare(cfg, "kicked_top_sweep")?;
    let mut summary = Summary::new(cfg, &files, &report.warnings);
    summary.kicked_top_rows = Some(report.rows.len());
    summary.kicked_top_k0_max_relative_error = report.k0_max_relative_error;
    commit(&[
        (&files.csv, kicked_top_csv(report)?),
        (&files.summary, summary.to_bytes()?),
        (&files.log, log_text(cfg, &report.warnings, &[], None).into_bytes()),
    ])?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_writes_all_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("missing").join("b.json");
        assert!(commit(&[(&a, b"x".to_vec()), (&b, b"y".to_vec())]).is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
        let b = dir.path().join("b.json");
        commit(&[(&a, b"x".to_vec()), (&b, b"y".to_vec())]).unwrap();
        assert_eq!(fs::read(&b).unwrap(), b"y");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn scientific_format() {
        assert_eq!(sci(1234.5), "1.234500000000e3");
        assert_eq!(sci(0.0), "0.000000000000e0");
    }
}
