//! Experiment orchestration: scenario runs, result summaries and file output.

pub mod config;
pub mod output;

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    DiagnosticLine, DynamicsError, EvolveOptions, Evolution, LightSuperoperator, MagnetometerParams,
    Propagator, RunStats, SerfModel,
};
use crate::kickedtop::{self, KickedTopError, KickedTopParams};
use crate::metrology::{
    self, precision_series, sz_povm, CurveMax, MetrologyError, PrecisionSeries, QfiMethod, StateTrajectory,
    StateTriple,
};
use crate::state::DensityMatrix;

pub use config::{load_config, ExperimentConfig, KickedTopSweepConfig, LarmorMode, Scenario};
pub use output::{write_compare, write_kicked_top_sweep, write_single, RunArtifacts, CSV_SCHEMA_VERSION};

/// Version of the JSON summary layout.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
    #[error(transparent)]
    KickedTop(#[from] KickedTopError),
    #[error("the {arm} rescaled QFI peaks at the final snapshot (t = {time} s); increase total_time_s")]
    Bracket { arm: String, time: f64 },
    #[error("I/O error: {0}")]
    Io(String),
}

impl ExperimentError {
    /// Process exit code: 1 for invalid input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::KickedTop(_) | ExperimentError::Io(_) => 1,
            ExperimentError::Dynamics(e) if !e.is_numerical() => 1,
            ExperimentError::Dynamics(_) | ExperimentError::Metrology(_) | ExperimentError::Bracket { .. } => 2,
        }
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

/// Agreement of the two QFI methods and the Fisher ≤ QFI bound on one arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub samples: usize,
    pub worst_relative_difference: f64,
    pub max_fisher_over_qfi: f64,
}

/// One simulated arm: three trajectories at B - δ, B, B + δ and their analysis.
#[derive(Clone, Debug)]
pub struct ArmResult {
    pub label: String,
    pub kicks_enabled: bool,
    pub series: PrecisionSeries,
    /// Trajectories at B - δ, B, B + δ.
    pub trajectories: [StateTrajectory; 3],
    pub stats: [RunStats; 3],
    pub diagnostics: Vec<DiagnosticLine>,
    pub cross_check: CrossCheck,
}

impl ArmResult {
    pub fn max_qfi_rescaled(&self) -> CurveMax {
        self.series.max_qfi_rescaled().expect("non-empty series")
    }

    pub fn max_fisher_rescaled(&self) -> CurveMax {
        self.series.max_fisher_rescaled().expect("non-empty series")
    }

    /// Worst-case trace and Hermiticity statistics over the three trajectories.
    pub fn combined_stats(&self) -> RunStats {
        let mut out = self.stats[0];
        for s in &self.stats[1..] {
            out.max_trace_drift = out.max_trace_drift.max(s.max_trace_drift);
            out.cumulative_trace_correction = out.cumulative_trace_correction.max(s.cumulative_trace_correction);
            out.max_hermiticity_drift = out.max_hermiticity_drift.max(s.max_hermiticity_drift);
            out.min_eigenvalue = out.min_eigenvalue.min(s.min_eigenvalue);
        }
        out
    }
}

/// Change of the maximal rescaled QFI under one refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub arm: String,
    pub refinement: String,
    pub horizon_s: f64,
    pub baseline: f64,
    pub refined: f64,
    pub relative_change: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub tolerance: f64,
    pub checks: Vec<ConvergenceCheck>,
    pub all_passed: bool,
}

/// Outcome of the kicked vs unkicked comparison.
#[derive(Clone, Debug)]
pub struct CompareReport {
    pub kicked: ArmResult,
    pub unkicked: ArmResult,
    /// Relative ΔB improvement at the respective optima, as a fraction.
    pub improvement_optimal: f64,
    pub improvement_sz: f64,
    pub convergence: Option<ConvergenceReport>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SingleReport {
    pub arm: ArmResult,
    pub convergence: Option<ConvergenceReport>,
    pub warnings: Vec<String>,
}

/// One row of the kicked-top sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickedTopRow {
    pub f: f64,
    pub alpha: f64,
    pub k: f64,
    pub n: usize,
    pub qfi_alpha: f64,
}

#[derive(Clone, Debug)]
pub struct KickedTopReport {
    pub rows: Vec<KickedTopRow>,
    /// Largest relative deviation from 4n²Var(F_y) over the k = 0, n ≥ 1 rows.
    pub k0_max_relative_error: Option<f64>,
    pub warnings: Vec<String>,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, ExperimentError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Config(format!("cannot start {workers} workers: {e}")))
}

/// Settings of one arm that may differ from the configuration.
#[derive(Clone, Debug)]
struct ArmSetup {
    label: String,
    params: MagnetometerParams,
    kicks_enabled: bool,
    total_time: f64,
    delta: f64,
}

impl ArmSetup {
    fn from_config(cfg: &ExperimentConfig, label: &str, kicks_enabled: bool) -> Self {
        ArmSetup {
            label: label.to_string(),
            params: cfg.magnetometer_params(),
            kicks_enabled,
            total_time: cfg.total_time_s,
            delta: cfg.fd_delta(),
        }
    }
}

fn simulate(
    cfg: &ExperimentConfig,
    setup: &ArmSetup,
    fields: &[f64],
    pool: &rayon::ThreadPool,
) -> Result<Vec<Evolution>, ExperimentError> {
    let consts = cfg.physical_constants();
    let mut schedule = cfg.pulse_schedule();
    schedule.kicks_enabled = setup.kicks_enabled;
    let base = SerfModel::new(consts.clone(), setup.params.clone(), schedule.clone())?;
    let light = Arc::new(LightSuperoperator::new(&base));
    let rho0 = base.thermal_state(setup.params.polarization_q)?;
    let opts = EvolveOptions {
        total_time: setup.total_time,
        snapshot_stride: cfg.snapshot_stride_periods,
        diagnostic_stride: cfg.diagnostic_stride_periods,
        check_positivity: true,
    };
    log::info!("{}: {} trajectories over {} s", setup.label, fields.len(), setup.total_time);
    pool.install(|| {
        fields
            .par_iter()
            .map(|&b| {
                let model = SerfModel::new(consts.clone(), setup.params.with_b_field(b), schedule.clone())?;
                Propagator::with_light(&model, light.clone())
                    .evolve(&rho0, &opts)
                    .map_err(ExperimentError::from)
            })
            .collect()
    })
}

fn sample_indices(len: usize, samples: usize) -> Vec<usize> {
    if len == 0 || samples == 0 {
        return Vec::new();
    }
    if samples >= len {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..samples)
        .map(|i| ((i as f64 + 0.5) * len as f64 / samples as f64) as usize)
        .map(|i| i.min(len - 1))
        .collect();
    idx.dedup();
    idx
}

fn cross_check(
    series: &PrecisionSeries,
    trajs: &[StateTrajectory; 3],
    delta: f64,
    cfg: &ExperimentConfig,
) -> Result<CrossCheck, ExperimentError> {
    let other = match cfg.qfi_method {
        QfiMethod::Sld => QfiMethod::FidelityFd,
        QfiMethod::FidelityFd => QfiMethod::Sld,
    };
    // series rows start at the first snapshot with t > 0
    let offset = trajs[1].len() - series.len();
    let mut worst = 0.0f64;
    let picks = sample_indices(series.len(), cfg.qfi_cross_check_samples);
    for &k in &picks {
        let i = offset + k;
        let triple = StateTriple::new(&trajs[0].states[i], &trajs[1].states[i], &trajs[2].states[i]);
        let q = metrology::qfi(triple, delta, other)?;
        let base = series.qfi[k];
        let rel = (q - base).abs() / base.abs().max(q.abs()).max(f64::MIN_POSITIVE);
        if rel > 0.01 {
            return Err(MetrologyError::MethodsDisagree {
                sld: if other == QfiMethod::Sld { q } else { base },
                fidelity: if other == QfiMethod::Sld { base } else { q },
            }
            .into());
        }
        worst = worst.max(rel);
    }
    let ratio = series
        .fisher_sz
        .iter()
        .zip(&series.qfi)
        .map(|(f, q)| if *q > 0.0 { f / q } else { 0.0 })
        .fold(0.0, f64::max);
    if worst > cfg.qfi_cross_check_tol {
        log::warn!("QFI methods differ by up to {worst:e}");
    }
    Ok(CrossCheck {
        samples: picks.len(),
        worst_relative_difference: worst,
        max_fisher_over_qfi: ratio,
    })
}

fn run_arm(cfg: &ExperimentConfig, setup: &ArmSetup, pool: &rayon::ThreadPool) -> Result<ArmResult, ExperimentError> {
    let b = setup.params.b_field;
    let mut runs = simulate(cfg, setup, &[b - setup.delta, b, b + setup.delta], pool)?.into_iter();
    let (minus, center, plus) = (runs.next().unwrap(), runs.next().unwrap(), runs.next().unwrap());
    let tag = cfg.fingerprint();
    let trajectories = [
        minus.trajectory.with_tag(tag.clone()),
        center.trajectory.with_tag(tag.clone()),
        plus.trajectory.with_tag(tag),
    ];
    let series = precision_series(
        &trajectories[0],
        &trajectories[1],
        &trajectories[2],
        setup.delta,
        &sz_povm(),
        cfg.n_atoms,
        cfg.qfi_method,
    )?;
    if series.is_empty() {
        return Err(ExperimentError::Config("no snapshots after t = 0".into()));
    }
    let check = cross_check(&series, &trajectories, setup.delta, cfg)?;
    Ok(ArmResult {
        label: setup.label.clone(),
        kicks_enabled: setup.kicks_enabled,
        series,
        trajectories,
        stats: [minus.stats, center.stats, plus.stats],
        diagnostics: center.diagnostics,
        cross_check: check,
    })
}

fn check_bracket(arm: &ArmResult) -> Result<(), ExperimentError> {
    let m = arm.max_qfi_rescaled();
    if m.index + 1 == arm.series.len() {
        return Err(ExperimentError::Bracket {
            arm: arm.label.clone(),
            time: m.time,
        });
    }
    Ok(())
}

fn max_within(series: &PrecisionSeries, horizon: f64) -> f64 {
    series
        .times
        .iter()
        .zip(&series.qfi_rescaled)
        .filter(|(t, _)| **t <= horizon * (1.0 + 1e-12))
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Reruns an arm with refined numerics over a horizon of twice its QFI
/// optimum and compares the maximal rescaled QFI.
fn convergence_checks(
    cfg: &ExperimentConfig,
    base_setup: &ArmSetup,
    base: &ArmResult,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ConvergenceCheck>, ExperimentError> {
    let period = cfg.tau_ms * 1e-3;
    let block = period * cfg.snapshot_stride_periods as f64;
    let optimum = base.max_qfi_rescaled().time;
    let horizon = ((2.0 * optimum / block).ceil() * block + 4.0 * block).min(cfg.total_time_s);
    let baseline = max_within(&base.series, horizon);
    let mut checks = Vec::new();
    let mut record = |name: &str, refined: f64| {
        let rel = (refined - baseline).abs() / baseline;
        checks.push(ConvergenceCheck {
            arm: base.label.clone(),
            refinement: name.to_string(),
            horizon_s: horizon,
            baseline,
            refined,
            relative_change: rel,
            passed: rel < cfg.convergence_tol,
        });
    };

    let mut setup = base_setup.clone();
    setup.total_time = horizon;
    setup.params.dt_free /= 2.0;
    setup.params.dt_pulse /= 2.0;
    let arm = run_arm(cfg, &setup, pool)?;
    record("dt_halved", max_within(&arm.series, horizon));

    let mut setup = base_setup.clone();
    setup.total_time = horizon;
    setup.params.doppler_points *= 2;
    let arm = run_arm(cfg, &setup, pool)?;
    record("doppler_nodes_doubled", max_within(&arm.series, horizon));

    // δ halving only needs the two new neighbors; the center run is reused
    let mut setup = base_setup.clone();
    setup.total_time = horizon;
    let half = setup.delta / 2.0;
    let b = setup.params.b_field;
    let runs = simulate(cfg, &setup, &[b - half, b + half], pool)?;
    let n = runs[0].trajectory.len();
    let center = StateTrajectory::new(
        base.trajectories[1].times[..n].to_vec(),
        base.trajectories[1].states[..n].to_vec(),
    )?;
    let series = precision_series(
        &runs[0].trajectory,
        &center,
        &runs[1].trajectory,
        half,
        &sz_povm(),
        cfg.n_atoms,
        cfg.qfi_method,
    )?;
    record("delta_halved", max_within(&series, horizon));
    Ok(checks)
}

fn convergence_report(tolerance: f64, checks: Vec<ConvergenceCheck>) -> ConvergenceReport {
    let all_passed = checks.iter().all(|c| c.passed);
    ConvergenceReport {
        tolerance,
        checks,
        all_passed,
    }
}

/// Kicked and unkicked magnetometers under otherwise identical settings.
pub fn serf_compare(cfg: &ExperimentConfig, converge: bool) -> Result<CompareReport, ExperimentError> {
    let warnings = cfg.validate(false)?;
    let pool = thread_pool(cfg.worker_count)?;
    let kicked_setup = ArmSetup::from_config(cfg, "kicked", cfg.kicks_enabled);
    let unkicked_setup = ArmSetup::from_config(cfg, "unkicked", false);
    let kicked = run_arm(cfg, &kicked_setup, &pool)?;
    let unkicked = run_arm(cfg, &unkicked_setup, &pool)?;
    check_bracket(&unkicked)?;
    check_bracket(&kicked)?;

    let best = |arm: &ArmResult| {
        let q = arm.max_qfi_rescaled();
        let f = arm.max_fisher_rescaled();
        (arm.series.delta_b_optimal[q.index], arm.series.delta_b_sz[f.index])
    };
    let (ko, ks) = best(&kicked);
    let (uo, us) = best(&unkicked);
    let convergence = if converge {
        let mut checks = convergence_checks(cfg, &kicked_setup, &kicked, &pool)?;
        checks.extend(convergence_checks(cfg, &unkicked_setup, &unkicked, &pool)?);
        Some(convergence_report(cfg.convergence_tol, checks))
    } else {
        None
    };
    Ok(CompareReport {
        improvement_optimal: metrology::improvement(uo, ko),
        improvement_sz: metrology::improvement(us, ks),
        kicked,
        unkicked,
        convergence,
        warnings,
    })
}

/// A single magnetometer run with the configured kick setting.
pub fn serf_single(cfg: &ExperimentConfig, converge: bool) -> Result<SingleReport, ExperimentError> {
    let warnings = cfg.validate(false)?;
    let pool = thread_pool(cfg.worker_count)?;
    let label = if cfg.kicks_enabled { "kicked" } else { "unkicked" };
    let setup = ArmSetup::from_config(cfg, label, cfg.kicks_enabled);
    let arm = run_arm(cfg, &setup, &pool)?;
    check_bracket(&arm)?;
    let convergence = if converge {
        Some(convergence_report(cfg.convergence_tol, convergence_checks(cfg, &setup, &arm, &pool)?))
    } else {
        None
    };
    Ok(SingleReport {
        arm,
        convergence,
        warnings,
    })
}

/// α-QFI of stroboscopically kicked spin coherent states over the configured grid.
pub fn kicked_top_sweep(cfg: &ExperimentConfig) -> Result<KickedTopReport, ExperimentError> {
    let warnings = cfg.validate(false)?;
    let kt = &cfg.kicked_top;
    let f = cfg.kicked_top_spin()?;
    let psi0 = kickedtop::coherent_state(f, kt.theta_rad, kt.phi_rad)?;
    let spin = crate::angular::spin_matrices(f).map_err(KickedTopError::from)?;
    let var = kickedtop::variance(&psi0, &spin.fy);
    let d = kt.alpha_delta_rad;
    let grid: Vec<(f64, f64)> = kt
        .alpha_rad
        .iter()
        .flat_map(|&a| kt.k.iter().map(move |&k| (a, k)))
        .collect();
    let pool = thread_pool(cfg.worker_count)?;
    let blocks: Vec<Result<Vec<KickedTopRow>, ExperimentError>> = pool.install(|| {
        grid.par_iter()
            .map(|&(alpha, k)| {
                let orbit = |a: f64| {
                    kickedtop::stroboscopic_orbit(&psi0, &KickedTopParams::new(f, a, k), kt.n_max)
                        .map(|o| o.iter().map(DensityMatrix::from_pure).collect::<Vec<_>>())
                };
                let (m, c, p) = (orbit(alpha - d)?, orbit(alpha)?, orbit(alpha + d)?);
                (0..=kt.n_max)
                    .map(|n| {
                        let q = metrology::qfi(StateTriple::new(&m[n], &c[n], &p[n]), d, QfiMethod::Sld)?;
                        Ok(KickedTopRow {
                            f: f.value(),
                            alpha,
                            k,
                            n,
                            qfi_alpha: q,
                        })
                    })
                    .collect()
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(grid.len() * (kt.n_max + 1));
    for b in blocks {
        rows.extend(b?);
    }
    let k0_max_relative_error = rows
        .iter()
        .filter(|r| r.k == 0.0 && r.n > 0)
        .map(|r| {
            let want = 4.0 * (r.n * r.n) as f64 * var;
            (r.qfi_alpha - want).abs() / want
        })
        .reduce(f64::max);
    Ok(KickedTopReport {
        rows,
        k0_max_relative_error,
        warnings,
    })
}

/// Options supplied on the command line.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub scenario: Option<Scenario>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub strict: bool,
    pub converge: bool,
}

/// Applies command-line overrides, validates, runs the scenario and writes its files.
pub fn run(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunArtifacts, ExperimentError> {
    if let Some(s) = opts.scenario {
        cfg.scenario = s;
    }
    if let Some(o) = &opts.output_dir {
        cfg.output_dir = o.clone();
    }
    if let Some(w) = opts.workers {
        cfg.worker_count = w;
    }
    let warnings = cfg.validate(opts.strict)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    match cfg.scenario {
        Scenario::SerfCompare => {
            let report = serf_compare(&cfg, opts.converge)?;
            write_compare(&report, &cfg)
        }
        Scenario::SerfSingle => {
            let report = serf_single(&cfg, opts.converge)?;
            write_single(&report, &cfg)
        }
        Scenario::KickedTopSweep => {
            let report = kicked_top_sweep(&cfg)?;
            write_kicked_top_sweep(&report, &cfg)
        }
    }
}
