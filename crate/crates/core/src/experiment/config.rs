//! JSON experiment configuration with unit-suffixed keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::angular::HalfInt;
use crate::dynamics::params::units;
use crate::dynamics::{
    LarmorModel, MagnetometerParams, PhysicalConstants, PulseIntegration, PulseSchedule,
};
use crate::metrology::{QfiMethod, DEFAULT_ATOM_NUMBER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    SerfCompare,
    SerfSingle,
    KickedTopSweep,
}

impl std::str::FromStr for Scenario {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "serf_compare" => Ok(Scenario::SerfCompare),
            "serf_single" => Ok(Scenario::SerfSingle),
            "kicked_top_sweep" | "kickedtop" => Ok(Scenario::KickedTopSweep),
            other => Err(ExperimentError::Config(format!(
                "unknown scenario '{other}' (expected serf_compare, serf_single or kicked_top_sweep)"
            ))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::SerfCompare => "serf_compare",
            Scenario::SerfSingle => "serf_single",
            Scenario::KickedTopSweep => "kicked_top_sweep",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LarmorMode {
    /// Scale `larmor_ref_rad_s` linearly from `larmor_ref_b_T`.
    #[default]
    Reference,
    /// g μ_B B / ħ with `larmor_g`.
    Formula,
}

/// Grid of the idealized kicked-top sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KickedTopSweepConfig {
    /// Spin size, integer or half-integer.
    pub f: f64,
    pub alpha_rad: Vec<f64>,
    pub k: Vec<f64>,
    pub n_max: usize,
    /// Polar and azimuthal angles of the initial spin coherent state.
    pub theta_rad: f64,
    pub phi_rad: f64,
    /// Central-difference step in α.
    pub alpha_delta_rad: f64,
}

impl Default for KickedTopSweepConfig {
    fn default() -> Self {
        KickedTopSweepConfig {
            f: 3.0,
            alpha_rad: vec![0.1, 0.5, 1.0],
            k: vec![0.0, 1.0, 3.0, 6.0],
            n_max: 100,
            theta_rad: std::f64::consts::FRAC_PI_2,
            phi_rad: 0.0,
            alpha_delta_rad: 1e-7,
        }
    }
}

/// Every user-facing setting of a run. Keys carry their units.
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub output_dir: PathBuf,
    pub worker_count: usize,

    // magnetometer
    pub r_se_hz: f64,
    pub r_sd_hz: f64,
    pub b_field_T: f64,
    pub larmor_mode: LarmorMode,
    pub larmor_ref_rad_s: f64,
    pub larmor_ref_b_T: f64,
    pub larmor_g: f64,
    pub signed_g_factors: bool,
    pub temperature_K: f64,
    pub density_cm3: f64,
    pub polarization_q: f64,
    pub doppler_fwhm_mhz: f64,
    pub doppler_points: usize,
    pub doppler_sigma_cut: f64,
    pub dt_free_us: f64,
    pub dt_pulse_ns: f64,
    pub hermitize_each_step: bool,
    pub renormalize_trace: bool,
    pub symmetrize_spin_exchange: bool,
    pub hyperfine_enabled: bool,
    pub pulse_integration: PulseIntegration,

    // pulses
    pub tau_ms: f64,
    pub pulse_duration_us: f64,
    pub i_kick_mw_cm2: f64,
    pub detuning_34_mhz: f64,
    pub polarization: [f64; 3],
    pub propagation: [f64; 3],
    pub kicks_enabled: bool,
    pub ground_splitting_in_detuning: bool,

    // run and analysis
    pub total_time_s: f64,
    pub snapshot_stride_periods: usize,
    pub diagnostic_stride_periods: usize,
    pub fd_delta_rel: f64,
    pub qfi_method: QfiMethod,
    /// Relative SLD vs fidelity agreement required on the cross-checked snapshots.
    pub qfi_cross_check_tol: f64,
    /// Number of snapshots per arm cross-checked with the second QFI method.
    pub qfi_cross_check_samples: usize,
    pub n_atoms: f64,
    /// Relative change of the maximal rescaled QFI accepted by the convergence checks.
    pub convergence_tol: f64,

    pub kicked_top: KickedTopSweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = MagnetometerParams::default();
        let s = PulseSchedule::default();
        let (omega_ref, b_ref) = match p.larmor {
            LarmorModel::Reference { omega_ref, b_ref } => (omega_ref, b_ref),
            LarmorModel::Formula { .. } => unreachable!("default Larmor model is a reference value"),
        };
        ExperimentConfig {
            scenario: Scenario::SerfCompare,
            output_dir: PathBuf::from("out"),
            worker_count: 1,
            r_se_hz: p.r_se,
            r_sd_hz: p.r_sd,
            b_field_T: p.b_field,
            larmor_mode: LarmorMode::Reference,
            larmor_ref_rad_s: omega_ref,
            larmor_ref_b_T: b_ref,
            larmor_g: 0.25,
            signed_g_factors: p.signed_g_factors,
            temperature_K: p.temperature,
            density_cm3: p.density / 1e6,
            polarization_q: p.polarization_q,
            doppler_fwhm_mhz: units::rad_s_to_mhz(p.doppler_fwhm),
            doppler_points: p.doppler_points,
            doppler_sigma_cut: p.doppler_sigma_cut,
            dt_free_us: p.dt_free * 1e6,
            dt_pulse_ns: p.dt_pulse * 1e9,
            hermitize_each_step: p.hermitize_each_step,
            renormalize_trace: p.renormalize_trace,
            symmetrize_spin_exchange: p.symmetrize_spin_exchange,
            hyperfine_enabled: p.hyperfine_enabled,
            pulse_integration: p.pulse_integration,
            tau_ms: s.period_tau * 1e3,
            pulse_duration_us: s.pulse_duration * 1e6,
            i_kick_mw_cm2: s.i_kick / 10.0,
            detuning_34_mhz: units::rad_s_to_mhz(s.detuning_34),
            polarization: s.polarization,
            propagation: s.propagation,
            kicks_enabled: s.kicks_enabled,
            ground_splitting_in_detuning: s.ground_splitting_in_detuning,
            total_time_s: 400.0,
            snapshot_stride_periods: 250,
            diagnostic_stride_periods: 1000,
            fd_delta_rel: 1e-2,
            qfi_method: QfiMethod::Sld,
            qfi_cross_check_tol: 1e-3,
            qfi_cross_check_samples: 100,
            n_atoms: DEFAULT_ATOM_NUMBER,
            convergence_tol: 0.01,
            kicked_top: KickedTopSweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON text; blank input yields the defaults.
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = if text.trim().is_empty() {
            ExperimentConfig::default()
        } else {
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?
        };
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn physical_constants(&self) -> PhysicalConstants {
        PhysicalConstants::cesium()
    }

    pub fn magnetometer_params(&self) -> MagnetometerParams {
        MagnetometerParams {
            r_se: self.r_se_hz,
            r_sd: self.r_sd_hz,
            b_field: self.b_field_T,
            larmor: match self.larmor_mode {
                LarmorMode::Reference => LarmorModel::Reference {
                    omega_ref: self.larmor_ref_rad_s,
                    b_ref: self.larmor_ref_b_T,
                },
                LarmorMode::Formula => LarmorModel::Formula { g: self.larmor_g },
            },
            signed_g_factors: self.signed_g_factors,
            temperature: self.temperature_K,
            density: units::per_cm3_to_per_m3(self.density_cm3),
            polarization_q: self.polarization_q,
            doppler_fwhm: units::mhz_to_rad_s(self.doppler_fwhm_mhz),
            doppler_points: self.doppler_points,
            doppler_sigma_cut: self.doppler_sigma_cut,
            dt_free: self.dt_free_us * 1e-6,
            dt_pulse: self.dt_pulse_ns * 1e-9,
            hermitize_each_step: self.hermitize_each_step,
            renormalize_trace: self.renormalize_trace,
            symmetrize_spin_exchange: self.symmetrize_spin_exchange,
            hyperfine_enabled: self.hyperfine_enabled,
            pulse_integration: self.pulse_integration,
        }
    }

    pub fn pulse_schedule(&self) -> PulseSchedule {
        PulseSchedule {
            period_tau: self.tau_ms * 1e-3,
            pulse_duration: self.pulse_duration_us * 1e-6,
            i_kick: units::mw_cm2_to_w_m2(self.i_kick_mw_cm2),
            detuning_34: units::mhz_to_rad_s(self.detuning_34_mhz),
            polarization: self.polarization,
            propagation: self.propagation,
            kicks_enabled: self.kicks_enabled,
            ground_splitting_in_detuning: self.ground_splitting_in_detuning,
        }
    }

    /// Field step δ of the finite differences (T).
    pub fn fd_delta(&self) -> f64 {
        self.fd_delta_rel * self.b_field_T.abs()
    }

    pub fn kicked_top_spin(&self) -> Result<HalfInt, ExperimentError> {
        HalfInt::from_f64(self.kicked_top.f)
            .filter(|f| f.twice() >= 1)
            .ok_or_else(|| ExperimentError::Config(format!("kicked_top.f = {} is not a positive half-integer", self.kicked_top.f)))
    }

    /// Checks every field; returns warnings, which `strict` turns into errors.
    pub fn validate(&self, strict: bool) -> Result<Vec<String>, ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.worker_count == 0 {
            return bad("worker_count must be at least 1".into());
        }
        if !(self.total_time_s > 0.0 && self.total_time_s.is_finite()) {
            return bad(format!("total_time_s = {} must be positive", self.total_time_s));
        }
        if self.snapshot_stride_periods == 0 {
            return bad("snapshot_stride_periods must be at least 1".into());
        }
        if !(self.fd_delta_rel > 0.0 && self.fd_delta_rel < 1.0) {
            return bad(format!("fd_delta_rel = {} must lie in (0, 1)", self.fd_delta_rel));
        }
        if self.scenario != Scenario::KickedTopSweep && self.b_field_T == 0.0 {
            return bad("b_field_T must be non-zero for field-derivative analysis".into());
        }
        if !(self.n_atoms > 0.0) {
            return bad(format!("n_atoms = {} must be positive", self.n_atoms));
        }
        if !(self.qfi_cross_check_tol > 0.0 && self.convergence_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        let kt = &self.kicked_top;
        self.kicked_top_spin()?;
        if kt.alpha_rad.is_empty() || kt.k.is_empty() {
            return bad("kicked_top.alpha_rad and kicked_top.k must be non-empty".into());
        }
        if kt.k.iter().any(|&k| !(k >= 0.0)) || !(kt.alpha_delta_rad > 0.0) {
            return bad("kicked_top.k must be >= 0 and alpha_delta_rad > 0".into());
        }
        let params = self.magnetometer_params();
        let schedule = self.pulse_schedule();
        let warnings = params
            .validate(&schedule)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        let periods = self.total_time_s / schedule.period_tau;
        if periods < self.snapshot_stride_periods as f64 {
            return bad(format!(
                "total time of {periods:.0} periods is shorter than one snapshot stride"
            ));
        }
        if strict && !warnings.is_empty() {
            return Err(ExperimentError::Config(format!("strict mode: {}", warnings.join("; "))));
        }
        Ok(warnings)
    }

    /// SHA-256 of the canonical JSON form, excluding output location and worker count.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.worker_count = 1;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path, strict: bool) -> Result<(ExperimentConfig, Vec<String>), ExperimentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let warnings = cfg.validate(strict)?;
    Ok((cfg, warnings))
}
