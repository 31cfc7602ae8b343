//! Physical constants and run parameters, all in SI units with angular
//! frequencies in rad/s.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::DynamicsError;

pub const TWO_PI: f64 = 2.0 * PI;

/// Unit conversions applied at the configuration boundary.
pub mod units {
    use super::TWO_PI;

    /// Frequency in MHz to angular frequency in rad/s.
    pub fn mhz_to_rad_s(mhz: f64) -> f64 {
        TWO_PI * mhz * 1e6
    }

    pub fn rad_s_to_mhz(w: f64) -> f64 {
        w / (TWO_PI * 1e6)
    }

    /// mW/cm² to W/m².
    pub fn mw_cm2_to_w_m2(i: f64) -> f64 {
        i * 10.0
    }

    /// atoms/cm³ to atoms/m³.
    pub fn per_cm3_to_per_m3(n: f64) -> f64 {
        n * 1e6
    }
}

/// Cesium D1-line and ground-state data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// D1 natural linewidth (rad/s).
    pub gamma_nat: f64,
    /// Saturation intensity for off-resonant linearly polarized light (W/m²).
    pub i_sat: f64,
    /// 6P1/2 hyperfine splitting (rad/s).
    pub hyperfine_splitting_excited: f64,
    /// 6S1/2 hyperfine splitting (rad/s).
    pub hyperfine_splitting_ground: f64,
    /// Ground-state magnetic dipole constant a_hf (rad/s); the splitting is a_hf (K + 1/2).
    pub a_hf: f64,
    pub g_f3: f64,
    pub g_f4: f64,
    /// μ_B/ħ (rad s⁻¹ T⁻¹).
    pub bohr_magneton_over_hbar: f64,
    pub atom_mass: f64,
    pub boltzmann: f64,
    pub d1_wavelength: f64,
    /// Wall-collision depolarization rate of a coated 3 cm cell (1/s).
    /// Recorded for reference only; the master equation omits it.
    pub r_wall: f64,
}

impl PhysicalConstants {
    pub fn cesium() -> Self {
        let ground = TWO_PI * 9_192.631_770e6;
        PhysicalConstants {
            gamma_nat: TWO_PI * 4.575e6,
            i_sat: 25.0,
            hyperfine_splitting_excited: TWO_PI * 1167e6,
            hyperfine_splitting_ground: ground,
            a_hf: ground / 4.0,
            g_f3: -0.25,
            g_f4: 0.25,
            bohr_magneton_over_hbar: 9.274_010_078_3e-24 / 1.054_571_817e-34,
            atom_mass: 2.206_946_50e-25,
            boltzmann: 1.380_649e-23,
            d1_wavelength: 894.592_959e-9,
            r_wall: 11e-3,
        }
    }

    /// Doppler FWHM (rad/s) of the D1 line from the Maxwell–Boltzmann velocity
    /// distribution at `temperature`.
    pub fn thermal_doppler_fwhm(&self, temperature: f64) -> f64 {
        let v = (8.0 * LN_2 * self.boltzmann * temperature / self.atom_mass).sqrt();
        TWO_PI * v / self.d1_wavelength
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::cesium()
    }
}

/// Ω_Lar = g μ_B B / ħ
pub fn larmor_frequency(b: f64, g: f64, consts: &PhysicalConstants) -> f64 {
    g * consts.bohr_magneton_over_hbar * b
}

/// Ω = γ_nat sqrt(I / (2 I_sat))
pub fn rabi_frequency(i_kick: f64, consts: &PhysicalConstants) -> f64 {
    consts.gamma_nat * (i_kick.max(0.0) / (2.0 * consts.i_sat)).sqrt()
}

/// How the Larmor frequency follows from the magnetic field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum LarmorModel {
    /// Ω_Lar scales linearly from a stated value at a reference field.
    Reference { omega_ref: f64, b_ref: f64 },
    /// Ω_Lar = g μ_B B / ħ.
    Formula { g: f64 },
}

impl Default for LarmorModel {
    fn default() -> Self {
        LarmorModel::Reference {
            omega_ref: 4.4e-4,
            b_ref: 4e-14,
        }
    }
}

/// Integration scheme for the light-pulse windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PulseIntegration {
    /// Euler substeps of length `dt_pulse`, composed once into a single
    /// propagator of the linear generator; the spin-exchange nonlinearity is
    /// evaluated at the start of each pulse.
    #[default]
    Composed,
    /// Literal Euler substeps with the full generator re-evaluated each step.
    Stepwise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetometerParams {
    /// Spin-exchange rate (1/s).
    pub r_se: f64,
    /// Spin-destruction rate (1/s).
    pub r_sd: f64,
    /// Magnetic field along ŷ (T).
    pub b_field: f64,
    pub larmor: LarmorModel,
    /// Apply Ω_Lar with the sign of each manifold's g-factor instead of a
    /// single Ω_Lar F_y on both manifolds.
    pub signed_g_factors: bool,
    /// Vapor temperature (K).
    pub temperature: f64,
    /// Atomic density (1/m³).
    pub density: f64,
    /// Initial spin polarization q of the thermal state.
    pub polarization_q: f64,
    /// Doppler FWHM of the optical detunings (rad/s).
    pub doppler_fwhm: f64,
    pub doppler_points: usize,
    pub doppler_sigma_cut: f64,
    pub dt_free: f64,
    pub dt_pulse: f64,
    pub hermitize_each_step: bool,
    pub renormalize_trace: bool,
    /// Use ½[φA + Aφ] for the spin-exchange factor instead of φA.
    pub symmetrize_spin_exchange: bool,
    pub hyperfine_enabled: bool,
    pub pulse_integration: PulseIntegration,
}

impl Default for MagnetometerParams {
    fn default() -> Self {
        MagnetometerParams {
            r_se: 12.0,
            r_sd: 0.12,
            b_field: 4e-14,
            larmor: LarmorModel::default(),
            signed_g_factors: false,
            temperature: 294.0,
            density: units::per_cm3_to_per_m3(2e10),
            polarization_q: 0.95,
            doppler_fwhm: units::mhz_to_rad_s(357.0),
            doppler_points: 21,
            doppler_sigma_cut: 3.0,
            dt_free: 100e-6,
            dt_pulse: 20e-9,
            hermitize_each_step: true,
            renormalize_trace: true,
            symmetrize_spin_exchange: true,
            hyperfine_enabled: true,
            pulse_integration: PulseIntegration::Composed,
        }
    }
}

impl MagnetometerParams {
    /// Larmor frequency of the configured field (rad/s).
    pub fn omega_larmor(&self, consts: &PhysicalConstants) -> f64 {
        match self.larmor {
            LarmorModel::Reference { omega_ref, b_ref } => omega_ref * self.b_field / b_ref,
            LarmorModel::Formula { g } => larmor_frequency(self.b_field, g, consts),
        }
    }

    /// Per-manifold Larmor frequencies (f = 3, f = 4).
    pub fn manifold_larmor(&self, consts: &PhysicalConstants) -> [f64; 2] {
        let w = self.omega_larmor(consts);
        if self.signed_g_factors {
            let g4 = consts.g_f4;
            [w * consts.g_f3 / g4, w]
        } else {
            [w, w]
        }
    }

    /// Standard deviation of the Gaussian detuning distribution (rad/s).
    pub fn doppler_sigma(&self) -> f64 {
        self.doppler_fwhm / (2.0 * (2.0 * LN_2).sqrt())
    }

    /// R_se / |Ω_Lar|; the SERF regime needs this ≫ 1.
    pub fn serf_ratio(&self, consts: &PhysicalConstants) -> f64 {
        self.r_se / self.omega_larmor(consts).abs()
    }

    pub fn with_b_field(&self, b: f64) -> Self {
        MagnetometerParams {
            b_field: b,
            ..self.clone()
        }
    }

    pub fn validate(&self, schedule: &PulseSchedule) -> Result<Vec<String>, DynamicsError> {
        let invalid = |msg: String| Err(DynamicsError::InvalidParameter(msg));
        if !(self.r_se >= 0.0 && self.r_sd >= 0.0) {
            return invalid("relaxation rates must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.polarization_q) {
            return invalid(format!("polarization q = {} outside [0, 1]", self.polarization_q));
        }
        if self.doppler_points == 0 {
            return invalid("doppler_points must be at least 1".into());
        }
        if !(self.doppler_fwhm >= 0.0 && self.doppler_sigma_cut > 0.0) {
            return invalid("Doppler width must be >= 0 and sigma cut > 0".into());
        }
        if !(self.dt_free > 0.0 && self.dt_pulse > 0.0) {
            return invalid("time steps must be positive".into());
        }
        if !(self.b_field.is_finite() && self.temperature > 0.0 && self.density > 0.0) {
            return invalid("field, temperature and density must be finite and positive".into());
        }
        schedule.validate()?;
        if self.dt_pulse > schedule.pulse_duration * (1.0 + 1e-12) {
            return invalid(format!(
                "dt_pulse {:e} s exceeds the pulse duration {:e} s",
                self.dt_pulse, schedule.pulse_duration
            ));
        }
        let free = schedule.period_tau - schedule.pulse_duration;
        if self.dt_free > free * (1.0 + 1e-12) {
            return invalid(format!(
                "dt_free {:e} s exceeds the free precession window {:e} s",
                self.dt_free, free
            ));
        }
        let mut warnings = Vec::new();
        let consts = PhysicalConstants::cesium();
        let ratio = self.serf_ratio(&consts);
        if ratio < 1e3 {
            warnings.push(format!(
                "R_se/Omega_Lar = {ratio:.3e} is below 1e3; not in the SERF regime"
            ));
        }
        Ok(warnings)
    }
}

/// Timing, intensity and geometry of the periodic kick pulses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    /// Kick period τ (s).
    pub period_tau: f64,
    /// Pulse length at the end of every period (s).
    pub pulse_duration: f64,
    /// Kick intensity (W/m²).
    pub i_kick: f64,
    /// Laser detuning from the f=3 → f'=4 transition (rad/s).
    pub detuning_34: f64,
    pub polarization: [f64; 3],
    pub propagation: [f64; 3],
    pub kicks_enabled: bool,
    /// Shift the f=4 detunings by the ground hyperfine splitting. Off by
    /// default: each manifold is detuned relative to its own transitions.
    pub ground_splitting_in_detuning: bool,
}

impl Default for PulseSchedule {
    fn default() -> Self {
        PulseSchedule {
            period_tau: 1e-3,
            pulse_duration: 2e-6,
            i_kick: units::mw_cm2_to_w_m2(0.1),
            detuning_34: units::mhz_to_rad_s(-584.0),
            polarization: [1.0, 0.0, 0.0],
            propagation: [0.0, 0.0, 1.0],
            kicks_enabled: true,
            ground_splitting_in_detuning: false,
        }
    }
}

impl PulseSchedule {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let invalid = |msg: String| Err(DynamicsError::InvalidParameter(msg));
        if !(self.period_tau > 0.0 && self.pulse_duration > 0.0 && self.pulse_duration < self.period_tau) {
            return invalid(format!(
                "pulse duration {:e} s must lie strictly inside the period {:e} s",
                self.pulse_duration, self.period_tau
            ));
        }
        if !(self.i_kick >= 0.0) {
            return invalid("kick intensity must be non-negative".into());
        }
        let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm(&self.polarization) - 1.0).abs() > 1e-9 || (norm(&self.propagation) - 1.0).abs() > 1e-9 {
            return invalid("polarization and propagation must be unit vectors".into());
        }
        let dot: f64 = self.polarization.iter().zip(&self.propagation).map(|(a, b)| a * b).sum();
        if dot.abs() > 1e-9 {
            return invalid("polarization must be orthogonal to propagation".into());
        }
        Ok(())
    }

    /// Start of the pulse window within a period, measured from the period start.
    pub fn pulse_start(&self) -> f64 {
        self.period_tau - self.pulse_duration
    }

    /// Detuning Δ_{ff'} (rad/s) for ground f and excited f', both in {3, 4}.
    pub fn detuning(&self, f: i32, f_prime: i32, consts: &PhysicalConstants) -> f64 {
        let mut d = self.detuning_34;
        if f_prime == 3 {
            // 3→3' lies one excited splitting below 3→4'
            d += consts.hyperfine_splitting_excited;
        }
        if f == 4 && self.ground_splitting_in_detuning {
            d += consts.hyperfine_splitting_ground;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn larmor_linear_in_field() {
        let c = PhysicalConstants::cesium();
        assert_eq!(larmor_frequency(0.0, 0.25, &c), 0.0);
        let a = larmor_frequency(4e-14, 0.25, &c);
        let b = larmor_frequency(8e-14, 0.25, &c);
        assert!((b - 2.0 * a).abs() < 1e-18);
    }

    #[test]
    fn default_larmor_is_reference_value() {
        let c = PhysicalConstants::cesium();
        let p = MagnetometerParams::default();
        assert!((p.omega_larmor(&c) - 4.4e-4).abs() < 1e-16);
        assert!((p.with_b_field(8e-14).omega_larmor(&c) - 8.8e-4).abs() < 1e-16);
    }

    #[test]
    fn rabi_values() {
        let c = PhysicalConstants::cesium();
        assert_eq!(rabi_frequency(0.0, &c), 0.0);
        assert!((rabi_frequency(2.0 * c.i_sat, &c) - c.gamma_nat).abs() < 1e-6);
        let r = rabi_frequency(units::mw_cm2_to_w_m2(0.1), &c) / c.gamma_nat;
        assert!((r - 0.02f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn doppler_sigma_conversion() {
        let p = MagnetometerParams::default();
        let sigma_mhz = units::rad_s_to_mhz(p.doppler_sigma());
        assert!((sigma_mhz - 151.6).abs() < 0.05, "{sigma_mhz}");
    }

    #[test]
    fn detuning_layout() {
        let c = PhysicalConstants::cesium();
        let s = PulseSchedule::default();
        assert!((units::rad_s_to_mhz(s.detuning(3, 4, &c)) + 584.0).abs() < 1e-9);
        assert!((units::rad_s_to_mhz(s.detuning(3, 3, &c)) - 583.0).abs() < 1e-9);
        assert_eq!(s.detuning(4, 4, &c), s.detuning(3, 4, &c));
    }

    #[test]
    fn schedule_validation() {
        let mut s = PulseSchedule::default();
        s.validate().unwrap();
        s.pulse_duration = 2e-3;
        assert!(s.validate().is_err());
        let mut s = PulseSchedule::default();
        s.polarization = [0.0, 0.0, 1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn serf_condition_holds_by_default() {
        let c = PhysicalConstants::cesium();
        let p = MagnetometerParams::default();
        assert!(p.serf_ratio(&c) > 1e3);
        assert!(p.validate(&PulseSchedule::default()).unwrap().is_empty());
    }
}
