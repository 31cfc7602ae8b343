//! Dense reference implementation of the SERF master equation.
//!
//! Everything here works on plain 16×16 matrices and favors clarity; the
//! integrator in [`super::propagator`] evaluates the same generator with
//! sparse operators and precomputed superoperators.

use nalgebra::DMatrix;

use super::doppler::DopplerGrid;
use super::params::{rabi_frequency, MagnetometerParams, PhysicalConstants, PulseSchedule};
use super::DynamicsError;
use crate::angular::{
    c2_coeff, contract_raising, coupled_space, dipole_raising, CoupledSpace, HalfInt, C64,
    EXCITED_MANIFOLDS, GROUND_MANIFOLDS,
};
use crate::state::{hermiticity_error, DensityMatrix};

pub const DIM: usize = 16;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

const I: C64 = C64::new(0.0, 1.0);

/// Jump operators W_q^{f_b f_a}, indexed `[q + 1][f_b][f_a]` with manifold
/// index 0 for f = 3 and 1 for f = 4. Each is a 16×16 matrix whose only
/// non-zero block maps manifold f_a to manifold f_b.
#[derive(Clone, Debug)]
pub struct JumpOperators {
    pub ops: [[[DMatrix<C64>; 2]; 2]; 3],
}

impl JumpOperators {
    pub fn get(&self, q: i32, f_b: usize, f_a: usize) -> &DMatrix<C64> {
        &self.ops[(q + 1) as usize][f_b][f_a]
    }

    pub fn max_norm(&self) -> f64 {
        self.ops
            .iter()
            .flatten()
            .flatten()
            .map(|m| m.norm())
            .fold(0.0, f64::max)
    }
}

/// Single cesium atom in a kicked SERF magnetometer.
#[derive(Clone, Debug)]
pub struct SerfModel {
    pub consts: PhysicalConstants,
    pub params: MagnetometerParams,
    pub schedule: PulseSchedule,
    pub space: CoupledSpace,
    pub grid: DopplerGrid,
    omega_rabi: f64,
    /// P_f (ε·F)² P_f for f = 3, 4.
    quad: [DMatrix<C64>; 2],
    /// C^(2)_{j'f'f}, indexed [f][f'].
    c2: [[f64; 2]; 2],
    /// (e_q*·D_{f_b f'})(ε·D†_{f_a f'}) embedded in 16×16, indexed [q+1][f_b][f_a][f'].
    jump_parts: Vec<DMatrix<C64>>,
    larmor: DMatrix<C64>,
}

fn manifold_index(f: HalfInt) -> usize {
    GROUND_MANIFOLDS.iter().position(|&g| g == f).expect("cesium ground manifold")
}

impl SerfModel {
    pub fn new(
        consts: PhysicalConstants,
        params: MagnetometerParams,
        schedule: PulseSchedule,
    ) -> Result<Self, DynamicsError> {
        params.validate(&schedule)?;
        let space = coupled_space();
        let grid = DopplerGrid::new(params.doppler_fwhm, params.doppler_points, params.doppler_sigma_cut)?;
        let omega_rabi = rabi_frequency(schedule.i_kick, &consts);

        let eps: [C64; 3] = schedule.polarization.map(c);
        let eps_f = &space.f[0] * eps[0] + &space.f[1] * eps[1] + &space.f[2] * eps[2];
        let eps_f2 = &eps_f * &eps_f;
        let quad = GROUND_MANIFOLDS.map(|f| {
            let p = space.projector(f);
            &p * &eps_f2 * &p
        });

        let mut c2 = [[0.0; 2]; 2];
        for (fi, &f) in GROUND_MANIFOLDS.iter().enumerate() {
            for (pi, &fp) in EXCITED_MANIFOLDS.iter().enumerate() {
                c2[fi][pi] = c2_coeff(fp, f)?;
            }
        }

        // dipole raising components and their ε contraction for every (f, f')
        let mut raise = Vec::new();
        let mut raise_eps = Vec::new();
        for &f in &GROUND_MANIFOLDS {
            for &fp in &EXCITED_MANIFOLDS {
                let comps = dipole_raising(f, fp)?;
                raise_eps.push(contract_raising(&eps, &comps));
                raise.push(comps);
            }
        }
        let mut jump_parts = Vec::with_capacity(3 * 2 * 2 * 2);
        for q in 0..3 {
            for (fb_i, &fb) in GROUND_MANIFOLDS.iter().enumerate() {
                for (fa_i, &fa) in GROUND_MANIFOLDS.iter().enumerate() {
                    for fp_i in 0..EXCITED_MANIFOLDS.len() {
                        // e_q*·D_{f_b f'} is the adjoint of the q-th raising component
                        let lower = raise[fb_i * 2 + fp_i][q].transpose().map(c);
                        let block = lower * &raise_eps[fa_i * 2 + fp_i];
                        let mut full = DMatrix::<C64>::zeros(DIM, DIM);
                        let (rb, ra) = (space.block(fb), space.block(fa));
                        full.view_mut((rb.start, ra.start), (rb.len(), ra.len())).copy_from(&block);
                        jump_parts.push(full);
                    }
                }
            }
        }

        let omegas = params.manifold_larmor(&consts);
        let larmor = GROUND_MANIFOLDS
            .iter()
            .zip(omegas)
            .map(|(&f, w)| {
                let p = space.projector(f);
                &p * &space.f[1] * &p * c(w)
            })
            .fold(DMatrix::<C64>::zeros(DIM, DIM), |a, b| a + b);

        Ok(SerfModel {
            consts,
            params,
            schedule,
            space,
            grid,
            omega_rabi,
            quad,
            c2,
            jump_parts,
            larmor,
        })
    }

    /// Model with the default cesium configuration.
    pub fn cesium_default() -> Self {
        Self::new(
            PhysicalConstants::cesium(),
            MagnetometerParams::default(),
            PulseSchedule::default(),
        )
        .expect("default configuration is valid")
    }

    pub fn omega_rabi(&self) -> f64 {
        self.omega_rabi
    }

    pub fn omega_larmor(&self) -> f64 {
        self.params.omega_larmor(&self.consts)
    }

    /// Ω_Lar F_y (per-manifold signs when configured).
    pub fn larmor_hamiltonian(&self) -> &DMatrix<C64> {
        &self.larmor
    }

    /// C^(2) coefficient table, indexed [f][f'].
    pub fn c2_table(&self) -> [[f64; 2]; 2] {
        self.c2
    }

    /// Complex detuning Δ_{ff'} + shift + iγ/2.
    fn complex_detuning(&self, f_idx: usize, fp_idx: usize, doppler_shift: f64) -> C64 {
        let f = GROUND_MANIFOLDS[f_idx].twice() / 2;
        let fp = EXCITED_MANIFOLDS[fp_idx].twice() / 2;
        let d = self.schedule.detuning(f, fp, &self.consts) + doppler_shift;
        C64::new(d, self.consts.gamma_nat / 2.0)
    }

    /// Light-shift part of the effective Hamiltonian (rad/s), without Larmor precession.
    pub fn light_hamiltonian(&self, doppler_shift: f64) -> DMatrix<C64> {
        let om2 = self.omega_rabi * self.omega_rabi;
        let mut h = DMatrix::<C64>::zeros(DIM, DIM);
        if om2 == 0.0 {
            return h;
        }
        for fi in 0..2 {
            let coeff: C64 = (0..2)
                .map(|pi| c(om2 * self.c2[fi][pi]) / (self.complex_detuning(fi, pi, doppler_shift) * 4.0))
                .sum();
            h += &self.quad[fi] * coeff;
        }
        h
    }

    /// H_eff/ħ: Larmor precession plus, with the laser on, the complex rank-2 light shift.
    pub fn effective_hamiltonian(&self, laser_on: bool, doppler_shift: f64) -> DMatrix<C64> {
        if laser_on {
            &self.larmor + self.light_hamiltonian(doppler_shift)
        } else {
            self.larmor.clone()
        }
    }

    pub fn jump_operators(&self, doppler_shift: f64) -> JumpOperators {
        let half_rabi = self.omega_rabi / 2.0;
        let build = |q: usize, fb: usize, fa: usize| {
            let mut w = DMatrix::<C64>::zeros(DIM, DIM);
            if half_rabi == 0.0 {
                return w;
            }
            for fp in 0..2 {
                let coeff = c(half_rabi) / self.complex_detuning(fa, fp, doppler_shift);
                w += &self.jump_parts[((q * 2 + fb) * 2 + fa) * 2 + fp] * coeff;
            }
            w
        };
        let ops = [0, 1, 2].map(|q| [0, 1].map(|fb| [0, 1].map(|fa| build(q, fb, fa))));
        JumpOperators { ops }
    }

    /// ⟨S⟩ = tr(Sρ)
    pub fn electron_spin(&self, rho: &DMatrix<C64>) -> [f64; 3] {
        [0, 1, 2].map(|i| (&self.space.s[i] * rho).trace().re)
    }

    /// φ = ρ/4 + Σ_i S_i ρ S_i
    pub fn nuclear_part(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut phi = rho * c(0.25);
        for s in &self.space.s {
            phi += s * rho * s;
        }
        phi
    }

    /// All laser-independent terms of dρ/dt.
    pub fn laser_off_rhs(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let p = &self.params;
        let phi = self.nuclear_part(rho);
        let s = self.electron_spin(rho);
        let s_dot = (0..3).fold(DMatrix::<C64>::zeros(DIM, DIM), |acc, i| acc + &self.space.s[i] * c(s[i]));
        let a = DMatrix::<C64>::identity(DIM, DIM) + s_dot * c(4.0);
        let exchange = if p.symmetrize_spin_exchange {
            (&phi * &a + &a * &phi) * c(0.5)
        } else {
            &phi * &a
        };
        let mut out = (exchange - rho) * c(p.r_se) + (&phi - rho) * c(p.r_sd);
        if p.hyperfine_enabled {
            let ks = &self.space.k_dot_s;
            out += (ks * rho - rho * ks) * (-I * self.consts.a_hf);
        }
        out += (&self.larmor * rho - rho * &self.larmor) * (-I);
        out
    }

    /// Light-induced terms of dρ/dt at one Doppler shift.
    pub fn light_rhs(&self, rho: &DMatrix<C64>, doppler_shift: f64) -> DMatrix<C64> {
        let h = self.light_hamiltonian(doppler_shift);
        let mut out = (&h * rho - rho * h.adjoint()) * (-I);
        let jumps = self.jump_operators(doppler_shift);
        let mut feed = DMatrix::<C64>::zeros(DIM, DIM);
        for q in 0..3 {
            for fb in 0..2 {
                for fa in 0..2 {
                    let w = &jumps.ops[q][fb][fa];
                    feed += w * rho * w.adjoint();
                }
            }
            for f1 in 0..2 {
                for f2 in 0..2 {
                    if f1 != f2 {
                        feed += &jumps.ops[q][f2][f2] * rho * jumps.ops[q][f1][f1].adjoint();
                    }
                }
            }
        }
        out += feed * c(self.consts.gamma_nat);
        out
    }

    /// dρ/dt for a single Doppler class.
    pub fn master_rhs(&self, rho: &DMatrix<C64>, laser_on: bool, doppler_shift: f64) -> DMatrix<C64> {
        let mut out = self.laser_off_rhs(rho);
        if laser_on {
            out += self.light_rhs(rho, doppler_shift);
        }
        out
    }

    /// dρ/dt averaged over the Doppler grid; laser-independent terms are evaluated once.
    pub fn averaged_master_rhs(&self, rho: &DMatrix<C64>, laser_on: bool) -> DMatrix<C64> {
        let mut out = self.laser_off_rhs(rho);
        if laser_on {
            for (shift, w) in self.grid.iter() {
                out += self.light_rhs(rho, shift) * c(w);
            }
        }
        out
    }

    /// One explicit Euler step followed by coherence zeroing and the
    /// configured Hermitization and trace renormalization.
    pub fn euler_step(
        &self,
        rho: &DensityMatrix,
        dt: f64,
        laser_on: bool,
    ) -> Result<(DensityMatrix, StepReport), DynamicsError> {
        if !(dt > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!("time step {dt} must be positive")));
        }
        let m = rho.matrix();
        let next = m + self.averaged_master_rhs(m, laser_on) * c(dt);
        let mut next = zero_hyperfine_coherences_matrix(&next, &self.space);
        let mut report = StepReport {
            hermiticity_drift: hermiticity_error(&next),
            ..StepReport::default()
        };
        if self.params.hermitize_each_step {
            next = (&next + next.adjoint()) * c(0.5);
        }
        let tr = next.trace().re;
        report.trace_drift = (tr - 1.0).abs();
        if self.params.renormalize_trace && report.trace_drift > super::RENORMALIZE_THRESHOLD {
            next /= c(tr);
            report.trace_correction = report.trace_drift;
        }
        let state = DensityMatrix::new_unchecked(next);
        let min = state.min_eigenvalue();
        report.min_eigenvalue = min;
        if min < -crate::state::POSITIVITY_TOL {
            return Err(DynamicsError::PositivityViolation { time: f64::NAN, min_eigenvalue: min });
        }
        Ok((state, report))
    }

    /// Spin-temperature state exp(βK_z)exp(βS_z)/(Z_K Z_S), β = ln((1+q)/(1-q)).
    pub fn thermal_state(&self, q: f64) -> Result<DensityMatrix, DynamicsError> {
        thermal_state(&self.space, q)
    }

    /// Dimensionless kicked-top strength of one pulse acting on the f = 3 manifold.
    pub fn effective_kick_strength(&self) -> f64 {
        let om2 = self.omega_rabi * self.omega_rabi;
        let chi: f64 = (0..2)
            .map(|pi| {
                let f = GROUND_MANIFOLDS[0].twice() / 2;
                let fp = EXCITED_MANIFOLDS[pi].twice() / 2;
                om2 * self.c2[0][pi] / (4.0 * self.schedule.detuning(f, fp, &self.consts))
            })
            .sum();
        let f3 = GROUND_MANIFOLDS[0];
        chi.abs() * self.schedule.pulse_duration * f3.multiplicity() as f64
    }

    pub fn manifold_index(&self, f: HalfInt) -> usize {
        manifold_index(f)
    }
}

/// Diagnostics of a single Euler step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    /// |tr ρ' - 1| before renormalization.
    pub trace_drift: f64,
    /// Max |ρ' - ρ'†| before Hermitization.
    pub hermiticity_drift: f64,
    /// Trace deviation removed by renormalization (0 if none).
    pub trace_correction: f64,
    pub min_eigenvalue: f64,
}

/// Sets the f=3 ↔ f=4 coherence blocks to zero.
pub fn zero_hyperfine_coherences(rho: &DensityMatrix, space: &CoupledSpace) -> DensityMatrix {
    DensityMatrix::new_unchecked(zero_hyperfine_coherences_matrix(rho.matrix(), space))
}

pub fn zero_hyperfine_coherences_matrix(m: &DMatrix<C64>, space: &CoupledSpace) -> DMatrix<C64> {
    let mut out = m.clone();
    let b3 = space.block(GROUND_MANIFOLDS[0]);
    let b4 = space.block(GROUND_MANIFOLDS[1]);
    for i in b3.clone() {
        for j in b4.clone() {
            out[(i, j)] = c(0.0);
            out[(j, i)] = c(0.0);
        }
    }
    out
}

/// Spin-temperature state polarized along ẑ, in the coupled basis.
pub fn thermal_state(space: &CoupledSpace, q: f64) -> Result<DensityMatrix, DynamicsError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(DynamicsError::InvalidParameter(format!("polarization q = {q} outside [0, 1]")));
    }
    let weights = |j: HalfInt| -> Vec<f64> {
        let ms: Vec<f64> = j.projections_desc().map(HalfInt::value).collect();
        let top = ms[0];
        let raw: Vec<f64> = if q == 1.0 {
            ms.iter().map(|&m| if m == top { 1.0 } else { 0.0 }).collect()
        } else {
            let beta = ((1.0 + q) / (1.0 - q)).ln();
            ms.iter().map(|&m| (beta * (m - top)).exp()).collect()
        };
        let z: f64 = raw.iter().sum();
        raw.iter().map(|r| r / z).collect()
    };
    let wk = weights(space.nuclear);
    let ws = weights(space.electron);
    let ns = ws.len();
    let product = DMatrix::<C64>::from_fn(DIM, DIM, |i, j| {
        if i == j {
            c(wk[i / ns] * ws[i % ns])
        } else {
            c(0.0)
        }
    });
    let coupled = space.to_coupled(&product);
    let coupled = (&coupled + coupled.adjoint()) * c(0.5);
    Ok(DensityMatrix::new_unchecked(coupled))
}
