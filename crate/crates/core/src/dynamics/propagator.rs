//! Fast time stepping of the master equation.
//!
//! Free precession uses explicit Euler with sparse spin operators on
//! stack-allocated 16×16 matrices. Light pulses act on the 130 entries of the
//! two hyperfine diagonal blocks, either as literal Euler substeps or as one
//! precomputed map per pulse (see [`PulseIntegration`]).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SMatrix};

use super::model::{SerfModel, DIM};
use super::params::PulseIntegration;
use super::DynamicsError;
use crate::angular::{C64, GROUND_MANIFOLDS};
use crate::metrology::StateTrajectory;
use crate::state::{DensityMatrix, POSITIVITY_TOL};

pub type Mat16 = SMatrix<C64, DIM, DIM>;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn to_mat16(m: &DMatrix<C64>) -> Mat16 {
    Mat16::from_fn(|i, j| m[(i, j)])
}

pub fn to_dmatrix(m: &Mat16) -> DMatrix<C64> {
    DMatrix::from_fn(DIM, DIM, |i, j| m[(i, j)])
}

/// Non-zero entries of a 16×16 operator.
#[derive(Clone, Debug, Default)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != ZERO {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        SparseOp { entries }
    }

    /// out += a · (A x)
    fn left_acc(&self, x: &Mat16, a: C64, out: &mut Mat16) {
        for &(r, c, v) in &self.entries {
            let v = v * a;
            for j in 0..DIM {
                out[(r, j)] += v * x[(c, j)];
            }
        }
    }

    /// out += a · (x A)
    fn right_acc(&self, x: &Mat16, a: C64, out: &mut Mat16) {
        for &(r, c, v) in &self.entries {
            let v = v * a;
            for i in 0..DIM {
                out[(i, c)] += x[(i, r)] * v;
            }
        }
    }

    /// tr(A x)
    fn trace_with(&self, x: &Mat16) -> C64 {
        self.entries.iter().map(|&(r, c, v)| v * x[(c, r)]).sum()
    }
}

/// The laser-independent generator on 16×16 matrices.
#[derive(Clone, Debug)]
struct FreeGenerator {
    s: [SparseOp; 3],
    larmor: SparseOp,
    ks: [f64; DIM],
    r_se: f64,
    r_sd: f64,
    a_hf: f64,
    symmetrize: bool,
}

impl FreeGenerator {
    fn new(model: &SerfModel) -> Self {
        let p = &model.params;
        let mut ks = [0.0; DIM];
        for (i, k) in ks.iter_mut().enumerate() {
            *k = model.space.k_dot_s[(i, i)].re;
        }
        FreeGenerator {
            s: [0, 1, 2].map(|i| SparseOp::from_dense(&model.space.s[i])),
            larmor: SparseOp::from_dense(model.larmor_hamiltonian()),
            ks,
            r_se: p.r_se,
            r_sd: p.r_sd,
            a_hf: if p.hyperfine_enabled { model.consts.a_hf } else { 0.0 },
            symmetrize: p.symmetrize_spin_exchange,
        }
    }

    fn phi(&self, rho: &Mat16) -> Mat16 {
        let mut phi = rho * re(0.25);
        let mut tmp = Mat16::zeros();
        for s in &self.s {
            tmp.fill(ZERO);
            s.left_acc(rho, re(1.0), &mut tmp);
            s.right_acc(&tmp, re(1.0), &mut phi);
        }
        phi
    }

    fn spin(&self, rho: &Mat16) -> [f64; 3] {
        [0, 1, 2].map(|i| self.s[i].trace_with(rho).re)
    }

    /// Linear part: (R_se + R_sd)(φ - ρ) plus hyperfine and Larmor commutators.
    fn linear(&self, rho: &Mat16, phi: &Mat16, out: &mut Mat16) {
        let rate = self.r_se + self.r_sd;
        *out = (phi - rho) * re(rate);
        if self.a_hf != 0.0 {
            for j in 0..DIM {
                for i in 0..DIM {
                    let d = self.ks[i] - self.ks[j];
                    if d != 0.0 {
                        out[(i, j)] += -I * self.a_hf * d * rho[(i, j)];
                    }
                }
            }
        }
        self.larmor.left_acc(rho, -I, out);
        self.larmor.right_acc(rho, I, out);
    }

    /// Spin-exchange part that depends on ⟨S⟩.
    fn nonlinear(&self, rho: &Mat16, phi: &Mat16, out: &mut Mat16) {
        let s = self.spin(rho);
        for (op, &si) in self.s.iter().zip(&s) {
            if si == 0.0 {
                continue;
            }
            if self.symmetrize {
                let a = re(2.0 * self.r_se * si);
                op.right_acc(phi, a, out);
                op.left_acc(phi, a, out);
            } else {
                op.right_acc(phi, re(4.0 * self.r_se * si), out);
            }
        }
    }

    fn rhs(&self, rho: &Mat16, out: &mut Mat16) {
        let phi = self.phi(rho);
        self.linear(rho, &phi, out);
        self.nonlinear(rho, &phi, out);
    }
}

/// Index map between 16×16 matrices and the 130 entries of the f = 3 and f = 4
/// diagonal blocks (column-major within each block).
#[derive(Clone, Debug)]
struct BlockIndex {
    pairs: Vec<(usize, usize)>,
    diag: Vec<usize>,
}

impl BlockIndex {
    fn new(model: &SerfModel) -> Self {
        let mut pairs = Vec::new();
        let mut diag = Vec::new();
        for f in GROUND_MANIFOLDS {
            let b = model.space.block(f);
            for j in b.clone() {
                for i in b.clone() {
                    if i == j {
                        diag.push(pairs.len());
                    }
                    pairs.push((i, j));
                }
            }
        }
        BlockIndex { pairs, diag }
    }

    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn gather(&self, m: &Mat16) -> DVector<C64> {
        DVector::from_iterator(self.len(), self.pairs.iter().map(|&(i, j)| m[(i, j)]))
    }

    fn scatter(&self, v: &DVector<C64>) -> Mat16 {
        let mut m = Mat16::zeros();
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            m[(i, j)] = v[k];
        }
        m
    }

    fn unit(&self, k: usize) -> Mat16 {
        let mut m = Mat16::zeros();
        let (i, j) = self.pairs[k];
        m[(i, j)] = re(1.0);
        m
    }

    /// Builds the matrix of a linear map restricted to the block entries.
    fn superoperator(&self, mut apply: impl FnMut(&Mat16) -> Mat16) -> DMatrix<C64> {
        let n = self.len();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for k in 0..n {
            let col = self.gather(&apply(&self.unit(k)));
            out.set_column(k, &col);
        }
        out
    }
}

/// Doppler-averaged light generator on the block entries. It does not depend
/// on the magnetic field, so one instance serves a whole field scan.
#[derive(Clone, Debug)]
pub struct LightSuperoperator {
    matrix: DMatrix<C64>,
}

impl LightSuperoperator {
    pub fn new(model: &SerfModel) -> Self {
        let index = BlockIndex::new(model);
        let n = index.len();
        let mut matrix = DMatrix::<C64>::zeros(n, n);
        for (shift, w) in model.grid.iter() {
            let h = model.light_hamiltonian(shift);
            let ha = h.adjoint();
            let jumps = model.jump_operators(shift);
            let gamma = re(model.consts.gamma_nat);
            let part = index.superoperator(|e| {
                let e = to_dmatrix(e);
                let mut out = (&h * &e - &e * &ha) * (-I);
                let mut feed = DMatrix::<C64>::zeros(DIM, DIM);
                for q in 0..3 {
                    for fb in 0..2 {
                        for fa in 0..2 {
                            let w = &jumps.ops[q][fb][fa];
                            feed += w * &e * w.adjoint();
                        }
                    }
                    feed += &jumps.ops[q][1][1] * &e * jumps.ops[q][0][0].adjoint();
                    feed += &jumps.ops[q][0][0] * &e * jumps.ops[q][1][1].adjoint();
                }
                out += feed * gamma;
                to_mat16(&out)
            });
            matrix += part * re(w);
        }
        LightSuperoperator { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

/// Precomputed pulse map ρ ↦ Eⁿρ + h G N(ρ) with E = I + h L_lin and G = Σ_{k<n} E^k.
#[derive(Clone, Debug)]
struct ComposedPulse {
    power: DMatrix<C64>,
    sum: DMatrix<C64>,
    h: f64,
    /// Row functional giving tr(L_lin v).
    trace_row: DVector<C64>,
}

impl ComposedPulse {
    fn new(lin: &DMatrix<C64>, index: &BlockIndex, h: f64, n: usize) -> Self {
        let dim = lin.nrows();
        let id = DMatrix::<C64>::identity(dim, dim);
        let e = &id + lin * re(h);
        let mut power = id.clone();
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        for bit in (0..usize::BITS - n.leading_zeros()).rev() {
            sum = &sum + &power * &sum;
            power = &power * &power;
            if (n >> bit) & 1 == 1 {
                sum = &id + &e * &sum;
                power = &e * &power;
            }
        }
        let trace_row = DVector::from_fn(dim, |k, _| index.diag.iter().map(|&d| lin[(d, k)]).sum());
        ComposedPulse { power, sum, h, trace_row }
    }
}

/// Running diagnostics of an integration.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunStats {
    /// Largest |tr ρ - 1| produced by a single step before renormalization.
    pub max_trace_drift: f64,
    /// Sum of all trace corrections applied by renormalization.
    pub cumulative_trace_correction: f64,
    /// Largest |ρ - ρ†| produced by a single step before Hermitization.
    pub max_hermiticity_drift: f64,
    /// Smallest eigenvalue seen at the positivity checkpoints.
    pub min_eigenvalue: f64,
    pub free_steps: u64,
    pub pulse_steps: u64,
    pub periods: u64,
}

impl Default for RunStats {
    fn default() -> Self {
        RunStats {
            max_trace_drift: 0.0,
            cumulative_trace_correction: 0.0,
            max_hermiticity_drift: 0.0,
            min_eigenvalue: f64::INFINITY,
            free_steps: 0,
            pulse_steps: 0,
            periods: 0,
        }
    }
}

/// One diagnostic log line.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiagnosticLine {
    pub time: f64,
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
    pub spin: [f64; 3],
    pub total_spin: [f64; 3],
}

impl std::fmt::Display for DiagnosticLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "t={:.6e} drift={:.3e} min_eig={:.3e} S=({:.6e},{:.6e},{:.6e}) F=({:.6e},{:.6e},{:.6e})",
            self.time,
            self.trace_drift,
            self.min_eigenvalue,
            self.spin[0],
            self.spin[1],
            self.spin[2],
            self.total_spin[0],
            self.total_spin[1],
            self.total_spin[2]
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub total_time: f64,
    /// Record a snapshot every this many periods.
    pub snapshot_stride: usize,
    /// Emit a diagnostic line every this many periods (0 disables).
    pub diagnostic_stride: usize,
    /// Compute the minimum eigenvalue at every snapshot and abort if it falls
    /// below the positivity tolerance.
    pub check_positivity: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            total_time: 300.0,
            snapshot_stride: 500,
            diagnostic_stride: 0,
            check_positivity: true,
        }
    }
}

/// Result of [`Propagator::evolve`].
#[derive(Clone, Debug)]
pub struct Evolution {
    pub trajectory: StateTrajectory,
    pub stats: RunStats,
    pub diagnostics: Vec<DiagnosticLine>,
}

/// Advances density matrices period by period.
#[derive(Clone, Debug)]
pub struct Propagator {
    free: FreeGenerator,
    index: BlockIndex,
    light: Option<Arc<LightSuperoperator>>,
    composed: Option<ComposedPulse>,
    mode: PulseIntegration,
    kicks: bool,
    period: f64,
    free_steps: usize,
    free_dt: f64,
    pulse_steps: usize,
    pulse_dt: f64,
    hermitize: bool,
    renormalize: bool,
    f_ops: [SparseOp; 3],
}

impl Propagator {
    pub fn new(model: &SerfModel) -> Self {
        let light = model.schedule.kicks_enabled.then(|| Arc::new(LightSuperoperator::new(model)));
        Self::build(model, light)
    }

    /// Reuses a light superoperator built for a model with identical laser settings.
    pub fn with_light(model: &SerfModel, light: Arc<LightSuperoperator>) -> Self {
        Self::build(model, model.schedule.kicks_enabled.then_some(light))
    }

    fn build(model: &SerfModel, light: Option<Arc<LightSuperoperator>>) -> Self {
        let p = &model.params;
        let s = &model.schedule;
        let kicks = s.kicks_enabled;
        let free_window = if kicks { s.pulse_start() } else { s.period_tau };
        // tolerate round-off in window/dt so an exact multiple is not split into one extra step
        let free_steps = ((free_window / p.dt_free * (1.0 - 1e-12)).ceil() as usize).max(1);
        let pulse_steps = ((s.pulse_duration / p.dt_pulse).round() as usize).max(1);
        let free = FreeGenerator::new(model);
        let index = BlockIndex::new(model);
        let pulse_dt = s.pulse_duration / pulse_steps as f64;
        let composed = match (&light, p.pulse_integration) {
            (Some(l), PulseIntegration::Composed) => {
                let off = index.superoperator(|e| {
                    let mut out = Mat16::zeros();
                    free.linear(e, &free.phi(e), &mut out);
                    out
                });
                Some(ComposedPulse::new(&(l.matrix() + off), &index, pulse_dt, pulse_steps))
            }
            _ => None,
        };
        Propagator {
            index,
            light,
            composed,
            mode: p.pulse_integration,
            kicks,
            period: s.period_tau,
            free_steps,
            free_dt: free_window / free_steps as f64,
            pulse_steps,
            pulse_dt,
            hermitize: p.hermitize_each_step,
            renormalize: p.renormalize_trace,
            f_ops: [0, 1, 2].map(|i| SparseOp::from_dense(&model.space.f[i])),
            free,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn light(&self) -> Option<&Arc<LightSuperoperator>> {
        self.light.as_ref()
    }

    fn finish_step(&self, rho: &mut Mat16, stats: &mut RunStats) {
        // hyperfine coherences are dropped after every step
        let b3 = 0..GROUND_MANIFOLDS[0].multiplicity();
        for i in b3.clone() {
            for j in b3.end..DIM {
                rho[(i, j)] = ZERO;
                rho[(j, i)] = ZERO;
            }
        }
        let mut herm = 0.0f64;
        for i in 0..DIM {
            for j in i..DIM {
                herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
            }
        }
        stats.max_hermiticity_drift = stats.max_hermiticity_drift.max(herm);
        if self.hermitize {
            *rho = (*rho + rho.adjoint()) * re(0.5);
        }
        let tr = rho.trace().re;
        let drift = (tr - 1.0).abs();
        stats.max_trace_drift = stats.max_trace_drift.max(drift);
        if self.renormalize && drift > super::RENORMALIZE_THRESHOLD {
            *rho /= re(tr);
            stats.cumulative_trace_correction += drift;
        }
    }

    fn free_step(&self, rho: &mut Mat16, dt: f64, stats: &mut RunStats) {
        let mut d = Mat16::zeros();
        self.free.rhs(rho, &mut d);
        *rho += d * re(dt);
        stats.free_steps += 1;
        self.finish_step(rho, stats);
    }

    fn pulse(&self, rho: &mut Mat16, stats: &mut RunStats) {
        let light = self.light.as_ref().expect("pulse requires a light generator");
        match (&self.composed, self.mode) {
            (Some(c), PulseIntegration::Composed) => {
                let v0 = self.index.gather(rho);
                let phi = self.free.phi(rho);
                let mut nl = Mat16::zeros();
                self.free.nonlinear(rho, &phi, &mut nl);
                let n0 = self.index.gather(&nl);
                let v = &c.power * &v0 + &c.sum * (n0 * re(c.h));
                // trace change of the first substep, equal to that of a single Euler step
                let first = (c.trace_row.transpose() * &v0)[(0, 0)] * c.h;
                let mut stats_local = RunStats::default();
                *rho = self.index.scatter(&v);
                stats.pulse_steps += self.pulse_steps as u64;
                self.finish_step(rho, &mut stats_local);
                stats.max_trace_drift = stats.max_trace_drift.max(first.norm());
                stats.max_hermiticity_drift = stats.max_hermiticity_drift.max(stats_local.max_hermiticity_drift);
                stats.cumulative_trace_correction += stats_local.cumulative_trace_correction;
            }
            _ => {
                for _ in 0..self.pulse_steps {
                    let v = self.index.gather(rho);
                    let dl = self.index.scatter(&(light.matrix() * v));
                    let mut d = Mat16::zeros();
                    self.free.rhs(rho, &mut d);
                    *rho += (d + dl) * re(self.pulse_dt);
                    stats.pulse_steps += 1;
                    self.finish_step(rho, stats);
                }
            }
        }
    }

    /// Advances `rho` by one kick period: free precession, then the pulse.
    pub fn step_period(&self, rho: &mut Mat16, stats: &mut RunStats) {
        for _ in 0..self.free_steps {
            self.free_step(rho, self.free_dt, stats);
        }
        if self.kicks {
            self.pulse(rho, stats);
        }
        stats.periods += 1;
    }

    fn diagnostic(&self, time: f64, rho: &Mat16, drift: f64, min_eig: f64) -> DiagnosticLine {
        DiagnosticLine {
            time,
            trace_drift: drift,
            min_eigenvalue: min_eig,
            spin: self.free.spin(rho),
            total_spin: [0, 1, 2].map(|i| self.f_ops[i].trace_with(rho).re),
        }
    }

    /// Integrates from `rho0` over `opts.total_time`, recording snapshots at
    /// whole periods.
    pub fn evolve(&self, rho0: &DensityMatrix, opts: &EvolveOptions) -> Result<Evolution, DynamicsError> {
        rho0.check_dim(DIM)?;
        if !(opts.total_time > 0.0 && opts.total_time.is_finite()) {
            return Err(DynamicsError::InvalidParameter(format!(
                "total_time {} must be positive",
                opts.total_time
            )));
        }
        if opts.snapshot_stride == 0 {
            return Err(DynamicsError::InvalidParameter("snapshot_stride must be at least 1".into()));
        }
        let periods = (opts.total_time / self.period).round().max(1.0) as u64;
        let stride = opts.snapshot_stride as u64;
        let mut rho = to_mat16(rho0.matrix());
        let mut stats = RunStats::default();
        let mut times = vec![0.0];
        let mut states = vec![rho0.clone()];
        let mut diagnostics = Vec::new();
        for n in 1..=periods {
            self.step_period(&mut rho, &mut stats);
            let t = n as f64 * self.period;
            let snap = n % stride == 0;
            let diag = opts.diagnostic_stride > 0 && n % opts.diagnostic_stride as u64 == 0;
            if !(snap || diag) {
                continue;
            }
            if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(DynamicsError::NonFinite { time: t });
            }
            let state = DensityMatrix::new_unchecked(to_dmatrix(&rho));
            let min_eig = if opts.check_positivity || diag { state.min_eigenvalue() } else { f64::NAN };
            if opts.check_positivity {
                stats.min_eigenvalue = stats.min_eigenvalue.min(min_eig);
                if min_eig < -POSITIVITY_TOL {
                    return Err(DynamicsError::PositivityViolation { time: t, min_eigenvalue: min_eig });
                }
            }
            if diag {
                diagnostics.push(self.diagnostic(t, &rho, stats.max_trace_drift, min_eig));
            }
            if snap {
                times.push(t);
                states.push(state);
            }
        }
        Ok(Evolution {
            trajectory: StateTrajectory::new(times, states)?,
            stats,
            diagnostics,
        })
    }
}

/// Builds a [`Propagator`] for `model` and integrates from `rho0`.
pub fn evolve(model: &SerfModel, rho0: &DensityMatrix, opts: &EvolveOptions) -> Result<Evolution, DynamicsError> {
    Propagator::new(model).evolve(rho0, opts)
}
