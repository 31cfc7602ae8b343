//! Fidelity, quantum and classical Fisher information, and field sensitivity.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::{coupled_space, C64};
use crate::state::{hermiticity_error, hermitian_part, DensityMatrix, StateError, POSITIVITY_TOL};

/// Relative eigenvalue cutoff in the SLD sum.
pub const EIGEN_CUTOFF: f64 = 1e-12;
/// Outcomes with smaller probability are skipped in the Fisher sum.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Fidelity deficits must exceed this multiple of machine epsilon.
pub const MIN_DEFICIT_EPS: f64 = 100.0;
/// Cesium atoms in 1 cm³ at 2×10¹⁰ cm⁻³.
pub const DEFAULT_ATOM_NUMBER: f64 = 2e10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetrologyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("finite-difference step too small: fidelity deficit {deficit:e} is below {MIN_DEFICIT_EPS}x machine epsilon")]
    DeltaTooSmall { deficit: f64 },
    #[error("QFI methods disagree: SLD {sld:e} vs fidelity {fidelity:e}")]
    MethodsDisagree { sld: f64, fidelity: f64 },
    #[error("every outcome probability is below the floor {PROBABILITY_FLOOR:e}")]
    AllOutcomesBelowFloor,
}

/// Snapshots of one simulated run.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Fingerprint of the configuration that produced the run.
    pub params_tag: String,
}

impl StateTrajectory {
    pub fn new(times: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self, MetrologyError> {
        if times.len() != states.len() {
            return Err(MetrologyError::InvalidInput(format!(
                "{} times but {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MetrologyError::InvalidInput("times must be strictly increasing".into()));
        }
        Ok(StateTrajectory {
            times,
            states,
            params_tag: String::new(),
        })
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.params_tag = tag.into();
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<(), MetrologyError> {
        for s in &self.states {
            s.validate()?;
        }
        Ok(())
    }
}

/// A positive operator-valued measure on a finite-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<DMatrix<C64>>,
}

impl Povm {
    pub fn new(elements: Vec<DMatrix<C64>>) -> Result<Self, MetrologyError> {
        let first = elements
            .first()
            .ok_or_else(|| MetrologyError::InvalidInput("POVM needs at least one element".into()))?;
        let n = first.nrows();
        let mut total = DMatrix::<C64>::zeros(n, n);
        for e in &elements {
            if e.shape() != (n, n) {
                return Err(MetrologyError::InvalidInput("POVM elements differ in shape".into()));
            }
            if hermiticity_error(e) > 1e-12 {
                return Err(MetrologyError::InvalidInput("POVM element is not Hermitian".into()));
            }
            let min = hermitian_part(e).symmetric_eigenvalues().min();
            if min < -1e-12 {
                return Err(MetrologyError::InvalidInput(format!("POVM element has eigenvalue {min:e}")));
            }
            total += e;
        }
        let dev = (total - DMatrix::<C64>::identity(n, n)).camax();
        if dev > 1e-12 {
            return Err(MetrologyError::InvalidInput(format!("POVM elements sum to identity only within {dev:e}")));
        }
        Ok(Povm { elements })
    }

    pub fn elements(&self) -> &[DMatrix<C64>] {
        &self.elements
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.elements.iter().map(|e| rho.expectation(e).re).collect()
    }
}

/// Projective measurement of the electron spin S_z on the 16-dim ground space.
pub fn sz_povm() -> Povm {
    let space = coupled_space();
    let eig = hermitian_part(&space.s[2]).symmetric_eigen();
    let n = space.dim;
    let mut up = DMatrix::<C64>::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            up += &v * v.adjoint();
        }
    }
    let up = hermitian_part(&up);
    let down = DMatrix::<C64>::identity(n, n) - &up;
    Povm::new(vec![up, down]).expect("S_z projectors form a POVM")
}

/// √A for a Hermitian positive semidefinite matrix, clipping tiny negative eigenvalues.
fn psd_sqrt(m: &DMatrix<C64>) -> Result<DMatrix<C64>, MetrologyError> {
    let eig = hermitian_part(m).symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -POSITIVITY_TOL {
        return Err(StateError::NotPositive(min).into());
    }
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.adjoint())
}

/// √F = ‖√ρ √σ‖₁
pub fn root_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, MetrologyError> {
    if rho.dim() != sigma.dim() {
        return Err(StateError::Dimension {
            expected: rho.dim(),
            got: sigma.dim(),
        }
        .into());
    }
    let prod = psd_sqrt(rho.matrix())? * psd_sqrt(sigma.matrix())?;
    Ok(prod.singular_values().sum())
}

/// Uhlmann fidelity F = (tr|√ρ √σ|)².
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, MetrologyError> {
    Ok(root_fidelity(rho, sigma)?.powi(2))
}

/// States of identically configured runs at B - δ, B and B + δ.
#[derive(Clone, Copy, Debug)]
pub struct StateTriple<'a> {
    pub minus: &'a DensityMatrix,
    pub center: &'a DensityMatrix,
    pub plus: &'a DensityMatrix,
}

impl<'a> StateTriple<'a> {
    pub fn new(minus: &'a DensityMatrix, center: &'a DensityMatrix, plus: &'a DensityMatrix) -> Self {
        StateTriple { minus, center, plus }
    }

    fn check(&self, delta: f64) -> Result<(), MetrologyError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(MetrologyError::InvalidInput(format!("delta {delta} must be positive")));
        }
        let n = self.center.dim();
        self.minus.check_dim(n)?;
        self.plus.check_dim(n)?;
        Ok(())
    }

    /// (ρ₊ - ρ₋)/(2δ)
    pub fn derivative(&self, delta: f64) -> DMatrix<C64> {
        (self.plus.matrix() - self.minus.matrix()) / C64::new(2.0 * delta, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QfiMethod {
    /// Symmetric logarithmic derivative in the eigenbasis of the central state.
    #[default]
    Sld,
    /// Fidelity deficit of the neighboring states.
    FidelityFd,
}

/// Quantum Fisher information with respect to the parameter stepped by `delta`.
pub fn qfi(triple: StateTriple<'_>, delta: f64, method: QfiMethod) -> Result<f64, MetrologyError> {
    triple.check(delta)?;
    match method {
        QfiMethod::Sld => Ok(qfi_sld(triple.center, &triple.derivative(delta))),
        QfiMethod::FidelityFd => qfi_fidelity(triple, delta),
    }
}

/// 2 Σ |⟨i|∂ρ|j⟩|²/(λ_i + λ_j) over eigenpairs above the cutoff.
pub fn qfi_sld(rho: &DensityMatrix, drho: &DMatrix<C64>) -> f64 {
    let eig = hermitian_part(rho.matrix()).symmetric_eigen();
    let lambda = &eig.eigenvalues;
    let v = &eig.eigenvectors;
    let d = v.adjoint() * drho * v;
    let cut = EIGEN_CUTOFF * lambda.max().max(0.0);
    let n = lambda.len();
    let mut total = 0.0;
    let mut excluded = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = lambda[i] + lambda[j];
            let w = d[(i, j)].norm_sqr();
            if s > cut {
                total += 2.0 * w / s;
            } else {
                excluded += w;
            }
        }
    }
    if excluded > 0.0 {
        log::debug!("SLD sum skipped derivative weight {excluded:e} on the kernel");
    }
    total
}

fn qfi_fidelity(triple: StateTriple<'_>, delta: f64) -> Result<f64, MetrologyError> {
    if triple.plus == triple.center && triple.minus == triple.center {
        return Ok(0.0);
    }
    let dp = 1.0 - root_fidelity(triple.center, triple.plus)?;
    let dm = 1.0 - root_fidelity(triple.center, triple.minus)?;
    let floor = MIN_DEFICIT_EPS * f64::EPSILON;
    if dp.min(dm) < floor {
        return Err(MetrologyError::DeltaTooSmall { deficit: dp.min(dm) });
    }
    Ok(4.0 * (dp + dm) / (delta * delta))
}

/// QFI from both methods, failing if they differ by more than `rel_tol`.
pub fn qfi_cross_checked(triple: StateTriple<'_>, delta: f64, rel_tol: f64) -> Result<(f64, f64), MetrologyError> {
    let sld = qfi(triple, delta, QfiMethod::Sld)?;
    let fid = qfi(triple, delta, QfiMethod::FidelityFd)?;
    if (sld - fid).abs() > rel_tol * sld.abs().max(fid.abs()) {
        return Err(MetrologyError::MethodsDisagree { sld, fidelity: fid });
    }
    Ok((sld, fid))
}

/// Classical Fisher information of `povm` with central-difference derivatives.
pub fn fisher_information(triple: StateTriple<'_>, povm: &Povm, delta: f64) -> Result<f64, MetrologyError> {
    triple.check(delta)?;
    let p = povm.probabilities(triple.center);
    let pp = povm.probabilities(triple.plus);
    let pm = povm.probabilities(triple.minus);
    let mut total = 0.0;
    let mut used = 0;
    for k in 0..p.len() {
        if p[k] < PROBABILITY_FLOOR {
            log::debug!("outcome {k} skipped with probability {:e}", p[k]);
            continue;
        }
        let dp = (pp[k] - pm[k]) / (2.0 * delta);
        total += dp * dp / p[k];
        used += 1;
    }
    if used == 0 {
        return Err(MetrologyError::AllOutcomesBelowFloor);
    }
    Ok(total)
}

/// Information per unit time, value/t.
pub fn rescale(value: f64, t: f64) -> Result<f64, MetrologyError> {
    if !(t > 0.0) {
        return Err(MetrologyError::InvalidInput(format!("time {t} must be positive")));
    }
    Ok(value / t)
}

/// ΔB = 1/√(n I_t) in T/√Hz for a rescaled information I_t in 1/(T² s).
pub fn delta_b(rescaled: f64, n_atoms: f64) -> Result<f64, MetrologyError> {
    if !(rescaled > 0.0 && n_atoms > 0.0) {
        return Err(MetrologyError::InvalidInput(format!(
            "rescaled information {rescaled:e} and atom number {n_atoms:e} must be positive"
        )));
    }
    Ok(1.0 / (n_atoms * rescaled).sqrt())
}

/// Location and height of a curve maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMax {
    pub index: usize,
    pub time: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionSeries {
    pub times: Vec<f64>,
    pub qfi: Vec<f64>,
    pub qfi_rescaled: Vec<f64>,
    pub fisher_sz: Vec<f64>,
    pub fisher_sz_rescaled: Vec<f64>,
    pub delta_b_optimal: Vec<f64>,
    pub delta_b_sz: Vec<f64>,
}

fn argmax(times: &[f64], values: &[f64]) -> Option<CurveMax> {
    values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(index, value)| CurveMax {
            index,
            time: times[index],
            value,
        })
}

impl PrecisionSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_qfi_rescaled(&self) -> Option<CurveMax> {
        argmax(&self.times, &self.qfi_rescaled)
    }

    pub fn max_fisher_rescaled(&self) -> Option<CurveMax> {
        argmax(&self.times, &self.fisher_sz_rescaled)
    }
}

/// Per-snapshot QFI, POVM Fisher information, their rescaled values and ΔB.
///
/// Snapshots at t = 0 are skipped since rescaling needs t > 0.
pub fn precision_series(
    minus: &StateTrajectory,
    center: &StateTrajectory,
    plus: &StateTrajectory,
    delta: f64,
    povm: &Povm,
    n_atoms: f64,
    method: QfiMethod,
) -> Result<PrecisionSeries, MetrologyError> {
    if minus.times != center.times || plus.times != center.times {
        return Err(MetrologyError::InvalidInput("trajectories are not synchronized".into()));
    }
    let mut out = PrecisionSeries {
        times: Vec::new(),
        qfi: Vec::new(),
        qfi_rescaled: Vec::new(),
        fisher_sz: Vec::new(),
        fisher_sz_rescaled: Vec::new(),
        delta_b_optimal: Vec::new(),
        delta_b_sz: Vec::new(),
    };
    for (k, &t) in center.times.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let triple = StateTriple::new(&minus.states[k], &center.states[k], &plus.states[k]);
        let q = qfi(triple, delta, method)?;
        let f = fisher_information(triple, povm, delta)?;
        let (qr, fr) = (rescale(q, t)?, rescale(f, t)?);
        out.times.push(t);
        out.qfi.push(q);
        out.qfi_rescaled.push(qr);
        out.fisher_sz.push(f);
        out.fisher_sz_rescaled.push(fr);
        out.delta_b_optimal.push(delta_b(qr, n_atoms)?);
        out.delta_b_sz.push(delta_b(fr, n_atoms)?);
    }
    Ok(out)
}

/// (ΔB_reference - ΔB_improved)/ΔB_reference
pub fn improvement(reference: f64, improved: f64) -> f64 {
    (reference - improved) / reference
}
