//! The idealized kicked top: precession by α about ŷ followed by an
//! instantaneous F_x² kick of strength k.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::angular::{spin_matrices, AngularError, HalfInt, SpinMatrices, C64};
use crate::state::{DensityMatrix, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KickedTopError {
    #[error("invalid kicked-top parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Angular(#[from] AngularError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KickedTopParams {
    pub f: HalfInt,
    /// Precession angle per period (rad).
    pub alpha: f64,
    /// Dimensionless kick strength.
    pub k: f64,
    /// Period (s); only carried along, the map is per period.
    pub tau: f64,
}

impl KickedTopParams {
    pub fn new(f: HalfInt, alpha: f64, k: f64) -> Self {
        KickedTopParams { f, alpha, k, tau: 1.0 }
    }

    pub fn validate(&self) -> Result<(), KickedTopError> {
        if self.f.twice() < 1 {
            return Err(KickedTopError::InvalidParameter(format!("spin {} must be at least 1/2", self.f)));
        }
        if !(self.tau > 0.0) {
            return Err(KickedTopError::InvalidParameter(format!("tau {} must be positive", self.tau)));
        }
        if !(self.k >= 0.0 && self.alpha.is_finite() && self.k.is_finite()) {
            return Err(KickedTopError::InvalidParameter(format!(
                "need finite alpha and k >= 0, got alpha = {}, k = {}",
                self.alpha, self.k
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.f.multiplicity()
    }
}

/// exp(-i g(λ)) of a Hermitian matrix through its eigendecomposition.
fn unitary_from_spectrum(h: &DMatrix<C64>, phase: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = eig.eigenvalues.map(|l| C64::from_polar(1.0, -phase(l)));
    v * DMatrix::from_diagonal(&d) * v.adjoint()
}

/// exp(-iαF_y)
pub fn rotation(spin: &SpinMatrices, alpha: f64) -> DMatrix<C64> {
    if alpha == 0.0 {
        return DMatrix::identity(spin.dim(), spin.dim());
    }
    unitary_from_spectrum(&spin.fy, |l| alpha * l)
}

/// exp(-i k F_x² / (2f+1))
pub fn kick(spin: &SpinMatrices, k: f64) -> DMatrix<C64> {
    if k == 0.0 {
        return DMatrix::identity(spin.dim(), spin.dim());
    }
    let n = spin.dim() as f64;
    unitary_from_spectrum(&spin.fx, |l| k * l * l / n)
}

/// U_α(k) = exp(-i k F_x²/(2f+1)) exp(-iαF_y)
pub fn floquet_operator(params: &KickedTopParams) -> Result<DMatrix<C64>, KickedTopError> {
    params.validate()?;
    let spin = spin_matrices(params.f)?;
    Ok(kick(&spin, params.k) * rotation(&spin, params.alpha))
}

/// Spin coherent state exp(-iφF_z) exp(-iθF_y)|f, f⟩.
pub fn coherent_state(f: HalfInt, theta: f64, phi: f64) -> Result<DVector<C64>, KickedTopError> {
    let spin = spin_matrices(f)?;
    let mut top = DVector::<C64>::zeros(spin.dim());
    // descending m: |f, f⟩ is the first basis vector
    top[0] = C64::new(1.0, 0.0);
    let rz = unitary_from_spectrum(&spin.fz, |l| phi * l);
    Ok(rz * rotation(&spin, theta) * top)
}

/// States that can be advanced by a Floquet operator.
pub trait Stroboscopic: Sized {
    fn dim(&self) -> usize;
    fn apply(&self, u: &DMatrix<C64>) -> Self;
}

impl Stroboscopic for DVector<C64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn apply(&self, u: &DMatrix<C64>) -> Self {
        u * self
    }
}

impl Stroboscopic for DensityMatrix {
    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }

    fn apply(&self, u: &DMatrix<C64>) -> Self {
        DensityMatrix::new_unchecked(u * self.matrix() * u.adjoint())
    }
}

/// Applies U_α(k) `n` times.
pub fn evolve_stroboscopic<S: Stroboscopic + Clone>(
    state: &S,
    params: &KickedTopParams,
    n: usize,
) -> Result<S, KickedTopError> {
    let u = floquet_operator(params)?;
    if state.dim() != u.nrows() {
        return Err(StateError::Dimension {
            expected: u.nrows(),
            got: state.dim(),
        }
        .into());
    }
    let mut s = state.clone();
    for _ in 0..n {
        s = s.apply(&u);
    }
    Ok(s)
}

/// Every stroboscopic state ψ_0..ψ_n.
pub fn stroboscopic_orbit(
    psi: &DVector<C64>,
    params: &KickedTopParams,
    n: usize,
) -> Result<Vec<DVector<C64>>, KickedTopError> {
    let u = floquet_operator(params)?;
    if psi.len() != u.nrows() {
        return Err(StateError::Dimension {
            expected: u.nrows(),
            got: psi.len(),
        }
        .into());
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(psi.clone());
    for j in 0..n {
        out.push(&u * &out[j]);
    }
    Ok(out)
}

/// ⟨ψ|A²|ψ⟩ - ⟨ψ|A|ψ⟩² for a normalized ψ.
pub fn variance(psi: &DVector<C64>, op: &DMatrix<C64>) -> f64 {
    let a = op * psi;
    let mean = psi.dotc(&a).re;
    a.dotc(&a).re - mean * mean
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    #[test]
    fn k_zero_is_rotation() {
        let spin = spin_matrices(h(6)).unwrap();
        let u = floquet_operator(&KickedTopParams::new(h(6), 0.7, 0.0)).unwrap();
        let direct = (&spin.fy * C64::new(0.0, -0.7)).exp();
        assert!((u - direct).norm() < 1e-13);
        let id = floquet_operator(&KickedTopParams::new(h(6), 0.0, 0.0)).unwrap();
        assert_eq!(id, DMatrix::identity(7, 7));
    }

    #[test]
    fn kick_matches_series_exponential() {
        let spin = spin_matrices(h(5)).unwrap();
        let k = 2.5;
        let arg = &spin.fx * &spin.fx * C64::new(0.0, -k / 6.0);
        assert!((kick(&spin, k) - arg.exp()).norm() < 1e-12);
    }

    #[test]
    fn unitarity() {
        for t in [1, 4, 7, 8] {
            for (a, k) in [(0.3, 0.0), (1.1, 3.0), (-2.0, 7.5)] {
                let u = floquet_operator(&KickedTopParams::new(h(t), a, k)).unwrap();
                let n = u.nrows();
                assert!((&u * u.adjoint() - DMatrix::<C64>::identity(n, n)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn composition_and_zero_steps() {
        let p = KickedTopParams::new(h(6), 0.4, 3.0);
        let psi = coherent_state(h(6), 0.9, 0.2).unwrap();
        assert_eq!(evolve_stroboscopic(&psi, &p, 0).unwrap(), psi);
        let u = floquet_operator(&p).unwrap();
        let two = evolve_stroboscopic(&psi, &p, 2).unwrap();
        assert!((two - &u * (&u * &psi)).norm() < 1e-14);
        let rho = DensityMatrix::from_pure(&psi);
        let r2 = evolve_stroboscopic(&rho, &p, 2).unwrap();
        let want = DensityMatrix::from_pure(&(&u * (&u * &psi)));
        assert!((r2.matrix() - want.matrix()).norm() < 1e-13);
    }

    #[test]
    fn norm_preserved_over_many_steps() {
        let p = KickedTopParams::new(h(8), 1.3, 6.0);
        let psi = coherent_state(h(8), 2.1, -0.4).unwrap();
        let out = evolve_stroboscopic(&psi, &p, 1000).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coherent_state_moments() {
        let spin = spin_matrices(h(6)).unwrap();
        let psi = coherent_state(h(6), 0.0, 0.0).unwrap();
        assert!((variance(&psi, &spin.fy) - 1.5).abs() < 1e-14);
        let psi = coherent_state(h(6), std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        // pointing along x
        assert!((psi.dotc(&(&spin.fx * &psi)).re - 3.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(floquet_operator(&KickedTopParams::new(h(0), 0.1, 1.0)).is_err());
        assert!(floquet_operator(&KickedTopParams::new(h(2), 0.1, -1.0)).is_err());
        let mut p = KickedTopParams::new(h(2), 0.1, 1.0);
        p.tau = 0.0;
        assert!(p.validate().is_err());
        let psi = DVector::<C64>::zeros(4);
        assert!(evolve_stroboscopic(&psi, &KickedTopParams::new(h(2), 0.1, 1.0), 1).is_err());
    }
}
