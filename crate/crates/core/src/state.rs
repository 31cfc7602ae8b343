//! Density matrices and their validity checks.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::angular::C64;

/// Hermiticity tolerance (max elementwise |ρ - ρ†|).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance.
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue accepted as numerical noise.
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("density matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("density matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density matrix has eigenvalue {0:e} below -{POSITIVITY_TOL:e}")]
    NotPositive(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// A validated quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, StateError> {
        let rho = DensityMatrix { matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without checking; callers own the invariants.
    pub fn new_unchecked(matrix: DMatrix<C64>) -> Self {
        DensityMatrix { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let matrix = DMatrix::<C64>::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        DensityMatrix { matrix }
    }

    /// |ψ⟩⟨ψ| for a normalized copy of `psi`.
    pub fn from_pure(psi: &DVector<C64>) -> Self {
        let psi = psi / C64::new(psi.norm(), 0.0);
        DensityMatrix {
            matrix: &psi * psi.adjoint(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// tr(Aρ)
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        (op * &self.matrix).trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = hermitian_part(&self.matrix);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Tr(ρ²)
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn validate(&self) -> Result<(), StateError> {
        let (r, c) = self.matrix.shape();
        if r != c {
            return Err(StateError::NotSquare(r, c));
        }
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(StateError::NotHermitian(herm));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(StateError::BadTrace(tr.re));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(StateError::NotPositive(min));
        }
        Ok(())
    }

    pub fn check_dim(&self, expected: usize) -> Result<(), StateError> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(StateError::Dimension {
                expected,
                got: self.dim(),
            })
        }
    }
}

pub fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// (A + A†)/2
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximally_mixed_is_valid() {
        let rho = DensityMatrix::maximally_mixed(16);
        rho.validate().unwrap();
        assert!((rho.purity() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_states() {
        let m = DMatrix::<C64>::identity(2, 2);
        assert!(matches!(DensityMatrix::new(m), Err(StateError::BadTrace(_))));
        let mut m = DMatrix::<C64>::identity(2, 2) * C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(StateError::NotHermitian(_))));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
        assert!(matches!(DensityMatrix::new(m), Err(StateError::NotPositive(_))));
    }

    #[test]
    fn pure_state_normalizes() {
        let psi = DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]);
        let rho = DensityMatrix::from_pure(&psi);
        rho.validate().unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }
}
