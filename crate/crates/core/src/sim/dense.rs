//! Exact evolution and ground states through a dense Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QgnnError, Result};
use crate::pauli::PauliSum;
use crate::sim::StateVector;

/// Largest qubit count the dense path accepts by default.
pub const DEFAULT_DENSE_CAP: usize = 14;

/// Relative gap below which eigenvalues count as degenerate with the minimum.
const DEGENERACY_TOL: f64 = 1e-9;

/// Eigendecomposition `H = V diag(λ) V†`, reusable across many evolution times.
#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    n_qubits: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl DenseHamiltonian {
    pub fn new(h: &PauliSum) -> Result<Self> {
        Self::with_cap(h, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(h: &PauliSum, cap: usize) -> Result<Self> {
        if h.n_qubits() > cap {
            return Err(QgnnError::DenseCapExceeded {
                n_qubits: h.n_qubits(),
                cap,
            });
        }
        let eig = SymmetricEigen::new(h.dense_matrix());
        Ok(Self {
            n_qubits: h.n_qubits(),
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Eigenvalues in solver order (not sorted).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut ev = self.eigenvalues.clone();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// `state ← e^{-itH} state`.
    pub fn evolve(&self, state: &mut StateVector, t: f64) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(QgnnError::DimensionMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        let psi = DVector::from_column_slice(state.amplitudes());
        let mut coeffs = self.eigenvectors.adjoint() * psi;
        for (c, &lam) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= Complex64::from_polar(1.0, -t * lam);
        }
        let out = &self.eigenvectors * coeffs;
        state.amplitudes_mut().copy_from_slice(out.as_slice());
        Ok(())
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Normalized ground state with a deterministic representative.
    ///
    /// For a degenerate ground space the result is the projection of the
    /// lowest-index basis state with nonzero overlap, phase-fixed so that
    /// amplitude is real and positive.
    pub fn ground_state(&self) -> StateVector {
        let e0 = self.ground_energy();
        let scale = self.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let ground: Vec<usize> = (0..self.eigenvalues.len())
            .filter(|&i| self.eigenvalues[i] - e0 <= DEGENERACY_TOL * scale)
            .collect();
        let dim = self.eigenvectors.nrows();
        let cols: Vec<_> = ground.iter().map(|&i| self.eigenvectors.column(i)).collect();

        for basis in 0..dim {
            // P e_basis = Σ_g v_g conj(v_g[basis])
            let mut proj = DVector::from_element(dim, Complex64::new(0.0, 0.0));
            for v in &cols {
                let w = v[basis].conj();
                proj.axpy(w, v, Complex64::new(1.0, 0.0));
            }
            let norm = proj.norm();
            if norm > 1e-6 {
                let anchor = proj[basis];
                let phase = anchor.conj() / anchor.norm();
                let amps: Vec<Complex64> = proj.iter().map(|a| a * phase / norm).collect();
                return StateVector::normalized(amps).expect("projection is nonzero");
            }
        }
        unreachable!("the ground space overlaps some basis state")
    }
}

/// `state ← e^{-itH} state` via a fresh eigendecomposition of `H`.
pub fn evolve_dense(state: &mut StateVector, h: &PauliSum, t: f64) -> Result<()> {
    if state.n_qubits() != h.n_qubits() {
        return Err(QgnnError::DimensionMismatch {
            expected: state.n_qubits(),
            got: h.n_qubits(),
        });
    }
    DenseHamiltonian::new(h)?.evolve(state, t)
}

pub fn ground_state(h: &PauliSum) -> Result<StateVector> {
    Ok(DenseHamiltonian::new(h)?.ground_state())
}
