use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::fock::{OperatorMatrix, StateVector};
use crate::{Error, Result};

pub const DENSE_MAX_DIM: usize = 512;

/// `e^{−iĤt}ψ₀` through a dense Hermitian eigendecomposition. Test oracle for
/// small spaces.
pub fn dense_reference_evolve(h: &OperatorMatrix, psi0: &StateVector, t: f64) -> Result<StateVector> {
    if h.basis() != psi0.basis() {
        return Err(Error::BasisMismatch);
    }
    let dim = h.dim();
    if dim > DENSE_MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: DENSE_MAX_DIM });
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let eig = SymmetricEigen::new(h.to_dense());
    let u = &eig.eigenvectors;
    let psi = DVector::from_column_slice(psi0.amplitudes());
    let mut coeffs = u.adjoint() * psi;
    for (c, &lambda) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= Complex64::from_polar(1.0, -lambda * t);
    }
    let out = u * coeffs;
    Ok(StateVector::from_evolved(*psi0.basis(), out.iter().copied().collect()))
}
