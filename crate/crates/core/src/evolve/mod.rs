//! Time evolution under a time-independent Hermitian Hamiltonian.

mod dense;
mod krylov;
mod trace;

pub use dense::{dense_reference_evolve, DENSE_MAX_DIM};
pub use krylov::{propagate, propagate_each};
pub use trace::{expectation, observable_trace, uniform_times, ObservableTrace, TraceSample};

/// Integrator controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// First trial step; later steps adapt.
    pub step: f64,
    /// Local error allowed per unit time.
    pub tol: f64,
    /// Largest |‖ψ‖ − 1| tolerated before the run is aborted.
    pub max_norm_drift: f64,
    /// Lanczos subspace dimension.
    pub krylov_dim: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { step: 1e-2, tol: 1e-10, max_norm_drift: 1e-8, krylov_dim: 30 }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.step > 0.0
            && self.tol > 0.0
            && self.max_norm_drift > 0.0
            && self.step.is_finite()
            && self.krylov_dim >= 2;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Input(format!("invalid integrator options {self:?}")))
        }
    }
}
