use crate::{Error, Result};

/// Coupling structure of the two-mode Hamiltonian.
///
/// `k` quanta of mode a are destroyed for every `l` quanta created in mode b.
/// Energies and the coupling are rates (ħ = 1). For the positronium case the
/// natural scale of `eps_a` is twice the half rest energy ω₀, but only the
/// detuning enters the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub k: u32,
    pub l: u32,
    pub g: f64,
    pub eps_a: f64,
    pub eps_b: f64,
}

impl ModelParams {
    pub fn new(k: u32, l: u32, g: f64, eps_a: f64, eps_b: f64) -> Result<Self> {
        let p = Self { k, l, g, eps_a, eps_b };
        p.validate()?;
        Ok(p)
    }

    /// Resonant parameters with `eps_a = eps_b = 0`.
    pub fn resonant(k: u32, l: u32, g: f64) -> Result<Self> {
        Self::new(k, l, g, 0.0, 0.0)
    }

    /// Resonant energies for `eps_b = 0` and the requested detuning.
    pub fn with_detuning(k: u32, l: u32, g: f64, delta: f64) -> Result<Self> {
        Self::new(k, l, g, delta / k.max(1) as f64, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::InvalidParams(format!(
                "k and l must be at least 1 (k = {}, l = {})",
                self.k, self.l
            )));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidParams(format!("g must be finite and >= 0, got {}", self.g)));
        }
        if !self.eps_a.is_finite() || !self.eps_b.is_finite() {
            return Err(Error::InvalidParams("mode energies must be finite".into()));
        }
        Ok(())
    }

    /// δ = eps_a·k − eps_b·l.
    pub fn detuning(&self) -> f64 {
        self.eps_a * self.k as f64 - self.eps_b * self.l as f64
    }

    /// Q = l·n_a + k·n_b, conserved by the interaction.
    pub fn charge(&self, n_a: usize, n_b: usize) -> f64 {
        (self.l as usize * n_a + self.k as usize * n_b) as f64
    }
}
