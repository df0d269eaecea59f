use num_complex::Complex64;

use super::{ModeTruncation, ProductBasis};
use crate::{Error, Result};

/// Largest Poisson tail weight a truncated coherent state may discard.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-10;

const NORM_TOLERANCE: f64 = 1e-12;

/// Normalized amplitudes over a product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: ProductBasis,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized to within 1e-12.
    pub fn new(basis: ProductBasis, amps: Vec<Complex64>) -> Result<Self> {
        check_len(&basis, &amps)?;
        let norm = l2(&amps);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Spec(format!("state norm {norm} is not 1")));
        }
        Ok(Self { basis, amps })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(basis: ProductBasis, mut amps: Vec<Complex64>) -> Result<Self> {
        check_len(&basis, &amps)?;
        let norm = l2(&amps);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Spec("cannot normalize a zero or non-finite vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { basis, amps })
    }

    /// Basis state `|n_a, n_b⟩`.
    pub fn basis_state(basis: ProductBasis, n_a: usize, n_b: usize) -> Result<Self> {
        let i = basis
            .index(n_a, n_b)
            .ok_or_else(|| Error::Spec(format!("|{n_a}, {n_b}⟩ lies outside the basis")))?;
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[i] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amps })
    }

    /// Propagated snapshot; norm is whatever the integrator produced.
    pub(crate) fn from_evolved(basis: ProductBasis, amps: Vec<Complex64>) -> Self {
        Self { basis, amps }
    }

    pub fn basis(&self) -> &ProductBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        l2(&self.amps)
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> Complex64 {
        self.basis
            .index(n_a, n_b)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amps[i])
    }
}

fn check_len(basis: &ProductBasis, amps: &[Complex64]) -> Result<()> {
    if amps.len() != basis.dim() {
        return Err(Error::Spec(format!(
            "{} amplitudes for a basis of dimension {}",
            amps.len(),
            basis.dim()
        )));
    }
    Ok(())
}

pub(crate) fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// State of the pump mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeA {
    Coherent(Complex64),
    Fock(usize),
}

/// `|ψ(0)⟩ = |mode_a⟩ ⊗ |beta⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialStateSpec {
    pub mode_a: ModeA,
    pub beta: usize,
}

impl InitialStateSpec {
    /// Real coherent pump with mean occupation `n_a`.
    pub fn coherent(n_a: f64, beta: usize) -> Self {
        Self { mode_a: ModeA::Coherent(Complex64::new(n_a.max(0.0).sqrt(), 0.0)), beta }
    }

    pub fn fock(n: usize, beta: usize) -> Self {
        Self { mode_a: ModeA::Fock(n), beta }
    }

    /// Mean pump occupation N_a.
    pub fn mean_n_a(&self) -> f64 {
        match self.mode_a {
            ModeA::Coherent(alpha) => alpha.norm_sqr(),
            ModeA::Fock(n) => n as f64,
        }
    }

    /// Default truncation from the sizing rule.
    pub fn truncation(&self, k: u32, l: u32) -> ModeTruncation {
        match self.mode_a {
            ModeA::Coherent(alpha) => ModeTruncation::for_coherent(alpha.norm_sqr(), self.beta, k, l),
            ModeA::Fock(n) => ModeTruncation::for_fock(n, self.beta, k, l),
        }
    }
}

fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=n_max {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

/// Poisson weight of levels above `n_max` for mean `mean`.
fn coherent_tail(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut ln_fact: f64 = ln_factorials(n_max).last().copied().unwrap_or(0.0);
    let mut tail = 0.0;
    let mut n = n_max;
    loop {
        n += 1;
        ln_fact += (n as f64).ln();
        let term = (-mean + n as f64 * ln_mean - ln_fact).exp();
        tail += term;
        if n as f64 > mean && (term < tail * 1e-17 || term == 0.0) {
            break;
        }
    }
    tail
}

/// Amplitudes `c_n = e^{−|α|²/2} αⁿ/√(n!)` for `n = 0..=n_max`, renormalized.
pub fn coherent_state(alpha: Complex64, n_max: usize) -> Result<Vec<Complex64>> {
    let mean = alpha.norm_sqr();
    if !mean.is_finite() {
        return Err(Error::Spec("coherent amplitude must be finite".into()));
    }
    let required = (mean + 6.0 * mean.sqrt()).ceil() as usize;
    let tail_weight = coherent_tail(mean, n_max);
    if n_max < required || tail_weight >= COHERENT_TAIL_LIMIT {
        return Err(Error::Truncation { mean, n_max, required, tail_weight });
    }
    if mean == 0.0 {
        let mut c = vec![Complex64::new(0.0, 0.0); n_max + 1];
        c[0] = Complex64::new(1.0, 0.0);
        return Ok(c);
    }
    let ln_fact = ln_factorials(n_max);
    let (r, phase) = alpha.to_polar();
    let ln_r = r.ln();
    let mut amps: Vec<Complex64> = (0..=n_max)
        .map(|n| {
            let mag = (-0.5 * mean + n as f64 * ln_r - 0.5 * ln_fact[n]).exp();
            Complex64::from_polar(mag, n as f64 * phase)
        })
        .collect();
    let norm = l2(&amps);
    amps.iter_mut().for_each(|a| *a /= norm);
    Ok(amps)
}

/// Tensor product `|mode_a⟩ ⊗ |beta⟩` on `basis`.
pub fn product_initial_state(spec: &InitialStateSpec, basis: &ProductBasis) -> Result<StateVector> {
    if spec.beta > basis.n_b_max() {
        return Err(Error::Spec(format!(
            "beta = {} exceeds n_b_max = {}",
            spec.beta,
            basis.n_b_max()
        )));
    }
    match spec.mode_a {
        ModeA::Fock(n) => {
            if n > basis.n_a_max() {
                return Err(Error::Spec(format!("Fock level {n} exceeds n_a_max = {}", basis.n_a_max())));
            }
            StateVector::basis_state(*basis, n, spec.beta)
        }
        ModeA::Coherent(alpha) => {
            let c = coherent_state(alpha, basis.n_a_max())?;
            let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
            for (n, cn) in c.into_iter().enumerate() {
                amps[basis.index(n, spec.beta).unwrap()] = cn;
            }
            StateVector::new(*basis, amps)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_basis;

    fn mean_number(c: &[Complex64]) -> f64 {
        c.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
    }

    #[test]
    fn vacuum() {
        let c = coherent_state(Complex64::new(0.0, 0.0), 5).unwrap();
        assert_eq!(c[0], Complex64::new(1.0, 0.0));
        assert!(c[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn ground_amplitude_for_unit_alpha() {
        let c = coherent_state(Complex64::new(1.0, 0.0), 20).unwrap();
        assert!((c[0].re - (-0.5f64).exp()).abs() < 1e-12);
        assert!((c[0].re - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn mean_occupation_matches_alpha_squared() {
        let c = coherent_state(Complex64::new(10f64.sqrt(), 0.0), 40).unwrap();
        assert!((mean_number(&c) - 10.0).abs() < 1e-9);
        let c = coherent_state(Complex64::from_polar(8.0, 0.9), 130).unwrap();
        assert!((mean_number(&c) - 64.0).abs() < 1e-9);
        // phase rotates as αⁿ
        assert!((c[3].arg() - 2.7).abs() < 1e-12);
    }

    #[test]
    fn inadequate_truncation_reports_tail() {
        match coherent_state(Complex64::new(3.0, 0.0), 12) {
            Err(Error::Truncation { required, tail_weight, .. }) => {
                assert_eq!(required, 27);
                assert!(tail_weight > 1e-4);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        // meets n ≥ |α|² + 6|α| but the Poisson tail is still too heavy
        assert!(matches!(coherent_state(Complex64::new(1.0, 0.0), 7), Err(Error::Truncation { .. })));
    }

    #[test]
    fn product_states() {
        let b = enumerate_basis(ModeTruncation::new(20, 3)).unwrap();
        let s = product_initial_state(&InitialStateSpec::coherent(0.0, 0), &b).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));

        let s = product_initial_state(&InitialStateSpec::fock(5, 1), &b).unwrap();
        let nonzero: Vec<_> = s.amplitudes().iter().enumerate().filter(|(_, a)| a.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0, b.index(5, 1).unwrap());

        let err = product_initial_state(&InitialStateSpec::fock(5, 4), &b).unwrap_err();
        assert!(matches!(err, Error::Spec(_)));
    }

    #[test]
    fn coherent_product_expectations() {
        let spec = InitialStateSpec::coherent(10.0, 0);
        let b = enumerate_basis(spec.truncation(1, 2)).unwrap();
        let s = product_initial_state(&spec, &b).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let (mut na, mut nb) = (0.0, 0.0);
        for (i, a, bb) in b.iter() {
            na += a as f64 * s.amplitudes()[i].norm_sqr();
            nb += bb as f64 * s.amplitudes()[i].norm_sqr();
        }
        assert!((na - 10.0).abs() < 1e-9);
        assert_eq!(nb, 0.0);
    }

    #[test]
    fn new_rejects_unnormalized() {
        let b = enumerate_basis(ModeTruncation::new(1, 0)).unwrap();
        let v = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(StateVector::new(b, v.clone()).is_err());
        let s = StateVector::normalized(b, v).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }
}
