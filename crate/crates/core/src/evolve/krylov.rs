use num_complex::Complex64;

use super::IntegratorOptions;
use crate::fock::{OperatorMatrix, StateVector};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(−iτT)e₁` for the symmetric tridiagonal `T = tridiag(beta, alpha, beta)`.
///
/// Taylor series over sub-steps with `τ‖T‖ ≤ 1`. Because `T` is tridiagonal the
/// k-th component first appears at order k, so short steps keep the trailing
/// components accurate relative to their own size (the error estimate relies
/// on the last one).
fn expm_tridiagonal_e1(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let bound = (0..m)
        .map(|i| {
            alpha[i].abs() + if i > 0 { beta[i - 1] } else { 0.0 } + if i + 1 < m { beta[i] } else { 0.0 }
        })
        .fold(0.0, f64::max);
    let substeps = (tau.abs() * bound).ceil().max(1.0) as usize;
    let h = tau / substeps as f64;

    let mut v = vec![ZERO; m];
    v[0] = Complex64::new(1.0, 0.0);
    let mut term = vec![ZERO; m];
    let mut next = vec![ZERO; m];
    for _ in 0..substeps {
        term.copy_from_slice(&v);
        for order in 1..=60 {
            let factor = Complex64::new(0.0, -h / order as f64);
            for i in 0..m {
                let mut acc = term[i] * alpha[i];
                if i > 0 {
                    acc += term[i - 1] * beta[i - 1];
                }
                if i + 1 < m {
                    acc += term[i + 1] * beta[i];
                }
                next[i] = acc * factor;
            }
            std::mem::swap(&mut term, &mut next);
            let mut small = true;
            for i in 0..m {
                v[i] += term[i];
                if term[i].norm() > 1e-18 * v[i].norm().max(f64::MIN_POSITIVE) {
                    small = false;
                }
            }
            if small {
                break;
            }
        }
    }
    v
}

/// Lanczos decomposition `H V_m = V_m T_m + β_{m+1} v_{m+1} e_mᵀ` of one start vector.
struct Lanczos {
    start_norm: f64,
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// β_{m+1}; zero after a happy breakdown.
    residual: f64,
}

impl Lanczos {
    /// Runs Lanczos from `v`, stopping as soon as a step of length `tau`
    /// meets `tol` per unit time, at an invariant subspace, or at `m_max`.
    fn build(
        h: &OperatorMatrix,
        v: &[Complex64],
        m_max: usize,
        tau: f64,
        tol: f64,
        work: &mut Vec<Complex64>,
    ) -> Self {
        let dim = v.len();
        let m_max = m_max.min(dim).max(1);
        let start_norm = norm(v);
        let mut lz = Self {
            start_norm,
            basis: Vec::with_capacity(m_max),
            alpha: Vec::with_capacity(m_max),
            beta: Vec::with_capacity(m_max),
            residual: 0.0,
        };
        lz.basis.push(v.iter().map(|x| x / start_norm).collect());
        work.resize(dim, ZERO);

        loop {
            let j = lz.alpha.len();
            h.apply_into(&lz.basis[j], work);
            let a = dot(&lz.basis[j], work).re;
            lz.alpha.push(a);
            for (w, vj) in work.iter_mut().zip(&lz.basis[j]) {
                *w -= vj * a;
            }
            if j > 0 {
                let b = lz.beta[j - 1];
                for (w, vp) in work.iter_mut().zip(&lz.basis[j - 1]) {
                    *w -= vp * b;
                }
            }
            // Full reorthogonalization keeps V_m orthonormal to round-off.
            for vi in &lz.basis {
                let c = dot(vi, work);
                for (w, x) in work.iter_mut().zip(vi) {
                    *w -= x * c;
                }
            }
            let b = norm(work);
            let scale = lz.alpha.iter().map(|x| x.abs()).fold(b, f64::max).max(f64::MIN_POSITIVE);
            if b <= 1e-13 * scale {
                lz.residual = 0.0;
                return lz;
            }
            lz.residual = b;
            if lz.alpha.len() == m_max || (lz.alpha.len() >= 2 && lz.error(&lz.coefficients(tau)) <= 0.5 * tol * tau) {
                return lz;
            }
            lz.beta.push(b);
            lz.basis.push(work.iter().map(|x| x / b).collect());
        }
    }

    fn coefficients(&self, tau: f64) -> Vec<Complex64> {
        expm_tridiagonal_e1(&self.alpha, &self.beta, tau)
    }

    /// A-posteriori error estimate `‖ψ‖·β_{m+1}·|[exp(−iτT)e₁]_m|`.
    fn error(&self, coeffs: &[Complex64]) -> f64 {
        self.start_norm * self.residual * coeffs.last().map_or(0.0, |c| c.norm())
    }

    fn assemble(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = ZERO);
        for (c, v) in coeffs.iter().zip(&self.basis) {
            let c = c * self.start_norm;
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
    }
}

fn check_inputs(h: &OperatorMatrix, psi0: &StateVector, times: &[f64], opts: &IntegratorOptions) -> Result<()> {
    opts.validate()?;
    if h.basis() != psi0.basis() {
        return Err(Error::BasisMismatch);
    }
    if !h.is_declared_hermitian() {
        return Err(Error::Input("propagation needs a Hermitian Hamiltonian".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Input("output times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("output times must be strictly increasing".into()));
    }
    Ok(())
}

/// Evolves `psi0` from t = 0 and hands each output sample to `visit` as
/// `(sample index, t, amplitudes)`.
pub fn propagate_each<F>(
    h: &OperatorMatrix,
    psi0: &StateVector,
    times: &[f64],
    opts: &IntegratorOptions,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    check_inputs(h, psi0, times, opts)?;
    let mut psi = psi0.amplitudes().to_vec();
    let mut next = vec![ZERO; psi.len()];
    let mut work = Vec::new();
    let mut t = 0.0;
    // Step length the error control last settled on; not shortened by output times.
    let mut proposal = opts.step;

    for (idx, &target) in times.iter().enumerate() {
        while t < target {
            let remaining = target - t;
            let mut tau = proposal.min(remaining);
            let lanczos = Lanczos::build(h, &psi, opts.krylov_dim, tau, opts.tol, &mut work);
            let accept = |tau: f64, c: &[Complex64]| lanczos.error(c) <= opts.tol * tau;

            let mut coeffs = lanczos.coefficients(tau);
            if accept(tau, &coeffs) {
                proposal = proposal.max(tau);
                // Stretch the step while the same subspace stays accurate.
                while tau < remaining {
                    let longer = (2.0 * tau).min(remaining);
                    let c = lanczos.coefficients(longer);
                    if !accept(longer, &c) {
                        break;
                    }
                    tau = longer;
                    coeffs = c;
                    proposal = proposal.max(tau);
                }
            } else {
                let mut halvings = 0;
                while !accept(tau, &coeffs) {
                    halvings += 1;
                    if halvings > 60 {
                        return Err(Error::Integration {
                            t,
                            reason: format!("step size collapsed to {tau:e} without meeting tol {:e}", opts.tol),
                        });
                    }
                    tau *= 0.5;
                    coeffs = lanczos.coefficients(tau);
                }
                proposal = tau;
            }
            lanczos.assemble(&coeffs, &mut next);
            std::mem::swap(&mut psi, &mut next);
            t = if tau == remaining { target } else { t + tau };
        }
        let drift = (norm(&psi) - 1.0).abs();
        if drift > opts.max_norm_drift {
            return Err(Error::Integration {
                t,
                reason: format!("norm drift {drift:e} exceeds {:e}", opts.max_norm_drift),
            });
        }
        visit(idx, target, &psi)?;
    }
    Ok(())
}

/// Snapshots `e^{−iĤt}ψ₀` at each of `times`.
pub fn propagate(
    h: &OperatorMatrix,
    psi0: &StateVector,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<StateVector>> {
    let mut out = Vec::with_capacity(times.len());
    let basis = *psi0.basis();
    propagate_each(h, psi0, times, opts, |_, _, amps| {
        out.push(StateVector::from_evolved(basis, amps.to_vec()));
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_exponential_matches_two_level_rabi() {
        // T = [[0, w], [w, 0]]: exp(−iτT)e₁ = (cos wτ, −i sin wτ)
        let w = 1.7;
        for tau in [1e-9, 1e-3, 0.4, 3.0, 25.0] {
            let c = expm_tridiagonal_e1(&[0.0, 0.0], &[w], tau);
            assert!((c[0] - Complex64::new((w * tau).cos(), 0.0)).norm() < 1e-13);
            assert!((c[1] - Complex64::new(0.0, -(w * tau).sin())).norm() < 1e-13);
        }
        // trailing component keeps relative accuracy for tiny steps
        let c = expm_tridiagonal_e1(&[0.0, 0.0], &[w], 1e-12);
        assert!((c[1].im / (-w * 1e-12) - 1.0).abs() < 1e-12);
    }
}
