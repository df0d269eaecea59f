//! Closed-form mean-field results.
//!
//! All occupations are expectation values of `n̂_b` for a coherent pump of
//! mean occupation `n_a` and a Fock seed `beta` in mode b. They assume
//! `n_a ≫ 1`; nothing here checks that.

use crate::fock::ModelParams;
use crate::{Error, Result};

/// Reference constants for singlet positronium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Stimulated annihilation cross section 2π(ħ/m_e c)², cm².
    pub sigma: f64,
    /// Speed of light, cm/s.
    pub c_light: f64,
    /// Singlet annihilation rate α⁵m_ec²/2ħ, 1/s.
    pub g_ps: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    sigma: 0.936e-20,
    c_light: 2.997_924_58e10,
    g_ps: 8e9,
};

/// Dirac stimulated-annihilation gain `n_ps·σ·c` (1/s) for a density in cm⁻³.
pub fn dirac_gain(n_ps: f64) -> f64 {
    n_ps * CONSTANTS.sigma * CONSTANTS.c_light
}

/// Documented singlet positronium coupling, 1/s.
pub fn ps_coupling() -> f64 {
    CONSTANTS.g_ps
}

/// `α⁵ (m_e c²/ħ) / 2` evaluated from CODATA 2018 inputs.
pub fn ps_coupling_from_codata() -> f64 {
    const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;
    const ELECTRON_REST_EV: f64 = 0.510_998_950_00e6;
    const HBAR_EV_S: f64 = 6.582_119_569e-16;
    FINE_STRUCTURE.powi(5) * (ELECTRON_REST_EV / HBAR_EV_S) / 2.0
}

pub fn detuning(params: &ModelParams) -> f64 {
    params.detuning()
}

/// C₁, C₂, C̄ and D_l for a pump occupation `n_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCoefficients {
    pub delta_eps: f64,
    /// δ² + 2k g² N_a^{k−1}
    pub c1: f64,
    /// 16 g² N_a^k − δ²
    pub c2: f64,
    /// 2 l³ g² N_a^k
    pub c_bar: f64,
    pub d_l: f64,
}

impl GainCoefficients {
    pub fn new(params: &ModelParams, n_a: f64) -> Result<Self> {
        let delta = params.detuning();
        let (k, l, g2) = (params.k as i32, params.l as f64, params.g * params.g);
        Ok(Self {
            delta_eps: delta,
            c1: delta * delta + 2.0 * k as f64 * g2 * n_a.powi(k - 1),
            c2: 16.0 * g2 * n_a.powi(k) - delta * delta,
            c_bar: 2.0 * l.powi(3) * g2 * n_a.powi(k),
            d_l: d_coefficient(params.l)?,
        })
    }
}

fn require_l(params: &ModelParams, l: u32) -> Result<()> {
    if params.l != l {
        return Err(Error::InvalidParams(format!(
            "closed form needs l = {l}, got l = {}",
            params.l
        )));
    }
    Ok(())
}

/// sin(x)/x with the removable point filled in.
fn sinc(x: f64) -> f64 {
    if x == 0.0 { 1.0 } else { x.sin() / x }
}

fn sinhc(x: f64) -> f64 {
    if x == 0.0 { 1.0 } else { x.sinh() / x }
}

/// `(e^{s}+e^{−s}−2)/C` with `s = √C·t`, continued through C ≤ 0.
///
/// Written as `t²·(sinh(s/2)/(s/2))²` (or `sin` for C < 0) so the C → 0 limit
/// `t²` is reached without cancellation.
fn cosh_kernel(c: f64, t: f64) -> f64 {
    let half = 0.5 * c.abs().sqrt() * t;
    let shape = if c >= 0.0 { sinhc(half) } else { sinc(half) };
    t * t * shape * shape
}

/// Up-conversion (`l = 1`): `(2g²N_a^k/C₁)(1 − cos √C₁ t) + β`.
pub fn nb_upconversion(params: &ModelParams, n_a: f64, beta: f64, t: f64) -> Result<f64> {
    require_l(params, 1)?;
    let c = GainCoefficients::new(params, n_a)?;
    let pref = params.g * params.g * n_a.powi(params.k as i32);
    // (1 − cos s)/C₁ = (t²/2)·sinc²(s/2); at C₁ = 0 the prefactor vanishes too.
    let half = 0.5 * c.c1.sqrt() * t;
    let s = sinc(half);
    Ok(pref * t * t * s * s + beta)
}

/// Pair generation (`l = 2`):
/// `4g²N_a^k(1+2β)/C₂ · (e^{√C₂t} + e^{−√C₂t} − 2) + β`, bounded oscillation for C₂ < 0.
pub fn nb_pair_generation(params: &ModelParams, n_a: f64, beta: f64, t: f64) -> Result<f64> {
    require_l(params, 2)?;
    let c = GainCoefficients::new(params, n_a)?;
    let pref = 4.0 * params.g * params.g * n_a.powi(params.k as i32) * (1.0 + 2.0 * beta);
    Ok(pref * cosh_kernel(c.c2, t) + beta)
}

/// Character of the `l = 2` solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairGrowth {
    /// Exponential rate √C₂ (C₂ ≥ 0).
    Growing(f64),
    /// Angular frequency √|C₂| (C₂ < 0).
    Oscillatory(f64),
}

impl PairGrowth {
    pub fn value(&self) -> f64 {
        match *self {
            PairGrowth::Growing(r) | PairGrowth::Oscillatory(r) => r,
        }
    }
}

pub fn pair_growth_rate(params: &ModelParams, n_a: f64) -> Result<PairGrowth> {
    require_l(params, 2)?;
    let c2 = GainCoefficients::new(params, n_a)?.c2;
    Ok(if c2 >= 0.0 {
        PairGrowth::Growing(c2.sqrt())
    } else {
        PairGrowth::Oscillatory((-c2).sqrt())
    })
}

/// Two-term small-time series for any `l`, vacuum seed:
/// `((l−1)!/l)[t²C̄/2 + (t⁴/24)(C̄²D_l − C̄δ²)]`. Valid for `g·t ≪ 1`.
pub fn nb_small_time(params: &ModelParams, n_a: f64, t: f64) -> Result<f64> {
    let c = GainCoefficients::new(params, n_a)?;
    let l = params.l;
    let pref = (1..l).map(|i| i as f64).product::<f64>() / l as f64;
    let t2 = t * t;
    let delta2 = c.delta_eps * c.delta_eps;
    Ok(pref * (t2 * c.c_bar / 2.0 + t2 * t2 / 24.0 * (c.c_bar * c.c_bar * c.d_l - c.c_bar * delta2)))
}

/// Largest `l` for which [`d_coefficient`] is evaluated exactly.
pub const D_COEFFICIENT_MAX_L: u32 = 20;

/// `D_l = ((2l)! − 2(l!)²) / (l!·l³)`, evaluated as `((2l)!/l! − 2·l!) / l³`
/// in exact integer arithmetic.
pub fn d_coefficient(l: u32) -> Result<f64> {
    if l == 0 || l > D_COEFFICIENT_MAX_L {
        return Err(Error::Input(format!(
            "D_l is defined here for 1 <= l <= {D_COEFFICIENT_MAX_L}, got {l}"
        )));
    }
    let l = l as u128;
    let rising: u128 = (l + 1..=2 * l).product();
    let fact: u128 = (1..=l).product();
    let numer = rising - 2 * fact;
    let denom = l * l * l;
    let whole = numer / denom;
    let rem = numer % denom;
    Ok(whole as f64 + rem as f64 / denom as f64)
}
