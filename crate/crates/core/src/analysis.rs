//! Gain extraction, scaling fits, saturation levels and truncation
//! certification on top of observable traces.

use crate::evolve::{observable_trace, uniform_times, IntegratorOptions, ObservableTrace};
use crate::fock::{
    build_hamiltonian, build_observables, enumerate_basis, product_initial_state, InitialStateSpec,
    ModeTruncation, ModelParams,
};
use crate::{Error, Result};

/// Occupation above the seed that marks the first resolved growth.
pub const GROWTH_ONSET: f64 = 1e-6;

/// Least-squares fit of `N_b − β ≈ A·(cosh(r t) − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub rate: f64,
    pub window: (f64, f64),
    /// Coefficient of determination of the log-space fit.
    pub r_squared: f64,
    pub amplitude: f64,
    pub points: usize,
}

/// `ln(cosh(x) − 1)` without overflow or cancellation.
fn ln_cosh_minus_one(x: f64) -> f64 {
    let h = 0.5 * x.abs();
    // cosh x − 1 = 2 sinh²(x/2)
    let ln_sinh = if h > 20.0 {
        h + (-(-2.0 * h).exp_m1()).ln() - std::f64::consts::LN_2
    } else {
        h.sinh().ln()
    };
    std::f64::consts::LN_2 + 2.0 * ln_sinh
}

/// Sum of squared residuals after profiling out the log amplitude.
fn profile(ts: &[f64], ys: &[f64], rate: f64) -> (f64, f64) {
    let n = ts.len() as f64;
    let offset = ts.iter().zip(ys).map(|(&t, &y)| y - ln_cosh_minus_one(rate * t)).sum::<f64>() / n;
    let ssr = ts
        .iter()
        .zip(ys)
        .map(|(&t, &y)| {
            let r = y - ln_cosh_minus_one(rate * t) - offset;
            r * r
        })
        .sum();
    (ssr, offset)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Growth rate of `N_b − β` over the window running from a decade above the
/// first resolved occupation to a decade below `saturation_estimate`.
pub fn fit_growth_rate(trace: &ObservableTrace, beta: f64, saturation_estimate: f64) -> Result<GrowthFit> {
    let excess: Vec<f64> = trace.samples.iter().map(|s| s.n_b - beta).collect();
    let times = trace.times();
    let onset = excess
        .iter()
        .position(|&d| d > GROWTH_ONSET)
        .ok_or_else(|| Error::Fit("occupation never rises above the seed; run longer or raise N_a".into()))?;
    let lo = 10.0 * excess[onset];
    let hi = 0.1 * saturation_estimate;
    if !(hi > lo) {
        return Err(Error::Fit(format!(
            "no exponential regime between {lo:.3e} and {hi:.3e}; run longer or raise N_a"
        )));
    }
    let start = (onset..excess.len())
        .find(|&i| excess[i] >= lo)
        .ok_or_else(|| Error::Fit("growth never clears a decade above onset; run longer".into()))?;
    let end = (start..excess.len()).find(|&i| excess[i] > hi || excess[i] <= 0.0).unwrap_or(excess.len());
    if end - start < 5 {
        return Err(Error::Fit(format!(
            "only {} samples in the growth window; use a finer grid or a larger N_a",
            end - start
        )));
    }
    let ts = &times[start..end];
    let ys: Vec<f64> = excess[start..end].iter().map(|d| d.ln()).collect();

    // Largest log-slope bounds the rate from above since d ln(cosh rt − 1)/dt ≥ r.
    let upper = ts
        .windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| (y[1] - y[0]) / (t[1] - t[0]))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
        * 1.5;
    let (grid_lo, grid_hi) = ((upper * 1e-6).ln(), upper.ln());
    const GRID: usize = 400;
    let point = |i: usize| (grid_lo + (grid_hi - grid_lo) * i as f64 / GRID as f64).exp();
    let best = (0..=GRID)
        .map(|i| (i, profile(ts, &ys, point(i)).0))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap();
    let rate = golden_min(|r| profile(ts, &ys, r).0, point(best.saturating_sub(1)), point((best + 1).min(GRID)));
    let (ssr, offset) = profile(ts, &ys, rate);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sst: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r_squared = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 0.0 };
    Ok(GrowthFit {
        rate,
        window: (ts[0], ts[ts.len() - 1]),
        r_squared,
        amplitude: offset.exp(),
        points: ts.len(),
    })
}

/// Power-law fit `rate ∝ N_a^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub exponent: f64,
    pub prefactor: f64,
    pub samples: Vec<(f64, f64)>,
    /// Largest relative deviation of a sample from the fitted law.
    pub residual: f64,
}

pub fn scaling_exponent(samples: &[(f64, f64)]) -> Result<ScalingResult> {
    if samples.len() < 3 {
        return Err(Error::Input(format!("scaling fit needs at least 3 samples, got {}", samples.len())));
    }
    if let Some(&(n, r)) = samples.iter().find(|&&(n, r)| !(n > 0.0 && r > 0.0)) {
        return Err(Error::Input(format!("non-positive sample (N_a = {n}, rate = {r})")));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("scaling fit needs at least two distinct N_a".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let prefactor = (my - exponent * mx).exp();
    let residual = samples
        .iter()
        .map(|&(na, r)| (r / (prefactor * na.powf(exponent)) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ScalingResult { exponent, prefactor, samples: samples.to_vec(), residual })
}

/// Tail-window statistics of `N_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    pub mean: f64,
    pub std: f64,
    /// `std / mean < 0.1`.
    pub stable: bool,
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;

pub fn saturation_level(trace: &ObservableTrace, tail_fraction: f64) -> Result<Saturation> {
    if trace.is_empty() {
        return Err(Error::Input("empty trace".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Input(format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let n = trace.len();
    let count = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let tail: Vec<f64> = trace.samples[n - count..].iter().map(|s| s.n_b).collect();
    let mean = tail.iter().sum::<f64>() / count as f64;
    let var = tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    let std = var.sqrt();
    Ok(Saturation { mean, std, stable: std < 0.1 * mean.abs() })
}

/// Controls for [`truncation_convergence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    pub growth_factor: f64,
    /// Allowed relative change of N_b(t) between successive truncations.
    pub tol: f64,
    pub horizon: f64,
    pub samples: usize,
    /// Largest product-space dimension tried.
    pub max_dim: usize,
    pub integrator: IntegratorOptions,
}

impl ConvergenceOptions {
    pub fn new(growth_factor: f64, tol: f64, horizon: f64) -> Self {
        Self {
            growth_factor,
            tol,
            horizon,
            samples: 201,
            max_dim: 4_000_000,
            integrator: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub truncation: ModeTruncation,
    pub enlargements: usize,
    /// Relative change against the next larger truncation.
    pub change: f64,
    /// Trace computed on the certified truncation.
    pub trace: ObservableTrace,
}

/// Runs a trace for one truncation.
pub fn simulate(
    params: &ModelParams,
    spec: &InitialStateSpec,
    trunc: ModeTruncation,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<ObservableTrace> {
    let basis = enumerate_basis(trunc)?;
    let h = build_hamiltonian(params, &basis)?;
    let ops = build_observables(params, &basis)?;
    let psi0 = product_initial_state(spec, &basis)?;
    observable_trace(&h, &psi0, &ops, times, opts)
}

fn relative_change(old: &ObservableTrace, new: &ObservableTrace) -> f64 {
    let scale = old.samples.iter().map(|s| s.n_b.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    old.samples
        .iter()
        .zip(&new.samples)
        .map(|(a, b)| (a.n_b - b.n_b).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Enlarges `base` until `N_b(t)` over the horizon stops changing by more
/// than `tol` relative, and returns the smaller truncation of the converged pair.
pub fn truncation_convergence(
    params: &ModelParams,
    spec: &InitialStateSpec,
    base: ModeTruncation,
    opts: &ConvergenceOptions,
) -> Result<Certification> {
    if !(opts.growth_factor > 1.0) {
        return Err(Error::Input(format!("growth factor must exceed 1, got {}", opts.growth_factor)));
    }
    if !(opts.tol > 0.0 && opts.horizon >= 0.0) {
        return Err(Error::Input("tolerance must be positive and horizon non-negative".into()));
    }
    let times = uniform_times(opts.horizon, opts.samples);
    let mut current = base;
    let mut trace = simulate(params, spec, current, &times, &opts.integrator)?;
    let mut enlargements = 0;
    loop {
        // Grow by at least one interaction step so new levels are reachable.
        let scaled = current.enlarged(opts.growth_factor);
        let next = ModeTruncation::new(
            scaled.n_a_max.max(current.n_a_max + params.k as usize),
            scaled.n_b_max.max(current.n_b_max + params.l as usize),
        );
        let dim = next.dimension()?;
        if dim > opts.max_dim {
            return Err(Error::Certification(format!(
                "no convergence to {:e} before exceeding {} states (last {:?})",
                opts.tol, opts.max_dim, current
            )));
        }
        let next_trace = simulate(params, spec, next, &times, &opts.integrator)?;
        let change = relative_change(&trace, &next_trace);
        if change < opts.tol {
            return Ok(Certification { truncation: current, enlargements, change, trace });
        }
        current = next;
        trace = next_trace;
        enlargements += 1;
    }
}
