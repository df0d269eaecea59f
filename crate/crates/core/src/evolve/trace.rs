use num_complex::Complex64;

use super::{propagate_each, IntegratorOptions};
use crate::fock::{ObservableSet, OperatorMatrix, StateVector};
use crate::{Error, Result};

/// Expectation values at one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub x: f64,
    pub y: f64,
    pub norm: f64,
    pub q: f64,
    /// ⟨Ĥ⟩, kept for conservation checks.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableTrace {
    pub samples: Vec<TraceSample>,
}

impl ObservableTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.channel(|s| s.t)
    }

    pub fn n_b(&self) -> Vec<f64> {
        self.channel(|s| s.n_b)
    }

    pub fn channel(&self, f: impl Fn(&TraceSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Every second sample, starting with the first.
    pub fn subsampled(&self, every: usize) -> Self {
        Self { samples: self.samples.iter().step_by(every.max(1)).copied().collect() }
    }

    /// max |‖ψ(t)‖ − 1|.
    pub fn max_norm_drift(&self) -> f64 {
        self.samples.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max)
    }

    /// max |Q(t) − Q(0)| / max(Q(0), 1).
    pub fn max_charge_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else { return 0.0 };
        let scale = first.q.abs().max(1.0);
        self.samples.iter().map(|s| (s.q - first.q).abs() / scale).fold(0.0, f64::max)
    }

    /// max |E(t) − E(0)| / `scale`.
    pub fn max_energy_drift(&self, scale: f64) -> f64 {
        let Some(first) = self.samples.first() else { return 0.0 };
        self.samples.iter().map(|s| (s.energy - first.energy).abs() / scale).fold(0.0, f64::max)
    }
}

/// `⟨ψ|Ô|ψ⟩`.
pub fn expectation(op: &OperatorMatrix, psi: &StateVector) -> Result<Complex64> {
    if op.basis() != psi.basis() {
        return Err(Error::BasisMismatch);
    }
    Ok(op.quadratic_form(psi.amplitudes()))
}

/// `samples` equally spaced times on `[0, t_end]`; a single `0` when `t_end == 0`.
pub fn uniform_times(t_end: f64, samples: usize) -> Vec<f64> {
    if t_end == 0.0 || samples < 2 {
        return vec![0.0];
    }
    let n = samples - 1;
    (0..=n).map(|i| if i == n { t_end } else { t_end * i as f64 / n as f64 }).collect()
}

fn sample(h: &OperatorMatrix, ops: &ObservableSet, t: f64, amps: &[Complex64]) -> TraceSample {
    let ev = |op: &OperatorMatrix| op.quadratic_form(amps).re;
    TraceSample {
        t,
        n_a: ev(&ops.n_a),
        n_b: ev(&ops.n_b),
        x: ev(&ops.x),
        y: ev(&ops.y),
        norm: amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt(),
        q: ev(&ops.q),
        energy: ev(h),
    }
}

/// Propagates `psi0` and records every observable channel at `times`.
pub fn observable_trace(
    h: &OperatorMatrix,
    psi0: &StateVector,
    ops: &ObservableSet,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<ObservableTrace> {
    for op in [&ops.n_a, &ops.n_b, &ops.x, &ops.y, &ops.q] {
        if op.basis() != psi0.basis() {
            return Err(Error::BasisMismatch);
        }
    }
    let mut samples = Vec::with_capacity(times.len());
    propagate_each(h, psi0, times, opts, |_, t, amps| {
        samples.push(sample(h, ops, t, amps));
        Ok(())
    })?;
    let trace = ObservableTrace { samples };
    let charge_drift = trace.max_charge_drift();
    if charge_drift > opts.max_norm_drift {
        let t = trace.samples.last().map_or(0.0, |s| s.t);
        return Err(Error::Integration { t, reason: format!("charge drift {charge_drift:e}") });
    }
    Ok(trace)
}
