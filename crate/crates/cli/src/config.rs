//! Scenario files: flat `section.key = value` lines (TOML dotted keys).
//!
//! ```text
//! params.k = 1
//! params.l = 2
//! params.g = 1.0
//! params.delta = 0.0          # or params.eps_a / params.eps_b
//! initial.n_a = 10.0          # or initial.alpha, or initial.fock_a
//! initial.beta = 0
//! truncation.n_a_max = 40     # both or neither; neither means the sizing rule
//! truncation.n_b_max = 80
//! times.horizon = 30          # in units of 1/sqrt(C2), l = 2 only; or times.t_end
//! times.samples = 1001
//! integrator.tol = 1e-10
//! certify.growth = 1.25
//! certify.tol = 1e-3
//! sweep.n_a = [20, 40, 69]
//! sweep.k = [1]
//! outputs.dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use subharmonic::analysis::ConvergenceOptions;
use subharmonic::analytic::{pair_growth_rate, PairGrowth};
use subharmonic::evolve::{uniform_times, IntegratorOptions};
use subharmonic::fock::{enumerate_basis, product_initial_state, InitialStateSpec, ModeTruncation, ModelParams};

use crate::CliError;

pub const DEFAULT_HORIZON: f64 = 30.0;
pub const DEFAULT_SAMPLES: usize = 1001;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    truncation: RawTruncation,
    #[serde(default)]
    times: RawTimes,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    certify: RawCertify,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    outputs: RawOutputs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    k: Option<u32>,
    l: Option<u32>,
    g: Option<f64>,
    eps_a: Option<f64>,
    eps_b: Option<f64>,
    delta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    n_a: Option<f64>,
    alpha: Option<f64>,
    fock_a: Option<usize>,
    beta: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruncation {
    n_a_max: Option<usize>,
    n_b_max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimes {
    t_end: Option<f64>,
    horizon: Option<f64>,
    samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCertify {
    growth: Option<f64>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    n_a: Option<Vec<f64>>,
    k: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    dir: Option<String>,
}

/// End of the time grid, either absolute or relative to the pair-growth rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Duration {
    /// In units of 1/g.
    Absolute(f64),
    /// In units of 1/sqrt(C2), resolved per run.
    GrowthUnits(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub n_a: Vec<f64>,
    pub k: Vec<u32>,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    /// `None` for sweeps, where each point supplies its own pump.
    pub initial: Option<InitialStateSpec>,
    pub beta: usize,
    pub truncation: Option<ModeTruncation>,
    pub duration: Duration,
    pub samples: usize,
    pub integrator: IntegratorOptions,
    pub certify_growth: f64,
    pub certify_tol: f64,
    pub sweep: Option<SweepGrid>,
    pub out_dir: PathBuf,
    /// The pump key exactly as configured, for metadata.
    pump_key: Option<(&'static str, String)>,
    /// Mean pump occupation as configured (α² or n for Fock pumps).
    pump_mean: f64,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

/// Shortest text that parses back to `v`.
fn float(v: f64) -> String {
    format!("{v:?}")
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
    build(raw)
}

fn build(raw: RawConfig) -> Result<Scenario, CliError> {
    let p = &raw.params;
    let k = p.k.ok_or_else(|| invalid("params.k is required"))?;
    let l = p.l.ok_or_else(|| invalid("params.l is required"))?;
    let g = finite("params.g", p.g.unwrap_or(1.0))?;
    let params = match (p.delta, p.eps_a, p.eps_b) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(invalid("params.delta cannot be combined with params.eps_a or params.eps_b"))
        }
        (Some(delta), None, None) => ModelParams::with_detuning(k, l, g, finite("params.delta", delta)?),
        (None, a, b) => ModelParams::new(
            k,
            l,
            g,
            finite("params.eps_a", a.unwrap_or(0.0))?,
            finite("params.eps_b", b.unwrap_or(0.0))?,
        ),
    }?;

    let beta = raw.initial.beta.unwrap_or(0);
    let pump = match (raw.initial.n_a, raw.initial.alpha, raw.initial.fock_a) {
        (None, None, None) => None,
        (Some(n), None, None) => {
            if !(n.is_finite() && n >= 0.0) {
                return Err(invalid("initial.n_a must be finite and non-negative"));
            }
            Some(InitialStateSpec::coherent(n, beta))
        }
        (None, Some(alpha), None) => Some(InitialStateSpec::coherent(finite("initial.alpha", alpha)?.powi(2), beta)),
        (None, None, Some(n)) => Some(InitialStateSpec::fock(n, beta)),
        _ => return Err(invalid("give exactly one of initial.n_a, initial.alpha, initial.fock_a")),
    };

    let truncation = match (raw.truncation.n_a_max, raw.truncation.n_b_max) {
        (None, None) => None,
        (Some(a), Some(b)) => Some(ModeTruncation::new(a, b)),
        _ => return Err(invalid("truncation.n_a_max and truncation.n_b_max go together")),
    };

    let duration = match (raw.times.t_end, raw.times.horizon) {
        (Some(_), Some(_)) => return Err(invalid("times.t_end and times.horizon are mutually exclusive")),
        (Some(t), None) => {
            if !(t.is_finite() && t >= 0.0) {
                return Err(invalid("times.t_end must be finite and non-negative"));
            }
            Duration::Absolute(t)
        }
        (None, h) => {
            let h = h.unwrap_or(DEFAULT_HORIZON);
            if !(h.is_finite() && h >= 0.0) {
                return Err(invalid("times.horizon must be finite and non-negative"));
            }
            if l != 2 {
                return Err(invalid("times.t_end is required unless params.l = 2"));
            }
            Duration::GrowthUnits(h)
        }
    };
    let samples = raw.times.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(invalid("times.samples must be at least 1"));
    }

    let integrator = IntegratorOptions::with_tol(raw.integrator.tol.unwrap_or(IntegratorOptions::default().tol));
    integrator.validate()?;
    let certify_growth = raw.certify.growth.unwrap_or(1.25);
    let certify_tol = raw.certify.tol.unwrap_or(1e-3);
    if !(certify_growth > 1.0 && certify_growth.is_finite()) {
        return Err(invalid("certify.growth must exceed 1"));
    }
    if !(certify_tol > 0.0 && certify_tol.is_finite()) {
        return Err(invalid("certify.tol must be positive"));
    }

    let sweep = match (raw.sweep.n_a, raw.sweep.k) {
        (None, None) => None,
        (None, Some(_)) => return Err(invalid("sweep.k needs sweep.n_a")),
        (Some(n_a), ks) => {
            if n_a.is_empty() {
                return Err(invalid("sweep.n_a must not be empty"));
            }
            if let Some(bad) = n_a.iter().find(|n| !(n.is_finite() && **n > 0.0)) {
                return Err(invalid(format!("sweep.n_a entries must be positive, got {bad}")));
            }
            let ks = ks.unwrap_or_else(|| vec![k]);
            if ks.is_empty() {
                return Err(invalid("sweep.k must not be empty"));
            }
            for &kk in &ks {
                ModelParams::new(kk, l, g, 0.0, 0.0)?;
            }
            Some(SweepGrid { n_a, k: ks })
        }
    };
    if sweep.is_some() && pump.is_some() {
        return Err(invalid("sweep.n_a replaces initial.n_a / alpha / fock_a"));
    }
    if sweep.is_none() && pump.is_none() {
        return Err(invalid("one of initial.n_a, initial.alpha, initial.fock_a is required"));
    }

    let pump_key = match (raw.initial.n_a, raw.initial.alpha, raw.initial.fock_a) {
        (Some(n), _, _) => Some(("initial.n_a", float(n))),
        (_, Some(a), _) => Some(("initial.alpha", float(a))),
        (_, _, Some(n)) => Some(("initial.fock_a", n.to_string())),
        _ => None,
    };
    let pump_mean = match (raw.initial.n_a, raw.initial.alpha, raw.initial.fock_a) {
        (Some(n), _, _) => n,
        (_, Some(a), _) => a * a,
        (_, _, Some(n)) => n as f64,
        _ => 0.0,
    };
    let scenario = Scenario {
        pump_key,
        pump_mean,
        params,
        initial: pump,
        beta,
        truncation,
        duration,
        samples,
        integrator,
        certify_growth,
        certify_tol,
        sweep,
        out_dir: PathBuf::from(raw.outputs.dir.unwrap_or_else(|| ".".into())),
    };
    scenario.check_runs()?;
    Ok(scenario)
}

impl Scenario {
    /// Every (params, pump, configured N_a) the scenario will run.
    pub fn runs(&self) -> Vec<(ModelParams, InitialStateSpec, f64)> {
        match (&self.sweep, self.initial) {
            (Some(grid), _) => grid
                .k
                .iter()
                .flat_map(|&k| {
                    // keep the detuning fixed across k
                    let eps_a = (self.params.detuning() + self.params.eps_b * self.params.l as f64) / k as f64;
                    let params = ModelParams { k, eps_a, ..self.params };
                    grid.n_a.iter().map(move |&n| (params, InitialStateSpec::coherent(n, self.beta), n))
                })
                .collect(),
            (None, Some(spec)) => vec![(self.params, spec, self.pump_mean)],
            (None, None) => Vec::new(),
        }
    }

    pub fn truncation_for(&self, params: &ModelParams, spec: &InitialStateSpec) -> ModeTruncation {
        self.truncation.unwrap_or_else(|| spec.truncation(params.k, params.l))
    }

    pub fn t_end(&self, params: &ModelParams, spec: &InitialStateSpec) -> Result<f64, CliError> {
        match self.duration {
            Duration::Absolute(t) => Ok(t),
            Duration::GrowthUnits(h) => match pair_growth_rate(params, spec.mean_n_a())? {
                PairGrowth::Growing(r) if r > 0.0 => Ok(h / r),
                _ => Err(invalid("times.horizon needs a growing regime (C2 > 0); give times.t_end instead")),
            },
        }
    }

    pub fn times(&self, params: &ModelParams, spec: &InitialStateSpec) -> Result<Vec<f64>, CliError> {
        Ok(uniform_times(self.t_end(params, spec)?, self.samples))
    }

    pub fn convergence(&self, horizon: f64) -> ConvergenceOptions {
        let mut opts = ConvergenceOptions::new(self.certify_growth, self.certify_tol, horizon);
        opts.samples = self.samples;
        opts.integrator = self.integrator;
        opts
    }

    /// Builds every basis and initial state once without propagating, so
    /// configuration problems surface before any output is written.
    fn check_runs(&self) -> Result<(), CliError> {
        for (params, spec, _) in self.runs() {
            let basis = enumerate_basis(self.truncation_for(&params, &spec))?;
            product_initial_state(&spec, &basis)?;
            self.t_end(&params, &spec)?;
        }
        Ok(())
    }

    /// Resolved `key = value` pairs for CSV metadata.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let mut out = vec![
            ("params.k".into(), p.k.to_string()),
            ("params.l".into(), p.l.to_string()),
            ("params.g".into(), float(p.g)),
            ("params.eps_a".into(), float(p.eps_a)),
            ("params.eps_b".into(), float(p.eps_b)),
            ("params.delta".into(), float(p.detuning())),
        ];
        if let Some((key, value)) = &self.pump_key {
            out.push((key.to_string(), value.clone()));
        }
        out.push(("initial.beta".into(), self.beta.to_string()));
        match self.duration {
            Duration::Absolute(t) => out.push(("times.t_end".into(), float(t))),
            Duration::GrowthUnits(h) => out.push(("times.horizon".into(), float(h))),
        }
        out.push(("times.samples".into(), self.samples.to_string()));
        out.push(("integrator.tol".into(), float(self.integrator.tol)));
        out.push(("certify.growth".into(), float(self.certify_growth)));
        out.push(("certify.tol".into(), float(self.certify_tol)));
        if let Some(grid) = &self.sweep {
            out.push(("sweep.n_a".into(), format!("{:?}", grid.n_a)));
            out.push(("sweep.k".into(), format!("{:?}", grid.k)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "params.k = 1\nparams.l = 2\ninitial.n_a = 10.0\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.params, ModelParams::resonant(1, 2, 1.0).unwrap());
        assert_eq!(s.duration, Duration::GrowthUnits(DEFAULT_HORIZON));
        assert_eq!(s.samples, DEFAULT_SAMPLES);
        assert_eq!(s.truncation, None);
        assert_eq!(s.runs().len(), 1);
    }

    #[test]
    fn table_syntax_is_equivalent() {
        let s = parse("[params]\nk = 1\nl = 2\n[initial]\nn_a = 10.0\n").unwrap();
        assert_eq!(s, parse(MINIMAL).unwrap());
    }

    #[test]
    fn rejects_unknown_keys() {
        for extra in ["params.kk = 1", "bogus.key = 1", "times.tend = 3"] {
            let err = parse(&format!("{MINIMAL}{extra}\n")).unwrap_err();
            assert!(matches!(err, CliError::Config(_)), "{extra}");
        }
    }

    #[test]
    fn rejects_inconsistent_choices() {
        let cases = [
            "params.k = 0\nparams.l = 2\ninitial.n_a = 1.0\n",
            "params.k = 1\nparams.l = 2\n",
            "params.k = 1\nparams.l = 2\ninitial.n_a = 1.0\ninitial.fock_a = 1\n",
            "params.k = 1\nparams.l = 2\ninitial.n_a = 1.0\nparams.delta = 1.0\nparams.eps_a = 1.0\n",
            "params.k = 1\nparams.l = 3\ninitial.n_a = 1.0\n",
            "params.k = 1\nparams.l = 2\ninitial.n_a = 10.0\ntruncation.n_a_max = 5\n",
            "params.k = 1\nparams.l = 2\ninitial.n_a = 10.0\ntruncation.n_a_max = 12\ntruncation.n_b_max = 30\n",
            "params.k = 1\nparams.l = 2\nsweep.n_a = []\n",
            "params.k = 1\nparams.l = 2\ninitial.n_a = -1.0\n",
            "params.k = 1\nparams.l = 2\ninitial.n_a = 1.0\ntimes.samples = 0\n",
        ];
        for text in cases {
            assert!(parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn sweep_expands_grid() {
        let s = parse("params.k = 1\nparams.l = 2\nsweep.n_a = [10.0, 20.0]\nsweep.k = [1, 2]\n").unwrap();
        let runs = s.runs();
        assert_eq!(runs.len(), 4);
        assert_eq!(runs[3].0.k, 2);
        assert_eq!(runs[3].2, 20.0);
    }

    #[test]
    fn horizon_is_in_growth_units() {
        let s = parse(MINIMAL).unwrap();
        let (p, spec, _) = s.runs()[0];
        let t = s.t_end(&p, &spec).unwrap();
        assert!((t - 30.0 / (4.0 * 10f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn delta_sets_pump_energy() {
        let s = parse("params.k = 2\nparams.l = 1\nparams.delta = 0.5\ninitial.n_a = 4.0\ntimes.t_end = 1.0\n").unwrap();
        assert_eq!(s.params.detuning(), 0.5);
    }
}
