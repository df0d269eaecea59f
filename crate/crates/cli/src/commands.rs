use std::path::{Path, PathBuf};

use rayon::prelude::*;
use subharmonic::analysis::{fit_growth_rate, scaling_exponent, simulate, truncation_convergence, GrowthFit};
use subharmonic::analytic::{
    dirac_gain, nb_pair_generation, nb_small_time, nb_upconversion, pair_growth_rate, ps_coupling, PairGrowth,
    CONSTANTS,
};
use subharmonic::evolve::ObservableTrace;
use subharmonic::fock::{InitialStateSpec, ModeTruncation, ModelParams};

use crate::config::{self, Scenario};
use crate::output::{num, opt, trace_row, CsvDoc, TRACE_HEADER};
use crate::CliError;

/// Relative gap at which the analytic curve counts as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// N_a = 10
    Fig1a,
    /// N_a = 69
    Fig1b,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1a => "fig1a",
            Preset::Fig1b => "fig1b",
        }
    }

    pub fn n_a(self) -> f64 {
        match self {
            Preset::Fig1a => 10.0,
            Preset::Fig1b => 69.0,
        }
    }

    /// One scenario per k, all with l = 2, δ = 0, β = 0.
    pub fn scenarios(self) -> Result<Vec<Scenario>, CliError> {
        (1..=3)
            .map(|k| {
                config::parse(&format!(
                    "params.k = {k}\nparams.l = 2\nparams.g = 1.0\nparams.delta = 0.0\ninitial.n_a = {}\ninitial.beta = 0\n",
                    self.n_a()
                ))
            })
            .collect()
    }
}

/// A propagated run and the truncation it used.
struct Run {
    truncation: ModeTruncation,
    enlargements: Option<usize>,
    trace: ObservableTrace,
}

fn run(scenario: &Scenario, params: &ModelParams, spec: &InitialStateSpec, certify: bool) -> Result<Run, CliError> {
    let base = scenario.truncation_for(params, spec);
    if certify {
        let t_end = scenario.t_end(params, spec)?;
        let cert = truncation_convergence(params, spec, base, &scenario.convergence(t_end))?;
        Ok(Run { truncation: cert.truncation, enlargements: Some(cert.enlargements), trace: cert.trace })
    } else {
        let trace = simulate(params, spec, base, &scenario.times(params, spec)?, &scenario.integrator)?;
        Ok(Run { truncation: base, enlargements: None, trace })
    }
}

fn header(command: &str, scenario: &Scenario, run: Option<&Run>) -> CsvDoc {
    let mut doc = CsvDoc::new(command);
    for (key, value) in scenario.metadata() {
        doc.meta(&key, value);
    }
    if let Some(run) = run {
        doc.meta("truncation.n_a_max", run.truncation.n_a_max);
        doc.meta("truncation.n_b_max", run.truncation.n_b_max);
        if let Some(n) = run.enlargements {
            doc.meta("truncation.certified_after_enlargements", n);
        }
    }
    doc
}

fn single(scenario: &Scenario) -> (ModelParams, InitialStateSpec, f64) {
    scenario.runs()[0]
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn cmd_simulate(scenario: &Scenario, certify: bool) -> Result<(), CliError> {
    let (params, spec, _) = single(scenario);
    let run = run(scenario, &params, &spec, certify)?;
    let mut doc = header("simulate", scenario, Some(&run));
    doc.line(TRACE_HEADER);
    for s in &run.trace.samples {
        doc.line(&trace_row(s));
    }
    let path = scenario.out_dir.join("trace.csv");
    doc.write_atomic(&path)?;
    report(&path);
    Ok(())
}

/// Which closed form applies to `params`.
fn closed_form(
    params: &ModelParams,
    spec: &InitialStateSpec,
    n_a: f64,
) -> Result<(&'static str, impl Fn(f64) -> f64), CliError> {
    let (p, beta) = (*params, spec.beta as f64);
    if p.l >= 3 && spec.beta != 0 {
        return Err(CliError::Config("the small-time series for l >= 3 assumes initial.beta = 0".into()));
    }
    // Validate once so the closures below cannot fail.
    match p.l {
        1 => nb_upconversion(&p, n_a, beta, 0.0)?,
        2 => nb_pair_generation(&p, n_a, beta, 0.0)?,
        _ => nb_small_time(&p, n_a, 0.0)?,
    };
    let label = match p.l {
        1 => "up-conversion, bounded oscillation",
        2 => "pair generation, semiclassical pump",
        _ => "small-time series, valid only for g*t <= 0.1",
    };
    Ok((label, move |t: f64| match p.l {
        1 => nb_upconversion(&p, n_a, beta, t).unwrap(),
        2 => nb_pair_generation(&p, n_a, beta, t).unwrap(),
        _ => nb_small_time(&p, n_a, t).unwrap(),
    }))
}

pub fn cmd_analytic(scenario: &Scenario) -> Result<(), CliError> {
    let (params, spec, n_a) = single(scenario);
    let (label, nb) = closed_form(&params, &spec, n_a)?;
    let times = scenario.times(&params, &spec)?;
    let mut doc = header("analytic", scenario, None);
    doc.meta("formula", label);
    doc.line(TRACE_HEADER);
    for &t in &times {
        doc.line(&format!("{},,{},,,,", num(t), num(nb(t))));
    }
    let path = scenario.out_dir.join("analytic.csv");
    doc.write_atomic(&path)?;
    if params.l >= 3 && times.last().is_some_and(|&t| params.g * t > 0.1) {
        eprintln!("warning: g*t exceeds 0.1, outside the range of the small-time series");
    }
    report(&path);
    Ok(())
}

pub fn relative_difference(numeric: f64, analytic: f64) -> f64 {
    if numeric == analytic {
        0.0
    } else {
        (numeric - analytic).abs() / analytic.abs()
    }
}

/// First sample after t = 0 where the relative gap exceeds the threshold.
pub fn divergence_time(times: &[f64], gaps: &[f64]) -> Option<f64> {
    times.iter().zip(gaps).skip(1).find(|(_, &d)| d > DIVERGENCE_THRESHOLD).map(|(&t, _)| t)
}

fn growth_rate(params: &ModelParams, n_a: f64) -> Option<f64> {
    match pair_growth_rate(params, n_a) {
        Ok(PairGrowth::Growing(r)) if r > 0.0 => Some(r),
        _ => None,
    }
}

pub fn cmd_compare(scenario: &Scenario, certify: bool) -> Result<(), CliError> {
    let (params, spec, n_a) = single(scenario);
    let (label, nb) = closed_form(&params, &spec, n_a)?;
    let run = run(scenario, &params, &spec, certify)?;
    let times = run.trace.times();
    let analytic: Vec<f64> = times.iter().map(|&t| nb(t)).collect();
    let gaps: Vec<f64> = run.trace.samples.iter().zip(&analytic).map(|(s, &a)| relative_difference(s.n_b, a)).collect();
    let diverged = divergence_time(&times, &gaps);

    let mut doc = header("compare", scenario, Some(&run));
    doc.meta("formula", label);
    doc.meta("divergence.threshold", DIVERGENCE_THRESHOLD);
    doc.meta("divergence.t", opt(diverged));
    let rate = growth_rate(&params, n_a);
    if let Some(r) = rate {
        doc.meta("divergence.rt", opt(diverged.map(|t| r * t)));
    }
    doc.line(&format!("{TRACE_HEADER},n_b_analytic,rel_diff"));
    for ((s, a), d) in run.trace.samples.iter().zip(&analytic).zip(&gaps) {
        doc.line(&format!("{},{},{}", trace_row(s), num(*a), num(*d)));
    }
    let path = scenario.out_dir.join("compare.csv");
    doc.write_atomic(&path)?;
    match (diverged, rate) {
        (Some(t), Some(r)) => println!("first {DIVERGENCE_THRESHOLD} divergence at t = {t:.6} (sqrt(C2) t = {:.4})", r * t),
        (Some(t), None) => println!("first {DIVERGENCE_THRESHOLD} divergence at t = {t:.6}"),
        (None, _) => println!("no divergence above {DIVERGENCE_THRESHOLD} on the grid"),
    }
    report(&path);
    Ok(())
}

pub fn cmd_preset(preset: Preset, certify: bool, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut scenarios = preset.scenarios()?;
    if let Some(dir) = out {
        scenarios.iter_mut().for_each(|s| s.out_dir = dir.clone());
    }
    let results: Vec<Result<(PathBuf, String), CliError>> = scenarios
        .par_iter()
        .map(|scenario| {
            let (params, spec, n_a) = single(scenario);
            let rate = growth_rate(&params, n_a).expect("presets are resonant pair generation");
            let (label, nb) = closed_form(&params, &spec, n_a)?;
            let run = run(scenario, &params, &spec, certify)?;
            let rows: Vec<(f64, f64, f64, f64)> = run
                .trace
                .samples
                .iter()
                .map(|s| {
                    let a = nb(s.t);
                    (s.t, s.n_b, a, relative_difference(s.n_b, a))
                })
                .collect();
            let times: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let gaps: Vec<f64> = rows.iter().map(|r| r.3).collect();
            let diverged = divergence_time(&times, &gaps);

            let mut doc = header("compare", scenario, Some(&run));
            doc.meta("preset", preset.name());
            doc.meta("formula", label);
            doc.meta("sqrt_c2", num(rate));
            doc.meta("divergence.threshold", DIVERGENCE_THRESHOLD);
            doc.meta("divergence.t", opt(diverged));
            doc.meta("divergence.rt", opt(diverged.map(|t| rate * t)));
            doc.line("t,rt,n_b_over_n_a,n_b_analytic_over_n_a,rel_diff");
            for (t, nb, a, d) in rows {
                doc.line(&[t, rate * t, nb / n_a, a / n_a, d].map(num).join(","));
            }
            let path = scenario.out_dir.join(format!("{}_k{}.csv", preset.name(), params.k));
            doc.write_atomic(&path)?;
            let summary = match diverged {
                Some(t) => format!(
                    "{} k={}: first {DIVERGENCE_THRESHOLD} divergence at g t = {t:.6}, sqrt(C2) t = {:.4}",
                    preset.name(),
                    params.k,
                    rate * t
                ),
                None => format!("{} k={}: no divergence above {DIVERGENCE_THRESHOLD}", preset.name(), params.k),
            };
            Ok((path, summary))
        })
        .collect();
    for result in results {
        let (path, summary) = result?;
        println!("{summary}");
        report(&path);
    }
    Ok(())
}

/// Outcome of one sweep point.
struct Point {
    k: u32,
    n_a: f64,
    truncation: ModeTruncation,
    expected: Option<f64>,
    fit: Result<GrowthFit, CliError>,
}

fn point_name(k: u32, n_a: f64) -> String {
    format!("k{k}_n_a{n_a}.csv")
}

fn sweep_point(scenario: &Scenario, params: ModelParams, spec: InitialStateSpec, n_a: f64, certify: bool) -> Point {
    let mut point = Point {
        k: params.k,
        n_a,
        truncation: scenario.truncation_for(&params, &spec),
        expected: growth_rate(&params, n_a),
        fit: Err(CliError::Config("not run".into())),
    };
    point.fit = (|| {
        let run = run(scenario, &params, &spec, certify)?;
        point.truncation = run.truncation;
        let mut doc = header("sweep", scenario, Some(&run));
        doc.meta("point.k", params.k);
        doc.meta("point.n_a", n_a);
        doc.line(TRACE_HEADER);
        for s in &run.trace.samples {
            doc.line(&trace_row(s));
        }
        doc.write_atomic(&scenario.out_dir.join("points").join(point_name(params.k, n_a)))?;
        let saturation = 2.0 * n_a / params.k as f64;
        Ok(fit_growth_rate(&run.trace, spec.beta as f64, saturation)?)
    })();
    point
}

pub fn cmd_sweep(scenario: &Scenario, certify: bool) -> Result<(), CliError> {
    if scenario.sweep.is_none() {
        return Err(CliError::Config("sweep needs sweep.n_a".into()));
    }
    if scenario.params.l != 2 {
        return Err(CliError::Config("sweep fits exponential growth and needs params.l = 2".into()));
    }
    let points: Vec<Point> = scenario
        .runs()
        .into_par_iter()
        .map(|(params, spec, n_a)| sweep_point(scenario, params, spec, n_a, certify))
        .collect();

    let mut doc = header("sweep", scenario, None);
    let mut ks: Vec<u32> = points.iter().map(|p| p.k).collect();
    ks.dedup();
    let mut summaries = Vec::new();
    for &k in &ks {
        let samples: Vec<(f64, f64)> =
            points.iter().filter(|p| p.k == k).filter_map(|p| p.fit.as_ref().ok().map(|f| (p.n_a, f.rate))).collect();
        match scaling_exponent(&samples) {
            Ok(s) => {
                doc.meta(&format!("exponent.k{k}"), num(s.exponent));
                doc.meta(&format!("exponent.k{k}.residual"), num(s.residual));
                summaries.push(format!("k={k}: exponent {:.4} over {} points", s.exponent, samples.len()));
            }
            Err(e) => {
                doc.meta(&format!("exponent.k{k}"), "");
                summaries.push(format!("k={k}: no exponent ({e})"));
            }
        }
    }
    doc.line("k,n_a,n_a_max,n_b_max,rate,expected_rate,r_squared,t_lo,t_hi,error");
    for p in &points {
        let fit = p.fit.as_ref().ok();
        let error = p.fit.as_ref().err().map(|e| e.to_string().replace([',', '\n'], ";")).unwrap_or_default();
        doc.line(&format!(
            "{},{},{},{},{},{},{},{},{},{}",
            p.k,
            num(p.n_a),
            p.truncation.n_a_max,
            p.truncation.n_b_max,
            opt(fit.map(|f| f.rate)),
            opt(p.expected),
            opt(fit.map(|f| f.r_squared)),
            opt(fit.map(|f| f.window.0)),
            opt(fit.map(|f| f.window.1)),
            error
        ));
    }
    let path = scenario.out_dir.join("sweep.csv");
    doc.write_atomic(&path)?;
    for s in summaries {
        println!("{s}");
    }
    report(&path);

    let failed: Vec<&Point> = points.iter().filter(|p| p.fit.is_err()).collect();
    for p in &failed {
        if let Err(e) = &p.fit {
            eprintln!("point k={} n_a={}: {e}", p.k, p.n_a);
        }
    }
    if failed.len() * 5 > points.len() {
        let code = failed[0].fit.as_ref().err().map_or(4, |e| e.exit_code().max(3));
        return Err(CliError::Sweep { failed: failed.len(), total: points.len(), code });
    }
    Ok(())
}

/// `value` written as `m e{exp}` with a fixed exponent, e.g. 0.936e-20.
fn fixed_exponent(value: f64, exp: i32) -> String {
    let mantissa = value / 10f64.powi(exp);
    let rounded = (mantissa * 1e12).round() / 1e12;
    format!("{rounded}e{exp}")
}

pub fn cmd_constants(density: Option<f64>) -> Result<(), CliError> {
    if let Some(n) = density {
        if !(n.is_finite() && n >= 0.0) {
            return Err(CliError::Config(format!("--density must be finite and non-negative, got {n}")));
        }
    }
    println!("sigma_cm2 = {}", fixed_exponent(CONSTANTS.sigma, -20));
    println!("c_cm_per_s = {:e}", CONSTANTS.c_light);
    println!("g_ps_per_s = {:e}", ps_coupling());
    if let Some(n) = density {
        println!("dirac_gain_per_s = {:e}", dirac_gain(n));
    }
    Ok(())
}
