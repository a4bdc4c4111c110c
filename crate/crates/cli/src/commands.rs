use std::f64::consts::PI;
use std::fs;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use sleobs::loewner::{path_rng, trace_at, Driver};
use sleobs::mc::{
    exponent_fit, hadamard_check, martingale_test, neutrality_negative_test, restriction_experiment_with, McConfig,
    McObservable, ObservableArgs, Sle0Component, EXPONENT_GRID,
};
use sleobs::observables::{
    boundary_deriv_observable, bpz_residual_boundary_rooted, bpz_residual_virasoro, catalog, fw_limit_check_with,
    SlitRadius,
};
use sleobs::vertex::{eval_formal, Chart, Divisor, PathEvaluator};
use sleobs::SleCftParams;

use crate::args::*;
use crate::{emit, envelope, format_or, json_only, CliError, CliResult, Outcome};

pub fn execute(cmd: &Command, stdout: &mut dyn Write) -> CliResult<Outcome> {
    match cmd {
        Command::Simulate(a) => simulate(a, stdout),
        Command::Trace(a) => trace(a, stdout),
        Command::Eval(a) => eval(a, stdout),
        Command::MartingaleTest(a) => martingale(a, stdout),
        Command::ExponentFit(a) => exponent(a, stdout),
        Command::BpzResidual(a) => bpz(a, stdout),
        Command::FwLimit(a) => fw_limit(a, stdout),
        Command::Restriction(a) => restriction(a, stdout),
        Command::Hadamard(a) => hadamard(a, stdout),
        Command::ListObservables(a) => list_observables(a, stdout),
        Command::Identities(a) => identities(a, stdout),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn n_steps(dt: f64, t_max: f64) -> CliResult<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(usage(format!("dt must be positive, got {dt}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(usage(format!("t must be non-negative, got {t_max}")));
    }
    Ok((t_max / dt).round() as usize)
}

fn sampled_driver(kappa: f64, dt: f64, t_max: f64, seed: u64, path: u64) -> CliResult<Driver> {
    let n = n_steps(dt, t_max)?;
    if kappa == 0.0 {
        return Ok(Driver::constant(0.0, dt, n)?);
    }
    Ok(Driver::brownian(kappa, dt, n, seed, path)?)
}

fn params(kappa: f64) -> CliResult<SleCftParams> {
    Ok(SleCftParams::from_kappa(kappa)?)
}

fn e16(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct DriverOut<'a> {
    dt: f64,
    n_steps: usize,
    theta: &'a [f64],
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    if a.kappa == 0.0 {
        return Err(usage("simulate needs kappa > 0"));
    }
    let d = sampled_driver(a.kappa, a.dt, a.t_max, a.seed, a.path)?;
    let text = match format_or(&a.output, Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            d.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => envelope("simulate", a, None, &DriverOut { dt: d.dt, n_steps: d.n_steps(), theta: &d.theta })?,
    };
    emit(&a.output, stdout, &text)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct TracePoint {
    k: usize,
    t: f64,
    re: f64,
    im: f64,
}

fn trace(a: &TraceArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    let d = match (&a.driver, a.kappa) {
        (Some(path), _) => Driver::read_csv(fs::File::open(path)?)?,
        (None, Some(kappa)) if kappa > 0.0 => sampled_driver(kappa, a.dt, a.t_max, a.seed, a.path)?,
        _ => return Err(usage("trace needs --driver or kappa > 0")),
    };
    if a.samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    let n = d.n_steps();
    let mut ks: Vec<usize> =
        (0..a.samples).map(|i| ((i as f64) * n as f64 / (a.samples - 1) as f64).round() as usize).collect();
    ks.dedup();
    let points: Vec<TracePoint> = ks
        .into_iter()
        .map(|k| {
            let g = trace_at(&d, k);
            TracePoint { k, t: k as f64 * d.dt, re: g.re, im: g.im }
        })
        .collect();
    let text = match format_or(&a.output, Format::Csv) {
        Format::Csv => {
            let mut s = String::from("k,t,re,im\n");
            for p in &points {
                s.push_str(&format!("{},{},{},{}\n", p.k, e16(p.t), e16(p.re), e16(p.im)));
            }
            s
        }
        Format::Json => envelope("trace", a, None, &points)?,
    };
    emit(&a.output, stdout, &text)?;
    Ok(Outcome::Pass)
}

fn read_divisor(literal: &Option<String>, file: &Option<std::path::PathBuf>) -> CliResult<Divisor> {
    let text = match (literal, file) {
        (Some(s), _) => s.clone(),
        (None, Some(path)) => fs::read_to_string(path)?,
        (None, None) => return Err(usage("a divisor is required")),
    };
    Ok(Divisor::parse(&text)?)
}

#[derive(Serialize)]
struct EvalPoint {
    t: f64,
    re: f64,
    im: f64,
    /// Branch-continued logarithm of the value.
    log_re: f64,
    log_im: f64,
}

#[derive(Serialize)]
struct EvalOut {
    divisor: String,
    neutral: bool,
    hatted: bool,
    points: Vec<EvalPoint>,
    swallow_time: Option<f64>,
}

fn eval(a: &EvalArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    let p = params(a.kappa)?;
    let d = read_divisor(&a.divisor, &a.divisor_file)?;
    if !a.formal {
        d.validate()?;
    }
    if a.every == 0 {
        return Err(usage("--every must be positive"));
    }
    let point = |t: f64, log: Complex64| {
        let v = log.exp();
        EvalPoint { t, re: v.re, im: v.im, log_re: log.re, log_im: log.im }
    };
    let mut points = Vec::new();
    let mut swallow_time = None;
    if a.t_max == 0.0 {
        let v = eval_formal(&d, &p, &Chart::identity(&d.node_positions()), !a.rooted)?;
        points.push(point(0.0, v.value.log()));
    } else {
        let driver = sampled_driver(a.kappa, a.dt, a.t_max, a.seed, a.path)?;
        let mut ev = PathEvaluator::with_options((&d).into(), &p, !a.rooted, a.formal)?;
        ev.set_theta(driver.theta[0]);
        points.push(point(0.0, ev.current()?.value.log()));
        let mut k = 0;
        while ev.step(&driver)? {
            k += 1;
            if let Some(tau) = ev.swallow_time() {
                swallow_time = Some(tau);
                break;
            }
            if k % a.every == 0 {
                points.push(point(k as f64 * driver.dt, ev.current()?.value.log()));
            }
        }
    }
    let out = EvalOut { divisor: d.to_string(), neutral: d.is_neutral(), hatted: !a.rooted, points, swallow_time };
    let text = match format_or(&a.output, Format::Json) {
        Format::Csv => {
            let mut s = String::from("t,re,im,log_re,log_im\n");
            for q in &out.points {
                s.push_str(&format!("{},{},{},{},{}\n", e16(q.t), e16(q.re), e16(q.im), e16(q.log_re), e16(q.log_im)));
            }
            s
        }
        Format::Json => envelope("eval", a, None, &out)?,
    };
    emit(&a.output, stdout, &text)?;
    Ok(Outcome::Pass)
}

/// Ensemble configuration with per-command defaults for unset flags.
fn ensemble(e: &EnsembleArgs, kappa: f64, n: usize, dt: f64, t: f64, times: &[f64]) -> CliResult<McConfig> {
    let times = match (e.times.is_empty(), e.t_max) {
        (false, _) => e.times.clone(),
        (true, Some(t)) if times.is_empty() => vec![t],
        (true, _) if times.is_empty() => vec![t],
        (true, _) => times.to_vec(),
    };
    let mut cfg = McConfig::new(kappa, e.n_paths.unwrap_or(n), e.dt.unwrap_or(dt), times, e.seed);
    if let Some(t) = e.t_max {
        cfg.t_max = t;
    }
    cfg.threads = e.threads;
    cfg.validate()?;
    Ok(cfg)
}

fn martingale(a: &MartingaleArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    let cfg = ensemble(&a.ensemble, a.kappa, 20_000, 1e-3, 0.5, &[])?;
    let p = cfg.params()?;
    let (report, pass, mc) = match &a.observable {
        Some(name) => {
            let args = ObservableArgs {
                z: a.z,
                theta0: a.theta0,
                alpha: a.alpha,
                tau: a.tau,
                h: a.h,
                divisor: None,
                component: a.component.map(|c| match c {
                    ComponentArg::Arg => Sle0Component::Arg,
                    ComponentArg::Schwarzian => Sle0Component::Schwarzian,
                }),
            };
            let obs = McObservable::from_name(name, &args, &p)?;
            let r = martingale_test(&cfg, &obs)?;
            (serde_json::to_value(&r)?, r.pass, r)
        }
        None => {
            let d = read_divisor(&a.divisor, &a.divisor_file)?;
            if d.is_neutral() {
                let r = martingale_test(&cfg, &McObservable::vertex(&d)?)?;
                (serde_json::to_value(&r)?, r.pass, r)
            } else {
                let n = neutrality_negative_test(&cfg, &d)?;
                (serde_json::to_value(&n)?, n.drift_detected, n.report)
            }
        }
    };
    let text = match format_or(&a.output, Format::Json) {
        Format::Csv => {
            let mut buf = Vec::new();
            mc.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => envelope("martingale-test", a, Some(pass), &report)?,
    };
    emit(&a.output, stdout, &text)?;
    Ok(Outcome::from_bool(pass))
}

fn exponent(a: &ExponentArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    let cfg = ensemble(&a.ensemble, a.kappa, 50_000, 1e-3, 3.0, &EXPONENT_GRID)?;
    let fit = exponent_fit(a.h, a.theta0, &cfg)?;
    let tol = (a.rtol * fit.predicted_slope.abs()).max(fit.ci);
    let pass = (fit.slope - fit.predicted_slope).abs() <= tol;
    let text = match format_or(&a.output, Format::Json) {
        Format::Csv => {
            let mut s = String::from("time,mean,stderr,survivors\n");
            for i in 0..fit.times.len() {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    e16(fit.times[i]),
                    e16(fit.means[i]),
                    e16(fit.stderrs[i]),
                    fit.survivors[i]
                ));
            }
            s
        }
        Format::Json => envelope("exponent-fit", a, Some(pass), &fit)?,
    };
    emit(&a.output, stdout, &text)?;
    Ok(Outcome::from_bool(pass))
}

#[derive(Serialize)]
struct BpzOut {
    kind: BpzKind,
    kappa: f64,
    samples: usize,
    tol: f64,
    max_residual: f64,
    /// Point (interior `z`, or boundary angle as `(θ, 0)`) of the largest residual.
    worst_point: Option<Complex64>,
}

fn bpz(a: &BpzArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    json_only(&a.output, "bpz-residual")?;
    let p = params(a.kappa)?;
    let mut rng = path_rng(a.seed, 0);
    let mut max_residual: f64 = 0.0;
    let mut worst_point = None;
    let tol = a.tol.unwrap_or(match a.kind {
        BpzKind::Virasoro => 1e-9,
        BpzKind::Boundary => 1e-4,
    });
    let bd = match a.kind {
        BpzKind::Boundary => Some(boundary_deriv_observable(a.h.unwrap_or(p.h12), &p)?),
        BpzKind::Virasoro => None,
    };
    for _ in 0..a.samples {
        let (r, at) = match &bd {
            None => {
                let z = loop {
                    let z = Complex64::new(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0);
                    if z.norm() < 0.95 && z.norm() > 0.05 && (1.0 - z).norm() > 0.05 {
                        break z;
                    }
                };
                (bpz_residual_virasoro(z, &p)?.norm(), z)
            }
            Some(o) => {
                let th = 0.2 + (2.0 * PI - 0.4) * rng.random::<f64>();
                let r = bpz_residual_boundary_rooted(|x| o.profile(x), o.h, 2.0 * o.h_q_hat, &p, th)?;
                (r.abs(), Complex64::new(th, 0.0))
            }
        };
        if r > max_residual || worst_point.is_none() {
            max_residual = max_residual.max(r);
            worst_point = Some(at);
        }
    }
    let pass = max_residual < tol;
    let out = BpzOut { kind: a.kind, kappa: a.kappa, samples: a.samples, tol, max_residual, worst_point };
    emit(&a.output, stdout, &envelope("bpz-residual", a, Some(pass), &out)?)?;
    Ok(Outcome::from_bool(pass))
}

#[derive(Serialize)]
struct FwOut {
    #[serde(flatten)]
    limit: sleobs::observables::FwLimit,
    relative_error: f64,
    tol: f64,
}

fn fw_limit(a: &FwArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    json_only(&a.output, "fw-limit")?;
    let radius = match a.radius {
        RadiusArg::Capacity => SlitRadius::Capacity,
        RadiusArg::Literal => SlitRadius::Literal,
    };
    let limit = fw_limit_check_with(a.theta, a.t, radius)?;
    let out = FwOut { limit, relative_error: limit.relative_error(), tol: a.tol };
    let pass = out.relative_error < a.tol;
    emit(&a.output, stdout, &envelope("fw-limit", a, Some(pass), &out)?)?;
    Ok(Outcome::from_bool(pass))
}

fn restriction(a: &RestrictionArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    json_only(&a.output, "restriction")?;
    let cfg = ensemble(&a.ensemble, a.kappa, 5_000, 1e-3, 3.0, &[])?;
    let r = restriction_experiment_with(a.r, a.theta0, a.delta, &cfg)?;
    let pass = (r.p_mc - r.p_formula).abs() <= a.tol;
    emit(&a.output, stdout, &envelope("restriction", a, Some(pass), &r)?)?;
    Ok(Outcome::from_bool(pass))
}

fn hadamard(a: &HadamardArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    json_only(&a.output, "hadamard")?;
    let cfg = ensemble(&a.ensemble, a.kappa, 5_000, 1e-4, 0.5, &[])?;
    let r = hadamard_check(a.z1, a.z2, &cfg)?;
    let pass = r.rate_residual < a.rate_tol && r.covariation_rel_error.is_none_or(|e| e < a.cov_tol);
    emit(&a.output, stdout, &envelope("hadamard", a, Some(pass), &r)?)?;
    Ok(Outcome::from_bool(pass))
}

fn list_observables(a: &ListArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    json_only(&a.output, "list-observables")?;
    let p = params(a.kappa)?;
    emit(&a.output, stdout, &envelope("list-observables", a, None, &catalog(&p))?)?;
    Ok(Outcome::Pass)
}

/// Tolerance of the algebraic identities.
const IDENTITY_TOL: f64 = 1e-12;

#[derive(Serialize)]
struct IdentityCheck {
    name: &'static str,
    residual: f64,
    ok: bool,
}

#[derive(Serialize)]
struct IdentitiesOut {
    params: SleCftParams,
    lambda: f64,
    mu: f64,
    checks: Vec<IdentityCheck>,
}

fn identities(a: &IdentitiesArgs, stdout: &mut dyn Write) -> CliResult<Outcome> {
    let p = params(a.kappa)?;
    let k = p.kappa;
    let (lam, mu) = (p.lambda(), p.mu());
    let check = |name, residual: f64| IdentityCheck { name, residual, ok: residual.abs() < IDENTITY_TOL };
    let checks = vec![
        check("2a(a+b) = 1", 2.0 * p.a * (p.a + p.b) - 1.0),
        check("c = (6-k)(3k-8)/(2k)", p.c - (6.0 - k) * (3.0 * k - 8.0) / (2.0 * k)),
        check("h12 = (6-k)/(2k)", p.h12 - (6.0 - k) / (2.0 * k)),
        check("h12 - (a^2/4 - b^2) = h12^2/a^2", p.h12 - mu - p.h12 * p.h12 / (p.a * p.a)),
        check("lambda = mu + k lambda^2/2", lam - mu - k * lam * lam / 2.0),
    ];
    let pass = checks.iter().all(|c| c.ok);
    let out = IdentitiesOut { params: p, lambda: lam, mu, checks };
    let text = match a.output.format {
        Some(Format::Json) => envelope("identities", a, Some(pass), &out)?,
        Some(Format::Csv) => return Err(usage("identities has no CSV output")),
        None => {
            let mut s = format!(
                "kappa={}\na={}\nb={}\nc={}\nh12={}\nh0half={}\nlambda={}\nmu={}\n",
                p.kappa, p.a, p.b, p.c, p.h12, p.h0half, lam, mu
            );
            for c in &out.checks {
                s.push_str(&format!(
                    "{}: residual {:.1e} {}\n",
                    c.name,
                    c.residual,
                    if c.ok { "ok" } else { "FAILED" }
                ));
            }
            s
        }
    };
    emit(&a.output, stdout, &text)?;
    Ok(Outcome::from_bool(pass))
}
