use num_complex::Complex64;
use serde::Serialize;

use super::stats::{linear_fit, KahanSum, Moments};
use super::{McConfig, SCHEMA_VERSION};
use crate::conformal::{green, slit_map};
use crate::error::{Error, Result};
use crate::loewner::{path_rng, trace_at, Driver, LoewnerTracker};
use crate::observables::{boundary_deriv_observable, chiral_n, hadamard_rate, ss_phi_hat_chart};
use crate::params::SleCftParams;
use crate::vertex::{Divisor, PathEvaluator};

/// Default regression times for [`exponent_fit`].
pub const EXPONENT_GRID: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub schema: u32,
    pub kappa: f64,
    pub h: f64,
    pub theta0: f64,
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub survivors: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    /// 95% half-width of the slope.
    pub ci: f64,
    /// `−2ĥ_q` for the boundary exponent.
    pub predicted_slope: f64,
    pub warning: Option<String>,
}

/// Fits `log E[|w_t'(e^{iθ0})|^h 1{τ > t}]` against `t` on `cfg.sample_times`.
pub fn exponent_fit(h: f64, theta0: f64, cfg: &McConfig) -> Result<ExponentFit> {
    cfg.validate()?;
    if cfg.sample_times.len() < 2 {
        return Err(Error::Config("need at least two regression times".into()));
    }
    let p = cfg.params()?;
    let bd = boundary_deriv_observable(h, &p)?;
    let steps = cfg.sample_steps()?;
    let per_path = cfg.par_paths(cfg.n_paths, |i| {
        let driver = cfg.driver(i)?;
        let mut tr = LoewnerTracker::with_theta(driver.theta[0]);
        tr.boundary_hits = cfg.kappa > 4.0;
        tr.add_boundary(theta0)?;
        let mut out = vec![0.0; steps.len()];
        let mut k = 0;
        for (j, &target) in steps.iter().enumerate() {
            while k < target && tr.all_alive() {
                tr.advance(driver.dt, driver.theta[k + 1])?;
                k += 1;
            }
            if !tr.all_alive() {
                break;
            }
            out[j] = (h * tr.boundary[0].log_abs_g_prime).exp();
        }
        Ok(out)
    })?;
    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    let mut survivors = Vec::new();
    for j in 0..steps.len() {
        let mut m = Moments::default();
        let mut alive = 0;
        for v in &per_path {
            m.push(v[j]);
            if v[j] > 0.0 {
                alive += 1;
            }
        }
        means.push(m.mean());
        stderrs.push(m.stderr());
        survivors.push(alive);
    }
    if means.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InsufficientData("no surviving paths at a regression time".into()));
    }
    let times: Vec<f64> = steps.iter().map(|&k| k as f64 * cfg.dt).collect();
    let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let sy: Vec<f64> = means.iter().zip(&stderrs).map(|(m, s)| s / m).collect();
    let (slope, intercept, se) = linear_fit(&times, &y, &sy);
    let last = *survivors.last().unwrap();
    let warning = (last < 100).then(|| format!("only {last} surviving paths at the largest time; widen the interval"));
    Ok(ExponentFit {
        schema: SCHEMA_VERSION,
        kappa: cfg.kappa,
        h,
        theta0,
        times,
        means,
        stderrs,
        survivors,
        slope,
        intercept,
        ci: 1.96 * se,
        predicted_slope: -2.0 * bd.h_q_hat,
        warning,
    })
}

/// Hit threshold between the trace polyline and the slit.
pub const DELTA_HIT: f64 = 0.01;
/// Coarse trace sampling stride (in driver steps) of the restriction experiment.
const TRACE_STRIDE: usize = 16;

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a) * ab.conj()).re / l2;
    (p - (a + ab * s.clamp(0.0, 1.0))).norm()
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

pub(crate) fn segment_distance(p0: Complex64, p1: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d1 = cross(p1 - p0, a - p0);
    let d2 = cross(p1 - p0, b - p0);
    let d3 = cross(b - a, p0 - a);
    let d4 = cross(b - a, p1 - a);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(p0, a, b)
        .min(point_segment_distance(p1, a, b))
        .min(point_segment_distance(a, p0, p1))
        .min(point_segment_distance(b, p0, p1))
}

/// `true` when the trace polyline of `driver` stays at least `delta` away from
/// the segment `[a, b]`. Coarse chords far from the segment are not refined.
pub fn trace_avoids(driver: &Driver, a: Complex64, b: Complex64, delta: f64) -> bool {
    let n = driver.n_steps();
    let mut k0 = 0;
    let mut p0 = trace_at(driver, 0);
    while k0 < n {
        let k1 = (k0 + TRACE_STRIDE).min(n);
        let p1 = trace_at(driver, k1);
        let chord = (p1 - p0).norm();
        if segment_distance(p0, p1, a, b) < delta + (2.0 * chord).max(0.05) {
            let mut q0 = p0;
            for k in k0 + 1..=k1 {
                let q1 = if k == k1 { p1 } else { trace_at(driver, k) };
                if segment_distance(q0, q1, a, b) < delta {
                    return false;
                }
                q0 = q1;
            }
        }
        k0 = k1;
        p0 = p1;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictionReport {
    pub schema: u32,
    pub r: f64,
    pub theta0: f64,
    pub t_max: f64,
    pub dt: f64,
    pub delta_hit: f64,
    pub n_paths: usize,
    pub avoided: usize,
    pub p_mc: f64,
    pub p_formula: f64,
    /// 95% binomial half-width of `p_mc`.
    pub ci: f64,
    pub bias: &'static str,
}

/// Avoidance probability of the slit `[r e^{iθ0}, e^{iθ0}]` at κ = 8/3.
pub fn restriction_experiment(r: f64, theta0: f64, cfg: &McConfig) -> Result<RestrictionReport> {
    restriction_experiment_with(r, theta0, DELTA_HIT, cfg)
}

pub fn restriction_experiment_with(r: f64, theta0: f64, delta: f64, cfg: &McConfig) -> Result<RestrictionReport> {
    cfg.validate()?;
    if (cfg.kappa - 8.0 / 3.0).abs() > 1e-12 {
        return Err(Error::Config(format!("the restriction formula holds at κ = 8/3, not {}", cfg.kappa)));
    }
    if (theta0 / 2.0).sin().abs() < 1e-3 {
        return Err(Error::Domain("the slit must stay away from the start point".into()));
    }
    let p = cfg.params()?;
    let psi = slit_map(r, theta0)?;
    let p_formula = psi.deriv_boundary(0.0)?.norm().powf(p.lambda()) * psi.deriv_at_zero().powf(p.mu());
    let u = Complex64::from_polar(1.0, theta0);
    let hits = cfg.par_paths(cfg.n_paths, |i| Ok(trace_avoids(&cfg.driver(i)?, r * u, u, delta)))?;
    let avoided = hits.iter().filter(|&&x| x).count();
    let n = cfg.n_paths as f64;
    let p_mc = avoided as f64 / n;
    Ok(RestrictionReport {
        schema: SCHEMA_VERSION,
        r,
        theta0,
        t_max: cfg.t_max,
        dt: cfg.dt,
        delta_hit: delta,
        n_paths: cfg.n_paths,
        avoided,
        p_mc,
        p_formula,
        ci: 1.96 * (p_mc * (1.0 - p_mc) / n).sqrt(),
        bias: "finite horizon and sampled trace overestimate avoidance; the hit threshold underestimates it",
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ItoObservable {
    /// Root-only vertex `(0, 0; τ, −τ)` against `e^{τ²t + i√2τB_t}`.
    ConstantVertex { tau: f64 },
    /// `φ̂` against `√2 ∫ Re[(1+w)/(1−w)] dB`.
    SsPhiHat { z: Complex64 },
    /// `N` against `√2 ∫ w/(1−w) dB`.
    ChiralN { z: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ItoPath {
    /// L∞ pathwise residual over the alive interval.
    pub residual: f64,
    pub t_end: f64,
    pub truncated: bool,
}

/// Observable increments minus the left-point stochastic integral with the
/// same Brownian increments `ΔB = Δθ/√κ`.
pub fn ito_residual_path(obs: &ItoObservable, p: &SleCftParams, driver: &Driver) -> Result<ItoPath> {
    let sk = p.kappa.sqrt();
    let sqrt2 = 2f64.sqrt();
    let n = driver.n_steps();
    let mut residual: f64 = 0.0;
    match *obs {
        ItoObservable::ConstantVertex { tau } => {
            let mut ev = PathEvaluator::new(&Divisor::new(vec![], tau, -tau)?, p)?;
            ev.set_theta(driver.theta[0]);
            for k in 0..=n {
                if k > 0 {
                    ev.advance(driver.dt, driver.theta[k])?;
                }
                let b = (driver.theta[k] - driver.theta[0]) / sk;
                let exact = Complex64::new(tau * tau * ev.t(), sqrt2 * tau * b).exp();
                residual = residual.max((ev.current()?.value() - exact).norm());
            }
            Ok(ItoPath { residual, t_end: ev.t(), truncated: false })
        }
        ItoObservable::SsPhiHat { z } | ItoObservable::ChiralN { z } => {
            let mut tr = LoewnerTracker::with_theta(driver.theta[0]);
            tr.add_interior(z, false)?;
            let value = |tr: &LoewnerTracker| -> Result<Complex64> {
                let ch = tr.w_interior(0)?;
                match obs {
                    ItoObservable::SsPhiHat { .. } => Ok(Complex64::new(ss_phi_hat_chart(&ch, p)?, 0.0)),
                    _ => chiral_n(&ch, tr.log_w_prime_origin(), p),
                }
            };
            let integrand = |w: Complex64| -> Complex64 {
                match obs {
                    ItoObservable::SsPhiHat { .. } => Complex64::new(sqrt2 * ((1.0 + w) / (1.0 - w)).re, 0.0),
                    _ => sqrt2 * w / (1.0 - w),
                }
            };
            let x0 = value(&tr)?;
            let mut integral = Complex64::new(0.0, 0.0);
            let mut t_end = 0.0;
            for k in 0..n {
                let w = tr.w_interior(0)?.w;
                let db = (driver.theta[k + 1] - driver.theta[k]) / sk;
                tr.advance(driver.dt, driver.theta[k + 1])?;
                if !tr.all_alive() {
                    return Ok(ItoPath { residual, t_end, truncated: true });
                }
                integral += integrand(w) * db;
                residual = residual.max((value(&tr)? - x0 - integral).norm());
                t_end = tr.t;
            }
            Ok(ItoPath { residual, t_end, truncated: false })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItoReport {
    pub schema: u32,
    pub observable: ItoObservable,
    pub kappa: f64,
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: usize,
    /// Pathwise L∞ residuals at `dt` summarized over the ensemble.
    pub residual: ResidualSummary,
    /// The same on the Brownian-bridge refinements at `dt/2`.
    pub residual_refined: ResidualSummary,
    pub truncated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl ResidualSummary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n == 0 {
            f64::NAN
        } else if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let mut sum = KahanSum::default();
        values.iter().for_each(|&x| sum.add(x));
        ResidualSummary { median, mean: sum.value() / n as f64, max: v.last().copied().unwrap_or(f64::NAN) }
    }
}

const REFINE_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Runs [`ito_residual_path`] on every path at `dt` and on its refinement at `dt/2`.
pub fn pathwise_ito_residual(obs: &ItoObservable, cfg: &McConfig) -> Result<ItoReport> {
    cfg.validate()?;
    if cfg.kappa == 0.0 {
        return Err(Error::Config("the Itô residual needs κ > 0".into()));
    }
    let p = cfg.params()?;
    let pairs = cfg.par_paths(cfg.n_paths, |i| {
        let d = cfg.driver(i)?;
        let mut rng = path_rng(cfg.master_seed ^ REFINE_STREAM_SALT, i);
        let fine = d.refine(cfg.kappa, &mut rng);
        Ok((ito_residual_path(obs, &p, &d)?, ito_residual_path(obs, &p, &fine)?))
    })?;
    Ok(ItoReport {
        schema: SCHEMA_VERSION,
        observable: *obs,
        kappa: cfg.kappa,
        dt: cfg.dt,
        t_max: cfg.t_max,
        n_paths: cfg.n_paths,
        residual: ResidualSummary::of(&pairs.iter().map(|(a, _)| a.residual).collect::<Vec<_>>()),
        residual_refined: ResidualSummary::of(&pairs.iter().map(|(_, b)| b.residual).collect::<Vec<_>>()),
        truncated: pairs.iter().filter(|(a, b)| a.truncated || b.truncated).count(),
    })
}

/// Panel width divisor against `d²` and `d/ω`.
const PANEL_FACTOR: f64 = 64.0;
const MAX_PANELS: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HadamardPath {
    /// L∞ of `|ΔG/Δt − rate|`, the rate averaged over each step by composite Simpson.
    pub rate_residual: f64,
    /// Realized `Σ Δφ̂(z1)Δφ̂(z2)`; absent when a point is the origin.
    pub covariation: Option<f64>,
    /// `−2(G_end − G_0)`.
    pub minus_two_delta_g: f64,
    pub t_end: f64,
    pub truncated: bool,
}

pub fn hadamard_path(z1: Complex64, z2: Complex64, p: &SleCftParams, driver: &Driver) -> Result<HadamardPath> {
    if z1 == z2 {
        return Err(Error::Singularity("coincident points".into()));
    }
    let mut tr = LoewnerTracker::with_theta(driver.theta[0]);
    tr.add_interior_accurate(z1)?;
    tr.add_interior_accurate(z2)?;
    let with_phi = z1.norm() > 0.0 && z2.norm() > 0.0;
    let state = |tr: &LoewnerTracker| -> Result<(f64, f64, f64, f64)> {
        let (c1, c2) = (tr.w_interior(0)?, tr.w_interior(1)?);
        let (f1, f2) = if with_phi { (ss_phi_hat_chart(&c1, p)?, ss_phi_hat_chart(&c2, p)?) } else { (0.0, 0.0) };
        Ok((green(c1.w, c2.w)?, hadamard_rate(c1.w, c2.w), f1, f2))
    };
    let (g0, mut rate, mut f1, mut f2) = state(&tr)?;
    let mut g = g0;
    let mut cov = KahanSum::default();
    let mut rate_residual: f64 = 0.0;
    let mut truncated = false;
    let dt = driver.dt;
    'steps: for k in 0..driver.n_steps() {
        let (th0, th1) = (driver.theta[k], driver.theta[k + 1]);
        // adaptive composite Simpson; panels shrink near the tip, where the rate varies on scale d²
        let omega = (th1 - th0).abs() / dt;
        let mut avg = KahanSum::default();
        let mut ra = rate;
        let mut s = 0.0;
        while s < dt {
            let d = (1.0 - tr.w_interior(0)?.w).norm().min((1.0 - tr.w_interior(1)?.w).norm());
            let mut h = d * d / PANEL_FACTOR;
            if omega > 0.0 {
                h = h.min(d / (PANEL_FACTOR * omega));
            }
            h = h.min(dt / 2.0).max(dt / MAX_PANELS as f64);
            let last = s + h >= dt * (1.0 - 1e-12);
            if last {
                h = dt - s;
            }
            let (s_mid, s_end) = (s + 0.5 * h, if last { dt } else { s + h });
            tr.advance(0.5 * h, th0 + (th1 - th0) * (s_mid / dt))?;
            if !tr.all_alive() {
                truncated = true;
                break 'steps;
            }
            let rm = hadamard_rate(tr.w_interior(0)?.w, tr.w_interior(1)?.w);
            tr.advance(s_end - s_mid, if last { th1 } else { th0 + (th1 - th0) * (s_end / dt) })?;
            if !tr.all_alive() {
                truncated = true;
                break 'steps;
            }
            let rb = hadamard_rate(tr.w_interior(0)?.w, tr.w_interior(1)?.w);
            avg.add((ra + 4.0 * rm + rb) * h / (6.0 * dt));
            ra = rb;
            s = s_end;
        }
        let (gn, rn, f1n, f2n) = state(&tr)?;
        rate_residual = rate_residual.max(((gn - g) / dt - avg.value()).abs());
        cov.add((f1n - f1) * (f2n - f2));
        (g, rate, f1, f2) = (gn, rn, f1n, f2n);
    }
    Ok(HadamardPath {
        rate_residual,
        covariation: with_phi.then(|| cov.value()),
        minus_two_delta_g: -2.0 * (g - g0),
        t_end: tr.t,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HadamardReport {
    pub schema: u32,
    pub z1: Complex64,
    pub z2: Complex64,
    pub kappa: f64,
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: usize,
    /// Largest pathwise rate residual.
    pub rate_residual: f64,
    pub covariation_mean: Option<f64>,
    pub covariation_stderr: Option<f64>,
    pub minus_two_delta_g_mean: f64,
    pub covariation_rel_error: Option<f64>,
    pub truncated: usize,
}

/// Hadamard's variation along simulated paths, pathwise and in quadratic covariation.
pub fn hadamard_check(z1: Complex64, z2: Complex64, cfg: &McConfig) -> Result<HadamardReport> {
    cfg.validate()?;
    let p = cfg.params()?;
    let paths = cfg.par_paths(cfg.n_paths, |i| hadamard_path(z1, z2, &p, &cfg.driver(i)?))?;
    let mut cov = Moments::default();
    let mut pred = Moments::default();
    for h in &paths {
        if let Some(c) = h.covariation {
            cov.push(c);
        }
        pred.push(h.minus_two_delta_g);
    }
    let has_cov = cov.count() > 0;
    let covariation_rel_error = has_cov.then(|| ((cov.mean() - pred.mean()) / pred.mean()).abs());
    Ok(HadamardReport {
        schema: SCHEMA_VERSION,
        z1,
        z2,
        kappa: cfg.kappa,
        dt: cfg.dt,
        t_max: cfg.t_max,
        n_paths: cfg.n_paths,
        rate_residual: paths.iter().map(|h| h.rate_residual).fold(0.0, f64::max),
        covariation_mean: has_cov.then(|| cov.mean()),
        covariation_stderr: has_cov.then(|| cov.stderr()),
        minus_two_delta_g_mean: pred.mean(),
        covariation_rel_error,
        truncated: paths.iter().filter(|h| h.truncated).count(),
    })
}
