//! Named closed-form martingale-observables and deterministic functional checks.

mod boundary;
mod bpz;
pub mod expr;

pub use boundary::{
    boundary_deriv_observable, fw_limit_check, fw_limit_check_with, hadamard_pair, hadamard_rate,
    BoundaryDerivObservable, FwLimit, SlitRadius,
};
pub use bpz::{
    bpz_residual_boundary_rooted, bpz_residual_boundary_scalar, bpz_residual_virasoro, bpz_residual_virasoro_with,
    t_hat_1pt, t_hat_1pt_derivs, t_hat_npoint, THatRecursion, MAX_EXTRA_POINTS,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loewner::InteriorChart;
use crate::params::{DimensionSet, SleCftParams};

fn log_w(ch: &InteriorChart) -> Result<Complex64> {
    ch.log_w.ok_or_else(|| Error::Singularity("observable undefined at the origin".into()))
}

/// Poisson-kernel ratio `(1 − |w|²)/|1 − w|²`.
pub fn lsw_poisson(w: Complex64) -> Result<f64> {
    if !(w.norm() <= 1.0) {
        return Err(Error::Domain(format!("{w} outside the closed disk")));
    }
    let d = (1.0 - w).norm_sqr();
    if d == 0.0 {
        return Err(Error::Singularity("w = 1".into()));
    }
    Ok((1.0 - w.norm_sqr()) / d)
}

/// `log[e^{t/4}(1−w)^{1/3} w^{−1/6}]` with continuous `log w`.
pub fn lsw6_log(log_w: Complex64, w: Complex64, t: f64) -> Result<Complex64> {
    if w.norm() == 0.0 {
        return Err(Error::Singularity("w = 0".into()));
    }
    Ok(t / 4.0 + (1.0 - w).ln() / 3.0 - log_w / 6.0)
}

/// `e^{t/4}(1−w)^{1/3} w^{−1/6}` on the sheet of `log_w`; `0` at `w = 1`.
pub fn lsw6(log_w: Complex64, w: Complex64, t: f64) -> Result<Complex64> {
    if w == Complex64::new(1.0, 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(lsw6_log(log_w, w, t)?.exp())
}

/// `(arg[(1−w) w^{−3/2} w'], S_w + (3/8)(w'/w)²(1 − 4w/(1−w)²))`, conserved by the κ = 0 flow.
pub fn sle0_pair(ch: &InteriorChart) -> Result<(f64, Complex64)> {
    let lw = log_w(ch)?;
    if ch.w == Complex64::new(1.0, 0.0) {
        return Err(Error::Singularity("w = 1".into()));
    }
    let s = ch.schwarzian.ok_or_else(|| Error::Config("Schwarzian not tracked for this point".into()))?;
    let first = (ch.log_one_minus_w - 1.5 * lw + ch.log_w_prime).im;
    let q = ch.w_prime / ch.w;
    let om = 1.0 - ch.w;
    let second = s + 0.375 * q * q * (1.0 - 4.0 * ch.w / (om * om));
    Ok((first, second))
}

/// `φ̂ = 2a·arg(1−w) − a·arg w − 2b·arg(w'/w)` from continuous arguments.
pub fn ss_phi_hat(arg_w: f64, arg_one_minus_w: f64, arg_wp_over_w: f64, p: &SleCftParams) -> f64 {
    2.0 * p.a * arg_one_minus_w - p.a * arg_w - 2.0 * p.b * arg_wp_over_w
}

pub fn ss_phi_hat_chart(ch: &InteriorChart, p: &SleCftParams) -> Result<f64> {
    let lw = log_w(ch)?;
    Ok(ss_phi_hat(lw.im, ch.log_one_minus_w.im, ch.log_w_prime.im - lw.im, p))
}

/// Conformal radius `(1 − |w|²)/|w'|` of the current domain seen from the point.
pub fn conformal_radius(ch: &InteriorChart) -> f64 {
    (1.0 - ch.w.norm_sqr()) / ch.w_prime.norm()
}

/// `log` of the exponential martingale `e^{αφ̂_t}(C_t/C_0)^{α²}`; `c0 = 1 − |z|²`.
pub fn ss_phi_hat_exp_log(alpha: f64, ch: &InteriorChart, c0: f64, p: &SleCftParams) -> Result<f64> {
    Ok(alpha * ss_phi_hat_chart(ch, p)? + alpha * alpha * (conformal_radius(ch) / c0).ln())
}

/// Rooted chiral field `N(z) = −ia log(1−w) + (ia/2) log(w/w_q') + ib log(w'/w)`.
pub fn chiral_n(ch: &InteriorChart, log_wq_prime: Complex64, p: &SleCftParams) -> Result<Complex64> {
    let lw = log_w(ch)?;
    let i = Complex64::new(0.0, 1.0);
    Ok(-i * p.a * ch.log_one_minus_w + i * p.a / 2.0 * (lw - log_wq_prime) + i * p.b * (ch.log_w_prime - lw))
}

/// `log[w'(z) w_q' / w²]`, whose increment is the quadratic variation of `N`.
pub fn chiral_n_bracket_log(ch: &InteriorChart, log_wq_prime: Complex64) -> Result<Complex64> {
    Ok(ch.log_w_prime + log_wq_prime - 2.0 * log_w(ch)?)
}

/// Bi-point chiral field `M(z, z0) = N(z) − N(z0)` (the root terms cancel).
pub fn chiral_m(ch: &InteriorChart, ch0: &InteriorChart, p: &SleCftParams) -> Result<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    Ok(chiral_n(ch, zero, p)? - chiral_n(ch0, zero, p)?)
}

/// `log[w'(z) w'(z0)/(w(z) − w(z0))²]` given the continued `log(w(z) − w(z0))`.
pub fn chiral_m_bracket_log(ch: &InteriorChart, ch0: &InteriorChart, log_diff: Complex64) -> Complex64 {
    ch.log_w_prime + ch0.log_w_prime - 2.0 * log_diff
}

/// `exp(αX − (α²/2)(B − B_0))` for a chiral field value `X` and bracket logs `B`, `B_0`.
pub fn chiral_exponential(alpha: f64, x: Complex64, bracket: Complex64, bracket0: Complex64) -> Complex64 {
    (alpha * x - alpha * alpha / 2.0 * (bracket - bracket0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Interior,
    Boundary,
}

/// Catalog entry describing an observable and its inputs.
#[derive(Debug, Clone, Serialize)]
pub struct ObservableSpec {
    pub name: &'static str,
    pub formula: &'static str,
    pub inputs: Vec<NodeRole>,
    pub params: Vec<&'static str>,
    pub kappa: Option<f64>,
    pub dimensions: Option<DimensionSet>,
    /// Usable as `--observable` in Monte-Carlo tests.
    pub monte_carlo: bool,
}

/// The catalog at a given κ (dimensions depend on κ).
pub fn catalog(p: &SleCftParams) -> Vec<ObservableSpec> {
    use NodeRole::*;
    let a = p.a;
    vec![
        ObservableSpec {
            name: "lsw_poisson",
            formula: "(1 - |w|^2) / |1 - w|^2",
            inputs: vec![Interior],
            params: vec![],
            kappa: Some(2.0),
            dimensions: SleCftParams::from_kappa(2.0).ok().map(|q| q.vertex_dimensions(-q.a, -q.a, q.a, q.a)),
            monte_carlo: true,
        },
        ObservableSpec {
            name: "lsw6",
            formula: "exp(t/4) (1 - w)^(1/3) w^(-1/6)",
            inputs: vec![Interior],
            params: vec![],
            kappa: Some(6.0),
            dimensions: SleCftParams::from_kappa(6.0).ok().map(|q| q.one_leg_dimensions()),
            monte_carlo: true,
        },
        ObservableSpec {
            name: "sle0_pair",
            formula: "(arg[(1 - w) w^(-3/2) w'], S_w + (3/8)(w'/w)^2 (1 - 4w/(1 - w)^2))",
            inputs: vec![Interior],
            params: vec![],
            kappa: Some(0.0),
            dimensions: None,
            monte_carlo: true,
        },
        ObservableSpec {
            name: "ss_phi_hat",
            formula: "2a arg(1 - w) - a arg w - 2b arg(w'/w)",
            inputs: vec![Interior],
            params: vec![],
            kappa: None,
            dimensions: None,
            monte_carlo: true,
        },
        ObservableSpec {
            name: "ss_phi_hat_exp",
            formula: "exp(alpha phi_hat) (C_t / C_0)^(alpha^2), C = (1 - |w|^2)/|w'|",
            inputs: vec![Interior],
            params: vec!["alpha"],
            kappa: None,
            dimensions: None,
            monte_carlo: true,
        },
        ObservableSpec {
            name: "constant_vertex",
            formula: "|w_q'|^(tau^2) (w_q'/|w_q'|)^(-tau a), charges (0,0; tau,-tau)",
            inputs: vec![],
            params: vec!["tau"],
            kappa: None,
            dimensions: Some(p.vertex_dimensions(0.0, 0.0, 0.7, -0.7)),
            monte_carlo: true,
        },
        ObservableSpec {
            name: "real_vertex",
            formula: "hatted vertex correlator with charges (-a,-a; a,a)",
            inputs: vec![Interior],
            params: vec![],
            kappa: None,
            dimensions: Some(p.vertex_dimensions(-a, -a, a, a)),
            monte_carlo: true,
        },
        ObservableSpec {
            name: "one_leg",
            formula: "hatted vertex correlator with charges (a,0; -a/2,-a/2)",
            inputs: vec![Interior],
            params: vec![],
            kappa: None,
            dimensions: Some(p.one_leg_dimensions()),
            monte_carlo: true,
        },
        ObservableSpec {
            name: "vertex",
            formula: "hatted vertex correlator of an arbitrary divisor (--divisor)",
            inputs: vec![Interior],
            params: vec!["divisor"],
            kappa: None,
            dimensions: None,
            monte_carlo: true,
        },
        ObservableSpec {
            name: "chiral_n_exp",
            formula: "exp(alpha N - (alpha^2/2) <N>), N = -ia log(1-w) + (ia/2) log(w/w_q') + ib log(w'/w)",
            inputs: vec![Interior],
            params: vec!["alpha"],
            kappa: None,
            dimensions: None,
            monte_carlo: true,
        },
        ObservableSpec {
            name: "boundary_deriv",
            formula: "exp(2 hq t) |w'|^h sin(phi/2)^(a sigma)",
            inputs: vec![Boundary],
            params: vec!["h"],
            kappa: None,
            dimensions: None,
            monte_carlo: true,
        },
        ObservableSpec {
            name: "t_hat_1pt",
            formula: "h12/(z(1-z)^2) + h0half/z^2",
            inputs: vec![Interior],
            params: vec![],
            kappa: None,
            dimensions: None,
            monte_carlo: false,
        },
        ObservableSpec {
            name: "hadamard_pair",
            formula: "G(w1,w2), rate -Re[(1+w1)/(1-w1)] Re[(1+w2)/(1-w2)]",
            inputs: vec![Interior, Interior],
            params: vec![],
            kappa: None,
            dimensions: None,
            monte_carlo: false,
        },
    ]
}

pub fn lookup(name: &str, p: &SleCftParams) -> Result<ObservableSpec> {
    catalog(p).into_iter().find(|s| s.name == name).ok_or_else(|| Error::Config(format!("unknown observable {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::{Driver, LoewnerTracker};
    use crate::vertex::{eval_hatted, Chart, Divisor};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn poisson_values() {
        assert_eq!(lsw_poisson(c(0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(lsw_poisson(c(-1.0, 0.0)).unwrap(), 0.0);
        assert!((lsw_poisson(c(0.5, 0.0)).unwrap() - 3.0).abs() < 1e-15);
        assert!(lsw_poisson(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn lsw6_is_the_hatted_one_leg_at_kappa_six() {
        let p = SleCftParams::from_kappa(6.0).unwrap();
        let z = c(0.3, -0.5);
        let v = lsw6(z.ln(), z, 0.0).unwrap();
        let d = Divisor::one_leg(z, &p).unwrap();
        let want = eval_hatted(&d, &p, &Chart::identity(&[z])).unwrap().value();
        assert!((v - want).norm() < 1e-14);
        let x = 0.4;
        let v = lsw6(c(x, 0.0).ln(), c(x, 0.0), 0.0).unwrap();
        assert!(v.im == 0.0 && v.re > 0.0);
        assert_eq!(lsw6(c(0.0, 0.0), c(1.0, 0.0), 0.0).unwrap(), c(0.0, 0.0));
        assert!(lsw6(c(0.0, 0.0), c(0.0, 0.0), 0.0).is_err());
        let dims = p.one_leg_dimensions();
        assert!((dims.h_q_hat + dims.h_q_star_hat - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identity_chart_values() {
        let p = SleCftParams::from_kappa(4.0).unwrap();
        let z = c(0.6, 0.0);
        let ch = InteriorChart::identity(z);
        let (f, s) = sle0_pair(&ch).unwrap();
        assert!(f.abs() < 1e-15);
        let want = 0.375 / (z * z) * (1.0 - 4.0 * z / ((1.0 - z) * (1.0 - z)));
        assert!((s - want).norm() < 1e-14);
        assert_eq!(ss_phi_hat_chart(&ch, &p).unwrap(), 0.0);
        let zi = c(0.0, 0.5);
        let v = ss_phi_hat_chart(&InteriorChart::identity(zi), &p).unwrap();
        assert!((v - (2.0 * p.a * (1.0 - zi).arg() - p.a * std::f64::consts::FRAC_PI_2)).abs() < 1e-15);
        let (z, z0) = (c(0.3, 0.0), c(0.7, 0.0));
        let m = chiral_m(&InteriorChart::identity(z), &InteriorChart::identity(z0), &p).unwrap();
        assert!(m.re.abs() < 1e-15);
        let i = c(0.0, 1.0);
        let want = -i * p.a * ((1.0 - z) / (1.0 - z0)).ln() + i * p.a / 2.0 * (z / z0).ln();
        assert!((m - want).norm() < 1e-14);
        assert_eq!(chiral_exponential(0.0, m, c(1.0, 2.0), c(0.0, 0.0)), c(1.0, 0.0));
    }

    #[test]
    fn sle0_pair_conserved_by_deterministic_flow() {
        let d = Driver::constant(0.0, 1e-3, 1000).unwrap();
        let zs = [c(0.3, 0.0), c(0.0, 0.5), c(-0.6, 0.0)];
        let mut tr = LoewnerTracker::new();
        for z in zs {
            tr.add_interior(z, true).unwrap();
        }
        let init: Vec<_> = (0..3).map(|i| sle0_pair(&tr.w_interior(i).unwrap()).unwrap()).collect();
        while tr.step(&d).unwrap() {
            for (i, (f0, s0)) in init.iter().enumerate() {
                let Ok(ch) = tr.w_interior(i) else { continue };
                let (f, s) = sle0_pair(&ch).unwrap();
                assert!((f - f0).abs() <= 1e-5 * f0.abs().max(1.0), "{i} {f} {f0}");
                assert!((s - s0).norm() <= 1e-5 * s0.norm().max(1.0), "{i} {s} {s0}");
            }
        }
    }

    #[test]
    fn catalog_is_consistent() {
        let p = SleCftParams::from_kappa(8.0 / 3.0).unwrap();
        let cat = catalog(&p);
        let mut names: Vec<_> = cat.iter().map(|s| s.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), cat.len());
        assert!(lookup("lsw6", &p).is_ok());
        assert!(lookup("nope", &p).is_err());
        let json = serde_json::to_string(&cat).unwrap();
        assert!(json.contains("\"name\":\"lsw_poisson\""));
    }
}
