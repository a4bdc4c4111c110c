//! Boundary derivative exponents, the radial Friedrich–Werner limit and
//! Hadamard's variation of the Green's function.

use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::{green, slit_map};
use crate::error::{Error, Result};
use crate::loewner::BoundaryChart;
use crate::params::SleCftParams;

/// `M_t(e^{iθ}) = e^{2ĥ_q t}|w_t'|^h (sin²(φ_t/2))^{aσ/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryDerivObservable {
    pub h: f64,
    pub sigma: f64,
    pub h_q_hat: f64,
    pub a: f64,
}

impl BoundaryDerivObservable {
    pub fn log_value(&self, t: f64, chart: &BoundaryChart) -> f64 {
        let s = (chart.phi / 2.0).sin().abs();
        2.0 * self.h_q_hat * t + self.h * chart.log_abs_w_prime + self.a * self.sigma * s.ln()
    }

    pub fn value(&self, t: f64, chart: &BoundaryChart) -> f64 {
        self.log_value(t, chart).exp()
    }

    /// Angular profile `sin(θ/2)^{aσ}`.
    pub fn profile(&self, theta: f64) -> f64 {
        (theta / 2.0).sin().abs().powf(self.a * self.sigma)
    }
}

/// Larger root `σ₊ = (a/4)(κ − 4 + √((κ−4)² + 16κh))` of `σ²/2 − bσ = h`, with `ĥ_q = σ²/8 + aσ/4`.
pub fn boundary_deriv_observable(h: f64, p: &SleCftParams) -> Result<BoundaryDerivObservable> {
    let k = p.kappa;
    let disc = (k - 4.0).powi(2) + 16.0 * k * h;
    if disc < 0.0 {
        return Err(Error::Domain(format!("h = {h} below the admissible range for κ = {k}")));
    }
    let sigma = p.a / 4.0 * (k - 4.0 + disc.sqrt());
    Ok(BoundaryDerivObservable { h, sigma, h_q_hat: sigma * sigma / 8.0 + p.a * sigma / 4.0, a: p.a })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FwLimit {
    pub theta: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl FwLimit {
    pub fn relative_error(&self) -> f64 {
        ((self.lhs - self.rhs) / self.rhs).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlitRadius {
    /// Slit tip chosen so that the slit has log-capacity exactly `t`.
    Capacity,
    /// Slit of length `2√t`.
    Literal,
}

impl SlitRadius {
    pub fn radius(self, t: f64) -> f64 {
        match self {
            SlitRadius::Capacity => {
                let q = 2.0 * t.exp() - 1.0;
                // smaller root of r² + (2 − 4eᵗ) r + 1 = 0, written to avoid cancellation
                1.0 / (q + (q * q - 1.0).sqrt())
            }
            SlitRadius::Literal => 1.0 - 2.0 * t.sqrt(),
        }
    }
}

/// Small-slit expansion at κ = 8/3: the avoidance defect of a capacity-`t`
/// slit at angle `θ`, divided by `2t`, against `5/(32 sin²(θ/2)) − 5/96`.
pub fn fw_limit_check(theta: f64, t: f64) -> Result<FwLimit> {
    fw_limit_check_with(theta, t, SlitRadius::Capacity)
}

pub fn fw_limit_check_with(theta: f64, t: f64, radius: SlitRadius) -> Result<FwLimit> {
    if !(t > 0.0 && t < 0.25) {
        return Err(Error::Domain(format!("t = {t} must lie in (0, 1/4)")));
    }
    let s = (theta / 2.0).sin();
    if s.abs() < 1e-12 {
        return Err(Error::Domain("slit may not sit at the start point".into()));
    }
    let p = SleCftParams::from_kappa(8.0 / 3.0)?;
    let psi = slit_map(radius.radius(t), theta)?;
    let d1 = psi.deriv_boundary(0.0)?.norm();
    let d0 = psi.deriv_at_zero();
    let lhs = (1.0 - d1.powf(p.lambda()) * d0.powf(p.mu())) / (2.0 * t);
    let rhs = p.h12 / (4.0 * s * s) - p.h0half;
    Ok(FwLimit { theta, t, lhs, rhs })
}

/// Green's function `G(w1, w2)` and its predicted rate
/// `−Re[(1+w1)/(1−w1)]·Re[(1+w2)/(1−w2)]` along the flow.
pub fn hadamard_pair(w1: Complex64, w2: Complex64) -> Result<(f64, f64)> {
    let g = green(w1, w2)?;
    Ok((g, hadamard_rate(w1, w2)))
}

pub fn hadamard_rate(w1: Complex64, w2: Complex64) -> f64 {
    let pf = |w: Complex64| ((1.0 + w) / (1.0 - w)).re;
    -pf(w1) * pf(w2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::bpz::bpz_residual_boundary_rooted;
    use std::f64::consts::PI;

    #[test]
    fn derivative_exponent_roots() {
        let p = SleCftParams::from_kappa(6.0).unwrap();
        let o = boundary_deriv_observable(0.0, &p).unwrap();
        assert!((o.sigma - p.a).abs() < 1e-14);
        assert!((2.0 * o.h_q_hat - 0.25).abs() < 1e-14);
        assert!((o.a * o.sigma - 1.0 / 3.0).abs() < 1e-14);
        for kappa in [1.0, 2.0, 8.0 / 3.0, 4.0, 6.0, 8.0] {
            let p = SleCftParams::from_kappa(kappa).unwrap();
            let o = boundary_deriv_observable(p.h12, &p).unwrap();
            assert!((o.sigma - p.a).abs() < 1e-12);
            for h in [0.0, 0.3, 1.0, 2.5] {
                let o = boundary_deriv_observable(h, &p).unwrap();
                assert!((o.sigma * o.sigma / 2.0 - p.b * o.sigma - h).abs() < 1e-12);
                // hatted boundary one-point profile solves the rooted scalar equation
                for th in [0.7, PI, 5.0] {
                    let r = bpz_residual_boundary_rooted(|x| o.profile(x), h, 2.0 * o.h_q_hat, &p, th).unwrap();
                    assert!(r.abs() < 1e-4, "κ={kappa} h={h} θ={th}: {r}");
                }
            }
        }
        assert!(boundary_deriv_observable(-10.0, &SleCftParams::from_kappa(2.0).unwrap()).is_err());
    }

    #[test]
    fn fw_limit() {
        for theta in [PI / 2.0, PI] {
            let r = fw_limit_check(theta, 1e-4).unwrap();
            assert!(r.relative_error() < 0.02, "{r:?}");
            // the literal slit length carries an O(√t) capacity mismatch
            let l = fw_limit_check_with(theta, 1e-4, SlitRadius::Literal).unwrap();
            assert!(l.relative_error() > r.relative_error());
        }
        for t in [1e-4, 1e-2, 0.2] {
            let r = SlitRadius::Capacity.radius(t);
            assert!(((1.0 + r).powi(2) / (4.0 * r) - t.exp()).abs() < 1e-12);
            assert!((slit_map(r, 1.0).unwrap().deriv_at_zero() - t.exp()).abs() < 1e-10 * t.exp());
        }
        assert!((fw_limit_check(PI, 1e-4).unwrap().rhs - 5.0 / 48.0).abs() < 1e-15);
        assert!(fw_limit_check(PI, 0.3).is_err());
        assert!(fw_limit_check(0.0, 1e-4).is_err());
        let p = SleCftParams::from_kappa(8.0 / 3.0).unwrap();
        assert!((p.lambda() / 6.0 - p.mu()).abs() < 1e-15);
    }

    #[test]
    fn hadamard_values() {
        let (g, rate) = hadamard_pair(Complex64::new(0.5, 0.0), Complex64::new(-0.5, 0.0)).unwrap();
        assert!((rate + 1.0).abs() < 1e-15);
        assert!((g - 1.25f64.ln()).abs() < 1e-15);
        let w = Complex64::new(0.2, 0.4);
        let (g, rate) = hadamard_pair(w, Complex64::new(0.0, 0.0)).unwrap();
        assert!((g + w.norm().ln()).abs() < 1e-15);
        assert!((rate + ((1.0 + w) / (1.0 - w)).re).abs() < 1e-15);
        let w2 = Complex64::new(-0.3, 0.1);
        assert_eq!(hadamard_rate(w, w2), hadamard_rate(w2, w));
        assert!(hadamard_pair(w, w).is_err());
    }
}
