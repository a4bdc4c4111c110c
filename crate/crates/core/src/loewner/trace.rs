use num_complex::Complex64;

use super::{xi_of, Driver, SUBSTEP_C};

const OMEGA_DIV: f64 = 8.0;

/// Radial offset of the starting point of the backward flow.
pub const TIP_EPS: f64 = 1e-3;

fn v(g: Complex64, xi: Complex64) -> Complex64 {
    g * (xi + g) / (xi - g)
}

/// Integrates `∂_s g = v(g, ξ_s)` backward over driver step `j`, from `s = (j+1)dt` to `j·dt`.
fn backward_step(mut g: Complex64, dt: f64, th0: f64, th1: f64) -> Complex64 {
    let omega = (th1 - th0).abs() / dt;
    // s counts down from dt to 0 in local time
    let mut s = dt;
    while s > 0.0 {
        let th = th0 + (th1 - th0) * (s / dt);
        let d = (xi_of(th) - g).norm().max(1e-12);
        let mut h = s.min(SUBSTEP_C * d * d);
        if omega > 0.0 {
            h = h.min(d / (OMEGA_DIV * omega));
        }
        let last = h == s;
        let tha = th;
        let thb = if last { th0 } else { th0 + (th1 - th0) * ((s - h) / dt) };
        let (xa, xm, xb) = (xi_of(tha), xi_of(0.5 * (tha + thb)), xi_of(thb));
        let k1 = v(g, xa);
        let k2 = v(g - 0.5 * h * k1, xm);
        let k3 = v(g - 0.5 * h * k2, xm);
        let k4 = v(g - h * k3, xb);
        g -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s = if last { 0.0 } else { s - h };
    }
    g
}

/// Approximate tip `γ_{k·dt}`: the backward flow started at `(1 − TIP_EPS)ξ_t`.
pub fn trace_at(driver: &Driver, k: usize) -> Complex64 {
    trace_tip(driver, k, TIP_EPS)
}

pub fn trace_tip(driver: &Driver, k: usize, eps: f64) -> Complex64 {
    let k = k.min(driver.n_steps());
    if k == 0 {
        return xi_of(driver.theta[0]);
    }
    let mut g = (1.0 - eps) * xi_of(driver.theta[k]);
    for j in (0..k).rev() {
        g = backward_step(g, driver.dt, driver.theta[j], driver.theta[j + 1]);
    }
    g
}

/// Polyline of `n_samples` tips at evenly spaced grid indices over the whole driver.
pub fn trace(driver: &Driver, n_samples: usize) -> Vec<Complex64> {
    let n = driver.n_steps();
    let m = n_samples.max(2);
    (0..m)
        .map(|i| {
            let k = ((i as f64) * n as f64 / (m - 1) as f64).round() as usize;
            trace_at(driver, k)
        })
        .collect()
}
