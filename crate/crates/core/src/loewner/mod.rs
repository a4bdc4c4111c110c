//! Radial Loewner flow `∂_t g = g(ξ+g)/(ξ−g)`, `ξ = e^{iθ_t}`, for a sampled driver.

mod driver;
mod trace;

pub use driver::{path_rng, Driver, DriverKind};
pub use trace::{trace, trace_at, trace_tip, TIP_EPS};

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Points closer than this to the driver (chordally) count as swallowed.
pub const SWALLOW_EPS: f64 = 1e-4;
/// Substep length is at most `SUBSTEP_C · d²`, `d` the distance to the driver.
pub(crate) const SUBSTEP_C: f64 = 0.05;
/// Tighter bound for accurate tracking; the Schwarzian rate grows like `d⁻⁶`.
pub const SUBSTEP_C_ACCURATE: f64 = 0.0005;
/// Per substep the driver moves by at most `d / OMEGA_DIV`.
pub(crate) const OMEGA_DIV: f64 = 32.0;
const MAX_SUBSTEPS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PointStatus {
    Alive,
    Swallowed { tau: f64 },
}

impl PointStatus {
    pub fn is_alive(&self) -> bool {
        matches!(self, PointStatus::Alive)
    }
}

#[derive(Debug, Clone, Copy)]
struct IState {
    g: Complex64,
    log_g: Complex64,
    log_gp: Complex64,
    n: Complex64,
    s: Complex64,
}

impl IState {
    fn axpy(&self, h: f64, d: &IState) -> IState {
        IState {
            g: self.g + d.g * h,
            log_g: self.log_g + d.log_g * h,
            log_gp: self.log_gp + d.log_gp * h,
            n: self.n + d.n * h,
            s: self.s + d.s * h,
        }
    }
}

fn ideriv(y: &IState, xi: Complex64, higher: bool) -> IState {
    let q = xi - y.g;
    let r = (xi + y.g) / q;
    let q2 = q * q;
    let xi2 = xi * xi;
    let dp = (xi2 + 2.0 * xi * y.g - y.g * y.g) / q2;
    let (dn, ds) = if higher {
        let e = y.log_gp.exp();
        (4.0 * xi2 / (q2 * q) * e, 12.0 * xi2 / (q2 * q2) * e * e)
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    };
    IState { g: y.g * r, log_g: r, log_gp: dp, n: dn, s: ds }
}

fn xi_of(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// An interior point `z0` followed by the flow.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InteriorTracked {
    pub z0: Complex64,
    /// `g_t(z0)`.
    pub g: Complex64,
    /// Continuous `log g_t(z0)`; `None` when `z0 = 0`.
    pub log_g: Option<Complex64>,
    /// Continuous `log g_t'(z0)`.
    pub log_g_prime: Complex64,
    /// `g''/g'` and the Schwarzian of `g_t` at `z0`, when requested.
    pub pre_schwarzian: Option<Complex64>,
    pub schwarzian: Option<Complex64>,
    pub status: PointStatus,
    substep_c: f64,
}

impl InteriorTracked {
    fn new(z0: Complex64, higher: bool) -> Result<Self> {
        if !(z0.norm() < 1.0) {
            return Err(Error::Domain(format!("interior point {z0} must lie in the open unit disk")));
        }
        let zero = Complex64::new(0.0, 0.0);
        Ok(InteriorTracked {
            z0,
            g: z0,
            log_g: if z0 == zero { None } else { Some(z0.ln()) },
            log_g_prime: zero,
            pre_schwarzian: higher.then_some(zero),
            schwarzian: higher.then_some(zero),
            status: PointStatus::Alive,
            substep_c: if higher { SUBSTEP_C_ACCURATE } else { SUBSTEP_C },
        })
    }

    fn state(&self) -> IState {
        let zero = Complex64::new(0.0, 0.0);
        IState {
            g: self.g,
            log_g: self.log_g.unwrap_or(zero),
            log_gp: self.log_g_prime,
            n: self.pre_schwarzian.unwrap_or(zero),
            s: self.schwarzian.unwrap_or(zero),
        }
    }

    fn set_state(&mut self, y: &IState) {
        self.g = y.g;
        if self.log_g.is_some() {
            // keep the continuous log consistent with g, only the sheet comes from the ODE
            let principal = y.g.ln();
            let turns = ((y.log_g.im - principal.im) / (2.0 * PI)).round();
            self.log_g = Some(principal + Complex64::new(0.0, 2.0 * PI * turns));
        }
        self.log_g_prime = y.log_gp;
        if self.pre_schwarzian.is_some() {
            self.pre_schwarzian = Some(y.n);
            self.schwarzian = Some(y.s);
        }
    }

    fn rk4(&self, y: &IState, th0: f64, th_mid: f64, th1: f64, h: f64) -> IState {
        let higher = self.pre_schwarzian.is_some();
        let (x0, xm, x1) = (xi_of(th0), xi_of(th_mid), xi_of(th1));
        let k1 = ideriv(y, x0, higher);
        let k2 = ideriv(&y.axpy(h / 2.0, &k1), xm, higher);
        let k3 = ideriv(&y.axpy(h / 2.0, &k2), xm, higher);
        let k4 = ideriv(&y.axpy(h, &k3), x1, higher);
        let mut out = *y;
        for (w, k) in [(1.0, k1), (2.0, k2), (2.0, k3), (1.0, k4)] {
            out = out.axpy(h * w / 6.0, &k);
        }
        out
    }

    /// Advances over `[t, t+dt]` with `θ` linear from `th0` to `th1`.
    /// Returns `false` if the point got swallowed.
    fn advance(&mut self, dt: f64, th0: f64, th1: f64) -> bool {
        let omega = (th1 - th0).abs() / dt;
        let cfac = self.substep_c;
        let mut y = self.state();
        let mut s = 0.0;
        let mut count = 0;
        while s < dt {
            let th = th0 + (th1 - th0) * (s / dt);
            let d = (xi_of(th) - y.g).norm();
            if d < SWALLOW_EPS || !(y.g.norm() < 1.0) || count > MAX_SUBSTEPS {
                self.set_state(&y);
                return false;
            }
            let rem = dt - s;
            let mut h = rem.min(cfac * d * d);
            if omega > 0.0 {
                h = h.min(d / (OMEGA_DIV * omega));
            }
            let next = loop {
                let (a, b) = (s / dt, (s + h) / dt);
                let tha = th0 + (th1 - th0) * a;
                let thb = if h == rem { th1 } else { th0 + (th1 - th0) * b };
                let next = self.rk4(&y, tha, 0.5 * (tha + thb), thb, h);
                let jump = (next.log_g.im - y.log_g.im).abs().max((next.log_gp.im - y.log_gp.im).abs());
                if jump < FRAC_PI_2 && next.g.is_finite() || h < 1e-300 {
                    break next;
                }
                h *= 0.5;
            };
            y = next;
            s = if h == rem { dt } else { s + h };
            count += 1;
        }
        self.set_state(&y);
        (xi_of(th1) - y.g).norm() >= SWALLOW_EPS && y.g.norm() < 1.0 && y.g.is_finite()
    }
}

/// A boundary point `e^{iα0}` followed by the flow; `g_t(e^{iα0}) = e^{iα_t}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryTracked {
    pub alpha0: f64,
    pub alpha: f64,
    pub log_abs_g_prime: f64,
    pub status: PointStatus,
}

fn bderiv(alpha: f64, theta: f64) -> (f64, f64) {
    let half = 0.5 * (alpha - theta);
    let (sn, cs) = half.sin_cos();
    (cs / sn, -0.5 / (sn * sn))
}

impl BoundaryTracked {
    fn new(alpha0: f64) -> Result<Self> {
        if !alpha0.is_finite() || (0.5 * alpha0).sin().abs() < SWALLOW_EPS {
            return Err(Error::Domain(format!("boundary angle {alpha0} coincides with the start point")));
        }
        Ok(BoundaryTracked { alpha0, alpha: alpha0, log_abs_g_prime: 0.0, status: PointStatus::Alive })
    }

    /// Advances over `[t, t+dt]` with `θ` linear from `th0` to `th1`.
    /// Under a continuous driver the point is pushed ahead and never hit, so
    /// swallowing is decided on the split step: the flow with the driver held
    /// at `th0`, then the increment; the point is swallowed if the driver passes it.
    fn advance(&mut self, dt: f64, th0: f64, th1: f64, hits: bool) -> bool {
        if hits {
            let Some(frozen) = Self::flow(self.alpha, 0.0, dt, th0, th0) else {
                return false;
            };
            let turns = |th: f64| ((frozen.0 - th) / (2.0 * PI)).floor();
            if turns(th0) != turns(th1) {
                return false;
            }
        }
        let Some((a, dl)) = Self::flow(self.alpha, self.log_abs_g_prime, dt, th0, th1) else {
            return false;
        };
        self.alpha = a;
        self.log_abs_g_prime = dl;
        (0.5 * (a - th1)).sin().abs() >= SWALLOW_EPS && a.is_finite()
    }

    /// RK4 flow of `(α, log|g'|)`; `None` once the point reaches the driver.
    fn flow(alpha: f64, log_gp: f64, dt: f64, th0: f64, th1: f64) -> Option<(f64, f64)> {
        let omega = (th1 - th0).abs() / dt;
        let (mut a, mut l) = (alpha, log_gp);
        let mut s = 0.0;
        let mut count = 0;
        while s < dt {
            let th = th0 + (th1 - th0) * (s / dt);
            let d = 2.0 * (0.5 * (a - th)).sin().abs();
            if d < 2.0 * SWALLOW_EPS || count > MAX_SUBSTEPS {
                return None;
            }
            let rem = dt - s;
            let mut h = rem.min(SUBSTEP_C * d * d);
            if omega > 0.0 {
                h = h.min(d / (OMEGA_DIV * omega));
            }
            let tha = th;
            let thb = if h == rem { th1 } else { th0 + (th1 - th0) * ((s + h) / dt) };
            let thm = 0.5 * (tha + thb);
            let k1 = bderiv(a, tha);
            let k2 = bderiv(a + 0.5 * h * k1.0, thm);
            let k3 = bderiv(a + 0.5 * h * k2.0, thm);
            let k4 = bderiv(a + h * k3.0, thb);
            a += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            l += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            s = if h == rem { dt } else { s + h };
            count += 1;
        }
        Some((a, l))
    }
}

/// Chart quantities of `w_t = g_t/ξ_t` at an interior point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InteriorChart {
    pub w: Complex64,
    pub w_prime: Complex64,
    /// Continuous `log w`; `None` at the origin.
    pub log_w: Option<Complex64>,
    /// Continuous `log w'`.
    pub log_w_prime: Complex64,
    /// Principal `log(1−w)`, continuous since `Re(1−w) > 0`.
    pub log_one_minus_w: Complex64,
    pub pre_schwarzian: Option<Complex64>,
    pub schwarzian: Option<Complex64>,
}

impl InteriorChart {
    /// Identity chart at `z`.
    pub fn identity(z: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        InteriorChart {
            w: z,
            w_prime: Complex64::new(1.0, 0.0),
            log_w: (z != zero).then(|| z.ln()),
            log_w_prime: zero,
            log_one_minus_w: (1.0 - z).ln(),
            pre_schwarzian: Some(zero),
            schwarzian: Some(zero),
        }
    }

    pub fn arg_w(&self) -> Option<f64> {
        self.log_w.map(|l| l.im)
    }

    pub fn arg_one_minus_w(&self) -> f64 {
        self.log_one_minus_w.im
    }

    /// Continuous `arg(w'/w)`.
    pub fn arg_wp_over_w(&self) -> Option<f64> {
        self.log_w.map(|l| self.log_w_prime.im - l.im)
    }
}

/// Chart quantities at a boundary point: `w = e^{iφ}`, `φ = α − θ ∈ (0, 2π)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryChart {
    pub phi: f64,
    pub w: Complex64,
    pub w_prime: Complex64,
    pub log_abs_w_prime: f64,
    /// Continuous `arg w'`.
    pub arg_w_prime: f64,
}

/// Per-path state of the flow.
#[derive(Debug, Clone, Serialize)]
pub struct LoewnerTracker {
    pub t: f64,
    pub k: usize,
    pub theta: f64,
    origin: InteriorTracked,
    pub interior: Vec<InteriorTracked>,
    pub boundary: Vec<BoundaryTracked>,
    /// Whether the driver may hit boundary points; only possible for κ > 4.
    pub boundary_hits: bool,
}

impl Default for LoewnerTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl LoewnerTracker {
    pub fn new() -> Self {
        LoewnerTracker {
            t: 0.0,
            k: 0,
            theta: 0.0,
            origin: InteriorTracked::new(Complex64::new(0.0, 0.0), false).unwrap(),
            interior: Vec::new(),
            boundary: Vec::new(),
            boundary_hits: true,
        }
    }

    /// Starts at driving angle `theta` rather than 0.
    pub fn with_theta(theta: f64) -> Self {
        LoewnerTracker { theta, ..Self::new() }
    }

    /// Registers an interior point; `higher` also tracks `g''/g'` and the Schwarzian
    /// (with the accurate substep bound).
    pub fn add_interior(&mut self, z0: Complex64, higher: bool) -> Result<usize> {
        self.interior.push(InteriorTracked::new(z0, higher)?);
        Ok(self.interior.len() - 1)
    }

    /// Interior point with the accurate substep bound but without higher derivatives.
    pub fn add_interior_accurate(&mut self, z0: Complex64) -> Result<usize> {
        let mut p = InteriorTracked::new(z0, false)?;
        p.substep_c = SUBSTEP_C_ACCURATE;
        self.interior.push(p);
        Ok(self.interior.len() - 1)
    }

    pub fn add_boundary(&mut self, alpha0: f64) -> Result<usize> {
        self.boundary.push(BoundaryTracked::new(alpha0)?);
        Ok(self.boundary.len() - 1)
    }

    pub fn xi(&self) -> Complex64 {
        xi_of(self.theta)
    }

    /// Numerically accumulated `log g_t'(0)`; equals `t` in the continuum.
    pub fn log_g_prime_origin(&self) -> Complex64 {
        self.origin.log_g_prime
    }

    /// `log w_t'(0) = log g_t'(0) − iθ_t`.
    pub fn log_w_prime_origin(&self) -> Complex64 {
        self.origin.log_g_prime - Complex64::new(0.0, self.theta)
    }

    pub fn all_alive(&self) -> bool {
        self.interior.iter().all(|p| p.status.is_alive()) && self.boundary.iter().all(|p| p.status.is_alive())
    }

    /// `min |ξ_t − g_t(z)|` over the tracked points (`∞` without points), i.e. `min |1 − w_t(z)|`.
    pub fn tip_distance(&self) -> f64 {
        let xi = self.xi();
        self.interior
            .iter()
            .map(|p| (xi - p.g).norm())
            .chain(self.boundary.iter().map(|p| (xi - xi_of(p.alpha)).norm()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Earliest swallowing time among tracked points.
    pub fn first_swallow(&self) -> Option<f64> {
        self.interior
            .iter()
            .map(|p| p.status)
            .chain(self.boundary.iter().map(|p| p.status))
            .filter_map(|s| match s {
                PointStatus::Swallowed { tau } => Some(tau),
                PointStatus::Alive => None,
            })
            .reduce(f64::min)
    }

    /// One step of length `dt` with `θ` moving linearly to `theta_next`.
    pub fn advance(&mut self, dt: f64, theta_next: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {dt}")));
        }
        let (th0, th1) = (self.theta, theta_next);
        let t1 = self.t + dt;
        self.origin.advance(dt, th0, th1);
        for p in self.interior.iter_mut().filter(|p| p.status.is_alive()) {
            if !p.advance(dt, th0, th1) {
                p.status = PointStatus::Swallowed { tau: t1 };
            }
        }
        for p in self.boundary.iter_mut().filter(|p| p.status.is_alive()) {
            if !p.advance(dt, th0, th1, self.boundary_hits) {
                p.status = PointStatus::Swallowed { tau: t1 };
            }
        }
        self.t = t1;
        self.k += 1;
        self.theta = th1;
        Ok(())
    }

    /// Advances by the next driver sample; `false` when the driver is exhausted.
    pub fn step(&mut self, driver: &Driver) -> Result<bool> {
        if self.k >= driver.n_steps() {
            return Ok(false);
        }
        self.advance(driver.dt, driver.theta[self.k + 1])?;
        Ok(true)
    }

    pub fn run(&mut self, driver: &Driver) -> Result<()> {
        while self.step(driver)? {}
        Ok(())
    }

    pub fn w_interior(&self, i: usize) -> Result<InteriorChart> {
        let p = self.interior.get(i).ok_or_else(|| Error::Config(format!("no interior point {i}")))?;
        if let PointStatus::Swallowed { tau } = p.status {
            return Err(Error::Swallowed { tau });
        }
        let rot = Complex64::new(0.0, -self.theta);
        let e = rot.exp();
        let w = p.g * e;
        Ok(InteriorChart {
            w,
            w_prime: p.log_g_prime.exp() * e,
            log_w: p.log_g.map(|l| l + rot),
            log_w_prime: p.log_g_prime + rot,
            log_one_minus_w: (1.0 - w).ln(),
            pre_schwarzian: p.pre_schwarzian,
            schwarzian: p.schwarzian,
        })
    }

    pub fn w_boundary(&self, i: usize) -> Result<BoundaryChart> {
        let p = self.boundary.get(i).ok_or_else(|| Error::Config(format!("no boundary point {i}")))?;
        if let PointStatus::Swallowed { tau } = p.status {
            return Err(Error::Swallowed { tau });
        }
        let phi = p.alpha - self.theta;
        let arg_wp = p.alpha - p.alpha0 - self.theta;
        Ok(BoundaryChart {
            phi,
            w: Complex64::from_polar(1.0, phi),
            w_prime: Complex64::from_polar(p.log_abs_g_prime.exp(), arg_wp),
            log_abs_w_prime: p.log_abs_g_prime,
            arg_w_prime: arg_wp,
        })
    }
}
