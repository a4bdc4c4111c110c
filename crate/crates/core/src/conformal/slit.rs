//! Conformal map removing a radial slit `[r e^{iθ0}, e^{iθ0}]` from the unit
//! disk, normalized by `ψ(0) = 0`, `ψ'(0) > 0`.
//!
//! Built from `k(z) = 4z/(1+z)²`, which sends the disk onto `ℂ ∖ [1, ∞)`.
//! Its inverse is `k⁻¹(W) = (1-s)/(1+s)` with `s = sqrt(1-W)`, the principal
//! root, which equals `(2 - W - 2 sqrt(1-W))/W` but has no removable
//! singularity at `W = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitMap {
    pub r: f64,
    pub theta0: f64,
    k_r: f64,
    rot: Complex64,
}

fn koebe(u: Complex64) -> Complex64 {
    4.0 * u / ((1.0 + u) * (1.0 + u))
}

fn koebe_prime(u: Complex64) -> Complex64 {
    let e = 1.0 + u;
    4.0 * (1.0 - u) / (e * e * e)
}

impl SlitMap {
    pub fn new(r: f64, theta0: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain(format!("slit radius must lie in (0,1), got {r}")));
        }
        let k_r = 4.0 * r / ((1.0 + r) * (1.0 + r));
        Ok(Self { r, theta0, k_r, rot: Complex64::from_polar(1.0, theta0) })
    }

    pub fn deriv_at_zero(&self) -> f64 {
        1.0 / self.k_r
    }

    /// `s = sqrt(1 - k(u)/k(r))`. For `|u| = 1` the argument lies on the cut and
    /// `side` (the sign of the limiting imaginary part) selects the root.
    fn root(&self, u: Complex64, side: Option<f64>) -> Complex64 {
        let w = koebe(u) / self.k_r;
        match side {
            Some(sign) => {
                let x = (w.re - 1.0).max(0.0);
                Complex64::new(0.0, -sign * x.sqrt())
            }
            None => (1.0 - w).sqrt(),
        }
    }

    fn eval_rotated(&self, u: Complex64, side: Option<f64>) -> Complex64 {
        if (1.0 + u).norm() < 1e-12 {
            return self.rot * -1.0;
        }
        let s = self.root(u, side);
        self.rot * (1.0 - s) / (1.0 + s)
    }

    fn deriv_rotated(&self, u: Complex64, side: Option<f64>) -> Complex64 {
        if (1.0 + u).norm() < 1e-9 {
            return Complex64::new(self.k_r.sqrt(), 0.0);
        }
        let s = self.root(u, side);
        koebe_prime(u) / (self.k_r * s * (1.0 + s) * (1.0 + s))
    }

    fn check_interior(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() >= 1.0 {
            return Err(Error::Domain(format!("{z} is not inside the unit disk")));
        }
        let u = z / self.rot;
        if u.im.abs() < 1e-300 && u.re >= self.r {
            return Err(Error::Singularity(format!("{z} lies on the slit")));
        }
        Ok(u)
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let u = self.check_interior(z)?;
        Ok(self.eval_rotated(u, None))
    }

    pub fn deriv(&self, z: Complex64) -> Result<Complex64> {
        let u = self.check_interior(z)?;
        Ok(self.deriv_rotated(u, None))
    }

    fn boundary_side(&self, phi: f64) -> Result<(Complex64, f64)> {
        let beta = (phi - self.theta0).sin().atan2((phi - self.theta0).cos());
        if beta.abs() < 1e-12 {
            return Err(Error::Singularity("boundary point at the slit base".into()));
        }
        Ok((Complex64::from_polar(1.0, beta), beta.signum()))
    }

    /// `ψ(e^{iφ})` as the limit from inside the disk.
    pub fn eval_boundary(&self, phi: f64) -> Result<Complex64> {
        let (u, side) = self.boundary_side(phi)?;
        Ok(self.eval_rotated(u, Some(side)))
    }

    /// `ψ'(e^{iφ})`, analytic chain rule.
    pub fn deriv_boundary(&self, phi: f64) -> Result<Complex64> {
        let (u, side) = self.boundary_side(phi)?;
        Ok(self.deriv_rotated(u, Some(side)))
    }
}

pub fn slit_map(r: f64, theta0: f64) -> Result<SlitMap> {
    SlitMap::new(r, theta0)
}
