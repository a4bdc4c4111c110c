//! κ-parametrized numerology shared by every other module.
//!
//! All identities between `a`, `b`, `c` and the one-leg dimensions are exact
//! algebraically; in double precision they hold to ~1e-15.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SleCftParams {
    pub kappa: f64,
    /// `sqrt(2/κ)`.
    pub a: f64,
    /// `sqrt(κ/8) - sqrt(2/κ)`.
    pub b: f64,
    /// Central charge `1 - 12 b²`.
    pub c: f64,
    /// One-leg boundary dimension `a²/2 - ab`.
    pub h12: f64,
    /// `a²/8 - b²/2`, half the effective one-leg dimension at the root.
    pub h0half: f64,
}

impl SleCftParams {
    pub fn from_kappa(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::Domain(format!("kappa must be positive and finite, got {kappa}")));
        }
        let a = (2.0 / kappa).sqrt();
        let b = (kappa / 8.0).sqrt() - a;
        Ok(Self { kappa, a, b, c: 1.0 - 12.0 * b * b, h12: a * a / 2.0 - a * b, h0half: a * a / 8.0 - b * b / 2.0 })
    }

    /// Restriction exponent at the marked boundary point (`λ = h12`).
    pub fn lambda(&self) -> f64 {
        self.h12
    }

    /// Restriction exponent at the root (`μ = a²/4 - b²`).
    pub fn mu(&self) -> f64 {
        self.a * self.a / 4.0 - self.b * self.b
    }

    /// Dimensions of the rooted field `(σ, σ*; τ, τ*)`.
    pub fn vertex_dimensions(&self, sigma: f64, sigma_star: f64, tau: f64, tau_star: f64) -> DimensionSet {
        let (a, b) = (self.a, self.b);
        let h_q = tau * tau / 2.0;
        let h_q_star = tau_star * tau_star / 2.0;
        DimensionSet {
            h: sigma * sigma / 2.0 - sigma * b,
            h_star: sigma_star * sigma_star / 2.0 - sigma_star * b,
            h_q,
            h_q_star,
            h_q_hat: h_q - tau * a / 2.0,
            h_q_star_hat: h_q_star - tau_star * a / 2.0,
            h_q_eff: h_q + h_q_star - b * b,
        }
    }

    /// Dimensions of the one-leg operator `(a, 0; -a/2, -a/2)`.
    pub fn one_leg_dimensions(&self) -> DimensionSet {
        self.vertex_dimensions(self.a, 0.0, -self.a / 2.0, -self.a / 2.0)
    }
}

pub fn params_from_kappa(kappa: f64) -> Result<SleCftParams> {
    SleCftParams::from_kappa(kappa)
}

pub fn vertex_dimensions(sigma: f64, sigma_star: f64, tau: f64, tau_star: f64, p: &SleCftParams) -> DimensionSet {
    p.vertex_dimensions(sigma, sigma_star, tau, tau_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionSet {
    pub h: f64,
    pub h_star: f64,
    pub h_q: f64,
    pub h_q_star: f64,
    pub h_q_hat: f64,
    pub h_q_star_hat: f64,
    /// `h_q + h_q* - b²`.
    pub h_q_eff: f64,
}

/// Parse a κ literal; accepts decimals and exact fractions such as `8/3`.
pub fn parse_kappa(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
            let den: f64 = den.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
            if den == 0.0 {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            num / den
        }
        None => s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))?,
    };
    Ok(value)
}
