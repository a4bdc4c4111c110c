//! Charge divisors and closed-form vertex correlators.

mod eval;
mod path;

pub use eval::{
    chiral_dipole_hatted, eval_formal, eval_hatted, eval_rooted, nonchiral_one_point_hatted, nonchiral_pair, pair_sign,
    Chart, ComplexDivisor, ComplexNode, CorrelatorValue, NodeChart,
};
pub use path::{eval_along_path, PathEvaluator, PathSeries};

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SleCftParams;

pub const NEUTRALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub z: Complex64,
    pub sigma: f64,
    pub sigma_star: f64,
}

/// Charges `(σ_j, σ_j*)` at interior nodes and root charges `(τ, τ*)` at the origin.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Divisor {
    pub nodes: Vec<Node>,
    pub tau: f64,
    pub tau_star: f64,
}

impl Divisor {
    pub fn new(nodes: Vec<Node>, tau: f64, tau_star: f64) -> Result<Self> {
        let d = Divisor { nodes, tau, tau_star };
        d.validate()?;
        Ok(d)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// A single node `(σ, σ*)` at `z` with root `(τ, τ*)`.
    pub fn single(z: Complex64, sigma: f64, sigma_star: f64, tau: f64, tau_star: f64) -> Result<Self> {
        Self::new(vec![Node { z, sigma, sigma_star }], tau, tau_star)
    }

    /// The one-leg pattern `(a, 0; −a/2, −a/2)` at `z`.
    pub fn one_leg(z: Complex64, p: &SleCftParams) -> Result<Self> {
        Self::single(z, p.a, 0.0, -p.a / 2.0, -p.a / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (j, n) in self.nodes.iter().enumerate() {
            if !(n.z.norm() < 1.0) || n.z.norm() == 0.0 {
                return Err(Error::Domain(format!("node {} must lie in the punctured open disk", n.z)));
            }
            if !(n.sigma.is_finite() && n.sigma_star.is_finite()) {
                return Err(Error::Charge("charges must be finite".into()));
            }
            if self.nodes[..j].iter().any(|m| m.z == n.z) {
                return Err(Error::Singularity(format!("repeated node {}", n.z)));
            }
        }
        if !(self.tau.is_finite() && self.tau_star.is_finite()) {
            return Err(Error::Charge("root charges must be finite".into()));
        }
        Ok(())
    }

    /// `Σ(σ_j + σ_j*) + τ + τ*`.
    pub fn total_charge(&self) -> f64 {
        self.nodes.iter().map(|n| n.sigma + n.sigma_star).sum::<f64>() + self.tau + self.tau_star
    }

    pub fn is_neutral(&self) -> bool {
        self.total_charge().abs() <= NEUTRALITY_TOL
    }

    /// `⋆`-product: charges add at shared nodes, roots add.
    pub fn star(&self, other: &Divisor) -> Divisor {
        let mut nodes = self.nodes.clone();
        for n in &other.nodes {
            match nodes.iter_mut().find(|m| m.z == n.z) {
                Some(m) => {
                    m.sigma += n.sigma;
                    m.sigma_star += n.sigma_star;
                }
                None => nodes.push(*n),
            }
        }
        Divisor { nodes, tau: self.tau + other.tau, tau_star: self.tau_star + other.tau_star }
    }

    /// Swaps holomorphic and antiholomorphic charges.
    pub fn conjugate(&self) -> Divisor {
        Divisor {
            nodes: self.nodes.iter().map(|n| Node { z: n.z, sigma: n.sigma_star, sigma_star: n.sigma }).collect(),
            tau: self.tau_star,
            tau_star: self.tau,
        }
    }

    pub fn node_positions(&self) -> Vec<Complex64> {
        self.nodes.iter().map(|n| n.z).collect()
    }

    /// Parses `node re,im sigma sigma_star` and `root tau tau_star` lines
    /// (newlines or `;` separate entries; a missing root means `0 0`).
    pub fn parse(text: &str) -> Result<Divisor> {
        let mut nodes = Vec::new();
        let mut root: Option<(f64, f64)> = None;
        let num = |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}"))) };
        for line in text.split(['\n', ';']) {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["node", pos, s, ss] => {
                    let (re, im) = pos
                        .split_once(',')
                        .ok_or_else(|| Error::Parse(format!("node position {pos:?} must be re,im")))?;
                    nodes.push(Node { z: Complex64::new(num(re)?, num(im)?), sigma: num(s)?, sigma_star: num(ss)? });
                }
                ["root", t, ts] => {
                    if root.replace((num(t)?, num(ts)?)).is_some() {
                        return Err(Error::Parse("more than one root line".into()));
                    }
                }
                _ => return Err(Error::Parse(format!("unrecognized divisor entry {line:?}"))),
            }
        }
        let (tau, tau_star) = root.unwrap_or((0.0, 0.0));
        Divisor::new(nodes, tau, tau_star).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl fmt::Display for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            writeln!(f, "node {:?},{:?} {:?} {:?}", n.z.re, n.z.im, n.sigma, n.sigma_star)?;
        }
        write!(f, "root {:?} {:?}", self.tau, self.tau_star)
    }
}
