use num_complex::Complex64;
use serde::Serialize;

use super::{Divisor, NEUTRALITY_TOL};
use crate::conformal::BranchedValue;
use crate::error::{Error, Result};
use crate::params::SleCftParams;

/// Node with complex charges; needed for the non-chiral fields `𝒱^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexNode {
    pub z: Complex64,
    pub sigma: Complex64,
    pub sigma_star: Complex64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ComplexDivisor {
    pub nodes: Vec<ComplexNode>,
    pub tau: Complex64,
    pub tau_star: Complex64,
}

impl From<&Divisor> for ComplexDivisor {
    fn from(d: &Divisor) -> Self {
        ComplexDivisor {
            nodes: d
                .nodes
                .iter()
                .map(|n| ComplexNode { z: n.z, sigma: n.sigma.into(), sigma_star: n.sigma_star.into() })
                .collect(),
            tau: d.tau.into(),
            tau_star: d.tau_star.into(),
        }
    }
}

impl ComplexDivisor {
    pub fn total_charge(&self) -> Complex64 {
        self.nodes.iter().map(|n| n.sigma + n.sigma_star).sum::<Complex64>() + self.tau + self.tau_star
    }

    pub fn is_neutral(&self) -> bool {
        self.total_charge().norm() <= NEUTRALITY_TOL
    }

    pub fn node_positions(&self) -> Vec<Complex64> {
        self.nodes.iter().map(|n| n.z).collect()
    }

    /// `𝒱^α(z) = 𝒪^{(−iα, iα)}` at a single node.
    pub fn nonchiral(alpha: f64, z: Complex64) -> Self {
        let s = Complex64::new(0.0, -alpha);
        ComplexDivisor { nodes: vec![ComplexNode { z, sigma: s, sigma_star: -s }], ..Default::default() }
    }

    /// `V^α(z, z0)`: chiral charges `−iα` at `z` and `iα` at `z0`.
    pub fn chiral_dipole(alpha: f64, z: Complex64, z0: Complex64) -> Self {
        let s = Complex64::new(0.0, -alpha);
        let zero = Complex64::new(0.0, 0.0);
        ComplexDivisor {
            nodes: vec![
                ComplexNode { z, sigma: s, sigma_star: zero },
                ComplexNode { z: z0, sigma: -s, sigma_star: zero },
            ],
            ..Default::default()
        }
    }

    pub fn star(&self, other: &ComplexDivisor) -> ComplexDivisor {
        let mut out = self.clone();
        for n in &other.nodes {
            match out.nodes.iter_mut().find(|m| m.z == n.z) {
                Some(m) => {
                    m.sigma += n.sigma;
                    m.sigma_star += n.sigma_star;
                }
                None => out.nodes.push(*n),
            }
        }
        out.tau += other.tau;
        out.tau_star += other.tau_star;
        out
    }
}

/// Chart quantities at one node; logarithms are continuous along the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeChart {
    pub w: Complex64,
    pub log_w: Complex64,
    pub log_w_prime: Complex64,
}

/// Chart data for a whole divisor: nodes, `log w_q'` at the origin and the
/// continued pair logarithms for `j < k` in row-major order. Each pair log is
/// `log(w_j − w_k)` or `log(w_k − w_j)`, oriented by [`pair_sign`] of the
/// initial positions, so the value does not depend on the node order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chart {
    pub nodes: Vec<NodeChart>,
    pub log_wq_prime: Complex64,
    pub pair_logs: Vec<Complex64>,
}

/// `1` if the pair is taken as `w_j − w_k`, `-1` for `w_k − w_j`
/// (lexicographic order of the initial positions).
pub fn pair_sign(zj: Complex64, zk: Complex64) -> f64 {
    if (zj.re, zj.im) < (zk.re, zk.im) {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn pair_index(n: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < n);
    j * (2 * n - j - 1) / 2 + (k - j - 1)
}

impl Chart {
    /// Principal branches of all logarithms.
    pub fn principal(nodes: &[(Complex64, Complex64)], log_wq_prime: Complex64) -> Chart {
        let nodes: Vec<NodeChart> =
            nodes.iter().map(|&(w, wp)| NodeChart { w, log_w: w.ln(), log_w_prime: wp.ln() }).collect();
        let mut pair_logs = Vec::new();
        for j in 0..nodes.len() {
            for k in j + 1..nodes.len() {
                let sign = pair_sign(nodes[j].w, nodes[k].w);
                pair_logs.push((sign * (nodes[j].w - nodes[k].w)).ln());
            }
        }
        Chart { nodes, log_wq_prime, pair_logs }
    }

    /// The identity chart `w = id` at the given nodes.
    pub fn identity(zs: &[Complex64]) -> Chart {
        let one = Complex64::new(1.0, 0.0);
        let v: Vec<_> = zs.iter().map(|&z| (z, one)).collect();
        Chart::principal(&v, Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorValue {
    pub value: BranchedValue,
    /// `false` for the formal product of a non-neutral divisor.
    pub neutral: bool,
}

impl CorrelatorValue {
    pub fn value(&self) -> Complex64 {
        self.value.value()
    }
}

fn check_chart(d: &ComplexDivisor, chart: &Chart) -> Result<()> {
    let n = d.nodes.len();
    if chart.nodes.len() != n || chart.pair_logs.len() != n * n.saturating_sub(1) / 2 {
        return Err(Error::Config("chart does not match divisor".into()));
    }
    for (j, nc) in chart.nodes.iter().enumerate() {
        if !(nc.w.norm() < 1.0) || nc.w.norm() == 0.0 {
            return Err(Error::Singularity(format!("node image {} outside the punctured disk", nc.w)));
        }
        if chart.nodes[..j].iter().any(|m| m.w == nc.w) {
            return Err(Error::Singularity(format!("coincident node images {}", nc.w)));
        }
    }
    Ok(())
}

/// Logarithm of the (rooted or hatted) correlator for arbitrary charges.
pub(crate) fn log_correlator(d: &ComplexDivisor, p: &SleCftParams, chart: &Chart, hatted: bool) -> Result<Complex64> {
    check_chart(d, chart)?;
    let (a, b) = (p.a, p.b);
    let (tau, taus) = (d.tau, d.tau_star);
    let lq = chart.log_wq_prime;
    let mut total = tau * tau / 2.0 * lq + taus * taus / 2.0 * lq.conj();
    if hatted {
        total += -tau * a / 2.0 * lq - taus * a / 2.0 * lq.conj();
    }
    let n = d.nodes.len();
    for (node, nc) in d.nodes.iter().zip(&chart.nodes) {
        let (s, ss) = (node.sigma, node.sigma_star);
        let h = s * s / 2.0 - s * b;
        let hs = ss * ss / 2.0 - ss * b;
        let nu = (b + tau) * s;
        let nus = (b + taus) * ss;
        let lp = nc.log_w_prime;
        let lw = nc.log_w;
        total += h * lp + hs * lp.conj() + nu * lw + nus * lw.conj();
        total += s * ss * (1.0 - nc.w.norm_sqr()).ln();
        if hatted {
            let l1 = (1.0 - nc.w).ln();
            total += a * s * l1 - a * s / 2.0 * lw + a * ss * l1.conj() - a * ss / 2.0 * lw.conj();
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let (nj, nk) = (&d.nodes[j], &d.nodes[k]);
            let dlog = chart.pair_logs[pair_index(n, j, k)];
            let e = (1.0 - chart.nodes[j].w * chart.nodes[k].w.conj()).ln();
            total += nj.sigma * nk.sigma * dlog + nj.sigma_star * nk.sigma_star * dlog.conj();
            total += nj.sigma * nk.sigma_star * e + nj.sigma_star * nk.sigma * e.conj();
        }
    }
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::Singularity("correlator not finite".into()));
    }
    Ok(total)
}

pub(crate) fn eval_complex(
    d: &ComplexDivisor,
    p: &SleCftParams,
    chart: &Chart,
    hatted: bool,
    formal: bool,
) -> Result<CorrelatorValue> {
    let neutral = d.is_neutral();
    if !neutral && !formal {
        return Err(Error::Charge(format!("divisor is not neutral (total charge {})", d.total_charge())));
    }
    Ok(CorrelatorValue { value: BranchedValue::from_log(log_correlator(d, p, chart, hatted)?), neutral })
}

/// `E 𝒪^{(σ,σ*;τ,τ*)}` in the given chart; requires neutrality.
pub fn eval_rooted(d: &Divisor, p: &SleCftParams, chart: &Chart) -> Result<CorrelatorValue> {
    eval_complex(&d.into(), p, chart, false, false)
}

/// `E 𝒪̂^{(σ,σ*;τ,τ*)}`: the correlator under the one-leg insertion.
pub fn eval_hatted(d: &Divisor, p: &SleCftParams, chart: &Chart) -> Result<CorrelatorValue> {
    eval_complex(&d.into(), p, chart, true, false)
}

/// The same closed-form product without the neutrality requirement.
pub fn eval_formal(d: &Divisor, p: &SleCftParams, chart: &Chart, hatted: bool) -> Result<CorrelatorValue> {
    eval_complex(&d.into(), p, chart, hatted, true)
}

/// `E 𝒱^α(z1) 𝒱^α(z2)` in the identity chart.
pub fn nonchiral_pair(alpha: f64, z1: Complex64, z2: Complex64, p: &SleCftParams) -> Result<CorrelatorValue> {
    let d = ComplexDivisor::nonchiral(alpha, z1).star(&ComplexDivisor::nonchiral(alpha, z2));
    eval_complex(&d, p, &Chart::identity(&[z1, z2]), false, false)
}

/// `E 𝒱̂^α(z)` in the identity chart.
pub fn nonchiral_one_point_hatted(alpha: f64, z: Complex64, p: &SleCftParams) -> Result<CorrelatorValue> {
    eval_complex(&ComplexDivisor::nonchiral(alpha, z), p, &Chart::identity(&[z]), true, false)
}

/// `E V̂^α(z, z0)` in the identity chart.
pub fn chiral_dipole_hatted(alpha: f64, z: Complex64, z0: Complex64, p: &SleCftParams) -> Result<CorrelatorValue> {
    eval_complex(&ComplexDivisor::chiral_dipole(alpha, z, z0), p, &Chart::identity(&[z, z0]), true, false)
}

#[cfg(test)]
mod tests;
