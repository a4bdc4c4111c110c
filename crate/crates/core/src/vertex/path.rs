use num_complex::Complex64;
use serde::Serialize;

use super::eval::{eval_complex, pair_index, pair_sign, Chart, ComplexDivisor, CorrelatorValue, NodeChart};
use super::Divisor;
use crate::error::{Error, Result};
use crate::loewner::{Driver, LoewnerTracker};
use crate::params::SleCftParams;

/// Evaluates a correlator along one Loewner path, continuing every branch in time.
#[derive(Debug, Clone)]
pub struct PathEvaluator {
    divisor: ComplexDivisor,
    params: SleCftParams,
    hatted: bool,
    formal: bool,
    tracker: LoewnerTracker,
    /// Continuous `log(±(g_j − g_k))` for `j < k`.
    log_gdiff: Vec<Complex64>,
    pair_signs: Vec<f64>,
}

impl PathEvaluator {
    /// Hatted evaluator for a neutral divisor.
    pub fn new(d: &Divisor, p: &SleCftParams) -> Result<Self> {
        d.validate()?;
        Self::with_options(d.into(), p, true, false)
    }

    /// General form: complex charges, hatted or rooted, optionally formal (non-neutral).
    pub fn with_options(d: ComplexDivisor, p: &SleCftParams, hatted: bool, formal: bool) -> Result<Self> {
        if !formal && !d.is_neutral() {
            return Err(Error::Charge(format!("divisor is not neutral (total charge {})", d.total_charge())));
        }
        let mut tracker = LoewnerTracker::new();
        for n in &d.nodes {
            if n.z.norm() == 0.0 {
                return Err(Error::Domain("nodes must differ from the root".into()));
            }
            tracker.add_interior(n.z, false)?;
        }
        let zs = d.node_positions();
        let mut log_gdiff = Vec::new();
        let mut pair_signs = Vec::new();
        for j in 0..zs.len() {
            for k in j + 1..zs.len() {
                if zs[j] == zs[k] {
                    return Err(Error::Singularity(format!("repeated node {}", zs[j])));
                }
                let sign = pair_sign(zs[j], zs[k]);
                pair_signs.push(sign);
                log_gdiff.push((sign * (zs[j] - zs[k])).ln());
            }
        }
        Ok(PathEvaluator { divisor: d, params: *p, hatted, formal, tracker, log_gdiff, pair_signs })
    }

    pub fn tracker(&self) -> &LoewnerTracker {
        &self.tracker
    }

    /// Starting driving angle; only meaningful before the first step.
    pub fn set_theta(&mut self, theta: f64) {
        self.tracker.theta = theta;
    }

    pub fn t(&self) -> f64 {
        self.tracker.t
    }

    pub fn swallow_time(&self) -> Option<f64> {
        self.tracker.first_swallow()
    }

    pub fn chart(&self) -> Result<Chart> {
        let mut nodes = Vec::with_capacity(self.divisor.nodes.len());
        for i in 0..self.divisor.nodes.len() {
            let ch = self.tracker.w_interior(i)?;
            nodes.push(NodeChart {
                w: ch.w,
                log_w: ch.log_w.expect("nodes avoid the origin"),
                log_w_prime: ch.log_w_prime,
            });
        }
        let rot = Complex64::new(0.0, -self.tracker.theta);
        Ok(Chart {
            nodes,
            log_wq_prime: self.tracker.log_w_prime_origin(),
            pair_logs: self.log_gdiff.iter().map(|l| l + rot).collect(),
        })
    }

    pub fn current(&self) -> Result<CorrelatorValue> {
        if let Some(tau) = self.swallow_time() {
            return Err(Error::Swallowed { tau });
        }
        eval_complex(&self.divisor, &self.params, &self.chart()?, self.hatted, self.formal)
    }

    pub fn advance(&mut self, dt: f64, theta_next: f64) -> Result<()> {
        self.tracker.advance(dt, theta_next)?;
        if self.swallow_time().is_some() {
            return Ok(());
        }
        let n = self.divisor.nodes.len();
        for j in 0..n {
            for k in j + 1..n {
                let idx = pair_index(n, j, k);
                let diff = self.pair_signs[idx] * (self.tracker.interior[j].g - self.tracker.interior[k].g);
                let old = self.log_gdiff[idx];
                let inc = (diff / old.exp()).ln();
                self.log_gdiff[idx] = Complex64::new(diff.norm().ln(), old.im + inc.im);
            }
        }
        Ok(())
    }

    /// Advances by the next sample of `driver`; `false` when exhausted.
    pub fn step(&mut self, driver: &Driver) -> Result<bool> {
        let k = self.tracker.k;
        if k >= driver.n_steps() {
            return Ok(false);
        }
        self.advance(driver.dt, driver.theta[k + 1])?;
        Ok(true)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathSeries {
    pub times: Vec<f64>,
    pub values: Vec<CorrelatorValue>,
    /// First swallowing time of a node; the series stops before it.
    pub swallow_time: Option<f64>,
}

/// Hatted correlator sampled every `every` driver steps, starting at `t = 0`.
pub fn eval_along_path(d: &Divisor, p: &SleCftParams, driver: &Driver, every: usize) -> Result<PathSeries> {
    if every == 0 {
        return Err(Error::Config("sampling stride must be positive".into()));
    }
    let mut ev = PathEvaluator::new(d, p)?;
    ev.tracker.theta = driver.theta[0];
    let mut series = PathSeries { times: vec![0.0], values: vec![ev.current()?], swallow_time: None };
    while ev.step(driver)? {
        if let Some(tau) = ev.swallow_time() {
            series.swallow_time = Some(tau);
            break;
        }
        if ev.tracker.k % every == 0 {
            series.times.push(ev.t());
            series.values.push(ev.current()?);
        }
    }
    Ok(series)
}
