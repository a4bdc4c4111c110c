//! Monte-Carlo martingale tests and pathwise checks.

mod experiments;
mod path;
pub mod stats;

pub use experiments::{
    exponent_fit, hadamard_check, hadamard_path, ito_residual_path, pathwise_ito_residual, restriction_experiment,
    restriction_experiment_with, trace_avoids, ExponentFit, HadamardPath, HadamardReport, ItoObservable, ItoPath,
    ItoReport, ResidualSummary, RestrictionReport, DELTA_HIT, EXPONENT_GRID,
};
pub use path::{run_path, McObservable, ObservableArgs, PathOutcome, PathRun, Sle0Component};

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loewner::Driver;
use crate::params::SleCftParams;
use stats::Moments;

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_PATHS: usize = 100;
/// Band half-width, in standard errors, of the martingale test.
pub const PASS_SIGMAS: f64 = 3.0;
/// Relative floor for ensembles without sampling noise (κ = 0).
pub const ZERO_VARIANCE_RTOL: f64 = 1e-5;
/// Default localization: a point has exited once `|1 − w_t(z)|` drops below this.
pub const EXIT_RADIUS: f64 = 0.1;

fn default_exit_radius() -> f64 {
    EXIT_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub kappa: f64,
    pub n_paths: usize,
    pub t_max: f64,
    pub dt: f64,
    pub sample_times: Vec<f64>,
    pub master_seed: u64,
    /// Paths are stopped at the first grid time with `|1 − w_t(z_j)| < exit_radius`.
    #[serde(default = "default_exit_radius")]
    pub exit_radius: f64,
    /// Worker count; results do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(kappa: f64, n_paths: usize, dt: f64, sample_times: Vec<f64>, master_seed: u64) -> Self {
        let t_max = sample_times.iter().copied().fold(0.0, f64::max);
        McConfig { kappa, n_paths, t_max, dt, sample_times, master_seed, exit_radius: EXIT_RADIUS, threads: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::Config(format!("kappa must be non-negative, got {}", self.kappa)));
        }
        if self.n_paths < MIN_PATHS {
            return Err(Error::Config(format!("need at least {MIN_PATHS} paths, got {}", self.n_paths)));
        }
        if !(0.0..1.0).contains(&self.exit_radius) {
            return Err(Error::Config(format!("exit radius must lie in [0, 1), got {}", self.exit_radius)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        self.step_of(self.t_max)?;
        for &t in &self.sample_times {
            if t > self.t_max + 1e-12 {
                return Err(Error::Config(format!("sample time {t} exceeds t_max {}", self.t_max)));
            }
        }
        self.sample_steps().map(|_| ())
    }

    fn step_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if !(t >= 0.0) || (k * self.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::Config(format!("dt = {} does not divide time {t}", self.dt)));
        }
        Ok(k as usize)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Grid indices of the sample times, sorted.
    pub fn sample_steps(&self) -> Result<Vec<usize>> {
        let mut steps = self.sample_times.iter().map(|&t| self.step_of(t)).collect::<Result<Vec<_>>>()?;
        if steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sample times must be strictly increasing".into()));
        }
        steps.sort_unstable();
        Ok(steps)
    }

    /// Driver of path `i` over `[0, t_max]`; constant at κ = 0.
    pub fn driver(&self, i: u64) -> Result<Driver> {
        if self.kappa == 0.0 {
            Driver::constant(0.0, self.dt, self.n_steps())
        } else {
            Driver::brownian(self.kappa, self.dt, self.n_steps(), self.master_seed, i)
        }
    }

    pub fn params(&self) -> Result<SleCftParams> {
        if self.kappa == 0.0 {
            // the κ = 0 observables do not use the CFT numerology
            SleCftParams::from_kappa(1.0)
        } else {
            SleCftParams::from_kappa(self.kappa)
        }
    }

    /// Runs `f` over path indices `0..n` and returns results in index order.
    pub fn par_paths<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        let work = || (0..n as u64).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
        match self.threads {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?
                .install(work),
            None => work(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub time: f64,
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// `√(stderr_re² + stderr_im²)`.
    pub stderr: f64,
    pub z_re: f64,
    pub z_im: f64,
    /// Paths stopped by this time.
    pub stopped: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McMetadata {
    pub master_seed: u64,
    pub path_seeds: &'static str,
    pub branch_convention: &'static str,
    pub stopping_rule: &'static str,
    pub stop_count: usize,
    pub pass_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub schema: u32,
    pub test: &'static str,
    pub config: McConfig,
    pub observable: McObservable,
    pub m0_re: f64,
    pub m0_im: f64,
    pub rows: Vec<SampleRow>,
    pub pass: bool,
    pub metadata: McMetadata,
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn within_band(diff: f64, se: f64, sigmas: f64, scale: f64) -> bool {
    diff.abs() <= sigmas * se + ZERO_VARIANCE_RTOL * scale
}

impl McReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `time, mean_re, mean_im, stderr, z_re, z_im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time", "mean_re", "mean_im", "stderr", "z_re", "z_im"])?;
        for r in &self.rows {
            wr.write_record(
                [r.time, r.mean_re, r.mean_im, r.stderr, r.z_re, r.z_im].iter().map(|x| format!("{x:.16e}")),
            )?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn row_at(&self, t: f64) -> Option<&SampleRow> {
        self.rows.iter().find(|r| (r.time - t).abs() < 1e-12)
    }

    /// Largest `|mean − M_0|` in standard errors over both parts at time `t`.
    pub fn max_abs_z_at(&self, t: f64) -> Option<f64> {
        self.row_at(t).map(|r| r.z_re.abs().max(r.z_im.abs()))
    }
}

/// Simulates `n_paths` drivers and compares the stopped observable's mean
/// with its initial value at every sample time.
pub fn martingale_test(cfg: &McConfig, obs: &McObservable) -> Result<McReport> {
    cfg.validate()?;
    let p = cfg.params()?;
    let steps = cfg.sample_steps()?;
    let outcomes = cfg.par_paths(cfg.n_paths, |i| run_path(obs, &p, &cfg.driver(i)?, &steps, cfg.exit_radius))?;
    let m0 = PathRun::new(obs, &p, 0.0)?.value()?;
    let first_t = cfg.sample_times.iter().copied().fold(f64::INFINITY, f64::min);
    if first_t > 0.0 && outcomes.iter().all(|o| o.stop_time.is_some_and(|tau| tau < first_t)) {
        return Err(Error::InsufficientData("all paths stopped before the first sample time".into()));
    }
    let scale = m0.norm().max(1.0);
    let mut rows = Vec::with_capacity(steps.len());
    for (j, &k) in steps.iter().enumerate() {
        let t = k as f64 * cfg.dt;
        let (mut re, mut im) = (Moments::default(), Moments::default());
        let mut stopped = 0;
        for o in &outcomes {
            re.push(o.values[j].re);
            im.push(o.values[j].im);
            if o.stop_time.is_some_and(|tau| tau <= t + 1e-12) {
                stopped += 1;
            }
        }
        let (dre, dim) = (re.mean() - m0.re, im.mean() - m0.im);
        let (sre, sim) = (re.stderr(), im.stderr());
        rows.push(SampleRow {
            time: t,
            mean_re: re.mean(),
            mean_im: im.mean(),
            stderr_re: sre,
            stderr_im: sim,
            stderr: sre.hypot(sim),
            z_re: z_score(dre, sre),
            z_im: z_score(dim, sim),
            stopped,
            pass: within_band(dre, sre, PASS_SIGMAS, scale) && within_band(dim, sim, PASS_SIGMAS, scale),
        });
    }
    let stop_count = outcomes.iter().filter(|o| o.stop_time.is_some()).count();
    Ok(McReport {
        schema: SCHEMA_VERSION,
        test: "martingale",
        config: cfg.clone(),
        observable: obs.clone(),
        m0_re: m0.re,
        m0_im: m0.im,
        pass: rows.iter().all(|r| r.pass),
        rows,
        metadata: McMetadata {
            master_seed: cfg.master_seed,
            path_seeds: "ChaCha8 seeded from master_seed, stream = path index",
            branch_convention: "principal logs at t = 0 continued in time; pair differences oriented by lexicographic order of initial nodes",
            stopping_rule: "values frozen at the first grid time with |1 - w_t(z_j)| < exit_radius; a point swallowed within a step keeps the previous value",
            stop_count,
            pass_sigmas: PASS_SIGMAS,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeutralityReport {
    pub schema: u32,
    pub report: McReport,
    pub check_time: f64,
    pub detect_sigmas: f64,
    pub max_abs_z: f64,
    pub drift_detected: bool,
}

pub const DETECT_SIGMAS: f64 = 5.0;

/// Martingale test of the formal evaluator; drift is detected when the
/// deviation at the last sample time exceeds five standard errors.
pub fn neutrality_negative_test(cfg: &McConfig, divisor: &crate::vertex::Divisor) -> Result<NeutralityReport> {
    let obs = McObservable::formal_vertex(divisor);
    let report = martingale_test(cfg, &obs)?;
    let row = report.rows.last().ok_or_else(|| Error::Config("no sample times".into()))?;
    let check_time = row.time;
    let max_abs_z = row.z_re.abs().max(row.z_im.abs());
    Ok(NeutralityReport {
        schema: SCHEMA_VERSION,
        check_time,
        detect_sigmas: DETECT_SIGMAS,
        max_abs_z,
        drift_detected: max_abs_z > DETECT_SIGMAS,
        report,
    })
}

/// Deterministic value `M_0` of an observable in the identity chart.
pub fn initial_value(obs: &McObservable, p: &SleCftParams) -> Result<Complex64> {
    PathRun::new(obs, p, 0.0)?.value()
}

#[cfg(test)]
mod tests;
