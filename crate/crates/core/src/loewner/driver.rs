use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DriverKind {
    Brownian { kappa: f64, seed: u64, path: u64 },
    Constant { value: f64 },
    Sampled,
}

/// Driving angle sampled on a uniform grid `θ_k = θ(k·dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Driver {
    pub dt: f64,
    pub theta: Vec<f64>,
    pub kind: DriverKind,
}

/// Per-path generator seeded from `(master_seed, path_index)`.
pub fn path_rng(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    Ok(())
}

impl Driver {
    /// `θ_{k+1} = θ_k + √κ·√dt·N_k` with `θ_0 = 0`.
    pub fn brownian(kappa: f64, dt: f64, n_steps: usize, seed: u64, path: u64) -> Result<Self> {
        check_dt(dt)?;
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::Domain(format!("kappa must be non-negative, got {kappa}")));
        }
        let mut rng = path_rng(seed, path);
        let scale = (kappa * dt).sqrt();
        let mut theta = Vec::with_capacity(n_steps + 1);
        let mut cur = 0.0;
        theta.push(cur);
        for _ in 0..n_steps {
            let n: f64 = rng.sample(StandardNormal);
            cur += scale * n;
            theta.push(cur);
        }
        Ok(Driver { dt, theta, kind: DriverKind::Brownian { kappa, seed, path } })
    }

    pub fn constant(value: f64, dt: f64, n_steps: usize) -> Result<Self> {
        check_dt(dt)?;
        Ok(Driver { dt, theta: vec![value; n_steps + 1], kind: DriverKind::Constant { value } })
    }

    pub fn from_samples(dt: f64, theta: Vec<f64>) -> Result<Self> {
        check_dt(dt)?;
        if theta.is_empty() || theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("driver samples must be finite and non-empty".into()));
        }
        Ok(Driver { dt, theta, kind: DriverKind::Sampled })
    }

    pub fn n_steps(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn t_max(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    /// Linear interpolation of the samples, clamped to the grid.
    pub fn theta_at(&self, t: f64) -> f64 {
        let x = (t / self.dt).max(0.0);
        let k = (x.floor() as usize).min(self.n_steps());
        if k == self.n_steps() {
            return self.theta[k];
        }
        let f = x - k as f64;
        self.theta[k] + f * (self.theta[k + 1] - self.theta[k])
    }

    /// Reflected driver `-θ`, the law of the complex-conjugated curve.
    pub fn mirrored(&self) -> Self {
        Driver { dt: self.dt, theta: self.theta.iter().map(|x| -x).collect(), kind: DriverKind::Sampled }
    }

    /// Samples `from..=to`, re-based in time at `from`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from > to || to > self.n_steps() {
            return Err(Error::Config(format!("bad driver slice {from}..={to}")));
        }
        Driver::from_samples(self.dt, self.theta[from..=to].to_vec())
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &Driver) -> Result<Self> {
        if self.dt != other.dt || *self.theta.last().unwrap() != other.theta[0] {
            return Err(Error::Config("drivers do not join".into()));
        }
        let mut theta = self.theta.clone();
        theta.extend_from_slice(&other.theta[1..]);
        Driver::from_samples(self.dt, theta)
    }

    /// Brownian-bridge refinement to step `dt/2` sharing the coarse samples.
    pub fn refine(&self, kappa: f64, rng: &mut impl Rng) -> Self {
        let sd = (kappa * self.dt / 4.0).sqrt();
        let mut theta = Vec::with_capacity(2 * self.theta.len() - 1);
        for w in self.theta.windows(2) {
            let n: f64 = rng.sample(StandardNormal);
            theta.push(w[0]);
            theta.push(0.5 * (w[0] + w[1]) + sd * n);
        }
        theta.push(*self.theta.last().unwrap());
        Driver { dt: self.dt / 2.0, theta, kind: DriverKind::Sampled }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "t", "theta"])?;
        for (k, th) in self.theta.iter().enumerate() {
            wr.write_record([k.to_string(), format!("{:.16e}", k as f64 * self.dt), format!("{:.16e}", th)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["k", "t", "theta"] {
            return Err(Error::Parse("driver CSV must have header k,t,theta".into()));
        }
        let mut ts = Vec::new();
        let mut theta = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| -> Result<&str> {
                rec.get(j).map(str::trim).ok_or_else(|| Error::Parse(format!("row {i}: missing column")))
            };
            let k: usize = field(0)?.parse().map_err(|_| Error::Parse(format!("row {i}: bad k")))?;
            if k != i {
                return Err(Error::Parse(format!("row {i}: expected k = {i}, found {k}")));
            }
            let t: f64 = field(1)?.parse().map_err(|_| Error::Parse(format!("row {i}: bad t")))?;
            let th: f64 = field(2)?.parse().map_err(|_| Error::Parse(format!("row {i}: bad theta")))?;
            ts.push(t);
            theta.push(th);
        }
        if theta.len() < 2 {
            return Err(Error::Parse("driver CSV needs at least two rows".into()));
        }
        let dt = ts[1] - ts[0];
        for (k, t) in ts.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * (1.0 + t.abs()) {
                return Err(Error::Parse(format!("row {k}: non-uniform time grid")));
            }
        }
        Driver::from_samples(dt, theta)
    }
}
