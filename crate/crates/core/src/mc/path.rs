use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loewner::{Driver, LoewnerTracker};
use crate::observables::{
    boundary_deriv_observable, chiral_exponential, chiral_n, chiral_n_bracket_log, lookup, lsw6, lsw_poisson,
    sle0_pair, ss_phi_hat_chart, ss_phi_hat_exp_log, BoundaryDerivObservable,
};
use crate::params::SleCftParams;
use crate::vertex::{ComplexDivisor, Divisor, PathEvaluator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sle0Component {
    Arg,
    Schwarzian,
}

/// An observable that can be followed along a simulated path.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum McObservable {
    /// Vertex correlator; `formal` allows non-neutral charges, `hatted` selects the insertion.
    Vertex {
        divisor: ComplexDivisor,
        hatted: bool,
        formal: bool,
    },
    LswPoisson {
        z: Complex64,
    },
    Lsw6 {
        z: Complex64,
    },
    Sle0 {
        z: Complex64,
        component: Sle0Component,
    },
    SsPhiHat {
        z: Complex64,
    },
    SsPhiHatExp {
        z: Complex64,
        alpha: f64,
    },
    ChiralNExp {
        z: Complex64,
        alpha: f64,
    },
    BoundaryDeriv {
        theta0: f64,
        h: f64,
    },
}

/// Named parameters accepted by [`McObservable::from_name`].
#[derive(Debug, Clone, Default)]
pub struct ObservableArgs {
    pub z: Option<Complex64>,
    pub theta0: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub h: Option<f64>,
    pub divisor: Option<Divisor>,
    pub component: Option<Sle0Component>,
}

impl McObservable {
    pub fn vertex(d: &Divisor) -> Result<Self> {
        d.validate()?;
        Ok(McObservable::Vertex { divisor: d.into(), hatted: true, formal: false })
    }

    /// Formal evaluation of a possibly non-neutral divisor.
    pub fn formal_vertex(d: &Divisor) -> Self {
        McObservable::Vertex { divisor: d.into(), hatted: true, formal: true }
    }

    /// Resolves a catalog name with its arguments.
    pub fn from_name(name: &str, args: &ObservableArgs, p: &SleCftParams) -> Result<Self> {
        let spec = lookup(name, p)?;
        if !spec.monte_carlo {
            return Err(Error::Config(format!("{name} is not a path observable")));
        }
        let z = || args.z.ok_or_else(|| Error::Config(format!("{name} needs an interior point z")));
        let alpha = || args.alpha.ok_or_else(|| Error::Config(format!("{name} needs alpha")));
        let a = p.a;
        Ok(match name {
            "lsw_poisson" => McObservable::LswPoisson { z: z()? },
            "lsw6" => McObservable::Lsw6 { z: z()? },
            "sle0_pair" => McObservable::Sle0 { z: z()?, component: args.component.unwrap_or(Sle0Component::Arg) },
            "ss_phi_hat" => McObservable::SsPhiHat { z: z()? },
            "ss_phi_hat_exp" => McObservable::SsPhiHatExp { z: z()?, alpha: alpha()? },
            "chiral_n_exp" => McObservable::ChiralNExp { z: z()?, alpha: alpha()? },
            "constant_vertex" => {
                let tau = args.tau.unwrap_or(0.7);
                McObservable::vertex(&Divisor::new(vec![], tau, -tau)?)?
            }
            "real_vertex" => McObservable::vertex(&Divisor::single(z()?, -a, -a, a, a)?)?,
            "one_leg" => McObservable::vertex(&Divisor::one_leg(z()?, p)?)?,
            "vertex" => {
                let d = args.divisor.as_ref().ok_or_else(|| Error::Config("vertex needs a divisor".into()))?;
                McObservable::vertex(d)?
            }
            "boundary_deriv" => McObservable::BoundaryDeriv {
                theta0: args.theta0.ok_or_else(|| Error::Config("boundary_deriv needs theta0".into()))?,
                h: args.h.unwrap_or(0.0),
            },
            _ => return Err(Error::Config(format!("{name} is not a path observable"))),
        })
    }
}

#[allow(clippy::large_enum_variant)]
enum State {
    Vertex(Box<PathEvaluator>),
    Tracker { tr: LoewnerTracker, c0: f64, bracket0: Complex64, bd: Option<BoundaryDerivObservable> },
}

/// One path of an observable, advanced step by step.
pub struct PathRun<'a> {
    obs: &'a McObservable,
    p: SleCftParams,
    state: State,
}

impl<'a> PathRun<'a> {
    pub fn new(obs: &'a McObservable, p: &SleCftParams, theta0: f64) -> Result<Self> {
        let state = match obs {
            McObservable::Vertex { divisor, hatted, formal } => {
                let mut ev = PathEvaluator::with_options(divisor.clone(), p, *hatted, *formal)?;
                ev.set_theta(theta0);
                State::Vertex(Box::new(ev))
            }
            McObservable::BoundaryDeriv { theta0: alpha0, h } => {
                let mut tr = LoewnerTracker::with_theta(theta0);
                tr.boundary_hits = p.kappa > 4.0;
                tr.add_boundary(*alpha0)?;
                State::Tracker {
                    tr,
                    c0: 0.0,
                    bracket0: Complex64::new(0.0, 0.0),
                    bd: Some(boundary_deriv_observable(*h, p)?),
                }
            }
            McObservable::LswPoisson { z }
            | McObservable::Lsw6 { z }
            | McObservable::Sle0 { z, .. }
            | McObservable::SsPhiHat { z }
            | McObservable::SsPhiHatExp { z, .. }
            | McObservable::ChiralNExp { z, .. } => {
                let higher = matches!(obs, McObservable::Sle0 { .. });
                let mut tr = LoewnerTracker::with_theta(theta0);
                tr.add_interior(*z, higher)?;
                let ch = tr.w_interior(0)?;
                let bracket0 = match obs {
                    McObservable::ChiralNExp { .. } => chiral_n_bracket_log(&ch, tr.log_w_prime_origin())?,
                    _ => Complex64::new(0.0, 0.0),
                };
                State::Tracker { tr, c0: 1.0 - z.norm_sqr(), bracket0, bd: None }
            }
        };
        Ok(PathRun { obs, p: *p, state })
    }

    pub fn t(&self) -> f64 {
        match &self.state {
            State::Vertex(ev) => ev.t(),
            State::Tracker { tr, .. } => tr.t,
        }
    }

    pub fn swallow_time(&self) -> Option<f64> {
        match &self.state {
            State::Vertex(ev) => ev.swallow_time(),
            State::Tracker { tr, .. } => tr.first_swallow(),
        }
    }

    /// Smallest `|1 − w_t|` over the observable's points.
    pub fn tip_distance(&self) -> f64 {
        match &self.state {
            State::Vertex(ev) => ev.tracker().tip_distance(),
            State::Tracker { tr, .. } => tr.tip_distance(),
        }
    }

    pub fn advance(&mut self, dt: f64, theta_next: f64) -> Result<()> {
        match &mut self.state {
            State::Vertex(ev) => ev.advance(dt, theta_next),
            State::Tracker { tr, .. } => tr.advance(dt, theta_next),
        }
    }

    pub fn value(&self) -> Result<Complex64> {
        let p = &self.p;
        let (tr, c0, bracket0, bd) = match &self.state {
            State::Vertex(ev) => return Ok(ev.current()?.value()),
            State::Tracker { tr, c0, bracket0, bd } => (tr, *c0, *bracket0, bd),
        };
        let re = |x: f64| Complex64::new(x, 0.0);
        if let Some(bd) = bd {
            return Ok(re(bd.value(tr.t, &tr.w_boundary(0)?)));
        }
        let ch = tr.w_interior(0)?;
        Ok(match self.obs {
            McObservable::LswPoisson { .. } => re(lsw_poisson(ch.w)?),
            McObservable::Lsw6 { .. } => {
                let lw = ch.log_w.ok_or_else(|| Error::Singularity("w = 0".into()))?;
                lsw6(lw, ch.w, tr.t)?
            }
            McObservable::Sle0 { component, .. } => {
                let (f, s) = sle0_pair(&ch)?;
                match component {
                    Sle0Component::Arg => re(f),
                    Sle0Component::Schwarzian => s,
                }
            }
            McObservable::SsPhiHat { .. } => re(ss_phi_hat_chart(&ch, p)?),
            McObservable::SsPhiHatExp { alpha, .. } => re(ss_phi_hat_exp_log(*alpha, &ch, c0, p)?.exp()),
            McObservable::ChiralNExp { alpha, .. } => {
                let lq = tr.log_w_prime_origin();
                chiral_exponential(*alpha, chiral_n(&ch, lq, p)?, chiral_n_bracket_log(&ch, lq)?, bracket0)
            }
            McObservable::Vertex { .. } | McObservable::BoundaryDeriv { .. } => unreachable!(),
        })
    }
}

/// Values of the stopped process at the requested grid indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub values: Vec<Complex64>,
    /// Stopping time: the first grid time with `|1 − w_t(z_j)| < exit_radius`, or a swallowing time.
    pub stop_time: Option<f64>,
}

/// Follows `obs` along `driver` and freezes it at the first grid time where a
/// point comes within `exit_radius` of the tip (`|1 − w_t| < exit_radius`).
/// A point swallowed inside a step keeps the value of the step before.
/// `sample_steps` must be non-decreasing.
pub fn run_path(
    obs: &McObservable,
    p: &SleCftParams,
    driver: &Driver,
    sample_steps: &[usize],
    exit_radius: f64,
) -> Result<PathOutcome> {
    let last_needed = sample_steps.last().copied().unwrap_or(0);
    if last_needed > driver.n_steps() {
        return Err(Error::Config("sample time beyond the driver".into()));
    }
    let mut run = PathRun::new(obs, p, driver.theta[0])?;
    let mut current = run.value()?;
    let mut stop_time = (run.tip_distance() < exit_radius).then_some(0.0);
    let mut values = Vec::with_capacity(sample_steps.len());
    let mut next = 0;
    let mut k = 0;
    loop {
        while next < sample_steps.len() && sample_steps[next] == k {
            values.push(current);
            next += 1;
        }
        if next == sample_steps.len() {
            break;
        }
        if stop_time.is_none() {
            run.advance(driver.dt, driver.theta[k + 1])?;
            match run.swallow_time() {
                Some(tau) => stop_time = Some(tau),
                None => match run.value() {
                    Ok(v) => {
                        current = v;
                        if run.tip_distance() < exit_radius {
                            stop_time = Some(run.t());
                        }
                    }
                    Err(Error::Singularity(_)) | Err(Error::Swallowed { .. }) => stop_time = Some(run.t()),
                    Err(e) => return Err(e),
                },
            }
        }
        k += 1;
    }
    Ok(PathOutcome { values, stop_time })
}
