use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "sleobs", version, about = "Radial SLE simulation and martingale-observable checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a Brownian driving angle θ_t = √κ B_t on a uniform grid
    Simulate(SimulateArgs),
    /// Approximate trace points γ_t of a sampled or loaded driver
    Trace(TraceArgs),
    /// Evaluate a vertex correlator, at t = 0 or along a simulated path
    Eval(EvalArgs),
    /// Monte-Carlo drift test |mean_t − M_0| ≤ 3·stderr at every sample time
    MartingaleTest(MartingaleArgs),
    /// Fit the decay rate of E[|w_t'(e^{iθ0})|^h 1{τ > t}]
    ExponentFit(ExponentArgs),
    /// Residuals of the deterministic second-order equations
    BpzResidual(BpzArgs),
    /// Small-slit limit of the κ = 8/3 slit map against its closed form
    FwLimit(FwArgs),
    /// Avoidance probability of a radial slit at κ = 8/3 against the restriction formula
    Restriction(RestrictionArgs),
    /// Pathwise Hadamard variation of the Green's function and φ̂ covariation
    Hadamard(HadamardArgs),
    /// Catalog of named observables as JSON
    ListObservables(ListArgs),
    /// Numerology a, b, c, h12 and the identities between them
    Identities(IdentitiesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write results to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; the default depends on the subcommand
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// `κ` as a decimal or an exact fraction such as `8/3`.
pub fn kappa_arg(s: &str) -> Result<f64, String> {
    let k = sleobs::params::parse_kappa(s).map_err(|e| e.to_string())?;
    if !(k.is_finite() && k >= 0.0) {
        return Err(format!("kappa must be non-negative, got {s}"));
    }
    Ok(k)
}

/// A complex number written `re,im`.
pub fn complex_arg(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected re,im, got {s:?}"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?} in {s:?}"));
    Ok(Complex64::new(num(re)?, num(im)?))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// κ > 0; fractions such as 8/3 are accepted
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true)]
    pub kappa: f64,
    /// Grid step (> 0)
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Final time; rounded to a whole number of steps
    #[arg(long = "t", default_value_t = 1.0)]
    pub t_max: f64,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Path index; each index is an independent stream of the master seed
    #[arg(long, default_value_t = 0)]
    pub path: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TraceArgs {
    /// κ > 0 for a sampled driver; not needed with --driver
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true, required_unless_present = "driver")]
    pub kappa: Option<f64>,
    /// Driver CSV with columns k,t,theta (as written by `simulate`)
    #[arg(long)]
    pub driver: Option<PathBuf>,
    /// Grid step of a sampled driver (> 0)
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Final time of a sampled driver
    #[arg(long = "t", default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub path: u64,
    /// Number of evenly spaced trace points (at least 2)
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// κ > 0
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true)]
    pub kappa: f64,
    /// Divisor literal: `node re,im sigma sigma_star` entries and one `root tau tau_star`, separated by `;`
    #[arg(long, required_unless_present = "divisor_file", conflicts_with = "divisor_file")]
    pub divisor: Option<String>,
    /// File holding a divisor literal, one entry per line
    #[arg(long)]
    pub divisor_file: Option<PathBuf>,
    /// Rooted correlator instead of the hatted one
    #[arg(long)]
    pub rooted: bool,
    /// Allow non-neutral divisors (formal product)
    #[arg(long)]
    pub formal: bool,
    /// Evaluate along a simulated path up to this time; 0 evaluates in the identity chart
    #[arg(long = "t", default_value_t = 0.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub path: u64,
    /// Record every this many steps
    #[arg(long, default_value_t = 1)]
    pub every: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnsembleArgs {
    /// Number of paths (at least 100)
    #[arg(long = "n")]
    pub n_paths: Option<usize>,
    /// Grid step; must divide every sample time
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time
    #[arg(long = "t")]
    pub t_max: Option<f64>,
    /// Sample times, comma separated, strictly increasing and at most --t
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    /// Master seed; path i uses stream i of it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentArg {
    Arg,
    Schwarzian,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MartingaleArgs {
    /// κ ≥ 0 (κ = 0 runs the deterministic constant driver)
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true)]
    pub kappa: f64,
    /// Catalog name (see list-observables)
    #[arg(long, required_unless_present_any = ["divisor", "divisor_file"])]
    pub observable: Option<String>,
    /// Divisor literal; a non-neutral divisor runs the negative control, which passes when drift is detected
    #[arg(long, conflicts_with_all = ["observable", "divisor_file"])]
    pub divisor: Option<String>,
    /// File holding a divisor literal
    #[arg(long, conflicts_with = "observable")]
    pub divisor_file: Option<PathBuf>,
    /// Interior point re,im in the open unit disk
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub z: Option<Complex64>,
    /// Charge of the exponential observables
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Root charge of constant_vertex
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Boundary exponent of boundary_deriv
    #[arg(long)]
    pub h: Option<f64>,
    /// Boundary angle of boundary_deriv, radians
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    /// Component of sle0_pair
    #[arg(long, value_enum)]
    pub component: Option<ComponentArg>,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExponentArgs {
    /// κ > 0
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true)]
    pub kappa: f64,
    /// Derivative exponent h (admissible when (κ−4)² + 16κh ≥ 0)
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h: f64,
    /// Boundary angle θ0 in (0, 2π), radians
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub theta0: f64,
    /// Relative tolerance of the slope against −2ĥ_q
    #[arg(long, default_value_t = 0.1)]
    pub rtol: f64,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BpzKind {
    Virasoro,
    Boundary,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BpzArgs {
    /// `virasoro`: the T̂ one-point equation at random interior z; `boundary`: the rooted scalar equation of the
    /// boundary derivative profile at random θ (finite differences)
    #[arg(long, value_enum, default_value_t = BpzKind::Virasoro)]
    pub kind: BpzKind,
    /// κ > 0
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true)]
    pub kappa: f64,
    /// Number of random evaluation points
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Boundary exponent for --kind boundary (default h12)
    #[arg(long)]
    pub h: Option<f64>,
    /// Pass threshold (default 1e-9 for virasoro, 1e-4 for boundary)
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusArg {
    Capacity,
    Literal,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FwArgs {
    /// Boundary angle θ in (0, 2π), radians
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub theta: f64,
    /// Capacity of the slit (small, > 0)
    #[arg(long = "t", default_value_t = 1e-4)]
    pub t: f64,
    /// Slit radius: exact capacity t, or the literal 1 − 2√t
    #[arg(long, value_enum, default_value_t = RadiusArg::Capacity)]
    pub radius: RadiusArg,
    /// Pass threshold on the relative difference
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RestrictionArgs {
    /// Must be 8/3
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true, default_value = "8/3")]
    pub kappa: f64,
    /// Inner radius of the slit, in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Angle of the slit, bounded away from 0
    #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Hit threshold between trace and slit
    #[arg(long, default_value_t = sleobs::mc::DELTA_HIT)]
    pub delta: f64,
    /// Pass threshold on |p_mc − p_formula|
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HadamardArgs {
    /// κ > 0
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true)]
    pub kappa: f64,
    /// First interior point re,im
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub z1: Complex64,
    /// Second interior point re,im, distinct from z1
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub z2: Complex64,
    /// Pass threshold on the pathwise rate residual
    #[arg(long, default_value_t = 1e-3)]
    pub rate_tol: f64,
    /// Pass threshold on the relative covariation error
    #[arg(long, default_value_t = 0.1)]
    pub cov_tol: f64,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ListArgs {
    /// κ at which dimensions are reported
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true, default_value = "8/3")]
    pub kappa: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IdentitiesArgs {
    /// κ > 0
    #[arg(long, value_parser = kappa_arg, allow_hyphen_values = true)]
    pub kappa: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}
