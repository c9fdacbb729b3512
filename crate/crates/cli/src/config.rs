//! Command-line and JSON-file configuration.
//!
//! Every option of a command can be given as a flag or as a key of a JSON
//! object passed with `--config`. Flags win over file values and keys that
//! the command does not know are rejected. With no subcommand on the command
//! line, the file's `"command"` key selects it.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use ssep_core::fluctuations::Convention;
use ssep_core::lattice::Engine;
use ssep_core::{InitSpec, Reservoirs};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "SSEP_SEED";

#[derive(Debug, Parser)]
#[command(name = "ssep", version, about = "Boundary-driven exclusion process: simulation, limit formulas and checks")]
pub struct Cli {
    /// JSON file with option values; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robin eigenvalues and normalisation constants.
    Spectrum(SpectrumArgs),
    /// Monte Carlo ensemble of occupation statistics.
    Simulate(SimulateArgs),
    /// Deterministic mean profile of the lattice system.
    Profile(ProfileArgs),
    /// Two-point correlations from the ODE system, simulation or the exact chain.
    Correlations(CorrelationsArgs),
    /// Limit covariances of the fluctuation field against simulation.
    Covariance(CovarianceArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Simulate(_) => "simulate",
            Command::Profile(_) => "profile",
            Command::Correlations(_) => "correlations",
            Command::Covariance(_) => "covariance",
            Command::Verify(_) => "verify",
        }
    }
}

/// A time or cutoff that may be infinite; written `inf` on the command line
/// and in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon(pub f64);

impl FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" => Ok(Horizon(f64::INFINITY)),
            other => other.parse::<f64>().map(Horizon).map_err(|_| format!("'{s}' is not a number or 'inf'")),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Horizon(x)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineArg {
    Uniformized,
    Thinned,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Uniformized => Engine::Uniformized,
            EngineArg::Thinned => Engine::Thinned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationSource {
    Ode,
    Mc,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMode {
    Dynamic,
    Stationary,
    LocalGibbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionArg {
    Plus,
    Minus,
    Both,
}

impl ConventionArg {
    pub fn conventions(self) -> Vec<Convention> {
        match self {
            ConventionArg::Plus => vec![Convention::Plus],
            ConventionArg::Minus => vec![Convention::Minus],
            ConventionArg::Both => vec![Convention::Plus, Convention::Minus],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConventionArg::Plus => "plus",
            ConventionArg::Minus => "minus",
            ConventionArg::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Spectral,
    Lattice,
    Hydro,
    Correlations,
    Fluctuations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    Fast,
    Full,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    /// Number of modes.
    #[arg(long)]
    pub count: Option<usize>,
    /// Bisection width before Newton polishing.
    #[arg(long)]
    pub tol_root: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Observation times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// constant:ρ, linear:a,b, bernoulli-profile:<file>, stationary-discrete or exact-stationary.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    /// Also record pair covariances.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pairs: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationsArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Observation time; `inf` for the stationary state.
    #[arg(long)]
    pub t: Option<Horizon>,
    #[arg(long, value_enum)]
    pub source: Option<CorrelationSource>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceArgs {
    #[arg(long, value_enum)]
    pub mode: Option<CovarianceMode>,
    /// Eigenmode indices of the two test functions, `k1,k2`.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<usize>>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Earlier time, `s ≤ t`; defaults to `t`.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub convention: Option<ConventionArg>,
    #[arg(long)]
    pub init: Option<String>,
    /// Relaxation time before stationary observations.
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Cutoff of the boundary time integrals; `inf` for the closed form.
    #[arg(long)]
    pub horizon: Option<Horizon>,
    /// Size of the eigenbasis.
    #[arg(long)]
    pub basis: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[arg(long, value_enum)]
    pub budget: Option<Budget>,
    /// Trajectory count for the Monte Carlo criteria, overriding the budget.
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,
}

/// Settings that affect where and how a run executes but not its numbers.
#[derive(Debug, Clone)]
pub struct Run {
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub deterministic: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumConfig {
    pub count: usize,
    pub tol_root: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateConfig {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub times: Vec<f64>,
    pub trajectories: usize,
    pub seed: u64,
    pub init: String,
    pub engine: EngineArg,
    pub pairs: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileConfig {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub init: String,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationsConfig {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub t: Horizon,
    pub source: CorrelationSource,
    pub init: String,
    pub trajectories: usize,
    pub seed: Option<u64>,
    pub engine: EngineArg,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceConfig {
    pub mode: CovarianceMode,
    pub modes: [usize; 2],
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub t: Option<f64>,
    pub s: Option<f64>,
    pub trajectories: usize,
    pub seed: u64,
    pub convention: ConventionArg,
    pub init: String,
    pub burn_in: f64,
    pub horizon: Horizon,
    pub basis: usize,
    pub engine: EngineArg,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub suite: Suite,
    pub budget: Budget,
    pub trajectories: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum Resolved {
    Spectrum(SpectrumConfig),
    Simulate(SimulateConfig),
    Profile(ProfileConfig),
    Correlations(CorrelationsConfig),
    Covariance(CovarianceConfig),
    Verify(VerifyConfig),
}

impl Resolved {
    pub fn command(&self) -> &'static str {
        match self {
            Resolved::Spectrum(_) => "spectrum",
            Resolved::Simulate(_) => "simulate",
            Resolved::Profile(_) => "profile",
            Resolved::Correlations(_) => "correlations",
            Resolved::Covariance(_) => "covariance",
            Resolved::Verify(_) => "verify",
        }
    }

    /// The resolved values as a JSON object, for output headers.
    pub fn echo(&self) -> Value {
        let v = match self {
            Resolved::Spectrum(c) => serde_json::to_value(c),
            Resolved::Simulate(c) => serde_json::to_value(c),
            Resolved::Profile(c) => serde_json::to_value(c),
            Resolved::Correlations(c) => serde_json::to_value(c),
            Resolved::Covariance(c) => serde_json::to_value(c),
            Resolved::Verify(c) => serde_json::to_value(c),
        };
        v.expect("configs serialise")
    }

    pub fn convention(&self) -> &'static str {
        match self {
            Resolved::Covariance(c) => c.convention.as_str(),
            Resolved::Verify(_) => "both",
            _ => "none",
        }
    }
}

pub const DEFAULT_INIT: &str = "constant:0.5";
pub const DEFAULT_TRAJECTORIES: usize = 1000;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(usage(format!("{}: expected a JSON object", path.display()))),
        Err(e) => Err(usage(format!("{}: {e}", path.display()))),
    }
}

/// Overlays the flags that were given on top of the file values.
fn merge<T: Serialize + DeserializeOwned>(mut file: Map<String, Value>, flags: &T) -> CliResult<T> {
    let Value::Object(given) = serde_json::to_value(flags).expect("flags serialise") else {
        unreachable!("argument structs serialise to objects")
    };
    for (k, v) in given {
        if !v.is_null() {
            file.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(file)).map_err(|e| usage(format!("config: {e}")))
}

fn command_from_file(name: &str) -> CliResult<Command> {
    Ok(match name {
        "spectrum" => Command::Spectrum(Default::default()),
        "simulate" => Command::Simulate(Default::default()),
        "profile" => Command::Profile(Default::default()),
        "correlations" => Command::Correlations(Default::default()),
        "covariance" => Command::Covariance(Default::default()),
        "verify" => Command::Verify(Default::default()),
        other => return Err(usage(format!("unknown command '{other}' in config file"))),
    })
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(format!("missing required option --{flag}")))
}

fn check_n(n: usize) -> CliResult<usize> {
    if n < 3 {
        return Err(usage(format!("n = {n} must be at least 3")));
    }
    Ok(n)
}

fn reservoirs(alpha: f64, beta: f64) -> CliResult<Reservoirs> {
    Reservoirs::new(alpha, beta).map_err(|e| usage(e.to_string()))
}

fn check_times(times: Vec<f64>) -> CliResult<Vec<f64>> {
    if times.is_empty() {
        return Err(usage("--times needs at least one value"));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(usage(format!("time {t} must be finite and nonnegative")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(usage("--times must be sorted"));
    }
    Ok(times)
}

fn check_trajectories(m: usize) -> CliResult<usize> {
    if m == 0 {
        return Err(usage("--trajectories must be at least 1"));
    }
    Ok(m)
}

fn check_init(spec: &str) -> CliResult<String> {
    InitSpec::parse(spec).map_err(|e| usage(e.to_string()))?;
    Ok(spec.to_string())
}

/// Flag, then file, then the `SSEP_SEED` environment variable.
fn seed(given: Option<u64>) -> CliResult<u64> {
    if let Some(s) = given {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Err(usage(format!("no seed: pass --seed, set \"seed\" in the config file or set {SEED_ENV}"))),
    }
}

fn run(out: Option<PathBuf>, threads: Option<usize>, deterministic: Option<bool>) -> CliResult<Run> {
    if threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    Ok(Run { out: out.unwrap_or_else(|| PathBuf::from(".")), threads, deterministic: deterministic.unwrap_or(false) })
}

/// Merges flags with the optional file and checks every value.
pub fn resolve(cli: Cli) -> CliResult<(Resolved, Run)> {
    let mut file = match &cli.config {
        Some(p) => read_file(p)?,
        None => Map::new(),
    };
    let named = file.remove("command");
    let command = match (cli.command, named) {
        (Some(c), None) => c,
        (Some(c), Some(Value::String(f))) if f == c.name() => c,
        (Some(c), Some(f)) => return Err(usage(format!("config file is for command {f}, not {}", c.name()))),
        (None, Some(Value::String(f))) => command_from_file(&f)?,
        (None, Some(f)) => return Err(usage(format!("\"command\" must be a string, got {f}"))),
        (None, None) => return Err(usage("no command given; see --help")),
    };
    match command {
        Command::Spectrum(a) => {
            let a = merge(file, &a)?;
            let count = a.count.unwrap_or(ssep_core::spectral::DEFAULT_MODES);
            if count == 0 {
                return Err(usage("--count must be at least 1"));
            }
            let tol_root = a.tol_root.unwrap_or(ssep_core::spectral::ROOT_TOLERANCE);
            if !(tol_root > 0.0) {
                return Err(usage(format!("--tol-root {tol_root} must be positive")));
            }
            Ok((Resolved::Spectrum(SpectrumConfig { count, tol_root }), run(a.out, a.threads, a.deterministic)?))
        }
        Command::Simulate(a) => {
            let a = merge(file, &a)?;
            let alpha = required(a.alpha, "alpha")?;
            let beta = required(a.beta, "beta")?;
            reservoirs(alpha, beta)?;
            let config = SimulateConfig {
                n: check_n(required(a.n, "n")?)?,
                alpha,
                beta,
                times: check_times(required(a.times, "times")?)?,
                trajectories: check_trajectories(a.trajectories.unwrap_or(DEFAULT_TRAJECTORIES))?,
                seed: seed(a.seed)?,
                init: check_init(a.init.as_deref().unwrap_or(DEFAULT_INIT))?,
                engine: a.engine.unwrap_or(EngineArg::Uniformized),
                pairs: a.pairs.unwrap_or(false),
            };
            Ok((Resolved::Simulate(config), run(a.out, a.threads, a.deterministic)?))
        }
        Command::Profile(a) => {
            let a = merge(file, &a)?;
            let alpha = required(a.alpha, "alpha")?;
            let beta = required(a.beta, "beta")?;
            reservoirs(alpha, beta)?;
            let config = ProfileConfig {
                n: check_n(required(a.n, "n")?)?,
                alpha,
                beta,
                init: check_init(a.init.as_deref().unwrap_or(DEFAULT_INIT))?,
                times: check_times(required(a.times, "times")?)?,
            };
            Ok((Resolved::Profile(config), run(a.out, a.threads, a.deterministic)?))
        }
        Command::Correlations(a) => {
            let a = merge(file, &a)?;
            let alpha = required(a.alpha, "alpha")?;
            let beta = required(a.beta, "beta")?;
            reservoirs(alpha, beta)?;
            let t = required(a.t, "t")?;
            if t.0.is_nan() || t.0 < 0.0 {
                return Err(usage(format!("--t {t} must be nonnegative")));
            }
            let source = a.source.unwrap_or(CorrelationSource::Ode);
            let seed = match source {
                CorrelationSource::Mc => Some(seed(a.seed)?),
                _ => a.seed,
            };
            if source == CorrelationSource::Mc && t.0.is_infinite() {
                return Err(usage("--source mc needs a finite --t"));
            }
            let config = CorrelationsConfig {
                n: check_n(required(a.n, "n")?)?,
                alpha,
                beta,
                t,
                source,
                init: check_init(a.init.as_deref().unwrap_or(DEFAULT_INIT))?,
                trajectories: check_trajectories(a.trajectories.unwrap_or(10 * DEFAULT_TRAJECTORIES))?,
                seed,
                engine: a.engine.unwrap_or(EngineArg::Uniformized),
            };
            Ok((Resolved::Correlations(config), run(a.out, a.threads, a.deterministic)?))
        }
        Command::Covariance(a) => {
            let a = merge(file, &a)?;
            let mode = a.mode.unwrap_or(CovarianceMode::Dynamic);
            let alpha = required(a.alpha, "alpha")?;
            let beta = required(a.beta, "beta")?;
            reservoirs(alpha, beta)?;
            let modes = match a.modes.as_deref() {
                None => [1, 1],
                Some(&[k1, k2]) if k1 >= 1 && k2 >= 1 => [k1, k2],
                Some(other) => return Err(usage(format!("--modes needs two indices ≥ 1, got {other:?}"))),
            };
            let basis = a.basis.unwrap_or(ssep_core::spectral::DEFAULT_MODES);
            if basis < modes[0].max(modes[1]) {
                return Err(usage(format!("--basis {basis} is smaller than the requested modes")));
            }
            let (t, s) = match mode {
                CovarianceMode::Stationary => (None, None),
                _ => {
                    let t = required(a.t, "t")?;
                    let s = a.s.unwrap_or(t);
                    check_times(vec![s, t]).map_err(|_| usage(format!("need 0 ≤ s ≤ t, got s = {s}, t = {t}")))?;
                    (Some(t), Some(s))
                }
            };
            let default_init = match mode {
                CovarianceMode::Stationary => "stationary-discrete",
                _ => "linear:0.2,0.5",
            };
            let burn_in = a.burn_in.unwrap_or(if mode == CovarianceMode::Stationary { 5.0 } else { 0.0 });
            if !(burn_in.is_finite() && burn_in >= 0.0) {
                return Err(usage(format!("--burn-in {burn_in} must be finite and nonnegative")));
            }
            let horizon = a.horizon.unwrap_or(Horizon(20.0));
            if horizon.0.is_nan() || horizon.0 < 0.0 {
                return Err(usage(format!("--horizon {horizon} must be nonnegative")));
            }
            let config = CovarianceConfig {
                mode,
                modes,
                n: check_n(a.n.unwrap_or(256))?,
                alpha,
                beta,
                t,
                s,
                trajectories: check_trajectories(a.trajectories.unwrap_or(10 * DEFAULT_TRAJECTORIES))?,
                seed: seed(a.seed)?,
                convention: a.convention.unwrap_or(ConventionArg::Both),
                init: check_init(a.init.as_deref().unwrap_or(default_init))?,
                burn_in,
                horizon,
                basis,
                engine: a.engine.unwrap_or(EngineArg::Uniformized),
            };
            Ok((Resolved::Covariance(config), run(a.out, a.threads, a.deterministic)?))
        }
        Command::Verify(a) => {
            let a = merge(file, &a)?;
            if a.trajectories == Some(0) {
                return Err(usage("--trajectories must be at least 1"));
            }
            let config = VerifyConfig {
                suite: a.suite.unwrap_or(Suite::All),
                budget: a.budget.unwrap_or(Budget::Fast),
                trajectories: a.trajectories,
                seed: match a.seed.is_some() || std::env::var_os(SEED_ENV).is_some() {
                    true => seed(a.seed)?,
                    false => crate::verify::DEFAULT_SEED,
                },
            };
            Ok((Resolved::Verify(config), run(a.out, a.threads, a.deterministic)?))
        }
    }
}
