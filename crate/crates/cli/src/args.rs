//! Flag definitions and the config-file overlay.
//!
//! Each command's options double as its config-file schema: keys are the
//! field names (`n_abc`, `max_proposals`, ...). A value given on the command
//! line wins over the file, the file wins over the built-in default.

use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{input, usage, CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "wabc", version, about = "Bezier simplex fitting by Wasserstein ABC", propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a benchmark Pareto front; writes truth.csv, train.csv, meta.json.
    Gen(WithConfig<GenOpts>),
    /// Fit a Bezier simplex to a training CSV; writes model.json, report.json.
    Fit(WithConfig<FitOpts>),
    /// Score a model against a truth CSV and print one results row.
    Eval(WithConfig<EvalOpts>),
    /// Repeated gen/fit/eval over a grid of problems, sizes and noise levels.
    Bench(WithConfig<BenchOpts>),
    /// Threshold bias of WABC on a toy model with a known posterior.
    BiasScan(WithConfig<BiasScanOpts>),
    /// Acceptance rate of WABC against the threshold on a toy model.
    AcceptScan(WithConfig<AcceptScanOpts>),
}

#[derive(Args, Debug)]
pub struct WithConfig<T: Args> {
    /// JSON or TOML file with default values for this command's options.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub opts: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wabc,
    Aao,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Wabc => "wabc",
            Method::Aao => "aao",
        }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct GenOpts {
    /// schaffer, viennet2 or <M>-med.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Standard deviation of the Gaussian noise added to the training copy.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Pool resolution; defaults to the problem's own.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long, default_value = "run")]
    pub out: PathBuf,
}

/// Settings shared by `fit` and `bench`.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct FitParams {
    /// Bezier degree D.
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 100)]
    pub n_abc: usize,
    #[arg(long, default_value_t = 50)]
    pub n_updates: usize,
    #[arg(long, default_value_t = 100)]
    pub n_delta: usize,
    /// Proposal budget of one ABC round.
    #[arg(long, default_value_t = 100_000)]
    pub max_proposals: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub eig_stop: f64,
    #[arg(long, default_value_t = 0.9)]
    pub delta_shrink: f64,
    /// Initial threshold; estimated from the initial prior when absent.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Initial prior variance of every control point.
    #[arg(long, default_value_t = 0.1)]
    pub init_var: f64,
    /// Outer iterations of the least-squares baseline.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Softmax temperature of the baseline's parameter initialization.
    #[arg(long, default_value_t = 0.1)]
    pub init_temperature: f64,
    /// Record zero instead of measured wall-clock seconds.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct FitOpts {
    /// Training CSV with an `f1,...,fM` header.
    #[arg(value_name = "TRAIN_CSV")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "wabc")]
    pub method: Method,
    /// Expected objective dimension M; checked against the data.
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: FitParams,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for proposal evaluation (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(short, long, default_value = "fit")]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct EvalOpts {
    #[arg(long, value_name = "MODEL_JSON")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "TRUTH_CSV")]
    pub truth: Option<PathBuf>,
    /// Surface points drawn from the model.
    #[arg(long, default_value_t = wabc::metrics::SURFACE_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Row labels; problem, n and sigma default to meta.json next to the truth file.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value = "unknown")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    #[arg(long, default_value_t = 0.0)]
    pub seconds: f64,
    /// Also append the row to this CSV, writing the header if it is new.
    #[arg(long, value_name = "RESULTS_CSV")]
    pub append: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct BenchOpts {
    #[arg(long, value_delimiter = ',', default_value = "3-med")]
    pub problems: Vec<String>,
    #[arg(long = "n", value_delimiter = ',', default_value = "50")]
    pub sizes: Vec<usize>,
    #[arg(long = "sigma", value_delimiter = ',', default_value = "0.1")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "wabc,aao")]
    pub methods: Vec<Method>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: FitParams,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trials run concurrently (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(short, long, default_value = "bench")]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct BiasScanOpts {
    /// gaussian or uniform.
    #[arg(long, default_value = "gaussian")]
    pub model: String,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_abc: usize,
    /// Threshold grid; 8 points per decade over [0.1, 10^0.5] when absent.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Proposal budget per trial.
    #[arg(long, default_value_t = 500_000_000)]
    pub max_proposals: u64,
    /// Accepted range `lo,hi` of the mean middle-point slope.
    #[arg(long, value_delimiter = ',')]
    pub slope_band: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(short, long, default_value = "bias-scan")]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct AcceptScanOpts {
    #[arg(long, default_value = "gaussian")]
    pub model: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Threshold grid; 7 points over [0.01, 10^-0.5] when absent.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1_000_000)]
    pub proposals: u64,
    /// Accepted slope range `lo,hi`; defaults to n -/+ 0.3.
    #[arg(long, value_delimiter = ',')]
    pub slope_band: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(short, long, default_value = "accept-scan")]
    pub out: PathBuf,
}

fn load_config(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| input(path, e))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let value: Value = if is_toml {
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(usage(format!("{}: config must be a table of options", path.display()))),
    }
}

/// Names of the clap arguments set on the command line. Argument ids are
/// the field names, which are also the config keys.
fn explicit_ids(matches: &ArgMatches) -> Vec<String> {
    matches
        .ids()
        .filter(|id| matches.value_source(id.as_str()) == Some(ValueSource::CommandLine))
        .map(|id| id.as_str().to_string())
        .collect()
}

/// Options with config-file values laid under the command-line ones.
pub fn resolve<T>(parsed: &T, matches: &ArgMatches, config: Option<&Path>) -> CliResult<T>
where
    T: Clone + Serialize + DeserializeOwned,
{
    let Some(path) = config else {
        return Ok(parsed.clone());
    };
    let mut merged = load_config(path)?;
    let Value::Object(flags) = serde_json::to_value(parsed).map_err(|e| CliError::Runtime(e.to_string()))? else {
        return Err(CliError::Runtime("options did not serialize to a table".into()));
    };
    if let Some(unknown) = merged.keys().find(|k| !flags.contains_key(*k)) {
        return Err(usage(format!("{}: unknown option {unknown:?}", path.display())));
    }
    let explicit = explicit_ids(matches);
    for (key, value) in flags {
        if explicit.contains(&key) || !merged.contains_key(&key) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("{}: {e}", path.display())))
}
