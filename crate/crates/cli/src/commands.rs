//! `gen`, `fit` and `eval`.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use wabc::aao::{aao_fit, AaoConfig};
use wabc::abc::{init_hyperparams, wabc_fit, AbcConfig};
use wabc::metrics::{gd, igd, surface_sample_for_metrics, ResultRow};
use wabc::problems::{make_dataset, DatasetMeta, NoiseSpec, Problem, ProblemSpec};
use wabc::{BezierModel, PointCloud, SeedStream};

use crate::args::{EvalOpts, FitOpts, FitParams, GenOpts, Method};
use crate::artifacts::{to_json, RunDir};
use crate::error::{input, usage, CliError, CliResult};

pub fn parse_problem(name: &str) -> CliResult<Problem> {
    name.parse::<Problem>().map_err(|e| usage(e.to_string()))
}

pub fn read_cloud(path: &Path) -> CliResult<PointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| input(path, e))?;
    PointCloud::from_csv(&text).map_err(|e| input(path, e))
}

fn check_sigma(sigma: f64) -> CliResult<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("sigma must be a finite non-negative number, got {sigma}")))
    }
}

pub fn gen(o: &GenOpts) -> CliResult<()> {
    let problem = parse_problem(o.problem.as_deref().ok_or_else(|| usage("--problem is required"))?)?;
    if o.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    check_sigma(o.sigma)?;
    let mut spec = ProblemSpec::new(problem);
    if let Some(r) = o.resolution {
        spec.resolution = r;
    }
    let data_seed = SeedStream::new(o.seed).label("gen").label("data").value();
    let ds = make_dataset(&spec, o.n, NoiseSpec { sigma: o.sigma, seed: data_seed })?;

    let mut dir = RunDir::create(&o.out)?;
    dir.write("truth.csv", ds.truth.to_csv())?;
    dir.write("train.csv", ds.train.to_csv())?;
    dir.write("meta.json", to_json(&ds.meta)?)?;
    let seeds = BTreeMap::from([("root".to_string(), o.seed), ("data".to_string(), data_seed)]);
    dir.finish("gen", o, &seeds)
}

/// Report of a least-squares baseline run.
#[derive(Serialize)]
struct AaoReport {
    method: &'static str,
    seed: u64,
    loss_trajectory: Vec<f64>,
    final_loss: f64,
    iterations: usize,
    rank_deficient: bool,
    unconverged_projections: usize,
    wall_clock_seconds: f64,
}

/// A fitted model with its serialized report.
pub struct Fitted {
    pub model: BezierModel,
    pub report_json: String,
    pub seconds: f64,
}

fn check_params(p: &FitParams) -> CliResult<()> {
    if p.degree == 0 {
        return Err(usage("--degree must be at least 1"));
    }
    if !(p.init_var > 0.0 && p.init_var.is_finite()) {
        return Err(usage("--init-var must be positive"));
    }
    Ok(())
}

/// Runs one method with the seed `seed`; `parallel` only affects speed.
pub fn fit_model(data: &PointCloud, method: Method, p: &FitParams, seed: u64, parallel: bool) -> CliResult<Fitted> {
    check_params(p)?;
    let started = Instant::now();
    let clock = |t: f64| if p.no_timing { 0.0 } else { t };
    match method {
        Method::Wabc => {
            let cfg = AbcConfig {
                delta: p.delta,
                n_abc: p.n_abc,
                n_updates: p.n_updates,
                n_delta: p.n_delta,
                max_proposals_per_round: p.max_proposals,
                eig_stop: p.eig_stop,
                delta_shrink: p.delta_shrink,
                seed,
                parallel,
            };
            cfg.validate()?;
            let hp = init_hyperparams(data, p.degree, p.init_var)?;
            let mut report = wabc_fit(data, &hp, &cfg)?;
            let seconds = clock(started.elapsed().as_secs_f64());
            report.wall_clock_seconds = seconds;
            Ok(Fitted { model: report.model()?, report_json: to_json(&report)?, seconds })
        }
        Method::Aao => {
            let cfg = AaoConfig {
                max_outer_iters: p.max_iters,
                init_temperature: p.init_temperature,
                seed,
                ..AaoConfig::default()
            };
            let fit = aao_fit(data, p.degree, &cfg)?;
            let seconds = clock(started.elapsed().as_secs_f64());
            let report = AaoReport {
                method: "aao",
                seed,
                final_loss: *fit.loss_trajectory.last().expect("initial loss is recorded"),
                iterations: fit.loss_trajectory.len() - 1,
                loss_trajectory: fit.loss_trajectory,
                rank_deficient: fit.rank_deficient,
                unconverged_projections: fit.unconverged_projections,
                wall_clock_seconds: seconds,
            };
            Ok(Fitted { model: fit.model, report_json: to_json(&report)?, seconds })
        }
    }
}

/// Runs `f` on a pool of `jobs` threads (0 = all cores).
pub fn with_threads<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn fit(o: &FitOpts) -> CliResult<()> {
    let path = o.input.as_deref().ok_or_else(|| usage("a training CSV is required"))?;
    let data = read_cloud(path)?;
    if let Some(m) = o.dim {
        if m != data.dim() {
            return Err(CliError::Data(format!("{}: expected {m} objectives, found {}", path.display(), data.dim())));
        }
    }
    let seed = SeedStream::new(o.seed).label("fit").label(o.method.name()).value();
    let fitted = with_threads(o.jobs, || fit_model(&data, o.method, &o.params, seed, o.jobs != 1))??;

    let mut dir = RunDir::create(&o.out)?;
    dir.write("model.json", fitted.model.to_json() + "\n")?;
    dir.write("report.json", fitted.report_json)?;
    let seeds = BTreeMap::from([("root".to_string(), o.seed), ("fit".to_string(), seed)]);
    dir.finish("fit", o, &seeds)
}

/// GD and IGD of `model` against `truth` from `samples` surface points.
pub fn score(model: &BezierModel, truth: &PointCloud, samples: usize, seed: u64) -> CliResult<(f64, f64)> {
    if model.dim() != truth.dim() {
        return Err(CliError::Data(format!("model has {} objectives, truth has {}", model.dim(), truth.dim())));
    }
    let surface = surface_sample_for_metrics(model, samples, &mut SeedStream::new(seed).label("eval").rng())?;
    Ok((gd(&surface, truth)?, igd(&surface, truth)?))
}

pub fn eval(o: &EvalOpts) -> CliResult<()> {
    let model_path = o.model.as_deref().ok_or_else(|| usage("--model is required"))?;
    let truth_path = o.truth.as_deref().ok_or_else(|| usage("--truth is required"))?;
    if o.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let text = std::fs::read_to_string(model_path).map_err(|e| input(model_path, e))?;
    let model = BezierModel::from_json(&text).map_err(|e| input(model_path, e))?;
    let truth = read_cloud(truth_path)?;

    let meta_path = truth_path.with_file_name("meta.json");
    let meta: Option<DatasetMeta> = match std::fs::read_to_string(&meta_path) {
        Ok(t) => Some(serde_json::from_str(&t).map_err(|e| input(&meta_path, e))?),
        Err(_) => None,
    };
    let (gd, igd) = score(&model, &truth, o.samples, o.seed)?;
    let row = ResultRow {
        problem: o
            .problem
            .clone()
            .or_else(|| meta.as_ref().map(|m| m.problem.to_string()))
            .unwrap_or_else(|| "unknown".into()),
        dim: model.dim(),
        n: o.n.or(meta.as_ref().map(|m| m.count)).unwrap_or(truth.len()),
        sigma: o.sigma.or(meta.as_ref().map(|m| m.sigma)).unwrap_or(0.0),
        method: o.method.clone(),
        trial: o.trial,
        seed: o.seed,
        gd,
        igd,
        seconds: o.seconds,
    };
    let line = row.to_csv_line();
    println!("{}\n{line}", ResultRow::HEADER);
    if let Some(path) = &o.append {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
        let text = if fresh { format!("{}\n{line}\n", ResultRow::HEADER) } else { format!("{line}\n") };
        f.write_all(text.as_bytes()).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
