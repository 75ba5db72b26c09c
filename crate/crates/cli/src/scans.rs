//! `bias-scan` and `accept-scan`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use wabc::theory::{
    acceptance_scan, acceptance_streams, bias_scan, default_bias_grid, log_grid, trial_streams, BiasScanConfig, Line,
    ToyKind, ToyModel,
};
use wabc::SeedStream;

use crate::args::{AcceptScanOpts, BiasScanOpts};
use crate::artifacts::{to_json, RunDir};
use crate::commands::with_threads;
use crate::error::{usage, CliResult};

fn parse_model(name: &str) -> CliResult<ToyModel> {
    Ok(ToyModel::new(name.parse::<ToyKind>().map_err(|e| usage(e.to_string()))?))
}

fn band(given: &Option<Vec<f64>>, default: [f64; 2]) -> CliResult<[f64; 2]> {
    match given.as_deref() {
        None => Ok(default),
        Some([lo, hi]) if lo <= hi => Ok([*lo, *hi]),
        Some(_) => Err(usage("--slope-band takes two values lo,hi with lo <= hi")),
    }
}

/// Default acceptance band of the mean middle-point slope.
pub fn default_bias_band(kind: ToyKind) -> [f64; 2] {
    match kind {
        ToyKind::Gaussian => [1.7, 2.5],
        ToyKind::Uniform => [1.5, 2.7],
    }
}

#[derive(Serialize)]
struct BiasSummary {
    model: ToyKind,
    n: usize,
    n_abc: usize,
    trials: usize,
    slope_mid: Option<f64>,
    slope_mid_std: Option<f64>,
    slope_all: Option<f64>,
    slope_all_std: Option<f64>,
    fit_middle: Option<Line>,
    fit_all: Option<Line>,
    band: [f64; 2],
    pass: bool,
    /// `(trial, cell)` pairs that ran out of proposals.
    missing: Vec<(usize, usize)>,
}

pub fn bias(o: &BiasScanOpts) -> CliResult<()> {
    let model = parse_model(&o.model)?;
    let band = band(&o.slope_band, default_bias_band(model.kind))?;
    let seed = SeedStream::new(o.seed).label("bias-scan").value();
    let cfg = BiasScanConfig {
        n: o.n,
        n_abc: o.n_abc,
        trials: o.trials,
        deltas: o.deltas.clone().unwrap_or_else(default_bias_grid),
        max_proposals: o.max_proposals,
        seed,
        parallel: o.jobs != 1,
    };
    let report = with_threads(o.jobs, || bias_scan(&model, &cfg))??;

    let mut curve = String::from("log_delta,log_bias\n");
    for (d, b) in report.deltas.iter().zip(&report.mean_bias) {
        if let Some(b) = b.filter(|b| *b > 0.0) {
            writeln!(curve, "{:?},{:?}", d.ln(), b.ln()).expect("write to string");
        }
    }
    let slope_mid = report.slope_middle.as_ref().map(|s| s.mean);
    let summary = BiasSummary {
        model: model.kind,
        n: o.n,
        n_abc: o.n_abc,
        trials: o.trials,
        slope_mid,
        slope_mid_std: report.slope_middle.as_ref().map(|s| s.std),
        slope_all: report.slope_all.as_ref().map(|s| s.mean),
        slope_all_std: report.slope_all.as_ref().map(|s| s.std),
        fit_middle: report.fit_middle.clone(),
        fit_all: report.fit_all.clone(),
        band,
        pass: slope_mid.is_some_and(|s| s >= band[0] && s <= band[1]),
        missing: report.missing.clone(),
    };
    if !report.missing.is_empty() {
        eprintln!("warning: {} cells ran out of proposals and were left out of the fits", report.missing.len());
    }

    let mut dir = RunDir::create(&o.out)?;
    dir.write("bias.csv", curve)?;
    dir.write("bias_trials.csv", report.to_csv())?;
    dir.write("report.json", to_json(&report)?)?;
    dir.write("summary.json", to_json(&summary)?)?;
    let mut seeds = BTreeMap::from([("root".to_string(), o.seed), ("scan".to_string(), seed)]);
    for t in 0..o.trials {
        let (data, proposals) = trial_streams(seed, t);
        seeds.insert(format!("trial={t}/data"), data.value());
        seeds.insert(format!("trial={t}/proposals"), proposals.value());
    }
    dir.finish("bias-scan", o, &seeds)
}

#[derive(Serialize)]
struct AcceptSummary {
    model: ToyKind,
    n: usize,
    proposals_per_cell: u64,
    /// `q = n M` with `M = 1`.
    predicted_slope: f64,
    slope: Option<f64>,
    intercept: Option<f64>,
    band: [f64; 2],
    pass: bool,
    empty_cells: Vec<usize>,
}

pub fn accept(o: &AcceptScanOpts) -> CliResult<()> {
    let model = parse_model(&o.model)?;
    if o.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let q = o.n as f64;
    let band = band(&o.slope_band, [q - 0.3, q + 0.3])?;
    let deltas = match &o.deltas {
        Some(d) => d.clone(),
        None => log_grid(-2.0, -0.5, 7)?,
    };
    let seed = SeedStream::new(o.seed).label("accept-scan").value();
    let scan = with_threads(o.jobs, || acceptance_scan(&model, o.n, &deltas, o.proposals, seed, o.jobs != 1))??;

    let mut curve = String::from("log_delta,log_rate\n");
    for c in scan.cells.iter().filter(|c| c.accepted > 0 && c.delta > 0.0 && c.delta.is_finite()) {
        writeln!(curve, "{:?},{:?}", c.delta.ln(), c.rate.ln()).expect("write to string");
    }
    let summary = AcceptSummary {
        model: model.kind,
        n: o.n,
        proposals_per_cell: o.proposals,
        predicted_slope: q,
        slope: scan.slope,
        intercept: scan.intercept,
        band,
        pass: scan.slope.is_some_and(|s| s >= band[0] && s <= band[1]),
        empty_cells: scan.empty_cells.clone(),
    };

    let mut dir = RunDir::create(&o.out)?;
    dir.write("accept.csv", curve)?;
    dir.write("accept_cells.csv", scan.to_csv())?;
    dir.write("summary.json", to_json(&summary)?)?;
    let (data, proposals) = acceptance_streams(seed);
    let seeds = BTreeMap::from([
        ("root".to_string(), o.seed),
        ("scan".to_string(), seed),
        ("data".to_string(), data.value()),
        ("proposals".to_string(), proposals.value()),
    ]);
    dir.finish("accept-scan", o, &seeds)
}
