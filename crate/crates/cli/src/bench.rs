//! `bench`: repeated gen/fit/eval with aggregate and significance tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use wabc::metrics::{ranksum_test, ResultRow};
use wabc::problems::{make_dataset, NoiseSpec, Problem, ProblemSpec};
use wabc::SeedStream;

use crate::args::{BenchOpts, Method};
use crate::artifacts::RunDir;
use crate::commands::{fit_model, parse_problem, score, with_threads};
use crate::error::{usage, CliError, CliResult};

#[derive(Clone, Copy, Debug)]
struct Cell {
    problem: Problem,
    n: usize,
    sigma: f64,
}

impl Cell {
    fn key(&self) -> String {
        format!("{}/n={}/sigma={:?}", self.problem, self.n, self.sigma)
    }
}

/// Root substream of one trial of one cell.
fn trial_stream(seed: u64, cell: &Cell, trial: usize) -> SeedStream {
    SeedStream::new(seed).label("bench").label(&cell.key()).index(trial as u64)
}

struct TrialOutcome {
    rows: Vec<ResultRow>,
    failures: Vec<(Method, String)>,
}

fn run_trial(o: &BenchOpts, cell: &Cell, trial: usize) -> TrialOutcome {
    let root = trial_stream(o.seed, cell, trial);
    let mut out = TrialOutcome { rows: Vec::new(), failures: Vec::new() };
    let noise = NoiseSpec { sigma: cell.sigma, seed: root.label("data").value() };
    let ds = match make_dataset(&ProblemSpec::new(cell.problem), cell.n, noise) {
        Ok(ds) => ds,
        Err(e) => {
            out.failures.extend(o.methods.iter().map(|&m| (m, format!("dataset: {e}"))));
            return out;
        }
    };
    let eval_seed = root.label("eval").value();
    for &method in &o.methods {
        let fit_seed = root.label(method.name()).value();
        let result = fit_model(&ds.train, method, &o.params, fit_seed, false)
            .and_then(|f| score(&f.model, &ds.truth, wabc::metrics::SURFACE_SAMPLES, eval_seed).map(|s| (f.seconds, s)));
        match result {
            Ok((seconds, (gd, igd))) => out.rows.push(ResultRow {
                problem: cell.problem.to_string(),
                dim: cell.problem.dim(),
                n: cell.n,
                sigma: cell.sigma,
                method: method.name().to_string(),
                trial,
                seed: root.value(),
                gd,
                igd,
                seconds,
            }),
            Err(e) => out.failures.push((method, e.to_string())),
        }
    }
    out
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

fn cell_prefix(c: &Cell) -> String {
    format!("{},{},{},{:?}", c.problem, c.problem.dim(), c.n, c.sigma)
}

pub fn bench(o: &BenchOpts) -> CliResult<()> {
    if o.trials == 0 || o.methods.is_empty() || o.problems.is_empty() || o.sizes.is_empty() || o.sigmas.is_empty() {
        return Err(usage("bench needs at least one problem, size, noise level, method and trial"));
    }
    let mut methods = o.methods.clone();
    methods.dedup();
    if methods.len() != o.methods.len() {
        return Err(usage("--methods lists a method twice"));
    }
    let mut cells = Vec::new();
    for name in &o.problems {
        let problem = parse_problem(name)?;
        for &n in &o.sizes {
            if n == 0 {
                return Err(usage("--n values must be at least 1"));
            }
            for &sigma in &o.sigmas {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(usage("--sigma values must be finite and non-negative"));
                }
                cells.push(Cell { problem, n, sigma });
            }
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..o.trials).map(move |t| (c, t))).collect();
    let outcomes: Vec<TrialOutcome> = if o.jobs == 1 {
        jobs.iter().map(|&(c, t)| run_trial(o, &cells[c], t)).collect()
    } else {
        with_threads(o.jobs, || jobs.par_iter().map(|&(c, t)| run_trial(o, &cells[c], t)).collect())?
    };

    // canonical order: cell, method, trial
    let mut results = format!("{}\n", ResultRow::HEADER);
    let mut summary =
        String::from("problem,M,n,sigma,method,trials,gd_mean,gd_std,igd_mean,igd_std,seconds_mean,seconds_std\n");
    let mut significance = String::from("problem,M,n,sigma,metric,method_a,method_b,mean_a,mean_b,z,p_value,better\n");
    let mut failures = String::from("problem,M,n,sigma,method,trial,error\n");
    let mut failed = 0;
    for (c, cell) in cells.iter().enumerate() {
        let cell_outcomes = &outcomes[c * o.trials..(c + 1) * o.trials];
        let mut per_method: Vec<Vec<&ResultRow>> = Vec::new();
        for &method in &methods {
            let rows: Vec<&ResultRow> =
                cell_outcomes.iter().flat_map(|t| t.rows.iter()).filter(|r| r.method == method.name()).collect();
            for r in &rows {
                results.push_str(&r.to_csv_line());
                results.push('\n');
            }
            if !rows.is_empty() {
                let col = |f: fn(&ResultRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
                let (gm, gs) = mean_std(&col(|r| r.gd));
                let (im, is) = mean_std(&col(|r| r.igd));
                let (sm, ss) = mean_std(&col(|r| r.seconds));
                writeln!(
                    summary,
                    "{},{},{},{gm:?},{gs:?},{im:?},{is:?},{sm:?},{ss:?}",
                    cell_prefix(cell),
                    method.name(),
                    rows.len()
                )
                .expect("write to string");
            }
            per_method.push(rows);
        }
        for (trial, t) in cell_outcomes.iter().enumerate() {
            for (method, err) in &t.failures {
                failed += 1;
                let err = err.replace(['\n', ','], " ");
                writeln!(failures, "{},{},{trial},{err}", cell_prefix(cell), method.name()).expect("write to string");
            }
        }
        for (metric, pick) in [("gd", (|r: &ResultRow| r.gd) as fn(&ResultRow) -> f64), ("igd", |r: &ResultRow| r.igd)] {
            for a in 0..methods.len() {
                for b in a + 1..methods.len() {
                    let va: Vec<f64> = per_method[a].iter().map(|r| pick(r)).collect();
                    let vb: Vec<f64> = per_method[b].iter().map(|r| pick(r)).collect();
                    let fmt_mean = |v: &[f64]| if v.is_empty() { String::new() } else { format!("{:?}", mean_std(v).0) };
                    // too few trials for the normal approximation leaves z and p empty
                    let (z, p) = match ranksum_test(&va, &vb) {
                        Ok(r) => (format!("{:?}", r.z), format!("{:?}", r.p_value)),
                        Err(_) => (String::new(), String::new()),
                    };
                    let better = if va.is_empty() || vb.is_empty() {
                        ""
                    } else if mean_std(&va).0 < mean_std(&vb).0 {
                        methods[a].name()
                    } else {
                        methods[b].name()
                    };
                    writeln!(
                        significance,
                        "{},{metric},{},{},{},{},{z},{p},{better}",
                        cell_prefix(cell),
                        methods[a].name(),
                        methods[b].name(),
                        fmt_mean(&va),
                        fmt_mean(&vb)
                    )
                    .expect("write to string");
                }
            }
        }
    }

    let mut dir = RunDir::create(&o.out)?;
    dir.write("results.csv", results)?;
    dir.write("summary.csv", summary)?;
    dir.write("significance.csv", significance)?;
    dir.write("failures.csv", failures)?;
    let mut seeds = BTreeMap::from([("root".to_string(), o.seed)]);
    for cell in &cells {
        for t in 0..o.trials {
            seeds.insert(format!("{}/trial={t}", cell.key()), trial_stream(o.seed, cell, t).value());
        }
    }
    dir.finish("bench", o, &seeds)?;
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} fits failed; see failures.csv")));
    }
    Ok(())
}
