//! One-dimensional toy models with exact posteriors, used to measure how the
//! WABC posterior mean approaches the exact one as the threshold shrinks and
//! how the acceptance rate scales with the threshold.
//!
//! Both toys put a `N(0, s^2)` prior on `theta` (`s` is the model scale, 1 by
//! default). The Gaussian toy draws `n` points from `N(theta, s^2)` and
//! observes data from `N(-1.5 s, s^2)`; the uniform toy draws from
//! `U(0, theta)` (or `U(theta, 0)` for negative `theta`) and observes
//! `U(0, s)` data rescaled so that its maximum is `s`.
//!
//! The scans below draw one proposal stream and evaluate every proposal
//! against all thresholds of a grid, so comparisons across thresholds are
//! exact rather than statistical.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abc::{rejection_sample, GenerativeModel};
use crate::cloud::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;
use crate::seed::SeedStream;
use crate::transport::{wasserstein2, wasserstein2_sorted_1d};

/// Mean of the Gaussian toy's data distribution, in units of the scale.
pub const GAUSSIAN_DATA_MEAN: f64 = -1.5;
/// Upper integration limit (in units of the scale) for the uniform toy's
/// posterior; the Gaussian tail beyond it is below `1e-21`.
pub const UNIFORM_UPPER_LIMIT: f64 = 10.0;
/// Proposals per random substream in the scans.
pub const SCAN_BLOCK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyKind {
    Gaussian,
    Uniform,
}

impl fmt::Display for ToyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyKind::Gaussian => "gaussian",
            ToyKind::Uniform => "uniform",
        })
    }
}

impl FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(ToyKind::Gaussian),
            "uniform" => Ok(ToyKind::Uniform),
            other => Err(invalid(format!("unknown toy model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub kind: ToyKind,
    pub scale: f64,
}

impl ToyModel {
    pub fn new(kind: ToyKind) -> Self {
        ToyModel { kind, scale: 1.0 }
    }

    pub fn with_scale(kind: ToyKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("toy model scale must be positive"));
        }
        Ok(ToyModel { kind, scale })
    }

    /// Observed data of size `n`.
    pub fn generate_data<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptyCloud);
        }
        let s = self.scale;
        Ok(match self.kind {
            ToyKind::Gaussian => (0..n)
                .map(|_| s * (GAUSSIAN_DATA_MEAN + rng.sample::<f64, _>(StandardNormal)))
                .collect(),
            ToyKind::Uniform => {
                let u: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
                let max = u.iter().copied().fold(0.0, f64::max);
                u.iter().map(|v| s * (v / max)).collect()
            }
        })
    }

    pub fn exact_posterior_mean(&self, data: &[f64]) -> Result<f64> {
        let s = self.scale;
        let unit: Vec<f64> = data.iter().map(|v| v / s).collect();
        Ok(s * match self.kind {
            ToyKind::Gaussian => exact_posterior_mean_gaussian(&unit)?,
            ToyKind::Uniform => exact_posterior_mean_uniform(&unit)?,
        })
    }
}

impl GenerativeModel for ToyModel {
    type Param = f64;

    fn draw_param<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * rng.sample::<f64, _>(StandardNormal)
    }

    fn simulate<R: Rng + ?Sized>(&self, theta: &f64, n: usize, rng: &mut R) -> PointCloud {
        let values: Vec<f64> = match self.kind {
            ToyKind::Gaussian => (0..n).map(|_| theta + self.scale * rng.sample::<f64, _>(StandardNormal)).collect(),
            ToyKind::Uniform => (0..n).map(|_| theta * rng.random::<f64>()).collect(),
        };
        PointCloud::from_scalars(&values).expect("n >= 1")
    }
}

/// `sum x_i / (n + 1)`.
pub fn exact_posterior_mean_gaussian(data: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(data.iter().sum::<f64>() / (data.len() + 1) as f64)
}

/// Posterior mean of the uniform toy for data with maximum 1:
/// `int_1^inf e^{-t^2/2} t^{1-n} dt / int_1^inf e^{-t^2/2} t^{-n} dt`.
pub fn exact_posterior_mean_uniform(data: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if data.iter().any(|&v| !(v > 0.0)) || (max - 1.0).abs() > 1e-12 {
        return Err(invalid("uniform toy data must lie in (0, 1] with maximum 1"));
    }
    let (num, den) = uniform_posterior_integrals(data.len(), |f, a, b| integrate(f, a, b, 1e-12, 0.0))?;
    Ok(num / den)
}

/// Numerator and denominator integrals of the uniform toy's posterior mean,
/// computed with the supplied rule on `[1, UNIFORM_UPPER_LIMIT]`.
pub fn uniform_posterior_integrals(
    n: usize,
    rule: impl Fn(&dyn Fn(f64) -> f64, f64, f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let n = n as f64;
    let num = |t: f64| (-0.5 * t * t - (n - 1.0) * t.ln()).exp();
    let den = |t: f64| (-0.5 * t * t - n * t.ln()).exp();
    Ok((rule(&num, 1.0, UNIFORM_UPPER_LIMIT)?, rule(&den, 1.0, UNIFORM_UPPER_LIMIT)?))
}

/// Which 1-D Wasserstein implementation [`wabc_toy_estimate`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyDistance {
    /// General assignment solver.
    Assignment,
    /// Matching of sorted samples.
    Sorted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyEstimate {
    pub mean: f64,
    pub accepted: usize,
    pub attempted: u64,
}

/// Mean of `n_abc` accepted parameters of plain rejection ABC with the
/// 2-Wasserstein distance.
pub fn wabc_toy_estimate(
    model: &ToyModel,
    data: &[f64],
    delta: f64,
    n_abc: usize,
    max_proposals: u64,
    distance: ToyDistance,
    stream: SeedStream,
) -> Result<ToyEstimate> {
    if !(delta > 0.0) {
        return Err(invalid("threshold must be positive"));
    }
    if n_abc == 0 {
        return Err(invalid("n_abc must be positive"));
    }
    let cloud = PointCloud::from_scalars(data)?;
    let out = match distance {
        ToyDistance::Assignment => {
            let d = |x: &PointCloud, y: &PointCloud| wasserstein2(x, y).expect("equal sizes");
            rejection_sample(model, &cloud, delta, n_abc, max_proposals, &d, stream, false)?
        }
        ToyDistance::Sorted => {
            let d = |x: &PointCloud, y: &PointCloud| wasserstein2_sorted_1d(x, y).expect("equal sizes");
            rejection_sample(model, &cloud, delta, n_abc, max_proposals, &d, stream, false)?
        }
    };
    if out.accepted.len() < n_abc {
        return Err(Error::BudgetExhausted { attempts: out.attempted, accepted: out.accepted.len() });
    }
    let mean = out.accepted.iter().sum::<f64>() / n_abc as f64;
    Ok(ToyEstimate { mean, accepted: n_abc, attempted: out.attempted })
}

/// Per-threshold tallies of one shared-stream scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCells {
    pub deltas: Vec<f64>,
    pub accepted: Vec<usize>,
    /// Proposals seen by each cell: up to its last needed acceptance when a
    /// target was given, otherwise all of them.
    pub attempted: Vec<u64>,
    pub accepted_sum: Vec<f64>,
}

struct ScanContext<'a> {
    model: &'a ToyModel,
    sorted_data: Vec<f64>,
    data_mean: f64,
    n: usize,
    stream: SeedStream,
}

impl ScanContext<'_> {
    /// Distance of each proposal of block `b` (first `len` proposals), or
    /// `None` when the mean bound `|mean(y) - mean(x)| <= W2` already exceeds
    /// `bound`.
    fn block(&self, b: u64, len: u64, bound: f64) -> Vec<(f64, Option<f64>)> {
        let mut rng = self.stream.index(b).rng();
        let n = self.n;
        let s = self.model.scale;
        let mut y = vec![0.0; n];
        let mut out = Vec::with_capacity(len as usize);
        // relative slack so that rounding never turns a bound rejection into
        // an acceptance
        let cut = bound * (1.0 + 1e-9);
        // residuals come from a per-proposal substream so that the main block
        // stream does not depend on which proposals pass the bound
        let residuals = self.stream.label("residuals");
        for i in 0..len {
            let theta = s * rng.sample::<f64, _>(StandardNormal);
            let ybar = match self.model.kind {
                ToyKind::Gaussian => {
                    // sample mean first; the centred residuals are independent
                    // of it and are only drawn when needed
                    let m = s * rng.sample::<f64, _>(StandardNormal) / (n as f64).sqrt();
                    theta + m
                }
                ToyKind::Uniform => {
                    for v in y.iter_mut() {
                        *v = theta * rng.random::<f64>();
                    }
                    y.iter().sum::<f64>() / n as f64
                }
            };
            if (ybar - self.data_mean).abs() > cut {
                out.push((theta, None));
                continue;
            }
            if self.model.kind == ToyKind::Gaussian {
                let mut zrng = residuals.index(b * SCAN_BLOCK + i).rng();
                for v in y.iter_mut() {
                    *v = zrng.sample::<f64, _>(StandardNormal);
                }
                let zbar = y.iter().sum::<f64>() / n as f64;
                for v in y.iter_mut() {
                    *v = ybar + s * (*v - zbar);
                }
            }
            y.sort_unstable_by(f64::total_cmp);
            let ss: f64 = y.iter().zip(&self.sorted_data).map(|(a, b)| (a - b) * (a - b)).sum();
            out.push((theta, Some((ss / n as f64).sqrt())));
        }
        out
    }
}

/// Evaluates one proposal stream against every threshold in `deltas`.
///
/// With `target = Some(k)` a cell stops counting after its `k`-th acceptance
/// and the scan ends once all cells are full or `max_proposals` were drawn.
/// With `target = None` exactly `max_proposals` proposals are counted.
pub fn shared_scan(
    model: &ToyModel,
    data: &[f64],
    deltas: &[f64],
    target: Option<usize>,
    max_proposals: u64,
    stream: SeedStream,
    parallel: bool,
) -> Result<ScanCells> {
    if data.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d >= 0.0)) {
        return Err(invalid("thresholds must be non-negative"));
    }
    let mut sorted_data = data.to_vec();
    sorted_data.sort_unstable_by(f64::total_cmp);
    let ctx = ScanContext {
        model,
        data_mean: data.iter().sum::<f64>() / data.len() as f64,
        n: data.len(),
        sorted_data,
        stream,
    };
    let k = deltas.len();
    let mut cells = ScanCells {
        deltas: deltas.to_vec(),
        accepted: vec![0; k],
        attempted: vec![0; k],
        accepted_sum: vec![0.0; k],
    };
    let mut active = vec![true; k];
    let blocks = max_proposals.div_ceil(SCAN_BLOCK);
    let wave = if parallel { (2 * rayon::current_num_threads()).max(1) as u64 } else { 1 };
    let mut next = 0;
    while next < blocks && active.iter().any(|&a| a) {
        let bound = (0..k).filter(|&j| active[j]).map(|j| deltas[j]).fold(0.0, f64::max);
        let end = (next + wave).min(blocks);
        let run = |b: u64| ctx.block(b, SCAN_BLOCK.min(max_proposals - b * SCAN_BLOCK), bound);
        let results: Vec<_> =
            if parallel { (next..end).into_par_iter().map(run).collect() } else { (next..end).map(run).collect() };
        for (theta, dist) in results.into_iter().flatten() {
            for j in 0..k {
                if !active[j] {
                    continue;
                }
                cells.attempted[j] += 1;
                if dist.is_some_and(|d| d <= deltas[j]) {
                    cells.accepted[j] += 1;
                    cells.accepted_sum[j] += theta;
                    if target == Some(cells.accepted[j]) {
                        active[j] = false;
                    }
                }
            }
            if !active.iter().any(|&a| a) {
                break;
            }
        }
        next = end;
    }
    Ok(cells)
}

/// Ordinary least-squares line `y = slope * x + intercept`; `None` with
/// fewer than two points or no spread in `x`.
pub fn ols_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// `count` log-spaced values from `10^lo` to `10^hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(hi > lo) {
        return Err(invalid("log grid needs at least 2 points and hi > lo"));
    }
    Ok((0..count).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64)).collect())
}

/// Default threshold grid: 8 points per decade over `[10^-1, 10^0.5]`.
pub fn default_bias_grid() -> Vec<f64> {
    log_grid(-1.0, 0.5, 13).expect("valid grid")
}

/// Indices kept by the middle-point regression: the grid minus
/// `round(0.2 k)` points at each end.
pub fn middle_indices(k: usize) -> std::ops::Range<usize> {
    let drop = (0.2 * k as f64).round() as usize;
    drop..k.saturating_sub(drop)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub c1: f64,
    pub c0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasTrial {
    pub trial: usize,
    pub exact_mean: f64,
    /// `|mean of accepted - exact posterior mean|`, `None` where the cell ran
    /// out of proposals.
    pub bias: Vec<Option<f64>>,
    pub attempted: Vec<u64>,
    pub all: Option<Line>,
    pub middle: Option<Line>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasScanReport {
    pub model: ToyModel,
    pub n: usize,
    pub n_abc: usize,
    pub deltas: Vec<f64>,
    pub trials: Vec<BiasTrial>,
    /// Per-threshold mean bias over the trials where the cell completed.
    pub mean_bias: Vec<Option<f64>>,
    /// Regression of log mean bias on log delta.
    pub fit_all: Option<Line>,
    pub fit_middle: Option<Line>,
    pub slope_all: Option<SlopeSummary>,
    pub slope_middle: Option<SlopeSummary>,
    /// Cells that did not reach `n_abc` acceptances, as `(trial, cell)`.
    pub missing: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasScanConfig {
    pub n: usize,
    pub n_abc: usize,
    pub trials: usize,
    pub deltas: Vec<f64>,
    pub max_proposals: u64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for BiasScanConfig {
    fn default() -> Self {
        BiasScanConfig {
            n: 100,
            n_abc: 1000,
            trials: 10,
            deltas: default_bias_grid(),
            max_proposals: 500_000_000,
            seed: 0,
            parallel: false,
        }
    }
}

fn log_fit(deltas: &[f64], values: &[Option<f64>], keep: std::ops::Range<usize>) -> Option<Line> {
    let (x, y): (Vec<f64>, Vec<f64>) = keep
        .filter_map(|j| values[j].filter(|v| *v > 0.0).map(|v| (deltas[j].ln(), v.ln())))
        .unzip();
    ols_line(&x, &y).map(|(c1, c0)| Line { c1, c0 })
}

fn summarize(slopes: &[f64]) -> Option<SlopeSummary> {
    if slopes.is_empty() {
        return None;
    }
    let n = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / n;
    let std = if slopes.len() > 1 {
        (slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(SlopeSummary { mean, std, trials: slopes.len() })
}

/// Substreams of one trial: observed data and proposals.
pub fn trial_streams(seed: u64, trial: usize) -> (SeedStream, SeedStream) {
    let root = SeedStream::new(seed).label("toy").index(trial as u64);
    (root.label("data"), root.label("proposals"))
}

/// Log-log regression of the WABC posterior-mean bias on the threshold.
pub fn bias_scan(model: &ToyModel, cfg: &BiasScanConfig) -> Result<BiasScanReport> {
    let k = cfg.deltas.len();
    if k < 5 {
        return Err(invalid("bias scan needs at least 5 thresholds"));
    }
    if cfg.deltas.windows(2).any(|w| !(w[1] > w[0])) || !(cfg.deltas[0] > 0.0) {
        return Err(invalid("thresholds must be positive and strictly increasing"));
    }
    if cfg.deltas[k - 1] / cfg.deltas[0] < 10.0 * (1.0 - 1e-12) {
        return Err(invalid("threshold grid must span at least one decade"));
    }
    if cfg.trials == 0 || cfg.n_abc == 0 {
        return Err(invalid("trials and n_abc must be positive"));
    }
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut missing = Vec::new();
    for trial in 0..cfg.trials {
        let (data_stream, proposal_stream) = trial_streams(cfg.seed, trial);
        let data = model.generate_data(cfg.n, &mut data_stream.rng())?;
        let exact = model.exact_posterior_mean(&data)?;
        let cells = shared_scan(model, &data, &cfg.deltas, Some(cfg.n_abc), cfg.max_proposals, proposal_stream, cfg.parallel)?;
        let bias: Vec<Option<f64>> = (0..k)
            .map(|j| {
                (cells.accepted[j] == cfg.n_abc).then(|| (cells.accepted_sum[j] / cfg.n_abc as f64 - exact).abs())
            })
            .collect();
        missing.extend((0..k).filter(|&j| bias[j].is_none()).map(|j| (trial, j)));
        trials.push(BiasTrial {
            trial,
            exact_mean: exact,
            all: log_fit(&cfg.deltas, &bias, 0..k),
            middle: log_fit(&cfg.deltas, &bias, middle_indices(k)),
            bias,
            attempted: cells.attempted,
        });
    }
    let mean_bias: Vec<Option<f64>> = (0..k)
        .map(|j| {
            let v: Vec<f64> = trials.iter().filter_map(|t| t.bias[j]).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    let slopes = |pick: fn(&BiasTrial) -> &Option<Line>| -> Vec<f64> {
        trials.iter().filter_map(|t| pick(t).as_ref().map(|l| l.c1)).filter(|s| s.is_finite()).collect()
    };
    Ok(BiasScanReport {
        model: *model,
        n: cfg.n,
        n_abc: cfg.n_abc,
        deltas: cfg.deltas.clone(),
        fit_all: log_fit(&cfg.deltas, &mean_bias, 0..k),
        fit_middle: log_fit(&cfg.deltas, &mean_bias, middle_indices(k)),
        slope_all: summarize(&slopes(|t| &t.all)),
        slope_middle: summarize(&slopes(|t| &t.middle)),
        trials,
        mean_bias,
        missing,
    })
}

impl BiasScanReport {
    /// Rows `trial,delta,log_delta,bias,log_bias,attempted`; missing cells
    /// leave the bias columns empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,delta,log_delta,bias,log_bias,attempted\n");
        for t in &self.trials {
            for (j, d) in self.deltas.iter().enumerate() {
                let (b, lb) = match t.bias[j] {
                    Some(b) => (format!("{b:?}"), format!("{:?}", b.ln())),
                    None => (String::new(), String::new()),
                };
                out.push_str(&format!("{},{:?},{:?},{},{},{}\n", t.trial, d, d.ln(), b, lb, t.attempted[j]));
            }
        }
        out
    }
}

/// `pi^{q/2} / Gamma(q/2 + 1) * delta^q`, the volume of a `q`-ball.
pub fn ball_volume(q: u32, delta: f64) -> Result<f64> {
    if q == 0 {
        return Err(invalid("ball dimension must be at least 1"));
    }
    if !(delta >= 0.0) {
        return Err(invalid("radius must be non-negative"));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    // unit volumes from V_1 = 2, V_2 = pi and V_q = V_{q-2} 2 pi / q
    let mut unit = if q % 2 == 1 { 2.0 } else { std::f64::consts::PI };
    let mut k = 2 - q % 2;
    while k < q {
        k += 2;
        unit *= 2.0 * std::f64::consts::PI / f64::from(k);
    }
    Ok(unit * delta.powi(q as i32))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCell {
    pub delta: f64,
    pub accepted: usize,
    pub attempted: u64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceScan {
    pub model: ToyModel,
    pub n: usize,
    pub cells: Vec<AcceptanceCell>,
    /// Log-log slope of rate against delta over finite cells with at least
    /// one acceptance.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Indices of cells without acceptances.
    pub empty_cells: Vec<usize>,
}

impl AcceptanceScan {
    /// Rows `delta,log_delta,accepted,attempted,rate,log_rate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,log_delta,accepted,attempted,rate,log_rate\n");
        for c in &self.cells {
            let lr = if c.rate > 0.0 { format!("{:?}", c.rate.ln()) } else { String::new() };
            out.push_str(&format!("{:?},{:?},{},{},{:?},{}\n", c.delta, c.delta.ln(), c.accepted, c.attempted, c.rate, lr));
        }
        out
    }
}

/// Data stream and proposal stream of an acceptance scan.
pub fn acceptance_streams(seed: u64) -> (SeedStream, SeedStream) {
    let root = SeedStream::new(seed).label("acceptance");
    (root.label("data"), root.label("proposals"))
}

/// Empirical acceptance probability of rejection WABC per threshold, all
/// cells sharing one stream of `proposals_per_cell` proposals.
pub fn acceptance_scan(
    model: &ToyModel,
    n: usize,
    deltas: &[f64],
    proposals_per_cell: u64,
    seed: u64,
    parallel: bool,
) -> Result<AcceptanceScan> {
    if proposals_per_cell < 10_000 {
        return Err(invalid("acceptance scan needs at least 10^4 proposals per cell"));
    }
    let (data_stream, proposal_stream) = acceptance_streams(seed);
    let data = model.generate_data(n, &mut data_stream.rng())?;
    let cells = shared_scan(model, &data, deltas, None, proposals_per_cell, proposal_stream, parallel)?;
    let cells: Vec<AcceptanceCell> = (0..deltas.len())
        .map(|j| AcceptanceCell {
            delta: deltas[j],
            accepted: cells.accepted[j],
            attempted: cells.attempted[j],
            rate: cells.accepted[j] as f64 / cells.attempted[j] as f64,
        })
        .collect();
    let empty_cells: Vec<usize> = (0..cells.len()).filter(|&j| cells[j].accepted == 0).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = cells
        .iter()
        .filter(|c| c.accepted > 0 && c.delta.is_finite() && c.delta > 0.0)
        .map(|c| (c.delta.ln(), c.rate.ln()))
        .unzip();
    let fit = ols_line(&x, &y);
    Ok(AcceptanceScan {
        model: *model,
        n,
        cells,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        empty_cells,
    })
}
