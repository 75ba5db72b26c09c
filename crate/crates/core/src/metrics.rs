//! Generational distance, inverted generational distance and the two-sided
//! rank-sum test.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::bezier::BezierModel;
use crate::cloud::{sq_dist, PointCloud};
use crate::error::{invalid, Error, Result};

/// Number of surface points used when scoring a fitted model.
pub const SURFACE_SAMPLES: usize = 1000;

fn check(x: &PointCloud, y: &PointCloud) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(())
}

fn mean_nearest(from: &PointCloud, to: &PointCloud) -> f64 {
    let total: f64 = from
        .points()
        .map(|p| to.points().map(|q| sq_dist(p, q)).fold(f64::INFINITY, f64::min).sqrt())
        .sum();
    total / from.len() as f64
}

/// Mean distance from each point of `x` to its nearest point of `y`.
pub fn gd(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check(x, y)?;
    Ok(mean_nearest(x, y))
}

/// Mean distance from each point of `y` to its nearest point of `x`.
pub fn igd(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check(x, y)?;
    Ok(mean_nearest(y, x))
}

/// `count` points of the fitted surface at uniform simplex parameters.
pub fn surface_sample_for_metrics<R: Rng + ?Sized>(model: &BezierModel, count: usize, rng: &mut R) -> Result<PointCloud> {
    model.sample(count, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSum {
    /// Standardized rank sum of the first sample.
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test, normal approximation
/// with tie correction.
pub fn ranksum_test(a: &[f64], b: &[f64]) -> Result<RankSum> {
    if a.len() < 5 || b.len() < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: a.len().min(b.len()) });
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(invalid("rank-sum input contains NaN"));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let mut all: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        // average of ranks i+1 ..= j+1
        let rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_a += rank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let mean = n1 * (n + 1.0) / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        // every value tied
        return Ok(RankSum { z: 0.0, p_value: 1.0 });
    }
    let z = (rank_sum_a - mean) / var.sqrt();
    let p_value = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
    Ok(RankSum { z, p_value })
}

/// One line of a benchmark results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    #[serde(rename = "M")]
    pub dim: usize,
    pub n: usize,
    pub sigma: f64,
    pub method: String,
    pub trial: usize,
    pub seed: u64,
    pub gd: f64,
    pub igd: f64,
    pub seconds: f64,
}

impl ResultRow {
    pub const HEADER: &'static str = "problem,M,n,sigma,method,trial,seed,gd,igd,seconds";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{:?},{},{},{},{:?},{:?},{:?}",
            self.problem, self.dim, self.n, self.sigma, self.method, self.trial, self.seed, self.gd, self.igd, self.seconds
        )
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 10 {
            return Err(Error::Parse(format!("expected 10 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        Ok(ResultRow {
            problem: f[0].to_string(),
            dim: int(f[1])? as usize,
            n: int(f[2])? as usize,
            sigma: num(f[3])?,
            method: f[4].to_string(),
            trial: int(f[5])? as usize,
            seed: int(f[6])?,
            gd: num(f[7])?,
            igd: num(f[8])?,
            seconds: num(f[9])?,
        })
    }
}
