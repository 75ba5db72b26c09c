//! Benchmark Pareto fronts (Schaffer, Viennet2, M-MED), Pareto filtering and
//! noise injection.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bezier::{enumerate_degrees, fill_uniform_simplex};
use crate::cloud::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::seed::SeedStream;

/// Default Viennet2 grid resolution per axis.
pub const VIENNET2_GRID: usize = 300;
/// Schaffer pool size.
pub const SCHAFFER_POOL: usize = 201;
/// Lattice resolution of the M-MED pools: 153 points for M = 3 and 4845 for
/// M = 5.
pub const MED_LATTICE: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    Schaffer,
    Viennet2,
    Med(usize),
}

impl Problem {
    pub fn dim(self) -> usize {
        match self {
            Problem::Schaffer => 2,
            Problem::Viennet2 => 3,
            Problem::Med(m) => m,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::Schaffer => f.write_str("schaffer"),
            Problem::Viennet2 => f.write_str("viennet2"),
            Problem::Med(m) => write!(f, "{m}-med"),
        }
    }
}

impl FromStr for Problem {
    type Err = Error;

    /// Accepts `schaffer`, `viennet2` and `<M>-med`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "schaffer" => Ok(Problem::Schaffer),
            "viennet2" => Ok(Problem::Viennet2),
            _ => {
                let m = lower
                    .strip_suffix("-med")
                    .and_then(|m| m.parse::<usize>().ok())
                    .ok_or_else(|| invalid(format!("unknown problem {s:?}")))?;
                if m < 2 {
                    return Err(invalid("MED needs at least 2 objectives"));
                }
                Ok(Problem::Med(m))
            }
        }
    }
}

impl Serialize for Problem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Problem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A problem together with the resolution of its sample pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub problem: Problem,
    /// Grid points per axis (Viennet2), pool size (Schaffer) or lattice
    /// resolution (MED).
    pub resolution: usize,
}

impl ProblemSpec {
    pub fn new(problem: Problem) -> Self {
        let resolution = match problem {
            Problem::Schaffer => SCHAFFER_POOL,
            Problem::Viennet2 => VIENNET2_GRID,
            Problem::Med(_) => MED_LATTICE as usize,
        };
        ProblemSpec { problem, resolution }
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    /// Deterministic finite sample of the Pareto front from which datasets
    /// are drawn.
    pub fn pool(&self) -> Result<PointCloud> {
        match self.problem {
            Problem::Schaffer => schaffer_grid(self.resolution),
            Problem::Viennet2 => viennet2_pool(self.resolution),
            Problem::Med(m) => med_grid(m, self.resolution as u32),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of the per-coordinate Gaussian noise.
    pub sigma: f64,
    pub seed: u64,
}

/// Metadata written next to a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub problem: Problem,
    #[serde(rename = "M")]
    pub dim: usize,
    pub count: usize,
    pub sigma: f64,
    pub seed: u64,
}

/// `x` on the Pareto set `[0, 2]` mapped to `(x^2, (x - 2)^2)`.
pub fn schaffer_objectives(x: f64) -> [f64; 2] {
    [x * x, (x - 2.0) * (x - 2.0)]
}

/// `count` points with `x` uniform on `[0, 2]`.
pub fn schaffer_front<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::EmptyCloud);
    }
    let pts: Vec<[f64; 2]> = (0..count).map(|_| schaffer_objectives(rng.random_range(0.0..=2.0))).collect();
    PointCloud::from_points(&pts)
}

/// `count` points with `x` evenly spaced on `[0, 2]`.
pub fn schaffer_grid(count: usize) -> Result<PointCloud> {
    if count < 2 {
        return Err(invalid("Schaffer grid needs at least 2 points"));
    }
    let pts: Vec<[f64; 2]> =
        (0..count).map(|i| schaffer_objectives(2.0 * i as f64 / (count - 1) as f64)).collect();
    PointCloud::from_points(&pts)
}

pub fn viennet2_objectives(x1: f64, x2: f64) -> [f64; 3] {
    [
        (x1 - 2.0).powi(2) / 2.0 + (x2 + 1.0).powi(2) / 13.0 + 3.0,
        (x1 + x2 - 3.0).powi(2) / 36.0 + (-x1 + x2 + 2.0).powi(2) / 8.0 - 17.0,
        (x1 + 2.0 * x2 - 1.0).powi(2) / 175.0 + (2.0 * x2 - x1).powi(2) / 17.0 - 13.0,
    ]
}

/// Objective images of a `grid_res x grid_res` grid over `[-4, 4]^2`, row by
/// row in `x_1`.
pub fn viennet2_grid_image(grid_res: usize) -> Result<PointCloud> {
    if grid_res < 2 {
        return Err(invalid("grid needs at least 2 points per axis"));
    }
    let step = 8.0 / (grid_res - 1) as f64;
    let mut coords = Vec::with_capacity(grid_res * grid_res * 3);
    for i in 0..grid_res {
        for j in 0..grid_res {
            let (x1, x2) = (-4.0 + step * i as f64, -4.0 + step * j as f64);
            coords.extend_from_slice(&viennet2_objectives(x1, x2));
        }
    }
    PointCloud::new(3, coords)
}

/// Nondominated part of the grid image.
pub fn viennet2_pool(grid_res: usize) -> Result<PointCloud> {
    if grid_res < 50 {
        return Err(invalid("Viennet2 grid resolution must be at least 50"));
    }
    Ok(nondominated_filter(&viennet2_grid_image(grid_res)?))
}

/// `count` points drawn without replacement from [`viennet2_pool`].
pub fn viennet2_front<R: Rng + ?Sized>(grid_res: usize, count: usize, rng: &mut R) -> Result<PointCloud> {
    subsample(&viennet2_pool(grid_res)?, count, rng)
}

/// Exponents `p_m = exp(2 (m - 1) / (M - 1) - 1)`, `m = 1..M`.
pub fn med_exponents(dim: usize) -> Vec<f64> {
    (0..dim).map(|m| (2.0 * m as f64 / (dim - 1) as f64 - 1.0).exp()).collect()
}

/// `f_m(x) = (|x - e_m| / sqrt 2)^{p_m}`.
pub fn med_objectives(x: &[f64], exponents: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|m| {
            let d2: f64 = x.iter().enumerate().map(|(i, v)| if i == m { (v - 1.0).powi(2) } else { v * v }).sum();
            (d2.sqrt() / std::f64::consts::SQRT_2).powf(exponents[m])
        })
        .collect()
}

fn ensure_nondominated(cloud: &PointCloud) -> Result<()> {
    if nondominated_indices(cloud).len() != cloud.len() {
        return Err(invalid("generated front contains dominated points"));
    }
    Ok(())
}

/// Images of `count` points drawn uniformly from the convex hull of the unit
/// vectors, which is the Pareto set of M-MED.
pub fn med_front<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Result<PointCloud> {
    if dim < 2 {
        return Err(invalid("MED needs at least 2 objectives"));
    }
    if count == 0 {
        return Err(Error::EmptyCloud);
    }
    let p = med_exponents(dim);
    let mut t = vec![0.0; dim];
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count {
        fill_uniform_simplex(rng, &mut t);
        coords.extend(med_objectives(&t, &p));
    }
    let cloud = PointCloud::new(dim, coords)?;
    ensure_nondominated(&cloud)?;
    Ok(cloud)
}

/// Images of the simplex lattice `{k / resolution}` on the Pareto set, in
/// lexicographically descending order of `k`.
pub fn med_grid(dim: usize, resolution: u32) -> Result<PointCloud> {
    if dim < 2 || resolution == 0 {
        return Err(invalid("MED grid needs M >= 2 and a positive resolution"));
    }
    let p = med_exponents(dim);
    let mut coords = Vec::new();
    for k in enumerate_degrees(resolution, dim)? {
        let x: Vec<f64> = k.exponents().iter().map(|&e| f64::from(e) / f64::from(resolution)).collect();
        coords.extend(med_objectives(&x, &p));
    }
    let cloud = PointCloud::new(dim, coords)?;
    ensure_nondominated(&cloud)?;
    Ok(cloud)
}

/// `a` dominates `b`: no worse everywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Indices (ascending) of the points not dominated by any other point.
///
/// Points are visited in lexicographic order, where a dominator always comes
/// before the point it dominates, and compared against the nondominated
/// points seen so far only.
pub fn nondominated_indices(cloud: &PointCloud) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by(|&a, &b| {
        cloud.point(a).iter().zip(cloud.point(b)).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.cmp(&b))
    });
    let mut archive: Vec<usize> = Vec::new();
    for i in order {
        let p = cloud.point(i);
        if !archive.iter().any(|&j| dominates(cloud.point(j), p)) {
            archive.push(i);
        }
    }
    archive.sort_unstable();
    archive
}

/// Nondominated subset, input order preserved.
pub fn nondominated_filter(cloud: &PointCloud) -> PointCloud {
    cloud.select(&nondominated_indices(cloud)).expect("a non-empty cloud has a nondominated point")
}

/// Plain O(n^2) pairwise version of [`nondominated_indices`].
pub fn nondominated_indices_bruteforce(cloud: &PointCloud) -> Vec<usize> {
    (0..cloud.len())
        .filter(|&i| !(0..cloud.len()).any(|j| j != i && dominates(cloud.point(j), cloud.point(i))))
        .collect()
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every coordinate.
pub fn add_noise<R: Rng + ?Sized>(cloud: &PointCloud, sigma: f64, rng: &mut R) -> Result<PointCloud> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("noise level must be finite and non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    Ok(cloud.map_coords(|_, v| v + normal.sample(rng)))
}

/// `count` distinct points of `pool` in random order.
pub fn subsample<R: Rng + ?Sized>(pool: &PointCloud, count: usize, rng: &mut R) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::EmptyCloud);
    }
    if count > pool.len() {
        return Err(invalid(format!("requested {count} points from a pool of {}", pool.len())));
    }
    pool.select(&index::sample(rng, pool.len(), count).into_vec())
}

/// Noiseless validation points and their noisy training copy.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub truth: PointCloud,
    pub train: PointCloud,
    pub meta: DatasetMeta,
}

/// Draws `n` pool points (stream label `"subsample"`) and perturbs them
/// (stream label `"noise"`).
pub fn make_dataset(spec: &ProblemSpec, n: usize, noise: NoiseSpec) -> Result<Dataset> {
    let root = SeedStream::new(noise.seed);
    let pool = spec.pool()?;
    let truth = subsample(&pool, n, &mut root.label("subsample").rng())?;
    let train = add_noise(&truth, noise.sigma, &mut root.label("noise").rng())?;
    let meta = DatasetMeta { problem: spec.problem, dim: spec.dim(), count: n, sigma: noise.sigma, seed: noise.seed };
    Ok(Dataset { truth, train, meta })
}
