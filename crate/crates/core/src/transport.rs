//! Distances between equal-size point clouds: the Euclidean distance of
//! aligned vectors and the exact 2-Wasserstein distance, which for uniform
//! weights and `m = n` is a minimum-cost assignment problem.

use crate::cloud::{sq_dist, PointCloud};
use crate::error::{invalid, Error, Result};

/// Largest cloud size accepted by [`wasserstein2_bruteforce`].
pub const BRUTE_FORCE_MAX_POINTS: usize = 8;

/// Optimal matching `x_i <-> y_{perm[i]}` and its mean squared cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub cost: f64,
}

/// Dense O(n^3) shortest augmenting path solver (Hungarian method with
/// potentials) for square real cost matrices. Buffers are reused across calls.
#[derive(Debug, Default)]
pub struct AssignmentSolver {
    u: Vec<f64>,
    v: Vec<f64>,
    p: Vec<usize>,
    way: Vec<usize>,
    minv: Vec<f64>,
    used: Vec<bool>,
}

impl AssignmentSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Minimizes `sum_i cost[i * n + perm[i]]` over permutations; returns
    /// `perm` (row -> column).
    pub fn solve(&mut self, n: usize, cost: &[f64]) -> Vec<usize> {
        assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
        if n == 0 {
            return Vec::new();
        }
        // 1-based arrays; column 0 is a virtual source
        self.u.clear();
        self.u.resize(n + 1, 0.0);
        self.v.clear();
        self.v.resize(n + 1, 0.0);
        self.p.clear();
        self.p.resize(n + 1, 0);
        self.way.clear();
        self.way.resize(n + 1, 0);

        for i in 1..=n {
            self.p[0] = i;
            let mut j0 = 0usize;
            self.minv.clear();
            self.minv.resize(n + 1, f64::INFINITY);
            self.used.clear();
            self.used.resize(n + 1, false);
            loop {
                self.used[j0] = true;
                let i0 = self.p[j0];
                let row = &cost[(i0 - 1) * n..i0 * n];
                let mut delta = f64::INFINITY;
                let mut j1 = 0usize;
                for j in 1..=n {
                    if self.used[j] {
                        continue;
                    }
                    let cur = row[j - 1] - self.u[i0] - self.v[j];
                    if cur < self.minv[j] {
                        self.minv[j] = cur;
                        self.way[j] = j0;
                    }
                    if self.minv[j] < delta {
                        delta = self.minv[j];
                        j1 = j;
                    }
                }
                for j in 0..=n {
                    if self.used[j] {
                        self.u[self.p[j]] += delta;
                        self.v[j] -= delta;
                    } else {
                        self.minv[j] -= delta;
                    }
                }
                j0 = j1;
                if self.p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = self.way[j0];
                self.p[j0] = self.p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }

        let mut perm = vec![0usize; n];
        for j in 1..=n {
            perm[self.p[j] - 1] = j - 1;
        }
        perm
    }
}

fn squared_distance_matrix(x: &PointCloud, y: &PointCloud) -> Vec<f64> {
    let n = x.len();
    let mut cost = Vec::with_capacity(n * n);
    for xi in x.points() {
        for yj in y.points() {
            cost.push(sq_dist(xi, yj));
        }
    }
    cost
}

/// Mean squared distance of the matching `x_i <-> y_{perm[i]}`.
///
/// Pair costs are summed in sorted order so the result does not depend on
/// which cloud indexes the rows; this keeps `W(x, y) == W(y, x)` bitwise.
pub fn matching_cost(x: &PointCloud, y: &PointCloud, perm: &[usize]) -> f64 {
    let mut pairs: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| sq_dist(x.point(i), y.point(j))).collect();
    pairs.sort_by(f64::total_cmp);
    pairs.iter().sum::<f64>() / x.len() as f64
}

/// Exact optimal assignment between two equal-size clouds.
pub fn optimal_assignment(x: &PointCloud, y: &PointCloud) -> Result<Assignment> {
    optimal_assignment_with(&mut AssignmentSolver::new(), x, y)
}

pub fn optimal_assignment_with(
    solver: &mut AssignmentSolver,
    x: &PointCloud,
    y: &PointCloud,
) -> Result<Assignment> {
    x.ensure_same_shape(y)?;
    let cost = squared_distance_matrix(x, y);
    let perm = solver.solve(x.len(), &cost);
    let cost = matching_cost(x, y, &perm);
    Ok(Assignment { perm, cost })
}

/// `sqrt(sum_i |x_i - y_i|^2)`, the Euclidean distance of the aligned vectors.
pub fn euclidean_aligned(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    x.ensure_same_shape(y)?;
    Ok(sq_dist(x.aligned(), y.aligned()).sqrt())
}

/// `sqrt(min_sigma (1/n) sum_i |x_i - y_sigma(i)|^2)`.
pub fn wasserstein2(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    Ok(optimal_assignment(x, y)?.cost.sqrt())
}

/// [`wasserstein2`] with a caller-owned solver, for hot loops.
pub fn wasserstein2_with(solver: &mut AssignmentSolver, x: &PointCloud, y: &PointCloud) -> Result<f64> {
    Ok(optimal_assignment_with(solver, x, y)?.cost.sqrt())
}

/// Closed form for 1-D clouds: the monotone (sorted) matching is optimal.
pub fn wasserstein2_sorted_1d(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    x.ensure_same_shape(y)?;
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: x.dim() });
    }
    let mut a = x.aligned().to_vec();
    let mut b = y.aligned().to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok((sq_dist(&a, &b) / a.len() as f64).sqrt())
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).expect("pivot exists");
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

/// [`wasserstein2`] by exhaustive minimization over all `n!` matchings.
pub fn wasserstein2_bruteforce(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    x.ensure_same_shape(y)?;
    if x.len() > BRUTE_FORCE_MAX_POINTS {
        return Err(invalid(format!(
            "brute force limited to {BRUTE_FORCE_MAX_POINTS} points, got {}",
            x.len()
        )));
    }
    let best = permutations(x.len())
        .iter()
        .map(|perm| matching_cost(x, y, perm))
        .fold(f64::INFINITY, f64::min);
    Ok(best.sqrt())
}

pub fn in_wasserstein_ball(center: &PointCloud, y: &PointCloud, delta: f64) -> Result<bool> {
    if !(delta >= 0.0) {
        return Err(invalid("ball radius must be non-negative"));
    }
    Ok(wasserstein2(center, y)? <= delta)
}

/// `min_{sigma != id} d_E(x, x_sigma) / (3 sqrt(n))`: below this radius the
/// Wasserstein ball around `x` is a disjoint union of the Euclidean balls of
/// radius `sqrt(n) delta` centred at the permutations of `x`.
///
/// Every non-identity permutation moves at least two distinct points and each
/// moved point contributes at least the squared minimum pairwise distance, so
/// the minimum is attained by transposing the closest pair:
/// `sqrt(2) * min_{i<j} |x_i - x_j|`.
pub fn separation_threshold(x: &PointCloud) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(invalid("separation threshold needs at least two points"));
    }
    let mut min_sq = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_sq = min_sq.min(sq_dist(x.point(i), x.point(j)));
        }
    }
    if min_sq == 0.0 {
        return Err(Error::DuplicatePoints);
    }
    Ok((2.0 * min_sq).sqrt() / (3.0 * (n as f64).sqrt()))
}
