//! All-at-once least-squares fitting of a Bézier simplex.
//!
//! The loss `sum_i |x_i - b(t_i)|^2` is minimized alternately over the
//! parameters `t_i` (a constrained nonlinear projection per point) and the
//! control points (a linear least-squares problem).

use nalgebra::{DMatrix, DVector, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bezier::{BezierModel, ControlPointSet, SimplexParam};
use crate::cloud::{sq_dist, PointCloud};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AaoConfig {
    pub max_outer_iters: usize,
    pub t_newton_iters: usize,
    pub t_tol: f64,
    pub loss_tol: f64,
    /// Softmax temperature of the parameter initialization.
    pub init_temperature: f64,
    /// Recorded for provenance; the fit itself is deterministic.
    pub seed: u64,
}

impl Default for AaoConfig {
    fn default() -> Self {
        AaoConfig {
            max_outer_iters: 100,
            t_newton_iters: 20,
            t_tol: 1e-8,
            loss_tol: 1e-10,
            init_temperature: 0.1,
            seed: 0,
        }
    }
}

impl AaoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.t_newton_iters == 0 {
            return Err(invalid("iteration limits must be positive"));
        }
        if !(self.t_tol > 0.0 && self.loss_tol > 0.0 && self.init_temperature > 0.0) {
            return Err(invalid("tolerances and temperature must be positive"));
        }
        Ok(())
    }
}

/// Least-squares control points.
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquaresFit {
    pub control_points: ControlPointSet,
    pub rank: usize,
    /// The design matrix had fewer independent columns than degrees; the
    /// minimum-norm solution was returned.
    pub rank_deficient: bool,
}

fn design_matrix(params: &[SimplexParam], model_basis: &crate::bezier::BernsteinBasis) -> DMatrix<f64> {
    let k = model_basis.len();
    let mut a = DMatrix::<f64>::zeros(params.len(), k);
    let mut row = vec![0.0; k];
    for (i, t) in params.iter().enumerate() {
        model_basis.values(t.coords(), &mut row);
        for (j, v) in row.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    a
}

/// Control points minimizing `sum_i |x_i - b(t_i)|^2` for fixed `t_i`, solved
/// for all objective coordinates at once through an SVD.
pub fn fit_control_points(data: &PointCloud, params: &[SimplexParam], order: u32) -> Result<LeastSquaresFit> {
    if params.len() != data.len() {
        return Err(Error::SizeMismatch(data.len(), params.len()));
    }
    let dim = data.dim();
    if let Some(t) = params.iter().find(|t| t.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: t.dim() });
    }
    let basis = crate::bezier::BernsteinBasis::new(order, dim)?;
    let a = design_matrix(params, &basis);
    let b = DMatrix::from_fn(data.len(), dim, |i, m| data.point(i)[m]);
    let svd = SVD::new(a, true, true);
    let smax = svd.singular_values.max();
    let eps = smax * f64::EPSILON * (data.len().max(basis.len()) as f64);
    let rank = svd.rank(eps);
    let sol = svd.solve(&b, eps).map_err(|e| invalid(format!("least squares failed: {e}")))?;
    let flat = (0..basis.len()).flat_map(|k| (0..dim).map(move |m| (k, m))).map(|(k, m)| sol[(k, m)]).collect();
    Ok(LeastSquaresFit {
        control_points: ControlPointSet::from_flat(order, dim, flat)?,
        rank,
        rank_deficient: rank < basis.len(),
    })
}

/// Sum of squared residuals `sum_i |x_i - b(t_i)|^2`.
pub fn ols_loss(model: &BezierModel, data: &PointCloud, params: &[SimplexParam]) -> f64 {
    let mut scratch = vec![0.0; model.basis().len()];
    let mut y = vec![0.0; model.dim()];
    data.points()
        .zip(params)
        .map(|(x, t)| {
            model.evaluate_into(t.coords(), &mut scratch, &mut y);
            sq_dist(x, &y)
        })
        .sum()
}

/// Partial derivatives `db/dt_m` treating the barycentric coordinates as
/// independent, one row of length `M` per `m`.
fn free_gradients(model: &BezierModel, t: &[f64]) -> Vec<Vec<f64>> {
    let dim = model.dim();
    let mut w = vec![0.0; model.basis().len()];
    (0..dim)
        .map(|m| {
            model.basis().derivative_values(t, &[m], &mut w);
            let mut out = vec![0.0; dim];
            crate::bezier::combine(model.control_points(), &w, &mut out);
            out
        })
        .collect()
}

fn second_derivative(model: &BezierModel, t: &[f64], a: usize, b: usize, w: &mut [f64]) -> Vec<f64> {
    model.basis().derivative_values(t, &[a, b], w);
    let mut out = vec![0.0; model.dim()];
    crate::bezier::combine(model.control_points(), w, &mut out);
    out
}

/// Tangent vectors `db/ds_k`, `k < M - 1`, in the chart
/// `t = (s_1, ..., s_{M-1}, 1 - sum s)`.
pub fn chart_jacobian(model: &BezierModel, t: &SimplexParam) -> Vec<Vec<f64>> {
    let g = free_gradients(model, t.coords());
    let last = g.len() - 1;
    (0..last).map(|k| g[k].iter().zip(&g[last]).map(|(a, b)| a - b).collect()).collect()
}

/// Result of projecting one point onto the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub t: SimplexParam,
    pub loss: f64,
    pub iterations: usize,
    /// False when the iteration limit was hit before the optimality test
    /// passed; `t` is then the best iterate seen.
    pub converged: bool,
}

fn point_loss(model: &BezierModel, x: &[f64], t: &[f64], scratch: &mut [f64], y: &mut [f64]) -> f64 {
    model.evaluate_into(t, scratch, y);
    sq_dist(x, y)
}

fn clip_renormalize(t: &mut [f64]) {
    for v in t.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = t.iter().sum();
    for v in t.iter_mut() {
        *v /= s;
    }
}

/// Locally minimizes `|x - b(t)|^2` over the simplex starting from `t0`.
///
/// Newton steps (Gauss-Newton when the Hessian is not positive definite) are
/// taken in a chart over the currently positive coordinates, with a
/// backtracking line search and clip-and-renormalize back onto the simplex.
/// Coordinates clipped to zero leave the chart; a zero coordinate re-enters
/// when moving mass onto it would decrease the loss.
pub fn project_parameter(model: &BezierModel, x: &[f64], t0: &SimplexParam, cfg: &AaoConfig) -> Result<Projection> {
    let dim = model.dim();
    if x.len() != dim || t0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len().min(t0.dim()) });
    }
    let mut scratch = vec![0.0; model.basis().len()];
    let mut w = vec![0.0; model.basis().len()];
    let mut y = vec![0.0; dim];
    let mut t = t0.coords().to_vec();
    let mut f = point_loss(model, x, &t, &mut scratch, &mut y);
    let mut free: Vec<usize> = (0..dim).filter(|&m| t[m] > 0.0).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.t_newton_iters {
        model.evaluate_into(&t, &mut scratch, &mut y);
        let r: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let grads = free_gradients(model, &t);
        // d f / d t_m = 2 r . db/dt_m
        let gfree: Vec<f64> = grads.iter().map(|g| 2.0 * dot(&r, g)).collect();

        let k = free.len() - 1;
        let stationary_on_face = if k == 0 {
            true
        } else {
            let last = free[k];
            let jac: Vec<Vec<f64>> = free[..k]
                .iter()
                .map(|&a| grads[a].iter().zip(&grads[last]).map(|(p, q)| p - q).collect())
                .collect();
            let jr = DVector::from_iterator(k, jac.iter().map(|j| dot(j, &r)));
            if jr.amax() < cfg.t_tol {
                true
            } else {
                let step = newton_step(model, &t, &free, &jac, &r, &jr, &mut w);
                iterations += 1;
                match ray_search(model, x, &t, &step, f, &mut scratch, &mut y) {
                    Some((t_new, f_new)) => {
                        t = t_new;
                        f = f_new;
                        free.retain(|&m| t[m] > 0.0);
                        continue;
                    }
                    // no decrease representable in floating point
                    None => true,
                }
            }
        };

        if stationary_on_face {
            // multiplier of the equality constraint on the current face
            let lambda = free.iter().map(|&m| gfree[m]).sum::<f64>() / free.len() as f64;
            let entering = (0..dim)
                .filter(|m| !free.contains(m))
                .filter(|&m| gfree[m] < lambda - cfg.t_tol)
                .min_by(|&a, &b| gfree[a].total_cmp(&gfree[b]));
            match entering {
                Some(m) => {
                    // try a small step moving mass onto m from the face
                    let mut dir = vec![0.0; dim];
                    dir[m] = 1.0;
                    for &j in &free {
                        dir[j] = -t[j];
                    }
                    iterations += 1;
                    match ray_search(model, x, &t, &dir, f, &mut scratch, &mut y) {
                        Some((t_new, f_new)) => {
                            t = t_new;
                            f = f_new;
                            free = (0..dim).filter(|&j| t[j] > 0.0).collect();
                        }
                        None => {
                            converged = true;
                            break;
                        }
                    }
                }
                None => {
                    converged = true;
                    break;
                }
            }
        }
    }

    Ok(Projection { t: SimplexParam::new(t)?, loss: f, iterations, converged })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Chart step over `free[..k]`, the last free coordinate absorbing the
/// constraint.
fn newton_step(
    model: &BezierModel,
    t: &[f64],
    free: &[usize],
    jac: &[Vec<f64>],
    r: &[f64],
    jr: &DVector<f64>,
    w: &mut [f64],
) -> Vec<f64> {
    let k = jac.len();
    let last = free[k];
    let jtj = DMatrix::from_fn(k, k, |i, j| dot(&jac[i], &jac[j]));
    let b_ll = second_derivative(model, t, last, last, w);
    let mut h = jtj.clone();
    for i in 0..k {
        for j in i..k {
            let (a, b) = (free[i], free[j]);
            let b_ab = second_derivative(model, t, a, b, w);
            let b_al = second_derivative(model, t, a, last, w);
            let b_bl = second_derivative(model, t, b, last, w);
            let curvature: f64 = (0..r.len()).map(|c| r[c] * (b_ab[c] - b_al[c] - b_bl[c] + b_ll[c])).sum();
            h[(i, j)] += curvature;
            if i != j {
                h[(j, i)] += curvature;
            }
        }
    }
    let rhs = -jr;
    let delta = match h.cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let mu = 1e-12 * jtj.trace().max(f64::MIN_POSITIVE);
            let damped = jtj + DMatrix::identity(k, k) * mu;
            match damped.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => damped.pseudo_inverse(1e-14).map(|p| p * rhs).unwrap_or_else(|_| DVector::zeros(k)),
            }
        }
    };
    let mut step = vec![0.0; t.len()];
    for i in 0..k {
        step[free[i]] += delta[i];
        step[last] -= delta[i];
    }
    step
}

/// Backtracking along `t + alpha * dir`, `alpha = 1, 1/2, ...`, with
/// clip-and-renormalize; returns the first strictly improving point.
fn ray_search(
    model: &BezierModel,
    x: &[f64],
    t: &[f64],
    dir: &[f64],
    f: f64,
    scratch: &mut [f64],
    y: &mut [f64],
) -> Option<(Vec<f64>, f64)> {
    let mut alpha = 1.0;
    for _ in 0..60 {
        let mut cand: Vec<f64> = t.iter().zip(dir).map(|(a, d)| a + alpha * d).collect();
        clip_renormalize(&mut cand);
        if cand.iter().all(|v| v.is_finite()) {
            let fc = point_loss(model, x, &cand, scratch, y);
            if fc < f {
                return Some((cand, fc));
            }
        }
        alpha *= 0.5;
    }
    None
}

/// Softmax over negated min-max-normalized objectives: a point that is good
/// in objective `m` starts near vertex `m`.
pub fn initial_params(data: &PointCloud, temperature: f64) -> Vec<SimplexParam> {
    let dim = data.dim();
    let (mut lo, mut hi) = (vec![f64::INFINITY; dim], vec![f64::NEG_INFINITY; dim]);
    for p in data.points() {
        for m in 0..dim {
            lo[m] = lo[m].min(p[m]);
            hi[m] = hi[m].max(p[m]);
        }
    }
    data.points()
        .map(|p| {
            let z: Vec<f64> = (0..dim)
                .map(|m| if hi[m] > lo[m] { (p[m] - lo[m]) / (hi[m] - lo[m]) } else { 0.0 })
                .collect();
            let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = z.iter().map(|v| (-(v - zmin) / temperature).exp()).collect();
            let s: f64 = w.iter().sum();
            SimplexParam::new(w.iter().map(|v| v / s).collect()).expect("softmax weights lie on the simplex")
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AaoFit {
    pub model: BezierModel,
    pub params: Vec<SimplexParam>,
    /// Loss after the initial least-squares fit, then after every outer
    /// iteration.
    pub loss_trajectory: Vec<f64>,
    pub rank_deficient: bool,
    /// Projections that hit the iteration limit in the final sweep.
    pub unconverged_projections: usize,
}

/// Alternating projection and least-squares fit.
pub fn aao_fit(data: &PointCloud, order: u32, cfg: &AaoConfig) -> Result<AaoFit> {
    aao_fit_from(data, initial_params(data, cfg.init_temperature), order, cfg)
}

/// Alternating fit started from caller-supplied parameters.
pub fn aao_fit_from(data: &PointCloud, init: Vec<SimplexParam>, order: u32, cfg: &AaoConfig) -> Result<AaoFit> {
    cfg.validate()?;
    let needed = crate::bezier::degree_count(order, data.dim());
    if data.len() < needed {
        return Err(Error::TooFewSamples { needed, got: data.len() });
    }
    if init.len() != data.len() {
        return Err(invalid("one initial parameter per data point is required"));
    }
    if let Some(t) = init.iter().find(|t| t.dim() != data.dim()) {
        return Err(Error::DimensionMismatch { expected: data.dim(), got: t.dim() });
    }
    let mut params = init;
    let first = fit_control_points(data, &params, order)?;
    let mut rank_deficient = first.rank_deficient;
    let mut model = BezierModel::new(first.control_points)?;
    let mut loss = ols_loss(&model, data, &params);
    let mut trajectory = vec![loss];
    let mut unconverged = 0;

    for _ in 0..cfg.max_outer_iters {
        let projections: Vec<Projection> = (0..data.len())
            .into_par_iter()
            .map(|i| project_parameter(&model, data.point(i), &params[i], cfg))
            .collect::<Result<_>>()?;
        unconverged = projections.iter().filter(|p| !p.converged).count();
        params = projections.into_iter().map(|p| p.t).collect();

        let refit = fit_control_points(data, &params, order)?;
        let candidate = BezierModel::new(refit.control_points)?;
        let before = ols_loss(&model, data, &params);
        let after = ols_loss(&candidate, data, &params);
        // the least-squares optimum can only lose to rounding
        if after <= before {
            model = candidate;
            rank_deficient = refit.rank_deficient;
        }
        let new_loss = before.min(after);
        trajectory.push(new_loss);
        let improvement = loss - new_loss;
        loss = new_loss;
        if improvement < cfg.loss_tol {
            break;
        }
    }

    Ok(AaoFit { model, params, loss_trajectory: trajectory, rank_deficient, unconverged_projections: unconverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bezier::{sample_uniform_simplex, Degree};
    use crate::seed::SeedStream;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_model(order: u32, dim: usize, rng: &mut impl Rng) -> BezierModel {
        let n = crate::bezier::degree_count(order, dim) * dim;
        let flat = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        BezierModel::new(ControlPointSet::from_flat(order, dim, flat).unwrap()).unwrap()
    }

    fn eval_all(model: &BezierModel, params: &[SimplexParam]) -> PointCloud {
        let pts: Vec<Vec<f64>> = params.iter().map(|t| model.evaluate(t).unwrap()).collect();
        PointCloud::from_points(&pts).unwrap()
    }

    #[test]
    fn exact_data_recovers_control_points() {
        let mut rng = SeedStream::new(1).rng();
        let model = random_model(3, 3, &mut rng);
        let params = sample_uniform_simplex(3, 60, &mut rng).unwrap();
        let data = eval_all(&model, &params);
        let fit = fit_control_points(&data, &params, 3).unwrap();
        assert!(!fit.rank_deficient);
        for (a, b) in fit.control_points.as_flat().iter().zip(model.control_points().as_flat()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_fit_at_vertices_averages() {
        let data = PointCloud::from_points(&[[0.0, 1.0], [0.2, 1.2], [3.0, 0.0], [3.4, 0.2], [3.2, -0.2]]).unwrap();
        let v = |m| SimplexParam::vertex(2, m);
        let params = vec![v(0), v(0), v(1), v(1), v(1)];
        let fit = fit_control_points(&data, &params, 1).unwrap();
        let cp = fit.control_points;
        let p0 = cp.get(&Degree::new(vec![1, 0])).unwrap();
        let p1 = cp.get(&Degree::new(vec![0, 1])).unwrap();
        assert!((p0[0] - 0.1).abs() < 1e-12 && (p0[1] - 1.1).abs() < 1e-12);
        assert!((p1[0] - 3.2).abs() < 1e-12 && p1[1].abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let data = PointCloud::from_points(&[[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]).unwrap();
        let params = vec![SimplexParam::vertex(2, 0); 3];
        let fit = fit_control_points(&data, &params, 2).unwrap();
        assert!(fit.rank_deficient);
        assert_eq!(fit.rank, 1);
    }

    #[test]
    fn least_squares_is_translation_equivariant() {
        let mut rng = SeedStream::new(2).rng();
        let params = sample_uniform_simplex(2, 30, &mut rng).unwrap();
        let pts: Vec<[f64; 2]> = (0..30).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let data = PointCloud::from_points(&pts).unwrap();
        let shift = [1.5, -0.25];
        let a = fit_control_points(&data, &params, 2).unwrap().control_points;
        let b = fit_control_points(&data.translated(&shift), &params, 2).unwrap().control_points;
        for k in 0..a.len() {
            for m in 0..2 {
                assert!((b.point(k)[m] - a.point(k)[m] - shift[m]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn control_point_step_never_increases_loss() {
        let mut rng = SeedStream::new(3).rng();
        for _ in 0..50 {
            let model = random_model(3, 3, &mut rng);
            let params = sample_uniform_simplex(3, 40, &mut rng).unwrap();
            let pts: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
            let data = PointCloud::from_points(&pts).unwrap();
            let before = ols_loss(&model, &data, &params);
            let fit = fit_control_points(&data, &params, 3).unwrap();
            let after = ols_loss(&BezierModel::new(fit.control_points).unwrap(), &data, &params);
            assert!(after <= before);
        }
    }

    #[test]
    fn chart_jacobian_matches_finite_differences() {
        let mut rng = SeedStream::new(4).rng();
        let h = 1e-6;
        for case in 0..100 {
            let dim = 2 + case % 3;
            let model = random_model(1 + (case % 4) as u32, dim, &mut rng);
            // interior point so that the +-h chart moves stay on the simplex
            let mut t = sample_uniform_simplex(dim, 1, &mut rng).unwrap().remove(0).coords().to_vec();
            for v in t.iter_mut() {
                *v = 0.1 / dim as f64 + 0.9 * *v;
            }
            let t = SimplexParam::normalized(t).unwrap();
            let jac = chart_jacobian(&model, &t);
            for k in 0..dim - 1 {
                let shifted = |s: f64| {
                    let mut c = t.coords().to_vec();
                    c[k] += s;
                    c[dim - 1] -= s;
                    model.evaluate(&SimplexParam::new(c).unwrap()).unwrap()
                };
                let (p, q) = (shifted(h), shifted(-h));
                for m in 0..dim {
                    let fd = (p[m] - q[m]) / (2.0 * h);
                    let scale = jac[k][m].abs().max(1.0);
                    assert!((fd - jac[k][m]).abs() / scale < 1e-5, "case {case}: {fd} vs {}", jac[k][m]);
                }
            }
        }
    }

    #[test]
    fn projection_of_surface_point_is_fixed() {
        let mut rng = SeedStream::new(5).rng();
        let model = random_model(3, 3, &mut rng);
        let t = SimplexParam::new(vec![0.2, 0.3, 0.5]).unwrap();
        let x = model.evaluate(&t).unwrap();
        let p = project_parameter(&model, &x, &t, &AaoConfig::default()).unwrap();
        assert_eq!(p.t, t);
        assert!(p.converged);
        assert!(p.loss < 1e-28);
    }

    #[test]
    fn projection_onto_a_segment_matches_closed_form() {
        let mut rng = SeedStream::new(6).rng();
        for _ in 0..100 {
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let model = BezierModel::new(ControlPointSet::from_flat(1, 2, vec![a[0], a[1], b[0], b[1]]).unwrap())
                .unwrap();
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            // b(t) = t_1 a + t_2 b, i.e. the point b + t_1 (a - b)
            let d = [a[0] - b[0], a[1] - b[1]];
            let u = ((x[0] - b[0]) * d[0] + (x[1] - b[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]);
            let u = u.clamp(0.0, 1.0);
            let p = project_parameter(&model, &x, &SimplexParam::barycenter(2), &AaoConfig::default()).unwrap();
            assert!((p.t.coords()[0] - u).abs() < 1e-8, "{} vs {u}", p.t.coords()[0]);
        }
    }

    #[test]
    fn projection_reaches_boundary_optimum() {
        let mut rng = SeedStream::new(7).rng();
        let model = random_model(2, 3, &mut rng);
        let grid = sample_uniform_simplex(3, 10_000, &mut rng).unwrap();
        let vertex = model.evaluate(&SimplexParam::vertex(3, 1)).unwrap();
        let centre = model.evaluate(&SimplexParam::barycenter(3)).unwrap();
        let x: Vec<f64> = vertex.iter().zip(&centre).map(|(v, c)| v + 3.0 * (v - c)).collect();
        let p = project_parameter(&model, &x, &SimplexParam::barycenter(3), &AaoConfig::default()).unwrap();
        let best_grid = grid
            .iter()
            .map(|t| sq_dist(&x, &model.evaluate(t).unwrap()))
            .fold(f64::INFINITY, f64::min);
        assert!(p.loss <= best_grid + 1e-9, "{} vs grid {best_grid}", p.loss);
    }

    #[test]
    fn interior_projections_are_orthogonal() {
        let mut rng = SeedStream::new(8).rng();
        let cfg = AaoConfig::default();
        let mut interior = 0;
        for _ in 0..200 {
            let model = random_model(2, 3, &mut rng);
            let t = sample_uniform_simplex(3, 1, &mut rng).unwrap().remove(0);
            let mut x = model.evaluate(&t).unwrap();
            for v in x.iter_mut() {
                *v += rng.random_range(-0.05..0.05);
            }
            let p = project_parameter(&model, &x, &t, &cfg).unwrap();
            if !p.converged || p.t.coords().iter().any(|&v| v < 1e-6) {
                continue;
            }
            interior += 1;
            let y = model.evaluate(&p.t).unwrap();
            let r: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            for tangent in chart_jacobian(&model, &p.t) {
                assert!(dot(&r, &tangent).abs() < cfg.t_tol);
            }
        }
        assert!(interior > 50);
    }

    #[test]
    fn noiseless_fit_reaches_small_loss() {
        let truth = BezierModel::new(ControlPointSet::from_flat(2, 2, vec![0.0, 1.0, 0.4, 0.4, 1.0, 0.0]).unwrap())
            .unwrap();
        let mut rng = SeedStream::new(9).rng();
        let t = sample_uniform_simplex(2, 80, &mut rng).unwrap();
        let data = eval_all(&truth, &t);
        // start from the true parameters moved a little towards the centroid
        let init: Vec<SimplexParam> = t
            .iter()
            .map(|p| SimplexParam::new(p.coords().iter().map(|v| 0.9 * v + 0.05).collect()).unwrap())
            .collect();
        let fit = aao_fit_from(&data, init, 2, &AaoConfig::default()).unwrap();
        assert!(*fit.loss_trajectory.last().unwrap() < 1e-6, "{:?}", fit.loss_trajectory.last());
        assert!(fit.loss_trajectory.windows(2).all(|w| w[1] <= w[0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn aao_loss_is_monotone(seed in 0u64..1000) {
            let mut rng = SeedStream::new(seed).rng();
            let pts: Vec<Vec<f64>> = (0..30).map(|_| {
                let t: Vec<f64> = sample_uniform_simplex(3, 1, &mut rng).unwrap().remove(0).coords().to_vec();
                t.iter().map(|v| v * v + rng.random_range(0.0..0.05)).collect()
            }).collect();
            let data = PointCloud::from_points(&pts).unwrap();
            let cfg = AaoConfig { max_outer_iters: 10, ..AaoConfig::default() };
            let fit = aao_fit(&data, 2, &cfg).unwrap();
            prop_assert!(fit.loss_trajectory.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
