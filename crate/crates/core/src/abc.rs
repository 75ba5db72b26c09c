//! Rejection ABC and the WABC fitting loop for Bézier simplices.
//!
//! The prior over control points factorizes over degrees, each factor being
//! a multivariate normal `N(m_d, Sigma_d)`. A fitting run alternates
//! rejection sampling at threshold `delta` with a moment refit of the prior
//! from the accepted control points, then shrinks `delta` towards the mean
//! distance between the data and clouds simulated from the refitted prior.
//!
//! Randomness is organised in fixed-size proposal blocks: block `b` of a
//! sampling call draws from `stream.index(b)`. Serial and parallel execution
//! evaluate the same proposals and merge acceptances in block order, so the
//! outcome does not depend on scheduling.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bezier::{combine, fill_uniform_simplex, BernsteinBasis, BezierModel, ControlPointSet, Degree};
use crate::cloud::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, psd_cholesky, symmetrize_clip};
use crate::seed::SeedStream;
use crate::transport::{wasserstein2_with, AssignmentSolver};

/// Proposals per random substream.
pub const PROPOSAL_BLOCK: u64 = 32;

/// Anything ABC can sample from: a prior over parameters and a simulator
/// producing a synthetic cloud for a parameter.
pub trait GenerativeModel: Sync {
    type Param: Clone + Send;

    fn draw_param<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Param;

    fn simulate<R: Rng + ?Sized>(&self, param: &Self::Param, n: usize, rng: &mut R) -> PointCloud;
}

/// Accepted parameters of one rejection-sampling call.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectionOutcome<P> {
    pub accepted: Vec<P>,
    /// Distance of each accepted proposal.
    pub distances: Vec<f64>,
    /// Proposals drawn, up to and including the last accepted one when the
    /// target was reached.
    pub attempted: u64,
}

impl<P> RejectionOutcome<P> {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.accepted.len() as f64 / self.attempted as f64
        }
    }
}

/// Generic rejection ABC: draw a parameter from the prior, simulate a cloud
/// the size of `data`, keep the parameter when its distance to the data is at
/// most `delta`. Stops after `n_abc` acceptances or `max_proposals` draws; a
/// short delivery is visible through `accepted.len()` and `attempted`.
#[allow(clippy::too_many_arguments)]
pub fn rejection_sample<G, D>(
    model: &G,
    data: &PointCloud,
    delta: f64,
    n_abc: usize,
    max_proposals: u64,
    distance: &D,
    stream: SeedStream,
    parallel: bool,
) -> Result<RejectionOutcome<G::Param>>
where
    G: GenerativeModel,
    D: Fn(&PointCloud, &PointCloud) -> f64 + Sync,
{
    if !(delta >= 0.0) {
        return Err(invalid(format!("threshold must be non-negative, got {delta}")));
    }
    let mut out = RejectionOutcome { accepted: Vec::new(), distances: Vec::new(), attempted: 0 };
    if n_abc == 0 {
        return Ok(out);
    }
    let n = data.len();
    let run_block = |b: u64| -> Vec<Option<(G::Param, f64)>> {
        let start = b * PROPOSAL_BLOCK;
        let len = PROPOSAL_BLOCK.min(max_proposals - start);
        let mut rng = stream.index(b).rng();
        (0..len)
            .map(|_| {
                let theta = model.draw_param(&mut rng);
                let synthetic = model.simulate(&theta, n, &mut rng);
                let d = distance(data, &synthetic);
                (d <= delta).then_some((theta, d))
            })
            .collect()
    };
    let blocks = max_proposals.div_ceil(PROPOSAL_BLOCK);

    if !parallel {
        for b in 0..blocks {
            let start = b * PROPOSAL_BLOCK;
            let len = PROPOSAL_BLOCK.min(max_proposals - start);
            let mut rng = stream.index(b).rng();
            for _ in 0..len {
                let theta = model.draw_param(&mut rng);
                let synthetic = model.simulate(&theta, n, &mut rng);
                let d = distance(data, &synthetic);
                out.attempted += 1;
                if d <= delta {
                    out.accepted.push(theta);
                    out.distances.push(d);
                    if out.accepted.len() == n_abc {
                        return Ok(out);
                    }
                }
            }
        }
        return Ok(out);
    }

    let wave = (2 * rayon::current_num_threads()).max(1) as u64;
    let mut next = 0u64;
    while next < blocks {
        let end = (next + wave).min(blocks);
        let results: Vec<_> = (next..end).into_par_iter().map(run_block).collect();
        for block in results {
            for proposal in block {
                out.attempted += 1;
                if let Some((theta, d)) = proposal {
                    out.accepted.push(theta);
                    out.distances.push(d);
                    if out.accepted.len() == n_abc {
                        return Ok(out);
                    }
                }
            }
        }
        next = end;
    }
    Ok(out)
}

/// Mean distance between `data` and `count` clouds simulated from the prior.
/// Draw `a` uses `stream.index(a)`.
pub fn mean_distance<G, D>(
    model: &G,
    data: &PointCloud,
    count: usize,
    distance: &D,
    stream: SeedStream,
    parallel: bool,
) -> Result<f64>
where
    G: GenerativeModel,
    D: Fn(&PointCloud, &PointCloud) -> f64 + Sync,
{
    if count == 0 {
        return Err(invalid("need at least one draw to estimate a mean distance"));
    }
    let one = |a: usize| {
        let mut rng = stream.index(a as u64).rng();
        let theta = model.draw_param(&mut rng);
        let synthetic = model.simulate(&theta, data.len(), &mut rng);
        distance(data, &synthetic)
    };
    let ds: Vec<f64> = if parallel {
        (0..count).into_par_iter().map(one).collect()
    } else {
        (0..count).map(one).collect()
    };
    Ok(ds.iter().sum::<f64>() / count as f64)
}

/// One Gaussian factor `N(mean, cov)` of the prior, attached to a degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFactor {
    pub degree: Degree,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl GaussianFactor {
    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let m = self.mean.len();
        DMatrix::from_fn(m, m, |i, j| self.cov[i][j])
    }
}

fn rows_of(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
}

/// Hyperparameters `{m_d, Sigma_d}` of the factorized Gaussian prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHyperParams")]
pub struct PriorHyperParams {
    order: u32,
    dim: usize,
    factors: Vec<GaussianFactor>,
}

#[derive(Deserialize)]
struct RawHyperParams {
    order: u32,
    dim: usize,
    factors: Vec<GaussianFactor>,
}

impl TryFrom<RawHyperParams> for PriorHyperParams {
    type Error = Error;

    fn try_from(raw: RawHyperParams) -> Result<Self> {
        PriorHyperParams::new(raw.order, raw.dim, raw.factors)
    }
}

impl PriorHyperParams {
    /// Validates one factor per degree in canonical order, symmetric
    /// covariances and a spectrum bounded below by `-1e-10`.
    pub fn new(order: u32, dim: usize, factors: Vec<GaussianFactor>) -> Result<Self> {
        let degrees = crate::bezier::enumerate_degrees(order, dim)?;
        if factors.len() != degrees.len() {
            return Err(invalid(format!("expected {} prior factors, got {}", degrees.len(), factors.len())));
        }
        for (f, d) in factors.iter().zip(&degrees) {
            if &f.degree != d {
                return Err(invalid(format!("prior factor for {:?} out of canonical order", f.degree)));
            }
            if f.mean.len() != dim || f.cov.len() != dim || f.cov.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: f.mean.len() });
            }
            let cov = f.cov_matrix();
            linalg::ensure_symmetric(&cov)?;
            let min_eig = nalgebra::SymmetricEigen::new(cov).eigenvalues.min();
            if min_eig < -linalg::PSD_TOL {
                return Err(Error::NotPositiveSemidefinite(min_eig));
            }
        }
        Ok(PriorHyperParams { order, dim, factors })
    }

    /// Means taken from `means`, every covariance `var * I`.
    pub fn isotropic(means: &ControlPointSet, var: f64) -> Result<Self> {
        if !(var >= 0.0) {
            return Err(invalid("prior variance must be non-negative"));
        }
        let dim = means.dim();
        let cov: Vec<Vec<f64>> =
            (0..dim).map(|i| (0..dim).map(|j| if i == j { var } else { 0.0 }).collect()).collect();
        let factors = means
            .degrees()
            .into_iter()
            .enumerate()
            .map(|(k, degree)| GaussianFactor { degree, mean: means.point(k).to_vec(), cov: cov.clone() })
            .collect();
        Self::new(means.order(), dim, factors)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[GaussianFactor] {
        &self.factors
    }

    pub fn means(&self) -> ControlPointSet {
        let flat = self.factors.iter().flat_map(|f| f.mean.iter().copied()).collect();
        ControlPointSet::from_flat(self.order, self.dim, flat).expect("validated at construction")
    }

    /// Bézier simplex whose control points are the prior means.
    pub fn mean_model(&self) -> Result<BezierModel> {
        BezierModel::new(self.means())
    }

    /// `max_d lambda_max(Sigma_d)`.
    pub fn max_eigenvalue(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| linalg::max_eigenvalue(&f.cov_matrix()).expect("validated symmetric"))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Cholesky-factored prior, ready for repeated sampling.
#[derive(Clone, Debug)]
pub struct PriorSampler {
    order: u32,
    dim: usize,
    means: Vec<f64>,
    factors: Vec<DMatrix<f64>>,
}

impl PriorSampler {
    pub fn new(hp: &PriorHyperParams) -> Result<Self> {
        let factors = hp.factors.iter().map(|f| psd_cholesky(&f.cov_matrix())).collect::<Result<Vec<_>>>()?;
        let means = hp.factors.iter().flat_map(|f| f.mean.iter().copied()).collect();
        Ok(PriorSampler { order: hp.order, dim: hp.dim, means, factors })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ControlPointSet {
        let dim = self.dim;
        let mut points = self.means.clone();
        let mut z = vec![0.0; dim];
        for (k, l) in self.factors.iter().enumerate() {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let p = &mut points[k * dim..(k + 1) * dim];
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += l[(i, j)] * z[j];
                }
                p[i] += acc;
            }
        }
        ControlPointSet::from_flat(self.order, dim, points).expect("shape fixed by hyperparameters")
    }
}

/// One independent multivariate-normal draw per degree.
pub fn sample_prior<R: Rng + ?Sized>(hp: &PriorHyperParams, rng: &mut R) -> Result<ControlPointSet> {
    Ok(PriorSampler::new(hp)?.sample(rng))
}

/// The Bézier push-forward model under a Gaussian prior.
#[derive(Clone, Debug)]
pub struct BezierPrior {
    sampler: PriorSampler,
    basis: BernsteinBasis,
}

impl BezierPrior {
    pub fn new(hp: &PriorHyperParams) -> Result<Self> {
        if hp.order == 0 || hp.dim < 2 {
            return Err(invalid("Bézier prior needs order >= 1 and dimension >= 2"));
        }
        Ok(BezierPrior { sampler: PriorSampler::new(hp)?, basis: BernsteinBasis::new(hp.order, hp.dim)? })
    }
}

impl GenerativeModel for BezierPrior {
    type Param = ControlPointSet;

    fn draw_param<R: Rng + ?Sized>(&self, rng: &mut R) -> ControlPointSet {
        self.sampler.sample(rng)
    }

    fn simulate<R: Rng + ?Sized>(&self, cps: &ControlPointSet, n: usize, rng: &mut R) -> PointCloud {
        let dim = cps.dim();
        let mut coords = vec![0.0; n * dim];
        let mut t = vec![0.0; dim];
        let mut weights = vec![0.0; self.basis.len()];
        for out in coords.chunks_exact_mut(dim) {
            fill_uniform_simplex(rng, &mut t);
            self.basis.values(&t, &mut weights);
            combine(cps, &weights, out);
        }
        PointCloud::new(dim, coords).expect("n >= 1")
    }
}

/// 2-Wasserstein distance as a plain closure-compatible function.
pub fn wasserstein_distance(x: &PointCloud, y: &PointCloud) -> f64 {
    wasserstein2_with(&mut AssignmentSolver::new(), x, y).expect("clouds share shape")
}

fn check_data(data: &PointCloud, hp: &PriorHyperParams) -> Result<()> {
    if data.dim() != hp.dim {
        return Err(Error::DimensionMismatch { expected: hp.dim, got: data.dim() });
    }
    Ok(())
}

/// Rejection ABC over control points drawn from `hp`.
#[allow(clippy::too_many_arguments)]
pub fn rejection_abc<D>(
    data: &PointCloud,
    hp: &PriorHyperParams,
    delta: f64,
    n_abc: usize,
    max_proposals: u64,
    distance: &D,
    stream: SeedStream,
    parallel: bool,
) -> Result<RejectionOutcome<ControlPointSet>>
where
    D: Fn(&PointCloud, &PointCloud) -> f64 + Sync,
{
    check_data(data, hp)?;
    let model = BezierPrior::new(hp)?;
    rejection_sample(&model, data, delta, n_abc, max_proposals, distance, stream, parallel)
}

/// Per-degree sample mean and unbiased sample covariance of the accepted
/// control points, symmetrized and clipped to a PSD matrix.
pub fn update_hyperparams(accepted: &[ControlPointSet]) -> Result<PriorHyperParams> {
    if accepted.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: accepted.len() });
    }
    let first = &accepted[0];
    let (order, dim) = (first.order(), first.dim());
    if accepted.iter().any(|c| c.order() != order || c.dim() != dim) {
        return Err(invalid("accepted control point sets disagree on order or dimension"));
    }
    let n = accepted.len() as f64;
    let factors = first
        .degrees()
        .into_iter()
        .enumerate()
        .map(|(k, degree)| {
            let mut mean = DVector::<f64>::zeros(dim);
            for c in accepted {
                mean += DVector::from_column_slice(c.point(k));
            }
            mean /= n;
            let mut cov = DMatrix::<f64>::zeros(dim, dim);
            for c in accepted {
                let r = DVector::from_column_slice(c.point(k)) - &mean;
                cov += &r * r.transpose();
            }
            cov /= n - 1.0;
            let cov = symmetrize_clip(&cov);
            GaussianFactor { degree, mean: mean.as_slice().to_vec(), cov: rows_of(&cov) }
        })
        .collect();
    PriorHyperParams::new(order, dim, factors)
}

/// Mean distance `epsilon` between `data` and `n_delta` clouds simulated from
/// control points drawn from `hp`.
pub fn estimate_delta<D>(
    hp: &PriorHyperParams,
    data: &PointCloud,
    n_delta: usize,
    distance: &D,
    stream: SeedStream,
    parallel: bool,
) -> Result<f64>
where
    D: Fn(&PointCloud, &PointCloud) -> f64 + Sync,
{
    check_data(data, hp)?;
    let model = BezierPrior::new(hp)?;
    mean_distance(&model, data, n_delta, distance, stream, parallel)
}

pub fn max_eigenvalue(cov: &DMatrix<f64>) -> Result<f64> {
    linalg::max_eigenvalue(cov)
}

/// Prior centred on the data's single-objective optima.
///
/// Vertex means are the data points minimizing each objective (first one on
/// ties); every other mean is the simplex-grid point
/// `sum_m (d_m / D) * vertex_m`; every covariance is `init_var * I`.
pub fn init_hyperparams(data: &PointCloud, order: u32, init_var: f64) -> Result<PriorHyperParams> {
    if order == 0 {
        return Err(invalid("order must be at least 1"));
    }
    if !(init_var > 0.0) {
        return Err(invalid("initial variance must be positive"));
    }
    let dim = data.dim();
    let vertices: Vec<&[f64]> = (0..dim)
        .map(|m| {
            let best = (0..data.len())
                .min_by(|&a, &b| data.point(a)[m].total_cmp(&data.point(b)[m]))
                .expect("cloud is non-empty");
            data.point(best)
        })
        .collect();
    let means = ControlPointSet::from_fn(order, dim, |d| {
        let mut p = vec![0.0; dim];
        for (m, &e) in d.exponents().iter().enumerate() {
            let w = f64::from(e) / f64::from(order);
            for (acc, v) in p.iter_mut().zip(vertices[m]) {
                *acc += w * v;
            }
        }
        if let Some(m) = d.vertex_index() {
            // exact copy, free of rounding in the weighted sum
            p.copy_from_slice(vertices[m]);
        }
        p
    })?;
    PriorHyperParams::isotropic(&means, init_var)
}

/// Settings of a WABC fitting run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbcConfig {
    /// Starting threshold; `None` uses the mean distance under the initial
    /// prior.
    pub delta: Option<f64>,
    pub n_abc: usize,
    pub n_updates: usize,
    pub n_delta: usize,
    pub max_proposals_per_round: u64,
    pub eig_stop: f64,
    pub delta_shrink: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for AbcConfig {
    fn default() -> Self {
        AbcConfig {
            delta: None,
            n_abc: 100,
            n_updates: 50,
            n_delta: 100,
            max_proposals_per_round: 100_000,
            eig_stop: 1e-5,
            delta_shrink: 0.9,
            seed: 0,
            parallel: false,
        }
    }
}

impl AbcConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(invalid("delta must be positive"));
            }
        }
        if self.n_abc < 2 {
            return Err(invalid("n_abc must be at least 2 to refit a covariance"));
        }
        if self.n_updates == 0 || self.n_delta == 0 || self.max_proposals_per_round == 0 {
            return Err(invalid("n_updates, n_delta and max_proposals_per_round must be positive"));
        }
        if !(self.eig_stop > 0.0) {
            return Err(invalid("eig_stop must be positive"));
        }
        if !(self.delta_shrink > 0.0 && self.delta_shrink < 1.0) {
            return Err(invalid("delta_shrink must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    RoundsExhausted,
    CovarianceCollapsed,
    ProposalBudgetExhausted,
}

/// What happened in one outer round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcRoundTrace {
    pub round: usize,
    pub attempted: u64,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub delta: f64,
    /// Mean model-data distance under the refitted prior; absent when the
    /// round ran out of proposals and no refit happened.
    pub epsilon: Option<f64>,
    pub hyperparams: Option<PriorHyperParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seed: u64,
    pub initial_delta: f64,
    pub hyperparams: PriorHyperParams,
    pub rounds: Vec<AbcRoundTrace>,
    pub termination: Termination,
    pub wall_clock_seconds: f64,
}

impl FitReport {
    pub fn model(&self) -> Result<BezierModel> {
        self.hyperparams.mean_model()
    }
}

/// Substream of the rejection step in `round`.
pub fn round_abc_stream(seed: u64, round: usize) -> SeedStream {
    SeedStream::new(seed).label("wabc").index(round as u64).label("abc")
}

/// Substream of the threshold re-estimation after `round`; the initial
/// estimate uses [`initial_delta_stream`].
pub fn round_delta_stream(seed: u64, round: usize) -> SeedStream {
    SeedStream::new(seed).label("wabc").index(round as u64).label("delta")
}

pub fn initial_delta_stream(seed: u64) -> SeedStream {
    SeedStream::new(seed).label("wabc").label("initial-delta")
}

/// WABC fit of a Bézier simplex to `data`, starting from `init_hp`.
pub fn wabc_fit(data: &PointCloud, init_hp: &PriorHyperParams, cfg: &AbcConfig) -> Result<FitReport> {
    cfg.validate()?;
    check_data(data, init_hp)?;
    let started = Instant::now();
    let distance = wasserstein_distance;
    let initial_delta = match cfg.delta {
        Some(d) => d,
        None => estimate_delta(init_hp, data, cfg.n_delta, &distance, initial_delta_stream(cfg.seed), cfg.parallel)?,
    };

    let mut hp = init_hp.clone();
    let mut delta = initial_delta;
    let mut rounds = Vec::with_capacity(cfg.n_updates);
    let mut termination = Termination::RoundsExhausted;

    for round in 0..cfg.n_updates {
        let outcome = rejection_abc(
            data,
            &hp,
            delta,
            cfg.n_abc,
            cfg.max_proposals_per_round,
            &distance,
            round_abc_stream(cfg.seed, round),
            cfg.parallel,
        )?;
        let rate = outcome.acceptance_rate();
        if outcome.accepted.len() < cfg.n_abc {
            rounds.push(AbcRoundTrace {
                round,
                attempted: outcome.attempted,
                accepted: outcome.accepted.len(),
                acceptance_rate: rate,
                delta,
                epsilon: None,
                hyperparams: None,
            });
            termination = Termination::ProposalBudgetExhausted;
            break;
        }
        hp = update_hyperparams(&outcome.accepted)?;
        let epsilon = estimate_delta(&hp, data, cfg.n_delta, &distance, round_delta_stream(cfg.seed, round), cfg.parallel)?;
        rounds.push(AbcRoundTrace {
            round,
            attempted: outcome.attempted,
            accepted: outcome.accepted.len(),
            acceptance_rate: rate,
            delta,
            epsilon: Some(epsilon),
            hyperparams: Some(hp.clone()),
        });
        if hp.max_eigenvalue() <= cfg.eig_stop {
            termination = Termination::CovarianceCollapsed;
            break;
        }
        delta = cfg.delta_shrink * epsilon;
    }

    Ok(FitReport {
        seed: cfg.seed,
        initial_delta,
        hyperparams: hp,
        rounds,
        termination,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{gd, igd};
    use crate::transport::wasserstein2;

    fn line_data() -> PointCloud {
        PointCloud::from_points(&[[0.0, 1.0], [0.25, 0.75], [0.5, 0.5], [0.75, 0.25], [1.0, 0.0]]).unwrap()
    }

    fn hp_with(order: u32, dim: usize, mean: &[f64], cov: Vec<Vec<f64>>) -> PriorHyperParams {
        let factors = crate::bezier::enumerate_degrees(order, dim)
            .unwrap()
            .into_iter()
            .map(|degree| GaussianFactor { degree, mean: mean.to_vec(), cov: cov.clone() })
            .collect();
        PriorHyperParams::new(order, dim, factors).unwrap()
    }

    #[test]
    fn hyperparams_validation() {
        let bad_cov = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let factors = crate::bezier::enumerate_degrees(1, 2)
            .unwrap()
            .into_iter()
            .map(|degree| GaussianFactor { degree, mean: vec![0.0, 0.0], cov: bad_cov.clone() })
            .collect();
        assert!(matches!(PriorHyperParams::new(1, 2, factors), Err(Error::NotPositiveSemidefinite(_))));
        let asym = vec![vec![1.0, 0.5], vec![0.0, 1.0]];
        let factors = crate::bezier::enumerate_degrees(1, 2)
            .unwrap()
            .into_iter()
            .map(|degree| GaussianFactor { degree, mean: vec![0.0, 0.0], cov: asym.clone() })
            .collect();
        assert!(matches!(PriorHyperParams::new(1, 2, factors), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn degenerate_prior_returns_means_exactly() {
        let means = ControlPointSet::from_flat(2, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let hp = PriorHyperParams::isotropic(&means, 0.0).unwrap();
        let draw = sample_prior(&hp, &mut SeedStream::new(1).rng()).unwrap();
        assert_eq!(draw, means);
    }

    #[test]
    fn prior_sample_moments() {
        let cov = vec![vec![0.5, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 0.1]];
        let hp = hp_with(1, 3, &[1.0, -2.0, 3.0], cov.clone());
        let sampler = PriorSampler::new(&hp).unwrap();
        let mut rng = SeedStream::new(2).rng();
        let draws: Vec<ControlPointSet> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
        let refit = update_hyperparams(&draws).unwrap();
        for f in refit.factors() {
            for (m, v) in f.mean.iter().enumerate() {
                let sd = cov[m][m].sqrt();
                assert!((v - [1.0, -2.0, 3.0][m]).abs() < 5.0 * sd / (1e5f64).sqrt());
            }
            for m in 0..3 {
                assert!((f.cov[m][m] / cov[m][m] - 1.0).abs() < 0.05);
            }
        }
        // identity covariance: per-coordinate mean within 0.02
        let hp = hp_with(2, 2, &[0.5, -0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let sampler = PriorSampler::new(&hp).unwrap();
        let draws: Vec<ControlPointSet> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
        for f in update_hyperparams(&draws).unwrap().factors() {
            assert!((f.mean[0] - 0.5).abs() < 0.02 && (f.mean[1] + 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn refit_recovers_correlated_gaussian() {
        let cov = vec![vec![0.3, 0.1], vec![0.1, 0.2]];
        let hp = hp_with(2, 2, &[1.0, 2.0], cov.clone());
        let sampler = PriorSampler::new(&hp).unwrap();
        let mut rng = SeedStream::new(3).rng();
        let draws: Vec<ControlPointSet> = (0..10_000).map(|_| sampler.sample(&mut rng)).collect();
        let refit = update_hyperparams(&draws).unwrap();
        let truth = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.2]);
        for f in refit.factors() {
            // 5 sigma CLT bound on the mean
            assert!((f.mean[0] - 1.0).abs() < 5.0 * (0.3f64 / 1e4).sqrt());
            assert!((f.mean[1] - 2.0).abs() < 5.0 * (0.2f64 / 1e4).sqrt());
            let err = (f.cov_matrix() - &truth).norm() / truth.norm();
            assert!(err < 0.10, "relative Frobenius error {err}");
        }
    }

    #[test]
    fn update_examples() {
        let a = ControlPointSet::from_flat(1, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let refit = update_hyperparams(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(refit.means(), a);
        assert!(refit.factors().iter().all(|f| f.cov.iter().flatten().all(|&v| v == 0.0)));

        let b = ControlPointSet::from_flat(1, 2, vec![2.0, 0.0, 3.0, 4.0]).unwrap();
        let refit = update_hyperparams(&[a.clone(), b]).unwrap();
        let f = &refit.factors()[0];
        assert_eq!(f.mean, vec![1.5, 1.0]);
        // (p - q) = (-1, 2): outer / 2
        let expected = [[0.5, -1.0], [-1.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((f.cov[i][j] - expected[i][j]).abs() < 1e-12);
            }
        }
        assert!(matches!(update_hyperparams(&[a]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn infinite_threshold_accepts_everything_and_zero_threshold_nothing() {
        let data = line_data();
        let hp = hp_with(1, 2, &[0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let out =
            rejection_abc(&data, &hp, f64::INFINITY, 2000, 10_000, &wasserstein_distance, SeedStream::new(4), false)
                .unwrap();
        assert_eq!(out.attempted, 2000);
        assert_eq!(out.acceptance_rate(), 1.0);
        let refit = update_hyperparams(&out.accepted).unwrap();
        for f in refit.factors() {
            for v in &f.mean {
                assert!(v.abs() < 5.0 / 2000f64.sqrt());
            }
        }
        let none = rejection_abc(&data, &hp, 0.0, 10, 2000, &wasserstein_distance, SeedStream::new(5), false).unwrap();
        assert!(none.accepted.is_empty());
        assert_eq!(none.attempted, 2000);
    }

    #[test]
    fn acceptance_is_monotone_in_threshold_on_a_shared_stream() {
        let data = line_data();
        let hp = hp_with(1, 2, &[0.5, 0.5], vec![vec![0.2, 0.0], vec![0.0, 0.2]]);
        let mut previous = usize::MAX;
        for delta in [1.0, 0.6, 0.4, 0.3, 0.2] {
            let out = rejection_abc(&data, &hp, delta, usize::MAX, 3000, &wasserstein_distance, SeedStream::new(6), false)
                .unwrap();
            assert!(out.accepted.len() <= previous);
            previous = out.accepted.len();
        }
    }

    #[test]
    fn parallel_and_serial_sampling_agree() {
        let data = line_data();
        let hp = hp_with(2, 2, &[0.5, 0.5], vec![vec![0.2, 0.0], vec![0.0, 0.2]]);
        let run = |parallel| {
            rejection_abc(&data, &hp, 0.35, 25, 5000, &wasserstein_distance, SeedStream::new(7), parallel).unwrap()
        };
        assert_eq!(run(false), run(true));
        let e = |parallel| estimate_delta(&hp, &data, 50, &wasserstein_distance, SeedStream::new(8), parallel).unwrap();
        assert_eq!(e(false).to_bits(), e(true).to_bits());
    }

    #[test]
    fn estimate_delta_examples() {
        // constant model reproducing data made of identical points; zero
        // control points keep the Bernstein combination free of rounding
        let data = PointCloud::from_points(&[[0.0, 0.0]; 6]).unwrap();
        let means = ControlPointSet::constant(2, 2, &[0.0, 0.0]).unwrap();
        let hp = PriorHyperParams::isotropic(&means, 0.0).unwrap();
        let eps = estimate_delta(&hp, &data, 10, &wasserstein_distance, SeedStream::new(9), false).unwrap();
        assert_eq!(eps, 0.0);

        let data = line_data();
        let hp = hp_with(1, 2, &[0.5, 0.5], vec![vec![0.2, 0.0], vec![0.0, 0.2]]);
        let eps = |d: &PointCloud| estimate_delta(&hp, d, 40, &wasserstein_distance, SeedStream::new(10), false).unwrap();
        let reordered = data.permuted(&[4, 2, 0, 3, 1]);
        assert!((eps(&data) - eps(&reordered)).abs() < 1e-12);
        assert_eq!(eps(&data).to_bits(), eps(&data).to_bits());
    }

    #[test]
    fn init_examples() {
        let data = PointCloud::from_points(&[[0.0, 3.0], [1.0, 1.0], [3.0, 0.0]]).unwrap();
        let hp = init_hyperparams(&data, 1, 0.1).unwrap();
        assert_eq!(hp.means().as_flat(), &[0.0, 3.0, 3.0, 0.0]);
        let hp = init_hyperparams(&data, 3, 0.1).unwrap();
        let m21 = hp.means().get(&Degree::new(vec![2, 1])).unwrap().to_vec();
        // (2 v1 + v2) / 3 with v1 = (0, 3), v2 = (3, 0)
        assert!((m21[0] - 1.0).abs() < 1e-15 && (m21[1] - 2.0).abs() < 1e-15);
        for f in hp.factors() {
            assert_eq!(f.cov, vec![vec![0.1, 0.0], vec![0.0, 0.1]]);
        }
        assert!(init_hyperparams(&data, 3, 0.0).is_err());
    }

    fn truth_model() -> BezierModel {
        BezierModel::new(ControlPointSet::from_flat(2, 2, vec![0.0, 1.0, 0.6, 0.5, 1.0, 0.0]).unwrap()).unwrap()
    }

    #[test]
    fn fit_is_deterministic_and_replayable() {
        let truth = truth_model();
        let data = truth.sample(30, &mut SeedStream::new(20).rng()).unwrap();
        let hp = init_hyperparams(&data, 2, 0.1).unwrap();
        let cfg = AbcConfig { n_abc: 20, n_updates: 4, n_delta: 20, seed: 3, ..AbcConfig::default() };
        let mut a = wabc_fit(&data, &hp, &cfg).unwrap();
        let mut b = wabc_fit(&data, &hp, &AbcConfig { parallel: true, ..cfg.clone() }).unwrap();
        a.wall_clock_seconds = 0.0;
        b.wall_clock_seconds = 0.0;
        assert_eq!(a, b);

        // the recorded delta sequence is shrink * epsilon of the previous round,
        // and each epsilon replays from the stored hyperparameters
        for w in a.rounds.windows(2) {
            assert_eq!(w[1].delta, cfg.delta_shrink * w[0].epsilon.unwrap());
        }
        for r in &a.rounds {
            let hp = r.hyperparams.as_ref().unwrap();
            let eps =
                estimate_delta(hp, &data, cfg.n_delta, &wasserstein_distance, round_delta_stream(cfg.seed, r.round), false)
                    .unwrap();
            assert_eq!(eps, r.epsilon.unwrap());
        }
        let json = serde_json::to_string(&a).unwrap();
        let back: FitReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn fit_stops_when_budget_runs_out() {
        let data = line_data();
        let hp = init_hyperparams(&data, 1, 0.1).unwrap();
        let cfg = AbcConfig { delta: Some(1e-6), n_abc: 10, max_proposals_per_round: 200, ..AbcConfig::default() };
        let report = wabc_fit(&data, &hp, &cfg).unwrap();
        assert_eq!(report.termination, Termination::ProposalBudgetExhausted);
        assert_eq!(report.rounds.len(), 1);
        assert_eq!(report.hyperparams, hp);
    }

    #[test]
    fn fit_stops_when_covariance_collapses() {
        let data = line_data();
        let hp = init_hyperparams(&data, 1, 0.1).unwrap();
        let cfg = AbcConfig { n_abc: 10, n_delta: 10, eig_stop: 10.0, ..AbcConfig::default() };
        let report = wabc_fit(&data, &hp, &cfg).unwrap();
        assert_eq!(report.termination, Termination::CovarianceCollapsed);
        assert_eq!(report.rounds.len(), 1);
    }

    #[test]
    fn noiseless_fit_recovers_a_quadratic_curve() {
        let truth = truth_model();
        let data = truth.sample(60, &mut SeedStream::new(21).rng()).unwrap();
        let hp = init_hyperparams(&data, 2, 0.1).unwrap();
        let cfg = AbcConfig { n_abc: 50, n_updates: 25, n_delta: 50, seed: 1, ..AbcConfig::default() };
        let report = wabc_fit(&data, &hp, &cfg).unwrap();
        let fitted = report.model().unwrap();
        let x = fitted.sample(1000, &mut SeedStream::new(22).rng()).unwrap();
        let y = truth.sample(1000, &mut SeedStream::new(23).rng()).unwrap();
        let (g, i) = (gd(&x, &y).unwrap(), igd(&x, &y).unwrap());
        assert!(g < 0.05 && i < 0.05, "gd {g} igd {i}");
        assert!(wasserstein2(&data, &fitted.sample(60, &mut SeedStream::new(24).rng()).unwrap()).unwrap() < 0.2);
    }
}
