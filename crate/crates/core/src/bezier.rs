//! Bézier simplices: degree multi-indices, Bernstein-style evaluation on the
//! standard simplex, and the generative push-forward sampler.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{invalid, Error, Result};

/// Tolerance on `sum(t) == 1` for simplex parameters.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Multi-index `(d_1, ..., d_M)` labelling one monomial of the map.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Degree(Vec<u32>);

impl Degree {
    pub fn new(exponents: Vec<u32>) -> Self {
        Degree(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `D * e_m`, the degree attached to the `m`-th vertex.
    pub fn vertex(order: u32, dim: usize, m: usize) -> Self {
        let mut e = vec![0; dim];
        e[m] = order;
        Degree(e)
    }

    /// Index of the vertex this degree sits on, if it is one.
    pub fn vertex_index(&self) -> Option<usize> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        self.0.iter().position(|&d| d == total)
    }
}

/// All multi-indices of length `dim` summing to `order`, in lexicographically
/// descending order. This order is the canonical storage and file order.
pub fn enumerate_degrees(order: u32, dim: usize) -> Result<Vec<Degree>> {
    if dim == 0 {
        return Err(invalid("degree dimension must be at least 1"));
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    fill_degrees(order, 0, &mut current, &mut out);
    Ok(out)
}

fn fill_degrees(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Degree>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(Degree(current.clone()));
        return;
    }
    for d in (0..=remaining).rev() {
        current[pos] = d;
        fill_degrees(remaining - d, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// `C(n, k)` in exact integer arithmetic, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    u64::try_from(acc).ok()
}

/// Number of degrees of a Bézier simplex: `C(D + M - 1, M - 1)`.
pub fn degree_count(order: u32, dim: usize) -> usize {
    binomial(u64::from(order) + dim as u64 - 1, dim as u64 - 1).expect("degree count overflow") as usize
}

/// `D! / (d_1! ... d_M!)`, exactly.
pub fn multinomial_coeff(order: u32, degree: &Degree) -> Result<u64> {
    if degree.total() != order {
        return Err(Error::DegreeSum { degree: degree.0.clone(), order });
    }
    let mut remaining = u64::from(order);
    let mut acc: u64 = 1;
    for &d in &degree.0 {
        let b = binomial(remaining, u64::from(d)).ok_or_else(|| invalid("multinomial overflow"))?;
        acc = acc.checked_mul(b).ok_or_else(|| invalid("multinomial overflow"))?;
        remaining -= u64::from(d);
    }
    Ok(acc)
}

/// Barycentric coordinates on the standard `(M-1)`-simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexParam(Vec<f64>);

impl SimplexParam {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("simplex parameter needs at least one coordinate"));
        }
        if coords.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(invalid(format!("simplex coordinates must be non-negative: {coords:?}")));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(invalid(format!("simplex coordinates sum to {sum}, not 1")));
        }
        Ok(SimplexParam(coords))
    }

    pub fn vertex(dim: usize, m: usize) -> Self {
        let mut t = vec![0.0; dim];
        t[m] = 1.0;
        SimplexParam(t)
    }

    pub fn barycenter(dim: usize) -> Self {
        SimplexParam(vec![1.0 / dim as f64; dim])
    }

    /// Clips negative entries to zero and rescales to unit sum.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        coords.iter_mut().for_each(|t| *t = t.max(0.0));
        let sum: f64 = coords.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(invalid("cannot normalize a zero vector onto the simplex"));
        }
        coords.iter_mut().for_each(|t| *t /= sum);
        Ok(SimplexParam(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Fills `out` with one uniform draw on the simplex (normalized unit-rate
/// exponentials, i.e. a flat Dirichlet).
pub fn fill_uniform_simplex<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut sum = 0.0;
    for t in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *t = e;
        sum += e;
    }
    for t in out.iter_mut() {
        *t /= sum;
    }
}

pub fn sample_uniform_simplex<R: Rng + ?Sized>(
    dim: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<SimplexParam>> {
    if dim < 2 {
        return Err(invalid("simplex sampling needs M >= 2"));
    }
    Ok((0..count)
        .map(|_| {
            let mut t = vec![0.0; dim];
            fill_uniform_simplex(rng, &mut t);
            SimplexParam(t)
        })
        .collect())
}

/// Control points `p_d`, one per degree, stored in canonical degree order.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPointSet {
    order: u32,
    dim: usize,
    points: Vec<f64>,
}

impl ControlPointSet {
    pub fn from_flat(order: u32, dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("control point dimension must be positive"));
        }
        let expected = degree_count(order, dim) * dim;
        if points.len() != expected {
            return Err(invalid(format!(
                "order {order}, dim {dim} needs {expected} coordinates, got {}",
                points.len()
            )));
        }
        Ok(ControlPointSet { order, dim, points })
    }

    pub fn from_fn(order: u32, dim: usize, mut f: impl FnMut(&Degree) -> Vec<f64>) -> Result<Self> {
        let degrees = enumerate_degrees(order, dim)?;
        let mut points = Vec::with_capacity(degrees.len() * dim);
        for d in &degrees {
            let p = f(d);
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            points.extend(p);
        }
        Self::from_flat(order, dim, points)
    }

    /// Builds the set from `(degree, point)` pairs in any order; every degree
    /// must appear exactly once.
    pub fn from_entries(order: u32, dim: usize, entries: &[(Degree, Vec<f64>)]) -> Result<Self> {
        let degrees = enumerate_degrees(order, dim)?;
        if entries.len() != degrees.len() {
            return Err(invalid(format!(
                "expected {} control points, got {}",
                degrees.len(),
                entries.len()
            )));
        }
        let mut slots: Vec<Option<&Vec<f64>>> = vec![None; degrees.len()];
        for (d, p) in entries {
            let k = degrees
                .iter()
                .position(|x| x == d)
                .ok_or_else(|| Error::DegreeSum { degree: d.0.clone(), order })?;
            if d.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: d.dim() });
            }
            if slots[k].replace(p).is_some() {
                return Err(invalid(format!("degree {:?} given twice", d.0)));
            }
        }
        let mut points = Vec::with_capacity(degrees.len() * dim);
        for p in slots.into_iter().flatten() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            points.extend_from_slice(p);
        }
        Self::from_flat(order, dim, points)
    }

    pub fn constant(order: u32, dim: usize, value: &[f64]) -> Result<Self> {
        Self::from_fn(order, dim, |_| value.to_vec())
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn degrees(&self) -> Vec<Degree> {
        enumerate_degrees(self.order, self.dim).expect("dim checked at construction")
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn point_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn get(&self, degree: &Degree) -> Option<&[f64]> {
        self.degrees().iter().position(|d| d == degree).map(|k| self.point(k))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.points
    }
}

/// Precomputed exponents and multinomial weights of the Bernstein basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinBasis {
    order: u32,
    dim: usize,
    exponents: Vec<u32>,
    weights: Vec<f64>,
}

impl BernsteinBasis {
    pub fn new(order: u32, dim: usize) -> Result<Self> {
        let degrees = enumerate_degrees(order, dim)?;
        let mut exponents = Vec::with_capacity(degrees.len() * dim);
        let mut weights = Vec::with_capacity(degrees.len());
        for d in &degrees {
            exponents.extend_from_slice(d.exponents());
            weights.push(multinomial_coeff(order, d)? as f64);
        }
        Ok(BernsteinBasis { order, dim, exponents, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn power_table(&self, t: &[f64]) -> Vec<f64> {
        // pow[m * (D + 1) + k] = t_m^k, with 0^0 = 1
        let stride = self.order as usize + 1;
        let mut pow = vec![1.0; self.dim * stride];
        for m in 0..self.dim {
            for k in 1..stride {
                pow[m * stride + k] = pow[m * stride + k - 1] * t[m];
            }
        }
        pow
    }

    /// Basis values `C(D; d) * prod_m t_m^{d_m}` for every degree.
    pub fn values(&self, t: &[f64], out: &mut [f64]) {
        debug_assert_eq!(t.len(), self.dim);
        let stride = self.order as usize + 1;
        let pow = self.power_table(t);
        for (k, w) in self.weights.iter().enumerate() {
            let exps = &self.exponents[k * self.dim..(k + 1) * self.dim];
            let mut v = *w;
            for (m, &e) in exps.iter().enumerate() {
                v *= pow[m * stride + e as usize];
            }
            out[k] = v;
        }
    }

    /// Partial derivatives of every basis function with respect to the
    /// barycentric coordinates listed in `wrt` (repeats allowed), treating the
    /// `t_m` as independent variables.
    pub fn derivative_values(&self, t: &[f64], wrt: &[usize], out: &mut [f64]) {
        let stride = self.order as usize + 1;
        let pow = self.power_table(t);
        let mut count = vec![0u32; self.dim];
        for &m in wrt {
            count[m] += 1;
        }
        for (k, w) in self.weights.iter().enumerate() {
            let exps = &self.exponents[k * self.dim..(k + 1) * self.dim];
            let mut v = *w;
            for (m, &e) in exps.iter().enumerate() {
                let c = count[m];
                if c > e {
                    v = 0.0;
                    break;
                }
                // falling factorial e (e-1) ... (e-c+1)
                for j in 0..c {
                    v *= f64::from(e - j);
                }
                v *= pow[m * stride + (e - c) as usize];
            }
            out[k] = v;
        }
    }
}

/// A Bézier simplex of order `D` mapping `Δ^{M-1}` into `R^M`.
#[derive(Clone, Debug, PartialEq)]
pub struct BezierModel {
    control_points: ControlPointSet,
    basis: BernsteinBasis,
}

impl BezierModel {
    pub fn new(control_points: ControlPointSet) -> Result<Self> {
        if control_points.order == 0 {
            return Err(invalid("Bézier simplex order must be at least 1"));
        }
        if control_points.dim < 2 {
            return Err(invalid("Bézier simplex dimension must be at least 2"));
        }
        let basis = BernsteinBasis::new(control_points.order, control_points.dim)?;
        Ok(BezierModel { control_points, basis })
    }

    pub fn order(&self) -> u32 {
        self.control_points.order
    }

    pub fn dim(&self) -> usize {
        self.control_points.dim
    }

    pub fn control_points(&self) -> &ControlPointSet {
        &self.control_points
    }

    pub fn into_control_points(self) -> ControlPointSet {
        self.control_points
    }

    pub fn basis(&self) -> &BernsteinBasis {
        &self.basis
    }

    /// Evaluates `b(t)`.
    pub fn evaluate(&self, t: &SimplexParam) -> Result<Vec<f64>> {
        if t.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: t.dim() });
        }
        let mut out = vec![0.0; self.dim()];
        self.evaluate_into(t.coords(), &mut vec![0.0; self.basis.len()], &mut out);
        Ok(out)
    }

    /// Allocation-free evaluation; `scratch` must hold one value per degree.
    pub fn evaluate_into(&self, t: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.basis.values(t, scratch);
        combine(&self.control_points, scratch, out);
    }

    /// Draws `count` points from the push-forward of the uniform simplex
    /// distribution through the map.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<PointCloud> {
        if count == 0 {
            return Err(Error::EmptyCloud);
        }
        let dim = self.dim();
        let mut coords = vec![0.0; count * dim];
        let mut t = vec![0.0; dim];
        let mut scratch = vec![0.0; self.basis.len()];
        for chunk in coords.chunks_exact_mut(dim) {
            fill_uniform_simplex(rng, &mut t);
            self.evaluate_into(&t, &mut scratch, chunk);
        }
        PointCloud::new(dim, coords)
    }
}

/// `out = sum_k weights[k] * p_k`.
pub(crate) fn combine(cps: &ControlPointSet, weights: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(cps.point(k)) {
            *o += w * p;
        }
    }
}

pub fn evaluate(model: &BezierModel, t: &SimplexParam) -> Result<Vec<f64>> {
    model.evaluate(t)
}

pub fn sample_model<R: Rng + ?Sized>(model: &BezierModel, count: usize, rng: &mut R) -> Result<PointCloud> {
    model.sample(count, rng)
}

#[derive(Serialize, Deserialize)]
struct ControlPointEntry {
    degree: Vec<u32>,
    point: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: u32,
    dim: usize,
    control_points: Vec<ControlPointEntry>,
}

impl Serialize for BezierModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let cps = &self.control_points;
        let entries = cps
            .degrees()
            .into_iter()
            .enumerate()
            .map(|(k, d)| ControlPointEntry { degree: d.0, point: cps.point(k).to_vec() })
            .collect();
        ModelFile { order: cps.order, dim: cps.dim, control_points: entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BezierModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = ModelFile::deserialize(d)?;
        let entries: Vec<(Degree, Vec<f64>)> = file
            .control_points
            .into_iter()
            .map(|e| (Degree(e.degree), e.point))
            .collect();
        ControlPointSet::from_entries(file.order, file.dim, &entries)
            .and_then(BezierModel::new)
            .map_err(serde::de::Error::custom)
    }
}

impl BezierModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
