//! Ordered point clouds in objective space.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

/// An ordered list of `n >= 1` points of a common dimension `M`.
///
/// Points are stored back to back, so [`PointCloud::aligned`] is the
/// concatenated `nM` vector `[x_1 : x_2 : ... : x_n]` without copying.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("point dimension must be positive"));
        }
        if coords.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if coords.len() % dim != 0 {
            return Err(invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyCloud)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    /// Builds a 1-D cloud from scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn aligned(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_aligned(self) -> Vec<f64> {
        self.coords
    }

    /// Cloud whose `i`-th point is `self[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> PointCloud {
        assert_eq!(perm.len(), self.len(), "permutation length");
        let mut coords = Vec::with_capacity(self.coords.len());
        for &j in perm {
            coords.extend_from_slice(self.point(j));
        }
        PointCloud { dim: self.dim, coords }
    }

    /// Cloud made of the selected points, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &j in indices {
            coords.extend_from_slice(self.point(j));
        }
        PointCloud::new(self.dim, coords)
    }

    pub fn map_coords(&self, mut f: impl FnMut(usize, f64) -> f64) -> PointCloud {
        let dim = self.dim;
        let coords = self.coords.iter().enumerate().map(|(k, &v)| f(k % dim, v)).collect();
        PointCloud { dim, coords }
    }

    pub fn translated(&self, shift: &[f64]) -> PointCloud {
        assert_eq!(shift.len(), self.dim);
        self.map_coords(|m, v| v + shift[m])
    }

    pub fn scaled(&self, s: f64) -> PointCloud {
        self.map_coords(|_, v| v * s)
    }

    pub fn ensure_same_shape(&self, other: &PointCloud) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.len() != other.len() {
            return Err(Error::SizeMismatch(self.len(), other.len()));
        }
        Ok(())
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for p in self.points() {
            for (m, v) in p.iter().enumerate() {
                mean[m] += v;
            }
        }
        let n = self.len() as f64;
        mean.iter_mut().for_each(|v| *v /= n);
        mean
    }

    /// CSV with a `f1,...,fM` header and one point per row. Values use the
    /// shortest decimal representation that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim).map(|m| format!("f{m}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for p in self.points() {
            for (m, v) in p.iter().enumerate() {
                if m > 0 {
                    out.push(',');
                }
                write!(out, "{v:?}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<PointCloud> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("missing CSV header".into()))?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        for (m, c) in columns.iter().enumerate() {
            if *c != format!("f{}", m + 1) {
                return Err(Error::Parse(format!("unexpected CSV header column {c:?}")));
            }
        }
        let dim = columns.len();
        let mut coords = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {dim}",
                    row + 1,
                    fields.len()
                )));
            }
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad number {f:?}", row + 1)))?;
                coords.push(v);
            }
        }
        PointCloud::new(dim, coords)
    }

    pub fn read_csv(path: impl AsRef<std::path::Path>) -> Result<PointCloud> {
        PointCloud::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Squared Euclidean distance between two equal-length vectors.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_ragged_and_empty_input() {
        assert!(matches!(PointCloud::new(2, vec![]), Err(Error::EmptyCloud)));
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointCloud::from_points(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn aligned_vector_concatenates_in_index_order() {
        let c = PointCloud::from_points(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(c.aligned(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(c.permuted(&[1, 0]).aligned(), &[3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(PointCloud::from_csv("x,y\n1,2\n").is_err());
        assert!(PointCloud::from_csv("f1,f2\n1,oops\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(v in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let dim = 1 + v.len() % 3;
            let keep = v.len() - v.len() % dim;
            prop_assume!(keep > 0);
            let c = PointCloud::new(dim, v[..keep].to_vec()).unwrap();
            let back = PointCloud::from_csv(&c.to_csv()).unwrap();
            prop_assert_eq!(c, back);
        }
    }
}
