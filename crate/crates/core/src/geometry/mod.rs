//! Point sets, exact nearest-neighbor search, nearest-neighbor graphs and the
//! power-weighted edge functionals `L_p` and `L_p*`.

mod graph;
mod kdtree;
mod sum;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use graph::{
    boundary_functional, build_boundary_graph, build_nn_graph, l_p, lp_functional, Edge,
    EdgeTarget, NNGraph,
};
pub use kdtree::{all_knn, brute_force_knn, knn_query, KdTree, Neighbor, NeighborTable};
pub use sum::CompensatedSum;

/// Above this dimension k-NN queries use the exhaustive scan instead of the kd-tree.
pub const KDTREE_MAX_DIM: usize = 20;

/// Number of points stored in a kd-tree leaf.
pub const KDTREE_LEAF_SIZE: usize = 16;

/// Distance used for neighbor search.
///
/// `Periodic` is the flat unit torus `[0, 1)^d` (coordinate differences wrap
/// around). It is used only for boundary-free calibration of `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Periodic,
}

impl Metric {
    #[inline]
    pub(crate) fn axis_diff(self, a: f64, b: f64) -> f64 {
        match self {
            Metric::Euclidean => a - b,
            Metric::Periodic => {
                let t = (a - b).abs();
                t.min(1.0 - t)
            }
        }
    }

    /// Squared distance; both search paths call exactly this so that their
    /// results agree bit for bit.
    #[inline]
    pub fn dist2(self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            let t = self.axis_diff(x, y);
            acc += t * t;
        }
        acc
    }
}

/// An ordered collection of `n ≥ 1` points in `R^d`, `d ≥ 1`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    dim: usize,
}

impl PointSet {
    /// Builds a point set from a flat row-major buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPointSet("dimension must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidPointSet("no points".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidPointSet(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPointSet(format!(
                "non-finite coordinate at point {}, axis {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::InvalidPointSet("no points".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::InvalidPointSet(format!(
                    "point {i} has dimension {}, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(data, dim)
    }

    /// Builds a point set from column vectors of equal length.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let dim = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidPointSet("columns of unequal length".into()));
        }
        let mut data = Vec::with_capacity(n * dim);
        for i in 0..n {
            data.extend(cols.iter().map(|c| c[i]));
        }
        Self::from_flat(data, dim)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; a point set holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, axis: usize) -> Vec<f64> {
        self.iter().map(|p| p[axis]).collect()
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, axes: &[usize]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidPointSet("no columns selected".into()));
        }
        if let Some(&bad) = axes.iter().find(|&&a| a >= self.dim) {
            return Err(Error::IndexOutOfRange { index: bad, n: self.dim });
        }
        let mut data = Vec::with_capacity(self.len() * axes.len());
        for p in self.iter() {
            data.extend(axes.iter().map(|&a| p[a]));
        }
        Ok(Self { data, dim: axes.len() })
    }

    /// Keeps the listed points, in the given order.
    pub fn select_points(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange { index: i, n: self.len() });
            }
            data.extend_from_slice(self.point(i));
        }
        Self::from_flat(data, self.dim)
    }

    /// Applies `f(axis, value)` to every coordinate.
    pub fn map_coords(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let dim = self.dim;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(pos, &v)| f(pos % dim, v))
            .collect();
        Self::from_flat(data, dim)
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: shift.len() });
        }
        self.map_coords(|a, v| v + shift[a])
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        self.map_coords(|_, v| v * t)
    }

    /// Concatenates two point sets of equal dimension.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::from_flat(data, self.dim)
    }
}

/// The neighbor-rank set `S`: a non-empty set of positive integers, with
/// `k = max(S)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct NeighborSpec {
    indices: Vec<usize>,
}

impl NeighborSpec {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidNeighborSpec("S must be non-empty".into()));
        }
        if set.contains(&0) {
            return Err(Error::InvalidNeighborSpec("elements of S must be >= 1".into()));
        }
        Ok(Self { indices: set.into_iter().collect() })
    }

    /// `S = {1, …, k}`.
    pub fn first_k(k: usize) -> Result<Self> {
        Self::new(1..=k)
    }

    pub fn singleton(k: usize) -> Result<Self> {
        Self::new([k])
    }

    /// Largest neighbor rank.
    #[inline]
    pub fn k(&self) -> usize {
        *self.indices.last().expect("non-empty")
    }

    /// Sorted ranks.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_singleton(&self) -> Option<usize> {
        (self.indices.len() == 1).then(|| self.indices[0])
    }
}

impl TryFrom<Vec<usize>> for NeighborSpec {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<NeighborSpec> for Vec<usize> {
    fn from(s: NeighborSpec) -> Self {
        s.indices
    }
}

impl fmt::Display for NeighborSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for NeighborSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parsed = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidNeighborSpec(format!("cannot parse {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parsed)
    }
}

/// An axis-aligned cube `∏ [lower_i, lower_i + side]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    lower: Vec<f64>,
    side: f64,
}

impl Cube {
    pub fn new(lower: Vec<f64>, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidParameter(format!("cube side must be positive, got {side}")));
        }
        if lower.is_empty() || lower.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("cube corner must be a finite vector".into()));
        }
        Ok(Self { lower, side })
    }

    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![0.0; dim], side: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Closed containment.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .all(|(&v, &lo)| v >= lo && v <= lo + self.side)
    }

    /// The closest point of the cube's boundary to an interior point `x`, as
    /// `(axis, face coordinate, distance)`. Ties go to the lowest axis, and on
    /// one axis to the lower face.
    pub fn nearest_boundary(&self, x: &[f64]) -> (usize, f64, f64) {
        let mut best = (0, self.lower[0], f64::INFINITY);
        for (axis, (&v, &lo)) in x.iter().zip(&self.lower).enumerate() {
            let hi = lo + self.side;
            let (face, dist) = if v - lo <= hi - v { (lo, v - lo) } else { (hi, hi - v) };
            // points on or marginally past a face (rounding in partitioning)
            let dist = dist.max(0.0);
            if dist < best.2 {
                best = (axis, face, dist);
            }
        }
        best
    }
}
