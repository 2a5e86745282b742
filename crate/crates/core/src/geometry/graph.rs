//! Generalized nearest-neighbor graphs `NN_S(V)`, their boundary variant
//! `NN*_S(V, B)`, and the functionals `L_p` / `L_p*`.
//!
//! Edges are kept in `(source, rank)` order and functionals are accumulated
//! with compensated summation in that order, so a functional has one value
//! per input regardless of how the neighbor search was parallelized.

use super::kdtree::all_knn;
use super::{CompensatedSum, Cube, Metric, NeighborSpec, PointSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeTarget {
    Point(usize),
    /// A point on the boundary of the enclosing cube.
    Boundary(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: EdgeTarget,
    pub length: f64,
    /// The element of `S` this edge realizes.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct NNGraph {
    edges: Vec<Edge>,
    with_boundary: bool,
    num_points: usize,
    dim: usize,
    spec: NeighborSpec,
}

impl NNGraph {
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn with_boundary(&self) -> bool {
        self.with_boundary
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &NeighborSpec {
        &self.spec
    }

    /// In-degree of every vertex, counting point-to-point edges only.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_points];
        for e in &self.edges {
            if let EdgeTarget::Point(t) = e.target {
                deg[t] += 1;
            }
        }
        deg
    }

    pub fn max_in_degree(&self) -> usize {
        self.in_degrees().into_iter().max().unwrap_or(0)
    }

    pub fn l_p(&self, p: f64) -> f64 {
        l_p(self, p)
    }
}

/// `‖e‖^p` with `0^0 = 1` and `0^p = 0` for `p > 0`.
#[inline]
pub(crate) fn pow_len(len: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if len == 0.0 {
        0.0
    } else if p == 1.0 {
        len
    } else {
        len.powf(p)
    }
}

fn check_power(p: f64) -> Result<()> {
    if p >= 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("power p must be a finite nonnegative number, got {p}")))
    }
}

fn check_sample(ps: &PointSet, spec: &NeighborSpec) -> Result<()> {
    if ps.len() <= spec.k() {
        return Err(Error::SampleTooSmall { n: ps.len(), k: spec.k() });
    }
    Ok(())
}

/// Builds `NN_S(V)`: for each `i ∈ S`, an edge from every point to its
/// `i`-th nearest neighbor (ties by ascending index).
pub fn build_nn_graph(ps: &PointSet, spec: &NeighborSpec) -> Result<NNGraph> {
    check_sample(ps, spec)?;
    let table = all_knn(ps, spec.k(), Metric::Euclidean)?;
    let mut edges = Vec::with_capacity(ps.len() * spec.len());
    for i in 0..ps.len() {
        let (idx, dist) = (table.indices(i), table.distances(i));
        for &r in spec.indices() {
            edges.push(Edge {
                source: i,
                target: EdgeTarget::Point(idx[r - 1]),
                length: dist[r - 1],
                rank: r,
            });
        }
    }
    Ok(NNGraph { edges, with_boundary: false, num_points: ps.len(), dim: ps.dim(), spec: spec.clone() })
}

/// Builds `NN*_S(V, B)`: every edge of `NN_S(V)` longer than the distance from
/// its source to the nearest boundary point of `cube` is redirected to that
/// boundary point.
pub fn build_boundary_graph(ps: &PointSet, spec: &NeighborSpec, cube: &Cube) -> Result<NNGraph> {
    if cube.dim() != ps.dim() {
        return Err(Error::DimensionMismatch { expected: ps.dim(), got: cube.dim() });
    }
    if let Some(index) = (0..ps.len()).find(|&i| !cube.contains(ps.point(i))) {
        return Err(Error::PointOutsideCube { index });
    }
    let mut graph = build_nn_graph(ps, spec)?;
    for e in &mut graph.edges {
        let x = ps.point(e.source);
        let (axis, face, delta) = cube.nearest_boundary(x);
        if e.length > delta {
            let mut b = x.to_vec();
            b[axis] = face;
            e.target = EdgeTarget::Boundary(b);
            e.length = delta;
        }
    }
    graph.with_boundary = true;
    Ok(graph)
}

/// `Σ_{edges} length^p`, compensated, in edge order.
pub fn l_p(graph: &NNGraph, p: f64) -> f64 {
    graph.edges.iter().map(|e| pow_len(e.length, p)).collect::<CompensatedSum>().value()
}

/// `L_p(V)` without materializing the graph; equal to `l_p(build_nn_graph(..))`.
///
/// With [`Metric::Periodic`] the points must lie in `[0, 1)^d` and distances
/// wrap around the unit torus.
pub fn lp_functional(ps: &PointSet, spec: &NeighborSpec, p: f64, metric: Metric) -> Result<f64> {
    check_power(p)?;
    check_sample(ps, spec)?;
    let table = all_knn(ps, spec.k(), metric)?;
    let mut sum = CompensatedSum::new();
    for i in 0..ps.len() {
        let dist = table.distances(i);
        for &r in spec.indices() {
            sum.add(pow_len(dist[r - 1], p));
        }
    }
    Ok(sum.value())
}

/// `L*_p(V, B)` for any number of points, including `|V| ≤ max(S)`: a missing
/// `i`-th neighbor is replaced by the nearest boundary point, as the boundary
/// is part of the neighbor pool. Points are taken to lie in `cube`.
///
/// For `|V| > max(S)` this equals `l_p(build_boundary_graph(..))`.
pub fn boundary_functional(ps: &PointSet, spec: &NeighborSpec, cube: &Cube, p: f64) -> Result<f64> {
    check_power(p)?;
    if cube.dim() != ps.dim() {
        return Err(Error::DimensionMismatch { expected: ps.dim(), got: cube.dim() });
    }
    let n = ps.len();
    let available = spec.k().min(n - 1);
    let table = if available > 0 { Some(all_knn(ps, available, Metric::Euclidean)?) } else { None };
    let mut sum = CompensatedSum::new();
    for i in 0..n {
        let (_, _, delta) = cube.nearest_boundary(ps.point(i));
        for &r in spec.indices() {
            let d = match &table {
                Some(t) if r <= available => t.distances(i)[r - 1],
                _ => f64::INFINITY,
            };
            sum.add(pow_len(if d > delta { delta } else { d }, p));
        }
    }
    Ok(sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn line() -> PointSet {
        PointSet::from_flat(vec![0.0, 1.0, 3.0], 1).unwrap()
    }

    fn uniform(n: usize, d: usize, seed: u64) -> PointSet {
        let mut r = rng::from_seed(seed);
        PointSet::from_flat((0..n * d).map(|_| r.random::<f64>()).collect(), d).unwrap()
    }

    fn targets(g: &NNGraph) -> Vec<(usize, usize)> {
        g.edges()
            .iter()
            .map(|e| match e.target {
                EdgeTarget::Point(t) => (e.source, t),
                EdgeTarget::Boundary(_) => panic!("unexpected boundary edge"),
            })
            .collect()
    }

    #[test]
    fn single_neighbor_line_graph() {
        let g = build_nn_graph(&line(), &NeighborSpec::new([1]).unwrap()).unwrap();
        assert_eq!(targets(&g), vec![(0, 1), (1, 0), (2, 1)]);
        assert_eq!(g.in_degrees(), vec![1, 2, 0]);
        assert!(!g.with_boundary());
    }

    #[test]
    fn two_neighbor_line_graph_and_functionals() {
        let g = build_nn_graph(&line(), &NeighborSpec::new([1, 2]).unwrap()).unwrap();
        assert_eq!(targets(&g), vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 1), (2, 0)]);
        let lengths: Vec<f64> = g.edges().iter().map(|e| e.length).collect();
        assert_eq!(lengths, vec![1.0, 3.0, 1.0, 2.0, 2.0, 3.0]);
        assert_eq!(g.l_p(1.0), 12.0);
        assert_eq!(g.l_p(2.0), 28.0);
        assert_eq!(g.l_p(0.0), 6.0);
    }

    #[test]
    fn sample_must_exceed_neighbor_order() {
        let err = build_nn_graph(&line(), &NeighborSpec::new([3]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::SampleTooSmall { n: 3, k: 3 }));
    }

    #[test]
    fn zero_length_edges() {
        let ps = PointSet::from_flat(vec![0.5, 0.5, 0.7], 1).unwrap();
        let g = build_nn_graph(&ps, &NeighborSpec::new([1]).unwrap()).unwrap();
        assert_eq!(g.l_p(1.0), 0.7 - 0.5);
        assert_eq!(g.l_p(0.0), 3.0);
    }

    #[test]
    fn lp_functional_matches_graph() {
        let ps = uniform(300, 3, 1);
        let spec = NeighborSpec::new([1, 3]).unwrap();
        let g = build_nn_graph(&ps, &spec).unwrap();
        for p in [0.0, 0.5, 1.0, 2.5] {
            assert_eq!(lp_functional(&ps, &spec, p, Metric::Euclidean).unwrap(), g.l_p(p));
        }
        assert!(lp_functional(&ps, &spec, -1.0, Metric::Euclidean).is_err());
    }

    #[test]
    fn interior_cluster_has_no_substitutions() {
        let mut r = rng::from_seed(2);
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|_| [0.5 + 0.01 * r.random::<f64>(), 0.5 + 0.01 * r.random::<f64>()])
            .collect();
        let ps = PointSet::from_rows(&rows).unwrap();
        let spec = NeighborSpec::new([1, 2]).unwrap();
        let plain = build_nn_graph(&ps, &spec).unwrap();
        let bnd = build_boundary_graph(&ps, &spec, &Cube::unit(2)).unwrap();
        assert!(bnd.with_boundary());
        assert_eq!(plain.edges(), bnd.edges());
    }

    #[test]
    fn near_face_point_gets_boundary_edge() {
        let ps = PointSet::from_rows(&[[0.01, 0.5], [0.51, 0.5], [0.51, 0.52]]).unwrap();
        let g = build_boundary_graph(&ps, &NeighborSpec::new([1]).unwrap(), &Cube::unit(2)).unwrap();
        let e = &g.edges()[0];
        assert_eq!(e.length, 0.01);
        assert_eq!(e.target, EdgeTarget::Boundary(vec![0.0, 0.5]));
    }

    #[test]
    fn boundary_graph_rejects_outside_points() {
        let ps = PointSet::from_rows(&[[0.2, 0.5], [1.2, 0.5], [0.3, 0.3]]).unwrap();
        let err = build_boundary_graph(&ps, &NeighborSpec::new([1]).unwrap(), &Cube::unit(2)).unwrap_err();
        assert!(matches!(err, Error::PointOutsideCube { index: 1 }));
    }

    #[test]
    fn boundary_bound_on_random_cube_sample() {
        let ps = uniform(300, 3, 4);
        let spec = NeighborSpec::new([1, 2]).unwrap();
        let plain = build_nn_graph(&ps, &spec).unwrap();
        let bnd = build_boundary_graph(&ps, &spec, &Cube::unit(3)).unwrap();
        for (a, b) in plain.edges().iter().zip(bnd.edges()) {
            assert_eq!((a.source, a.rank), (b.source, b.rank));
            assert!(b.length <= a.length);
        }
        for p in [0.5, 1.0, 2.0] {
            assert!(bnd.l_p(p) <= plain.l_p(p));
            assert_eq!(boundary_functional(&ps, &spec, &Cube::unit(3), p).unwrap(), bnd.l_p(p));
        }
    }

    #[test]
    fn boundary_functional_handles_tiny_blocks() {
        let spec = NeighborSpec::new([1, 2]).unwrap();
        let cube = Cube::unit(2);
        let one = PointSet::from_rows(&[[0.25, 0.5]]).unwrap();
        // both ranks go to the boundary at distance 0.25
        assert_eq!(boundary_functional(&one, &spec, &cube, 1.0).unwrap(), 0.5);
        let two = PointSet::from_rows(&[[0.25, 0.5], [0.3, 0.5]]).unwrap();
        let v = boundary_functional(&two, &spec, &cube, 1.0).unwrap();
        let want = (0.3f64 - 0.25) + 0.25 + (0.3 - 0.25) + 0.3;
        assert!((v - want).abs() < 1e-15);
    }
}
