//! Exact k-nearest-neighbor search.
//!
//! Neighbors are ordered by `(squared distance, point index)`, so ties are
//! broken by ascending index. The kd-tree and the exhaustive scan compute
//! squared distances with the same routine and therefore return identical
//! lists, which lets the scan serve as the tree's oracle.

use rayon::prelude::*;

use super::{Metric, PointSet, KDTREE_LEAF_SIZE, KDTREE_MAX_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

/// Median-split kd-tree over a borrowed point set.
#[derive(Debug)]
pub struct KdTree<'a> {
    points: &'a PointSet,
    metric: Metric,
    perm: Vec<usize>,
    nodes: Vec<Node>,
    // per node: lower corner then upper corner of the tight bounding box
    bounds: Vec<f64>,
}

struct Candidates {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Candidates {
    fn new(k: usize) -> Self {
        Self { k, items: Vec::with_capacity(k + 1) }
    }

    #[inline]
    fn is_full(&self) -> bool {
        self.items.len() == self.k
    }

    #[inline]
    fn worst(&self) -> f64 {
        self.items.last().map_or(f64::INFINITY, |c| c.0)
    }

    #[inline]
    fn offer(&mut self, d2: f64, idx: usize) {
        if self.is_full() {
            let (wd, wi) = self.items[self.k - 1];
            if d2 > wd || (d2 == wd && idx > wi) {
                return;
            }
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| d < d2 || (d == d2 && i < idx));
        self.items.insert(pos, (d2, idx));
        self.items.truncate(self.k);
    }

    fn into_neighbors(self) -> Vec<Neighbor> {
        self.items
            .into_iter()
            .map(|(d2, index)| Neighbor { index, distance: d2.sqrt() })
            .collect()
    }
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a PointSet, metric: Metric) -> Self {
        let n = points.len();
        let mut tree = Self {
            points,
            metric,
            perm: (0..n).collect(),
            nodes: Vec::with_capacity(2 * n / KDTREE_LEAF_SIZE + 1),
            bounds: Vec::new(),
        };
        tree.build_node(0, n);
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let dim = self.points.dim();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.perm[start..end] {
            for (a, &v) in self.points.point(i).iter().enumerate() {
                lo[a] = lo[a].min(v);
                hi[a] = hi[a].max(v);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);

        if end - start <= KDTREE_LEAF_SIZE {
            return id;
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] <= lo[axis] {
            // all points coincide
            return id;
        }
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            pts.point(i)[axis].total_cmp(&pts.point(j)[axis]).then(i.cmp(&j))
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { left, right };
        id
    }

    /// Lower bound on the squared distance from `q` to any point of `node`.
    #[inline]
    fn box_dist2(&self, node: usize, q: &[f64]) -> f64 {
        let dim = q.len();
        let lo = &self.bounds[2 * node * dim..(2 * node + 1) * dim];
        let hi = &self.bounds[(2 * node + 1) * dim..(2 * node + 2) * dim];
        let mut acc = 0.0;
        for a in 0..dim {
            let v = q[a];
            let t = if v < lo[a] {
                match self.metric {
                    Metric::Euclidean => lo[a] - v,
                    Metric::Periodic => wrap_min(lo[a] - v, hi[a] - v),
                }
            } else if v > hi[a] {
                match self.metric {
                    Metric::Euclidean => v - hi[a],
                    Metric::Periodic => wrap_min(v - hi[a], v - lo[a]),
                }
            } else {
                0.0
            };
            acc += t * t;
        }
        acc
    }

    fn search(&self, node: usize, bound: f64, q: &[f64], exclude: Option<usize>, c: &mut Candidates) {
        if c.is_full() && bound > c.worst() {
            return;
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.perm[start..end] {
                    if Some(j) == exclude {
                        continue;
                    }
                    c.offer(self.metric.dist2(q, self.points.point(j)), j);
                }
            }
            Node::Split { left, right } => {
                let bl = self.box_dist2(left, q);
                let br = self.box_dist2(right, q);
                if bl <= br {
                    self.search(left, bl, q, exclude, c);
                    self.search(right, br, q, exclude, c);
                } else {
                    self.search(right, br, q, exclude, c);
                    self.search(left, bl, q, exclude, c);
                }
            }
        }
    }

    /// The `k` nearest points to `q`, skipping `exclude`.
    pub fn nearest(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        let mut c = Candidates::new(k);
        if k > 0 {
            let b = self.box_dist2(0, q);
            self.search(0, b, q, exclude, &mut c);
        }
        c.into_neighbors()
    }
}

/// Circular distance lower bound for a query outside `[lo, hi]` given the two
/// signed gaps to the interval ends.
#[inline]
fn wrap_min(g1: f64, g2: f64) -> f64 {
    let (t1, t2) = (g1.abs(), g2.abs());
    t1.min(1.0 - t1).min(t2.min(1.0 - t2))
}

/// Exhaustive-scan k-NN of point `query` (excluding itself).
pub fn brute_force_knn(ps: &PointSet, query: usize, k: usize, metric: Metric) -> Vec<Neighbor> {
    let q = ps.point(query);
    let mut c = Candidates::new(k);
    if k > 0 {
        for j in (0..ps.len()).filter(|&j| j != query) {
            c.offer(metric.dist2(q, ps.point(j)), j);
        }
    }
    c.into_neighbors()
}

fn check_query(ps: &PointSet, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k >= ps.len() {
        return Err(Error::InsufficientPoints { n: ps.len(), k });
    }
    Ok(())
}

/// The `k` nearest neighbors of point `query_index`, sorted by ascending
/// distance with ties broken by ascending index.
pub fn knn_query(ps: &PointSet, query_index: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    if query_index >= ps.len() {
        return Err(Error::IndexOutOfRange { index: query_index, n: ps.len() });
    }
    check_query(ps, k)?;
    let found = if ps.dim() > KDTREE_MAX_DIM {
        brute_force_knn(ps, query_index, k, Metric::Euclidean)
    } else {
        KdTree::build(ps, Metric::Euclidean).nearest(ps.point(query_index), k, Some(query_index))
    };
    Ok(found.into_iter().map(|nb| (nb.index, nb.distance)).collect())
}

/// k-NN lists of every point, row `i` holding the neighbors of point `i`.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    k: usize,
    index: Vec<usize>,
    distance: Vec<f64>,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.index.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn indices(&self, i: usize) -> &[usize] {
        &self.index[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distance[i * self.k..(i + 1) * self.k]
    }
}

/// All-points k-NN. Rows are filled in parallel into preallocated slots, so
/// the result does not depend on scheduling.
pub fn all_knn(ps: &PointSet, k: usize, metric: Metric) -> Result<NeighborTable> {
    check_query(ps, k)?;
    let n = ps.len();
    let mut index = vec![0usize; n * k];
    let mut distance = vec![0.0f64; n * k];
    let tree = (ps.dim() <= KDTREE_MAX_DIM).then(|| KdTree::build(ps, metric));
    index
        .par_chunks_mut(k)
        .zip(distance.par_chunks_mut(k))
        .enumerate()
        .for_each(|(i, (idx_row, dist_row))| {
            let found = match &tree {
                Some(t) => t.nearest(ps.point(i), k, Some(i)),
                None => brute_force_knn(ps, i, k, metric),
            };
            for (slot, nb) in found.iter().enumerate() {
                idx_row[slot] = nb.index;
                dist_row[slot] = nb.distance;
            }
        });
    Ok(NeighborTable { k, index, distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn uniform(n: usize, d: usize, seed: u64) -> PointSet {
        let mut r = rng::from_seed(seed);
        PointSet::from_flat((0..n * d).map(|_| r.random::<f64>()).collect(), d).unwrap()
    }

    #[test]
    fn line_example() {
        let ps = PointSet::from_flat(vec![0.0, 1.0, 3.0], 1).unwrap();
        assert_eq!(knn_query(&ps, 0, 2).unwrap(), vec![(1, 1.0), (2, 3.0)]);
    }

    #[test]
    fn duplicates_come_first() {
        let ps = PointSet::from_rows(&[[0.2, 0.2], [0.2, 0.2], [5.0, 5.0]]).unwrap();
        let nn = knn_query(&ps, 0, 2).unwrap();
        assert_eq!(nn[0], (1, 0.0));
        assert_eq!(nn[1].0, 2);
    }

    #[test]
    fn ties_break_by_index() {
        // 0 is equidistant from 1..=4
        let ps = PointSet::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [-1.0, 0.0], [0.0, -1.0]])
            .unwrap();
        let nn = knn_query(&ps, 0, 3).unwrap();
        assert_eq!(nn.iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn query_errors() {
        let ps = PointSet::from_flat(vec![0.0, 1.0, 3.0], 1).unwrap();
        assert!(matches!(knn_query(&ps, 0, 3), Err(Error::InsufficientPoints { .. })));
        assert!(matches!(knn_query(&ps, 3, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(knn_query(&ps, 0, 0).is_err());
    }

    #[test]
    fn tree_matches_scan_random_5d() {
        let ps = uniform(500, 5, 11);
        let tree = KdTree::build(&ps, Metric::Euclidean);
        for i in 0..ps.len() {
            assert_eq!(
                tree.nearest(ps.point(i), 7, Some(i)),
                brute_force_knn(&ps, i, 7, Metric::Euclidean)
            );
        }
    }

    #[test]
    fn tree_matches_scan_periodic() {
        let ps = uniform(400, 3, 12);
        let tree = KdTree::build(&ps, Metric::Periodic);
        for i in 0..ps.len() {
            assert_eq!(
                tree.nearest(ps.point(i), 4, Some(i)),
                brute_force_knn(&ps, i, 4, Metric::Periodic)
            );
        }
    }

    #[test]
    fn tree_matches_scan_with_many_ties() {
        // integer lattice with duplicates: lots of equal distances
        let mut r = rng::from_seed(3);
        let data: Vec<f64> = (0..300 * 2).map(|_| r.random_range(0..6) as f64).collect();
        let ps = PointSet::from_flat(data, 2).unwrap();
        let table = all_knn(&ps, 5, Metric::Euclidean).unwrap();
        for i in 0..ps.len() {
            let want = brute_force_knn(&ps, i, 5, Metric::Euclidean);
            assert_eq!(table.indices(i), want.iter().map(|n| n.index).collect::<Vec<_>>());
        }
    }

    #[test]
    fn high_dimension_uses_scan() {
        let ps = uniform(60, 25, 5);
        let nn = knn_query(&ps, 3, 4).unwrap();
        let want = brute_force_knn(&ps, 3, 4, Metric::Euclidean);
        assert_eq!(nn, want.iter().map(|n| (n.index, n.distance)).collect::<Vec<_>>());
    }
}
