//! Independent subspace analysis: whitening, FastICA, grouping of the ICA
//! components into subspaces by maximizing the summed within-block mutual
//! information, and a block Amari index for scoring separations.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{renyi_mi, EstimatorSettings};
use crate::geometry::PointSet;
use crate::rng;

/// Whitened data together with the transform that produced it:
/// `data[i] = matrix · (x_i − mean)`.
#[derive(Debug, Clone)]
pub struct Whitening {
    pub data: PointSet,
    pub matrix: DMatrix<f64>,
    pub mean: Vec<f64>,
}

fn to_matrix(ps: &PointSet) -> DMatrix<f64> {
    DMatrix::from_row_slice(ps.len(), ps.dim(), ps.as_flat())
}

fn from_matrix(m: &DMatrix<f64>) -> Result<PointSet> {
    let mut data = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        data.extend(m.row(r).iter());
    }
    PointSet::from_flat(data, m.ncols())
}

fn centered(ps: &PointSet) -> (DMatrix<f64>, Vec<f64>) {
    let mut x = to_matrix(ps);
    let n = ps.len() as f64;
    let mean: Vec<f64> = (0..ps.dim()).map(|a| x.column(a).sum() / n).collect();
    for (a, m) in mean.iter().enumerate() {
        x.column_mut(a).add_scalar_mut(-m);
    }
    (x, mean)
}

/// Sample covariance with divisor `n − 1`.
pub fn covariance(ps: &PointSet) -> DMatrix<f64> {
    let (x, _) = centered(ps);
    let c = x.transpose() * &x / (ps.len() as f64 - 1.0);
    (&c + c.transpose()) * 0.5
}

fn eigen_sorted(c: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

/// Symmetric whitening `Σ^{−1/2}`: zero mean and identity sample covariance.
/// Already-white data is left (nearly) untouched.
pub fn whiten(ps: &PointSet) -> Result<(PointSet, DMatrix<f64>)> {
    let (vals, vecs) = eigen_sorted(covariance(ps));
    check_rank(&vals, ps.dim())?;
    let inv_sqrt = DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v.sqrt()));
    let w = &vecs * DMatrix::from_diagonal(&inv_sqrt) * vecs.transpose();
    let (x, _) = centered(ps);
    Ok((from_matrix(&(x * w.transpose()))?, w))
}

fn check_rank(vals: &[f64], dim: usize) -> Result<()> {
    let top = vals.first().copied().unwrap_or(0.0);
    if vals.len() < dim || !(top > 0.0) || !(vals[dim - 1] > top * 1e-12) {
        return Err(Error::SingularCovariance);
    }
    Ok(())
}

/// Principal-component whitening onto the leading `dim` directions.
pub fn whiten_to(ps: &PointSet, dim: usize) -> Result<Whitening> {
    if dim == 0 || dim > ps.dim() {
        return Err(Error::InvalidParameter(format!("cannot whiten {} columns to {dim}", ps.dim())));
    }
    let (vals, vecs) = eigen_sorted(covariance(ps));
    check_rank(&vals, dim)?;
    let rows: Vec<_> = (0..dim).map(|i| vecs.column(i).transpose() / vals[i].sqrt()).collect();
    let w = DMatrix::from_rows(&rows);
    let (x, mean) = centered(ps);
    Ok(Whitening { data: from_matrix(&(x * w.transpose()))?, matrix: w, mean })
}

#[derive(Debug, Clone, Copy)]
pub struct FastIcaConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FastIcaConfig {
    fn default() -> Self {
        Self { max_iter: 500, tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct FastIcaResult {
    /// Orthogonal; rows are the unmixing directions in whitened space.
    pub unmixing: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

/// `(W Wᵀ)^{−1/2} W`.
fn symmetric_decorrelation(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let inv_sqrt = eig.eigenvalues.map(|v| 1.0 / v.max(1e-300).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose() * w
}

/// Symmetric FastICA with the `tanh` nonlinearity on whitened input.
pub fn fastica(ps: &PointSet, seed: u64) -> FastIcaResult {
    fastica_with(ps, seed, FastIcaConfig::default())
}

pub fn fastica_with(ps: &PointSet, seed: u64, config: FastIcaConfig) -> FastIcaResult {
    let m = ps.dim();
    let n = ps.len() as f64;
    let x = to_matrix(ps);
    let mut g = rng::from_seed(seed);
    let init = DMatrix::from_fn(m, m, |_, _| g.sample::<f64, _>(StandardNormal));
    let mut w = symmetric_decorrelation(&init);
    for it in 1..=config.max_iter {
        let y = &x * w.transpose();
        let gy = y.map(f64::tanh);
        let mean_dg: Vec<f64> = (0..m).map(|c| gy.column(c).iter().map(|t| 1.0 - t * t).sum::<f64>() / n).collect();
        let mut next = gy.transpose() * &x / n;
        for (i, md) in mean_dg.iter().enumerate() {
            let row = w.row(i) * *md;
            let mut r = next.row_mut(i);
            r -= row;
        }
        let next = symmetric_decorrelation(&next);
        let change = (0..m)
            .map(|i| (1.0 - next.row(i).dot(&w.row(i)).abs()).abs())
            .fold(0.0, f64::max);
        w = next;
        if change < config.tol {
            return FastIcaResult { unmixing: w, iterations: it, converged: true, warning: None };
        }
    }
    FastIcaResult {
        unmixing: w,
        iterations: config.max_iter,
        converged: false,
        warning: Some(format!("FastICA did not converge within {} iterations", config.max_iter)),
    }
}

/// A partition of components into blocks, with the objective it attains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grouping {
    pub blocks: Vec<Vec<usize>>,
    pub objective: f64,
    /// Objective after greedy construction and after each accepted swap.
    pub trace: Vec<f64>,
}

fn check_shape(dm: usize, d: usize, m: usize) -> Result<()> {
    if d == 0 || m == 0 || d * m != dm {
        return Err(Error::InvalidParameter(format!(
            "{dm} components cannot be split into {m} blocks of {d}"
        )));
    }
    Ok(())
}

/// Caches block scores by (sorted) membership.
struct BlockScores<F> {
    score: F,
    memo: HashMap<Vec<usize>, f64>,
}

impl<F: FnMut(&[usize]) -> Result<f64>> BlockScores<F> {
    fn get(&mut self, block: &[usize]) -> Result<f64> {
        let mut key = block.to_vec();
        key.sort_unstable();
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let v = (self.score)(&key)?;
        self.memo.insert(key, v);
        Ok(v)
    }
}

/// Greedy agglomeration on the pairwise scores followed by pairwise swap
/// local search on the block objective `Σ_j score(block_j)`.
///
/// Greedy: seed each block with the most dependent unassigned pair, then
/// grow it with the unassigned component of largest summed pairwise score.
/// Swaps: exchange two members of different blocks whenever that strictly
/// raises the objective, taking the best swap each round.
pub fn search_partition<F>(dm: usize, d: usize, pairwise: &DMatrix<f64>, score: F) -> Result<Grouping>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    if !dm.is_multiple_of(d.max(1)) || d == 0 {
        return Err(Error::InvalidParameter(format!("{dm} components cannot be split into blocks of {d}")));
    }
    let mut scores = BlockScores { score, memo: HashMap::new() };
    let mut unassigned: Vec<usize> = (0..dm).collect();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    while !unassigned.is_empty() {
        if d == 1 {
            blocks.push(vec![unassigned.remove(0)]);
            continue;
        }
        let mut best = (f64::NEG_INFINITY, 0, 1);
        for a in 0..unassigned.len() {
            for b in (a + 1)..unassigned.len() {
                let v = pairwise[(unassigned[a], unassigned[b])];
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let mut block = vec![unassigned[a], unassigned[b]];
        unassigned.remove(b);
        unassigned.remove(a);
        while block.len() < d {
            let (pos, _) = unassigned
                .iter()
                .enumerate()
                .map(|(pos, &u)| (pos, block.iter().map(|&x| pairwise[(u, x)]).sum::<f64>()))
                .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            block.push(unassigned.remove(pos));
        }
        block.sort_unstable();
        blocks.push(block);
    }

    let mut current: Vec<f64> = blocks.iter().map(|b| scores.get(b)).collect::<Result<_>>()?;
    let mut objective: f64 = current.iter().sum();
    let mut trace = vec![objective];
    loop {
        let mut best: Option<(f64, usize, usize, usize, usize, f64, f64)> = None;
        for a in 0..blocks.len() {
            for b in (a + 1)..blocks.len() {
                for ia in 0..d {
                    for ib in 0..d {
                        let mut na = blocks[a].clone();
                        let mut nb = blocks[b].clone();
                        std::mem::swap(&mut na[ia], &mut nb[ib]);
                        let sa = scores.get(&na)?;
                        let sb = scores.get(&nb)?;
                        let gain = sa + sb - current[a] - current[b];
                        if gain > 1e-12 && best.is_none_or(|bst| gain > bst.0) {
                            best = Some((gain, a, b, ia, ib, sa, sb));
                        }
                    }
                }
            }
        }
        let Some((_, a, b, ia, ib, sa, sb)) = best else { break };
        let (x, y) = (blocks[a][ia], blocks[b][ib]);
        blocks[a][ia] = y;
        blocks[b][ib] = x;
        blocks[a].sort_unstable();
        blocks[b].sort_unstable();
        current[a] = sa;
        current[b] = sb;
        objective = current.iter().sum();
        trace.push(objective);
    }
    Ok(Grouping { blocks, objective, trace })
}

/// Every partition of `0..dm` into unordered blocks of size `d`.
pub fn all_partitions(dm: usize, d: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    if d == 0 || !dm.is_multiple_of(d) {
        return Err(Error::InvalidParameter(format!("{dm} components cannot be split into blocks of {d}")));
    }
    if dm > 12 {
        return Err(Error::InvalidParameter(format!("exhaustive search limited to 12 components, got {dm}")));
    }
    fn rec(rest: Vec<usize>, d: usize, acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let first = rest[0];
        let others = &rest[1..];
        let mut choose = |combo: &[usize]| {
            let mut block = vec![first];
            block.extend_from_slice(combo);
            let remaining: Vec<usize> = others.iter().copied().filter(|x| !combo.contains(x)).collect();
            acc.push(block);
            rec(remaining, d, acc, out);
            acc.pop();
        };
        combinations(others, d - 1, &mut choose);
    }
    let mut out = Vec::new();
    rec((0..dm).collect(), d, &mut Vec::new(), &mut out);
    Ok(out)
}

fn combinations(items: &[usize], r: usize, f: &mut impl FnMut(&[usize])) {
    fn go(items: &[usize], r: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == r {
            f(cur);
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, r, i + 1, cur, f);
            cur.pop();
        }
    }
    go(items, r, 0, &mut Vec::new(), f);
}

/// Maximizes the block objective by enumeration (`dm ≤ 12`).
pub fn exhaustive_partition<F>(dm: usize, d: usize, score: F) -> Result<Grouping>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    let mut scores = BlockScores { score, memo: HashMap::new() };
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    for partition in all_partitions(dm, d)? {
        let mut total = 0.0;
        for b in &partition {
            total += scores.get(b)?;
        }
        if best.as_ref().is_none_or(|(v, _)| total > *v) {
            best = Some((total, partition));
        }
    }
    let (objective, blocks) = best.expect("at least one partition");
    Ok(Grouping { blocks, objective, trace: vec![objective] })
}

/// Pairwise `Î_α` between all component pairs.
pub fn pairwise_mi(ics: &PointSet, settings: &EstimatorSettings) -> Result<DMatrix<f64>> {
    let dm = ics.dim();
    let pairs: Vec<(usize, usize)> = (0..dm).flat_map(|i| ((i + 1)..dm).map(move |j| (i, j))).collect();
    if let Some(&(i, j)) = pairs.first() {
        // resolve γ once before fanning out
        renyi_mi(&ics.select_columns(&[i, j])?, settings)?;
    }
    let values = pairs
        .par_iter()
        .map(|&(i, j)| Ok(renyi_mi(&ics.select_columns(&[i, j])?, settings)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = DMatrix::zeros(dm, dm);
    for (&(i, j), v) in pairs.iter().zip(values) {
        out[(i, j)] = v;
        out[(j, i)] = v;
    }
    Ok(out)
}

/// Groups the `d·m` columns of `ics` into `m` blocks of `d`, maximizing
/// `Σ_j Î_α(block_j)`.
pub fn group_components(ics: &PointSet, d: usize, m: usize, settings: &EstimatorSettings) -> Result<Grouping> {
    let dm = ics.dim();
    check_shape(dm, d, m)?;
    let block_mi = |block: &[usize]| -> Result<f64> { Ok(renyi_mi(&ics.select_columns(block)?, settings)?.value) };
    if m == 1 {
        let all: Vec<usize> = (0..dm).collect();
        let objective = block_mi(&all)?;
        return Ok(Grouping { blocks: vec![all], objective, trace: vec![objective] });
    }
    let pairwise = if d >= 2 { pairwise_mi(ics, settings)? } else { DMatrix::zeros(dm, dm) };
    search_partition(dm, d, &pairwise, block_mi)
}

/// `m × m` matrix of Frobenius norms of the `d × d` blocks of `g`.
pub fn block_norms(g: &DMatrix<f64>, d: usize, m: usize) -> Result<DMatrix<f64>> {
    if g.nrows() != d * m || g.ncols() != d * m {
        return Err(Error::DimensionMismatch { expected: d * m, got: if g.nrows() != d * m { g.nrows() } else { g.ncols() } });
    }
    Ok(DMatrix::from_fn(m, m, |a, b| g.view((a * d, b * d), (d, d)).norm()))
}

/// Amari index of the collapsed block-norm matrix, normalized to `[0, 1]`;
/// zero exactly when `g` is a scaled block permutation.
pub fn amari_block_index(g: &DMatrix<f64>, d: usize, m: usize) -> Result<f64> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidParameter("block size and count must be positive".into()));
    }
    let b = block_norms(g, d, m)?;
    if m == 1 {
        return Ok(0.0);
    }
    let ratio = |sum: f64, max: f64| if max > 0.0 { sum / max - 1.0 } else { (m - 1) as f64 };
    let rows: f64 = (0..m)
        .map(|i| ratio(b.row(i).sum(), b.row(i).max()))
        .sum();
    let cols: f64 = (0..m)
        .map(|j| ratio(b.column(j).sum(), b.column(j).max()))
        .sum();
    Ok((rows + cols) / (2.0 * m as f64 * (m as f64 - 1.0)))
}

/// An ISA instance: observations `X = A S` of `m` independent `d`-dimensional
/// sources.
#[derive(Debug, Clone)]
pub struct IsaProblem {
    pub observations: PointSet,
    pub subspace_dim: usize,
    pub num_sources: usize,
    pub true_mixing: Option<DMatrix<f64>>,
}

impl IsaProblem {
    pub fn validate(&self) -> Result<()> {
        let q = self.observations.dim();
        if self.subspace_dim == 0 || self.num_sources < 2 {
            return Err(Error::InvalidParameter("need subspace_dim >= 1 and num_sources >= 2".into()));
        }
        if q < self.subspace_dim * self.num_sources {
            return Err(Error::InvalidParameter(format!(
                "{q} observed columns cannot carry {} x {} sources",
                self.num_sources, self.subspace_dim
            )));
        }
        if let Some(a) = &self.true_mixing {
            if a.nrows() != q || a.ncols() != self.subspace_dim * self.num_sources {
                return Err(Error::DimensionMismatch { expected: q, got: a.nrows() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IsaSolution {
    /// `W = P · W_ICA · W_white`, `dm × q`.
    pub separation: DMatrix<f64>,
    pub grouping: Grouping,
    pub objective: f64,
    /// `W · A` when the true mixing is known.
    pub global: Option<DMatrix<f64>>,
    pub score: Option<f64>,
    pub ica_iterations: usize,
    pub warnings: Vec<String>,
}

impl IsaSolution {
    pub fn block_norms(&self, d: usize, m: usize) -> Option<DMatrix<f64>> {
        self.global.as_ref().and_then(|g| block_norms(g, d, m).ok())
    }
}

/// Whitening (projected to `d·m` dimensions), FastICA, then grouping.
pub fn solve_isa(problem: &IsaProblem, settings: &EstimatorSettings, seed: u64) -> Result<IsaSolution> {
    problem.validate()?;
    let (d, m) = (problem.subspace_dim, problem.num_sources);
    let dm = d * m;
    let white = whiten_to(&problem.observations, dm)?;
    let ica = fastica(&white.data, seed);
    let ics = from_matrix(&(to_matrix(&white.data) * ica.unmixing.transpose()))?;
    let grouping = group_components(&ics, d, m, settings)?;
    let order: Vec<usize> = grouping.blocks.iter().flatten().copied().collect();
    let unmix = &ica.unmixing * &white.matrix;
    let separation = DMatrix::from_rows(&order.iter().map(|&i| unmix.row(i).into_owned()).collect::<Vec<_>>());
    let global = problem.true_mixing.as_ref().map(|a| &separation * a);
    let score = global.as_ref().map(|g| amari_block_index(g, d, m)).transpose()?;
    let mut warnings: Vec<String> = ica.warning.into_iter().collect();
    warnings.extend(settings.mi_warnings(d));
    Ok(IsaSolution {
        separation,
        objective: grouping.objective,
        grouping,
        global,
        score,
        ica_iterations: ica.iterations,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{sample, DistributionSpec};

    fn uniform_sources(n: usize, d: usize, seed: u64) -> PointSet {
        sample(&DistributionSpec::uniform_cube(d, 1.0), n, seed).unwrap()
    }

    #[test]
    fn whitening_identity_covariance() {
        let spec = DistributionSpec::RandomGaussian { d: 4, condition_cap: 50.0, cov_seed: 2 };
        let ps = sample(&spec, 3000, 1).unwrap();
        let (w, _) = whiten(&ps).unwrap();
        assert!((covariance(&w) - DMatrix::<f64>::identity(4, 4)).amax() < 1e-8);
        let means: Vec<f64> = (0..4).map(|a| w.column(a).iter().sum::<f64>() / 3000.0).collect();
        assert!(means.iter().all(|m| m.abs() < 1e-10));
    }

    #[test]
    fn whitening_white_data_is_nearly_identity_map() {
        let (w0, _) = whiten(&uniform_sources(5000, 3, 3)).unwrap();
        let (w1, mat) = whiten(&w0).unwrap();
        assert!((mat - DMatrix::<f64>::identity(3, 3)).amax() < 1e-8);
        assert!(w1.as_flat().iter().zip(w0.as_flat()).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn whitening_is_scale_free() {
        let ps = uniform_sources(1000, 3, 4);
        let (a, _) = whiten(&ps).unwrap();
        let (b, _) = whiten(&ps.scaled(3.0).unwrap()).unwrap();
        assert!(a.as_flat().iter().zip(b.as_flat()).all(|(x, y)| (x - y).abs() < 1e-8));
    }

    #[test]
    fn singular_covariance_is_rejected() {
        let ps = PointSet::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]]).unwrap();
        assert!(matches!(whiten(&ps), Err(Error::SingularCovariance)));
    }

    fn is_signed_permutation(g: &DMatrix<f64>, tol: f64) -> bool {
        let m = g.nrows();
        (0..m).all(|i| {
            let row = g.row(i).map(f64::abs);
            let big = row.iter().filter(|&&v| (v - 1.0).abs() < tol).count();
            let small = row.iter().filter(|&&v| v < tol).count();
            big == 1 && small == m - 1
        })
    }

    #[test]
    fn fastica_unmixes_rotated_uniforms() {
        let s = uniform_sources(4000, 2, 5);
        let (s_white, _) = whiten(&s).unwrap();
        let th = 0.6f64;
        let rot = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let x = crate::samplers::mix(&s_white, &rot).unwrap();
        let res = fastica(&x, 1);
        assert!(res.converged);
        assert!(is_signed_permutation(&(&res.unmixing * &rot), 0.05), "{}", &res.unmixing * &rot);
    }

    #[test]
    fn fastica_identity_mixing() {
        let (s, _) = whiten(&uniform_sources(4000, 3, 6)).unwrap();
        let res = fastica(&s, 2);
        assert!(is_signed_permutation(&res.unmixing, 0.05));
        let wwt = &res.unmixing * res.unmixing.transpose();
        assert!((wwt - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn fastica_gaussian_does_not_converge() {
        let spec = DistributionSpec::gaussian(vec![0.0; 4], &DMatrix::identity(4, 4));
        let (x, _) = whiten(&sample(&spec, 2000, 7).unwrap()).unwrap();
        let res = fastica_with(&x, 3, FastIcaConfig { max_iter: 50, tol: 1e-6 });
        assert!(!res.converged);
        assert!(res.warning.is_some());
    }

    #[test]
    fn partition_counts() {
        assert_eq!(all_partitions(6, 2).unwrap().len(), 15);
        assert_eq!(all_partitions(6, 3).unwrap().len(), 10);
        assert_eq!(all_partitions(4, 1).unwrap().len(), 1);
        assert_eq!(all_partitions(8, 2).unwrap().len(), 105);
        assert!(all_partitions(5, 2).is_err());
    }

    fn additive_score(pair: &DMatrix<f64>) -> impl FnMut(&[usize]) -> Result<f64> + '_ {
        move |b: &[usize]| {
            let mut s = 0.0;
            for i in 0..b.len() {
                for j in (i + 1)..b.len() {
                    s += pair[(b[i], b[j])];
                }
            }
            Ok(s)
        }
    }

    #[test]
    fn greedy_swap_matches_exhaustive_on_random_scores() {
        let mut g = rng::from_seed(11);
        let mut hits = 0;
        for _ in 0..50 {
            let mut pair = DMatrix::from_fn(6, 6, |_, _| g.random::<f64>());
            pair = (&pair + pair.transpose()) * 0.5;
            let greedy = search_partition(6, 2, &pair, additive_score(&pair)).unwrap();
            let best = exhaustive_partition(6, 2, additive_score(&pair)).unwrap();
            assert!(greedy.objective <= best.objective + 1e-12);
            if (greedy.objective - best.objective).abs() < 1e-12 {
                hits += 1;
            }
            assert!(greedy.trace.windows(2).all(|w| w[1] > w[0]));
        }
        assert!(hits >= 45, "hits = {hits}");
    }

    #[test]
    fn amari_index_values() {
        let mut g = DMatrix::zeros(4, 4);
        // block permutation: source block 0 -> output block 1 and vice versa
        g.view_mut((0, 2), (2, 2)).copy_from(&DMatrix::from_row_slice(2, 2, &[0.3, 1.0, -2.0, 0.1]));
        g.view_mut((2, 0), (2, 2)).copy_from(&(DMatrix::<f64>::identity(2, 2) * 5.0));
        assert!(amari_block_index(&g, 2, 2).unwrap().abs() < 1e-12);
        assert!((amari_block_index(&DMatrix::from_element(6, 6, 1.0), 2, 3).unwrap() - 1.0).abs() < 1e-12);
        let noisy = DMatrix::<f64>::identity(6, 6).add_scalar(0.01);
        assert!(amari_block_index(&noisy, 2, 3).unwrap() < 0.05);
        assert!(amari_block_index(&DMatrix::identity(5, 5), 2, 3).is_err());
    }

    #[test]
    fn shape_errors() {
        let ps = uniform_sources(100, 5, 1);
        let st = EstimatorSettings::new(0.7, crate::NeighborSpec::new([1]).unwrap(), crate::estimators::GammaSource::Fixed(1.0)).unwrap();
        assert!(group_components(&ps, 2, 2, &st).is_err());
    }
}
