//! Seeded synthetic distributions for calibration, rate experiments and ISA.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::closed_form;
use crate::geometry::PointSet;
use crate::rng;

/// A distribution that [`sample`] can draw from. Serialized with a `kind` tag,
/// e.g. `{"kind": "uniform_cube", "d": 3, "side": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Uniform on `[0, side]^d`.
    UniformCube { d: usize, side: f64 },
    Gaussian { mean: Vec<f64>, covariance: Vec<Vec<f64>> },
    /// Zero-mean Gaussian whose covariance is `random_covariance(d, condition_cap, cov_seed)`.
    RandomGaussian { d: usize, condition_cap: f64, cov_seed: u64 },
    /// Uniform along one of the fixed 3-D polylines, `shape_id ∈ 0..6`.
    Wireframe3d { shape_id: usize },
    /// The `(x, y)` projection of `wireframe3d(shape_id)`.
    Wireframe2d { shape_id: usize },
    /// Independent components, concatenated in order.
    Product { components: Vec<DistributionSpec> },
}

impl DistributionSpec {
    pub fn uniform_cube(d: usize, side: f64) -> Self {
        DistributionSpec::UniformCube { d, side }
    }

    pub fn gaussian(mean: Vec<f64>, covariance: &DMatrix<f64>) -> Self {
        let covariance = (0..covariance.nrows())
            .map(|i| covariance.row(i).iter().copied().collect())
            .collect();
        DistributionSpec::Gaussian { mean, covariance }
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::UniformCube { d, .. } | DistributionSpec::RandomGaussian { d, .. } => *d,
            DistributionSpec::Gaussian { mean, .. } => mean.len(),
            DistributionSpec::Wireframe3d { .. } => 3,
            DistributionSpec::Wireframe2d { .. } => 2,
            DistributionSpec::Product { components } => components.iter().map(Self::dim).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::UniformCube { d, side } => {
                if *d == 0 || !(*side > 0.0 && side.is_finite()) {
                    return Err(Error::Config(format!("uniform_cube needs d >= 1 and side > 0, got d = {d}, side = {side}")));
                }
            }
            DistributionSpec::Gaussian { mean, covariance } => {
                gaussian_factor(mean, covariance)?;
            }
            DistributionSpec::RandomGaussian { d, condition_cap, .. } => {
                if *d == 0 || !(*condition_cap >= 1.0) {
                    return Err(Error::Config("random_gaussian needs d >= 1 and condition_cap >= 1".into()));
                }
            }
            DistributionSpec::Wireframe3d { shape_id } | DistributionSpec::Wireframe2d { shape_id } => {
                if *shape_id >= NUM_SHAPES {
                    return Err(Error::Config(format!("shape_id must be below {NUM_SHAPES}, got {shape_id}")));
                }
            }
            DistributionSpec::Product { components } => {
                if components.is_empty() {
                    return Err(Error::Config("product needs at least one component".into()));
                }
                components.iter().try_for_each(Self::validate)?;
            }
        }
        Ok(())
    }

    /// Covariance matrix for the Gaussian variants.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        match self {
            DistributionSpec::Gaussian { covariance, .. } => {
                let d = covariance.len();
                Some(DMatrix::from_fn(d, d, |i, j| covariance[i][j]))
            }
            DistributionSpec::RandomGaussian { d, condition_cap, cov_seed } => {
                Some(random_covariance(*d, *condition_cap, *cov_seed))
            }
            _ => None,
        }
    }

    /// Exact `H_α`, where a closed form exists.
    pub fn renyi_entropy(&self, alpha: f64) -> Option<f64> {
        match self {
            DistributionSpec::UniformCube { d, side } => Some(*d as f64 * side.ln()),
            DistributionSpec::Gaussian { .. } | DistributionSpec::RandomGaussian { .. } => {
                Some(closed_form::gaussian_renyi_entropy(&self.covariance()?, alpha))
            }
            DistributionSpec::Product { components } => {
                components.iter().map(|c| c.renyi_entropy(alpha)).sum()
            }
            _ => None,
        }
    }

    /// Exact `I_α` (dependence among all coordinates), where a closed form exists.
    pub fn renyi_mi(&self, alpha: f64) -> Option<f64> {
        match self {
            DistributionSpec::UniformCube { .. } => Some(0.0),
            DistributionSpec::Gaussian { .. } | DistributionSpec::RandomGaussian { .. } => {
                Some(closed_form::gaussian_renyi_mi(&self.covariance()?, alpha))
            }
            // the integrand factorizes over independent blocks
            DistributionSpec::Product { components } => components.iter().map(|c| c.renyi_mi(alpha)).sum(),
            _ => None,
        }
    }
}

/// Draws `n` i.i.d. points from `spec`; deterministic given `seed`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    spec.validate()?;
    let mut g = rng::from_seed(seed);
    let data = match spec {
        DistributionSpec::UniformCube { d, side } => {
            (0..n * d).map(|_| side * g.random::<f64>()).collect()
        }
        DistributionSpec::Gaussian { mean, covariance } => {
            let root = gaussian_factor(mean, covariance)?;
            gaussian_rows(mean, &root, n, &mut g)
        }
        DistributionSpec::RandomGaussian { d, .. } => {
            let cov = spec.covariance().expect("gaussian");
            let root = symmetric_sqrt(&cov)?;
            gaussian_rows(&vec![0.0; *d], &root, n, &mut g)
        }
        DistributionSpec::Wireframe3d { shape_id } => {
            let shape = wireframe_shape(*shape_id);
            (0..n).flat_map(|_| shape.draw(&mut g)).collect()
        }
        DistributionSpec::Wireframe2d { shape_id } => {
            let shape = wireframe_shape(*shape_id);
            (0..n).flat_map(|_| { let p = shape.draw(&mut g); [p[0], p[1]] }).collect()
        }
        DistributionSpec::Product { components } => {
            let parts = components
                .iter()
                .enumerate()
                .map(|(c, comp)| sample(comp, n, rng::derive_seed(seed, c as u64 + 1)))
                .collect::<Result<Vec<_>>>()?;
            let dim = spec.dim();
            let mut data = Vec::with_capacity(n * dim);
            for i in 0..n {
                for part in &parts {
                    data.extend_from_slice(part.point(i));
                }
            }
            data
        }
    };
    PointSet::from_flat(data, spec.dim())
}

fn gaussian_rows(mean: &[f64], root: &DMatrix<f64>, n: usize, g: &mut rng::Rng) -> Vec<f64> {
    let d = mean.len();
    let mut out = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z = DVector::from_fn(d, |_, _| g.sample::<f64, _>(StandardNormal));
        let x = root * z;
        out.extend(x.iter().zip(mean).map(|(v, m)| v + m));
    }
    out
}

fn gaussian_factor(mean: &[f64], covariance: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = mean.len();
    if d == 0 {
        return Err(Error::Config("gaussian needs a non-empty mean".into()));
    }
    if covariance.len() != d || covariance.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!("covariance must be {d} x {d}")));
    }
    let cov = DMatrix::from_fn(d, d, |i, j| covariance[i][j]);
    symmetric_sqrt(&cov)
}

/// Symmetric square root `Σ^{1/2}`; errors unless `Σ` is symmetric positive definite.
pub fn symmetric_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = spd_eigen(cov)?;
    let sqrt = eig.eigenvalues.map(f64::sqrt);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose())
}

pub(crate) fn spd_eigen(cov: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !cov.is_square() || cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    if (cov - cov.transpose()).amax() > 1e-10 * scale {
        return Err(Error::NotPositiveDefinite);
    }
    let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > hi * 1e-14 && lo > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(eig)
}

/// A random symmetric positive-definite matrix with condition number at most
/// `condition_cap`: an orthogonal basis from the QR factorization of a
/// Gaussian matrix, with eigenvalues log-uniform on `[1, condition_cap]`.
pub fn random_covariance(d: usize, condition_cap: f64, seed: u64) -> DMatrix<f64> {
    let d = d.max(1);
    let cap = condition_cap.max(1.0);
    let mut g = rng::from_seed(seed);
    let gauss = DMatrix::from_fn(d, d, |_, _| g.sample::<f64, _>(StandardNormal));
    let q = gauss.qr().q();
    let eig = DVector::from_fn(d, |_, _| (g.random::<f64>() * cap.ln()).exp());
    let m = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// `X = S Aᵀ`: every source row `s` becomes the observation `A s`.
pub fn mix(sources: &PointSet, a: &DMatrix<f64>) -> Result<PointSet> {
    if a.ncols() != sources.dim() {
        return Err(Error::DimensionMismatch { expected: sources.dim(), got: a.ncols() });
    }
    if a.nrows() < a.ncols() || numerical_rank(a) < a.ncols() {
        return Err(Error::RankDeficient);
    }
    let mut out = Vec::with_capacity(sources.len() * a.nrows());
    for s in sources.iter() {
        for r in 0..a.nrows() {
            out.push(a.row(r).iter().zip(s).map(|(x, y)| x * y).sum());
        }
    }
    PointSet::from_flat(out, a.nrows())
}

pub(crate) fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    let tol = top * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    sv.iter().filter(|&&s| s > tol).count()
}

/// A random well-conditioned square mixing matrix.
pub fn random_mixing(q: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng::from_seed(seed);
    loop {
        let a = DMatrix::from_fn(q, q, |_, _| g.sample::<f64, _>(StandardNormal));
        let sv = a.clone().svd(false, false).singular_values;
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo > 0.0 && hi / lo < 100.0 {
            return a;
        }
    }
}

pub const NUM_SHAPES: usize = 6;

/// A union of 3-D line segments, sampled uniformly by arc length.
#[derive(Debug, Clone)]
pub struct Wireframe {
    pub segments: Vec<([f64; 3], [f64; 3])>,
    cumulative: Vec<f64>,
}

impl Wireframe {
    fn from_segments(segments: Vec<([f64; 3], [f64; 3])>) -> Self {
        let mut acc = 0.0;
        let cumulative = segments
            .iter()
            .map(|(a, b)| {
                acc += dist3(a, b);
                acc
            })
            .collect();
        Self { segments, cumulative }
    }

    fn polyline(vertices: &[[f64; 3]], closed: bool) -> Vec<([f64; 3], [f64; 3])> {
        let mut segs: Vec<_> = vertices.windows(2).map(|w| (w[0], w[1])).collect();
        if closed {
            segs.push((vertices[vertices.len() - 1], vertices[0]));
        }
        segs
    }

    fn draw(&self, g: &mut rng::Rng) -> [f64; 3] {
        let total = *self.cumulative.last().expect("segments");
        let u = g.random::<f64>() * total;
        let s = self.cumulative.partition_point(|&c| c <= u).min(self.segments.len() - 1);
        let t = g.random::<f64>();
        let (a, b) = self.segments[s];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    }

    /// Distance from `x` to the nearest segment.
    pub fn distance(&self, x: &[f64; 3]) -> f64 {
        self.segments
            .iter()
            .map(|(a, b)| {
                let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let ax = [x[0] - a[0], x[1] - a[1], x[2] - a[2]];
                let len2 = ab.iter().map(|v| v * v).sum::<f64>();
                let t = (ab.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0);
                dist3(x, &[a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// The fixed wireframe shapes: 0 spiral, 1 trefoil, 2 cube edges, 3 star,
/// 4 circle pair, 5 zigzag.
pub fn wireframe_shape(shape_id: usize) -> Wireframe {
    use std::f64::consts::TAU;
    let segments = match shape_id {
        0 => {
            let v: Vec<[f64; 3]> = (0..=48)
                .map(|i| {
                    let t = i as f64 / 48.0;
                    let r = 0.3 + 0.7 * t;
                    [r * (2.0 * TAU * t).cos(), r * (2.0 * TAU * t).sin(), 2.0 * t - 1.0]
                })
                .collect();
            Wireframe::polyline(&v, false)
        }
        1 => {
            let v: Vec<[f64; 3]> = (0..72)
                .map(|i| {
                    let t = TAU * i as f64 / 72.0;
                    [
                        ((t).sin() + 2.0 * (2.0 * t).sin()) / 3.0,
                        ((t).cos() - 2.0 * (2.0 * t).cos()) / 3.0,
                        -(3.0 * t).sin() / 3.0,
                    ]
                })
                .collect();
            Wireframe::polyline(&v, true)
        }
        2 => {
            let mut segs = Vec::new();
            for a in 0..8usize {
                for b in (a + 1)..8 {
                    if (a ^ b).count_ones() == 1 {
                        let c = |m: usize| [(m & 1) as f64, ((m >> 1) & 1) as f64, ((m >> 2) & 1) as f64];
                        segs.push((c(a), c(b)));
                    }
                }
            }
            segs
        }
        3 => {
            let v: Vec<[f64; 3]> = (0..10)
                .map(|i| {
                    let r = if i % 2 == 0 { 1.0 } else { 0.4 };
                    let t = TAU * i as f64 / 10.0;
                    [r * t.cos(), r * t.sin(), if i % 2 == 0 { 0.5 } else { -0.5 }]
                })
                .collect();
            Wireframe::polyline(&v, true)
        }
        4 => {
            let a: Vec<[f64; 3]> =
                (0..48).map(|i| { let t = TAU * i as f64 / 48.0; [t.cos(), t.sin(), 0.0] }).collect();
            let b: Vec<[f64; 3]> =
                (0..48).map(|i| { let t = TAU * i as f64 / 48.0; [1.0 + t.cos(), 0.0, t.sin()] }).collect();
            let mut segs = Wireframe::polyline(&a, true);
            segs.extend(Wireframe::polyline(&b, true));
            segs
        }
        5 => {
            let v: Vec<[f64; 3]> = (0..9)
                .map(|i| {
                    let x = i as f64 / 4.0 - 1.0;
                    [x, if i % 2 == 0 { 1.0 } else { -1.0 }, if (i / 2) % 2 == 0 { 0.5 } else { -0.5 }]
                })
                .collect();
            Wireframe::polyline(&v, false)
        }
        _ => panic!("shape_id must be below {NUM_SHAPES}"),
    };
    Wireframe::from_segments(segments)
}
