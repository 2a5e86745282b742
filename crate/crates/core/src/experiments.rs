//! Drivers for the convergence-rate study and the ISA benchmark.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::calibration::CalibrationSettings;
use crate::estimators::{histogram_entropy, histogram_mi, renyi_entropy, renyi_mi, EstimatorSettings, GammaSource};
use crate::geometry::{NeighborSpec, PointSet};
use crate::isa::{solve_isa, IsaProblem};
use crate::samplers::{mix, random_mixing, sample, DistributionSpec};
use crate::{rng, TOOL_VERSION};

/// Which information quantity a rate experiment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    #[default]
    MutualInformation,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSetup {
    pub name: String,
    pub distribution: DistributionSpec,
    /// Replaces the Monte-Carlo calibration size for this setup when `γ` is
    /// calibrated on the fly; useful in high dimension, where exact k-NN on
    /// the default calibration sample is slow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationBudget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationBudget {
    pub n_cal: usize,
    pub reps: usize,
}

impl RateSetup {
    pub fn new(name: &str, distribution: DistributionSpec) -> Self {
        Self { name: name.into(), distribution, calibration: None }
    }

    fn gamma_source(&self, base: &GammaSource) -> GammaSource {
        match (base, self.calibration) {
            (GammaSource::Calibrate(s), Some(b)) => {
                GammaSource::Calibrate(CalibrationSettings { n_cal: b.n_cal, reps: b.reps, ..s.clone() })
            }
            _ => base.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub setups: Vec<RateSetup>,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_rate_alpha")]
    pub alpha: f64,
    pub neighbor_sets: Vec<NeighborSpec>,
    #[serde(default = "default_true")]
    pub histogram: bool,
    #[serde(default)]
    pub quantity: Quantity,
}

fn default_runs() -> usize {
    25
}

fn default_rate_alpha() -> f64 {
    0.7
}

fn default_true() -> bool {
    true
}

impl Default for RateConfig {
    /// 3-D uniform, 3-D Gaussian and 20-D Gaussian, `n = 256 … 4096`,
    /// 25 runs, `α = 0.7`, `S ∈ {{3}, {1,2,3}}`, with the histogram baseline.
    fn default() -> Self {
        Self {
            setups: vec![
                RateSetup::new("uniform3d", DistributionSpec::uniform_cube(3, 1.0)),
                RateSetup::new("gaussian3d", DistributionSpec::RandomGaussian { d: 3, condition_cap: 10.0, cov_seed: 1 }),
                RateSetup {
                    calibration: Some(CalibrationBudget { n_cal: 10_000, reps: 5 }),
                    ..RateSetup::new("gaussian20d", DistributionSpec::RandomGaussian { d: 20, condition_cap: 10.0, cov_seed: 2 })
                },
            ],
            n_grid: vec![256, 512, 1024, 2048, 4096],
            runs: default_runs(),
            alpha: default_rate_alpha(),
            neighbor_sets: vec![
                NeighborSpec::singleton(3).expect("valid"),
                NeighborSpec::first_k(3).expect("valid"),
            ],
            histogram: true,
            quantity: Quantity::MutualInformation,
        }
    }
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.setups.is_empty() || self.n_grid.is_empty() || self.runs == 0 || self.neighbor_sets.is_empty() {
            return Err(Error::Config("rate experiment needs setups, sample sizes, runs and neighbor sets".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let k = self.neighbor_sets.iter().map(NeighborSpec::k).max().unwrap_or(1);
        if let Some(&n) = self.n_grid.iter().find(|&&n| n <= k) {
            return Err(Error::Config(format!("sample size {n} must exceed the largest neighbor index {k}")));
        }
        for s in &self.setups {
            s.distribution.validate()?;
            if self.truth(&s.distribution).is_none() {
                return Err(Error::Config(format!("setup {} has no closed-form truth", s.name)));
            }
        }
        Ok(())
    }

    fn truth(&self, dist: &DistributionSpec) -> Option<f64> {
        match self.quantity {
            Quantity::MutualInformation => dist.renyi_mi(self.alpha),
            Quantity::Entropy => dist.renyi_entropy(self.alpha),
        }
    }
}

/// One line of the long-format rate CSV. Note rows carry no estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub setup: String,
    pub n: Option<usize>,
    pub run: Option<usize>,
    pub estimator: String,
    pub estimate: Option<f64>,
    pub truth: f64,
    pub abs_error: Option<f64>,
    pub note: String,
}

/// Mean absolute error per `(setup, estimator, n)`, with the least-squares
/// slope of `log error` against `log n` and the reference slope of the
/// high-probability rate bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummaryRow {
    pub setup: String,
    pub estimator: String,
    pub n: usize,
    pub runs: usize,
    pub mean_abs_error: f64,
    pub std_error: f64,
    pub fitted_slope: f64,
    pub theoretical_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    pub tool_version: String,
    pub seed: u64,
    pub config: RateConfig,
    pub rows: Vec<RateRow>,
    pub summary: Vec<RateSummaryRow>,
}

impl RateResult {
    pub fn summary_for(&self, setup: &str, estimator: &str) -> Vec<&RateSummaryRow> {
        self.summary.iter().filter(|r| r.setup == setup && r.estimator == estimator).collect()
    }
}

/// Exponent `r` of the bound `|Î_α − I_α| = O(n^{−r})` for the copula
/// estimator, `p = d (1 − α)`; `None` outside `d ≥ 3`, `α ∈ (1/2, 1)`.
pub fn theoretical_rate_exponent(d: usize, alpha: f64) -> Option<f64> {
    if d < 3 || !(alpha > 0.5 && alpha < 1.0) {
        return None;
    }
    let (d, p) = (d as f64, d as f64 * (1.0 - alpha));
    let bias = if p < d - 1.0 { (d - p) / (d * (2.0 * d - p)) } else { (d - p) / (d * (d + 1.0)) };
    let variance = if p <= 1.0 { p / 2.0 - p / d } else { 0.5 - p / d };
    Some(bias.min(variance))
}

/// Estimator label used in rate output, e.g. `nn_1_2_3`.
pub fn nn_label(spec: &NeighborSpec) -> String {
    let parts: Vec<String> = spec.indices().iter().map(|i| i.to_string()).collect();
    format!("nn_{}", parts.join("_"))
}

pub const HISTOGRAM_LABEL: &str = "histogram";

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

/// Runs every `(setup, n, run)` cell; samples are shared across estimators.
pub fn run_rate_experiment(config: &RateConfig, gamma: &GammaSource, seed: u64) -> Result<RateResult> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (si, setup) in config.setups.iter().enumerate() {
        let d = setup.distribution.dim();
        let truth = config.truth(&setup.distribution).expect("validated");
        let source = setup.gamma_source(gamma);
        let settings: Vec<EstimatorSettings> = config
            .neighbor_sets
            .iter()
            .map(|s| EstimatorSettings::new(config.alpha, s.clone(), source.clone()))
            .collect::<Result<_>>()?;
        for st in &settings {
            // resolve γ up front so calibration never runs inside the parallel loop
            st.gamma.resolve(d, st.power(d), &st.spec)?;
        }
        let cells: Vec<(usize, usize)> =
            (0..config.n_grid.len()).flat_map(|ni| (0..config.runs).map(move |r| (ni, r))).collect();
        let per_cell = cells
            .par_iter()
            .map(|&(ni, run)| -> Result<(Vec<f64>, Hist)> {
                let n = config.n_grid[ni];
                let cell_seed = rng::derive_seed(rng::derive_seed(seed, si as u64), ni as u64);
                let ps = sample(&setup.distribution, n, rng::derive_seed(cell_seed, run as u64))?;
                let nn = settings
                    .iter()
                    .map(|st| estimate(&ps, st, config.quantity))
                    .collect::<Result<Vec<f64>>>()?;
                let hist = if !config.histogram {
                    Hist::Off
                } else {
                    match histogram_estimate(&ps, config.alpha, config.quantity) {
                        Ok(v) => Hist::Value(v),
                        Err(e @ Error::HistogramInfeasible(_)) => Hist::Infeasible(e.to_string()),
                        Err(e) => return Err(e),
                    }
                };
                Ok((nn, hist))
            })
            .collect::<Result<Vec<_>>>()?;

        let infeasible = per_cell.iter().find_map(|(_, h)| match h {
            Hist::Infeasible(msg) => Some(msg.clone()),
            _ => None,
        });
        let mut labels: Vec<String> = config.neighbor_sets.iter().map(nn_label).collect();
        if config.histogram && infeasible.is_none() {
            labels.push(HISTOGRAM_LABEL.into());
        }
        let mut errors: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); config.n_grid.len()]; labels.len()];
        for (&(ni, run), (nn, hist)) in cells.iter().zip(&per_cell) {
            let mut values: Vec<f64> = nn.clone();
            if let (Hist::Value(v), true) = (hist, labels.len() > nn.len()) {
                values.push(*v);
            }
            for (li, v) in values.into_iter().enumerate() {
                let err = (v - truth).abs();
                errors[li][ni].push(err);
                rows.push(RateRow {
                    setup: setup.name.clone(),
                    n: Some(config.n_grid[ni]),
                    run: Some(run),
                    estimator: labels[li].clone(),
                    estimate: Some(v),
                    truth,
                    abs_error: Some(err),
                    note: String::new(),
                });
            }
        }
        if let Some(msg) = infeasible {
            rows.push(RateRow {
                setup: setup.name.clone(),
                n: None,
                run: None,
                estimator: HISTOGRAM_LABEL.into(),
                estimate: None,
                truth,
                abs_error: None,
                note: format!("histogram baseline not applicable: {msg}"),
            });
        }
        let reference = match config.quantity {
            Quantity::MutualInformation => theoretical_rate_exponent(d, config.alpha).map(|r| -r),
            Quantity::Entropy => None,
        };
        for (li, label) in labels.iter().enumerate() {
            let means: Vec<(usize, f64, f64)> = errors[li]
                .iter()
                .zip(&config.n_grid)
                .map(|(e, &n)| {
                    let (mean, se) = crate::calibration::mean_and_std_error(e);
                    (n, mean, se)
                })
                .collect();
            let fit: Vec<(f64, f64)> = means.iter().map(|&(n, m, _)| ((n as f64).ln(), m.ln())).collect();
            let fitted_slope = least_squares_slope(&fit);
            for (n, mean, se) in means {
                summary.push(RateSummaryRow {
                    setup: setup.name.clone(),
                    estimator: label.clone(),
                    n,
                    runs: config.runs,
                    mean_abs_error: mean,
                    std_error: se,
                    fitted_slope,
                    theoretical_slope: if label == HISTOGRAM_LABEL { None } else { reference },
                });
            }
        }
    }
    Ok(RateResult { tool_version: TOOL_VERSION.into(), seed, config: config.clone(), rows, summary })
}

enum Hist {
    Off,
    Value(f64),
    Infeasible(String),
}

fn estimate(ps: &PointSet, st: &EstimatorSettings, q: Quantity) -> Result<f64> {
    Ok(match q {
        Quantity::MutualInformation => renyi_mi(ps, st)?.value,
        Quantity::Entropy => renyi_entropy(ps, st)?.value,
    })
}

fn histogram_estimate(ps: &PointSet, alpha: f64, q: Quantity) -> Result<f64> {
    Ok(match q {
        Quantity::MutualInformation => histogram_mi(ps, alpha)?.value,
        Quantity::Entropy => histogram_entropy(ps, alpha)?.value,
    })
}

/// How the synthetic sources are mixed into observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingKind {
    #[default]
    Random,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsaConfig {
    pub subspace_dim: usize,
    pub num_sources: usize,
    pub n: usize,
    pub alpha: f64,
    pub neighbors: NeighborSpec,
    /// One distribution per source, each of dimension `subspace_dim`.
    pub sources: Vec<DistributionSpec>,
    /// Observed dimension `q ≥ d·m`; defaults to `d·m`.
    #[serde(default)]
    pub observed_dim: Option<usize>,
    #[serde(default)]
    pub mixing: MixingKind,
}

impl IsaConfig {
    /// Three 2-D sources (planar projections of wireframe shapes), `n = 2000`.
    pub fn desk() -> Self {
        Self {
            subspace_dim: 2,
            num_sources: 3,
            n: 2000,
            alpha: 0.99,
            neighbors: NeighborSpec::first_k(3).expect("valid"),
            sources: (0..3).map(|shape_id| DistributionSpec::Wireframe2d { shape_id }).collect(),
            observed_dim: None,
            mixing: MixingKind::Random,
        }
    }

    /// Six 3-D wireframe sources observed in 18 dimensions, `n = 2000`.
    pub fn paper_scale() -> Self {
        Self {
            subspace_dim: 3,
            num_sources: 6,
            n: 2000,
            alpha: 0.99,
            neighbors: NeighborSpec::first_k(3).expect("valid"),
            sources: (0..6).map(|shape_id| DistributionSpec::Wireframe3d { shape_id }).collect(),
            observed_dim: Some(18),
            mixing: MixingKind::Random,
        }
    }

    pub fn observed(&self) -> usize {
        self.observed_dim.unwrap_or(self.subspace_dim * self.num_sources)
    }

    pub fn validate(&self) -> Result<()> {
        let dm = self.subspace_dim * self.num_sources;
        if self.subspace_dim == 0 || self.num_sources < 2 {
            return Err(Error::Config("need subspace_dim >= 1 and num_sources >= 2".into()));
        }
        if self.sources.len() != self.num_sources {
            return Err(Error::Config(format!("{} sources listed for num_sources = {}", self.sources.len(), self.num_sources)));
        }
        if let Some(s) = self.sources.iter().find(|s| s.dim() != self.subspace_dim) {
            return Err(Error::Config(format!("source of dimension {} in subspaces of dimension {}", s.dim(), self.subspace_dim)));
        }
        for s in &self.sources {
            s.validate()?;
        }
        if self.observed() < dm {
            return Err(Error::Config(format!("observed_dim {} is below d*m = {dm}", self.observed())));
        }
        if self.mixing == MixingKind::Identity && self.observed() != dm {
            return Err(Error::Config("identity mixing needs observed_dim = d*m".into()));
        }
        if self.n <= self.neighbors.k() {
            return Err(Error::Config(format!("n = {} must exceed the largest neighbor index", self.n)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsaOutcome {
    pub tool_version: String,
    pub seed: u64,
    pub config: IsaConfig,
    pub blocks: Vec<Vec<usize>>,
    pub objective: f64,
    pub amari_block_index: Option<f64>,
    /// `m × m` Frobenius norms of the blocks of `W A`.
    pub block_norms: Option<Vec<Vec<f64>>>,
    pub separation: Vec<Vec<f64>>,
    pub ica_iterations: usize,
    pub warnings: Vec<String>,
}

/// Samples the sources, mixes them, and runs the ISA pipeline.
pub fn run_isa_experiment(config: &IsaConfig, gamma: &GammaSource, seed: u64) -> Result<IsaOutcome> {
    config.validate()?;
    let (d, m) = (config.subspace_dim, config.num_sources);
    let dm = d * m;
    let q = config.observed();
    let sources = sample(
        &DistributionSpec::Product { components: config.sources.clone() },
        config.n,
        rng::derive_seed(seed, 1),
    )?;
    let a = match config.mixing {
        MixingKind::Identity => DMatrix::identity(dm, dm),
        MixingKind::Random => random_mixing(q, rng::derive_seed(seed, 2)).columns(0, dm).into_owned(),
    };
    let observations = mix(&sources, &a)?;
    let settings = EstimatorSettings::new(config.alpha, config.neighbors.clone(), gamma.clone())?;
    let problem = IsaProblem { observations, subspace_dim: d, num_sources: m, true_mixing: Some(a) };
    let sol = solve_isa(&problem, &settings, rng::derive_seed(seed, 3))?;
    Ok(IsaOutcome {
        tool_version: TOOL_VERSION.into(),
        seed,
        config: config.clone(),
        block_norms: sol.block_norms(d, m).as_ref().map(matrix_rows),
        blocks: sol.grouping.blocks.clone(),
        objective: sol.objective,
        amari_block_index: sol.score,
        separation: matrix_rows(&sol.separation),
        ica_iterations: sol.ica_iterations,
        warnings: sol.warnings,
    })
}
