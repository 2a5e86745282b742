//! Rényi entropy and mutual information estimators.
//!
//! [`renyi_entropy`] evaluates `log(L_p / (γ n^{1−p/d})) / (1 − α)` on the raw
//! sample with `p = d(1 − α)`. [`renyi_mi`] is minus that estimate on the
//! empirical copula. The histogram plug-in ([`histogram_entropy`]) is the
//! comparison baseline of the rate experiment.

pub mod closed_form;
mod copula;
mod histogram;

use serde::{Deserialize, Serialize};

use crate::calibration::{calibrated_gamma, gamma_analytic, CalibrationSettings, GammaEstimate};
use crate::error::{Error, Result};
use crate::geometry::{lp_functional, Metric, NeighborSpec, PointSet};
use crate::TOOL_VERSION;

pub use copula::empirical_copula;
pub use histogram::{histogram_entropy, histogram_mi, scott_bin_width, MAX_HISTOGRAM_CELLS};

/// Where the constant `γ` comes from, in order of precedence when the CLI
/// assembles one: a user value, then a cached or freshly computed Monte-Carlo
/// estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSource {
    /// Supplied by the caller.
    Fixed(f64),
    /// A specific Monte-Carlo estimate; must match `(d, p, S)` of the call.
    Estimate(GammaEstimate),
    /// Closed form, singleton `S` only.
    Analytic,
    /// Monte-Carlo calibration (through the cache file when one is configured).
    Calibrate(CalibrationSettings),
}

impl Default for GammaSource {
    fn default() -> Self {
        GammaSource::Calibrate(CalibrationSettings::default())
    }
}

/// `γ` as used by an estimate, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaInfo {
    pub value: f64,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cal: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

impl GammaInfo {
    fn from_estimate(e: &GammaEstimate) -> Self {
        Self {
            value: e.mean,
            source: "monte_carlo".into(),
            std_error: Some(e.std_error),
            n_cal: Some(e.key.n_cal),
            reps: Some(e.key.reps),
            seed: Some(e.seed),
            domain: Some(e.key.domain.to_string()),
        }
    }

    fn plain(value: f64, source: &str) -> Self {
        Self { value, source: source.into(), std_error: None, n_cal: None, reps: None, seed: None, domain: None }
    }
}

impl GammaSource {
    /// Resolves `γ(d, p, S)`.
    pub fn resolve(&self, d: usize, p: f64, spec: &NeighborSpec) -> Result<GammaInfo> {
        let info = match self {
            GammaSource::Fixed(v) => GammaInfo::plain(*v, "user"),
            GammaSource::Analytic => GammaInfo::plain(gamma_analytic(d, p, spec)?, "analytic"),
            GammaSource::Estimate(e) => {
                if e.key.d != d || e.key.p.to_bits() != p.to_bits() || &e.key.spec != spec {
                    return Err(Error::InvalidParameter(format!(
                        "supplied gamma was calibrated for d = {}, p = {}, S = {{{}}}, not d = {d}, p = {p}, S = {{{spec}}}",
                        e.key.d, e.key.p, e.key.spec
                    )));
                }
                GammaInfo::from_estimate(e)
            }
            GammaSource::Calibrate(settings) => GammaInfo::from_estimate(&calibrated_gamma(d, p, spec, settings)?),
        };
        if !(info.value > 0.0 && info.value.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", info.value)));
        }
        Ok(info)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSettings {
    pub alpha: f64,
    pub spec: NeighborSpec,
    pub gamma: GammaSource,
}

impl EstimatorSettings {
    pub fn new(alpha: f64, spec: NeighborSpec, gamma: GammaSource) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, spec, gamma })
    }

    /// `p = d (1 − α)`.
    pub fn power(&self, d: usize) -> f64 {
        d as f64 * (1.0 - self.alpha)
    }

    /// Warnings for mutual information outside the range where convergence
    /// of the copula estimator is guaranteed (`d ≥ 3`, `α ∈ (1/2, 1)`).
    pub fn mi_warnings(&self, d: usize) -> Vec<String> {
        let mut w = Vec::new();
        if d < 3 {
            w.push(format!("outside the MI convergence guarantee (d >= 3): d = {d}"));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            w.push(format!("outside the MI convergence guarantee (1/2 < alpha < 1): alpha = {}", self.alpha));
        }
        w
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: String,
    pub value: f64,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "S", skip_serializing_if = "Option::is_none")]
    pub spec: Option<NeighborSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaInfo>,
    pub warnings: Vec<String>,
    pub tool_version: String,
}

/// Rényi `α`-entropy estimate from the generalized nearest-neighbor graph.
pub fn renyi_entropy(ps: &PointSet, settings: &EstimatorSettings) -> Result<EstimateReport> {
    check_alpha(settings.alpha)?;
    let (n, d) = (ps.len(), ps.dim());
    if n <= settings.spec.k() {
        return Err(Error::SampleTooSmall { n, k: settings.spec.k() });
    }
    let p = settings.power(d);
    let lp = lp_functional(ps, &settings.spec, p, Metric::Euclidean)?;
    if lp <= 0.0 {
        return Err(Error::DegenerateSample("all nearest-neighbor distances are zero".into()));
    }
    let gamma = settings.gamma.resolve(d, p, &settings.spec)?;
    let value = (lp / (gamma.value * (n as f64).powf(1.0 - p / d as f64))).ln() / (1.0 - settings.alpha);
    Ok(EstimateReport {
        estimator: "renyi_entropy".into(),
        value,
        n,
        d,
        alpha: settings.alpha,
        p: Some(p),
        spec: Some(settings.spec.clone()),
        gamma: Some(gamma),
        warnings: Vec::new(),
        tool_version: TOOL_VERSION.into(),
    })
}

/// Rényi `α`-mutual information estimate: minus the entropy estimate of the
/// empirical copula. Settings outside the guaranteed range add warnings.
pub fn renyi_mi(ps: &PointSet, settings: &EstimatorSettings) -> Result<EstimateReport> {
    let mut report = renyi_entropy(&empirical_copula(ps), settings)?;
    report.estimator = "renyi_mi".into();
    report.value = -report.value;
    report.warnings = settings.mi_warnings(ps.dim());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{sample, DistributionSpec};

    fn settings(alpha: f64, s: &[usize], gamma: f64) -> EstimatorSettings {
        EstimatorSettings::new(alpha, NeighborSpec::new(s.iter().copied()).unwrap(), GammaSource::Fixed(gamma)).unwrap()
    }

    #[test]
    fn alpha_must_be_in_open_unit_interval() {
        let s = NeighborSpec::new([1]).unwrap();
        for a in [0.0, 1.0, 1.2, -0.1, f64::NAN] {
            assert!(EstimatorSettings::new(a, s.clone(), GammaSource::Analytic).is_err());
        }
    }

    #[test]
    fn matches_formula_on_small_line() {
        // {0,1,3}, S={1}, α=0.5 → p = 0.5, L = 1 + 1 + sqrt 2
        let ps = PointSet::from_flat(vec![0.0, 1.0, 3.0], 1).unwrap();
        let r = renyi_entropy(&ps, &settings(0.5, &[1], 0.7)).unwrap();
        let l = 2.0 + 2f64.sqrt();
        let want = (l / (0.7 * 3f64.powf(0.5))).ln() / 0.5;
        assert!((r.value - want).abs() < 1e-14);
        assert_eq!(r.p, Some(0.5));
        assert_eq!(r.gamma.as_ref().unwrap().source, "user");
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let ps = PointSet::from_flat(vec![2.0; 10], 2).unwrap();
        let err = renyi_entropy(&ps, &settings(0.7, &[1], 1.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateSample(_)));
    }

    #[test]
    fn too_few_points() {
        let ps = PointSet::from_flat(vec![0.0, 1.0, 3.0], 1).unwrap();
        assert!(matches!(renyi_entropy(&ps, &settings(0.7, &[3], 1.0)), Err(Error::SampleTooSmall { .. })));
    }

    #[test]
    fn scaling_shifts_entropy_by_d_log_a() {
        let ps = sample(&DistributionSpec::uniform_cube(3, 1.0), 500, 1).unwrap();
        let st = settings(0.7, &[1, 2, 3], 2.2);
        let h1 = renyi_entropy(&ps, &st).unwrap().value;
        let h2 = renyi_entropy(&ps.scaled(2.0).unwrap(), &st).unwrap().value;
        assert!((h2 - h1 - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mi_warnings_outside_guarantee() {
        let ps = sample(&DistributionSpec::uniform_cube(2, 1.0), 200, 2).unwrap();
        let r = renyi_mi(&ps, &settings(0.7, &[1, 2, 3], 2.0)).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("d >= 3"));
        let ps3 = sample(&DistributionSpec::uniform_cube(3, 1.0), 200, 2).unwrap();
        assert!(renyi_mi(&ps3, &settings(0.7, &[1, 2, 3], 2.0)).unwrap().warnings.is_empty());
        assert_eq!(renyi_mi(&ps3, &settings(0.3, &[1, 2, 3], 2.0)).unwrap().warnings.len(), 1);
    }

    #[test]
    fn mi_is_rank_invariant() {
        let ps = sample(&DistributionSpec::uniform_cube(3, 1.0), 300, 3).unwrap();
        let st = settings(0.7, &[1, 2], 1.5);
        let warped = ps.map_coords(|a, v| match a { 0 => v.powi(3), 1 => v.exp(), _ => 5.0 * v - 2.0 }).unwrap();
        assert_eq!(renyi_mi(&ps, &st).unwrap().value, renyi_mi(&warped, &st).unwrap().value);
    }

    #[test]
    fn estimate_source_must_match() {
        use crate::calibration::GammaKey;
        let key = GammaKey::new(2, 1.0, NeighborSpec::new([1]).unwrap(), 100, 2).unwrap();
        let est = GammaEstimate { mean: 0.5, std_error: 0.0, key, seed: 0 };
        let src = GammaSource::Estimate(est);
        assert!(src.resolve(2, 1.0, &NeighborSpec::new([1]).unwrap()).is_ok());
        assert!(src.resolve(3, 1.0, &NeighborSpec::new([1]).unwrap()).is_err());
        assert!(GammaSource::Fixed(0.0).resolve(2, 1.0, &NeighborSpec::new([1]).unwrap()).is_err());
    }

    #[test]
    fn report_json_fields() {
        let ps = PointSet::from_flat(vec![0.0, 1.0, 3.0, 4.5], 1).unwrap();
        let r = renyi_entropy(&ps, &settings(0.5, &[1], 0.7)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for field in ["estimator", "value", "n", "d", "alpha", "p", "S", "gamma", "warnings", "tool_version"] {
            assert!(v.get(field).is_some(), "missing {field}");
        }
    }
}
