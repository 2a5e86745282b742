//! Calibration of the graph constant `γ(d, p, S)`.
//!
//! For a uniform sample on `[0, 1]^d`, `L_p / n^{1 − p/d}` converges to `γ`.
//! [`estimate_gamma`] averages that ratio over independent replications;
//! [`gamma_analytic`] gives the closed form for singleton `S = {k}`;
//! [`GammaCache`] persists Monte-Carlo estimates as JSON lines.
//!
//! Two sampling domains are supported. `Cube` uses the plain unit cube, whose
//! boundary inflates edge lengths at finite `n` (a bias decaying roughly like
//! `n^{-1/d}`). `Torus` measures distances on the flat torus and has no such
//! boundary layer; it estimates the same limit and is the one to use when the
//! limit itself is wanted, e.g. to check the analytic form.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::geometry::{lp_functional, Metric, NeighborSpec, PointSet};
use crate::{rng, TOOL_VERSION};

pub const DEFAULT_N_CAL: usize = 200_000;
pub const DEFAULT_REPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationDomain {
    #[default]
    Cube,
    Torus,
}

impl CalibrationDomain {
    fn metric(self) -> Metric {
        match self {
            CalibrationDomain::Cube => Metric::Euclidean,
            CalibrationDomain::Torus => Metric::Periodic,
        }
    }
}

impl fmt::Display for CalibrationDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CalibrationDomain::Cube => "cube",
            CalibrationDomain::Torus => "torus",
        })
    }
}

impl FromStr for CalibrationDomain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(CalibrationDomain::Cube),
            "torus" => Ok(CalibrationDomain::Torus),
            other => Err(Error::InvalidParameter(format!("unknown calibration domain {other:?}"))),
        }
    }
}

/// Everything that determines a calibration run apart from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaKey {
    pub d: usize,
    pub p: f64,
    #[serde(rename = "S")]
    pub spec: NeighborSpec,
    pub n_cal: usize,
    pub reps: usize,
    #[serde(default)]
    pub domain: CalibrationDomain,
}

impl GammaKey {
    pub fn new(d: usize, p: f64, spec: NeighborSpec, n_cal: usize, reps: usize) -> Result<Self> {
        let key = Self { d, p, spec, n_cal, reps, domain: CalibrationDomain::Cube };
        key.validate()?;
        Ok(key)
    }

    pub fn with_domain(mut self, domain: CalibrationDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(self.p > 0.0 && self.p < self.d as f64) {
            return Err(Error::InvalidParameter(format!(
                "power must satisfy 0 < p < d = {}, got {}",
                self.d, self.p
            )));
        }
        if self.n_cal <= self.spec.k() {
            return Err(Error::InvalidParameter(format!(
                "n_cal = {} must exceed max(S) = {}",
                self.n_cal,
                self.spec.k()
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        Ok(())
    }

    fn same_as(&self, other: &GammaKey) -> bool {
        self.d == other.d
            && self.p.to_bits() == other.p.to_bits()
            && self.spec == other.spec
            && self.n_cal == other.n_cal
            && self.reps == other.reps
            && self.domain == other.domain
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub key: GammaKey,
    pub seed: u64,
}

/// Monte-Carlo estimate of `γ`: `reps` uniform samples of size `n_cal`, the
/// ratio `L_p / n_cal^{1 − p/d}` for each, and their mean and standard error.
///
/// Replication `r` draws from stream `r` of `seed`, so the result is the same
/// whatever the thread count.
pub fn estimate_gamma(key: &GammaKey, seed: u64) -> Result<GammaEstimate> {
    key.validate()?;
    let norm = (key.n_cal as f64).powf(1.0 - key.p / key.d as f64);
    let ratios = (0..key.reps)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(seed, r as u64);
            let data: Vec<f64> = (0..key.n_cal * key.d).map(|_| g.random::<f64>()).collect();
            let ps = PointSet::from_flat(data, key.d)?;
            Ok(lp_functional(&ps, &key.spec, key.p, key.domain.metric())? / norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std_error) = mean_and_std_error(&ratios);
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::DegenerateSample("calibration produced a non-positive functional".into()));
    }
    Ok(GammaEstimate { mean, std_error, key: key.clone(), seed })
}

pub(crate) fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// Closed-form `γ` for `S = {k}`:
///
/// ```text
/// γ = V_d^{−p/d} · Γ(k + p/d) / Γ(k)
/// ```
///
/// For a homogeneous Poisson process of intensity `n`, `n V_d ρ_k^d` is
/// Gamma(k, 1)-distributed, which gives `E ρ_k^p` and hence the limit of
/// `L_p / n^{1 − p/d}`. The same constant makes the estimator coincide with
/// the Leonenko–Pronzato–Savani k-th neighbor form.
pub fn gamma_analytic(d: usize, p: f64, spec: &NeighborSpec) -> Result<f64> {
    let k = spec.is_singleton().ok_or_else(|| {
        Error::AnalyticUnavailable(format!("S = {{{spec}}} is not a singleton"))
    })?;
    if d == 0 || !(p > 0.0 && p < d as f64) {
        return Err(Error::InvalidParameter(format!("need 0 < p < d, got p = {p}, d = {d}")));
    }
    let r = p / d as f64;
    let k = k as f64;
    Ok((ln_gamma(k + r) - ln_gamma(k) - r * unit_ball_volume(d).ln()).exp())
}

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRecord {
    pub d: usize,
    pub p: f64,
    #[serde(rename = "S")]
    pub spec: Vec<usize>,
    pub n_cal: usize,
    pub reps: usize,
    #[serde(default)]
    pub domain: CalibrationDomain,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    pub tool_version: String,
}

impl From<&GammaEstimate> for GammaRecord {
    fn from(e: &GammaEstimate) -> Self {
        Self {
            d: e.key.d,
            p: e.key.p,
            spec: e.key.spec.indices().to_vec(),
            n_cal: e.key.n_cal,
            reps: e.key.reps,
            domain: e.key.domain,
            seed: e.seed,
            mean: e.mean,
            std_error: e.std_error,
            tool_version: TOOL_VERSION.to_string(),
        }
    }
}

impl GammaRecord {
    fn into_estimate(self, line: usize) -> Result<GammaEstimate> {
        let bad = |reason: String| Error::InvalidGammaRecord { line, reason };
        if !(self.mean > 0.0 && self.mean.is_finite()) {
            return Err(bad(format!("mean must be positive, got {}", self.mean)));
        }
        if !(self.std_error >= 0.0 && self.std_error.is_finite()) {
            return Err(bad(format!("std_error must be nonnegative, got {}", self.std_error)));
        }
        let spec = NeighborSpec::new(self.spec.iter().copied()).map_err(|e| bad(e.to_string()))?;
        if spec.indices() != self.spec.as_slice() {
            return Err(bad("S must be a strictly increasing array".into()));
        }
        let key = GammaKey { d: self.d, p: self.p, spec, n_cal: self.n_cal, reps: self.reps, domain: self.domain };
        key.validate().map_err(|e| bad(e.to_string()))?;
        Ok(GammaEstimate { mean: self.mean, std_error: self.std_error, key, seed: self.seed })
    }
}

/// Line-oriented JSON cache of calibration results, one [`GammaRecord`] per
/// line. Access is serialized across processes by an exclusive file lock.
#[derive(Debug, Clone)]
pub struct GammaCache {
    path: PathBuf,
}

impl GammaCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Parses every record; any malformed line is an error naming that line.
    pub fn load(&self) -> Result<Vec<GammaEstimate>> {
        match File::open(&self.path) {
            Ok(f) => parse_records(BufReader::new(f)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        }
    }

    /// Returns the cached estimate for `key`, or computes, appends and returns it.
    pub fn get_or_compute(&self, key: &GammaKey, seed: u64) -> Result<GammaEstimate> {
        key.validate()?;
        if let Some(dir) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&self.path)?;
        file.lock()?;
        file.seek(SeekFrom::Start(0))?;
        let records = parse_records(BufReader::new(&file))?;
        if let Some(hit) = records.into_iter().find(|r| r.key.same_as(key)) {
            return Ok(hit);
        }
        let est = estimate_gamma(key, seed)?;
        let mut line = serde_json::to_string(&GammaRecord::from(&est))?;
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.flush()?;
        Ok(est)
    }
}

fn parse_records(reader: impl BufRead) -> Result<Vec<GammaEstimate>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GammaRecord = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidGammaRecord { line: i + 1, reason: e.to_string() })?;
        out.push(rec.into_estimate(i + 1)?);
    }
    Ok(out)
}

/// How to obtain a Monte-Carlo `γ` when none is supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub n_cal: usize,
    pub reps: usize,
    pub domain: CalibrationDomain,
    pub seed: u64,
    pub cache: Option<PathBuf>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self { n_cal: DEFAULT_N_CAL, reps: DEFAULT_REPS, domain: CalibrationDomain::Cube, seed: 0, cache: None }
    }
}

type MemoKey = (usize, u64, Vec<usize>, usize, usize, CalibrationDomain, u64);

fn memo() -> &'static Mutex<HashMap<MemoKey, GammaEstimate>> {
    static MEMO: OnceLock<Mutex<HashMap<MemoKey, GammaEstimate>>> = OnceLock::new();
    MEMO.get_or_init(Default::default)
}

/// Monte-Carlo `γ` for `(d, p, S)` under `settings`: the cache file when one is
/// configured, else a fresh estimate. Results are memoized per process.
pub fn calibrated_gamma(d: usize, p: f64, spec: &NeighborSpec, settings: &CalibrationSettings) -> Result<GammaEstimate> {
    let key = GammaKey::new(d, p, spec.clone(), settings.n_cal, settings.reps)?.with_domain(settings.domain);
    let mk: MemoKey = (d, p.to_bits(), spec.indices().to_vec(), key.n_cal, key.reps, key.domain, settings.seed);
    if settings.cache.is_none() {
        if let Some(hit) = memo().lock().expect("memo poisoned").get(&mk) {
            return Ok(hit.clone());
        }
    }
    // computed without holding the lock: estimation runs on the rayon pool
    let est = match &settings.cache {
        Some(path) => GammaCache::new(path).get_or_compute(&key, settings.seed)?,
        None => estimate_gamma(&key, settings.seed)?,
    };
    if settings.cache.is_none() {
        memo().lock().expect("memo poisoned").insert(mk, est.clone());
    }
    Ok(est)
}
