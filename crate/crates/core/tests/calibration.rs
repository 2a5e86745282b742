use std::fs;

use renyi_core::calibration::{
    estimate_gamma, gamma_analytic, CalibrationDomain, GammaCache, GammaKey, GammaRecord,
};
use renyi_core::{Error, NeighborSpec};

fn key(d: usize, p: f64, s: &[usize], n_cal: usize, reps: usize) -> GammaKey {
    GammaKey::new(d, p, NeighborSpec::new(s.iter().copied()).unwrap(), n_cal, reps).unwrap()
}

#[test]
fn empty_cache_computes_then_hits() {
    let dir = tempfile::tempdir().unwrap();
    let cache = GammaCache::new(dir.path().join("gamma.jsonl"));
    let k = key(2, 1.0, &[1, 2], 2000, 3);
    let first = cache.get_or_compute(&k, 5).unwrap();
    let bytes = fs::read(cache.path()).unwrap();
    let second = cache.get_or_compute(&k, 5).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.mean.to_bits(), second.mean.to_bits());
    assert_eq!(fs::read(cache.path()).unwrap(), bytes);
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 1);
}

#[test]
fn different_key_appends_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let cache = GammaCache::new(dir.path().join("gamma.jsonl"));
    cache.get_or_compute(&key(2, 1.0, &[1], 1000, 2), 1).unwrap();
    cache.get_or_compute(&key(2, 1.0, &[1], 1000, 3), 1).unwrap();
    cache.get_or_compute(&key(2, 1.0, &[1], 1000, 2).with_domain(CalibrationDomain::Torus), 1).unwrap();
    assert_eq!(cache.load().unwrap().len(), 3);
}

#[test]
fn loaded_records_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cache = GammaCache::new(dir.path().join("gamma.jsonl"));
    let est = cache.get_or_compute(&key(3, 0.9, &[1, 2, 3], 1500, 2), 9).unwrap();
    let loaded = cache.load().unwrap();
    assert_eq!(loaded, vec![est.clone()]);
    let line = fs::read_to_string(cache.path()).unwrap();
    let rec: GammaRecord = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(rec, GammaRecord::from(&est));
}

#[test]
fn hand_edited_nonpositive_mean_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gamma.jsonl");
    let cache = GammaCache::new(&path);
    let k = key(2, 1.0, &[1], 1000, 2);
    cache.get_or_compute(&k, 1).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let rec: GammaRecord = serde_json::from_str(text.trim()).unwrap();
    let edited = text.replace(&format!("\"mean\":{}", rec.mean), "\"mean\":-0.5");
    assert_ne!(edited, text);
    fs::write(&path, edited).unwrap();
    let err = cache.load().unwrap_err();
    assert!(matches!(err, Error::InvalidGammaRecord { line: 1, .. }));
    assert!(err.to_string().contains("invalid gamma record"));
    // no silent recompute either
    assert!(cache.get_or_compute(&k, 1).is_err());
}

#[test]
fn corrupt_line_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gamma.jsonl");
    let cache = GammaCache::new(&path);
    cache.get_or_compute(&key(1, 0.5, &[1], 500, 2), 1).unwrap();
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{not json\n");
    fs::write(&path, text).unwrap();
    assert!(matches!(cache.load(), Err(Error::InvalidGammaRecord { line: 2, .. })));
}

#[test]
fn concurrent_writers_store_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gamma.jsonl");
    let k = key(2, 0.8, &[1, 2], 3000, 2);
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (p, k) = (path.clone(), k.clone());
            std::thread::spawn(move || GammaCache::new(p).get_or_compute(&k, 3).unwrap())
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(results.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(GammaCache::new(&path).load().unwrap().len(), 1);
}

#[test]
fn estimate_is_positive_with_small_error() {
    let e = estimate_gamma(&key(3, 1.5, &[2, 3], 4000, 4), 2).unwrap();
    assert!(e.mean > 0.0 && e.std_error < e.mean);
}

#[test]
fn one_dimensional_estimate_matches_analytic() {
    let k = key(1, 0.5, &[1], 100_000, 10);
    let e = estimate_gamma(&k, 0).unwrap();
    let a = gamma_analytic(1, 0.5, &k.spec).unwrap();
    assert!((e.mean - a).abs() <= 3.0 * e.std_error, "{} vs {a} (se {})", e.mean, e.std_error);
}

#[test]
fn calibration_size_changes_little() {
    let small = estimate_gamma(&key(1, 0.5, &[1], 100_000, 10), 1).unwrap();
    let large = estimate_gamma(&key(1, 0.5, &[1], 400_000, 10), 1).unwrap();
    assert!((small.mean - large.mean).abs() / large.mean < 0.01);
}

#[test]
fn torus_estimate_matches_analytic_for_second_neighbor() {
    let k = key(3, 0.9, &[2], 100_000, 20).with_domain(CalibrationDomain::Torus);
    let e = estimate_gamma(&k, 4).unwrap();
    let a = gamma_analytic(3, 0.9, &k.spec).unwrap();
    assert!((e.mean - a).abs() <= 3.0 * e.std_error, "{} vs {a} (se {})", e.mean, e.std_error);
}

#[test]
fn standard_error_shrinks_like_inverse_root_reps() {
    let mean_se = |reps: usize| {
        (0..20).map(|s| estimate_gamma(&key(2, 1.0, &[1], 2000, reps), 100 + s).unwrap().std_error).sum::<f64>() / 20.0
    };
    let ratio = mean_se(10) / mean_se(40);
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio = {ratio}");
}
