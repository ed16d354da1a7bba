/// Fraction of cells whose count reaches each threshold.
pub fn coverage_metrics(counts: &[u64], thresholds: &[u64]) -> Vec<f64> {
    if counts.is_empty() {
        return vec![0.0; thresholds.len()];
    }
    thresholds.iter().map(|&t| counts.iter().filter(|&&c| c >= t).count() as f64 / counts.len() as f64).collect()
}

/// Visit coverage (≥ 1) and main coverage (≥ 10).
pub fn visit_and_main_coverage(counts: &[u64]) -> (f64, f64) {
    let c = coverage_metrics(counts, &[1, 10]);
    (c[0], c[1])
}
