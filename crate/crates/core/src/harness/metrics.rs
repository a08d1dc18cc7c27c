/// Fraction of errors with |e| < resolution/2.
pub fn hit_rate(errors: &[f64], resolution: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    let half = resolution / 2.0;
    errors.iter().filter(|e| e.abs() < half).count() as f64 / errors.len() as f64
}

/// Root mean square over every entry. Empty input gives 0.
pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// RMSE restricted to the hits, `None` when there are none.
pub fn rmse_of_hits(errors: &[f64], resolution: f64) -> Option<f64> {
    let hits: Vec<f64> = errors.iter().copied().filter(|e| e.abs() < resolution / 2.0).collect();
    (!hits.is_empty()).then(|| rmse(&hits))
}
