use super::Model;

/// Kolmogorov-Smirnov distance `sup |F_n - F|` between the empirical CDF of
/// `data` and `model`, checked on both sides of every jump.
///
/// Returns 0 for empty input.
pub fn ks_statistic(data: &[f64], model: &Model) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let mut xs = data.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = model.cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d.clamp(0.0, 1.0)
}
