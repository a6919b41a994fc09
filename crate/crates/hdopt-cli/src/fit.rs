//! Convergence-exponent fitting for iteration logs.
//!
//! A method obeying `J_k - J* ~ C k^s` traces a line of slope `s` in
//! `log J` vs `log k`. The fit deliberately skips transients: it uses the
//! final half of the iterations (at least 10 points when the log is long
//! enough), drops `k = 0`, and ignores non-positive or non-finite values —
//! rows where a method has hit its round-off floor carry no rate
//! information and would otherwise wreck the fit.

/// Least-squares slope of `log value` vs `log k` over the final half of the
/// rows (minimum 10 points where available). Returns `None` when fewer than
/// two usable points remain.
pub fn convergence_exponent(rows: &[(usize, f64)]) -> Option<f64> {
    let k_max = rows.iter().map(|&(k, _)| k).max()?;
    let mut window_start = k_max / 2;
    // Widen short windows to the 10-point minimum.
    let in_window = |start: usize| rows.iter().filter(|&&(k, _)| k >= start && k >= 1).count();
    while window_start > 1 && in_window(window_start) < 10 {
        window_start -= 1;
    }

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|&&(k, v)| k >= window_start.max(1) && v.is_finite() && v > 0.0)
        .map(|&(k, v)| ((k as f64).ln(), v.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }

    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom <= 0.0 {
        return None;
    }
    Some((m * sxy - sx * sy) / denom)
}
