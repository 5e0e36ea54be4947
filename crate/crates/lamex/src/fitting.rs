//! Least-squares slope fits for decay-rate checks.

/// Slope of the best-fit line through `(x, y)` pairs.
///
/// Panics on fewer than two points; callers fit ladders they control.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a slope");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Fitted exponent p of y ~ C x^p over the pairs with y above `floor`.
///
/// The floor guards against levels where the measured quantity has hit
/// round-off and would otherwise flatten the fit.
pub fn log_log_slope(pairs: &[(f64, f64)], floor: f64) -> f64 {
    let filtered: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|(x, y)| *x > 0.0 && *y > floor)
        .collect();
    let xs: Vec<f64> = filtered.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = filtered.iter().map(|(_, y)| y.ln()).collect();
    linear_slope(&xs, &ys)
}
