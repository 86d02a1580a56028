//! Deterministic aggregation helpers.
//!
//! Means and standard errors are accumulated with a fixed-order pairwise
//! reduction, so the emitted numbers do not depend on how trials were
//! scheduled across threads. Reassociation against a plain serial sum can
//! still move the last couple of ulps; documented tolerance is `1e-12`
//! relative.

/// Pairwise (cascade) sum in the slice's order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Mean and standard error of the mean (`s / sqrt(n)` with the sample
/// standard deviation `s`), both from pairwise reductions. A single sample
/// has standard error zero.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Least-squares slope of `ln(err)` against `ln(lambda)` over the points
/// with `lambda > lambda_min` and positive error. Returns `None` with fewer
/// than two usable points.
pub fn fit_loglog_slope(points: &[(f64, f64)], lambda_min: f64) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(lam, err)| *lam > lambda_min && *err > 0.0)
        .map(|(lam, err)| (lam.ln(), err.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in &logs {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Mean of the curve values over the top decade of lambda
/// (`lambda >= lambda_max / 10`).
pub fn plateau_top_decade(points: &[(f64, f64)]) -> Option<f64> {
    let lambda_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !lambda_max.is_finite() {
        return None;
    }
    let top: Vec<f64> =
        points.iter().filter(|p| p.0 >= lambda_max / 10.0).map(|p| p.1).collect();
    if top.is_empty() {
        None
    } else {
        Some(pairwise_sum(&top) / top.len() as f64)
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    if count == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_serial_on_small_input() {
        let v = [1.5, -0.25, 3.0, 0.125];
        assert_eq!(pairwise_sum(&v), 4.375);
    }

    #[test]
    fn mean_and_std_error_basics() {
        let (m, se) = mean_and_std_error(&[2.0, 4.0, 6.0, 8.0]);
        assert!((m - 5.0).abs() < 1e-15);
        // sample std = sqrt(20/3), se = std/2
        assert!((se - (20.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
        let (m1, se1) = mean_and_std_error(&[3.25]);
        assert_eq!((m1, se1), (3.25, 0.0));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> =
            (1..=20).map(|i| (i as f64, 3.0 * (i as f64).powf(-0.5))).collect();
        let slope = fit_loglog_slope(&pts, 0.0).unwrap();
        assert!((slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn plateau_uses_top_decade() {
        let pts = vec![(1.0, 10.0), (10.0, 2.0), (50.0, 1.0), (100.0, 1.0)];
        let p = plateau_top_decade(&pts).unwrap();
        assert!((p - 4.0 / 3.0).abs() < 1e-15); // points at 10, 50, 100
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1.0, 100.0, 10);
        assert_eq!(g.len(), 10);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[9] - 100.0).abs() < 1e-9);
    }
}
