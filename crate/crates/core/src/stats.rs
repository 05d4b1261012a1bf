//! Small statistics helpers used by the experiment runners and tests.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Average ranks (1-based), ties share the mean of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

/// Pearson correlation; `NaN` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation with average-rank tie handling.
///
/// A constant `ys` (every value tied) is treated as perfectly nondecreasing
/// and returns 1.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let ry = ranks(ys);
    if ry.iter().all(|r| *r == ry[0]) {
        return 1.0;
    }
    pearson(&ranks(xs), &ry)
}

/// Gaussian tail probability Q(x) = P(Z > x).
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn spearman_of_monotone_with_saturation() {
        let x = [0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0];
        let y = [0.1, 0.5, 0.8, 0.9, 1.0, 1.0, 1.0];
        let rho = spearman(&x, &y);
        assert!((rho - (26.0f64 / 28.0).sqrt()).abs() < 1e-12);
        assert_eq!(spearman(&x, &[1.0; 7]), 1.0);
    }

    #[test]
    fn q_function_reference_points() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-7);
        // Q(1) = 0.158655253931457
        assert!((q_function(1.0) - 0.158_655_253_931_457).abs() < 1e-10);
        // Q(3) = 1.349898031630e-3
        assert!((q_function(3.0) / 1.349_898_031_630e-3 - 1.0).abs() < 1e-5);
        assert!((q_function(-1.0) - (1.0 - 0.158_655_253_931_457)).abs() < 1e-10);
    }
}
