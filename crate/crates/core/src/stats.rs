//! Small statistics helpers for the Monte Carlo harness.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the sample mean (with the `n - 1` variance).
pub fn std_err(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// `sqrt(p (1 - p) / m)`.
pub fn binomial_se(p: f64, m: usize) -> f64 {
    if m == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / m as f64).sqrt()
}

/// Least-squares slope of `ys` against `xs`; `None` with fewer than two
/// distinct abscissas.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 5% critical value of the two-sample KS statistic.
pub fn ks_critical_5pct(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    1.358 * ((m + n) / (m * n)).sqrt()
}

/// Wasserstein-1 distance `integral |F_a - F_b|` between two empirical laws.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let (a, b) = (sorted(a), sorted(b));
    let mut points: Vec<f64> = a.iter().chain(&b).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    for w in points.windows(2) {
        while i < a.len() && a[i] <= w[0] {
            i += 1;
        }
        while j < b.len() && b[j] <= w[0] {
            j += 1;
        }
        total += (i as f64 / na - j as f64 / nb).abs() * (w[1] - w[0]);
    }
    total
}

/// Largest gap between the joint empirical CDFs of two bivariate samples,
/// evaluated on a `bins x bins` grid of pooled marginal quantiles.
pub fn ks_2d_binned(a: &[(f64, f64)], b: &[(f64, f64)], bins: usize) -> f64 {
    if a.is_empty() || b.is_empty() || bins == 0 {
        return f64::NAN;
    }
    let pooled_x = sorted(&a.iter().chain(b).map(|p| p.0).collect::<Vec<_>>());
    let pooled_y = sorted(&a.iter().chain(b).map(|p| p.1).collect::<Vec<_>>());
    let cut = |v: &[f64], k: usize| v[(k * v.len()).div_ceil(bins) - 1];
    let xs: Vec<f64> = (1..=bins).map(|k| cut(&pooled_x, k)).collect();
    let ys: Vec<f64> = (1..=bins).map(|k| cut(&pooled_y, k)).collect();
    let cdf = |s: &[(f64, f64)], x: f64, y: f64| {
        s.iter().filter(|p| p.0 <= x && p.1 <= y).count() as f64 / s.len() as f64
    };
    let mut d: f64 = 0.0;
    for &x in &xs {
        for &y in &ys {
            d = d.max((cdf(a, x, y) - cdf(b, x, y)).abs());
        }
    }
    d
}
