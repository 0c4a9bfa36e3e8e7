//! Small statistical helpers shared by the verification suites and the harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `P(χ²_df > stat)`.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("positive degrees of freedom").sf(stat)
}

/// Two-sample chi-square test of homogeneity on categorical counts.
/// Categories empty in both samples are dropped. Returns `(statistic, df, p)`.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> (f64, f64, f64) {
    assert_eq!(a.len(), b.len());
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        cells += 1;
        let d = ka * x as f64 - kb * y as f64;
        stat += d * d / (x + y) as f64;
    }
    let df = cells.saturating_sub(1) as f64;
    (stat, df, chi_square_sf(stat, df))
}

/// Dvoretzky–Kiefer–Wolfowitz band half-width `√(ln(2/δ) / (2n))`.
pub fn dkw_epsilon(n: usize, confidence: f64) -> f64 {
    ((2.0 / confidence).ln() / (2.0 * n as f64)).sqrt()
}

/// CDF at integer `a` of the geometric law on `{0, 1, …}` with mean `mu`,
/// i.e. success probability `1 / (1 + mu)`: `1 − (mu / (1 + mu))^{a+1}`.
pub fn geometric_cdf(mu: f64, a: u64) -> f64 {
    if mu <= 0.0 {
        return 1.0;
    }
    1.0 - (mu / (1.0 + mu)).powf(a as f64 + 1.0)
}

/// Empirical CDF of nonnegative integer samples evaluated on `0..=max`.
pub fn integer_ecdf(samples: &[u64]) -> Vec<f64> {
    let max = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; max + 1];
    for &s in samples {
        hist[s as usize] += 1;
    }
    let n = samples.len() as f64;
    let mut acc = 0u64;
    hist.into_iter()
        .map(|h| {
            acc += h;
            acc as f64 / n
        })
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_cdf_matches_direct_summation() {
        for &mu in &[0.1f64, 0.5, 1.0, 3.7] {
            let p = 1.0 / (1.0 + mu);
            let mut acc = 0.0;
            for a in 0..60u64 {
                acc += p * (1.0 - p).powi(a as i32);
                assert!((geometric_cdf(mu, a) - acc).abs() < 1e-12);
            }
            // mean check by summation
            let m: f64 = (0..2000).map(|k| k as f64 * p * (1.0f64 - p).powi(k)).sum();
            assert!((m - mu).abs() < 1e-9);
        }
        assert_eq!(geometric_cdf(0.0, 0), 1.0);
    }

    #[test]
    fn dkw_reference_value() {
        assert!((dkw_epsilon(10_000, 1e-3) - 0.019_494_746_035_204_05).abs() < 1e-15);
        assert!(dkw_epsilon(20_000, 1e-3) < dkw_epsilon(10_000, 1e-3));
    }

    #[test]
    fn chi_square_tail() {
        // P(χ²_2 > x) = e^{-x/2}
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-12);
        let (_, df, p) = chi_square_two_sample(&[10, 20, 30, 0], &[10, 20, 30, 0]);
        assert_eq!(df, 2.0);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, _, p) = chi_square_two_sample(&[1000, 0], &[0, 1000]);
        assert!(p < 1e-10);
    }

    #[test]
    fn ecdf_and_moments() {
        assert_eq!(integer_ecdf(&[0, 2, 2, 1]), vec![0.25, 0.5, 1.0]);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(std_dev(&[1.0, 2.0, 3.0]), 1.0);
        assert!((ols_slope(&[1.0, 2.0, 3.0], &[2.0, 4.5, 7.0]) - 2.5).abs() < 1e-12);
    }
}
