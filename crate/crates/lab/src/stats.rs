//! Small-sample statistics used by the experiment reports.

use serde::Serialize;

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Mean and standard error (unbiased variance); `se = 0` for fewer than two
/// samples.
pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return MeanSe { mean, se: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    MeanSe {
        mean,
        se: (var / n as f64).sqrt(),
    }
}

fn ratio(num: f64, se: f64) -> f64 {
    if se > 0.0 {
        num / se
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(num)
    }
}

/// z-score of the mean of `after - before` (paired samples).
pub fn paired_z(before: &[f64], after: &[f64]) -> f64 {
    let d: Vec<f64> = before.iter().zip(after).map(|(x, y)| y - x).collect();
    let m = mean_se(&d);
    ratio(m.mean, m.se)
}

/// z-score of the sample mean against a reference value.
pub fn z_against(xs: &[f64], reference: f64) -> f64 {
    let m = mean_se(xs);
    ratio(m.mean - reference, m.se)
}

/// One-sample Kolmogorov–Smirnov statistic of `xs` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for `n` samples, with the
/// Stephens small-sample correction.
pub fn ks_pvalue(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Value at fraction `q` of the sorted data (nearest rank).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Exp};

    #[test]
    fn mean_and_se() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(paired_z(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn ks_pvalues() {
        // reference values of the Kolmogorov distribution
        assert!((ks_pvalue(1_000_000, 1.36 / 1000.0) - 0.0494).abs() < 1e-3);
        assert!((ks_pvalue(1_000_000, 1.63 / 1000.0) - 0.0098).abs() < 1e-3);
        assert_eq!(ks_pvalue(100, 0.0), 1.0);
    }

    #[test]
    fn ks_accepts_exact_quantiles() {
        let e = Exp::new(2.0).unwrap();
        let xs: Vec<f64> = (0..1000)
            .map(|i| e.inverse_cdf((i as f64 + 0.5) / 1000.0))
            .collect();
        let d = ks_statistic(&xs, |x| e.cdf(x));
        assert!(d <= 0.5 / 1000.0 + 1e-12);
        assert_eq!(quantile(&[3.0, 1.0, 2.0, 4.0], 0.5), 2.0);
    }
}
