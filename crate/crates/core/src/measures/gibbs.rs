use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::lattice::{ModeIndex, ModelParams, SpectralField, Truncation};
use crate::math;
use crate::measures::HypoexponentialDensity;
use crate::rng;

/// `μ_γ` restricted to a truncation, with its per-mode constants.
#[derive(Debug, Clone)]
pub struct GibbsSpec {
    params: ModelParams,
    trunc: Arc<Truncation>,
    lambda_prime: Vec<f64>,
    variance: Vec<f64>,
    rates: Vec<f64>,
}

impl GibbsSpec {
    /// Precomputes `λ'_k`, `v_k = 2/(γ λ'_k²)` and `λ_k = γ λ'_k`.
    pub fn new(params: ModelParams, trunc: Arc<Truncation>) -> Self {
        let lambda_prime: Vec<f64> = trunc
            .modes()
            .iter()
            .map(|k| params.lambda_prime(k.norm_sq()))
            .collect();
        let variance = lambda_prime
            .iter()
            .map(|l| 2.0 / (params.gamma * l * l))
            .collect();
        let rates = lambda_prime.iter().map(|l| params.gamma * l).collect();
        Self {
            params,
            trunc,
            lambda_prime,
            variance,
            rates,
        }
    }

    /// Model parameters.
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Truncation.
    pub fn trunc(&self) -> &Arc<Truncation> {
        &self.trunc
    }

    /// `λ'_k` per mode.
    pub fn lambda_prime(&self) -> &[f64] {
        &self.lambda_prime
    }

    /// `E|ω_k|² = 2/(γ λ'_k²)` per mode.
    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    /// Exponential rates `λ_k = γ λ'_k` of the per-mode energies.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Law of the total energy.
    pub fn energy_density(&self) -> HypoexponentialDensity {
        HypoexponentialDensity::new(self.rates.clone()).expect("rates are positive")
    }

    /// `E E = Σ_k 1/λ_k`.
    pub fn mean_energy(&self) -> f64 {
        self.rates.iter().map(|l| 1.0 / l).sum()
    }

    /// `E(ω_k conj ω_{k'}) = 2 δ_{kk'} / (γ |k|⁴ (1+a²|k|²)^{2s})`.
    pub fn mu_theoretical_moment(&self, k: ModeIndex, k_prime: ModeIndex) -> Complex64 {
        if k != k_prime {
            return Complex64::new(0.0, 0.0);
        }
        let l = self.params.lambda_prime(k.norm_sq());
        Complex64::new(2.0 / (self.params.gamma * l * l), 0.0)
    }

    /// `E|ω_k|^{2p} = 2^p p! / (γ^p λ'_k^{2p})`.
    pub fn mu_abs_moment(&self, k: ModeIndex, p: u32) -> f64 {
        let l = self.params.lambda_prime(k.norm_sq());
        let mut fact = 1.0;
        for i in 2..=p {
            fact *= i as f64;
        }
        let p = p as f64;
        math::powf(2.0, p) * fact / (math::powf(self.params.gamma, p) * math::powf(l, 2.0 * p))
    }
}

/// Draws a field from `μ_γ`: `Re ω_k, Im ω_k ~ N(0, v_k/2)` independently.
pub fn sample_mu<R: Rng + ?Sized>(spec: &GibbsSpec, rng: &mut R) -> SpectralField {
    let coeffs = spec
        .variance
        .iter()
        .map(|v| {
            let sd = math::sqrt(0.5 * v);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect();
    SpectralField::from_coeffs(spec.trunc.clone(), coeffs).expect("finite gaussian draws")
}

/// [`sample_mu`] on the stream `(seed, index)`.
pub fn sample_mu_seeded(spec: &GibbsSpec, seed: u64, index: u64) -> SpectralField {
    sample_mu(spec, &mut rng::stream(seed, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_truncation;

    fn spec(n: i64) -> GibbsSpec {
        GibbsSpec::new(
            ModelParams::new(1.0, 1.0, 1.0).unwrap(),
            Arc::new(build_truncation(n).unwrap()),
        )
    }

    #[test]
    fn closed_form_moments() {
        let s = spec(4);
        let k = ModeIndex::new(1, 0);
        assert_eq!(s.mu_theoretical_moment(k, k).re, 0.5);
        assert_eq!(
            s.mu_theoretical_moment(k, ModeIndex::new(0, 1)),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(s.mu_abs_moment(k, 1), s.mu_theoretical_moment(k, k).re);
        let s2 = GibbsSpec::new(
            ModelParams::new(0.0, 1.0, 2.0).unwrap(),
            Arc::new(build_truncation(2).unwrap()),
        );
        assert!((s2.mu_abs_moment(ModeIndex::new(1, 1), 2) - 0.125).abs() < 1e-16);
        assert!(s.rates().windows(2).all(|w| w[0] > 0.0));
    }

    #[test]
    fn support_series_is_the_mean_norm() {
        let s = spec(8);
        let alpha = 1.0;
        let expected = crate::dynamics::support_series(alpha, s.params(), 8)
            .unwrap()
            .partial;
        let m = 100_000u64;
        let draws: Vec<f64> = (0..m)
            .map(|i| sample_mu_seeded(&s, 17, i).sobolev_norm_sq(s.params(), 1.0 - alpha))
            .collect();
        let mean = draws.iter().sum::<f64>() / m as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
        let se = math::sqrt(var / m as f64);
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "{mean} vs {expected} (se {se})"
        );
    }

    #[test]
    fn empirical_moments_and_exponential_energies() {
        let s = spec(4);
        let m = 100_000u64;
        let d = s.trunc().len();
        let mut sum = alloc::vec![Complex64::new(0.0, 0.0); d];
        let mut sum2 = alloc::vec![0.0; d];
        let mut sum4 = alloc::vec![0.0; d];
        let mut sum8 = alloc::vec![0.0; d];
        let mut energies: Vec<Vec<f64>> = alloc::vec![Vec::new(); d];
        let mut rng = rng::stream(2026, 0);
        for _ in 0..m {
            let f = sample_mu(&s, &mut rng);
            for (i, c) in f.coeffs().iter().enumerate() {
                let a2 = c.norm_sqr();
                sum[i] += c;
                sum2[i] += a2;
                sum4[i] += a2 * a2;
                sum8[i] += a2 * a2 * a2 * a2;
                energies[i].push(0.5 * s.lambda_prime()[i] * a2);
            }
        }
        let mf = m as f64;
        for (i, k) in s.trunc().modes().iter().enumerate() {
            let v = s.variance()[i];
            // mean of Re ω_k has sd sqrt(v/2 / m)
            let se = libm::sqrt(0.5 * v / mf);
            assert!((sum[i].re / mf).abs() < 4.0 * se && (sum[i].im / mf).abs() < 4.0 * se);
            let m2 = sum2[i] / mf;
            let se2 = libm::sqrt((sum4[i] / mf - m2 * m2) / mf);
            assert!((m2 - s.mu_abs_moment(*k, 1)).abs() < 3.0 * se2, "{k}");
            let m4 = sum4[i] / mf;
            let se4 = libm::sqrt((sum8[i] / mf - m4 * m4) / mf);
            assert!((m4 - s.mu_abs_moment(*k, 2)).abs() < 3.0 * se4, "{k}");
            // Kolmogorov–Smirnov against Exp(λ_k), 1% level with Bonferroni over modes
            let rate = s.rates()[i];
            let e = &mut energies[i];
            e.sort_by(f64::total_cmp);
            let mut dmax: f64 = 0.0;
            for (j, x) in e.iter().enumerate() {
                let cdf = 1.0 - libm::exp(-rate * x);
                dmax = dmax
                    .max((cdf - j as f64 / mf).abs())
                    .max(((j + 1) as f64 / mf - cdf).abs());
            }
            // sqrt(-ln(α/2d)/2) / sqrt(m), α = 0.01
            let crit = libm::sqrt(-libm::log(0.01 / (2.0 * d as f64)) / 2.0) / libm::sqrt(mf);
            assert!(dmax < crit, "KS {dmax} >= {crit} for {k}");
        }
    }
}
