use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;
use crate::quadrature::GaussLegendre;

/// Talbot contour nodes used by default; gives roughly 12 correct digits.
pub const DEFAULT_TALBOT_NODES: usize = 24;

/// Law of a sum of independent exponentials (repeated rates allowed).
///
/// Evaluated by inverting the characteristic function `∏ (1 - it/λ_k)^{-1}`
/// along a fixed Talbot contour: the Bromwich line is deformed into the left
/// half plane around the poles `-λ_k` and the contour integral is discretised
/// with the uniform trapezoidal rule in the contour parameter. No partial
/// fractions are formed, so coincident rates cost nothing extra.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoexponentialDensity {
    rates: Vec<f64>,
    nodes: usize,
}

#[inline]
fn cexp(z: Complex64) -> Complex64 {
    let m = math::exp(z.re);
    Complex64::new(m * math::cos(z.im), m * math::sin(z.im))
}

impl HypoexponentialDensity {
    /// Builds the law from its rates.
    pub fn new(mut rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one rate is required".into(),
            ));
        }
        if let Some(bad) = rates.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "rates must be finite and positive, got {bad}"
            )));
        }
        rates.sort_by(f64::total_cmp);
        Ok(Self {
            rates,
            nodes: DEFAULT_TALBOT_NODES,
        })
    }

    /// Changes the number of contour nodes.
    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes.max(4);
        self
    }

    /// The rates, ascending.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Law of the sum with one more independent `Exp(rate)` term.
    pub fn with_extra_rate(&self, rate: f64) -> Result<Self> {
        let mut r = self.rates.clone();
        r.push(rate);
        Ok(Self::new(r)?.with_nodes(self.nodes))
    }

    /// `Σ 1/λ_k`.
    pub fn mean(&self) -> f64 {
        self.rates.iter().map(|l| 1.0 / l).sum()
    }

    /// `Σ 1/λ_k²`.
    pub fn variance(&self) -> f64 {
        self.rates.iter().map(|l| 1.0 / (l * l)).sum()
    }

    /// Laplace transform `E e^{-zE} = ∏ λ_k / (λ_k + z)`.
    pub fn laplace(&self, z: Complex64) -> Complex64 {
        self.rates
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &l| acc * l / (z + l))
    }

    fn talbot<F: Fn(Complex64) -> Complex64>(&self, transform: F, t: f64, m: usize) -> f64 {
        let mf = m as f64;
        let r = 2.0 * mf / (5.0 * t);
        let mut sum = 0.5 * (transform(Complex64::new(r, 0.0)) * math::exp(r * t)).re;
        for k in 1..m {
            let theta = k as f64 * math::PI / mf;
            let cot = math::cos(theta) / math::sin(theta);
            let s = Complex64::new(r * theta * cot, r * theta);
            let sigma = theta + (theta * cot - 1.0) * cot;
            sum += (cexp(s * t) * transform(s) * Complex64::new(1.0, sigma)).re;
        }
        r / mf * sum
    }

    fn density_with(&self, x: f64, m: usize) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return if self.rates.len() == 1 {
                self.rates[0]
            } else {
                0.0
            };
        }
        self.talbot(|z| self.laplace(z), x, m)
    }

    /// `ρ(x)`, clipped at zero; `0` for `x < 0`.
    pub fn density(&self, x: f64) -> f64 {
        self.density_with(x, self.nodes).max(0.0)
    }

    /// `ρ(x)` checked against a finer contour; fails when the two
    /// evaluations disagree by more than `tol` (absolute).
    pub fn density_checked(&self, x: f64, tol: f64) -> Result<f64> {
        let a = self.density_with(x, self.nodes);
        let b = self.density_with(x, self.nodes + 8);
        if (a - b).abs() > tol {
            return Err(Error::Accuracy(format!(
                "contour refinement changed rho({x}) by {:e}",
                (a - b).abs()
            )));
        }
        Ok(a.max(0.0))
    }

    /// `P(E <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.talbot(|z| self.laplace(z) / z, x, self.nodes)
            .clamp(0.0, 1.0)
    }

    /// A point beyond which the upper tail has mass below `eps` (Chernoff
    /// bound at half the smallest rate).
    pub fn tail_bound(&self, eps: f64) -> f64 {
        let theta = 0.5 * self.rates[0];
        let log_mgf: f64 = self.rates.iter().map(|l| math::ln(l / (l - theta))).sum();
        ((log_mgf - math::ln(eps)) / theta).max(0.0)
    }

    /// Range `[lo, hi]` where `ρ` exceeds `floor`, scanned on a grid
    /// spanning the bulk of the law.
    pub fn resolvable_support(&self, floor: f64) -> (f64, f64) {
        let hi_end = self.tail_bound(1e-300_f64.max(floor * 1e-3));
        let n = 2000;
        let mut lo = None;
        let mut hi = 0.0;
        for i in 1..=n {
            let x = hi_end * i as f64 / n as f64;
            if self.density(x) > floor {
                lo.get_or_insert(x);
                hi = x;
            }
        }
        (lo.unwrap_or(0.0), hi)
    }

    /// `∫ x^p ρ(x) dx` for `p = 0, 1, 2` over `[0, tail_bound(1e-16)]`.
    pub fn raw_moments(&self) -> [f64; 3] {
        let hi = self.tail_bound(1e-16);
        let gl = GaussLegendre::new(16);
        let panels = 400;
        let mut out = [0.0; 3];
        for (p, slot) in out.iter_mut().enumerate() {
            *slot = gl.integrate(
                |x| math::powf(x, p as f64) * self.density(x),
                0.0,
                hi,
                panels,
            );
        }
        out
    }

    /// `(x, ρ(x))` on `points` equispaced nodes of `[0, x_max]`.
    pub fn table(&self, x_max: f64, points: usize) -> Vec<(f64, f64)> {
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let x = x_max * i as f64 / (n - 1) as f64;
                (x, self.density(x))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_exponential() {
        let d = HypoexponentialDensity::new(alloc::vec![2.5]).unwrap();
        for x in [0.01, 0.3, 1.0, 4.0] {
            assert!((d.density(x) - 2.5 * libm::exp(-2.5 * x)).abs() < 1e-10);
            assert!((d.cdf(x) - (1.0 - libm::exp(-2.5 * x))).abs() < 1e-10);
        }
        assert_eq!(d.density(-1.0), 0.0);
        assert_eq!(d.density(0.0), 2.5);
    }

    #[test]
    fn two_distinct_rates_closed_form() {
        let (l1, l2) = (2.0, 6.0);
        let d = HypoexponentialDensity::new(alloc::vec![l1, l2]).unwrap();
        for i in 1..200 {
            let x = i as f64 * 0.025;
            let exact = l1 * l2 * (libm::exp(-l1 * x) - libm::exp(-l2 * x)) / (l2 - l1);
            assert!((d.density(x) - exact).abs() <= 1e-8, "x={x}");
        }
    }

    #[test]
    fn repeated_rates_match_erlang() {
        let d = HypoexponentialDensity::new(alloc::vec![3.0; 4]).unwrap();
        for i in 1..100 {
            let x = i as f64 * 0.05;
            let exact = 81.0 * x * x * x * libm::exp(-3.0 * x) / 6.0;
            assert!((d.density(x) - exact).abs() <= 1e-9, "x={x}");
        }
    }

    #[test]
    fn mixed_repeated_rates_match_convolution() {
        // Exp(1) * Erlang(2, 3): ∫_0^x e^{-(x-y)} 9 y e^{-3y} dy
        let d = HypoexponentialDensity::new(alloc::vec![3.0, 1.0, 3.0]).unwrap();
        let gl = GaussLegendre::new(20);
        for x in [0.2, 0.7, 1.5, 3.0] {
            let exact = gl.integrate(
                |y| libm::exp(-(x - y)) * 9.0 * y * libm::exp(-3.0 * y),
                0.0,
                x,
                4,
            );
            assert!((d.density(x) - exact).abs() <= 1e-10);
        }
    }

    #[test]
    fn normalisation_mean_variance() {
        let d = HypoexponentialDensity::new(alloc::vec![2.0, 2.0, 6.0, 6.0, 20.0, 20.0]).unwrap();
        let [m0, m1, m2] = d.raw_moments();
        assert!((m0 - 1.0).abs() < 1e-6);
        assert!((m1 - d.mean()).abs() < 1e-6 * d.mean());
        assert!(((m2 - m1 * m1) - d.variance()).abs() < 1e-5 * d.variance());
        assert!(d.density_checked(0.8, 1e-9).is_ok());
        let (lo, hi) = d.resolvable_support(1e-12);
        assert!(lo > 0.0 && hi > d.mean());
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(HypoexponentialDensity::new(alloc::vec![]).is_err());
        assert!(HypoexponentialDensity::new(alloc::vec![1.0, -2.0]).is_err());
    }
}
