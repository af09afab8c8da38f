use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{energy, ModeIndex, SpectralField};
use crate::math;
use crate::measures::{GibbsSpec, HypoexponentialDensity};
use crate::quadrature::GaussLegendre;
use crate::rng::{self, ChaCha8Rng};

/// How per-mode energies are drawn on the simplex `Σ X_k = r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexMethod {
    /// Independent exponentials rescaled onto the simplex, then accepted
    /// against the tilt. Exact, independent draws.
    Rejection,
    /// Pairwise Gibbs updates: a random pair `(i, j)` keeps `X_i + X_j`
    /// fixed and redraws `X_i` from its truncated exponential conditional.
    GibbsMcmc,
}

/// Sampler settings for `ν^r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexSamplerConfig {
    /// Draw method.
    pub method: SimplexMethod,
    /// MCMC sweeps discarded before recording.
    pub burn_in: usize,
    /// MCMC sweeps between recorded samples.
    pub thinning: usize,
    /// Proposals tried per rejection draw before giving up.
    pub max_attempts: u64,
    /// Smallest acceptable ratio of effective to nominal sample size.
    pub min_ess_fraction: f64,
}

impl Default for SimplexSamplerConfig {
    fn default() -> Self {
        Self {
            method: SimplexMethod::Rejection,
            burn_in: 200,
            thinning: 5,
            max_attempts: 1_000_000,
            min_ess_fraction: 0.1,
        }
    }
}

/// Mixing diagnostics of a Gibbs chain.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcDiagnostics {
    /// Effective sample size of each mode energy.
    pub ess: Vec<f64>,
    /// Smallest entry of `ess`.
    pub min_ess: f64,
    /// `min_ess >= min_ess_fraction * samples`.
    pub mixed: bool,
}

/// Draws from `ν^r` with optional chain diagnostics.
#[derive(Debug, Clone)]
pub struct NuBatch {
    /// Samples, each with energy `r` up to rounding.
    pub fields: Vec<SpectralField>,
    /// Present for [`SimplexMethod::GibbsMcmc`].
    pub diagnostics: Option<McmcDiagnostics>,
}

fn check_level(spec: &GibbsSpec, r: f64) -> Result<HypoexponentialDensity> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "energy level must be positive and finite, got {r}"
        )));
    }
    let rho = spec.energy_density();
    if rho.density(r) <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "energy density vanishes numerically at r = {r}"
        )));
    }
    Ok(rho)
}

fn field_from_energies<R: Rng + ?Sized>(
    spec: &GibbsSpec,
    x: &[f64],
    r: f64,
    rng: &mut R,
) -> SpectralField {
    let coeffs = x
        .iter()
        .zip(spec.lambda_prime())
        .map(|(xi, l)| {
            let amp = math::sqrt(2.0 * xi.max(0.0) / l);
            let theta = 2.0 * math::PI * rng.random::<f64>();
            Complex64::new(amp * math::cos(theta), amp * math::sin(theta))
        })
        .collect();
    let mut f =
        SpectralField::from_coeffs(spec.trunc().clone(), coeffs).expect("finite amplitudes");
    let e = energy(&f, spec.params());
    if e > 0.0 {
        f.scale(math::sqrt(r / e));
    }
    f
}

fn unit_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1]
    -math::ln(1.0 - rng.random::<f64>())
}

// Proposal: independent `Y_k ~ Exp(λ_k)` rescaled onto the simplex, whose
// density there is ∝ L^{-d} with `L = Σ λ_k x_k`. The target is ∝ e^{-L}, so
// the weight `e^{-L} L^d` is bounded by its maximum over `[λ_min r, λ_max r]`.
fn rejection_energies<R: Rng + ?Sized>(
    rates: &[f64],
    r: f64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = rates.len();
    if d == 1 {
        return Ok(alloc::vec![r]);
    }
    let df = d as f64;
    let lmin = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = rates.iter().copied().fold(0.0, f64::max);
    let l_star = df.clamp(lmin * r, lmax * r);
    let log_bound = -l_star + df * math::ln(l_star);
    let mut x = alloc::vec![0.0; d];
    for _ in 0..max_attempts {
        let mut total = 0.0;
        for (xi, l) in x.iter_mut().zip(rates) {
            *xi = unit_exp(rng) / l;
            total += *xi;
        }
        let mut big_l = 0.0;
        for (xi, l) in x.iter_mut().zip(rates) {
            *xi *= r / total;
            big_l += l * *xi;
        }
        let log_w = -big_l + df * math::ln(big_l);
        if math::ln(1.0 - rng.random::<f64>()) < log_w - log_bound {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_attempts as usize,
        residual: f64::NAN,
    })
}

// Draw from density ∝ exp(-beta x) on [0, c].
fn truncated_exp<R: Rng + ?Sized>(beta: f64, c: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if (beta * c).abs() < 1e-12 {
        return u * c;
    }
    let x = -libm::log1p(u * libm::expm1(-beta * c)) / beta;
    x.clamp(0.0, c)
}

fn gibbs_sweep<R: Rng + ?Sized>(rates: &[f64], x: &mut [f64], rng: &mut R) {
    let d = rates.len();
    for _ in 0..d {
        let i = rng.random_range(0..d);
        let mut j = rng.random_range(0..d - 1);
        if j >= i {
            j += 1;
        }
        let c = x[i] + x[j];
        let xi = truncated_exp(rates[i] - rates[j], c, rng);
        x[i] = xi;
        x[j] = c - xi;
    }
}

/// Effective sample size by Geyer's initial positive sequence.
pub(crate) fn effective_sample_size(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return n as f64;
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let acov = |lag: usize| -> f64 {
        chain[..n - lag]
            .iter()
            .zip(&chain[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n as f64
    };
    let g0 = acov(0);
    if g0 <= 0.0 {
        return n as f64;
    }
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n / 2 {
        let pair = (acov(lag) + acov(lag + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    n as f64 / tau.max(1e-12)
}

/// `count` draws from `ν^r`. Rejection draws use stream `(seed, i)` for
/// sample `i`; the Gibbs chain runs on stream `(seed, 0)`.
pub fn sample_nu_batch(
    spec: &GibbsSpec,
    r: f64,
    config: &SimplexSamplerConfig,
    seed: u64,
    count: usize,
) -> Result<NuBatch> {
    check_level(spec, r)?;
    let rates = spec.rates();
    let d = rates.len();
    match config.method {
        SimplexMethod::Rejection => {
            let mut fields = Vec::with_capacity(count);
            for i in 0..count {
                let mut g = rng::stream(seed, i as u64);
                let x = rejection_energies(rates, r, config.max_attempts, &mut g)?;
                fields.push(field_from_energies(spec, &x, r, &mut g));
            }
            Ok(NuBatch {
                fields,
                diagnostics: None,
            })
        }
        SimplexMethod::GibbsMcmc => {
            let mut g: ChaCha8Rng = rng::stream(seed, 0);
            let inv: f64 = rates.iter().map(|l| 1.0 / l).sum();
            let mut x: Vec<f64> = rates.iter().map(|l| r / (l * inv)).collect();
            let mut traces: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(count); d];
            let mut fields = Vec::with_capacity(count);
            if d > 1 {
                for _ in 0..config.burn_in {
                    gibbs_sweep(rates, &mut x, &mut g);
                }
            }
            for _ in 0..count {
                if d > 1 {
                    for _ in 0..config.thinning.max(1) {
                        gibbs_sweep(rates, &mut x, &mut g);
                    }
                }
                for (t, xi) in traces.iter_mut().zip(&x) {
                    t.push(*xi);
                }
                fields.push(field_from_energies(spec, &x, r, &mut g));
            }
            let ess: Vec<f64> = traces.iter().map(|t| effective_sample_size(t)).collect();
            let min_ess = if d > 1 {
                ess.iter().copied().fold(f64::INFINITY, f64::min)
            } else {
                count as f64
            };
            let mixed = min_ess >= config.min_ess_fraction * count as f64;
            Ok(NuBatch {
                fields,
                diagnostics: Some(McmcDiagnostics {
                    ess,
                    min_ess,
                    mixed,
                }),
            })
        }
    }
}

/// Exact draw number `index` of the rejection sampler; equal to entry
/// `index` of a [`SimplexMethod::Rejection`] batch with the same seed.
pub fn sample_nu_indexed(
    spec: &GibbsSpec,
    r: f64,
    max_attempts: u64,
    seed: u64,
    index: u64,
) -> Result<SpectralField> {
    check_level(spec, r)?;
    let mut g = rng::stream(seed, index);
    let x = rejection_energies(spec.rates(), r, max_attempts, &mut g)?;
    Ok(field_from_energies(spec, &x, r, &mut g))
}

/// One draw from `ν^r`.
pub fn sample_nu(
    spec: &GibbsSpec,
    r: f64,
    config: &SimplexSamplerConfig,
    seed: u64,
) -> Result<SpectralField> {
    let mut b = sample_nu_batch(spec, r, config, seed, 1)?;
    Ok(b.fields.pop().expect("one sample"))
}

fn mode_slot(spec: &GibbsSpec, k: ModeIndex) -> Result<usize> {
    let kk = if k.is_positive()? { k } else { k.neg() };
    spec.trunc()
        .index_of(kk)
        .ok_or(Error::ModeAbsent(k.k1, k.k2))
}

/// `E_ν^r |ω_k|² = 2 ρ_{+k}(r) / (λ'_k λ_k ρ(r))`, where `ρ_{+k}` is the
/// energy law with the rate `λ_k` added once more.
pub fn nu_second_moment(spec: &GibbsSpec, k: ModeIndex, r: f64) -> Result<f64> {
    let rho = check_level(spec, r)?;
    let i = mode_slot(spec, k)?;
    let (lp, l) = (spec.lambda_prime()[i], spec.rates()[i]);
    let plus = rho.with_extra_rate(l)?;
    Ok(2.0 * plus.density(r) / (lp * l * rho.density(r)))
}

/// Same quantity as [`nu_second_moment`], computed as
/// `(2 / (λ'_k ρ(r))) ∫_0^r ρ(r-y) e^{-λ_k y} dy` by quadrature.
pub fn nu_second_moment_quadrature(spec: &GibbsSpec, k: ModeIndex, r: f64) -> Result<f64> {
    let rho = check_level(spec, r)?;
    let i = mode_slot(spec, k)?;
    let (lp, l) = (spec.lambda_prime()[i], spec.rates()[i]);
    let gl = GaussLegendre::new(20);
    let integral = gl.integrate(|y| rho.density(r - y) * math::exp(-l * y), 0.0, r, 16);
    Ok(2.0 * integral / (lp * rho.density(r)))
}

/// `E_ν^r (ω_k conj ω_{k'})`; zero off the diagonal by phase symmetry.
pub fn nu_cross_moment(
    spec: &GibbsSpec,
    k: ModeIndex,
    k_prime: ModeIndex,
    r: f64,
) -> Result<Complex64> {
    if k == k_prime {
        return Ok(Complex64::new(nu_second_moment(spec, k, r)?, 0.0));
    }
    check_level(spec, r)?;
    mode_slot(spec, k)?;
    mode_slot(spec, k_prime)?;
    Ok(Complex64::new(0.0, 0.0))
}

/// The alternative form `(c / (λ'_k ρ(r))) ∫_0^∞ ρ(r+y) e^{-λ_k y} dy`.
/// It does not integrate against `ρ` to the `μ` moment for any single
/// constant `c`; see [`normalization_audit`].
pub fn ratio_form_second_moment(
    spec: &GibbsSpec,
    k: ModeIndex,
    r: f64,
    constant: f64,
) -> Result<f64> {
    let rho = check_level(spec, r)?;
    let i = mode_slot(spec, k)?;
    let (lp, l) = (spec.lambda_prime()[i], spec.rates()[i]);
    let gl = GaussLegendre::new(20);
    let y_max = 50.0 / l;
    let integral = gl.integrate(|y| rho.density(r + y) * math::exp(-l * y), 0.0, y_max, 32);
    Ok(constant * integral / (lp * rho.density(r)))
}

/// Per-mode check of `∫ ρ(r) E_ν^r|ω_k|² dr = E_μ|ω_k|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAudit {
    /// Mode.
    pub mode: ModeIndex,
    /// `E_μ|ω_k|² = 2/(γ λ'_k²)`.
    pub expected: f64,
    /// Integral of [`nu_second_moment`] against `ρ`.
    pub corrected: f64,
    /// Integral of [`ratio_form_second_moment`] with the supplied constant.
    pub ratio_form: f64,
    /// Constant that would make the ratio form correct for this mode:
    /// `2 / (1 - ∏_j λ_j/(λ_j + λ_k))`.
    pub required_constant: f64,
}

/// Audits both second-moment formulas against the `μ` moments, mode by mode.
pub fn normalization_audit(spec: &GibbsSpec, constant: f64) -> Result<Vec<ModeAudit>> {
    let rho = spec.energy_density();
    let mut out = Vec::with_capacity(spec.trunc().len());
    for (i, k) in spec.trunc().modes().iter().enumerate() {
        let (lp, l) = (spec.lambda_prime()[i], spec.rates()[i]);
        let expected = spec.variance()[i];
        let plus = rho.with_extra_rate(l)?;
        // ∫ ρ_{+k} over its bulk
        let mass = plus.cdf(plus.tail_bound(1e-17));
        let corrected = 2.0 * mass / (lp * l);
        let lt = rho.laplace(Complex64::new(l, 0.0)).re;
        let ratio_form = constant / lp * (1.0 - lt) / l;
        out.push(ModeAudit {
            mode: *k,
            expected,
            corrected,
            ratio_form,
            required_constant: 2.0 / (1.0 - lt),
        });
    }
    Ok(out)
}
