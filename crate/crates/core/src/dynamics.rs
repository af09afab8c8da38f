//! The truncated vector field `B^n`, its first and second derivatives, its
//! divergence, the conservation pairings and the Hilbert–Schmidt and
//! support series.
//!
//! Real coordinates are `(Re ω_k, Im ω_k)` per positive mode in canonical
//! order: coordinate `2i` is `Re ω_i`, `2i + 1` is `Im ω_i`. Derivatives of
//! terms that reach a mode through its negative (`ω_{-j} = conj ω_j`) pick up
//! the conjugate coupling.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{CoeffTable, ModeIndex, ModelParams, Slot, SpectralField};
use crate::math;
use crate::quadrature::GaussLegendre;

/// Time derivative `dω_k/dt`, stored like a field.
pub type Tangent = SpectralField;

fn check(field: &SpectralField, table: &CoeffTable) -> Result<()> {
    if alloc::sync::Arc::ptr_eq(field.trunc(), table.trunc()) || **field.trunc() == **table.trunc()
    {
        Ok(())
    } else {
        Err(Error::TruncationMismatch)
    }
}

/// `B_k(φ) = Σ_h α_{h,k} ω_h ω_{k-h}` by direct summation over the
/// coefficient table; `h` runs over all signed retained modes with `k - h`
/// retained and nonzero, in a fixed order.
pub fn eval_vector_field(field: &SpectralField, table: &CoeffTable) -> Result<Tangent> {
    check(field, table)?;
    let mut out = SpectralField::zeros(field.trunc().clone());
    eval_into(field, table, out.coeffs_mut());
    Ok(out)
}

/// Allocation-free kernel of [`eval_vector_field`]; shapes are not checked.
pub fn eval_into(field: &SpectralField, table: &CoeffTable, out: &mut [Complex64]) {
    for (ki, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in table.row(ki) {
            acc += field.resolve(t.left) * field.resolve(t.right) * t.coeff;
        }
        *slot = acc;
    }
}

/// Dense real Jacobian of `B` in `(Re, Im)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl JacobianMatrix {
    /// Side length `2d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `∂ y_row / ∂ x_col`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    /// Row-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    fn add(&mut self, row_mode: usize, col: usize, z: Complex64) {
        self.data[2 * row_mode * self.dim + col] += z.re;
        self.data[(2 * row_mode + 1) * self.dim + col] += z.im;
    }
}

// ∂ω̃/∂Re ω = 1, ∂ω̃/∂Im ω = ±i depending on conjugation.
#[inline]
fn partials(slot: Slot) -> [Complex64; 2] {
    let i = if slot.conj { -1.0 } else { 1.0 };
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, i)]
}

/// Analytic Jacobian of `B` at `field`.
pub fn jacobian(field: &SpectralField, table: &CoeffTable) -> Result<JacobianMatrix> {
    check(field, table)?;
    let d = field.trunc().len();
    let mut jac = JacobianMatrix {
        dim: 2 * d,
        data: vec![0.0; 4 * d * d],
    };
    for ki in 0..d {
        for t in table.row(ki) {
            let wl = field.resolve(t.left);
            let wr = field.resolve(t.right);
            for (c, p) in partials(t.left).into_iter().enumerate() {
                jac.add(ki, 2 * t.left.index + c, p * wr * t.coeff);
            }
            for (c, p) in partials(t.right).into_iter().enumerate() {
                jac.add(ki, 2 * t.right.index + c, p * wl * t.coeff);
            }
        }
    }
    Ok(jac)
}

/// Field-independent second derivative `D_{e_i} D_{e_j} B` (holomorphic
/// directions): `α_{j,i+j} + α_{i,i+j}` at `k = i + j` when that mode is
/// retained, zero elsewhere.
pub fn hessian_entry(i: ModeIndex, j: ModeIndex, table: &CoeffTable) -> Result<Tangent> {
    let trunc = table.trunc();
    for m in [i, j] {
        if !m.is_positive()? || trunc.index_of(m).is_none() {
            return Err(Error::ModeAbsent(m.k1, m.k2));
        }
    }
    let mut out = SpectralField::zeros(trunc.clone());
    let k = i.add(j);
    if let Some(ki) = trunc.index_of(k) {
        let a = table.get(j, k).unwrap_or(0.0);
        let b = table.get(i, k).unwrap_or(0.0);
        out.coeffs_mut()[ki] = Complex64::new(a + b, 0.0);
    }
    Ok(out)
}

/// `Σ_k ∂Re B_k/∂Re ω_k + ∂Im B_k/∂Im ω_k`, from the table only.
pub fn divergence(field: &SpectralField, table: &CoeffTable) -> Result<f64> {
    check(field, table)?;
    let mut total = 0.0;
    for ki in 0..field.trunc().len() {
        for t in table.row(ki) {
            if t.left.index == ki {
                let [pr, pi] = partials(t.left);
                let z = field.resolve(t.right) * t.coeff;
                total += (pr * z).re + (pi * z).im;
            }
            if t.right.index == ki {
                let [pr, pi] = partials(t.right);
                let z = field.resolve(t.left) * t.coeff;
                total += (pr * z).re + (pi * z).im;
            }
        }
    }
    Ok(total)
}

fn pairing(field: &SpectralField, tangent: &Tangent, params: &ModelParams, p: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut scale = 0.0;
    for ((k, b), w) in field
        .trunc()
        .modes()
        .iter()
        .zip(tangent.coeffs())
        .zip(field.coeffs())
    {
        let weight = math::powf(params.lambda_prime(k.norm_sq()), p);
        value += weight * (b * w.conj()).re;
        scale += weight * math::hypot(b.re, b.im) * math::hypot(w.re, w.im);
    }
    (value, scale)
}

/// A conservation pairing together with its natural magnitude
/// `Σ_k w_k |B_k| |ω_k|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    /// `Σ_k w_k Re(B_k conj ω_k)`.
    pub value: f64,
    /// `Σ_k w_k |B_k| |ω_k|`.
    pub scale: f64,
}

impl Pairing {
    /// `|value| / scale`, or `|value|` when the scale vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.abs() / self.scale
        } else {
            self.value.abs()
        }
    }
}

/// `d S / dt` along the flow: `Σ_k λ'_k² Re(B_k conj ω_k)`.
pub fn enstrophy_pairing(field: &SpectralField, table: &CoeffTable) -> Result<Pairing> {
    let b = eval_vector_field(field, table)?;
    let (value, scale) = pairing(field, &b, table.params(), 2.0);
    Ok(Pairing { value, scale })
}

/// `d E / dt` along the flow: `Σ_k λ'_k Re(B_k conj ω_k)`.
pub fn energy_pairing(field: &SpectralField, table: &CoeffTable) -> Result<Pairing> {
    let b = eval_vector_field(field, table)?;
    let (value, scale) = pairing(field, &b, table.params(), 1.0);
    Ok(Pairing { value, scale })
}

/// Truncated `‖∇B(φ)‖²_{HS}` with values measured in `H^{1-α,s}`.
pub fn hs_norm_grad(field: &SpectralField, table: &CoeffTable, alpha: f64) -> Result<f64> {
    check(field, table)?;
    let params = table.params();
    let modes = table.trunc().modes();
    let mut total = 0.0;
    for &k in modes {
        let wk = math::powf(params.lambda_prime(k.norm_sq()), 1.0 - alpha);
        for &j in modes {
            let rest = k.sub(j);
            if rest.is_zero() {
                continue;
            }
            let Ok(w) = field.lookup(rest) else { continue };
            let coeff = table.get(j, k).unwrap_or(0.0) + table.get(rest, k).unwrap_or(0.0);
            let wj = math::powf(params.lambda_prime(j.norm_sq()), 2.0);
            total += wk / wj * coeff * coeff * w.norm_sqr();
        }
    }
    Ok(total)
}

/// Truncated `‖∇²B‖²_{HS}` (field independent).
pub fn hs_norm_hess(table: &CoeffTable, alpha: f64) -> f64 {
    let params = table.params();
    let modes = table.trunc().modes();
    let mut total = 0.0;
    for &i in modes {
        let wi = math::powf(params.lambda_prime(i.norm_sq()), 2.0);
        for &j in modes {
            let k = i.add(j);
            if table.trunc().index_of(k).is_none() {
                continue;
            }
            let wj = math::powf(params.lambda_prime(j.norm_sq()), 2.0);
            let wk = math::powf(params.lambda_prime(k.norm_sq()), 1.0 - alpha);
            let coeff = table.get(j, k).unwrap_or(0.0) + table.get(i, k).unwrap_or(0.0);
            total += wk / (wi * wj) * coeff * coeff;
        }
    }
    total
}

/// Partial sum and tail bound of `E_μ ‖φ‖²_{1-α,s} = (2/γ) Σ_k λ'_k^{-(1+α)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportSeries {
    /// Sum over `0 < |k|² <= N`, positive `k`.
    pub partial: f64,
    /// Upper bound on the remainder over `|k|² > N`.
    pub tail_bound: f64,
}

/// Evaluates [`SupportSeries`]. Requires `α > -s/(s+1)` (and `α > 0` when
/// `a = 0`, where the filter is inactive).
pub fn support_series(alpha: f64, params: &ModelParams, n: i64) -> Result<SupportSeries> {
    let filtered = params.a != 0.0 && params.s > 0.0;
    let threshold = if filtered {
        -params.s / (params.s + 1.0)
    } else {
        0.0
    };
    if alpha.is_nan() || alpha <= threshold {
        return Err(Error::Divergent { alpha, threshold });
    }
    let trunc = crate::lattice::Truncation::disc(n)?;
    let g = |t2: f64| {
        2.0 / params.gamma
            * math::pow(t2, -(1.0 + alpha))
            * math::pow(1.0 + params.a * params.a * t2, -params.s * (1.0 + alpha))
    };
    let partial = trunc.modes().iter().map(|k| g(k.norm_sq() as f64)).sum();

    // Each lattice point k owns the unit square centred on it; on that square
    // |x| <= |k| + δ with δ = √2/2, and g is decreasing, so
    // Σ_{|k|>=R} g(|k|) <= ∫_{|x|>=R-δ} g(max(R, |x|-δ)) dx. Halve for k > 0.
    let r = math::sqrt((n + 1) as f64);
    let delta = core::f64::consts::FRAC_1_SQRT_2;
    let annulus = math::PI * ((r + delta) * (r + delta) - (r - delta) * (r - delta));
    let ring = g(r * r) * annulus;
    // 2π ∫_R^∞ g(t)(t+δ) dt via t = R e^v
    let q = 2.0 * (1.0 + alpha) * if filtered { 1.0 + params.s } else { 1.0 };
    let gl = GaussLegendre::new(16);
    let v_max = 60.0 / (q - 2.0).max(1e-3);
    let v_max = v_max.min(200.0);
    let body = gl.integrate(
        |v| {
            let t = r * math::exp(v);
            g(t * t) * (t + delta) * t
        },
        0.0,
        v_max,
        400,
    );
    // remainder beyond T by the pure power-law envelope g(t) <= C t^{-q}
    let t_end = r * math::exp(v_max);
    let c_env = 2.0 / params.gamma
        * if filtered {
            math::pow(params.a * params.a, -params.s * (1.0 + alpha))
        } else {
            1.0
        };
    let rem = c_env
        * (math::pow(t_end, 2.0 - q) / (q - 2.0) + delta * math::pow(t_end, 1.0 - q) / (q - 1.0));
    let tail_bound = 0.5 * (ring + 2.0 * math::PI * (body + rem));
    Ok(SupportSeries {
        partial,
        tail_bound,
    })
}

/// `‖φ‖²_{1-α,s}`, the norm in which convergence and recurrence are measured.
pub fn negative_norm_sq(field: &SpectralField, params: &ModelParams, alpha: f64) -> f64 {
    field.sobolev_norm_sq(params, 1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_truncation, Truncation};
    use alloc::sync::Arc;
    use rand::{Rng, SeedableRng};

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    fn random_field(trunc: &Arc<Truncation>, seed: u64) -> SpectralField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..trunc.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectralField::from_coeffs(trunc.clone(), coeffs).unwrap()
    }

    #[test]
    fn single_mode_is_steady() {
        let t = Arc::new(build_truncation(8).unwrap());
        let table = CoeffTable::new(t.clone(), params());
        for k in t.modes() {
            let f =
                SpectralField::from_modes(t.clone(), &[(*k, Complex64::new(0.3, -1.1))]).unwrap();
            let b = eval_vector_field(&f, &table).unwrap();
            assert!(b.coeffs().iter().all(|z| z.norm() == 0.0), "mode {k}");
        }
        let z = eval_vector_field(&SpectralField::zeros(t.clone()), &table).unwrap();
        assert!(z.coeffs().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn truncation_mismatch_is_rejected() {
        let t2 = Arc::new(build_truncation(2).unwrap());
        let t4 = Arc::new(build_truncation(4).unwrap());
        let table = CoeffTable::new(t4, params());
        assert_eq!(
            eval_vector_field(&SpectralField::zeros(t2), &table).unwrap_err(),
            Error::TruncationMismatch
        );
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let t = Arc::new(build_truncation(2).unwrap());
        let table = CoeffTable::new(t.clone(), params());
        let f = random_field(&t, 7);
        let jac = jacobian(&f, &table).unwrap();
        let h = 1e-5;
        let d = t.len();
        for col in 0..2 * d {
            let mut plus = f.clone();
            let mut minus = f.clone();
            let dz = if col % 2 == 0 {
                Complex64::new(h, 0.0)
            } else {
                Complex64::new(0.0, h)
            };
            plus.coeffs_mut()[col / 2] += dz;
            minus.coeffs_mut()[col / 2] -= dz;
            let bp = eval_vector_field(&plus, &table).unwrap();
            let bm = eval_vector_field(&minus, &table).unwrap();
            for ki in 0..d {
                let fd = (bp.coeffs()[ki] - bm.coeffs()[ki]) / (2.0 * h);
                assert!((jac.get(2 * ki, col) - fd.re).abs() <= 1e-6);
                assert!((jac.get(2 * ki + 1, col) - fd.im).abs() <= 1e-6);
            }
        }
        let j0 = jacobian(&SpectralField::zeros(t), &table).unwrap();
        assert!(j0.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn trace_and_divergence_vanish() {
        for n in [1, 2, 4, 8] {
            let t = Arc::new(build_truncation(n).unwrap());
            let table = CoeffTable::new(t.clone(), params());
            for seed in 0..100 {
                let f = random_field(&t, seed);
                assert!(jacobian(&f, &table).unwrap().trace().abs() <= 1e-12);
                assert!(divergence(&f, &table).unwrap().abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn hessian_entries() {
        let t = Arc::new(build_truncation(8).unwrap());
        let table = CoeffTable::new(t.clone(), params());
        let m = ModeIndex::new;
        let h = hessian_entry(m(0, 1), m(0, 1), &table).unwrap();
        assert!(h.coeffs().iter().all(|z| z.norm() == 0.0));
        let h = hessian_entry(m(1, 0), m(1, 1), &table).unwrap();
        let k = t.index_of(m(2, 1)).unwrap();
        let expect = table.get(m(1, 1), m(2, 1)).unwrap() + table.get(m(1, 0), m(2, 1)).unwrap();
        assert_eq!(h.coeffs()[k].re, expect);
        assert_ne!(expect, 0.0);
        // difference of Jacobian columns at two fields differing along Re ω_(1,0)
        let f1 = random_field(&t, 3);
        let mut f2 = f1.clone();
        let step = 0.37;
        let i = t.index_of(m(1, 0)).unwrap();
        let j = t.index_of(m(1, 1)).unwrap();
        f2.coeffs_mut()[i] += Complex64::new(step, 0.0);
        let j1 = jacobian(&f1, &table).unwrap();
        let j2 = jacobian(&f2, &table).unwrap();
        let fd = (j2.get(2 * k, 2 * j) - j1.get(2 * k, 2 * j)) / step;
        assert!((fd - expect).abs() < 1e-12);
        for a in t.modes() {
            for b in t.modes() {
                assert_eq!(
                    hessian_entry(*a, *b, &table).unwrap(),
                    hessian_entry(*b, *a, &table).unwrap()
                );
            }
        }
    }

    #[test]
    fn pairings_vanish() {
        for s in [0.0, 1.0] {
            let p = ModelParams::new(1.0, s, 1.0).unwrap();
            let t = Arc::new(build_truncation(8).unwrap());
            let table = CoeffTable::new(t.clone(), p);
            for seed in 0..200 {
                let f = random_field(&t, seed);
                assert!(energy_pairing(&f, &table).unwrap().relative() <= 1e-12);
                assert!(enstrophy_pairing(&f, &table).unwrap().relative() <= 1e-12);
            }
            let z = SpectralField::zeros(t);
            assert_eq!(energy_pairing(&z, &table).unwrap().value, 0.0);
        }
    }

    #[test]
    fn ratio_form_breaks_enstrophy_conservation_when_filtered() {
        let t = Arc::new(build_truncation(8).unwrap());
        let table = CoeffTable::with_coeff(t.clone(), params(), crate::lattice::ratio_form_coeff);
        let f = random_field(&t, 11);
        assert!(enstrophy_pairing(&f, &table).unwrap().relative() > 1e-3);
    }

    #[test]
    fn hs_grad_is_monotone_in_truncation() {
        let t2 = Arc::new(build_truncation(2).unwrap());
        let t4 = Arc::new(build_truncation(4).unwrap());
        let f = random_field(&t2, 5);
        let g2 = hs_norm_grad(&f, &CoeffTable::new(t2.clone(), params()), 3.0).unwrap();
        let g4 = hs_norm_grad(&f.embed(&t4), &CoeffTable::new(t4, params()), 3.0).unwrap();
        assert!(g4 >= g2 && g2 > 0.0);
        let z = hs_norm_grad(
            &SpectralField::zeros(t2.clone()),
            &CoeffTable::new(t2, params()),
            3.0,
        )
        .unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn hs_hess_partial_sums_settle() {
        let sums: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                hs_norm_hess(
                    &CoeffTable::new(Arc::new(build_truncation(n).unwrap()), params()),
                    3.0,
                )
            })
            .collect();
        assert!(sums[0] <= sums[1] && sums[1] <= sums[2]);
        assert!((sums[2] - sums[1]) / sums[2] < 0.05, "{sums:?}");
    }

    #[test]
    fn support_series_values() {
        let s = support_series(1.0, &params(), 1).unwrap();
        // two modes, each 1/(1·(1+1)²) = 1/4, times 2/γ
        assert!((s.partial - 1.0).abs() < 1e-15);
        assert!(s.tail_bound > 0.0 && s.tail_bound.is_finite());
        let mut prev = 0.0;
        for n in [1, 2, 4, 8, 16, 32, 64] {
            let s = support_series(1.0, &params(), n).unwrap();
            assert!(s.partial >= prev);
            prev = s.partial;
        }
        // bound is an actual upper bound on the remainder
        let far = support_series(1.0, &params(), 4000).unwrap().partial;
        for n in [1, 4, 16, 64] {
            let s = support_series(1.0, &params(), n).unwrap();
            assert!(far - s.partial <= s.tail_bound, "n={n}");
        }
        assert!(matches!(
            support_series(-0.5, &params(), 4),
            Err(Error::Divergent { .. })
        ));
        assert!(support_series(-0.4, &params(), 4).is_ok());
    }
}
