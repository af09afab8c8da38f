//! Transform-based evaluation of the vector field.
//!
//! Computes `q = AΔφ` and `u = ∇^⊥φ` on a padded grid, forms `u·∇q`
//! pointwise, transforms back, keeps the retained modes and divides by the
//! symbol `λ'_k`. With `n >= 3R + 1` points per axis (`R` the largest retained
//! wavenumber component) the product is alias-free on the retained set.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dynamics::Tangent;
use crate::error::{Error, Result};
use crate::lattice::{ModelParams, SpectralField, Truncation};
use crate::math;

/// Reusable FFT plans for one truncation and grid size.
pub struct FastEvaluator {
    trunc: Arc<Truncation>,
    params: ModelParams,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    lambda: Vec<f64>,
}

impl core::fmt::Debug for FastEvaluator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FastEvaluator")
            .field("n", &self.n)
            .field("params", &self.params)
            .finish()
    }
}

/// Minimal alias-free grid size for a truncation.
pub fn min_grid(trunc: &Truncation) -> usize {
    3 * trunc.radius() as usize + 1
}

/// Smallest `2^a 3^b 5^c` not below `n`.
pub fn fast_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl FastEvaluator {
    /// Picks the smallest fast transform size that is alias-free.
    pub fn new(trunc: Arc<Truncation>, params: ModelParams) -> Self {
        let n = fast_size(min_grid(&trunc));
        Self::with_grid(trunc, params, n).expect("grid chosen alias-free")
    }

    /// Uses an explicit grid size; sizes that would alias are rejected.
    pub fn with_grid(trunc: Arc<Truncation>, params: ModelParams, n: usize) -> Result<Self> {
        let required = min_grid(&trunc);
        if n < required {
            return Err(Error::GridTooSmall { n, required });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let lambda = trunc
            .modes()
            .iter()
            .map(|k| params.lambda_prime(k.norm_sq()))
            .collect();
        Ok(Self {
            trunc,
            params,
            n,
            forward,
            inverse,
            lambda,
        })
    }

    /// Grid points per axis.
    pub fn grid(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, k1: i32, k2: i32) -> usize {
        let n = self.n as i32;
        (k1.rem_euclid(n) * n + k2.rem_euclid(n)) as usize
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        // rows (x2 direction)
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        // columns (x1 direction)
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    /// Evaluates `B(φ)`.
    pub fn eval(&self, field: &SpectralField) -> Result<Tangent> {
        if !(Arc::ptr_eq(field.trunc(), &self.trunc) || **field.trunc() == *self.trunc) {
            return Err(Error::TruncationMismatch);
        }
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let mut u1 = vec![zero; n * n];
        let mut u2 = vec![zero; n * n];
        let mut q1 = vec![zero; n * n];
        let mut q2 = vec![zero; n * n];
        let norm = 1.0 / (2.0 * math::PI);
        let i = Complex64::new(0.0, 1.0);
        for ((k, w), lam) in self
            .trunc
            .modes()
            .iter()
            .zip(field.coeffs())
            .zip(&self.lambda)
        {
            for (kk, ww) in [(*k, *w), (k.neg(), w.conj())] {
                let c = ww * norm;
                let q = -c * *lam;
                let p = self.pos(kk.k1, kk.k2);
                u1[p] = -i * c * kk.k2 as f64;
                u2[p] = i * c * kk.k1 as f64;
                q1[p] = i * q * kk.k1 as f64;
                q2[p] = i * q * kk.k2 as f64;
            }
        }
        for buf in [&mut u1, &mut u2, &mut q1, &mut q2] {
            self.transform(buf, &self.inverse);
        }
        let mut prod: Vec<Complex64> = (0..n * n)
            .map(|p| Complex64::new((u1[p] * q1[p] + u2[p] * q2[p]).re, 0.0))
            .collect();
        self.transform(&mut prod, &self.forward);
        let scale = 2.0 * math::PI / (n * n) as f64;
        let coeffs = self
            .trunc
            .modes()
            .iter()
            .zip(&self.lambda)
            .map(|(k, lam)| prod[self.pos(k.k1, k.k2)] * (scale / lam))
            .collect();
        SpectralField::from_coeffs(self.trunc.clone(), coeffs)
    }
}

/// One-shot convenience wrapper around [`FastEvaluator`].
pub fn eval_vector_field_fast(field: &SpectralField, params: &ModelParams) -> Result<Tangent> {
    FastEvaluator::new(field.trunc().clone(), *params).eval(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::eval_vector_field;
    use crate::lattice::{build_truncation, CoeffTable, ModeIndex};

    #[test]
    fn sizes() {
        assert_eq!(fast_size(7), 8);
        assert_eq!(fast_size(25), 25);
        assert_eq!(fast_size(13), 15);
        let t = build_truncation(64).unwrap();
        assert_eq!(min_grid(&t), 25);
    }

    #[test]
    fn too_small_grid_is_an_error() {
        let t = Arc::new(build_truncation(4).unwrap());
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            FastEvaluator::with_grid(t, p, 6).unwrap_err(),
            Error::GridTooSmall { n: 6, required: 7 }
        );
    }

    #[test]
    fn matches_direct_path_small() {
        let t = Arc::new(build_truncation(2).unwrap());
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let table = CoeffTable::new(t.clone(), p);
        let f = SpectralField::from_coeffs(
            t.clone(),
            vec![
                Complex64::new(0.3, -0.2),
                Complex64::new(-1.1, 0.4),
                Complex64::new(0.7, 0.9),
                Complex64::new(0.05, -0.6),
            ],
        )
        .unwrap();
        let direct = eval_vector_field(&f, &table).unwrap();
        let fast = eval_vector_field_fast(&f, &p).unwrap();
        for (x, y) in direct.coeffs().iter().zip(fast.coeffs()) {
            assert!((x - y).norm() < 1e-12, "{x} vs {y}");
        }
        let z = eval_vector_field_fast(&SpectralField::zeros(t.clone()), &p).unwrap();
        assert!(z.coeffs().iter().all(|c| c.norm() == 0.0));
        let one = SpectralField::from_modes(t, &[(ModeIndex::new(1, 1), Complex64::new(1.0, 2.0))])
            .unwrap();
        let b = eval_vector_field_fast(&one, &p).unwrap();
        assert!(b.coeffs().iter().all(|c| c.norm() < 1e-15));
    }
}
