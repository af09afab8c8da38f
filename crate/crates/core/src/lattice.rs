//! Fourier-mode bookkeeping: model parameters, the positive half lattice,
//! disc truncations, spectral fields, quadratic invariants and the
//! interaction coefficients of the truncated vector field.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

/// Parameters of the averaged-Euler model and of the Gibbs measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Filter length scale.
    pub a: f64,
    /// Filter exponent; `s == 0` is the Euler system.
    pub s: f64,
    /// Inverse temperature multiplying the enstrophy.
    pub gamma: f64,
}

impl ModelParams {
    /// Validates and builds a parameter set.
    pub fn new(a: f64, s: f64, gamma: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidParams(format!("a must be finite, got {a}")));
        }
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "s must be finite and >= 0, got {s}"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must be finite and > 0, got {gamma}"
            )));
        }
        Ok(Self { a, s, gamma })
    }

    /// `(1 + a²|k|²)^s` for a squared wavenumber.
    #[inline]
    pub fn filter(&self, k2: i64) -> f64 {
        math::pow(1.0 + self.a * self.a * k2 as f64, self.s)
    }

    /// `λ'_k = |k|² (1 + a²|k|²)^s`.
    #[inline]
    pub fn lambda_prime(&self, k2: i64) -> f64 {
        k2 as f64 * self.filter(k2)
    }
}

/// A wavevector of the integer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex {
    /// First component.
    pub k1: i32,
    /// Second component.
    pub k2: i32,
}

impl ModeIndex {
    /// Builds a wavevector (the zero vector is representable but rejected by
    /// every operation that needs a mode).
    pub const fn new(k1: i32, k2: i32) -> Self {
        Self { k1, k2 }
    }

    /// `true` for `(0,0)`.
    pub const fn is_zero(self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    /// Squared Euclidean norm `|k|²`.
    pub const fn norm_sq(self) -> i64 {
        self.k1 as i64 * self.k1 as i64 + self.k2 as i64 * self.k2 as i64
    }

    /// Rotated vector `k^⊥ = (-k2, k1)`.
    pub const fn perp(self) -> Self {
        Self::new(-self.k2, self.k1)
    }

    /// Dot product.
    pub const fn dot(self, other: Self) -> i64 {
        self.k1 as i64 * other.k1 as i64 + self.k2 as i64 * other.k2 as i64
    }

    /// `self - other`.
    pub const fn sub(self, other: Self) -> Self {
        Self::new(self.k1 - other.k1, self.k2 - other.k2)
    }

    /// `self + other`.
    pub const fn add(self, other: Self) -> Self {
        Self::new(self.k1 + other.k1, self.k2 + other.k2)
    }

    /// `-self`.
    pub const fn neg(self) -> Self {
        Self::new(-self.k1, -self.k2)
    }

    /// Membership in the positive half lattice. The zero mode is rejected.
    pub fn is_positive(self) -> Result<bool> {
        if self.is_zero() {
            return Err(Error::ZeroMode);
        }
        Ok(self.k1 > 0 || (self.k1 == 0 && self.k2 > 0))
    }
}

impl core::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

/// Free-function form of [`ModeIndex::is_positive`].
pub fn is_positive(k: ModeIndex) -> Result<bool> {
    k.is_positive()
}

/// Position of a signed mode in the positive-mode list, plus whether the
/// coefficient must be conjugated (the mode is the negative of a stored one).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    /// Index into the canonical mode order.
    pub index: usize,
    /// `true` when the signed mode is `-modes[index]`.
    pub conj: bool,
}

/// The retained set of positive modes, in lexicographic `(k1, k2)` order.
#[derive(Debug, Clone)]
pub struct Truncation {
    n: i64,
    radius: i32,
    disc: bool,
    modes: Vec<ModeIndex>,
    // dense lookup over [-radius, radius]²: 0 = absent, +(i+1) = mode i, -(i+1) = conj of mode i
    slots: Vec<i32>,
}

impl PartialEq for Truncation {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes
    }
}

impl Truncation {
    /// All positive modes with `0 < |k|² <= n`.
    pub fn disc(n: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidTruncation(n));
        }
        let r = int_sqrt(n) as i32;
        let mut modes = Vec::new();
        for k1 in 0..=r {
            for k2 in -r..=r {
                let k = ModeIndex::new(k1, k2);
                if !k.is_zero() && k.norm_sq() <= n && k.is_positive()? {
                    modes.push(k);
                }
            }
        }
        Ok(Self::assemble(n, true, modes))
    }

    /// An arbitrary finite set of modes, given by one representative of each
    /// `±k` pair. Used for sub-truncations in tests and measure analytics;
    /// the dynamics is conservative on any such set.
    pub fn from_modes(modes: &[ModeIndex]) -> Result<Self> {
        let mut out = Vec::with_capacity(modes.len());
        for &k in modes {
            let k = if k.is_positive()? { k } else { k.neg() };
            out.push(k);
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidArgument("empty mode set".into()));
        }
        let n = out.iter().map(|k| k.norm_sq()).max().unwrap_or(1);
        let is_disc = Self::disc(n).map(|d| d.modes == out).unwrap_or(false);
        Ok(Self::assemble(n, is_disc, out))
    }

    fn assemble(n: i64, disc: bool, modes: Vec<ModeIndex>) -> Self {
        let radius = modes
            .iter()
            .map(|k| k.k1.abs().max(k.k2.abs()))
            .max()
            .unwrap_or(0);
        let side = (2 * radius + 1) as usize;
        let mut slots = vec![0i32; side * side];
        for (i, k) in modes.iter().enumerate() {
            let tag = i as i32 + 1;
            slots[Self::grid_pos(radius, *k)] = tag;
            slots[Self::grid_pos(radius, k.neg())] = -tag;
        }
        Self {
            n,
            radius,
            disc,
            modes,
            slots,
        }
    }

    #[inline]
    fn grid_pos(radius: i32, k: ModeIndex) -> usize {
        let side = 2 * radius + 1;
        ((k.k1 + radius) * side + (k.k2 + radius)) as usize
    }

    /// Largest retained `|k|²`.
    pub fn n(&self) -> i64 {
        self.n
    }

    /// Largest retained `max(|k1|, |k2|)`.
    pub fn radius(&self) -> i32 {
        self.radius
    }

    /// `true` when the set is exactly the disc `|k|² <= n`.
    pub fn is_disc(&self) -> bool {
        self.disc
    }

    /// Number of positive modes `d`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    /// Always `false`: truncations are nonempty.
    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Positive modes in canonical order.
    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    /// Resolves a signed mode to its storage slot.
    #[inline]
    pub fn slot(&self, k: ModeIndex) -> Option<Slot> {
        if k.k1.abs() > self.radius || k.k2.abs() > self.radius {
            return None;
        }
        match self.slots[Self::grid_pos(self.radius, k)] {
            0 => None,
            t if t > 0 => Some(Slot {
                index: (t - 1) as usize,
                conj: false,
            }),
            t => Some(Slot {
                index: (-t - 1) as usize,
                conj: true,
            }),
        }
    }

    /// Index of a positive retained mode.
    pub fn index_of(&self, k: ModeIndex) -> Option<usize> {
        self.slot(k).filter(|s| !s.conj).map(|s| s.index)
    }

    /// Whether `k` or `-k` is retained.
    pub fn contains(&self, k: ModeIndex) -> bool {
        self.slot(k).is_some()
    }
}

/// Free-function form of [`Truncation::disc`].
pub fn build_truncation(n: i64) -> Result<Truncation> {
    Truncation::disc(n)
}

fn int_sqrt(n: i64) -> i64 {
    let mut r = math::sqrt(n as f64) as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Stream-function coefficients on the positive modes of a truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    trunc: Arc<Truncation>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// The zero field.
    pub fn zeros(trunc: Arc<Truncation>) -> Self {
        let d = trunc.len();
        Self {
            trunc,
            coeffs: vec![Complex64::new(0.0, 0.0); d],
        }
    }

    /// Wraps coefficients given in canonical mode order.
    pub fn from_coeffs(trunc: Arc<Truncation>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != trunc.len() {
            return Err(Error::DimensionMismatch {
                expected: trunc.len(),
                got: coeffs.len(),
            });
        }
        if coeffs
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self { trunc, coeffs })
    }

    /// Builds a field from `(mode, value)` pairs; unspecified modes are zero.
    /// A negative mode stores the conjugate on its positive partner.
    pub fn from_modes(trunc: Arc<Truncation>, values: &[(ModeIndex, Complex64)]) -> Result<Self> {
        let mut f = Self::zeros(trunc);
        for &(k, v) in values {
            f.set(k, v)?;
        }
        Ok(f)
    }

    /// Sets `ω_k` (and implicitly `ω_{-k}`).
    pub fn set(&mut self, k: ModeIndex, value: Complex64) -> Result<()> {
        if k.is_zero() {
            return Err(Error::ZeroMode);
        }
        let slot = self.trunc.slot(k).ok_or(Error::ModeAbsent(k.k1, k.k2))?;
        self.coeffs[slot.index] = if slot.conj { value.conj() } else { value };
        Ok(())
    }

    /// The truncation the field lives on.
    pub fn trunc(&self) -> &Arc<Truncation> {
        &self.trunc
    }

    /// Coefficients in canonical order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mutable coefficients in canonical order.
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Consumes the field, returning its coefficients.
    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// `ω_k` for any signed retained mode; `Err(ModeAbsent)` outside the
    /// truncation.
    pub fn lookup(&self, k: ModeIndex) -> Result<Complex64> {
        if k.is_zero() {
            return Err(Error::ZeroMode);
        }
        let slot = self.trunc.slot(k).ok_or(Error::ModeAbsent(k.k1, k.k2))?;
        Ok(self.resolve(slot))
    }

    /// Value stored behind a slot, conjugated when needed.
    #[inline]
    pub fn resolve(&self, slot: Slot) -> Complex64 {
        let c = self.coeffs[slot.index];
        if slot.conj {
            c.conj()
        } else {
            c
        }
    }

    /// Same shape, shares the truncation.
    pub fn same_trunc(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.trunc, &other.trunc) || *self.trunc == *other.trunc
    }

    /// Projects / zero-extends onto another truncation.
    pub fn embed(&self, target: &Arc<Truncation>) -> Self {
        let mut out = Self::zeros(target.clone());
        for (k, c) in self.trunc.modes().iter().zip(&self.coeffs) {
            if let Some(i) = target.index_of(*k) {
                out.coeffs[i] = *c;
            }
        }
        out
    }

    /// `Σ_k λ'_k^p |ω_k|²`, the squared `H^{p,s}` norm.
    pub fn sobolev_norm_sq(&self, params: &ModelParams, p: f64) -> f64 {
        self.trunc
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| math::powf(params.lambda_prime(k.norm_sq()), p) * c.norm_sqr())
            .sum()
    }

    /// Squared `H^{p,s}` distance to another field on the same truncation.
    pub fn distance_sq(&self, other: &Self, params: &ModelParams, p: f64) -> Result<f64> {
        if !self.same_trunc(other) {
            return Err(Error::TruncationMismatch);
        }
        Ok(self
            .trunc
            .modes()
            .iter()
            .zip(self.coeffs.iter().zip(&other.coeffs))
            .map(|(k, (x, y))| math::powf(params.lambda_prime(k.norm_sq()), p) * (x - y).norm_sqr())
            .sum())
    }

    /// Multiplies every coefficient by a real factor.
    pub fn scale(&mut self, c: f64) {
        for z in &mut self.coeffs {
            *z *= c;
        }
    }

    /// `self + c * other`.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        for (z, w) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *z += w * c;
        }
    }

    /// `true` when every coefficient is finite.
    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `|k|^{2p} (1 + a²|k|²)^{ps}`; for integer `p` the `p = 2` weight is the
/// exact square of the `p = 1` weight.
pub fn sobolev_weight(k: ModeIndex, p: f64, params: &ModelParams) -> Result<f64> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    Ok(math::powf(params.lambda_prime(k.norm_sq()), p))
}

/// `E = ½ ‖φ‖²_{1,s}`.
pub fn energy(field: &SpectralField, params: &ModelParams) -> f64 {
    0.5 * field.sobolev_norm_sq(params, 1.0)
}

/// `S = ½ ‖φ‖²_{2,s}`.
pub fn enstrophy(field: &SpectralField, params: &ModelParams) -> f64 {
    0.5 * field.sobolev_norm_sq(params, 2.0)
}

/// Gradient of the energy in the orthonormal `H^{2,s}` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradient {
    /// `2|ω_k|` per positive mode.
    pub per_mode: Vec<f64>,
    /// `Σ_k 4|ω_k|²`.
    pub norm_sq: f64,
}

/// Energy gradient evaluated on the normalised basis `e_k / λ'_k`.
pub fn energy_gradient(field: &SpectralField, _params: &ModelParams) -> EnergyGradient {
    let per_mode: Vec<f64> = field
        .coeffs()
        .iter()
        .map(|c| 2.0 * math::hypot(c.re, c.im))
        .collect();
    let norm_sq = field.coeffs().iter().map(|c| 4.0 * c.norm_sqr()).sum();
    EnergyGradient { per_mode, norm_sq }
}

/// Interaction coefficient of the Galerkin-truncated vector field,
///
/// `α_{h,k} = (h^⊥·k) (λ'_{k-h} - λ'_h) / (4π λ'_k)`,
///
/// so that `dω_k/dt = Σ_h α_{h,k} ω_h ω_{k-h}` with `h` over all signed
/// retained modes. The coefficient is symmetric under `h ↔ k-h`; for `s = 0`
/// it equals `-(1/2π)[(h^⊥·k)(h·k)/|k|² - ½(h^⊥·k)]`.
pub fn alpha_coeff(h: ModeIndex, k: ModeIndex, params: &ModelParams) -> Result<f64> {
    if h.is_zero() || k.is_zero() {
        return Err(Error::ZeroMode);
    }
    let rest = k.sub(h);
    if rest.is_zero() {
        return Err(Error::DegeneratePair);
    }
    let cross = h.perp().dot(k);
    if cross == 0 {
        return Ok(0.0);
    }
    let diff = params.lambda_prime(rest.norm_sq()) - params.lambda_prime(h.norm_sq());
    Ok(cross as f64 * diff / (4.0 * math::PI * params.lambda_prime(k.norm_sq())))
}

/// The bracket-times-filter-ratio coefficient
/// `(1/2π)[(h^⊥·k)(h·k)/|k|² - ½(h^⊥·k)] (1+a²|k-h|²)^s / (1+a²|k|²)^s`.
///
/// It is `-alpha_coeff` when `s = 0`; for `s > 0` the quadratic vector field
/// it generates does not conserve the enstrophy, so it is kept only for
/// comparison.
pub fn ratio_form_coeff(h: ModeIndex, k: ModeIndex, params: &ModelParams) -> Result<f64> {
    if h.is_zero() || k.is_zero() {
        return Err(Error::ZeroMode);
    }
    let rest = k.sub(h);
    if rest.is_zero() {
        return Err(Error::DegeneratePair);
    }
    let cross = h.perp().dot(k) as f64;
    let bracket = cross * h.dot(k) as f64 / k.norm_sq() as f64 - 0.5 * cross;
    let ratio = params.filter(rest.norm_sq()) / params.filter(k.norm_sq());
    Ok(bracket * ratio / (2.0 * math::PI))
}

/// One term of the convolution for output mode `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triad {
    /// Signed mode `h`.
    pub h: ModeIndex,
    /// Storage slot of `h`.
    pub left: Slot,
    /// Storage slot of `k - h`.
    pub right: Slot,
    /// `α_{h,k}`.
    pub coeff: f64,
}

/// Precomputed `α_{h,k}` for every admissible pair of a truncation.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    params: ModelParams,
    trunc: Arc<Truncation>,
    rows: Vec<Vec<Triad>>,
}

impl CoeffTable {
    /// Tabulates the conservative coefficients [`alpha_coeff`].
    pub fn new(trunc: Arc<Truncation>, params: ModelParams) -> Self {
        Self::with_coeff(trunc, params, alpha_coeff)
    }

    /// Tabulates an arbitrary coefficient rule over the same admissible pairs.
    pub fn with_coeff(
        trunc: Arc<Truncation>,
        params: ModelParams,
        rule: fn(ModeIndex, ModeIndex, &ModelParams) -> Result<f64>,
    ) -> Self {
        let r = trunc.radius();
        let rows = trunc
            .modes()
            .iter()
            .map(|&k| {
                let mut row = Vec::new();
                for h1 in -r..=r {
                    for h2 in -r..=r {
                        let h = ModeIndex::new(h1, h2);
                        if h.is_zero() || h == k {
                            continue;
                        }
                        let (Some(left), Some(right)) = (trunc.slot(h), trunc.slot(k.sub(h)))
                        else {
                            continue;
                        };
                        // admissible pair: h and k-h both nonzero and retained
                        let coeff = rule(h, k, &params).expect("admissible pair");
                        row.push(Triad {
                            h,
                            left,
                            right,
                            coeff,
                        });
                    }
                }
                row
            })
            .collect();
        Self {
            params,
            trunc,
            rows,
        }
    }

    /// Model parameters the table was built with.
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// The truncation.
    pub fn trunc(&self) -> &Arc<Truncation> {
        &self.trunc
    }

    /// All triads feeding the positive mode with canonical index `k_index`.
    pub fn row(&self, k_index: usize) -> &[Triad] {
        &self.rows[k_index]
    }

    /// `α_{h,k}` for a signed `h` and positive retained `k`, when admissible.
    pub fn get(&self, h: ModeIndex, k: ModeIndex) -> Option<f64> {
        let ki = self.trunc.index_of(k)?;
        self.rows[ki].iter().find(|t| t.h == h).map(|t| t.coeff)
    }

    /// Total number of stored pairs.
    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `true` when no pair is admissible (e.g. a single-mode truncation).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Samples `φ(x) = Σ_k ω_k e_k(x)` on an `n × n` grid over `[0, 2π)²`.
/// Output is row-major with `x1` the slow index. The imaginary part of the
/// reconstruction is checked against `1e-12` and discarded.
pub fn to_physical(field: &SpectralField, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be >= 1".into()));
    }
    let trunc = field.trunc();
    let step = 2.0 * math::PI / n as f64;
    let mut signed: Vec<(ModeIndex, Complex64)> = Vec::with_capacity(2 * trunc.len());
    for (k, c) in trunc.modes().iter().zip(field.coeffs()) {
        signed.push((*k, *c));
        signed.push((k.neg(), c.conj()));
    }
    let mut out = Vec::with_capacity(n * n);
    let mut worst: f64 = 0.0;
    let scale = 1.0 / (2.0 * math::PI);
    for i in 0..n {
        let x1 = i as f64 * step;
        for j in 0..n {
            let x2 = j as f64 * step;
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, c) in &signed {
                let phase = k.k1 as f64 * x1 + k.k2 as f64 * x2;
                acc += c * Complex64::new(math::cos(phase), math::sin(phase));
            }
            acc *= scale;
            worst = worst.max(acc.im.abs());
            out.push(acc.re);
        }
    }
    if worst > 1e-12 {
        return Err(Error::SymmetryBroken(worst));
    }
    Ok(out)
}
