// Thin wrappers over libm so results are identical with and without `std`.

#[inline]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// `x^p`, by repeated multiplication when `p` is a small integer so that
/// e.g. `powf(x, 2.0) == x * x` bitwise.
pub(crate) fn powf(x: f64, p: f64) -> f64 {
    if p == libm::trunc(p) && libm::fabs(p) <= 16.0 {
        let n = p as i32;
        let mut acc = 1.0;
        for _ in 0..n.unsigned_abs() {
            acc *= x;
        }
        if n < 0 {
            1.0 / acc
        } else {
            acc
        }
    } else {
        pow(x, p)
    }
}

pub(crate) const PI: f64 = core::f64::consts::PI;
