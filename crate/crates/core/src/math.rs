//! Thin wrappers over `libm` so that every build (with or without `std`) uses
//! the same elementary functions.

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
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
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// `x^y` for `x >= 0`, with the integer exponents 1, 2 and 4 taken exactly.
#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    if y == 2.0 {
        x * x
    } else if y == 1.0 {
        x
    } else if y == 4.0 {
        let s = x * x;
        s * s
    } else if x == 0.0 {
        if y == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        libm::pow(x, y)
    }
}

#[inline]
pub(crate) fn powi(x: f64, k: i32) -> f64 {
    let mut acc = 1.0;
    let mut base = if k < 0 { 1.0 / x } else { x };
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}
