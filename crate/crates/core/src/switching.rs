//! Sign-type switching functions shared by the estimator and the torque law.

/// Signum with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Saturated sign: `x / width` clamped to `[-1, 1]`, plain [`sgn`] when
/// `width <= 0`.
///
/// With `width = h * k * g`, where `g` is the sensitivity of `x` to the
/// state being driven at rate `-k * s`, this is exactly the implicit Euler
/// treatment of `-k sgn(x)` over a step of length `h`: the switching term
/// lands `x` on zero instead of overshooting it.
pub fn saturated_sign(x: f64, width: f64) -> f64 {
    if width > 0.0 {
        (x / width).clamp(-1.0, 1.0)
    } else {
        sgn(x)
    }
}
