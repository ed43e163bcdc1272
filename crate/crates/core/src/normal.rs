//! Standard normal tail functions.
//!
//! `erfc` comes from `libm` (correct to about one ulp). The quantile starts
//! from `statrs`' inverse erfc and takes one Newton step against that erfc,
//! since the `statrs` forward erfc is only good to roughly 1e-10.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// Standard normal CDF, `0.5 * erfc(-x / sqrt 2)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `2 * (1 - cdf(|z|))`, evaluated without cancellation.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / SQRT_2)
}

fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse standard normal CDF for `p` in (0, 1); NaN outside.
pub fn quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return f64::NAN;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    let d = pdf(x);
    if d > 0.0 {
        // Work in the smaller tail so the residual keeps its precision.
        let resid = if p < 0.5 { cdf(x) - p } else { (1.0 - p) - cdf(-x) };
        x - resid / d
    } else {
        x
    }
}
