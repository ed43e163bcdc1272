//! First and second moments of the win counts `(W_T, W_C)`.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Permutation,
    BootstrapTwoSample,
    OraclePermutation,
    OracleBootstrap,
    MonteCarloPermutation,
    MonteCarloBootstrap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Permutation => "permutation",
            Method::BootstrapTwoSample => "bootstrap_two_sample",
            Method::OraclePermutation => "oracle_permutation",
            Method::OracleBootstrap => "oracle_bootstrap",
            Method::MonteCarloPermutation => "monte_carlo_permutation",
            Method::MonteCarloBootstrap => "monte_carlo_bootstrap",
        };
        f.write_str(s)
    }
}

/// Expected `[W_T, W_C]`, their covariance (order `[W_T, W_C]`) and the
/// implied moments of the win difference `W_T - W_C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinMoments {
    pub method: Method,
    pub exp_t: f64,
    pub exp_c: f64,
    pub cov: [[f64; 2]; 2],
    pub exp_diff: f64,
    pub var_diff: f64,
}

impl WinMoments {
    pub fn new(method: Method, exp_t: f64, exp_c: f64, cov: [[f64; 2]; 2]) -> Self {
        WinMoments {
            method,
            exp_t,
            exp_c,
            cov,
            exp_diff: exp_t - exp_c,
            var_diff: cov[0][0] - 2.0 * cov[0][1] + cov[1][1],
        }
    }

    /// The five reported moments: `exp_t, exp_c, var_t, cov_tc, var_c`.
    pub fn as_array(&self) -> [f64; 5] {
        [self.exp_t, self.exp_c, self.cov[0][0], self.cov[0][1], self.cov[1][1]]
    }

    /// Largest absolute value among the reported moments, floored at 1.
    pub fn scale(&self) -> f64 {
        self.as_array()
            .iter()
            .chain([self.exp_diff, self.var_diff].iter())
            .fold(1.0_f64, |a, &b| a.max(b.abs()))
    }

    /// Symmetric, non-negative diagonal, and non-negative determinant up to
    /// `tol * scale^2`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let c = &self.cov;
        let s = self.scale();
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        (c[0][1] - c[1][0]).abs() <= tol * s && c[0][0] >= -tol * s && c[1][1] >= -tol * s && det >= -tol * s * s
    }

    /// Largest difference across all seven reported values, relative to the
    /// larger of the two scales.
    pub fn max_rel_diff(&self, other: &WinMoments) -> f64 {
        let a = self.as_array();
        let b = other.as_array();
        let s = self.scale().max(other.scale());
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .chain([
                (self.exp_diff - other.exp_diff).abs(),
                (self.var_diff - other.var_diff).abs(),
            ])
            .fold(0.0, f64::max)
            / s
    }

    /// Largest absolute difference among `exp_t, exp_c, var_t, cov_tc, var_c`.
    pub fn max_abs_diff(&self, other: &WinMoments) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// The same quantities as [`WinMoments`], as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMoments {
    pub method: Method,
    pub exp_t: BigRational,
    pub exp_c: BigRational,
    pub cov: [[BigRational; 2]; 2],
    pub exp_diff: BigRational,
    pub var_diff: BigRational,
}

impl ExactMoments {
    pub fn new(method: Method, exp_t: BigRational, exp_c: BigRational, cov: [[BigRational; 2]; 2]) -> Self {
        let exp_diff = &exp_t - &exp_c;
        let two = BigRational::from_integer(BigInt::from(2));
        let var_diff = &cov[0][0] - two * &cov[0][1] + &cov[1][1];
        ExactMoments {
            method,
            exp_t,
            exp_c,
            cov,
            exp_diff,
            var_diff,
        }
    }

    /// Rounds every value to the nearest `f64`.
    pub fn to_float(&self) -> WinMoments {
        let f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        WinMoments {
            method: self.method,
            exp_t: f(&self.exp_t),
            exp_c: f(&self.exp_c),
            cov: [
                [f(&self.cov[0][0]), f(&self.cov[0][1])],
                [f(&self.cov[1][0]), f(&self.cov[1][1])],
            ],
            exp_diff: f(&self.exp_diff),
            var_diff: f(&self.var_diff),
        }
    }

    /// Covariance written as `(1/d) * K` with `K` integral and `d` the least
    /// common denominator of the four cells.
    pub fn cov_over_common_denominator(&self) -> (BigInt, [[BigInt; 2]; 2]) {
        let d = self
            .cov
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, r| num_integer_lcm(&acc, r.denom()));
        let scaled = |r: &BigRational| (r * BigRational::from_integer(d.clone())).to_integer();
        let k = [
            [scaled(&self.cov[0][0]), scaled(&self.cov[0][1])],
            [scaled(&self.cov[1][0]), scaled(&self.cov[1][1])],
        ];
        (d, k)
    }
}

fn num_integer_lcm(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.lcm(b).abs()
}

/// Numeric field the moment assembly is written against.
pub(crate) trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn int(v: i128) -> Self;

    fn ratio(num: i128, den: i128) -> Self {
        Self::int(num) / Self::int(den)
    }
}

impl Scalar for BigRational {
    fn int(v: i128) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

/// `tally * factor`, skipping the factor entirely when the tally is zero so
/// that factors with a vanishing denominator are never formed.
pub(crate) fn weighted<T: Scalar>(tally: i128, factor: impl FnOnce() -> T) -> T {
    if tally == 0 {
        T::int(0)
    } else {
        T::int(tally) * factor()
    }
}

pub(crate) struct RawMoments<T> {
    pub exp_t: T,
    pub exp_c: T,
    pub cov: [[T; 2]; 2],
}

impl RawMoments<BigRational> {
    pub fn into_exact(self, method: Method) -> ExactMoments {
        ExactMoments::new(method, self.exp_t, self.exp_c, self.cov)
    }
}

/// Exact moments from integer power sums over a finite, weighted population:
/// `total` is the summed weight, `s_*` the weighted sums of `W_T`, `W_C` and
/// their products.
pub(crate) struct PowerSums {
    pub total: BigInt,
    pub s_t: BigInt,
    pub s_c: BigInt,
    pub s_tt: BigInt,
    pub s_tc: BigInt,
    pub s_cc: BigInt,
}

impl PowerSums {
    pub fn into_exact(self, method: Method) -> ExactMoments {
        let q = |x: &BigInt| BigRational::new(x.clone(), self.total.clone());
        let (et, ec) = (q(&self.s_t), q(&self.s_c));
        let tt = q(&self.s_tt) - &et * &et;
        let tc = q(&self.s_tc) - &et * &ec;
        let cc = q(&self.s_cc) - &ec * &ec;
        ExactMoments::new(method, et, ec, [[tt, tc.clone()], [tc, cc]])
    }
}

pub(crate) fn rational_string(r: &BigRational) -> String {
    if r.is_zero() {
        "0".to_string()
    } else {
        r.to_string()
    }
}
