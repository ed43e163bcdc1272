//! Exact moments of `(W_T, W_C)` under the permutation distribution of the
//! arm labels, and the score test built on the net scores.
//!
//! Under the permutation distribution every arm vector with exactly `m`
//! treatment labels is equally likely. The second moment sums `E[X_e Y_f]`
//! over ordered edge pairs `(e, f)`; the expectation depends only on how the
//! two edges meet, so it is enough to count pairs per configuration:
//!
//! | tally | configuration                            | count at vertex `v`  |
//! |-------|------------------------------------------|----------------------|
//! | 1     | an edge paired with itself               | `in(v)`              |
//! | 2     | distinct edges sharing head `v`          | `in(v)(in(v) - 1)`   |
//! | 3     | distinct edges sharing tail `v`          | `out(v)(out(v) - 1)` |
//! | 4, 5  | one edge into `v`, one out of `v`        | `in(v) out(v)` each  |
//! | rest  | vertex-disjoint pairs                    | `E^2 - F_P`          |

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Arm, ArmAssignment, GraphSummary};
use crate::moments::{weighted, ExactMoments, Method, RawMoments, Scalar, WinMoments};
use crate::normal;
use crate::outcome::OutcomeMatrix;

/// Configuration tallies aggregated over all vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermCaseCounts {
    pub case1: i128,
    pub case2: i128,
    pub case3: i128,
    pub case4: i128,
    pub case5: i128,
    /// Ordered edge pairs that share a vertex, plus each edge with itself.
    pub f_p: i128,
    pub e_squared: i128,
}

impl PermCaseCounts {
    pub fn from_summary(summary: &GraphSummary) -> Self {
        let (mut c1, mut c2, mut c3, mut c45) = (0i128, 0i128, 0i128, 0i128);
        for v in &summary.vertices {
            let (i, o) = (i128::from(v.indegree), i128::from(v.outdegree));
            c1 += i;
            c2 += i * (i - 1);
            c3 += o * (o - 1);
            c45 += i * o;
        }
        let e = i128::from(summary.total_edges);
        PermCaseCounts {
            case1: c1,
            case2: c2,
            case3: c3,
            case4: c45,
            case5: c45,
            f_p: c1 + c2 + c3 + c45 + c45,
            e_squared: e * e,
        }
    }

    /// Ordered pairs of vertex-disjoint edges.
    pub fn remainder(&self) -> i128 {
        self.e_squared - self.f_p
    }

    fn assemble<T: Scalar>(&self, m: usize, n: usize) -> RawMoments<T> {
        let (m, n) = (m as i128, n as i128);
        let big_n = m + n;
        let p1 = || T::ratio(m * n, big_n * (big_n - 1));
        let pm = || T::ratio(m * n * (m - 1), big_n * (big_n - 1) * (big_n - 2));
        let pn = || T::ratio(m * n * (n - 1), big_n * (big_n - 1) * (big_n - 2));
        let p_disjoint = || {
            T::ratio(
                m * n * (m - 1) * (n - 1),
                big_n * (big_n - 1) * (big_n - 2) * (big_n - 3),
            )
        };
        let rem = weighted(self.remainder(), p_disjoint);
        let diag = weighted(self.case1, p1);
        let tt = diag.clone() + weighted(self.case2, pm) + weighted(self.case3, pn) + rem.clone();
        let cc = diag + weighted(self.case2, pn) + weighted(self.case3, pm) + rem.clone();
        let tc = weighted(self.case4, pn) + weighted(self.case5, pm) + rem;

        // E = case1 (every edge is counted once at its head).
        let mean = weighted(self.case1, p1);
        let mean_sq = mean.clone() * mean.clone();
        RawMoments {
            exp_t: mean.clone(),
            exp_c: mean,
            cov: [
                [tt - mean_sq.clone(), tc.clone() - mean_sq.clone()],
                [tc - mean_sq.clone(), cc - mean_sq],
            ],
        }
    }
}

fn check_design(summary: &GraphSummary, m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::DegenerateDesign { m, n });
    }
    if m + n != summary.n_patients() {
        return Err(Error::Shape(format!(
            "m + n = {} but the graph has {} vertices",
            m + n,
            summary.n_patients()
        )));
    }
    Ok(())
}

/// Permutation mean and covariance of `(W_T, W_C)` in O(N) from the summary.
/// Only the arm sizes matter, not the observed labels.
///
/// The tallies are integers, so the moments are formed exactly and rounded
/// once; a direct `f64` evaluation loses digits to the `E^2` cancellation.
pub fn permutation_moments(summary: &GraphSummary, m: usize, n: usize) -> Result<(WinMoments, PermCaseCounts)> {
    check_design(summary, m, n)?;
    let counts = PermCaseCounts::from_summary(summary);
    Ok((
        counts
            .assemble::<BigRational>(m, n)
            .into_exact(Method::Permutation)
            .to_float(),
        counts,
    ))
}

/// Same as [`permutation_moments`] in exact rational arithmetic.
pub fn permutation_moments_exact(summary: &GraphSummary, m: usize, n: usize) -> Result<(ExactMoments, PermCaseCounts)> {
    check_design(summary, m, n)?;
    let counts = PermCaseCounts::from_summary(summary);
    Ok((
        counts.assemble::<BigRational>(m, n).into_exact(Method::Permutation),
        counts,
    ))
}

/// Net-score test of no difference between arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsResult {
    /// Net score of each patient (row sums of the outcome matrix).
    pub scores: Vec<i64>,
    /// Sum of the treatment patients' scores; equals `W_T - W_C`.
    pub fs: i64,
    pub sum_sq_scores: i128,
    /// Permutation variance of `fs`.
    pub variance: f64,
    /// `None` when every score is zero.
    pub z: Option<f64>,
    /// Two-sided normal tail probability of `z`.
    pub p_two_sided: Option<f64>,
    pub m: usize,
    pub n: usize,
}

impl FsResult {
    /// The permutation variance as an exact fraction.
    pub fn variance_exact(&self) -> BigRational {
        let (m, n) = (self.m as i128, self.n as i128);
        let big_n = m + n;
        <BigRational as Scalar>::ratio(m * n * self.sum_sq_scores, big_n * (big_n - 1))
    }
}

pub fn fs_test(u: &OutcomeMatrix, arms: &ArmAssignment) -> Result<FsResult> {
    let n_pat = u.n_patients();
    if arms.len() != n_pat {
        return Err(Error::Shape(format!(
            "arm vector has {} entries but the matrix is {n_pat} x {n_pat}",
            arms.len()
        )));
    }
    let (m, n) = (arms.m(), arms.n());
    let scores = u.scores();
    let fs = scores
        .iter()
        .zip(arms.arms())
        .filter(|(_, &a)| a == Arm::Treatment)
        .map(|(s, _)| s)
        .sum();
    let sum_sq: i128 = scores.iter().map(|&s| i128::from(s) * i128::from(s)).sum();
    let variance = <BigRational as Scalar>::ratio((m * n) as i128 * sum_sq, (n_pat * (n_pat - 1)) as i128)
        .to_f64()
        .unwrap_or(f64::NAN);
    let (z, p) = if sum_sq == 0 {
        (None, None)
    } else {
        let z = fs as f64 / variance.sqrt();
        (Some(z), Some(normal::two_sided_p(z)))
    };
    Ok(FsResult {
        scores,
        fs,
        sum_sq_scores: sum_sq,
        variance: if sum_sq == 0 { 0.0 } else { variance },
        z,
        p_two_sided: p,
        m,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cycle_example_arms, cycle_example_matrix};
    use crate::graph::summarize;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn cycle_example_float() {
        let s = summarize(&cycle_example_matrix(), &cycle_example_arms()).unwrap();
        let (w, c) = permutation_moments(&s, 2, 3).unwrap();
        assert_relative_eq!(w.exp_t, 1.8, max_relative = 1e-12);
        assert_relative_eq!(w.exp_c, 1.8, max_relative = 1e-12);
        assert_relative_eq!(w.cov[0][0], 0.76, max_relative = 1e-12);
        assert_relative_eq!(w.cov[0][1], -0.24, max_relative = 1e-12);
        assert_relative_eq!(w.cov[1][1], 0.56, max_relative = 1e-12);
        assert_relative_eq!(w.var_diff, 1.8, max_relative = 1e-12);
        assert_eq!(c.e_squared, 36);
        assert_eq!(c.case1, 6);
        assert_eq!(c.f_p + c.remainder(), c.e_squared);
    }

    #[test]
    fn cycle_example_exact() {
        let s = summarize(&cycle_example_matrix(), &cycle_example_arms()).unwrap();
        let (w, _) = permutation_moments_exact(&s, 2, 3).unwrap();
        assert_eq!(w.exp_t, q(9, 5));
        assert_eq!(w.cov[0][0], q(76, 100));
        assert_eq!(w.cov[0][1], q(-24, 100));
        assert_eq!(w.cov[1][0], q(-24, 100));
        assert_eq!(w.cov[1][1], q(56, 100));
        assert_eq!(w.var_diff, q(180, 100));
        assert_eq!(w.exp_diff, q(0, 1));
    }

    #[test]
    fn zero_matrix() {
        let arms = crate::graph::ArmAssignment::from_indicators(&[1, 0, 0, 1]).unwrap();
        let s = summarize(&OutcomeMatrix::zeros(4), &arms).unwrap();
        let (w, _) = permutation_moments(&s, 2, 2).unwrap();
        assert_eq!(w.as_array(), [0.0; 5]);
    }

    #[test]
    fn two_patients_single_edge() {
        // Both labelings: edge is a treatment win or a control win.
        let u = OutcomeMatrix::from_rows(&[vec![0, 1], vec![-1, 0]]).unwrap();
        let arms = crate::graph::ArmAssignment::from_indicators(&[1, 0]).unwrap();
        let s = summarize(&u, &arms).unwrap();
        let (w, _) = permutation_moments_exact(&s, 1, 1).unwrap();
        assert_eq!(w.exp_t, q(1, 2));
        assert_eq!(w.cov, [[q(1, 4), q(-1, 4)], [q(-1, 4), q(1, 4)]]);
        assert_eq!(w.var_diff, q(1, 1));
    }

    #[test]
    fn three_patients_no_disjoint_pairs() {
        let u = OutcomeMatrix::from_rows(&[vec![0, 1, 1], vec![-1, 0, 1], vec![-1, -1, 0]]).unwrap();
        let arms = crate::graph::ArmAssignment::from_indicators(&[1, 0, 0]).unwrap();
        let s = summarize(&u, &arms).unwrap();
        let (w, c) = permutation_moments(&s, 1, 2).unwrap();
        assert_eq!(c.remainder(), 0);
        assert!(w.as_array().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn degenerate_design() {
        let arms = crate::graph::ArmAssignment::from_indicators(&[1, 0]).unwrap();
        let s = summarize(&OutcomeMatrix::zeros(2), &arms).unwrap();
        assert_eq!(
            permutation_moments(&s, 2, 0).unwrap_err(),
            Error::DegenerateDesign { m: 2, n: 0 }
        );
        assert!(matches!(permutation_moments(&s, 2, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn fs_cycle_example() {
        let r = fs_test(&cycle_example_matrix(), &cycle_example_arms()).unwrap();
        assert_eq!(r.scores, vec![0, 1, 0, -2, 1]);
        assert_eq!(r.fs, 1);
        assert_eq!(r.sum_sq_scores, 6);
        assert_relative_eq!(r.variance, 1.8, max_relative = 1e-12);
        assert_eq!(r.variance_exact(), q(9, 5));
        assert_relative_eq!(r.z.unwrap(), 1.0 / 1.8_f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(r.z.unwrap(), 0.745_356, epsilon = 1e-6);
        assert!((0.0..=1.0).contains(&r.p_two_sided.unwrap()));
    }

    #[test]
    fn fs_all_tied() {
        let arms = crate::graph::ArmAssignment::from_indicators(&[1, 0, 0]).unwrap();
        let r = fs_test(&OutcomeMatrix::zeros(3), &arms).unwrap();
        assert_eq!((r.fs, r.variance, r.z, r.p_two_sided), (0, 0.0, None, None));
    }
}
