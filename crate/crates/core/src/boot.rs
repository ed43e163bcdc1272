//! Exact moments of `(W_T, W_C)` under the two-sample bootstrap.
//!
//! Each arm is resampled with replacement to its own size, so all
//! `m^m n^n` samples are equally likely. A patient drawn `k` times has weight
//! `k`, and a win edge contributes the product of its endpoint weights. Only
//! cross-arm edges can ever be wins, so within-arm comparisons drop out.
//!
//! With `t(v)` and `c(v)` the numbers of treatment- and control-win edges at
//! `v`, the ordered pairs of win edges split into
//!
//! * cases 1, 2: an edge with itself, seen once from each endpoint;
//! * cases 3-10: two distinct edges meeting at a treatment or control vertex;
//! * cases 11-14: vertex-disjoint pairs, obtained by subtraction.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Arm, GraphSummary};
use crate::moments::{weighted, ExactMoments, Method, RawMoments, Scalar, WinMoments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootCaseCounts {
    /// `sum_v t(v)`, i.e. twice the halved case-1 tally.
    pub case1_x2: i128,
    /// `sum_v c(v)`, i.e. twice the halved case-2 tally.
    pub case2_x2: i128,
    /// `t(t - 1)` at treatment vertices.
    pub case3: i128,
    /// `t(t - 1)` at control vertices.
    pub case4: i128,
    /// `c(c - 1)` at treatment vertices.
    pub case5: i128,
    /// `c(c - 1)` at control vertices.
    pub case6: i128,
    /// `t c` at treatment vertices, treatment edge first.
    pub case7: i128,
    /// `t c` at control vertices, treatment edge first.
    pub case8: i128,
    /// `c t` at treatment vertices, control edge first.
    pub case9: i128,
    /// `c t` at control vertices, control edge first.
    pub case10: i128,
    pub rem_tt: i128,
    pub rem_tc: i128,
    pub rem_ct: i128,
    pub rem_cc: i128,
}

impl BootCaseCounts {
    pub fn from_summary(summary: &GraphSummary) -> Self {
        let mut c = BootCaseCounts {
            case1_x2: 0,
            case2_x2: 0,
            case3: 0,
            case4: 0,
            case5: 0,
            case6: 0,
            case7: 0,
            case8: 0,
            case9: 0,
            case10: 0,
            rem_tt: 0,
            rem_tc: 0,
            rem_ct: 0,
            rem_cc: 0,
        };
        for v in &summary.vertices {
            let (t, k) = (i128::from(v.t_adj), i128::from(v.c_adj));
            c.case1_x2 += t;
            c.case2_x2 += k;
            match v.arm {
                Arm::Treatment => {
                    c.case3 += t * (t - 1);
                    c.case5 += k * (k - 1);
                    c.case7 += t * k;
                    c.case9 += k * t;
                }
                Arm::Control => {
                    c.case4 += t * (t - 1);
                    c.case6 += k * (k - 1);
                    c.case8 += t * k;
                    c.case10 += k * t;
                }
            }
        }
        let wt = i128::from(summary.observed_t_wins);
        let wc = i128::from(summary.observed_c_wins);
        c.rem_tt = wt * (wt - 1) - c.case3 - c.case4;
        c.rem_tc = wt * wc - c.case7 - c.case8;
        c.rem_ct = wc * wt - c.case9 - c.case10;
        c.rem_cc = wc * (wc - 1) - c.case5 - c.case6;
        c
    }

    /// Observed treatment wins.
    pub fn wins_t(&self) -> i128 {
        self.case1_x2 / 2
    }

    /// Observed control wins.
    pub fn wins_c(&self) -> i128 {
        self.case2_x2 / 2
    }

    /// Every ordered pair of win edges, counted once: `(W_T + W_C)^2`.
    pub fn total_pairs(&self) -> i128 {
        self.wins_t()
            + self.wins_c()
            + self.case3
            + self.case4
            + self.case5
            + self.case6
            + self.case7
            + self.case8
            + self.case9
            + self.case10
            + self.rem_tt
            + self.rem_tc
            + self.rem_ct
            + self.rem_cc
    }

    fn assemble<T: Scalar>(&self, m: usize, n: usize) -> RawMoments<T> {
        let (m, n) = (m as i128, n as i128);
        let mn = m * n;
        // The case 1/2 tallies are stored doubled; the factor carries the 1/2.
        let self_pair = || T::ratio((2 * m - 1) * (2 * n - 1), 2 * mn);
        let at_treatment = || T::ratio((2 * m - 1) * (n - 1), mn);
        let at_control = || T::ratio((m - 1) * (2 * n - 1), mn);
        let disjoint = || T::ratio((m - 1) * (n - 1), mn);

        let tt = weighted(self.case1_x2, self_pair)
            + weighted(self.case3, at_treatment)
            + weighted(self.case4, at_control)
            + weighted(self.rem_tt, disjoint);
        let cc = weighted(self.case2_x2, self_pair)
            + weighted(self.case5, at_treatment)
            + weighted(self.case6, at_control)
            + weighted(self.rem_cc, disjoint);
        let tc =
            weighted(self.case7, at_treatment) + weighted(self.case8, at_control) + weighted(self.rem_tc, disjoint);
        let ct =
            weighted(self.case9, at_treatment) + weighted(self.case10, at_control) + weighted(self.rem_ct, disjoint);

        let (wt, wc) = (self.wins_t(), self.wins_c());
        RawMoments {
            exp_t: T::int(wt),
            exp_c: T::int(wc),
            cov: [
                [tt - T::int(wt * wt), tc - T::int(wt * wc)],
                [ct - T::int(wc * wt), cc - T::int(wc * wc)],
            ],
        }
    }
}

fn check_design(summary: &GraphSummary, m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::DegenerateDesign { m, n });
    }
    let (sm, sn) = (summary.m(), summary.n());
    if (sm, sn) != (m, n) {
        return Err(Error::Shape(format!(
            "arm sizes (m = {m}, n = {n}) do not match the summary's labels (m = {sm}, n = {sn})"
        )));
    }
    Ok(())
}

/// Two-sample bootstrap mean and covariance of `(W_T, W_C)` in O(N) from the
/// summary, correctly rounded from the exact values.
pub fn bootstrap_moments(summary: &GraphSummary, m: usize, n: usize) -> Result<(WinMoments, BootCaseCounts)> {
    check_design(summary, m, n)?;
    let counts = BootCaseCounts::from_summary(summary);
    Ok((
        counts
            .assemble::<BigRational>(m, n)
            .into_exact(Method::BootstrapTwoSample)
            .to_float(),
        counts,
    ))
}

pub fn bootstrap_moments_exact(summary: &GraphSummary, m: usize, n: usize) -> Result<(ExactMoments, BootCaseCounts)> {
    check_design(summary, m, n)?;
    let counts = BootCaseCounts::from_summary(summary);
    Ok((
        counts
            .assemble::<BigRational>(m, n)
            .into_exact(Method::BootstrapTwoSample),
        counts,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cycle_example_arms, cycle_example_matrix};
    use crate::graph::{summarize, ArmAssignment};
    use crate::outcome::OutcomeMatrix;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn cycle_example() {
        let s = summarize(&cycle_example_matrix(), &cycle_example_arms()).unwrap();
        let (w, c) = bootstrap_moments_exact(&s, 2, 3).unwrap();
        assert_eq!(w.exp_t, q(2, 1));
        assert_eq!(w.exp_c, q(1, 1));
        assert_eq!(w.cov, [[q(10, 6), q(-1, 6)], [q(-1, 6), q(9, 6)]]);
        assert_eq!(w.var_diff, q(21, 6));
        assert_eq!(w.exp_diff, q(1, 1));
        assert_eq!(c.total_pairs(), 9);
        assert_eq!((c.rem_tt, c.rem_tc, c.rem_ct, c.rem_cc), (2, 0, 0, 0));

        let (f, _) = bootstrap_moments(&s, 2, 3).unwrap();
        assert_relative_eq!(f.var_diff, 3.5, max_relative = 1e-12);
        assert_relative_eq!(f.cov[0][0], 10.0 / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn no_cross_arm_wins() {
        // Edges only inside the treatment arm.
        let u = OutcomeMatrix::from_rows(&[vec![0, 1, 0], vec![-1, 0, 0], vec![0, 0, 0]]).unwrap();
        let arms = ArmAssignment::from_indicators(&[1, 1, 0]).unwrap();
        let s = summarize(&u, &arms).unwrap();
        let (w, _) = bootstrap_moments(&s, 2, 1).unwrap();
        assert_eq!(w.as_array(), [0.0; 5]);
    }

    #[test]
    fn one_patient_per_arm() {
        let u = OutcomeMatrix::from_rows(&[vec![0, 1], vec![-1, 0]]).unwrap();
        let arms = ArmAssignment::from_indicators(&[1, 0]).unwrap();
        let s = summarize(&u, &arms).unwrap();
        let (w, _) = bootstrap_moments_exact(&s, 1, 1).unwrap();
        assert_eq!(w.exp_t, q(1, 1));
        assert_eq!(w.exp_c, q(0, 1));
        assert_eq!(w.cov, [[q(0, 1), q(0, 1)], [q(0, 1), q(0, 1)]]);
    }

    #[test]
    fn arm_size_mismatch() {
        let s = summarize(&cycle_example_matrix(), &cycle_example_arms()).unwrap();
        assert!(matches!(bootstrap_moments(&s, 3, 2), Err(Error::Shape(_))));
        assert!(matches!(
            bootstrap_moments(&s, 0, 5),
            Err(Error::DegenerateDesign { .. })
        ));
    }
}
