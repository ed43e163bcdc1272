//! Small reference inputs and random instance generators shared by tests,
//! benches and the CLI test-suite.

use rand::Rng;

use crate::graph::{Arm, ArmAssignment};
use crate::outcome::OutcomeMatrix;
use crate::outcome::{Direction, Hierarchy, MeasureKind, MeasureSpec, Observation, PatientRecord};
use crate::par::Exec;

/// Five patients whose comparisons contain the directed cycle 1 -> 5 -> 2 -> 1
/// (1-based) and a non-transitive chain 1 -> 5 -> 4 with 1 ~ 4.
pub const CYCLE_EXAMPLE_ROWS: [[i8; 5]; 5] = [
    [0, -1, 0, 0, 1],
    [1, 0, 1, 0, -1],
    [0, -1, 0, 1, 0],
    [0, 0, -1, 0, -1],
    [-1, 1, 0, 1, 0],
];

/// Arm indicators paired with [`CYCLE_EXAMPLE_ROWS`]: patients 1 and 2 treated.
pub const CYCLE_EXAMPLE_ARMS: [u8; 5] = [1, 1, 0, 0, 0];

pub fn cycle_example_matrix() -> OutcomeMatrix {
    let rows: Vec<Vec<i8>> = CYCLE_EXAMPLE_ROWS.iter().map(|r| r.to_vec()).collect();
    OutcomeMatrix::from_rows(&rows).expect("fixture is skew")
}

pub fn cycle_example_arms() -> ArmAssignment {
    ArmAssignment::from_indicators(&CYCLE_EXAMPLE_ARMS).expect("fixture has both arms")
}

/// A two-level hierarchy (two continuous scores, each with threshold 1)
/// together with five patient records whose comparison matrix is
/// [`CYCLE_EXAMPLE_ROWS`].
pub fn cycle_example_records() -> (Hierarchy, Vec<PatientRecord>) {
    let hierarchy = Hierarchy::new(vec![
        MeasureSpec::new("score_a", MeasureKind::Continuous, Direction::HigherBetter).with_threshold(1.0),
        MeasureSpec::new("score_b", MeasureKind::Ordinal, Direction::HigherBetter).with_threshold(1.0),
    ])
    .expect("valid hierarchy");
    let a = [None, Some(1.0), Some(2.0), Some(0.0), Some(3.0)];
    let b = [Some(2.0), Some(4.0), Some(1.0), None, Some(0.0)];
    let records = (0..5)
        .map(|i| {
            let arm = if CYCLE_EXAMPLE_ARMS[i] == 1 {
                Arm::Treatment
            } else {
                Arm::Control
            };
            PatientRecord::new(
                format!("P{}", i + 1),
                arm,
                vec![Observation::from(a[i]), Observation::from(b[i])],
            )
        })
        .collect();
    (hierarchy, records)
}

/// Random skew matrix: each pair is a win for the lower index with
/// probability `p_win`, a loss with probability `p_win`, and a tie otherwise.
pub fn random_skew<R: Rng + ?Sized>(n: usize, p_win: f64, rng: &mut R) -> OutcomeMatrix {
    let draws: Vec<i8> = (0..n * (n.saturating_sub(1)) / 2)
        .map(|_| {
            let x: f64 = rng.random();
            if x < p_win {
                1
            } else if x < 2.0 * p_win {
                -1
            } else {
                0
            }
        })
        .collect();
    let offset = |i: usize| i * n - i * (i + 1) / 2;
    OutcomeMatrix::from_upper(n, Exec::Sequential, |i, j| draws[offset(i) + (j - i - 1)])
}

/// Random arm vector with exactly `m` treatment patients among `m + n`.
pub fn random_arms<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> ArmAssignment {
    use rand::seq::SliceRandom;
    let mut arms: Vec<Arm> = std::iter::repeat_n(Arm::Treatment, m)
        .chain(std::iter::repeat_n(Arm::Control, n))
        .collect();
    arms.shuffle(rng);
    ArmAssignment::new(arms).expect("m, n >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::build_outcome_matrix;
    use rand::SeedableRng;

    #[test]
    fn records_reproduce_cycle_matrix() {
        let (h, recs) = cycle_example_records();
        assert_eq!(build_outcome_matrix(&recs, &h).unwrap(), cycle_example_matrix());
    }

    #[test]
    fn cycle_is_present() {
        let u = cycle_example_matrix();
        assert_eq!((u.get(0, 4), u.get(4, 1), u.get(1, 0)), (1, 1, 1));
    }

    #[test]
    fn random_skew_is_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [0, 1, 2, 7, 30] {
            random_skew(n, 0.3, &mut rng).validate().unwrap();
        }
    }
}
