//! Exact moments of win counts for hierarchical pairwise comparisons.
//!
//! Patients are compared pairwise on a prioritised list of measures, giving a
//! skew outcome matrix. Reading `+1` entries as directed edges, the win counts
//! `W_T` and `W_C` are edge counts between the arms, and their permutation and
//! two-sample bootstrap moments follow in O(N) from per-vertex degrees.
//!
//! ```
//! use exact_wins::{fixtures, summarize, permutation_moments};
//!
//! let u = fixtures::cycle_example_matrix();
//! let arms = fixtures::cycle_example_arms();
//! let s = summarize(&u, &arms).unwrap();
//! let (w, _) = permutation_moments(&s, arms.m(), arms.n()).unwrap();
//! assert!((w.exp_t - 1.8).abs() < 1e-12);
//! ```

pub mod boot;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod moments;
pub mod normal;
pub mod oracle;
pub mod outcome;
pub mod par;
pub mod perm;
pub mod ratio;

pub use boot::{bootstrap_moments, bootstrap_moments_exact, BootCaseCounts};
pub use error::{Error, Result};
pub use graph::{summarize, summarize_with, Arm, ArmAssignment, GraphSummary, VertexSummary};
pub use moments::{ExactMoments, Method, WinMoments};
pub use oracle::{
    enumerate_bootstrap_moments, enumerate_bootstrap_moments_exact, enumerate_permutation_moments,
    enumerate_permutation_moments_exact, mc_bootstrap, mc_bootstrap_log_ratio, mc_bootstrap_with, mc_permutation,
    mc_permutation_with, theoretical_se, LogRatioSample, McConfig, DEFAULT_GUARD,
};
pub use outcome::{
    build_outcome_matrix, build_outcome_matrix_with, compare_measure, compare_pair, Direction, Hierarchy, MeasureKind,
    MeasureSpec, Observation, OutcomeMatrix, PatientRecord,
};
pub use par::Exec;
pub use perm::{fs_test, permutation_moments, permutation_moments_exact, FsResult, PermCaseCounts};
pub use ratio::{delta_se, win_ratio, WinRatioResult};

/// Exact rational rendered as `p/q`, or an integer when `q = 1`.
pub fn rational_string(r: &num_rational::BigRational) -> String {
    moments::rational_string(r)
}
