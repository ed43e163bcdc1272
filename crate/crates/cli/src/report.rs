//! Machine-readable output of `analyze`, `oracle` and `bench`.

use exact_wins::{
    rational_string, BootCaseCounts, ExactMoments, FsResult, GraphSummary, Method, PermCaseCounts, WinMoments,
    WinRatioResult,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// What the analysis was run on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub n_patients: usize,
    pub m: usize,
    pub n: usize,
    pub total_edges: u64,
    pub wins_t: u64,
    pub wins_c: u64,
}

impl From<&GraphSummary> for InputDigest {
    fn from(s: &GraphSummary) -> Self {
        InputDigest {
            n_patients: s.n_patients(),
            m: s.m(),
            n: s.n(),
            total_edges: s.total_edges,
            wins_t: s.observed_t_wins,
            wins_c: s.observed_c_wins,
        }
    }
}

/// Exact moments as reduced fractions. The covariance is also given as
/// `cov_scaled / cov_denominator` over the least common denominator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactReport {
    pub method: Method,
    pub exp_t: String,
    pub exp_c: String,
    pub cov: [[String; 2]; 2],
    pub exp_diff: String,
    pub var_diff: String,
    pub cov_denominator: String,
    pub cov_scaled: [[String; 2]; 2],
}

impl From<&ExactMoments> for ExactReport {
    fn from(e: &ExactMoments) -> Self {
        let r = rational_string;
        let (d, k) = e.cov_over_common_denominator();
        ExactReport {
            method: e.method,
            exp_t: r(&e.exp_t),
            exp_c: r(&e.exp_c),
            cov: [[r(&e.cov[0][0]), r(&e.cov[0][1])], [r(&e.cov[1][0]), r(&e.cov[1][1])]],
            exp_diff: r(&e.exp_diff),
            var_diff: r(&e.var_diff),
            cov_denominator: d.to_string(),
            cov_scaled: [
                [k[0][0].to_string(), k[0][1].to_string()],
                [k[1][0].to_string(), k[1][1].to_string()],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    /// `permutation`, `bootstrap`, `fs`, `winratio` or `all`, or for the
    /// oracle command `oracle_permutation` / `oracle_bootstrap`.
    pub method: String,
    pub input: InputDigest,
    pub moments: Vec<WinMoments>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exact: Vec<ExactReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs: Option<FsResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub win_ratio: Option<WinRatioResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_cases: Option<PermCaseCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_cases: Option<BootCaseCounts>,
    pub timing_ms: f64,
}

impl AnalysisReport {
    pub fn new(method: impl Into<String>, input: InputDigest) -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            method: method.into(),
            input,
            moments: Vec::new(),
            exact: Vec::new(),
            fs: None,
            win_ratio: None,
            permutation_cases: None,
            bootstrap_cases: None,
            timing_ms: 0.0,
        }
    }

    pub fn moments_for(&self, method: Method) -> Option<&WinMoments> {
        self.moments.iter().find(|m| m.method == method)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Short human-readable rendering.
    pub fn to_text(&self) -> String {
        let d = &self.input;
        let mut out = format!(
            "N={} m={} n={} E={} W_T={} W_C={}\n",
            d.n_patients, d.m, d.n, d.total_edges, d.wins_t, d.wins_c
        );
        for w in &self.moments {
            out += &format!(
                "{}: exp=[{}, {}] cov=[[{}, {}], [{}, {}]] exp_diff={} var_diff={}\n",
                w.method, w.exp_t, w.exp_c, w.cov[0][0], w.cov[0][1], w.cov[1][0], w.cov[1][1], w.exp_diff, w.var_diff
            );
        }
        for e in &self.exact {
            let k = &e.cov_scaled;
            out += &format!(
                "{} (exact): exp=[{}, {}] cov=[[{}, {}], [{}, {}]] = (1/{}) [[{}, {}], [{}, {}]] var_diff={}\n",
                e.method,
                e.exp_t,
                e.exp_c,
                e.cov[0][0],
                e.cov[0][1],
                e.cov[1][0],
                e.cov[1][1],
                e.cov_denominator,
                k[0][0],
                k[0][1],
                k[1][0],
                k[1][1],
                e.var_diff
            );
        }
        if let Some(fs) = &self.fs {
            let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| x.to_string());
            out += &format!(
                "fs: fs={} variance={} z={} p={}\n",
                fs.fs,
                fs.variance,
                opt(fs.z),
                opt(fs.p_two_sided)
            );
        }
        if let Some(r) = &self.win_ratio {
            let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| x.to_string());
            let ci = |v: Option<(f64, f64)>| v.map_or("undefined".to_string(), |(a, b)| format!("[{a}, {b}]"));
            out += &format!(
                "win ratio: r_w={} log_rw={} se_pocock={} se_delta={} ci{}_pocock={} ci{}_delta={}\n",
                r.r_w,
                r.log_rw,
                opt(r.se_pocock),
                opt(r.se_delta),
                r.ci_level,
                ci(r.ci_pocock),
                r.ci_level,
                ci(r.ci_delta)
            );
        }
        out += &format!("time: {:.3} ms\n", self.timing_ms);
        out
    }
}

/// One Monte Carlo run size in a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub reps: u64,
    pub mc_permutation_ms: f64,
    pub mc_bootstrap_ms: f64,
    /// Largest absolute error over the five moments against the closed form.
    pub permutation_max_abs_error: f64,
    pub bootstrap_max_abs_error: f64,
    /// Largest error in units of its theoretical standard error.
    pub permutation_max_error_se: f64,
    pub bootstrap_max_error_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub input: InputDigest,
    pub seed: u64,
    /// Summary pass plus both closed forms; best of several runs.
    pub closed_form_ms: f64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let d = &self.input;
        let mut out = format!(
            "N={} m={} n={} seed={}\nclosed form (summary + permutation + bootstrap): {:.4} ms\n",
            d.n_patients, d.m, d.n, self.seed, self.closed_form_ms
        );
        if self.rows.is_empty() {
            return out;
        }
        out += &format!(
            "{:>10} {:>12} {:>12} {:>14} {:>14} {:>11} {:>11}\n",
            "reps", "perm_ms", "boot_ms", "perm_max_err", "boot_max_err", "perm_err/se", "boot_err/se"
        );
        for r in &self.rows {
            out += &format!(
                "{:>10} {:>12.3} {:>12.3} {:>14.6e} {:>14.6e} {:>11.3} {:>11.3}\n",
                r.reps,
                r.mc_permutation_ms,
                r.mc_bootstrap_ms,
                r.permutation_max_abs_error,
                r.bootstrap_max_abs_error,
                r.permutation_max_error_se,
                r.bootstrap_max_error_se
            );
        }
        out
    }
}
