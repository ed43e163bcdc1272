use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use exact_wins::{
    bootstrap_moments, bootstrap_moments_exact, build_outcome_matrix, enumerate_bootstrap_moments_exact,
    enumerate_permutation_moments_exact, fs_test, mc_bootstrap, mc_permutation, permutation_moments,
    permutation_moments_exact, summarize, theoretical_se, ArmAssignment, Error, Exec, McConfig, OutcomeMatrix,
    WinMoments,
};

use crate::error::{CliError, Result};
use crate::formats;
use crate::report::{AnalysisReport, BenchReport, BenchRow, ExactReport, InputDigest, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeMethod {
    Permutation,
    Bootstrap,
    Fs,
    #[value(name = "winratio")]
    WinRatio,
    All,
}

impl AnalyzeMethod {
    fn tag(self) -> &'static str {
        match self {
            AnalyzeMethod::Permutation => "permutation",
            AnalyzeMethod::Bootstrap => "bootstrap",
            AnalyzeMethod::Fs => "fs",
            AnalyzeMethod::WinRatio => "winratio",
            AnalyzeMethod::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMethod {
    Permutation,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub exact: bool,
    pub ci_level: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            exact: false,
            ci_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompareSummary {
    pub n_patients: usize,
    pub total_edges: usize,
}

/// Builds the outcome matrix from patient data and writes it to `out`. With
/// `arms_out`, also writes the arm indicators in data order.
pub fn cmd_compare(data: &Path, hierarchy: &Path, out: &Path, arms_out: Option<&Path>) -> Result<CompareSummary> {
    let h = formats::read_hierarchy(hierarchy)?;
    let records = formats::read_data(data, &h)?;
    let u = build_outcome_matrix(&records, &h)?;
    formats::write_matrix(out, &u)?;
    if let Some(path) = arms_out {
        let arms = ArmAssignment::new(records.iter().map(|r| r.arm).collect())?;
        formats::write_arms(path, &arms)?;
    }
    Ok(CompareSummary {
        n_patients: u.n_patients(),
        total_edges: u.edges().count(),
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn cmd_analyze(matrix: &Path, arms: &Path, method: AnalyzeMethod, opts: AnalyzeOptions) -> Result<AnalysisReport> {
    let u = formats::read_matrix(matrix)?;
    let a = formats::read_arms(arms)?;
    analyze(&u, &a, method, opts)
}

/// `analyze` on in-memory inputs.
pub fn analyze(
    u: &OutcomeMatrix,
    arms: &ArmAssignment,
    method: AnalyzeMethod,
    opts: AnalyzeOptions,
) -> Result<AnalysisReport> {
    use AnalyzeMethod::*;
    if !(opts.ci_level > 0.0 && opts.ci_level < 1.0) {
        return Err(CliError::Usage(format!(
            "--ci {} must lie strictly between 0 and 1",
            opts.ci_level
        )));
    }
    let start = Instant::now();
    let s = summarize(u, arms)?;
    let (m, n) = (arms.m(), arms.n());
    let mut report = AnalysisReport::new(method.tag(), InputDigest::from(&s));

    if matches!(method, Permutation | All) {
        let (w, counts) = permutation_moments(&s, m, n)?;
        report.moments.push(w);
        report.permutation_cases = Some(counts);
        if opts.exact {
            report
                .exact
                .push(ExactReport::from(&permutation_moments_exact(&s, m, n)?.0));
        }
    }
    let boot = if matches!(method, Bootstrap | WinRatio | All) {
        let (w, counts) = bootstrap_moments(&s, m, n)?;
        report.moments.push(w.clone());
        report.bootstrap_cases = Some(counts);
        if opts.exact {
            report
                .exact
                .push(ExactReport::from(&bootstrap_moments_exact(&s, m, n)?.0));
        }
        Some(w)
    } else {
        None
    };
    if matches!(method, Fs | WinRatio | All) {
        let fs = fs_test(u, arms)?;
        if let Some(b) = &boot {
            match exact_wins::win_ratio(&s, &fs, b, opts.ci_level) {
                Ok(r) => report.win_ratio = Some(r),
                // `all` still reports everything else when the ratio is undefined.
                Err(Error::RatioUndefined { .. }) if method == All => {}
                Err(e) => return Err(e.into()),
            }
        }
        report.fs = Some(fs);
    }
    report.timing_ms = elapsed_ms(start);
    Ok(report)
}

pub fn cmd_oracle(
    matrix: &Path,
    arms: &Path,
    method: OracleMethod,
    guard: u128,
    exact: bool,
) -> Result<AnalysisReport> {
    let u = formats::read_matrix(matrix)?;
    let a = formats::read_arms(arms)?;
    oracle(&u, &a, method, guard, exact)
}

pub fn oracle(
    u: &OutcomeMatrix,
    arms: &ArmAssignment,
    method: OracleMethod,
    guard: u128,
    exact: bool,
) -> Result<AnalysisReport> {
    let start = Instant::now();
    let s = summarize(u, arms)?;
    let e = match method {
        OracleMethod::Permutation => {
            enumerate_permutation_moments_exact(u, arms.m(), arms.n(), guard, Exec::default())?
        }
        OracleMethod::Bootstrap => enumerate_bootstrap_moments_exact(u, arms, guard, Exec::default())?,
    };
    let mut report = AnalysisReport::new(e.method.to_string(), InputDigest::from(&s));
    report.moments.push(e.to_float());
    if exact {
        report.exact.push(ExactReport::from(&e));
    }
    report.timing_ms = elapsed_ms(start);
    Ok(report)
}

pub fn cmd_bench(matrix: &Path, arms: &Path, reps: &[u64], seed: u64) -> Result<BenchReport> {
    let u = formats::read_matrix(matrix)?;
    let a = formats::read_arms(arms)?;
    bench(&u, &a, reps, seed)
}

/// Timing runs of the closed forms; the best one is reported.
const CLOSED_FORM_RUNS: usize = 5;

fn max_error(exact: &WinMoments, mc: &WinMoments, reps: u64) -> (f64, f64) {
    let se = theoretical_se(exact, reps);
    let mut abs: f64 = 0.0;
    let mut in_se: f64 = 0.0;
    for ((a, b), s) in exact.as_array().iter().zip(mc.as_array()).zip(se) {
        let d = (a - b).abs();
        abs = abs.max(d);
        in_se = in_se.max(if s > 0.0 {
            d / s
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    (abs, in_se)
}

/// Times the closed forms against seeded Monte Carlo at each `reps`.
pub fn bench(u: &OutcomeMatrix, arms: &ArmAssignment, reps: &[u64], seed: u64) -> Result<BenchReport> {
    if let Some(&r) = reps.iter().find(|&&r| r < 2) {
        return Err(CliError::Usage(format!("--reps values must be at least 2, got {r}")));
    }
    let (m, n) = (arms.m(), arms.n());
    let mut closed_form_ms = f64::INFINITY;
    let mut closed = None;
    for _ in 0..CLOSED_FORM_RUNS {
        let start = Instant::now();
        let s = summarize(u, arms)?;
        let p = permutation_moments(&s, m, n)?.0;
        let b = bootstrap_moments(&s, m, n)?.0;
        closed_form_ms = closed_form_ms.min(elapsed_ms(start));
        closed = Some((s, p, b));
    }
    let (s, p, b) = closed.expect("at least one run");

    let mut rows = Vec::with_capacity(reps.len());
    for &r in reps {
        let cfg = McConfig::new(r, seed);
        let start = Instant::now();
        let pm = mc_permutation(u, arms, cfg)?;
        let mc_permutation_ms = elapsed_ms(start);
        let start = Instant::now();
        let bm = mc_bootstrap(u, arms, cfg)?;
        let mc_bootstrap_ms = elapsed_ms(start);
        let (pa, ps) = max_error(&p, &pm, r);
        let (ba, bs) = max_error(&b, &bm, r);
        rows.push(BenchRow {
            reps: r,
            mc_permutation_ms,
            mc_bootstrap_ms,
            permutation_max_abs_error: pa,
            bootstrap_max_abs_error: ba,
            permutation_max_error_se: ps,
            bootstrap_max_error_se: bs,
        });
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        input: InputDigest::from(&s),
        seed,
        closed_form_ms,
        rows,
    })
}
