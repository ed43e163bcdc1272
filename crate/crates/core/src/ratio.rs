//! Win ratio `W_T / W_C` with standard errors on the log scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphSummary;
use crate::moments::WinMoments;
use crate::normal;
use crate::perm::FsResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRatioResult {
    pub r_w: f64,
    pub log_rw: f64,
    /// `log_rw / z`; `None` when either is zero or `z` is undefined.
    pub se_pocock: Option<f64>,
    /// First-order delta method on the two-sample bootstrap covariance.
    pub se_delta: Option<f64>,
    pub ci_level: f64,
    pub ci_pocock: Option<(f64, f64)>,
    pub ci_delta: Option<(f64, f64)>,
}

/// Delta-method standard error of `ln(W_T / W_C)` at the observed wins.
pub fn delta_se(wins_t: f64, wins_c: f64, cov: &[[f64; 2]; 2]) -> Option<f64> {
    let var = cov[0][0] / (wins_t * wins_t) - 2.0 * cov[0][1] / (wins_t * wins_c) + cov[1][1] / (wins_c * wins_c);
    // The quadratic form of a PSD matrix; tiny negatives are rounding.
    let scale = (cov[0][0] / (wins_t * wins_t)).abs() + (cov[1][1] / (wins_c * wins_c)).abs();
    if var < -1e-12 * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    Some(var.max(0.0).sqrt())
}

fn interval(log_rw: f64, se: f64, z_crit: f64) -> (f64, f64) {
    ((log_rw - z_crit * se).exp(), (log_rw + z_crit * se).exp())
}

/// `boot` must be two-sample bootstrap moments for the same data.
pub fn win_ratio(summary: &GraphSummary, fs: &FsResult, boot: &WinMoments, ci_level: f64) -> Result<WinRatioResult> {
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(Error::Input(format!(
            "confidence level {ci_level} must lie strictly between 0 and 1"
        )));
    }
    let (wt, wc) = (summary.observed_t_wins, summary.observed_c_wins);
    if wt == 0 || wc == 0 {
        return Err(Error::RatioUndefined { wins_t: wt, wins_c: wc });
    }
    let (wt_f, wc_f) = (wt as f64, wc as f64);
    let r_w = wt_f / wc_f;
    let log_rw = r_w.ln();
    let z_crit = normal::quantile(1.0 - (1.0 - ci_level) / 2.0);

    let se_pocock = match fs.z {
        Some(z) if z != 0.0 && log_rw != 0.0 => Some(log_rw / z),
        _ => None,
    };
    let se_delta = delta_se(wt_f, wc_f, &boot.cov);
    Ok(WinRatioResult {
        r_w,
        log_rw,
        se_pocock,
        se_delta,
        ci_level,
        ci_pocock: se_pocock.map(|s| interval(log_rw, s.abs(), z_crit)),
        ci_delta: se_delta.map(|s| interval(log_rw, s, z_crit)),
    })
}
