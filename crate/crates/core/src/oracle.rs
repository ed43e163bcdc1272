//! Brute-force and Monte Carlo estimators of the win-count moments.
//!
//! These never look at the graph summary. The enumerators walk every arm
//! assignment (or every bootstrap weight vector) and return exact moments;
//! the Monte Carlo estimators draw seeded random samples. Both serve as
//! independent checks on the closed forms in [`crate::perm`] and
//! [`crate::boot`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Arm, ArmAssignment};
use crate::moments::{ExactMoments, Method, PowerSums, WinMoments};
use crate::outcome::OutcomeMatrix;
use crate::par::{self, Exec};

/// Largest number of assignments or weight-vector pairs the enumerators
/// accept by default.
pub const DEFAULT_GUARD: u128 = 1_000_000;

/// Monte Carlo draws per independently seeded chunk.
const MC_CHUNK: u64 = 4096;

/// Assignments per enumeration work unit.
const ENUM_CHUNK: u128 = 8192;

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Number of arm assignments with `m` treatment labels among `m + n`.
pub fn permutation_enumeration_size(m: usize, n: usize) -> u128 {
    binomial((m + n) as u64, m as u64)
}

/// Number of (treatment, control) weight-vector pairs.
pub fn bootstrap_enumeration_size(m: usize, n: usize) -> u128 {
    let comps = |k: usize| {
        if k == 0 {
            1
        } else {
            binomial(2 * k as u64 - 1, k as u64 - 1)
        }
    };
    comps(m).saturating_mul(comps(n))
}

/// Rows of `+1` entries packed into 64-bit words.
struct WinBits {
    words: usize,
    rows: Vec<u64>,
}

impl WinBits {
    fn new(u: &OutcomeMatrix) -> Self {
        let n = u.n_patients();
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![0u64; n * words];
        for (i, j) in u.edges() {
            rows[i * words + j / 64] |= 1 << (j % 64);
        }
        WinBits { words, rows }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    /// `(W_T, W_C)` for the treatment set given by `members` and its mask.
    fn wins(&self, treated: &[usize], control: &[usize], mask: &[u64]) -> (u64, u64) {
        let mut wt = 0u64;
        for &i in treated {
            wt += self
                .row(i)
                .iter()
                .zip(mask)
                .map(|(r, m)| u64::from((r & !m).count_ones()))
                .sum::<u64>();
        }
        let mut wc = 0u64;
        for &i in control {
            wc += self
                .row(i)
                .iter()
                .zip(mask)
                .map(|(r, m)| u64::from((r & m).count_ones()))
                .sum::<u64>();
        }
        (wt, wc)
    }
}

/// Integer power sums of `(W_T, W_C)`; addition is exact, so partial sums
/// combine identically under any schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Sums {
    weight: u128,
    t: u128,
    c: u128,
    tt: u128,
    tc: u128,
    cc: u128,
}

impl Sums {
    fn add(&mut self, w: u128, wt: u64, wc: u64) {
        let (t, c) = (u128::from(wt), u128::from(wc));
        self.weight += w;
        self.t += w * t;
        self.c += w * c;
        self.tt += w * t * t;
        self.tc += w * t * c;
        self.cc += w * c * c;
    }

    fn merge(mut self, o: Sums) -> Sums {
        self.weight += o.weight;
        self.t += o.t;
        self.c += o.c;
        self.tt += o.tt;
        self.tc += o.tc;
        self.cc += o.cc;
        self
    }

    fn power_sums(&self) -> PowerSums {
        PowerSums {
            total: BigInt::from(self.weight),
            s_t: BigInt::from(self.t),
            s_c: BigInt::from(self.c),
            s_tt: BigInt::from(self.tt),
            s_tc: BigInt::from(self.tc),
            s_cc: BigInt::from(self.cc),
        }
    }

    /// Sample mean and unbiased (divisor `R - 1`) covariance.
    fn sample_moments(&self, method: Method) -> WinMoments {
        let r = BigInt::from(self.weight);
        let big = |x: u128| BigInt::from(x);
        let mean = |s: u128| BigRational::new(big(s), r.clone());
        let cov = |sxy: u128, sx: u128, sy: u128| {
            let num = &r * big(sxy) - big(sx) * big(sy);
            let den = &r * (&r - 1);
            BigRational::new(num, den)
        };
        let f = |q: BigRational| q.to_f64().unwrap_or(f64::NAN);
        let tc = f(cov(self.tc, self.t, self.c));
        WinMoments::new(
            method,
            f(mean(self.t)),
            f(mean(self.c)),
            [
                [f(cov(self.tt, self.t, self.t)), tc],
                [tc, f(cov(self.cc, self.c, self.c))],
            ],
        )
    }
}

fn check_guard(what: &'static str, size: u128, guard: u128) -> Result<()> {
    if size > guard {
        return Err(Error::GuardExceeded { what, size, guard });
    }
    Ok(())
}

/// Lexicographic combination of rank `rank` among all `k`-subsets of `0..n`.
fn unrank_combination(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0usize;
    for slot in 0..k {
        loop {
            // Combinations that start this slot with `next`.
            let block = binomial((n - next - 1) as u64, (k - slot - 1) as u64);
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances to the next combination in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}

/// Exact permutation moments by visiting all `C(N, m)` arm assignments.
pub fn enumerate_permutation_moments(u: &OutcomeMatrix, m: usize, n: usize) -> Result<WinMoments> {
    Ok(enumerate_permutation_moments_exact(u, m, n, DEFAULT_GUARD, Exec::default())?.to_float())
}

pub fn enumerate_permutation_moments_exact(
    u: &OutcomeMatrix,
    m: usize,
    n: usize,
    guard: u128,
    exec: Exec,
) -> Result<ExactMoments> {
    let total = u.n_patients();
    if m == 0 || n == 0 {
        return Err(Error::DegenerateDesign { m, n });
    }
    if m + n != total {
        return Err(Error::Shape(format!(
            "m + n = {} but the matrix is {total} x {total}",
            m + n
        )));
    }
    let size = permutation_enumeration_size(m, n);
    check_guard("permutation", size, guard)?;

    let bits = WinBits::new(u);
    let chunks = size.div_ceil(ENUM_CHUNK) as usize;
    let partial = par::map_indexed(exec, chunks, |chunk| {
        let start = chunk as u128 * ENUM_CHUNK;
        let len = ENUM_CHUNK.min(size - start);
        let mut treated = unrank_combination(total, m, start);
        let mut control = Vec::with_capacity(n);
        let mut mask = vec![0u64; bits.words];
        let mut sums = Sums::default();
        for step in 0..len {
            if step > 0 {
                next_combination(&mut treated, total);
            }
            mask.iter_mut().for_each(|w| *w = 0);
            for &i in &treated {
                mask[i / 64] |= 1 << (i % 64);
            }
            control.clear();
            control.extend((0..total).filter(|&i| mask[i / 64] & (1 << (i % 64)) == 0));
            let (wt, wc) = bits.wins(&treated, &control, &mask);
            sums.add(1, wt, wc);
        }
        sums
    });
    let sums = partial.into_iter().fold(Sums::default(), Sums::merge);
    debug_assert_eq!(sums.weight, size);
    Ok(sums.power_sums().into_exact(Method::OraclePermutation))
}

/// All weak compositions of `total` into `parts` parts with their
/// multinomial coefficients, flattened.
fn compositions(parts: usize, total: usize) -> (Vec<u8>, Vec<u128>) {
    let fact: Vec<u128> = (0..=total as u128)
        .scan(1u128, |acc, i| {
            if i > 0 {
                *acc *= i;
            }
            Some(*acc)
        })
        .collect();
    let mut flat = Vec::new();
    let mut weights = Vec::new();
    let mut cur = vec![0u8; parts];
    fn rec(idx: usize, left: usize, cur: &mut [u8], fact: &[u128], flat: &mut Vec<u8>, weights: &mut Vec<u128>) {
        if idx + 1 == cur.len() {
            cur[idx] = left as u8;
            let denom: u128 = cur.iter().map(|&k| fact[k as usize]).product();
            flat.extend_from_slice(cur);
            weights.push(fact[fact.len() - 1] / denom);
            return;
        }
        for k in 0..=left {
            cur[idx] = k as u8;
            rec(idx + 1, left - k, cur, fact, flat, weights);
        }
    }
    rec(0, total, &mut cur, &fact, &mut flat, &mut weights);
    (flat, weights)
}

/// Win edges as local indices: for each treatment patient, the control
/// patients it beats and the control patients that beat it.
struct CrossWins {
    treated: Vec<usize>,
    control: Vec<usize>,
    beats: Vec<Vec<usize>>,
    beaten_by: Vec<Vec<usize>>,
}

impl CrossWins {
    fn new(u: &OutcomeMatrix, arms: &ArmAssignment) -> Self {
        let treated: Vec<usize> = (0..arms.len()).filter(|&i| arms.arm(i) == Arm::Treatment).collect();
        let control: Vec<usize> = (0..arms.len()).filter(|&i| arms.arm(i) == Arm::Control).collect();
        let beats = treated
            .iter()
            .map(|&i| (0..control.len()).filter(|&j| u.get(i, control[j]) == 1).collect())
            .collect();
        let beaten_by = treated
            .iter()
            .map(|&i| (0..control.len()).filter(|&j| u.get(i, control[j]) == -1).collect())
            .collect();
        CrossWins {
            treated,
            control,
            beats,
            beaten_by,
        }
    }

    fn wins(&self, k: &[u8], l: &[u8]) -> (u64, u64) {
        let mut wt = 0u64;
        let mut wc = 0u64;
        for (i, &ki) in k.iter().enumerate() {
            if ki == 0 {
                continue;
            }
            let ki = u64::from(ki);
            wt += ki * self.beats[i].iter().map(|&j| u64::from(l[j])).sum::<u64>();
            wc += ki * self.beaten_by[i].iter().map(|&j| u64::from(l[j])).sum::<u64>();
        }
        (wt, wc)
    }
}

/// Exact two-sample bootstrap moments by visiting every pair of weight
/// vectors, each weighted by its multinomial count of raw samples.
pub fn enumerate_bootstrap_moments(u: &OutcomeMatrix, arms: &ArmAssignment) -> Result<WinMoments> {
    Ok(enumerate_bootstrap_moments_exact(u, arms, DEFAULT_GUARD, Exec::default())?.to_float())
}

pub fn enumerate_bootstrap_moments_exact(
    u: &OutcomeMatrix,
    arms: &ArmAssignment,
    guard: u128,
    exec: Exec,
) -> Result<ExactMoments> {
    if arms.len() != u.n_patients() {
        return Err(Error::Shape(format!(
            "arm vector has {} entries but the matrix has {} rows",
            arms.len(),
            u.n_patients()
        )));
    }
    let (m, n) = (arms.m(), arms.n());
    check_guard("bootstrap", bootstrap_enumeration_size(m, n), guard)?;

    let cross = CrossWins::new(u, arms);
    let (k_flat, k_w) = compositions(m, m);
    let (l_flat, l_w) = compositions(n, n);
    debug_assert_eq!(cross.treated.len(), m);
    debug_assert_eq!(cross.control.len(), n);

    let partial = par::map_indexed(exec, l_w.len(), |li| {
        let l = &l_flat[li * n..(li + 1) * n];
        let mut sums = Sums::default();
        for (ki, &wk) in k_w.iter().enumerate() {
            let k = &k_flat[ki * m..(ki + 1) * m];
            let (wt, wc) = cross.wins(k, l);
            sums.add(wk * l_w[li], wt, wc);
        }
        sums
    });
    let sums = partial.into_iter().fold(Sums::default(), Sums::merge);
    Ok(sums.power_sums().into_exact(Method::OracleBootstrap))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub reps: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(reps: u64, seed: u64) -> Self {
        McConfig { reps, seed }
    }
}

/// Runs `reps` draws in chunks of [`MC_CHUNK`]. Chunk `c` uses ChaCha8 seeded
/// from `seed` on stream `c`, so results do not depend on the thread count.
fn run_chunks<S, F>(exec: Exec, cfg: McConfig, f: F) -> Vec<S>
where
    S: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> S + Sync + Send,
{
    let chunks = cfg.reps.div_ceil(MC_CHUNK) as usize;
    par::map_indexed(exec, chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        let start = c as u64 * MC_CHUNK;
        f(&mut rng, MC_CHUNK.min(cfg.reps - start))
    })
}

fn check_reps(cfg: McConfig) -> Result<()> {
    if cfg.reps < 2 {
        return Err(Error::Input(format!(
            "sample covariance is undefined for {} replicate(s); need at least 2",
            cfg.reps
        )));
    }
    Ok(())
}

/// Monte Carlo over uniformly random arm assignments with `arms.m()` treated.
pub fn mc_permutation(u: &OutcomeMatrix, arms: &ArmAssignment, cfg: McConfig) -> Result<WinMoments> {
    mc_permutation_with(u, arms, cfg, Exec::default())
}

pub fn mc_permutation_with(u: &OutcomeMatrix, arms: &ArmAssignment, cfg: McConfig, exec: Exec) -> Result<WinMoments> {
    check_reps(cfg)?;
    let total = u.n_patients();
    if arms.len() != total {
        return Err(Error::Shape(format!(
            "arm vector has {} entries but the matrix has {total} rows",
            arms.len()
        )));
    }
    let m = arms.m();
    let bits = WinBits::new(u);
    let partial = run_chunks(exec, cfg, |rng, count| {
        let mut order: Vec<usize> = (0..total).collect();
        let mut mask = vec![0u64; bits.words];
        let mut sums = Sums::default();
        for _ in 0..count {
            for i in 0..m {
                let j = rng.random_range(i..total);
                order.swap(i, j);
            }
            mask.iter_mut().for_each(|w| *w = 0);
            for &i in &order[..m] {
                mask[i / 64] |= 1 << (i % 64);
            }
            let (wt, wc) = bits.wins(&order[..m], &order[m..], &mask);
            sums.add(1, wt, wc);
        }
        sums
    });
    let sums = partial.into_iter().fold(Sums::default(), Sums::merge);
    Ok(sums.sample_moments(Method::MonteCarloPermutation))
}

fn bootstrap_weights(rng: &mut ChaCha8Rng, counts: &mut [u8]) {
    counts.iter_mut().for_each(|c| *c = 0);
    let size = counts.len();
    for _ in 0..size {
        counts[rng.random_range(0..size)] += 1;
    }
}

fn check_bootstrap_input(u: &OutcomeMatrix, arms: &ArmAssignment) -> Result<()> {
    if arms.len() != u.n_patients() {
        return Err(Error::Shape(format!(
            "arm vector has {} entries but the matrix has {} rows",
            arms.len(),
            u.n_patients()
        )));
    }
    if arms.m().max(arms.n()) > usize::from(u8::MAX) {
        return Err(Error::Input(
            "bootstrap sampling supports at most 255 patients per arm".into(),
        ));
    }
    Ok(())
}

/// Monte Carlo over two-sample bootstrap resamples.
pub fn mc_bootstrap(u: &OutcomeMatrix, arms: &ArmAssignment, cfg: McConfig) -> Result<WinMoments> {
    mc_bootstrap_with(u, arms, cfg, Exec::default())
}

pub fn mc_bootstrap_with(u: &OutcomeMatrix, arms: &ArmAssignment, cfg: McConfig, exec: Exec) -> Result<WinMoments> {
    check_reps(cfg)?;
    check_bootstrap_input(u, arms)?;
    let cross = CrossWins::new(u, arms);
    let (m, n) = (arms.m(), arms.n());
    let partial = run_chunks(exec, cfg, |rng, count| {
        let (mut k, mut l) = (vec![0u8; m], vec![0u8; n]);
        let mut sums = Sums::default();
        for _ in 0..count {
            bootstrap_weights(rng, &mut k);
            bootstrap_weights(rng, &mut l);
            let (wt, wc) = cross.wins(&k, &l);
            sums.add(1, wt, wc);
        }
        sums
    });
    let sums = partial.into_iter().fold(Sums::default(), Sums::merge);
    Ok(sums.sample_moments(Method::MonteCarloBootstrap))
}

/// Standard errors of the five Monte Carlo moments
/// (`exp_t, exp_c, var_t, cov_tc, var_c`) after `reps` draws, from the exact
/// covariance. The second-moment terms use the normal-theory
/// `Var(s_xy) = (s_xx s_yy + s_xy^2) / (R - 1)`.
pub fn theoretical_se(exact: &WinMoments, reps: u64) -> [f64; 5] {
    let r = reps as f64;
    let (vt, c, vc) = (exact.cov[0][0], exact.cov[0][1], exact.cov[1][1]);
    let df = (r - 1.0).max(1.0);
    [
        (vt / r).sqrt(),
        (vc / r).sqrt(),
        vt * (2.0 / df).sqrt(),
        ((vt * vc + c * c) / df).sqrt(),
        vc * (2.0 / df).sqrt(),
    ]
}

/// Distribution of `ln(W_T / W_C)` over bootstrap resamples in which both
/// win counts are positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRatioSample {
    pub reps: u64,
    /// Resamples with `W_T > 0` and `W_C > 0`.
    pub used: u64,
    pub mean: f64,
    /// Sample standard deviation (divisor `used - 1`).
    pub sd: f64,
    /// Large-sample standard error of `sd`, from the sample fourth moment.
    pub se_sd: f64,
}

pub fn mc_bootstrap_log_ratio(u: &OutcomeMatrix, arms: &ArmAssignment, cfg: McConfig) -> Result<LogRatioSample> {
    check_reps(cfg)?;
    check_bootstrap_input(u, arms)?;
    let cross = CrossWins::new(u, arms);
    let (m, n) = (arms.m(), arms.n());
    let partial = run_chunks(Exec::default(), cfg, |rng, count| {
        let (mut k, mut l) = (vec![0u8; m], vec![0u8; n]);
        let mut logs = Vec::with_capacity(count as usize);
        for _ in 0..count {
            bootstrap_weights(rng, &mut k);
            bootstrap_weights(rng, &mut l);
            let (wt, wc) = cross.wins(&k, &l);
            if wt > 0 && wc > 0 {
                logs.push((wt as f64 / wc as f64).ln());
            }
        }
        logs
    });
    let logs: Vec<f64> = partial.into_iter().flatten().collect();
    let used = logs.len() as u64;
    if used < 2 {
        return Err(Error::Input(format!(
            "only {used} resample(s) had both win counts positive"
        )));
    }
    let k = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / k;
    let m2 = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
    let m4 = logs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / k;
    let var = m2 * k / (k - 1.0);
    let sd = var.sqrt();
    let se_var = ((m4 - m2 * m2) / k).max(0.0).sqrt();
    let se_sd = if sd > 0.0 { se_var / (2.0 * sd) } else { 0.0 };
    Ok(LogRatioSample {
        reps: cfg.reps,
        used,
        mean,
        sd,
        se_sd,
    })
}
