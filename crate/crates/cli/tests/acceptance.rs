//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use exact_wins::fixtures::{cycle_example_arms, cycle_example_matrix, random_arms, random_skew};
use exact_wins::*;
use exact_wins_cli::commands::bench;
use exact_wins_cli::formats::{format_arms, format_matrix, parse_arms, parse_matrix};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const REL_TOL: f64 = 1e-12;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * b.abs().max(1.0)
}

fn fixture_summary() -> (OutcomeMatrix, ArmAssignment, GraphSummary) {
    let (u, arms) = (cycle_example_matrix(), cycle_example_arms());
    let s = summarize(&u, &arms).unwrap();
    (u, arms, s)
}

fn exact_strings(e: &ExactMoments) -> Vec<String> {
    [
        &e.exp_t,
        &e.exp_c,
        &e.cov[0][0],
        &e.cov[0][1],
        &e.cov[1][0],
        &e.cov[1][1],
        &e.var_diff,
    ]
    .iter()
    .map(|r| rational_string(r))
    .collect()
}

fn golden_permutation() -> Outcome {
    let start = Instant::now();
    let (_, _, s) = fixture_summary();
    let (w, _) = permutation_moments(&s, 2, 3).unwrap();
    let elapsed = start.elapsed();
    let want = [1.8, 1.8, 0.76, -0.24, -0.24, 0.56, 1.8];
    let got = [
        w.exp_t,
        w.exp_c,
        w.cov[0][0],
        w.cov[0][1],
        w.cov[1][0],
        w.cov[1][1],
        w.var_diff,
    ];
    let float_ok = got.iter().zip(want).all(|(&g, w)| (g - w).abs() <= REL_TOL * w.abs());
    let (e, _) = permutation_moments_exact(&s, 2, 3).unwrap();
    // 76/100, -24/100, 56/100 in lowest terms.
    let exact_ok = exact_strings(&e) == ["9/5", "9/5", "19/25", "-6/25", "-6/25", "14/25", "9/5"];
    check(
        float_ok && exact_ok && elapsed < Duration::from_millis(10),
        format!("float {got:?}, exact {:?}, {elapsed:?}", exact_strings(&e)),
    )
}

fn golden_bootstrap() -> Outcome {
    let (_, _, s) = fixture_summary();
    let (e, _) = bootstrap_moments_exact(&s, 2, 3).unwrap();
    let (d, k) = e.cov_over_common_denominator();
    let scaled: Vec<String> = k.iter().flatten().map(|x| x.to_string()).collect();
    let ok = rational_string(&e.exp_t) == "2"
        && rational_string(&e.exp_c) == "1"
        && d.to_string() == "6"
        && scaled == ["10", "-1", "-1", "9"]
        && rational_string(&e.var_diff) == "7/2";
    check(
        ok,
        format!(
            "exp [{}, {}], cov (1/{d}) {scaled:?}, var_diff {}",
            e.exp_t, e.exp_c, e.var_diff
        ),
    )
}

fn permutation_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let (mut matrices, mut cases, mut worst, mut exact_mismatch) = (0, 0, 0.0f64, 0);
    for big_n in 4..=8usize {
        for _ in 0..12 {
            let p_win = rand::Rng::random_range(&mut rng, 0.05..0.5);
            let u = random_skew(big_n, p_win, &mut rng);
            matrices += 1;
            for m in 1..big_n {
                let arms = random_arms(m, big_n - m, &mut rng);
                let s = summarize(&u, &arms).unwrap();
                let (w, _) = permutation_moments(&s, m, big_n - m).unwrap();
                let (e, _) = permutation_moments_exact(&s, m, big_n - m).unwrap();
                let o = enumerate_permutation_moments_exact(&u, m, big_n - m, DEFAULT_GUARD, Exec::default()).unwrap();
                worst = worst.max(w.max_rel_diff(&o.to_float()));
                exact_mismatch += usize::from(e.exp_t != o.exp_t || e.exp_c != o.exp_c || e.cov != o.cov);
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        matrices >= 50 && worst <= REL_TOL && exact_mismatch == 0 && elapsed < Duration::from_secs(60),
        format!("{matrices} matrices, {cases} (N, m) cases, max rel diff {worst:e}, exact mismatches {exact_mismatch}, {elapsed:?}"),
    )
}

fn bootstrap_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let (mut cases, mut worst, mut exact_mismatch) = (0, 0.0f64, 0);
    for m in 1..=4usize {
        for n in 1..=4usize {
            for _ in 0..4 {
                let p_win = rand::Rng::random_range(&mut rng, 0.05..0.5);
                let u = random_skew(m + n, p_win, &mut rng);
                let arms = random_arms(m, n, &mut rng);
                let s = summarize(&u, &arms).unwrap();
                let (w, _) = bootstrap_moments(&s, m, n).unwrap();
                let (e, _) = bootstrap_moments_exact(&s, m, n).unwrap();
                let o = enumerate_bootstrap_moments_exact(&u, &arms, DEFAULT_GUARD, Exec::default()).unwrap();
                worst = worst.max(w.max_rel_diff(&o.to_float()));
                exact_mismatch += usize::from(e.exp_t != o.exp_t || e.exp_c != o.exp_c || e.cov != o.cov);
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        cases >= 50 && worst <= REL_TOL && exact_mismatch == 0 && elapsed < Duration::from_secs(60),
        format!("{cases} matrices, max rel diff {worst:e}, exact mismatches {exact_mismatch}, {elapsed:?}"),
    )
}

fn fs_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rand::Rng::random_range(&mut rng, 1..=25usize);
        let n = rand::Rng::random_range(&mut rng, 1..=25usize);
        let u = random_skew(m + n, 0.3, &mut rng);
        let arms = random_arms(m, n, &mut rng);
        let s = summarize(&u, &arms).unwrap();
        let fs = fs_test(&u, &arms).unwrap();
        let (w, _) = permutation_moments(&s, m, n).unwrap();
        worst = worst.max((fs.variance - w.var_diff).abs() / w.var_diff.abs().max(1.0));
    }
    let (u, arms, s) = fixture_summary();
    let fs = fs_test(&u, &arms).unwrap();
    let (w, _) = permutation_moments(&s, 2, 3).unwrap();
    let fixture_ok = fs.sum_sq_scores == 6 && rel_close(fs.variance, 1.8) && rel_close(w.var_diff, 1.8);
    check(
        worst <= REL_TOL && fixture_ok,
        format!(
            "100 instances, max rel diff {worst:e}; fixture sum U_i^2 = {}, variance {}, var_diff {}",
            fs.sum_sq_scores, fs.variance, w.var_diff
        ),
    )
}

fn mann_whitney() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let mut details = Vec::new();
    let mut ok = true;
    for (m, n) in [(3usize, 4usize), (5, 5), (8, 7)] {
        let big_n = m + n;
        let h = Hierarchy::new(vec![MeasureSpec::new(
            "y",
            MeasureKind::Continuous,
            Direction::HigherBetter,
        )])
        .unwrap();
        // Distinct values: a random permutation of 0..N scaled off the integers.
        let mut vals: Vec<f64> = (0..big_n).map(|i| i as f64 * 1.25 + 0.1).collect();
        rand::seq::SliceRandom::shuffle(vals.as_mut_slice(), &mut rng);
        let records: Vec<PatientRecord> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let arm = if i < m { Arm::Treatment } else { Arm::Control };
                PatientRecord::new(format!("p{i}"), arm, vec![Observation::event(v)])
            })
            .collect();
        let u = build_outcome_matrix(&records, &h).unwrap();
        let arms = ArmAssignment::new(records.iter().map(|r| r.arm).collect()).unwrap();
        let s = summarize(&u, &arms).unwrap();
        let (e, _) = permutation_moments_exact(&s, m, n).unwrap();
        let num = m * n * (big_n + 1);
        let want = if num % 3 == 0 {
            (num / 3).to_string()
        } else {
            format!("{num}/3")
        };
        let got = rational_string(&e.var_diff);
        ok &= got == want;
        details.push(format!("({m},{n}): {got} vs {want}"));
    }
    check(ok, details.join(", "))
}

fn timed_closed_forms(u: &OutcomeMatrix, arms: &ArmAssignment) -> Duration {
    (0..5)
        .map(|_| {
            let start = Instant::now();
            let s = summarize(u, arms).unwrap();
            let p = permutation_moments(&s, arms.m(), arms.n()).unwrap();
            let b = bootstrap_moments(&s, arms.m(), arms.n()).unwrap();
            std::hint::black_box((p, b));
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn complexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let u1 = random_skew(1000, 0.5, &mut rng);
    let a1 = random_arms(500, 500, &mut rng);
    let u2 = random_skew(2000, 0.5, &mut rng);
    let a2 = random_arms(1000, 1000, &mut rng);
    let t1 = timed_closed_forms(&u1, &a1);
    let t2 = timed_closed_forms(&u2, &a2);
    let ratio = t2.as_secs_f64() / t1.as_secs_f64();
    check(
        (3.0..=5.5).contains(&ratio) && t2 < Duration::from_secs(2),
        format!("N=1000 {t1:?}, N=2000 {t2:?}, ratio {ratio:.2} (best of 5)"),
    )
}

fn speed_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    let u = random_skew(200, 0.35, &mut rng);
    let arms = random_arms(100, 100, &mut rng);
    let r = bench(&u, &arms, &[10_000, 100_000], 2025).unwrap();
    let (r4, r5) = (&r.rows[0], &r.rows[1]);
    let faster = r.closed_form_ms < r4.mc_permutation_ms && r.closed_form_ms < r4.mc_bootstrap_ms;
    let accurate = r5.permutation_max_error_se <= 4.0 && r5.bootstrap_max_error_se <= 4.0;
    check(
        faster && accurate,
        format!(
            "closed form {:.3} ms vs MC(1e4) {:.1}/{:.1} ms; MC(1e5) max error {:.2}/{:.2} SE (perm/boot)",
            r.closed_form_ms,
            r4.mc_permutation_ms,
            r4.mc_bootstrap_ms,
            r5.permutation_max_error_se,
            r5.bootstrap_max_error_se
        ),
    )
}

fn ratio_sanity() -> Outcome {
    let (u, arms, s) = fixture_summary();
    let fs = fs_test(&u, &arms).unwrap();
    let (b, _) = bootstrap_moments(&s, 2, 3).unwrap();
    let r = win_ratio(&s, &fs, &b, 0.95).unwrap();
    let se_p = r.se_pocock.unwrap_or(f64::NAN);
    let se_d = r.se_delta.unwrap_or(f64::NAN);
    let values_ok = r.r_w == 2.0 && (se_p - 0.9299).abs() <= 1e-3 && (se_d - 1.4434).abs() <= 1e-3;
    let mc = mc_bootstrap_log_ratio(&u, &arms, McConfig::new(1_000_000, 909)).unwrap();
    let mc_ok = (mc.sd - se_d).abs() <= 3.0 * mc.se_sd;
    check(
        values_ok && mc_ok,
        format!(
            "r_w {}, se_pocock {se_p:.6}, se_delta {se_d:.6}; MC sd of ln(W_T/W_C) {:.6} +/- {:.6} over {} of {} positive-win samples ({})",
            r.r_w,
            mc.sd,
            mc.se_sd,
            mc.used,
            mc.reps,
            if mc_ok { "agrees" } else { "does not agree with se_delta" }
        ),
    )
}

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases: 1000,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn instance_strategy() -> impl Strategy<Value = (OutcomeMatrix, ArmAssignment)> {
    (1usize..=12, 1usize..=12, 0.0f64..0.5, any::<u64>()).prop_map(|(m, n, p, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_skew(m + n, p, &mut rng), random_arms(m, n, &mut rng))
    })
}

fn invariants() -> Outcome {
    let mut failures = Vec::new();
    let mut record = |name: &str, r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    };

    let skew = runner().run(&(instance_strategy(), any::<u64>()), |((u, _), pick)| {
        prop_assert!(u.validate().is_ok());
        let big_n = u.n_patients();
        let (i, j) = ((pick % big_n as u64) as usize, ((pick >> 32) % big_n as u64) as usize);
        let mut entries = u.entries().to_vec();
        let old = entries[i * big_n + j];
        // Any other value in {-1, 0, 1} breaks skewness at (i, j).
        entries[i * big_n + j] = if old == 1 { -1 } else { old + 1 };
        let first = if i * big_n + j <= j * big_n + i { (i, j) } else { (j, i) };
        match OutcomeMatrix::from_entries(big_n, entries) {
            Err(Error::InvalidMatrix { row, col, .. }) => prop_assert_eq!((row, col), first),
            other => prop_assert!(false, "corruption not caught: {other:?}"),
        }
        Ok(())
    });
    record("skewness", skew.map_err(|e| e.to_string()));

    let conservation = runner().run(&instance_strategy(), |(u, arms)| {
        let s = summarize(&u, &arms).unwrap();
        prop_assert!(s.check_conservation().is_ok());
        let edges = u.edges().count() as u64;
        prop_assert_eq!(s.total_edges, edges);
        prop_assert_eq!(s.vertices.iter().map(|v| v.indegree).sum::<u64>(), edges);
        prop_assert_eq!(s.vertices.iter().map(|v| v.outdegree).sum::<u64>(), edges);
        Ok(())
    });
    record("conservation", conservation.map_err(|e| e.to_string()));

    let within = runner().run(&(instance_strategy(), any::<u64>()), |((u, arms), seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = random_skew(u.n_patients(), 0.4, &mut rng);
        let labels = arms.arms();
        let edited = OutcomeMatrix::from_upper(u.n_patients(), Exec::Sequential, |i, j| {
            if labels[i] == labels[j] {
                noise.get(i, j)
            } else {
                u.get(i, j)
            }
        });
        let (m, n) = (arms.m(), arms.n());
        let a = bootstrap_moments_exact(&summarize(&u, &arms).unwrap(), m, n).unwrap().0;
        let b = bootstrap_moments_exact(&summarize(&edited, &arms).unwrap(), m, n)
            .unwrap()
            .0;
        prop_assert_eq!(a, b);
        Ok(())
    });
    record("within-arm invariance", within.map_err(|e| e.to_string()));

    let psd = runner().run(&instance_strategy(), |(u, arms)| {
        let s = summarize(&u, &arms).unwrap();
        let (m, n) = (arms.m(), arms.n());
        prop_assert!(permutation_moments(&s, m, n).unwrap().0.is_psd(1e-9));
        prop_assert!(bootstrap_moments(&s, m, n).unwrap().0.is_psd(1e-9));
        Ok(())
    });
    record("psd", psd.map_err(|e| e.to_string()));

    let round_trip = runner().run(&instance_strategy(), |(u, arms)| {
        let path = Path::new("generated");
        prop_assert_eq!(parse_matrix(&format_matrix(&u), path).unwrap(), u);
        prop_assert_eq!(parse_arms(&format_arms(&arms), path).unwrap(), arms);
        Ok(())
    });
    record("file round-trip", round_trip.map_err(|e| e.to_string()));

    let pass = failures.is_empty();
    check(
        pass,
        if pass {
            "skewness, conservation, within-arm invariance, PSD, file round-trip: 1000 cases each".to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("golden permutation moments", golden_permutation),
        ("golden bootstrap moments", golden_bootstrap),
        ("permutation oracle equivalence", permutation_oracle),
        ("bootstrap oracle equivalence", bootstrap_oracle),
        ("FS identity", fs_identity),
        ("Mann-Whitney agreement", mann_whitney),
        ("complexity", complexity),
        ("speed and accuracy", speed_accuracy),
        ("win ratio sanity", ratio_sanity),
        ("invariant suite", invariants),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
