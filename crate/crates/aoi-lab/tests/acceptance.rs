//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them all).
//!
//! Criterion 1 is expected to stay red on its fourth cell: the printed
//! reference constant for the fixed-limit scheme at (B = 1.5e-3,
//! delta = 0.2) corresponds to a retry limit of 2, but delta exceeds the
//! single-shot failure probability there, so the minimal limit is 1 and the
//! honest value is the single-shot 1502.0 - the same number the randomized
//! column prints for that row. See the README's reproduction notes.

use aoi_lab::analytic::{aoi_det, aoi_det_with_k, aoi_rand, aoi_zero_error, truncated_geom_mean_shift};
use aoi_lab::experiments::{
    reproduce_table1, reproduce_table2, SimSettings, TABLE1_PRINTED_DET, TABLE1_PRINTED_RAND,
    TABLE1_ROWS, TABLE2_ROWS,
};
use aoi_lab::model::{derive_channel, ChannelParams, PhysicalParams, SchemePolicy};
use aoi_lab::sim::{empirical_charge_moments, run_episode, StopRule, SuccessMode};
use aoi_lab::stats;

fn criterion(n: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {n} {verdict} - {name}{}{detail}", if detail.is_empty() { "" } else { ": " });
    assert!(ok, "acceptance criterion {n} failed - {name}: {detail}");
}

fn reference_channel(battery_j: f64) -> ChannelParams {
    derive_channel(&PhysicalParams::default().with_battery(battery_j)).unwrap()
}

#[test]
fn criterion_1_table1_theory_deterministic() {
    let mut failures = Vec::new();
    for (i, &(battery_j, delta)) in TABLE1_ROWS.iter().enumerate() {
        let chan = reference_channel(battery_j);
        let got = aoi_det(chan.beta, chan.pi, delta).unwrap().avg_aoi;
        let want = TABLE1_PRINTED_DET[i];
        let rel = (got - want).abs() / want;
        println!(
            "  table1 det B={battery_j} delta={delta}: computed {got:.4}, printed {want}, rel {rel:.2e}"
        );
        if rel > 1e-3 {
            failures.push(format!(
                "(B={battery_j}, delta={delta}): computed {got:.1} vs printed {want} \
                 [the printed value corresponds to k=2, but delta > 1-pi = {:.4} makes the \
                 minimal limit k=1; the honest single-shot value equals the randomized \
                 column's own printed {got:.1}]",
                1.0 - chan.pi
            ));
        }
    }
    criterion(
        1,
        "fixed-limit theory reproduces the printed table within 0.1%",
        failures.is_empty(),
        &failures.join("; "),
    );
}

#[test]
fn criterion_2_table1_theory_randomized() {
    let mut worst = 0.0f64;
    for (i, &(battery_j, delta)) in TABLE1_ROWS.iter().enumerate() {
        let chan = reference_channel(battery_j);
        let got = aoi_rand(chan.beta, chan.pi, delta).unwrap().avg_aoi;
        let want = TABLE1_PRINTED_RAND[i];
        let rel = (got - want).abs() / want;
        println!(
            "  table1 rand B={battery_j} delta={delta}: computed {got:.4}, printed {want}, rel {rel:.2e}"
        );
        worst = worst.max(rel);
    }
    criterion(
        2,
        "randomized theory reproduces the printed table within 0.1%",
        worst <= 1e-3,
        &format!("worst rel {worst:.2e}"),
    );
}

#[test]
fn criterion_3_table1_simulation() {
    let settings = SimSettings::default();
    let report = reproduce_table1(&settings).expect("table generation");
    let mut ok = true;
    let mut detail = String::new();
    let delivered = settings.n_reps * settings.limit_per_rep;
    for row in &report.rows {
        for (label, theory, sim) in [
            ("det", row.det_theory, row.det_sim),
            ("rand", row.rand_theory, row.rand_sim),
        ] {
            let rel = (sim - theory).abs() / theory;
            println!(
                "  table1 {label} B={} delta={}: sim {sim:.2} vs theory {theory:.2} ({:.3}%) over {delivered} deliveries",
                row.battery_j,
                row.delta,
                100.0 * rel
            );
            if rel > 0.02 {
                ok = false;
                detail = format!("{label} B={} delta={} off by {:.2}%", row.battery_j, row.delta, 100.0 * rel);
            }
        }
    }
    assert!(delivered >= 50_000, "need at least 50k deliveries per cell");
    criterion(3, "simulated table-1 ages within 2% of the analytic values", ok, &detail);
}

#[test]
fn criterion_4_table2_reliability() {
    let settings = SimSettings::default();
    let report = reproduce_table2(&settings).expect("table generation");
    let mut ok = true;
    let mut detail = String::new();
    for row in &report.rows {
        let gap_pp = 100.0 * (row.empirical_reliability - row.target_reliability).abs();
        println!(
            "  table2 B={} target {:.0}%: empirical {:.3}% over {} statuses (gap {gap_pp:.3}pp)",
            row.battery_j,
            100.0 * row.target_reliability,
            100.0 * row.empirical_reliability,
            row.statuses_sent
        );
        assert!(row.statuses_sent >= 40_000);
        if gap_pp > 0.5 {
            ok = false;
            detail = format!("B={} target={} off by {gap_pp:.2}pp", row.battery_j, row.target_reliability);
        }
    }
    assert_eq!(report.rows.len(), TABLE2_ROWS.len());
    criterion(4, "empirical reliabilities within 0.5pp of their targets", ok, &detail);
}

#[test]
fn criterion_5_tradeoff_structure() {
    let (beta, pi) = (87.0, 0.65);
    let q: f64 = 1.0 - pi;
    let mut ok = true;
    let mut detail = String::new();

    // randomized meets fixed-limit exactly on the interval boundaries
    for j in 1..=6i32 {
        let delta = q.powi(j);
        let det = aoi_det(beta, pi, delta).unwrap().avg_aoi;
        let rand = aoi_rand(beta, pi, delta).unwrap().avg_aoi;
        let rel = (det - rand).abs() / det;
        if rel > 1e-9 {
            ok = false;
            detail = format!("boundary j={j}: det {det} vs rand {rand}");
        }
    }

    // staircase: constant strictly inside intervals, jumping only at powers
    for j in 1..=5i32 {
        let lo = q.powi(j + 1) * (1.0 + 1e-6);
        let hi = q.powi(j) * (1.0 - 1e-6);
        let anchor = aoi_det(beta, pi, hi).unwrap().avg_aoi;
        for step in 0..5 {
            let delta = lo * (hi / lo).powf(f64::from(step) / 4.0);
            let a = aoi_det(beta, pi, delta).unwrap().avg_aoi;
            if (a - anchor).abs() > 1e-12 * anchor {
                ok = false;
                detail = format!("not constant inside interval j={j} at delta={delta}");
            }
        }
        let above = aoi_det(beta, pi, q.powi(j) * (1.0 + 1e-6)).unwrap().avg_aoi;
        let below = aoi_det(beta, pi, q.powi(j) * (1.0 - 1e-6)).unwrap().avg_aoi;
        if below <= above {
            ok = false;
            detail = format!("no jump just below q^{j}");
        }
    }

    // randomized never above fixed-limit on strict interiors
    for j in 1..=5i32 {
        for frac in [0.05, 0.3, 0.7, 0.95] {
            let delta = q.powi(j + 1) + frac * (q.powi(j) - q.powi(j + 1));
            let det = aoi_det(beta, pi, delta).unwrap().avg_aoi;
            let rand = aoi_rand(beta, pi, delta).unwrap().avg_aoi;
            if rand > det * (1.0 + 1e-12) {
                ok = false;
                detail = format!("rand above det at delta={delta}");
            }
        }
    }

    criterion(
        5,
        "trade-off staircase jumps at the failure powers; randomized curve matches at \
         boundaries and dominates inside",
        ok,
        &detail,
    );
}

#[test]
fn criterion_6_zero_error_limit() {
    let mut worst = 0.0f64;
    let mut count = 0;
    for b in 1..=5 {
        for p in 1..=5 {
            let beta = f64::from(b) * 400.0;
            let pi = 0.1 + f64::from(p) * 0.15;
            let tail = aoi_det_with_k(beta, pi, 10_000).unwrap().avg_aoi;
            let zero = aoi_zero_error(beta, pi).unwrap().avg_aoi;
            worst = worst.max((tail - zero).abs() / zero);
            count += 1;
        }
    }
    assert!(count >= 25);
    criterion(
        6,
        "fixed-limit age at k = 1e4 matches the never-give-up closed form within 1e-6",
        worst <= 1e-6,
        &format!("worst rel {worst:.2e} over {count} grid points"),
    );
}

#[test]
fn criterion_7_truncated_sum_oracle() {
    // independent oracle: direct summation of the truncated-mean series
    let direct = |pi: f64, k: u32| -> f64 {
        let q = 1.0 - pi;
        let norm = 1.0 - q.powi(k as i32);
        (1..=k)
            .map(|j| f64::from(j - 1) * q.powi(j as i32 - 1) * pi / norm)
            .sum()
    };
    let mut worst = 0.0f64;
    for k in 1..=50u32 {
        for step in 1..=19u32 {
            let pi = f64::from(step) * 0.05;
            let closed = truncated_geom_mean_shift(pi, k).unwrap();
            worst = worst.max((closed - direct(pi, k)).abs());
        }
    }
    criterion(
        7,
        "truncated-mean closed form agrees with direct summation within 1e-10",
        worst <= 1e-10,
        &format!("worst abs deviation {worst:.2e}"),
    );
}

#[test]
fn criterion_8_moment_oracles() {
    let mut ok = true;
    let mut detail = String::new();
    for (i, &beta) in [1.0, 87.0].iter().enumerate() {
        for (j, &pi) in [0.5, 0.65, 0.773].iter().enumerate() {
            let chan = ChannelParams::from_beta_pi(beta, pi).unwrap();
            let policy = SchemePolicy::zero_error();
            let seed = 8800 + (i * 3 + j) as u64;
            let result = run_episode(
                &chan,
                &policy,
                StopRule::MaxSuccesses(20_000),
                seed,
                SuccessMode::Bernoulli,
            )
            .unwrap();

            // recharge-duration moments against the renewal closed forms
            let charge = empirical_charge_moments(&result).unwrap();
            let mean_gap = (charge.mean - (1.0 + beta)).abs();
            if mean_gap > 3.0 * charge.mean_stderr {
                ok = false;
                detail = format!(
                    "charge mean beta={beta}: {:.4} vs {} (se {:.4})",
                    charge.mean,
                    1.0 + beta,
                    charge.mean_stderr
                );
            }
            let second_expect = 1.0 + 3.0 * beta + beta * beta;
            if (charge.second - second_expect).abs() > 3.0 * charge.second_stderr {
                ok = false;
                detail = format!("charge second moment beta={beta} off");
            }

            // attempts per delivery against the geometric moments
            let f: Vec<f64> = result.cycles.iter().map(|c| c.attempts as f64).collect();
            let f2: Vec<f64> = f.iter().map(|x| x * x).collect();
            let mean_se = stats::stderr_of_mean(&f);
            let second_se = stats::stderr_of_mean(&f2);
            let mean_gap = (stats::mean(&f) - 1.0 / pi).abs();
            let second_gap = (stats::mean(&f2) - (2.0 - pi) / (pi * pi)).abs();
            println!(
                "  beta={beta} pi={pi}: charge mean {:.3} (want {:.0}), attempts mean {:.4} \
                 (want {:.4}), attempts second {:.4} (want {:.4})",
                charge.mean,
                1.0 + beta,
                stats::mean(&f),
                1.0 / pi,
                stats::mean(&f2),
                (2.0 - pi) / (pi * pi)
            );
            if mean_gap > 3.0 * mean_se || second_gap > 3.0 * second_se {
                ok = false;
                detail = format!("attempt moments beta={beta} pi={pi} outside 3 standard errors");
            }
        }
    }
    criterion(
        8,
        "simulated recharge and attempt-count moments within 3 standard errors of the closed forms",
        ok,
        &detail,
    );
}

#[test]
fn criterion_9_determinism() {
    use std::process::Command;

    let bin = env!("CARGO_BIN_EXE_aoi-lab");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_str = out.to_str().unwrap();

    let runs: Vec<(&str, Vec<String>)> = vec![
        ("analytic", vec!["analytic", "--beta", "87", "--pi", "0.65", "--scheme", "zero-error"]
            .into_iter().map(String::from).collect()),
        ("simulate", vec![
            "simulate", "--beta", "87", "--pi", "0.65", "--scheme", "rand", "--delta", "0.1",
            "--stop", "successes", "--horizon", "500", "--reps", "3", "--seed", "9",
        ].into_iter().map(String::from).collect()),
        ("tradeoff", vec!["tradeoff", "--beta", "87", "--pi", "0.65", "--grid-points", "40"]
            .into_iter().map(String::from).collect()),
        ("sweep", vec!["sweep", "--b-points", "4", "--scheme", "rand", "--delta", "0.01"]
            .into_iter().map(String::from).collect()),
        ("tables", vec!["tables", "--reps", "8", "--horizon", "1000", "--seed", "7"]
            .into_iter().map(String::from).collect()),
    ];

    let mut ok = true;
    let mut detail = String::new();
    for (name, args) in &runs {
        let mut snapshot = Vec::new();
        for pass in 0..2 {
            let status = Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(out_str)
                .output()
                .expect("spawn CLI");
            assert!(
                status.status.success(),
                "{name} pass {pass} failed: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            let mut files: Vec<_> = std::fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            files.sort();
            let contents: Vec<(String, Vec<u8>)> = files
                .iter()
                .map(|p| (p.display().to_string(), std::fs::read(p).unwrap()))
                .collect();
            if pass == 0 {
                snapshot = contents;
            } else if snapshot != contents {
                ok = false;
                detail = format!("{name}: outputs differ between reruns");
            }
        }
        println!("  {name}: rerun byte-identical = {}", ok);
        // keep the directory; later commands overwrite their own files
    }
    criterion(9, "reruns with identical config and seed are byte-identical", ok, &detail);
}
