use proptest::prelude::*;
use trendalpha::kernels::{self, Lag, Stat, WindowSpec};
use trendalpha_testkit::{compare_series, oracle, FixtureRng};

const STATS: [Stat; 8] = [
    Stat::Sum,
    Stat::Mean,
    Stat::StdDev,
    Stat::Min,
    Stat::Max,
    Stat::ArgMax,
    Stat::ArgMin,
    Stat::Product,
];

fn check(name: &str, actual: &[f64], expected: &[f64], tol: f64) {
    match compare_series(actual, expected) {
        Ok(err) => assert!(err <= tol, "{name}: rel err {err:e}"),
        Err(msg) => panic!("{name}: {msg}"),
    }
}

#[test]
fn every_kernel_matches_brute_force() {
    let mut rng = FixtureRng::new(11);
    for trial in 0..5 {
        let s = rng.series(200, -3.0, 3.0);
        let y = rng.series(200, 50.0, 150.0);
        for len in 2..=20 {
            let w = WindowSpec::new(len).unwrap();
            for stat in STATS {
                // keep products in a sane range
                let input: Vec<f64> = if stat == Stat::Product { s.iter().map(|v| 1.0 + v / 10.0).collect() } else { s.clone() };
                check(&format!("{stat:?} w={len} trial={trial}"), &kernels::ts_stat(&input, w, stat), &oracle::ts_stat(&input, len, len, stat), 1e-9);
            }
            check("ts_rank", &kernels::ts_rank(&s, w), &oracle::ts_rank(&s, len), 1e-9);
            check("corr", &kernels::rolling_corr(&s, &y, w), &oracle::rolling_corr(&s, &y, len), 1e-9);
            check("cov", &kernels::rolling_cov(&s, &y, w), &oracle::rolling_cov(&s, &y, len), 1e-9);
            check("decay_linear", &kernels::decay_linear(&y, w), &oracle::decay_linear(&y, len), 1e-9);
        }
        for d in 1..=5 {
            let lag = Lag::new(d).unwrap();
            check("delay", &kernels::delay(&s, lag), &oracle::delay(&s, d), 0.0);
            check("delta", &kernels::delta(&s, lag), &oracle::delta(&s, d), 0.0);
        }
        check("cs_rank", &kernels::cs_rank(&s), &oracle::cs_rank(&s), 1e-12);
        check("scale", &kernels::scale(&s, 2.5), &oracle::scale(&s, 2.5), 1e-12);
        check("signedpower", &kernels::signedpower(&s, 1.7), &oracle::signedpower(&s, 1.7), 1e-12);
    }
}

#[test]
fn partial_windows_follow_min_valid() {
    let mut rng = FixtureRng::new(5);
    let mut s = rng.series(200, 0.0, 10.0);
    for i in (0..200).step_by(7) {
        s[i] = f64::NAN;
    }
    for len in 2..=12 {
        for min_valid in 1..=len {
            let w = WindowSpec::with_min_valid(len, min_valid).unwrap();
            for stat in STATS {
                check(&format!("{stat:?} {len}/{min_valid}"), &kernels::ts_stat(&s, w, stat), &oracle::ts_stat(&s, len, min_valid, stat), 1e-9);
            }
        }
    }
}

#[test]
fn undefined_inputs_make_full_windows_undefined() {
    let s = [1.0, 2.0, f64::NAN, 4.0, 5.0, 6.0];
    let w = WindowSpec::new(3).unwrap();
    let out = kernels::ts_stat(&s, w, Stat::Mean);
    assert!(out[2].is_nan() && out[3].is_nan() && out[4].is_nan());
    assert_eq!(out[5], 5.0);
}

#[test]
fn streaming_stats_do_not_drift() {
    let mut rng = FixtureRng::new(99);
    let n = 100_000;
    // Random walk around a large level stresses cancellation.
    let mut level = 1_000.0;
    let s: Vec<f64> = (0..n)
        .map(|_| {
            level += rng.normal();
            level
        })
        .collect();
    for len in [5, 20, 63] {
        let w = WindowSpec::new(len).unwrap();
        for stat in [Stat::Sum, Stat::Mean, Stat::StdDev, Stat::Min, Stat::Max] {
            let fast = kernels::ts_stat(&s, w, stat);
            // Recompute the tail only; the oracle is O(n w).
            let tail = n - 2_000;
            let expected = oracle::ts_stat(&s[tail - len..], len, len, stat);
            check(&format!("{stat:?} tail w={len}"), &fast[tail - len + len - 1..], &expected[len - 1..], 1e-9);
        }
    }
}

#[test]
fn kernels_are_causal() {
    let mut rng = FixtureRng::new(3);
    let s = rng.series(120, -1.0, 1.0);
    let y = rng.series(120, -1.0, 1.0);
    let w = WindowSpec::new(9).unwrap();
    let cut = 70;
    let full_runs: Vec<Vec<f64>> = vec![
        kernels::ts_stat(&s, w, Stat::StdDev),
        kernels::ts_stat(&s, w, Stat::ArgMin),
        kernels::ts_rank(&s, w),
        kernels::rolling_corr(&s, &y, w),
        kernels::decay_linear(&s, w),
    ];
    let prefix_runs: Vec<Vec<f64>> = vec![
        kernels::ts_stat(&s[..cut], w, Stat::StdDev),
        kernels::ts_stat(&s[..cut], w, Stat::ArgMin),
        kernels::ts_rank(&s[..cut], w),
        kernels::rolling_corr(&s[..cut], &y[..cut], w),
        kernels::decay_linear(&s[..cut], w),
    ];
    for (full, prefix) in full_runs.iter().zip(&prefix_runs) {
        check("prefix", &full[..cut], prefix, 0.0);
    }
}

proptest! {
    #[test]
    fn ranks_lie_in_unit_interval(row in proptest::collection::vec(-1e6f64..1e6, 2..60), len in 2usize..15) {
        for v in kernels::cs_rank(&row) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let w = WindowSpec::new(len).unwrap();
        for v in kernels::ts_rank(&row, w).into_iter().filter(|v| !v.is_nan()) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn ties_rank_independent_of_order(mut row in proptest::collection::vec(0i32..5, 2..30)) {
        let as_f: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        let ranks = kernels::cs_rank(&as_f);
        row.reverse();
        let rev: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        let mut rev_ranks = kernels::cs_rank(&rev);
        rev_ranks.reverse();
        prop_assert_eq!(ranks, rev_ranks);
    }
}
