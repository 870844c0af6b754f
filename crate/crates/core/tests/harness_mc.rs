//! End-to-end Monte-Carlo harness contracts: determinism across worker
//! counts, agreement with exact finite-size identities, and the
//! comparison wiring.

use wignerlab_core::ensembles::Ensemble;
use wignerlab_core::entry_laws::EntryLaw;
use wignerlab_core::harness::{compare, run, run_sweep, McConfig};
use wignerlab_core::limit_laws::{v_w, LimitOptions};
use wignerlab_core::probes::Probe;
use wignerlab_core::test_functions::TestFunction;

fn goe_config(probe: Probe, phi: &str, n: usize, reps: usize, seed: u64) -> McConfig {
    McConfig {
        ensemble: Ensemble::goe(1.0).unwrap(),
        probe,
        test_function: TestFunction::parse(phi).unwrap(),
        n,
        reps,
        seed,
        x_grid: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
        n_sweep: None,
    }
}

#[test]
fn trace_variance_matches_entrywise_identity() {
    // Var(Tr M) = 2 w^2 exactly at every size
    let cfg = goe_config(Probe::Identity, "x", 32, 2000, 11);
    let r = run(&cfg).unwrap();
    let k2 = r.summary.stats.k2;
    let se = r.summary.stats.k2_se;
    assert!((k2 - 2.0).abs() <= 4.0 * se, "k2 {k2} +- {se}");
    // centered samples sum to ~0
    let c = r.centered();
    let total: f64 = c.iter().sum();
    let scale: f64 = c.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    assert!(total.abs() <= 1e-9 * cfg.reps as f64 * scale);
}

#[test]
fn matrix_element_samples_are_rescaled_entries() {
    // sqrt(n) M_11 is the doubled-variance entry itself: Gaussian with
    // variance 2 w^2 and no skewness
    let cfg = goe_config(Probe::matrix_element(1).unwrap(), "x", 24, 3000, 12);
    let r = run(&cfg).unwrap();
    let s = &r.summary.stats;
    assert!((s.k2 - 2.0).abs() <= 4.0 * s.k2_se, "k2 {} +- {}", s.k2, s.k2_se);
    assert!(s.k3.abs() <= 4.0 * s.k3_se, "k3 {} +- {}", s.k3, s.k3_se);
}

#[test]
fn rademacher_square_trace_is_deterministic() {
    // every entry of W squares to a constant, so Tr M^2 cannot fluctuate
    let mut cfg = goe_config(Probe::Identity, "x2", 32, 500, 13);
    cfg.ensemble = Ensemble::wigner(EntryLaw::rademacher(1.0).unwrap());
    let r = run(&cfg).unwrap();
    assert_eq!(r.summary.stats.k2, 0.0);
    let first = r.samples[0];
    assert!(r.samples.iter().all(|&x| (x - first).abs() < 1e-12));
}

#[test]
fn reruns_are_bit_identical_across_thread_counts() {
    let cfg = goe_config(Probe::spiked(0.8).unwrap(), "poly:0,1,0.5", 24, 400, 14);
    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let r1 = pool1.install(|| run(&cfg)).unwrap();
    let r4 = pool4.install(|| run(&cfg)).unwrap();
    assert_eq!(r1.samples, r4.samples);
    assert_eq!(r1.summary, r4.summary);
}

#[test]
fn convergence_direction_on_size_sweep() {
    // gap |k2(n) - v_goe| non-increasing within noise for Tr M^3
    let mut cfg = goe_config(Probe::Identity, "x3", 64, 2000, 15);
    cfg.n_sweep = Some(vec![64, 128, 256, 512]);
    let runs = run_sweep(&cfg).unwrap();
    let law = EntryLaw::gaussian(1.0).unwrap();
    let f = Probe::Identity.limit_functionals(8).unwrap().f;
    let lim = v_w(
        &cfg.test_function,
        &law,
        &f,
        cfg.meta(),
        &LimitOptions::default(),
    );
    let gaps: Vec<(f64, f64)> = runs
        .iter()
        .map(|r| ((r.summary.stats.k2 - lim.v_w).abs(), r.summary.stats.k2_se))
        .collect();
    for pair in gaps.windows(2) {
        let (g0, s0) = pair[0];
        let (g1, s1) = pair[1];
        let slack = 2.0 * (s0 * s0 + s1 * s1).sqrt();
        assert!(g1 <= g0 + slack, "gap grew: {g0} -> {g1} (slack {slack})");
    }
}

#[test]
fn comparison_report_round_trip() {
    let cfg = goe_config(Probe::Identity, "x", 32, 2000, 16);
    let r = run(&cfg).unwrap();
    let law = EntryLaw::gaussian(1.0).unwrap();
    let f = Probe::Identity.limit_functionals(8).unwrap().f;
    let lim = v_w(&cfg.test_function, &law, &f, cfg.meta(), &LimitOptions::default());
    let report = compare(&r.summary, &[], &lim, &law).unwrap();
    assert!(report.pass, "rows: {:?}", report.rows);
    assert!(report.rows.iter().all(|row| row.z.is_finite()));
    // theoretical k3 row for an even-free setup: identity probe kills the tail
    assert_eq!(report.rows[1].theory, 0.0);

    // mismatched metadata is rejected
    let other = goe_config(Probe::Identity, "x2", 32, 2000, 16);
    let lim2 = v_w(
        &TestFunction::parse("x2").unwrap(),
        &law,
        &f,
        other.meta(),
        &LimitOptions::default(),
    );
    assert!(compare(&r.summary, &[], &lim2, &law).is_err());
}

#[test]
fn even_test_function_theory_rows_vanish() {
    let mut cfg = goe_config(Probe::matrix_element(1).unwrap(), "x2", 32, 600, 17);
    cfg.ensemble = Ensemble::wigner(EntryLaw::two_point(0.25, 1.0).unwrap());
    let r = run(&cfg).unwrap();
    let law = EntryLaw::two_point(0.25, 1.0).unwrap();
    let f = Probe::matrix_element(1).unwrap().limit_functionals(8).unwrap().f;
    let lim = v_w(&cfg.test_function, &law, &f, cfg.meta(), &LimitOptions::default());
    let report = compare(&r.summary, &[], &lim, &law).unwrap();
    assert_eq!(report.rows[1].theory, 0.0);
    assert_eq!(report.rows[2].theory, 0.0);
    assert_eq!(report.truncation_tail_bound, 0.0);
}
