//! IEEE-118 runs. Ignored by default; `cargo test -- --ignored` runs them.

use stealthrmt_core::grid_io;
use stealthrmt_core::harness::{self, ExperimentConfig, ExperimentKind, Scenario};

#[test]
#[ignore = "slow: IEEE-118 Monte Carlo"]
fn ieee118_ergodic_agreement() {
    let config = ExperimentConfig {
        case_source: "ieee118".into(),
        beta_grid: vec![2.0, 10.0],
        trials: 300,
        ..Default::default()
    };
    let sc = Scenario::from_case(&grid_io::ieee118(), config.decay_r, config.snr_db).unwrap();
    assert_eq!(sc.n(), 117);
    let rep = harness::run_on(&sc, &config, ExperimentKind::Ergodic).unwrap();
    for b in &rep.per_beta {
        let asym = b.asymptotic.ergodic_mean;
        let tol = (3.0 * b.per_state_std_error).max(0.02 * asym);
        assert!((b.per_state_mean - asym).abs() <= tol, "beta {}: {} vs {asym}", b.beta, b.per_state_mean);
    }
}

#[test]
#[ignore = "slow: IEEE-118 distribution check"]
fn ieee118_forms_agree_in_law() {
    let sc = Scenario::from_case(&grid_io::ieee118(), 0.1, 30.0).unwrap();
    let ks = harness::distribution_equivalence_check(&sc, 2.0, 500, 3).unwrap();
    assert!(ks.p_value >= 0.01, "{ks:?}");
}
