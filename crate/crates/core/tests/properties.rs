use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use stealthrmt_core::attack::{self, KlCost};
use stealthrmt_core::covariance::{self, NormalizedGaussianMatrix};
use stealthrmt_core::grid_io::{self, Branch, Bus, BusKind, GridCase};
use stealthrmt_core::reports::csv::format_float;
use stealthrmt_core::rmt::{self, DiscreteAed, LogdetVariant};
use stealthrmt_core::rng;

fn atoms(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..100.0f64, 1..=max_len)
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fixed_point_residual_and_monotone(a in atoms(50), beta in log_uniform(0.1, 1000.0), gamma in log_uniform(0.01, 100.0)) {
        let aed = DiscreteAed::new(a).unwrap();
        let eta = rmt::solve_eta_fixed_point(&aed, beta, gamma).unwrap();
        prop_assert!(eta > 0.0 && eta <= 1.0);
        prop_assert!(rmt::fixed_point_residual(&aed, beta, gamma, eta).abs() < 1e-12);
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=20 {
            let r = rmt::fixed_point_residual(&aed, beta, gamma, i as f64 / 20.0);
            prop_assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn transforms_ignore_replication(a in atoms(20), beta in log_uniform(1.05, 200.0), l in 2usize..6) {
        let aed = DiscreteAed::new(a).unwrap();
        let rep = aed.replicated(l);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs());
        prop_assert!(close(rmt::solve_eta_fixed_point(&aed, beta, 1.0).unwrap(), rmt::solve_eta_fixed_point(&rep, beta, 1.0).unwrap()));
        prop_assert!(close(rmt::ergodic_performance(&aed, beta).unwrap(), rmt::ergodic_performance(&rep, beta).unwrap()));
        prop_assert!(close(rmt::var_trace(&aed, beta).unwrap(), rmt::var_trace(&rep, beta).unwrap()));
        for v in LogdetVariant::ALL {
            prop_assert!(close(rmt::var_logdet(&aed, beta, v).unwrap(), rmt::var_logdet(&rep, beta, v).unwrap()));
        }
    }

    #[test]
    fn transforms_ignore_atom_order(a in atoms(30), beta in log_uniform(0.2, 100.0), seed in any::<u64>()) {
        let mut shuffled = a.clone();
        shuffled.shuffle(&mut rng::stream(seed));
        let (x, y) = (DiscreteAed::new(a).unwrap(), DiscreteAed::new(shuffled).unwrap());
        let (ex, ey) = (rmt::ergodic_performance(&x, beta).unwrap(), rmt::ergodic_performance(&y, beta).unwrap());
        prop_assert!((ex - ey).abs() <= 1e-12 * (1.0 + ex.abs()));
    }

    #[test]
    fn ergodic_cost_decreases_to_perfect(a in atoms(30)) {
        let aed = DiscreteAed::new(a).unwrap();
        let half_theta = 0.5 * aed.theta();
        let mut prev = f64::INFINITY;
        for beta in [1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1e6] {
            let e = rmt::ergodic_performance(&aed, beta).unwrap();
            prop_assert!(e >= half_theta - 1e-12);
            prop_assert!(e <= prev + 1e-12);
            prev = e;
        }
    }

    #[test]
    fn bounds_ordered_and_capped(a in atoms(40), beta in log_uniform(1.01, 1000.0)) {
        let aed = DiscreteAed::new(a).unwrap();
        let cap = rmt::gap_bound(beta).unwrap();
        for v in LogdetVariant::ALL {
            let (lo, hi) = rmt::variance_bounds(&aed, beta, v).unwrap();
            prop_assert!(0.0 <= lo && lo <= hi);
            if v != LogdetVariant::Real {
                prop_assert!(hi - lo <= cap * (1.0 + 1e-12), "{v}: {} > {cap}", hi - lo);
            }
        }
    }

    #[test]
    fn equivalent_cost_permutation_invariant(l in prop::collection::vec(0.0..50.0f64, 2..8), dof in 1usize..12, seed in any::<u64>()) {
        let n = l.len();
        let z = covariance::sample_normalized_gaussian(n, dof, &mut rng::stream(seed)).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng::stream(seed ^ 1));
        let lp: Vec<f64> = perm.iter().map(|&i| l[i]).collect();
        let zp = NormalizedGaussianMatrix { matrix: DMatrix::from_fn(n, dof, |i, j| z.matrix[(perm[i], j)]) };
        let a = attack::equivalent_cost(&z, &l).unwrap();
        let b = attack::equivalent_cost(&zp, &lp).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn profile_noise_rescaling(seed in any::<u64>(), r in 0.0..0.95f64, c in log_uniform(0.01, 100.0)) {
        let (m, n) = (7, 4);
        let mut g = rng::stream(seed);
        let h = DMatrix::from_fn(m, n, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut g));
        let sigma = covariance::toeplitz_covariance(n, r).unwrap();
        let a = attack::spectral_profile(&h, &sigma, c * 0.3).unwrap();
        let b = attack::spectral_profile(&h, &sigma.scaled(1.0 / c).unwrap(), 0.3).unwrap();
        prop_assert_eq!(a.lambdas().len(), b.lambdas().len());
        for (x, y) in a.lambdas().iter().zip(b.lambdas()) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn snr_calibration_round_trips(snr in -40.0..60.0f64, r in 0.0..0.9f64) {
        let h = grid_io::build_dc_jacobian(&grid_io::ieee30(), &Default::default()).unwrap().h;
        let sigma = covariance::toeplitz_covariance(29, r).unwrap();
        let s2 = covariance::calibrate_noise(&h, &sigma, snr).unwrap();
        prop_assert!((covariance::snr_db(&h, &sigma, s2) - snr).abs() < 1e-12);
    }

    #[test]
    fn csv_floats_round_trip(x in prop::num::f64::NORMAL) {
        let back: f64 = format_float(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-12 * x.abs(), "{x} -> {back}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn perfect_attack_never_costs_more(seed in any::<u64>(), k in 2usize..40) {
        let case = grid_io::ieee30();
        let model = grid_io::build_dc_jacobian(&case, &Default::default()).unwrap();
        let sigma = covariance::toeplitz_covariance(model.n(), 0.5).unwrap();
        let s2 = covariance::calibrate_noise(&model.h, &sigma, 20.0).unwrap();
        let kl = KlCost::new(&model.h, &sigma, s2).unwrap();
        let perfect = kl.evaluate(&attack::optimal_attack_covariance(&model.h, &sigma).unwrap().matrix).unwrap();
        let x = covariance::sample_state_matrix(&sigma, k, &mut rng::stream(seed)).unwrap();
        let s = covariance::sample_covariance_of_columns(&x).unwrap();
        let learned = kl.evaluate(&attack::optimal_attack_covariance(&model.h, &s).unwrap().matrix).unwrap();
        prop_assert!(perfect <= learned + 1e-9, "{perfect} > {learned}");
    }

    #[test]
    fn random_grids_round_trip(n_bus in 2usize..25, extra in prop::collection::vec((0usize..25, 0usize..25, 0.01..1.0f64), 0..20), xs in prop::collection::vec(0.01..1.0f64, 24), slack in 0usize..25) {
        let slack = slack % n_bus;
        let buses: Vec<Bus> = (0..n_bus)
            .map(|i| Bus { id: 10 + 3 * i as i64, kind: if i == slack { BusKind::Slack } else { BusKind::PQ } })
            .collect();
        // chain keeps the grid connected
        let mut branches: Vec<Branch> = (1..n_bus).map(|i| Branch::line(buses[i - 1].id, buses[i].id, xs[i - 1])).collect();
        for (f, t, x) in extra {
            let (f, t) = (f % n_bus, t % n_bus);
            if f != t {
                branches.push(Branch { tap: 0.9, ..Branch::line(buses[f].id, buses[t].id, x) });
            }
        }
        let case = GridCase::new(100.0, buses, branches).unwrap();
        let back = grid_io::parse_matpower(&case.to_matpower("random")).unwrap();
        prop_assert_eq!(&back, &case);
        let model = grid_io::build_dc_jacobian(&case, &Default::default()).unwrap();
        prop_assert_eq!(model.m(), (n_bus - 1) + case.branches().len());
        prop_assert_eq!(model.n(), n_bus - 1);
    }
}
