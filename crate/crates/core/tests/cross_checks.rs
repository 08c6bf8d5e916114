//! Cross-module checks: evaluators against each other, against the two-door
//! recursion, against Monte Carlo, and against the price module.

use doors_core::configurations::{Dependency, DoorConfiguration, KnockSequence};
use doors_core::distributions::FundamentalDistribution;
use doors_core::evaluator::{
    expected_time_cascading, expected_time_independent, feedback_baseline, survival_curve_gated,
    survival_curve_independent, EvalOptions,
};
use doors_core::planner::{a_simp, dp_table, phase_doubling};
use doors_core::price::expected_max_iid;
use doors_core::simulator::{estimate_expected_time, SimOptions};
use doors_core::twodoor::{
    conditional_expected_time, expected_time_two_door, rounded_plan, solve_semifractional, value_iteration,
    TwoDoorParams, TwoDoorSequence,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn geo(p: f64) -> FundamentalDistribution {
    FundamentalDistribution::geometric(p).unwrap()
}

fn det(k: u64) -> FundamentalDistribution {
    FundamentalDistribution::deterministic(k).unwrap()
}

/// 1,1,2,2,1,2,1,2,2,1,2,2,1,2,1,2 then alternating, as 0-based knocks.
fn simulation_prefix() -> (Vec<usize>, Vec<usize>) {
    let prefix = [1, 1, 2, 2, 1, 2, 1, 2, 2, 1, 2, 2, 1, 2, 1, 2].iter().map(|k| k - 1).collect();
    (prefix, vec![0, 1])
}

#[test]
fn best_known_prefix_is_a_little_above_5_8() {
    let (prefix, cycle) = simulation_prefix();
    let config = DoorConfiguration::cascading(vec![geo(0.5), geo(0.5)]).unwrap();
    let seq = KnockSequence::periodic(2, prefix.clone(), cycle.clone()).unwrap();
    let general = expected_time_cascading(&config, &seq, &EvalOptions::cascading().with_tol(1e-11)).unwrap();

    let params = TwoDoorParams::new(0.5, 0.5, 1.0).unwrap();
    let two = TwoDoorSequence::from_periodic_knocks(&prefix, &cycle).unwrap();
    let recursion = expected_time_two_door(&params, &two, 1e-12).unwrap();

    assert!((general - recursion).abs() < 1e-9, "{general} vs {recursion}");
    assert!(general > 5.8 && general < 5.832, "{general}");
}

#[test]
fn recursion_matches_general_evaluator_at_unit_duration() {
    let tol = 1e-10;
    for (p1, p2) in [(0.5, 0.5), (0.3, 0.6), (0.8, 0.2)] {
        let params = TwoDoorParams::new(p1, p2, 1.0).unwrap();
        let config = DoorConfiguration::cascading(vec![geo(p1), geo(p2)]).unwrap();
        let plan = solve_semifractional(&params, 1e-12).unwrap();
        for seq in [rounded_plan(&plan), TwoDoorSequence::alternating()] {
            let a = expected_time_two_door(&params, &seq, tol).unwrap();
            let knocks = seq.to_knock_sequence().unwrap();
            let b = expected_time_cascading(&config, &knocks, &EvalOptions::cascading().with_tol(tol)).unwrap();
            assert!((a - b).abs() <= 2.0 * tol.max(1e-9), "p=({p1},{p2}): {a} vs {b}");
        }
    }
}

#[test]
fn monte_carlo_agrees_with_exact_values() {
    let opts = SimOptions::new();
    let cases = [
        (DoorConfiguration::independent(vec![geo(0.5)]).unwrap(), a_simp(1).unwrap(), 2.0),
        (DoorConfiguration::independent(vec![geo(0.5), geo(0.5)]).unwrap(), a_simp(2).unwrap(), 5.0),
        (DoorConfiguration::cascading(vec![geo(0.5), geo(0.5)]).unwrap(), a_simp(2).unwrap(), 6.0),
    ];
    for (k, (config, seq, exact)) in cases.iter().enumerate() {
        let est = estimate_expected_time(config, seq, 1_000_000, 1000 + k as u64, &opts).unwrap();
        assert!((est.mean - exact).abs() <= est.ci99, "{est:?} vs {exact}");
        assert!((est.mean - exact).abs() <= 0.02);
    }

    let doors = vec![geo(0.4), det(2), FundamentalDistribution::table(vec![1.0, 0.5, 0.2], 0.4).unwrap()];
    let seq = KnockSequence::repeat(3, vec![0, 1, 2, 0, 2]).unwrap();
    for (k, dep) in [
        Dependency::Independent,
        Dependency::Cascading,
        Dependency::Dag(vec![vec![], vec![], vec![1, 2]]),
    ]
    .into_iter()
    .enumerate()
    {
        let config = DoorConfiguration::new(doors.clone(), dep).unwrap();
        let exact = if config.is_independent() {
            expected_time_independent(&config, &seq, &EvalOptions::independent()).unwrap()
        } else {
            expected_time_cascading(&config, &seq, &EvalOptions::cascading()).unwrap()
        };
        let est = estimate_expected_time(&config, &seq, 400_000, 17 + k as u64, &opts).unwrap();
        assert!((est.mean - exact).abs() <= est.ci99, "{est:?} vs {exact}");
    }
}

#[test]
fn round_robin_bracket_for_similar_doors() {
    let dists = [
        (geo(0.5), 1e-12),
        (geo(0.2), 1e-12),
        (det(3), 1e-12),
        (FundamentalDistribution::table(vec![1.0, 0.7, 0.3], 0.5).unwrap(), 1e-12),
        (FundamentalDistribution::polynomial(1.0, 3.0).unwrap(), 1e-6),
    ];
    for (dist, tol) in &dists {
        for d in [2usize, 3, 5, 8] {
            let config = DoorConfiguration::independent(vec![dist.clone(); d]).unwrap();
            let t = expected_time_independent(&config, &a_simp(d).unwrap(), &EvalOptions::independent().with_tol(*tol))
                .unwrap();
            let e_max = expected_max_iid(dist, d as u64, 1e-12).unwrap();
            let df = d as f64;
            assert!(df * (e_max - 1.0) < t + tol, "{dist:?} d={d}: {t} vs {e_max}");
            assert!(t <= df * e_max + tol, "{dist:?} d={d}: {t} vs {e_max}");
        }
    }
}

#[test]
fn cascading_round_robin_within_d_times_baseline() {
    let door_sets = [
        vec![geo(0.5), geo(0.5)],
        vec![geo(0.2), det(3), geo(0.7)],
        vec![det(2), det(1), det(4)],
    ];
    for doors in door_sets {
        let d = doors.len();
        let config = DoorConfiguration::cascading(doors).unwrap();
        let t = expected_time_cascading(&config, &a_simp(d).unwrap(), &EvalOptions::cascading()).unwrap();
        assert!(t <= d as f64 * feedback_baseline(&config) + 1e-9);
    }
}

#[test]
fn phase_doubling_bound() {
    let doors = vec![geo(0.5), geo(0.5)];
    let casc = DoorConfiguration::cascading(doors.clone()).unwrap();
    let ind = DoorConfiguration::independent(doors).unwrap();
    let lhs = expected_time_cascading(&casc, &phase_doubling(2), &EvalOptions::cascading()).unwrap();
    let rhs = 2.0 + 4.0 * expected_time_independent(&ind, &a_simp(2).unwrap(), &EvalOptions::independent()).unwrap();
    assert!(lhs.is_finite() && lhs <= rhs, "{lhs} vs {rhs}");
}

#[test]
fn sorted_prefixes_survive_equally_with_and_without_gating() {
    let doors = vec![geo(0.3), det(2), geo(0.6)];
    let ind = DoorConfiguration::independent(doors.clone()).unwrap();
    let casc = DoorConfiguration::cascading(doors).unwrap();
    let table = dp_table(&ind, 24);
    for t in 0..=24 {
        let seq = KnockSequence::finite(3, table.sorted_prefix(t)).unwrap();
        let sc_i = survival_curve_independent(&ind, &seq, t).unwrap().values[t];
        let sc_c = survival_curve_gated(&casc, &seq, t, &EvalOptions::cascading()).unwrap().values[t];
        assert!((sc_i - sc_c).abs() < 1e-14, "t={t}: {sc_i} vs {sc_c}");
        assert!((1.0 - sc_i - table.success_probability(t)).abs() < 1e-14);
    }
}

#[test]
fn gated_survival_curve_sums_to_expected_time() {
    let config = DoorConfiguration::cascading(vec![geo(0.5), geo(0.5)]).unwrap();
    let curve = survival_curve_gated(&config, &a_simp(2).unwrap(), 400, &EvalOptions::cascading()).unwrap();
    assert!(curve.values.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(curve.values[0], 1.0);
    assert!((curve.sum() - 6.0).abs() < 1e-9);
}

#[test]
fn conditional_expectation_is_monotone_on_sampled_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let params = TwoDoorParams::new(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95), 1.0).unwrap();
        let increments: Vec<f64> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(1..=3) as f64).collect();
        let seq = TwoDoorSequence::cyclic(vec![rng.random_range(0..=4) as f64], increments).unwrap();
        let values: Vec<f64> = (1..40)
            .map(|k| conditional_expected_time(&params, &seq, k, 1e-12).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{values:?}");
    }
}

#[test]
fn value_iteration_is_bounded_below_by_the_relaxation() {
    for (p1, p2, c) in [(0.5, 0.5, 1.0), (0.3, 0.6, 2.0), (0.7, 0.2, 0.5)] {
        let params = TwoDoorParams::new(p1, p2, c).unwrap();
        let sf = solve_semifractional(&params, 1e-12).unwrap();
        let vf = value_iteration(&params, 20_000, 1e-10).unwrap();
        assert!(vf.value() >= sf.value - 1e-6, "{} vs {}", vf.value(), sf.value);
        let rounded = expected_time_two_door(&params, &rounded_plan(&sf), 1e-12).unwrap();
        assert!(vf.value() <= rounded + 1e-3, "{} vs {rounded}", vf.value());
    }
}
