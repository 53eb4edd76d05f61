mod common;

use approx::assert_relative_eq;
use common::{model, staggered_single};
use mxsetup::measures::{
    cost_functions, expected_busy_servers, expected_servers_in_setup, mean_busy_servers, mean_wait, position_distribution,
    position_weights, power_on_idle, power_on_off, series_coefficients_g, setup_probability, PerformanceReport,
};
use mxsetup::oracle::{erlang_c, onidle_conditional_queue, onidle_mean_queue, solve_onidle_converged, solve_setup_converged};
use mxsetup::{BatchDistribution, Costs, ModelParams, MomentTable, SetupPolicy, SolvedModel};

fn c10_staggered(rho: f64, alpha: f64, delta: f64) -> ModelParams {
    let costs = Costs {
        setup: 1.0,
        run: 1.0,
        idle: 0.6,
        delta,
    };
    ModelParams::new(rho * 10.0, 1.0, 10, &SetupPolicy::Staggered(alpha), BatchDistribution::single(), costs).unwrap()
}

#[test]
fn on_off_power_matches_oracle_energy_accounting() {
    let p = c10_staggered(0.5, 1.0, 1.0);
    let s = SolvedModel::solve(&p).unwrap();
    let t = solve_setup_converged(&p).unwrap();
    let from_oracle = setup_probability(&t) + expected_busy_servers(&t);
    assert!((power_on_off(&s) - from_oracle).abs() < 1e-6);
}

#[test]
fn busy_servers_follow_littles_law() {
    for p in [
        model(3, 0.7, SetupPolicy::Vacation(0.5), BatchDistribution::custom(&[(1, 0.5), (2, 0.5)]).unwrap()),
        model(2, 0.4, SetupPolicy::Staggered(2.0), BatchDistribution::deterministic(3).unwrap()),
    ] {
        let t = solve_setup_converged(&p).unwrap();
        assert!((expected_busy_servers(&t) - mean_busy_servers(&p)).abs() < 1e-8);
    }
}

#[test]
fn vacation_setup_count_exceeds_setup_probability() {
    let p = model(4, 0.5, SetupPolicy::Vacation(1.0), BatchDistribution::single());
    let t = solve_setup_converged(&p).unwrap();
    assert!(expected_servers_in_setup(&t, &p) > setup_probability(&t));
    let st = model(4, 0.5, SetupPolicy::Staggered(1.0), BatchDistribution::single());
    let ts = solve_setup_converged(&st).unwrap();
    assert_relative_eq!(expected_servers_in_setup(&ts, &st), setup_probability(&ts), max_relative = 1e-14);
}

#[test]
fn costs_reduce_to_powers_for_large_delta() {
    let p = c10_staggered(0.4, 1.0, 1e12);
    let s = SolvedModel::solve(&p).unwrap();
    let (on_off, on_idle) = cost_functions(&s, 0.5);
    assert!((on_off - power_on_off(&s)).abs() < 1e-9);
    assert!((on_idle - power_on_idle(&p)).abs() < 1e-9);
}

#[test]
fn cost_gap_for_delta_ten_follows_the_setup_delay_identity() {
    // staggered single arrivals: E[Q] - E[Q_idle] = lambda / alpha exactly
    for k in 1..=9 {
        let rho = k as f64 / 10.0;
        let p = c10_staggered(rho, 1.0, 10.0);
        let r = PerformanceReport::compute(&SolvedModel::solve(&p).unwrap()).unwrap();
        assert_relative_eq!(r.e_q - r.e_q_onidle, 10.0 * rho, max_relative = 1e-8);
        let gap = r.p_on_off - r.p_on_idle + rho;
        assert_relative_eq!(r.c_on_off - r.c_on_idle, gap, epsilon = 1e-8);
    }
}

#[test]
fn on_off_is_cheaper_for_delta_ten_up_to_moderate_load() {
    for k in 1..=7 {
        let p = c10_staggered(k as f64 / 10.0, 1.0, 10.0);
        let r = PerformanceReport::compute(&SolvedModel::solve(&p).unwrap()).unwrap();
        assert!(r.c_on_off <= r.c_on_idle, "rho = {}", k as f64 / 10.0);
    }
}

#[test]
fn on_off_loses_for_delta_ten_in_heavy_traffic() {
    for rho in [0.8, 0.9] {
        let p = c10_staggered(rho, 1.0, 10.0);
        let r = PerformanceReport::compute(&SolvedModel::solve(&p).unwrap()).unwrap();
        assert!(r.c_on_off > r.c_on_idle, "rho = {rho}");
    }
}

#[test]
fn on_idle_wins_somewhere_when_delay_dominates() {
    let wins = (1..=9).any(|k| {
        let p = c10_staggered(k as f64 / 10.0, 1.0, 0.1);
        let r = PerformanceReport::compute(&SolvedModel::solve(&p).unwrap()).unwrap();
        r.c_on_idle < r.c_on_off
    });
    assert!(wins);
}

#[test]
fn staggered_wait_splits_into_setup_and_conventional_parts() {
    for (lambda, c, alpha) in [(0.5, 1, 1.0), (1.5, 2, 0.7), (3.0, 5, 2.0)] {
        let s = SolvedModel::solve(&staggered_single(lambda, 1.0, c, alpha)).unwrap();
        let conventional = erlang_c(c, lambda) / (c as f64 - lambda);
        assert_relative_eq!(mean_wait(&s), 1.0 / alpha + conventional, max_relative = 1e-10);
    }
}

#[test]
fn mean_wait_matches_oracle_queue() {
    let p = model(3, 0.6, SetupPolicy::Custom(vec![0.5, 1.0, 2.0]), BatchDistribution::geometric(0.5, None).unwrap());
    let s = SolvedModel::solve(&p).unwrap();
    let t = solve_setup_converged(&p).unwrap();
    let eq: f64 = (0..=3).map(|i| t.factorial_moment(i, 1)).sum();
    assert!((mean_wait(&s) - eq / p.customer_rate()).abs() < 1e-8);
    let r = PerformanceReport::compute(&s).unwrap();
    assert_relative_eq!(r.e_w, r.e_q / p.customer_rate(), max_relative = 1e-10);
}

#[test]
fn light_traffic_wait_is_finite_and_consistent() {
    let p = staggered_single(1e-6, 1.0, 3, 1.0);
    let s = SolvedModel::solve(&p).unwrap();
    let w = mean_wait(&s);
    assert!(w.is_finite() && w > 0.0);
    let eq = MomentTable::compute(&s, 1).total(1);
    assert_relative_eq!(w, eq / 1e-6, max_relative = 1e-12);
}

#[test]
fn report_invariants() {
    for p in [
        model(5, 0.9, SetupPolicy::Staggered(3.0), BatchDistribution::geometric(0.6, None).unwrap()),
        model(2, 0.2, SetupPolicy::Vacation(0.3), BatchDistribution::deterministic(2).unwrap()),
    ] {
        let r = PerformanceReport::compute(&SolvedModel::solve(&p).unwrap()).unwrap();
        let cap = p.costs().run * p.c() as f64 + p.costs().idle * p.c() as f64;
        assert!(r.level_masses.iter().all(|m| (0.0..=1.0).contains(m)));
        assert!(r.p_on_off >= 0.0 && r.p_on_off <= cap);
        assert!(r.p_on_idle >= 0.0 && r.p_on_idle <= cap);
        assert!(r.decomposition_gap.unwrap() < 1e-8);
    }
}

#[test]
fn g_series_matches_conventional_chain_for_single_arrivals() {
    let p = staggered_single(2.2, 1.0, 3, 1.0);
    let onidle = solve_onidle_converged(&p).unwrap();
    let direct = onidle_conditional_queue(3, &onidle, 50);
    let series = series_coefficients_g(&p, 50);
    for (a, b) in direct.iter().zip(&series) {
        assert!((a - b).abs() < 1e-10);
    }
    let rho: f64 = 2.2 / 3.0;
    let eq = erlang_c(3, 2.2) * rho / (1.0 - rho);
    assert_relative_eq!(onidle_mean_queue(3, &onidle), eq, max_relative = 1e-9);
}

#[test]
fn position_distribution_sums_to_one() {
    let batch = BatchDistribution::custom(&[(1, 0.2), (2, 0.3), (5, 0.5)]).unwrap();
    let p = model(2, 0.6, SetupPolicy::Staggered(1.0), batch.clone());
    let s = SolvedModel::solve(&p).unwrap();
    let t = s.joint_distribution_auto().unwrap();
    let pos = position_distribution(&t, &batch);
    assert_relative_eq!(pos.r_values().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    assert!(pos.r_values().windows(2).all(|w| w[1] <= w[0]));
    assert!((pos.total() - 1.0).abs() < 1e-9);
    assert_eq!(pos.r(0), 0.0);
    assert_eq!(pos.r(6), 0.0);
}

#[test]
fn position_weights_are_uniform_for_fixed_batches() {
    let w = position_weights(&BatchDistribution::deterministic(5).unwrap());
    assert_eq!(w.len(), 5);
    assert!(w.iter().all(|&r| (r - 0.2).abs() < 1e-15));
}
