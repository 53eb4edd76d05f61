#![allow(dead_code)]

use mxsetup::{BatchDistribution, Costs, ModelParams, SetupPolicy};

pub struct Case {
    pub name: String,
    pub params: ModelParams,
}

pub fn model(c: usize, rho: f64, policy: SetupPolicy, batch: BatchDistribution) -> ModelParams {
    let lambda = rho * c as f64 / batch.mean();
    ModelParams::new(lambda, 1.0, c, &policy, batch, Costs::default()).unwrap()
}

pub fn staggered_single(lambda: f64, mu: f64, c: usize, alpha: f64) -> ModelParams {
    ModelParams::new(lambda, mu, c, &SetupPolicy::Staggered(alpha), BatchDistribution::single(), Costs::default()).unwrap()
}

/// Thirteen models over c ∈ {1,2,3,5}, ρ ∈ {0.3,0.7,0.9}, every setup policy and every
/// batch family.
pub fn matrix() -> Vec<Case> {
    let det = |k| BatchDistribution::deterministic(k).unwrap();
    let two_point = || BatchDistribution::custom(&[(1, 0.6), (3, 0.4)]).unwrap();
    let halves = || BatchDistribution::custom(&[(1, 0.5), (2, 0.5)]).unwrap();
    let geo = |p| BatchDistribution::geometric(p, None).unwrap();
    let rows: Vec<(usize, f64, SetupPolicy, BatchDistribution, &str)> = vec![
        (1, 0.3, SetupPolicy::Staggered(1.0), det(1), "det1"),
        (1, 0.7, SetupPolicy::Staggered(0.5), det(2), "det2"),
        (2, 0.3, SetupPolicy::Vacation(1.0), det(4), "det4"),
        (2, 0.7, SetupPolicy::Custom(vec![0.5, 2.0]), two_point(), "2pt{1,3}"),
        (2, 0.9, SetupPolicy::Staggered(2.0), det(1), "det1"),
        (3, 0.3, SetupPolicy::Staggered(1.0), geo(0.5), "geo0.5"),
        (3, 0.7, SetupPolicy::Vacation(0.5), halves(), "2pt{1,2}"),
        (3, 0.9, SetupPolicy::Custom(vec![1.0, 2.0, 3.0]), det(2), "det2"),
        (5, 0.3, SetupPolicy::Vacation(1.0), det(1), "det1"),
        (5, 0.7, SetupPolicy::Staggered(1.0), det(4), "det4"),
        (5, 0.9, SetupPolicy::Staggered(3.0), geo(0.6), "geo0.6"),
        (5, 0.7, SetupPolicy::Custom(vec![0.2, 0.5, 1.0, 2.0, 5.0]), two_point(), "2pt{1,3}"),
        (3, 0.9, SetupPolicy::Vacation(1.0), geo(0.7), "geo0.7"),
    ];
    rows.into_iter()
        .map(|(c, rho, policy, batch, label)| Case {
            name: format!("c={c} rho={rho} {policy:?} {label}"),
            params: model(c, rho, policy, batch),
        })
        .collect()
}

/// Weights for the `n`-th derivative at `x0` from the samples `x0 - k h`, `k = 0..points`
/// (Fornberg's recursion).
pub fn one_sided_weights(n: usize, points: usize, h: f64) -> Vec<f64> {
    let xs: Vec<f64> = (0..points).map(|k| -(k as f64) * h).collect();
    let m = points - 1;
    let mut d = vec![vec![vec![0.0; points]; points]; n + 1];
    d[0][0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..=m {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            for k in 0..=n.min(i) {
                let prev_same = d[k][i - 1][j];
                let prev_lower = if k > 0 { d[k - 1][i - 1][j] } else { 0.0 };
                d[k][i][j] = (xs[i] * prev_same - k as f64 * prev_lower) / c3;
            }
        }
        for k in 0..=n.min(i) {
            let lower = if k > 0 { d[k - 1][i - 1][i - 1] } else { 0.0 };
            d[k][i][i] = c1 / c2 * (k as f64 * lower - xs[i - 1] * d[k][i - 1][i - 1]);
        }
        c1 = c2;
    }
    d[n][m].clone()
}

/// `n`-th derivative of `f` at `x0` from samples at and to the left of `x0`.
pub fn backward_derivative(f: impl Fn(f64) -> f64, x0: f64, n: usize, h: f64) -> f64 {
    let points = n + 7;
    one_sided_weights(n, points, h)
        .iter()
        .enumerate()
        .map(|(k, w)| w * f(x0 - k as f64 * h))
        .sum()
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}
