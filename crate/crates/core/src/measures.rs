//! Power, cost and delay measures, the arriving-position law, and the conditional
//! decomposition of the all-busy queue.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BatchDistribution, ModelParams};
use crate::moments::MomentTable;
use crate::oracle;
use crate::roots::LevelPolynomial;
use crate::scalar::Scalar;
use crate::series::{deflate, jet_mul, series_div};
use crate::solver::{JointDistribution, SolvedModel};

/// Tail mass above which the decomposition check refuses to run.
const DECOMPOSITION_MAX_TAIL: f64 = 1e-10;

/// Mean number of running servers, `λ β'(1) / μ` (equals `cρ`).
pub fn mean_busy_servers<T: Scalar>(params: &ModelParams<T>) -> T {
    params.customer_rate() / params.mu()
}

/// `C_setup (1 - Σ_{i<c} π_{i,i} - Π_c(1)) + C_run cρ`.
pub fn power_on_off<T: Scalar>(solved: &SolvedModel<T>) -> T {
    let p = solved.params();
    let c = p.c();
    let idle_or_full: T = (0..c).map(|i| solved.boundary(i)).sum::<T>() + solved.top_mass();
    let setup_prob = (T::one() - idle_or_full).max(T::zero());
    p.costs().setup * setup_prob + p.costs().run * mean_busy_servers(p)
}

/// `C_run cρ + C_idle (c - cρ)`.
pub fn power_on_idle<T: Scalar>(params: &ModelParams<T>) -> T {
    let busy = mean_busy_servers(params);
    let c = T::from_usize_lossy(params.c());
    params.costs().run * busy + params.costs().idle * (c - busy)
}

/// `(C_on_off, C_on_idle) = (P_on_off + E[Q]/δ, P_on_idle + E[Q_i]/δ)`, where `E[Q_i]` is
/// the conventional-system mean queue (see [`oracle::onidle_mean_queue`]).
pub fn cost_functions<T: Scalar>(solved: &SolvedModel<T>, onidle_mean_queue: T) -> (T, T) {
    let p = solved.params();
    let delta = p.costs().delta;
    let eq = MomentTable::compute(solved, 1).total(1);
    (
        power_on_off(solved) + eq / delta,
        power_on_idle(p) + onidle_mean_queue / delta,
    )
}

/// `E[W] = E[Q] / (λ β'(1))` by Little's law on the waiting room.
pub fn mean_wait<T: Scalar>(solved: &SolvedModel<T>) -> T {
    MomentTable::compute(solved, 1).total(1) / solved.params().customer_rate()
}

/// Probability that some server is in setup, read off a joint table.
pub fn setup_probability<T: Scalar>(table: &JointDistribution<T>) -> T {
    let c = table.c();
    (0..c)
        .map(|i| table.level_row(i).iter().skip(1).copied().sum::<T>())
        .sum()
}

/// `Σ i π_{i,j}` over a joint table.
pub fn expected_busy_servers<T: Scalar>(table: &JointDistribution<T>) -> T {
    (0..=table.c())
        .map(|i| T::from_usize_lossy(i) * table.level_row(i).iter().copied().sum::<T>())
        .sum()
}

/// Mean number of servers in setup when every off server sets up at the common rate
/// (`α_i / α_{c-1}` servers at level `i`); for the vacation policy this is `c - i`.
/// Diagnostic only: the on-off power formula charges one setup at a time.
pub fn expected_servers_in_setup<T: Scalar>(table: &JointDistribution<T>, params: &ModelParams<T>) -> T {
    let c = params.c();
    let unit = params.alpha(c - 1);
    (0..c)
        .map(|i| (params.alpha(i) / unit) * table.level_row(i).iter().skip(1).copied().sum::<T>())
        .sum()
}

/// Arriving-position law `r_j` and the joint law `p_{i,n}` of active servers and the
/// tagged customer's order of service.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionDistribution<T> {
    /// `r[j-1] = r_j`, `j = 1..=K`.
    r: Vec<T>,
    /// `p[i][n]`, `n = 0..=j_max+1` (`p[i][0] = 0`).
    p: Vec<Vec<T>>,
}

impl<T: Scalar> PositionDistribution<T> {
    pub fn r(&self, j: usize) -> T {
        if j == 0 {
            return T::zero();
        }
        self.r.get(j - 1).copied().unwrap_or_else(T::zero)
    }

    pub fn r_values(&self) -> &[T] {
        &self.r
    }

    pub fn p(&self, i: usize, n: usize) -> T {
        self.p.get(i).and_then(|row| row.get(n)).copied().unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        self.p.iter().flatten().copied().sum()
    }
}

/// `r_j = (1/E[B]) Σ_{i >= j} β_i`.
pub fn position_weights<T: Scalar>(batch: &BatchDistribution<T>) -> Vec<T> {
    let mean = batch.mean();
    (1..=batch.max_size()).map(|j| batch.tail_sum(j) / mean).collect()
}

/// `p_{i,n} = Σ_{j=1}^n π_{i,n-j} r_j` over a joint table.
pub fn position_distribution<T: Scalar>(table: &JointDistribution<T>, batch: &BatchDistribution<T>) -> PositionDistribution<T> {
    let r = position_weights(batch);
    let n_max = table.j_max() + 1;
    let p = (0..=table.c())
        .map(|i| {
            (0..=n_max)
                .map(|n| {
                    r.iter()
                        .enumerate()
                        .take(n)
                        .map(|(jm1, &rj)| table.pi(i, n - (jm1 + 1)) * rj)
                        .sum()
                })
                .collect()
        })
        .collect();
    PositionDistribution { r, p }
}

/// First `k` power-series coefficients of
/// `g(z) = (cμ - λβ'(1))(z - 1) / ((cμ + λ)z - λzβ(z) - cμ)`, obtained by dividing the
/// factor `(z - 1)` out of the denominator.
pub fn series_coefficients_g<T: Scalar>(params: &ModelParams<T>, k: usize) -> Vec<T> {
    let c = params.c();
    let fc = LevelPolynomial::new(params, c).expect("level c always exists");
    let h = deflate(fc.coeffs(), T::one());
    let drift = T::from_usize_lossy(c) * params.mu() - params.customer_rate();
    series_div(&[drift], &h, k)
}

/// Outcome of the conditional decomposition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionCheck<T> {
    /// `P(Q^{(c)} = k)` from the reference table.
    pub conditional: Vec<T>,
    /// Coefficients of `g`.
    pub onidle_part: Vec<T>,
    /// `q_{c-1,k}`, the residual part.
    pub residual_part: Vec<T>,
    /// `(g ⊛ q)_k`.
    pub convolution: Vec<T>,
    pub max_gap: T,
}

/// Compares the law of the queue given all `c` servers busy with the convolution of `g`
/// and `q_{c-1,·}`, for `k < support` (shortened to what `reference` holds). The left
/// side comes from `reference` (e.g. an oracle table) when given, otherwise from the
/// model's own joint table.
pub fn conditional_decomposition_check<T: Scalar>(
    solved: &SolvedModel<T>,
    reference: Option<&JointDistribution<T>>,
    support: usize,
) -> Result<DecompositionCheck<T>> {
    let p = solved.params();
    let c = p.c();
    let auto = solved.joint_distribution_auto()?;
    let own = if auto.j_max() < c + support {
        solved.joint_distribution(c + support, T::one())?
    } else {
        auto
    };
    if own.tail_mass_bound() > T::lit(DECOMPOSITION_MAX_TAIL) {
        return Err(Error::TailTooHeavy {
            tail: own.tail_mass_bound().to_f64_lossy(),
        });
    }
    let reference = reference.unwrap_or(&own);
    let support = support.min(reference.j_max() + 1 - c);

    let top_row = reference.level_row(c);
    let top_mass: T = top_row.iter().copied().sum();
    let conditional: Vec<T> = (0..support).map(|k| top_row[k] / top_mass).collect();

    let below = own.level_row(c - 1);
    let first = solved.first_moments()[c - 1];
    let mut residual_part = vec![T::zero(); support];
    let mut acc: T = below.iter().skip(support + 1).copied().sum();
    for k in (0..support).rev() {
        acc += below.get(k + 1).copied().unwrap_or_else(T::zero);
        residual_part[k] = acc / first;
    }

    let onidle_part = series_coefficients_g(p, support);
    let convolution = jet_mul(&onidle_part, &residual_part);
    let max_gap = conditional
        .iter()
        .zip(&convolution)
        .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
    Ok(DecompositionCheck {
        conditional,
        onidle_part,
        residual_part,
        convolution,
        max_gap,
    })
}

/// `α/(α + λ - λz) · (1 - C + C(1-ρ)/(1-ρz))` with `C` the Erlang C probability: the
/// number-waiting generating function of the staggered M/M/c model.
pub fn staggered_mmc_gf<T: Scalar>(lambda: T, mu: T, c: usize, alpha: T, z: T) -> T {
    let rho = lambda / (T::from_usize_lossy(c) * mu);
    let erlang = oracle::erlang_c(c, lambda / mu);
    alpha / (alpha + lambda - lambda * z) * (T::one() - erlang + erlang * (T::one() - rho) / (T::one() - rho * z))
}

/// Summary of a solved model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceReport<T> {
    pub rho: T,
    pub pi00: T,
    pub boundary: Vec<T>,
    pub level_masses: Vec<T>,
    #[serde(rename = "E_Q")]
    pub e_q: T,
    #[serde(rename = "E_W")]
    pub e_w: T,
    #[serde(rename = "P_on_off")]
    pub p_on_off: T,
    #[serde(rename = "P_on_idle")]
    pub p_on_idle: T,
    #[serde(rename = "E_Q_onidle")]
    pub e_q_onidle: T,
    #[serde(rename = "C_on_off")]
    pub c_on_off: T,
    #[serde(rename = "C_on_idle")]
    pub c_on_idle: T,
    /// Largest pointwise gap of the conditional decomposition on the model's own table.
    pub decomposition_gap: Option<T>,
}

impl<T: Scalar> PerformanceReport<T> {
    /// Builds the report; the conventional-system queue comes from the truncated oracle.
    pub fn compute(solved: &SolvedModel<T>) -> Result<Self> {
        let p = solved.params();
        let onidle = oracle::solve_onidle_converged(p)?;
        let e_q_onidle = oracle::onidle_mean_queue(p.c(), &onidle);
        let decomposition_gap = conditional_decomposition_check(solved, None, 64).ok().map(|d| d.max_gap);
        Ok(Self::from_parts(solved, e_q_onidle, decomposition_gap))
    }

    pub fn from_parts(solved: &SolvedModel<T>, e_q_onidle: T, decomposition_gap: Option<T>) -> Self {
        let p = solved.params();
        let e_q = MomentTable::compute(solved, 1).total(1);
        let (c_on_off, c_on_idle) = cost_functions(solved, e_q_onidle);
        Self {
            rho: p.rho(),
            pi00: solved.pi00(),
            boundary: solved.boundaries(),
            level_masses: solved.level_masses().to_vec(),
            e_q,
            e_w: e_q / p.customer_rate(),
            p_on_off: power_on_off(solved),
            p_on_idle: power_on_idle(p),
            e_q_onidle,
            c_on_off,
            c_on_idle,
            decomposition_gap,
        }
    }
}
