//! Partial factorial moments `Π_i^{(n)}(1)` of the number of waiting customers.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::{binomial, Scalar};
use crate::solver::SolvedModel;

/// Default highest moment order kept in a [`MomentTable`].
pub const DEFAULT_MAX_ORDER: usize = 4;

/// `Π_0^{(n)}(1)` for `n = 0..=n_max`, by exact differentiation of
/// `(λ + α_0) π_{0,0} / D(z)`, `D(z) = λ + α_0 - λ β(z)`:
/// `u^{(n)} = Σ_{k=1}^n C(n,k) λ β^{(k)}(1) u^{(n-k)} / α_0` for `u = 1/D`.
pub fn level0_moments<T: Scalar>(params: &ModelParams<T>, pi00: T, n_max: usize) -> Vec<T> {
    let lambda = params.lambda();
    let a0 = params.alpha(0);
    let batch = params.batch();
    let mut u = vec![T::zero(); n_max + 1];
    u[0] = T::one() / a0;
    for n in 1..=n_max {
        let mut acc = T::zero();
        for k in 1..=n {
            acc += binomial::<T>(n, k) * lambda * batch.pgf_factorial_derivative(k) * u[n - k];
        }
        u[n] = acc / a0;
    }
    let scale = (lambda + a0) * pi00;
    u.into_iter().map(|v| v * scale).collect()
}

/// `n! π_{0,0} (λ β'(1))^n (λ + α_0) / α_0^{n+1}`: exact only for single arrivals; kept as a
/// reference for that case.
pub fn level0_moment_single_arrival<T: Scalar>(params: &ModelParams<T>, pi00: T, n: usize) -> T {
    let lambda = params.lambda();
    let a0 = params.alpha(0);
    let fact: T = (1..=n).fold(T::one(), |acc, k| acc * T::from_usize_lossy(k));
    fact * pi00 * (lambda * params.batch().mean()).powi(n as i32) * (lambda + a0) / a0.powi(n as i32 + 1)
}

/// `Π_i'(1)` from `Π_{i-1}'(1)`, `Π_i(1)`, `π_{i,i}` and `π_{i+1,i+1}` (`1 <= i <= c-1`).
pub(crate) fn first_moment_step<T: Scalar>(
    params: &ModelParams<T>,
    i: usize,
    prev_first: T,
    mass: T,
    pi_ii: T,
    pi_next: T,
) -> T {
    let a_prev = params.alpha(i - 1);
    let a = params.alpha(i);
    let i_mu = T::from_usize_lossy(i) * params.mu();
    let lb = params.customer_rate();
    a_prev / a * prev_first
        + (lb - a - i_mu) / a * mass
        + (T::from_usize_lossy(i + 1) * params.mu() * pi_next + a * pi_ii) / a
}

/// `λ β^{(k)}(1) + k λ β^{(k-1)}(1)`, the `k`-th derivative of `-f_i` at 1 for `k >= 2`.
fn batch_term<T: Scalar>(params: &ModelParams<T>, k: usize) -> T {
    let b = params.batch();
    params.lambda() * (b.pgf_factorial_derivative(k) + T::from_usize_lossy(k) * b.pgf_factorial_derivative(k - 1))
}

/// `Π_i^{(n)}(1)` for `n >= 2` given `own[k] = Π_i^{(k)}(1)`, `k < n`.
pub(crate) fn higher_moment_step<T: Scalar>(params: &ModelParams<T>, i: usize, n: usize, prev_level: T, own: &[T]) -> T {
    let a_prev = params.alpha(i - 1);
    let a = params.alpha(i);
    let i_mu = T::from_usize_lossy(i) * params.mu();
    let lb = params.customer_rate();
    let mut sum = T::zero();
    for k in 2..=n {
        sum += binomial::<T>(n, k) * batch_term(params, k) * own[n - k];
    }
    a_prev / a * prev_level + T::from_usize_lossy(n) * (lb - i_mu - a) * own[n - 1] / a + sum / a
}

/// `Π_c^{(n)}(1) = A_n / ((n+1)(cμ - λβ'(1)))`, needing `Π_{c-1}^{(n+1)}(1)` and
/// `own[k] = Π_c^{(k)}(1)` for `k < n`. `n = 0` gives `Π_c(1)`.
pub(crate) fn top_moment_step<T: Scalar>(params: &ModelParams<T>, n: usize, below_next: T, own: &[T]) -> T {
    let c = params.c();
    let drift = T::from_usize_lossy(c) * params.mu() - params.customer_rate();
    let mut a_n = params.alpha(c - 1) * below_next;
    for k in 2..=n + 1 {
        a_n += binomial::<T>(n + 1, k) * batch_term(params, k) * own[n + 1 - k];
    }
    a_n / (T::from_usize_lossy(n + 1) * drift)
}

/// `m[i][n] = Π_i^{(n)}(1)` for `i = 0..=c`, `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable<T> {
    m: Vec<Vec<T>>,
    n_max: usize,
}

impl<T: Scalar> MomentTable<T> {
    pub fn compute(solved: &SolvedModel<T>, n_max: usize) -> Self {
        let p = solved.params();
        let c = p.c();
        // the top level at order n needs level c-1 at order n+1
        let depth = n_max + 1;
        let mut m: Vec<Vec<T>> = Vec::with_capacity(c + 1);
        m.push(level0_moments(p, solved.pi00(), depth));
        for i in 1..c {
            let mut own = Vec::with_capacity(depth + 1);
            own.push(solved.level_masses()[i]);
            own.push(first_moment_step(
                p,
                i,
                m[i - 1][1],
                own[0],
                solved.boundary(i),
                solved.boundary(i + 1),
            ));
            for n in 2..=depth {
                let v = higher_moment_step(p, i, n, m[i - 1][n], &own);
                own.push(v);
            }
            m.push(own);
        }
        let mut top = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let v = top_moment_step(p, n, m[c - 1][n + 1], &top);
            top.push(v);
        }
        m.push(top);
        for row in m.iter_mut() {
            row.truncate(n_max + 1);
        }
        Self { m, n_max }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, level: usize, n: usize) -> T {
        self.m[level][n]
    }

    /// Rows indexed by level.
    pub fn rows(&self) -> &[Vec<T>] {
        &self.m
    }

    /// `Σ_i Π_i^{(n)}(1)`: the n-th factorial moment of the number waiting.
    pub fn total(&self, n: usize) -> T {
        self.m.iter().map(|row| row[n]).sum()
    }
}

/// `Π_i'(1)` for an interior level `1 <= i <= c-1`.
pub fn interior_first_moment<T: Scalar>(solved: &SolvedModel<T>, i: usize) -> Result<T> {
    let c = solved.params().c();
    if i == 0 || i >= c {
        return Err(Error::InvalidLevel { level: i, c });
    }
    Ok(MomentTable::compute(solved, 1).get(i, 1))
}

/// `Π_i^{(n)}(1)` for an interior level `1 <= i <= c-1` and `n >= 2`.
pub fn interior_higher_moments<T: Scalar>(solved: &SolvedModel<T>, i: usize, n: usize) -> Result<T> {
    let c = solved.params().c();
    if i == 0 || i >= c {
        return Err(Error::InvalidLevel { level: i, c });
    }
    if n < 2 {
        return Err(Error::BadParams(format!("moment order {n} < 2")));
    }
    Ok(MomentTable::compute(solved, n).get(i, n))
}

/// `Π_c^{(n)}(1)`.
pub fn top_moments<T: Scalar>(solved: &SolvedModel<T>, n: usize) -> T {
    MomentTable::compute(solved, n).get(solved.params().c(), n)
}

/// `E[Q] = Σ_{i=0}^c Π_i'(1)`, the mean number of waiting customers.
pub fn mean_queue_length<T: Scalar>(solved: &SolvedModel<T>) -> T {
    MomentTable::compute(solved, 1).total(1)
}
