//! Ground truth by brute force: truncated generators for the setup model and for the
//! conventional M^X/M/c system, solved directly for their stationary vectors.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::solver::JointDistribution;

/// Finite CTMC on states `(busy servers i, customers j)` with `j <= j_max`.
///
/// Batches that would push the population past `j_max` are rejected, so every row of the
/// generator sums to zero.
#[derive(Debug, Clone)]
pub struct TruncatedChain<T> {
    states: Vec<(usize, usize)>,
    /// Off-diagonal rates `(from, to, rate)`.
    rates: Vec<(usize, usize, T)>,
    j_max: usize,
}

impl<T: Scalar> TruncatedChain<T> {
    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    pub fn rates(&self) -> &[(usize, usize, T)] {
        &self.rates
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: (usize, usize)) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    /// Total outflow rate of every state (the negated generator diagonal).
    pub fn outflow(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.states.len()];
        for &(from, _, r) in &self.rates {
            out[from] += r;
        }
        out
    }

    /// Row sums of the generator; all zero for a conservative chain.
    pub fn row_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.states.len()];
        let out = self.outflow();
        for &(from, _, r) in &self.rates {
            sums[from] += r;
        }
        for (s, o) in sums.iter_mut().zip(out) {
            *s -= o;
        }
        sums
    }

    /// `max_n |(π Q)_n|`.
    pub fn max_balance_residual(&self, pi: &[T]) -> T {
        let mut flow: Vec<T> = self.outflow().iter().zip(pi).map(|(&o, &p)| -o * p).collect();
        for &(from, to, r) in &self.rates {
            flow[to] += pi[from] * r;
        }
        flow.into_iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Setup model truncated at `j_max` customers.
pub fn build_setup_chain<T: Scalar>(params: &ModelParams<T>, j_max: usize) -> Result<TruncatedChain<T>> {
    let c = params.c();
    if j_max < c {
        return Err(Error::BadParams(format!("j_max = {j_max} must be >= c = {c}")));
    }
    let mut offsets = Vec::with_capacity(j_max + 2);
    let mut states = Vec::new();
    for j in 0..=j_max {
        offsets.push(states.len());
        for i in 0..=c.min(j) {
            states.push((i, j));
        }
    }
    let idx = |i: usize, j: usize| offsets[j] + i;
    let lambda = params.lambda();
    let mu = params.mu();
    let mut rates = Vec::new();
    for &(i, j) in &states {
        let from = idx(i, j);
        for (k, b) in params.batch().support() {
            if j + k <= j_max {
                rates.push((from, idx(i, j + k), lambda * b));
            }
        }
        let i_mu = T::from_usize_lossy(i) * mu;
        if j > i {
            if i >= 1 {
                rates.push((from, idx(i, j - 1), i_mu));
            }
            if i < c {
                rates.push((from, idx(i + 1, j), params.alpha(i)));
            }
        } else if i >= 1 {
            // last customer leaves; the freed server and any in setup switch off
            rates.push((from, idx(i - 1, i - 1), i_mu));
        }
    }
    Ok(TruncatedChain { states, rates, j_max })
}

/// Conventional M^X/M/c (idle servers stay on), truncated at `j_max`. States are labelled
/// `(min(j, c), j)`.
pub fn build_onidle_chain<T: Scalar>(params: &ModelParams<T>, j_max: usize) -> Result<TruncatedChain<T>> {
    let c = params.c();
    if j_max < c {
        return Err(Error::BadParams(format!("j_max = {j_max} must be >= c = {c}")));
    }
    let states: Vec<(usize, usize)> = (0..=j_max).map(|j| (j.min(c), j)).collect();
    let mut rates = Vec::new();
    for j in 0..=j_max {
        for (k, b) in params.batch().support() {
            if j + k <= j_max {
                rates.push((j, j + k, params.lambda() * b));
            }
        }
        if j > 0 {
            rates.push((j, j - 1, T::from_usize_lossy(j.min(c)) * params.mu()));
        }
    }
    Ok(TruncatedChain { states, rates, j_max })
}

/// Row-major band storage with `lower` sub- and `upper` super-diagonals.
struct Band<T> {
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> Band<T> {
    fn new(n: usize, lower: usize, upper: usize) -> Self {
        let width = lower + upper + 1;
        Self {
            lower,
            upper,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        row * self.width + (col + self.lower - row)
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> T {
        self.data[self.slot(row, col)]
    }

    #[inline]
    fn add(&mut self, row: usize, col: usize, v: T) {
        let s = self.slot(row, col);
        self.data[s] += v;
    }
}

/// Stationary vector of an irreducible chain by GTH state reduction on band storage.
/// Subtraction-free, so every entry comes out nonnegative.
pub fn stationary<T: Scalar>(chain: &TruncatedChain<T>) -> Result<Vec<T>> {
    let n = chain.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![T::one()]);
    }
    let mut lower = 0;
    let mut upper = 0;
    for &(from, to, _) in &chain.rates {
        if to < from {
            lower = lower.max(from - to);
        } else {
            upper = upper.max(to - from);
        }
    }
    let mut band = Band::new(n, lower, upper);
    for &(from, to, r) in &chain.rates {
        if from != to {
            band.add(from, to, r);
        }
    }

    let mut down = vec![T::zero(); n];
    for last in (1..n).rev() {
        let lo = last.saturating_sub(band.lower);
        let s: T = (lo..last).map(|m| band.get(last, m)).sum();
        if !(s > T::zero()) {
            return Err(Error::SingularSystem { state: last });
        }
        down[last] = s;
        let row_last: Vec<T> = (lo..last).map(|m| band.get(last, m)).collect();
        for k in last.saturating_sub(band.upper)..last {
            let to_last = band.get(k, last);
            if to_last == T::zero() {
                continue;
            }
            let f = to_last / s;
            for (off, &r) in row_last.iter().enumerate() {
                if r != T::zero() {
                    band.add(k, lo + off, f * r);
                }
            }
        }
    }

    let mut x = vec![T::zero(); n];
    x[0] = T::one();
    for m in 1..n {
        let lo = m.saturating_sub(band.upper);
        let inflow: T = (lo..m).map(|k| x[k] * band.get(k, m)).sum();
        x[m] = inflow / down[m];
    }
    let total: T = x.iter().copied().sum();
    for v in x.iter_mut() {
        *v = *v / total;
    }
    Ok(x)
}

/// Stationary table of the truncated setup chain. The returned tail bound is zero: the
/// truncation error is controlled by [`solve_setup_converged`] instead.
pub fn solve_setup<T: Scalar>(params: &ModelParams<T>, j_max: usize) -> Result<JointDistribution<T>> {
    let chain = build_setup_chain(params, j_max)?;
    let pi = stationary(&chain)?;
    let c = params.c();
    let mut rows: Vec<Vec<T>> = (0..=c).map(|i| vec![T::zero(); j_max + 1 - i]).collect();
    for (&(i, j), &p) in chain.states().iter().zip(&pi) {
        rows[i][j - i] = p;
    }
    Ok(JointDistribution::from_rows(c, j_max, rows, T::zero()))
}

/// Starting truncation level for oracle solves: `c + 50/(1-ρ)`.
pub fn initial_j_max<T: Scalar>(params: &ModelParams<T>) -> usize {
    let rho = params.rho().to_f64_lossy();
    params.c() + (50.0 / (1.0 - rho)).ceil() as usize
}

/// Maximum entrywise change for doubling the truncation level to be accepted.
pub const CONVERGENCE_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 6;

/// Solves at `J` and `2J`, doubling from [`initial_j_max`] until every `π_{i,j}` with
/// `j <= J` moves by less than 1e-10; returns the finer solve.
pub fn solve_setup_converged<T: Scalar>(params: &ModelParams<T>) -> Result<JointDistribution<T>> {
    let mut j = initial_j_max(params);
    let mut coarse = solve_setup(params, j)?;
    for _ in 0..MAX_DOUBLINGS {
        let fine = solve_setup(params, 2 * j)?;
        let mut gap = T::zero();
        for i in 0..=params.c() {
            for jj in i..=j {
                gap = gap.max((coarse.pi(i, jj) - fine.pi(i, jj)).abs());
            }
        }
        if gap < T::lit(CONVERGENCE_TOL) {
            return Ok(fine);
        }
        j *= 2;
        coarse = fine;
    }
    Err(Error::TruncationTooSmall {
        tail: f64::NAN,
        threshold: CONVERGENCE_TOL,
    })
}

/// Stationary law `p_j`, `j = 0..=j_max`, of the conventional system.
pub fn solve_onidle<T: Scalar>(params: &ModelParams<T>, j_max: usize) -> Result<Vec<T>> {
    stationary(&build_onidle_chain(params, j_max)?)
}

/// Conventional-system stationary law with the same doubling rule as the setup oracle.
pub fn solve_onidle_converged<T: Scalar>(params: &ModelParams<T>) -> Result<Vec<T>> {
    let mut j = initial_j_max(params);
    let mut coarse = solve_onidle(params, j)?;
    for _ in 0..MAX_DOUBLINGS {
        let fine = solve_onidle(params, 2 * j)?;
        let gap = coarse
            .iter()
            .zip(&fine)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        if gap < T::lit(CONVERGENCE_TOL) {
            return Ok(fine);
        }
        j *= 2;
        coarse = fine;
    }
    Err(Error::TruncationTooSmall {
        tail: f64::NAN,
        threshold: CONVERGENCE_TOL,
    })
}

/// Mean number waiting, `Σ_j (j - c)^+ p_j`, in the conventional system.
pub fn onidle_mean_queue<T: Scalar>(c: usize, dist: &[T]) -> T {
    dist.iter()
        .enumerate()
        .skip(c)
        .map(|(j, &p)| T::from_usize_lossy(j - c) * p)
        .sum()
}

/// `P(N - c = k | N >= c)` in the conventional system, `k = 0..len`.
pub fn onidle_conditional_queue<T: Scalar>(c: usize, dist: &[T], len: usize) -> Vec<T> {
    let busy: T = dist.iter().skip(c).copied().sum();
    (0..len)
        .map(|k| dist.get(c + k).map_or(T::zero(), |&p| p / busy))
        .collect()
}

/// Erlang C waiting probability `C(a, c)` for offered load `a < c`, via the Erlang B
/// recursion.
pub fn erlang_c<T: Scalar>(c: usize, a: T) -> T {
    let mut b = T::one();
    for k in 1..=c {
        let kk = T::from_usize_lossy(k);
        b = a * b / (kk + a * b);
    }
    let cc = T::from_usize_lossy(c);
    cc * b / (cc - a * (T::one() - b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BatchDistribution, Costs, SetupPolicy};
    use approx::assert_relative_eq;

    fn mm(lambda: f64, mu: f64, c: usize, alpha: f64, batch: BatchDistribution<f64>) -> ModelParams<f64> {
        ModelParams::new(lambda, mu, c, &SetupPolicy::Staggered(alpha), batch, Costs::default()).unwrap()
    }

    #[test]
    fn small_setup_chain_enumeration() {
        let p = mm(0.5, 1.0, 1, 1.0, BatchDistribution::single());
        let ch = build_setup_chain(&p, 2).unwrap();
        assert_eq!(ch.states(), &[(0, 0), (0, 1), (1, 1), (0, 2), (1, 2)]);
        let rate = |a, b| {
            let (fa, fb) = (ch.index_of(a).unwrap(), ch.index_of(b).unwrap());
            ch.rates()
                .iter()
                .filter(|&&(f, t, _)| f == fa && t == fb)
                .map(|r| r.2)
                .sum::<f64>()
        };
        assert_eq!(rate((0, 0), (0, 1)), 0.5);
        assert_eq!(rate((0, 1), (0, 2)), 0.5);
        assert_eq!(rate((0, 1), (1, 1)), 1.0);
        assert_eq!(rate((1, 1), (0, 0)), 1.0);
        assert_eq!(rate((1, 2), (1, 1)), 1.0);
        assert_eq!(rate((0, 2), (1, 2)), 1.0);
        assert_eq!(rate((1, 1), (1, 2)), 0.5);
        assert_eq!(ch.rates().len(), 7);
        assert!(ch.row_sums().iter().all(|s| s.abs() < 1e-15));
    }

    #[test]
    fn two_state_toy() {
        let ch = TruncatedChain {
            states: vec![(0, 0), (0, 1)],
            rates: vec![(0, 1, 2.0), (1, 0, 3.0)],
            j_max: 1,
        };
        let pi = stationary(&ch).unwrap();
        assert_relative_eq!(pi[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(pi[1], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn reducible_chain_is_singular() {
        let ch = TruncatedChain {
            states: vec![(0, 0), (0, 1)],
            rates: vec![(0, 1, 2.0)],
            j_max: 1,
        };
        assert_eq!(stationary(&ch), Err(Error::SingularSystem { state: 1 }));
    }

    #[test]
    fn mm1_geometric() {
        let p = mm(0.5, 1.0, 1, 1.0, BatchDistribution::single());
        let dist = solve_onidle(&p, 200).unwrap();
        for (j, v) in dist.iter().enumerate().take(60) {
            assert_relative_eq!(*v, 0.5 * 0.5f64.powi(j as i32), epsilon = 1e-10);
        }
    }

    #[test]
    fn mm2_erlang_c() {
        let p = mm(1.0, 1.0, 2, 1.0, BatchDistribution::single());
        let dist = solve_onidle_converged(&p).unwrap();
        let wait: f64 = dist.iter().skip(2).sum();
        assert_relative_eq!(wait, 1.0 / 3.0, epsilon = 1e-10);
        assert_relative_eq!(erlang_c(2, 1.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(erlang_c(1, 0.3), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn erlang_c_three_servers() {
        // brute force: P_wait = (a^c/c!)(c/(c-a)) / (Σ_{k<c} a^k/k! + (a^c/c!)(c/(c-a)))
        let a: f64 = 1.5;
        let top = a.powi(3) / 6.0 * 3.0 / 1.5;
        let brute = top / (1.0 + a + a * a / 2.0 + top);
        assert_relative_eq!(erlang_c(3, a), brute, epsilon = 1e-15);
        assert_relative_eq!(brute, 0.2368, epsilon = 1e-4);
    }

    #[test]
    fn onidle_light_traffic() {
        let p = mm(1e-5, 1.0, 2, 1.0, BatchDistribution::single());
        let dist = solve_onidle(&p, 10).unwrap();
        assert!(onidle_mean_queue(2, &dist) < 1e-9);
    }

    #[test]
    fn onidle_batch_hand_built() {
        // deterministic(2), c=1, J=3: states 0..3, arrivals j -> j+2 when j <= 1
        let (lambda, mu) = (0.3, 1.0);
        let p = ModelParams::new(lambda, mu, 1, &SetupPolicy::Staggered(1.0), BatchDistribution::deterministic(2).unwrap(), Costs::default()).unwrap();
        let dist = solve_onidle(&p, 3).unwrap();
        // p0: λ p0 = μ p1
        // p1: (λ+μ) p1 = μ p2
        // p3: μ p3 = λ p1
        let p0 = 1.0;
        let p1 = lambda * p0 / mu;
        let p2 = (lambda + mu) * p1 / mu;
        let p3 = lambda * p1 / mu;
        let s = p0 + p1 + p2 + p3;
        for (v, e) in dist.iter().zip([p0, p1, p2, p3]) {
            assert_relative_eq!(*v, e / s, epsilon = 1e-14);
        }
    }

    #[test]
    fn setup_chain_balance() {
        let batch = BatchDistribution::custom(&[(1, 0.5), (2, 0.5)]).unwrap();
        let p = ModelParams::new(1.0, 1.0, 3, &SetupPolicy::Custom(vec![1.0, 2.0, 3.0]), batch, Costs::default()).unwrap();
        let ch = build_setup_chain(&p, 60).unwrap();
        let pi = stationary(&ch).unwrap();
        assert!(ch.max_balance_residual(&pi) < 1e-12);
        assert!(pi.iter().all(|&v| v >= 0.0));
    }
}
