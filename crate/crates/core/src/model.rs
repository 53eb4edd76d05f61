//! Model parameters: arrival/service/setup rates, the batch-size law and cost constants.

use crate::error::{Error, Result};
use crate::scalar::{falling_factorial, Scalar};

/// Probability mass below this is treated as a truncation error for geometric batches.
const GEOMETRIC_TAIL: f64 = 1e-12;
/// Tolerance on the total probability of a user-supplied batch law.
const PMF_SUM_TOL: f64 = 1e-12;

/// How a batch law was specified.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchKind<T> {
    Deterministic(usize),
    /// `P(B = k) = p (1-p)^(k-1)`, truncated at `k_max` and renormalized.
    Geometric { p: T, k_max: usize },
    Custom,
}

/// Batch-size distribution on `{1, 2, ...}` with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchDistribution<T> {
    /// `pmf[k] = β_k`; `pmf[0] == 0` always.
    pmf: Vec<T>,
    kind: BatchKind<T>,
}

impl<T: Scalar> BatchDistribution<T> {
    pub fn deterministic(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::BadBatch("batch size must be >= 1".into()));
        }
        let mut pmf = vec![T::zero(); size + 1];
        pmf[size] = T::one();
        Ok(Self {
            pmf,
            kind: BatchKind::Deterministic(size),
        })
    }

    /// Single arrivals, `β(z) = z`.
    pub fn single() -> Self {
        Self::deterministic(1).expect("size 1 is valid")
    }

    /// Geometric law with success probability `p` (mean `1/p`). When `k_max` is `None` the
    /// support is cut at the smallest `K` with tail mass `(1-p)^K < 1e-12`.
    pub fn geometric(p: T, k_max: Option<usize>) -> Result<Self> {
        if !(p > T::zero() && p <= T::one()) {
            return Err(Error::BadBatch(format!("geometric p must be in (0,1], got {p}")));
        }
        let q = T::one() - p;
        let k_max = match k_max {
            Some(0) => return Err(Error::BadBatch("k_max must be >= 1".into())),
            Some(k) => k,
            None if q == T::zero() => 1,
            None => {
                let k = (GEOMETRIC_TAIL.ln() / q.to_f64_lossy().ln()).ceil();
                (k.max(1.0)) as usize
            }
        };
        let mut pmf = vec![T::zero(); k_max + 1];
        let mut w = p;
        for slot in pmf.iter_mut().skip(1) {
            *slot = w;
            w = w * q;
        }
        let total: T = pmf.iter().copied().sum();
        for v in pmf.iter_mut() {
            *v = *v / total;
        }
        Ok(Self {
            pmf,
            kind: BatchKind::Geometric { p, k_max },
        })
    }

    /// Arbitrary finite law given as `(k, β_k)` pairs. Masses must sum to one within
    /// 1e-12; they are then renormalized exactly.
    pub fn custom(pairs: &[(usize, T)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::BadBatch("empty pmf".into()));
        }
        let k_max = pairs.iter().map(|&(k, _)| k).max().unwrap_or(0);
        let mut pmf = vec![T::zero(); k_max + 1];
        let mut seen = vec![false; k_max + 1];
        for &(k, prob) in pairs {
            if k == 0 {
                return Err(Error::BadBatch("batch sizes must be >= 1".into()));
            }
            if !(prob >= T::zero()) || !prob.is_finite() {
                return Err(Error::BadBatch(format!("negative or non-finite mass at k={k}")));
            }
            if seen[k] {
                return Err(Error::BadBatch(format!("duplicate batch size {k}")));
            }
            seen[k] = true;
            pmf[k] = prob;
        }
        let total: T = pmf.iter().copied().sum();
        let tol = T::lit(PMF_SUM_TOL).max(T::epsilon() * T::lit(16.0));
        if (total - T::one()).abs() > tol {
            return Err(Error::BadBatch(format!("masses sum to {total}, not 1")));
        }
        for v in pmf.iter_mut() {
            *v = *v / total;
        }
        // trailing zero masses do not extend the support
        while pmf.len() > 2 && pmf[pmf.len() - 1] == T::zero() {
            pmf.pop();
        }
        if pmf.len() < 2 {
            return Err(Error::BadBatch("no positive mass".into()));
        }
        Ok(Self {
            pmf,
            kind: BatchKind::Custom,
        })
    }

    pub fn kind(&self) -> &BatchKind<T> {
        &self.kind
    }

    /// Largest batch size with (possibly zero) stored mass.
    pub fn max_size(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `β_k`, zero outside the support.
    pub fn prob(&self, k: usize) -> T {
        self.pmf.get(k).copied().unwrap_or_else(T::zero)
    }

    /// Dense mass vector indexed by batch size (`[0]` is always zero).
    pub fn pmf(&self) -> &[T] {
        &self.pmf
    }

    /// Iterates `(k, β_k)` over sizes with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > T::zero())
            .map(|(k, p)| (k, *p))
    }

    /// True when every batch has exactly one customer.
    pub fn is_single_arrival(&self) -> bool {
        self.pmf.len() == 2 && self.pmf[1] == T::one()
    }

    /// `β(z) = Σ β_k z^k` (Horner).
    pub fn pgf_eval(&self, z: T) -> T {
        self.pmf.iter().rev().fold(T::zero(), |acc, &b| acc * z + b)
    }

    /// `β^{(k)}(1) = Σ_j j(j-1)...(j-k+1) β_j`; `k = 0` gives 1 and `k = 1` the mean.
    pub fn pgf_factorial_derivative(&self, k: usize) -> T {
        if k == 0 {
            return T::one();
        }
        self.pmf
            .iter()
            .enumerate()
            .map(|(j, &b)| falling_factorial::<T>(j, k) * b)
            .sum()
    }

    pub fn mean(&self) -> T {
        self.pgf_factorial_derivative(1)
    }

    /// `Σ_{i >= j} β_i`.
    pub fn tail_sum(&self, j: usize) -> T {
        self.pmf.iter().skip(j.max(1)).copied().sum()
    }
}

/// Setup-rate policy, expanded to per-level rates `α_0..α_{c-1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum SetupPolicy<T> {
    /// One server in setup at a time: `α_i = α`.
    Staggered(T),
    /// Every off server returns independently: `α_i = (c - i) α`.
    Vacation(T),
    Custom(Vec<T>),
}

impl<T: Scalar> SetupPolicy<T> {
    pub fn expand(&self, c: usize) -> Result<Vec<T>> {
        match self {
            SetupPolicy::Staggered(a) => Ok(vec![*a; c]),
            SetupPolicy::Vacation(a) => Ok((0..c).map(|i| T::from_usize_lossy(c - i) * *a).collect()),
            SetupPolicy::Custom(v) if v.len() == c => Ok(v.clone()),
            SetupPolicy::Custom(v) => Err(Error::BadParams(format!(
                "custom setup needs {c} rates, got {}",
                v.len()
            ))),
        }
    }
}

/// Per-server power draw in each state, plus the delay weight of the cost function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Costs<T> {
    pub setup: T,
    pub run: T,
    pub idle: T,
    pub delta: T,
}

impl<T: Scalar> Default for Costs<T> {
    fn default() -> Self {
        Self {
            setup: T::one(),
            run: T::one(),
            idle: T::lit(0.6),
            delta: T::one(),
        }
    }
}

/// A validated, stable model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    lambda: T,
    mu: T,
    c: usize,
    alphas: Vec<T>,
    batch: BatchDistribution<T>,
    costs: Costs<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(
        lambda: T,
        mu: T,
        c: usize,
        setup: &SetupPolicy<T>,
        batch: BatchDistribution<T>,
        costs: Costs<T>,
    ) -> Result<Self> {
        if c == 0 {
            return Err(Error::BadParams("server count c must be >= 1".into()));
        }
        let alphas = setup.expand(c)?;
        Self::from_rates(lambda, mu, alphas, batch, costs)
    }

    /// Builds from explicit per-level setup rates (`alphas.len()` is the server count).
    pub fn from_rates(
        lambda: T,
        mu: T,
        alphas: Vec<T>,
        batch: BatchDistribution<T>,
        costs: Costs<T>,
    ) -> Result<Self> {
        let params = Self {
            lambda,
            mu,
            c: alphas.len(),
            alphas,
            batch,
            costs,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks every parameter invariant; the error names the first violation.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.lambda) {
            return Err(Error::NonPositiveRate { name: "lambda".into() });
        }
        if !positive(self.mu) {
            return Err(Error::NonPositiveRate { name: "mu".into() });
        }
        if self.c == 0 {
            return Err(Error::BadParams("server count c must be >= 1".into()));
        }
        if self.alphas.len() != self.c {
            return Err(Error::BadParams("need one setup rate per level".into()));
        }
        for (i, &a) in self.alphas.iter().enumerate() {
            if !positive(a) {
                return Err(Error::NonPositiveRate {
                    name: format!("alpha_{i}"),
                });
            }
        }
        if self.batch.pmf.first().copied() != Some(T::zero()) || self.batch.pmf.len() < 2 {
            return Err(Error::BadBatch("support must lie in {1,2,...}".into()));
        }
        let rho = self.rho();
        if !(rho < T::one()) {
            return Err(Error::Unstable { rho: rho.to_f64_lossy() });
        }
        Ok(())
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn c(&self) -> usize {
        self.c
    }
    /// Setup rate when `i` servers are active, `0 <= i < c`.
    pub fn alpha(&self, i: usize) -> T {
        self.alphas[i]
    }
    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }
    pub fn batch(&self) -> &BatchDistribution<T> {
        &self.batch
    }
    pub fn costs(&self) -> &Costs<T> {
        &self.costs
    }

    /// Traffic intensity `λ β'(1) / (c μ)`.
    pub fn rho(&self) -> T {
        self.lambda * self.batch.mean() / (T::from_usize_lossy(self.c) * self.mu)
    }

    /// Customer arrival rate `λ β'(1)`; also the mean number of busy servers times `μ`.
    pub fn customer_rate(&self) -> T {
        self.lambda * self.batch.mean()
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::from_rates(lambda, self.mu, self.alphas.clone(), self.batch.clone(), self.costs)
    }

    pub fn with_alphas(&self, alphas: Vec<T>) -> Result<Self> {
        if alphas.len() != self.c {
            return Err(Error::BadParams("need one setup rate per level".into()));
        }
        Self::from_rates(self.lambda, self.mu, alphas, self.batch.clone(), self.costs)
    }

    pub fn with_batch(&self, batch: BatchDistribution<T>) -> Result<Self> {
        Self::from_rates(self.lambda, self.mu, self.alphas.clone(), batch, self.costs)
    }

    pub fn with_costs(&self, costs: Costs<T>) -> Self {
        Self {
            costs,
            ..self.clone()
        }
    }

    /// Arrival rate giving traffic intensity `rho` with everything else fixed.
    pub fn lambda_for_rho(&self, rho: T) -> T {
        rho * T::from_usize_lossy(self.c) * self.mu / self.batch.mean()
    }
}
