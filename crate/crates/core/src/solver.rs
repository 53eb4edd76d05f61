//! Boundary probabilities, partial generating functions and the joint stationary table.
//!
//! Everything is first computed relative to `π_{0,0} = 1` and scaled once by the
//! normalization constant.

use log::warn;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::moments;
use crate::roots::{find_all_roots, LevelPolynomial};
use crate::scalar::Scalar;
use crate::series::{deflate, divided_difference, jet_div, jet_shift, poly_eval, poly_jet, real_root_above_one, series_div};

/// Distance from a root below which `Π_i` is evaluated through its removable singularity.
const SINGULAR_RADIUS: f64 = 1e-6;
/// Tail mass targeted by the automatic truncation level.
const AUTO_TAIL: f64 = 1e-10;

/// `Π_0(z) = (λ + α_0) π_{0,0} / (λ + α_0 - λ β(z))`.
pub fn eval_pi0<T: Scalar>(params: &ModelParams<T>, z: T, pi00: T) -> T {
    let k = params.lambda() + params.alpha(0);
    k * pi00 / (k - params.lambda() * params.batch().pgf_eval(z))
}

/// Coefficients of `λ + α_0 - λ β(z)`.
fn level0_denominator<T: Scalar>(params: &ModelParams<T>) -> Vec<T> {
    let lambda = params.lambda();
    let mut d: Vec<T> = params.batch().pmf().iter().map(|&b| -lambda * b).collect();
    d[0] = lambda + params.alpha(0);
    d
}

/// Evaluates the partial generating functions relative to `π_{0,0} = 1` from the
/// functional equations, as Taylor jets so removable singularities can be crossed exactly.
struct GfEvaluator<'a, T> {
    params: &'a ModelParams<T>,
    roots: &'a [T],
    /// Unnormalized `π_{i,i}`; may be partially filled during the boundary recursion.
    boundary: &'a [T],
    level0_den: Vec<T>,
    polys: Vec<LevelPolynomial<T>>,
}

impl<'a, T: Scalar> GfEvaluator<'a, T> {
    fn new(params: &'a ModelParams<T>, roots: &'a [T], boundary: &'a [T]) -> Result<Self> {
        let polys = (1..=params.c())
            .map(|i| LevelPolynomial::new(params, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            roots,
            boundary,
            level0_den: level0_denominator(params),
            polys,
        })
    }

    /// Taylor coefficients of `Π_i` about `z0`, orders `0..=order`.
    fn jet(&self, level: usize, z0: T, order: usize) -> Vec<T> {
        let p = self.params;
        if level == 0 {
            let mut num = vec![T::zero(); order + 1];
            num[0] = (p.lambda() + p.alpha(0)) * self.boundary[0];
            let den = poly_jet(&self.level0_den, z0, order);
            return jet_div(&num, &den, false);
        }
        let c = p.c();
        let target = if level < c { self.roots[level - 1] } else { T::one() };
        let singular = (z0 - target).abs() < T::lit(SINGULAR_RADIUS);
        let (zc, m) = if singular { (target, order + 1) } else { (z0, order) };

        let mut num: Vec<T> = self
            .jet(level - 1, zc, m)
            .into_iter()
            .map(|v| p.alpha(level - 1) * v)
            .collect();
        num[0] -= p.alpha(level - 1) * self.boundary[level - 1];
        let i_mu = T::from_usize_lossy(level) * p.mu();
        if level < c {
            let slope = p.alpha(level) * self.boundary[level]
                + T::from_usize_lossy(level + 1) * p.mu() * self.boundary[level + 1];
            num[0] += slope * zc - i_mu * self.boundary[level];
            if m >= 1 {
                num[1] += slope;
            }
        } else {
            num[0] -= i_mu * self.boundary[level];
        }
        let den = poly_jet(self.polys[level - 1].coeffs(), zc, m);
        let q = jet_div(&num, &den, singular);
        if singular {
            jet_shift(&q, z0 - zc, order)
        } else {
            q
        }
    }

    fn value(&self, level: usize, z: T) -> T {
        self.jet(level, z, 0)[0]
    }
}

/// Below this root the boundary step sums the level series instead of differencing
/// `Π_{i-1}(z_i) - π_{i-1,i-1}`, which cancels badly when `z_i` is small.
const SERIES_ROOT_THRESHOLD: f64 = 0.5;
/// Relative size of the neglected series tail in the boundary step.
const SERIES_TAIL: f64 = 1e-20;

/// Unnormalized boundary probabilities `π̃_{i,i}`, `i = 0..=c`, with `π̃_{0,0} = 1`.
///
/// Each step uses `(i+1)μ π_{i+1,i+1} = (λ + iμ - λβ(z_i)) π_{i,i} - α_{i-1} D_{i-1}(z_i)`
/// with `D_l(z) = (Π_l(z) - π_{l,l}) / z`, which follows from the level-`i` functional
/// equation at its root.
pub fn boundary_recursion<T: Scalar>(params: &ModelParams<T>, roots: &[T]) -> Result<Vec<T>> {
    let c = params.c();
    if roots.len() + 1 != c {
        return Err(Error::BadParams(format!("expected {} roots, got {}", c - 1, roots.len())));
    }
    let lambda = params.lambda();
    let mu = params.mu();
    let mut boundary = vec![T::zero(); c + 1];
    boundary[0] = T::one();
    boundary[1] = lambda / mu;
    let mut series_len = None;
    for i in 1..c {
        let z = roots[i - 1];
        let d = if z >= T::lit(SERIES_ROOT_THRESHOLD) {
            let eval = GfEvaluator::new(params, roots, &boundary[..=i])?;
            (eval.value(i - 1, z) - boundary[i - 1]) / z
        } else {
            let len = *series_len.get_or_insert_with(|| series_length(params, roots));
            let series = unnormalized_series(params, roots, &boundary[..=i], i - 1, len);
            poly_eval(&series[i - 1][1..], z)
        };
        let i_mu = T::from_usize_lossy(i) * mu;
        let next = ((lambda + i_mu - lambda * params.batch().pgf_eval(z)) * boundary[i] - params.alpha(i - 1) * d)
            / (T::from_usize_lossy(i + 1) * mu);
        if !(next > T::zero()) || !next.is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "boundary probability pi_{{{0},{0}}} = {next} is not positive",
                i + 1
            )));
        }
        boundary[i + 1] = next;
    }
    Ok(boundary)
}

/// Smallest real singularity above 1 over the level generating functions.
fn dominant_singularity_of<T: Scalar>(params: &ModelParams<T>, roots: &[T]) -> Option<T> {
    let c = params.c();
    let mut best = real_root_above_one(&level0_denominator(params));
    for i in 1..=c {
        let f = LevelPolynomial::new(params, i).ok()?;
        let root = if i < c { roots[i - 1] } else { T::one() };
        if let Some(r) = real_root_above_one(&deflate(f.coeffs(), root)) {
            best = Some(best.map_or(r, |b: T| b.min(r)));
        }
    }
    best
}

/// Smallest `j > c` with estimated tail `x^j (j+1) / (1-x)^2 <= target`, `x` the decay
/// rate implied by the dominant singularity.
fn tail_length<T: Scalar>(params: &ModelParams<T>, roots: &[T], target: f64) -> usize {
    let c = params.c();
    let decay = dominant_singularity_of(params, roots)
        .map(|r| 1.0 / r.to_f64_lossy())
        .unwrap_or(0.999)
        .clamp(1e-6, 0.999_999);
    let mut j = c + 1;
    // geometric tail with a linear prefactor (double poles) in the worst case
    while decay.powi(j as i32) * (j as f64 + 1.0) / (1.0 - decay).powi(2) > target && j < 1_000_000 {
        j += 1 + j / 16;
    }
    j
}

fn series_length<T: Scalar>(params: &ModelParams<T>, roots: &[T]) -> usize {
    tail_length(params, roots, SERIES_TAIL).max(64)
}

/// `series[l][k] = π̃_{l,l+k}` for levels `0..=upto`, `k < len`, by dividing each level's
/// numerator by its denominator with the in-disk root factored out. Needs `boundary`
/// through index `upto + 1` (or `upto` for the top level).
fn unnormalized_series<T: Scalar>(params: &ModelParams<T>, roots: &[T], boundary: &[T], upto: usize, len: usize) -> Vec<Vec<T>> {
    let c = params.c();
    let lambda = params.lambda();
    let mu = params.mu();
    let pmf = params.batch().pmf();
    let mut out: Vec<Vec<T>> = Vec::with_capacity(upto + 1);

    let mut level0 = vec![T::zero(); len];
    level0[0] = boundary[0];
    let k0 = lambda + params.alpha(0);
    for j in 1..len {
        let mut acc = T::zero();
        for (k, &b) in pmf.iter().enumerate().take(j + 1).skip(1) {
            acc += b * level0[j - k];
        }
        level0[j] = lambda * acc / k0;
    }
    out.push(level0);

    for i in 1..=upto {
        let f = LevelPolynomial::new(params, i).expect("valid level");
        let (root, lead) = if i < c {
            let slope = params.alpha(i) * boundary[i] + T::from_usize_lossy(i + 1) * mu * boundary[i + 1];
            (roots[i - 1], slope)
        } else {
            (T::one(), T::zero())
        };
        let mut num: Vec<T> = divided_difference(&out[i - 1], root)
            .into_iter()
            .map(|d| params.alpha(i - 1) * d)
            .collect();
        num[0] += lead;
        let den = deflate(f.coeffs(), root);
        out.push(series_div(&num, &den, len));
    }
    out
}

/// Solver knobs. The root perturbation is a fault-injection hook for validation tests.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    #[doc(hidden)]
    pub perturb_first_root: Option<T>,
}

impl<T> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { perturb_first_root: None }
    }
}

/// A fully solved model: roots, boundary values, level masses and normalization.
#[derive(Debug, Clone)]
pub struct SolvedModel<T> {
    params: ModelParams<T>,
    roots: Vec<T>,
    boundary: Vec<T>,
    level_masses: Vec<T>,
    norm: T,
    first_moments: Vec<T>,
}

impl<T: Scalar> SolvedModel<T> {
    pub fn solve(params: &ModelParams<T>) -> Result<Self> {
        Self::solve_with(params, SolveOptions::default())
    }

    pub fn solve_with(params: &ModelParams<T>, opts: SolveOptions<T>) -> Result<Self> {
        params.validate()?;
        let c = params.c();
        let mut roots = find_all_roots(params)?;
        if let (Some(eps), Some(z1)) = (opts.perturb_first_root, roots.first_mut()) {
            *z1 += eps;
        }
        let boundary = boundary_recursion(params, &roots)?;

        // level masses and first moments relative to π_{0,0} = 1
        let mu = params.mu();
        let mut masses = vec![T::zero(); c + 1];
        let mut firsts = vec![T::zero(); c];
        masses[0] = eval_pi0(params, T::one(), T::one());
        firsts[0] = moments::level0_moments(params, T::one(), 1)[1];
        for i in 1..c {
            masses[i] = boundary[i] + T::from_usize_lossy(i + 1) * mu * boundary[i + 1] / params.alpha(i);
            firsts[i] = moments::first_moment_step(params, i, firsts[i - 1], masses[i], boundary[i], boundary[i + 1]);
        }
        masses[c] = moments::top_moment_step(params, 0, firsts[c - 1], &[]);

        let total: T = masses.iter().copied().sum();
        let norm = T::one() / total;
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NumericalBreakdown(format!("normalization constant {norm}")));
        }
        for v in masses.iter_mut().chain(firsts.iter_mut()) {
            if !(*v >= -T::lit(1e-12)) {
                return Err(Error::NumericalBreakdown(format!("negative partial mass or moment {v}")));
            }
            *v = v.max(T::zero()) * norm;
        }
        Ok(Self {
            params: params.clone(),
            roots,
            boundary,
            level_masses: masses,
            norm,
            first_moments: firsts,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    /// `z_1..z_{c-1}`.
    pub fn roots(&self) -> &[T] {
        &self.roots
    }

    /// Boundary values relative to `π_{0,0} = 1`.
    pub fn unnormalized_boundary(&self) -> &[T] {
        &self.boundary
    }

    /// Normalized `π_{i,i}`.
    pub fn boundary(&self, i: usize) -> T {
        self.boundary[i] * self.norm
    }

    pub fn boundaries(&self) -> Vec<T> {
        self.boundary.iter().map(|&b| b * self.norm).collect()
    }

    /// `π_{0,0}`, the normalization constant.
    pub fn pi00(&self) -> T {
        self.norm
    }

    /// Normalized `Π_i(1)`, `i = 0..=c`.
    pub fn level_masses(&self) -> &[T] {
        &self.level_masses
    }

    /// Normalized `Π_i'(1)`, `i = 0..c-1`.
    pub fn first_moments(&self) -> &[T] {
        &self.first_moments
    }

    /// `Π_c(1)`.
    pub fn top_mass(&self) -> T {
        self.level_masses[self.params.c()]
    }

    fn evaluator(&self) -> GfEvaluator<'_, T> {
        GfEvaluator::new(&self.params, &self.roots, &self.boundary).expect("levels validated at solve time")
    }

    fn check_gf_args(&self, level: usize, z: T) -> Result<()> {
        let c = self.params.c();
        if level > c {
            return Err(Error::InvalidLevel { level, c });
        }
        if !(z >= T::zero() && z <= T::one()) {
            return Err(Error::BadParams(format!("z = {z} outside [0,1]")));
        }
        Ok(())
    }

    /// Normalized `Π_i(z)` for `0 <= i <= c`, `z ∈ [0,1]`.
    pub fn eval_level_gf(&self, level: usize, z: T) -> Result<T> {
        self.check_gf_args(level, z)?;
        Ok(self.evaluator().value(level, z) * self.norm)
    }

    /// `Π_i(z)` relative to `π_{0,0} = 1`.
    pub fn eval_level_gf_unnormalized(&self, level: usize, z: T) -> Result<T> {
        self.check_gf_args(level, z)?;
        Ok(self.evaluator().value(level, z))
    }

    /// `Π_c(z)`; at `z = 1` this is the L'Hôpital limit and agrees with [`Self::top_mass`].
    pub fn eval_top_gf(&self, z: T) -> Result<T> {
        self.eval_level_gf(self.params.c(), z)
    }

    /// Normalized Taylor coefficients `Π_i^{(k)}(z)/k!`, `k = 0..=order`.
    pub fn level_gf_jet(&self, level: usize, z: T, order: usize) -> Result<Vec<T>> {
        self.check_gf_args(level, z)?;
        Ok(self.evaluator().jet(level, z, order).into_iter().map(|v| v * self.norm).collect())
    }

    /// Smallest singularity radius over all partial generating functions; `π_{i,j}` decays
    /// no slower than `radius^{-j}` up to polynomial factors.
    pub fn dominant_singularity(&self) -> Option<T> {
        dominant_singularity_of(&self.params, &self.roots)
    }

    /// Truncation level whose estimated tail mass is below 1e-10 (before verification).
    pub fn default_j_max(&self) -> usize {
        tail_length(&self.params, &self.roots, AUTO_TAIL * 1e-2).max(self.params.c() + 8)
    }

    /// Joint table `π_{i,j}` for `j <= j_max`, extracted from the partial generating
    /// functions after deflating their in-disk roots.
    pub fn joint_distribution(&self, j_max: usize, max_tail: T) -> Result<JointDistribution<T>> {
        let p = &self.params;
        let c = p.c();
        if j_max < c {
            return Err(Error::BadParams(format!("j_max = {j_max} must be >= c = {c}")));
        }
        let len = 2 * (j_max + 1) + 8;
        let series = self.level_series(len);

        let clamp_tol = T::lit(1e-12).max(T::epsilon() * T::lit(100.0));
        let mut clamped = 0usize;
        let mut rows = Vec::with_capacity(c + 1);
        for (i, s) in series.into_iter().enumerate() {
            let mut row: Vec<T> = s.into_iter().take(j_max + 1 - i).collect();
            for v in row.iter_mut() {
                if *v < T::zero() {
                    if *v < -clamp_tol {
                        return Err(Error::NumericalBreakdown(format!("negative probability {v} at level {i}")));
                    }
                    *v = T::zero();
                    clamped += 1;
                }
            }
            rows.push(row);
        }
        if clamped > 0 {
            warn!("clamped {clamped} tiny negative probabilities to zero");
        }
        let total: T = rows.iter().flatten().copied().sum();
        let tail = (T::one() - total).max(T::zero());
        if tail > max_tail {
            return Err(Error::TruncationTooSmall {
                tail: tail.to_f64_lossy(),
                threshold: max_tail.to_f64_lossy(),
            });
        }
        Ok(JointDistribution {
            c,
            j_max,
            rows,
            tail_mass_bound: tail,
        })
    }

    /// Joint table at an automatically chosen truncation level with tail mass below 1e-10.
    pub fn joint_distribution_auto(&self) -> Result<JointDistribution<T>> {
        let mut j = self.default_j_max();
        let tol = T::lit(AUTO_TAIL).max(T::epsilon() * T::lit(1e3));
        for _ in 0..6 {
            match self.joint_distribution(j, tol) {
                Err(Error::TruncationTooSmall { .. }) => j *= 2,
                other => return other,
            }
        }
        self.joint_distribution(j, tol)
    }

    /// `series[i][k] = π_{i,i+k}` (normalized), `k < len`.
    pub(crate) fn level_series(&self, len: usize) -> Vec<Vec<T>> {
        let c = self.params.c();
        let mut out = unnormalized_series(&self.params, &self.roots, &self.boundary, c, len);
        for v in out.iter_mut().flatten() {
            *v = *v * self.norm;
        }
        out
    }
}

/// Truncated table of `π_{i,j}` over `{(i,j) : 0 <= i <= min(c,j), j <= j_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<T> {
    c: usize,
    j_max: usize,
    /// `rows[i][k] = π_{i,i+k}`.
    rows: Vec<Vec<T>>,
    tail_mass_bound: T,
}

impl<T: Scalar> JointDistribution<T> {
    pub(crate) fn from_rows(c: usize, j_max: usize, rows: Vec<Vec<T>>, tail_mass_bound: T) -> Self {
        Self {
            c,
            j_max,
            rows,
            tail_mass_bound,
        }
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn tail_mass_bound(&self) -> T {
        self.tail_mass_bound
    }

    /// `π_{i,j}`; zero outside the stored state space.
    pub fn pi(&self, i: usize, j: usize) -> T {
        if i > self.c || j < i {
            return T::zero();
        }
        self.rows[i].get(j - i).copied().unwrap_or_else(T::zero)
    }

    /// `π_{i,i+k}` for `k = 0..`, i.e. the coefficients of `Π_i`.
    pub fn level_row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn total_mass(&self) -> T {
        self.rows.iter().flatten().copied().sum()
    }

    /// `Σ_j (j-i)(j-i-1)...(j-i-n+1) π_{i,j}` over the stored rows.
    pub fn factorial_moment(&self, i: usize, n: usize) -> T {
        self.rows[i]
            .iter()
            .enumerate()
            .map(|(k, &v)| crate::scalar::falling_factorial::<T>(k, n) * v)
            .sum()
    }

    /// Largest absolute global-balance residual over states whose neighbours are all stored
    /// (`j < j_max`), measured against the untruncated chain.
    pub fn max_balance_residual(&self, params: &ModelParams<T>) -> T {
        let c = self.c;
        let lambda = params.lambda();
        let mu = params.mu();
        let pmf = params.batch().pmf();
        let mut worst = T::zero();
        for i in 0..=c {
            let i_mu = T::from_usize_lossy(i) * mu;
            for j in i..self.j_max {
                let mut out_rate = lambda + i_mu;
                if i < c && j > i {
                    out_rate += params.alpha(i);
                }
                let mut inflow = T::zero();
                for (k, &b) in pmf.iter().enumerate().skip(1) {
                    if j >= i + k {
                        inflow += lambda * b * self.pi(i, j - k);
                    }
                }
                if i >= 1 {
                    inflow += i_mu * self.pi(i, j + 1);
                }
                if j == i && i < c {
                    inflow += T::from_usize_lossy(i + 1) * mu * self.pi(i + 1, i + 1);
                }
                // j >= i > i-1, so level i-1 has someone waiting and sets up a server
                if i >= 1 {
                    inflow += params.alpha(i - 1) * self.pi(i - 1, j);
                }
                let r = (inflow - out_rate * self.pi(i, j)).abs();
                if r > worst {
                    worst = r;
                }
            }
        }
        worst
    }
}
