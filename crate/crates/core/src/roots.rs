//! Level characteristic polynomials `f_i(z) = (λ + iμ + α_i) z - λ z β(z) - iμ` and their
//! unique zero inside the unit disk.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::series::{poly_derivative_eval, poly_eval};

/// `f_i` for a level `1 <= i <= c`, stored as dense polynomial coefficients. At `i = c`
/// there is no setup term and `f_c(1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPolynomial<T> {
    level: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> LevelPolynomial<T> {
    pub fn new(params: &ModelParams<T>, level: usize) -> Result<Self> {
        let c = params.c();
        if level == 0 || level > c {
            return Err(Error::InvalidLevel { level, c });
        }
        let lambda = params.lambda();
        let i_mu = T::from_usize_lossy(level) * params.mu();
        let alpha = if level < c { params.alpha(level) } else { T::zero() };
        let pmf = params.batch().pmf();
        let mut coeffs = vec![T::zero(); pmf.len() + 1];
        coeffs[0] = -i_mu;
        coeffs[1] = lambda + i_mu + alpha;
        for (k, &b) in pmf.iter().enumerate().skip(1) {
            coeffs[k + 1] -= lambda * b;
        }
        Ok(Self { level, coeffs })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn eval(&self, z: T) -> T {
        poly_eval(&self.coeffs, z)
    }

    pub fn derivative(&self, z: T) -> T {
        poly_derivative_eval(&self.coeffs, z)
    }

    /// `λ + iμ + α_i`, the natural scale of `f_i` on the unit disk.
    pub fn scale(&self) -> T {
        self.coeffs[1]
    }
}

/// Unique zero of `f_i` in `(0,1)` for `1 <= i <= c-1`: bisection on the bracket
/// `f_i(0) = -iμ < 0 < α_i = f_i(1)`, then a Newton polish.
pub fn find_root<T: Scalar>(params: &ModelParams<T>, level: usize) -> Result<T> {
    if level == 0 || level >= params.c() {
        return Err(Error::InvalidLevel { level, c: params.c() });
    }
    let f = LevelPolynomial::new(params, level)?;
    let (mut lo, mut hi) = (T::zero(), T::one());
    if !(f.eval(lo) < T::zero() && f.eval(hi) > T::zero()) {
        return Err(Error::NoSignChange { level });
    }
    let width = T::lit(1e-14).max(T::epsilon() * T::lit(2.0));
    for _ in 0..256 {
        if hi - lo <= width {
            break;
        }
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.eval(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut z = (lo + hi) / T::lit(2.0);
    let fz = f.eval(z);
    let step = fz / f.derivative(z);
    let polished = z - step;
    if polished > T::zero() && polished < T::one() && f.eval(polished).abs() <= fz.abs() {
        z = polished;
    }
    Ok(z)
}

/// All roots `z_1..z_{c-1}` (empty for a single server).
pub fn find_all_roots<T: Scalar>(params: &ModelParams<T>) -> Result<Vec<T>> {
    (1..params.c()).map(|i| find_root(params, i)).collect()
}

/// Quadratic-formula root for single arrivals, `β(z) = z`.
pub fn closed_form_root_single_arrival<T: Scalar>(params: &ModelParams<T>, level: usize) -> Result<T> {
    if !params.batch().is_single_arrival() {
        return Err(Error::WrongBatchKind);
    }
    if level == 0 || level >= params.c() {
        return Err(Error::InvalidLevel { level, c: params.c() });
    }
    let lambda = params.lambda();
    let i_mu = T::from_usize_lossy(level) * params.mu();
    let b = lambda + i_mu + params.alpha(level);
    let disc = b * b - T::lit(4.0) * lambda * i_mu;
    // 2 iμ / (b + sqrt(disc)) is the same root without cancellation for large α
    Ok(T::lit(2.0) * i_mu / (b + disc.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BatchDistribution, Costs, SetupPolicy};
    use approx::assert_relative_eq;

    fn single(lambda: f64, mu: f64, alphas: Vec<f64>) -> ModelParams<f64> {
        ModelParams::from_rates(lambda, mu, alphas, BatchDistribution::single(), Costs::default()).unwrap()
    }

    #[test]
    fn golden_ratio_root() {
        let p = single(1.0, 1.0, vec![1.0, 1.0]);
        let expected = (3.0 - 5f64.sqrt()) / 2.0;
        assert_relative_eq!(find_root(&p, 1).unwrap(), expected, epsilon = 1e-13);
        assert_relative_eq!(closed_form_root_single_arrival(&p, 1).unwrap(), 0.3819660113, epsilon = 1e-10);
    }

    #[test]
    fn second_level_root() {
        let p = single(1.0, 2.0, vec![1.0, 1.0, 3.0]);
        let expected = (8.0 - 48f64.sqrt()) / 2.0;
        assert_relative_eq!(find_root(&p, 2).unwrap(), expected, epsilon = 1e-13);
        assert_relative_eq!(expected, 0.5358983849, epsilon = 1e-10);
    }

    #[test]
    fn large_alpha_closed_form() {
        let p = single(1.0, 1.0, vec![1.0, 100.0]);
        let z = closed_form_root_single_arrival(&p, 1).unwrap();
        assert_relative_eq!(z, (102.0 - 10400f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert_relative_eq!(z, 0.00980296, epsilon = 5e-6);
        assert_relative_eq!(z, find_root(&p, 1).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn residual_is_tiny() {
        let batch = BatchDistribution::<f64>::custom(&[(1, 0.5), (2, 0.5)]).unwrap();
        let p = ModelParams::new(1.0, 1.0, 3, &SetupPolicy::Custom(vec![1.0, 2.0, 3.0]), batch, Costs::default()).unwrap();
        for i in 1..3 {
            let f = LevelPolynomial::new(&p, i).unwrap();
            let z = find_root(&p, i).unwrap();
            assert!(z > 0.0 && z < 1.0);
            assert!(f.eval(z).abs() < 1e-13 * f.scale(), "level {i}: {}", f.eval(z));
        }
    }

    #[test]
    fn endpoints_and_errors() {
        let p = single(1.0, 1.0, vec![1.0, 2.0, 3.0]);
        let f2 = LevelPolynomial::new(&p, 2).unwrap();
        assert_relative_eq!(f2.eval(0.0), -2.0);
        assert_relative_eq!(f2.eval(1.0), 3.0, epsilon = 1e-14);
        let fc = LevelPolynomial::new(&p, 3).unwrap();
        assert_relative_eq!(fc.eval(1.0), 0.0, epsilon = 1e-14);
        assert_eq!(find_root(&p, 3), Err(Error::InvalidLevel { level: 3, c: 3 }));
        assert_eq!(find_root(&p, 0), Err(Error::InvalidLevel { level: 0, c: 3 }));
        let batch = p.with_batch(BatchDistribution::deterministic(2).unwrap()).unwrap();
        assert_eq!(closed_form_root_single_arrival(&batch, 1), Err(Error::WrongBatchKind));
    }
}
