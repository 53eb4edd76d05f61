//! Truncated power series and polynomial helpers shared by the solver.
//!
//! A "jet" is the vector of Taylor coefficients `f^{(k)}(z0)/k!`, `k = 0..=order`.

use crate::scalar::{binomial, Scalar};

pub(crate) fn poly_eval<T: Scalar>(coeffs: &[T], z: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &a| acc * z + a)
}

pub(crate) fn poly_derivative_eval<T: Scalar>(coeffs: &[T], z: T) -> T {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(T::zero(), |acc, (n, &a)| acc * z + T::from_usize_lossy(n) * a)
}

/// Taylor coefficients of a polynomial about `z0`, up to `order`.
pub(crate) fn poly_jet<T: Scalar>(coeffs: &[T], z0: T, order: usize) -> Vec<T> {
    (0..=order)
        .map(|m| {
            coeffs
                .iter()
                .enumerate()
                .skip(m)
                .map(|(n, &a)| a * binomial::<T>(n, m) * z0.powi((n - m) as i32))
                .sum()
        })
        .collect()
}

/// Quotient of `p(z) / (z - root)` by top-down synthetic division; the remainder is dropped.
/// Stable when `root` is the smallest-magnitude zero of `p`.
pub(crate) fn deflate<T: Scalar>(coeffs: &[T], root: T) -> Vec<T> {
    let n = coeffs.len();
    if n < 2 {
        return Vec::new();
    }
    let mut q = vec![T::zero(); n - 1];
    q[n - 2] = coeffs[n - 1];
    for k in (1..n - 1).rev() {
        q[k - 1] = coeffs[k] + root * q[k];
    }
    q
}

/// First `len` coefficients of `num / den` where `den[0] != 0`.
pub(crate) fn series_div<T: Scalar>(num: &[T], den: &[T], len: usize) -> Vec<T> {
    let mut out = vec![T::zero(); len];
    let d0 = den[0];
    for n in 0..len {
        let mut acc = num.get(n).copied().unwrap_or_else(T::zero);
        for (k, &dk) in den.iter().enumerate().take(n + 1).skip(1) {
            acc -= dk * out[n - k];
        }
        out[n] = acc / d0;
    }
    out
}

/// Coefficients of `(P(z) - P(w)) / (z - w)` for a truncated series `P`, using the backward
/// tail recursion `d_k = p_{k+1} + w d_{k+1}` (all terms nonnegative for `w >= 0`).
pub(crate) fn divided_difference<T: Scalar>(series: &[T], w: T) -> Vec<T> {
    let n = series.len();
    if n < 2 {
        return vec![T::zero()];
    }
    let mut d = vec![T::zero(); n - 1];
    let mut acc = T::zero();
    for k in (0..n - 1).rev() {
        acc = series[k + 1] + w * acc;
        d[k] = acc;
    }
    d
}

pub(crate) fn jet_mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let len = a.len().min(b.len());
    (0..len)
        .map(|n| (0..=n).map(|k| a[k] * b[n - k]).sum())
        .collect()
}

/// Quotient of two jets. When both constant terms vanish (a removable singularity at the
/// expansion point) pass `singular = true`: the first coefficient of each is dropped and
/// the result is one order shorter.
pub(crate) fn jet_div<T: Scalar>(a: &[T], b: &[T], singular: bool) -> Vec<T> {
    let len = a.len().min(b.len());
    if singular {
        series_div(&a[1..len], &b[1..len], len - 1)
    } else {
        series_div(&a[..len], &b[..len], len)
    }
}

/// Re-expands a jet about `z0 + dz`, keeping `order + 1` coefficients.
pub(crate) fn jet_shift<T: Scalar>(jet: &[T], dz: T, order: usize) -> Vec<T> {
    (0..=order)
        .map(|m| {
            jet.iter()
                .enumerate()
                .skip(m)
                .map(|(n, &a)| a * binomial::<T>(n, m) * dz.powi((n - m) as i32))
                .sum()
        })
        .collect()
}

/// Smallest real zero above 1 of a polynomial that is positive at 1 and eventually negative.
/// Returns `None` if no sign change is found before `z = 1e6`.
pub(crate) fn real_root_above_one<T: Scalar>(coeffs: &[T]) -> Option<T> {
    let f = |z: T| poly_eval(coeffs, z);
    let mut lo = T::one();
    if !(f(lo) > T::zero()) {
        return None;
    }
    // march outward in small geometric steps so the first crossing is not skipped
    let step = T::lit(1.05);
    let mut hi = lo;
    loop {
        let next = T::one() + (hi - T::one() + T::lit(1e-3)) * step;
        if f(next) <= T::zero() {
            lo = hi;
            hi = next;
            break;
        }
        hi = next;
        if hi > T::lit(1e6) {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}
