//! Cross-check of an analytic solve against the truncated-chain oracle.

use serde::Serialize;

use crate::error::Result;
use crate::measures::conditional_decomposition_check;
use crate::model::ModelParams;
use crate::moments::MomentTable;
use crate::oracle;
use crate::scalar::Scalar;
use crate::solver::{SolveOptions, SolvedModel};

/// Longest conditional support compared by the decomposition check.
const DECOMPOSITION_SUPPORT: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions<T> {
    /// Oracle truncation level; `None` doubles from the default until converged.
    pub j_max: Option<usize>,
    /// Largest acceptable absolute gap per check.
    pub tol: T,
    #[doc(hidden)]
    pub perturb_root: Option<T>,
}

impl<T: Scalar> Default for ValidationOptions<T> {
    fn default() -> Self {
        Self {
            j_max: None,
            tol: T::lit(1e-6),
            perturb_root: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult<T> {
    pub name: &'static str,
    pub gap: T,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport<T> {
    pub j_max: usize,
    pub tol: T,
    pub checks: Vec<CheckResult<T>>,
}

impl<T: Scalar> ValidationReport<T> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult<T>> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult<T>> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Solves `params` analytically and by the oracle and reports the largest absolute gap
/// for the boundary values, the joint table (`j <= J/2`), the level masses, the
/// factorial moments of order 1 and 2, and the conditional decomposition.
pub fn validate_against_oracle<T: Scalar>(params: &ModelParams<T>, opts: &ValidationOptions<T>) -> Result<ValidationReport<T>> {
    let solved = SolvedModel::solve_with(
        params,
        SolveOptions {
            perturb_first_root: opts.perturb_root,
        },
    )?;
    let reference = match opts.j_max {
        Some(j) => oracle::solve_setup(params, j)?,
        None => oracle::solve_setup_converged(params)?,
    };
    let c = params.c();
    let j_max = reference.j_max();
    let half = j_max / 2;

    let max_gap = |it: &mut dyn Iterator<Item = (T, T)>| it.fold(T::zero(), |acc, (a, b)| acc.max((a - b).abs()));

    let boundary = max_gap(&mut (0..=c).map(|i| (solved.boundary(i), reference.pi(i, i))));

    // the analytic table is only read up to J/2, so its own tail bound is irrelevant here
    let table = solved.joint_distribution(j_max, T::one())?;
    let joint = max_gap(&mut (0..=c).flat_map(|i| (i..=half).map(move |j| (i, j))).map(|(i, j)| (table.pi(i, j), reference.pi(i, j))));

    let masses = max_gap(
        &mut solved
            .level_masses()
            .iter()
            .enumerate()
            .map(|(i, &m)| (m, reference.level_row(i).iter().copied().sum::<T>())),
    );

    let moments = MomentTable::compute(&solved, 2);
    let moment_gap = max_gap(&mut (0..=c).flat_map(|i| [1, 2].map(|n| (i, n))).map(|(i, n)| (moments.get(i, n), reference.factorial_moment(i, n))));

    let support = DECOMPOSITION_SUPPORT.min(half.saturating_sub(c)).max(1);
    let decomposition = conditional_decomposition_check(&solved, Some(&reference), support)?.max_gap;

    let checks = [
        ("boundary", boundary),
        ("joint", joint),
        ("level_masses", masses),
        ("moments", moment_gap),
        ("decomposition", decomposition),
    ]
    .into_iter()
    .map(|(name, gap)| CheckResult {
        name,
        gap,
        passed: gap < opts.tol,
    })
    .collect();
    Ok(ValidationReport {
        j_max,
        tol: opts.tol,
        checks,
    })
}
