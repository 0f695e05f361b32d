//! Brute-force references used by the test suites: exhaustive minimization
//! over all indicator matrices, direct posterior maximization, and an
//! iterative numerical minimizer for the sparse group lasso objective.
//!
//! None of this is exposed through the CLI; it exists to check the fast
//! paths against independent computations.

use crate::error::{Error, Result};
use crate::estimator::selection_objective;
use crate::lasso::{LassoParams, soft_threshold};
use crate::model::{IndicatorMatrix, MeanSet, ObservationSet};
use crate::penalty::PenaltyConfig;
use crate::scalar::Scalar;

/// Hard limits for the brute-force searches.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    /// Cap on n*m for exhaustive enumeration (2^cells configurations).
    pub max_cells: usize,
    /// Convergence tolerance for the iterative convex solver.
    pub tolerance: f64,
}

impl OracleBudget {
    pub fn new(max_cells: usize, tolerance: f64) -> Result<Self> {
        if max_cells > 20 {
            return Err(Error::InvalidParameter(format!(
                "max_cells={max_cells} exceeds the 2^20 enumeration cap"
            )));
        }
        if !(tolerance > 0.0 && tolerance <= 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {tolerance} must lie in (0, 1e-3]"
            )));
        }
        Ok(Self { max_cells, tolerance })
    }
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_cells: 16, tolerance: 1e-10 }
    }
}

fn check_budget<T: Scalar>(data: &ObservationSet<T>, budget: &OracleBudget) -> Result<()> {
    let cells = data.m * data.n;
    if cells > budget.max_cells {
        return Err(Error::BudgetExceeded { cells, cap: budget.max_cells });
    }
    Ok(())
}

fn mask_to_indicator(mask: u32, m: usize, n: usize) -> IndicatorMatrix {
    let mut flags = IndicatorMatrix::zeros(m, n);
    for j in 0..m {
        for i in 0..n {
            flags.flags[j][i] = mask >> (j * n + i) & 1 == 1;
        }
    }
    flags
}

// Near-ties within this tolerance resolve to the smaller mask, mirroring the
// estimator's smallest-index conventions.
const TIE_TOLERANCE: f64 = 1e-12;

/// Global minimizer of the penalized criterion over all 2^{nm} indicator
/// matrices.
pub fn exhaustive_map<T: Scalar>(
    data: &ObservationSet<T>,
    config: &PenaltyConfig<T>,
    budget: &OracleBudget,
) -> Result<(IndicatorMatrix, T)> {
    check_budget(data, budget)?;
    let cells = data.m * data.n;
    let tie = T::of(TIE_TOLERANCE);
    let mut best_mask = 0u32;
    let mut best = selection_objective(data, config, &mask_to_indicator(0, data.m, data.n))?;
    for mask in 1..(1u32 << cells) {
        let objective =
            selection_objective(data, config, &mask_to_indicator(mask, data.m, data.n))?;
        if objective < best - tie {
            best = objective;
            best_mask = mask;
        }
    }
    Ok((mask_to_indicator(best_mask, data.m, data.n), best))
}

/// Maximizer of the log-posterior over indicator matrices, computed from the
/// Bayesian form directly rather than the penalized rewriting.
///
/// Agreement with [`exhaustive_map`] checks the whole derivation chain from
/// posterior to the sorted-score algorithm.
pub fn posterior_argmax<T: Scalar>(
    data: &ObservationSet<T>,
    config: &PenaltyConfig<T>,
    budget: &OracleBudget,
) -> Result<IndicatorMatrix> {
    check_budget(data, budget)?;
    let cells = data.m * data.n;
    let tie = T::of(TIE_TOLERANCE);
    let mut best_mask = 0u32;
    let mut best = log_posterior(data, config, &mask_to_indicator(0, data.m, data.n))?;
    for mask in 1..(1u32 << cells) {
        let value = log_posterior(data, config, &mask_to_indicator(mask, data.m, data.n))?;
        if value > best + tie {
            best = value;
            best_mask = mask;
        }
    }
    Ok(mask_to_indicator(best_mask, data.m, data.n))
}

/// The criterion being maximized: for each nonzero group the kept signal
/// energy plus 2 sigma^2 (1+1/gamma) ln( pi_j(h_j) C(n,h_j)^{-1}
/// (1+gamma)^{-h_j/2} ), plus the analogous between-groups term.
fn log_posterior<T: Scalar>(
    data: &ObservationSet<T>,
    config: &PenaltyConfig<T>,
    flags: &IndicatorMatrix,
) -> Result<T> {
    if flags.m() != data.m || flags.n() != data.n {
        return Err(Error::Dimension("indicator shape mismatch".into()));
    }
    let factor = config.penalty_factor();
    let n = data.n;
    let half = T::of(0.5);
    let mut value = T::zero();
    for j in 0..data.m {
        let h = flags.h(j);
        if h == 0 {
            continue;
        }
        let kept_energy: T = data
            .group(j)
            .iter()
            .zip(&flags.flags[j])
            .filter(|(_, &kept)| kept)
            .map(|(&y, _)| y * y)
            .sum();
        let prior = config.within_priors.get(j);
        let log_prior = prior.log_mass(h) - crate::scalar::ln_choose::<T>(n, h)
            - half * T::of_usize(h) * (T::one() + config.gamma).ln();
        value = value + kept_energy + factor * log_prior;
    }
    let m0 = flags.m0();
    let log_between = config.between_prior.log_mass(m0)
        - crate::scalar::ln_choose::<T>(data.m, m0);
    Ok(value + factor * log_between)
}

/// Iterative proximal minimizer of the sparse group lasso objective.
///
/// Uses a deliberately conservative step (a quarter of the curvature bound)
/// so it converges along a path independent of the one-shot closed form it
/// validates.
pub fn numeric_sgl<T: Scalar>(
    data: &ObservationSet<T>,
    params: LassoParams<T>,
    budget: &OracleBudget,
) -> Result<MeanSet<T>> {
    data.validate()?;
    LassoParams::new(params.lambda1, params.lambda2)?;
    let step = T::of(0.25);
    let t1 = step * params.lambda1;
    let t2 = step * params.lambda2;
    let tol = T::of(budget.tolerance);
    let max_iterations = 200_000;

    let mut current = MeanSet::zeros(data.m, data.n);
    for _ in 0..max_iterations {
        let next_values: Vec<Vec<T>> = current
            .values
            .iter()
            .zip(&data.values)
            .map(|(mu, y)| {
                // Gradient step on the fit term, then the proximal map of
                // t*(lambda1 ||.||_2 + lambda2 ||.||_1): componentwise soft
                // threshold at t*lambda2 followed by group shrinkage at
                // t*lambda1.
                let stepped: Vec<T> = mu
                    .iter()
                    .zip(y)
                    .map(|(&m, &yv)| m - step * T::of(2.0) * (m - yv))
                    .collect();
                let soft = soft_threshold(&stepped, t2);
                let norm = soft.iter().map(|&v| v * v).sum::<T>().sqrt();
                if norm > t1 {
                    let factor = T::one() - t1 / norm;
                    soft.into_iter().map(|v| factor * v).collect()
                } else {
                    vec![T::zero(); soft.len()]
                }
            })
            .collect();
        let next = MeanSet::new(next_values)?;
        // Fixed-point stop: with this step the map contracts, so a small
        // iterate change bounds the distance to the minimizer.
        let shift = next
            .values
            .iter()
            .flatten()
            .zip(current.values.iter().flatten())
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        current = next;
        if shift <= tol {
            return Ok(current);
        }
    }
    Err(Error::NonConvergence(max_iterations))
}

pub fn sgl_objective<T: Scalar>(data: &ObservationSet<T>, mu: &MeanSet<T>, params: LassoParams<T>) -> T {
    data.values
        .iter()
        .zip(&mu.values)
        .map(|(y, g)| {
            let fit: T = y.iter().zip(g).map(|(&yv, &m)| (yv - m) * (yv - m)).sum();
            let l2 = g.iter().map(|&v| v * v).sum::<T>().sqrt();
            let l1: T = g.iter().map(|&v| v.abs()).sum();
            fit + params.lambda1 * l2 + params.lambda2 * l1
        })
        .sum()
}
