//! The sparse group MAP estimator.
//!
//! Three steps: pick the kept-component count h within each group by
//! penalized fit over order statistics, score each group, then pick how many
//! groups to keep by a second penalized minimization over the sorted scores.
//! The result is keep-or-kill: every estimated entry is either the
//! observation or zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MeanSet, ObservationSet};
use crate::penalty::PenaltyConfig;
use crate::priors::{binomial_lambda_sq, LambdaKind, PriorDescriptor};
use crate::scalar::Scalar;

/// Per-group outcome of the within-group minimization.
#[derive(Debug, Clone, Serialize)]
pub struct GroupScore<T> {
    pub group_index: usize,
    /// Selected number of kept components, in {1, ..., n}.
    pub h_hat: usize,
    /// Attained minimum of the within-group criterion.
    pub w: T,
    /// Component indices of the h_hat largest |y|, in keep order.
    pub kept_component_ranks: Vec<usize>,
}

/// Full output of the estimator.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateResult<T> {
    pub estimate: MeanSet<T>,
    /// Indices of groups declared nonzero, ascending.
    pub selected_groups: Vec<usize>,
    pub m0_hat: usize,
    pub scores: Vec<GroupScore<T>>,
    /// Value of the penalized least-squares criterion at the estimate.
    pub objective: T,
}

/// Component indices of a group ordered by decreasing |y|, ties broken by
/// lower index.
fn order_by_abs_desc<T: Scalar>(y: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| {
        y[b].abs()
            .partial_cmp(&y[a].abs())
            .expect("finite observations")
            .then(a.cmp(&b))
    });
    order
}

/// Cumulative sums of squared order statistics: cum[h] = sum of the h
/// largest y^2.
fn cumulative_top_squares<T: Scalar>(y: &[T], order: &[usize]) -> Vec<T> {
    let mut cum = Vec::with_capacity(y.len() + 1);
    cum.push(T::zero());
    let mut acc = T::zero();
    for &i in order {
        acc = acc + y[i] * y[i];
        cum.push(acc);
    }
    cum
}

fn argmin_h<T: Scalar>(
    cum: &[T],
    config: &PenaltyConfig<T>,
    group: usize,
) -> Result<(usize, T)> {
    let n = cum.len() - 1;
    let mut best_h = 1;
    let mut best = -cum[1] + config.pen_within(group, 1)?;
    for h in 2..=n {
        let cost = -cum[h] + config.pen_within(group, h)?;
        if cost < best {
            best = cost;
            best_h = h;
        }
    }
    Ok((best_h, best))
}

/// Within-group minimization: the kept count h_hat and the group score W.
///
/// Ties in h resolve to the smallest h.
pub fn select_h<T: Scalar>(
    y_group: &[T],
    config: &PenaltyConfig<T>,
    group: usize,
) -> Result<(usize, T)> {
    if y_group.len() != config.n() {
        return Err(Error::Dimension(format!(
            "group has {} components, config expects {}",
            y_group.len(),
            config.n()
        )));
    }
    let order = order_by_abs_desc(y_group);
    let cum = cumulative_top_squares(y_group, &order);
    argmin_h(&cum, config, group)
}

/// Between-groups minimization over the sorted scores.
///
/// Returns the selected count and the owning group indices (ascending).
/// Score ties sort by group index; count ties resolve to the smallest count.
pub fn select_groups<T: Scalar>(scores: &[T], config: &PenaltyConfig<T>) -> Result<(usize, Vec<usize>)> {
    let m = config.m();
    if scores.len() != m {
        return Err(Error::Dimension(format!(
            "{} scores for m={m} groups",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .expect("finite scores")
            .then(a.cmp(&b))
    });

    let mut best_m0 = 0;
    let mut best = config.pen_between(0)?;
    let mut prefix = T::zero();
    for m0 in 1..=m {
        prefix = prefix + scores[order[m0 - 1]];
        let cost = prefix + config.pen_between(m0)?;
        if cost < best {
            best = cost;
            best_m0 = m0;
        }
    }
    let mut selected: Vec<usize> = order[..best_m0].to_vec();
    selected.sort_unstable();
    Ok((best_m0, selected))
}

/// Run the full estimator on an observation set.
pub fn estimate<T: Scalar>(data: &ObservationSet<T>, config: &PenaltyConfig<T>) -> Result<EstimateResult<T>> {
    let scores = score_groups(data, config, None)?;
    assemble(data, config, scores)
}

/// Same output as [`estimate`] for all-binomial within-priors, computing each
/// h_hat by direct comparison against the constant threshold 2 sigma^2
/// lambda_j^2 instead of the full minimization.
pub fn hard_threshold_fast_path<T: Scalar>(
    data: &ObservationSet<T>,
    config: &PenaltyConfig<T>,
) -> Result<EstimateResult<T>> {
    let m = config.m();
    let mut thresholds = Vec::with_capacity(m);
    for j in 0..m {
        let xi = match *config.within_priors.get(j).descriptor() {
            PriorDescriptor::Binomial { xi, .. } => xi,
            ref other => {
                return Err(Error::InvalidParameter(format!(
                    "fast path needs binomial within-priors, group {j} has {other:?}"
                )))
            }
        };
        let lambda_sq = binomial_lambda_sq(xi, config.gamma, LambdaKind::Within)?;
        thresholds.push(T::of(2.0) * config.sigma * config.sigma * lambda_sq);
    }
    let scores = score_groups(data, config, Some(&thresholds))?;
    assemble(data, config, scores)
}

fn score_groups<T: Scalar>(
    data: &ObservationSet<T>,
    config: &PenaltyConfig<T>,
    hard_thresholds: Option<&[T]>,
) -> Result<Vec<GroupScore<T>>> {
    data.validate()?;
    if data.m != config.m() || data.n != config.n() {
        return Err(Error::Dimension(format!(
            "data is {}x{}, config expects {}x{}",
            data.m,
            data.n,
            config.m(),
            config.n()
        )));
    }
    (0..data.m)
        .map(|j| {
            let y = data.group(j);
            let order = order_by_abs_desc(y);
            let cum = cumulative_top_squares(y, &order);
            let (h_hat, w) = match hard_thresholds {
                None => argmin_h(&cum, config, j)?,
                Some(thresholds) => {
                    // Keep strictly super-threshold squares; at least one
                    // component is always kept, matching the h >= 1 range of
                    // the minimization and its smallest-h tie rule.
                    let t = thresholds[j];
                    let count = order.iter().filter(|&&i| y[i] * y[i] > t).count();
                    let h = count.max(1);
                    (h, -cum[h] + config.pen_within(j, h)?)
                }
            };
            Ok(GroupScore {
                group_index: j,
                h_hat,
                w,
                kept_component_ranks: order[..h_hat].to_vec(),
            })
        })
        .collect()
}

fn assemble<T: Scalar>(
    data: &ObservationSet<T>,
    config: &PenaltyConfig<T>,
    scores: Vec<GroupScore<T>>,
) -> Result<EstimateResult<T>> {
    let w: Vec<T> = scores.iter().map(|s| s.w).collect();
    let (m0_hat, selected_groups) = select_groups(&w, config)?;

    let mut estimate = MeanSet::zeros(data.m, data.n);
    for &j in &selected_groups {
        for &i in &scores[j].kept_component_ranks {
            estimate.values[j][i] = data.values[j][i];
        }
    }

    // Criterion value at the estimate: residual fit plus both penalties.
    let mut objective = config.pen_between(m0_hat)?;
    let selected: std::collections::HashSet<usize> = selected_groups.iter().copied().collect();
    for j in 0..data.m {
        let y = data.group(j);
        let mu = estimate.group(j);
        let fit: T = y
            .iter()
            .zip(mu)
            .map(|(&yi, &mi)| (yi - mi) * (yi - mi))
            .sum();
        objective = objective + fit;
        if selected.contains(&j) {
            objective = objective + config.pen_within(j, scores[j].h_hat)?;
        }
    }

    Ok(EstimateResult {
        estimate,
        selected_groups,
        m0_hat,
        scores,
        objective,
    })
}

/// Evaluate the penalized criterion at an arbitrary keep-or-kill selection.
///
/// Used by the validation oracles; kept here so the estimator and the
/// oracles price a configuration identically.
pub fn selection_objective<T: Scalar>(
    data: &ObservationSet<T>,
    config: &PenaltyConfig<T>,
    flags: &crate::model::IndicatorMatrix,
) -> Result<T> {
    if flags.m() != data.m || flags.n() != data.n {
        return Err(Error::Dimension("indicator shape mismatch".into()));
    }
    let m0 = flags.m0();
    let mut objective = config.pen_between(m0)?;
    for j in 0..data.m {
        let y = data.group(j);
        let h = flags.h(j);
        let dropped: T = y
            .iter()
            .zip(&flags.flags[j])
            .filter(|(_, &kept)| !kept)
            .map(|(&yi, _)| yi * yi)
            .sum();
        objective = objective + dropped + config.pen_within(j, h)?;
    }
    Ok(objective)
}
