//! Closed-form group lasso and sparse group lasso baselines, plus oracle
//! grid-search tuning of their penalty weights against simulated truth.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{generate, MeanSet, ObservationSet, SimScenario};
use crate::scalar::Scalar;

/// Penalty weights: lambda1 on group l2 norms, lambda2 on component l1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoParams<T> {
    pub lambda1: T,
    pub lambda2: T,
}

impl<T: Scalar> LassoParams<T> {
    pub fn new(lambda1: T, lambda2: T) -> Result<Self> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self { lambda1, lambda2 })
    }
}

/// Elementwise sign(y) (|y| - t)_+.
pub fn soft_threshold<T: Scalar>(y: &[T], t: T) -> Vec<T> {
    y.iter()
        .map(|&v| {
            let mag = v.abs() - t;
            if mag > T::zero() {
                v.signum() * mag
            } else {
                T::zero()
            }
        })
        .collect()
}

fn group_shrink<T: Scalar>(group: &[T], half_lambda: T) -> Vec<T> {
    let norm = group.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm > half_lambda {
        let factor = T::one() - half_lambda / norm;
        group.iter().map(|&v| factor * v).collect()
    } else {
        vec![T::zero(); group.len()]
    }
}

/// Vector-level shrink-or-kill: scale each group by (1 - (lambda/2)/||y_j||)_+.
pub fn group_lasso<T: Scalar>(data: &ObservationSet<T>, lambda: T) -> Result<MeanSet<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter("lambda must be nonnegative".into()));
    }
    let half = lambda / T::of(2.0);
    MeanSet::new(
        data.values
            .iter()
            .map(|group| group_shrink(group, half))
            .collect(),
    )
}

/// Component soft threshold at lambda2/2, then group shrink at lambda1/2.
pub fn sparse_group_lasso<T: Scalar>(
    data: &ObservationSet<T>,
    params: LassoParams<T>,
) -> Result<MeanSet<T>> {
    LassoParams::new(params.lambda1, params.lambda2)?;
    let half1 = params.lambda1 / T::of(2.0);
    let half2 = params.lambda2 / T::of(2.0);
    MeanSet::new(
        data.values
            .iter()
            .map(|group| {
                let soft = soft_threshold(group, half2);
                group_shrink(&soft, half1)
            })
            .collect(),
    )
}

/// Which penalty weights the oracle search moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneMode {
    /// lambda2 pinned at the conservative 2 sigma sqrt(2 ln n); only lambda1
    /// is searched.
    Semi,
    /// Two-dimensional search over (lambda1, lambda2).
    Full,
}

/// Inclusive arithmetic progression start, start+step, ..., <= stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RangeSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) || start < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bad range [{start}, {stop}] step {step}"
            )));
        }
        Ok(Self { start, stop, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 0.5).floor() as usize + 1;
        (0..count).map(|i| self.start + self.step * i as f64).collect()
    }
}

/// Search grid for the oracle tuner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambda1: RangeSpec,
    pub lambda2: RangeSpec,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lambda1: RangeSpec { start: 0.0, stop: 20.0, step: 0.1 },
            lambda2: RangeSpec { start: 0.0, stop: 8.0, step: 0.1 },
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint<T> {
    pub params: LassoParams<T>,
    pub mse: T,
    pub standard_error: T,
}

/// Outcome of the oracle grid search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneResult<T> {
    pub best_params: LassoParams<T>,
    pub grid: Vec<GridPoint<T>>,
    pub mode: TuneMode,
}

impl<T: Scalar> TuneResult<T> {
    /// CSV of the full grid surface: lambda1,lambda2,mse,se.
    pub fn grid_csv(&self) -> String {
        let mut out = String::from("lambda1,lambda2,mse,se\n");
        for p in &self.grid {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.params.lambda1, p.params.lambda2, p.mse, p.standard_error
            ));
        }
        out
    }
}

/// The fixed lambda2 used by semi-oracle tuning.
pub fn universal_soft_lambda2<T: Scalar>(n: usize, sigma: T) -> T {
    T::of(2.0) * sigma * (T::of(2.0) * T::of_usize(n).ln()).sqrt()
}

/// Grid-search (lambda1, lambda2) by simulated true MSE.
///
/// Every grid point is scored on the same replications (common random
/// numbers), so the result is deterministic in (scenario seed, grid).
/// The per-replication SSE of the shrink factor is evaluated through the
/// identity ||c v - mu||^2 = c^2 ||v||^2 - 2 c <v, mu> + ||mu||^2, so the
/// lambda1 sweep costs O(m) per point instead of O(mn).
pub fn oracle_tune<T>(
    scenario: &SimScenario<T>,
    mode: TuneMode,
    grid: &GridSpec,
    replications_per_point: usize,
) -> Result<TuneResult<T>>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
{
    scenario.validate()?;
    if replications_per_point == 0 {
        return Err(Error::InvalidParameter("replications_per_point must be >= 1".into()));
    }
    let lambda1s = grid.lambda1.values();
    let lambda2s = match mode {
        TuneMode::Semi => vec![universal_soft_lambda2(scenario.n, scenario.sigma).as_f64()],
        TuneMode::Full => grid.lambda2.values(),
    };
    if lambda1s.is_empty() || lambda2s.is_empty() {
        return Err(Error::InvalidParameter("empty tuning grid".into()));
    }

    let points = lambda1s.len() * lambda2s.len();
    let mut sum = vec![0.0f64; points];
    let mut sum_sq = vec![0.0f64; points];

    for rep in 0..replications_per_point {
        let (truth, obs) = generate(scenario, rep)?;
        // One SSE row per replication, filled in parallel over lambda2.
        let mut row = vec![0.0f64; points];
        row.par_chunks_mut(lambda1s.len())
            .zip(lambda2s.par_iter())
            .for_each(|(chunk, &lambda2)| {
                sweep_lambda1(&obs, &truth, lambda2, &lambda1s, chunk);
            });
        for (p, sse) in row.iter().enumerate() {
            sum[p] += sse;
            sum_sq[p] += sse * sse;
        }
    }

    let reps = replications_per_point as f64;
    let mut grid_points = Vec::with_capacity(points);
    let mut best: Option<(f64, usize)> = None;
    for (i2, &lambda2) in lambda2s.iter().enumerate() {
        for (i1, &lambda1) in lambda1s.iter().enumerate() {
            let p = i2 * lambda1s.len() + i1;
            let mse = sum[p] / reps;
            let var = if replications_per_point > 1 {
                ((sum_sq[p] - sum[p] * sum[p] / reps) / (reps - 1.0)).max(0.0)
            } else {
                0.0
            };
            let se = (var / reps).sqrt();
            grid_points.push(GridPoint {
                params: LassoParams { lambda1: T::of(lambda1), lambda2: T::of(lambda2) },
                mse: T::of(mse),
                standard_error: T::of(se),
            });
            // Ties resolve to the smallest lambda1, then lambda2: scan
            // lambda1-major, strictly-less replacement.
            let key = grid_points.len() - 1;
            let better = match best {
                None => true,
                Some((best_mse, best_key)) => {
                    mse < best_mse
                        || (mse == best_mse
                            && order_key(&grid_points, key) < order_key(&grid_points, best_key))
                }
            };
            if better {
                best = Some((mse, key));
            }
        }
    }
    let best_key = best.expect("nonempty grid").1;
    Ok(TuneResult {
        best_params: grid_points[best_key].params,
        grid: grid_points,
        mode,
    })
}

fn order_key<T: Scalar>(points: &[GridPoint<T>], idx: usize) -> (f64, f64) {
    let p = points[idx].params;
    (p.lambda1.as_f64(), p.lambda2.as_f64())
}

fn sweep_lambda1<T: Scalar>(
    obs: &ObservationSet<T>,
    truth: &MeanSet<T>,
    lambda2: f64,
    lambda1s: &[f64],
    out: &mut [f64],
) {
    let half2 = T::of(lambda2 / 2.0);
    // Per group: ||soft||^2, <soft, mu>, ||mu||^2.
    let summaries: Vec<(f64, f64, f64)> = obs
        .values
        .iter()
        .zip(&truth.values)
        .map(|(y, mu)| {
            let soft = soft_threshold(y, half2);
            let a: T = soft.iter().map(|&v| v * v).sum();
            let b: T = soft.iter().zip(mu).map(|(&v, &m)| v * m).sum();
            let d: T = mu.iter().map(|&m| m * m).sum();
            (a.as_f64(), b.as_f64(), d.as_f64())
        })
        .collect();
    for (slot, &lambda1) in out.iter_mut().zip(lambda1s) {
        let half1 = lambda1 / 2.0;
        let mut sse = 0.0;
        for &(a, b, d) in &summaries {
            let norm = a.sqrt();
            if norm > half1 {
                let c = 1.0 - half1 / norm;
                sse += c * c * a - 2.0 * c * b + d;
            } else {
                sse += d;
            }
        }
        *slot = sse;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn obs(values: Vec<Vec<f64>>) -> ObservationSet<f64> {
        ObservationSet::new(values, 1.0).unwrap()
    }

    #[test]
    fn soft_threshold_definition() {
        assert_eq!(soft_threshold(&[3.0, -2.0, 0.5], 1.0), vec![2.0, -1.0, 0.0]);
        assert_eq!(soft_threshold(&[3.0, -2.0, 0.5], 0.0), vec![3.0, -2.0, 0.5]);
        assert_eq!(soft_threshold(&[1.0, -2.5], 2.5), vec![0.0, 0.0]);
    }

    #[test]
    fn group_lasso_shrink_or_kill() {
        let data = obs(vec![vec![3.0, 4.0]]);
        let result = group_lasso(&data, 2.0).unwrap();
        assert_relative_eq!(result.values[0][0], 2.4, epsilon = 1e-12);
        assert_relative_eq!(result.values[0][1], 3.2, epsilon = 1e-12);

        let identity = group_lasso(&data, 0.0).unwrap();
        assert_eq!(identity.values, data.values);

        let killed = group_lasso(&data, 10.0).unwrap();
        assert_eq!(killed.values[0], vec![0.0, 0.0]);
    }

    #[test]
    fn group_lasso_supports_are_all_or_nothing() {
        let data = obs(vec![vec![1.0, -0.5, 2.0], vec![0.3, 0.1, -0.2]]);
        for lambda in [0.5, 1.0, 2.0, 5.0] {
            let result = group_lasso(&data, lambda).unwrap();
            for group in &result.values {
                let nonzero = group.iter().filter(|v| **v != 0.0).count();
                assert!(nonzero == 0 || nonzero == group.len());
            }
        }
    }

    #[test]
    fn sparse_group_lasso_closed_form() {
        let data = obs(vec![vec![3.0, 1.0]]);
        let params = LassoParams { lambda1: 2.0, lambda2: 2.0 };
        let result = sparse_group_lasso(&data, params).unwrap();
        assert_relative_eq!(result.values[0][0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(result.values[0][1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sparse_group_lasso_reductions() {
        let data = obs(vec![vec![1.5, -2.0], vec![0.2, 0.4]]);
        let id = sparse_group_lasso(&data, LassoParams { lambda1: 0.0, lambda2: 0.0 }).unwrap();
        assert_eq!(id.values, data.values);

        let gl = group_lasso(&data, 1.3).unwrap();
        let sgl = sparse_group_lasso(&data, LassoParams { lambda1: 1.3, lambda2: 0.0 }).unwrap();
        assert_eq!(gl.values, sgl.values);
    }

    #[test]
    fn increasing_lambda1_never_grows_group_norms() {
        let data = obs(vec![vec![2.0, -1.0, 0.5], vec![4.0, 3.0, -2.0]]);
        let norms = |ms: &MeanSet<f64>| -> Vec<f64> {
            ms.values
                .iter()
                .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect()
        };
        let mut prev = norms(&sparse_group_lasso(&data, LassoParams { lambda1: 0.0, lambda2: 0.7 }).unwrap());
        for l1 in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let cur = norms(&sparse_group_lasso(&data, LassoParams { lambda1: l1, lambda2: 0.7 }).unwrap());
            for (p, c) in prev.iter().zip(&cur) {
                assert!(*c <= p + 1e-12);
            }
            prev = cur;
        }
    }

    #[test]
    fn range_spec_values() {
        let r = RangeSpec::new(0.0, 1.0, 0.25).unwrap();
        assert_eq!(r.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(RangeSpec::new(1.0, 0.5, 0.1).is_err());
    }

    fn tiny_scenario() -> SimScenario<f64> {
        SimScenario {
            m: 3,
            n: 8,
            nonzero_counts: vec![0, 4, 8],
            tau: 2.0,
            sigma: 1.0,
            replications: 1,
            seed: 99,
            resample_signal: true,
        }
    }

    #[test]
    fn oracle_tune_degenerate_grid_returns_the_point() {
        let grid = GridSpec {
            lambda1: RangeSpec::new(3.0, 3.0, 1.0).unwrap(),
            lambda2: RangeSpec::new(1.0, 1.0, 1.0).unwrap(),
        };
        let result = oracle_tune(&tiny_scenario(), TuneMode::Full, &grid, 50).unwrap();
        assert_eq!(result.grid.len(), 1);
        assert_eq!(result.best_params.lambda1, 3.0);
        assert_eq!(result.best_params.lambda2, 1.0);
        assert!(result.grid[0].mse > 0.0);
    }

    #[test]
    fn oracle_tune_is_deterministic() {
        let grid = GridSpec {
            lambda1: RangeSpec::new(0.0, 4.0, 0.5).unwrap(),
            lambda2: RangeSpec::new(0.0, 2.0, 0.5).unwrap(),
        };
        let a = oracle_tune(&tiny_scenario(), TuneMode::Full, &grid, 30).unwrap();
        let b = oracle_tune(&tiny_scenario(), TuneMode::Full, &grid, 30).unwrap();
        assert_eq!(a.best_params, b.best_params);
        for (x, y) in a.grid.iter().zip(&b.grid) {
            assert_eq!(x.mse, y.mse);
        }
    }

    #[test]
    fn oracle_tune_sweep_matches_direct_evaluation() {
        // The O(m)-per-point shortcut must agree with literally running the
        // estimator at each grid point.
        let scenario = tiny_scenario();
        let grid = GridSpec {
            lambda1: RangeSpec::new(0.0, 3.0, 1.0).unwrap(),
            lambda2: RangeSpec::new(0.0, 2.0, 1.0).unwrap(),
        };
        let reps = 10;
        let result = oracle_tune(&scenario, TuneMode::Full, &grid, reps).unwrap();
        for point in &result.grid {
            let mut total = 0.0;
            for rep in 0..reps {
                let (truth, data) = generate(&scenario, rep).unwrap();
                let est = sparse_group_lasso(&data, point.params).unwrap();
                total += crate::model::sum_squared_error(&est, &truth).unwrap();
            }
            assert_relative_eq!(point.mse, total / reps as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn semi_mode_pins_lambda2() {
        let scenario = tiny_scenario();
        let grid = GridSpec {
            lambda1: RangeSpec::new(0.0, 2.0, 1.0).unwrap(),
            lambda2: RangeSpec::new(0.0, 8.0, 0.1).unwrap(),
        };
        let result = oracle_tune(&scenario, TuneMode::Semi, &grid, 5).unwrap();
        let expected = universal_soft_lambda2(scenario.n, scenario.sigma);
        assert_eq!(result.grid.len(), 3);
        for p in &result.grid {
            assert_relative_eq!(p.params.lambda2, expected, epsilon = 1e-12);
        }
    }
}
