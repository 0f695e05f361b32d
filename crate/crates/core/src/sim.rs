//! Monte Carlo replication engine: MSE benchmarks with standard errors,
//! oracle-tuned baselines, empirical rate sweeps, and CSV/JSON reporting.
//!
//! Everything here runs at f64; the generic core is instantiated once.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::estimate;
use crate::lasso::{
    group_lasso, oracle_tune, sparse_group_lasso, GridSpec, LassoParams, TuneMode, TuneResult,
};
use crate::model::{generate, sum_squared_error, MeanSet, ObservationSet, SimScenario};
use crate::penalty::{PenaltyConfig, WithinPriors};
use crate::priors::{universal_xi, SparsityPrior};
use crate::rates::{classify_regime, rate_lookup, BallKind, RateSpec};

/// Which estimator a benchmark run evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorSpec {
    /// MAP with binomial priors: xi_j from the universal threshold, xi_0 = 1/m.
    MapBinomial,
    /// MAP with truncated geometric priors (zero included between groups).
    MapGeometric { q0: f64, q: f64 },
    /// Sparse group lasso with lambda2 pinned at 2 sigma sqrt(2 ln n) and
    /// lambda1 tuned against the simulated truth.
    SglSemiOracle {
        #[serde(default = "default_tune_reps")]
        tune_reps: usize,
    },
    /// Sparse group lasso with both weights tuned against the simulated truth.
    SglFullyOracle {
        #[serde(default = "default_tune_reps")]
        tune_reps: usize,
    },
    SglFixed { lambda1: f64, lambda2: f64 },
    GroupLasso { lambda: f64 },
    Zero,
}

fn default_tune_reps() -> usize {
    200
}

impl EstimatorSpec {
    /// Compact single-token-per-field label used in CSV cells.
    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::MapBinomial => "map-binomial".into(),
            EstimatorSpec::MapGeometric { q0, q } => format!("map-geometric q0={q0} q={q}"),
            EstimatorSpec::SglSemiOracle { tune_reps } => {
                format!("sgl-semi-oracle tune_reps={tune_reps}")
            }
            EstimatorSpec::SglFullyOracle { tune_reps } => {
                format!("sgl-fully-oracle tune_reps={tune_reps}")
            }
            EstimatorSpec::SglFixed { lambda1, lambda2 } => {
                format!("sgl-fixed lambda1={lambda1} lambda2={lambda2}")
            }
            EstimatorSpec::GroupLasso { lambda } => format!("group-lasso lambda={lambda}"),
            EstimatorSpec::Zero => "zero".into(),
        }
    }

    pub fn parse_label(label: &str) -> Result<Self> {
        let mut tokens = label.split_whitespace();
        let kind = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty estimator label".into()))?;
        let mut fields = std::collections::HashMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad estimator field {tok:?}")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get_f64 = |fields: &std::collections::HashMap<String, String>, key: &str| {
            fields
                .get(key)
                .ok_or_else(|| Error::Parse(format!("estimator label missing {key}")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad {key}: {e}")))
        };
        let get_usize = |fields: &std::collections::HashMap<String, String>, key: &str| {
            fields
                .get(key)
                .ok_or_else(|| Error::Parse(format!("estimator label missing {key}")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad {key}: {e}")))
        };
        match kind {
            "map-binomial" => Ok(EstimatorSpec::MapBinomial),
            "map-geometric" => Ok(EstimatorSpec::MapGeometric {
                q0: get_f64(&fields, "q0")?,
                q: get_f64(&fields, "q")?,
            }),
            "sgl-semi-oracle" => Ok(EstimatorSpec::SglSemiOracle {
                tune_reps: get_usize(&fields, "tune_reps")?,
            }),
            "sgl-fully-oracle" => Ok(EstimatorSpec::SglFullyOracle {
                tune_reps: get_usize(&fields, "tune_reps")?,
            }),
            "sgl-fixed" => Ok(EstimatorSpec::SglFixed {
                lambda1: get_f64(&fields, "lambda1")?,
                lambda2: get_f64(&fields, "lambda2")?,
            }),
            "group-lasso" => Ok(EstimatorSpec::GroupLasso {
                lambda: get_f64(&fields, "lambda")?,
            }),
            "zero" => Ok(EstimatorSpec::Zero),
            other => Err(Error::Parse(format!("unknown estimator kind {other:?}"))),
        }
    }
}

/// An estimator with all hyperparameters pinned, ready to apply per
/// replication.
#[derive(Debug, Clone)]
pub enum ResolvedEstimator {
    Map(PenaltyConfig<f64>),
    Sgl(LassoParams<f64>),
    GroupLasso(f64),
    Zero,
}

impl ResolvedEstimator {
    pub fn apply(&self, data: &ObservationSet<f64>) -> Result<MeanSet<f64>> {
        match self {
            ResolvedEstimator::Map(config) => Ok(estimate(data, config)?.estimate),
            ResolvedEstimator::Sgl(params) => sparse_group_lasso(data, *params),
            ResolvedEstimator::GroupLasso(lambda) => group_lasso(data, *lambda),
            ResolvedEstimator::Zero => Ok(MeanSet::zeros(data.m, data.n)),
        }
    }
}

/// MAP penalty configuration for the binomial-prior variant.
pub fn binomial_map_config(m: usize, n: usize, sigma: f64, gamma: f64) -> Result<PenaltyConfig<f64>> {
    let xi_j = universal_xi(n, gamma)?;
    PenaltyConfig::new(
        gamma,
        sigma,
        SparsityPrior::binomial(m, 1.0 / m as f64)?,
        WithinPriors::Shared(SparsityPrior::binomial(n, xi_j)?),
    )
}

/// MAP penalty configuration for the geometric-prior variant.
///
/// `q0` and `q` are geometric success probabilities, so the prior mass
/// decays with ratio `1 - q` per extra component (and `1 - q0` per extra
/// group).
pub fn geometric_map_config(
    m: usize,
    n: usize,
    sigma: f64,
    gamma: f64,
    q0: f64,
    q: f64,
) -> Result<PenaltyConfig<f64>> {
    PenaltyConfig::new(
        gamma,
        sigma,
        SparsityPrior::truncated_geometric(m, 1.0 - q0, true)?,
        WithinPriors::Shared(SparsityPrior::truncated_geometric(n, 1.0 - q, false)?),
    )
}

/// Pin all hyperparameters of a spec for a given scenario, running oracle
/// tuning where the spec calls for it.
pub fn resolve_estimator(
    spec: &EstimatorSpec,
    scenario: &SimScenario<f64>,
    gamma: f64,
) -> Result<ResolvedEstimator> {
    match spec {
        EstimatorSpec::MapBinomial => Ok(ResolvedEstimator::Map(binomial_map_config(
            scenario.m, scenario.n, scenario.sigma, gamma,
        )?)),
        EstimatorSpec::MapGeometric { q0, q } => Ok(ResolvedEstimator::Map(
            geometric_map_config(scenario.m, scenario.n, scenario.sigma, gamma, *q0, *q)?,
        )),
        EstimatorSpec::SglSemiOracle { tune_reps } => {
            let tuned = oracle_tune(scenario, TuneMode::Semi, &GridSpec::default(), *tune_reps)?;
            Ok(ResolvedEstimator::Sgl(tuned.best_params))
        }
        EstimatorSpec::SglFullyOracle { tune_reps } => {
            let tuned = oracle_tune(scenario, TuneMode::Full, &GridSpec::default(), *tune_reps)?;
            Ok(ResolvedEstimator::Sgl(tuned.best_params))
        }
        EstimatorSpec::SglFixed { lambda1, lambda2 } => Ok(ResolvedEstimator::Sgl(
            LassoParams::new(*lambda1, *lambda2)?,
        )),
        EstimatorSpec::GroupLasso { lambda } => Ok(ResolvedEstimator::GroupLasso(*lambda)),
        EstimatorSpec::Zero => Ok(ResolvedEstimator::Zero),
    }
}

/// One MSE benchmark result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSEReport {
    pub estimator: EstimatorSpec,
    pub gamma: f64,
    pub mse: f64,
    pub standard_error: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Average SSE of an estimator over the scenario's replications.
///
/// Replications run in parallel on independent RNG sub-streams; the fold is
/// over the rep-indexed vector so the result is identical for any thread
/// count.
pub fn run_mse(
    scenario: &SimScenario<f64>,
    estimator: &EstimatorSpec,
    gamma: f64,
) -> Result<MSEReport> {
    scenario.validate()?;
    let resolved = resolve_estimator(estimator, scenario, gamma)?;
    let sse_by_rep: Vec<f64> = (0..scenario.replications)
        .into_par_iter()
        .map(|rep| {
            let (truth, data) = generate(scenario, rep)?;
            let fitted = resolved.apply(&data)?;
            sum_squared_error(&fitted, &truth)
        })
        .collect::<Result<_>>()?;
    let (mse, standard_error) = mean_and_se(&sse_by_rep);
    Ok(MSEReport {
        estimator: estimator.clone(),
        gamma,
        mse,
        standard_error,
        replications: scenario.replications,
        seed: scenario.seed,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let squared: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&squared) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1..=8 => values.iter().sum(),
        len => {
            let (lo, hi) = values.split_at(len / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// The benchmark setting: 10 groups of length 100, five of them zero and the
/// rest with 100, 70, 50, 20 and 5 signal components of standard deviation
/// tau = sigma sqrt(gamma).
pub fn benchmark_scenario(gamma: f64, replications: usize, seed: u64) -> SimScenario<f64> {
    SimScenario {
        m: 10,
        n: 100,
        nonzero_counts: vec![0, 0, 0, 0, 0, 100, 70, 50, 20, 5],
        tau: gamma.sqrt(),
        sigma: 1.0,
        replications,
        seed,
        resample_signal: true,
    }
}

pub const BENCHMARK_GAMMAS: [f64; 3] = [1.0, 9.0, 25.0];

/// The four estimators of the MSE benchmark table.
pub fn benchmark_estimators(tune_reps: usize) -> [EstimatorSpec; 4] {
    [
        EstimatorSpec::MapBinomial,
        EstimatorSpec::MapGeometric { q0: 0.3, q: 0.3 },
        EstimatorSpec::SglSemiOracle { tune_reps },
        EstimatorSpec::SglFullyOracle { tune_reps },
    ]
}

/// Run the full MSE benchmark: four estimators at gamma in {1, 9, 25}.
///
/// Returns 12 reports, gamma-major in table order.
pub fn reproduce_table3(reps: usize, seed: u64) -> Result<Vec<MSEReport>> {
    if reps < 100 {
        return Err(Error::InvalidParameter("table3 needs reps >= 100".into()));
    }
    let mut reports = Vec::with_capacity(12);
    for &gamma in &BENCHMARK_GAMMAS {
        let scenario = benchmark_scenario(gamma, reps, seed);
        for estimator in benchmark_estimators(reps.min(200)) {
            reports.push(run_mse(&scenario, &estimator, gamma)?);
        }
    }
    Ok(reports)
}

/// One row of the oracle-tuning table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub gamma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Fully-oracle tuning of (lambda1, lambda2) per gamma.
pub fn reproduce_table2(grid: &GridSpec, reps: usize, seed: u64) -> Result<Vec<Table2Row>> {
    BENCHMARK_GAMMAS
        .iter()
        .map(|&gamma| {
            let tuned = tune_benchmark(gamma, TuneMode::Full, grid, reps, seed)?;
            Ok(Table2Row {
                gamma,
                lambda1: tuned.best_params.lambda1,
                lambda2: tuned.best_params.lambda2,
            })
        })
        .collect()
}

/// Oracle tuning on the benchmark scenario at one gamma.
pub fn tune_benchmark(
    gamma: f64,
    mode: TuneMode,
    grid: &GridSpec,
    reps: usize,
    seed: u64,
) -> Result<TuneResult<f64>> {
    let scenario = benchmark_scenario(gamma, reps, seed);
    oracle_tune(&scenario, mode, grid, reps)
}

pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut out = String::from("gamma,lambda1,lambda2\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.gamma, r.lambda1, r.lambda2));
    }
    out
}

/// CSV layout: gamma, estimator, mse, se, reps, seed.
pub fn reports_to_csv(reports: &[MSEReport]) -> String {
    let mut out = String::from("gamma,estimator,mse,se,reps,seed\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.gamma,
            r.estimator.label(),
            r.mse,
            r.standard_error,
            r.replications,
            r.seed
        ));
    }
    out
}

pub fn reports_from_csv(text: &str) -> Result<Vec<MSEReport>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty report CSV".into()))?;
    if header.trim() != "gamma,estimator,mse,se,reps,seed" {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(Error::Parse(format!("expected 6 cells in {line:?}")));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
            };
            Ok(MSEReport {
                gamma: num(cells[0])?,
                estimator: EstimatorSpec::parse_label(cells[1])?,
                mse: num(cells[2])?,
                standard_error: num(cells[3])?,
                replications: cells[4]
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad reps: {e}")))?,
                seed: cells[5]
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad seed: {e}")))?,
            })
        })
        .collect()
}

/// One point of the empirical rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSweepConfig {
    pub m: usize,
    pub n: usize,
    pub m0: usize,
    /// Standardized within-group radius: each nonzero group carries
    /// round(eta * n) (at least 1) signal components.
    pub eta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSweepRow {
    pub m: usize,
    pub n: usize,
    pub m0: usize,
    pub eta: f64,
    pub empirical_risk: f64,
    pub theoretical_bound: f64,
    pub ratio: f64,
}

/// Default sweep grid: n in {64,...,512} x m in {16,64} x m0 in {1, m/8, m/2}.
pub fn default_rate_grid(eta: f64, sigma: f64) -> Vec<RateSweepConfig> {
    let mut grid = Vec::new();
    for &n in &[64usize, 128, 256, 512] {
        for &m in &[16usize, 64] {
            for &m0 in &[1, m / 8, m / 2] {
                grid.push(RateSweepConfig { m, n, m0, eta, sigma });
            }
        }
    }
    grid
}

const SWEEP_SIGNAL_SDS: f64 = 5.0;

/// Draw a sweep instance: m0 random groups each carrying round(eta*n) signal
/// entries of magnitude 5 sigma with random signs, plus Gaussian noise.
fn generate_sweep_instance(
    config: &RateSweepConfig,
    seed: u64,
    rep: usize,
) -> Result<(MeanSet<f64>, ObservationSet<f64>)> {
    use rand::Rng;
    let r = rep as u64;
    let mut signal_rng = ChaCha8Rng::seed_from_u64(seed);
    signal_rng.set_stream(2 * r);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(2 * r + 1);

    let k = ((config.eta * config.n as f64).round() as usize).clamp(1, config.n);
    let amplitude = SWEEP_SIGNAL_SDS * config.sigma;
    let groups = rand::seq::index::sample(&mut signal_rng, config.m, config.m0);
    let mut means = vec![vec![0.0f64; config.n]; config.m];
    for j in groups.iter() {
        let positions = rand::seq::index::sample(&mut signal_rng, config.n, k);
        for i in positions.iter() {
            means[j][i] = if signal_rng.gen::<bool>() { amplitude } else { -amplitude };
        }
    }
    let noise = rand_distr::Normal::new(0.0, config.sigma)
        .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
    let observations: Vec<Vec<f64>> = means
        .iter()
        .map(|row| row.iter().map(|&mu| mu + noise.sample(&mut noise_rng)).collect())
        .collect();
    Ok((MeanSet::new(means)?, ObservationSet::new(observations, config.sigma)?))
}

/// Risk bound the sweep compares against: the larger of the summed
/// single-vector rates and the group-selection term sigma^2 m0 ln(m/m0).
pub fn sweep_bound(config: &RateSweepConfig) -> Result<f64> {
    let regime = classify_regime(BallKind::L0, 0.0, config.eta.min(1.0), config.n)?;
    let spec = RateSpec {
        ball: BallKind::L0,
        p: 0.0,
        eta: config.eta.min(1.0),
        n: config.n,
        sigma: config.sigma,
        regime,
    };
    let per_vector = rate_lookup(&spec)?;
    let s2 = config.sigma * config.sigma;
    let between = if config.m0 == 0 {
        0.0
    } else {
        s2 * config.m0 as f64 * (config.m as f64 / config.m0 as f64).ln()
    };
    Ok((config.m0 as f64 * per_vector).max(between))
}

/// Empirical risk against the theoretical bound across a grid of settings.
pub fn rate_sweep(
    grid: &[RateSweepConfig],
    estimator: &EstimatorSpec,
    gamma: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<RateSweepRow>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be >= 1".into()));
    }
    grid.iter()
        .map(|config| {
            if config.m0 > config.m || config.m == 0 || config.n == 0 {
                return Err(Error::Dimension(format!(
                    "bad sweep config m={} n={} m0={}",
                    config.m, config.n, config.m0
                )));
            }
            // Oracle-tuned specs would need a SimScenario; the sweep only
            // makes sense for estimators with pinned hyperparameters.
            let scenario_for_resolve = SimScenario {
                m: config.m,
                n: config.n,
                nonzero_counts: vec![0; config.m],
                tau: SWEEP_SIGNAL_SDS * config.sigma,
                sigma: config.sigma,
                replications: reps,
                seed,
                resample_signal: true,
            };
            let resolved = resolve_estimator(estimator, &scenario_for_resolve, gamma)?;
            let sse_by_rep: Vec<f64> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let (truth, data) = generate_sweep_instance(config, seed, rep)?;
                    let fitted = resolved.apply(&data)?;
                    sum_squared_error(&fitted, &truth)
                })
                .collect::<Result<_>>()?;
            let empirical_risk = pairwise_sum(&sse_by_rep) / reps as f64;
            let theoretical_bound = sweep_bound(config)?;
            Ok(RateSweepRow {
                m: config.m,
                n: config.n,
                m0: config.m0,
                eta: config.eta,
                empirical_risk,
                theoretical_bound,
                ratio: empirical_risk / theoretical_bound,
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[RateSweepRow]) -> String {
    let mut out = String::from("m,n,m0,eta,empirical_risk,theoretical_bound,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.m, r.n, r.m0, r.eta, r.empirical_risk, r.theoretical_bound, r.ratio
        ));
    }
    out
}
