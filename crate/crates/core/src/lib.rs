//! Simultaneous estimation of a sparse group of sparse Gaussian mean
//! vectors by complexity-penalized model selection, with closed-form group
//! lasso baselines, brute-force validation oracles and a Monte Carlo
//! benchmark harness.
//!
//! The core math is generic over the scalar type (see [`Scalar`]); the
//! `*64`/`*32` aliases below pin the two supported precisions. The `sim`
//! harness and the `sgmap` CLI run at f64.

pub mod error;
pub mod estimator;
pub mod lasso;
pub mod model;
pub mod oracle;
pub mod penalty;
pub mod priors;
pub mod rates;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use estimator::{estimate, hard_threshold_fast_path, select_groups, select_h};
pub use lasso::{group_lasso, oracle_tune, soft_threshold, sparse_group_lasso};
pub use model::{generate, sum_squared_error};
pub use oracle::{exhaustive_map, numeric_sgl, posterior_argmax, OracleBudget};
pub use priors::{binomial_lambda_sq, check_assumption_p, universal_xi};
pub use rates::rate_lookup;
pub use sim::{rate_sweep, reproduce_table2, reproduce_table3, run_mse};

// Concrete aliases for the default double precision.
pub type ObservationSet64 = model::ObservationSet<f64>;
pub type MeanSet64 = model::MeanSet<f64>;
pub type SimScenario64 = model::SimScenario<f64>;
pub type SparsityPrior64 = priors::SparsityPrior<f64>;
pub type PenaltyConfig64 = penalty::PenaltyConfig<f64>;
pub type EstimateResult64 = estimator::EstimateResult<f64>;
pub type LassoParams64 = lasso::LassoParams<f64>;
pub type TuneResult64 = lasso::TuneResult<f64>;

// Single precision, for callers trading accuracy for footprint.
pub type ObservationSet32 = model::ObservationSet<f32>;
pub type MeanSet32 = model::MeanSet<f32>;
pub type SparsityPrior32 = priors::SparsityPrior<f32>;
pub type PenaltyConfig32 = penalty::PenaltyConfig<f32>;
pub type EstimateResult32 = estimator::EstimateResult<f32>;
