//! Gaussian sequence model data types, synthetic data generation and risk
//! metrics.
//!
//! The model is `y_j = mu_j + eps_j` for `m` independent groups of length
//! `n`, with i.i.d. `N(0, sigma^2)` noise on every component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Observed data: an m x n matrix of reals plus the known noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet<T> {
    pub m: usize,
    pub n: usize,
    pub sigma: T,
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> ObservationSet<T> {
    pub fn new(values: Vec<Vec<T>>, sigma: T) -> Result<Self> {
        let (m, n) = matrix_dims(&values)?;
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { m, n, sigma, values })
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = matrix_dims(&self.values)?;
        if m != self.m || n != self.n {
            return Err(Error::Dimension(format!(
                "declared {}x{} but values are {m}x{n}",
                self.m, self.n
            )));
        }
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        Ok(())
    }

    pub fn group(&self, j: usize) -> &[T] {
        &self.values[j]
    }

    /// CSV form: a `n=<n> sigma=<sigma>` header line, then one row per group.
    pub fn to_csv(&self) -> String {
        let mut out = format!("n={} sigma={}\n", self.n, self.sigma);
        push_csv_rows(&mut out, &self.values);
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV input".into()))?;
        let sigma_str = parse_header_field(header, "sigma")?;
        let sigma = sigma_str
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad sigma in header: {e}")))?;
        let values = parse_csv_rows(lines)?;
        Self::new(values, T::of(sigma))
    }
}

/// True or estimated means, same layout as the paired [`ObservationSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSet<T> {
    pub m: usize,
    pub n: usize,
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> MeanSet<T> {
    pub fn new(values: Vec<Vec<T>>) -> Result<Self> {
        let (m, n) = matrix_dims(&values)?;
        Ok(Self { m, n, values })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            values: vec![vec![T::zero(); n]; m],
        }
    }

    pub fn group(&self, j: usize) -> &[T] {
        &self.values[j]
    }

    pub fn count_nonzero(&self) -> usize {
        self.values
            .iter()
            .flatten()
            .filter(|v| **v != T::zero())
            .count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        push_csv_rows(&mut out, &self.values);
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV input".into()))?;
        Self::new(parse_csv_rows(lines)?)
    }
}

/// Binary selection matrix D: `flags[j][i]` marks component i of group j as
/// significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorMatrix {
    pub flags: Vec<Vec<bool>>,
}

impl IndicatorMatrix {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            flags: vec![vec![false; n]; m],
        }
    }

    pub fn m(&self) -> usize {
        self.flags.len()
    }

    pub fn n(&self) -> usize {
        self.flags.first().map_or(0, |r| r.len())
    }

    /// Number of selected components in group j.
    pub fn h(&self, j: usize) -> usize {
        self.flags[j].iter().filter(|&&b| b).count()
    }

    /// Number of groups with at least one selected component.
    pub fn m0(&self) -> usize {
        (0..self.m()).filter(|&j| self.h(j) > 0).count()
    }
}

/// Recipe for one synthetic benchmark setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario<T> {
    pub m: usize,
    pub n: usize,
    pub nonzero_counts: Vec<usize>,
    pub tau: T,
    pub sigma: T,
    pub replications: usize,
    pub seed: u64,
    /// When false, the signal is drawn once (from the seed alone) and only
    /// the noise varies across replications.
    #[serde(default = "default_true")]
    pub resample_signal: bool,
}

fn default_true() -> bool {
    true
}

impl<T: Scalar> SimScenario<T> {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Dimension("m and n must be at least 1".into()));
        }
        if self.nonzero_counts.len() != self.m {
            return Err(Error::Dimension(format!(
                "nonzero_counts has {} entries for m={}",
                self.nonzero_counts.len(),
                self.m
            )));
        }
        if let Some(&k) = self.nonzero_counts.iter().find(|&&k| k > self.n) {
            return Err(Error::Dimension(format!(
                "nonzero count {k} exceeds group length {}",
                self.n
            )));
        }
        if !(self.tau >= T::zero()) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter("tau must be nonnegative".into()));
        }
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        Ok(())
    }
}

// Sub-stream layout: stream 2r carries the signal draw of replication r and
// stream 2r+1 its noise, so fixing the signal just pins the signal stream to 0.
fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw the true means and observations for one replication.
///
/// Deterministic in `(scenario, replication_index)`; replications use
/// independent RNG sub-streams so they can be generated in any order or in
/// parallel.
pub fn generate<T>(scenario: &SimScenario<T>, replication_index: usize) -> Result<(MeanSet<T>, ObservationSet<T>)>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
{
    scenario.validate()?;
    let r = replication_index as u64;
    let signal_stream = if scenario.resample_signal { 2 * r } else { 0 };
    let mut signal_rng = substream(scenario.seed, signal_stream);
    let mut noise_rng = substream(scenario.seed, 2 * r + 1);

    let signal = Normal::new(T::zero(), scenario.tau)
        .map_err(|e| Error::InvalidParameter(format!("signal distribution: {e}")))?;
    let noise = Normal::new(T::zero(), scenario.sigma)
        .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;

    let mut means = vec![vec![T::zero(); scenario.n]; scenario.m];
    for (j, row) in means.iter_mut().enumerate() {
        let k = scenario.nonzero_counts[j];
        let positions = rand::seq::index::sample(&mut signal_rng, scenario.n, k);
        for i in positions.iter() {
            row[i] = signal.sample(&mut signal_rng);
        }
    }

    let observations = means
        .iter()
        .map(|row| row.iter().map(|&mu| mu + noise.sample(&mut noise_rng)).collect())
        .collect();

    Ok((
        MeanSet::new(means)?,
        ObservationSet::new(observations, scenario.sigma)?,
    ))
}

/// Total squared error between two mean sets.
pub fn sum_squared_error<T: Scalar>(estimate: &MeanSet<T>, truth: &MeanSet<T>) -> Result<T> {
    if estimate.m != truth.m || estimate.n != truth.n {
        return Err(Error::Dimension(format!(
            "estimate is {}x{}, truth is {}x{}",
            estimate.m, estimate.n, truth.m, truth.n
        )));
    }
    Ok(estimate
        .values
        .iter()
        .zip(&truth.values)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)))
        .sum())
}

fn matrix_dims<T: Scalar>(values: &[Vec<T>]) -> Result<(usize, usize)> {
    let m = values.len();
    if m == 0 {
        return Err(Error::Dimension("matrix must have at least one row".into()));
    }
    let n = values[0].len();
    if n == 0 {
        return Err(Error::Dimension("matrix must have at least one column".into()));
    }
    if values.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("ragged rows in matrix".into()));
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite matrix entry".into()));
    }
    Ok((m, n))
}

fn push_csv_rows<T: Scalar>(out: &mut String, values: &[Vec<T>]) {
    for row in values {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
}

fn parse_csv_rows<'a, T, I>(lines: I) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    I: Iterator<Item = &'a str>,
{
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split(',')
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map(T::of)
                        .map_err(|e| Error::Parse(format!("bad cell {cell:?}: {e}")))
                })
                .collect()
        })
        .collect()
}

// The CSV readers parse into f64 and convert; a generic FromStr bound buys
// nothing for the two scalar types in use.
fn parse_header_field(header: &str, key: &str) -> Result<String> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .map(str::to_owned)
        .ok_or_else(|| Error::Parse(format!("header {header:?} is missing {key}=")))
}

impl ObservationSet<f64> {
    pub fn from_json(text: &str) -> Result<Self> {
        let set: Self = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test_scenario() -> SimScenario<f64> {
        SimScenario {
            m: 10,
            n: 100,
            nonzero_counts: vec![0, 0, 0, 0, 0, 100, 70, 50, 20, 5],
            tau: 3.0,
            sigma: 1.0,
            replications: 1,
            seed: 17,
            resample_signal: true,
        }
    }

    #[test]
    fn generate_places_expected_nonzero_counts() {
        let (means, obs) = generate(&test_scenario(), 0).unwrap();
        assert_eq!(means.count_nonzero(), 245);
        let nonzero_groups = (0..10).filter(|&j| means.group(j).iter().any(|&v| v != 0.0)).count();
        assert_eq!(nonzero_groups, 5);
        assert_eq!(obs.m, 10);
        assert_eq!(obs.n, 100);
    }

    #[test]
    fn generate_zero_counts_gives_pure_noise() {
        let mut sc = test_scenario();
        sc.nonzero_counts = vec![0; 10];
        let (means, obs) = generate(&sc, 3).unwrap();
        assert_eq!(means.count_nonzero(), 0);
        assert!(obs.values.iter().flatten().any(|&v| v != 0.0));
    }

    #[test]
    fn generate_is_deterministic() {
        let sc = test_scenario();
        let a = generate(&sc, 5).unwrap();
        let b = generate(&sc, 5).unwrap();
        assert_eq!(a.0.values, b.0.values);
        assert_eq!(a.1.values, b.1.values);
        let c = generate(&sc, 6).unwrap();
        assert_ne!(a.1.values, c.1.values);
    }

    #[test]
    fn fixed_signal_shares_means_across_replications() {
        let mut sc = test_scenario();
        sc.resample_signal = false;
        let (m0, _) = generate(&sc, 0).unwrap();
        let (m1, o1) = generate(&sc, 1).unwrap();
        assert_eq!(m0.values, m1.values);
        let (_, o2) = generate(&sc, 2).unwrap();
        assert_ne!(o1.values, o2.values);
    }

    #[test]
    fn generate_rejects_bad_counts() {
        let mut sc = test_scenario();
        sc.nonzero_counts[0] = 101;
        assert!(matches!(generate(&sc, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn sse_identity_and_unit_offsets() {
        let a = MeanSet::new(vec![vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 4.0]]).unwrap();
        assert_eq!(sum_squared_error(&a, &a).unwrap(), 0.0);
        let b = MeanSet::new(a.values.iter().map(|r| r.iter().map(|v| v + 1.0).collect()).collect()).unwrap();
        assert_relative_eq!(sum_squared_error(&b, &a).unwrap(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn sse_matches_elementwise_oracle() {
        let a = MeanSet::new(vec![vec![0.3, -1.7], vec![2.4, 0.9]]).unwrap();
        let b = MeanSet::new(vec![vec![-0.2, 0.4], vec![1.1, -3.0]]).unwrap();
        let mut expected = 0.0;
        for j in 0..2 {
            for i in 0..2 {
                let d = a.values[j][i] - b.values[j][i];
                expected += d * d;
            }
        }
        assert_relative_eq!(sum_squared_error(&a, &b).unwrap(), expected, epsilon = 1e-12);
        assert_relative_eq!(
            sum_squared_error(&b, &a).unwrap(),
            sum_squared_error(&a, &b).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn sse_rejects_dimension_mismatch() {
        let a = MeanSet::<f64>::zeros(2, 3);
        let b = MeanSet::zeros(2, 4);
        assert!(sum_squared_error(&a, &b).is_err());
    }

    #[test]
    fn noise_moments_close_to_sigma_squared() {
        let mut sc = test_scenario();
        sc.nonzero_counts = vec![0; 10];
        sc.sigma = 2.0;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for r in 0..50 {
            let (_, obs) = generate(&sc, r).unwrap();
            for v in obs.values.iter().flatten() {
                sum += v;
                sum_sq += v * v;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let var = sum_sq / count as f64 - mean * mean;
        assert!((var - 4.0).abs() < 0.05 * 4.0, "empirical variance {var}");
    }

    #[test]
    fn observation_csv_round_trip() {
        let obs = ObservationSet::new(vec![vec![1.5, -0.25], vec![0.125, 3.0]], 0.5).unwrap();
        let parsed = ObservationSet::<f64>::from_csv(&obs.to_csv()).unwrap();
        assert_eq!(obs, parsed);
    }

    #[test]
    fn mean_csv_round_trip() {
        let means = MeanSet::new(vec![vec![0.1, 0.0, -2.75]]).unwrap();
        let parsed = MeanSet::<f64>::from_csv(&means.to_csv()).unwrap();
        assert_eq!(means, parsed);
    }

    #[test]
    fn observation_json_shape() {
        let obs = ObservationSet::new(vec![vec![1.0, 2.0]], 1.0).unwrap();
        let json = serde_json::to_value(&obs).unwrap();
        assert_eq!(json["m"], 1);
        assert_eq!(json["n"], 2);
        assert_eq!(json["sigma"], 1.0);
        assert_eq!(json["values"][0][1], 2.0);
    }

    #[test]
    fn indicator_counts() {
        let d = IndicatorMatrix {
            flags: vec![vec![true, false, true], vec![false, false, false]],
        };
        assert_eq!(d.h(0), 2);
        assert_eq!(d.h(1), 0);
        assert_eq!(d.m0(), 1);
    }
}
