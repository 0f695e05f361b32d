//! Complexity penalties induced by the sparsity priors.
//!
//! For a group keeping h components the within-penalty is
//! `2 sigma^2 (1 + 1/gamma) [ -ln pi_j(h) + ln C(n,h) + (h/2) ln(1+gamma) ]`
//! with the convention that keeping nothing costs nothing; the
//! between-penalty for selecting m0 groups is
//! `2 sigma^2 (1 + 1/gamma) [ -ln pi_0(m0) + ln C(m,m0) ]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::SparsityPrior;
use crate::scalar::{ln_choose, Scalar};

/// Within-group priors: one shared pmf or one per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub enum WithinPriors<T> {
    Shared(SparsityPrior<T>),
    PerGroup(Vec<SparsityPrior<T>>),
}

impl<T: Scalar> WithinPriors<T> {
    pub fn get(&self, group: usize) -> &SparsityPrior<T> {
        match self {
            WithinPriors::Shared(p) => p,
            WithinPriors::PerGroup(ps) => &ps[group],
        }
    }

    pub fn iter(&self, m: usize) -> impl Iterator<Item = &SparsityPrior<T>> {
        (0..m).map(move |j| self.get(j))
    }
}

/// Everything needed to evaluate the penalties: gamma, the noise level and
/// the prior pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct PenaltyConfig<T> {
    pub gamma: T,
    pub sigma: T,
    pub between_prior: SparsityPrior<T>,
    pub within_priors: WithinPriors<T>,
}

impl<T: Scalar> PenaltyConfig<T> {
    pub fn new(
        gamma: T,
        sigma: T,
        between_prior: SparsityPrior<T>,
        within_priors: WithinPriors<T>,
    ) -> Result<Self> {
        let config = Self { gamma, sigma, between_prior, within_priors };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be positive".into()));
        }
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        if self.between_prior.support_min() != 0 {
            return Err(Error::InvalidParameter(
                "between-groups prior must have positive mass at 0".into(),
            ));
        }
        let m = self.m();
        let n = self.n();
        if let WithinPriors::PerGroup(ps) = &self.within_priors {
            if ps.len() != m {
                return Err(Error::Dimension(format!(
                    "{} within-priors for m={m} groups",
                    ps.len()
                )));
            }
        }
        for prior in self.within_priors.iter(m) {
            if prior.support_max() != n {
                return Err(Error::Dimension(format!(
                    "within-prior support max {} does not match n={n}",
                    prior.support_max()
                )));
            }
        }
        Ok(())
    }

    /// Number of groups, read off the between-groups prior support.
    pub fn m(&self) -> usize {
        self.between_prior.support_max()
    }

    /// Group length, read off the within-group prior support.
    pub fn n(&self) -> usize {
        self.within_priors.get(0).support_max()
    }

    /// The common factor 2 sigma^2 (1 + 1/gamma).
    pub fn penalty_factor(&self) -> T {
        T::of(2.0) * self.sigma * self.sigma * (T::one() + self.gamma.recip())
    }

    /// Penalty for keeping h components in the given group.
    pub fn pen_within(&self, group: usize, h: usize) -> Result<T> {
        let n = self.n();
        if h > n {
            return Err(Error::Dimension(format!("h={h} exceeds n={n}")));
        }
        if h == 0 {
            return Ok(T::zero());
        }
        let prior = self.within_priors.get(group);
        let half_h = T::of_usize(h) / T::of(2.0);
        Ok(self.penalty_factor()
            * (-prior.log_mass(h) + ln_choose::<T>(n, h) + half_h * (T::one() + self.gamma).ln()))
    }

    /// Penalty for declaring m0 groups nonzero.
    pub fn pen_between(&self, m0: usize) -> Result<T> {
        let m = self.m();
        if m0 > m {
            return Err(Error::Dimension(format!("m0={m0} exceeds m={m}")));
        }
        Ok(self.penalty_factor() * (-self.between_prior.log_mass(m0) + ln_choose::<T>(m, m0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn config(
        gamma: f64,
        sigma: f64,
        between: SparsityPrior<f64>,
        within: SparsityPrior<f64>,
    ) -> PenaltyConfig<f64> {
        PenaltyConfig::new(gamma, sigma, between, WithinPriors::Shared(within)).unwrap()
    }

    #[test]
    fn pen_within_zero_costs_nothing() {
        let c = config(
            1.0,
            1.0,
            SparsityPrior::binomial(3, 0.25).unwrap(),
            SparsityPrior::binomial(4, 0.5).unwrap(),
        );
        assert_eq!(c.pen_within(0, 0).unwrap(), 0.0);
        assert_eq!(c.pen_within(2, 0).unwrap(), 0.0);
    }

    #[test]
    fn pen_within_binomial_half() {
        // n=4, h=2, sigma=1, gamma=1, binomial xi=0.5:
        // pi(h)^{-1} C(n,h) (1+gamma)^{h/2} = 2^n * 2 so the penalty is
        // 4 * ln 32 = 20 ln 2.
        let c = config(
            1.0,
            1.0,
            SparsityPrior::binomial(3, 0.25).unwrap(),
            SparsityPrior::binomial(4, 0.5).unwrap(),
        );
        assert_relative_eq!(c.pen_within(0, 2).unwrap(), 20.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn pen_within_geometric_direct_mass_oracle() {
        // geometric q=0.5 on {1,2}: pi(1)=2/3; penalty is 4 ln(3 sqrt(2)).
        let c = config(
            1.0,
            1.0,
            SparsityPrior::binomial(3, 0.25).unwrap(),
            SparsityPrior::truncated_geometric(2, 0.5, false).unwrap(),
        );
        let expected = 4.0 * (1.5 * 2.0 * 2f64.sqrt()).ln();
        assert_relative_eq!(c.pen_within(0, 1).unwrap(), expected, epsilon = 1e-12);
        assert!((expected - 5.7807).abs() < 1e-4);
    }

    #[test]
    fn pen_between_binomial_is_linear_in_m0() {
        let m = 6;
        let xi0 = 0.2;
        let c = config(
            1.0,
            1.0,
            SparsityPrior::binomial(m, xi0).unwrap(),
            SparsityPrior::binomial(4, 0.5).unwrap(),
        );
        let factor = c.penalty_factor();
        let constant = factor * (m as f64) * (1.0 / (1.0 - xi0)).ln();
        let slope = factor * ((1.0 - xi0) / xi0).ln();
        for m0 in 0..=m {
            assert_relative_eq!(
                c.pen_between(m0).unwrap(),
                constant + slope * m0 as f64,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn pen_between_uniform() {
        // uniform on {0..3}, m=3, m0=1 gives 4 ln(4 * 3).
        let c = config(
            1.0,
            1.0,
            SparsityPrior::uniform(3).unwrap(),
            SparsityPrior::binomial(4, 0.5).unwrap(),
        );
        assert_relative_eq!(c.pen_between(1).unwrap(), 4.0 * 12f64.ln(), epsilon = 1e-12);
        assert!((c.pen_between(1).unwrap() - 9.9396).abs() < 1e-4);
    }

    #[test]
    fn pen_between_zero_vanishes_as_mass_at_zero_grows() {
        let mut last = f64::INFINITY;
        for &eps in &[0.3, 0.1, 0.01, 1e-4] {
            let c = config(
                1.0,
                1.0,
                SparsityPrior::custom(vec![1.0 - eps, eps / 2.0, eps / 2.0], 0).unwrap(),
                SparsityPrior::binomial(4, 0.5).unwrap(),
            );
            let pen0 = c.pen_between(0).unwrap();
            assert!(pen0 >= 0.0 && pen0 < last);
            last = pen0;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn out_of_range_arguments_error() {
        let c = config(
            1.0,
            1.0,
            SparsityPrior::binomial(3, 0.25).unwrap(),
            SparsityPrior::binomial(4, 0.5).unwrap(),
        );
        assert!(c.pen_within(0, 5).is_err());
        assert!(c.pen_between(4).is_err());
    }

    #[test]
    fn within_prior_without_zero_mass_is_accepted() {
        // The pen_within(0)=0 convention lives here, not in the prior.
        let c = config(
            1.0,
            1.0,
            SparsityPrior::binomial(3, 0.25).unwrap(),
            SparsityPrior::truncated_geometric(4, 0.3, false).unwrap(),
        );
        assert_eq!(c.pen_within(1, 0).unwrap(), 0.0);
        assert!(c.pen_within(1, 1).unwrap() > 0.0);
    }

    #[test]
    fn between_prior_must_include_zero() {
        let r = PenaltyConfig::new(
            1.0,
            1.0,
            SparsityPrior::truncated_geometric(3, 0.3, false).unwrap(),
            WithinPriors::Shared(SparsityPrior::binomial(4, 0.5).unwrap()),
        );
        assert!(r.is_err());
    }
}
