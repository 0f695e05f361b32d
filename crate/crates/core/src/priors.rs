//! Sparsity priors on counts of nonzero elements, their standard
//! constructions, and the prior-tail growth check used by the risk bounds.
//!
//! A prior here is a pmf on `{support_min, ..., support_max}` held in
//! log-space so that group lengths of 1e4 and beyond stay representable.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{ln_choose, log_sum_exp, Scalar};

/// Construction record for a [`SparsityPrior`]; doubles as its JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorDescriptor<T> {
    Binomial {
        #[serde(rename = "K")]
        k: usize,
        xi: T,
    },
    Geometric {
        #[serde(rename = "K")]
        k: usize,
        q: T,
        include_zero: bool,
    },
    Uniform {
        #[serde(rename = "K")]
        k: usize,
    },
    Custom {
        #[serde(rename = "K")]
        k: usize,
        support_min: usize,
        masses: Vec<T>,
    },
}

/// A normalized pmf on a contiguous integer support, with log-mass access.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPrior<T> {
    support_max: usize,
    support_min: usize,
    log_mass: Vec<T>,
    descriptor: PriorDescriptor<T>,
}

impl<T: Scalar> SparsityPrior<T> {
    /// Binomial B(K, xi) on {0, ..., K}.
    pub fn binomial(k_max: usize, xi: T) -> Result<Self> {
        if !(xi > T::zero() && xi < T::one()) {
            return Err(Error::InvalidParameter(format!("xi must lie in (0,1), got {xi}")));
        }
        let log_xi = xi.ln();
        let log_1mxi = (T::one() - xi).ln();
        let log_mass: Vec<T> = (0..=k_max)
            .map(|k| {
                ln_choose::<T>(k_max, k)
                    + T::of_usize(k) * log_xi
                    + T::of_usize(k_max - k) * log_1mxi
            })
            .collect();
        Self::from_log_masses(log_mass, 0, PriorDescriptor::Binomial { k: k_max, xi })
    }

    /// Truncated geometric, mass proportional to q^k, on {1, ..., K} or
    /// {0, ..., K} depending on `include_zero`.
    pub fn truncated_geometric(k_max: usize, q: T, include_zero: bool) -> Result<Self> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::InvalidParameter(format!("q must lie in (0,1), got {q}")));
        }
        if k_max == 0 {
            return Err(Error::InvalidParameter("geometric prior needs K >= 1".into()));
        }
        let support_min = if include_zero { 0 } else { 1 };
        let log_q = q.ln();
        let log_mass: Vec<T> = (0..=k_max)
            .map(|k| {
                if k < support_min {
                    T::neg_infinity()
                } else {
                    T::of_usize(k) * log_q
                }
            })
            .collect();
        Self::from_log_masses(
            log_mass,
            support_min,
            PriorDescriptor::Geometric { k: k_max, q, include_zero },
        )
    }

    /// Uniform on {0, ..., K}.
    pub fn uniform(k_max: usize) -> Result<Self> {
        let log_mass = vec![T::zero(); k_max + 1];
        Self::from_log_masses(log_mass, 0, PriorDescriptor::Uniform { k: k_max })
    }

    /// Arbitrary positive mass table on {support_min, ..., K}, normalized.
    pub fn custom(masses: Vec<T>, support_min: usize) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidParameter("empty mass table".into()));
        }
        let k_max = support_min + masses.len() - 1;
        if masses.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "custom prior masses must be strictly positive and finite".into(),
            ));
        }
        let mut log_mass = vec![T::neg_infinity(); k_max + 1];
        for (offset, &w) in masses.iter().enumerate() {
            log_mass[support_min + offset] = w.ln();
        }
        Self::from_log_masses(
            log_mass,
            support_min,
            PriorDescriptor::Custom { k: k_max, support_min, masses },
        )
    }

    fn from_log_masses(
        mut log_mass: Vec<T>,
        support_min: usize,
        descriptor: PriorDescriptor<T>,
    ) -> Result<Self> {
        let norm = log_sum_exp(&log_mass);
        if !norm.is_finite() {
            return Err(Error::InvalidParameter("prior mass does not normalize".into()));
        }
        for lm in &mut log_mass {
            *lm = *lm - norm;
        }
        Ok(Self {
            support_max: log_mass.len() - 1,
            support_min,
            log_mass,
            descriptor,
        })
    }

    pub fn support_max(&self) -> usize {
        self.support_max
    }

    pub fn support_min(&self) -> usize {
        self.support_min
    }

    pub fn descriptor(&self) -> &PriorDescriptor<T> {
        &self.descriptor
    }

    /// log pi(k); negative infinity below the support.
    pub fn log_mass(&self, k: usize) -> T {
        assert!(k <= self.support_max, "k={k} beyond support max {}", self.support_max);
        self.log_mass[k]
    }

    pub fn mass(&self, k: usize) -> T {
        self.log_mass(k).exp()
    }

    pub fn from_descriptor(descriptor: PriorDescriptor<T>) -> Result<Self> {
        match descriptor {
            PriorDescriptor::Binomial { k, xi } => Self::binomial(k, xi),
            PriorDescriptor::Geometric { k, q, include_zero } => {
                Self::truncated_geometric(k, q, include_zero)
            }
            PriorDescriptor::Uniform { k } => Self::uniform(k),
            PriorDescriptor::Custom { support_min, masses, .. } => Self::custom(masses, support_min),
        }
    }
}

impl<T: Scalar + Serialize> Serialize for SparsityPrior<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor.serialize(serializer)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for SparsityPrior<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let descriptor = PriorDescriptor::deserialize(deserializer)?;
        Self::from_descriptor(descriptor).map_err(D::Error::custom)
    }
}

/// xi making the within-group binomial prior reproduce the conservative
/// sqrt(2 ln n) hard threshold.
pub fn universal_xi<T: Scalar>(n: usize, gamma: T) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidParameter("universal xi needs n >= 2".into()));
    }
    if !(gamma > T::zero()) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let root = (gamma + T::one()).sqrt();
    let power = T::of_usize(n).powf(gamma / (gamma + T::one()));
    Ok(root / (root + power))
}

/// Which of the two binomial priors a threshold slope refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaKind {
    Between,
    Within,
}

/// Squared slope lambda^2 of the linear penalty induced by a binomial prior.
///
/// Between-groups: lambda^2 = (1 + 1/gamma) ln((1-xi)/xi).
/// Within-group:  lambda^2 = (1 + 1/gamma) ln(sqrt(1+gamma) (1-xi)/xi).
/// The implied constant hard threshold is sqrt(2) * sigma * lambda.
pub fn binomial_lambda_sq<T: Scalar>(xi: T, gamma: T, kind: LambdaKind) -> Result<T> {
    if !(xi > T::zero() && xi < T::one()) {
        return Err(Error::InvalidParameter(format!("xi must lie in (0,1), got {xi}")));
    }
    if !(gamma > T::zero()) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let ratio = (T::one() - xi) / xi;
    let arg = match kind {
        LambdaKind::Between => ratio,
        LambdaKind::Within => (T::one() + gamma).sqrt() * ratio,
    };
    if arg < T::one() {
        return Err(Error::InvalidParameter(format!(
            "xi={xi} gives log argument {arg} < 1 (negative penalty slope)"
        )));
    }
    Ok((T::one() + gamma.recip()) * arg.ln())
}

/// Prior-tail growth constant c(gamma) = 8 (gamma + 3/4)^2.
pub fn c_gamma<T: Scalar>(gamma: T) -> T {
    let shifted = gamma + T::of(0.75);
    T::of(8.0) * shifted * shifted
}

/// Outcome of the prior-tail check pi(h) <= C(n,h) exp(-c(gamma) h).
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionPReport<T> {
    pub gamma: T,
    pub c_gamma: T,
    pub violations: Vec<usize>,
    pub satisfied: bool,
}

// Both sides carry O(c*h) magnitudes, so allow a small absolute slack for
// accumulated rounding in log-space.
const ASSUMPTION_P_SLACK: f64 = 1e-9;

/// Check the tail bound at every h in {1, ..., n} and report violators.
pub fn check_assumption_p<T: Scalar>(
    prior: &SparsityPrior<T>,
    gamma: T,
    n: usize,
) -> Result<AssumptionPReport<T>> {
    if prior.support_max() != n {
        return Err(Error::Dimension(format!(
            "prior support max {} does not match n={n}",
            prior.support_max()
        )));
    }
    if !(gamma > T::zero()) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let c = c_gamma(gamma);
    let slack = T::of(ASSUMPTION_P_SLACK);
    let violations: Vec<usize> = (1..=n)
        .filter(|&h| {
            let bound = ln_choose::<T>(n, h) - c * T::of_usize(h);
            prior.log_mass(h) > bound + slack
        })
        .collect();
    Ok(AssumptionPReport {
        gamma,
        c_gamma: c,
        satisfied: violations.is_empty(),
        violations,
    })
}
