//! Minimax-rate lookup for a single sparse mean vector over l0, strong-lp
//! and weak-mp balls, used by the empirical rate sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparsity class of a single mean vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallKind {
    L0,
    StrongLp,
    WeakMp,
}

/// Radius regime; the rate formula switches at the regime boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Dense,
    Sparse,
    SuperSparse,
}

/// A fully specified rate query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub ball: BallKind,
    pub p: f64,
    /// Standardized radius eta.
    pub eta: f64,
    pub n: usize,
    pub sigma: f64,
    pub regime: Regime,
}

impl RateSpec {
    pub fn new(ball: BallKind, p: f64, eta: f64, n: usize, sigma: f64) -> Result<Self> {
        let regime = classify_regime(ball, p, eta, n)?;
        Ok(Self { ball, p, eta, n, sigma, regime })
    }

    pub fn validate(&self) -> Result<()> {
        let expected = classify_regime(self.ball, self.p, self.eta, self.n)?;
        if expected != self.regime {
            return Err(Error::InvalidParameter(format!(
                "regime {:?} inconsistent with eta={} n={} p={} (expected {:?})",
                self.regime, self.eta, self.n, self.p, expected
            )));
        }
        Ok(())
    }
}

/// Radius below which the sparse regime gives way to super-sparse (p > 0).
pub fn super_sparse_boundary(p: f64, n: usize) -> f64 {
    let n = n as f64;
    n.powf(-1.0 / p.min(2.0)) * n.ln().sqrt()
}

/// Classify the regime from the radius at this finite n.
///
/// Asymptotically the regimes are about whether eta vanishes; at a fixed n
/// the dense regime is read as eta reaching 1 (no sparsity constraint
/// binds), sparse as eta in [1/n, 1) for p = 0 or above the boundary for
/// p > 0, and super-sparse as below the boundary.
pub fn classify_regime(ball: BallKind, p: f64, eta: f64, n: usize) -> Result<Regime> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("rate classification needs n >= 2".into()));
    }
    if ball == BallKind::L0 && p != 0.0 {
        return Err(Error::InvalidParameter("l0 ball requires p = 0".into()));
    }
    if ball != BallKind::L0 && !(p > 0.0) {
        return Err(Error::InvalidParameter("lp balls require p > 0".into()));
    }
    if eta >= 1.0 {
        return Ok(Regime::Dense);
    }
    if p == 0.0 {
        if eta >= 1.0 / n as f64 {
            Ok(Regime::Sparse)
        } else {
            Err(Error::InvalidParameter(format!(
                "eta={eta} below 1/n: no super-sparse regime exists for p = 0"
            )))
        }
    } else if eta >= super_sparse_boundary(p, n) {
        Ok(Regime::Sparse)
    } else {
        Ok(Regime::SuperSparse)
    }
}

/// Minimax quadratic risk (up to constants) for one vector of length n.
pub fn rate_lookup(spec: &RateSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.n as f64;
    let s2 = spec.sigma * spec.sigma;
    let eta = spec.eta;
    let p = spec.p;
    let value = match spec.regime {
        Regime::Dense => s2 * n,
        Regime::Sparse => {
            let base = if p == 0.0 {
                s2 * n * eta * (1.0 / eta).ln()
            } else if p < 2.0 {
                s2 * n * eta.powf(p) * (p * (1.0 / eta).ln()).powf(1.0 - p / 2.0)
            } else {
                s2 * n * eta * eta
            };
            // Weak ball at p = 2 carries an extra log factor.
            if spec.ball == BallKind::WeakMp && p == 2.0 {
                base * (1.0 / eta).ln()
            } else {
                base
            }
        }
        Regime::SuperSparse => {
            if p == 0.0 {
                return Err(Error::InvalidParameter(
                    "no super-sparse regime exists for p = 0".into(),
                ));
            }
            if p < 2.0 {
                s2 * n.powf(2.0 / p) * eta * eta
            } else {
                s2 * n * eta * eta
            }
        }
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn l0_dense_rate() {
        let spec = RateSpec::new(BallKind::L0, 0.0, 1.0, 100, 2.0).unwrap();
        assert_eq!(spec.regime, Regime::Dense);
        assert_relative_eq!(rate_lookup(&spec).unwrap(), 400.0, epsilon = 1e-12);
    }

    #[test]
    fn l0_sparse_rate() {
        let spec = RateSpec::new(BallKind::L0, 0.0, 0.05, 200, 1.0).unwrap();
        assert_eq!(spec.regime, Regime::Sparse);
        assert_relative_eq!(
            rate_lookup(&spec).unwrap(),
            200.0 * 0.05 * 20f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn p1_sparse_rate() {
        let n = 10_000;
        let eta = 0.1;
        let spec = RateSpec::new(BallKind::StrongLp, 1.0, eta, n, 1.0).unwrap();
        assert_eq!(spec.regime, Regime::Sparse);
        assert_relative_eq!(
            rate_lookup(&spec).unwrap(),
            n as f64 * eta * (1.0 / eta).ln().sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn p_ge_two_rates() {
        let spec = RateSpec::new(BallKind::StrongLp, 3.0, 0.01, 1000, 1.0).unwrap();
        assert_relative_eq!(rate_lookup(&spec).unwrap(), 1000.0 * 1e-4, epsilon = 1e-12);
        // Super-sparse and sparse formulas coincide for p >= 2.
        let deep = RateSpec::new(BallKind::StrongLp, 3.0, 1e-6, 1000, 1.0).unwrap();
        assert_eq!(deep.regime, Regime::SuperSparse);
        assert_relative_eq!(rate_lookup(&deep).unwrap(), 1000.0 * 1e-12, epsilon = 1e-20);
    }

    #[test]
    fn weak_p2_sparse_gets_log_term() {
        let strong = RateSpec::new(BallKind::StrongLp, 2.0, 0.1, 1000, 1.0).unwrap();
        let weak = RateSpec::new(BallKind::WeakMp, 2.0, 0.1, 1000, 1.0).unwrap();
        assert_relative_eq!(
            rate_lookup(&weak).unwrap(),
            rate_lookup(&strong).unwrap() * 10f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn super_sparse_p0_is_an_error() {
        assert!(RateSpec::new(BallKind::L0, 0.0, 1e-9, 100, 1.0).is_err());
        let mut spec = RateSpec::new(BallKind::L0, 0.0, 0.5, 100, 1.0).unwrap();
        spec.regime = Regime::SuperSparse;
        assert!(rate_lookup(&spec).is_err());
    }

    #[test]
    fn classifier_boundaries() {
        // Just above vs just below the super-sparse boundary for p=1.
        let n = 10_000;
        let boundary = super_sparse_boundary(1.0, n);
        assert_eq!(
            classify_regime(BallKind::StrongLp, 1.0, boundary * 1.01, n).unwrap(),
            Regime::Sparse
        );
        assert_eq!(
            classify_regime(BallKind::StrongLp, 1.0, boundary * 0.99, n).unwrap(),
            Regime::SuperSparse
        );
        assert_eq!(classify_regime(BallKind::L0, 0.0, 1.0, n).unwrap(), Regime::Dense);
    }

    #[test]
    fn classifier_agrees_with_stored_regime_on_random_specs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let ball = match rng.gen_range(0..3) {
                0 => BallKind::L0,
                1 => BallKind::StrongLp,
                _ => BallKind::WeakMp,
            };
            let p = if ball == BallKind::L0 { 0.0 } else { rng.gen_range(0.1..4.0) };
            let n = rng.gen_range(4..100_000);
            let eta = 10f64.powf(rng.gen_range(-4.0..0.5));
            if let Ok(spec) = RateSpec::new(ball, p, eta, n, 1.0) {
                assert!(spec.validate().is_ok());
                assert_eq!(spec.regime, classify_regime(ball, p, eta, n).unwrap());
            }
        }
    }
}
