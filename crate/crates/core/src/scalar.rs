//! Scalar abstraction: all core math is generic over `f32`/`f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the estimators are generic over.
pub trait Scalar: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {
    /// Natural log of the gamma function.
    fn ln_gamma(self) -> Self;

    /// Infallible conversion from `f64` (used for literal constants).
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 constant")
    }

    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize fits in scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self)
    }
}

impl Scalar for f32 {
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self as f64) as f32
    }
}

/// log of the binomial coefficient C(n, k), via log-gamma.
pub fn ln_choose<T: Scalar>(n: usize, k: usize) -> T {
    assert!(k <= n, "ln_choose: k={k} > n={n}");
    if k == 0 || k == n {
        return T::zero();
    }
    let nf = T::of_usize(n);
    let kf = T::of_usize(k);
    (nf + T::one()).ln_gamma() - (kf + T::one()).ln_gamma() - (nf - kf + T::one()).ln_gamma()
}

/// Numerically stable log(sum(exp(x_i))) over finite or -inf entries.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let max = xs
        .iter()
        .cloned()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if max == T::neg_infinity() {
        return T::neg_infinity();
    }
    let sum = xs
        .iter()
        .map(|&x| (x - max).exp())
        .fold(T::zero(), |a, b| a + b);
    max + sum.ln()
}
