//! Floating-point abstraction shared by the density and quadrature code.
//!
//! Special functions are evaluated in `f64` (gamma family through `statrs`,
//! `erfc` through `libm`) and cast back,
//! so `f32` instantiations lose nothing beyond their own precision.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};
use statrs::function::{erf, gamma};

/// f32 or f64, with the special functions the size families need.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    fn c(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("constant representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }

    fn ln_gamma_fn(self) -> Self {
        Self::c(gamma::ln_gamma(self.to_f64_lossy()))
    }

    fn gamma_fn(self) -> Self {
        Self::c(gamma::gamma(self.to_f64_lossy()))
    }

    /// Regularized lower incomplete gamma P(a, x).
    fn gamma_lr(a: Self, x: Self) -> Self {
        if x <= Self::zero() {
            return Self::zero();
        }
        if x.is_infinite() {
            return Self::one();
        }
        Self::c(gamma::gamma_lr(a.to_f64_lossy(), x.to_f64_lossy()))
    }

    /// Regularized upper incomplete gamma Q(a, x).
    fn gamma_ur(a: Self, x: Self) -> Self {
        if x <= Self::zero() {
            return Self::one();
        }
        if x.is_infinite() {
            return Self::zero();
        }
        Self::c(gamma::gamma_ur(a.to_f64_lossy(), x.to_f64_lossy()))
    }

    fn erfc(self) -> Self {
        Self::c(libm::erfc(self.to_f64_lossy()))
    }

    /// Standard normal CDF.
    fn norm_cdf(self) -> Self {
        Self::c(0.5) * (-self / Self::SQRT_2()).erfc()
    }

    /// Standard normal survival function, accurate in the upper tail.
    fn norm_sf(self) -> Self {
        Self::c(0.5) * (self / Self::SQRT_2()).erfc()
    }

    /// Standard normal density.
    fn norm_pdf(self) -> Self {
        (-(self * self) * Self::c(0.5)).exp() / (Self::TAU()).sqrt()
    }

    /// Standard normal quantile.
    fn norm_quantile(p: Self) -> Self {
        let p = p.to_f64_lossy();
        Self::c(-std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Neumaier-compensated running sum; makes reductions insensitive to the
/// magnitude ordering of the terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp = self.comp + ((self.sum - t) + v);
        } else {
            self.comp = self.comp + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Scalar> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = Self::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn compensated_sum<T: Scalar, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_functions_agree() {
        assert!((0.0f64.norm_cdf() - 0.5).abs() < 1e-15);
        assert!((1.959963984540054f64.norm_cdf() - 0.975).abs() < 1e-12);
        assert!((f64::norm_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((0.0f64.norm_pdf() - 0.3989422804014327).abs() < 1e-15);
        assert!((8.0f64.norm_sf() - 6.22096057427178e-16).abs() < 1e-25);
    }

    #[test]
    fn f32_instantiation_works() {
        let g: f32 = 5.0f32.gamma_fn();
        assert!((g - 24.0).abs() < 1e-4);
        assert!((f32::gamma_lr(1.0, 1.0) - (1.0 - (-1.0f32).exp())).abs() < 1e-6);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let terms = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(terms.iter().copied()), 2.0);
    }
}
