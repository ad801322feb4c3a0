//! Parametric laws for three-dimensional particle diameters.
//!
//! Three families are supported: Weibull(λ, k), log-normal(μ, σ) and the
//! positive normal (a normal law truncated to `(0, ∞)` with a positive
//! mode). Each law carries its density, distribution function, raw and
//! partial moments, quantiles, and samplers for both the plain law and the
//! size-weighted law `t·f(t)/E(D)` followed by diameters of particles hit
//! by a section plane.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution as _, Gamma, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Weibull,
    LogNormal,
    PositiveNormal,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Weibull, Family::LogNormal, Family::PositiveNormal];

    pub fn name(self) -> &'static str {
        match self {
            Family::Weibull => "weibull",
            Family::LogNormal => "lognormal",
            Family::PositiveNormal => "posnormal",
        }
    }

    /// Names of the (scale, shape) parameters.
    pub fn param_names(self) -> (&'static str, &'static str) {
        match self {
            Family::Weibull => ("lambda", "k"),
            Family::LogNormal | Family::PositiveNormal => ("mu", "sigma"),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weibull" => Ok(Family::Weibull),
            "lognormal" | "log-normal" => Ok(Family::LogNormal),
            "posnormal" | "positive-normal" | "positivenormal" => Ok(Family::PositiveNormal),
            other => domain(format!("unknown family '{other}'")),
        }
    }
}

impl Serialize for Family {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which side of a cut point a partial moment covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `E[Dʳ; D ≤ z]`
    Lower,
    /// `E[Dʳ; D > z]`
    Upper,
}

/// A validated diameter law. `scale` is λ (Weibull) or μ (log-normal,
/// positive normal); `shape` is k or σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeDistribution<T = f64> {
    family: Family,
    scale: T,
    shape: T,
    // Positive normal: mass of the untruncated normal above zero.
    mass: T,
}

impl<T: Scalar> SizeDistribution<T> {
    pub fn new(family: Family, scale: T, shape: T) -> Result<Self> {
        if !scale.is_finite() || !shape.is_finite() {
            return domain(format!("{family} parameters must be finite"));
        }
        if shape <= T::zero() {
            return domain(format!("{family} shape must be positive, got {shape}"));
        }
        let mass = match family {
            Family::Weibull => {
                if scale <= T::zero() {
                    return domain(format!("weibull scale must be positive, got {scale}"));
                }
                T::one()
            }
            Family::LogNormal => T::one(),
            Family::PositiveNormal => {
                if scale <= T::zero() {
                    return domain(format!("posnormal mode must be positive, got {scale}"));
                }
                (scale / shape).norm_cdf()
            }
        };
        Ok(Self {
            family,
            scale,
            shape,
            mass,
        })
    }

    pub fn weibull(lambda: T, k: T) -> Result<Self> {
        Self::new(Family::Weibull, lambda, k)
    }

    pub fn lognormal(mu: T, sigma: T) -> Result<Self> {
        Self::new(Family::LogNormal, mu, sigma)
    }

    pub fn positive_normal(mu: T, sigma: T) -> Result<Self> {
        Self::new(Family::PositiveNormal, mu, sigma)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn shape(&self) -> T {
        self.shape
    }

    pub fn params(&self) -> [T; 2] {
        [self.scale, self.shape]
    }

    /// Law of `c·D`.
    pub fn rescaled(&self, c: T) -> Result<Self> {
        match self.family {
            Family::Weibull => Self::weibull(self.scale * c, self.shape),
            Family::LogNormal => Self::lognormal(self.scale + c.ln(), self.shape),
            Family::PositiveNormal => Self::positive_normal(self.scale * c, self.shape * c),
        }
    }

    pub fn pdf(&self, d: T) -> T {
        if d <= T::zero() {
            return T::zero();
        }
        let (s, k) = (self.scale, self.shape);
        match self.family {
            Family::Weibull => {
                let z = d / s;
                let zk = z.powf(k);
                k / s * zk / z * (-zk).exp()
            }
            Family::LogNormal => {
                let z = (d.ln() - s) / k;
                z.norm_pdf() / (k * d)
            }
            Family::PositiveNormal => ((d - s) / k).norm_pdf() / (k * self.mass),
        }
    }

    pub fn cdf(&self, d: T) -> T {
        self.cdf_sf(d).0
    }

    pub fn sf(&self, d: T) -> T {
        self.cdf_sf(d).1
    }

    /// `(F(d), 1 − F(d))` with whichever is smaller computed directly.
    pub fn cdf_sf(&self, d: T) -> (T, T) {
        let (zero, one) = (T::zero(), T::one());
        if d <= zero {
            return (zero, one);
        }
        if d.is_infinite() {
            return (one, zero);
        }
        let (s, k) = (self.scale, self.shape);
        match self.family {
            Family::Weibull => {
                weibull_cdf_sf((d / s).powf(k))
            }
            Family::LogNormal => {
                let z = (d.ln() - s) / k;
                if z < T::zero() {
                    let lower = z.norm_cdf();
                    (lower, one - lower)
                } else {
                    let surv = z.norm_sf();
                    (one - surv, surv)
                }
            }
            Family::PositiveNormal => {
                let beta = (d - s) / k;
                let alpha = -s / k;
                let surv = beta.norm_sf() / self.mass;
                // Φ(β) − Φ(α) = Φc(α) − Φc(β)
                let lower = (alpha.norm_sf() - beta.norm_sf()) / self.mass;
                if lower < T::c(0.5) {
                    (lower, one - lower)
                } else {
                    (one - surv, surv)
                }
            }
        }
    }

    /// Inverse distribution function on `(0, 1)`.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return domain(format!("quantile probability must lie in (0,1), got {p}"));
        }
        let (s, k) = (self.scale, self.shape);
        Ok(match self.family {
            Family::Weibull => s * (-(-p).ln_1p()).powf(T::one() / k),
            Family::LogNormal => (s + k * T::norm_quantile(p)).exp(),
            // Φc(β) = (1 − p)·Φc(α) with α = −μ/σ.
            Family::PositiveNormal => s - k * T::norm_quantile((T::one() - p) * self.mass),
        })
    }

    pub fn median(&self) -> T {
        self.quantile(T::c(0.5)).expect("0.5 is a valid probability")
    }

    /// `E(Dʳ)`.
    pub fn raw_moment(&self, r: u32) -> T {
        if r == 0 {
            return T::one();
        }
        let (s, k) = (self.scale, self.shape);
        let rf = T::c(r as f64);
        match self.family {
            Family::Weibull => s.powf(rf) * (T::one() + rf / k).gamma_fn(),
            Family::LogNormal => (rf * s + rf * rf * k * k * T::c(0.5)).exp(),
            Family::PositiveNormal => {
                let alpha = -s / k;
                let mut prev = T::one();
                let mut cur = s + k * alpha.norm_pdf() / self.mass;
                for j in 2..=r {
                    let next = s * cur + T::c((j - 1) as f64) * k * k * prev;
                    prev = cur;
                    cur = next;
                }
                cur
            }
        }
    }

    /// `E[Dʳ; D ≤ z]` or `E[Dʳ; D > z]`.
    pub fn partial_moment(&self, r: u32, z: T, tail: Tail) -> T {
        let (zero, one) = (T::zero(), T::one());
        if z <= zero {
            return match tail {
                Tail::Lower => zero,
                Tail::Upper => self.raw_moment(r),
            };
        }
        if z.is_infinite() {
            return match tail {
                Tail::Lower => self.raw_moment(r),
                Tail::Upper => zero,
            };
        }
        let (s, k) = (self.scale, self.shape);
        let rf = T::c(r as f64);
        match self.family {
            Family::Weibull => {
                let a = one + rf / k;
                let x = (z / s).powf(k);
                let full = s.powf(rf) * a.gamma_fn();
                match tail {
                    Tail::Lower => full * T::gamma_lr(a, x),
                    Tail::Upper => full * T::gamma_ur(a, x),
                }
            }
            Family::LogNormal => {
                let full = (rf * s + rf * rf * k * k * T::c(0.5)).exp();
                let w = (z.ln() - s - rf * k * k) / k;
                match tail {
                    Tail::Lower => full * w.norm_cdf(),
                    Tail::Upper => full * w.norm_sf(),
                }
            }
            Family::PositiveNormal => {
                let alpha = -s / k;
                let beta = (z - s) / k;
                let pb = beta.norm_pdf() / self.mass;
                let pa = alpha.norm_pdf() / self.mass;
                let k2 = k * k;
                match tail {
                    Tail::Lower => {
                        let mut prev = (alpha.norm_sf() - beta.norm_sf()) / self.mass;
                        if r == 0 {
                            return prev;
                        }
                        let mut cur = s * prev - k * (pb - pa);
                        let mut zp = one;
                        for j in 2..=r {
                            zp = zp * z;
                            let next = s * cur + T::c((j - 1) as f64) * k2 * prev - k * zp * pb;
                            prev = cur;
                            cur = next;
                        }
                        cur
                    }
                    Tail::Upper => {
                        let mut prev = beta.norm_sf() / self.mass;
                        if r == 0 {
                            return prev;
                        }
                        let mut cur = s * prev + k * pb;
                        let mut zp = one;
                        for j in 2..=r {
                            zp = zp * z;
                            let next = s * cur + T::c((j - 1) as f64) * k2 * prev + k * zp * pb;
                            prev = cur;
                            cur = next;
                        }
                        cur
                    }
                }
            }
        }
    }

    /// `E(D)`. For Weibull this is `λ·Γ(1 + 1/k)`.
    pub fn mean_diameter(&self) -> T {
        self.raw_moment(1)
    }

    /// Volume-weighted mean sphere volume `(π/6)·E(D⁶)/E(D³)`.
    pub fn vw_mean_volume(&self) -> Result<T> {
        let m6 = self.raw_moment(6);
        let m3 = self.raw_moment(3);
        if !m6.is_finite() || !m3.is_finite() {
            return Err(Error::DivergentMoment(6));
        }
        Ok(T::PI() / T::c(6.0) * m6 / m3)
    }

    /// Distribution function of the size-weighted law `t·f(t)/E(D)`.
    pub fn size_weighted_cdf(&self, z: T) -> T {
        self.partial_moment(1, z, Tail::Lower) / self.mean_diameter()
    }

    /// Quantile of the size-weighted law, by bisection on its CDF.
    pub fn size_weighted_quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return domain(format!("quantile probability must lie in (0,1), got {p}"));
        }
        let mean = self.mean_diameter();
        let mut hi = mean.max(self.quantile(T::c(0.5))?);
        let upper = |z: T| self.partial_moment(1, z, Tail::Upper) / mean;
        let target = T::one() - p;
        let mut guard = 0;
        while upper(hi) > target {
            hi = hi * T::c(2.0);
            guard += 1;
            if guard > 200 {
                return Err(Error::Fit("size-weighted quantile search diverged".into()));
            }
        }
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) * T::c(0.5);
            if upper(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * hi * T::c(4.0) {
                break;
            }
        }
        Ok((lo + hi) * T::c(0.5))
    }

    /// One draw from the plain law.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let s = self.scale.to_f64_lossy();
        let k = self.shape.to_f64_lossy();
        let v = match self.family {
            Family::Weibull => {
                let u: f64 = rng.gen();
                s * (-(1.0 - u).ln()).powf(1.0 / k)
            }
            Family::LogNormal => {
                let z: f64 = rng.sample(StandardNormal);
                (s + k * z).exp()
            }
            Family::PositiveNormal => loop {
                let z: f64 = rng.sample(StandardNormal);
                let d = s + k * z;
                if d > 0.0 {
                    break d;
                }
            },
        };
        T::c(v)
    }

    /// One draw from the size-weighted law.
    pub fn draw_size_weighted<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let s = self.scale.to_f64_lossy();
        let k = self.shape.to_f64_lossy();
        let v = match self.family {
            // (D/λ)^k follows Gamma(1 + 1/k, 1) under size weighting.
            Family::Weibull => {
                let g = Gamma::new(1.0 + 1.0 / k, 1.0).expect("valid gamma shape");
                s * g.sample(rng).powf(1.0 / k)
            }
            Family::LogNormal => {
                let z: f64 = rng.sample(StandardNormal);
                (s + k * k + k * z).exp()
            }
            // Rejection from N(t*, σ) restricted to (0, ∞), where t* is the
            // mode of t·φ((t−μ)/σ); the acceptance ratio is (t/t*)·e^(1−t/t*).
            Family::PositiveNormal => {
                let mode = 0.5 * (s + (s * s + 4.0 * k * k).sqrt());
                loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let t = mode + k * z;
                    if t <= 0.0 {
                        continue;
                    }
                    let ratio = t / mode;
                    let u: f64 = rng.gen();
                    if u <= ratio * (1.0 - ratio).exp() {
                        break t;
                    }
                }
            }
        };
        T::c(v)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<T> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    pub fn sample_size_weighted<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<T> {
        (0..n).map(|_| self.draw_size_weighted(rng)).collect()
    }

    pub fn sample_seeded(&self, n: usize, seed: u64) -> Vec<T> {
        self.sample(n, &mut crate::rng::stream(seed, 0))
    }

    pub fn sample_size_weighted_seeded(&self, n: usize, seed: u64) -> Vec<T> {
        self.sample_size_weighted(n, &mut crate::rng::stream(seed, 0))
    }

    pub fn cast<U: Scalar>(&self) -> Result<SizeDistribution<U>> {
        SizeDistribution::new(
            self.family,
            U::c(self.scale.to_f64_lossy()),
            U::c(self.shape.to_f64_lossy()),
        )
    }
}

/// Weibull `(F, 1 − F)` from the reduced variable `t = (d/λ)^k`.
#[inline]
pub(crate) fn weibull_cdf_sf<T: Scalar>(t: T) -> (T, T) {
    if t < T::LN_2() {
        let lower = -(-t).exp_m1();
        (lower, T::one() - lower)
    } else {
        let surv = (-t).exp();
        (T::one() - surv, surv)
    }
}

/// Named scalar summaries of a diameter law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Scale,
    Shape,
    MeanDiameter,
    MedianDiameter,
    /// Volume-weighted mean volume.
    VwMeanVolume,
}

impl Functional {
    pub const ALL: [Functional; 5] = [
        Functional::Scale,
        Functional::Shape,
        Functional::MeanDiameter,
        Functional::MedianDiameter,
        Functional::VwMeanVolume,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::Scale => "scale",
            Functional::Shape => "shape",
            Functional::MeanDiameter => "mean_diameter",
            Functional::MedianDiameter => "median_diameter",
            Functional::VwMeanVolume => "vw_mean_volume",
        }
    }

    /// Value at `d`; NaN where the functional is undefined.
    pub fn of<T: Scalar>(self, d: &SizeDistribution<T>) -> f64 {
        match self {
            Functional::Scale => d.scale().to_f64_lossy(),
            Functional::Shape => d.shape().to_f64_lossy(),
            Functional::MeanDiameter => d.mean_diameter().to_f64_lossy(),
            Functional::MedianDiameter => d.median().to_f64_lossy(),
            Functional::VwMeanVolume => d.vw_mean_volume().map_or(f64::NAN, |v| v.to_f64_lossy()),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Functional::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .map_or_else(|| domain(format!("unknown functional '{s}'")), Ok)
    }
}

impl<T: Scalar> fmt::Display for SizeDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.family.param_names();
        write!(f, "{}({a}={}, {b}={})", self.family, self.scale, self.shape)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family")]
enum DistributionRepr {
    #[serde(rename = "weibull")]
    Weibull { lambda: f64, k: f64 },
    #[serde(rename = "lognormal")]
    LogNormal { mu: f64, sigma: f64 },
    #[serde(rename = "posnormal")]
    PositiveNormal { mu: f64, sigma: f64 },
}

impl<T: Scalar> Serialize for SizeDistribution<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (a, b) = (self.scale.to_f64_lossy(), self.shape.to_f64_lossy());
        let repr = match self.family {
            Family::Weibull => DistributionRepr::Weibull { lambda: a, k: b },
            Family::LogNormal => DistributionRepr::LogNormal { mu: a, sigma: b },
            Family::PositiveNormal => DistributionRepr::PositiveNormal { mu: a, sigma: b },
        };
        repr.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for SizeDistribution<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (family, a, b) = match DistributionRepr::deserialize(d)? {
            DistributionRepr::Weibull { lambda, k } => (Family::Weibull, lambda, k),
            DistributionRepr::LogNormal { mu, sigma } => (Family::LogNormal, mu, sigma),
            DistributionRepr::PositiveNormal { mu, sigma } => (Family::PositiveNormal, mu, sigma),
        };
        SizeDistribution::new(family, T::c(a), T::c(b)).map_err(serde::de::Error::custom)
    }
}
