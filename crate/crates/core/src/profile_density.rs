//! Density of section-profile diameters for a given sphere-diameter law.
//!
//! Each sphere is replaced by the solid obtained by revolving an inscribed
//! regular `4m`-gon about a diagonal normal to the section plane. Profiles
//! of that solid are uniform within each of the `m` trapezium bands, which
//! turns the Wicksell integral into a finite sum over the diameter CDF:
//!
//! ```text
//! g*(y) = 1/E(D) · Σᵢ pᵢ·(F(y/xᵢ) − F(y/xᵢ₋₁)) / (xᵢ₋₁ − xᵢ)
//! g(y)  = g*(y/a) / a
//! ```
//!
//! with `pᵢ = sin(iπ/2m) − sin((i−1)π/2m)`, `xᵢ = cos(iπ/2m)` and the
//! scaling coefficient `a = π/(2m·sin(π/2m))` that restores the exact
//! profile mean `(π/4)·E(D²)/E(D)`.
//!
//! Integrals of the finite sum reduce to partial moments of the diameter
//! law, so the profile CDF and the truncated profile moments used by the
//! weighted density are evaluated in closed form. The direct Wicksell
//! integral is provided as the reference density.

use crate::distributions::{weibull_cdf_sf, Family, SizeDistribution, Tail};
use crate::error::{domain, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Estimate, Tolerance};
use crate::scalar::{compensated_sum, Scalar};

/// Number of trapezium terms used unless configured otherwise.
pub const DEFAULT_TERMS: usize = 15;

/// Precomputed coefficients of the `m`-term approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonApproximation<T = f64> {
    m: usize,
    p: Vec<T>,
    x: Vec<T>,
    a: T,
}

impl<T: Scalar> PolygonApproximation<T> {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return domain("approximation needs at least one term");
        }
        let step = T::FRAC_PI_2() / T::c(m as f64);
        let angle = |i: usize| step * T::c(i as f64);
        let p = (1..=m).map(|i| angle(i).sin() - angle(i - 1).sin()).collect();
        let x = (0..=m)
            .map(|i| match i {
                0 => T::one(),
                i if i == m => T::zero(),
                i => angle(i).cos(),
            })
            .collect();
        let a = T::PI() / (T::c(2.0 * m as f64) * step.sin());
        Ok(Self { m, p, x, a })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Trapezium probabilities `p₁..pₘ`.
    pub fn p(&self) -> &[T] {
        &self.p
    }

    /// Band abscissae `x₀ = 1 > x₁ > … > xₘ = 0`.
    pub fn x(&self) -> &[T] {
        &self.x
    }

    /// Scaling coefficient `a`.
    pub fn a(&self) -> T {
        self.a
    }
}

impl Default for PolygonApproximation<f64> {
    fn default() -> Self {
        Self::new(DEFAULT_TERMS).expect("default term count is positive")
    }
}

/// Whether the mean-restoring scale `a` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// The final approximation `g`.
    Scaled,
    /// The intermediate density `g*` of the polygon-of-revolution solid.
    Unscaled,
}

#[derive(Debug, Clone)]
enum Kernel<T> {
    // c_j^(−k) and 1/λ^k
    Weibull { ck: Vec<T>, inv_scale_k: T },
    // ln c_j
    LogNormal { ln_c: Vec<T> },
    // 1/c_j
    Generic { inv_c: Vec<T> },
}

/// The approximate profile-diameter law for one parameter point.
///
/// Construction does the per-parameter work once, so repeated density
/// evaluations over a sample cost `m` CDF evaluations each.
#[derive(Debug, Clone)]
pub struct ProfileDensity<T = f64> {
    dist: SizeDistribution<T>,
    // c_j = a·x_j for j = 0..m (c_m = 0)
    c: Vec<T>,
    // p_i / ((x_{i−1} − x_i)·a·E(D)) for i = 1..m
    w: Vec<T>,
    kernel: Kernel<T>,
}

impl<T: Scalar> ProfileDensity<T> {
    pub fn new(dist: SizeDistribution<T>, approx: &PolygonApproximation<T>) -> Self {
        Self::with_scaling(dist, approx, Scaling::Scaled)
    }

    pub fn unscaled(dist: SizeDistribution<T>, approx: &PolygonApproximation<T>) -> Self {
        Self::with_scaling(dist, approx, Scaling::Unscaled)
    }

    pub fn with_scaling(
        dist: SizeDistribution<T>,
        approx: &PolygonApproximation<T>,
        scaling: Scaling,
    ) -> Self {
        let a = match scaling {
            Scaling::Scaled => approx.a,
            Scaling::Unscaled => T::one(),
        };
        let mean = dist.mean_diameter();
        let c: Vec<T> = approx.x.iter().map(|&x| a * x).collect();
        let w = (1..=approx.m)
            .map(|i| approx.p[i - 1] / ((approx.x[i - 1] - approx.x[i]) * a * mean))
            .collect();
        let positive = &c[..approx.m];
        let kernel = match dist.family() {
            Family::Weibull => {
                let k = dist.shape();
                Kernel::Weibull {
                    ck: positive.iter().map(|&cj| cj.powf(-k)).collect(),
                    inv_scale_k: dist.scale().powf(-k),
                }
            }
            Family::LogNormal => Kernel::LogNormal {
                ln_c: positive.iter().map(|&cj| cj.ln()).collect(),
            },
            Family::PositiveNormal => Kernel::Generic {
                inv_c: positive.iter().map(|&cj| T::one() / cj).collect(),
            },
        };
        Self { dist, c, w, kernel }
    }

    pub fn distribution(&self) -> &SizeDistribution<T> {
        &self.dist
    }

    pub fn m(&self) -> usize {
        self.w.len()
    }

    fn pdf_inner(&self, y: T, ln_y: T) -> T {
        if !(y > T::zero()) || y.is_infinite() {
            return T::zero();
        }
        let m = self.w.len();
        let (one, half) = (T::one(), T::c(0.5));
        // Per-observation part of the CDF argument, shared by all bands.
        let base = match &self.kernel {
            Kernel::Weibull { inv_scale_k, .. } => (self.dist.shape() * ln_y).exp() * *inv_scale_k,
            Kernel::LogNormal { .. } => ln_y - self.dist.scale(),
            Kernel::Generic { .. } => y,
        };
        if let Kernel::Weibull { ck, .. } = &self.kernel {
            // Arguments grow with the band index, so once the first one is
            // clear of zero every difference of survival terms is well
            // conditioned.
            if base * ck[0] >= T::c(1e-3) {
                let mut acc = T::zero();
                let mut prev = (-(base * ck[0])).exp();
                for i in 1..m {
                    let cur = (-(base * ck[i])).exp();
                    acc = acc + self.w[i - 1] * (prev - cur);
                    prev = cur;
                }
                return (acc + self.w[m - 1] * prev).max(T::zero());
            }
        }
        let eval = |j: usize| -> (T, T) {
            if j == m {
                return (one, T::zero());
            }
            match &self.kernel {
                Kernel::Weibull { ck, .. } => weibull_cdf_sf(base * ck[j]),
                Kernel::LogNormal { ln_c } => {
                    let z = (base - ln_c[j]) / self.dist.shape();
                    if z < T::zero() {
                        let lower = z.norm_cdf();
                        (lower, one - lower)
                    } else {
                        let surv = z.norm_sf();
                        (one - surv, surv)
                    }
                }
                Kernel::Generic { inv_c } => self.dist.cdf_sf(base * inv_c[j]),
            }
        };
        let mut acc = T::zero();
        let mut prev = eval(0);
        for i in 1..=m {
            let cur = eval(i);
            // F(y/c_i) − F(y/c_{i−1}), from whichever tail is resolved.
            let diff = if prev.0 < half {
                cur.0 - prev.0
            } else {
                prev.1 - cur.1
            };
            acc = acc + self.w[i - 1] * diff;
            prev = cur;
        }
        acc.max(T::zero())
    }

    pub fn pdf(&self, y: T) -> T {
        self.pdf_inner(y, if y > T::zero() { y.ln() } else { T::zero() })
    }

    pub fn ln_pdf(&self, y: T) -> T {
        self.pdf(y).ln()
    }

    /// Density at `y` with `ln y` supplied by the caller.
    pub fn pdf_with_ln(&self, y: T, ln_y: T) -> T {
        self.pdf_inner(y, ln_y)
    }

    /// `∫₀^Y yʳ g(y) dy` (lower) or `∫_Y^∞ yʳ g(y) dy` (upper).
    pub fn partial_moment(&self, r: u32, big_y: T, tail: Tail) -> T {
        let zero = T::zero();
        if big_y <= zero {
            return match tail {
                Tail::Lower => zero,
                Tail::Upper => self.partial_moment(r, T::infinity(), Tail::Lower),
            };
        }
        let m = self.w.len();
        let r1 = T::c((r + 1) as f64);
        let yr1 = if big_y.is_infinite() {
            T::infinity()
        } else {
            big_y.powi(r as i32 + 1)
        };
        // Each band contributes c^{r+1}·J(Y/c) with J the integrated CDF (lower)
        // or integrated survival (upper) of the diameter law.
        let band = |j: usize| -> T {
            let cj = self.c[j];
            match tail {
                Tail::Lower => {
                    if j == m {
                        return yr1 / r1;
                    }
                    if big_y.is_infinite() {
                        return zero;
                    }
                    let z = big_y / cj;
                    let f = self.dist.cdf(z);
                    let mr = self.dist.partial_moment(r + 1, z, Tail::Lower);
                    (yr1 * f - cj.powi(r as i32 + 1) * mr) / r1
                }
                Tail::Upper => {
                    if j == m {
                        return zero;
                    }
                    let z = big_y / cj;
                    let ur = self.dist.partial_moment(r + 1, z, Tail::Upper);
                    let s = if big_y.is_infinite() {
                        zero
                    } else {
                        yr1 * self.dist.sf(z)
                    };
                    (cj.powi(r as i32 + 1) * ur - s) / r1
                }
            }
        };
        if big_y.is_infinite() && tail == Tail::Lower {
            // Full moment: Σ wᵢ (c_{i−1}^{r+1} − c_i^{r+1})·E(D^{r+1})/(r+1).
            let mr = self.dist.raw_moment(r + 1);
            return compensated_sum((1..=m).map(|i| {
                self.w[i - 1] * (self.c[i - 1].powi(r as i32 + 1) - self.c[i].powi(r as i32 + 1))
            })) * mr
                / r1;
        }
        let bands: Vec<T> = (0..=m).map(band).collect();
        compensated_sum((1..=m).map(|i| match tail {
            Tail::Lower => self.w[i - 1] * (bands[i] - bands[i - 1]),
            Tail::Upper => self.w[i - 1] * (bands[i - 1] - bands[i]),
        }))
    }

    /// Profile CDF `G(y)`.
    pub fn cdf(&self, y: T) -> T {
        if !(y > T::zero()) {
            return T::zero();
        }
        let lower = self.partial_moment(0, y, Tail::Lower);
        if lower < T::c(0.5) {
            lower.max(T::zero())
        } else {
            (T::one() - self.partial_moment(0, y, Tail::Upper)).min(T::one())
        }
    }

    /// Profile survival `1 − G(y)`, resolved in the upper tail.
    pub fn sf(&self, y: T) -> T {
        if !(y > T::zero()) {
            return T::one();
        }
        let upper = self.partial_moment(0, y, Tail::Upper);
        if upper < T::c(0.5) {
            upper.max(T::zero())
        } else {
            (T::one() - self.partial_moment(0, y, Tail::Lower)).min(T::one())
        }
    }

    /// `E(Yʳ)` under the approximation.
    pub fn raw_moment(&self, r: u32) -> T {
        self.partial_moment(r, T::infinity(), Tail::Lower)
    }

    /// Profile CDF by adaptive quadrature of the density.
    pub fn cdf_by_quadrature(&self, y: T, tol: Tolerance<T>) -> Result<Estimate<T>> {
        integrate(|u| self.pdf(u), T::zero(), y, tol)
    }
}

/// Profile law restricted to a bounded `s1 × s2` section, where a profile
/// is sampled only if its circumscribed axis-aligned square lies inside:
/// `g_w(y) = (s1 − y)(s2 − y)·g(y) / Z` on `0 < y < min(s1, s2)`.
#[derive(Debug, Clone)]
pub struct WeightedProfileDensity<T = f64> {
    base: ProfileDensity<T>,
    s1: T,
    s2: T,
    z: T,
}

impl<T: Scalar> WeightedProfileDensity<T> {
    pub fn new(base: ProfileDensity<T>, s1: T, s2: T) -> Result<Self> {
        if !(s1 > T::zero() && s2 > T::zero()) || !s1.is_finite() || !s2.is_finite() {
            return domain(format!("section sides must be positive, got {s1} × {s2}"));
        }
        let mut out = Self {
            base,
            s1,
            s2,
            z: T::one(),
        };
        out.z = out.unnormalized_mass(s1.min(s2));
        if !(out.z > T::zero()) {
            return domain("section too small: weighted density has no mass");
        }
        Ok(out)
    }

    /// `∫₀^Y (s1 − y)(s2 − y)·g(y) dy`.
    fn unnormalized_mass(&self, big_y: T) -> T {
        let l0 = self.base.partial_moment(0, big_y, Tail::Lower);
        let l1 = self.base.partial_moment(1, big_y, Tail::Lower);
        let l2 = self.base.partial_moment(2, big_y, Tail::Lower);
        self.s1 * self.s2 * l0 - (self.s1 + self.s2) * l1 + l2
    }

    pub fn normalizer(&self) -> T {
        self.z
    }

    pub fn upper_limit(&self) -> T {
        self.s1.min(self.s2)
    }

    pub fn weight(&self, y: T) -> T {
        (self.s1 - y) * (self.s2 - y)
    }

    pub fn base(&self) -> &ProfileDensity<T> {
        &self.base
    }

    pub fn pdf(&self, y: T) -> T {
        if !(y > T::zero() && y < self.upper_limit()) {
            return T::zero();
        }
        self.weight(y) * self.base.pdf(y) / self.z
    }

    pub fn pdf_with_ln(&self, y: T, ln_y: T) -> T {
        if !(y > T::zero() && y < self.upper_limit()) {
            return T::zero();
        }
        self.weight(y) * self.base.pdf_with_ln(y, ln_y) / self.z
    }

    pub fn cdf(&self, y: T) -> T {
        if !(y > T::zero()) {
            return T::zero();
        }
        if y >= self.upper_limit() {
            return T::one();
        }
        (self.unnormalized_mass(y) / self.z).max(T::zero()).min(T::one())
    }
}

/// The `m`-term approximation `g(y)`.
pub fn approx_profile_pdf<T: Scalar>(
    dist: &SizeDistribution<T>,
    approx: &PolygonApproximation<T>,
    y: T,
) -> T {
    ProfileDensity::new(*dist, approx).pdf(y)
}

/// The intermediate density `g*(y_s)` of the polygon-of-revolution solids.
pub fn intermediate_profile_pdf<T: Scalar>(
    dist: &SizeDistribution<T>,
    approx: &PolygonApproximation<T>,
    y_s: T,
) -> T {
    ProfileDensity::unscaled(*dist, approx).pdf(y_s)
}

pub fn profile_cdf<T: Scalar>(dist: &SizeDistribution<T>, approx: &PolygonApproximation<T>, y: T) -> T {
    ProfileDensity::new(*dist, approx).cdf(y)
}

/// Exact mean profile diameter of spheres, `(π/4)·E(D²)/E(D)`.
pub fn profile_mean<T: Scalar>(dist: &SizeDistribution<T>) -> T {
    T::FRAC_PI_4() * dist.raw_moment(2) / dist.raw_moment(1)
}

/// Exact mean squared profile diameter of spheres, `(2/3)·E(D³)/E(D)`.
pub fn profile_mean_square<T: Scalar>(dist: &SizeDistribution<T>) -> T {
    T::c(2.0 / 3.0) * dist.raw_moment(3) / dist.raw_moment(1)
}

pub fn weighted_profile_pdf<T: Scalar>(
    dist: &SizeDistribution<T>,
    approx: &PolygonApproximation<T>,
    y: T,
    s1: T,
    s2: T,
) -> Result<T> {
    Ok(WeightedProfileDensity::new(ProfileDensity::new(*dist, approx), s1, s2)?.pdf(y))
}

/// Wicksell's profile density of spheres,
/// `g(y) = (y/E(D))·∫_y^∞ f(t)/√(t² − y²) dt`,
/// integrated after the substitution `s = √(t² − y²)` which removes the
/// endpoint singularity: `g(y) = (y/E(D))·∫₀^∞ f(√(y²+s²))/√(y²+s²) ds`.
pub fn exact_profile_pdf<T: Scalar>(dist: &SizeDistribution<T>, y: T) -> Result<T> {
    exact_profile_pdf_with(dist, y, Tolerance::default())
}

pub fn exact_profile_pdf_with<T: Scalar>(
    dist: &SizeDistribution<T>,
    y: T,
    tol: Tolerance<T>,
) -> Result<T> {
    if !(y > T::zero()) {
        return Ok(T::zero());
    }
    let mean = dist.mean_diameter();
    let y2 = y * y;
    let integrand = |s: T| {
        let t = (y2 + s * s).sqrt();
        dist.pdf(t) / t
    };
    // The integral is O(1/|scale|); relative accuracy is what matters.
    let scaled_tol = Tolerance {
        abs: tol.abs * mean / y,
        ..tol
    };
    let est = integrate_to_infinity(integrand, T::zero(), mean.max(y), scaled_tol)?;
    Ok(y / mean * est.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_to_infinity;
    use std::f64::consts::PI;

    type D = SizeDistribution<f64>;
    type Poly = PolygonApproximation<f64>;

    fn grid() -> Vec<D> {
        let mut v = Vec::new();
        for &(a, b) in &[(1.0, 0.9), (1.0, 1.2), (2.0, 3.0)] {
            v.push(D::weibull(a, b).unwrap());
        }
        for &(a, b) in &[(0.0, 0.5), (0.0, 0.7), (0.5, 0.3)] {
            v.push(D::lognormal(a, b).unwrap());
        }
        for &(a, b) in &[(3.876, 2.816), (3.0, 3.0), (1.0, 0.3)] {
            v.push(D::positive_normal(a, b).unwrap());
        }
        v
    }

    fn tight() -> Tolerance<f64> {
        Tolerance {
            abs: 1e-11,
            rel: 1e-11,
            max_subdivisions: 8000,
        }
    }

    #[test]
    fn coefficient_examples() {
        assert!(Poly::new(0).is_err());
        let one = Poly::new(1).unwrap();
        assert_eq!(one.p(), &[1.0]);
        assert_eq!(one.x(), &[1.0, 0.0]);
        assert!((one.a() - PI / 2.0).abs() < 1e-15);

        let two = Poly::new(2).unwrap();
        let s = (PI / 4.0).sin();
        assert!((two.p()[0] - s).abs() < 1e-15 && (two.p()[1] - (1.0 - s)).abs() < 1e-15);
        assert!((two.x()[1] - (PI / 4.0).cos()).abs() < 1e-15);
        assert_eq!(two.x()[2], 0.0);

        let fifteen = Poly::new(15).unwrap();
        let expect = PI / (30.0 * (PI / 30.0).sin());
        assert!((fifteen.a() - expect).abs() < 1e-15);
        assert!((fifteen.a() - 1.001830).abs() < 1e-6);
    }

    #[test]
    fn coefficient_invariants() {
        for m in [1usize, 2, 3, 8, 15, 100, 1000] {
            let poly = Poly::new(m).unwrap();
            assert!(poly.p().iter().all(|&p| p > 0.0));
            assert!((poly.p().iter().sum::<f64>() - 1.0).abs() < 1e-13);
            assert!(poly.x().windows(2).all(|w| w[0] > w[1]));
            assert!(poly.a() >= 1.0);
        }
    }

    #[test]
    fn conditional_mean_of_polygon_profile() {
        // For fixed D = t, Σ (x_{i−1}+x_i)/2·t·p_i = (m t/2)·sin(π/2m).
        let t = 1.7;
        for m in [1usize, 2, 5, 15, 64] {
            let poly = Poly::new(m).unwrap();
            let lhs: f64 = (1..=m)
                .map(|i| 0.5 * (poly.x()[i - 1] + poly.x()[i]) * t * poly.p()[i - 1])
                .sum();
            let rhs = m as f64 * t / 2.0 * (PI / (2.0 * m as f64)).sin();
            assert!((lhs - rhs).abs() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn single_term_reduces_to_survival() {
        let w = D::weibull(1.0, 1.0).unwrap();
        let poly = Poly::new(1).unwrap();
        // g*(y) = (1 − F(y))/E(D)
        assert!((intermediate_profile_pdf(&w, &poly, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        let a = PI / 2.0;
        let expect = (2.0 / PI) * (-2.0 / PI).exp();
        assert!((approx_profile_pdf(&w, &poly, 1.0) - expect).abs() < 1e-15);
        assert!((approx_profile_pdf(&w, &poly, 1.0) - 0.336821).abs() < 1e-6);
        for d in grid() {
            for &y in &[0.1, 0.7, 2.0] {
                let direct = d.sf(y / a) / (a * d.mean_diameter());
                assert!((approx_profile_pdf(&d, &poly, y) - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn scaling_relation_is_exact() {
        use rand::Rng;
        let mut rng = crate::rng::stream(3, 0);
        let poly = Poly::new(15).unwrap();
        for d in grid() {
            let g = ProfileDensity::new(d, &poly);
            let gs = ProfileDensity::unscaled(d, &poly);
            for _ in 0..50 {
                let y = rng.gen::<f64>() * 3.0 * d.mean_diameter();
                let lhs = g.pdf(y);
                let rhs = gs.pdf(y / poly.a()) / poly.a();
                assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1e-3), "{d} y={y}");
            }
        }
    }

    #[test]
    fn normalization_and_mean_by_quadrature() {
        for d in grid() {
            for m in [1usize, 2, 8, 15, 100] {
                let poly = Poly::new(m).unwrap();
                for g in [ProfileDensity::new(d, &poly), ProfileDensity::unscaled(d, &poly)] {
                    let scale = d.mean_diameter();
                    let total = integrate_to_infinity(|y| g.pdf(y), 0.0, scale, tight()).unwrap().value;
                    assert!((total - 1.0).abs() < 1e-6, "{d} m={m}: {total}");
                }
                let g = ProfileDensity::new(d, &poly);
                let mean = integrate_to_infinity(|y| y * g.pdf(y), 0.0, d.mean_diameter(), tight())
                    .unwrap()
                    .value;
                assert!((mean - profile_mean(&d)).abs() < 1e-6, "{d} m={m}");
                assert!((g.raw_moment(1) - profile_mean(&d)).abs() < 1e-12);
                assert!((g.raw_moment(0) - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn profile_mean_examples() {
        let w = D::weibull(1.0, 1.0).unwrap();
        assert!((profile_mean(&w) - PI / 2.0).abs() < 1e-14);
        let l = D::lognormal(0.0, 0.7).unwrap();
        // E(D²)/E(D) = e^{2σ²}/e^{σ²/2} = e^{1.5σ²}
        assert!((profile_mean(&l) - PI / 4.0 * 0.735f64.exp()).abs() < 1e-12);
        let narrow = D::lognormal(1.5f64.ln(), 1e-7).unwrap();
        assert!((profile_mean(&narrow) - PI / 4.0 * 1.5).abs() < 1e-9);
    }

    #[test]
    fn closed_form_cdf_matches_quadrature() {
        let poly = Poly::new(15).unwrap();
        for d in grid() {
            let g = ProfileDensity::new(d, &poly);
            assert_eq!(g.cdf(0.0), 0.0);
            let mut last = 0.0;
            for j in 1..=30 {
                let y = j as f64 * 0.15 * d.mean_diameter();
                let c = g.cdf(y);
                let q = g.cdf_by_quadrature(y, tight()).unwrap().value;
                assert!((c - q).abs() < 1e-9, "{d} y={y}: {c} vs {q}");
                assert!((c + g.sf(y) - 1.0).abs() < 1e-12);
                assert!(c >= last);
                last = c;
            }
            assert!((g.cdf(1e6 * d.mean_diameter()) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn truncated_profile_moments_match_quadrature() {
        let poly = Poly::new(8).unwrap();
        for d in grid() {
            let g = ProfileDensity::new(d, &poly);
            let y = 1.3 * d.mean_diameter();
            for r in 0..=2u32 {
                let q = integrate(|u| u.powi(r as i32) * g.pdf(u), 0.0, y, tight()).unwrap().value;
                let lo = g.partial_moment(r, y, Tail::Lower);
                let hi = g.partial_moment(r, y, Tail::Upper);
                assert!((lo - q).abs() < 1e-9 * g.raw_moment(r).max(1.0), "{d} r={r}");
                assert!((lo + hi - g.raw_moment(r)).abs() < 1e-10 * g.raw_moment(r).max(1.0));
            }
        }
    }

    #[test]
    fn exact_density_is_normalized() {
        for d in grid() {
            let total = integrate_to_infinity(
                |y| exact_profile_pdf(&d, y).unwrap(),
                0.0,
                d.mean_diameter(),
                Tolerance {
                    abs: 1e-8,
                    rel: 1e-8,
                    max_subdivisions: 4000,
                },
            )
            .unwrap()
            .value;
            assert!((total - 1.0).abs() < 1e-6, "{d}: {total}");
        }
    }

    #[test]
    fn converges_to_exact_density() {
        for d in grid() {
            let ys: Vec<f64> = (1..40).map(|j| j as f64 * 0.08 * d.mean_diameter()).collect();
            let exact: Vec<f64> = ys.iter().map(|&y| exact_profile_pdf(&d, y).unwrap()).collect();
            let sup = |m: usize| {
                let g = ProfileDensity::new(d, &Poly::new(m).unwrap());
                ys.iter()
                    .zip(&exact)
                    .map(|(&y, &e)| (g.pdf(y) - e).abs())
                    .fold(0.0, f64::max)
            };
            let errs: Vec<f64> = [8usize, 15, 100, 1000].iter().map(|&m| sup(m)).collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "{d}: {errs:?}");
            assert!(errs[3] < 1e-5, "{d}: {errs:?}");
        }
    }

    #[test]
    fn weighted_density_limits() {
        let d = D::weibull(1.0, 1.0).unwrap();
        let poly = Poly::new(15).unwrap();
        let g = ProfileDensity::new(d, &poly);
        let huge = WeightedProfileDensity::new(g.clone(), 1e7, 1e7).unwrap();
        for &y in &[0.1, 1.0, 3.0] {
            assert!((huge.pdf(y) - g.pdf(y)).abs() < 1e-6 * g.pdf(y));
        }
        let wd = WeightedProfileDensity::new(g.clone(), 5.0, 4.0).unwrap();
        assert_eq!(wd.pdf(4.0), 0.0);
        assert_eq!(wd.pdf(4.5), 0.0);
        let total = integrate(|y| wd.pdf(y), 0.0, 4.0, tight()).unwrap().value;
        assert!((total - 1.0).abs() < 1e-6);
        assert!((wd.cdf(2.0) - integrate(|y| wd.pdf(y), 0.0, 2.0, tight()).unwrap().value).abs() < 1e-9);
        assert!(WeightedProfileDensity::new(g, 0.0, 1.0).is_err());
        assert!(weighted_profile_pdf(&d, &poly, 1.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn f32_density() {
        let d = SizeDistribution::<f32>::weibull(1.0, 0.9).unwrap();
        let poly = PolygonApproximation::<f32>::new(8).unwrap();
        let v = approx_profile_pdf(&d, &poly, 1.0);
        assert!((v - 0.37034).abs() < 5e-5, "{v}");
    }
}
