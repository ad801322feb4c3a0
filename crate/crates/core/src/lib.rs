//! Sphere-size distributions from planar profile measurements.
//!
//! Spheres with a parametric diameter law (Weibull, log-normal, or a
//! normal truncated at zero) are cut by a plane; the observed profile
//! diameters follow the Wicksell transform of that law. This crate
//! evaluates the profile density through a polygon-of-revolution
//! approximation with closed-form CDF and moments, fits the diameter law by
//! maximum likelihood, moments or minimum distance, and provides
//! likelihood-ratio regions, bootstrap intervals, AIC ranking and
//! simulation tools.
//!
//! The density layer ([`distributions`], [`profile_density`]) is generic over
//! the float type; estimation, inference and simulation work in `f64`.
//!
//! ```
//! use wicksell::{PolygonApproximation, ProfileDensity, SizeDistribution};
//!
//! let dist = SizeDistribution::weibull(1.0, 1.2).unwrap();
//! let g = ProfileDensity::new(dist, &PolygonApproximation::new(15).unwrap());
//! assert!((g.pdf(1.0) - 0.50450).abs() < 5e-5);
//! ```

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod optimize;
pub mod profile_density;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod simulation;

pub use distributions::{Family, Functional, Tail};
pub use error::{Error, Result};
pub use estimators::{FitOptions, FitResult, Method, ProfileSample};
pub use profile_density::Scaling;

pub type SizeDistribution = distributions::SizeDistribution<f64>;
pub type PolygonApproximation = profile_density::PolygonApproximation<f64>;
pub type ProfileDensity = profile_density::ProfileDensity<f64>;
pub type WeightedProfileDensity = profile_density::WeightedProfileDensity<f64>;

pub type SizeDistributionF32 = distributions::SizeDistribution<f32>;
pub type PolygonApproximationF32 = profile_density::PolygonApproximation<f32>;
pub type ProfileDensityF32 = profile_density::ProfileDensity<f32>;
pub type WeightedProfileDensityF32 = profile_density::WeightedProfileDensity<f32>;
