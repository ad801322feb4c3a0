//! Point estimation of diameter-law parameters from profile samples:
//! maximum likelihood (ordinary, censored, weighted), method of moments and
//! minimum-distance estimation.

mod curvature;
mod likelihood;
mod mde;
mod mle;
mod mom;
mod param;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::distributions::{Family, SizeDistribution};
use crate::error::{domain, Error, Result};
use crate::optimize::SimplexOptions;
use crate::profile_density::PolygonApproximation;

pub use curvature::{observed_covariance, refine_mle};
pub use likelihood::{log_likelihood, LikelihoodEvaluator, LikelihoodMode};
pub use mde::{cramer_von_mises, fit_mde, MdeDistance, MdeOptions};
pub use mle::{fit_mle, fit_mle_censored, fit_mle_weighted};
pub use mom::{fit_mom, fit_mom_from_moments, lognormal_moment_solution, weibull_moment_ratio};

/// How profile areas are converted to diameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AreaConvention {
    /// Diameter of the circle of equal area, `2·√(S/π)`.
    #[default]
    EqualArea,
    /// `√(S/(4π))`, kept only to reproduce results computed with that
    /// expression.
    Literal,
}

pub fn effective_diameters(areas: &[f64]) -> Result<Vec<f64>> {
    effective_diameters_with(areas, AreaConvention::EqualArea)
}

pub fn effective_diameters_with(areas: &[f64], convention: AreaConvention) -> Result<Vec<f64>> {
    areas
        .iter()
        .map(|&s| {
            if !(s > 0.0) || !s.is_finite() {
                return domain(format!("profile area must be positive, got {s}"));
            }
            Ok(match convention {
                AreaConvention::EqualArea => 2.0 * (s / std::f64::consts::PI).sqrt(),
                AreaConvention::Literal => (s / (4.0 * std::f64::consts::PI)).sqrt(),
            })
        })
        .collect()
}

/// Measured profile diameters from one section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    interior: Vec<f64>,
    censored: Vec<f64>,
    section: Option<(f64, f64)>,
    #[serde(default)]
    unit: String,
}

impl ProfileSample {
    pub fn new(interior: Vec<f64>, censored: Vec<f64>, section: Option<(f64, f64)>) -> Result<Self> {
        for &y in interior.iter().chain(&censored) {
            if !(y > 0.0) || !y.is_finite() {
                return domain(format!("profile diameters must be positive, got {y}"));
            }
        }
        if let Some((s1, s2)) = section {
            if !(s1 > 0.0 && s2 > 0.0) || !s1.is_finite() || !s2.is_finite() {
                return domain(format!("section sides must be positive, got {s1} × {s2}"));
            }
            let limit = s1.min(s2);
            if let Some(&y) = interior.iter().find(|&&y| y >= limit) {
                return domain(format!("interior diameter {y} does not fit the {s1} × {s2} section"));
            }
        }
        Ok(Self {
            interior,
            censored,
            section,
            unit: String::new(),
        })
    }

    pub fn from_diameters(interior: Vec<f64>) -> Result<Self> {
        Self::new(interior, Vec::new(), None)
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    pub fn censored(&self) -> &[f64] {
        &self.censored
    }

    pub fn section(&self) -> Option<(f64, f64)> {
        self.section
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    /// Number of interior profiles.
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    /// The same sample in units `c` times smaller (values multiplied by `c`).
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        let scale = |v: &[f64]| v.iter().map(|y| y * c).collect();
        let mut out = Self::new(
            scale(&self.interior),
            scale(&self.censored),
            self.section.map(|(a, b)| (a * c, b * c)),
        )?;
        out.unit = self.unit.clone();
        Ok(out)
    }

    pub(crate) fn mean_and_mean_square(&self) -> (f64, f64) {
        let n = self.interior.len() as f64;
        let mean = crate::scalar::compensated_sum(self.interior.iter().copied()) / n;
        let sq = crate::scalar::compensated_sum(self.interior.iter().map(|y| y * y)) / n;
        (mean, sq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ml,
    MlCensored,
    MlWeighted,
    Mom,
    Mde,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ml,
        Method::MlCensored,
        Method::MlWeighted,
        Method::Mom,
        Method::Mde,
    ];

    /// Tag used in reports and JSON output.
    pub fn tag(self) -> &'static str {
        match self {
            Method::Ml => "ML",
            Method::MlCensored => "ML_censored",
            Method::MlWeighted => "ML_weighted",
            Method::Mom => "MoM",
            Method::Mde => "MDE",
        }
    }

    pub fn likelihood_mode(self) -> Option<LikelihoodMode> {
        match self {
            Method::Ml => Some(LikelihoodMode::Ordinary),
            Method::MlCensored => Some(LikelihoodMode::Censored),
            Method::MlWeighted => Some(LikelihoodMode::Weighted),
            Method::Mom | Method::Mde => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "ml" | "mle" => Ok(Method::Ml),
            "ml-censored" | "censored" => Ok(Method::MlCensored),
            "ml-weighted" | "weighted" => Ok(Method::MlWeighted),
            "mom" => Ok(Method::Mom),
            "mde" => Ok(Method::Mde),
            other => domain(format!("unknown method '{other}'")),
        }
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

/// Conditions worth reporting alongside an estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FitFlags {
    /// The shape parameter ended at the edge of the search domain.
    pub at_boundary: bool,
    /// The log-normal moment estimate of σ² was clamped at zero.
    pub clamped: bool,
    /// A one-dimensional moment search ended on its bracket.
    pub search_bound_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub dist: SizeDistribution,
    pub method: Method,
    /// Maximized log-likelihood (likelihood methods only).
    pub log_likelihood: Option<f64>,
    /// Objective value at the estimate for distance methods.
    pub distance: Option<f64>,
    pub m_used: usize,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub flags: FitFlags,
}

impl FitResult {
    pub fn family(&self) -> Family {
        self.dist.family()
    }

    pub fn mean_diameter(&self) -> f64 {
        self.dist.mean_diameter()
    }
}

#[derive(Serialize)]
struct FitResultRepr<'a> {
    family: Family,
    parameters: serde_json::Map<String, serde_json::Value>,
    method: Method,
    log_likelihood: Option<f64>,
    distance: Option<f64>,
    m: usize,
    converged: bool,
    iterations: usize,
    evaluations: usize,
    flags: &'a FitFlags,
    mean_diameter: f64,
}

impl Serialize for FitResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (a, b) = self.dist.family().param_names();
        let mut parameters = serde_json::Map::new();
        parameters.insert(a.into(), self.dist.scale().into());
        parameters.insert(b.into(), self.dist.shape().into());
        FitResultRepr {
            family: self.dist.family(),
            parameters,
            method: self.method,
            log_likelihood: self.log_likelihood,
            distance: self.distance,
            m: self.m_used,
            converged: self.converged,
            iterations: self.iterations,
            evaluations: self.evaluations,
            flags: &self.flags,
            mean_diameter: self.dist.mean_diameter(),
        }
        .serialize(s)
    }
}

/// Options shared by the numerical fitters.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Number of simplex starts (the moment estimate plus perturbations).
    pub starts: usize,
    pub simplex: SimplexOptions,
    pub mde: MdeOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            simplex: SimplexOptions {
                max_evaluations: 1500,
                f_rel_tol: 1e-8,
                f_abs_tol: 1e-9,
                x_tol: 1e-6,
            },
            mde: MdeOptions::default(),
        }
    }
}

impl FitOptions {
    /// Fewer starts, for replicate studies where the moment start is close.
    pub fn fast() -> Self {
        Self {
            starts: 2,
            ..Self::default()
        }
    }
}

/// Dispatches to the fitter for `method`.
pub fn fit(
    sample: &ProfileSample,
    family: Family,
    method: Method,
    approx: &PolygonApproximation,
    options: &FitOptions,
) -> Result<FitResult> {
    match method {
        Method::Ml => fit_mle(sample, family, approx, options),
        Method::MlCensored => fit_mle_censored(sample, family, approx, options),
        Method::MlWeighted => fit_mle_weighted(sample, family, approx, options),
        Method::Mom => fit_mom(sample, family),
        Method::Mde => fit_mde(sample, family, approx, options),
    }
}

pub(crate) fn require_interior(sample: &ProfileSample, min: usize) -> Result<()> {
    if sample.len() < min {
        return domain(format!(
            "need at least {min} interior profiles, got {}",
            sample.len()
        ));
    }
    Ok(())
}
