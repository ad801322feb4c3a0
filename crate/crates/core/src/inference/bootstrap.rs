use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{Family, Functional, SizeDistribution};
use crate::error::{domain, Error, Result};
use crate::estimators::{fit, FitOptions, FitResult, Method, ProfileSample};
use crate::profile_density::{PolygonApproximation, ProfileDensity, WeightedProfileDensity};
use crate::rng::stream;
use crate::scalar::compensated_sum;
use crate::simulation::{simulate_bounded_section_with, simulate_profiles_with};

/// Share of failed replicates above which a bootstrap result is flagged.
pub const MAX_FAILURE_SHARE: f64 = 0.10;

/// Default replicate count; the weighted fit defaults to more replicates.
pub fn default_boot_count(method: Method) -> usize {
    match method {
        Method::MlWeighted => 2000,
        _ => 1000,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapInterval {
    pub functional: Functional,
    pub estimate: f64,
    pub bias: f64,
    /// `2·θ̂ − mean(θ̂*)`.
    pub corrected: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub fit: FitResult,
    pub n_boot: usize,
    pub p: f64,
    pub successes: usize,
    pub failures: usize,
    /// More than 10% of replicate fits failed.
    pub flagged: bool,
    pub intervals: Vec<BootstrapInterval>,
}

impl BootstrapResult {
    pub fn interval(&self, functional: Functional) -> Option<&BootstrapInterval> {
        self.intervals.iter().find(|i| i.functional == functional)
    }
}

/// Parametric bootstrap of `method` with additive bias correction and
/// percentile intervals of the bias-shifted replicates.
///
/// Replicates reproduce the original sample size. Censored and weighted
/// fits redraw a bounded section of the original size whose expected
/// interior count matches the sample.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_estimate(
    sample: &ProfileSample,
    family: Family,
    method: Method,
    n_boot: usize,
    p: f64,
    seed: u64,
    approx: &PolygonApproximation,
    options: &FitOptions,
) -> Result<BootstrapResult> {
    if n_boot < 200 {
        return domain(format!("bootstrap needs at least 200 replicates, got {n_boot}"));
    }
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("coverage must lie in (0, 1), got {p}"));
    }
    let original = fit(sample, family, method, approx, options)?;
    let n = sample.len();
    let section = match method {
        Method::MlCensored | Method::MlWeighted => {
            let (s1, s2) = sample
                .section()
                .ok_or_else(|| Error::Domain(format!("{method} bootstrap needs the section dimensions")))?;
            Some((s1, s2, expected_centres(&original.dist, approx, n, s1, s2)?))
        }
        _ => None,
    };
    let replicates: Vec<Option<SizeDistribution>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let s = match section {
                None => ProfileSample::from_diameters(simulate_profiles_with(&original.dist, n, &mut rng)).ok()?,
                Some((s1, s2, centres)) => {
                    simulate_bounded_section_with(&original.dist, centres, s1, s2, &mut rng).ok()?.0
                }
            };
            fit(&s, family, method, approx, options)
                .ok()
                .filter(|f| f.converged)
                .map(|f| f.dist)
        })
        .collect();
    let ok: Vec<&SizeDistribution> = replicates.iter().flatten().collect();
    let failures = n_boot - ok.len();
    if ok.len() < 2 {
        return Err(Error::Fit(format!("{failures} of {n_boot} bootstrap fits failed")));
    }
    let flagged = failures as f64 > MAX_FAILURE_SHARE * n_boot as f64;
    if flagged {
        log::warn!("{failures} of {n_boot} bootstrap fits failed");
    }
    let intervals = Functional::ALL
        .into_iter()
        .filter_map(|f| {
            let estimate = f.of(&original.dist);
            let mut v: Vec<f64> = ok.iter().map(|d| f.of(d)).filter(|x| x.is_finite()).collect();
            if v.len() < 2 || !estimate.is_finite() {
                return None;
            }
            let bias = compensated_sum(v.iter().copied()) / v.len() as f64 - estimate;
            for x in &mut v {
                *x -= bias;
            }
            v.sort_by(f64::total_cmp);
            Some(BootstrapInterval {
                functional: f,
                estimate,
                bias,
                corrected: estimate - bias,
                lo: quantile(&v, 0.5 * (1.0 - p)),
                hi: quantile(&v, 0.5 * (1.0 + p)),
            })
        })
        .collect();
    Ok(BootstrapResult {
        fit: original,
        n_boot,
        p,
        successes: ok.len(),
        failures,
        flagged,
        intervals,
    })
}

/// Expected profile centres per section giving `n` interior profiles on
/// average under `dist`.
fn expected_centres(
    dist: &SizeDistribution,
    approx: &PolygonApproximation,
    n: usize,
    s1: f64,
    s2: f64,
) -> Result<f64> {
    let w = WeightedProfileDensity::new(ProfileDensity::new(dist.clone(), approx), s1, s2)?;
    Ok(n as f64 * s1 * s2 / w.normalizer())
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
