use std::f64::consts::PI;

use super::likelihood::{LikelihoodEvaluator, LikelihoodMode};
use super::mom::fit_mom;
use super::param;
use super::{require_interior, FitFlags, FitOptions, FitResult, Method, ProfileSample};
use crate::distributions::{Family, SizeDistribution};
use crate::error::{domain, Error, Result};
use crate::optimize::nelder_mead;
use crate::profile_density::PolygonApproximation;

/// Maximum-likelihood fit from interior profiles.
pub fn fit_mle(
    sample: &ProfileSample,
    family: Family,
    approx: &PolygonApproximation,
    options: &FitOptions,
) -> Result<FitResult> {
    fit_likelihood(sample, family, approx, options, LikelihoodMode::Ordinary)
}

/// Maximum-likelihood fit treating edge-cut profiles as right-censored.
pub fn fit_mle_censored(
    sample: &ProfileSample,
    family: Family,
    approx: &PolygonApproximation,
    options: &FitOptions,
) -> Result<FitResult> {
    fit_likelihood(sample, family, approx, options, LikelihoodMode::Censored)
}

/// Maximum-likelihood fit under the edge-effect weighted density.
pub fn fit_mle_weighted(
    sample: &ProfileSample,
    family: Family,
    approx: &PolygonApproximation,
    options: &FitOptions,
) -> Result<FitResult> {
    fit_likelihood(sample, family, approx, options, LikelihoodMode::Weighted)
}

fn fit_likelihood(
    sample: &ProfileSample,
    family: Family,
    approx: &PolygonApproximation,
    options: &FitOptions,
    mode: LikelihoodMode,
) -> Result<FitResult> {
    if mode == LikelihoodMode::Censored {
        require_interior(sample, 1)?;
        if sample.len() + sample.censored().len() < 3 {
            return domain("need at least 3 interior and censored profiles");
        }
    } else {
        require_interior(sample, 3)?;
    }
    let lik = LikelihoodEvaluator::new(sample, approx, mode)?;
    let start = start_point(sample, family)?;
    let search = minimize(family, start, options, |d| -lik.eval(d));
    let method = match mode {
        LikelihoodMode::Ordinary => Method::Ml,
        LikelihoodMode::Censored => Method::MlCensored,
        LikelihoodMode::Weighted => Method::MlWeighted,
    };
    if !search.f.is_finite() {
        return Err(Error::Fit(format!(
            "{method} {}: no parameter point with finite likelihood",
            family.name()
        )));
    }
    let log_likelihood = -search.f;
    Ok(search.into_result(method, approx.m(), Some(log_likelihood), None))
}

/// Moment estimate pulled into the well-behaved part of the domain.
pub(crate) fn start_point(sample: &ProfileSample, family: Family) -> Result<[f64; 2]> {
    let u = match fit_mom(sample, family) {
        Ok(fit) => param::encode(&fit.dist),
        Err(_) => {
            let (mean, _) = sample.mean_and_mean_square();
            let d = 4.0 * mean / PI;
            match family {
                Family::LogNormal => [d.ln(), 0.5f64.ln()],
                Family::Weibull | Family::PositiveNormal => [d.ln(), (0.5 * d).ln()],
            }
        }
    };
    if !u.iter().all(|v| v.is_finite()) {
        return domain("sample moments are not finite");
    }
    Ok(param::tame_start(family, u))
}

pub(crate) struct Search {
    pub family: Family,
    pub u: [f64; 2],
    pub f: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub boundary: bool,
}

impl Search {
    pub fn dist(&self) -> SizeDistribution {
        param::decode(self.family, &self.u).expect("search stays in the domain")
    }

    pub fn into_result(
        self,
        method: Method,
        m: usize,
        log_likelihood: Option<f64>,
        distance: Option<f64>,
    ) -> FitResult {
        FitResult {
            dist: self.dist(),
            method,
            log_likelihood,
            distance,
            m_used: m,
            converged: self.converged && !self.boundary,
            iterations: self.iterations,
            evaluations: self.evaluations,
            flags: FitFlags {
                at_boundary: self.boundary,
                ..FitFlags::default()
            },
        }
    }
}

/// Multi-start simplex minimization followed by a restart from the best point.
pub(crate) fn minimize<F>(family: Family, start: [f64; 2], options: &FitOptions, objective: F) -> Search
where
    F: Fn(&SizeDistribution) -> f64,
{
    let f = |u: &[f64]| match param::decode(family, u) {
        Some(d) => {
            let v = objective(&d);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        }
        None => f64::INFINITY,
    };
    let step = [0.15, 0.15];
    let mut evaluations = 0;
    let mut iterations = 0;
    let mut best: Option<([f64; 2], f64, bool)> = None;
    for x0 in param::starts(start, options.starts) {
        let res = nelder_mead(f, &x0, &step, options.simplex);
        evaluations += res.evaluations;
        iterations += res.iterations;
        if best.as_ref().map_or(true, |b| res.f < b.1) {
            best = Some(([res.x[0], res.x[1]], res.f, res.converged));
        }
    }
    let (u, fbest, _) = best.expect("at least one start");
    let polish = nelder_mead(f, &u, &[0.02, 0.02], options.simplex);
    evaluations += polish.evaluations;
    iterations += polish.iterations;
    let (u, fv) = if polish.f <= fbest {
        ([polish.x[0], polish.x[1]], polish.f)
    } else {
        (u, fbest)
    };
    let stable = (fbest - fv).abs() <= 1e-6 * (1.0 + fv.abs());
    Search {
        family,
        u,
        f: fv,
        evaluations,
        iterations,
        converged: polish.converged && stable && fv.is_finite(),
        boundary: param::at_boundary(family, &u),
    }
}
