use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::critical::critical_value_for;
use crate::distributions::{Family, Functional, SizeDistribution};
use crate::error::{domain, Error, Result};
use crate::estimators::{fit, observed_covariance, FitOptions, FitResult, LikelihoodEvaluator, LikelihoodMode, ProfileSample};
use crate::profile_density::PolygonApproximation;
use crate::rng::{stream, Rng};
use crate::simulation::simulate_profiles_with;

/// How the proposal spread around the MLE is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalScale {
    /// Parameter stdevs from a small parametric bootstrap of the fit.
    PilotBootstrap { replicates: usize },
    /// Parameter stdevs from the inverse observed information.
    ObservedInformation,
    /// Given parameter stdevs.
    Fixed([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOptions {
    pub p: f64,
    pub n_points: usize,
    pub seed: u64,
    pub proposal: ProposalScale,
    /// Proposal stdev as a multiple of the parameter stdev.
    pub inflation: f64,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self {
            p: 0.95,
            n_points: 50_000,
            seed: 0,
            proposal: ProposalScale::PilotBootstrap { replicates: 200 },
            inflation: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionPoint {
    pub params: [f64; 2],
    pub log_likelihood: f64,
    pub deviance: f64,
}

/// Parameter points whose deviance from the maximum stays under the
/// two-parameter critical value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceRegion {
    pub family: Family,
    pub mode: LikelihoodMode,
    pub n: usize,
    pub p: f64,
    pub critical_value: f64,
    pub mle: [f64; 2],
    pub mle_log_likelihood: f64,
    /// Accepted points, the MLE first.
    pub accepted: Vec<RegionPoint>,
    /// Ranges of the standard functionals at level `p`.
    pub derived_ranges: BTreeMap<Functional, [f64; 2]>,
    pub proposal_sd: [f64; 2],
    pub evaluated: usize,
    pub retried: bool,
    /// Too few points were accepted even after the retry.
    pub degenerate: bool,
    pub notes: Vec<String>,
}

impl ConfidenceRegion {
    pub fn mle_dist(&self) -> SizeDistribution {
        SizeDistribution::new(self.family, self.mle[0], self.mle[1]).expect("MLE is a valid law")
    }

    /// Accepted points as `scale, shape, logL, deviance` rows.
    pub fn to_tsv(&self) -> String {
        let (a, b) = self.family.param_names();
        let mut out = format!("{a}\t{b}\tlog_likelihood\tdeviance\n");
        for pt in &self.accepted {
            let _ = writeln!(
                out,
                "{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}",
                pt.params[0], pt.params[1], pt.log_likelihood, pt.deviance
            );
        }
        out
    }

    fn dist_at(&self, params: [f64; 2]) -> Option<SizeDistribution> {
        SizeDistribution::new(self.family, params[0], params[1]).ok()
    }
}

/// Range of `functional` over region points under the one-parameter critical
/// value at level `p`.
pub fn scalar_range(region: &ConfidenceRegion, functional: Functional, p: f64) -> Result<[f64; 2]> {
    let shape = region.mle[1];
    let limit = critical_value_for(region.family, shape, p, region.n, 1, 0)?;
    if limit > region.critical_value + 1e-12 {
        return domain(format!(
            "level {p} needs deviance up to {limit}, beyond the region's {}",
            region.critical_value
        ));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for pt in region.accepted.iter().filter(|pt| pt.deviance <= limit) {
        if let Some(d) = region.dist_at(pt.params) {
            let v = functional.of(&d);
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if lo > hi {
        return Err(Error::EmptyRegion);
    }
    Ok([lo, hi])
}

fn mode_of(fit: &FitResult) -> Result<LikelihoodMode> {
    fit.method
        .likelihood_mode()
        .ok_or_else(|| Error::Domain(format!("likelihood region needs a likelihood fit, got {}", fit.method)))
}

/// Region around the fitted MLE by sampling candidate points from
/// independent normals centred on it (truncated to positive values for
/// positive parameters).
pub fn likelihood_ratio_region(
    sample: &ProfileSample,
    fit: &FitResult,
    approx: &PolygonApproximation,
    options: &RegionOptions,
) -> Result<ConfidenceRegion> {
    let mode = mode_of(fit)?;
    if !fit.converged {
        return domain("likelihood region needs a converged fit");
    }
    if options.n_points < 1000 {
        return domain(format!("region sampling needs at least 1000 points, got {}", options.n_points));
    }
    let family = fit.family();
    let n = sample.len();
    let lik = LikelihoodEvaluator::new(sample, approx, mode)?;
    let critical = critical_value_for(family, fit.dist.shape(), options.p, n, 2, options.seed)?;
    let mut notes = Vec::new();
    if mode == LikelihoodMode::Censored {
        notes.push("critical values of the ordinary likelihood reused for the censored likelihood".to_string());
    }
    let sd = proposal_sd(sample, fit, approx, options)?;
    let centre = fit.dist.params();
    let mut mle_ll = lik.eval(&fit.dist);
    let mut mle = centre;
    let mut rng = stream(options.seed, 0);
    let mut points = evaluate(&lik, family, &draw_points(&mut rng, family, centre, sd, options.inflation, options.n_points));
    let mut evaluated = points.len();
    let min_accepted = (options.n_points / 1000).max(10);
    let count_inside = |pts: &[(f64, [f64; 2])], best: f64| {
        pts.iter().filter(|(ll, _)| 2.0 * (best - ll) <= critical).count()
    };
    let best_seen = |pts: &[(f64, [f64; 2])]| pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut retried = false;
    if count_inside(&points, mle_ll.max(best_seen(&points))) < min_accepted {
        // Mixed retry: half narrower and half wider than the first proposal.
        retried = true;
        let half = options.n_points / 2;
        let narrow = draw_points(&mut rng, family, centre, sd, options.inflation / 5.0, half);
        let wide = draw_points(&mut rng, family, centre, sd, options.inflation * 5.0, options.n_points - half);
        let more = evaluate(&lik, family, &[narrow, wide].concat());
        evaluated += more.len();
        points.extend(more);
    }
    let top = best_seen(&points);
    if top > mle_ll + 1e-9 {
        let (ll, params) = *points.iter().find(|p| p.0 == top).expect("maximum is attained");
        notes.push(format!("sampled point improved the fitted log-likelihood by {:.3e}", ll - mle_ll));
        mle_ll = ll;
        mle = params;
    }
    let mut accepted = vec![RegionPoint {
        params: mle,
        log_likelihood: mle_ll,
        deviance: 0.0,
    }];
    accepted.extend(points.iter().filter_map(|&(ll, params)| {
        let deviance = (2.0 * (mle_ll - ll)).max(0.0);
        (deviance <= critical && params != mle).then_some(RegionPoint {
            params,
            log_likelihood: ll,
            deviance,
        })
    }));
    let degenerate = accepted.len() - 1 < min_accepted;
    if degenerate {
        log::warn!("likelihood region kept only {} sampled points", accepted.len() - 1);
    }
    let mut region = ConfidenceRegion {
        family,
        mode,
        n,
        p: options.p,
        critical_value: critical,
        mle,
        mle_log_likelihood: mle_ll,
        accepted,
        derived_ranges: BTreeMap::new(),
        proposal_sd: sd,
        evaluated,
        retried,
        degenerate,
        notes,
    };
    for f in Functional::ALL {
        if let Ok(r) = scalar_range(&region, f, options.p) {
            region.derived_ranges.insert(f, r);
        }
    }
    Ok(region)
}

fn evaluate(lik: &LikelihoodEvaluator<'_>, family: Family, params: &[[f64; 2]]) -> Vec<(f64, [f64; 2])> {
    params
        .par_iter()
        .map(|&pt| {
            let ll = SizeDistribution::new(family, pt[0], pt[1]).map_or(f64::NEG_INFINITY, |d| lik.eval(&d));
            (ll, pt)
        })
        .collect()
}

fn draw_points(rng: &mut Rng, family: Family, centre: [f64; 2], sd: [f64; 2], inflation: f64, count: usize) -> Vec<[f64; 2]> {
    let positive = [family != Family::LogNormal, true];
    (0..count)
        .map(|_| {
            let mut pt = [0.0; 2];
            for j in 0..2 {
                pt[j] = loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let v = centre[j] + inflation * sd[j] * z;
                    if !positive[j] || v > 0.0 {
                        break v;
                    }
                };
            }
            pt
        })
        .collect()
}

fn proposal_sd(
    sample: &ProfileSample,
    fit: &FitResult,
    approx: &PolygonApproximation,
    options: &RegionOptions,
) -> Result<[f64; 2]> {
    let mode = mode_of(fit)?;
    let sd = match options.proposal {
        ProposalScale::Fixed(sd) => sd,
        ProposalScale::ObservedInformation => match observed_covariance(sample, &fit.dist, approx, mode)? {
            Some(c) => [c[0][0].sqrt(), c[1][1].sqrt()],
            None => pilot_sd(sample, fit, approx, 200, options.seed)?,
        },
        ProposalScale::PilotBootstrap { replicates } => pilot_sd(sample, fit, approx, replicates, options.seed)?,
    };
    if !(sd[0] > 0.0 && sd[1] > 0.0) || !sd.iter().all(|v| v.is_finite()) {
        return domain(format!("proposal stdevs must be positive, got {sd:?}"));
    }
    Ok(sd)
}

/// Parameter stdevs over refits of samples simulated from the fit.
fn pilot_sd(
    sample: &ProfileSample,
    fit: &FitResult,
    approx: &PolygonApproximation,
    replicates: usize,
    seed: u64,
) -> Result<[f64; 2]> {
    let n = sample.len();
    let family = fit.family();
    let options = FitOptions::fast();
    // Pilot fits use the ordinary likelihood on unbounded samples.
    let params: Vec<[f64; 2]> = (0..replicates.max(2))
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = stream(seed ^ 0x9E37_79B9_7F4A_7C15, r as u64);
            let y = simulate_profiles_with(&fit.dist, n, &mut rng);
            let s = ProfileSample::from_diameters(y).ok()?;
            fit_ml(&s, family, approx, &options).map(|d| d.params())
        })
        .collect();
    if params.len() < 2 {
        return Err(Error::Fit("pilot bootstrap produced too few fits".into()));
    }
    let k = params.len() as f64;
    let mut sd = [0.0; 2];
    for j in 0..2 {
        let mean = params.iter().map(|p| p[j]).sum::<f64>() / k;
        sd[j] = (params.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    }
    Ok(sd)
}

fn fit_ml(s: &ProfileSample, family: Family, approx: &PolygonApproximation, options: &FitOptions) -> Option<SizeDistribution> {
    fit(s, family, crate::estimators::Method::Ml, approx, options)
        .ok()
        .filter(|f| f.converged)
        .map(|f| f.dist)
}
