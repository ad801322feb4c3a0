use std::f64::consts::PI;

use super::param::{self, SHAPE_RANGE};
use super::{require_interior, FitFlags, FitResult, Method, ProfileSample};
use crate::distributions::{Family, SizeDistribution};
use crate::error::{domain, Error, Result};
use crate::optimize::{brent_root, nelder_mead, SimplexOptions};
use crate::scalar::Scalar;

/// `E(Y²)/E(Y)²` in the limit of equal diameters.
const RATIO_FLOOR: f64 = 32.0 / (3.0 * PI * PI);

/// Bracket for the Weibull shape search.
const WEIBULL_K_BRACKET: (f64, f64) = (0.05, 500.0);

/// Method-of-moments estimate from the first two profile moments.
pub fn fit_mom(sample: &ProfileSample, family: Family) -> Result<FitResult> {
    require_interior(sample, 2)?;
    let (mean, mean_sq) = sample.mean_and_mean_square();
    fit_mom_from_moments(family, mean, mean_sq)
}

/// Moment estimate from given values of `E(Y)` and `E(Y²)`.
pub fn fit_mom_from_moments(family: Family, mean: f64, mean_sq: f64) -> Result<FitResult> {
    if !(mean > 0.0) || !(mean_sq > 0.0) || !mean.is_finite() || !mean_sq.is_finite() {
        return domain(format!("moments must be positive, got {mean} and {mean_sq}"));
    }
    let mut flags = FitFlags::default();
    let mut converged = true;
    let mut evaluations = 1;
    let dist = match family {
        Family::LogNormal => {
            let (mu, sigma2, clamped) = lognormal_moment_solution(mean, mean_sq);
            flags.clamped = clamped;
            let sigma = sigma2.sqrt().max(SHAPE_RANGE.0);
            SizeDistribution::lognormal(mu, sigma)?
        }
        Family::Weibull => {
            let target = (mean_sq / (mean * mean)).ln();
            let h = |lk: f64| weibull_moment_ratio(lk.exp()).ln() - target;
            let (lo, hi) = (WEIBULL_K_BRACKET.0.ln(), WEIBULL_K_BRACKET.1.ln());
            let k = if h(lo) <= 0.0 {
                flags.search_bound_hit = true;
                WEIBULL_K_BRACKET.0
            } else if h(hi) >= 0.0 {
                flags.search_bound_hit = true;
                WEIBULL_K_BRACKET.1
            } else {
                brent_root(h, lo, hi, 1e-13, 200)
                    .ok_or_else(|| Error::Fit("shape search did not converge".into()))?
                    .exp()
            };
            let (g1, g2) = ((1.0 + 1.0 / k).ln_gamma_fn(), (1.0 + 2.0 / k).ln_gamma_fn());
            let lambda = 4.0 * mean / PI * (g1 - g2).exp();
            SizeDistribution::weibull(lambda, k)?
        }
        Family::PositiveNormal => {
            let (dist, ok, evals, bound) = positive_normal_moments(mean, mean_sq)?;
            converged = ok;
            evaluations = evals;
            flags.search_bound_hit = bound;
            dist
        }
    };
    flags.at_boundary = param::at_boundary(family, &param::encode(&dist));
    Ok(FitResult {
        dist,
        method: Method::Mom,
        log_likelihood: None,
        distance: None,
        m_used: 0,
        converged: converged && !flags.clamped && !flags.search_bound_hit,
        iterations: evaluations,
        evaluations,
        flags,
    })
}

/// Log-normal moment solution `(μ, σ², clamped)`. `σ²` is clamped at zero
/// when the sample is less dispersed than any log-normal allows.
pub fn lognormal_moment_solution(mean: f64, mean_sq: f64) -> (f64, f64, bool) {
    let raw = (mean_sq / (mean * mean)).ln() - RATIO_FLOOR.ln();
    let clamped = raw < 0.0;
    let sigma2 = raw.max(0.0);
    let mu = mean.ln() - (PI / 4.0).ln() - 1.5 * sigma2;
    (mu, sigma2, clamped)
}

/// `E(Y²)/E(Y)²` for a Weibull diameter law with shape `k`.
pub fn weibull_moment_ratio(k: f64) -> f64 {
    let lg = |x: f64| x.ln_gamma_fn();
    RATIO_FLOOR * (lg(1.0 + 3.0 / k) + lg(1.0 + 1.0 / k) - 2.0 * lg(1.0 + 2.0 / k)).exp()
}

fn positive_normal_profile_moments(d: &SizeDistribution) -> (f64, f64) {
    let m1 = d.raw_moment(1);
    (PI / 4.0 * d.raw_moment(2) / m1, 2.0 / 3.0 * d.raw_moment(3) / m1)
}

fn positive_normal_moments(mean: f64, mean_sq: f64) -> Result<(SizeDistribution, bool, usize, bool)> {
    let (t1, t2) = (mean.ln(), mean_sq.ln());
    let residual = |u: &[f64]| -> Option<[f64; 2]> {
        let d = param::decode(Family::PositiveNormal, u)?;
        let (e1, e2) = positive_normal_profile_moments(&d);
        Some([e1.ln() - t1, e2.ln() - t2])
    };
    let mu0 = 4.0 * mean / PI;
    let mut evaluations = 0;
    let mut best: Option<([f64; 2], f64)> = None;
    for frac in [0.3, 0.8, 0.1] {
        let x0 = [mu0.ln(), (frac * mu0).ln()];
        let res = nelder_mead(
            |u| residual(u).map_or(f64::INFINITY, |r| r[0] * r[0] + r[1] * r[1]),
            &x0,
            &[0.2, 0.3],
            SimplexOptions {
                max_evaluations: 600,
                f_rel_tol: 1e-12,
                f_abs_tol: 1e-20,
                x_tol: 1e-9,
            },
        );
        evaluations += res.evaluations;
        if best.as_ref().map_or(true, |b| res.f < b.1) {
            best = Some(([res.x[0], res.x[1]], res.f));
        }
        if res.f < 1e-16 {
            break;
        }
    }
    let (mut u, _) = best.expect("at least one start");
    // Newton polish with a central-difference Jacobian.
    let mut solved = false;
    for _ in 0..30 {
        let Some(r) = residual(&u) else { break };
        evaluations += 1;
        if r[0].abs() < 1e-14 && r[1].abs() < 1e-14 {
            solved = true;
            break;
        }
        let h = 1e-6;
        let mut jac = [[0.0; 2]; 2];
        let mut ok = true;
        for j in 0..2 {
            let (mut up, mut dn) = (u, u);
            up[j] += h;
            dn[j] -= h;
            match (residual(&up), residual(&dn)) {
                (Some(a), Some(b)) => {
                    for i in 0..2 {
                        jac[i][j] = (a[i] - b[i]) / (2.0 * h);
                    }
                }
                _ => ok = false,
            }
            evaluations += 2;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !ok || det.abs() < 1e-300 {
            break;
        }
        let dx0 = (r[0] * jac[1][1] - r[1] * jac[0][1]) / det;
        let dx1 = (r[1] * jac[0][0] - r[0] * jac[1][0]) / det;
        let mut step = 1.0;
        let norm = |r: [f64; 2]| r[0].abs() + r[1].abs();
        loop {
            let cand = [u[0] - step * dx0, u[1] - step * dx1];
            if let Some(rc) = residual(&cand) {
                evaluations += 1;
                if norm(rc) < norm(r) {
                    u = cand;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                break;
            }
        }
        if step < 1e-6 {
            break;
        }
    }
    if !solved {
        solved = residual(&u).map_or(false, |r| r[0].abs() < 1e-10 && r[1].abs() < 1e-10);
    }
    let dist = param::decode(Family::PositiveNormal, &u)
        .ok_or_else(|| Error::Fit("moment solution left the parameter domain".into()))?;
    let bound = !solved && param::at_boundary(Family::PositiveNormal, &u);
    Ok((dist, solved, evaluations, bound))
}
