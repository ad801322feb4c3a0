//! Newton refinement and observed information in the search coordinates.

use super::likelihood::{LikelihoodEvaluator, LikelihoodMode};
use super::param;
use super::ProfileSample;
use crate::distributions::{Family, SizeDistribution};
use crate::error::Result;
use crate::profile_density::PolygonApproximation;

const STEP: f64 = 1e-4;

/// Forward differences bias the gradient by O(step), which moves the
/// optimum by a negligible amount in log-likelihood terms.
const FORWARD_STEP: f64 = 1e-6;

const PREDICTED_GAIN_TOL: f64 = 1e-8;

/// Value, gradient and Hessian of `f` at `u` by central differences.
fn local_quadratic<F: Fn(&[f64; 2]) -> f64>(f: &F, u: [f64; 2]) -> Option<(f64, [f64; 2], [[f64; 2]; 2])> {
    let at = |d0: f64, d1: f64| f(&[u[0] + d0, u[1] + d1]);
    let f0 = f(&u);
    let (fp0, fm0) = (at(STEP, 0.0), at(-STEP, 0.0));
    let (fp1, fm1) = (at(0.0, STEP), at(0.0, -STEP));
    let fpp = at(STEP, STEP);
    let fmm = at(-STEP, -STEP);
    let vals = [f0, fp0, fm0, fp1, fm1, fpp, fmm];
    if !vals.iter().all(|v| v.is_finite()) {
        return None;
    }
    let h2 = STEP * STEP;
    let g = [(fp0 - fm0) / (2.0 * STEP), (fp1 - fm1) / (2.0 * STEP)];
    let h00 = (fp0 - 2.0 * f0 + fm0) / h2;
    let h11 = (fp1 - 2.0 * f0 + fm1) / h2;
    let h01 = (fpp - fp0 - fp1 + 2.0 * f0 - fm0 - fm1 + fmm) / (2.0 * h2);
    Some((f0, g, [[h00, h01], [h01, h11]]))
}

fn solve(h: [[f64; 2]; 2], g: [f64; 2]) -> Option<[f64; 2]> {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(det.abs() > 0.0) || !det.is_finite() {
        return None;
    }
    Some([
        (g[0] * h[1][1] - g[1] * h[0][1]) / det,
        (g[1] * h[0][0] - g[0] * h[1][0]) / det,
    ])
}

pub(crate) struct NewtonResult {
    pub u: [f64; 2],
    pub f: f64,
}

/// Quasi-Newton ascent on an objective that is concave near its optimum,
/// started from a finite-difference Hessian and refined by BFGS updates.
/// `None` when the curvature is not negative definite or the iteration
/// stalls away from a stationary point.
pub(crate) fn newton_maximize<F: Fn(&[f64; 2]) -> f64>(f: &F, mut u: [f64; 2], max_iter: usize) -> Option<NewtonResult> {
    let (mut f0, mut g, mut h) = local_quadratic(f, u)?;
    let mut fresh = true;
    for _ in 0..max_iter {
        if !(h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0) {
            if fresh {
                return None;
            }
            (f0, g, h) = local_quadratic(f, u)?;
            fresh = true;
            continue;
        }
        let d = solve(h, g)?;
        // Increase predicted by the quadratic model; below this the
        // objective's rounding noise dominates.
        let predicted = -0.5 * (g[0] * d[0] + g[1] * d[1]);
        if predicted.abs() < PREDICTED_GAIN_TOL {
            return Some(NewtonResult { u, f: f0 });
        }
        let step = [-d[0], -d[1]];
        let mut t = 1.0;
        let mut next = None;
        while t > 1e-3 {
            let cand = [u[0] + t * step[0], u[1] + t * step[1]];
            let fc = f(&cand);
            if fc >= f0 {
                next = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = next else {
            if fresh {
                return None;
            }
            (f0, g, h) = local_quadratic(f, u)?;
            fresh = true;
            continue;
        };
        let g_new = forward_gradient(f, cand, fc)?;
        let s = [cand[0] - u[0], cand[1] - u[1]];
        h = bfgs_update(h, s, [g_new[0] - g[0], g_new[1] - g[1]]);
        (u, f0, g) = (cand, fc, g_new);
        fresh = false;
    }
    None
}

/// BFGS update of a negative-definite Hessian estimate (skipped when the
/// curvature condition fails).
fn bfgs_update(h: [[f64; 2]; 2], s: [f64; 2], y: [f64; 2]) -> [[f64; 2]; 2] {
    // Work with B = −H and y_B = −y, the minimization convention.
    let b = [[-h[0][0], -h[0][1]], [-h[1][0], -h[1][1]]];
    let yb = [-y[0], -y[1]];
    let ys = yb[0] * s[0] + yb[1] * s[1];
    let bs = [b[0][0] * s[0] + b[0][1] * s[1], b[1][0] * s[0] + b[1][1] * s[1]];
    let sbs = s[0] * bs[0] + s[1] * bs[1];
    if !(ys > 0.0 && sbs > 0.0) {
        return h;
    }
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = -(b[i][j] - bs[i] * bs[j] / sbs + yb[i] * yb[j] / ys);
        }
    }
    out
}

fn forward_gradient<F: Fn(&[f64; 2]) -> f64>(f: &F, u: [f64; 2], f0: f64) -> Option<[f64; 2]> {
    let g = [
        (f(&[u[0] + FORWARD_STEP, u[1]]) - f0) / FORWARD_STEP,
        (f(&[u[0], u[1] + FORWARD_STEP]) - f0) / FORWARD_STEP,
    ];
    g.iter().all(|v| v.is_finite()).then_some(g)
}

fn objective<'a>(lik: &'a LikelihoodEvaluator<'a>, family: Family) -> impl Fn(&[f64; 2]) -> f64 + 'a {
    move |u: &[f64; 2]| match param::decode(family, u) {
        Some(d) => lik.eval(&d),
        None => f64::NEG_INFINITY,
    }
}

/// Maximizes the likelihood by Newton's method from `start`. Returns the
/// maximizer and its log-likelihood, or `None` if the iteration fails.
pub fn refine_mle(
    sample: &ProfileSample,
    start: &SizeDistribution,
    approx: &PolygonApproximation,
    mode: LikelihoodMode,
) -> Result<Option<(SizeDistribution, f64)>> {
    let lik = LikelihoodEvaluator::new(sample, approx, mode)?;
    let family = start.family();
    let f = objective(&lik, family);
    Ok(newton_maximize(&f, param::encode(start), 30)
        .and_then(|r| param::decode(family, &r.u).map(|d| (d, r.f))))
}

/// Inverse observed information in the natural parameters. `None` when
/// the likelihood is not locally concave at `dist`.
pub fn observed_covariance(
    sample: &ProfileSample,
    dist: &SizeDistribution,
    approx: &PolygonApproximation,
    mode: LikelihoodMode,
) -> Result<Option<[[f64; 2]; 2]>> {
    let lik = LikelihoodEvaluator::new(sample, approx, mode)?;
    let family = dist.family();
    let f = objective(&lik, family);
    let Some((_, _, h)) = local_quadratic(&f, param::encode(dist)) else {
        return Ok(None);
    };
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(h[0][0] < 0.0 && det > 0.0) {
        return Ok(None);
    }
    // covariance in search coordinates is (−H)⁻¹
    let cu = [[-h[1][1] / det, h[0][1] / det], [h[1][0] / det, -h[0][0] / det]];
    // search coordinates are logs except for the log-normal μ
    let jac = [
        if family == Family::LogNormal { 1.0 } else { dist.scale() },
        dist.shape(),
    ];
    Ok(Some([
        [cu[0][0] * jac[0] * jac[0], cu[0][1] * jac[0] * jac[1]],
        [cu[1][0] * jac[1] * jac[0], cu[1][1] * jac[1] * jac[1]],
    ]))
}
