//! Unconstrained coordinates for the simplex searches.
//!
//! Positive parameters are searched on the log scale. The log-normal `μ` is
//! searched as is.

use crate::distributions::{Family, SizeDistribution};

/// Admissible range of the shape parameter (`k` or `σ`).
pub(crate) const SHAPE_RANGE: (f64, f64) = (1e-3, 1e3);

/// Closeness to the shape range (in log units) that counts as a boundary hit.
const BOUNDARY_MARGIN: f64 = 0.05;

/// Smallest positive-normal `μ` accepted, relative to `σ`.
const MIN_MU_OVER_SIGMA: f64 = 1e-6;

pub(crate) fn encode(dist: &SizeDistribution) -> [f64; 2] {
    let scale = match dist.family() {
        Family::LogNormal => dist.scale(),
        Family::Weibull | Family::PositiveNormal => dist.scale().ln(),
    };
    [scale, dist.shape().ln()]
}

/// Maps coordinates back to a distribution, `None` outside the search domain.
pub(crate) fn decode(family: Family, u: &[f64]) -> Option<SizeDistribution> {
    let (lo, hi) = SHAPE_RANGE;
    if !u.iter().all(|v| v.is_finite()) || u[1] < lo.ln() || u[1] > hi.ln() {
        return None;
    }
    let shape = u[1].exp();
    let scale = match family {
        Family::LogNormal => u[0],
        Family::Weibull => u[0].exp(),
        Family::PositiveNormal => {
            if u[0] - u[1] < MIN_MU_OVER_SIGMA.ln() {
                return None;
            }
            u[0].exp()
        }
    };
    if family != Family::LogNormal && !(scale > 0.0 && scale < f64::MAX) {
        return None;
    }
    SizeDistribution::new(family, scale, shape).ok()
}

pub(crate) fn at_boundary(family: Family, u: &[f64]) -> bool {
    let (lo, hi) = SHAPE_RANGE;
    let shape_edge = u[1] < lo.ln() + BOUNDARY_MARGIN || u[1] > hi.ln() - BOUNDARY_MARGIN;
    let mu_edge =
        family == Family::PositiveNormal && u[0] - u[1] < MIN_MU_OVER_SIGMA.ln() + BOUNDARY_MARGIN;
    shape_edge || mu_edge
}

/// Deterministic starting points around `u0`.
pub(crate) fn starts(u0: [f64; 2], count: usize) -> Vec<[f64; 2]> {
    const OFFSETS: [[f64; 2]; 9] = [
        [0.0, 0.0],
        [0.3, 0.3],
        [-0.3, -0.3],
        [0.3, -0.3],
        [-0.3, 0.3],
        [0.6, 0.0],
        [-0.6, 0.0],
        [0.0, 0.6],
        [0.0, -0.6],
    ];
    (0..count.max(1))
        .map(|i| {
            let o = OFFSETS[i % OFFSETS.len()];
            let grow = 1.0 + (i / OFFSETS.len()) as f64;
            [u0[0] + grow * o[0], u0[1] + grow * o[1]]
        })
        .collect()
}

/// Pulls a start point into the part of the domain where searches behave.
pub(crate) fn tame_start(family: Family, mut u: [f64; 2]) -> [f64; 2] {
    u[1] = u[1].clamp(0.05f64.ln(), 20f64.ln());
    if family == Family::PositiveNormal {
        u[0] = u[0].max(u[1] + 0.01f64.ln());
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for d in [
            SizeDistribution::weibull(2.0, 1.5).unwrap(),
            SizeDistribution::lognormal(-0.3, 0.7).unwrap(),
            SizeDistribution::positive_normal(3.0, 2.0).unwrap(),
        ] {
            let back = decode(d.family(), &encode(&d)).unwrap();
            assert!((back.scale() - d.scale()).abs() < 1e-14);
            assert!((back.shape() - d.shape()).abs() < 1e-14);
        }
        assert!(decode(Family::Weibull, &[0.0, 10.0]).is_none());
        assert!(decode(Family::Weibull, &[f64::NAN, 0.0]).is_none());
    }
}
