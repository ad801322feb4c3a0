//! Ground-truth profile generators and the replicate benchmark harness.

mod benchmark;

use rand::Rng as _;
use rand_distr::{Distribution as _, Poisson};
use serde::Serialize;

use crate::distributions::SizeDistribution;
use crate::error::{domain, Result};
use crate::estimators::ProfileSample;
use crate::profile_density::PolygonApproximation;
use crate::quadrature::{integrate, Tolerance};
use crate::rng::{stream, Rng};

pub use benchmark::{
    run_benchmark, BenchmarkReport, BenchmarkRow, BenchmarkSpec, SectionSampling,
};

/// Probability level of the size-weighted quantile used as the margin of the
/// placement window.
pub const WINDOW_QUANTILE: f64 = 0.99999;

/// Profile diameters of spheres cut by a random plane.
pub fn simulate_profiles(dist: &SizeDistribution, n: usize, seed: u64) -> Vec<f64> {
    simulate_profiles_with(dist, n, &mut stream(seed, 0))
}

pub fn simulate_profiles_with(dist: &SizeDistribution, n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let d = dist.draw_size_weighted(rng);
            let u: f64 = rng.gen();
            profile_of(d, u)
        })
        .collect()
}

/// Profile diameters drawn from the `m`-term approximation itself: a polygon
/// solid of revolution cut at a uniform height, rescaled by `a`.
pub fn simulate_model_profiles(dist: &SizeDistribution, approx: &PolygonApproximation, n: usize, seed: u64) -> Vec<f64> {
    simulate_model_profiles_with(dist, approx, n, &mut stream(seed, 0))
}

pub fn simulate_model_profiles_with(
    dist: &SizeDistribution,
    approx: &PolygonApproximation,
    n: usize,
    rng: &mut Rng,
) -> Vec<f64> {
    let x = approx.x();
    let mut cumulative: Vec<f64> = approx
        .p()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    *cumulative.last_mut().expect("at least one band") = 1.0;
    (0..n)
        .map(|_| {
            let d = dist.draw_size_weighted(rng);
            let u: f64 = rng.gen();
            // Band i spans widths x[i+1]..x[i]; the width is uniform within it.
            let i = cumulative.partition_point(|&c| c < u).min(cumulative.len() - 1);
            let v: f64 = rng.gen();
            approx.a() * d * (x[i + 1] + v * (x[i] - x[i + 1]))
        })
        .collect()
}

/// Profile diameter of a sphere of diameter `d` cut at relative height `u`.
pub fn profile_of(d: f64, u: f64) -> f64 {
    d * (1.0 - u * u).max(0.0).sqrt()
}

/// Counts from one bounded-section simulation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SectionCounts {
    pub placed: usize,
    pub interior: usize,
    pub censored: usize,
    pub discarded: usize,
}

/// Profiles observed in an `s1 × s2` section of a plane carrying, on average,
/// `expected_count` profile centres per section area.
///
/// A profile is interior when its circumscribed square lies inside the section
/// (equivalently the disc does). A disc that overlaps the boundary is
/// recorded as censored, measured by the equal-area diameter of its visible
/// part. The section is a clean rectangle rather than a tiling rule with
/// half-open sides, so counts differ slightly from those of a micrograph
/// frame with inclusion lines.
pub fn simulate_bounded_section(
    dist: &SizeDistribution,
    expected_count: f64,
    s1: f64,
    s2: f64,
    seed: u64,
) -> Result<ProfileSample> {
    simulate_bounded_section_with(dist, expected_count, s1, s2, &mut stream(seed, 0)).map(|r| r.0)
}

pub fn simulate_bounded_section_with(
    dist: &SizeDistribution,
    expected_count: f64,
    s1: f64,
    s2: f64,
    rng: &mut Rng,
) -> Result<(ProfileSample, SectionCounts)> {
    if !(s1 > 0.0 && s2 > 0.0) || !s1.is_finite() || !s2.is_finite() {
        return domain(format!("section sides must be positive, got {s1} × {s2}"));
    }
    if !(expected_count >= 0.0) || !expected_count.is_finite() {
        return domain(format!("expected count must be non-negative, got {expected_count}"));
    }
    let margin = dist.size_weighted_quantile(WINDOW_QUANTILE)?;
    let (w, h) = (s1 + 2.0 * margin, s2 + 2.0 * margin);
    let mean_placed = expected_count * w * h / (s1 * s2);
    let placed = if mean_placed > 0.0 {
        Poisson::new(mean_placed)
            .map_err(|e| crate::error::Error::Domain(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let mut counts = SectionCounts {
        placed,
        ..SectionCounts::default()
    };
    let (mut interior, mut censored) = (Vec::new(), Vec::new());
    for _ in 0..placed {
        let cx = rng.gen::<f64>() * w - margin;
        let cy = rng.gen::<f64>() * h - margin;
        let d = dist.draw_size_weighted(rng);
        let y = profile_of(d, rng.gen());
        let r = 0.5 * y;
        if !(y > 0.0) {
            counts.discarded += 1;
            continue;
        }
        if cx - r >= 0.0 && cx + r <= s1 && cy - r >= 0.0 && cy + r <= s2 {
            interior.push(y);
            counts.interior += 1;
            continue;
        }
        let area = clipped_disc_area(cx, cy, r, s1, s2);
        if area > 0.0 {
            censored.push(2.0 * (area / std::f64::consts::PI).sqrt());
            counts.censored += 1;
        } else {
            counts.discarded += 1;
        }
    }
    let sample = ProfileSample::new(interior, censored, Some((s1, s2)))?;
    Ok((sample, counts))
}

/// Area of the disc of radius `r` centred at `(cx, cy)` inside `[0, s1] × [0, s2]`.
pub fn clipped_disc_area(cx: f64, cy: f64, r: f64, s1: f64, s2: f64) -> f64 {
    let (lo, hi) = ((cx - r).max(0.0), (cx + r).min(s1));
    if lo >= hi || cy - r >= s2 || cy + r <= 0.0 {
        return 0.0;
    }
    let chord = |x: f64| {
        let half = (r * r - (x - cx) * (x - cx)).max(0.0).sqrt();
        ((cy + half).min(s2) - (cy - half).max(0.0)).max(0.0)
    };
    // Split where the chord starts or stops touching a horizontal side.
    let mut cuts = vec![lo, hi];
    for dy in [s2 - cy, cy] {
        if dy.abs() < r {
            let dx = (r * r - dy * dy).sqrt();
            cuts.extend([cx - dx, cx + dx].into_iter().filter(|&x| x > lo && x < hi));
        }
    }
    cuts.sort_by(f64::total_cmp);
    let tol = Tolerance {
        abs: 1e-12 * r * r,
        rel: 1e-10,
        max_subdivisions: 200,
    };
    cuts.windows(2)
        .map(|p| integrate(chord, p[0], p[1], tol).map_or_else(|_| 0.0, |e| e.value))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn profile_extremes() {
        assert_eq!(profile_of(2.0, 0.0), 2.0);
        assert_eq!(profile_of(2.0, 1.0), 0.0);
    }

    #[test]
    fn clipped_area_cases() {
        // fully inside
        assert!((clipped_disc_area(5.0, 5.0, 1.0, 10.0, 10.0) - PI).abs() < 1e-10);
        // half over an edge
        assert!((clipped_disc_area(0.0, 5.0, 1.0, 10.0, 10.0) - PI / 2.0).abs() < 1e-10);
        // a quarter in a corner
        assert!((clipped_disc_area(0.0, 0.0, 1.0, 10.0, 10.0) - PI / 4.0).abs() < 1e-10);
        // disjoint
        assert_eq!(clipped_disc_area(-2.0, 5.0, 1.0, 10.0, 10.0), 0.0);
        // circular segment of height 0.5
        let seg = 0.5f64.acos() - 0.5 * 0.75f64.sqrt();
        let want = PI - seg;
        assert!((clipped_disc_area(0.5, 5.0, 1.0, 10.0, 10.0) - want).abs() < 1e-10);
    }

    #[test]
    fn profile_mean_matches() {
        let d = SizeDistribution::weibull(1.0, 1.0).unwrap();
        let y = simulate_profiles(&d, 1_000_000, 11);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((mean - PI / 4.0 * 2.0).abs() < 0.003, "{mean}");
    }

    #[test]
    fn large_section_has_few_censored() {
        let d = SizeDistribution::weibull(1.0, 1.0).unwrap();
        let (sample, counts) =
            simulate_bounded_section_with(&d, 2000.0, 2000.0, 2000.0, &mut stream(3, 0)).unwrap();
        assert_eq!(counts.interior, sample.len());
        let frac = counts.censored as f64 / (counts.interior + counts.censored) as f64;
        assert!(frac < 0.01, "{frac}");
    }
}
