use serde::Serialize;

use super::mle::{minimize, start_point};
use super::{require_interior, FitOptions, FitResult, Method, ProfileSample};
use crate::distributions::{Family, SizeDistribution};
use crate::profile_density::{PolygonApproximation, ProfileDensity};
use crate::error::{Error, Result};
use crate::scalar::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MdeDistance {
    #[default]
    CramerVonMises,
    AndersonDarling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdeOptions {
    pub distance: MdeDistance,
    /// Above this sample size the model CDF is tabulated and interpolated.
    pub table_threshold: usize,
    pub table_knots: usize,
}

impl Default for MdeOptions {
    fn default() -> Self {
        Self {
            distance: MdeDistance::CramerVonMises,
            table_threshold: 2000,
            table_knots: 1500,
        }
    }
}

/// Cramér–von Mises statistic from model CDF values at the sorted data.
pub fn cramer_von_mises(g: &[f64]) -> f64 {
    let n = g.len() as f64;
    let mut sum = CompensatedSum::new();
    sum.add(1.0 / (12.0 * n));
    for (j, &v) in g.iter().enumerate() {
        let d = v - (2.0 * j as f64 + 1.0) / (2.0 * n);
        sum.add(d * d);
    }
    sum.value()
}

/// Anderson–Darling statistic from model CDF values at the sorted data.
fn anderson_darling(g: &[f64]) -> f64 {
    let n = g.len();
    let mut sum = CompensatedSum::new();
    for j in 0..n {
        let lo = g[j];
        let hi = 1.0 - g[n - 1 - j];
        if !(lo > 0.0 && hi > 0.0) {
            return f64::INFINITY;
        }
        sum.add((2.0 * j as f64 + 1.0) * (lo.ln() + hi.ln()));
    }
    -(n as f64) - sum.value() / n as f64
}

/// Piecewise cubic Hermite interpolant of the profile CDF, using the density
/// as the slope at each knot.
struct CdfTable {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CdfTable {
    fn new(density: &ProfileDensity, upper: f64, count: usize) -> Self {
        let count = count.max(8);
        // Quadratic spacing: denser near zero where the density may be steep.
        let knots: Vec<f64> = (0..=count)
            .map(|k| upper * (k as f64 / count as f64).powi(2))
            .collect();
        let values = knots.iter().map(|&y| density.cdf(y)).collect();
        let slopes = knots.iter().map(|&y| density.pdf(y)).collect();
        Self { knots, values, slopes }
    }

    /// Evaluates at sorted abscissae, walking the knots once.
    fn eval_sorted(&self, sorted: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let mut k = 0;
        let last = self.knots.len() - 2;
        for &y in sorted {
            while k < last && y > self.knots[k + 1] {
                k += 1;
            }
            let (x0, x1) = (self.knots[k], self.knots[k + 1]);
            let h = x1 - x0;
            let t = ((y - x0) / h).clamp(0.0, 1.0);
            let (t2, t3) = (t * t, t * t * t);
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[k]
                + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
                + (-2.0 * t3 + 3.0 * t2) * self.values[k + 1]
                + (t3 - t2) * h * self.slopes[k + 1];
            out.push(v.clamp(0.0, 1.0));
        }
    }
}

/// Minimum-distance fit of the profile CDF to the empirical CDF.
pub fn fit_mde(
    sample: &ProfileSample,
    family: Family,
    approx: &PolygonApproximation,
    options: &FitOptions,
) -> Result<FitResult> {
    require_interior(sample, 3)?;
    let mut sorted = sample.interior().to_vec();
    sorted.sort_by(f64::total_cmp);
    let start = start_point(sample, family)?;
    let mde = options.mde;
    let upper = *sorted.last().expect("non-empty") * (1.0 + 1e-12);
    let scratch = std::cell::RefCell::new(Vec::with_capacity(sorted.len()));
    let objective = |d: &SizeDistribution| {
        let density = ProfileDensity::new(d.clone(), approx);
        let mut g = scratch.borrow_mut();
        if sorted.len() > mde.table_threshold {
            CdfTable::new(&density, upper, mde.table_knots).eval_sorted(&sorted, &mut g);
        } else {
            g.clear();
            g.extend(sorted.iter().map(|&y| density.cdf(y)));
        }
        match mde.distance {
            MdeDistance::CramerVonMises => cramer_von_mises(&g),
            MdeDistance::AndersonDarling => anderson_darling(&g),
        }
    };
    let search = minimize(family, start, options, objective);
    if !search.f.is_finite() {
        return Err(Error::Fit(format!(
            "MDE {}: distance is infinite everywhere searched",
            family.name()
        )));
    }
    let f = search.f;
    Ok(search.into_result(Method::Mde, approx.m(), None, Some(f)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cvm_of_perfect_grid_is_minimal() {
        let n = 50;
        let u: Vec<f64> = (0..n).map(|j| (2.0 * j as f64 + 1.0) / (2.0 * n as f64)).collect();
        let w = cramer_von_mises(&u);
        assert!((w - 1.0 / (12.0 * n as f64)).abs() < 1e-15);
    }

    #[test]
    fn table_matches_direct_cdf() {
        let approx = PolygonApproximation::default();
        for d in [
            SizeDistribution::weibull(1.0, 0.9).unwrap(),
            SizeDistribution::lognormal(0.0, 0.7).unwrap(),
            SizeDistribution::positive_normal(3.876, 2.816).unwrap(),
        ] {
            let density = ProfileDensity::new(d.clone(), &approx);
            let ys: Vec<f64> = (1..400).map(|i| i as f64 * 0.01 * d.mean_diameter()).collect();
            let table = CdfTable::new(&density, *ys.last().unwrap(), 1500);
            let mut out = Vec::new();
            table.eval_sorted(&ys, &mut out);
            for (y, v) in ys.iter().zip(&out) {
                assert!((v - density.cdf(*y)).abs() < 2e-7, "{d} at {y}");
            }
        }
    }
}
