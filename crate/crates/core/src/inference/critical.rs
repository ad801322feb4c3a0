use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::distributions::{Family, SizeDistribution};
use crate::error::{domain, Error, Result};
use crate::estimators::{fit_mle, refine_mle, FitOptions, LikelihoodEvaluator, LikelihoodMode, ProfileSample};
use crate::optimize::{brent_root, nelder_mead, SimplexOptions};
use crate::profile_density::PolygonApproximation;
use crate::rng::stream;
use crate::scalar::Scalar;
use crate::simulation::{simulate_model_profiles_with, simulate_profiles_with};

/// Smallest sample size covered by the inflated chi-square rule.
pub const RULE_MIN_N: usize = 18;

/// Sample size beyond which the level inflation decays like `1/n`.
const TAPER_START: usize = 200;

pub fn chi_square_quantile(p: f64, df: u32) -> f64 {
    match df {
        1 => {
            let z = f64::norm_quantile(0.5 * (1.0 + p));
            z * z
        }
        2 => -2.0 * (1.0 - p).ln(),
        _ => {
            // Newton polish of the library quantile on the regularized
            // incomplete gamma function.
            let k = 0.5 * df as f64;
            let mut x = ChiSquared::new(df as f64)
                .expect("positive degrees of freedom")
                .inverse_cdf(p);
            for _ in 0..20 {
                let cdf = f64::gamma_lr(k, 0.5 * x);
                let pdf = ((k - 1.0) * (0.5 * x).ln() - 0.5 * x - k.ln_gamma_fn()).exp() * 0.5;
                let step = (cdf - p) / pdf;
                x -= step;
                if step.abs() <= 1e-14 * x {
                    break;
                }
            }
            x
        }
    }
}

fn check_dims(dims: u32) -> Result<()> {
    if dims == 1 || dims == 2 {
        Ok(())
    } else {
        domain(format!("dims must be 1 or 2, got {dims}"))
    }
}

/// Inflated coverage level used in place of `p` for sample size `n`.
fn inflated_level(p: f64, n: usize) -> Option<f64> {
    let tabulated = (p - 0.90).abs() < 1e-12 || (p - 0.95).abs() < 1e-12;
    if !tabulated || n < RULE_MIN_N {
        return None;
    }
    let bump = match n {
        18..=19 => 0.02,
        20..=50 => 0.01,
        _ if n <= TAPER_START => 0.005,
        _ => 0.005 * TAPER_START as f64 / n as f64,
    };
    Some(p + bump)
}

/// Small-sample critical value of the deviance for `dims` parameters.
///
/// Rule-based for `p ∈ {0.90, 0.95}` and `n ≥ 18`: χ² quantiles at an
/// inflated level, 0.02 above `p` for n = 18..19, 0.01 for n = 20..50 and
/// 0.005 above that, decaying like `1/n` past n = 200 so that the plain χ²
/// quantile is the large-sample limit.
pub fn critical_value(p: f64, n: usize, dims: u32) -> Result<f64> {
    check_dims(dims)?;
    match inflated_level(p, n) {
        Some(level) => Ok(chi_square_quantile(level, dims)),
        None => Err(Error::CriticalValueNotTabulated { p, n }),
    }
}

/// Critical value for a specific family, using the rule where it applies,
/// then the bundled table, then a fresh simulation.
pub fn critical_value_for(family: Family, shape: f64, p: f64, n: usize, dims: u32, seed: u64) -> Result<f64> {
    match critical_value(p, n, dims) {
        Ok(v) => Ok(v),
        Err(Error::CriticalValueNotTabulated { .. }) => {
            if let Some(e) = CriticalTable::bundled().lookup(family, p, n, dims) {
                return Ok(e.value);
            }
            log::warn!("no tabulated critical value for p={p}, n={n}, dims={dims}; simulating");
            let sims = DevianceSimulation {
                dims,
                ..DevianceSimulation::new(family, shape, n.max(5), seed)
            };
            Ok(sims.run()?.quantile(p))
        }
        Err(e) => Err(e),
    }
}

/// Simulated deviance quantile with its Monte-Carlo error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalQuantile {
    pub value: f64,
    pub mc_error: f64,
    pub sims: usize,
    pub failures: usize,
}

/// Monte-Carlo quantile `p` of `2(log L̂ − log L(θ_true))` for the
/// two-parameter ML fit, over `n_sims` samples of `n` profiles.
pub fn simulate_critical_quantiles(
    family: Family,
    shape: f64,
    n: usize,
    p: f64,
    n_sims: usize,
    seed: u64,
) -> Result<CriticalQuantile> {
    let sims = DevianceSimulation {
        sims: n_sims,
        ..DevianceSimulation::new(family, shape, n, seed)
    };
    let out = sims.run()?;
    Ok(out.critical_quantile(p))
}

/// Law of the simulated profiles in a deviance simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    /// The `m`-term approximation the likelihood is built on, so the
    /// deviance is a null statistic of that likelihood.
    #[default]
    Model,
    /// Exact sphere profiles. The deviance then also carries the bias of the
    /// approximation, which grows with n.
    Sphere,
}

/// Settings for simulating the null deviance distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevianceSimulation {
    pub family: Family,
    /// Shape parameter of the truth; the scale is fixed at unity (for the
    /// positive normal, `μ = 1` and this is `σ/μ`).
    pub shape: f64,
    pub n: usize,
    /// 2 for the joint deviance, 1 for the profile deviance of the mean
    /// diameter.
    pub dims: u32,
    pub sims: usize,
    pub seed: u64,
    pub m: usize,
    pub source: ProfileSource,
}

impl DevianceSimulation {
    pub fn new(family: Family, shape: f64, n: usize, seed: u64) -> Self {
        Self {
            family,
            shape,
            n,
            dims: 2,
            sims: 4000,
            seed,
            m: crate::profile_density::DEFAULT_TERMS,
            source: ProfileSource::Model,
        }
    }

    pub fn truth(&self) -> Result<SizeDistribution> {
        let scale = match self.family {
            Family::LogNormal => 0.0,
            Family::Weibull | Family::PositiveNormal => 1.0,
        };
        SizeDistribution::new(self.family, scale, self.shape)
    }

    pub fn run(&self) -> Result<DevianceSample> {
        check_dims(self.dims)?;
        if self.n < 5 {
            return domain(format!("deviance simulation needs n ≥ 5, got {}", self.n));
        }
        if self.sims < 1000 {
            return domain(format!("deviance simulation needs at least 1000 runs, got {}", self.sims));
        }
        let truth = self.truth()?;
        let approx = PolygonApproximation::new(self.m)?;
        let values: Vec<Option<f64>> = (0..self.sims)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(self.seed, i as u64);
                let y = match self.source {
                    ProfileSource::Model => simulate_model_profiles_with(&truth, &approx, self.n, &mut rng),
                    ProfileSource::Sphere => simulate_profiles_with(&truth, self.n, &mut rng),
                };
                let sample = ProfileSample::from_diameters(y).ok()?;
                deviance(&sample, &truth, &approx, self.dims)
            })
            .collect();
        let failures = values.iter().filter(|v| v.is_none()).count();
        let mut sorted: Vec<f64> = values.into_iter().flatten().collect();
        sorted.sort_by(f64::total_cmp);
        if sorted.is_empty() {
            return Err(Error::Fit("every deviance simulation failed".into()));
        }
        Ok(DevianceSample { sorted, failures })
    }
}

/// Sorted simulated deviances.
#[derive(Debug, Clone, PartialEq)]
pub struct DevianceSample {
    pub sorted: Vec<f64>,
    pub failures: usize,
}

impl DevianceSample {
    /// Linear-interpolation sample quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        self.sorted[lo] + (h - lo as f64) * (self.sorted[hi] - self.sorted[lo])
    }

    /// Quantile with a Monte-Carlo error from the binomial spread of the
    /// order-statistic rank.
    pub fn critical_quantile(&self, p: f64) -> CriticalQuantile {
        let n = self.sorted.len() as f64;
        let spread = (p * (1.0 - p) / n).sqrt();
        let lo = self.quantile((p - spread).max(0.0));
        let hi = self.quantile((p + spread).min(1.0));
        CriticalQuantile {
            value: self.quantile(p),
            mc_error: 0.5 * (hi - lo),
            sims: self.sorted.len(),
            failures: self.failures,
        }
    }
}

/// Deviance of `truth` on one sample, `None` if the fit fails.
fn deviance(sample: &ProfileSample, truth: &SizeDistribution, approx: &PolygonApproximation, dims: u32) -> Option<f64> {
    let lik = LikelihoodEvaluator::new(sample, approx, LikelihoodMode::Ordinary).ok()?;
    let ll0 = lik.eval(truth);
    if !ll0.is_finite() {
        return None;
    }
    let mut best = refine_mle(sample, truth, approx, LikelihoodMode::Ordinary)
        .ok()
        .flatten()
        .map(|(_, ll)| ll);
    // Small samples can have flat or multimodal likelihoods, so also run the
    // full search there and keep the better maximum.
    if best.is_none() || sample.len() <= 500 {
        if let Ok(fit) = fit_mle(sample, truth.family(), approx, &FitOptions::fast()) {
            let ll = fit.log_likelihood.unwrap_or(f64::NEG_INFINITY);
            best = Some(best.map_or(ll, |b: f64| b.max(ll)));
        }
    }
    let ll_hat = best?.max(ll0);
    if !ll_hat.is_finite() {
        return None;
    }
    let reference = match dims {
        2 => ll0,
        _ => {
            let target = truth.mean_diameter();
            profile_mean_diameter(&lik, truth.family(), truth.shape(), target)?.max(ll0)
        }
    };
    Some((2.0 * (ll_hat - reference)).max(0.0))
}

/// Law of `family` with the given shape and mean diameter nearest to it.
pub(crate) fn with_mean_diameter(family: Family, shape: f64, mean: f64) -> Option<SizeDistribution> {
    match family {
        Family::Weibull => SizeDistribution::weibull(mean / (1.0 + 1.0 / shape).gamma_fn(), shape).ok(),
        Family::LogNormal => SizeDistribution::lognormal(mean.ln() - 0.5 * shape * shape, shape).ok(),
        Family::PositiveNormal => {
            // E(D) rises from σ√(2/π) as μ → 0 towards μ itself.
            if mean <= shape * (2.0 / std::f64::consts::PI).sqrt() {
                return None;
            }
            let excess = |mu: f64| {
                SizeDistribution::positive_normal(mu, shape).map_or(f64::NAN, |d| d.mean_diameter()) - mean
            };
            let mu = brent_root(excess, 1e-12 * mean, mean, 1e-14 * mean, 200)?;
            SizeDistribution::positive_normal(mu, shape).ok()
        }
    }
}

/// Maximum log-likelihood over laws with mean diameter `target`.
fn profile_mean_diameter(lik: &LikelihoodEvaluator<'_>, family: Family, shape0: f64, target: f64) -> Option<f64> {
    let f = |u: &[f64]| {
        with_mean_diameter(family, u[0].exp(), target).map_or(f64::INFINITY, |d| -lik.eval(&d))
    };
    let res = nelder_mead(
        f,
        &[shape0.ln()],
        &[0.1],
        SimplexOptions {
            max_evaluations: 400,
            f_rel_tol: 1e-12,
            f_abs_tol: 1e-10,
            x_tol: 1e-8,
        },
    );
    res.f.is_finite().then_some(-res.f)
}

/// One simulated entry of the bundled critical-value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEntry {
    pub family: Family,
    pub shape: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Sample size the entry was simulated at.
    pub n: usize,
    pub p: f64,
    pub dims: u32,
    pub value: f64,
    pub mc_error: f64,
    pub sims: usize,
}

/// Simulated critical values for sample sizes below the rule's range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalTable {
    pub seed: u64,
    pub entries: Vec<CriticalEntry>,
}

static BUNDLED: std::sync::OnceLock<CriticalTable> = std::sync::OnceLock::new();

impl CriticalTable {
    /// Buckets of sample size covered by the table, with the size simulated.
    pub const BUCKETS: [(usize, usize, usize); 3] = [(5, 9, 7), (10, 13, 12), (14, 17, 16)];

    /// Representative shape per family.
    pub fn reference_shape(family: Family) -> f64 {
        match family {
            Family::Weibull => 1.2,
            Family::LogNormal => 0.5,
            Family::PositiveNormal => 0.7,
        }
    }

    /// The table shipped with the crate.
    pub fn bundled() -> &'static CriticalTable {
        BUNDLED.get_or_init(|| {
            serde_json::from_str(include_str!("../../data/critical_values.json"))
                .expect("bundled critical-value table parses")
        })
    }

    pub fn lookup(&self, family: Family, p: f64, n: usize, dims: u32) -> Option<&CriticalEntry> {
        self.entries.iter().find(|e| {
            e.family == family && e.dims == dims && (e.p - p).abs() < 1e-12 && (e.n_min..=e.n_max).contains(&n)
        })
    }

    /// Simulates every (family, bucket, dims) cell at `p ∈ {0.90, 0.95}`.
    pub fn generate(sims: usize, seed: u64) -> Result<Self> {
        let mut entries = Vec::new();
        let mut cell = 0u64;
        for family in Family::ALL {
            let shape = Self::reference_shape(family);
            for (n_min, n_max, n) in Self::BUCKETS {
                for dims in [2, 1] {
                    cell += 1;
                    let run = DevianceSimulation {
                        dims,
                        sims,
                        ..DevianceSimulation::new(family, shape, n, seed.wrapping_add(cell << 32))
                    }
                    .run()?;
                    for p in [0.90, 0.95] {
                        let q = run.critical_quantile(p);
                        entries.push(CriticalEntry {
                            family,
                            shape,
                            n_min,
                            n_max,
                            n,
                            p,
                            dims,
                            value: q.value,
                            mc_error: q.mc_error,
                            sims: q.sims,
                        });
                    }
                }
            }
        }
        Ok(Self { seed, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_closed_forms() {
        assert!((chi_square_quantile(0.95, 2) - 5.991465).abs() < 1e-6);
        assert!((chi_square_quantile(0.95, 1) - 3.841459).abs() < 1e-6);
        assert!((chi_square_quantile(0.95, 3) - 7.814728).abs() < 1e-5);
    }

    #[test]
    fn rule_values() {
        assert!((critical_value(0.95, 54, 2).unwrap() - 6.25).abs() < 0.05);
        assert!((critical_value(0.95, 54, 1).unwrap() - 4.0).abs() < 0.05);
        assert!((critical_value(0.95, 30, 2).unwrap() - chi_square_quantile(0.96, 2)).abs() < 1e-12);
        assert!((critical_value(0.90, 18, 2).unwrap() - chi_square_quantile(0.92, 2)).abs() < 1e-12);
        assert!((critical_value(0.95, 10_000_000, 2).unwrap() - 5.991465).abs() < 1e-3);
        assert!(matches!(critical_value(0.95, 10, 2), Err(Error::CriticalValueNotTabulated { .. })));
        assert!(critical_value(0.99, 100, 2).is_err());
        assert!(critical_value(0.95, 100, 3).is_err());
    }

    #[test]
    fn rule_is_nonincreasing_in_n() {
        for dims in [1, 2] {
            let mut prev = f64::INFINITY;
            for n in 18..5000 {
                let v = critical_value(0.95, n, dims).unwrap();
                assert!(v <= prev + 1e-15, "n={n}");
                prev = v;
            }
        }
    }

    #[test]
    fn mean_diameter_constraint() {
        for (family, shape) in [(Family::Weibull, 1.3), (Family::LogNormal, 0.6), (Family::PositiveNormal, 0.8)] {
            let d = with_mean_diameter(family, shape, 2.5).unwrap();
            assert!((d.mean_diameter() - 2.5).abs() < 1e-10, "{d}");
        }
        assert!(with_mean_diameter(Family::PositiveNormal, 10.0, 1.0).is_none());
    }

    #[test]
    fn bundled_table_covers_small_samples() {
        let t = CriticalTable::bundled();
        for family in Family::ALL {
            for n in 5..RULE_MIN_N {
                for dims in [1, 2] {
                    let a = t.lookup(family, 0.90, n, dims).unwrap();
                    let b = t.lookup(family, 0.95, n, dims).unwrap();
                    assert!(a.value <= b.value);
                }
            }
        }
    }
}
