use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_bounded_section_with, simulate_profiles_with};
use crate::distributions::{Functional, SizeDistribution};
use crate::error::{domain, Result};
use crate::estimators::{fit, FitOptions, FitResult, Method, ProfileSample};
use crate::profile_density::PolygonApproximation;
use crate::rng::stream;
use crate::scalar::compensated_sum;

/// Bounded-section sampling: each sample size is read as the expected number
/// of profile centres in the section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionSampling {
    pub s1: f64,
    pub s2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub truth: SizeDistribution,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub section: Option<SectionSampling>,
}

fn default_m() -> usize {
    crate::profile_density::DEFAULT_TERMS
}

fn default_starts() -> usize {
    FitOptions::default().starts
}

impl BenchmarkSpec {
    /// Log-normal(0, 0.5) at n = 200 and 2000 with the ML, MoM and MDE fitters.
    pub fn table2(replicates: usize, seed: u64) -> Self {
        Self {
            truth: SizeDistribution::lognormal(0.0, 0.5).expect("valid parameters"),
            sample_sizes: vec![200, 2000],
            replicates,
            methods: vec![Method::Ml, Method::Mom, Method::Mde],
            seed,
            m: default_m(),
            starts: default_starts(),
            section: None,
        }
    }

    pub fn preset(name: &str, replicates: usize, seed: u64) -> Result<Self> {
        match name {
            "table2" => Ok(Self::table2(replicates, seed)),
            other => domain(format!("unknown benchmark preset '{other}'")),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return domain("a benchmark needs at least 2 replicates");
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 2) {
            return domain("benchmark sample sizes must be at least 2");
        }
        if self.methods.is_empty() {
            return domain("a benchmark needs at least one method");
        }
        if self.section.is_none()
            && self.methods.iter().any(|m| matches!(m, Method::MlCensored | Method::MlWeighted))
        {
            return domain("censored and weighted fits need section sampling");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub n: usize,
    pub method: Method,
    pub functional: Functional,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub stdev: f64,
    pub rmse: f64,
    /// Monte-Carlo standard error of the bias.
    pub bias_se: f64,
    /// Approximate Monte-Carlo standard error of the stdev.
    pub stdev_se: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub spec: BenchmarkSpec,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn row(&self, n: usize, method: Method, functional: Functional) -> Option<&BenchmarkRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.method == method && r.functional == functional)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "n\tmethod\tfunctional\ttruth\tmean\tbias\tstdev\trmse\tbias_se\tstdev_se\tsuccesses\tfailures\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}\t{}\t{}",
                r.n,
                r.method,
                r.functional.name(),
                r.truth,
                r.mean,
                r.bias,
                r.stdev,
                r.rmse,
                r.bias_se,
                r.stdev_se,
                r.successes,
                r.failures
            );
        }
        out
    }
}

/// Runs every (sample size, replicate) cell and summarizes each method.
///
/// Replicate `r` at the `i`-th sample size draws from stream `i·R + r` of the
/// seed, and all methods see the same sample. Replicates run in parallel but
/// are reduced in index order, so reports do not depend on the thread count.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkReport> {
    spec.validate()?;
    let approx = PolygonApproximation::new(spec.m)?;
    let options = FitOptions {
        starts: spec.starts,
        ..FitOptions::default()
    };
    let family = spec.truth.family();
    let mut rows = Vec::new();
    for (i, &n) in spec.sample_sizes.iter().enumerate() {
        let fits: Vec<Vec<Option<FitResult>>> = (0..spec.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(spec.seed, (i * spec.replicates + r) as u64);
                let sample = match spec.section {
                    None => ProfileSample::from_diameters(simulate_profiles_with(&spec.truth, n, &mut rng)),
                    Some(sec) => {
                        simulate_bounded_section_with(&spec.truth, n as f64, sec.s1, sec.s2, &mut rng)
                            .map(|s| s.0)
                    }
                };
                spec.methods
                    .iter()
                    .map(|&method| {
                        let sample = sample.as_ref().ok()?;
                        match fit(sample, family, method, &approx, &options) {
                            Ok(f) if f.converged => Some(f),
                            Ok(f) => {
                                log::debug!("replicate {r} n={n} {method}: not converged ({:?})", f.flags);
                                None
                            }
                            Err(e) => {
                                log::debug!("replicate {r} n={n} {method}: {e}");
                                None
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        for (j, &method) in spec.methods.iter().enumerate() {
            let ok: Vec<&FitResult> = fits.iter().filter_map(|f| f[j].as_ref()).collect();
            let failures = spec.replicates - ok.len();
            if failures > 0 {
                log::warn!("n={n} {method}: {failures} of {} replicates failed", spec.replicates);
            }
            for q in Functional::ALL {
                let values: Vec<f64> = ok.iter().map(|f| q.of(&f.dist)).collect();
                rows.push(summarize(n, method, q, q.of(&spec.truth), &values, failures));
            }
        }
    }
    Ok(BenchmarkReport {
        spec: spec.clone(),
        rows,
    })
}

fn summarize(n: usize, method: Method, functional: Functional, truth: f64, v: &[f64], failures: usize) -> BenchmarkRow {
    let k = v.len() as f64;
    let mean = compensated_sum(v.iter().copied()) / k;
    let var = if v.len() > 1 {
        compensated_sum(v.iter().map(|x| (x - mean) * (x - mean))) / (k - 1.0)
    } else {
        f64::NAN
    };
    let stdev = var.sqrt();
    let mse = compensated_sum(v.iter().map(|x| (x - truth) * (x - truth))) / k;
    BenchmarkRow {
        n,
        method,
        functional,
        truth,
        mean,
        bias: mean - truth,
        stdev,
        rmse: mse.sqrt(),
        bias_se: stdev / k.sqrt(),
        stdev_se: stdev / (2.0 * (k - 1.0)).sqrt(),
        successes: v.len(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_benchmark_is_reproducible() {
        let spec = BenchmarkSpec {
            truth: SizeDistribution::weibull(1.0, 1.2).unwrap(),
            sample_sizes: vec![30],
            replicates: 6,
            methods: vec![Method::Ml, Method::Mom],
            seed: 5,
            m: 15,
            starts: 2,
            section: None,
        };
        let a = run_benchmark(&spec).unwrap();
        let b = run_benchmark(&spec).unwrap();
        assert_eq!(a.to_tsv(), b.to_tsv());
        assert_eq!(a.rows.len(), 2 * Functional::ALL.len());
        let row = a.row(30, Method::Ml, Functional::Shape).unwrap();
        assert_eq!(row.successes + row.failures, 6);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = BenchmarkSpec::table2(1, 0);
        assert!(run_benchmark(&spec).is_err());
        spec.replicates = 3;
        spec.methods = vec![Method::MlWeighted];
        assert!(run_benchmark(&spec).is_err());
        assert!(BenchmarkSpec::preset("nope", 10, 0).is_err());
    }
}
