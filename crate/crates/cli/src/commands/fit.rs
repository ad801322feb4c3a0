use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wicksell::estimators::{fit, AreaConvention};
use wicksell::inference::{
    aic, aic_compare, bootstrap_estimate, default_boot_count, likelihood_ratio_region, AicRanking,
    BootstrapResult, ConfidenceRegion, RegionOptions,
};
use wicksell::{Family, FitOptions, FitResult, Functional, Method, PolygonApproximation, ProfileSample};

use super::{emit, section, to_json, SCHEMA_VERSION};
use crate::error::{config, data, from_lib_config, CliError, CliResult};
use crate::format::num;
use crate::input::read_measurements;
use crate::{FitArgs, IntervalKind, OutputFormat, Selection};

#[derive(Serialize)]
struct SampleSummary {
    input: String,
    interior: usize,
    censored: usize,
    section: Option<[f64; 2]>,
    area_convention: &'static str,
}

/// Likelihood region without its point cloud, which goes to `--region-tsv`.
#[derive(Serialize)]
struct RegionSummary {
    p: f64,
    critical_value: f64,
    mle: [f64; 2],
    mle_log_likelihood: f64,
    accepted_points: usize,
    evaluated: usize,
    proposal_sd: [f64; 2],
    retried: bool,
    degenerate: bool,
    ranges: BTreeMap<Functional, [f64; 2]>,
    notes: Vec<String>,
}

impl From<&ConfidenceRegion> for RegionSummary {
    fn from(r: &ConfidenceRegion) -> Self {
        Self {
            p: r.p,
            critical_value: r.critical_value,
            mle: r.mle,
            mle_log_likelihood: r.mle_log_likelihood,
            accepted_points: r.accepted.len(),
            evaluated: r.evaluated,
            proposal_sd: r.proposal_sd,
            retried: r.retried,
            degenerate: r.degenerate,
            ranges: r.derived_ranges.clone(),
            notes: r.notes.clone(),
        }
    }
}

#[derive(Serialize)]
struct BootstrapSummary {
    n_boot: usize,
    p: f64,
    successes: usize,
    failures: usize,
    flagged: bool,
    intervals: BTreeMap<Functional, BootstrapRange>,
}

#[derive(Serialize)]
struct BootstrapRange {
    estimate: f64,
    bias: f64,
    corrected: f64,
    lo: f64,
    hi: f64,
}

impl From<&BootstrapResult> for BootstrapSummary {
    fn from(b: &BootstrapResult) -> Self {
        Self {
            n_boot: b.n_boot,
            p: b.p,
            successes: b.successes,
            failures: b.failures,
            flagged: b.flagged,
            intervals: b
                .intervals
                .iter()
                .map(|i| {
                    (
                        i.functional,
                        BootstrapRange {
                            estimate: i.estimate,
                            bias: i.bias,
                            corrected: i.corrected,
                            lo: i.lo,
                            hi: i.hi,
                        },
                    )
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct FamilyReport {
    family: Family,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wilks: Option<RegionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapSummary>,
}

#[derive(Serialize)]
struct Selected {
    criterion: &'static str,
    best: Option<Family>,
    tie: bool,
    ranking: Vec<Ranked>,
}

#[derive(Serialize)]
struct Ranked {
    family: Family,
    aic: f64,
    delta_aic: f64,
}

#[derive(Serialize)]
struct Report {
    schema_version: u32,
    version: &'static str,
    method: Method,
    m: usize,
    seed: u64,
    sample: SampleSummary,
    fits: Vec<FamilyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<Selected>,
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    if !(args.coverage > 0.0 && args.coverage < 1.0) {
        return Err(config(format!("--coverage must lie in (0, 1), got {}", args.coverage)));
    }
    if args.family.is_empty() {
        return Err(config("--family needs at least one family"));
    }
    let likelihood = args.method.likelihood_mode().is_some();
    if args.select == Some(Selection::Aic) {
        if !likelihood {
            return Err(config(format!("AIC selection needs a likelihood method, not {}", args.method)));
        }
        if args.family.len() < 2 {
            return Err(config("AIC selection needs at least two families"));
        }
    }
    if args.ci == Some(IntervalKind::Wilks) && !likelihood {
        return Err(config(format!("Wilks intervals need a likelihood method, not {}", args.method)));
    }
    let section = section(&args.section)?;
    if args.method == Method::MlWeighted && section.is_none() {
        return Err(config("ml-weighted needs --section-w and --section-h"));
    }
    let approx = PolygonApproximation::new(args.m).map_err(config)?;
    let convention = if args.literal_area {
        AreaConvention::Literal
    } else {
        AreaConvention::EqualArea
    };
    let measurements = read_measurements(&args.input, convention)?;
    if !measurements.censored.is_empty() && args.method != Method::MlCensored && args.method != Method::MlWeighted {
        log::warn!(
            "{} censored profiles ignored by {}; use ml-censored to include them",
            measurements.censored.len(),
            args.method
        );
    }
    let sample = measurements.into_sample(section)?;
    let options = FitOptions::default();

    let mut fits = Vec::new();
    let mut selection = None;
    if args.select == Some(Selection::Aic) {
        let ranking = aic_compare(&sample, &args.family, args.method, &approx, &options).map_err(from_lib_config)?;
        selection = Some(selected(&ranking));
        for e in &ranking.entries {
            fits.push(FamilyReport::fitted(e.family, e.fit.clone()));
        }
        for (family, why) in &ranking.excluded {
            fits.push(FamilyReport::failed(*family, why.clone()));
        }
    } else {
        for &family in &args.family {
            fits.push(match fit(&sample, family, args.method, &approx, &options) {
                Ok(f) => FamilyReport::fitted(family, f),
                Err(wicksell::Error::Fit(why)) => FamilyReport::failed(family, why),
                Err(e) => return Err(from_lib_config(e)),
            });
        }
    }

    if let Some(kind) = args.ci {
        let best = selection.as_ref().and_then(|s| s.best);
        let one_family = fits.len() == 1 || best.is_some();
        for report in fits.iter_mut() {
            if best.is_some_and(|b| b != report.family) {
                continue;
            }
            let Some(f) = report.fit.as_ref().filter(|f| f.converged) else {
                continue;
            };
            match kind {
                IntervalKind::Wilks => {
                    let options = RegionOptions {
                        p: args.coverage,
                        n_points: args.region_points,
                        seed: args.seed,
                        ..RegionOptions::default()
                    };
                    let region = likelihood_ratio_region(&sample, f, &approx, &options).map_err(from_lib_config)?;
                    if let Some(path) = &args.region_tsv {
                        let path = region_path(path, report.family, one_family);
                        std::fs::write(&path, region.to_tsv())
                            .map_err(|e| data(format!("cannot write {}: {e}", path.display())))?;
                    }
                    report.wilks = Some(RegionSummary::from(&region));
                }
                IntervalKind::Bootstrap => {
                    let n_boot = args.boot.unwrap_or_else(|| default_boot_count(args.method));
                    let b = bootstrap_estimate(
                        &sample,
                        report.family,
                        args.method,
                        n_boot,
                        args.coverage,
                        args.seed,
                        &approx,
                        &FitOptions::fast(),
                    )
                    .map_err(from_lib_config)?;
                    report.bootstrap = Some(BootstrapSummary::from(&b));
                }
            }
        }
    }

    let report = Report {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION"),
        method: args.method,
        m: args.m,
        seed: args.seed,
        sample: summary(&args.input, &sample, args.literal_area),
        fits,
        selection,
    };
    let text = match args.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Tsv => to_tsv(&report),
    };
    emit(args.output.as_deref(), &text)?;

    let failed: Vec<&str> = report
        .fits
        .iter()
        .filter(|r| !r.fit.as_ref().is_some_and(|f| f.converged))
        .map(|r| r.family.name())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Convergence(format!("no converged fit for {}", failed.join(", "))))
    }
}

impl FamilyReport {
    fn fitted(family: Family, fit: FitResult) -> Self {
        Self {
            family,
            aic: fit.log_likelihood.map(aic),
            fit: Some(fit),
            error: None,
            wilks: None,
            bootstrap: None,
        }
    }

    fn failed(family: Family, error: String) -> Self {
        Self {
            family,
            fit: None,
            aic: None,
            error: Some(error),
            wilks: None,
            bootstrap: None,
        }
    }
}

fn selected(ranking: &AicRanking) -> Selected {
    Selected {
        criterion: "aic",
        best: ranking.best().map(|e| e.family),
        tie: ranking.tie,
        ranking: ranking
            .entries
            .iter()
            .map(|e| Ranked {
                family: e.family,
                aic: e.aic,
                delta_aic: e.delta_aic,
            })
            .collect(),
    }
}

fn summary(input: &Path, sample: &ProfileSample, literal: bool) -> SampleSummary {
    SampleSummary {
        input: input.display().to_string(),
        interior: sample.interior().len(),
        censored: sample.censored().len(),
        section: sample.section().map(|(w, h)| [w, h]),
        area_convention: if literal { "literal" } else { "equal_area" },
    }
}

/// `region.tsv` → `region.weibull.tsv` when several families are reported.
fn region_path(path: &Path, family: Family, single: bool) -> PathBuf {
    if single {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map_or_else(|| "region".into(), |s| s.to_string_lossy().into_owned());
    let ext = path.extension().map_or_else(|| "tsv".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{}.{ext}", family.name()))
}

/// Long format: one row per family and quantity.
fn to_tsv(report: &Report) -> String {
    let mut out = String::from("family\tmethod\tquantity\testimate\tlo\thi\tconverged\n");
    for r in &report.fits {
        let Some(f) = &r.fit else {
            out.push_str(&format!("{}\t{}\terror\t\t\t\tfalse\n", r.family.name(), report.method));
            continue;
        };
        let mut row = |quantity: &str, value: f64, range: Option<[f64; 2]>| {
            let (lo, hi) = range.map_or((String::new(), String::new()), |[a, b]| (num(a), num(b)));
            out.push_str(&format!(
                "{}\t{}\t{quantity}\t{}\t{lo}\t{hi}\t{}\n",
                r.family.name(),
                report.method,
                num(value),
                f.converged
            ));
        };
        let (scale_name, shape_name) = r.family.param_names();
        for functional in Functional::ALL {
            let value = functional.of(&f.dist);
            let range = r
                .wilks
                .as_ref()
                .and_then(|w| w.ranges.get(&functional).copied())
                .or_else(|| {
                    r.bootstrap
                        .as_ref()
                        .and_then(|b| b.intervals.get(&functional).map(|i| [i.lo, i.hi]))
                });
            let name = match functional {
                Functional::Scale => scale_name,
                Functional::Shape => shape_name,
                other => other.name(),
            };
            row(name, value, range);
        }
        if let Some(ll) = f.log_likelihood {
            row("log_likelihood", ll, None);
        }
        if let Some(a) = r.aic {
            row("aic", a, None);
        }
        if let Some(d) = f.distance {
            row("distance", d, None);
        }
    }
    out
}
