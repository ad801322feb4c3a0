//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Takes roughly a quarter of an hour on one core.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use wicksell::estimators::{fit, fit_mde, fit_mle, fit_mom_from_moments, log_likelihood, LikelihoodMode};
use wicksell::inference::{
    chi_square_quantile, likelihood_ratio_region, simulate_critical_quantiles, DevianceSimulation, ProposalScale,
    RegionOptions,
};
use wicksell::profile_density::{
    approx_profile_pdf, exact_profile_pdf, profile_mean, profile_mean_square, weighted_profile_pdf,
};
use wicksell::quadrature::{integrate_to_infinity, Tolerance};
use wicksell::rng::stream;
use wicksell::simulation::{run_benchmark, simulate_profiles, simulate_profiles_with, BenchmarkSpec};
use wicksell::{
    Family, FitOptions, Functional, Method, PolygonApproximation, ProfileDensity, ProfileSample, SizeDistribution,
};

type Outcome = (bool, String);

fn grid() -> Vec<SizeDistribution> {
    let mut v = Vec::new();
    for (a, b) in [(1.0, 0.9), (1.0, 1.2), (2.0, 3.0)] {
        v.push(SizeDistribution::weibull(a, b).unwrap());
    }
    for (a, b) in [(0.0, 0.5), (0.0, 0.7), (0.5, 0.3)] {
        v.push(SizeDistribution::lognormal(a, b).unwrap());
    }
    for (a, b) in [(3.876, 2.816), (3.0, 3.0), (1.0, 0.3)] {
        v.push(SizeDistribution::positive_normal(a, b).unwrap());
    }
    v
}

fn table1_laws() -> [SizeDistribution; 4] {
    [
        SizeDistribution::weibull(1.0, 0.9).unwrap(),
        SizeDistribution::weibull(1.0, 1.2).unwrap(),
        SizeDistribution::lognormal(0.0, 0.7).unwrap(),
        SizeDistribution::positive_normal(3.876, 2.816).unwrap(),
    ]
}

fn table1() -> Outcome {
    let rows: [(usize, [f64; 4]); 4] = [
        (8, [0.37034, 0.50279, 0.47966, 0.07421]),
        (15, [0.37169, 0.50450, 0.48126, 0.07662]),
        (100, [0.37223, 0.50515, 0.48189, 0.07655]),
        (1000, [0.372242, 0.505167, 0.481899, 0.076559]),
    ];
    let exact_row = [0.372242, 0.505167, 0.481900, 0.076559];
    let laws = table1_laws();
    let mut worst_approx = 0.0f64;
    for (m, expected) in rows {
        let approx = PolygonApproximation::new(m).unwrap();
        for (law, want) in laws.iter().zip(expected) {
            worst_approx = worst_approx.max((approx_profile_pdf(law, &approx, 1.0) - want).abs());
        }
    }
    let mut worst_exact = 0.0f64;
    for (law, want) in laws.iter().zip(exact_row) {
        worst_exact = worst_exact.max((exact_profile_pdf(law, 1.0).unwrap() - want).abs());
    }
    (
        worst_approx <= 5e-5 && worst_exact <= 1e-6,
        format!("max |g_m(1) - table| = {worst_approx:.2e} (tol 5e-5), max |g(1) - table| = {worst_exact:.2e} (tol 1e-6)"),
    )
}

fn normalization() -> Outcome {
    let tol = Tolerance {
        abs: 1e-11,
        rel: 1e-11,
        max_subdivisions: 8000,
    };
    let (mut worst_mass, mut worst_mean) = (0.0f64, 0.0f64);
    for d in grid() {
        for m in [1usize, 2, 8, 15, 100] {
            let approx = PolygonApproximation::new(m).unwrap();
            let g = ProfileDensity::new(d, &approx);
            let scale = d.mean_diameter();
            let mass = integrate_to_infinity(|y| g.pdf(y), 0.0, scale, tol).unwrap().value;
            let mean = integrate_to_infinity(|y| y * g.pdf(y), 0.0, scale, tol).unwrap().value;
            worst_mass = worst_mass.max((mass - 1.0).abs());
            worst_mean = worst_mean.max((mean - profile_mean(&d)).abs());
        }
    }
    (
        worst_mass <= 1e-6 && worst_mean <= 1e-6,
        format!("max |∫g - 1| = {worst_mass:.2e}, max |∫y·g - (π/4)E(D²)/E(D)| = {worst_mean:.2e} (tol 1e-6)"),
    )
}

fn coefficients() -> Outcome {
    let mut worst = 0.0f64;
    let mut ordered = true;
    for m in 1..=10_000usize {
        let approx = PolygonApproximation::new(m).unwrap();
        let total: f64 = approx.p().iter().sum();
        let x = approx.x();
        let h = std::f64::consts::PI / (2.0 * m as f64);
        worst = worst
            .max((total - 1.0).abs())
            .max((x[0] - 1.0).abs())
            .max(x[m].abs())
            .max((approx.a() * h.sin() / h - 1.0).abs());
        ordered &= x.windows(2).all(|w| w[1] < w[0]);
    }
    (
        worst < 1e-12 && ordered,
        format!("m = 1..10000: max identity error {worst:.2e}, abscissae decreasing: {ordered}"),
    )
}

fn table2() -> Outcome {
    let spec = BenchmarkSpec {
        sample_sizes: vec![200],
        methods: vec![Method::Ml, Method::Mom],
        ..BenchmarkSpec::table2(1000, 2024)
    };
    let report = run_benchmark(&spec).unwrap();
    let ml = report.row(200, Method::Ml, Functional::MedianDiameter).unwrap();
    let mom = report.row(200, Method::Mom, Functional::MedianDiameter).unwrap();
    let ok = (-0.004..=0.009).contains(&ml.bias)
        && (ml.stdev / 6.1e-2 - 1.0).abs() <= 0.10
        && (mom.stdev / 6.7e-2 - 1.0).abs() <= 0.10;
    (
        ok,
        format!(
            "n=200, 1000 reps: ML median bias {:.2e} ± {:.1e}, stdev {:.4} (target 0.061); MoM stdev {:.4} (target 0.067); failures ML {} MoM {}",
            ml.bias, ml.bias_se, ml.stdev, mom.stdev, ml.failures, mom.failures
        ),
    )
}

fn consistency() -> Outcome {
    const N: usize = 100_000;
    const PILOT_N: usize = 4000;
    const PILOT_REPS: usize = 16;
    let truths = [
        SizeDistribution::weibull(1.0, 1.2).unwrap(),
        SizeDistribution::lognormal(0.0, 0.5).unwrap(),
        SizeDistribution::positive_normal(1.0, 0.7).unwrap(),
    ];
    let approx = PolygonApproximation::new(15).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (fi, truth) in truths.iter().enumerate() {
        for (mi, method) in [Method::Ml, Method::Mom, Method::Mde].into_iter().enumerate() {
            let cell = (fi * 3 + mi) as u64;
            let pilot: Vec<[f64; 2]> = (0..PILOT_REPS)
                .into_par_iter()
                .filter_map(|r| {
                    let mut rng = stream(9000 + cell, r as u64);
                    let s = ProfileSample::from_diameters(simulate_profiles_with(truth, PILOT_N, &mut rng)).ok()?;
                    fit(&s, truth.family(), method, &approx, &FitOptions::fast()).ok().map(|f| f.dist.params())
                })
                .collect();
            let sd: Vec<f64> = (0..2)
                .map(|j| {
                    let mean = pilot.iter().map(|p| p[j]).sum::<f64>() / pilot.len() as f64;
                    let var = pilot.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (pilot.len() - 1) as f64;
                    (var * PILOT_N as f64 / N as f64).sqrt()
                })
                .collect();
            let sample = ProfileSample::from_diameters(simulate_profiles(truth, N, 7000 + cell)).unwrap();
            let est = fit(&sample, truth.family(), method, &approx, &FitOptions::default()).unwrap();
            let k = if method == Method::Mde { 6.0 } else { 3.0 };
            let z: Vec<f64> = (0..2).map(|j| (est.dist.params()[j] - truth.params()[j]) / sd[j]).collect();
            let cell_ok = z.iter().all(|z| z.abs() <= k);
            ok &= cell_ok;
            parts.push(format!(
                "{}/{}: z=({:+.2},{:+.2}){}",
                truth.family().name(),
                method,
                z[0],
                z[1],
                if cell_ok { "" } else { " !" }
            ));
        }
    }
    (ok, format!("n=1e5, |error| in pilot stdevs (bound 3, MDE 6): {}", parts.join(", ")))
}

fn mom_self_consistency() -> Outcome {
    let mut worst = 0.0f64;
    for d in grid() {
        let f = fit_mom_from_moments(d.family(), profile_mean(&d), profile_mean_square(&d)).unwrap();
        for (a, b) in f.dist.params().iter().zip(d.params()) {
            worst = worst.max((a - b).abs() / (1.0 + b.abs()));
        }
    }
    (worst <= 1e-8, format!("max relative parameter error {worst:.2e} over 9 laws (tol 1e-8)"))
}

fn wilks() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();

    let big = simulate_critical_quantiles(Family::Weibull, 1.2, 10_000, 0.95, 15_000, 31).unwrap();
    let big_ok = (big.value - 5.991).abs() <= 0.15;
    ok &= big_ok;
    parts.push(format!(
        "n=1e4 q95 {:.3} ± {:.3} ({} sims, {} failed)",
        big.value, big.mc_error, big.sims, big.failures
    ));

    let rule = chi_square_quantile(0.96, 2);
    for n in [20usize, 50] {
        let q = DevianceSimulation {
            sims: 4000,
            ..DevianceSimulation::new(Family::Weibull, 1.2, n, 40 + n as u64)
        }
        .run()
        .unwrap()
        .critical_quantile(0.95);
        let within = (q.value - rule).abs() <= 0.4;
        ok &= within;
        parts.push(format!("n={n} q95 {:.3} ± {:.3} vs {rule:.3}", q.value, q.mc_error));
    }

    for n in [20usize, 50] {
        let (covered, total, failed) = coverage(n, 1000);
        let rate = covered as f64 / total as f64;
        ok &= (0.92..=0.98).contains(&rate);
        parts.push(format!("coverage n={n} {rate:.3} ({failed} unusable of {total})"));
    }
    (ok, parts.join("; "))
}

/// Share of replicates whose 95% mean-diameter range covers the truth.
/// Replicates without a usable range count as not covering.
fn coverage(n: usize, reps: usize) -> (usize, usize, usize) {
    let truth = SizeDistribution::weibull(1.0, 1.2).unwrap();
    let target = truth.mean_diameter();
    let approx = PolygonApproximation::new(15).unwrap();
    let outcomes: Vec<Option<bool>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(5000 + n as u64, r as u64);
            let sample = ProfileSample::from_diameters(simulate_profiles_with(&truth, n, &mut rng)).ok()?;
            let f = fit_mle(&sample, Family::Weibull, &approx, &FitOptions::default()).ok()?;
            if !f.converged {
                return None;
            }
            let options = RegionOptions {
                p: 0.95,
                n_points: 5000,
                seed: r as u64,
                proposal: ProposalScale::ObservedInformation,
                inflation: 5.0,
            };
            let region = likelihood_ratio_region(&sample, &f, &approx, &options).ok()?;
            let [lo, hi] = *region.derived_ranges.get(&Functional::MeanDiameter)?;
            Some(lo <= target && target <= hi)
        })
        .collect();
    let covered = outcomes.iter().filter(|o| **o == Some(true)).count();
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    (covered, reps, failed)
}

fn limits() -> Outcome {
    let one = PolygonApproximation::new(1).unwrap();
    let fifteen = PolygonApproximation::new(15).unwrap();
    let a = one.a();
    let (mut single, mut weighted, mut censored) = (0.0f64, 0.0f64, 0.0f64);
    for (i, d) in grid().iter().enumerate() {
        for j in 1..=40 {
            let y = j as f64 * 0.1 * d.mean_diameter();
            let analytic = d.sf(y / a) / (a * d.mean_diameter());
            single = single.max((approx_profile_pdf(d, &one, y) - analytic).abs());
            let plain = approx_profile_pdf(d, &fifteen, y);
            let w = weighted_profile_pdf(d, &fifteen, y, 1e7, 1e7).unwrap();
            weighted = weighted.max((w - plain).abs());
        }
        let sample = ProfileSample::from_diameters(simulate_profiles(d, 100, i as u64)).unwrap();
        let probe = d.rescaled(0.9).unwrap();
        let lo = log_likelihood(&sample, &probe, &fifteen, LikelihoodMode::Ordinary).unwrap();
        let lc = log_likelihood(&sample, &probe, &fifteen, LikelihoodMode::Censored).unwrap();
        censored = censored.max((lo - lc).abs());
    }
    (
        single < 1e-12 && weighted < 1e-5 && censored == 0.0,
        format!("m=1 vs analytic {single:.1e}; weighted(1e7) vs plain {weighted:.1e}; censored(empty) vs ordinary {censored:.1e}"),
    )
}

fn timing() -> Outcome {
    let truth = SizeDistribution::weibull(1.0, 1.2).unwrap();
    let approx = PolygonApproximation::new(15).unwrap();
    let options = FitOptions::default();
    let (mut ml, mut mde) = (Vec::new(), Vec::new());
    for r in 0..11u64 {
        let sample = ProfileSample::from_diameters(simulate_profiles(&truth, 200, 300 + r)).unwrap();
        let t = Instant::now();
        fit_mle(&sample, Family::Weibull, &approx, &options).unwrap();
        ml.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        fit_mde(&sample, Family::Weibull, &approx, &options).unwrap();
        mde.push(t.elapsed().as_secs_f64());
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (a, b) = (median(&mut ml), median(&mut mde));
    (a <= b, format!("n=200 Weibull: median ML {:.1} ms, MDE {:.1} ms, ratio MDE/ML {:.1}", a * 1e3, b * 1e3, b / a))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("C1 profile density at y=1", table1),
        ("C2 normalization and mean", normalization),
        ("C3 polygon coefficients", coefficients),
        ("C4 replicate study at n=200", table2),
        ("C5 estimator consistency", consistency),
        ("C6 moment self-consistency", mom_self_consistency),
        ("C7 critical values and coverage", wilks),
        ("C8 limiting forms", limits),
        ("C9 ML vs MDE timing", timing),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (ok, detail) = run();
        println!(
            "{} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        std::io::stdout().flush().ok();
        failed += usize::from(!ok);
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
