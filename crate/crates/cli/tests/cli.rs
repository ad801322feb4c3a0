use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use wicksell::estimators::fit_mle;
use wicksell::inference::{likelihood_ratio_region, RegionOptions};
use wicksell::{Family, FitOptions, Functional, PolygonApproximation, ProfileSample};

fn wicksell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wicksell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn density_rows(args: &[&str]) -> Vec<[f64; 3]> {
    let out = wicksell(&[&["density"], args].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    stdout(&out)
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split('\t').map(|s| s.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

fn at_one(rows: &[[f64; 3]]) -> [f64; 3] {
    *rows.iter().find(|r| r[0] == 1.0).expect("grid has a y=1 row")
}

fn simulate(dir: &Path, name: &str, args: &[&str]) -> std::path::PathBuf {
    let path = dir.join(name);
    let out = wicksell(&[&["simulate", "--output", path.to_str().unwrap()], args].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

fn read_diameters(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn density_reproduces_tabulated_values() {
    let rows = density_rows(&["--family", "weibull", "--params", "1,0.9", "--m", "8"]);
    assert!((at_one(&rows)[1] - 0.37034).abs() < 5e-5);
    let rows = density_rows(&["--family", "lognormal", "--params", "0,0.7", "--points", "10"]);
    assert!((at_one(&rows)[2] - 0.481900).abs() < 1e-6);
}

#[test]
fn density_grid_integrates_to_one() {
    for (family, params) in [("weibull", "1,1.2"), ("lognormal", "0,0.5"), ("posnormal", "3.876,2.816")] {
        let rows = density_rows(&["--family", family, "--params", params, "--points", "4000"]);
        for col in [1, 2] {
            let total: f64 = rows.windows(2).map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[0][col] + w[1][col])).sum();
            assert!((total - 1.0).abs() < 1e-4, "{family} column {col}: {total}");
        }
    }
}

#[test]
fn density_numbers_keep_six_digits() {
    let out = wicksell(&["density", "--family", "weibull", "--params", "1,1.2", "--points", "5"]);
    for field in stdout(&out).lines().skip(1).flat_map(|l| l.split('\t').map(str::to_owned).collect::<Vec<_>>()) {
        let digits = field.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
        assert!(field == "0" || digits >= 6, "{field}");
    }
}

#[test]
fn simulation_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = ["--family", "weibull", "--params", "1,1.2", "--n", "500", "--seed", "42"];
    let a = simulate(dir.path(), "a.csv", &args);
    let b = simulate(dir.path(), "b.csv", &args);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let manifest = |p: &str| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(p)).unwrap()).unwrap();
        v["outputs"] = Value::Null;
        v
    };
    assert_eq!(manifest("a.manifest.json"), manifest("b.manifest.json"));
    assert_eq!(manifest("a.manifest.json")["seed"], 42);
    let c = simulate(dir.path(), "c.csv", &["--family", "weibull", "--params", "1,1.2", "--n", "500", "--seed", "43"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn empty_simulation_warns() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("empty.csv");
    let out = wicksell(&["simulate", "--family", "lognormal", "--params", "0,0.5", "--n", "0", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "diameter\n");
    assert!(stderr(&out).to_lowercase().contains("warn"), "{}", stderr(&out));
}

#[test]
fn exit_codes_follow_failure_class() {
    let dir = TempDir::new().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_owned()
    };
    let both = write("both.csv", "area,diameter\n1,1\n");
    assert_eq!(wicksell(&["fit", &both]).status.code(), Some(2));
    let neither = write("neither.csv", "size\n1\n");
    assert_eq!(wicksell(&["fit", &neither]).status.code(), Some(2));
    let bad = write("bad.csv", "diameter\n1.0\n0.5\nabc\n");
    let out = wicksell(&["fit", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains(":4:"), "{}", stderr(&out));
    let ok = write("ok.csv", "diameter\n1.0\n0.5\n0.7\n1.2\n");
    assert_eq!(wicksell(&["fit", &ok, "--method", "ml-weighted"]).status.code(), Some(2));
    assert_eq!(wicksell(&["fit", &ok, "--coverage", "1.5"]).status.code(), Some(2));
    assert_eq!(wicksell(&["fit", "/nonexistent/file.csv"]).status.code(), Some(3));

    let lognormal = simulate(dir.path(), "ln.csv", &["--family", "lognormal", "--params", "0,0.5", "--n", "300", "--seed", "3"]);
    let out = wicksell(&["fit", lognormal.to_str().unwrap(), "--family", "posnormal"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["fits"][0]["fit"]["converged"], false);
}

#[test]
fn aic_selection_reports_winner() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "w.csv", &["--family", "weibull", "--params", "1,1.2", "--n", "400", "--seed", "8"]);
    let out = wicksell(&["fit", data.to_str().unwrap(), "--family", "weibull,lognormal", "--select", "aic"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["schema_version"], 1);
    let sel = &report["selection"];
    assert_eq!(sel["best"], "weibull");
    assert_eq!(sel["ranking"][0]["delta_aic"], 0.0);
    let ll = |i: usize| report["fits"][i]["fit"]["log_likelihood"].as_f64().unwrap();
    let delta = sel["ranking"][1]["delta_aic"].as_f64().unwrap();
    assert!((delta - 2.0 * (ll(0) - ll(1))).abs() < 1e-9);
}

#[test]
fn censored_column_is_used() {
    let dir = TempDir::new().unwrap();
    let data = simulate(
        dir.path(),
        "sec.csv",
        &["--family", "weibull", "--params", "1,1.2", "--n", "400", "--section-w", "10", "--section-h", "10", "--seed", "5"],
    );
    let text = std::fs::read_to_string(&data).unwrap();
    let cut = text.lines().filter(|l| l.ends_with(",1")).count();
    assert!(cut > 0);
    let out = wicksell(&["fit", data.to_str().unwrap(), "--method", "ml-censored"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["sample"]["censored"], cut);
    assert_eq!(report["fits"][0]["fit"]["converged"], true);
    let out = wicksell(&[
        "fit", data.to_str().unwrap(), "--method", "ml-weighted", "--section-w", "10", "--section-h", "10",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn simulated_data_round_trips_through_fit() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "rt.csv", &["--family", "weibull", "--params", "1,1.2", "--n", "2000", "--seed", "21"]);
    let out = wicksell(&["fit", data.to_str().unwrap(), "--family", "weibull", "--format", "tsv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value = |q: &str| -> f64 {
        let line = stdout(&out).lines().find(|l| l.split('\t').nth(2) == Some(q)).unwrap().to_owned();
        line.split('\t').nth(3).unwrap().parse().unwrap()
    };
    assert!((value("lambda") - 1.0).abs() < 0.1);
    assert!((value("k") - 1.2).abs() < 0.1);
}

#[test]
fn wilks_fit_matches_library() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "lib.csv", &["--family", "weibull", "--params", "1,1.2", "--n", "100", "--seed", "77"]);
    let region_tsv = dir.path().join("region.tsv");
    let out = wicksell(&[
        "fit", data.to_str().unwrap(), "--ci", "wilks", "--region-points", "2000", "--seed", "9",
        "--region-tsv", region_tsv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();

    let sample = ProfileSample::from_diameters(read_diameters(&data)).unwrap();
    let approx = PolygonApproximation::new(15).unwrap();
    let f = fit_mle(&sample, Family::Weibull, &approx, &FitOptions::default()).unwrap();
    let fitted = &report["fits"][0];
    assert_eq!(fitted["fit"]["parameters"]["lambda"].as_f64().unwrap(), f.dist.scale());
    assert_eq!(fitted["fit"]["parameters"]["k"].as_f64().unwrap(), f.dist.shape());
    let options = RegionOptions {
        n_points: 2000,
        seed: 9,
        ..RegionOptions::default()
    };
    let region = likelihood_ratio_region(&sample, &f, &approx, &options).unwrap();
    let range = &fitted["wilks"]["ranges"]["mean_diameter"];
    let lib = region.derived_ranges[&Functional::MeanDiameter];
    assert_eq!(range[0].as_f64().unwrap(), lib[0]);
    assert_eq!(range[1].as_f64().unwrap(), lib[1]);
    assert_eq!(std::fs::read_to_string(&region_tsv).unwrap(), region.to_tsv());
}

#[test]
fn benchmark_writes_reports() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"truth":{"family":"weibull","lambda":1.0,"k":1.2},"sample_sizes":[50],"replicates":4,"methods":["mom"],"seed":3}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = wicksell(&["benchmark", "--spec", spec.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["benchmark.tsv", "benchmark.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(a.join("benchmark.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!(!report["rows"].as_array().unwrap().is_empty());
}
