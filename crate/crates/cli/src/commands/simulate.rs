use std::fmt::Write as _;

use serde::Serialize;
use wicksell::simulation::{simulate_bounded_section, simulate_profiles};
use wicksell::Family;

use super::{distribution, emit, manifest_path, section, to_json, Manifest};
use crate::error::{config, CliResult};
use crate::SimulateArgs;

#[derive(Serialize)]
struct Config {
    family: Family,
    params: [f64; 2],
    n: usize,
    section: Option<[f64; 2]>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let dist = distribution(args.family, &args.params)?;
    let section = section(&args.section)?;
    if args.n == 0 {
        log::warn!("n = 0: writing a header-only file");
    }
    let mut out = String::new();
    match section {
        None => {
            out.push_str("diameter\n");
            for y in simulate_profiles(&dist, args.n, args.seed) {
                writeln!(out, "{y}").expect("writing to a string");
            }
        }
        Some((w, h)) => {
            let sample = simulate_bounded_section(&dist, args.n as f64, w, h, args.seed).map_err(config)?;
            out.push_str("diameter,censored\n");
            for y in sample.interior() {
                writeln!(out, "{y},0").expect("writing to a string");
            }
            for y in sample.censored() {
                writeln!(out, "{y},1").expect("writing to a string");
            }
        }
    }
    emit(args.output.as_deref(), &out)?;
    if let Some(path) = &args.output {
        let cfg = Config {
            family: args.family,
            params: dist.params(),
            n: args.n,
            section: section.map(|(w, h)| [w, h]),
        };
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let manifest = Manifest::new("simulate", args.seed, &cfg, vec![name]);
        emit(Some(&manifest_path(path)), &to_json(&manifest))?;
    }
    Ok(())
}
