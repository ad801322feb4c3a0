use std::fmt::Write as _;

use wicksell::profile_density::exact_profile_pdf;
use wicksell::{PolygonApproximation, ProfileDensity};

use super::{distribution, emit};
use crate::error::{config, data, CliResult};
use crate::format::num;
use crate::DensityArgs;

/// Upper grid end when `--to` is not given.
const GRID_QUANTILE: f64 = 0.99999;

pub fn run(args: &DensityArgs) -> CliResult<()> {
    let dist = distribution(args.family, &args.params)?;
    let approx = PolygonApproximation::new(args.m).map_err(config)?;
    if args.points < 2 {
        return Err(config("--points must be at least 2"));
    }
    let to = match args.to {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(config(format!("--to must be positive, got {t}"))),
        None => dist.size_weighted_quantile(GRID_QUANTILE).map_err(config)?,
    };
    let mut grid: Vec<f64> = (0..=args.points).map(|i| to * i as f64 / args.points as f64).collect();
    if !grid.iter().any(|&y| y == 1.0) {
        grid.push(1.0);
        grid.sort_by(f64::total_cmp);
    }
    let g = ProfileDensity::new(dist, &approx);
    let mut out = String::from("y\tg_m\tg_exact\n");
    for y in grid {
        let exact = exact_profile_pdf(&dist, y).map_err(data)?;
        writeln!(out, "{}\t{}\t{}", num(y), num(g.pdf(y)), num(exact)).expect("writing to a string");
    }
    emit(args.output.as_deref(), &out)
}
