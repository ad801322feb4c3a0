use std::path::Path;

use wicksell::estimators::{effective_diameters_with, AreaConvention, ProfileSample};

use crate::error::{config, data, CliResult};

/// Profile measurements read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub interior: Vec<f64>,
    pub censored: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Area,
    Diameter,
}

/// Reads a CSV with a header row, exactly one of `area` or `diameter`, and
/// an optional 0/1 `censored` column.
pub fn read_measurements(path: &Path, convention: AreaConvention) -> CliResult<Measurements> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| data(format!("{}: {e}", path.display())))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (column, value_idx) = match (find("area"), find("diameter")) {
        (Some(i), None) => (Column::Area, i),
        (None, Some(i)) => (Column::Diameter, i),
        (Some(_), Some(_)) => {
            return Err(config(format!(
                "{}: both 'area' and 'diameter' columns present; keep exactly one",
                path.display()
            )))
        }
        (None, None) => {
            return Err(config(format!(
                "{}: need an 'area' or a 'diameter' column",
                path.display()
            )))
        }
    };
    let censored_idx = find("censored");
    let mut out = Measurements {
        interior: Vec::new(),
        censored: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record.get(value_idx).unwrap_or("");
        let value: f64 = field
            .parse()
            .map_err(|_| data(format!("{}:{line}: cannot parse '{field}' as a number", path.display())))?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(data(format!("{}:{line}: values must be positive, got {value}", path.display())));
        }
        let y = match column {
            Column::Diameter => value,
            Column::Area => effective_diameters_with(&[value], convention).map_err(data)?[0],
        };
        let cut = match censored_idx.map(|i| record.get(i).unwrap_or("")) {
            None | Some("") | Some("0") => false,
            Some("1") => true,
            Some(other) => {
                return Err(data(format!(
                    "{}:{line}: 'censored' must be 0 or 1, got '{other}'",
                    path.display()
                )))
            }
        };
        if cut {
            out.censored.push(y);
        } else {
            out.interior.push(y);
        }
    }
    if out.interior.is_empty() && out.censored.is_empty() {
        return Err(data(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

impl Measurements {
    pub fn into_sample(self, section: Option<(f64, f64)>) -> CliResult<ProfileSample> {
        ProfileSample::new(self.interior, self.censored, section).map_err(data)
    }
}
