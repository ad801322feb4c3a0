use serde::Serialize;

use crate::distributions::Family;
use crate::error::{domain, Result};
use crate::estimators::{fit, FitOptions, FitResult, Method, ProfileSample};
use crate::profile_density::PolygonApproximation;

/// Every supported family has a scale and a shape parameter.
pub const PARAMETER_COUNT: usize = 2;

/// Difference in AIC below which two families are reported as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AicEntry {
    pub family: Family,
    pub log_likelihood: f64,
    pub aic: f64,
    pub delta_aic: f64,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AicRanking {
    /// Ascending AIC.
    pub entries: Vec<AicEntry>,
    /// Families whose fit failed, with the reason.
    pub excluded: Vec<(Family, String)>,
    /// The two best families have equal AIC.
    pub tie: bool,
}

impl AicRanking {
    pub fn best(&self) -> Option<&AicEntry> {
        self.entries.first()
    }
}

pub fn aic(log_likelihood: f64) -> f64 {
    2.0 * PARAMETER_COUNT as f64 - 2.0 * log_likelihood
}

/// Fits each family by `method` (a likelihood method) and ranks by AIC.
pub fn aic_compare(
    sample: &ProfileSample,
    families: &[Family],
    method: Method,
    approx: &PolygonApproximation,
    options: &FitOptions,
) -> Result<AicRanking> {
    if families.len() < 2 {
        return domain("AIC comparison needs at least two families");
    }
    if method.likelihood_mode().is_none() {
        return domain(format!("AIC needs a likelihood method, got {method}"));
    }
    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    for &family in families {
        match fit(sample, family, method, approx, options) {
            Ok(f) if f.converged => {
                let ll = f.log_likelihood.expect("likelihood fits report log L");
                entries.push(AicEntry {
                    family,
                    log_likelihood: ll,
                    aic: aic(ll),
                    delta_aic: 0.0,
                    fit: f,
                });
            }
            Ok(f) => excluded.push((family, format!("fit did not converge ({:?})", f.flags))),
            Err(e) => excluded.push((family, e.to_string())),
        }
    }
    entries.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    let best = entries.first().map_or(0.0, |e| e.aic);
    for e in &mut entries {
        e.delta_aic = e.aic - best;
    }
    let tie = entries.len() >= 2 && entries[1].delta_aic.abs() <= TIE_TOLERANCE * (1.0 + best.abs());
    Ok(AicRanking { entries, excluded, tie })
}
