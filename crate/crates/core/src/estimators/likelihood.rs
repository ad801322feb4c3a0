use serde::Serialize;

use super::ProfileSample;
use crate::distributions::SizeDistribution;
use crate::error::{domain, Result};
use crate::profile_density::{PolygonApproximation, ProfileDensity, WeightedProfileDensity};
use crate::scalar::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodMode {
    /// Interior profiles only, ignoring the section edges.
    Ordinary,
    /// Interior profiles plus right-censored profiles cut by the edge.
    Censored,
    /// Interior profiles under the edge-effect weighted density.
    Weighted,
}

/// Log-likelihood of `sample` under `dist`; `-∞` when some density vanishes.
pub fn log_likelihood(
    sample: &ProfileSample,
    dist: &SizeDistribution,
    approx: &PolygonApproximation,
    mode: LikelihoodMode,
) -> Result<f64> {
    Ok(LikelihoodEvaluator::new(sample, approx, mode)?.eval(dist))
}

/// Repeated log-likelihood evaluation over one sample.
#[derive(Debug, Clone)]
pub struct LikelihoodEvaluator<'a> {
    interior: Vec<(f64, f64)>,
    censored: &'a [f64],
    section: Option<(f64, f64)>,
    approx: &'a PolygonApproximation,
    mode: LikelihoodMode,
}

impl<'a> LikelihoodEvaluator<'a> {
    pub fn new(
        sample: &'a ProfileSample,
        approx: &'a PolygonApproximation,
        mode: LikelihoodMode,
    ) -> Result<Self> {
        if mode == LikelihoodMode::Weighted && sample.section().is_none() {
            return domain("weighted likelihood needs the section dimensions");
        }
        Ok(Self {
            interior: sample.interior().iter().map(|&y| (y, y.ln())).collect(),
            censored: sample.censored(),
            section: sample.section(),
            approx,
            mode,
        })
    }

    pub fn mode(&self) -> LikelihoodMode {
        self.mode
    }

    pub fn eval(&self, dist: &SizeDistribution) -> f64 {
        let density = ProfileDensity::new(dist.clone(), self.approx);
        let mut sum = CompensatedSum::new();
        match self.mode {
            LikelihoodMode::Ordinary | LikelihoodMode::Censored => {
                for &(y, ln_y) in &self.interior {
                    let g = density.pdf_with_ln(y, ln_y);
                    if !(g > 0.0) {
                        return f64::NEG_INFINITY;
                    }
                    sum.add(g.ln());
                }
                if self.mode == LikelihoodMode::Censored {
                    for &c in self.censored {
                        let s = density.sf(c);
                        if !(s > 0.0) {
                            return f64::NEG_INFINITY;
                        }
                        sum.add(s.ln());
                    }
                }
            }
            LikelihoodMode::Weighted => {
                let (s1, s2) = self.section.expect("checked in new");
                let weighted = match WeightedProfileDensity::new(density, s1, s2) {
                    Ok(w) => w,
                    Err(_) => return f64::NEG_INFINITY,
                };
                for &(y, ln_y) in &self.interior {
                    let g = weighted.pdf_with_ln(y, ln_y);
                    if !(g > 0.0) {
                        return f64::NEG_INFINITY;
                    }
                    sum.add(g.ln());
                }
            }
        }
        let v = sum.value();
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}
