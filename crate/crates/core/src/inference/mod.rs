//! Interval estimation and model choice: likelihood-ratio regions with
//! small-sample critical values, parametric bootstrap and AIC ranking.

mod aic;
mod bootstrap;
mod critical;
mod region;

pub use aic::{aic, aic_compare, AicEntry, AicRanking, PARAMETER_COUNT};
pub use bootstrap::{bootstrap_estimate, default_boot_count, BootstrapInterval, BootstrapResult};
pub use critical::{
    chi_square_quantile, critical_value, critical_value_for, simulate_critical_quantiles, CriticalEntry,
    CriticalQuantile, CriticalTable, DevianceSample, DevianceSimulation, ProfileSource, RULE_MIN_N,
};
pub use region::{likelihood_ratio_region, scalar_range, ConfidenceRegion, ProposalScale, RegionOptions, RegionPoint};
