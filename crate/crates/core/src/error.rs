use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("quadrature did not converge on [{lo}, {hi}]: estimated error {error:e} after {evaluations} evaluations")]
    Quadrature {
        lo: f64,
        hi: f64,
        error: f64,
        evaluations: usize,
    },
    #[error("moment of order {0} diverges")]
    DivergentMoment(u32),
    #[error("critical value for p={p}, n={n} is not tabulated; simulate it instead")]
    CriticalValueNotTabulated { p: f64, n: usize },
    #[error("confidence region has no accepted points")]
    EmptyRegion,
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
