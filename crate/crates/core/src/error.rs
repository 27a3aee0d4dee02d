use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} must be finite and in range, got {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid spin measure: {0}")]
    InvalidMeasure(String),

    #[error("variational solution needs t > 0 (got {0}); use boundary_action on t = 0")]
    NonPositiveTime(f64),

    #[error("{solver} did not converge: last iterate {last}, residual {residual:e}")]
    NonConvergence {
        solver: &'static str,
        last: f64,
        residual: f64,
    },

    #[error(
        "coupled fixed point did not converge after {iterations} steps: \
         (M, N) = ({m}, {n}), residuals ({residual_m:e}, {residual_n:e})"
    )]
    CoupledNonConvergence {
        m: f64,
        n: f64,
        residual_m: f64,
        residual_n: f64,
        iterations: usize,
    },

    #[error("minimizer touched the edge of its confinement interval at {0}")]
    Confinement(f64),

    #[error("enumeration needs {needed:.0} occupation vectors, budget is {budget:.0}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("exact enumeration requires a discrete spin measure")]
    NotDiscrete,

    #[error("quadrature did not settle below tolerance (last change {0:e})")]
    Quadrature(f64),

    #[error("{0}")]
    Precondition(String),
}

pub(crate) fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}
