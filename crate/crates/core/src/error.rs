use thiserror::Error;

/// Errors produced by the simulation and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("conditioning infeasible: acceptance probability {probability:.3e} is below {floor:.0e}")]
    Infeasible { probability: f64, floor: f64 },

    #[error("capability not available: {0}")]
    Capability(String),

    #[error("integrand is not integrable: {0}")]
    Integrability(String),

    #[error("degenerate phase: scanned minimum {minimum:.3e} at s = {at}")]
    Degenerate { minimum: f64, at: f64 },

    #[error("quadrature did not reach tolerance {requested:.3e} (achieved {achieved:.3e})")]
    Accuracy { requested: f64, achieved: f64 },

    #[error("window [{have_lo}, {have_hi}] does not contain required [{need_lo}, {need_hi}]")]
    Window {
        have_lo: f64,
        have_hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("grid resolution insufficient: {0}")]
    Resolution(String),

    #[error("extrema tracking failed at sigma = {sigma}: {reason}")]
    Tracking { sigma: f64, reason: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
