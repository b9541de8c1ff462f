use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the elliptic domain x > -1")]
    DomainViolation { x: f64, y: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The structure is parabolic or hyperbolic at this point.
    #[error("not elliptic{}: discriminant {disc:e} <= 0", at_suffix(.at))]
    NotElliptic { disc: f64, at: Option<(f64, f64)> },

    #[error("spectral parameter {re} + {im}i is not in the upper half-plane")]
    InvalidBranch { re: f64, im: f64 },

    #[error("degenerate structure: sup |mu| = {sup_mu} >= 1")]
    DegenerateStructure { sup_mu: f64 },

    #[error("finite-difference stencil of step {h:e} at ({x}, {y}) leaves the field domain")]
    StencilOutOfDomain { x: f64, y: f64, h: f64 },

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("analytic derivative mode requested but the field carries no closed-form partials")]
    MissingAnalyticPartials,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn at_suffix(at: &Option<(f64, f64)>) -> String {
    at.map(|(x, y)| format!(" at ({x}, {y})"))
        .unwrap_or_default()
}

impl Error {
    /// Attaches a location to a location-less `NotElliptic`.
    pub fn located(self, x: f64, y: f64) -> Self {
        match self {
            Error::NotElliptic { disc, at: None } => Error::NotElliptic {
                disc,
                at: Some((x, y)),
            },
            other => other,
        }
    }
}
