//! Error kinds shared by all modules.
//!
//! Math-domain failures carry enough context to act on (perturb a window,
//! enlarge a weight, refine a grid). The CLI maps every variant to a
//! machine-readable record and exit code 3; config problems exit 2.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Channel degeneracy: some mode n has (k0+n)^2 equal to lambda0
    /// to within tolerance. The caller should perturb (k0, lambda0).
    #[error("Bragg resonance: mode {mode:?} gives |(k0+n)^2 - lambda0| = {margin:.3e}")]
    BraggResonance { mode: Vec<i64>, margin: f64 },

    /// Contour hypothesis eta > sqrt(max(lambda0,0)) violated, or malformed
    /// truncation/panel parameters.
    #[error("invalid contour: {0}")]
    InvalidContour(String),

    /// A transform or open-channel operation requires weight a > eta*sqrt(m).
    #[error("weight too small: a = {a:.6} but eta*sqrt(m) = {required:.6}")]
    WeightTooSmall { a: f64, required: f64 },

    /// Coefficient decay certificate b fails b > 2a.
    #[error("coefficient decay too slow: b = {b:.6} <= 2a = {two_a:.6}")]
    DecayTooSlow { b: f64, two_a: f64 },

    /// The Fredholm determinant is not certified nonzero at this point.
    #[error("near-singular point: |h| = {h_abs:.3e} <= 10 * refinement gap {gap:.3e}")]
    NearSingular { h_abs: f64, gap: f64 },

    /// |h| fell below certification on the boundary of a search rectangle.
    #[error("uncertified |h| on search-rectangle boundary at lambda = {re:.6} + {im:.6}i")]
    BoundaryZero { re: f64, im: f64 },

    /// A certified lower bound underflowed; indicates a window/contour bug.
    #[error("nonresonance bound violation: {which} = {value:.3e}")]
    BoundViolation { which: &'static str, value: f64 },

    /// A resolvent denominator came closer to zero than the certificate allows.
    #[error("denominator underflow: |zeta^2 + (k+n)^2 - lambda| = {value:.3e} at mode {mode:?}")]
    DenominatorUnderflow { mode: Vec<i64>, value: f64 },

    /// The direct resolvent formula requires Im lambda > 1e-8.
    #[error("lambda not in the upper half-plane: Im lambda = {0:.3e}")]
    NotUpperHalfPlane(f64),

    /// Plot emission could not find the expected CSV inputs.
    #[error("missing data: {0}")]
    MissingData(String),

    /// Construction-time validation failure (grid shape, hypothesis checks,
    /// box decay, domain of validity of an operation).
    #[error("validation: {0}")]
    Validation(String),

    /// Operation outside the v1 support envelope (e.g. direct oracle at m=2).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind tag used by the CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BraggResonance { .. } => "BraggResonance",
            Error::InvalidContour(_) => "InvalidContour",
            Error::WeightTooSmall { .. } => "WeightTooSmall",
            Error::DecayTooSlow { .. } => "DecayTooSlow",
            Error::NearSingular { .. } => "NearSingular",
            Error::BoundaryZero { .. } => "BoundaryZero",
            Error::BoundViolation { .. } => "BoundViolation",
            Error::DenominatorUnderflow { .. } => "DenominatorUnderflow",
            Error::NotUpperHalfPlane(_) => "NotUpperHalfPlane",
            Error::MissingData(_) => "MissingData",
            Error::Validation(_) => "Validation",
            Error::Unsupported(_) => "Unsupported",
            Error::Io(_) => "Io",
            Error::Serde(_) => "Serde",
        }
    }
}
