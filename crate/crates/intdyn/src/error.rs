//! Crate-wide error type.
//!
//! Every failure mode the CLI can surface is a named variant here;
//! [`Error::exit_code`] groups them into "bad input" (exit 2) and
//! "numerical failure" (exit 3) for scripting.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Scenario file could not be parsed or is structurally unusable.
    #[error("config error: {0}")]
    Config(String),
    /// Scenario validation reported hard errors.
    #[error("validation failed:\n{0}")]
    Validation(String),
    /// Operands have inconsistent dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A certification window has no samples.
    #[error("insufficient certification window: {0}")]
    InsufficientWindow(String),
    /// An iterative numeric kernel failed to converge or a guard tripped.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// Some eigenvalue has geometric multiplicity greater than one, so no
    /// single input vector can make the pair controllable.
    #[error("matrix is not cyclic: an eigenvalue has geometric multiplicity > 1")]
    NotCyclic,
    /// A repeated eigenvalue with a nontrivial Jordan chain was detected; the
    /// constructive algorithms here require a semisimple spectrum.
    #[error("defective (non-semisimple) eigenvalue detected; construction supports only 1x1/2x2 real blocks")]
    DefectiveUnsupported,
    /// A pair that must be controllable is not.
    #[error("pair is not controllable: {0}")]
    Uncontrollable(String),
    /// The two matrices share an eigenvalue, so the Sylvester operator is
    /// singular and no unique bounded solution exists.
    #[error("matrices share an eigenvalue; the Sylvester operator is singular")]
    CommonEigenvalue,
    /// A matrix required to be Hurwitz has an eigenvalue with Re >= 0.
    #[error("matrix is not Hurwitz (max Re eigenvalue = {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },
    /// The simulated state exceeded the blow-up guard (unstable gains).
    #[error("state norm {norm:.3e} exceeded the blow-up guard at t = {t:.6} s")]
    StateBlowup { t: f64, norm: f64 },
    /// The synthesis search spent its whole evaluation budget without finding
    /// a stabilizing candidate; carries the best raw point found.
    #[error("search budget exhausted after {iterations} evaluations without a stabilizing candidate")]
    BudgetExhausted {
        iterations: usize,
        best: Box<crate::model::GainSet>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for input/validation problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Validation(_)
            | Error::DimensionMismatch(_)
            | Error::InsufficientWindow(_)
            | Error::Io(_) => 2,
            Error::NumericalFailure(_)
            | Error::NotCyclic
            | Error::DefectiveUnsupported
            | Error::Uncontrollable(_)
            | Error::CommonEigenvalue
            | Error::NotHurwitz { .. }
            | Error::StateBlowup { .. }
            | Error::BudgetExhausted { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
