use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates the precondition of the operation.
    #[error("invalid {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// A textual distribution or chain spec string could not be parsed.
    #[error("parse error at `{token}`: {reason}")]
    Parse { token: String, reason: String },

    /// The input is well formed but the quantity is undefined on it
    /// (e.g. relative error of an all-zero window).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The p-moment of the law is infinite, so `v_p` and the inverse curve
    /// do not exist.
    #[error("law `{law}` has an infinite {p}-moment (compressible case)")]
    Compressible { law: String, p: f64 },

    /// A root finder exhausted its bracket or met an undeclared discontinuity.
    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// Rejection sampling never observed the conditioning event.
    #[error("conditioning event not observed within {attempts} attempts")]
    ConditioningBudget { attempts: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than by the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument { .. } | Error::Parse { .. } | Error::Compressible { .. }
        )
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "p",
            format!("must be a positive finite real, got {p}"),
        ))
    }
}
