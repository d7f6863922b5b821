use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A formula would divide by zero (or diverge) for this input.
    #[error("singularity: {0}")]
    Singularity(String),
    /// A configuration or step-size constraint is violated.
    #[error("configuration error: {0}")]
    Config(String),
    /// A precondition of a closed-form result does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An integrator lost accuracy beyond its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A least-squares problem is singular or under-determined.
    #[error("estimation error: {0}")]
    Estimation(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

macro_rules! ensure {
    ($cond:expr, $kind:ident, $($arg:tt)*) => {
        // NaN fails the check
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            $crate::error::bail!($kind, $($arg)*);
        }
    };
}
pub(crate) use ensure;
