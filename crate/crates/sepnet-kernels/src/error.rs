use thiserror::Error;

/// Errors raised by tensor construction and layer kernels.
#[derive(Debug, Error)]
pub enum KernelError {
    /// A tensor or kernel argument has an incompatible shape. The message
    /// names the offending dimension.
    #[error("shape mismatch in {context}: {detail}")]
    ShapeMismatch {
        context: &'static str,
        detail: String,
    },

    /// A scalar argument is outside its accepted range.
    #[error("invalid argument for {context}: {detail}")]
    InvalidArgument {
        context: &'static str,
        detail: String,
    },
}

pub type Result<T> = std::result::Result<T, KernelError>;

impl KernelError {
    pub fn shape(context: &'static str, detail: impl Into<String>) -> Self {
        KernelError::ShapeMismatch {
            context,
            detail: detail.into(),
        }
    }

    pub fn arg(context: &'static str, detail: impl Into<String>) -> Self {
        KernelError::InvalidArgument {
            context,
            detail: detail.into(),
        }
    }
}
