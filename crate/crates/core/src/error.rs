use thiserror::Error;

/// Errors raised by the numerical layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("non-finite value while evaluating {what} at ({re}, {im})")]
    Evaluation { what: &'static str, re: f64, im: f64 },

    #[error("capability limit: {0}")]
    Capability(String),

    #[error("degree cap exceeded: requested {requested}, largest stable degree is {stable}")]
    DegreeCap { requested: usize, stable: usize },

    #[error("lattice window holds {count} points, cap is {cap}")]
    Capacity { count: usize, cap: usize },

    #[error("point ({re}, {im}) is outside the safe window")]
    Window { re: f64, im: f64 },

    #[error("invalid bump profile: {0}")]
    InvalidProfile(String),

    #[error("integrand decay not certified: {0}")]
    DecayNotCertified(String),

    #[error("the solution operator has not been calibrated")]
    Uncalibrated,

    #[error("orientation calibration failed: {0}")]
    Convention(String),

    #[error("numerical consistency violated: {0}")]
    Consistency(String),

    #[error("quadrature rule cannot resolve the integrand: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn eval<T: crate::Real>(what: &'static str, z: crate::Cplx<T>) -> Self {
        Error::Evaluation {
            what,
            re: z.re.as_f64(),
            im: z.im.as_f64(),
        }
    }
}
