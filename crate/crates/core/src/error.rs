use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("incomplete fiber data: {0}")]
    IncompleteFiber(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate leading coefficient on edge {edge} at x = {x}")]
    DegenerateLeading { edge: String, x: f64 },
    #[error("neutral exponent: not parameter-elliptic at lambda = {0}")]
    NeutralExponent(Complex64),
    #[error("stiff edge integration failed at x = {x} on edge {edge}")]
    StiffEdge { edge: String, x: f64 },
    #[error("problem is not elliptic in its sector: {0}")]
    NotElliptic(String),
    #[error("problem is not symmetric; spectral sweeps need a self-adjoint realization")]
    NotSymmetric,
    #[error("possible missed eigenvalue in [{a}, {b}]")]
    MissedEigenvalue { a: f64, b: f64 },
    #[error("near-singular resolvent at lambda = {0}")]
    NearSingular(Complex64),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("window insufficient for t = {0}")]
    WindowInsufficient(f64),
    #[error("ill-conditioned design (condition {0:.3e}): reduce J or extend window")]
    IllConditioned(f64),
    #[error("lambda in spectrum: {0}")]
    InSpectrum(Complex64),
    #[error("N = {0} is not above the trace-class threshold 1/m")]
    NotTraceClass(u32),
    #[error("A_C not positive; zeta undefined")]
    NotPositive,
    #[error("too few eigenvalues: need {need}, have {have}")]
    TooFewEigenvalues { need: usize, have: usize },
    #[error("{0}")]
    Parse(String),
    #[error("unknown builtin example '{0}'")]
    UnknownExample(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that describe the mathematics of the input rather than its form.
    pub fn is_domain(&self) -> bool {
        !matches!(
            self,
            Error::Parse(_)
                | Error::Io(_)
                | Error::UnknownExample(_)
                | Error::Shape(_)
                | Error::Invalid(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
