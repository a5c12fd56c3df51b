//! Numerical laboratory for the time-fractional semilinear heat equation
//!
//! ```text
//!     d^a/dt^a u = Lap u + |u|^(g-1) u,   u(0) = mu,   0 < a <= 1,  g > 1,
//! ```
//!
//! posed on a periodic box as a computable stand-in for R^N. The crate provides
//!
//! * Wright and Mittag-Leffler special functions with validated accuracy,
//!   including the subordination quadrature that links them (`specfun`),
//! * an FFT backend with a smooth Littlewood-Paley partition (`spectral`),
//! * Morrey and Besov-Morrey norm estimators for fields and discrete
//!   measures (`norms`),
//! * the solution operators of the linear problem and the exact per-mode
//!   memory-kernel weights of its Duhamel form (`operators`),
//! * a whole-trajectory Picard solver for the mild formulation (`solver`),
//! * admissibility arithmetic, canonical initial data, and reproducible
//!   studies (`experiments`),
//! * config/manifest plumbing shared by the examples and the `fracheat`
//!   binary (`cli`).
//!
//! The `examples/` directory is the guided tour: each file exercises one
//! capability end to end and is runnable with `cargo run --example <name>`.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod io;
pub mod manifest;
pub mod norms;
pub mod operators;
pub mod plot;
pub mod solver;
pub mod specfun;
pub mod spectral;

mod dd;

use std::fmt;

/// Crate-wide error type. The variants mirror how callers must react:
/// `Domain` and `Usage` are caller mistakes, `Accuracy` means a result could
/// not be produced within the requested tolerance, `Diverged` is a solver
/// verdict surfaced as an error only where a converged answer was required.
#[derive(Debug)]
pub enum Error {
    Domain(String),
    Accuracy { what: String, bound: f64 },
    Usage(String),
    Diverged(String),
    Io(std::io::Error),
    Format(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Accuracy { what, bound } => {
                write!(f, "accuracy error: {what} (estimated error {bound:.3e})")
            }
            Error::Usage(m) => write!(f, "usage error: {m}"),
            Error::Diverged(m) => write!(f, "divergence: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Format(m) => write!(f, "format error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
