//! Exact toroidal dimer partition functions of periodic bipartite isoradial
//! graphs.
//!
//! A fundamental domain (a small bipartite graph embedded in a torus cell,
//! with one rhombus angle per edge) is replicated to an n-by-n toroidal
//! quotient. The weighted matching count Z is computed exactly as a signed
//! half-sum of four Kasteleyn determinants, and the growth rate
//! (1/n^2) log Z is compared against a closed form in the rhombus angles
//! and against a spectral (Bloch matrix) estimator. The inverse of the
//! infinite-volume Kasteleyn operator is evaluated by residue calculus on
//! rational path functions.

pub mod cli;
pub mod dirac;
pub mod domain;
pub mod linalg;
pub mod map;
pub mod oracle;
pub mod orientation;
pub mod partition;
pub mod torus;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input that cannot be interpreted (bad ids, wrong colors,
    /// non-square matrix, unparseable file).
    Structural(String),
    /// Argument outside its admissible range.
    Domain(String),
    /// A size cap was exceeded; carries the offending size and the cap.
    CapExceeded { size: usize, cap: usize },
    /// Sign calibration of the four determinants failed.
    Calibration(String),
    /// A path through the lifted graph is invalid.
    Path(String),
    /// A numerical consistency condition failed (singular where it must
    /// not be, imaginary residue too large, negative matching sum).
    Numerical(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::Structural(m) => write!(f, "structural error: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::CapExceeded { size, cap } => {
                write!(f, "size cap exceeded: {size} > {cap}")
            }
            Error::Calibration(m) => write!(f, "calibration error: {m}"),
            Error::Path(m) => write!(f, "path error: {m}"),
            Error::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
