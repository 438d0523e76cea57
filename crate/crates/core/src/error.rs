//! Error types shared across the library.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed files, out-of-range parameters, missing data.
    Input,
    /// Numerical failure: rank deficiency, unphysical states, failed solves.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("mode indices must differ (got {index} twice); use the single-mode operation instead")]
    DegenerateModePair { index: usize },

    /// Photon-number linearization is undefined without a macroscopic mean
    /// field. `mode` is 1-based.
    #[error("mode {mode} has mean amplitude {amplitude:.3e} below the linearization floor {floor:.0e}")]
    AmplitudeBelowFloor {
        mode: usize,
        amplitude: f64,
        floor: f64,
    },

    #[error("matrix is not symmetric: max |M - M^T| = {max_asymmetry:.3e}")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not orthogonal: ||U U^T - I||_inf = {deviation:.3e}")]
    NotOrthogonal { deviation: f64 },

    #[error("covariance violates the uncertainty bound: min eigenvalue of cov + i*Omega = {min_eigenvalue:.3e}")]
    Unphysical { min_eigenvalue: f64 },

    /// `k` is the 1-based first bin of the offending window.
    #[error("window k={k}, l={l} spans bins {k}..{} but the scan has {n_bins} bins", k + l)]
    WindowOutOfRange { k: usize, l: usize, n_bins: usize },

    #[error("duplicate window k={k}, l={l}")]
    DuplicateWindow { k: usize, l: usize },

    #[error("shot-noise level for bin {bin} must be positive and finite (got {level})")]
    InvalidShotLevel { bin: usize, level: f64 },

    /// The window set does not constrain the listed covariance entries
    /// (1-based bin pairs).
    #[error("window set is rank deficient; unconstrained entries: {}", format_entry_list(entries))]
    RankDeficient { entries: Vec<(usize, usize)> },

    #[error("scan is missing {missing} of the {expected} contiguous windows (first missing: k={first_k}, l={first_l})")]
    IncompleteScan {
        missing: usize,
        expected: usize,
        first_k: usize,
        first_l: usize,
    },

    #[error("parameter {name} = {value} is outside [{min}, {max}]")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    File { path: String, message: String },

    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::RankDeficient { .. } | Error::Unphysical { .. } | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Input,
        }
    }
}

fn format_entry_list(entries: &[(usize, usize)]) -> String {
    const SHOWN: usize = 8;
    let mut parts: Vec<String> = entries
        .iter()
        .take(SHOWN)
        .map(|(i, j)| format!("({i},{j})"))
        .collect();
    if entries.len() > SHOWN {
        parts.push(format!("... {} total", entries.len()));
    }
    parts.join(", ")
}
