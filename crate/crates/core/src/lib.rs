//! Reconstruction and modal analysis of multimode photon-number quantum
//! correlations in ultrafast pulses.
//!
//! The pipeline turns a scan of photon-number variances measured over
//! contiguous spectral windows into a shot-noise-normalized covariance
//! matrix, diagonalizes it to expose uncorrelated supermodes and their
//! squeezing levels, and ships a phenomenological Gaussian fiber-noise
//! forward model for generating synthetic ground truth end to end.
//!
//! Modules:
//! - [`gaussian`] — Gaussian states and symplectic transformations.
//! - [`window`] — spectral-window scans and covariance reconstruction.
//! - [`modal`] — orthogonal diagonalization and squeezing analysis.
//! - [`fiber`] — Gaussian fiber-noise channels and scan simulation.
//! - [`formats`], [`report`], [`plot`], [`pipeline`] — file formats, report
//!   and plot emission, and the end-to-end pipelines behind the CLI.
//! - [`fixtures`] — bundled reference covariance matrices (5 mW and 15 mW
//!   pump) with their published eigendecompositions.
//! - [`verify`] — the self-contained acceptance checks run by
//!   `scq verify-fixtures` and the `acceptance` test target.

pub mod error;
pub mod fiber;
pub mod fixtures;
pub mod formats;
pub mod gaussian;
pub mod modal;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod verify;
pub mod window;

pub use error::{Error, ErrorKind, Result};

/// Tool version stamped into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round `x` to `digits` significant decimal digits (half away from zero).
///
/// `digits >= 17` is an identity: f64 cannot resolve more.
pub fn round_sig(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() || digits >= 17 {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits as i32 - 1 - magnitude);
    (x * scale).round() / scale
}

/// Shortest decimal representation of `x` rounded to 6 significant digits.
///
/// This is the pinned float format for every emitted file: deterministic
/// across platforms and lossless when parsed back.
pub fn format_float(x: f64) -> String {
    format!("{}", round_sig(x, 6))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sig_basics() {
        assert_eq!(round_sig(123.456, 3), 123.0);
        assert_eq!(round_sig(0.0012345, 3), 0.00123);
        assert_eq!(round_sig(-1234.5, 3), -1230.0);
        assert_eq!(round_sig(0.0, 3), 0.0);
        assert_eq!(round_sig(1.2481, 6), 1.2481);
        assert_eq!(round_sig(8.565e-5, 6), 8.565e-5);
    }

    #[test]
    fn format_float_is_shortest() {
        assert_eq!(format_float(1.2481), "1.2481");
        assert_eq!(format_float(0.70382), "0.70382");
        assert_eq!(format_float(1230.0), "1230");
        assert_eq!(format_float(-0.022258), "-0.022258");
        assert_eq!(format_float(0.00008565), "0.00008565");
    }
}
