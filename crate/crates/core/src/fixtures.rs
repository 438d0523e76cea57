//! Bundled reference data: experimentally measured 19-bin covariance
//! matrices of supercontinuum light at 5 mW and 15 mW pump power, together
//! with their published eigendecompositions.
//!
//! The data files under `data/` are transcribed exactly as published
//! (5 significant digits) and guarded by checksums. In the published
//! eigenvector files the columns are the eigenvectors; the loader exposes
//! them with rows as eigenmode coefficient vectors to match
//! [`crate::modal::ModalDecomposition`].

use nalgebra::DMatrix;
use std::path::Path;

use crate::error::Result;
use crate::formats::{parse_covariance_str, parse_value_per_line};
use crate::window::QuadratureCovariance;

pub const COV_5MW: &str = include_str!("../data/cov_5mw.csv");
pub const COV_15MW: &str = include_str!("../data/cov_15mw.csv");
pub const EIGENVALUES_5MW: &str = include_str!("../data/eigenvalues_5mw.csv");
pub const EIGENVALUES_15MW: &str = include_str!("../data/eigenvalues_15mw.csv");
pub const EIGENVECTORS_5MW: &str = include_str!("../data/eigenvectors_5mw.csv");
pub const EIGENVECTORS_15MW: &str = include_str!("../data/eigenvectors_15mw.csv");

/// (file name, sha256 of the bundled bytes); freezing the transcription.
pub const FIXTURE_CHECKSUMS: [(&str, &str); 6] = [
    (
        "cov_5mw.csv",
        "8d77d008a4b4377262aa4574343d490cf585d26025287301fc73b1bf5bd48cab",
    ),
    (
        "cov_15mw.csv",
        "e25b1000b3653e13570d9eb2ceb7f4618f411a4768cea00d04ed410911850246",
    ),
    (
        "eigenvalues_5mw.csv",
        "ffa2e004485c052fcc5f5fc4403f49cc603f45cfdb26866408827b129a8731f8",
    ),
    (
        "eigenvalues_15mw.csv",
        "97868382d79803173deb6b7ecf22fe1752717a0f3633905bdb4bdac160ca8327",
    ),
    (
        "eigenvectors_5mw.csv",
        "e511271e8ad5c81288c7087587420bc60aed7fb190f0081e00b155e2bf558cb2",
    ),
    (
        "eigenvectors_15mw.csv",
        "92b422ed19571caedec7e3c17f7a4accb7e3e06faac382441b16b8a19d37c3a6",
    ),
];

pub fn raw(name: &str) -> Option<&'static str> {
    match name {
        "cov_5mw.csv" => Some(COV_5MW),
        "cov_15mw.csv" => Some(COV_15MW),
        "eigenvalues_5mw.csv" => Some(EIGENVALUES_5MW),
        "eigenvalues_15mw.csv" => Some(EIGENVALUES_15MW),
        "eigenvectors_5mw.csv" => Some(EIGENVECTORS_5MW),
        "eigenvectors_15mw.csv" => Some(EIGENVECTORS_15MW),
        _ => None,
    }
}

/// One pump power's reference measurement.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub label: &'static str,
    pub covariance: QuadratureCovariance,
    /// Published eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Published eigenmode basis with rows as coefficient vectors
    /// (transposed from the bundled column layout).
    pub basis: DMatrix<f64>,
}

fn load(
    label: &'static str,
    cov: &'static str,
    values: &'static str,
    vectors: &'static str,
) -> Result<FixtureSet> {
    let virtual_path = Path::new(label);
    let (covariance, _) = parse_covariance_str(cov, virtual_path)?;
    let eigenvalues = parse_value_per_line(values, virtual_path)?;
    Ok(FixtureSet {
        label,
        covariance,
        eigenvalues,
        basis: vectors_cols_to_rows(vectors),
    })
}

fn vectors_cols_to_rows(contents: &str) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = contents
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|t| t.trim().parse().unwrap()).collect())
        .collect();
    let n = rows.len();
    // transpose: bundled columns become rows
    DMatrix::from_fn(n, n, |i, j| rows[j][i])
}

/// Reference measurement at 5 mW pump power.
pub fn pump_5mw() -> FixtureSet {
    load("fixture-5mw", COV_5MW, EIGENVALUES_5MW, EIGENVECTORS_5MW)
        .expect("bundled 5 mW fixture is valid")
}

/// Reference measurement at 15 mW pump power.
pub fn pump_15mw() -> FixtureSet {
    load("fixture-15mw", COV_15MW, EIGENVALUES_15MW, EIGENVECTORS_15MW)
        .expect("bundled 15 mW fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    #[test]
    fn checksums_freeze_the_transcription() {
        for (name, expected) in FIXTURE_CHECKSUMS {
            let contents = raw(name).unwrap();
            let digest = hex_digest(contents.as_bytes());
            assert_eq!(digest, expected, "checksum mismatch for {name}");
        }
    }

    fn hex_digest(bytes: &[u8]) -> String {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    #[test]
    fn fixture_shapes_and_published_entries() {
        let five = pump_5mw();
        assert_eq!(five.covariance.n_bins(), 19);
        assert_eq!(five.eigenvalues.len(), 19);
        assert_eq!(five.covariance.matrix()[(0, 0)], 1.2481);
        assert_eq!(five.covariance.matrix()[(0, 1)], -0.022258);
        assert_eq!(five.covariance.matrix()[(14, 17)], 8.565e-5);
        assert_eq!(five.eigenvalues[0], 0.70382);
        assert_eq!(five.eigenvalues[18], 1.7224);

        let fifteen = pump_15mw();
        assert_eq!(fifteen.covariance.matrix()[(17, 17)], 14.354);
        assert_eq!(fifteen.eigenvalues[0], 0.60807);
        assert_eq!(fifteen.eigenvalues[18], 14.638);
    }

    #[test]
    fn fixtures_are_symmetric_as_published() {
        for f in [pump_5mw(), pump_15mw()] {
            // published full matrices are exactly symmetric
            let m = f.covariance.matrix();
            assert_eq!(m, &m.transpose());
        }
    }

    #[test]
    fn published_basis_is_nearly_orthogonal() {
        for f in [pump_5mw(), pump_15mw()] {
            let n = f.basis.nrows();
            let dev = (&f.basis * f.basis.transpose() - DMatrix::identity(n, n))
                .abs()
                .max();
            // printed at 5 significant digits
            assert!(dev < 1e-4, "{}: {dev}", f.label);
        }
    }

    #[test]
    fn published_basis_diagonalizes_the_covariance() {
        for f in [pump_5mw(), pump_15mw()] {
            let v = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&f.eigenvalues));
            let rebuilt = f.basis.transpose() * v * &f.basis;
            let residual = (rebuilt - f.covariance.matrix()).abs().max();
            assert!(residual < 1e-2, "{}: residual {residual}", f.label);
        }
    }
}
