//! Orthogonal diagonalization of the normalized covariance matrix.
//!
//! The new basis x' = U x decorrelates the per-bin amplitude quadratures:
//! <x'_m x'_m'> = delta v_m with C = U^T V U. Eigenvalues below 1 mark
//! supermodes squeezed below the shot-noise limit; 10*log10(v) converts to
//! dB. Rows of U are the eigenmode coefficient vectors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::window::{QuadratureCovariance, ShotNoiseLevels};

/// Symmetry / orthogonality tolerance for inputs to this module.
pub const MODAL_TOL: f64 = 1e-9;
/// Eigenvalue gap below which modes are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Squeezing levels within this band of 0 dB are flagged statistically
/// marginal.
pub const MARGINAL_BAND_DB: f64 = 0.05;

/// Result of diagonalizing a covariance matrix C = U^T V U.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalDecomposition {
    /// Orthogonal basis change; row m holds eigenmode m's coefficients.
    u: DMatrix<f64>,
    /// Eigenvalues, ascending: v_1 <= ... <= v_N.
    eigenvalues: Vec<f64>,
    /// 10*log10(v_m); -inf when v_m <= 0 (flagged, not fatal).
    squeezing_db: Vec<f64>,
    /// Row m is eigenmode m's spectral coefficient profile (equals `u` until
    /// amplitude weighting is applied, see
    /// [`eigenmode_spectral_amplitude`]).
    mode_shapes: DMatrix<f64>,
}

impl ModalDecomposition {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The orthogonal matrix U; rows are eigenmode coefficient vectors.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn squeezing_db(&self) -> &[f64] {
        &self.squeezing_db
    }

    pub fn mode_shapes(&self) -> &DMatrix<f64> {
        &self.mode_shapes
    }

    /// Modes squeezed below `threshold_db`.
    pub fn count_squeezed_modes(&self, threshold_db: f64) -> usize {
        self.squeezing_db
            .iter()
            .filter(|&&db| db < threshold_db)
            .count()
    }

    /// 1-based modes whose level sits within [`MARGINAL_BAND_DB`] of 0 dB.
    pub fn marginal_modes(&self) -> Vec<usize> {
        self.squeezing_db
            .iter()
            .enumerate()
            .filter(|(_, &db)| db.is_finite() && db.abs() < MARGINAL_BAND_DB)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// 1-based modes with non-positive eigenvalues (level undefined).
    pub fn non_positive_modes(&self) -> Vec<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= 0.0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Reconstruction residual ||U^T V U - C||_inf.
    pub fn reconstruction_error(&self, c: &QuadratureCovariance) -> f64 {
        let v = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&self.eigenvalues));
        let rebuilt = self.u.transpose() * v * &self.u;
        (rebuilt - c.matrix()).abs().max()
    }
}

/// Element-wise 10*log10(v); non-positive eigenvalues map to -inf.
pub fn squeezing_levels_db(eigenvalues: &[f64]) -> Vec<f64> {
    eigenvalues
        .iter()
        .map(|&v| {
            if v > 0.0 {
                10.0 * v.log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// Diagonalize C into ascending eigenvalues and a deterministic orthogonal
/// basis.
///
/// Determinism: each eigenvector's largest-magnitude coefficient is made
/// positive (ties broken by lowest bin index), and degenerate groups are
/// ordered by the index of their first significant coefficient.
pub fn diagonalize(c: &QuadratureCovariance) -> Result<ModalDecomposition> {
    diagonalize_matrix(c.matrix())
}

/// [`diagonalize`] on a raw matrix; rejects asymmetry beyond [`MODAL_TOL`].
pub fn diagonalize_matrix(m: &DMatrix<f64>) -> Result<ModalDecomposition> {
    let asym = crate::gaussian::max_asymmetry(m);
    if asym > MODAL_TOL {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    let sym = 0.5 * (m + m.transpose());
    let n = sym.nrows();
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    // canonical rows: eigenvectors with the largest-|coefficient| entry
    // positive, ties to the lowest bin index
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for &col in &order {
        let mut row: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        canonicalize_sign(&mut row);
        rows.push(row);
        values.push(eig.eigenvalues[col]);
    }

    // order degenerate groups by first significant coefficient index
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[start]).abs() < DEGENERACY_TOL {
            end += 1;
        }
        if end - start > 1 {
            let mut group: Vec<(usize, Vec<f64>, f64)> = (start..end)
                .map(|i| (first_significant_index(&rows[i]), rows[i].clone(), values[i]))
                .collect();
            group.sort_by_key(|(idx, _, _)| *idx);
            for (offset, (_, row, value)) in group.into_iter().enumerate() {
                rows[start + offset] = row;
                values[start + offset] = value;
            }
        }
        start = end;
    }

    let u = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let squeezing_db = squeezing_levels_db(&values);
    Ok(ModalDecomposition {
        mode_shapes: u.clone(),
        u,
        eigenvalues: values,
        squeezing_db,
    })
}

fn canonicalize_sign(row: &mut [f64]) {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if v.abs() > row[best].abs() {
            best = i;
        }
    }
    if row[best] < 0.0 {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
}

fn first_significant_index(row: &[f64]) -> usize {
    row.iter()
        .position(|v| v.abs() > 1e-9)
        .unwrap_or(row.len())
}

/// Eigenmode spectral amplitudes: row m is (U[m,j] * sqrt(shot_j))_j, the
/// coefficient profile weighted by the per-bin mean-field amplitude.
///
/// Returns the raw rows and a copy with each row normalized to unit
/// Euclidean norm for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeShapes {
    pub raw: DMatrix<f64>,
    pub normalized: DMatrix<f64>,
}

pub fn eigenmode_spectral_amplitude(
    decomp: &ModalDecomposition,
    amplitudes: &ShotNoiseLevels,
) -> Result<ModeShapes> {
    let n = decomp.n_modes();
    if amplitudes.n_bins() != n {
        return Err(Error::DimensionMismatch {
            what: "shot-noise levels",
            expected: n,
            actual: amplitudes.n_bins(),
        });
    }
    let raw = DMatrix::from_fn(n, n, |m, j| decomp.basis()[(m, j)] * amplitudes.amplitude(j));
    let mut normalized = raw.clone();
    for mut row in normalized.row_iter_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.scale_mut(1.0 / norm);
        }
    }
    Ok(ModeShapes { raw, normalized })
}

/// Conjugate C by an orthogonal matrix: U C U^T.
///
/// With the decomposition's own U this diagonalizes C (off-diagonals below
/// [`MODAL_TOL`]).
pub fn transform_basis(c: &QuadratureCovariance, u: &DMatrix<f64>) -> Result<QuadratureCovariance> {
    let n = c.n_bins();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "basis matrix",
            expected: n,
            actual: u.nrows(),
        });
    }
    let deviation = (u * u.transpose() - DMatrix::identity(n, n)).abs().max();
    if deviation > MODAL_TOL {
        return Err(Error::NotOrthogonal { deviation });
    }
    let product = u * c.matrix() * u.transpose();
    let (cov, _) = QuadratureCovariance::from_symmetrized(product)?;
    Ok(cov)
}
