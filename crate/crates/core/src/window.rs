//! Spectral-window variance scans and covariance reconstruction.
//!
//! A knife-edge pair transmits the contiguous bins k..k+l of an N-bin
//! spectrum; the measured photon-number variance of that window is the sum
//! of all covariance entries inside it. Scanning every contiguous window
//! gives N(N+1)/2 equations for the N(N+1)/2 unknown entries of the
//! symmetric photon-number covariance matrix, solved here by least squares
//! with an independent inclusion-exclusion closed form as cross-check.
//!
//! Bin indices are 1-based in [`SpectralWindow`] and all file formats,
//! matching the measurement convention m = 1..N.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetry tolerance for covariance matrices.
pub const COV_SYMMETRY_TOL: f64 = 1e-12;

/// A contiguous range of spectral bins, k..k+l (1-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpectralWindow {
    k: usize,
    l: usize,
}

impl SpectralWindow {
    pub fn new(k: usize, l: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::WindowOutOfRange { k, l, n_bins: 0 });
        }
        Ok(Self { k, l })
    }

    /// First bin (1-based).
    pub fn first_bin(&self) -> usize {
        self.k
    }

    /// Last bin (1-based).
    pub fn last_bin(&self) -> usize {
        self.k + self.l
    }

    /// Extra width beyond a single bin.
    pub fn extra_width(&self) -> usize {
        self.l
    }

    /// Number of bins covered.
    pub fn len(&self) -> usize {
        self.l + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check_bounds(&self, n_bins: usize) -> Result<()> {
        if self.last_bin() > n_bins {
            return Err(Error::WindowOutOfRange {
                k: self.k,
                l: self.l,
                n_bins,
            });
        }
        Ok(())
    }
}

/// One measured window variance, optionally with its 1-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRecord {
    pub window: SpectralWindow,
    /// Photon-number variance of the window, in photon-number units.
    pub variance: f64,
    /// Measurement uncertainty; used as 1/sigma^2 weights when present.
    pub sigma: Option<f64>,
}

/// A set of (window, variance) measurements over an N-bin spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowScan {
    n_bins: usize,
    records: Vec<ScanRecord>,
}

impl WindowScan {
    pub fn new(n_bins: usize, records: Vec<ScanRecord>) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::DimensionMismatch {
                what: "bin count",
                expected: 1,
                actual: 0,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for rec in &records {
            rec.window.check_bounds(n_bins)?;
            if !rec.variance.is_finite() {
                return Err(Error::Numerical(format!(
                    "variance for window k={}, l={} is not finite",
                    rec.window.k, rec.window.l
                )));
            }
            if let Some(sigma) = rec.sigma {
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::ParameterOutOfRange {
                        name: "sigma",
                        value: sigma,
                        min: 0.0,
                        max: f64::INFINITY,
                    });
                }
            }
            if !seen.insert(rec.window) {
                return Err(Error::DuplicateWindow {
                    k: rec.window.k,
                    l: rec.window.l,
                });
            }
        }
        Ok(Self { n_bins, records })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn records(&self) -> &[ScanRecord] {
        &self.records
    }
}

/// Per-bin shot-noise levels |A_m|^2, strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotNoiseLevels {
    levels: Vec<f64>,
}

impl ShotNoiseLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        for (idx, &level) in levels.iter().enumerate() {
            if !(level > 0.0) || !level.is_finite() {
                return Err(Error::InvalidShotLevel {
                    bin: idx + 1,
                    level,
                });
            }
        }
        if levels.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "shot-noise levels",
                expected: 1,
                actual: 0,
            });
        }
        Ok(Self { levels })
    }

    pub fn n_bins(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Mean-field amplitude |A_m| = sqrt(level) of a 0-based bin.
    pub fn amplitude(&self, bin: usize) -> f64 {
        self.levels[bin].sqrt()
    }
}

fn validate_symmetric(entries: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            what,
            expected: entries.nrows().max(1),
            actual: entries.ncols(),
        });
    }
    let asym = crate::gaussian::max_asymmetry(entries);
    if asym > COV_SYMMETRY_TOL {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    Ok(())
}

/// Symmetric N x N matrix of photon-number covariances <n_m, n_m'>.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonCovariance {
    entries: DMatrix<f64>,
}

impl PhotonCovariance {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        validate_symmetric(&entries, "photon covariance")?;
        Ok(Self { entries })
    }

    pub fn n_bins(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Symmetric N x N shot-noise-normalized covariance matrix C.
///
/// Shot-noise-limited light gives the identity; diagonal entries below 1
/// indicate photon-number squeezing of that bin.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureCovariance {
    entries: DMatrix<f64>,
}

impl QuadratureCovariance {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        validate_symmetric(&entries, "covariance")?;
        Ok(Self { entries })
    }

    /// Symmetrize (M + M^T)/2 and report the max asymmetry that was removed.
    pub fn from_symmetrized(entries: DMatrix<f64>) -> Result<(Self, f64)> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                what: "covariance",
                expected: entries.nrows().max(1),
                actual: entries.ncols(),
            });
        }
        let asym = crate::gaussian::max_asymmetry(&entries);
        let sym = 0.5 * (&entries + entries.transpose());
        Ok((Self { entries: sym }, asym))
    }

    pub fn identity(n_bins: usize) -> Self {
        Self {
            entries: DMatrix::identity(n_bins, n_bins),
        }
    }

    pub fn n_bins(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Bins (1-based) whose diagonal is not positive; noise can push a
    /// reconstructed diagonal below zero, which is worth a warning but not
    /// an error.
    pub fn non_positive_diagonal_bins(&self) -> Vec<usize> {
        (0..self.n_bins())
            .filter(|&i| self.entries[(i, i)] <= 0.0)
            .map(|i| i + 1)
            .collect()
    }

    /// Project onto the positive-semidefinite cone by clipping negative
    /// eigenvalues at zero. Returns the projected matrix and the clipped
    /// mass (sum of |negative eigenvalues|). Opt-in: reconstruction never
    /// applies this silently.
    pub fn project_psd(&self) -> (Self, f64) {
        let eig = self.entries.clone().symmetric_eigen();
        let mut clipped = 0.0;
        let mut values = eig.eigenvalues.clone();
        for v in values.iter_mut() {
            if *v < 0.0 {
                clipped += -*v;
                *v = 0.0;
            }
        }
        let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose();
        let sym = 0.5 * (&rebuilt + rebuilt.transpose());
        (Self { entries: sym }, clipped)
    }
}

/// All contiguous windows of an N-bin spectrum: ascending k, then l.
/// Exactly N(N+1)/2 of them.
pub fn enumerate_windows(n_bins: usize) -> Vec<SpectralWindow> {
    let mut windows = Vec::with_capacity(n_bins * (n_bins + 1) / 2);
    for k in 1..=n_bins {
        for l in 0..=(n_bins - k) {
            windows.push(SpectralWindow { k, l });
        }
    }
    windows
}

/// Variance of the summed photon number over a window: the sum of every
/// covariance entry with both indices inside it (off-diagonals counted
/// twice).
pub fn predict_window_variance(cov: &PhotonCovariance, window: &SpectralWindow) -> Result<f64> {
    window.check_bounds(cov.n_bins())?;
    let lo = window.first_bin() - 1;
    let hi = window.last_bin(); // exclusive
    let m = cov.matrix();
    let mut total = 0.0;
    for i in lo..hi {
        for j in lo..hi {
            total += m[(i, j)];
        }
    }
    Ok(total)
}

/// Number of unknowns: entries of the upper triangle including the diagonal.
fn upper_triangle_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Row-major upper-triangle index of (i, j), 0-based, i <= j.
fn ut_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// Inverse of [`ut_index`]: the (i, j) pair of an unknown, 0-based.
fn ut_pair(n: usize, mut idx: usize) -> (usize, usize) {
    for i in 0..n {
        let row_len = n - i;
        if idx < row_len {
            return (i, i + idx);
        }
        idx -= row_len;
    }
    unreachable!("upper-triangle index out of range");
}

/// Design matrix of the window system: one row per window over the
/// upper-triangle unknowns (row-major), coefficient 1 for diagonal entries
/// inside the window and 2 for off-diagonal pairs inside it.
///
/// For the complete contiguous window set the matrix is square and
/// invertible.
pub fn build_design_matrix(windows: &[SpectralWindow], n_bins: usize) -> Result<DMatrix<f64>> {
    let n_unknowns = upper_triangle_len(n_bins);
    let mut design = DMatrix::zeros(windows.len(), n_unknowns);
    for (row, window) in windows.iter().enumerate() {
        window.check_bounds(n_bins)?;
        let lo = window.first_bin() - 1;
        let hi = window.last_bin();
        for i in lo..hi {
            design[(row, ut_index(n_bins, i, i))] = 1.0;
            for j in (i + 1)..hi {
                design[(row, ut_index(n_bins, i, j))] = 2.0;
            }
        }
    }
    Ok(design)
}

fn pack_symmetric(n: usize, x: &DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = x[ut_index(n, i, j)];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Solve the window system by (optionally weighted) least squares through a
/// rank-revealing SVD.
///
/// Over-determined scans are handled uniformly; a rank-deficient window set
/// fails loudly, listing the unconstrained entries, rather than regularizing
/// correlations into existence.
pub fn reconstruct_covariance(scan: &WindowScan) -> Result<PhotonCovariance> {
    let n = scan.n_bins();
    let n_unknowns = upper_triangle_len(n);
    let windows: Vec<SpectralWindow> = scan.records().iter().map(|r| r.window).collect();
    let mut design = build_design_matrix(&windows, n)?;
    let mut rhs = DVector::from_iterator(
        scan.records().len(),
        scan.records().iter().map(|r| r.variance),
    );
    for (row, rec) in scan.records().iter().enumerate() {
        if let Some(sigma) = rec.sigma {
            let w = 1.0 / sigma;
            design.row_mut(row).scale_mut(w);
            rhs[row] *= w;
        }
    }

    if design.nrows() < n_unknowns {
        return Err(rank_deficiency_error(&design, n));
    }

    let svd = design.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let tol = sigma_max * design.nrows().max(design.ncols()) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < n_unknowns {
        return Err(rank_deficiency_error(&design, n));
    }

    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let mut coeffs = u.transpose() * rhs;
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c /= svd.singular_values[i];
    }
    let solution = v_t.transpose() * coeffs;
    PhotonCovariance::new(pack_symmetric(n, &solution))
}

/// Identify which upper-triangle unknowns lie in the null space of the
/// design matrix (via the Gram matrix's near-zero eigenvectors).
fn rank_deficiency_error(design: &DMatrix<f64>, n: usize) -> Error {
    let gram = design.transpose() * design;
    let eig = gram.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let scale = design.nrows().max(design.ncols()) as f64 * f64::EPSILON;
    let tol = lambda_max * scale * scale * 4.0 + f64::MIN_POSITIVE;
    let n_unknowns = eig.eigenvalues.len();
    let mut unconstrained = std::collections::BTreeSet::new();
    for col in 0..n_unknowns {
        if eig.eigenvalues[col] <= tol {
            for (idx, &component) in eig.eigenvectors.column(col).iter().enumerate() {
                if component.abs() > 1e-7 {
                    let (i, j) = ut_pair(n, idx);
                    unconstrained.insert((i + 1, j + 1));
                }
            }
        }
    }
    Error::RankDeficient {
        entries: unconstrained.into_iter().collect(),
    }
}

/// Closed-form reconstruction from the complete contiguous window set.
///
/// With W(a, b) the variance of the window spanning bins a..b (and 0 when
/// a > b), the off-diagonal entries follow from inclusion-exclusion:
///
/// ```text
/// <n_i, n_j> = [W(i,j) - W(i+1,j) - W(i,j-1) + W(i+1,j-1)] / 2,  i < j
/// ```
///
/// and the diagonal is read off the single-bin windows. Serves as an
/// independent oracle for the least-squares solver.
pub fn inclusion_exclusion_reconstruct(scan: &WindowScan) -> Result<PhotonCovariance> {
    let n = scan.n_bins();
    let mut table = std::collections::HashMap::new();
    for rec in scan.records() {
        table.insert((rec.window.first_bin(), rec.window.last_bin()), rec.variance);
    }
    let expected = upper_triangle_len(n);
    if table.len() < expected {
        let (mut missing, mut first) = (0usize, None);
        for w in enumerate_windows(n) {
            if !table.contains_key(&(w.first_bin(), w.last_bin())) {
                missing += 1;
                first.get_or_insert((w.first_bin(), w.extra_width()));
            }
        }
        let (first_k, first_l) = first.unwrap_or((1, 0));
        return Err(Error::IncompleteScan {
            missing,
            expected,
            first_k,
            first_l,
        });
    }
    let window = |a: usize, b: usize| -> f64 {
        if a > b {
            0.0
        } else {
            table[&(a, b)]
        }
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 1..=n {
        m[(i - 1, i - 1)] = window(i, i);
        for j in (i + 1)..=n {
            let value =
                0.5 * (window(i, j) - window(i + 1, j) - window(i, j - 1) + window(i + 1, j - 1));
            m[(i - 1, j - 1)] = value;
            m[(j - 1, i - 1)] = value;
        }
    }
    PhotonCovariance::new(m)
}

/// Normalize a photon-number covariance by the shot-noise amplitudes:
/// C[m,m'] = <n_m, n_m'> / (|A_m| |A_m'|).
pub fn normalize_covariance(
    photon_cov: &PhotonCovariance,
    shot: &ShotNoiseLevels,
) -> Result<QuadratureCovariance> {
    if photon_cov.n_bins() != shot.n_bins() {
        return Err(Error::DimensionMismatch {
            what: "shot-noise levels",
            expected: photon_cov.n_bins(),
            actual: shot.n_bins(),
        });
    }
    let n = photon_cov.n_bins();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = photon_cov.matrix()[(i, j)] / (shot.amplitude(i) * shot.amplitude(j));
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    QuadratureCovariance::new(c)
}

/// Inverse of [`normalize_covariance`]: <n_m, n_m'> = |A_m||A_m'| C[m,m'].
pub fn denormalize_covariance(
    cov: &QuadratureCovariance,
    shot: &ShotNoiseLevels,
) -> Result<PhotonCovariance> {
    if cov.n_bins() != shot.n_bins() {
        return Err(Error::DimensionMismatch {
            what: "shot-noise levels",
            expected: cov.n_bins(),
            actual: shot.n_bins(),
        });
    }
    let n = cov.n_bins();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = cov.matrix()[(i, j)] * shot.amplitude(i) * shot.amplitude(j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    PhotonCovariance::new(m)
}

/// Build the noiseless complete scan a covariance matrix would produce.
pub fn predict_complete_scan(cov: &PhotonCovariance) -> Result<WindowScan> {
    let n = cov.n_bins();
    let records = enumerate_windows(n)
        .into_iter()
        .map(|w| {
            predict_window_variance(cov, &w).map(|variance| ScanRecord {
                window: w,
                variance,
                sigma: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    WindowScan::new(n, records)
}

/// Pre-factored least-squares solver for repeated reconstructions over the
/// complete contiguous window set (Monte Carlo runs factor once, solve per
/// scan).
pub struct ScanSolver {
    n_bins: usize,
    windows: Vec<SpectralWindow>,
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rank_tol: f64,
}

impl ScanSolver {
    pub fn complete(n_bins: usize) -> Result<Self> {
        let windows = enumerate_windows(n_bins);
        let design = build_design_matrix(&windows, n_bins)?;
        let dims = design.nrows().max(design.ncols()) as f64;
        let svd = design.svd(true, true);
        let sigma_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
        let rank_tol = sigma_max * dims * f64::EPSILON;
        let rank = svd.singular_values.iter().filter(|&&s| s > rank_tol).count();
        if rank < upper_triangle_len(n_bins) {
            return Err(Error::Numerical(format!(
                "complete window system for {n_bins} bins is rank deficient (rank {rank})"
            )));
        }
        Ok(Self {
            n_bins,
            windows,
            svd,
            rank_tol,
        })
    }

    /// Window order expected by [`ScanSolver::solve`].
    pub fn windows(&self) -> &[SpectralWindow] {
        &self.windows
    }

    /// Solve for the covariance given variances ordered like
    /// [`ScanSolver::windows`].
    pub fn solve(&self, variances: &[f64]) -> Result<PhotonCovariance> {
        if variances.len() != self.windows.len() {
            return Err(Error::DimensionMismatch {
                what: "window variances",
                expected: self.windows.len(),
                actual: variances.len(),
            });
        }
        let rhs = DVector::from_row_slice(variances);
        let u = self.svd.u.as_ref().expect("svd computed with u");
        let v_t = self.svd.v_t.as_ref().expect("svd computed with v_t");
        let mut coeffs = u.transpose() * rhs;
        for (i, c) in coeffs.iter_mut().enumerate() {
            let s = self.svd.singular_values[i];
            *c = if s > self.rank_tol { *c / s } else { 0.0 };
        }
        let solution = v_t.transpose() * coeffs;
        PhotonCovariance::new(pack_symmetric(self.n_bins, &solution))
    }

    /// Reconstruct from a [`WindowScan`] over exactly the complete set.
    pub fn solve_scan(&self, scan: &WindowScan) -> Result<PhotonCovariance> {
        if scan.n_bins() != self.n_bins || scan.records().len() != self.windows.len() {
            return Err(Error::DimensionMismatch {
                what: "scan shape",
                expected: self.windows.len(),
                actual: scan.records().len(),
            });
        }
        // scans straight out of enumerate_windows order line up; otherwise
        // index by window
        let aligned = scan
            .records()
            .iter()
            .zip(&self.windows)
            .all(|(rec, w)| rec.window == *w);
        if aligned {
            let variances: Vec<f64> = scan.records().iter().map(|r| r.variance).collect();
            return self.solve(&variances);
        }
        let mut table = std::collections::HashMap::new();
        for rec in scan.records() {
            table.insert(rec.window, rec.variance);
        }
        let expected = self.windows.len();
        let variances = self
            .windows
            .iter()
            .map(|w| {
                table.get(w).copied().ok_or(Error::IncompleteScan {
                    missing: expected - table.len(),
                    expected,
                    first_k: w.first_bin(),
                    first_l: w.extra_width(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        self.solve(&variances)
    }
}
