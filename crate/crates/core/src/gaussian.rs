//! Gaussian states and symplectic transformations.
//!
//! Quadratures are ordered interleaved, `(x_1, p_1, ..., x_N, p_N)`, so each
//! mode's 2x2 block is contiguous. The vacuum variance is 1 per quadrature
//! (shot-noise units); every squeezing statement compares against 1. Mode
//! indices in this API are 0-based.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::window::QuadratureCovariance;

/// Element-wise tolerance for the symplectic invariant S*Omega*S^T = Omega.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalue floor for the uncertainty bound cov + i*Omega >= 0; absorbs
/// floating-point noise without masking real violations.
pub const PHYSICALITY_TOL: f64 = -1e-9;
/// Minimum per-mode mean amplitude for the photon-number linearization.
pub const AMPLITUDE_FLOOR: f64 = 1e-6;

/// The symplectic form Omega: block diagonal of [[0, 1], [-1, 0]].
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Max |M - M^T| over all entries.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian matrix cov + i*Omega.
///
/// Computed through the real symmetric embedding [[cov, -Omega], [Omega, cov]],
/// whose spectrum is that of cov + i*Omega doubled.
pub fn min_uncertainty_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let n2 = cov.nrows();
    let omega = symplectic_form(n2 / 2);
    let mut embed = DMatrix::zeros(2 * n2, 2 * n2);
    embed.view_mut((0, 0), (n2, n2)).copy_from(cov);
    embed.view_mut((n2, n2), (n2, n2)).copy_from(cov);
    embed.view_mut((0, n2), (n2, n2)).copy_from(&(-&omega));
    embed.view_mut((n2, 0), (n2, n2)).copy_from(&omega);
    let eigs = embed.symmetric_eigenvalues();
    eigs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Symplectic eigenvalues of a covariance matrix, ascending.
///
/// These are the moduli of the (purely imaginary) eigenvalues of Omega*cov;
/// a state is physical iff every one is >= 1 (up to tolerance).
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows() / 2;
    let product = symplectic_form(n) * cov;
    let eigs = product.complex_eigenvalues();
    let mut moduli: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // each symplectic eigenvalue appears twice as +/- i*nu
    (0..n).map(|k| 0.5 * (moduli[2 * k] + moduli[2 * k + 1])).collect()
}

/// Mean thermal occupation numbers of the phonon modes a channel couples to.
#[derive(Debug, Clone, PartialEq)]
pub struct PhononRegister {
    occupancy: Vec<f64>,
}

impl PhononRegister {
    pub fn new(occupancy: Vec<f64>) -> Result<Self> {
        for &n_bar in &occupancy {
            if !n_bar.is_finite() || n_bar < 0.0 {
                return Err(Error::ParameterOutOfRange {
                    name: "phonon occupancy",
                    value: n_bar,
                    min: 0.0,
                    max: f64::INFINITY,
                });
            }
        }
        Ok(Self { occupancy })
    }

    pub fn occupancy(&self) -> &[f64] {
        &self.occupancy
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }
}

/// Quadrature variance of a thermal mode with mean occupation `n_bar`.
pub fn thermal_variance(n_bar: f64) -> f64 {
    2.0 * n_bar + 1.0
}

/// A linear transformation preserving the canonical commutation structure,
/// S*Omega*S^T = Omega.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Validate and wrap an arbitrary 2N x 2N matrix.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                what: "symplectic matrix",
                expected: dim.max(2),
                actual: entries.ncols(),
            });
        }
        let n_modes = dim / 2;
        let omega = symplectic_form(n_modes);
        let residual = &entries * &omega * entries.transpose() - &omega;
        let deviation = max_abs(&residual);
        if deviation > SYMPLECTIC_TOL {
            return Err(Error::Numerical(format!(
                "matrix is not symplectic: ||S Omega S^T - Omega||_inf = {deviation:.3e}"
            )));
        }
        Ok(Self { n_modes, entries })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            n_modes,
            entries: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Two-mode squeezer with strength `r` between modes `i` and `j`.
    ///
    /// On the x quadratures of the pair it acts as [[cosh r, sinh r],
    /// [sinh r, cosh r]], on the p quadratures with the sinh sign flipped;
    /// identity elsewhere. `r = 0` gives the identity.
    pub fn two_mode_squeezer(r: f64, i: usize, j: usize, n_modes: usize) -> Result<Self> {
        check_mode_pair(i, j, n_modes)?;
        let (c, s) = (r.cosh(), r.sinh());
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let (xi, pi, xj, pj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        m[(xi, xi)] = c;
        m[(xi, xj)] = s;
        m[(xj, xi)] = s;
        m[(xj, xj)] = c;
        m[(pi, pi)] = c;
        m[(pi, pj)] = -s;
        m[(pj, pi)] = -s;
        m[(pj, pj)] = c;
        Ok(Self { n_modes, entries: m })
    }

    /// Single-mode squeezer: x scaled by e^r, p by e^-r.
    ///
    /// The degenerate limit of two-mode squeezing when both modes coincide.
    pub fn single_mode_squeezer(r: f64, i: usize, n_modes: usize) -> Result<Self> {
        check_mode(i, n_modes)?;
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        m[(2 * i, 2 * i)] = r.exp();
        m[(2 * i + 1, 2 * i + 1)] = (-r).exp();
        Ok(Self { n_modes, entries: m })
    }

    /// Beam-splitter mixing of modes `i` and `j`: a rotation by `theta`
    /// applied identically to the x and p quadrature pairs.
    pub fn beam_splitter(theta: f64, i: usize, j: usize, n_modes: usize) -> Result<Self> {
        check_mode_pair(i, j, n_modes)?;
        let (c, s) = (theta.cos(), theta.sin());
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for offset in 0..2 {
            let a = 2 * i + offset;
            let b = 2 * j + offset;
            m[(a, a)] = c;
            m[(a, b)] = s;
            m[(b, a)] = -s;
            m[(b, b)] = c;
        }
        Ok(Self { n_modes, entries: m })
    }

    /// Phase shift of mode `i`: a rotation in its own (x, p) plane.
    ///
    /// The degenerate limit of mode mixing when both modes coincide.
    pub fn phase_shift(phi: f64, i: usize, n_modes: usize) -> Result<Self> {
        check_mode(i, n_modes)?;
        let (c, s) = (phi.cos(), phi.sin());
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let (x, p) = (2 * i, 2 * i + 1);
        m[(x, x)] = c;
        m[(x, p)] = s;
        m[(p, x)] = -s;
        m[(p, p)] = c;
        Ok(Self { n_modes, entries: m })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<Self> {
        if self.n_modes != other.n_modes {
            return Err(Error::DimensionMismatch {
                what: "symplectic composition",
                expected: self.n_modes,
                actual: other.n_modes,
            });
        }
        Ok(Self {
            n_modes: self.n_modes,
            entries: &self.entries * &other.entries,
        })
    }

    /// Deviation from the symplectic invariant, ||S Omega S^T - Omega||_inf.
    pub fn symplectic_deviation(&self) -> f64 {
        let omega = symplectic_form(self.n_modes);
        max_abs(&(&self.entries * &omega * self.entries.transpose() - &omega))
    }

    /// Deviation from orthogonality, ||S S^T - I||_inf.
    pub fn orthogonality_deviation(&self) -> f64 {
        let dim = 2 * self.n_modes;
        max_abs(&(&self.entries * self.entries.transpose() - DMatrix::identity(dim, dim)))
    }
}

/// A Gaussian state: mean quadrature vector plus 2N x 2N covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Vacuum (or coherent, for nonzero `mean`) state: identity covariance.
    pub fn vacuum(n_modes: usize, mean: Vec<f64>) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::DimensionMismatch {
                what: "mode count",
                expected: 1,
                actual: 0,
            });
        }
        if mean.len() != 2 * n_modes {
            return Err(Error::DimensionMismatch {
                what: "mean vector",
                expected: 2 * n_modes,
                actual: mean.len(),
            });
        }
        Ok(Self {
            n_modes,
            mean: DVector::from_vec(mean),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    /// Wrap an explicit mean and covariance, validating symmetry and the
    /// uncertainty bound.
    pub fn new(n_modes: usize, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.len() != 2 * n_modes || cov.nrows() != 2 * n_modes || cov.ncols() != 2 * n_modes {
            return Err(Error::DimensionMismatch {
                what: "state dimensions",
                expected: 2 * n_modes,
                actual: cov.nrows(),
            });
        }
        let asym = max_asymmetry(&cov);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { max_asymmetry: asym });
        }
        let min_eig = min_uncertainty_eigenvalue(&cov);
        if min_eig < PHYSICALITY_TOL {
            return Err(Error::Unphysical {
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { n_modes, mean, cov })
    }

    /// Internal constructor for transformations that preserve the invariants
    /// by construction. The covariance is symmetrized to kill rounding drift.
    pub(crate) fn from_parts(n_modes: usize, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        let sym = 0.5 * (&cov + cov.transpose());
        Self {
            n_modes,
            mean,
            cov: sym,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Mean quadratures (x, p) of one mode.
    pub fn mode_mean(&self, mode: usize) -> (f64, f64) {
        (self.mean[2 * mode], self.mean[2 * mode + 1])
    }

    /// Complex mean-field amplitude magnitude |A_m| of one mode
    /// (|A_m|^2 equals the mean photon number of a coherent state).
    pub fn mode_amplitude(&self, mode: usize) -> f64 {
        let (x, p) = self.mode_mean(mode);
        0.5 * x.hypot(p)
    }

    /// True when cov + i*Omega >= 0 up to [`PHYSICALITY_TOL`].
    pub fn is_physical(&self) -> bool {
        min_uncertainty_eigenvalue(&self.cov) >= PHYSICALITY_TOL
    }

    /// Transform by a symplectic matrix: mean -> S*mean, cov -> S*cov*S^T.
    pub fn apply(&self, s: &SymplecticMatrix) -> Result<GaussianState> {
        if s.n_modes != self.n_modes {
            return Err(Error::DimensionMismatch {
                what: "symplectic application",
                expected: self.n_modes,
                actual: s.n_modes,
            });
        }
        let mean = s.entries() * &self.mean;
        let cov = s.entries() * &self.cov * s.entries().transpose();
        Ok(Self::from_parts(self.n_modes, mean, cov))
    }

    /// Covariance of the amplitude quadratures: for each mode, the quadrature
    /// aligned with the mean-field phase arg(A_m).
    ///
    /// This is the N x N sector measured by photon-number fluctuations after
    /// the linearization n_m ~ N_m + |A_m| x_m. Errors if any mode's mean
    /// amplitude is below [`AMPLITUDE_FLOOR`] (the linearization needs a
    /// macroscopic mean field; the reported mode is 1-based).
    pub fn amplitude_quadrature_covariance(&self) -> Result<QuadratureCovariance> {
        let n = self.n_modes;
        let mut direction = Vec::with_capacity(n);
        for m in 0..n {
            let (x, p) = self.mode_mean(m);
            let amp = self.mode_amplitude(m);
            if amp < AMPLITUDE_FLOOR {
                return Err(Error::AmplitudeBelowFloor {
                    mode: m + 1,
                    amplitude: amp,
                    floor: AMPLITUDE_FLOOR,
                });
            }
            let phi = p.atan2(x);
            direction.push((phi.cos(), phi.sin()));
        }
        let mut c = DMatrix::zeros(n, n);
        for m in 0..n {
            let (cm, sm) = direction[m];
            for mp in m..n {
                let (cp, sp) = direction[mp];
                let b = &self.cov;
                let value = cm * cp * b[(2 * m, 2 * mp)]
                    + cm * sp * b[(2 * m, 2 * mp + 1)]
                    + sm * cp * b[(2 * m + 1, 2 * mp)]
                    + sm * sp * b[(2 * m + 1, 2 * mp + 1)];
                c[(m, mp)] = value;
                c[(mp, m)] = value;
            }
        }
        QuadratureCovariance::new(c)
    }
}

fn check_mode(i: usize, n_modes: usize) -> Result<()> {
    if i >= n_modes {
        return Err(Error::ModeOutOfRange {
            index: i,
            n_modes,
        });
    }
    Ok(())
}

fn check_mode_pair(i: usize, j: usize, n_modes: usize) -> Result<()> {
    check_mode(i, n_modes)?;
    check_mode(j, n_modes)?;
    if i == j {
        return Err(Error::DegenerateModePair { index: i });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn vacuum_is_identity_covariance() {
        let s = GaussianState::vacuum(1, vec![0.0, 0.0]).unwrap();
        assert_eq!(s.cov(), &DMatrix::identity(2, 2));

        let s = GaussianState::vacuum(2, vec![3.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.cov(), &DMatrix::identity(4, 4));
        assert_eq!(s.mean().as_slice(), &[3.0, 0.0, 0.0, 0.0]);

        let s = GaussianState::vacuum(19, vec![0.0; 38]).unwrap();
        assert_eq!(s.cov(), &DMatrix::identity(38, 38));
    }

    #[test]
    fn vacuum_rejects_wrong_mean_length() {
        assert!(GaussianState::vacuum(2, vec![0.0; 3]).is_err());
        assert!(GaussianState::vacuum(0, vec![]).is_err());
    }

    #[test]
    fn tms_zero_is_identity() {
        let s = SymplecticMatrix::two_mode_squeezer(0.0, 0, 1, 2).unwrap();
        assert_eq!(s.entries(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn tms_marginal_variance_is_cosh_2r() {
        let r = 0.5;
        let s = SymplecticMatrix::two_mode_squeezer(r, 0, 1, 2).unwrap();
        let vac = GaussianState::vacuum(2, vec![0.0; 4]).unwrap();
        let out = vac.apply(&s).unwrap();
        // marginal x variance of each mode is cosh(2r)
        assert_close(out.cov()[(0, 0)], (2.0 * r).cosh(), 1e-12);
        assert_close(out.cov()[(2, 2)], (2.0 * r).cosh(), 1e-12);
        assert_close((2.0 * r).cosh(), 1.5430806348152437, 1e-12);
    }

    #[test]
    fn tms_x_block_eigenvalues_are_exp_pm_2r() {
        // x-sector of S I S^T for the pair is [[cosh,sinh],[sinh,cosh]]^2
        // with eigenvalues e^{+-2r}; the x-block of S itself has e^{+-r}.
        let r = 0.5;
        let s = SymplecticMatrix::two_mode_squeezer(r, 0, 1, 2).unwrap();
        let m = s.entries();
        let xblock = nalgebra::Matrix2::new(m[(0, 0)], m[(0, 2)], m[(2, 0)], m[(2, 2)]);
        let eigs = xblock.symmetric_eigenvalues();
        let mut eigs: Vec<f64> = eigs.iter().copied().collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_close(eigs[0], (-r).exp(), 1e-12);
        assert_close(eigs[1], r.exp(), 1e-12);
    }

    #[test]
    fn tms_rejects_equal_modes() {
        let err = SymplecticMatrix::two_mode_squeezer(0.1, 1, 1, 3).unwrap_err();
        assert!(matches!(err, Error::DegenerateModePair { index: 1 }));
    }

    #[test]
    fn single_mode_squeezer_scales_quadratures() {
        let r = 0.3;
        let s = SymplecticMatrix::single_mode_squeezer(r, 0, 1).unwrap();
        let vac = GaussianState::vacuum(1, vec![0.0, 0.0]).unwrap();
        let out = vac.apply(&s).unwrap();
        assert_close(out.cov()[(0, 0)], (2.0 * r).exp(), 1e-12);
        assert_close(out.cov()[(1, 1)], (-2.0 * r).exp(), 1e-12);
    }

    #[test]
    fn beam_splitter_identity_and_swap() {
        let id = SymplecticMatrix::beam_splitter(0.0, 0, 1, 2).unwrap();
        assert_eq!(id.entries(), &DMatrix::identity(4, 4));

        // quarter rotation swaps the modes up to sign
        let swap = SymplecticMatrix::beam_splitter(std::f64::consts::FRAC_PI_2, 0, 1, 2).unwrap();
        let mut state = GaussianState::vacuum(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        state = state.apply(&swap).unwrap();
        assert_close(state.mean()[0].abs(), 0.0, 1e-12);
        assert_close(state.mean()[2].abs(), 1.0, 1e-12);
    }

    #[test]
    fn beam_splitter_mixes_x_sector_diagonals() {
        // cov diag(2,2,1,1) interleaved: x-sector diag(2,1) -> both 1.5
        let theta = std::f64::consts::FRAC_PI_4;
        let s = SymplecticMatrix::beam_splitter(theta, 0, 1, 2).unwrap();
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 1.0, 1.0]));
        let state = GaussianState::new(2, DVector::zeros(4), cov).unwrap();
        let out = state.apply(&s).unwrap();
        assert_close(out.cov()[(0, 0)], 1.5, 1e-12);
        assert_close(out.cov()[(2, 2)], 1.5, 1e-12);
    }

    #[test]
    fn beam_splitter_is_orthogonal() {
        let s = SymplecticMatrix::beam_splitter(0.7, 0, 2, 3).unwrap();
        assert!(s.orthogonality_deviation() < 1e-10);
        assert!(s.symplectic_deviation() < 1e-10);
    }

    #[test]
    fn phase_shift_examples() {
        let id = SymplecticMatrix::phase_shift(0.0, 0, 1).unwrap();
        assert_eq!(id.entries(), &DMatrix::identity(2, 2));

        // phi = pi negates the quadratures, leaves vacuum covariance alone
        let pi = SymplecticMatrix::phase_shift(std::f64::consts::PI, 0, 1).unwrap();
        let state = GaussianState::vacuum(1, vec![1.0, 0.5]).unwrap();
        let out = state.apply(&pi).unwrap();
        assert_close(out.mean()[0], -1.0, 1e-12);
        assert_close(out.mean()[1], -0.5, 1e-12);
        assert_close(out.cov()[(0, 0)], 1.0, 1e-12);

        // phi = pi/2 swaps a squeezed mode's diagonal
        let e = std::f64::consts::E;
        let half = SymplecticMatrix::phase_shift(std::f64::consts::FRAC_PI_2, 0, 1).unwrap();
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![e, 1.0 / e]));
        let state = GaussianState::new(1, DVector::zeros(2), cov).unwrap();
        let out = state.apply(&half).unwrap();
        assert_close(out.cov()[(0, 0)], 1.0 / e, 1e-12);
        assert_close(out.cov()[(1, 1)], e, 1e-12);
    }

    #[test]
    fn apply_identity_leaves_state() {
        let state = GaussianState::vacuum(3, vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap();
        let out = state.apply(&SymplecticMatrix::identity(3)).unwrap();
        assert_eq!(out.mean(), state.mean());
        assert_eq!(out.cov(), state.cov());
    }

    #[test]
    fn tms_output_is_physical_with_unit_symplectic_eigenvalues() {
        let s = SymplecticMatrix::two_mode_squeezer(0.3, 0, 1, 2).unwrap();
        let out = GaussianState::vacuum(2, vec![0.0; 4]).unwrap().apply(&s).unwrap();
        assert!(out.is_physical());
        let nus = symplectic_eigenvalues(out.cov());
        for nu in nus {
            assert_close(nu, 1.0, 1e-9);
        }
    }

    #[test]
    fn beam_splitter_preserves_covariance_spectrum() {
        let sq = SymplecticMatrix::two_mode_squeezer(0.4, 0, 1, 2).unwrap();
        let state = GaussianState::vacuum(2, vec![0.0; 4]).unwrap().apply(&sq).unwrap();
        let before: Vec<f64> = {
            let mut v: Vec<f64> = state.cov().clone().symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        let bs = SymplecticMatrix::beam_splitter(std::f64::consts::FRAC_PI_4, 0, 1, 2).unwrap();
        let after_state = state.apply(&bs).unwrap();
        let mut after: Vec<f64> = after_state.cov().clone().symmetric_eigenvalues().iter().copied().collect();
        after.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in before.iter().zip(after.iter()) {
            assert_close(*a, *b, 1e-10);
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        let s1 = SymplecticMatrix::two_mode_squeezer(0.2, 0, 1, 2).unwrap();
        let s2 = SymplecticMatrix::beam_splitter(0.9, 0, 1, 2).unwrap();
        let state = GaussianState::vacuum(2, vec![1.0, 0.0, 2.0, 0.0]).unwrap();
        let sequential = state.apply(&s1).unwrap().apply(&s2).unwrap();
        let composed = state.apply(&s2.compose(&s1).unwrap()).unwrap();
        assert!(max_abs(&(sequential.cov() - composed.cov())) < 1e-10);
        assert!((sequential.mean() - composed.mean()).abs().max() < 1e-10);
    }

    #[test]
    fn tms_negative_r_inverts() {
        let s = SymplecticMatrix::two_mode_squeezer(0.35, 0, 1, 2).unwrap();
        let inv = SymplecticMatrix::two_mode_squeezer(-0.35, 0, 1, 2).unwrap();
        let product = s.compose(&inv).unwrap();
        let dim = 4;
        assert!(max_abs(&(product.entries() - DMatrix::identity(dim, dim))) < 1e-10);
    }

    #[test]
    fn amplitude_covariance_of_displaced_vacuum_is_identity() {
        let mut mean = vec![0.0; 8];
        mean[0] = 3.0;
        mean[2] = 1.0;
        mean[4] = 2.0;
        mean[6] = 0.5;
        let state = GaussianState::vacuum(4, mean).unwrap();
        let c = state.amplitude_quadrature_covariance().unwrap();
        assert!(max_abs(&(c.matrix() - DMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn amplitude_covariance_selects_squeezed_axis() {
        let r = 0.4;
        // squeezed p, mean along p (the squeezed axis): C11 = e^{-2r}
        let sq = SymplecticMatrix::single_mode_squeezer(r, 0, 1).unwrap();
        let state = GaussianState::vacuum(1, vec![0.0, 2.0]).unwrap().apply(&sq).unwrap();
        let c = state.amplitude_quadrature_covariance().unwrap();
        assert_close(c.matrix()[(0, 0)], (-2.0 * r).exp(), 1e-12);

        // same conclusion stated through the covariance: mean phase pi/2 with
        // cov diag(e^{2r}, e^{-2r}) selects the p variance
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![(2.0 * r).exp(), (-2.0 * r).exp()]));
        let state = GaussianState::new(1, DVector::from_vec(vec![0.0, 2.0]), cov).unwrap();
        let c = state.amplitude_quadrature_covariance().unwrap();
        assert_close(c.matrix()[(0, 0)], (-2.0 * r).exp(), 1e-12);
    }

    #[test]
    fn amplitude_covariance_rejects_zero_mean_mode() {
        let state = GaussianState::vacuum(2, vec![3.0, 0.0, 0.0, 0.0]).unwrap();
        let err = state.amplitude_quadrature_covariance().unwrap_err();
        match err {
            Error::AmplitudeBelowFloor { mode, .. } => assert_eq!(mode, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn unphysical_covariance_is_rejected() {
        // variance 0.5 in both quadratures violates the uncertainty bound
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5]));
        let err = GaussianState::new(1, DVector::zeros(2), cov).unwrap_err();
        assert!(matches!(err, Error::Unphysical { .. }));
    }

    #[test]
    fn phonon_register_rejects_negative_occupancy() {
        assert!(PhononRegister::new(vec![0.0, 1.5]).is_ok());
        assert!(PhononRegister::new(vec![-0.1]).is_err());
        assert_eq!(thermal_variance(1.0), 3.0);
    }
}
