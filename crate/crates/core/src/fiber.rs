//! Phenomenological Gaussian model of nonlinear fiber noise.
//!
//! Four processes drive the quantum noise of a pulse propagating through a
//! nonlinear fiber: two-mode squeezing and two-mode mixing between optical
//! modes (Kerr), and the same two shapes coupling optical modes to thermal
//! phonons (Raman). The first three are symplectic; the Raman coupling is a
//! lossy thermal contact applied with the phonon traced out. Interaction
//! strengths are free per-segment parameters: no attempt is made to derive
//! them from pump power, and the bundled configs are labeled illustrative.
//!
//! Dispersion coefficients are carried as metadata only; there is no
//! split-step propagation here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PhononRegister, SymplecticMatrix};
use crate::round_sig;
use crate::window::{
    denormalize_covariance, enumerate_windows, predict_window_variance, QuadratureCovariance,
    ScanRecord, ShotNoiseLevels, WindowScan,
};

/// One two-mode-squeezing interaction per propagation segment (0-based
/// modes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrSqueeze {
    pub i: usize,
    pub j: usize,
    pub r: f64,
}

/// One beam-splitter-like mixing interaction per propagation segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrMix {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

/// Thermal contact of one optical mode with a phonon environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanCoupling {
    pub mode: usize,
    /// Coupling fraction, 0..=1.
    pub eta: f64,
    /// Mean phonon occupation, >= 0.
    pub n_bar: f64,
}

/// Fiber dispersion coefficients, retained as metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionParams {
    pub beta2_ps2_km: f64,
    pub beta3_ps3_km: f64,
    pub beta4_ps4_km: f64,
}

impl Default for DispersionParams {
    fn default() -> Self {
        // zero-dispersion operating point of the measured fiber
        Self {
            beta2_ps2_km: 0.0,
            beta3_ps3_km: 0.0638,
            beta4_ps4_km: -2.895e-5,
        }
    }
}

/// Full forward-model parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberParams {
    pub n_bins: usize,
    pub kerr_tms: Vec<KerrSqueeze>,
    pub kerr_mix: Vec<KerrMix>,
    pub raman: Vec<RamanCoupling>,
    /// Number of propagation segments; each segment applies every listed
    /// interaction once, in order.
    pub n_steps: usize,
    pub dispersion: DispersionParams,
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 {
            return Err(Error::DimensionMismatch {
                what: "bin count",
                expected: 1,
                actual: 0,
            });
        }
        if self.n_steps == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "n_steps",
                value: 0.0,
                min: 1.0,
                max: f64::INFINITY,
            });
        }
        for kerr in &self.kerr_tms {
            check_pair(kerr.i, kerr.j, self.n_bins)?;
        }
        for mix in &self.kerr_mix {
            check_pair(mix.i, mix.j, self.n_bins)?;
        }
        for raman in &self.raman {
            if raman.mode >= self.n_bins {
                return Err(Error::ModeOutOfRange {
                    index: raman.mode,
                    n_modes: self.n_bins,
                });
            }
            check_raman_params(raman.eta, raman.n_bar)?;
        }
        Ok(())
    }
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::ModeOutOfRange { index: i, n_modes: n });
    }
    if j >= n {
        return Err(Error::ModeOutOfRange { index: j, n_modes: n });
    }
    if i == j {
        return Err(Error::DegenerateModePair { index: i });
    }
    Ok(())
}

fn check_raman_params(eta: f64, n_bar: f64) -> Result<()> {
    if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
        return Err(Error::ParameterOutOfRange {
            name: "eta",
            value: eta,
            min: 0.0,
            max: 1.0,
        });
    }
    if !n_bar.is_finite() || n_bar < 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "n_bar",
            value: n_bar,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(())
}

/// One operation of a fiber channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelOp {
    Symplectic(SymplecticMatrix),
    Raman { mode: usize, eta: f64, n_bar: f64 },
}

/// An ordered list of Gaussian operations equivalent to propagating through
/// the fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberChannel {
    n_modes: usize,
    ops: Vec<ChannelOp>,
    phonons: PhononRegister,
}

impl FiberChannel {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn ops(&self) -> &[ChannelOp] {
        &self.ops
    }

    /// Thermal occupations of the phonon environments, one per Raman
    /// coupling per segment.
    pub fn phonons(&self) -> &PhononRegister {
        &self.phonons
    }
}

/// Expand the parameters into an explicit channel: per segment, the Kerr
/// two-mode squeezers, then the Kerr mixers, then the Raman contacts.
pub fn build_fiber_channel(params: &FiberParams) -> Result<FiberChannel> {
    params.validate()?;
    let n = params.n_bins;
    let mut ops = Vec::new();
    let mut occupancies = Vec::new();
    for _ in 0..params.n_steps {
        for kerr in &params.kerr_tms {
            ops.push(ChannelOp::Symplectic(SymplecticMatrix::two_mode_squeezer(
                kerr.r, kerr.i, kerr.j, n,
            )?));
        }
        for mix in &params.kerr_mix {
            ops.push(ChannelOp::Symplectic(SymplecticMatrix::beam_splitter(
                mix.theta, mix.i, mix.j, n,
            )?));
        }
        for raman in &params.raman {
            ops.push(ChannelOp::Raman {
                mode: raman.mode,
                eta: raman.eta,
                n_bar: raman.n_bar,
            });
            occupancies.push(raman.n_bar);
        }
    }
    Ok(FiberChannel {
        n_modes: n,
        ops,
        phonons: PhononRegister::new(occupancies)?,
    })
}

/// Couple one mode to a thermal phonon environment and trace the phonon out.
///
/// The mode's 2x2 covariance block becomes (1-eta)*block + eta*(2n_bar+1)*I,
/// its cross-covariances and mean scale by sqrt(1-eta). A Gaussian channel,
/// so physicality is preserved.
pub fn raman_channel(
    state: &GaussianState,
    mode: usize,
    eta: f64,
    n_bar: f64,
) -> Result<GaussianState> {
    if mode >= state.n_modes() {
        return Err(Error::ModeOutOfRange {
            index: mode,
            n_modes: state.n_modes(),
        });
    }
    check_raman_params(eta, n_bar)?;
    let keep = (1.0 - eta).sqrt();
    let thermal = eta * crate::gaussian::thermal_variance(n_bar);
    let dim = 2 * state.n_modes();
    let (x, p) = (2 * mode, 2 * mode + 1);

    let mut cov = state.cov().clone();
    for row in 0..dim {
        if row == x || row == p {
            continue;
        }
        cov[(row, x)] *= keep;
        cov[(x, row)] *= keep;
        cov[(row, p)] *= keep;
        cov[(p, row)] *= keep;
    }
    cov[(x, x)] = (1.0 - eta) * state.cov()[(x, x)] + thermal;
    cov[(p, p)] = (1.0 - eta) * state.cov()[(p, p)] + thermal;
    cov[(x, p)] = (1.0 - eta) * state.cov()[(x, p)];
    cov[(p, x)] = cov[(x, p)];

    let mut mean = state.mean().clone();
    mean[x] *= keep;
    mean[p] *= keep;

    Ok(GaussianState::from_parts(state.n_modes(), mean, cov))
}

/// Apply a channel's operations in order.
pub fn propagate(state: &GaussianState, channel: &FiberChannel) -> Result<GaussianState> {
    if channel.n_modes != state.n_modes() {
        return Err(Error::DimensionMismatch {
            what: "channel application",
            expected: state.n_modes(),
            actual: channel.n_modes,
        });
    }
    let mut current = state.clone();
    for op in &channel.ops {
        current = match op {
            ChannelOp::Symplectic(s) => current.apply(s)?,
            ChannelOp::Raman { mode, eta, n_bar } => {
                raman_channel(&current, *mode, *eta, *n_bar)?
            }
        };
    }
    Ok(current)
}

/// Electronic-noise and readout parameters of the variance measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoiseParams {
    /// Signal-to-noise ratio of the variance readout in dB; each window
    /// variance v receives a zero-mean Gaussian perturbation of standard
    /// deviation v * 10^(-snr/20). Use infinity for a noiseless scan.
    pub electronic_snr_db: f64,
    /// Common-mode rejection ratio of the balanced detector in dB. Recorded
    /// as the shot-noise calibration bound; not injected into the scan.
    pub cmrr_db: f64,
    /// Measured variances are rounded to this many significant digits.
    pub significant_digits: u32,
    pub rng_seed: u64,
}

impl Default for MeasurementNoiseParams {
    fn default() -> Self {
        Self {
            electronic_snr_db: 41.0,
            cmrr_db: 20.0,
            significant_digits: 3,
            rng_seed: 0,
        }
    }
}

impl MeasurementNoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.electronic_snr_db > 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "electronic_snr_db",
                value: self.electronic_snr_db,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
        if !(self.cmrr_db > 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "cmrr_db",
                value: self.cmrr_db,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
        if self.significant_digits == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "significant_digits",
                value: 0.0,
                min: 1.0,
                max: f64::INFINITY,
            });
        }
        Ok(())
    }

    /// Derive the parameter set for one Monte Carlo run: same noise model,
    /// independent random stream.
    pub fn for_run(&self, run_index: u64) -> Self {
        Self {
            rng_seed: self.rng_seed.wrapping_add(run_index),
            ..*self
        }
    }
}

/// Generate the complete contiguous window scan a measurement of `true_c`
/// would produce: de-normalize by the shot levels, predict each window
/// variance, perturb at the configured SNR, and round to the effective
/// digits. Seeded and reproducible.
pub fn simulate_window_scan(
    true_c: &QuadratureCovariance,
    shot: &ShotNoiseLevels,
    noise: &MeasurementNoiseParams,
) -> Result<WindowScan> {
    noise.validate()?;
    let photon = denormalize_covariance(true_c, shot)?;
    let n = photon.n_bins();
    let relative_sigma = 10f64.powf(-noise.electronic_snr_db / 20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
    let mut records = Vec::with_capacity(n * (n + 1) / 2);
    for window in enumerate_windows(n) {
        let variance = predict_window_variance(&photon, &window)?;
        let std = variance.abs() * relative_sigma;
        let perturbed = if std > 0.0 {
            let normal = Normal::new(0.0, std)
                .map_err(|e| Error::Numerical(format!("noise distribution: {e}")))?;
            variance + normal.sample(&mut rng)
        } else {
            variance
        };
        records.push(ScanRecord {
            window,
            variance: round_sig(perturbed, noise.significant_digits),
            sigma: None,
        });
    }
    WindowScan::new(n, records)
}
