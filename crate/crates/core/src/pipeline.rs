//! End-to-end pipelines behind the CLI subcommands.
//!
//! Each pipeline is a pure function of its input files plus an optional
//! seed, returning in-memory results; the CLI only parses arguments and
//! writes the returned strings. That keeps the byte-determinism contract
//! testable without a process boundary.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{build_fiber_channel, propagate, simulate_window_scan};
use crate::formats::{
    emit_matrix_csv, emit_window_scan, parse_covariance_fixture, parse_shot_levels,
    parse_simulation_config, parse_window_scan_with_bins,
};
use crate::gaussian::GaussianState;
use crate::modal::diagonalize;
use crate::report::{
    matrix_to_rows, rows_to_matrix, AnalysisReport, InputDigest, ReportBuilder, ToolInfo,
};
use crate::window::{
    normalize_covariance, reconstruct_covariance, PhotonCovariance, QuadratureCovariance,
    ShotNoiseLevels,
};

/// JSON document written by `reconstruct` and accepted by `analyze --cov`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionDoc {
    pub tool: ToolInfo,
    pub inputs: Vec<InputDigest>,
    pub n_bins: usize,
    pub shot_levels: Vec<f64>,
    pub photon_covariance: Vec<Vec<f64>>,
    pub covariance: Vec<Vec<f64>>,
    pub psd_clipped_mass: Option<f64>,
}

impl ReconstructionDoc {
    pub fn to_json(&self) -> String {
        let rounded = Self {
            tool: self.tool.clone(),
            inputs: self.inputs.clone(),
            n_bins: self.n_bins,
            shot_levels: self.shot_levels.iter().map(|&x| crate::round_sig(x, 6)).collect(),
            photon_covariance: round_rows(&self.photon_covariance),
            covariance: round_rows(&self.covariance),
            psd_clipped_mass: self.psd_clipped_mass.map(|x| crate::round_sig(x, 6)),
        };
        let mut out = serde_json::to_string_pretty(&rounded).expect("serializable");
        out.push('\n');
        out
    }

    pub fn from_json(contents: &str) -> Result<Self> {
        serde_json::from_str(contents).map_err(|e| Error::File {
            path: "<reconstruction>".to_string(),
            message: e.to_string(),
        })
    }
}

fn round_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| crate::round_sig(x, 6)).collect())
        .collect()
}

/// `reconstruct`: window scan + shot levels -> covariance document.
pub fn run_reconstruct(
    scan_path: &Path,
    shot_path: &Path,
    psd_project: bool,
) -> Result<ReconstructionDoc> {
    let shot = parse_shot_levels(shot_path)?;
    let scan = parse_window_scan_with_bins(scan_path, shot.n_bins())?;
    let photon = reconstruct_covariance(&scan)?;
    let covariance = normalize_covariance(&photon, &shot)?;
    let (covariance, clipped) = if psd_project {
        let (projected, mass) = covariance.project_psd();
        (projected, Some(mass))
    } else {
        (covariance, None)
    };
    Ok(ReconstructionDoc {
        tool: ToolInfo::default(),
        inputs: vec![
            InputDigest::from_file(scan_path)?,
            InputDigest::from_file(shot_path)?,
        ],
        n_bins: shot.n_bins(),
        shot_levels: shot.levels().to_vec(),
        photon_covariance: matrix_to_rows(photon.matrix()),
        covariance: matrix_to_rows(covariance.matrix()),
        psd_clipped_mass: clipped,
    })
}

/// Covariance input of `analyze`: matrix CSV or a reconstruction JSON.
fn load_covariance(
    path: &Path,
) -> Result<(QuadratureCovariance, Option<PhotonCovariance>, Option<f64>, Vec<String>)> {
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        let contents = std::fs::read_to_string(path).map_err(|source| Error::Io {
            action: "read",
            path: path.to_path_buf(),
            source,
        })?;
        let doc = ReconstructionDoc::from_json(&contents).map_err(|e| Error::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let (cov, asym) = QuadratureCovariance::from_symmetrized(rows_to_matrix(&doc.covariance))?;
        let photon_m = rows_to_matrix(&doc.photon_covariance);
        let photon = PhotonCovariance::new(0.5 * (&photon_m + photon_m.transpose()))?;
        let mut warnings = Vec::new();
        if asym > 0.0 {
            warnings.push(format!("input covariance symmetrized (max asymmetry {asym:.3e})"));
        }
        Ok((cov, Some(photon), doc.psd_clipped_mass, warnings))
    } else {
        let (cov, asym) = parse_covariance_fixture(path)?;
        let mut warnings = Vec::new();
        if asym > 0.0 {
            warnings.push(format!("input covariance symmetrized (max asymmetry {asym:.3e})"));
        }
        Ok((cov, None, None, warnings))
    }
}

/// `analyze`: covariance + shot levels -> full report.
pub fn run_analyze(
    cov_path: &Path,
    shot_path: &Path,
    psd_project: bool,
    seed: Option<u64>,
) -> Result<AnalysisReport> {
    let (covariance, photon, prior_clip, mut warnings) = load_covariance(cov_path)?;
    let shot = parse_shot_levels(shot_path)?;
    if shot.n_bins() != covariance.n_bins() {
        return Err(Error::DimensionMismatch {
            what: "shot-noise levels",
            expected: covariance.n_bins(),
            actual: shot.n_bins(),
        });
    }
    let (covariance, clipped) = if psd_project {
        let (projected, mass) = covariance.project_psd();
        (projected, Some(mass))
    } else {
        (covariance, prior_clip)
    };
    if let Some(mass) = clipped {
        if mass > 0.0 {
            warnings.push(format!("PSD projection clipped eigenvalue mass {mass:.3e}"));
        }
    }
    let decomp = diagonalize(&covariance)?;
    let mut builder = ReportBuilder::new();
    builder.inputs = vec![
        InputDigest::from_file(cov_path)?,
        InputDigest::from_file(shot_path)?,
    ];
    builder.seed = seed;
    builder.photon_covariance = photon;
    builder.shot = Some(shot);
    builder.psd_clipped_mass = clipped;
    builder.warnings = warnings;
    builder.build(&covariance, &decomp)
}

/// In-memory result of `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    /// Window scan in the `k,l,variance` schema.
    pub scan_csv: String,
    /// Ground-truth normalized covariance as matrix CSV.
    pub truth_csv: String,
    /// Effective seed after overrides.
    pub seed: u64,
}

/// `simulate`: fiber config -> synthetic scan plus ground truth.
///
/// The pump is modeled as a coherent state with per-bin amplitude
/// sqrt(shot_m) along x; the configured channel evolves it, and the scan is
/// measured from the resulting amplitude-quadrature covariance.
/// `seed_override` (CLI flag or SCQ_SEED) beats the config seed.
pub fn run_simulate(config_path: &Path, seed_override: Option<u64>) -> Result<SimulateOutput> {
    let mut inputs = parse_simulation_config(config_path)?;
    if let Some(seed) = seed_override {
        inputs.noise.rng_seed = seed;
    }
    let n = inputs.fiber.n_bins;
    let mut mean = vec![0.0; 2 * n];
    for m in 0..n {
        mean[2 * m] = 2.0 * inputs.shot.amplitude(m);
    }
    let pump = GaussianState::vacuum(n, mean)?;
    let channel = build_fiber_channel(&inputs.fiber)?;
    let evolved = propagate(&pump, &channel)?;
    let true_c = evolved.amplitude_quadrature_covariance()?;
    let scan = simulate_window_scan(&true_c, &inputs.shot, &inputs.noise)?;
    Ok(SimulateOutput {
        scan_csv: emit_window_scan(&scan),
        truth_csv: emit_matrix_csv(true_c.matrix()),
        seed: inputs.noise.rng_seed,
    })
}

/// Shot levels recovered from a simulation config, for feeding `reconstruct`
/// on synthetic scans.
pub fn shot_levels_from_config(config_path: &Path) -> Result<ShotNoiseLevels> {
    Ok(parse_simulation_config(config_path)?.shot)
}
