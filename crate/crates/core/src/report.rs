//! Analysis reports: construction, JSON and text emission.
//!
//! Serialization is deterministic: struct fields emit in declaration order,
//! every float is rounded to 6 significant digits first, and parsing an
//! emitted report and re-emitting it reproduces the bytes exactly.
//! Squeezing levels of non-positive eigenvalues are stored as `null`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};
use crate::modal::{eigenmode_spectral_amplitude, ModalDecomposition};
use crate::round_sig;
use crate::window::{PhotonCovariance, QuadratureCovariance, ShotNoiseLevels};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: "scq".to_string(),
            version: crate::VERSION.to_string(),
        }
    }
}

/// Hash record of one input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn from_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            action: "read",
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalSection {
    /// Ascending eigenvalues of the normalized covariance.
    pub eigenvalues: Vec<f64>,
    /// 10*log10(v) per mode; null where the eigenvalue is not positive.
    pub squeezing_db: Vec<Option<f64>>,
    /// Rows are eigenmode coefficient vectors.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Amplitude-weighted eigenmode profiles, when shot levels were given.
    pub mode_shapes_raw: Option<Vec<Vec<f64>>>,
    /// The same rows normalized to unit Euclidean norm, for plotting.
    pub mode_shapes_normalized: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub inputs: Vec<InputDigest>,
    pub n_bins: usize,
    /// RNG seed, present when the analyzed scan was synthetic.
    pub seed: Option<u64>,
    /// Reconstructed photon-number covariance, when the pipeline started
    /// from a window scan.
    pub photon_covariance: Option<Vec<Vec<f64>>>,
    /// Shot-noise-normalized covariance C.
    pub covariance: Vec<Vec<f64>>,
    pub shot_levels: Option<Vec<f64>>,
    pub modal: ModalSection,
    /// Modes with squeezing level below 0 dB.
    pub squeezed_mode_count: usize,
    /// 1-based modes whose |level| is inside the marginal band.
    pub marginal_modes: Vec<usize>,
    /// Mass removed by the optional PSD projection, when it was applied.
    pub psd_clipped_mass: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn matrix_to_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    let n = rows.len();
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    nalgebra::DMatrix::from_fn(n, cols, |i, j| rows[i][j])
}

/// Assemble the full report for an analyzed covariance matrix.
pub struct ReportBuilder {
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub photon_covariance: Option<PhotonCovariance>,
    pub shot: Option<ShotNoiseLevels>,
    pub psd_clipped_mass: Option<f64>,
    pub warnings: Vec<String>,
}

impl ReportBuilder {
    pub fn new() -> Self {
        Self {
            inputs: Vec::new(),
            seed: None,
            photon_covariance: None,
            shot: None,
            psd_clipped_mass: None,
            warnings: Vec::new(),
        }
    }

    pub fn build(
        self,
        covariance: &QuadratureCovariance,
        decomp: &ModalDecomposition,
    ) -> Result<AnalysisReport> {
        let mut warnings = self.warnings;
        let negative = covariance.non_positive_diagonal_bins();
        if !negative.is_empty() {
            warnings.push(format!(
                "non-positive covariance diagonal at bins {negative:?} (measurement noise?)"
            ));
        }
        for mode in decomp.non_positive_modes() {
            warnings.push(format!(
                "eigenvalue of mode {mode} is not positive; squeezing level undefined"
            ));
        }

        let (shapes_raw, shapes_norm) = match &self.shot {
            Some(shot) => {
                let shapes = eigenmode_spectral_amplitude(decomp, shot)?;
                (
                    Some(matrix_to_rows(&shapes.raw)),
                    Some(matrix_to_rows(&shapes.normalized)),
                )
            }
            None => (None, None),
        };

        Ok(AnalysisReport {
            tool: ToolInfo::default(),
            inputs: self.inputs,
            n_bins: covariance.n_bins(),
            seed: self.seed,
            photon_covariance: self.photon_covariance.map(|p| matrix_to_rows(p.matrix())),
            covariance: matrix_to_rows(covariance.matrix()),
            shot_levels: self.shot.map(|s| s.levels().to_vec()),
            modal: ModalSection {
                eigenvalues: decomp.eigenvalues().to_vec(),
                squeezing_db: decomp
                    .squeezing_db()
                    .iter()
                    .map(|&db| db.is_finite().then_some(db))
                    .collect(),
                eigenvectors: matrix_to_rows(decomp.basis()),
                mode_shapes_raw: shapes_raw,
                mode_shapes_normalized: shapes_norm,
            },
            squeezed_mode_count: decomp.count_squeezed_modes(0.0),
            marginal_modes: decomp.marginal_modes(),
            psd_clipped_mass: self.psd_clipped_mass,
            warnings,
        })
    }
}

impl Default for ReportBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl AnalysisReport {
    /// Copy with every float rounded to the pinned 6 significant digits.
    pub fn rounded(&self) -> Self {
        let round_rows = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().map(|&x| round_sig(x, 6)).collect())
                .collect()
        };
        Self {
            tool: self.tool.clone(),
            inputs: self.inputs.clone(),
            n_bins: self.n_bins,
            seed: self.seed,
            photon_covariance: self.photon_covariance.as_ref().map(round_rows),
            covariance: round_rows(&self.covariance),
            shot_levels: self
                .shot_levels
                .as_ref()
                .map(|v| v.iter().map(|&x| round_sig(x, 6)).collect()),
            modal: ModalSection {
                eigenvalues: self.modal.eigenvalues.iter().map(|&x| round_sig(x, 6)).collect(),
                squeezing_db: self
                    .modal
                    .squeezing_db
                    .iter()
                    .map(|o| o.map(|x| round_sig(x, 6)))
                    .collect(),
                eigenvectors: round_rows(&self.modal.eigenvectors),
                mode_shapes_raw: self.modal.mode_shapes_raw.as_ref().map(round_rows),
                mode_shapes_normalized: self.modal.mode_shapes_normalized.as_ref().map(round_rows),
            },
            squeezed_mode_count: self.squeezed_mode_count,
            marginal_modes: self.marginal_modes.clone(),
            psd_clipped_mass: self.psd_clipped_mass.map(|x| round_sig(x, 6)),
            warnings: self.warnings.clone(),
        }
    }

    /// Deterministic JSON emission.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.rounded())
            .expect("report serialization cannot fail");
        out.push('\n');
        out
    }

    pub fn from_json(contents: &str) -> Result<Self> {
        serde_json::from_str(contents).map_err(|e| Error::File {
            path: "<report>".to_string(),
            message: e.to_string(),
        })
    }

    /// Deterministic human-readable emission, including the per-mode
    /// squeezing table.
    pub fn to_text(&self) -> String {
        let r = self.rounded();
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", r.tool.name, r.tool.version));
        for input in &r.inputs {
            out.push_str(&format!("input: {} sha256={}\n", input.path, input.sha256));
        }
        if let Some(seed) = r.seed {
            out.push_str(&format!("seed: {seed}\n"));
        }
        out.push_str(&format!("bins: {}\n", r.n_bins));
        if let Some(mass) = r.psd_clipped_mass {
            out.push_str(&format!("psd projection clipped mass: {}\n", crate::format_float(mass)));
        }
        out.push_str(&format!(
            "squeezed modes (level < 0 dB): {}\n",
            r.squeezed_mode_count
        ));
        if !r.marginal_modes.is_empty() {
            out.push_str(&format!(
                "marginal modes (|level| < {} dB): {:?}\n",
                crate::modal::MARGINAL_BAND_DB,
                r.marginal_modes
            ));
        }
        out.push_str("\nmode  eigenvalue    squeezing_db  flags\n");
        for (idx, v) in r.modal.eigenvalues.iter().enumerate() {
            let db = r.modal.squeezing_db[idx];
            let level = match db {
                Some(db) => crate::format_float(db),
                None => "undefined".to_string(),
            };
            let mut flags = Vec::new();
            if db.map_or(true, |d| d < 0.0) {
                flags.push("squeezed");
            }
            if r.marginal_modes.contains(&(idx + 1)) {
                flags.push("marginal");
            }
            out.push_str(&format!(
                "{:>4}  {:<12}  {:<12}  {}\n",
                idx + 1,
                crate::format_float(*v),
                level,
                flags.join(",")
            ));
        }
        if !r.warnings.is_empty() {
            out.push_str("\nwarnings:\n");
            for w in &r.warnings {
                out.push_str(&format!("  - {w}\n"));
            }
        }
        out
    }

    /// Check the embedded matrices against their type invariants.
    pub fn validate(&self) -> Result<()> {
        let c = rows_to_matrix(&self.covariance);
        QuadratureCovariance::new(0.5 * (&c + c.transpose()))?;
        let asym = crate::gaussian::max_asymmetry(&c);
        if asym > 1e-5 {
            // emitted at 6 significant digits; anything beyond print noise
            // means corruption
            return Err(Error::NotSymmetric { max_asymmetry: asym });
        }
        if let Some(photon) = &self.photon_covariance {
            let p = rows_to_matrix(photon);
            if crate::gaussian::max_asymmetry(&p) > 1e-5 {
                return Err(Error::NotSymmetric {
                    max_asymmetry: crate::gaussian::max_asymmetry(&p),
                });
            }
        }
        if self.modal.eigenvalues.len() != self.n_bins {
            return Err(Error::DimensionMismatch {
                what: "report eigenvalues",
                expected: self.n_bins,
                actual: self.modal.eigenvalues.len(),
            });
        }
        Ok(())
    }
}

/// Emit a report to a file in the requested format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

pub fn emit_report(report: &AnalysisReport, format: ReportFormat, path: &Path) -> Result<()> {
    let contents = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Text => report.to_text(),
    };
    crate::formats::write_string(path, &contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::diagonalize;

    fn identity_report(n: usize) -> AnalysisReport {
        let c = QuadratureCovariance::identity(n);
        let d = diagonalize(&c).unwrap();
        ReportBuilder::new().build(&c, &d).unwrap()
    }

    #[test]
    fn identity_covariance_report() {
        let report = identity_report(3);
        assert_eq!(report.squeezed_mode_count, 0);
        // 0 dB sits inside the open |db| < 0.05 marginal band
        assert_eq!(report.marginal_modes, vec![1, 2, 3]);
        assert_eq!(report.modal.squeezing_db, vec![Some(0.0); 3]);
    }

    #[test]
    fn report_json_round_trips_byte_identically() {
        let report = identity_report(4);
        let json = report.to_json();
        let back = AnalysisReport::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        back.validate().unwrap();
    }

    #[test]
    fn same_input_twice_is_byte_identical() {
        let c = QuadratureCovariance::new(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[1.1, -0.2, -0.2, 0.8],
        ))
        .unwrap();
        let d = diagonalize(&c).unwrap();
        let a = ReportBuilder::new().build(&c, &d).unwrap();
        let b = ReportBuilder::new().build(&c, &d).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn fifteen_mw_report_lists_one_squeezed_mode() {
        let fixture = crate::fixtures::pump_15mw();
        let d = diagonalize(&fixture.covariance).unwrap();
        let report = ReportBuilder::new().build(&fixture.covariance, &d).unwrap();
        assert_eq!(report.squeezed_mode_count, 1);
        let min_db = report.modal.squeezing_db[0].unwrap();
        assert!((min_db - (-2.161)).abs() < 0.02, "{min_db}");
        let text = report.to_text();
        assert!(text.contains("squeezed modes (level < 0 dB): 1"));
    }

    #[test]
    fn non_positive_eigenvalue_serializes_as_null() {
        let c = QuadratureCovariance::new(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 2.0, 2.0, 1.0],
        ))
        .unwrap();
        let d = diagonalize(&c).unwrap();
        let report = ReportBuilder::new().build(&c, &d).unwrap();
        let json = report.to_json();
        assert!(json.contains("null"));
        assert!(!report.warnings.is_empty());
        let back = AnalysisReport::from_json(&json).unwrap();
        assert_eq!(back.modal.squeezing_db[0], None);
    }

    #[test]
    fn mode_shapes_present_with_shot_levels() {
        let c = QuadratureCovariance::identity(2);
        let d = diagonalize(&c).unwrap();
        let mut builder = ReportBuilder::new();
        builder.shot = Some(ShotNoiseLevels::new(vec![4.0, 1.0]).unwrap());
        let report = builder.build(&c, &d).unwrap();
        let raw = report.modal.mode_shapes_raw.unwrap();
        assert_eq!(raw[0][0], 2.0);
        assert_eq!(raw[1][1], 1.0);
    }
}
