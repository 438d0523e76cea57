//! File formats: window-scan CSV, shot-noise CSV, covariance CSV, and the
//! simulation config.
//!
//! Schemas (bins 1-based everywhere):
//! - window scan: header `k,l,variance` or `k,l,variance,sigma`, one window
//!   per row;
//! - shot noise: header `bin,level`, every bin 1..N exactly once;
//! - covariance: N rows of N comma-separated values, no header;
//! - simulation config: TOML, see [`SimulationConfig`].
//!
//! Every emitted float uses the pinned format of [`crate::format_float`]
//! (shortest representation of the value rounded to 6 significant digits),
//! so identical data always serializes to identical bytes.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fiber::{
    DispersionParams, FiberParams, KerrMix, KerrSqueeze, MeasurementNoiseParams, RamanCoupling,
};
use crate::format_float;
use crate::window::{
    QuadratureCovariance, ScanRecord, ShotNoiseLevels, SpectralWindow, WindowScan,
};

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        action: "read",
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn file_err(path: &Path, message: impl Into<String>) -> Error {
    Error::File {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    token: &str,
    name: &str,
) -> Result<T> {
    token
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {name}: {token:?}")))
}

/// Parse a window scan, validating each window against `n_bins`.
///
/// Rows are `k,l,variance[,sigma]`; the header row is required. Malformed
/// rows and windows past bin `n_bins` are reported with their line number;
/// duplicate windows are named.
pub fn parse_window_scan_with_bins(path: &Path, n_bins: usize) -> Result<WindowScan> {
    let contents = read_to_string(path)?;
    let mut lines = contents.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((no, line)) => break (no, line),
            None => return Err(file_err(path, "no records")),
        }
    };
    let header_cols: Vec<&str> = header.1.split(',').map(str::trim).collect();
    if header_cols != ["k", "l", "variance"] && header_cols != ["k", "l", "variance", "sigma"] {
        return Err(parse_err(
            path,
            header.0 + 1,
            format!("expected header `k,l,variance[,sigma]`, got {:?}", header.1),
        ));
    }

    let mut records = Vec::new();
    for (no, line) in lines {
        let line_no = no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 && cols.len() != 4 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 3 or 4 fields, got {}", cols.len()),
            ));
        }
        let k: usize = parse_field(path, line_no, cols[0], "k")?;
        let l: usize = parse_field(path, line_no, cols[1], "l")?;
        let variance: f64 = parse_field(path, line_no, cols[2], "variance")?;
        let sigma = match cols.get(3) {
            Some(tok) if !tok.is_empty() => Some(parse_field(path, line_no, tok, "sigma")?),
            _ => None,
        };
        if k == 0 {
            return Err(parse_err(path, line_no, "k is 1-based and must be >= 1"));
        }
        if k + l > n_bins {
            return Err(parse_err(
                path,
                line_no,
                format!("window k={k}, l={l} exceeds {n_bins} bins"),
            ));
        }
        records.push(ScanRecord {
            window: SpectralWindow::new(k, l)?,
            variance,
            sigma,
        });
    }
    if records.is_empty() {
        return Err(file_err(path, "no records"));
    }
    WindowScan::new(n_bins, records)
}

/// Parse a window scan, inferring the bin count from the widest window.
pub fn parse_window_scan(path: &Path) -> Result<WindowScan> {
    // first pass with a permissive bound to find max(k+l)
    let scan = parse_window_scan_with_bins(path, usize::MAX / 2)?;
    let n_bins = scan
        .records()
        .iter()
        .map(|r| r.window.last_bin())
        .max()
        .unwrap_or(1);
    WindowScan::new(n_bins, scan.records().to_vec())
}

/// Serialize a scan in the `k,l,variance[,sigma]` schema.
pub fn emit_window_scan(scan: &WindowScan) -> String {
    let with_sigma = scan.records().iter().any(|r| r.sigma.is_some());
    let mut out = String::from(if with_sigma { "k,l,variance,sigma\n" } else { "k,l,variance\n" });
    for rec in scan.records() {
        out.push_str(&format!(
            "{},{},{}",
            rec.window.first_bin(),
            rec.window.extra_width(),
            format_float(rec.variance)
        ));
        if with_sigma {
            out.push(',');
            if let Some(sigma) = rec.sigma {
                out.push_str(&format_float(sigma));
            }
        }
        out.push('\n');
    }
    out
}

/// Parse shot-noise levels: header `bin,level`, bins 1..N each exactly once.
pub fn parse_shot_levels(path: &Path) -> Result<ShotNoiseLevels> {
    let contents = read_to_string(path)?;
    let mut entries: Vec<(usize, f64, usize)> = Vec::new();
    let mut saw_header = false;
    for (no, line) in contents.lines().enumerate() {
        let line_no = no + 1;
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["bin", "level"] {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("expected header `bin,level`, got {line:?}"),
                ));
            }
            saw_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 2 fields, got {}", cols.len()),
            ));
        }
        let bin: usize = parse_field(path, line_no, cols[0], "bin")?;
        let level: f64 = parse_field(path, line_no, cols[1], "level")?;
        entries.push((bin, level, line_no));
    }
    if entries.is_empty() {
        return Err(file_err(path, "no records"));
    }
    let n = entries.len();
    let mut levels = vec![None; n];
    for (bin, level, line_no) in entries {
        if bin == 0 || bin > n {
            return Err(parse_err(
                path,
                line_no,
                format!("bin {bin} out of range 1..{n}"),
            ));
        }
        if levels[bin - 1].replace(level).is_some() {
            return Err(parse_err(path, line_no, format!("duplicate bin {bin}")));
        }
    }
    ShotNoiseLevels::new(levels.into_iter().map(Option::unwrap).collect())
}

pub fn emit_shot_levels(shot: &ShotNoiseLevels) -> String {
    let mut out = String::from("bin,level\n");
    for (idx, level) in shot.levels().iter().enumerate() {
        out.push_str(&format!("{},{}\n", idx + 1, format_float(*level)));
    }
    out
}

/// Parse a headerless N x N covariance CSV, symmetrizing (M + M^T)/2.
///
/// Returns the covariance and the maximum asymmetry removed.
pub fn parse_covariance_fixture(path: &Path) -> Result<(QuadratureCovariance, f64)> {
    let contents = read_to_string(path)?;
    parse_covariance_str(&contents, path)
}

pub(crate) fn parse_covariance_str(
    contents: &str,
    path: &Path,
) -> Result<(QuadratureCovariance, f64)> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (no, line) in contents.lines().enumerate() {
        let line_no = no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| parse_field(path, line_no, tok, "matrix entry"))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(file_err(path, "no records"));
    }
    let n = rows.len();
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(file_err(
                path,
                format!(
                    "matrix is not square: {n} rows but row {} has {} columns",
                    idx + 1,
                    row.len()
                ),
            ));
        }
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    QuadratureCovariance::from_symmetrized(m)
}

/// Serialize a matrix as headerless CSV with the pinned float format.
pub fn emit_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_float(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Per-bin eigenvalue listing, one value per line (used for bundled
/// reference eigenvalues).
pub(crate) fn parse_value_per_line(contents: &str, path: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (no, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        values.push(parse_field(path, no + 1, line, "value")?);
    }
    if values.is_empty() {
        return Err(file_err(path, "no records"));
    }
    Ok(values)
}

// --- simulation config -----------------------------------------------------

/// TOML simulation config. Mode and bin indices in the file are 1-based.
///
/// ```toml
/// n_bins = 4
/// n_steps = 1
///
/// [shot]
/// levels = [100.0, 100.0, 100.0, 100.0]
///
/// [[kerr_tms]]
/// i = 1
/// j = 2
/// r = 0.2
///
/// [[kerr_mix]]
/// i = 2
/// j = 3
/// theta = 0.5
///
/// [[raman]]
/// mode = 4
/// eta = 0.05
/// n_bar = 0.5
///
/// [measurement]
/// snr_db = 41.0
/// cmrr_db = 20.0
/// significant_digits = 3
/// seed = 1
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_bins: usize,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default)]
    pub kerr_tms: Vec<KerrTmsEntry>,
    #[serde(default)]
    pub kerr_mix: Vec<KerrMixEntry>,
    #[serde(default)]
    pub raman: Vec<RamanEntry>,
    #[serde(default)]
    pub dispersion: Option<DispersionEntry>,
    pub shot: ShotEntry,
    #[serde(default)]
    pub measurement: MeasurementEntry,
}

fn default_steps() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrTmsEntry {
    pub i: usize,
    pub j: usize,
    pub r: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrMixEntry {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanEntry {
    pub mode: usize,
    pub eta: f64,
    pub n_bar: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionEntry {
    #[serde(default)]
    pub beta2_ps2_km: f64,
    #[serde(default)]
    pub beta3_ps3_km: f64,
    #[serde(default)]
    pub beta4_ps4_km: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotEntry {
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MeasurementEntry {
    pub snr_db: Option<f64>,
    pub cmrr_db: Option<f64>,
    pub significant_digits: Option<u32>,
    pub seed: Option<u64>,
}

/// Everything a simulation run needs, validated and 0-based.
#[derive(Debug, Clone)]
pub struct SimulationInputs {
    pub fiber: FiberParams,
    pub shot: ShotNoiseLevels,
    pub noise: MeasurementNoiseParams,
}

pub fn parse_simulation_config(path: &Path) -> Result<SimulationInputs> {
    let contents = read_to_string(path)?;
    let config: SimulationConfig =
        toml::from_str(&contents).map_err(|e| file_err(path, e.to_string()))?;
    simulation_inputs(&config, path)
}

fn one_based(path: &Path, name: &'static str, value: usize, n_bins: usize) -> Result<usize> {
    if value == 0 || value > n_bins {
        return Err(file_err(
            path,
            format!("{name} = {value} out of range 1..{n_bins}"),
        ));
    }
    Ok(value - 1)
}

fn simulation_inputs(config: &SimulationConfig, path: &Path) -> Result<SimulationInputs> {
    let n = config.n_bins;
    if config.shot.levels.len() != n {
        return Err(file_err(
            path,
            format!(
                "shot.levels has {} entries but n_bins = {n}",
                config.shot.levels.len()
            ),
        ));
    }
    let kerr_tms = config
        .kerr_tms
        .iter()
        .map(|e| {
            Ok(KerrSqueeze {
                i: one_based(path, "kerr_tms.i", e.i, n)?,
                j: one_based(path, "kerr_tms.j", e.j, n)?,
                r: e.r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kerr_mix = config
        .kerr_mix
        .iter()
        .map(|e| {
            Ok(KerrMix {
                i: one_based(path, "kerr_mix.i", e.i, n)?,
                j: one_based(path, "kerr_mix.j", e.j, n)?,
                theta: e.theta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let raman = config
        .raman
        .iter()
        .map(|e| {
            Ok(RamanCoupling {
                mode: one_based(path, "raman.mode", e.mode, n)?,
                eta: e.eta,
                n_bar: e.n_bar,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dispersion = config
        .dispersion
        .as_ref()
        .map(|d| DispersionParams {
            beta2_ps2_km: d.beta2_ps2_km,
            beta3_ps3_km: d.beta3_ps3_km,
            beta4_ps4_km: d.beta4_ps4_km,
        })
        .unwrap_or_default();

    let fiber = FiberParams {
        n_bins: n,
        kerr_tms,
        kerr_mix,
        raman,
        n_steps: config.n_steps,
        dispersion,
    };
    fiber.validate()?;

    let defaults = MeasurementNoiseParams::default();
    let noise = MeasurementNoiseParams {
        electronic_snr_db: config.measurement.snr_db.unwrap_or(defaults.electronic_snr_db),
        cmrr_db: config.measurement.cmrr_db.unwrap_or(defaults.cmrr_db),
        significant_digits: config
            .measurement
            .significant_digits
            .unwrap_or(defaults.significant_digits),
        rng_seed: config.measurement.seed.unwrap_or(defaults.rng_seed),
    };
    noise.validate()?;

    Ok(SimulationInputs {
        fiber,
        shot: ShotNoiseLevels::new(config.shot.levels.clone())?,
        noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::enumerate_windows;
    use proptest::prelude::*;
    use std::io::Write;

    fn temp_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parse_valid_scan() {
        let f = temp_file("k,l,variance\n1,0,2.0\n2,0,3.0\n1,1,7.0\n");
        let scan = parse_window_scan(f.path()).unwrap();
        assert_eq!(scan.n_bins(), 2);
        assert_eq!(scan.records().len(), 3);
        assert_eq!(scan.records()[2].variance, 7.0);
    }

    #[test]
    fn parse_full_19_bin_scan() {
        let mut contents = String::from("k,l,variance\n");
        for w in enumerate_windows(19) {
            contents.push_str(&format!("{},{},1.0\n", w.first_bin(), w.extra_width()));
        }
        let f = temp_file(&contents);
        let scan = parse_window_scan(f.path()).unwrap();
        assert_eq!(scan.records().len(), 190);
        assert_eq!(scan.n_bins(), 19);
    }

    #[test]
    fn empty_scan_file_errors() {
        let f = temp_file("");
        let err = parse_window_scan(f.path()).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
        let f = temp_file("k,l,variance\n");
        let err = parse_window_scan(f.path()).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let f = temp_file("k,l,variance\n1,0,2.0\n1,zero,3.0\n");
        let err = parse_window_scan(f.path()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn window_beyond_bins_reports_line_number() {
        let f = temp_file("k,l,variance\n1,0,2.0\n2,2,3.0\n");
        let err = parse_window_scan_with_bins(f.path(), 3).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("k=2"));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn duplicate_window_is_named() {
        let f = temp_file("k,l,variance\n1,0,2.0\n1,0,2.5\n");
        let err = parse_window_scan(f.path()).unwrap_err();
        assert!(matches!(err, Error::DuplicateWindow { k: 1, l: 0 }));
    }

    #[test]
    fn scan_round_trip() {
        let f = temp_file("k,l,variance,sigma\n1,0,2,0.1\n2,0,3,\n1,1,7,0.05\n");
        let scan = parse_window_scan(f.path()).unwrap();
        assert_eq!(scan.records()[1].sigma, None);
        let emitted = emit_window_scan(&scan);
        let f2 = temp_file(&emitted);
        let back = parse_window_scan(f2.path()).unwrap();
        assert_eq!(scan, back);
    }

    #[test]
    fn parse_shot_file() {
        let f = temp_file("bin,level\n1,4.0\n3,1.0\n2,2.5\n");
        let shot = parse_shot_levels(f.path()).unwrap();
        assert_eq!(shot.levels(), &[4.0, 2.5, 1.0]);

        let f = temp_file("bin,level\n1,4.0\n1,2.0\n");
        assert!(parse_shot_levels(f.path()).is_err());

        let f = temp_file("bin,level\n1,4.0\n5,2.0\n");
        assert!(parse_shot_levels(f.path()).is_err());

        let f = temp_file("bin,level\n1,0.0\n");
        assert!(matches!(
            parse_shot_levels(f.path()),
            Err(Error::InvalidShotLevel { bin: 1, .. })
        ));
    }

    #[test]
    fn covariance_fixture_identity() {
        let f = temp_file("1,0\n0,1\n");
        let (cov, asym) = parse_covariance_fixture(f.path()).unwrap();
        assert_eq!(asym, 0.0);
        assert_eq!(cov.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn covariance_fixture_symmetrizes_and_reports() {
        let f = temp_file("1,0.2\n0.1,1\n");
        let (cov, asym) = parse_covariance_fixture(f.path()).unwrap();
        assert!((asym - 0.1).abs() < 1e-15);
        assert!((cov.matrix()[(0, 1)] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn covariance_fixture_rejects_non_square() {
        let f = temp_file("1,0,0\n0,1,0\n");
        let err = parse_covariance_fixture(f.path()).unwrap_err();
        assert!(err.to_string().contains("not square"), "{err}");
    }

    #[test]
    fn simulation_config_round_trip() {
        let toml = r#"
n_bins = 3
n_steps = 2

[shot]
levels = [100.0, 90.0, 80.0]

[[kerr_tms]]
i = 1
j = 2
r = 0.2

[[raman]]
mode = 3
eta = 0.1
n_bar = 0.5

[measurement]
snr_db = 50.0
seed = 9
"#;
        let f = temp_file(toml);
        let inputs = parse_simulation_config(f.path()).unwrap();
        assert_eq!(inputs.fiber.n_bins, 3);
        assert_eq!(inputs.fiber.kerr_tms[0].i, 0); // converted to 0-based
        assert_eq!(inputs.fiber.raman[0].mode, 2);
        assert_eq!(inputs.noise.electronic_snr_db, 50.0);
        assert_eq!(inputs.noise.cmrr_db, 20.0); // default
        assert_eq!(inputs.noise.rng_seed, 9);
    }

    #[test]
    fn simulation_config_rejects_bad_indices() {
        let toml = "n_bins = 2\n[shot]\nlevels = [1.0, 1.0]\n[[kerr_tms]]\ni = 0\nj = 2\nr = 0.1\n";
        let f = temp_file(toml);
        let err = parse_simulation_config(f.path()).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");

        let toml = "n_bins = 2\n[shot]\nlevels = [1.0]\n";
        let f = temp_file(toml);
        let err = parse_simulation_config(f.path()).unwrap_err();
        assert!(err.to_string().contains("n_bins"), "{err}");
    }

    proptest! {
        #[test]
        fn float_format_preserves_six_digits(x in -1e9f64..1e9f64) {
            let emitted = format_float(x);
            let back: f64 = emitted.parse().unwrap();
            let tol = 1e-5 * x.abs().max(1e-300);
            prop_assert!((back - x).abs() <= tol, "{x} -> {emitted} -> {back}");
        }

        #[test]
        fn emitted_floats_reparse_identically(x in -1e9f64..1e9f64) {
            // emit -> parse -> emit is a fixed point
            let once = format_float(x);
            let back: f64 = once.parse().unwrap();
            let twice = format_float(back);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn scan_emit_parse_round_trip(
            n in 1usize..6,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let records: Vec<ScanRecord> = enumerate_windows(n)
                .into_iter()
                .map(|w| ScanRecord {
                    window: w,
                    variance: crate::round_sig(rng.gen_range(-10.0..10.0), 6),
                    sigma: None,
                })
                .collect();
            let scan = WindowScan::new(n, records).unwrap();
            let emitted = emit_window_scan(&scan);
            let f = temp_file(&emitted);
            let back = parse_window_scan_with_bins(f.path(), n).unwrap();
            prop_assert_eq!(scan, back);
        }
    }
}
