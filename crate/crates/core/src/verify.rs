//! Self-contained acceptance checks over the bundled reference data and the
//! library's core invariants.
//!
//! `scq verify-fixtures` runs [`run_all`] and prints one pass/fail line per
//! criterion; the `acceptance` integration test asserts each one. Every
//! check is deterministic: seeds, tolerances, and iteration counts are
//! pinned here.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fiber::{raman_channel, simulate_window_scan, MeasurementNoiseParams};
use crate::fixtures;
use crate::gaussian::{GaussianState, SymplecticMatrix};
use crate::modal::diagonalize;
use crate::report::ReportBuilder;
use crate::window::{
    inclusion_exclusion_reconstruct, normalize_covariance, predict_complete_scan,
    reconstruct_covariance, PhotonCovariance, ScanSolver, ShotNoiseLevels,
};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(id: usize, name: &'static str, detail: String) -> Self {
        Self {
            id,
            name,
            passed: true,
            detail,
        }
    }

    fn fail(id: usize, name: &'static str, detail: String) -> Self {
        Self {
            id,
            name,
            passed: false,
            detail,
        }
    }

    fn from(id: usize, name: &'static str, passed: bool, detail: String) -> Self {
        if passed {
            Self::pass(id, name, detail)
        } else {
            Self::fail(id, name, detail)
        }
    }
}

pub fn run_all() -> Vec<CheckResult> {
    vec![
        criterion_1_fixture_eigenvalues_5mw(),
        criterion_2_fixture_eigenvalues_15mw(),
        criterion_3_squeezed_mode_counts(),
        criterion_4_minimum_squeezing_levels(),
        criterion_5_reconstruction_round_trip(),
        criterion_6_solver_oracle_equivalence(),
        criterion_7_gaussian_invariants(),
        criterion_8_monte_carlo_consistency(),
        criterion_9_determinism(),
    ]
}

fn eigenvalue_check(
    id: usize,
    name: &'static str,
    fixture: fixtures::FixtureSet,
    budget_s: Option<f64>,
) -> CheckResult {
    let start = Instant::now();
    let decomp = match diagonalize(&fixture.covariance) {
        Ok(d) => d,
        Err(e) => return CheckResult::fail(id, name, format!("diagonalize failed: {e}")),
    };
    let mut max_delta = 0.0f64;
    for (ours, published) in decomp.eigenvalues().iter().zip(&fixture.eigenvalues) {
        max_delta = max_delta.max((ours - published).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut passed = max_delta < 2e-3;
    let mut detail = format!("max |v_ours - v_published| = {max_delta:.2e} (tol 2e-3)");
    if let Some(budget) = budget_s {
        detail.push_str(&format!(", runtime {elapsed:.3}s (budget {budget}s)"));
        passed = passed && elapsed < budget;
    }
    CheckResult::from(id, name, passed, detail)
}

pub fn criterion_1_fixture_eigenvalues_5mw() -> CheckResult {
    eigenvalue_check(
        1,
        "fixture eigenvalues (5 mW)",
        fixtures::pump_5mw(),
        Some(1.0),
    )
}

pub fn criterion_2_fixture_eigenvalues_15mw() -> CheckResult {
    eigenvalue_check(
        2,
        "fixture eigenvalues (15 mW)",
        fixtures::pump_15mw(),
        None,
    )
}

pub fn criterion_3_squeezed_mode_counts() -> CheckResult {
    const NAME: &str = "squeezed-mode counts";
    let five = match diagonalize(&fixtures::pump_5mw().covariance) {
        Ok(d) => d,
        Err(e) => return CheckResult::fail(3, NAME, e.to_string()),
    };
    let fifteen = match diagonalize(&fixtures::pump_15mw().covariance) {
        Ok(d) => d,
        Err(e) => return CheckResult::fail(3, NAME, e.to_string()),
    };
    let count_15 = fifteen.count_squeezed_modes(0.0);
    let count_5 = five.count_squeezed_modes(0.0);
    let sixth_marginal = five.marginal_modes().contains(&6);
    let passed = count_15 == 1 && count_5 >= 5 && sixth_marginal;
    CheckResult::from(
        3,
        NAME,
        passed,
        format!(
            "15 mW: {count_15} (want 1); 5 mW: {count_5} (want >=5); sixth mode marginal: {sixth_marginal}"
        ),
    )
}

pub fn criterion_4_minimum_squeezing_levels() -> CheckResult {
    const NAME: &str = "minimum squeezing levels";
    // 10*log10 of the published minimum eigenvalues
    let expected_5 = 10.0 * 0.70382f64.log10();
    let expected_15 = 10.0 * 0.60807f64.log10();
    let five = diagonalize(&fixtures::pump_5mw().covariance).unwrap();
    let fifteen = diagonalize(&fixtures::pump_15mw().covariance).unwrap();
    let level_5 = five.squeezing_db()[0];
    let level_15 = fifteen.squeezing_db()[0];
    let delta_5 = (level_5 - expected_5).abs();
    let delta_15 = (level_15 - expected_15).abs();
    let passed = delta_5 < 0.02 && delta_15 < 0.02;
    CheckResult::from(
        4,
        NAME,
        passed,
        format!(
            "5 mW: {level_5:.4} dB vs {expected_5:.4} (|d|={delta_5:.1e}); \
             15 mW: {level_15:.4} dB vs {expected_15:.4} (|d|={delta_15:.1e}); tol 0.02 dB"
        ),
    )
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> PhotonCovariance {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    PhotonCovariance::new(m).expect("symmetric by construction")
}

pub fn criterion_5_reconstruction_round_trip() -> CheckResult {
    const NAME: &str = "reconstruction round trip";
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c01);
    let mut worst = 0.0f64;
    for trial in 0..100usize {
        let n = 2 + trial % 18; // cycles 2..=19
        let truth = random_symmetric(n, &mut rng);
        let rebuilt = match predict_complete_scan(&truth).and_then(|s| reconstruct_covariance(&s)) {
            Ok(rebuilt) => rebuilt,
            Err(e) => return CheckResult::fail(5, NAME, format!("trial {trial}: {e}")),
        };
        worst = worst.max((rebuilt.matrix() - truth.matrix()).abs().max());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = worst < 1e-9 && elapsed < 10.0;
    CheckResult::from(
        5,
        NAME,
        passed,
        format!("100 matrices (n=2..19): max entry error {worst:.2e} (tol 1e-9), runtime {elapsed:.2}s (budget 10s)"),
    )
}

pub fn criterion_6_solver_oracle_equivalence() -> CheckResult {
    const NAME: &str = "solver/oracle equivalence";
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c02);
    let mut worst = 0.0f64;
    for n in 1..=19usize {
        let truth = random_symmetric(n, &mut rng);
        let scan = match predict_complete_scan(&truth) {
            Ok(s) => s,
            Err(e) => return CheckResult::fail(6, NAME, e.to_string()),
        };
        let solver = match reconstruct_covariance(&scan) {
            Ok(c) => c,
            Err(e) => return CheckResult::fail(6, NAME, format!("solver n={n}: {e}")),
        };
        let oracle = match inclusion_exclusion_reconstruct(&scan) {
            Ok(c) => c,
            Err(e) => return CheckResult::fail(6, NAME, format!("oracle n={n}: {e}")),
        };
        worst = worst.max((solver.matrix() - oracle.matrix()).abs().max());
    }
    CheckResult::from(
        6,
        NAME,
        worst < 1e-10,
        format!("max |least-squares - inclusion-exclusion| = {worst:.2e} over n=1..19 (tol 1e-10)"),
    )
}

pub fn criterion_7_gaussian_invariants() -> CheckResult {
    const NAME: &str = "gaussian-core invariants";
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c03);
    let mut worst_symplectic = 0.0f64;
    for trial in 0..1000usize {
        let n_modes = rng.gen_range(2..=6);
        let n_ops = rng.gen_range(1..=6);
        let mut composite = SymplecticMatrix::identity(n_modes);
        for _ in 0..n_ops {
            let i = rng.gen_range(0..n_modes);
            let mut j = rng.gen_range(0..n_modes - 1);
            if j >= i {
                j += 1;
            }
            let op = match rng.gen_range(0..3) {
                0 => SymplecticMatrix::two_mode_squeezer(rng.gen_range(-0.5..0.5), i, j, n_modes),
                1 => SymplecticMatrix::beam_splitter(
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    i,
                    j,
                    n_modes,
                ),
                _ => SymplecticMatrix::phase_shift(
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    i,
                    n_modes,
                ),
            };
            let op = match op {
                Ok(op) => op,
                Err(e) => return CheckResult::fail(7, NAME, format!("trial {trial}: {e}")),
            };
            composite = match composite.compose(&op) {
                Ok(c) => c,
                Err(e) => return CheckResult::fail(7, NAME, format!("trial {trial}: {e}")),
            };
        }
        worst_symplectic = worst_symplectic.max(composite.symplectic_deviation());
        let vacuum = GaussianState::vacuum(n_modes, vec![0.0; 2 * n_modes]).unwrap();
        let out = match vacuum.apply(&composite) {
            Ok(s) => s,
            Err(e) => return CheckResult::fail(7, NAME, format!("trial {trial}: {e}")),
        };
        if !out.is_physical() {
            return CheckResult::fail(
                7,
                NAME,
                format!("trial {trial}: composite output violates the uncertainty bound"),
            );
        }
    }

    // Raman floor: the affected diagonal never drops below
    // min(original, 2*n_bar + 1)
    let mut raman_ok = true;
    for _ in 0..1000usize {
        let r = rng.gen_range(-0.8..0.8);
        let state = GaussianState::vacuum(2, vec![0.0; 4])
            .unwrap()
            .apply(&SymplecticMatrix::two_mode_squeezer(r, 0, 1, 2).unwrap())
            .unwrap();
        let mode = rng.gen_range(0..2);
        let eta = rng.gen_range(0.0..=1.0);
        let n_bar = rng.gen_range(0.0..3.0);
        let before_x = state.cov()[(2 * mode, 2 * mode)];
        let before_p = state.cov()[(2 * mode + 1, 2 * mode + 1)];
        let out = raman_channel(&state, mode, eta, n_bar).unwrap();
        let floor_x = before_x.min(crate::gaussian::thermal_variance(n_bar)) - 1e-12;
        let floor_p = before_p.min(crate::gaussian::thermal_variance(n_bar)) - 1e-12;
        if out.cov()[(2 * mode, 2 * mode)] < floor_x
            || out.cov()[(2 * mode + 1, 2 * mode + 1)] < floor_p
        {
            raman_ok = false;
            break;
        }
    }

    let passed = worst_symplectic < 1e-10 && raman_ok;
    CheckResult::from(
        7,
        NAME,
        passed,
        format!(
            "1000 compositions: max ||S Omega S^T - Omega||_inf = {worst_symplectic:.2e} (tol 1e-10), \
             physicality preserved; Raman diagonal floor held: {raman_ok}"
        ),
    )
}

pub fn criterion_8_monte_carlo_consistency() -> CheckResult {
    const NAME: &str = "Monte Carlo consistency";
    const RUNS: usize = 500;
    let fixture = fixtures::pump_5mw();
    let n = fixture.covariance.n_bins();
    let shot = ShotNoiseLevels::new(vec![100.0; n]).unwrap();
    let solver = match ScanSolver::complete(n) {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(8, NAME, e.to_string()),
    };
    let base = MeasurementNoiseParams {
        electronic_snr_db: 41.0,
        rng_seed: 777,
        ..Default::default()
    };

    // Welford accumulation per entry
    let mut mean: DMatrix<f64> = DMatrix::zeros(n, n);
    let mut m2: DMatrix<f64> = DMatrix::zeros(n, n);
    for run in 0..RUNS {
        let noise = base.for_run(run as u64);
        let scan = match simulate_window_scan(&fixture.covariance, &shot, &noise) {
            Ok(s) => s,
            Err(e) => return CheckResult::fail(8, NAME, format!("run {run}: {e}")),
        };
        let photon = match solver.solve_scan(&scan) {
            Ok(p) => p,
            Err(e) => return CheckResult::fail(8, NAME, format!("run {run}: {e}")),
        };
        let c = match normalize_covariance(&photon, &shot) {
            Ok(c) => c,
            Err(e) => return CheckResult::fail(8, NAME, format!("run {run}: {e}")),
        };
        let count = (run + 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let x = c.matrix()[(i, j)];
                let delta = x - mean[(i, j)];
                mean[(i, j)] += delta / count;
                m2[(i, j)] += delta * (x - mean[(i, j)]);
            }
        }
    }

    let mut max_z = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let variance = m2[(i, j)] / (RUNS as f64 - 1.0);
            let se = (variance / RUNS as f64).sqrt();
            let deviation = (mean[(i, j)] - fixture.covariance.matrix()[(i, j)]).abs();
            if se > 0.0 {
                max_z = max_z.max(deviation / se);
            } else if deviation > 0.0 {
                max_z = f64::INFINITY;
            }
        }
    }
    CheckResult::from(
        8,
        NAME,
        max_z < 3.0,
        format!("{RUNS} runs at 41 dB: max |mean - fixture| / SE = {max_z:.2} (tol 3)"),
    )
}

const DETERMINISM_CONFIG: &str = "n_bins = 4\nn_steps = 1\n\n[shot]\nlevels = [100.0, 100.0, 100.0, 100.0]\n\n[[kerr_tms]]\ni = 1\nj = 3\nr = 0.25\n\n[[kerr_mix]]\ni = 2\nj = 4\ntheta = 0.4\n\n[measurement]\nsnr_db = 41.0\nseed = 5\n";

pub fn criterion_9_determinism() -> CheckResult {
    const NAME: &str = "determinism";
    let dir = std::env::temp_dir().join(format!("scq-verify-{}", std::process::id()));
    let result = determinism_in(&dir);
    let _ = std::fs::remove_dir_all(&dir);
    match result {
        Ok(detail) => CheckResult::pass(9, NAME, detail),
        Err(detail) => CheckResult::fail(9, NAME, detail),
    }
}

fn determinism_in(dir: &std::path::Path) -> std::result::Result<String, String> {
    use crate::pipeline::{run_analyze, run_simulate};

    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let write = |name: &str, contents: &str| -> std::result::Result<std::path::PathBuf, String> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| e.to_string())?;
        Ok(path)
    };

    // simulate twice from the same config and seed
    let config = write("fiber.toml", DETERMINISM_CONFIG)?;
    let sim_a = run_simulate(&config, Some(7)).map_err(|e| e.to_string())?;
    let sim_b = run_simulate(&config, Some(7)).map_err(|e| e.to_string())?;
    if sim_a != sim_b {
        return Err("simulate outputs differ between consecutive runs".into());
    }

    // analyze the bundled fixture twice
    let cov = write("cov.csv", fixtures::COV_5MW)?;
    let mut shot_csv = String::from("bin,level\n");
    for bin in 1..=19 {
        shot_csv.push_str(&format!("{bin},100\n"));
    }
    let shot = write("shot.csv", &shot_csv)?;
    let report_a = run_analyze(&cov, &shot, false, None).map_err(|e| e.to_string())?;
    let report_b = run_analyze(&cov, &shot, false, None).map_err(|e| e.to_string())?;
    if report_a.to_json() != report_b.to_json() {
        return Err("analyze reports differ between consecutive runs".into());
    }

    // report emission twice from the same in-memory report
    let decomp = diagonalize(&fixtures::pump_15mw().covariance).map_err(|e| e.to_string())?;
    let report = ReportBuilder::new()
        .build(&fixtures::pump_15mw().covariance, &decomp)
        .map_err(|e| e.to_string())?;
    if report.to_json() != report.to_json() || report.to_text() != report.to_text() {
        return Err("report emission differs between consecutive calls".into());
    }

    Ok("simulate, analyze, and report emission byte-identical across consecutive runs".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    // the acceptance test target asserts every criterion; here only cheap
    // plumbing checks
    #[test]
    fn check_results_carry_ids_and_detail() {
        let r = criterion_1_fixture_eigenvalues_5mw();
        assert_eq!(r.id, 1);
        assert!(r.detail.contains("tol"));
    }

    #[test]
    fn enumerate_is_the_scan_order_used_by_monte_carlo() {
        let solver = ScanSolver::complete(3).unwrap();
        assert_eq!(
            solver.windows(),
            crate::window::enumerate_windows(3).as_slice()
        );
    }
}
