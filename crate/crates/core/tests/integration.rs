use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::{Command, Output};

use nonlocal_pencil::charfns::{scan, CharName};
use nonlocal_pencil::config::{Settings, SolverOptions};
use nonlocal_pencil::experiments::scenario_grid;
use nonlocal_pencil::inverse::{solve, BasisFn, FormsSpec, InverseConfig, InverseData, Parametrization, WeylSample};
use nonlocal_pencil::model::{BoundaryMeasure, ProblemSpec};
use nonlocal_pencil::spectra::{find_spectrum, Rect, SpectrumName};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nlpencil(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlpencil"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cli_scan_writes_one_row_per_name_and_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpencil(dir.path(), &["scan", "--fn", "omega,delta1", "--re", "0.5", "1.5", "3", "--im", "0", "0", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("scan.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
}

#[test]
fn cli_usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nlpencil(dir.path(), &["spectrum", "--fn", "nope"]).status.code(), Some(2));
    let out = nlpencil(dir.path(), &["scenario", "example2", "--alpha", "1.2", "--alpha0", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn cli_example2_reports_dirichlet_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpencil(dir.path(), &["scenario", "example2", "--alpha", "0.7853981634"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    let checks = report["checks"].as_array().unwrap();
    let l2 = checks.iter().find(|c| c["name"] == "Lambda2 = pi n / alpha").unwrap();
    assert_eq!(l2["pass"], true);
    assert!(l2["value"].as_f64().unwrap() < 1e-6);
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn cli_inverse_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = Settings::default();
    let truth = ProblemSpec::with_dirichlet(
        Parametrization { p: vec![BasisFn::Constant], q: vec![] }.coefficients(PI, None, &[0.4]).unwrap(),
        FRAC_PI_2,
    )
    .unwrap();
    let window = Rect::new(0.2, 6.5, -2.0, 2.0).unwrap();
    let l1 = find_spectrum(&truth, SpectrumName::Lambda1, window, &s.spectra, &s.ode).unwrap().values();
    let l11 = find_spectrum(&truth, SpectrumName::Lambda11, window, &s.spectra, &s.ode).unwrap().values();
    let config = InverseConfig {
        t_end: PI,
        parametrization: Parametrization { p: vec![BasisFn::Constant], q: vec![] },
        fixed_integral_p: None,
        measures: Some(FormsSpec { u1: truth.u1.clone(), u2: truth.u2.clone() }),
        data: InverseData::TwoSpectra { lambda1: l1, lambda11: l11 },
        start: vec![0.3],
        solver: SolverOptions::default(),
        min_gap: 1e-6,
        condition_box: Some(window),
    };
    let path = dir.path().join("run.json");
    std::fs::write(&path, config.to_json().unwrap()).unwrap();
    let out = nlpencil(dir.path(), &["inverse", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result = json(&dir.path().join("inverse_result.json"));
    assert_eq!(result["converged"], true);
    assert!((result["params"][0].as_f64().unwrap() - 0.4).abs() < 1e-6);
    let log = std::fs::read_to_string(dir.path().join("inverse_log.csv")).unwrap();
    assert!(log.starts_with("iter,damping,residual_norm,param0"));
}

fn weyl_samples(problem: &ProblemSpec, s: &Settings) -> Vec<WeylSample> {
    let grid = scenario_grid();
    let rows = scan(problem, &[CharName::WeylM, CharName::Omega], None, &grid, &s.ode).unwrap();
    let (m, omega) = rows.split_at(grid.len());
    grid.iter()
        .zip(m.iter().zip(omega))
        .filter_map(|(&lambda, (m, o))| Some(WeylSample { lambda, m: m.value?, omega: o.value? }))
        .collect()
}

#[test]
fn reflected_coefficients_fit_the_same_weyl_data() {
    let s = Settings::default();
    let par = Parametrization { p: vec![BasisFn::Sin { freq: 4.0 }], q: vec![BasisFn::Sin { freq: 4.0 }] };
    let fixed = Some(Complex64::new(0.0, 0.0));
    let truth = [0.2, 1.0];
    let problem = ProblemSpec::with_dirichlet(par.coefficients(PI, fixed, &truth).unwrap(), FRAC_PI_2).unwrap();
    let config = InverseConfig {
        t_end: PI,
        parametrization: par,
        fixed_integral_p: fixed,
        measures: Some(FormsSpec { u1: problem.u1.clone(), u2: problem.u2.clone() }),
        data: InverseData::WeylAndOmega { samples: weyl_samples(&problem, &s) },
        start: truth.to_vec(),
        solver: SolverOptions::default(),
        min_gap: 1e-6,
        condition_box: Some(Rect::new(0.5, 6.5, -1.5, 1.5).unwrap()),
    };
    let at_truth = solve(&config, &s.ode, &s.spectra).unwrap();
    let mut mirrored = config.clone();
    mirrored.start = vec![-0.2, -1.0];
    let at_mirror = solve(&mirrored, &s.ode, &s.spectra).unwrap();
    let tol = config.solver.tol;
    assert!(at_truth.converged && at_truth.final_residual < tol);
    assert!(at_mirror.converged && at_mirror.final_residual < tol, "{}", at_mirror.final_residual);
    assert!((at_mirror.params[0] + 0.2).abs() < 1e-6 && (at_mirror.params[1] + 1.0).abs() < 1e-6);
    assert!(at_truth.condition_s_report.unwrap().fails());
}

#[test]
fn two_spectra_recover_random_truths() {
    let s = Settings::default();
    let par = Parametrization { p: vec![BasisFn::Cos { freq: 1.0 }], q: vec![BasisFn::Constant] };
    let fixed = Some(Complex64::new(0.2 * PI, 0.0));
    let u1 = BoundaryMeasure::new(PI, vec![(0.0, 1.0, 0.0).into(), (1.0, 0.3, 0.0).into()], vec![]).unwrap();
    let u2 = BoundaryMeasure::dirac(PI, 2.0).unwrap();
    let window = Rect::new(0.2, 8.5, -3.0, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2 {
        let truth = [rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15)];
        let coeffs = par.coefficients(PI, fixed, &truth).unwrap();
        let problem = ProblemSpec::new(coeffs, u1.clone(), u2.clone(), true).unwrap();
        let l1 = find_spectrum(&problem, SpectrumName::Lambda1, window, &s.spectra, &s.ode).unwrap().values();
        let l11 = find_spectrum(&problem, SpectrumName::Lambda11, window, &s.spectra, &s.ode).unwrap().values();
        let config = InverseConfig {
            t_end: PI,
            parametrization: par.clone(),
            fixed_integral_p: fixed,
            measures: Some(FormsSpec { u1: u1.clone(), u2: u2.clone() }),
            data: InverseData::TwoSpectra { lambda1: l1, lambda11: l11 },
            start: vec![0.0, 0.0],
            solver: SolverOptions::default(),
            min_gap: 1e-6,
            condition_box: Some(window),
        };
        let r = solve(&config, &s.ode, &s.spectra).unwrap();
        let err = r.params.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(r.converged && err < 1e-3, "truth {truth:?} got {:?}", r.params);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixed_integral_holds_for_any_parameters(
        a in -2.0f64..2.0, b in -2.0f64..2.0, q in -2.0f64..2.0, mean in -1.0f64..1.0, t in 0.5f64..5.0,
    ) {
        let par = Parametrization {
            p: vec![BasisFn::Cos { freq: 2.0 * PI / t }, BasisFn::Sin { freq: 4.0 * PI / t }],
            q: vec![BasisFn::Constant],
        };
        let fixed = Complex64::new(mean, 0.0);
        let coeffs = par.coefficients(t, Some(fixed), &[a, b, q]).unwrap();
        let got = coeffs.integral_p(t).unwrap();
        prop_assert!((got - fixed).norm() < 1e-10 * (1.0 + a.abs() + b.abs()));
    }
}
