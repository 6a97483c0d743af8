//! End-to-end scenarios: the two reflection counterexamples, recovery from
//! three Dirichlet spectra, and the identity suite used by `validate`.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfns::{combined_from, eval_char, scan, truncated_deltas, write_scan_csv, CharName, CombinedKind, EvalPath, Fundamentals};
use crate::config::Settings;
use crate::error::{Error, Result};
use crate::forms::apply_measure_form;
use crate::inverse::{solve, BasisFn, InverseConfig, InverseData, Parametrization};
use crate::model::{linspace, Atom, BoundaryMeasure, CoeffFn, Coefficients, ProblemSpec, TrigTerm, Which};
use crate::ode::{wronskian_scaled, SolutionTrace};
use crate::spectra::{check_condition_s, find_spectrum, ConditionReport, Rect, Spectrum, SpectrumName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Example1,
    Example2,
    ThreeSpectra,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Example1 => "example1",
            Scenario::Example2 => "example2",
            Scenario::ThreeSpectra => "three_spectra",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(Scenario::Example1),
            "example2" => Ok(Scenario::Example2),
            "three_spectra" => Ok(Scenario::ThreeSpectra),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    /// File names relative to the output directory.
    pub artifacts: Vec<PathBuf>,
}

impl ScenarioReport {
    fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            checks: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, value: f64) {
        log::info!("{}: {name} = {value:e} ({})", self.scenario, if pass { "pass" } else { "FAIL" });
        self.checks.push(Check {
            name: name.to_string(),
            pass,
            value,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn artifact<F>(&mut self, dir: Option<&Path>, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(std::fs::File) -> Result<()>,
    {
        if let Some(dir) = dir {
            write(std::fs::File::create(dir.join(name))?)?;
            self.artifacts.push(PathBuf::from(name));
        }
        Ok(())
    }

    /// Writes `report.json` into `dir`.
    pub fn write_json(&mut self, dir: &Path) -> Result<()> {
        self.artifacts.push(PathBuf::from("report.json"));
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("report.json"), text + "\n")?;
        Ok(())
    }
}

/// Rows `Re lambda in linspace(-9, 9, 10)` by `Im lambda` in five levels
/// that avoid the real axis (where the spectra live).
pub fn scenario_grid() -> Vec<Complex64> {
    let ims = [-2.2, -1.1, 0.55, 1.65, 2.75];
    ims.iter()
        .flat_map(|&im| linspace(-9.0, 9.0, 10).into_iter().map(move |re| Complex64::new(re, im)))
        .collect()
}

fn cond(scale: f64, value: Complex64) -> f64 {
    if value.norm() == 0.0 {
        f64::INFINITY
    } else {
        (scale / value.norm()).max(1.0)
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        0.0
    } else {
        d / a.norm().max(b.norm())
    }
}

/// Largest relative difference between two scans of the same names; poles
/// must coincide.
fn scan_gap(a: &[crate::charfns::ScanRow], b: &[crate::charfns::ScanRow], name: CharName) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, _)| x.name == name)
        .map(|(x, y)| match (x.value, y.value) {
            (Some(u), Some(v)) => rel(u, v),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

fn sample_max(n: usize, t_end: f64, f: impl Fn(f64) -> f64) -> f64 {
    linspace(0.0, t_end, n).into_iter().map(f).fold(0.0, f64::max)
}

fn asymmetry(c: &Coefficients, which: Which) -> Result<f64> {
    let t = c.t_end;
    let mut worst = 0.0f64;
    for x in linspace(0.0, t, 401) {
        worst = worst.max((c.evaluate(which, x)? - c.evaluate(which, t - x)?).norm());
    }
    Ok(worst)
}

fn write_spectra(report: &mut ScenarioReport, dir: Option<&Path>, spectra: &[&Spectrum]) -> Result<()> {
    for s in spectra {
        let name = format!("spectrum_{}.csv", s.name.map_or("unnamed", |n| n.as_str()));
        report.artifact(dir, &name, |f| s.write_csv(f))?;
    }
    Ok(())
}

const REFLECTION_TOL: f64 = 1e-6;
const ASYMMETRY_MIN: f64 = 0.01;
const DISJOINT_GAP: f64 = 1e-6;

/// The default coefficients of the first counterexample.
pub fn example1_default() -> Coefficients {
    Coefficients::new(PI, CoeffFn::sine(0.2, 4.0), CoeffFn::sine(1.0, 4.0)).expect("valid coefficients")
}

/// `T = pi`, `U_1 = y(0)`, `U_2 = y(pi/2)` with `pi/2`-periodic, reflection
/// asymmetric coefficients: the reflected problem shares `M` and `omega`,
/// so the data cannot separate the two.
pub fn run_example1(coeffs: &Coefficients, settings: &Settings, out: Option<&Path>) -> Result<ScenarioReport> {
    if (coeffs.t_end - PI).abs() > 1e-12 {
        return Err(Error::Precondition("example 1 needs T = pi".into()));
    }
    for which in [Which::P, Which::Q] {
        let mut worst = 0.0f64;
        for x in linspace(0.0, PI / 2.0, 201) {
            worst = worst.max((coeffs.evaluate(which, x)? - coeffs.evaluate(which, x + PI / 2.0)?).norm());
        }
        if worst > 1e-9 {
            return Err(Error::Precondition(format!(
                "{which:?} is not pi/2-periodic (difference {worst:e})"
            )));
        }
        let a = asymmetry(coeffs, which)?;
        if a <= ASYMMETRY_MIN {
            return Err(Error::Precondition(format!(
                "{which:?} is reflection-symmetric (max |f(x) - f(pi - x)| = {a:e})"
            )));
        }
    }
    let problem = ProblemSpec::with_dirichlet(coeffs.clone(), PI / 2.0)?;
    let mirror = problem.with_coeffs(coeffs.reflect())?;
    let grid = scenario_grid();
    let names = [CharName::WeylM, CharName::Omega, CharName::Delta1, CharName::Delta2];
    let ode = &settings.ode;
    let (a, b) = rayon::join(|| scan(&problem, &names, None, &grid, ode), || scan(&mirror, &names, None, &grid, ode));
    let (a, b) = (a?, b?);
    let mut report = ScenarioReport::new(Scenario::Example1);
    for (name, label) in [
        (CharName::WeylM, "M = M~"),
        (CharName::Omega, "omega = omega~"),
        (CharName::Delta1, "Delta1 = Delta1~"),
        (CharName::Delta2, "Delta2 = Delta2~"),
    ] {
        let g = scan_gap(&a, &b, name);
        report.check(label, g <= REFLECTION_TOL, g);
    }
    let omega: Vec<_> = a.iter().filter(|r| r.name == CharName::Omega).collect();
    let delta2: Vec<_> = a.iter().filter(|r| r.name == CharName::Delta2).collect();
    let same = omega
        .iter()
        .zip(&delta2)
        .map(|(x, y)| match (x.value, y.value) {
            (Some(u), Some(v)) => rel(u, v),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    report.check("omega = Delta2", same <= REFLECTION_TOL, same);

    let rect = Rect::new(0.5, 6.5, -1.5, 1.5)?;
    let (xi, l1) = rayon::join(
        || find_spectrum(&problem, SpectrumName::Xi, rect, &settings.spectra, ode),
        || find_spectrum(&problem, SpectrumName::Lambda1, rect, &settings.spectra, ode),
    );
    let (xi, l1) = (xi?, l1?);
    let cond = check_condition_s(&xi, &l1, DISJOINT_GAP);
    let dist = match cond {
        ConditionReport::Fails { left, right } => (left - right).norm(),
        ConditionReport::Holds { min_distance } | ConditionReport::Undecided { min_distance } => min_distance,
    };
    report.check("condition S fails", cond.fails(), dist);
    let dp = sample_max(401, PI, |x| (coeffs.p.value(x) - coeffs.p.value(PI - x)).norm());
    report.check("p != p~", dp > ASYMMETRY_MIN, dp);

    report.artifact(out, "scan.csv", |f| write_scan_csv(&a, f))?;
    report.artifact(out, "scan_reflected.csv", |f| write_scan_csv(&b, f))?;
    write_spectra(&mut report, out, &[&xi, &l1])?;
    if let Some(dir) = out {
        report.write_json(dir)?;
    }
    Ok(report)
}

/// A piecewise-linear bump on `[lo, hi]` peaking at `lo + skew (hi - lo)`.
pub fn skewed_bump(t_end: f64, lo: f64, hi: f64, skew: f64, height: f64) -> CoeffFn {
    let peak = lo + skew * (hi - lo);
    CoeffFn::piecewise_linear(&[(0.0, 0.0), (lo, 0.0), (peak, height), (hi, 0.0), (t_end, 0.0)])
}

/// The default coefficients of the second counterexample: `p = 0` and a
/// left-skewed bump `q` on `[pi/3, 2 pi/3]`.
pub fn example2_default() -> Coefficients {
    Coefficients::new(PI, CoeffFn::zero(), skewed_bump(PI, PI / 3.0, 2.0 * PI / 3.0, 0.25, 1.0)).expect("valid coefficients")
}

/// `T = pi`, `U_1 = y(0)`, `U_2 = y(pi - alpha)` with coefficients vanishing
/// near both ends: `M` is shared with the reflected problem and condition S
/// holds, but `omega` differs.
pub fn run_example2(
    alpha: f64,
    alpha0: f64,
    coeffs: &Coefficients,
    settings: &Settings,
    out: Option<&Path>,
) -> Result<ScenarioReport> {
    if !(alpha > 0.0 && alpha < alpha0 && alpha0 < PI / 2.0) {
        return Err(Error::Config(format!(
            "need 0 < alpha < alpha0 < pi/2, got alpha = {alpha}, alpha0 = {alpha0}"
        )));
    }
    if (coeffs.t_end - PI).abs() > 1e-12 {
        return Err(Error::Precondition("example 2 needs T = pi".into()));
    }
    for x in linspace(0.0, alpha0, 101).into_iter().chain(linspace(PI - alpha0, PI, 101)) {
        for which in [Which::P, Which::Q] {
            if coeffs.evaluate(which, x)?.norm() > 1e-12 {
                return Err(Error::Precondition(format!(
                    "{which:?} must vanish on [0, alpha0] and [pi - alpha0, pi] (nonzero at x = {x})"
                )));
            }
        }
    }
    let asym = asymmetry(coeffs, Which::P)?.max(asymmetry(coeffs, Which::Q)?);
    if asym <= ASYMMETRY_MIN {
        return Err(Error::Precondition(format!("coefficients are reflection-symmetric ({asym:e})")));
    }
    let problem = ProblemSpec::with_dirichlet(coeffs.clone(), PI - alpha)?;
    let mirror = problem.with_coeffs(coeffs.reflect())?;
    let so = &settings.spectra;
    let ode = &settings.ode;
    let mut report = ScenarioReport::new(Scenario::Example2);

    let base = PI / alpha;
    let window = Rect::new(base - 0.1, 3.0 * base + 0.1, -1.0, 1.0)?;
    let l2 = find_spectrum(&problem, SpectrumName::Lambda2, window, so, ode)?;
    let want: Vec<f64> = (1..=3).map(|n| n as f64 * base).collect();
    let got = l2.values();
    let err = if got.len() == want.len() {
        got.iter().zip(&want).map(|(g, w)| (g - w).norm()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    report.check("Lambda2 = pi n / alpha", err <= REFLECTION_TOL, err);

    let rect = Rect::new(0.5, 3.0 * base + 0.5, -1.5, 1.5)?;
    let (xi, l1) = rayon::join(
        || find_spectrum(&problem, SpectrumName::Xi, rect, so, ode),
        || find_spectrum(&problem, SpectrumName::Lambda1, rect, so, ode),
    );
    let (xi, l1) = (xi?, l1?);
    let cond = check_condition_s(&xi, &l1, DISJOINT_GAP);
    let dist = match cond {
        ConditionReport::Fails { left, right } => (left - right).norm(),
        ConditionReport::Holds { min_distance } | ConditionReport::Undecided { min_distance } => min_distance,
    };
    report.check("condition S holds", cond.holds(), dist);

    let grid = scenario_grid();
    let names = [CharName::WeylM, CharName::Delta1, CharName::Omega];
    let (a, b) = rayon::join(|| scan(&problem, &names, None, &grid, ode), || scan(&mirror, &names, None, &grid, ode));
    let (a, b) = (a?, b?);
    let gm = scan_gap(&a, &b, CharName::WeylM);
    report.check("M = M~", gm <= REFLECTION_TOL, gm);
    let gd = scan_gap(&a, &b, CharName::Delta1);
    report.check("Delta1 = Delta1~", gd <= REFLECTION_TOL, gd);
    let go = scan_gap(&a, &b, CharName::Omega);
    report.check("omega != omega~", go > 1e3 * REFLECTION_TOL, go);
    let dp = sample_max(401, PI, |x| {
        (coeffs.p.value(x) - coeffs.p.value(PI - x)).norm().max((coeffs.q.value(x) - coeffs.q.value(PI - x)).norm())
    });
    report.check("(p, q) != (p~, q~)", dp > ASYMMETRY_MIN, dp);

    report.artifact(out, "scan.csv", |f| write_scan_csv(&a, f))?;
    report.artifact(out, "scan_reflected.csv", |f| write_scan_csv(&b, f))?;
    write_spectra(&mut report, out, &[&l2, &xi, &l1])?;
    if let Some(dir) = out {
        report.write_json(dir)?;
    }
    Ok(report)
}

/// A parametrized truth for the three-spectra scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeSpectraSetup {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub a: f64,
    pub parametrization: Parametrization,
    pub fixed_integral_p: Option<Complex64>,
    pub truth: Vec<f64>,
    pub start: Vec<f64>,
    /// Window in which the spectra are collected.
    pub rect: Rect,
}

impl ThreeSpectraSetup {
    /// `p = 0.3 + 0.25 cos x` (mean fixed), `q = 0.4` on `(0, pi)`.
    pub fn standard(a: f64) -> Self {
        Self {
            t_end: PI,
            a,
            parametrization: Parametrization {
                p: vec![BasisFn::Cos { freq: 1.0 }],
                q: vec![BasisFn::Constant],
            },
            fixed_integral_p: Some(Complex64::new(0.3 * PI, 0.0)),
            truth: vec![0.25, 0.4],
            start: vec![0.1, 0.25],
            rect: Rect {
                re_lo: 0.2,
                re_hi: 10.5,
                im_lo: -3.0,
                im_hi: 3.0,
            },
        }
    }
}

pub const RECOVERY_TOL: f64 = 1e-4;

/// Dirichlet spectra on `(0, a)`, `(0, T)`, `(a, T)` of the truth, then
/// recovery of the parameters from them.
pub fn run_three_spectra(setup: &ThreeSpectraSetup, settings: &Settings, out: Option<&Path>) -> Result<ScenarioReport> {
    if !(setup.a > 0.0 && setup.a < setup.t_end) {
        return Err(Error::Config(format!("split point a = {} must lie in (0, T)", setup.a)));
    }
    if setup.truth.len() != setup.parametrization.dim() || setup.start.len() != setup.truth.len() {
        return Err(Error::Config("truth and start must match the parametrization".into()));
    }
    let coeffs = setup
        .parametrization
        .coefficients(setup.t_end, setup.fixed_integral_p, &setup.truth)?;
    let problem = ProblemSpec::with_dirichlet(coeffs, setup.a)?;
    let names = [SpectrumName::L0p, SpectrumName::L1p, SpectrumName::L2p];
    let spectra: Vec<Spectrum> = names
        .par_iter()
        .map(|&n| find_spectrum(&problem, n, setup.rect, &settings.spectra, &settings.ode))
        .collect::<Result<_>>()?;
    let mut report = ScenarioReport::new(Scenario::ThreeSpectra);
    let cond = check_condition_s(&spectra[0], &spectra[1], DISJOINT_GAP);
    match cond {
        ConditionReport::Holds { min_distance } => report.check("condition S' holds", true, min_distance),
        ConditionReport::Fails { left, right } => {
            return Err(Error::ConditionFailed {
                condition: format!("S' (L'0 and L'1 share an eigenvalue: {left} ~ {right})"),
                lambda: left,
            });
        }
        ConditionReport::Undecided { min_distance } => {
            return Err(Error::ConditionFailed {
                condition: format!("S' (undecided, closest pair at distance {min_distance:e})"),
                lambda: Complex64::new(f64::NAN, f64::NAN),
            });
        }
    }
    let config = InverseConfig {
        t_end: setup.t_end,
        parametrization: setup.parametrization.clone(),
        fixed_integral_p: setup.fixed_integral_p,
        measures: None,
        data: InverseData::ThreeSpectra {
            a: setup.a,
            l0: spectra[0].values(),
            l1: spectra[1].values(),
            l2: spectra[2].values(),
        },
        start: setup.start.clone(),
        solver: settings.solver,
        min_gap: DISJOINT_GAP,
        condition_box: Some(setup.rect),
    };
    let result = solve(&config, &settings.ode, &settings.spectra)?;
    let err = result
        .params
        .iter()
        .zip(&setup.truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report.check("converged", result.converged, result.final_residual);
    report.check("recovery error", err < RECOVERY_TOL, err);

    write_spectra(&mut report, out, &spectra.iter().collect::<Vec<_>>())?;
    report.artifact(out, "inverse_log.csv", |f| result.write_log_csv(f))?;
    if let Some(dir) = out {
        report.write_json(dir)?;
    }
    Ok(report)
}

/// The identities checked by the suite, in report order.
pub const IDENTITIES: [&str; 9] = [
    "paths omega",
    "paths Delta1",
    "paths Delta2",
    "paths Delta11",
    "W(theta, phi) = omega",
    "W(psi, phi) = Delta1",
    "W(Phi, phi) = 1",
    "M = U2(Phi)",
    "truncation",
];

pub const IDENTITY_TOL: f64 = 1e-7;

/// Condition number (term magnitude over result) above which a sample is
/// reported but not held to the tolerance in the conditioned verdict.
pub const ILL_CONDITIONED: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityStat {
    pub identity: String,
    pub max_rel_error: f64,
    pub worst_lambda: Complex64,
    pub samples: usize,
    /// Samples at a pole of `M`, where the identity is undefined.
    pub skipped: usize,
    /// Samples whose terms cancel by more than [`ILL_CONDITIONED`].
    pub ill_conditioned: usize,
    /// Largest error over the remaining samples.
    pub max_rel_error_conditioned: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub problems: usize,
    pub lambdas: usize,
    pub tol: f64,
    pub stats: Vec<IdentityStat>,
}

impl IdentityReport {
    /// Every sample within tolerance.
    pub fn passed(&self) -> bool {
        self.stats.iter().all(|s| s.pass)
    }

    /// Every well-conditioned sample within tolerance.
    pub fn passed_conditioned(&self) -> bool {
        self.stats.iter().all(|s| s.max_rel_error_conditioned <= self.tol)
    }

    pub fn stat(&self, identity: &str) -> Option<&IdentityStat> {
        self.stats.iter().find(|s| s.identity == identity)
    }
}

/// A 20 by 10 lattice on `[-10, 10] x [-5, 5]`, offset from the real axis and
/// from the integers.
pub fn identity_grid() -> Vec<Complex64> {
    let res = linspace(-9.7, 9.8, 20);
    let ims = linspace(-4.9, 4.6, 10);
    ims.iter()
        .flat_map(|&im| res.iter().map(move |&re| Complex64::new(re, im)))
        .collect()
}

fn unit<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-1.0..=1.0)
}

fn random_coeff<R: Rng>(rng: &mut R, t_end: f64, trig: bool) -> CoeffFn {
    if trig {
        let constant = Complex64::new(unit(rng), 0.0);
        let terms = (0..2)
            .map(|_| TrigTerm {
                freq: rng.gen_range(1..=3) as f64,
                cos: Complex64::new(unit(rng), 0.0),
                sin: Complex64::new(unit(rng), 0.0),
            })
            .collect();
        CoeffFn::Trig { constant, terms }
    } else {
        let knots: Vec<(f64, f64)> = linspace(0.0, t_end, 6).into_iter().map(|x| (x, unit(rng))).collect();
        CoeffFn::piecewise_linear(&knots)
    }
}

/// A random problem on `(0, T)`: trig or piecewise-linear coefficients with
/// entries in `[-1, 1]`, `U_1` with an atom at 0, a smooth density and a
/// second atom, `U_2` with an atom and a density.
pub fn random_problem<R: Rng>(rng: &mut R, t_end: f64, trig: bool) -> Result<ProblemSpec> {
    let coeffs = Coefficients::new(t_end, random_coeff(rng, t_end, trig), random_coeff(rng, t_end, trig))?;
    let grid = 64;
    let h1 = Complex64::from_polar(rng.gen_range(0.5..=1.0), rng.gen_range(0.0..2.0 * PI));
    let w2 = Complex64::from_polar(rng.gen_range(0.5..=1.0), rng.gen_range(0.0..2.0 * PI));
    let t1 = rng.gen_range(0.5..0.95) * t_end;
    let t2 = rng.gen_range(0.5..0.95) * t_end;
    let mut cplx = |scale: f64| Complex64::new(scale * unit(rng), scale * unit(rng));
    let (c0, c1, w1) = (cplx(0.5), cplx(0.5), cplx(1.0));
    let (d0, d1) = (cplx(0.5), cplx(0.5));
    let node = |i: usize| i as f64 * t_end / grid as f64;
    let u1 = BoundaryMeasure::new(
        t_end,
        vec![Atom { t: 0.0, weight: h1 }, Atom { t: t1, weight: w1 }],
        (0..=grid).map(|i| c0 + c1 * node(i).cos()).collect(),
    )?;
    let u2 = BoundaryMeasure::new(
        t_end,
        vec![Atom { t: t2, weight: w2 }],
        (0..=grid).map(|i| d0 + d1 * node(i).sin()).collect(),
    )?;
    ProblemSpec::new(coeffs, u1, u2, true)
}

/// `count` random problems from `seed`, alternating trig and piecewise-linear.
pub fn random_problems(seed: u64, count: usize, t_end: f64) -> Result<Vec<ProblemSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| random_problem(&mut rng, t_end, i % 2 == 0)).collect()
}

/// `(identity, Some((relative error, condition number)))`, `None` at a pole.
type Sample = Vec<(usize, Option<(f64, f64)>)>;

fn identity_sample(problem: &ProblemSpec, lambda: Complex64, xs: &[f64], settings: &Settings) -> Result<Sample> {
    let ode = &settings.ode;
    let f = Fundamentals::new(problem, lambda, ode)?;
    let t = f.table(problem)?;
    let mut out: Sample = Vec::new();
    let names = [CharName::Omega, CharName::Delta1, CharName::Delta2, CharName::Delta11];
    let mut via_z = [Complex64::new(0.0, 0.0); 4];
    for (k, name) in names.iter().enumerate() {
        let (x, sx) = t.entire(*name, EvalPath::DetOfX)?;
        let (z, sz) = t.entire(*name, EvalPath::ViaZ)?;
        via_z[k] = z;
        out.push((k, Some((rel(x, z), cond(sx.max(sz), z)))));
    }
    let (omega, delta1) = (via_z[0], via_z[1]);
    let phi = combined_from(problem, &f, &t, CombinedKind::Phi)?.trace;
    let theta = combined_from(problem, &f, &t, CombinedKind::Theta)?.trace;
    let psi = combined_from(problem, &f, &t, CombinedKind::Psi)?.trace;
    let one = Complex64::new(1.0, 0.0);
    let wr = |a: &SolutionTrace, b: &SolutionTrace, x: f64, want: Complex64| -> Result<(f64, f64)> {
        let (w, s) = wronskian_scaled(a, b, x)?;
        Ok((rel(w, want), cond(s, want)))
    };
    for &x in xs {
        out.push((4, Some(wr(&theta, &phi, x, omega)?)));
        out.push((5, Some(wr(&psi, &phi, x, delta1)?)));
    }
    match combined_from(problem, &f, &t, CombinedKind::BigPhi) {
        Ok(big) => {
            for &x in xs {
                out.push((6, Some(wr(&big.trace, &phi, x, one)?)));
            }
            let m = eval_char(problem, CharName::WeylM, lambda, EvalPath::Ratio, ode)?.value;
            out.push((7, Some((rel(m, apply_measure_form(&problem.u2, &big.trace)?), 1.0))));
        }
        Err(Error::Pole { .. }) => {
            out.push((6, None));
            out.push((7, None));
        }
        Err(e) => return Err(e),
    }
    let te = problem.t_end();
    for a in [te, te / 2.0, te / 4.0] {
        let (half, _) = truncated_deltas(problem, a / 2.0, lambda, ode)?;
        let (full, _) = truncated_deltas(problem, a, lambda, ode)?;
        let window = apply_measure_form(&problem.u1.restrict(a / 2.0, a)?, &f.z2)?;
        let d = ((half - full) - window).norm();
        let scale = half.norm().max(full.norm()).max(window.norm());
        out.push((8, Some((if d == 0.0 { 0.0 } else { d / scale }, 1.0))));
    }
    Ok(out)
}

/// Every identity on every `(problem, lambda)` pair. Wronskians are sampled
/// at five points per pair drawn from `seed`.
pub fn identity_suite(
    problems: &[ProblemSpec],
    lambdas: &[Complex64],
    seed: u64,
    settings: &Settings,
) -> Result<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut jobs = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        for &l in lambdas {
            let te = p.t_end();
            let xs: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..=te)).collect();
            jobs.push((i, l, xs));
        }
    }
    let samples: Vec<(Complex64, Sample)> = jobs
        .par_iter()
        .map(|(i, l, xs)| Ok((*l, identity_sample(&problems[*i], *l, xs, settings)?)))
        .collect::<Result<_>>()?;
    let mut stats: Vec<IdentityStat> = IDENTITIES
        .iter()
        .map(|name| IdentityStat {
            identity: name.to_string(),
            max_rel_error: 0.0,
            worst_lambda: Complex64::new(0.0, 0.0),
            samples: 0,
            skipped: 0,
            ill_conditioned: 0,
            max_rel_error_conditioned: 0.0,
            pass: true,
        })
        .collect();
    for (l, sample) in &samples {
        for &(k, v) in sample {
            let s = &mut stats[k];
            match v {
                None => s.skipped += 1,
                Some((v, c)) => {
                    s.samples += 1;
                    if !(v <= s.max_rel_error) {
                        s.max_rel_error = v;
                        s.worst_lambda = *l;
                    }
                    if c > ILL_CONDITIONED {
                        s.ill_conditioned += 1;
                    } else if !(v <= s.max_rel_error_conditioned) {
                        s.max_rel_error_conditioned = v;
                    }
                }
            }
        }
    }
    for s in &mut stats {
        s.pass = s.max_rel_error <= IDENTITY_TOL;
    }
    Ok(IdentityReport {
        seed,
        problems: problems.len(),
        lambdas: lambdas.len(),
        tol: IDENTITY_TOL,
        stats,
    })
}
