//! Characteristic functions, the Weyl-type function and the combined
//! solutions built from the fundamental systems.
//!
//! Determinants are available in two algebraically equal forms: from the
//! initial-value system `X_k` at `x = 0`, and from the terminal system `Z_k`
//! at `x = T`:
//!
//! ```text
//! omega  = U1(X1) U2(X2) - U1(X2) U2(X1) = U1(Z1) U2(Z2) - U1(Z2) U2(Z1)
//! Delta_j = Uj(X1) V1(X2) - Uj(X2) V1(X1) = -Uj(Z2)
//! Delta11 = U1(X1) V2(X2) - U1(X2) V2(X1) = U1(Z1)
//! M = Delta2 / Delta1,  N = Delta1 / Delta11
//! ```

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{OdeOptions, CONDITION_TOL, POLE_FLOOR};
use crate::error::{Error, Result};
use crate::forms::{apply_measure_form, apply_point_form};
use crate::model::{BoundaryMeasure, ProblemSpec};
use crate::ode::{integrate_many, Endpoint, SolutionTrace};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharName {
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "delta1")]
    Delta1,
    #[serde(rename = "delta2")]
    Delta2,
    #[serde(rename = "delta11")]
    Delta11,
    #[serde(rename = "weylM")]
    WeylM,
    #[serde(rename = "bigN")]
    BigN,
}

impl CharName {
    pub const ALL: [CharName; 6] = [
        CharName::Omega,
        CharName::Delta1,
        CharName::Delta2,
        CharName::Delta11,
        CharName::WeylM,
        CharName::BigN,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CharName::Omega => "omega",
            CharName::Delta1 => "delta1",
            CharName::Delta2 => "delta2",
            CharName::Delta11 => "delta11",
            CharName::WeylM => "weylM",
            CharName::BigN => "bigN",
        }
    }

    /// Entire functions (as opposed to the meromorphic ratios).
    pub fn is_entire(self) -> bool {
        !matches!(self, CharName::WeylM | CharName::BigN)
    }

    pub fn default_path(self) -> EvalPath {
        if self.is_entire() {
            EvalPath::ViaZ
        } else {
            EvalPath::Ratio
        }
    }
}

impl fmt::Display for CharName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CharName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CharName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown characteristic function '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvalPath {
    #[serde(rename = "det_of_X")]
    DetOfX,
    #[serde(rename = "via_Z")]
    ViaZ,
    #[serde(rename = "ratio")]
    Ratio,
}

impl EvalPath {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalPath::DetOfX => "det_of_X",
            EvalPath::ViaZ => "via_Z",
            EvalPath::Ratio => "ratio",
        }
    }
}

impl fmt::Display for EvalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [EvalPath::DetOfX, EvalPath::ViaZ, EvalPath::Ratio]
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown evaluation path '{s}'")))
    }
}

/// One characteristic value. `scale` is the magnitude of the terms the value
/// was formed from (`|a d| + |b c|` for a determinant), which bounds its
/// absolute rounding error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharEvaluation {
    pub lambda: Complex64,
    pub name: CharName,
    pub value: Complex64,
    pub path: EvalPath,
    pub scale: f64,
}

fn det(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, f64) {
    let (p, q) = (a * d, b * c);
    (p - q, p.norm() + q.norm())
}

fn ratio(name: CharName, lambda: Complex64, num: Complex64, den: Complex64) -> Result<Complex64> {
    if den.norm() < POLE_FLOOR * (1.0 + num.norm()) {
        return Err(Error::Pole {
            name: name.to_string(),
            lambda,
        });
    }
    Ok(num / den)
}

/// The fundamental systems `X_1, X_2` (from `x = 0`) and `Z_1, Z_2` (from `x = T`).
#[derive(Clone, Debug)]
pub struct Fundamentals {
    pub lambda: Complex64,
    pub x1: SolutionTrace,
    pub x2: SolutionTrace,
    pub z1: SolutionTrace,
    pub z2: SolutionTrace,
}

impl Fundamentals {
    pub fn new(problem: &ProblemSpec, lambda: Complex64, opts: &OdeOptions) -> Result<Self> {
        let inits = [(ONE, ZERO), (ZERO, ONE)];
        let (x, z) = rayon::join(
            || integrate_many(&problem.coeffs, lambda, Endpoint::Left, &inits, opts),
            || integrate_many(&problem.coeffs, lambda, Endpoint::Right, &inits, opts),
        );
        let (mut x, mut z) = (x?, z?);
        let (x2, x1) = (x.pop().expect("two"), x.pop().expect("two"));
        let (z2, z1) = (z.pop().expect("two"), z.pop().expect("two"));
        Ok(Self {
            lambda,
            x1,
            x2,
            z1,
            z2,
        })
    }

    /// Every form value needed for the determinants.
    pub fn table(&self, problem: &ProblemSpec) -> Result<FormTable> {
        let pair = |m: &BoundaryMeasure, a: &SolutionTrace, b: &SolutionTrace| -> Result<[Complex64; 2]> {
            Ok([apply_measure_form(m, a)?, apply_measure_form(m, b)?])
        };
        Ok(FormTable {
            u1x: pair(&problem.u1, &self.x1, &self.x2)?,
            u2x: pair(&problem.u2, &self.x1, &self.x2)?,
            v1x: [apply_point_form(1, &self.x1)?, apply_point_form(1, &self.x2)?],
            v2x: [apply_point_form(2, &self.x1)?, apply_point_form(2, &self.x2)?],
            u1z: pair(&problem.u1, &self.z1, &self.z2)?,
            u2z: pair(&problem.u2, &self.z1, &self.z2)?,
        })
    }
}

/// `U_j`, `V_j` applied to `X_1, X_2` and `U_j` applied to `Z_1, Z_2`.
#[derive(Clone, Copy, Debug)]
pub struct FormTable {
    pub u1x: [Complex64; 2],
    pub u2x: [Complex64; 2],
    pub v1x: [Complex64; 2],
    pub v2x: [Complex64; 2],
    pub u1z: [Complex64; 2],
    pub u2z: [Complex64; 2],
}

impl FormTable {
    /// Entire characteristic function by the requested path.
    pub fn entire(&self, name: CharName, path: EvalPath) -> Result<(Complex64, f64)> {
        let t = self;
        Ok(match (name, path) {
            (CharName::Omega, EvalPath::DetOfX) => det(t.u1x[0], t.u1x[1], t.u2x[0], t.u2x[1]),
            (CharName::Omega, _) => det(t.u1z[0], t.u1z[1], t.u2z[0], t.u2z[1]),
            (CharName::Delta1, EvalPath::DetOfX) => det(t.u1x[0], t.u1x[1], t.v1x[0], t.v1x[1]),
            (CharName::Delta1, _) => (-t.u1z[1], t.u1z[1].norm()),
            (CharName::Delta2, EvalPath::DetOfX) => det(t.u2x[0], t.u2x[1], t.v1x[0], t.v1x[1]),
            (CharName::Delta2, _) => (-t.u2z[1], t.u2z[1].norm()),
            (CharName::Delta11, EvalPath::DetOfX) => det(t.u1x[0], t.u1x[1], t.v2x[0], t.v2x[1]),
            (CharName::Delta11, _) => (t.u1z[0], t.u1z[0].norm()),
            (n, _) => {
                return Err(Error::Contract(format!("{n} is not an entire characteristic function")))
            }
        })
    }
}

/// Which fundamental traces a via-Z evaluation of `name` needs.
fn z_needs(name: CharName) -> (bool, bool) {
    match name {
        CharName::Delta1 | CharName::Delta2 | CharName::WeylM => (false, true),
        CharName::Delta11 => (true, false),
        CharName::Omega | CharName::BigN => (true, true),
    }
}

/// Evaluates one characteristic function at `lambda`.
///
/// `M` and `N` are only available by the ratio path; the entire functions
/// accept `det_of_X` or `via_Z` (`ratio` falls back to `via_Z`).
pub fn eval_char(
    problem: &ProblemSpec,
    name: CharName,
    lambda: Complex64,
    path: EvalPath,
    opts: &OdeOptions,
) -> Result<CharEvaluation> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite lambda {lambda}")));
    }
    let (value, scale, path) = if path == EvalPath::DetOfX && name.is_entire() {
        let tr = integrate_many(&problem.coeffs, lambda, Endpoint::Left, &[(ONE, ZERO), (ZERO, ONE)], opts)?;
        let (x1, x2) = (&tr[0], &tr[1]);
        let table = FormTable {
            u1x: [apply_measure_form(&problem.u1, x1)?, apply_measure_form(&problem.u1, x2)?],
            u2x: [apply_measure_form(&problem.u2, x1)?, apply_measure_form(&problem.u2, x2)?],
            v1x: [apply_point_form(1, x1)?, apply_point_form(1, x2)?],
            v2x: [apply_point_form(2, x1)?, apply_point_form(2, x2)?],
            u1z: [ZERO; 2],
            u2z: [ZERO; 2],
        };
        let (v, s) = table.entire(name, path)?;
        (v, s, path)
    } else {
        let (need1, need2) = z_needs(name);
        let mut inits = Vec::new();
        if need1 {
            inits.push((ONE, ZERO));
        }
        if need2 {
            inits.push((ZERO, ONE));
        }
        let tr = integrate_many(&problem.coeffs, lambda, Endpoint::Right, &inits, opts)?;
        let (z1, z2) = match (need1, need2) {
            (true, true) => (Some(&tr[0]), Some(&tr[1])),
            (true, false) => (Some(&tr[0]), None),
            _ => (None, Some(&tr[0])),
        };
        let form = |m: &BoundaryMeasure, z: Option<&SolutionTrace>| -> Result<Complex64> {
            z.map_or(Ok(ZERO), |z| apply_measure_form(m, z))
        };
        let table = FormTable {
            u1x: [ZERO; 2],
            u2x: [ZERO; 2],
            v1x: [ZERO; 2],
            v2x: [ZERO; 2],
            u1z: [form(&problem.u1, z1)?, form(&problem.u1, z2)?],
            u2z: [
                if name == CharName::Omega || name == CharName::Delta2 || name == CharName::WeylM {
                    form(&problem.u2, z1)?
                } else {
                    ZERO
                },
                if name == CharName::Omega || name == CharName::Delta2 || name == CharName::WeylM {
                    form(&problem.u2, z2)?
                } else {
                    ZERO
                },
            ],
        };
        match name {
            CharName::WeylM => {
                let (d2, _) = table.entire(CharName::Delta2, EvalPath::ViaZ)?;
                let (d1, _) = table.entire(CharName::Delta1, EvalPath::ViaZ)?;
                let v = ratio(name, lambda, d2, d1)?;
                (v, v.norm(), EvalPath::Ratio)
            }
            CharName::BigN => {
                let (d1, _) = table.entire(CharName::Delta1, EvalPath::ViaZ)?;
                let (d11, _) = table.entire(CharName::Delta11, EvalPath::ViaZ)?;
                let v = ratio(name, lambda, d1, d11)?;
                (v, v.norm(), EvalPath::Ratio)
            }
            _ => {
                let (v, s) = table.entire(name, EvalPath::ViaZ)?;
                (v, s, EvalPath::ViaZ)
            }
        }
    };
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Overflow { lambda });
    }
    Ok(CharEvaluation {
        lambda,
        name,
        value,
        path,
        scale,
    })
}

/// `lambda -> value` for one characteristic function, by its default path.
pub fn char_fn<'a>(
    problem: &'a ProblemSpec,
    name: CharName,
    opts: &'a OdeOptions,
) -> impl Fn(Complex64) -> Result<Complex64> + Sync + 'a {
    move |lambda| Ok(eval_char(problem, name, lambda, name.default_path(), opts)?.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinedKind {
    /// `U_1(phi) = 0`.
    #[serde(rename = "phi")]
    Phi,
    /// `U_2(theta) = 0`.
    Theta,
    /// `V_1(psi) = 0`, `V_2(psi) = -1`.
    Psi,
    /// Weyl-type solution `psi / Delta_1`: `U_1 = 1`, `V_1 = 0`.
    #[serde(rename = "Phi")]
    BigPhi,
    V1,
    V2,
}

impl CombinedKind {
    pub const ALL: [CombinedKind; 6] = [
        CombinedKind::Phi,
        CombinedKind::Theta,
        CombinedKind::Psi,
        CombinedKind::BigPhi,
        CombinedKind::V1,
        CombinedKind::V2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CombinedKind::Phi => "phi",
            CombinedKind::Theta => "theta",
            CombinedKind::Psi => "psi",
            CombinedKind::BigPhi => "Phi",
            CombinedKind::V1 => "v1",
            CombinedKind::V2 => "v2",
        }
    }
}

impl fmt::Display for CombinedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombinedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // case matters: phi and Phi are different solutions
        CombinedKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown combined solution '{s}'")))
    }
}

/// Pointwise `a * s + b * t` that remembers `|a s| + |b t|` at each node.
fn tracked(a: Complex64, s: &SolutionTrace, b: Complex64, t: &SolutionTrace) -> Result<(SolutionTrace, Vec<f64>)> {
    let out = SolutionTrace::combine(&[(a, s), (b, t)])?;
    let n = out.grid_n();
    let rel = (-out.scale_log).exp();
    let sa = s.scale_log.exp() * rel;
    let sb = t.scale_log.exp() * rel;
    let mag = (0..=n)
        .map(|i| {
            let (ys, dys) = s.stored(i);
            let (yt, dyt) = t.stored(i);
            a.norm() * sa * ys.norm().max(dys.norm()) + b.norm() * sb * yt.norm().max(dyt.norm())
        })
        .collect();
    Ok((out, mag))
}

/// Two representations of one solution merged node by node, keeping at
/// each node the one formed with less cancellation.
fn blend(a: (SolutionTrace, Vec<f64>), b: (SolutionTrace, Vec<f64>)) -> (SolutionTrace, Vec<f64>) {
    let (ta, ma) = a;
    let (tb, mb) = b;
    let shift = (tb.scale_log - ta.scale_log).exp();
    let pick_b: Vec<bool> = ma.iter().zip(&mb).map(|(x, y)| y * shift < *x).collect();
    let out = ta.merge_nodes(&tb, &pick_b);
    let mag = ma
        .iter()
        .zip(&mb)
        .zip(&pick_b)
        .map(|((x, y), &pb)| if pb { y * shift } else { *x })
        .collect();
    (out, mag)
}

/// A combined solution and the per-node term magnitude it was formed from
/// (relative to its own `scale_log`).
#[derive(Clone, Debug)]
pub struct Combined {
    pub trace: SolutionTrace,
    pub magnitude: Vec<f64>,
}

impl Combined {
    fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max) * self.trace.scale_log.exp()
    }

    fn scaled(self, c: Complex64) -> Combined {
        let k = c.norm();
        Combined {
            trace: self.trace.scaled(c),
            magnitude: self.magnitude.into_iter().map(|m| m * k).collect(),
        }
    }
}

fn check(condition: &str, lambda: Complex64, got: Complex64, want: Complex64, scale: f64) -> Result<()> {
    if (got - want).norm() > CONDITION_TOL * scale.max(1.0) {
        return Err(Error::ConditionFailed {
            condition: format!("{condition} (got {got}, want {want})"),
            lambda,
        });
    }
    Ok(())
}

/// Builds a combined solution and re-verifies its defining conditions.
pub fn build_combined(
    problem: &ProblemSpec,
    which: CombinedKind,
    lambda: Complex64,
    opts: &OdeOptions,
) -> Result<SolutionTrace> {
    let f = Fundamentals::new(problem, lambda, opts)?;
    let t = f.table(problem)?;
    Ok(combined_from(problem, &f, &t, which)?.trace)
}

/// As [`build_combined`], reusing already computed fundamentals.
pub fn combined_from(
    problem: &ProblemSpec,
    f: &Fundamentals,
    t: &FormTable,
    which: CombinedKind,
) -> Result<Combined> {
    let lambda = f.lambda;
    let tv1 = problem.u1.total_variation();
    let tv2 = problem.u2.total_variation();
    let phi = || -> Result<Combined> {
        let x = tracked(t.u1x[0], &f.x2, -t.u1x[1], &f.x1)?;
        let z = tracked(t.u1z[0], &f.z2, -t.u1z[1], &f.z1)?;
        let (trace, magnitude) = blend(x, z);
        Ok(Combined { trace, magnitude })
    };
    let out = match which {
        CombinedKind::Phi => phi()?,
        CombinedKind::Theta => {
            let x = tracked(t.u2x[1], &f.x1, -t.u2x[0], &f.x2)?;
            let z = tracked(t.u2z[1], &f.z1, -t.u2z[0], &f.z2)?;
            let (trace, magnitude) = blend(x, z);
            Combined { trace, magnitude }
        }
        CombinedKind::Psi => {
            let (trace, magnitude) = tracked(-ONE, &f.z2, ZERO, &f.z1)?;
            Combined { trace, magnitude }
        }
        CombinedKind::BigPhi => {
            let d1 = -t.u1z[1];
            let inv = ratio(CharName::WeylM, lambda, ONE, d1)?;
            let (trace, magnitude) = tracked(-inv, &f.z2, ZERO, &f.z1)?;
            Combined { trace, magnitude }
        }
        CombinedKind::V1 => {
            let (trace, magnitude) = tracked(ONE, &f.z1, ZERO, &f.z2)?;
            Combined { trace, magnitude }
        }
        CombinedKind::V2 => {
            let d11 = t.u1z[0];
            let inv = ratio(CharName::BigN, lambda, ONE, d11)?;
            phi()?.scaled(inv)
        }
    };
    let scale = out.max_magnitude();
    let tr = &out.trace;
    let u = |m: &BoundaryMeasure| apply_measure_form(m, tr);
    let v = |j: u8| apply_point_form(j, tr);
    let name = which.as_str();
    match which {
        CombinedKind::Phi => check(&format!("U1({name}) = 0"), lambda, u(&problem.u1)?, ZERO, tv1 * scale)?,
        CombinedKind::Theta => check(&format!("U2({name}) = 0"), lambda, u(&problem.u2)?, ZERO, tv2 * scale)?,
        CombinedKind::Psi => {
            check("V1(psi) = 0", lambda, v(1)?, ZERO, scale)?;
            check("V2(psi) = -1", lambda, v(2)?, -ONE, scale)?;
        }
        CombinedKind::BigPhi => {
            check("U1(Phi) = 1", lambda, u(&problem.u1)?, ONE, tv1 * scale)?;
            check("V1(Phi) = 0", lambda, v(1)?, ZERO, scale)?;
        }
        CombinedKind::V1 => {
            check("v1(T) = 1", lambda, v(1)?, ONE, scale)?;
            check("v1'(T) = 0", lambda, v(2)?, ZERO, scale)?;
        }
        CombinedKind::V2 => {
            let n = -t.u1z[1] / t.u1z[0];
            check("v2(T) = N", lambda, v(1)?, n, scale)?;
            check("v2'(T) = 1", lambda, v(2)?, ONE, scale)?;
            check("U1(v2) = 0", lambda, u(&problem.u1)?, ZERO, tv1 * scale)?;
        }
    }
    Ok(out)
}

/// `(Delta_1^a, Delta_11^a)`: the determinants with `U_1` restricted to `[0, a]`.
pub fn truncated_deltas(
    problem: &ProblemSpec,
    a: f64,
    lambda: Complex64,
    opts: &OdeOptions,
) -> Result<(Complex64, Complex64)> {
    let m = problem.u1.truncate(a)?;
    let tr = integrate_many(&problem.coeffs, lambda, Endpoint::Right, &[(ONE, ZERO), (ZERO, ONE)], opts)?;
    Ok((-apply_measure_form(&m, &tr[1])?, apply_measure_form(&m, &tr[0])?))
}

/// One row of a lambda-grid scan; `value` is `None` at a pole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub lambda: Complex64,
    pub name: CharName,
    pub path: EvalPath,
    pub value: Option<Complex64>,
}

/// Evaluates each name on every lambda, in parallel. Rows come back in input
/// order. Poles give `value: None`; every other failure is returned.
pub fn scan(
    problem: &ProblemSpec,
    names: &[CharName],
    path: Option<EvalPath>,
    lambdas: &[Complex64],
    opts: &OdeOptions,
) -> Result<Vec<ScanRow>> {
    let jobs: Vec<(CharName, Complex64)> = names
        .iter()
        .flat_map(|&n| lambdas.iter().map(move |&l| (n, l)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(name, lambda)| {
            let path = path.filter(|_| name.is_entire()).unwrap_or(name.default_path());
            match eval_char(problem, name, lambda, path, opts) {
                Ok(e) => Ok(ScanRow {
                    lambda,
                    name,
                    path: e.path,
                    value: Some(e.value),
                }),
                Err(Error::Pole { .. }) => Ok(ScanRow {
                    lambda,
                    name,
                    path: EvalPath::Ratio,
                    value: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if names.contains(&CharName::Omega) {
        let all_small = rows
            .iter()
            .filter(|r| r.name == CharName::Omega)
            .all(|r| r.value.is_some_and(|v| v.norm() < 1e-12));
        if all_small && !lambdas.is_empty() {
            log::warn!("omega is below 1e-12 on the whole scan grid; it may vanish identically");
        }
    }
    for r in rows.iter().filter(|r| r.value.is_none()) {
        log::warn!("{} has a pole at lambda = {}", r.name, r.lambda);
    }
    Ok(rows)
}

/// CSV `(re_lambda, im_lambda, re_value, im_value, name, path)`; poles are
/// written with empty value cells.
pub fn write_scan_csv<W: std::io::Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["re_lambda", "im_lambda", "re_value", "im_value", "name", "path"])?;
    for r in rows {
        let (re, im) = match r.value {
            Some(v) => (format!("{:e}", v.re), format!("{:e}", v.im)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            format!("{:e}", r.lambda.re),
            format!("{:e}", r.lambda.im),
            re,
            im,
            r.name.to_string(),
            r.path.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coefficients, CoeffFn};
    use crate::ode::wronskian_scaled;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn o() -> OdeOptions {
        OdeOptions::default()
    }

    fn sample_problem() -> ProblemSpec {
        let co = Coefficients::new(PI, CoeffFn::sine(0.3, 2.0), CoeffFn::piecewise_linear(&[(0.0, 0.5), (2.0, -0.4), (PI, 0.2)]))
            .unwrap();
        let u1 = BoundaryMeasure::new(
            PI,
            vec![(0.0, 1.0, 0.2).into(), (0.6, -0.3, 0.1).into()],
            (0..=128).map(|i| Complex64::new(0.2 * (i as f64 * 0.05).cos(), 0.1)).collect(),
        )
        .unwrap();
        let u2 = BoundaryMeasure::new(PI, vec![(0.0, 0.4, 0.0).into(), (1.9, 1.0, 0.0).into()], vec![]).unwrap();
        ProblemSpec::new(co, u1, u2, true).unwrap()
    }

    #[test]
    fn free_problem_examples() {
        let p = ProblemSpec::free();
        let d1 = eval_char(&p, CharName::Delta1, c(0.5), EvalPath::ViaZ, &o()).unwrap();
        assert!((d1.value - c(2.0)).norm() < 1e-9);
        let d11 = eval_char(&p, CharName::Delta11, c(1.0), EvalPath::ViaZ, &o()).unwrap();
        assert!((d11.value - c(-1.0)).norm() < 1e-9);
        let m = eval_char(&p, CharName::WeylM, c(0.5), EvalPath::Ratio, &o()).unwrap();
        assert!((m.value - c(2f64.sqrt() / 2.0)).norm() < 1e-9);
        assert_eq!(m.path, EvalPath::Ratio);
    }

    #[test]
    fn pole_is_signalled() {
        let p = ProblemSpec::free();
        let e = eval_char(&p, CharName::WeylM, c(1.0), EvalPath::Ratio, &o());
        assert!(matches!(e, Err(Error::Pole { lambda, .. }) if lambda == c(1.0)));
        let e = eval_char(&p, CharName::BigN, c(0.5), EvalPath::Ratio, &o());
        assert!(matches!(e, Err(Error::Pole { .. })));
    }

    #[test]
    fn paths_agree() {
        let p = sample_problem();
        for lam in [Complex64::new(2.3, 0.4), Complex64::new(-7.0, -2.0), Complex64::new(0.1, 4.0)] {
            for name in [CharName::Omega, CharName::Delta1, CharName::Delta2, CharName::Delta11] {
                let x = eval_char(&p, name, lam, EvalPath::DetOfX, &o()).unwrap();
                let z = eval_char(&p, name, lam, EvalPath::ViaZ, &o()).unwrap();
                let scale = x.scale.max(z.scale);
                assert!((x.value - z.value).norm() <= 1e-8 * scale, "{name} at {lam}: {} vs {}", x.value, z.value);
            }
        }
    }

    #[test]
    fn wronskian_identities() {
        let p = sample_problem();
        let lam = Complex64::new(3.1, -1.2);
        let f = Fundamentals::new(&p, lam, &o()).unwrap();
        let t = f.table(&p).unwrap();
        let get = |k| combined_from(&p, &f, &t, k).unwrap().trace;
        let (phi, theta, psi, big_phi) = (
            get(CombinedKind::Phi),
            get(CombinedKind::Theta),
            get(CombinedKind::Psi),
            get(CombinedKind::BigPhi),
        );
        let omega = t.entire(CharName::Omega, EvalPath::ViaZ).unwrap().0;
        let d1 = t.entire(CharName::Delta1, EvalPath::ViaZ).unwrap().0;
        for x in [0.0, 0.4, 1.7, 2.9, PI] {
            let (w, s) = wronskian_scaled(&theta, &phi, x).unwrap();
            assert!((w - omega).norm() <= 1e-8 * s.max(omega.norm()));
            let (w, s) = wronskian_scaled(&psi, &phi, x).unwrap();
            assert!((w - d1).norm() <= 1e-8 * s.max(d1.norm()));
            let (w, s) = wronskian_scaled(&big_phi, &phi, x).unwrap();
            assert!((w - ONE).norm() <= 1e-8 * s.max(1.0));
            let v1 = get(CombinedKind::V1);
            let v2 = get(CombinedKind::V2);
            let (w, s) = wronskian_scaled(&v1, &v2, x).unwrap();
            assert!((w - ONE).norm() <= 1e-8 * s.max(1.0));
        }
        let m = eval_char(&p, CharName::WeylM, lam, EvalPath::Ratio, &o()).unwrap().value;
        let u2 = apply_measure_form(&p.u2, &big_phi).unwrap();
        assert!((m - u2).norm() <= 1e-8 * m.norm().max(1.0));
    }

    #[test]
    fn free_phi_is_sine() {
        let p = ProblemSpec::free();
        let phi = build_combined(&p, CombinedKind::Phi, c(1.0), &o()).unwrap();
        for x in [0.0, 1.0, 2.5] {
            assert!((phi.at(x).unwrap().0 - c(x.sin())).norm() < 1e-9);
        }
        let psi = build_combined(&p, CombinedKind::Psi, c(1.3), &o()).unwrap();
        assert!((apply_point_form(2, &psi).unwrap() + ONE).norm() < 1e-12);
        let big = build_combined(&p, CombinedKind::BigPhi, c(1.3), &o()).unwrap();
        assert!((apply_measure_form(&p.u1, &big).unwrap() - ONE).norm() < 1e-12);
        assert!(matches!(
            build_combined(&p, CombinedKind::BigPhi, c(2.0), &o()),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn truncation_examples() {
        let p = sample_problem();
        let lam = Complex64::new(1.7, 0.3);
        let (a, b) = truncated_deltas(&p, PI, lam, &o()).unwrap();
        let d1 = eval_char(&p, CharName::Delta1, lam, EvalPath::ViaZ, &o()).unwrap().value;
        let d11 = eval_char(&p, CharName::Delta11, lam, EvalPath::ViaZ, &o()).unwrap().value;
        assert_eq!((a, b), (d1, d11));

        let free = ProblemSpec::free();
        let x = truncated_deltas(&free, 0.3, lam, &o()).unwrap();
        let y = truncated_deltas(&free, 2.0, lam, &o()).unwrap();
        assert_eq!(x, y);

        // density on [T/2, T] is cut away entirely
        let rho: Vec<Complex64> = (0..=64).map(|i| if i >= 32 { c(1.0) } else { c(0.0) }).collect();
        let mut u1 = BoundaryMeasure::new(PI, vec![(0.0, 1.0, 0.0).into()], rho).unwrap();
        u1.density[32] = c(0.0);
        let spec = ProblemSpec::new(Coefficients::free(PI), u1, BoundaryMeasure::dirac(PI, 1.0).unwrap(), true).unwrap();
        let (d, _) = truncated_deltas(&spec, PI / 2.0, lam, &o()).unwrap();
        let want = (lam * PI).sin() / lam;
        assert!((d - want).norm() < 1e-9 * want.norm().max(1.0));
    }

    #[test]
    fn names_round_trip() {
        for n in CharName::ALL {
            assert_eq!(n.as_str().parse::<CharName>().unwrap(), n);
            assert_eq!(serde_json::to_string(&n).unwrap(), format!("\"{}\"", n.as_str()));
        }
        for k in CombinedKind::ALL {
            assert_eq!(k.as_str().parse::<CombinedKind>().unwrap(), k);
        }
        assert!("delta3".parse::<CharName>().is_err());
    }
}
