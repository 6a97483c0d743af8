//! Leading-order asymptotics of the fundamental and combined solutions in
//! the upper half-plane, and numerical checks of them.
//!
//! Comparisons are made in the log domain so that solutions of size
//! `exp(|Im lambda| T)` never need to be formed explicitly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfns::{combined_from, CombinedKind, Fundamentals};
use crate::config::OdeOptions;
use crate::error::{Error, Result};
use crate::model::{Coefficients, ProblemSpec};
use crate::ode::SolutionTrace;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AsymptoticKind {
    Y1,
    Y2,
    #[serde(rename = "Phi")]
    BigPhi,
    #[serde(rename = "v1")]
    V1,
    #[serde(rename = "phi")]
    Phi,
    #[serde(rename = "v2")]
    V2,
    #[serde(rename = "delta1")]
    Delta1,
    #[serde(rename = "delta11")]
    Delta11,
}

impl AsymptoticKind {
    pub const ALL: [AsymptoticKind; 8] = [
        AsymptoticKind::Y1,
        AsymptoticKind::Y2,
        AsymptoticKind::BigPhi,
        AsymptoticKind::V1,
        AsymptoticKind::Phi,
        AsymptoticKind::V2,
        AsymptoticKind::Delta1,
        AsymptoticKind::Delta11,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AsymptoticKind::Y1 => "Y1",
            AsymptoticKind::Y2 => "Y2",
            AsymptoticKind::BigPhi => "Phi",
            AsymptoticKind::V1 => "v1",
            AsymptoticKind::Phi => "phi",
            AsymptoticKind::V2 => "v2",
            AsymptoticKind::Delta1 => "delta1",
            AsymptoticKind::Delta11 => "delta11",
        }
    }

    /// Kinds whose asymptotics need `sigma_1` to be constant near `T`.
    pub fn needs_tail(self) -> bool {
        matches!(self, AsymptoticKind::Phi | AsymptoticKind::V2)
    }
}

impl fmt::Display for AsymptoticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AsymptoticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AsymptoticKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown asymptotic kind '{s}'")))
    }
}

/// A ray `arg lambda = arg` inside the sector `[delta, pi - delta]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub delta: f64,
    pub radii: Vec<f64>,
    pub arg: f64,
}

impl SectorSpec {
    pub fn new(delta: f64, radii: Vec<f64>, arg: f64) -> Result<Self> {
        let s = Self { delta, radii, arg };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::{FRAC_PI_2, PI};
        if !(self.delta > 0.0 && self.delta < FRAC_PI_2) {
            return Err(Error::Config(format!("sector delta {} outside (0, pi/2)", self.delta)));
        }
        if !(self.arg >= self.delta - 1e-12 && self.arg <= PI - self.delta + 1e-12) {
            return Err(Error::Config(format!(
                "ray angle {} outside [{}, pi - {}]",
                self.arg, self.delta, self.delta
            )));
        }
        if self.radii.is_empty()
            || self.radii[0] <= 0.0
            || self.radii.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Config("radii must be positive and strictly increasing".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.radii
            .iter()
            .map(|&r| Complex64::from_polar(r, self.arg))
            .collect()
    }
}

/// The leading term of one asymptotic formula.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticModel {
    pub kind: AsymptoticKind,
    pub h1: Complex64,
    coeffs: Coefficients,
}

impl AsymptoticModel {
    pub fn new(problem: &ProblemSpec, kind: AsymptoticKind) -> Result<Self> {
        problem.require_strict()?;
        Ok(Self {
            kind,
            h1: problem.u1.h(),
            coeffs: problem.coeffs.clone(),
        })
    }

    pub fn t_end(&self) -> f64 {
        self.coeffs.t_end
    }

    /// Natural log of the leading term (any branch).
    pub fn log_value(&self, x: f64, lambda: Complex64, nu: u8) -> Result<Complex64> {
        if lambda == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("asymptotic models need lambda != 0".into()));
        }
        if nu > 1 {
            return Err(Error::Domain(format!("derivative order {nu} not modelled")));
        }
        let t = self.t_end();
        let nu = f64::from(nu);
        let il = (I * lambda).ln();
        let mil = (-I * lambda).ln();
        let ph = |s: f64| -> Result<Complex64> { Ok(lambda * s - self.coeffs.integral_p(s)?) };
        // phase accumulated over [x, T]
        let back = |x: f64| -> Result<Complex64> {
            Ok(lambda * (t - x) - (self.coeffs.integral_p(t)? - self.coeffs.integral_p(x)?))
        };
        let lnh = self.h1.ln();
        let half = 0.5f64.ln();
        Ok(match self.kind {
            AsymptoticKind::Y1 => il * nu + I * ph(x)?,
            AsymptoticKind::Y2 => mil * nu - I * ph(x)?,
            AsymptoticKind::BigPhi => il * nu - lnh + I * ph(x)?,
            AsymptoticKind::V1 => il * nu + half - I * back(x)?,
            AsymptoticKind::Phi => lnh + half + mil * (nu - 1.0) - I * ph(x)?,
            AsymptoticKind::V2 => mil * (nu - 1.0) + I * back(x)?,
            // -H1 / (2 i lambda) = H1 / (2 (-i lambda))
            AsymptoticKind::Delta1 => lnh + half - mil - I * ph(t)?,
            AsymptoticKind::Delta11 => lnh + half - I * ph(t)?,
        })
    }
}

/// The leading term itself (may overflow for large `|Im lambda|`).
pub fn model_value(m: &AsymptoticModel, x: f64, lambda: Complex64, nu: u8) -> Result<Complex64> {
    Ok(m.log_value(x, lambda, nu)?.exp())
}

fn log_of(v: Complex64, extra: f64) -> Option<Complex64> {
    (v != Complex64::new(0.0, 0.0) && v.re.is_finite() && v.im.is_finite()).then(|| v.ln() + extra)
}

fn trace_log(tr: &SolutionTrace, x: f64, nu: u8) -> Result<Option<Complex64>> {
    let (y, dy) = tr.interp_stored(x)?;
    Ok(log_of(if nu == 0 { y } else { dy }, tr.scale_log))
}

/// Log of the computed quantity, or `None` where it vanishes or overflows.
fn computed_log(
    problem: &ProblemSpec,
    kind: AsymptoticKind,
    x: f64,
    lambda: Complex64,
    nu: u8,
    opts: &OdeOptions,
) -> Result<Option<Complex64>> {
    let f = match Fundamentals::new(problem, lambda, opts) {
        Ok(f) => f,
        Err(Error::Overflow { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    // the determinants come from Z: Delta1 = -U1(Z2), Delta11 = U1(Z1)
    let form_log = |tr: &SolutionTrace, sign: f64| -> Result<Option<Complex64>> {
        let v = crate::forms::measure_form_stored(&problem.u1, tr)? * sign;
        Ok(log_of(v, tr.scale_log))
    };
    let combined = |k: CombinedKind| -> Result<Option<SolutionTrace>> {
        let t = f.table(problem)?;
        match combined_from(problem, &f, &t, k) {
            Ok(c) => Ok(Some(c.trace)),
            Err(Error::Pole { .. }) | Err(Error::Overflow { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    match kind {
        AsymptoticKind::Y1 | AsymptoticKind::Y2 => Err(Error::Config(format!(
            "{kind} is a model-only fundamental system with no computed counterpart"
        ))),
        AsymptoticKind::Delta1 => form_log(&f.z2, -1.0),
        AsymptoticKind::Delta11 => form_log(&f.z1, 1.0),
        AsymptoticKind::V1 => trace_log(&f.z1, x, nu),
        AsymptoticKind::BigPhi => match combined(CombinedKind::BigPhi)? {
            Some(tr) => trace_log(&tr, x, nu),
            None => Ok(None),
        },
        AsymptoticKind::Phi => match combined(CombinedKind::Phi)? {
            Some(tr) => trace_log(&tr, x, nu),
            None => Ok(None),
        },
        AsymptoticKind::V2 => match combined(CombinedKind::V2)? {
            Some(tr) => trace_log(&tr, x, nu),
            None => Ok(None),
        },
    }
}

/// Point where `sigma_1` becomes constant, if that happens before `T`.
fn tail_start(problem: &ProblemSpec) -> Result<f64> {
    let a = problem.u1.support_end();
    if a >= problem.t_end() * (1.0 - 1e-12) {
        return Err(Error::Precondition(
            "sigma_1 must be constant on some interval [a, T] with a < T".into(),
        ));
    }
    Ok(a)
}

fn check_x(problem: &ProblemSpec, kind: AsymptoticKind, x: f64) -> Result<()> {
    let t = problem.t_end();
    if !(0.0..=t).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, {t}]")));
    }
    if kind.needs_tail() {
        let a = tail_start(problem)?;
        if x < 0.5 * a {
            return Err(Error::Precondition(format!(
                "{kind} asymptotics hold for x >= a/2 = {}",
                0.5 * a
            )));
        }
    }
    Ok(())
}

/// `|computed / model - 1|` along the ray, one entry per radius. `None`
/// marks a radius where the computation overflowed or hit a pole.
pub fn deviation_scan(
    problem: &ProblemSpec,
    kind: AsymptoticKind,
    sector: &SectorSpec,
    x: f64,
    nu: u8,
    opts: &OdeOptions,
) -> Result<Vec<(f64, Option<f64>)>> {
    problem.require_strict()?;
    sector.validate()?;
    check_x(problem, kind, x)?;
    let model = AsymptoticModel::new(problem, kind)?;
    sector
        .radii
        .par_iter()
        .map(|&r| {
            let lambda = Complex64::from_polar(r, sector.arg);
            let got = computed_log(problem, kind, x, lambda, nu, opts)?;
            let want = model.log_value(x, lambda, nu)?;
            Ok((r, got.map(|g| ((g - want).exp() - 1.0).norm())))
        })
        .collect()
}

/// CSV `(kind, arg, radius, deviation)`; unavailable radii have an empty cell.
pub fn write_scan_csv<W: std::io::Write>(
    kind: AsymptoticKind,
    arg: f64,
    rows: &[(f64, Option<f64>)],
    out: &mut csv::Writer<W>,
) -> Result<()> {
    for (r, d) in rows {
        out.write_record([
            kind.to_string(),
            format!("{arg:e}"),
            format!("{r:e}"),
            d.map_or(String::new(), |d| format!("{d:e}")),
        ])?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub lambda: Complex64,
    /// Largest `|computed| / |envelope|` over the interior nodes checked.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: AsymptoticKind,
    pub samples: Vec<BoundSample>,
    pub excluded: Vec<Complex64>,
    pub max_ratio: f64,
    pub limit: f64,
    pub pass: bool,
}

/// Checks the growth envelopes for `v1`, `Phi`, `phi`, `v2` on samples in
/// the closed upper half-plane.
///
/// Samples within `min_root_gap` of a root in `filter_roots` are excluded
/// (pass the `Lambda_1` roots for `Phi` and the `Lambda_11` roots for
/// `v2`). The envelope is checked at every interior grid node (for `phi`
/// and `v2`, only nodes with `x >= a/2`), for both `y` and `y'`.
pub fn bound_check(
    problem: &ProblemSpec,
    kind: AsymptoticKind,
    lambdas: &[Complex64],
    filter_roots: &[Complex64],
    min_root_gap: f64,
    limit: f64,
    opts: &OdeOptions,
) -> Result<BoundReport> {
    problem.require_strict()?;
    let combined_kind = match kind {
        AsymptoticKind::V1 => CombinedKind::V1,
        AsymptoticKind::BigPhi => CombinedKind::BigPhi,
        AsymptoticKind::Phi => CombinedKind::Phi,
        AsymptoticKind::V2 => CombinedKind::V2,
        other => return Err(Error::Config(format!("no growth bound for {other}"))),
    };
    let x_min = if kind.needs_tail() { 0.5 * tail_start(problem)? } else { 0.0 };
    let (keep, excluded): (Vec<Complex64>, Vec<Complex64>) = lambdas.iter().partition(|&&l| {
        l.im >= 0.0 && filter_roots.iter().all(|&r| (l - r).norm() >= min_root_gap)
    });
    let t = problem.t_end();
    let pt = |s: f64| problem.coeffs.integral_p(s);
    let samples = keep
        .par_iter()
        .map(|&lambda| -> Result<Option<BoundSample>> {
            let f = Fundamentals::new(problem, lambda, opts)?;
            let table = f.table(problem)?;
            let c = match combined_from(problem, &f, &table, combined_kind) {
                Ok(c) => c.trace,
                Err(Error::Pole { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let mut worst = 0.0f64;
            for i in 1..c.grid_n() {
                let x = c.node(i);
                if x < x_min {
                    continue;
                }
                // log |envelope| for nu = 0; y' carries one more factor of |lambda|
                let e0 = match kind {
                    AsymptoticKind::V1 => (-I * (lambda * (t - x) - (pt(t)? - pt(x)?))).re,
                    AsymptoticKind::BigPhi => (I * (lambda * x - pt(x)?)).re,
                    AsymptoticKind::Phi => (-I * (lambda * x - pt(x)?)).re - lambda.norm().ln(),
                    _ => (I * (lambda * (t - x) - (pt(t)? - pt(x)?))).re - lambda.norm().ln(),
                };
                let (y, dy) = c.stored(i);
                for (v, e) in [(y, e0), (dy, e0 + lambda.norm().max(1.0).ln())] {
                    if v.norm() > 0.0 {
                        worst = worst.max((v.norm().ln() + c.scale_log - e).exp());
                    }
                }
            }
            Ok(Some(BoundSample { lambda, ratio: worst }))
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<BoundSample> = samples.into_iter().flatten().collect();
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(BoundReport {
        kind,
        samples,
        excluded,
        max_ratio,
        limit,
        pass: max_ratio <= limit,
    })
}
