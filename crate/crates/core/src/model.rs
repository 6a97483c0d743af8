//! Problem data: the coefficient pair `(p, q)`, the boundary measures and
//! the problem file format.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::STRICT_H1_FLOOR;
use crate::error::{Error, Result};

/// Selects one of the two coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    P,
    Q,
}

/// One `cos`/`sin` pair of a trigonometric series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: f64,
    pub cos: Complex64,
    pub sin: Complex64,
}

/// A coefficient on `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CoeffFn {
    Constant {
        value: Complex64,
    },
    /// Linear interpolation through `(knots[i], values[i])`; the knots must
    /// start at 0 and end at `T`.
    PiecewiseLinear {
        knots: Vec<f64>,
        values: Vec<Complex64>,
    },
    /// `constant + sum_k cos_k cos(freq_k x) + sin_k sin(freq_k x)`.
    Trig {
        constant: Complex64,
        terms: Vec<TrigTerm>,
    },
}

impl CoeffFn {
    pub fn zero() -> Self {
        CoeffFn::Constant {
            value: Complex64::new(0.0, 0.0),
        }
    }

    pub fn constant(value: f64) -> Self {
        CoeffFn::Constant {
            value: Complex64::new(value, 0.0),
        }
    }

    /// Real piecewise-linear function through the given points.
    pub fn piecewise_linear(points: &[(f64, f64)]) -> Self {
        CoeffFn::PiecewiseLinear {
            knots: points.iter().map(|&(x, _)| x).collect(),
            values: points.iter().map(|&(_, v)| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// `amp * sin(freq x)` with real amplitude.
    pub fn sine(amp: f64, freq: f64) -> Self {
        CoeffFn::Trig {
            constant: Complex64::new(0.0, 0.0),
            terms: vec![TrigTerm {
                freq,
                cos: Complex64::new(0.0, 0.0),
                sin: Complex64::new(amp, 0.0),
            }],
        }
    }

    fn validate(&self, t_end: f64, name: &str) -> Result<()> {
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        match self {
            CoeffFn::Constant { value } => {
                if !finite(value) {
                    return Err(Error::Config(format!("{name}: non-finite constant")));
                }
            }
            CoeffFn::PiecewiseLinear { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    return Err(Error::Config(format!(
                        "{name}: piecewise-linear needs >= 2 knots with one value each"
                    )));
                }
                if knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Config(format!(
                        "{name}: knots must be strictly increasing"
                    )));
                }
                let tol = 1e-12 * t_end;
                if knots[0].abs() > tol || (knots[knots.len() - 1] - t_end).abs() > tol {
                    return Err(Error::Config(format!("{name}: knots must span [0, T]")));
                }
                if !values.iter().all(finite) {
                    return Err(Error::Config(format!("{name}: non-finite value")));
                }
            }
            CoeffFn::Trig { constant, terms } => {
                if !finite(constant)
                    || terms
                        .iter()
                        .any(|t| !t.freq.is_finite() || !finite(&t.cos) || !finite(&t.sin))
                {
                    return Err(Error::Config(format!("{name}: non-finite trig parameter")));
                }
            }
        }
        Ok(())
    }

    /// Value at `x`; no domain check.
    #[inline]
    pub fn value(&self, x: f64) -> Complex64 {
        match self {
            CoeffFn::Constant { value } => *value,
            CoeffFn::PiecewiseLinear { knots, values } => {
                let n = knots.len();
                let i = knots.partition_point(|&k| k <= x).clamp(1, n - 1);
                let (x0, x1) = (knots[i - 1], knots[i]);
                let s = (x - x0) / (x1 - x0);
                values[i - 1] * (1.0 - s) + values[i] * s
            }
            CoeffFn::Trig { constant, terms } => {
                let mut acc = *constant;
                for t in terms {
                    let (s, c) = (t.freq * x).sin_cos();
                    acc += t.cos * c + t.sin * s;
                }
                acc
            }
        }
    }

    /// `\int_0^x f(t) dt` in closed form.
    pub fn integral(&self, x: f64) -> Complex64 {
        match self {
            CoeffFn::Constant { value } => value * x,
            CoeffFn::PiecewiseLinear { knots, values } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 1..knots.len() {
                    let (x0, x1) = (knots[i - 1], knots[i]);
                    if x <= x0 {
                        break;
                    }
                    let xe = x.min(x1);
                    let ve = self.value(xe);
                    acc += (values[i - 1] + ve) * (0.5 * (xe - x0));
                }
                acc
            }
            CoeffFn::Trig { constant, terms } => {
                let mut acc = constant * x;
                for t in terms {
                    if t.freq == 0.0 {
                        acc += t.cos * x;
                    } else {
                        let (s, c) = (t.freq * x).sin_cos();
                        acc += t.cos * (s / t.freq) + t.sin * ((1.0 - c) / t.freq);
                    }
                }
                acc
            }
        }
    }

    /// The function `x -> f(t_end - x)` in the same family.
    pub fn reflect(&self, t_end: f64) -> Self {
        match self {
            CoeffFn::Constant { .. } => self.clone(),
            CoeffFn::PiecewiseLinear { knots, values } => CoeffFn::PiecewiseLinear {
                knots: knots.iter().rev().map(|k| t_end - k).collect(),
                values: values.iter().rev().copied().collect(),
            },
            CoeffFn::Trig { constant, terms } => CoeffFn::Trig {
                constant: *constant,
                terms: terms
                    .iter()
                    .map(|t| {
                        let (s, c) = (t.freq * t_end).sin_cos();
                        TrigTerm {
                            freq: t.freq,
                            cos: t.cos * c + t.sin * s,
                            sin: t.cos * s - t.sin * c,
                        }
                    })
                    .collect(),
            },
        }
    }

    /// Interior points where the function is not smooth.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            CoeffFn::PiecewiseLinear { knots, .. } => knots,
            _ => &[],
        }
    }
}

/// The pair `(p, q)` on `(0, T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub p: CoeffFn,
    pub q: CoeffFn,
}

impl Coefficients {
    pub fn new(t_end: f64, p: CoeffFn, q: CoeffFn) -> Result<Self> {
        let c = Self { t_end, p, q };
        c.validate()?;
        Ok(c)
    }

    /// `p = q = 0` on `(0, T)`.
    pub fn free(t_end: f64) -> Self {
        Self {
            t_end,
            p: CoeffFn::zero(),
            q: CoeffFn::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("T must be positive, got {}", self.t_end)));
        }
        self.p.validate(self.t_end, "p")?;
        self.q.validate(self.t_end, "q")
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let slack = 1e-12 * self.t_end;
        if x.is_nan() || x < -slack || x > self.t_end + slack {
            return Err(Error::Domain(format!(
                "x = {x} outside [0, {}]",
                self.t_end
            )));
        }
        Ok(())
    }

    fn select(&self, which: Which) -> &CoeffFn {
        match which {
            Which::P => &self.p,
            Which::Q => &self.q,
        }
    }

    pub fn evaluate(&self, which: Which, x: f64) -> Result<Complex64> {
        self.check_domain(x)?;
        Ok(self.select(which).value(x))
    }

    /// `\int_0^x p(t) dt`, computed from the representation.
    pub fn integral_p(&self, x: f64) -> Result<Complex64> {
        self.check_domain(x)?;
        Ok(self.p.integral(x))
    }

    /// `lambda^2 - 2 lambda p(x) - q(x)` without a domain check.
    #[inline]
    pub fn potential(&self, lambda: Complex64, lambda_sq: Complex64, x: f64) -> Complex64 {
        lambda_sq - lambda * self.p.value(x) * 2.0 - self.q.value(x)
    }

    /// Sorted interior breakpoints of `p` and `q`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .p
            .breakpoints()
            .iter()
            .chain(self.q.breakpoints())
            .copied()
            .filter(|&x| x > 0.0 && x < self.t_end)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `(p(T - x), q(T - x))`.
    pub fn reflect(&self) -> Self {
        Self {
            t_end: self.t_end,
            p: self.p.reflect(self.t_end),
            q: self.q.reflect(self.t_end),
        }
    }
}

/// A point mass of a boundary measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, f64)", into = "(f64, f64, f64)")]
pub struct Atom {
    pub t: f64,
    pub weight: Complex64,
}

impl From<(f64, f64, f64)> for Atom {
    fn from((t, re, im): (f64, f64, f64)) -> Self {
        Atom {
            t,
            weight: Complex64::new(re, im),
        }
    }
}

impl From<Atom> for (f64, f64, f64) {
    fn from(a: Atom) -> Self {
        (a.t, a.weight.re, a.weight.im)
    }
}

/// The part of `[0, T]` a measure is restricted to. Atoms count when
/// `lo < t <= hi`, or `lo <= t` if `lo_closed`; the density counts on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
}

impl Window {
    fn contains_atom(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        above && t <= self.hi
    }
}

/// A complex measure on `[0, T]`: atoms plus a density sampled on a uniform
/// grid (linearly interpolated between samples).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub atoms: Vec<Atom>,
    pub density: Vec<Complex64>,
    /// Number of density grid intervals; `density.len() == grid + 1` unless empty.
    pub grid: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(skip)]
    t_end: f64,
}

impl BoundaryMeasure {
    pub fn new(t_end: f64, atoms: Vec<Atom>, density: Vec<Complex64>) -> Result<Self> {
        let grid = density.len().saturating_sub(1);
        let m = Self {
            atoms,
            density,
            grid,
            window: None,
            t_end,
        };
        m.validate()?;
        Ok(m)
    }

    /// Point evaluation `y(t)` with unit weight.
    pub fn dirac(t_end: f64, t: f64) -> Result<Self> {
        Self::new(t_end, vec![Atom::from((t, 1.0, 0.0))], Vec::new())
    }

    /// `\int_0^T y(t) * rho dt` with a constant density.
    pub fn uniform(t_end: f64, rho: Complex64, grid: usize) -> Result<Self> {
        Self::new(t_end, Vec::new(), vec![rho; grid + 1])
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub(crate) fn attach(&mut self, t_end: f64) {
        self.t_end = t_end;
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) {
            return Err(Error::Config("measure has no interval attached".into()));
        }
        let slack = 1e-12 * self.t_end;
        for a in &self.atoms {
            if !(a.t >= -slack && a.t <= self.t_end + slack) {
                return Err(Error::Domain(format!(
                    "atom at t = {} outside [0, {}]",
                    a.t, self.t_end
                )));
            }
            if !(a.weight.re.is_finite() && a.weight.im.is_finite()) {
                return Err(Error::Config("non-finite atom weight".into()));
            }
        }
        if !self.density.is_empty() {
            if self.density.len() < 2 || self.density.len() != self.grid + 1 {
                return Err(Error::Config(format!(
                    "density has {} samples but grid = {}",
                    self.density.len(),
                    self.grid
                )));
            }
            if !self.density.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Config("non-finite density sample".into()));
            }
        } else if self.grid != 0 {
            return Err(Error::Config("empty density with nonzero grid".into()));
        }
        Ok(())
    }

    fn effective_window(&self) -> Window {
        self.window.unwrap_or(Window {
            lo: 0.0,
            hi: self.t_end,
            lo_closed: true,
        })
    }

    /// Atoms inside the current window.
    pub fn active_atoms(&self) -> impl Iterator<Item = &Atom> {
        let w = self.effective_window();
        self.atoms.iter().filter(move |a| w.contains_atom(a.t))
    }

    /// `[lo, hi]` on which the density counts, or `None` when there is no density.
    pub fn density_span(&self) -> Option<(f64, f64)> {
        if self.density.is_empty() {
            return None;
        }
        let w = self.effective_window();
        let lo = w.lo.max(0.0);
        let hi = w.hi.min(self.t_end);
        (hi > lo).then_some((lo, hi))
    }

    /// Density value at `t`, ignoring the window.
    pub fn density_at(&self, t: f64) -> Complex64 {
        if self.density.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let h = self.t_end / self.grid as f64;
        let u = (t / h).clamp(0.0, self.grid as f64);
        let i = (u.floor() as usize).min(self.grid - 1);
        let s = u - i as f64;
        self.density[i] * (1.0 - s) + self.density[i + 1] * s
    }

    /// `H = sigma(+0) - sigma(0)`, the weight at the origin.
    pub fn h(&self) -> Complex64 {
        self.active_atoms()
            .filter(|a| a.t == 0.0)
            .map(|a| a.weight)
            .sum()
    }

    /// Sum of `|weights|` plus the trapezoid mass of `|density|`.
    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.active_atoms().map(|a| a.weight.norm()).sum();
        let dens = match self.density_span() {
            None => 0.0,
            Some((lo, hi)) => {
                let h = self.t_end / self.grid as f64;
                let mut nodes = vec![lo];
                let first = (lo / h).floor() as usize + 1;
                for i in first..self.grid {
                    let x = i as f64 * h;
                    if x >= hi {
                        break;
                    }
                    nodes.push(x);
                }
                nodes.push(hi);
                nodes
                    .windows(2)
                    .map(|w| {
                        0.5 * (w[1] - w[0]) * (self.density_at(w[0]).norm() + self.density_at(w[1]).norm())
                    })
                    .sum()
            }
        };
        atoms + dens
    }

    /// Largest point of the support; `sigma` is constant beyond it.
    pub fn support_end(&self) -> f64 {
        let atoms = self
            .active_atoms()
            .filter(|a| a.weight != Complex64::new(0.0, 0.0))
            .map(|a| a.t)
            .fold(0.0_f64, f64::max);
        let dens = match self.density_span() {
            None => 0.0,
            Some((lo, hi)) => {
                // last nonzero sample bounds the support from above
                let h = self.t_end / self.grid as f64;
                match self.density.iter().rposition(|z| z.norm() > 0.0) {
                    None => 0.0,
                    Some(i) => hi.min(((i + 1) as f64 * h).min(self.t_end)).max(lo),
                }
            }
        };
        atoms.max(dens)
    }

    /// Restriction to `[0, a]`.
    pub fn truncate(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= self.t_end * (1.0 + 1e-14)) {
            return Err(Error::Domain(format!(
                "truncation point {a} outside (0, {}]",
                self.t_end
            )));
        }
        let w = self.effective_window();
        let mut out = self.clone();
        out.window = Some(Window {
            lo: w.lo,
            hi: w.hi.min(a),
            lo_closed: w.lo_closed,
        });
        if a >= self.t_end && self.window.is_none() {
            out.window = None;
        }
        Ok(out)
    }

    /// Restriction to `(lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi <= self.t_end * (1.0 + 1e-14)) {
            return Err(Error::Domain(format!(
                "window ({lo}, {hi}] outside [0, {}]",
                self.t_end
            )));
        }
        let w = self.effective_window();
        let mut out = self.clone();
        let (new_lo, closed) = if lo > w.lo {
            (lo, false)
        } else {
            (w.lo, w.lo_closed && lo < w.lo)
        };
        out.window = Some(Window {
            lo: new_lo,
            hi: w.hi.min(hi),
            lo_closed: closed,
        });
        Ok(out)
    }
}

/// A complete problem: coefficients and the two nonlocal forms.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub coeffs: Coefficients,
    pub u1: BoundaryMeasure,
    pub u2: BoundaryMeasure,
    pub strict_mode: bool,
}

#[derive(Serialize, Deserialize)]
struct MeasuresFile {
    u1: BoundaryMeasure,
    u2: BoundaryMeasure,
}

#[derive(Serialize, Deserialize)]
struct ProblemFile {
    coefficients: Coefficients,
    measures: MeasuresFile,
    #[serde(default = "default_strict")]
    strict_mode: bool,
}

fn default_strict() -> bool {
    true
}

impl ProblemSpec {
    pub fn new(
        coeffs: Coefficients,
        u1: BoundaryMeasure,
        u2: BoundaryMeasure,
        strict_mode: bool,
    ) -> Result<Self> {
        let mut spec = Self {
            coeffs,
            u1,
            u2,
            strict_mode,
        };
        spec.u1.attach(spec.coeffs.t_end);
        spec.u2.attach(spec.coeffs.t_end);
        spec.validate()?;
        Ok(spec)
    }

    /// `p = q = 0` on `(0, pi)` with `U_1(y) = y(0)` and `U_2(y) = y(pi/2)`.
    pub fn free() -> Self {
        let t = std::f64::consts::PI;
        Self::with_dirichlet(Coefficients::free(t), t / 2.0).expect("valid free problem")
    }

    /// `U_1(y) = y(0)`, `U_2(y) = y(a)`.
    pub fn with_dirichlet(coeffs: Coefficients, a: f64) -> Result<Self> {
        let t = coeffs.t_end;
        Self::new(
            coeffs,
            BoundaryMeasure::dirac(t, 0.0)?,
            BoundaryMeasure::dirac(t, a)?,
            true,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.coeffs.validate()?;
        self.u1.validate()?;
        self.u2.validate()?;
        if self.strict_mode && self.u1.h().norm() <= STRICT_H1_FLOOR {
            return Err(Error::Precondition(
                "strict mode requires H_1 != 0 (U_1 needs an atom at t = 0)".into(),
            ));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.coeffs.t_end
    }

    /// Same forms, different coefficients.
    pub fn with_coeffs(&self, coeffs: Coefficients) -> Result<Self> {
        Self::new(coeffs, self.u1.clone(), self.u2.clone(), self.strict_mode)
    }

    pub fn require_strict(&self) -> Result<()> {
        if !self.strict_mode {
            return Err(Error::Precondition("operation requires strict mode".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProblemFile {
            coefficients: self.coeffs.clone(),
            measures: MeasuresFile {
                u1: self.u1.clone(),
                u2: self.u2.clone(),
            },
            strict_mode: self.strict_mode,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        Self::new(
            file.coefficients,
            file.measures.u1,
            file.measures.u2,
            file.strict_mode,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn evaluate_examples() {
        let zero = Coefficients::free(PI);
        assert_eq!(zero.evaluate(Which::P, 1.0).unwrap(), c(0.0));

        let trig = Coefficients::new(PI, CoeffFn::sine(0.2, 4.0), CoeffFn::zero()).unwrap();
        let v = trig.evaluate(Which::P, PI / 8.0).unwrap();
        assert!((v - c(0.2)).norm() < 1e-15);

        let pl = Coefficients::new(
            PI,
            CoeffFn::zero(),
            CoeffFn::piecewise_linear(&[(0.0, 0.0), (PI, 2.0)]),
        )
        .unwrap();
        assert!((pl.evaluate(Which::Q, PI / 2.0).unwrap() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn evaluate_outside_domain() {
        let zero = Coefficients::free(PI);
        assert!(matches!(zero.evaluate(Which::P, -0.1), Err(Error::Domain(_))));
        assert!(matches!(zero.evaluate(Which::Q, PI + 0.1), Err(Error::Domain(_))));
        assert!(matches!(zero.integral_p(4.0), Err(Error::Domain(_))));
    }

    #[test]
    fn integral_examples() {
        let cst = Coefficients::new(PI, CoeffFn::constant(0.5), CoeffFn::zero()).unwrap();
        assert!((cst.integral_p(PI).unwrap() - c(0.5 * PI)).norm() < 1e-15);

        let trig = Coefficients::new(PI, CoeffFn::sine(0.2, 4.0), CoeffFn::zero()).unwrap();
        assert!(trig.integral_p(PI).unwrap().norm() < 1e-15);

        let pl = Coefficients::new(
            PI,
            CoeffFn::piecewise_linear(&[(0.0, 0.0), (PI, 2.0)]),
            CoeffFn::zero(),
        )
        .unwrap();
        assert!((pl.integral_p(PI).unwrap() - c(PI)).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(Coefficients::new(0.0, CoeffFn::zero(), CoeffFn::zero()).is_err());
        let bad = CoeffFn::piecewise_linear(&[(0.0, 1.0), (1.0, 2.0)]);
        assert!(Coefficients::new(PI, bad, CoeffFn::zero()).is_err());
    }

    #[test]
    fn reflection_matches_pointwise() {
        let p = CoeffFn::Trig {
            constant: c(0.1),
            terms: vec![TrigTerm {
                freq: 3.0,
                cos: Complex64::new(0.3, -0.2),
                sin: Complex64::new(-0.7, 0.4),
            }],
        };
        let q = CoeffFn::piecewise_linear(&[(0.0, 0.0), (1.0, 1.0), (PI, -0.5)]);
        let co = Coefficients::new(PI, p, q).unwrap();
        let r = co.reflect();
        for x in linspace(0.0, PI, 17) {
            assert!((r.p.value(x) - co.p.value(PI - x)).norm() < 1e-14);
            assert!((r.q.value(x) - co.q.value(PI - x)).norm() < 1e-14);
        }
    }

    #[test]
    fn truncate_examples() {
        let t = PI;
        let delta = BoundaryMeasure::dirac(t, 0.0).unwrap();
        let tr = delta.truncate(t / 2.0).unwrap();
        assert_eq!(tr.active_atoms().count(), 1);
        assert_eq!(tr.h(), c(1.0));
        assert_eq!(tr.total_variation(), delta.total_variation());

        let two = BoundaryMeasure::new(
            t,
            vec![Atom::from((0.0, 1.0, 0.0)), Atom::from((0.8 * t, 2.0, 0.0))],
            Vec::new(),
        )
        .unwrap();
        let tr = two.truncate(t / 2.0).unwrap();
        let kept: Vec<f64> = tr.active_atoms().map(|a| a.t).collect();
        assert_eq!(kept, vec![0.0]);

        let uni = BoundaryMeasure::uniform(t, c(1.0), 64).unwrap();
        let tr = uni.truncate(t / 2.0).unwrap();
        assert!((tr.total_variation() - uni.total_variation() / 2.0).abs() < 1e-14);
        // off-grid cut point
        let tr = uni.truncate(0.3 * t).unwrap();
        assert!((tr.total_variation() - 0.3 * t).abs() < 1e-14);
    }

    #[test]
    fn truncate_domain_errors() {
        let m = BoundaryMeasure::dirac(PI, 0.0).unwrap();
        assert!(matches!(m.truncate(0.0), Err(Error::Domain(_))));
        assert!(matches!(m.truncate(4.0), Err(Error::Domain(_))));
    }

    #[test]
    fn full_truncation_is_identity() {
        let m = BoundaryMeasure::new(
            PI,
            vec![Atom::from((0.0, 1.0, 0.5)), Atom::from((2.0, -0.3, 0.0))],
            vec![c(0.2); 33],
        )
        .unwrap();
        assert_eq!(m.truncate(PI).unwrap(), m);
    }

    #[test]
    fn restrict_excludes_lower_atoms() {
        let m = BoundaryMeasure::new(
            PI,
            vec![
                Atom::from((0.0, 1.0, 0.0)),
                Atom::from((1.0, 2.0, 0.0)),
                Atom::from((2.0, 3.0, 0.0)),
            ],
            Vec::new(),
        )
        .unwrap();
        let r = m.restrict(1.0, 2.0).unwrap();
        let kept: Vec<f64> = r.active_atoms().map(|a| a.t).collect();
        assert_eq!(kept, vec![2.0]);
        assert_eq!(r.h(), c(0.0));
    }

    #[test]
    fn strict_mode_requires_h1() {
        let t = PI;
        let co = Coefficients::free(t);
        let no_h = BoundaryMeasure::dirac(t, 1.0).unwrap();
        let u2 = BoundaryMeasure::dirac(t, 2.0).unwrap();
        assert!(matches!(
            ProblemSpec::new(co.clone(), no_h.clone(), u2.clone(), true),
            Err(Error::Precondition(_))
        ));
        assert!(ProblemSpec::new(co, no_h, u2, false).is_ok());
    }

    #[test]
    fn json_layout() {
        let p = ProblemSpec::free();
        let text = p.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["coefficients"]["T"], serde_json::json!(PI));
        assert_eq!(v["coefficients"]["p"]["family"], "constant");
        assert_eq!(v["measures"]["u1"]["atoms"][0], serde_json::json!([0.0, 1.0, 0.0]));
        assert_eq!(v["measures"]["u2"]["grid"], 0);
    }
}
