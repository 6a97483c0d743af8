//! Zeros of entire characteristic functions inside rectangles.
//!
//! Zeros are counted with the argument principle: the phase of `f` is
//! tracked along the boundary, with samples added until consecutive phases
//! differ by less than a fixed step. Boxes are split until each holds a
//! single zero or a tight cluster, then refined by Newton's method.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfns::{char_fn, CharName};
use crate::config::{OdeOptions, SpectraOptions};
use crate::error::{Error, Result};
use crate::model::ProblemSpec;

/// Axis-aligned box `[re_lo, re_hi] x [im_lo, im_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<Self> {
        let r = Rect {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        };
        let finite = [re_lo, re_hi, im_lo, im_hi].iter().all(|v| v.is_finite());
        if !finite || re_hi <= re_lo || im_hi <= im_lo {
            return Err(Error::Config(format!("degenerate box {r}")));
        }
        Ok(r)
    }

    pub fn width(&self) -> f64 {
        self.re_hi - self.re_lo
    }

    pub fn height(&self) -> f64 {
        self.im_hi - self.im_lo
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ]
    }

    fn grown(&self, d: f64) -> Rect {
        Rect {
            re_lo: self.re_lo - 0.618 * d,
            re_hi: self.re_hi + 0.382 * d,
            im_lo: self.im_lo - 0.414 * d,
            im_hi: self.im_hi + 0.586 * d,
        }
    }

    /// Children covering the box: two halves when elongated, else four
    /// quarters. `s` in (0, 1) places the cut.
    fn split(&self, s: f64) -> Vec<Rect> {
        let xm = self.re_lo + s * self.width();
        let ym = self.im_lo + s * self.height();
        let r = |a, b, c, d| Rect {
            re_lo: a,
            re_hi: b,
            im_lo: c,
            im_hi: d,
        };
        if self.width() > 2.0 * self.height() {
            vec![r(self.re_lo, xm, self.im_lo, self.im_hi), r(xm, self.re_hi, self.im_lo, self.im_hi)]
        } else if self.height() > 2.0 * self.width() {
            vec![r(self.re_lo, self.re_hi, self.im_lo, ym), r(self.re_lo, self.re_hi, ym, self.im_hi)]
        } else {
            vec![
                r(self.re_lo, xm, self.im_lo, ym),
                r(xm, self.re_hi, self.im_lo, ym),
                r(self.re_lo, xm, ym, self.im_hi),
                r(xm, self.re_hi, ym, self.im_hi),
            ]
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]x[{}, {}]", self.re_lo, self.re_hi, self.im_lo, self.im_hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectrumName {
    Xi,
    Lambda1,
    Lambda2,
    Lambda11,
    L0p,
    L1p,
    L2p,
}

impl SpectrumName {
    pub const ALL: [SpectrumName; 7] = [
        SpectrumName::Xi,
        SpectrumName::Lambda1,
        SpectrumName::Lambda2,
        SpectrumName::Lambda11,
        SpectrumName::L0p,
        SpectrumName::L1p,
        SpectrumName::L2p,
    ];

    /// The characteristic function whose zeros form this spectrum. The
    /// three Dirichlet spectra are `omega`, `Delta_1`, `Delta_2` of the
    /// problem with `U_1(y) = y(0)`, `U_2(y) = y(a)`.
    pub fn char_name(self) -> CharName {
        match self {
            SpectrumName::Xi | SpectrumName::L0p => CharName::Omega,
            SpectrumName::Lambda1 | SpectrumName::L1p => CharName::Delta1,
            SpectrumName::Lambda2 | SpectrumName::L2p => CharName::Delta2,
            SpectrumName::Lambda11 => CharName::Delta11,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumName::Xi => "Xi",
            SpectrumName::Lambda1 => "Lambda1",
            SpectrumName::Lambda2 => "Lambda2",
            SpectrumName::Lambda11 => "Lambda11",
            SpectrumName::L0p => "L0p",
            SpectrumName::L1p => "L1p",
            SpectrumName::L2p => "L2p",
        }
    }
}

impl fmt::Display for SpectrumName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectrumName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(n) = SpectrumName::ALL.into_iter().find(|n| n.as_str().eq_ignore_ascii_case(s)) {
            return Ok(n);
        }
        // also accept the characteristic function names
        match s.parse::<CharName>()? {
            CharName::Omega => Ok(SpectrumName::Xi),
            CharName::Delta1 => Ok(SpectrumName::Lambda1),
            CharName::Delta2 => Ok(SpectrumName::Lambda2),
            CharName::Delta11 => Ok(SpectrumName::Lambda11),
            n => Err(Error::Config(format!("{n} is meromorphic; spectra are zeros of entire functions"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub lambda: Complex64,
    pub multiplicity: usize,
    pub residual: f64,
}

/// A box known to hold `count` zeros that Newton could not resolve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub rect: Rect,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub name: Option<SpectrumName>,
    pub rect: Rect,
    pub roots: Vec<Root>,
    pub unresolved: Vec<Cluster>,
    pub residual_max: f64,
    /// Argument-principle count for `rect`.
    pub count: usize,
}

impl Spectrum {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum::<usize>()
            + self.unresolved.iter().map(|c| c.count).sum::<usize>()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.roots.iter().map(|r| r.lambda).collect()
    }

    /// CSV `(name, re_lambda, im_lambda, multiplicity, residual)`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "re_lambda", "im_lambda", "multiplicity", "residual"])?;
        let name = self.name.map_or("", |n| n.as_str());
        for r in &self.roots {
            w.write_record([
                name.to_string(),
                format!("{:e}", r.lambda.re),
                format!("{:e}", r.lambda.im),
                r.multiplicity.to_string(),
                format!("{:e}", r.residual),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates `f` at every point, in parallel.
fn eval_all<F>(f: &F, pts: &[Complex64]) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    pts.par_iter().map(|&z| f(z)).collect()
}

struct Winding {
    count: i64,
    median_abs: f64,
}

/// Winding number of `f` around `rect`, or `None` when a zero appears to sit
/// on (or extremely near) the boundary.
fn winding<F>(f: &F, rect: &Rect, opts: &SpectraOptions) -> Result<Option<Winding>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let corners = rect.corners();
    let perimeter = 2.0 * (rect.width() + rect.height());
    let min_len = 1e-10 * perimeter;
    // samples as (contour parameter, point, value)
    let mut ts: Vec<f64> = Vec::new();
    let mut pts: Vec<Complex64> = Vec::new();
    let mut acc = 0.0;
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let len = (b - a).norm();
        let m = ((len * opts.samples_per_unit).ceil() as usize).max(8);
        for i in 0..m {
            let s = i as f64 / m as f64;
            ts.push(acc + s * len);
            pts.push(a + (b - a) * s);
        }
        acc += len;
    }
    let point_at = |t: f64| -> Complex64 {
        let mut t = t;
        for k in 0..4 {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            let len = (b - a).norm();
            if t <= len || k == 3 {
                return a + (b - a) * (t / len).min(1.0);
            }
            t -= len;
        }
        unreachable!()
    };
    let mut vals = eval_all(f, &pts)?;
    let mut samples: Vec<(f64, Complex64)> = ts.into_iter().zip(vals.drain(..)).collect();
    let mut budget = 200_000usize;
    loop {
        let n = samples.len();
        let mut mids = Vec::new();
        for i in 0..n {
            let (t0, f0) = samples[i];
            let (t1, f1) = if i + 1 < n { samples[i + 1] } else { (perimeter, samples[0].1) };
            if f0 == Complex64::new(0.0, 0.0) || f1 == Complex64::new(0.0, 0.0) {
                return Ok(None);
            }
            if (f1 / f0).arg().abs() >= opts.max_phase_step {
                if t1 - t0 < min_len {
                    return Ok(None);
                }
                mids.push(0.5 * (t0 + t1));
            }
        }
        if mids.is_empty() {
            break;
        }
        if mids.len() > budget {
            return Err(Error::Search(format!("boundary sampling budget exhausted on {rect}")));
        }
        budget -= mids.len();
        let mp: Vec<Complex64> = mids.iter().map(|&t| point_at(t)).collect();
        let mv = eval_all(f, &mp)?;
        samples.extend(mids.into_iter().zip(mv));
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let n = samples.len();
    let mut mags: Vec<f64> = samples.iter().map(|s| s.1.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let median_abs = mags[n / 2];
    if mags[0] <= 1e-13 * median_abs {
        return Ok(None);
    }
    let total: f64 = (0..n)
        .map(|i| (samples[(i + 1) % n].1 / samples[i].1).arg())
        .sum();
    let w = total / (2.0 * std::f64::consts::PI);
    let count = w.round();
    if (w - count).abs() > 1e-3 {
        return Ok(None);
    }
    Ok(Some(Winding {
        count: count as i64,
        median_abs,
    }))
}

/// Outcome of [`count_zeros`]; `rect` is the box actually used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroCount {
    pub count: usize,
    pub rect: Rect,
    pub median_abs: f64,
}

/// Number of zeros (with multiplicity) of the entire function `f` inside
/// `rect`. A zero on the boundary makes the box grow slightly and retry.
pub fn count_zeros<F>(f: &F, rect: Rect, opts: &SpectraOptions) -> Result<ZeroCount>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let size = rect.width().max(rect.height());
    let mut r = rect;
    for attempt in 0..=opts.perturb_attempts {
        if attempt > 0 {
            r = rect.grown(1e-3 * size * attempt as f64);
            log::warn!("zero near the boundary of {rect}; retrying with {r}");
        }
        if let Some(w) = winding(f, &r, opts)? {
            if w.count < 0 {
                return Err(Error::Search(format!(
                    "negative winding number {} on {r}: function has poles",
                    w.count
                )));
            }
            return Ok(ZeroCount {
                count: w.count as usize,
                rect: r,
                median_abs: w.median_abs,
            });
        }
    }
    Err(Error::Search(format!(
        "zero on the boundary of {rect} after {} perturbations",
        opts.perturb_attempts
    )))
}

fn derivative<F>(f: &F, z: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let h = 1e-6 * (1.0 + z.norm());
    let (a, b) = rayon::join(|| f(z + h), || f(z - h));
    Ok((a? - b?) / (2.0 * h))
}

/// Newton (modified for multiplicity `m`) from `z0`. Returns the best point
/// if it converged, else `None`.
fn newton<F>(f: &F, z0: Complex64, m: usize, opts: &SpectraOptions, accept: f64) -> Result<Option<(Complex64, f64)>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut z = z0;
    let mut fz = f(z)?;
    let mut best = (z, fz.norm());
    for _ in 0..opts.max_newton {
        if fz == Complex64::new(0.0, 0.0) {
            return Ok(Some((z, 0.0)));
        }
        let d = derivative(f, z)?;
        if d == Complex64::new(0.0, 0.0) || !(d.re.is_finite() && d.im.is_finite()) {
            break;
        }
        let step = fz / d * m as f64;
        let znew = z - step;
        let fnew = f(znew)?;
        let small = step.norm() < opts.root_tol * (1.0 + z.norm());
        // below the residual tolerance and no longer improving: noise floor
        let stalled = fnew.norm() >= fz.norm() && best.1 <= accept;
        if fnew.norm() < best.1 {
            best = (znew, fnew.norm());
        }
        if small || stalled {
            return Ok((best.1 <= accept).then_some(best));
        }
        if step.norm() > 1e3 * (1.0 + z0.norm()) {
            break;
        }
        z = znew;
        fz = fnew;
    }
    Ok((best.1 <= accept).then_some(best))
}

struct Search<'a, F> {
    f: &'a F,
    opts: &'a SpectraOptions,
    accept: f64,
}

impl<F> Search<'_, F>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    fn count(&self, r: &Rect) -> Result<Option<usize>> {
        Ok(winding(self.f, r, self.opts)?.map(|w| w.count.max(0) as usize))
    }

    fn children(&self, rect: &Rect, count: usize) -> Result<Vec<(Rect, usize)>> {
        for k in 0..=self.opts.perturb_attempts {
            let s = 0.5 + [0.0, 0.0371, -0.0529, 0.0713, -0.0891, 0.1049][k % 6];
            let kids = rect.split(s);
            let counts: Vec<Option<usize>> = kids
                .par_iter()
                .map(|r| self.count(r))
                .collect::<Result<_>>()?;
            if counts.iter().all(Option::is_some) {
                let c: Vec<usize> = counts.into_iter().map(Option::unwrap).collect();
                if c.iter().sum::<usize>() == count {
                    return Ok(kids.into_iter().zip(c).filter(|(_, c)| *c > 0).collect());
                }
            }
        }
        Err(Error::Search(format!(
            "could not split {rect} consistently ({count} zeros)"
        )))
    }

    fn run(&self, rect: Rect, count: usize, out: &mut Vec<Root>, bad: &mut Vec<Cluster>) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        let c = rect.center();
        let tiny = rect.width().max(rect.height()) < self.opts.cluster_size * (1.0 + c.norm());
        if count == 1 || tiny {
            if let Some((z, res)) = newton(self.f, c, count, self.opts, self.accept)? {
                if rect.contains(z) || (tiny && (z - c).norm() < rect.width() + rect.height()) {
                    out.push(Root {
                        lambda: z,
                        multiplicity: count,
                        residual: res,
                    });
                    return Ok(());
                }
            }
            if tiny {
                bad.push(Cluster { rect, count });
                return Ok(());
            }
        }
        let kids = self.children(&rect, count)?;
        let results: Vec<(Vec<Root>, Vec<Cluster>)> = kids
            .into_par_iter()
            .map(|(r, k)| {
                let (mut o, mut b) = (Vec::new(), Vec::new());
                self.run(r, k, &mut o, &mut b).map(|_| (o, b))
            })
            .collect::<Result<_>>()?;
        for (o, b) in results {
            out.extend(o);
            bad.extend(b);
        }
        Ok(())
    }
}

/// All zeros of `f` inside `rect`, each refined by Newton's method.
pub fn find_zeros<F>(f: &F, rect: Rect, opts: &SpectraOptions) -> Result<Spectrum>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let top = count_zeros(f, rect, opts)?;
    let accept = opts.residual_tol * top.median_abs.max(1.0);
    let search = Search { f, opts, accept };
    let (mut roots, mut bad) = (Vec::new(), Vec::new());
    search.run(top.rect, top.count, &mut roots, &mut bad)?;
    roots.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    bad.sort_by(|a, b| a.rect.re_lo.total_cmp(&b.rect.re_lo).then(a.rect.im_lo.total_cmp(&b.rect.im_lo)));
    for c in &bad {
        log::warn!("unresolved cluster of {} zeros in {}", c.count, c.rect);
    }
    let residual_max = roots.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(Spectrum {
        name: None,
        rect: top.rect,
        roots,
        unresolved: bad,
        residual_max,
        count: top.count,
    })
}

/// The named spectrum of `problem` inside `rect`.
pub fn find_spectrum(
    problem: &ProblemSpec,
    name: SpectrumName,
    rect: Rect,
    sopts: &SpectraOptions,
    oopts: &OdeOptions,
) -> Result<Spectrum> {
    let f = char_fn(problem, name.char_name(), oopts);
    let mut s = find_zeros(&f, rect, sopts)?;
    s.name = Some(name);
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConditionReport {
    Holds { min_distance: f64 },
    Fails { left: Complex64, right: Complex64 },
    Undecided { min_distance: f64 },
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionReport::Holds { .. })
    }

    pub fn fails(&self) -> bool {
        matches!(self, ConditionReport::Fails { .. })
    }
}

/// Disjointness of two spectra: fails if some pair is within `gap`, holds
/// if every pair is farther apart than `10 * gap`.
pub fn check_condition_s(a: &Spectrum, b: &Spectrum, gap: f64) -> ConditionReport {
    if a.rect != b.rect {
        log::warn!("condition check on spectra from different boxes ({} vs {})", a.rect, b.rect);
    }
    check_disjoint(&a.values(), &b.values(), gap)
}

pub fn check_disjoint(a: &[Complex64], b: &[Complex64], gap: f64) -> ConditionReport {
    let mut best: Option<(f64, Complex64, Complex64)> = None;
    for &x in a {
        for &y in b {
            let d = (x - y).norm();
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, x, y));
            }
        }
    }
    match best {
        None => ConditionReport::Holds {
            min_distance: f64::INFINITY,
        },
        Some((d, x, y)) if d <= gap => ConditionReport::Fails { left: x, right: y },
        Some((d, _, _)) if d > 10.0 * gap => ConditionReport::Holds { min_distance: d },
        Some((d, _, _)) => ConditionReport::Undecided { min_distance: d },
    }
}

/// Leading-order eigenvalue locations, for sizing search boxes.
pub fn seed_guesses(
    problem: &ProblemSpec,
    name: SpectrumName,
    n_range: std::ops::RangeInclusive<i64>,
) -> Result<Vec<Complex64>> {
    problem.require_strict()?;
    let t = problem.t_end();
    let pt = problem.coeffs.integral_p(t)?;
    let shift = match name {
        SpectrumName::Lambda1 | SpectrumName::L1p => 0.0,
        SpectrumName::Lambda11 => 0.5,
        other => {
            return Err(Error::Config(format!("no seed formula for {other}")));
        }
    };
    Ok(n_range
        .map(|n| (std::f64::consts::PI * (n as f64 + shift) + pt) / t)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryMeasure, Coefficients, CoeffFn};
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn so() -> SpectraOptions {
        SpectraOptions::default()
    }

    fn rect(a: f64, b: f64, c: f64, d: f64) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    #[test]
    fn counts_polynomial_zeros() {
        let f = |z: Complex64| Ok((z - 1.0) * (z - c(2.0)) * (z - Complex64::new(0.5, 0.5)));
        assert_eq!(count_zeros(&f, rect(0.0, 3.0, -1.0, 1.0), &so()).unwrap().count, 3);
        assert_eq!(count_zeros(&f, rect(1.5, 3.0, -1.0, 1.0), &so()).unwrap().count, 1);
        // zero on the boundary: box grows and still counts it
        let z = count_zeros(&f, rect(2.0, 3.0, -1.0, 1.0), &so()).unwrap();
        assert_eq!(z.count, 1);
        assert!(z.rect.re_lo < 2.0);
    }

    #[test]
    fn free_closed_forms() {
        let p = ProblemSpec::free();
        let o = OdeOptions::default();
        let d1 = char_fn(&p, CharName::Delta1, &o);
        assert_eq!(count_zeros(&d1, rect(0.5, 3.5, -1.0, 1.0), &so()).unwrap().count, 3);
        let d11 = char_fn(&p, CharName::Delta11, &o);
        assert_eq!(count_zeros(&d11, rect(0.0, 2.0, -1.0, 1.0), &so()).unwrap().count, 2);

        let s = find_spectrum(&p, SpectrumName::Lambda1, rect(0.5, 3.5, -1.0, 1.0), &so(), &o).unwrap();
        assert_eq!(s.roots.len(), 3);
        for (r, want) in s.roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((r.lambda - c(want)).norm() < 1e-9, "{}", r.lambda);
            assert_eq!(r.multiplicity, 1);
        }
        assert_eq!(s.total_multiplicity(), s.count);
    }

    #[test]
    fn omega_double_zero() {
        // U_1 = delta_0, U_2 = uniform density: omega = (1 - cos(pi lambda)) / lambda^2
        let u2 = BoundaryMeasure::uniform(PI, c(1.0), 1024).unwrap();
        let p = ProblemSpec::new(Coefficients::free(PI), BoundaryMeasure::dirac(PI, 0.0).unwrap(), u2, true).unwrap();
        let o = OdeOptions::default();
        let oracle = |z: Complex64| (1.0 - (z * PI).cos()) / (z * z);
        let w = char_fn(&p, CharName::Omega, &o);
        let z = Complex64::new(1.3, 0.2);
        assert!((w(z).unwrap() - oracle(z)).norm() < 1e-5);
        // oracle: the only zero of 1 - cos(pi z) in the box is z = 2, of order 2
        assert_eq!(count_zeros(&oracle_fn(oracle), rect(1.0, 3.0, -1.0, 1.0), &so()).unwrap().count, 2);
        let s = find_zeros(&w, rect(1.0, 3.0, -1.0, 1.0), &so()).unwrap();
        assert_eq!(s.count, 2);
        assert_eq!(s.roots.len(), 1);
        assert_eq!(s.roots[0].multiplicity, 2);
        assert!((s.roots[0].lambda - c(2.0)).norm() < 1e-4);
    }

    fn oracle_fn(g: impl Fn(Complex64) -> Complex64 + Sync) -> impl Fn(Complex64) -> Result<Complex64> + Sync {
        move |z| Ok(g(z))
    }

    #[test]
    fn constant_p_root() {
        let co = Coefficients::new(PI, CoeffFn::constant(0.5), CoeffFn::zero()).unwrap();
        let p = ProblemSpec::with_dirichlet(co, PI / 2.0).unwrap();
        let s = find_spectrum(&p, SpectrumName::Lambda1, rect(1.0, 2.0, -1.0, 1.0), &so(), &OdeOptions::default()).unwrap();
        assert_eq!(s.roots.len(), 1);
        assert!((s.roots[0].lambda - c(0.5 + 1.25f64.sqrt())).norm() < 1e-9);
    }

    #[test]
    fn condition_examples() {
        let z = |v: &[f64]| v.iter().map(|&x| c(x)).collect::<Vec<_>>();
        assert!(check_disjoint(&z(&[2.0, 4.0]), &z(&[1.0, 3.0]), 1e-6).holds());
        let r = check_disjoint(&z(&[2.0]), &z(&[2.0]), 1e-6);
        assert_eq!(r, ConditionReport::Fails { left: c(2.0), right: c(2.0) });
        assert!(matches!(
            check_disjoint(&z(&[2.0]), &z(&[2.0 + 5e-6]), 1e-6),
            ConditionReport::Undecided { .. }
        ));
    }

    #[test]
    fn seeds() {
        let p = ProblemSpec::free();
        assert_eq!(seed_guesses(&p, SpectrumName::Lambda1, 1..=3).unwrap(), vec![c(1.0), c(2.0), c(3.0)]);
        assert_eq!(seed_guesses(&p, SpectrumName::Lambda11, 0..=0).unwrap(), vec![c(0.5)]);
        let co = Coefficients::new(PI, CoeffFn::constant(0.5), CoeffFn::zero()).unwrap();
        let q = ProblemSpec::with_dirichlet(co, 1.0).unwrap();
        let s = seed_guesses(&q, SpectrumName::Lambda1, 2..=2).unwrap();
        assert!((s[0] - c(2.5)).norm() < 1e-14);
        let mut loose = ProblemSpec::free();
        loose.strict_mode = false;
        assert!(matches!(seed_guesses(&loose, SpectrumName::Lambda1, 1..=1), Err(Error::Precondition(_))));
    }

    #[test]
    fn degenerate_box() {
        assert!(Rect::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Rect::new(0.0, 1.0, 2.0, -1.0).is_err());
    }
}
