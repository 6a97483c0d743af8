//! Recovery of a parametrized `(p, q)` from spectral data by damped
//! Gauss-Newton (Levenberg-Marquardt with Marquardt scaling).
//!
//! Residuals are characteristic-function values at the target data: for
//! spectra, the functions evaluated at the target eigenvalues (zero exactly
//! when every target is an eigenvalue), for Weyl data the mismatch of `M`
//! and `omega` at the sample points.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfns::{eval_char, CharName, EvalPath};
use crate::config::{OdeOptions, SolverOptions, SpectraOptions};
use crate::error::{Error, Result};
use crate::model::{BoundaryMeasure, CoeffFn, Coefficients, ProblemSpec, TrigTerm};
use crate::spectra::{check_condition_s, find_spectrum, ConditionReport, Rect, SpectrumName};

/// One basis function of a coefficient expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFn {
    Constant,
    Cos { freq: f64 },
    Sin { freq: f64 },
}

impl BasisFn {
    fn integral(&self, t: f64) -> f64 {
        match *self {
            BasisFn::Constant => t,
            BasisFn::Cos { freq } if freq == 0.0 => t,
            BasisFn::Cos { freq } => (freq * t).sin() / freq,
            BasisFn::Sin { freq } if freq == 0.0 => 0.0,
            BasisFn::Sin { freq } => (1.0 - (freq * t).cos()) / freq,
        }
    }
}

/// `p = mean + sum a_k p_k`, `q = sum b_k q_k` with real parameters
/// `(a_1, .., a_m, b_1, .., b_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parametrization {
    pub p: Vec<BasisFn>,
    pub q: Vec<BasisFn>,
}

fn expand(basis: &[BasisFn], params: &[f64], constant: Complex64) -> CoeffFn {
    let mut c = constant;
    let mut terms = Vec::new();
    for (b, &v) in basis.iter().zip(params) {
        match *b {
            BasisFn::Constant => c += v,
            BasisFn::Cos { freq } => terms.push(TrigTerm {
                freq,
                cos: Complex64::new(v, 0.0),
                sin: Complex64::new(0.0, 0.0),
            }),
            BasisFn::Sin { freq } => terms.push(TrigTerm {
                freq,
                cos: Complex64::new(0.0, 0.0),
                sin: Complex64::new(v, 0.0),
            }),
        }
    }
    CoeffFn::Trig { constant: c, terms }
}

impl Parametrization {
    pub fn dim(&self) -> usize {
        self.p.len() + self.q.len()
    }

    pub fn validate(&self, t_end: f64, fixed_integral_p: Option<Complex64>) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Config("parametrization has no parameters".into()));
        }
        if fixed_integral_p.is_some() {
            for b in &self.p {
                if b.integral(t_end).abs() > 1e-10 * t_end {
                    return Err(Error::Config(format!(
                        "p basis function {b:?} has nonzero mean on [0, {t_end}] but the integral of p is fixed"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn coefficients(&self, t_end: f64, fixed_integral_p: Option<Complex64>, params: &[f64]) -> Result<Coefficients> {
        if params.len() != self.dim() {
            return Err(Error::Config(format!(
                "expected {} parameters, got {}",
                self.dim(),
                params.len()
            )));
        }
        let mean = fixed_integral_p.map_or(Complex64::new(0.0, 0.0), |i| i / t_end);
        let (a, b) = params.split_at(self.p.len());
        Coefficients::new(
            t_end,
            expand(&self.p, a, mean),
            expand(&self.q, b, Complex64::new(0.0, 0.0)),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylSample {
    pub lambda: Complex64,
    pub m: Complex64,
    pub omega: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InverseData {
    WeylAndOmega {
        samples: Vec<WeylSample>,
    },
    TwoSpectra {
        lambda1: Vec<Complex64>,
        lambda11: Vec<Complex64>,
    },
    /// Dirichlet spectra on `(0, a)`, `(0, T)` and `(a, T)`.
    ThreeSpectra {
        a: f64,
        l0: Vec<Complex64>,
        l1: Vec<Complex64>,
        l2: Vec<Complex64>,
    },
}

impl InverseData {
    pub fn kind(&self) -> &'static str {
        match self {
            InverseData::WeylAndOmega { .. } => "weyl_and_omega",
            InverseData::TwoSpectra { .. } => "two_spectra",
            InverseData::ThreeSpectra { .. } => "three_spectra",
        }
    }

    fn len(&self) -> usize {
        match self {
            InverseData::WeylAndOmega { samples } => samples.len(),
            InverseData::TwoSpectra { lambda1, lambda11 } => lambda1.len() + lambda11.len(),
            InverseData::ThreeSpectra { l0, l1, l2, .. } => l0.len() + l1.len() + l2.len(),
        }
    }

    fn lambdas(&self) -> Vec<Complex64> {
        match self {
            InverseData::WeylAndOmega { samples } => samples.iter().map(|s| s.lambda).collect(),
            InverseData::TwoSpectra { lambda1, lambda11 } => lambda1.iter().chain(lambda11).copied().collect(),
            InverseData::ThreeSpectra { l0, l1, l2, .. } => l0.iter().chain(l1).chain(l2).copied().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormsSpec {
    pub u1: BoundaryMeasure,
    pub u2: BoundaryMeasure,
}

/// An inverse run: what is known a priori, the data, and where to start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub parametrization: Parametrization,
    /// `\int_0^T p`; `None` leaves the mean of `p` free.
    pub fixed_integral_p: Option<Complex64>,
    /// Known forms `U_1`, `U_2`; unused for three spectra (`y(0)`, `y(a)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measures: Option<FormsSpec>,
    pub data: InverseData,
    pub start: Vec<f64>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Weyl samples closer than this to a pole of `M` are dropped.
    #[serde(default = "default_gap")]
    pub min_gap: f64,
    /// Box for the condition-S report; derived from the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_box: Option<Rect>,
}

fn default_gap() -> f64 {
    1e-6
}

impl InverseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) {
            return Err(Error::Config("T must be positive".into()));
        }
        self.parametrization.validate(self.t_end, self.fixed_integral_p)?;
        if self.start.len() != self.parametrization.dim() {
            return Err(Error::Config(format!(
                "start has {} entries, parametrization needs {}",
                self.start.len(),
                self.parametrization.dim()
            )));
        }
        if self.data.len() == 0 {
            return Err(Error::Config("inverse data is empty".into()));
        }
        match &self.data {
            InverseData::ThreeSpectra { a, .. } => {
                if !(*a > 0.0 && *a < self.t_end) {
                    return Err(Error::Config(format!("split point a = {a} must lie in (0, T)")));
                }
            }
            _ => {
                if self.measures.is_none() {
                    return Err(Error::Config(format!("{} data needs the forms U_1, U_2", self.data.kind())));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The forward problem for a parameter vector.
    pub fn problem(&self, params: &[f64]) -> Result<ProblemSpec> {
        let coeffs = self
            .parametrization
            .coefficients(self.t_end, self.fixed_integral_p, params)?;
        match &self.data {
            InverseData::ThreeSpectra { a, .. } => ProblemSpec::with_dirichlet(coeffs, *a),
            _ => {
                let m = self
                    .measures
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing forms".into()))?;
                ProblemSpec::new(coeffs, m.u1.clone(), m.u2.clone(), true)
            }
        }
    }

    fn default_box(&self) -> Rect {
        let ls = self.data.lambdas();
        let lo = ls.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
        let hi = ls.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let ilo = ls.iter().map(|l| l.im).fold(f64::INFINITY, f64::min);
        let ihi = ls.iter().map(|l| l.im).fold(f64::NEG_INFINITY, f64::max);
        Rect {
            re_lo: lo - 0.37,
            re_hi: hi + 0.41,
            im_lo: ilo - 1.0,
            im_hi: ihi + 1.0,
        }
    }
}

/// The residual map with its active sample set fixed.
pub struct Residual<'a> {
    config: &'a InverseConfig,
    opts: OdeOptions,
    weyl_active: Vec<WeylSample>,
}

fn push_c(out: &mut Vec<f64>, z: Complex64) {
    out.push(z.re);
    out.push(z.im);
}

impl<'a> Residual<'a> {
    /// Fixes the active set at `params`: Weyl samples at a pole of `M` are
    /// dropped (with a warning).
    pub fn new(config: &'a InverseConfig, params: &[f64], opts: &OdeOptions) -> Result<Self> {
        config.validate()?;
        let mut weyl_active = Vec::new();
        if let InverseData::WeylAndOmega { samples } = &config.data {
            let problem = config.problem(params)?;
            let d1: Vec<Result<Complex64>> = samples
                .par_iter()
                .map(|s| Ok(eval_char(&problem, CharName::Delta1, s.lambda, EvalPath::ViaZ, opts)?.value))
                .collect();
            for (s, d) in samples.iter().zip(d1) {
                let d = d?;
                let m = eval_char(&problem, CharName::WeylM, s.lambda, EvalPath::Ratio, opts);
                if d.norm() < config.min_gap || matches!(m, Err(Error::Pole { .. })) {
                    log::warn!("dropping Weyl sample at lambda = {}: pole of M", s.lambda);
                } else {
                    weyl_active.push(*s);
                }
            }
            if weyl_active.is_empty() {
                return Err(Error::Config("every Weyl sample sits on a pole".into()));
            }
        }
        Ok(Self {
            config,
            opts: *opts,
            weyl_active,
        })
    }

    pub fn active_weyl(&self) -> &[WeylSample] {
        &self.weyl_active
    }

    pub fn eval(&self, params: &[f64]) -> Result<Vec<f64>> {
        let problem = self.config.problem(params)?;
        let o = &self.opts;
        let jobs: Vec<(CharName, Complex64, Complex64)> = match &self.config.data {
            InverseData::WeylAndOmega { .. } => self
                .weyl_active
                .iter()
                .flat_map(|s| [(CharName::WeylM, s.lambda, s.m), (CharName::Omega, s.lambda, s.omega)])
                .collect(),
            InverseData::TwoSpectra { lambda1, lambda11 } => lambda1
                .iter()
                .map(|&l| (CharName::Delta1, l, Complex64::new(0.0, 0.0)))
                .chain(lambda11.iter().map(|&l| (CharName::Delta11, l, Complex64::new(0.0, 0.0))))
                .collect(),
            InverseData::ThreeSpectra { l0, l1, l2, .. } => {
                let z = Complex64::new(0.0, 0.0);
                l0.iter()
                    .map(|&l| (CharName::Omega, l, z))
                    .chain(l1.iter().map(|&l| (CharName::Delta1, l, z)))
                    .chain(l2.iter().map(|&l| (CharName::Delta2, l, z)))
                    .collect()
            }
        };
        let vals: Vec<Complex64> = jobs
            .par_iter()
            .map(|&(name, l, target)| {
                Ok(eval_char(&problem, name, l, name.default_path(), o)?.value - target)
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(2 * vals.len());
        for v in vals {
            push_c(&mut out, v);
        }
        Ok(out)
    }

    /// Forward-difference Jacobian, one column per parameter.
    pub fn jacobian(&self, params: &[f64], r0: &[f64], step: f64) -> Result<DMatrix<f64>> {
        let cols: Vec<Vec<f64>> = (0..params.len())
            .into_par_iter()
            .map(|j| {
                let mut p = params.to_vec();
                p[j] += step;
                let r = self.eval(&p)?;
                Ok(r.iter().zip(r0).map(|(a, b)| (a - b) / step).collect())
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(r0.len(), params.len(), |i, j| cols[j][i]))
    }

    /// Largest relative difference between forward- and central-difference
    /// Jacobian columns.
    pub fn jacobian_check(&self, params: &[f64], step: f64) -> Result<f64> {
        let r0 = self.eval(params)?;
        let fwd = self.jacobian(params, &r0, step)?;
        let mut worst = 0.0f64;
        for j in 0..params.len() {
            let (mut a, mut b) = (params.to_vec(), params.to_vec());
            a[j] += step;
            b[j] -= step;
            let (ra, rb) = (self.eval(&a)?, self.eval(&b)?);
            let central = DVector::from_iterator(r0.len(), ra.iter().zip(&rb).map(|(x, y)| (x - y) / (2.0 * step)));
            let col = fwd.column(j);
            let diff = (col - &central).norm();
            worst = worst.max(diff / central.norm().max(1e-300));
        }
        Ok(worst)
    }
}

/// `residual(config, params)`: the stacked real and imaginary parts.
pub fn residual(config: &InverseConfig, params: &[f64], opts: &OdeOptions) -> Result<Vec<f64>> {
    Residual::new(config, params, opts)?.eval(params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub damping: f64,
    pub residual_norm: f64,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseResult {
    pub coefficients: Coefficients,
    pub params: Vec<f64>,
    pub final_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub condition_s_report: Option<ConditionReport>,
    pub log: Vec<IterRecord>,
}

impl InverseResult {
    /// CSV `(iter, damping, residual_norm, p0, p1, ...)`.
    pub fn write_log_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.params.len();
        let mut header = vec!["iter".to_string(), "damping".into(), "residual_norm".into()];
        header.extend((0..n).map(|i| format!("param{i}")));
        w.write_record(&header)?;
        for r in &self.log {
            let mut row = vec![r.iter.to_string(), format!("{:e}", r.damping), format!("{:e}", r.residual_norm)];
            row.extend(r.params.iter().map(|v| format!("{v:e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

enum Step {
    Solved(DVector<f64>),
    Singular,
}

fn lm_step(jac: &DMatrix<f64>, r: &[f64], mu: f64) -> Step {
    let jt = jac.transpose();
    let a = &jt * jac;
    let g = &jt * DVector::from_column_slice(r);
    let dmax = a.diagonal().max();
    if !(dmax > 0.0 && dmax.is_finite()) {
        return Step::Singular;
    }
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += mu * a[(i, i)].max(1e-12 * dmax);
    }
    match m.cholesky() {
        Some(ch) => {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                Step::Solved(d)
            } else {
                Step::Singular
            }
        }
        None => Step::Singular,
    }
}

/// Damped Gauss-Newton from `config.start`.
pub fn solve(config: &InverseConfig, ode: &OdeOptions, spectra: &SpectraOptions) -> Result<InverseResult> {
    let res = Residual::new(config, &config.start, ode)?;
    let mut best = descend(&res, config.start.clone(), &config.solver);
    let seeds = match &best {
        Ok(run) if run.converged => vec![],
        _ => mean_seeds(config, &config.start)?,
    };
    for seed in seeds {
        log::info!("restarting from asymptotic p-mean seed {seed:?}");
        let run = descend(&res, seed, &config.solver);
        best = match (best, run) {
            (Ok(a), Ok(b)) => Ok(if b.residual < a.residual { b } else { a }),
            (Err(_), Ok(b)) => Ok(b),
            (a, Err(_)) => a,
        };
        if matches!(&best, Ok(run) if run.converged) {
            break;
        }
    }
    let Run {
        params,
        residual,
        iterations,
        converged,
        log,
    } = best?;
    let coefficients = config
        .parametrization
        .coefficients(config.t_end, config.fixed_integral_p, &params)?;
    let condition_s_report = condition_report(config, &params, ode, spectra)
        .map_err(|e| log::warn!("condition report unavailable: {e}"))
        .ok();
    Ok(InverseResult {
        coefficients,
        params,
        final_residual: residual,
        iterations,
        converged,
        condition_s_report,
        log,
    })
}

struct Run {
    params: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
    log: Vec<IterRecord>,
}

fn descend(res: &Residual, mut params: Vec<f64>, so: &SolverOptions) -> Result<Run> {
    let mut r = res.eval(&params)?;
    let mut rn = norm(&r);
    let mut mu = so.damping;
    let mut log = vec![IterRecord {
        iter: 0,
        damping: mu,
        residual_norm: rn,
        params: params.clone(),
    }];
    let mut iterations = 0;
    while rn >= so.tol && iterations < so.max_iter {
        let jac = res.jacobian(&params, &r, so.fd_step)?;
        let mut accepted = None;
        let mut singular = 0;
        for _ in 0..=so.max_escalations {
            match lm_step(&jac, &r, mu) {
                Step::Singular => singular += 1,
                Step::Solved(d) => {
                    let trial: Vec<f64> = params.iter().zip(d.iter()).map(|(p, s)| p + s).collect();
                    match res.eval(&trial) {
                        Ok(rt) if norm(&rt) < rn => {
                            accepted = Some((trial, rt, d.norm()));
                            break;
                        }
                        Ok(_) | Err(Error::Pole { .. }) | Err(Error::Integration(_)) | Err(Error::Overflow { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            mu *= 10.0;
        }
        iterations += 1;
        let Some((trial, rt, step)) = accepted else {
            if singular > so.max_escalations {
                return Err(Error::SingularJacobian {
                    escalations: so.max_escalations,
                });
            }
            if rn < so.tol * 1e3 {
                log::warn!("stopped at the noise floor with residual {rn:e}");
                break;
            }
            return Err(Error::Divergence(format!(
                "no decrease after {} damping escalations at residual {rn:e}",
                so.max_escalations
            )));
        };
        params = trial;
        r = rt;
        rn = norm(&r);
        mu = (mu / 10.0).max(1e-12);
        log.push(IterRecord {
            iter: iterations,
            damping: mu,
            residual_norm: rn,
            params: params.clone(),
        });
        log::info!("iteration {iterations}: residual {rn:e}");
        if step < 1e-14 * (1.0 + norm(&params)) {
            break;
        }
    }
    Ok(Run {
        params,
        residual: rn,
        iterations,
        converged: rn < so.tol,
        log,
    })
}

/// Starting points that move a free mean of `p` onto the branches
/// `\int_0^T p = P + k pi` suggested by the high roots, where the roots sit
/// near `(pi n + P) / T` (Dirichlet-type) or `(pi (n + 1/2) + P) / T`.
fn mean_seeds(config: &InverseConfig, start: &[f64]) -> Result<Vec<Vec<f64>>> {
    if config.fixed_integral_p.is_some() {
        return Ok(vec![]);
    }
    let Some(j) = config.parametrization.p.iter().position(|b| *b == BasisFn::Constant) else {
        return Ok(vec![]);
    };
    let t = config.t_end;
    let (whole, half): (&[Complex64], &[Complex64]) = match &config.data {
        InverseData::TwoSpectra { lambda1, lambda11 } => (lambda1, lambda11),
        InverseData::ThreeSpectra { l1, .. } => (l1, &[]),
        InverseData::WeylAndOmega { .. } => return Ok(vec![]),
    };
    let mut z = Complex64::new(0.0, 0.0);
    for (ls, sign) in [(whole, 1.0), (half, -1.0)] {
        for l in ls {
            z += sign * l.norm() * Complex64::from_polar(1.0, 2.0 * l.re * t);
        }
    }
    if z.norm() == 0.0 {
        return Ok(vec![]);
    }
    let p0 = z.arg() / 2.0;
    let current = config
        .parametrization
        .coefficients(t, None, start)?
        .integral_p(t)?
        .re;
    let k = ((current - p0) / PI).floor();
    Ok([k, k + 1.0]
        .iter()
        .map(|k| {
            let mut c = start.to_vec();
            c[j] += (p0 + k * PI - current) / t;
            c
        })
        .collect())
}

/// The disjointness condition relevant to the data kind, at `params`.
pub fn condition_report(
    config: &InverseConfig,
    params: &[f64],
    ode: &OdeOptions,
    spectra: &SpectraOptions,
) -> Result<ConditionReport> {
    let problem = config.problem(params)?;
    let rect = config.condition_box.unwrap_or_else(|| config.default_box());
    let (a, b) = match config.data {
        InverseData::WeylAndOmega { .. } => (SpectrumName::Xi, SpectrumName::Lambda1),
        InverseData::TwoSpectra { .. } => (SpectrumName::Lambda1, SpectrumName::Lambda11),
        InverseData::ThreeSpectra { .. } => (SpectrumName::L0p, SpectrumName::L1p),
    };
    let (sa, sb) = rayon::join(
        || find_spectrum(&problem, a, rect, spectra, ode),
        || find_spectrum(&problem, b, rect, spectra, ode),
    );
    Ok(check_condition_s(&sa?, &sb?, config.min_gap))
}

/// A finite Hadamard product `norm * lambda^m * prod (1 - lambda / lambda_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HadamardProduct {
    pub normalization: Complex64,
    pub zero_order: usize,
    pub roots: Vec<Complex64>,
}

impl HadamardProduct {
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let mut v = self.normalization * lambda.powu(self.zero_order as u32);
        for r in &self.roots {
            v *= Complex64::new(1.0, 0.0) - lambda / r;
        }
        v
    }
}

/// Entire function rebuilt from its zeros. `normalization` is the value at
/// 0 of `f(lambda) / lambda^m`, where `m` is the number of roots at 0. Roots
/// should come in pairs symmetric about the asymptotic centre so that the
/// partial products converge without exponential factors.
pub fn char_from_zeros(roots: &[Complex64], normalization: Complex64) -> Result<HadamardProduct> {
    if normalization == Complex64::new(0.0, 0.0) {
        return Err(Error::Config("normalization must be nonzero".into()));
    }
    let at_zero = |r: &Complex64| r.norm() < 1e-12;
    Ok(HadamardProduct {
        normalization,
        zero_order: roots.iter().filter(|r| at_zero(r)).count(),
        roots: roots.iter().filter(|r| !at_zero(r)).copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn dirichlet_forms() -> FormsSpec {
        FormsSpec {
            u1: BoundaryMeasure::dirac(PI, 0.0).unwrap(),
            u2: BoundaryMeasure::dirac(PI, PI / 2.0).unwrap(),
        }
    }

    fn constant_p_config(data: InverseData, start: f64) -> InverseConfig {
        InverseConfig {
            t_end: PI,
            parametrization: Parametrization {
                p: vec![BasisFn::Constant],
                q: vec![],
            },
            fixed_integral_p: None,
            measures: Some(dirichlet_forms()),
            data,
            start: vec![start],
            solver: SolverOptions::default(),
            min_gap: 1e-6,
            condition_box: None,
        }
    }

    /// Dirichlet roots for constant p = c, q = 0: lambda^2 - 2 c lambda = n^2.
    fn dirichlet_roots(c0: f64, n: std::ops::RangeInclusive<i32>) -> Vec<Complex64> {
        n.map(|k| c(c0 + (c0 * c0 + (k * k) as f64).sqrt())).collect()
    }

    /// Delta11 roots for p = c, q = 0, U1 = y(0): cos(k pi) = 0, k = lambda - c... k^2 = lambda^2 - 2 c lambda.
    fn neumann_roots(c0: f64, n: std::ops::RangeInclusive<i32>) -> Vec<Complex64> {
        n.map(|k| {
            let kk = k as f64 + 0.5;
            c(c0 + (c0 * c0 + kk * kk).sqrt())
        })
        .collect()
    }

    #[test]
    fn residual_examples() {
        let data = InverseData::TwoSpectra {
            lambda1: dirichlet_roots(0.5, 1..=3),
            lambda11: neumann_roots(0.5, 0..=2),
        };
        let cfg = constant_p_config(data, 0.0);
        let o = OdeOptions::default();
        let at_truth = residual(&cfg, &[0.5], &o).unwrap();
        assert!(at_truth.iter().all(|v| v.abs() < 1e-8), "{at_truth:?}");
        let at_zero = residual(&cfg, &[0.0], &o).unwrap();
        // oracle: free Delta_1 = sin(pi lambda) / lambda at the shifted root
        let l = 0.5 + 1.25f64.sqrt();
        let want = (PI * l).sin() / l;
        assert!((at_zero[0] - want).abs() < 1e-8);
        assert!(at_zero[1].abs() < 1e-12);
    }

    #[test]
    fn weyl_pole_sample_dropped() {
        let p = ProblemSpec::free();
        let o = OdeOptions::default();
        let mk = |l: Complex64| {
            let m = eval_char(&p, CharName::WeylM, l, EvalPath::Ratio, &o).map(|e| e.value).unwrap_or(c(0.0));
            let w = eval_char(&p, CharName::Omega, l, EvalPath::ViaZ, &o).unwrap().value;
            WeylSample { lambda: l, m, omega: w }
        };
        let samples = vec![mk(c(1.0)), mk(Complex64::new(1.5, 0.5)), mk(Complex64::new(2.5, -0.3))];
        let mut cfg = constant_p_config(InverseData::WeylAndOmega { samples }, 0.0);
        cfg.fixed_integral_p = Some(c(0.0));
        cfg.parametrization = Parametrization {
            p: vec![BasisFn::Cos { freq: 2.0 }],
            q: vec![BasisFn::Constant],
        };
        cfg.start = vec![0.0, 0.0];
        let r = Residual::new(&cfg, &cfg.start, &o).unwrap();
        assert_eq!(r.active_weyl().len(), 2);
        let v = r.eval(&cfg.start).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn recovers_constant_p() {
        let data = InverseData::TwoSpectra {
            lambda1: dirichlet_roots(0.5, 1..=4),
            lambda11: neumann_roots(0.5, 0..=3),
        };
        let cfg = constant_p_config(data, 0.0);
        let res = solve(&cfg, &OdeOptions::default(), &SpectraOptions::default()).unwrap();
        assert!((res.params[0] - 0.5).abs() < 1e-5, "{:?}", res.params);
        assert!(res.converged);
        assert!(res.condition_s_report.unwrap().holds());
    }

    #[test]
    fn recovers_constant_q_from_three_spectra() {
        // q = 1, p = 0: Dirichlet roots lambda^2 - 1 = (n pi / L)^2
        let r = |len: f64, n: std::ops::RangeInclusive<i32>| -> Vec<Complex64> {
            n.map(|k| c((1.0 + (k as f64 * PI / len).powi(2)).sqrt())).collect()
        };
        let cfg = InverseConfig {
            t_end: PI,
            parametrization: Parametrization {
                p: vec![],
                q: vec![BasisFn::Constant],
            },
            fixed_integral_p: Some(c(0.0)),
            measures: None,
            data: InverseData::ThreeSpectra {
                a: PI / 2.0,
                l0: r(PI / 2.0, 1..=3),
                l1: r(PI, 1..=3),
                l2: r(PI / 2.0, 1..=3),
            },
            start: vec![0.3],
            solver: SolverOptions::default(),
            min_gap: 1e-6,
            condition_box: None,
        };
        let res = solve(&cfg, &OdeOptions::default(), &SpectraOptions::default()).unwrap();
        assert!((res.params[0] - 1.0).abs() < 1e-4, "{:?}", res.params);
        // the Dirichlet spectra of (0, a) and (0, T) share every other eigenvalue here
        assert!(res.condition_s_report.unwrap().fails());
    }

    #[test]
    fn self_consistent_start() {
        let data = InverseData::TwoSpectra {
            lambda1: dirichlet_roots(0.5, 1..=3),
            lambda11: neumann_roots(0.5, 0..=2),
        };
        let cfg = constant_p_config(data, 0.5);
        let res = solve(&cfg, &OdeOptions::default(), &SpectraOptions::default()).unwrap();
        assert!(res.iterations <= 2);
        assert!(res.converged);
    }

    #[test]
    fn jacobian_forward_matches_central() {
        let data = InverseData::TwoSpectra {
            lambda1: dirichlet_roots(0.5, 1..=3),
            lambda11: neumann_roots(0.5, 0..=2),
        };
        let mut cfg = constant_p_config(data, 0.2);
        cfg.parametrization.q = vec![BasisFn::Constant, BasisFn::Sin { freq: 1.0 }];
        cfg.start = vec![0.2, 0.1, -0.1];
        let r = Residual::new(&cfg, &cfg.start, &OdeOptions::default()).unwrap();
        assert!(r.jacobian_check(&cfg.start, 1e-6).unwrap() < 1e-3);
    }

    #[test]
    fn integral_constraint_by_construction() {
        let par = Parametrization {
            p: vec![BasisFn::Cos { freq: 2.0 }, BasisFn::Sin { freq: 2.0 }],
            q: vec![BasisFn::Constant],
        };
        let fixed = Complex64::new(0.7, 0.1);
        par.validate(PI, Some(fixed)).unwrap();
        let co = par.coefficients(PI, Some(fixed), &[0.3, -0.8, 2.0]).unwrap();
        assert!((co.integral_p(PI).unwrap() - fixed).norm() < 1e-10);
        let bad = Parametrization {
            p: vec![BasisFn::Sin { freq: 1.0 }],
            q: vec![],
        };
        assert!(bad.validate(PI, Some(fixed)).is_err());
        assert!(bad.validate(PI, None).is_ok());
    }

    #[test]
    fn hadamard_examples() {
        let sine_roots: Vec<Complex64> = (1..=20).flat_map(|n| [c(n as f64), c(-(n as f64))]).collect();
        let f = char_from_zeros(&sine_roots, c(PI)).unwrap();
        assert!((f.eval(c(0.5)) - c(2.0)).norm() < 0.04);
        let empty = char_from_zeros(&[], c(3.0)).unwrap();
        assert_eq!(empty.eval(Complex64::new(5.0, 1.0)), c(3.0));
        let cos_roots: Vec<Complex64> = (0..20).flat_map(|n| [c(n as f64 + 0.5), c(-(n as f64) - 0.5)]).collect();
        let g = char_from_zeros(&cos_roots, c(1.0)).unwrap();
        let want = (PI / 4.0).cos();
        assert!((g.eval(c(0.25)).re - want).abs() < 0.02 * want);
        let with_zero = char_from_zeros(&[c(0.0), c(1.0), c(-1.0)], c(2.0)).unwrap();
        assert_eq!(with_zero.zero_order, 1);
        assert!((with_zero.eval(c(0.5)) - c(2.0 * 0.5 * 0.75)).norm() < 1e-14);
        assert!(char_from_zeros(&[c(1.0)], c(0.0)).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let data = InverseData::TwoSpectra {
            lambda1: dirichlet_roots(0.5, 1..=2),
            lambda11: neumann_roots(0.5, 0..=1),
        };
        let cfg = constant_p_config(data, 0.0);
        let text = cfg.to_json().unwrap();
        let mut back = InverseConfig::from_json(&text).unwrap();
        let m = back.measures.as_mut().unwrap();
        m.u1.attach(PI);
        m.u2.attach(PI);
        assert_eq!(back, cfg);
        let mut bad = cfg.clone();
        bad.start = vec![];
        assert!(bad.validate().is_err());
    }
}
