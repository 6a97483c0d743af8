//! Nonlocal forms `U_j(y) = \int y d(sigma_j)` and point forms
//! `V_1(y) = y(T)`, `V_2(y) = y'(T)` applied to sampled solutions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundaryMeasure, ProblemSpec};
use crate::ode::SolutionTrace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FormLabel {
    U1,
    U2,
    U1Trunc(f64),
    V1,
    V2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormValue {
    pub value: Complex64,
    pub label: FormLabel,
}

/// Applies a measure form to a trace, before the trace scale is applied.
pub(crate) fn measure_form_stored(m: &BoundaryMeasure, tr: &SolutionTrace) -> Result<Complex64> {
    if (m.t_end() - tr.t_end()).abs() > 1e-12 * tr.t_end() {
        return Err(Error::Contract(format!(
            "measure on [0, {}] applied to trace on [0, {}]",
            m.t_end(),
            tr.t_end()
        )));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for a in m.active_atoms() {
        total += a.weight * tr.interp_stored(a.t)?.0;
    }
    if let Some((lo, hi)) = m.density_span() {
        total += density_integral(m, tr, lo, hi);
    }
    Ok(total)
}

/// `\int_lo^hi rho y dt` as the exact integral of the piecewise-linear
/// interpolant of `rho * y` on the trace grid, so integrals over adjacent
/// windows add up exactly.
fn density_integral(m: &BoundaryMeasure, tr: &SolutionTrace, lo: f64, hi: f64) -> Complex64 {
    let n = tr.grid_n();
    let h = tr.step();
    let y = tr.stored_y();
    let g = |i: usize| m.density_at(tr.node(i)) * y[i];
    let g_at = |x: f64| {
        let u = (x / h).clamp(0.0, n as f64);
        let i = (u.floor() as usize).min(n - 1);
        let s = u - i as f64;
        g(i) * (1.0 - s) + g(i + 1) * s
    };
    let first = ((lo / h).floor() as usize + 1).min(n);
    let last = ((hi / h).ceil() as usize).saturating_sub(1).min(n);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut x_prev = lo;
    let mut g_prev = g_at(lo);
    for i in first..=last {
        let x = tr.node(i);
        if x <= lo || x >= hi {
            continue;
        }
        let gi = g(i);
        sum += (g_prev + gi) * (0.5 * (x - x_prev));
        x_prev = x;
        g_prev = gi;
    }
    sum + (g_prev + g_at(hi)) * (0.5 * (hi - x_prev))
}

/// `\int y d(sigma)` over the measure's current window, scale applied.
pub fn apply_measure_form(m: &BoundaryMeasure, tr: &SolutionTrace) -> Result<Complex64> {
    Ok(measure_form_stored(m, tr)? * tr.scale_log.exp())
}

/// `V_1(y) = y(T)`, `V_2(y) = y'(T)`.
pub fn apply_point_form(j: u8, tr: &SolutionTrace) -> Result<Complex64> {
    let (y, dy) = tr.value(tr.grid_n());
    match j {
        1 => Ok(y),
        2 => Ok(dy),
        _ => Err(Error::Contract(format!("point form V_{j} does not exist"))),
    }
}

/// Applies the labelled form of `problem` to a trace.
pub fn evaluate_form(problem: &ProblemSpec, label: FormLabel, tr: &SolutionTrace) -> Result<FormValue> {
    let value = match label {
        FormLabel::U1 => apply_measure_form(&problem.u1, tr)?,
        FormLabel::U2 => apply_measure_form(&problem.u2, tr)?,
        FormLabel::U1Trunc(a) => apply_measure_form(&problem.u1.truncate(a)?, tr)?,
        FormLabel::V1 => apply_point_form(1, tr)?,
        FormLabel::V2 => apply_point_form(2, tr)?,
    };
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Overflow { lambda: tr.lambda });
    }
    Ok(FormValue { value, label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OdeOptions;
    use crate::model::{Coefficients, CoeffFn};
    use crate::ode::fundamental_x;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn free_x(lambda: f64) -> (SolutionTrace, SolutionTrace) {
        fundamental_x(&Coefficients::free(PI), c(lambda), &OdeOptions::default()).unwrap()
    }

    #[test]
    fn atom_examples() {
        let (x1, x2) = free_x(1.0);
        let d0 = BoundaryMeasure::dirac(PI, 0.0).unwrap();
        assert!((apply_measure_form(&d0, &x1).unwrap() - c(1.0)).norm() < 1e-14);
        let dh = BoundaryMeasure::dirac(PI, PI / 2.0).unwrap();
        assert!((apply_measure_form(&dh, &x2).unwrap() - c(1.0)).norm() < 1e-9);
        // off-grid atom
        let d = BoundaryMeasure::dirac(PI, 1.0).unwrap();
        assert!((apply_measure_form(&d, &x2).unwrap() - c(1f64.sin())).norm() < 1e-9);
    }

    #[test]
    fn density_example() {
        let (_, x2) = free_x(2.0);
        let m = BoundaryMeasure::uniform(PI, c(1.0), 1024).unwrap();
        assert!(apply_measure_form(&m, &x2).unwrap().norm() < 1e-9);
        let (_, x2) = free_x(1.0);
        // \int_0^pi sin t dt = 2, trapezoid error O(h^2)
        assert!((apply_measure_form(&m, &x2).unwrap() - c(2.0)).norm() < 1e-5);
        let half = m.truncate(PI / 2.0).unwrap();
        assert!((apply_measure_form(&half, &x2).unwrap() - c(1.0)).norm() < 1e-5);
    }

    #[test]
    fn windows_are_additive() {
        let co = Coefficients::new(PI, CoeffFn::sine(0.2, 3.0), CoeffFn::constant(0.4)).unwrap();
        let (_, x2) = fundamental_x(&co, Complex64::new(2.3, 0.7), &OdeOptions::default()).unwrap();
        let rho: Vec<Complex64> = (0..=300).map(|i| Complex64::new((i as f64 * 0.01).cos(), 0.3)).collect();
        let m = BoundaryMeasure::new(PI, vec![(0.0, 1.0, 0.0).into(), (2.0, 0.5, 0.0).into()], rho).unwrap();
        for a in [PI, 2.1, 1.0] {
            let whole = apply_measure_form(&m.truncate(a).unwrap(), &x2).unwrap();
            let left = apply_measure_form(&m.truncate(a / 2.0).unwrap(), &x2).unwrap();
            let right = apply_measure_form(&m.restrict(a / 2.0, a).unwrap(), &x2).unwrap();
            assert!((whole - left - right).norm() <= 1e-13 * whole.norm().max(1.0));
        }
        assert_eq!(
            apply_measure_form(&m.truncate(PI).unwrap(), &x2).unwrap(),
            apply_measure_form(&m, &x2).unwrap()
        );
    }

    #[test]
    fn point_forms() {
        let co = Coefficients::free(PI);
        let (z1, _) = crate::ode::fundamental_z(&co, c(1.3), &OdeOptions::default()).unwrap();
        assert_eq!(apply_point_form(1, &z1).unwrap(), c(1.0));
        assert_eq!(apply_point_form(2, &z1).unwrap(), c(0.0));
        let (_, x2) = free_x(1.0);
        assert!(apply_point_form(1, &x2).unwrap().norm() < 1e-9);
        assert!(apply_point_form(3, &x2).is_err());
    }

    #[test]
    fn mismatched_interval() {
        let (x1, _) = free_x(1.0);
        let m = BoundaryMeasure::dirac(2.0, 0.0).unwrap();
        assert!(matches!(apply_measure_form(&m, &x1), Err(Error::Contract(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn linearity(ar in -2.0..2.0f64, ai in -2.0..2.0f64, br in -2.0..2.0f64,
                     t in 0.0..PI, w in -1.0..1.0f64, lr in -5.0..5.0f64, li in -3.0..3.0f64) {
            let co = Coefficients::new(PI, CoeffFn::sine(0.3, 2.0), CoeffFn::constant(0.5)).unwrap();
            let (x1, x2) = fundamental_x(&co, Complex64::new(lr, li), &OdeOptions::default()).unwrap();
            let m = BoundaryMeasure::new(
                PI,
                vec![(0.0, 1.0, 0.0).into(), (t, w, 0.2).into()],
                (0..=64).map(|i| Complex64::new((i as f64 * 0.1).sin(), w)).collect(),
            ).unwrap();
            let (a, b) = (Complex64::new(ar, ai), c(br));
            let comb = SolutionTrace::combine(&[(a, &x1), (b, &x2)]).unwrap();
            let lhs = apply_measure_form(&m, &comb).unwrap();
            let (u1, u2) = (apply_measure_form(&m, &x1).unwrap(), apply_measure_form(&m, &x2).unwrap());
            let rhs = a * u1 + b * u2;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + (a * u1).norm() + (b * u2).norm()));
        }
    }
}
