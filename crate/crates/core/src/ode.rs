//! Integration of `y'' + (lambda^2 - 2 lambda p(x) - q(x)) y = 0` for a
//! fixed complex `lambda`.
//!
//! The first-order system `(y, y')` is advanced with the Dormand-Prince 5(4)
//! pair. Steps are clipped so that every uniform grid node and every
//! coefficient breakpoint is hit exactly, so the stored samples are RK states
//! rather than interpolants. Several initial conditions can be propagated
//! together; they then share one step sequence and therefore one discrete
//! propagator.

use num_complex::Complex64;

use crate::config::OdeOptions;
use crate::error::{Error, Result};
use crate::model::Coefficients;

/// Endpoint an integration starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

/// A solution sampled on the uniform grid `x_i = i T / n`.
///
/// The true solution is `stored * exp(scale_log)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionTrace {
    pub lambda: Complex64,
    t_end: f64,
    y: Vec<Complex64>,
    dy: Vec<Complex64>,
    /// `y''` at the nodes, from the equation itself.
    d2y: Vec<Complex64>,
    pub scale_log: f64,
}

impl SolutionTrace {
    pub fn grid_n(&self) -> usize {
        self.y.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.grid_n() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.grid_n() {
            self.t_end
        } else {
            i as f64 * self.step()
        }
    }

    fn factor(&self) -> f64 {
        self.scale_log.exp()
    }

    /// `(y, y')` at node `i`, scale applied.
    pub fn value(&self, i: usize) -> (Complex64, Complex64) {
        let f = self.factor();
        (self.y[i] * f, self.dy[i] * f)
    }

    /// Stored (unscaled) samples.
    pub fn stored(&self, i: usize) -> (Complex64, Complex64) {
        (self.y[i], self.dy[i])
    }

    pub fn stored_y(&self) -> &[Complex64] {
        &self.y
    }

    /// Bracketing interval index and local coordinate for `x`.
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let slack = 1e-12 * self.t_end;
        if !(x >= -slack && x <= self.t_end + slack) {
            return Err(Error::Domain(format!(
                "x = {x} outside trace range [0, {}]",
                self.t_end
            )));
        }
        let n = self.grid_n();
        let u = (x / self.step()).clamp(0.0, n as f64);
        let i = (u.floor() as usize).min(n - 1);
        Ok((i, u - i as f64))
    }

    /// Stored `(y, y')` at an arbitrary `x`, by cubic Hermite interpolation on
    /// the bracketing nodes (using `y'` for `y` and `y''` for `y'`).
    pub fn interp_stored(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let (i, s) = self.locate(x)?;
        if s == 0.0 {
            return Ok((self.y[i], self.dy[i]));
        }
        if s == 1.0 {
            return Ok((self.y[i + 1], self.dy[i + 1]));
        }
        let h = self.node(i + 1) - self.node(i);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let y = self.y[i] * h00 + self.dy[i] * (h10 * h) + self.y[i + 1] * h01 + self.dy[i + 1] * (h11 * h);
        let dy = self.dy[i] * h00
            + self.d2y[i] * (h10 * h)
            + self.dy[i + 1] * h01
            + self.d2y[i + 1] * (h11 * h);
        Ok((y, dy))
    }

    /// `(y, y')` at an arbitrary `x`, scale applied.
    pub fn at(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let (y, dy) = self.interp_stored(x)?;
        let f = self.factor();
        Ok((y * f, dy * f))
    }

    pub fn same_grid(&self, other: &SolutionTrace) -> bool {
        self.lambda == other.lambda && self.t_end == other.t_end && self.y.len() == other.y.len()
    }

    /// `sum_k c_k * trace_k`, pointwise.
    pub fn combine(terms: &[(Complex64, &SolutionTrace)]) -> Result<SolutionTrace> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Contract("empty combination".into()))?
            .1;
        if terms.iter().any(|(_, t)| !t.same_grid(first)) {
            return Err(Error::Contract(
                "combined traces must share lambda and grid".into(),
            ));
        }
        let scale = terms
            .iter()
            .map(|(_, t)| t.scale_log)
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<Complex64> = terms
            .iter()
            .map(|(c, t)| c * (t.scale_log - scale).exp())
            .collect();
        let n = first.y.len();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        let mut dy = y.clone();
        let mut d2y = y.clone();
        for (w, (_, t)) in weights.iter().zip(terms) {
            for i in 0..n {
                y[i] += w * t.y[i];
                dy[i] += w * t.dy[i];
                d2y[i] += w * t.d2y[i];
            }
        }
        Ok(SolutionTrace {
            lambda: first.lambda,
            t_end: first.t_end,
            y,
            dy,
            d2y,
            scale_log: scale,
        })
    }

    /// Node-wise merge of two samplings of the same solution: node `i` comes
    /// from `other` where `pick_other[i]`, else from `self`.
    pub fn merge_nodes(&self, other: &SolutionTrace, pick_other: &[bool]) -> SolutionTrace {
        let mut out = self.clone();
        let shift = (other.scale_log - self.scale_log).exp();
        for (i, _) in pick_other.iter().enumerate().filter(|(_, &p)| p) {
            out.y[i] = other.y[i] * shift;
            out.dy[i] = other.dy[i] * shift;
            out.d2y[i] = other.d2y[i] * shift;
        }
        out
    }

    /// The trace multiplied by a constant.
    pub fn scaled(&self, c: Complex64) -> SolutionTrace {
        let mut out = self.clone();
        out.y.iter_mut().for_each(|v| *v *= c);
        out.dy.iter_mut().for_each(|v| *v *= c);
        out.d2y.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// CSV rows `(x, Re y, Im y, Re y', Im y')` with the scale applied.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "re_y", "im_y", "re_dy", "im_dy"])?;
        for i in 0..self.y.len() {
            let (y, dy) = self.value(i);
            w.write_record(&[
                format!("{:e}", self.node(i)),
                format!("{:e}", y.re),
                format!("{:e}", y.im),
                format!("{:e}", dy.re),
                format!("{:e}", dy.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [Complex64; 2];

struct Stepper<'a> {
    coeffs: &'a Coefficients,
    lambda: Complex64,
    lambda_sq: Complex64,
    opts: &'a OdeOptions,
    steps: usize,
}

impl Stepper<'_> {
    #[inline]
    fn kappa(&self, x: f64) -> Result<Complex64> {
        let k = self.coeffs.potential(self.lambda, self.lambda_sq, x);
        if !(k.re.is_finite() && k.im.is_finite()) {
            return Err(Error::Integration(format!(
                "non-finite coefficient at x = {x}"
            )));
        }
        Ok(k)
    }

    /// Advances every state from `x0` to `x1` (either direction) with one
    /// shared adaptive step sequence. `h` carries the step-size suggestion.
    fn advance(&mut self, states: &mut [State], x0: f64, x1: f64, h: &mut f64) -> Result<()> {
        let dir = (x1 - x0).signum();
        let span = (x1 - x0).abs();
        if span == 0.0 {
            return Ok(());
        }
        let m = states.len();
        let mut x = x0;
        let mut k = vec![[[Complex64::new(0.0, 0.0); 2]; 7]; m];
        let mut y_new = vec![[Complex64::new(0.0, 0.0); 2]; m];
        loop {
            let remaining = (x1 - x).abs();
            if remaining <= 1e-14 * span {
                return Ok(());
            }
            let last = h.abs() >= remaining;
            let step = if last { remaining } else { h.abs() } * dir;
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Integration(format!(
                    "step budget {} exhausted at x = {x}",
                    self.opts.max_steps
                )));
            }

            let xs = [x, x + C2 * step, x + C3 * step, x + C4 * step, x + C5 * step, x + step];
            let mut kap = [Complex64::new(0.0, 0.0); 6];
            for (s, xi) in xs.iter().enumerate() {
                kap[s] = self.kappa(*xi)?;
            }
            let f = |kap: Complex64, y: &State| -> State { [y[1], -kap * y[0]] };
            let mut err_sq = 0.0;
            for (j, st) in states.iter().enumerate() {
                let kj = &mut k[j];
                kj[0] = f(kap[0], st);
                let lin = |coef: &[f64], kj: &[State; 7]| -> State {
                    let mut out = *st;
                    for (c, kk) in coef.iter().zip(kj.iter()) {
                        out[0] += kk[0] * (c * step);
                        out[1] += kk[1] * (c * step);
                    }
                    out
                };
                let s2 = lin(&[A21], kj);
                kj[1] = f(kap[1], &s2);
                let s3 = lin(&[A31, A32], kj);
                kj[2] = f(kap[2], &s3);
                let s4 = lin(&[A41, A42, A43], kj);
                kj[3] = f(kap[3], &s4);
                let s5 = lin(&[A51, A52, A53, A54], kj);
                kj[4] = f(kap[4], &s5);
                let s6 = lin(&[A61, A62, A63, A64, A65], kj);
                kj[5] = f(kap[5], &s6);
                let yn = lin(&[B1, 0.0, B3, B4, B5, B6], kj);
                kj[6] = f(kap[5], &yn);
                y_new[j] = yn;
                for c in 0..2 {
                    let e = (kj[0][c] * E1
                        + kj[2][c] * E3
                        + kj[3][c] * E4
                        + kj[4][c] * E5
                        + kj[5][c] * E6
                        + kj[6][c] * E7)
                        * step;
                    let sc = self.opts.atol + self.opts.rtol * st[c].norm().max(yn[c].norm());
                    err_sq += (e.norm() / sc).powi(2);
                }
            }
            let err = (err_sq / (2 * m) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Overflow {
                    lambda: self.lambda,
                });
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                x = if last { x1 } else { x + step };
                states.copy_from_slice(&y_new);
                if !last || fac < 1.0 {
                    *h = step.abs() * fac;
                }
            } else {
                *h = step.abs() * fac.min(1.0);
                if *h < 1e-14 * span.max(1e-300) {
                    return Err(Error::Integration(format!(
                        "step size underflow at x = {x}"
                    )));
                }
            }
        }
    }
}

/// Integrates several solutions of the pencil equation together.
pub fn integrate_many(
    coeffs: &Coefficients,
    lambda: Complex64,
    from: Endpoint,
    inits: &[(Complex64, Complex64)],
    opts: &OdeOptions,
) -> Result<Vec<SolutionTrace>> {
    if opts.grid_n < OdeOptions::MIN_GRID {
        return Err(Error::Config(format!(
            "grid_n = {} below minimum {}",
            opts.grid_n,
            OdeOptions::MIN_GRID
        )));
    }
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite lambda {lambda}")));
    }
    for &(a, b) in inits {
        if a == Complex64::new(0.0, 0.0) && b == Complex64::new(0.0, 0.0) {
            return Err(Error::Contract("initial data must not both vanish".into()));
        }
    }
    let n = opts.grid_n;
    let t_end = coeffs.t_end;
    let hgrid = t_end / n as f64;
    let node = |i: usize| if i == n { t_end } else { i as f64 * hgrid };
    let breaks = coeffs.breakpoints();

    let m = inits.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut ys = vec![vec![zero; n + 1]; m];
    let mut dys = vec![vec![zero; n + 1]; m];
    let mut logs = vec![vec![0.0_f64; n + 1]; m];
    let mut states: Vec<State> = inits.iter().map(|&(a, b)| [a, b]).collect();
    let mut run_log = vec![0.0_f64; m];

    let mut stepper = Stepper {
        coeffs,
        lambda,
        lambda_sq: lambda * lambda,
        opts,
        steps: 0,
    };
    let mut h = (0.1 / (1.0 + lambda.norm())).min(hgrid);

    let order: Vec<usize> = match from {
        Endpoint::Left => (0..=n).collect(),
        Endpoint::Right => (0..=n).rev().collect(),
    };
    let store = |idx: usize,
                 states: &[State],
                 run_log: &[f64],
                 ys: &mut [Vec<Complex64>],
                 dys: &mut [Vec<Complex64>],
                 logs: &mut [Vec<f64>]| {
        for j in 0..states.len() {
            ys[j][idx] = states[j][0];
            dys[j][idx] = states[j][1];
            logs[j][idx] = run_log[j];
        }
    };
    store(order[0], &states, &run_log, &mut ys, &mut dys, &mut logs);

    for w in order.windows(2) {
        let (a, b) = (node(w[0]), node(w[1]));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
        if a > b {
            inner.reverse();
        }
        let mut x = a;
        for stop in inner.into_iter().chain(std::iter::once(b)) {
            stepper.advance(&mut states, x, stop, &mut h)?;
            x = stop;
        }
        for j in 0..m {
            let big = states[j][0].norm().max(states[j][1].norm());
            if !big.is_finite() {
                return Err(Error::Overflow { lambda });
            }
            if big > opts.rescale_above {
                states[j][0] /= big;
                states[j][1] /= big;
                run_log[j] += big.ln();
            }
        }
        store(w[1], &states, &run_log, &mut ys, &mut dys, &mut logs);
    }

    let lambda_sq = lambda * lambda;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let scale = logs[j].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut y = std::mem::take(&mut ys[j]);
        let mut dy = std::mem::take(&mut dys[j]);
        for i in 0..=n {
            let f = (logs[j][i] - scale).exp();
            y[i] *= f;
            dy[i] *= f;
        }
        let d2y = (0..=n)
            .map(|i| -coeffs.potential(lambda, lambda_sq, node(i)) * y[i])
            .collect();
        out.push(SolutionTrace {
            lambda,
            t_end,
            y,
            dy,
            d2y,
            scale_log: scale,
        });
    }
    Ok(out)
}

/// Single solution with `(y, y')` prescribed at one endpoint.
pub fn integrate_pencil(
    coeffs: &Coefficients,
    lambda: Complex64,
    from: Endpoint,
    init: (Complex64, Complex64),
    opts: &OdeOptions,
) -> Result<SolutionTrace> {
    Ok(integrate_many(coeffs, lambda, from, &[init], opts)?.remove(0))
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `X_1, X_2` with `(X_1, X_1')(0) = (1, 0)` and `(X_2, X_2')(0) = (0, 1)`.
pub fn fundamental_x(
    coeffs: &Coefficients,
    lambda: Complex64,
    opts: &OdeOptions,
) -> Result<(SolutionTrace, SolutionTrace)> {
    let mut v = integrate_many(coeffs, lambda, Endpoint::Left, &[(ONE, ZERO), (ZERO, ONE)], opts)?;
    let x2 = v.pop().expect("two traces");
    let x1 = v.pop().expect("two traces");
    Ok((x1, x2))
}

/// `Z_1, Z_2` with `(Z_1, Z_1')(T) = (1, 0)` and `(Z_2, Z_2')(T) = (0, 1)`.
pub fn fundamental_z(
    coeffs: &Coefficients,
    lambda: Complex64,
    opts: &OdeOptions,
) -> Result<(SolutionTrace, SolutionTrace)> {
    let mut v = integrate_many(coeffs, lambda, Endpoint::Right, &[(ONE, ZERO), (ZERO, ONE)], opts)?;
    let z2 = v.pop().expect("two traces");
    let z1 = v.pop().expect("two traces");
    Ok((z1, z2))
}

/// `y_a y_b' - y_a' y_b` at `x`, together with `|y_a y_b'| + |y_a' y_b|`
/// (the magnitude the difference is taken from).
pub fn wronskian_scaled(a: &SolutionTrace, b: &SolutionTrace, x: f64) -> Result<(Complex64, f64)> {
    if !a.same_grid(b) {
        return Err(Error::Contract(
            "wronskian needs traces with the same lambda and grid".into(),
        ));
    }
    let (ya, dya) = a.interp_stored(x)?;
    let (yb, dyb) = b.interp_stored(x)?;
    let f = (a.scale_log + b.scale_log).exp();
    let t1 = ya * dyb;
    let t2 = dya * yb;
    Ok(((t1 - t2) * f, (t1.norm() + t2.norm()) * f))
}

pub fn wronskian(a: &SolutionTrace, b: &SolutionTrace, x: f64) -> Result<Complex64> {
    Ok(wronskian_scaled(a, b, x)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoeffFn;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn opts() -> OdeOptions {
        OdeOptions::default()
    }

    #[test]
    fn free_cosine() {
        let co = Coefficients::free(PI);
        let tr = integrate_pencil(&co, c(1.0), Endpoint::Left, (ONE, ZERO), &opts()).unwrap();
        let (y, _) = tr.value(tr.grid_n());
        assert!((y - c(-1.0)).norm() < 1e-9);
        let (y, dy) = tr.at(1.234).unwrap();
        assert!((y - c(1.234f64.cos())).norm() < 1e-9);
        assert!((dy + c(1.234f64.sin())).norm() < 1e-9);
    }

    #[test]
    fn zero_lambda_is_linear() {
        let co = Coefficients::free(2.5);
        let tr = integrate_pencil(&co, c(0.0), Endpoint::Left, (ZERO, ONE), &opts()).unwrap();
        assert!((tr.value(tr.grid_n()).0 - c(2.5)).norm() < 1e-12);
    }

    #[test]
    fn constant_p_dirichlet_root() {
        let co = Coefficients::new(PI, CoeffFn::constant(0.5), CoeffFn::zero()).unwrap();
        let lam = c(0.5 + 1.25f64.sqrt());
        let tr = integrate_pencil(&co, lam, Endpoint::Left, (ZERO, ONE), &opts()).unwrap();
        assert!(tr.value(tr.grid_n()).0.norm() < 1e-8);
    }

    #[test]
    fn fundamental_examples() {
        let co = Coefficients::free(PI);
        let (x1, x2) = fundamental_x(&co, c(1.0), &opts()).unwrap();
        for x in [0.3, 1.1, 2.9] {
            assert!((x1.at(x).unwrap().0 - c(x.cos())).norm() < 1e-9);
            assert!((x2.at(x).unwrap().0 - c(x.sin())).norm() < 1e-9);
        }
        let (_, x2) = fundamental_x(&co, c(2.0), &opts()).unwrap();
        assert!(x2.at(PI / 2.0).unwrap().0.norm() < 1e-9);

        // lambda^2 - 2 lambda p = 0: X_2(x) = x
        let co = Coefficients::new(PI, CoeffFn::constant(0.5), CoeffFn::zero()).unwrap();
        let (_, x2) = fundamental_x(&co, c(1.0), &opts()).unwrap();
        for x in [0.5, 2.0, PI] {
            assert!((x2.at(x).unwrap().0 - c(x)).norm() < 1e-9);
        }
    }

    #[test]
    fn fundamental_z_examples() {
        let co = Coefficients::free(PI);
        let (z1, z2) = fundamental_z(&co, c(1.0), &opts()).unwrap();
        assert!(z2.value(0).0.norm() < 1e-9);
        assert!((z1.value(0).0 - c(-1.0)).norm() < 1e-9);
        let (_, z2) = fundamental_z(&co, c(0.5), &opts()).unwrap();
        assert!((z2.value(0).0 - c(-2.0)).norm() < 1e-9);
        let n = z2.grid_n();
        assert_eq!(z2.value(n), (ZERO, ONE));
    }

    #[test]
    fn wronskian_examples() {
        let co = Coefficients::new(PI, CoeffFn::sine(0.3, 2.0), CoeffFn::constant(0.7)).unwrap();
        let lam = Complex64::new(3.0, 0.5);
        let (x1, x2) = fundamental_x(&co, lam, &opts()).unwrap();
        let (z1, z2) = fundamental_z(&co, lam, &opts()).unwrap();
        for x in [0.0, 0.77, 2.0, PI] {
            assert!((wronskian(&x1, &x2, x).unwrap() - ONE).norm() < 1e-8);
            assert!((wronskian(&z1, &z2, x).unwrap() - ONE).norm() < 1e-8);
            assert_eq!(wronskian(&x1, &x1, x).unwrap(), ZERO);
        }
        assert!(matches!(wronskian(&x1, &z1, 1.0), Ok(_)));
        let (other, _) = fundamental_x(&co, lam + 1.0, &opts()).unwrap();
        assert!(matches!(wronskian(&x1, &other, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn rejects_trivial_init_and_small_grid() {
        let co = Coefficients::free(PI);
        assert!(matches!(
            integrate_pencil(&co, ONE, Endpoint::Left, (ZERO, ZERO), &opts()),
            Err(Error::Contract(_))
        ));
        let small = OdeOptions {
            grid_n: 100,
            ..opts()
        };
        assert!(integrate_pencil(&co, ONE, Endpoint::Left, (ONE, ZERO), &small).is_err());
    }

    #[test]
    fn rescales_large_solutions() {
        let co = Coefficients::free(PI);
        let o = OdeOptions {
            rescale_above: 1e10,
            ..opts()
        };
        let lam = Complex64::new(0.0, 20.0);
        let tr = integrate_pencil(&co, lam, Endpoint::Left, (ONE, ZERO), &o).unwrap();
        assert!(tr.scale_log > 0.0);
        let expect = (20.0 * PI).cosh();
        let got = tr.value(tr.grid_n()).0;
        assert!((got.re / expect - 1.0).abs() < 1e-8, "{got} vs {expect}");
        for i in 0..=tr.grid_n() {
            let (y, dy) = tr.stored(i);
            assert!(y.norm() <= 1e10 * 1.01 && dy.norm().is_finite());
        }
    }

    #[test]
    fn breakpoints_preserve_accuracy() {
        // q jumps in slope at pi/3; compare against a 4x finer grid
        let q = CoeffFn::piecewise_linear(&[(0.0, 0.0), (PI / 3.0 + 1e-3, 2.0), (PI, 0.0)]);
        let co = Coefficients::new(PI, CoeffFn::zero(), q).unwrap();
        let lam = c(4.3);
        let a = integrate_pencil(&co, lam, Endpoint::Left, (ZERO, ONE), &opts()).unwrap();
        let fine = OdeOptions {
            grid_n: 4096,
            rtol: 1e-12,
            atol: 1e-12,
            ..opts()
        };
        let b = integrate_pencil(&co, lam, Endpoint::Left, (ZERO, ONE), &fine).unwrap();
        let (ya, yb) = (a.value(a.grid_n()).0, b.value(b.grid_n()).0);
        assert!((ya - yb).norm() < 1e-8 * yb.norm().max(1.0));
    }
}
