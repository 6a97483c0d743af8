//! Numeric defaults shared by every module.
//!
//! Library entry points take the relevant option struct explicitly; the CLI
//! builds a [`Settings`] from these defaults, then environment variables,
//! then flags.

use serde::{Deserialize, Serialize};

/// Magnitude floor below which `H_1` counts as zero in strict mode.
pub const STRICT_H1_FLOOR: f64 = 1e-12;

/// Relative floor for denominators of meromorphic ratios (`M`, `N`, `Phi`).
pub const POLE_FLOOR: f64 = 1e-12;

/// Tolerance for re-verifying the defining conditions of combined solutions.
pub const CONDITION_TOL: f64 = 1e-8;

/// Options for the pencil integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    /// Number of uniform grid intervals on `[0, T]`.
    pub grid_n: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Solutions are renormalized once `max(|y|, |y'|)` exceeds this.
    pub rescale_above: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub const MIN_GRID: usize = 512;
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            grid_n: 1024,
            rtol: 1e-10,
            atol: 1e-10,
            rescale_above: 1e100,
            max_steps: 5_000_000,
        }
    }
}

/// Options for contour counting and root refinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectraOptions {
    /// Initial boundary samples per unit of edge length.
    pub samples_per_unit: f64,
    /// Consecutive boundary samples must differ in phase by less than this.
    pub max_phase_step: f64,
    /// Newton stops once the step is below `root_tol * (1 + |lambda|)`.
    pub root_tol: f64,
    /// Accepted roots satisfy `|f| <= residual_tol * max(1, median boundary |f|)`.
    pub residual_tol: f64,
    pub max_newton: usize,
    /// Boxes smaller than this (relative to `1 + |center|`) are treated as one cluster.
    pub cluster_size: f64,
    pub perturb_attempts: usize,
}

impl Default for SpectraOptions {
    fn default() -> Self {
        Self {
            samples_per_unit: 8.0,
            max_phase_step: std::f64::consts::FRAC_PI_4,
            root_tol: 1e-12,
            residual_tol: 1e-8,
            max_newton: 100,
            cluster_size: 1e-4,
            perturb_attempts: 5,
        }
    }
}

/// Options for the damped Gauss-Newton inverse solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub damping: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub fd_step: f64,
    pub max_escalations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 1e-3,
            max_iter: 50,
            tol: 1e-8,
            fd_step: 1e-6,
            max_escalations: 10,
        }
    }
}

/// Everything a run needs, in one place.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub ode: OdeOptions,
    pub spectra: SpectraOptions,
    pub solver: SolverOptions,
}
