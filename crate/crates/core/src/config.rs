//! Solver configuration and the resolved parameter set.

use serde::{Deserialize, Serialize};

use crate::ellipsoid::EllipsoidConfig;
use crate::error::{Error, Result};
use crate::reduction::log2_clamped;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Theory,
    Practical,
}

/// How `membership` solves the configuration LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    ColumnGeneration,
    Ellipsoid,
}

/// Which solver answers each augmentation subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugSolverKind {
    /// Configuration LP plus randomized rounding.
    Lp,
    /// Exhaustive search (tiny instances only).
    Exact,
}

/// User-facing configuration. Unset overrides fall back to the mode defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub beta: Option<u32>,
    pub gamma: Option<f64>,
    pub h: Option<usize>,
    pub delta: Option<f64>,
    pub samples: Option<usize>,
    /// Marginals are computed exactly while at most this many coordinates are fractional.
    pub exact_marginal_limit: usize,
    pub sep_attempts: Option<usize>,
    pub rounding_attempts: usize,
    pub engine: Option<Engine>,
    pub aug_solver: AugSolverKind,
    pub cg_iterations: usize,
    pub ellipsoid_cap: usize,
    pub inner_radius: f64,
    pub grid_steps: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mode: Mode::Practical,
            seed: 0,
            alpha: None,
            beta: None,
            gamma: None,
            h: None,
            delta: None,
            samples: None,
            exact_marginal_limit: 10,
            sep_attempts: None,
            rounding_attempts: 32,
            engine: None,
            aug_solver: AugSolverKind::Lp,
            cg_iterations: 200,
            ellipsoid_cap: 200_000,
            inner_radius: 1e-6,
            grid_steps: 40,
        }
    }
}

/// Concrete parameters for an instance of size `n`.
#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub mode: Mode,
    pub seed: u64,
    pub n: usize,
    pub alpha: f64,
    pub beta: u32,
    /// Canonical threshold: complex players end with value at least `1/γ`.
    pub gamma: f64,
    pub h: usize,
    /// Budget handed to the LP before rounding, `⌈6β log³ n⌉`.
    pub rounding_gamma: f64,
    pub delta: f64,
    pub samples: usize,
    pub exact_marginal_limit: usize,
    pub sep_attempts: usize,
    pub rounding_attempts: usize,
    pub engine: Engine,
    pub aug_solver: AugSolverKind,
    pub cg_iterations: usize,
    pub ellipsoid: EllipsoidConfig,
    pub grid_steps: usize,
}

/// `γ ≥ 1000 α³ β³ h⁴ log² n`.
pub fn theory_gamma(alpha: f64, beta: f64, h: usize, n: usize) -> f64 {
    let l = log2_clamped(n);
    (1000.0 * alpha.powi(3) * beta.powi(3) * (h as f64).powi(4) * l * l).ceil()
}

/// Smallest `h` with `h ≥ 1 + log(βn²)/log(γ/(2α))` where `γ` itself grows with `h`.
pub fn theory_depth(alpha: f64, beta: f64, n: usize) -> usize {
    let mut h = 1usize;
    loop {
        let gamma = theory_gamma(alpha, beta, h, n);
        let need = 1.0 + (beta * (n * n) as f64).ln() / (gamma / (2.0 * alpha)).ln();
        let need = need.ceil().max(1.0) as usize;
        if need <= h {
            return h;
        }
        h = need;
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))
    }

    pub fn resolve(&self, n: usize) -> Result<Params> {
        let l = log2_clamped(n);
        let alpha = self.alpha.unwrap_or(40.0);
        let beta = self.beta.unwrap_or((10.0 * l).ceil() as u32);
        if !(alpha >= 1.0) || beta < 1 {
            return Err(Error::Input("alpha must be ≥ 1 and beta ≥ 1".into()));
        }
        let (gamma, h, delta, samples, engine) = match self.mode {
            Mode::Theory => {
                let h = self.h.unwrap_or_else(|| theory_depth(alpha, beta as f64, n));
                let gamma = self.gamma.unwrap_or_else(|| theory_gamma(alpha, beta as f64, h, n));
                let delta = self.delta.unwrap_or(1.0 / (10.0 * (n * n) as f64));
                let samples = self.samples.unwrap_or_else(|| (10.0 / (delta * delta) * (1.0 + (n as f64).ln())).ceil() as usize);
                (gamma, h, delta, samples, Engine::Ellipsoid)
            }
            Mode::Practical => (
                self.gamma.unwrap_or(8.0),
                self.h.unwrap_or(2),
                self.delta.unwrap_or(0.02),
                self.samples.unwrap_or(2000),
                Engine::ColumnGeneration,
            ),
        };
        if !(gamma >= 1.0) || h < 1 || !(delta > 0.0 && delta <= 1.0) || samples == 0 {
            return Err(Error::Input("need gamma ≥ 1, h ≥ 1, delta in (0, 1] and samples ≥ 1".into()));
        }
        let ln_n = (n.max(2) as f64).ln().ceil() as usize;
        Ok(Params {
            mode: self.mode,
            seed: self.seed,
            n,
            alpha,
            beta,
            gamma,
            h,
            rounding_gamma: (6.0 * beta as f64 * l.powi(3)).ceil(),
            delta,
            samples,
            exact_marginal_limit: self.exact_marginal_limit,
            sep_attempts: self.sep_attempts.unwrap_or(64 * ln_n),
            rounding_attempts: self.rounding_attempts,
            engine: self.engine.unwrap_or(engine),
            aug_solver: self.aug_solver,
            cg_iterations: self.cg_iterations,
            ellipsoid: EllipsoidConfig {
                outer_radius: 1e3,
                inner_radius: self.inner_radius,
                cap: self.ellipsoid_cap,
                center: None,
            },
            grid_steps: self.grid_steps,
        })
    }
}
