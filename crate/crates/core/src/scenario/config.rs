//! TOML scenario schema.
//!
//! Every config has an optional `name` and `seed` and one `[scenario]`
//! table whose `kind` selects the engine. Unknown keys are rejected.

use num_complex::Complex64;
use serde::Deserialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measure::{PointerSpec, RingSystem};
use crate::qftfun::{Basis, FunctionalState, LatticeSpec};
use crate::relkin::ModeSum;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Trajectory(TrajectoryScenario),
    Nonrel(NonrelScenario),
    Qft(QftScenario),
    Born(BornScenario),
    Collapse(CollapseScenario),
}

/// A complex number as `{ re, im }`.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexValue> for Complex64 {
    fn from(c: ComplexValue) -> Self {
        Complex64::new(c.re, c.im)
    }
}

/// Plane-wave term c·e^{−ik·x} of a Klein–Gordon wave.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: Vec<f64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// ModeSum record: ψ = Σ c e^{−ik·x} on a periodic cell.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub mass: f64,
    pub dimension: usize,
    pub cell: f64,
    pub modes: Vec<ModeConfig>,
}

impl WaveConfig {
    pub fn build(&self) -> Result<ModeSum> {
        let mut modes = Vec::with_capacity(self.modes.len());
        for m in &self.modes {
            if m.k.len() != self.dimension {
                return Err(Error::invalid(format!(
                    "mode wave vector {:?} does not have {} components",
                    m.k, self.dimension
                )));
            }
            let mut k = [0.0; 3];
            k[..m.k.len()].copy_from_slice(&m.k);
            modes.push((k, Complex64::new(m.re, m.im)));
        }
        ModeSum::from_coefficients(self.mass, self.dimension, self.cell, modes)
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryScenario {
    pub wave: WaveConfig,
    /// (t, x…) of the starting event.
    pub start: Vec<f64>,
    pub tau_span: f64,
    /// Slice time for the crossing record.
    pub slice: Option<f64>,
    /// Grid points per dimension for the particle-number quadrature.
    pub grid_points: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Expected crossing signs at the slice (checked with --check).
    pub expect_signs: Option<Vec<i8>>,
    /// Expected number of creation/annihilation events.
    pub expect_events: Option<usize>,
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NonrelScenario {
    pub mass: f64,
    pub epsilons: Vec<f64>,
    /// Raw coefficients of the modes k = +εm and k = −εm.
    pub amplitudes: [f64; 2],
    #[serde(default = "default_nonrel_tol")]
    pub tol: f64,
    pub expect_order: Option<f64>,
}

fn default_nonrel_tol() -> f64 {
    1e-12
}

impl NonrelScenario {
    /// Member of the ε-family: modes k = ±εm on the cell 2π/(εm), start
    /// x0 = 0.3/(εm), span 5/(ε²m). Lengths scale with 1/ε and times with
    /// 1/ε², so the Schrödinger paths coincide after rescaling.
    pub fn member(&self, eps: f64) -> Result<(ModeSum, [f64; 3], f64)> {
        let m = self.mass;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
        }
        let k = eps * m;
        let wave = ModeSum::from_coefficients(
            m,
            1,
            2.0 * PI / k,
            [
                ([k, 0.0, 0.0], Complex64::new(self.amplitudes[0], 0.0)),
                ([-k, 0.0, 0.0], Complex64::new(self.amplitudes[1], 0.0)),
            ],
        )?;
        Ok((wave, [0.3 / k, 0.0, 0.0], 5.0 / (eps * eps * m)))
    }
}

/// Fock-basis coefficient of the initial state.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OccupationTerm {
    pub occ: Vec<usize>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn build_state(basis: &Basis, terms: &[OccupationTerm]) -> Result<FunctionalState> {
    let terms: Vec<(Vec<usize>, Complex64)> = terms.iter().map(|t| (t.occ.clone(), Complex64::new(t.re, t.im))).collect();
    FunctionalState::from_occupations(basis, &terms)
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QftScenario {
    pub length: f64,
    pub modes: usize,
    pub mass: f64,
    pub lambda: f64,
    pub n_max: usize,
    /// Defaults to one period 2π/ω of the slowest mode.
    pub t_end: Option<f64>,
    pub steps: usize,
    #[serde(default)]
    pub truncation_check: bool,
    pub initial: Vec<OccupationTerm>,
}

impl QftScenario {
    pub fn spec(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.length, self.modes, self.mass, self.lambda, self.n_max)
    }

    pub fn state(&self, basis: &Basis) -> Result<FunctionalState> {
        build_state(basis, &self.initial)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PointerConfig {
    pub mass: f64,
    pub g: f64,
    pub duration: f64,
    pub sigma: f64,
    pub window: Option<f64>,
    pub overlap_threshold: Option<f64>,
}

impl PointerConfig {
    pub fn build(&self) -> PointerSpec {
        let mut p = PointerSpec::new(self.mass, self.g, self.duration, self.sigma);
        if let Some(w) = self.window {
            p.window = w;
        }
        if let Some(t) = self.overlap_threshold {
            p.overlap_threshold = t;
        }
        p
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub length: f64,
    pub mass: f64,
    pub momenta: Vec<i32>,
    pub amplitudes: Vec<ComplexValue>,
}

impl RingConfig {
    pub fn build(&self) -> Result<RingSystem> {
        RingSystem::new(self.length, self.mass, self.momenta.clone(), self.amplitudes.iter().map(|&c| c.into()).collect())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub sizes: Vec<usize>,
    pub repeats: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BornScenario {
    pub ring: RingConfig,
    pub pointer: PointerConfig,
    pub samples: usize,
    #[serde(default = "default_t_after")]
    pub t_after: f64,
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    pub convergence: Option<ConvergenceConfig>,
}

fn default_t_after() -> f64 {
    1.0
}

fn default_grid() -> [usize; 2] {
    [256, 256]
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CollapseScenario {
    pub length: f64,
    pub modes: usize,
    pub mass: f64,
    pub n_max: usize,
    pub pointer: PointerConfig,
    pub t_final: f64,
    pub samples: usize,
    #[serde(default = "default_cells")]
    pub cells: usize,
    pub initial: Vec<OccupationTerm>,
}

fn default_cells() -> usize {
    32
}

impl CollapseScenario {
    pub fn spec(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.length, self.modes, self.mass, 0.0, self.n_max)
    }

    pub fn state(&self, basis: &Basis) -> Result<FunctionalState> {
        build_state(basis, &self.initial)
    }
}

/// Parse a config from TOML text.
pub fn parse(text: &str) -> Result<Config> {
    toml::from_str(text).map_err(|e| Error::invalid(format!("config: {}", e.message())))
}
