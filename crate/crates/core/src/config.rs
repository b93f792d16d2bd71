//! Self-describing TOML problem file.
//!
//! ```toml
//! dimension = 1
//! discount = 1.0
//! seed = 7
//!
//! [domain]
//! lower = [-2.0]
//! upper = [2.0]
//!
//! [grid]
//! nodes_per_axis = [81]
//!
//! [drift]
//! kind = "zero"
//!
//! [gain]
//! kind = "peak"
//! center = [0.0]
//!
//! [max_player]
//! actions = [[-0.5], [0.5]]
//! cost = { kind = "proportional", k1 = 0.4 }
//!
//! [min_player]
//! actions = [[-0.5], [0.5]]
//! cost = { kind = "fixed_plus_proportional", k0 = 0.3, k1 = 0.2 }
//!
//! [solver]
//! tol = 1e-8
//! initial_guess = "upper_bound"
//!
//! [oracle]
//! dt = 0.01
//! steps = 2000
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::oracle::DiscreteGameSpec;
use crate::problem::{ActionSet, BoxDomain, Cost, Drift, GameProblem, Gain};
use crate::solver::{InitialGuess, SolverConfig};
use crate::trajectory::ImpulseControl;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub drift: Drift,
    pub gain: Gain,
    pub discount: f64,
    pub max_player: PlayerConfig,
    pub min_player: PlayerConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub oracle: Option<OracleSection>,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nodes_per_axis: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    pub actions: Vec<Vec<f64>>,
    pub cost: Cost,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum GuessKind {
    #[default]
    UpperBound,
    LowerBound,
    Zero,
    File,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub initial_guess: GuessKind,
    /// Value CSV read when `initial_guess = "file"`; relative to the config file.
    pub initial_guess_file: Option<PathBuf>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: None,
            tol: default_tol(),
            max_iters: default_max_iters(),
            initial_guess: GuessKind::default(),
            initial_guess_file: None,
        }
    }
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iters() -> usize {
    200_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub time: f64,
    pub action: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub step: f64,
    #[serde(default)]
    pub max_controls: Vec<JumpConfig>,
    #[serde(default)]
    pub min_controls: Vec<JumpConfig>,
}

impl SimulateSection {
    pub fn controls(&self) -> Result<(ImpulseControl, ImpulseControl)> {
        let conv = |j: &[JumpConfig]| {
            ImpulseControl::new(j.iter().map(|j| (j.time, j.action.clone())).collect())
        };
        Ok((conv(&self.max_controls)?, conv(&self.min_controls)?))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Extra H2 scale factors on top of the ones implied by collinear actions.
    #[serde(default)]
    pub h2_scales: Vec<f64>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            h2_scales: Vec::new(),
        }
    }
}

fn default_samples() -> usize {
    256
}

/// Allowed gaps for the `compare` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    #[serde(default = "default_gap_tol")]
    pub value_gap_tol: f64,
    #[serde(default = "default_obstacle_tol")]
    pub obstacle_tol: f64,
    #[serde(default = "default_active_margin")]
    pub active_margin: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_dpp_factor")]
    pub dpp_tol_factor: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            oracle_tol: default_oracle_tol(),
            value_gap_tol: default_gap_tol(),
            obstacle_tol: default_obstacle_tol(),
            active_margin: default_active_margin(),
            residual_tol: default_residual_tol(),
            dpp_tol_factor: default_dpp_factor(),
        }
    }
}

fn default_oracle_tol() -> f64 {
    5e-2
}
fn default_gap_tol() -> f64 {
    5e-2
}
fn default_obstacle_tol() -> f64 {
    1e-6
}
fn default_active_margin() -> f64 {
    1e-3
}
fn default_residual_tol() -> f64 {
    1e-4
}
fn default_dpp_factor() -> f64 {
    10.0
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn problem(&self) -> Result<GameProblem> {
        GameProblem::new(
            self.dimension,
            self.drift.clone(),
            self.gain.clone(),
            self.discount,
            ActionSet::new(self.max_player.actions.clone(), self.max_player.cost.clone())?,
            ActionSet::new(self.min_player.actions.clone(), self.min_player.cost.clone())?,
        )
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        if self.domain.lower.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                got: self.domain.lower.len(),
            });
        }
        BoxDomain::new(self.domain.lower.clone(), self.domain.upper.clone())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::on(self.domain()?, self.grid.nodes_per_axis.clone())
    }

    /// Solver settings; `base_dir` resolves a relative initial-guess file.
    pub fn solver_config(&self, base_dir: &Path) -> Result<SolverConfig> {
        let s = &self.solver;
        let initial_guess = match s.initial_guess {
            GuessKind::UpperBound => InitialGuess::UpperBound,
            GuessKind::LowerBound => InitialGuess::LowerBound,
            GuessKind::Zero => InitialGuess::Zero,
            GuessKind::File => {
                let rel = s.initial_guess_file.as_ref().ok_or_else(|| {
                    Error::Config("initial_guess = \"file\" needs initial_guess_file".into())
                })?;
                let path = base_dir.join(rel);
                let file = std::fs::File::open(&path)?;
                InitialGuess::Given(crate::grid::GridFunction::read_csv(&self.grid()?, file)?)
            }
        };
        Ok(SolverConfig {
            dt: s.dt,
            tol: s.tol,
            max_iters: s.max_iters,
            initial_guess,
            ..Default::default()
        })
    }

    pub fn oracle_spec(&self) -> Result<DiscreteGameSpec> {
        let o = self
            .oracle
            .as_ref()
            .ok_or_else(|| Error::Config("missing [oracle] section".into()))?;
        DiscreteGameSpec::new(self.problem()?, self.grid()?, o.dt, o.steps)
    }
}
