//! Brute-force discrete-time game: backward induction over explicit stage
//! menus, independent of the closed-form operator used by the solver.
//!
//! Each stage lets player-ξ pick an action of U or nothing and player-η an
//! action of V or nothing. The stage payoff matrix is enumerated in full and
//! the stage value is obtained as `sup_ξ inf_η` (lower value: the minimizer
//! reacts to the maximizer's stage action) or `inf_η sup_ξ` (upper value).
//! When both players act only η's jump is applied and ξ pays nothing.

use std::fmt;

use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::grid::{Grid, GridFunction};
use crate::problem::GameProblem;
use crate::vecops::{add, axpy};

/// What follows an impulse within a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpulseTiming {
    /// Jump at the start of the stage, then drift for `dt` from the
    /// post-jump state.
    ThenDrift,
    /// Jump and read the continuation value at the post-jump state directly
    /// (the `T → 0` limit for the impulse branches).
    Instantaneous,
}

/// Input of the backward induction.
#[derive(Debug, Clone)]
pub struct DiscreteGameSpec {
    pub problem: GameProblem,
    pub grid: Grid,
    pub dt: f64,
    pub steps: usize,
    pub exec: Execution,
}

impl DiscreteGameSpec {
    pub fn new(problem: GameProblem, grid: Grid, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        if grid.dim() != problem.dimension() {
            return Err(Error::Dimension {
                expected: problem.dimension(),
                got: grid.dim(),
            });
        }
        Ok(Self {
            problem,
            grid,
            dt,
            steps,
            exec: Execution::default(),
        })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    /// `‖f‖∞·e^{−λT}/λ`, the error of the zero terminal condition.
    pub fn tail_bound(&self) -> f64 {
        let l = self.problem.discount();
        self.problem.gain_sup() * (-l * self.horizon()).exp() / l
    }
}

/// Payoff matrix of one stage at `x`, row-major with
/// `rows = {none} ∪ U`, `cols = {none} ∪ V`.
pub struct StageMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl StageMatrix {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    /// `max_r min_c`
    pub fn lower(&self) -> f64 {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.at(r, c)).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min_c max_r`
    pub fn upper(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.at(r, c)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    }
}

fn drift_stage(problem: &GameProblem, next: &GridFunction, y: &[f64], dt: f64) -> f64 {
    let lambda = problem.discount();
    let decay = (-lambda * dt).exp();
    let foot = axpy(y, dt, &problem.b(y));
    problem.f(y) * (1.0 - decay) / lambda + decay * next.interpolate(&foot)
}

/// Enumerates the stage payoffs at `x` with continuation `next`.
pub fn stage_matrix(
    problem: &GameProblem,
    next: &GridFunction,
    x: &[f64],
    dt: f64,
    timing: ImpulseTiming,
) -> StageMatrix {
    let u = problem.max_player();
    let v = problem.min_player();
    let after_jump = |y: &[f64]| match timing {
        ImpulseTiming::ThenDrift => drift_stage(problem, next, y, dt),
        ImpulseTiming::Instantaneous => next.interpolate(y),
    };
    let rows = u.len() + 1;
    let cols = v.len() + 1;
    // η-columns do not depend on the row: ξ is suppressed whenever η acts
    let eta_vals: Vec<f64> = (0..v.len())
        .map(|j| v.cost(j) + after_jump(&add(x, v.action(j))))
        .collect();
    let mut entries = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let first = if r == 0 {
            drift_stage(problem, next, x, dt)
        } else {
            -u.cost(r - 1) + after_jump(&add(x, u.action(r - 1)))
        };
        entries.push(first);
        entries.extend_from_slice(&eta_vals);
    }
    StageMatrix { rows, cols, entries }
}

#[derive(Clone, Copy)]
enum Order {
    Lower,
    Upper,
}

fn induction(spec: &DiscreteGameSpec, order: Order) -> GridFunction {
    let mut value = GridFunction::constant(spec.grid.clone(), 0.0);
    for _ in 0..spec.steps {
        let next = &value;
        let vals = map_indices(spec.grid.len(), spec.exec, |k| {
            let x = spec.grid.point(k);
            let m = stage_matrix(&spec.problem, next, &x, spec.dt, ImpulseTiming::ThenDrift);
            match order {
                Order::Lower => m.lower(),
                Order::Upper => m.upper(),
            }
        });
        value = GridFunction::from_parts(spec.grid.clone(), vals);
    }
    value
}

/// Lower value of the `steps`-stage game with zero terminal payoff.
pub fn backward_induction_lower(spec: &DiscreteGameSpec) -> GridFunction {
    induction(spec, Order::Lower)
}

/// Upper value of the `steps`-stage game with zero terminal payoff.
pub fn backward_induction_upper(spec: &DiscreteGameSpec) -> GridFunction {
    induction(spec, Order::Upper)
}

/// Largest `|upper − lower|` over the nodes selected by `mask`.
pub fn value_gap(lower: &GridFunction, upper: &GridFunction, mask: &[bool]) -> Result<f64> {
    lower.masked_sup_distance(upper, mask)
}

/// Result of checking the one-stage dynamic programming identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DppReport {
    pub max_gap: f64,
    pub worst_node: Option<usize>,
    pub nodes_checked: usize,
    pub tol: f64,
    pub passed: bool,
}

impl fmt::Display for DppReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dpp_max_gap={:e}", self.max_gap)?;
        if let Some(k) = self.worst_node {
            writeln!(f, "dpp_worst_node={k}")?;
        }
        writeln!(f, "dpp_nodes_checked={}", self.nodes_checked)?;
        writeln!(f, "dpp_tol={:e}", self.tol)?;
        writeln!(f, "dpp_passed={}", self.passed)
    }
}

/// Compares `value` against the right-hand side of the dynamic programming
/// identity over one stage of length `dt`, with `value` itself as the
/// continuation. The stage game is solved by enumeration (`sup_ξ inf_η`);
/// impulse branches read the continuation right after the jump.
pub fn dpp_check(
    problem: &GameProblem,
    value: &GridFunction,
    dt: f64,
    tol: f64,
    mask: &[bool],
) -> Result<DppReport> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let grid = value.grid();
    if mask.len() != grid.len() {
        return Err(Error::GridMismatch("mask length differs from node count".into()));
    }
    let gaps = map_indices(grid.len(), Execution::default(), |k| {
        if !mask[k] {
            return None;
        }
        let x = grid.point(k);
        let rhs = stage_matrix(problem, value, &x, dt, ImpulseTiming::Instantaneous).lower();
        Some((value.value(k) - rhs).abs())
    });
    let mut max_gap = 0.0;
    let mut worst = None;
    let mut checked = 0;
    for (k, g) in gaps.into_iter().enumerate() {
        if let Some(g) = g {
            checked += 1;
            if g > max_gap || worst.is_none() {
                max_gap = g;
                worst = Some(k);
            }
        }
    }
    Ok(DppReport {
        max_gap,
        worst_node: worst,
        nodes_checked: checked,
        tol,
        passed: max_gap <= tol,
    })
}
