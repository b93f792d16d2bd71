//! Joint run of solver, oracle and residual checks on one instance, reporting
//! each check with its measured and allowed value.

use std::fmt;

use crate::error::Result;
use crate::grid::{Grid, GridFunction};
use crate::oracle::{backward_induction_lower, backward_induction_upper, dpp_check, value_gap, DiscreteGameSpec};
use crate::problem::{value_bound, GameProblem};
use crate::qvi::{boundary_margin, h_inf_chi, h_sup_c, residual_report, strict_supersolution_transform, TransformParams};
use crate::solver::{solve_fixed_point, InitialGuess, SolveResult, SolverConfig};

/// One line of a comparison summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub allowed: f64,
    pub passed: bool,
    /// Free-form location of the worst offender, if any.
    pub detail: String,
}

impl Check {
    /// Passes when `measured ≤ allowed`.
    pub fn at_most(name: &'static str, measured: f64, allowed: f64) -> Self {
        Self {
            name,
            measured,
            allowed,
            passed: measured <= allowed,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} measured={:e} allowed={:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.allowed
        )?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

/// Tolerances of [`compare`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareTolerances {
    pub oracle: f64,
    pub value_gap: f64,
    /// Allowed `V − H_inf V` and `H_sup V − V` in the obstacle checks.
    pub obstacle: f64,
    /// Nodes with `H_inf V − V` above this count as below the upper obstacle.
    pub active_margin: f64,
    /// Residual threshold for the cross-check between the two inequalities.
    pub residual: f64,
    /// DPP gap allowed as a multiple of the solver tolerance.
    pub dpp_factor: f64,
}

impl Default for CompareTolerances {
    fn default() -> Self {
        Self {
            oracle: 5e-2,
            value_gap: 5e-2,
            obstacle: 1e-6,
            active_margin: 1e-3,
            residual: 1e-4,
            dpp_factor: 10.0,
        }
    }
}

/// Finite-difference error constant of a solved grid function: the largest
/// adjacent difference quotient along any axis over interior pairs. The
/// slack of the residual cross-check is `2·(max c/‖ξ‖)·L·h`.
pub fn fd_error_constant(value: &GridFunction, mask: &[bool]) -> f64 {
    let grid = value.grid();
    let mut worst = 0.0f64;
    for k in 0..grid.len() {
        if !mask[k] {
            continue;
        }
        let multi = grid.multi_index(k);
        for a in 0..grid.dim() {
            if multi[a] + 1 >= grid.nodes_per_axis()[a] {
                continue;
            }
            let mut next = multi.clone();
            next[a] += 1;
            let j = grid.flat_index(&next).expect("in range");
            if mask[j] {
                worst = worst.max((value.value(j) - value.value(k)).abs() / grid.spacing()[a]);
            }
        }
    }
    worst
}

/// Everything produced by [`compare`].
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub solve: SolveResult,
    pub lower: GridFunction,
    pub upper: GridFunction,
    pub interior: Vec<bool>,
    pub checks: Vec<Check>,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        writeln!(f, "passed={}", self.passed())
    }
}

fn worst_node(grid: &Grid, node: Option<usize>) -> String {
    match node {
        Some(k) => format!("node={k} x={:?}", grid.point(k)),
        None => String::new(),
    }
}

/// Solves `problem` on `grid`, runs both backward inductions of `oracle`, and
/// evaluates:
///
/// * `oracle_equivalence`: `|V − lower|` on interior nodes;
/// * `value_gap`: `|upper − lower|` on interior nodes;
/// * `upper_obstacle`: `max (V − H_inf V)` over all nodes;
/// * `lower_obstacle`: `max (H_sup V − V)` where `H_inf V − V > active_margin`;
/// * `uniqueness`: distance between the fixed points from `±‖f‖∞/λ`, against `2·tol`;
/// * `residual_cross_check`: largest `−residual_new − (tol_r + C·h)` over interior
///   nodes with `residual_classic ≥ −tol_r` (must be ≤ 0);
/// * `strict_supersolution`: `−min residual_new(v*)` over interior nodes
///   below the upper obstacle (must be < 0);
/// * `dpp_gap`: one-stage DPP gap with `T = Δt`.
pub fn compare(
    problem: &GameProblem,
    grid: &Grid,
    solver: &SolverConfig,
    oracle: &DiscreteGameSpec,
    tols: &CompareTolerances,
) -> Result<CompareReport> {
    let exec = solver.exec;
    let from_above = solve_fixed_point(
        problem,
        grid,
        &SolverConfig { initial_guess: InitialGuess::UpperBound, ..solver.clone() },
    )?;
    let from_below = solve_fixed_point(
        problem,
        grid,
        &SolverConfig { initial_guess: InitialGuess::LowerBound, ..solver.clone() },
    )?;
    let dt = from_above.dt;
    let v = &from_above.value;
    let interior = grid.interior_mask(boundary_margin(problem, dt));
    let mut checks = Vec::new();

    checks.push(Check::at_most(
        "solver_converged",
        from_above.final_sup_change,
        solver.tol,
    ).with_detail(format!("iterations={}", from_above.iterations)));

    let lower = backward_induction_lower(oracle);
    let upper = backward_induction_upper(oracle);
    checks.push(Check::at_most(
        "oracle_equivalence",
        v.masked_sup_distance(&lower, &interior)?,
        tols.oracle,
    ));
    checks.push(Check::at_most("value_gap", value_gap(&lower, &upper, &interior)?, tols.value_gap));

    let mut upper_excess = f64::NEG_INFINITY;
    let mut upper_at = None;
    let mut lower_excess = f64::NEG_INFINITY;
    let mut lower_at = None;
    let mut below_upper = vec![false; grid.len()];
    for k in 0..grid.len() {
        let x = grid.point(k);
        let val = v.value(k);
        let inf = h_inf_chi(problem, v, &x).value;
        if val - inf > upper_excess {
            upper_excess = val - inf;
            upper_at = Some(k);
        }
        if inf - val > tols.active_margin {
            below_upper[k] = true;
            let gap = h_sup_c(problem, v, &x).value - val;
            if gap > lower_excess {
                lower_excess = gap;
                lower_at = Some(k);
            }
        }
    }
    checks.push(
        Check::at_most("upper_obstacle", upper_excess, tols.obstacle)
            .with_detail(worst_node(grid, upper_at)),
    );
    checks.push(
        Check::at_most("lower_obstacle", lower_excess, tols.obstacle)
            .with_detail(worst_node(grid, lower_at)),
    );

    checks.push(Check::at_most(
        "uniqueness",
        from_above.value.sup_distance(&from_below.value)?,
        2.0 * solver.tol,
    ));

    let report = residual_report(problem, v, boundary_margin(problem, dt), tols.active_margin, exec);
    let kappa = problem.max_player().max_cost_per_length();
    let l_fd = fd_error_constant(v, &interior);
    let h = grid.spacing().iter().cloned().fold(0.0, f64::max);
    let slack = tols.residual + 2.0 * kappa * l_fd * h;
    let mut excess = f64::NEG_INFINITY;
    let mut excess_at = None;
    for e in report.interior() {
        if e.residual_classic >= -tols.residual {
            let x = -e.residual_new - slack;
            if x > excess {
                excess = x;
                excess_at = Some(e.node);
            }
        }
    }
    checks.push(
        Check::at_most("residual_cross_check", excess, 0.0).with_detail(format!(
            "allowed_violation={slack:e} {}",
            worst_node(grid, excess_at)
        )),
    );

    let bound = value_bound(problem);
    let mu = 0.9;
    let k_window = 2.0 * bound;
    let params = TransformParams {
        mu,
        alpha: 0.5
            * (1.0 - mu)
            * problem.max_player().min_cost().min(
                (problem.discount() * k_window - problem.gain_sup()) / problem.drift_sup().max(1e-9),
            ),
        k: k_window,
    };
    let star = strict_supersolution_transform(problem, v, params)?;
    let star_report = residual_report(problem, &star, boundary_margin(problem, dt), 0.0, exec);
    let mut least = f64::INFINITY;
    let mut least_at = None;
    for e in star_report.interior() {
        if below_upper[e.node] && e.residual_new < least {
            least = e.residual_new;
            least_at = Some(e.node);
        }
    }
    let strict = Check {
        name: "strict_supersolution",
        measured: least,
        allowed: 0.0,
        passed: least > 0.0,
        detail: format!("alpha={:e} {}", params.alpha, worst_node(grid, least_at)),
    };
    checks.push(strict);

    let dpp = dpp_check(problem, v, dt, tols.dpp_factor * solver.tol, &interior)?;
    checks.push(
        Check::at_most("dpp_gap", dpp.max_gap, dpp.tol).with_detail(worst_node(grid, dpp.worst_node)),
    );

    Ok(CompareReport {
        solve: from_above,
        lower,
        upper,
        interior,
        checks,
    })
}
