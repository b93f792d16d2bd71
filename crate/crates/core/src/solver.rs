//! Semi-Lagrangian fixed-point iteration for the classic double-obstacle QVI.
//!
//! One application of the discrete operator at node `x` reads
//!
//! ```text
//! transport(x) = f(x)·(1 − e^{−λΔt})/λ + e^{−λΔt}·v(x + Δt·b(x))
//! (T v)(x)     = min( H_inf v(x), max( H_sup v(x), transport(x) ) )
//! ```
//!
//! The obstacles read the previous iterate only (Jacobi sweep), so a sweep
//! is a pure map over nodes and parallelizes without changing the result.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::grid::{Grid, GridFunction};
use crate::problem::{value_bound, AssumptionReport, GameProblem};
use crate::qvi::{h_inf_chi, h_sup_c, Region};
use crate::vecops::axpy;

/// Starting point of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// `+‖f‖∞/λ` everywhere.
    UpperBound,
    /// `−‖f‖∞/λ` everywhere.
    LowerBound,
    Zero,
    Given(GridFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Pseudo-time step; `None` picks `min h / max(‖b‖∞, 1)`.
    pub dt: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub initial_guess: InitialGuess,
    pub exec: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: None,
            tol: 1e-8,
            max_iters: 200_000,
            initial_guess: InitialGuess::UpperBound,
            exec: Execution::default(),
        }
    }
}

impl SolverConfig {
    pub fn resolved_dt(&self, problem: &GameProblem, grid: &Grid) -> f64 {
        self.dt
            .unwrap_or_else(|| grid.min_spacing() / problem.drift_sup().max(1.0))
    }
}

/// Active branch and action at one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyEntry {
    pub region: Region,
    /// Index into U for `XiImpulse`, into V for `EtaImpulse`.
    pub action: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub value: GridFunction,
    pub iterations: usize,
    pub final_sup_change: f64,
    pub converged: bool,
    pub policy: Vec<PolicyEntry>,
    pub dt: f64,
    /// Sup-norm changes of the last few sweeps, most recent last.
    pub recent_changes: Vec<f64>,
}

impl fmt::Display for SolveResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "iterations={}", self.iterations)?;
        writeln!(f, "final_sup_change={:e}", self.final_sup_change)?;
        writeln!(f, "converged={}", self.converged)?;
        writeln!(f, "dt={}", self.dt)?;
        let count = |r: Region| self.policy.iter().filter(|p| p.region == r).count();
        writeln!(f, "nodes_continue={}", count(Region::Continue))?;
        writeln!(f, "nodes_xi_impulse={}", count(Region::XiImpulse))?;
        writeln!(f, "nodes_eta_impulse={}", count(Region::EtaImpulse))?;
        if !self.converged {
            let tail: Vec<String> = self.recent_changes.iter().map(|c| format!("{c:e}")).collect();
            writeln!(f, "recent_changes={}", tail.join(";"))?;
        }
        Ok(())
    }
}

impl SolveResult {
    /// CSV with columns `x_1..x_n,region,a_1..a_n`.
    pub fn write_policy_csv<W: Write>(&self, problem: &GameProblem, writer: W) -> Result<()> {
        let grid = self.value.grid();
        let n = grid.dim();
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=n).map(|a| format!("x_{a}")).collect();
        header.push("region".into());
        header.extend((1..=n).map(|a| format!("a_{a}")));
        w.write_record(&header)?;
        for (k, p) in self.policy.iter().enumerate() {
            let mut row: Vec<String> = grid.point(k).iter().map(|v| v.to_string()).collect();
            row.push(p.region.name().into());
            let action = match (p.region, p.action) {
                (Region::XiImpulse, Some(i)) => Some(problem.max_player().action(i)),
                (Region::EtaImpulse, Some(i)) => Some(problem.min_player().action(i)),
                _ => None,
            };
            match action {
                Some(a) => row.extend(a.iter().map(|v| v.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), n)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Semi-Lagrangian transport value at `x`.
fn transport(problem: &GameProblem, gf: &GridFunction, x: &[f64], dt: f64) -> f64 {
    let lambda = problem.discount();
    let decay = (-lambda * dt).exp();
    let foot = axpy(x, dt, &problem.b(x));
    problem.f(x) * (1.0 - decay) / lambda + decay * gf.interpolate(&foot)
}

fn apply_node(problem: &GameProblem, gf: &GridFunction, k: usize, dt: f64) -> (f64, PolicyEntry) {
    let x = gf.grid().point(k);
    let stay = transport(problem, gf, &x, dt);
    let sup = h_sup_c(problem, gf, &x);
    let inf = h_inf_chi(problem, gf, &x);
    // ties prefer CONTINUE, then XI_IMPULSE, then ETA_IMPULSE
    let (inner, inner_policy) = if stay >= sup.value {
        (stay, PolicyEntry { region: Region::Continue, action: None })
    } else {
        (sup.value, PolicyEntry { region: Region::XiImpulse, action: Some(sup.action) })
    };
    if inner <= inf.value {
        (inner, inner_policy)
    } else {
        (inf.value, PolicyEntry { region: Region::EtaImpulse, action: Some(inf.action) })
    }
}

fn apply(
    problem: &GameProblem,
    gf: &GridFunction,
    dt: f64,
    exec: Execution,
) -> (GridFunction, Vec<PolicyEntry>) {
    let out = map_indices(gf.grid().len(), exec, |k| apply_node(problem, gf, k, dt));
    let (values, policy): (Vec<f64>, Vec<PolicyEntry>) = out.into_iter().unzip();
    (GridFunction::from_parts(gf.grid().clone(), values), policy)
}

/// One application of the discrete operator.
pub fn bellman_operator(problem: &GameProblem, gf: &GridFunction, dt: f64) -> GridFunction {
    bellman_operator_with(problem, gf, dt, Execution::default())
}

pub fn bellman_operator_with(
    problem: &GameProblem,
    gf: &GridFunction,
    dt: f64,
    exec: Execution,
) -> GridFunction {
    apply(problem, gf, dt, exec).0
}

fn check_solvable(problem: &GameProblem, dt: f64) -> Result<()> {
    if !problem.has_positive_costs() {
        return Err(Error::InvalidProblem(
            "impulse costs must have a positive lower bound".into(),
        ));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Iterates the discrete operator until the iterate is within `tol` of the
/// fixed point or `max_iters` sweeps have run.
///
/// The stopping test is the a-posteriori estimate `change·ρ/(1 − ρ) ≤ tol`
/// with `ρ` the larger of `e^{−λΔt}` and the ratio of the last two sweep
/// changes; it implies `change ≤ tol`. Binding obstacles can slow the
/// iteration below the `e^{−λΔt}` rate, which the observed ratio picks up.
/// Non-convergence is not an error: the result carries `converged = false`
/// and the recent sweep changes.
pub fn solve_fixed_point(
    problem: &GameProblem,
    grid: &Grid,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let dt = config.resolved_dt(problem, grid);
    check_solvable(problem, dt)?;
    if !(config.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", config.tol)));
    }
    let bound = value_bound(problem);
    let mut current = match &config.initial_guess {
        InitialGuess::UpperBound => GridFunction::constant(grid.clone(), bound),
        InitialGuess::LowerBound => GridFunction::constant(grid.clone(), -bound),
        InitialGuess::Zero => GridFunction::constant(grid.clone(), 0.0),
        InitialGuess::Given(gf) => {
            if gf.grid() != grid {
                return Err(Error::GridMismatch("initial guess is on another grid".into()));
            }
            gf.clone()
        }
    };

    let decay = (-problem.discount() * dt).exp();
    let mut recent = Vec::new();
    let mut change = f64::INFINITY;
    let mut previous = f64::INFINITY;
    let mut converged = false;
    let mut policy = Vec::new();
    let mut iterations = 0;
    while iterations < config.max_iters {
        let (next, pol) = apply(problem, &current, dt, config.exec);
        change = next.sup_distance(&current)?;
        current = next;
        policy = pol;
        iterations += 1;
        if recent.len() == 8 {
            recent.remove(0);
        }
        recent.push(change);
        converged = within_tol(change, previous, decay, config.tol);
        if converged {
            break;
        }
        previous = change;
    }
    Ok(SolveResult {
        value: current,
        iterations,
        final_sup_change: change,
        converged,
        policy,
        dt,
        recent_changes: recent,
    })
}

fn within_tol(change: f64, previous: f64, decay: f64, tol: f64) -> bool {
    if change == 0.0 {
        return true;
    }
    let rate = if previous.is_finite() && previous > 0.0 {
        decay.max(change / previous)
    } else {
        decay
    };
    rate < 1.0 && change * rate / (1.0 - rate) <= tol
}

fn random_function(grid: &Grid, rng: &mut ChaCha8Rng, scale: f64) -> GridFunction {
    let values = (0..grid.len()).map(|_| rng.gen_range(-scale..=scale)).collect();
    GridFunction::from_parts(grid.clone(), values)
}

fn sample_scale(problem: &GameProblem) -> f64 {
    (2.0 * value_bound(problem)).max(1.0)
}

/// Largest observed `‖T g₁ − T g₂‖∞ / ‖g₁ − g₂‖∞` over random pairs with
/// values in `[−B, B]`, `B = max(1, 2‖f‖∞/λ)`. Obstacles cannot bind
/// when every impulse costs more than `2B`.
pub fn contraction_check(
    problem: &GameProblem,
    grid: &Grid,
    dt: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_solvable(problem, dt)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = sample_scale(problem);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let a = random_function(grid, &mut rng, scale);
        let b = random_function(grid, &mut rng, scale);
        let d = a.sup_distance(&b)?;
        if d == 0.0 {
            continue;
        }
        let ta = bellman_operator(problem, &a, dt);
        let tb = bellman_operator(problem, &b, dt);
        worst = worst.max(ta.sup_distance(&tb)? / d);
    }
    Ok(worst)
}

/// Number of nodes where `g₁ ≤ g₂` but `T g₁ > T g₂`, over random ordered pairs.
pub fn monotonicity_check(
    problem: &GameProblem,
    grid: &Grid,
    dt: f64,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    check_solvable(problem, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = sample_scale(problem);
    let mut violations = 0;
    for _ in 0..trials {
        let lo = random_function(grid, &mut rng, scale);
        let hi_vals: Vec<f64> = lo
            .values()
            .iter()
            .map(|v| v + rng.gen_range(0.0..=scale))
            .collect();
        let hi = GridFunction::from_parts(grid.clone(), hi_vals);
        let tl = bellman_operator(problem, &lo, dt);
        let th = bellman_operator(problem, &hi, dt);
        violations += tl
            .values()
            .iter()
            .zip(th.values())
            .filter(|(a, b)| a > b)
            .count();
    }
    Ok(violations)
}

/// Comparison of adjacent-node differences of a solved value against the
/// continuity modulus built from `C_f`, `C_b`, `λ` and the value bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusReport {
    /// Largest `|ΔV| − bound` over adjacent interior pairs (≤ 0 when every pair passes).
    pub worst_excess: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub pairs_checked: usize,
    pub passed: bool,
}

/// Modulus bound at distance `d`:
/// `min_T C_f/|C_b − λ|·d·|e^{(C_b−λ)T} − 1| + 2·B·e^{−λT}`, with the
/// `C_b = λ` limit `C_f·d·T`. The minimum is taken over a fixed scan of `T`.
pub fn modulus_bound(c_f: f64, c_b: f64, lambda: f64, bound: f64, d: f64) -> f64 {
    let t_max = 50.0 / lambda;
    let steps = 4000;
    let rate = c_b - lambda;
    (0..=steps)
        .map(|i| {
            let t = t_max * i as f64 / steps as f64;
            let head = if rate.abs() < 1e-12 {
                c_f * d * t
            } else {
                c_f / rate.abs() * d * ((rate * t).exp() - 1.0).abs()
            };
            head + 2.0 * bound * (-lambda * t).exp()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn continuity_modulus_check(
    problem: &GameProblem,
    report: &AssumptionReport,
    value: &GridFunction,
    mask: &[bool],
    slack: f64,
) -> ModulusReport {
    let grid = value.grid();
    let c_f = report.lipschitz_f_estimate.unwrap_or(0.0);
    let c_b = report.lipschitz_b();
    let bound = value_bound(problem);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = None;
    let mut pairs = 0;
    let mut cache: Vec<(f64, f64)> = Vec::new();
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
            if !mask[j] {
                continue;
            }
            let h = grid.spacing()[a];
            let allowed = match cache.iter().find(|(d, _)| *d == h) {
                Some((_, b)) => *b,
                None => {
                    let b = modulus_bound(c_f, c_b, problem.discount(), bound, h);
                    cache.push((h, b));
                    b
                }
            };
            let excess = (value.value(k) - value.value(j)).abs() - (allowed + slack);
            pairs += 1;
            if excess > worst {
                worst = excess;
                worst_pair = Some((k, j));
            }
        }
    }
    ModulusReport {
        worst_excess: worst,
        worst_pair,
        pairs_checked: pairs,
        passed: worst <= 0.0,
    }
}
