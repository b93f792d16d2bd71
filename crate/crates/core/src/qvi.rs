//! Cost operators, the gradient operator `F_inf^c`, pointwise residuals of
//! the classic and gradient-constrained quasi-variational inequalities, and
//! the strict-supersolution perturbation.
//!
//! Residuals are evaluated at grid nodes with finite-difference gradients of
//! the grid function itself. Face nodes and nodes whose impulse targets or
//! characteristic feet may leave the box are flagged as boundary nodes and
//! should be left out of any acceptance decision.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::grid::GridFunction;
use crate::problem::{value_bound, GameProblem};
use crate::vecops::{add, dot, norm};

/// Value of an optimized cost operator and the index of the action that
/// attains it (first in declared order on ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub action: usize,
}

/// `min_{η ∈ V} [ v(x + η) + χ(η) ]`.
pub fn h_inf_chi(problem: &GameProblem, gf: &GridFunction, x: &[f64]) -> Extremum {
    let v = problem.min_player();
    let mut best = Extremum {
        value: f64::INFINITY,
        action: 0,
    };
    for (i, eta) in v.actions().iter().enumerate() {
        let val = gf.interpolate(&add(x, eta)) + v.cost(i);
        if val < best.value {
            best = Extremum { value: val, action: i };
        }
    }
    best
}

/// `max_{ξ ∈ U} [ v(x + ξ) − c(ξ) ]`.
pub fn h_sup_c(problem: &GameProblem, gf: &GridFunction, x: &[f64]) -> Extremum {
    let u = problem.max_player();
    let mut best = Extremum {
        value: f64::NEG_INFINITY,
        action: 0,
    };
    for (i, xi) in u.actions().iter().enumerate() {
        let val = gf.interpolate(&add(x, xi)) - u.cost(i);
        if val > best.value {
            best = Extremum { value: val, action: i };
        }
    }
    best
}

/// `min_{ξ ∈ U} [ −p·ξ + c(ξ) ]`.
pub fn f_inf_c(problem: &GameProblem, p: &[f64]) -> f64 {
    f_inf_c_arg(problem, p).value
}

/// [`f_inf_c`] with its minimizing action.
pub fn f_inf_c_arg(problem: &GameProblem, p: &[f64]) -> Extremum {
    let u = problem.max_player();
    let mut best = Extremum {
        value: f64::INFINITY,
        action: 0,
    };
    for (i, xi) in u.actions().iter().enumerate() {
        let val = -dot(p, xi) + u.cost(i);
        if val < best.value {
            best = Extremum { value: val, action: i };
        }
    }
    best
}

/// `λv − Dv·b − f` at node `k`, with a finite-difference gradient.
fn pde_term(problem: &GameProblem, gf: &GridFunction, k: usize) -> (f64, Vec<f64>) {
    let x = gf.grid().point(k);
    let grad = gf.gradient_at(k);
    let b = problem.b(&x);
    let term = problem.discount() * gf.value(k) - dot(&grad, &b) - problem.f(&x);
    (term, grad)
}

/// Left-hand side of the classic QVI at node `k`:
/// `max{ min[λv − Dv·b − f, v − H_sup v], v − H_inf v }`.
pub fn residual_classic(problem: &GameProblem, gf: &GridFunction, node: usize) -> f64 {
    let x = gf.grid().point(node);
    let v = gf.value(node);
    let (pde, _) = pde_term(problem, gf, node);
    let sup = h_sup_c(problem, gf, &x).value;
    let inf = h_inf_chi(problem, gf, &x).value;
    pde.min(v - sup).max(v - inf)
}

/// Left-hand side of the gradient-constrained QVI at node `k`:
/// `max{ min[λv − Dv·b − f, F_inf^c(Dv)], v − H_inf v }`.
pub fn residual_new(problem: &GameProblem, gf: &GridFunction, node: usize) -> f64 {
    let x = gf.grid().point(node);
    let v = gf.value(node);
    let (pde, grad) = pde_term(problem, gf, node);
    let f_term = f_inf_c(problem, &grad);
    let inf = h_inf_chi(problem, gf, &x).value;
    pde.min(f_term).max(v - inf)
}

/// Which branch of the double-obstacle problem is active at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Continue,
    XiImpulse,
    EtaImpulse,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Continue => "CONTINUE",
            Region::XiImpulse => "XI_IMPULSE",
            Region::EtaImpulse => "ETA_IMPULSE",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Residuals and region label at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEntry {
    pub node: usize,
    pub point: Vec<f64>,
    pub residual_classic: f64,
    pub residual_new: f64,
    pub region: Region,
    /// Index into U for `XiImpulse`, into V for `EtaImpulse`.
    pub action: Option<usize>,
    pub boundary: bool,
}

/// Per-node residuals of both QVIs over a whole grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct QviResidualReport {
    pub entries: Vec<ResidualEntry>,
}

/// Width of the band along the faces where clamping can influence a node:
/// the largest impulse plus one characteristic step.
pub fn boundary_margin(problem: &GameProblem, dt: f64) -> f64 {
    problem
        .max_player()
        .max_norm()
        .max(problem.min_player().max_norm())
        + problem.drift_sup() * dt
}

/// Evaluates both residuals at every node.
///
/// Region labels: `XiImpulse` when `v ≤ H_sup v + region_tol`, otherwise
/// `EtaImpulse` when `v ≥ H_inf v − region_tol`, otherwise `Continue`.
pub fn residual_report(
    problem: &GameProblem,
    gf: &GridFunction,
    margin: f64,
    region_tol: f64,
    exec: Execution,
) -> QviResidualReport {
    let grid = gf.grid();
    let mask = grid.interior_mask(margin);
    let entries = map_indices(grid.len(), exec, |k| {
        let x = grid.point(k);
        let v = gf.value(k);
        let (pde, grad) = pde_term(problem, gf, k);
        let sup = h_sup_c(problem, gf, &x);
        let inf = h_inf_chi(problem, gf, &x);
        let f_term = f_inf_c(problem, &grad);
        let classic = pde.min(v - sup.value).max(v - inf.value);
        let new = pde.min(f_term).max(v - inf.value);
        let (region, action) = if v <= sup.value + region_tol {
            (Region::XiImpulse, Some(sup.action))
        } else if v >= inf.value - region_tol {
            (Region::EtaImpulse, Some(inf.action))
        } else {
            (Region::Continue, None)
        };
        ResidualEntry {
            node: k,
            point: x,
            residual_classic: classic,
            residual_new: new,
            region,
            action,
            boundary: !mask[k],
        }
    });
    QviResidualReport { entries }
}

impl QviResidualReport {
    pub fn interior(&self) -> impl Iterator<Item = &ResidualEntry> {
        self.entries.iter().filter(|e| !e.boundary)
    }

    /// CSV with columns `x_1..x_n,residual_classic,residual_new,region,boundary,a_1..a_n`.
    /// Action columns are empty in the continuation region.
    pub fn write_csv<W: Write>(&self, problem: &GameProblem, writer: W) -> Result<()> {
        let n = problem.dimension();
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=n).map(|a| format!("x_{a}")).collect();
        header.extend(
            ["residual_classic", "residual_new", "region", "boundary"]
                .iter()
                .map(|s| s.to_string()),
        );
        header.extend((1..=n).map(|a| format!("a_{a}")));
        w.write_record(&header)?;
        for e in &self.entries {
            let mut row: Vec<String> = e.point.iter().map(|v| v.to_string()).collect();
            row.push(e.residual_classic.to_string());
            row.push(e.residual_new.to_string());
            row.push(e.region.name().to_string());
            row.push(e.boundary.to_string());
            let action = match (e.region, e.action) {
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

/// Parameters of the strict-supersolution perturbation
/// `v* = μ·v + α·sqrt(‖x‖² + 1) + K·(1 − μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    pub mu: f64,
    pub alpha: f64,
    pub k: f64,
}

impl TransformParams {
    /// Largest admissible α for given μ and K (exclusive upper bound).
    /// A zero drift makes the drift constraint vacuous.
    pub fn alpha_limit(problem: &GameProblem, mu: f64, k: f64) -> f64 {
        let sup_f = problem.gain_sup();
        let sup_b = problem.drift_sup();
        let drift_limit = if sup_b == 0.0 {
            f64::INFINITY
        } else {
            (problem.discount() * k - sup_f) / sup_b
        };
        (1.0 - mu) * problem.max_player().min_cost().min(drift_limit)
    }

    pub fn check(&self, problem: &GameProblem) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::InvalidArgument(format!("mu must lie in (0, 1), got {}", self.mu)));
        }
        let kmin = value_bound(problem);
        if !(self.k > kmin) {
            return Err(Error::InvalidArgument(format!(
                "K must exceed ‖f‖∞/λ = {kmin}, got {}",
                self.k
            )));
        }
        let limit = Self::alpha_limit(problem, self.mu, self.k);
        if !(self.alpha > 0.0 && self.alpha < limit) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, {limit}), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Nodewise `v*(x) = μ·v(x) + α·sqrt(‖x‖² + 1) + K·(1 − μ)`.
pub fn strict_supersolution_transform(
    problem: &GameProblem,
    gf: &GridFunction,
    params: TransformParams,
) -> Result<GridFunction> {
    params.check(problem)?;
    let TransformParams { mu, alpha, k } = params;
    Ok(gf.map(|x, v| {
        let r = norm(x);
        mu * v + alpha * (r * r + 1.0).sqrt() + k * (1.0 - mu)
    }))
}
