//! Discounted gain functional evaluated along a simulated trajectory.

use std::fmt;

use crate::error::{Error, Result};
use crate::problem::{GameProblem, Player};
use crate::trajectory::{ImpulseControl, Trajectory};

/// The three summands of the payoff and the tail bound for the truncated
/// horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffBreakdown {
    pub running_gain_integral: f64,
    pub xi_cost_total: f64,
    pub eta_cost_total: f64,
    pub total: f64,
    /// `‖f‖∞·e^{−λT}/λ`: how much the running integral beyond `T` can add.
    pub truncation_bound: f64,
}

impl fmt::Display for PayoffBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "running_gain_integral={}", self.running_gain_integral)?;
        writeln!(f, "xi_cost_total={}", self.xi_cost_total)?;
        writeln!(f, "eta_cost_total={}", self.eta_cost_total)?;
        writeln!(f, "total={}", self.total)?;
        writeln!(f, "truncation_bound={}", self.truncation_bound)
    }
}

/// Running gain by the trapezoid rule on the integration nodes, with the
/// left end of each interval using the post-jump state and the right end the
/// pre-jump state. ξ-costs are charged only for jumps that were applied.
pub fn evaluate_payoff(
    problem: &GameProblem,
    traj: &Trajectory,
    u: &ImpulseControl,
    v: &ImpulseControl,
) -> Result<PayoffBreakdown> {
    let lambda = problem.discount();
    for (player, control) in [(Player::Xi, u), (Player::Eta, v)] {
        let recs: Vec<_> = traj
            .jump_records
            .iter()
            .filter(|r| r.player == player)
            .collect();
        let matches = recs.len() == control.len()
            && recs
                .iter()
                .zip(control.jumps())
                .all(|(r, (_, a))| r.action == *a);
        if !matches {
            return Err(Error::InvalidArgument(format!(
                "trajectory jump records do not match the {} control",
                player.name()
            )));
        }
    }

    let mut integral = 0.0;
    for i in 1..traj.samples.len() {
        let (t0, y0) = &traj.samples[i - 1];
        let t1 = traj.samples[i].0;
        let y1 = traj.left_state(i);
        let g0 = problem.f(y0) * (-lambda * t0).exp();
        let g1 = problem.f(y1) * (-lambda * t1).exp();
        integral += 0.5 * (t1 - t0) * (g0 + g1);
    }

    let mut xi_cost = 0.0;
    let mut eta_cost = 0.0;
    for r in &traj.jump_records {
        let disc = (-lambda * r.time).exp();
        match r.player {
            Player::Xi if !r.suppressed => {
                xi_cost += problem.max_player().cost_fn().eval(&r.action) * disc
            }
            Player::Xi => {}
            Player::Eta => eta_cost += problem.min_player().cost_fn().eval(&r.action) * disc,
        }
    }

    let horizon = traj.horizon();
    Ok(PayoffBreakdown {
        running_gain_integral: integral,
        xi_cost_total: xi_cost,
        eta_cost_total: eta_cost,
        total: integral - xi_cost + eta_cost,
        truncation_bound: problem.gain_sup() * (-lambda * horizon).exp() / lambda,
    })
}

/// Smallest `T` with `‖f‖∞·e^{−λT}/λ ≤ epsilon`.
pub fn truncation_horizon(problem: &GameProblem, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let lambda = problem.discount();
    let sup = problem.gain_sup();
    if sup == 0.0 {
        return Ok(0.0);
    }
    Ok(((sup / (lambda * epsilon)).ln() / lambda).max(0.0))
}
