//! Impulse-controlled dynamics: drift integration between jumps, jump
//! application with η-priority, and the Gronwall divergence check.

use std::io::Write;

use crate::error::{check_dim, Error, Result};
use crate::problem::{AssumptionReport, GameProblem, Player};
use crate::vecops::{axpy, dist};

/// Finite, time-ordered list of impulses for one player.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImpulseControl {
    jumps: Vec<(f64, Vec<f64>)>,
}

impl ImpulseControl {
    /// Takes jumps already ordered by time; unordered or repeated times are
    /// rejected, as are negative times and zero actions.
    pub fn new(jumps: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        for (i, (t, a)) in jumps.iter().enumerate() {
            if !(t.is_finite() && *t >= 0.0) {
                return Err(Error::InvalidControl(format!("jump {i} has time {t}")));
            }
            if a.iter().all(|c| *c == 0.0) {
                return Err(Error::InvalidControl(format!("jump {i} has a zero action")));
            }
            if i > 0 {
                let prev = jumps[i - 1].0;
                if *t < prev {
                    return Err(Error::InvalidControl(format!(
                        "jump times not ordered: {prev} then {t}"
                    )));
                }
                if *t == prev {
                    return Err(Error::InvalidControl(format!(
                        "two jumps of one player at time {t}"
                    )));
                }
            }
        }
        Ok(Self { jumps })
    }

    /// Sorts by time (stable) before validating.
    pub fn sorted(mut jumps: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::new(jumps)
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn jumps(&self) -> &[(f64, Vec<f64>)] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }
}

/// One impulse as it happened (or was suppressed) along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    /// Integration node time the jump was snapped to.
    pub time: f64,
    pub node: usize,
    pub player: Player,
    pub action: Vec<f64>,
    pub pre_state: Vec<f64>,
    pub post_state: Vec<f64>,
    /// A ξ-jump sharing its node with an η-jump is not applied.
    pub suppressed: bool,
}

/// Path sampled at the integration nodes. At a jump node the stored state
/// is the post-jump (right-limit) state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, Vec<f64>)>,
    pub jump_records: Vec<JumpRecord>,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.0)
    }

    pub fn final_state(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has samples").1
    }

    /// Left-limit state at sample `i`: the pre-jump state when a jump was
    /// applied there, the sample itself otherwise.
    pub fn left_state(&self, i: usize) -> &[f64] {
        self.jump_records
            .iter()
            .find(|r| r.node == i && !r.suppressed)
            .map_or(&self.samples[i].1, |r| &r.pre_state)
    }

    /// CSV with columns `t,x_1..x_n,jump_player,jump_suppressed`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.samples.first().map_or(0, |s| s.1.len());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|a| format!("x_{a}")));
        header.push("jump_player".into());
        header.push("jump_suppressed".into());
        w.write_record(&header)?;
        for (i, (t, x)) in self.samples.iter().enumerate() {
            let here: Vec<&JumpRecord> = self.jump_records.iter().filter(|r| r.node == i).collect();
            let applied = here.iter().find(|r| !r.suppressed).map_or("", |r| r.player.name());
            let suppressed = here.iter().any(|r| r.suppressed);
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            row.push(applied.to_string());
            row.push(suppressed.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rk4_step(problem: &GameProblem, y: &[f64], h: f64) -> Vec<f64> {
    let k1 = problem.b(y);
    let k2 = problem.b(&axpy(y, 0.5 * h, &k1));
    let k3 = problem.b(&axpy(y, 0.5 * h, &k2));
    let k4 = problem.b(&axpy(y, h, &k3));
    y.iter()
        .enumerate()
        .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Substep count and sizes covering `duration`, the last one shortened.
fn substeps(duration: f64, step: f64) -> Vec<f64> {
    let count = ((duration / step) - 1e-9).ceil().max(1.0) as usize;
    let mut out = vec![step; count];
    out[count - 1] = duration - (count - 1) as f64 * step;
    out
}

/// Flow of `ẏ = b(y)` for `duration` using classical RK4 steps of size `step`.
pub fn integrate_drift(
    problem: &GameProblem,
    state: &[f64],
    duration: f64,
    step: f64,
) -> Result<Vec<f64>> {
    check_dim(problem.dimension(), state.len())?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidArgument(format!("duration must be positive, got {duration}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let mut y = state.to_vec();
    for h in substeps(duration, step.min(duration)) {
        y = rk4_step(problem, &y, h);
    }
    Ok(y)
}

/// Nearest node to `t` on the grid `times`, ties to the earlier node.
fn snap(times: &[f64], t: f64) -> usize {
    let upper = times.partition_point(|s| *s < t);
    if upper == 0 {
        return 0;
    }
    if upper == times.len() {
        return times.len() - 1;
    }
    if times[upper] - t < t - times[upper - 1] {
        upper
    } else {
        upper - 1
    }
}

/// Simulates the controlled system from `x0` over `[0, horizon]`.
///
/// Jump times are snapped to the integration nodes. When both players jump
/// at the same node only the η-jump is applied and the ξ-record is marked
/// suppressed.
pub fn simulate(
    problem: &GameProblem,
    x0: &[f64],
    u: &ImpulseControl,
    v: &ImpulseControl,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    check_dim(problem.dimension(), x0.len())?;
    if !(horizon > 0.0 && horizon.is_finite() && step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} and step {step} must be positive"
        )));
    }
    let widths = substeps(horizon, step.min(horizon));
    let mut times = Vec::with_capacity(widths.len() + 1);
    times.push(0.0);
    for (i, _) in widths.iter().enumerate() {
        times.push(if i + 1 == widths.len() {
            horizon
        } else {
            (i + 1) as f64 * step
        });
    }

    let mut at_node: Vec<[Option<Vec<f64>>; 2]> = vec![[None, None]; times.len()];
    for (player, control) in [(Player::Xi, u), (Player::Eta, v)] {
        let set = problem.actions(player);
        for (t, a) in control.jumps() {
            check_dim(problem.dimension(), a.len())?;
            if set.position(a).is_none() {
                return Err(Error::ActionNotInSet {
                    player: player.name(),
                    action: a.clone(),
                });
            }
            if *t > horizon {
                return Err(Error::InvalidControl(format!(
                    "jump at {t} is past the horizon {horizon}"
                )));
            }
            let node = snap(&times, *t);
            let slot = &mut at_node[node][player as usize];
            if slot.is_some() {
                return Err(Error::InvalidControl(format!(
                    "two {} jumps land on the same integration node (t={})",
                    player.name(),
                    times[node]
                )));
            }
            *slot = Some(a.clone());
        }
    }

    let mut samples = Vec::with_capacity(times.len());
    let mut records = Vec::new();
    let mut y = x0.to_vec();
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            y = rk4_step(problem, &y, widths[i - 1]);
        }
        let [xi, eta] = &at_node[i];
        let pre = y.clone();
        if let Some(eta) = eta {
            let post = crate::vecops::add(&y, eta);
            if let Some(xi) = xi {
                records.push(JumpRecord {
                    time: t,
                    node: i,
                    player: Player::Xi,
                    action: xi.clone(),
                    pre_state: pre.clone(),
                    post_state: pre.clone(),
                    suppressed: true,
                });
            }
            records.push(JumpRecord {
                time: t,
                node: i,
                player: Player::Eta,
                action: eta.clone(),
                pre_state: pre,
                post_state: post.clone(),
                suppressed: false,
            });
            y = post;
        } else if let Some(xi) = xi {
            let post = crate::vecops::add(&y, xi);
            records.push(JumpRecord {
                time: t,
                node: i,
                player: Player::Xi,
                action: xi.clone(),
                pre_state: pre,
                post_state: post.clone(),
                suppressed: false,
            });
            y = post;
        }
        samples.push((t, y.clone()));
    }
    Ok(Trajectory {
        samples,
        jump_records: records,
    })
}

/// Integrates the uncontrolled paths from `x` and `x_prime` and checks
/// `‖y_x(t) − y_x'(t)‖ ≤ (1 + slack)·exp(C_b t)·‖x − x'‖` at every node,
/// with `C_b` taken from `report`.
pub fn gronwall_check(
    problem: &GameProblem,
    report: &AssumptionReport,
    x: &[f64],
    x_prime: &[f64],
    horizon: f64,
    step: f64,
    slack: f64,
) -> Result<bool> {
    let none = ImpulseControl::none();
    let a = simulate(problem, x, &none, &none, horizon, step)?;
    let b = simulate(problem, x_prime, &none, &none, horizon, step)?;
    let c_b = report.lipschitz_b();
    let d0 = dist(x, x_prime);
    Ok(a.samples.iter().zip(&b.samples).all(|((t, ya), (_, yb))| {
        dist(ya, yb) <= (1.0 + slack) * (c_b * t).exp() * d0
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ActionSet, BoxDomain, Cost, Drift, Gain};
    use crate::problem::validate_h1;

    fn problem(drift: Drift, n: usize, u: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> GameProblem {
        GameProblem::new(
            n,
            drift,
            Gain::Constant { value: 0.0 },
            1.0,
            ActionSet::new(u, Cost::Proportional { k1: 1.0 }).unwrap(),
            ActionSet::new(v, Cost::Proportional { k1: 1.0 }).unwrap(),
        )
        .unwrap()
    }

    fn decay() -> Drift {
        Drift::SaturatedAffine {
            matrix: vec![vec![-1.0]],
            offset: vec![0.0],
            saturation: 5.0,
        }
    }

    #[test]
    fn zero_and_constant_fields() {
        let p = problem(Drift::Zero, 1, vec![vec![1.0]], vec![vec![1.0]]);
        assert_eq!(integrate_drift(&p, &[0.7], 1.0, 0.1).unwrap(), vec![0.7]);
        let p2 = problem(
            Drift::Constant { velocity: vec![1.0, 0.0] },
            2,
            vec![vec![1.0, 0.0]],
            vec![vec![1.0, 0.0]],
        );
        let y = integrate_drift(&p2, &[0.0, 0.0], 0.5, 0.1).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-14 && y[1] == 0.0);
    }

    #[test]
    fn exponential_decay() {
        let p = problem(decay(), 1, vec![vec![1.0]], vec![vec![1.0]]);
        let y = integrate_drift(&p, &[1.0], 1.0, 1e-2).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn rk4_convergence_order() {
        let p = problem(decay(), 1, vec![vec![1.0]], vec![vec![1.0]]);
        let exact = (-1.0f64).exp();
        let e1 = (integrate_drift(&p, &[1.0], 1.0, 0.2).unwrap()[0] - exact).abs();
        let e2 = (integrate_drift(&p, &[1.0], 1.0, 0.1).unwrap()[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn shortened_last_substep() {
        assert_eq!(substeps(1.0, 0.3).len(), 4);
        assert!((substeps(1.0, 0.3)[3] - 0.1).abs() < 1e-12);
        assert_eq!(substeps(1.0, 0.01).len(), 100);
    }

    #[test]
    fn integrate_errors() {
        let p = problem(Drift::Zero, 1, vec![vec![1.0]], vec![vec![1.0]]);
        assert!(integrate_drift(&p, &[0.0], 0.0, 0.1).is_err());
        assert!(integrate_drift(&p, &[0.0], 1.0, -0.1).is_err());
        assert!(integrate_drift(&p, &[0.0, 1.0], 1.0, 0.1).is_err());
    }

    #[test]
    fn single_jump() {
        let p = problem(Drift::Zero, 1, vec![vec![1.0]], vec![vec![-1.0]]);
        let u = ImpulseControl::new(vec![(0.5, vec![1.0])]).unwrap();
        let tr = simulate(&p, &[0.0], &u, &ImpulseControl::none(), 1.0, 0.1).unwrap();
        for (t, x) in &tr.samples {
            let expected = if *t < 0.5 - 1e-9 { 0.0 } else { 1.0 };
            assert_eq!(x[0], expected, "t={t}");
        }
        assert_eq!(tr.jump_records.len(), 1);
        assert_eq!(tr.left_state(5), &[0.0]);
    }

    #[test]
    fn eta_priority_on_simultaneous_jumps() {
        let p = problem(Drift::Zero, 1, vec![vec![1.0]], vec![vec![-1.0]]);
        let u = ImpulseControl::new(vec![(0.5, vec![1.0])]).unwrap();
        let v = ImpulseControl::new(vec![(0.5, vec![-1.0])]).unwrap();
        let tr = simulate(&p, &[0.0], &u, &v, 1.0, 0.1).unwrap();
        assert_eq!(tr.final_state(), &[-1.0]);
        let xi = tr.jump_records.iter().find(|r| r.player == Player::Xi).unwrap();
        assert!(xi.suppressed);
        let eta = tr.jump_records.iter().find(|r| r.player == Player::Eta).unwrap();
        assert!(!eta.suppressed);
    }

    #[test]
    fn decay_then_jump() {
        let p = problem(decay(), 1, vec![vec![1.0]], vec![vec![1.0]]);
        let ln2 = std::f64::consts::LN_2;
        let step = 1e-4;
        let v = ImpulseControl::new(vec![(ln2, vec![1.0])]).unwrap();
        let tr = simulate(&p, &[1.0], &ImpulseControl::none(), &v, 2.0, step).unwrap();
        let rec = &tr.jump_records[0];
        // snapping moves the jump by at most step/2
        assert!((rec.time - ln2).abs() <= 0.5 * step + 1e-12);
        assert!((rec.pre_state[0] - 0.5).abs() < 1e-4);
        assert!((rec.post_state[0] - 1.5).abs() < 1e-4);
        let expected_end = 1.5 * (-(2.0 - ln2)).exp();
        assert!((tr.final_state()[0] - expected_end).abs() < 2e-4);
    }

    #[test]
    fn snapping_ties_go_to_earlier_node() {
        let times = [0.0, 0.5, 1.0];
        assert_eq!(snap(&times, 0.25), 0);
        assert_eq!(snap(&times, 0.26), 1);
        assert_eq!(snap(&times, 0.75), 1);
        assert_eq!(snap(&times, 1.0), 2);
    }

    #[test]
    fn simulate_errors() {
        let p = problem(Drift::Zero, 1, vec![vec![1.0]], vec![vec![-1.0]]);
        let bad = ImpulseControl::new(vec![(0.1, vec![2.0])]).unwrap();
        assert!(matches!(
            simulate(&p, &[0.0], &bad, &ImpulseControl::none(), 1.0, 0.1),
            Err(Error::ActionNotInSet { .. })
        ));
        assert!(ImpulseControl::new(vec![(0.5, vec![1.0]), (0.2, vec![1.0])]).is_err());
        assert!(ImpulseControl::new(vec![(0.5, vec![1.0]), (0.5, vec![1.0])]).is_err());
        let crowded = ImpulseControl::new(vec![(0.50, vec![1.0]), (0.51, vec![1.0])]).unwrap();
        assert!(simulate(&p, &[0.0], &crowded, &ImpulseControl::none(), 1.0, 0.1).is_err());
        let late = ImpulseControl::new(vec![(2.0, vec![1.0])]).unwrap();
        assert!(simulate(&p, &[0.0], &late, &ImpulseControl::none(), 1.0, 0.1).is_err());
    }

    #[test]
    fn empty_controls_match_integrate_drift() {
        let p = problem(decay(), 1, vec![vec![1.0]], vec![vec![1.0]]);
        let none = ImpulseControl::none();
        let tr = simulate(&p, &[1.3], &none, &none, 2.0, 0.01).unwrap();
        let direct = integrate_drift(&p, &[1.3], 2.0, 0.01).unwrap();
        assert!((tr.final_state()[0] - direct[0]).abs() < 1e-14);
    }

    #[test]
    fn gronwall_cases() {
        let dom = BoxDomain::new(vec![-5.0], vec![5.0]).unwrap();
        let p = problem(decay(), 1, vec![vec![1.0]], vec![vec![1.0]]);
        let r = validate_h1(&p, &dom, 64, 0).unwrap();
        assert!(gronwall_check(&p, &r, &[0.3], &[0.3], 3.0, 0.01, 0.05).unwrap());
        assert!(gronwall_check(&p, &r, &[1.0], &[0.5], 3.0, 0.01, 0.05).unwrap());

        let grow = problem(
            Drift::SaturatedAffine {
                matrix: vec![vec![1.0]],
                offset: vec![0.0],
                saturation: 5.0,
            },
            1,
            vec![vec![1.0]],
            vec![vec![1.0]],
        );
        let r = validate_h1(&grow, &dom, 64, 0).unwrap();
        assert!((r.lipschitz_b() - 1.0).abs() < 1e-9);
        assert!(gronwall_check(&grow, &r, &[0.1], &[0.0], 3.0, 0.01, 0.05).unwrap());
        // with an underestimated rate the bound must fail
        let mut weak = r.clone();
        weak.lipschitz_b_estimate = Some(0.5);
        assert!(!gronwall_check(&grow, &weak, &[0.1], &[0.0], 3.0, 0.01, 0.05).unwrap());
    }

    #[test]
    fn csv_marks_jumps() {
        let p = problem(Drift::Zero, 1, vec![vec![1.0]], vec![vec![-1.0]]);
        let u = ImpulseControl::new(vec![(0.5, vec![1.0])]).unwrap();
        let v = ImpulseControl::new(vec![(0.5, vec![-1.0])]).unwrap();
        let tr = simulate(&p, &[0.0], &u, &v, 1.0, 0.5).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,x_1,jump_player,jump_suppressed\n0,0,,false\n0.5,-1,eta,true\n1,-1,,false\n"
        );
    }
}
