//! Game instances: drift, running gain, discount, and the two players'
//! impulse action sets with their costs.
//!
//! Drift, gain and cost functions come from a small closed catalog so that
//! boundedness and Lipschitz continuity hold by construction. The validators
//! in this module still estimate those constants by sampling and check the
//! cost-structure assumptions (zero lower bound, subadditivity, proportional
//! scaling) exactly over the finite action sets.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::vecops::{dist, norm};

/// Largest dimension for which `‖b‖∞` of a saturated affine drift is computed
/// by vertex enumeration; above it a Frobenius-norm bound is used.
const MAX_VERTEX_ENUM_DIM: usize = 12;

/// Relative slack used when comparing cost inequalities that hold with equality.
const COST_CMP_EPS: f64 = 1e-12;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidArgument("box has no axes".into()));
        }
        check_dim(lower.len(), upper.len())?;
        for (axis, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "degenerate box on axis {axis}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Componentwise projection onto the box.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
            .collect()
    }
}

/// Drift catalog `b: ℝⁿ → ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    /// `b ≡ 0`
    Zero,
    /// `b ≡ velocity`
    Constant { velocity: Vec<f64> },
    /// `b(x) = A·clamp(x, -s, s) + d`, the clamp acting componentwise.
    SaturatedAffine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        saturation: f64,
    },
}

impl Drift {
    fn check(&self, n: usize) -> Result<()> {
        match self {
            Drift::Zero => Ok(()),
            Drift::Constant { velocity } => {
                check_dim(n, velocity.len())?;
                finite_all(velocity, "drift velocity")
            }
            Drift::SaturatedAffine {
                matrix,
                offset,
                saturation,
            } => {
                check_dim(n, matrix.len())?;
                for row in matrix {
                    check_dim(n, row.len())?;
                    finite_all(row, "drift matrix")?;
                }
                check_dim(n, offset.len())?;
                finite_all(offset, "drift offset")?;
                if !(saturation.is_finite() && *saturation > 0.0) {
                    return Err(Error::InvalidProblem(format!(
                        "drift saturation must be positive, got {saturation}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Drift::Zero => vec![0.0; x.len()],
            Drift::Constant { velocity } => velocity.clone(),
            Drift::SaturatedAffine {
                matrix,
                offset,
                saturation,
            } => matrix
                .iter()
                .zip(offset)
                .map(|(row, d)| {
                    row.iter()
                        .zip(x)
                        .map(|(a, xi)| a * xi.clamp(-saturation, *saturation))
                        .sum::<f64>()
                        + d
                })
                .collect(),
        }
    }

    /// Exact `sup ‖b(x)‖` over all of ℝⁿ (the drift is bounded by construction).
    pub fn sup_norm(&self, n: usize) -> f64 {
        match self {
            Drift::Zero => 0.0,
            Drift::Constant { velocity } => norm(velocity),
            Drift::SaturatedAffine {
                matrix,
                offset,
                saturation,
            } => {
                if n <= MAX_VERTEX_ENUM_DIM {
                    // ‖A z + d‖ is convex in z, so its max over the cube sits at a vertex.
                    (0u64..(1u64 << n))
                        .map(|mask| {
                            let z: Vec<f64> = (0..n)
                                .map(|i| {
                                    if mask >> i & 1 == 1 {
                                        *saturation
                                    } else {
                                        -saturation
                                    }
                                })
                                .collect();
                            norm(&self.eval(&z))
                        })
                        .fold(0.0, f64::max)
                } else {
                    let frob = matrix
                        .iter()
                        .flatten()
                        .map(|a| a * a)
                        .sum::<f64>()
                        .sqrt();
                    frob * saturation * (n as f64).sqrt() + norm(offset)
                }
            }
        }
    }
}

/// Running gain catalog `f: ℝⁿ → ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gain {
    /// `f ≡ value`
    Constant { value: f64 },
    /// `f(x) = clamp(w·x + offset, lower, upper)`
    ClippedLinear {
        weights: Vec<f64>,
        #[serde(default)]
        offset: f64,
        lower: f64,
        upper: f64,
    },
    /// `f(x) = 1 − min(‖x − center‖, 1)`
    Peak { center: Vec<f64> },
}

impl Gain {
    fn check(&self, n: usize) -> Result<()> {
        match self {
            Gain::Constant { value } => finite_all(&[*value], "gain value"),
            Gain::ClippedLinear {
                weights,
                offset,
                lower,
                upper,
            } => {
                check_dim(n, weights.len())?;
                finite_all(weights, "gain weights")?;
                finite_all(&[*offset, *lower, *upper], "gain parameters")?;
                if lower > upper {
                    return Err(Error::InvalidProblem(format!(
                        "clipped gain has lower {lower} > upper {upper}"
                    )));
                }
                Ok(())
            }
            Gain::Peak { center } => {
                check_dim(n, center.len())?;
                finite_all(center, "gain center")
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Gain::Constant { value } => *value,
            Gain::ClippedLinear {
                weights,
                offset,
                lower,
                upper,
            } => (crate::vecops::dot(weights, x) + offset).clamp(*lower, *upper),
            Gain::Peak { center } => 1.0 - dist(x, center).min(1.0),
        }
    }

    /// Exact `sup |f(x)|` over all of ℝⁿ.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Gain::Constant { value } => value.abs(),
            Gain::ClippedLinear {
                weights,
                offset,
                lower,
                upper,
            } => {
                if weights.iter().all(|w| *w == 0.0) {
                    offset.clamp(*lower, *upper).abs()
                } else {
                    lower.abs().max(upper.abs())
                }
            }
            Gain::Peak { .. } => 1.0,
        }
    }
}

/// Impulse cost catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cost {
    /// `k1·‖a‖`
    Proportional { k1: f64 },
    /// `k0 + k1·‖a‖`
    FixedPlusProportional { k0: f64, k1: f64 },
    /// `k2·‖a‖²`
    Quadratic { k2: f64 },
}

impl Cost {
    pub fn eval(&self, a: &[f64]) -> f64 {
        match self {
            Cost::Proportional { k1 } => k1 * norm(a),
            Cost::FixedPlusProportional { k0, k1 } => k0 + k1 * norm(a),
            Cost::Quadratic { k2 } => {
                let r = norm(a);
                k2 * r * r
            }
        }
    }

    fn check(&self) -> Result<()> {
        let params: Vec<f64> = match self {
            Cost::Proportional { k1 } => vec![*k1],
            Cost::FixedPlusProportional { k0, k1 } => vec![*k0, *k1],
            Cost::Quadratic { k2 } => vec![*k2],
        };
        finite_all(&params, "cost parameters")?;
        if params.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidProblem(
                "cost parameters must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Which player an action set or jump belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    /// The maximizer, acting with ξ ∈ U.
    Xi,
    /// The minimizer, acting with η ∈ V.
    Eta,
}

impl Player {
    pub fn name(self) -> &'static str {
        match self {
            Player::Xi => "xi",
            Player::Eta => "eta",
        }
    }
}

/// A finite action set together with its cost function.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    actions: Vec<Vec<f64>>,
    cost: Cost,
    costs: Vec<f64>,
}

impl ActionSet {
    pub fn new(actions: Vec<Vec<f64>>, cost: Cost) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidProblem("action set is empty".into()));
        }
        cost.check()?;
        for a in &actions {
            finite_all(a, "action")?;
            if a.iter().all(|c| *c == 0.0) {
                return Err(Error::InvalidProblem("actions must be nonzero".into()));
            }
        }
        let costs = actions.iter().map(|a| cost.eval(a)).collect();
        Ok(Self {
            actions,
            cost,
            costs,
        })
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i]
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn cost_fn(&self) -> &Cost {
        &self.cost
    }

    /// Cost of the i-th declared action.
    pub fn cost(&self, i: usize) -> f64 {
        self.costs[i]
    }

    pub fn min_cost(&self) -> f64 {
        self.costs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_cost(&self) -> f64 {
        self.costs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `‖a‖` over the set.
    pub fn max_norm(&self) -> f64 {
        self.actions.iter().map(|a| norm(a)).fold(0.0, f64::max)
    }

    /// `max c(a)/‖a‖`, the steepest cost per unit of displacement.
    pub fn max_cost_per_length(&self) -> f64 {
        self.actions
            .iter()
            .zip(&self.costs)
            .map(|(a, c)| c / norm(a))
            .fold(0.0, f64::max)
    }

    /// Index of `a` in the set, exact vector equality.
    pub fn position(&self, a: &[f64]) -> Option<usize> {
        self.actions.iter().position(|b| b.as_slice() == a)
    }
}

/// A full game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GameProblem {
    dimension: usize,
    drift: Drift,
    gain: Gain,
    discount: f64,
    max_player: ActionSet,
    min_player: ActionSet,
    drift_sup: f64,
}

impl GameProblem {
    /// Checks the structural invariants: `n ≥ 1`, `λ > 0`, nonempty sets of
    /// nonzero actions of the right length, and catalog parameters. The cost
    /// assumptions are left to [`validate_h1`] so that they can be reported.
    pub fn new(
        dimension: usize,
        drift: Drift,
        gain: Gain,
        discount: f64,
        max_player: ActionSet,
        min_player: ActionSet,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidProblem("dimension must be >= 1".into()));
        }
        if !(discount.is_finite() && discount > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "discount must be positive, got {discount}"
            )));
        }
        drift.check(dimension)?;
        gain.check(dimension)?;
        for a in max_player.actions().iter().chain(min_player.actions()) {
            check_dim(dimension, a.len())?;
        }
        let drift_sup = drift.sup_norm(dimension);
        Ok(Self {
            dimension,
            drift,
            gain,
            discount,
            max_player,
            min_player,
            drift_sup,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn gain(&self) -> &Gain {
        &self.gain
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Player-ξ: actions U with cost c.
    pub fn max_player(&self) -> &ActionSet {
        &self.max_player
    }

    /// Player-η: actions V with cost χ.
    pub fn min_player(&self) -> &ActionSet {
        &self.min_player
    }

    pub fn actions(&self, player: Player) -> &ActionSet {
        match player {
            Player::Xi => &self.max_player,
            Player::Eta => &self.min_player,
        }
    }

    pub fn b(&self, x: &[f64]) -> Vec<f64> {
        self.drift.eval(x)
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.gain.eval(x)
    }

    /// `‖b‖∞` from the catalog.
    pub fn drift_sup(&self) -> f64 {
        self.drift_sup
    }

    /// `‖f‖∞` from the catalog.
    pub fn gain_sup(&self) -> f64 {
        self.gain.sup_norm()
    }

    /// Returns a copy with a different discount rate.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::new(
            self.dimension,
            self.drift.clone(),
            self.gain.clone(),
            discount,
            self.max_player.clone(),
            self.min_player.clone(),
        )
    }

    /// Returns a copy with a different gain.
    pub fn with_gain(&self, gain: Gain) -> Result<Self> {
        Self::new(
            self.dimension,
            self.drift.clone(),
            gain,
            self.discount,
            self.max_player.clone(),
            self.min_player.clone(),
        )
    }

    /// Both cost lower bounds are strictly positive.
    pub fn has_positive_costs(&self) -> bool {
        self.max_player.min_cost() > 0.0 && self.min_player.min_cost() > 0.0
    }
}

/// Bound `‖f‖∞/λ` on both value functions.
///
/// With nonnegative costs the no-impulse strategy is admissible for either
/// player, so the value is trapped in `[−‖f‖∞/λ, ‖f‖∞/λ]`. The catalog
/// supremum is exact over ℝⁿ.
pub fn value_bound(problem: &GameProblem) -> f64 {
    problem.gain_sup() / problem.discount()
}

/// A failed check together with the inputs that exposed it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub property: &'static str,
    pub witness: String,
    pub values: String,
}

/// Outcome of the standing-assumption checks. Fields a given validator does
/// not touch are `None`; [`AssumptionReport::merge`] combines reports.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssumptionReport {
    pub lipschitz_b_estimate: Option<f64>,
    pub lipschitz_f_estimate: Option<f64>,
    pub bound_b: Option<f64>,
    pub bound_f: Option<f64>,
    pub subadditivity_c_ok: Option<bool>,
    pub strict_subadditivity_chi_ok: Option<bool>,
    pub zero_lower_bound_ok: Option<bool>,
    pub proportional_h2_ok: Option<bool>,
    /// Set by [`validate_h2`] when no tested `(k, ξ)` had `kξ ∈ U`.
    pub h2_vacuous: Option<bool>,
    /// Whether U contains `kξ` for arbitrarily small `k > 0`, as the
    /// gradient-constrained inequality needs. Always false for a finite U;
    /// informational, does not enter [`AssumptionReport::passed`].
    pub h2_small_scales: Option<bool>,
    pub violations: Vec<Violation>,
}

impl AssumptionReport {
    /// True when every check that ran succeeded.
    pub fn passed(&self) -> bool {
        [
            self.subadditivity_c_ok,
            self.strict_subadditivity_chi_ok,
            self.zero_lower_bound_ok,
            self.proportional_h2_ok,
        ]
        .iter()
        .all(|v| v.unwrap_or(true))
    }

    pub fn merge(mut self, other: AssumptionReport) -> Self {
        fn pick<T>(a: Option<T>, b: Option<T>) -> Option<T> {
            b.or(a)
        }
        self.lipschitz_b_estimate = pick(self.lipschitz_b_estimate, other.lipschitz_b_estimate);
        self.lipschitz_f_estimate = pick(self.lipschitz_f_estimate, other.lipschitz_f_estimate);
        self.bound_b = pick(self.bound_b, other.bound_b);
        self.bound_f = pick(self.bound_f, other.bound_f);
        self.subadditivity_c_ok = pick(self.subadditivity_c_ok, other.subadditivity_c_ok);
        self.strict_subadditivity_chi_ok =
            pick(self.strict_subadditivity_chi_ok, other.strict_subadditivity_chi_ok);
        self.zero_lower_bound_ok = pick(self.zero_lower_bound_ok, other.zero_lower_bound_ok);
        self.proportional_h2_ok = pick(self.proportional_h2_ok, other.proportional_h2_ok);
        self.h2_vacuous = pick(self.h2_vacuous, other.h2_vacuous);
        self.h2_small_scales = pick(self.h2_small_scales, other.h2_small_scales);
        self.violations.extend(other.violations);
        self
    }

    /// `C_b` estimate, 0 when the Lipschitz check has not run.
    pub fn lipschitz_b(&self) -> f64 {
        self.lipschitz_b_estimate.unwrap_or(0.0)
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn opt<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "unchecked".to_string(), |x| x.to_string())
        }
        writeln!(out, "lipschitz_b_estimate={}", opt(&self.lipschitz_b_estimate))?;
        writeln!(out, "lipschitz_f_estimate={}", opt(&self.lipschitz_f_estimate))?;
        writeln!(out, "bound_b_estimate={}", opt(&self.bound_b))?;
        writeln!(out, "bound_f_estimate={}", opt(&self.bound_f))?;
        writeln!(out, "subadditivity_c_ok={}", opt(&self.subadditivity_c_ok))?;
        writeln!(
            out,
            "strict_subadditivity_chi_ok={}",
            opt(&self.strict_subadditivity_chi_ok)
        )?;
        writeln!(out, "zero_lower_bound_ok={}", opt(&self.zero_lower_bound_ok))?;
        writeln!(out, "proportional_h2_ok={}", opt(&self.proportional_h2_ok))?;
        writeln!(out, "h2_vacuous={}", opt(&self.h2_vacuous))?;
        writeln!(out, "h2_small_scales={}", opt(&self.h2_small_scales))?;
        writeln!(out, "violations={}", self.violations.len())?;
        for (i, v) in self.violations.iter().enumerate() {
            writeln!(
                out,
                "violation.{i}={} witness=({}) values=({})",
                v.property, v.witness, v.values
            )?;
        }
        writeln!(out, "passed={}", self.passed())
    }
}

/// Samples the drift and gain over `domain` to estimate `C_b`, `C_f`, `‖b‖∞`
/// and `‖f‖∞`, and checks the cost assumptions exactly over U and V.
///
/// Sample `i` and its close neighbour are always drawn in the same order from
/// the seeded stream, so a larger `samples` visits a superset of pairs and
/// the estimates never decrease.
pub fn validate_h1(
    problem: &GameProblem,
    domain: &BoxDomain,
    samples: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    check_dim(problem.dimension(), domain.dim())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diameter = dist(domain.lower(), domain.upper());
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(samples);
    let (mut lip_b, mut lip_f, mut sup_b, mut sup_f) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);

    let quotient = |p: &[f64], q: &[f64], lip_b: &mut f64, lip_f: &mut f64| {
        let d = dist(p, q);
        if d > 0.0 {
            *lip_b = lip_b.max(dist(&problem.b(p), &problem.b(q)) / d);
            *lip_f = lip_f.max((problem.f(p) - problem.f(q)).abs() / d);
        }
    };

    for _ in 0..samples {
        let p = domain.sample(&mut rng);
        let step = 1e-3 * diameter;
        let offset: Vec<f64> = (0..domain.dim())
            .map(|_| rng.gen_range(-step..=step))
            .collect();
        let q = domain.clamp(&crate::vecops::add(&p, &offset));

        for x in [&p, &q] {
            sup_b = sup_b.max(norm(&problem.b(x)));
            sup_f = sup_f.max(problem.f(x).abs());
        }
        quotient(&p, &q, &mut lip_b, &mut lip_f);
        for other in &points {
            quotient(&p, other, &mut lip_b, &mut lip_f);
        }
        points.push(p);
    }

    let mut violations = Vec::new();

    let u = problem.max_player();
    let v = problem.min_player();
    let zero_lb_ok = check_zero_lower_bound(u, "c", &mut violations)
        & check_zero_lower_bound(v, "chi", &mut violations);

    let mut sub_c_ok = true;
    for (i, a) in u.actions().iter().enumerate() {
        for (j, b) in u.actions().iter().enumerate() {
            let sum = crate::vecops::add(a, b);
            if let Some(k) = u.position(&sum) {
                let lhs = u.cost(k);
                let rhs = u.cost(i) + u.cost(j);
                if lhs > rhs + COST_CMP_EPS * rhs.abs().max(1.0) {
                    sub_c_ok = false;
                    violations.push(Violation {
                        property: "subadditivity_c",
                        witness: format!("{a:?}, {b:?}"),
                        values: format!("c(sum)={lhs} c(a)+c(b)={rhs}"),
                    });
                }
            }
        }
    }

    let mut sub_chi_ok = true;
    for (i, a) in v.actions().iter().enumerate() {
        for (j, b) in v.actions().iter().enumerate() {
            let sum = crate::vecops::add(a, b);
            if let Some(k) = v.position(&sum) {
                let lhs = v.cost(k);
                let rhs = v.cost(i) + v.cost(j);
                if lhs >= rhs {
                    sub_chi_ok = false;
                    violations.push(Violation {
                        property: "strict_subadditivity_chi",
                        witness: format!("{a:?}, {b:?}"),
                        values: format!("chi(sum)={lhs} chi(a)+chi(b)={rhs}"),
                    });
                }
            }
        }
    }

    Ok(AssumptionReport {
        lipschitz_b_estimate: Some(lip_b),
        lipschitz_f_estimate: Some(lip_f),
        bound_b: Some(sup_b),
        bound_f: Some(sup_f),
        subadditivity_c_ok: Some(sub_c_ok),
        strict_subadditivity_chi_ok: Some(sub_chi_ok),
        zero_lower_bound_ok: Some(zero_lb_ok),
        proportional_h2_ok: None,
        h2_vacuous: None,
        h2_small_scales: None,
        violations,
    })
}

fn check_zero_lower_bound(
    set: &ActionSet,
    name: &'static str,
    violations: &mut Vec<Violation>,
) -> bool {
    let (idx, min) = (0..set.len())
        .map(|i| (i, set.cost(i)))
        .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    if min > 0.0 {
        true
    } else {
        violations.push(Violation {
            property: if name == "c" {
                "zero_lower_bound_c"
            } else {
                "zero_lower_bound_chi"
            },
            witness: format!("{:?}", set.action(idx)),
            values: format!("{name}={min}"),
        });
        false
    }
}

/// Checks `c(kξ) ≤ k·c(ξ)` for every `ξ ∈ U` and `k` in `scales` with
/// `kξ ∈ U` (exact vector equality).
pub fn validate_h2(problem: &GameProblem, scales: &[f64]) -> Result<AssumptionReport> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("scale list is empty".into()));
    }
    if let Some(k) = scales.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Error::InvalidArgument(format!("scale {k} is not positive")));
    }
    let u = problem.max_player();
    let mut violations = Vec::new();
    let mut tested = 0usize;
    let mut ok = true;
    for (i, xi) in u.actions().iter().enumerate() {
        for &k in scales {
            let scaled: Vec<f64> = xi.iter().map(|c| k * c).collect();
            let Some(j) = u.position(&scaled) else {
                continue;
            };
            tested += 1;
            let lhs = u.cost(j);
            let rhs = k * u.cost(i);
            if lhs > rhs + COST_CMP_EPS * rhs.abs().max(1.0) {
                ok = false;
                violations.push(Violation {
                    property: "proportional_h2",
                    witness: format!("k={k}, xi={xi:?}"),
                    values: format!("c(k*xi)={lhs} k*c(xi)={rhs}"),
                });
            }
        }
    }
    Ok(AssumptionReport {
        proportional_h2_ok: Some(ok),
        h2_vacuous: Some(tested == 0),
        h2_small_scales: Some(false),
        violations,
        ..Default::default()
    })
}

/// Scale factors relating collinear pairs of U (`ξ_j = k·ξ_i`, `k > 0`), so
/// that [`validate_h2`] is exercised on every pair the set admits.
pub fn collinear_scales(set: &ActionSet) -> Vec<f64> {
    let mut out = Vec::new();
    for a in set.actions() {
        for b in set.actions() {
            let na = norm(a);
            let k = norm(b) / na;
            let cos = crate::vecops::dot(a, b) / (na * norm(b));
            if (cos - 1.0).abs() < 1e-12 && !out.contains(&k) {
                out.push(k);
            }
        }
    }
    out
}

fn finite_all(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidProblem(format!("{what} must be finite")))
    }
}
