//! One-period instances, the forward problem, regret and knowledge sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{KnowledgeRegion, UnitVector};
use crate::numerics::{dot, norm, normalized, scale, sub};
use crate::tol::tol;

/// The finite list of feature vectors `f(x)` of a period's action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Instance {
    features: Vec<Vec<f64>>,
}

impl Instance {
    pub fn new(features: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = features.first() else {
            return Err(Error::InvalidInput("instance without actions".into()));
        };
        let d = first.len();
        if d == 0 || features.iter().any(|y| y.len() != d) {
            return Err(Error::DimensionMismatch(
                "feature vectors of different lengths".into(),
            ));
        }
        if features.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature".into()));
        }
        for i in 0..features.len() {
            for j in (i + 1)..features.len() {
                let dist = norm(&sub(&features[i], &features[j]));
                if dist > 1.0 + 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "actions {i} and {j} are {dist} apart, more than the unit diameter"
                    )));
                }
            }
        }
        Ok(Self { features })
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        &self.features[j]
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Instance {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Instance> for Vec<Vec<f64>> {
    fn from(i: Instance) -> Self {
        i.features
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TieBreak {
    FirstIndex,
    /// Among minimizers, the action with the largest regret against this cost.
    AdversarialAgainst(UnitVector),
}

/// An index minimizing `y_j'c`.
pub fn forward_solve(c: &[f64], instance: &Instance, tiebreak: &TieBreak) -> usize {
    let values: Vec<f64> = instance.features.iter().map(|y| dot(y, c)).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let minimizers = (0..values.len()).filter(|&j| values[j] <= best + tol().forward_tie);
    match tiebreak {
        TieBreak::FirstIndex => minimizers.into_iter().next().unwrap_or(0),
        TieBreak::AdversarialAgainst(c_star) => {
            // The expert's value is common to every candidate, so maximizing
            // (y_j - y_expert)'c_star is maximizing y_j'c_star.
            let mut pick = 0;
            let mut pick_val = f64::NEG_INFINITY;
            for j in minimizers {
                let v = dot(&instance.features[j], c_star.coords());
                if v > pick_val {
                    pick = j;
                    pick_val = v;
                }
            }
            pick
        }
    }
}

/// `(y_chosen - y_expert)'c_star`, after checking that the expert is optimal.
pub fn regret(
    instance: &Instance,
    chosen: usize,
    expert: usize,
    c_star: &UnitVector,
) -> Result<f64> {
    let n = instance.len();
    if chosen >= n || expert >= n {
        return Err(Error::InvalidInput(format!(
            "action index out of range (have {n})"
        )));
    }
    let c = c_star.coords();
    let best = instance
        .features
        .iter()
        .map(|y| dot(y, c))
        .fold(f64::INFINITY, f64::min);
    let expert_val = dot(&instance.features[expert], c);
    if expert_val > best + tol().expert_optimality {
        return Err(Error::InconsistentFeedback(format!(
            "expert action {expert} has value {expert_val} but the optimum is {best}"
        )));
    }
    Ok(dot(
        &sub(&instance.features[chosen], &instance.features[expert]),
        c,
    ))
}

/// Worst-case one-period loss of a proxy cost at angle `theta` from the truth.
pub fn worst_case_loss(theta: f64) -> f64 {
    if theta < std::f64::consts::FRAC_PI_2 {
        theta.sin()
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub instance: Instance,
    pub expert_index: usize,
    pub chosen_index: usize,
}

impl Feedback {
    pub fn new(instance: Instance, expert_index: usize, chosen_index: usize) -> Result<Self> {
        if expert_index >= instance.len() || chosen_index >= instance.len() {
            return Err(Error::InvalidInput("feedback index out of range".into()));
        }
        Ok(Self {
            instance,
            expert_index,
            chosen_index,
        })
    }

    /// `y_chosen - y_expert`, not normalized.
    pub fn raw_difference(&self) -> Vec<f64> {
        sub(
            self.instance.feature(self.chosen_index),
            self.instance.feature(self.expert_index),
        )
    }
}

/// Normalized `y_chosen - y_expert`, or the zero vector when the two coincide.
pub fn effective_difference(feedback: &Feedback) -> Vec<f64> {
    let diff = feedback.raw_difference();
    let n = norm(&diff);
    if n <= tol().zero_difference {
        vec![0.0; diff.len()]
    } else {
        scale(&diff, 1.0 / n)
    }
}

/// Initial region plus the halfspaces learned so far; each stored `v`
/// means `v'c >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeState {
    pub initial: KnowledgeRegion,
    pub full_constraints: Vec<Vec<f64>>,
    pub relaxed_constraints: Vec<Vec<f64>>,
}

impl KnowledgeState {
    pub fn new(initial: KnowledgeRegion) -> Self {
        Self {
            initial,
            full_constraints: Vec::new(),
            relaxed_constraints: Vec::new(),
        }
    }

    /// Adds `y_j - y_expert` for every other action, and the effective
    /// difference when it is nonzero.
    pub fn update(&self, feedback: &Feedback) -> Self {
        let mut next = self.clone();
        let expert = feedback.instance.feature(feedback.expert_index);
        for (j, y) in feedback.instance.features().iter().enumerate() {
            if j != feedback.expert_index {
                next.full_constraints.push(sub(y, expert));
            }
        }
        let delta = effective_difference(feedback);
        if norm(&delta) > 0.0 {
            next.relaxed_constraints.push(delta);
        }
        next
    }

    pub fn membership(&self, c: &[f64]) -> bool {
        self.initial.contains(c)
            && self
                .full_constraints
                .iter()
                .all(|v| dot(v, c) >= -tol().constraint)
    }
}

/// Two-action instance on which the proxy `c_pi` loses exactly
/// `worst_case_loss(angle(c_star, c_pi))` under adversarial tie-breaking.
///
/// For an acute angle the actions are `{0, delta}` with `delta` the unit
/// component of `c_star` orthogonal to `c_pi`, so both actions tie under
/// `c_pi`. Otherwise `delta = c_star` itself.
pub fn tight_instance(c_star: &UnitVector, c_pi: &UnitVector) -> Result<Instance> {
    if c_star.dim() != c_pi.dim() {
        return Err(Error::DimensionMismatch("c_star and c_pi".into()));
    }
    let d = c_star.dim();
    let cos = dot(c_star.coords(), c_pi.coords());
    let delta = if cos > 0.0 {
        let r = sub(c_star.coords(), &scale(c_pi.coords(), cos));
        match normalized(&r) {
            Some(delta) if norm(&r) > 1e-15 => delta,
            // c_star == c_pi: any direction orthogonal to c_pi gives regret 0.
            _ => orthogonal_direction(c_pi.coords()),
        }
    } else {
        c_star.coords().to_vec()
    };
    Instance::new(vec![vec![0.0; d], delta])
}

fn orthogonal_direction(v: &[f64]) -> Vec<f64> {
    let k = (0..v.len())
        .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap_or(0);
    let mut e = vec![0.0; v.len()];
    e[k] = 1.0;
    let r = sub(&e, &scale(v, dot(v, &e)));
    normalized(&r).unwrap_or(e)
}
