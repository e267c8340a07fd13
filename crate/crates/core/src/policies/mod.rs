//! Decision policies as step machines: act with a proxy cost, then observe
//! the expert's feedback and classify the period.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{forward_solve, Feedback, Instance, TieBreak};

mod ellipsoidal;
mod greedy;
mod projected;

pub use ellipsoidal::{ec_step, EllipsoidalCones};
pub use greedy::Greedy;
pub use projected::{pc_step, PcShape, ProjectedCones, SubspaceState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Low-regret threshold on the quadratic form.
    pub epsilon: f64,
    /// Subspace residual threshold and shallow-cut margin.
    pub eta: f64,
}

impl PolicyParams {
    /// `epsilon = d / T`, `eta = epsilon / (2d)`.
    pub fn for_horizon(d: usize, horizon: usize) -> Self {
        let epsilon = d as f64 / horizon as f64;
        Self {
            epsilon,
            eta: epsilon / (2.0 * d as f64),
        }
    }

    pub fn with_overrides(
        d: usize,
        horizon: usize,
        epsilon: Option<f64>,
        eta: Option<f64>,
    ) -> Result<Self> {
        let mut p = Self::for_horizon(d, horizon);
        if let Some(e) = epsilon {
            p.epsilon = e;
            p.eta = e / (2.0 * d as f64);
        }
        if let Some(h) = eta {
            p.eta = h;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.eta > 0.0 && self.eta <= self.epsilon) {
            return Err(Error::Config(format!(
                "eta must lie in (0, epsilon], got {} with epsilon {}",
                self.eta, self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodKind {
    LowRegret,
    ConeUpdate,
    SubspaceUpdate,
    ZeroDifference,
    /// Greedy policy: the knowledge set was intersected with new halfspaces.
    KnowledgeCut,
}

/// Per-period numbers reported by a step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// `g'Wg` for the off-axis part of the (projected) difference.
    pub quadratic_form: Option<f64>,
    /// Norm of the difference's component outside the current subspace.
    pub residual: Option<f64>,
}

/// State summary exposed after every step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub lambda_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub p: Option<usize>,
    pub cone_updates: usize,
    pub subspace_updates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub kind: PeriodKind,
    pub diagnostics: StepDiagnostics,
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// The cost vector the policy currently optimizes against.
    fn proxy_cost(&self) -> Result<Vec<f64>>;

    fn act(&self, instance: &Instance, tiebreak: &TieBreak) -> Result<usize> {
        let c = self.proxy_cost()?;
        if c.len() != instance.dim() {
            return Err(Error::DimensionMismatch(format!(
                "policy works in dimension {} but the instance has {}",
                c.len(),
                instance.dim()
            )));
        }
        Ok(forward_solve(&c, instance, tiebreak))
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<StepOutcome>;

    fn snapshot(&self) -> PolicySnapshot;

    /// Whether the policy's knowledge superset contains `c` (projected onto
    /// the policy's working subspace where applicable); `None` if the policy
    /// keeps no superset.
    fn superset_contains(&self, c: &[f64], slack: f64) -> Option<bool>;

    /// Bounds on the number of cone updates per subspace dimension (index =
    /// dimension), where the policy has one.
    fn cone_update_bounds(&self) -> Vec<Option<f64>> {
        Vec::new()
    }
}
