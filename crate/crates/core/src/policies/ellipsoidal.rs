use crate::cones::{cone_update, revolution_to_cone, EllipsoidalCone};
use crate::error::{Error, Result};
use crate::forward::{effective_difference, Feedback};
use crate::geometry::{circumcenter, KnowledgeRegion};
use crate::numerics::{norm, Matrix};

use super::{PeriodKind, Policy, PolicyParams, PolicySnapshot, StepDiagnostics, StepOutcome};

/// One period of the pointed-case algorithm: update the cone only when the
/// difference is long in the cone's metric.
pub fn ec_step(
    cone: &EllipsoidalCone,
    params: &PolicyParams,
    feedback: &Feedback,
) -> Result<(EllipsoidalCone, PeriodKind, StepDiagnostics)> {
    let delta = effective_difference(feedback);
    if delta.len() != cone.p() {
        return Err(Error::DimensionMismatch(
            "difference and cone dimensions differ".into(),
        ));
    }
    if norm(&delta) == 0.0 {
        return Ok((
            cone.clone(),
            PeriodKind::ZeroDifference,
            StepDiagnostics::default(),
        ));
    }
    let dbar = cone.u().tr_mul_vec(&delta);
    let q = cone.quadratic_form(&dbar[1..]);
    let diagnostics = StepDiagnostics {
        quadratic_form: Some(q),
        residual: None,
    };
    if q <= params.epsilon * params.epsilon {
        return Ok((cone.clone(), PeriodKind::LowRegret, diagnostics));
    }
    let next = cone_update(cone, &delta, 0.0, &Matrix::identity(cone.p()))?;
    Ok((next, PeriodKind::ConeUpdate, diagnostics))
}

#[derive(Debug, Clone)]
pub struct EllipsoidalCones {
    cone: EllipsoidalCone,
    params: PolicyParams,
    cone_updates: usize,
}

impl EllipsoidalCones {
    /// Starts from the revolution cone around the circumcenter of `initial`.
    pub fn new(initial: &KnowledgeRegion, params: PolicyParams) -> Result<Self> {
        let (center, alpha) = circumcenter(initial)?;
        let cone = revolution_to_cone(alpha, &center)?;
        Ok(Self::from_cone(cone, params))
    }

    pub fn from_cone(cone: EllipsoidalCone, params: PolicyParams) -> Self {
        Self {
            cone,
            params,
            cone_updates: 0,
        }
    }

    pub fn cone(&self) -> &EllipsoidalCone {
        &self.cone
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }
}

impl Policy for EllipsoidalCones {
    fn name(&self) -> &'static str {
        "ellipsoidal"
    }

    fn proxy_cost(&self) -> Result<Vec<f64>> {
        Ok(self.cone.axis())
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<StepOutcome> {
        let (next, kind, diagnostics) = ec_step(&self.cone, &self.params, feedback)?;
        if kind == PeriodKind::ConeUpdate {
            self.cone_updates += 1;
        }
        self.cone = next;
        Ok(StepOutcome { kind, diagnostics })
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot {
            lambda_max: self.cone.lambda_max(),
            lambda_min: self.cone.lambda_min(),
            p: None,
            cone_updates: self.cone_updates,
            subspace_updates: 0,
        }
    }

    fn superset_contains(&self, c: &[f64], slack: f64) -> Option<bool> {
        Some(contains_with_slack(&self.cone, c, slack))
    }
}

/// Cone membership of the direction of `c` with an explicit slack.
pub(crate) fn contains_with_slack(cone: &EllipsoidalCone, c: &[f64], slack: f64) -> bool {
    let n = norm(c);
    if c.len() != cone.p() || n == 0.0 {
        return false;
    }
    let z = cone.u().tr_mul_vec(c);
    let z0 = z[0] / n;
    if cone.p() == 1 {
        return z0 >= -slack;
    }
    let q: f64 = z[1..]
        .iter()
        .zip(cone.w())
        .map(|(zi, wi)| (zi / n).powi(2) / wi)
        .sum();
    z0 >= -slack && q <= z0 * z0 + slack
}
