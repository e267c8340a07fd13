use crate::cones::{cone_angle, cone_update, poly_center, EllipsoidalCone};
use crate::error::{Error, Result};
use crate::forward::{effective_difference, Feedback};
use crate::numerics::{basis_vector, gram_schmidt, norm, orthogonalize, sub, Matrix};

use super::ellipsoidal::contains_with_slack;
use super::{PeriodKind, Policy, PolicyParams, PolicySnapshot, StepDiagnostics, StepOutcome};

/// The subspace spanned by the differences that triggered subspace updates.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceState {
    /// Orthonormal rows spanning the subspace (`p x d`).
    pub basis_rows: Vec<Vec<f64>>,
    /// Periods whose differences define the subspace.
    pub tau: Vec<usize>,
    /// Those differences, in order.
    pub deltas: Vec<Vec<f64>>,
}

impl SubspaceState {
    pub fn p(&self) -> usize {
        self.basis_rows.len()
    }

    pub fn basis(&self) -> Result<Matrix> {
        Matrix::from_rows(&self.basis_rows)
    }
}

/// Knowledge superset inside the current subspace.
#[derive(Debug, Clone, PartialEq)]
pub enum PcShape {
    /// No nonzero difference seen yet.
    Empty,
    /// One-dimensional subspace; the superset is the ray along the first difference.
    Ray,
    /// Ellipsoidal cone in subspace coordinates.
    Cone(EllipsoidalCone),
}

#[derive(Debug, Clone)]
pub struct ProjectedCones {
    d: usize,
    params: PolicyParams,
    subspace: SubspaceState,
    shape: PcShape,
    /// Cone updates performed while the subspace had dimension `p` (index `p`).
    cone_updates_by_dim: Vec<usize>,
    /// `tan` of the uncertainty angle of the cone created when dimension `p` was entered.
    initial_tan_by_dim: Vec<Option<f64>>,
    periods_seen: usize,
}

/// One period of the general-case algorithm. `t` is the period index
/// recorded in `tau` on a subspace update.
pub fn pc_step(
    subspace: &SubspaceState,
    shape: &PcShape,
    params: &PolicyParams,
    feedback: &Feedback,
    t: usize,
) -> Result<(SubspaceState, PcShape, PeriodKind, StepDiagnostics)> {
    let delta = effective_difference(feedback);
    let d = delta.len();
    if norm(&delta) == 0.0 {
        return Ok((
            subspace.clone(),
            shape.clone(),
            PeriodKind::ZeroDifference,
            StepDiagnostics::default(),
        ));
    }
    let residual = orthogonalize(&delta, &subspace.basis_rows);
    let r = norm(&residual);
    if r > params.eta {
        let mut next = subspace.clone();
        next.tau.push(t);
        next.deltas.push(delta);
        next.basis_rows = gram_schmidt(&next.deltas)?;
        let shape = if next.p() == 1 {
            PcShape::Ray
        } else {
            let u1 = poly_center(&next.deltas, &next.basis()?)?;
            let weight = (d as f64).powi(3) / params.eta.powi(2 * (d as i32 - 1));
            PcShape::Cone(EllipsoidalCone::isotropic(u1.coords(), weight)?)
        };
        let diagnostics = StepDiagnostics {
            quadratic_form: None,
            residual: Some(r),
        };
        return Ok((next, shape, PeriodKind::SubspaceUpdate, diagnostics));
    }
    let cone = match shape {
        PcShape::Cone(cone) => cone,
        PcShape::Ray => {
            let diagnostics = StepDiagnostics {
                quadratic_form: None,
                residual: Some(r),
            };
            return Ok((
                subspace.clone(),
                shape.clone(),
                PeriodKind::LowRegret,
                diagnostics,
            ));
        }
        PcShape::Empty => {
            return Err(Error::InternalInvariant(
                "nonzero difference inside an empty subspace".into(),
            ));
        }
    };
    let projected = sub(&delta, &residual);
    let basis = subspace.basis()?;
    let dhat = cone.u().tr_mul_vec(&basis.mul_vec(&projected));
    let q = cone.quadratic_form(&dhat[1..]);
    let diagnostics = StepDiagnostics {
        quadratic_form: Some(q),
        residual: Some(r),
    };
    if q <= params.epsilon * params.epsilon || norm(&dhat[1..]) < 1e-12 {
        return Ok((
            subspace.clone(),
            shape.clone(),
            PeriodKind::LowRegret,
            diagnostics,
        ));
    }
    let p = cone.p();
    if params.eta > q.sqrt() / (2.0 * (p - 1) as f64) {
        return Err(Error::InternalInvariant(format!(
            "shallow-cut margin {} exceeds sqrt(q)/(2(p-1)) = {}",
            params.eta,
            q.sqrt() / (2.0 * (p - 1) as f64)
        )));
    }
    let next = cone_update(cone, &projected, params.eta, &basis)?;
    Ok((
        subspace.clone(),
        PcShape::Cone(next),
        PeriodKind::ConeUpdate,
        diagnostics,
    ))
}

impl ProjectedCones {
    pub fn new(d: usize, params: PolicyParams) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        params.validate()?;
        Ok(Self {
            d,
            params,
            subspace: SubspaceState {
                basis_rows: Vec::new(),
                tau: Vec::new(),
                deltas: Vec::new(),
            },
            shape: PcShape::Empty,
            cone_updates_by_dim: vec![0; d + 1],
            initial_tan_by_dim: vec![None; d + 1],
            periods_seen: 0,
        })
    }

    pub fn subspace(&self) -> &SubspaceState {
        &self.subspace
    }

    pub fn shape(&self) -> &PcShape {
        &self.shape
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn cone_updates_by_dim(&self) -> &[usize] {
        &self.cone_updates_by_dim
    }

    pub fn initial_tan_by_dim(&self) -> &[Option<f64>] {
        &self.initial_tan_by_dim
    }

    /// Upper bound on the number of cone updates at dimension `p`, or
    /// `None` if no cone was ever built at that dimension.
    pub fn cone_update_bound(&self, p: usize) -> Option<f64> {
        let tan = self.initial_tan_by_dim.get(p).copied().flatten()?;
        let pm1 = (p - 1) as f64;
        Some(20.0 * pm1 * pm1 * (10.0 * p as f64 * tan / self.params.epsilon).ln() + 1.0)
    }
}

impl Policy for ProjectedCones {
    fn name(&self) -> &'static str {
        "projected"
    }

    fn proxy_cost(&self) -> Result<Vec<f64>> {
        match &self.shape {
            PcShape::Empty => Ok(basis_vector(self.d, 0)),
            PcShape::Ray => Ok(self.subspace.basis_rows[0].clone()),
            PcShape::Cone(cone) => Ok(self.subspace.basis()?.tr_mul_vec(&cone.axis())),
        }
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<StepOutcome> {
        self.periods_seen += 1;
        let (subspace, shape, kind, diagnostics) = pc_step(
            &self.subspace,
            &self.shape,
            &self.params,
            feedback,
            self.periods_seen,
        )?;
        match kind {
            PeriodKind::ConeUpdate => self.cone_updates_by_dim[subspace.p()] += 1,
            PeriodKind::SubspaceUpdate => {
                if let PcShape::Cone(cone) = &shape {
                    self.initial_tan_by_dim[subspace.p()] = Some(cone_angle(cone).tan());
                }
            }
            _ => {}
        }
        self.subspace = subspace;
        self.shape = shape;
        Ok(StepOutcome { kind, diagnostics })
    }

    fn snapshot(&self) -> PolicySnapshot {
        let (lambda_max, lambda_min) = match &self.shape {
            PcShape::Cone(c) => (c.lambda_max(), c.lambda_min()),
            _ => (None, None),
        };
        PolicySnapshot {
            lambda_max,
            lambda_min,
            p: Some(self.subspace.p()),
            cone_updates: self.cone_updates_by_dim.iter().sum(),
            subspace_updates: self.subspace.tau.len(),
        }
    }

    fn cone_update_bounds(&self) -> Vec<Option<f64>> {
        (0..=self.d).map(|p| self.cone_update_bound(p)).collect()
    }

    fn superset_contains(&self, c: &[f64], slack: f64) -> Option<bool> {
        match &self.shape {
            PcShape::Empty => Some(true),
            PcShape::Ray => Some(crate::numerics::dot(&self.subspace.basis_rows[0], c) >= -slack),
            PcShape::Cone(cone) => {
                let basis = self.subspace.basis().ok()?;
                Some(contains_with_slack(cone, &basis.mul_vec(c), slack))
            }
        }
    }
}
