use crate::error::{Error, Result};
use crate::forward::{effective_difference, Feedback, KnowledgeState};
use crate::geometry::{
    circumcenter, clip_rays_3d, ray_hull_center, simplicial_rays, KnowledgeRegion, UnitVector,
};
use crate::numerics::{complete_orthonormal, dot, norm};

use super::{PeriodKind, Policy, PolicySnapshot, StepDiagnostics, StepOutcome};

/// Plays the circumcenter of the current knowledge set.
///
/// After the first cut the knowledge set is only tracked for pointed
/// polyhedral regions in three dimensions, where it is kept as a cyclic list
/// of extreme rays.
#[derive(Debug, Clone)]
pub struct Greedy {
    knowledge: KnowledgeState,
    rays: Option<Vec<UnitVector>>,
}

impl Greedy {
    pub fn new(initial: KnowledgeRegion) -> Result<Self> {
        initial.validate()?;
        let rays = match &initial {
            KnowledgeRegion::Halfspaces(normals) if initial.dim() == 3 && normals.len() == 3 => {
                Some(simplicial_rays(normals)?)
            }
            KnowledgeRegion::Generators {
                generators,
                pointed: true,
            } if initial.dim() == 3 => Some(cyclic_order(generators)?),
            _ => None,
        };
        Ok(Self {
            knowledge: KnowledgeState::new(initial),
            rays,
        })
    }

    /// Extreme rays of the tracked knowledge set, when available.
    pub fn rays(&self) -> Option<&[UnitVector]> {
        self.rays.as_deref()
    }

    pub fn knowledge(&self) -> &KnowledgeState {
        &self.knowledge
    }

    /// Circumcenter and uncertainty angle of the current knowledge set.
    pub fn center(&self) -> Result<(UnitVector, f64)> {
        if let Some(rays) = &self.rays {
            return ray_hull_center(rays);
        }
        if self.knowledge.full_constraints.is_empty() {
            return circumcenter(&self.knowledge.initial);
        }
        Err(Error::UnsupportedRepresentation(
            "greedy circumcenter after cuts needs a pointed polyhedral region in three dimensions"
                .into(),
        ))
    }
}

fn cyclic_order(rays: &[UnitVector]) -> Result<Vec<UnitVector>> {
    let (center, _) = ray_hull_center(rays)?;
    let frame = complete_orthonormal(center.coords())?;
    let (e1, e2) = (frame.column(1), frame.column(2));
    let mut keyed: Vec<(f64, UnitVector)> = rays
        .iter()
        .map(|r| (dot(r.coords(), &e2).atan2(dot(r.coords(), &e1)), r.clone()))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

impl Policy for Greedy {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn proxy_cost(&self) -> Result<Vec<f64>> {
        Ok(self.center()?.0.into_vec())
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<StepOutcome> {
        let before = self.knowledge.full_constraints.len();
        self.knowledge = self.knowledge.update(feedback);
        if let Some(rays) = self.rays.as_mut() {
            for h in &self.knowledge.full_constraints[before..] {
                if norm(h) > 0.0 {
                    *rays = clip_rays_3d(rays, h)?;
                }
            }
        }
        let kind = if norm(&effective_difference(feedback)) == 0.0 {
            PeriodKind::ZeroDifference
        } else {
            PeriodKind::KnowledgeCut
        };
        Ok(StepOutcome {
            kind,
            diagnostics: StepDiagnostics::default(),
        })
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::default()
    }

    fn superset_contains(&self, c: &[f64], _slack: f64) -> Option<bool> {
        Some(self.knowledge.membership(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{Instance, TieBreak};
    use crate::geometry::RevolutionCone;

    #[test]
    fn greedy_act_examples() {
        let cap =
            RevolutionCone::new(UnitVector::basis(3, 0), std::f64::consts::FRAC_PI_4).unwrap();
        let greedy = Greedy::new(KnowledgeRegion::Cap(cap)).unwrap();
        assert_eq!(greedy.proxy_cost().unwrap(), vec![1.0, 0.0, 0.0]);
        let y = UnitVector::normalize(&[-0.1, 1.0, 0.0]).unwrap().into_vec();
        let two = Instance::new(vec![vec![0.0; 3], y]).unwrap();
        assert_eq!(greedy.act(&two, &TieBreak::FirstIndex).unwrap(), 1);
        let one = Instance::new(vec![vec![0.2, 0.1, 0.0]]).unwrap();
        assert_eq!(greedy.act(&one, &TieBreak::FirstIndex).unwrap(), 0);
    }
}
