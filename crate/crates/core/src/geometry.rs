//! Angles, spherical knowledge regions and their circumcenters.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, dot, norm, normalized, Matrix};
use crate::tol::tol;

/// A point of the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Accepts `coords` only if their norm is within the unit-norm tolerance of 1.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if coords.is_empty() || !((n - 1.0).abs() <= tol().unit_norm) {
            return Err(Error::InvalidInput(format!(
                "expected a unit vector, norm is {n}"
            )));
        }
        Ok(Self(coords))
    }

    /// Rescales a nonzero vector onto the sphere.
    pub fn normalize(v: &[f64]) -> Result<Self> {
        normalized(v)
            .filter(|u| !u.is_empty())
            .map(Self)
            .ok_or_else(|| Error::InvalidInput("cannot normalize a zero vector".into()))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        Self(numerics::basis_vector(dim, i))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Self {
        u.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Angle between two vectors in `[0, pi]`; zero if either vector is zero.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    // 2 atan2(|a - b|, |a + b|) on the normalized vectors stays accurate near 0 and pi.
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x / na, y / nb);
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// All directions within `aperture` of `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct RevolutionCone {
    axis: UnitVector,
    aperture: f64,
}

impl RevolutionCone {
    pub fn new(axis: UnitVector, aperture: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&aperture) {
            return Err(Error::NotPointed(aperture));
        }
        Ok(Self { axis, aperture })
    }

    pub fn axis(&self) -> &UnitVector {
        &self.axis
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KnowledgeRegion {
    Cap(RevolutionCone),
    /// Conic hull of unit generators. `pointed` asserts that they lie in an
    /// open halfspace.
    Generators {
        generators: Vec<UnitVector>,
        pointed: bool,
    },
    /// `{c : h'c >= 0 for every normal h}`.
    Halfspaces(Vec<Vec<f64>>),
    FullSphere {
        dim: usize,
    },
}

impl KnowledgeRegion {
    pub fn dim(&self) -> usize {
        match self {
            KnowledgeRegion::Cap(cap) => cap.axis.dim(),
            KnowledgeRegion::Generators { generators, .. } => {
                generators.first().map_or(0, UnitVector::dim)
            }
            KnowledgeRegion::Halfspaces(normals) => normals.first().map_or(0, Vec::len),
            KnowledgeRegion::FullSphere { dim } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::InvalidInput("empty region description".into()));
        }
        match self {
            KnowledgeRegion::Generators { generators, .. } => {
                if generators.iter().any(|g| g.dim() != dim) {
                    return Err(Error::DimensionMismatch(
                        "generators of different lengths".into(),
                    ));
                }
            }
            KnowledgeRegion::Halfspaces(normals) => {
                if normals.iter().any(|h| h.len() != dim) {
                    return Err(Error::DimensionMismatch(
                        "normals of different lengths".into(),
                    ));
                }
                if normals.iter().any(|h| norm(h) == 0.0) {
                    return Err(Error::InvalidInput("zero halfspace normal".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Membership of the direction of `c`.
    pub fn contains(&self, c: &[f64]) -> bool {
        if c.len() != self.dim() {
            return false;
        }
        let Some(u) = normalized(c) else { return false };
        match self {
            KnowledgeRegion::Cap(cap) => {
                angle(&u, cap.axis.coords()) <= cap.aperture + tol().constraint
            }
            KnowledgeRegion::Generators { generators, .. } => {
                let cols: Vec<Vec<f64>> = generators.iter().map(|g| g.coords().to_vec()).collect();
                match numerics::nnls(&cols, &u) {
                    Ok((_, r)) => r <= tol().constraint,
                    Err(_) => false,
                }
            }
            KnowledgeRegion::Halfspaces(normals) => normals
                .iter()
                .all(|h| dot(h, &u) / norm(h) >= -tol().constraint),
            KnowledgeRegion::FullSphere { .. } => true,
        }
    }
}

/// Circumcenter and uncertainty angle of a region.
pub fn circumcenter(region: &KnowledgeRegion) -> Result<(UnitVector, f64)> {
    region.validate()?;
    match region {
        KnowledgeRegion::Cap(cap) => Ok((cap.axis.clone(), cap.aperture)),
        KnowledgeRegion::Generators {
            generators,
            pointed,
        } => {
            if !pointed {
                return Err(Error::UnsupportedRepresentation(
                    "circumcenter of a region that is not known to be pointed".into(),
                ));
            }
            ray_hull_center(generators)
        }
        KnowledgeRegion::Halfspaces(normals) => {
            if normals.len() != region.dim() {
                return Err(Error::UnsupportedRepresentation(format!(
                    "halfspace region with {} normals in dimension {}",
                    normals.len(),
                    region.dim()
                )));
            }
            ray_hull_center(&simplicial_rays(normals)?)
        }
        KnowledgeRegion::FullSphere { dim } => {
            Ok((UnitVector::basis(*dim, 0), std::f64::consts::PI))
        }
    }
}

/// Smallest enclosing cap of a pointed set of unit rays: the normalized
/// minimum-norm point of their convex hull.
pub fn ray_hull_center(rays: &[UnitVector]) -> Result<(UnitVector, f64)> {
    if rays.is_empty() {
        return Err(Error::InvalidInput("no rays".into()));
    }
    let pts: Vec<Vec<f64>> = rays.iter().map(|r| r.coords().to_vec()).collect();
    let mnp = numerics::min_norm_point(&pts)?;
    let n = norm(&mnp.point);
    if n <= 1e-9 {
        return Err(Error::NotPointed(std::f64::consts::FRAC_PI_2));
    }
    let center = UnitVector::normalize(&mnp.point)?;
    let alpha = rays
        .iter()
        .map(|r| angle(r.coords(), center.coords()))
        .fold(0.0, f64::max);
    Ok((center, alpha))
}

/// Extreme rays of the simplicial cone `{c : h_i'c >= 0}` with `d` independent
/// normals: ray `k` is orthogonal to every normal but `h_k`.
pub fn simplicial_rays(normals: &[Vec<f64>]) -> Result<Vec<UnitVector>> {
    let d = normals.len();
    if d == 0 || normals.iter().any(|h| h.len() != d) {
        return Err(Error::DimensionMismatch(
            "simplicial cone needs d normals in R^d".into(),
        ));
    }
    let a = Matrix::from_rows(normals)?;
    let mut rays = Vec::with_capacity(d);
    for k in 0..d {
        let rhs = numerics::basis_vector(d, k);
        let x = numerics::solve_linear(&a, &rhs)?;
        rays.push(UnitVector::normalize(&x)?);
    }
    Ok(rays)
}

/// Intersects the pointed 3-dimensional cone spanned by `rays` (listed in
/// cyclic order around its axis) with the halfspace `h'c >= 0`.
///
/// Rays on the boundary are kept; new rays appear where an edge crosses the
/// boundary plane. Cyclic order is preserved and duplicates are removed.
pub fn clip_rays_3d(rays: &[UnitVector], h: &[f64]) -> Result<Vec<UnitVector>> {
    if h.len() != 3 || rays.iter().any(|r| r.dim() != 3) {
        return Err(Error::UnsupportedDimension {
            expected: "3".into(),
            got: h.len(),
        });
    }
    let hn = normalized(h).ok_or_else(|| Error::InvalidInput("zero clipping normal".into()))?;
    let slack = tol().constraint;
    let s: Vec<f64> = rays.iter().map(|r| dot(&hn, r.coords())).collect();
    let n = rays.len();
    let mut out: Vec<UnitVector> = Vec::with_capacity(n + 2);
    let push = |v: UnitVector, out: &mut Vec<UnitVector>| {
        if !out
            .iter()
            .any(|o| norm(&numerics::sub(o.coords(), v.coords())) <= 1e-12)
        {
            out.push(v);
        }
    };
    for i in 0..n {
        let j = (i + 1) % n;
        if s[i] >= -slack {
            push(rays[i].clone(), &mut out);
        }
        if n > 1 && ((s[i] > slack && s[j] < -slack) || (s[i] < -slack && s[j] > slack)) {
            let t = s[i] / (s[i] - s[j]);
            let p: Vec<f64> = rays[i]
                .coords()
                .iter()
                .zip(rays[j].coords())
                .map(|(a, b)| a + t * (b - a))
                .collect();
            push(UnitVector::normalize(&p)?, &mut out);
        }
    }
    if let (Some(first), true) = (out.first().cloned(), out.len() > 1) {
        if norm(&numerics::sub(first.coords(), out[out.len() - 1].coords())) <= 1e-12 {
            out.pop();
        }
    }
    if out.is_empty() {
        return Err(Error::InconsistentFeedback(
            "halfspace removes the whole region".into(),
        ));
    }
    Ok(out)
}

/// Uniform sphere draws kept when they fall inside `region`.
pub fn sample_region(region: &KnowledgeRegion, n: usize, seed: u64) -> Result<Vec<UnitVector>> {
    const CHECK_EVERY: usize = 10_000_000;
    const MIN_RATE: f64 = 1e-6;
    region.validate()?;
    let dim = region.dim();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut draws = 0usize;
    while out.len() < n {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        draws += 1;
        if let Some(u) = normalized(&g) {
            if region.contains(&u) {
                out.push(UnitVector(u));
            }
        }
        if draws.is_multiple_of(CHECK_EVERY) && (out.len() as f64) < MIN_RATE * draws as f64 {
            return Err(Error::SamplingFailure {
                accepted: out.len(),
                draws,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    fn uv(v: &[f64]) -> UnitVector {
        UnitVector::normalize(v).unwrap()
    }

    #[test]
    fn angle_examples() {
        let e1 = [1.0, 0.0, 0.0];
        assert_eq!(angle(&e1, &e1), 0.0);
        assert!((angle(&e1, &[0.0, 1.0, 0.0]) - FRAC_PI_2).abs() < 1e-15);
        assert!((angle(&e1, uv(&[1.0, 1.0, 0.0]).coords()) - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(angle(&e1, &[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn unit_vector_rejects_non_unit() {
        assert!(UnitVector::new(vec![1.0, 1.0]).is_err());
        assert!(UnitVector::normalize(&[0.0, 0.0]).is_err());
        assert!(UnitVector::new(vec![0.6, 0.8]).is_ok());
    }

    #[test]
    fn cap_circumcenter_is_exact() {
        let cap = RevolutionCone::new(UnitVector::basis(3, 0), FRAC_PI_6).unwrap();
        let (c, a) = circumcenter(&KnowledgeRegion::Cap(cap)).unwrap();
        assert_eq!(c.coords(), &[1.0, 0.0, 0.0]);
        assert_eq!(a, FRAC_PI_6);
    }

    #[test]
    fn orthant_circumcenter() {
        let gens = (0..3).map(|i| UnitVector::basis(3, i)).collect();
        let (c, a) = circumcenter(&KnowledgeRegion::Generators {
            generators: gens,
            pointed: true,
        })
        .unwrap();
        let s = 1.0 / 3f64.sqrt();
        for x in c.coords() {
            assert!((x - s).abs() < 1e-12);
        }
        assert!((a - s.acos()).abs() < 1e-12);
    }

    #[test]
    fn unflagged_generators_are_unsupported() {
        let gens = vec![UnitVector::basis(2, 0)];
        let r = circumcenter(&KnowledgeRegion::Generators {
            generators: gens,
            pointed: false,
        });
        assert!(matches!(r, Err(Error::UnsupportedRepresentation(_))));
    }

    #[test]
    fn full_sphere_circumcenter() {
        let (c, a) = circumcenter(&KnowledgeRegion::FullSphere { dim: 4 }).unwrap();
        assert_eq!(c.coords(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(a, PI);
    }

    #[test]
    fn halfspace_orthant_matches_generators() {
        let normals = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let (c, _) = circumcenter(&KnowledgeRegion::Halfspaces(normals)).unwrap();
        assert!((c.coords()[0] - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sampling_respects_regions() {
        let s = sample_region(&KnowledgeRegion::FullSphere { dim: 3 }, 3, 1).unwrap();
        assert_eq!(s.len(), 3);
        let cap =
            KnowledgeRegion::Cap(RevolutionCone::new(UnitVector::basis(3, 0), FRAC_PI_4).unwrap());
        for u in sample_region(&cap, 100, 2).unwrap() {
            assert!(angle(u.coords(), &[1.0, 0.0, 0.0]) <= FRAC_PI_4 + 1e-9);
        }
        let hs = KnowledgeRegion::Halfspaces(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        for u in sample_region(&hs, 100, 3).unwrap() {
            assert!(u.coords()[0] >= -1e-9 && u.coords()[1] >= -1e-9);
        }
        assert_eq!(
            sample_region(&cap, 50, 7).unwrap(),
            sample_region(&cap, 50, 7).unwrap()
        );
    }

    #[test]
    fn generator_membership() {
        let gens: Vec<UnitVector> = (0..3).map(|i| UnitVector::basis(3, i)).collect();
        let r = KnowledgeRegion::Generators {
            generators: gens,
            pointed: true,
        };
        assert!(r.contains(&[1.0, 2.0, 0.5]));
        assert!(!r.contains(&[1.0, -0.1, 0.5]));
    }

    #[test]
    fn clipping_orthant() {
        let rays: Vec<UnitVector> = (0..3).map(|i| UnitVector::basis(3, i)).collect();
        let out = clip_rays_3d(&rays, &[1.0, -1.0, 0.0]).unwrap();
        // keeps e1, e3 and adds (e1+e2)/sqrt2
        assert_eq!(out.len(), 3);
        let h = [1.0, -1.0, 0.0];
        for r in &out {
            assert!(dot(&h, r.coords()) >= -1e-12);
        }
        assert!(out
            .iter()
            .any(|r| (r.coords()[0] - r.coords()[1]).abs() < 1e-12 && r.coords()[2] == 0.0));
    }
}
