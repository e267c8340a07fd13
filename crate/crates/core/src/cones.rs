//! Ellipsoidal cones, the cone update with optional shallow cuts, the
//! polyhedral-cone center and the inradius diagnostics of simplicial cones.

use crate::error::{Error, Result};
use crate::geometry::{ray_hull_center, UnitVector};
use crate::numerics::{
    self, complete_orthonormal, dot, gram_schmidt, norm, orthogonalize, solve_linear, sym_eig,
    Matrix, SymmetricMatrix,
};
use crate::tol::tol;

/// `E(W, U) = U {c : c[1..]' W^{-1} c[1..] <= c[0]^2, c[0] >= 0}` in `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidalCone {
    w: Vec<f64>,
    u: Matrix,
}

impl EllipsoidalCone {
    pub fn new(w: Vec<f64>, u: Matrix) -> Result<Self> {
        let p = u.rows();
        if p == 0 || u.cols() != p || w.len() + 1 != p {
            return Err(Error::DimensionMismatch(format!(
                "cone needs a square U and p-1 weights, got {}x{} and {}",
                u.rows(),
                u.cols(),
                w.len()
            )));
        }
        if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput(
                "cone weights must be positive and finite".into(),
            ));
        }
        if u.orthonormality_error() > 1e-9 {
            return Err(Error::InvalidInput("U is not orthonormal".into()));
        }
        Ok(Self { w, u })
    }

    /// Isotropic cone `W = weight * I` around `axis`.
    pub fn isotropic(axis: &[f64], weight: f64) -> Result<Self> {
        let u = complete_orthonormal(axis)?;
        Self::new(vec![weight; axis.len() - 1], u)
    }

    pub fn p(&self) -> usize {
        self.u.rows()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    /// The circumcenter `U e_1`.
    pub fn axis(&self) -> Vec<f64> {
        self.u.column(0)
    }

    pub fn lambda_max(&self) -> Option<f64> {
        self.w.iter().copied().reduce(f64::max)
    }

    pub fn lambda_min(&self) -> Option<f64> {
        self.w.iter().copied().reduce(f64::min)
    }

    /// `g' W g` for the off-axis coordinates `g`.
    pub fn quadratic_form(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.w).map(|(gi, wi)| gi * gi * wi).sum()
    }
}

pub fn cone_contains(cone: &EllipsoidalCone, c: &[f64]) -> bool {
    if c.len() != cone.p() {
        return false;
    }
    let z = cone.u.tr_mul_vec(c);
    let slack = tol().cone_membership;
    if cone.p() == 1 {
        return z[0] >= -slack;
    }
    let q: f64 = z[1..]
        .iter()
        .zip(&cone.w)
        .map(|(zi, wi)| zi * zi / wi)
        .sum();
    z[0] >= -slack && q <= z[0] * z[0] + slack
}

/// Uncertainty angle `arctan sqrt(max W)`; zero for a ray.
pub fn cone_angle(cone: &EllipsoidalCone) -> f64 {
    cone.lambda_max().map_or(0.0, |l| l.sqrt().atan())
}

/// Ellipsoidal form of the revolution cone with the given aperture.
pub fn revolution_to_cone(aperture: f64, axis: &UnitVector) -> Result<EllipsoidalCone> {
    if !(aperture > 0.0 && aperture < std::f64::consts::FRAC_PI_2) {
        return Err(Error::NotPointed(aperture));
    }
    let t = aperture.tan();
    EllipsoidalCone::isotropic(axis.coords(), t * t)
}

/// Ellipsoid step on the cross-section of `cone` followed by refitting a
/// cone around the result.
///
/// `delta` lives in the ambient space of `basis` (a `p x d` matrix with
/// orthonormal rows); the kept side is `(B delta)'c >= -eta`.
pub fn cone_update(
    cone: &EllipsoidalCone,
    delta: &[f64],
    eta: f64,
    basis: &Matrix,
) -> Result<EllipsoidalCone> {
    let p = cone.p();
    if p < 2 {
        return Err(Error::UnsupportedDimension {
            expected: ">= 2".into(),
            got: p,
        });
    }
    if basis.rows() != p || basis.cols() != delta.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis is {}x{}, cone dimension {p}, delta length {}",
            basis.rows(),
            basis.cols(),
            delta.len()
        )));
    }
    if !(eta >= 0.0) {
        return Err(Error::InvalidInput(format!("negative margin {eta}")));
    }
    let dbar = cone.u.tr_mul_vec(&basis.mul_vec(delta));
    if dbar[0] > tol().cut_side {
        return Err(Error::InvalidInput(format!(
            "cut removes the circumcenter side (delta'c_hat = {})",
            dbar[0]
        )));
    }
    let g = &dbar[1..];
    let gn = norm(g);
    if gn < tol().degenerate_cut {
        return Err(Error::DegenerateCut(gn));
    }
    let gwg = cone.quadratic_form(g);
    let s = gwg.sqrt();
    let n = (p - 1) as f64;
    if eta > 0.0 && eta > s / (2.0 * n) * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "margin {eta} exceeds sqrt(g'Wg)/(2(p-1)) = {}",
            s / (2.0 * n)
        )));
    }
    let beta = -eta / s;
    let b: Vec<f64> = g.iter().zip(&cone.w).map(|(gi, wi)| wi * gi / s).collect();
    let a = numerics::scale(&b, (1.0 + n * beta) / p as f64);

    let m1 = p - 1;
    let mut nmat = Matrix::zeros(m1, m1);
    if p == 2 {
        // The cross-section is an interval; the kept piece is its own
        // smallest enclosing interval.
        let half = 0.5 * (1.0 - beta);
        nmat[(0, 0)] = half * half * cone.w[0];
    } else {
        let coef = n * n / (n * n - 1.0) * (1.0 - beta * beta);
        let shrink = 2.0 * (1.0 + n * beta) / (p as f64 * (1.0 + beta));
        for i in 0..m1 {
            for j in 0..m1 {
                let wij = if i == j { cone.w[i] } else { 0.0 };
                nmat[(i, j)] = coef * (wij - shrink * b[i] * b[j]);
            }
        }
    }
    let nsym = SymmetricMatrix::symmetrized(&nmat)?;
    let n_eig = sym_eig(&nsym)?;

    let mut m = Matrix::zeros(p, p);
    m[(0, 0)] = 1.0;
    for i in 0..m1 {
        m[(0, i + 1)] = a[i];
        m[(i + 1, 0)] = a[i];
        for j in 0..m1 {
            m[(i + 1, j + 1)] = a[i] * a[j] - nsym.get(i, j);
        }
    }
    let m_eig = sym_eig(&SymmetricMatrix::symmetrized(&m)?)?;
    let positive = m_eig.eigenvalues.iter().filter(|&&l| l > 0.0).count();
    if positive != 1 || m_eig.eigenvalues[p - 1] <= 0.0 {
        return Err(Error::NumericalFailure(format!(
            "refit matrix has {positive} positive eigenvalues"
        )));
    }
    // New axis first, then the remaining directions from the eigenvalue
    // closest to zero outwards so they pair with ascending weights.
    let mut v = Matrix::zeros(p, p);
    let mut axis = m_eig.eigenvectors.column(p - 1);
    if axis[0] < 0.0 {
        axis.iter_mut().for_each(|x| *x = -*x);
    }
    v.set_column(0, &axis);
    for k in 1..p {
        v.set_column(k, &m_eig.eigenvectors.column(p - 1 - k));
    }
    let mut u_new = cone.u.matmul(&v);
    if u_new.orthonormality_error() > tol().orthonormal_drift {
        let cols = gram_schmidt(&u_new.columns())?;
        u_new = Matrix::from_columns(&cols)?;
    }
    let w_new = n_eig.eigenvalues;
    if w_new.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::NumericalFailure(format!(
            "updated weights not positive: {w_new:?}"
        )));
    }
    EllipsoidalCone::new(w_new, u_new)
}

/// Center of `K = {c : (B delta_i)'c >= 0}` in the `p` coordinates of `basis`.
pub fn poly_center(deltas: &[Vec<f64>], basis: &Matrix) -> Result<UnitVector> {
    let p = basis.rows();
    if deltas.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "need {p} differences, got {}",
            deltas.len()
        )));
    }
    let dbar: Vec<Vec<f64>> = deltas.iter().map(|d| basis.mul_vec(d)).collect();
    gram_schmidt(&dbar)?;
    let rays = simplicial_generators(&dbar)?;
    let (center, _) = ray_hull_center(&rays)?;
    if let Some(v) = dbar
        .iter()
        .map(|d| dot(d, center.coords()) / norm(d))
        .find(|v| *v < -tol().constraint)
    {
        return Err(Error::NumericalFailure(format!(
            "polyhedral center violates a facet by {v}"
        )));
    }
    Ok(center)
}

/// Unit extreme rays `q_k` of `{c : d_i'c >= 0}` for `p` independent normals in `R^p`.
pub fn simplicial_generators(normals: &[Vec<f64>]) -> Result<Vec<UnitVector>> {
    let p = normals.len();
    let sum = normals
        .iter()
        .fold(vec![0.0; p], |acc, d| numerics::add(&acc, d));
    let z = numerics::normalized(&sum)
        .ok_or_else(|| Error::DependentInput("differences sum to zero".into()))?;
    let mut rays = Vec::with_capacity(p);
    for k in 0..p {
        let mut rows = Vec::with_capacity(p);
        rows.push(z.clone());
        rows.extend(
            normals
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, d)| d.clone()),
        );
        let chi = solve_linear(&Matrix::from_rows(&rows)?, &numerics::basis_vector(p, 0))?;
        rays.push(UnitVector::normalize(&chi)?);
    }
    Ok(rays)
}

/// Upper bound on the uncertainty angle of a polyhedral cone built from
/// differences that each add a residual of at least `eta`.
pub fn polyhedral_angle_bound(eta: f64, d: usize) -> f64 {
    (eta.powi(d as i32 - 1) / (d as f64).powf(1.5)).acos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InradiusDiagnostics {
    pub rho_lower: f64,
    pub cond_upper: f64,
    pub phi: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Gram-matrix bounds for the simplicial cone with unit columns `columns`.
pub fn inradius_diagnostics(columns: &[Vec<f64>]) -> Result<InradiusDiagnostics> {
    let p = columns.len();
    if p == 0 {
        return Err(Error::InvalidInput("no columns".into()));
    }
    gram_schmidt(columns)?;
    let mut gram = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            gram[(i, j)] = dot(&columns[i], &columns[j]);
        }
    }
    let eig = sym_eig(&SymmetricMatrix::symmetrized(&gram)?)?;
    let lambda_min = eig.eigenvalues[0];
    let lambda_max = eig.eigenvalues[p - 1];
    let phi = leave_one_out_residuals(columns)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(InradiusDiagnostics {
        rho_lower: (lambda_min / lambda_max).sqrt() / (p as f64).sqrt(),
        cond_upper: (p as f64 / phi).powi(2),
        phi,
        lambda_min,
        lambda_max,
    })
}

/// `|g_i - proj_{g_1..g_{i-1}}(g_i)|` for each `i`.
pub fn sequential_residuals(columns: &[Vec<f64>]) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::with_capacity(columns.len());
    for g in columns {
        let r = orthogonalize(g, &basis);
        let rn = norm(&r);
        out.push(rn);
        if rn > 0.0 {
            basis.push(numerics::scale(&r, 1.0 / rn));
        }
    }
    out
}

/// `|g_i - proj_{g_{-i}}(g_i)|` for each `i`.
pub fn leave_one_out_residuals(columns: &[Vec<f64>]) -> Result<Vec<f64>> {
    (0..columns.len())
        .map(|i| {
            let others: Vec<Vec<f64>> = columns
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, g)| g.clone())
                .collect();
            let basis = gram_schmidt(&others)?;
            Ok(norm(&orthogonalize(&columns[i], &basis)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn eye_cone() -> EllipsoidalCone {
        EllipsoidalCone::new(vec![1.0, 1.0], Matrix::identity(3)).unwrap()
    }

    #[test]
    fn membership_examples() {
        let c = eye_cone();
        assert!(cone_contains(&c, &c.axis()));
        assert!(!cone_contains(&c, &[1.0, 1.0, 1.0]));
        assert!(cone_contains(&c, &[1.0, 0.6, 0.6]));
        assert!(!cone_contains(&c, &[-1.0, 0.0, 0.0]));
    }

    #[test]
    fn angle_examples() {
        assert!((cone_angle(&eye_cone()) - FRAC_PI_4).abs() < 1e-15);
        let c = EllipsoidalCone::new(vec![0.25, 1.0], Matrix::identity(3)).unwrap();
        assert!((cone_angle(&c) - FRAC_PI_4).abs() < 1e-15);
        let c = EllipsoidalCone::new(vec![3.0], Matrix::identity(2)).unwrap();
        assert!((cone_angle(&c) - FRAC_PI_3).abs() < 1e-15);
        let ray = EllipsoidalCone::new(vec![], Matrix::identity(1)).unwrap();
        assert_eq!(cone_angle(&ray), 0.0);
    }

    #[test]
    fn revolution_examples() {
        let c = revolution_to_cone(FRAC_PI_4, &UnitVector::basis(3, 0)).unwrap();
        for (x, y) in c.w().iter().zip([1.0, 1.0]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(c.u(), &Matrix::identity(3));
        let c = revolution_to_cone(FRAC_PI_6, &UnitVector::basis(3, 0)).unwrap();
        assert!(c.w().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
        let e2 = UnitVector::basis(3, 1);
        let c = revolution_to_cone(FRAC_PI_3, &e2).unwrap();
        assert!(cone_contains(&c, e2.coords()));
        assert!((cone_angle(&c) - FRAC_PI_3).abs() < 1e-10);
        assert!(matches!(
            revolution_to_cone(std::f64::consts::FRAC_PI_2, &e2),
            Err(Error::NotPointed(_))
        ));
    }

    #[test]
    fn update_worked_example() {
        for sign in [1.0, -1.0] {
            let out =
                cone_update(&eye_cone(), &[0.0, sign, 0.0], 0.0, &Matrix::identity(3)).unwrap();
            assert!((out.w()[0] - 4.0 / 9.0).abs() < 1e-12);
            assert!((out.w()[1] - 4.0 / 3.0).abs() < 1e-12);
            let prod: f64 = out.w().iter().product();
            assert!((prod - 16.0 / 27.0).abs() < 1e-12);
            assert!(prod <= (-0.5f64).exp());
            // The axis tilts towards the kept side.
            assert!(sign * out.axis()[1] > 0.0);
        }
    }

    #[test]
    fn update_rejects_bad_cuts() {
        let c = eye_cone();
        let i3 = Matrix::identity(3);
        assert!(matches!(
            cone_update(&c, &[-1.0, 0.0, 0.0], 0.0, &i3),
            Err(Error::DegenerateCut(_))
        ));
        assert!(cone_update(&c, &[0.5, 0.5, 0.0], 0.0, &i3).is_err());
        assert!(cone_update(&c, &[0.0, 1.0, 0.0], 0.3, &i3).is_err());
        assert!(cone_update(&c, &[0.0, 1.0, 0.0], 0.25, &i3).is_ok());
    }

    #[test]
    fn update_in_two_dimensions() {
        let c = EllipsoidalCone::new(vec![1.0], Matrix::identity(2)).unwrap();
        let out = cone_update(&c, &[0.0, 1.0], 0.0, &Matrix::identity(2)).unwrap();
        assert!((out.w()[0] - 0.25).abs() < 1e-12);
        // The kept piece is the planar cone between (1, 0) and (1, 1); its
        // bisector is the new axis.
        let ax = out.axis();
        assert!((ax[1] / ax[0] - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(cone_contains(&out, &[1.0, 1.0]));
        assert!(cone_contains(&out, &[1.0, 0.0]));
    }

    #[test]
    fn poly_center_examples() {
        let i3 = Matrix::identity(3);
        let deltas: Vec<Vec<f64>> = (0..3).map(|i| numerics::basis_vector(3, i)).collect();
        let c = poly_center(&deltas, &i3).unwrap();
        for x in c.coords() {
            assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        let b = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let c = poly_center(&deltas[..2], &b).unwrap();
        assert!((c.coords()[0] - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((c.coords()[1] - 0.5f64.sqrt()).abs() < 1e-12);
        let dep = vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(matches!(
            poly_center(&dep, &i3),
            Err(Error::DependentInput(_))
        ));
    }

    #[test]
    fn angle_bound_examples() {
        assert!((polyhedral_angle_bound(1.0, 2) - 1.2094292028881888).abs() < 1e-12);
        assert!((polyhedral_angle_bound(0.5, 3) - (0.25 / 27f64.sqrt()).acos()).abs() < 1e-15);
        assert!((polyhedral_angle_bound(0.5, 3) - 1.52266).abs() < 1e-5);
    }

    #[test]
    fn inradius_examples() {
        let g: Vec<Vec<f64>> = (0..3).map(|i| numerics::basis_vector(3, i)).collect();
        let r = inradius_diagnostics(&g).unwrap();
        assert!((r.rho_lower - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((r.phi - 1.0).abs() < 1e-12);
        assert!((r.cond_upper - 9.0).abs() < 1e-12);

        let s = 0.5f64.sqrt();
        let r = inradius_diagnostics(&[vec![1.0, 0.0], vec![s, s]]).unwrap();
        assert!((r.phi - s).abs() < 1e-12);
        assert!((r.cond_upper - 8.0).abs() < 1e-10);
        assert!((r.lambda_max / r.lambda_min - (1.0 + s) / (1.0 - s)).abs() < 1e-9);
    }

    #[test]
    fn center_respects_facets_of_skewed_cone() {
        let deltas = vec![
            vec![1.0, 0.0, 0.0],
            UnitVector::normalize(&[0.3, 1.0, 0.0]).unwrap().into_vec(),
            UnitVector::normalize(&[0.2, -0.4, 1.0]).unwrap().into_vec(),
        ];
        let c = poly_center(&deltas, &Matrix::identity(3)).unwrap();
        let rays = simplicial_generators(&deltas).unwrap();
        let alpha = rays
            .iter()
            .map(|q| angle(q.coords(), c.coords()))
            .fold(0.0, f64::max);
        assert!(alpha < std::f64::consts::FRAC_PI_2);
        for d in &deltas {
            assert!(dot(d, c.coords()) >= -1e-12);
        }
    }

    #[test]
    fn random_updates_keep_the_cut_piece() {
        use rand::{RngExt, SeedableRng};
        use rand_xoshiro::Xoshiro256PlusPlus;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        for trial in 0..300 {
            let p = 2 + trial % 5;
            let w: Vec<f64> = (0..p - 1).map(|_| rng.random_range(0.05..4.0)).collect();
            let axis: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u = complete_orthonormal(&axis).unwrap();
            let cone = EllipsoidalCone::new(w.clone(), u.clone()).unwrap();
            // cut in local coordinates, then rotate
            let mut local: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            local[0] = -rng.random_range(0.0..0.5) * cone.quadratic_form(&local[1..]).sqrt();
            let delta = u.mul_vec(&local);
            let s = cone.quadratic_form(&local[1..]).sqrt();
            let eta = if trial % 2 == 0 {
                0.0
            } else {
                rng.random_range(0.0..1.0) * s / (2.0 * (p - 1) as f64)
            };
            let out = cone_update(&cone, &delta, eta, &Matrix::identity(p)).unwrap();
            let before: f64 = w.iter().product();
            let after: f64 = out.w().iter().product();
            let factor = if eta == 0.0 {
                (-1.0 / (p - 1) as f64).exp()
            } else {
                (-1.0 / (20.0 * (p - 1) as f64)).exp()
            };
            assert!(
                after <= factor * before * (1.0 + 1e-9),
                "p={p} ratio {}",
                after / before
            );
            let mut checked = 0;
            while checked < 200 {
                let z: Vec<f64> = (0..p - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
                if dot(&z, &z) > 1.0 {
                    continue;
                }
                let mut loc = vec![1.0];
                loc.extend(z.iter().zip(&w).map(|(zi, wi)| zi * wi.sqrt()));
                if dot(&loc, &local) < -eta {
                    continue;
                }
                checked += 1;
                let c = u.mul_vec(&loc);
                let zz = out.u().tr_mul_vec(&c);
                let q: f64 = zz[1..].iter().zip(out.w()).map(|(a, b)| a * a / b).sum();
                assert!(
                    zz[0] > 0.0 && q <= zz[0] * zz[0] * (1.0 + 1e-7),
                    "trial {trial} p {p} q {q} z0 {}",
                    zz[0]
                );
            }
        }
    }
}
