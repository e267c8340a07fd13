//! Built-in self checks, grouped by module.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::adversary::{greedy_killer, GreedyKiller};
use crate::cones::{
    cone_angle, cone_contains, cone_update, inradius_diagnostics, leave_one_out_residuals,
    revolution_to_cone, sequential_residuals, EllipsoidalCone,
};
use crate::error::{Error, Result};
use crate::geometry::{angle, ray_hull_center, UnitVector};
use crate::numerics::{dot, norm, normalized, Matrix};
use crate::policies::Greedy;

use super::{run, EnvKind, PolicyKind, RunConfig, Simulation, TieBreakMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Geometry,
    Cones,
    Policies,
    Adversary,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometry" => Ok(Self::Geometry),
            "cones" => Ok(Self::Cones),
            "policies" => Ok(Self::Policies),
            "adversary" => Ok(Self::Adversary),
            "all" => Ok(Self::All),
            other => Err(Error::Config(format!("unknown suite '{other}'"))),
        }
    }
}

/// Outcome of one check. `observed` is compared against `tolerance` in the
/// direction stated by the check name.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub tolerance: f64,
    pub observed: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{} observed={:.6e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.observed,
            self.tolerance
        )?;
        if let Some(d) = &self.detail {
            write!(f, " ({d})")?;
        }
        Ok(())
    }
}

fn at_most(
    suite: &'static str,
    name: &'static str,
    observed: Result<f64>,
    tolerance: f64,
) -> Check {
    match observed {
        Ok(v) => Check {
            suite,
            name,
            tolerance,
            observed: v,
            passed: v <= tolerance,
            detail: None,
        },
        Err(e) => Check {
            suite,
            name,
            tolerance,
            observed: f64::NAN,
            passed: false,
            detail: Some(e.to_string()),
        },
    }
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Geometry => geometry_checks(),
        Suite::Cones => cone_checks(),
        Suite::Policies => policy_checks(),
        Suite::Adversary => adversary_checks(),
        Suite::All => {
            let mut all = geometry_checks();
            all.extend(cone_checks());
            all.extend(policy_checks());
            all.extend(adversary_checks());
            all
        }
    }
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn gaussian(rng: &mut Xoshiro256PlusPlus, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(rng: &mut Xoshiro256PlusPlus, d: usize) -> UnitVector {
    loop {
        if let Some(v) = normalized(&gaussian(rng, d)) {
            return UnitVector::new(v).expect("normalized");
        }
    }
}

/// Random unit vector within `spread` radians of `e_1`.
fn near_e1(rng: &mut Xoshiro256PlusPlus, d: usize, spread: f64) -> UnitVector {
    loop {
        let u = unit(rng, d);
        if u.coords()[0] > spread.cos() {
            return u;
        }
    }
}

fn geometry_checks() -> Vec<Check> {
    const S: &str = "geometry";
    let mut out = Vec::new();

    let orthant = (0..3).map(|i| UnitVector::basis(3, i)).collect::<Vec<_>>();
    out.push(at_most(
        S,
        "orthant_circumcenter",
        ray_hull_center(&orthant).map(|(c, a)| {
            let want = 1.0 / 3f64.sqrt();
            let dc = c
                .coords()
                .iter()
                .map(|x| (x - want).abs())
                .fold(0.0, f64::max);
            dc.max((a - want.acos()).abs())
        }),
        1e-9,
    ));

    let mut r = rng(11);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..2000 {
        let (a, b, c) = (unit(&mut r, 4), unit(&mut r, 4), unit(&mut r, 4));
        let lhs = angle(a.coords(), c.coords());
        let rhs = angle(a.coords(), b.coords()) + angle(b.coords(), c.coords());
        worst = worst.max(lhs - rhs);
    }
    out.push(at_most(S, "triangle_inequality", Ok(worst), 1e-12));

    // Nudging the center never lowers the largest angle to the rays.
    let mut r = rng(12);
    let minimality = (|| -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..100 {
            let rays: Vec<UnitVector> = (0..4).map(|_| near_e1(&mut r, 3, 1.2)).collect();
            let (c, a) = ray_hull_center(&rays)?;
            for _ in 0..50 {
                let step: Vec<f64> = gaussian(&mut r, 3).iter().map(|x| 1e-3 * x).collect();
                let moved: Vec<f64> = c.coords().iter().zip(&step).map(|(x, s)| x + s).collect();
                let m = rays
                    .iter()
                    .map(|g| angle(&moved, g.coords()))
                    .fold(0.0, f64::max);
                worst = worst.max(a - m);
            }
        }
        Ok(worst)
    })();
    out.push(at_most(S, "center_minimality", minimality, 1e-9));

    let mut r = rng(13);
    let perm = (|| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let mut rays: Vec<UnitVector> = (0..5).map(|_| near_e1(&mut r, 4, 1.0)).collect();
            let (c1, _) = ray_hull_center(&rays)?;
            rays.reverse();
            rays.swap(0, 2);
            let (c2, _) = ray_hull_center(&rays)?;
            worst = worst.max(angle(c1.coords(), c2.coords()));
        }
        Ok(worst)
    })();
    out.push(at_most(S, "permutation_invariance", perm, 1e-7));
    out
}

fn random_cone(r: &mut Xoshiro256PlusPlus, p: usize) -> Result<EllipsoidalCone> {
    let w: Vec<f64> = (1..p).map(|_| 0.2 + 5.0 * r.random::<f64>()).collect();
    let cols: Vec<Vec<f64>> = (0..p).map(|_| gaussian(r, p)).collect();
    let q = crate::numerics::gram_schmidt(&cols)?;
    EllipsoidalCone::new(w, Matrix::from_columns(&q)?)
}

/// Point of the cone surface `{z : z_1 = 1, sum z_i^2 / w_i = 1}` in original coordinates.
fn cone_point(cone: &EllipsoidalCone, r: &mut Xoshiro256PlusPlus, interior: bool) -> Vec<f64> {
    let p = cone.p();
    let dir = unit(r, p - 1);
    let rad = if interior {
        r.random::<f64>().sqrt()
    } else {
        1.0
    };
    let mut z = vec![1.0];
    z.extend(
        dir.coords()
            .iter()
            .zip(cone.w())
            .map(|(x, w)| rad * x * w.sqrt()),
    );
    cone.u().mul_vec(&z)
}

fn cone_checks() -> Vec<Check> {
    const S: &str = "cones";
    let mut out = Vec::new();

    // Isotropic cone in R^3 cut through its axis: W goes from (1, 1) to (4/9, 4/3).
    let halving = (|| -> Result<f64> {
        let cone = EllipsoidalCone::new(vec![1.0, 1.0], Matrix::identity(3))?;
        let next = cone_update(&cone, &[0.0, -1.0, 0.0], 0.0, &Matrix::identity(3))?;
        Ok(next.w().iter().product::<f64>())
    })();
    out.push(at_most(S, "volume_ratio_halving", halving, (-0.5f64).exp()));

    let mut r = rng(21);
    let containment = (|| -> Result<f64> {
        let mut misses = 0usize;
        for k in 0..200 {
            let p = 2 + k % 4;
            let cone = random_cone(&mut r, p)?;
            let g = gaussian(&mut r, p - 1);
            let mut delta = vec![0.0];
            delta.extend(g);
            let delta = cone.u().mul_vec(&delta);
            let next = cone_update(&cone, &delta, 0.0, &Matrix::identity(p))?;
            for _ in 0..200 {
                let c = cone_point(&cone, &mut r, true);
                if dot(&delta, &c) >= 0.0 && !cone_contains(&next, &c) {
                    misses += 1;
                }
            }
        }
        Ok(misses as f64)
    })();
    out.push(at_most(S, "cut_containment", containment, 0.0));

    let angle_err = (|| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for a in [FRAC_PI_6 / 2.0, FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, 1.5] {
            let cone = revolution_to_cone(a, &UnitVector::basis(4, 0))?;
            worst = worst.max((cone_angle(&cone) - a).abs());
        }
        Ok(worst)
    })();
    out.push(at_most(S, "revolution_angle", angle_err, 1e-12));

    let mut r = rng(22);
    let cond = (|| -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for k in 0..300 {
            let p = 2 + k % 4;
            let cols: Vec<Vec<f64>> = (0..p).map(|_| near_e1(&mut r, p, 1.3).into_vec()).collect();
            let diag = inradius_diagnostics(&cols)?;
            worst = worst.max(diag.lambda_max / diag.lambda_min / diag.cond_upper - 1.0);
        }
        Ok(worst)
    })();
    out.push(at_most(S, "gram_condition_bound", cond, 1e-9));

    let mut r = rng(23);
    let residual = (|| -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for k in 0..300 {
            let p = 2 + k % 4;
            let cols: Vec<Vec<f64>> = (0..p).map(|_| unit(&mut r, p).into_vec()).collect();
            let seq = sequential_residuals(&cols);
            let loo = leave_one_out_residuals(&cols)?;
            for (l, s) in loo.iter().zip(&seq) {
                worst = worst.max(l - s);
            }
        }
        Ok(worst)
    })();
    out.push(at_most(S, "residual_monotone", residual, 1e-12));
    out
}

fn policy_checks() -> Vec<Check> {
    const S: &str = "policies";
    let mut out = Vec::new();

    let killer = RunConfig {
        policy: PolicyKind::Ellipsoidal,
        env: EnvKind::Killer,
        horizon: 1000,
        verify: true,
        ..RunConfig::default()
    };
    out.push(at_most(
        S,
        "ellipsoidal_killer_bound_gap",
        run(&killer).and_then(|r| {
            let b = r
                .totals
                .bound_thm
                .ok_or_else(|| Error::InternalInvariant("no bound".into()))?;
            Ok(r.totals.cum_regret - b)
        }),
        0.0,
    ));

    for (name, d) in [
        ("projected_random_d3_bound_gap", 3),
        ("projected_random_d4_bound_gap", 4),
    ] {
        let cfg = RunConfig {
            policy: PolicyKind::Projected,
            d,
            horizon: 2000,
            seed: 7,
            verify: true,
            ..RunConfig::default()
        };
        out.push(at_most(
            S,
            name,
            run(&cfg).and_then(|r| {
                let b = r
                    .totals
                    .bound_thm
                    .ok_or_else(|| Error::InternalInvariant("no bound".into()))?;
                Ok(r.totals.cum_regret - b)
            }),
            0.0,
        ));
    }
    out
}

/// Largest angle from a ray of one set to the nearest ray of the other.
fn ray_set_distance(a: &[UnitVector], b: &[UnitVector]) -> f64 {
    let one_way = |x: &[UnitVector], y: &[UnitVector]| {
        x.iter()
            .map(|u| {
                y.iter()
                    .map(|v| angle(u.coords(), v.coords()))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Plays greedy against the killer and returns the largest deviation of the
/// tracked knowledge set from its closed form.
pub fn greedy_killer_track(killer: &GreedyKiller, periods: usize) -> Result<(f64, f64)> {
    let policy = Greedy::new(crate::adversary::Environment::initial_region(killer))?;
    let mut sim = Simulation::new(policy, killer.clone(), TieBreakMode::Adversarial, None);
    let mut worst: f64 = 0.0;
    let mut cum = 0.0;
    for t in 1..=periods {
        let want = killer.generators(killer.epsilon(t - 1))?;
        let have = sim
            .policy
            .rays()
            .ok_or_else(|| Error::InternalInvariant("greedy lost its rays".into()))?;
        worst = worst.max(ray_set_distance(have, &want));
        cum = sim.step()?.cum_regret;
    }
    Ok((worst, cum))
}

fn adversary_checks() -> Vec<Check> {
    const S: &str = "adversary";
    let mut out = Vec::new();

    out.push(at_most(
        S,
        "killer_first_epsilon",
        greedy_killer(FRAC_PI_4, 5, 3).map(|k| (k.epsilon(1) - 0.1).abs()),
        1e-15,
    ));

    out.push(at_most(
        S,
        "greedy_tracks_killer_sets",
        greedy_killer(FRAC_PI_4, 200, 3)
            .and_then(|k| greedy_killer_track(&k, 200))
            .map(|(w, _)| w),
        1e-9,
    ));

    let offline = (|| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for a in [FRAC_PI_6 / 2.0, FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
            let cfg = RunConfig {
                policy: PolicyKind::Greedy,
                env: EnvKind::Offline,
                alpha: a,
                horizon: 1,
                ..RunConfig::default()
            };
            worst = worst.max((run(&cfg)?.totals.cum_regret - a.sin()).abs());
        }
        Ok(worst)
    })();
    out.push(at_most(S, "offline_regret_equals_sine", offline, 1e-9));

    let determinism = (|| -> Result<f64> {
        let cfg = RunConfig {
            horizon: 300,
            seed: 99,
            ..RunConfig::default()
        };
        let (a, b) = (run(&cfg)?, run(&cfg)?);
        Ok(if a == b { 0.0 } else { 1.0 })
    })();
    out.push(at_most(S, "random_env_deterministic", determinism, 0.0));

    let norms = (|| -> Result<f64> {
        let k = greedy_killer(FRAC_PI_3, 1000, 3)?;
        let mut worst: f64 = 0.0;
        for t in [0, 1, 500, 1000] {
            let eps = k.epsilon(t);
            let gens = k.generators(eps)?;
            for h in k.normals(eps) {
                let h = normalized(&h).expect("nonzero normal");
                for g in &gens {
                    worst = worst.max((-dot(&h, g.coords())).max(0.0));
                }
            }
            worst = worst.max((norm(gens[2].coords()) - 1.0).abs());
        }
        Ok(worst)
    })();
    out.push(at_most(S, "killer_generators_feasible", norms, 1e-12));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suites_pass() {
        for suite in [Suite::Geometry, Suite::Cones, Suite::Adversary] {
            for check in run_suite(suite) {
                assert!(check.passed, "{check}");
            }
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("nope".parse::<Suite>().is_err());
    }
}
