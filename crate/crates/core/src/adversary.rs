//! Nature: the sequences of instances and the hidden cost vector.

use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{Feedback, Instance};
use crate::geometry::{sample_region, KnowledgeRegion, RevolutionCone, UnitVector};
use crate::numerics::{dot, normalized, scale, sub};

/// How the hidden cost is drawn from the initial region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CStarMode {
    #[default]
    Uniform,
    /// On the boundary of the region (for the full sphere: the great
    /// sphere `c_d = 0`).
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NatureSpec {
    GreedyKiller {
        alpha_bar: f64,
        horizon: usize,
    },
    OfflineTight {
        aperture: f64,
    },
    RandomPairs {
        k_actions: usize,
        seed: u64,
        c_star_mode: CStarMode,
    },
    Replay {
        path: PathBuf,
    },
}

pub trait Environment: Send {
    fn dim(&self) -> usize;

    fn c_star(&self) -> &UnitVector;

    fn initial_region(&self) -> KnowledgeRegion;

    /// Number of periods the environment can supply, if bounded.
    fn horizon(&self) -> Option<usize> {
        None
    }

    /// Instance of period `t` (1-based), given the feedback of earlier periods.
    fn next_instance(&mut self, t: usize, history: &[Feedback]) -> Result<Instance>;

    /// Expert action recorded for period `t`, if the environment carries one.
    fn expert_hint(&self, _t: usize) -> Option<usize> {
        None
    }
}

/// The instance family on which the circumcenter policy incurs linear regret.
#[derive(Debug, Clone)]
pub struct GreedyKiller {
    alpha_bar: f64,
    horizon: usize,
    c_star: UnitVector,
}

pub fn greedy_killer(alpha_bar: f64, horizon: usize, d: usize) -> Result<GreedyKiller> {
    if d != 3 {
        return Err(Error::UnsupportedDimension {
            expected: "3".into(),
            got: d,
        });
    }
    if !(alpha_bar > 0.0 && alpha_bar < FRAC_PI_2) {
        return Err(Error::Config(format!(
            "alpha_bar must lie in (0, pi/2), got {alpha_bar}"
        )));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    let c_star = UnitVector::normalize(&[alpha_bar.cos(), alpha_bar.sin(), 0.0])?;
    Ok(GreedyKiller {
        alpha_bar,
        horizon,
        c_star,
    })
}

impl GreedyKiller {
    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar
    }

    /// `eps_t = t * tan(alpha_bar) / (2T)`.
    pub fn epsilon(&self, t: usize) -> f64 {
        t as f64 * self.alpha_bar.tan() / (2.0 * self.horizon as f64)
    }

    /// Normals of `C_{eps, alpha_bar}`.
    pub fn normals(&self, eps: f64) -> [Vec<f64>; 3] {
        let a = self.alpha_bar;
        let s2 = 2.0 * a.sin() * a.sin();
        let sin2 = (2.0 * a).sin();
        [
            vec![s2, -sin2, sin2],
            vec![s2, -sin2, -sin2],
            vec![-eps, 1.0, 0.0],
        ]
    }

    /// Extreme rays `g1, g2, g3` of `C_{eps, alpha_bar}`.
    pub fn generators(&self, eps: f64) -> Result<[UnitVector; 3]> {
        let t = self.alpha_bar.tan();
        Ok([
            UnitVector::normalize(&[1.0, eps, eps - t])?,
            UnitVector::normalize(&[1.0, eps, t - eps])?,
            self.c_star.clone(),
        ])
    }

    /// Per-period regret of the circumcenter policy in period `t`.
    pub fn greedy_regret(&self, t: usize) -> f64 {
        let e = self.epsilon(t);
        (self.alpha_bar.sin() - e * self.alpha_bar.cos()) / (1.0 + e * e).sqrt()
    }
}

impl Environment for GreedyKiller {
    fn dim(&self) -> usize {
        3
    }

    fn c_star(&self) -> &UnitVector {
        &self.c_star
    }

    fn initial_region(&self) -> KnowledgeRegion {
        KnowledgeRegion::Halfspaces(self.normals(0.0).to_vec())
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.horizon)
    }

    fn next_instance(&mut self, t: usize, _history: &[Feedback]) -> Result<Instance> {
        let e = self.epsilon(t);
        let x = normalized(&[-e, 1.0, 0.0]).expect("nonzero");
        Instance::new(vec![x, vec![0.0; 3]])
    }
}

/// Single-period instance that makes the circumcenter of a cap lose `sin(aperture)`.
#[derive(Debug, Clone)]
pub struct OfflineTight {
    cap: RevolutionCone,
    delta: Vec<f64>,
    candidates: [UnitVector; 2],
    chosen: usize,
}

pub fn offline_tight(cap: RevolutionCone) -> Result<OfflineTight> {
    let e = cap.axis().coords().to_vec();
    if e.len() < 2 {
        return Err(Error::UnsupportedDimension {
            expected: ">= 2".into(),
            got: e.len(),
        });
    }
    let delta = orthogonal_unit(&e);
    let (s, c) = cap.aperture().sin_cos();
    let plus: Vec<f64> = delta.iter().zip(&e).map(|(d, x)| s * d + c * x).collect();
    let minus: Vec<f64> = delta.iter().zip(&e).map(|(d, x)| -s * d + c * x).collect();
    let candidates = [
        UnitVector::normalize(&plus)?,
        UnitVector::normalize(&minus)?,
    ];
    Ok(OfflineTight {
        cap,
        delta,
        candidates,
        chosen: 0,
    })
}

impl OfflineTight {
    /// The two hidden costs nature may pick from.
    pub fn candidates(&self) -> &[UnitVector; 2] {
        &self.candidates
    }

    pub fn with_candidate(mut self, k: usize) -> Self {
        self.chosen = k.min(1);
        self
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::new(vec![vec![0.0; self.delta.len()], self.delta.clone()])
    }
}

impl Environment for OfflineTight {
    fn dim(&self) -> usize {
        self.delta.len()
    }

    fn c_star(&self) -> &UnitVector {
        &self.candidates[self.chosen]
    }

    fn initial_region(&self) -> KnowledgeRegion {
        KnowledgeRegion::Cap(self.cap.clone())
    }

    fn horizon(&self) -> Option<usize> {
        Some(1)
    }

    fn next_instance(&mut self, _t: usize, _history: &[Feedback]) -> Result<Instance> {
        self.instance()
    }
}

fn orthogonal_unit(e: &[f64]) -> Vec<f64> {
    let k = (0..e.len())
        .min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
        .unwrap_or(0);
    let mut v = vec![0.0; e.len()];
    v[k] = 1.0;
    let r = sub(&v, &scale(e, dot(e, &v)));
    normalized(&r).unwrap_or(v)
}

/// Random instances: `k` feature vectors uniform in a ball of diameter one.
#[derive(Debug, Clone)]
pub struct RandomPairs {
    d: usize,
    k: usize,
    region: KnowledgeRegion,
    c_star: UnitVector,
    rng: Xoshiro256PlusPlus,
}

pub fn random_pairs(
    d: usize,
    k_actions: usize,
    seed: u64,
    mode: CStarMode,
    region: KnowledgeRegion,
) -> Result<RandomPairs> {
    if d < 2 {
        return Err(Error::UnsupportedDimension {
            expected: ">= 2".into(),
            got: d,
        });
    }
    if k_actions < 2 {
        return Err(Error::Config(format!(
            "need at least two actions, got {k_actions}"
        )));
    }
    if region.dim() != d {
        return Err(Error::DimensionMismatch("initial region dimension".into()));
    }
    let c_star = draw_c_star(&region, seed, mode)?;
    // Instance stream: a jumped copy of the hidden-cost stream, so the two never overlap.
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    rng.jump();
    Ok(RandomPairs {
        d,
        k: k_actions,
        region,
        c_star,
        rng,
    })
}

fn draw_c_star(region: &KnowledgeRegion, seed: u64, mode: CStarMode) -> Result<UnitVector> {
    let u = sample_region(region, 1, seed)?.remove(0);
    match mode {
        CStarMode::Uniform => Ok(u),
        CStarMode::Boundary => match region {
            KnowledgeRegion::Cap(cap) => {
                let e = cap.axis().coords();
                let side = sub(u.coords(), &scale(e, dot(e, u.coords())));
                let side = normalized(&side).unwrap_or_else(|| orthogonal_unit(e));
                let (s, c) = cap.aperture().sin_cos();
                UnitVector::normalize(
                    &side
                        .iter()
                        .zip(e)
                        .map(|(a, b)| s * a + c * b)
                        .collect::<Vec<_>>(),
                )
            }
            KnowledgeRegion::FullSphere { .. } => {
                let mut v = u.into_vec();
                let last = v.len() - 1;
                v[last] = 0.0;
                UnitVector::normalize(&v)
            }
            _ => Err(Error::UnsupportedRepresentation(
                "boundary sampling is available for caps and the full sphere".into(),
            )),
        },
    }
}

impl Environment for RandomPairs {
    fn dim(&self) -> usize {
        self.d
    }

    fn c_star(&self) -> &UnitVector {
        &self.c_star
    }

    fn initial_region(&self) -> KnowledgeRegion {
        self.region.clone()
    }

    fn next_instance(&mut self, _t: usize, _history: &[Feedback]) -> Result<Instance> {
        let mut features = Vec::with_capacity(self.k);
        for _ in 0..self.k {
            let g: Vec<f64> = (0..self.d)
                .map(|_| StandardNormal.sample(&mut self.rng))
                .collect();
            let dir = normalized(&g).unwrap_or_else(|| vec![0.0; self.d]);
            let radius = 0.5 * self.rng.random::<f64>().powf(1.0 / self.d as f64);
            // Shrink slightly so rounding never breaks the diameter bound.
            features.push(scale(&dir, radius * (1.0 - 1e-12)));
        }
        Instance::new(features)
    }
}

/// Embeds a lower-dimensional environment by zero-padding every vector;
/// the learner starts from the full sphere.
pub struct Lifted<E> {
    inner: E,
    d: usize,
    c_star: UnitVector,
}

impl<E: Environment> Lifted<E> {
    pub fn new(inner: E, d: usize) -> Result<Self> {
        if d < inner.dim() {
            return Err(Error::UnsupportedDimension {
                expected: format!(">= {}", inner.dim()),
                got: d,
            });
        }
        let c_star = UnitVector::new(pad(inner.c_star().coords(), d))?;
        Ok(Self { inner, d, c_star })
    }
}

fn pad(v: &[f64], d: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(d, 0.0);
    out
}

impl<E: Environment> Environment for Lifted<E> {
    fn dim(&self) -> usize {
        self.d
    }

    fn c_star(&self) -> &UnitVector {
        &self.c_star
    }

    fn initial_region(&self) -> KnowledgeRegion {
        KnowledgeRegion::FullSphere { dim: self.d }
    }

    fn horizon(&self) -> Option<usize> {
        self.inner.horizon()
    }

    fn next_instance(&mut self, t: usize, history: &[Feedback]) -> Result<Instance> {
        let inst = self.inner.next_instance(t, history)?;
        Instance::new(inst.features().iter().map(|y| pad(y, self.d)).collect())
    }

    fn expert_hint(&self, t: usize) -> Option<usize> {
        self.inner.expert_hint(t)
    }
}

/// One period of a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub t: usize,
    pub features: Instance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert: Option<usize>,
}

/// Optional first line of a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub c_star: UnitVector,
}

#[derive(Debug, Clone)]
pub struct Replay {
    c_star: UnitVector,
    records: Vec<ReplayRecord>,
}

impl Replay {
    /// Reads a JSON Lines replay file. The hidden cost comes from a
    /// `{"c_star": [...]}` line, or from `c_star` when the file has none.
    pub fn load(path: &Path, c_star: Option<UnitVector>) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut header: Option<UnitVector> = None;
        let mut records = Vec::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(&line)
                .map_err(|e| Error::Io(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
            if value.get("c_star").is_some() && value.get("features").is_none() {
                header = Some(serde_json::from_value::<ReplayHeader>(value)?.c_star);
            } else {
                let rec: ReplayRecord = serde_json::from_value(value)
                    .map_err(|e| Error::Io(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
                records.push(rec);
            }
        }
        let c_star = header.or(c_star).ok_or_else(|| {
            Error::Config(format!(
                "{}: replay file carries no c_star line",
                path.display()
            ))
        })?;
        if records.is_empty() {
            return Err(Error::Config(format!("{}: no periods", path.display())));
        }
        if records.iter().any(|r| r.features.dim() != c_star.dim()) {
            return Err(Error::DimensionMismatch(
                "replay features and c_star".into(),
            ));
        }
        Ok(Self { c_star, records })
    }

    pub fn records(&self) -> &[ReplayRecord] {
        &self.records
    }
}

impl Environment for Replay {
    fn dim(&self) -> usize {
        self.c_star.dim()
    }

    fn c_star(&self) -> &UnitVector {
        &self.c_star
    }

    fn initial_region(&self) -> KnowledgeRegion {
        KnowledgeRegion::FullSphere { dim: self.dim() }
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.records.len())
    }

    fn next_instance(&mut self, t: usize, _history: &[Feedback]) -> Result<Instance> {
        self.records
            .get(t - 1)
            .map(|r| r.features.clone())
            .ok_or_else(|| Error::Config(format!("replay has no period {t}")))
    }

    fn expert_hint(&self, t: usize) -> Option<usize> {
        self.records.get(t - 1).and_then(|r| r.expert)
    }
}

/// Writes a replay file: header line, then one record per period.
pub fn write_replay<W: Write>(
    out: &mut W,
    c_star: &UnitVector,
    records: &[ReplayRecord],
) -> Result<()> {
    serde_json::to_writer(
        &mut *out,
        &ReplayHeader {
            c_star: c_star.clone(),
        },
    )?;
    writeln!(out)?;
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{forward_solve, TieBreak};
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn killer_constants() {
        let k = greedy_killer(FRAC_PI_4, 5, 3).unwrap();
        assert!((k.epsilon(1) - 0.1).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        assert!(
            (k.c_star().coords()[0] - s).abs() < 1e-15
                && (k.c_star().coords()[1] - s).abs() < 1e-15
        );
        assert!(matches!(
            greedy_killer(FRAC_PI_4, 5, 4),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn killer_generators_lie_on_their_facets() {
        let k = greedy_killer(0.7, 50, 3).unwrap();
        let eps = k.epsilon(7);
        let [h1, h2, h3] = k.normals(eps);
        let [g1, g2, g3] = k.generators(eps).unwrap();
        for (g, hs) in [(&g1, [&h1, &h3]), (&g2, [&h2, &h3]), (&g3, [&h1, &h2])] {
            for h in hs {
                assert!(dot(h, g.coords()).abs() < 1e-12);
            }
        }
        assert!(k.initial_region().contains(k.c_star().coords()));
    }

    #[test]
    fn offline_candidates_are_in_the_cap() {
        let cap = RevolutionCone::new(UnitVector::basis(3, 0), 0.4).unwrap();
        let env = offline_tight(cap).unwrap();
        for c in env.candidates() {
            assert!((crate::geometry::angle(c.coords(), &[1.0, 0.0, 0.0]) - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn random_pairs_is_deterministic_and_consistent() {
        let make = || {
            random_pairs(
                3,
                4,
                17,
                CStarMode::Uniform,
                KnowledgeRegion::FullSphere { dim: 3 },
            )
            .unwrap()
        };
        let (mut a, mut b) = (make(), make());
        assert_eq!(a.c_star(), b.c_star());
        for t in 1..50 {
            let x = a.next_instance(t, &[]).unwrap();
            assert_eq!(x, b.next_instance(t, &[]).unwrap());
            let j = forward_solve(a.c_star().coords(), &x, &TieBreak::FirstIndex);
            let best = x
                .features()
                .iter()
                .map(|y| dot(y, a.c_star().coords()))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(dot(x.feature(j), a.c_star().coords()), best);
        }
        let bnd = random_pairs(
            3,
            2,
            1,
            CStarMode::Boundary,
            KnowledgeRegion::FullSphere { dim: 3 },
        )
        .unwrap();
        assert_eq!(bnd.c_star().coords()[2], 0.0);
    }

    #[test]
    fn lifted_pads_with_zeros() {
        let k = greedy_killer(FRAC_PI_4, 10, 3).unwrap();
        let mut l = Lifted::new(k, 5).unwrap();
        assert_eq!(l.c_star().dim(), 5);
        let x = l.next_instance(1, &[]).unwrap();
        assert_eq!(x.dim(), 5);
        assert_eq!(x.feature(0)[3], 0.0);
    }

    #[test]
    fn replay_round_trip() {
        let dir = std::env::temp_dir().join(format!("conelearn-replay-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("r.jsonl");
        let c = UnitVector::basis(2, 0);
        let recs = vec![ReplayRecord {
            t: 1,
            features: Instance::new(vec![vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap(),
            expert: Some(0),
        }];
        let mut f = std::fs::File::create(&path).unwrap();
        write_replay(&mut f, &c, &recs).unwrap();
        drop(f);
        let r = Replay::load(&path, None).unwrap();
        assert_eq!(r.records(), &recs[..]);
        assert_eq!(r.c_star(), &c);
        std::fs::remove_dir_all(&dir).ok();
    }
}
