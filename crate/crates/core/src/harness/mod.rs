//! Simulation driver: policy against environment, per-period records,
//! inline invariant checks, theorem bounds and parameter sweeps.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::adversary::{
    greedy_killer, offline_tight, random_pairs, CStarMode, Environment, Lifted, Replay,
    ReplayRecord,
};
use crate::error::{Error, Result};
use crate::forward::{effective_difference, forward_solve, regret, Feedback, Instance, TieBreak};
use crate::geometry::{circumcenter, KnowledgeRegion, RevolutionCone, UnitVector};
use crate::numerics::dot;
use crate::policies::{
    EllipsoidalCones, Greedy, PeriodKind, Policy, PolicyParams, PolicySnapshot, ProjectedCones,
    StepOutcome,
};
use crate::tol::tol;

pub mod io;
pub mod verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Greedy,
    Ellipsoidal,
    Projected,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Self::Greedy),
            "ellipsoidal" => Ok(Self::Ellipsoidal),
            "projected" => Ok(Self::Projected),
            other => Err(Error::Config(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Killer,
    Offline,
    Random,
    Replay(PathBuf),
}

impl std::str::FromStr for EnvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "killer" => Ok(Self::Killer),
            "offline" => Ok(Self::Offline),
            "random" => Ok(Self::Random),
            other => match other.strip_prefix("replay:") {
                Some(path) if !path.is_empty() => Ok(Self::Replay(PathBuf::from(path))),
                _ => Err(Error::Config(format!("unknown environment '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TieBreakMode {
    First,
    #[default]
    Adversarial,
}

impl std::str::FromStr for TieBreakMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Self::First),
            "adversarial" => Ok(Self::Adversarial),
            other => Err(Error::Config(format!("unknown tie-break '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub policy: PolicyKind,
    pub env: EnvKind,
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Killer: its angle; offline: the cap aperture.
    pub alpha: f64,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub seed: u64,
    pub tiebreak: TieBreakMode,
    /// Random environment: actions per period.
    pub k_actions: usize,
    pub c_star_mode: CStarMode,
    /// Random environment: start from the cap of this aperture around `e_1`
    /// instead of the full sphere.
    pub start_cap: Option<f64>,
    pub verify: bool,
    pub assert_bounds: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Projected,
            env: EnvKind::Random,
            d: 3,
            horizon: 1000,
            alpha: FRAC_PI_4,
            epsilon: None,
            eta: None,
            seed: 0,
            tiebreak: TieBreakMode::Adversarial,
            k_actions: 2,
            c_star_mode: CStarMode::Uniform,
            start_cap: None,
            verify: false,
            assert_bounds: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(Error::Config(format!(
                    "epsilon override must be positive, got {e}"
                )));
            }
        }
        if let Some(e) = self.eta {
            if !(e > 0.0) {
                return Err(Error::Config(format!(
                    "eta override must be positive, got {e}"
                )));
            }
        }
        self.params()?;
        Ok(())
    }

    pub fn params(&self) -> Result<PolicyParams> {
        PolicyParams::with_overrides(self.d, self.horizon, self.epsilon, self.eta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub t: usize,
    pub kind: PeriodKind,
    pub chosen: usize,
    pub expert: usize,
    pub regret: f64,
    pub cum_regret: f64,
    pub lambda_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub p: Option<usize>,
    pub cone_updates_so_far: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTotals {
    pub cum_regret: f64,
    pub cone_updates: usize,
    /// Cone updates by subspace dimension (index = dimension); for the
    /// pointed-case policy everything is counted at `d`.
    pub cone_updates_by_dim: Vec<usize>,
    /// Per-dimension cone-update bounds, when a cone existed at that dimension.
    pub cone_update_bounds: Vec<Option<f64>>,
    pub subspace_updates: usize,
    pub bound_thm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub c_star: UnitVector,
    pub records: Vec<PeriodRecord>,
    pub totals: RunTotals,
}

impl RunResult {
    /// Totals recomputed from the records.
    pub fn check_totals(&self) -> bool {
        let cum: f64 = self.records.iter().map(|r| r.regret).sum();
        let cones = self
            .records
            .iter()
            .filter(|r| r.kind == PeriodKind::ConeUpdate)
            .count();
        let subs = self
            .records
            .iter()
            .filter(|r| r.kind == PeriodKind::SubspaceUpdate)
            .count();
        (cum - self.totals.cum_regret).abs() <= 1e-9 * cum.abs().max(1.0)
            && cones == self.totals.cone_updates
            && subs == self.totals.subspace_updates
    }
}

/// Cumulative-regret bound of the pointed-case algorithm started from a
/// region of uncertainty angle `alpha0`.
pub fn ellipsoidal_bound(d: usize, horizon: usize, epsilon: f64, alpha0: f64) -> f64 {
    let dm1 = (d - 1) as f64;
    2.0 * dm1 * dm1 * (10.0 * d as f64 * alpha0.tan() / epsilon).ln() + horizon as f64 * epsilon
}

/// Cumulative-regret bound of the general-case algorithm.
pub fn projected_bound(d: usize, horizon: usize) -> f64 {
    let d = d as f64;
    2.0 + 2.0 * d
        + 20.0 * d.powi(3) * 5f64.ln()
        + 30.0 * d.powi(3) * d.ln()
        + 20.0 * d.powi(4) * (2.0 * horizon as f64).ln()
}

/// Invariants checked after every period when verification is on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySettings {
    /// Regret allowed in a low-regret period (before the certificate slack).
    pub low_regret_budget: f64,
    /// Smallest admissible eigenvalue of `W`, if checked.
    pub eigen_floor: Option<f64>,
    pub max_subspace_updates: usize,
    /// Slack on superset containment of the hidden cost.
    pub containment_slack: f64,
}

/// Policy and environment stepping together.
pub struct Simulation<P, E> {
    pub policy: P,
    pub env: E,
    tiebreak: TieBreakMode,
    verify: Option<VerifySettings>,
    t: usize,
    cum_regret: f64,
    history: Vec<Feedback>,
    keep_history: bool,
}

impl<P: Policy, E: Environment> Simulation<P, E> {
    pub fn new(policy: P, env: E, tiebreak: TieBreakMode, verify: Option<VerifySettings>) -> Self {
        Self {
            policy,
            env,
            tiebreak,
            verify,
            t: 0,
            cum_regret: 0.0,
            history: Vec::new(),
            keep_history: false,
        }
    }

    /// Keep every feedback (needed only by closed-loop environments and instance dumps).
    pub fn keep_history(mut self, keep: bool) -> Self {
        self.keep_history = keep;
        self
    }

    pub fn history(&self) -> &[Feedback] {
        &self.history
    }

    pub fn step(&mut self) -> Result<PeriodRecord> {
        self.t += 1;
        let t = self.t;
        let instance = self.env.next_instance(t, &self.history)?;
        let c_star = self.env.c_star().clone();
        let tiebreak = match self.tiebreak {
            TieBreakMode::First => TieBreak::FirstIndex,
            TieBreakMode::Adversarial => TieBreak::AdversarialAgainst(c_star.clone()),
        };
        let proxy = self.policy.proxy_cost()?;
        let chosen = self.policy.act(&instance, &tiebreak)?;
        let expert = self
            .env
            .expert_hint(t)
            .unwrap_or_else(|| forward_solve(c_star.coords(), &instance, &TieBreak::FirstIndex));
        let r = regret(&instance, chosen, expert, &c_star)?;
        let feedback = Feedback::new(instance, expert, chosen)?;
        if self.verify.is_some() {
            check_feedback(t, &feedback, &proxy, &c_star)?;
        }
        let StepOutcome { kind, diagnostics } = self.policy.observe(&feedback)?;
        self.cum_regret += r;
        let snap = self.policy.snapshot();
        if let Some(v) = &self.verify {
            check_period(t, kind, r, &snap, v, &self.policy, &c_star)?;
        }
        if self.keep_history {
            self.history.push(feedback);
        }
        Ok(PeriodRecord {
            t,
            kind,
            chosen,
            expert,
            regret: r,
            cum_regret: self.cum_regret,
            lambda_max: snap.lambda_max,
            lambda_min: snap.lambda_min,
            p: snap.p,
            cone_updates_so_far: snap.cone_updates,
            quadratic_form: diagnostics.quadratic_form,
            residual: diagnostics.residual,
        })
    }
}

fn check_feedback(t: usize, feedback: &Feedback, proxy: &[f64], c_star: &UnitVector) -> Result<()> {
    let delta = effective_difference(feedback);
    let slack = tol().certificate;
    let on_proxy = dot(&delta, proxy);
    let on_truth = dot(&delta, c_star.coords());
    if on_proxy > slack || on_truth < -slack {
        return Err(Error::Verification(format!(
            "period {t}: infeasible feedback (delta'c_pi = {on_proxy:e}, delta'c_star = {on_truth:e})"
        )));
    }
    Ok(())
}

fn check_period<P: Policy>(
    t: usize,
    kind: PeriodKind,
    regret: f64,
    snap: &PolicySnapshot,
    v: &VerifySettings,
    policy: &P,
    c_star: &UnitVector,
) -> Result<()> {
    let slack = tol().certificate;
    if regret < -slack {
        return Err(Error::Verification(format!(
            "period {t}: negative regret {regret}"
        )));
    }
    if kind == PeriodKind::LowRegret && regret > v.low_regret_budget + slack {
        return Err(Error::Verification(format!(
            "period {t}: low-regret period with regret {regret} above {}",
            v.low_regret_budget
        )));
    }
    if let (Some(floor), Some(lmin)) = (v.eigen_floor, snap.lambda_min) {
        if lmin < floor - 1e-12 {
            return Err(Error::Verification(format!(
                "period {t}: smallest eigenvalue {lmin:e} below the floor {floor:e}"
            )));
        }
    }
    if snap.subspace_updates > v.max_subspace_updates {
        return Err(Error::Verification(format!(
            "period {t}: {} subspace updates exceed {}",
            snap.subspace_updates, v.max_subspace_updates
        )));
    }
    if policy.superset_contains(c_star.coords(), v.containment_slack) == Some(false) {
        return Err(Error::Verification(format!(
            "period {t}: knowledge superset lost the hidden cost"
        )));
    }
    Ok(())
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn proxy_cost(&self) -> Result<Vec<f64>> {
        (**self).proxy_cost()
    }
    fn act(&self, instance: &Instance, tiebreak: &TieBreak) -> Result<usize> {
        (**self).act(instance, tiebreak)
    }
    fn observe(&mut self, feedback: &Feedback) -> Result<StepOutcome> {
        (**self).observe(feedback)
    }
    fn snapshot(&self) -> PolicySnapshot {
        (**self).snapshot()
    }
    fn superset_contains(&self, c: &[f64], slack: f64) -> Option<bool> {
        (**self).superset_contains(c, slack)
    }
    fn cone_update_bounds(&self) -> Vec<Option<f64>> {
        (**self).cone_update_bounds()
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn c_star(&self) -> &UnitVector {
        (**self).c_star()
    }
    fn initial_region(&self) -> KnowledgeRegion {
        (**self).initial_region()
    }
    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }
    fn next_instance(&mut self, t: usize, history: &[Feedback]) -> Result<Instance> {
        (**self).next_instance(t, history)
    }
    fn expert_hint(&self, t: usize) -> Option<usize> {
        (**self).expert_hint(t)
    }
}

/// Environments described by `config`. The offline construction yields one
/// environment per candidate hidden cost; every other kind yields one.
pub fn build_environments(config: &RunConfig) -> Result<Vec<Box<dyn Environment>>> {
    let d = config.d;
    match &config.env {
        EnvKind::Killer => {
            let killer = greedy_killer(config.alpha, config.horizon, 3)?;
            if d < 3 {
                return Err(Error::UnsupportedDimension {
                    expected: ">= 3".into(),
                    got: d,
                });
            }
            // The general-case learner always starts from the full sphere.
            if d == 3 && config.policy != PolicyKind::Projected {
                Ok(vec![Box::new(killer)])
            } else {
                Ok(vec![Box::new(Lifted::new(killer, d)?)])
            }
        }
        EnvKind::Offline => {
            let cap = RevolutionCone::new(UnitVector::basis(d, 0), config.alpha).map_err(|_| {
                Error::Config(format!(
                    "offline aperture must lie in [0, pi/2), got {}",
                    config.alpha
                ))
            })?;
            let env = offline_tight(cap)?;
            Ok(vec![
                Box::new(env.clone().with_candidate(0)),
                Box::new(env.with_candidate(1)),
            ])
        }
        EnvKind::Random => {
            let region = match config.start_cap {
                Some(a) => KnowledgeRegion::Cap(
                    RevolutionCone::new(UnitVector::basis(d, 0), a).map_err(|_| {
                        Error::Config(format!("start cap aperture must lie in [0, pi/2), got {a}"))
                    })?,
                ),
                None => KnowledgeRegion::FullSphere { dim: d },
            };
            Ok(vec![Box::new(random_pairs(
                d,
                config.k_actions,
                config.seed,
                config.c_star_mode,
                region,
            )?)])
        }
        EnvKind::Replay(path) => {
            let env = Replay::load(path, None)?;
            if env.dim() != d {
                return Err(Error::Config(format!(
                    "replay file has dimension {}, config says {d}",
                    env.dim()
                )));
            }
            Ok(vec![Box::new(env)])
        }
    }
}

pub fn build_policy(config: &RunConfig, initial: &KnowledgeRegion) -> Result<Box<dyn Policy>> {
    let params = config.params()?;
    Ok(match config.policy {
        PolicyKind::Greedy => Box::new(Greedy::new(initial.clone())?),
        PolicyKind::Ellipsoidal => Box::new(EllipsoidalCones::new(initial, params)?),
        PolicyKind::Projected => Box::new(ProjectedCones::new(config.d, params)?),
    })
}

fn verify_settings(config: &RunConfig, params: &PolicyParams) -> VerifySettings {
    let d = config.d as f64;
    match config.policy {
        PolicyKind::Ellipsoidal => VerifySettings {
            low_regret_budget: params.epsilon,
            eigen_floor: Some((params.epsilon / (10.0 * d)).powi(2)),
            max_subspace_updates: config.d,
            containment_slack: 1e-7,
        },
        PolicyKind::Projected => VerifySettings {
            low_regret_budget: params.epsilon + params.eta,
            eigen_floor: None,
            max_subspace_updates: config.d,
            containment_slack: 1e-7,
        },
        PolicyKind::Greedy => VerifySettings {
            low_regret_budget: f64::INFINITY,
            eigen_floor: None,
            max_subspace_updates: usize::MAX,
            containment_slack: 1e-7,
        },
    }
}

/// Runs one simulation per environment candidate and keeps the worst one.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    run_inner(config, false).map(|(r, _)| r)
}

/// Like [`run`], also returning the periods played, in replay form.
pub fn run_with_instances(config: &RunConfig) -> Result<(RunResult, Vec<ReplayRecord>)> {
    run_inner(config, true)
}

fn run_inner(config: &RunConfig, keep: bool) -> Result<(RunResult, Vec<ReplayRecord>)> {
    config.validate()?;
    let mut best: Option<(RunResult, Vec<ReplayRecord>)> = None;
    for env in build_environments(config)? {
        let out = run_one(config, env, keep)?;
        if best
            .as_ref()
            .is_none_or(|b| out.0.totals.cum_regret > b.0.totals.cum_regret)
        {
            best = Some(out);
        }
    }
    best.ok_or_else(|| Error::InternalInvariant("no environment built".into()))
}

fn run_one(
    config: &RunConfig,
    env: Box<dyn Environment>,
    keep: bool,
) -> Result<(RunResult, Vec<ReplayRecord>)> {
    if env.dim() != config.d {
        return Err(Error::Config(format!(
            "environment dimension {} differs from d = {}",
            env.dim(),
            config.d
        )));
    }
    let params = config.params()?;
    let initial = env.initial_region();
    if !initial.contains(env.c_star().coords()) {
        return Err(Error::InternalInvariant(
            "hidden cost outside the initial region".into(),
        ));
    }
    let alpha0 = circumcenter(&initial).map(|(_, a)| a).ok();
    let horizon = env
        .horizon()
        .map_or(config.horizon, |h| h.min(config.horizon));
    let policy = build_policy(config, &initial)?;
    let verify = config.verify.then(|| verify_settings(config, &params));
    let c_star = env.c_star().clone();
    let mut sim = Simulation::new(policy, env, config.tiebreak, verify).keep_history(keep);
    let mut records = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        records.push(sim.step()?);
    }
    let played: Vec<ReplayRecord> = sim
        .history()
        .iter()
        .enumerate()
        .map(|(i, fb)| ReplayRecord {
            t: i + 1,
            features: fb.instance.clone(),
            expert: Some(fb.expert_index),
        })
        .collect();

    let cum_regret = records.last().map_or(0.0, |r| r.cum_regret);
    let mut cone_updates_by_dim = vec![0usize; config.d + 1];
    for r in records.iter().filter(|r| r.kind == PeriodKind::ConeUpdate) {
        cone_updates_by_dim[r.p.unwrap_or(config.d)] += 1;
    }
    let mut cone_update_bounds = sim.policy.cone_update_bounds();
    cone_update_bounds.resize(config.d + 1, None);
    let subspace_updates = records
        .iter()
        .filter(|r| r.kind == PeriodKind::SubspaceUpdate)
        .count();
    let bound_thm = match config.policy {
        PolicyKind::Ellipsoidal => {
            alpha0.map(|a| ellipsoidal_bound(config.d, horizon, params.epsilon, a))
        }
        PolicyKind::Projected => Some(projected_bound(config.d, horizon)),
        PolicyKind::Greedy => None,
    };
    let result = RunResult {
        config: config.clone(),
        c_star,
        totals: RunTotals {
            cum_regret,
            cone_updates: cone_updates_by_dim.iter().sum(),
            cone_updates_by_dim,
            cone_update_bounds,
            subspace_updates,
            bound_thm,
        },
        records,
    };
    if config.verify {
        for (p, (&n, b)) in result
            .totals
            .cone_updates_by_dim
            .iter()
            .zip(&result.totals.cone_update_bounds)
            .enumerate()
        {
            if let Some(b) = b {
                if n as f64 > *b {
                    return Err(Error::Verification(format!(
                        "{n} cone updates at dimension {p} exceed the bound {b}"
                    )));
                }
            }
        }
    }
    if config.assert_bounds {
        if let Some(b) = result.totals.bound_thm {
            if result.totals.cum_regret > b + tol().certificate {
                return Err(Error::Verification(format!(
                    "cumulative regret {} exceeds the bound {b}",
                    result.totals.cum_regret
                )));
            }
        }
    }
    Ok((result, played))
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub cum_regret: f64,
    pub bound_thm: Option<f64>,
    #[serde(rename = "I_T")]
    pub cone_updates: usize,
    pub subspace_updates: usize,
}

/// Runs `template` once per horizon, in parallel; rows come back in input order.
pub fn sweep(template: &RunConfig, horizons: &[usize]) -> Result<Vec<SweepRow>> {
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "sweep horizons must be strictly increasing".into(),
        ));
    }
    let results: Vec<Result<SweepRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = horizons
            .iter()
            .map(|&h| {
                let mut cfg = template.clone();
                cfg.horizon = h;
                scope.spawn(move || {
                    run(&cfg).map(|r| SweepRow {
                        horizon: h,
                        cum_regret: r.totals.cum_regret,
                        bound_thm: r.totals.bound_thm,
                        cone_updates: r.totals.cone_updates,
                        subspace_updates: r.totals.subspace_updates,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(Error::InternalInvariant("sweep worker panicked".into()))
                })
            })
            .collect()
    });
    results.into_iter().collect()
}
