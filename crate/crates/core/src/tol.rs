//! Numerical tolerances shared by every module.
//!
//! All thresholds live in one [`Tolerances`] record. The process-wide
//! instance returned by [`tol`] is scaled by the `CONELEARN_TOL_SCALE`
//! environment variable (default 1). Tests reference the constants below
//! symbolically.

use std::sync::OnceLock;

/// Environment variable that multiplies every tolerance.
pub const TOL_SCALE_ENV: &str = "CONELEARN_TOL_SCALE";

/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 1000;
/// Maximum number of major iterations of the minimum-norm-point solver.
pub const MIN_NORM_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Unit-norm check on `UnitVector`.
    pub unit_norm: f64,
    /// Relative residual below which Gram-Schmidt declares rank deficiency.
    pub gram_schmidt_rank: f64,
    /// Pivot threshold, relative to the largest entry, for linear solves.
    pub pivot: f64,
    /// Slack in the Wolfe optimality certificate.
    pub wolfe: f64,
    /// Ties in the forward problem.
    pub forward_tie: f64,
    /// Optimality slack when checking the expert's action.
    pub expert_optimality: f64,
    /// Norm below which an action difference counts as zero.
    pub zero_difference: f64,
    /// Slack on halfspace constraints `v'c >= 0`.
    pub constraint: f64,
    /// Slack in ellipsoidal-cone membership.
    pub cone_membership: f64,
    /// Drift in `U'U - I` that triggers re-orthonormalization.
    pub orthonormal_drift: f64,
    /// Norm below which the off-axis part of a cut is treated as zero.
    pub degenerate_cut: f64,
    /// Slack on the cut-side precondition `delta'c_hat <= 0`.
    pub cut_side: f64,
    /// Slack on regret certificates and bound checks.
    pub certificate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unit_norm: 1e-9,
            gram_schmidt_rank: 1e-10,
            pivot: 1e-12,
            wolfe: 1e-9,
            forward_tie: 1e-12,
            expert_optimality: 1e-9,
            zero_difference: 1e-12,
            constraint: 1e-9,
            cone_membership: 1e-9,
            orthonormal_drift: 1e-10,
            degenerate_cut: 1e-12,
            cut_side: 1e-9,
            certificate: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn scaled(factor: f64) -> Self {
        let d = Self::default();
        Self {
            unit_norm: d.unit_norm * factor,
            gram_schmidt_rank: d.gram_schmidt_rank * factor,
            pivot: d.pivot * factor,
            wolfe: d.wolfe * factor,
            forward_tie: d.forward_tie * factor,
            expert_optimality: d.expert_optimality * factor,
            zero_difference: d.zero_difference * factor,
            constraint: d.constraint * factor,
            cone_membership: d.cone_membership * factor,
            orthonormal_drift: d.orthonormal_drift * factor,
            degenerate_cut: d.degenerate_cut * factor,
            cut_side: d.cut_side * factor,
            certificate: d.certificate * factor,
        }
    }
}

/// Scale factor read from the environment; invalid or non-positive values fall back to 1.
pub fn scale() -> f64 {
    static SCALE: OnceLock<f64> = OnceLock::new();
    *SCALE.get_or_init(|| {
        std::env::var(TOL_SCALE_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
            .unwrap_or(1.0)
    })
}

/// Process-wide tolerance record.
pub fn tol() -> &'static Tolerances {
    static TOL: OnceLock<Tolerances> = OnceLock::new();
    TOL.get_or_init(|| Tolerances::scaled(scale()))
}
