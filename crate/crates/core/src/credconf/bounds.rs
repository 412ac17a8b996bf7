//! Finite-sample recovery bounds and their conversion into credible levels
//! that make (enlarged) credible sets confidence sets.
//!
//! Notation used below, with `rho` the Hellinger affinity of `(p, q)`:
//!
//! - exact tail: `(n/2) rho^(n/2) exp(n rho^(n/2))`, an upper bound on the
//!   expected posterior mass outside the true assignment;
//! - almost tail: `(1/2) f^(a n) / (1 - f)` with `f = (e/a) rho^(n/2)`, the
//!   same for the k-metric ball of radius `ceil(a n)`; only defined for
//!   `f < 1`.
//!
//! Every clamped quantity has a `_raw` sibling that skips the clamp.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sbm::hellinger_affinity;

/// Upper limit of the critical graph size search.
pub const CRITICAL_N_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    /// Plain credible sets, singleton concentration.
    Exact,
    /// Credible sets enlarged by `ceil(a n)`.
    Almost { a: f64 },
}

impl Mode {
    pub fn almost(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 0.5) {
            return Err(invalid(format!("error fraction a = {a} must lie in (0, 1/2)")));
        }
        Ok(Mode::Almost { a })
    }

    pub fn fraction(&self) -> Option<f64> {
        match self {
            Mode::Exact => None,
            Mode::Almost { a } => Some(*a),
        }
    }

    /// Enlargement radius at graph size `n`: 0, or `ceil(a n)` capped at `floor(n/2)`.
    pub fn radius(&self, n: usize) -> usize {
        match self {
            Mode::Exact => 0,
            // a*n can land a hair above an integer (0.1 * 30)
            Mode::Almost { a } => (((a * n as f64) - 1e-9).ceil().max(0.0) as usize).min(n / 2),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Almost { .. } => "almost",
        }
    }

    fn validate(&self) -> Result<()> {
        if let Mode::Almost { a } = self {
            Mode::almost(*a)?;
        }
        Ok(())
    }
}

/// How the critical graph size is read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// The displayed inequality: `2 * tail < alpha` (exact) or
    /// `(2 / alpha) * tail < alpha` (almost).
    Literal,
    /// First `n` whose required credible level drops below 1/2.
    HalfLevel,
}

/// Affinity for the bound formulas, which need `p, q` strictly inside (0, 1).
pub fn interior_affinity(p: f64, q: f64) -> Result<f64> {
    let inside = |v: f64| v > 0.0 && v < 1.0;
    if !(inside(p) && inside(q)) {
        return Err(invalid(format!(
            "recovery bounds use the Hellinger affinity of Bernoulli laws with p, q in (0, 1); got p = {p}, q = {q}"
        )));
    }
    hellinger_affinity(p, q)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(invalid("graph size must be positive"))
    } else {
        Ok(())
    }
}

/// `(n/2) rho^(n/2) exp(n rho^(n/2))`.
pub fn exact_tail(n: usize, rho: f64) -> f64 {
    let nf = n as f64;
    let s = rho.powf(nf / 2.0);
    0.5 * nf * s * (nf * s).exp()
}

/// `f = (e/a) rho^(n/2)`.
pub fn almost_ratio(n: usize, rho: f64, a: f64) -> f64 {
    E / a * rho.powf(n as f64 / 2.0)
}

/// `(1/2) f^(a n) / (1 - f)`, or a divergence error when `f >= 1`.
pub fn almost_tail(n: usize, rho: f64, a: f64) -> Result<f64> {
    let f = almost_ratio(n, rho, a);
    if f >= 1.0 {
        return Err(Error::Divergent(format!(
            "(e/a) rho^(n/2) = {f:.6} >= 1 at n = {n}, a = {a}; the geometric series does not converge"
        )));
    }
    Ok(0.5 * f.powf(a * n as f64) / (1.0 - f))
}

fn tail(n: usize, rho: f64, mode: Mode) -> Result<f64> {
    match mode {
        Mode::Exact => Ok(exact_tail(n, rho)),
        Mode::Almost { a } => almost_tail(n, rho, a),
    }
}

/// Lower bound on the expected posterior mass of the true assignment.
pub fn recovery_bound_exact(n: usize, p: f64, q: f64) -> Result<f64> {
    check_n(n)?;
    Ok((1.0 - exact_tail(n, interior_affinity(p, q)?)).max(0.0))
}

/// Lower bound on the expected posterior mass of the k-metric ball of
/// radius `ceil(a n)` around the true assignment.
pub fn recovery_bound_almost(n: usize, p: f64, q: f64, a: f64) -> Result<f64> {
    check_n(n)?;
    Mode::almost(a)?;
    Ok((1.0 - almost_tail(n, interior_affinity(p, q)?, a)?).max(0.0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// Unclamped required credible level: `tail / alpha`, `+inf` when the
/// almost-mode series diverges.
pub fn required_level_raw(n: usize, p: f64, q: f64, alpha: f64, mode: Mode) -> Result<f64> {
    check_n(n)?;
    check_alpha(alpha)?;
    mode.validate()?;
    let rho = interior_affinity(p, q)?;
    match tail(n, rho, mode) {
        Ok(t) => Ok(t / alpha),
        Err(Error::Divergent(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Credible level at which a credible set (enlarged per `mode`) is a
/// confidence set of level `1 - alpha`, capped at 1.
pub fn required_level(n: usize, p: f64, q: f64, alpha: f64, mode: Mode) -> Result<f64> {
    Ok(required_level_raw(n, p, q, alpha, mode)?.min(1.0))
}

/// Exact-mode required level without the `exp(n rho^(n/2))` factor, for
/// comparison with rounded hand calculations that drop it.
pub fn required_level_without_exp_factor(n: usize, p: f64, q: f64, alpha: f64) -> Result<f64> {
    check_n(n)?;
    check_alpha(alpha)?;
    let rho = interior_affinity(p, q)?;
    let nf = n as f64;
    Ok((0.5 * nf * rho.powf(nf / 2.0) / alpha).min(1.0))
}

/// Unclamped confidence floor `1 - tail / (1 - gamma)`.
pub fn confidence_floor_raw(n: usize, p: f64, q: f64, gamma: f64, mode: Mode) -> Result<f64> {
    check_n(n)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid(format!("gamma = {gamma} must lie in [0, 1)")));
    }
    mode.validate()?;
    let rho = interior_affinity(p, q)?;
    Ok(1.0 - tail(n, rho, mode)? / (1.0 - gamma))
}

/// Guaranteed coverage of a level-`(1 - gamma)` credible set (enlarged per
/// `mode`), clamped to [0, 1].
pub fn confidence_floor(n: usize, p: f64, q: f64, gamma: f64, mode: Mode) -> Result<f64> {
    Ok(confidence_floor_raw(n, p, q, gamma, mode)?.clamp(0.0, 1.0))
}

/// Smallest `n >= 2` satisfying the chosen criterion, or `None` when no
/// `n <= CRITICAL_N_CAP` does.
pub fn critical_n(p: f64, q: f64, alpha: f64, mode: Mode, criterion: Criterion) -> Result<Option<usize>> {
    check_alpha(alpha)?;
    mode.validate()?;
    let rho = interior_affinity(p, q)?;
    if rho >= 1.0 {
        return Ok(None);
    }
    let hit = |n: usize| -> bool {
        match (mode, criterion) {
            // n rho^(n/2) exp(n rho^(n/2)) < alpha; half-level is the same inequality
            (Mode::Exact, _) => 2.0 * exact_tail(n, rho) < alpha,
            (Mode::Almost { a }, criterion) => match almost_tail(n, rho, a) {
                Ok(t) => match criterion {
                    Criterion::Literal => 2.0 * t / alpha < alpha,
                    Criterion::HalfLevel => t / alpha < 0.5,
                },
                Err(_) => false,
            },
        }
    };
    Ok((2..=CRITICAL_N_CAP).find(|&n| hit(n)))
}

/// Chosen construction for given `(n, p, q, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    #[serde(flatten)]
    pub mode: Mode,
    /// Coverage guaranteed for credible sets at `required_level`.
    pub confidence_floor: f64,
    pub required_level: f64,
    pub enlargement_radius: usize,
    /// Literal critical graph size for this mode.
    pub critical_n: Option<usize>,
    /// Communities are not identifiable (`p == q`); every bound is vacuous.
    pub degenerate: bool,
}

impl ConfidenceReport {
    pub fn for_mode(n: usize, p: f64, q: f64, alpha: f64, mode: Mode) -> Result<Self> {
        let required_level = required_level(n, p, q, alpha, mode)?;
        let rho = interior_affinity(p, q)?;
        let confidence_floor = match tail(n, rho, mode) {
            Ok(t) if required_level > 0.0 => (1.0 - t / required_level).clamp(0.0, 1.0),
            Ok(_) => 1.0,
            Err(_) => 0.0,
        };
        Ok(ConfidenceReport {
            n,
            p,
            q,
            alpha,
            mode,
            confidence_floor,
            required_level,
            enlargement_radius: mode.radius(n),
            critical_n: critical_n(p, q, alpha, mode, Criterion::Literal)?,
            degenerate: p == q,
        })
    }
}

/// Picks whichever construction needs the smallest credible level: plain
/// credible sets or `ceil(a n)`-enlarged ones for some `a` in the grid.
/// Ties go to exact mode, then to the smaller `a`. Divergent fractions are skipped.
pub fn plan_strategy(n: usize, p: f64, q: f64, alpha: f64, a_grid: &[f64]) -> Result<ConfidenceReport> {
    if a_grid.is_empty() {
        return Err(invalid("fraction grid is empty"));
    }
    let mut grid = a_grid.to_vec();
    for &a in &grid {
        Mode::almost(a)?;
    }
    grid.sort_by(f64::total_cmp);
    let rho = interior_affinity(p, q)?;

    let mut best = (Mode::Exact, required_level(n, p, q, alpha, Mode::Exact)?);
    for a in grid {
        if almost_ratio(n, rho, a) >= 1.0 {
            continue;
        }
        let mode = Mode::Almost { a };
        let level = required_level(n, p, q, alpha, mode)?;
        if level < best.1 {
            best = (mode, level);
        }
    }
    ConfidenceReport::for_mode(n, p, q, alpha, best.0)
}
