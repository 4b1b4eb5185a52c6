//! Welfare-optimal pricing and intervention rules for each monitoring
//! regime, plus the exhaustive symmetric search over affine rules.

use std::fmt;

use rayon::prelude::*;

use crate::equilibrium::{extreme_everybody_action, in_interior_set, noisy_intervention_response};
use crate::error::{Error, Result};
use crate::model::{
    check_epsilon, check_len, check_theta, check_thetas, optimal_profile, InterventionRule,
    PricingRule, Slope, User,
};
use crate::noise::piecewise_intervention;
use crate::root::{bisect, RootRecord};

/// Largest residual accepted for any root a design relies on.
pub const ROOT_RESIDUAL: f64 = 1e-10;

/// Which piece of a piecewise design formula produced a user's entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Target below the noise half-width; solved from a low-branch root or
    /// closed form.
    Low,
    /// The noise does not bind; same value as with perfect monitoring.
    Middle,
    /// Target above `1 - eps`.
    High,
    /// Price pinned so that the user plays exactly `eps`.
    Epsilon,
    /// Price pinned at the edge of the interior-optimum set.
    SetBoundary,
    /// Only one user: no contention to regulate.
    SoleUser,
    /// Perfect-monitoring design, which has a single formula.
    Perfect,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Low => "low",
            Branch::Middle => "middle",
            Branch::High => "high",
            Branch::Epsilon => "eps",
            Branch::SetBoundary => "p5",
            Branch::SoleUser => "sole",
            Branch::Perfect => "perfect",
        })
    }
}

/// A designed rule with the per-user branch that fired and any root solved
/// along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult<R> {
    pub rule: R,
    pub branches: Vec<Branch>,
    pub roots: Vec<Option<RootRecord>>,
}

fn record<F: Fn(f64) -> f64>(name: &'static str, f: F, lo: f64, hi: f64) -> Result<RootRecord> {
    let (value, residual) = bisect(&f, lo, hi)?.best();
    finish_record(name, value, residual, (lo, hi))
}

fn finish_record(
    name: &'static str,
    value: f64,
    residual: f64,
    bracket: (f64, f64),
) -> Result<RootRecord> {
    let rec = RootRecord {
        name,
        value,
        bracket,
        residual,
    };
    if residual > ROOT_RESIDUAL || !rec.strictly_inside() {
        return Err(Error::DesignInfeasible(format!(
            "{name} = {value} (residual {residual}) not a clean root inside ({lo}, {hi})",
            lo = bracket.0,
            hi = bracket.1
        )));
    }
    Ok(rec)
}

fn check_users(thetas: &[f64], epsilons: &[f64]) -> Result<f64> {
    check_thetas(thetas)?;
    check_len(thetas.len(), epsilons.len())?;
    epsilons.iter().try_for_each(|&e| check_epsilon(e))?;
    Ok(thetas.iter().sum())
}

/// Optimal linear prices under perfect monitoring: everyone pays the total
/// valuation per unit of transmission probability.
pub fn price_perfect(thetas: &[f64]) -> Result<PricingRule> {
    check_thetas(thetas)?;
    let total: f64 = thetas.iter().sum();
    PricingRule::new(vec![total; thetas.len()])
}

/// Optimal prices when only the designer knows about the noise (users
/// respond with `theta / c` as if billed on their true action).
pub fn price_designer_aware(thetas: &[f64], epsilons: &[f64]) -> Result<DesignResult<PricingRule>> {
    let total = check_users(thetas, epsilons)?;
    let mut prices = Vec::with_capacity(thetas.len());
    let mut branches = Vec::with_capacity(thetas.len());
    let mut roots = Vec::with_capacity(thetas.len());
    for (&theta, &eps) in thetas.iter().zip(epsilons) {
        let share = theta / total;
        let (price, branch, root) = if thetas.len() == 1 {
            (theta, Branch::SoleUser, None)
        } else if share < eps {
            let cubic = |p: f64| {
                theta * p.powi(3) - (theta + 4.0 * eps * total) * p * p
                    + (4.0 * eps * theta - eps * eps * theta) * p
                    + eps * eps * theta
            };
            let rec = record("p1", cubic, 0.0, eps)?;
            (theta / rec.value, Branch::Low, Some(rec))
        } else if share <= 1.0 - eps {
            (total, Branch::Middle, None)
        } else {
            let q = 1.0 - eps;
            let cubic = |p: f64| {
                -theta * p.powi(3)
                    + (theta - 4.0 * eps * total) * p * p
                    + (4.0 * eps * theta + q * q * theta) * p
                    - q * q * theta
            };
            let rec = record("p2", cubic, q, 1.0)?;
            (theta / rec.value, Branch::High, Some(rec))
        };
        prices.push(price);
        branches.push(branch);
        roots.push(root);
    }
    Ok(DesignResult {
        rule: PricingRule::new(prices)?,
        branches,
        roots,
    })
}

/// Target the welfare-optimal price aims for in the low branch of the
/// everybody-aware design: positive root of
/// `2 S p^2 - theta (2 - eps) p - theta eps = 0`.
pub fn everybody_low_target(theta: f64, total: f64, eps: f64) -> f64 {
    let half_b = theta * (2.0 - eps) / (2.0 * total);
    half_b / 2.0 + 0.5 * (half_b * half_b + 4.0 * theta * eps / (2.0 * total)).sqrt()
}

/// Upper end of the set of targets `x in [1/2, 1 - eps]` with
/// `x ln x - x >= eps/4 - 1`.
pub fn c_set_max(eps: f64) -> Result<f64> {
    Ok(c_set_max_record(eps)?.value)
}

pub(crate) fn c_set_max_record(eps: f64) -> Result<RootRecord> {
    check_epsilon(eps)?;
    let level = eps / 4.0 - 1.0;
    let f = |x: f64| x * x.ln() - x - level;
    let (lo, hi) = (0.5, 1.0 - eps);
    if f(lo) < 0.0 {
        return Err(Error::DesignInfeasible(format!(
            "interior set is empty for eps = {eps}"
        )));
    }
    let run = bisect(f, lo, hi)?;
    // The lower end keeps f >= 0, so the boundary itself is a set member.
    finish_record("p5", run.lower, run.f_lower.abs(), (lo, hi))
}

/// Optimal prices when everybody knows about the noise.
pub fn price_everybody_aware(
    thetas: &[f64],
    epsilons: &[f64],
) -> Result<DesignResult<PricingRule>> {
    let total = check_users(thetas, epsilons)?;
    let mut prices = Vec::with_capacity(thetas.len());
    let mut branches = Vec::with_capacity(thetas.len());
    let mut roots = Vec::with_capacity(thetas.len());
    for (&theta, &eps) in thetas.iter().zip(epsilons) {
        let share = theta / total;
        let low = everybody_low_target(theta, total, eps);
        let (price, branch, root) = if thetas.len() == 1 {
            (0.0, Branch::SoleUser, None)
        } else if low < eps {
            (2.0 * eps * theta / (low * (low + eps)), Branch::Low, None)
        } else if (eps..=0.5).contains(&share) || in_interior_set(share, eps) {
            (total, Branch::Middle, None)
        } else if share <= eps {
            (theta / eps, Branch::Epsilon, None)
        } else {
            let rec = c_set_max_record(eps)?;
            (theta / rec.value, Branch::SetBoundary, Some(rec))
        };
        prices.push(price);
        branches.push(branch);
        roots.push(root);
    }
    Ok(DesignResult {
        rule: PricingRule::new(prices)?,
        branches,
        roots,
    })
}

fn sole_user_error() -> Error {
    Error::DesignInfeasible(
        "a sole user has no contention for an intervention rule to regulate".into(),
    )
}

/// Optimal affine intervention under perfect monitoring: target the
/// welfare optimum with the minimal sustaining slope.
pub fn intervene_perfect(thetas: &[f64]) -> Result<InterventionRule> {
    if thetas.len() == 1 {
        return Err(sole_user_error());
    }
    InterventionRule::minimal_slope(optimal_profile(thetas)?.into_inner())
}

/// Optimal minimal-slope intervention when only the designer knows about
/// the noise.
pub fn intervene_designer_aware(
    thetas: &[f64],
    epsilons: &[f64],
) -> Result<DesignResult<InterventionRule>> {
    let total = check_users(thetas, epsilons)?;
    if thetas.len() == 1 {
        return Err(sole_user_error());
    }
    let mut targets = Vec::with_capacity(thetas.len());
    let mut branches = Vec::with_capacity(thetas.len());
    let mut roots = Vec::with_capacity(thetas.len());
    for (&theta, &eps) in thetas.iter().zip(epsilons) {
        let rest = total - theta;
        let threshold = 4.0 * theta / (4.0 * total - rest);
        if eps > threshold {
            let rec = low_intervention_target(theta, total, eps)?;
            targets.push(rec.value);
            branches.push(Branch::Low);
            roots.push(Some(rec));
        } else {
            targets.push((4.0 * theta + eps * rest) / (4.0 * total));
            branches.push(Branch::Middle);
            roots.push(None);
        }
    }
    Ok(DesignResult {
        rule: InterventionRule::minimal_slope(targets)?,
        branches,
        roots,
    })
}

/// Root in `(0, eps)` of `-(theta + S) p^2 + (2 theta - 2 eps S) p + 2 eps theta`.
fn low_intervention_target(theta: f64, total: f64, eps: f64) -> Result<RootRecord> {
    let (a, b, c) = (
        -(theta + total),
        2.0 * theta - 2.0 * eps * total,
        2.0 * eps * theta,
    );
    let quad = |p: f64| (a * p + b) * p + c;
    // a < 0 < c, so the roots have opposite signs; take the positive one
    // without cancellation.
    let q = -0.5 * (b + b.signum() * (b * b - 4.0 * a * c).sqrt());
    let candidate = [q / a, c / q].into_iter().find(|r| *r > 0.0 && *r < eps);
    match candidate {
        Some(r) if quad(r).abs() <= ROOT_RESIDUAL => {
            finish_record("p3", r, quad(r).abs(), (0.0, eps))
        }
        _ => record("p3", quad, 0.0, eps),
    }
}

/// Extreme rule for noise-aware users: target `p* + eps` when the optimum
/// leaves room for the whole noise band below it, `3 eps` otherwise.
pub fn intervene_everybody_aware(thetas: &[f64], epsilons: &[f64]) -> Result<InterventionRule> {
    Ok(intervene_everybody_aware_design(thetas, epsilons)?.rule)
}

/// [`intervene_everybody_aware`] with branch labels: `Middle` for
/// `p* + eps`, `Low` for the `3 eps` floor.
pub fn intervene_everybody_aware_design(
    thetas: &[f64],
    epsilons: &[f64],
) -> Result<DesignResult<InterventionRule>> {
    check_users(thetas, epsilons)?;
    if thetas.len() == 1 {
        return Err(sole_user_error());
    }
    let optimum = optimal_profile(thetas)?;
    let (targets, branches): (Vec<f64>, Vec<Branch>) = optimum
        .as_slice()
        .iter()
        .zip(epsilons)
        .map(|(&p, &eps)| {
            if p >= 2.0 * eps {
                (p + eps, Branch::Middle)
            } else {
                (3.0 * eps, Branch::Low)
            }
        })
        .unzip();
    if let Some(t) = targets.iter().find(|t| **t >= 1.0) {
        return Err(Error::DesignInfeasible(format!(
            "extreme-rule target {t} is not below 1"
        )));
    }
    let roots = vec![None; targets.len()];
    Ok(DesignResult {
        rule: InterventionRule::extreme(targets)?,
        branches,
        roots,
    })
}

/// Candidate rules swept by [`search_symmetric_affine`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    /// Spacing of the symmetric target grid on `(0, 1)`.
    pub target_step: f64,
    /// Finite slopes are `m / target` for each `m` here.
    pub slope_multipliers: Vec<f64>,
    pub include_extreme: bool,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            target_step: 1e-3,
            slope_multipliers: vec![1.0, 2.0, 5.0, 10.0, 100.0],
            include_extreme: true,
        }
    }
}

/// One candidate symmetric rule and the equilibrium it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub target: f64,
    pub slope: Slope,
    pub action: f64,
    /// Expected intervention level at the equilibrium action.
    pub intervention_level: f64,
}

impl Candidate {
    /// Expected utility of each of `n` identical users.
    pub fn per_user_welfare(&self, theta: f64, n: usize) -> f64 {
        let t =
            self.action * (1.0 - self.intervention_level) * (1.0 - self.action).powi(n as i32 - 1);
        crate::model::base_utility(theta, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub best: Candidate,
    pub n: usize,
    pub welfare: f64,
    pub per_user_welfare: f64,
}

/// Exhaustive search over symmetric affine rules for one `(theta, eps)`.
///
/// The equilibrium a rule induces does not depend on the number of users,
/// so the candidate table is built once and reused for every `n`. The
/// slope set is a finite reconstruction (see [`SearchGrid`]); it always
/// contains the extreme rule.
#[derive(Debug, Clone)]
pub struct SymmetricSearch {
    theta: f64,
    candidates: Vec<Candidate>,
}

impl SymmetricSearch {
    pub fn new(theta: f64, eps: f64, grid: &SearchGrid) -> Result<Self> {
        check_theta(theta)?;
        check_epsilon(eps)?;
        if !(grid.target_step > 0.0 && grid.target_step < 0.5) {
            return Err(Error::InvalidInput(format!(
                "target step must lie in (0, 0.5), got {}",
                grid.target_step
            )));
        }
        if grid
            .slope_multipliers
            .iter()
            .any(|m| !(m.is_finite() && *m > 0.0))
        {
            return Err(Error::InvalidInput(
                "slope multipliers must be finite and > 0".into(),
            ));
        }
        let cells = (1.0 / grid.target_step).round() as usize;
        let mut pairs = Vec::new();
        for k in 1..cells {
            let target = k as f64 / cells as f64;
            for &m in &grid.slope_multipliers {
                pairs.push((target, Slope::Finite(m / target)));
            }
            if grid.include_extreme {
                pairs.push((target, Slope::Extreme));
            }
        }
        let candidates = pairs
            .into_par_iter()
            .map(|(target, slope)| {
                let action = match slope {
                    Slope::Extreme => extreme_everybody_action(target, eps),
                    Slope::Finite(_) => noisy_intervention_response(target, slope, eps),
                };
                let intervention_level = piecewise_intervention(action, target, slope, eps);
                Candidate {
                    target,
                    slope,
                    action,
                    intervention_level,
                }
            })
            .collect();
        Ok(Self { theta, candidates })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// Welfare-maximizing candidate for `n` users. Ties keep the earliest
    /// candidate in grid order.
    pub fn best_for(&self, n: usize) -> Result<SearchResult> {
        if n == 0 {
            return Err(Error::InvalidInput("at least one user is required".into()));
        }
        let mut best = self.candidates[0];
        let mut best_value = best.per_user_welfare(self.theta, n);
        for c in &self.candidates[1..] {
            let v = c.per_user_welfare(self.theta, n);
            if v > best_value {
                best = *c;
                best_value = v;
            }
        }
        Ok(SearchResult {
            best,
            n,
            welfare: n as f64 * best_value,
            per_user_welfare: best_value,
        })
    }
}

/// Best symmetric affine intervention rule for `n` noise-aware users.
pub fn search_symmetric_affine(
    theta: f64,
    eps: f64,
    n: usize,
    grid: &SearchGrid,
) -> Result<SearchResult> {
    SymmetricSearch::new(theta, eps, grid)?.best_for(n)
}

/// As [`search_symmetric_affine`], for an explicit user list, which must
/// be symmetric.
pub fn search_symmetric_affine_users(users: &[User], grid: &SearchGrid) -> Result<SearchResult> {
    let first = users
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one user is required".into()))?;
    if users.iter().any(|u| u != first) {
        return Err(Error::InvalidInput(
            "exhaustive search is limited to symmetric scenarios".into(),
        ));
    }
    search_symmetric_affine(first.theta(), first.epsilon(), users.len(), grid)
}
