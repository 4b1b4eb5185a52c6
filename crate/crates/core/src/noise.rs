//! Expectations under imperfect monitoring.
//!
//! The designer observes `p_hat = [p + n]_0^1` with `n ~ U[-eps, eps]`.
//! The clamp puts atoms at 0 and 1; all formulas here account for them.

use crate::error::{invalid, Error, Result};
use crate::model::{check_epsilon, check_len, Slope};

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{what} must lie in [0, 1], got {p}")))
    }
}

fn check_target(target: f64) -> Result<()> {
    if target > 0.0 && target < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "target action must lie in (0, 1), got {target}"
        )))
    }
}

/// `E[[p + n]_0^1]`, the mean estimated action.
pub fn expected_clipped_uniform(p: f64, eps: f64) -> Result<f64> {
    check_probability(p, "action")?;
    check_epsilon(eps)?;
    Ok(clipped_mean(p, eps))
}

pub(crate) fn clipped_mean(p: f64, eps: f64) -> f64 {
    if p < eps {
        (p + eps).powi(2) / (4.0 * eps)
    } else if p <= 1.0 - eps {
        p
    } else {
        (-p * p + 2.0 * (eps + 1.0) * p + 2.0 * eps - eps * eps - 1.0) / (4.0 * eps)
    }
}

/// Mean intervention level of the minimal-slope rule (`r = 1 / target`)
/// when the user plays exactly its target.
///
/// Only the region `target <= 1 - eps` has a closed form here; above it
/// use [`expected_affine_intervention_numeric`].
pub fn expected_affine_intervention_at_target(target: f64, eps: f64) -> Result<f64> {
    check_target(target)?;
    check_epsilon(eps)?;
    if target > 1.0 - eps {
        return Err(Error::UnsupportedRegion(format!(
            "target {target} above 1 - eps = {}",
            1.0 - eps
        )));
    }
    Ok(if target < eps {
        (2.0 * eps - target) / (4.0 * eps)
    } else {
        eps / (4.0 * target)
    })
}

/// Mean intervention level of an extreme rule: the probability that the
/// estimate exceeds the target. Linear ramp across the detection band
/// `(target - eps, target + eps)`.
pub fn expected_extreme_intervention(p: f64, target: f64, eps: f64) -> Result<f64> {
    check_probability(p, "action")?;
    check_target(target)?;
    check_epsilon(eps)?;
    if target - eps < 0.0 || p + eps > 1.0 {
        return Err(Error::UnsupportedRegion(format!(
            "clamp interferes with the detection band (p = {p}, target = {target}, eps = {eps})"
        )));
    }
    Ok(extreme_band(p, target, eps))
}

fn extreme_band(p: f64, target: f64, eps: f64) -> f64 {
    if p <= target - eps {
        0.0
    } else if p >= target + eps {
        1.0
    } else {
        (p - target + eps) / (2.0 * eps)
    }
}

/// `E[[r ([p + n]_0^1 - target)]_0^1]` for any slope, by exact integration.
///
/// As a function of the noise the integrand is piecewise linear (piecewise
/// constant for an extreme slope) with kinks at `-p`, `1 - p`,
/// `target - p` and `target + 1/r - p`. Splitting `[-eps, eps]` at those
/// points and applying the midpoint rule on each piece is exact.
pub fn expected_affine_intervention_numeric(
    p: f64,
    target: f64,
    slope: Slope,
    eps: f64,
) -> Result<f64> {
    check_probability(p, "action")?;
    check_target(target)?;
    check_epsilon(eps)?;
    if let Slope::Finite(r) = slope {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid(format!("finite slope must be >= 0, got {r}")));
        }
    }
    Ok(piecewise_intervention(p, target, slope, eps))
}

pub(crate) fn piecewise_intervention(p: f64, target: f64, slope: Slope, eps: f64) -> f64 {
    let full_level = match slope {
        Slope::Finite(r) if r > 0.0 => Some(target + 1.0 / r - p),
        Slope::Finite(_) => return 0.0,
        Slope::Extreme => None,
    };
    let mut cuts = [eps; 6];
    cuts[0] = -eps;
    let mut len = 1;
    for c in [Some(-p), Some(1.0 - p), Some(target - p), full_level]
        .into_iter()
        .flatten()
    {
        if c > -eps && c < eps {
            cuts[len] = c;
            len += 1;
        }
    }
    cuts[len] = eps;
    len += 1;
    let cuts = &mut cuts[..len];
    cuts.sort_unstable_by(f64::total_cmp);

    let integrand = |n: f64| slope.level((p + n).clamp(0.0, 1.0), target);
    let total: f64 = cuts
        .windows(2)
        .map(|w| (w[1] - w[0]) * integrand(0.5 * (w[0] + w[1])))
        .sum();
    total / (2.0 * eps)
}

/// Per-user noise half-widths, with dispatch from each expectation to its
/// closed form where one applies.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringModel {
    epsilons: Vec<f64>,
}

impl MonitoringModel {
    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        epsilons.iter().try_for_each(|&e| check_epsilon(e))?;
        Ok(Self { epsilons })
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn epsilon(&self, i: usize) -> Result<f64> {
        self.epsilons.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.epsilons.len(),
        })
    }

    /// Estimate produced for action `p` under noise draw `n`.
    pub fn estimate(p: f64, noise: f64) -> f64 {
        (p + noise).clamp(0.0, 1.0)
    }

    pub fn expected_estimate(&self, i: usize, p: f64) -> Result<f64> {
        expected_clipped_uniform(p, self.epsilon(i)?)
    }

    /// Mean intervention level for user `i` playing `p` against its rule
    /// entry. Uses the at-target or band closed form when its
    /// preconditions hold, the exact piecewise integral otherwise.
    pub fn expected_intervention(
        &self,
        i: usize,
        p: f64,
        target: f64,
        slope: Slope,
    ) -> Result<f64> {
        let eps = self.epsilon(i)?;
        let closed = match slope {
            Slope::Finite(r) if p == target && r == 1.0 / target => {
                expected_affine_intervention_at_target(target, eps)
            }
            Slope::Extreme => expected_extreme_intervention(p, target, eps),
            Slope::Finite(_) => Err(Error::UnsupportedRegion("no closed form".into())),
        };
        match closed {
            Ok(v) => Ok(v),
            Err(Error::UnsupportedRegion(_)) => {
                expected_affine_intervention_numeric(p, target, slope, eps)
            }
            Err(e) => Err(e),
        }
    }

    pub fn check_users(&self, n: usize) -> Result<()> {
        check_len(n, self.epsilons.len())
    }
}
