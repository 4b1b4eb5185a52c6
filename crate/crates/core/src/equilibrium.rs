//! Nash equilibria of the contention game with and without incentives.
//!
//! Every incentive game here is separable: user `i`'s utility is
//! `theta_i ln p_i + (own incentive term) + theta_i ln prod_{j != i}(1 - p_j)`
//! and the last term does not depend on `p_i`. Best responses therefore do
//! not depend on the other users (as long as nobody else transmits with
//! probability one), and each closed form below is a per-user dominant
//! action.

use crate::error::{invalid, Result};
use crate::model::{
    base_utility, check_epsilon, check_len, check_thetas, others_silent, ActionProfile,
    InterventionRule, PricingRule, Rule, Slope,
};
use crate::noise::{clipped_mean, piecewise_intervention};

/// Membership slack for the set of prices that keep an interior optimum.
/// Keeps a designed price whose target sits exactly on the set boundary
/// on the interior side.
pub(crate) const SET_TOLERANCE: f64 = 1e-12;

/// Boundary tolerance for the extreme-rule lemma condition `target >= 3 eps`.
const LEMMA_TOLERANCE: f64 = 1e-12;

/// Grid step of [`best_response_numeric`].
pub const BEST_RESPONSE_GRID: f64 = 1e-4;

/// What the users believe about monitoring, which fixes the game they play.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perception {
    Perfect,
    Imperfect,
}

/// A fully specified game: who plays, under which incentive, and with
/// which perceived monitoring.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    thetas: Vec<f64>,
    epsilons: Vec<f64>,
    rule: Option<Rule>,
    perception: Perception,
}

impl GameSpec {
    pub fn new(
        thetas: Vec<f64>,
        epsilons: Vec<f64>,
        rule: Option<Rule>,
        perception: Perception,
    ) -> Result<Self> {
        check_thetas(&thetas)?;
        check_len(thetas.len(), epsilons.len())?;
        epsilons.iter().try_for_each(|&e| check_epsilon(e))?;
        if let Some(rule) = &rule {
            check_len(thetas.len(), rule.len())?;
        }
        Ok(Self {
            thetas,
            epsilons,
            rule,
            perception,
        })
    }

    pub fn n(&self) -> usize {
        self.thetas.len()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn rule(&self) -> Option<&Rule> {
        self.rule.as_ref()
    }

    pub fn perception(&self) -> Perception {
        self.perception
    }

    /// Utility user `i` expects from playing `p_i` against the rest of
    /// `profile`.
    pub fn utility(&self, i: usize, p_i: f64, profile: &ActionProfile) -> Result<f64> {
        check_len(self.n(), profile.len())?;
        if i >= self.n() {
            return Err(crate::error::Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            });
        }
        Ok(self.own_utility(i, p_i, others_silent(profile.as_slice(), i)))
    }

    /// Utility of user `i` given the probability `silent` that nobody
    /// else transmits.
    pub(crate) fn own_utility(&self, i: usize, p_i: f64, silent: f64) -> f64 {
        let theta = self.thetas[i];
        let eps = self.epsilons[i];
        let t = p_i * silent;
        let noisy = self.perception == Perception::Imperfect;
        match &self.rule {
            None => base_utility(theta, t),
            Some(Rule::Pricing(rule)) => {
                let c = rule.prices()[i];
                let billed = if noisy { clipped_mean(p_i, eps) } else { p_i };
                base_utility(theta, t) - c * billed
            }
            Some(Rule::Intervention(rule)) => {
                let (target, slope) = (rule.targets()[i], rule.slopes()[i]);
                let level = if noisy {
                    piecewise_intervention(p_i, target, slope, eps)
                } else {
                    slope.level(p_i, target)
                };
                base_utility(theta, t * (1.0 - level))
            }
        }
    }
}

/// The canonical equilibrium without incentives: everybody transmits in
/// every slot.
pub fn ne_no_incentive(n: usize) -> Result<ActionProfile> {
    if n == 0 {
        return Err(invalid("at least one user is required"));
    }
    ActionProfile::new(vec![1.0; n])
}

/// Without incentives a profile is an equilibrium iff some user already
/// transmits with probability one (every other user then has zero
/// throughput whatever it does).
pub fn is_no_incentive_ne(p: &ActionProfile) -> bool {
    p.as_slice().contains(&1.0)
}

/// Equilibrium of the pricing game when users believe monitoring is
/// perfect: `p_k = min(1, theta_k / c_k)`.
pub fn ne_pricing_belief_perfect(thetas: &[f64], rule: &PricingRule) -> Result<ActionProfile> {
    check_thetas(thetas)?;
    check_len(thetas.len(), rule.len())?;
    ActionProfile::new(
        thetas
            .iter()
            .zip(rule.prices())
            .map(|(&theta, &c)| if c <= theta { 1.0 } else { theta / c })
            .collect(),
    )
}

/// Whether `x` belongs to the set of interior targets that beat
/// transmitting always under noise-aware pricing:
/// `1/2 <= x <= 1 - eps` and `x ln x - x >= eps/4 - 1`.
pub fn in_interior_set(x: f64, eps: f64) -> bool {
    (0.5..=1.0 - eps).contains(&x) && x * x.ln() - x >= eps / 4.0 - 1.0 - SET_TOLERANCE
}

/// Best action of a user who knows it is billed on the noisy estimate.
pub fn pricing_everybody_action(theta: f64, eps: f64, price: f64) -> f64 {
    let x = theta / price;
    if x < eps {
        -eps / 2.0 + 0.5 * (eps * eps + 8.0 * eps * theta / price).sqrt()
    } else if x <= 0.5 || in_interior_set(x, eps) {
        x
    } else {
        1.0
    }
}

/// Equilibrium of the pricing game when everybody knows about the noise.
pub fn ne_pricing_everybody(
    thetas: &[f64],
    epsilons: &[f64],
    rule: &PricingRule,
) -> Result<ActionProfile> {
    check_thetas(thetas)?;
    check_len(thetas.len(), epsilons.len())?;
    check_len(thetas.len(), rule.len())?;
    epsilons.iter().try_for_each(|&e| check_epsilon(e))?;
    ActionProfile::new(
        thetas
            .iter()
            .zip(epsilons)
            .zip(rule.prices())
            .map(|((&theta, &eps), &c)| pricing_everybody_action(theta, eps, c))
            .collect(),
    )
}

/// Best action of a user who believes monitoring is perfect. A sustaining
/// slope pins it to the target; a weaker slope `r` lets it overshoot to the
/// midpoint of `[target, 1/r]`.
pub fn intervention_belief_perfect_action(target: f64, slope: Slope) -> f64 {
    match slope {
        s if s.sustains(target) => target,
        Slope::Finite(0.0) => 1.0,
        Slope::Finite(r) => (0.5 * (target + 1.0 / r)).min(1.0),
        Slope::Extreme => target,
    }
}

pub fn ne_intervention_belief_perfect(
    thetas: &[f64],
    rule: &InterventionRule,
) -> Result<ActionProfile> {
    check_thetas(thetas)?;
    check_len(thetas.len(), rule.len())?;
    ActionProfile::new(
        rule.targets()
            .iter()
            .zip(rule.slopes())
            .map(|(&t, &s)| intervention_belief_perfect_action(t, s))
            .collect(),
    )
}

/// Best action of a noise-aware user facing an extreme rule with the
/// given target.
///
/// With `target >= 3 eps` the user backs off by exactly `eps` and is never
/// punished. With `eps <= target < 3 eps` the optimum lies inside the
/// detection band, where the utility is `ln p + ln(target + eps - p)` up to
/// constants, maximized at `(target + eps) / 2`. Below `eps` the clamp at
/// zero bends the band and the optimum is found numerically.
pub fn extreme_everybody_action(target: f64, eps: f64) -> f64 {
    if target - eps >= 2.0 * eps - LEMMA_TOLERANCE {
        target - eps
    } else if target >= eps {
        0.5 * (target + eps)
    } else {
        noisy_intervention_response(target, Slope::Extreme, eps)
    }
}

/// Numeric best response of a noise-aware user to one rule entry.
pub(crate) fn noisy_intervention_response(target: f64, slope: Slope, eps: f64) -> f64 {
    let g = |p: f64| {
        let level = piecewise_intervention(p, target, slope, eps);
        base_utility(1.0, p * (1.0 - level))
    };
    maximize_on_unit(g, BEST_RESPONSE_GRID, 1e-12)
}

/// Equilibrium under an all-extreme intervention rule with noise-aware
/// users.
pub fn ne_intervention_everybody_extreme(
    thetas: &[f64],
    epsilons: &[f64],
    rule: &InterventionRule,
) -> Result<ActionProfile> {
    if rule.slopes().iter().any(|s| *s != Slope::Extreme) {
        return Err(invalid("every slope must be extreme"));
    }
    ne_intervention_everybody(thetas, epsilons, rule)
}

/// Equilibrium under any affine intervention rule with noise-aware users.
/// Extreme entries use [`extreme_everybody_action`]; finite slopes have no
/// closed form and use the numeric best response.
pub fn ne_intervention_everybody(
    thetas: &[f64],
    epsilons: &[f64],
    rule: &InterventionRule,
) -> Result<ActionProfile> {
    check_thetas(thetas)?;
    check_len(thetas.len(), epsilons.len())?;
    check_len(thetas.len(), rule.len())?;
    epsilons.iter().try_for_each(|&e| check_epsilon(e))?;
    ActionProfile::new(
        rule.targets()
            .iter()
            .zip(rule.slopes())
            .zip(epsilons)
            .map(|((&t, &s), &eps)| match s {
                Slope::Extreme => extreme_everybody_action(t, eps),
                Slope::Finite(_) => noisy_intervention_response(t, s, eps),
            })
            .collect(),
    )
}

/// Maximize `g` on `[0, 1]`: dense grid, then golden-section search on the
/// two cells around the best grid point. Returns the better of the two.
pub(crate) fn maximize_on_unit<G: Fn(f64) -> f64>(g: G, step: f64, x_tol: f64) -> f64 {
    let cells = (1.0 / step).round().max(1.0) as usize;
    let mut best_k = 0;
    let mut best_v = g(0.0);
    for k in 1..=cells {
        let v = g(k as f64 / cells as f64);
        if v > best_v {
            best_k = k;
            best_v = v;
        }
    }
    let best_x = best_k as f64 / cells as f64;
    let lo = best_k.saturating_sub(1) as f64 / cells as f64;
    let hi = (best_k + 1).min(cells) as f64 / cells as f64;
    let refined = golden_section(&g, lo, hi, x_tol);
    if g(refined) > best_v {
        refined
    } else {
        best_x
    }
}

fn golden_section<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64, x_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > x_tol {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
        if b - a <= f64::EPSILON * b.abs().max(1.0) {
            break;
        }
    }
    if gc >= gd {
        c
    } else {
        d
    }
}

/// Argmax over `[0, 1]` of user `i`'s utility in `spec` with the others
/// fixed at `profile`, by grid search (step [`BEST_RESPONSE_GRID`]) refined
/// by golden section down to `tol`.
pub fn best_response_numeric(
    spec: &GameSpec,
    i: usize,
    profile: &ActionProfile,
    tol: f64,
) -> Result<f64> {
    check_len(spec.n(), profile.len())?;
    if i >= spec.n() {
        return Err(crate::error::Error::IndexOutOfRange {
            index: i,
            len: spec.n(),
        });
    }
    let silent = others_silent(profile.as_slice(), i);
    Ok(maximize_on_unit(
        |x| spec.own_utility(i, x, silent),
        BEST_RESPONSE_GRID,
        tol,
    ))
}

/// Result of checking a profile for profitable unilateral deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeCheck {
    /// Largest utility gain any single user obtains by deviating.
    pub max_gain: f64,
    /// User attaining `max_gain`.
    pub worst_user: usize,
    /// `max_gain <= tol`.
    pub certified: bool,
}

/// Checks `profile` against the numeric best response of every user.
pub fn verify_ne(spec: &GameSpec, profile: &ActionProfile, tol: f64) -> Result<NeCheck> {
    check_len(spec.n(), profile.len())?;
    let mut max_gain = 0.0f64;
    let mut worst_user = 0;
    for i in 0..spec.n() {
        let silent = others_silent(profile.as_slice(), i);
        let current = spec.own_utility(i, profile[i], silent);
        let br = best_response_numeric(spec, i, profile, 1e-12)?;
        let deviation = spec.own_utility(i, br, silent);
        let gain = if deviation == f64::NEG_INFINITY {
            0.0
        } else if current == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            deviation - current
        };
        if gain > max_gain {
            max_gain = gain;
            worst_user = i;
        }
    }
    Ok(NeCheck {
        max_gain,
        worst_user,
        certified: max_gain <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::optimal_profile;

    fn pricing(prices: &[f64]) -> PricingRule {
        PricingRule::new(prices.to_vec()).unwrap()
    }

    fn profile(p: &[f64]) -> ActionProfile {
        ActionProfile::new(p.to_vec()).unwrap()
    }

    #[test]
    fn no_incentive() {
        assert_eq!(ne_no_incentive(3).unwrap().as_slice(), &[1.0, 1.0, 1.0]);
        assert!(ne_no_incentive(0).is_err());
        assert!(is_no_incentive_ne(&profile(&[1.0, 0.3])));
        assert!(!is_no_incentive_ne(&profile(&[0.5, 0.5])));

        let spec = GameSpec::new(vec![1.0; 2], vec![0.1; 2], None, Perception::Perfect).unwrap();
        assert_eq!(
            verify_ne(&spec, &ne_no_incentive(2).unwrap(), 1e-9)
                .unwrap()
                .max_gain,
            0.0
        );
        assert!(
            verify_ne(&spec, &profile(&[0.5, 0.5]), 1e-9)
                .unwrap()
                .max_gain
                > 0.1
        );
        let br = best_response_numeric(&spec, 0, &profile(&[0.4, 0.7]), 1e-10).unwrap();
        assert_eq!(br, 1.0);
    }

    #[test]
    fn pricing_perfect_examples() {
        let p = ne_pricing_belief_perfect(&[2.0, 1.0], &pricing(&[4.0, 4.0])).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.25]);
        let p = ne_pricing_belief_perfect(&[1.0; 3], &pricing(&[3.0; 3])).unwrap();
        assert!(p.as_slice().iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = ne_pricing_belief_perfect(&[1.0], &pricing(&[0.5])).unwrap();
        assert_eq!(p.as_slice(), &[1.0]);
        let p = ne_pricing_belief_perfect(&[1.0], &pricing(&[0.0])).unwrap();
        assert_eq!(p.as_slice(), &[1.0]);
    }

    #[test]
    fn pricing_everybody_examples() {
        assert_eq!(pricing_everybody_action(1.0, 0.1, 2.0), 0.5);
        assert!((pricing_everybody_action(1.0, 0.1, 20.0) - 0.061803).abs() < 1e-6);
        assert_eq!(pricing_everybody_action(1.0, 0.1, 1.2), 1.0);
        // Inside the interior set the user keeps theta / c.
        assert_eq!(pricing_everybody_action(0.7, 0.1, 1.0), 0.7);
        assert!(in_interior_set(0.5, 0.1));
        assert!(!in_interior_set(0.8333, 0.1));
    }

    #[test]
    fn pricing_everybody_continuous_at_eps() {
        for eps in [0.02_f64, 0.1, 0.25] {
            let price = 1.0 / eps;
            let inner = -eps / 2.0 + 0.5 * (eps * eps + 8.0 * eps / price).sqrt();
            assert!((inner - eps).abs() < 1e-12);
            assert!((pricing_everybody_action(1.0, eps, price) - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn intervention_perfect_examples() {
        assert_eq!(
            intervention_belief_perfect_action(0.3, Slope::Finite(1.0 / 0.3)),
            0.3
        );
        assert!((intervention_belief_perfect_action(0.3, Slope::Finite(2.0)) - 0.4).abs() < 1e-15);
        assert_eq!(intervention_belief_perfect_action(0.3, Slope::Extreme), 0.3);
        assert_eq!(
            intervention_belief_perfect_action(0.3, Slope::Finite(0.0)),
            1.0
        );
        assert_eq!(
            intervention_belief_perfect_action(0.9, Slope::Finite(0.6)),
            1.0
        );
    }

    #[test]
    fn intervention_perfect_monotone_in_slope() {
        let target = 0.3;
        let mut last = f64::INFINITY;
        for k in 0..200 {
            let r = 0.05 * k as f64;
            let p = intervention_belief_perfect_action(target, Slope::Finite(r));
            assert!(p <= last);
            last = p;
        }
        assert_eq!(last, target);
    }

    #[test]
    fn extreme_everybody_examples() {
        assert!((extreme_everybody_action(0.3, 0.1) - 0.2).abs() < 1e-15);
        assert!((extreme_everybody_action(0.6, 0.1) - 0.5).abs() < 1e-15);
        assert!((extreme_everybody_action(0.25, 0.1) - 0.175).abs() < 1e-15);
        // The interior value is what the numeric oracle finds.
        let numeric = noisy_intervention_response(0.25, Slope::Extreme, 0.1);
        assert!((numeric - 0.175).abs() < 1e-6);
        // Target below eps: clamp bends the band, numeric path.
        let low = extreme_everybody_action(0.05, 0.1);
        assert!(low > 0.0 && low < 0.15);
    }

    #[test]
    fn best_response_matches_closed_forms() {
        let spec = GameSpec::new(
            vec![1.0, 1.0],
            vec![0.1, 0.1],
            Some(Rule::Pricing(pricing(&[4.0, 4.0]))),
            Perception::Perfect,
        )
        .unwrap();
        for others in [0.0, 0.3, 0.9] {
            let br = best_response_numeric(&spec, 0, &profile(&[0.5, others]), 1e-10).unwrap();
            assert!((br - 0.25).abs() < 1e-4);
        }

        let rule = InterventionRule::extreme(vec![0.3, 0.3]).unwrap();
        let spec = GameSpec::new(
            vec![1.0, 1.0],
            vec![0.1, 0.1],
            Some(Rule::Intervention(rule)),
            Perception::Imperfect,
        )
        .unwrap();
        let br = best_response_numeric(&spec, 0, &profile(&[0.5, 0.2]), 1e-10).unwrap();
        assert!((br - 0.2).abs() < 1e-4);
    }

    #[test]
    fn verify_lemma_profile_and_perturbation() {
        let thetas = vec![1.0, 2.0, 3.0];
        let rule = crate::design::price_perfect(&thetas).unwrap();
        let p = ne_pricing_belief_perfect(&thetas, &rule).unwrap();
        assert_eq!(p, optimal_profile(&thetas).unwrap());
        let spec = GameSpec::new(
            thetas,
            vec![0.1; 3],
            Some(Rule::Pricing(rule)),
            Perception::Perfect,
        )
        .unwrap();
        assert!(verify_ne(&spec, &p, 1e-6).unwrap().certified);
        let shifted = p.with_action(0, p[0] + 0.1).unwrap();
        let check = verify_ne(&spec, &shifted, 1e-6).unwrap();
        assert!(!check.certified && check.worst_user == 0 && check.max_gain > 1e-3);
    }
}
