//! Domain types of the contention game and the noiseless base formulas:
//! per-user slotted-Aloha throughput, logarithmic utility and social
//! welfare.
//!
//! Utilities and welfare are extended reals carried in `f64`: a user with
//! zero throughput has utility `f64::NEG_INFINITY`, and any sum containing
//! such a term is itself `-inf`. No `+inf` ever appears, so sums never
//! produce NaN and the usual `f64` ordering places `-inf` below every
//! finite value.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Largest monitoring-noise half-width accepted. Every closed form in
/// [`crate::noise`] and [`crate::design`] assumes a small half-width.
pub const MAX_EPSILON: f64 = 0.25;

/// One contender: valuation weight and monitoring-noise half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct User {
    theta: f64,
    epsilon: f64,
}

impl User {
    pub fn new(theta: f64, epsilon: f64) -> Result<Self> {
        check_theta(theta)?;
        check_epsilon(epsilon)?;
        Ok(Self { theta, epsilon })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "theta must be finite and > 0, got {theta}"
        )))
    }
}

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= MAX_EPSILON {
        Ok(())
    } else {
        Err(invalid(format!(
            "epsilon must lie in (0, {MAX_EPSILON}], got {eps}"
        )))
    }
}

pub(crate) fn check_thetas(thetas: &[f64]) -> Result<()> {
    if thetas.is_empty() {
        return Err(invalid("at least one user is required"));
    }
    thetas.iter().try_for_each(|&t| check_theta(t))
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

/// Users' per-slot transmission probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProfile(Vec<f64>);

impl ActionProfile {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(invalid(format!(
                "transmission probability {bad} outside [0, 1]"
            )));
        }
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy of the profile with user `i` playing `p_i` instead.
    pub fn with_action(&self, i: usize, p_i: f64) -> Result<Self> {
        let mut p = self.0.clone();
        let len = p.len();
        let slot = p
            .get_mut(i)
            .ok_or(Error::IndexOutOfRange { index: i, len })?;
        *slot = p_i;
        Self::new(p)
    }
}

impl std::ops::Index<usize> for ActionProfile {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Linear pricing: user `i` pays `prices[i]` per unit of (estimated)
/// transmission probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingRule {
    prices: Vec<f64>,
}

impl PricingRule {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if let Some(bad) = prices.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(invalid(format!(
                "unit price must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Self { prices })
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Slope of an affine intervention rule. `Extreme` is the `r -> +inf`
/// limit: jam with certainty whenever the estimate exceeds the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Finite(f64),
    Extreme,
}

impl Slope {
    /// True when the slope is at least `1 / target`, the condition under
    /// which a perfectly monitored user sticks to the target.
    pub fn sustains(&self, target: f64) -> bool {
        match *self {
            Slope::Extreme => true,
            Slope::Finite(r) => r * target >= 1.0,
        }
    }

    /// Intervention level `[r (estimate - target)]_0^1`.
    pub fn level(&self, estimate: f64, target: f64) -> f64 {
        match *self {
            Slope::Extreme => {
                if estimate > target {
                    1.0
                } else {
                    0.0
                }
            }
            Slope::Finite(r) => (r * (estimate - target)).clamp(0.0, 1.0),
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Finite(r) => write!(f, "{r}"),
            Slope::Extreme => f.write_str("inf"),
        }
    }
}

/// Per-user affine intervention rule `f_i(p_hat) = [r_i (p_hat - target_i)]_0^1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionRule {
    targets: Vec<f64>,
    slopes: Vec<Slope>,
}

impl InterventionRule {
    pub fn new(targets: Vec<f64>, slopes: Vec<Slope>) -> Result<Self> {
        check_len(targets.len(), slopes.len())?;
        if let Some(bad) = targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(invalid(format!(
                "target action must lie in (0, 1), got {bad}"
            )));
        }
        for s in &slopes {
            if let Slope::Finite(r) = s {
                if !(r.is_finite() && *r >= 0.0) {
                    return Err(invalid(format!("finite slope must be >= 0, got {r}")));
                }
            }
        }
        Ok(Self { targets, slopes })
    }

    /// Rule with the minimal sustaining slope `1 / target` for every user.
    pub fn minimal_slope(targets: Vec<f64>) -> Result<Self> {
        let slopes = targets.iter().map(|t| Slope::Finite(1.0 / t)).collect();
        Self::new(targets, slopes)
    }

    pub fn extreme(targets: Vec<f64>) -> Result<Self> {
        let slopes = vec![Slope::Extreme; targets.len()];
        Self::new(targets, slopes)
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn slopes(&self) -> &[Slope] {
        &self.slopes
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Pricing(PricingRule),
    Intervention(InterventionRule),
}

impl Rule {
    pub fn len(&self) -> usize {
        match self {
            Rule::Pricing(r) => r.len(),
            Rule::Intervention(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Rule::Pricing(_) => Scheme::Pricing,
            Rule::Intervention(_) => Scheme::Intervention,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    None,
    Pricing,
    Intervention,
}

/// Who knows about the monitoring noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Awareness {
    Nobody,
    Designer,
    Everybody,
}

/// Awareness only exists under imperfect monitoring, so it lives inside
/// that variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Monitoring {
    Perfect,
    Imperfect(Awareness),
}

impl Monitoring {
    /// Whether users play the noise-aware game.
    pub fn users_aware(&self) -> bool {
        matches!(self, Monitoring::Imperfect(Awareness::Everybody))
    }

    pub fn is_perfect(&self) -> bool {
        matches!(self, Monitoring::Perfect)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::None => "none",
            Scheme::Pricing => "pricing",
            Scheme::Intervention => "intervention",
        })
    }
}

impl fmt::Display for Awareness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Awareness::Nobody => "nobody",
            Awareness::Designer => "designer",
            Awareness::Everybody => "everybody",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    users: Vec<User>,
    scheme: Scheme,
    monitoring: Monitoring,
    rule_override: Option<Rule>,
}

impl Scenario {
    pub fn new(
        users: Vec<User>,
        scheme: Scheme,
        monitoring: Monitoring,
        rule_override: Option<Rule>,
    ) -> Result<Self> {
        if users.is_empty() {
            return Err(invalid("scenario needs at least one user"));
        }
        if let Some(rule) = &rule_override {
            if rule.scheme() != scheme {
                return Err(invalid(format!(
                    "rule override is a {} rule but the scheme is {scheme}",
                    rule.scheme()
                )));
            }
            check_len(users.len(), rule.len())?;
        }
        Ok(Self {
            users,
            scheme,
            monitoring,
            rule_override,
        })
    }

    /// `n` identical users.
    pub fn symmetric(
        n: usize,
        theta: f64,
        epsilon: f64,
        scheme: Scheme,
        monitoring: Monitoring,
    ) -> Result<Self> {
        let user = User::new(theta, epsilon)?;
        Self::new(vec![user; n], scheme, monitoring, None)
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn n(&self) -> usize {
        self.users.len()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn monitoring(&self) -> Monitoring {
        self.monitoring
    }

    pub fn rule_override(&self) -> Option<&Rule> {
        self.rule_override.as_ref()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.users.iter().map(User::theta).collect()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.users.iter().map(User::epsilon).collect()
    }
}

/// Expected per-user and aggregate results of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub actions: ActionProfile,
    /// Delivered packets per slot.
    pub throughput: Vec<f64>,
    pub utility: Vec<f64>,
    /// Expected payment under pricing, expected intervention level under
    /// intervention, zero otherwise.
    pub charge_or_intervention: Vec<f64>,
    pub social_welfare: f64,
    pub total_throughput: f64,
}

impl Outcome {
    pub fn from_parts(
        actions: ActionProfile,
        throughput: Vec<f64>,
        utility: Vec<f64>,
        charge_or_intervention: Vec<f64>,
    ) -> Self {
        let social_welfare = extended_sum(&utility);
        let total_throughput = throughput.iter().sum();
        Self {
            actions,
            throughput,
            utility,
            charge_or_intervention,
            social_welfare,
            total_throughput,
        }
    }
}

/// Sum with `-inf` absorbing.
pub fn extended_sum(values: &[f64]) -> f64 {
    if values.contains(&f64::NEG_INFINITY) {
        f64::NEG_INFINITY
    } else {
        values.iter().sum()
    }
}

/// Welfare-maximizing profile for compliant users: `p_k = theta_k / sum(theta)`.
pub fn optimal_profile(thetas: &[f64]) -> Result<ActionProfile> {
    check_thetas(thetas)?;
    let total: f64 = thetas.iter().sum();
    ActionProfile::new(thetas.iter().map(|t| t / total).collect())
}

/// Success probability of user `i` per slot: `p_i * prod_{j != i} (1 - p_j)`.
pub fn throughput(p: &ActionProfile, i: usize) -> Result<f64> {
    if i >= p.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: p.len(),
        });
    }
    Ok(raw_throughput(p.as_slice(), i))
}

pub(crate) fn raw_throughput(p: &[f64], i: usize) -> f64 {
    p.iter()
        .enumerate()
        .map(|(j, &pj)| if j == i { pj } else { 1.0 - pj })
        .product()
}

/// `prod_{j != i} (1 - p_j)`, the probability that nobody else transmits.
pub(crate) fn others_silent(p: &[f64], i: usize) -> f64 {
    p.iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, &pj)| 1.0 - pj)
        .product()
}

/// `theta * ln(t)`, which is `-inf` at zero throughput.
pub fn base_utility(theta: f64, t: f64) -> f64 {
    if t <= 0.0 {
        f64::NEG_INFINITY
    } else {
        theta * t.ln()
    }
}

pub fn social_welfare(p: &ActionProfile, thetas: &[f64]) -> Result<f64> {
    check_len(p.len(), thetas.len())?;
    let utilities: Vec<f64> = thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| base_utility(theta, raw_throughput(p.as_slice(), i)))
        .collect();
    Ok(extended_sum(&utilities))
}

/// `min(max(a, x), b)`.
pub fn clamp(x: f64, a: f64, b: f64) -> Result<f64> {
    if a > b {
        return Err(invalid(format!("clamp bounds reversed: {a} > {b}")));
    }
    Ok(x.max(a).min(b))
}
