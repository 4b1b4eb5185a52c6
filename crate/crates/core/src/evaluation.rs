//! True expected outcomes of a scenario.
//!
//! The users play the game they perceive (perfect-belief equilibria unless
//! everybody is aware of the noise), the designer picks the rule its
//! information allows, and the reported payments, intervention levels and
//! utilities are expectations over the actual monitoring noise.

use std::ops::RangeInclusive;

use crate::design::{
    intervene_designer_aware, intervene_everybody_aware_design, intervene_perfect,
    price_designer_aware, price_everybody_aware, price_perfect, Branch, DesignResult,
};
use crate::equilibrium::{
    ne_intervention_belief_perfect, ne_intervention_everybody, ne_no_incentive,
    ne_pricing_belief_perfect, ne_pricing_everybody,
};
use crate::error::{Error, Result};
use crate::model::{
    base_utility, check_len, raw_throughput, ActionProfile, Awareness, InterventionRule,
    Monitoring, Outcome, PricingRule, Rule, Scenario, Scheme, User,
};
use crate::noise::{clipped_mean, MonitoringModel};

/// The rule a designer with the scenario's information adopts, together
/// with the branch and root bookkeeping of its derivation.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Pricing(DesignResult<PricingRule>),
    Intervention(DesignResult<InterventionRule>),
}

impl Design {
    pub fn rule(&self) -> Rule {
        match self {
            Design::Pricing(d) => Rule::Pricing(d.rule.clone()),
            Design::Intervention(d) => Rule::Intervention(d.rule.clone()),
        }
    }

    pub fn branches(&self) -> &[Branch] {
        match self {
            Design::Pricing(d) => &d.branches,
            Design::Intervention(d) => &d.branches,
        }
    }

    pub fn roots(&self) -> &[Option<crate::root::RootRecord>] {
        match self {
            Design::Pricing(d) => &d.roots,
            Design::Intervention(d) => &d.roots,
        }
    }
}

fn perfect_design<R>(rule: R, n: usize) -> DesignResult<R> {
    DesignResult {
        rule,
        branches: vec![Branch::Perfect; n],
        roots: vec![None; n],
    }
}

/// Runs the design matching the scheme and the designer's information.
/// Nobody-aware designers use the perfect-monitoring design.
pub fn design_for(
    users: &[User],
    scheme: Scheme,
    monitoring: Monitoring,
) -> Result<Option<Design>> {
    let thetas: Vec<f64> = users.iter().map(User::theta).collect();
    let epsilons: Vec<f64> = users.iter().map(User::epsilon).collect();
    let n = users.len();
    let designer = match monitoring {
        Monitoring::Perfect | Monitoring::Imperfect(Awareness::Nobody) => None,
        Monitoring::Imperfect(a) => Some(a),
    };
    Ok(match (scheme, designer) {
        (Scheme::None, _) => None,
        (Scheme::Pricing, None) => {
            Some(Design::Pricing(perfect_design(price_perfect(&thetas)?, n)))
        }
        (Scheme::Pricing, Some(Awareness::Designer)) => {
            Some(Design::Pricing(price_designer_aware(&thetas, &epsilons)?))
        }
        (Scheme::Pricing, Some(_)) => {
            Some(Design::Pricing(price_everybody_aware(&thetas, &epsilons)?))
        }
        (Scheme::Intervention, None) => Some(Design::Intervention(perfect_design(
            intervene_perfect(&thetas)?,
            n,
        ))),
        (Scheme::Intervention, Some(Awareness::Designer)) => Some(Design::Intervention(
            intervene_designer_aware(&thetas, &epsilons)?,
        )),
        (Scheme::Intervention, Some(_)) => Some(Design::Intervention(
            intervene_everybody_aware_design(&thetas, &epsilons)?,
        )),
    })
}

/// The scenario's override if present, the regime's design otherwise.
pub fn resolve_rule(s: &Scenario) -> Result<Option<Rule>> {
    if let Some(rule) = s.rule_override() {
        return Ok(Some(rule.clone()));
    }
    Ok(design_for(s.users(), s.scheme(), s.monitoring())?.map(|d| d.rule()))
}

/// Equilibrium of the game the users believe they are playing.
pub fn equilibrium_actions(s: &Scenario, rule: Option<&Rule>) -> Result<ActionProfile> {
    let thetas = s.thetas();
    let aware = s.monitoring().users_aware();
    match (s.scheme(), rule) {
        (Scheme::None, _) => ne_no_incentive(s.n()),
        (Scheme::Pricing, Some(Rule::Pricing(r))) if aware => {
            ne_pricing_everybody(&thetas, &s.epsilons(), r)
        }
        (Scheme::Pricing, Some(Rule::Pricing(r))) => ne_pricing_belief_perfect(&thetas, r),
        (Scheme::Intervention, Some(Rule::Intervention(r))) if aware => {
            ne_intervention_everybody(&thetas, &s.epsilons(), r)
        }
        (Scheme::Intervention, Some(Rule::Intervention(r))) => {
            ne_intervention_belief_perfect(&thetas, r)
        }
        (scheme, _) => Err(Error::InvalidInput(format!(
            "scheme {scheme} needs a matching rule"
        ))),
    }
}

/// True expected outcome when the users play `actions` under `rule`.
pub fn evaluate_at(s: &Scenario, rule: Option<&Rule>, actions: &ActionProfile) -> Result<Outcome> {
    check_len(s.n(), actions.len())?;
    if let Some(rule) = rule {
        check_len(s.n(), rule.len())?;
    }
    let p = actions.as_slice();
    let perfect = s.monitoring().is_perfect();
    let model = MonitoringModel::new(s.epsilons())?;
    let n = s.n();
    let mut throughput = Vec::with_capacity(n);
    let mut utility = Vec::with_capacity(n);
    let mut extra = Vec::with_capacity(n);
    for (i, user) in s.users().iter().enumerate() {
        let t = raw_throughput(p, i);
        match (s.scheme(), rule) {
            (Scheme::None, _) => {
                throughput.push(t);
                utility.push(base_utility(user.theta(), t));
                extra.push(0.0);
            }
            (Scheme::Pricing, Some(Rule::Pricing(r))) => {
                let billed = if perfect {
                    p[i]
                } else {
                    clipped_mean(p[i], user.epsilon())
                };
                let charge = r.prices()[i] * billed;
                throughput.push(t);
                utility.push(base_utility(user.theta(), t) - charge);
                extra.push(charge);
            }
            (Scheme::Intervention, Some(Rule::Intervention(r))) => {
                let (target, slope) = (r.targets()[i], r.slopes()[i]);
                let level = if perfect {
                    slope.level(p[i], target)
                } else {
                    model.expected_intervention(i, p[i], target, slope)?
                };
                let delivered = t * (1.0 - level);
                throughput.push(delivered);
                utility.push(base_utility(user.theta(), delivered));
                extra.push(level);
            }
            (scheme, _) => {
                return Err(Error::InvalidInput(format!(
                    "scheme {scheme} needs a matching rule"
                )))
            }
        }
    }
    Ok(Outcome::from_parts(
        actions.clone(),
        throughput,
        utility,
        extra,
    ))
}

/// Rule, equilibrium and true outcome of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub rule: Option<Rule>,
    pub outcome: Outcome,
}

pub fn evaluate_full(s: &Scenario) -> Result<Evaluation> {
    let rule = resolve_rule(s)?;
    let actions = equilibrium_actions(s, rule.as_ref())?;
    let outcome = evaluate_at(s, rule.as_ref(), &actions)?;
    Ok(Evaluation { rule, outcome })
}

pub fn evaluate_scenario(s: &Scenario) -> Result<Outcome> {
    Ok(evaluate_full(s)?.outcome)
}

/// One user count of a symmetric sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub scheme: Scheme,
    pub monitoring: Monitoring,
    pub social_welfare: f64,
    pub total_throughput: f64,
    pub actions: Vec<f64>,
    pub charge_or_intervention: Vec<f64>,
}

impl SweepRow {
    pub fn from_outcome(n: usize, scheme: Scheme, monitoring: Monitoring, o: &Outcome) -> Self {
        Self {
            n,
            scheme,
            monitoring,
            social_welfare: o.social_welfare,
            total_throughput: o.total_throughput,
            actions: o.actions.as_slice().to_vec(),
            charge_or_intervention: o.charge_or_intervention.clone(),
        }
    }
}

/// Evaluates the symmetric scenario for every user count in `ns`.
pub fn sweep_users(
    ns: RangeInclusive<usize>,
    theta: f64,
    eps: f64,
    scheme: Scheme,
    monitoring: Monitoring,
) -> Result<Vec<SweepRow>> {
    ns.map(|n| {
        let s = Scenario::symmetric(n, theta, eps, scheme, monitoring)?;
        Ok(SweepRow::from_outcome(
            n,
            scheme,
            monitoring,
            &evaluate_scenario(&s)?,
        ))
    })
    .collect()
}

/// Where pricing starts to beat intervention when everybody knows about
/// the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    /// Smallest user count at which pricing welfare strictly exceeds
    /// intervention welfare; `None` if that never happens up to the limit.
    pub first_pricing_win: Option<usize>,
    pub n_max: usize,
}

impl Threshold {
    /// Largest user count for which intervention is at least as good as
    /// pricing, counting from two users.
    pub fn last_intervention_win(&self) -> Option<usize> {
        self.first_pricing_win.map(|n| n - 1)
    }
}

/// Compares the everybody-aware pricing and intervention designs for
/// `n = 2..=n_max` identical users.
pub fn find_threshold(theta: f64, eps: f64, n_max: usize) -> Result<Threshold> {
    let aware = Monitoring::Imperfect(Awareness::Everybody);
    for n in 2..=n_max {
        let pricing = Scenario::symmetric(n, theta, eps, Scheme::Pricing, aware)?;
        let intervention = Scenario::symmetric(n, theta, eps, Scheme::Intervention, aware)?;
        let wp = evaluate_scenario(&pricing)?.social_welfare;
        let wi = evaluate_scenario(&intervention)?.social_welfare;
        if wp > wi {
            return Ok(Threshold {
                first_pricing_win: Some(n),
                n_max,
            });
        }
    }
    Ok(Threshold {
        first_pricing_win: None,
        n_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{optimal_profile, social_welfare};

    const NOBODY: Monitoring = Monitoring::Imperfect(Awareness::Nobody);
    const EVERYBODY: Monitoring = Monitoring::Imperfect(Awareness::Everybody);

    fn eval(n: usize, eps: f64, scheme: Scheme, m: Monitoring) -> Outcome {
        evaluate_scenario(&Scenario::symmetric(n, 1.0, eps, scheme, m).unwrap()).unwrap()
    }

    #[test]
    fn perfect_intervention_hits_benchmark() {
        let o = eval(3, 0.1, Scheme::Intervention, Monitoring::Perfect);
        assert!((o.social_welfare - 3.0 * (4.0f64 / 27.0).ln()).abs() < 1e-12);
        assert!((o.total_throughput - 4.0 / 9.0).abs() < 1e-12);
        assert!(o.charge_or_intervention.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn perfect_pricing_pays_theta() {
        let o = eval(2, 0.1, Scheme::Pricing, Monitoring::Perfect);
        assert!((o.social_welfare - (2.0 * 0.25f64.ln() - 2.0)).abs() < 1e-12);
        assert!(o
            .charge_or_intervention
            .iter()
            .all(|c| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn nobody_aware_intervention_is_punished_by_noise() {
        let o = eval(5, 0.1, Scheme::Intervention, NOBODY);
        let benchmark = 5.0 * (0.2f64.ln() + 4.0 * 0.8f64.ln());
        assert!((o.social_welfare - (benchmark + 5.0 * (1.0f64 - 0.125).ln())).abs() < 1e-12);
        assert!((o.social_welfare + 13.1777).abs() < 1e-4);
        assert!(o
            .charge_or_intervention
            .iter()
            .all(|x| (x - 0.125).abs() < 1e-15));
    }

    #[test]
    fn everybody_aware_intervention_recovers_benchmark() {
        let o = eval(5, 0.1, Scheme::Intervention, EVERYBODY);
        assert!((o.social_welfare + 12.510061).abs() < 1e-5);
        assert!(o.charge_or_intervention.iter().all(|x| *x == 0.0));
        // Beyond the lemma region users settle at 2 eps.
        let o = eval(9, 0.1, Scheme::Intervention, EVERYBODY);
        assert!((o.social_welfare / 9.0 - (0.2f64 * 0.8f64.powi(8)).ln()).abs() < 1e-12);
        assert!((o.social_welfare / 9.0 + 3.39459).abs() < 1e-5);
    }

    #[test]
    fn no_scheme_blocks_the_channel() {
        let o = eval(3, 0.1, Scheme::None, Monitoring::Perfect);
        assert_eq!(o.social_welfare, f64::NEG_INFINITY);
        assert_eq!(o.total_throughput, 0.0);
    }

    #[test]
    fn perfect_sweep_gap_is_n_theta() {
        let pricing = sweep_users(2..=20, 1.0, 0.1, Scheme::Pricing, Monitoring::Perfect).unwrap();
        let interv =
            sweep_users(2..=20, 1.0, 0.1, Scheme::Intervention, Monitoring::Perfect).unwrap();
        for (p, i) in pricing.iter().zip(&interv) {
            assert!((i.social_welfare - p.social_welfare - p.n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn nobody_pricing_matches_perfect_until_inverse_eps() {
        let perfect = sweep_users(2..=14, 1.0, 0.1, Scheme::Pricing, Monitoring::Perfect).unwrap();
        let nobody = sweep_users(2..=14, 1.0, 0.1, Scheme::Pricing, NOBODY).unwrap();
        for (a, b) in perfect.iter().zip(&nobody) {
            if a.n <= 10 {
                assert_eq!(a.social_welfare, b.social_welfare);
            } else {
                assert!(b.social_welfare < a.social_welfare);
            }
            assert_eq!(a.total_throughput, b.total_throughput);
        }
    }

    #[test]
    fn threshold_at_point_one() {
        let t = find_threshold(1.0, 0.1, 40).unwrap();
        assert_eq!(t.first_pricing_win, Some(16));
        assert_eq!(t.last_intervention_win(), Some(15));
        assert_eq!(
            find_threshold(1.0, 0.1, 10).unwrap().first_pricing_win,
            None
        );
    }

    #[test]
    fn override_rule_is_used() {
        let users = vec![User::new(1.0, 0.1).unwrap(); 2];
        let rule = Rule::Pricing(PricingRule::new(vec![4.0, 4.0]).unwrap());
        let s = Scenario::new(users, Scheme::Pricing, Monitoring::Perfect, Some(rule)).unwrap();
        let o = evaluate_scenario(&s).unwrap();
        assert_eq!(o.actions.as_slice(), &[0.25, 0.25]);
    }

    #[test]
    fn evaluate_at_optimum_without_scheme_is_benchmark() {
        let s = Scenario::symmetric(4, 1.0, 0.1, Scheme::None, Monitoring::Perfect).unwrap();
        let p = optimal_profile(&[1.0; 4]).unwrap();
        let o = evaluate_at(&s, None, &p).unwrap();
        assert_eq!(o.social_welfare, social_welfare(&p, &[1.0; 4]).unwrap());
    }
}
