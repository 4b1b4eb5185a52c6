use aloha_incentives::design::{
    everybody_low_target, intervene_everybody_aware, price_designer_aware, price_everybody_aware,
    price_perfect, Branch,
};
use aloha_incentives::equilibrium::{
    best_response_numeric, pricing_everybody_action, GameSpec, Perception,
};
use aloha_incentives::evaluation::evaluate_scenario;
use aloha_incentives::model::{
    optimal_profile, social_welfare, throughput, ActionProfile, Awareness, Monitoring, PricingRule,
    Rule, Scenario, Scheme, Slope, User,
};
use aloha_incentives::noise::{
    expected_affine_intervention_numeric, expected_clipped_uniform, expected_extreme_intervention,
};
use proptest::prelude::*;

fn thetas(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..5.0, 2..=max_n)
}

proptest! {
    #[test]
    fn clipped_mean_is_monotone_and_bounded(eps in 1e-4f64..=0.25, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (m_lo, m_hi) = (
            expected_clipped_uniform(lo, eps).unwrap(),
            expected_clipped_uniform(hi, eps).unwrap(),
        );
        prop_assert!(m_lo <= m_hi + 1e-15);
        for m in [m_lo, m_hi] {
            prop_assert!(m >= eps / 4.0 - 1e-15 && m <= 1.0 - eps / 4.0 + 1e-15);
        }
    }

    #[test]
    fn extreme_level_is_monotone(eps in 0.01f64..=0.25, t in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let target = eps + t * (1.0 - 2.0 * eps);
        let scale = |u: f64| u * (1.0 - eps);
        let (lo, hi) = if a <= b { (scale(a), scale(b)) } else { (scale(b), scale(a)) };
        let f_lo = expected_extreme_intervention(lo, target, eps).unwrap();
        let f_hi = expected_extreme_intervention(hi, target, eps).unwrap();
        prop_assert!(f_lo <= f_hi);
        prop_assert!((0.0..=1.0).contains(&f_lo) && (0.0..=1.0).contains(&f_hi));
        let numeric = expected_affine_intervention_numeric(hi, target, Slope::Extreme, eps).unwrap();
        prop_assert!((numeric - f_hi).abs() < 1e-12);
    }

    #[test]
    fn optimum_beats_any_profile(th in thetas(8), seed in prop::collection::vec(0.0f64..=1.0, 8)) {
        let best = social_welfare(&optimal_profile(&th).unwrap(), &th).unwrap();
        let other = ActionProfile::new(seed[..th.len()].to_vec()).unwrap();
        prop_assert!(best >= social_welfare(&other, &th).unwrap() - 1e-12);
    }

    #[test]
    fn throughputs_never_exceed_one(p in prop::collection::vec(0.0f64..=1.0, 1..10)) {
        let profile = ActionProfile::new(p).unwrap();
        let total: f64 = (0..profile.len()).map(|i| throughput(&profile, i).unwrap()).sum();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&total));
    }

    #[test]
    fn pricing_response_is_a_best_response(theta in 0.2f64..5.0, eps in 0.01f64..=0.25, c in 0.3f64..20.0) {
        let spec = GameSpec::new(
            vec![theta],
            vec![eps],
            Some(Rule::Pricing(PricingRule::new(vec![c]).unwrap())),
            Perception::Imperfect,
        ).unwrap();
        let p = pricing_everybody_action(theta, eps, c);
        let profile = ActionProfile::new(vec![p]).unwrap();
        let here = spec.utility(0, p, &profile).unwrap();
        let br = best_response_numeric(&spec, 0, &profile, 1e-12).unwrap();
        let there = spec.utility(0, br, &profile).unwrap();
        prop_assert!(there - here <= 1e-6, "p={p} br={br} gain={}", there - here);
    }

    #[test]
    fn designer_pricing_matches_perfect_in_middle(th in thetas(10), eps in 0.001f64..=0.25) {
        let total: f64 = th.iter().sum();
        prop_assume!(th.iter().all(|t| t / total >= eps && t / total <= 1.0 - eps));
        let d = price_designer_aware(&th, &vec![eps; th.len()]).unwrap();
        prop_assert_eq!(d.rule, price_perfect(&th).unwrap());
    }

    #[test]
    fn everybody_low_prices_induce_the_low_target(th in thetas(30), eps in 0.01f64..=0.25) {
        let d = price_everybody_aware(&th, &vec![eps; th.len()]).unwrap();
        let total: f64 = th.iter().sum();
        for (k, b) in d.branches.iter().enumerate() {
            if *b == Branch::Low {
                let induced = pricing_everybody_action(th[k], eps, d.rule.prices()[k]);
                let target = everybody_low_target(th[k], total, eps);
                prop_assert!((induced - target).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn extreme_design_never_intervenes(n in 2usize..40, eps in 0.01f64..=0.15) {
        let th = vec![1.0; n];
        prop_assume!(intervene_everybody_aware(&th, &vec![eps; n]).is_ok());
        let s = Scenario::symmetric(n, 1.0, eps, Scheme::Intervention, Monitoring::Imperfect(Awareness::Everybody)).unwrap();
        let o = evaluate_scenario(&s).unwrap();
        prop_assert!(o.charge_or_intervention.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn designer_knowledge_never_hurts(th in thetas(12), eps in 0.01f64..=0.25, pricing in any::<bool>()) {
        let users: Vec<User> = th.iter().map(|&t| User::new(t, eps).unwrap()).collect();
        let scheme = if pricing { Scheme::Pricing } else { Scheme::Intervention };
        let welfare = |a| {
            evaluate_scenario(&Scenario::new(users.clone(), scheme, Monitoring::Imperfect(a), None).unwrap())
                .unwrap()
                .social_welfare
        };
        let (nobody, designer) = (welfare(Awareness::Nobody), welfare(Awareness::Designer));
        prop_assert!(designer >= nobody - 1e-9, "designer {designer} < nobody {nobody}");
    }
}

#[test]
fn welfare_falls_with_more_users() {
    let regimes = [
        (Scheme::Pricing, Monitoring::Perfect),
        (Scheme::Intervention, Monitoring::Perfect),
        (Scheme::Pricing, Monitoring::Imperfect(Awareness::Designer)),
        (
            Scheme::Intervention,
            Monitoring::Imperfect(Awareness::Designer),
        ),
        (Scheme::Pricing, Monitoring::Imperfect(Awareness::Everybody)),
        (
            Scheme::Intervention,
            Monitoring::Imperfect(Awareness::Everybody),
        ),
    ];
    for (scheme, monitoring) in regimes {
        let mut last = f64::INFINITY;
        for n in 2..=30 {
            let s = Scenario::symmetric(n, 1.0, 0.1, scheme, monitoring).unwrap();
            let w = evaluate_scenario(&s).unwrap().social_welfare;
            assert!(w < last, "{scheme} {monitoring:?} n={n}: {w} >= {last}");
            last = w;
        }
    }
}
