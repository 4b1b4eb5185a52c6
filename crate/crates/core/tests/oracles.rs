//! Checks against independent brute-force oracles: direct sampling of the
//! noise, direct slot simulation and exhaustive enumeration.

use aloha_incentives::design::{SearchGrid, SymmetricSearch};
use aloha_incentives::evaluation::{evaluate_full, evaluate_scenario};
use aloha_incentives::model::{Awareness, Monitoring, Scenario, Scheme, Slope, User};
use aloha_incentives::noise::{expected_affine_intervention_numeric, MonitoringModel};
use aloha_incentives::sim::{monte_carlo_with_rule, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[test]
fn intervention_expectation_matches_sampling() {
    const SAMPLES: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let tuples: Vec<(f64, f64, Slope, f64)> = (0..1000)
        .map(|_| {
            let eps = rng.gen_range(0.01..=0.25);
            let p = rng.gen_range(0.0..=1.0);
            let target = rng.gen_range(0.01..0.99);
            let slope = if rng.gen_bool(0.2) {
                Slope::Extreme
            } else {
                Slope::Finite(rng.gen_range(0.0..=50.0))
            };
            (p, target, slope, eps)
        })
        .collect();
    let failures: Vec<String> = tuples
        .par_iter()
        .enumerate()
        .filter_map(|(k, &(p, target, slope, eps))| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..SAMPLES {
                let f = slope.level(
                    MonitoringModel::estimate(p, rng.gen_range(-eps..=eps)),
                    target,
                );
                sum += f;
                sq += f * f;
            }
            let n = SAMPLES as f64;
            let mean = sum / n;
            let se = ((sq / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
            let exact = expected_affine_intervention_numeric(p, target, slope, eps).unwrap();
            let ok = (exact - mean).abs() <= 4.0 * se || (exact - mean).abs() <= 1e-12;
            (!ok).then(|| format!("{p} {target} {slope} {eps}: {exact} vs {mean} +- {se}"))
        })
        .collect();
    // At 4 standard errors roughly one tuple in 16000 strays by chance.
    assert!(failures.len() <= 1, "{failures:#?}");
}

#[test]
fn search_never_loses_to_the_extreme_design() {
    for eps in [0.05, 0.2] {
        let search = SymmetricSearch::new(1.0, eps, &SearchGrid::default()).unwrap();
        for n in 2..=20 {
            let s = Scenario::symmetric(
                n,
                1.0,
                eps,
                Scheme::Intervention,
                Monitoring::Imperfect(Awareness::Everybody),
            )
            .unwrap();
            let Ok(o) = evaluate_scenario(&s) else {
                continue;
            };
            let best = search.best_for(n).unwrap().per_user_welfare;
            assert!(
                best >= o.social_welfare / n as f64 - 1e-3,
                "eps {eps} n {n}"
            );
        }
    }
}

#[test]
fn simulation_agrees_on_many_scenarios() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = SimConfig::new(5_000, 100, 5).unwrap();
    let mut checked = 0;
    let mut misses = 0;
    while checked < 200 {
        let n = rng.gen_range(2..=6);
        let users: Vec<User> = (0..n)
            .map(|_| User::new(rng.gen_range(0.3..=4.0), rng.gen_range(0.01..=0.25)).unwrap())
            .collect();
        let scheme = [Scheme::None, Scheme::Pricing, Scheme::Intervention][rng.gen_range(0..3)];
        let monitoring = [
            Monitoring::Perfect,
            Monitoring::Imperfect(Awareness::Nobody),
            Monitoring::Imperfect(Awareness::Designer),
            Monitoring::Imperfect(Awareness::Everybody),
        ][rng.gen_range(0..4)];
        let s = Scenario::new(users, scheme, monitoring, None).unwrap();
        let Ok(eval) = evaluate_full(&s) else {
            continue;
        };
        checked += 1;
        let out =
            monte_carlo_with_rule(&s, eval.rule.as_ref(), &eval.outcome.actions, &cfg).unwrap();
        let pairs = out.throughput.iter().zip(&eval.outcome.throughput).chain(
            out.charge_or_intervention
                .iter()
                .zip(&eval.outcome.charge_or_intervention),
        );
        misses += pairs
            .filter(|(est, exact)| !est.agrees_with(**exact, 4.0))
            .count();
    }
    assert!(misses <= 1, "{misses} estimates outside 4 standard errors");
}
