//! Slot-level Monte Carlo of the contention game, used to cross-check the
//! analytic expectations.
//!
//! Each episode draws one action estimate per user (the monitoring
//! window), then plays `slots_per_episode` slots. A packet gets through
//! iff exactly one user transmits; under intervention its ACK is then
//! jammed with probability `f_i(p_hat_i)`. Under pricing the episode
//! charge is `c_i p_hat_i`.
//!
//! Randomness comes from ChaCha8 seeded with `seed`; episode `e` uses
//! stream `e` of that key, so episodes are independent of how they are
//! scheduled across threads and results are bit-reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::evaluation::resolve_rule;
use crate::model::{base_utility, check_len, extended_sum, ActionProfile, Rule, Scenario};
use crate::noise::MonitoringModel;

/// Minimum `episodes * slots` for a comparison worth reporting.
pub const MIN_PUBLISHED_SLOTS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub episodes: u64,
    pub slots_per_episode: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(episodes: u64, slots_per_episode: u64, seed: u64) -> Result<Self> {
        if episodes == 0 || slots_per_episode == 0 {
            return Err(invalid("episodes and slots per episode must be positive"));
        }
        Ok(Self {
            episodes,
            slots_per_episode,
            seed,
        })
    }

    pub fn total_slots(&self) -> u64 {
        self.episodes.saturating_mul(self.slots_per_episode)
    }

    pub fn is_publishable(&self) -> bool {
        self.total_slots() >= MIN_PUBLISHED_SLOTS
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors of the mean. A
    /// zero-variance estimate must match up to summation rounding.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        let diff = (self.mean - value).abs();
        diff <= k * self.std_error || diff <= 1e-9 * value.abs().max(1.0)
    }

    fn from_samples(samples: impl Iterator<Item = f64> + Clone, count: u64) -> Self {
        let n = count as f64;
        let mean = samples.clone().sum::<f64>() / n;
        let var = if count > 1 {
            samples.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Episode-averaged empirical counterpart of [`crate::model::Outcome`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalOutcome {
    pub actions: ActionProfile,
    /// Delivered packets per slot.
    pub throughput: Vec<Estimate>,
    /// Mean episode charge under pricing, fraction of successes jammed
    /// under intervention, zero otherwise.
    pub charge_or_intervention: Vec<Estimate>,
    /// `theta ln(mean throughput) - mean charge`.
    pub utility: Vec<f64>,
    pub social_welfare: f64,
    pub total_throughput: f64,
    pub config: SimConfig,
}

#[derive(Debug, Clone)]
struct EpisodeTally {
    successes: Vec<u64>,
    delivered: Vec<u64>,
    charge: Vec<f64>,
}

fn run_episode(
    episode: u64,
    p: &[f64],
    epsilons: &[f64],
    noisy: bool,
    rule: Option<&Rule>,
    cfg: &SimConfig,
) -> EpisodeTally {
    let n = p.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(episode);

    let estimates: Vec<f64> = p
        .iter()
        .zip(epsilons)
        .map(|(&pi, &eps)| {
            if noisy {
                MonitoringModel::estimate(pi, rng.gen_range(-eps..=eps))
            } else {
                pi
            }
        })
        .collect();
    let mut jam = vec![0.0; n];
    let mut charge = vec![0.0; n];
    match rule {
        Some(Rule::Pricing(r)) => {
            for i in 0..n {
                charge[i] = r.prices()[i] * estimates[i];
            }
        }
        Some(Rule::Intervention(r)) => {
            for i in 0..n {
                jam[i] = r.slopes()[i].level(estimates[i], r.targets()[i]);
            }
        }
        None => {}
    }

    let mut successes = vec![0u64; n];
    let mut delivered = vec![0u64; n];
    for _ in 0..cfg.slots_per_episode {
        let mut transmitter = None;
        let mut count = 0;
        for (i, &pi) in p.iter().enumerate() {
            if rng.gen::<f64>() < pi {
                count += 1;
                transmitter = Some(i);
            }
        }
        if count != 1 {
            continue;
        }
        let k = transmitter.expect("one transmitter");
        successes[k] += 1;
        let jammed = match jam[k] {
            f if f <= 0.0 => false,
            f if f >= 1.0 => true,
            f => rng.gen::<f64>() < f,
        };
        if !jammed {
            delivered[k] += 1;
        }
    }
    EpisodeTally {
        successes,
        delivered,
        charge,
    }
}

/// Simulates the scenario with users fixed at `actions`, under the rule
/// the scenario resolves to.
pub fn monte_carlo(
    s: &Scenario,
    actions: &ActionProfile,
    cfg: &SimConfig,
) -> Result<EmpiricalOutcome> {
    let rule = resolve_rule(s)?;
    monte_carlo_with_rule(s, rule.as_ref(), actions, cfg)
}

pub fn monte_carlo_with_rule(
    s: &Scenario,
    rule: Option<&Rule>,
    actions: &ActionProfile,
    cfg: &SimConfig,
) -> Result<EmpiricalOutcome> {
    check_len(s.n(), actions.len())?;
    if let Some(r) = rule {
        check_len(s.n(), r.len())?;
    }
    let p = actions.as_slice();
    let epsilons = s.epsilons();
    let noisy = !s.monitoring().is_perfect();

    let tallies: Vec<EpisodeTally> = (0..cfg.episodes)
        .into_par_iter()
        .map(|e| run_episode(e, p, &epsilons, noisy, rule, cfg))
        .collect();

    let slots = cfg.slots_per_episode as f64;
    let count = cfg.episodes;
    let n = s.n();
    let mut throughput = Vec::with_capacity(n);
    let mut extra = Vec::with_capacity(n);
    for i in 0..n {
        throughput.push(Estimate::from_samples(
            tallies.iter().map(move |t| t.delivered[i] as f64 / slots),
            count,
        ));
        extra.push(match rule {
            Some(Rule::Pricing(_)) => {
                Estimate::from_samples(tallies.iter().map(move |t| t.charge[i]), count)
            }
            Some(Rule::Intervention(_)) => jam_rate(&tallies, i),
            None => Estimate {
                mean: 0.0,
                std_error: 0.0,
            },
        });
    }

    let utility: Vec<f64> = s
        .users()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let charge = if matches!(rule, Some(Rule::Pricing(_))) {
                extra[i].mean
            } else {
                0.0
            };
            base_utility(u.theta(), throughput[i].mean) - charge
        })
        .collect();
    Ok(EmpiricalOutcome {
        actions: actions.clone(),
        social_welfare: extended_sum(&utility),
        total_throughput: throughput.iter().map(|t| t.mean).sum(),
        throughput,
        charge_or_intervention: extra,
        utility,
        config: *cfg,
    })
}

/// Ratio estimator `sum(jammed) / sum(successes)` with a delta-method
/// standard error over episodes.
fn jam_rate(tallies: &[EpisodeTally], i: usize) -> Estimate {
    let jammed: Vec<f64> = tallies
        .iter()
        .map(|t| (t.successes[i] - t.delivered[i]) as f64)
        .collect();
    let succ: Vec<f64> = tallies.iter().map(|t| t.successes[i] as f64).collect();
    let total_succ: f64 = succ.iter().sum();
    if total_succ == 0.0 {
        return Estimate {
            mean: 0.0,
            std_error: 0.0,
        };
    }
    let ratio = jammed.iter().sum::<f64>() / total_succ;
    let m = tallies.len() as f64;
    let mean_succ = total_succ / m;
    let resid_var = if tallies.len() > 1 {
        jammed
            .iter()
            .zip(&succ)
            .map(|(j, s)| (j - ratio * s).powi(2))
            .sum::<f64>()
            / (m - 1.0)
    } else {
        0.0
    };
    Estimate {
        mean: ratio,
        std_error: (resid_var / m).sqrt() / mean_succ,
    }
}
