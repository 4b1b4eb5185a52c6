//! Tables behind the nine welfare/throughput figures. Every recipe uses
//! identical users with `theta = 1`.

use std::ops::RangeInclusive;

use aloha_incentives::design::{SearchGrid, SymmetricSearch};
use aloha_incentives::evaluation::{evaluate_scenario, find_threshold};
use aloha_incentives::model::{
    optimal_profile, social_welfare, throughput, Awareness, Monitoring, Scenario, Scheme,
};

use crate::commands::{grid_description, monitoring_labels, outcome_row, DEFAULT_THRESHOLD_LIMIT};
use crate::error::CliError;
use crate::table::{num, results_table, ResultRow, Table};

pub const THETA: f64 = 1.0;
pub const EPSILON: f64 = 0.1;
pub const DEFAULT_USERS: RangeInclusive<usize> = 2..=20;

const PERFECT: Monitoring = Monitoring::Perfect;
const NOBODY: Monitoring = Monitoring::Imperfect(Awareness::Nobody);
const DESIGNER: Monitoring = Monitoring::Imperfect(Awareness::Designer);
const EVERYBODY: Monitoring = Monitoring::Imperfect(Awareness::Everybody);
const ALL_REGIMES: [Monitoring; 4] = [PERFECT, NOBODY, DESIGNER, EVERYBODY];

fn cooperative_row(n: usize) -> Result<ResultRow, CliError> {
    let thetas = vec![THETA; n];
    let p = optimal_profile(&thetas)?;
    let total = (0..n).map(|i| throughput(&p, i)).sum::<Result<f64, _>>()?;
    Ok(ResultRow {
        n,
        scheme: "cooperative".into(),
        monitoring: monitoring_labels(PERFECT).0,
        awareness: String::new(),
        social_welfare: social_welfare(&p, &thetas)?,
        total_throughput: total,
        actions: p.into_inner(),
        charge_or_intervention: vec![0.0; n],
        seed: None,
    })
}

fn scheme_row(n: usize, scheme: Scheme, monitoring: Monitoring) -> Result<ResultRow, CliError> {
    let s = Scenario::symmetric(n, THETA, EPSILON, scheme, monitoring)?;
    Ok(outcome_row(
        &scheme.to_string(),
        monitoring,
        &evaluate_scenario(&s)?,
        None,
    ))
}

fn welfare_figure(
    users: RangeInclusive<usize>,
    cooperative: bool,
    cases: &[(Scheme, Monitoring)],
) -> Result<Vec<ResultRow>, CliError> {
    let mut rows = Vec::new();
    for n in users {
        if cooperative {
            rows.push(cooperative_row(n)?);
        }
        for &(scheme, monitoring) in cases {
            rows.push(scheme_row(n, scheme, monitoring)?);
        }
    }
    Ok(rows)
}

fn search_rows(users: RangeInclusive<usize>) -> Result<Vec<ResultRow>, CliError> {
    let search = SymmetricSearch::new(THETA, EPSILON, &SearchGrid::default())?;
    let mut rows = Vec::new();
    for n in users {
        rows.push(scheme_row(n, Scheme::Intervention, EVERYBODY)?);
        let r = search.best_for(n)?;
        let b = r.best;
        let per_user =
            b.action * (1.0 - b.intervention_level) * (1.0 - b.action).powi(n as i32 - 1);
        let (monitoring, awareness) = monitoring_labels(EVERYBODY);
        rows.push(ResultRow {
            n,
            scheme: "intervention-optimal".into(),
            monitoring,
            awareness,
            social_welfare: r.welfare,
            total_throughput: n as f64 * per_user,
            actions: vec![b.action; n],
            charge_or_intervention: vec![b.intervention_level; n],
            seed: None,
        });
    }
    Ok(rows)
}

fn range_text(users: &RangeInclusive<usize>) -> String {
    format!("n = {}..{}", users.start(), users.end())
}

/// Threshold by noise level, `epsilon = 0.01, 0.02, ..., 0.20`.
fn threshold_table() -> Result<Table, CliError> {
    let mut table = Table::new([
        "epsilon",
        "threshold",
        "first_pricing_win",
        "reference_value",
    ]);
    table
        .comment("figure 5: threshold vs noise half-width, everybody aware of the noise")
        .comment("threshold: largest n at which intervention welfare is at least pricing welfare")
        .comment(format!(
            "theta = {}; reference_value lists the published threshold where one exists",
            num(THETA)
        ));
    for k in 1..=20 {
        let eps = k as f64 / 100.0;
        let t = find_threshold(THETA, eps, DEFAULT_THRESHOLD_LIMIT)?;
        let reference = match k {
            10 => "15",
            20 => "9",
            _ => "",
        };
        let opt = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_else(|| "none".into());
        table.push(vec![
            num(eps),
            opt(t.last_intervention_win()),
            opt(t.first_pricing_win),
            reference.into(),
        ]);
    }
    Ok(table)
}

pub fn figure(id: u8, users: Option<RangeInclusive<usize>>) -> Result<String, CliError> {
    let users = users.unwrap_or(DEFAULT_USERS);
    let both = |m| [(Scheme::Pricing, m), (Scheme::Intervention, m)];
    let (rows, comments): (Vec<ResultRow>, Vec<String>) = match id {
        1 => (
            welfare_figure(users.clone(), true, &both(PERFECT))?,
            vec!["figure 1: social welfare and total throughput vs users, perfect monitoring".into()],
        ),
        2 => (
            welfare_figure(users.clone(), true, &both(NOBODY))?,
            vec!["figure 2: imperfect monitoring, nobody aware of the noise".into()],
        ),
        3 => (
            welfare_figure(users.clone(), true, &both(DESIGNER))?,
            vec!["figure 3: imperfect monitoring, only the designer aware of the noise".into()],
        ),
        4 => (
            welfare_figure(users.clone(), true, &both(EVERYBODY))?,
            vec!["figure 4: imperfect monitoring, everybody aware of the noise".into()],
        ),
        5 => return Ok(threshold_table()?.render()),
        6 => (
            welfare_figure(users.clone(), false, &ALL_REGIMES.map(|m| (Scheme::Pricing, m)))?,
            vec!["figure 6: pricing under every monitoring regime".into()],
        ),
        7 => (
            welfare_figure(users.clone(), false, &ALL_REGIMES.map(|m| (Scheme::Intervention, m)))?,
            vec!["figure 7: intervention under every monitoring regime".into()],
        ),
        8 | 9 => (
            search_rows(users.clone())?,
            vec![
                if id == 8 {
                    "figure 8: actions and mean intervention level, extreme design vs best affine rule".into()
                } else {
                    "figure 9: social welfare and total throughput, extreme design vs best affine rule".into()
                },
                "intervention rows use the extreme design; intervention-optimal rows come from exhaustive search".into(),
                grid_description(&SearchGrid::default()),
            ],
        ),
        _ => return Err(CliError::Config(format!("figure id must be 1..9, got {id}"))),
    };
    let mut table = results_table(&rows);
    for c in comments {
        table.comment(c);
    }
    table.comment(format!(
        "theta = {}, epsilon = {}, {}",
        num(THETA),
        num(EPSILON),
        range_text(&users)
    ));
    if matches!(id, 1..=4) {
        table.comment(
            "cooperative rows: every user at its welfare-optimal share, no incentive cost",
        );
    }
    Ok(table.render())
}
