use aloha_incentives::design::{SearchGrid, SymmetricSearch};
use aloha_incentives::equilibrium::{verify_ne, GameSpec, Perception};
use aloha_incentives::evaluation::{
    design_for, equilibrium_actions, evaluate_at, evaluate_full, find_threshold, resolve_rule,
    sweep_users, SweepRow,
};
use aloha_incentives::model::{Monitoring, Outcome, Rule, Slope};
use aloha_incentives::sim::monte_carlo_with_rule;
use aloha_incentives::RootRecord;
use serde_json::{json, Value};

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::table::{num, results_table, ResultRow, Table};

/// Largest user count the threshold search tries by default.
pub const DEFAULT_THRESHOLD_LIMIT: usize = 2000;

pub fn monitoring_labels(m: Monitoring) -> (String, String) {
    match m {
        Monitoring::Perfect => ("perfect".into(), String::new()),
        Monitoring::Imperfect(a) => ("imperfect".into(), a.to_string()),
    }
}

pub fn outcome_row(
    scheme: &str,
    monitoring: Monitoring,
    o: &Outcome,
    seed: Option<u64>,
) -> ResultRow {
    let (monitoring, awareness) = monitoring_labels(monitoring);
    ResultRow {
        n: o.actions.len(),
        scheme: scheme.into(),
        monitoring,
        awareness,
        social_welfare: o.social_welfare,
        total_throughput: o.total_throughput,
        actions: o.actions.as_slice().to_vec(),
        charge_or_intervention: o.charge_or_intervention.clone(),
        seed,
    }
}

pub fn sweep_row(r: &SweepRow) -> ResultRow {
    let (monitoring, awareness) = monitoring_labels(r.monitoring);
    ResultRow {
        n: r.n,
        scheme: r.scheme.to_string(),
        monitoring,
        awareness,
        social_welfare: r.social_welfare,
        total_throughput: r.total_throughput,
        actions: r.actions.clone(),
        charge_or_intervention: r.charge_or_intervention.clone(),
        seed: None,
    }
}

/// JSON form of a rule, in the shape the config's `rule` key accepts.
pub fn rule_json(rule: &Rule) -> Value {
    match rule {
        Rule::Pricing(r) => json!({ "prices": r.prices() }),
        Rule::Intervention(r) => {
            let slopes: Vec<Value> = r
                .slopes()
                .iter()
                .map(|s| match s {
                    Slope::Finite(x) => json!(x),
                    Slope::Extreme => json!("inf"),
                })
                .collect();
            json!({ "targets": r.targets(), "slopes": slopes })
        }
    }
}

fn root_json(r: &Option<RootRecord>) -> Value {
    match r {
        None => Value::Null,
        Some(r) => json!({
            "name": r.name,
            "value": r.value,
            "bracket": [r.bracket.0, r.bracket.1],
            "residual": r.residual,
        }),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn design(cfg: &ConfigFile) -> Result<String, CliError> {
    let s = cfg.scenario()?;
    let (monitoring, awareness) = monitoring_labels(s.monitoring());
    let mut doc = json!({
        "scheme": s.scheme().to_string(),
        "monitoring": monitoring,
        "awareness": awareness,
        "rule": null,
        "branches": [],
        "roots": [],
    });
    if let Some(d) = design_for(s.users(), s.scheme(), s.monitoring())? {
        doc["rule"] = rule_json(&d.rule());
        doc["branches"] = d.branches().iter().map(|b| json!(b.to_string())).collect();
        doc["roots"] = d.roots().iter().map(root_json).collect();
    }
    Ok(pretty(&doc))
}

pub fn equilibrium(cfg: &ConfigFile) -> Result<String, CliError> {
    let s = cfg.scenario()?;
    let rule = resolve_rule(&s)?;
    let actions = match cfg.fixed_actions()? {
        Some(a) => a,
        None => equilibrium_actions(&s, rule.as_ref())?,
    };
    let perception = if s.monitoring().users_aware() {
        Perception::Imperfect
    } else {
        Perception::Perfect
    };
    let spec = GameSpec::new(s.thetas(), s.epsilons(), rule.clone(), perception)?;
    let check = verify_ne(&spec, &actions, 1e-6)?;
    Ok(pretty(&json!({
        "rule": rule.as_ref().map(rule_json),
        "actions": actions.as_slice(),
        "max_gain": check.max_gain,
        "worst_user": check.worst_user,
        "certified": check.certified,
    })))
}

pub fn evaluate(cfg: &ConfigFile) -> Result<String, CliError> {
    let s = cfg.scenario()?;
    let outcome = match cfg.fixed_actions()? {
        Some(a) => evaluate_at(&s, resolve_rule(&s)?.as_ref(), &a)?,
        None => evaluate_full(&s)?.outcome,
    };
    let row = outcome_row(&s.scheme().to_string(), s.monitoring(), &outcome, None);
    Ok(results_table(&[row]).render())
}

fn no_override(cfg: &ConfigFile, command: &str) -> Result<(), CliError> {
    if cfg.rule.is_some() || cfg.actions.is_some() {
        return Err(CliError::Config(format!(
            "{command} varies the user count, so rule and actions overrides do not apply"
        )));
    }
    Ok(())
}

pub fn sweep(cfg: &ConfigFile) -> Result<String, CliError> {
    no_override(cfg, "sweep")?;
    let (theta, eps) = cfg.symmetric()?;
    let range = cfg
        .sweep
        .ok_or_else(|| CliError::Config("a sweep block is required".into()))?;
    let s = cfg.scenario()?;
    let rows = sweep_users(
        range.n_from..=range.n_to,
        theta,
        eps,
        s.scheme(),
        s.monitoring(),
    )?;
    let rows: Vec<ResultRow> = rows.iter().map(sweep_row).collect();
    Ok(results_table(&rows).render())
}

pub fn threshold(cfg: &ConfigFile) -> Result<String, CliError> {
    let (theta, eps) = cfg.symmetric()?;
    let n_max = cfg.sweep.map(|s| s.n_to).unwrap_or(DEFAULT_THRESHOLD_LIMIT);
    let t = find_threshold(theta, eps, n_max)?;
    let mut table = Table::new([
        "theta",
        "epsilon",
        "threshold",
        "first_pricing_win",
        "n_max",
    ]);
    let opt = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_else(|| "none".into());
    table.push(vec![
        num(theta),
        num(eps),
        opt(t.last_intervention_win()),
        opt(t.first_pricing_win),
        n_max.to_string(),
    ]);
    Ok(table.render())
}

pub fn grid_description(grid: &SearchGrid) -> String {
    let ms: Vec<String> = grid.slope_multipliers.iter().map(|m| num(*m)).collect();
    format!(
        "search grid: targets k*{} on (0, 1); slopes m/target for m in {{{}}}{}",
        num(grid.target_step),
        ms.join(", "),
        if grid.include_extreme {
            " plus the extreme rule"
        } else {
            ""
        }
    )
}

pub fn search(cfg: &ConfigFile) -> Result<String, CliError> {
    if cfg.rule.is_some() || cfg.actions.is_some() {
        return Err(CliError::Config(
            "search does not take rule or actions overrides".into(),
        ));
    }
    let (theta, eps) = cfg.symmetric()?;
    let ns = match cfg.sweep {
        Some(s) => s.n_from..=s.n_to,
        None => {
            let n = cfg.users()?.len();
            n..=n
        }
    };
    let grid = SearchGrid::default();
    let search = SymmetricSearch::new(theta, eps, &grid)?;
    let mut table = Table::new([
        "n",
        "target",
        "slope",
        "action",
        "intervention_level",
        "per_user_welfare",
        "social_welfare",
        "total_throughput",
    ]);
    table
        .comment(format!(
            "theta = {}, epsilon = {}, everybody aware of the noise",
            num(theta),
            num(eps)
        ))
        .comment(grid_description(&grid));
    for n in ns {
        let r = search.best_for(n)?;
        let b = r.best;
        let per_user_throughput =
            b.action * (1.0 - b.intervention_level) * (1.0 - b.action).powi(n as i32 - 1);
        table.push(vec![
            n.to_string(),
            num(b.target),
            b.slope.to_string(),
            num(b.action),
            num(b.intervention_level),
            num(r.per_user_welfare),
            num(r.welfare),
            num(n as f64 * per_user_throughput),
        ]);
    }
    Ok(table.render())
}

pub fn simulate(cfg: &ConfigFile, seed: Option<u64>) -> Result<String, CliError> {
    let s = cfg.scenario()?;
    let sim = cfg.sim_config(seed)?;
    let rule = resolve_rule(&s)?;
    let actions = match cfg.fixed_actions()? {
        Some(a) => a,
        None => equilibrium_actions(&s, rule.as_ref())?,
    };
    let exact = evaluate_at(&s, rule.as_ref(), &actions)?;
    let emp = monte_carlo_with_rule(&s, rule.as_ref(), &actions, &sim)?;

    let n = s.n();
    let base = ResultRow {
        social_welfare: emp.social_welfare,
        total_throughput: emp.total_throughput,
        charge_or_intervention: emp.charge_or_intervention.iter().map(|e| e.mean).collect(),
        ..outcome_row(
            &s.scheme().to_string(),
            s.monitoring(),
            &exact,
            Some(sim.seed),
        )
    };
    let mut table = results_table(&[base]);
    let mut extra_header = Vec::new();
    let mut extra = Vec::new();
    let mut per_user = |name: &str, values: Vec<f64>| {
        for (i, v) in values.into_iter().enumerate() {
            extra_header.push(format!("{name}_user{i}"));
            extra.push(num(v));
        }
    };
    per_user(
        "throughput",
        emp.throughput.iter().map(|e| e.mean).collect(),
    );
    per_user(
        "throughput_se",
        emp.throughput.iter().map(|e| e.std_error).collect(),
    );
    per_user(
        "charge_or_intervention_se",
        emp.charge_or_intervention
            .iter()
            .map(|e| e.std_error)
            .collect(),
    );
    per_user("analytic_throughput", exact.throughput.clone());
    per_user(
        "analytic_charge_or_intervention",
        exact.charge_or_intervention.clone(),
    );
    let within = (0..n).all(|i| {
        emp.throughput[i].agrees_with(exact.throughput[i], 4.0)
            && emp.charge_or_intervention[i].agrees_with(exact.charge_or_intervention[i], 4.0)
    });
    extra_header.extend(
        [
            "analytic_social_welfare",
            "analytic_total_throughput",
            "episodes",
            "slots_per_episode",
            "within_4se",
        ]
        .map(String::from),
    );
    extra.extend([
        num(exact.social_welfare),
        num(exact.total_throughput),
        sim.episodes.to_string(),
        sim.slots_per_episode.to_string(),
        within.to_string(),
    ]);
    table.header.extend(extra_header);
    table.rows[0].extend(extra);
    table.comment(
        "empirical values come first; analytic_* columns hold the exact expectations at the same actions",
    );
    table.comment("generator: ChaCha8, one stream per episode keyed by the seed");
    Ok(table.render())
}
