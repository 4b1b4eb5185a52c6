//! JSON scenario files.

use std::path::Path;

use aloha_incentives::model::{
    ActionProfile, Awareness, InterventionRule, Monitoring, PricingRule, Rule, Scenario, Scheme,
    Slope, User,
};
use aloha_incentives::sim::SimConfig;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub users: UsersSpec,
    pub scheme: SchemeName,
    pub monitoring: MonitoringName,
    #[serde(default)]
    pub awareness: Option<AwarenessName>,
    #[serde(default)]
    pub rule: Option<RuleSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub sim: Option<SimSpec>,
    /// Fixed action profile for `equilibrium` and `simulate`; the
    /// equilibrium is used when absent.
    #[serde(default)]
    pub actions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum UsersSpec {
    List(Vec<UserSpec>),
    Uniform(UniformUsers),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub theta: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformUsers {
    pub theta_uniform: f64,
    pub epsilon_uniform: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    None,
    Pricing,
    Intervention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonitoringName {
    Perfect,
    Imperfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AwarenessName {
    Nobody,
    Designer,
    Everybody,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RuleSpec {
    Pricing(PricesSpec),
    Intervention(InterventionSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricesSpec {
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSpec {
    pub targets: Vec<f64>,
    pub slopes: Vec<SlopeSpec>,
}

/// A finite slope, or the string `"inf"` for the extreme rule.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SlopeSpec {
    Finite(f64),
    Named(String),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n_from: usize,
    pub n_to: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub episodes: u64,
    pub slots: u64,
    pub seed: u64,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::None => Scheme::None,
            SchemeName::Pricing => Scheme::Pricing,
            SchemeName::Intervention => Scheme::Intervention,
        }
    }
}

impl From<AwarenessName> for Awareness {
    fn from(a: AwarenessName) -> Self {
        match a {
            AwarenessName::Nobody => Awareness::Nobody,
            AwarenessName::Designer => Awareness::Designer,
            AwarenessName::Everybody => Awareness::Everybody,
        }
    }
}

impl RuleSpec {
    pub fn to_rule(&self) -> Result<Rule, CliError> {
        Ok(match self {
            RuleSpec::Pricing(p) => Rule::Pricing(PricingRule::new(p.prices.clone())?),
            RuleSpec::Intervention(i) => {
                let slopes = i
                    .slopes
                    .iter()
                    .map(|s| match s {
                        SlopeSpec::Finite(r) => Ok(Slope::Finite(*r)),
                        SlopeSpec::Named(name) if name == "inf" => Ok(Slope::Extreme),
                        SlopeSpec::Named(name) => Err(CliError::Config(format!(
                            "slope must be a number or \"inf\", got {name:?}"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Rule::Intervention(InterventionRule::new(i.targets.clone(), slopes)?)
            }
        })
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ConfigFile =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.scenario()?;
        if let Some(s) = cfg.sweep {
            if s.n_from == 0 || s.n_from > s.n_to {
                return Err(CliError::Config(format!(
                    "sweep range {}..={} is empty or starts at zero",
                    s.n_from, s.n_to
                )));
            }
        }
        if let Some(s) = cfg.sim {
            SimConfig::new(s.episodes, s.slots, s.seed)?;
        }
        cfg.fixed_actions()?;
        Ok(cfg)
    }

    pub fn monitoring(&self) -> Result<Monitoring, CliError> {
        match (self.monitoring, self.awareness) {
            (MonitoringName::Perfect, None) => Ok(Monitoring::Perfect),
            (MonitoringName::Perfect, Some(_)) => Err(CliError::Config(
                "awareness only applies to imperfect monitoring".into(),
            )),
            (MonitoringName::Imperfect, Some(a)) => Ok(Monitoring::Imperfect(a.into())),
            (MonitoringName::Imperfect, None) => Err(CliError::Config(
                "imperfect monitoring needs an awareness".into(),
            )),
        }
    }

    pub fn users(&self) -> Result<Vec<User>, CliError> {
        Ok(match &self.users {
            UsersSpec::List(list) => list
                .iter()
                .map(|u| User::new(u.theta, u.epsilon))
                .collect::<Result<_, _>>()?,
            UsersSpec::Uniform(u) => {
                vec![User::new(u.theta_uniform, u.epsilon_uniform)?; u.n]
            }
        })
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let rule = self.rule.as_ref().map(RuleSpec::to_rule).transpose()?;
        Ok(Scenario::new(
            self.users()?,
            self.scheme.into(),
            self.monitoring()?,
            rule,
        )?)
    }

    /// Common `(theta, epsilon)` of a symmetric population.
    pub fn symmetric(&self) -> Result<(f64, f64), CliError> {
        let users = self.users()?;
        let first = users
            .first()
            .ok_or_else(|| CliError::Config("at least one user is required".into()))?;
        if users.iter().any(|u| u != first) {
            return Err(CliError::Config(
                "this command needs identical users".into(),
            ));
        }
        Ok((first.theta(), first.epsilon()))
    }

    pub fn fixed_actions(&self) -> Result<Option<ActionProfile>, CliError> {
        let Some(a) = &self.actions else {
            return Ok(None);
        };
        let n = self.users()?.len();
        if a.len() != n {
            return Err(CliError::Config(format!(
                "{} actions for {n} users",
                a.len()
            )));
        }
        Ok(Some(ActionProfile::new(a.clone())?))
    }

    pub fn sim_config(&self, seed: Option<u64>) -> Result<SimConfig, CliError> {
        let s = self
            .sim
            .ok_or_else(|| CliError::Config("a sim block is required".into()))?;
        Ok(SimConfig::new(s.episodes, s.slots, seed.unwrap_or(s.seed))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_users() {
        let cfg = ConfigFile::parse(
            r#"{"users": {"theta_uniform": 1, "epsilon_uniform": 0.1, "n": 4},
                "scheme": "pricing", "monitoring": "imperfect", "awareness": "designer"}"#,
        )
        .unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.n(), 4);
        assert_eq!(s.monitoring(), Monitoring::Imperfect(Awareness::Designer));
        assert_eq!(cfg.symmetric().unwrap(), (1.0, 0.1));
    }

    #[test]
    fn extreme_slopes_parse() {
        let cfg = ConfigFile::parse(
            r#"{"users": [{"theta": 1, "epsilon": 0.1}, {"theta": 2, "epsilon": 0.05}],
                "scheme": "intervention", "monitoring": "perfect",
                "rule": {"targets": [0.3, 0.5], "slopes": ["inf", 2.5]}}"#,
        )
        .unwrap();
        match cfg.scenario().unwrap().rule_override().unwrap() {
            Rule::Intervention(r) => assert_eq!(r.slopes(), &[Slope::Extreme, Slope::Finite(2.5)]),
            _ => panic!("expected an intervention rule"),
        }
        assert!(cfg.symmetric().is_err());
    }

    #[test]
    fn rejects_bad_documents() {
        let bad = [
            r#"{"users": [], "scheme": "none", "monitoring": "perfect", "extra": 1}"#,
            r#"{"users": [{"theta": 1}], "scheme": "none", "monitoring": "perfect"}"#,
            r#"{"users": [{"theta": 1, "epsilon": 0.1}], "scheme": "none", "monitoring": "imperfect"}"#,
            r#"{"users": [{"theta": 1, "epsilon": 0.1}], "scheme": "none", "monitoring": "perfect", "awareness": "nobody"}"#,
            r#"{"users": [{"theta": 1, "epsilon": 0.1}], "scheme": "intervention", "monitoring": "perfect",
                "rule": {"targets": [0.3], "slopes": ["infinite"]}}"#,
            r#"{"users": [{"theta": 1, "epsilon": 0.1}], "scheme": "pricing", "monitoring": "perfect",
                "rule": {"prices": [1, 2]}}"#,
            r#"{"users": [{"theta": 1, "epsilon": 0.1}], "scheme": "none", "monitoring": "perfect",
                "sweep": {"n_from": 5, "n_to": 2}}"#,
            r#"{"users": [{"theta": 1, "epsilon": 0.1}], "scheme": "none", "monitoring": "perfect",
                "actions": [0.5, 0.5]}"#,
            r#"{"users": [{"theta": 1, "epsilon": 0.4}], "scheme": "none", "monitoring": "perfect"}"#,
        ];
        for doc in bad {
            assert!(
                matches!(ConfigFile::parse(doc), Err(CliError::Config(_))),
                "{doc}"
            );
        }
    }
}
