//! TOML scenario files.
//!
//! ```toml
//! [system]
//! topology = "series"
//! components = [{ family = "weibull", lambda = 0.4, alpha = 2.5, count = 2 }]
//!
//! [system.copula]
//! family = "gumbel_hougaard"
//! theta = 2.0
//!
//! [costs]
//! c_f = 100.0
//! c_p = 5.0          # scalar broadcasts to every component
//! c_d1 = 0.0
//! c_d2 = 0.0
//!
//! [policy]
//! kind = "age"       # or "periodic" with tau
//! deviation = false
//!
//! [mc]
//! cycles = 1000000
//! seed = 20240917
//! ```
//!
//! Validation failures name the offending field by its dotted path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::copulas::{CopulaFamily, CopulaModel};
use crate::cost_models::CostParams;
use crate::lifetimes::{LifetimeFamily, LifetimeModel};
use crate::systems::{SystemSpec, Topology};

pub const DEFAULT_MC_CYCLES: u64 = 1_000_000;
pub const DEFAULT_MC_SEED: u64 = 20_240_917;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    Syntax(String),
    #[error("invalid scenario field `{field}`: {source}")]
    Field {
        field: String,
        #[source]
        source: crate::error::Error,
    },
}

fn field(name: impl Into<String>) -> impl FnOnce(crate::error::Error) -> ScenarioError {
    let field = name.into();
    move |source| ScenarioError::Field { field, source }
}

// ---- file representation ----------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSection,
    pub costs: CostSection,
    pub policy: PolicySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub topology: Topology,
    pub components: Vec<ComponentEntry>,
    pub copula: CopulaSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentEntry {
    pub family: LifetimeFamily,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaSection {
    pub family: CopulaFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PreventiveCost {
    Scalar(f64),
    PerComponent(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub c_f: f64,
    pub c_p: PreventiveCost,
    #[serde(default)]
    pub c_d1: f64,
    #[serde(default)]
    pub c_d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKindName {
    Age,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: PolicyKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub deviation: bool,
    /// Fixed replacement age used by `simulate` instead of the optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

// ---- validated model ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicySettings {
    Age { t: Option<f64> },
    Periodic { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub cycles: u64,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            cycles: DEFAULT_MC_CYCLES,
            seed: DEFAULT_MC_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: SystemSpec,
    pub costs: CostParams,
    pub policy: PolicySettings,
    pub deviation: bool,
    pub mc: Option<McSettings>,
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn from_file(f: &ScenarioFile) -> Result<Self, ScenarioError> {
        let mut components = Vec::new();
        if f.system.components.is_empty() {
            return Err(field("system.components")(crate::error::Error::Parameter(
                "at least one component is required".into(),
            )));
        }
        for (i, c) in f.system.components.iter().enumerate() {
            let at = |name: &str| format!("system.components[{i}].{name}");
            let model = match c.family {
                LifetimeFamily::Exponential => {
                    if let Some(a) = c.alpha {
                        if a != 1.0 {
                            return Err(field(at("alpha"))(crate::error::Error::Parameter(format!(
                                "exponential components have shape 1, got {a}"
                            ))));
                        }
                    }
                    LifetimeModel::exponential(c.lambda).map_err(field(at("lambda")))?
                }
                LifetimeFamily::Weibull => {
                    let alpha = c.alpha.ok_or_else(|| {
                        field(at("alpha"))(crate::error::Error::Parameter("Weibull components need a shape".into()))
                    })?;
                    LifetimeModel::weibull(c.lambda, alpha).map_err(|e| {
                        let name = if c.lambda.is_finite() && c.lambda > 0.0 { "alpha" } else { "lambda" };
                        field(at(name))(e)
                    })?
                }
            };
            let count = c.count.unwrap_or(1);
            if count == 0 {
                return Err(field(at("count"))(crate::error::Error::Parameter("count must be >= 1".into())));
            }
            components.extend(std::iter::repeat_n(model, count));
        }
        let n = components.len();
        let cop = &f.system.copula;
        let theta = match (cop.family, cop.theta) {
            (CopulaFamily::Independence, t) => t.unwrap_or(0.0),
            (_, Some(t)) => t,
            (_, None) => {
                return Err(field("system.copula.theta")(crate::error::Error::Parameter(
                    "this copula family needs theta".into(),
                )))
            }
        };
        let copula = CopulaModel::new(cop.family, theta, n).map_err(field("system.copula.theta"))?;
        let system = SystemSpec::new(f.system.topology, components, copula).map_err(field("system"))?;

        let c_p = match &f.costs.c_p {
            PreventiveCost::Scalar(v) => vec![*v; n],
            PreventiveCost::PerComponent(v) if v.len() == n => v.clone(),
            PreventiveCost::PerComponent(v) => {
                return Err(field("costs.c_p")(crate::error::Error::Parameter(format!(
                    "{} entries for {n} components",
                    v.len()
                ))))
            }
        };
        let costs = CostParams::new(f.costs.c_f, c_p, f.costs.c_d1, f.costs.c_d2).map_err(|e| {
            let msg = e.to_string();
            // CostParams messages start with the offending field
            let msg = msg.trim_start_matches("parameter error: ");
            let name = ["c_d1", "c_d2", "c_f"]
                .into_iter()
                .find(|k| msg.starts_with(k))
                .unwrap_or("c_p");
            field(format!("costs.{name}"))(e)
        })?;

        let policy = match f.policy.kind {
            PolicyKindName::Age => {
                if f.policy.tau.is_some() {
                    return Err(field("policy.tau")(crate::error::Error::Parameter(
                        "tau applies to periodic policies only".into(),
                    )));
                }
                if let Some(t) = f.policy.t {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(field("policy.t")(crate::error::Error::Parameter(format!(
                            "T must be finite and > 0, got {t}"
                        ))));
                    }
                }
                PolicySettings::Age { t: f.policy.t }
            }
            PolicyKindName::Periodic => {
                let tau = f.policy.tau.ok_or_else(|| {
                    field("policy.tau")(crate::error::Error::Parameter("periodic policies need tau".into()))
                })?;
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(field("policy.tau")(crate::error::Error::Parameter(format!(
                        "tau must be finite and > 0, got {tau}"
                    ))));
                }
                if f.policy.t.is_some() {
                    return Err(field("policy.t")(crate::error::Error::Parameter(
                        "a fixed age applies to age policies only".into(),
                    )));
                }
                PolicySettings::Periodic { tau }
            }
        };
        let mc = match &f.mc {
            None => None,
            Some(m) => {
                let d = McSettings::default();
                let cycles = m.cycles.unwrap_or(d.cycles);
                if cycles == 0 {
                    return Err(field("mc.cycles")(crate::error::Error::Parameter("cycles must be >= 1".into())));
                }
                Some(McSettings {
                    cycles,
                    seed: m.seed.unwrap_or(d.seed),
                })
            }
        };
        Ok(Self {
            system,
            costs,
            policy,
            deviation: f.policy.deviation,
            mc,
        })
    }

    /// Canonical file form; consecutive identical components are merged.
    pub fn to_file(&self) -> ScenarioFile {
        let mut components: Vec<ComponentEntry> = Vec::new();
        let mut prev: Option<LifetimeModel> = None;
        for c in self.system.components() {
            if prev == Some(*c) {
                let last = components.last_mut().expect("previous entry");
                last.count = Some(last.count.unwrap_or(1) + 1);
                continue;
            }
            components.push(ComponentEntry {
                family: c.family(),
                lambda: c.rate(),
                alpha: match c.family() {
                    LifetimeFamily::Exponential => None,
                    LifetimeFamily::Weibull => Some(c.shape()),
                },
                count: None,
            });
            prev = Some(*c);
        }
        let cop = self.system.copula();
        let c_p = self.costs.c_p();
        let c_p = if c_p.iter().all(|&v| v == c_p[0]) {
            PreventiveCost::Scalar(c_p[0])
        } else {
            PreventiveCost::PerComponent(c_p.to_vec())
        };
        let (kind, tau, t) = match self.policy {
            PolicySettings::Age { t } => (PolicyKindName::Age, None, t),
            PolicySettings::Periodic { tau } => (PolicyKindName::Periodic, Some(tau), None),
        };
        ScenarioFile {
            system: SystemSection {
                topology: self.system.topology(),
                components,
                copula: CopulaSection {
                    family: cop.family(),
                    theta: match cop.family() {
                        CopulaFamily::Independence => None,
                        _ => Some(cop.theta()),
                    },
                },
            },
            costs: CostSection {
                c_f: self.costs.c_f(),
                c_p,
                c_d1: self.costs.c_d1(),
                c_d2: self.costs.c_d2(),
            },
            policy: PolicySection {
                kind,
                tau,
                deviation: self.deviation,
                t,
            },
            mc: self.mc.map(|m| McSection {
                cycles: Some(m.cycles),
                seed: Some(m.seed),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario serialises")
    }
}
