use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::money::Money;

/// The shipped scenario registry.
pub const DEFAULT_REGISTRY: &str = include_str!("../../data/scenarios.cfg");

/// A bundled three-matchday mini season with one season of history, for
/// tests and demos. Its own `scenarios.cfg` registers "Mini Season".
pub const MINI_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/mini");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub season_id: String,
    pub initial_bankroll: Money,
    pub expected_matchdays: u32,
    pub split: Split,
}

/// Scenarios parsed from a plain-text registry: one comma-separated
/// `name, season, bankroll, matchdays, split` row per line, `#` comments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioRegistry {
    scenarios: Vec<ScenarioSpec>,
}

impl FromStr for ScenarioRegistry {
    type Err = DatasetError;

    fn from_str(text: &str) -> Result<Self, DatasetError> {
        let mut scenarios: Vec<ScenarioSpec> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| DatasetError::Registry { line, message };
            let fields: Vec<&str> = content.split(',').map(str::trim).collect();
            let [name, season, bankroll, matchdays, split] = fields[..] else {
                return Err(err(format!("expected 5 fields, found {}", fields.len())));
            };
            let initial_bankroll: Money = bankroll
                .parse()
                .map_err(|e| err(format!("bankroll: {e}")))?;
            if initial_bankroll <= Money::ZERO {
                return Err(err("initial bankroll must be positive".into()));
            }
            let expected_matchdays: u32 = matchdays
                .parse()
                .ok()
                .filter(|&m| m > 0)
                .ok_or_else(|| err(format!("matchdays must be a positive count, got {matchdays:?}")))?;
            let split = match split.to_ascii_lowercase().as_str() {
                "train" => Split::Train,
                "test" => Split::Test,
                other => return Err(err(format!("split must be train or test, got {other:?}"))),
            };
            if name.is_empty() || scenarios.iter().any(|s| s.name == name) {
                return Err(err(format!("empty or duplicate scenario name {name:?}")));
            }
            scenarios.push(ScenarioSpec {
                name: name.to_string(),
                season_id: season.to_string(),
                initial_bankroll,
                expected_matchdays,
                split,
            });
        }
        Ok(ScenarioRegistry { scenarios })
    }
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        DEFAULT_REGISTRY
            .parse()
            .expect("bundled scenario registry is valid")
    }
}

impl ScenarioRegistry {
    pub fn scenarios(&self) -> &[ScenarioSpec] {
        &self.scenarios
    }

    pub fn names(&self) -> Vec<String> {
        self.scenarios.iter().map(|s| s.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&ScenarioSpec, DatasetError> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| DatasetError::UnknownScenario {
                name: name.to_string(),
                registered: self.names(),
            })
    }
}

/// Looks a scenario up in the shipped registry.
pub fn scenario_config(name: &str) -> Result<ScenarioSpec, DatasetError> {
    ScenarioRegistry::default().get(name).cloned()
}
