//! TOML configuration files.
//!
//! ```toml
//! name = "reduced1"
//! locks = ["north"]
//! orientations = ["east"]
//! include_barrier = true
//!
//! [checker]
//! stable_state_ceiling = 4194304
//!
//! [faults]
//! sensor_fail = 0.001
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::checker::Limits;
use crate::domain::{LockId, Orientation, PlantConfig, StreamSide};
use crate::sim::FaultProfile;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Missing {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    name: Option<String>,
    locks: Vec<String>,
    stream_sides: Option<Vec<String>>,
    orientations: Vec<String>,
    include_barrier: bool,
    #[serde(default)]
    checker: RawChecker,
    #[serde(default)]
    faults: FaultProfile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChecker {
    stable_state_ceiling: Option<u64>,
    max_states: Option<u64>,
    memory_budget_mb: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub name: String,
    pub plant: PlantConfig,
    pub limits: Limits,
    pub faults: FaultProfile,
}

fn parse_all<T: FromStr>(items: &[String]) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    items
        .iter()
        .map(|s| s.parse().map_err(|e: T::Err| ConfigError::Invalid(e.to_string())))
        .collect()
}

impl Config {
    fn builtin(name: &str, plant: PlantConfig) -> Config {
        Config {
            name: name.to_string(),
            plant,
            limits: Limits::default(),
            faults: FaultProfile::default(),
        }
    }

    /// `full`, `reduced` (also `reduced1`) or a path to a TOML file.
    pub fn resolve(spec: &str) -> Result<Config, ConfigError> {
        match spec {
            "full" => Ok(Config::builtin("full", PlantConfig::full())),
            "reduced" | "reduced1" => Ok(Config::builtin(spec, PlantConfig::reduced())),
            path => Config::load(Path::new(path)),
        }
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Missing {
            path: path.to_path_buf(),
            source,
        })?;
        let mut c: Config = text.parse()?;
        if c.name.is_empty() {
            c.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(c)
    }
}

impl FromStr for Config {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let raw: Raw = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.message().to_string()))?;
        let locks: Vec<LockId> = parse_all(&raw.locks)?;
        let sides: Vec<StreamSide> = match &raw.stream_sides {
            Some(s) => parse_all(s)?,
            None => StreamSide::ALL.to_vec(),
        };
        let orientations: Vec<Orientation> = parse_all(&raw.orientations)?;
        let plant = PlantConfig::new(&locks, &sides, &orientations, raw.include_barrier)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        raw.faults.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let d = Limits::default();
        Ok(Config {
            name: raw.name.unwrap_or_default(),
            plant,
            limits: Limits {
                stable_state_ceiling: raw.checker.stable_state_ceiling.unwrap_or(d.stable_state_ceiling),
                max_states: raw.checker.max_states.or(d.max_states),
                memory_budget_mb: raw.checker.memory_budget_mb.or(d.memory_budget_mb),
            },
            faults: raw.faults,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_file_matches_builtin() {
        let c: Config = "name = \"r\"\nlocks = [\"north\"]\norientations = [\"east\"]\ninclude_barrier = true\n\
            [checker]\nstable_state_ceiling = 1000\n[faults]\nrepair = 0.5\n"
            .parse()
            .unwrap();
        assert_eq!(c.plant, PlantConfig::reduced());
        assert_eq!(c.limits.stable_state_ceiling, 1000);
        assert_eq!(c.faults.repair, 0.5);
    }

    #[test]
    fn rejects() {
        for text in [
            "locks = [\"north\"]\norientations = [\"east\"]\ninclude_barrier = true\ncolour = 1",
            "locks = [\"middle\"]\norientations = [\"east\"]\ninclude_barrier = true",
            "locks = []\norientations = [\"east\"]\ninclude_barrier = true",
            "locks = [\"north\"]\norientations = [\"east\"]\ninclude_barrier = true\n[faults]\nrepair = 2.0",
            "locks = [\"north\"]\norientations = [\"east\"]",
        ] {
            assert!(matches!(text.parse::<Config>(), Err(ConfigError::Invalid(_))), "{text}");
        }
        assert!(matches!(
            Config::resolve("/nonexistent/x.toml"),
            Err(ConfigError::Missing { .. })
        ));
        assert_eq!(Config::resolve("reduced1").unwrap().plant, PlantConfig::reduced());
    }
}
