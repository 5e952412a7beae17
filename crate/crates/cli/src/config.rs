use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mondegreen_core::simulator::SimConfig;
use mondegreen_core::{Error, TrainerConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

/// Shared configuration file. Every section and key is optional.
///
/// ```toml
/// [trainer]
/// alpha = 0.5
/// beta = 0.2
/// tau = 2
/// t_window = 60
///
/// [sim]
/// seed = 42
/// n_sessions = 100000
///
/// [paths]
/// logs = "logs.tsv"
/// snapshot = "rewrites.snapshot"
///
/// [serve]
/// listen = "127.0.0.1:8080"
/// ```
///
/// The simulator's `t_window` follows the trainer's unless set explicitly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub trainer: TrainerConfig,
    pub sim: SimConfig,
    pub paths: Paths,
    pub serve: ServeConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Pronouncing lexicon; the bundled one when unset.
    pub lexicon: Option<PathBuf>,
    /// Confusion lexicon for the simulator; the bundled one when unset.
    pub confusions: Option<PathBuf>,
    pub logs: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub listen: String,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            listen: DEFAULT_LISTEN.to_owned(),
        }
    }
}

impl AppConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let sim_sets_window = value
            .get("sim")
            .and_then(|s| s.as_table())
            .is_some_and(|s| s.contains_key("t_window"));
        let mut config: AppConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !sim_sets_window {
            config.sim.t_window = config.trainer.t_window;
        }
        Ok(config)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(AppConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            anyhow::Error::new(e).context(format!("cannot read config file {}", path.display()))
        })?;
        AppConfig::parse(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(AppConfig::parse("").unwrap(), AppConfig::default());
    }

    #[test]
    fn sections_and_window_inheritance() {
        let c = AppConfig::parse(
            "[trainer]\nalpha = 0.6\nbeta = \"0.25\"\nt = 90\n[sim]\nseed = 7\n[paths]\nlogs = \"l.tsv\"\n[serve]\nlisten = \"0.0.0.0:9000\"\n",
        )
        .unwrap();
        assert_eq!(c.trainer.alpha.to_string(), "0.6");
        assert_eq!(c.trainer.beta.to_string(), "0.25");
        assert_eq!(c.trainer.t_window, 90);
        assert_eq!(c.sim.t_window, 90);
        assert_eq!(c.sim.seed, 7);
        assert_eq!(c.paths.logs.as_deref(), Some(Path::new("l.tsv")));
        assert_eq!(c.serve.listen, "0.0.0.0:9000");

        let c = AppConfig::parse("[trainer]\nt_window = 90\n[sim]\nt_window = 45\n").unwrap();
        assert_eq!(c.sim.t_window, 45);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(AppConfig::parse("[trainer]\ngamma = 1\n").is_err());
        assert!(AppConfig::parse("[other]\n").is_err());
        assert!(AppConfig::parse("[trainer]\nalpha = 1.5\n").is_err());
    }
}
