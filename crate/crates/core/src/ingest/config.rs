use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the `era` covariate is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EraRule {
    /// Use an `era` column when present, otherwise derive from `season`.
    #[default]
    Auto,
    /// Always derive from `season`, ignoring any `era` column.
    FromSeason,
    /// Require an `era` column.
    Column,
}

impl EraRule {
    /// Three season bins: ..=2013 -> 0, 2014..=2017 -> 1, 2018.. -> 2.
    pub fn era_of_season(season: i32) -> i32 {
        match season {
            ..=2013 => 0,
            2014..=2017 => 1,
            _ => 2,
        }
    }
}

/// Ingestion options, read from a TOML file.
///
/// ```toml
/// exclude_play_types = ["other"]
/// era = "auto"
/// other_play_types = ["no_play", "punt", "qb_kneel"]
///
/// [rename]
/// posteam = "offense_team"   # canonical name = source column name
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Canonical column name -> column name in the source file.
    pub rename: BTreeMap<String, String>,
    /// Play types ("pass", "run", "other") dropped after parsing.
    pub exclude_play_types: Vec<String>,
    /// Source play-type tokens folded into `other`.
    pub other_play_types: Vec<String>,
    pub era: EraRule,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            rename: BTreeMap::new(),
            exclude_play_types: Vec::new(),
            other_play_types: [
                "other",
                "no_play",
                "punt",
                "field_goal",
                "kickoff",
                "extra_point",
                "qb_kneel",
                "qb_spike",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            era: EraRule::Auto,
        }
    }
}

impl IngestConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: IngestConfig = toml::from_str(text)?;
        for t in &cfg.exclude_play_types {
            if !matches!(t.as_str(), "pass" | "run" | "other") {
                return Err(Error::Config(format!(
                    "exclude_play_types entry `{t}` is not one of pass, run, other"
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Source column name for a canonical column.
    pub fn source_name<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.rename.get(canonical).map(String::as_str).unwrap_or(canonical)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml() {
        let cfg = IngestConfig::from_toml_str(
            r#"
            exclude_play_types = ["other"]
            era = "from_season"
            [rename]
            posteam = "offense"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.source_name("posteam"), "offense");
        assert_eq!(cfg.source_name("down"), "down");
        assert_eq!(cfg.era, EraRule::FromSeason);
        assert!(cfg.other_play_types.contains(&"punt".to_string()));
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(IngestConfig::from_toml_str("exclude_play_types = [\"sack\"]").is_err());
        assert!(IngestConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn era_bins() {
        assert_eq!(EraRule::era_of_season(2010), 0);
        assert_eq!(EraRule::era_of_season(2013), 0);
        assert_eq!(EraRule::era_of_season(2014), 1);
        assert_eq!(EraRule::era_of_season(2017), 1);
        assert_eq!(EraRule::era_of_season(2018), 2);
        assert_eq!(EraRule::era_of_season(2022), 2);
    }
}
