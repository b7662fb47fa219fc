//! Versioned JSON game configuration:
//! `{"schema": 1, "players": n, "markets": [{"kind": ..}], "cost": {"kind": ..}}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CostFunction, Game, GameSpec, ModelError, ProductionFunction};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub schema: u32,
    pub players: usize,
    pub markets: Vec<ProductionFunction>,
    pub cost: CostFunction,
}

impl GameConfig {
    pub fn into_spec(self) -> Result<GameSpec, ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema));
        }
        Ok(GameSpec {
            players: self.players,
            markets: self.markets,
            cost: self.cost,
        })
    }
}

impl From<GameSpec> for GameConfig {
    fn from(spec: GameSpec) -> Self {
        GameConfig {
            schema: SCHEMA_VERSION,
            players: spec.players,
            markets: spec.markets,
            cost: spec.cost,
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_game(text: &str) -> Result<Game, ConfigError> {
    let config: GameConfig = serde_json::from_str(text)?;
    Ok(config.into_spec()?.validate()?)
}

pub fn load_game(path: &Path) -> Result<Game, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_game(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_POWER: &str = r#"{
        "schema": 1,
        "players": 2,
        "markets": [{"kind": "power", "a": 1.0, "p": 0.5}, {"kind": "power", "a": 2.0, "p": 0.5}],
        "cost": {"kind": "zero"}
    }"#;

    #[test]
    fn parses_every_kind() {
        let text = r#"{
            "schema": 1,
            "players": 3,
            "markets": [
                {"kind": "power", "a": 1.0, "p": 0.5},
                {"kind": "log", "a": 1.0, "b": 2.0},
                {"kind": "linquad", "a": 1.0, "b": 0.1},
                {"kind": "custom-tabulated", "s": [0, 1, 3], "marginal": [2, 1, 0.5]}
            ],
            "cost": {"kind": "separable", "terms": [{"q": 1}, {"q": 0, "l": 0.1}, {"q": 0.5}, {"q": 0}]}
        }"#;
        let g = parse_game(text).unwrap();
        assert_eq!(g.markets(), 4);
        let quadratic = r#"{"schema": 1, "players": 2, "markets": [{"kind": "power", "a": 1, "p": 0.5},
            {"kind": "power", "a": 1, "p": 0.5}], "cost": {"kind": "quadratic", "matrix": [[1, 0], [0, 1]]}}"#;
        assert!(!parse_game(quadratic).unwrap().is_separable());
    }

    #[test]
    fn round_trips_through_json() {
        let g = parse_game(TWO_POWER).unwrap();
        let text = serde_json::to_string(&GameConfig::from(g.spec().clone())).unwrap();
        assert_eq!(parse_game(&text).unwrap(), g);
    }

    #[test]
    fn unknown_fields_are_named() {
        for (text, field) in [
            (
                TWO_POWER.replace("\"players\"", "\"extra\": 1, \"players\""),
                "extra",
            ),
            (
                TWO_POWER.replace("\"p\": 0.5}, {", "\"p\": 0.5, \"q\": 1}, {"),
                "q",
            ),
            (
                TWO_POWER.replace("{\"kind\": \"zero\"}", "{\"kind\": \"zero\", \"scale\": 2}"),
                "scale",
            ),
        ] {
            let err = parse_game(&text).expect_err(field).to_string();
            assert!(err.contains(field), "{err}");
        }
    }

    #[test]
    fn schema_is_required_and_checked() {
        let missing = TWO_POWER.replace("\"schema\": 1,", "");
        assert!(parse_game(&missing)
            .unwrap_err()
            .to_string()
            .contains("schema"));
        let future = TWO_POWER.replace("\"schema\": 1", "\"schema\": 2");
        assert!(matches!(parse_game(&future), Err(ConfigError::Schema(2))));
    }

    #[test]
    fn unknown_kind_and_bad_parameters() {
        let bad_kind = TWO_POWER.replace("\"power\", \"a\": 2.0", "\"cubic\", \"a\": 2.0");
        assert!(parse_game(&bad_kind)
            .unwrap_err()
            .to_string()
            .contains("cubic"));
        let bad_p = TWO_POWER.replace("\"p\": 0.5}]", "\"p\": 1.5}]");
        assert!(matches!(parse_game(&bad_p), Err(ConfigError::Model(_))));
    }
}
