use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use crate::fail::Fail;

/// Keys a JSON config file may set. Every key mirrors a flag of the same
/// name and only fills in flags that were not given.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub i: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Number or "a/b" string.
    #[serde(rename = "M")]
    pub m: Option<Value>,
    pub mode: Option<String>,
    pub x: Option<usize>,
    /// Array of file indices or a comma-separated string.
    pub demands: Option<Value>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    #[serde(rename = "K-range", alias = "K_range")]
    pub k_range: Option<Value>,
    #[serde(rename = "L-range", alias = "L_range")]
    pub l_range: Option<Value>,
    pub max_tuples: Option<usize>,
    pub field_w: Option<u32>,
    pub which: Option<String>,
    pub max_colors: Option<usize>,
    pub chi_cap: Option<usize>,
    pub mais_cap: Option<usize>,
    pub min_rank_cap: Option<usize>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, Fail> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Fail::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Fail::Invalid(format!("bad config {}: {e}", path.display())))
    }
}

/// Renders a scalar or array config value the way it would be typed as a
/// flag.
pub fn flag_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(flag_text).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mirrored_keys() {
        let c: Config = serde_json::from_str(
            r#"{"K": 8, "L": 2, "i": 3, "M": "3/2", "demands": [1, 2, 3], "K-range": "4..6"}"#,
        )
        .unwrap();
        assert_eq!((c.k, c.l, c.i), (Some(8), Some(2), Some(3)));
        assert_eq!(flag_text(c.m.as_ref().unwrap()), "3/2");
        assert_eq!(flag_text(c.demands.as_ref().unwrap()), "1,2,3");
        assert_eq!(flag_text(c.k_range.as_ref().unwrap()), "4..6");
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(serde_json::from_str::<Config>(r#"{"Q": 1}"#).is_err());
    }

    #[test]
    fn numeric_memory() {
        let c: Config = serde_json::from_str(r#"{"M": 4}"#).unwrap();
        assert_eq!(flag_text(c.m.as_ref().unwrap()), "4");
    }
}
