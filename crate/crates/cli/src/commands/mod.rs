pub mod check;
pub mod coeffs;
pub mod gci;
pub mod particles;
pub mod soh;
pub mod sok;
pub mod study;

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::config::RunConfig;

/// The configuration section a command actually used, after overrides.
pub fn config_echo(cfg: &RunConfig, command: &str) -> Value {
    let section = match command {
        "coeffs" => serde_json::to_value(&cfg.coeffs),
        "gci" => serde_json::to_value(&cfg.gci),
        "run-sok" => serde_json::to_value(&cfg.sok),
        "run-soh" => serde_json::to_value(&cfg.soh),
        "limit-study" => serde_json::to_value(&cfg.limit_study),
        "particles" => serde_json::to_value(&cfg.particles),
        _ => Ok(Value::Null),
    };
    json!({
        "output_dir": cfg.output_dir,
        "section": section.unwrap_or(Value::Null),
    })
}

/// Comma-separated numbers; an empty string is an empty list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

/// snake_case name of a serde enum, e.g. `implicit_euler`.
pub fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

/// Overwrites `slot` when the flag was given.
pub fn set<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}
