//! Config files are TOML. The top-level table holds the subcommand's settings
//! under the same names as its flags (with underscores); a table named after
//! the subcommand, when present, is used instead, so one file can serve
//! several subcommands (`validate` falls back to a `[simulate]` table).
//! Flags override file values.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::output::Inputs;

const SECTIONS: [&str; 6] = ["fit-dist", "turnover-law", "q", "optimize", "simulate", "validate"];

/// Reads `path` (recording it as an input) and returns the settings table
/// for `section`.
fn load(path: &Path, section: &str, inputs: &mut Inputs) -> CliResult<Map<String, Value>> {
    let bytes = inputs.read(path)?;
    let text =
        String::from_utf8(bytes).map_err(|_| CliError::input("config", format!("{} is not UTF-8", path.display())))?;
    let table: Value =
        toml::from_str(&text).map_err(|e| CliError::input("config", format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = table else {
        return Err(CliError::input("config", "config root must be a table"));
    };
    let fallback = if section == "validate" { Some("simulate") } else { None };
    let key = if map.contains_key(section) { Some(section) } else { fallback.filter(|f| map.contains_key(*f)) };
    match key.and_then(|k| map.remove(k)) {
        Some(Value::Object(sub)) => Ok(sub),
        Some(_) => Err(CliError::input("config", format!("`{section}` must be a table"))),
        None => {
            map.retain(|k, _| !SECTIONS.contains(&k.as_str()));
            Ok(map)
        }
    }
}

/// Merges the config file (if any) with the flags, which win, and
/// deserializes the result. Flags are taken from `flags` serialized to JSON;
/// `null` entries are unset flags.
pub fn resolve<F: Serialize, T: DeserializeOwned>(
    file: Option<&PathBuf>,
    section: &str,
    flags: &F,
    inputs: &mut Inputs,
) -> CliResult<T> {
    let mut merged = match file {
        Some(p) => load(p, section, inputs)?,
        None => Map::new(),
    };
    if let Value::Object(f) = serde_json::to_value(flags)? {
        for (k, v) in f {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::input("config", e.to_string()))
}
