//! JSON configuration with dotted-path overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::ScenarioConfig;
use crate::error::{Error, Result};

/// Replaces the value at a dotted path such as `axes.snr_db` or
/// `anchors.0.position`. The value is parsed as JSON, falling back to a
/// plain string. Missing object keys are created.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| Error::Config(format!("`{part}` in `{key}` must index an array")))?;
                let len = items.len();
                let slot = items
                    .get_mut(i)
                    .ok_or_else(|| Error::Config(format!("index {i} in `{key}` out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            Value::Null => {
                *node = Value::Object(Default::default());
                let Value::Object(map) = node else { unreachable!() };
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            _ => {
                return Err(Error::Config(format!(
                    "`{}` in `{key}` is not an object or array",
                    parts[..depth].join(".")
                )))
            }
        };
    }
    unreachable!("loop returns on the last part")
}

/// Reads `path`, applies the overrides in order and deserializes.
pub fn load_config<T: DeserializeOwned>(path: &Path, overrides: &[String]) -> Result<(T, Value)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let cfg = serde_json::from_value(value.clone()).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok((cfg, value))
}

/// A scenario given inline or as a path to its JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(Box<ScenarioConfig>),
}

impl ScenarioSource {
    /// Relative paths are taken from `base`.
    pub fn resolve(&self, base: &Path) -> Result<ScenarioConfig> {
        let scn = match self {
            ScenarioSource::Inline(s) => (**s).clone(),
            ScenarioSource::Path(p) => {
                let full = base.join(p);
                ScenarioConfig::load(&full).map_err(|e| e.context(format!("scenario {}", full.display())))?
            }
        };
        scn.validate()?;
        Ok(scn)
    }

    pub fn path(&self, base: &Path) -> Option<PathBuf> {
        match self {
            ScenarioSource::Path(p) => Some(base.join(p)),
            ScenarioSource::Inline(_) => None,
        }
    }
}
