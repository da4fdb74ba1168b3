//! Config layering: defaults < file (TOML, or JSON for `.json`) <
//! `key=value` overrides. Dotted keys reach into tables.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub struct Layered {
    pub value: Map<String, Value>,
    /// Directory of the config file, for resolving relative paths.
    pub base_dir: Option<PathBuf>,
    /// Keys set on the command line.
    pub overridden: Vec<String>,
}

impl Layered {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut value = match path {
            Some(p) => read_file(p)?,
            None => Map::new(),
        };
        let mut overridden = Vec::new();
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
            set_dotted(&mut value, key.trim(), parse_scalar(raw.trim()))?;
            overridden.push(key.trim().to_string());
        }
        let base_dir = path.and_then(|p| p.parent()).map(Path::to_path_buf);
        Ok(Self { value, base_dir, overridden })
    }

    pub fn take(&mut self, key: &str) -> Option<Value> {
        self.value.remove(key)
    }

    /// Resolves a path-valued key: file-provided relative paths are taken
    /// relative to the config file, command-line ones relative to the cwd.
    pub fn resolve(&self, key: &str, raw: &str) -> PathBuf {
        let p = PathBuf::from(raw);
        match &self.base_dir {
            Some(dir) if p.is_relative() && !self.overridden.iter().any(|k| k == key) => dir.join(p),
            _ => p,
        }
    }

    pub fn into_typed<T: DeserializeOwned>(self) -> CliResult<T> {
        serde_json::from_value(Value::Object(self.value)).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn read_file(path: &Path) -> CliResult<Map<String, Value>> {
    if !path.exists() {
        return Err(CliError::ConfigNotFound(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: Value = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        let t: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::to_value(t).map_err(|e| CliError::Config(e.to_string()))?
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Config(format!("{}: top level must be a table", path.display()))),
    }
}

/// A JSON literal (number, bool, array, quoted string...) or a bare string.
fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_dotted(root: &mut Map<String, Value>, key: &str, value: Value) -> CliResult<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key {key:?}")));
    }
    let (last, path) = parts.split_last().expect("nonempty");
    let mut cur = root;
    for part in path {
        let entry = cur.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        cur = entry
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {part:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_nest_and_parse() {
        let l = Layered::load(None, &["dgp.p=9".into(), "name=abc".into(), "xs=[1,2]".into()]).unwrap();
        assert_eq!(l.value["dgp"]["p"], 9);
        assert_eq!(l.value["name"], "abc");
        assert_eq!(l.value["xs"][1], 2);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Layered::load(None, &["novalue".into()]).is_err());
        assert!(Layered::load(None, &["a..b=1".into()]).is_err());
        assert!(Layered::load(None, &["a=1".into(), "a.b=2".into()]).is_err());
    }
}
