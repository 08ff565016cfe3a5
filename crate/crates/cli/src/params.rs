use std::collections::BTreeMap;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::CliError;

/// `key=value` arguments. Every lookup records the resolved value, defaults
/// included, so the output can embed the full configuration.
#[derive(Debug, Default)]
pub struct Params {
    raw: BTreeMap<String, String>,
    resolved: Map<String, Value>,
}

impl Params {
    pub fn parse(args: &[String]) -> Result<Params, CliError> {
        let mut raw = BTreeMap::new();
        for arg in args {
            let (key, value) = arg
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("expected key=value, got `{arg}`")))?;
            if key.is_empty() {
                return Err(CliError::Usage(format!("empty key in `{arg}`")));
            }
            if raw.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Usage(format!("parameter `{key}` given twice")));
            }
        }
        Ok(Params {
            raw,
            resolved: Map::new(),
        })
    }

    fn take<T>(&mut self, key: &str, default: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Into<Value> + Clone,
    {
        let value = match self.raw.remove(key) {
            Some(text) => text.parse().map_err(|_| {
                CliError::Usage(format!("parameter `{key}` has invalid value `{text}`"))
            })?,
            None => default.ok_or_else(|| CliError::Usage(format!("missing parameter `{key}`")))?,
        };
        self.resolved.insert(key.to_string(), value.clone().into());
        Ok(value)
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        self.take::<u64>(key, Some(default as u64))
            .map(|v| v as usize)
    }

    pub fn required_usize(&mut self, key: &str) -> Result<usize, CliError> {
        self.take::<u64>(key, None).map(|v| v as usize)
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        self.take(key, Some(default))
    }

    pub fn required_f64(&mut self, key: &str) -> Result<f64, CliError> {
        self.take(key, None)
    }

    /// Removes `key` without recording it in the resolved map.
    pub fn detach_usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        self.raw
            .remove(key)
            .map(|text| {
                text.parse().map_err(|_| {
                    CliError::Usage(format!("parameter `{key}` has invalid value `{text}`"))
                })
            })
            .transpose()
    }

    /// Fails on any parameter that no lookup consumed.
    pub fn finish(self, context: &str) -> Result<Value, CliError> {
        if let Some(key) = self.raw.keys().next() {
            let known: Vec<&String> = self.resolved.keys().collect();
            return Err(CliError::Usage(format!(
                "unknown parameter `{key}` for {context} (accepted: {known:?})"
            )));
        }
        Ok(Value::Object(self.resolved))
    }
}
