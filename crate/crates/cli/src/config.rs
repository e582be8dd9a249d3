//! Flat key=value configuration: file parsing, typed access, and the run
//! manifest. Precedence is defaults < preset < file < flags; every written
//! manifest is itself a loadable configuration file, so a finished run can
//! be reproduced with `--config <out>/manifest.txt`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Every key a configuration file may contain. `command` and `version` are
/// informational (written to manifests, ignored on input); the rest mirror
/// the command-line flags.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "beta",
    "command",
    "delta",
    "f",
    "g",
    "gamma",
    "h",
    "h-ref",
    "kappa",
    "kappa-ref",
    "moment",
    "out",
    "preset",
    "record",
    "reference-stepper",
    "samples",
    "seed",
    "stepper",
    "T",
    "tau",
    "version",
    "workers",
];

/// Layered configuration under construction: later `set` calls override
/// earlier ones for the same key.
#[derive(Debug, Default, Clone)]
pub struct Draft {
    map: BTreeMap<String, String>,
}

impl Draft {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        debug_assert!(KNOWN_KEYS.contains(&key), "unlisted config key {key}");
        self.map.insert(key.to_string(), value.to_string());
    }

    /// Sets the key only when the flag was actually given.
    pub fn set_opt(&mut self, key: &str, value: Option<impl Display>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    /// Applies a configuration file over the current values. Unknown keys
    /// and lines without `=` are rejected by name.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                )
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(format!(
                    "{}:{}: unknown configuration key {key:?}",
                    path.display(),
                    lineno + 1
                ));
            }
            if key == "command" || key == "version" {
                continue; // manifest provenance, not run parameters
            }
            self.map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(())
    }

    // Typed getters. Each returns None when the key is absent and a
    // descriptive error when present but malformed.

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.get(key).map(|v| parse_f64(v).map_err(|e| format!("{key}: {e}"))).transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, String> {
        self.get(key)
            .map(|v| v.parse::<usize>().map_err(|_| format!("{key}: invalid integer {v:?}")))
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, String> {
        self.get(key)
            .map(|v| v.parse::<u64>().map_err(|_| format!("{key}: invalid integer {v:?}")))
            .transpose()
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| parse_f64(item).map_err(|e| format!("{key}: {e}")))
                    .collect()
            })
            .transpose()
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, String> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim()
                            .parse::<usize>()
                            .map_err(|_| format!("{key}: invalid integer {item:?}"))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Parses the key with `FromStr`, mapping the library's error text.
    pub fn get_parsed<T>(&self, key: &str) -> Result<Option<T>, String>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        self.get(key).map(|v| v.parse::<T>().map_err(|e| format!("{key}: {e}"))).transpose()
    }
}

/// Parses a float, additionally accepting `b^e` power notation with an
/// integer exponent so step sizes can be written as `2^-12`.
pub fn parse_f64(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let b: f64 =
            base.trim().parse().map_err(|_| format!("invalid number {s:?}"))?;
        let e: i32 = exp.trim().parse().map_err(|_| format!("invalid exponent in {s:?}"))?;
        return Ok(b.powi(e));
    }
    s.parse().map_err(|_| format!("invalid number {s:?}"))
}

/// Joins list values for manifests; floats use the shortest form that
/// parses back exactly.
pub fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn join_usize(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes the resolved configuration, sorted by key, as `key=value` lines.
pub fn write_manifest(
    path: &Path,
    entries: &BTreeMap<String, String>,
) -> Result<(), String> {
    let mut out = fs::File::create(path)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    for (key, value) in entries {
        writeln!(out, "{key}={value}").map_err(|e| format!("cannot write manifest: {e}"))?;
    }
    Ok(())
}
