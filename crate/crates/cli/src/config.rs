use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Value,
    Flag,
}

/// One recognised parameter of a subcommand, usable as `--name` or as
/// `name = value` in a config file.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    pub default: Option<&'static str>,
    pub required: bool,
    pub kind: Kind,
}

pub const fn opt(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        default: None,
        required: false,
        kind: Kind::Value,
    }
}

pub const fn req(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        default: None,
        required: true,
        kind: Kind::Value,
    }
}

pub const fn def(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        default: Some(default),
        required: false,
        kind: Kind::Value,
    }
}

pub const fn flag(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        default: Some("false"),
        required: false,
        kind: Kind::Flag,
    }
}

/// Keys that never influence results and stay out of the manifest hash.
pub const UNHASHED: [&str; 3] = ["config", "out-dir", "parallelism"];

pub fn command(name: &'static str, about: &'static str, keys: &[Key]) -> Command {
    let mut c = Command::new(name).about(about).arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("key = value file; flags override its entries"),
    );
    for k in keys {
        let mut a = Arg::new(k.name).long(k.name).help(k.help);
        a = match k.kind {
            Kind::Value => a.value_name("VALUE").action(ArgAction::Set),
            Kind::Flag => a.action(ArgAction::SetTrue),
        };
        c = c.arg(a);
    }
    c
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses a flat `key = value` file; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!("config line {}: expected key = value", n + 1))
        })?;
        let k = normalize(k);
        if k.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", n + 1)));
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::usage(format!(
                "config line {}: duplicate key {k}",
                n + 1
            )));
        }
    }
    Ok(out)
}

/// Resolved parameters of one invocation: defaults, then config file, then
/// flags, then `SYMBIOSIM_SEED` for a still missing seed.
#[derive(Debug, Clone)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn resolve(keys: &[Key], m: &ArgMatches) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for k in keys {
            if let Some(d) = k.default {
                values.insert(k.name.to_string(), d.to_string());
            }
        }
        if let Some(path) = m.get_one::<String>("config") {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| CliError::usage(format!("cannot read config {path}: {e}")))?;
            let file = parse_config(&text)?;
            let unknown: Vec<&String> = file
                .keys()
                .filter(|k| !keys.iter().any(|s| s.name == k.as_str()))
                .collect();
            if !unknown.is_empty() {
                let names: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
                return Err(CliError::usage(format!(
                    "unknown config key(s): {}",
                    names.join(", ")
                )));
            }
            values.extend(file);
        }
        for k in keys {
            if m.value_source(k.name) != Some(ValueSource::CommandLine) {
                continue;
            }
            let v = match k.kind {
                Kind::Value => m.get_one::<String>(k.name).cloned().unwrap_or_default(),
                Kind::Flag => m.get_flag(k.name).to_string(),
            };
            values.insert(k.name.to_string(), v);
        }
        if keys.iter().any(|k| k.name == "seed") && !values.contains_key("seed") {
            if let Ok(s) = std::env::var("SYMBIOSIM_SEED") {
                values.insert("seed".into(), s);
            }
        }
        let missing: Vec<&str> = keys
            .iter()
            .filter(|k| k.required && !values.contains_key(k.name))
            .map(|k| k.name)
            .collect();
        if !missing.is_empty() {
            return Err(CliError::usage(format!(
                "missing required parameter(s): {}",
                missing.join(", ")
            )));
        }
        Ok(Params { values })
    }

    pub fn all(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::usage(format!("missing required parameter(s): {key}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let s = self.str(key)?;
        s.parse()
            .map_err(|_| CliError::usage(format!("cannot parse {key} = {s:?}")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        if self.has(key) {
            self.get(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.str(key)? {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(CliError::usage(format!(
                "{key} expects true or false, got {other:?}"
            ))),
        }
    }

    /// Mandatory for Monte Carlo work; no entropy fallback.
    pub fn seed(&self) -> Result<u64, CliError> {
        if !self.has("seed") {
            return Err(CliError::usage(
                "missing required parameter(s): seed (pass --seed or set SYMBIOSIM_SEED)",
            ));
        }
        self.get("seed")
    }

    /// Comma-separated values or an inclusive `start:stop:step` range.
    pub fn grid(&self, key: &str) -> Result<Vec<f64>, CliError> {
        parse_grid(self.str(key)?).map_err(|e| CliError::usage(format!("{key}: {e}")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        self.str(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::usage(format!("cannot parse {key} entry {s:?}")))
            })
            .collect()
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {t:?}"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0 && b >= a) {
                return Err(format!("range {s} needs start <= stop and step > 0"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            // rounding keeps 0.8:1.2:0.005 on decimal values
            Ok((0..=n)
                .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(format!("expected a list or start:stop:step, got {s:?}")),
    }
}
