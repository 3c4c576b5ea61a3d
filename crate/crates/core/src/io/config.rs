//! Plain-text `key = value` configuration.
//!
//! Blank lines and everything after `#` are ignored. Keys are unique; a key
//! given twice is an error. Run manifests use the same syntax, so a manifest
//! can be passed back as a config to replay a run. Keys a command does not
//! use are ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corruption::ChainParams;
use crate::error::{AdeError, Result};
use crate::schedule::PecletReference;

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "ADE_CONFIG";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
    source: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AdeError::Config(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(AdeError::Config(format!("line {}: empty key", n + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(AdeError::Config(format!("line {}: duplicate key '{k}'", n + 1)));
            }
        }
        Ok(Config { entries, source: None })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = super::read_bytes(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| AdeError::Config(format!("{} is not UTF-8", path.display())))?;
        let mut c = Self::parse(&text)?;
        c.source = Some(path.to_path_buf());
        Ok(c)
    }

    /// Loads `explicit`, else the file named by `ADE_CONFIG`, else nothing.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Config::default()),
            },
        }
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| AdeError::Config(format!("{key}: cannot parse '{v}'"))),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get_parsed(key)
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some("true" | "1" | "yes" | "on") => Ok(Some(true)),
            Some("false" | "0" | "no" | "off") => Ok(Some(false)),
            Some(v) => Err(AdeError::Config(format!("{key}: expected a boolean, got '{v}'"))),
        }
    }

    /// Overwrites the fields of `p` that this config names.
    pub fn apply_chain_params(&self, p: &mut ChainParams) -> Result<()> {
        macro_rules! take {
            ($field:ident, $key:literal) => {
                if let Some(v) = self.get_parsed($key)? {
                    p.$field = v;
                }
            };
        }
        take!(sigma_min, "sigma_min");
        take!(sigma_max, "sigma_max");
        take!(steps, "steps");
        take!(pe, "pe");
        take!(tau_max, "tau_max");
        take!(seed, "seed");
        take!(slope, "slope");
        take!(dt_turb, "dt_turb");
        take!(cap, "cap");
        take!(sharpness, "sharpness");
        if let Some(v) = self.get("precision") {
            p.precision = v.parse().map_err(|e: AdeError| AdeError::Config(e.to_string()))?;
        }
        if let Some(v) = self.get("convention") {
            p.convention = v.parse().map_err(|e: AdeError| AdeError::Config(e.to_string()))?;
        }
        if let Some(v) = self.get_bool("turbulence")? {
            p.turbulence = v;
        }
        if let Some(v) = self.get("band") {
            p.band = parse_band(v)?;
        }
        if let Some(v) = self.get("peclet_reference") {
            p.peclet_reference = parse_peclet_reference(v)?;
        }
        Ok(())
    }
}

pub fn format_band(band: Option<[f64; 2]>) -> String {
    match band {
        None => "default".to_string(),
        Some([lo, hi]) => format!("{lo:?},{hi:?}"),
    }
}

pub fn parse_band(s: &str) -> Result<Option<[f64; 2]>> {
    if s == "default" {
        return Ok(None);
    }
    let bad = || AdeError::Config(format!("band: expected 'default' or 'lo,hi', got '{s}'"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    let lo = lo.trim().parse::<f64>().map_err(|_| bad())?;
    let hi = hi.trim().parse::<f64>().map_err(|_| bad())?;
    Ok(Some([lo, hi]))
}

pub fn format_peclet_reference(r: PecletReference) -> String {
    match r {
        PecletReference::PerInterval => "per-interval".to_string(),
        PecletReference::Constant(a) => format!("constant:{a:?}"),
    }
}

pub fn parse_peclet_reference(s: &str) -> Result<PecletReference> {
    if s == "per-interval" {
        return Ok(PecletReference::PerInterval);
    }
    s.strip_prefix("constant:")
        .and_then(|a| a.parse::<f64>().ok())
        .map(PecletReference::Constant)
        .ok_or_else(|| {
            AdeError::Config(format!(
                "peclet_reference: expected 'per-interval' or 'constant:<alpha>', got '{s}'"
            ))
        })
}
