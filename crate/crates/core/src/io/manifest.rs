//! Run manifests: every parameter, seed and hash needed to reproduce an
//! output, in the same `key = value` syntax the config reader accepts.

use std::collections::BTreeMap;
use std::path::Path;

use crate::corruption::ChainParams;
use crate::error::Result;

use super::config::{format_band, format_peclet_reference, Config};

/// Bumped whenever the manifest keys change meaning.
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    entries: BTreeMap<String, String>,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self::new()
    }
}

impl RunManifest {
    pub fn new() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("format_version".to_string(), MANIFEST_FORMAT_VERSION.to_string());
        entries.insert("engine_version".to_string(), crate::ENGINE_VERSION.to_string());
        RunManifest { entries }
    }

    pub fn for_chain_params(p: &ChainParams) -> Self {
        let mut m = Self::new();
        m.set("sigma_min", fmt_f64(p.sigma_min));
        m.set("sigma_max", fmt_f64(p.sigma_max));
        m.set("steps", p.steps.to_string());
        m.set("pe", fmt_f64(p.pe));
        m.set("tau_max", fmt_f64(p.tau_max));
        m.set("seed", p.seed.to_string());
        m.set("precision", p.precision.as_str());
        m.set("turbulence", p.turbulence.to_string());
        m.set("slope", fmt_f64(p.slope));
        m.set("band", format_band(p.band));
        m.set("dt_turb", fmt_f64(p.dt_turb));
        m.set("cap", fmt_f64(p.cap));
        m.set("sharpness", fmt_f64(p.sharpness));
        m.set("convention", p.convention.as_str());
        m.set("peclet_reference", format_peclet_reference(p.peclet_reference));
        m
    }

    /// Records the Fourier sequence and grid length of a resolved schedule.
    pub fn record_schedule(&mut self, fo: &[f64], length: usize) {
        self.set("length", length.to_string());
        if let (Some(a), Some(b)) = (fo.first(), fo.last()) {
            self.set("fo_min", fmt_f64(*a));
            self.set("fo_max", fmt_f64(*b));
        }
        self.set(
            "fo",
            fo.iter().map(|f| fmt_f64(*f)).collect::<Vec<_>>().join(","),
        );
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# ade run manifest\n");
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let c = Config::parse(text)?;
        Ok(RunManifest {
            entries: c.entries().clone(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::atomic_write(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(RunManifest {
            entries: Config::load(path)?.entries().clone(),
        })
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
