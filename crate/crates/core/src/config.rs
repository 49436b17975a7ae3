//! Run configuration shared by the CLI subcommands and batch files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diffusion::{DEFAULT_MAX_STEPS, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::DomainKind;
use crate::measures::RegionThresholds;
use crate::metrics::{SelectorThresholds, StartSelector};

pub const DEFAULT_STRIDE: u64 = 1000;
pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_WALKER_STEPS: usize = 20;

/// Where a walk starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartSpec {
    /// Delta density at a node id.
    Node(usize),
    /// Delta density at the lowest id matching a selector.
    Select(StartSelector),
    /// The stationary density itself; the node of largest π is the
    /// reference for distances and the start report.
    Stationary,
}

impl fmt::Display for StartSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartSpec::Node(id) => write!(f, "id:{id}"),
            StartSpec::Select(sel) => write!(f, "select:{sel}"),
            StartSpec::Stationary => f.write_str("stationary"),
        }
    }
}

impl FromStr for StartSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "stationary" {
            return Ok(StartSpec::Stationary);
        }
        if let Some(id) = s.strip_prefix("id:") {
            return id
                .parse()
                .map(StartSpec::Node)
                .map_err(|e| format!("bad node id {id:?}: {e}"));
        }
        if let Some(sel) = s.strip_prefix("select:") {
            return sel.parse().map(StartSpec::Select);
        }
        Err(format!(
            "start must be id:<n>, select:<selector> or stationary, got {s:?}"
        ))
    }
}

impl Serialize for StartSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StartSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-node field rendered by the heatmap command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSelector {
    DRatMin,
    Entropy,
    Combined,
    /// Walker density snapshot at step t.
    Density(u64),
}

impl fmt::Display for FieldSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSelector::DRatMin => f.write_str("d_rat_min"),
            FieldSelector::Entropy => f.write_str("entropy"),
            FieldSelector::Combined => f.write_str("combined"),
            FieldSelector::Density(t) => write!(f, "density@{t}"),
        }
    }
}

impl FromStr for FieldSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "d_rat_min" => Ok(FieldSelector::DRatMin),
            "entropy" => Ok(FieldSelector::Entropy),
            "combined" => Ok(FieldSelector::Combined),
            _ => match s.strip_prefix("density@") {
                Some(t) => t
                    .parse()
                    .map(FieldSelector::Density)
                    .map_err(|e| format!("bad step {t:?}: {e}")),
                None => Err(format!(
                    "field must be d_rat_min, entropy, combined or density@<t>, got {s:?}"
                )),
            },
        }
    }
}

impl Serialize for FieldSelector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FieldSelector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Start-selector split on `d_rel`.
    pub d_rel: f64,
    /// Start-selector split on `s_rel`.
    pub s_rel: f64,
    pub canyon: f64,
    pub grotto: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let sel = SelectorThresholds::default();
        let reg = RegionThresholds::default();
        Self {
            d_rel: sel.d_rel,
            s_rel: sel.s_rel,
            canyon: reg.canyon,
            grotto: reg.grotto,
        }
    }
}

impl Thresholds {
    pub fn selector(&self) -> SelectorThresholds {
        SelectorThresholds {
            d_rel: self.d_rel,
            s_rel: self.s_rel,
        }
    }

    pub fn region(&self) -> RegionThresholds {
        RegionThresholds {
            canyon: self.canyon,
            grotto: self.grotto,
        }
    }
}

fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_stride() -> u64 {
    DEFAULT_STRIDE
}

/// Everything needed to reproduce one command invocation. Written as
/// `config.json` into every output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    pub domain: DomainKind,
    #[serde(rename = "L")]
    pub level: u32,
    #[serde(rename = "R")]
    pub refine: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartSpec>,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Density snapshots are written every `stride` steps; 0 writes only
    /// the initial and limiting states.
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSelector>,
    /// Monte-Carlo walker count; no ensemble is run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walkers: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walker_steps: Option<usize>,
    /// Walk output directory holding density snapshots for heatmaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(domain: DomainKind, level: u32, refine: u32) -> Self {
        Self {
            command: None,
            domain,
            level,
            refine,
            mesh: None,
            start: None,
            max_steps: DEFAULT_MAX_STEPS,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
            out: None,
            stride: DEFAULT_STRIDE,
            thresholds: Thresholds::default(),
            top_k: None,
            field: None,
            walkers: None,
            walker_steps: None,
            trajectory: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Range(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        let th = &self.thresholds;
        for (name, v) in [
            ("d_rel", th.d_rel),
            ("s_rel", th.s_rel),
            ("canyon", th.canyon),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Range(format!(
                    "{name} threshold {v} is outside [0, 1]"
                )));
            }
        }
        if !(th.grotto >= 0.0 && th.grotto.is_finite()) {
            return Err(Error::Range(format!(
                "grotto threshold {} must be non-negative",
                th.grotto
            )));
        }
        if self.top_k == Some(0) {
            return Err(Error::Range("top-k must be at least 1".into()));
        }
        if self.walkers == Some(0) {
            return Err(Error::Range("walker count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json_string();
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Reads a batch file: a JSON array of run configurations.
pub fn read_batch(path: &Path) -> Result<Vec<RunConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let runs: Vec<RunConfig> = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    for run in &runs {
        run.validate()?;
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_spec_parses() {
        assert_eq!("id:17".parse::<StartSpec>().unwrap(), StartSpec::Node(17));
        assert_eq!(
            "select:low_d_high_s".parse::<StartSpec>().unwrap(),
            StartSpec::Select(StartSelector::LowDHighS)
        );
        assert_eq!(
            "stationary".parse::<StartSpec>().unwrap(),
            StartSpec::Stationary
        );
        for bad in ["17", "id:-1", "select:middle", ""] {
            assert!(bad.parse::<StartSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn field_selector_parses() {
        assert_eq!(
            "density@40".parse::<FieldSelector>().unwrap(),
            FieldSelector::Density(40)
        );
        assert_eq!(
            "combined".parse::<FieldSelector>().unwrap(),
            FieldSelector::Combined
        );
        assert!("density@".parse::<FieldSelector>().is_err());
        assert!("pressure".parse::<FieldSelector>().is_err());
    }

    #[test]
    fn batch_entries_fill_defaults() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"domain":"triadic","L":2,"R":1,"start":"select:low_d_low_s"}"#,
        )
        .unwrap();
        assert_eq!(cfg.max_steps, DEFAULT_MAX_STEPS);
        assert_eq!(cfg.tolerance, DEFAULT_TOLERANCE);
        assert_eq!(cfg.stride, DEFAULT_STRIDE);
        assert_eq!(cfg.thresholds, Thresholds::default());
        assert_eq!(cfg.start, Some(StartSpec::Select(StartSelector::LowDLowS)));
        let back: RunConfig = serde_json::from_str(&cfg.to_json_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"domain":"square","L":1,"R":0,"stepz":3}"#);
        assert!(err.is_err());
    }

    #[test]
    fn validation_ranges() {
        let mut cfg = RunConfig::new(DomainKind::Square, 1, 1);
        assert!(cfg.validate().is_ok());
        cfg.tolerance = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Range(_))));
        cfg.tolerance = 1e-12;
        cfg.thresholds.s_rel = 1.5;
        assert!(matches!(cfg.validate(), Err(Error::Range(_))));
    }
}
