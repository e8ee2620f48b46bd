//! Run configuration: a JSON document whose keys can each be overridden by
//! a dotted name such as `som.width` or `seeds.kmeans`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kmeans::{KmeansParams, DEFAULT_MAX_ITERS, DEFAULT_RESTARTS};
use crate::metrics::MiaVariant;
use crate::model::{DayType, Method, Season, Stratum};
use crate::som::{SomParams, DEFAULT_EPOCHS};
use crate::two_stage::{CompareParams, TwoStageParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Kmeans,
    Som,
    TwoStage,
    All,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Kmeans => vec![Method::Kmeans],
            MethodChoice::Som => vec![Method::Som],
            MethodChoice::TwoStage => vec![Method::TwoStage],
            MethodChoice::All => Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub kmeans: u64,
    pub som: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { kmeans: 42, som: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SomConfig {
    pub width: usize,
    pub height: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// `null` derives half the longer grid side (at least 1).
    pub radius_start: Option<f64>,
    pub radius_end: f64,
}

impl Default for SomConfig {
    fn default() -> Self {
        Self {
            width: 3,
            height: 3,
            epochs: DEFAULT_EPOCHS,
            lr_start: 0.5,
            lr_end: 0.01,
            radius_start: None,
            radius_end: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoStageConfig {
    pub width: usize,
    pub height: usize,
    pub weighted: bool,
}

impl Default for TwoStageConfig {
    fn default() -> Self {
        Self {
            width: 10,
            height: 7,
            weighted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansConfig {
    pub n_restarts: usize,
    pub max_iters: usize,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            n_restarts: DEFAULT_RESTARTS,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    pub stratum: Stratum,
    pub method: MethodChoice,
    pub k: usize,
    pub seeds: Seeds,
    pub som: SomConfig,
    pub two_stage: TwoStageConfig,
    pub kmeans: KmeansConfig,
    pub mia_variant: MiaVariant,
    pub outdir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("readings.csv"),
            stratum: Stratum::new(Season::Winter, DayType::Weekend),
            method: MethodChoice::Kmeans,
            k: 9,
            seeds: Seeds::default(),
            som: SomConfig::default(),
            two_stage: TwoStageConfig::default(),
            kmeans: KmeansConfig::default(),
            mia_variant: MiaVariant::Paper,
            outdir: PathBuf::from("run"),
        }
    }
}

/// Every leaf key accepted by `RunConfig::apply_override`.
pub const OVERRIDE_KEYS: &[&str] = &[
    "input",
    "stratum",
    "method",
    "k",
    "seeds.kmeans",
    "seeds.som",
    "som.width",
    "som.height",
    "som.epochs",
    "som.lr_start",
    "som.lr_end",
    "som.radius_start",
    "som.radius_end",
    "two_stage.width",
    "two_stage.height",
    "two_stage.weighted",
    "kmeans.n_restarts",
    "kmeans.max_iters",
    "mia_variant",
    "outdir",
];

impl RunConfig {
    /// Loads a config file. A run manifest is accepted too: its `config`
    /// member is used.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Path {
            path: path.to_path_buf(),
            source,
        })?;
        let mut value: Value = serde_json::from_str(&text)?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        Ok(serde_json::from_value(value)?)
    }

    /// Sets a dotted key from its command-line text. Values that parse as
    /// JSON are used as such, anything else as a string.
    pub fn apply_override(&mut self, key: &str, raw: &str) -> Result<()> {
        if !OVERRIDE_KEYS.contains(&key) {
            return Err(Error::Parameter(format!("unknown config key '{key}'")));
        }
        let mut root = serde_json::to_value(&*self)?;
        let mut slot = &mut root;
        for part in key.split('.') {
            slot = slot
                .get_mut(part)
                .ok_or_else(|| Error::Parameter(format!("unknown config key '{key}'")))?;
        }
        *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        *self = serde_json::from_value(root).map_err(|e| Error::Parameter(format!("{key}: {e}")))?;
        Ok(())
    }

    pub fn kmeans_params(&self) -> KmeansParams {
        KmeansParams {
            k: self.k,
            n_restarts: self.kmeans.n_restarts,
            base_seed: self.seeds.kmeans,
            max_iters: self.kmeans.max_iters,
        }
    }

    fn som_params_for(&self, width: usize, height: usize) -> SomParams {
        let defaults = SomParams::new(width, height, self.seeds.som);
        SomParams {
            epochs: self.som.epochs,
            lr_start: self.som.lr_start,
            lr_end: self.som.lr_end,
            radius_start: self.som.radius_start.unwrap_or(defaults.radius_start),
            radius_end: self.som.radius_end,
            ..defaults
        }
    }

    pub fn som_params(&self) -> SomParams {
        self.som_params_for(self.som.width, self.som.height)
    }

    pub fn two_stage_params(&self) -> TwoStageParams {
        TwoStageParams {
            som: self.som_params_for(self.two_stage.width, self.two_stage.height),
            kmeans: self.kmeans_params(),
            weighted: self.two_stage.weighted,
        }
    }

    pub fn compare_params(&self) -> CompareParams {
        CompareParams {
            kmeans: self.kmeans_params(),
            som: self.som_params(),
            two_stage: self.two_stage_params(),
            mia_variant: self.mia_variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        self.som_params().validate()?;
        self.two_stage_params().som.validate()?;
        if self.kmeans.n_restarts == 0 || self.kmeans.max_iters == 0 {
            return Err(Error::Parameter("kmeans.n_restarts and kmeans.max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_by_dotted_name() {
        let mut c = RunConfig::default();
        c.apply_override("som.width", "4").unwrap();
        c.apply_override("seeds.kmeans", "7").unwrap();
        c.apply_override("method", "all").unwrap();
        c.apply_override("stratum", "summer-weekday").unwrap();
        c.apply_override("mia_variant", "per-cluster-mean").unwrap();
        c.apply_override("outdir", "out/x").unwrap();
        c.apply_override("two_stage.weighted", "true").unwrap();
        c.apply_override("som.radius_start", "2.5").unwrap();
        assert_eq!(c.som.width, 4);
        assert_eq!(c.seeds.kmeans, 7);
        assert_eq!(c.method, MethodChoice::All);
        assert_eq!(c.stratum, Stratum::new(Season::Summer, DayType::Weekday));
        assert_eq!(c.mia_variant, MiaVariant::PerClusterMean);
        assert_eq!(c.outdir, PathBuf::from("out/x"));
        assert!(c.two_stage.weighted);
        assert_eq!(c.som_params().radius_start, 2.5);
    }

    #[test]
    fn every_listed_key_exists() {
        let root = serde_json::to_value(RunConfig::default()).unwrap();
        for key in OVERRIDE_KEYS {
            let mut v = &root;
            for part in key.split('.') {
                v = v.get(part).unwrap_or_else(|| panic!("{key}"));
            }
        }
    }

    #[test]
    fn rejects_unknown_and_ill_typed() {
        let mut c = RunConfig::default();
        assert!(c.apply_override("som.depth", "3").is_err());
        assert!(c.apply_override("k", "nine").is_err());
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn derived_radius_follows_grid() {
        let c = RunConfig::default();
        assert_eq!(c.som_params().radius_start, 1.5);
        assert_eq!(c.two_stage_params().som.radius_start, 5.0);
        assert_eq!(c.two_stage_params().som.width, 10);
        assert_eq!(c.two_stage_params().som.height, 7);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"k": 4, "som": {"epochs": 10}}"#).unwrap();
        assert_eq!(c.k, 4);
        assert_eq!(c.som.epochs, 10);
        assert_eq!(c.som.width, 3);
        assert_eq!(c.kmeans.n_restarts, 1000);
    }
}
