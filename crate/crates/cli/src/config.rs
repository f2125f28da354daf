//! Run configuration, read from TOML. Every field has a default, so an
//! empty file (or no file) is a valid configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trendalpha::evaluation::{Scoring, SearchSpace};
use trendalpha::features::{FilterConfig, Reduction};
use trendalpha::labeling::{LabelKind, LabelParams};
use trendalpha::learners::{Family, Hyperparams, SmoteParams};
use trendalpha::market_data::ColumnSchema;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Output directory for every artifact.
    pub out: PathBuf,
    pub data: DataConfig,
    pub features: FeatureConfig,
    pub labels: LabelConfig,
    pub split: SplitConfig,
    pub smote: SmoteConfig,
    pub search: SearchConfig,
    /// Hyperparameter overrides per family, e.g. `[models.forest]`.
    pub models: BTreeMap<String, toml::Table>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 42,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            features: FeatureConfig::default(),
            labels: LabelConfig::default(),
            split: SplitConfig::default(),
            smote: SmoteConfig::default(),
            search: SearchConfig::default(),
            models: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory holding one `<ticker>.csv` per instrument.
    pub dir: PathBuf,
    pub index: String,
    /// Constituent tickers; empty means every other CSV in `dir`.
    pub constituents: Vec<String>,
    /// URL with `{ticker}`, `{start}`, `{end}` placeholders. When set,
    /// tickers missing from `dir` are downloaded into it.
    pub fetch_url: Option<String>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub warmup_months: u32,
    pub drop_last: bool,
    pub columns: ColumnSchema,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("data"),
            index: "INDEX".into(),
            constituents: Vec::new(),
            fetch_url: None,
            start: None,
            end: None,
            warmup_months: 16,
            drop_last: true,
            columns: ColumnSchema::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Alpha catalog file; the built-in catalog when unset.
    pub catalog: Option<PathBuf>,
    pub reduction: Reduction,
    pub unique_threshold: usize,
    pub duplication_threshold: f64,
    pub correlation_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        let f = FilterConfig::default();
        Self {
            catalog: None,
            reduction: Reduction::Mean,
            unique_threshold: f.unique_threshold,
            duplication_threshold: f.duplication_threshold,
            correlation_threshold: f.correlation_threshold,
        }
    }
}

impl FeatureConfig {
    pub fn filters(&self) -> FilterConfig {
        FilterConfig {
            unique_threshold: self.unique_threshold,
            duplication_threshold: self.duplication_threshold,
            correlation_threshold: self.correlation_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    pub kind: LabelKind,
    pub threshold_pct: f64,
    pub lookback: usize,
    pub percentile: f64,
    pub horizon: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        let p = LabelParams::default();
        Self {
            kind: LabelKind::Long,
            threshold_pct: p.threshold_pct,
            lookback: p.lookback,
            percentile: p.percentile,
            horizon: p.horizon,
        }
    }
}

impl LabelConfig {
    pub fn params(&self) -> LabelParams {
        LabelParams {
            threshold_pct: self.threshold_pct,
            lookback: self.lookback,
            percentile: self.percentile,
            horizon: self.horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    #[default]
    Chronological,
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub method: SplitMethod,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            method: SplitMethod::Chronological,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteConfig {
    /// Oversample the training split before fitting.
    pub enabled: bool,
    pub k: usize,
    pub target_ratio: f64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        let p = SmoteParams::default();
        Self {
            enabled: true,
            k: p.k,
            target_ratio: p.target_ratio,
        }
    }
}

impl SmoteConfig {
    pub fn params(&self) -> Option<SmoteParams> {
        self.enabled.then_some(SmoteParams {
            k: self.k,
            target_ratio: self.target_ratio,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub n_iter: usize,
    pub folds: usize,
    pub scoring: Scoring,
    /// Candidate lists per family, e.g. `[search.space.tree]`; families
    /// without an entry use the built-in space.
    pub space: BTreeMap<String, BTreeMap<String, Vec<toml::Value>>>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_iter: 20,
            folds: 5,
            scoring: Scoring::F1,
            space: BTreeMap::new(),
        }
    }
}

fn user(msg: impl Into<String>) -> CliError {
    CliError::User(msg.into())
}

pub fn parse_family(name: &str) -> Result<Family, CliError> {
    Family::parse(name).ok_or_else(|| {
        let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
        user(format!("unknown model family `{name}` (expected one of {})", names.join(", ")))
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| user(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::User(m) => user(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| user(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(user(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for name in self.models.keys().chain(self.search.space.keys()) {
            parse_family(name)?;
        }
        for family in Family::ALL {
            self.hyperparams(family)?;
        }
        Ok(())
    }

    /// Family defaults with the `[models.<family>]` overrides applied.
    pub fn hyperparams(&self, family: Family) -> Result<Hyperparams, CliError> {
        let base = family.default_params();
        let Some(over) = self.models.get(family.name()) else {
            return Ok(base);
        };
        let mut v = serde_json::to_value(&base).map_err(|e| CliError::Internal(e.to_string()))?;
        let obj = v.as_object_mut().expect("hyperparams serialize to an object");
        for (k, val) in over {
            let json = serde_json::to_value(val).map_err(|e| CliError::Internal(e.to_string()))?;
            obj.insert(k.clone(), json);
        }
        let hp: Hyperparams = serde_json::from_value(v).map_err(|e| user(format!("[models.{}]: {e}", family.name())))?;
        hp.validate().map_err(|e| user(format!("[models.{}]: {e}", family.name())))?;
        Ok(hp)
    }

    pub fn search_space(&self, family: Family) -> Result<SearchSpace, CliError> {
        match self.search.space.get(family.name()) {
            None => Ok(trendalpha::evaluation::default_space(family)),
            Some(space) => space
                .iter()
                .map(|(k, vals)| {
                    let vals = vals
                        .iter()
                        .map(|v| serde_json::to_value(v).map_err(|e| CliError::Internal(e.to_string())))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok((k.clone(), vals))
                })
                .collect(),
        }
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(json))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
