//! Subcommands: each reads its upstream artifacts from the output
//! directory, runs one pipeline stage, writes its artifacts and appends a
//! run-log entry.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trendalpha::dataset::Dataset;
use trendalpha::evaluation::{
    compute_metrics, importance_report, random_search, roc_auc, slug, write_comparison_csv, write_overlay_svg,
    write_roc_csv, DEFAULT_IMPORTANCE_THRESHOLD,
};
use trendalpha::features::{read_matrix, write_matrix_csv, write_meta, FeatureMatrix};
use trendalpha::labeling::{read_labels_csv, write_labels_csv, LabelVector};
use trendalpha::learners::{self, smote, to_classes, Family, Hyperparams, TrainedModel};
use trendalpha::market_data::synthetic::{generate, SyntheticConfig, INDEX_TICKER};
use trendalpha::market_data::{load_csv, write_csv, ColumnSchema, PricePanel};
use trendalpha::Error;

use crate::config::{hex, RunConfig};
use crate::pipeline::{self, Panels};
use crate::CliError;

/// Paths of every artifact under the output directory.
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }
    pub fn panels(&self) -> PathBuf {
        self.root.join("panels")
    }
    pub fn manifest(&self) -> PathBuf {
        self.panels().join("manifest.json")
    }
    pub fn matrix(&self) -> PathBuf {
        self.root.join("features").join("matrix.csv")
    }
    pub fn meta(&self) -> PathBuf {
        self.root.join("features").join("meta.txt")
    }
    pub fn labels(&self) -> PathBuf {
        self.root.join("labels").join("labels.csv")
    }
    pub fn search(&self, f: Family) -> PathBuf {
        self.root.join("search").join(format!("{}.json", f.name()))
    }
    pub fn model(&self, f: Family) -> PathBuf {
        self.root.join("models").join(format!("{}.json", f.name()))
    }
    pub fn evaluation(&self, model: &Path) -> PathBuf {
        let stem = model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
        self.root.join("evaluation").join(stem)
    }
    pub fn compare(&self) -> PathBuf {
        self.root.join("compare")
    }
    pub fn run_log(&self) -> PathBuf {
        self.root.join("runs.jsonl")
    }
}

/// Artifacts written by one command, keyed by path relative to the output
/// directory, with their SHA-256.
#[derive(Default)]
pub struct Outputs {
    root: PathBuf,
    pub hashes: BTreeMap<String, String>,
}

impl Outputs {
    fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            hashes: BTreeMap::new(),
        }
    }

    /// Writes through a temporary file and renames it into place.
    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Internal(format!("{}: {e}", path.display()));
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, bytes).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)?;
        let key = path.strip_prefix(&self.root).unwrap_or(path).to_string_lossy().replace('\\', "/");
        self.hashes.insert(key, hex(&Sha256::digest(bytes)));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    timestamp: String,
    command: &'a str,
    config_hash: String,
    seed: u64,
    outputs: &'a BTreeMap<String, String>,
}

fn log_run(cfg: &RunConfig, command: &str, outputs: &Outputs) -> Result<(), CliError> {
    let layout = Layout::new(&cfg.out);
    let record = RunRecord {
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        command,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        outputs: &outputs.hashes,
    };
    let line = serde_json::to_string(&record).map_err(|e| CliError::Internal(e.to_string()))?;
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(layout.run_log())
        .map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(f, "{line}").map_err(|e| CliError::Internal(e.to_string()))?;
    for (path, hash) in &outputs.hashes {
        log::info!("wrote {path} ({})", &hash[..12]);
    }
    Ok(())
}

fn require(path: &Path, producer: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::User(format!(
            "missing {}; run `trendalpha {producer}` first (with the same --out)",
            path.display()
        )))
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> trendalpha::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    index: String,
    constituents: Vec<String>,
    first_date: String,
    last_date: String,
    dates: usize,
}

fn panel_path(layout: &Layout, ticker: &str) -> PathBuf {
    layout.panels().join(format!("{ticker}.csv"))
}

pub fn ingest(cfg: &RunConfig) -> Result<(), CliError> {
    let layout = Layout::new(&cfg.out);
    let panels = pipeline::ingest(cfg)?;
    let mut out = Outputs::new(&cfg.out);
    let schema = ColumnSchema::default();
    let index = &panels.index;
    out.write(
        &panel_path(&layout, &index.tickers()[0]),
        &csv_bytes(|b| write_csv(index, 0, &schema, b))?,
    )?;
    let mut tickers = Vec::new();
    if let Some(c) = &panels.constituents {
        for (k, t) in c.tickers().iter().enumerate() {
            out.write(&panel_path(&layout, t), &csv_bytes(|b| write_csv(c, k, &schema, b))?)?;
            tickers.push(t.clone());
        }
    }
    let manifest = Manifest {
        index: index.tickers()[0].clone(),
        constituents: tickers,
        first_date: index.dates()[0].to_string(),
        last_date: index.dates()[index.n_dates() - 1].to_string(),
        dates: index.n_dates(),
    };
    out.write_json(&layout.manifest(), &manifest)?;
    log_run(cfg, "ingest", &out)
}

fn load_panels(layout: &Layout) -> Result<Panels, CliError> {
    require(&layout.manifest(), "ingest")?;
    let text = fs::read_to_string(layout.manifest()).map_err(|e| CliError::Internal(e.to_string()))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::User(format!("{}: {e}", layout.manifest().display())))?;
    let schema = ColumnSchema::default();
    let load = |t: &str| -> Result<PricePanel, CliError> {
        let p = panel_path(layout, t);
        require(&p, "ingest")?;
        Ok(load_csv(&p, &schema)?)
    };
    let index = load(&manifest.index)?;
    let constituents = if manifest.constituents.is_empty() {
        None
    } else {
        let parts = manifest.constituents.iter().map(|t| load(t)).collect::<Result<Vec<_>, _>>()?;
        Some(PricePanel::merge(&parts)?.align_to(index.dates()))
    };
    Ok(Panels { index, constituents })
}

pub fn features(cfg: &RunConfig) -> Result<(), CliError> {
    let layout = Layout::new(&cfg.out);
    let panels = load_panels(&layout)?;
    let catalog = pipeline::load_catalog(cfg)?;
    let m = pipeline::features(cfg, &panels, &catalog)?;
    log::info!("{} of {} features kept over {} dates", m.kept_names().len(), m.features.len(), m.n_dates());
    let mut out = Outputs::new(&cfg.out);
    out.write(&layout.matrix(), &csv_bytes(|b| write_matrix_csv(&m, b))?)?;
    out.write(&layout.meta(), &csv_bytes(|b| write_meta(&m, b))?)?;
    log_run(cfg, "features", &out)
}

pub fn label(cfg: &RunConfig) -> Result<(), CliError> {
    let layout = Layout::new(&cfg.out);
    let panels = load_panels(&layout)?;
    let labels = pipeline::labels(cfg, &panels.index)?;
    log::info!("{} of {} labels positive", labels.positives(), labels.len());
    let mut out = Outputs::new(&cfg.out);
    out.write(&layout.labels(), &csv_bytes(|b| write_labels_csv(&labels, b))?)?;
    log_run(cfg, "label", &out)
}

fn load_matrix(layout: &Layout) -> Result<FeatureMatrix, CliError> {
    require(&layout.matrix(), "features")?;
    require(&layout.meta(), "features")?;
    let csv = fs::File::open(layout.matrix())?;
    let meta = std::io::BufReader::new(fs::File::open(layout.meta())?);
    Ok(read_matrix(csv, meta)?)
}

fn load_labels(cfg: &RunConfig, layout: &Layout) -> Result<LabelVector, CliError> {
    require(&layout.labels(), "label")?;
    Ok(read_labels_csv(
        fs::File::open(layout.labels())?,
        cfg.labels.kind,
        cfg.labels.params(),
    )?)
}

/// Joined dataset split into (train, test) per the configuration.
fn load_split(cfg: &RunConfig) -> Result<(Dataset, Dataset), CliError> {
    let layout = Layout::new(&cfg.out);
    let d = pipeline::dataset(&load_matrix(&layout)?, &load_labels(cfg, &layout)?)?;
    pipeline::split(cfg, &d)
}

fn training_set(cfg: &RunConfig, train: Dataset) -> Result<Dataset, CliError> {
    match cfg.smote.params() {
        Some(p) => Ok(smote(&train, &p, cfg.seed)?),
        None => Ok(train),
    }
}

pub fn search(cfg: &RunConfig, family: Family) -> Result<(), CliError> {
    let (train, _) = load_split(cfg)?;
    let space = cfg.search_space(family)?;
    let result = random_search(
        &train,
        family,
        &space,
        cfg.search.n_iter,
        cfg.search.folds,
        cfg.seed,
        cfg.search.scoring,
    )?;
    log::info!("best {:?} score {:.6}", result.best_params, result.best_score);
    let mut out = Outputs::new(&cfg.out);
    out.write_json(&Layout::new(&cfg.out).search(family), &result)?;
    log_run(cfg, "search", &out)
}

pub fn train(cfg: &RunConfig, family: Family, from_search: bool) -> Result<(), CliError> {
    let layout = Layout::new(&cfg.out);
    let hp: Hyperparams = if from_search {
        let path = layout.search(family);
        require(&path, &format!("search --model {}", family.name()))?;
        let text = fs::read_to_string(&path)?;
        let r: trendalpha::evaluation::SearchResult =
            serde_json::from_str(&text).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
        r.best_params
    } else {
        cfg.hyperparams(family)?
    };
    let (train, _) = load_split(cfg)?;
    let model = learners::train(&training_set(cfg, train)?, &hp, cfg.seed)?;
    let mut out = Outputs::new(&cfg.out);
    out.write(&layout.model(family), model.to_json()?.as_bytes())?;
    log_run(cfg, "train", &out)
}

#[derive(Serialize)]
struct EvaluationReport<'a> {
    family: &'a str,
    test_rows: usize,
    metrics: &'a trendalpha::evaluation::Metrics,
}

pub fn evaluate(cfg: &RunConfig, model_path: &Path) -> Result<(), CliError> {
    let layout = Layout::new(&cfg.out);
    if !model_path.exists() {
        return Err(CliError::User(format!(
            "missing {}; run `trendalpha train` first",
            model_path.display()
        )));
    }
    let text = fs::read_to_string(model_path)?;
    let model = TrainedModel::from_json(&text)?;
    let (_, test) = load_split(cfg)?;
    let test = test.select_features(&model.feature_names)?;
    let probs = model.predict_proba_dataset(&test)?;
    let mut metrics = compute_metrics(&test.y, &to_classes(&probs, 0.5))?;
    let (auc, roc) = roc_auc(&test.y, &probs)?;
    metrics.auc = Some(auc);
    let dir = layout.evaluation(model_path);
    let mut out = Outputs::new(&cfg.out);
    out.write_json(
        &dir.join("metrics.json"),
        &EvaluationReport {
            family: model.family().name(),
            test_rows: test.n_rows(),
            metrics: &metrics,
        },
    )?;
    out.write(&dir.join("roc.csv"), &csv_bytes(|b| write_roc_csv(&roc, b))?)?;
    match importance_report(&model, DEFAULT_IMPORTANCE_THRESHOLD) {
        Ok(r) => {
            let mut s = String::from("feature,importance,retained\n");
            for (name, v) in &r.ranked {
                s.push_str(&format!("{name},{v:.6},{}\n", u8::from(*v > r.threshold)));
            }
            out.write(&dir.join("importance.csv"), s.as_bytes())?;
        }
        Err(Error::Capability(_)) => {}
        Err(e) => return Err(e.into()),
    }
    println!(
        "accuracy {:.6} precision {:.6} recall {:.6} f1 {:.6} auc {:.6}",
        metrics.accuracy, metrics.precision, metrics.recall, metrics.f1, auc
    );
    log_run(cfg, "evaluate", &out)
}

pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let (train, test) = load_split(cfg)?;
    let c = pipeline::compare(cfg, &train, &test)?;
    let dir = Layout::new(&cfg.out).compare();
    let mut out = Outputs::new(&cfg.out);
    let table = csv_bytes(|b| write_comparison_csv(&c, b))?;
    out.write(&dir.join("comparison.csv"), &table)?;
    for (label, r) in &c.rows {
        if let Ok(e) = r {
            out.write(
                &dir.join(format!("roc_{}.csv", slug(label))),
                &csv_bytes(|b| write_roc_csv(&e.roc, b))?,
            )?;
        }
    }
    out.write(&dir.join("overlay.svg"), &csv_bytes(|b| write_overlay_svg(&c, b))?)?;
    print!("{}", String::from_utf8_lossy(&table));
    let failed = c.rows.iter().filter(|(_, r)| r.is_err()).count();
    log_run(cfg, "compare", &out)?;
    if failed == c.rows.len() {
        return Err(CliError::User("every model failed; see the log above".into()));
    }
    Ok(())
}

/// Writes a synthetic index plus constituents as CSVs into `dir`.
pub fn synth(cfg: &RunConfig, synth: &SyntheticConfig, dir: &Path) -> Result<(), CliError> {
    let market = generate(synth);
    let schema = ColumnSchema::default();
    let mut out = Outputs::new(&cfg.out);
    out.write(
        &dir.join(format!("{INDEX_TICKER}.csv")),
        &csv_bytes(|b| write_csv(&market.index, 0, &schema, b))?,
    )?;
    let c = &market.constituents;
    for (k, t) in c.tickers().iter().enumerate() {
        out.write(&dir.join(format!("{t}.csv")), &csv_bytes(|b| write_csv(c, k, &schema, b))?)?;
    }
    log_run(cfg, "synth", &out)
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
