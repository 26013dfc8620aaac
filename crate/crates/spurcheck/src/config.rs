//! Run configuration: TOML file, command-line overrides, and the hash that
//! ties artifacts to the configuration that produced them.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spurcheck_core::corpus::DatasetKind;
use spurcheck_core::docmodel::Metric;
use spurcheck_core::logistic::TrainOptions;

use crate::artifact::Provenance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Artifact directory; `--out` wins over this.
    pub output: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub doc: DocConfig,
    pub contexts: ContextConfig,
    pub embedding: EmbeddingConfig,
    pub words: WordConfig,
    pub robustness: RobustnessConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    /// imdb, kindle, toxic_comment, toxic_tweet or generic
    pub kind: String,
    pub path: Option<PathBuf>,
    pub test_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DocConfig {
    pub threshold: f64,
    pub l2_strength: f64,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidates {
    /// Windows of other top-word occurrences.
    TopWords,
    /// Windows around every token position.
    AllPositions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextConfig {
    pub window: usize,
    pub candidates: Candidates,
    pub dedup_per_sentence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    Fallback,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub source: EmbeddingSource,
    /// Fallback vector dimension.
    pub dim: usize,
    /// `CEV1` file when `source = "file"`.
    pub path: Option<PathBuf>,
    /// Context manifest the file was exported from; defaults to the
    /// extracted `contexts.jsonl`.
    pub manifest: Option<PathBuf>,
    /// Optional exporter summary to check against the file.
    pub export_manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WordConfig {
    /// `word,label` CSV; defaults to `labels.csv` in the output directory.
    pub labels: Option<PathBuf>,
    pub l2_strength: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub folds: usize,
    /// Word model trained on another domain, for `predicted_transfer`.
    pub transfer_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupWords {
    /// Labeled spurious top words when labels exist, otherwise all top words.
    Auto,
    Spurious,
    Top,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    pub quota: usize,
    pub step: usize,
    /// auc or accuracy; defaults to accuracy for toxicity data, AUC otherwise.
    pub metric: Option<String>,
    pub group_words: GroupWords,
    /// Plain word lists, one word per line.
    pub lexicon: Vec<PathBuf>,
}


impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig { name: "corpus".into(), kind: "generic".into(), path: None, test_fraction: 0.2 }
    }
}

impl Default for DocConfig {
    fn default() -> Self {
        let t = spurcheck_core::pipeline::DOC_TRAIN;
        DocConfig { threshold: 1.0, l2_strength: t.l2_strength, max_iter: t.max_iter, tol: t.tol }
    }
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            window: spurcheck_core::contexts::DEFAULT_WINDOW,
            candidates: Candidates::TopWords,
            dedup_per_sentence: false,
        }
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { source: EmbeddingSource::Fallback, dim: 100, path: None, manifest: None, export_manifest: None }
    }
}

impl Default for WordConfig {
    fn default() -> Self {
        let t = spurcheck_core::wordclf::DEFAULT_TRAIN;
        WordConfig { labels: None, l2_strength: t.l2_strength, max_iter: t.max_iter, tol: t.tol, folds: 10, transfer_model: None }
    }
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            quota: spurcheck_core::robustness::DEFAULT_QUOTA,
            step: 1,
            metric: None,
            group_words: GroupWords::Auto,
            lexicon: Vec::new(),
        }
    }
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dataset: Option<PathBuf>,
    pub kind: Option<String>,
    pub threshold: Option<f64>,
    pub window: Option<usize>,
    pub dim: Option<usize>,
    pub embeddings: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub folds: Option<usize>,
    pub step: Option<usize>,
    pub metric: Option<String>,
    pub quota: Option<usize>,
    pub transfer_model: Option<PathBuf>,
}

impl RunConfig {
    /// Parses TOML; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<RunConfig> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Defaults, then the file (if any), then `overrides`.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let dir = match p.parent() {
                    Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                    _ => PathBuf::from("."),
                };
                let base = std::path::absolute(&dir).map_err(|e| Error::io(&dir, e))?;
                RunConfig::from_toml(&text, &base)?
            }
            None => RunConfig::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.output);
        fix(&mut self.dataset.path);
        fix(&mut self.embedding.path);
        fix(&mut self.embedding.manifest);
        fix(&mut self.embedding.export_manifest);
        fix(&mut self.words.labels);
        fix(&mut self.words.transfer_model);
        for l in &mut self.robustness.lexicon {
            if l.is_relative() {
                *l = base.join(&*l);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.dataset {
            self.dataset.path = Some(absolute(v));
        }
        if let Some(v) = &o.kind {
            self.dataset.kind = v.clone();
        }
        if let Some(v) = o.threshold {
            self.doc.threshold = v;
        }
        if let Some(v) = o.window {
            self.contexts.window = v;
        }
        if let Some(v) = o.dim {
            self.embedding.dim = v;
        }
        if let Some(v) = &o.embeddings {
            self.embedding.source = EmbeddingSource::File;
            self.embedding.path = Some(absolute(v));
        }
        if let Some(v) = &o.labels {
            self.words.labels = Some(absolute(v));
        }
        if let Some(v) = o.folds {
            self.words.folds = v;
        }
        if let Some(v) = o.step {
            self.robustness.step = v;
        }
        if let Some(v) = &o.metric {
            self.robustness.metric = Some(v.clone());
        }
        if let Some(v) = o.quota {
            self.robustness.quota = v;
        }
        if let Some(v) = &o.transfer_model {
            self.words.transfer_model = Some(absolute(v));
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kind()?;
        self.metric()?;
        let d = &self.dataset;
        if !(d.test_fraction > 0.0 && d.test_fraction < 1.0) {
            return Err(Error::Config(format!("dataset.test_fraction must be in (0, 1), got {}", d.test_fraction)));
        }
        if self.doc.threshold < 0.0 || !self.doc.threshold.is_finite() {
            return Err(Error::Config("doc.threshold must be a finite value >= 0".into()));
        }
        if self.doc.l2_strength < 0.0 || self.words.l2_strength < 0.0 {
            return Err(Error::Config("l2_strength must be >= 0".into()));
        }
        if self.embedding.dim == 0 {
            return Err(Error::Config("embedding.dim must be >= 1".into()));
        }
        if self.embedding.source == EmbeddingSource::File && self.embedding.path.is_none() {
            return Err(Error::Config("embedding.source = \"file\" needs embedding.path".into()));
        }
        if self.words.folds < 2 {
            return Err(Error::Config("words.folds must be >= 2".into()));
        }
        if self.robustness.quota == 0 || self.robustness.step == 0 {
            return Err(Error::Config("robustness.quota and robustness.step must be >= 1".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> Result<DatasetKind> {
        DatasetKind::from_str(&self.dataset.kind).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn metric(&self) -> Result<Metric> {
        match &self.robustness.metric {
            Some(m) => Metric::from_str(m).map_err(|e| Error::Config(e.to_string())),
            None => Ok(match self.kind()? {
                DatasetKind::ToxicComment | DatasetKind::ToxicTweet => Metric::Accuracy,
                _ => Metric::Auc,
            }),
        }
    }

    pub fn doc_train(&self) -> TrainOptions {
        TrainOptions { l2_strength: self.doc.l2_strength, max_iter: self.doc.max_iter, tol: self.doc.tol }
    }

    pub fn word_train(&self) -> TrainOptions {
        TrainOptions { l2_strength: self.words.l2_strength, max_iter: self.words.max_iter, tol: self.words.tol }
    }

    /// Hash of every setting that shapes derived artifacts.
    ///
    /// Input files enter through their contents, not their paths, so the
    /// same data and settings give the same hash wherever they live. Word
    /// labels and foreign word models are left out: they are inputs that
    /// change while a pipeline is being worked on. So is an external
    /// embedding file, which is produced from `contexts.jsonl` after the
    /// hash is first stamped; its rows are checked against the contexts
    /// instead (and against its digest when an export manifest is given).
    pub fn hash(&self) -> Result<String> {
        let mut view = self.clone();
        view.output = None;
        view.dataset.path = None;
        view.embedding.path = None;
        view.embedding.manifest = None;
        view.embedding.export_manifest = None;
        view.words.labels = None;
        view.words.transfer_model = None;
        view.robustness.lexicon = Vec::new();
        let digest_of = |p: &Option<PathBuf>| -> Result<Option<String>> { p.as_deref().map(file_digest).transpose() };
        let inputs = serde_json::json!({
            "dataset": digest_of(&self.dataset.path)?,
            "lexicon": self.robustness.lexicon.iter().map(|p| file_digest(p)).collect::<Result<Vec<_>>>()?,
        });
        let canonical = serde_json::json!({ "config": view, "inputs": inputs }).to_string();
        Ok(hex(&Sha256::digest(canonical.as_bytes()))[..16].to_string())
    }

    pub fn provenance(&self) -> Result<Provenance> {
        Ok(Provenance { config_hash: self.hash()?, seed: self.seed })
    }
}

/// Command-line paths are relative to the working directory.
fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a file's contents, hex encoded.
pub fn file_digest(path: &Path) -> Result<String> {
    use std::io::Read;
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml(), Path::new("")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 5\n[doc]\nthreshold = 0.7\n[dataset]\npath = \"data.tsv\"\n").unwrap();
        let cfg = RunConfig::load(Some(&path), &Overrides { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.doc.threshold, 0.7);
        assert_eq!(cfg.words.folds, 10);
        assert_eq!(cfg.dataset.path.as_deref(), Some(dir.path().join("data.tsv").as_path()));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("sede = 1\n", Path::new("")), Err(Error::Config(_))));
    }

    #[test]
    fn hash_follows_content_not_location() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for d in [&a, &b] {
            std::fs::write(d.path().join("d.tsv"), "1\tgood\n-1\tbad\n").unwrap();
        }
        let mk = |d: &Path| RunConfig {
            dataset: DatasetConfig { path: Some(d.join("d.tsv")), ..Default::default() },
            ..Default::default()
        };
        assert_eq!(mk(a.path()).hash().unwrap(), mk(b.path()).hash().unwrap());
        let mut c = mk(a.path());
        c.seed = 1;
        assert_ne!(c.hash().unwrap(), mk(a.path()).hash().unwrap());
        std::fs::write(b.path().join("d.tsv"), "1\tgood\n-1\tworse\n").unwrap();
        assert_ne!(mk(a.path()).hash().unwrap(), mk(b.path()).hash().unwrap());
    }

    #[test]
    fn metric_defaults_by_dataset() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.metric().unwrap(), Metric::Auc);
        cfg.dataset.kind = "toxic_tweet".into();
        assert_eq!(cfg.metric().unwrap(), Metric::Accuracy);
        cfg.robustness.metric = Some("auc".into());
        assert_eq!(cfg.metric().unwrap(), Metric::Auc);
        cfg.robustness.metric = Some("f1".into());
        assert!(cfg.validate().is_err());
    }
}
