//! Pipeline stages over an output directory. Each stage reads the artifacts
//! of the stages before it, refuses any written under a different
//! configuration, and writes its own atomically.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use spurcheck_core::contexts::{extract_all_positions, extract_contexts, ContextWindow, EmbeddingStore, Provenance as StoreProvenance};
use spurcheck_core::corpus::{ingest_str, split, Corpus, Split};
use spurcheck_core::docmodel::{top_words, train_doc, TopWord, TopWordSet};
use spurcheck_core::embed::{fallback_embed, FallbackOptions};
use spurcheck_core::matcher::{ate, records_by_word, MatchOptions, MatchRecord, Matcher};
use spurcheck_core::pipeline::word_features;
use spurcheck_core::robustness::{build_groups, downsample_baseline, lexicon_baseline, make_plan, PlanInputs, Strategy};
use spurcheck_core::wordclf::{self, WordClass, WordLabel};
use spurcheck_core::wordfeat::Scaler;

use crate::artifact::{check_provenance, read_to_string, write_atomic, Provenance};
use crate::config::{file_digest, Candidates, EmbeddingSource, GroupWords, RunConfig};
use crate::error::{Error, Result};
use crate::formats::embeddings::{self as cev, ExportManifest, ManifestEntry};
use crate::formats::tables::{self, CurveRow, EvalRow, PredictionRow, ReferenceRow, Table};
use crate::formats::{corpus as corpus_fmt, matches as matches_fmt, model};
use crate::parallel;

pub const RUN_CONFIG: &str = "run_config.toml";
pub const CORPUS: &str = "corpus.jsonl";
pub const DOC_MODEL: &str = "doc_model.txt";
pub const TOP_WORDS: &str = "top_words.csv";
pub const CONTEXTS: &str = "contexts.jsonl";
pub const EMBEDDINGS: &str = "embeddings.cev";
pub const EMBEDDINGS_SUMMARY: &str = "embeddings.json";
pub const MATCHES: &str = "matches.jsonl";
pub const MATCHES_DUMP: &str = "matches.txt";
pub const MATCH_SUMMARY: &str = "match_summary.csv";
pub const FEATURES: &str = "features.csv";
pub const SCALER: &str = "scaler.txt";
pub const DIAGNOSTICS: &str = "feature_diagnostics.csv";
pub const LABELS: &str = "labels.csv";
pub const WORD_MODEL: &str = "word_model.txt";
pub const PREDICTIONS: &str = "predictions.csv";
pub const WORD_EVAL: &str = "word_eval.csv";
pub const TRANSFER_PREDICTIONS: &str = "predictions_transfer.csv";
pub const TRANSFER_EVAL: &str = "word_eval_transfer.csv";
pub const GROUPS: &str = "groups.csv";
pub const REFERENCES: &str = "references.csv";
pub const REPORT: &str = "report.txt";

pub fn curve_file(strategy: Strategy) -> String {
    format!("curve_{}.csv", strategy.as_str())
}

/// A configuration bound to its output directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: RunConfig,
    pub out: PathBuf,
    pub prov: Provenance,
}

impl Workspace {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Result<Workspace> {
        let out = out.into();
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let prov = config.provenance()?;
        Ok(Workspace { config, out, prov })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// An upstream artifact: it must exist and carry the current config hash.
    pub fn input(&self, name: &str, stage: &'static str) -> Result<PathBuf> {
        let p = self.path(name);
        if !p.exists() {
            return Err(Error::MissingArtifact { path: p, stage });
        }
        check_provenance(&p, &self.prov)?;
        Ok(p)
    }

    pub fn labels_path(&self) -> PathBuf {
        self.config.words.labels.clone().unwrap_or_else(|| self.path(LABELS))
    }

    /// Labels if the file exists.
    pub fn labels(&self) -> Result<Option<Vec<WordLabel>>> {
        let p = self.labels_path();
        if p.exists() {
            tables::read_labels(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn corpus(&self) -> Result<Corpus> {
        let p = self.input(CORPUS, "ingest")?;
        Ok(corpus_fmt::read(&p, &self.config.dataset.name)?.1)
    }

    pub fn top_words(&self) -> Result<TopWordSet> {
        Ok(tables::read_top_words(&self.input(TOP_WORDS, "train-doc")?)?.1)
    }

    pub fn windows(&self) -> Result<Vec<ContextWindow>> {
        let p = self.input(CONTEXTS, "extract")?;
        Ok(cev::read_manifest(&p)?.1.iter().map(ManifestEntry::window).collect())
    }

    pub fn matches(&self) -> Result<Vec<MatchRecord>> {
        Ok(matches_fmt::read(&self.input(MATCHES, "match")?)?.1)
    }

    pub fn features(&self) -> Result<Vec<spurcheck_core::wordfeat::WordFeatureVector>> {
        let f = self.input(FEATURES, "featurize")?;
        let d = self.input(DIAGNOSTICS, "featurize")?;
        Ok(tables::read_features(&f, Some(&d))?.1)
    }

    /// Context vectors for the extracted windows, from whichever source the
    /// configuration names, checked against the context manifest.
    pub fn store(&self, windows: &[ContextWindow]) -> Result<EmbeddingStore> {
        let contexts = self.input(CONTEXTS, "extract")?;
        let entries: Vec<ManifestEntry> = windows.iter().map(ManifestEntry::from).collect();
        let store = match self.config.embedding.source {
            EmbeddingSource::Fallback => {
                // the summary ties the binary to contexts.jsonl through digests
                let summary_path = self.path(EMBEDDINGS_SUMMARY);
                let bin = self.path(EMBEDDINGS);
                for p in [&summary_path, &bin] {
                    if !p.exists() {
                        return Err(Error::MissingArtifact { path: p.clone(), stage: "extract" });
                    }
                }
                let summary = cev::read_export_manifest(&summary_path)?;
                let store = cev::read(&bin, StoreProvenance::Fallback)?;
                cev::check_export(&summary, &store, &contexts)?;
                check_binary_digest(&summary, &bin)?;
                store
            }
            EmbeddingSource::File => {
                let bin = self.config.embedding.path.as_ref().ok_or_else(|| Error::Config("embedding.path is not set".into()))?;
                let store = cev::read(bin, StoreProvenance::ExternalFile)?;
                let manifest = self.config.embedding.manifest.clone().unwrap_or_else(|| contexts.clone());
                if manifest != contexts {
                    let (_, external) = cev::read_manifest(&manifest)?;
                    cev::check_manifest(&external, windows)?;
                }
                if let Some(summary_path) = &self.config.embedding.export_manifest {
                    let summary = cev::read_export_manifest(summary_path)?;
                    cev::check_export(&summary, &store, &manifest)?;
                    check_binary_digest(&summary, bin)?;
                }
                store
            }
        };
        cev::check_store(&store, &entries)?;
        Ok(store)
    }

    fn write_table<T: Table>(&self, name: &str, kind: &str, rows: &[T]) -> Result<PathBuf> {
        let p = self.path(name);
        tables::write_table(&p, kind, &self.prov, rows)?;
        Ok(p)
    }
}

fn check_binary_digest(summary: &ExportManifest, bin: &Path) -> Result<()> {
    if let Some(want) = &summary.binary_sha256 {
        let have = file_digest(bin)?;
        if !want.eq_ignore_ascii_case(&have) {
            return Err(Error::ManifestMismatch(format!("{} has sha256 {have}, the export summary says {want}", bin.display())));
        }
    }
    Ok(())
}

fn treated_words(top: &TopWordSet) -> BTreeSet<&str> {
    top.word_set()
}

/// Reads the raw dataset, balances, splits and writes the canonical corpus.
pub fn ingest(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let cfg = &ws.config;
    let data = cfg.dataset.path.as_ref().ok_or_else(|| Error::Config("dataset.path is not set (use --dataset)".into()))?;
    let content = read_to_string(data)?;
    let corpus = ingest_str(&cfg.dataset.name, &content, cfg.kind()?, cfg.seed).map_err(|e| match e {
        spurcheck_core::Error::MalformedRecord { line, reason } => Error::parse(data, line, reason),
        other => other.into(),
    })?;
    let corpus = split(&corpus, cfg.dataset.test_fraction, cfg.seed)?;
    let corpus_path = ws.path(CORPUS);
    corpus_fmt::write(&corpus_path, &corpus, &ws.prov)?;
    let config_path = ws.path(RUN_CONFIG);
    write_atomic(&config_path, (ws.prov.comment_line("run_config") + &cfg.to_toml()).as_bytes())?;
    Ok(vec![corpus_path, config_path])
}

/// Fits the document classifier on the train split and selects top words.
pub fn train_doc_stage(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let corpus = ws.corpus()?;
    let model = train_doc(&corpus, &ws.config.doc_train())?;
    let top = top_words(&model, ws.config.doc.threshold);
    let model_path = ws.path(DOC_MODEL);
    model::write_doc_model(&model_path, &model, &ws.prov)?;
    let top_path = ws.write_table(TOP_WORDS, "top_words", &tables::top_word_rows(&top))?;
    Ok(vec![model_path, top_path])
}

/// Extracts context windows and, for the built-in embedder, their vectors.
pub fn extract(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let cfg = &ws.config;
    let corpus = ws.corpus()?;
    let top = ws.top_words()?;
    if top.is_empty() {
        return Err(spurcheck_core::Error::MissingInput(format!(
            "top words: no coefficient reaches |theta| >= {}; lower doc.threshold",
            cfg.doc.threshold
        ))
        .into());
    }
    let windows = match cfg.contexts.candidates {
        Candidates::TopWords => extract_contexts(&corpus, &top, cfg.contexts.window),
        Candidates::AllPositions => extract_all_positions(&corpus, cfg.contexts.window),
    };
    let contexts = ws.path(CONTEXTS);
    cev::write_manifest(&contexts, &windows, &ws.prov)?;
    let mut written = vec![contexts.clone()];
    if cfg.embedding.source == EmbeddingSource::Fallback {
        let opts = FallbackOptions { dim: cfg.embedding.dim, seed: cfg.seed, ..Default::default() };
        let store = fallback_embed(&corpus, &windows, &opts)?;
        let bin = ws.path(EMBEDDINGS);
        cev::write(&bin, &store)?;
        let summary = ExportManifest {
            model: "fallback-ppmi".into(),
            revision: None,
            dim: store.dim(),
            hidden_size: None,
            count: store.len() as u64,
            manifest_sha256: file_digest(&contexts)?,
            pooling: Some("mean".into()),
            binary_sha256: Some(file_digest(&bin)?),
        };
        let summary_path = ws.path(EMBEDDINGS_SUMMARY);
        write_atomic(&summary_path, cev::export_manifest_to_string(&summary).as_bytes())?;
        written.extend([bin, summary_path]);
    }
    Ok(written)
}

/// Best-match search for every top-word occurrence.
pub fn match_stage(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let corpus = ws.corpus()?;
    let top = ws.top_words()?;
    let windows = ws.windows()?;
    let store = ws.store(&windows)?;
    let words = treated_words(&top);
    let treated: Vec<ContextWindow> = windows.iter().filter(|w| words.contains(w.word.as_str())).cloned().collect();
    let matcher = Matcher::new(&corpus, &windows, &store)?;
    let opts = MatchOptions { dedup_per_sentence: ws.config.contexts.dedup_per_sentence };
    let (records, diag) = parallel::match_all(&matcher, &treated, &opts)?;

    let mut effects = BTreeMap::new();
    for (word, recs) in records_by_word(&records) {
        let owned: Vec<MatchRecord> = recs.into_iter().cloned().collect();
        effects.insert(word.to_string(), ate(&owned)?.tau);
    }
    let matches_path = ws.path(MATCHES);
    matches_fmt::write(&matches_path, &records, &ws.prov)?;
    let dump_path = ws.path(MATCHES_DUMP);
    write_atomic(&dump_path, matches_fmt::dump(&records, &windows, &ws.prov).as_bytes())?;
    let summary = ws.write_table(MATCH_SUMMARY, "match_summary", &tables::summary_rows(&top, &diag, &effects))?;
    Ok(vec![matches_path, dump_path, summary])
}

/// Per-word features from the matches, plus this domain's scaler.
pub fn featurize(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let top = ws.top_words()?;
    let windows = ws.windows()?;
    let records = ws.matches()?;
    let store = ws.store(&windows)?;
    let features = word_features(&top, &records, &store)?;
    if features.is_empty() {
        return Err(spurcheck_core::Error::MissingInput("word features: no top word has a match".into()).into());
    }
    let rows: Vec<_> = features.iter().map(|f| f.values).collect();
    let scaler = Scaler::fit(&rows)?;
    let features_path = ws.path(FEATURES);
    write_atomic(&features_path, tables::features_to_string(&features, &ws.prov).as_bytes())?;
    let scaler_path = ws.path(SCALER);
    write_atomic(&scaler_path, model::scaler_to_string(&scaler, &ws.prov).as_bytes())?;
    let diag = ws.write_table(DIAGNOSTICS, "feature_diagnostics", &tables::diagnostic_rows(&features))?;
    Ok(vec![features_path, scaler_path, diag])
}

fn class_counts(labels: &[WordClass]) -> (usize, usize) {
    let sp = labels.iter().filter(|&&c| c == WordClass::Spurious).count();
    (sp, labels.len() - sp)
}

fn prediction_rows(words: &[String], probs: &[f64], source: impl Fn(&str) -> &'static str) -> Vec<PredictionRow> {
    wordclf::rank_spurious(words, probs)
        .into_iter()
        .enumerate()
        .map(|(i, (word, p))| PredictionRow { source: source(&word).into(), word, p_spurious: p, rank: i + 1 })
        .collect()
}

/// Cross-validates and fits the word classifier on the labeled top words,
/// then scores every featurized top word.
pub fn train_word(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let features = ws.features()?;
    let labels_path = ws.labels_path();
    if !labels_path.exists() {
        return Err(Error::MissingArtifact { path: labels_path, stage: "annotate" });
    }
    let labels = tables::read_labels(&labels_path)?;
    let rows = wordclf::join_labels(&features, &labels);
    if rows.words.is_empty() {
        return Err(spurcheck_core::Error::MissingInput(format!("no word in {} has features", labels_path.display())).into());
    }
    let opts = ws.config.word_train();
    let cv = wordclf::cross_validate(&rows.rows, &rows.labels, ws.config.words.folds, ws.config.seed, &opts)?;
    let model = wordclf::fit(&rows.rows, &rows.labels, &opts)?;

    // labeled words get their held-out probability, the rest the full model's
    let held: BTreeMap<&str, f64> = rows.words.iter().map(String::as_str).zip(cv.held_out.iter().copied()).collect();
    let words: Vec<String> = features.iter().map(|f| f.word.clone()).collect();
    let probs: Vec<f64> = features.iter().map(|f| held.get(f.word.as_str()).copied().unwrap_or_else(|| model.score(&f.values))).collect();
    let preds = prediction_rows(&words, &probs, |w| if held.contains_key(w) { "held_out" } else { "model" });

    let (n_spurious, n_genuine) = class_counts(&rows.labels);
    let eval = EvalRow { name: "cross_validation".into(), auc: cv.auc, n_words: rows.words.len(), n_spurious, n_genuine };
    let model_path = ws.path(WORD_MODEL);
    model::write_word_model(&model_path, &model, &ws.prov)?;
    let pred_path = ws.write_table(PREDICTIONS, "predictions", &preds)?;
    let eval_path = ws.write_table(WORD_EVAL, "word_eval", &[eval])?;
    Ok(vec![model_path, pred_path, eval_path])
}

/// Plain word lists; blank lines and `;`/`#` comments are ignored.
pub fn load_lexicon(paths: &[PathBuf]) -> Result<BTreeSet<String>> {
    let mut words = BTreeSet::new();
    for p in paths {
        for line in read_to_string(p)?.lines() {
            let w = line.trim();
            if w.is_empty() || w.starts_with(';') || w.starts_with('#') {
                continue;
            }
            words.insert(w.to_lowercase());
        }
    }
    Ok(words)
}

/// Words whose sentences form the evaluation groups, in |θ| order.
pub fn group_words(top: &TopWordSet, labels: Option<&[WordLabel]>, mode: GroupWords) -> Result<Vec<TopWord>> {
    let spurious: Option<BTreeSet<&str>> =
        labels.map(|ls| ls.iter().filter(|l| l.label == WordClass::Spurious).map(|l| l.word.as_str()).collect());
    let labeled: Vec<TopWord> = match &spurious {
        Some(sp) => top.entries.iter().filter(|t| sp.contains(t.word.as_str())).cloned().collect(),
        None => Vec::new(),
    };
    match mode {
        GroupWords::Top => Ok(top.entries.clone()),
        GroupWords::Spurious if labeled.is_empty() => {
            Err(spurcheck_core::Error::MissingInput("labeled spurious top words for group_words = \"spurious\"".into()).into())
        }
        GroupWords::Spurious => Ok(labeled),
        GroupWords::Auto if labeled.is_empty() => Ok(top.entries.clone()),
        GroupWords::Auto => Ok(labeled),
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroupRow {
    pub word: String,
    pub class: i8,
    pub majority: usize,
    pub minority: usize,
}

impl Table for GroupRow {
    const COLUMNS: &'static [&'static str] = &["word", "class", "majority", "minority"];
}

/// Options of the `select` stage.
#[derive(Debug, Clone, Default)]
pub struct SelectOptions {
    /// Strategies to run; `None` runs every strategy whose inputs exist.
    pub strategies: Option<Vec<Strategy>>,
    /// Word model from another domain, for `predicted_transfer`.
    pub word_model: Option<PathBuf>,
}

/// Scores this domain's words with a model trained elsewhere; returns the
/// `(word, p_spurious)` ranking and the files written.
#[allow(clippy::type_complexity)]
fn transfer_predictions(ws: &Workspace, model_path: &Path, labels: Option<&[WordLabel]>) -> Result<(Vec<(String, f64)>, Vec<PathBuf>)> {
    let (_, foreign) = model::read_word_model(model_path)?;
    let features = ws.features()?;
    let raw: Vec<_> = features.iter().map(|f| f.values).collect();
    let probs = wordclf::transfer(&foreign, &raw);
    let words: Vec<String> = features.iter().map(|f| f.word.clone()).collect();
    let preds = prediction_rows(&words, &probs, |_| "transfer");
    let mut written = vec![ws.write_table(TRANSFER_PREDICTIONS, "predictions", &preds)?];
    if let Some(labels) = labels {
        let rows = wordclf::join_labels(&features, labels);
        let by_word: BTreeMap<&str, f64> = words.iter().map(String::as_str).zip(probs.iter().copied()).collect();
        let scores: Vec<f64> = rows.words.iter().map(|w| by_word[w.as_str()]).collect();
        let (n_spurious, n_genuine) = class_counts(&rows.labels);
        if n_spurious > 0 && n_genuine > 0 {
            let auc = wordclf::auc(&scores, &rows.labels)?;
            let eval = EvalRow { name: "transfer".into(), auc, n_words: rows.words.len(), n_spurious, n_genuine };
            written.push(ws.write_table(TRANSFER_EVAL, "word_eval", &[eval])?);
        }
    }
    Ok((words.into_iter().zip(probs).collect(), written))
}

/// Removal curves for the chosen strategies plus the reference lines.
pub fn select(ws: &Workspace, opts: &SelectOptions) -> Result<Vec<PathBuf>> {
    let cfg = &ws.config;
    let corpus = ws.corpus()?;
    let top = ws.top_words()?;
    let labels = ws.labels()?;
    let lexicon = if cfg.robustness.lexicon.is_empty() { None } else { Some(load_lexicon(&cfg.robustness.lexicon)?) };
    let mut written = Vec::new();

    // stale predictions are ignored unless a predicted curve was asked for
    let same_domain = match ws.input(PREDICTIONS, "train-word") {
        Ok(p) => Some(tables::read_predictions(&p)?.1),
        Err(Error::MissingArtifact { .. } | Error::ConfigMismatch { .. }) if opts.strategies.is_none() => None,
        Err(Error::MissingArtifact { .. }) => None,
        Err(e) => return Err(e),
    };
    let model_path = opts.word_model.clone().or_else(|| cfg.words.transfer_model.clone());
    let transfer = match &model_path {
        Some(p) => {
            let (preds, files) = transfer_predictions(ws, p, labels.as_deref())?;
            written.extend(files);
            Some(preds)
        }
        None => None,
    };

    let strategies = match &opts.strategies {
        Some(s) => s.clone(),
        None => Strategy::ALL
            .into_iter()
            .filter(|s| match s {
                Strategy::Oracle => labels.as_ref().is_some_and(|ls| {
                    ls.iter().any(|l| l.label == WordClass::Spurious && top.get(&l.word).is_some())
                }),
                Strategy::Lexicon => lexicon.is_some(),
                Strategy::Random => true,
                Strategy::PredictedSameDomain => same_domain.is_some(),
                Strategy::PredictedTransfer => transfer.is_some(),
            })
            .collect(),
    };

    let metric = cfg.metric()?;
    let tracked = group_words(&top, labels.as_deref(), cfg.robustness.group_words)?;
    let groups = build_groups(&corpus, Split::Test, &tracked, Some(cfg.robustness.quota), cfg.seed)?;
    let mut group_rows: Vec<GroupRow> = groups
        .specs
        .iter()
        .map(|g| GroupRow { word: g.word.clone(), class: g.class.sign(), majority: g.majority.len(), minority: g.minority.len() })
        .collect();
    group_rows.extend(groups.skipped.iter().filter_map(|w| top.get(w)).map(|t| GroupRow {
        word: t.word.clone(),
        class: t.class.sign(),
        majority: 0,
        minority: 0,
    }));
    written.push(ws.write_table(GROUPS, "groups", &group_rows)?);

    let doc_opts = cfg.doc_train();
    for strategy in strategies {
        let inputs = PlanInputs {
            top_words: Some(&top),
            labels: labels.as_deref(),
            lexicon: lexicon.as_ref(),
            predictions: match strategy {
                Strategy::PredictedSameDomain => same_domain.as_deref(),
                Strategy::PredictedTransfer => transfer.as_deref(),
                _ => None,
            },
        };
        let plan = make_plan(strategy, &inputs, cfg.seed)?;
        let points = parallel::run_curve(&corpus, &plan, &groups, cfg.robustness.step, metric, &doc_opts)?;
        let rows: Vec<CurveRow> = tables::curve_rows(strategy, &points);
        written.push(ws.write_table(&curve_file(strategy), "curve", &rows)?);
    }

    let mut refs: Vec<ReferenceRow> = vec![tables::reference_row(&downsample_baseline(&corpus, &tracked, &groups, cfg.seed, metric, &doc_opts)?)];
    if let Some(lex) = &lexicon {
        refs.push(tables::reference_row(&lexicon_baseline(&corpus, lex, &groups, metric, &doc_opts)?));
    }
    written.push(ws.write_table(REFERENCES, "references", &refs)?);
    Ok(written)
}

/// Every stage that needs no human input, then the report. The word
/// classifier stages run only when a labels file exists.
pub fn run_all(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let mut written = ingest(ws)?;
    written.extend(train_doc_stage(ws)?);
    written.extend(extract(ws)?);
    written.extend(match_stage(ws)?);
    written.extend(featurize(ws)?);
    if ws.labels_path().exists() {
        written.extend(train_word(ws)?);
    }
    written.extend(select(ws, &SelectOptions::default())?);
    written.push(crate::report::report(ws)?);
    Ok(written)
}
