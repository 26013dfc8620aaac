//! Synthetic datasets on disk: the raw TSV, its ground-truth word labels and
//! a configuration with the benchmark settings.

use std::path::{Path, PathBuf};

use spurcheck_core::synth::{generate, SynthConfig, SynthCorpus};

use crate::artifact::write_atomic;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::tables::labels_to_string;

pub const DATA: &str = "data.tsv";
pub const LABELS: &str = "labels.csv";
pub const CONFIG: &str = "spurcheck.toml";

/// Settings the synthetic benchmark is evaluated with. Half the corpus is
/// held out and each tracked word contributes up to 20 sentences per group,
/// so the minority groups are large enough to measure.
pub fn benchmark_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig { seed, ..RunConfig::default() };
    cfg.dataset.name = "synthetic".into();
    cfg.dataset.kind = "generic".into();
    cfg.dataset.test_fraction = 0.5;
    cfg.robustness.quota = 20;
    cfg.robustness.step = 5;
    cfg.robustness.metric = Some("accuracy".into());
    cfg
}

/// Files written by [`write_synthetic`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub data: PathBuf,
    pub labels: PathBuf,
    pub config: PathBuf,
    pub corpus: SynthCorpus,
}

/// Generates a corpus into `dir` with a config whose paths are relative
/// to `dir`, so the directory can be moved.
pub fn write_synthetic(dir: &Path, synth: &SynthConfig, seed: u64) -> Result<SynthFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let corpus = generate(synth);
    let data = dir.join(DATA);
    write_atomic(&data, corpus.to_tsv().as_bytes())?;
    let labels = dir.join(LABELS);
    write_atomic(&labels, labels_to_string(&corpus.word_labels()).as_bytes())?;
    let mut cfg = benchmark_config(seed);
    cfg.dataset.path = Some(PathBuf::from(DATA));
    cfg.words.labels = Some(PathBuf::from(LABELS));
    let config = dir.join(CONFIG);
    write_atomic(&config, cfg.to_toml().as_bytes())?;
    Ok(SynthFiles { data, labels, config, corpus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    #[test]
    fn written_config_loads_with_resolved_paths() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_synthetic(dir.path(), &SynthConfig { n_sentences: 50, ..Default::default() }, 42).unwrap();
        let cfg = RunConfig::load(Some(&files.config), &Overrides::default()).unwrap();
        assert_eq!(cfg.dataset.path.as_deref(), Some(files.data.as_path()));
        assert_eq!(cfg.words.labels.as_deref(), Some(files.labels.as_path()));
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.robustness.quota, 20);
    }
}
