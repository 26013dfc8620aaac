use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spurcheck::annotate::annotate;
use spurcheck::artifact::DirLock;
use spurcheck::bench::write_synthetic;
use spurcheck::config::{Overrides, RunConfig};
use spurcheck::error::{Error, Result};
use spurcheck::report::report;
use spurcheck::stages::{self, SelectOptions, Workspace};
use spurcheck_core::robustness::Strategy;
use spurcheck_core::synth::SynthConfig;

const DEFAULT_OUT: &str = "spurcheck-out";

/// Find spurious word-label correlations in a text classification dataset.
#[derive(Debug, Parser)]
#[command(name = "spurcheck", version, about)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory (default: the config's `output`, else ./spurcheck-out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
    #[command(subcommand)]
    command: Command,
}

/// Configuration overrides. They enter the config hash, so pass the same
/// ones to every stage of a run (or put them in the config file).
#[derive(Debug, Args)]
struct OverrideArgs {
    /// Raw dataset, `<label>\t<text>` per line.
    #[arg(long, global = true, value_name = "PATH")]
    dataset: Option<PathBuf>,
    /// imdb, kindle, toxic_comment, toxic_tweet or generic.
    #[arg(long, global = true)]
    kind: Option<String>,
    /// Minimum |theta| for a top word.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Context tokens on each side of a word.
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Dimension of the built-in context embeddings.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// CEV1 context-embedding file from an external encoder.
    #[arg(long, global = true, value_name = "PATH")]
    embeddings: Option<PathBuf>,
    /// Word labels CSV (`word,label[,note]`).
    #[arg(long, global = true, value_name = "PATH")]
    labels: Option<PathBuf>,
    /// Cross-validation folds for the word classifier.
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Words removed between curve points.
    #[arg(long, global = true)]
    step: Option<usize>,
    /// auc or accuracy.
    #[arg(long, global = true)]
    metric: Option<String>,
    /// Sentences per tracked word in each evaluation group.
    #[arg(long, global = true)]
    quota: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read, balance and split the raw dataset.
    Ingest,
    /// Train the document classifier and pick the top words.
    TrainDoc,
    /// Extract context windows (and built-in embeddings).
    Extract,
    /// Find the best counterfactual match for every top-word occurrence.
    Match,
    /// Compute per-word features from the matches.
    Featurize,
    /// Label unlabeled top words interactively.
    Annotate,
    /// Cross-validate and fit the word classifier.
    TrainWord,
    /// Compute feature-removal curves and reference lines.
    Select {
        /// Strategy to run; repeat for several (default: every strategy whose inputs exist).
        #[arg(long = "strategy", value_name = "NAME")]
        strategies: Vec<String>,
        /// Word model trained on another domain, for predicted_transfer.
        #[arg(long, value_name = "PATH")]
        word_model: Option<PathBuf>,
    },
    /// Write a plain-text summary of the output directory.
    Report,
    /// Write a synthetic dataset, its word labels and a benchmark config.
    Synth {
        #[arg(long, default_value_t = 2000)]
        sentences: usize,
        /// Token prefix; domains with different tags share no words.
        #[arg(long, default_value = "a")]
        tag: String,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
    },
    /// Every stage that needs no human input, then the report.
    RunAll,
}

impl OverrideArgs {
    fn into_overrides(self, seed: Option<u64>) -> Overrides {
        Overrides {
            seed,
            dataset: self.dataset,
            kind: self.kind,
            threshold: self.threshold,
            window: self.window,
            dim: self.dim,
            embeddings: self.embeddings,
            labels: self.labels,
            folds: self.folds,
            step: self.step,
            metric: self.metric,
            quota: self.quota,
            transfer_model: None,
        }
    }
}

fn print_written(paths: &[PathBuf]) {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    for p in paths {
        let _ = writeln!(lock, "wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Synth { sentences, tag, rho } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let seed = cli.seed.unwrap_or(42);
        if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_lowercase()) {
            return Err(Error::Usage(format!("--tag must be lowercase letters, got `{tag}`")));
        }
        let synth = SynthConfig { n_sentences: *sentences, tag: tag.clone(), rho: *rho, seed, ..SynthConfig::default() };
        let _lock = DirLock::acquire(&out)?;
        let files = write_synthetic(&out, &synth, seed)?;
        print_written(&[files.data, files.labels, files.config]);
        return Ok(());
    }

    let config = RunConfig::load(cli.config.as_deref(), &cli.overrides.into_overrides(cli.seed))?;
    let out = cli.out.or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let ws = Workspace::new(config, out)?;
    let _lock = DirLock::acquire(&ws.out)?;
    let written = match cli.command {
        Command::Ingest => stages::ingest(&ws)?,
        Command::TrainDoc => stages::train_doc_stage(&ws)?,
        Command::Extract => stages::extract(&ws)?,
        Command::Match => stages::match_stage(&ws)?,
        Command::Featurize => stages::featurize(&ws)?,
        Command::Annotate => {
            let stdin = io::stdin();
            annotate(&ws, stdin.lock(), io::stdout())?;
            Vec::new()
        }
        Command::TrainWord => stages::train_word(&ws)?,
        Command::Select { strategies, word_model } => {
            let strategies = if strategies.is_empty() {
                None
            } else {
                let parsed = strategies.iter().map(|s| s.parse::<Strategy>()).collect::<std::result::Result<Vec<_>, _>>();
                Some(parsed.map_err(|e| Error::Usage(e.to_string()))?)
            };
            stages::select(&ws, &SelectOptions { strategies, word_model })?
        }
        Command::Report => vec![report(&ws)?],
        Command::RunAll => stages::run_all(&ws)?,
        Command::Synth { .. } => unreachable!("handled above"),
    };
    print_written(&written);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
