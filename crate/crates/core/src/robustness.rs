//! Majority/minority evaluation groups and feature-removal curves.
//!
//! For a tracked word `w` with correlated class `c(w) = sign(θ_w)`, the
//! majority group holds sentences containing `w` labeled `c(w)` and the
//! minority group those labeled `-c(w)`. Removal curves retrain the document
//! classifier with the first `k` words of a plan excluded from the
//! vocabulary and score every group at each `k`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::corpus::{Corpus, Label, LabeledSentence, Split};
use crate::docmodel::{evaluate, train_with_vocab, Metric, TopWord, TopWordSet, Vocabulary};
use crate::logistic::TrainOptions;
use crate::rng::{self, stream};
use crate::wordclf::{rank_spurious, WordClass, WordLabel};
use crate::{Error, Result};

pub const DEFAULT_QUOTA: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub word: String,
    pub class: Label,
    pub majority: Vec<u64>,
    pub minority: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Groups {
    pub specs: Vec<GroupSpec>,
    /// Tracked words without any sentence in the split.
    pub skipped: Vec<String>,
}

impl Groups {
    pub fn majority_ids(&self) -> Vec<u64> {
        sorted(self.specs.iter().flat_map(|s| s.majority.iter().copied()))
    }

    pub fn minority_ids(&self) -> Vec<u64> {
        sorted(self.specs.iter().flat_map(|s| s.minority.iter().copied()))
    }

    pub fn all_ids(&self) -> Vec<u64> {
        sorted(self.specs.iter().flat_map(|s| s.majority.iter().chain(&s.minority).copied()))
    }

    /// Resolves the id lists against the corpus.
    pub fn resolve<'a>(&self, corpus: &'a Corpus) -> Result<EvalGroups<'a>> {
        let fetch = |ids: Vec<u64>| -> Result<Vec<&'a LabeledSentence>> {
            ids.into_iter()
                .map(|id| corpus.get(id).ok_or_else(|| Error::MissingInput(format!("sentence {id}"))))
                .collect()
        };
        Ok(EvalGroups {
            majority: fetch(self.majority_ids())?,
            minority: fetch(self.minority_ids())?,
            all: fetch(self.all_ids())?,
        })
    }
}

fn sorted(ids: impl Iterator<Item = u64>) -> Vec<u64> {
    let mut v: Vec<u64> = ids.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Sentences of the three evaluation groups.
#[derive(Debug, Clone)]
pub struct EvalGroups<'a> {
    pub majority: Vec<&'a LabeledSentence>,
    pub minority: Vec<&'a LabeledSentence>,
    pub all: Vec<&'a LabeledSentence>,
}

/// Builds groups over one split.
///
/// `tracked` is in priority order (normally decreasing `|θ|`); a sentence
/// containing several tracked words belongs to the first. Each word keeps
/// up to `quota` sentences per group (all of them when `quota` is `None`),
/// drawn by a seeded shuffle that depends only on the word's position, so
/// negating every label swaps the two groups exactly.
pub fn build_groups(
    corpus: &Corpus,
    split: Split,
    tracked: &[TopWord],
    quota: Option<usize>,
    seed: u64,
) -> Result<Groups> {
    if quota == Some(0) {
        return Err(Error::InvalidArgument("group quota must be >= 1".into()));
    }
    let mut sentences: Vec<&LabeledSentence> = corpus.split_sentences(split).collect();
    sentences.sort_by_key(|s| s.id);
    let mut assigned: Vec<Vec<&LabeledSentence>> = tracked.iter().map(|_| Vec::new()).collect();
    for s in sentences {
        let tokens: BTreeSet<&str> = s.tokens.iter().map(String::as_str).collect();
        if let Some(i) = tracked.iter().position(|t| tokens.contains(t.word.as_str())) {
            assigned[i].push(s);
        }
    }
    let mut groups = Groups::default();
    for (i, (t, members)) in tracked.iter().zip(assigned).enumerate() {
        if members.is_empty() {
            groups.skipped.push(t.word.clone());
            continue;
        }
        let pick = |label_matches: bool| {
            let mut ids: Vec<u64> = members
                .iter()
                .filter(|s| (s.label == t.class) == label_matches)
                .map(|s| s.id)
                .collect();
            let mut rng_ids = ids.clone();
            if let Some(q) = quota {
                let mut r = rng::seeded_item(seed, stream::GROUPS, i as u64);
                rand::seq::SliceRandom::shuffle(rng_ids.as_mut_slice(), &mut r);
                rng_ids.truncate(q);
                rng_ids.sort_unstable();
                ids = rng_ids;
            }
            ids
        };
        groups.specs.push(GroupSpec {
            word: t.word.clone(),
            class: t.class,
            majority: pick(true),
            minority: pick(false),
        });
    }
    Ok(groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Oracle,
    Lexicon,
    Random,
    PredictedSameDomain,
    PredictedTransfer,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Oracle,
        Strategy::Lexicon,
        Strategy::Random,
        Strategy::PredictedSameDomain,
        Strategy::PredictedTransfer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Oracle => "oracle",
            Strategy::Lexicon => "lexicon",
            Strategy::Random => "random",
            Strategy::PredictedSameDomain => "predicted_same_domain",
            Strategy::PredictedTransfer => "predicted_transfer",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalPlan {
    pub strategy: Strategy,
    pub words: Vec<String>,
    pub seed: u64,
}

/// Whatever a strategy may need; unused fields can stay `None`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanInputs<'a> {
    pub top_words: Option<&'a TopWordSet>,
    pub labels: Option<&'a [WordLabel]>,
    pub lexicon: Option<&'a BTreeSet<String>>,
    /// `(word, P(spurious))`
    pub predictions: Option<&'a [(String, f64)]>,
}

/// Seeded permutation of a word set. Depends only on the set and the seed.
pub fn shuffled_words<'a>(words: impl IntoIterator<Item = &'a str>, seed: u64) -> Vec<String> {
    let set: BTreeSet<&str> = words.into_iter().collect();
    let mut out: Vec<String> = set.into_iter().map(String::from).collect();
    rng::shuffle(&mut out, seed, stream::PLAN);
    out
}

/// Orders words for removal.
///
/// - oracle: labeled spurious words among the top words, shuffled
/// - random: all top words, shuffled
/// - lexicon: top words outside the lexicon, shuffled
/// - predicted_*: predictions by descending P(spurious), ties alphabetical
pub fn make_plan(strategy: Strategy, inputs: &PlanInputs<'_>, seed: u64) -> Result<RemovalPlan> {
    let need_top = || inputs.top_words.ok_or_else(|| Error::MissingInput("top words".into()));
    let words = match strategy {
        Strategy::Oracle => {
            let top = need_top()?;
            let labels = inputs.labels.ok_or_else(|| Error::MissingInput("word labels for the oracle plan".into()))?;
            let top_set = top.word_set();
            let spurious: Vec<&str> = labels
                .iter()
                .filter(|l| l.label == WordClass::Spurious && top_set.contains(l.word.as_str()))
                .map(|l| l.word.as_str())
                .collect();
            if spurious.is_empty() {
                return Err(Error::MissingInput("no labeled spurious top words".into()));
            }
            shuffled_words(spurious, seed)
        }
        Strategy::Random => shuffled_words(need_top()?.words(), seed),
        Strategy::Lexicon => {
            let top = need_top()?;
            let lex = inputs.lexicon.ok_or_else(|| Error::MissingInput("lexicon".into()))?;
            shuffled_words(top.words().filter(|w| !lex.contains(*w)), seed)
        }
        Strategy::PredictedSameDomain | Strategy::PredictedTransfer => {
            let preds = inputs
                .predictions
                .ok_or_else(|| Error::MissingInput(format!("word predictions for {}", strategy.as_str())))?;
            let words: Vec<String> = preds.iter().map(|p| p.0.clone()).collect();
            let probs: Vec<f64> = preds.iter().map(|p| p.1).collect();
            rank_spurious(&words, &probs).into_iter().map(|(w, _)| w).collect()
        }
    };
    Ok(RemovalPlan { strategy, words, seed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub k_removed: usize,
    pub majority: f64,
    pub minority: f64,
    pub all: f64,
    pub metric: Metric,
}

/// `0, step, 2·step, …` and finally the full plan length.
pub fn curve_ks(plan_len: usize, step: usize) -> Result<Vec<usize>> {
    if step == 0 {
        return Err(Error::InvalidArgument("step must be >= 1".into()));
    }
    let mut ks: Vec<usize> = (0..=plan_len).step_by(step).collect();
    if ks.last() != Some(&plan_len) {
        ks.push(plan_len);
    }
    Ok(ks)
}

fn check_group(name: &str, group: &[&LabeledSentence], metric: Metric) -> Result<()> {
    if group.is_empty() {
        return Err(Error::EmptyGroup(String::from(name)));
    }
    if metric == Metric::Auc {
        let pos = group.iter().filter(|s| s.label == Label::Positive).count();
        if pos == 0 || pos == group.len() {
            return Err(Error::SingleClassGroup(String::from(name)));
        }
    }
    Ok(())
}

/// Rejects metric/group combinations that cannot be scored.
pub fn check_groups(groups: &EvalGroups<'_>, metric: Metric) -> Result<()> {
    check_group("majority", &groups.majority, metric)?;
    check_group("minority", &groups.minority, metric)?;
    check_group("all", &groups.all, metric)
}

/// Scores a fitted model on the three groups.
pub fn score_groups(model: &crate::docmodel::DocModel, groups: &EvalGroups<'_>, metric: Metric, k: usize) -> Result<CurvePoint> {
    Ok(CurvePoint {
        k_removed: k,
        majority: evaluate(model, groups.majority.iter().copied(), metric)?,
        minority: evaluate(model, groups.minority.iter().copied(), metric)?,
        all: evaluate(model, groups.all.iter().copied(), metric)?,
        metric,
    })
}

/// One curve point: retrain without the first `k` plan words.
pub fn curve_point(
    train: &[&LabeledSentence],
    base_vocab: &Vocabulary,
    plan: &RemovalPlan,
    k: usize,
    groups: &EvalGroups<'_>,
    metric: Metric,
    opts: &TrainOptions,
) -> Result<CurvePoint> {
    let vocab = base_vocab.without(plan.words.iter().take(k).map(String::as_str));
    let model = train_with_vocab(train, vocab, opts)?;
    score_groups(&model, groups, metric, k)
}

/// The full removal curve, computed sequentially.
pub fn run_curve(
    corpus: &Corpus,
    plan: &RemovalPlan,
    groups: &Groups,
    step: usize,
    metric: Metric,
    opts: &TrainOptions,
) -> Result<Vec<CurvePoint>> {
    let eval = groups.resolve(corpus)?;
    check_groups(&eval, metric)?;
    let train: Vec<&LabeledSentence> = corpus.split_sentences(Split::Train).collect();
    let base = Vocabulary::from_sentences(train.iter().copied());
    curve_ks(plan.words.len(), step)?
        .into_iter()
        .map(|k| curve_point(&train, &base, plan, k, &eval, metric, opts))
        .collect()
}

/// A single horizontal reference line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLine {
    pub name: String,
    pub point: CurvePoint,
}

/// Document classifier restricted to lexicon words.
pub fn lexicon_baseline(
    corpus: &Corpus,
    lexicon: &BTreeSet<String>,
    groups: &Groups,
    metric: Metric,
    opts: &TrainOptions,
) -> Result<ReferenceLine> {
    let eval = groups.resolve(corpus)?;
    check_groups(&eval, metric)?;
    let train: Vec<&LabeledSentence> = corpus.split_sentences(Split::Train).collect();
    let vocab = Vocabulary::from_sentences(train.iter().copied()).restricted_to(lexicon);
    if vocab.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let model = train_with_vocab(&train, vocab, opts)?;
    Ok(ReferenceLine { name: "lexicon".into(), point: score_groups(&model, &eval, metric, 0)? })
}

/// Trains on the train-split majority group downsampled to the size of the
/// train-split minority group, together with that minority group.
pub fn downsample_baseline(
    corpus: &Corpus,
    tracked: &[TopWord],
    test_groups: &Groups,
    seed: u64,
    metric: Metric,
    opts: &TrainOptions,
) -> Result<ReferenceLine> {
    let eval = test_groups.resolve(corpus)?;
    check_groups(&eval, metric)?;
    let train_groups = build_groups(corpus, Split::Train, tracked, None, seed)?;
    let minority = train_groups.minority_ids();
    if minority.is_empty() {
        return Err(Error::EmptyGroup("minority (train)".into()));
    }
    let mut majority = train_groups.majority_ids();
    rng::shuffle(&mut majority, seed, stream::DOWNSAMPLE);
    majority.truncate(minority.len());
    let ids: BTreeSet<u64> = majority.into_iter().chain(minority).collect();
    let subset: Vec<&LabeledSentence> = corpus
        .split_sentences(Split::Train)
        .filter(|s| ids.contains(&s.id))
        .collect();
    let vocab = Vocabulary::from_sentences(subset.iter().copied());
    let model = train_with_vocab(&subset, vocab, opts)?;
    Ok(ReferenceLine { name: "downsample".into(), point: score_groups(&model, &eval, metric, 0)? })
}
