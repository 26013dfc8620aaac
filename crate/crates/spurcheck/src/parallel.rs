//! Multi-threaded drivers for the two expensive loops: best-match search
//! and removal curves. Both produce exactly what the sequential versions in
//! the core crate produce; work is split, but results are collected in
//! input order.

use std::collections::BTreeMap;

use rayon::prelude::*;

use spurcheck_core::contexts::ContextWindow;
use spurcheck_core::corpus::{Corpus, LabeledSentence, Split};
use spurcheck_core::docmodel::{Metric, Vocabulary};
use spurcheck_core::logistic::TrainOptions;
use spurcheck_core::matcher::{collect_results, MatchDiagnostics, MatchOptions, MatchRecord, Matcher};
use spurcheck_core::robustness::{check_groups, curve_ks, curve_point, CurvePoint, Groups, RemovalPlan};
use spurcheck_core::Result;

/// Matches every treated occurrence. Eligibility masks are built once per
/// word, and the occurrences of a word are searched in parallel.
pub fn match_all(matcher: &Matcher<'_>, treated: &[ContextWindow], opts: &MatchOptions) -> Result<(Vec<MatchRecord>, MatchDiagnostics)> {
    let occurrences = Matcher::treated_occurrences(treated, opts);
    let mut by_word: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, w) in occurrences.iter().enumerate() {
        by_word.entry(w.word.as_str()).or_default().push(i);
    }
    let mut results: Vec<Option<MatchRecord>> = vec![None; occurrences.len()];
    for (word, idx) in by_word {
        let mask = matcher.eligibility(word);
        let found: Vec<Option<MatchRecord>> = idx
            .par_iter()
            .map(|&i| matcher.best_match_masked(occurrences[i], &mask))
            .collect::<Result<_>>()?;
        for (i, r) in idx.into_iter().zip(found) {
            results[i] = r;
        }
    }
    Ok(collect_results(&occurrences, results))
}

/// One retrained model per `k`, in parallel; points come back ordered by `k`.
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
        .into_par_iter()
        .map(|k| curve_point(&train, &base, plan, k, &eval, metric, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use spurcheck_core::pipeline::{analyze, AnalysisConfig};
    use spurcheck_core::robustness::{build_groups, make_plan, PlanInputs, Strategy};
    use spurcheck_core::synth::{generate, SynthConfig};

    fn corpus() -> Corpus {
        let synth = generate(&SynthConfig { n_sentences: 300, seed: 5, ..Default::default() });
        let c = spurcheck_core::corpus::ingest_str("s", &synth.to_tsv(), spurcheck_core::corpus::DatasetKind::Generic, 5).unwrap();
        spurcheck_core::corpus::split(&c, 0.5, 5).unwrap()
    }

    #[test]
    fn parallel_matching_equals_sequential() {
        let c = corpus();
        let a = analyze(&c, &AnalysisConfig::default()).unwrap();
        let matcher = Matcher::new(&c, &a.windows, &a.store).unwrap();
        for dedup in [false, true] {
            let opts = MatchOptions { dedup_per_sentence: dedup };
            assert_eq!(match_all(&matcher, &a.windows, &opts).unwrap(), matcher.match_all(&a.windows, &opts).unwrap());
        }
    }

    #[test]
    fn parallel_curve_equals_sequential() {
        let c = corpus();
        let a = analyze(&c, &AnalysisConfig::default()).unwrap();
        let groups = build_groups(&c, Split::Test, &a.top.entries, Some(5), 1).unwrap();
        let plan = make_plan(Strategy::Random, &PlanInputs { top_words: Some(&a.top), ..Default::default() }, 1).unwrap();
        let opts = spurcheck_core::pipeline::DOC_TRAIN;
        let seq = spurcheck_core::robustness::run_curve(&c, &plan, &groups, 7, Metric::Accuracy, &opts).unwrap();
        assert_eq!(run_curve(&c, &plan, &groups, 7, Metric::Accuracy, &opts).unwrap(), seq);
    }
}
