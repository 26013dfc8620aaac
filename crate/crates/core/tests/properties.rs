//! Invariants checked over generated inputs.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use spurcheck_core::contexts::{cosine, extract_contexts, EmbeddingStore, Provenance};
use spurcheck_core::corpus::{balance, split, Corpus, Label, LabeledSentence, Split};
use spurcheck_core::docmodel::{featurize_doc, top_words, train_doc, train_with_vocab, TopWord, TopWordSet, Vocabulary};
use spurcheck_core::embed::{fallback_embed, FallbackOptions};
use spurcheck_core::logistic::TrainOptions;
use spurcheck_core::matcher::{MatchOptions, MatchRecord, Matcher};
use spurcheck_core::metrics::auc;
use spurcheck_core::robustness::{build_groups, make_plan, PlanInputs, Strategy as Plan};
use spurcheck_core::text::tokenize;
use spurcheck_core::wordclf::{WordClass, WordLabel};
use spurcheck_core::wordfeat::featurize_word;

fn label(positive: bool) -> Label {
    if positive {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Random match records for one word over a random store of dimension `dim`.
fn record_fixture() -> impl Strategy<Value = (EmbeddingStore, Vec<MatchRecord>)> {
    (1usize..6, 1usize..12).prop_flat_map(|(dim, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(-4.0f32..4.0, dim), 2 * n),
            proptest::collection::vec((any::<bool>(), any::<bool>()), n),
        )
            .prop_map(move |(vectors, labels)| {
                let mut store = EmbeddingStore::new(dim, Provenance::Fallback);
                for (i, v) in vectors.iter().enumerate() {
                    let mut v = v.clone();
                    if v.iter().all(|&x| x == 0.0) {
                        v[0] = 1.0;
                    }
                    store.insert(i as u64, &v).unwrap();
                }
                let records = labels
                    .iter()
                    .enumerate()
                    .map(|(i, &(yt, ym))| {
                        let (t, m) = (i as u64, (n + i) as u64);
                        MatchRecord {
                            word: "w".into(),
                            treated_context_id: t,
                            treated_sentence_id: t,
                            treated_label: label(yt),
                            matched_context_id: m,
                            matched_sentence_id: m,
                            matched_label: label(ym),
                            matched_word: "v".into(),
                            similarity: store.similarity(t, m).unwrap(),
                        }
                    })
                    .collect();
                (store, records)
            })
    })
}

fn rescored(records: &[MatchRecord], store: &EmbeddingStore) -> Vec<MatchRecord> {
    records
        .iter()
        .map(|r| MatchRecord {
            similarity: store.similarity(r.treated_context_id, r.matched_context_id).unwrap(),
            ..r.clone()
        })
        .collect()
}

fn small_corpus() -> impl Strategy<Value = Corpus> {
    proptest::collection::vec((proptest::collection::vec(0usize..12, 1..9), any::<bool>()), 6..30).prop_map(|rows| {
        let sentences = rows
            .into_iter()
            .enumerate()
            .map(|(i, (toks, y))| LabeledSentence {
                id: i as u64,
                tokens: toks.iter().map(|t| format!("t{t}")).collect(),
                label: label(y ^ (i % 2 == 0)),
                split: if i % 4 == 0 { Split::Test } else { Split::Train },
            })
            .collect();
        Corpus::new("p", sentences)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn tokenize_is_idempotent(text in "\\PC{0,60}") {
        let tokens = tokenize(&text);
        prop_assert_eq!(tokenize(&tokens.join(" ")), tokens.clone());
        for t in &tokens {
            prop_assert!(!t.is_empty());
            prop_assert!(t.chars().all(char::is_alphanumeric));
        }
    }

    #[test]
    fn cosine_symmetric_bounded_scale_invariant(
        u in proptest::collection::vec(-10.0f32..10.0, 4),
        v in proptest::collection::vec(-10.0f32..10.0, 4),
        a in 0.1f32..10.0,
        b in 0.1f32..10.0,
    ) {
        let c = cosine(&u, &v).unwrap();
        prop_assert_eq!(c, cosine(&v, &u).unwrap());
        prop_assert!((-1.0..=1.0).contains(&c));
        let au: Vec<f32> = u.iter().map(|x| x * a).collect();
        let bv: Vec<f32> = v.iter().map(|x| x * b).collect();
        prop_assert!((cosine(&au, &bv).unwrap() - c).abs() < 1e-5);
    }

    #[test]
    fn feature_invariants((store, records) in record_fixture()) {
        let refs: Vec<&MatchRecord> = records.iter().collect();
        let f = featurize_word("w", &refs, &store, 0.5).unwrap().values;
        prop_assert!(f[3] <= f[5] && f[4] <= f[5]);
        prop_assert!(f[6] >= 0.0 && f[10] >= 0.0);
        prop_assert!(f[11] >= f[12] && f[12] >= f[13] && f[13] >= 0.0);
        prop_assert!(f[0].abs() <= 2.0 && f[2].abs() <= 2.0);
        if records.len() <= 5 {
            prop_assert_eq!(f[2], f[0]);
        }
        let reversed: Vec<&MatchRecord> = records.iter().rev().collect();
        prop_assert_eq!(featurize_word("w", &reversed, &store, 0.5).unwrap().values, f);
    }

    #[test]
    fn similarity_features_scale_invariant_differences_linear((store, records) in record_fixture()) {
        let refs: Vec<&MatchRecord> = records.iter().collect();
        let base = featurize_word("w", &refs, &store, 0.5).unwrap().values;
        for factor in [2.0f32, 3.0] {
            let scaled = store.scaled(factor).unwrap();
            let recs = rescored(&records, &scaled);
            let refs: Vec<&MatchRecord> = recs.iter().collect();
            let f = featurize_word("w", &refs, &scaled, 0.5).unwrap().values;
            for i in 3..9 {
                prop_assert!((f[i] - base[i]).abs() <= 1e-6, "f{} {} vs {}", i + 1, f[i], base[i]);
            }
            for i in 10..15 {
                let want = base[i] * f64::from(factor);
                prop_assert!((f[i] - want).abs() <= 1e-5 * want.abs().max(1.0), "f{} {} vs {}", i + 1, f[i], want);
            }
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform(
        scores in proptest::collection::vec(0.001f64..0.999, 2..40),
        flags in proptest::collection::vec(any::<bool>(), 40),
    ) {
        let mut labels: Vec<Label> = scores.iter().zip(&flags).map(|(_, &f)| label(f)).collect();
        labels[0] = Label::Positive;
        labels[1] = Label::Negative;
        let a = auc(&scores, &labels).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|s| s.ln() * 3.0 + 1.0).collect();
        prop_assert_eq!(auc(&transformed, &labels).unwrap(), a);
    }

    #[test]
    fn balancing_never_increases_a_class(labels in proptest::collection::vec(any::<bool>(), 2..60), seed in any::<u64>()) {
        prop_assume!(labels.iter().any(|&x| x) && labels.iter().any(|&x| !x));
        let records: Vec<(Label, usize)> = labels.iter().enumerate().map(|(i, &y)| (label(y), i)).collect();
        let out = balance(records, seed).unwrap();
        let pos = out.iter().filter(|r| r.0 == Label::Positive).count();
        let neg = out.len() - pos;
        prop_assert_eq!(pos, neg);
        prop_assert!(pos <= labels.iter().filter(|&&x| x).count());
        prop_assert!(out.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn split_assigns_stratified_deterministically(corpus in small_corpus(), seed in any::<u64>(), frac in 0.05f64..0.95) {
        let a = split(&corpus, frac, seed).unwrap();
        prop_assert_eq!(&a, &split(&corpus, frac, seed).unwrap());
        let n_test = a.split_sentences(Split::Test).count();
        prop_assert_eq!(n_test, (corpus.sentences.len() as f64 * frac).floor() as usize);
    }

    #[test]
    fn groups_swap_under_relabeling(corpus in small_corpus(), seed in any::<u64>(), quota in 1usize..4) {
        let tracked = vec![
            TopWord { word: "t1".into(), coef: 2.0, class: Label::Positive },
            TopWord { word: "t2".into(), coef: -1.5, class: Label::Negative },
        ];
        let g = build_groups(&corpus, Split::Test, &tracked, Some(quota), seed).unwrap();
        let h = build_groups(&corpus.relabeled(), Split::Test, &tracked, Some(quota), seed).unwrap();
        prop_assert_eq!(g.majority_ids(), h.minority_ids());
        prop_assert_eq!(g.minority_ids(), h.majority_ids());
        let maj = g.majority_ids();
        prop_assert!(g.minority_ids().iter().all(|id| !maj.contains(id)));
    }

    #[test]
    fn oracle_and_random_share_the_shuffler(n in 1usize..30, seed in any::<u64>()) {
        let top = TopWordSet {
            entries: (0..n).map(|i| TopWord { word: format!("w{i}"), coef: 1.0 + i as f64, class: Label::Positive }).collect(),
        };
        let labels: Vec<WordLabel> =
            top.entries.iter().map(|e| WordLabel { word: e.word.clone(), label: WordClass::Spurious, note: None }).collect();
        let inputs = PlanInputs { top_words: Some(&top), labels: Some(&labels), ..Default::default() };
        let oracle = make_plan(Plan::Oracle, &inputs, seed).unwrap();
        let random = make_plan(Plan::Random, &inputs, seed).unwrap();
        prop_assert_eq!(oracle.words, random.words);
    }

    #[test]
    fn removed_word_count_does_not_matter(corpus in small_corpus(), extra in 1usize..5) {
        let train: Vec<&LabeledSentence> = corpus.split_sentences(Split::Train).collect();
        prop_assume!(train.iter().any(|s| s.label == Label::Positive) && train.iter().any(|s| s.label == Label::Negative));
        let vocab = Vocabulary::from_sentences(train.iter().copied()).without(["t3"]);
        let model = train_with_vocab(&train, vocab, &TrainOptions::default()).unwrap();
        for s in &corpus.sentences {
            let mut more = s.tokens.clone();
            more.extend(std::iter::repeat_n("t3".to_string(), extra));
            prop_assert_eq!(model.predict_tokens(&s.tokens), model.predict_tokens(&more));
        }
    }

    #[test]
    fn negated_model_is_complementary(corpus in small_corpus()) {
        let c = Corpus::new("p", corpus.sentences.iter().cloned().map(|mut s| { s.split = Split::Train; s }).collect());
        prop_assume!(c.class_counts().positive > 0 && c.class_counts().negative > 0);
        let model = train_doc(&c, &TrainOptions::default()).unwrap();
        let neg = model.negated();
        for s in &c.sentences {
            let x = featurize_doc(&s.tokens, &model.vocab);
            prop_assert!((model.predict_proba(&x) + neg.predict_proba(&x) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn top_words_ignore_sentence_order() {
    let (_, corpus) = common::synth_domain(300, 2);
    let mut reversed = corpus.clone();
    reversed.sentences.reverse();
    let opts = spurcheck_core::pipeline::DOC_TRAIN;
    let a = top_words(&train_doc(&corpus, &opts).unwrap(), 1.0);
    let b = top_words(&train_doc(&reversed, &opts).unwrap(), 1.0);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn matching_ignores_candidate_order() {
    let (_, corpus) = common::synth_domain(150, 4);
    let model = train_doc(&corpus, &spurcheck_core::pipeline::DOC_TRAIN).unwrap();
    let top = top_words(&model, 1.0);
    let windows = extract_contexts(&corpus, &top, 5);
    let store = fallback_embed(&corpus, &windows, &FallbackOptions { dim: 20, seed: 4, ..Default::default() }).unwrap();
    let forward = Matcher::new(&corpus, &windows, &store).unwrap().match_all(&windows, &MatchOptions::default()).unwrap();
    let mut shuffled = windows.clone();
    spurcheck_core::rng::shuffle(&mut shuffled, 1, 99);
    let backward = Matcher::new(&corpus, &shuffled, &store).unwrap().match_all(&windows, &MatchOptions::default()).unwrap();
    assert_eq!(forward, backward);
    assert!(!forward.0.is_empty());

    // exclusion: no matched sentence contains the treated word
    let by_id: BTreeMap<u64, &LabeledSentence> = corpus.sentences.iter().map(|s| (s.id, s)).collect();
    for r in &forward.0 {
        assert!(!by_id[&r.matched_sentence_id].contains(&r.word));
        assert_ne!(r.treated_sentence_id, r.matched_sentence_id);
        assert_eq!(r.similarity, store.similarity(r.treated_context_id, r.matched_context_id).unwrap());
    }
}

#[test]
fn fallback_embedding_is_deterministic() {
    let (_, corpus) = common::synth_domain(100, 9);
    let model = train_doc(&corpus, &spurcheck_core::pipeline::DOC_TRAIN).unwrap();
    let windows = extract_contexts(&corpus, &top_words(&model, 1.0), 5);
    let opts = FallbackOptions { dim: 12, seed: 3, ..Default::default() };
    assert_eq!(fallback_embed(&corpus, &windows, &opts).unwrap(), fallback_embed(&corpus, &windows, &opts).unwrap());
}
