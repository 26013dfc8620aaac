//! Labeled sentences, dataset labeling rules, class balancing and the
//! stratified train/test split.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::rng::{self, stream};
use crate::text::tokenize;
use crate::{Error, Result};

/// Binary sentence label, `-1` or `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_sign(value: i64) -> Option<Label> {
        match value {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.sign())
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Split {
    #[default]
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSentence {
    pub id: u64,
    pub tokens: Vec<String>,
    pub label: Label,
    pub split: Split,
}

impl LabeledSentence {
    pub fn contains(&self, word: &str) -> bool {
        self.tokens.iter().any(|t| t == word)
    }
}

/// Per-label sentence counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

impl ClassCounts {
    pub fn of<'a>(sentences: impl IntoIterator<Item = &'a LabeledSentence>) -> ClassCounts {
        let mut counts = ClassCounts::default();
        for s in sentences {
            match s.label {
                Label::Positive => counts.positive += 1,
                Label::Negative => counts.negative += 1,
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub sentences: Vec<LabeledSentence>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, sentences: Vec<LabeledSentence>) -> Corpus {
        Corpus { name: name.into(), sentences }
    }

    pub fn class_counts(&self) -> ClassCounts {
        ClassCounts::of(&self.sentences)
    }

    pub fn split_sentences(&self, split: Split) -> impl Iterator<Item = &LabeledSentence> + '_ {
        self.sentences.iter().filter(move |s| s.split == split)
    }

    /// Distinct surface forms over all sentences.
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect()
    }

    pub fn get(&self, id: u64) -> Option<&LabeledSentence> {
        // ids are assigned densely in input order by `ingest`, but corpora
        // built elsewhere need not be, so fall back to a scan.
        match self.sentences.get(id as usize) {
            Some(s) if s.id == id => Some(s),
            _ => self.sentences.iter().find(|s| s.id == id),
        }
    }

    /// Copy of the corpus with every label negated.
    pub fn relabeled(&self) -> Corpus {
        let mut out = self.clone();
        for s in &mut out.sentences {
            s.label = s.label.flip();
        }
        out
    }
}

/// Supported raw dataset layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Imdb,
    Kindle,
    ToxicComment,
    ToxicTweet,
    Generic,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Imdb => "imdb",
            DatasetKind::Kindle => "kindle",
            DatasetKind::ToxicComment => "toxic_comment",
            DatasetKind::ToxicTweet => "toxic_tweet",
            DatasetKind::Generic => "generic",
        }
    }

    /// Whether sentences outside 5..=40 tokens are dropped.
    pub fn length_filtered(self) -> bool {
        matches!(self, DatasetKind::Kindle | DatasetKind::ToxicComment)
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<DatasetKind> {
        Ok(match s {
            "imdb" => DatasetKind::Imdb,
            "kindle" => DatasetKind::Kindle,
            "toxic_comment" => DatasetKind::ToxicComment,
            "toxic_tweet" => DatasetKind::ToxicTweet,
            "generic" => DatasetKind::Generic,
            other => {
                return Err(Error::InvalidArgument(format!("unknown dataset kind `{other}`")))
            }
        })
    }
}

pub const MIN_TOKENS: usize = 5;
pub const MAX_TOKENS: usize = 40;

/// Maps a star rating to a label: {4,5} positive, {1,2} negative, 3 dropped.
pub fn kindle_label(rating: u8) -> Option<Label> {
    match rating {
        4 | 5 => Some(Label::Positive),
        1 | 2 => Some(Label::Negative),
        _ => None,
    }
}

/// Maps a toxicity score to a label: `>= 0.7` toxic, `<= 0.5` non-toxic,
/// anything in between dropped.
pub fn toxicity_label(score: f64) -> Option<Label> {
    if score >= 0.7 {
        Some(Label::Positive)
    } else if score <= 0.5 {
        Some(Label::Negative)
    } else {
        None
    }
}

/// Parses one `label<TAB>text` line. `Ok(None)` means the record is valid
/// but excluded by the dataset's labeling rule.
pub fn parse_record(kind: DatasetKind, line_no: usize, line: &str) -> Result<Option<(Label, String)>> {
    let malformed = |reason: String| Error::MalformedRecord { line: line_no, reason };
    let (head, text) = line
        .split_once('\t')
        .ok_or_else(|| malformed("expected `<label>\\t<text>`".to_string()))?;
    let head = head.trim();
    let label = match kind {
        DatasetKind::Generic | DatasetKind::Imdb | DatasetKind::ToxicTweet => {
            let v: i64 = head
                .parse()
                .map_err(|_| malformed(format!("label `{head}` is not an integer")))?;
            Some(Label::from_sign(v).ok_or_else(|| malformed(format!("label {v} not in {{-1, 1}}")))?)
        }
        DatasetKind::Kindle => {
            let r: u8 = head
                .parse()
                .map_err(|_| malformed(format!("rating `{head}` is not an integer")))?;
            if !(1..=5).contains(&r) {
                return Err(malformed(format!("rating {r} not in 1..=5")));
            }
            kindle_label(r)
        }
        DatasetKind::ToxicComment => {
            let v: f64 = head
                .parse()
                .map_err(|_| malformed(format!("score `{head}` is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(malformed(format!("score {v} not in [0, 1]")));
            }
            toxicity_label(v)
        }
    };
    Ok(label.map(|l| (l, text.to_string())))
}

/// Parses, labels, filters and balances a raw dataset held in memory.
///
/// Blank lines are skipped. Line numbers in errors are 1-based. The result
/// has ids `0..n` in input order and every sentence on the train split.
pub fn ingest_str(name: &str, content: &str, kind: DatasetKind, seed: u64) -> Result<Corpus> {
    let mut kept: Vec<(Label, Vec<String>)> = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((label, text)) = parse_record(kind, i + 1, line)? else {
            continue;
        };
        let tokens = tokenize(&text);
        if kind.length_filtered() && !(MIN_TOKENS..=MAX_TOKENS).contains(&tokens.len()) {
            continue;
        }
        kept.push((label, tokens));
    }
    let balanced = balance(kept, seed)?;
    let sentences = balanced
        .into_iter()
        .enumerate()
        .map(|(id, (label, tokens))| LabeledSentence {
            id: id as u64,
            tokens,
            label,
            split: Split::Train,
        })
        .collect();
    Ok(Corpus::new(name, sentences))
}

/// Downsamples the larger class to the size of the smaller one, keeping
/// input order among the survivors.
pub fn balance<T>(records: Vec<(Label, T)>, seed: u64) -> Result<Vec<(Label, T)>> {
    let pos: Vec<usize> = (0..records.len()).filter(|&i| records[i].0 == Label::Positive).collect();
    let neg: Vec<usize> = (0..records.len()).filter(|&i| records[i].0 == Label::Negative).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateCorpus(format!(
            "{} positive / {} negative records after filtering",
            pos.len(),
            neg.len()
        )));
    }
    let (mut larger, smaller) = if pos.len() >= neg.len() { (pos, neg) } else { (neg, pos) };
    rng::shuffle(&mut larger, seed, stream::BALANCE);
    larger.truncate(smaller.len());
    let mut keep = alloc::vec![false; records.len()];
    for &i in larger.iter().chain(smaller.iter()) {
        keep[i] = true;
    }
    Ok(records
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect())
}

/// Assigns train/test splits stratified by label.
///
/// The test set holds `floor(n * test_fraction)` sentences in total, shared
/// out per class by largest remainder (with at least one per class when the
/// total allows it). Selection within a class is a seeded shuffle.
pub fn split(corpus: &Corpus, test_fraction: f64, seed: u64) -> Result<Corpus> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidFraction(test_fraction));
    }
    let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let mut order: Vec<usize> = (0..corpus.sentences.len()).collect();
    order.sort_by_key(|&i| corpus.sentences[i].id);
    for i in order {
        let c = usize::from(corpus.sentences[i].label == Label::Positive);
        classes[c].push(i);
    }
    let n = corpus.sentences.len();
    let total = libm::floor(n as f64 * test_fraction) as usize;
    let quotas = allocate_test_quota(total, [classes[0].len(), classes[1].len()], test_fraction);

    let mut out = corpus.clone();
    for s in &mut out.sentences {
        s.split = Split::Train;
    }
    for (c, members) in classes.iter_mut().enumerate() {
        rng::shuffle(members, seed, stream::SPLIT + ((c as u64) << 32));
        for &i in members.iter().take(quotas[c]) {
            out.sentences[i].split = Split::Test;
        }
    }
    Ok(out)
}

fn allocate_test_quota(total: usize, sizes: [usize; 2], frac: f64) -> [usize; 2] {
    let exact = [sizes[0] as f64 * frac, sizes[1] as f64 * frac];
    let mut q = [0usize; 2];
    // one test item per class that can spare one, when the total allows
    let populated = sizes.iter().filter(|&&s| s > 1).count();
    if total >= populated {
        for c in 0..2 {
            if sizes[c] > 1 {
                q[c] = 1;
            }
        }
    }
    // then the largest shortfall against the exact share, ties to the
    // larger class
    while q[0] + q[1] < total {
        let room = |c: usize| q[c] < sizes[c];
        let short = |c: usize| exact[c] - q[c] as f64;
        let c = if !room(0) {
            1
        } else if !room(1) || short(0) > short(1) || (short(0) == short(1) && sizes[0] >= sizes[1]) {
            0
        } else {
            1
        };
        q[c] += 1;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn generic(pos: usize, neg: usize) -> String {
        let mut s = String::new();
        for i in 0..pos {
            s += &format!("1\tgood film number {i}\n");
        }
        for i in 0..neg {
            s += &format!("-1\tbad film number {i}\n");
        }
        s
    }

    #[test]
    fn kindle_rating_three_dropped() {
        assert_eq!(parse_record(DatasetKind::Kindle, 1, "3\tsome words here and there").unwrap(), None);
        assert_eq!(
            parse_record(DatasetKind::Kindle, 1, "4\tok").unwrap().unwrap().0,
            Label::Positive
        );
        assert_eq!(
            parse_record(DatasetKind::Kindle, 1, "2\tok").unwrap().unwrap().0,
            Label::Negative
        );
    }

    #[test]
    fn toxicity_gap_dropped() {
        assert_eq!(parse_record(DatasetKind::ToxicComment, 1, "0.6\tx").unwrap(), None);
        assert_eq!(toxicity_label(0.7), Some(Label::Positive));
        assert_eq!(toxicity_label(0.5), Some(Label::Negative));
        assert_eq!(toxicity_label(0.50001), None);
    }

    #[test]
    fn malformed_record_reports_line() {
        let err = ingest_str("x", "1\tfine\n\nnot a record\n", DatasetKind::Generic, 0).unwrap_err();
        assert_eq!(
            err,
            Error::MalformedRecord { line: 3, reason: "expected `<label>\\t<text>`".to_string() }
        );
        let err = ingest_str("x", "0\tzero label\n", DatasetKind::Generic, 0).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 1, .. }));
    }

    #[test]
    fn degenerate_corpus() {
        let err = ingest_str("x", &generic(4, 0), DatasetKind::Generic, 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateCorpus(_)));
    }

    #[test]
    fn length_filter_for_kindle() {
        let data = "5\ttoo short\n5\tone two three four five\n1\tone two three four five six\n";
        let c = ingest_str("k", data, DatasetKind::Kindle, 0).unwrap();
        assert_eq!(c.sentences.len(), 2);
        // generic keeps short sentences
        let g = ingest_str("g", "1\tshort\n-1\tno\n", DatasetKind::Generic, 0).unwrap();
        assert_eq!(g.sentences.len(), 2);
    }

    #[test]
    fn balancing_is_deterministic_downsampling() {
        let a = ingest_str("g", &generic(10, 6), DatasetKind::Generic, 7).unwrap();
        let b = ingest_str("g", &generic(10, 6), DatasetKind::Generic, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_counts(), ClassCounts { positive: 6, negative: 6 });
        let ids: Vec<u64> = a.sentences.iter().map(|s| s.id).collect();
        assert_eq!(ids, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn split_counts() {
        let c = ingest_str("g", &generic(50, 50), DatasetKind::Generic, 1).unwrap();
        let s = split(&c, 0.2, 1).unwrap();
        let test: Vec<_> = s.split_sentences(Split::Test).collect();
        assert_eq!(test.len(), 20);
        assert_eq!(ClassCounts::of(test.iter().copied()), ClassCounts { positive: 10, negative: 10 });
        assert_eq!(s, split(&c, 0.2, 1).unwrap());
        assert_ne!(s, split(&c, 0.2, 2).unwrap());
    }

    #[test]
    fn split_small_corpus() {
        let c = Corpus::new(
            "t",
            (0..5)
                .map(|i| LabeledSentence {
                    id: i,
                    tokens: alloc::vec!["w".to_string()],
                    label: if i < 3 { Label::Positive } else { Label::Negative },
                    split: Split::Train,
                })
                .collect(),
        );
        let s = split(&c, 0.2, 9).unwrap();
        assert_eq!(s.split_sentences(Split::Test).count(), 1);
        assert_eq!(s.split_sentences(Split::Train).count(), 4);
    }

    #[test]
    fn split_fraction_bounds() {
        let c = ingest_str("g", &generic(3, 3), DatasetKind::Generic, 1).unwrap();
        assert_eq!(split(&c, 0.0, 1).unwrap_err(), Error::InvalidFraction(0.0));
        assert_eq!(split(&c, 1.0, 1).unwrap_err(), Error::InvalidFraction(1.0));
        assert!(split(&c, f64::NAN, 1).is_err());
    }

    #[test]
    fn quota_keeps_one_per_class_when_possible() {
        assert_eq!(allocate_test_quota(2, [3, 3], 0.4), [1, 1]);
        assert_eq!(allocate_test_quota(1, [3, 2], 0.2), [1, 0]);
        // the per-class minimum never pushes the test set past its total
        assert_eq!(allocate_test_quota(2, [7, 2], 0.3), [1, 1]);
        assert_eq!(allocate_test_quota(20, [50, 50], 0.2), [10, 10]);
    }
}
