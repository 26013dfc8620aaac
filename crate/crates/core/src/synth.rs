//! Synthetic benchmark corpora with known spurious and genuine words.
//!
//! Every sentence has a few *sentiment clauses*, each a short template with
//! a genuine polarity word in the middle, plus one *topic region*: a
//! spurious token surrounded by random filler. The label is the majority
//! polarity of the genuine words. The spurious token agrees with the label
//! with probability `rho`, so it is a stronger single-word predictor than
//! any genuine word, but its surrounding context carries no label
//! information. Templates and filler are shared by both labels.
//!
//! All tokens of a domain start with the domain tag, so two domains built
//! with different tags have disjoint vocabularies.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Label;
use crate::rng::{self, stream};
use crate::wordclf::{WordClass, WordLabel};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Prefix of every generated token; must be alphabetic.
    pub tag: String,
    pub n_sentences: usize,
    /// Spurious tokens, split evenly between the two classes.
    pub n_spurious: usize,
    /// P(label = correlated class of the spurious token).
    pub rho: f64,
    pub n_genuine_per_class: usize,
    pub clauses_per_sentence: usize,
    pub n_templates: usize,
    /// Template words on each side of the genuine slot.
    pub template_side: usize,
    /// Alternatives per template position.
    pub template_variants: usize,
    pub n_filler: usize,
    /// Filler tokens on each side of the spurious token.
    pub filler_side: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            tag: String::from("a"),
            n_sentences: 2000,
            n_spurious: 20,
            rho: 0.9,
            n_genuine_per_class: 100,
            clauses_per_sentence: 3,
            n_templates: 12,
            template_side: 3,
            template_variants: 2,
            n_filler: 80,
            filler_side: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWord {
    pub word: String,
    pub class: Label,
    pub kind: WordClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<(Label, String)>,
    pub words: Vec<SynthWord>,
}

impl SynthCorpus {
    /// Ground-truth labels for every spurious and genuine word.
    pub fn word_labels(&self) -> Vec<WordLabel> {
        self.words
            .iter()
            .map(|w| WordLabel { word: w.word.clone(), label: w.kind, note: None })
            .collect()
    }

    pub fn spurious(&self) -> impl Iterator<Item = &SynthWord> + '_ {
        self.words.iter().filter(|w| w.kind == WordClass::Spurious)
    }

    /// `label<TAB>text` lines, the generic dataset layout.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (label, text) in &self.records {
            out.push_str(&format!("{}\t{}\n", label.sign(), text));
        }
        out
    }
}

fn class_tag(label: Label) -> &'static str {
    match label {
        Label::Positive => "p",
        Label::Negative => "n",
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [String]) -> &'a str {
    &items[rng.gen_range(0..items.len())]
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let tag = cfg.tag.as_str();
    let mut rng = rng::seeded(cfg.seed, stream::SYNTH);

    let mut words = Vec::new();
    let mut genuine: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    let mut spurious: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    for (ci, class) in [Label::Negative, Label::Positive].into_iter().enumerate() {
        for i in 0..cfg.n_genuine_per_class {
            let w = format!("{tag}g{}{i}", class_tag(class));
            genuine[ci].push(w.clone());
            words.push(SynthWord { word: w, class, kind: WordClass::Genuine });
        }
        let n_sp = cfg.n_spurious / 2 + if ci == 1 { cfg.n_spurious % 2 } else { 0 };
        for i in 0..n_sp {
            let w = format!("{tag}s{}{i}", class_tag(class));
            spurious[ci].push(w.clone());
            words.push(SynthWord { word: w, class, kind: WordClass::Spurious });
        }
    }
    let filler: Vec<String> = (0..cfg.n_filler).map(|i| format!("{tag}f{i}")).collect();
    // templates[t][position][variant]
    let templates: Vec<Vec<Vec<String>>> = (0..cfg.n_templates)
        .map(|t| {
            (0..2 * cfg.template_side)
                .map(|p| (0..cfg.template_variants).map(|v| format!("{tag}t{t}x{p}v{v}")).collect())
                .collect()
        })
        .collect();

    let mut records = Vec::with_capacity(cfg.n_sentences);
    for i in 0..cfg.n_sentences {
        let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
        let ci = usize::from(label == Label::Positive);

        let polarities: Vec<Label> = loop {
            let p: Vec<Label> = (0..cfg.clauses_per_sentence)
                .map(|_| if rng.gen_bool(0.5) { Label::Positive } else { Label::Negative })
                .collect();
            let pos = p.iter().filter(|&&l| l == Label::Positive).count();
            let majority = if 2 * pos > p.len() { Label::Positive } else { Label::Negative };
            if majority == label {
                break p;
            }
        };

        let mut clauses: Vec<Vec<&str>> = Vec::new();
        for pol in polarities {
            let g = pick(&mut rng, &genuine[usize::from(pol == Label::Positive)]);
            let t = &templates[rng.gen_range(0..templates.len())];
            let mut clause: Vec<&str> = Vec::with_capacity(2 * cfg.template_side + 1);
            for (p, variants) in t.iter().enumerate() {
                if p == cfg.template_side {
                    clause.push(g);
                }
                clause.push(pick(&mut rng, variants));
            }
            clauses.push(clause);
        }

        let sp_class = if rng.gen_bool(cfg.rho) { ci } else { 1 - ci };
        let s = pick(&mut rng, &spurious[sp_class]);
        let mut region: Vec<&str> = Vec::with_capacity(2 * cfg.filler_side + 1);
        for _ in 0..cfg.filler_side {
            region.push(pick(&mut rng, &filler));
        }
        region.push(s);
        for _ in 0..cfg.filler_side {
            region.push(pick(&mut rng, &filler));
        }
        let at = rng.gen_range(0..=clauses.len());
        clauses.insert(at, region);

        let text = clauses.iter().flatten().copied().collect::<Vec<_>>().join(" ");
        records.push((label, text));
    }
    SynthCorpus { records, words }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn deterministic_and_balanced() {
        let cfg = SynthConfig { n_sentences: 100, ..Default::default() };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        let pos = a.records.iter().filter(|r| r.0 == Label::Positive).count();
        assert_eq!(pos, 50);
        assert_eq!(a.spurious().count(), 20);
        // tokens survive tokenization unchanged
        let (_, text) = &a.records[0];
        assert_eq!(tokenize(text).join(" "), *text);
    }

    #[test]
    fn spurious_correlation_close_to_rho() {
        let cfg = SynthConfig { n_sentences: 4000, ..Default::default() };
        let c = generate(&cfg);
        let mut agree = 0;
        for (label, text) in &c.records {
            let sp = text.split(' ').find(|t| t.starts_with("asp") || t.starts_with("asn")).unwrap();
            let class = if sp.starts_with("asp") { Label::Positive } else { Label::Negative };
            agree += usize::from(class == *label);
        }
        let rate = agree as f64 / c.records.len() as f64;
        assert!((rate - 0.9).abs() < 0.02, "{rate}");
    }

    #[test]
    fn disjoint_domains() {
        let a = generate(&SynthConfig { n_sentences: 50, ..Default::default() });
        let b = generate(&SynthConfig { n_sentences: 50, tag: "b".into(), ..Default::default() });
        let va: alloc::collections::BTreeSet<String> = a.records.iter().flat_map(|r| tokenize(&r.1)).collect();
        assert!(b.records.iter().flat_map(|r| tokenize(&r.1)).all(|t| !va.contains(&t)));
    }
}
