//! Interactive word labeling. Walks the unlabeled top words, shows the
//! evidence for each, and appends every answer to the labels file at once,
//! so an interrupted session loses nothing.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use spurcheck_core::contexts::ContextWindow;
use spurcheck_core::corpus::{Corpus, LabeledSentence};
use spurcheck_core::matcher::MatchRecord;
use spurcheck_core::wordclf::{WordClass, WordLabel};

use crate::error::{Error, Result};
use crate::formats::matches::bracketed;
use crate::formats::tables;
use crate::stages::Workspace;

pub const EXAMPLES: usize = 3;
pub const PAIRS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Session {
    pub spurious: usize,
    pub genuine: usize,
    pub skipped: usize,
    /// Words not yet shown when the session ended.
    pub remaining: usize,
}

enum Answer {
    Label(WordClass),
    Skip,
    Quit,
}

fn parse_answer(line: &str) -> Option<Answer> {
    match line.trim().to_lowercase().as_str() {
        "s" | "spurious" => Some(Answer::Label(WordClass::Spurious)),
        "g" | "genuine" => Some(Answer::Label(WordClass::Genuine)),
        "k" | "skip" => Some(Answer::Skip),
        "q" | "quit" => Some(Answer::Quit),
        _ => None,
    }
}

fn marked(sentence: &LabeledSentence, word: &str) -> String {
    sentence
        .tokens
        .iter()
        .map(|t| if t == word { format!("[{t}]") } else { t.clone() })
        .collect::<Vec<_>>()
        .join(" ")
}

fn io(e: std::io::Error) -> Error {
    Error::io("<terminal>", e)
}

/// Runs the prompt loop over `input`/`output`.
pub fn annotate<R: BufRead, W: Write>(ws: &Workspace, mut input: R, mut output: W) -> Result<Session> {
    let top = ws.top_words()?;
    let labels_path = ws.labels_path();
    let known: Vec<WordLabel> = ws.labels()?.unwrap_or_default();
    let pending: Vec<_> = top.entries.iter().filter(|t| !known.iter().any(|l| l.word == t.word)).collect();
    let mut session = Session { remaining: pending.len(), ..Default::default() };
    if pending.is_empty() {
        writeln!(output, "every top word is labeled in {}", labels_path.display()).map_err(io)?;
        return Ok(session);
    }

    let corpus: Corpus = ws.corpus()?;
    let windows: BTreeMap<u64, ContextWindow> = ws.windows()?.into_iter().map(|w| (w.context_id, w)).collect();
    let records = ws.matches()?;
    let mut by_word: BTreeMap<&str, Vec<&MatchRecord>> = BTreeMap::new();
    for r in &records {
        by_word.entry(r.word.as_str()).or_default().push(r);
    }
    let mut sentences: Vec<&LabeledSentence> = corpus.sentences.iter().collect();
    sentences.sort_by_key(|s| s.id);

    let total = pending.len();
    for (i, t) in pending.into_iter().enumerate() {
        writeln!(output, "\n[{}/{}] {}  theta = {:+.4} ({})", i + 1, total, t.word, t.coef, if t.coef < 0.0 { "negative" } else { "positive" })
            .map_err(io)?;
        writeln!(output, "  examples:").map_err(io)?;
        for s in sentences.iter().filter(|s| s.contains(&t.word)).take(EXAMPLES) {
            writeln!(output, "    {:+}  {}", s.label.sign(), marked(s, &t.word)).map_err(io)?;
        }
        let mut pairs: Vec<&MatchRecord> = by_word.get(t.word.as_str()).cloned().unwrap_or_default();
        pairs.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then(a.treated_context_id.cmp(&b.treated_context_id)));
        if pairs.is_empty() {
            writeln!(output, "  no matched pairs").map_err(io)?;
        } else {
            writeln!(output, "  closest matches:").map_err(io)?;
        }
        for r in pairs.into_iter().take(PAIRS) {
            let show = |id: u64| windows.get(&id).map_or_else(|| format!("<context {id}>"), bracketed);
            writeln!(output, "    sim {:.4}", r.similarity).map_err(io)?;
            writeln!(output, "      {:+}  {}", r.treated_label.sign(), show(r.treated_context_id)).map_err(io)?;
            writeln!(output, "      {:+}  {}", r.matched_label.sign(), show(r.matched_context_id)).map_err(io)?;
        }
        let answer = loop {
            write!(output, "label [s]purious / [g]enuine / s[k]ip / [q]uit: ").map_err(io)?;
            output.flush().map_err(io)?;
            let mut line = String::new();
            if input.read_line(&mut line).map_err(io)? == 0 {
                writeln!(output).map_err(io)?;
                break Answer::Quit;
            }
            match parse_answer(&line) {
                Some(a) => break a,
                None => writeln!(output, "  please answer s, g, k or q").map_err(io)?,
            }
        };
        match answer {
            Answer::Label(label) => {
                tables::append_label(&labels_path, &WordLabel { word: t.word.clone(), label, note: None })?;
                match label {
                    WordClass::Spurious => session.spurious += 1,
                    WordClass::Genuine => session.genuine += 1,
                }
            }
            Answer::Skip => session.skipped += 1,
            Answer::Quit => break,
        }
        session.remaining -= 1;
    }
    writeln!(
        output,
        "labeled {} spurious, {} genuine; skipped {}; {} left",
        session.spurious, session.genuine, session.skipped, session.remaining
    )
    .map_err(io)?;
    Ok(session)
}
