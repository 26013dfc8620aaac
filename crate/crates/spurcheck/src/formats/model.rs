//! Text formats for fitted models: a provenance line, `key<TAB>value`
//! scalars, then one table. Every float is written with 17 significant
//! digits so models reload bit for bit.

use std::path::Path;

use spurcheck_core::docmodel::{DocModel, Vocabulary};
use spurcheck_core::logistic::TrainOptions;
use spurcheck_core::wordclf::WordClassifierModel;
use spurcheck_core::wordfeat::{Scaler, FEATURE_NAMES, N_FEATURES};

use crate::artifact::{f17, parse_f64, read_to_string, write_atomic, Provenance};
use crate::error::{Error, Result};

struct Parsed {
    header: Provenance,
    scalars: Vec<(usize, String, String)>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Parsed {
    fn scalar(&self, path: &Path, key: &str) -> Result<&str> {
        self.scalars
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(_, _, v)| v.as_str())
            .ok_or_else(|| Error::parse(path, 1, format!("missing `{key}`")))
    }

    fn float(&self, path: &Path, key: &str) -> Result<f64> {
        let line = self.scalars.iter().find(|(_, k, _)| k == key).map_or(1, |(n, _, _)| *n);
        parse_f64(self.scalar(path, key)?, path, line)
    }

    fn int(&self, path: &Path, key: &str) -> Result<usize> {
        self.scalar(path, key)?.parse().map_err(|_| Error::parse(path, 1, format!("`{key}` must be an integer")))
    }
}

fn parse(path: &Path, expected_format: &str, table_key: &str) -> Result<Parsed> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = lines
        .next()
        .and_then(|(_, l)| Provenance::parse(l))
        .map(|(_, p)| p)
        .ok_or_else(|| Error::parse(path, 1, "missing spurcheck provenance header"))?;
    let mut scalars = Vec::new();
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(String::from).collect();
        if columns.is_empty() {
            if fields[0] == table_key {
                columns = fields;
            } else if fields.len() == 2 {
                scalars.push((n, fields[0].clone(), fields[1].clone()));
            } else {
                return Err(Error::parse(path, n, "expected `key<TAB>value`"));
            }
        } else {
            if fields.len() != columns.len() {
                return Err(Error::parse(path, n, format!("expected {} fields, found {}", columns.len(), fields.len())));
            }
            rows.push((n, fields));
        }
    }
    let parsed = Parsed { header, scalars, rows };
    let format = parsed.scalar(path, "format")?;
    if format != expected_format {
        return Err(Error::parse(path, 2, format!("expected format {expected_format}, found {format}")));
    }
    Ok(parsed)
}

pub fn doc_model_to_string(model: &DocModel, prov: &Provenance) -> String {
    let mut out = prov.comment_line("doc_model");
    out += "format\tdoc_model/1\n";
    out += &format!("l2_strength\t{}\n", f17(model.options.l2_strength));
    out += &format!("max_iter\t{}\n", model.options.max_iter);
    out += &format!("tol\t{}\n", f17(model.options.tol));
    out += &format!("bias\t{}\n", f17(model.bias));
    out += &format!("vocab_size\t{}\n", model.vocab.len());
    out += "word\ttheta\n";
    for (w, t) in model.vocab.words().iter().zip(&model.theta) {
        out += &format!("{w}\t{}\n", f17(*t));
    }
    out
}

pub fn write_doc_model(path: &Path, model: &DocModel, prov: &Provenance) -> Result<()> {
    write_atomic(path, doc_model_to_string(model, prov).as_bytes())
}

pub fn read_doc_model(path: &Path) -> Result<(Provenance, DocModel)> {
    let p = parse(path, "doc_model/1", "word")?;
    let options = TrainOptions { l2_strength: p.float(path, "l2_strength")?, max_iter: p.int(path, "max_iter")?, tol: p.float(path, "tol")? };
    let size = p.int(path, "vocab_size")?;
    if p.rows.len() != size {
        return Err(Error::parse(path, 1, format!("vocab_size {size} but {} rows", p.rows.len())));
    }
    let mut words = Vec::with_capacity(size);
    let mut theta = Vec::with_capacity(size);
    for (n, row) in &p.rows {
        words.push(row[0].clone());
        theta.push(parse_f64(&row[1], path, *n)?);
    }
    let vocab = Vocabulary::from_words(words.iter().map(String::as_str));
    if vocab.words() != words.as_slice() {
        return Err(Error::parse(path, 1, "vocabulary must be sorted and free of duplicates"));
    }
    let bias = p.float(path, "bias")?;
    Ok((p.header, DocModel { vocab, theta, bias, options }))
}

fn check_feature_rows(path: &Path, p: &Parsed) -> Result<()> {
    let names: Vec<&str> = p.rows.iter().map(|(_, r)| r[0].as_str()).collect();
    if names != FEATURE_NAMES {
        return Err(spurcheck_core::Error::SchemaMismatch(format!(
            "{} lists features {:?}, expected {:?}",
            path.display(),
            names,
            FEATURE_NAMES
        ))
        .into());
    }
    Ok(())
}

pub fn scaler_to_string(scaler: &Scaler, prov: &Provenance) -> String {
    let mut out = prov.comment_line("scaler");
    out += "format\tscaler/1\n";
    out += "feature\tmean\tstd\n";
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        out += &format!("{name}\t{}\t{}\n", f17(scaler.mean[j]), f17(scaler.std[j]));
    }
    out
}

pub fn read_scaler(path: &Path) -> Result<(Provenance, Scaler)> {
    let p = parse(path, "scaler/1", "feature")?;
    check_feature_rows(path, &p)?;
    let mut scaler = Scaler { mean: [0.0; N_FEATURES], std: [0.0; N_FEATURES] };
    for (j, (n, row)) in p.rows.iter().enumerate() {
        scaler.mean[j] = parse_f64(&row[1], path, *n)?;
        scaler.std[j] = parse_f64(&row[2], path, *n)?;
    }
    Ok((p.header, scaler))
}

pub fn word_model_to_string(model: &WordClassifierModel, prov: &Provenance) -> String {
    let mut out = prov.comment_line("word_model");
    out += "format\tword_model/1\n";
    out += &format!("l2_strength\t{}\n", f17(model.l2_strength));
    out += &format!("bias\t{}\n", f17(model.bias));
    out += "feature\tweight\tmean\tstd\n";
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        out += &format!(
            "{name}\t{}\t{}\t{}\n",
            f17(model.weights[j]),
            f17(model.scaler.mean[j]),
            f17(model.scaler.std[j])
        );
    }
    out
}

pub fn write_word_model(path: &Path, model: &WordClassifierModel, prov: &Provenance) -> Result<()> {
    write_atomic(path, word_model_to_string(model, prov).as_bytes())
}

pub fn read_word_model(path: &Path) -> Result<(Provenance, WordClassifierModel)> {
    let p = parse(path, "word_model/1", "feature")?;
    check_feature_rows(path, &p)?;
    let mut weights = [0.0; N_FEATURES];
    let mut scaler = Scaler { mean: [0.0; N_FEATURES], std: [0.0; N_FEATURES] };
    for (j, (n, row)) in p.rows.iter().enumerate() {
        weights[j] = parse_f64(&row[1], path, *n)?;
        scaler.mean[j] = parse_f64(&row[2], path, *n)?;
        scaler.std[j] = parse_f64(&row[3], path, *n)?;
    }
    let model = WordClassifierModel { weights, bias: p.float(path, "bias")?, scaler, l2_strength: p.float(path, "l2_strength")? };
    Ok((p.header, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance { config_hash: "0123456789abcdef".into(), seed: 3 }
    }

    #[test]
    fn doc_model_round_trips_exactly() {
        let model = DocModel {
            vocab: Vocabulary::from_words(["bad", "good", "plot"]),
            theta: vec![-1.0 / 3.0, 2.0f64.sqrt(), 1e-17],
            bias: 0.1,
            options: TrainOptions { l2_strength: 1e-3, max_iter: 77, tol: 1e-6 },
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc_model.txt");
        write_doc_model(&path, &model, &prov()).unwrap();
        assert_eq!(read_doc_model(&path).unwrap(), (prov(), model));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("good\t1.4142135623730951e0\n"));
    }

    #[test]
    fn word_model_round_trips_and_checks_schema() {
        let mut weights = [0.0; N_FEATURES];
        weights[3] = -0.7;
        let mut scaler = Scaler { mean: [0.5; N_FEATURES], std: [2.0; N_FEATURES] };
        scaler.std[4] = 0.0;
        let model = WordClassifierModel { weights, bias: 0.25, scaler, l2_strength: 1.0 };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("word_model.txt");
        write_word_model(&path, &model, &prov()).unwrap();
        assert_eq!(read_word_model(&path).unwrap().1, model);

        let broken = std::fs::read_to_string(&path).unwrap().replace("max_sim", "max_similarity");
        std::fs::write(&path, broken).unwrap();
        assert!(matches!(
            read_word_model(&path),
            Err(Error::Core(spurcheck_core::Error::SchemaMismatch(_)))
        ));
    }
}
