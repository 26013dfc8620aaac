//! Context embeddings and their manifests.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! magic  b"CEV1"
//! dim    u32
//! count  u64
//! count × { context_id u64, dim × f32 }
//! ```
//!
//! The context manifest lists one JSON object per window,
//! `{context_id, sentence_id, word, position, left, right}`, in the order
//! the vectors are expected. An external exporter reads it, encodes each
//! window's text and writes the binary in the same order; loading checks
//! that the manifest still agrees with the windows extracted from the
//! corpus.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use spurcheck_core::contexts::{ContextWindow, EmbeddingStore, Provenance as StoreProvenance};

use super::read_jsonl;
use crate::artifact::{write_atomic, Provenance};
use crate::config::file_digest;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CEV1";
const HEADER_LEN: usize = 16;

/// Encodes the store with records in ascending context id order.
pub fn encode(store: &EmbeddingStore) -> Vec<u8> {
    let dim = store.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + store.len() * (8 + 4 * dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(store.len() as u64).to_le_bytes());
    for (id, v) in store.iter() {
        out.extend_from_slice(&id.to_le_bytes());
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn write(path: &Path, store: &EmbeddingStore) -> Result<()> {
    write_atomic(path, &encode(store))
}

/// Decodes a whole file; nothing is returned unless every record is valid.
pub fn decode(bytes: &[u8], provenance: StoreProvenance) -> std::result::Result<EmbeddingStore, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("{} bytes is shorter than the header", bytes.len()));
    }
    if &bytes[..4] != MAGIC {
        return Err(format!("bad magic {:?}, expected CEV1", &bytes[..4]));
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let record = 8 + 4 * dim;
    let body = &bytes[HEADER_LEN..];
    let expected = (count as u128) * (record as u128);
    if (body.len() as u128) < expected {
        return Err(format!("truncated: header promises {count} records of dim {dim}"));
    }
    if (body.len() as u128) > expected {
        return Err(format!("{} trailing bytes after {count} records", body.len() as u128 - expected));
    }
    let mut store = EmbeddingStore::new(dim, provenance);
    let mut v = vec![0f32; dim];
    for chunk in body.chunks_exact(record.max(1)).take(count as usize) {
        let id = u64::from_le_bytes(chunk[..8].try_into().unwrap());
        for (j, x) in v.iter_mut().enumerate() {
            *x = f32::from_le_bytes(chunk[8 + 4 * j..12 + 4 * j].try_into().unwrap());
        }
        store.insert(id, &v).map_err(|e| e.to_string())?;
    }
    Ok(store)
}

pub fn read(path: &Path, provenance: StoreProvenance) -> Result<EmbeddingStore> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, provenance).map_err(|m| Error::parse(path, 0, m))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub context_id: u64,
    pub sentence_id: u64,
    pub word: String,
    pub position: usize,
    #[serde(default)]
    pub left: Vec<String>,
    #[serde(default)]
    pub right: Vec<String>,
}

impl From<&ContextWindow> for ManifestEntry {
    fn from(w: &ContextWindow) -> Self {
        ManifestEntry {
            context_id: w.context_id,
            sentence_id: w.sentence_id,
            word: w.word.clone(),
            position: w.position,
            left: w.left.clone(),
            right: w.right.clone(),
        }
    }
}

impl ManifestEntry {
    pub fn window(&self) -> ContextWindow {
        ContextWindow {
            context_id: self.context_id,
            sentence_id: self.sentence_id,
            word: self.word.clone(),
            position: self.position,
            left: self.left.clone(),
            right: self.right.clone(),
        }
    }
}

pub fn manifest_to_string(windows: &[ContextWindow], prov: &Provenance) -> String {
    let mut out = prov.json_line("contexts");
    for w in windows {
        out += &serde_json::to_string(&ManifestEntry::from(w)).expect("entry serializes");
        out.push('\n');
    }
    out
}

pub fn write_manifest(path: &Path, windows: &[ContextWindow], prov: &Provenance) -> Result<()> {
    write_atomic(path, manifest_to_string(windows, prov).as_bytes())
}

/// Entries in file order. The provenance line is optional so that
/// manifests rewritten by other tools still load.
pub fn read_manifest(path: &Path) -> Result<(Option<Provenance>, Vec<ManifestEntry>)> {
    let (header, rows) = read_jsonl::<ManifestEntry>(path)?;
    Ok((header, rows.into_iter().map(|(_, e)| e).collect()))
}

/// The manifest must list exactly the extracted windows, in order, with
/// identical `{context_id, sentence_id, word, position}`.
pub fn check_manifest(entries: &[ManifestEntry], windows: &[ContextWindow]) -> Result<()> {
    if entries.len() != windows.len() {
        return Err(Error::ManifestMismatch(format!("{} manifest entries, {} extracted windows", entries.len(), windows.len())));
    }
    for (i, (e, w)) in entries.iter().zip(windows).enumerate() {
        if (e.context_id, e.sentence_id, e.word.as_str(), e.position) != (w.context_id, w.sentence_id, w.word.as_str(), w.position) {
            return Err(Error::ManifestMismatch(format!(
                "entry {i}: manifest has context {} (sentence {}, `{}` at {}), extraction has context {} (sentence {}, `{}` at {})",
                e.context_id, e.sentence_id, e.word, e.position, w.context_id, w.sentence_id, w.word, w.position
            )));
        }
    }
    Ok(())
}

/// The binary must hold exactly one vector per manifest entry.
pub fn check_store(store: &EmbeddingStore, entries: &[ManifestEntry]) -> Result<()> {
    let want: BTreeSet<u64> = entries.iter().map(|e| e.context_id).collect();
    let have: BTreeSet<u64> = store.ids().collect();
    if want != have {
        let missing = want.difference(&have).next();
        let extra = have.difference(&want).next();
        return Err(Error::ManifestMismatch(format!(
            "{} vectors for {} manifest entries (first missing id {:?}, first unexpected id {:?})",
            have.len(),
            want.len(),
            missing,
            extra
        )));
    }
    Ok(())
}

/// Summary written by an external exporter next to the binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub model: String,
    #[serde(default)]
    pub revision: Option<String>,
    pub dim: usize,
    #[serde(default)]
    pub hidden_size: Option<usize>,
    pub count: u64,
    /// SHA-256 of the context manifest the export was computed from.
    pub manifest_sha256: String,
    #[serde(default)]
    pub pooling: Option<String>,
    /// SHA-256 of the binary itself, when the writer recorded it.
    #[serde(default)]
    pub binary_sha256: Option<String>,
}

pub fn export_manifest_to_string(m: &ExportManifest) -> String {
    serde_json::to_string_pretty(m).expect("manifest serializes") + "\n"
}

pub fn read_export_manifest(path: &Path) -> Result<ExportManifest> {
    let text = crate::artifact::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

/// Cross-checks the exporter summary against the binary and the manifest
/// it claims to have used.
pub fn check_export(export: &ExportManifest, store: &EmbeddingStore, manifest_path: &Path) -> Result<()> {
    if export.dim != store.dim() {
        return Err(Error::ManifestMismatch(format!("exporter reports dim {}, binary has {}", export.dim, store.dim())));
    }
    if let Some(h) = export.hidden_size {
        if export.dim != 4 * h {
            return Err(Error::ManifestMismatch(format!("dim {} is not 4 x hidden size {h}", export.dim)));
        }
    }
    if export.count != store.len() as u64 {
        return Err(Error::ManifestMismatch(format!("exporter reports {} vectors, binary has {}", export.count, store.len())));
    }
    let digest = file_digest(manifest_path)?;
    if !export.manifest_sha256.eq_ignore_ascii_case(&digest) {
        return Err(Error::ManifestMismatch(format!(
            "exporter used a manifest with sha256 {}, {} has {digest}",
            export.manifest_sha256,
            manifest_path.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> EmbeddingStore {
        let mut s = EmbeddingStore::new(3, StoreProvenance::Fallback);
        s.insert(4, &[1.0, -2.5, f32::MIN_POSITIVE]).unwrap();
        s.insert(1, &[0.1, 0.2, 0.3]).unwrap();
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let bytes = encode(&store());
        assert_eq!(&bytes[..4], b"CEV1");
        assert_eq!(bytes.len(), 16 + 2 * (8 + 12));
        let back = decode(&bytes, StoreProvenance::Fallback).unwrap();
        let contents = |s: &EmbeddingStore| s.iter().map(|(id, v)| (id, v.to_vec())).collect::<Vec<_>>();
        assert_eq!(contents(&back), contents(&store()));
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn empty_file_keeps_its_dimension() {
        let mut bytes = b"CEV1".to_vec();
        bytes.extend_from_slice(&3072u32.to_le_bytes());
        bytes.extend_from_slice(&0u64.to_le_bytes());
        let s = decode(&bytes, StoreProvenance::ExternalFile).unwrap();
        assert_eq!((s.dim(), s.len()), (3072, 0));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let good = encode(&store());
        let mut bad_magic = good.clone();
        bad_magic[3] = b'2';
        assert!(decode(&bad_magic, StoreProvenance::Fallback).unwrap_err().contains("magic"));
        assert!(decode(&good[..good.len() - 1], StoreProvenance::Fallback).unwrap_err().contains("truncated"));
        let mut dup = good.clone();
        dup[16..24].copy_from_slice(&4u64.to_le_bytes());
        assert!(decode(&dup, StoreProvenance::Fallback).unwrap_err().contains("duplicate"));
        let mut extra = good;
        extra.push(0);
        assert!(decode(&extra, StoreProvenance::Fallback).unwrap_err().contains("trailing"));
    }

    fn window(id: u64, word: &str) -> ContextWindow {
        ContextWindow { context_id: id, sentence_id: id / 2, word: word.into(), position: 1, left: vec!["a".into()], right: vec![] }
    }

    #[test]
    fn manifest_must_agree() {
        let windows = vec![window(0, "x"), window(1, "y")];
        let entries: Vec<ManifestEntry> = windows.iter().map(ManifestEntry::from).collect();
        check_manifest(&entries, &windows).unwrap();
        assert!(check_manifest(&entries[..1], &windows).is_err());
        let mut moved = entries.clone();
        moved[1].position = 2;
        assert!(matches!(check_manifest(&moved, &windows), Err(Error::ManifestMismatch(_))));
    }

    #[test]
    fn manifest_round_trip_and_export_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("contexts.jsonl");
        let windows = vec![window(1, "x"), window(4, "y")];
        write_manifest(&path, &windows, &Provenance { config_hash: "h".into(), seed: 0 }).unwrap();
        let (header, entries) = read_manifest(&path).unwrap();
        assert!(header.is_some());
        check_manifest(&entries, &windows).unwrap();
        check_store(&store(), &entries).unwrap();
        assert!(check_store(&store(), &entries[..1]).is_err());

        let mut export = ExportManifest {
            model: "encoder".into(),
            revision: None,
            dim: 3,
            hidden_size: None,
            count: 2,
            manifest_sha256: file_digest(&path).unwrap(),
            pooling: Some("mean".into()),
            binary_sha256: None,
        };
        check_export(&export, &store(), &path).unwrap();
        export.hidden_size = Some(768);
        assert!(check_export(&export, &store(), &path).is_err());
        export.hidden_size = None;
        export.manifest_sha256 = "00".into();
        assert!(check_export(&export, &store(), &path).is_err());
    }
}
