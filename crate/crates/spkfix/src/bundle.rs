//! Meeting bundles on disk: a directory of member files plus a manifest
//! carrying the speaker list, embedding dimension and member checksums.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spkfix_core::model::SpeakerId;
use spkfix_core::simulator::MeetingBundle;

use crate::error::{Error, Result};
use crate::formats::{
    merge_votes, parse_ground_truth, parse_rttm, parse_seeds, parse_segments, write_ground_truth, write_rttm,
    write_seeds, write_segments,
};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub v: u32,
    pub meeting_id: String,
    pub speakers: Vec<SpeakerId>,
    pub dim: usize,
    /// Member role (`segments`, `reference`, `seeds`, `ground_truth`, `votes`) → file.
    pub files: BTreeMap<String, FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Checksum of a file on disk.
pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedBundle {
    pub bundle: MeetingBundle,
    pub manifest: Manifest,
    pub dir: PathBuf,
    pub warnings: Vec<String>,
}

fn member<'a>(m: &'a Manifest, role: &str) -> Result<&'a FileEntry> {
    m.files
        .get(role)
        .ok_or_else(|| Error::Validation(format!("manifest lists no `{role}` file")))
}

/// Loads and verifies a bundle directory.
pub fn load_bundle(dir: &Path) -> Result<LoadedBundle> {
    let mpath = dir.join(MANIFEST);
    let manifest: Manifest = serde_json::from_str(&read_text(&mpath)?)
        .map_err(|e| Error::format(mpath.display().to_string(), e.line(), e.to_string()))?;
    if manifest.v != MANIFEST_VERSION {
        return Err(Error::Validation(format!("unsupported manifest version {}", manifest.v)));
    }
    let mut texts = BTreeMap::new();
    for (role, entry) in &manifest.files {
        let path = dir.join(&entry.path);
        let text = read_text(&path)?;
        let sum = sha256_hex(text.as_bytes());
        if sum != entry.sha256 {
            return Err(Error::Validation(format!("checksum mismatch for {}", path.display())));
        }
        texts.insert(role.as_str(), (path.display().to_string(), text));
    }
    let get = |role: &str| -> Result<&(String, String)> {
        member(&manifest, role)?;
        Ok(&texts[role])
    };
    let dim = Some(manifest.dim);
    let (f, t) = get("segments")?;
    let parsed = parse_segments(t, f, dim)?;
    let mut segments = parsed.segments;
    if let Some((f, t)) = texts.get("votes") {
        merge_votes(&mut segments, t, f)?;
    }
    let (f, t) = get("reference")?;
    let reference = parse_rttm(t, f)?;
    let (f, t) = get("seeds")?;
    let seeds = parse_seeds(t, f, dim)?;
    let ground_truth = match texts.get("ground_truth") {
        Some((f, t)) => parse_ground_truth(t, f)?,
        None => Vec::new(),
    };
    let bundle = MeetingBundle {
        meeting_id: manifest.meeting_id.clone(),
        speakers: manifest.speakers.clone(),
        dim: manifest.dim,
        segments,
        reference,
        ground_truth,
        seeds,
    };
    bundle.validate()?;
    Ok(LoadedBundle { bundle, manifest, dir: dir.to_path_buf(), warnings: parsed.warnings })
}

/// Writes a bundle directory and returns its manifest.
pub fn write_bundle(dir: &Path, bundle: &MeetingBundle) -> Result<Manifest> {
    let members = [
        ("segments", "segments.jsonl", write_segments(&bundle.segments)),
        ("reference", "reference.rttm", write_rttm(&bundle.meeting_id, &bundle.reference)),
        ("seeds", "seeds.jsonl", write_seeds(&bundle.seeds)),
        ("ground_truth", "ground_truth.jsonl", write_ground_truth(&bundle.ground_truth)),
    ];
    let mut files = BTreeMap::new();
    for (role, name, text) in members {
        write_text(&dir.join(name), &text)?;
        files.insert(role.to_string(), FileEntry { path: name.to_string(), sha256: sha256_hex(text.as_bytes()) });
    }
    let manifest = Manifest {
        v: MANIFEST_VERSION,
        meeting_id: bundle.meeting_id.clone(),
        speakers: bundle.speakers.clone(),
        dim: bundle.dim,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_text(&dir.join(MANIFEST), &text)?;
    Ok(manifest)
}

/// Bundles in `dir`: the directory itself if it has a manifest, otherwise
/// every immediate subdirectory that has one, in name order.
pub fn discover_bundles(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join(MANIFEST).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST).is_file())
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::Validation(format!("no bundle found under {}", dir.display())));
    }
    Ok(out)
}
