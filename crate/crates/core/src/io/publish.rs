//! Owner-side workflow: key generation, dataset encoding, pooling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::rngs::OsRng;
use rand::RngCore;

use super::manifest::{
    audit_artifact, audit_manifest_json, FileEntry, PoolEntry, PoolManifest, PublicationManifest,
    MANIFEST_FORMAT_VERSION,
};
use super::pgm::load_image;
use super::IoError;
use crate::encoder::{ArchConfig, Encoder, EncoderKey};

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| IoError::Io(e.error))?;
    Ok(())
}

/// Writes a key file; the seed comes from OS entropy when not given.
pub fn keygen(seed: Option<u64>, arch: ArchConfig, path: &Path) -> Result<EncoderKey, IoError> {
    let seed = seed.unwrap_or_else(|| OsRng.next_u64());
    let key = EncoderKey::new(seed, arch)?;
    write_atomic(path, &key.to_bytes()?)?;
    Ok(key)
}

/// The private per-sample nonce record kept next to the key.
pub fn nonce_sidecar_path(key_path: &Path) -> PathBuf {
    let mut name = key_path.file_name().unwrap_or_default().to_os_string();
    name.push(".nonces.json");
    key_path.with_file_name(name)
}

/// Nonces recorded for each published file, keyed by output file name.
pub fn load_nonces(key_path: &Path) -> Result<BTreeMap<String, u64>, IoError> {
    let path = nonce_sidecar_path(key_path);
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = std::fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| {
        IoError::Format(format!("{}, line {} column {}: {e}", path.display(), e.line(), e.column()))
    })
}

/// `file,label` rows with a header line.
pub fn read_labels_csv(path: &Path) -> Result<Vec<(String, String)>, IoError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| IoError::Format(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<(String, String)>() {
        let (file, label) = rec.map_err(|e| IoError::Format(format!("{}: {e}", path.display())))?;
        rows.push((file.trim().to_owned(), label.trim().to_owned()));
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct EncodeRequest {
    pub key_path: PathBuf,
    /// Raw images, PGM or NCT1.
    pub inputs: Vec<PathBuf>,
    /// Input file name to label.
    pub labels: Vec<(String, String)>,
    pub out_dir: PathBuf,
    pub owner_id: String,
    pub task: String,
    /// Counter base for nonce derivation; drawn from OS entropy when absent.
    pub nonce_base: Option<u64>,
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Encodes every input under a fresh nonce, writes one NCT1 file per sample
/// plus `manifest.json`, and records the nonces in the key's sidecar.
pub fn encode_dataset(req: &EncodeRequest) -> Result<PublicationManifest, IoError> {
    let key = EncoderKey::load(&req.key_path)?;
    let encoder = Encoder::new(key)?;
    std::fs::create_dir_all(&req.out_dir)?;
    let key_dir = match req.key_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    if same_dir(&key_dir, &req.out_dir) {
        return Err(IoError::Data("output directory must not be the key's directory".into()));
    }
    let labels: HashMap<&str, &str> = req.labels.iter().map(|(f, l)| (f.as_str(), l.as_str())).collect();
    let mut names = BTreeSet::new();
    let mut entries = Vec::with_capacity(req.inputs.len());
    let mut images = Vec::with_capacity(req.inputs.len());
    for input in &req.inputs {
        let name = input
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| IoError::Data(format!("unusable file name {}", input.display())))?;
        let label = labels.get(name).ok_or_else(|| IoError::MissingLabel(name.to_owned()))?;
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
        let out_name = format!("{stem}.nct");
        if !names.insert(out_name.clone()) {
            return Err(IoError::Data(format!("two inputs map to {out_name}")));
        }
        let img = load_image(input)?;
        let a = encoder.arch();
        if img.dims() != a.image_dims().as_slice() && img.dims() != [a.channels, a.height, a.width] {
            return Err(IoError::ShapeMismatch(format!(
                "{name} has dims {:?}, key expects {:?}",
                img.dims(),
                a.image_dims()
            )));
        }
        images.push(img);
        entries.push(FileEntry {
            file: out_name,
            label: (*label).to_owned(),
        });
    }
    let base = req.nonce_base.unwrap_or_else(|| OsRng.next_u64());
    let nonces: Vec<u64> = (0..images.len() as u64)
        .map(|i| encoder.nonce_for(base.wrapping_add(i)))
        .collect();
    let encoded = encoder.encode_batch(&images, &nonces)?;
    for ((entry, ps), &nonce) in entries.iter().zip(&encoded).zip(&nonces) {
        let bytes = ps.to_tensor().to_nct_bytes();
        audit_artifact(&bytes, &encoder, &[nonce])?;
        write_atomic(&req.out_dir.join(&entry.file), &bytes)?;
    }
    let manifest = PublicationManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        owner_id: req.owner_id.clone(),
        task: req.task.clone(),
        num_patches: encoder.arch().num_patches(),
        hidden_dim: encoder.arch().hidden,
        files: entries,
    };
    let text = manifest.to_json();
    audit_manifest_json(&text)?;
    audit_artifact(text.as_bytes(), &encoder, &nonces)?;
    write_atomic(&req.out_dir.join("manifest.json"), text.as_bytes())?;

    let mut record = load_nonces(&req.key_path)?;
    for (entry, &nonce) in manifest.files.iter().zip(&nonces) {
        record.insert(entry.file.clone(), nonce);
    }
    let sidecar = serde_json::to_string_pretty(&record).expect("nonce map serializes") + "\n";
    write_atomic(&nonce_sidecar_path(&req.key_path), sidecar.as_bytes())?;
    Ok(manifest)
}

/// Concatenates owner shards. `dir` is each manifest's directory relative to
/// where the pool manifest will live.
pub fn pool_merge(shards: &[(PathBuf, PublicationManifest)]) -> Result<PoolManifest, IoError> {
    let (_, first) = shards
        .first()
        .ok_or_else(|| IoError::Data("pool needs at least one manifest".into()))?;
    let vocab: BTreeSet<&String> = first.files.iter().map(|f| &f.label).collect();
    let mut owners = Vec::new();
    let mut files = Vec::new();
    for (dir, m) in shards {
        if m.task != first.task {
            return Err(IoError::VocabMismatch(format!("task {:?} vs {:?}", m.task, first.task)));
        }
        let v: BTreeSet<&String> = m.files.iter().map(|f| &f.label).collect();
        if v != vocab {
            return Err(IoError::VocabMismatch(format!(
                "owner {} has labels {v:?}, owner {} has {vocab:?}",
                m.owner_id, first.owner_id
            )));
        }
        if m.hidden_dim != first.hidden_dim || m.num_patches != first.num_patches {
            return Err(IoError::DimMismatch(format!(
                "owner {} publishes {}x{}, owner {} publishes {}x{}",
                m.owner_id, m.num_patches, m.hidden_dim, first.owner_id, first.num_patches, first.hidden_dim
            )));
        }
        if owners.contains(&m.owner_id) {
            return Err(IoError::Data(format!("owner {} appears twice", m.owner_id)));
        }
        owners.push(m.owner_id.clone());
        for f in &m.files {
            let path = if dir.as_os_str().is_empty() { PathBuf::from(&f.file) } else { dir.join(&f.file) };
            files.push(PoolEntry {
                owner_id: m.owner_id.clone(),
                file: path.to_string_lossy().replace('\\', "/"),
                label: f.label.clone(),
            });
        }
    }
    Ok(PoolManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        task: first.task.clone(),
        num_patches: first.num_patches,
        hidden_dim: first.hidden_dim,
        owners,
        labels: first.vocabulary(),
        files,
    })
}
