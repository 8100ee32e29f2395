//! Publication manifests and the secrecy audit.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IoError;
use crate::encoder::{Encoder, EncoderKey};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub file: String,
    pub label: String,
}

/// What an owner publishes next to its encoded files. Carries the output
/// shape and nothing else about the key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublicationManifest {
    pub format_version: u32,
    pub owner_id: String,
    pub task: String,
    pub num_patches: usize,
    pub hidden_dim: usize,
    pub files: Vec<FileEntry>,
}

impl PublicationManifest {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        audit_manifest_json(text)?;
        serde_json::from_str(text).map_err(|e| {
            IoError::Format(format!("manifest, line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    /// Distinct labels in first-seen order.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut v: Vec<String> = Vec::new();
        for f in &self.files {
            if !v.contains(&f.label) {
                v.push(f.label.clone());
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolEntry {
    pub owner_id: String,
    /// Path of the encoded file, relative to the pool manifest.
    pub file: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolManifest {
    pub format_version: u32,
    pub task: String,
    pub num_patches: usize,
    pub hidden_dim: usize,
    pub owners: Vec<String>,
    pub labels: Vec<String>,
    pub files: Vec<PoolEntry>,
}

impl PoolManifest {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        audit_manifest_json(text)?;
        serde_json::from_str(text).map_err(|e| {
            IoError::Format(format!("pool manifest, line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

const FORBIDDEN: [&str; 4] = ["seed", "nonce", "weight", "key"];

fn audit_value(v: &Value, path: &str) -> Result<(), IoError> {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let lower = k.to_ascii_lowercase();
                if let Some(word) = FORBIDDEN.iter().find(|w| lower.contains(*w)) {
                    return Err(IoError::Audit(format!("field {path}.{k} names a {word}")));
                }
                audit_value(child, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        Value::Array(items) => items
            .iter()
            .enumerate()
            .try_for_each(|(i, c)| audit_value(c, &format!("{path}[{i}]"))),
        _ => Ok(()),
    }
}

/// Schema check: no field anywhere in a manifest may name key material.
pub fn audit_manifest_json(text: &str) -> Result<(), IoError> {
    let v: Value = serde_json::from_str(text).map_err(|e| {
        IoError::Format(format!("manifest, line {} column {}: {e}", e.line(), e.column()))
    })?;
    audit_value(&v, "$")
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

/// Byte-level check of a published file: none of the seed, the given nonces
/// or leading weight words of any layer may appear verbatim.
pub fn audit_artifact(bytes: &[u8], encoder: &Encoder, nonces: &[u64]) -> Result<(), IoError> {
    let key: &EncoderKey = encoder.key();
    let seed_le = key.seed.to_le_bytes();
    if contains(bytes, &seed_le) {
        return Err(IoError::Audit("seed bytes found".into()));
    }
    for n in nonces {
        if contains(bytes, &n.to_le_bytes()) {
            return Err(IoError::Audit("nonce bytes found".into()));
        }
    }
    let w = encoder.weights();
    let mut probes: Vec<&[f32]> = vec![w.patch_kernel.data(), w.positional.data(), w.final_kernel.data()];
    probes.extend(w.interior.iter().map(|t| t.data()));
    for p in probes {
        let words: Vec<u8> = p.iter().take(4).flat_map(|v| v.to_le_bytes()).collect();
        if contains(bytes, &words) {
            return Err(IoError::Audit("weight bytes found".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PublicationManifest {
        PublicationManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            owner_id: "a".into(),
            task: "blob".into(),
            num_patches: 4,
            hidden_dim: 8,
            files: vec![
                FileEntry { file: "x.nct".into(), label: "1".into() },
                FileEntry { file: "y.nct".into(), label: "0".into() },
                FileEntry { file: "z.nct".into(), label: "1".into() },
            ],
        }
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let m = sample();
        let text = m.to_json();
        let back = PublicationManifest::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
        assert_eq!(m.vocabulary(), vec!["1", "0"]);
    }

    #[test]
    fn audit_rejects_key_material() {
        assert!(audit_manifest_json(&sample().to_json()).is_ok());
        assert!(matches!(
            audit_manifest_json(r#"{"files":[{"file":"a","nonce":3}]}"#),
            Err(IoError::Audit(_))
        ));
        assert!(matches!(audit_manifest_json(r#"{"Seed":1}"#), Err(IoError::Audit(_))));
        // unknown fields are also refused by the typed parser
        assert!(PublicationManifest::from_json(r#"{"format_version":1,"owner_id":"a","task":"t","num_patches":1,"hidden_dim":1,"files":[],"extra":0}"#).is_err());
    }
}
