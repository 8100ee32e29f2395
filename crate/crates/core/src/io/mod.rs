//! Files, publication workflow and report output.

mod experiment;
mod instance;
mod manifest;
mod pgm;
mod publish;
mod render;
mod synth;
mod utility;

use thiserror::Error;

use crate::attack::AttackError;
use crate::discrete::{Caps, DiscreteError};
use crate::encoder::EncoderError;
use crate::privacy::AnalysisError;
use crate::tensor::TensorError;

pub use experiment::{Scenario, Target};
pub use instance::{
    analyze, parse_prob, DatasetMass, DatasetPriorSpec, FamilySpec, FocusDto, InstanceSpec,
    LcClassDto, LoadedInstance, Membership, ObservationDto, ObserveSpec, PriorEntry,
    PrivacyReportDto, Weight,
};
pub use manifest::{
    audit_artifact, audit_manifest_json, FileEntry, PoolEntry, PoolManifest, PublicationManifest,
    MANIFEST_FORMAT_VERSION,
};
pub use pgm::{load_image, read_pgm, write_pgm};
pub use publish::{
    encode_dataset, keygen, load_nonces, nonce_sidecar_path, pool_merge, read_labels_csv,
    write_atomic, EncodeRequest,
};
pub use render::{render_attack, render_lc_csv, render_privacy_report, render_utility};
pub use synth::{synth_generate, BlobClass, Nuisance, SyntheticConfig, SyntheticDataset};
pub use utility::{
    binary_labels, features_of, load_pool_shards, pool_shards, utility_pool, utility_proxy, OwnerMetrics, UtilityMetrics, UtilityReport,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("format error: {0}")]
    Format(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("no label for {0}")]
    MissingLabel(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("label vocabularies differ: {0}")]
    VocabMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("secrecy audit failed: {0}")]
    Audit(String),
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_SCALE: i32 = 4;

impl IoError {
    /// Process exit code: 4 for enumeration caps, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        let too_large = |d: &DiscreteError| matches!(d, DiscreteError::TooLarge { .. });
        match self {
            IoError::Discrete(d) if too_large(d) => EXIT_SCALE,
            IoError::Analysis(AnalysisError::Discrete(d)) if too_large(d) => EXIT_SCALE,
            _ => EXIT_DATA,
        }
    }
}

/// Caps from `NCK_CAP`: a single number sets every cap, or comma-separated
/// `sym=8,f0=1000000,pairs=50000000` sets them individually.
pub fn caps_from_env() -> Result<Caps, IoError> {
    match std::env::var("NCK_CAP") {
        Ok(v) => parse_caps(&v),
        Err(_) => Ok(Caps::default()),
    }
}

pub fn parse_caps(text: &str) -> Result<Caps, IoError> {
    let bad = || IoError::Format(format!("NCK_CAP: cannot parse {text:?}"));
    let mut caps = Caps::default();
    let text = text.trim();
    if let Ok(n) = text.parse::<u128>() {
        caps.sym_max_samples = usize::try_from(n).map_err(|_| bad())?;
        caps.f0_max_members = n;
        caps.max_pairs = n;
        return Ok(caps);
    }
    for part in text.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(bad)?;
        let v: u128 = v.trim().parse().map_err(|_| bad())?;
        match k.trim() {
            "sym" => caps.sym_max_samples = usize::try_from(v).map_err(|_| bad())?,
            "f0" => caps.f0_max_members = v,
            "pairs" => caps.max_pairs = v,
            _ => return Err(bad()),
        }
    }
    Ok(caps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps_parsing() {
        let c = parse_caps("100").unwrap();
        assert_eq!((c.sym_max_samples, c.f0_max_members, c.max_pairs), (100, 100, 100));
        let c = parse_caps("sym=5, pairs=10").unwrap();
        assert_eq!((c.sym_max_samples, c.f0_max_members, c.max_pairs), (5, Caps::default().f0_max_members, 10));
        assert!(parse_caps("sym").is_err());
        assert!(parse_caps("depth=3").is_err());
    }

    #[test]
    fn exit_codes() {
        let big = DiscreteError::TooLarge {
            what: "Sym",
            needed: "40320".into(),
            cap: "10".into(),
        };
        assert_eq!(IoError::Discrete(big.clone()).exit_code(), EXIT_SCALE);
        assert_eq!(IoError::Analysis(AnalysisError::Discrete(big)).exit_code(), EXIT_SCALE);
        assert_eq!(IoError::Format("x".into()).exit_code(), EXIT_DATA);
    }
}
