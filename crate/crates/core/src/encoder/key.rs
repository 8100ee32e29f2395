//! NCK1 key files (40 bytes, little-endian):
//! magic `b"NCK1"`, u16 version, u16 reserved, u64 seed, then u32 height,
//! width, channels, patch, depth, hidden.

use std::path::Path;

use super::{ArchConfig, EncoderError, Result};

pub const KEY_MAGIC: &[u8; 4] = b"NCK1";
pub const KEY_VERSION: u16 = 1;
pub const KEY_LEN: usize = 40;

/// The owner's secret. Everything the encoder does follows from these bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderKey {
    pub seed: u64,
    pub arch: ArchConfig,
}

fn field(v: usize, name: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| EncoderError::InvalidArch(format!("{name} {v} exceeds u32")))
}

impl EncoderKey {
    pub fn new(seed: u64, arch: ArchConfig) -> Result<Self> {
        arch.validate()?;
        Ok(EncoderKey { seed, arch })
    }

    pub fn to_bytes(&self) -> Result<[u8; KEY_LEN]> {
        let a = &self.arch;
        let mut out = [0u8; KEY_LEN];
        out[..4].copy_from_slice(KEY_MAGIC);
        out[4..6].copy_from_slice(&KEY_VERSION.to_le_bytes());
        out[8..16].copy_from_slice(&self.seed.to_le_bytes());
        let fields = [
            field(a.height, "height")?,
            field(a.width, "width")?,
            field(a.channels, "channels")?,
            field(a.patch, "patch")?,
            field(a.depth, "depth")?,
            field(a.hidden, "hidden")?,
        ];
        for (i, f) in fields.iter().enumerate() {
            out[16 + 4 * i..20 + 4 * i].copy_from_slice(&f.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != KEY_MAGIC {
            return Err(EncoderError::Format("not an NCK1 key".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != KEY_VERSION {
            return Err(EncoderError::Version {
                found: version,
                supported: KEY_VERSION,
            });
        }
        if bytes.len() != KEY_LEN {
            return Err(EncoderError::Format(format!(
                "key is {} bytes, expected {KEY_LEN}",
                bytes.len()
            )));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let arch = ArchConfig {
            height: u32_at(16),
            width: u32_at(20),
            channels: u32_at(24),
            patch: u32_at(28),
            depth: u32_at(32),
            hidden: u32_at(36),
        };
        arch.validate()
            .map_err(|e| EncoderError::Format(format!("key holds an invalid architecture: {e}")))?;
        Ok(EncoderKey { seed, arch })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let key = EncoderKey::new(0x0102_0304_0506_0708, ArchConfig::default()).unwrap();
        let b = key.to_bytes().unwrap();
        assert_eq!(&b[..4], b"NCK1");
        assert_eq!(&b[4..8], &[1, 0, 0, 0]);
        assert_eq!(&b[8..16], &[8, 7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(&b[16..20], &256u32.to_le_bytes());
        assert_eq!(&b[36..40], &2048u32.to_le_bytes());
    }

    #[test]
    fn rejects_bad_keys() {
        let key = EncoderKey::new(5, ArchConfig::default()).unwrap();
        let good = key.to_bytes().unwrap();
        let mut bad = good;
        bad[0] = b'X';
        assert!(matches!(EncoderKey::from_bytes(&bad), Err(EncoderError::Format(_))));
        let mut v2 = good;
        v2[4] = 2;
        assert!(matches!(
            EncoderKey::from_bytes(&v2),
            Err(EncoderError::Version { found: 2, .. })
        ));
        assert!(EncoderKey::from_bytes(&good[..39]).is_err());
        let mut odd_patch = good;
        odd_patch[28..32].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(EncoderKey::from_bytes(&odd_patch), Err(EncoderError::Format(_))));
    }

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>(), g in 1usize..8, p in 1usize..6, depth in 3usize..12, hidden in 1usize..64, c in 1usize..4) {
            let arch = ArchConfig { height: g * p, width: (g + 1) * p, channels: c, patch: p, depth, hidden };
            let key = EncoderKey::new(seed, arch).unwrap();
            let bytes = key.to_bytes().unwrap();
            prop_assert_eq!(EncoderKey::from_bytes(&bytes).unwrap(), key);
        }
    }
}
