//! Keyed random patch encoder.
//!
//! Pipeline for depth `d` (d ≥ 3):
//!
//! ```text
//! patchify conv
//! [channel norm → relu → 1×1 conv] × (d − 3)
//! channel norm → relu → + positional → 1×1 conv → relu
//! shuffle patch order
//! ```
//!
//! All weights are drawn from one Gaussian stream seeded by the key, in this
//! order: patchify kernel, interior kernels, norm scales and shifts (layer by
//! layer), positional embeddings, final kernel. No conv has a bias.

mod key;
mod ops;
mod patches;

use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{derive_nonce, GaussianStream};
use crate::tensor::{Tensor, TensorError};

pub use key::{EncoderKey, KEY_LEN, KEY_MAGIC, KEY_VERSION};
pub use ops::{
    add_positional, channel_affine, channel_norm, conv1x1, extract_patches, patchify_conv, relu, shuffle_patches,
    NORM_EPS,
};
pub use patches::PatchSet;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("encoder produced a non-finite value")]
    NonFiniteOutput,
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported key version {found} (supported: {supported})")]
    Version { found: u16, supported: u16 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EncoderError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchConfig {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub patch: usize,
    pub depth: usize,
    pub hidden: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            height: 256,
            width: 256,
            channels: 1,
            patch: 16,
            depth: 7,
            hidden: 2048,
        }
    }
}

impl ArchConfig {
    pub const MIN_DEPTH: usize = 3;

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(EncoderError::InvalidArch(m));
        if self.height == 0 || self.width == 0 || self.channels == 0 {
            return err("image dimensions must be positive".into());
        }
        if self.patch == 0 || self.height % self.patch != 0 || self.width % self.patch != 0 {
            return err(format!(
                "patch size {} does not divide {}x{}",
                self.patch, self.height, self.width
            ));
        }
        if self.depth < Self::MIN_DEPTH {
            return err(format!("depth {} is below {}", self.depth, Self::MIN_DEPTH));
        }
        if self.hidden == 0 {
            return err("hidden dimension must be positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.height / self.patch, self.width / self.patch)
    }

    pub fn num_patches(&self) -> usize {
        let (gh, gw) = self.grid();
        gh * gw
    }

    pub fn patch_fan_in(&self) -> usize {
        self.channels * self.patch * self.patch
    }

    pub fn interior_layers(&self) -> usize {
        self.depth - 3
    }

    pub fn norm_layers(&self) -> usize {
        self.depth - 2
    }

    pub fn parameter_count(&self) -> u64 {
        let h = self.hidden as u64;
        self.patch_fan_in() as u64 * h
            + self.interior_layers() as u64 * h * h
            + self.norm_layers() as u64 * 2 * h
            + self.num_patches() as u64 * h
            + h * h
    }

    /// Expected dims of an input image.
    pub fn image_dims(&self) -> Vec<usize> {
        if self.channels == 1 {
            vec![self.height, self.width]
        } else {
            vec![self.channels, self.height, self.width]
        }
    }

    fn check_image(&self, image: &Tensor) -> Result<()> {
        let ok = image.dims() == self.image_dims()
            || image.dims() == [self.channels, self.height, self.width];
        if !ok {
            return Err(EncoderError::ShapeMismatch(format!(
                "image {:?} does not match architecture {:?}",
                image.dims(),
                self.image_dims()
            )));
        }
        if !image.is_finite() {
            return Err(EncoderError::ShapeMismatch("image has non-finite pixels".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NormAffine {
    pub scale: Vec<f32>,
    pub shift: Vec<f32>,
}

/// Materialized weights.
#[derive(Debug, Clone)]
pub struct EncoderWeights {
    pub patch_kernel: Tensor,
    pub interior: Vec<Tensor>,
    pub norms: Vec<NormAffine>,
    pub positional: Tensor,
    pub final_kernel: Tensor,
}

impl EncoderWeights {
    pub fn sample(key: &EncoderKey) -> Result<Self> {
        let a = key.arch;
        a.validate()?;
        let h = a.hidden;
        let mut g = GaussianStream::new(key.seed);
        let he = |fan_in: usize| (2.0 / fan_in as f64).sqrt();
        let fan_in = a.patch_fan_in();
        let patch_kernel = Tensor::new(vec![fan_in, h], g.fill(fan_in * h, he(fan_in)))?;
        let interior = (0..a.interior_layers())
            .map(|_| Tensor::new(vec![h, h], g.fill(h * h, he(h))))
            .collect::<Result<Vec<_>, _>>()?;
        let norms = (0..a.norm_layers())
            .map(|_| NormAffine {
                scale: g.fill(h, 1.0),
                shift: g.fill(h, 1.0),
            })
            .collect();
        let np = a.num_patches();
        let positional = Tensor::new(vec![np, h], g.fill(np * h, 1.0))?;
        let final_kernel = Tensor::new(vec![h, h], g.fill(h * h, he(h)))?;
        Ok(EncoderWeights {
            patch_kernel,
            interior,
            norms,
            positional,
            final_kernel,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Diagnostic switch; the real encoder always adds positional embeddings.
    pub positional: bool,
    /// Diagnostic switch. When false the normalization layers skip the
    /// per-sample statistics and apply only their affine part.
    pub sample_statistics: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            positional: true,
            sample_statistics: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Encoder {
    key: EncoderKey,
    weights: EncoderWeights,
}

impl Encoder {
    pub fn new(key: EncoderKey) -> Result<Self> {
        let weights = EncoderWeights::sample(&key)?;
        Ok(Encoder { key, weights })
    }

    pub fn key(&self) -> &EncoderKey {
        &self.key
    }

    pub fn arch(&self) -> &ArchConfig {
        &self.key.arch
    }

    pub fn weights(&self) -> &EncoderWeights {
        &self.weights
    }

    /// Network output before shuffling, patches in raster order.
    pub fn encode_unshuffled(&self, image: &Tensor, opts: EncodeOptions) -> Result<PatchSet> {
        let a = &self.key.arch;
        a.check_image(image)?;
        let w = &self.weights;
        let norm = |x: &Tensor, n: &NormAffine| {
            if opts.sample_statistics {
                channel_norm(x, &n.scale, &n.shift)
            } else {
                channel_affine(x, &n.scale, &n.shift)
            }
        };
        let mut x = patchify_conv(image, &w.patch_kernel, a.patch)?;
        for (kernel, n) in w.interior.iter().zip(&w.norms) {
            x = relu(&norm(&x, n)?);
            x = conv1x1(&x, kernel)?;
        }
        let last = w.norms.last().expect("depth >= 3 gives a norm layer");
        x = relu(&norm(&x, last)?);
        if opts.positional {
            x = add_positional(&x, &w.positional)?;
        }
        x = relu(&conv1x1(&x, &w.final_kernel)?);
        if !x.is_finite() {
            return Err(EncoderError::NonFiniteOutput);
        }
        Ok(PatchSet::from_tensor(x))
    }

    pub fn encode(&self, image: &Tensor, nonce: u64) -> Result<PatchSet> {
        self.encode_with(image, nonce, EncodeOptions::default())
    }

    pub fn encode_with(&self, image: &Tensor, nonce: u64, opts: EncodeOptions) -> Result<PatchSet> {
        let out = self.encode_unshuffled(image, opts)?;
        Ok(shuffle_patches(&out, self.key.seed, nonce))
    }

    /// Default nonce for the `counter`-th sample under this key.
    pub fn nonce_for(&self, counter: u64) -> u64 {
        derive_nonce(self.key.seed, counter)
    }

    /// Encodes in parallel; output order follows `images`.
    pub fn encode_batch(&self, images: &[Tensor], nonces: &[u64]) -> Result<Vec<PatchSet>> {
        if images.len() != nonces.len() {
            return Err(EncoderError::ShapeMismatch(format!(
                "{} images but {} nonces",
                images.len(),
                nonces.len()
            )));
        }
        images
            .par_iter()
            .zip(nonces.par_iter())
            .map(|(img, &n)| self.encode(img, n))
            .collect()
    }
}

/// Baseline target: a single random patch projection, no nonlinearity,
/// no positional stage and no shuffle.
#[derive(Debug, Clone)]
pub struct LinearEncoder {
    patch: usize,
    kernel: Tensor,
}

impl LinearEncoder {
    pub fn new(seed: u64, channels: usize, patch: usize, hidden: usize) -> Result<Self> {
        if channels == 0 || patch == 0 || hidden == 0 {
            return Err(EncoderError::InvalidArch("zero-sized linear encoder".into()));
        }
        let fan_in = channels * patch * patch;
        let data = GaussianStream::new(seed).fill(fan_in * hidden, (2.0 / fan_in as f64).sqrt());
        Ok(LinearEncoder {
            patch,
            kernel: Tensor::new(vec![fan_in, hidden], data)?,
        })
    }

    pub fn kernel(&self) -> &Tensor {
        &self.kernel
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn encode(&self, image: &Tensor) -> Result<PatchSet> {
        Ok(PatchSet::from_tensor(patchify_conv(image, &self.kernel, self.patch)?))
    }
}
