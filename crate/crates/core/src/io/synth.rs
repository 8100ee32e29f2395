//! Two-class Gaussian-blob images.

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::rng::GaussianStream;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobClass {
    /// Blob centre (row, col) mean in pixels.
    pub center: (f64, f64),
    /// Std of the per-image centre offset.
    pub jitter: f64,
    pub radius: f64,
    pub amplitude: f64,
    /// Peak amplitude of a ±1 pixel checkerboard under a Gaussian envelope
    /// at a uniformly random position.
    #[serde(default)]
    pub texture: f64,
}

/// Class-independent blobs added to every image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nuisance {
    pub count: usize,
    pub radius: (f64, f64),
    pub amplitude: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub height: usize,
    pub width: usize,
    pub classes: [BlobClass; 2],
    pub noise: f64,
    /// Per-image amplitude multiplier drawn uniformly from [1 − spread, 1].
    pub amplitude_spread: f64,
    pub nuisance: Option<Nuisance>,
    pub texture_radius: f64,
    pub samples: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    /// Low-signal preset: both classes share a centred blob, random nuisance
    /// blobs and amplitude variation; class 1 adds a faint localized texture.
    /// Separable on raw pixels, but the class direction carries little of the
    /// total variance.
    pub fn subtle(height: usize, width: usize, samples: usize, seed: u64) -> Self {
        let (h, w) = (height as f64, width as f64);
        let s = h.min(w) / 16.0;
        let shared = BlobClass {
            center: (0.5 * h, 0.5 * w),
            jitter: 3.0 * s,
            radius: 2.0 * s,
            amplitude: 0.6,
            texture: 0.0,
        };
        let mut lesion = shared.clone();
        lesion.texture = 0.3;
        SyntheticConfig {
            height,
            width,
            classes: [shared, lesion],
            noise: 0.05,
            amplitude_spread: 0.5,
            nuisance: Some(Nuisance {
                count: 4,
                radius: (s, 3.0 * s),
                amplitude: (0.3, 0.9),
            }),
            texture_radius: 3.0 * s,
            samples,
            seed,
        }
    }

    /// Class 0: small bright blob upper left. Class 1: larger, dimmer blob
    /// lower right with about twice the total intensity.
    pub fn new(height: usize, width: usize, samples: usize, seed: u64) -> Self {
        let (h, w) = (height as f64, width as f64);
        let s = h.min(w) / 16.0;
        SyntheticConfig {
            height,
            width,
            classes: [
                BlobClass {
                    center: (0.3 * h, 0.3 * w),
                    jitter: s,
                    radius: 1.5 * s,
                    amplitude: 0.9,
                    texture: 0.0,
                },
                BlobClass {
                    center: (0.65 * h, 0.65 * w),
                    jitter: s,
                    radius: 3.0 * s,
                    amplitude: 0.6,
                    texture: 0.0,
                },
            ],
            noise: 0.05,
            amplitude_spread: 0.0,
            nuisance: None,
            texture_radius: 2.0 * s,
            samples,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub images: Vec<Tensor>,
    /// Class index per image, 0 or 1.
    pub labels: Vec<usize>,
}

/// Labels alternate 0, 1, 0, ... so both classes are present from two samples on.
pub fn synth_generate(cfg: &SyntheticConfig) -> Result<SyntheticDataset, IoError> {
    if cfg.samples == 0 {
        return Err(IoError::Data("synthetic dataset needs at least one sample".into()));
    }
    if cfg.height == 0 || cfg.width == 0 {
        return Err(IoError::Data("image size must be positive".into()));
    }
    let mut g = GaussianStream::new(cfg.seed);
    let mut images = Vec::with_capacity(cfg.samples);
    let mut labels = Vec::with_capacity(cfg.samples);
    for i in 0..cfg.samples {
        let label = i % 2;
        let c = &cfg.classes[label];
        let cy = c.center.0 + c.jitter * g.next_gaussian();
        let cx = c.center.1 + c.jitter * g.next_gaussian();
        let amp = c.amplitude * (1.0 - cfg.amplitude_spread * g.next_unit());
        let mut blobs = vec![(cy, cx, c.radius, amp)];
        if let Some(n) = &cfg.nuisance {
            let mut between = |(lo, hi): (f64, f64)| lo + (hi - lo) * g.next_unit();
            for _ in 0..n.count {
                let y = between((0.0, cfg.height as f64));
                let x = between((0.0, cfg.width as f64));
                blobs.push((y, x, between(n.radius), between(n.amplitude)));
            }
        }
        let ty = cfg.height as f64 * g.next_unit();
        let tx = cfg.width as f64 * g.next_unit();
        let tr2 = 2.0 * cfg.texture_radius * cfg.texture_radius;
        let mut data = Vec::with_capacity(cfg.height * cfg.width);
        for y in 0..cfg.height {
            for x in 0..cfg.width {
                let sign = if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
                let env = (-((y as f64 - ty).powi(2) + (x as f64 - tx).powi(2)) / tr2).exp();
                let mut v = cfg.noise * g.next_gaussian() + c.texture * sign * env;
                for &(by, bx, r, a) in &blobs {
                    let d2 = (y as f64 - by).powi(2) + (x as f64 - bx).powi(2);
                    v += a * (-d2 / (2.0 * r * r)).exp();
                }
                data.push(v.clamp(0.0, 1.0) as f32);
            }
        }
        images.push(Tensor::new(vec![cfg.height, cfg.width], data).expect("shape"));
        labels.push(label);
    }
    Ok(SyntheticDataset { images, labels })
}
