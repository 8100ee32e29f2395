//! Stage functions of the encoder pipeline.
//!
//! Activations are `[grid_h, grid_w, channels]` tensors, one row of channels
//! per patch position in raster order. Kernels are `[fan_in, fan_out]`.

use super::{EncoderError, PatchSet, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

/// Normalization epsilon.
pub const NORM_EPS: f64 = 1e-5;

/// `out[r][o] = Σ_i x[r][i]·w[i][o]`, summed in increasing `i` starting from 0.
///
/// Every output element sees the same sequence of f32 multiply/add steps
/// regardless of blocking or instruction set (no fused multiply-add), so
/// results are reproducible bit for bit.
pub(crate) fn matmul(x: &[f32], rows: usize, fan_in: usize, w: &[f32], fan_out: usize) -> Vec<f32> {
    assert_eq!(x.len(), rows * fan_in);
    assert_eq!(w.len(), fan_in * fan_out);
    let mut out = vec![0f32; rows * fan_out];
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the feature was detected at runtime.
        unsafe { matmul_avx2(x, rows, fan_in, w, fan_out, &mut out) };
        return out;
    }
    matmul_kernel(x, rows, fan_in, w, fan_out, &mut out);
    out
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn matmul_avx2(x: &[f32], rows: usize, fan_in: usize, w: &[f32], fan_out: usize, out: &mut [f32]) {
    matmul_kernel(x, rows, fan_in, w, fan_out, out)
}

#[inline(always)]
fn matmul_kernel(x: &[f32], rows: usize, fan_in: usize, w: &[f32], fan_out: usize, out: &mut [f32]) {
    const R: usize = 4;
    const C: usize = 24;
    let full_tiles = rows / R;
    // X tiles interleaved as [tile][i][R]
    let mut xpack = vec![0f32; full_tiles * fan_in * R];
    for t in 0..full_tiles {
        let dst = &mut xpack[t * fan_in * R..(t + 1) * fan_in * R];
        for rr in 0..R {
            let src = &x[(t * R + rr) * fan_in..(t * R + rr + 1) * fan_in];
            for (i, &v) in src.iter().enumerate() {
                dst[i * R + rr] = v;
            }
        }
    }
    // W column panel as [i][C], zero-padded past fan_out
    let mut panel = vec![0f32; fan_in * C];
    let mut c0 = 0;
    while c0 < fan_out {
        let cn = (fan_out - c0).min(C);
        for i in 0..fan_in {
            panel[i * C..i * C + cn].copy_from_slice(&w[i * fan_out + c0..i * fan_out + c0 + cn]);
        }
        for (t, xt) in xpack.chunks_exact(fan_in * R).enumerate() {
            let mut acc = [[0f32; C]; R];
            for (xi, wi) in xt.chunks_exact(R).zip(panel.chunks_exact(C)) {
                for rr in 0..R {
                    let xv = xi[rr];
                    for cc in 0..C {
                        acc[rr][cc] += xv * wi[cc];
                    }
                }
            }
            for (rr, a) in acc.iter().enumerate() {
                let r = t * R + rr;
                out[r * fan_out + c0..r * fan_out + c0 + cn].copy_from_slice(&a[..cn]);
            }
        }
        for r in full_tiles * R..rows {
            let xr = &x[r * fan_in..(r + 1) * fan_in];
            let mut acc = [0f32; C];
            for (&xv, wi) in xr.iter().zip(panel.chunks_exact(C)) {
                for cc in 0..C {
                    acc[cc] += xv * wi[cc];
                }
            }
            out[r * fan_out + c0..r * fan_out + c0 + cn].copy_from_slice(&acc[..cn]);
        }
        c0 += cn;
    }
}

/// Splits an image (`[H, W]` or `[C, H, W]`) into non-overlapping `patch × patch`
/// tiles. Returns `(patches, grid_h, grid_w, fan_in)` with one row per patch in
/// raster order; within a row the index is `(c·patch + ky)·patch + kx`.
pub fn extract_patches(image: &Tensor, patch: usize) -> Result<(Vec<f32>, usize, usize, usize)> {
    let (c, h, w) = match *image.dims() {
        [h, w] => (1, h, w),
        [c, h, w] => (c, h, w),
        ref d => {
            return Err(EncoderError::ShapeMismatch(format!(
                "image must be [H, W] or [C, H, W], got {d:?}"
            )))
        }
    };
    if patch == 0 || h % patch != 0 || w % patch != 0 {
        return Err(EncoderError::ShapeMismatch(format!(
            "{h}x{w} image is not divisible into {patch}x{patch} patches"
        )));
    }
    let (gh, gw) = (h / patch, w / patch);
    let fan_in = c * patch * patch;
    let src = image.data();
    let mut out = Vec::with_capacity(gh * gw * fan_in);
    for py in 0..gh {
        for px in 0..gw {
            for ch in 0..c {
                for ky in 0..patch {
                    let row = (ch * h + py * patch + ky) * w + px * patch;
                    out.extend_from_slice(&src[row..row + patch]);
                }
            }
        }
    }
    Ok((out, gh, gw, fan_in))
}

/// Convolution with kernel size = stride = `patch`: each output position sees
/// exactly one patch.
pub fn patchify_conv(input: &Tensor, kernel: &Tensor, patch: usize) -> Result<Tensor> {
    let (patches, gh, gw, fan_in) = extract_patches(input, patch)?;
    let [k_in, c_out] = *kernel.dims() else {
        return Err(EncoderError::ShapeMismatch("kernel must be 2-D".into()));
    };
    if k_in != fan_in {
        return Err(EncoderError::ShapeMismatch(format!(
            "kernel fan-in {k_in} does not match patch size {fan_in}"
        )));
    }
    let out = matmul(&patches, gh * gw, fan_in, kernel.data(), c_out);
    Ok(Tensor::new(vec![gh, gw, c_out], out).expect("shape"))
}

fn grid(x: &Tensor) -> Result<(usize, usize, usize)> {
    match *x.dims() {
        [gh, gw, c] => Ok((gh, gw, c)),
        ref d => Err(EncoderError::ShapeMismatch(format!(
            "activation must be [grid_h, grid_w, C], got {d:?}"
        ))),
    }
}

/// Per-patch channel mixing.
pub fn conv1x1(x: &Tensor, kernel: &Tensor) -> Result<Tensor> {
    let (gh, gw, c) = grid(x)?;
    let [k_in, c_out] = *kernel.dims() else {
        return Err(EncoderError::ShapeMismatch("kernel must be 2-D".into()));
    };
    if k_in != c {
        return Err(EncoderError::ShapeMismatch(format!(
            "kernel fan-in {k_in} does not match {c} channels"
        )));
    }
    let out = matmul(x.data(), gh * gw, c, kernel.data(), c_out);
    Ok(Tensor::new(vec![gh, gw, c_out], out).expect("shape"))
}

/// Per channel: subtract the mean over this sample's patch positions, divide by
/// sqrt(var + ε), then apply `scale`/`shift`. Statistics are in f64.
pub fn channel_norm(x: &Tensor, scale: &[f32], shift: &[f32]) -> Result<Tensor> {
    let (gh, gw, c) = grid(x)?;
    if scale.len() != c || shift.len() != c {
        return Err(EncoderError::ShapeMismatch(format!(
            "affine of length {}/{} for {c} channels",
            scale.len(),
            shift.len()
        )));
    }
    let n = gh * gw;
    let data = x.data();
    let mut mean = vec![0f64; c];
    for p in 0..n {
        for (ch, m) in mean.iter_mut().enumerate() {
            *m += data[p * c + ch] as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0f64; c];
    for p in 0..n {
        for ch in 0..c {
            let d = data[p * c + ch] as f64 - mean[ch];
            var[ch] += d * d;
        }
    }
    let inv_std: Vec<f64> = var
        .iter()
        .map(|v| 1.0 / (v / n as f64 + NORM_EPS).sqrt())
        .collect();
    let mut out = Vec::with_capacity(data.len());
    for p in 0..n {
        for ch in 0..c {
            let z = (data[p * c + ch] as f64 - mean[ch]) * inv_std[ch];
            out.push((z * scale[ch] as f64 + shift[ch] as f64) as f32);
        }
    }
    Ok(Tensor::new(x.dims().to_vec(), out).expect("shape"))
}

/// Normalization with statistics pinned to mean 0, variance 1: only the affine
/// part is applied, so each patch is transformed independently.
pub fn channel_affine(x: &Tensor, scale: &[f32], shift: &[f32]) -> Result<Tensor> {
    let (_, _, c) = grid(x)?;
    if scale.len() != c || shift.len() != c {
        return Err(EncoderError::ShapeMismatch(format!(
            "affine of length {}/{} for {c} channels",
            scale.len(),
            shift.len()
        )));
    }
    let out = x
        .data()
        .chunks(c)
        .flat_map(|row| {
            row.iter()
                .zip(scale.iter().zip(shift))
                .map(|(&v, (&a, &b))| (v as f64 * a as f64 + b as f64) as f32)
        })
        .collect();
    Ok(Tensor::new(x.dims().to_vec(), out).expect("shape"))
}

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(x.dims().to_vec(), data).expect("shape")
}

/// Adds one embedding row per patch position.
pub fn add_positional(x: &Tensor, embeddings: &Tensor) -> Result<Tensor> {
    let (gh, gw, c) = grid(x)?;
    if embeddings.dims() != [gh * gw, c] {
        return Err(EncoderError::ShapeMismatch(format!(
            "positional embeddings {:?} for {} patches of {c} channels",
            embeddings.dims(),
            gh * gw
        )));
    }
    let data = x
        .data()
        .iter()
        .zip(embeddings.data())
        .map(|(a, b)| a + b)
        .collect();
    Ok(Tensor::new(x.dims().to_vec(), data).expect("shape"))
}

/// Fisher–Yates over patch rows, driven by splitmix64(key_seed XOR nonce).
pub fn shuffle_patches(patches: &PatchSet, key_seed: u64, nonce: u64) -> PatchSet {
    let n = patches.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(key_seed ^ nonce);
    for i in (1..n).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    patches.reordered(&order)
}
