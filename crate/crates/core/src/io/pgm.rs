//! Binary 8-bit PGM (P5) ingestion.

use std::path::Path;

use super::IoError;
use crate::tensor::Tensor;

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], IoError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(IoError::Format("PGM header truncated".into()));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Result<usize, IoError> {
    let tok = header_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| IoError::Format(format!("bad PGM header field {:?}", String::from_utf8_lossy(tok))))
}

/// Pixels scaled by 1/255 into a `[height, width]` tensor.
pub fn read_pgm(bytes: &[u8]) -> Result<Tensor, IoError> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(IoError::Format(format!(
            "expected binary PGM magic P5, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = header_number(bytes, &mut pos)?;
    let height = header_number(bytes, &mut pos)?;
    let maxval = header_number(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(IoError::Format(format!("only maxval 255 is supported, found {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(IoError::Format("PGM header truncated".into()));
    }
    pos += 1;
    let n = width * height;
    let raster = &bytes[pos..];
    if raster.len() < n {
        return Err(IoError::Format(format!("PGM raster has {} of {n} bytes", raster.len())));
    }
    let data = raster[..n].iter().map(|&b| b as f32 / 255.0).collect();
    Ok(Tensor::new(vec![height, width], data)?)
}

/// Inverse of [`read_pgm`] for `[height, width]` tensors; values are clamped
/// to [0, 1] and rounded.
pub fn write_pgm(t: &Tensor) -> Result<Vec<u8>, IoError> {
    let [h, w] = t.dims() else {
        return Err(IoError::ShapeMismatch(format!("PGM needs 2-D data, got {:?}", t.dims())));
    };
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(t.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

/// `.pgm` files through [`read_pgm`], anything else as NCT1.
pub fn load_image(path: &Path) -> Result<Tensor, IoError> {
    let bytes = std::fs::read(path)?;
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        read_pgm(&bytes)
    } else {
        Ok(Tensor::from_nct_bytes(&bytes)?)
    }
}
