//! Attacks against published encodings.
//!
//! Samples are patch matrices: one row per patch. Raw samples come from
//! [`raw_patches`], published ones from [`patchset_matrix`]. Published rows are
//! unordered, so every MSE here compares canonically sorted rows.

mod logistic;
mod mmd;
mod model;
mod plaintext;
mod train;
mod transfer;

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{extract_patches, EncoderError, PatchSet};
use crate::tensor::Tensor;

pub use logistic::LogisticModel;
pub use mmd::{median_heuristic, mmd2, mmd2_gradient, mmd2_output_gradient, rbf_kernel, Bandwidth, MmdConfig};
pub use model::{AttackerKind, AttackerModel};
pub use plaintext::{permutation_fit, plaintext_attack, PlaintextMethod, PlaintextOutcome};
pub use train::{train_mmd_attack, TrainConfig};
pub use transfer::{transfer_attack, TransferConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("empty input set")]
    EmptySet,
    #[error("unsupported attacker model: {0}")]
    UnsupportedModel(String),
    #[error("loss diverged at step {0}")]
    Divergence(usize),
    #[error("data has a single class")]
    SingleClassData,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("mean baseline has zero error; ratio undefined")]
    DegenerateBaseline,
}

pub type Result<T, E = AttackError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: String,
    /// MSE(T*) / MSE(T_μ); absent for attacks that do not score pairs.
    pub mse_ratio: Option<f64>,
    pub attacker_mse: Option<f64>,
    pub baseline_mse: Option<f64>,
    pub initial_mse_ratio: Option<f64>,
    pub epochs_run: usize,
    pub final_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer_auc_on_zstar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer_auc_on_z: Option<f64>,
    #[serde(default)]
    pub rank_deficient: bool,
}

impl AttackReport {
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {} steps", self.attack, self.epochs_run);
        if let Some(r) = self.mse_ratio {
            let verdict = if r < 1.0 { "beats" } else { "does not beat" };
            s.push_str(&format!("; T*/T_mu MSE ratio {r:.4} ({verdict} the mean baseline)"));
        }
        if let (Some(a), Some(b)) = (self.transfer_auc_on_zstar, self.transfer_auc_on_z) {
            s.push_str(&format!("; AUC on Z* {a:.3}, on Z {b:.3}"));
        }
        if self.rank_deficient {
            s.push_str("; rank deficient, pseudo-inverse used");
        }
        s
    }
}

/// Raw image as a `[num_patches, C·p·p]` matrix in raster order.
pub fn raw_patches(image: &Tensor, patch: usize) -> Result<DMatrix<f64>, EncoderError> {
    let (data, gh, gw, fan_in) = extract_patches(image, patch)?;
    Ok(DMatrix::from_row_iterator(gh * gw, fan_in, data.iter().map(|&v| v as f64)))
}

pub fn patchset_matrix(p: &PatchSet) -> DMatrix<f64> {
    DMatrix::from_row_iterator(p.len(), p.dim(), p.data().iter().map(|&v| v as f64))
}

/// Anything mapping a raw patch matrix to an output patch matrix.
pub trait Predictor {
    fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

impl<F: Fn(&DMatrix<f64>) -> DMatrix<f64>> Predictor for F {
    fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self(x)
    }
}

/// T_μ: ignores its input and emits the mean published patch vector per patch.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanBaseline {
    mean: Vec<f64>,
}

impl MeanBaseline {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

impl Predictor for MeanBaseline {
    fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), self.mean.len(), |_, c| self.mean[c])
    }
}

/// Mean of all published patch vectors.
pub fn mean_baseline(z: &[DMatrix<f64>]) -> Result<MeanBaseline> {
    let rows: usize = z.iter().map(|m| m.nrows()).sum();
    if rows == 0 {
        return Err(AttackError::EmptySet);
    }
    let d = z[0].ncols();
    if z.iter().any(|m| m.ncols() != d) {
        return Err(AttackError::DimMismatch("ragged published set".into()));
    }
    let mut mean = vec![0f64; d];
    for m in z {
        for r in 0..m.nrows() {
            for (c, acc) in mean.iter_mut().enumerate() {
                *acc += m[(r, c)];
            }
        }
    }
    mean.iter_mut().for_each(|v| *v /= rows as f64);
    Ok(MeanBaseline { mean })
}

fn row_cmp(m: &DMatrix<f64>, a: usize, b: usize) -> Ordering {
    (0..m.ncols())
        .map(|c| m[(a, c)].total_cmp(&m[(b, c)]))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Row indices in lexicographic row order.
pub(crate) fn sorted_order(m: &DMatrix<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| row_cmp(m, a, b));
    idx
}

pub fn canonical_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let order = sorted_order(m);
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(order[r], c)])
}

/// Sum of squared differences between canonically sorted rows.
pub fn sorted_sq_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(AttackError::DimMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok((canonical_rows(a) - canonical_rows(b)).norm_squared())
}

/// Per-element MSE of a predictor over paired `(raw, published)` samples.
pub fn paired_mse(t: &dyn Predictor, pairs: &[(DMatrix<f64>, DMatrix<f64>)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(AttackError::EmptySet);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (x, z) in pairs {
        total += sorted_sq_error(&t.predict(x), z)?;
        count += z.len();
    }
    Ok(total / count as f64)
}

/// MSE(T*) / MSE(T_μ) over paired evaluation samples.
pub fn mse_ratio(
    t_star: &dyn Predictor,
    t_mu: &dyn Predictor,
    pairs: &[(DMatrix<f64>, DMatrix<f64>)],
) -> Result<f64> {
    let num = paired_mse(t_star, pairs)?;
    let den = paired_mse(t_mu, pairs)?;
    if den == 0.0 {
        return Err(AttackError::DegenerateBaseline);
    }
    Ok(num / den)
}

/// ROC AUC by the Mann–Whitney statistic; tied scores count one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(AttackError::DimMismatch(format!(
            "{} scores, {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(AttackError::SingleClassData);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average 1-based ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += avg * idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

pub(crate) fn mean_pool(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows().max(1) as f64;
    (0..m.ncols()).map(|c| m.column(c).sum() / n).collect()
}
