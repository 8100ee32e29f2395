use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logistic::LogisticModel;
use super::{mean_pool, roc_auc, AttackError, AttackReport, Predictor, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Fraction of the labeled raw data used to fit the classifier.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            steps: 500,
            learning_rate: 0.5,
            train_fraction: 0.75,
            seed: 0,
        }
    }
}

/// Fits a classifier on mean-pooled T*(x) for the attacker's own labeled raw
/// data, then applies it unchanged to the published encodings.
pub fn transfer_attack(
    t_star: &dyn Predictor,
    labeled_raw: &[(DMatrix<f64>, bool)],
    published: &[(DMatrix<f64>, bool)],
    cfg: &TransferConfig,
) -> Result<AttackReport> {
    if labeled_raw.len() < 4 || published.is_empty() {
        return Err(AttackError::EmptySet);
    }
    let mut idx: Vec<usize> = (0..labeled_raw.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let n_train = ((labeled_raw.len() as f64 * cfg.train_fraction).round() as usize)
        .clamp(1, labeled_raw.len() - 1);
    let feats: Vec<Vec<f64>> = labeled_raw.iter().map(|(x, _)| mean_pool(&t_star.predict(x))).collect();
    let split = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<bool>) {
        (ids.iter().map(|&i| feats[i].clone()).collect(), ids.iter().map(|&i| labeled_raw[i].1).collect())
    };
    let (train_x, train_y) = split(&idx[..n_train]);
    let (test_x, test_y) = split(&idx[n_train..]);
    let model = LogisticModel::fit(&train_x, &train_y, cfg.steps, cfg.learning_rate)?;
    let auc_star = roc_auc(&test_x.iter().map(|f| model.score(f)).collect::<Vec<_>>(), &test_y)?;
    let pub_scores: Vec<f64> = published.iter().map(|(z, _)| model.score(&mean_pool(z))).collect();
    if published[0].0.ncols() != model.dim() {
        return Err(AttackError::DimMismatch("T* output width differs from published width".into()));
    }
    let pub_labels: Vec<bool> = published.iter().map(|p| p.1).collect();
    let auc_z = roc_auc(&pub_scores, &pub_labels)?;
    Ok(AttackReport {
        attack: "transfer".into(),
        mse_ratio: None,
        attacker_mse: None,
        baseline_mse: None,
        initial_mse_ratio: None,
        epochs_run: cfg.steps,
        final_loss: None,
        transfer_auc_on_zstar: Some(auc_star),
        transfer_auc_on_z: Some(auc_z),
        rank_deficient: false,
    })
}
