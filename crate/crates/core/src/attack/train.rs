use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mmd::{mmd2, mmd2_output_gradient, MmdConfig};
use super::model::AttackerModel;
use super::{mean_baseline, mse_ratio, paired_mse, AttackError, AttackReport, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Heavy-ball momentum 0.9 when set.
    pub momentum: bool,
    /// Samples per side per step.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 500,
            learning_rate: 0.05,
            momentum: true,
            batch_size: 8,
            seed: 0,
        }
    }
}

pub const MOMENTUM: f64 = 0.9;

pub(crate) fn stack(rows: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = rows.iter().map(|m| m.nrows()).sum();
    let d = rows.first().map_or(0, |m| m.ncols());
    let mut out = DMatrix::zeros(n, d);
    let mut r0 = 0;
    for m in rows {
        out.view_mut((r0, 0), (m.nrows(), d)).copy_from(*m);
        r0 += m.nrows();
    }
    out
}

/// Gradient descent state shared by the training loops.
pub(crate) struct Optimizer {
    lr: f64,
    velocity: Option<Vec<DMatrix<f64>>>,
}

impl Optimizer {
    pub(crate) fn new(cfg: &TrainConfig, model: &AttackerModel) -> Self {
        Optimizer {
            lr: cfg.learning_rate,
            velocity: cfg
                .momentum
                .then(|| model.params().iter().map(|p| DMatrix::zeros(p.nrows(), p.ncols())).collect()),
        }
    }

    pub(crate) fn step(&mut self, model: &mut AttackerModel, grads: &[DMatrix<f64>]) {
        match &mut self.velocity {
            None => model.axpy(-self.lr, grads),
            Some(v) => {
                for (vi, g) in v.iter_mut().zip(grads) {
                    *vi *= MOMENTUM;
                    *vi -= g * self.lr;
                }
                model.axpy(1.0, v);
            }
        }
    }
}

pub(crate) fn check_train(cfg: &TrainConfig) -> Result<()> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(AttackError::InvalidConfig("learning rate must be positive".into()));
    }
    if cfg.batch_size == 0 {
        return Err(AttackError::InvalidConfig("batch size must be positive".into()));
    }
    Ok(())
}

/// Trains `attacker` so that its outputs on raw samples `x` match the
/// distribution of published samples `z` under MMD. The two sides are never
/// paired; `eval` pairs are used only for scoring.
pub fn train_mmd_attack(
    attacker: &mut AttackerModel,
    x: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    eval: &[(DMatrix<f64>, DMatrix<f64>)],
    train: &TrainConfig,
    mmd: &MmdConfig,
) -> Result<AttackReport> {
    check_train(train)?;
    if x.is_empty() || z.is_empty() {
        return Err(AttackError::EmptySet);
    }
    let t_mu = mean_baseline(z)?;
    let initial = mse_ratio(&*attacker, &t_mu, eval)?;
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut opt = Optimizer::new(train, attacker);
    let bx = train.batch_size.min(x.len());
    let bz = train.batch_size.min(z.len());
    let mut cfg: Option<MmdConfig> = None;
    let mut final_loss = None;
    for step in 0..train.steps {
        let xi: Vec<&DMatrix<f64>> = sample(&mut rng, x.len(), bx).iter().map(|i| &x[i]).collect();
        let zi: Vec<&DMatrix<f64>> = sample(&mut rng, z.len(), bz).iter().map(|i| &z[i]).collect();
        let xb = stack(&xi);
        let zb = stack(&zi);
        let cache = attacker.forward_cached(&xb)?;
        let out = cache.output();
        if cfg.is_none() {
            cfg = Some(mmd.resolved(&zb, out)?);
        }
        let c = cfg.as_ref().expect("resolved above");
        let loss = mmd2(&zb, out, c)?;
        if !loss.is_finite() {
            return Err(AttackError::Divergence(step));
        }
        let g = mmd2_output_gradient(&zb, out, c)?;
        let grads = attacker.backward(&xb, &cache, &g);
        opt.step(attacker, &grads);
        if !attacker.is_finite() {
            return Err(AttackError::Divergence(step));
        }
        final_loss = Some(loss);
    }
    let attacker_mse = paired_mse(&*attacker, eval)?;
    let baseline_mse = paired_mse(&t_mu, eval)?;
    Ok(AttackReport {
        attack: "mmd".into(),
        mse_ratio: Some(attacker_mse / baseline_mse),
        attacker_mse: Some(attacker_mse),
        baseline_mse: Some(baseline_mse),
        initial_mse_ratio: Some(initial),
        epochs_run: train.steps,
        final_loss,
        transfer_auc_on_zstar: None,
        transfer_auc_on_z: None,
        rank_deficient: false,
    })
}
