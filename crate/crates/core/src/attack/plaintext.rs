use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::AttackerModel;
use super::train::{check_train, stack, Optimizer, TrainConfig};
use super::{mean_baseline, paired_mse, sorted_order, AttackError, AttackReport, Result};

pub enum PlaintextMethod {
    /// Linear, unshuffled targets: shared least-squares map over all patches.
    LeastSquares,
    /// Anything else: gradient descent on sorted-matching MSE.
    GradientDescent { attacker: AttackerModel, train: TrainConfig },
}

#[derive(Debug, Clone)]
pub struct PlaintextOutcome {
    pub model: AttackerModel,
    pub report: AttackReport,
}

fn check_pairs(pairs: &[(DMatrix<f64>, DMatrix<f64>)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(AttackError::EmptySet);
    }
    let (xd, zd) = (pairs[0].0.ncols(), pairs[0].1.ncols());
    for (x, z) in pairs {
        if x.ncols() != xd || z.ncols() != zd || x.nrows() != z.nrows() {
            return Err(AttackError::DimMismatch("inconsistent pair shapes".into()));
        }
    }
    Ok(())
}

/// Least squares for W in X·W ≈ Z: normal equations when X has full column
/// rank, SVD pseudo-inverse otherwise. Returns (W, rank_deficient).
pub(crate) fn least_squares(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    let svd = x.clone().svd(false, false);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = smax * x.nrows().max(x.ncols()) as f64 * f64::EPSILON;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    if rank == x.ncols() {
        let xtx = x.transpose() * x;
        let xtz = x.transpose() * z;
        if let Some(chol) = xtx.cholesky() {
            return Ok((chol.solve(&xtz), false));
        }
    }
    let svd = x.clone().svd(true, true);
    let w = svd
        .solve(z, tol)
        .map_err(|e| AttackError::InvalidConfig(format!("pseudo-inverse failed: {e}")))?;
    Ok((w, true))
}

/// Sorted-matching squared error and its gradient with respect to `out`.
fn matched_residual(out: &DMatrix<f64>, target: &DMatrix<f64>) -> DMatrix<f64> {
    let ro = sorted_order(out);
    let rt = sorted_order(target);
    let mut resid = DMatrix::zeros(out.nrows(), out.ncols());
    for (&o, &t) in ro.iter().zip(&rt) {
        resid.row_mut(o).copy_from(&(out.row(o) - target.row(t)));
    }
    resid
}

fn fit_matched(
    attacker: &mut AttackerModel,
    inputs: &[&DMatrix<f64>],
    targets: &[&DMatrix<f64>],
    train: &TrainConfig,
) -> Result<Option<f64>> {
    check_train(train)?;
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut opt = Optimizer::new(train, attacker);
    let b = train.batch_size.min(inputs.len());
    let mut last = None;
    for step in 0..train.steps {
        let idx = sample(&mut rng, inputs.len(), b);
        let xs: Vec<&DMatrix<f64>> = idx.iter().map(|i| inputs[i]).collect();
        let xb = stack(&xs);
        let cache = attacker.forward_cached(&xb)?;
        let out = cache.output();
        // residuals matched within each sample
        let mut resid = DMatrix::zeros(out.nrows(), out.ncols());
        let mut r0 = 0;
        for i in idx.iter() {
            let n = targets[i].nrows();
            let o = out.rows(r0, n).into_owned();
            resid.rows_mut(r0, n).copy_from(&matched_residual(&o, targets[i]));
            r0 += n;
        }
        let count = resid.len() as f64;
        let loss = resid.norm_squared() / count;
        if !loss.is_finite() {
            return Err(AttackError::Divergence(step));
        }
        let grads = attacker.backward(&xb, &cache, &(resid * (2.0 / count)));
        opt.step(attacker, &grads);
        if !attacker.is_finite() {
            return Err(AttackError::Divergence(step));
        }
        last = Some(loss);
    }
    Ok(last)
}

/// Known-plaintext attack from parallel `(raw, published)` pairs. Scored on
/// `eval` pairs against the mean of the training ciphertexts.
pub fn plaintext_attack(
    pairs: &[(DMatrix<f64>, DMatrix<f64>)],
    eval: &[(DMatrix<f64>, DMatrix<f64>)],
    method: PlaintextMethod,
) -> Result<PlaintextOutcome> {
    check_pairs(pairs)?;
    let published: Vec<DMatrix<f64>> = pairs.iter().map(|p| p.1.clone()).collect();
    let t_mu = mean_baseline(&published)?;
    let (model, rank_deficient, steps, final_loss) = match method {
        PlaintextMethod::LeastSquares => {
            let xs: Vec<&DMatrix<f64>> = pairs.iter().map(|p| &p.0).collect();
            let zs: Vec<&DMatrix<f64>> = pairs.iter().map(|p| &p.1).collect();
            let (w, deficient) = least_squares(&stack(&xs), &stack(&zs))?;
            (AttackerModel::linear(w), deficient, 0, None)
        }
        PlaintextMethod::GradientDescent { mut attacker, train } => {
            let xs: Vec<&DMatrix<f64>> = pairs.iter().map(|p| &p.0).collect();
            let zs: Vec<&DMatrix<f64>> = pairs.iter().map(|p| &p.1).collect();
            let loss = fit_matched(&mut attacker, &xs, &zs, &train)?;
            (attacker, false, train.steps, loss)
        }
    };
    let attacker_mse = paired_mse(&model, eval)?;
    let baseline_mse = paired_mse(&t_mu, eval)?;
    if baseline_mse == 0.0 {
        return Err(AttackError::DegenerateBaseline);
    }
    Ok(PlaintextOutcome {
        report: AttackReport {
            attack: "plaintext".into(),
            mse_ratio: Some(attacker_mse / baseline_mse),
            attacker_mse: Some(attacker_mse),
            baseline_mse: Some(baseline_mse),
            initial_mse_ratio: None,
            epochs_run: steps,
            final_loss,
            transfer_auc_on_zstar: None,
            transfer_auc_on_z: None,
            rank_deficient,
        },
        model,
    })
}

/// Fits T_π so that T_π(x_{π(i)}) matches the target encoding z_i.
/// `pi[i]` is the index of the raw sample paired with `z[i]`.
pub fn permutation_fit(
    z: &[DMatrix<f64>],
    x: &[DMatrix<f64>],
    pi: &[usize],
    attacker: &mut AttackerModel,
    train: &TrainConfig,
) -> Result<AttackReport> {
    if z.len() != x.len() || pi.len() != x.len() {
        return Err(AttackError::DimMismatch("z, x and π must have equal length".into()));
    }
    let mut seen = vec![false; pi.len()];
    for &p in pi {
        if p >= pi.len() || std::mem::replace(&mut seen[p], true) {
            return Err(AttackError::InvalidConfig("π is not a permutation".into()));
        }
    }
    let t_mu = mean_baseline(z)?;
    let pairs: Vec<(DMatrix<f64>, DMatrix<f64>)> =
        pi.iter().zip(z).map(|(&p, zi)| (x[p].clone(), zi.clone())).collect();
    let baseline_mse = paired_mse(&t_mu, &pairs)?;
    if baseline_mse == 0.0 {
        return Err(AttackError::DegenerateBaseline);
    }
    let initial = paired_mse(&*attacker, &pairs)? / baseline_mse;
    let inputs: Vec<&DMatrix<f64>> = pairs.iter().map(|p| &p.0).collect();
    let targets: Vec<&DMatrix<f64>> = pairs.iter().map(|p| &p.1).collect();
    let final_loss = fit_matched(attacker, &inputs, &targets, train)?;
    let attacker_mse = paired_mse(&*attacker, &pairs)?;
    Ok(AttackReport {
        attack: "permutation-fit".into(),
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
