//! Downstream-utility proxy: logistic regression on mean-pooled patches.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::PoolManifest;
use super::IoError;
use crate::attack::{roc_auc, AttackError, LogisticModel};
use crate::tensor::Tensor;

/// Learning rates tried on the validation split.
const LEARNING_RATES: [f64; 3] = [0.05, 0.5, 2.0];
const STEPS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityMetrics {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub learning_rate: f64,
    pub accuracy: f64,
    /// Absent when the test split holds one class only.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnerMetrics {
    pub owner_id: String,
    pub metrics: UtilityMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub owners: Vec<OwnerMetrics>,
    pub pooled: UtilityMetrics,
}

/// Column means of a `[rows, dim]` tensor.
pub fn features_of(t: &Tensor) -> Result<Vec<f64>, IoError> {
    let [rows, dim] = t.dims() else {
        return Err(IoError::ShapeMismatch(format!("expected [patches, dim], got {:?}", t.dims())));
    };
    let mut f = vec![0.0; *dim];
    for r in t.data().chunks(*dim) {
        for (a, &v) in f.iter_mut().zip(r) {
            *a += v as f64;
        }
    }
    let n = (*rows).max(1) as f64;
    f.iter_mut().for_each(|a| *a /= n);
    Ok(f)
}

/// Two-label vocabulary to booleans: the label sorting last is positive.
pub fn binary_labels(labels: &[String]) -> Result<Vec<bool>, IoError> {
    let vocab: std::collections::BTreeSet<&String> = labels.iter().collect();
    match vocab.len() {
        2 => {
            let pos = *vocab.iter().next_back().expect("two labels");
            Ok(labels.iter().map(|l| l == pos).collect())
        }
        1 => Err(AttackError::SingleClassData.into()),
        k => Err(IoError::Data(format!("utility proxy is binary, found {k} labels"))),
    }
}

/// Loads a pool manifest file through [`pool_shards`].
pub fn load_pool_shards(pool_path: &Path) -> Result<Vec<(String, Vec<Vec<f64>>, Vec<bool>)>, IoError> {
    let pool = PoolManifest::from_json(&std::fs::read_to_string(pool_path)?)?;
    pool_shards(&pool, pool_path.parent().unwrap_or(Path::new("")))
}

/// Mean-pooled features and binary labels per owner; file paths are
/// resolved against `base`.
pub fn pool_shards(pool: &PoolManifest, base: &Path) -> Result<Vec<(String, Vec<Vec<f64>>, Vec<bool>)>, IoError> {
    let all_labels: Vec<String> = pool.files.iter().map(|f| f.label.clone()).collect();
    let flags = binary_labels(&all_labels)?;
    let mut shards: Vec<(String, Vec<Vec<f64>>, Vec<bool>)> =
        pool.owners.iter().map(|o| (o.clone(), Vec::new(), Vec::new())).collect();
    for (entry, flag) in pool.files.iter().zip(flags) {
        let t = Tensor::from_nct_bytes(&std::fs::read(base.join(&entry.file))?)?;
        if t.dims() != [pool.num_patches, pool.hidden_dim] {
            return Err(IoError::DimMismatch(format!("{} has dims {:?}", entry.file, t.dims())));
        }
        let shard = shards
            .iter_mut()
            .find(|s| s.0 == entry.owner_id)
            .ok_or_else(|| IoError::Data(format!("unknown owner {}", entry.owner_id)))?;
        shard.1.push(features_of(&t)?);
        shard.2.push(flag);
    }
    Ok(shards)
}

/// Random 60/20/20 split; the learning rate is chosen on validation
/// accuracy, test accuracy and AUC are reported.
pub fn utility_proxy(features: &[Vec<f64>], labels: &[bool], seed: u64) -> Result<UtilityMetrics, IoError> {
    if features.len() != labels.len() {
        return Err(IoError::Data("features and labels differ in length".into()));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(AttackError::SingleClassData.into());
    }
    let n = labels.len();
    if n < 5 {
        return Err(IoError::Data(format!("{n} samples cannot be split 60/20/20")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * 0.6).round() as usize;
    let n_val = ((n as f64 * 0.2).round() as usize).max(1);
    let pick = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<bool>) {
        (ids.iter().map(|&i| features[i].clone()).collect(), ids.iter().map(|&i| labels[i]).collect())
    };
    let (tx, ty) = pick(&idx[..n_train]);
    let (vx, vy) = pick(&idx[n_train..n_train + n_val]);
    let (sx, sy) = pick(&idx[n_train + n_val..]);
    let mut best: Option<(f64, f64, LogisticModel)> = None;
    for lr in LEARNING_RATES {
        let m = LogisticModel::fit(&tx, &ty, STEPS, lr)?;
        let acc = m.accuracy(&vx, &vy);
        if best.as_ref().map_or(true, |(b, _, _)| acc > *b) {
            best = Some((acc, lr, m));
        }
    }
    let (_, learning_rate, model) = best.expect("at least one learning rate");
    let scores: Vec<f64> = sx.iter().map(|f| model.score(f)).collect();
    Ok(UtilityMetrics {
        n_train,
        n_val,
        n_test: sy.len(),
        learning_rate,
        accuracy: model.accuracy(&sx, &sy),
        auc: roc_auc(&scores, &sy).ok(),
    })
}

/// Per-owner models on each shard alone, plus one model on the union.
pub fn utility_pool(
    shards: &[(String, Vec<Vec<f64>>, Vec<bool>)],
    seed: u64,
) -> Result<UtilityReport, IoError> {
    if shards.is_empty() {
        return Err(IoError::Data("no shards".into()));
    }
    let owners = shards
        .iter()
        .map(|(id, f, l)| {
            Ok(OwnerMetrics {
                owner_id: id.clone(),
                metrics: utility_proxy(f, l, seed)?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    let all_f: Vec<Vec<f64>> = shards.iter().flat_map(|s| s.1.iter().cloned()).collect();
    let all_l: Vec<bool> = shards.iter().flat_map(|s| s.2.iter().copied()).collect();
    Ok(UtilityReport {
        owners,
        pooled: utility_proxy(&all_f, &all_l, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianStream;

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut g = GaussianStream::new(seed);
        let labels: Vec<bool> = (0..n).map(|i| i % 2 == 1).collect();
        let f = labels
            .iter()
            .map(|&l| (0..3).map(|_| g.next_gaussian() + if l { sep } else { 0.0 }).collect())
            .collect();
        (f, labels)
    }

    #[test]
    fn separable_and_shuffled() {
        let (f, l) = blobs(200, 6.0, 1);
        let m = utility_proxy(&f, &l, 0).unwrap();
        assert_eq!((m.n_train, m.n_val, m.n_test), (120, 40, 40));
        assert!(m.accuracy > 0.95, "{m:?}");
        assert!(m.auc.unwrap() > 0.95);

        // labels independent of features
        let (f, _) = blobs(400, 0.0, 2);
        let mut shuffled: Vec<bool> = (0..400).map(|i| i % 2 == 0).collect();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
        let m = utility_proxy(&f, &shuffled, 0).unwrap();
        assert!((m.auc.unwrap() - 0.5).abs() < 0.15, "{m:?}");
    }

    #[test]
    fn errors() {
        let (f, _) = blobs(10, 1.0, 3);
        assert!(matches!(
            utility_proxy(&f, &[true; 10], 0),
            Err(IoError::Attack(AttackError::SingleClassData))
        ));
        assert!(utility_proxy(&f[..3], &[true, false, true], 0).is_err());
        assert!(features_of(&Tensor::zeros(vec![2, 2, 2])).is_err());
        let t = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        let l = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(binary_labels(&l(&["b", "a", "b"])).unwrap(), vec![true, false, true]);
        assert!(binary_labels(&l(&["a", "a"])).is_err());
        assert!(binary_labels(&l(&["a", "b", "c"])).is_err());
        assert_eq!(features_of(&t).unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn pooled_report() {
        let (fa, la) = blobs(50, 5.0, 4);
        let (fb, lb) = blobs(60, 5.0, 5);
        let r = utility_pool(&[("a".into(), fa, la), ("b".into(), fb, lb)], 1).unwrap();
        assert_eq!(r.owners.len(), 2);
        assert_eq!(r.pooled.n_train + r.pooled.n_val + r.pooled.n_test, 110);
    }
}
