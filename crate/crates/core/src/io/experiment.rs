//! Attack experiments on a labeled image set and a target encoder.

use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::IoError;
use crate::attack::{
    patchset_matrix, permutation_fit, plaintext_attack, raw_patches, train_mmd_attack,
    transfer_attack, AttackReport, AttackerModel, MmdConfig, PlaintextMethod, PlaintextOutcome,
    Predictor, TrainConfig, TransferConfig,
};
use crate::encoder::{Encoder, LinearEncoder};
use crate::tensor::Tensor;

/// The encoder under attack.
#[derive(Debug, Clone)]
pub enum Target {
    Linear(LinearEncoder),
    NeuraCrypt(Encoder),
}

impl Target {
    /// Published form of the `index`-th image; NeuraCrypt uses the default
    /// counter nonce.
    pub fn encode(&self, image: &Tensor, index: usize) -> Result<DMatrix<f64>, IoError> {
        let ps = match self {
            Target::Linear(l) => l.encode(image)?,
            Target::NeuraCrypt(e) => e.encode(image, e.nonce_for(index as u64))?,
        };
        Ok(patchset_matrix(&ps))
    }

    pub fn patch(&self) -> usize {
        match self {
            Target::Linear(l) => l.patch(),
            Target::NeuraCrypt(e) => e.arch().patch,
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            Target::Linear(l) => l.kernel().dims()[1],
            Target::NeuraCrypt(e) => e.arch().hidden,
        }
    }
}

/// Raw and published forms of one image set. Split into thirds: the
/// published shard, the attacker's own raw data, and held-out pairs used
/// only for scoring.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub raw: Vec<DMatrix<f64>>,
    pub published: Vec<DMatrix<f64>>,
    pub labels: Vec<bool>,
}

impl Scenario {
    pub fn new(images: &[Tensor], labels: &[bool], target: &Target) -> Result<Self, IoError> {
        if images.len() != labels.len() {
            return Err(IoError::Data("images and labels differ in length".into()));
        }
        if images.len() < 6 {
            return Err(IoError::Data("an experiment needs at least 6 images".into()));
        }
        let raw = images
            .iter()
            .map(|t| raw_patches(t, target.patch()))
            .collect::<Result<Vec<_>, _>>()?;
        let published = images
            .par_iter()
            .enumerate()
            .map(|(i, t)| target.encode(t, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scenario {
            raw,
            published,
            labels: labels.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn thirds(&self) -> (Range<usize>, Range<usize>, Range<usize>) {
        let n = self.len();
        let (a, b) = (n / 3, 2 * n / 3);
        (0..a, a..b, b..n)
    }

    fn pairs(&self, r: Range<usize>) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        r.map(|i| (self.raw[i].clone(), self.published[i].clone())).collect()
    }

    pub fn eval_pairs(&self) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        self.pairs(self.thirds().2)
    }

    /// Distribution matching: the attacker's raw third against the published third.
    pub fn mmd(&self, attacker: &mut AttackerModel, train: &TrainConfig, mmd: &MmdConfig) -> Result<AttackReport, IoError> {
        let (p, a, _) = self.thirds();
        Ok(train_mmd_attack(attacker, &self.raw[a], &self.published[p], &self.eval_pairs(), train, mmd)?)
    }

    /// Known plaintext: the attacker's third comes with its encodings.
    pub fn plaintext(&self, method: PlaintextMethod) -> Result<PlaintextOutcome, IoError> {
        let (_, a, _) = self.thirds();
        Ok(plaintext_attack(&self.pairs(a), &self.eval_pairs(), method)?)
    }

    /// Classifier fitted on T*(attacker's labeled raw third), scored on the
    /// published third.
    pub fn transfer(&self, t_star: &dyn Predictor, cfg: &TransferConfig) -> Result<AttackReport, IoError> {
        let (p, a, _) = self.thirds();
        let labeled: Vec<_> = a.map(|i| (self.raw[i].clone(), self.labels[i])).collect();
        let published: Vec<_> = p.map(|i| (self.published[i].clone(), self.labels[i])).collect();
        Ok(transfer_attack(t_star, &labeled, &published, cfg)?)
    }

    /// Fits T_π on the first `pi.len()` samples: published z_i against raw x_{π(i)}.
    pub fn permutation_fit(&self, pi: &[usize], attacker: &mut AttackerModel, train: &TrainConfig) -> Result<AttackReport, IoError> {
        let k = pi.len();
        if k > self.len() {
            return Err(IoError::Data(format!("π covers {k} samples, scenario has {}", self.len())));
        }
        Ok(permutation_fit(&self.published[..k], &self.raw[..k], pi, attacker, train)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::AttackerKind;
    use crate::io::{synth_generate, SyntheticConfig};

    fn scenario(n: usize) -> (Scenario, LinearEncoder) {
        let data = synth_generate(&SyntheticConfig::new(8, 8, n, 2)).unwrap();
        let labels: Vec<bool> = data.labels.iter().map(|&l| l == 1).collect();
        let lin = LinearEncoder::new(3, 1, 4, 5).unwrap();
        (Scenario::new(&data.images, &labels, &Target::Linear(lin.clone())).unwrap(), lin)
    }

    #[test]
    fn thirds_partition() {
        let (s, _) = scenario(10);
        let (p, a, e) = s.thirds();
        assert_eq!((p, a, e), (0..3, 3..6, 6..10));
        assert_eq!(s.eval_pairs().len(), 4);
    }

    #[test]
    fn plaintext_least_squares_on_linear_target() {
        let (s, lin) = scenario(30);
        let out = s.plaintext(PlaintextMethod::LeastSquares).unwrap();
        let w = out.model.params()[0].clone();
        let k = lin.kernel();
        let truth = DMatrix::from_row_iterator(k.dims()[0], k.dims()[1], k.data().iter().map(|&v| v as f64));
        assert!((w - &truth).norm() / truth.norm() < 1e-6);
        assert!(out.report.mse_ratio.unwrap() < 1e-6);
    }

    #[test]
    fn permutation_fit_bounds() {
        let (s, _) = scenario(12);
        let mut m = AttackerModel::random(AttackerKind::Linear, 16, 0, 5, 1);
        let cfg = TrainConfig { steps: 0, ..TrainConfig::default() };
        assert!(s.permutation_fit(&(0..13).collect::<Vec<_>>(), &mut m, &cfg).is_err());
        let r = s.permutation_fit(&[1, 0, 2, 3], &mut m, &cfg).unwrap();
        assert_eq!(r.mse_ratio, r.initial_mse_ratio);
    }
}
