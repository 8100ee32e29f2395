use super::{AttackError, Result};

/// Binary logistic regression on standardized features, fitted by full-batch
/// gradient descent on mean cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn fit(features: &[Vec<f64>], labels: &[bool], steps: usize, learning_rate: f64) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(AttackError::DimMismatch("features and labels differ in length".into()));
        }
        if features.is_empty() {
            return Err(AttackError::EmptySet);
        }
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            return Err(AttackError::SingleClassData);
        }
        let d = features[0].len();
        if features.iter().any(|f| f.len() != d) {
            return Err(AttackError::DimMismatch("ragged features".into()));
        }
        let n = features.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| features.iter().map(|f| f[j]).sum::<f64>() / n).collect();
        let scale: Vec<f64> = (0..d)
            .map(|j| {
                let v = features.iter().map(|f| (f[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if v.sqrt() > 1e-12 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut model = LogisticModel {
            mean,
            scale,
            weights: vec![0.0; d],
            bias: 0.0,
        };
        let xs: Vec<Vec<f64>> = features.iter().map(|f| model.standardize(f)).collect();
        for _ in 0..steps {
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for (x, &y) in xs.iter().zip(labels) {
                let p = sigmoid(model.logit_std(x));
                let r = p - if y { 1.0 } else { 0.0 };
                for (g, v) in gw.iter_mut().zip(x) {
                    *g += r * v;
                }
                gb += r;
            }
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= learning_rate * g / n;
            }
            model.bias -= learning_rate * gb / n;
        }
        Ok(model)
    }

    fn standardize(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    fn logit_std(&self, x: &[f64]) -> f64 {
        self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, f: &[f64]) -> f64 {
        self.logit_std(&self.standardize(f))
    }

    pub fn predict(&self, f: &[f64]) -> bool {
        self.score(f) > 0.0
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[bool]) -> f64 {
        let hits = features
            .iter()
            .zip(labels)
            .filter(|(f, &l)| self.predict(f) == l)
            .count();
        hits as f64 / features.len().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_one_dimensional() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let ys: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let m = LogisticModel::fit(&xs, &ys, 500, 1.0).unwrap();
        assert_eq!(m.accuracy(&xs, &ys), 1.0);
        assert!(m.score(&[19.0]) > m.score(&[0.0]));
        assert_eq!(LogisticModel::fit(&xs, &[true; 20], 10, 1.0), Err(AttackError::SingleClassData));
    }
}
