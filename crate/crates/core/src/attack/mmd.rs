//! Multi-kernel RBF MMD and its gradients.
//!
//! κ(u, v) = Σ_n exp(−‖u − v‖² / (2σ_n)), with σ_n = base · multiplier_n.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::AttackerModel;
use super::{AttackError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// Median of pooled pairwise squared distances.
    MedianHeuristic,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdConfig {
    pub bandwidth_multipliers: Vec<f64>,
    pub base_bandwidth: Bandwidth,
}

impl Default for MmdConfig {
    fn default() -> Self {
        MmdConfig {
            bandwidth_multipliers: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            base_bandwidth: Bandwidth::MedianHeuristic,
        }
    }
}

impl MmdConfig {
    pub fn single(sigma: f64) -> Self {
        MmdConfig {
            bandwidth_multipliers: vec![1.0],
            base_bandwidth: Bandwidth::Fixed(sigma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidth_multipliers.is_empty() {
            return Err(AttackError::InvalidConfig("no kernels".into()));
        }
        if self.bandwidth_multipliers.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(AttackError::InvalidConfig("multipliers must be positive".into()));
        }
        if let Bandwidth::Fixed(s) = self.base_bandwidth {
            if !(s > 0.0 && s.is_finite()) {
                return Err(AttackError::InvalidConfig("bandwidth must be positive".into()));
            }
        }
        Ok(())
    }

    /// The σ_n for this pair of sets.
    pub fn sigmas(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.validate()?;
        let base = match self.base_bandwidth {
            Bandwidth::Fixed(s) => s,
            Bandwidth::MedianHeuristic => median_heuristic(a, b),
        };
        Ok(self.bandwidth_multipliers.iter().map(|m| m * base).collect())
    }

    /// Copy with the median heuristic replaced by its value on `(a, b)`.
    pub fn resolved(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<MmdConfig> {
        self.validate()?;
        let base = match self.base_bandwidth {
            Bandwidth::Fixed(s) => s,
            Bandwidth::MedianHeuristic => median_heuristic(a, b),
        };
        Ok(MmdConfig {
            bandwidth_multipliers: self.bandwidth_multipliers.clone(),
            base_bandwidth: Bandwidth::Fixed(base),
        })
    }
}

fn sq_dist(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    (0..a.ncols()).map(|c| (a[(i, c)] - b[(j, c)]).powi(2)).sum()
}

/// Median pairwise squared distance over the rows of `a` and `b` together;
/// falls back to the mean, then to 1, when the median is degenerate.
pub fn median_heuristic(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let pooled = DMatrix::from_fn(a.nrows() + b.nrows(), a.ncols(), |r, c| {
        if r < a.nrows() {
            a[(r, c)]
        } else {
            b[(r - a.nrows(), c)]
        }
    });
    let n = pooled.nrows();
    let mut d: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(sq_dist(&pooled, i, &pooled, j));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let median = if d.len() % 2 == 1 { d[mid] } else { 0.5 * (d[mid - 1] + d[mid]) };
    if median > 1e-12 {
        return median;
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    if mean > 1e-12 {
        mean
    } else {
        1.0
    }
}

fn kernel_value(d2: f64, sigmas: &[f64]) -> f64 {
    sigmas.iter().map(|s| (-d2 / (2.0 * s)).exp()).sum()
}

/// κ(z_i, z_j) for explicit vectors. A median-heuristic base is taken over
/// the two vectors alone.
pub fn rbf_kernel(zi: &[f64], zj: &[f64], config: &MmdConfig) -> Result<f64> {
    if zi.len() != zj.len() {
        return Err(AttackError::DimMismatch(format!("{} vs {}", zi.len(), zj.len())));
    }
    let a = DMatrix::from_row_slice(1, zi.len(), zi);
    let b = DMatrix::from_row_slice(1, zj.len(), zj);
    let sigmas = config.sigmas(&a, &b)?;
    Ok(kernel_value(sq_dist(&a, 0, &b, 0), &sigmas))
}

fn kernel_mean(a: &DMatrix<f64>, b: &DMatrix<f64>, sigmas: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            total += kernel_value(sq_dist(a, i, b, j), sigmas);
        }
    }
    total / (a.nrows() * b.nrows()) as f64
}

fn check_sets(z: &DMatrix<f64>, zs: &DMatrix<f64>) -> Result<()> {
    if z.nrows() == 0 || zs.nrows() == 0 {
        return Err(AttackError::EmptySet);
    }
    if z.ncols() != zs.ncols() {
        return Err(AttackError::DimMismatch(format!("{} vs {}", z.ncols(), zs.ncols())));
    }
    Ok(())
}

/// Biased V-statistic MMD² between row sets, diagonals included.
pub fn mmd2(z: &DMatrix<f64>, zs: &DMatrix<f64>, config: &MmdConfig) -> Result<f64> {
    check_sets(z, zs)?;
    let sigmas = config.sigmas(z, zs)?;
    Ok(kernel_mean(z, z, &sigmas) + kernel_mean(zs, zs, &sigmas)
        - 2.0 * kernel_mean(zs, z, &sigmas))
}

/// ∂ mmd2(z, zs) / ∂ zs, with the bandwidth held fixed.
pub fn mmd2_output_gradient(z: &DMatrix<f64>, zs: &DMatrix<f64>, config: &MmdConfig) -> Result<DMatrix<f64>> {
    check_sets(z, zs)?;
    let sigmas = config.sigmas(z, zs)?;
    let (m, n, d) = (zs.nrows(), z.nrows(), zs.ncols());
    // Σ_s k_s(u, v) / σ_s
    let weight = |d2: f64| -> f64 { sigmas.iter().map(|s| (-d2 / (2.0 * s)).exp() / s).sum() };
    let mut g = DMatrix::zeros(m, d);
    let self_scale = 2.0 / (m * m) as f64;
    let cross_scale = 2.0 / (m * n) as f64;
    for i in 0..m {
        for l in 0..m {
            if l == i {
                continue;
            }
            let c = weight(sq_dist(zs, i, zs, l)) * self_scale;
            for k in 0..d {
                g[(i, k)] -= c * (zs[(i, k)] - zs[(l, k)]);
            }
        }
        for j in 0..n {
            let e = weight(sq_dist(zs, i, z, j)) * cross_scale;
            for k in 0..d {
                g[(i, k)] += e * (zs[(i, k)] - z[(j, k)]);
            }
        }
    }
    Ok(g)
}

/// Gradient of mmd2(z, attacker(x)) with respect to the attacker's parameters.
/// A median-heuristic bandwidth is resolved on the current outputs and then
/// treated as a constant.
pub fn mmd2_gradient(
    attacker: &AttackerModel,
    x: &DMatrix<f64>,
    z: &DMatrix<f64>,
    config: &MmdConfig,
) -> Result<(f64, Vec<DMatrix<f64>>)> {
    let cache = attacker.forward_cached(x)?;
    let out = cache.output();
    let cfg = config.resolved(z, out)?;
    let loss = mmd2(z, out, &cfg)?;
    let g = mmd2_output_gradient(z, out, &cfg)?;
    Ok((loss, attacker.backward(x, &cache, &g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::AttackerKind;
    use crate::rng::GaussianStream;

    fn gaussian(rows: usize, cols: usize, g: &mut GaussianStream) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| g.next_gaussian())
    }

    #[test]
    fn kernel_values() {
        let five = MmdConfig {
            bandwidth_multipliers: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            base_bandwidth: Bandwidth::Fixed(1.0),
        };
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], &five).unwrap(), 5.0);
        let k = rbf_kernel(&[0.0, 0.0], &[1.0, 1.0], &MmdConfig::single(1.0)).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-15);
        assert!(rbf_kernel(&[0.0], &[1e6], &MmdConfig::single(1.0)).unwrap() < 1e-300);
        assert!(rbf_kernel(&[0.0], &[1.0, 2.0], &five).is_err());
    }

    #[test]
    fn mmd_two_points() {
        let a = DMatrix::from_row_slice(1, 1, &[0.0]);
        let b = DMatrix::from_row_slice(1, 1, &[2.0]);
        let v = mmd2(&a, &b, &MmdConfig::single(1.0)).unwrap();
        assert!((v - 2.0 * (1.0 - (-2.0f64).exp())).abs() < 1e-12);
        assert_eq!(mmd2(&a, &b, &MmdConfig::single(1.0)), mmd2(&b, &a, &MmdConfig::single(1.0)));
        assert_eq!(mmd2(&DMatrix::zeros(0, 1), &b, &MmdConfig::default()), Err(AttackError::EmptySet));
    }

    #[test]
    fn mmd_self_is_zero() {
        let mut g = GaussianStream::new(5);
        let z = gaussian(12, 4, &mut g);
        assert_eq!(mmd2(&z, &z, &MmdConfig::default()).unwrap(), 0.0);
        let w = gaussian(9, 4, &mut g);
        assert!(mmd2(&z, &w, &MmdConfig::default()).unwrap() >= -1e-9);
    }

    #[test]
    fn one_dimensional_linear_gradient_by_hand() {
        // single points: mmd2 = 2 − 2·exp(−(w·x − z)²/(2σ)),
        // d/dw = 2·exp(·)·(w·x − z)·x / σ
        let (w, x, z, sigma) = (0.7, 1.3, 2.0, 0.8);
        let model = AttackerModel::linear(DMatrix::from_row_slice(1, 1, &[w]));
        let xm = DMatrix::from_row_slice(1, 1, &[x]);
        let zm = DMatrix::from_row_slice(1, 1, &[z]);
        let (_, grads) = mmd2_gradient(&model, &xm, &zm, &MmdConfig::single(sigma)).unwrap();
        let r = w * x - z;
        let expect = 2.0 * (-r * r / (2.0 * sigma)).exp() * r * x / sigma;
        assert!((grads[0][(0, 0)] - expect).abs() < 1e-14);
    }

    #[test]
    fn output_gradient_matches_finite_differences() {
        let mut g = GaussianStream::new(21);
        let z = gaussian(5, 3, &mut g);
        let zs = gaussian(4, 3, &mut g);
        let cfg = MmdConfig::default().resolved(&z, &zs).unwrap();
        let an = mmd2_output_gradient(&z, &zs, &cfg).unwrap();
        let h = 1e-5;
        for i in 0..4 {
            for k in 0..3 {
                let mut p = zs.clone();
                p[(i, k)] += h;
                let mut m = zs.clone();
                m[(i, k)] -= h;
                let fd = (mmd2(&z, &p, &cfg).unwrap() - mmd2(&z, &m, &cfg).unwrap()) / (2.0 * h);
                assert!((fd - an[(i, k)]).abs() < 1e-8, "{fd} vs {}", an[(i, k)]);
            }
        }
    }

    fn loss_at(model: &AttackerModel, x: &DMatrix<f64>, z: &DMatrix<f64>, cfg: &MmdConfig) -> f64 {
        mmd2(z, &model.forward(x).unwrap(), cfg).unwrap()
    }

    fn parameter_gradient_check(kind: AttackerKind) {
        let h = 1e-4;
        for case in 0..50u64 {
            let mut g = GaussianStream::new(100 + case);
            let x = gaussian(6, 8, &mut g);
            let z = gaussian(5, 8, &mut g);
            let mut model = AttackerModel::random(kind, 8, 6, 8, 200 + case);
            // bandwidth pinned on the starting outputs so the loss is a
            // fixed function of the parameters
            let cfg = MmdConfig::default().resolved(&z, &model.forward(&x).unwrap()).unwrap();
            let (_, an) = mmd2_gradient(&model, &x, &z, &cfg).unwrap();
            let (mut diff, mut norm) = (0.0, 0.0);
            for p in 0..model.params().len() {
                for e in 0..model.params()[p].len() {
                    let v = model.params()[p][e];
                    model.params_mut()[p][e] = v + h;
                    let up = loss_at(&model, &x, &z, &cfg);
                    model.params_mut()[p][e] = v - h;
                    let down = loss_at(&model, &x, &z, &cfg);
                    model.params_mut()[p][e] = v;
                    let fd = (up - down) / (2.0 * h);
                    diff += (an[p][e] - fd).powi(2);
                    norm += fd * fd;
                }
            }
            let rel = diff.sqrt() / norm.sqrt();
            assert!(rel < 1e-4, "{kind:?} case {case}: relative error {rel}");
        }
    }

    #[test]
    fn linear_parameter_gradient_matches_finite_differences() {
        parameter_gradient_check(AttackerKind::Linear);
    }

    #[test]
    fn two_layer_parameter_gradient_matches_finite_differences() {
        parameter_gradient_check(AttackerKind::TwoLayer);
    }

    #[test]
    fn gradient_check_holds_for_other_multiplier_sets() {
        let mut g = GaussianStream::new(9);
        let x = gaussian(4, 8, &mut g);
        let z = gaussian(4, 8, &mut g);
        let model = AttackerModel::random(AttackerKind::TwoLayer, 8, 5, 8, 1);
        for mults in [vec![1.0], vec![0.1, 3.0], vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0]] {
            let cfg = MmdConfig {
                bandwidth_multipliers: mults,
                base_bandwidth: Bandwidth::MedianHeuristic,
            }
            .resolved(&z, &model.forward(&x).unwrap())
            .unwrap();
            let (_, an) = mmd2_gradient(&model, &x, &z, &cfg).unwrap();
            let h = 1e-4;
            let mut m = model.clone();
            let v = m.params()[2][(1, 3)];
            m.params_mut()[2][(1, 3)] = v + h;
            let up = loss_at(&m, &x, &z, &cfg);
            m.params_mut()[2][(1, 3)] = v - h;
            let down = loss_at(&m, &x, &z, &cfg);
            let fd = (up - down) / (2.0 * h);
            assert!((an[2][(1, 3)] - fd).abs() <= 1e-4 * fd.abs().max(1e-8), "{fd} vs {}", an[2][(1, 3)]);
        }
    }
}
