use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{AttackError, Predictor, Result};
use crate::rng::GaussianStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackerKind {
    Linear,
    TwoLayer,
}

impl std::str::FromStr for AttackerKind {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(AttackerKind::Linear),
            "two-layer" => Ok(AttackerKind::TwoLayer),
            other => Err(AttackError::UnsupportedModel(other.into())),
        }
    }
}

/// Per-patch attacker T*, shared across patch positions.
///
/// Parameters: `[W]` for linear (in × out); `[W1, b1, W2, b2]` for two-layer,
/// biases stored as 1 × n rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackerModel {
    kind: AttackerKind,
    params: Vec<DMatrix<f64>>,
}

pub struct ForwardCache {
    pre: Option<DMatrix<f64>>,
    hidden: Option<DMatrix<f64>>,
    out: DMatrix<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &DMatrix<f64> {
        &self.out
    }
}

fn add_row(m: &mut DMatrix<f64>, b: &DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        row += b.row(0);
    }
}

fn col_sums(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(1, m.ncols(), |_, c| m.column(c).sum())
}

impl AttackerModel {
    pub fn linear(w: DMatrix<f64>) -> Self {
        AttackerModel {
            kind: AttackerKind::Linear,
            params: vec![w],
        }
    }

    pub fn two_layer(w1: DMatrix<f64>, b1: DMatrix<f64>, w2: DMatrix<f64>, b2: DMatrix<f64>) -> Result<Self> {
        if b1.shape() != (1, w1.ncols()) || w2.nrows() != w1.ncols() || b2.shape() != (1, w2.ncols()) {
            return Err(AttackError::DimMismatch("two-layer parameter shapes".into()));
        }
        Ok(AttackerModel {
            kind: AttackerKind::TwoLayer,
            params: vec![w1, b1, w2, b2],
        })
    }

    /// He-scaled Gaussian init, zero biases. `width` is ignored for linear.
    pub fn random(kind: AttackerKind, in_dim: usize, width: usize, out_dim: usize, seed: u64) -> Self {
        let mut g = GaussianStream::new(seed);
        let mut draw = |r: usize, c: usize, scale: f64| DMatrix::from_fn(r, c, |_, _| g.next_gaussian() * scale);
        match kind {
            AttackerKind::Linear => Self::linear(draw(in_dim, out_dim, (1.0 / in_dim as f64).sqrt())),
            AttackerKind::TwoLayer => AttackerModel {
                kind,
                params: vec![
                    draw(in_dim, width, (2.0 / in_dim as f64).sqrt()),
                    DMatrix::zeros(1, width),
                    draw(width, out_dim, (1.0 / width as f64).sqrt()),
                    DMatrix::zeros(1, out_dim),
                ],
            },
        }
    }

    pub fn kind(&self) -> AttackerKind {
        self.kind
    }

    pub fn params(&self) -> &[DMatrix<f64>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.params
    }

    pub fn in_dim(&self) -> usize {
        self.params[0].nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.params[self.params.len() - 1].ncols()
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    pub fn forward_cached(&self, x: &DMatrix<f64>) -> Result<ForwardCache> {
        if x.ncols() != self.in_dim() {
            return Err(AttackError::DimMismatch(format!(
                "input has {} columns, attacker expects {}",
                x.ncols(),
                self.in_dim()
            )));
        }
        Ok(match self.kind {
            AttackerKind::Linear => ForwardCache {
                pre: None,
                hidden: None,
                out: x * &self.params[0],
            },
            AttackerKind::TwoLayer => {
                let mut pre = x * &self.params[0];
                add_row(&mut pre, &self.params[1]);
                let hidden = pre.map(|v| v.max(0.0));
                let mut out = &hidden * &self.params[2];
                add_row(&mut out, &self.params[3]);
                ForwardCache {
                    pre: Some(pre),
                    hidden: Some(hidden),
                    out,
                }
            }
        })
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.forward_cached(x)?.out)
    }

    /// Parameter gradients given ∂L/∂output.
    pub fn backward(&self, x: &DMatrix<f64>, cache: &ForwardCache, dout: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        match self.kind {
            AttackerKind::Linear => vec![x.transpose() * dout],
            AttackerKind::TwoLayer => {
                let pre = cache.pre.as_ref().expect("two-layer cache");
                let hidden = cache.hidden.as_ref().expect("two-layer cache");
                let dw2 = hidden.transpose() * dout;
                let db2 = col_sums(dout);
                let mut dpre = dout * self.params[2].transpose();
                dpre.zip_apply(pre, |d, p| {
                    if p <= 0.0 {
                        *d = 0.0
                    }
                });
                let dw1 = x.transpose() * &dpre;
                let db1 = col_sums(&dpre);
                vec![dw1, db1, dw2, db2]
            }
        }
    }

    /// params += alpha · delta
    pub fn axpy(&mut self, alpha: f64, delta: &[DMatrix<f64>]) {
        for (p, d) in self.params.iter_mut().zip(delta) {
            *p += d * alpha;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.iter().all(|v| v.is_finite()))
    }
}

impl Predictor for AttackerModel {
    fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward(x).expect("input width matches attacker")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_kinds() {
        let m = AttackerModel::random(AttackerKind::TwoLayer, 6, 10, 4, 1);
        assert_eq!((m.in_dim(), m.out_dim()), (6, 4));
        assert_eq!(m.num_params(), 6 * 10 + 10 + 10 * 4 + 4);
        let x = DMatrix::from_element(3, 6, 0.5);
        assert_eq!(m.forward(&x).unwrap().shape(), (3, 4));
        assert!(m.forward(&DMatrix::zeros(3, 5)).is_err());
        assert_eq!("two-layer".parse::<AttackerKind>().unwrap(), AttackerKind::TwoLayer);
        assert!(matches!("conv".parse::<AttackerKind>(), Err(AttackError::UnsupportedModel(_))));
    }

    #[test]
    fn two_layer_forward_by_hand() {
        let m = AttackerModel::two_layer(
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DMatrix::from_row_slice(1, 2, &[0.5, 0.5]),
            DMatrix::from_row_slice(2, 1, &[2.0, 3.0]),
            DMatrix::from_row_slice(1, 1, &[-1.0]),
        )
        .unwrap();
        // x = 2: pre (2.5, -1.5), relu (2.5, 0), out 5 − 1 = 4
        let out = m.forward(&DMatrix::from_row_slice(1, 1, &[2.0])).unwrap();
        assert_eq!(out[(0, 0)], 4.0);
    }
}
