use std::cmp::Ordering;

use crate::tensor::Tensor;

/// An encoded sample: patch vectors of equal length whose order carries no
/// meaning. Compare with [`PatchSet::multiset_eq`], not `==`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    dim: usize,
    data: Vec<f32>,
}

fn lex(a: &[f32], b: &[f32]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl PatchSet {
    /// `data` holds `data.len() / dim` patches back to back.
    pub fn new(dim: usize, data: Vec<f32>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "ragged patch data");
        PatchSet { dim, data }
    }

    /// From a `[num_patches, dim]` or `[grid_h, grid_w, dim]` tensor.
    pub fn from_tensor(t: Tensor) -> Self {
        let dim = *t.dims().last().expect("tensor has dims");
        PatchSet::new(dim, t.into_data())
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.len(), self.dim], self.data.clone()).expect("shape")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn patch(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    /// New set whose i-th patch is `self.patch(order[i])`.
    pub fn reordered(&self, order: &[usize]) -> PatchSet {
        let mut data = Vec::with_capacity(self.data.len());
        for &j in order {
            data.extend_from_slice(self.patch(j));
        }
        PatchSet { dim: self.dim, data }
    }

    /// Canonical order: patches sorted lexicographically (IEEE total order).
    pub fn sorted(&self) -> PatchSet {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex(self.patch(a), self.patch(b)));
        self.reordered(&order)
    }

    pub fn multiset_eq(&self, other: &PatchSet) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self
                .sorted()
                .data
                .iter()
                .zip(&other.sorted().data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn bit_eq(&self, other: &PatchSet) -> bool {
        self.dim == other.dim
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Mean over patches.
    pub fn mean_pool(&self) -> Vec<f64> {
        let mut acc = vec![0f64; self.dim];
        for p in self.iter() {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += *v as f64;
            }
        }
        let n = self.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}
