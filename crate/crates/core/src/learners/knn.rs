//! k-nearest-neighbor regression under Euclidean distance.

use crate::data::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    features: Matrix,
    targets: Vec<f64>,
    k: usize,
}

impl KnnModel {
    /// `k` is clamped to the number of training rows.
    pub fn fit(features: &Matrix, targets: &[f64], k: usize) -> Self {
        Self {
            features: features.clone(),
            targets: targets.to_vec(),
            k: k.clamp(1, targets.len()),
        }
    }

    /// Mean target of the `k` closest training rows; equal distances keep
    /// the earlier row.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut dists: Vec<(f64, usize)> = self
            .features
            .iter_rows()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dists.len() {
            dists.select_nth_unstable_by(self.k - 1, cmp);
            dists.truncate(self.k);
        }
        dists.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / self.k as f64
    }
}
