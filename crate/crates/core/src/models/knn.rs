//! k-nearest-neighbour classifier: stores the training set, votes among the
//! k closest rows under Euclidean distance. Vote ties break by smaller summed
//! neighbour distance, then class order.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnParams {
    pub train_x: Array2<f64>,
    pub train_y: Vec<usize>,
    pub k: usize,
}

pub fn fit(x: ArrayView2<'_, f64>, y: &[usize], k: usize) -> KnnParams {
    KnnParams {
        train_x: x.to_owned(),
        train_y: y.to_vec(),
        k,
    }
}

pub fn predict(params: &KnnParams, x: ArrayView2<'_, f64>) -> Vec<usize> {
    let n_train = params.train_x.nrows();
    let k = params.k.min(n_train);
    let n_classes = params.train_y.iter().max().map_or(1, |&m| m + 1);
    x.rows()
        .into_iter()
        .map(|row| {
            let mut dists: Vec<(f64, usize)> = (0..n_train)
                .map(|i| {
                    let d: f64 = row
                        .iter()
                        .zip(params.train_x.row(i))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d, i)
                })
                .collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

            let mut votes = vec![0usize; n_classes];
            let mut dist_sums = vec![0.0f64; n_classes];
            for &(d, i) in dists.iter().take(k) {
                let class = params.train_y[i];
                votes[class] += 1;
                dist_sums[class] += d.sqrt();
            }
            let mut best = 0;
            for c in 1..n_classes {
                let better = votes[c] > votes[best]
                    || (votes[c] == votes[best] && dist_sums[c] < dist_sums[best]);
                if better {
                    best = c;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn k1_memorizes_training_points() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 6.0]];
        let y = vec![0, 0, 1, 1];
        let params = fit(x.view(), &y, 1);
        assert_eq!(predict(&params, x.view()), y);
    }

    #[test]
    fn vote_tie_breaks_by_summed_distance() {
        // k = 2, one neighbour of each class; class 1 is closer.
        let x = array![[0.0], [10.0]];
        let y = vec![0, 1];
        let params = fit(x.view(), &y, 2);
        let out = predict(&params, array![[7.0]].view());
        assert_eq!(out, vec![1]);
        // and class order when distances tie exactly
        let out = predict(&params, array![[5.0]].view());
        assert_eq!(out, vec![0]);
    }

    #[test]
    fn rigid_transform_invariance() {
        // Rotation + translation applied to both train and test leaves
        // neighbour ranks, hence predictions, unchanged.
        let x = array![
            [0.0, 0.0],
            [1.0, 0.2],
            [0.3, 1.1],
            [5.0, 5.0],
            [5.5, 4.7],
            [4.6, 5.3]
        ];
        let y = vec![0, 0, 0, 1, 1, 1];
        let probe = array![[0.5, 0.5], [5.2, 5.1], [2.6, 2.4]];

        let params = fit(x.view(), &y, 3);
        let base = predict(&params, probe.view());

        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let rotate = |m: &Array2<f64>| {
            let mut out = m.clone();
            for mut row in out.rows_mut() {
                let (a, b) = (row[0], row[1]);
                row[0] = c * a - s * b + 3.0;
                row[1] = s * a + c * b - 7.0;
            }
            out
        };
        let params_t = fit(rotate(&x.to_owned()).view(), &y, 3);
        let transformed = predict(&params_t, rotate(&probe.to_owned()).view());
        assert_eq!(base, transformed);
    }
}
