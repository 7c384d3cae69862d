//! k-nearest-neighbour imputation under a mask-aware Euclidean distance.
//!
//! Distance between two partially observed rows runs over their mutually
//! observed coordinates and is rescaled by the observed fraction:
//! `d = sqrt(n_cols / n_mutual * sum_mutual (x_i - y_i)^2)`. Rows sharing no
//! observed coordinate have undefined distance and are unusable as neighbours.

use crate::data::DataMatrix;

use super::{column_means, ImputeError};

/// Pairwise mask-aware distances; `None` when two rows share no observed
/// coordinate. Neighbour candidacy depends only on the input mask, never on
/// imputed values.
fn masked_distances(data: &DataMatrix) -> Vec<Vec<Option<f64>>> {
    let n = data.n_rows();
    let p = data.n_cols();
    let values = data.values();
    let mask = data.mask();
    let mut dist = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sum = 0.0;
            let mut mutual = 0usize;
            for c in 0..p {
                if mask[[i, c]] && mask[[j, c]] {
                    let d = values[[i, c]] - values[[j, c]];
                    sum += d * d;
                    mutual += 1;
                }
            }
            if mutual > 0 {
                let d = (sum * p as f64 / mutual as f64).sqrt();
                dist[i][j] = Some(d);
                dist[j][i] = Some(d);
            }
        }
    }
    dist
}

pub fn impute_knn_impl(data: &DataMatrix, k: usize) -> Result<DataMatrix, ImputeError> {
    let n = data.n_rows();
    if k == 0 || k > n.saturating_sub(1) {
        return Err(ImputeError::KTooLarge { k, n_rows: n });
    }
    let means = column_means(data)?;
    if data.is_complete() {
        return Ok(data.clone());
    }

    let dist = masked_distances(data);
    let mask = data.mask();
    let mut values = data.values().to_owned();

    for r in 0..n {
        for c in 0..data.n_cols() {
            if mask[[r, c]] {
                continue;
            }
            // Usable neighbours observe column c and have a defined distance.
            let mut candidates: Vec<(f64, usize)> = (0..n)
                .filter(|&other| other != r && mask[[other, c]])
                .filter_map(|other| dist[r][other].map(|d| (d, other)))
                .collect();
            if candidates.is_empty() {
                values[[r, c]] = means[c];
                continue;
            }
            // Ties broken by lower row index.
            candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let take = candidates.len().min(k);
            let fill = candidates[..take]
                .iter()
                .map(|&(_, row)| data.values()[[row, c]])
                .sum::<f64>()
                / take as f64;
            values[[r, c]] = fill;
        }
    }

    Ok(data.with_complete_values(values))
}
