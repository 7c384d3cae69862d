//! Seeded synthetic dataset generators.
//!
//! The imputation benchmark needs fully observed ground truth, and the
//! classifier harnesses need data with known structure; these generators
//! provide both. All are deterministic in their seed.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, DataMatrix, LabeledDataset};
use crate::seed;

/// Built-in ground-truth sources for the imputation benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SyntheticSource {
    LowRank { rows: usize, cols: usize, rank: usize },
    LinearCorrelated { rows: usize, cols: usize },
    NonlinearCorrelated { rows: usize, cols: usize },
    Clustered { clusters: usize, cluster_size: usize, cols: usize },
}

impl SyntheticSource {
    pub fn generate(&self, seed: u64) -> DataMatrix {
        match *self {
            SyntheticSource::LowRank { rows, cols, rank } => low_rank(rows, cols, rank, seed),
            SyntheticSource::LinearCorrelated { rows, cols } => linear_correlated(rows, cols, seed),
            SyntheticSource::NonlinearCorrelated { rows, cols } => {
                nonlinear_correlated(rows, cols, seed)
            }
            SyntheticSource::Clustered {
                clusters,
                cluster_size,
                cols,
            } => clustered(clusters, cluster_size, cols, seed),
        }
    }
}

/// Exact rank-`rank` matrix: a positive per-column base level modulated by a
/// per-row factor, plus `rank - 1` random components.
pub fn low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> DataMatrix {
    assert!(rank >= 1 && rank <= rows.min(cols));
    let mut rng = seed::rng(seed, "synth-low-rank", 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut u = Array2::zeros((rows, rank));
    let mut v = Array2::zeros((cols, rank));
    for i in 0..rows {
        u[[i, 0]] = rng.gen_range(0.5..1.5);
    }
    for j in 0..cols {
        v[[j, 0]] = rng.gen_range(8.0..12.0);
    }
    for k in 1..rank {
        for i in 0..rows {
            u[[i, k]] = normal.sample(&mut rng);
        }
        for j in 0..cols {
            v[[j, k]] = normal.sample(&mut rng);
        }
    }
    DataMatrix::from_values(u.dot(&v.t()))
}

/// Columns are linear combinations of three latent factors plus a positive
/// offset and small noise.
pub fn linear_correlated(rows: usize, cols: usize, seed: u64) -> DataMatrix {
    let mut rng = seed::rng(seed, "synth-linear", 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let noise = Normal::new(0.0, 0.05).unwrap();
    let coeffs: Vec<(f64, f64, f64)> = (0..cols)
        .map(|_| {
            (
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(5.0..10.0),
            )
        })
        .collect();
    let mut values = Array2::zeros((rows, cols));
    for i in 0..rows {
        let z = [
            normal.sample(&mut rng),
            normal.sample(&mut rng),
            normal.sample(&mut rng),
        ];
        for (j, &(a, b, c)) in coeffs.iter().enumerate() {
            values[[i, j]] =
                a * z[j % 3] + b * z[(j + 1) % 3] + c + noise.sample(&mut rng);
        }
    }
    DataMatrix::from_values(values)
}

/// Columns are smooth nonlinear functions of two shared latent variables plus
/// small noise; linear regressors miss the structure, trees pick it up.
pub fn nonlinear_correlated(rows: usize, cols: usize, seed: u64) -> DataMatrix {
    let mut rng = seed::rng(seed, "synth-nonlinear", 0);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let shapes: Vec<(f64, f64)> = (0..cols)
        .map(|_| (rng.gen_range(0.8..1.6), rng.gen_range(0.0..std::f64::consts::PI)))
        .collect();
    let mut values = Array2::zeros((rows, cols));
    for i in 0..rows {
        let t: f64 = rng.gen_range(0.0..3.0);
        let s: f64 = rng.gen_range(-1.0..1.0);
        for (j, &(scale, phase)) in shapes.iter().enumerate() {
            let v = match j % 4 {
                0 => (scale * t + phase).sin() * 2.0 + 5.0,
                1 => (0.6 * scale * t).exp() + 2.0,
                2 => (t - 1.5) * (t - 1.5) * scale + 3.0 + 0.5 * s,
                _ => s * t * scale + 6.0,
            };
            values[[i, j]] = v + noise.sample(&mut rng);
        }
    }
    DataMatrix::from_values(values)
}

/// Well-separated spherical clusters; within-cluster spread is small relative
/// to the distance between cluster centres.
pub fn clustered(clusters: usize, cluster_size: usize, cols: usize, seed: u64) -> DataMatrix {
    let mut rng = seed::rng(seed, "synth-clustered", 0);
    let spread = Normal::new(0.0, 0.5).unwrap();
    let centre_dist = Uniform::new(0.0, 60.0);
    let mut values = Array2::zeros((clusters * cluster_size, cols));
    for k in 0..clusters {
        let centre: Vec<f64> = (0..cols).map(|_| centre_dist.sample(&mut rng)).collect();
        for m in 0..cluster_size {
            let row = k * cluster_size + m;
            for (j, &c) in centre.iter().enumerate() {
                values[[row, j]] = c + spread.sample(&mut rng);
            }
        }
    }
    DataMatrix::from_values(values)
}

fn labels_round_robin(n: usize, k: usize) -> Vec<ClassLabel> {
    (0..n).map(|i| ClassLabel::ALL[i % k]).collect()
}

/// Three linearly separable classes: class means sit far apart along
/// different coordinate directions relative to unit within-class spread.
pub fn separable_three_class(rows: usize, cols: usize, seed: u64) -> LabeledDataset {
    let mut rng = seed::rng(seed, "synth-separable", 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let labels = labels_round_robin(rows, 3);
    let mut values = Array2::zeros((rows, cols));
    for (i, &label) in labels.iter().enumerate() {
        let class = label.index();
        for j in 0..cols {
            let mean = if j % 3 == class { 6.0 } else { 0.0 };
            values[[i, j]] = mean + normal.sample(&mut rng);
        }
    }
    LabeledDataset::new(DataMatrix::from_values(values), labels).unwrap()
}

/// Two spherical Gaussian classes whose means are `separation_sigmas` apart
/// along the first axis (unit within-class sigma).
pub fn gaussian_blobs_two_class(
    n_per_class: usize,
    cols: usize,
    separation_sigmas: f64,
    seed: u64,
) -> LabeledDataset {
    let mut rng = seed::rng(seed, "synth-blobs", 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 2 * n_per_class;
    let mut values = Array2::zeros((n, cols));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        labels.push(if class == 0 { ClassLabel::A } else { ClassLabel::B });
        for j in 0..cols {
            let mean = if j == 0 {
                separation_sigmas * class as f64
            } else {
                0.0
            };
            values[[i, j]] = mean + normal.sample(&mut rng);
        }
    }
    LabeledDataset::new(DataMatrix::from_values(values), labels).unwrap()
}

/// Three partially overlapping classes; hard enough that accuracy curves stay
/// informative across epochs.
pub fn overlapping_three_class(rows: usize, cols: usize, seed: u64) -> LabeledDataset {
    let mut rng = seed::rng(seed, "synth-overlap", 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let labels = labels_round_robin(rows, 3);
    // Class means drawn once, pairwise distance ~2 sigma in a 3-dim subspace.
    let mut means = vec![vec![0.0; cols]; 3];
    for (c, mean) in means.iter_mut().enumerate() {
        for (j, m) in mean.iter_mut().enumerate() {
            if j % 3 == c {
                *m = 1.6 + 0.4 * ((c + j) % 2) as f64;
            }
        }
    }
    let mut values = Array2::zeros((rows, cols));
    for (i, &label) in labels.iter().enumerate() {
        let class = label.index();
        for j in 0..cols {
            values[[i, j]] = means[class][j] + normal.sample(&mut rng);
        }
    }
    LabeledDataset::new(DataMatrix::from_values(values), labels).unwrap()
}
