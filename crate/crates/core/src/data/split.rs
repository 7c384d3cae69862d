//! Seed-deterministic train/test splitting, optionally stratified by class.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed;

use super::{DataError, LabeledDataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    /// Fraction of rows assigned to the test partition, in (0, 1).
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.25,
            seed: 0,
            stratified: true,
        }
    }
}

/// Split into disjoint (train, test) partitions whose union is the input.
///
/// Deterministic for a fixed seed. With `stratified`, per-class test counts
/// are allocated by largest remainder so each class lands within one sample
/// of the global test fraction.
pub fn train_test_split(
    data: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset), DataError> {
    let n = data.n_rows();
    let n_test = (spec.test_fraction * n as f64).floor() as usize;
    if n_test == 0 || n_test >= n {
        return Err(DataError::DegenerateSplit {
            n,
            fraction: spec.test_fraction,
        });
    }

    let mut test_idx = if spec.stratified {
        stratified_test_indices(data, spec, n_test)?
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut seed::rng(spec.seed, "split", 0));
        all.truncate(n_test);
        all
    };
    test_idx.sort_unstable();

    let mut in_test = vec![false; n];
    for &i in &test_idx {
        in_test[i] = true;
    }
    let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();

    Ok((data.select_rows(&train_idx), data.select_rows(&test_idx)))
}

fn stratified_test_indices(
    data: &LabeledDataset,
    spec: &SplitSpec,
    n_test: usize,
) -> Result<Vec<usize>, DataError> {
    let classes = data.classes_present();
    let mut per_class: Vec<Vec<usize>> = classes.iter().map(|_| Vec::new()).collect();
    for (i, &label) in data.labels().iter().enumerate() {
        let slot = classes.iter().position(|&c| c == label).unwrap();
        per_class[slot].push(i);
    }
    for (slot, members) in per_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(DataError::TinyClass(classes[slot], members.len()));
        }
    }

    // Largest-remainder allocation of n_test across classes.
    let mut counts: Vec<usize> = Vec::with_capacity(classes.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(classes.len());
    for (slot, members) in per_class.iter().enumerate() {
        let exact = spec.test_fraction * members.len() as f64;
        let base = exact.floor() as usize;
        counts.push(base);
        remainders.push((exact - base as f64, slot));
    }
    let assigned: usize = counts.iter().sum();
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, slot) in remainders.iter().take(n_test.saturating_sub(assigned)) {
        counts[slot] += 1;
    }

    let mut test_idx = Vec::with_capacity(n_test);
    for (slot, members) in per_class.iter().enumerate() {
        let mut members = members.clone();
        members.shuffle(&mut seed::rng(spec.seed, "split-class", slot as u64));
        test_idx.extend(members.into_iter().take(counts[slot]));
    }
    Ok(test_idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ClassLabel, DataMatrix};
    use ndarray::Array2;

    fn dataset(labels: Vec<ClassLabel>) -> LabeledDataset {
        let n = labels.len();
        let values = Array2::from_shape_fn((n, 2), |(r, c)| (r * 2 + c) as f64);
        LabeledDataset::new(DataMatrix::from_values(values), labels).unwrap()
    }

    fn ids(ds: &LabeledDataset) -> Vec<String> {
        ds.features().row_ids().to_vec()
    }

    #[test]
    fn cardinality_and_disjointness() {
        let ds = dataset(vec![ClassLabel::A; 10]);
        let spec = SplitSpec {
            test_fraction: 0.3,
            seed: 1,
            stratified: false,
        };
        let (train, test) = train_test_split(&ds, &spec).unwrap();
        assert_eq!(train.n_rows(), 7);
        assert_eq!(test.n_rows(), 3);
        let mut all = ids(&train);
        all.extend(ids(&test));
        all.sort();
        let mut expected: Vec<String> = (0..10).map(|i| format!("r{i}")).collect();
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn same_seed_gives_identical_partitions() {
        let ds = dataset(vec![ClassLabel::A; 10]);
        let spec = SplitSpec {
            test_fraction: 0.3,
            seed: 1,
            stratified: false,
        };
        let (tr1, te1) = train_test_split(&ds, &spec).unwrap();
        let (tr2, te2) = train_test_split(&ds, &spec).unwrap();
        assert_eq!(ids(&tr1), ids(&tr2));
        assert_eq!(ids(&te1), ids(&te2));
    }

    #[test]
    fn stratified_5a_5b_at_04_puts_2_of_each_in_test() {
        // Every valid stratified draw at this fraction has exactly 2 A and 2 B
        // in the test partition; check ours is one of them.
        let mut labels = vec![ClassLabel::A; 5];
        labels.extend(vec![ClassLabel::B; 5]);
        let ds = dataset(labels);
        let spec = SplitSpec {
            test_fraction: 0.4,
            seed: 9,
            stratified: true,
        };
        let (train, test) = train_test_split(&ds, &spec).unwrap();
        assert_eq!(test.class_counts(), [2, 2, 0]);
        assert_eq!(train.class_counts(), [3, 3, 0]);
    }

    #[test]
    fn degenerate_split_is_an_error() {
        let ds = dataset(vec![ClassLabel::A; 3]);
        let spec = SplitSpec {
            test_fraction: 0.1,
            seed: 0,
            stratified: false,
        };
        assert!(matches!(
            train_test_split(&ds, &spec),
            Err(DataError::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn stratified_rejects_singleton_class() {
        let mut labels = vec![ClassLabel::A; 6];
        labels.push(ClassLabel::C);
        let ds = dataset(labels);
        let spec = SplitSpec {
            test_fraction: 0.3,
            seed: 0,
            stratified: true,
        };
        assert!(matches!(
            train_test_split(&ds, &spec),
            Err(DataError::TinyClass(ClassLabel::C, 1))
        ));
    }

    #[test]
    fn stratified_proportions_within_one_sample() {
        let mut labels = vec![ClassLabel::A; 43];
        labels.extend(vec![ClassLabel::B; 51]);
        labels.extend(vec![ClassLabel::C; 6]);
        let ds = dataset(labels);
        let spec = SplitSpec {
            test_fraction: 0.25,
            seed: 4,
            stratified: true,
        };
        let (_, test) = train_test_split(&ds, &spec).unwrap();
        for (count, total) in test.class_counts().iter().zip([43usize, 51, 6]) {
            let exact = 0.25 * total as f64;
            assert!(
                (*count as f64 - exact).abs() < 1.0,
                "class count {count} too far from {exact}"
            );
        }
    }
}
