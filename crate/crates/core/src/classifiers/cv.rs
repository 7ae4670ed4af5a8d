//! Stratified k-fold cross-validation with seeded, reproducible folds.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::sequence_consistency;
use crate::seeding::derive_seed;

use super::{train_model, ClassifierError, ModelSpec};

/// Per-fold and mean accuracy plus the consistency of each fold's
/// time-ordered predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub fold_consistencies: Vec<f64>,
    pub mean_consistency: f64,
    /// False when some class had fewer rows than folds and the split
    /// degraded to plain (unstratified) folds.
    pub stratified: bool,
    /// Standardizer means fitted inside each training fold; lets callers
    /// verify that no held-out row leaked into the fit.
    pub fold_standardizer_means: Vec<Vec<f64>>,
}

/// Assign each row to one of `k` folds. Per class, rows are shuffled with a
/// seeded RNG and dealt round-robin, so fold class proportions match the
/// data within one row. Falls back to plain folds (and reports it) when some
/// class has fewer rows than `k`.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> (Vec<usize>, bool) {
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();

    let stratified = classes
        .iter()
        .all(|c| labels.iter().filter(|l| *l == c).count() >= k);

    let mut assignment = vec![0usize; labels.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if stratified {
        for class in classes {
            let mut indices: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == class)
                .map(|(i, _)| i)
                .collect();
            indices.shuffle(&mut rng);
            for (pos, row) in indices.into_iter().enumerate() {
                assignment[row] = pos % k;
            }
        }
    } else {
        let mut indices: Vec<usize> = (0..labels.len()).collect();
        indices.shuffle(&mut rng);
        for (pos, row) in indices.into_iter().enumerate() {
            assignment[row] = pos % k;
        }
    }
    (assignment, stratified)
}

/// Run k-fold cross-validation of one model specification.
///
/// For every fold the standardizer and model are fitted on the training
/// side only; the held-out rows are predicted, re-ordered by `timestamps`,
/// and scored for accuracy and prediction consistency.
pub fn kfold_cv(
    names: &[String],
    rows: &[Vec<f64>],
    labels: &[u8],
    timestamps: &[f64],
    spec: &ModelSpec,
    k: usize,
    seed: u64,
) -> Result<CvReport, ClassifierError> {
    if rows.len() < k || k < 2 {
        return Err(ClassifierError::Invalid(format!(
            "{} rows cannot be split into {k} folds",
            rows.len()
        )));
    }
    if rows.len() != labels.len() || rows.len() != timestamps.len() {
        return Err(ClassifierError::Invalid(
            "rows, labels, and timestamps must align".into(),
        ));
    }

    let (assignment, stratified) = stratified_folds(labels, k, seed);

    let mut fold_accuracies = Vec::with_capacity(k);
    let mut fold_consistencies = Vec::with_capacity(k);
    let mut fold_standardizer_means = Vec::with_capacity(k);
    for fold in 0..k {
        let train_idx: Vec<usize> = (0..rows.len()).filter(|i| assignment[*i] != fold).collect();
        let test_idx: Vec<usize> = (0..rows.len()).filter(|i| assignment[*i] == fold).collect();

        let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|i| rows[*i].clone()).collect();
        let train_labels: Vec<u8> = train_idx.iter().map(|i| labels[*i]).collect();
        let model = train_model(
            names,
            &train_rows,
            &train_labels,
            spec,
            derive_seed(seed, fold as u64),
        )?;
        fold_standardizer_means.push(model.standardizer().means.clone());

        // Predictions in timestamp order: consistency is a property of the
        // online prediction sequence, not of the fold's storage order.
        let mut ordered = test_idx.clone();
        ordered.sort_by(|a, b| {
            timestamps[*a]
                .partial_cmp(&timestamps[*b])
                .unwrap()
                .then(a.cmp(b))
        });
        let mut correct = 0usize;
        let mut predictions = Vec::with_capacity(ordered.len());
        for i in ordered {
            let predicted = model.predict(&rows[i])?;
            if predicted == labels[i] {
                correct += 1;
            }
            predictions.push(predicted);
        }
        fold_accuracies.push(correct as f64 / predictions.len() as f64);
        fold_consistencies.push(sequence_consistency(&predictions));
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(CvReport {
        mean_accuracy: mean(&fold_accuracies),
        mean_consistency: mean(&fold_consistencies),
        fold_accuracies,
        fold_consistencies,
        stratified,
        fold_standardizer_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn folds_partition_all_rows_evenly() {
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let (assignment, stratified) = stratified_folds(&labels, 5, 9);
        assert!(stratified);
        for fold in 0..5 {
            assert_eq!(assignment.iter().filter(|f| **f == fold).count(), 20);
        }
    }

    #[test]
    fn folds_preserve_class_proportions() {
        let labels: Vec<u8> = (0..60)
            .map(|i| if i < 30 { 0 } else if i < 50 { 1 } else { 2 })
            .collect();
        let (assignment, stratified) = stratified_folds(&labels, 5, 1);
        assert!(stratified);
        for fold in 0..5 {
            let in_fold: Vec<u8> = labels
                .iter()
                .zip(&assignment)
                .filter(|(_, f)| **f == fold)
                .map(|(l, _)| *l)
                .collect();
            assert_eq!(in_fold.iter().filter(|l| **l == 0).count(), 6);
            assert_eq!(in_fold.iter().filter(|l| **l == 1).count(), 4);
            assert_eq!(in_fold.iter().filter(|l| **l == 2).count(), 2);
        }
    }

    #[test]
    fn same_seed_gives_identical_folds() {
        let labels: Vec<u8> = (0..40).map(|i| (i % 3) as u8).collect();
        assert_eq!(stratified_folds(&labels, 4, 7), stratified_folds(&labels, 4, 7));
        assert_ne!(
            stratified_folds(&labels, 4, 7).0,
            stratified_folds(&labels, 4, 8).0
        );
    }

    #[test]
    fn tiny_class_degrades_to_plain_folds() {
        let mut labels = vec![0u8; 30];
        labels[0] = 1;
        labels[1] = 1;
        let (_, stratified) = stratified_folds(&labels, 5, 0);
        assert!(!stratified);
    }

    #[test]
    fn cv_on_separable_data_scores_high() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            let class = (i % 2) as u8;
            let center = if class == 0 { -3.0 } else { 3.0 };
            rows.push(vec![center + rng.random_range(-0.5..0.5)]);
            labels.push(class);
        }
        let timestamps: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let names = vec!["x".to_string()];
        let report = kfold_cv(
            &names,
            &rows,
            &labels,
            &timestamps,
            &ModelSpec::Forest { n_trees: 20 },
            5,
            2,
        )
        .unwrap();
        assert_eq!(report.fold_accuracies.len(), 5);
        assert!(report.mean_accuracy >= 0.95, "{}", report.mean_accuracy);
    }

    #[test]
    fn fold_standardizers_differ_from_global_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(-5.0..5.0)]).collect();
        let labels: Vec<u8> = (0..50).map(|i| (i % 2) as u8).collect();
        let timestamps: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let names = vec!["x".to_string()];
        let report = kfold_cv(
            &names,
            &rows,
            &labels,
            &timestamps,
            &ModelSpec::Knn { k: 3 },
            5,
            4,
        )
        .unwrap();
        let global_mean: f64 = rows.iter().map(|r| r[0]).sum::<f64>() / 50.0;
        for fold_means in &report.fold_standardizer_means {
            assert!((fold_means[0] - global_mean).abs() > 1e-12);
        }
    }
}
