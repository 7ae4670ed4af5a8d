//! From-scratch classifiers behind one trained-model type.
//!
//! Three learners share a common contract: they fit a [`Standardizer`] on
//! their training rows, remember the feature name list they were trained
//! with, and reject prediction inputs whose names mismatch. All are
//! deterministic functions of (data, hyperparameters, seed).
//!
//! * [`knn_train`] — k-nearest neighbours, Euclidean distance, majority vote.
//! * [`forest_train`] — bagged CART trees with Gini splits and normalized
//!   mean-decrease-in-impurity feature importances.
//! * [`mlp_train`] — one tanh hidden layer, softmax output, cross-entropy
//!   loss, full-batch gradient descent.
//!
//! [`kfold_cv`] runs seeded stratified cross-validation of any of the three,
//! fitting every statistic inside each training fold. Models serialize to a
//! self-describing JSON document via [`TrainedModel::to_json`] and round-trip
//! bit-exactly.

mod cv;
mod forest;
mod knn;
mod mlp;
mod standardize;

pub use cv::{kfold_cv, stratified_folds, CvReport};
pub use forest::ForestModel;
pub use knn::KnnModel;
pub use mlp::{mlp_gradients, mlp_loss, MlpModel, MlpParams};
pub use standardize::Standardizer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from training, prediction, and serialization.
#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training needs at least 2 classes, got {0}")]
    SingleClass(u8),
    #[error("k = {k} exceeds the {rows} training rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },
    #[error("feature names do not match the trained model (expected {expected} features, got {got})")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("model serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

/// Which learner to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Knn { k: usize },
    Forest { n_trees: usize },
    Mlp { hidden: usize, epochs: usize, learning_rate: f64 },
}

impl ModelSpec {
    /// Short algorithm name used in reports and file names.
    pub fn algorithm(&self) -> &'static str {
        match self {
            Self::Knn { .. } => "knn",
            Self::Forest { .. } => "forest",
            Self::Mlp { .. } => "mlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum ModelVariant {
    Knn(KnnModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

/// A trained classifier: variant payload, the feature names it expects, the
/// class labels it can emit, and the standardizer fitted on its training
/// rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    feature_names: Vec<String>,
    classes: Vec<u8>,
    standardizer: Standardizer,
    variant: ModelVariant,
}

impl TrainedModel {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Sorted distinct class labels seen during training.
    pub fn classes(&self) -> &[u8] {
        &self.classes
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn variant(&self) -> &ModelVariant {
        &self.variant
    }

    pub fn algorithm(&self) -> &'static str {
        match self.variant {
            ModelVariant::Knn(_) => "knn",
            ModelVariant::Forest(_) => "forest",
            ModelVariant::Mlp(_) => "mlp",
        }
    }

    /// Per-feature Gini importances (forests only), summing to 1.
    pub fn importances(&self) -> Option<&[f64]> {
        match &self.variant {
            ModelVariant::Forest(f) => Some(&f.importances),
            _ => None,
        }
    }

    /// Predict the label of one raw (unstandardized) row aligned to
    /// [`Self::feature_names`].
    pub fn predict(&self, row: &[f64]) -> Result<u8, ClassifierError> {
        if row.len() != self.feature_names.len() {
            return Err(ClassifierError::FeatureMismatch {
                expected: self.feature_names.len(),
                got: row.len(),
            });
        }
        let scaled = self.standardizer.apply(row);
        Ok(match &self.variant {
            ModelVariant::Knn(m) => m.predict(&scaled),
            ModelVariant::Forest(m) => m.predict(&scaled, &self.classes),
            ModelVariant::Mlp(m) => self.classes[m.params.predict_index(&scaled)],
        })
    }

    /// Predict after checking that the caller's feature names match the
    /// stored list exactly.
    pub fn predict_named(&self, names: &[String], row: &[f64]) -> Result<u8, ClassifierError> {
        if names != self.feature_names.as_slice() {
            return Err(ClassifierError::FeatureMismatch {
                expected: self.feature_names.len(),
                got: names.len(),
            });
        }
        self.predict(row)
    }

    /// Self-describing JSON document. Serialization is deterministic, so two
    /// identical models produce identical bytes.
    pub fn to_json(&self) -> Result<String, ClassifierError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self, ClassifierError> {
        Ok(serde_json::from_str(json)?)
    }
}

fn check_training_set(
    rows: &[Vec<f64>],
    labels: &[u8],
    need_classes: usize,
) -> Result<Vec<u8>, ClassifierError> {
    if rows.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if rows.len() != labels.len() {
        return Err(ClassifierError::Invalid(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < need_classes {
        return Err(ClassifierError::SingleClass(classes.len() as u8));
    }
    Ok(classes)
}

/// Train a KNN model: standardize, store the rows, vote among `k` at
/// prediction time.
pub fn knn_train(
    names: &[String],
    rows: &[Vec<f64>],
    labels: &[u8],
    k: usize,
) -> Result<TrainedModel, ClassifierError> {
    let classes = check_training_set(rows, labels, 1)?;
    if k == 0 || k > rows.len() {
        return Err(ClassifierError::KTooLarge { k, rows: rows.len() });
    }
    let standardizer = Standardizer::fit(rows)?;
    let scaled = standardizer.apply_matrix(rows);
    Ok(TrainedModel {
        feature_names: names.to_vec(),
        classes,
        standardizer,
        variant: ModelVariant::Knn(KnnModel {
            k,
            rows: scaled,
            labels: labels.to_vec(),
        }),
    })
}

/// Train a random forest; deterministic given `seed`.
pub fn forest_train(
    names: &[String],
    rows: &[Vec<f64>],
    labels: &[u8],
    n_trees: usize,
    seed: u64,
) -> Result<TrainedModel, ClassifierError> {
    let classes = check_training_set(rows, labels, 2)?;
    let standardizer = Standardizer::fit(rows)?;
    let scaled = standardizer.apply_matrix(rows);
    let forest = forest::train_forest(&scaled, labels, &classes, n_trees, seed);
    Ok(TrainedModel {
        feature_names: names.to_vec(),
        classes,
        standardizer,
        variant: ModelVariant::Forest(forest),
    })
}

/// Train the single-hidden-layer network; deterministic given `seed`.
pub fn mlp_train(
    names: &[String],
    rows: &[Vec<f64>],
    labels: &[u8],
    hidden: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<TrainedModel, ClassifierError> {
    let classes = check_training_set(rows, labels, 2)?;
    let standardizer = Standardizer::fit(rows)?;
    let scaled = standardizer.apply_matrix(rows);
    let targets: Vec<usize> = labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();
    let model = mlp::train_mlp(
        &scaled,
        &targets,
        classes.len(),
        hidden,
        epochs,
        learning_rate,
        seed,
    )?;
    Ok(TrainedModel {
        feature_names: names.to_vec(),
        classes,
        standardizer,
        variant: ModelVariant::Mlp(model),
    })
}

/// Train whichever learner the spec names.
pub fn train_model(
    names: &[String],
    rows: &[Vec<f64>],
    labels: &[u8],
    spec: &ModelSpec,
    seed: u64,
) -> Result<TrainedModel, ClassifierError> {
    match spec {
        ModelSpec::Knn { k } => knn_train(names, rows, labels, *k),
        ModelSpec::Forest { n_trees } => forest_train(names, rows, labels, *n_trees, seed),
        ModelSpec::Mlp {
            hidden,
            epochs,
            learning_rate,
        } => mlp_train(names, rows, labels, *hidden, *epochs, *learning_rate, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(seed: u64) -> (Vec<String>, Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let class = (i % 3) as u8;
            let center = f64::from(class) * 4.0;
            rows.push(vec![
                center + rng.random_range(-0.6..0.6),
                rng.random_range(-1.0..1.0),
            ]);
            labels.push(class);
        }
        (vec!["a".into(), "b".into()], rows, labels)
    }

    #[test]
    fn knn_k1_memorizes_and_rejects_oversized_k() {
        let (names, rows, labels) = dataset(1);
        let model = knn_train(&names, &rows, &labels, 1).unwrap();
        for (row, label) in rows.iter().zip(&labels) {
            assert_eq!(model.predict(row).unwrap(), *label);
        }
        assert!(matches!(
            knn_train(&names, &rows, &labels, rows.len() + 1),
            Err(ClassifierError::KTooLarge { .. })
        ));
    }

    #[test]
    fn single_class_training_is_rejected_for_forest_and_mlp() {
        let names = vec!["a".to_string()];
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let labels = vec![1, 1, 1];
        assert!(matches!(
            forest_train(&names, &rows, &labels, 10, 0),
            Err(ClassifierError::SingleClass(_))
        ));
        assert!(matches!(
            mlp_train(&names, &rows, &labels, 4, 10, 0.1, 0),
            Err(ClassifierError::SingleClass(_))
        ));
    }

    #[test]
    fn prediction_rejects_mismatched_features() {
        let (names, rows, labels) = dataset(2);
        let model = knn_train(&names, &rows, &labels, 3).unwrap();
        assert!(matches!(
            model.predict(&[1.0]),
            Err(ClassifierError::FeatureMismatch { .. })
        ));
        let wrong_names = vec!["a".to_string(), "c".to_string()];
        assert!(matches!(
            model.predict_named(&wrong_names, &[1.0, 2.0]),
            Err(ClassifierError::FeatureMismatch { .. })
        ));
        assert!(model.predict_named(&names, &rows[0]).is_ok());
    }

    #[test]
    fn nonconsecutive_labels_are_preserved() {
        // The risky/high-risk stage trains directly on labels {1, 2}.
        let names = vec!["x".to_string()];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 } + rng.random_range(-0.1..0.1)])
            .collect();
        let labels: Vec<u8> = (0..40).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
        for spec in [
            ModelSpec::Knn { k: 3 },
            ModelSpec::Forest { n_trees: 20 },
            ModelSpec::Mlp { hidden: 4, epochs: 300, learning_rate: 0.5 },
        ] {
            let model = train_model(&names, &rows, &labels, &spec, 7).unwrap();
            let predicted = model.predict(&rows[0]).unwrap();
            assert!(predicted == 1 || predicted == 2);
            assert_eq!(model.classes(), &[1, 2]);
        }
    }

    #[test]
    fn json_roundtrip_is_bit_exact_and_preserves_predictions() {
        let (names, rows, labels) = dataset(3);
        for spec in [
            ModelSpec::Knn { k: 5 },
            ModelSpec::Forest { n_trees: 15 },
            ModelSpec::Mlp { hidden: 6, epochs: 100, learning_rate: 0.3 },
        ] {
            let model = train_model(&names, &rows, &labels, &spec, 11).unwrap();
            let json = model.to_json().unwrap();
            let restored = TrainedModel::from_json(&json).unwrap();
            assert_eq!(restored, model);
            assert_eq!(restored.to_json().unwrap(), json);
            for row in rows.iter().take(10) {
                assert_eq!(restored.predict(row).unwrap(), model.predict(row).unwrap());
            }
        }
    }

    #[test]
    fn forest_importances_exposed_through_model() {
        let (names, rows, labels) = dataset(4);
        let model = forest_train(&names, &rows, &labels, 30, 2).unwrap();
        let importances = model.importances().unwrap();
        assert!((importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(knn_train(&names, &rows, &labels, 3)
            .unwrap()
            .importances()
            .is_none());
    }
}
