//! Two-stage feature selection plus boxplot statistics for human review.
//!
//! The pipeline order is fixed: [`cv_filter`] first (drop features whose
//! coefficient of variation is below the threshold — they carry little
//! information), then [`gini_filter`] (drop features whose random-forest
//! importance falls below the threshold). Both filters are monotone in their
//! threshold: raising it never adds a feature back.
//!
//! The third selection step of the workflow — visual inspection of per-class
//! boxplots — is deliberately not automated; [`boxplot_export`] produces the
//! statistics a reviewer needs, and the CLI accepts a hand-pinned final
//! feature list.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{forest_train, ClassifierError};
use crate::features::FeatureMatrix;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("labels with fewer than 2 classes")]
    InvalidLabels,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Coefficient-of-variation filter: per feature, `CV = population std /
/// |mean|` over all rows with a present value; features with `CV <
/// threshold` are deleted. A zero-mean feature with spread has `CV = +inf`
/// and is always retained; features with no present values are deleted.
/// Returns the retained names in matrix column order.
pub fn cv_filter(matrix: &FeatureMatrix, threshold: f64) -> Result<Vec<String>, SelectionError> {
    if matrix.is_empty() {
        return Err(SelectionError::InvalidInput("empty feature matrix".into()));
    }
    let mut retained = Vec::new();
    for (index, name) in matrix.names().iter().enumerate() {
        let values: Vec<f64> = matrix.column_values(index).flatten().collect();
        if values.is_empty() {
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let cv = if mean.abs() < 1e-12 {
            if std > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            std / mean.abs()
        };
        if cv >= threshold {
            retained.push(name.clone());
        }
    }
    Ok(retained)
}

/// Random-forest importance filter: train a forest (`n_trees` trees, seeded)
/// on the labeled matrix and delete features whose normalized Gini
/// importance is below `threshold`. Features with any missing value are
/// excluded up front (the missing markers exist to make them deletable).
/// Returns the retained names in matrix column order.
pub fn gini_filter(
    matrix: &FeatureMatrix,
    threshold: f64,
    n_trees: usize,
    seed: u64,
) -> Result<Vec<String>, SelectionError> {
    let (names, importances) = gini_importances(matrix, n_trees, seed)?;
    Ok(names
        .into_iter()
        .zip(importances)
        .filter(|(_, imp)| *imp >= threshold)
        .map(|(name, _)| name)
        .collect())
}

/// The complete-feature name list and their normalized forest importances
/// (summing to 1). Shared by [`gini_filter`] and the CLI report.
pub fn gini_importances(
    matrix: &FeatureMatrix,
    n_trees: usize,
    seed: u64,
) -> Result<(Vec<String>, Vec<f64>), SelectionError> {
    let labels = matrix
        .labels()
        .ok_or_else(|| SelectionError::InvalidInput("gini filter needs labels".into()))?;
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(SelectionError::InvalidLabels);
    }

    let complete: Vec<String> = matrix
        .names()
        .iter()
        .enumerate()
        .filter(|(i, _)| matrix.column_values(*i).all(|v| v.is_some()))
        .map(|(_, n)| n.clone())
        .collect();
    if complete.is_empty() {
        return Err(SelectionError::InvalidInput(
            "no complete feature columns".into(),
        ));
    }

    let selected = matrix
        .select(&complete)
        .map_err(|e| SelectionError::InvalidInput(e.to_string()))?;
    let rows = selected
        .to_dense()
        .map_err(|e| SelectionError::InvalidInput(e.to_string()))?;
    let model = forest_train(&complete, &rows, labels, n_trees, seed)?;
    let importances = model
        .importances()
        .expect("forest model exposes importances")
        .to_vec();
    Ok((complete, importances))
}

/// Five-number summary plus whiskers and outliers for one feature within one
/// class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub feature: String,
    pub class: u8,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Smallest value at or above `q1 - 1.5 IQR`.
    pub whisker_low: f64,
    /// Largest value at or below `q3 + 1.5 IQR`.
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Quantile by linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let position = (n - 1) as f64 * p;
    let lo = position.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let fraction = position - lo as f64;
    sorted[lo] * (1.0 - fraction) + sorted[hi] * fraction
}

/// Per-feature, per-class boxplot statistics over present values. A
/// (feature, class) pair with no present values is omitted and reported in
/// the returned warning list.
pub fn boxplot_export(
    matrix: &FeatureMatrix,
) -> Result<(Vec<BoxplotStats>, Vec<String>), SelectionError> {
    let labels = matrix
        .labels()
        .ok_or_else(|| SelectionError::InvalidInput("boxplot export needs labels".into()))?;
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();

    let mut stats = Vec::new();
    let mut warnings = Vec::new();
    for (index, name) in matrix.names().iter().enumerate() {
        for class in &classes {
            let mut values: Vec<f64> = matrix
                .column_values(index)
                .zip(labels)
                .filter(|(v, l)| v.is_some() && *l == class)
                .map(|(v, _)| v.unwrap())
                .collect();
            if values.is_empty() {
                warnings.push(format!("feature {name}: class {class} has no values"));
                continue;
            }
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q1 = quantile(&values, 0.25);
            let median = quantile(&values, 0.5);
            let q3 = quantile(&values, 0.75);
            let iqr = q3 - q1;
            let low_fence = q1 - 1.5 * iqr;
            let high_fence = q3 + 1.5 * iqr;
            let whisker_low = values
                .iter()
                .cloned()
                .find(|v| *v >= low_fence)
                .unwrap_or(values[0]);
            let whisker_high = values
                .iter()
                .rev()
                .cloned()
                .find(|v| *v <= high_fence)
                .unwrap_or(values[values.len() - 1]);
            let outliers = values
                .iter()
                .cloned()
                .filter(|v| *v < low_fence || *v > high_fence)
                .collect();
            stats.push(BoxplotStats {
                feature: name.clone(),
                class: *class,
                min: values[0],
                q1,
                median,
                q3,
                max: values[values.len() - 1],
                whisker_low,
                whisker_high,
                outliers,
            });
        }
    }
    Ok((stats, warnings))
}
