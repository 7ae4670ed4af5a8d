//! Cascade and ternary state prediction over machine fleets.
//!
//! A machine's life before a breakdown is labeled by time to failure:
//! samples at or after `failure - 1 day` are high-risk, samples at or after
//! `failure - 30 days` are risky, everything earlier (and every sample of a
//! machine that never failed) is normal.
//!
//! The cascade model chains two binary stages, each with its own feature
//! list, under-sampling, and standardization: stage one separates normal
//! from abnormal; stage two sees only abnormal rows and separates risky from
//! high-risk. At prediction time a normal verdict from stage one
//! short-circuits: stage two is never invoked for that row. A ternary model
//! predicts all three states in one step and serves as the comparison
//! baseline.
//!
//! [`evaluate`] scores a model over a test fleet machine by machine: each
//! faulty machine forms one run-to-failure loop scored with the time-weighted
//! index, healthy machines contribute accuracy and a normal-interval
//! consistency, and [`select_model`] ranks candidate models by test `S`,
//! then `C`, then accuracy.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{train_model, ClassifierError, ModelSpec, TrainedModel};
use crate::features::{FeatureError, FeatureMatrix};
use crate::metrics::{
    multi_loop_opai, sequence_consistency, MetricsError, OpaiReport, PredictionSeries, Weights,
};
use crate::seeding::{derive_seed, derive_seed_str};

/// Seconds in the risky window: a machine is risky from 30 days before its
/// failure.
pub const RISKY_WINDOW_SECONDS: f64 = 30.0 * 86_400.0;

/// Seconds in the high-risk window: a machine is high-risk from 1 day before
/// its failure.
pub const HIGH_RISK_WINDOW_SECONDS: f64 = 86_400.0;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("under-sampling needs at least 2 non-empty classes, got {0}")]
    UndersampleClasses(usize),
    #[error("stage two needs abnormal rows of both risky and high-risk classes")]
    StageTwoUntrainable,
    #[error("test data must be labeled")]
    UnlabeledData,
    #[error("machine {machine}: truth labels do not form a normal->risky->high-risk loop")]
    MalformedLoop { machine: String },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Operating state of a machine at one timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum StateLabel {
    Normal = 0,
    Risky = 1,
    HighRisk = 2,
}

impl StateLabel {
    pub fn as_u8(&self) -> u8 {
        *self as u8
    }

    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            0 => Some(Self::Normal),
            1 => Some(Self::Risky),
            2 => Some(Self::HighRisk),
            _ => None,
        }
    }
}

/// Observation timestamps of one machine, with the failure moment (absent
/// for machines that ran healthy throughout) and the end of the repair
/// downtime that follows a failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineTimeline {
    machine_id: String,
    timestamps: Vec<f64>,
    failure_time: Option<f64>,
    downtime_end: Option<f64>,
}

impl MachineTimeline {
    pub fn new(
        machine_id: impl Into<String>,
        timestamps: Vec<f64>,
        failure_time: Option<f64>,
        downtime_end: Option<f64>,
    ) -> Result<Self, CascadeError> {
        if timestamps.is_empty() {
            return Err(CascadeError::InvalidTimeline("no timestamps".into()));
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CascadeError::InvalidTimeline(
                "timestamps must be strictly increasing".into(),
            ));
        }
        if let Some(failure) = failure_time {
            if timestamps.iter().any(|t| *t > failure) {
                return Err(CascadeError::InvalidTimeline(
                    "observations after the failure time".into(),
                ));
            }
            if let Some(end) = downtime_end {
                if end <= failure {
                    return Err(CascadeError::InvalidTimeline(
                        "downtime must end after the failure".into(),
                    ));
                }
            }
        }
        Ok(Self {
            machine_id: machine_id.into(),
            timestamps,
            failure_time,
            downtime_end,
        })
    }

    pub fn machine_id(&self) -> &str {
        &self.machine_id
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn failure_time(&self) -> Option<f64> {
        self.failure_time
    }

    pub fn downtime_end(&self) -> Option<f64> {
        self.downtime_end
    }

    pub fn is_faulty(&self) -> bool {
        self.failure_time.is_some()
    }
}

/// State label for a single timestamp given an optional failure time.
pub fn label_at(timestamp: f64, failure_time: Option<f64>) -> StateLabel {
    match failure_time {
        None => StateLabel::Normal,
        Some(failure) => {
            if timestamp >= failure - HIGH_RISK_WINDOW_SECONDS {
                StateLabel::HighRisk
            } else if timestamp >= failure - RISKY_WINDOW_SECONDS {
                StateLabel::Risky
            } else {
                StateLabel::Normal
            }
        }
    }
}

/// Label every timestamp of a timeline. Boundaries belong to the later
/// interval: exactly 30 days before failure is already risky, exactly 1 day
/// before failure already high-risk.
pub fn label_timeline(timeline: &MachineTimeline) -> Vec<StateLabel> {
    timeline
        .timestamps
        .iter()
        .map(|t| label_at(*t, timeline.failure_time))
        .collect()
}

/// How to divide a labeled dataset into train and test sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitStrategy {
    /// Whole machines go to one side; no machine is ever split.
    ByMachine {
        train: Vec<String>,
        test: Vec<String>,
    },
    /// Row-level stratified sampling: every class contributes `fraction` of
    /// its rows (within one row) to the train side.
    Stratified { fraction: f64, seed: u64 },
}

/// Split a labeled matrix into disjoint, covering (train, test) sides.
pub fn split(
    matrix: &FeatureMatrix,
    strategy: &SplitStrategy,
) -> Result<(FeatureMatrix, FeatureMatrix), CascadeError> {
    match strategy {
        SplitStrategy::ByMachine { train, test } => {
            let known: Vec<&str> = matrix.rows().iter().map(|r| r.machine_id.as_str()).collect();
            for id in train.iter().chain(test) {
                if !known.contains(&id.as_str()) {
                    return Err(CascadeError::InvalidSplit(format!("unknown machine {id}")));
                }
                if train.contains(id) && test.contains(id) {
                    return Err(CascadeError::InvalidSplit(format!(
                        "machine {id} assigned to both sides"
                    )));
                }
            }
            let train_idx: Vec<usize> = (0..matrix.len())
                .filter(|i| train.contains(&matrix.rows()[*i].machine_id))
                .collect();
            let test_idx: Vec<usize> = (0..matrix.len())
                .filter(|i| test.contains(&matrix.rows()[*i].machine_id))
                .collect();
            Ok((matrix.take_rows(&train_idx), matrix.take_rows(&test_idx)))
        }
        SplitStrategy::Stratified { fraction, seed } => {
            if !(0.0..=1.0).contains(fraction) {
                return Err(CascadeError::InvalidSplit(format!(
                    "fraction {fraction} outside [0, 1]"
                )));
            }
            let labels = matrix.labels().ok_or(CascadeError::UnlabeledData)?;
            let mut classes: Vec<u8> = labels.to_vec();
            classes.sort_unstable();
            classes.dedup();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut train_idx = Vec::new();
            let mut test_idx = Vec::new();
            for class in classes {
                let mut indices: Vec<usize> = (0..matrix.len())
                    .filter(|i| labels[*i] == class)
                    .collect();
                indices.shuffle(&mut rng);
                let take = (*fraction * indices.len() as f64).round() as usize;
                train_idx.extend(&indices[..take]);
                test_idx.extend(&indices[take..]);
            }
            train_idx.sort_unstable();
            test_idx.sort_unstable();
            Ok((matrix.take_rows(&train_idx), matrix.take_rows(&test_idx)))
        }
    }
}

/// Randomly under-sample every class down to the minority-class count.
/// Row order is preserved; only ever apply this to training data.
pub fn undersample(matrix: &FeatureMatrix, seed: u64) -> Result<FeatureMatrix, CascadeError> {
    let labels = matrix.labels().ok_or(CascadeError::UnlabeledData)?;
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(CascadeError::UndersampleClasses(classes.len()));
    }
    let minority = classes
        .iter()
        .map(|c| labels.iter().filter(|l| *l == c).count())
        .min()
        .unwrap();
    if minority == 0 {
        return Err(CascadeError::UndersampleClasses(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for class in classes {
        let mut indices: Vec<usize> = (0..matrix.len())
            .filter(|i| labels[*i] == class)
            .collect();
        indices.shuffle(&mut rng);
        keep.extend(&indices[..minority]);
    }
    keep.sort_unstable();
    Ok(matrix.take_rows(&keep))
}

/// Hyperparameters for one cascade training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub na_spec: ModelSpec,
    pub rh_spec: ModelSpec,
    pub na_features: Vec<String>,
    pub rh_features: Vec<String>,
    pub seed: u64,
}

/// The two chained binary stages. Each stage keeps its own feature list; the
/// lists may differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub na_model: TrainedModel,
    pub rh_model: TrainedModel,
}

fn dense_for_training(
    matrix: &FeatureMatrix,
    features: &[String],
) -> Result<(Vec<Vec<f64>>, Vec<u8>), CascadeError> {
    let selected = matrix.select(features)?;
    let rows = selected.to_dense()?;
    let labels = selected.labels().ok_or(CascadeError::UnlabeledData)?.to_vec();
    Ok((rows, labels))
}

/// Train the two-stage model per the cascade flow: stage one on all rows
/// with normal(0)-vs-abnormal(1) labels, stage two on the abnormal rows only
/// with their original risky(1)/high-risk(2) labels. Each stage gets its own
/// feature selection, under-sampling, and standardization.
pub fn train_cascade(
    train: &FeatureMatrix,
    config: &CascadeConfig,
) -> Result<CascadeModel, CascadeError> {
    let labels = train.labels().ok_or(CascadeError::UnlabeledData)?;
    if labels.iter().all(|l| *l == 0) {
        return Err(CascadeError::StageTwoUntrainable);
    }

    // Stage one: normal vs abnormal over the full train set.
    let na_labels: Vec<u8> = labels.iter().map(|l| u8::from(*l != 0)).collect();
    let na_matrix = train.with_labels(na_labels)?;
    let na_balanced = undersample(&na_matrix, derive_seed(config.seed, 1))?;
    let (na_rows, na_train_labels) = dense_for_training(&na_balanced, &config.na_features)?;
    let na_model = train_model(
        &config.na_features,
        &na_rows,
        &na_train_labels,
        &config.na_spec,
        derive_seed(config.seed, 2),
    )?;

    // Stage two: risky vs high-risk over the abnormal rows only.
    let abnormal_idx: Vec<usize> = (0..train.len()).filter(|i| labels[*i] != 0).collect();
    let abnormal = if abnormal_idx.is_empty() {
        return Err(CascadeError::StageTwoUntrainable);
    } else {
        train.take_rows(&abnormal_idx)
    };
    let rh_balanced = undersample(&abnormal, derive_seed(config.seed, 3))
        .map_err(|_| CascadeError::StageTwoUntrainable)?;
    let (rh_rows, rh_train_labels) = dense_for_training(&rh_balanced, &config.rh_features)?;
    let rh_model = train_model(
        &config.rh_features,
        &rh_rows,
        &rh_train_labels,
        &config.rh_spec,
        derive_seed(config.seed, 4),
    )?;

    Ok(CascadeModel { na_model, rh_model })
}

/// Train the one-step ternary baseline on the same preprocessing chain.
pub fn train_ternary(
    train: &FeatureMatrix,
    spec: &ModelSpec,
    features: &[String],
    seed: u64,
) -> Result<TrainedModel, CascadeError> {
    let balanced = undersample(train, derive_seed(seed, 5))?;
    let (rows, labels) = dense_for_training(&balanced, features)?;
    Ok(train_model(features, &rows, &labels, spec, derive_seed(seed, 6))?)
}

/// Cascade prediction with the short-circuit made observable: the flag is
/// true only when stage two was actually invoked.
pub fn predict_cascade_traced(
    model: &CascadeModel,
    matrix: &FeatureMatrix,
    row: usize,
) -> Result<(StateLabel, bool), CascadeError> {
    let gather = |features: &[String]| -> Result<Vec<f64>, CascadeError> {
        features
            .iter()
            .map(|name| {
                let col = matrix.column(name).ok_or_else(|| {
                    CascadeError::InvalidSplit(format!("row lacks feature {name}"))
                })?;
                matrix.rows()[row].values[col].ok_or_else(|| {
                    CascadeError::InvalidSplit(format!("missing value for feature {name}"))
                })
            })
            .collect()
    };

    let na_row = gather(model.na_model.feature_names())?;
    if model.na_model.predict(&na_row)? == 0 {
        return Ok((StateLabel::Normal, false));
    }
    let rh_row = gather(model.rh_model.feature_names())?;
    let state = match model.rh_model.predict(&rh_row)? {
        1 => StateLabel::Risky,
        _ => StateLabel::HighRisk,
    };
    Ok((state, true))
}

/// Predict one row: normal from stage one ends the computation, otherwise
/// stage two decides risky vs high-risk.
pub fn predict_cascade(
    model: &CascadeModel,
    matrix: &FeatureMatrix,
    row: usize,
) -> Result<StateLabel, CascadeError> {
    predict_cascade_traced(model, matrix, row).map(|(state, _)| state)
}

/// A trained predictor of either kind, scored identically by [`evaluate`].
pub enum AnyModel<'a> {
    Cascade(&'a CascadeModel),
    Ternary(&'a TrainedModel),
}

impl AnyModel<'_> {
    fn predict(&self, matrix: &FeatureMatrix, row: usize) -> Result<u8, CascadeError> {
        match self {
            Self::Cascade(model) => Ok(predict_cascade(model, matrix, row)?.as_u8()),
            Self::Ternary(model) => {
                let values: Result<Vec<f64>, CascadeError> = model
                    .feature_names()
                    .iter()
                    .map(|name| {
                        let col = matrix.column(name).ok_or_else(|| {
                            CascadeError::InvalidSplit(format!("row lacks feature {name}"))
                        })?;
                        matrix.rows()[row].values[col].ok_or_else(|| {
                            CascadeError::InvalidSplit(format!("missing value for {name}"))
                        })
                    })
                    .collect();
                Ok(model.predict(&values?)?)
            }
        }
    }
}

/// Scores of one test machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineScore {
    pub machine_id: String,
    pub rows: usize,
    pub faulty: bool,
    pub accuracy: f64,
    /// Full loop report for faulty machines; healthy machines have no
    /// deterioration loop, so no `S` is defined for them.
    pub opai: Option<OpaiReport>,
    /// Normal-interval prediction consistency for healthy machines.
    pub normal_consistency: Option<f64>,
}

/// Fleet-level evaluation: per-machine scores plus the pooled report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_machine: Vec<MachineScore>,
    /// Accuracy pooled over every row of every machine.
    pub accuracy: f64,
    /// Mean per-loop `S` over faulty machines (absent if none).
    pub s: Option<f64>,
    /// Mean per-loop `C` over faulty machines (absent if none).
    pub c: Option<f64>,
    /// Mean normal-interval consistency over healthy machines (absent if
    /// none).
    pub healthy_consistency: Option<f64>,
}

/// Score a model over a labeled test fleet. Rows are grouped by machine and
/// ordered by timestamp; each faulty machine is one run-to-failure loop.
pub fn evaluate(
    model: &AnyModel,
    test: &FeatureMatrix,
    weights: Weights,
) -> Result<EvaluationReport, CascadeError> {
    let labels = test.labels().ok_or(CascadeError::UnlabeledData)?;

    let mut machine_ids: Vec<String> = test
        .rows()
        .iter()
        .map(|r| r.machine_id.clone())
        .collect::<Vec<_>>();
    machine_ids.sort();
    machine_ids.dedup();

    let mut per_machine = Vec::new();
    let mut loops = Vec::new();
    let mut healthy_consistencies = Vec::new();
    let mut total_correct = 0usize;
    let mut total_rows = 0usize;

    for machine in &machine_ids {
        let mut indices: Vec<usize> = (0..test.len())
            .filter(|i| &test.rows()[*i].machine_id == machine)
            .collect();
        indices.sort_by(|a, b| {
            test.rows()[*a]
                .timestamp
                .partial_cmp(&test.rows()[*b].timestamp)
                .unwrap()
                .then(a.cmp(b))
        });

        let truth: Vec<u8> = indices.iter().map(|i| labels[*i]).collect();
        let mut predicted = Vec::with_capacity(indices.len());
        for i in &indices {
            predicted.push(model.predict(test, *i)?);
        }

        let correct = truth
            .iter()
            .zip(&predicted)
            .filter(|(t, p)| t == p)
            .count();
        total_correct += correct;
        total_rows += indices.len();
        let accuracy = correct as f64 / indices.len() as f64;

        let faulty = truth.iter().any(|t| *t != 0);
        if faulty {
            let series = PredictionSeries::from_truth(&truth, predicted).map_err(|_| {
                CascadeError::MalformedLoop {
                    machine: machine.clone(),
                }
            })?;
            let report = crate::metrics::score_series(&series, weights)?;
            loops.push(series);
            per_machine.push(MachineScore {
                machine_id: machine.clone(),
                rows: indices.len(),
                faulty: true,
                accuracy,
                opai: Some(report),
                normal_consistency: None,
            });
        } else {
            let consistency = sequence_consistency(&predicted);
            healthy_consistencies.push(consistency);
            per_machine.push(MachineScore {
                machine_id: machine.clone(),
                rows: indices.len(),
                faulty: false,
                accuracy,
                opai: None,
                normal_consistency: Some(consistency),
            });
        }
    }

    let pooled = if loops.is_empty() {
        None
    } else {
        Some(multi_loop_opai(&loops, weights)?)
    };
    Ok(EvaluationReport {
        per_machine,
        accuracy: total_correct as f64 / total_rows as f64,
        s: pooled.map(|p| p.s),
        c: pooled.map(|p| p.c),
        healthy_consistency: if healthy_consistencies.is_empty() {
            None
        } else {
            Some(healthy_consistencies.iter().sum::<f64>() / healthy_consistencies.len() as f64)
        },
    })
}

/// One ranked candidate: its name (e.g. `knn+mlp` or `forest ternary`), the
/// train-set re-test scores, and the test-set scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCandidate {
    pub name: String,
    pub kind: String,
    pub train_accuracy: f64,
    pub train_s: Option<f64>,
    pub train_c: Option<f64>,
    pub test_accuracy: f64,
    pub test_s: Option<f64>,
    pub test_c: Option<f64>,
}

/// Rank candidates: test `S` descending, ties by test `C` descending, then
/// test accuracy, then name (for a total order). Returns indices into the
/// input, best first.
pub fn select_model(candidates: &[ModelCandidate]) -> Vec<usize> {
    let key = |c: &ModelCandidate| {
        (
            c.test_s.unwrap_or(f64::NEG_INFINITY),
            c.test_c.unwrap_or(f64::NEG_INFINITY),
            c.test_accuracy,
        )
    };
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|a, b| {
        let (sa, ca, aa) = key(&candidates[*a]);
        let (sb, cb, ab) = key(&candidates[*b]);
        sb.partial_cmp(&sa)
            .unwrap()
            .then(cb.partial_cmp(&ca).unwrap())
            .then(ab.partial_cmp(&aa).unwrap())
            .then(candidates[*a].name.cmp(&candidates[*b].name))
    });
    order
}

/// Derive a deterministic per-machine seed for fleet-level operations.
pub fn machine_seed(master: u64, machine_id: &str) -> u64 {
    derive_seed_str(master, machine_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    const DAY: f64 = 86_400.0;

    #[test]
    fn labeling_thresholds_and_boundaries() {
        let failure = 1_000_000.0 * DAY;
        assert_eq!(label_at(failure - 40.0 * DAY, Some(failure)), StateLabel::Normal);
        assert_eq!(label_at(failure - 10.0 * DAY, Some(failure)), StateLabel::Risky);
        assert_eq!(label_at(failure - 2.0 / 24.0 * DAY, Some(failure)), StateLabel::HighRisk);
        // Boundaries belong to the later interval.
        assert_eq!(label_at(failure - 30.0 * DAY, Some(failure)), StateLabel::Risky);
        assert_eq!(label_at(failure - DAY, Some(failure)), StateLabel::HighRisk);
        // Healthy machines are always normal.
        assert_eq!(label_at(failure, None), StateLabel::Normal);
    }

    #[test]
    fn timeline_validation() {
        assert!(MachineTimeline::new("M1", vec![], None, None).is_err());
        assert!(MachineTimeline::new("M1", vec![2.0, 1.0], None, None).is_err());
        assert!(MachineTimeline::new("M1", vec![1.0, 2.0], Some(1.5), None).is_err());
        assert!(MachineTimeline::new("M1", vec![1.0, 2.0], Some(3.0), Some(2.5)).is_err());
        let tl = MachineTimeline::new("M1", vec![1.0, 2.0], Some(3.0), Some(5.0)).unwrap();
        assert!(tl.is_faulty());
    }

    fn toy_matrix(machines: &[(&str, usize, u8)]) -> FeatureMatrix {
        // One feature whose value encodes the label, so learners separate
        // the classes perfectly.
        let names = vec!["x".to_string(), "y".to_string()];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut t = 0.0;
        let mut wobble = 0.0;
        for (machine, count, label) in machines {
            for _ in 0..*count {
                wobble = (wobble + 0.37) % 1.0;
                rows.push(FeatureVector {
                    machine_id: machine.to_string(),
                    timestamp: t,
                    names: names.clone(),
                    values: vec![
                        Some(f64::from(*label) * 10.0 + wobble),
                        Some(wobble - 0.5),
                    ],
                });
                labels.push(*label);
                t += 1.0;
            }
        }
        FeatureMatrix::new(rows, Some(labels)).unwrap()
    }

    #[test]
    fn by_machine_split_never_divides_a_machine() {
        let matrix = toy_matrix(&[("M1", 10, 0), ("M2", 10, 1), ("M3", 10, 2), ("M4", 10, 0)]);
        let strategy = SplitStrategy::ByMachine {
            train: vec!["M1".into(), "M2".into()],
            test: vec!["M3".into(), "M4".into()],
        };
        let (train, test) = split(&matrix, &strategy).unwrap();
        assert_eq!(train.len() + test.len(), matrix.len());
        assert!(train.rows().iter().all(|r| r.machine_id == "M1" || r.machine_id == "M2"));
        assert!(test.rows().iter().all(|r| r.machine_id == "M3" || r.machine_id == "M4"));

        let bad = SplitStrategy::ByMachine {
            train: vec!["M9".into()],
            test: vec![],
        };
        assert!(matches!(split(&matrix, &bad), Err(CascadeError::InvalidSplit(_))));
    }

    #[test]
    fn stratified_split_preserves_proportions_within_one_row() {
        let matrix = toy_matrix(&[("M1", 60, 0), ("M2", 30, 1), ("M3", 10, 2)]);
        let strategy = SplitStrategy::Stratified { fraction: 0.8, seed: 5 };
        let (train, test) = split(&matrix, &strategy).unwrap();
        assert_eq!(train.len() + test.len(), 100);
        let count = |m: &FeatureMatrix, class: u8| {
            m.labels().unwrap().iter().filter(|l| **l == class).count() as i64
        };
        assert!((count(&train, 0) - 48).abs() <= 1);
        assert!((count(&train, 1) - 24).abs() <= 1);
        assert!((count(&train, 2) - 8).abs() <= 1);

        // Same seed, same split.
        let (train2, _) = split(&matrix, &strategy).unwrap();
        assert_eq!(train, train2);
    }

    #[test]
    fn undersample_balances_to_minority() {
        let matrix = toy_matrix(&[("M1", 50, 0), ("M2", 20, 1), ("M3", 10, 2)]);
        let balanced = undersample(&matrix, 3).unwrap();
        let labels = balanced.labels().unwrap();
        for class in 0..3u8 {
            assert_eq!(labels.iter().filter(|l| **l == class).count(), 10);
        }
        // Already balanced input comes back unchanged (order preserved).
        let even = toy_matrix(&[("M1", 10, 0), ("M2", 10, 1)]);
        let same = undersample(&even, 9).unwrap();
        assert_eq!(same, even);
        // Determinism.
        assert_eq!(undersample(&matrix, 3).unwrap(), balanced);
    }

    #[test]
    fn undersample_fleet_scale_counts() {
        // Class counts at the scale of a real fleet's training set: every
        // class comes down to the 2870-row minority.
        let matrix = toy_matrix(&[("M1", 13203, 0), ("M2", 2991, 1), ("M3", 2870, 2)]);
        let balanced = undersample(&matrix, 1).unwrap();
        let labels = balanced.labels().unwrap();
        assert_eq!(balanced.len(), 3 * 2870);
        for class in 0..3u8 {
            assert_eq!(labels.iter().filter(|l| **l == class).count(), 2870);
        }
    }

    fn cascade_config(na: ModelSpec, rh: ModelSpec) -> CascadeConfig {
        CascadeConfig {
            na_spec: na,
            rh_spec: rh,
            na_features: vec!["x".into(), "y".into()],
            rh_features: vec!["x".into()],
            seed: 11,
        }
    }

    #[test]
    fn healthy_only_training_cannot_build_stage_two() {
        let matrix = toy_matrix(&[("M1", 20, 0), ("M2", 20, 0)]);
        let config = cascade_config(ModelSpec::Knn { k: 3 }, ModelSpec::Knn { k: 3 });
        assert!(matches!(
            train_cascade(&matrix, &config),
            Err(CascadeError::StageTwoUntrainable)
        ));
    }

    #[test]
    fn all_nine_stage_combinations_train() {
        let matrix = toy_matrix(&[("M1", 30, 0), ("M2", 20, 1), ("M3", 20, 2)]);
        let specs = [
            ModelSpec::Knn { k: 3 },
            ModelSpec::Forest { n_trees: 10 },
            ModelSpec::Mlp { hidden: 4, epochs: 200, learning_rate: 0.5 },
        ];
        for na in &specs {
            for rh in &specs {
                let model =
                    train_cascade(&matrix, &cascade_config(na.clone(), rh.clone())).unwrap();
                assert_eq!(model.rh_model.classes(), &[1, 2]);
                assert_eq!(model.na_model.classes(), &[0, 1]);
            }
        }
    }

    #[test]
    fn cascade_short_circuits_on_normal() {
        let matrix = toy_matrix(&[("M1", 30, 0), ("M2", 20, 1), ("M3", 20, 2)]);
        let config = cascade_config(ModelSpec::Knn { k: 1 }, ModelSpec::Knn { k: 1 });
        let model = train_cascade(&matrix, &config).unwrap();
        let mut stage_two_calls = 0usize;
        for row in 0..matrix.len() {
            let (state, used_stage_two) = predict_cascade_traced(&model, &matrix, row).unwrap();
            if state == StateLabel::Normal {
                assert!(!used_stage_two);
            } else {
                stage_two_calls += usize::from(used_stage_two);
            }
        }
        assert!(stage_two_calls > 0);
    }

    #[test]
    fn cascade_composition_matches_stagewise_predictions() {
        let matrix = toy_matrix(&[("M1", 30, 0), ("M2", 20, 1), ("M3", 20, 2)]);
        let config = cascade_config(ModelSpec::Forest { n_trees: 20 }, ModelSpec::Knn { k: 1 });
        let model = train_cascade(&matrix, &config).unwrap();
        for row in 0..matrix.len() {
            let combined = predict_cascade(&model, &matrix, row).unwrap();
            // Recompute by invoking the stages by hand.
            let na_row: Vec<f64> = config
                .na_features
                .iter()
                .map(|n| matrix.rows()[row].values[matrix.column(n).unwrap()].unwrap())
                .collect();
            let expected = if model.na_model.predict(&na_row).unwrap() == 0 {
                StateLabel::Normal
            } else {
                let rh_row: Vec<f64> = config
                    .rh_features
                    .iter()
                    .map(|n| matrix.rows()[row].values[matrix.column(n).unwrap()].unwrap())
                    .collect();
                StateLabel::from_u8(model.rh_model.predict(&rh_row).unwrap()).unwrap()
            };
            assert_eq!(combined, expected);
        }
    }

    #[test]
    fn ternary_model_emits_all_three_states() {
        let matrix = toy_matrix(&[("M1", 30, 0), ("M2", 20, 1), ("M3", 20, 2)]);
        let features = vec!["x".to_string()];
        let model = train_ternary(&matrix, &ModelSpec::Knn { k: 1 }, &features, 7).unwrap();
        assert_eq!(model.classes(), &[0, 1, 2]);
        // Deterministic per seed.
        let again = train_ternary(&matrix, &ModelSpec::Knn { k: 1 }, &features, 7).unwrap();
        assert_eq!(model, again);
    }

    /// A faulty-machine matrix whose labels follow a loop layout.
    fn loop_matrix(machines: &[(&str, usize, usize, usize)]) -> FeatureMatrix {
        let names = vec!["x".to_string(), "y".to_string()];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (machine, n1, n2, n3) in machines {
            let mut t = 0.0;
            for (count, label) in [(*n1, 0u8), (*n2, 1), (*n3, 2)] {
                for _ in 0..count {
                    rows.push(FeatureVector {
                        machine_id: machine.to_string(),
                        timestamp: t,
                        names: names.clone(),
                        values: vec![Some(f64::from(label) * 10.0), Some(t)],
                    });
                    labels.push(label);
                    t += 1.0;
                }
            }
        }
        FeatureMatrix::new(rows, Some(labels)).unwrap()
    }

    /// A model that memorizes the truth via the label-encoding feature.
    fn oracle_model(train: &FeatureMatrix) -> CascadeModel {
        let config = cascade_config(ModelSpec::Knn { k: 1 }, ModelSpec::Knn { k: 1 });
        train_cascade(train, &config).unwrap()
    }

    #[test]
    fn perfect_model_scores_ones_everywhere() {
        let train = loop_matrix(&[("M1", 10, 5, 5), ("M2", 10, 5, 5)]);
        let model = oracle_model(&train);
        let report = evaluate(&AnyModel::Cascade(&model), &train, Weights::default()).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.s, Some(1.0));
        assert_eq!(report.c, Some(1.0));
        for machine in &report.per_machine {
            assert!(machine.faulty);
            let opai = machine.opai.unwrap();
            assert_eq!((opai.accuracy, opai.s, opai.c), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn constant_normal_predictor_forfeits_deterioration_weight() {
        let test = loop_matrix(&[("M2", 10, 5, 5)]);
        // A single-class KNN answers normal for every row: it misses the
        // entire deterioration and forfeits at least the 0.3 + 0.5 weight.
        let always_normal = crate::classifiers::knn_train(
            &["x".to_string(), "y".to_string()],
            &[vec![0.0, 0.0]],
            &[0],
            1,
        )
        .unwrap();
        let report =
            evaluate(&AnyModel::Ternary(&always_normal), &test, Weights::default()).unwrap();
        let opai = report.per_machine[0].opai.unwrap();
        assert!(opai.accuracy < 1.0);
        let s = report.s.unwrap();
        assert!(s <= 0.5 + 1e-9, "S = {s}");
    }

    #[test]
    fn two_loop_fleet_averages_per_loop_scores() {
        let train = loop_matrix(&[("M1", 10, 5, 5)]);
        let model = oracle_model(&train);
        let test = loop_matrix(&[("M2", 10, 5, 5), ("M3", 8, 4, 4)]);
        let report = evaluate(&AnyModel::Cascade(&model), &test, Weights::default()).unwrap();
        // Manual per-loop computation.
        let mut per_loop_s = Vec::new();
        for machine in ["M2", "M3"] {
            let indices: Vec<usize> = (0..test.len())
                .filter(|i| test.rows()[*i].machine_id == machine)
                .collect();
            let truth: Vec<u8> = indices
                .iter()
                .map(|i| test.labels().unwrap()[*i])
                .collect();
            let predicted: Vec<u8> = indices
                .iter()
                .map(|i| predict_cascade(&model, &test, *i).unwrap().as_u8())
                .collect();
            let series = PredictionSeries::from_truth(&truth, predicted).unwrap();
            per_loop_s.push(crate::metrics::score_series(&series, Weights::default()).unwrap().s);
        }
        let expected = (per_loop_s[0] + per_loop_s[1]) / 2.0;
        assert!((report.s.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn healthy_machines_scored_separately() {
        let train = loop_matrix(&[("M1", 10, 5, 5)]);
        let model = oracle_model(&train);
        let mut test = loop_matrix(&[("M2", 10, 5, 5)]);
        // Add a healthy machine: all-normal truth.
        let healthy = toy_matrix(&[("M9", 12, 0)]);
        let mut rows = test.rows().to_vec();
        let mut labels = test.labels().unwrap().to_vec();
        for (i, row) in healthy.rows().iter().enumerate() {
            let mut r = row.clone();
            r.values = vec![Some(0.0), Some(100.0 + i as f64)];
            r.timestamp = 100.0 + i as f64;
            rows.push(r);
            labels.push(0);
        }
        test = FeatureMatrix::new(rows, Some(labels)).unwrap();
        let report = evaluate(&AnyModel::Cascade(&model), &test, Weights::default()).unwrap();
        let healthy_score = report
            .per_machine
            .iter()
            .find(|m| m.machine_id == "M9")
            .unwrap();
        assert!(!healthy_score.faulty);
        assert!(healthy_score.opai.is_none());
        assert_eq!(healthy_score.normal_consistency, Some(1.0));
        assert_eq!(report.healthy_consistency, Some(1.0));
    }

    #[test]
    fn unlabeled_test_data_is_rejected() {
        let train = loop_matrix(&[("M1", 10, 5, 5)]);
        let model = oracle_model(&train);
        let unlabeled = FeatureMatrix::new(train.rows().to_vec(), None).unwrap();
        assert!(matches!(
            evaluate(&AnyModel::Cascade(&model), &unlabeled, Weights::default()),
            Err(CascadeError::UnlabeledData)
        ));
    }

    #[test]
    fn ranking_prefers_s_then_c_then_accuracy() {
        let mk = |name: &str, s: f64, c: f64, acc: f64| ModelCandidate {
            name: name.into(),
            kind: "cascade".into(),
            train_accuracy: 0.9,
            train_s: Some(0.9),
            train_c: Some(0.9),
            test_accuracy: acc,
            test_s: Some(s),
            test_c: Some(c),
        };
        let candidates = vec![
            mk("a", 0.7, 0.9, 0.7),
            mk("b", 0.8, 0.5, 0.7),
            mk("c", 0.8, 0.6, 0.7),
            mk("d", 0.8, 0.6, 0.8),
        ];
        let order = select_model(&candidates);
        assert_eq!(order, vec![3, 2, 1, 0]);
    }

    #[test]
    fn ranking_reproduces_published_style_grid() {
        // Test-set S and C pairs of nine cascade combinations; the knn+mlp
        // pair holds the highest S and wins.
        let grid = [
            ("knn+knn", 0.7135, 0.7199),
            ("knn+forest", 0.6983, 0.8879),
            ("knn+mlp", 0.7616, 0.8736),
            ("forest+knn", 0.6555, 0.9541),
            ("forest+forest", 0.675, 0.9998),
            ("forest+mlp", 0.6915, 0.9946),
            ("mlp+knn", 0.6555, 0.9541),
            ("mlp+forest", 0.6555, 0.9541),
            ("mlp+mlp", 0.6915, 0.9946),
        ];
        let candidates: Vec<ModelCandidate> = grid
            .iter()
            .map(|(name, s, c)| ModelCandidate {
                name: name.to_string(),
                kind: "cascade".into(),
                train_accuracy: 0.9,
                train_s: Some(0.9),
                train_c: Some(0.75),
                test_accuracy: 0.69,
                test_s: Some(*s),
                test_c: Some(*c),
            })
            .collect();
        let order = select_model(&candidates);
        assert_eq!(candidates[order[0]].name, "knn+mlp");
    }
}
