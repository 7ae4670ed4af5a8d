//! End-to-end pipeline steps shared by the CLI and the integration tests:
//! featurization, per-target feature selection, grid training, evaluation,
//! and standalone prediction scoring.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cascade::{
    evaluate, label_at, select_model, split, train_cascade, train_ternary, AnyModel,
    CascadeConfig, CascadeError, CascadeModel, EvaluationReport, ModelCandidate,
};
use crate::classifiers::{kfold_cv, ClassifierError, CvReport, TrainedModel};
use crate::config::{Config, ConfigError};
use crate::features::{assemble, FeatureError, FeatureMatrix};
use crate::io::{IoError, ManifestEntry, PredictionRow};
use crate::metrics::{
    multi_loop_opai, score_series, sequence_consistency, MetricsError, OpaiReport,
    PredictionSeries, Weights,
};
use crate::seeding::derive_seed;
use crate::selection::{cv_filter, gini_filter, SelectionError};
use crate::signal::{wavelet_denoise, SignalError, WaveArray};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("machine {0} is not listed in the manifest")]
    UnknownMachine(String),
    #[error("feature selection left no features for the {0} target")]
    EmptySelection(&'static str),
    #[error("prediction file: loop {loop_id}: {message}")]
    BadLoop { loop_id: String, message: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Denoise (optionally) and extract the 144-feature record of every wave
/// array, labeling each row from the manifest's failure times.
pub fn featurize(
    arrays: &[WaveArray],
    manifest: &[ManifestEntry],
    denoise: bool,
) -> Result<FeatureMatrix, PipelineError> {
    let failure_of: BTreeMap<&str, Option<f64>> = manifest
        .iter()
        .map(|e| (e.machine_id.as_str(), e.failure_time))
        .collect();
    let mut rows = Vec::with_capacity(arrays.len());
    let mut labels = Vec::with_capacity(arrays.len());
    for array in arrays {
        let failure = failure_of
            .get(array.machine_id())
            .ok_or_else(|| PipelineError::UnknownMachine(array.machine_id().to_string()))?;
        let prepared = if denoise {
            array.map_waves(wavelet_denoise)?
        } else {
            array.clone()
        };
        rows.push(assemble(&prepared)?);
        labels.push(label_at(array.timestamp(), *failure).as_u8());
    }
    Ok(FeatureMatrix::new(rows, Some(labels))?)
}

/// The retained feature lists of the three classification targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedFeatures {
    pub na: Vec<String>,
    pub rh: Vec<String>,
    pub ternary: Vec<String>,
}

/// Two-stage selection per target, on training rows only: one shared
/// coefficient-of-variation pass, then a per-target importance filter
/// against that target's labels (normal-vs-abnormal, risky-vs-high-risk on
/// abnormal rows, and ternary).
pub fn select_feature_lists(
    train: &FeatureMatrix,
    config: &Config,
) -> Result<SelectedFeatures, PipelineError> {
    let labels = train
        .labels()
        .ok_or(CascadeError::UnlabeledData)?
        .to_vec();
    let cv_kept = cv_filter(train, config.selection.cv_threshold)?;
    if cv_kept.is_empty() {
        return Err(PipelineError::EmptySelection("cv"));
    }
    let reduced = train.select(&cv_kept)?;
    let seed = config.data.seed;
    let trees = config.selection.forest_trees;
    let threshold = config.selection.gini_threshold;

    let na_labels: Vec<u8> = labels.iter().map(|l| u8::from(*l != 0)).collect();
    let na_matrix = reduced.with_labels(na_labels)?;
    let na = gini_filter(&na_matrix, threshold, trees, derive_seed(seed, 21))?;

    let abnormal_idx: Vec<usize> = (0..reduced.len()).filter(|i| labels[*i] != 0).collect();
    let rh_matrix = reduced.take_rows(&abnormal_idx);
    let rh = gini_filter(&rh_matrix, threshold, trees, derive_seed(seed, 22))?;

    let ternary = gini_filter(&reduced, threshold, trees, derive_seed(seed, 23))?;

    for (name, list) in [("na", &na), ("rh", &rh), ("ternary", &ternary)] {
        if list.is_empty() {
            return Err(PipelineError::EmptySelection(match name {
                "na" => "na",
                "rh" => "rh",
                _ => "ternary",
            }));
        }
    }
    Ok(SelectedFeatures { na, rh, ternary })
}

/// One cross-validation row of the training report.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub task: String,
    pub algorithm: String,
    pub report: CvReport,
}

/// All trained models of one run: the cascade grid plus the ternary
/// baselines, with the per-stage cross-validation scores.
pub struct TrainedSuite {
    pub cascades: Vec<(String, CascadeModel)>,
    pub ternaries: Vec<(String, TrainedModel)>,
    pub cv_rows: Vec<CvRow>,
}

/// Train every cascade combination and ternary baseline named in the config.
pub fn train_all(
    train: &FeatureMatrix,
    lists: &SelectedFeatures,
    config: &Config,
) -> Result<TrainedSuite, PipelineError> {
    let algorithms = &config.cascade.algorithms;
    let seed = config.data.seed;
    let folds = config.classifiers.cv_folds;
    let labels = train.labels().ok_or(CascadeError::UnlabeledData)?.to_vec();

    // Stage-level cross-validation (algorithm selection view): each task is
    // scored on its own under-sampled, feature-restricted training matrix.
    let mut cv_rows = Vec::new();
    {
        let na_labels: Vec<u8> = labels.iter().map(|l| u8::from(*l != 0)).collect();
        let na_matrix =
            crate::cascade::undersample(&train.with_labels(na_labels)?, derive_seed(seed, 31))?;
        let abnormal_idx: Vec<usize> = (0..train.len()).filter(|i| labels[*i] != 0).collect();
        let rh_matrix =
            crate::cascade::undersample(&train.take_rows(&abnormal_idx), derive_seed(seed, 32))?;
        let ternary_matrix = crate::cascade::undersample(train, derive_seed(seed, 33))?;
        for (task, matrix, list) in [
            ("na", &na_matrix, &lists.na),
            ("rh", &rh_matrix, &lists.rh),
            ("ternary", &ternary_matrix, &lists.ternary),
        ] {
            let selected = matrix.select(list)?;
            let rows = selected.to_dense()?;
            let task_labels = selected.labels().unwrap().to_vec();
            let timestamps = selected.timestamps();
            for algorithm in algorithms {
                let spec = config.classifiers.spec(algorithm)?;
                let report = kfold_cv(
                    list,
                    &rows,
                    &task_labels,
                    &timestamps,
                    &spec,
                    folds,
                    derive_seed(seed, 34),
                )?;
                cv_rows.push(CvRow {
                    task: task.to_string(),
                    algorithm: algorithm.clone(),
                    report,
                });
            }
        }
    }

    let mut cascades = Vec::new();
    for na_algo in algorithms {
        for rh_algo in algorithms {
            let cascade_config = CascadeConfig {
                na_spec: config.classifiers.spec(na_algo)?,
                rh_spec: config.classifiers.spec(rh_algo)?,
                na_features: lists.na.clone(),
                rh_features: lists.rh.clone(),
                seed: derive_seed(seed, 40),
            };
            let model = train_cascade(train, &cascade_config)?;
            cascades.push((format!("{na_algo}+{rh_algo}"), model));
        }
    }

    let mut ternaries = Vec::new();
    for algorithm in algorithms {
        let spec = config.classifiers.spec(algorithm)?;
        let model = train_ternary(train, &spec, &lists.ternary, derive_seed(seed, 41))?;
        ternaries.push((algorithm.clone(), model));
    }

    Ok(TrainedSuite {
        cascades,
        ternaries,
        cv_rows,
    })
}

/// Cross-validation report rows as CSV.
pub fn cv_report_csv(rows: &[CvRow]) -> String {
    let mut out = String::from("task,algorithm,mean_accuracy,mean_consistency,stratified\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.task,
            row.algorithm,
            row.report.mean_accuracy,
            row.report.mean_consistency,
            row.report.stratified,
        ));
    }
    out
}

/// Everything the evaluation pass produces: one candidate per model with
/// train-set re-test and test-set scores, the ranking order (indices into
/// `candidates`, best first), and the per-model test reports.
pub struct EvaluationOutcome {
    pub candidates: Vec<ModelCandidate>,
    pub ranking: Vec<usize>,
    pub test_reports: Vec<(String, EvaluationReport)>,
}

/// Evaluate every model of the suite on the train-set re-test and the test
/// set.
pub fn evaluate_all(
    suite: &TrainedSuite,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    weights: Weights,
) -> Result<EvaluationOutcome, PipelineError> {
    let mut candidates = Vec::new();
    let mut test_reports = Vec::new();

    let mut add = |name: String, kind: &str, model: AnyModel| -> Result<(), PipelineError> {
        let on_train = evaluate(&model, train, weights)?;
        let on_test = evaluate(&model, test, weights)?;
        candidates.push(ModelCandidate {
            name: name.clone(),
            kind: kind.to_string(),
            train_accuracy: on_train.accuracy,
            train_s: on_train.s,
            train_c: on_train.c,
            test_accuracy: on_test.accuracy,
            test_s: on_test.s,
            test_c: on_test.c,
        });
        test_reports.push((name, on_test));
        Ok(())
    };

    for (name, model) in &suite.cascades {
        add(name.clone(), "cascade", AnyModel::Cascade(model))?;
    }
    for (name, model) in &suite.ternaries {
        add(format!("{name} ternary"), "ternary", AnyModel::Ternary(model))?;
    }

    let ranking = select_model(&candidates);
    Ok(EvaluationOutcome {
        candidates,
        ranking,
        test_reports,
    })
}

/// Split a labeled feature matrix per the config's strategy.
pub fn split_by_config(
    matrix: &FeatureMatrix,
    config: &Config,
) -> Result<(FeatureMatrix, FeatureMatrix), PipelineError> {
    Ok(split(matrix, &config.split_strategy())?)
}

/// Scores of one loop from a standalone prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopScore {
    pub loop_id: String,
    pub rows: usize,
    pub faulty: bool,
    pub accuracy: f64,
    pub opai: Option<OpaiReport>,
    /// Prediction consistency for all-normal loops (no layout to score).
    pub consistency: Option<f64>,
}

/// Aggregate scores of a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub loops: Vec<LoopScore>,
    pub accuracy: f64,
    pub s: Option<f64>,
    pub c: Option<f64>,
}

/// Score a standalone prediction file: rows are grouped by loop id and
/// ordered by timestamp; each loop whose truth covers all three intervals is
/// scored with the full index, all-normal loops contribute accuracy and
/// consistency.
pub fn score_predictions(
    rows: &[PredictionRow],
    weights: Weights,
) -> Result<ScoreReport, PipelineError> {
    if rows.is_empty() {
        return Err(PipelineError::BadLoop {
            loop_id: "-".into(),
            message: "no prediction rows".into(),
        });
    }
    let mut loop_ids: Vec<String> = rows.iter().map(|r| r.loop_id.clone()).collect();
    loop_ids.sort();
    loop_ids.dedup();

    let mut loops = Vec::new();
    let mut series_list = Vec::new();
    let mut total_correct = 0usize;
    for loop_id in &loop_ids {
        let mut loop_rows: Vec<&PredictionRow> =
            rows.iter().filter(|r| &r.loop_id == loop_id).collect();
        loop_rows.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
        let truth: Vec<u8> = loop_rows.iter().map(|r| r.truth).collect();
        let predicted: Vec<u8> = loop_rows.iter().map(|r| r.predicted).collect();
        let correct = truth
            .iter()
            .zip(&predicted)
            .filter(|(t, p)| t == p)
            .count();
        total_correct += correct;
        let accuracy = correct as f64 / truth.len() as f64;

        if truth.iter().any(|t| *t != 0) {
            let series =
                PredictionSeries::from_truth(&truth, predicted).map_err(|e| {
                    PipelineError::BadLoop {
                        loop_id: loop_id.clone(),
                        message: e.to_string(),
                    }
                })?;
            let report = score_series(&series, weights)?;
            series_list.push(series);
            loops.push(LoopScore {
                loop_id: loop_id.clone(),
                rows: truth.len(),
                faulty: true,
                accuracy,
                opai: Some(report),
                consistency: None,
            });
        } else {
            loops.push(LoopScore {
                loop_id: loop_id.clone(),
                rows: truth.len(),
                faulty: false,
                accuracy,
                opai: None,
                consistency: Some(sequence_consistency(&predicted)),
            });
        }
    }

    let pooled = if series_list.is_empty() {
        None
    } else {
        Some(multi_loop_opai(&series_list, weights)?)
    };
    Ok(ScoreReport {
        accuracy: total_correct as f64 / rows.len() as f64,
        s: pooled.map(|p| p.s),
        c: pooled.map(|p| p.c),
        loops,
    })
}

/// Score report as CSV: one row per loop plus an `overall` row.
pub fn score_report_csv(report: &ScoreReport) -> String {
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let mut out =
        String::from("loop_id,rows,faulty,accuracy,s,c,c1,c2,c3,consistency\n");
    for l in &report.loops {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            l.loop_id,
            l.rows,
            l.faulty,
            l.accuracy,
            fmt_opt(l.opai.map(|o| o.s)),
            fmt_opt(l.opai.map(|o| o.c)),
            fmt_opt(l.opai.map(|o| o.c1)),
            fmt_opt(l.opai.map(|o| o.c2)),
            fmt_opt(l.opai.map(|o| o.c3)),
            fmt_opt(l.consistency),
        ));
    }
    let total_rows: usize = report.loops.iter().map(|l| l.rows).sum();
    out.push_str(&format!(
        "overall,{},,{},{},{},,,,\n",
        total_rows,
        report.accuracy,
        fmt_opt(report.s),
        fmt_opt(report.c),
    ));
    out
}

/// Human-readable score report.
pub fn score_report_text(report: &ScoreReport) -> String {
    let mut out = String::new();
    for l in &report.loops {
        match (&l.opai, l.consistency) {
            (Some(o), _) => out.push_str(&format!(
                "loop {}: accuracy {:.4}, S {:.4}, C {:.4} (C1 {:.4}, C2 {:.4}, C3 {:.4})\n",
                l.loop_id, l.accuracy, o.s, o.c, o.c1, o.c2, o.c3
            )),
            (None, Some(c)) => out.push_str(&format!(
                "loop {}: all-normal, accuracy {:.4}, consistency {:.4} (S not applicable)\n",
                l.loop_id, l.accuracy, c
            )),
            (None, None) => {}
        }
    }
    out.push_str(&format!("overall accuracy {:.4}", report.accuracy));
    if let (Some(s), Some(c)) = (report.s, report.c) {
        out.push_str(&format!(", S {s:.4}, C {c:.4}"));
    }
    out.push('\n');
    out
}
