//! Online prediction ability scoring.
//!
//! A run-to-failure loop is split into three intervals: `N1` normal samples,
//! `N2` risky samples, and `N3` high-risk samples. Two scores evaluate an
//! online predictor over such a loop:
//!
//! * **S** — time-weighted accuracy. Each misclassified sample contributes a
//!   penalty: constant inside the normal interval, logarithmically growing
//!   inside the risky interval, quadratically growing inside the high-risk
//!   interval. The adjustment coefficients `alpha`, `beta`, `gamma` are
//!   calibrated so an all-wrong prediction forfeits exactly the configured
//!   interval weights (20% / 30% / 50% by default), which pins `S` to `[0, 1]`.
//! * **C** — consistency. For each interval, one minus the mean squared
//!   difference of consecutive predictions; the three interval scores are
//!   averaged. Constant predictions give 1; flicker between states 0 and 2
//!   drives an interval score down to -3.
//!
//! Plain accuracy, multi-loop aggregation, and seeded archetype prediction
//! sequences (five canonical failure-prediction behaviours useful for
//! demonstrating the index) round out the module.
//!
//! # Example
//!
//! ```
//! use rotor_prognosis::metrics::{calibrate, s_score, LoopLayout, PredictionSeries, Weights};
//!
//! let layout = LoopLayout::new(4, 3, 2).unwrap();
//! let calib = calibrate(layout, Weights::default()).unwrap();
//!
//! // Miss only the very last high-risk sample: the single most expensive
//! // mistake this loop admits.
//! let mut predicted = layout.truth();
//! predicted[8] = 1;
//! let series = PredictionSeries::new(predicted, layout).unwrap();
//! let s = s_score(&series, &calib).unwrap();
//! assert!((s - 0.685183).abs() < 1e-6);
//! ```

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from scoring and calibration.
#[derive(Debug, Error)]
pub enum MetricsError {
    /// Layout violates `N1 >= 2`, `N2 >= 1`, or `N3 >= 1`.
    #[error("degenerate layout: need N1 >= 2, N2 >= 1, N3 >= 1, got ({n1}, {n2}, {n3})")]
    DegenerateLayout { n1: usize, n2: usize, n3: usize },
    /// `N2 = 1` leaves no degree of freedom for `beta` unless the risky
    /// weight is already exhausted by the `alpha` term.
    #[error("infeasible calibration: N2 = 1 requires w2 = N2*alpha*ln(N1), residual {residual:e}")]
    InfeasibleCalibration { residual: f64 },
    /// Series/layout/calibration mismatch or malformed input.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Requested archetype accuracy cannot be realized on the layout.
    #[error("infeasible accuracy {accuracy} for archetype kind {kind} on layout ({n1}, {n2}, {n3})")]
    InfeasibleAccuracy {
        kind: u8,
        accuracy: f64,
        n1: usize,
        n2: usize,
        n3: usize,
    },
}

/// Sample counts of the normal / risky / high-risk intervals of one loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopLayout {
    n1: usize,
    n2: usize,
    n3: usize,
}

impl LoopLayout {
    /// Build a layout, enforcing `N1 >= 2`, `N2 >= 1`, `N3 >= 1`.
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self, MetricsError> {
        if n1 < 2 || n2 < 1 || n3 < 1 {
            return Err(MetricsError::DegenerateLayout { n1, n2, n3 });
        }
        Ok(Self { n1, n2, n3 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    /// Total sample count `N = N1 + N2 + N3`.
    pub fn total(&self) -> usize {
        self.n1 + self.n2 + self.n3
    }

    /// True state for the sample at `index` (0-based within the loop).
    pub fn truth_at(&self, index: usize) -> u8 {
        if index < self.n1 {
            0
        } else if index < self.n1 + self.n2 {
            1
        } else {
            2
        }
    }

    /// The truth sequence implied by the layout.
    pub fn truth(&self) -> Vec<u8> {
        (0..self.total()).map(|i| self.truth_at(i)).collect()
    }
}

/// Interval score weights; must be non-negative and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Weights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, MetricsError> {
        if !(w1 >= 0.0 && w2 >= 0.0 && w3 >= 0.0) {
            return Err(MetricsError::InvalidInput(format!(
                "weights must be non-negative, got ({w1}, {w2}, {w3})"
            )));
        }
        if ((w1 + w2 + w3) - 1.0).abs() > 1e-9 {
            return Err(MetricsError::InvalidInput(format!(
                "weights must sum to 1, got {}",
                w1 + w2 + w3
            )));
        }
        Ok(Self { w1, w2, w3 })
    }
}

impl Default for Weights {
    /// 20% normal, 30% risky, 50% high-risk.
    fn default() -> Self {
        Self {
            w1: 0.2,
            w2: 0.3,
            w3: 0.5,
        }
    }
}

/// Calibrated penalty coefficients for one layout.
///
/// `alpha`, `beta`, `gamma` solve the triangular system that makes an
/// all-wrong prediction accumulate exactly `w1` / `w2` / `w3` of error in the
/// normal / risky / high-risk interval respectively:
///
/// ```text
/// alpha = w1 / (N1 ln N1)
/// beta  = (w2 - N2 alpha ln N1) / sum_{j=1..N2} ln j
/// gamma = (w3 - N3 (beta ln N2 + alpha ln N1)) / sum_{j=1..N3} j^2
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    alpha: f64,
    beta: f64,
    gamma: f64,
    weights: Weights,
    layout: LoopLayout,
}

impl Calibration {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weights(&self) -> Weights {
        self.weights
    }

    pub fn layout(&self) -> LoopLayout {
        self.layout
    }

    /// False when `beta < 0` or `gamma < 0`. An infeasible calibration still
    /// scores, but `S` is no longer guaranteed to stay in `[0, 1]` and the
    /// high-risk-costs-most monotonicity is void.
    pub fn is_feasible(&self) -> bool {
        self.beta >= 0.0 && self.gamma >= 0.0
    }

    /// Penalty charged when the sample at `index` (0-based) is misclassified.
    pub fn error_at(&self, index: usize) -> f64 {
        let n1 = self.layout.n1 as f64;
        let ln_n1 = n1.ln();
        if index < self.layout.n1 {
            self.alpha * ln_n1
        } else if index < self.layout.n1 + self.layout.n2 {
            // local index j = 1 for the first risky sample, so ln j = 0 and
            // the first risky error costs exactly alpha ln N1.
            let j = (index - self.layout.n1 + 1) as f64;
            self.beta * j.ln() + self.alpha * ln_n1
        } else {
            let j = (index - self.layout.n1 - self.layout.n2 + 1) as f64;
            let ln_n2 = (self.layout.n2 as f64).ln();
            self.gamma * j * j + self.beta * ln_n2 + self.alpha * ln_n1
        }
    }
}

/// Solve for the penalty coefficients of a layout under the given weights.
pub fn calibrate(layout: LoopLayout, weights: Weights) -> Result<Calibration, MetricsError> {
    let n1 = layout.n1 as f64;
    let n2 = layout.n2 as f64;
    let n3 = layout.n3 as f64;
    let ln_n1 = n1.ln();

    let alpha = weights.w1 / (n1 * ln_n1);

    let log_sum: f64 = (1..=layout.n2).map(|j| (j as f64).ln()).sum();
    let beta_numerator = weights.w2 - n2 * alpha * ln_n1;
    let beta = if layout.n2 == 1 {
        if beta_numerator.abs() > 1e-12 {
            return Err(MetricsError::InfeasibleCalibration {
                residual: beta_numerator,
            });
        }
        0.0
    } else {
        beta_numerator / log_sum
    };

    let sq_sum: f64 = (1..=layout.n3).map(|j| (j as f64) * (j as f64)).sum();
    let gamma = (weights.w3 - n3 * (beta * n2.ln() + alpha * ln_n1)) / sq_sum;

    Ok(Calibration {
        alpha,
        beta,
        gamma,
        weights,
        layout,
    })
}

/// A truth/prediction pair over one loop. The truth is always
/// interval-constant: `N1` zeros, then `N2` ones, then `N3` twos.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSeries {
    truth: Vec<u8>,
    predicted: Vec<u8>,
    layout: LoopLayout,
}

impl PredictionSeries {
    /// Build a series from predictions and a layout; the truth sequence is
    /// implied by the layout.
    pub fn new(predicted: Vec<u8>, layout: LoopLayout) -> Result<Self, MetricsError> {
        if predicted.len() != layout.total() {
            return Err(MetricsError::InvalidInput(format!(
                "prediction length {} does not match layout total {}",
                predicted.len(),
                layout.total()
            )));
        }
        if let Some(bad) = predicted.iter().find(|s| **s > 2) {
            return Err(MetricsError::InvalidInput(format!(
                "state {bad} outside {{0, 1, 2}}"
            )));
        }
        Ok(Self {
            truth: layout.truth(),
            predicted,
            layout,
        })
    }

    /// Build a series from an explicit truth sequence, deriving the layout.
    /// The truth must consist of a run of 0s, then 1s, then 2s.
    pub fn from_truth(truth: &[u8], predicted: Vec<u8>) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::InvalidInput(format!(
                "truth length {} != prediction length {}",
                truth.len(),
                predicted.len()
            )));
        }
        let n1 = truth.iter().take_while(|s| **s == 0).count();
        let n2 = truth[n1..].iter().take_while(|s| **s == 1).count();
        let n3 = truth[n1 + n2..].iter().take_while(|s| **s == 2).count();
        if n1 + n2 + n3 != truth.len() {
            return Err(MetricsError::InvalidInput(
                "truth is not an interval-constant 0..1..2 sequence".into(),
            ));
        }
        let layout = LoopLayout::new(n1, n2, n3)?;
        Self::new(predicted, layout)
    }

    pub fn truth(&self) -> &[u8] {
        &self.truth
    }

    pub fn predicted(&self) -> &[u8] {
        &self.predicted
    }

    pub fn layout(&self) -> LoopLayout {
        self.layout
    }
}

/// Time-weighted accuracy `S = 1 - sum of per-sample penalties`.
pub fn s_score(series: &PredictionSeries, calib: &Calibration) -> Result<f64, MetricsError> {
    if calib.layout != series.layout {
        return Err(MetricsError::InvalidInput(format!(
            "calibration layout ({}, {}, {}) does not match series layout ({}, {}, {})",
            calib.layout.n1,
            calib.layout.n2,
            calib.layout.n3,
            series.layout.n1,
            series.layout.n2,
            series.layout.n3
        )));
    }
    let total_error: f64 = series
        .truth
        .iter()
        .zip(&series.predicted)
        .enumerate()
        .filter(|(_, (t, p))| t != p)
        .map(|(i, _)| calib.error_at(i))
        .sum();
    Ok(1.0 - total_error)
}

/// Per-interval consistency scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyScores {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Consistency of one undivided prediction sequence:
/// `1 - mean squared difference of consecutive predictions`.
/// Sequences shorter than 2 score 1 (no transitions to penalize).
pub fn sequence_consistency(predicted: &[u8]) -> f64 {
    if predicted.len() < 2 {
        return 1.0;
    }
    let sum: f64 = predicted
        .windows(2)
        .map(|w| {
            let d = f64::from(w[1]) - f64::from(w[0]);
            d * d
        })
        .sum();
    1.0 - sum / (predicted.len() - 1) as f64
}

/// Consistency `C` and its per-interval components. Differences are taken
/// only between consecutive predictions inside the same interval; the jumps
/// across interval boundaries are never counted. Intervals with fewer than
/// two samples score 1.
pub fn c_score(predicted: &[u8], layout: LoopLayout) -> Result<ConsistencyScores, MetricsError> {
    if predicted.len() != layout.total() {
        return Err(MetricsError::InvalidInput(format!(
            "prediction length {} does not match layout total {}",
            predicted.len(),
            layout.total()
        )));
    }
    let n1 = layout.n1;
    let n2 = layout.n2;
    let c1 = sequence_consistency(&predicted[..n1]);
    let c2 = sequence_consistency(&predicted[n1..n1 + n2]);
    let c3 = sequence_consistency(&predicted[n1 + n2..]);
    Ok(ConsistencyScores {
        c: (c1 + c2 + c3) / 3.0,
        c1,
        c2,
        c3,
    })
}

/// Fraction of correctly predicted samples.
pub fn accuracy(series: &PredictionSeries) -> f64 {
    let matches = series
        .truth
        .iter()
        .zip(&series.predicted)
        .filter(|(t, p)| t == p)
        .count();
    matches as f64 / series.truth.len() as f64
}

/// Accuracy, `S`, and `C` for one or more loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpaiReport {
    pub accuracy: f64,
    pub s: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Score a single loop: calibrate its layout, then compute accuracy, `S`,
/// and `C`.
pub fn score_series(series: &PredictionSeries, weights: Weights) -> Result<OpaiReport, MetricsError> {
    let calib = calibrate(series.layout, weights)?;
    let s = s_score(series, &calib)?;
    let cons = c_score(&series.predicted, series.layout)?;
    Ok(OpaiReport {
        accuracy: accuracy(series),
        s,
        c: cons.c,
        c1: cons.c1,
        c2: cons.c2,
        c3: cons.c3,
    })
}

/// Aggregate several loops: accuracy is pooled over all samples, while `S`
/// and `C` are computed per loop (each loop calibrated on its own layout)
/// and averaged with equal loop weights.
pub fn multi_loop_opai(
    loops: &[PredictionSeries],
    weights: Weights,
) -> Result<OpaiReport, MetricsError> {
    if loops.is_empty() {
        return Err(MetricsError::InvalidInput(
            "multi-loop aggregation needs at least one loop".into(),
        ));
    }
    let mut matches = 0usize;
    let mut total = 0usize;
    let mut s_sum = 0.0;
    let mut c_sum = 0.0;
    let mut c1_sum = 0.0;
    let mut c2_sum = 0.0;
    let mut c3_sum = 0.0;
    for series in loops {
        let report = score_series(series, weights)?;
        matches += series
            .truth
            .iter()
            .zip(&series.predicted)
            .filter(|(t, p)| t == p)
            .count();
        total += series.truth.len();
        s_sum += report.s;
        c_sum += report.c;
        c1_sum += report.c1;
        c2_sum += report.c2;
        c3_sum += report.c3;
    }
    let k = loops.len() as f64;
    Ok(OpaiReport {
        accuracy: matches as f64 / total as f64,
        s: s_sum / k,
        c: c_sum / k,
        c1: c1_sum / k,
        c2: c2_sum / k,
        c3: c3_sum / k,
    })
}

/// The five canonical online-predictor behaviours. Each generates a
/// prediction sequence at a target accuracy whose errors are placed the way
/// the archetype describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchetypeKind {
    /// Correct in normal and risky; misses concentrate at the end of the
    /// high-risk interval (the most expensive misses possible).
    MissesHighRisk = 1,
    /// Correct in normal and high-risk; errors concentrate in the risky
    /// interval, flickering between states 0 and 2.
    UnstableRisky = 2,
    /// All deterioration correct; false alarms (flickering between 1 and 2)
    /// inside the normal interval.
    FalseAlarms = 3,
    /// High-risk correct; unstable around the normal/risky boundary.
    UnstableBoundary = 4,
    /// Normal correct; poor at the end of risky and the start of high-risk.
    LateRecognition = 5,
}

impl ArchetypeKind {
    pub fn from_index(kind: u8) -> Result<Self, MetricsError> {
        match kind {
            1 => Ok(Self::MissesHighRisk),
            2 => Ok(Self::UnstableRisky),
            3 => Ok(Self::FalseAlarms),
            4 => Ok(Self::UnstableBoundary),
            5 => Ok(Self::LateRecognition),
            _ => Err(MetricsError::InvalidInput(format!(
                "archetype kind must be 1..=5, got {kind}"
            ))),
        }
    }
}

/// Generate the archetype prediction sequence for `kind` at
/// `target_accuracy` on `layout`. Deterministic given `seed`; the seed only
/// moves error runs within their interval and flips alternation parity.
pub fn archetype_series(
    kind: ArchetypeKind,
    layout: LoopLayout,
    target_accuracy: f64,
    seed: u64,
) -> Result<PredictionSeries, MetricsError> {
    if !(0.0..=1.0).contains(&target_accuracy) {
        return Err(MetricsError::InvalidInput(format!(
            "target accuracy must lie in [0, 1], got {target_accuracy}"
        )));
    }
    let n = layout.total();
    let errors = ((1.0 - target_accuracy) * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut predicted = layout.truth();

    let infeasible = |k: ArchetypeKind| MetricsError::InfeasibleAccuracy {
        kind: k as u8,
        accuracy: target_accuracy,
        n1: layout.n1,
        n2: layout.n2,
        n3: layout.n3,
    };

    // Write a run of `count` wrong values starting at `start`, alternating
    // between the two given wrong states.
    let write_run = |predicted: &mut [u8], start: usize, count: usize, states: [u8; 2], parity: bool| {
        for (offset, slot) in predicted[start..start + count].iter_mut().enumerate() {
            *slot = states[usize::from((offset % 2 == 0) != parity)];
        }
    };

    let seeded_start = |rng: &mut ChaCha8Rng, lo: usize, slack: usize| {
        if slack == 0 {
            lo
        } else {
            lo + rng.random_range(0..=slack)
        }
    };

    match kind {
        ArchetypeKind::MissesHighRisk => {
            if errors > layout.n3 {
                return Err(infeasible(kind));
            }
            // The last `errors` high-risk samples are predicted risky.
            let start = n - errors;
            for slot in predicted[start..].iter_mut() {
                *slot = 1;
            }
        }
        ArchetypeKind::UnstableRisky => {
            if errors > layout.n2 {
                return Err(infeasible(kind));
            }
            let start = seeded_start(&mut rng, layout.n1, layout.n2 - errors);
            let parity = rng.random_range(0..2) == 1;
            write_run(&mut predicted, start, errors, [0, 2], parity);
        }
        ArchetypeKind::FalseAlarms => {
            if errors > layout.n1 {
                return Err(infeasible(kind));
            }
            let start = seeded_start(&mut rng, 0, layout.n1 - errors);
            let parity = rng.random_range(0..2) == 1;
            write_run(&mut predicted, start, errors, [1, 2], parity);
        }
        ArchetypeKind::UnstableBoundary => {
            if errors > layout.n1 + layout.n2 {
                return Err(infeasible(kind));
            }
            let mut in_normal = errors / 2;
            let mut in_risky = errors - in_normal;
            if in_normal > layout.n1 {
                in_risky += in_normal - layout.n1;
                in_normal = layout.n1;
            }
            if in_risky > layout.n2 {
                in_normal += in_risky - layout.n2;
                in_risky = layout.n2;
            }
            let parity_n = rng.random_range(0..2) == 1;
            let parity_r = rng.random_range(0..2) == 1;
            // Unstable region straddles the normal/risky boundary.
            write_run(&mut predicted, layout.n1 - in_normal, in_normal, [1, 2], parity_n);
            write_run(&mut predicted, layout.n1, in_risky, [0, 2], parity_r);
        }
        ArchetypeKind::LateRecognition => {
            if errors > layout.n2 + layout.n3 {
                return Err(infeasible(kind));
            }
            let mut in_risky = errors / 2;
            let mut in_high = errors - in_risky;
            if in_risky > layout.n2 {
                in_high += in_risky - layout.n2;
                in_risky = layout.n2;
            }
            if in_high > layout.n3 {
                in_risky += in_high - layout.n3;
                in_high = layout.n3;
            }
            let parity_r = rng.random_range(0..2) == 1;
            let parity_h = rng.random_range(0..2) == 1;
            // Errors cluster around the risky/high-risk transition.
            let boundary = layout.n1 + layout.n2;
            write_run(&mut predicted, boundary - in_risky, in_risky, [0, 2], parity_r);
            write_run(&mut predicted, boundary, in_high, [1, 0], parity_h);
        }
    }

    PredictionSeries::new(predicted, layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    /// Independent oracle: per-interval error sums of an all-wrong series,
    /// by brute-force summation of the piecewise penalty definition.
    fn all_wrong_interval_sums(calib: &Calibration) -> (f64, f64, f64) {
        let layout = calib.layout();
        let ln_n1 = (layout.n1() as f64).ln();
        let ln_n2 = (layout.n2() as f64).ln();
        let normal: f64 = (0..layout.n1()).map(|_| calib.alpha() * ln_n1).sum();
        let risky: f64 = (1..=layout.n2())
            .map(|j| calib.beta() * (j as f64).ln() + calib.alpha() * ln_n1)
            .sum();
        let high: f64 = (1..=layout.n3())
            .map(|j| calib.gamma() * (j as f64).powi(2) + calib.beta() * ln_n2 + calib.alpha() * ln_n1)
            .sum();
        (normal, risky, high)
    }

    #[test]
    fn layout_rejects_degenerate_counts() {
        assert!(matches!(
            LoopLayout::new(1, 3, 2),
            Err(MetricsError::DegenerateLayout { .. })
        ));
        assert!(LoopLayout::new(2, 1, 1).is_ok());
    }

    #[test]
    fn calibrate_4_3_2_matches_oracle() {
        let layout = LoopLayout::new(4, 3, 2).unwrap();
        let calib = calibrate(layout, Weights::default()).unwrap();
        // Frozen from the independent closed-form oracle; the all-wrong
        // summation below confirms the interval sums.
        assert!((calib.alpha() - 0.036_067_376_022_224_09).abs() < 1e-12);
        assert!((calib.beta() - 0.08371659398268709).abs() < 1e-12);
        assert!((calib.gamma() - 0.043_211_168_434_072_49).abs() < 1e-12);
        let (e1, e2, e3) = all_wrong_interval_sums(&calib);
        assert!((e1 - 0.2).abs() < 1e-10);
        assert!((e2 - 0.3).abs() < 1e-10);
        assert!((e3 - 0.5).abs() < 1e-10);
    }

    #[test]
    fn calibrate_10_10_10_matches_oracle() {
        let layout = LoopLayout::new(10, 10, 10).unwrap();
        let calib = calibrate(layout, Weights::default()).unwrap();
        assert!((calib.alpha() - 0.008_685_889_638_065_035).abs() < 1e-12);
        assert!((calib.beta() - 0.0066205818674640645).abs() < 1e-12);
        assert!((calib.gamma() - 0.00038326095805274186).abs() < 1e-12);
        let (e1, e2, e3) = all_wrong_interval_sums(&calib);
        assert!((e1 - 0.2).abs() < 1e-10);
        assert!((e2 - 0.3).abs() < 1e-10);
        assert!((e3 - 0.5).abs() < 1e-10);
    }

    #[test]
    fn calibrate_rejects_n1_below_two() {
        let err = LoopLayout::new(1, 3, 2).unwrap_err();
        assert!(matches!(err, MetricsError::DegenerateLayout { .. }));
    }

    #[test]
    fn calibrate_n2_of_one_needs_exhausted_risky_weight() {
        // w2 != N2 * alpha * ln(N1): no beta can absorb the residual.
        let layout = LoopLayout::new(4, 1, 2).unwrap();
        assert!(matches!(
            calibrate(layout, Weights::default()),
            Err(MetricsError::InfeasibleCalibration { .. })
        ));
        // With w2 = w1/N1 the residual vanishes and beta = 0 works.
        let w = Weights::new(0.2, 0.05, 0.75).unwrap();
        let calib = calibrate(layout, w).unwrap();
        assert_eq!(calib.beta(), 0.0);
        let (e1, e2, e3) = all_wrong_interval_sums(&calib);
        assert!((e1 - 0.2).abs() < 1e-10);
        assert!((e2 - 0.05).abs() < 1e-10);
        assert!((e3 - 0.75).abs() < 1e-10);
    }

    #[test]
    fn s_score_all_correct_is_one_and_all_wrong_is_zero() {
        let layout = LoopLayout::new(7, 5, 4).unwrap();
        let calib = calibrate(layout, Weights::default()).unwrap();
        let perfect = PredictionSeries::new(layout.truth(), layout).unwrap();
        assert_eq!(s_score(&perfect, &calib).unwrap(), 1.0);

        let wrong: Vec<u8> = layout.truth().iter().map(|t| (t + 1) % 3).collect();
        let series = PredictionSeries::new(wrong, layout).unwrap();
        assert!(s_score(&series, &calib).unwrap().abs() < TOL);
    }

    #[test]
    fn s_score_single_last_high_risk_error_matches_worked_value() {
        let layout = LoopLayout::new(4, 3, 2).unwrap();
        let calib = calibrate(layout, Weights::default()).unwrap();
        let mut predicted = layout.truth();
        let last = predicted.len() - 1;
        predicted[last] = 1;
        let series = PredictionSeries::new(predicted, layout).unwrap();
        let s = s_score(&series, &calib).unwrap();
        // Oracle: 1 - (gamma*2^2 + beta*ln 3 + alpha*ln 4).
        let expected = 1.0
            - (calib.gamma() * 4.0 + calib.beta() * 3.0_f64.ln() + calib.alpha() * 4.0_f64.ln());
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.685183).abs() < 1e-6);
    }

    #[test]
    fn s_score_rejects_layout_mismatch() {
        let layout = LoopLayout::new(4, 3, 2).unwrap();
        let other = LoopLayout::new(5, 3, 2).unwrap();
        let calib = calibrate(other, Weights::default()).unwrap();
        let series = PredictionSeries::new(layout.truth(), layout).unwrap();
        assert!(matches!(
            s_score(&series, &calib),
            Err(MetricsError::InvalidInput(_))
        ));
    }

    #[test]
    fn c_score_constant_within_intervals_is_one() {
        let layout = LoopLayout::new(4, 3, 2).unwrap();
        let scores = c_score(&[0, 0, 0, 0, 1, 1, 1, 2, 2], layout).unwrap();
        assert_eq!(
            (scores.c, scores.c1, scores.c2, scores.c3),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn c_score_max_flicker_hits_minus_three() {
        let layout = LoopLayout::new(4, 3, 2).unwrap();
        let scores = c_score(&[0, 2, 0, 2, 1, 1, 1, 2, 2], layout).unwrap();
        assert_eq!(scores.c1, -3.0);
        assert!((scores.c - (-1.0 / 3.0)).abs() < TOL);
    }

    #[test]
    fn c_score_hand_summed_example() {
        let layout = LoopLayout::new(4, 3, 2).unwrap();
        let scores = c_score(&[0, 0, 1, 0, 1, 1, 2, 2, 2], layout).unwrap();
        assert!((scores.c1 - 1.0 / 3.0).abs() < TOL);
        assert!((scores.c2 - 0.5).abs() < TOL);
        assert!((scores.c3 - 1.0).abs() < TOL);
        assert!((scores.c - 0.6111111111111112).abs() < TOL);
    }

    #[test]
    fn c_score_ignores_truth_and_cross_interval_jumps() {
        let layout = LoopLayout::new(2, 2, 2).unwrap();
        // Constant inside each interval, wild jumps at the two boundaries.
        let scores = c_score(&[2, 2, 0, 0, 1, 1], layout).unwrap();
        assert_eq!(scores.c, 1.0);
    }

    #[test]
    fn accuracy_counts_matches() {
        let layout = LoopLayout::new(4, 3, 3).unwrap();
        let mut predicted = layout.truth();
        predicted[0] = 2;
        predicted[5] = 0;
        let series = PredictionSeries::new(predicted, layout).unwrap();
        assert!((accuracy(&series) - 0.8).abs() < TOL);
    }

    #[test]
    fn multi_loop_averages_s_and_pools_accuracy() {
        let layout = LoopLayout::new(4, 3, 2).unwrap();
        let perfect = PredictionSeries::new(layout.truth(), layout).unwrap();
        let wrong: Vec<u8> = layout.truth().iter().map(|t| (t + 1) % 3).collect();
        let all_wrong = PredictionSeries::new(wrong, layout).unwrap();
        let report =
            multi_loop_opai(&[perfect.clone(), all_wrong], Weights::default()).unwrap();
        assert!((report.s - 0.5).abs() < TOL);
        assert!((report.accuracy - 0.5).abs() < TOL);

        // One loop aggregates to the single-loop report.
        let single = multi_loop_opai(std::slice::from_ref(&perfect), Weights::default()).unwrap();
        let direct = score_series(&perfect, Weights::default()).unwrap();
        assert_eq!(single, direct);

        // Two identical loops aggregate to the single-loop values.
        let twice = multi_loop_opai(&[perfect.clone(), perfect], Weights::default()).unwrap();
        assert_eq!(twice, direct);
    }

    #[test]
    fn multi_loop_rejects_empty_input() {
        assert!(matches!(
            multi_loop_opai(&[], Weights::default()),
            Err(MetricsError::InvalidInput(_))
        ));
    }

    #[test]
    fn archetype_false_alarms_keeps_deterioration_correct() {
        let layout = LoopLayout::new(40, 30, 30).unwrap();
        let series =
            archetype_series(ArchetypeKind::FalseAlarms, layout, 0.8, 7).unwrap();
        for i in layout.n1()..layout.total() {
            assert_eq!(series.predicted()[i], series.truth()[i]);
        }
        let report = score_series(&series, Weights::default()).unwrap();
        assert!((report.accuracy - 0.8).abs() < TOL);
    }

    #[test]
    fn archetype_high_risk_misses_cover_whole_interval_at_matching_accuracy() {
        // Accuracy 0.8 on (40, 40, 20) leaves exactly N3 errors, so every
        // high-risk sample is missed.
        let layout = LoopLayout::new(40, 40, 20).unwrap();
        let series =
            archetype_series(ArchetypeKind::MissesHighRisk, layout, 0.8, 3).unwrap();
        for i in layout.n1() + layout.n2()..layout.total() {
            assert_ne!(series.predicted()[i], 2);
        }
        let report = score_series(&series, Weights::default()).unwrap();
        assert!((report.accuracy - 0.8).abs() < TOL);
    }

    #[test]
    fn archetype_infeasible_accuracy_is_rejected() {
        let layout = LoopLayout::new(40, 30, 30).unwrap();
        // 60 errors cannot fit inside the 30-sample high-risk interval.
        assert!(matches!(
            archetype_series(ArchetypeKind::MissesHighRisk, layout, 0.4, 7),
            Err(MetricsError::InfeasibleAccuracy { .. })
        ));
    }

    #[test]
    fn archetype_s_ordering_on_reference_layout() {
        let layout = LoopLayout::new(40, 30, 30).unwrap();
        let weights = Weights::default();
        let s_of = |kind| {
            let series = archetype_series(kind, layout, 0.8, 7).unwrap();
            score_series(&series, weights).unwrap().s
        };
        let s1 = s_of(ArchetypeKind::MissesHighRisk);
        let s2 = s_of(ArchetypeKind::UnstableRisky);
        let s3 = s_of(ArchetypeKind::FalseAlarms);
        let s4 = s_of(ArchetypeKind::UnstableBoundary);
        let s5 = s_of(ArchetypeKind::LateRecognition);
        assert!(s3 > s4, "false-alarm archetype should outscore boundary instability");
        for s in [s2, s3, s4, s5] {
            assert!(s1 < s, "high-risk misses must score lowest: {s1} vs {s}");
        }
    }

    #[test]
    fn archetypes_are_deterministic_given_seed() {
        let layout = LoopLayout::new(40, 30, 30).unwrap();
        for kind in [
            ArchetypeKind::MissesHighRisk,
            ArchetypeKind::UnstableRisky,
            ArchetypeKind::FalseAlarms,
            ArchetypeKind::UnstableBoundary,
            ArchetypeKind::LateRecognition,
        ] {
            let a = archetype_series(kind, layout, 0.8, 11).unwrap();
            let b = archetype_series(kind, layout, 0.8, 11).unwrap();
            assert_eq!(a, b);
        }
    }

    proptest! {
        /// Calibration identity: an all-wrong series forfeits exactly the
        /// interval weights, for any feasible layout.
        #[test]
        fn all_wrong_sums_equal_weights(n1 in 2usize..60, n2 in 2usize..60, n3 in 1usize..60) {
            let layout = LoopLayout::new(n1, n2, n3).unwrap();
            let calib = calibrate(layout, Weights::default()).unwrap();
            let (e1, e2, e3) = all_wrong_interval_sums(&calib);
            prop_assert!((e1 - 0.2).abs() < 1e-10);
            prop_assert!((e2 - 0.3).abs() < 1e-10);
            prop_assert!((e3 - 0.5).abs() < 1e-10);
        }

        /// A single error costs most in high-risk, least in normal, whenever
        /// the calibration is feasible.
        #[test]
        fn single_error_monotonicity(n1 in 2usize..40, n2 in 2usize..40, n3 in 1usize..40) {
            let layout = LoopLayout::new(n1, n2, n3).unwrap();
            let calib = calibrate(layout, Weights::default()).unwrap();
            prop_assume!(calib.is_feasible());
            let max_normal = (0..n1).map(|i| calib.error_at(i)).fold(f64::MIN, f64::max);
            let min_risky = (n1..n1 + n2).map(|i| calib.error_at(i)).fold(f64::MAX, f64::min);
            let max_risky = (n1..n1 + n2).map(|i| calib.error_at(i)).fold(f64::MIN, f64::max);
            let min_high = (n1 + n2..layout.total()).map(|i| calib.error_at(i)).fold(f64::MAX, f64::min);
            prop_assert!(max_normal <= min_risky + 1e-12);
            prop_assert!(max_risky <= min_high + 1e-12);
        }

        /// Penalties are non-decreasing inside the risky interval and
        /// strictly increasing inside the high-risk interval when gamma > 0.
        #[test]
        fn penalty_growth_within_intervals(n1 in 2usize..40, n2 in 2usize..40, n3 in 2usize..40) {
            let layout = LoopLayout::new(n1, n2, n3).unwrap();
            let calib = calibrate(layout, Weights::default()).unwrap();
            prop_assume!(calib.is_feasible());
            for i in n1..n1 + n2 - 1 {
                prop_assert!(calib.error_at(i) <= calib.error_at(i + 1) + 1e-15);
            }
            if calib.gamma() > 0.0 {
                for i in n1 + n2..layout.total() - 1 {
                    prop_assert!(calib.error_at(i) < calib.error_at(i + 1));
                }
            }
        }

        /// S stays within [0, 1] for arbitrary predictions under a feasible
        /// calibration, and equals 1 only for perfect predictions.
        #[test]
        fn s_bounds_and_exactness(
            n1 in 2usize..20,
            n2 in 2usize..20,
            n3 in 1usize..20,
            seed in 0u64..1000,
        ) {
            let layout = LoopLayout::new(n1, n2, n3).unwrap();
            let calib = calibrate(layout, Weights::default()).unwrap();
            prop_assume!(calib.is_feasible());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let predicted: Vec<u8> = (0..layout.total()).map(|_| rng.random_range(0..3u8)).collect();
            let series = PredictionSeries::new(predicted, layout).unwrap();
            let s = s_score(&series, &calib).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
            let wrong = series.truth().iter().zip(series.predicted()).any(|(t, p)| t != p);
            if !wrong {
                prop_assert!((s - 1.0).abs() < 1e-15);
            } else {
                prop_assert!(s < 1.0);
            }
        }
    }
}
