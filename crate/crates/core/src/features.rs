//! Per-sensor feature extraction and the machine-level feature record.
//!
//! Each sensor wave yields 24 features: 13 time-domain statistics (max, min,
//! mean, peak-to-peak, population variance and standard deviation, RMS,
//! skewness, non-excess kurtosis, shape / crest / pulse / clearance factors)
//! and 11 time-frequency features (max, mean, and standard deviation of the
//! one-sided FFT amplitude spectrum excluding the DC bin; the energy of each
//! of the four wavelet detail layers; and each layer's share of the total
//! wavelet energy including the approximation band).
//!
//! A machine-level [`FeatureVector`] assembles the 24 features of all six
//! sensors into 144 entries, named `<Feature>_S<sensor>` (e.g. `Std_S1`,
//! `FFT_max_S2`, `Energy_3_por_S4`), ordered sensor-major. Features whose
//! formula is undefined for a wave (zero variance, zero mean, zero energy)
//! are recorded as explicit missing markers so downstream selection can drop
//! them deterministically instead of propagating NaN.

use crate::signal::{dwt_decompose, fft_spectrum, SignalError, Wave, WaveArray, SENSOR_COUNT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Time-domain feature names, in extraction order.
pub const TIME_DOMAIN_NAMES: [&str; 13] = [
    "Max",
    "Min",
    "Mean",
    "Peak_Peak",
    "Var",
    "Std",
    "Rms",
    "Skew",
    "Kurt",
    "Shape_factor",
    "Crest_factor",
    "Pulse_factor",
    "Clearance_factor",
];

/// Time-frequency feature names, in extraction order.
pub const FREQ_DOMAIN_NAMES: [&str; 11] = [
    "FFT_max",
    "FFT_mean",
    "FFT_std",
    "Energy_1",
    "Energy_2",
    "Energy_3",
    "Energy_4",
    "Energy_1_por",
    "Energy_2_por",
    "Energy_3_por",
    "Energy_4_por",
];

/// Features per sensor (13 time-domain + 11 time-frequency).
pub const PER_SENSOR_FEATURES: usize = TIME_DOMAIN_NAMES.len() + FREQ_DOMAIN_NAMES.len();

/// Total features per machine record.
pub const TOTAL_FEATURES: usize = PER_SENSOR_FEATURES * SENSOR_COUNT;

/// Errors from feature extraction and matrix assembly.
#[derive(Debug, Error)]
pub enum FeatureError {
    /// Zero variance: skewness and kurtosis are undefined.
    #[error("degenerate wave: zero variance, skewness/kurtosis undefined")]
    DegenerateWave,
    /// Zero mean: shape and pulse factors are undefined.
    #[error("degenerate mean: zero mean, shape/pulse factors undefined")]
    DegenerateMean,
    /// Zero total wavelet energy: energy ratios are undefined.
    #[error("degenerate energy: zero wave, energy ratios undefined")]
    DegenerateEnergy,
    #[error("wave alignment: {0}")]
    Alignment(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("feature matrix: {0}")]
    Matrix(String),
}

/// The full per-machine feature name list: sensor-major, time-domain then
/// time-frequency order within each sensor.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(TOTAL_FEATURES);
    for sensor in 1..=SENSOR_COUNT {
        for base in TIME_DOMAIN_NAMES.iter().chain(FREQ_DOMAIN_NAMES.iter()) {
            names.push(format!("{base}_S{sensor}"));
        }
    }
    names
}

fn population_moments(samples: &[f64]) -> (f64, f64, f64, f64) {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for s in samples {
        let d = s - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / m, m3 / m, m4 / m)
}

/// The 13 time-domain features with undefined entries marked `None`:
/// skewness/kurtosis require nonzero variance, shape/pulse factors a nonzero
/// mean, the crest factor a nonzero RMS, the clearance factor a nonzero mean
/// square-root amplitude.
pub fn time_domain_features_partial(wave: &Wave) -> [Option<f64>; 13] {
    let samples = wave.samples();
    let m = samples.len() as f64;
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mean, var, m3, m4) = population_moments(samples);
    let std = var.sqrt();
    let rms = (samples.iter().map(|s| s * s).sum::<f64>() / m).sqrt();
    let sqrt_mean = samples.iter().map(|s| s.abs().sqrt()).sum::<f64>() / m;

    let skew = (var > 0.0).then(|| m3 / var.powf(1.5));
    let kurt = (var > 0.0).then(|| m4 / (var * var));
    let shape = (mean != 0.0).then(|| rms / mean.abs());
    let crest = (rms > 0.0).then(|| max / rms);
    let pulse = (mean != 0.0).then(|| max / mean.abs());
    let clearance = (sqrt_mean > 0.0).then(|| max / (sqrt_mean * sqrt_mean));

    [
        Some(max),
        Some(min),
        Some(mean),
        Some(max - min),
        Some(var),
        Some(std),
        Some(rms),
        skew,
        kurt,
        shape,
        crest,
        pulse,
        clearance,
    ]
}

/// The 13 time-domain features, or an error naming the degeneracy.
pub fn time_domain_features(wave: &Wave) -> Result<[f64; 13], FeatureError> {
    let partial = time_domain_features_partial(wave);
    let var = partial[4].unwrap();
    if var == 0.0 {
        return Err(FeatureError::DegenerateWave);
    }
    let mean = partial[2].unwrap();
    if mean == 0.0 {
        return Err(FeatureError::DegenerateMean);
    }
    Ok(partial.map(|v| v.expect("defined when variance and mean are nonzero")))
}

/// The 11 time-frequency features with undefined entries marked `None`.
/// Requires a wave length divisible by 16 (the 4-level decomposition).
pub fn freq_domain_features_partial(wave: &Wave) -> Result<[Option<f64>; 11], FeatureError> {
    let dec = dwt_decompose(wave, 4)?;
    let spectrum = fft_spectrum(wave);
    // DC is a sensor offset, not vibration; exclude it from the amplitude
    // statistics.
    let body = &spectrum.amplitudes()[1..];
    let n = body.len() as f64;
    let fft_max = body.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let fft_mean = body.iter().sum::<f64>() / n;
    let fft_var = body
        .iter()
        .map(|a| (a - fft_mean) * (a - fft_mean))
        .sum::<f64>()
        / n;

    let energies: Vec<f64> = (1..=4)
        .map(|layer| dec.detail(layer).iter().map(|c| c * c).sum::<f64>())
        .collect();
    let total = dec.energy();

    let mut out = [None; 11];
    out[0] = Some(fft_max);
    out[1] = Some(fft_mean);
    out[2] = Some(fft_var.sqrt());
    for (i, e) in energies.iter().enumerate() {
        out[3 + i] = Some(*e);
        out[7 + i] = (total > 0.0).then(|| e / total);
    }
    Ok(out)
}

/// The 11 time-frequency features, or a degenerate-energy error for a zero
/// wave (whose energy ratios are undefined).
pub fn freq_domain_features(wave: &Wave) -> Result<[f64; 11], FeatureError> {
    let partial = freq_domain_features_partial(wave)?;
    if partial[7].is_none() {
        return Err(FeatureError::DegenerateEnergy);
    }
    Ok(partial.map(|v| v.expect("defined when total energy is nonzero")))
}

/// One machine's features at one timestamp. `values[i]` corresponds to
/// `names[i]`; missing entries mark features whose formula was undefined for
/// the underlying wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub machine_id: String,
    pub timestamp: f64,
    pub names: Vec<String>,
    pub values: Vec<Option<f64>>,
}

/// Assemble the 144-entry machine record from one wave array. Per-sensor
/// degenerate features become missing markers; everything else is populated.
pub fn assemble(array: &WaveArray) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(TOTAL_FEATURES);
    for wave in array.waves() {
        values.extend(time_domain_features_partial(wave));
        values.extend(freq_domain_features_partial(wave)?);
    }
    Ok(FeatureVector {
        machine_id: array.machine_id().to_string(),
        timestamp: array.timestamp(),
        names: feature_names(),
        values,
    })
}

/// Assemble from loose waves, enforcing the wave-array alignment rules.
pub fn assemble_waves(waves: Vec<Wave>) -> Result<FeatureVector, FeatureError> {
    let array = WaveArray::new(waves).map_err(|e| FeatureError::Alignment(e.to_string()))?;
    assemble(&array)
}

/// A rectangular collection of feature vectors sharing one name list, with
/// optional per-row labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    names: Vec<String>,
    rows: Vec<FeatureVector>,
    labels: Option<Vec<u8>>,
}

impl FeatureMatrix {
    /// Build a matrix from rows sharing one name list.
    pub fn new(rows: Vec<FeatureVector>, labels: Option<Vec<u8>>) -> Result<Self, FeatureError> {
        let names = rows
            .first()
            .map(|r| r.names.clone())
            .ok_or_else(|| FeatureError::Matrix("matrix needs at least one row".into()))?;
        for row in &rows {
            if row.names != names {
                return Err(FeatureError::Matrix(format!(
                    "row for {} at {} has a different name list",
                    row.machine_id, row.timestamp
                )));
            }
            if row.values.len() != names.len() {
                return Err(FeatureError::Matrix("ragged row".into()));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(FeatureError::Matrix(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    rows.len()
                )));
            }
        }
        Ok(Self { names, rows, labels })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column index of a feature name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// All values of one column, missing markers included.
    pub fn column_values(&self, index: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        self.rows.iter().map(move |r| r.values[index])
    }

    /// Restrict the matrix to the given feature columns (in the given order).
    pub fn select(&self, keep: &[String]) -> Result<Self, FeatureError> {
        let indices: Vec<usize> = keep
            .iter()
            .map(|name| {
                self.column(name)
                    .ok_or_else(|| FeatureError::Matrix(format!("unknown feature {name}")))
            })
            .collect::<Result<_, _>>()?;
        let rows = self
            .rows
            .iter()
            .map(|row| FeatureVector {
                machine_id: row.machine_id.clone(),
                timestamp: row.timestamp,
                names: keep.to_vec(),
                values: indices.iter().map(|i| row.values[*i]).collect(),
            })
            .collect();
        Ok(Self {
            names: keep.to_vec(),
            rows,
            labels: self.labels.clone(),
        })
    }

    /// Keep only the rows at the given indices (labels follow).
    pub fn take_rows(&self, indices: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            rows: indices.iter().map(|i| self.rows[*i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|i| l[*i]).collect()),
        }
    }

    /// Replace the labels (e.g. after binary relabeling).
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Self, FeatureError> {
        Self::new(self.rows.clone(), Some(labels))
    }

    /// Dense numeric view: errors if any value is missing.
    pub fn to_dense(&self) -> Result<Vec<Vec<f64>>, FeatureError> {
        self.rows
            .iter()
            .map(|row| {
                row.values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        v.ok_or_else(|| {
                            FeatureError::Matrix(format!(
                                "missing value in feature {} for {} at {}",
                                self.names[i], row.machine_id, row.timestamp
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.timestamp).collect()
    }
}
