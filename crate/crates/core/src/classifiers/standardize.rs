//! Per-feature z-score standardization fitted on training data only.

use serde::{Deserialize, Serialize};

use super::ClassifierError;

/// Fitted per-feature means and population standard deviations. Columns with
/// zero spread cannot be scaled; they pass through unchanged and are recorded
/// in `constant_columns` as a warning to the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub constant_columns: Vec<usize>,
}

impl Standardizer {
    /// Fit on training rows. Statistics come from these rows alone; apply the
    /// result to held-out data rather than refitting.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, ClassifierError> {
        let n = rows.len();
        if n == 0 {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        let dims = rows[0].len();
        let mut means = vec![0.0; dims];
        for row in rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut stds = vec![0.0; dims];
        for row in rows {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                let d = v - m;
                *s += d * d;
            }
        }
        let mut constant_columns = Vec::new();
        for (i, s) in stds.iter_mut().enumerate() {
            *s = (*s / n as f64).sqrt();
            if *s == 0.0 {
                constant_columns.push(i);
            }
        }
        Ok(Self {
            means,
            stds,
            constant_columns,
        })
    }

    /// Transform one row with the fitted statistics.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { *v })
            .collect()
    }

    /// Transform a whole matrix.
    pub fn apply_matrix(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transformed_training_column_has_zero_mean_unit_std() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let std = Standardizer::fit(&rows).unwrap();
        let out = std.apply_matrix(&rows);
        let mean: f64 = out.iter().map(|r| r[0]).sum::<f64>() / 3.0;
        let var: f64 = out.iter().map(|r| (r[0] - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_passes_through_with_warning() {
        let rows = vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]];
        let std = Standardizer::fit(&rows).unwrap();
        assert_eq!(std.constant_columns, vec![0]);
        let out = std.apply(&[5.0, 2.0]);
        assert_eq!(out[0], 5.0);
        assert!(out[1].abs() < 1e-12);
    }

    #[test]
    fn unseen_row_uses_training_statistics() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let std = Standardizer::fit(&rows).unwrap();
        let out = std.apply(&[4.0]);
        // (4 - 2) / sqrt(2/3), frozen from the direct formula.
        assert!((out[0] - 2.449_489_742_783_178).abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(Standardizer::fit(&[]).is_err());
    }
}
