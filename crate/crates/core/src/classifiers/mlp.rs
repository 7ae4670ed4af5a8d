//! Single-hidden-layer network: tanh hidden activation, softmax output,
//! cross-entropy loss, full-batch gradient descent.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;

/// Network parameters. Weight matrices are row-major: `w1` is
/// `inputs x hidden`, `w2` is `hidden x outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpParams {
    /// Seeded uniform initialization scaled by fan-in.
    pub fn init(inputs: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale1 = 1.0 / (inputs as f64).sqrt();
        let scale2 = 1.0 / (hidden as f64).sqrt();
        let w1 = (0..inputs * hidden)
            .map(|_| rng.random_range(-scale1..scale1))
            .collect();
        let w2 = (0..hidden * outputs)
            .map(|_| rng.random_range(-scale2..scale2))
            .collect();
        Self {
            inputs,
            hidden,
            outputs,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; outputs],
        }
    }

    fn hidden_activations(&self, row: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let mut z = self.b1[h];
                for (i, x) in row.iter().enumerate() {
                    z += x * self.w1[i * self.hidden + h];
                }
                z.tanh()
            })
            .collect()
    }

    fn output_probabilities(&self, hidden: &[f64]) -> Vec<f64> {
        let mut logits: Vec<f64> = (0..self.outputs)
            .map(|o| {
                let mut z = self.b2[o];
                for (h, a) in hidden.iter().enumerate() {
                    z += a * self.w2[h * self.outputs + o];
                }
                z
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for z in &mut logits {
            *z = (*z - max).exp();
            sum += *z;
        }
        for z in &mut logits {
            *z /= sum;
        }
        logits
    }

    /// Class probabilities for one row.
    pub fn forward(&self, row: &[f64]) -> Vec<f64> {
        self.output_probabilities(&self.hidden_activations(row))
    }

    /// Index of the most probable class; probability ties resolve to the
    /// lowest index.
    pub fn predict_index(&self, row: &[f64]) -> usize {
        let probs = self.forward(row);
        probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap()
            .0
    }
}

/// Mean cross-entropy loss over the batch.
pub fn mlp_loss(params: &MlpParams, rows: &[Vec<f64>], targets: &[usize]) -> f64 {
    let mut loss = 0.0;
    for (row, target) in rows.iter().zip(targets) {
        let probs = params.forward(row);
        loss -= probs[*target].max(1e-300).ln();
    }
    loss / rows.len() as f64
}

/// Analytic gradients of [`mlp_loss`] via backpropagation, in the same
/// parameter shape.
pub fn mlp_gradients(params: &MlpParams, rows: &[Vec<f64>], targets: &[usize]) -> MlpParams {
    let mut grad = MlpParams {
        inputs: params.inputs,
        hidden: params.hidden,
        outputs: params.outputs,
        w1: vec![0.0; params.w1.len()],
        b1: vec![0.0; params.b1.len()],
        w2: vec![0.0; params.w2.len()],
        b2: vec![0.0; params.b2.len()],
    };
    let batch = rows.len() as f64;
    for (row, target) in rows.iter().zip(targets) {
        let hidden = params.hidden_activations(row);
        let probs = params.output_probabilities(&hidden);

        // d(loss)/d(logit_o) = (p_o - 1[o == target]) / batch
        let delta_out: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(o, p)| (p - f64::from(u8::from(o == *target))) / batch)
            .collect();

        for (h, a) in hidden.iter().enumerate() {
            for (o, d) in delta_out.iter().enumerate() {
                grad.w2[h * params.outputs + o] += a * d;
            }
        }
        for (o, d) in delta_out.iter().enumerate() {
            grad.b2[o] += d;
        }

        let delta_hidden: Vec<f64> = (0..params.hidden)
            .map(|h| {
                let upstream: f64 = delta_out
                    .iter()
                    .enumerate()
                    .map(|(o, d)| d * params.w2[h * params.outputs + o])
                    .sum();
                upstream * (1.0 - hidden[h] * hidden[h])
            })
            .collect();

        for (i, x) in row.iter().enumerate() {
            for (h, d) in delta_hidden.iter().enumerate() {
                grad.w1[i * params.hidden + h] += x * d;
            }
        }
        for (h, d) in delta_hidden.iter().enumerate() {
            grad.b1[h] += d;
        }
    }
    grad
}

/// Trained network plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub params: MlpParams,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

/// Full-batch gradient descent from a seeded initialization. A non-finite
/// loss aborts with diagnostics rather than silently producing NaN weights.
pub fn train_mlp(
    rows: &[Vec<f64>],
    targets: &[usize],
    n_classes: usize,
    hidden: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<MlpModel, ClassifierError> {
    let inputs = rows[0].len();
    let mut params = MlpParams::init(inputs, hidden, n_classes, seed);
    for epoch in 0..epochs {
        let grad = mlp_gradients(&params, rows, targets);
        let step = |w: &mut Vec<f64>, g: &[f64]| {
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi -= learning_rate * gi;
            }
        };
        step(&mut params.w1, &grad.w1);
        step(&mut params.b1, &grad.b1);
        step(&mut params.w2, &grad.w2);
        step(&mut params.b2, &grad.b2);

        let loss = mlp_loss(&params, rows, targets);
        let weights_finite = params
            .w1
            .iter()
            .chain(&params.b1)
            .chain(&params.w2)
            .chain(&params.b2)
            .all(|w| w.is_finite());
        if !loss.is_finite() || !weights_finite {
            return Err(ClassifierError::Divergence { epoch, loss });
        }
    }
    Ok(MlpModel {
        params,
        epochs,
        learning_rate,
        seed,
    })
}
