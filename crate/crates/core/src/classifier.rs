//! Fully connected binary classifier `k → 48 → 64 → 32 → 1` with ReLU hidden
//! activations, a sigmoid output and binary cross-entropy loss.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomp::FeatureVector;
use crate::error::{Error, Result};

pub const HIDDEN_DIMS: [usize; 4] = [48, 64, 32, 1];
/// Probability clamp used by the loss.
pub const BCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Per-dimension z-score transform fitted on training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Dimensions with zero spread get unit scale.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyCorpus)?;
        let k = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; k];
        for r in rows {
            if r.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: r.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; k];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        for s in std.iter_mut() {
            *s = (*s / n).sqrt();
            if s.is_nan() || *s <= 1e-12 {
                *s = 1.0;
            }
        }
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Layer>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<Standardizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
}

/// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
pub fn init_model(k: usize, seed: u64) -> Result<MlpModel> {
    if k < 1 {
        return Err(Error::InvalidArgument(
            "input dimension must be at least 1".into(),
        ));
    }
    let mut dims = vec![k];
    dims.extend(HIDDEN_DIMS);
    Ok(init_with_dims(&dims, seed))
}

pub fn init_with_dims(dims: &[usize], seed: u64) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .map(|w| {
            let bound = 1.0 / (w[0] as f64).sqrt();
            Layer {
                inputs: w[0],
                outputs: w[1],
                weights: (0..w[0] * w[1])
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect(),
                biases: vec![0.0; w[1]],
            }
        })
        .collect();
    MlpModel {
        layer_dims: dims.to_vec(),
        layers,
        seed,
        standardizer: None,
        train_config: None,
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Pre-activations of every layer for one input.
fn forward_trace(model: &MlpModel, x: &[f64]) -> Vec<Vec<f64>> {
    let mut pre = Vec::with_capacity(model.layers.len());
    let mut act = x.to_vec();
    for (i, layer) in model.layers.iter().enumerate() {
        let mut z = Vec::with_capacity(layer.outputs);
        layer.affine(&act, &mut z);
        if i + 1 < model.layers.len() {
            act = z.iter().map(|v| v.max(0.0)).collect();
        }
        pre.push(z);
    }
    pre
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Flat parameter order: per layer, weights (row-major) then biases.
    pub fn parameter(&self, mut i: usize) -> f64 {
        for l in &self.layers {
            if i < l.weights.len() {
                return l.weights[i];
            }
            i -= l.weights.len();
            if i < l.biases.len() {
                return l.biases[i];
            }
            i -= l.biases.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set_parameter(&mut self, mut i: usize, v: f64) {
        for l in &mut self.layers {
            if i < l.weights.len() {
                l.weights[i] = v;
                return;
            }
            i -= l.weights.len();
            if i < l.biases.len() {
                l.biases[i] = v;
                return;
            }
            i -= l.biases.len();
        }
        panic!("parameter index out of range")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&raw)?)
    }
}

/// Network output probability for an (already standardized) input.
pub fn forward(model: &MlpModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: x.len(),
        });
    }
    let pre = forward_trace(model, x);
    Ok(sigmoid(pre.last().expect("at least one layer")[0]))
}

pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Probability and label (1 iff p >= 0.5), applying the stored standardizer.
pub fn predict(model: &MlpModel, x: &[f64]) -> Result<(f64, u8)> {
    let p = match &model.standardizer {
        Some(s) if s.mean.len() == x.len() => forward(model, &s.apply(x))?,
        Some(s) => {
            return Err(Error::DimensionMismatch {
                expected: s.mean.len(),
                actual: x.len(),
            })
        }
        None => forward(model, x)?,
    };
    Ok((p, u8::from(p >= 0.5)))
}

/// Gradients laid out like [`MlpModel::parameter`].
pub type Gradients = Vec<f64>;

/// Mean BCE over `batch` and its gradient with respect to every parameter.
pub fn loss_and_gradients(model: &MlpModel, batch: &[(&[f64], u8)]) -> (f64, Gradients) {
    let mut grads = vec![0.0; model.num_parameters()];
    let offsets: Vec<usize> = model
        .layers
        .iter()
        .scan(0, |acc, l| {
            let o = *acc;
            *acc += l.weights.len() + l.biases.len();
            Some(o)
        })
        .collect();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for &(x, y) in batch {
        let pre = forward_trace(model, x);
        let p = sigmoid(pre.last().unwrap()[0]);
        loss += bce_loss(p, y) * scale;
        let mut delta = vec![(p - f64::from(y)) * scale];
        for li in (0..model.layers.len()).rev() {
            let layer = &model.layers[li];
            let input: Vec<f64> = if li == 0 {
                x.to_vec()
            } else {
                pre[li - 1].iter().map(|v| v.max(0.0)).collect()
            };
            let off = offsets[li];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                for (i, a) in input.iter().enumerate() {
                    grads[off + o * layer.inputs + i] += d * a;
                }
                grads[off + layer.weights.len() + o] += d;
            }
            if li > 0 {
                let mut next = vec![0.0; layer.inputs];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (n, w) in next.iter_mut().zip(row) {
                        *n += w * d;
                    }
                }
                for (n, z) in next.iter_mut().zip(&pre[li - 1]) {
                    if *z <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = next;
            }
        }
    }
    (loss, grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    #[serde(default)]
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            learning_rate: 1e-4,
            batch_size: 1,
            shuffle_seed: 0,
            optimizer: Optimizer::Adam,
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Mini-batch training on (already standardized) feature vectors. Returns the
/// mean training BCE of each epoch.
pub fn train(
    model: &MlpModel,
    data: &[FeatureVector],
    cfg: &TrainConfig,
) -> Result<(MlpModel, Vec<f64>)> {
    let k = model.input_dim();
    if let Some(bad) = data.iter().find(|f| f.values.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: bad.values.len(),
        });
    }
    let positives = data.iter().filter(|f| f.label == 1).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::DegenerateTrainingSet(format!(
            "{} samples, {positives} positive",
            data.len()
        )));
    }
    if cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 || cfg.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "learning rate and batch size must be positive".into(),
        ));
    }
    let mut model = model.clone();
    let mut trace = Vec::with_capacity(cfg.epochs);
    if cfg.epochs == 0 {
        return Ok((model, trace));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let n_params = model.num_parameters();
    let (mut m1, mut m2) = (vec![0.0; n_params], vec![0.0; n_params]);
    let mut step = 0i32;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[f64], u8)> = chunk
                .iter()
                .map(|&i| (data[i].values.as_slice(), data[i].label))
                .collect();
            let (loss, grads) = loss_and_gradients(&model, &batch);
            if loss.is_nan() {
                return Err(Error::NanLoss { epoch });
            }
            epoch_loss += loss * chunk.len() as f64;
            step += 1;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for (i, g) in grads.iter().enumerate() {
                        let v = model.parameter(i);
                        model.set_parameter(i, v - cfg.learning_rate * g);
                    }
                }
                Optimizer::Adam => {
                    let c1 = 1.0 - ADAM_BETA1.powi(step);
                    let c2 = 1.0 - ADAM_BETA2.powi(step);
                    for (i, g) in grads.iter().enumerate() {
                        m1[i] = ADAM_BETA1 * m1[i] + (1.0 - ADAM_BETA1) * g;
                        m2[i] = ADAM_BETA2 * m2[i] + (1.0 - ADAM_BETA2) * g * g;
                        let update =
                            cfg.learning_rate * (m1[i] / c1) / ((m2[i] / c2).sqrt() + ADAM_EPS);
                        let v = model.parameter(i);
                        model.set_parameter(i, v - update);
                    }
                }
            }
        }
        let mean = epoch_loss / data.len() as f64;
        if mean.is_nan() {
            return Err(Error::NanLoss { epoch });
        }
        trace.push(mean);
    }
    model.train_config = Some(cfg.clone());
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{DecompKind, Provenance};

    pub(crate) fn fv(values: Vec<f64>, label: u8) -> FeatureVector {
        FeatureVector {
            values,
            label,
            provenance: Provenance {
                group_id: String::new(),
                kind: DecompKind::Svd,
                n: 2,
                group_size: 1,
            },
        }
    }

    fn zero_model(k: usize) -> MlpModel {
        let mut m = init_model(k, 0).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        m
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = init_model(20, 42).unwrap();
        assert_eq!(a, init_model(20, 42).unwrap());
        assert_ne!(a, init_model(20, 43).unwrap());
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        assert_eq!((a.layers[0].outputs, a.layers[0].inputs), (48, 20));
        assert_eq!(a.layer_dims, vec![20, 48, 64, 32, 1]);
        for l in &a.layers {
            let bound = 1.0 / (l.inputs as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= bound));
        }
        assert!(init_model(0, 1).is_err());
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = zero_model(3);
        assert_eq!(forward(&m, &[1.0, -2.0, 3.0]).unwrap(), 0.5);
        assert_eq!(predict(&m, &[0.0, 0.0, 0.0]).unwrap(), (0.5, 1));
        assert!(forward(&m, &[1.0]).is_err());
    }

    #[test]
    fn output_grows_with_final_weights() {
        let mut m = zero_model(2);
        // make every hidden unit carry a positive value
        for l in &mut m.layers[..3] {
            l.biases.iter_mut().for_each(|b| *b = 1.0);
        }
        let mut last = 0.5;
        for scale in [0.01, 0.1, 1.0, 10.0] {
            m.layers[3].weights.iter_mut().for_each(|w| *w = scale);
            let p = forward(&m, &[0.3, 0.7]).unwrap();
            assert!(p > last && p <= 1.0);
            last = p;
        }
    }

    #[test]
    fn hand_computed_forward() {
        // identity-like chain: every layer copies/sums its first inputs
        let mut m = zero_model(2);
        m.layers[0].weights[0] = 1.0; // h1_0 = x0
        m.layers[0].weights[1] = 1.0; //      + x1
        m.layers[0].biases[1] = 0.25; // h1_1 = 0.25
        m.layers[1].weights[0] = 2.0; // h2_0 = 2 h1_0
        m.layers[1].weights[1] = -1.0; //     - h1_1
        m.layers[2].weights[0] = 1.0; // h3_0 = h2_0
        m.layers[3].weights[0] = 0.5; // z = 0.5 h3_0 - 0.1
        m.layers[3].biases[0] = -0.1;
        let x = [0.4, 0.35];
        let h1 = 0.75f64;
        let h2 = 2.0 * h1 - 0.25;
        let z = 0.5 * h2 - 0.1;
        let want = 1.0 / (1.0 + (-z).exp());
        assert!((forward(&m, &x).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn bce_examples() {
        assert!((bce_loss(0.5, 1) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(bce_loss(1.0 - BCE_EPS, 1) < 1e-11);
        assert!((bce_loss(0.9, 0) - std::f64::consts::LN_10).abs() < 1e-6);
        assert!(bce_loss(0.0, 1).is_finite());
    }

    #[test]
    fn zero_epochs_is_identity() {
        let m = init_model(3, 7).unwrap();
        let data = vec![fv(vec![1.0, 0.0, 0.0], 1), fv(vec![0.0, 1.0, 0.0], 0)];
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let (out, trace) = train(&m, &data, &cfg).unwrap();
        assert_eq!(out, m);
        assert!(trace.is_empty());
    }

    #[test]
    fn single_class_rejected() {
        let m = init_model(1, 7).unwrap();
        let data = vec![fv(vec![1.0], 1), fv(vec![2.0], 1)];
        assert!(matches!(
            train(&m, &data, &TrainConfig::default()),
            Err(Error::DegenerateTrainingSet(_))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = init_with_dims(&[4, 6, 5, 3, 1], 11);
        let xs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let batch: Vec<(&[f64], u8)> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| (x.as_slice(), (i % 2) as u8))
            .collect();
        let (_, g) = loss_and_gradients(&m, &batch);
        let h = 1e-5;
        for (i, &gi) in g.iter().enumerate() {
            let mut plus = m.clone();
            plus.set_parameter(i, m.parameter(i) + h);
            let mut minus = m.clone();
            minus.set_parameter(i, m.parameter(i) - h);
            let num = (loss_and_gradients(&plus, &batch).0 - loss_and_gradients(&minus, &batch).0)
                / (2.0 * h);
            let rel = (num - gi).abs() / num.abs().max(gi.abs()).max(1e-6);
            assert!(rel <= 1e-3, "param {i}: analytic {gi} numeric {num}");
        }
    }

    #[test]
    fn model_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let mut m = init_model(4, 9).unwrap();
        m.standardizer = Some(Standardizer {
            mean: vec![0.5; 4],
            std: vec![2.0; 4],
        });
        m.save(&p).unwrap();
        assert_eq!(MlpModel::load(&p).unwrap(), m);
    }

    #[test]
    fn standardizer_handles_constant_columns() {
        let s = Standardizer::fit(&[vec![1.0, 3.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!(s.std, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[1.0, 4.0]), vec![0.0, 0.0]);
    }
}
