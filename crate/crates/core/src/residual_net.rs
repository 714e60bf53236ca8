// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Feed-forward residual corrector for spline-synthesized waveforms.
//!
//! The net maps the genotype's node values to an additive correction on the
//! dense grid: ReLU hidden layers, linear output.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::waveforms::{spline_interpolate, ChebyshevGenotype, TimeGrid};

pub const DEFAULT_HIDDEN: [usize; 2] = [50, 30];

/// Layer sizes plus row-major weights (`out × in`) and biases per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// Uniform ±√(6/(fan_in+fan_out)) weights, zero biases.
    pub fn glorot(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        let mut params = Self::zeros(layer_sizes)?;
        let mut rng = substream(seed, "net.init");
        for (w, sizes) in params.weights.iter_mut().zip(layer_sizes.windows(2)) {
            let limit = (6.0 / (sizes[0] + sizes[1]) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.random_range(-limit..limit);
            }
        }
        Ok(params)
    }

    /// Standard 20-50-30-`d_out` layout for `n_nodes` inputs.
    pub fn default_layout(n_nodes: usize, d_out: usize) -> Vec<usize> {
        vec![n_nodes, DEFAULT_HIDDEN[0], DEFAULT_HIDDEN[1], d_out]
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(&self.layer_sizes)?;
        let layers = self.layer_sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::invalid(format!(
                "expected {layers} weight and bias arrays, got {} and {}",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for (i, sizes) in self.layer_sizes.windows(2).enumerate() {
            if self.weights[i].len() != sizes[0] * sizes[1] || self.biases[i].len() != sizes[1] {
                return Err(Error::invalid(format!("layer {i} dimensions inconsistent")));
            }
        }
        let finite = self
            .weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("network parameters must be finite"));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::invalid(format!("invalid layer sizes {sizes:?}")));
    }
    Ok(())
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(r, bias)| {
            let row = &w[r * n_in..(r + 1) * n_in];
            bias + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>()
        })
        .collect()
}

/// Activations of every layer, input first; hidden entries are post-ReLU.
fn forward_trace(params: &MlpParams, x: &[f64]) -> Vec<Vec<f64>> {
    let layers = params.weights.len();
    let mut acts = Vec::with_capacity(layers + 1);
    acts.push(x.to_vec());
    for i in 0..layers {
        let mut z = affine(&params.weights[i], &params.biases[i], &acts[i]);
        if i + 1 < layers {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        acts.push(z);
    }
    acts
}

pub fn forward(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != params.input_len() {
        return Err(Error::invalid(format!(
            "net expects {} inputs, got {}",
            params.input_len(),
            x.len()
        )));
    }
    Ok(forward_trace(params, x).pop().expect("at least one layer"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn check(&self, params: &MlpParams) -> Result<()> {
        if self.is_empty() {
            return Err(Error::invalid("training set is empty"));
        }
        if self.inputs.len() != self.targets.len() {
            return Err(Error::invalid("inputs and targets differ in length"));
        }
        let (n_in, n_out) = (params.input_len(), params.output_len());
        if self.inputs.iter().any(|x| x.len() != n_in)
            || self.targets.iter().any(|y| y.len() != n_out)
        {
            return Err(Error::invalid(format!(
                "training vectors must have {n_in} inputs and {n_out} targets"
            )));
        }
        Ok(())
    }
}

/// Mean squared error over all samples and outputs.
pub fn mse(params: &MlpParams, data: &TrainingSet) -> Result<f64> {
    data.check(params)?;
    let mut total = 0.0;
    for (x, t) in data.inputs.iter().zip(&data.targets) {
        let y = forward(params, x)?;
        total += y.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok(total / (data.len() * params.output_len()) as f64)
}

/// Gradient of the batch MSE, laid out like [`MlpParams`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// MSE over `batch` (indices into `data`) and its gradient by backprop.
pub fn loss_and_gradient(
    params: &MlpParams,
    data: &TrainingSet,
    batch: &[usize],
) -> (f64, Gradients) {
    let layers = params.weights.len();
    let mut gw: Vec<Vec<f64>> = params.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut gb: Vec<Vec<f64>> = params.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    let scale = 1.0 / (batch.len() * params.output_len()) as f64;
    let mut loss = 0.0;

    for &s in batch {
        let acts = forward_trace(params, &data.inputs[s]);
        let out = &acts[layers];
        let mut delta: Vec<f64> = out
            .iter()
            .zip(&data.targets[s])
            .map(|(y, t)| {
                loss += (y - t).powi(2);
                2.0 * (y - t) * scale
            })
            .collect();

        for i in (0..layers).rev() {
            let input = &acts[i];
            let n_in = input.len();
            for (r, d) in delta.iter().enumerate() {
                gb[i][r] += d;
                let row = &mut gw[i][r * n_in..(r + 1) * n_in];
                row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
            }
            if i > 0 {
                let w = &params.weights[i];
                delta = (0..n_in)
                    .map(|c| {
                        if input[c] > 0.0 {
                            delta
                                .iter()
                                .enumerate()
                                .map(|(r, d)| d * w[r * n_in + c])
                                .sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
    }
    (
        loss * scale,
        Gradients {
            weights: gw,
            biases: gb,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs: 100,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedNet {
    pub params: MlpParams,
    /// Full-dataset MSE before the first update.
    pub initial_loss: f64,
    /// Full-dataset MSE after each epoch.
    pub loss_history: Vec<f64>,
}

struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl AdamState {
    fn new(params: &MlpParams) -> Self {
        let shapes: Vec<Vec<f64>> = params
            .weights
            .iter()
            .chain(&params.biases)
            .map(|p| vec![0.0; p.len()])
            .collect();
        Self {
            m: shapes.clone(),
            v: shapes,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut MlpParams, grads: Gradients, cfg: &AdamConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        let slots = params.weights.iter_mut().chain(params.biases.iter_mut());
        let grad_slots = grads.weights.into_iter().chain(grads.biases);
        for (((p, g), m), v) in slots.zip(grad_slots).zip(&mut self.m).zip(&mut self.v) {
            for j in 0..p.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Adam on mini-batch MSE starting from `init`. Batch order is drawn from
/// the `net.shuffle` substream of `seed`.
pub fn train_adam_from(
    init: MlpParams,
    data: &TrainingSet,
    cfg: &AdamConfig,
    seed: u64,
) -> Result<TrainedNet> {
    init.validate()?;
    data.check(&init)?;
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be > 0"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be >= 1"));
    }
    let mut params = init;
    let mut state = AdamState::new(&params);
    let mut rng = substream(seed, "net.shuffle");
    let mut order: Vec<usize> = (0..data.len()).collect();
    let initial_loss = mse(&params, data)?;
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (_, grads) = loss_and_gradient(&params, data, batch);
            state.update(&mut params, grads, cfg);
        }
        let loss = mse(&params, data)?;
        if !loss.is_finite() {
            return Err(Error::Numerical("training loss diverged".into()));
        }
        loss_history.push(loss);
    }
    Ok(TrainedNet {
        params,
        initial_loss,
        loss_history,
    })
}

/// Glorot-initialized training of a `[n_in, 50, 30, n_out]` net.
pub fn train_adam(data: &TrainingSet, cfg: &AdamConfig, seed: u64) -> Result<TrainedNet> {
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let layout = MlpParams::default_layout(data.inputs[0].len(), data.targets[0].len());
    train_adam_from(MlpParams::glorot(&layout, seed)?, data, cfg, seed)
}

/// Modulator response used to synthesize training targets: gain-compression
/// saturation followed by a centered moving average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistortionParams {
    /// Gain-compression parameter g (µs/rad); 0 disables saturation.
    pub gain: f64,
    /// Moving-average window in samples; 1 disables the low-pass.
    pub window: usize,
}

impl Default for DistortionParams {
    fn default() -> Self {
        Self {
            gain: 0.1,
            window: 5,
        }
    }
}

/// sin(g·min(x, π/2g))/g; the identity for g = 0.
pub fn saturate(x: f64, gain: f64) -> f64 {
    if gain == 0.0 {
        x
    } else {
        (gain * x.min(std::f64::consts::FRAC_PI_2 / gain)).sin() / gain
    }
}

/// Centered moving average; the window shrinks at the edges.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return x.to_vec();
    }
    let half_lo = (window - 1) / 2;
    let half_hi = window / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half_lo);
            let hi = (i + half_hi).min(x.len() - 1);
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// The waveform the modulator actually emits for a programmed one.
pub fn distort(programmed: &[f64], d: &DistortionParams) -> Vec<f64> {
    let sat: Vec<f64> = programmed.iter().map(|&x| saturate(x, d.gain)).collect();
    moving_average(&sat, d.window)
}

/// Random genotypes paired with the residual (distorted − spline) on `grid`.
pub fn gen_training_data(
    n: usize,
    n_nodes: usize,
    omega_max: f64,
    grid: &TimeGrid,
    distortion: &DistortionParams,
    seed: u64,
) -> Result<TrainingSet> {
    if n == 0 {
        return Err(Error::invalid("need at least one training sample"));
    }
    if distortion.window == 0 || !(distortion.gain >= 0.0) {
        return Err(Error::invalid("distortion needs window >= 1 and gain >= 0"));
    }
    let mut rng = substream(seed, "net.data");
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let nodes: Vec<f64> = (0..n_nodes)
            .map(|_| rng.random_range(0.0..=omega_max))
            .collect();
        let genotype = ChebyshevGenotype::new(nodes, omega_max)?;
        let spline = spline_interpolate(&genotype, grid)?.into_amplitude();
        let reference = distort(&spline, distortion);
        targets.push(reference.iter().zip(&spline).map(|(r, s)| r - s).collect());
        inputs.push(genotype.node_values().to_vec());
    }
    Ok(TrainingSet { inputs, targets })
}
