//! A small LSTM regressor over sliding windows, trained with full
//! backpropagation through time and Adam.
//!
//! Each layer stacks its four gates row-wise in the fixed order input,
//! forget, output, candidate (i, f, o, g), so `w` is `4H × in`, `u` is `4H × H`
//! and `b` has `4H` entries. All matrices are row-major.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::model::PointForecast;
use crate::preprocess::{NormalizeMethod, TransformRecord};

/// Current weight document version.
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmConfig {
    pub layers: usize,
    pub hidden_units: usize,
    pub window: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub clip_norm: f64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            layers: 1,
            hidden_units: 16,
            window: 10,
            dropout: 0.0,
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 8,
            seed: 42,
            clip_norm: 1.0,
        }
    }
}

impl LstmConfig {
    /// Twice the seasonal period when known, else 10.
    pub fn default_window(period: Option<usize>) -> usize {
        period.filter(|&m| m >= 1).map_or(10, |m| 2 * m)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(ForecastError::Config(m.to_string()));
        if self.layers == 0 {
            return fail("layers must be at least 1");
        }
        if self.hidden_units == 0 {
            return fail("hidden_units must be at least 1");
        }
        if self.window == 0 {
            return fail("window must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be finite and nonnegative");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if !(self.clip_norm > 0.0) {
            return fail("clip_norm must be positive");
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "LSTM({}x{}, w={})",
            self.layers, self.hidden_units, self.window
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub input_size: usize,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmWeights {
    pub version: u32,
    pub hidden_units: usize,
    pub layers: Vec<LayerWeights>,
    pub w_y: Vec<f64>,
    pub b_y: f64,
}

impl LstmWeights {
    pub fn zeros(layers: usize, hidden: usize) -> Self {
        let layers = (0..layers)
            .map(|l| {
                let input_size = if l == 0 { 1 } else { hidden };
                LayerWeights {
                    input_size,
                    w: vec![0.0; 4 * hidden * input_size],
                    u: vec![0.0; 4 * hidden * hidden],
                    b: vec![0.0; 4 * hidden],
                }
            })
            .collect();
        Self {
            version: WEIGHTS_VERSION,
            hidden_units: hidden,
            layers,
            w_y: vec![0.0; hidden],
            b_y: 0.0,
        }
    }

    /// Uniform(-k, k) with k = 1/sqrt(H); forget-gate biases start at 1.
    pub fn init(layers: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut out = Self::zeros(layers, hidden);
        let k = 1.0 / (hidden as f64).sqrt();
        for slice in out.slices_mut() {
            for v in slice.iter_mut() {
                *v = rng.random_range(-k..k);
            }
        }
        for layer in &mut out.layers {
            layer.b[hidden..2 * hidden]
                .iter_mut()
                .for_each(|b| *b = 1.0);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    fn slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            v.push(&l.w);
            v.push(&l.u);
            v.push(&l.b);
        }
        v.push(&self.w_y);
        v.push(std::slice::from_ref(&self.b_y));
        v
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            v.push(&mut l.w);
            v.push(&mut l.u);
            v.push(&mut l.b);
        }
        v.push(&mut self.w_y);
        v.push(std::slice::from_mut(&mut self.b_y));
        v
    }

    /// All parameters in a fixed order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[at..at + s.len()]);
            at += s.len();
        }
    }

    /// Checks shapes against `config` and that every value is finite.
    pub fn validate(&self, config: &LstmConfig) -> Result<()> {
        let h = self.hidden_units;
        let bad = |m: String| Err(ForecastError::Config(m));
        if self.version != WEIGHTS_VERSION {
            return bad(format!("unsupported weights version {}", self.version));
        }
        if h != config.hidden_units || self.layers.len() != config.layers {
            return bad(format!(
                "weights are {}x{}, config expects {}x{}",
                self.layers.len(),
                h,
                config.layers,
                config.hidden_units
            ));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let expect_in = if i == 0 { 1 } else { h };
            if l.input_size != expect_in
                || l.w.len() != 4 * h * expect_in
                || l.u.len() != 4 * h * h
                || l.b.len() != 4 * h
            {
                return bad(format!("layer {i} has inconsistent shapes"));
            }
        }
        if self.w_y.len() != h {
            return bad("output head has the wrong width".into());
        }
        if self.to_flat().iter().any(|v| !v.is_finite()) {
            return bad("weights contain non-finite values".into());
        }
        Ok(())
    }
}

/// Hidden and cell vectors for every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl LstmState {
    pub fn zeros(layers: usize, hidden: usize) -> Self {
        Self {
            h: vec![vec![0.0; hidden]; layers],
            c: vec![vec![0.0; hidden]; layers],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Mean squared error over the full training set after each epoch.
    pub train_loss: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub validation_loss: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
    /// Global gradient norm of the last batch, before clipping.
    pub final_gradient_norm: f64,
}

/// A training example: `window` inputs and the next value.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPair {
    pub inputs: Vec<f64>,
    pub target: f64,
}

/// Consecutive windows of `window` values, each paired with the value after it.
pub fn make_windows(values: &[f64], window: usize) -> Vec<WindowPair> {
    if window == 0 || values.len() <= window {
        return Vec::new();
    }
    (0..values.len() - window)
        .map(|j| WindowPair {
            inputs: values[j..j + window].to_vec(),
            target: values[j + window],
        })
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-step values kept for the backward pass.
struct StepCache {
    x: Vec<f64>,
    h_in: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
}

struct Trace {
    /// `layers × steps`.
    steps: Vec<Vec<StepCache>>,
    /// Dropout masks on the recurrent input, one per layer (all ones at inference).
    masks: Vec<Vec<f64>>,
    h_last: Vec<f64>,
    prediction: f64,
}

fn run(weights: &LstmWeights, inputs: &[f64], masks: Vec<Vec<f64>>, keep: bool) -> Trace {
    let h = weights.hidden_units;
    let mut seq: Vec<Vec<f64>> = inputs.iter().map(|&x| vec![x]).collect();
    let mut steps = Vec::with_capacity(weights.layers.len());
    for (layer, mask) in weights.layers.iter().zip(&masks) {
        let n_in = layer.input_size;
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        let mut caches = Vec::with_capacity(if keep { seq.len() } else { 0 });
        let mut outputs = Vec::with_capacity(seq.len());
        let mut z = vec![0.0; 4 * h];
        for x in &seq {
            let h_in: Vec<f64> = hs.iter().zip(mask).map(|(a, m)| a * m).collect();
            for r in 0..4 * h {
                let mut acc = layer.b[r];
                let wr = &layer.w[r * n_in..(r + 1) * n_in];
                for (wv, xv) in wr.iter().zip(x) {
                    acc += wv * xv;
                }
                let ur = &layer.u[r * h..(r + 1) * h];
                for (uv, hv) in ur.iter().zip(&h_in) {
                    acc += uv * hv;
                }
                z[r] = acc;
            }
            let i: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
            let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
            let o: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| sigmoid(v)).collect();
            let g: Vec<f64> = z[3 * h..].iter().map(|v| v.tanh()).collect();
            let c_prev = cs.clone();
            for k in 0..h {
                cs[k] = f[k] * cs[k] + i[k] * g[k];
            }
            let tanh_c: Vec<f64> = cs.iter().map(|v| v.tanh()).collect();
            for k in 0..h {
                hs[k] = o[k] * tanh_c[k];
            }
            outputs.push(hs.clone());
            if keep {
                caches.push(StepCache {
                    x: x.clone(),
                    h_in,
                    c_prev,
                    i,
                    f,
                    o,
                    g,
                    tanh_c,
                });
            }
        }
        steps.push(caches);
        seq = outputs;
    }
    let h_last = seq.last().cloned().unwrap_or_else(|| vec![0.0; h]);
    let prediction = weights.b_y
        + weights
            .w_y
            .iter()
            .zip(&h_last)
            .map(|(a, b)| a * b)
            .sum::<f64>();
    Trace {
        steps,
        masks,
        h_last,
        prediction,
    }
}

fn ones(weights: &LstmWeights) -> Vec<Vec<f64>> {
    vec![vec![1.0; weights.hidden_units]; weights.layers.len()]
}

/// Prediction for one window, no dropout.
pub fn forward(weights: &LstmWeights, window: &[f64]) -> f64 {
    run(weights, window, ones(weights), false).prediction
}

/// Like [`forward`] but also returns the final state of every layer.
pub fn forward_with_state(weights: &LstmWeights, window: &[f64]) -> (f64, LstmState) {
    let trace = run(weights, window, ones(weights), true);
    let mut state = LstmState::zeros(weights.layers.len(), weights.hidden_units);
    for (l, caches) in trace.steps.iter().enumerate() {
        if let Some(last) = caches.last() {
            state.c[l] = last
                .f
                .iter()
                .zip(&last.c_prev)
                .zip(last.i.iter().zip(&last.g))
                .map(|((f, c), (i, g))| f * c + i * g)
                .collect();
            state.h[l] = last
                .o
                .iter()
                .zip(&last.tanh_c)
                .map(|(o, t)| o * t)
                .collect();
        }
    }
    (trace.prediction, state)
}

/// Accumulates d loss / d params into `grad` for a trace whose prediction
/// error derivative is `dy`.
fn backward(weights: &LstmWeights, trace: &Trace, dy: f64, grad: &mut LstmWeights) {
    let h = weights.hidden_units;
    grad.b_y += dy;
    for k in 0..h {
        grad.w_y[k] += dy * trace.h_last[k];
    }
    let steps = trace.steps[0].len();
    // Gradient w.r.t. each step's output of the current layer.
    let mut dh_out = vec![vec![0.0; h]; steps];
    if steps > 0 {
        dh_out[steps - 1] = weights.w_y.iter().map(|w| w * dy).collect();
    }
    for l in (0..weights.layers.len()).rev() {
        let layer = &weights.layers[l];
        let g_layer = &mut grad.layers[l];
        let n_in = layer.input_size;
        let mask = &trace.masks[l];
        let mut dx = vec![vec![0.0; n_in]; steps];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..steps).rev() {
            let s = &trace.steps[l][t];
            for k in 0..h {
                let dh = dh_out[t][k] + dh_next[k];
                let dc = dc_next[k] + dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                let d_o = dh * s.tanh_c[k];
                let d_i = dc * s.g[k];
                let d_g = dc * s.i[k];
                let d_f = dc * s.c_prev[k];
                dc_next[k] = dc * s.f[k];
                dz[k] = d_i * s.i[k] * (1.0 - s.i[k]);
                dz[h + k] = d_f * s.f[k] * (1.0 - s.f[k]);
                dz[2 * h + k] = d_o * s.o[k] * (1.0 - s.o[k]);
                dz[3 * h + k] = d_g * (1.0 - s.g[k] * s.g[k]);
            }
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g_layer.b[r] += d;
                let wr = &layer.w[r * n_in..(r + 1) * n_in];
                let gw = &mut g_layer.w[r * n_in..(r + 1) * n_in];
                for j in 0..n_in {
                    gw[j] += d * s.x[j];
                    dx[t][j] += d * wr[j];
                }
                let ur = &layer.u[r * h..(r + 1) * h];
                let gu = &mut g_layer.u[r * h..(r + 1) * h];
                for j in 0..h {
                    gu[j] += d * s.h_in[j];
                    dh_next[j] += d * ur[j];
                }
            }
            for j in 0..h {
                dh_next[j] *= mask[j];
            }
        }
        dh_out = dx;
    }
}

/// Squared error of one pair and its gradient, no dropout.
pub fn loss_and_gradient(weights: &LstmWeights, pair: &WindowPair) -> (f64, LstmWeights) {
    let trace = run(weights, &pair.inputs, ones(weights), true);
    let err = trace.prediction - pair.target;
    let mut grad = LstmWeights::zeros(weights.layers.len(), weights.hidden_units);
    backward(weights, &trace, 2.0 * err, &mut grad);
    (err * err, grad)
}

/// Maximum relative error between the analytic gradient and central
/// differences of the squared error on `pair`, over every parameter.
pub fn gradient_check(weights: &LstmWeights, pair: &WindowPair, epsilon: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(ForecastError::arg(format!(
            "epsilon {epsilon} outside [1e-7, 1e-3]"
        )));
    }
    let (_, grad) = loss_and_gradient(weights, pair);
    let analytic = grad.to_flat();
    let base = weights.to_flat();
    let mut probe = weights.clone();
    let loss = |w: &LstmWeights| {
        let e = forward(w, &pair.inputs) - pair.target;
        e * e
    };
    let mut worst: f64 = 0.0;
    let mut flat = base.clone();
    for (j, &a) in analytic.iter().enumerate() {
        flat[j] = base[j] + epsilon;
        probe.set_flat(&flat);
        let plus = loss(&probe);
        flat[j] = base[j] - epsilon;
        probe.set_flat(&flat);
        let minus = loss(&probe);
        flat[j] = base[j];
        let numeric = (plus - minus) / (2.0 * epsilon);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn mse(weights: &LstmWeights, pairs: &[WindowPair]) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let e = forward(weights, &p.inputs) - p.target;
            e * e
        })
        .sum::<f64>()
        / pairs.len() as f64
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for j in 0..params.len() {
            self.m[j] = Self::BETA1 * self.m[j] + (1.0 - Self::BETA1) * grad[j];
            self.v[j] = Self::BETA2 * self.v[j] + (1.0 - Self::BETA2) * grad[j] * grad[j];
            let m_hat = self.m[j] / c1;
            let v_hat = self.v[j] / c2;
            params[j] -= lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Trains from seeded initial weights. The same seed and data give
/// bit-identical results.
pub fn train(
    train_pairs: &[WindowPair],
    validation_pairs: &[WindowPair],
    config: &LstmConfig,
) -> Result<(LstmWeights, TrainingReport)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weights = LstmWeights::init(config.layers, config.hidden_units, &mut rng);
    train_from(weights, train_pairs, validation_pairs, config, &mut rng)
}

/// Continues training from the given weights.
pub fn train_from(
    mut weights: LstmWeights,
    train_pairs: &[WindowPair],
    validation_pairs: &[WindowPair],
    config: &LstmConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(LstmWeights, TrainingReport)> {
    config.validate()?;
    weights.validate(config)?;
    if train_pairs.is_empty() {
        return Err(ForecastError::Data("no training windows".into()));
    }
    if let Some(p) = train_pairs
        .iter()
        .chain(validation_pairs)
        .find(|p| p.inputs.len() != config.window)
    {
        return Err(ForecastError::Config(format!(
            "window of length {} does not match configured window {}",
            p.inputs.len(),
            config.window
        )));
    }
    let started = Instant::now();
    let h = config.hidden_units;
    let keep = 1.0 - config.dropout;
    let mut adam = Adam::new(weights.parameter_count());
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut report = TrainingReport {
        train_loss: Vec::with_capacity(config.epochs),
        validation_loss: Vec::new(),
        wall_clock_ms: None,
        final_gradient_norm: 0.0,
    };
    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        for batch in order.chunks(config.batch_size) {
            let mut grad = LstmWeights::zeros(config.layers, h);
            for &idx in batch {
                let pair = &train_pairs[idx];
                let masks = (0..config.layers)
                    .map(|_| {
                        (0..h)
                            .map(|_| {
                                if config.dropout == 0.0 {
                                    1.0
                                } else if rng.random::<f64>() < keep {
                                    1.0 / keep
                                } else {
                                    0.0
                                }
                            })
                            .collect()
                    })
                    .collect();
                let trace = run(&weights, &pair.inputs, masks, true);
                let dy = 2.0 * (trace.prediction - pair.target) / batch.len() as f64;
                backward(&weights, &trace, dy, &mut grad);
            }
            let mut flat_grad = grad.to_flat();
            let norm = flat_grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            report.final_gradient_norm = norm;
            if !norm.is_finite() {
                return Err(ForecastError::Divergence { epoch });
            }
            if norm > config.clip_norm {
                let scale = config.clip_norm / norm;
                flat_grad.iter_mut().for_each(|g| *g *= scale);
            }
            let mut flat = weights.to_flat();
            adam.step(&mut flat, &flat_grad, config.learning_rate);
            weights.set_flat(&flat);
        }
        let loss = mse(&weights, train_pairs);
        if !loss.is_finite() {
            return Err(ForecastError::Divergence { epoch });
        }
        report.train_loss.push(loss);
        if !validation_pairs.is_empty() {
            report.validation_loss.push(mse(&weights, validation_pairs));
        }
    }
    report.wall_clock_ms = Some(started.elapsed().as_millis() as u64);
    Ok((weights, report))
}

/// Recursive multi-step forecast on the normalized scale.
pub fn forecast_lstm(
    weights: &LstmWeights,
    config: &LstmConfig,
    tail: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    if tail.len() != config.window {
        return Err(ForecastError::arg(format!(
            "tail has {} values, window is {}",
            tail.len(),
            config.window
        )));
    }
    let mut window = tail.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = forward(weights, &window);
        out.push(next);
        window.remove(0);
        window.push(next);
    }
    Ok(out)
}

/// A trained network together with its input scaling and the last window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLstm {
    pub config: LstmConfig,
    pub weights: LstmWeights,
    pub report: TrainingReport,
    /// Minmax record applied before training.
    pub normalization: TransformRecord,
    /// Last `window` normalized values.
    pub tail: Vec<f64>,
    /// The full normalized training series, for in-sample predictions.
    pub normalized: Vec<f64>,
}

/// Minmax-normalizes `values`, builds windows and trains.
pub fn fit_lstm(values: &[f64], config: &LstmConfig) -> Result<FittedLstm> {
    config.validate()?;
    let needed = config.window + 1;
    if values.len() < needed {
        return Err(ForecastError::TooShort {
            needed,
            got: values.len(),
        });
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(ForecastError::DegenerateRange(
            "constant series cannot be minmax-normalized for the LSTM".into(),
        ));
    }
    let normalization = TransformRecord::Normalize {
        method: NormalizeMethod::Minmax,
        center: min,
        scale: max - min,
    };
    let normalized: Vec<f64> = values.iter().map(|v| (v - min) / (max - min)).collect();
    let pairs = make_windows(&normalized, config.window);
    let (weights, report) = train(&pairs, &[], config)?;
    Ok(FittedLstm {
        config: config.clone(),
        weights,
        report,
        normalization,
        tail: normalized[normalized.len() - config.window..].to_vec(),
        normalized,
    })
}

impl FittedLstm {
    /// Denormalized recursive forecast; never carries intervals.
    pub fn forecast(&self, steps: usize) -> Result<PointForecast> {
        if steps == 0 {
            return Err(ForecastError::arg("horizon must be at least 1 step"));
        }
        let raw = forecast_lstm(&self.weights, &self.config, &self.tail, steps)?;
        Ok(PointForecast {
            points: self.normalization.invert_values(&raw),
            intervals: None,
            confidence: None,
        })
    }

    /// One-step predictions in original units; `None` for the first `window` points.
    pub fn in_sample_predictions(&self) -> Vec<Option<f64>> {
        let w = self.config.window;
        (0..self.normalized.len())
            .map(|t| {
                (t >= w).then(|| {
                    let p = forward(&self.weights, &self.normalized[t - w..t]);
                    self.normalization.invert_values(&[p])[0]
                })
            })
            .collect()
    }
}
