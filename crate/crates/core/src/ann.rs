// SPDX-License-Identifier: Apache-2.0

//! The 8:4:1 sigmoid network: forward pass, backpropagation, gradient
//! descent training and the weight table file.
//!
//! There are no bias units; the 36 synapse weights are the only
//! parameters. A hidden unit whose input weights are all zero outputs a
//! constant 0.5, which lets the output layer learn an offset anyway.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{ContextVector, DEFAULT_CAP, REGION_COUNT};

pub const INPUTS: usize = REGION_COUNT;
pub const HIDDEN: usize = 4;
pub const SYNAPSES: usize = INPUTS * HIDDEN + HIDDEN;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training example {0} has no label")]
    Unlabeled(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("weights file: {0}")]
    Header(String),
    #[error("weights file: expected {SYNAPSES} weights, found {0}")]
    WrongCount(usize),
    #[error("weights file line {line}: non-numeric entry {token:?}")]
    NonNumeric { line: usize, token: String },
    #[error("weights file line {line}: non-finite weight")]
    NonFinite { line: usize },
}

/// How raw region counts are turned into network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum InputScaling {
    /// Divide each count by `cap` so inputs lie in [0, 1].
    Normalized { cap: u32 },
    /// Feed the counts unchanged.
    Raw,
}

impl Default for InputScaling {
    fn default() -> Self {
        InputScaling::Normalized { cap: DEFAULT_CAP }
    }
}

impl InputScaling {
    pub fn apply(&self, v: &ContextVector) -> [f64; INPUTS] {
        let div = match *self {
            InputScaling::Normalized { cap } => cap as f64,
            InputScaling::Raw => 1.0,
        };
        v.r.map(|x| x as f64 / div)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkWeights {
    /// `w_ih[i][j]`: input i to hidden j.
    pub w_ih: [[f64; HIDDEN]; INPUTS],
    /// `w_ho[j]`: hidden j to the output neuron.
    pub w_ho: [f64; HIDDEN],
    pub scaling: InputScaling,
}

impl NetworkWeights {
    pub fn zeros(scaling: InputScaling) -> Self {
        Self {
            w_ih: [[0.0; HIDDEN]; INPUTS],
            w_ho: [0.0; HIDDEN],
            scaling,
        }
    }

    /// All 36 weights, input block row-major then the output row.
    pub fn flat(&self) -> [f64; SYNAPSES] {
        let mut out = [0.0; SYNAPSES];
        for i in 0..INPUTS {
            out[i * HIDDEN..(i + 1) * HIDDEN].copy_from_slice(&self.w_ih[i]);
        }
        out[INPUTS * HIDDEN..].copy_from_slice(&self.w_ho);
        out
    }

    pub fn from_flat(flat: &[f64; SYNAPSES], scaling: InputScaling) -> Self {
        let mut w = Self::zeros(scaling);
        for i in 0..INPUTS {
            w.w_ih[i].copy_from_slice(&flat[i * HIDDEN..(i + 1) * HIDDEN]);
        }
        w.w_ho.copy_from_slice(&flat[INPUTS * HIDDEN..]);
        w
    }

    fn add_scaled(&mut self, step: &Gradient, rate: f64) {
        for i in 0..INPUTS {
            for j in 0..HIDDEN {
                self.w_ih[i][j] += rate * step.w_ih[i][j];
            }
        }
        for j in 0..HIDDEN {
            self.w_ho[j] += rate * step.w_ho[j];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardTrace {
    pub input: [f64; INPUTS],
    pub s_in: [f64; HIDDEN],
    pub s_out: [f64; HIDDEN],
    pub t_in: f64,
    pub t_out: f64,
}

/// One backward pass. The gradient fields point in the descent
/// direction: `w += rate * grad` lowers the loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStep {
    pub target: f64,
    pub error_t: f64,
    pub delta_t: f64,
    pub error_s: [f64; HIDDEN],
    pub delta_s: [f64; HIDDEN],
    pub grad_w_ho: [f64; HIDDEN],
    pub grad_w_ih: [[f64; HIDDEN]; INPUTS],
}

#[derive(Debug, Clone, Copy, Default)]
struct Gradient {
    w_ih: [[f64; HIDDEN]; INPUTS],
    w_ho: [f64; HIDDEN],
}

impl Gradient {
    fn accumulate(&mut self, step: &TrainStep) {
        for i in 0..INPUTS {
            for j in 0..HIDDEN {
                self.w_ih[i][j] += step.grad_w_ih[i][j];
            }
        }
        for j in 0..HIDDEN {
            self.w_ho[j] += step.grad_w_ho[j];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// Sum gradients over the whole set, then update once per epoch.
    Full,
    /// Update after every example.
    #[default]
    Online,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    pub seed: u64,
    pub init_range: f64,
    pub batch: BatchMode,
    pub scaling: InputScaling,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_epochs: 10_000,
            target_mse: 0.01,
            seed: 0,
            init_range: 1.0,
            batch: BatchMode::Online,
            scaling: InputScaling::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AnnError> {
        let bad = |m: &str| Err(AnnError::InvalidConfig(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if !(self.target_mse.is_finite() && self.target_mse >= 0.0) {
            return bad("target_mse must be non-negative");
        }
        if !(self.init_range.is_finite() && self.init_range > 0.0) {
            return bad("init_range must be positive");
        }
        if self.scaling == (InputScaling::Normalized { cap: 0 }) {
            return bad("normalization cap must be positive");
        }
        Ok(())
    }
}

/// Logistic function, kept strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    const HI: f64 = 1.0 - f64::EPSILON / 2.0;
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, HI)
}

/// Uniform weights in `[-init_range, init_range)` from the config seed.
pub fn init_network(config: &TrainConfig) -> NetworkWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let r = config.init_range;
    let mut flat = [0.0; SYNAPSES];
    for w in flat.iter_mut() {
        *w = rng.gen_range(-r..r);
    }
    NetworkWeights::from_flat(&flat, config.scaling)
}

pub fn forward(w: &NetworkWeights, input: &[f64; INPUTS]) -> ForwardTrace {
    let mut s_in = [0.0; HIDDEN];
    for (row, &r) in w.w_ih.iter().zip(input) {
        for (s, wij) in s_in.iter_mut().zip(row) {
            *s += wij * r;
        }
    }
    let s_out = s_in.map(sigmoid);
    let t_in: f64 = s_out.iter().zip(&w.w_ho).map(|(s, wj)| s * wj).sum();
    ForwardTrace {
        input: *input,
        s_in,
        s_out,
        t_in,
        t_out: sigmoid(t_in),
    }
}

pub fn backprop(w: &NetworkWeights, trace: &ForwardTrace, target: f64) -> TrainStep {
    let error_t = target - trace.t_out;
    let delta_t = error_t * trace.t_out * (1.0 - trace.t_out);
    let grad_w_ho = trace.s_out.map(|s| s * delta_t);
    let error_s = w.w_ho.map(|wj| delta_t * wj);
    let mut delta_s = [0.0; HIDDEN];
    for j in 0..HIDDEN {
        let s = trace.s_out[j];
        delta_s[j] = error_s[j] * s * (1.0 - s);
    }
    let grad_w_ih = trace.input.map(|x| delta_s.map(|d| x * d));
    TrainStep {
        target,
        error_t,
        delta_t,
        error_s,
        delta_s,
        grad_w_ho,
        grad_w_ih,
    }
}

/// Hotspot probability for a context vector.
pub fn predict(w: &NetworkWeights, v: &ContextVector) -> f64 {
    forward(w, &w.scaling.apply(v)).t_out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: NetworkWeights,
    /// Mean squared error of each executed epoch.
    pub loss_history: Vec<f64>,
}

impl TrainOutcome {
    pub fn final_mse(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn train(dataset: &[ContextVector], config: &TrainConfig) -> Result<TrainOutcome, AnnError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(AnnError::EmptyDataset);
    }
    let examples = dataset
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let label = v.label.ok_or(AnnError::Unlabeled(k))?;
            Ok((config.scaling.apply(v), if label { 1.0 } else { 0.0 }))
        })
        .collect::<Result<Vec<_>, AnnError>>()?;

    let mut w = init_network(config);
    let mut loss_history = Vec::new();
    let n = examples.len() as f64;
    for _ in 0..config.max_epochs {
        let mut sse = 0.0;
        match config.batch {
            BatchMode::Full => {
                let mut grad = Gradient::default();
                for (input, target) in &examples {
                    let trace = forward(&w, input);
                    let step = backprop(&w, &trace, *target);
                    sse += step.error_t * step.error_t;
                    grad.accumulate(&step);
                }
                let mse = sse / n;
                loss_history.push(mse);
                if mse <= config.target_mse {
                    break;
                }
                w.add_scaled(&grad, config.learning_rate);
            }
            BatchMode::Online => {
                for (input, target) in &examples {
                    let trace = forward(&w, input);
                    let step = backprop(&w, &trace, *target);
                    sse += step.error_t * step.error_t;
                    let mut g = Gradient::default();
                    g.accumulate(&step);
                    w.add_scaled(&g, config.learning_rate);
                }
                let mse = sse / n;
                loss_history.push(mse);
                if mse <= config.target_mse {
                    break;
                }
            }
        }
    }
    Ok(TrainOutcome {
        weights: w,
        loss_history,
    })
}

/// Weight table: a header, eight rows of four input-to-hidden weights,
/// then the four hidden-to-output weights.
pub fn save_weights(w: &NetworkWeights) -> String {
    let mut out = match w.scaling {
        InputScaling::Normalized { cap } => {
            format!("ann-weights version=1 topology=8:4:1 scaling=normalized cap={cap}\n")
        }
        InputScaling::Raw => "ann-weights version=1 topology=8:4:1 scaling=raw\n".to_string(),
    };
    let row = |out: &mut String, vals: &[f64; HIDDEN]| {
        let cells: Vec<String> = vals.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    };
    for r in &w.w_ih {
        row(&mut out, r);
    }
    row(&mut out, &w.w_ho);
    out
}

pub fn load_weights(document: &str) -> Result<NetworkWeights, AnnError> {
    let mut lines = document
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| AnnError::Header("empty document".into()))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("ann-weights") {
        return Err(AnnError::Header("expected `ann-weights` header".into()));
    }
    let mut scaling_name = None;
    let mut cap = None;
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| AnnError::Header(format!("bad header field {f:?}")))?;
        match k {
            "version" if v == "1" => {}
            "topology" if v == "8:4:1" => {}
            "scaling" => scaling_name = Some(v.to_string()),
            "cap" => {
                cap = Some(
                    v.parse::<u32>()
                        .map_err(|_| AnnError::Header(format!("bad cap {v:?}")))?,
                )
            }
            _ => return Err(AnnError::Header(format!("unsupported header field {f:?}"))),
        }
    }
    let scaling = match (scaling_name.as_deref(), cap) {
        (Some("normalized"), Some(cap)) if cap > 0 => InputScaling::Normalized { cap },
        (Some("raw"), None) => InputScaling::Raw,
        _ => return Err(AnnError::Header("missing or inconsistent scaling/cap".into())),
    };

    let mut values = Vec::with_capacity(SYNAPSES);
    for (line, text) in lines {
        for tok in text.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| AnnError::NonNumeric {
                line,
                token: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(AnnError::NonFinite { line });
            }
            values.push(v);
        }
    }
    let flat: [f64; SYNAPSES] = values
        .as_slice()
        .try_into()
        .map_err(|_| AnnError::WrongCount(values.len()))?;
    Ok(NetworkWeights::from_flat(&flat, scaling))
}
