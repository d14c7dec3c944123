//! Minibatch training of decoder weights with Adam.
//!
//! Defaults: Adam with learning rate 0.01, 10,000 minibatches of 120
//! codewords, per-sample SNR drawn uniformly over the evaluation range,
//! all-zeros codewords for supervised runs and random codewords for
//! unsupervised ones. The per-minibatch gradient is the
//! mean over samples, so the learning rate keeps its meaning if the batch
//! size changes.
//!
//! Per-sample forward/backward passes run in parallel; the gradient
//! reduction is performed in fixed sample order, so training is bit-for-bit
//! reproducible for a given seed regardless of thread count.

use crate::channel;
use crate::decoder::{hard_decide, nnms_forward_into, DecodeTrace, Parametrization, WeightSet};
use crate::linear_code::Code;
use crate::losses::{loss_gradient, multi_loss, LossError};
use crate::rng::substream;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("gradient length {gradient} does not match parameter length {parameters}")]
    ShapeMismatch { parameters: usize, gradient: usize },
    #[error("training diverged: loss became {value} at minibatch {minibatch}")]
    Diverged { minibatch: usize, value: f64 },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Decoder(#[from] crate::decoder::DecoderError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Code(#[from] crate::linear_code::CodeError),
}

/// Which codewords the training minibatches carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodewordMode {
    /// Train on the all-zeros codeword only.
    AllZeros,
    /// Draw a uniform message and encode it, per sample.
    Random,
}

impl std::fmt::Display for CodewordMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CodewordMode::AllZeros => "all_zeros",
            CodewordMode::Random => "random",
        })
    }
}

impl std::str::FromStr for CodewordMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all_zeros" | "all-zeros" => Ok(CodewordMode::AllZeros),
            "random" => Ok(CodewordMode::Random),
            other => Err(format!(
                "unknown codeword mode `{other}` (expected all_zeros or random)"
            )),
        }
    }
}

/// Training hyperparameters. See the module docs for the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub minibatch_size: usize,
    pub num_minibatches: usize,
    pub snr_range_db: [f64; 2],
    pub codeword_mode: CodewordMode,
    pub parametrization: Parametrization,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            learning_rate: 0.01,
            minibatch_size: 120,
            num_minibatches: 10_000,
            snr_range_db: [1.0, 8.0],
            codeword_mode: CodewordMode::AllZeros,
            parametrization: Parametrization::Identity,
            iterations: 5,
            seed: 0,
        }
    }
}

/// Adam optimizer state with the standard bias-corrected update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(parameter_count: usize) -> Self {
        Self {
            first_moment: vec![0.0; parameter_count],
            second_moment: vec![0.0; parameter_count],
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam step:
/// `m <- b1*m + (1-b1)*g`, `v <- b2*v + (1-b2)*g^2`, bias-corrected, then
/// `w <- w - lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(
    raw_weights: &mut [f64],
    gradient: &[f64],
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<(), TrainError> {
    if raw_weights.len() != gradient.len() || raw_weights.len() != state.first_moment.len() {
        return Err(TrainError::ShapeMismatch {
            parameters: raw_weights.len(),
            gradient: gradient.len(),
        });
    }
    state.step_count += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step_count as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step_count as i32);
    for (i, w) in raw_weights.iter_mut().enumerate() {
        let g = gradient[i];
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.first_moment[i] / bc1;
        let v_hat = state.second_moment[i] / bc2;
        *w -= learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// One training sample: the transmitted codeword and the decoder input.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub codeword: Vec<u8>,
    pub llr: Vec<f64>,
}

/// Draws one minibatch: per sample, an SNR uniform over the configured range
/// in dB, a codeword per the configured mode, and a channel transmission.
pub fn make_minibatch(
    code: &Code,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TrainSample>, TrainError> {
    let [lo, hi] = config.snr_range_db;
    let mut batch = Vec::with_capacity(config.minibatch_size);
    for _ in 0..config.minibatch_size {
        let ebn0_db = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let codeword = match config.codeword_mode {
            CodewordMode::AllZeros => vec![0u8; code.n()],
            CodewordMode::Random => {
                let u: Vec<u8> = (0..code.k()).map(|_| u8::from(rng.gen_bool(0.5))).collect();
                code.generator().encode(&u)?
            }
        };
        let sample = channel::transmit(&codeword, ebn0_db, code.rate(), rng)?;
        batch.push(TrainSample {
            codeword,
            llr: sample.llr,
        });
    }
    Ok(batch)
}

/// Per-minibatch training log row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLogRow {
    pub minibatch_index: usize,
    pub total_loss: f64,
    pub syndrome_part: f64,
    pub cross_entropy_part: f64,
}

/// Writes the training log as CSV.
pub fn write_training_log<W: std::io::Write>(
    log: &[TrainingLogRow],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "minibatch_index,total_loss,syndrome_part,cross_entropy_part"
    )?;
    for row in log {
        writeln!(
            out,
            "{},{},{},{}",
            row.minibatch_index, row.total_loss, row.syndrome_part, row.cross_entropy_part
        )?;
    }
    Ok(())
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: WeightSet,
    pub log: Vec<TrainingLogRow>,
    /// Mean loss parts are per-sample averages; the probe below flags the
    /// known unsupervised failure mode where the decoder maps everything to
    /// a valid but wrong codeword.
    pub degenerate: bool,
    pub probe_fer: f64,
}

const PROBE_FRAMES: usize = 1000;

type SampleResult = Result<(f64, f64, f64, Vec<f64>), TrainError>;

/// Trains NNMS weights for `code` under `config`.
///
/// Deterministic for a given `(code, config)`: minibatches come from the
/// seed's `train` substream, per-sample gradients are averaged in sample
/// order, and one Adam step is applied per minibatch. Aborts if the loss
/// stops being finite. After training, a probe decodes noiseless
/// random-codeword inputs and flags the run as degenerate if more than half
/// fail.
pub fn train(code: &Code, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let graph = code.graph();
    let mut weights = WeightSet::ones(
        config.iterations,
        graph.edge_count(),
        config.parametrization,
    )?;
    let mut adam = AdamState::new(weights.raw().len());
    let mut rng = substream(config.seed, "train", &[]);
    let mut log = Vec::with_capacity(config.num_minibatches);
    let param_count = weights.raw().len();

    for minibatch_index in 0..config.num_minibatches {
        let batch = make_minibatch(code, config, &mut rng)?;
        let shared_weights = &weights;
        let per_sample: Vec<SampleResult> = batch
            .par_iter()
            .map_init(DecodeTrace::new, |trace, sample| {
                nnms_forward_into(&sample.llr, graph, shared_weights, false, trace)?;
                let loss = multi_loss(trace, &sample.codeword, graph, config.lambda)?;
                let grad = loss_gradient(
                    trace,
                    &sample.codeword,
                    graph,
                    config.lambda,
                    shared_weights,
                )?;
                Ok((
                    loss.total,
                    loss.syndrome_part,
                    loss.cross_entropy_part,
                    grad,
                ))
            })
            .collect();

        // Fixed-order reduction keeps results independent of thread count.
        let mut grad_mean = vec![0.0; param_count];
        let mut total = 0.0;
        let mut syndrome = 0.0;
        let mut ce = 0.0;
        let batch_len = batch.len() as f64;
        for item in per_sample {
            let (t, sp, cp, grad) = item?;
            total += t;
            syndrome += sp;
            ce += cp;
            for (acc, g) in grad_mean.iter_mut().zip(&grad) {
                *acc += g;
            }
        }
        total /= batch_len;
        syndrome /= batch_len;
        ce /= batch_len;
        for g in &mut grad_mean {
            *g /= batch_len;
        }

        if !total.is_finite() {
            return Err(TrainError::Diverged {
                minibatch: minibatch_index,
                value: total,
            });
        }
        log.push(TrainingLogRow {
            minibatch_index,
            total_loss: total,
            syndrome_part: syndrome,
            cross_entropy_part: ce,
        });
        adam_step(
            weights.raw_mut(),
            &grad_mean,
            &mut adam,
            config.learning_rate,
        )?;
    }

    let probe_fer = noiseless_probe_fer(code, &weights, config.seed)?;
    Ok(TrainOutcome {
        weights,
        log,
        degenerate: probe_fer > 0.5,
        probe_fer,
    })
}

/// Decodes noiseless random-codeword inputs (bipolar symbols as LLRs; the
/// decoder is scale-invariant in its input) and returns the frame error
/// rate. Weights that map clean inputs to other codewords show up here.
pub fn noiseless_probe_fer(code: &Code, weights: &WeightSet, seed: u64) -> Result<f64, TrainError> {
    let graph = code.graph();
    let mut rng = substream(seed, "probe", &[]);
    let mut trace = DecodeTrace::new();
    let mut errors = 0usize;
    for _ in 0..PROBE_FRAMES {
        let u: Vec<u8> = (0..code.k()).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let c = code.generator().encode(&u)?;
        let llr = channel::modulate(&c)?;
        nnms_forward_into(&llr, graph, weights, false, &mut trace)?;
        let decided = hard_decide(trace.soft_outputs.last().expect("at least one iteration"));
        if decided != c {
            errors += 1;
        }
    }
    Ok(errors as f64 / PROBE_FRAMES as f64)
}
