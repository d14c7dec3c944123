//! Neural normalized min-sum decoders for binary linear block codes,
//! trainable with a syndrome loss that needs no knowledge of the
//! transmitted codeword.
//!
//! The pipeline: load a parity-check matrix from an alist file
//! ([`linear_code`]), derive an encoder, simulate BPSK/AWGN transmissions
//! ([`channel`]), run the unrolled weighted min-sum decoder ([`decoder`]),
//! train the per-edge weights with Adam against a combined
//! syndrome/cross-entropy loss ([`losses`], [`training`]), and estimate
//! frame error rates by Monte Carlo simulation with reproducible per-frame
//! random streams ([`montecarlo`]). The [`cli`] module ties the pieces into
//! the `nnms` binary.

// Index loops over edge/check/variable ids read several parallel arrays at
// once; iterator rewrites obscure that.
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod cli;
pub mod decoder;
pub mod linear_code;
pub mod losses;
pub mod montecarlo;
pub mod rng;
pub mod training;

pub(crate) mod numerics;

pub use channel::{ChannelError, ChannelSample};
pub use decoder::{
    hard_decide, min_sum_check, nnms_forward, DecodeTrace, DecoderError, Parametrization, WeightSet,
};
pub use linear_code::{Code, CodeError, GeneratorMatrix, ParityCheckMatrix, TannerGraph};
pub use losses::{
    combined_loss, cross_entropy, loss_gradient, multi_loss, soft_syndrome, syndrome_loss,
    LossBreakdown, LossError,
};
pub use montecarlo::{compare, evaluate, EvalConfig, EvalError, EvalPoint};
pub use training::{
    adam_step, make_minibatch, train, AdamState, CodewordMode, TrainConfig, TrainError,
    TrainOutcome,
};
