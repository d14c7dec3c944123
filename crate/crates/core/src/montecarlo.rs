//! Monte Carlo frame/bit error rate estimation.
//!
//! Each SNR point draws random codewords, transmits them over the AWGN
//! channel and decodes until both stopping conditions hold: at least
//! `min_frames` frames and at least `min_frame_errors` frame errors, with a
//! hard frame cap for high-SNR points that is recorded rather than silently
//! treated as convergence.
//!
//! Every frame's random stream is derived from `(seed, snr_index,
//! frame_index)`, and tallies are accumulated in frame order up to the exact
//! stopping frame, so results are identical no matter how many workers run
//! or how frames are batched.

use crate::channel::{add_awgn, ebn0_to_sigma, llr_from_channel, modulate};
use crate::decoder::{hard_decide, nnms_forward_effective, DecodeTrace, DecoderError, WeightSet};
use crate::linear_code::Code;
use crate::rng::substream;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("snr list must not be empty")]
    EmptySnrList,
    #[error("frame cap {frame_cap} is below the minimum frame count {min_frames}")]
    CapBelowMinimum { frame_cap: u64, min_frames: u64 },
    #[error("minimum frame count must be at least 1")]
    NoFrames,
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
    #[error("results csv line {line}: {msg}")]
    MalformedCsv { line: usize, msg: String },
    #[error("the two result sets share no SNR point")]
    GridMismatch,
}

/// Stopping rules for one SNR point. Defaults: at least 100,000 frames and
/// 100 frame errors, capped at 10^7 frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub min_frames: u64,
    pub min_frame_errors: u64,
    pub frame_cap: u64,
    pub early_exit: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            min_frames: 100_000,
            min_frame_errors: 100,
            frame_cap: 10_000_000,
            early_exit: false,
        }
    }
}

impl EvalConfig {
    fn validate(&self) -> Result<(), EvalError> {
        if self.min_frames == 0 {
            return Err(EvalError::NoFrames);
        }
        if self.frame_cap < self.min_frames {
            return Err(EvalError::CapBelowMinimum {
                frame_cap: self.frame_cap,
                min_frames: self.min_frames,
            });
        }
        Ok(())
    }
}

/// Tally for one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    /// True when the frame cap stopped the loop before both stopping
    /// conditions were met.
    pub capped: bool,
}

/// Decodes one frame's LLRs to a hard codeword estimate. Implementations own
/// whatever scratch they need; one instance serves one worker thread.
trait FrameDecoder {
    fn decode(&mut self, llr: &[f64]) -> &[u8];
}

struct NnmsFrameDecoder<'a> {
    graph: &'a crate::linear_code::TannerGraph,
    effective: &'a [f64],
    iterations: usize,
    early_exit: bool,
    trace: DecodeTrace,
    hard: Vec<u8>,
}

impl FrameDecoder for NnmsFrameDecoder<'_> {
    fn decode(&mut self, llr: &[f64]) -> &[u8] {
        nnms_forward_effective(
            llr,
            self.graph,
            self.effective,
            self.iterations,
            self.early_exit,
            &mut self.trace,
        )
        .expect("shapes validated before the frame loop");
        self.hard = hard_decide(
            self.trace
                .soft_outputs
                .last()
                .expect("decoder runs at least one iteration"),
        );
        &self.hard
    }
}

/// The identity decoder: the hard decision on the channel LLRs themselves.
struct IdentityFrameDecoder {
    hard: Vec<u8>,
}

impl FrameDecoder for IdentityFrameDecoder {
    fn decode(&mut self, llr: &[f64]) -> &[u8] {
        self.hard = hard_decide(llr);
        &self.hard
    }
}

const FRAME_BATCH: u64 = 4096;

/// Core per-point loop, generic over codeword sampling and decoding.
///
/// Frames are processed in fixed-size parallel batches, but tallies advance
/// frame by frame and stop at the exact frame where the stopping conditions
/// are first met, so neither batch size nor worker count can change the
/// result.
#[allow(clippy::too_many_arguments)]
fn simulate_point<S, D, F>(
    n: usize,
    rate: f64,
    ebn0_db: f64,
    snr_index: u64,
    seed: u64,
    config: &EvalConfig,
    sample_codeword: &S,
    make_decoder: &F,
) -> Result<EvalPoint, EvalError>
where
    S: Fn(&mut ChaCha8Rng) -> Vec<u8> + Sync,
    D: FrameDecoder,
    F: Fn() -> D + Sync + Send,
{
    let sigma = ebn0_to_sigma(ebn0_db, rate)?;
    let mut frames = 0u64;
    let mut frame_errors = 0u64;
    let mut bit_errors = 0u64;
    let mut capped = false;

    'outer: while !(frames >= config.min_frames && frame_errors >= config.min_frame_errors) {
        if frames >= config.frame_cap {
            capped = true;
            break;
        }
        let batch = FRAME_BATCH.min(config.frame_cap - frames);
        let batch_bit_errors: Vec<u32> = (frames..frames + batch)
            .into_par_iter()
            .map_init(make_decoder, |decoder, frame| {
                let mut rng = substream(seed, "eval", &[snr_index, frame]);
                let codeword = sample_codeword(&mut rng);
                let x = modulate(&codeword).expect("sampled codewords are binary");
                let y = add_awgn(&x, sigma, &mut rng);
                let llr = llr_from_channel(&y, sigma);
                let decided = decoder.decode(&llr);
                decided
                    .iter()
                    .zip(&codeword)
                    .filter(|(a, b)| a != b)
                    .count() as u32
            })
            .collect();

        for errors_in_frame in batch_bit_errors {
            frames += 1;
            bit_errors += u64::from(errors_in_frame);
            if errors_in_frame > 0 {
                frame_errors += 1;
            }
            if frames >= config.min_frames && frame_errors >= config.min_frame_errors {
                break 'outer;
            }
            if frames >= config.frame_cap {
                capped = true;
                break 'outer;
            }
        }
    }

    Ok(EvalPoint {
        ebn0_db,
        frames,
        frame_errors,
        bit_errors,
        fer: frame_errors as f64 / frames as f64,
        ber: bit_errors as f64 / (frames * n as u64) as f64,
        capped,
    })
}

/// Estimates FER and BER for each SNR in `snr_list` using random test
/// codewords and the given decoder weights. A frame error is any bit
/// disagreement over the full n-bit codeword.
pub fn evaluate(
    code: &Code,
    weights: &WeightSet,
    snr_list: &[f64],
    seed: u64,
    config: &EvalConfig,
) -> Result<Vec<EvalPoint>, EvalError> {
    if snr_list.is_empty() {
        return Err(EvalError::EmptySnrList);
    }
    config.validate()?;
    let graph = code.graph();
    if !weights.fits(graph) {
        return Err(EvalError::Decoder(DecoderError::WeightShape {
            weight_iterations: weights.iterations(),
            weight_edges: weights.edge_count(),
            graph_edges: graph.edge_count(),
        }));
    }
    let effective = weights.effective();
    let iterations = weights.iterations();
    let generator = code.generator();
    let k = code.k();

    let sample_codeword = |rng: &mut ChaCha8Rng| -> Vec<u8> {
        let u: Vec<u8> = (0..k).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        generator.encode(&u).expect("message length matches k")
    };
    let make_decoder = || NnmsFrameDecoder {
        graph,
        effective: &effective,
        iterations,
        early_exit: config.early_exit,
        trace: DecodeTrace::new(),
        hard: Vec::new(),
    };

    snr_list
        .iter()
        .enumerate()
        .map(|(snr_index, &ebn0_db)| {
            simulate_point(
                code.n(),
                code.rate(),
                ebn0_db,
                snr_index as u64,
                seed,
                config,
                &sample_codeword,
                &make_decoder,
            )
        })
        .collect()
}

/// Uncoded BPSK bit error rate over at least `bits` channel bits, using the
/// identity decoder on rate-1 frames. This is the estimator's sanity oracle:
/// at Eb/N0 = 0 dB the result must match Q(sqrt(2)).
pub fn uncoded_bpsk_ber(ebn0_db: f64, bits: u64, seed: u64) -> Result<f64, EvalError> {
    const FRAME_BITS: usize = 1024;
    let frames_needed = bits.div_ceil(FRAME_BITS as u64);
    let config = EvalConfig {
        min_frames: frames_needed,
        min_frame_errors: 0,
        frame_cap: frames_needed,
        early_exit: false,
    };
    let sample_codeword = |rng: &mut ChaCha8Rng| -> Vec<u8> {
        (0..FRAME_BITS)
            .map(|_| u8::from(rng.gen_bool(0.5)))
            .collect()
    };
    let make_decoder = || IdentityFrameDecoder { hard: Vec::new() };
    let point = simulate_point(
        FRAME_BITS,
        1.0,
        ebn0_db,
        0,
        seed,
        &config,
        &sample_codeword,
        &make_decoder,
    )?;
    Ok(point.ber)
}

/// Per-SNR FER ratio between two result sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub ebn0_db: f64,
    pub fer_a: f64,
    pub fer_b: f64,
    /// `fer_a / fer_b`; infinite or NaN when `fer_b` is zero.
    pub ratio: f64,
    pub a_below_b: bool,
}

/// Pairs up the SNR points shared by `a` and `b` and reports FER ratios.
pub fn compare(a: &[EvalPoint], b: &[EvalPoint]) -> Result<Vec<CompareRow>, EvalError> {
    let rows: Vec<CompareRow> = a
        .iter()
        .filter_map(|pa| {
            b.iter()
                .find(|pb| pb.ebn0_db == pa.ebn0_db)
                .map(|pb| CompareRow {
                    ebn0_db: pa.ebn0_db,
                    fer_a: pa.fer,
                    fer_b: pb.fer,
                    ratio: pa.fer / pb.fer,
                    a_below_b: pa.fer < pb.fer,
                })
        })
        .collect();
    if rows.is_empty() {
        return Err(EvalError::GridMismatch);
    }
    Ok(rows)
}

/// Writes evaluation results as CSV, one row per SNR.
pub fn write_results_csv<W: std::io::Write>(
    points: &[EvalPoint],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "ebn0_db,frames,frame_errors,bit_errors,fer,ber,capped")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.ebn0_db, p.frames, p.frame_errors, p.bit_errors, p.fer, p.ber, p.capped
        )?;
    }
    Ok(())
}

/// Parses a results CSV written by [`write_results_csv`].
pub fn read_results_csv(text: &str) -> Result<Vec<EvalPoint>, EvalError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(EvalError::MalformedCsv {
        line: 1,
        msg: "missing header".into(),
    })?;
    if header.trim() != "ebn0_db,frames,frame_errors,bit_errors,fer,ber,capped" {
        return Err(EvalError::MalformedCsv {
            line: 1,
            msg: format!("unexpected header `{header}`"),
        });
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(EvalError::MalformedCsv {
                line: idx + 1,
                msg: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        fn field<T: std::str::FromStr>(line: usize, what: &str, raw: &str) -> Result<T, EvalError> {
            raw.trim().parse().map_err(|_| EvalError::MalformedCsv {
                line,
                msg: format!("cannot parse `{raw}` as {what}"),
            })
        }
        points.push(EvalPoint {
            ebn0_db: field(idx + 1, "a number", fields[0])?,
            frames: field(idx + 1, "an integer", fields[1])?,
            frame_errors: field(idx + 1, "an integer", fields[2])?,
            bit_errors: field(idx + 1, "an integer", fields[3])?,
            fer: field(idx + 1, "a number", fields[4])?,
            ber: field(idx + 1, "a number", fields[5])?,
            capped: field(idx + 1, "a boolean", fields[6])?,
        });
    }
    Ok(points)
}

/// Writes a comparison table as CSV.
pub fn write_compare_csv<W: std::io::Write>(
    rows: &[CompareRow],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "ebn0_db,fer_a,fer_b,ratio,a_below_b")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.ebn0_db, r.fer_a, r.fer_b, r.ratio, r.a_below_b
        )?;
    }
    Ok(())
}
