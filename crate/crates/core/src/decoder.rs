//! Unrolled neural normalized min-sum (NNMS) decoding.
//!
//! The decoder runs a flooding schedule for a fixed number of iterations and
//! carries one learnable multiplicative weight per (iteration, edge). The
//! weight attached to an edge scales its check-to-variable message wherever
//! that message is consumed: in the next variable update and in the
//! marginalization that produces the iteration's soft output. With every
//! effective weight equal to 1 the decoder is exactly plain min-sum.
//!
//! Extrinsic sums are accumulated in ascending neighbor order, which fixes
//! the floating-point result and makes decodes reproducible down to the bit.

use crate::linear_code::TannerGraph;
use crate::numerics::{sign_pm, softplus, softplus_inverse_one};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DecoderError {
    #[error("check node update requires at least one input")]
    EmptyCheck,
    #[error("llr length {found} does not match code length {expected}")]
    LlrLength { expected: usize, found: usize },
    #[error(
        "weight set shaped ({weight_iterations} iterations x {weight_edges} edges) \
         does not fit a graph with {graph_edges} edges"
    )]
    WeightShape {
        weight_iterations: usize,
        weight_edges: usize,
        graph_edges: usize,
    },
    #[error("raw values have length {found}, expected {expected}")]
    RawLength { expected: usize, found: usize },
    #[error("iteration count must be at least 1")]
    NoIterations,
}

/// How raw parameters map to effective decoder weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parametrization {
    /// Effective weight = raw value.
    Identity,
    /// Effective weight = softplus(raw), strictly positive.
    Softplus,
}

impl fmt::Display for Parametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parametrization::Identity => "identity",
            Parametrization::Softplus => "softplus",
        })
    }
}

impl FromStr for Parametrization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(Parametrization::Identity),
            "softplus" => Ok(Parametrization::Softplus),
            other => Err(format!(
                "unknown parametrization `{other}` (expected identity or softplus)"
            )),
        }
    }
}

/// Learnable per-iteration, per-edge weights.
///
/// Raw values are stored iteration-major: `raw[t * edge_count + e]`, with
/// edge ids in the graph's check-major ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    iterations: usize,
    edge_count: usize,
    parametrization: Parametrization,
    raw: Vec<f64>,
}

impl WeightSet {
    /// Weights whose effective value is exactly 1 everywhere, so the initial
    /// decoder coincides with plain min-sum.
    pub fn ones(
        iterations: usize,
        edge_count: usize,
        parametrization: Parametrization,
    ) -> Result<Self, DecoderError> {
        if iterations == 0 {
            return Err(DecoderError::NoIterations);
        }
        let raw_one = match parametrization {
            Parametrization::Identity => 1.0,
            Parametrization::Softplus => softplus_inverse_one(),
        };
        Ok(Self {
            iterations,
            edge_count,
            parametrization,
            raw: vec![raw_one; iterations * edge_count],
        })
    }

    pub fn from_raw(
        iterations: usize,
        edge_count: usize,
        parametrization: Parametrization,
        raw: Vec<f64>,
    ) -> Result<Self, DecoderError> {
        if iterations == 0 {
            return Err(DecoderError::NoIterations);
        }
        if raw.len() != iterations * edge_count {
            return Err(DecoderError::RawLength {
                expected: iterations * edge_count,
                found: raw.len(),
            });
        }
        Ok(Self {
            iterations,
            edge_count,
            parametrization,
            raw,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn parametrization(&self) -> Parametrization {
        self.parametrization
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.raw
    }

    /// Flat index of the weight for `(iteration, edge)`.
    pub fn index(&self, iteration: usize, edge: usize) -> usize {
        iteration * self.edge_count + edge
    }

    /// Effective weights (identity: the raw values; softplus: softplus(raw),
    /// always strictly positive).
    pub fn effective(&self) -> Vec<f64> {
        match self.parametrization {
            Parametrization::Identity => self.raw.clone(),
            Parametrization::Softplus => self.raw.iter().map(|&r| softplus(r)).collect(),
        }
    }

    /// True when the weight shape fits the graph.
    pub fn fits(&self, graph: &TannerGraph) -> bool {
        self.edge_count == graph.edge_count()
    }
}

/// Everything recorded during one forward pass: per-iteration soft outputs,
/// both message families, and the extrinsic argmin witness of every
/// check-to-variable message (needed to route subgradients).
#[derive(Debug, Clone, Default)]
pub struct DecodeTrace {
    pub input_llr: Vec<f64>,
    /// Soft output of each iteration, length n.
    pub soft_outputs: Vec<Vec<f64>>,
    /// Variable-to-check messages per iteration, edge-indexed.
    pub v2c: Vec<Vec<f64>>,
    /// Check-to-variable messages per iteration, edge-indexed.
    pub c2v: Vec<Vec<f64>>,
    /// Edge id of the extrinsic minimum feeding each c2v message, or
    /// [`NO_WITNESS`] when the extrinsic set is empty (degree-1 check).
    pub argmin_witness: Vec<Vec<usize>>,
}

/// Witness sentinel for degree-1 checks, whose extrinsic set is empty.
pub const NO_WITNESS: usize = usize::MAX;

impl DecodeTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of iterations recorded (equals T unless early exit fired).
    pub fn iterations(&self) -> usize {
        self.soft_outputs.len()
    }

    fn prepare(&mut self, llr: &[f64], iterations: usize, edges: usize) {
        self.input_llr.clear();
        self.input_llr.extend_from_slice(llr);
        resize_nested(&mut self.soft_outputs, iterations, llr.len(), 0.0);
        resize_nested(&mut self.v2c, iterations, edges, 0.0);
        resize_nested(&mut self.c2v, iterations, edges, 0.0);
        resize_nested(&mut self.argmin_witness, iterations, edges, NO_WITNESS);
    }

    fn truncate(&mut self, iterations: usize) {
        self.soft_outputs.truncate(iterations);
        self.v2c.truncate(iterations);
        self.c2v.truncate(iterations);
        self.argmin_witness.truncate(iterations);
    }
}

fn resize_nested<T: Copy>(buf: &mut Vec<Vec<T>>, outer: usize, inner: usize, fill: T) {
    buf.resize_with(outer, Vec::new);
    for v in buf.iter_mut() {
        v.clear();
        v.resize(inner, fill);
    }
}

/// The check node equation of min-sum decoding: minimum magnitude times the
/// product of signs, with `sign(0) = +1`. Also reports the index attaining
/// the minimum (lowest index on ties).
pub fn min_sum_check(inputs: &[f64]) -> Result<(f64, usize), DecoderError> {
    if inputs.is_empty() {
        return Err(DecoderError::EmptyCheck);
    }
    let mut min_abs = f64::INFINITY;
    let mut argmin = 0;
    let mut sign = 1.0;
    for (idx, &v) in inputs.iter().enumerate() {
        sign *= sign_pm(v);
        let a = v.abs();
        if a < min_abs {
            min_abs = a;
            argmin = idx;
        }
    }
    Ok((sign * min_abs, argmin))
}

/// Hard decision: bit 0 where the soft value is non-negative, bit 1 where it
/// is negative (`sign(0) = +1`).
pub fn hard_decide(s: &[f64]) -> Vec<u8> {
    s.iter().map(|&v| u8::from(v < 0.0)).collect()
}

/// Runs the NNMS forward pass, recording the full trace.
pub fn nnms_forward(
    llr: &[f64],
    graph: &TannerGraph,
    weights: &WeightSet,
) -> Result<DecodeTrace, DecoderError> {
    let mut trace = DecodeTrace::new();
    nnms_forward_into(llr, graph, weights, false, &mut trace)?;
    Ok(trace)
}

/// Forward pass into a reusable trace. With `early_exit` set, decoding stops
/// after the first iteration whose hard decision satisfies every check; the
/// trace then holds fewer than T iterations.
pub fn nnms_forward_into(
    llr: &[f64],
    graph: &TannerGraph,
    weights: &WeightSet,
    early_exit: bool,
    trace: &mut DecodeTrace,
) -> Result<(), DecoderError> {
    if !weights.fits(graph) {
        return Err(DecoderError::WeightShape {
            weight_iterations: weights.iterations(),
            weight_edges: weights.edge_count(),
            graph_edges: graph.edge_count(),
        });
    }
    let effective = weights.effective();
    nnms_forward_effective(
        llr,
        graph,
        &effective,
        weights.iterations(),
        early_exit,
        trace,
    )
}

/// Forward pass with precomputed effective weights (iteration-major, length
/// `iterations * edge_count`). This is the hot path for Monte Carlo runs,
/// where the softplus map would otherwise be re-evaluated per frame.
pub fn nnms_forward_effective(
    llr: &[f64],
    graph: &TannerGraph,
    effective: &[f64],
    iterations: usize,
    early_exit: bool,
    trace: &mut DecodeTrace,
) -> Result<(), DecoderError> {
    let n = graph.num_vars();
    let edges = graph.edge_count();
    if llr.len() != n {
        return Err(DecoderError::LlrLength {
            expected: n,
            found: llr.len(),
        });
    }
    if iterations == 0 {
        return Err(DecoderError::NoIterations);
    }
    if effective.len() != iterations * edges {
        return Err(DecoderError::RawLength {
            expected: iterations * edges,
            found: effective.len(),
        });
    }
    trace.prepare(llr, iterations, edges);

    for t in 0..iterations {
        let wt = &effective[t * edges..(t + 1) * edges];

        // Variable update: extrinsic sum of weighted c2v messages from the
        // previous iteration (zero at t = 0), ascending by check index.
        {
            let c2v_prev = if t > 0 { Some(&trace.c2v[t - 1]) } else { None };
            let v2c = &mut trace.v2c[t];
            for j in 0..n {
                let incident = graph.var_edges(j);
                for &e in incident {
                    let mut acc = llr[j];
                    if let Some(prev) = c2v_prev {
                        for &e2 in incident {
                            if e2 != e {
                                acc += wt[e2] * prev[e2];
                            }
                        }
                    }
                    v2c[e] = acc;
                }
            }
        }

        // Check update: extrinsic min-sum via first and second minima.
        {
            let v2c = &trace.v2c[t];
            let c2v = &mut trace.c2v[t];
            let witness = &mut trace.argmin_witness[t];
            for i in 0..graph.num_checks() {
                let range = graph.check_edges(i);
                if range.len() == 1 {
                    // Degree-1 check: no extrinsic information.
                    c2v[range.start] = 0.0;
                    witness[range.start] = NO_WITNESS;
                    continue;
                }
                let mut min1 = f64::INFINITY;
                let mut min1_e = range.start;
                let mut min2 = f64::INFINITY;
                let mut min2_e = NO_WITNESS;
                let mut sign_all = 1.0;
                for e in range.clone() {
                    let v = v2c[e];
                    sign_all *= sign_pm(v);
                    let a = v.abs();
                    if a < min1 {
                        min2 = min1;
                        min2_e = min1_e;
                        min1 = a;
                        min1_e = e;
                    } else if a < min2 {
                        min2 = a;
                        min2_e = e;
                    }
                }
                for e in range {
                    let ext_sign = sign_all * sign_pm(v2c[e]);
                    if e == min1_e {
                        c2v[e] = ext_sign * min2;
                        witness[e] = min2_e;
                    } else {
                        c2v[e] = ext_sign * min1;
                        witness[e] = min1_e;
                    }
                }
            }
        }

        // Marginalization: weighted sum of all incident c2v messages.
        {
            let c2v = &trace.c2v[t];
            let s = &mut trace.soft_outputs[t];
            for j in 0..n {
                let mut acc = llr[j];
                for &e in graph.var_edges(j) {
                    acc += wt[e] * c2v[e];
                }
                s[j] = acc;
            }
        }

        if early_exit && graph.signs_satisfy_checks(&trace.soft_outputs[t]) {
            trace.truncate(t + 1);
            return Ok(());
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Weight file format
// ---------------------------------------------------------------------------

/// Code identity carried in a weight file header and validated on load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightFileMeta {
    pub code_name: String,
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Error)]
pub enum WeightFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("weight file line {line}: expected `# {key}: ...`")]
    MissingHeader { line: usize, key: &'static str },
    #[error("weight file line {line}: cannot parse `{value}` as {what}")]
    BadValue {
        line: usize,
        value: String,
        what: &'static str,
    },
    #[error("weight file holds {found} values, header promises {expected}")]
    ValueCount { expected: usize, found: usize },
    #[error("unsupported weight file format `{0}`")]
    UnknownFormat(String),
    #[error(transparent)]
    Shape(#[from] DecoderError),
}

const WEIGHT_FORMAT: &str = "nnms-weights-v1";

/// Writes a weight set as flat text: a commented header naming the code, the
/// shape, the parametrization and the edge-ordering contract, then one raw
/// value per line in iteration-major order.
pub fn write_weights<W: Write>(
    weights: &WeightSet,
    meta: &WeightFileMeta,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "# format: {WEIGHT_FORMAT}")?;
    writeln!(out, "# code: {}", meta.code_name)?;
    writeln!(out, "# n: {}", meta.n)?;
    writeln!(out, "# k: {}", meta.k)?;
    writeln!(out, "# iterations: {}", weights.iterations())?;
    writeln!(out, "# edge_count: {}", weights.edge_count())?;
    writeln!(out, "# parametrization: {}", weights.parametrization())?;
    writeln!(out, "# edge_order: check-major ascending")?;
    for value in weights.raw() {
        writeln!(out, "{value}")?;
    }
    Ok(())
}

fn read_header_line(
    lines: &[String],
    cursor: &mut usize,
    key: &'static str,
) -> Result<String, WeightFileError> {
    let line_no = *cursor + 1;
    let line = lines
        .get(*cursor)
        .ok_or(WeightFileError::MissingHeader { line: line_no, key })?;
    let prefix = format!("# {key}:");
    let rest = line
        .strip_prefix(&prefix)
        .ok_or(WeightFileError::MissingHeader { line: line_no, key })?;
    *cursor += 1;
    Ok(rest.trim().to_string())
}

/// Reads a weight file produced by [`write_weights`].
pub fn read_weights<R: BufRead>(input: R) -> Result<(WeightSet, WeightFileMeta), WeightFileError> {
    let mut lines = Vec::new();
    for line in input.lines() {
        lines.push(line?);
    }
    let mut cursor = 0usize;

    let format = read_header_line(&lines, &mut cursor, "format")?;
    if format != WEIGHT_FORMAT {
        return Err(WeightFileError::UnknownFormat(format));
    }
    let code_name = read_header_line(&lines, &mut cursor, "code")?;
    fn parse_usize(line: usize, value: String) -> Result<usize, WeightFileError> {
        value.parse().map_err(|_| WeightFileError::BadValue {
            line,
            value,
            what: "an integer",
        })
    }
    let n_text = read_header_line(&lines, &mut cursor, "n")?;
    let n = parse_usize(cursor, n_text)?;
    let k_text = read_header_line(&lines, &mut cursor, "k")?;
    let k = parse_usize(cursor, k_text)?;
    let iters_text = read_header_line(&lines, &mut cursor, "iterations")?;
    let iterations = parse_usize(cursor, iters_text)?;
    let edges_text = read_header_line(&lines, &mut cursor, "edge_count")?;
    let edge_count = parse_usize(cursor, edges_text)?;
    let parametrization_text = read_header_line(&lines, &mut cursor, "parametrization")?;
    let parametrization = Parametrization::from_str(&parametrization_text).map_err(|_| {
        WeightFileError::BadValue {
            line: cursor,
            value: parametrization_text,
            what: "a parametrization",
        }
    })?;
    read_header_line(&lines, &mut cursor, "edge_order")?;

    let mut raw = Vec::with_capacity(iterations * edge_count);
    for (offset, line) in lines[cursor..].iter().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|_| WeightFileError::BadValue {
            line: cursor + offset + 1,
            value: trimmed.to_string(),
            what: "a floating-point value",
        })?;
        raw.push(value);
    }
    if raw.len() != iterations * edge_count {
        return Err(WeightFileError::ValueCount {
            expected: iterations * edge_count,
            found: raw.len(),
        });
    }
    let weights = WeightSet::from_raw(iterations, edge_count, parametrization, raw)?;
    Ok((weights, WeightFileMeta { code_name, n, k }))
}
