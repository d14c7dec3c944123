//! The soft syndrome, the losses built on it, and their gradients.
//!
//! The soft syndrome relaxes the hard syndrome: per check, the product of
//! signs scaled by the minimum magnitude over the check's variables — the
//! same formula as the min-sum check node update, which is what gives it a
//! usable (sub)gradient. The syndrome loss hinges each entry against a
//! margin of 1 and needs no knowledge of the transmitted codeword; the
//! cross-entropy loss is the usual supervised term; the combined loss blends
//! the two with a factor lambda. The multi-loss sums the combined loss over
//! every decoding iteration's soft output.
//!
//! `loss_gradient` backpropagates the multi-loss through the unrolled
//! decoder to the raw weight parameters. Subgradient conventions: the hinge
//! contributes nothing at or beyond the margin; min operations route their
//! gradient to the recorded argmin witness only, with sign factors treated
//! as locally constant.

use crate::decoder::{DecodeTrace, WeightSet, NO_WITNESS};
use crate::linear_code::TannerGraph;
use crate::numerics::{sigmoid, sign_pm};
use crate::Parametrization;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("expected a vector of length {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("codeword entry at position {index} is not 0 or 1")]
    NonBinarySymbol { index: usize },
    #[error("lambda must lie in [0, 1], got {lambda}")]
    LambdaOutOfRange { lambda: f64 },
    #[error(
        "trace records {trace_iterations} iterations over {trace_edges} edges, \
         weights are shaped {weight_iterations} x {weight_edges}"
    )]
    TraceMismatch {
        trace_iterations: usize,
        trace_edges: usize,
        weight_iterations: usize,
        weight_edges: usize,
    },
}

/// One evaluation of the combined loss, with its parts kept separate.
///
/// `total = sum over iterations of (1-lambda)*syndrome + lambda*cross_entropy`.
/// The part that lambda switches off entirely is reported as 0 and is never
/// evaluated, so unsupervised runs (`lambda = 0`) cannot read the codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub syndrome_part: f64,
    pub cross_entropy_part: f64,
    pub lambda: f64,
    pub total: f64,
    pub per_iteration: Vec<f64>,
}

/// Soft syndrome with the bookkeeping the gradient needs: per check, the
/// variable attaining the minimum magnitude (lowest index on ties) and the
/// product of signs over the whole check.
#[derive(Debug, Clone)]
pub struct SoftSyndrome {
    pub values: Vec<f64>,
    pub witnesses: Vec<usize>,
    pub sign_products: Vec<f64>,
}

fn check_length(expected: usize, found: usize) -> Result<(), LossError> {
    if expected != found {
        return Err(LossError::LengthMismatch { expected, found });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), LossError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LossError::LambdaOutOfRange { lambda });
    }
    Ok(())
}

/// Soft syndrome of a soft output: entry i is
/// `min_{j in M(i)} |s_j| * prod_{j in M(i)} sign(s_j)`, with `sign(0) = +1`.
pub fn soft_syndrome(s: &[f64], graph: &TannerGraph) -> Result<Vec<f64>, LossError> {
    Ok(soft_syndrome_detailed(s, graph)?.values)
}

/// Soft syndrome plus argmin witnesses and sign products.
pub fn soft_syndrome_detailed(s: &[f64], graph: &TannerGraph) -> Result<SoftSyndrome, LossError> {
    check_length(graph.num_vars(), s.len())?;
    let m = graph.num_checks();
    let mut values = Vec::with_capacity(m);
    let mut witnesses = Vec::with_capacity(m);
    let mut sign_products = Vec::with_capacity(m);
    for i in 0..m {
        let mut min_abs = f64::INFINITY;
        let mut witness = NO_WITNESS;
        let mut sign = 1.0;
        for &j in graph.check_neighbors(i) {
            sign *= sign_pm(s[j]);
            let a = s[j].abs();
            if a < min_abs {
                min_abs = a;
                witness = j;
            }
        }
        values.push(sign * min_abs);
        witnesses.push(witness);
        sign_products.push(sign);
    }
    Ok(SoftSyndrome {
        values,
        witnesses,
        sign_products,
    })
}

/// Mean hinge penalty over checks: `(1/(n-k)) * sum_i max(1 - softsynd_i, 0)`.
/// Zero exactly when every check is satisfied with margin at least 1;
/// codeword-agnostic, hence usable unsupervised.
pub fn syndrome_loss(s: &[f64], graph: &TannerGraph) -> Result<f64, LossError> {
    let values = soft_syndrome(s, graph)?;
    let m = values.len() as f64;
    Ok(values.iter().map(|&v| (1.0 - v).max(0.0)).sum::<f64>() / m)
}

/// Binary cross-entropy between the transmitted codeword and the soft
/// output, evaluated in fused log-sigmoid form so large |s| cannot overflow.
/// Positive s means bit 0, so the per-bit term is `softplus(s_j)` for a
/// transmitted 1 and `softplus(-s_j)` for a transmitted 0.
pub fn cross_entropy(c: &[u8], s: &[f64]) -> Result<f64, LossError> {
    check_length(s.len(), c.len())?;
    let mut sum = 0.0;
    for (index, (&bit, &sj)) in c.iter().zip(s).enumerate() {
        sum += match bit {
            0 => crate::numerics::softplus(-sj),
            1 => crate::numerics::softplus(sj),
            _ => return Err(LossError::NonBinarySymbol { index }),
        };
    }
    Ok(sum / s.len() as f64)
}

fn combined_parts(
    c: &[u8],
    s: &[f64],
    graph: &TannerGraph,
    lambda: f64,
) -> Result<(f64, f64, f64), LossError> {
    let syndrome = syndrome_loss(s, graph)?;
    let ce = if lambda > 0.0 {
        check_length(graph.num_vars(), c.len())?;
        cross_entropy(c, s)?
    } else {
        0.0
    };
    Ok((syndrome, ce, (1.0 - lambda) * syndrome + lambda * ce))
}

/// Convex combination `(1-lambda)*syndrome_loss + lambda*cross_entropy` for
/// a single soft output.
pub fn combined_loss(
    c: &[u8],
    s: &[f64],
    graph: &TannerGraph,
    lambda: f64,
) -> Result<LossBreakdown, LossError> {
    check_lambda(lambda)?;
    let (syndrome, ce, total) = combined_parts(c, s, graph, lambda)?;
    Ok(LossBreakdown {
        syndrome_part: syndrome,
        cross_entropy_part: ce,
        lambda,
        total,
        per_iteration: vec![total],
    })
}

/// Combined loss summed over every iteration's soft output, so earlier
/// iterations receive direct gradient signal.
pub fn multi_loss(
    trace: &DecodeTrace,
    c: &[u8],
    graph: &TannerGraph,
    lambda: f64,
) -> Result<LossBreakdown, LossError> {
    check_lambda(lambda)?;
    let mut syndrome_sum = 0.0;
    let mut ce_sum = 0.0;
    let mut total = 0.0;
    let mut per_iteration = Vec::with_capacity(trace.iterations());
    for s in &trace.soft_outputs {
        let (syndrome, ce, it_total) = combined_parts(c, s, graph, lambda)?;
        syndrome_sum += syndrome;
        ce_sum += ce;
        total += it_total;
        per_iteration.push(it_total);
    }
    Ok(LossBreakdown {
        syndrome_part: syndrome_sum,
        cross_entropy_part: ce_sum,
        lambda,
        total,
        per_iteration,
    })
}

/// Reverse-mode gradient of the multi-loss with respect to the raw weight
/// parameters, for a trace produced by `nnms_forward` under exactly these
/// weights.
///
/// Routing conventions, all deterministic: the hinge subgradient is 0 at and
/// beyond the margin; min operations send their gradient to the recorded
/// argmin witness only; sign factors are locally constant; the softplus
/// chain rule is applied when that parametrization is active.
pub fn loss_gradient(
    trace: &DecodeTrace,
    c: &[u8],
    graph: &TannerGraph,
    lambda: f64,
    weights: &WeightSet,
) -> Result<Vec<f64>, LossError> {
    check_lambda(lambda)?;
    let n = graph.num_vars();
    let m = graph.num_checks();
    let edges = graph.edge_count();
    let iterations = weights.iterations();
    if trace.iterations() != iterations
        || trace.v2c.iter().any(|v| v.len() != edges)
        || weights.edge_count() != edges
    {
        return Err(LossError::TraceMismatch {
            trace_iterations: trace.iterations(),
            trace_edges: trace.v2c.first().map_or(0, Vec::len),
            weight_iterations: iterations,
            weight_edges: weights.edge_count(),
        });
    }
    check_length(n, trace.input_llr.len())?;
    if lambda > 0.0 {
        check_length(n, c.len())?;
        if let Some(index) = c.iter().position(|&b| b > 1) {
            return Err(LossError::NonBinarySymbol { index });
        }
    }

    let effective = weights.effective();
    let mut grad_eff = vec![0.0; iterations * edges];
    // Adjoint of the current iteration's c2v messages. Entering pass t it
    // already holds the contributions flowing back from v2c at t+1.
    let mut adj_c2v = vec![0.0; edges];
    let mut adj_c2v_prev = vec![0.0; edges];
    let mut adj_s = vec![0.0; n];
    let mut adj_v2c = vec![0.0; edges];

    for t in (0..iterations).rev() {
        let s = &trace.soft_outputs[t];
        let wt = &effective[t * edges..(t + 1) * edges];

        // d(multi-loss)/d(s_t).
        adj_s.iter_mut().for_each(|v| *v = 0.0);
        if lambda < 1.0 {
            let ss = soft_syndrome_detailed(s, graph)?;
            let coef = -(1.0 - lambda) / m as f64;
            for i in 0..m {
                if ss.values[i] < 1.0 {
                    let j = ss.witnesses[i];
                    adj_s[j] += coef * ss.sign_products[i] * sign_pm(s[j]);
                }
            }
        }
        if lambda > 0.0 {
            let coef = lambda / n as f64;
            for j in 0..n {
                adj_s[j] += coef * (sigmoid(s[j]) - (1.0 - f64::from(c[j])));
            }
        }

        // Marginalization: s_t[j] = llr[j] + sum_e w_t[e] * c2v_t[e].
        let c2v_t = &trace.c2v[t];
        for j in 0..n {
            let a = adj_s[j];
            if a != 0.0 {
                for &e in graph.var_edges(j) {
                    grad_eff[t * edges + e] += a * c2v_t[e];
                    adj_c2v[e] += a * wt[e];
                }
            }
        }

        // Check update: gradient routes to the extrinsic argmin witness with
        // the sign product held constant.
        adj_v2c.iter_mut().for_each(|v| *v = 0.0);
        let v2c_t = &trace.v2c[t];
        let witness_t = &trace.argmin_witness[t];
        for i in 0..m {
            let range = graph.check_edges(i);
            if range.len() < 2 {
                continue; // degree-1 check: c2v is constant zero
            }
            let mut sign_all = 1.0;
            for e in range.clone() {
                sign_all *= sign_pm(v2c_t[e]);
            }
            for e in range {
                let a = adj_c2v[e];
                if a != 0.0 {
                    let w = witness_t[e];
                    debug_assert_ne!(w, NO_WITNESS);
                    let deriv = sign_all * sign_pm(v2c_t[e]) * sign_pm(v2c_t[w]);
                    adj_v2c[w] += a * deriv;
                }
            }
        }

        // Variable update: v2c_t[e(i,j)] = llr[j] + extrinsic sum of
        // w_t[e'] * c2v_{t-1}[e']. At t = 0 the previous messages are zero,
        // so neither weights nor earlier messages receive anything.
        adj_c2v_prev.iter_mut().for_each(|v| *v = 0.0);
        if t > 0 {
            let c2v_before = &trace.c2v[t - 1];
            for j in 0..n {
                let incident = graph.var_edges(j);
                for &e in incident {
                    let a = adj_v2c[e];
                    if a != 0.0 {
                        for &e2 in incident {
                            if e2 != e {
                                grad_eff[t * edges + e2] += a * c2v_before[e2];
                                adj_c2v_prev[e2] += a * wt[e2];
                            }
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut adj_c2v, &mut adj_c2v_prev);
    }

    // Chain rule through the parametrization.
    let grad_raw = match weights.parametrization() {
        Parametrization::Identity => grad_eff,
        Parametrization::Softplus => grad_eff
            .iter()
            .zip(weights.raw())
            .map(|(&g, &r)| g * sigmoid(r))
            .collect(),
    };
    Ok(grad_raw)
}
