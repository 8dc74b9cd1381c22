//! Moment propagation through linear layers.

use super::{MeanFieldLinearParams, NoisyLinearParams};
use crate::error::{Error, Result};
use crate::moments::{MomentBatch, MomentVector};
use crate::real::Real;
use ndarray::Array2;

/// Multiplicative-noise linear layer on a batch.
///
/// Mean: `X M^T + b`. Variance: `((1+alpha) o V + alpha o X o X) (M o M)^T`
/// — a single weighted matrix product, which is the point of tying the
/// weight variance to the squared weight mean.
pub fn mnvi_linear_forward_batch<R: Real>(
    params: &NoisyLinearParams<R>,
    input: &MomentBatch<R>,
) -> Result<MomentBatch<R>> {
    let (_, d) = input.dim();
    if d != params.in_dim() {
        return Err(Error::shape(
            "mnvi_linear_forward",
            format!("input dim {} != layer in_dim {}", d, params.in_dim()),
        ));
    }
    let alpha = params.alpha();
    let m = &params.weight_mean;
    let m_sq = m.mapv(|x| x * x);

    let mut mean = input.mean.dot(&m.t());
    mean += &params.bias;

    // t = (1 + alpha) o v + alpha o x o x, broadcast over rows
    let one_plus_alpha = alpha.mapv(|a| a + R::one());
    let t = &(&input.var * &one_plus_alpha) + &(&(&input.mean * &input.mean) * &alpha);
    let var = t.dot(&m_sq.t());

    Ok(MomentBatch { mean, var })
}

/// Single-sample wrapper around [`mnvi_linear_forward_batch`].
pub fn mnvi_linear_forward<R: Real>(
    params: &NoisyLinearParams<R>,
    input: &MomentVector<R>,
) -> Result<MomentVector<R>> {
    let out = mnvi_linear_forward_batch(params, &MomentBatch::from_vector(input))?;
    Ok(out.row(0))
}

/// Mean-field linear layer on a batch.
///
/// Mean: `X M^T + b`. Variance: `(V + X o X) S^T + V (M o M)^T` with one
/// free variance `s_ij` per weight — two weighted matrix products.
pub fn mfvi_linear_forward_batch<R: Real>(
    params: &MeanFieldLinearParams<R>,
    input: &MomentBatch<R>,
) -> Result<MomentBatch<R>> {
    let (_, d) = input.dim();
    if d != params.in_dim() {
        return Err(Error::shape(
            "mfvi_linear_forward",
            format!("input dim {} != layer in_dim {}", d, params.in_dim()),
        ));
    }
    let s = params.weight_var();
    mfvi_linear_forward_batch_with_var(&params.weight_mean, &s, &params.bias, input)
}

/// Mean-field forward with an explicit per-weight variance matrix
/// (no softplus); used internally and by the algebraic-identity tests.
pub(crate) fn mfvi_linear_forward_batch_with_var<R: Real>(
    weight_mean: &Array2<R>,
    weight_var: &Array2<R>,
    bias: &ndarray::Array1<R>,
    input: &MomentBatch<R>,
) -> Result<MomentBatch<R>> {
    let (_, d) = input.dim();
    if d != weight_mean.dim().1 {
        return Err(Error::shape(
            "mfvi_linear_forward",
            format!("input dim {} != layer in_dim {}", d, weight_mean.dim().1),
        ));
    }
    let m_sq = weight_mean.mapv(|x| x * x);
    let mut mean = input.mean.dot(&weight_mean.t());
    mean += bias;

    let second = &input.var + &(&input.mean * &input.mean);
    let var = second.dot(&weight_var.t()) + input.var.dot(&m_sq.t());
    Ok(MomentBatch { mean, var })
}

/// Single-sample wrapper around [`mfvi_linear_forward_batch`].
pub fn mfvi_linear_forward<R: Real>(
    params: &MeanFieldLinearParams<R>,
    input: &MomentVector<R>,
) -> Result<MomentVector<R>> {
    let out = mfvi_linear_forward_batch(params, &MomentBatch::from_vector(input))?;
    Ok(out.row(0))
}

/// Deterministic linear layer: point weights, variance propagated through
/// the squared weights only.
pub fn det_linear_forward_batch<R: Real>(
    weight: &Array2<R>,
    bias: &ndarray::Array1<R>,
    input: &MomentBatch<R>,
) -> Result<MomentBatch<R>> {
    let (_, d) = input.dim();
    if d != weight.dim().1 {
        return Err(Error::shape(
            "det_linear_forward",
            format!("input dim {} != layer in_dim {}", d, weight.dim().1),
        ));
    }
    let mut mean = input.mean.dot(&weight.t());
    mean += bias;
    let var = input.var.dot(&weight.mapv(|x| x * x).t());
    Ok(MomentBatch { mean, var })
}
