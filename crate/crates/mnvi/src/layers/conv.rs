//! Moment propagation through convolutional layers.

use super::NoisyConvParams;
use crate::error::{Error, Result};
use crate::moments::{MomentImageBatch, MomentTensor};
use crate::real::Real;
use ndarray::{Array3, Array4};

/// Output spatial side for a square input side under the usual
/// `floor((side + 2*padding - kernel)/stride) + 1` rule.
pub fn conv_output_side(side: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if side + 2 * padding < kernel {
        return Err(Error::shape(
            "conv_output_side",
            format!("padded side {} smaller than kernel {kernel}", side + 2 * padding),
        ));
    }
    Ok((side + 2 * padding - kernel) / stride + 1)
}

/// Plain cross-correlation of a weight stack with a feature tensor;
/// shared by the mean path, the variance path (with squared weights)
/// and the Monte Carlo oracle's deterministic passes.
pub(crate) fn conv2d<R: Real>(
    weights: &Array4<R>,
    input: &Array3<R>,
    stride: usize,
    padding: usize,
) -> Array3<R> {
    let (out_ch, in_ch, k, _) = weights.dim();
    let (ic, h, w) = input.dim();
    debug_assert_eq!(in_ch, ic);
    let h_out = (h + 2 * padding - k) / stride + 1;
    let w_out = (w + 2 * padding - k) / stride + 1;
    let mut out = Array3::zeros((out_ch, h_out, w_out));
    for oc in 0..out_ch {
        for oi in 0..h_out {
            for oj in 0..w_out {
                let mut acc = R::zero();
                for ci in 0..in_ch {
                    for di in 0..k {
                        let i = (oi * stride + di) as isize - padding as isize;
                        if i < 0 || i >= h as isize {
                            continue;
                        }
                        for dj in 0..k {
                            let j = (oj * stride + dj) as isize - padding as isize;
                            if j < 0 || j >= w as isize {
                                continue;
                            }
                            acc += weights[[oc, ci, di, dj]] * input[[ci, i as usize, j as usize]];
                        }
                    }
                }
                out[[oc, oi, oj]] = acc;
            }
        }
    }
    out
}

/// Multiplicative-noise convolution on a batch of moment tensors.
///
/// Mean: `conv(M, x) + bias`. Variance: `conv(M o M, (1+alpha_c) o v +
/// alpha_c o x o x)` with the noise variance broadcast per input channel —
/// exactly one extra convolution for the variance path.
pub fn mnvi_conv_forward_batch<R: Real>(
    params: &NoisyConvParams<R>,
    input: &MomentImageBatch<R>,
) -> Result<MomentImageBatch<R>> {
    let (b, c, h, w) = input.dim();
    if c != params.in_channels() {
        return Err(Error::shape(
            "mnvi_conv_forward",
            format!("input channels {} != layer in_channels {}", c, params.in_channels()),
        ));
    }
    let k = params.kernel();
    let h_out = conv_output_side(h, k, params.stride, params.padding)?;
    let w_out = conv_output_side(w, k, params.stride, params.padding)?;

    let alpha = params.alpha();
    let w_sq = params.weight_mean.mapv(|x| x * x);

    let mut mean = Array4::zeros((b, params.out_channels(), h_out, w_out));
    let mut var = Array4::zeros((b, params.out_channels(), h_out, w_out));

    for bi in 0..b {
        let x = input.mean.index_axis(ndarray::Axis(0), bi).to_owned();
        let v = input.var.index_axis(ndarray::Axis(0), bi).to_owned();

        let mut m_out = conv2d(&params.weight_mean, &x, params.stride, params.padding);
        for oc in 0..params.out_channels() {
            m_out
                .index_axis_mut(ndarray::Axis(0), oc)
                .mapv_inplace(|t| t + params.bias[oc]);
        }

        // t_c = (1 + alpha_c) v_c + alpha_c x_c^2, channelwise
        let mut t = Array3::zeros((c, h, w));
        for ci in 0..c {
            let a = alpha[ci];
            for i in 0..h {
                for j in 0..w {
                    let xv = x[[ci, i, j]];
                    t[[ci, i, j]] = (R::one() + a) * v[[ci, i, j]] + a * xv * xv;
                }
            }
        }
        let v_out = conv2d(&w_sq, &t, params.stride, params.padding);

        mean.index_axis_mut(ndarray::Axis(0), bi).assign(&m_out);
        var.index_axis_mut(ndarray::Axis(0), bi).assign(&v_out);
    }

    Ok(MomentImageBatch { mean, var })
}

/// Single-sample wrapper around [`mnvi_conv_forward_batch`].
pub fn mnvi_conv_forward<R: Real>(
    params: &NoisyConvParams<R>,
    input: &MomentTensor<R>,
) -> Result<MomentTensor<R>> {
    let out = mnvi_conv_forward_batch(params, &MomentImageBatch::from_tensor(input))?;
    Ok(out.image(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{mnvi_linear_forward, NoisyLinearParams};
    use crate::moments::MomentVector;
    use ndarray::{array, Array1, Array3, Array4};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_by_one_kernel_reduces_to_linear_per_pixel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let in_ch = 3;
        let out_ch = 2;
        let w = Array4::from_shape_fn((out_ch, in_ch, 1, 1), |_| rng.gen_range(-1.0f64..1.0));
        let rho = Array1::from_shape_fn(in_ch, |_| rng.gen_range(-3.0..0.0));
        let bias = Array1::from_shape_fn(out_ch, |_| rng.gen_range(-0.5..0.5));
        let conv = NoisyConvParams::new(w.clone(), rho.clone(), bias.clone(), 1, 0).unwrap();

        let h = 4;
        let mean = Array3::from_shape_fn((in_ch, h, h), |_| rng.gen_range(-2.0..2.0));
        let var = Array3::from_shape_fn((in_ch, h, h), |_| rng.gen_range(0.0..1.0));
        let input = MomentTensor::new(mean.clone(), var.clone()).unwrap();
        let out = mnvi_conv_forward(&conv, &input).unwrap();

        // same weights as a linear layer applied at each pixel
        let w_lin = w
            .clone()
            .into_shape_with_order((out_ch, in_ch))
            .unwrap();
        let lin = NoisyLinearParams::new(w_lin, rho, bias).unwrap();
        for i in 0..h {
            for j in 0..h {
                let px = MomentVector::new(
                    Array1::from_shape_fn(in_ch, |c| mean[[c, i, j]]),
                    Array1::from_shape_fn(in_ch, |c| var[[c, i, j]]),
                )
                .unwrap();
                let lo = mnvi_linear_forward(&lin, &px).unwrap();
                for oc in 0..out_ch {
                    assert!((out.mean[[oc, i, j]] - lo.mean[oc]).abs() < 1e-12);
                    assert!((out.var[[oc, i, j]] - lo.var[oc]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_noise_zero_input_variance_gives_zero_output_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = NoisyConvParams::new(
            Array4::from_shape_fn((2, 2, 3, 3), |_| rng.gen_range(-1.0..1.0)),
            Array1::from_elem(2, -60.0), // alpha ~ 8e-27
            Array1::zeros(2),
            1,
            1,
        )
        .unwrap();
        let input = MomentTensor::deterministic(Array3::from_shape_fn((2, 4, 4), |_| {
            rng.gen_range(-1.0f64..1.0)
        }));
        let out = mnvi_conv_forward(&params, &input).unwrap();
        assert!(out.var.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn padding_and_stride_shapes() {
        assert_eq!(conv_output_side(4, 3, 1, 0).unwrap(), 2);
        assert_eq!(conv_output_side(4, 3, 1, 1).unwrap(), 4);
        assert_eq!(conv_output_side(5, 3, 2, 1).unwrap(), 3);
        assert!(conv_output_side(2, 5, 1, 0).is_err());
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let params: NoisyConvParams<f64> = NoisyConvParams::new(
            Array4::zeros((1, 2, 3, 3)),
            Array1::zeros(2),
            Array1::zeros(1),
            1,
            0,
        )
        .unwrap();
        let input = MomentTensor::deterministic(Array3::zeros((3, 4, 4)));
        assert!(mnvi_conv_forward(&params, &input).is_err());
    }

    #[test]
    fn hand_checked_single_window() {
        // one output pixel: 1 channel, 2x2 input, 2x2 kernel
        let w: Array4<f64> = Array4::from_shape_vec((1, 1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let params = NoisyConvParams::new(w, array![0.0], array![0.5], 1, 0).unwrap();
        // alpha = softplus(0) = ln 2
        let a = std::f64::consts::LN_2;
        let x = Array3::from_shape_vec((1, 2, 2), vec![1.0, -1.0, 0.5, 2.0]).unwrap();
        let v = Array3::from_shape_vec((1, 2, 2), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out =
            mnvi_conv_forward(&params, &MomentTensor::new(x.clone(), v.clone()).unwrap()).unwrap();
        let mean_expect = 1.0 * 1.0 + 2.0 * (-1.0) + 3.0 * 0.5 + 4.0 * 2.0 + 0.5;
        assert!((out.mean[[0, 0, 0]] - mean_expect).abs() < 1e-14);
        let mut var_expect = 0.0;
        for (wi, (xi, vi)) in [1.0, 2.0, 3.0, 4.0]
            .iter()
            .zip([(1.0, 0.1), (-1.0, 0.2), (0.5, 0.3), (2.0, 0.4)])
        {
            var_expect += wi * wi * ((1.0 + a) * vi + a * xi * xi);
        }
        assert!((out.var[[0, 0, 0]] - var_expect).abs() < 1e-14);
    }
}
