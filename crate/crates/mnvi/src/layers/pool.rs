//! Max pooling and flattening on moment tensors.

use crate::error::{Error, Result};
use crate::moments::{MomentBatch, MomentImageBatch, MomentTensor};
use crate::real::Real;
use ndarray::{Array2, Array4};

/// Argmax bookkeeping for the pooling adjoint: for each output cell the
/// flat `(row, col)` of the selected input inside the full feature map.
#[derive(Debug, Clone)]
pub struct MaxPoolAux {
    pub argmax: Array4<(usize, usize)>,
}

/// Max pool over windows of the means: each output takes the mean and the
/// variance of the input cell whose mean is largest in the window.
/// Ties resolve to the first cell in row-major scan order.
pub fn maxpool_forward_batch<R: Real>(
    input: &MomentImageBatch<R>,
    window: usize,
    stride: usize,
) -> Result<(MomentImageBatch<R>, MaxPoolAux)> {
    if window == 0 || stride == 0 {
        return Err(Error::pre("maxpool_forward", "window and stride must be >= 1"));
    }
    let (b, c, h, w) = input.dim();
    if h < window || w < window {
        return Err(Error::shape(
            "maxpool_forward",
            format!("input {h}x{w} smaller than window {window}"),
        ));
    }
    let h_out = (h - window) / stride + 1;
    let w_out = (w - window) / stride + 1;
    let mut mean = Array4::zeros((b, c, h_out, w_out));
    let mut var = Array4::zeros((b, c, h_out, w_out));
    let mut argmax = Array4::from_elem((b, c, h_out, w_out), (0usize, 0usize));

    for bi in 0..b {
        for ci in 0..c {
            for oi in 0..h_out {
                for oj in 0..w_out {
                    let i0 = oi * stride;
                    let j0 = oj * stride;
                    let mut best = (i0, j0);
                    let mut best_val = input.mean[[bi, ci, i0, j0]];
                    for di in 0..window {
                        for dj in 0..window {
                            let val = input.mean[[bi, ci, i0 + di, j0 + dj]];
                            if val > best_val {
                                best_val = val;
                                best = (i0 + di, j0 + dj);
                            }
                        }
                    }
                    mean[[bi, ci, oi, oj]] = best_val;
                    var[[bi, ci, oi, oj]] = input.var[[bi, ci, best.0, best.1]];
                    argmax[[bi, ci, oi, oj]] = best;
                }
            }
        }
    }
    Ok((MomentImageBatch { mean, var }, MaxPoolAux { argmax }))
}

/// Single-sample max pool.
pub fn maxpool_forward<R: Real>(
    input: &MomentTensor<R>,
    window: usize,
    stride: usize,
) -> Result<MomentTensor<R>> {
    let (out, _) = maxpool_forward_batch(&MomentImageBatch::from_tensor(input), window, stride)?;
    Ok(out.image(0))
}

/// Flattens `batch x c x h x w` moments to `batch x (c*h*w)` in row-major
/// order. Pure reshape on both mean and variance.
pub fn flatten_batch<R: Real>(input: &MomentImageBatch<R>) -> MomentBatch<R> {
    let (b, c, h, w) = input.dim();
    let d = c * h * w;
    let reshape = |a: &Array4<R>| -> Array2<R> {
        a.to_owned()
            .into_shape_with_order((b, d))
            .expect("contiguous row-major reshape")
    };
    MomentBatch {
        mean: reshape(&input.mean),
        var: reshape(&input.var),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn tensor_from(mean: Vec<f64>, var: Vec<f64>, c: usize, h: usize, w: usize) -> MomentTensor<f64> {
        MomentTensor::new(
            Array3::from_shape_vec((c, h, w), mean).unwrap(),
            Array3::from_shape_vec((c, h, w), var).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn picks_variance_of_the_argmax_mean() {
        let t = tensor_from(vec![1.0, 3.0, 0.0, -1.0], vec![0.2, 0.5, 0.1, 0.9], 1, 2, 2);
        let out = maxpool_forward(&t, 2, 2).unwrap();
        assert_eq!(out.mean[[0, 0, 0]], 3.0);
        assert_eq!(out.var[[0, 0, 0]], 0.5);
    }

    #[test]
    fn ties_resolve_to_first_in_row_major_order() {
        let t = tensor_from(vec![2.0, 2.0, 2.0, 2.0], vec![0.1, 0.2, 0.3, 0.4], 1, 2, 2);
        let out = maxpool_forward(&t, 2, 2).unwrap();
        assert_eq!(out.var[[0, 0, 0]], 0.1);
    }

    #[test]
    fn zero_variance_matches_deterministic_pool() {
        let mean = vec![0.5, -1.0, 2.0, 0.0, 1.0, 1.5, -0.5, 0.25, 0.75];
        let t = tensor_from(mean.clone(), vec![0.0; 9], 1, 3, 3);
        let out = maxpool_forward(&t, 2, 1).unwrap();
        // hand-computed 2x2 windows over the 3x3 map
        assert_eq!(out.mean[[0, 0, 0]], 1.0);
        assert_eq!(out.mean[[0, 0, 1]], 2.0);
        assert_eq!(out.mean[[0, 1, 0]], 1.0);
        assert_eq!(out.mean[[0, 1, 1]], 1.5);
        assert!(out.var.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn flatten_is_row_major() {
        let t = tensor_from(
            (0..8).map(|x| x as f64).collect(),
            (0..8).map(|x| x as f64 * 0.1).collect(),
            2,
            2,
            2,
        );
        let flat = flatten_batch(&MomentImageBatch::from_tensor(&t));
        assert_eq!(flat.dim(), (1, 8));
        for i in 0..8 {
            assert_eq!(flat.mean[[0, i]], i as f64);
        }
    }
}
