//! Batch normalization as a (per-batch) linear layer on the moments.

use crate::error::{Error, Result};
use crate::moments::MomentBatch;
use crate::real::Real;
use ndarray::{Array1, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchNormMode {
    Train,
    Eval,
}

/// Running statistics, updated by exponential moving average in train mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState<R: Real> {
    pub running_mean: Array1<R>,
    pub running_var: Array1<R>,
    /// EMA weight on the fresh batch statistic (0.1 by convention).
    pub momentum: R,
}

impl<R: Real> BatchNormState<R> {
    pub fn new(dim: usize) -> Self {
        Self {
            running_mean: Array1::zeros(dim),
            running_var: Array1::from_elem(dim, R::one()),
            momentum: R::c(0.1),
        }
    }
}

/// Normalizes the mean path with batch (or running) statistics of the
/// means and scales the variance path by `gamma^2 / (var(x) + eps)`.
///
/// Batch statistics use the population (biased) variance convention; the
/// same convention feeds the running EMA. Gamma and beta are deterministic
/// point parameters. Train mode requires a batch of at least two rows.
pub fn batchnorm_forward<R: Real>(
    input: &MomentBatch<R>,
    gamma: &Array1<R>,
    beta: &Array1<R>,
    eps: R,
    mode: BatchNormMode,
    state: &mut BatchNormState<R>,
) -> Result<MomentBatch<R>> {
    let (b, d) = input.dim();
    if gamma.len() != d || beta.len() != d || state.running_mean.len() != d {
        return Err(Error::shape(
            "batchnorm_forward",
            format!(
                "feature dim {} vs gamma {} beta {} running {}",
                d,
                gamma.len(),
                beta.len(),
                state.running_mean.len()
            ),
        ));
    }
    let (stat_mean, stat_var) = match mode {
        BatchNormMode::Train => {
            if b < 2 {
                return Err(Error::pre(
                    "batchnorm_forward",
                    format!("train mode needs batch size >= 2, got {b}"),
                ));
            }
            let mean = input.mean.mean_axis(Axis(0)).unwrap();
            let centered = &input.mean - &mean;
            let var = centered.mapv(|x| x * x).mean_axis(Axis(0)).unwrap();
            let keep = R::one() - state.momentum;
            state.running_mean =
                &state.running_mean.mapv(|x| x * keep) + &mean.mapv(|x| x * state.momentum);
            state.running_var =
                &state.running_var.mapv(|x| x * keep) + &var.mapv(|x| x * state.momentum);
            (mean, var)
        }
        BatchNormMode::Eval => (state.running_mean.clone(), state.running_var.clone()),
    };

    let inv_std = stat_var.mapv(|s| R::one() / (s + eps).sqrt());
    let scale = gamma * &inv_std; // per-feature multiplier on the mean path
    let mean = &(&(&input.mean - &stat_mean) * &scale) + beta;
    let var_scale = scale.mapv(|g| g * g);
    let var = &input.var * &var_scale;

    Ok(MomentBatch { mean, var })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn unit_batch_variance_passes_variance_through() {
        // batch means {0, 2}: population var = 1; gamma = 1, eps = 0
        let input: MomentBatch<f64> = MomentBatch::new(
            array![[0.0], [2.0]],
            array![[0.5], [0.25]],
        )
        .unwrap();
        let mut state = BatchNormState::new(1);
        let out = batchnorm_forward(
            &input,
            &array![1.0],
            &array![0.0],
            0.0,
            BatchNormMode::Train,
            &mut state,
        )
        .unwrap();
        assert!((out.var[[0, 0]] - 0.5).abs() < 1e-14);
        assert!((out.var[[1, 0]] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn zero_gamma_collapses_to_beta() {
        let input: MomentBatch<f64> = MomentBatch::new(
            array![[1.0], [3.0]],
            array![[0.5], [0.25]],
        )
        .unwrap();
        let mut state = BatchNormState::new(1);
        let out = batchnorm_forward(
            &input,
            &array![0.0],
            &array![7.0],
            1e-5,
            BatchNormMode::Train,
            &mut state,
        )
        .unwrap();
        assert_eq!(out.mean, array![[7.0], [7.0]]);
        assert_eq!(out.var, array![[0.0], [0.0]]);
    }

    #[test]
    fn population_variance_convention() {
        // batch means {1, 3}: population var(x) = 1 (not 2), gamma = 2, eps = 0
        // -> v' = gamma^2 v / var(x) = 4 v
        let input: MomentBatch<f64> = MomentBatch::new(
            array![[1.0], [3.0]],
            array![[0.3], [0.1]],
        )
        .unwrap();
        let mut state = BatchNormState::new(1);
        let out = batchnorm_forward(
            &input,
            &array![2.0],
            &array![0.0],
            0.0,
            BatchNormMode::Train,
            &mut state,
        )
        .unwrap();
        assert!((out.var[[0, 0]] - 1.2).abs() < 1e-14);
        assert!((out.var[[1, 0]] - 0.4).abs() < 1e-14);
        // EMA with momentum 0.1 from (0, 1) start
        assert!((state.running_mean[0] - 0.2).abs() < 1e-14);
        assert!((state.running_var[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eval_mode_uses_running_stats_and_allows_single_row() {
        let mut state: BatchNormState<f64> = BatchNormState::new(2);
        state.running_mean = array![1.0, -1.0];
        state.running_var = array![4.0, 0.25];
        let input: MomentBatch<f64> = MomentBatch::new(array![[3.0, 0.0]], array![[1.0, 1.0]]).unwrap();
        let out = batchnorm_forward(
            &input,
            &array![1.0, 1.0],
            &array![0.0, 0.0],
            0.0,
            BatchNormMode::Eval,
            &mut state,
        )
        .unwrap();
        assert!((out.mean[[0, 0]] - 1.0).abs() < 1e-14); // (3-1)/2
        assert!((out.mean[[0, 1]] - 2.0).abs() < 1e-14); // (0+1)/0.5
        assert!((out.var[[0, 0]] - 0.25).abs() < 1e-14);
        assert!((out.var[[0, 1]] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn train_mode_rejects_tiny_batches() {
        let input: MomentBatch<f64> = MomentBatch::new(Array2::zeros((1, 3)), Array2::zeros((1, 3))).unwrap();
        let mut state = BatchNormState::new(3);
        let err = batchnorm_forward(
            &input,
            &Array1::ones(3),
            &Array1::zeros(3),
            1e-5,
            BatchNormMode::Train,
            &mut state,
        );
        assert!(err.is_err());
    }
}
