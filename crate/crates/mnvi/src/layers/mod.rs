//! Forward moment propagation for every layer type.
//!
//! Layers map an input moment pair to an output moment pair. Two weight
//! posteriors are supported for linear maps: the multiplicative-noise
//! parameterization (weight variance tied to the squared weight mean via a
//! per-input noise variance `alpha`) and the mean-field baseline (one free
//! variance per weight). Activations, batch norm and pooling propagate
//! moments through their respective approximations.

mod activation;
mod batchnorm;
mod conv;
mod linear;
mod pool;

pub use activation::{
    relu_moments, relu_moments_batch, relu_moments_batch_with_aux, taylor_activation_moments,
    taylor_activation_moments_batch, ActivationKind, ReluAux,
};
pub use batchnorm::{batchnorm_forward, BatchNormMode, BatchNormState};
pub use conv::{conv_output_side, mnvi_conv_forward, mnvi_conv_forward_batch};
pub use linear::{
    det_linear_forward_batch, mfvi_linear_forward, mfvi_linear_forward_batch, mnvi_linear_forward,
    mnvi_linear_forward_batch,
};
pub use pool::{flatten_batch, maxpool_forward, maxpool_forward_batch, MaxPoolAux};

use crate::error::{Error, Result};
use crate::real::Real;
use ndarray::{Array1, Array2, Array4};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Numerically stable softplus `log(1 + exp(x))`.
///
/// Saturates to the identity above 30 and to `exp(x)` below -30, where
/// the neglected term is below machine epsilon.
#[inline]
pub fn softplus<R: Real>(x: R) -> R {
    if x > R::c(30.0) {
        x
    } else if x < R::c(-30.0) {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Derivative of softplus: the logistic sigmoid, computed without overflow.
#[inline]
pub fn sigmoid<R: Real>(x: R) -> R {
    if x >= R::zero() {
        R::one() / (R::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (R::one() + e)
    }
}

/// Noise variance from its unconstrained pre-parameter: `alpha = softplus(rho)`.
#[inline]
pub fn alpha_of_rho<R: Real>(rho: R) -> R {
    softplus(rho)
}

/// Linear layer with multiplicative-noise posterior: weight means `M`
/// (`out x in`), one unconstrained noise pre-parameter per input unit,
/// and a deterministic bias on the mean path.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyLinearParams<R: Real> {
    pub weight_mean: Array2<R>,
    pub rho: Array1<R>,
    pub bias: Array1<R>,
}

impl<R: Real> NoisyLinearParams<R> {
    pub fn new(weight_mean: Array2<R>, rho: Array1<R>, bias: Array1<R>) -> Result<Self> {
        let (out_dim, in_dim) = weight_mean.dim();
        if rho.len() != in_dim {
            return Err(Error::shape(
                "NoisyLinearParams",
                format!("rho length {} != in_dim {}", rho.len(), in_dim),
            ));
        }
        if bias.len() != out_dim {
            return Err(Error::shape(
                "NoisyLinearParams",
                format!("bias length {} != out_dim {}", bias.len(), out_dim),
            ));
        }
        Ok(Self {
            weight_mean,
            rho,
            bias,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight_mean.dim().1
    }

    pub fn out_dim(&self) -> usize {
        self.weight_mean.dim().0
    }

    /// Per-input noise variances `alpha_j = softplus(rho_j)`.
    pub fn alpha(&self) -> Array1<R> {
        self.rho.mapv(softplus)
    }
}

impl NoisyLinearParams<f64> {
    /// Weight means from N(0, 2/fan_in), bias zero, `rho` at the given
    /// initial value for every input unit.
    pub fn init(in_dim: usize, out_dim: usize, rho_init: f64, rng: &mut impl Rng) -> Self {
        let normal = Normal::new(0.0, (2.0 / in_dim as f64).sqrt()).unwrap();
        let weight_mean = Array2::from_shape_fn((out_dim, in_dim), |_| normal.sample(rng));
        Self {
            weight_mean,
            rho: Array1::from_elem(in_dim, rho_init),
            bias: Array1::zeros(out_dim),
        }
    }
}

/// Mean-field baseline: one free (softplus-parameterized) variance per weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldLinearParams<R: Real> {
    pub weight_mean: Array2<R>,
    pub raw_var: Array2<R>,
    pub bias: Array1<R>,
}

impl<R: Real> MeanFieldLinearParams<R> {
    pub fn new(weight_mean: Array2<R>, raw_var: Array2<R>, bias: Array1<R>) -> Result<Self> {
        if weight_mean.dim() != raw_var.dim() {
            return Err(Error::shape(
                "MeanFieldLinearParams",
                format!(
                    "raw_var shape {:?} != weight shape {:?}",
                    raw_var.dim(),
                    weight_mean.dim()
                ),
            ));
        }
        if bias.len() != weight_mean.dim().0 {
            return Err(Error::shape(
                "MeanFieldLinearParams",
                format!(
                    "bias length {} != out_dim {}",
                    bias.len(),
                    weight_mean.dim().0
                ),
            ));
        }
        Ok(Self {
            weight_mean,
            raw_var,
            bias,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight_mean.dim().1
    }

    pub fn out_dim(&self) -> usize {
        self.weight_mean.dim().0
    }

    /// Per-weight variances `s_ij = softplus(raw_var_ij)`.
    pub fn weight_var(&self) -> Array2<R> {
        self.raw_var.mapv(softplus)
    }
}

impl MeanFieldLinearParams<f64> {
    pub fn init(in_dim: usize, out_dim: usize, raw_var_init: f64, rng: &mut impl Rng) -> Self {
        let normal = Normal::new(0.0, (2.0 / in_dim as f64).sqrt()).unwrap();
        let weight_mean = Array2::from_shape_fn((out_dim, in_dim), |_| normal.sample(rng));
        Self {
            weight_mean,
            raw_var: Array2::from_elem((out_dim, in_dim), raw_var_init),
            bias: Array1::zeros(out_dim),
        }
    }
}

/// Convolutional layer with multiplicative-noise posterior; the noise
/// variance is shared within each input channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyConvParams<R: Real> {
    /// `out_ch x in_ch x k x k`
    pub weight_mean: Array4<R>,
    /// one pre-parameter per input channel
    pub rho: Array1<R>,
    pub bias: Array1<R>,
    pub stride: usize,
    pub padding: usize,
}

impl<R: Real> NoisyConvParams<R> {
    pub fn new(
        weight_mean: Array4<R>,
        rho: Array1<R>,
        bias: Array1<R>,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        let (out_ch, in_ch, kh, kw) = weight_mean.dim();
        if kh != kw {
            return Err(Error::shape(
                "NoisyConvParams",
                format!("kernel must be square, got {kh}x{kw}"),
            ));
        }
        if rho.len() != in_ch {
            return Err(Error::shape(
                "NoisyConvParams",
                format!("rho length {} != in_ch {}", rho.len(), in_ch),
            ));
        }
        if bias.len() != out_ch {
            return Err(Error::shape(
                "NoisyConvParams",
                format!("bias length {} != out_ch {}", bias.len(), out_ch),
            ));
        }
        if stride == 0 {
            return Err(Error::pre("NoisyConvParams", "stride must be >= 1"));
        }
        Ok(Self {
            weight_mean,
            rho,
            bias,
            stride,
            padding,
        })
    }

    pub fn kernel(&self) -> usize {
        self.weight_mean.dim().2
    }

    pub fn in_channels(&self) -> usize {
        self.weight_mean.dim().1
    }

    pub fn out_channels(&self) -> usize {
        self.weight_mean.dim().0
    }

    pub fn alpha(&self) -> Array1<R> {
        self.rho.mapv(softplus)
    }
}

impl NoisyConvParams<f64> {
    pub fn init(
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rho_init: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = in_ch * kernel * kernel;
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
        let weight_mean =
            Array4::from_shape_fn((out_ch, in_ch, kernel, kernel), |_| normal.sample(rng));
        Self {
            weight_mean,
            rho: Array1::from_elem(in_ch, rho_init),
            bias: Array1::zeros(out_ch),
            stride,
            padding,
        }
    }
}

/// Shape descriptor used for parameter accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerShape {
    MnviLinear { in_dim: usize, out_dim: usize },
    MfviLinear { in_dim: usize, out_dim: usize },
    DetLinear { in_dim: usize, out_dim: usize },
    MnviConv { in_ch: usize, out_ch: usize, kernel: usize },
    BatchNorm { dim: usize },
}

/// Counts `(mean_parameters, uncertainty_parameters)` for a layer.
///
/// The mean side covers weights plus bias (or the affine batch-norm pair);
/// the uncertainty side counts whatever parameterizes the posterior
/// variance: one `rho` per input unit (or channel) for the
/// multiplicative-noise layers, one entry per weight for mean-field.
pub fn count_parameters(layer: LayerShape) -> (usize, usize) {
    match layer {
        LayerShape::MnviLinear { in_dim, out_dim } => (in_dim * out_dim + out_dim, in_dim),
        LayerShape::MfviLinear { in_dim, out_dim } => (in_dim * out_dim + out_dim, in_dim * out_dim),
        LayerShape::DetLinear { in_dim, out_dim } => (in_dim * out_dim + out_dim, 0),
        LayerShape::MnviConv {
            in_ch,
            out_ch,
            kernel,
        } => (in_ch * out_ch * kernel * kernel + out_ch, in_ch),
        LayerShape::BatchNorm { dim } => (2 * dim, 0),
    }
}
