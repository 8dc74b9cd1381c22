//! Moment propagation through activation functions.

use crate::moments::{std_normal_cdf, std_normal_pdf, MomentBatch, MomentVector};
use crate::real::Real;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Forward intermediates of the ReLU moments, reused by the adjoint.
#[derive(Debug, Clone)]
pub struct ReluAux<R: Real> {
    pub sigma: Array2<R>,
    pub cdf: Array2<R>,
    pub pdf: Array2<R>,
    /// false where the output variance was clamped to zero
    pub var_active: Array2<bool>,
}

/// Closed-form moments of `max(Z, 0)` for Gaussian `Z`, batched.
///
/// With `z = mu/sigma`:
/// `E = mu Phi(z) + sigma phi(z)`,
/// `V = (mu^2 + sigma^2) Phi(z) + mu sigma phi(z) - E^2`, clamped at 0.
/// Inputs with zero variance degenerate to the deterministic ReLU.
pub fn relu_moments_batch_with_aux<R: Real>(input: &MomentBatch<R>) -> (MomentBatch<R>, ReluAux<R>) {
    let dim = input.mean.dim();
    let mut mean = Array2::zeros(dim);
    let mut var = Array2::zeros(dim);
    let mut sigma = Array2::zeros(dim);
    let mut cdf = Array2::zeros(dim);
    let mut pdf = Array2::zeros(dim);
    let mut var_active = Array2::from_elem(dim, true);

    ndarray::Zip::indexed(&input.mean).and(&input.var).for_each(|idx, &mu, &v| {
        if v <= R::zero() {
            // degenerate Gaussian: deterministic ReLU
            let e = mu.max(R::zero());
            mean[idx] = e;
            var[idx] = R::zero();
            sigma[idx] = R::zero();
            cdf[idx] = if mu > R::zero() { R::one() } else { R::zero() };
            pdf[idx] = R::zero();
            var_active[idx] = false;
        } else {
            let s = v.sqrt();
            let z = mu / s;
            let big_phi = std_normal_cdf(z);
            let small_phi = std_normal_pdf(z);
            let e = mu * big_phi + s * small_phi;
            let raw_v = (mu * mu + v) * big_phi + mu * s * small_phi - e * e;
            mean[idx] = e;
            var[idx] = raw_v.max(R::zero());
            sigma[idx] = s;
            cdf[idx] = big_phi;
            pdf[idx] = small_phi;
            var_active[idx] = raw_v > R::zero();
        }
    });

    (
        MomentBatch { mean, var },
        ReluAux {
            sigma,
            cdf,
            pdf,
            var_active,
        },
    )
}

/// Batched ReLU moments without the adjoint intermediates.
pub fn relu_moments_batch<R: Real>(input: &MomentBatch<R>) -> MomentBatch<R> {
    relu_moments_batch_with_aux(input).0
}

/// Single-sample ReLU moments.
pub fn relu_moments<R: Real>(input: &MomentVector<R>) -> MomentVector<R> {
    relu_moments_batch(&MomentBatch::from_vector(input)).row(0)
}

/// First-order Taylor propagation for a differentiable scalar activation:
/// `E ~ f(E[Z])`, `V ~ f'(E[Z])^2 V[Z]`.
pub fn taylor_activation_moments<R: Real>(
    f: impl Fn(R) -> R,
    df: impl Fn(R) -> R,
    input: &MomentVector<R>,
) -> MomentVector<R> {
    let mean = input.mean.mapv(&f);
    let var = ndarray::Zip::from(&input.mean)
        .and(&input.var)
        .map_collect(|&mu, &v| {
            let d = df(mu);
            d * d * v
        });
    MomentVector { mean, var }
}

/// Batched Taylor propagation for a fixed activation kind.
pub fn taylor_activation_moments_batch<R: Real>(
    act: ActivationKind,
    input: &MomentBatch<R>,
) -> MomentBatch<R> {
    let mean = input.mean.mapv(|mu| act.value(mu));
    let var = ndarray::Zip::from(&input.mean)
        .and(&input.var)
        .map_collect(|&mu, &v| {
            let d = act.d1(mu);
            d * d * v
        });
    MomentBatch { mean, var }
}

/// Smooth activations with the derivatives the gradient engine needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Tanh,
    Identity,
}

impl ActivationKind {
    pub fn value<R: Real>(self, x: R) -> R {
        match self {
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Identity => x,
        }
    }

    pub fn d1<R: Real>(self, x: R) -> R {
        match self {
            ActivationKind::Tanh => {
                let t = x.tanh();
                R::one() - t * t
            }
            ActivationKind::Identity => R::one(),
        }
    }

    pub fn d2<R: Real>(self, x: R) -> R {
        match self {
            ActivationKind::Tanh => {
                let t = x.tanh();
                R::c(-2.0) * t * (R::one() - t * t)
            }
            ActivationKind::Identity => R::zero(),
        }
    }
}
