//! Sampling-free variational inference for Bayesian neural networks whose
//! posterior is induced by multiplicative Gaussian activation noise (MNVI).
//!
//! Instead of sampling weights, the library propagates per-unit means and
//! variances through the network in closed form and optimizes a tempered
//! evidence lower bound with exact reverse-mode gradients. The crate is
//! organized as:
//!
//! - [`moments`] — mean/variance containers and standard-Gaussian utilities
//! - [`layers`] — forward moment propagation for every layer type
//!   (noisy linear/conv, mean-field linear, ReLU, Taylor activations,
//!   batch norm, max pool, flatten)
//! - [`grad`] — tape-based reverse-mode differentiation over the
//!   moment-propagation graph
//! - [`objectives`] — expected log-likelihoods, closed-form KL, tempered
//!   objective assembly
//! - [`mc_oracle`] — brute-force Monte Carlo validation of the deterministic
//!   propagation
//! - [`network`] — model descriptions, parameter storage and tape assembly
//! - [`train`] — optimizers, KL annealing, training loops, cross-validation
//! - [`data`] — delimited-text and IDX dataset ingestion
//! - [`metrics`] — predictive distributions, NLLH, ECE, MRC/AUMRC
//!
//! The numeric core is generic over the scalar type via [`real::Real`];
//! the training stack and gradient engine are fixed to `f64` (the
//! finite-difference gradient gates are not meaningful in single
//! precision). The aliases below pin the double-precision instantiations
//! used everywhere outside the generic core.

pub mod data;
pub mod error;
pub mod grad;
pub mod layers;
pub mod mc_oracle;
pub mod metrics;
pub mod moments;
pub mod network;
pub mod objectives;
pub mod real;
pub mod testing;
pub mod train;

/// Double-precision moment pair over a flat activation vector.
pub type MomentVector64 = moments::MomentVector<f64>;
/// Double-precision moment pair over a `channels x height x width` tensor.
pub type MomentTensor64 = moments::MomentTensor<f64>;
/// Double-precision batch of moment vectors (`batch x dim`).
pub type MomentBatch64 = moments::MomentBatch<f64>;
/// Double-precision batch of moment tensors (`batch x channels x h x w`).
pub type MomentImageBatch64 = moments::MomentImageBatch<f64>;

pub use error::Error;
