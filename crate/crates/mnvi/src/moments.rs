//! Moment-pair containers and standard-Gaussian utilities.
//!
//! Every layer in this crate propagates a distribution summarized by its
//! first two moments. The containers here pair a mean array with a
//! variance array of identical shape; the free functions provide the
//! standard-normal density and distribution function used by the
//! closed-form activation moments.

use crate::error::{Error, Result};
use crate::real::Real;
use ndarray::{Array1, Array2, Array3, Array4};

/// Paired per-element mean and variance of a flat activation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector<R: Real> {
    pub mean: Array1<R>,
    pub var: Array1<R>,
}

impl<R: Real> MomentVector<R> {
    /// Builds a validated moment pair: equal lengths, no negative variance.
    pub fn new(mean: Array1<R>, var: Array1<R>) -> Result<Self> {
        if mean.len() != var.len() {
            return Err(Error::InvalidMoments(format!(
                "mean length {} != var length {}",
                mean.len(),
                var.len()
            )));
        }
        if var.iter().any(|v| *v < R::zero() || !v.is_finite()) {
            return Err(Error::InvalidMoments(
                "variance entries must be finite and >= 0".into(),
            ));
        }
        Ok(Self { mean, var })
    }

    /// Moment pair for an observed (noise-free) input: variance zero.
    pub fn deterministic(mean: Array1<R>) -> Self {
        let var = Array1::zeros(mean.len());
        Self { mean, var }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Moment pair over a `channels x height x width` activation tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensor<R: Real> {
    pub mean: Array3<R>,
    pub var: Array3<R>,
}

impl<R: Real> MomentTensor<R> {
    pub fn new(mean: Array3<R>, var: Array3<R>) -> Result<Self> {
        if mean.dim() != var.dim() {
            return Err(Error::InvalidMoments(format!(
                "mean shape {:?} != var shape {:?}",
                mean.dim(),
                var.dim()
            )));
        }
        if var.iter().any(|v| *v < R::zero() || !v.is_finite()) {
            return Err(Error::InvalidMoments(
                "variance entries must be finite and >= 0".into(),
            ));
        }
        Ok(Self { mean, var })
    }

    pub fn deterministic(mean: Array3<R>) -> Self {
        let var = Array3::zeros(mean.dim());
        Self { mean, var }
    }

    /// `(channels, height, width)`
    pub fn shape(&self) -> (usize, usize, usize) {
        self.mean.dim()
    }
}

/// Batch of moment vectors, laid out `batch x dim`.
///
/// This is the unit the training stack moves around; a [`MomentVector`]
/// is the single-row view the per-sample APIs expose.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBatch<R: Real> {
    pub mean: Array2<R>,
    pub var: Array2<R>,
}

impl<R: Real> MomentBatch<R> {
    pub fn new(mean: Array2<R>, var: Array2<R>) -> Result<Self> {
        if mean.dim() != var.dim() {
            return Err(Error::InvalidMoments(format!(
                "mean shape {:?} != var shape {:?}",
                mean.dim(),
                var.dim()
            )));
        }
        if var.iter().any(|v| *v < R::zero() || !v.is_finite()) {
            return Err(Error::InvalidMoments(
                "variance entries must be finite and >= 0".into(),
            ));
        }
        Ok(Self { mean, var })
    }

    pub fn deterministic(mean: Array2<R>) -> Self {
        let var = Array2::zeros(mean.dim());
        Self { mean, var }
    }

    /// Wraps a single moment vector as a one-row batch.
    pub fn from_vector(v: &MomentVector<R>) -> Self {
        let d = v.len();
        Self {
            mean: v.mean.clone().into_shape_with_order((1, d)).unwrap(),
            var: v.var.clone().into_shape_with_order((1, d)).unwrap(),
        }
    }

    /// Extracts row `i` as a moment vector.
    pub fn row(&self, i: usize) -> MomentVector<R> {
        MomentVector {
            mean: self.mean.row(i).to_owned(),
            var: self.var.row(i).to_owned(),
        }
    }

    /// `(batch, dim)`
    pub fn dim(&self) -> (usize, usize) {
        self.mean.dim()
    }
}

/// Batch of moment tensors, laid out `batch x channels x height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentImageBatch<R: Real> {
    pub mean: Array4<R>,
    pub var: Array4<R>,
}

impl<R: Real> MomentImageBatch<R> {
    pub fn new(mean: Array4<R>, var: Array4<R>) -> Result<Self> {
        if mean.dim() != var.dim() {
            return Err(Error::InvalidMoments(format!(
                "mean shape {:?} != var shape {:?}",
                mean.dim(),
                var.dim()
            )));
        }
        Ok(Self { mean, var })
    }

    pub fn deterministic(mean: Array4<R>) -> Self {
        let var = Array4::zeros(mean.dim());
        Self { mean, var }
    }

    pub fn from_tensor(t: &MomentTensor<R>) -> Self {
        let (c, h, w) = t.shape();
        Self {
            mean: t
                .mean
                .clone()
                .into_shape_with_order((1, c, h, w))
                .unwrap(),
            var: t.var.clone().into_shape_with_order((1, c, h, w)).unwrap(),
        }
    }

    pub fn image(&self, i: usize) -> MomentTensor<R> {
        MomentTensor {
            mean: self.mean.index_axis(ndarray::Axis(0), i).to_owned(),
            var: self.var.index_axis(ndarray::Axis(0), i).to_owned(),
        }
    }

    pub fn dim(&self) -> (usize, usize, usize, usize) {
        self.mean.dim()
    }
}

/// 1/sqrt(2*pi)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// 1/sqrt(2)
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard Gaussian probability density `phi(z) = exp(-z^2/2)/sqrt(2*pi)`.
#[inline]
pub fn std_normal_pdf<R: Real>(z: R) -> R {
    R::c(INV_SQRT_2PI) * (-z * z / R::c(2.0)).exp()
}

/// Standard Gaussian distribution function `Phi(z)`, via `erfc`.
///
/// `Phi(z) = erfc(-z/sqrt(2)) / 2` with the Cody rational-minimax `erfc`
/// below; absolute error is below 5e-16 in double precision, comfortably
/// inside the 1e-12 contract. Monotone and saturating: `Phi(40) == 1.0`.
#[inline]
pub fn std_normal_cdf<R: Real>(z: R) -> R {
    R::c(0.5) * erfc(-z * R::c(FRAC_1_SQRT_2))
}

/// Elementwise `max(v, floor)` for variance vectors.
///
/// Applied to the inputs of ReLU layers before the closed-form moments;
/// also mops up tiny negative values left by floating-point cancellation.
pub fn clamp_variance<R: Real>(v: &Array1<R>, floor: R) -> Array1<R> {
    v.mapv(|x| x.max(floor))
}

/// Complementary error function, Cody's rational approximation
/// (SPECFUN `calerf`): three regimes split at |x| = 0.46875 and 4.0.
///
/// Max absolute error ~4e-16 over the real line in double precision.
pub fn erfc<R: Real>(x: R) -> R {
    const A: [f64; 5] = [
        3.16112374387056560e0,
        1.13864154151050156e2,
        3.77485237685302021e2,
        3.20937758913846947e3,
        1.85777706184603153e-1,
    ];
    const B: [f64; 4] = [
        2.36012909523441209e1,
        2.44024637934444173e2,
        1.28261652607737228e3,
        2.84423683343917062e3,
    ];
    const C: [f64; 9] = [
        5.64188496988670089e-1,
        8.88314979438837594e0,
        6.61191906371416295e1,
        2.98635138197400131e2,
        8.81952221241769090e2,
        1.71204761263407058e3,
        2.05107837782607147e3,
        1.23033935479799725e3,
        2.15311535474403846e-8,
    ];
    const D: [f64; 8] = [
        1.57449261107098347e1,
        1.17693950891312499e2,
        5.37181101862009858e2,
        1.62138957456669019e3,
        3.29079923573345963e3,
        4.36261909014324716e3,
        3.43936767414372164e3,
        1.23033935480374942e3,
    ];
    const P: [f64; 6] = [
        3.05326634961232344e-1,
        3.60344899949804439e-1,
        1.25781726111229246e-1,
        1.60837851487422766e-2,
        6.58749161529837803e-4,
        1.63153871373020978e-2,
    ];
    const Q: [f64; 5] = [
        2.56852019228982242e0,
        1.87295284992346047e0,
        5.27905102951428412e-1,
        6.05183413124413191e-2,
        2.33520497626869185e-3,
    ];
    const SQRPI: f64 = 5.641_895_835_477_563e-1; // 1/sqrt(pi)

    let y = x.abs();
    let result = if y <= R::c(0.46875) {
        // erfc = 1 - erf on the central interval
        let ysq = if y > R::c(1.11e-16) { y * y } else { R::zero() };
        let mut xnum = R::c(A[4]) * ysq;
        let mut xden = ysq;
        for i in 0..3 {
            xnum = (xnum + R::c(A[i])) * ysq;
            xden = (xden + R::c(B[i])) * ysq;
        }
        return R::one() - x * (xnum + R::c(A[3])) / (xden + R::c(B[3]));
    } else if y <= R::c(4.0) {
        let mut xnum = R::c(C[8]) * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + R::c(C[i])) * y;
            xden = (xden + R::c(D[i])) * y;
        }
        let r = (xnum + R::c(C[7])) / (xden + R::c(D[7]));
        scaled_exp_mul(y, r)
    } else if y < R::c(26.543) {
        let ysq = R::one() / (y * y);
        let mut xnum = R::c(P[5]) * ysq;
        let mut xden = ysq;
        for i in 0..4 {
            xnum = (xnum + R::c(P[i])) * ysq;
            xden = (xden + R::c(Q[i])) * ysq;
        }
        let mut r = ysq * (xnum + R::c(P[4])) / (xden + R::c(Q[4]));
        r = (R::c(SQRPI) - r) / y;
        scaled_exp_mul(y, r)
    } else {
        R::zero()
    };
    if x < R::zero() {
        R::c(2.0) - result
    } else {
        result
    }
}

/// Computes `exp(-y^2) * r` with the squaring split into a rounded part
/// and a remainder so the large-argument tail keeps full precision.
#[inline]
fn scaled_exp_mul<R: Real>(y: R, r: R) -> R {
    let ysq = (y * R::c(16.0)).trunc() / R::c(16.0);
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * r
}
