//! Independent numerical oracles used by the test suites.
//!
//! Everything here deliberately avoids the code paths it is used to
//! check: the quadrature integrates the raw Gaussian density with its
//! own `exp` evaluation, and the finite-difference checker only needs a
//! black-box scalar function.

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    rec(&f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Expectation `E[g(Z)]` for `Z ~ N(mu, sigma^2)` by adaptive quadrature
/// over `mu ± 14 sigma`, with the Gaussian density written out inline.
pub fn gauss_expect(g: impl Fn(f64) -> f64, mu: f64, sigma: f64, tol: f64) -> f64 {
    let density = move |z: f64| {
        let t = (z - mu) / sigma;
        (-0.5 * t * t).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    adaptive_simpson(|z| g(z) * density(z), mu - 14.0 * sigma, mu + 14.0 * sigma, tol)
}

/// Mean and variance of `g(Z)`, `Z ~ N(mu, sigma^2)`, by quadrature.
pub fn gauss_moments(g: impl Fn(f64) -> f64 + Copy, mu: f64, sigma: f64, tol: f64) -> (f64, f64) {
    let e = gauss_expect(g, mu, sigma, tol);
    let e2 = gauss_expect(|z| g(z) * g(z), mu, sigma, tol);
    (e, e2 - e * e)
}

/// Result of a finite-difference gradient comparison.
#[derive(Debug, Clone, Copy)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Central-difference check of `grad` against `f` at `theta`.
///
/// Steps are `h = scale * max(1, |theta_i|)`; relative error uses
/// `max(|analytic|, |numeric|, floor)` in the denominator so near-zero
/// gradients are compared absolutely.
pub fn finite_difference_check(
    f: impl Fn(&[f64]) -> f64,
    theta: &[f64],
    grad: &[f64],
    scale: f64,
    floor: f64,
) -> FdReport {
    assert_eq!(theta.len(), grad.len());
    let mut report = FdReport {
        max_rel_err: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    let mut work = theta.to_vec();
    for i in 0..theta.len() {
        let h = scale * theta[i].abs().max(1.0);
        work[i] = theta[i] + h;
        let fp = f(&work);
        work[i] = theta[i] - h;
        let fm = f(&work);
        work[i] = theta[i];
        let numeric = (fp - fm) / (2.0 * h);
        let denom = grad[i].abs().max(numeric.abs()).max(floor);
        let rel = (grad[i] - numeric).abs() / denom;
        if rel > report.max_rel_err {
            report = FdReport {
                max_rel_err: rel,
                worst_index: i,
                analytic: grad[i],
                numeric,
            };
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        let i = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1e-14);
        // antiderivative: x^4/4 - x^2 + x
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((i - exact).abs() < 1e-12);
    }

    #[test]
    fn gauss_expect_of_identity_is_mu() {
        let e = gauss_expect(|z| z, 1.7, 2.3, 1e-12);
        assert!((e - 1.7).abs() < 1e-10);
        let (m, v) = gauss_moments(|z| z, -0.4, 0.9, 1e-12);
        assert!((m + 0.4).abs() < 1e-10);
        assert!((v - 0.81).abs() < 1e-9);
    }

    #[test]
    fn fd_checker_flags_wrong_gradient() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[1];
        let good = finite_difference_check(f, &[1.0, 2.0], &[2.0, 3.0], 1e-6, 1e-8);
        assert!(good.max_rel_err < 1e-8);
        let bad = finite_difference_check(f, &[1.0, 2.0], &[2.0, 4.0], 1e-6, 1e-8);
        assert!(bad.max_rel_err > 0.2);
    }
}
