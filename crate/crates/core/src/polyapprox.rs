//! Odd polynomial approximations of the scaled inverse 3δ/(4x) and their
//! action on singular values.
//!
//! The approximant is built from the Chebyshev polynomial that is smallest
//! on [δ², 1] among polynomials with value one at the origin:
//!
//! ```text
//! W(y) = T_n(s(y)) / T_n(s(0)),   s(y) = (2y − 1 − δ²)/(1 − δ²)
//! p(x) = (3δ/(4x)) · (1 − W(x²))^m
//! ```
//!
//! `1 − W` vanishes at the origin, so `p` is an odd polynomial of degree
//! `2nm − 1`. On [δ, 1] the relative error is at most `(1 + η)^m − 1` with
//! `η = 1/|T_n(s(0))|`. Raising to the power `m` flattens the bump on
//! [0, δ] so that |p| ≤ 1 there; the bump depends on ε′ and `m` only, so the
//! smallest admissible `m` is found from the closed form before any
//! coefficients are computed. With `W(y) = (1 − y)^b` and `m = 1` this is the
//! classical regularized inverse `(1 − (1 − x²)^b)/x`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{cx, inverse, spectral_norm, svd, ComplexMatrix};

pub const DEFAULT_DEGREE_CAP: usize = 20_000;

/// Points per certification grid.
pub const CERT_GRID: usize = 100_001;

const MAX_POWER: usize = 64;

/// Σ_j a_j T_{2j+1}(x). Even Chebyshev coefficients are absent by layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OddPolynomial {
    /// `chebyshev_coeffs[j]` multiplies T_{2j+1}.
    pub chebyshev_coeffs: Vec<f64>,
    pub degree: usize,
    pub delta: Option<f64>,
    pub eps_prime: Option<f64>,
    pub certified_sup_error: Option<f64>,
    pub certified_max_abs: Option<f64>,
}

impl OddPolynomial {
    /// An uncertified polynomial from odd Chebyshev coefficients.
    pub fn from_odd_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("odd coefficients must be finite and nonempty".into()));
        }
        let degree = 2 * coeffs.len() - 1;
        Ok(OddPolynomial {
            chebyshev_coeffs: coeffs,
            degree,
            delta: None,
            eps_prime: None,
            certified_sup_error: None,
            certified_max_abs: None,
        })
    }

    /// Clenshaw in y = T₂(x): T_{2j+3} = 2y T_{2j+1} − T_{2j−1}, T_{−1} = T₁.
    pub fn eval(&self, x: f64) -> f64 {
        let y2 = 2.0 * (2.0 * x * x - 1.0);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.chebyshev_coeffs.iter().rev() {
            let b0 = c + y2 * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        // b1 = b_0, b2 = b_1
        x * (b1 - b2)
    }
}

fn cheb_t(n: usize, s: f64) -> f64 {
    if s.abs() <= 1.0 {
        (n as f64 * s.acos()).cos()
    } else if s > 1.0 {
        (n as f64 * s.acosh()).cosh()
    } else {
        let v = (n as f64 * (-s).acosh()).cosh();
        if n % 2 == 0 {
            v
        } else {
            -v
        }
    }
}

/// Exact closed form of the degree-(2nm − 1) approximant.
struct Extremal {
    delta: f64,
    n: usize,
    m: usize,
    t_at_zero: f64,
}

impl Extremal {
    fn new(delta: f64, n: usize, m: usize) -> Self {
        let d2 = delta * delta;
        let s0 = -(1.0 + d2) / (1.0 - d2);
        Extremal { delta, n, m, t_at_zero: cheb_t(n, s0) }
    }

    fn degree(&self) -> usize {
        2 * self.n * self.m - 1
    }

    fn eval(&self, x: f64) -> f64 {
        let d2 = self.delta * self.delta;
        let s = (2.0 * x * x - 1.0 - d2) / (1.0 - d2);
        let w = cheb_t(self.n, s) / self.t_at_zero;
        0.75 * self.delta / x * (1.0 - w).powi(self.m as i32)
    }
}

/// Chebyshev coefficients c_0..c_{K−1} of the interpolant at the K
/// first-kind points, via a length-2K FFT.
fn chebyshev_coefficients(f: impl Fn(f64) -> f64, k: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let kf = k as f64;
    let vals: Vec<f64> = (0..k).map(|j| f((std::f64::consts::PI * (j as f64 + 0.5) / kf).cos())).collect();
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(2 * k);
    for &v in &vals {
        buf.push(Complex::new(v, 0.0));
    }
    for &v in vals.iter().rev() {
        buf.push(Complex::new(v, 0.0));
    }
    let fft: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(2 * k);
    fft.process(&mut buf);
    (0..k)
        .map(|i| {
            let phase = Complex::from_polar(1.0, -std::f64::consts::PI * i as f64 / (2.0 * kf));
            let s = (phase * buf[i]).re / 2.0;
            let scale = if i == 0 { 1.0 / kf } else { 2.0 / kf };
            s * scale
        })
        .collect()
}

fn certify(p: &OddPolynomial, delta: f64) -> (f64, f64) {
    let mut sup_err: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let g = CERT_GRID;
    for i in 0..g {
        let x = delta + (1.0 - delta) * i as f64 / (g - 1) as f64;
        sup_err = sup_err.max((p.eval(x) - 0.75 * delta / x).abs());
        let u = -1.0 + 2.0 * i as f64 / (g - 1) as f64;
        max_abs = max_abs.max(p.eval(u).abs());
    }
    (sup_err, max_abs)
}

pub fn build_inverse_poly(delta: f64, eps_prime: f64) -> Result<OddPolynomial> {
    build_inverse_poly_with_cap(delta, eps_prime, DEFAULT_DEGREE_CAP)
}

pub fn build_inverse_poly_with_cap(delta: f64, eps_prime: f64, cap: usize) -> Result<OddPolynomial> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(eps_prime > 0.0 && eps_prime < 0.75) {
        return Err(Error::InvalidParameter(format!("epsPrime must lie in (0, 3/4), got {eps_prime}")));
    }
    // split between the closed-form error and the dropped Chebyshev tail
    let ua = 0.45 * eps_prime;
    let tail_budget = 0.45 * eps_prime;
    let d2 = delta * delta;
    let s0_abs = (1.0 + d2) / (1.0 - d2);
    let extremal = |m: usize| {
        let eta = (1.0 + 4.0 * ua / 3.0).powf(1.0 / m as f64) - 1.0;
        let n = ((1.0 / eta).acosh() / s0_abs.acosh()).ceil().max(1.0) as usize;
        Extremal::new(delta, n, m)
    };
    // the bump on (0, delta] must leave room for the tail
    let bump = |ex: &Extremal| (1..=4000).map(|i| ex.eval(delta * i as f64 / 4000.0).abs()).fold(0.0, f64::max);
    let first = (1..=MAX_POWER).find(|&m| bump(&extremal(m)) + tail_budget <= 1.0).unwrap_or(MAX_POWER);

    let mut planner = FftPlanner::new();
    let mut smallest_exact = usize::MAX;
    let mut best_failure = (f64::INFINITY, f64::INFINITY);
    for m in first..=MAX_POWER {
        let ex = extremal(m);
        let d = ex.degree();
        smallest_exact = smallest_exact.min(d);
        if d > 4 * cap {
            break;
        }
        let c = chebyshev_coefficients(|x| ex.eval(x), d + 1, &mut planner);
        let odd: Vec<f64> = c.iter().skip(1).step_by(2).copied().collect();
        let mut tail = 0.0;
        let mut keep = odd.len();
        while keep > 1 && tail + odd[keep - 1].abs() <= tail_budget {
            tail += odd[keep - 1].abs();
            keep -= 1;
        }
        let degree = 2 * keep - 1;
        if degree > cap {
            smallest_exact = smallest_exact.min(degree);
            break;
        }
        let mut p = OddPolynomial {
            degree,
            chebyshev_coeffs: odd[..keep].to_vec(),
            delta: Some(delta),
            eps_prime: Some(eps_prime),
            certified_sup_error: None,
            certified_max_abs: None,
        };
        let (sup_err, max_abs) = certify(&p, delta);
        if sup_err <= eps_prime && max_abs <= 1.0 {
            p.certified_sup_error = Some(sup_err);
            p.certified_max_abs = Some(max_abs);
            return Ok(p);
        }
        if sup_err < best_failure.0 {
            best_failure = (sup_err, max_abs);
        }
    }
    if best_failure.0.is_infinite() {
        return Err(Error::DegreeCapExceeded { degree: smallest_exact, cap });
    }
    Err(Error::CertificationFailed { sup_error: best_failure.0, max_abs: best_failure.1 })
}

fn check_norm(mtx: &ComplexMatrix) -> Result<()> {
    let norm = spectral_norm(mtx);
    if norm > 1.0 + 1e-10 {
        return Err(Error::NormExceedsOne { norm });
    }
    Ok(())
}

/// p^◇(M) = W p(Σ) V† for M = W Σ V†.
pub fn generalized_matrix_function(p: &OddPolynomial, mtx: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_norm(mtx)?;
    let d = svd(mtx);
    let ps: Vec<f64> = d.sigma.iter().map(|&s| p.eval(s)).collect();
    let mut w = d.u.clone();
    for (j, &v) in ps.iter().enumerate() {
        w.column_mut(j).scale_mut(v);
    }
    Ok(w * d.v_adjoint)
}

/// p^◇(M)† = V p(Σ) W†.
pub fn generalized_matrix_function_adjoint(p: &OddPolynomial, mtx: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(generalized_matrix_function(p, mtx)?.adjoint())
}

/// ‖p^◇(M)† − (3δ/4) M⁻¹‖, required to be at most ε′.
pub fn inverse_error_certificate(p: &OddPolynomial, mtx: &ComplexMatrix) -> Result<f64> {
    let delta = p.delta.ok_or(Error::MissingParameter("delta"))?;
    let eps_prime = p.eps_prime.ok_or(Error::MissingParameter("epsPrime"))?;
    let sigma = svd(mtx).sigma;
    for (index, &s) in sigma.iter().enumerate() {
        if s < delta * (1.0 - 1e-12) || s > 1.0 + 1e-10 {
            return Err(Error::SingularValueOutOfRange { index, sigma: s });
        }
    }
    let lhs = generalized_matrix_function_adjoint(p, mtx)?;
    let target = inverse(mtx)? * cx(0.75 * delta, 0.0);
    let value = spectral_norm(&(lhs - target));
    if value > eps_prime {
        return Err(Error::CertificateViolated { value, eps_prime });
    }
    Ok(value)
}
