//! Riemann-sum quadrature of the Cauchy integral and its a-priori error bound.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contour::{Contour, ContourNodes};
use crate::error::{Error, Result};
use crate::numkit::{cx, identity, resolvent_norm, spectral_norm, ComplexMatrix, StateVector, C64, I};

/// Default ceiling for the node count.
pub const DEFAULT_M_CAP: usize = 1 << 26;

/// Minimum number of contour samples used for grid estimates.
pub const GRID_POINTS: usize = 10_000;

/// Preset tag of a holomorphic function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum FunctionKind {
    /// e^{T z}
    Exp {
        t: f64,
    },
    /// Σ c_j z^j, lowest order first.
    Polynomial {
        coefficients: Vec<C64>,
    },
    User {
        name: String,
    },
}

/// A function holomorphic on and inside the contours it is used with.
#[derive(Clone)]
pub struct HolomorphicFunction {
    kind: FunctionKind,
    eval: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
}

impl fmt::Debug for HolomorphicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HolomorphicFunction").field("kind", &self.kind).finish()
    }
}

pub fn horner(coefficients: &[C64], z: C64) -> C64 {
    coefficients.iter().rev().fold(cx(0.0, 0.0), |acc, &c| acc * z + c)
}

impl HolomorphicFunction {
    pub fn exp(t: f64) -> Self {
        HolomorphicFunction { kind: FunctionKind::Exp { t }, eval: Arc::new(move |z: C64| (z * t).exp()) }
    }

    pub fn polynomial(coefficients: Vec<C64>) -> Self {
        let c = coefficients.clone();
        HolomorphicFunction {
            kind: FunctionKind::Polynomial { coefficients },
            eval: Arc::new(move |z: C64| horner(&c, z)),
        }
    }

    pub fn constant(c: C64) -> Self {
        Self::polynomial(vec![c])
    }

    pub fn user<F: Fn(C64) -> C64 + Send + Sync + 'static>(name: &str, f: F) -> Self {
        HolomorphicFunction { kind: FunctionKind::User { name: name.to_string() }, eval: Arc::new(f) }
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn eval(&self, z: C64) -> C64 {
        (self.eval)(z)
    }

    /// f(A) by the eigendecomposition oracle, falling back to Padé or Horner
    /// when A is not diagonalizable.
    pub fn apply_oracle(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let spec = crate::numkit::spectral_info(a)?;
        if spec.diagonalizable {
            return spec.apply_function(|z| self.eval(z));
        }
        match &self.kind {
            FunctionKind::Exp { t } => Ok(crate::numkit::expm(&(a * cx(*t, 0.0)))),
            FunctionKind::Polynomial { coefficients } => {
                let n = a.nrows();
                let mut acc = ComplexMatrix::zeros(n, n);
                for &c in coefficients.iter().rev() {
                    acc = &acc * a + identity(n) * c;
                }
                Ok(acc)
            }
            FunctionKind::User { .. } => Err(Error::NonDiagonalizable { kappa: spec.kappa_s }),
        }
    }
}

/// Bounds B = sup_Γ |f| and L = Lipschitz constant of f on and inside Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionBounds {
    pub bound_b: f64,
    pub lipschitz_l: f64,
    /// True when either value comes from a grid estimate.
    pub estimated: bool,
    pub contour_fingerprint: u64,
}

fn contour_grid(c: &Contour, n: usize) -> Vec<C64> {
    let l = c.length();
    (0..n).map(|k| c.point(l * k as f64 / n as f64)).collect()
}

/// sup |f| and the largest difference quotient along a closed grid, both
/// inflated by 1%.
fn grid_estimates<F: Fn(C64) -> C64>(c: &Contour, f: F) -> Result<(f64, f64)> {
    let pts = contour_grid(c, GRID_POINTS);
    let vals: Vec<C64> = pts.iter().map(|&z| f(z)).collect();
    if vals.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFiniteSample);
    }
    let b = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let n = pts.len();
    let mut lip: f64 = 0.0;
    for k in 0..n {
        let j = (k + 1) % n;
        let dz = (pts[j] - pts[k]).norm();
        if dz > 0.0 {
            lip = lip.max((vals[j] - vals[k]).norm() / dz);
        }
    }
    Ok((1.01 * b, 1.01 * lip))
}

pub fn bounds_on_contour(f: &HolomorphicFunction, c: &Contour) -> Result<FunctionBounds> {
    let fingerprint = c.fingerprint();
    match f.kind() {
        FunctionKind::Exp { t } => {
            let t = *t;
            // max Re(Tz) over Γ; the maximum modulus principle covers the inside
            let top = if t >= 0.0 { t * c.max_re() } else { t * c.min_re() };
            let b = top.exp();
            if !b.is_finite() {
                return Err(Error::NonFiniteSample);
            }
            Ok(FunctionBounds {
                bound_b: b,
                lipschitz_l: t.abs() * b,
                estimated: false,
                contour_fingerprint: fingerprint,
            })
        }
        FunctionKind::Polynomial { coefficients } => {
            let r = c.enclosing_radius();
            let b_closed: f64 = coefficients.iter().enumerate().map(|(j, a)| a.norm() * r.powi(j as i32)).sum();
            let l_closed: f64 =
                coefficients.iter().enumerate().skip(1).map(|(j, a)| j as f64 * a.norm() * r.powi(j as i32 - 1)).sum();
            let deriv: Vec<C64> = coefficients.iter().enumerate().skip(1).map(|(j, &a)| a * j as f64).collect();
            let (b_grid, _) = grid_estimates(c, |z| horner(coefficients, z))?;
            let (l_grid, _) = grid_estimates(c, |z| horner(&deriv, z))?;
            let bound_b = b_closed.min(b_grid);
            let lipschitz_l = l_closed.min(l_grid);
            Ok(FunctionBounds {
                bound_b,
                lipschitz_l,
                estimated: bound_b < b_closed || lipschitz_l < l_closed,
                contour_fingerprint: fingerprint,
            })
        }
        FunctionKind::User { .. } => {
            let (b, l) = grid_estimates(c, |z| f.eval(z))?;
            Ok(FunctionBounds { bound_b: b, lipschitz_l: l, estimated: true, contour_fingerprint: fingerprint })
        }
    }
}

/// (Bγ² + Bγ + Lγ) l² / (8πM)
pub fn apriori_error_bound(b: f64, l_lip: f64, gamma: f64, length: f64, m: usize) -> f64 {
    (b * gamma * gamma + b * gamma + l_lip * gamma) * length * length / (8.0 * PI * m as f64)
}

/// Smallest M whose a-priori bound is at most `target`.
pub fn select_m(b: f64, l_lip: f64, gamma: f64, length: f64, target: f64) -> Result<usize> {
    select_m_with_cap(b, l_lip, gamma, length, target, DEFAULT_M_CAP)
}

pub fn select_m_with_cap(b: f64, l_lip: f64, gamma: f64, length: f64, target: f64, cap: usize) -> Result<usize> {
    if !(target > 0.0) {
        return Err(Error::InvalidParameter(format!("target error must be positive, got {target}")));
    }
    for (name, v) in [("B", b), ("L", l_lip), ("gamma", gamma), ("l", length)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    let k = apriori_error_bound(b, l_lip, gamma, length, 1);
    let raw = k / target;
    if !raw.is_finite() || raw > cap as f64 {
        return Err(Error::Overflow { required: raw, cap });
    }
    let mut m = (raw.ceil() as usize).max(1);
    while m > 1 && apriori_error_bound(b, l_lip, gamma, length, m - 1) <= target {
        m -= 1;
    }
    while apriori_error_bound(b, l_lip, gamma, length, m) > target {
        m += 1;
    }
    if m > cap {
        return Err(Error::Overflow { required: m as f64, cap });
    }
    Ok(m)
}

/// Resolvent norms at the nodes; flags nodes sitting on the spectrum.
pub fn node_resolvent_norms(a: &ComplexMatrix, nodes: &ContourNodes) -> Result<Vec<f64>> {
    nodes.z.iter().enumerate().map(|(k, &z)| resolvent_norm(a, z).map_err(|_| Error::NodeOnSpectrum { k })).collect()
}

/// γ estimated as the largest resolvent norm over a dense arc-length grid.
pub fn sampled_gamma(a: &ComplexMatrix, c: &Contour, grid: usize) -> Result<f64> {
    let nodes = c.discretize(grid.max(1));
    Ok(node_resolvent_norms(a, &nodes)?.into_iter().fold(0.0, f64::max))
}

/// Weight l f(z_k) e^{iθ_k} / (2πiM) of node k.
pub fn node_weight(nodes: &ContourNodes, f: &HolomorphicFunction, k: usize) -> Result<C64> {
    let fz = f.eval(nodes.z[k]);
    if !(fz.re.is_finite() && fz.im.is_finite()) {
        return Err(Error::NonFiniteSample);
    }
    Ok(fz * nodes.tangent(k) * nodes.length / (I * 2.0 * PI * nodes.m as f64))
}

fn shifted(a: &ComplexMatrix, z: C64) -> ComplexMatrix {
    identity(a.nrows()) * z - a
}

/// f_M(A) evaluated densely, one LU per node.
pub fn riemann_sum_matrix(a: &ComplexMatrix, nodes: &ContourNodes, f: &HolomorphicFunction) -> Result<ComplexMatrix> {
    let n = a.nrows();
    node_resolvent_norms(a, nodes)?;
    let mut acc = ComplexMatrix::zeros(n, n);
    let eye = identity(n);
    for k in 0..nodes.m {
        let w = node_weight(nodes, f, k)?;
        let inv = shifted(a, nodes.z[k]).lu().solve(&eye).ok_or(Error::NodeOnSpectrum { k })?;
        acc += inv * w;
    }
    Ok(acc)
}

/// f_M(A)ψ through one linear solve per node.
pub fn riemann_sum_vector(
    a: &ComplexMatrix,
    nodes: &ContourNodes,
    f: &HolomorphicFunction,
    psi: &StateVector,
) -> Result<StateVector> {
    if psi.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: psi.len() });
    }
    node_resolvent_norms(a, nodes)?;
    let mut acc = StateVector::zeros(psi.len());
    for k in 0..nodes.m {
        let w = node_weight(nodes, f, k)?;
        let x = shifted(a, nodes.z[k]).lu().solve(psi).ok_or(Error::NodeOnSpectrum { k })?;
        acc += x * w;
    }
    Ok(acc)
}

/// Metadata written next to a quadrature value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadratureMeta {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "B")]
    pub bound_b: f64,
    #[serde(rename = "L")]
    pub lipschitz_l: f64,
    pub gamma: f64,
    pub l: f64,
    pub bound: f64,
    pub measured_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct QuadratureResult {
    pub matrix: ComplexMatrix,
    pub meta: QuadratureMeta,
}

/// f_M(A) with bounds, sampled γ and the measured error against the oracle
/// when one is available.
pub fn quadrature(a: &ComplexMatrix, c: &Contour, f: &HolomorphicFunction, m: usize) -> Result<QuadratureResult> {
    let bounds = bounds_on_contour(f, c)?;
    let nodes = c.discretize(m);
    let gamma = sampled_gamma(a, c, 2048)?.max(node_resolvent_norms(a, &nodes)?.into_iter().fold(0.0, f64::max));
    let matrix = riemann_sum_matrix(a, &nodes, f)?;
    let measured_error = f.apply_oracle(a).ok().map(|exact| spectral_norm(&(exact - &matrix)));
    let bound = apriori_error_bound(bounds.bound_b, bounds.lipschitz_l, gamma, c.length(), m);
    Ok(QuadratureResult {
        matrix,
        meta: QuadratureMeta {
            m,
            bound_b: bounds.bound_b,
            lipschitz_l: bounds.lipschitz_l,
            gamma,
            l: c.length(),
            bound,
            measured_error,
        },
    })
}
