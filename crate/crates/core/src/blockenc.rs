//! Block encodings, the prepare/select/unprepare LCU and the end-to-end
//! statevector simulation of the contour-integral circuit.
//!
//! Encodings are stored structurally rather than as dense unitaries: a
//! one-ancilla dilation keeps only its N×N block, and an LCU keeps its
//! prepare reflection plus the select list. Ancilla registers are the most
//! significant part of the state index (`index = ancilla·N + i`), so the
//! top-left block acts on the first N amplitudes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::contour::{Contour, ContourNodes};
use crate::error::{Error, Result};
use crate::numkit::{
    cx, hermitian_residual, identity, resolvent_norm, spectral_info, spectral_norm, svd, ComplexMatrix, StateVector,
    C64, I,
};
use crate::polyapprox::{
    build_inverse_poly, generalized_matrix_function_adjoint, inverse_error_certificate, OddPolynomial,
};
use crate::quadrature::{
    apriori_error_bound, bounds_on_contour, riemann_sum_matrix, riemann_sum_vector, sampled_gamma, select_m_with_cap,
    HolomorphicFunction, DEFAULT_M_CAP,
};

/// Largest dimension `to_dense` will materialize.
pub const DENSE_DIM_CAP: usize = 4096;

/// Largest total state dimension simulated amplitude by amplitude.
pub const FULL_SIMULATION_CAP: usize = 1 << 24;

/// Unitary reflection Q with a prescribed first column u:
/// Q = e^{iφ}(I − 2ww†/w†w), w = e₀ − e^{−iφ}u, φ = arg u₀.
#[derive(Debug, Clone, PartialEq)]
pub struct Householder {
    phase: C64,
    w: Vec<C64>,
    w_norm2: f64,
}

impl Householder {
    pub fn with_first_column(u: &[C64]) -> Self {
        let phase = if u[0].norm() > 0.0 { u[0] / u[0].norm() } else { cx(1.0, 0.0) };
        let mut w: Vec<C64> = u.iter().map(|&x| -(phase.conj() * x)).collect();
        w[0] += 1.0;
        let w_norm2 = w.iter().map(|x| x.norm_sqr()).sum();
        Householder { phase, w, w_norm2 }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Q applied to every column of a row-major K×D block.
    fn apply_rows(&self, x: &mut [C64], d: usize, transpose: bool) {
        let k = self.w.len();
        if self.w_norm2 > 1e-300 {
            let mut s = vec![cx(0.0, 0.0); d];
            for r in 0..k {
                let wr = if transpose { self.w[r] } else { self.w[r].conj() };
                if wr == cx(0.0, 0.0) {
                    continue;
                }
                for (i, si) in s.iter_mut().enumerate() {
                    *si += wr * x[r * d + i];
                }
            }
            for r in 0..k {
                let wr = if transpose { self.w[r].conj() } else { self.w[r] };
                let f = wr * (2.0 / self.w_norm2);
                if f == cx(0.0, 0.0) {
                    continue;
                }
                for (i, si) in s.iter().enumerate() {
                    x[r * d + i] -= f * si;
                }
            }
        }
        for v in x.iter_mut() {
            *v *= self.phase;
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let k = self.dim();
        let mut m = identity(k);
        let mut buf: Vec<C64> = m.transpose().iter().copied().collect();
        // rows of the transposed identity are columns; apply column-wise
        self.apply_rows(&mut buf, k, false);
        for r in 0..k {
            for c in 0..k {
                m[(r, c)] = buf[r * k + c];
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub enum EncodingOp {
    Dense(ComplexMatrix),
    Identity {
        dim: usize,
    },
    /// [[G, √(I−GG†)], [√(I−G†G), −G†]] on the first 2N amplitudes,
    /// identity on the rest. The defect blocks are formed on demand.
    Dilation {
        block: ComplexMatrix,
        dim: usize,
    },
    /// (Cᵀ ⊗ I) SEL (C ⊗ I), C the reflection with first column √c/√‖c‖₁.
    Lcu {
        prepare: Householder,
        select: Vec<BlockEncoding>,
    },
}

#[derive(Debug, Clone)]
pub struct BlockEncoding {
    op: EncodingOp,
    alpha: f64,
    ancillas: usize,
    encoded_dim: usize,
    target: Option<ComplexMatrix>,
    verified_error: Option<f64>,
}

fn defects(g: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    // shared singular vectors keep the dilation unitary to rounding even
    // when singular values sit at 1
    let d = svd(g);
    let s: Vec<f64> = d.sigma.iter().map(|&x| (1.0 - x.min(1.0).powi(2)).max(0.0).sqrt()).collect();
    let mut us = d.u.clone();
    let v = d.v_adjoint.adjoint();
    let mut vs = v.clone();
    for (j, &sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(sj);
        vs.column_mut(j).scale_mut(sj);
    }
    (us * d.u.adjoint(), vs * v.adjoint())
}

impl BlockEncoding {
    pub fn dense(unitary: ComplexMatrix, alpha: f64, ancillas: usize, encoded_dim: usize) -> Result<Self> {
        if unitary.nrows() != unitary.ncols() || unitary.nrows() != (1usize << ancillas) * encoded_dim {
            return Err(Error::DimensionMismatch {
                expected: (1usize << ancillas) * encoded_dim,
                found: unitary.nrows(),
            });
        }
        Ok(BlockEncoding {
            op: EncodingOp::Dense(unitary),
            alpha,
            ancillas,
            encoded_dim,
            target: None,
            verified_error: None,
        })
    }

    pub fn identity(encoded_dim: usize, ancillas: usize) -> Self {
        BlockEncoding {
            op: EncodingOp::Identity { dim: (1usize << ancillas) * encoded_dim },
            alpha: 1.0,
            ancillas,
            encoded_dim,
            target: Some(identity(encoded_dim)),
            verified_error: Some(0.0),
        }
    }

    pub fn op(&self) -> &EncodingOp {
        &self.op
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn encoded_dim(&self) -> usize {
        self.encoded_dim
    }

    pub fn target(&self) -> Option<&ComplexMatrix> {
        self.target.as_ref()
    }

    pub fn verified_error(&self) -> Option<f64> {
        self.verified_error
    }

    /// Drops the stored target matrix, keeping its verified error.
    pub fn clear_target(&mut self) {
        self.target = None;
    }

    pub fn dim(&self) -> usize {
        match &self.op {
            EncodingOp::Dense(u) => u.nrows(),
            EncodingOp::Identity { dim } => *dim,
            EncodingOp::Dilation { dim, .. } => *dim,
            EncodingOp::Lcu { prepare, select } => prepare.dim() * select[0].dim(),
        }
    }

    /// Registers `target` and records ‖α·block − target‖.
    pub fn register_target(&mut self, target: ComplexMatrix) -> Result<f64> {
        if target.nrows() != self.encoded_dim || target.ncols() != self.encoded_dim {
            return Err(Error::DimensionMismatch { expected: self.encoded_dim, found: target.nrows() });
        }
        let err = spectral_norm(&(self.top_left_block() * cx(self.alpha, 0.0) - &target));
        self.target = Some(target);
        self.verified_error = Some(err);
        Ok(err)
    }

    /// U x in place on the full register.
    pub fn apply(&self, x: &mut [C64]) {
        match &self.op {
            EncodingOp::Dense(u) => {
                let v = StateVector::from_column_slice(x);
                let y = u * v;
                x.copy_from_slice(y.as_slice());
            }
            EncodingOp::Identity { .. } => {}
            EncodingOp::Dilation { block, .. } => {
                let n = block.nrows();
                let (top, bottom) = defects(block);
                let x0 = StateVector::from_column_slice(&x[..n]);
                let x1 = StateVector::from_column_slice(&x[n..2 * n]);
                let y0 = block * &x0 + top * &x1;
                let y1 = bottom * &x0 - block.adjoint() * &x1;
                x[..n].copy_from_slice(y0.as_slice());
                x[n..2 * n].copy_from_slice(y1.as_slice());
            }
            EncodingOp::Lcu { prepare, select } => {
                let d = select[0].dim();
                prepare.apply_rows(x, d, false);
                for (k, enc) in select.iter().enumerate() {
                    enc.apply(&mut x[k * d..(k + 1) * d]);
                }
                prepare.apply_rows(x, d, true);
            }
        }
    }

    /// (⟨0|⊗I) U (|0⟩⊗ψ) without touching the ancilla amplitudes.
    pub fn apply_projected(&self, psi: &StateVector) -> StateVector {
        match &self.op {
            EncodingOp::Dense(u) => {
                let n = self.encoded_dim;
                u.view((0, 0), (n, n)) * psi
            }
            EncodingOp::Identity { .. } => psi.clone(),
            EncodingOp::Dilation { block, .. } => block * psi,
            EncodingOp::Lcu { prepare, select } => {
                // ⟨0|Cᵀ = uᵀ, C|0⟩ = u
                let u = prepare_first_column(prepare);
                let mut acc = StateVector::zeros(psi.len());
                for (k, enc) in select.iter().enumerate() {
                    let w = u[k] * u[k];
                    if w != cx(0.0, 0.0) {
                        acc += enc.apply_projected(psi) * w;
                    }
                }
                acc
            }
        }
    }

    /// Full-register simulation of U(|0⟩⊗ψ), returning the projected part.
    pub fn apply_full_projected(&self, psi: &StateVector) -> StateVector {
        let mut x = vec![cx(0.0, 0.0); self.dim()];
        x[..psi.len()].copy_from_slice(psi.as_slice());
        self.apply(&mut x);
        StateVector::from_column_slice(&x[..psi.len()])
    }

    pub fn top_left_block(&self) -> ComplexMatrix {
        let n = self.encoded_dim;
        let mut m = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = StateVector::zeros(n);
            e[j] = cx(1.0, 0.0);
            m.set_column(j, &self.apply_projected(&e));
        }
        m
    }

    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        let d = self.dim();
        if d > DENSE_DIM_CAP {
            return Err(Error::InvalidParameter(format!("dimension {d} exceeds the dense cap {DENSE_DIM_CAP}")));
        }
        let mut m = ComplexMatrix::zeros(d, d);
        for j in 0..d {
            let mut x = vec![cx(0.0, 0.0); d];
            x[j] = cx(1.0, 0.0);
            self.apply(&mut x);
            for (i, v) in x.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn unitarity_residual(&self) -> Result<f64> {
        let u = self.to_dense()?;
        Ok(spectral_norm(&(u.adjoint() * &u - identity(u.nrows()))))
    }
}

fn prepare_first_column(h: &Householder) -> Vec<C64> {
    // u = e^{iφ}(e₀ − w)
    let mut u: Vec<C64> = h.w.iter().map(|&x| -x).collect();
    u[0] += 1.0;
    u.iter().map(|&x| h.phase * x).collect()
}

/// One-ancilla dilation of A/α.
pub fn dilate(a: &ComplexMatrix, alpha: f64) -> Result<BlockEncoding> {
    let norm = spectral_norm(a);
    if !(alpha > 0.0) || norm > alpha * (1.0 + 1e-12) {
        return Err(Error::AlphaTooSmall { alpha, norm });
    }
    let n = a.nrows();
    let g = a / cx(alpha, 0.0);
    let mut enc = BlockEncoding {
        op: EncodingOp::Dilation { block: g, dim: 2 * n },
        alpha,
        ancillas: 1,
        encoded_dim: n,
        target: None,
        verified_error: None,
    };
    enc.register_target(a.clone())?;
    Ok(enc)
}

/// √z with arg z taken in [0, 2π).
pub fn sqrt_branch(z: C64) -> C64 {
    let mut theta = z.arg();
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    C64::from_polar(z.norm().sqrt(), theta / 2.0)
}

/// (α+|z|)⁻¹(zI − A) from U_A with one extra ancilla (most significant).
pub fn shifted_operator_encoding(ua: &BlockEncoding, z: C64) -> Result<BlockEncoding> {
    let alpha = ua.alpha();
    let scale = alpha + z.norm();
    let r = scale.sqrt();
    let v0 = sqrt_branch(z) / r;
    let v1 = I * alpha.sqrt() / r;
    // V: first column (v0, v1); Ṽ = Vᵀ has first row (v0, v1)
    let v = [[v0, -v1.conj()], [v1, v0.conj()]];
    let vt = [[v[0][0], v[1][0]], [v[0][1], v[1][1]]];
    let u = ua.to_dense()?;
    let d = u.nrows();
    let eye = identity(d);
    let mut w = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..2 {
        for j in 0..2 {
            let blk = &eye * (vt[i][0] * v[0][j]) + &u * (vt[i][1] * v[1][j]);
            w.view_mut((i * d, j * d), (d, d)).copy_from(&blk);
        }
    }
    let n = ua.encoded_dim();
    let mut enc = BlockEncoding::dense(w, scale, ua.ancillas() + 1, n)?;
    let target = identity(n) * z - ua.target().cloned().unwrap_or_else(|| ua.top_left_block() * cx(alpha, 0.0));
    let err = enc.register_target(target)?;
    if err > 1e-10 * scale.max(1.0) {
        return Err(Error::VerificationFailed { residual: err });
    }
    Ok(enc)
}

/// Dilation of p^◇(block)† standing in for the QSVT circuit, with target
/// (3δ/4)·block⁻¹.
pub fn qsvt_inverse_encoding(shifted: &BlockEncoding, p: &OddPolynomial) -> Result<BlockEncoding> {
    let block = shifted.top_left_block();
    qsvt_from_block(&block, shifted.ancillas() + 1, p)
}

fn qsvt_from_block(block: &ComplexMatrix, ancillas: usize, p: &OddPolynomial) -> Result<BlockEncoding> {
    let delta = p.delta.ok_or(Error::MissingParameter("delta"))?;
    let err = inverse_error_certificate(p, block)?;
    let g = generalized_matrix_function_adjoint(p, block)?;
    let n = block.nrows();
    let target = crate::numkit::inverse(block)? * cx(0.75 * delta, 0.0);
    Ok(BlockEncoding {
        op: EncodingOp::Dilation { block: g, dim: (1usize << ancillas) * n },
        alpha: 1.0,
        ancillas,
        encoded_dim: n,
        target: Some(target),
        verified_error: Some(err),
    })
}

/// LCU weights with √c_k = √r_k e^{iθ_k/2}, θ_k ∈ [0, 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LcuCoefficients {
    pub c: Vec<C64>,
    pub one_norm: f64,
    pub sqrt_c: Vec<C64>,
}

impl LcuCoefficients {
    pub fn new(c: Vec<C64>) -> Self {
        let one_norm = c.iter().map(|x| x.norm()).sum();
        let sqrt_c = c.iter().map(|&x| sqrt_branch(x)).collect();
        LcuCoefficients { c, one_norm, sqrt_c }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

/// c_k = 2l f(z_k) e^{iθ_k} / (3πiδM(α+|z_k|)).
pub fn outer_coefficients(
    nodes: &ContourNodes,
    f: &HolomorphicFunction,
    alpha: f64,
    delta: f64,
) -> Result<LcuCoefficients> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let m = nodes.m as f64;
    let mut c = Vec::with_capacity(nodes.m);
    for k in 0..nodes.m {
        let fz = f.eval(nodes.z[k]);
        if !(fz.re.is_finite() && fz.im.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        let denom = I * (3.0 * PI * delta * m * (alpha + nodes.z[k].norm()));
        c.push(fz * nodes.tangent(k) * (2.0 * nodes.length) / denom);
    }
    Ok(LcuCoefficients::new(c))
}

/// (C̃⊗I) SEL (C⊗I) over `per_node`, padded to a power of two.
pub fn assemble_total_circuit(coeffs: &LcuCoefficients, per_node: Vec<BlockEncoding>) -> Result<BlockEncoding> {
    if per_node.is_empty() || coeffs.len() != per_node.len() {
        return Err(Error::DimensionMismatch { expected: coeffs.len(), found: per_node.len() });
    }
    let d = per_node[0].dim();
    let n = per_node[0].encoded_dim();
    let a = per_node[0].ancillas();
    for e in &per_node {
        if e.dim() != d || e.encoded_dim() != n || e.ancillas() != a {
            return Err(Error::DimensionMismatch { expected: d, found: e.dim() });
        }
    }
    if !(coeffs.one_norm > 0.0) {
        return Err(Error::InvalidParameter("coefficients are all zero".into()));
    }
    let k = per_node.len().next_power_of_two();
    let log_k = k.trailing_zeros() as usize;
    let s = coeffs.one_norm.sqrt();
    let mut u: Vec<C64> = coeffs.sqrt_c.iter().map(|&x| x / s).collect();
    u.resize(k, cx(0.0, 0.0));
    let mut select = per_node;
    while select.len() < k {
        select.push(BlockEncoding::identity(n, a));
        select.last_mut().unwrap().clear_target();
    }
    Ok(BlockEncoding {
        op: EncodingOp::Lcu { prepare: Householder::with_first_column(&u), select },
        alpha: coeffs.one_norm,
        ancillas: log_k + a,
        encoded_dim: n,
        target: None,
        verified_error: None,
    })
}

#[derive(Debug, Clone)]
pub struct Postselected {
    pub state: StateVector,
    pub success_probability: f64,
    pub raw_vector: StateVector,
}

fn postselect(raw: StateVector) -> Result<Postselected> {
    let p = raw.norm_squared();
    if !(p >= 1e-30) {
        return Err(Error::ZeroSuccessProbability { probability: p });
    }
    Ok(Postselected { state: &raw / cx(p.sqrt(), 0.0), success_probability: p, raw_vector: raw })
}

fn check_unit(psi: &StateVector) -> Result<()> {
    let nrm = psi.norm();
    if (nrm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("input state must have unit norm, got {nrm}")));
    }
    Ok(())
}

/// Full-register simulation followed by projection of all ancillas on |0⟩.
pub fn apply_and_postselect(enc: &BlockEncoding, psi: &StateVector) -> Result<Postselected> {
    check_unit(psi)?;
    if psi.len() != enc.encoded_dim() {
        return Err(Error::DimensionMismatch { expected: enc.encoded_dim(), found: psi.len() });
    }
    postselect(enc.apply_full_projected(psi))
}

/// Same result through the projected path only.
pub fn apply_and_postselect_projected(enc: &BlockEncoding, psi: &StateVector) -> Result<Postselected> {
    check_unit(psi)?;
    if psi.len() != enc.encoded_dim() {
        return Err(Error::DimensionMismatch { expected: enc.encoded_dim(), found: psi.len() });
    }
    postselect(enc.apply_projected(psi))
}

/// How γ (a bound on the resolvent norm over Γ) is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum GammaChoice {
    /// Largest resolvent norm over a 2048-point arc-length grid.
    Sampled,
    /// κ_S/a, valid when every contour point is at least a from the spectrum.
    Analytic {
        a: f64,
    },
    Value {
        gamma: f64,
    },
}

/// Source of ‖f(A)ψ‖ for the error budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    OracleAssisted,
    TwoPass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition1Options {
    pub gamma: GammaChoice,
    pub m_override: Option<usize>,
    pub norm_mode: NormMode,
    pub m_cap: usize,
    /// Simulate every amplitude when the register is small enough.
    pub full_simulation: bool,
}

impl Default for Definition1Options {
    fn default() -> Self {
        Definition1Options {
            gamma: GammaChoice::Sampled,
            m_override: None,
            norm_mode: NormMode::OracleAssisted,
            m_cap: DEFAULT_M_CAP,
            full_simulation: true,
        }
    }
}

/// The three inequalities linking the circuit output to f(A)ψ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainCheck {
    /// ‖Σc_k p^◇ψ − f_M(A)ψ‖
    pub lcu_vs_quadrature: f64,
    /// ‖f(A)ψ − Σc_k p^◇ψ‖
    pub lcu_vs_exact: f64,
    /// ‖c‖₁ε′
    pub polynomial_budget: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Definition1Diagnostics {
    #[serde(rename = "M")]
    pub m: usize,
    pub m_padded: usize,
    pub m_selected: Option<usize>,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub bound_b: f64,
    #[serde(rename = "L")]
    pub lipschitz_l: f64,
    pub bounds_estimated: bool,
    pub contour_length: f64,
    pub enclosing_radius: f64,
    pub min_distance: f64,
    pub gamma_choice: f64,
    pub gamma_sampled: f64,
    pub gamma_nodes: f64,
    pub gamma_used: f64,
    pub delta: f64,
    pub eps_prime: f64,
    pub one_norm: f64,
    pub poly_degree: usize,
    pub quadrature_target: f64,
    pub apriori_bound: f64,
    pub output_norm: f64,
    pub output_norm_used: f64,
    pub norm_mode: NormMode,
    pub total_verified_error: Option<f64>,
    pub chain: ChainCheck,
    pub distance: f64,
    pub success_probability_direct: f64,
    pub full_vs_projected: Option<f64>,
    pub simulation: String,
    pub ancilla_qubits: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Definition1Result {
    pub state: StateVector,
    pub success_probability: f64,
    pub amplification_rounds: u64,
    pub target_state: StateVector,
    pub diagnostics: Definition1Diagnostics,
}

/// Nodes and outer coefficients for a fixed M, before any encoding is built.
#[derive(Debug, Clone)]
pub struct NodePlan {
    pub nodes: ContourNodes,
    pub coeffs: LcuCoefficients,
    pub gamma_nodes: f64,
    pub gamma_used: f64,
    pub delta: f64,
    pub eps_prime: f64,
    /// select_M's choice at the final γ, if it was reachable.
    pub m_selected: Option<usize>,
    pub apriori_bound: f64,
    pub over_budget: bool,
}

/// A node plan together with its polynomial and per-node encodings.
#[derive(Debug, Clone)]
pub struct NodeCircuit {
    pub plan: NodePlan,
    pub poly: OddPolynomial,
    /// (1, a+2)-encodings of p^◇(·)†, one per node.
    pub per_node: Vec<BlockEncoding>,
}

fn alpha_of(a: &ComplexMatrix) -> f64 {
    let norm_a = spectral_norm(a);
    if norm_a > 0.0 {
        norm_a
    } else {
        1.0
    }
}

fn plan_for(
    a: &ComplexMatrix,
    f: &HolomorphicFunction,
    contour: &Contour,
    m: usize,
    gamma_choice: f64,
    eps_prime_of: &dyn Fn(f64) -> f64,
) -> Result<NodePlan> {
    let nodes = contour.discretize(m);
    let mut gamma_nodes: f64 = 0.0;
    for (k, &z) in nodes.z.iter().enumerate() {
        gamma_nodes = gamma_nodes.max(resolvent_norm(a, z).map_err(|_| Error::NodeOnSpectrum { k })?);
    }
    let gamma_used = gamma_choice.max(gamma_nodes);
    let alpha = alpha_of(a);
    let delta = 1.0 / (gamma_used * (alpha + contour.enclosing_radius()));
    let coeffs = outer_coefficients(&nodes, f, alpha, delta)?;
    let eps_prime = eps_prime_of(coeffs.one_norm).min(0.5);
    Ok(NodePlan {
        nodes,
        coeffs,
        gamma_nodes,
        gamma_used,
        delta,
        eps_prime,
        m_selected: None,
        apriori_bound: f64::NAN,
        over_budget: false,
    })
}

/// Picks M for the quadrature target (or takes the override) and computes
/// nodes and coefficients. When the nodes see a larger resolvent than γ
/// assumed, M is re-selected with it.
#[allow(clippy::too_many_arguments)]
pub fn plan_nodes(
    a: &ComplexMatrix,
    f: &HolomorphicFunction,
    contour: &Contour,
    bounds: &crate::quadrature::FunctionBounds,
    gamma_choice: f64,
    quadrature_target: f64,
    m_override: Option<usize>,
    m_cap: usize,
    eps_prime_of: &dyn Fn(f64) -> f64,
) -> Result<NodePlan> {
    let l = contour.length();
    let select = |gamma: f64| select_m_with_cap(bounds.bound_b, bounds.lipschitz_l, gamma, l, quadrature_target, m_cap);
    let mut plan = match m_override {
        Some(m) => {
            let mut plan = plan_for(a, f, contour, m.max(1), gamma_choice, eps_prime_of)?;
            plan.m_selected = select(plan.gamma_used).ok();
            plan
        }
        None => {
            let mut gamma = gamma_choice;
            let mut m = select(gamma)?;
            let mut plan = plan_for(a, f, contour, m, gamma, eps_prime_of)?;
            for _ in 0..3 {
                if plan.gamma_used <= gamma {
                    break;
                }
                gamma = plan.gamma_used;
                let m2 = select(gamma)?;
                if m2 == m {
                    break;
                }
                m = m2;
                plan = plan_for(a, f, contour, m, gamma, eps_prime_of)?;
            }
            plan.m_selected = Some(m);
            plan
        }
    };
    plan.apriori_bound = apriori_error_bound(bounds.bound_b, bounds.lipschitz_l, plan.gamma_used, l, plan.nodes.m);
    plan.over_budget = plan.apriori_bound > quadrature_target;
    Ok(plan)
}

/// The polynomial for (δ, ε′) and the per-node QSVT encodings.
pub fn build_node_circuit(a: &ComplexMatrix, plan: NodePlan) -> Result<NodeCircuit> {
    let ua = dilate(a, alpha_of(a))?;
    let poly = build_inverse_poly(plan.delta.min(1.0 - 1e-12), plan.eps_prime)?;
    let mut per_node = Vec::with_capacity(plan.nodes.m);
    for &z in &plan.nodes.z {
        let shifted = shifted_operator_encoding(&ua, z)?;
        let mut q = qsvt_inverse_encoding(&shifted, &poly)?;
        q.clear_target();
        per_node.push(q);
    }
    Ok(NodeCircuit { plan, poly, per_node })
}

/// γ for the chosen rule. The analytic rule requires every contour point
/// to be at least `a` from the spectrum.
pub fn resolve_gamma(
    a: &ComplexMatrix,
    spec: &crate::numkit::SpectralInfo,
    contour: &Contour,
    min_distance: f64,
    choice: GammaChoice,
) -> Result<f64> {
    match choice {
        GammaChoice::Sampled => sampled_gamma(a, contour, 2048),
        GammaChoice::Analytic { a: dist } => {
            if min_distance < dist * (1.0 - 1e-9) {
                return Err(Error::HypothesisViolated(format!(
                    "contour distance {min_distance} to the spectrum is below a = {dist}"
                )));
            }
            crate::numkit::resolvent_bound_diagonalizable(spec, dist)
        }
        GammaChoice::Value { gamma } => {
            if !(gamma > 0.0) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
            }
            Ok(gamma)
        }
    }
}

/// State-output driver: a normalized approximation of f(A)ψ/‖f(A)ψ‖ within ε,
/// produced by simulating the full LCU-of-QSVT circuit.
pub fn solve_definition1(
    a: &ComplexMatrix,
    psi: &StateVector,
    f: &HolomorphicFunction,
    contour: &Contour,
    epsilon: f64,
    opts: &Definition1Options,
) -> Result<Definition1Result> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    let n = a.nrows();
    if a.ncols() != n || psi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi.len() });
    }
    check_unit(psi)?;
    let spec = spectral_info(a)?;
    let enclosure = contour.verify_enclosure(&spec)?;
    if !enclosure.enclosed {
        let index = enclosure.winding_numbers.iter().position(|&w| w != 1).unwrap_or(0);
        return Err(Error::NotEnclosed { index });
    }
    let norm_a = spectral_norm(a);
    let alpha = if norm_a > 0.0 { norm_a } else { 1.0 };
    let bounds = bounds_on_contour(f, contour)?;
    let gamma_sampled = sampled_gamma(a, contour, 2048)?;
    let gamma_choice = match opts.gamma {
        GammaChoice::Sampled => gamma_sampled,
        other => resolve_gamma(a, &spec, contour, enclosure.min_distance, other)?,
    };
    let exact = f.apply_oracle(a)? * psi;
    let output_norm = exact.norm();
    if output_norm < 1e-14 {
        return Err(Error::VanishingOutput { norm: output_norm });
    }
    let target_state = &exact / cx(output_norm, 0.0);

    let mut warnings = Vec::new();
    let output_norm_used = match opts.norm_mode {
        NormMode::OracleAssisted => output_norm,
        NormMode::TwoPass => {
            let mut coarse = opts.clone();
            coarse.norm_mode = NormMode::OracleAssisted;
            let first = run_circuit(a, psi, f, contour, 0.5, 1.0, gamma_choice, &bounds, &coarse, &mut Vec::new())?;
            0.75 * first.one_norm * first.success_probability.sqrt()
        }
    };
    let run = run_circuit(a, psi, f, contour, epsilon, output_norm_used, gamma_choice, &bounds, opts, &mut warnings)?;

    let distance = (&run.state - &target_state).norm();
    let lcu_vs_exact = (&run.raw_scaled - &exact).norm();
    let polynomial_budget = run.one_norm * run.eps_prime;
    let chain_holds = run.lcu_vs_quadrature <= polynomial_budget * (1.0 + 1e-9)
        && lcu_vs_exact <= 2.0 * polynomial_budget * (1.0 + 1e-9)
        && distance <= 4.0 * polynomial_budget / output_norm * (1.0 + 1e-9);
    if !chain_holds && opts.m_override.is_none() && opts.norm_mode == NormMode::OracleAssisted {
        warnings.push("error chain inequality not met".into());
    }
    if distance > epsilon && opts.m_override.is_none() {
        return Err(Error::AccuracyNotMet { distance, epsilon });
    }
    let amplification_rounds = (1.0 / run.success_probability.sqrt()).ceil() as u64;
    let diagnostics = Definition1Diagnostics {
        m: run.m,
        m_padded: run.m.next_power_of_two(),
        m_selected: run.m_selected,
        alpha,
        bound_b: bounds.bound_b,
        lipschitz_l: bounds.lipschitz_l,
        bounds_estimated: bounds.estimated,
        contour_length: contour.length(),
        enclosing_radius: contour.enclosing_radius(),
        min_distance: enclosure.min_distance,
        gamma_choice,
        gamma_sampled,
        gamma_nodes: run.gamma_nodes,
        gamma_used: run.gamma_used,
        delta: run.delta,
        eps_prime: run.eps_prime,
        one_norm: run.one_norm,
        poly_degree: run.poly_degree,
        quadrature_target: run.quadrature_target,
        apriori_bound: run.apriori_bound,
        output_norm,
        output_norm_used,
        norm_mode: opts.norm_mode,
        total_verified_error: run.total_verified_error,
        chain: ChainCheck {
            lcu_vs_quadrature: run.lcu_vs_quadrature,
            lcu_vs_exact,
            polynomial_budget,
            holds: chain_holds,
        },
        distance,
        success_probability_direct: run.success_probability_direct,
        full_vs_projected: run.full_vs_projected,
        simulation: run.simulation,
        ancilla_qubits: run.m.next_power_of_two().trailing_zeros() as usize + 1 + 2,
        warnings,
    };
    Ok(Definition1Result {
        state: run.state,
        success_probability: run.success_probability,
        amplification_rounds,
        target_state,
        diagnostics,
    })
}

struct CircuitRun {
    m: usize,
    m_selected: Option<usize>,
    state: StateVector,
    raw_scaled: StateVector,
    success_probability: f64,
    success_probability_direct: f64,
    one_norm: f64,
    eps_prime: f64,
    delta: f64,
    gamma_nodes: f64,
    gamma_used: f64,
    poly_degree: usize,
    quadrature_target: f64,
    apriori_bound: f64,
    lcu_vs_quadrature: f64,
    total_verified_error: Option<f64>,
    full_vs_projected: Option<f64>,
    simulation: String,
}

#[allow(clippy::too_many_arguments)]
fn run_circuit(
    a: &ComplexMatrix,
    psi: &StateVector,
    f: &HolomorphicFunction,
    contour: &Contour,
    epsilon: f64,
    output_norm: f64,
    gamma_choice: f64,
    bounds: &crate::quadrature::FunctionBounds,
    opts: &Definition1Options,
    warnings: &mut Vec<String>,
) -> Result<CircuitRun> {
    let quadrature_target = output_norm * epsilon / 4.0;
    let eps_prime_of = |one_norm: f64| output_norm * epsilon / (4.0 * one_norm);
    let plan =
        plan_nodes(a, f, contour, bounds, gamma_choice, quadrature_target, opts.m_override, opts.m_cap, &eps_prime_of)?;
    if opts.m_override.is_some() && plan.over_budget {
        warnings.push("aprioriBound exceeds budget".into());
    }
    let m = plan.nodes.m;
    let m_selected = plan.m_selected;
    let apriori_bound = plan.apriori_bound;
    let built = build_node_circuit(a, plan)?;

    // Σ c_k p^◇(·)†ψ computed directly from the stored per-node blocks
    let mut direct = StateVector::zeros(psi.len());
    for (k, enc) in built.per_node.iter().enumerate() {
        direct += enc.apply_projected(psi) * built.plan.coeffs.c[k];
    }
    let total = assemble_total_circuit(&built.plan.coeffs, built.per_node)?;
    let one_norm = built.plan.coeffs.one_norm;
    let projected = apply_and_postselect_projected(&total, psi)?;
    let (post, full_vs_projected, simulation) = if opts.full_simulation && total.dim() <= FULL_SIMULATION_CAP {
        let full = apply_and_postselect(&total, psi)?;
        let diff = (&full.raw_vector - &projected.raw_vector).norm();
        (full, Some(diff), "full".to_string())
    } else {
        (projected, None, "projected".to_string())
    };
    let raw_scaled = &post.raw_vector * cx(one_norm, 0.0);
    let fm_psi = riemann_sum_vector(a, &built.plan.nodes, f, psi)?;
    let lcu_vs_quadrature = (&raw_scaled - &fm_psi).norm();
    let total_verified_error = if psi.len() <= 16 && m <= 1 << 18 {
        let fm = riemann_sum_matrix(a, &built.plan.nodes, f)?;
        Some(spectral_norm(&(total.top_left_block() * cx(one_norm, 0.0) - fm)))
    } else {
        None
    };
    let success_probability_direct = direct.norm_squared() / (one_norm * one_norm);
    Ok(CircuitRun {
        m,
        m_selected,
        state: post.state,
        raw_scaled,
        success_probability: post.success_probability,
        success_probability_direct,
        one_norm,
        eps_prime: built.plan.eps_prime,
        delta: built.plan.delta,
        gamma_nodes: built.plan.gamma_nodes,
        gamma_used: built.plan.gamma_used,
        poly_degree: built.poly.degree,
        quadrature_target,
        apriori_bound,
        lcu_vs_quadrature,
        total_verified_error,
        full_vs_projected,
        simulation,
    })
}

/// Checks a matrix is Hermitian to 1e−10.
pub fn ensure_hermitian(m: &ComplexMatrix) -> Result<()> {
    let residual = hermitian_residual(m);
    if residual > 1e-10 {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}
