//! Applications: Hamiltonian simulation, matrix polynomials and linear ODEs
//! (generic and fast-forwarded, with optional inhomogeneity), each with its
//! own contour choice and resource estimate.

use serde::{Deserialize, Serialize};

use crate::blockenc::{solve_definition1, Definition1Options, Definition1Result, GammaChoice, NormMode};
use crate::contour::{make_circle, make_truncated_disk, Contour, ContourSpec};
use crate::error::{Error, Result};
use crate::formats::{self, ComplexEntry};
use crate::numkit::{
    cx, from_diagonal, hermitian_residual, inverse, spectral_info, spectral_norm, ComplexMatrix, SpectralInfo,
    StateVector, C64, I,
};
use crate::quadrature::{bounds_on_contour, select_m, FunctionKind, HolomorphicFunction};
use crate::sampler::{build_plan_repetitions, Definition2Options, SamplingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    HamiltonianSimulation,
    MatrixPolynomial,
    OdeGeneric,
    OdeFastForward,
}

/// Problem descriptor. For Hamiltonian simulation `matrix` is H; otherwise A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApplicationProblem {
    pub kind: ProblemKind,
    #[serde(with = "formats::matrix")]
    pub matrix: ComplexMatrix,
    #[serde(with = "formats::state")]
    pub state: StateVector,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly_coeffs: Option<Vec<ComplexEntry>>,
    #[serde(default, with = "formats::state_opt", skip_serializing_if = "Option::is_none")]
    pub b: Option<StateVector>,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourSpec>,
    /// The contour parameter a; chosen per kind when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour_param: Option<f64>,
    /// Observable for the estimation path.
    #[serde(default, with = "formats::matrix_opt", skip_serializing_if = "Option::is_none")]
    pub observable: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi2: Option<f64>,
}

impl ApplicationProblem {
    pub fn new(kind: ProblemKind, matrix: ComplexMatrix, state: StateVector, epsilon: f64) -> Self {
        ApplicationProblem {
            kind,
            matrix,
            state,
            t: None,
            poly_coeffs: None,
            b: None,
            epsilon,
            contour: None,
            contour_param: None,
            observable: None,
            xi2: None,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    /// diag(1, −1, 1, −1, …) unless an observable is given.
    pub fn observable_or_default(&self) -> ComplexMatrix {
        self.observable.clone().unwrap_or_else(|| {
            let n = self.matrix.nrows();
            from_diagonal(&(0..n).map(|i| cx(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect::<Vec<_>>())
        })
    }

    pub fn xi2_or_default(&self) -> f64 {
        self.xi2.unwrap_or(0.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeVariant {
    Generic,
    FastForward,
}

/// Everything a resource formula may consume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceInputs {
    #[serde(rename = "B")]
    pub bound_b: f64,
    #[serde(rename = "L")]
    pub lipschitz_l: f64,
    /// Contour length l.
    pub length: f64,
    pub gamma: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub alpha: f64,
    /// ‖f(A)ψ‖, or ‖x(T)‖ for ODEs.
    pub output_norm: f64,
    pub epsilon: f64,
    pub kappa_s: f64,
    pub rho: f64,
    /// Contour parameter a.
    pub a: f64,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// Ancillas of U_A.
    pub ua_ancillas: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourcePath {
    Lcu,
    Sampler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneralCounts {
    pub formula_tag: String,
    #[serde(rename = "queriesUA")]
    pub queries_ua: f64,
    #[serde(rename = "queriesUpsi")]
    pub queries_upsi: f64,
    pub ancilla_qubits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeasuredCounts {
    #[serde(rename = "M")]
    pub m: usize,
    pub poly_degree: usize,
    /// One QSVT sequence per LCU run.
    #[serde(rename = "queriesUAPerRun")]
    pub queries_ua_per_run: u64,
    pub amplification_rounds: u64,
    #[serde(rename = "queriesUATotal")]
    pub queries_ua_total: u64,
    pub ancilla_qubits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceEstimate {
    pub path: ResourcePath,
    pub formula_tag: String,
    #[serde(rename = "queriesUA")]
    pub queries_ua: f64,
    #[serde(rename = "queriesUpsi")]
    pub queries_upsi: f64,
    pub ancilla_qubits: u64,
    pub ancilla_expression: String,
    #[serde(rename = "repetitionsT")]
    pub repetitions_t: Option<f64>,
    #[serde(rename = "repetitionsTFactorOne")]
    pub repetitions_t_factor_one: Option<f64>,
    /// General LCU counts at the same inputs.
    pub general: GeneralCounts,
    /// General LCU counts with ρ replaced by its bound α.
    pub general_alpha_bounded: GeneralCounts,
    pub inputs: ResourceInputs,
    pub measured: Option<MeasuredCounts>,
    pub dominant_constants_note: String,
}

const CONSTANTS_NOTE: &str = "asymptotic, constants = 1; natural log inside queries, log2 for ancilla registers";

fn log2_register(x: f64) -> u64 {
    if x > 2.0 {
        x.log2().ceil() as u64
    } else {
        1
    }
}

/// Queries to U_A, queries to U_ψ and ancillas for the full-LCU path.
pub fn general_lcu_counts(p: &ResourceInputs) -> GeneralCounts {
    let n = p.output_norm;
    let s = p.bound_b * p.length * p.gamma * (1.0 + p.radius / p.alpha);
    let queries_ua = p.bound_b * p.length * p.gamma * p.gamma * (p.alpha + p.radius) / n * (s / (n * p.epsilon)).ln();
    let register = log2_register((p.bound_b * p.gamma + p.lipschitz_l) * p.length / (n * p.epsilon));
    GeneralCounts {
        formula_tag: "general-lcu".into(),
        queries_ua,
        queries_upsi: s / n,
        ancilla_qubits: register + p.ua_ancillas as u64 + 2,
    }
}

/// Per-circuit queries for the single-ancilla path.
pub fn general_sampler_counts(p: &ResourceInputs, observable_norm: f64, f_norm: f64) -> GeneralCounts {
    let s = p.bound_b * p.length * p.gamma * (1.0 + p.radius / p.alpha);
    GeneralCounts {
        formula_tag: "general-single-ancilla".into(),
        queries_ua: p.gamma * (p.alpha + p.radius) * (s * observable_norm * f_norm / p.epsilon).ln(),
        queries_upsi: 1.0,
        ancilla_qubits: p.ua_ancillas as u64 + 3,
    }
}

/// The kind-specific simplified row for the full-LCU path.
pub fn application_row(kind: ProblemKind, p: &ResourceInputs) -> (String, f64, f64, u64, String) {
    let n = p.output_norm;
    let eps = p.epsilon;
    let a_ua = p.ua_ancillas as u64;
    match kind {
        ProblemKind::HamiltonianSimulation => {
            let tb = p.t.unwrap_or(0.0).max(1.0);
            (
                "hamiltonian-simulation: T^2 log(T/eps)".into(),
                tb * tb * (tb / eps).ln(),
                tb,
                log2_register(tb / eps) + a_ua + 2,
                "ceil(log2(T/eps)) + a + 2".into(),
            )
        }
        ProblemKind::MatrixPolynomial => {
            let bk = p.bound_b * p.kappa_s;
            (
                "matrix-polynomial: B kappa_S^2/|f(A)psi| log(B kappa_S/(|f(A)psi| eps))".into(),
                bk * p.kappa_s / n * (bk / (n * eps)).ln(),
                bk / n,
                log2_register((bk + p.alpha * p.lipschitz_l) / (p.alpha * n * eps)) + a_ua + 2,
                "ceil(log2((B kappa_S + alpha L)/(alpha |f(A)psi| eps))) + a + 2".into(),
            )
        }
        ProblemKind::OdeGeneric => {
            let t = p.t.unwrap_or(0.0);
            let k = p.kappa_s * p.alpha * t;
            (
                "ode-generic: kappa_S^2 alpha^2 T^2/|x(T)| log(kappa_S alpha T/(|x(T)| eps))".into(),
                k * k / n * (k / (n * eps)).ln(),
                k / n,
                log2_register(p.bound_b * k / (n * eps)) + a_ua + 2,
                "ceil(log2(B kappa_S alpha T/(|x(T)| eps))) + a + 2".into(),
            )
        }
        ProblemKind::OdeFastForward => {
            let k = p.kappa_s * p.alpha;
            (
                "ode-fast-forward: kappa_S^2 alpha^2/|x(T)| log(kappa_S alpha/(|x(T)| eps))".into(),
                k * k / n * (k / (n * eps)).ln(),
                k / n,
                log2_register((p.bound_b * p.gamma + p.lipschitz_l) * p.length / (n * eps)) + a_ua + 2,
                "ceil(log2((B kappa_S/a + L) l/(|x(T)| eps))) + a + 2".into(),
            )
        }
    }
}

fn alpha_bounded(p: &ResourceInputs) -> GeneralCounts {
    let mut q = *p;
    q.radius = p.alpha + p.a;
    let mut g = general_lcu_counts(&q);
    g.formula_tag = "general-lcu (R = alpha + a)".into();
    g
}

/// Prepared application: the matrix fed to the state-output driver, f, Γ and γ.
#[derive(Debug, Clone)]
pub struct AppSetup {
    pub kind: ProblemKind,
    pub a: ComplexMatrix,
    pub spec: SpectralInfo,
    /// Unit circuit input.
    pub psi: StateVector,
    /// ‖x₀‖, or ‖x₀ + A⁻¹b‖ with an inhomogeneity.
    pub psi_norm: f64,
    pub f: HolomorphicFunction,
    pub contour: Contour,
    pub contour_param: f64,
    pub gamma: GammaChoice,
    /// A⁻¹b when b is present.
    pub particular: Option<StateVector>,
    /// The unnormalized target: f(A)ψ or x(T).
    pub oracle_solution: StateVector,
    pub inputs: ResourceInputs,
    pub warnings: Vec<String>,
}

fn unit(v: &StateVector) -> Result<(StateVector, f64)> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidParameter("state must be nonzero".into()));
    }
    Ok((v / cx(n, 0.0), n))
}

pub fn setup(problem: &ApplicationProblem) -> Result<AppSetup> {
    let m = &problem.matrix;
    let n = m.nrows();
    if m.ncols() != n || problem.state.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: problem.state.len() });
    }
    if !(problem.epsilon > 0.0 && problem.epsilon <= 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2], got {}", problem.epsilon)));
    }
    let t = problem.t.unwrap_or(0.0);
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("T must be a nonnegative number, got {t}")));
    }
    let mut warnings = Vec::new();
    let (a_mat, f) = match problem.kind {
        ProblemKind::HamiltonianSimulation => {
            let residual = hermitian_residual(m);
            if residual > 1e-10 {
                return Err(Error::NotHermitian { residual });
            }
            let norm = spectral_norm(m);
            if norm > 1.0 + 1e-10 {
                return Err(Error::NormExceedsOne { norm });
            }
            (m * (-I), HolomorphicFunction::exp(t))
        }
        ProblemKind::MatrixPolynomial => {
            let coeffs: Vec<C64> = problem
                .poly_coeffs
                .as_ref()
                .ok_or(Error::MissingParameter("polyCoeffs"))?
                .iter()
                .map(|c| c.value())
                .collect();
            if coeffs.is_empty() {
                return Err(Error::MissingParameter("polyCoeffs"));
            }
            (m.clone(), HolomorphicFunction::polynomial(coeffs))
        }
        ProblemKind::OdeGeneric | ProblemKind::OdeFastForward => (m.clone(), HolomorphicFunction::exp(t)),
    };
    let spec = spectral_info(&a_mat)?;
    let norm_a = spectral_norm(&a_mat);
    let alpha = if norm_a > 0.0 { norm_a } else { 1.0 };
    let rho = spec.spectral_radius;
    let max_re = spec.max_real_part();
    let tol = 1e-8 * alpha;

    let default_a = match problem.kind {
        ProblemKind::HamiltonianSimulation | ProblemKind::OdeGeneric => {
            if t > 0.0 {
                (1.0 / t).min(if problem.kind == ProblemKind::HamiltonianSimulation { 1.0 } else { f64::INFINITY })
            } else {
                1.0
            }
        }
        ProblemKind::MatrixPolynomial => alpha,
        ProblemKind::OdeFastForward => -max_re,
    };
    match problem.kind {
        ProblemKind::OdeGeneric if max_re > tol => {
            return Err(Error::StabilityViolated(format!("max Re(lambda) = {max_re:e} > 0")));
        }
        ProblemKind::OdeFastForward if max_re >= -tol => {
            return Err(Error::StabilityViolated(format!("max Re(lambda) = {max_re:e} is not strictly negative")));
        }
        _ => {}
    }
    let a_param = problem.contour_param.unwrap_or(default_a);
    if !(a_param > 0.0 && a_param.is_finite()) {
        return Err(Error::InvalidParameter(format!("contour parameter a must be positive, got {a_param}")));
    }
    if problem.kind == ProblemKind::OdeFastForward && a_param > -max_re * (1.0 + 1e-12) {
        return Err(Error::StabilityViolated(format!("Re(lambda) <= -a fails for a = {a_param}")));
    }
    let (contour, radius) = match &problem.contour {
        Some(spec_c) => {
            let c = spec_c.build()?;
            let r = c.enclosing_radius();
            (c, r)
        }
        None => match problem.kind {
            ProblemKind::HamiltonianSimulation => {
                (make_truncated_disk(1.0 + a_param, -a_param, a_param)?, 1.0 + a_param)
            }
            ProblemKind::MatrixPolynomial => (make_circle(cx(0.0, 0.0), rho + a_param)?, rho + a_param),
            ProblemKind::OdeGeneric => (make_truncated_disk(rho + a_param, f64::NEG_INFINITY, a_param)?, rho + a_param),
            ProblemKind::OdeFastForward => (make_truncated_disk(rho + a_param, f64::NEG_INFINITY, 0.0)?, rho + a_param),
        },
    };
    let enclosure = contour.verify_enclosure(&spec)?;
    if !enclosure.enclosed {
        let index = enclosure.winding_numbers.iter().position(|&w| w != 1).unwrap_or(0);
        return Err(Error::NotEnclosed { index });
    }
    let gamma = if problem.contour.is_some() {
        GammaChoice::Sampled
    } else if !spec.diagonalizable {
        warnings.push("matrix is not diagonalizable; gamma sampled on the contour".into());
        GammaChoice::Sampled
    } else if enclosure.min_distance < a_param * (1.0 - 1e-9) {
        return Err(Error::HypothesisViolated(format!(
            "contour distance {} to the spectrum is below a = {a_param}",
            enclosure.min_distance
        )));
    } else {
        GammaChoice::Analytic { a: a_param }
    };
    let gamma_value = match gamma {
        GammaChoice::Analytic { a } => spec.kappa_s / a,
        _ => crate::quadrature::sampled_gamma(&a_mat, &contour, 2048)?,
    };

    let (x0, _) = unit(&problem.state)?;
    let x0 = &x0 * cx(problem.state.norm(), 0.0);
    let (psi_raw, particular) = match &problem.b {
        Some(b) => {
            if !matches!(problem.kind, ProblemKind::OdeGeneric | ProblemKind::OdeFastForward) {
                return Err(Error::InvalidParameter("b applies to ODE problems only".into()));
            }
            if b.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.len() });
            }
            let ainv = inverse(&a_mat).map_err(|_| Error::SingularA)?;
            let w = ainv * b;
            (&x0 + &w, Some(w))
        }
        None => (x0, None),
    };
    let (psi, psi_norm) = unit(&psi_raw)?;
    let fa = f.apply_oracle(&a_mat)?;
    let evolved = &fa * &psi_raw;
    let oracle_solution = match &particular {
        Some(w) => &evolved - w,
        None => evolved,
    };
    let bounds = bounds_on_contour(&f, &contour)?;
    let (bound_b, lipschitz_l) = match problem.kind {
        // e^{aT} with a = 1/T
        ProblemKind::OdeGeneric if problem.contour.is_none() && problem.contour_param.is_none() && t > 0.0 => {
            (std::f64::consts::E, t * std::f64::consts::E)
        }
        _ => (bounds.bound_b, bounds.lipschitz_l),
    };
    let inputs = ResourceInputs {
        bound_b,
        lipschitz_l,
        length: contour.length(),
        gamma: gamma_value,
        radius,
        alpha,
        output_norm: (&fa * &psi).norm(),
        epsilon: problem.epsilon,
        kappa_s: spec.kappa_s,
        rho,
        a: a_param,
        t: problem.t,
        ua_ancillas: 1,
    };
    Ok(AppSetup {
        kind: problem.kind,
        a: a_mat,
        spec,
        psi,
        psi_norm,
        f,
        contour,
        contour_param: a_param,
        gamma,
        particular,
        oracle_solution,
        inputs,
        warnings,
    })
}

/// Resource estimate for either path. The sampler path evaluates the
/// coefficient one-norm at the node count the estimator would use, so its
/// repetition count equals the plan's.
pub fn estimate_resources(problem: &ApplicationProblem, path: ResourcePath) -> Result<ResourceEstimate> {
    let s = setup(problem)?;
    estimate_from_setup(problem, &s, path)
}

pub fn estimate_from_setup(problem: &ApplicationProblem, s: &AppSetup, path: ResourcePath) -> Result<ResourceEstimate> {
    let p = s.inputs;
    if !(p.output_norm > 0.0) {
        return Err(Error::VanishingOutput { norm: p.output_norm });
    }
    let general = general_lcu_counts(&p);
    let general_ab = alpha_bounded(&p);
    match path {
        ResourcePath::Lcu => {
            let (tag, ua, upsi, anc, expr) = application_row(s.kind, &p);
            Ok(ResourceEstimate {
                path,
                formula_tag: tag,
                queries_ua: ua,
                queries_upsi: upsi,
                ancilla_qubits: anc,
                ancilla_expression: expr,
                repetitions_t: None,
                repetitions_t_factor_one: None,
                general,
                general_alpha_bounded: general_ab,
                inputs: p,
                measured: None,
                dominant_constants_note: CONSTANTS_NOTE.into(),
            })
        }
        ResourcePath::Sampler => {
            let o = problem.observable_or_default();
            let xi2 = problem.xi2_or_default();
            let f_norm = spectral_norm(&s.f.apply_oracle(&s.a)?);
            let o_norm = spectral_norm(&o);
            let (t8, t1) = build_plan_repetitions(&s.a, &s.f, &s.contour, s.gamma, p.epsilon, xi2, o_norm, f_norm)?;
            let g = general_sampler_counts(&p, o_norm, f_norm);
            Ok(ResourceEstimate {
                path,
                formula_tag: g.formula_tag.clone(),
                queries_ua: g.queries_ua,
                queries_upsi: g.queries_upsi,
                ancilla_qubits: g.ancilla_qubits,
                ancilla_expression: "a + 3".into(),
                repetitions_t: Some(t8),
                repetitions_t_factor_one: Some(t1),
                general,
                general_alpha_bounded: general_ab,
                inputs: p,
                measured: None,
                dominant_constants_note: CONSTANTS_NOTE.into(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppOptions {
    /// Replaces the kind's γ choice.
    pub gamma: Option<GammaChoice>,
    pub m_override: Option<usize>,
    pub norm_mode: NormMode,
    pub full_simulation: bool,
}

impl Default for AppOptions {
    fn default() -> Self {
        AppOptions { gamma: None, m_override: None, norm_mode: NormMode::OracleAssisted, full_simulation: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InhomogeneousParts {
    pub psi_norm: f64,
    pub evolved_norm: f64,
    pub particular_norm: f64,
    pub inner_epsilon: f64,
    pub inner_distance: f64,
}

#[derive(Debug, Clone)]
pub struct AppSolution {
    pub kind: ProblemKind,
    /// Normalized output state.
    pub state: StateVector,
    pub success_probability: f64,
    pub oracle_state: StateVector,
    pub distance: f64,
    pub contour_param: f64,
    pub contour: Contour,
    pub definition1: Definition1Result,
    pub resources: ResourceEstimate,
    pub inhomogeneous: Option<InhomogeneousParts>,
    pub warnings: Vec<String>,
}

pub fn solve_problem(problem: &ApplicationProblem, opts: &AppOptions) -> Result<AppSolution> {
    let s = setup(problem)?;
    let oracle_norm = s.oracle_solution.norm();
    if oracle_norm < 1e-14 {
        return Err(Error::VanishingOutput { norm: oracle_norm });
    }
    let oracle_state = &s.oracle_solution / cx(oracle_norm, 0.0);
    let evolved_exact = &s.f.apply_oracle(&s.a)? * &s.psi;
    let evolved_norm = evolved_exact.norm() * s.psi_norm;
    // the final combination amplifies the inner error by ‖e^{AT}ψ‖/‖x(T)‖
    let inner_epsilon = match &s.particular {
        Some(_) => (problem.epsilon * oracle_norm / (2.0 * evolved_norm)).min(0.5),
        None => problem.epsilon,
    };
    let d1 = Definition1Options {
        gamma: opts.gamma.unwrap_or(s.gamma),
        m_override: opts.m_override,
        norm_mode: opts.norm_mode,
        full_simulation: opts.full_simulation,
        ..Default::default()
    };
    let r = solve_definition1(&s.a, &s.psi, &s.f, &s.contour, inner_epsilon, &d1)?;
    let (state, inhomogeneous) = match &s.particular {
        Some(w) => {
            // evolved part rescaled by its desk-scale norm, minus A⁻¹b
            let combined = &r.state * cx(evolved_norm, 0.0) - w;
            let (u, _) = unit(&combined)?;
            let parts = InhomogeneousParts {
                psi_norm: s.psi_norm,
                evolved_norm,
                particular_norm: w.norm(),
                inner_epsilon,
                inner_distance: r.diagnostics.distance,
            };
            (u, Some(parts))
        }
        None => (r.state.clone(), None),
    };
    let distance = (&state - &oracle_state).norm();
    if distance > problem.epsilon && opts.m_override.is_none() {
        return Err(Error::AccuracyNotMet { distance, epsilon: problem.epsilon });
    }
    let mut resources = estimate_from_setup(problem, &s, ResourcePath::Lcu)?;
    let degree = r.diagnostics.poly_degree as u64;
    resources.measured = Some(MeasuredCounts {
        m: r.diagnostics.m,
        poly_degree: r.diagnostics.poly_degree,
        queries_ua_per_run: degree,
        amplification_rounds: r.amplification_rounds,
        queries_ua_total: degree * r.amplification_rounds,
        ancilla_qubits: r.diagnostics.ancilla_qubits,
    });
    let mut warnings = s.warnings.clone();
    warnings.extend(r.diagnostics.warnings.iter().cloned());
    Ok(AppSolution {
        kind: s.kind,
        state,
        success_probability: r.success_probability,
        oracle_state,
        distance,
        contour_param: s.contour_param,
        contour: s.contour.clone(),
        definition1: r,
        resources,
        inhomogeneous,
        warnings,
    })
}

pub fn solve_hamiltonian_simulation(h: &ComplexMatrix, t: f64, psi: &StateVector, epsilon: f64) -> Result<AppSolution> {
    let p = ApplicationProblem::new(ProblemKind::HamiltonianSimulation, h.clone(), psi.clone(), epsilon).with_time(t);
    solve_problem(&p, &AppOptions::default())
}

pub fn solve_matrix_polynomial(
    a: &ComplexMatrix,
    coeffs: &[C64],
    psi: &StateVector,
    epsilon: f64,
) -> Result<AppSolution> {
    let mut p = ApplicationProblem::new(ProblemKind::MatrixPolynomial, a.clone(), psi.clone(), epsilon);
    p.poly_coeffs = Some(coeffs.iter().map(|z| ComplexEntry::Pair([z.re, z.im])).collect());
    solve_problem(&p, &AppOptions::default())
}

pub fn solve_ode(
    a: &ComplexMatrix,
    x0: &StateVector,
    t: f64,
    epsilon: f64,
    variant: OdeVariant,
    b: Option<&StateVector>,
) -> Result<AppSolution> {
    let kind = match variant {
        OdeVariant::Generic => ProblemKind::OdeGeneric,
        OdeVariant::FastForward => ProblemKind::OdeFastForward,
    };
    let mut p = ApplicationProblem::new(kind, a.clone(), x0.clone(), epsilon).with_time(t);
    p.b = b.cloned();
    solve_problem(&p, &AppOptions::default())
}

/// Sampler options matching the problem's γ choice.
pub fn definition2_options(s: &AppSetup, mode: SamplingMode, seed: u64) -> Definition2Options {
    Definition2Options { mode, seed, gamma: s.gamma, ..Default::default() }
}

/// Node count the LCU path would pick, without running the circuit.
pub fn predicted_m(s: &AppSetup) -> Result<usize> {
    let p = s.inputs;
    select_m(p.bound_b, p.lipschitz_l, p.gamma, p.length, p.output_norm * p.epsilon / 4.0)
}

/// True when the function is an exponential e^{tz}.
pub fn is_exp(f: &HolomorphicFunction) -> bool {
    matches!(f.kind(), FunctionKind::Exp { .. })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{identity, random_diagonalizable, random_state, random_unitary, rng_from_seed, SpectrumRegion};
    use std::f64::consts::PI;

    fn state(v: &[(f64, f64)]) -> StateVector {
        StateVector::from_iterator(v.len(), v.iter().map(|&(r, i)| cx(r, i)))
    }

    #[test]
    fn hamiltonian_simulation_examples() {
        let h = from_diagonal(&[cx(1.0, 0.0), cx(-1.0, 0.0)]);
        let psi = state(&[(1.0, 0.0), (0.0, 0.0)]);
        let r = solve_hamiltonian_simulation(&h, PI, &psi, 0.1).unwrap();
        assert!(r.distance <= 0.1);
        let want = state(&[(-1.0, 0.0), (0.0, 0.0)]);
        assert!((r.oracle_state - want).norm() < 1e-12);

        let psi2 = state(&[(0.6, 0.0), (0.0, 0.8)]);
        let r0 = solve_hamiltonian_simulation(&h, 0.0, &psi2, 0.1).unwrap();
        assert!((r0.state - &psi2).norm() <= 0.1);

        let p = ApplicationProblem::new(ProblemKind::HamiltonianSimulation, h.clone(), psi.clone(), 0.1).with_time(4.0);
        assert_eq!(setup(&p).unwrap().contour_param, 0.25);
        let bad = ComplexMatrix::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]);
        assert!(matches!(solve_hamiltonian_simulation(&bad, 1.0, &psi, 0.1), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            solve_hamiltonian_simulation(&(h * cx(2.0, 0.0)), 1.0, &psi, 0.1),
            Err(Error::NormExceedsOne { .. })
        ));
    }

    #[test]
    fn polynomial_examples() {
        let mut rng = rng_from_seed(3);
        let (a, _) =
            random_diagonalizable(3, 1.5, &SpectrumRegion::Disk { center: cx(0.0, 0.0), radius: 0.7 }, 11).unwrap();
        let psi = random_state(3, &mut rng);
        let r = solve_matrix_polynomial(&a, &[cx(0.0, 0.0), cx(1.0, 0.0)], &psi, 0.1).unwrap();
        let want = &a * &psi;
        assert!((r.state - &want / cx(want.norm(), 0.0)).norm() <= 0.1);

        let nil = crate::numkit::shift_matrix(4);
        let mut z8 = vec![cx(0.0, 0.0); 9];
        z8[8] = cx(1.0, 0.0);
        let psi4 = random_state(4, &mut rng);
        let e = solve_matrix_polynomial(&nil, &z8, &psi4, 0.1).unwrap_err();
        assert!(matches!(e, Error::VanishingOutput { .. } | Error::ZeroSuccessProbability { .. }));
    }

    #[test]
    fn ode_examples() {
        let a = identity(2) * cx(-1.0, 0.0);
        let psi = state(&[(0.6, 0.0), (0.8, 0.0)]);
        let r = solve_ode(&a, &psi, 2.0, 0.1, OdeVariant::FastForward, None).unwrap();
        assert!((r.state - &psi).norm() <= 0.1);
        let decay = (-2.0f64).exp();
        let p = r.success_probability * r.definition1.diagnostics.one_norm.powi(2);
        assert!((p.sqrt() - decay).abs() <= 0.1 * decay);

        let a2 = ComplexMatrix::from_row_slice(2, 2, &[cx(-1.0, 0.0), cx(5.0, 0.0), cx(0.0, 0.0), cx(-2.0, 0.0)]);
        let r = solve_ode(&a2, &psi, 1.0, 0.1, OdeVariant::FastForward, None).unwrap();
        assert!(r.distance <= 0.1);
        let unstable = identity(2);
        assert!(matches!(
            solve_ode(&unstable, &psi, 1.0, 0.1, OdeVariant::Generic, None),
            Err(Error::StabilityViolated(_))
        ));
        let skew = ComplexMatrix::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(0.5, 0.0), cx(-0.5, 0.0), cx(0.0, 0.0)]);
        assert!(matches!(
            solve_ode(&skew, &psi, 1.0, 0.1, OdeVariant::FastForward, None),
            Err(Error::StabilityViolated(_))
        ));
    }

    #[test]
    fn inhomogeneous_ode_matches_oracle() {
        let a = ComplexMatrix::from_row_slice(2, 2, &[cx(-1.0, 0.0), cx(0.3, 0.0), cx(0.0, -0.8), cx(-1.5, 0.2)]);
        let x0 = state(&[(1.0, 0.0), (0.0, 0.0)]);
        let b = state(&[(0.2, 0.0), (0.1, 0.1)]);
        let r = solve_ode(&a, &x0, 1.0, 0.1, OdeVariant::FastForward, Some(&b)).unwrap();
        let ainv_b = inverse(&a).unwrap() * &b;
        let x = crate::numkit::expm(&a) * (&x0 + &ainv_b) - &ainv_b;
        assert!((r.state - &x / cx(x.norm(), 0.0)).norm() <= 0.1);
        let sing = ComplexMatrix::from_row_slice(2, 2, &[cx(-1.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(-1.0, 0.0)]);
        assert!(matches!(solve_ode(&sing, &x0, 1.0, 0.1, OdeVariant::Generic, Some(&b)), Err(Error::SingularA)));
    }

    #[test]
    fn general_row_example() {
        let p = ResourceInputs {
            bound_b: 1.0,
            lipschitz_l: 1.0,
            length: 2.0 * PI,
            gamma: 2.0,
            radius: 1.0,
            alpha: 1.0,
            output_norm: 1.0,
            epsilon: 0.01,
            kappa_s: 1.0,
            rho: 0.5,
            a: 0.5,
            t: None,
            ua_ancillas: 1,
        };
        let g = general_lcu_counts(&p);
        let want = 8.0 * 2.0 * PI * (8.0 * PI / 0.01f64).ln();
        assert!((g.queries_ua - want).abs() < 1e-9);
        assert!((g.queries_ua - 394.0).abs() < 1.0);
    }

    #[test]
    fn hamiltonian_row_scales_quadratically() {
        let h = from_diagonal(&[cx(0.5, 0.0), cx(-0.5, 0.0)]);
        let psi = state(&[(0.6, 0.0), (0.8, 0.0)]);
        let est: Vec<f64> = [2.0, 4.0, 8.0]
            .iter()
            .map(|&t| {
                let p = ApplicationProblem::new(ProblemKind::HamiltonianSimulation, h.clone(), psi.clone(), 0.01)
                    .with_time(t);
                estimate_resources(&p, ResourcePath::Lcu).unwrap().queries_ua
            })
            .collect();
        for w in est.windows(2) {
            let ratio = w[1] / w[0];
            assert!((ratio / 4.0 - 1.0).abs() <= 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn sampler_repetitions_match_plan() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[cx(0.3, 0.0), cx(0.1, 0.0), cx(0.1, 0.0), cx(-0.2, 0.0)]);
        let psi = state(&[(0.6, 0.0), (0.8, 0.0)]);
        let mut p = ApplicationProblem::new(ProblemKind::HamiltonianSimulation, h, psi, 0.2).with_time(0.5);
        p.xi2 = Some(0.1);
        let est = estimate_resources(&p, ResourcePath::Sampler).unwrap();
        let s = setup(&p).unwrap();
        let o = p.observable_or_default();
        let d2 = crate::sampler::prepare_definition2(
            &s.a,
            &s.psi,
            &o,
            &s.f,
            &s.contour,
            0.2,
            0.1,
            &definition2_options(&s, SamplingMode::ExactExpectation, 1),
        )
        .unwrap();
        assert_eq!(est.repetitions_t.unwrap(), d2.plan.repetitions as f64);
        assert_eq!(est.ancilla_qubits, 4);
    }

    #[test]
    fn auto_contours_keep_distance_a() {
        let mut rng = rng_from_seed(8);
        let u = random_unitary(3, &mut rng);
        let h = &u * from_diagonal(&[cx(0.9, 0.0), cx(-0.2, 0.0), cx(0.4, 0.0)]) * u.adjoint();
        let psi = random_state(3, &mut rng);
        let (a_ode, _) = random_diagonalizable(3, 1.5, &SpectrumRegion::LeftStrip { r: 0.8, a: 0.2 }, 4).unwrap();
        let mut problems = vec![
            ApplicationProblem::new(ProblemKind::HamiltonianSimulation, h.clone(), psi.clone(), 0.1).with_time(3.0),
            ApplicationProblem::new(ProblemKind::OdeGeneric, a_ode.clone(), psi.clone(), 0.1).with_time(2.0),
            ApplicationProblem::new(ProblemKind::OdeFastForward, a_ode.clone(), psi.clone(), 0.1).with_time(2.0),
        ];
        let mut poly = ApplicationProblem::new(ProblemKind::MatrixPolynomial, a_ode, psi, 0.1);
        poly.poly_coeffs = Some(vec![ComplexEntry::Real(1.0), ComplexEntry::Real(0.5)]);
        problems.push(poly);
        for p in &problems {
            let s = setup(p).unwrap();
            let e = s.contour.verify_enclosure(&s.spec).unwrap();
            assert!(e.enclosed);
            assert!(e.min_distance >= s.contour_param * (1.0 - 1e-9));
        }
    }
}
