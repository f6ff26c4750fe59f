//! Single-ancilla randomized LCU: estimate ⟨ψ|f(A)†Of(A)|ψ⟩ by drawing node
//! pairs (V₁, V₂) from |c_k|/‖c‖₁ and measuring X⊗Õ on
//! Ṽ₂Ṽ₁(|+⟩⊗|0^{a+2}⟩⊗|ψ⟩).
//!
//! Only the |0^{a+2}⟩ ancilla sector contributes to X⊗Õ, so each
//! repetition needs just the projected vectors e^{iθ_k}p^◇(·)†ψ. These are
//! computed once per node in the eigenbasis of O.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::blockenc::{
    build_node_circuit, plan_nodes, resolve_gamma, BlockEncoding, GammaChoice, LcuCoefficients, NodePlan,
};
use crate::contour::Contour;
use crate::error::{Error, Result};
use crate::numkit::{
    cx, hermitian_eigen, hermitian_residual, spectral_info, spectral_norm, ComplexMatrix, StateVector, C64,
};
use crate::quadrature::{bounds_on_contour, HolomorphicFunction, DEFAULT_M_CAP};

/// Repetitions per RNG stream.
pub const STREAM_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// μ_j is the exact expectation of X⊗Õ for the drawn pair.
    ExactExpectation,
    /// μ_j is one Born-sampled eigenvalue of X⊗Õ.
    ShotSampled,
}

#[derive(Debug, Clone)]
pub struct SamplingPlan {
    pub probabilities: Vec<f64>,
    /// e^{iθ_k}, absorbed into the k-th unitary.
    pub phases: Vec<C64>,
    pub unitaries: Vec<BlockEncoding>,
    pub one_norm: f64,
    pub repetitions: u64,
    /// The same bound without the factor 8.
    pub repetitions_factor_one: u64,
    pub mode: SamplingMode,
    pub seed: u64,
    pub epsilon: f64,
    pub xi2: f64,
    pub observable_norm: f64,
}

/// ⌈k‖O‖²ln(2/ξ₂)‖c‖₁⁴/ε²⌉.
pub fn hoeffding_repetitions(factor: f64, observable_norm: f64, one_norm: f64, epsilon: f64, xi2: f64) -> f64 {
    (factor * observable_norm.powi(2) * (2.0 / xi2).ln() * one_norm.powi(4) / (epsilon * epsilon)).ceil()
}

pub fn build_plan(
    coeffs: &LcuCoefficients,
    per_node: Vec<BlockEncoding>,
    observable_norm: f64,
    epsilon: f64,
    xi2: f64,
    mode: SamplingMode,
    seed: u64,
) -> Result<SamplingPlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(xi2 > 0.0 && xi2 < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon and xi2 must lie in (0, 1), got {epsilon}, {xi2}")));
    }
    if coeffs.len() != per_node.len() || per_node.is_empty() {
        return Err(Error::DimensionMismatch { expected: coeffs.len(), found: per_node.len() });
    }
    if !(coeffs.one_norm > 0.0) {
        return Err(Error::InvalidParameter("coefficients are all zero".into()));
    }
    let probabilities = coeffs.c.iter().map(|c| c.norm() / coeffs.one_norm).collect();
    let phases = coeffs.c.iter().map(|c| if c.norm() > 0.0 { c / c.norm() } else { cx(1.0, 0.0) }).collect();
    let t8 = hoeffding_repetitions(8.0, observable_norm, coeffs.one_norm, epsilon, xi2);
    let t1 = hoeffding_repetitions(1.0, observable_norm, coeffs.one_norm, epsilon, xi2);
    if !(t8 < u64::MAX as f64) {
        return Err(Error::Overflow { required: t8, cap: u64::MAX as usize });
    }
    Ok(SamplingPlan {
        probabilities,
        phases,
        unitaries: per_node,
        one_norm: coeffs.one_norm,
        repetitions: t8.max(1.0) as u64,
        repetitions_factor_one: t1.max(1.0) as u64,
        mode,
        seed,
        epsilon,
        xi2,
        observable_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesSummary {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimatorResult {
    pub mu: f64,
    #[serde(rename = "T")]
    pub repetitions: u64,
    #[serde(rename = "theoreticalTFactorOne")]
    pub repetitions_factor_one: u64,
    pub epsilon: f64,
    pub xi2: f64,
    pub mode: SamplingMode,
    pub seed: u64,
    pub samples_summary: SamplesSummary,
}

/// Per-node projected vectors in the eigenbasis of O.
struct Prepared {
    lambda: Vec<f64>,
    w: Vec<Vec<C64>>,
}

fn prepare(plan: &SamplingPlan, psi: &StateVector, o: &ComplexMatrix) -> Result<Prepared> {
    let residual = hermitian_residual(o);
    if residual > 1e-10 {
        return Err(Error::NotHermitian { residual });
    }
    let n = o.nrows();
    if psi.len() != n || plan.unitaries[0].encoded_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi.len() });
    }
    let (lambda, vecs) = hermitian_eigen(o);
    let basis = vecs.adjoint();
    let w = plan
        .unitaries
        .iter()
        .zip(&plan.phases)
        .map(|(u, &ph)| (&basis * u.apply_projected(psi) * ph).iter().copied().collect())
        .collect();
    Ok(Prepared { lambda, w })
}

/// ⟨ψ′|X⊗Õ|ψ′⟩ = Re⟨V₂ψ̃|Õ|V₁ψ̃⟩.
fn pair_expectation(p: &Prepared, k1: usize, k2: usize) -> f64 {
    let (w1, w2) = (&p.w[k1], &p.w[k2]);
    p.lambda.iter().enumerate().map(|(j, &l)| l * (w2[j].conj() * w1[j]).re).sum()
}

/// Outcome ±λ_j with probability |(w₂ ± w₁)_j/2|², else 0.
fn pair_shot<R: Rng>(p: &Prepared, k1: usize, k2: usize, rng: &mut R) -> f64 {
    let (w1, w2) = (&p.w[k1], &p.w[k2]);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &l) in p.lambda.iter().enumerate() {
        acc += ((w2[j] + w1[j]) * 0.5).norm_sqr();
        if u < acc {
            return l;
        }
        acc += ((w2[j] - w1[j]) * 0.5).norm_sqr();
        if u < acc {
            return -l;
        }
    }
    0.0
}

/// The full |ψ′⟩ on 1 + (a+2) ancillas + system, LCU qubit most significant.
pub fn pair_state(plan: &SamplingPlan, psi: &StateVector, k1: usize, k2: usize) -> Vec<C64> {
    let d = plan.unitaries[0].dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = vec![cx(0.0, 0.0); 2 * d];
    let mut branch = |offset: usize, k: usize| {
        let mut x = vec![cx(0.0, 0.0); d];
        for (i, v) in psi.iter().enumerate() {
            x[i] = *v;
        }
        plan.unitaries[k].apply(&mut x);
        for (i, v) in x.into_iter().enumerate() {
            out[offset + i] = v * plan.phases[k] * s;
        }
    };
    branch(0, k2);
    branch(d, k1);
    out
}

pub fn run_estimator(plan: &SamplingPlan, psi: &StateVector, o: &ComplexMatrix) -> Result<EstimatorResult> {
    run_estimator_with_repetitions(plan, psi, o, plan.repetitions)
}

pub fn run_estimator_with_repetitions(
    plan: &SamplingPlan,
    psi: &StateVector,
    o: &ComplexMatrix,
    repetitions: u64,
) -> Result<EstimatorResult> {
    let prep = prepare(plan, psi, o)?;
    let dist = WeightedIndex::new(&plan.probabilities)
        .map_err(|e| Error::InvalidParameter(format!("sampling distribution: {e}")))?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut done = 0u64;
    let mut stream = 0u64;
    while done < repetitions {
        let mut rng = ChaCha20Rng::seed_from_u64(plan.seed);
        rng.set_stream(stream);
        let chunk = STREAM_CHUNK.min(repetitions - done);
        for _ in 0..chunk {
            let k1 = dist.sample(&mut rng);
            let k2 = dist.sample(&mut rng);
            let x = match plan.mode {
                SamplingMode::ExactExpectation => pair_expectation(&prep, k1, k2),
                SamplingMode::ShotSampled => pair_shot(&prep, k1, k2, &mut rng),
            };
            sum += x;
            sum_sq += x * x;
        }
        done += chunk;
        stream += 1;
    }
    let count = repetitions.max(1) as f64;
    let mean = sum / count;
    let variance = if repetitions > 1 { (sum_sq - count * mean * mean).max(0.0) / (count - 1.0) } else { 0.0 };
    Ok(EstimatorResult {
        mu: plan.one_norm * plan.one_norm * mean,
        repetitions,
        repetitions_factor_one: plan.repetitions_factor_one,
        epsilon: plan.epsilon,
        xi2: plan.xi2,
        mode: plan.mode,
        seed: plan.seed,
        samples_summary: SamplesSummary { count: repetitions, mean, variance },
    })
}

/// ‖c‖₁²·E[μ_j], by summing over every (V₁, V₂) pair with its probability.
pub fn enumerate_expectation(plan: &SamplingPlan, psi: &StateVector, o: &ComplexMatrix) -> Result<f64> {
    let prep = prepare(plan, psi, o)?;
    let k = plan.probabilities.len();
    let mut e = 0.0;
    for k1 in 0..k {
        for k2 in 0..k {
            e += plan.probabilities[k1] * plan.probabilities[k2] * pair_expectation(&prep, k1, k2);
        }
    }
    Ok(plan.one_norm * plan.one_norm * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBound {
    pub lhs: f64,
    pub rhs: f64,
}

fn quadratic_form(p: &ComplexMatrix, o: &ComplexMatrix, psi: &StateVector) -> f64 {
    let v = p * psi;
    (v.adjoint() * o * &v)[(0, 0)].re
}

/// |⟨ψ|P†OP|ψ⟩ − ⟨ψ|Q†OQ|ψ⟩| against 3‖O‖‖P‖‖P−Q‖.
pub fn observable_accuracy_bound(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    o: &ComplexMatrix,
    psi: &StateVector,
) -> Result<AccuracyBound> {
    let xi = spectral_norm(&(p - q));
    let pn = spectral_norm(p);
    if xi > 1.0 + 1e-12 || pn < 1.0 - 1e-12 {
        return Err(Error::HypothesisViolated(format!("need ‖P−Q‖ ≤ 1 and ‖P‖ ≥ 1, got {xi} and {pn}")));
    }
    let residual = hermitian_residual(o);
    if residual > 1e-10 {
        return Err(Error::NotHermitian { residual });
    }
    let lhs = (quadratic_form(p, o, psi) - quadratic_form(q, o, psi)).abs();
    let rhs = 3.0 * spectral_norm(o) * pn * xi;
    if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::BoundViolated { lhs, rhs });
    }
    Ok(AccuracyBound { lhs, rhs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition2Options {
    pub mode: SamplingMode,
    pub seed: u64,
    pub gamma: GammaChoice,
    pub m_override: Option<usize>,
    pub m_cap: usize,
}

impl Default for Definition2Options {
    fn default() -> Self {
        Definition2Options {
            mode: SamplingMode::ShotSampled,
            seed: 0,
            gamma: GammaChoice::Sampled,
            m_override: None,
            m_cap: DEFAULT_M_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Definition2Diagnostics {
    #[serde(rename = "M")]
    pub m: usize,
    pub xi1: f64,
    pub f_norm: f64,
    pub observable_norm: f64,
    pub delta: f64,
    pub eps_prime: f64,
    pub one_norm: f64,
    pub poly_degree: usize,
    pub gamma_used: f64,
    pub apriori_bound: f64,
    /// ⟨ψ|f(A)†Of(A)|ψ⟩ from the oracle.
    pub truth: f64,
    /// ‖c‖₁²E[μ_j] in closed form; the estimator's mean.
    pub expected_mu: f64,
    pub error: f64,
    pub ancilla_qubits: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Definition2Result {
    pub estimate: EstimatorResult,
    pub diagnostics: Definition2Diagnostics,
}

/// Prepared inputs for repeated sampler runs.
pub struct Definition2Setup {
    pub plan: SamplingPlan,
    pub diagnostics: Definition2Diagnostics,
}

#[allow(clippy::too_many_arguments)]
pub fn prepare_definition2(
    a: &ComplexMatrix,
    psi: &StateVector,
    o: &ComplexMatrix,
    f: &HolomorphicFunction,
    contour: &Contour,
    epsilon: f64,
    xi2: f64,
    opts: &Definition2Options,
) -> Result<Definition2Setup> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(xi2 > 0.0 && xi2 < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon and xi2 must lie in (0, 1), got {epsilon}, {xi2}")));
    }
    let residual = hermitian_residual(o);
    if residual > 1e-10 {
        return Err(Error::NotHermitian { residual });
    }
    let n = a.nrows();
    if psi.len() != n || o.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi.len() });
    }
    let spec = spectral_info(a)?;
    let enclosure = contour.verify_enclosure(&spec)?;
    if !enclosure.enclosed {
        let index = enclosure.winding_numbers.iter().position(|&w| w != 1).unwrap_or(0);
        return Err(Error::NotEnclosed { index });
    }
    let fa = f.apply_oracle(a)?;
    let f_norm = spectral_norm(&fa);
    let o_norm = spectral_norm(o);
    if !(f_norm > 0.0) || !(o_norm > 0.0) {
        return Err(Error::VanishingOutput { norm: f_norm * o_norm });
    }
    let xi1 = epsilon / (6.0 * o_norm * f_norm);
    let plan = definition2_node_plan(a, &spec, f, contour, enclosure.min_distance, xi1, opts)?;
    let mut warnings = Vec::new();
    if plan.over_budget {
        warnings.push("aprioriBound exceeds budget".into());
    }
    let built = build_node_circuit(a, plan)?;
    let ancillas = built.per_node[0].ancillas() + 1;
    let m = built.plan.nodes.m;
    let (delta, eps_prime, gamma_used, apriori_bound) =
        (built.plan.delta, built.plan.eps_prime, built.plan.gamma_used, built.plan.apriori_bound);
    let plan = build_plan(&built.plan.coeffs, built.per_node, o_norm, epsilon, xi2, opts.mode, opts.seed)?;
    let expected_mu = enumerate_expectation_fast(&plan, psi, o)?;
    let truth = quadratic_form(&fa, o, psi);
    let diagnostics = Definition2Diagnostics {
        m,
        xi1,
        f_norm,
        observable_norm: o_norm,
        delta,
        eps_prime,
        one_norm: plan.one_norm,
        poly_degree: built.poly.degree,
        gamma_used,
        apriori_bound,
        truth,
        expected_mu,
        error: f64::NAN,
        ancilla_qubits: ancillas,
        warnings,
    };
    Ok(Definition2Setup { plan, diagnostics })
}

/// Node plan with the quadrature and polynomial budgets at ξ₁/2 each.
fn definition2_node_plan(
    a: &ComplexMatrix,
    spec: &crate::numkit::SpectralInfo,
    f: &HolomorphicFunction,
    contour: &Contour,
    min_distance: f64,
    xi1: f64,
    opts: &Definition2Options,
) -> Result<NodePlan> {
    let bounds = bounds_on_contour(f, contour)?;
    let gamma_choice = resolve_gamma(a, spec, contour, min_distance, opts.gamma)?;
    let eps_prime_of = |one_norm: f64| xi1 / (2.0 * one_norm);
    plan_nodes(a, f, contour, &bounds, gamma_choice, xi1 / 2.0, opts.m_override, opts.m_cap, &eps_prime_of)
}

/// The repetition counts (factor 8, factor 1) a sampler run would
/// use, without building any encoding.
#[allow(clippy::too_many_arguments)]
pub fn build_plan_repetitions(
    a: &ComplexMatrix,
    f: &HolomorphicFunction,
    contour: &Contour,
    gamma: GammaChoice,
    epsilon: f64,
    xi2: f64,
    observable_norm: f64,
    f_norm: f64,
) -> Result<(f64, f64)> {
    let spec = spectral_info(a)?;
    let enclosure = contour.verify_enclosure(&spec)?;
    let xi1 = epsilon / (6.0 * observable_norm * f_norm);
    let opts = Definition2Options { gamma, ..Default::default() };
    let plan = definition2_node_plan(a, &spec, f, contour, enclosure.min_distance, xi1, &opts)?;
    let one_norm = plan.coeffs.one_norm;
    Ok((
        hoeffding_repetitions(8.0, observable_norm, one_norm, epsilon, xi2).max(1.0),
        hoeffding_repetitions(1.0, observable_norm, one_norm, epsilon, xi2).max(1.0),
    ))
}

/// ‖c‖₁²E[μ_j] = Re⟨gψ|O|gψ⟩ with g = Σc_k p^◇(·)†, without the O(K²) pair sum.
fn enumerate_expectation_fast(plan: &SamplingPlan, psi: &StateVector, o: &ComplexMatrix) -> Result<f64> {
    let mut g = StateVector::zeros(psi.len());
    for ((u, &ph), &p) in plan.unitaries.iter().zip(&plan.phases).zip(&plan.probabilities) {
        g += u.apply_projected(psi) * (ph * p * plan.one_norm);
    }
    Ok((g.adjoint() * o * &g)[(0, 0)].re)
}

/// Sampler estimate of ⟨ψ|f(A)†Of(A)|ψ⟩ within ε with probability
/// at least (1−ξ₂)², from the randomized single-ancilla LCU.
#[allow(clippy::too_many_arguments)]
pub fn solve_definition2(
    a: &ComplexMatrix,
    psi: &StateVector,
    o: &ComplexMatrix,
    f: &HolomorphicFunction,
    contour: &Contour,
    epsilon: f64,
    xi2: f64,
    opts: &Definition2Options,
) -> Result<Definition2Result> {
    let setup = prepare_definition2(a, psi, o, f, contour, epsilon, xi2, opts)?;
    let estimate = run_estimator(&setup.plan, psi, o)?;
    let mut diagnostics = setup.diagnostics;
    diagnostics.error = (estimate.mu - diagnostics.truth).abs();
    Ok(Definition2Result { estimate, diagnostics })
}
