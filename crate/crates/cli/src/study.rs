//! Registered sweeps. Output is CSV with a fixed column order, rows sorted by
//! the sweep key and floats written with 17 significant digits.

use contour_lcu::apps::{self, application_row, ApplicationProblem, ProblemKind};
use contour_lcu::contour::make_rectangle;
use contour_lcu::numkit::{
    cx, random_diagonalizable, random_state, rng_from_seed, ComplexMatrix, SpectrumRegion, StateVector,
};
use contour_lcu::quadrature::{quadrature, HolomorphicFunction};
use contour_lcu::sampler::{prepare_definition2, run_estimator, SamplingMode};
use contour_lcu::{Error, Result};

pub const STUDIES: [&str; 3] = ["quadrature-rate", "hoeffding-coverage", "ff-ode-time-invariance"];

pub const QUADRATURE_M: [usize; 5] = [16, 64, 256, 1024, 4096];
pub const FF_TIMES: [f64; 3] = [1.0, 10.0, 100.0];

pub struct StudyConfig {
    pub problem: Option<ApplicationProblem>,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub m: Option<usize>,
    pub trials: usize,
    pub mode: SamplingMode,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn run(name: &str, cfg: &StudyConfig) -> Result<String> {
    match name {
        "quadrature-rate" => quadrature_rate(cfg),
        "hoeffding-coverage" => hoeffding_coverage(cfg),
        "ff-ode-time-invariance" => ff_time_invariance(cfg),
        _ => Err(Error::UnknownStudy(format!("{name} (known: {})", STUDIES.join(", ")))),
    }
}

fn quadrature_rate(cfg: &StudyConfig) -> Result<String> {
    let (a, f, contour) = match &cfg.problem {
        Some(p) => {
            let s = apps::setup(p)?;
            (s.a, s.f, s.contour)
        }
        None => {
            let (a, _) = random_diagonalizable(4, 2.0, &SpectrumRegion::Disk { center: cx(0.0, 0.0), radius: 0.8 }, 7)?;
            (a, HolomorphicFunction::exp(1.0), make_rectangle(cx(0.0, 0.0), 1.2, 2.0)?)
        }
    };
    let ms: Vec<usize> = match cfg.m {
        Some(m) => vec![m],
        None => QUADRATURE_M.to_vec(),
    };
    let mut out = String::from("M,measuredError,aprioriBound\n");
    for m in ms {
        let q = quadrature(&a, &contour, &f, m)?;
        let err = q.meta.measured_error.unwrap_or(f64::NAN);
        out.push_str(&format!("{},{},{}\n", m, fmt_f64(err), fmt_f64(q.meta.bound)));
    }
    Ok(out)
}

/// exp(−iHt) on a fixed 2×2 Hamiltonian, estimated at ε = 0.2, ξ₂ = 0.1.
pub fn coverage_problem() -> ApplicationProblem {
    let h = ComplexMatrix::from_row_slice(2, 2, &[cx(0.3, 0.0), cx(0.2, -0.1), cx(0.2, 0.1), cx(-0.4, 0.0)]);
    let psi = StateVector::from_vec(vec![cx(0.6, 0.0), cx(0.0, 0.8)]);
    let mut p = ApplicationProblem::new(ProblemKind::HamiltonianSimulation, h, psi, 0.2).with_time(0.5);
    p.xi2 = Some(0.1);
    p
}

fn hoeffding_coverage(cfg: &StudyConfig) -> Result<String> {
    let mut problem = cfg.problem.clone().unwrap_or_else(coverage_problem);
    if let Some(e) = cfg.epsilon {
        problem.epsilon = e;
    }
    let s = apps::setup(&problem)?;
    let o = problem.observable_or_default();
    let xi2 = problem.xi2_or_default();
    let mut opts = apps::definition2_options(&s, cfg.mode, cfg.seed);
    opts.m_override = cfg.m;
    let prepared = prepare_definition2(&s.a, &s.psi, &o, &s.f, &s.contour, problem.epsilon, xi2, &opts)?;
    let truth = prepared.diagnostics.truth;
    let mut plan = prepared.plan;
    let mut out = String::from("trial,seed,T,mu,truth,absError,covered,empiricalCoverage\n");
    let mut hits = 0usize;
    for trial in 0..cfg.trials {
        let seed = cfg.seed.wrapping_add(trial as u64);
        plan.seed = seed;
        let r = run_estimator(&plan, &s.psi, &o)?;
        let err = (r.mu - truth).abs();
        let covered = err <= problem.epsilon;
        hits += covered as usize;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            trial,
            seed,
            r.repetitions,
            fmt_f64(r.mu),
            fmt_f64(truth),
            fmt_f64(err),
            covered as u8,
            fmt_f64(hits as f64 / (trial + 1) as f64),
        ));
    }
    Ok(out)
}

/// A strictly stable 4×4 system, κ_S = 2, spectrum in Re λ ∈ [−1, −0.2].
pub fn ff_problem(t: f64) -> Result<ApplicationProblem> {
    let (a, _) = random_diagonalizable(4, 2.0, &SpectrumRegion::LeftStrip { r: 1.0, a: 0.2 }, 11)?;
    let psi = random_state(4, &mut rng_from_seed(12));
    Ok(ApplicationProblem::new(ProblemKind::OdeFastForward, a, psi, 0.1).with_time(t))
}

fn ff_time_invariance(cfg: &StudyConfig) -> Result<String> {
    let base = match &cfg.problem {
        Some(p) => {
            let mut p = p.clone();
            p.kind = ProblemKind::OdeFastForward;
            p
        }
        None => ff_problem(1.0)?,
    };
    let mut out =
        String::from("T,queriesUA,queriesUpsi,ancillaQubits,genericQueriesUA,outputNormUsed,outputNormActual\n");
    let mut fixed_norm = None;
    for &t in &FF_TIMES {
        let mut p = base.clone().with_time(t);
        if let Some(e) = cfg.epsilon {
            p.epsilon = e;
        }
        let s = apps::setup(&p)?;
        let actual = s.inputs.output_norm;
        // ‖x(T)‖ is held at its T = 1 value so only T varies
        let n = *fixed_norm.get_or_insert(actual);
        let mut inputs = s.inputs;
        inputs.output_norm = n;
        let (_, ua, upsi, anc, _) = application_row(ProblemKind::OdeFastForward, &inputs);
        let mut g = p.clone();
        g.kind = ProblemKind::OdeGeneric;
        let gs = apps::setup(&g)?;
        let mut ginputs = gs.inputs;
        ginputs.output_norm = n;
        let (_, gua, _, _, _) = application_row(ProblemKind::OdeGeneric, &ginputs);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(t),
            fmt_f64(ua),
            fmt_f64(upsi),
            anc,
            fmt_f64(gua),
            fmt_f64(n),
            fmt_f64(actual),
        ));
    }
    Ok(out)
}
