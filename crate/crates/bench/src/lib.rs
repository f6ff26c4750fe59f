//! Shared fixtures for the criterion benchmarks.

use contour_lcu::apps::{ApplicationProblem, ProblemKind};
use contour_lcu::numkit::{
    cx, from_diagonal, random_diagonalizable, random_state, random_unitary, rng_from_seed, ComplexMatrix,
    SpectrumRegion, C64,
};

/// Hermitian H with spectrum spread over [−0.9, 0.9], T = 2.
pub fn hamiltonian_problem(n: usize, epsilon: f64) -> ApplicationProblem {
    let mut rng = rng_from_seed(n as u64);
    let u = random_unitary(n, &mut rng);
    let d: Vec<C64> = (0..n).map(|i| cx(-0.9 + 1.8 * i as f64 / (n.max(2) - 1) as f64, 0.0)).collect();
    let h = &u * from_diagonal(&d) * u.adjoint();
    let psi = random_state(n, &mut rng);
    ApplicationProblem::new(ProblemKind::HamiltonianSimulation, h, psi, epsilon).with_time(2.0)
}

/// A diagonalizable matrix with spectrum in the disk of radius 0.8.
pub fn disk_matrix(n: usize, kappa: f64) -> ComplexMatrix {
    random_diagonalizable(n, kappa, &SpectrumRegion::Disk { center: cx(0.0, 0.0), radius: 0.8 }, 7).expect("fixture").0
}
