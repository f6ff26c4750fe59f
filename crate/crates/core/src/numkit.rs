//! Dense complex linear algebra and the spectral utilities everything else
//! builds on: SVD-based norms, Schur-based eigendecomposition, a brute-force
//! matrix-function oracle, an independent matrix exponential, resolvent
//! bounds, dissipativity checks and seeded random test matrices.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Eigenvector condition numbers at or above this are treated as defective.
pub const DEFAULT_KAPPA_CAP: f64 = 1e8;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn from_diagonal(d: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_column_slice(d))
}

/// Deterministic generator used for every seeded routine in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Singular value decomposition with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v_adjoint: ComplexMatrix,
}

/// Thin SVD by one-sided Jacobi rotations.
///
/// nalgebra's complex bidiagonal SVD occasionally returns wrong factors when
/// singular values are repeated, so we do not use it.
pub fn svd(m: &ComplexMatrix) -> Svd {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint());
        return Svd { u: t.v_adjoint.adjoint(), sigma: t.sigma, v_adjoint: t.u.adjoint() };
    }
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = identity(n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = a.column(p).norm_squared();
                let beta: f64 = a.column(q).norm_squared();
                let gamma: C64 = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // columns (p, e^{-iφ}q) get a real rotation
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = xp * c - xq * s;
                        mat[(i, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let scale = sigma.first().copied().unwrap_or(0.0);
    let mut u = ComplexMatrix::zeros(rows, n);
    let mut filled = vec![false; n];
    for (k, &j) in order.iter().enumerate() {
        if sigma[k] > 0.0 && sigma[k] > f64::MIN_POSITIVE * scale.max(1.0) {
            u.set_column(k, &(a.column(j) / cx(sigma[k], 0.0)));
            filled[k] = true;
        }
    }
    // complete U with Gram-Schmidt on unit vectors
    let mut e = 0;
    for k in 0..n {
        if filled[k] {
            continue;
        }
        while e < rows {
            let mut w = StateVector::zeros(rows);
            w[e] = cx(1.0, 0.0);
            e += 1;
            for _ in 0..2 {
                for j in 0..n {
                    if filled[j] {
                        let proj = u.column(j).dotc(&w);
                        w -= u.column(j) * proj;
                    }
                }
            }
            let nw = w.norm();
            if nw > 1e-8 {
                u.set_column(k, &(w / cx(nw, 0.0)));
                filled[k] = true;
                break;
            }
        }
    }
    let v_sorted = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Svd { u, sigma, v_adjoint: v_sorted.adjoint() }
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    svd(m).sigma
}

/// Operator 2-norm.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m)[0]
}

pub fn sigma_min(m: &ComplexMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn vector_norm(v: &StateVector) -> f64 {
    v.norm()
}

pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    spectral_norm(&(m - m.adjoint()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Square root of a positive semidefinite Hermitian matrix; tiny negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let d: Vec<C64> = vals.iter().map(|&x| cx(x.max(0.0).sqrt(), 0.0)).collect();
    &vecs * from_diagonal(&d) * vecs.adjoint()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let smin = sigma_min(m);
    if smin <= 1e-14 * spectral_norm(m).max(f64::MIN_POSITIVE) {
        return Err(Error::SingularResolvent { sigma_min: smin });
    }
    m.clone().lu().try_inverse().ok_or(Error::SingularResolvent { sigma_min: smin })
}

pub fn max_entry_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendata of a square matrix.
#[derive(Debug, Clone)]
pub struct SpectralInfo {
    pub eigenvalues: Vec<C64>,
    /// Eigenvector matrix S (unit columns when computed by `spectral_info`).
    pub eigenvectors: Option<ComplexMatrix>,
    pub eigenvectors_inv: Option<ComplexMatrix>,
    /// ‖S‖‖S⁻¹‖, infinite when S is numerically singular.
    pub kappa_s: f64,
    pub spectral_radius: f64,
    pub diagonalizable: bool,
    /// ‖S D S⁻¹ − A‖ when S is available.
    pub reconstruction_error: f64,
}

impl SpectralInfo {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// S f(D) S⁻¹ using the stored eigendata.
    pub fn apply_function<F: Fn(C64) -> C64>(&self, f: F) -> Result<ComplexMatrix> {
        if !self.diagonalizable {
            return Err(Error::NonDiagonalizable { kappa: self.kappa_s });
        }
        let s = self.eigenvectors.as_ref().expect("diagonalizable implies S");
        let s_inv = self.eigenvectors_inv.as_ref().expect("diagonalizable implies S^-1");
        let mut fd = Vec::with_capacity(self.dim());
        for (index, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = f(lambda);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::FunctionSingularAtEigenvalue { index });
            }
            fd.push(v);
        }
        let mut scaled = s.clone();
        for (j, v) in fd.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= v;
            }
        }
        Ok(scaled * s_inv)
    }
}

pub fn spectral_info(a: &ComplexMatrix) -> Result<SpectralInfo> {
    spectral_info_with_cap(a, DEFAULT_KAPPA_CAP)
}

/// Eigenvalues from the complex Schur form, eigenvectors by back-substitution
/// on the triangular factor.
pub fn spectral_info_with_cap(a: &ComplexMatrix, kappa_cap: f64) -> Result<SpectralInfo> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let is_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == C64::new(0.0, 0.0)));
    if is_diagonal {
        // exact eigendata; also sidesteps Schur on the zero matrix
        let eigenvalues: Vec<C64> = (0..n).map(|i| a[(i, i)]).collect();
        return Ok(SpectralInfo {
            spectral_radius: eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max),
            eigenvalues,
            eigenvectors: Some(identity(n)),
            eigenvectors_inv: Some(identity(n)),
            kappa_s: 1.0,
            diagonalizable: true,
            reconstruction_error: 0.0,
        });
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000).ok_or(Error::DecompositionFailed)?;
    let (q, t) = schur.unpack();
    let eigenvalues: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let tnorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let smin = f64::EPSILON * tnorm;

    let mut x = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        x[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for m in (j + 1)..=k {
                acc += t[(j, m)] * x[(m, k)];
            }
            let mut denom = t[(j, j)] - t[(k, k)];
            if denom.norm() < smin {
                denom = C64::new(smin, 0.0);
            }
            x[(j, k)] = -acc / denom;
        }
    }
    let mut s = q * x;
    for j in 0..n {
        let nrm = s.column(j).norm();
        if nrm > 0.0 {
            s.column_mut(j).unscale_mut(nrm);
        }
    }
    let sv = singular_values(&s);
    let kappa_s = if sv[n - 1] > 0.0 { sv[0] / sv[n - 1] } else { f64::INFINITY };
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diagonalizable = kappa_s.is_finite() && kappa_s < kappa_cap;
    let (eigenvectors, eigenvectors_inv, reconstruction_error) = if diagonalizable {
        match s.clone().lu().try_inverse() {
            Some(s_inv) => {
                let recon = &s * from_diagonal(&eigenvalues) * &s_inv;
                let err = spectral_norm(&(recon - a));
                (Some(s), Some(s_inv), err)
            }
            None => (None, None, f64::INFINITY),
        }
    } else {
        (None, None, f64::INFINITY)
    };
    Ok(SpectralInfo {
        eigenvalues,
        diagonalizable: diagonalizable && eigenvectors.is_some(),
        eigenvectors,
        eigenvectors_inv,
        kappa_s,
        spectral_radius,
        reconstruction_error,
    })
}

/// Brute-force reference f(A) = S f(D) S⁻¹.
pub fn matrix_function_oracle<F: Fn(C64) -> C64>(a: &ComplexMatrix, f: F) -> Result<ComplexMatrix> {
    spectral_info(a)?.apply_function(f)
}

/// ‖(zI − A)⁻¹‖ = 1/σ_min(zI − A).
pub fn resolvent_norm(a: &ComplexMatrix, z: C64) -> Result<f64> {
    let n = a.nrows();
    let shifted = identity(n) * z - a;
    let sv = singular_values(&shifted);
    let smin = sv[n - 1];
    let scale = sv[0].max(f64::MIN_POSITIVE);
    if smin <= 8.0 * f64::EPSILON * scale {
        return Err(Error::SingularResolvent { sigma_min: smin });
    }
    Ok(1.0 / smin)
}

/// κ_S / a: valid for every z at distance at least a from the spectrum.
pub fn resolvent_bound_diagonalizable(spec: &SpectralInfo, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("distance a must be positive, got {a}")));
    }
    if !spec.diagonalizable {
        return Err(Error::NonDiagonalizable { kappa: spec.kappa_s });
    }
    Ok(spec.kappa_s / a)
}

/// The nilpotent shift L_N with ones on the superdiagonal.
pub fn shift_matrix(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| if j == i + 1 { cx(1.0, 0.0) } else { cx(0.0, 0.0) })
}

/// Resolvent bound (1 − (a/|z|)^N)/(|z| − a) for A = a·L_N, valid for |z| > a.
pub fn nilpotent_resolvent_bound(a: f64, n: usize, z_abs: f64) -> Result<f64> {
    if !(z_abs > a) || a < 0.0 {
        return Err(Error::InvalidParameter(format!("need |z| > a >= 0, got |z| = {z_abs}, a = {a}")));
    }
    Ok((1.0 - (a / z_abs).powi(n as i32)) / (z_abs - a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Dissipativity {
    pub re_lambda_non_positive: bool,
    pub re_lambda_strictly_negative: bool,
    pub negative_semidefinite_sym_part: bool,
    pub max_re_lambda: f64,
    pub max_sym_part_eigenvalue: f64,
}

/// Eigenvalue-side and symmetric-part-side stability flags.
///
/// The semidefinite test uses tolerance 1e-10·‖A‖, the eigenvalue tests
/// 1e-8·‖A‖.
pub fn check_dissipativity(a: &ComplexMatrix) -> Result<Dissipativity> {
    let norm = spectral_norm(a);
    let spec = spectral_info(a)?;
    let max_re = spec.max_real_part();
    let (sym_vals, _) = hermitian_eigen(&(a + a.adjoint()));
    let max_sym = sym_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol_eig = 1e-8 * norm;
    Ok(Dissipativity {
        re_lambda_non_positive: max_re <= tol_eig,
        re_lambda_strictly_negative: max_re < -tol_eig,
        negative_semidefinite_sym_part: max_sym <= 1e-10 * norm,
        max_re_lambda: max_re,
        max_sym_part_eigenvalue: max_sym,
    })
}

fn one_norm(m: &ComplexMatrix) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé core.
/// Independent of the eigendecomposition path.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let nrm = one_norm(a);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let x = a.unscale(2f64.powi(s));
    let id = identity(n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x2 * &x4;
    let re = |v: f64| C64::new(v, 0.0);
    let u_inner = &x6 * (&x6 * re(B[13]) + &x4 * re(B[11]) + &x2 * re(B[9]))
        + &x6 * re(B[7])
        + &x4 * re(B[5])
        + &x2 * re(B[3])
        + &id * re(B[1]);
    let u = &x * u_inner;
    let v = &x6 * (&x6 * re(B[12]) + &x4 * re(B[10]) + &x2 * re(B[8]))
        + &x6 * re(B[6])
        + &x4 * re(B[4])
        + &x2 * re(B[2])
        + &id * re(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is nonsingular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Where `random_diagonalizable` draws eigenvalues from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "kebab-case")]
pub enum SpectrumRegion {
    /// i·[lo, hi] on the imaginary axis.
    ImaginaryInterval { lo: f64, hi: f64 },
    /// Closed disk, uniform in area.
    Disk { center: C64, radius: f64 },
    /// {Re λ ∈ [−r, −a], |λ| ≤ r}.
    LeftStrip { r: f64, a: f64 },
    /// Explicit eigenvalues, cycled if fewer than N.
    Points { points: Vec<C64> },
}

impl SpectrumRegion {
    fn sample<R: Rng>(&self, rng: &mut R, i: usize) -> Result<C64> {
        match self {
            SpectrumRegion::ImaginaryInterval { lo, hi } => {
                let u: f64 = rng.random();
                Ok(cx(0.0, lo + (hi - lo) * u))
            }
            SpectrumRegion::Disk { center, radius } => {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let rho = radius * u.sqrt();
                Ok(center + C64::from_polar(rho, 2.0 * std::f64::consts::PI * v))
            }
            SpectrumRegion::LeftStrip { r, a } => {
                if !(*a >= 0.0 && a <= r) {
                    return Err(Error::InvalidParameter(format!("left strip needs 0 <= a <= r, got a = {a}, r = {r}")));
                }
                let u: f64 = rng.random();
                let re = -a - (r - a) * u;
                let h = (r * r - re * re).max(0.0).sqrt();
                let v: f64 = rng.random();
                Ok(cx(re, h * (2.0 * v - 1.0)))
            }
            SpectrumRegion::Points { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidParameter("empty eigenvalue list".into()));
                }
                Ok(points[i % points.len()])
            }
        }
    }
}

pub fn random_gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        cx(re * scale, im * scale)
    })
}

/// Haar-distributed unitary via QR of a Gaussian matrix with phase fixing.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { cx(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> StateVector {
    let g = random_gaussian_matrix(n, 1, rng);
    let v = StateVector::from_iterator(n, g.iter().copied());
    let nrm = v.norm();
    v.unscale(nrm)
}

/// A = S D S⁻¹ with S = U Σ V†, singular values of S log-spaced in [1, κ].
/// The returned eigendata uses the constructed S, so its κ_S equals the
/// target up to rounding.
pub fn random_diagonalizable(
    n: usize,
    target_kappa: f64,
    region: &SpectrumRegion,
    seed: u64,
) -> Result<(ComplexMatrix, SpectralInfo)> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(target_kappa >= 1.0) {
        return Err(Error::UnreachableKappa { target: target_kappa });
    }
    let mut rng = rng_from_seed(seed);
    let eigenvalues = (0..n).map(|i| region.sample(&mut rng, i)).collect::<Result<Vec<_>>>()?;
    let u = random_unitary(n, &mut rng);
    let v = random_unitary(n, &mut rng);
    let sig: Vec<f64> =
        (0..n).map(|i| if n == 1 { 1.0 } else { target_kappa.powf(i as f64 / (n - 1) as f64) }).collect();
    let sig_c: Vec<C64> = sig.iter().map(|&x| cx(x, 0.0)).collect();
    let sig_inv: Vec<C64> = sig.iter().map(|&x| cx(1.0 / x, 0.0)).collect();
    let s = &u * from_diagonal(&sig_c) * v.adjoint();
    let s_inv = &v * from_diagonal(&sig_inv) * u.adjoint();
    let a = &s * from_diagonal(&eigenvalues) * &s_inv;
    let sv = singular_values(&s);
    let kappa_s = sv[0] / sv[n - 1];
    let reconstruction_error = 0.0;
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((
        a,
        SpectralInfo {
            eigenvalues,
            eigenvectors: Some(s),
            eigenvectors_inv: Some(s_inv),
            kappa_s,
            spectral_radius,
            diagonalizable: kappa_s < DEFAULT_KAPPA_CAP,
            reconstruction_error,
        },
    ))
}
