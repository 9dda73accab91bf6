//! Unitary parametrization of self-adjoint boundary conditions
//! `(U(λ) − 1)y^∨ + i(U(λ) + 1)y^∧ = 0` and the boundary matrix `A(λ)`
//! entering the quadratic form through `⟨A y^∧, y^∧⟩`.
//!
//! `A` is assembled from the spectral decomposition of `U`: every eigenvalue
//! `u ≠ 1` contributes `c(u)·P_u` with the residue weight
//! `c(u) = RESIDUE_WEIGHT·(u + 1)/(u − 1)`, which is real on the unit circle.
//! Eigenvalues within `one_tol` of `1` contribute nothing and span the kernel
//! that constrains the form domain.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, HermitianMatrix, LinalgError, Lu, Matrix};

/// Prefactor of the residue of `(z+1)/(z−1)·(U − z)⁻¹/(2π)` at an eigenvalue.
///
/// Fixed by matching the contour quadrature on `U = iI`, where the integral
/// evaluates to `−I`; see `residue_weight_matches_quadrature`.
pub const RESIDUE_WEIGHT: Complex64 = Complex64 { re: 0.0, im: -1.0 };

pub const DEFAULT_ONE_TOL: f64 = 1e-8;
/// Allowed `‖U*U − I‖_F` at every evaluation.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("boundary matrix size {0} is not even")]
    OddSize(usize),
    #[error("U is not unitary: ‖U*U − I‖ = {defect:.3e}")]
    NotUnitary { defect: f64 },
    #[error("generator is not Hermitian: {0}")]
    GeneratorNotHermitian(LinalgError),
    #[error("rank of U(λ) − 1 changes between λ = {from} and λ = {to} ({rank_from} → {rank_to})")]
    RankChange { from: f64, to: f64, rank_from: usize, rank_to: usize },
    #[error("vector of length {found} does not match boundary size {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone)]
pub enum BoundaryForm {
    Constant(Matrix),
    /// `U(λ) = exp(i(Θ₀ + λΘ₁))`
    Generated { theta0: HermitianMatrix, theta1: HermitianMatrix },
}

/// `U(λ)`, immutable after construction.
#[derive(Debug, Clone)]
pub struct UnitaryBoundary {
    size: usize,
    form: BoundaryForm,
}

impl UnitaryBoundary {
    pub fn constant(u: Matrix) -> Result<Self, BoundaryError> {
        let size = check_size(&u)?;
        let defect = u.unitarity_defect();
        if defect > UNITARITY_TOL {
            return Err(BoundaryError::NotUnitary { defect });
        }
        Ok(Self { size, form: BoundaryForm::Constant(u) })
    }

    pub fn generated(theta0: Matrix, theta1: Matrix) -> Result<Self, BoundaryError> {
        let size = check_size(&theta0)?;
        if theta1.rows() != size || theta1.cols() != size {
            return Err(BoundaryError::DimensionMismatch { expected: size, found: theta1.rows() });
        }
        let theta0 = HermitianMatrix::new(theta0).map_err(BoundaryError::GeneratorNotHermitian)?;
        let theta1 = HermitianMatrix::new(theta1).map_err(BoundaryError::GeneratorNotHermitian)?;
        Ok(Self { size, form: BoundaryForm::Generated { theta0, theta1 } })
    }

    /// `U = I`: forces `y^∧ = 0` (Dirichlet-type for `n = 1`).
    pub fn identity(n: usize) -> Self {
        Self { size: 2 * n, form: BoundaryForm::Constant(Matrix::identity(2 * n)) }
    }

    /// `U = −I`: forces `y^∨ = 0` (natural, Neumann-type for `n = 1`).
    pub fn minus_identity(n: usize) -> Self {
        Self { size: 2 * n, form: BoundaryForm::Constant(Matrix::identity(2 * n).scale(Complex64::new(-1.0, 0.0))) }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn form(&self) -> &BoundaryForm {
        &self.form
    }

    pub fn is_constant(&self) -> bool {
        match &self.form {
            BoundaryForm::Constant(_) => true,
            BoundaryForm::Generated { theta1, .. } => theta1.frobenius_norm() == 0.0,
        }
    }

    /// `U(λ)`; the generated form goes through the eigendecomposition of
    /// `Θ₀ + λΘ₁` and exponentiates the eigenvalues.
    pub fn evaluate_u(&self, lambda: f64) -> Result<Matrix, BoundaryError> {
        match &self.form {
            BoundaryForm::Constant(u) => Ok(u.clone()),
            BoundaryForm::Generated { theta0, theta1 } => {
                let mut theta = theta0.clone();
                theta.add_scaled_assign(theta1, lambda)?;
                let dec = linalg::hermitian_eigen(&theta)?;
                let v = &dec.eigenvectors;
                let n = self.size;
                let phases: Vec<Complex64> = dec.eigenvalues.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
                let u = Matrix::from_fn(n, n, |i, j| {
                    (0..n).map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj()).sum()
                });
                let defect = u.unitarity_defect();
                if defect > UNITARITY_TOL {
                    return Err(BoundaryError::NotUnitary { defect });
                }
                Ok(u)
            }
        }
    }
}

fn check_size(m: &Matrix) -> Result<usize, BoundaryError> {
    if !m.is_square() {
        return Err(BoundaryError::DimensionMismatch { expected: m.rows(), found: m.cols() });
    }
    if m.rows() == 0 || !m.rows().is_multiple_of(2) {
        return Err(BoundaryError::OddSize(m.rows()));
    }
    Ok(m.rows())
}

/// Eigenvalues on the unit circle with an orthonormal eigenbasis.
#[derive(Debug, Clone)]
pub struct UnitarySpectrum {
    pub values: Vec<Complex64>,
    pub vectors: Matrix,
}

/// Diagonalizes a unitary matrix through the Hermitian Cayley transform
/// `C = i(ω + U)(ω − U)⁻¹`, with `ω` on the unit circle chosen far from the
/// spectrum. Eigenvalues are recovered as Rayleigh quotients `v*Uv`.
pub fn unitary_spectrum(u: &Matrix) -> Result<UnitarySpectrum, BoundaryError> {
    check_size(u)?;
    let defect = u.unitarity_defect();
    if defect > UNITARITY_TOL {
        return Err(BoundaryError::NotUnitary { defect });
    }
    let n = u.rows();
    let mut best: Option<(f64, Complex64)> = None;
    for k in 0..16 {
        let omega = Complex64::from_polar(1.0, PI * (2 * k + 1) as f64 / 16.0);
        let shifted = Matrix::identity(n).scale(omega).sub(u)?;
        let gram = HermitianMatrix::hermitize(shifted.adjoint().matmul(&shifted)?);
        let dist2 = linalg::hermitian_eigenvalues(&gram)?[0];
        if best.is_none_or(|(d, _)| dist2 > d) {
            best = Some((dist2, omega));
        }
    }
    let omega = best.expect("16 candidates").1;
    let id = Matrix::identity(n);
    let minus = id.scale(omega).sub(u)?;
    let plus = id.scale(omega).add(u)?;
    let cayley = plus.matmul(&Lu::new(&minus)?.inverse())?.scale(Complex64::new(0.0, 1.0));
    let dec = linalg::hermitian_eigen(&HermitianMatrix::hermitize(cayley))?;
    let values = (0..n)
        .map(|k| {
            let v = dec.vector(k);
            let uv = u.matvec(&v).expect("square");
            linalg::dot(&v, &uv)
        })
        .collect();
    Ok(UnitarySpectrum { values, vectors: dec.eigenvectors })
}

/// `c(u)`: weight of the eigenprojector of `u ≠ 1` in `A`.
pub fn residue_weight(u: Complex64) -> f64 {
    (RESIDUE_WEIGHT * (u + 1.0) / (u - 1.0)).re
}

#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    pub a: HermitianMatrix,
    pub one_tol: f64,
    /// Some eigenvalue of `U` sits within a factor 2 of the `one_tol` band edge.
    pub ambiguous: bool,
}

#[derive(Debug, Clone)]
pub struct ConstraintData {
    /// Orthonormal columns spanning `ker(U − 1)`.
    pub kernel_basis: Matrix,
    /// Orthonormal columns spanning the orthogonal complement of the kernel.
    pub complement_basis: Matrix,
    /// `rank(U − 1)`.
    pub codimension: usize,
    pub ambiguous: bool,
}

impl ConstraintData {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.cols()
    }

    /// Orthogonal projector onto `ker(U − 1)`.
    pub fn kernel_projector(&self) -> Matrix {
        self.kernel_basis.matmul(&self.kernel_basis.adjoint()).expect("shapes agree")
    }
}

fn classify(spectrum: &UnitarySpectrum, one_tol: f64) -> (Vec<usize>, Vec<usize>, bool) {
    let mut kernel = Vec::new();
    let mut rest = Vec::new();
    let mut ambiguous = false;
    for (k, u) in spectrum.values.iter().enumerate() {
        let d = (u - 1.0).norm();
        if d >= 0.5 * one_tol && d <= 2.0 * one_tol {
            ambiguous = true;
        }
        if d <= one_tol {
            kernel.push(k);
        } else {
            rest.push(k);
        }
    }
    (kernel, rest, ambiguous)
}

fn select_columns(m: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(m.rows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Boundary matrix and form-domain constraint from one decomposition of `U`.
pub fn boundary_data(u: &Matrix, one_tol: f64) -> Result<(BoundaryMatrix, ConstraintData), BoundaryError> {
    let spectrum = unitary_spectrum(u)?;
    let n = u.rows();
    let (kernel, rest, ambiguous) = classify(&spectrum, one_tol);
    let v = &spectrum.vectors;
    let mut a = Matrix::zeros(n, n);
    for &k in &rest {
        let w = residue_weight(spectrum.values[k]);
        for i in 0..n {
            let vi = v[(i, k)] * w;
            for j in 0..n {
                a[(i, j)] += vi * v[(j, k)].conj();
            }
        }
    }
    let bm = BoundaryMatrix { a: HermitianMatrix::hermitize(a), one_tol, ambiguous };
    let cd = ConstraintData {
        kernel_basis: select_columns(v, &kernel),
        complement_basis: select_columns(v, &rest),
        codimension: rest.len(),
        ambiguous,
    };
    Ok((bm, cd))
}

pub fn boundary_matrix(u: &Matrix, one_tol: f64) -> Result<BoundaryMatrix, BoundaryError> {
    Ok(boundary_data(u, one_tol)?.0)
}

pub fn constraint_data(u: &Matrix, one_tol: f64) -> Result<ConstraintData, BoundaryError> {
    Ok(boundary_data(u, one_tol)?.1)
}

/// The parametric solution `Y = (U − 1)X`, `Z = −i(U + 1)X` of
/// `(U − 1)Z + i(U + 1)Y = 0`.
pub fn boundary_pair(u: &Matrix, x: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>), BoundaryError> {
    if x.len() != u.rows() {
        return Err(BoundaryError::DimensionMismatch { expected: u.rows(), found: x.len() });
    }
    let ux = u.matvec(x)?;
    let y = ux.iter().zip(x).map(|(a, b)| a - b).collect();
    let z = ux.iter().zip(x).map(|(a, b)| (a + b) * Complex64::new(0.0, -1.0)).collect();
    Ok((y, z))
}

/// `‖(U − 1)Z + i(U + 1)Y‖`.
pub fn pair_residual(u: &Matrix, y: &[Complex64], z: &[Complex64]) -> Result<f64, BoundaryError> {
    let uz = u.matvec(z)?;
    let uy = u.matvec(y)?;
    let i = Complex64::new(0.0, 1.0);
    let r: Vec<Complex64> = (0..y.len()).map(|k| (uz[k] - z[k]) + i * (uy[k] + y[k])).collect();
    Ok(linalg::norm(&r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankCheck {
    pub constant: bool,
    pub ranks: Vec<usize>,
}

pub fn rank_constancy_check(bc: &UnitaryBoundary, grid: &[f64], one_tol: f64) -> Result<RankCheck, BoundaryError> {
    let ranks = grid
        .iter()
        .map(|&l| Ok(constraint_data(&bc.evaluate_u(l)?, one_tol)?.codimension))
        .collect::<Result<Vec<_>, BoundaryError>>()?;
    let constant = ranks.windows(2).all(|w| w[0] == w[1]);
    Ok(RankCheck { constant, ranks })
}

/// Whether `ker(U(λ) − 1)` is the same subspace at every grid point, judged
/// by the kernel projectors agreeing to `1e-8`.
pub fn kernel_constancy_check(bc: &UnitaryBoundary, grid: &[f64], one_tol: f64) -> Result<bool, BoundaryError> {
    let mut reference: Option<Matrix> = None;
    for &l in grid {
        let p = constraint_data(&bc.evaluate_u(l)?, one_tol)?.kernel_projector();
        match &reference {
            None => reference = Some(p),
            Some(r) => {
                if r.sub(&p)?.max_abs() > 1e-8 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

pub fn default_derivative_step(lambda: f64) -> f64 {
    1e-5 * (1.0 + lambda.abs())
}

/// `A′(λ) ≈ (A(λ+h) − A(λ−h))/(2h)`. Refuses when `rank(U − 1)` differs
/// among `λ−h`, `λ`, `λ+h`.
pub fn boundary_matrix_derivative(
    bc: &UnitaryBoundary,
    lambda: f64,
    h: f64,
    one_tol: f64,
) -> Result<HermitianMatrix, BoundaryError> {
    if bc.is_constant() {
        return Ok(HermitianMatrix::zeros(bc.size()));
    }
    let (a_minus, c_minus) = boundary_data(&bc.evaluate_u(lambda - h)?, one_tol)?;
    let (_, c_mid) = boundary_data(&bc.evaluate_u(lambda)?, one_tol)?;
    let (a_plus, c_plus) = boundary_data(&bc.evaluate_u(lambda + h)?, one_tol)?;
    for (from, to, r0, r1) in [
        (lambda - h, lambda, c_minus.codimension, c_mid.codimension),
        (lambda, lambda + h, c_mid.codimension, c_plus.codimension),
    ] {
        if r0 != r1 {
            return Err(BoundaryError::RankChange { from, to, rank_from: r0, rank_to: r1 });
        }
    }
    Ok(a_plus.a.sub(&a_minus.a)?.scale(0.5 / h))
}

/// Looks for a sample pair `λ₁ < λ₂` where `A(λ₁) − A(λ₂)` has an
/// eigenvalue below `−1e-10·max(1, ‖A‖)`. Returns the pair and that eigenvalue.
pub fn find_boundary_monotonicity_violation(
    bc: &UnitaryBoundary,
    samples: &[f64],
    one_tol: f64,
) -> Result<Option<(f64, f64, f64)>, BoundaryError> {
    let mats = samples
        .iter()
        .map(|&l| Ok(boundary_matrix(&bc.evaluate_u(l)?, one_tol)?.a))
        .collect::<Result<Vec<_>, BoundaryError>>()?;
    for i in 0..samples.len().saturating_sub(1) {
        let diff = mats[i].sub(&mats[i + 1])?;
        let floor = 1e-10 * (diff.frobenius_norm().max(mats[i].frobenius_norm())).max(1.0);
        let lo = linalg::hermitian_eigenvalues(&diff)?[0];
        if lo < -floor {
            return Ok(Some((samples[i], samples[i + 1], lo)));
        }
    }
    Ok(None)
}

/// A positively oriented circle for [`contour_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

/// Reference route for `A`: trapezoidal quadrature of
/// `(1/2π)∮ (z+1)/(z−1)·(U − z)⁻¹ dz` over a union of circles. Not used by
/// [`boundary_matrix`]; kept to cross-check it.
pub fn contour_integral(u: &Matrix, contours: &[Circle], nodes: usize) -> Result<Matrix, BoundaryError> {
    let n = u.rows();
    let mut acc = Matrix::zeros(n, n);
    let i = Complex64::new(0.0, 1.0);
    for circle in contours {
        for k in 0..nodes {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
            let z = circle.center + phase * circle.radius;
            let dz = i * phase * circle.radius * (2.0 * PI / nodes as f64);
            let weight = (z + 1.0) / (z - 1.0) * dz / (2.0 * PI);
            let resolvent = Lu::new(&u.sub(&Matrix::identity(n).scale(z))?)?.inverse();
            acc.add_scaled_assign(&resolvent, weight)?;
        }
    }
    Ok(acc)
}

/// Circles around each cluster of eigenvalues `≠ 1`, each with radius at most
/// half the distance to `1` and to every other cluster.
pub fn isolating_circles(eigenvalues: &[Complex64], one_tol: f64) -> Vec<Circle> {
    let mut centers: Vec<Complex64> = Vec::new();
    for &u in eigenvalues {
        if (u - 1.0).norm() <= one_tol {
            continue;
        }
        if !centers.iter().any(|c| (c - u).norm() < 1e-9) {
            centers.push(u);
        }
    }
    centers
        .iter()
        .map(|&c| {
            let mut r = 0.5 * (c - 1.0).norm();
            for &o in &centers {
                if o != c {
                    r = r.min(0.5 * (o - c).norm());
                }
            }
            Circle { center: c, radius: r.min(0.5) }
        })
        .collect()
}
