//! Differential operator-functions
//! `S(λ)y = Σ_k (−1)^{n−k} (p_k(x, λ) y^{(n−k)})^{(n−k)}` on `[a, b]` with
//! boundary conditions `(U(λ) − 1)y^∨ + i(U(λ) + 1)y^∧ = 0`, discretized
//! into pencils through their quadratic forms.

pub mod expr;
mod quasi;
mod study;

use thiserror::Error;

use crate::boundary::{
    self, boundary_data, kernel_constancy_check, rank_constancy_check, BoundaryError, UnitaryBoundary,
    DEFAULT_ONE_TOL,
};
use crate::galerkin::{self, GalerkinError, HermiteBasis};
use crate::linalg::{self, HermitianMatrix, LinalgError};
use crate::pencil::{HypothesisCheck, ModelMetadata, PencilError, PencilModel, Provenance};

pub use expr::{parse_expression, CoefficientExpression, EvalError, ParseError};
pub use quasi::{
    boundary_test_function, form_identity_check, quasi_derivative_trace, quasi_derivatives_from_jet, FormIdentity,
    PolynomialTestFunction, QuasiDerivativeTrace, TestFunction,
};
pub use study::{convergence_study, ConvergenceStudy};

pub const DEFAULT_MESH: usize = 64;
/// Step of the λ finite-difference cross-check of supplied `∂λ p_k`.
pub const DERIVATIVE_CHECK_STEP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffopError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("p{k}: {source}")]
    Evaluation { k: usize, source: EvalError },
    #[error("p0 = {value} is not positive at x = {x}, lambda = {lambda}")]
    NonPositiveLeadingCoefficient { x: f64, lambda: f64, value: f64 },
    #[error(
        "supplied d/dlambda p{k} = {supplied} disagrees with the finite difference {estimated} at x = {x}, lambda = {lambda}"
    )]
    InconsistentDerivative { k: usize, x: f64, lambda: f64, supplied: f64, estimated: f64 },
    #[error("differentiation step underflows at x = {0}")]
    StepUnderflow(f64),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Problem data, validated on construction.
#[derive(Debug, Clone)]
pub struct DifferentialProblem {
    n: usize,
    interval: (f64, f64),
    lambda_interval: (f64, f64),
    coefficients: Vec<CoefficientExpression>,
    derivatives: Option<Vec<CoefficientExpression>>,
    boundary: UnitaryBoundary,
    mesh: usize,
    one_tol: f64,
}

impl DifferentialProblem {
    /// `coefficients[k]` is `p_k`; `derivatives[k]`, when given, is `∂λ p_k`.
    pub fn new(
        n: usize,
        interval: (f64, f64),
        lambda_interval: (f64, f64),
        coefficients: Vec<CoefficientExpression>,
        derivatives: Option<Vec<CoefficientExpression>>,
        boundary: UnitaryBoundary,
        mesh: usize,
    ) -> Result<Self, DiffopError> {
        let invalid = |m: String| Err(DiffopError::InvalidProblem(m));
        if n == 0 {
            return invalid("n must be at least 1".into());
        }
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return invalid(format!("interval [{a}, {b}] is empty or not finite"));
        }
        let (s, t) = lambda_interval;
        if !(s.is_finite() && t.is_finite() && s < t) {
            return invalid(format!("lambda interval ({s}, {t}) is empty or not finite"));
        }
        if coefficients.len() != n + 1 {
            return invalid(format!("expected {} coefficients p0..p{n}, found {}", n + 1, coefficients.len()));
        }
        if let Some(d) = &derivatives {
            if d.len() != n + 1 {
                return invalid(format!("expected {} coefficient derivatives, found {}", n + 1, d.len()));
            }
        }
        if boundary.size() != 2 * n {
            return invalid(format!("boundary matrix is {0}x{0}, expected {1}x{1}", boundary.size(), 2 * n));
        }
        if mesh < 2 {
            return invalid(format!("mesh must have at least 2 elements, found {mesh}"));
        }
        let problem = Self {
            n,
            interval,
            lambda_interval,
            coefficients,
            derivatives,
            boundary,
            mesh,
            one_tol: DEFAULT_ONE_TOL,
        };
        problem.check_leading_positive()?;
        Ok(problem)
    }

    pub fn with_one_tol(mut self, one_tol: f64) -> Result<Self, DiffopError> {
        if !(one_tol > 0.0) {
            return Err(DiffopError::InvalidProblem(format!("one_tol {one_tol} must be positive")));
        }
        self.one_tol = one_tol;
        Ok(self)
    }

    pub fn with_mesh(mut self, mesh: usize) -> Result<Self, DiffopError> {
        if mesh < 2 {
            return Err(DiffopError::InvalidProblem(format!("mesh must have at least 2 elements, found {mesh}")));
        }
        self.mesh = mesh;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn lambda_interval(&self) -> (f64, f64) {
        self.lambda_interval
    }

    pub fn coefficients(&self) -> &[CoefficientExpression] {
        &self.coefficients
    }

    pub fn derivatives(&self) -> Option<&[CoefficientExpression]> {
        self.derivatives.as_deref()
    }

    pub fn boundary(&self) -> &UnitaryBoundary {
        &self.boundary
    }

    pub fn mesh(&self) -> usize {
        self.mesh
    }

    pub fn one_tol(&self) -> f64 {
        self.one_tol
    }

    pub fn coefficient(&self, k: usize, x: f64, lambda: f64) -> Result<f64, DiffopError> {
        self.coefficients[k].eval(x, lambda).map_err(|source| DiffopError::Evaluation { k, source })
    }

    /// Interior sample `λ_j = σ + (j + ½)(τ − σ)/count`.
    pub fn lambda_samples(&self, count: usize) -> Vec<f64> {
        let (s, t) = self.lambda_interval;
        (0..count).map(|j| s + (j as f64 + 0.5) * (t - s) / count as f64).collect()
    }

    /// `p0 > 0` on a 64×64 grid of `[a, b] × (σ, τ)`.
    fn check_leading_positive(&self) -> Result<(), DiffopError> {
        let (a, b) = self.interval;
        for lambda in self.lambda_samples(64) {
            for i in 0..64 {
                let x = a + (b - a) * i as f64 / 63.0;
                let value = self.coefficient(0, x, lambda)?;
                if !(value > 0.0) {
                    return Err(DiffopError::NonPositiveLeadingCoefficient { x, lambda, value });
                }
            }
        }
        Ok(())
    }

    /// Central-difference check of the supplied `∂λ p_k` on an 8×8 grid.
    fn check_derivatives(&self) -> Result<(), DiffopError> {
        let Some(derivatives) = &self.derivatives else {
            return Ok(());
        };
        let (a, b) = self.interval;
        let h = DERIVATIVE_CHECK_STEP;
        for lambda in self.lambda_samples(8) {
            for i in 0..8 {
                let x = a + (b - a) * i as f64 / 7.0;
                for (k, derivative) in derivatives.iter().enumerate() {
                    let supplied = derivative.eval(x, lambda).map_err(|source| DiffopError::Evaluation { k, source })?;
                    let plus = self.coefficient(k, x, lambda + h)?;
                    let minus = self.coefficient(k, x, lambda - h)?;
                    let mid = self.coefficient(k, x, lambda)?;
                    let estimated = (plus - minus) / (2.0 * h);
                    if (estimated - supplied).abs() > 1e-5 * (1.0 + supplied.abs() + mid.abs()) {
                        return Err(DiffopError::InconsistentDerivative { k, x, lambda, supplied, estimated });
                    }
                }
            }
        }
        Ok(())
    }
}

/// The discrete pencil of a differential problem.
#[derive(Debug, Clone)]
pub struct DifferentialModel {
    problem: DifferentialProblem,
    basis: HermiteBasis,
    metadata: ModelMetadata,
}

/// Builds the Galerkin pencil and records which counting hypotheses hold.
pub fn compile(problem: &DifferentialProblem) -> Result<DifferentialModel, DiffopError> {
    problem.check_derivatives()?;
    let (a, b) = problem.interval;
    let basis = galerkin::build_basis(problem.n, a, b, problem.mesh)?;
    let grid = problem.lambda_samples(32);
    let rank = rank_constancy_check(&problem.boundary, &grid, problem.one_tol)?;
    let kernel_constant = rank.constant && kernel_constancy_check(&problem.boundary, &grid, problem.one_tol)?;
    let monotone_a = boundary::find_boundary_monotonicity_violation(&problem.boundary, &grid, problem.one_tol)?;

    let mut warnings = Vec::new();
    if !rank.constant {
        warnings.push(format!("rank(U(lambda) - 1) varies over the lambda grid: {:?}", rank.ranks));
    } else if !kernel_constant {
        warnings.push("ker(U(lambda) - 1) moves with lambda; the form domain is re-reduced at every lambda".into());
    }
    let hypotheses = vec![
        HypothesisCheck {
            name: "rank(U(lambda) - 1) constant".into(),
            holds: rank.constant,
            detail: format!("32-point grid, ranks {}..{}", rank.ranks.iter().min().unwrap_or(&0), rank.ranks.iter().max().unwrap_or(&0)),
        },
        HypothesisCheck {
            name: "ker(U(lambda) - 1) constant".into(),
            holds: kernel_constant,
            detail: "kernel projectors agree to 1e-8 on the grid".into(),
        },
        HypothesisCheck {
            name: "A(lambda1) - A(lambda2) >= 0 for lambda1 < lambda2".into(),
            holds: monotone_a.is_none(),
            detail: match monotone_a {
                None => "checked on consecutive grid pairs".into(),
                Some((l1, l2, v)) => format!("eigenvalue {v:.3e} for lambda pair ({l1:.6}, {l2:.6})"),
            },
        },
        HypothesisCheck {
            name: "d/dlambda p_k supplied".into(),
            holds: problem.derivatives.is_some(),
            detail: if problem.derivatives.is_some() { "finite-difference cross-check passed".into() } else { "not given".into() },
        },
    ];
    let metadata = ModelMetadata { provenance: Provenance::Differential, domain_constant: kernel_constant, hypotheses, warnings };
    Ok(DifferentialModel { problem: problem.clone(), basis, metadata })
}

impl DifferentialModel {
    pub fn problem(&self) -> &DifferentialProblem {
        &self.problem
    }

    pub fn basis(&self) -> &HermiteBasis {
        &self.basis
    }

    fn evaluation_error(lambda: f64, e: impl std::fmt::Display) -> PencilError {
        PencilError::Evaluation { lambda, message: e.to_string() }
    }

    /// Assembled and reduced form at `λ`.
    pub fn assemble(&self, lambda: f64) -> Result<galerkin::AssembledForm, DiffopError> {
        let p = &self.problem;
        let u = p.boundary.evaluate_u(lambda)?;
        let (a, constraint) = boundary_data(&u, p.one_tol)?;
        let coefficients = |k: usize, x: f64| p.coefficients[k].eval(x, lambda).map_err(|e| e.to_string());
        galerkin::assemble_form(&self.basis, &coefficients, &a, &constraint).map_err(|e| match e {
            GalerkinError::NonPositiveLeadingCoefficient { x, value } => {
                DiffopError::NonPositiveLeadingCoefficient { x, lambda, value }
            }
            other => other.into(),
        })
    }

    fn derivative(&self, lambda: f64) -> Result<HermitianMatrix, DiffopError> {
        let p = &self.problem;
        let derivatives = p.derivatives.as_ref().expect("checked by caller");
        let u = p.boundary.evaluate_u(lambda)?;
        let (_, constraint) = boundary_data(&u, p.one_tol)?;
        let a_prime = boundary::boundary_matrix_derivative(
            &p.boundary,
            lambda,
            boundary::default_derivative_step(lambda),
            p.one_tol,
        )?;
        let coefficients = |k: usize, x: f64| derivatives[k].eval(x, lambda).map_err(|e| e.to_string());
        Ok(galerkin::assemble_form_derivative(&self.basis, &coefficients, &a_prime, &constraint)?)
    }
}

impl PencilModel for DifferentialModel {
    fn lambda_interval(&self) -> (f64, f64) {
        self.problem.lambda_interval
    }

    fn eval_form(&self, lambda: f64) -> Result<(HermitianMatrix, HermitianMatrix), PencilError> {
        self.check_lambda(lambda)?;
        let form = self.assemble(lambda).map_err(|e| Self::evaluation_error(lambda, e))?;
        Ok((form.f, form.m))
    }

    fn eval_form_derivative(&self, lambda: f64) -> Option<Result<HermitianMatrix, PencilError>> {
        self.problem.derivatives.as_ref()?;
        Some(
            self.check_lambda(lambda)
                .and_then(|_| self.derivative(lambda).map_err(|e| Self::evaluation_error(lambda, e))),
        )
    }

    fn has_derivative(&self) -> bool {
        self.problem.derivatives.is_some()
    }

    fn metadata(&self) -> ModelMetadata {
        self.metadata.clone()
    }
}

/// Largest `μ` with `F(λ₀) − μM` positive definite, by bisection on the
/// Cholesky test. A discrete lower bound of the form on the unit `L²` sphere.
pub fn semibounded_shift(model: &DifferentialModel, lambda0: f64) -> Result<f64, DiffopError> {
    let (f, m) = model.eval_form(lambda0)?;
    let pd = |mu: f64| -> Result<bool, DiffopError> {
        let mut shifted = f.clone();
        shifted.add_scaled_assign(&m, -mu)?;
        Ok(linalg::is_positive_definite(&shifted))
    };
    let mut lo = -1.0;
    while !pd(lo)? {
        lo *= 2.0;
        if lo < -1e300 {
            return Err(DiffopError::InvalidProblem("form is not bounded below".into()));
        }
    }
    let mut hi = lo.abs().max(1.0);
    while pd(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(DiffopError::InvalidProblem("shift search diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * (1.0 + mid.abs()) || mid <= lo || mid >= hi {
            break;
        }
        if pd(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{branch_values, nu, DEFAULT_INERTIA_TOL};
    use std::f64::consts::PI;

    fn expr(s: &str) -> CoefficientExpression {
        parse_expression(s).unwrap()
    }

    fn dirichlet(mesh: usize) -> DifferentialProblem {
        DifferentialProblem::new(
            1,
            (0.0, PI),
            (-20.0, 20.0),
            vec![expr("1"), expr("-lambda")],
            Some(vec![expr("0"), expr("-1")]),
            UnitaryBoundary::identity(1),
            mesh,
        )
        .unwrap()
    }

    #[test]
    fn dirichlet_branches() {
        let model = compile(&dirichlet(64)).unwrap();
        assert!(model.metadata().domain_constant);
        for l in [0.0, 2.5, 7.0] {
            let v = branch_values(&model, l).unwrap();
            for m in 1..=3 {
                assert!((v[m - 1] - ((m * m) as f64 - l)).abs() < 1e-4, "m={m} λ={l}: {}", v[m - 1]);
            }
        }
        assert_eq!(nu(&model, 10.5, DEFAULT_INERTIA_TOL).unwrap().negative, 3);
    }

    #[test]
    fn neumann_branches() {
        let p = DifferentialProblem::new(
            1,
            (0.0, PI),
            (-20.0, 20.0),
            vec![expr("1"), expr("-lambda")],
            None,
            UnitaryBoundary::minus_identity(1),
            64,
        )
        .unwrap();
        let model = compile(&p).unwrap();
        let v = branch_values(&model, 0.5).unwrap();
        assert!((v[0] + 0.5).abs() < 1e-8);
        assert!((v[1] - 0.5).abs() < 1e-6);
        assert!((v[2] - 3.5).abs() < 1e-5);
        assert!(!model.has_derivative());
    }

    #[test]
    fn derivative_of_dirichlet_model_is_negative_mass() {
        let model = compile(&dirichlet(16)).unwrap();
        let (_, m) = model.eval_form(1.0).unwrap();
        let fp = model.eval_form_derivative(1.0).unwrap().unwrap();
        assert!(fp.add(&m).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn rejects_invalid_problems() {
        let bad_leading = DifferentialProblem::new(
            1,
            (0.0, 1.0),
            (0.0, 1.0),
            vec![expr("x - 0.5"), expr("0")],
            None,
            UnitaryBoundary::identity(1),
            8,
        );
        assert!(matches!(bad_leading, Err(DiffopError::NonPositiveLeadingCoefficient { .. })));
        let wrong_size = DifferentialProblem::new(
            2,
            (0.0, 1.0),
            (0.0, 1.0),
            vec![expr("1"), expr("0"), expr("0")],
            None,
            UnitaryBoundary::identity(1),
            8,
        );
        assert!(matches!(wrong_size, Err(DiffopError::InvalidProblem(_))));
        let bad_derivative = DifferentialProblem::new(
            1,
            (0.0, 1.0),
            (0.0, 1.0),
            vec![expr("1"), expr("-lambda")],
            Some(vec![expr("0"), expr("1")]),
            UnitaryBoundary::identity(1),
            8,
        )
        .unwrap();
        assert!(matches!(compile(&bad_derivative), Err(DiffopError::InconsistentDerivative { k: 1, .. })));
    }

    #[test]
    fn moving_kernel_is_flagged() {
        // Θ(λ) has kernel (−λ, 0, 1, 0) for every λ; the fourth mode sits at u = −1
        use crate::linalg::Matrix;
        use num_complex::Complex64;
        let entry = |pairs: &[(usize, usize, f64)]| {
            let mut m = Matrix::zeros(4, 4);
            for &(i, j, v) in pairs {
                m[(i, j)] = Complex64::new(v, 0.0);
            }
            m
        };
        let theta0 = entry(&[(0, 1, 1.0), (1, 0, 1.0), (3, 3, PI)]);
        let theta1 = entry(&[(1, 2, 1.0), (2, 1, 1.0)]);
        let bc = UnitaryBoundary::generated(theta0, theta1).unwrap();
        let p = DifferentialProblem::new(
            2,
            (0.0, 1.0),
            (-1.0, 1.0),
            vec![expr("1"), expr("0"), expr("-lambda")],
            None,
            bc,
            8,
        )
        .unwrap();
        let model = compile(&p).unwrap();
        let meta = model.metadata();
        assert!(meta.hypotheses[0].holds);
        assert!(!meta.hypotheses[1].holds);
        assert!(!meta.domain_constant);
        assert!(!meta.warnings.is_empty());
    }

    #[test]
    fn semibounded_shift_examples() {
        let model = compile(&dirichlet(64)).unwrap();
        assert!((semibounded_shift(&model, 0.0).unwrap() - 1.0).abs() < 1e-4);
        assert!(semibounded_shift(&model, -3.0).unwrap() > 0.0);
        let neumann = DifferentialProblem::new(
            1,
            (0.0, PI),
            (-2.0, 2.0),
            vec![expr("1"), expr("0")],
            None,
            UnitaryBoundary::minus_identity(1),
            32,
        )
        .unwrap();
        let mu = semibounded_shift(&compile(&neumann).unwrap(), 0.0).unwrap();
        assert!(mu.abs() < 1e-6, "{mu}");
    }
}
