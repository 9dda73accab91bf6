//! Counting engine for self-adjoint pencils `λ ↦ (F(λ), M)`.
//!
//! Branches `Λ_m(λ)` are the sorted generalized eigenvalues of `(F(λ), M)`,
//! so they are continuous without any eigenvector tracking. Eigenvalues of the
//! operator-function are zeros of branches; `ν(λ)` is the negative inertia.

mod locate;
mod report;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, HermitianMatrix, Inertia, LinalgError};

pub use locate::{locate_eigenvalues, Endpoint, LocateOptions, LocatedEigenvalue, Location};
pub use report::{
    check_monotone, check_negative_type, count_report, CountReport, MonotoneOutcome, NegativeTypeOutcome,
    ReportOptions, Verdict,
};

pub const DEFAULT_ZERO_TOL: f64 = 1e-7;
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;
/// Zero band for `ν`, relative to `max(1, max|Λ_m|)`.
pub const DEFAULT_INERTIA_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PencilError {
    #[error("λ = {lambda} is outside the parameter interval ({sigma}, {tau})")]
    OutsideInterval { lambda: f64, sigma: f64, tau: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("model evaluation at λ = {lambda} failed: {message}")]
    Evaluation { lambda: f64, message: String },
    #[error("dimension changed from {expected} to {found}")]
    DimensionChange { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Abstract,
    Differential,
}

/// A named hypothesis and whether the model satisfies it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelMetadata {
    pub provenance: Provenance,
    /// The form domain does not depend on `λ`. Equality verdicts need this.
    pub domain_constant: bool,
    pub hypotheses: Vec<HypothesisCheck>,
    pub warnings: Vec<String>,
}

impl ModelMetadata {
    pub fn abstract_model() -> Self {
        Self { provenance: Provenance::Abstract, domain_constant: true, hypotheses: Vec::new(), warnings: Vec::new() }
    }
}

/// A discretized self-adjoint operator-function.
pub trait PencilModel: Sync {
    /// Open parameter interval `(σ, τ)`.
    fn lambda_interval(&self) -> (f64, f64);

    /// `(F(λ), M)` with `M` positive definite.
    fn eval_form(&self, lambda: f64) -> Result<(HermitianMatrix, HermitianMatrix), PencilError>;

    /// `F′(λ)`, or `None` when the model has no derivative.
    fn eval_form_derivative(&self, lambda: f64) -> Option<Result<HermitianMatrix, PencilError>>;

    fn metadata(&self) -> ModelMetadata;

    fn has_derivative(&self) -> bool {
        self.eval_form_derivative(self.interior_point()).is_some()
    }

    fn interior_point(&self) -> f64 {
        let (s, t) = self.lambda_interval();
        match (s.is_finite(), t.is_finite()) {
            (true, true) => 0.5 * (s + t),
            (true, false) => s + 1.0,
            (false, true) => t - 1.0,
            (false, false) => 0.0,
        }
    }

    fn check_lambda(&self, lambda: f64) -> Result<(), PencilError> {
        let (sigma, tau) = self.lambda_interval();
        if lambda.is_finite() && lambda > sigma && lambda < tau {
            Ok(())
        } else {
            Err(PencilError::OutsideInterval { lambda, sigma, tau })
        }
    }
}

/// `F(λ) = Σ_k λ^k C_k` with a fixed mass matrix.
#[derive(Debug, Clone)]
pub struct PolynomialPencil {
    coefficients: Vec<HermitianMatrix>,
    mass: HermitianMatrix,
    interval: (f64, f64),
}

impl PolynomialPencil {
    pub fn new(coefficients: Vec<HermitianMatrix>, mass: HermitianMatrix, interval: (f64, f64)) -> Result<Self, PencilError> {
        let dim = mass.dim();
        if coefficients.is_empty() || dim == 0 {
            return Err(PencilError::InvalidInput("at least one coefficient matrix is required".into()));
        }
        if let Some(c) = coefficients.iter().find(|c| c.dim() != dim) {
            return Err(PencilError::DimensionChange { expected: dim, found: c.dim() });
        }
        if !(interval.0 < interval.1) {
            return Err(PencilError::InvalidInput(format!("empty parameter interval ({}, {})", interval.0, interval.1)));
        }
        linalg::cholesky(&mass)?;
        Ok(Self { coefficients, mass, interval })
    }

    /// Identity mass matrix.
    pub fn standard(coefficients: Vec<HermitianMatrix>, interval: (f64, f64)) -> Result<Self, PencilError> {
        let dim = coefficients.first().map_or(0, |c| c.dim());
        Self::new(coefficients, HermitianMatrix::identity(dim), interval)
    }

    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    pub fn coefficients(&self) -> &[HermitianMatrix] {
        &self.coefficients
    }

    pub fn mass(&self) -> &HermitianMatrix {
        &self.mass
    }

    fn horner(&self, lambda: f64, derivative: bool) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(self.dim());
        let start = usize::from(derivative);
        for k in (start..self.coefficients.len()).rev() {
            acc = acc.scale(lambda);
            let weight = if derivative { k as f64 } else { 1.0 };
            acc.add_scaled_assign(&self.coefficients[k], weight).expect("dimensions checked");
        }
        acc
    }
}

impl PencilModel for PolynomialPencil {
    fn lambda_interval(&self) -> (f64, f64) {
        self.interval
    }

    fn eval_form(&self, lambda: f64) -> Result<(HermitianMatrix, HermitianMatrix), PencilError> {
        self.check_lambda(lambda)?;
        Ok((self.horner(lambda, false), self.mass.clone()))
    }

    fn eval_form_derivative(&self, lambda: f64) -> Option<Result<HermitianMatrix, PencilError>> {
        Some(self.check_lambda(lambda).map(|_| self.horner(lambda, true)))
    }

    fn metadata(&self) -> ModelMetadata {
        ModelMetadata::abstract_model()
    }
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Results keep the input order.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sorted `Λ_m(λ)`, `m = 1..dim`.
pub fn branch_values(model: &dyn PencilModel, lambda: f64) -> Result<Vec<f64>, PencilError> {
    let (f, m) = model.eval_form(lambda)?;
    Ok(linalg::generalized_eigenvalues(&f, &m)?)
}

/// Inertia of `(F(λ), M)`; zeros are eigenvalues within
/// `inertia_tol·max(1, max|Λ_m|)`.
pub fn nu(model: &dyn PencilModel, lambda: f64, inertia_tol: f64) -> Result<Inertia, PencilError> {
    if !(inertia_tol > 0.0) {
        return Err(PencilError::InvalidInput(format!("inertia tolerance {inertia_tol} must be positive")));
    }
    let values = branch_values(model, lambda)?;
    let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    Ok(Inertia::from_values(&values, inertia_tol * scale))
}

/// `ν` at many points, evaluated independently.
pub fn nu_scan(model: &dyn PencilModel, grid: &[f64], inertia_tol: f64) -> Result<Vec<Inertia>, PencilError> {
    par_map(grid, |&l| nu(model, l, inertia_tol)).into_iter().collect()
}

/// Number of strictly negative pivots of `F(λ)`, by `LDL*`. Used as the
/// sign oracle `Λ_m(λ) < 0 ⇔ count ≥ m`.
pub fn negative_count(model: &dyn PencilModel, lambda: f64) -> Result<usize, PencilError> {
    let (f, _) = model.eval_form(lambda)?;
    Ok(linalg::sylvester_inertia(&f, 0.0).negative)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchTable {
    pub lambda_grid: Vec<f64>,
    /// `branches[m][j] = Λ_{m+1}(λ_j)`.
    pub branches: Vec<Vec<f64>>,
    /// Per branch, `max_j |Λ_m(λ_{j+1}) − Λ_m(λ_j)|`.
    pub continuity: Vec<f64>,
}

impl BranchTable {
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}

pub fn validate_grid(model: &dyn PencilModel, grid: &[f64]) -> Result<(), PencilError> {
    if grid.is_empty() {
        return Err(PencilError::InvalidInput("empty λ grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PencilError::InvalidInput("λ grid must be strictly ascending".into()));
    }
    for &l in grid {
        model.check_lambda(l)?;
    }
    Ok(())
}

pub fn branch_table(model: &dyn PencilModel, grid: &[f64], m_max: usize) -> Result<BranchTable, PencilError> {
    validate_grid(model, grid)?;
    if m_max == 0 {
        return Err(PencilError::InvalidInput("at least one branch must be requested".into()));
    }
    let columns: Vec<Vec<f64>> = par_map(grid, |&l| branch_values(model, l)).into_iter().collect::<Result<_, _>>()?;
    let dim = columns.iter().map(Vec::len).min().unwrap_or(0);
    if m_max > dim {
        return Err(PencilError::InvalidInput(format!("{m_max} branches requested but the dimension is {dim}")));
    }
    let branches: Vec<Vec<f64>> = (0..m_max).map(|m| columns.iter().map(|c| c[m]).collect()).collect();
    debug_assert!(branches.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(lo, hi)| lo <= hi)));
    let continuity = branches
        .iter()
        .map(|b| b.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max))
        .collect();
    Ok(BranchTable { lambda_grid: grid.to_vec(), branches, continuity })
}

/// Uniform grid with `steps` points from `start` to `stop` inclusive.
pub fn uniform_grid(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..steps)
            .map(|j| if j + 1 == steps { stop } else { start + (stop - start) * j as f64 / (steps - 1) as f64 })
            .collect(),
    }
}

/// Greedy negative-subspace dimension versus `ν`, as a pair
/// `(greedy, ν_negative)`.
///
/// Eigenvectors with negative Rayleigh quotient are accumulated as long as
/// the form stays negative definite on their span.
pub fn rayleigh_ritz_negative_dimension(model: &dyn PencilModel, lambda: f64) -> Result<(usize, usize), PencilError> {
    let (f, m) = model.eval_form(lambda)?;
    let dec = linalg::generalized_eigen(&f, &m)?;
    let dim = dec.dim();
    let mut chosen: Vec<Vec<Complex64>> = Vec::new();
    for k in 0..dim {
        let v = dec.vector(k);
        let rq = f.quadratic_form(&v)? / m.quadratic_form(&v)?;
        if !(rq < 0.0) {
            continue;
        }
        let mut trial = chosen.clone();
        trial.push(v);
        let basis = linalg::Matrix::from_fn(dim, trial.len(), |i, j| trial[j][i]);
        let restricted = f.congruence(&basis)?.scale(-1.0);
        if linalg::is_positive_definite(&restricted) {
            chosen = trial;
        }
    }
    let negative = linalg::sylvester_inertia(&f, 0.0).negative;
    Ok((chosen.len(), negative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn diag_model(a: &[f64], interval: (f64, f64)) -> PolynomialPencil {
        // F(λ) = diag(a) − λI
        PolynomialPencil::standard(
            vec![HermitianMatrix::from_real_diagonal(a), HermitianMatrix::from_real_diagonal(&vec![-1.0; a.len()])],
            interval,
        )
        .unwrap()
    }

    #[test]
    fn nu_of_diagonal_family() {
        let m = diag_model(&[1.0, 4.0], (-10.0, 10.0));
        let cases = [(0.0, (0, 0, 2)), (2.0, (1, 0, 1)), (5.0, (2, 0, 0))];
        for (l, (neg, zero, pos)) in cases {
            assert_eq!(nu(&m, l, DEFAULT_INERTIA_TOL).unwrap(), Inertia { negative: neg, zero, positive: pos });
        }
        assert_eq!(nu(&m, 1.0, DEFAULT_INERTIA_TOL).unwrap().zero, 1);
        assert!(matches!(nu(&m, 10.0, DEFAULT_INERTIA_TOL), Err(PencilError::OutsideInterval { .. })));
    }

    #[test]
    fn branches_of_diagonal_family_are_lines() {
        let m = diag_model(&[1.0, 4.0], (-10.0, 10.0));
        let grid = uniform_grid(0.0, 5.0, 11);
        let t = branch_table(&m, &grid, 2).unwrap();
        for (j, &l) in grid.iter().enumerate() {
            assert!((t.branches[0][j] - (1.0 - l)).abs() < 1e-14);
            assert!((t.branches[1][j] - (4.0 - l)).abs() < 1e-14);
        }
        assert!((t.continuity[0] - 0.5).abs() < 1e-12);
        assert!(branch_table(&m, &grid, 3).is_err());
        assert!(branch_table(&m, &[1.0, 0.5], 1).is_err());
    }

    #[test]
    fn crossing_branches_are_sorted_with_bounded_jumps() {
        // F(λ) = [[λ, ε], [ε, −λ]]: eigenvalues ±sqrt(λ² + ε²)
        let eps = 0.05;
        let c0 = HermitianMatrix::from_real(2, &[0.0, eps, eps, 0.0]).unwrap();
        let c1 = HermitianMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let m = PolynomialPencil::standard(vec![c0, c1], (-2.0, 2.0)).unwrap();
        let grid = uniform_grid(-1.0, 1.0, 41);
        let t = branch_table(&m, &grid, 2).unwrap();
        for (j, &l) in grid.iter().enumerate() {
            let r = (l * l + eps * eps).sqrt();
            assert!((t.branches[0][j] + r).abs() < 1e-14);
            assert!((t.branches[1][j] - r).abs() < 1e-14);
        }
        assert!(t.continuity.iter().all(|&c| c <= 0.05 + 1e-12));
    }

    #[test]
    fn positive_definite_gives_full_positive_inertia() {
        let m = diag_model(&[1.0, 2.0, 3.0], (-5.0, 5.0));
        assert_eq!(nu(&m, -1.0, DEFAULT_INERTIA_TOL).unwrap(), Inertia { negative: 0, zero: 0, positive: 3 });
    }

    #[test]
    fn generalized_mass_changes_branches_not_inertia() {
        let mass = HermitianMatrix::from_real(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let c0 = HermitianMatrix::from_real(2, &[1.0, 0.0, 0.0, -3.0]).unwrap();
        let m = PolynomialPencil::new(vec![c0], mass, (-1.0, 1.0)).unwrap();
        let i = nu(&m, 0.0, DEFAULT_INERTIA_TOL).unwrap();
        assert_eq!((i.negative, i.positive), (1, 1));
        assert_eq!(negative_count(&m, 0.0).unwrap(), 1);
        let bad_mass = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(PolynomialPencil::new(vec![HermitianMatrix::identity(2)], bad_mass, (0.0, 1.0)).is_err());
    }

    #[test]
    fn derivative_is_exact() {
        let c = |v: f64| HermitianMatrix::from_real_diagonal(&[v, 2.0 * v]);
        let m = PolynomialPencil::standard(vec![c(1.0), c(-2.0), c(0.5), c(0.25)], (-3.0, 3.0)).unwrap();
        let l = 1.3;
        let d = m.eval_form_derivative(l).unwrap().unwrap();
        let expected = -2.0 + 2.0 * 0.5 * l + 3.0 * 0.25 * l * l;
        assert!((d.get(0, 0).re - expected).abs() < 1e-14);
        assert!((d.get(1, 1).re - 2.0 * expected).abs() < 1e-13);
    }

    #[test]
    fn rayleigh_ritz_matches_inertia() {
        let c0 = HermitianMatrix::new(Matrix::from_fn(4, 4, |i, j| {
            if i == j {
                Complex64::new(i as f64 - 1.5, 0.0)
            } else {
                Complex64::new(0.1 * (i + j) as f64, 0.05 * (i as f64 - j as f64))
            }
        }))
        .unwrap();
        let m = PolynomialPencil::standard(vec![c0, HermitianMatrix::identity(4).scale(-1.0)], (-5.0, 5.0)).unwrap();
        for l in [-3.0, -0.2, 0.4, 1.1, 3.0] {
            let (greedy, negative) = rayleigh_ritz_negative_dimension(&m, l).unwrap();
            assert_eq!(greedy, negative);
        }
    }
}
