//! Strong-form checks: quasi-derivatives, boundary vectors and the identity
//! `⟨S(λ)y, y⟩ = Σ_k ∫ p_k |y^{(n−k)}|² dx + ⟨A(λ)y^∧, y^∧⟩`.
//!
//! `x`-derivatives of the coefficients are taken numerically, with a
//! Fornberg stencil whose step grows with the derivative order to balance
//! truncation and rounding. This assumes the extra smoothness (`p_k` in
//! `C^{n}`) that the form discretization itself never needs.

use num_complex::Complex64;

use super::{DiffopError, DifferentialProblem};
use crate::boundary::{boundary_matrix, boundary_pair, pair_residual};
use crate::galerkin::gauss_legendre;
use crate::linalg::{self, Lu, Matrix};

/// A function with analytically known derivatives.
pub trait TestFunction: Sync {
    /// `y^{(r)}(x)`.
    fn derivative(&self, x: f64, r: usize) -> Complex64;
}

impl<F> TestFunction for F
where
    F: Fn(f64, usize) -> Complex64 + Sync,
{
    fn derivative(&self, x: f64, r: usize) -> Complex64 {
        self(x, r)
    }
}

/// Complex polynomial in `t = (x − a)/(b − a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTestFunction {
    a: f64,
    length: f64,
    coeffs: Vec<Complex64>,
}

impl PolynomialTestFunction {
    /// Interpolates derivative jets `y^{(r)}(a)`, `y^{(r)}(b)`, `r < J`, by a
    /// polynomial of degree `2J − 1`.
    pub fn hermite(a: f64, b: f64, left: &[Complex64], right: &[Complex64]) -> Result<Self, DiffopError> {
        if left.len() != right.len() || left.is_empty() || !(a < b) {
            return Err(DiffopError::InvalidProblem("jets must be non-empty, equally long, on a < b".into()));
        }
        let j = left.len();
        let size = 2 * j;
        let length = b - a;
        // row (side, r): d^r/dx^r of t^p at t = side
        let system = Matrix::from_fn(size, size, |row, p| {
            let t = (row / j) as f64;
            let r = row % j;
            if p < r {
                return Complex64::new(0.0, 0.0);
            }
            let falling: f64 = (0..r).map(|i| (p - i) as f64).product();
            Complex64::new(falling * t.powi((p - r) as i32) / length.powi(r as i32), 0.0)
        });
        let rhs: Vec<Complex64> = left.iter().chain(right).copied().collect();
        let coeffs = Lu::new(&system)?.solve(&rhs);
        Ok(Self { a, length, coeffs })
    }

    /// Adds `β·t^J(1 − t)^J`, which leaves derivatives below `J` at both
    /// ends unchanged.
    pub fn with_bump(mut self, beta: Complex64, j: usize) -> Self {
        // (1 − t)^J = Σ C(J, i)(−1)^i t^i
        let degree = 2 * j;
        if self.coeffs.len() <= degree {
            self.coeffs.resize(degree + 1, Complex64::new(0.0, 0.0));
        }
        let mut binom = 1.0;
        for i in 0..=j {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            self.coeffs[j + i] += beta * sign * binom;
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
        self
    }
}

impl TestFunction for PolynomialTestFunction {
    fn derivative(&self, x: f64, r: usize) -> Complex64 {
        let t = (x - self.a) / self.length;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in (r..self.coeffs.len()).rev() {
            let falling: f64 = (0..r).map(|i| (p - i) as f64).product();
            acc = acc * t + self.coeffs[p] * falling;
        }
        acc / self.length.powi(r as i32)
    }
}

/// Weights of the `order`-th derivative at 0 for samples at `offsets`
/// (Fornberg's recursion).
fn fd_weights(offsets: &[f64], order: usize) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// `[p_k, p_k′, …, p_k^{(upto)}]` at `x`; exact zeros when `p_k` does not
/// depend on `x`.
pub(crate) fn coefficient_x_derivatives(
    problem: &DifferentialProblem,
    k: usize,
    x: f64,
    lambda: f64,
    upto: usize,
) -> Result<Vec<f64>, DiffopError> {
    let mut out = vec![0.0; upto + 1];
    out[0] = problem.coefficient(k, x, lambda)?;
    if upto == 0 || !problem.coefficients[k].tree().depends_on_x() {
        return Ok(out);
    }
    let (a, b) = problem.interval;
    for (order, slot) in out.iter_mut().enumerate().skip(1) {
        let h = (b - a) * 1e-5f64.max(f64::EPSILON.powf(1.0 / (order as f64 + 2.0)));
        if x + h == x {
            return Err(DiffopError::StepUnderflow(x));
        }
        let r = order / 2 + 1;
        let offsets: Vec<f64> = if x - r as f64 * h >= a && x + r as f64 * h <= b {
            (-(r as i64)..=r as i64).map(|j| j as f64 * h).collect()
        } else {
            let dir = if x - a < b - x { 1.0 } else { -1.0 };
            (0..order + 3).map(|j| dir * j as f64 * h).collect()
        };
        let weights = fd_weights(&offsets, order);
        let mut acc = 0.0;
        for (o, w) in offsets.iter().zip(&weights) {
            acc += w * problem.coefficient(k, x + o, lambda)?;
        }
        *slot = acc;
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `y^{[n+m]}(x₀)` for `m = 0..=m_max`, from `jet[r] = y^{(r)}(x₀)`:
/// `y^{[n+m]} = Σ_{k≤m} (−1)^{m−k} (p_k y^{(n−k)})^{(m−k)}` by Leibniz.
pub fn quasi_derivatives_from_jet(
    problem: &DifferentialProblem,
    lambda: f64,
    x0: f64,
    jet: &[Complex64],
    m_max: usize,
) -> Result<Vec<Complex64>, DiffopError> {
    let n = problem.n;
    if m_max > n || jet.len() < n + m_max + 1 {
        return Err(DiffopError::InvalidProblem(format!("jet of length {} too short for m = {m_max}", jet.len())));
    }
    let pd = (0..=m_max)
        .map(|k| coefficient_x_derivatives(problem, k, x0, lambda, m_max - k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..=m_max)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=m {
                let sign = if (m - k) % 2 == 0 { 1.0 } else { -1.0 };
                let j = m - k;
                for i in 0..=j {
                    acc += jet[n - k + j - i] * (sign * binomial(j, i) * pd[k][i]);
                }
            }
            acc
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiDerivativeTrace {
    /// `y^{[n+m]}(a)`, `m = 0..=n`.
    pub at_a: Vec<Complex64>,
    pub at_b: Vec<Complex64>,
    /// `(y(a), …, y^{(n−1)}(a), y(b), …, y^{(n−1)}(b))`.
    pub y_hat: Vec<Complex64>,
    /// `(y^{[2n−1]}(a), …, y^{[n]}(a), −y^{[2n−1]}(b), …, −y^{[n]}(b))`.
    pub y_vee: Vec<Complex64>,
    /// `‖(U − 1)y^∨ + i(U + 1)y^∧‖`.
    pub bc_residual: f64,
}

pub fn quasi_derivative_trace(
    problem: &DifferentialProblem,
    lambda0: f64,
    y: &dyn TestFunction,
) -> Result<QuasiDerivativeTrace, DiffopError> {
    let n = problem.n;
    let (a, b) = problem.interval;
    let jet = |x: f64| (0..=2 * n).map(|r| y.derivative(x, r)).collect::<Vec<_>>();
    let at_a = quasi_derivatives_from_jet(problem, lambda0, a, &jet(a), n)?;
    let at_b = quasi_derivatives_from_jet(problem, lambda0, b, &jet(b), n)?;
    let y_hat: Vec<Complex64> = (0..n).map(|r| y.derivative(a, r)).chain((0..n).map(|r| y.derivative(b, r))).collect();
    let y_vee: Vec<Complex64> =
        (0..n).rev().map(|m| at_a[m]).chain((0..n).rev().map(|m| -at_b[m])).collect();
    let u = problem.boundary.evaluate_u(lambda0)?;
    // pair_residual(U, Y, Z) = ‖(U − 1)Z + i(U + 1)Y‖ with Y = y^∧, Z = y^∨
    let bc_residual = pair_residual(&u, &y_hat, &y_vee)?;
    Ok(QuasiDerivativeTrace { at_a, at_b, y_hat, y_vee, bc_residual })
}

/// Polynomial `y` with `y^∧ = (U − 1)X` and `y^∨ = −i(U + 1)X`, so it meets
/// the boundary conditions at `λ₀`, plus `β·t^{2n}(1 − t)^{2n}`.
pub fn boundary_test_function(
    problem: &DifferentialProblem,
    lambda0: f64,
    x: &[Complex64],
    beta: Complex64,
) -> Result<PolynomialTestFunction, DiffopError> {
    let n = problem.n;
    let (a, b) = problem.interval;
    let u = problem.boundary.evaluate_u(lambda0)?;
    let (big_y, big_z) = boundary_pair(&u, x)?;
    let mut jets = Vec::with_capacity(2);
    for (side, x0) in [(0usize, a), (1, b)] {
        let mut jet = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        jet[..n].copy_from_slice(&big_y[side * n..side * n + n]);
        let p0 = problem.coefficient(0, x0, lambda0)?;
        for m in 0..n {
            let entry = big_z[side * n + (n - 1 - m)];
            let target = if side == 0 { entry } else { -entry };
            jet[n + m] = Complex64::new(0.0, 0.0);
            let q = quasi_derivatives_from_jet(problem, lambda0, x0, &jet, m)?[m];
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            jet[n + m] = (target - q) / (sign * p0);
        }
        jet.truncate(2 * n);
        jets.push(jet);
    }
    Ok(PolynomialTestFunction::hermite(a, b, &jets[0], &jets[1])?.with_bump(beta, 2 * n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormIdentity {
    /// False when `y` does not satisfy the boundary conditions.
    pub applicable: bool,
    /// `∫ (S y) ȳ dx`.
    pub lhs: Complex64,
    /// `Σ ∫ p_k |y^{(n−k)}|² + ⟨A y^∧, y^∧⟩`.
    pub rhs: f64,
    pub residual: f64,
    pub bc_residual: f64,
}

/// Both sides of the form identity by composite Gauss–Legendre quadrature.
pub fn form_identity_check(
    problem: &DifferentialProblem,
    lambda0: f64,
    y: &dyn TestFunction,
) -> Result<FormIdentity, DiffopError> {
    let trace = quasi_derivative_trace(problem, lambda0, y)?;
    let scale = 1.0 + linalg::norm(&trace.y_hat) + linalg::norm(&trace.y_vee);
    if trace.bc_residual > 1e-6 * scale {
        return Ok(FormIdentity {
            applicable: false,
            lhs: Complex64::new(0.0, 0.0),
            rhs: 0.0,
            residual: f64::NAN,
            bc_residual: trace.bc_residual,
        });
    }
    let n = problem.n;
    let (a, b) = problem.interval;
    let (gx, gw) = gauss_legendre(10);
    let panels = 64;
    let h = (b - a) / panels as f64;
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut volume = 0.0;
    for e in 0..panels {
        let x0 = a + e as f64 * h;
        for (t, w) in gx.iter().zip(&gw) {
            let x = x0 + 0.5 * (t + 1.0) * h;
            let wx = 0.5 * w * h;
            let jet: Vec<Complex64> = (0..=2 * n).map(|r| y.derivative(x, r)).collect();
            let sy = quasi_derivatives_from_jet(problem, lambda0, x, &jet, n)?[n];
            lhs += sy * jet[0].conj() * wx;
            for k in 0..=n {
                volume += wx * problem.coefficient(k, x, lambda0)? * jet[n - k].norm_sqr();
            }
        }
    }
    let u = problem.boundary.evaluate_u(lambda0)?;
    let a_mat = boundary_matrix(&u, problem.one_tol)?;
    let rhs = volume + a_mat.a.quadratic_form(&trace.y_hat)?;
    Ok(FormIdentity {
        applicable: true,
        lhs,
        rhs,
        residual: (lhs - rhs).norm(),
        bc_residual: trace.bc_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::UnitaryBoundary;
    use crate::diffop::parse_expression;
    use std::f64::consts::PI;

    fn problem(n: usize, coeffs: &[&str], bc: UnitaryBoundary, interval: (f64, f64)) -> DifferentialProblem {
        DifferentialProblem::new(
            n,
            interval,
            (-5.0, 5.0),
            coeffs.iter().map(|s| parse_expression(s).unwrap()).collect(),
            None,
            bc,
            8,
        )
        .unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sine(x: f64, r: usize) -> Complex64 {
        c(match r % 4 {
            0 => x.sin(),
            1 => x.cos(),
            2 => -x.sin(),
            _ => -x.cos(),
        })
    }

    fn cosine(x: f64, r: usize) -> Complex64 {
        sine(x, r + 1)
    }

    #[test]
    fn fornberg_weights_match_classic_stencils() {
        let w = fd_weights(&[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = fd_weights(&[-1.0, 0.0, 1.0], 2);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] + 2.0).abs() < 1e-15 && (w[2] - 1.0).abs() < 1e-15);
        let w = fd_weights(&[0.0, 1.0, 2.0], 1);
        assert!((w[0] + 1.5).abs() < 1e-15 && (w[1] - 2.0).abs() < 1e-15 && (w[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn numerical_coefficient_derivatives() {
        let p = problem(2, &["2 + sin(x)", "x^3", "0"], UnitaryBoundary::identity(2), (0.0, 1.0));
        for x in [0.0, 0.4, 1.0] {
            let d = coefficient_x_derivatives(&p, 0, x, 0.0, 2).unwrap();
            assert!((d[1] - x.cos()).abs() < 1e-8);
            assert!((d[2] + x.sin()).abs() < 1e-6);
            let d = coefficient_x_derivatives(&p, 1, x, 0.0, 1).unwrap();
            assert!((d[1] - 3.0 * x * x).abs() < 1e-8);
        }
    }

    #[test]
    fn second_quasi_derivative_of_sine_is_plus_sine() {
        // y^{[2]} = −(p0 y′)′ + p1 y
        let p = problem(1, &["1", "0"], UnitaryBoundary::identity(1), (0.0, PI));
        for x in [0.3, 1.0, 2.2] {
            let jet: Vec<Complex64> = (0..=2).map(|r| sine(x, r)).collect();
            let q = quasi_derivatives_from_jet(&p, 1.0, x, &jet, 1).unwrap();
            assert!((q[0] - c(x.cos())).norm() < 1e-12);
            assert!((q[1] - c(x.sin())).norm() < 1e-6);
        }
    }

    #[test]
    fn dirichlet_and_neumann_traces() {
        let p = problem(1, &["1", "-lambda"], UnitaryBoundary::identity(1), (0.0, PI));
        for k in 1..=3 {
            let y = move |x: f64, r: usize| sine(k as f64 * x, r) * (k as f64).powi(r as i32);
            let t = quasi_derivative_trace(&p, 0.5, &y).unwrap();
            assert!(t.y_hat.iter().all(|v| v.norm() < 1e-14));
            assert!(t.bc_residual <= 1e-8);
        }
        let p = problem(1, &["1", "-lambda"], UnitaryBoundary::minus_identity(1), (0.0, PI));
        for k in 0..=3 {
            let y = move |x: f64, r: usize| cosine(k as f64 * x, r) * (k as f64).powi(r as i32);
            let t = quasi_derivative_trace(&p, 0.5, &y).unwrap();
            assert!(t.y_vee.iter().all(|v| v.norm() < 1e-6));
            assert!(t.bc_residual <= 1e-6);
        }
    }

    #[test]
    fn form_identity_analytic_cases() {
        for lambda in [-1.0, 0.0, 2.5] {
            let p = problem(1, &["1", "-lambda"], UnitaryBoundary::identity(1), (0.0, PI));
            let r = form_identity_check(&p, lambda, &sine).unwrap();
            let exact = (1.0 - lambda) * PI / 2.0;
            assert!(r.applicable && (r.rhs - exact).abs() < 1e-8 && r.residual <= 1e-5 * (1.0 + exact.abs()));
            let p = problem(1, &["1", "-lambda"], UnitaryBoundary::minus_identity(1), (0.0, PI));
            let r = form_identity_check(&p, lambda, &cosine).unwrap();
            assert!(r.applicable && (r.rhs - exact).abs() < 1e-8 && r.residual <= 1e-5 * (1.0 + exact.abs()));
        }
        let zero = |_: f64, _: usize| c(0.0);
        let p = problem(1, &["1", "0"], UnitaryBoundary::identity(1), (0.0, PI));
        let r = form_identity_check(&p, 0.0, &zero).unwrap();
        assert_eq!((r.lhs.norm(), r.rhs), (0.0, 0.0));
        let r = form_identity_check(&p, 0.0, &cosine).unwrap();
        assert!(!r.applicable);
    }

    #[test]
    fn constructed_functions_meet_boundary_conditions() {
        let iu = UnitaryBoundary::constant(Matrix::identity(4).scale(Complex64::new(0.0, 1.0))).unwrap();
        let p = problem(2, &["1.5 + x", "cos(x)", "x - lambda"], iu, (0.0, 1.0));
        let x = [Complex64::new(0.3, -0.2), c(1.0), Complex64::new(0.0, 0.7), c(-0.4)];
        let y = boundary_test_function(&p, 0.2, &x, Complex64::new(1.0, 2.0)).unwrap();
        let t = quasi_derivative_trace(&p, 0.2, &y).unwrap();
        assert!(t.bc_residual <= 1e-7, "{}", t.bc_residual);
        let r = form_identity_check(&p, 0.2, &y).unwrap();
        assert!(r.applicable && r.residual <= 1e-5 * (1.0 + r.rhs.abs()), "{r:?}");
    }

    #[test]
    fn hermite_polynomial_matches_jets() {
        let left = [c(1.0), Complex64::new(0.0, 2.0), c(-3.0)];
        let right = [c(0.5), c(0.25), Complex64::new(1.0, 1.0)];
        let y = PolynomialTestFunction::hermite(-1.0, 2.0, &left, &right).unwrap().with_bump(c(5.0), 3);
        for r in 0..3 {
            assert!((y.derivative(-1.0, r) - left[r]).norm() < 1e-11);
            assert!((y.derivative(2.0, r) - right[r]).norm() < 1e-11);
        }
    }
}
