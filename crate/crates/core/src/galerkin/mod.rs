//! Conforming Hermite finite elements for the quadratic form
//! `Σ_k ∫ p_k |y^{(n−k)}|² dx + ⟨A y^∧, y^∧⟩` on a uniform mesh of `[a, b]`.
//!
//! Degrees of freedom are nodal derivatives, so the boundary vector
//! `y^∧ = (y(a), …, y^{(n−1)}(a), y(b), …, y^{(n−1)}(b))` is read off the
//! coefficient vector directly. Each node carries `q ≥ n` derivatives
//! (`q = max(n, 2)` by default), giving piecewise polynomials of degree
//! `2q − 1` with `C^{q−1}` continuity.

mod quadrature;

use num_complex::Complex64;
use thiserror::Error;

use crate::boundary::{BoundaryMatrix, ConstraintData};
use crate::linalg::{HermitianMatrix, LinalgError, Lu, Matrix};

pub use quadrature::gauss_legendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GalerkinError {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("leading coefficient p0 = {value} is not positive at x = {x}")]
    NonPositiveLeadingCoefficient { x: f64, value: f64 },
    #[error("coefficient p{k} at x = {x}: {message}")]
    Coefficient { k: usize, x: f64, message: String },
    #[error("boundary data of size {found} does not match 2n = {expected}")]
    BoundarySize { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Evaluates `p_k(x)` at a fixed parameter value.
pub type CoefficientFn<'a> = dyn Fn(usize, f64) -> Result<f64, String> + 'a;

#[derive(Debug, Clone)]
pub struct HermiteBasis {
    n: usize,
    q: usize,
    a: f64,
    b: f64,
    elements: usize,
    h: f64,
    /// Reference-element quadrature nodes in `[0, 1]` and weights summing to 1.
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
    /// `values[r][p][l]`: r-th physical derivative of local shape `l` at node `p`.
    values: Vec<Vec<Vec<f64>>>,
    /// Monomial coefficients of the reference shapes, `shapes[l][power]`.
    shapes: Vec<Vec<f64>>,
}

/// `q = max(n, 2)` nodal derivatives: cubic Hermite for second-order problems.
pub fn build_basis(n: usize, a: f64, b: f64, elements: usize) -> Result<HermiteBasis, GalerkinError> {
    HermiteBasis::new(n, n.max(2), a, b, elements)
}

impl HermiteBasis {
    /// Basis with `q` derivatives per node; `q = n` gives the minimal
    /// conforming degree `2n − 1`.
    pub fn new(n: usize, q: usize, a: f64, b: f64, elements: usize) -> Result<Self, GalerkinError> {
        if n == 0 {
            return Err(GalerkinError::InvalidBasis("n must be at least 1".into()));
        }
        if q < n {
            return Err(GalerkinError::InvalidBasis(format!("{q} nodal derivatives cannot carry order {n}")));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(GalerkinError::InvalidBasis(format!("interval [{a}, {b}] is empty or not finite")));
        }
        if elements < 2 {
            return Err(GalerkinError::InvalidBasis("at least 2 elements are required".into()));
        }
        let h = (b - a) / elements as f64;
        if !(h > 0.0) || a + h == a {
            return Err(GalerkinError::InvalidBasis("element of zero length".into()));
        }
        let shapes = reference_shapes(q)?;
        let (gx, gw) = gauss_legendre(2 * n + 2);
        let ref_nodes: Vec<f64> = gx.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let ref_weights: Vec<f64> = gw.iter().map(|w| 0.5 * w).collect();
        let values = (0..=n)
            .map(|r| {
                ref_nodes
                    .iter()
                    .map(|&t| {
                        (0..2 * q)
                            .map(|l| {
                                let d = (l % q) as i32;
                                poly_derivative(&shapes[l], r, t) * h.powi(d - r as i32)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { n, q, a, b, elements, h, ref_nodes, ref_weights, values, shapes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodal_derivatives(&self) -> usize {
        self.q
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn element_length(&self) -> f64 {
        self.h
    }

    pub fn dofs(&self) -> usize {
        self.q * (self.elements + 1)
    }

    pub fn degree(&self) -> usize {
        2 * self.q - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.elements {
            self.b
        } else {
            self.a + i as f64 * self.h
        }
    }

    /// Global dofs making up `y^∧`, in its order.
    pub fn trace_dofs(&self) -> Vec<usize> {
        let end = self.q * self.elements;
        (0..self.n).chain((0..self.n).map(|d| end + d)).collect()
    }

    /// `2n × dofs` selection matrix `c ↦ y^∧`.
    pub fn trace_map(&self) -> Matrix {
        let mut t = Matrix::zeros(2 * self.n, self.dofs());
        for (row, dof) in self.trace_dofs().into_iter().enumerate() {
            t[(row, dof)] = Complex64::new(1.0, 0.0);
        }
        t
    }

    pub fn trace(&self, c: &[Complex64]) -> Vec<Complex64> {
        self.trace_dofs().into_iter().map(|d| c[d]).collect()
    }

    /// Global quadrature points and weights.
    pub fn quadrature(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.elements * self.ref_nodes.len());
        for e in 0..self.elements {
            let x0 = self.node(e);
            for (t, w) in self.ref_nodes.iter().zip(&self.ref_weights) {
                out.push((x0 + t * self.h, w * self.h));
            }
        }
        out
    }

    /// Nodal interpolant of a function given by its derivatives `0..q` at a point.
    pub fn interpolate(&self, derivatives: impl Fn(f64) -> Vec<Complex64>) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.dofs()];
        for i in 0..=self.elements {
            let d = derivatives(self.node(i));
            for k in 0..self.q {
                c[self.q * i + k] = d[k];
            }
        }
        c
    }

    /// `y^{(r)}(x)` for the expansion with coefficients `c`.
    pub fn evaluate(&self, c: &[Complex64], x: f64, r: usize) -> Complex64 {
        let e = (((x - self.a) / self.h).floor().max(0.0) as usize).min(self.elements - 1);
        let t = (x - self.node(e)) / self.h;
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..2 * self.q {
            let d = (l % self.q) as i32;
            let dof = self.q * (e + l / self.q) + (l % self.q);
            acc += c[dof] * poly_derivative(&self.shapes[l], r, t) * self.h.powi(d - r as i32);
        }
        acc
    }

    fn local_dof(&self, e: usize, l: usize) -> usize {
        self.q * (e + l / self.q) + l % self.q
    }
}

/// Hermite shapes on `[0, 1]`: local dof `l = side·q + d` has unit `d`-th
/// derivative at its side and vanishing other nodal derivatives.
fn reference_shapes(q: usize) -> Result<Vec<Vec<f64>>, GalerkinError> {
    let size = 2 * q;
    // rows: conditions (side, derivative), columns: monomial powers
    let vandermonde = Matrix::from_fn(size, size, |row, power| {
        let t = (row / q) as f64;
        let d = row % q;
        let mono: Vec<f64> = (0..size).map(|p| if p == power { 1.0 } else { 0.0 }).collect();
        Complex64::new(poly_derivative(&mono, d, t), 0.0)
    });
    let lu = Lu::new(&vandermonde)?;
    Ok((0..size)
        .map(|l| {
            let mut rhs = vec![Complex64::new(0.0, 0.0); size];
            rhs[l] = Complex64::new(1.0, 0.0);
            lu.solve(&rhs).into_iter().map(|z| z.re).collect()
        })
        .collect())
}

fn poly_derivative(coeffs: &[f64], r: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for p in (r..coeffs.len()).rev() {
        let falling: f64 = (0..r).map(|j| (p - j) as f64).product();
        acc = acc * t + coeffs[p] * falling;
    }
    acc
}

/// Basis of the reduced coefficient space `{c : K*·T c = 0}`: free dofs keep
/// their unit vectors, the trace block is spanned by the complement columns.
#[derive(Debug, Clone)]
pub struct ReductionMap {
    dofs: usize,
    free: Vec<usize>,
    trace: Vec<usize>,
    complement: Matrix,
}

impl ReductionMap {
    pub fn new(basis: &HermiteBasis, constraint: &ConstraintData) -> Result<Self, GalerkinError> {
        let trace = basis.trace_dofs();
        if constraint.complement_basis.rows() != trace.len() {
            return Err(GalerkinError::BoundarySize {
                expected: trace.len(),
                found: constraint.complement_basis.rows(),
            });
        }
        let free = (0..basis.dofs()).filter(|d| !trace.contains(d)).collect();
        Ok(Self { dofs: basis.dofs(), free, trace, complement: constraint.complement_basis.clone() })
    }

    pub fn reduced_dim(&self) -> usize {
        self.free.len() + self.complement.cols()
    }

    pub fn full_dim(&self) -> usize {
        self.dofs
    }

    /// Full coefficient vector for reduced coordinates `r`.
    pub fn expand(&self, r: &[Complex64]) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.dofs];
        for (k, &f) in self.free.iter().enumerate() {
            c[f] = r[k];
        }
        let off = self.free.len();
        for s in 0..self.complement.cols() {
            for (b, &t) in self.trace.iter().enumerate() {
                c[t] += self.complement[(b, s)] * r[off + s];
            }
        }
        c
    }

    /// Dense `dofs × reduced_dim` matrix with orthonormal columns.
    pub fn to_matrix(&self) -> Matrix {
        let mut q = Matrix::zeros(self.dofs, self.reduced_dim());
        for (k, &f) in self.free.iter().enumerate() {
            q[(f, k)] = Complex64::new(1.0, 0.0);
        }
        let off = self.free.len();
        for s in 0..self.complement.cols() {
            for (b, &t) in self.trace.iter().enumerate() {
                q[(t, off + s)] = self.complement[(b, s)];
            }
        }
        q
    }

    /// `Q* H Q` without forming `Q`.
    pub fn reduce(&self, h: &HermitianMatrix) -> HermitianMatrix {
        let hm = h.as_matrix();
        let n = self.dofs;
        let rdim = self.reduced_dim();
        let off = self.free.len();
        // G = H Q, n × rdim
        let mut g = Matrix::zeros(n, rdim);
        for i in 0..n {
            for (k, &f) in self.free.iter().enumerate() {
                g[(i, k)] = hm[(i, f)];
            }
            for s in 0..self.complement.cols() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (b, &t) in self.trace.iter().enumerate() {
                    acc += hm[(i, t)] * self.complement[(b, s)];
                }
                g[(i, off + s)] = acc;
            }
        }
        let mut r = Matrix::zeros(rdim, rdim);
        for j in 0..rdim {
            for (k, &f) in self.free.iter().enumerate() {
                r[(k, j)] = g[(f, j)];
            }
            for s in 0..self.complement.cols() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (b, &t) in self.trace.iter().enumerate() {
                    acc += self.complement[(b, s)].conj() * g[(t, j)];
                }
                r[(off + s, j)] = acc;
            }
        }
        HermitianMatrix::hermitize(r)
    }
}

#[derive(Debug, Clone)]
pub struct AssembledForm {
    pub f: HermitianMatrix,
    pub m: HermitianMatrix,
    pub constraint_reduced: bool,
    pub reduction: ReductionMap,
}

/// Unreduced `Σ_k ∫ p_k φ_i^{(n−k)} φ_j^{(n−k)}` (real symmetric).
fn assemble_volume(
    basis: &HermiteBasis,
    coefficients: &CoefficientFn<'_>,
    check_leading: bool,
) -> Result<Vec<f64>, GalerkinError> {
    let n = basis.n;
    let dofs = basis.dofs();
    let local = 2 * basis.q;
    let mut out = vec![0.0; dofs * dofs];
    let mut block = vec![0.0; local * local];
    for e in 0..basis.elements {
        block.iter_mut().for_each(|v| *v = 0.0);
        let x0 = basis.node(e);
        for (p, (&t, &w)) in basis.ref_nodes.iter().zip(&basis.ref_weights).enumerate() {
            let x = x0 + t * basis.h;
            let wx = w * basis.h;
            for k in 0..=n {
                let pk = coefficients(k, x).map_err(|message| GalerkinError::Coefficient { k, x, message })?;
                if !pk.is_finite() {
                    return Err(GalerkinError::Coefficient { k, x, message: format!("non-finite value {pk}") });
                }
                if k == 0 && check_leading && !(pk > 0.0) {
                    return Err(GalerkinError::NonPositiveLeadingCoefficient { x, value: pk });
                }
                if pk == 0.0 {
                    continue;
                }
                let vals = &basis.values[n - k][p];
                let s = wx * pk;
                for i in 0..local {
                    let si = s * vals[i];
                    for j in 0..local {
                        block[i * local + j] += si * vals[j];
                    }
                }
            }
        }
        for i in 0..local {
            let gi = basis.local_dof(e, i);
            for j in 0..local {
                out[gi * dofs + basis.local_dof(e, j)] += block[i * local + j];
            }
        }
    }
    Ok(out)
}

fn finish(basis: &HermiteBasis, volume: Vec<f64>, boundary: &HermitianMatrix) -> Result<HermitianMatrix, GalerkinError> {
    let dofs = basis.dofs();
    if boundary.dim() != 2 * basis.n {
        return Err(GalerkinError::BoundarySize { expected: 2 * basis.n, found: boundary.dim() });
    }
    let mut m = Matrix::from_fn(dofs, dofs, |i, j| Complex64::new(volume[i * dofs + j], 0.0));
    let trace = basis.trace_dofs();
    for (r, &ti) in trace.iter().enumerate() {
        for (s, &tj) in trace.iter().enumerate() {
            m[(ti, tj)] += boundary.get(r, s);
        }
    }
    Ok(HermitianMatrix::hermitize(m))
}

/// L² mass matrix on the full coefficient space.
pub fn mass_matrix(basis: &HermiteBasis) -> Result<HermitianMatrix, GalerkinError> {
    let n = basis.n;
    let volume = assemble_volume(basis, &|k, _| Ok(if k == n { 1.0 } else { 0.0 }), false)?;
    finish(basis, volume, &HermitianMatrix::zeros(2 * n))
}

/// Full (unreduced) form matrix.
pub fn assemble_full_form(
    basis: &HermiteBasis,
    coefficients: &CoefficientFn<'_>,
    a: &HermitianMatrix,
) -> Result<HermitianMatrix, GalerkinError> {
    let volume = assemble_volume(basis, coefficients, true)?;
    finish(basis, volume, a)
}

/// Form and mass matrices restricted to `{c : T c ⊥ ker(U − 1)}`.
pub fn assemble_form(
    basis: &HermiteBasis,
    coefficients: &CoefficientFn<'_>,
    a: &BoundaryMatrix,
    constraint: &ConstraintData,
) -> Result<AssembledForm, GalerkinError> {
    let reduction = ReductionMap::new(basis, constraint)?;
    let f = assemble_full_form(basis, coefficients, &a.a)?;
    let m = mass_matrix(basis)?;
    let constraint_reduced = constraint.kernel_dim() > 0;
    let (f, m) = if constraint_reduced { (reduction.reduce(&f), reduction.reduce(&m)) } else { (f, m) };
    Ok(AssembledForm { f, m, constraint_reduced, reduction })
}

/// `F′`: the same assembly with `∂λ p_k` and `A′`, reduced identically.
pub fn assemble_form_derivative(
    basis: &HermiteBasis,
    coefficient_derivatives: &CoefficientFn<'_>,
    a_prime: &HermitianMatrix,
    constraint: &ConstraintData,
) -> Result<HermitianMatrix, GalerkinError> {
    let reduction = ReductionMap::new(basis, constraint)?;
    let volume = assemble_volume(basis, coefficient_derivatives, false)?;
    let full = finish(basis, volume, a_prime)?;
    Ok(if constraint.kernel_dim() > 0 { reduction.reduce(&full) } else { full })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{boundary_data, DEFAULT_ONE_TOL};
    use crate::linalg::{cholesky, generalized_eigenvalues};
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bc(u: Matrix) -> (BoundaryMatrix, ConstraintData) {
        boundary_data(&u, DEFAULT_ONE_TOL).unwrap()
    }

    #[test]
    fn minimal_linear_and_cubic_shapes() {
        let b = HermiteBasis::new(1, 1, 0.0, 1.0, 4).unwrap();
        assert_eq!(b.dofs(), 5);
        assert_eq!(b.trace_dofs(), vec![0, 4]);
        let b = build_basis(2, 0.0, 1.0, 4).unwrap();
        assert_eq!(b.dofs(), 10);
        let t = b.trace_map();
        assert_eq!((t.rows(), t.cols()), (4, 10));
        for (row, dof) in [(0, 0), (1, 1), (2, 8), (3, 9)] {
            assert_eq!(t[(row, dof)], c(1.0));
        }
        let b = build_basis(1, 0.0, 1.0, 4).unwrap();
        assert_eq!((b.dofs(), b.degree()), (10, 3));
        assert_eq!(b.trace_dofs(), vec![0, 8]);
    }

    #[test]
    fn rejects_bad_meshes() {
        assert!(build_basis(1, 1.0, 0.0, 4).is_err());
        assert!(build_basis(1, 0.0, 1.0, 1).is_err());
        assert!(build_basis(0, 0.0, 1.0, 4).is_err());
        assert!(HermiteBasis::new(2, 1, 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn shapes_reproduce_polynomials_up_to_degree() {
        for (n, q) in [(1, 1), (1, 2), (2, 2), (3, 3)] {
            let b = HermiteBasis::new(n, q, -0.5, 2.0, 5).unwrap();
            let deg = b.degree() as i32;
            let f = |x: f64, r: usize| -> f64 {
                if r as i32 > deg {
                    return 0.0;
                }
                let falling: f64 = (0..r).map(|j| (deg - j as i32) as f64).product();
                falling * x.powi(deg - r as i32)
            };
            let coeffs = b.interpolate(|x| (0..q).map(|r| c(f(x, r))).collect());
            for &x in &[-0.5, -0.3, 0.1, 0.77, 1.5, 2.0] {
                for r in 0..q {
                    let v = b.evaluate(&coeffs, x, r);
                    assert!((v.re - f(x, r)).abs() < 1e-10 * (1.0 + f(x, r).abs()), "n={n} q={q} x={x} r={r}");
                }
            }
        }
    }

    #[test]
    fn dirichlet_energy_of_sine() {
        let b = build_basis(1, 0.0, PI, 64).unwrap();
        let coeffs = b.interpolate(|x| vec![c(x.sin()), c(x.cos())]);
        let k = assemble_full_form(&b, &|k, _| Ok(if k == 0 { 1.0 } else { 0.0 }), &HermitianMatrix::zeros(2)).unwrap();
        let cubic_error = (k.quadratic_form(&coeffs).unwrap() - PI / 2.0).abs();
        assert!(cubic_error < 1e-4);
        let linear = HermiteBasis::new(1, 1, 0.0, PI, 64).unwrap();
        let coeffs = linear.interpolate(|x| vec![c(x.sin())]);
        let k = assemble_full_form(&linear, &|k, _| Ok(if k == 0 { 1.0 } else { 0.0 }), &HermitianMatrix::zeros(2))
            .unwrap();
        // linear elements are only second order here: error ≈ 2e-4
        let linear_error = (k.quadratic_form(&coeffs).unwrap() - PI / 2.0).abs();
        assert!(linear_error < 1e-3 && cubic_error < 1e-2 * linear_error);
    }

    #[test]
    fn mass_matrix_is_positive_definite() {
        for (n, elements) in [(1, 2), (1, 64), (2, 3), (3, 4)] {
            let b = build_basis(n, 0.0, 1.0, elements).unwrap();
            assert!(cholesky(&mass_matrix(&b).unwrap()).is_ok());
        }
    }

    #[test]
    fn dirichlet_and_neumann_bottom_eigenvalues() {
        let b = build_basis(1, 0.0, PI, 64).unwrap();
        let lap = |k: usize, _x: f64| Ok(if k == 0 { 1.0 } else { 0.0 });
        let (a, k) = bc(Matrix::identity(2));
        let form = assemble_form(&b, &lap, &a, &k).unwrap();
        assert!(form.constraint_reduced);
        assert_eq!(form.f.dim(), b.dofs() - 2);
        let ev = generalized_eigenvalues(&form.f, &form.m).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-6);
        for m in 1..=3 {
            assert!((ev[m - 1] - (m * m) as f64).abs() < 1e-4);
        }
        let (a, k) = bc(Matrix::identity(2).scale(c(-1.0)));
        let form = assemble_form(&b, &lap, &a, &k).unwrap();
        assert!(!form.constraint_reduced);
        let ev = generalized_eigenvalues(&form.f, &form.m).unwrap();
        assert!(ev[0].abs() < 1e-8);
        assert!((ev[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_coefficients_give_zero_matrix() {
        let b = build_basis(2, 0.0, 1.0, 5).unwrap();
        let (_, k) = bc(Matrix::identity(4).scale(c(-1.0)));
        let f = assemble_form_derivative(&b, &|_, _| Ok(0.0), &HermitianMatrix::zeros(4), &k).unwrap();
        assert_eq!(f.frobenius_norm(), 0.0);
    }

    #[test]
    fn leading_coefficient_must_be_positive() {
        let b = build_basis(1, 0.0, 1.0, 4).unwrap();
        let (a, k) = bc(Matrix::identity(2));
        let err = assemble_form(&b, &|k, x| Ok(if k == 0 { x - 0.5 } else { 0.0 }), &a, &k).unwrap_err();
        assert!(matches!(err, GalerkinError::NonPositiveLeadingCoefficient { x, value } if x < 0.5 && value <= 0.0));
    }

    #[test]
    fn derivative_of_shifted_potential_is_negative_mass() {
        let b = build_basis(1, 0.0, PI, 16).unwrap();
        let (a, k) = bc(Matrix::identity(2));
        let form = assemble_form(&b, &|k, _| Ok(if k == 0 { 1.0 } else { 0.0 }), &a, &k).unwrap();
        let fp = assemble_form_derivative(&b, &|k, _| Ok(if k == 1 { -1.0 } else { 0.0 }), &HermitianMatrix::zeros(2), &k)
            .unwrap();
        assert!(fp.add(&form.m).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let b = build_basis(2, 0.0, 1.0, 6).unwrap();
        let (a, k) = bc(Matrix::diagonal(&[c(1.0), c(-1.0), Complex64::from_polar(1.0, 0.4), c(1.0)]));
        let p = |lambda: f64| move |k: usize, x: f64| -> Result<f64, String> {
            Ok(match k {
                0 => 2.0 - lambda + x * x,
                1 => x * lambda,
                _ => lambda * lambda - x,
            })
        };
        let dp = |lambda: f64| move |k: usize, x: f64| -> Result<f64, String> {
            Ok(match k {
                0 => -1.0,
                1 => x,
                _ => 2.0 * lambda,
            })
        };
        let (l, h) = (0.3, 1e-4);
        let plus = assemble_form(&b, &p(l + h), &a, &k).unwrap();
        let minus = assemble_form(&b, &p(l - h), &a, &k).unwrap();
        let fd = plus.f.sub(&minus.f).unwrap().scale(0.5 / h);
        let fp = assemble_form_derivative(&b, &dp(l), &HermitianMatrix::zeros(4), &k).unwrap();
        assert!(fd.sub(&fp).unwrap().frobenius_norm() <= 1e-7 * fp.frobenius_norm());
    }

    #[test]
    fn reduced_vectors_satisfy_constraint() {
        let b = build_basis(2, 0.0, 1.0, 4).unwrap();
        let u = Matrix::diagonal(&[c(1.0), c(-1.0), Complex64::from_polar(1.0, 0.4), c(1.0)]);
        let (_, k) = bc(u);
        let red = ReductionMap::new(&b, &k).unwrap();
        assert_eq!(red.reduced_dim(), b.dofs() - 2);
        let q = red.to_matrix();
        let gram = q.adjoint().matmul(&q).unwrap();
        assert!(gram.sub(&Matrix::identity(red.reduced_dim())).unwrap().max_abs() < 1e-14);
        for j in 0..red.reduced_dim() {
            let mut r = vec![c(0.0); red.reduced_dim()];
            r[j] = Complex64::new(0.3, -0.8);
            let trace = b.trace(&red.expand(&r));
            let kt = k.kernel_basis.adjoint().matvec(&trace).unwrap();
            assert!(crate::linalg::norm(&kt) <= 1e-10);
        }
        let m = mass_matrix(&b).unwrap();
        let direct = m.congruence(&q).unwrap();
        assert!(direct.sub(&red.reduce(&m)).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn dirichlet_eigenvalues_decrease_under_refinement() {
        let lap = |k: usize, _x: f64| Ok(if k == 0 { 1.0 } else { 0.0 });
        let (a, k) = bc(Matrix::identity(2));
        let mut previous: Option<Vec<f64>> = None;
        for elements in [8, 16, 32, 64] {
            let b = build_basis(1, 0.0, PI, elements).unwrap();
            let form = assemble_form(&b, &lap, &a, &k).unwrap();
            let ev = generalized_eigenvalues(&form.f, &form.m).unwrap();
            for m in 1..=4 {
                assert!(ev[m - 1] >= (m * m) as f64 - 1e-9);
                if let Some(p) = &previous {
                    assert!(ev[m - 1] <= p[m - 1] + 1e-9);
                }
            }
            previous = Some(ev);
        }
    }
}
