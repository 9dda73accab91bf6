use num_complex::Complex64;

use super::factor::{backward_substitute_adjoint, cholesky, forward_substitute, real_cholesky, real_forward_substitute};
use super::{HermitianMatrix, LinalgError, Matrix};

/// Jacobi stops once the off-diagonal Frobenius norm is below this fraction of `‖H‖_F`.
pub const JACOBI_OFFDIAG_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;
const QL_MAX_ITERATIONS: usize = 60;
/// `EigenMethod::Auto` uses Jacobi up to this dimension.
pub const JACOBI_MAX_DIM: usize = 16;

/// Eigenvalues ascending, eigenvectors as orthonormal columns in the same order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Jacobi for small matrices, Householder tridiagonalization + implicit QL above.
    #[default]
    Auto,
    /// Cyclic complex Jacobi rotations.
    Jacobi,
    /// Householder reduction to real tridiagonal form followed by implicit QL.
    Tridiagonal,
}

/// Counts of negative, zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    /// Classifies `values` against the band `[-band, band]`.
    pub fn from_values(values: &[f64], band: f64) -> Self {
        let mut out = Inertia { negative: 0, zero: 0, positive: 0 };
        for &v in values {
            if v < -band {
                out.negative += 1;
            } else if v > band {
                out.positive += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.negative + self.zero + self.positive
    }
}

pub fn hermitian_eigen(h: &HermitianMatrix) -> Result<EigenDecomposition, LinalgError> {
    hermitian_eigen_with(h, EigenMethod::Auto)
}

pub fn hermitian_eigen_with(h: &HermitianMatrix, method: EigenMethod) -> Result<EigenDecomposition, LinalgError> {
    let (values, vectors) = match resolve(method, h.dim()) {
        EigenMethod::Jacobi => jacobi(h.as_matrix(), true)?,
        _ => tridiagonal_ql(h.as_matrix(), true)?,
    };
    Ok(sorted(values, vectors.expect("vectors requested")))
}

/// Ascending eigenvalues without accumulating eigenvectors.
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>, LinalgError> {
    let (mut values, _) = match resolve(EigenMethod::Auto, h.dim()) {
        EigenMethod::Jacobi => jacobi(h.as_matrix(), false)?,
        _ => tridiagonal_ql(h.as_matrix(), false)?,
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Inertia with a zero band of `zero_tol·max(1, ρ(H))`.
pub fn inertia(h: &HermitianMatrix, zero_tol: f64) -> Result<Inertia, LinalgError> {
    if !(zero_tol > 0.0) {
        return Err(LinalgError::InvalidTolerance(zero_tol));
    }
    let values = hermitian_eigenvalues(h)?;
    let radius = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(Inertia::from_values(&values, zero_tol * radius.max(1.0)))
}

/// Eigenpairs of the pencil `F x = μ M x` through `C = L⁻¹ F L⁻*`, `M = L L*`.
///
/// Returned eigenvectors are `M`-orthonormal: `X* M X = I`.
pub fn generalized_eigen(f: &HermitianMatrix, m: &HermitianMatrix) -> Result<EigenDecomposition, LinalgError> {
    let (l, c) = reduce_pencil(f, m)?;
    let mut dec = hermitian_eigen(&c)?;
    backward_substitute_adjoint(&l, &mut dec.eigenvectors);
    Ok(dec)
}

pub fn generalized_eigenvalues(f: &HermitianMatrix, m: &HermitianMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = f.dim();
    if n > JACOBI_MAX_DIM && n == m.dim() {
        if let (Some(fr), Some(mr)) = (real_parts(f), real_parts(m)) {
            let (_, c) = reduce_real_pencil(n, fr, &mr)?;
            let (mut values, _) = real_tridiagonal_ql(n, c, false)?;
            values.sort_by(f64::total_cmp);
            return Ok(values);
        }
    }
    let (_, c) = reduce_pencil(f, m)?;
    hermitian_eigenvalues(&c)
}

/// Real `L` and `C = L⁻¹ F L⁻ᵀ` (lower triangle valid), row-major.
fn reduce_real_pencil(n: usize, f: Vec<f64>, m: &[f64]) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    let l = real_cholesky(n, m)?;
    // C = L⁻¹ (L⁻¹ F)ᵀ, using the symmetry of F
    let mut y = f;
    real_forward_substitute(n, &l, &mut y, n);
    let mut z: Vec<f64> = (0..n * n).map(|k| y[(k % n) * n + k / n]).collect();
    real_forward_substitute(n, &l, &mut z, n);
    Ok((l, z))
}

fn real_parts(h: &HermitianMatrix) -> Option<Vec<f64>> {
    let s = h.as_matrix().as_slice();
    s.iter().all(|z| z.im == 0.0).then(|| s.iter().map(|z| z.re).collect())
}

fn reduce_pencil(f: &HermitianMatrix, m: &HermitianMatrix) -> Result<(Matrix, HermitianMatrix), LinalgError> {
    if f.dim() != m.dim() {
        return Err(LinalgError::DimensionMismatch { expected: f.dim(), found: m.dim() });
    }
    if let (Some(fr), Some(mr)) = (real_parts(f), real_parts(m)) {
        let n = f.dim();
        let (l, z) = reduce_real_pencil(n, fr, &mr)?;
        let real = |v: &[f64]| Matrix::from_fn(n, n, |i, j| Complex64::new(v[i * n + j], 0.0));
        return Ok((real(&l), HermitianMatrix::hermitize(real(&z))));
    }
    let l = cholesky(m)?;
    let mut y = f.as_matrix().clone();
    forward_substitute(&l, &mut y);
    let mut z = y.adjoint();
    forward_substitute(&l, &mut z);
    Ok((l, HermitianMatrix::hermitize(z.adjoint())))
}

fn resolve(method: EigenMethod, dim: usize) -> EigenMethod {
    match method {
        EigenMethod::Auto if dim <= JACOBI_MAX_DIM => EigenMethod::Jacobi,
        EigenMethod::Auto => EigenMethod::Tridiagonal,
        other => other,
    }
}

fn sorted(values: Vec<f64>, vectors: Matrix) -> EigenDecomposition {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let n = vectors.rows();
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = Matrix::from_fn(n, order.len(), |i, j| vectors[(i, order[j])]);
    EigenDecomposition { eigenvalues, eigenvectors }
}

fn offdiag_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi. Each rotation first removes the phase of `a_pq` with a
/// diagonal unitary, then applies the classical real rotation.
fn jacobi(h: &Matrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>), LinalgError> {
    let n = h.rows();
    let mut a = h.clone();
    let mut v = want_vectors.then(|| Matrix::identity(n));
    let target = JACOBI_OFFDIAG_TOL * h.frobenius_norm();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if offdiag_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let hpq = a[(p, q)];
                let r = hpq.norm();
                if r == 0.0 {
                    continue;
                }
                let ph = hpq.conj() / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sph = ph * s;
                let cph = ph * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * sph;
                    a[(k, q)] = akp * s + akq * cph;
                }
                let sphc = sph.conj();
                let cphc = cph.conj();
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * sphc;
                    a[(q, k)] = apk * s + aqk * cphc;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(app - t * r, 0.0);
                a[(q, q)] = Complex64::new(aqq + t * r, 0.0);
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - vkq * sph;
                        v[(k, q)] = vkp * s + vkq * cph;
                    }
                }
            }
        }
    }
    if !converged && offdiag_norm(&a) > target {
        return Err(LinalgError::NoConvergence { iterations: JACOBI_MAX_SWEEPS });
    }
    Ok(((0..n).map(|i| a[(i, i)].re).collect(), v))
}

/// Householder tridiagonalization, phase normalization to a real symmetric
/// tridiagonal matrix, then implicit QL with Wilkinson-style shifts.
fn tridiagonal_ql(h: &Matrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>), LinalgError> {
    let n = h.rows();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| Matrix::zeros(0, 0))));
    }
    if h.as_slice().iter().all(|z| z.im == 0.0) {
        return real_tridiagonal_ql(n, h.as_slice().iter().map(|z| z.re).collect(), want_vectors);
    }
    let mut a = h.clone();
    let mut q = want_vectors.then(|| Matrix::identity(n));
    let zero = Complex64::new(0.0, 0.0);

    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let xnorm = ((k + 1)..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        for (t, i) in ((k + 1)..n).enumerate() {
            v[t] = a[(i, k)];
        }
        v[0] -= alpha;
        let vnorm = v[..m].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v[..m].iter_mut().for_each(|z| *z /= vnorm);

        // p = B v on the trailing block
        for (t, i) in ((k + 1)..n).enumerate() {
            let row = &a.row(i)[(k + 1)..n];
            p[t] = row.iter().zip(&v[..m]).map(|(b, z)| b * z).sum();
        }
        let kappa: f64 = v[..m].iter().zip(&p[..m]).map(|(a, b)| (a.conj() * b).re).sum();
        // w = 2p - 2κv, stored in p
        for t in 0..m {
            p[t] = (p[t] - v[t] * kappa) * 2.0;
        }
        for (s, i) in ((k + 1)..n).enumerate() {
            let vi = v[s];
            let wi = p[s];
            for (t, j) in ((k + 1)..n).enumerate() {
                let upd = vi * p[t].conj() + wi * v[t].conj();
                a[(i, j)] -= upd;
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in (k + 2)..n {
            a[(i, k)] = zero;
            a[(k, i)] = zero;
        }
        if let Some(q) = q.as_mut() {
            for r in 0..n {
                let s: Complex64 = ((k + 1)..n).zip(&v[..m]).map(|(j, z)| q[(r, j)] * z).sum();
                let s2 = s * 2.0;
                for (t, j) in ((k + 1)..n).enumerate() {
                    let upd = s2 * v[t].conj();
                    q[(r, j)] -= upd;
                }
            }
        }
    }

    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![0.0; n];
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    for k in 0..(n - 1) {
        let ek = a[(k + 1, k)];
        let r = ek.norm();
        e[k] = r;
        phases[k + 1] = if r > 0.0 { phases[k] * ek / r } else { phases[k] };
    }

    let mut z = want_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    });
    implicit_ql(&mut d, &mut e, z.as_deref_mut())?;

    let vectors = match (q, z) {
        (Some(q), Some(z)) => {
            // V = Q · diag(phases) · Z
            let mut qd = q;
            for r in 0..n {
                for c in 0..n {
                    qd[(r, c)] *= phases[c];
                }
            }
            let mut out = Matrix::zeros(n, n);
            for r in 0..n {
                for k in 0..n {
                    let a = qd[(r, k)];
                    for c in 0..n {
                        out[(r, c)] += a * z[k * n + c];
                    }
                }
            }
            Some(out)
        }
        _ => None,
    };
    Ok((d, vectors))
}

/// Real symmetric input: the same reduction in real arithmetic, roughly four
/// times cheaper.
/// `a` is row-major; only its lower triangle is read.
fn real_tridiagonal_ql(n: usize, mut a: Vec<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>), LinalgError> {
    let mut q = want_vectors.then(|| {
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = 1.0;
        }
        q
    });
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let xnorm = ((k + 1)..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let alpha = if x0 >= 0.0 { -xnorm } else { xnorm };
        for (t, i) in ((k + 1)..n).enumerate() {
            v[t] = a[i * n + k];
        }
        v[0] -= alpha;
        let vnorm = v[..m].iter().map(|z| z * z).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v[..m].iter_mut().for_each(|z| *z /= vnorm);
        // w = B v from the lower triangle of the trailing block, row by row
        w[..m].iter_mut().for_each(|x| *x = 0.0);
        for s in 0..m {
            let i = k + 1 + s;
            let row = &a[i * n + k + 1..i * n + i + 1];
            let vs = v[s];
            let mut acc = 0.0;
            for (t, b) in row[..s].iter().enumerate() {
                acc += b * v[t];
                w[t] += b * vs;
            }
            w[s] += acc + row[s] * vs;
        }
        let kappa: f64 = v[..m].iter().zip(&w[..m]).map(|(a, b)| a * b).sum();
        for t in 0..m {
            w[t] = 2.0 * (w[t] - v[t] * kappa);
        }
        for s in 0..m {
            let i = k + 1 + s;
            let (vi, wi) = (v[s], w[s]);
            let row = &mut a[i * n + k + 1..i * n + i + 1];
            for (t, x) in row.iter_mut().enumerate() {
                *x -= vi * w[t] + wi * v[t];
            }
        }
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha;
        for i in (k + 2)..n {
            a[i * n + k] = 0.0;
            a[k * n + i] = 0.0;
        }
        if let Some(q) = q.as_mut() {
            for r in 0..n {
                let row = &mut q[r * n + k + 1..r * n + n];
                let s2 = 2.0 * row.iter().zip(&v[..m]).map(|(x, z)| x * z).sum::<f64>();
                for (x, z) in row.iter_mut().zip(&v[..m]) {
                    *x -= s2 * z;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut e: Vec<f64> = (0..n).map(|k| if k + 1 < n { a[(k + 1) * n + k] } else { 0.0 }).collect();
    let mut z = want_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    });
    implicit_ql(&mut d, &mut e, z.as_deref_mut())?;
    let vectors = match (q, z) {
        (Some(q), Some(z)) => {
            let mut out = vec![0.0; n * n];
            for r in 0..n {
                for k in 0..n {
                    let x = q[r * n + k];
                    if x == 0.0 {
                        continue;
                    }
                    let dst = &mut out[r * n..r * n + n];
                    for (o, zz) in dst.iter_mut().zip(&z[k * n..k * n + n]) {
                        *o += x * zz;
                    }
                }
            }
            Some(Matrix::from_fn(n, n, |r, c| Complex64::new(out[r * n + c], 0.0)))
        }
        _ => None,
    };
    Ok((d, vectors))
}

/// Implicit QL on a real symmetric tridiagonal matrix; `e[i]` couples `i`
/// and `i+1`. `z` (row-major n×n) accumulates the rotations when present.
fn implicit_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<(), LinalgError> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITERATIONS {
                return Err(LinalgError::NoConvergence { iterations: QL_MAX_ITERATIONS });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zf = z[k * n + i + 1];
                        let zi = z[k * n + i];
                        z[k * n + i + 1] = s * zi + c * zf;
                        z[k * n + i] = c * zi - s * zf;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        HermitianMatrix::hermitize(m)
    }

    fn check_invariants(h: &HermitianMatrix, dec: &EigenDecomposition) {
        let n = h.dim();
        let hn = h.frobenius_norm();
        for w in dec.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for k in 0..n {
            let v = dec.vector(k);
            let hv = h.as_matrix().matvec(&v).unwrap();
            let res: f64 = hv.iter().zip(&v).map(|(a, b)| (a - b * dec.eigenvalues[k]).norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= 1e-9 * (1.0 + hn), "residual {res}");
        }
        let gram = dec.eigenvectors.adjoint().matmul(&dec.eigenvectors).unwrap();
        assert!(gram.sub(&Matrix::identity(n)).unwrap().frobenius_norm() <= 1e-9);
    }

    #[test]
    fn diagonal_sorted() {
        let h = HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let dec = hermitian_eigen(&h).unwrap();
        assert_eq!(dec.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn exchange_matrix() {
        let h = HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        for method in [EigenMethod::Jacobi, EigenMethod::Tridiagonal] {
            let dec = hermitian_eigen_with(&h, method).unwrap();
            assert!((dec.eigenvalues[0] + 1.0).abs() < 1e-14);
            assert!((dec.eigenvalues[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn both_methods_satisfy_invariants_and_agree() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (9, 4), (24, 5), (40, 6)] {
            let h = random_hermitian(n, seed);
            let jac = hermitian_eigen_with(&h, EigenMethod::Jacobi).unwrap();
            let tri = hermitian_eigen_with(&h, EigenMethod::Tridiagonal).unwrap();
            check_invariants(&h, &jac);
            check_invariants(&h, &tri);
            for (a, b) in jac.eigenvalues.iter().zip(&tri.eigenvalues) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
            let only = hermitian_eigenvalues(&h).unwrap();
            let full = hermitian_eigen(&h).unwrap();
            assert_eq!(only, full.eigenvalues);
        }
    }

    #[test]
    fn real_input_takes_real_path_and_matches_jacobi() {
        for (n, seed) in [(17, 7), (33, 8)] {
            let c = random_hermitian(n, seed);
            let h = HermitianMatrix::hermitize(Matrix::from_fn(n, n, |i, j| Complex64::new(c.get(i, j).re, 0.0)));
            let tri = hermitian_eigen_with(&h, EigenMethod::Tridiagonal).unwrap();
            let jac = hermitian_eigen_with(&h, EigenMethod::Jacobi).unwrap();
            check_invariants(&h, &tri);
            assert!(tri.eigenvectors.as_slice().iter().all(|z| z.im == 0.0));
            for (a, b) in jac.eigenvalues.iter().zip(&tri.eigenvalues) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn repeated_eigenvalues_give_orthonormal_basis() {
        let h = HermitianMatrix::from_real_diagonal(&[2.0, 2.0, 2.0, -1.0]);
        for method in [EigenMethod::Jacobi, EigenMethod::Tridiagonal] {
            let dec = hermitian_eigen_with(&h, method).unwrap();
            check_invariants(&h, &dec);
        }
    }

    #[test]
    fn inertia_examples() {
        let i = inertia(&HermitianMatrix::from_real_diagonal(&[-1.0, 0.0, 2.0]), 1e-9).unwrap();
        assert_eq!((i.negative, i.zero, i.positive), (1, 1, 1));
        let i = inertia(&HermitianMatrix::identity(4), 1e-9).unwrap();
        assert_eq!((i.negative, i.zero, i.positive), (0, 0, 4));
        let i = inertia(&HermitianMatrix::from_real_diagonal(&[-5.0, -1e-15, 3.0, 7.0]), 1e-9).unwrap();
        assert_eq!((i.negative, i.zero, i.positive), (1, 1, 2));
    }

    #[test]
    fn generalized_simple_cases() {
        let f = HermitianMatrix::from_real_diagonal(&[2.0, -3.0]);
        let vals = generalized_eigenvalues(&f, &HermitianMatrix::identity(2)).unwrap();
        assert_eq!(vals, vec![-3.0, 2.0]);

        let f = random_hermitian(5, 11);
        let plain = hermitian_eigenvalues(&f).unwrap();
        let scaled = generalized_eigenvalues(&f, &HermitianMatrix::identity(5).scale(4.0)).unwrap();
        for (a, b) in plain.iter().zip(&scaled) {
            assert!((a / 4.0 - b).abs() < 1e-13);
        }
    }

    #[test]
    fn generalized_vectors_are_mass_orthonormal() {
        let f = random_hermitian(6, 21);
        let r = random_hermitian(6, 22);
        let m = HermitianMatrix::hermitize(r.as_matrix().adjoint().matmul(r.as_matrix()).unwrap())
            .add(&HermitianMatrix::identity(6))
            .unwrap();
        let dec = generalized_eigen(&f, &m).unwrap();
        let x = &dec.eigenvectors;
        let gram = m.congruence(x).unwrap();
        assert!(gram.as_matrix().sub(&Matrix::identity(6)).unwrap().max_abs() < 1e-10);
        for k in 0..6 {
            let v = dec.vector(k);
            let fv = f.as_matrix().matvec(&v).unwrap();
            let mv = m.as_matrix().matvec(&v).unwrap();
            let res: f64 = fv.iter().zip(&mv).map(|(a, b)| (a - b * dec.eigenvalues[k]).norm()).fold(0.0, f64::max);
            assert!(res < 1e-10);
        }
    }

    #[test]
    fn determinism_bitwise() {
        let h = random_hermitian(30, 99);
        let a = hermitian_eigenvalues(&h).unwrap();
        let b = hermitian_eigenvalues(&h).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
