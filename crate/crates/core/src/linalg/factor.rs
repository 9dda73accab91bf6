use num_complex::Complex64;

use super::{HermitianMatrix, Inertia, LinalgError, Matrix};

/// Relative pivot floor for [`cholesky`]: a pivot `≤ CHOLESKY_PIVOT_TOL·‖M‖_F` fails.
pub const CHOLESKY_PIVOT_TOL: f64 = 1e-12;

/// Lower-triangular `L` with `L L* = M`.
///
/// Work is confined to the profile of `M` (first nonzero per row), which
/// `L` inherits, so banded inputs factor in `O(n b²)`.
pub fn cholesky(m: &HermitianMatrix) -> Result<Matrix, LinalgError> {
    let n = m.dim();
    let floor = CHOLESKY_PIVOT_TOL * m.frobenius_norm();
    let first = profile(n, |i, j| m.get(i, j) != Complex64::new(0.0, 0.0));
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j).re;
        for k in first[j]..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > floor) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            if j < first[i] {
                continue;
            }
            let mut s = m.get(i, j);
            for k in first[i].max(first[j])..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Column of the first nonzero in each row of the lower triangle.
pub(crate) fn profile(n: usize, nonzero: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    (0..n).map(|i| (0..i).find(|&j| nonzero(i, j)).unwrap_or(i)).collect()
}

/// Real counterpart of [`cholesky`] on row-major data.
pub(crate) fn real_cholesky(n: usize, m: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let floor = CHOLESKY_PIVOT_TOL * m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let first = profile(n, |i, j| m[i * n + j] != 0.0);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in first[j]..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            if j < first[i] {
                continue;
            }
            let lo = first[i].max(first[j]);
            let s: f64 = (lo..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            l[i * n + j] = (m[i * n + j] - s) / djj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` in place for row-major lower-triangular `L` and `B`
/// with `cols` columns.
pub(crate) fn real_forward_substitute(n: usize, l: &[f64], b: &mut [f64], cols: usize) {
    let first = profile(n, |i, j| l[i * n + j] != 0.0);
    for i in 0..n {
        let (done, rest) = b.split_at_mut(i * cols);
        let row = &mut rest[..cols];
        for k in first[i]..i {
            let lik = l[i * n + k];
            if lik == 0.0 {
                continue;
            }
            for (x, y) in row.iter_mut().zip(&done[k * cols..(k + 1) * cols]) {
                *x -= lik * y;
            }
        }
        let d = l[i * n + i];
        row.iter_mut().for_each(|x| *x /= d);
    }
}

pub fn is_positive_definite(m: &HermitianMatrix) -> bool {
    cholesky(m).is_ok()
}

/// Inertia by symmetric-indefinite `L D L*` factorization with Bunch–Kaufman
/// pivoting. By Sylvester's law the counts equal those of the eigenvalues.
///
/// A 1×1 pivot `d` (or a 2×2 pivot eigenvalue) is classified as zero when
/// `|d| ≤ zero_tol·max(1, max|H_ij|)`.
pub fn sylvester_inertia(h: &HermitianMatrix, zero_tol: f64) -> Inertia {
    let n = h.dim();
    let mut a = h.as_matrix().clone();
    let scale = a.max_abs().max(1.0);
    let tiny = zero_tol * scale;
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut counts = Inertia { negative: 0, zero: 0, positive: 0 };
    let classify = |v: f64, counts: &mut Inertia| {
        if v < -tiny {
            counts.negative += 1;
        } else if v > tiny {
            counts.positive += 1;
        } else {
            counts.zero += 1;
        }
    };

    let mut k = 0;
    while k < n {
        let absakk = a[(k, k)].re.abs();
        let (imax, colmax) = ((k + 1)..n)
            .map(|i| (i, a[(i, k)].norm()))
            .fold((k, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });

        if absakk.max(colmax) <= f64::MIN_POSITIVE {
            classify(0.0, &mut counts);
            k += 1;
            continue;
        }

        let mut two_by_two = false;
        if absakk < alpha * colmax {
            let rowmax = (k..n)
                .filter(|&j| j != imax)
                .map(|j| a[(imax, j)].norm())
                .fold(0.0, f64::max);
            if absakk * rowmax >= alpha * colmax * colmax {
                // keep k
            } else if a[(imax, imax)].re.abs() >= alpha * rowmax {
                swap_symmetric(&mut a, k, imax);
            } else {
                swap_symmetric(&mut a, k + 1, imax);
                two_by_two = true;
            }
        }

        if !two_by_two {
            let d = a[(k, k)].re;
            classify(d, &mut counts);
            if d != 0.0 {
                for i in (k + 1)..n {
                    let lik = a[(i, k)] / d;
                    if lik == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in (k + 1)..n {
                        let akj = a[(k, j)];
                        a[(i, j)] -= lik * akj;
                    }
                }
            }
            k += 1;
        } else {
            let p = a[(k, k)].re;
            let q = a[(k + 1, k + 1)].re;
            let b = a[(k, k + 1)];
            let det = p * q - b.norm_sqr();
            // eigenvalues of the 2×2 pivot block
            let tr = p + q;
            let disc = ((p - q) * (p - q) * 0.25 + b.norm_sqr()).sqrt();
            classify(0.5 * tr - disc, &mut counts);
            classify(0.5 * tr + disc, &mut counts);
            if det != 0.0 {
                // D^{-1} = [[q, -b], [-conj b, p]] / det
                for i in (k + 2)..n {
                    let x = a[(i, k)];
                    let y = a[(i, k + 1)];
                    let l0 = (x * q - y * b.conj()) / det;
                    let l1 = (y * p - x * b) / det;
                    for j in (k + 2)..n {
                        let u = a[(k, j)];
                        let v = a[(k + 1, j)];
                        a[(i, j)] -= l0 * u + l1 * v;
                    }
                }
            }
            k += 2;
        }
    }
    counts
}

fn swap_symmetric(a: &mut Matrix, p: usize, q: usize) {
    if p == q {
        return;
    }
    let n = a.rows();
    for j in 0..n {
        let t = a[(p, j)];
        a[(p, j)] = a[(q, j)];
        a[(q, j)] = t;
    }
    for i in 0..n {
        let t = a[(i, p)];
        a[(i, p)] = a[(i, q)];
        a[(i, q)] = t;
    }
}

/// LU factorization with partial pivoting of a general square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(m: &Matrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::DimensionMismatch { expected: m.rows(), found: m.cols() });
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= f64::EPSILON * scale * n as f64 || pmax == 0.0 {
                return Err(LinalgError::Singular { column: k });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let t = lu[(k, j)];
                    lu[(i, j)] -= f * t;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.rows();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let t = self.lu[(i, k)] * x[k];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = self.lu[(i, k)] * x[k];
                x[i] -= t;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.lu.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            e[j] = Complex64::new(1.0, 0.0);
            inv.set_column(j, &self.solve(&e));
        }
        inv
    }
}

/// Solves `A x = b` for a general square `A`.
pub fn lu_solve(a: &Matrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch { expected: a.rows(), found: b.len() });
    }
    Ok(Lu::new(a)?.solve(b))
}

/// Solves `L X = B` in place for lower-triangular `L` (columns of `B`).
pub(crate) fn forward_substitute(l: &Matrix, b: &mut Matrix) {
    let n = l.rows();
    let cols = b.cols();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            if lik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..cols {
                let t = lik * b[(k, j)];
                b[(i, j)] -= t;
            }
        }
        let d = l[(i, i)];
        for j in 0..cols {
            b[(i, j)] /= d;
        }
    }
}

/// Solves `L* X = B` in place for lower-triangular `L`.
pub(crate) fn backward_substitute_adjoint(l: &Matrix, b: &mut Matrix) {
    let n = l.rows();
    let cols = b.cols();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            // (L*)[i][k] = conj(L[k][i])
            let u = l[(k, i)].conj();
            if u == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..cols {
                let t = u * b[(k, j)];
                b[(i, j)] -= t;
            }
        }
        let d = l[(i, i)].conj();
        for j in 0..cols {
            b[(i, j)] /= d;
        }
    }
}
