use num_complex::Complex64;
use serde::Serialize;

use super::{branch_values, negative_count, par_map, PencilError, PencilModel, DEFAULT_CLUSTER_TOL, DEFAULT_ZERO_TOL};
use crate::linalg;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateOptions {
    pub grid_step: f64,
    /// Root and multiplicity band, relative to each branch's scale
    /// `max(1, max_j |Λ_m(λ_j)|)` over the scan.
    pub zero_tol: f64,
    /// Roots closer than `cluster_tol·(1 + |λ|)` are merged.
    pub cluster_tol: f64,
    /// Bisection target width is `width_tol·(1 + |λ|)`.
    pub width_tol: f64,
    pub max_bisection: usize,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.05,
            zero_tol: DEFAULT_ZERO_TOL,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            width_tol: 1e-10,
            max_bisection: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoint {
    Start,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocatedEigenvalue {
    pub lambda0: f64,
    pub multiplicity: usize,
    /// 1-based indices `m` of the vanishing branches.
    pub branch_indices: Vec<usize>,
    /// `Λ_m(λ₀)` for each listed branch.
    pub branch_values: Vec<f64>,
    /// `M`-orthonormal basis of the numerical kernel of `F(λ₀)`.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// Achieved bracket width of the refinement.
    pub width: f64,
    /// False when the bisection budget ran out before the target width.
    pub converged: bool,
    /// Found as a touching zero without a sign change.
    pub tangential: bool,
    /// Set when the root lies within `cluster_tol` of an interval endpoint.
    pub near_endpoint: Option<Endpoint>,
    /// Counted under the half-open convention `[ξ₁, ξ₂)`.
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Location {
    pub xi1: f64,
    pub xi2: f64,
    /// Roots counted in `[ξ₁, ξ₂)`, ascending.
    pub roots: Vec<LocatedEigenvalue>,
    /// Roots just outside the interval but within `cluster_tol` of an endpoint.
    pub excluded: Vec<LocatedEigenvalue>,
    pub scan_points: usize,
}

impl Location {
    /// `𝒩(ξ₁, ξ₂)` with multiplicity.
    pub fn count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Count with every root near an endpoint flipped to the other side of it.
    pub fn alternative_count(&self) -> usize {
        let kept: usize = self.roots.iter().filter(|r| r.near_endpoint.is_none()).map(|r| r.multiplicity).sum();
        let flipped: usize = self.excluded.iter().map(|r| r.multiplicity).sum();
        kept + flipped
    }

    pub fn ambiguous(&self) -> bool {
        !self.excluded.is_empty() || self.roots.iter().any(|r| r.near_endpoint.is_some())
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    lambda: f64,
    branch: usize,
    width: f64,
    converged: bool,
    tangential: bool,
}

fn scan_grid(model: &dyn PencilModel, xi1: f64, xi2: f64, step: f64) -> Vec<f64> {
    let (sigma, tau) = model.lambda_interval();
    let k = ((xi2 - xi1) / step).ceil().max(1.0) as usize;
    let h = (xi2 - xi1) / k as f64;
    let mut lo = xi1 - h;
    if lo <= sigma {
        lo = 0.5 * (sigma + xi1);
    }
    let mut hi = xi2 + h;
    if hi >= tau {
        hi = 0.5 * (xi2 + tau);
    }
    let mut grid = Vec::with_capacity(k + 3);
    grid.push(lo);
    for j in 0..k {
        grid.push(xi1 + (xi2 - xi1) * j as f64 / k as f64);
    }
    grid.push(xi2);
    grid.push(hi);
    grid.dedup();
    grid
}

/// Bisection on the sign of `Λ_m`, using `Λ_m < 0 ⇔ ν_neg ≥ m`.
fn bisect(
    model: &dyn PencilModel,
    m: usize,
    mut lo: f64,
    mut hi: f64,
    options: &LocateOptions,
) -> Result<Candidate, PencilError> {
    let neg_lo = negative_count(model, lo)? >= m;
    let neg_hi = negative_count(model, hi)? >= m;
    if neg_lo == neg_hi {
        // The eigenvalue scan and the pivot signs disagree on a value within
        // rounding of zero: take the endpoint closer to zero.
        let vl = branch_values(model, lo)?[m - 1].abs();
        let vh = branch_values(model, hi)?[m - 1].abs();
        let lambda = if vl <= vh { lo } else { hi };
        return Ok(Candidate { lambda, branch: m, width: 0.0, converged: true, tangential: false });
    }
    let mut iterations = 0;
    while iterations < options.max_bisection {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= options.width_tol * (1.0 + mid.abs()) || mid <= lo || mid >= hi {
            break;
        }
        if (negative_count(model, mid)? >= m) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mid = 0.5 * (lo + hi);
    let width = hi - lo;
    let converged = width <= options.width_tol * (1.0 + mid.abs()) || iterations < options.max_bisection;
    Ok(Candidate { lambda: mid, branch: m, width, converged, tangential: false })
}

/// Looks inside `[l, r]` for the extremum of `Λ_m` toward zero. Returns
/// sign-change brackets if the branch crosses, or a tangential candidate.
fn refine_dip(
    model: &dyn PencilModel,
    m: usize,
    mut l: f64,
    mut r: f64,
    positive: bool,
    band: f64,
    options: &LocateOptions,
) -> Result<Vec<Candidate>, PencilError> {
    let (l0, r0) = (l, r);
    let value = |x: f64| -> Result<f64, PencilError> {
        let v = branch_values(model, x)?[m - 1];
        Ok(if positive { v } else { -v })
    };
    let mut x1 = r - GOLDEN * (r - l);
    let mut x2 = l + GOLDEN * (r - l);
    let mut f1 = value(x1)?;
    let mut f2 = value(x2)?;
    let mut iterations = 0;
    while r - l > options.width_tol * (1.0 + l.abs()) && iterations < options.max_bisection {
        if f1.min(f2) < 0.0 {
            let x = if f1 < f2 { x1 } else { x2 };
            let mut out = vec![bisect(model, m, l0, x, options)?];
            out.push(bisect(model, m, x, r0, options)?);
            return Ok(out);
        }
        if f1 < f2 {
            r = x2;
            x2 = x1;
            f2 = f1;
            x1 = r - GOLDEN * (r - l);
            f1 = value(x1)?;
        } else {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + GOLDEN * (r - l);
            f2 = value(x2)?;
        }
        iterations += 1;
    }
    let (x, f) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if f.abs() <= band {
        Ok(vec![Candidate { lambda: x, branch: m, width: r - l, converged: true, tangential: true }])
    } else {
        Ok(Vec::new())
    }
}

/// Eigenvalues of the operator-function in `[ξ₁, ξ₂)`, with multiplicity.
pub fn locate_eigenvalues(
    model: &dyn PencilModel,
    xi1: f64,
    xi2: f64,
    options: &LocateOptions,
) -> Result<Location, PencilError> {
    if !(xi1 < xi2) {
        return Err(PencilError::InvalidInput(format!("empty interval [{xi1}, {xi2})")));
    }
    model.check_lambda(xi1)?;
    model.check_lambda(xi2)?;
    if !(options.grid_step > 0.0) || (xi2 - xi1) / options.grid_step > 1e7 {
        return Err(PencilError::InvalidInput(format!("grid step {} is not usable", options.grid_step)));
    }
    for (name, v) in [("zero_tol", options.zero_tol), ("cluster_tol", options.cluster_tol), ("width_tol", options.width_tol)] {
        if !(v > 0.0) {
            return Err(PencilError::InvalidInput(format!("{name} must be positive")));
        }
    }
    let grid = scan_grid(model, xi1, xi2, options.grid_step);
    let values: Vec<Vec<f64>> = par_map(&grid, |&l| branch_values(model, l)).into_iter().collect::<Result<_, _>>()?;
    let dim = values.iter().map(Vec::len).min().unwrap_or(0);
    let scale: Vec<f64> = (0..dim).map(|m| values.iter().map(|c| c[m].abs()).fold(1.0, f64::max)).collect();

    // brackets and dips per branch, refined independently
    #[derive(Clone, Copy)]
    enum Task {
        Bracket { m: usize, lo: f64, hi: f64 },
        Dip { m: usize, lo: f64, hi: f64, positive: bool },
    }
    let mut tasks = Vec::new();
    for m in 0..dim {
        let b: Vec<f64> = values.iter().map(|c| c[m]).collect();
        for j in 0..grid.len() - 1 {
            if (b[j] < 0.0) != (b[j + 1] < 0.0) {
                tasks.push(Task::Bracket { m: m + 1, lo: grid[j], hi: grid[j + 1] });
            }
        }
        for j in 1..grid.len() - 1 {
            let (p, c, n) = (b[j - 1], b[j], b[j + 1]);
            let same_sign = (p < 0.0) == (c < 0.0) && (c < 0.0) == (n < 0.0);
            let (ap, ac, an) = (p.abs(), c.abs(), n.abs());
            let local_min = ac <= ap && ac <= an && (ac < ap || ac < an);
            if same_sign && local_min && ac <= (ap - ac) + (an - ac) {
                tasks.push(Task::Dip { m: m + 1, lo: grid[j - 1], hi: grid[j + 1], positive: c >= 0.0 });
            }
        }
    }
    let refined: Vec<Result<Vec<Candidate>, PencilError>> = par_map(&tasks, |t| match *t {
        Task::Bracket { m, lo, hi } => bisect(model, m, lo, hi, options).map(|c| vec![c]),
        Task::Dip { m, lo, hi, positive } => {
            refine_dip(model, m, lo, hi, positive, options.zero_tol * scale[m - 1], options)
        }
    });
    let mut candidates = Vec::new();
    for r in refined {
        candidates.extend(r?);
    }
    candidates.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.branch.cmp(&b.branch)));

    let mut groups: Vec<Vec<Candidate>> = Vec::new();
    for c in candidates {
        match groups.last_mut() {
            Some(g) if c.lambda - g[0].lambda <= options.cluster_tol * (1.0 + c.lambda.abs()) => g.push(c),
            _ => groups.push(vec![c]),
        }
    }

    let mut roots = Vec::new();
    let mut excluded = Vec::new();
    for g in groups {
        let lambda0 = g.iter().map(|c| c.lambda).sum::<f64>() / g.len() as f64;
        let near = |e: f64| (lambda0 - e).abs() <= options.cluster_tol * (1.0 + e.abs());
        let near_endpoint = if near(xi1) {
            Some(Endpoint::Start)
        } else if near(xi2) {
            Some(Endpoint::End)
        } else {
            None
        };
        let inside = lambda0 >= xi1 && lambda0 < xi2;
        if !inside && near_endpoint.is_none() {
            continue;
        }
        let (f, mass) = model.eval_form(lambda0)?;
        let dec = linalg::generalized_eigen(&f, &mass)?;
        let mut listed: Vec<usize> = (0..dec.dim().min(dim))
            .filter(|&m| dec.eigenvalues[m].abs() <= options.zero_tol * scale[m])
            .map(|m| m + 1)
            .collect();
        for c in &g {
            if !listed.contains(&c.branch) {
                listed.push(c.branch);
            }
        }
        listed.sort_unstable();
        let root = LocatedEigenvalue {
            lambda0,
            multiplicity: listed.len(),
            branch_values: listed.iter().map(|&m| dec.eigenvalues[m - 1]).collect(),
            eigenvectors: listed.iter().map(|&m| dec.vector(m - 1)).collect(),
            branch_indices: listed,
            width: g.iter().map(|c| c.width).fold(0.0, f64::max),
            converged: g.iter().all(|c| c.converged),
            tangential: g.iter().all(|c| c.tangential),
            near_endpoint,
            inside,
        };
        if inside {
            roots.push(root);
        } else {
            excluded.push(root);
        }
    }
    Ok(Location { xi1, xi2, roots, excluded, scan_points: grid.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianMatrix;
    use crate::pencil::PolynomialPencil;

    fn diag(v: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(v)
    }

    #[test]
    fn diagonal_family_roots() {
        let m = PolynomialPencil::standard(vec![diag(&[1.0, 4.0]), diag(&[-1.0, -1.0])], (-10.0, 10.0)).unwrap();
        let loc = locate_eigenvalues(&m, 0.0, 5.0, &LocateOptions::default()).unwrap();
        assert_eq!(loc.roots.len(), 2);
        assert!((loc.roots[0].lambda0 - 1.0).abs() < 1e-9);
        assert!((loc.roots[1].lambda0 - 4.0).abs() < 1e-9);
        assert!(loc.roots.iter().all(|r| r.multiplicity == 1 && r.converged));
        assert_eq!(loc.roots[0].branch_indices, vec![1]);
        assert_eq!(loc.roots[1].branch_indices, vec![2]);
        assert_eq!(loc.count(), 2);
        assert!(!loc.ambiguous());
    }

    #[test]
    fn double_root() {
        let m = PolynomialPencil::standard(vec![diag(&[1.0, 1.0]), diag(&[-1.0, -1.0])], (-10.0, 10.0)).unwrap();
        let loc = locate_eigenvalues(&m, 0.0, 2.0, &LocateOptions::default()).unwrap();
        assert_eq!(loc.roots.len(), 1);
        assert_eq!(loc.roots[0].multiplicity, 2);
        assert_eq!(loc.roots[0].eigenvectors.len(), 2);
    }

    #[test]
    fn scalar_quadratic_roots() {
        // (λ−2)² − 1 = 3 − 4λ + λ²
        let m = PolynomialPencil::standard(vec![diag(&[3.0]), diag(&[-4.0]), diag(&[1.0])], (0.0, 4.0)).unwrap();
        let loc = locate_eigenvalues(&m, 0.5, 3.5, &LocateOptions::default()).unwrap();
        let lambdas: Vec<f64> = loc.roots.iter().map(|r| r.lambda0).collect();
        assert_eq!(lambdas.len(), 2);
        assert!((lambdas[0] - 1.0).abs() < 1e-9 && (lambdas[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn tangential_root_is_counted() {
        // (λ − 1.013)², touching zero between grid points
        let c = 1.013;
        let m = PolynomialPencil::standard(vec![diag(&[c * c]), diag(&[-2.0 * c]), diag(&[1.0])], (-5.0, 5.0)).unwrap();
        let loc = locate_eigenvalues(&m, 0.0, 2.0, &LocateOptions::default()).unwrap();
        assert_eq!(loc.roots.len(), 1);
        let r = &loc.roots[0];
        assert!((r.lambda0 - c).abs() < 1e-3);
        assert_eq!(r.multiplicity, 1);
    }

    #[test]
    fn two_roots_inside_one_grid_cell_are_separated() {
        // (λ − 1.01)(λ − 1.02): both roots between consecutive grid points
        let (p, q) = (1.01, 1.02);
        let m = PolynomialPencil::standard(vec![diag(&[p * q]), diag(&[-(p + q)]), diag(&[1.0])], (-5.0, 5.0)).unwrap();
        let loc = locate_eigenvalues(&m, 0.0, 2.0, &LocateOptions::default()).unwrap();
        assert_eq!(loc.roots.len(), 2, "{:?}", loc.roots);
        assert!((loc.roots[0].lambda0 - p).abs() < 1e-9);
        assert!((loc.roots[1].lambda0 - q).abs() < 1e-9);
    }

    #[test]
    fn half_open_convention() {
        let m = PolynomialPencil::standard(vec![diag(&[1.0, 4.0]), diag(&[-1.0, -1.0])], (-10.0, 10.0)).unwrap();
        let loc = locate_eigenvalues(&m, 1.0, 4.0, &LocateOptions::default()).unwrap();
        assert_eq!(loc.count(), 1);
        assert!((loc.roots[0].lambda0 - 1.0).abs() < 1e-9);
        assert_eq!(loc.roots[0].near_endpoint, Some(Endpoint::Start));
        assert_eq!(loc.excluded.len(), 1);
        assert_eq!(loc.excluded[0].near_endpoint, Some(Endpoint::End));
        assert!(loc.ambiguous());
        assert_eq!(loc.alternative_count(), 1);
    }

    #[test]
    fn rejects_bad_intervals() {
        let m = PolynomialPencil::standard(vec![diag(&[1.0])], (0.0, 1.0)).unwrap();
        let o = LocateOptions::default();
        assert!(locate_eigenvalues(&m, 0.5, 0.5, &o).is_err());
        assert!(locate_eigenvalues(&m, 0.0, 0.5, &o).is_err());
        assert!(locate_eigenvalues(&m, 0.2, 1.0, &o).is_err());
    }
}
