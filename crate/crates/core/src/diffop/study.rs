//! Mesh-doubling study of the located roots.

use serde::Serialize;

use super::{compile, DiffopError, DifferentialProblem};
use crate::pencil::{locate_eigenvalues, LocateOptions};

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub meshes: Vec<usize>,
    /// `roots[level]`, sorted.
    pub roots: Vec<Vec<f64>>,
    /// Expected eigenvalue convergence order `2(p + 1 − n)` for degree `p`.
    pub order: usize,
    /// Richardson extrapolation of the two finest levels, root by root;
    /// empty when their root counts differ.
    pub extrapolated: Vec<f64>,
    /// `log2(|r₁ − r₀| / |r₂ − r₁|)` from the three finest levels.
    pub observed_order: Vec<Option<f64>>,
}

/// Locates roots in `[ξ₁, ξ₂)` on `levels` meshes, doubling from the
/// problem's own.
pub fn convergence_study(
    problem: &DifferentialProblem,
    xi1: f64,
    xi2: f64,
    levels: usize,
    opts: &LocateOptions,
) -> Result<ConvergenceStudy, DiffopError> {
    if levels < 2 {
        return Err(DiffopError::InvalidProblem("a convergence study needs at least 2 levels".into()));
    }
    let mut meshes = Vec::with_capacity(levels);
    let mut roots = Vec::with_capacity(levels);
    let mut order = 0;
    for level in 0..levels {
        let mesh = problem.mesh() << level;
        let model = compile(&problem.clone().with_mesh(mesh)?)?;
        order = 2 * (model.basis().degree() + 1 - problem.n());
        let location = locate_eigenvalues(&model, xi1, xi2, opts)?;
        let mut r: Vec<f64> = location.roots.iter().filter(|r| r.inside).map(|r| r.lambda0).collect();
        r.sort_by(f64::total_cmp);
        meshes.push(mesh);
        roots.push(r);
    }
    let fine = &roots[levels - 1];
    let coarse = &roots[levels - 2];
    let factor = 2f64.powi(order as i32) - 1.0;
    let extrapolated = if fine.len() == coarse.len() {
        fine.iter().zip(coarse).map(|(f, c)| f + (f - c) / factor).collect()
    } else {
        Vec::new()
    };
    let observed_order = if levels >= 3 && roots[levels - 3].len() == fine.len() && coarse.len() == fine.len() {
        (0..fine.len())
            .map(|j| {
                let d1 = (coarse[j] - roots[levels - 3][j]).abs();
                let d2 = (fine[j] - coarse[j]).abs();
                (d1 > 0.0 && d2 > 0.0).then(|| (d1 / d2).log2())
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(ConvergenceStudy { meshes, roots, order, extrapolated, observed_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::UnitaryBoundary;
    use crate::diffop::parse_expression;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_roots_converge_to_squares() {
        // a coarse mesh so the discretization error is visible
        let p = DifferentialProblem::new(
            1,
            (0.0, PI),
            (-1.0, 20.0),
            vec![parse_expression("1").unwrap(), parse_expression("-lambda").unwrap()],
            None,
            UnitaryBoundary::identity(1),
            4,
        )
        .unwrap();
        let s = convergence_study(&p, 0.5, 17.0, 3, &LocateOptions::default()).unwrap();
        assert_eq!(s.meshes, vec![4, 8, 16]);
        assert_eq!(s.order, 6);
        for (m, r) in s.extrapolated.iter().enumerate() {
            let exact = ((m + 1) * (m + 1)) as f64;
            assert!((r - exact).abs() <= (s.roots[2][m] - exact).abs() + 1e-12);
            assert!(s.roots[0][m] >= s.roots[1][m] - 1e-9 && s.roots[1][m] >= exact - 1e-9);
        }
        assert_eq!(s.extrapolated.len(), 4);
    }
}
