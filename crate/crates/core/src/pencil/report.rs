use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    locate_eigenvalues, nu, uniform_grid, HypothesisCheck, LocateOptions, LocatedEigenvalue, Location, PencilError,
    PencilModel, DEFAULT_INERTIA_TOL,
};
use crate::linalg::{self, Inertia};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub locate: LocateOptions,
    pub inertia_tol: f64,
    /// Uniform sample count over `[ξ₁, ξ₂]` for the monotonicity check.
    pub monotone_samples: usize,
    /// Negative type requires `y*F′y < −type_tol` for `M`-unit kernel vectors.
    pub type_tol: f64,
    pub seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            locate: LocateOptions::default(),
            inertia_tol: DEFAULT_INERTIA_TOL,
            monotone_samples: 16,
            type_tol: 1e-9,
            seed: 0x5eed_c0de,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Pass { strict: bool },
    Fail { detail: String },
    RefutedHypothesis { detail: String },
    FailHypothesis { lambda: f64, value: f64 },
    NotApplicable { reason: String },
}

impl Verdict {
    /// A counting contradiction, as opposed to a hypothesis not holding.
    pub fn is_failure(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass { strict: false } => write!(f, "PASS"),
            Verdict::Pass { strict: true } => write!(f, "PASS (strict)"),
            Verdict::Fail { .. } => write!(f, "FAIL"),
            Verdict::RefutedHypothesis { .. } => write!(f, "REFUTED-HYPOTHESIS"),
            Verdict::FailHypothesis { lambda, .. } => write!(f, "FAIL-HYPOTHESIS at λ={}", short(*lambda)),
            Verdict::NotApplicable { .. } => write!(f, "N/A"),
        }
    }
}

/// Compact display of a located value: rounds away bisection noise.
fn short(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum MonotoneOutcome {
    /// `F(λ₁) − F(λ₂)` was positive definite for every consecutive pair.
    Certificate { pairs: usize },
    Refutation {
        lambda1: f64,
        lambda2: f64,
        min_eigenvalue: f64,
        #[serde(skip)]
        witness: Vec<Complex64>,
    },
}

/// Positive definiteness of `F(λ₁) − F(λ₂)` over consecutive sample pairs;
/// a refutation carries the pair with the most negative eigenvalue.
pub fn check_monotone(model: &dyn PencilModel, samples: &[f64]) -> Result<MonotoneOutcome, PencilError> {
    if samples.len() < 2 {
        return Err(PencilError::InvalidInput("monotonicity needs at least two samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let forms = sorted.iter().map(|&l| model.eval_form(l).map(|(f, _)| f)).collect::<Result<Vec<_>, _>>()?;
    // report the most negative failing pair, not just the first one
    let mut worst: Option<MonotoneOutcome> = None;
    for i in 0..forms.len() - 1 {
        if forms[i].dim() != forms[i + 1].dim() {
            return Err(PencilError::DimensionChange { expected: forms[i].dim(), found: forms[i + 1].dim() });
        }
        let diff = forms[i].sub(&forms[i + 1])?;
        if linalg::cholesky(&diff).is_err() {
            let dec = linalg::hermitian_eigen(&diff)?;
            let better = match &worst {
                Some(MonotoneOutcome::Refutation { min_eigenvalue, .. }) => dec.eigenvalues[0] < *min_eigenvalue,
                _ => true,
            };
            if better {
                worst = Some(MonotoneOutcome::Refutation {
                    lambda1: sorted[i],
                    lambda2: sorted[i + 1],
                    min_eigenvalue: dec.eigenvalues[0],
                    witness: dec.vector(0),
                });
            }
        }
    }
    if let Some(refutation) = worst {
        return Ok(refutation);
    }
    Ok(MonotoneOutcome::Certificate { pairs: forms.len() - 1 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeTypeOutcome {
    pub lambda0: f64,
    /// `y*F′(λ₀)y` for the kernel basis, then for the random combinations.
    pub values: Vec<f64>,
    pub max_value: f64,
    pub pass: bool,
}

/// Sign test of `F′(λ₀)` on the kernel at a located root, over the kernel
/// basis and 8 seeded random unit combinations of it. `None` without a
/// derivative.
pub fn check_negative_type(
    model: &dyn PencilModel,
    located: &LocatedEigenvalue,
    type_tol: f64,
    seed: u64,
) -> Result<Option<NegativeTypeOutcome>, PencilError> {
    let Some(derivative) = model.eval_form_derivative(located.lambda0) else {
        return Ok(None);
    };
    let fp = derivative?;
    let basis = &located.eigenvectors;
    if basis.is_empty() {
        return Err(PencilError::InvalidInput("located eigenvalue carries no kernel vectors".into()));
    }
    let mut vectors = basis.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ located.lambda0.to_bits());
    for _ in 0..8 {
        let mut coeffs: Vec<Complex64> =
            (0..basis.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = linalg::norm(&coeffs);
        if norm == 0.0 {
            coeffs[0] = Complex64::new(1.0, 0.0);
        } else {
            coeffs.iter_mut().for_each(|c| *c /= norm);
        }
        let dim = basis[0].len();
        let y = (0..dim).map(|i| basis.iter().zip(&coeffs).map(|(v, c)| v[i] * c).sum()).collect();
        vectors.push(y);
    }
    let values = vectors.iter().map(|y| fp.quadratic_form(y)).collect::<Result<Vec<_>, _>>()?;
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Some(NegativeTypeOutcome { lambda0: located.lambda0, pass: max_value < -type_tol, values, max_value }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub xi1: f64,
    pub xi2: f64,
    /// Located eigenvalues in `[ξ₁, ξ₂)` with multiplicity.
    pub n: usize,
    /// Count with endpoint-adjacent roots flipped, when that differs.
    pub alternative_n: Option<usize>,
    pub nu_at_xi1: Inertia,
    pub nu_at_xi2: Inertia,
    pub location: Location,
    /// `N ≥ ν(ξ₂) − ν(ξ₁)`, always evaluated.
    pub lower_bound: Verdict,
    /// Equality when `F` is decreasing in `λ`.
    pub monotone_equality: Verdict,
    /// Equality when every eigenvalue is of negative type.
    pub negative_type_equality: Verdict,
    pub monotone: Option<MonotoneOutcome>,
    pub negative_type: Vec<NegativeTypeOutcome>,
    pub hypotheses: Vec<HypothesisCheck>,
    pub caveats: Vec<String>,
}

impl CountReport {
    pub fn delta_nu(&self) -> i64 {
        self.nu_at_xi2.negative as i64 - self.nu_at_xi1.negative as i64
    }

    pub fn verdicts(&self) -> [(&'static str, &Verdict); 3] {
        [
            ("lower-bound", &self.lower_bound),
            ("monotone-equality", &self.monotone_equality),
            ("negative-type-equality", &self.negative_type_equality),
        ]
    }

    pub fn has_failure(&self) -> bool {
        self.verdicts().iter().any(|(_, v)| v.is_failure())
    }

    /// Human-readable report; `full` adds hypothesis detail and all verdicts.
    pub fn render(&self, full: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "interval: [{}, {})", self.xi1, self.xi2);
        let _ = writeln!(s, "N = {}", self.n);
        if let Some(alt) = self.alternative_n {
            let _ = writeln!(s, "N (endpoint roots flipped) = {alt}");
        }
        let _ = writeln!(
            s,
            "nu: {} -> {} (delta {})",
            self.nu_at_xi1.negative,
            self.nu_at_xi2.negative,
            self.delta_nu()
        );
        let _ = writeln!(
            s,
            "inertia at xi1: ({}, {}, {}); at xi2: ({}, {}, {})",
            self.nu_at_xi1.negative,
            self.nu_at_xi1.zero,
            self.nu_at_xi1.positive,
            self.nu_at_xi2.negative,
            self.nu_at_xi2.zero,
            self.nu_at_xi2.positive
        );
        for r in &self.location.roots {
            let _ = writeln!(
                s,
                "root: lambda = {:.12} multiplicity {} branches {:?}{}{}",
                r.lambda0,
                r.multiplicity,
                r.branch_indices,
                if r.tangential { " (tangential)" } else { "" },
                if r.converged { "" } else { " (bisection budget exhausted)" }
            );
        }
        let _ = writeln!(s, "verdict lower-bound (N >= delta nu): {}", self.lower_bound);
        if full {
            let _ = writeln!(s, "verdict monotone-equality: {}", self.monotone_equality);
            let _ = writeln!(s, "verdict negative-type-equality: {}", self.negative_type_equality);
            for (name, v) in self.verdicts() {
                match v {
                    Verdict::Fail { detail } | Verdict::RefutedHypothesis { detail } => {
                        let _ = writeln!(s, "  {name}: {detail}");
                    }
                    Verdict::FailHypothesis { lambda, value } => {
                        let _ = writeln!(s, "  {name}: y*F'y = {value:.6e} at lambda = {lambda:.12}");
                    }
                    Verdict::NotApplicable { reason } => {
                        let _ = writeln!(s, "  {name}: {reason}");
                    }
                    Verdict::Pass { .. } => {}
                }
            }
            for h in &self.hypotheses {
                let _ = writeln!(s, "hypothesis {}: {} ({})", h.name, if h.holds { "holds" } else { "fails" }, h.detail);
            }
        }
        for c in &self.caveats {
            let _ = writeln!(s, "caveat: {c}");
        }
        s
    }
}

fn lower_bound_verdict(n: usize, delta: i64) -> Verdict {
    if n as i64 >= delta {
        Verdict::Pass { strict: (n as i64) > delta }
    } else {
        Verdict::Fail { detail: format!("N = {n} < delta nu = {delta}") }
    }
}

fn equality_verdict(n: usize, delta: i64) -> Verdict {
    if n as i64 == delta {
        Verdict::Pass { strict: false }
    } else {
        Verdict::Fail { detail: format!("N = {n} but delta nu = {delta}") }
    }
}

/// `𝒩(ξ₁, ξ₂)`, the endpoint inertias, and the three counting verdicts.
pub fn count_report(
    model: &dyn PencilModel,
    xi1: f64,
    xi2: f64,
    options: &ReportOptions,
) -> Result<CountReport, PencilError> {
    let location = locate_eigenvalues(model, xi1, xi2, &options.locate)?;
    let nu1 = nu(model, xi1, options.inertia_tol)?;
    let nu2 = nu(model, xi2, options.inertia_tol)?;
    let n = location.count();
    let delta = nu2.negative as i64 - nu1.negative as i64;
    let metadata = model.metadata();
    let mut caveats = metadata.warnings.clone();
    let alternative_n = location.ambiguous().then(|| location.alternative_count()).filter(|&a| a != n);
    if nu1.zero > 0 || nu2.zero > 0 || location.ambiguous() {
        caveats.push("endpoint on eigenvalue: counts under both conventions are reported".into());
    }
    if location.roots.iter().any(|r| !r.converged) {
        caveats.push("a root refinement exhausted its bisection budget".into());
    }

    let mut lower_bound = lower_bound_verdict(n, delta);
    if let (Some(alt), Verdict::Pass { .. }) = (alternative_n, &lower_bound) {
        if let Verdict::Fail { detail } = lower_bound_verdict(alt, delta) {
            caveats.push(format!("lower bound fails under the flipped endpoint convention: {detail}"));
        }
    }
    if let Verdict::Fail { detail } = &lower_bound {
        if alternative_n.is_some_and(|alt| alt as i64 >= delta) {
            lower_bound = Verdict::Fail { detail: format!("{detail} (holds under the flipped endpoint convention)") };
        }
    }

    let (monotone, monotone_equality) = if !metadata.domain_constant {
        (None, Verdict::NotApplicable { reason: "form domain depends on lambda".into() })
    } else {
        let samples = uniform_grid(xi1, xi2, options.monotone_samples.max(2));
        let outcome = check_monotone(model, &samples)?;
        let verdict = match &outcome {
            MonotoneOutcome::Certificate { .. } => equality_verdict(n, delta),
            MonotoneOutcome::Refutation { lambda1, lambda2, min_eigenvalue, .. } => Verdict::RefutedHypothesis {
                detail: format!(
                    "F({}) - F({}) has eigenvalue {:.6e}",
                    short(*lambda1),
                    short(*lambda2),
                    min_eigenvalue
                ),
            },
        };
        (Some(outcome), verdict)
    };

    let mut negative_type = Vec::new();
    let negative_type_equality = if !model.has_derivative() {
        Verdict::NotApplicable { reason: "no derivative F'(lambda) supplied".into() }
    } else if !metadata.domain_constant {
        Verdict::NotApplicable { reason: "form domain depends on lambda".into() }
    } else {
        let mut failed = None;
        for root in &location.roots {
            if let Some(outcome) = check_negative_type(model, root, options.type_tol, options.seed)? {
                if !outcome.pass && failed.is_none() {
                    failed = Some((outcome.lambda0, outcome.max_value));
                }
                negative_type.push(outcome);
            }
        }
        match failed {
            Some((lambda, value)) => Verdict::FailHypothesis { lambda, value },
            None => equality_verdict(n, delta),
        }
    };

    Ok(CountReport {
        xi1,
        xi2,
        n,
        alternative_n,
        nu_at_xi1: nu1,
        nu_at_xi2: nu2,
        location,
        lower_bound,
        monotone_equality,
        negative_type_equality,
        monotone,
        negative_type,
        hypotheses: metadata.hypotheses,
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianMatrix;
    use crate::pencil::PolynomialPencil;

    fn diag(v: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(v)
    }

    fn scalar_quadratic() -> PolynomialPencil {
        PolynomialPencil::standard(vec![diag(&[3.0]), diag(&[-4.0]), diag(&[1.0])], (0.0, 4.0)).unwrap()
    }

    #[test]
    fn diagonal_family_report() {
        let m = PolynomialPencil::standard(vec![diag(&[1.0, 4.0]), diag(&[-1.0, -1.0])], (-10.0, 10.0)).unwrap();
        let r = count_report(&m, 0.0, 5.0, &ReportOptions::default()).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!((r.nu_at_xi1.negative, r.nu_at_xi2.negative), (0, 2));
        assert_eq!(r.lower_bound, Verdict::Pass { strict: false });
        assert_eq!(r.monotone_equality, Verdict::Pass { strict: false });
        assert_eq!(r.negative_type_equality, Verdict::Pass { strict: false });
        assert!(matches!(r.monotone, Some(MonotoneOutcome::Certificate { .. })));
        assert!(!r.has_failure());
    }

    #[test]
    fn scalar_quadratic_is_strict_and_fails_hypotheses() {
        let r = count_report(&scalar_quadratic(), 0.5, 3.5, &ReportOptions::default()).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.delta_nu(), 0);
        assert_eq!(r.lower_bound.to_string(), "PASS (strict)");
        assert_eq!(r.monotone_equality.to_string(), "REFUTED-HYPOTHESIS");
        assert_eq!(r.negative_type_equality.to_string(), "FAIL-HYPOTHESIS at λ=3");
        let at1 = &r.negative_type[0];
        let at3 = &r.negative_type[1];
        assert!(at1.pass && (at1.max_value + 2.0).abs() < 1e-8);
        assert!(!at3.pass && (at3.max_value - 2.0).abs() < 1e-8);
        assert!(!r.has_failure());
    }

    #[test]
    fn monotone_check_examples() {
        let m = PolynomialPencil::new(
            vec![diag(&[1.0, -2.0]), HermitianMatrix::from_real(2, &[-2.0, -0.5, -0.5, -1.0]).unwrap()],
            diag(&[1.0, 1.0]),
            (-5.0, 5.0),
        )
        .unwrap();
        assert!(matches!(check_monotone(&m, &[0.0, 1.0, 2.0]).unwrap(), MonotoneOutcome::Certificate { pairs: 2 }));
        match check_monotone(&scalar_quadratic(), &[1.9, 2.1]).unwrap() {
            MonotoneOutcome::Refutation { min_eigenvalue, witness, .. } => {
                assert!(min_eigenvalue.abs() < 1e-12);
                assert_eq!(witness.len(), 1);
            }
            other => panic!("{other:?}"),
        }
        // (λ − 2)² − 1 sampled on [0.5, 3.5]: the worst pair is (3.3, 3.5)
        match check_monotone(&scalar_quadratic(), &uniform_grid(0.5, 3.5, 16)).unwrap() {
            MonotoneOutcome::Refutation { lambda1, lambda2, min_eigenvalue, .. } => {
                assert!((lambda1 - 3.3).abs() < 1e-12 && lambda2 == 3.5);
                assert!((min_eigenvalue + 0.56).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(check_monotone(&m, &[1.0]).is_err());
    }

    #[test]
    fn increasing_branch_fails_negative_type() {
        // diag(λ − 1, 2 − λ) at λ = 1: kernel e₁, F′ = diag(1, −1)
        let m = PolynomialPencil::standard(vec![diag(&[-1.0, 2.0]), diag(&[1.0, -1.0])], (-5.0, 5.0)).unwrap();
        let loc = locate_eigenvalues(&m, 0.5, 1.5, &LocateOptions::default()).unwrap();
        let outcome = check_negative_type(&m, &loc.roots[0], 1e-9, 1).unwrap().unwrap();
        assert!(!outcome.pass);
        assert!((outcome.values[0] - 1.0).abs() < 1e-12);
        assert_eq!(outcome.values.len(), 9);
    }

    #[test]
    fn verdict_strings() {
        assert_eq!(Verdict::Pass { strict: false }.to_string(), "PASS");
        assert_eq!(Verdict::Fail { detail: String::new() }.to_string(), "FAIL");
        assert_eq!(Verdict::NotApplicable { reason: String::new() }.to_string(), "N/A");
        assert_eq!(Verdict::FailHypothesis { lambda: 2.9999999999, value: 2.0 }.to_string(), "FAIL-HYPOTHESIS at λ=3");
    }
}
