//! Browser bindings for the static demo page.
//!
//! Each operation takes a JSON run config (the same format as the CLI) and
//! returns JSON. The `*_json` functions are the plain-Rust core; the
//! `wasm_bindgen` exports only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use spectral_count::cli::{parse_config, ProblemSpec, RunConfig};
use spectral_count::diffop::{compile, DifferentialModel};
use spectral_count::pencil::{
    branch_table, count_report, nu_scan, uniform_grid, PencilModel, PolynomialPencil, ReportOptions,
    DEFAULT_INERTIA_TOL,
};

/// Upper bound on plotted branches, to keep the canvas readable.
const MAX_BRANCHES: usize = 8;
const MAX_STEPS: usize = 2001;

enum Model {
    Abstract(PolynomialPencil),
    Differential(Box<DifferentialModel>),
}

impl Model {
    fn build(config: &RunConfig) -> Result<Self, String> {
        Ok(match &config.problem {
            ProblemSpec::Abstract(p) => Model::Abstract(p.clone()),
            ProblemSpec::Differential(p) => Model::Differential(Box::new(compile(p).map_err(|e| e.to_string())?)),
        })
    }

    fn as_dyn(&self) -> &dyn PencilModel {
        match self {
            Model::Abstract(p) => p,
            Model::Differential(d) => d.as_ref(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BranchView {
    pub lambda: Vec<f64>,
    /// `branches[m][j]` is `Λ_{m+1}(lambda[j])`.
    pub branches: Vec<Vec<f64>>,
    pub nu: Vec<usize>,
    pub dim: usize,
    pub interval: (f64, f64),
}

#[derive(Debug, Serialize)]
pub struct RootView {
    pub lambda0: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Serialize)]
pub struct CountView {
    pub xi1: f64,
    pub xi2: f64,
    pub n: usize,
    pub nu_xi1: usize,
    pub nu_xi2: usize,
    pub roots: Vec<RootView>,
    /// `(name, verdict)` pairs in report order.
    pub verdicts: Vec<(String, String)>,
    pub report: String,
}

fn load(config: &str) -> Result<RunConfig, String> {
    parse_config(config).map_err(|e| e.to_string())
}

/// Branch curves and negative counts on `steps` points of the config's grid.
pub fn branches_json(config: &str, steps: usize) -> Result<String, String> {
    let config = load(config)?;
    let model = Model::build(&config)?;
    let model = model.as_dyn();
    let steps = steps.clamp(2, MAX_STEPS);
    let grid = uniform_grid(config.lambda_grid.start, config.lambda_grid.stop, steps);
    let lambda0 = grid[0];
    let dim = spectral_count::pencil::branch_values(model, lambda0).map_err(|e| e.to_string())?.len();
    let m = config.branches.unwrap_or(MAX_BRANCHES).min(dim).min(MAX_BRANCHES);
    let table = branch_table(model, &grid, m).map_err(|e| e.to_string())?;
    let nu = nu_scan(model, &grid, DEFAULT_INERTIA_TOL).map_err(|e| e.to_string())?;
    let view = BranchView {
        lambda: grid,
        branches: table.branches,
        nu: nu.iter().map(|i| i.negative).collect(),
        dim,
        interval: config.interval,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Counts eigenvalues in `[xi1, xi2)` and evaluates every verdict.
pub fn count_json(config: &str, xi1: f64, xi2: f64) -> Result<String, String> {
    let config = load(config)?;
    let model = Model::build(&config)?;
    let mut opts = ReportOptions::default();
    opts.locate.zero_tol = config.tolerances.zero_tol;
    opts.locate.cluster_tol = config.tolerances.cluster_tol;
    opts.locate.grid_step = config.lambda_grid.spacing().min((xi2 - xi1).abs() / 8.0).max(1e-6);
    let r = count_report(model.as_dyn(), xi1, xi2, &opts).map_err(|e| e.to_string())?;
    let view = CountView {
        xi1,
        xi2,
        n: r.n,
        nu_xi1: r.nu_at_xi1.negative,
        nu_xi2: r.nu_at_xi2.negative,
        roots: r
            .location
            .roots
            .iter()
            .filter(|x| x.inside)
            .map(|x| RootView { lambda0: x.lambda0, multiplicity: x.multiplicity })
            .collect(),
        verdicts: r.verdicts().iter().map(|(name, v)| (name.to_string(), v.to_string())).collect(),
        report: r.render(true),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn branches(config: &str, steps: usize) -> Result<String, JsError> {
    branches_json(config, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn count(config: &str, xi1: f64, xi2: f64) -> Result<String, JsError> {
    count_json(config, xi1, xi2).map_err(|e| JsError::new(&e))
}
