//! JSON run configuration, validated with key paths in every error.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::boundary::{UnitaryBoundary, DEFAULT_ONE_TOL};
use crate::diffop::{self, parse_expression, CoefficientExpression, DifferentialProblem};
use crate::linalg::{HermitianMatrix, Matrix};
use crate::pencil::{PolynomialPencil, DEFAULT_CLUSTER_TOL, DEFAULT_ZERO_TOL};

/// Grid points used when `lambda_grid` is omitted.
pub const DEFAULT_GRID_STEPS: usize = 201;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema { path: if path.is_empty() { "<root>".into() } else { path.into() }, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    NuScan,
    Branches,
    Count,
    Verify,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::NuScan, Mode::Branches, Mode::Count, Mode::Verify];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NuScan => "nu-scan",
            Mode::Branches => "branches",
            Mode::Count => "count",
            Mode::Verify => "verify",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}; expected nu-scan, branches, count or verify"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid {
    pub start: f64,
    pub stop: f64,
    /// Number of grid points, endpoints included.
    pub steps: usize,
}

impl LambdaGrid {
    pub fn points(&self) -> Vec<f64> {
        crate::pencil::uniform_grid(self.start, self.stop, self.steps)
    }

    pub fn spacing(&self) -> f64 {
        (self.stop - self.start) / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub one_tol: f64,
    pub cluster_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { zero_tol: DEFAULT_ZERO_TOL, one_tol: DEFAULT_ONE_TOL, cluster_tol: DEFAULT_CLUSTER_TOL }
    }
}

#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Abstract(PolynomialPencil),
    Differential(DifferentialProblem),
}

impl ProblemSpec {
    pub fn lambda_interval(&self) -> (f64, f64) {
        match self {
            ProblemSpec::Abstract(p) => crate::pencil::PencilModel::lambda_interval(p),
            ProblemSpec::Differential(p) => p.lambda_interval(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// CSV file name; defaults depend on the mode.
    pub csv: Option<String>,
    pub report: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), csv: None, report: "report.txt".into() }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub problem: ProblemSpec,
    /// `[ξ₁, ξ₂)`.
    pub interval: (f64, f64),
    pub lambda_grid: LambdaGrid,
    pub tolerances: Tolerances,
    /// Branch columns for `branches`; `None` means `min(6, dim)`.
    pub branches: Option<usize>,
    /// Mesh levels of the convergence study run by `verify`.
    pub study_levels: Option<usize>,
    pub output: OutputSpec,
}

/// Command-line values that replace config keys of the same name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub mesh: Option<usize>,
    pub grid_steps: Option<usize>,
}

impl RunConfig {
    pub fn apply(mut self, o: &Overrides) -> Result<Self, ConfigError> {
        if let Some(mode) = o.mode {
            self.mode = Some(mode);
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(mesh) = o.mesh {
            self.problem = match self.problem {
                ProblemSpec::Differential(p) => {
                    ProblemSpec::Differential(p.with_mesh(mesh).map_err(|e| schema("mesh", e.to_string()))?)
                }
                ProblemSpec::Abstract(_) => return Err(schema("mesh", "only differential problems have a mesh")),
            };
        }
        if let Some(steps) = o.grid_steps {
            check_steps("lambda_grid.steps", steps)?;
            self.lambda_grid.steps = steps;
        }
        if self.mode.is_none() {
            return Err(schema("mode", "no mode given in the config or on the command line"));
        }
        Ok(self)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| {
            // serde_json appends its own position; ours is in the prefix
            let message = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let message = message.strip_suffix(&suffix).unwrap_or(&message).to_string();
            ConfigError::Parse { line: e.line(), column: e.column(), message }
        })?;
    let root = Node { value: &value, path: String::new() };
    root.object(&["mode", "problem", "interval", "lambda_grid", "tolerances", "mesh", "branches", "study", "output"])?;

    let mode = match root.opt("mode") {
        Some(m) => Some(m.string()?.parse::<Mode>().map_err(|e| m.err(e))?),
        None => None,
    };

    let mut tolerances = Tolerances::default();
    if let Some(t) = root.opt("tolerances") {
        t.object(&["zero_tol", "one_tol", "cluster_tol"])?;
        for (key, slot) in [
            ("zero_tol", &mut tolerances.zero_tol),
            ("one_tol", &mut tolerances.one_tol),
            ("cluster_tol", &mut tolerances.cluster_tol),
        ] {
            if let Some(node) = t.opt(key) {
                let v = node.number()?;
                if !(v > 0.0) {
                    return Err(node.err("must be positive"));
                }
                *slot = v;
            }
        }
    }

    let mesh = root.opt("mesh").map(|m| m.usize()).transpose()?;
    let problem = parse_problem(&root.field("problem")?, mesh.unwrap_or(diffop::DEFAULT_MESH), &tolerances)?;
    if mesh.is_some() && matches!(problem, ProblemSpec::Abstract(_)) {
        return Err(schema("mesh", "only differential problems have a mesh"));
    }
    let (sigma, tau) = problem.lambda_interval();

    let interval_node = root.field("interval")?;
    let interval = interval_node.pair()?;
    if !(interval.0 < interval.1) {
        return Err(interval_node.err("interval is empty: xi1 must be below xi2"));
    }
    if !(sigma < interval.0 && interval.1 < tau) {
        return Err(interval_node.err("interval not compactly inside lambda_interval"));
    }

    let lambda_grid = match root.opt("lambda_grid") {
        None => LambdaGrid { start: interval.0, stop: interval.1, steps: DEFAULT_GRID_STEPS },
        Some(g) => {
            g.object(&["start", "stop", "steps"])?;
            let start = g.field("start")?.number()?;
            let stop = g.field("stop")?.number()?;
            let steps_node = g.field("steps")?;
            let steps = steps_node.usize()?;
            check_steps(&steps_node.path, steps)?;
            if !(start < stop) {
                return Err(g.err("start must be below stop"));
            }
            if !(sigma < start && stop < tau) {
                return Err(g.err("grid not compactly inside lambda_interval"));
            }
            LambdaGrid { start, stop, steps }
        }
    };

    let branches = match root.opt("branches") {
        None => None,
        Some(b) => {
            let m = b.usize()?;
            if m == 0 {
                return Err(b.err("at least one branch is required"));
            }
            Some(m)
        }
    };

    let study_levels = match root.opt("study") {
        None => None,
        Some(s) => {
            s.object(&["levels"])?;
            let levels = s.field("levels")?;
            let l = levels.usize()?;
            if !(2..=6).contains(&l) {
                return Err(levels.err("levels must be between 2 and 6"));
            }
            if matches!(problem, ProblemSpec::Abstract(_)) {
                return Err(s.err("a convergence study needs a differential problem"));
            }
            Some(l)
        }
    };

    let mut output = OutputSpec::default();
    if let Some(o) = root.opt("output") {
        o.object(&["dir", "csv", "report"])?;
        if let Some(d) = o.opt("dir") {
            output.dir = PathBuf::from(d.string()?);
        }
        if let Some(c) = o.opt("csv") {
            output.csv = Some(c.file_name()?);
        }
        if let Some(r) = o.opt("report") {
            output.report = r.file_name()?;
        }
    }

    Ok(RunConfig { mode, problem, interval, lambda_grid, tolerances, branches, study_levels, output })
}

fn check_steps(path: &str, steps: usize) -> Result<(), ConfigError> {
    if steps < 2 {
        return Err(schema(path, format!("steps must be at least 2, found {steps}")));
    }
    Ok(())
}

fn parse_problem(node: &Node, mesh: usize, tolerances: &Tolerances) -> Result<ProblemSpec, ConfigError> {
    let map = node.object(&["abstract", "differential"])?;
    if map.len() != 1 {
        return Err(node.err("expected exactly one of \"abstract\" or \"differential\""));
    }
    if let Some(a) = node.opt("abstract") {
        a.object(&["lambda_interval", "coefficients", "mass"])?;
        let interval = lambda_interval(&a.field("lambda_interval")?)?;
        let coefs = a.field("coefficients")?;
        let mut coefficients = Vec::new();
        for c in coefs.array()? {
            coefficients.push(c.hermitian()?);
        }
        if coefficients.is_empty() {
            return Err(coefs.err("at least one coefficient matrix is required"));
        }
        let dim = coefficients[0].dim();
        if let Some(bad) = coefficients.iter().position(|c| c.dim() != dim) {
            return Err(schema(&format!("{}[{bad}]", coefs.path), format!("expected a {dim}x{dim} matrix")));
        }
        let mass = match a.opt("mass") {
            Some(m) => {
                let h = m.hermitian()?;
                if h.dim() != dim {
                    return Err(m.err(format!("expected a {dim}x{dim} matrix")));
                }
                h
            }
            None => HermitianMatrix::identity(dim),
        };
        let pencil = PolynomialPencil::new(coefficients, mass, interval).map_err(|e| a.err(e.to_string()))?;
        return Ok(ProblemSpec::Abstract(pencil));
    }

    let d = node.field("differential")?;
    d.object(&["n", "interval", "lambda_interval", "coefficients", "derivatives", "boundary"])?;
    let n_node = d.field("n")?;
    let n = n_node.usize()?;
    if n == 0 {
        return Err(n_node.err("n must be at least 1"));
    }
    let x_node = d.field("interval")?;
    let x_interval = x_node.pair()?;
    let lambda_interval = lambda_interval(&d.field("lambda_interval")?)?;
    let expressions = |node: Node| -> Result<Vec<CoefficientExpression>, ConfigError> {
        let items = node.array()?;
        if items.len() != n + 1 {
            return Err(node.err(format!("expected {} expressions p0..p{n}, found {}", n + 1, items.len())));
        }
        items.iter().map(Node::expression).collect()
    };
    let coefficients = expressions(d.field("coefficients")?)?;
    let derivatives = d.opt("derivatives").map(expressions).transpose()?;
    let boundary = parse_boundary(&d.field("boundary")?, n)?;
    let problem = DifferentialProblem::new(n, x_interval, lambda_interval, coefficients, derivatives, boundary, mesh)
        .and_then(|p| p.with_one_tol(tolerances.one_tol))
        .map_err(|e| d.err(e.to_string()))?;
    Ok(ProblemSpec::Differential(problem))
}

fn lambda_interval(node: &Node) -> Result<(f64, f64), ConfigError> {
    let (s, t) = node.pair()?;
    if !(s < t) {
        return Err(node.err("lambda_interval must satisfy sigma < tau"));
    }
    Ok((s, t))
}

fn parse_boundary(node: &Node, n: usize) -> Result<UnitaryBoundary, ConfigError> {
    let kind_node = node.field("kind")?;
    let kind = kind_node.string()?;
    let size = 2 * n;
    let sized = |m: Node| -> Result<Matrix, ConfigError> {
        let mat = m.matrix()?;
        if mat.rows() != size || mat.cols() != size {
            return Err(m.err(format!("expected a {size}x{size} matrix")));
        }
        Ok(mat)
    };
    match kind {
        "dirichlet" => {
            node.object(&["kind"])?;
            Ok(UnitaryBoundary::identity(n))
        }
        "neumann" => {
            node.object(&["kind"])?;
            Ok(UnitaryBoundary::minus_identity(n))
        }
        "constant" => {
            node.object(&["kind", "u"])?;
            let u = node.field("u")?;
            UnitaryBoundary::constant(sized(u.clone())?).map_err(|e| u.err(e.to_string()))
        }
        "generated" => {
            node.object(&["kind", "theta0", "theta1"])?;
            let t0 = sized(node.field("theta0")?)?;
            let t1 = sized(node.field("theta1")?)?;
            UnitaryBoundary::generated(t0, t1).map_err(|e| node.err(e.to_string()))
        }
        other => Err(kind_node.err(format!(
            "unknown boundary kind {other:?}; expected dirichlet, neumann, constant or generated"
        ))),
    }
}

/// A JSON value with its key path.
#[derive(Clone)]
struct Node<'a> {
    value: &'a Value,
    path: String,
}

impl<'a> Node<'a> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        schema(&self.path, message)
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn object(&self, allowed: &[&str]) -> Result<&'a Map<String, Value>, ConfigError> {
        let map = self.value.as_object().ok_or_else(|| self.err("expected an object"))?;
        if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(schema(&self.key_path(key), "unknown key"));
        }
        Ok(map)
    }

    fn opt(&self, key: &str) -> Option<Node<'a>> {
        match self.value.get(key) {
            None | Some(Value::Null) => None,
            Some(value) => Some(Node { value, path: self.key_path(key) }),
        }
    }

    fn field(&self, key: &str) -> Result<Node<'a>, ConfigError> {
        self.opt(key).ok_or_else(|| schema(&self.key_path(key), "missing key"))
    }

    fn array(&self) -> Result<Vec<Node<'a>>, ConfigError> {
        let items = self.value.as_array().ok_or_else(|| self.err("expected an array"))?;
        Ok(items.iter().enumerate().map(|(i, value)| Node { value, path: format!("{}[{i}]", self.path) }).collect())
    }

    fn string(&self) -> Result<&'a str, ConfigError> {
        self.value.as_str().ok_or_else(|| self.err("expected a string"))
    }

    fn file_name(&self) -> Result<String, ConfigError> {
        let s = self.string()?;
        if s.is_empty() || s.contains(['/', '\\']) || s == "." || s == ".." {
            return Err(self.err("expected a plain file name"));
        }
        Ok(s.to_string())
    }

    /// A JSON number, or a string holding a constant expression such as
    /// `"0.1"` or `"pi/2"`.
    fn number(&self) -> Result<f64, ConfigError> {
        let v = match self.value {
            Value::Number(n) => n.as_f64().ok_or_else(|| self.err("number out of range"))?,
            Value::String(s) => {
                let e = parse_expression(s).map_err(|e| self.err(e.to_string()))?;
                if e.tree().depends_on_x() || e.tree().depends_on_lambda() {
                    return Err(self.err("expected a constant, found an expression in x or lambda"));
                }
                e.eval(0.0, 0.0).map_err(|e| self.err(e.to_string()))?
            }
            _ => return Err(self.err("expected a number")),
        };
        if !v.is_finite() {
            return Err(self.err("expected a finite number"));
        }
        Ok(v)
    }

    fn usize(&self) -> Result<usize, ConfigError> {
        self.value
            .as_u64()
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| self.err("expected a non-negative integer"))
    }

    fn pair(&self) -> Result<(f64, f64), ConfigError> {
        let items = self.array()?;
        if items.len() != 2 {
            return Err(self.err("expected two numbers"));
        }
        Ok((items[0].number()?, items[1].number()?))
    }

    /// A number, numeric string, or `[re, im]`.
    fn complex(&self) -> Result<Complex64, ConfigError> {
        if self.value.is_array() {
            let (re, im) = self.pair()?;
            Ok(Complex64::new(re, im))
        } else {
            Ok(Complex64::new(self.number()?, 0.0))
        }
    }

    /// Square matrix as an array of rows.
    fn matrix(&self) -> Result<Matrix, ConfigError> {
        let rows = self.array()?;
        let dim = rows.len();
        if dim == 0 {
            return Err(self.err("expected a non-empty square matrix"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in &rows {
            let entries = row.array()?;
            if entries.len() != dim {
                return Err(row.err(format!("expected {dim} entries")));
            }
            for e in &entries {
                data.push(e.complex()?);
            }
        }
        Matrix::from_row_major(dim, dim, data).map_err(|e| self.err(e.to_string()))
    }

    fn hermitian(&self) -> Result<HermitianMatrix, ConfigError> {
        HermitianMatrix::new(self.matrix()?).map_err(|e| self.err(e.to_string()))
    }

    fn expression(&self) -> Result<CoefficientExpression, ConfigError> {
        match self.value {
            Value::String(s) => parse_expression(s).map_err(|e| self.err(e.to_string())),
            Value::Number(_) => Ok(CoefficientExpression::constant(self.number()?)),
            _ => Err(self.err("expected an expression string or a number")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIRICHLET: &str = r#"{
        "mode": "count",
        "problem": {"differential": {
            "n": 1, "interval": [0, "pi"], "lambda_interval": [-20, 20],
            "coefficients": ["1", "-lambda"], "boundary": {"kind": "dirichlet"}
        }},
        "interval": [1.5, 10]
    }"#;

    fn schema_path(text: &str) -> String {
        match parse_config(text) {
            Err(ConfigError::Schema { path, .. }) => path,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_dirichlet() {
        let c = parse_config(DIRICHLET).unwrap();
        assert_eq!(c.mode, Some(Mode::Count));
        assert_eq!(c.interval, (1.5, 10.0));
        assert_eq!(c.lambda_grid.steps, DEFAULT_GRID_STEPS);
        let ProblemSpec::Differential(p) = &c.problem else { panic!() };
        assert_eq!(p.interval().1, std::f64::consts::PI);
        assert_eq!(p.mesh(), diffop::DEFAULT_MESH);
    }

    #[test]
    fn interval_must_be_inside() {
        let text = DIRICHLET.replace("[1.5, 10]", "[1.5, 20]");
        match parse_config(&text) {
            Err(ConfigError::Schema { path, message }) => {
                assert_eq!(path, "interval");
                assert_eq!(message, "interval not compactly inside lambda_interval");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn steps_below_two_rejected() {
        let text = DIRICHLET.replace("\"interval\": [1.5, 10]", "\"interval\": [1.5, 10], \"lambda_grid\": {\"start\": 1, \"stop\": 2, \"steps\": 1}");
        assert_eq!(schema_path(&text), "lambda_grid.steps");
        let c = parse_config(DIRICHLET).unwrap();
        let o = Overrides { grid_steps: Some(1), ..Overrides::default() };
        assert!(matches!(c.apply(&o), Err(ConfigError::Schema { .. })));
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(schema_path(&DIRICHLET.replace("\"-lambda\"", "\"-lambda +\"")), "problem.differential.coefficients[1]");
        assert_eq!(schema_path(&DIRICHLET.replace("dirichlet", "robin")), "problem.differential.boundary.kind");
        assert_eq!(schema_path(&DIRICHLET.replace("\"mode\"", "\"mood\"")), "mood");
        assert_eq!(schema_path(&DIRICHLET.replace("\"n\": 1", "\"n\": 2")), "problem.differential.coefficients");
        match parse_config("{\n  \"mode\": \"count\",\n  oops\n}") {
            Err(ConfigError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn abstract_fixture_and_complex_entries() {
        let text = r#"{
            "problem": {"abstract": {"lambda_interval": [0, 4],
                "coefficients": [[[3]], [[-4]], [["1"]]]}},
            "interval": [0.5, 3.5]
        }"#;
        let c = parse_config(text).unwrap();
        assert!(c.mode.is_none());
        assert!(matches!(c.clone().apply(&Overrides::default()), Err(ConfigError::Schema { .. })));
        let c = c.apply(&Overrides { mode: Some(Mode::Verify), ..Overrides::default() }).unwrap();
        assert_eq!(c.mode, Some(Mode::Verify));
        let text = r#"{"problem": {"abstract": {"lambda_interval": [0, 4],
            "coefficients": [[[1, [0, 1]], [[0, 1], 1]]]}}, "interval": [1, 2]}"#;
        assert_eq!(schema_path(text), "problem.abstract.coefficients[0]");
    }
}
