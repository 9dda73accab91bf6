//! Batch front end: config in, CSV tables and a text report out.

mod config;

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diffop::{self, convergence_study, DiffopError};
use crate::pencil::{
    self, branch_table, count_report, nu_scan, CountReport, PencilError, PencilModel, ReportOptions,
    DEFAULT_INERTIA_TOL,
};

pub use config::{
    load_config, parse_config, ConfigError, LambdaGrid, Mode, Overrides, OutputSpec, ProblemSpec, RunConfig,
    Tolerances, DEFAULT_GRID_STEPS,
};

/// Exit status for a counting contradiction.
pub const EXIT_VERDICT_FAILURE: i32 = 2;
pub const EXIT_ERROR: i32 = 1;

/// Branch columns when `branches` is not configured.
pub const DEFAULT_BRANCHES: usize = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("compiling the problem: {0}")]
    Diffop(#[from] DiffopError),
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// Report text for `count` and `verify`, a one-line summary otherwise.
    pub summary: String,
}

/// `{:.16e}`: 17 significant digits, round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Comma-separated rows with a header and LF line endings.
pub fn render_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn report_options(config: &RunConfig) -> ReportOptions {
    let mut opts = ReportOptions::default();
    opts.locate.zero_tol = config.tolerances.zero_tol;
    opts.locate.cluster_tol = config.tolerances.cluster_tol;
    opts.locate.grid_step = config.lambda_grid.spacing();
    opts.inertia_tol = DEFAULT_INERTIA_TOL;
    opts
}

enum Model {
    Abstract(pencil::PolynomialPencil),
    Differential(Box<diffop::DifferentialModel>),
}

impl Model {
    fn as_dyn(&self) -> &dyn PencilModel {
        match self {
            Model::Abstract(p) => p,
            Model::Differential(d) => d.as_ref(),
        }
    }
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.artifacts.push(path);
        Ok(())
    }
}

fn describe_problem(config: &RunConfig) -> String {
    match &config.problem {
        ProblemSpec::Abstract(p) => format!(
            "abstract pencil, dimension {}, degree {}, lambda in ({}, {})",
            p.dim(),
            p.coefficients().len() - 1,
            p.lambda_interval().0,
            p.lambda_interval().1
        ),
        ProblemSpec::Differential(p) => {
            let coefs: Vec<&str> = p.coefficients().iter().map(|c| c.source()).collect();
            format!(
                "differential operator, n = {}, x in [{}, {}], lambda in ({}, {}), {} elements, p = [{}]",
                p.n(),
                p.interval().0,
                p.interval().1,
                p.lambda_interval().0,
                p.lambda_interval().1,
                p.mesh(),
                coefs.join("; ")
            )
        }
    }
}

/// Runs the configured mode and writes its artifacts under the output dir.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let mode = config.mode.ok_or_else(|| ConfigError::Schema { path: "mode".into(), message: "missing key".into() })?;
    let model = match &config.problem {
        ProblemSpec::Abstract(p) => Model::Abstract(p.clone()),
        ProblemSpec::Differential(p) => Model::Differential(Box::new(diffop::compile(p)?)),
    };
    let model = model.as_dyn();
    let grid = config.lambda_grid.points();
    let mut out = Writer::new(&config.output.dir)?;
    let csv_name = |default: &str| config.output.csv.clone().unwrap_or_else(|| default.to_string());

    match mode {
        Mode::NuScan => {
            let inertias = nu_scan(model, &grid, DEFAULT_INERTIA_TOL)?;
            let header = ["lambda", "nu_neg", "nu_zero", "nu_pos"].map(String::from);
            let rows: Vec<Vec<String>> = grid
                .iter()
                .zip(&inertias)
                .map(|(l, i)| vec![format_float(*l), i.negative.to_string(), i.zero.to_string(), i.positive.to_string()])
                .collect();
            out.write(&csv_name("nu_scan.csv"), &render_csv(&header, &rows))?;
            let summary = format!(
                "nu-scan: {} points, nu from {} to {}\n",
                grid.len(),
                inertias.first().map_or(0, |i| i.negative),
                inertias.last().map_or(0, |i| i.negative)
            );
            Ok(RunOutcome { exit_code: 0, artifacts: out.artifacts, summary })
        }
        Mode::Branches => {
            let dim = pencil::branch_values(model, grid[0])?.len();
            let m_max = config.branches.unwrap_or(DEFAULT_BRANCHES.min(dim));
            let table = branch_table(model, &grid, m_max)?;
            let mut header = vec!["lambda".to_string()];
            header.extend((1..=m_max).map(|m| format!("Lambda_{m}")));
            let rows: Vec<Vec<String>> = grid
                .iter()
                .enumerate()
                .map(|(j, l)| {
                    std::iter::once(format_float(*l)).chain(table.branches.iter().map(|b| format_float(b[j]))).collect()
                })
                .collect();
            let name = csv_name("branches.csv");
            out.write(&name, &render_csv(&header, &rows))?;
            out.write(&gnuplot_name(&name), &gnuplot_script(&name, m_max))?;
            let summary = format!("branches: {} points, {m_max} branches of {dim}\n", grid.len());
            Ok(RunOutcome { exit_code: 0, artifacts: out.artifacts, summary })
        }
        Mode::Count | Mode::Verify => {
            let (xi1, xi2) = config.interval;
            let report = count_report(model, xi1, xi2, &report_options(config))?;
            out.write(&csv_name("roots.csv"), &roots_csv(&report))?;
            let mut text = String::new();
            let _ = writeln!(text, "mode: {mode}");
            let _ = writeln!(text, "problem: {}", describe_problem(config));
            text.push_str(&report.render(mode == Mode::Verify));
            if mode == Mode::Verify {
                if let (Some(levels), ProblemSpec::Differential(p)) = (config.study_levels, &config.problem) {
                    let study = convergence_study(p, xi1, xi2, levels, &report_options(config).locate)?;
                    let mut rows = Vec::new();
                    for (level, roots) in study.roots.iter().enumerate() {
                        for (j, r) in roots.iter().enumerate() {
                            rows.push(vec![study.meshes[level].to_string(), (j + 1).to_string(), format_float(*r)]);
                        }
                    }
                    let header = ["mesh", "root", "lambda0"].map(String::from);
                    out.write("study.csv", &render_csv(&header, &rows))?;
                    let _ = writeln!(text, "convergence study: meshes {:?}, expected order {}", study.meshes, study.order);
                    for (j, r) in study.extrapolated.iter().enumerate() {
                        let observed = study.observed_order.get(j).copied().flatten();
                        let _ = writeln!(
                            text,
                            "  root {}: extrapolated {:.12}{}",
                            j + 1,
                            r,
                            observed.map(|o| format!(", observed order {o:.2}")).unwrap_or_default()
                        );
                    }
                    if study.extrapolated.is_empty() {
                        let _ = writeln!(text, "  root counts differ between the two finest meshes; no extrapolation");
                    }
                }
            }
            out.write(&config.output.report, &text)?;
            Ok(RunOutcome { exit_code: exit_code(&report), artifacts: out.artifacts, summary: text })
        }
    }
}

/// 2 when any counting verdict is `FAIL`, else 0. Unmet hypotheses do not count.
pub fn exit_code(report: &CountReport) -> i32 {
    if report.has_failure() {
        EXIT_VERDICT_FAILURE
    } else {
        0
    }
}

fn roots_csv(report: &CountReport) -> String {
    let header = ["lambda0", "multiplicity"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .location
        .roots
        .iter()
        .filter(|r| r.inside)
        .map(|r| vec![format_float(r.lambda0), r.multiplicity.to_string()])
        .collect();
    render_csv(&header, &rows)
}

fn gnuplot_name(csv: &str) -> String {
    match csv.strip_suffix(".csv") {
        Some(stem) => format!("{stem}.gp"),
        None => format!("{csv}.gp"),
    }
}

/// Companion script plotting every branch column against `lambda`.
pub fn gnuplot_script(csv: &str, branches: usize) -> String {
    format!(
        "set datafile separator ','\n\
         set key outside right\n\
         set xlabel 'lambda'\n\
         set ylabel 'Lambda_m(lambda)'\n\
         set xzeroaxis\n\
         plot for [m=2:{}] '{csv}' using 1:m with lines title columnhead(m)\n",
        branches + 1
    )
}
