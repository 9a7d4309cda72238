//! `lsnet evaluate`: relative errors (or residual bounds) over a parameter
//! grid or a random sample of parameters.

use std::path::Path;

use lsnet_core::problems::ParamComponent;
use lsnet_core::rng::{stream_rng, Stream};
use lsnet_core::{measure_many, midpoint_1d, sample_parameters, ErrorReport, ProblemKind, QuadratureRule, Scheme};
use serde::Serialize;

use crate::{num, write_file, CliError, CliResult, Deployment};

/// Nodes of the error quadrature on 1D problems, distinct from any training rule.
pub const EVAL_NODES: usize = 1005;

/// Log-spaced cell-centered axis over the open range of `c`: the `i`-th of `n`
/// values is `exp(ln lo + (i + 1/2)(ln hi − ln lo)/n)`.
pub fn log_axis(c: &ParamComponent, n: usize) -> Vec<f64> {
    let (a, b) = (c.lo.ln(), c.hi.ln());
    (0..n).map(|i| (a + (i as f64 + 0.5) * (b - a) / n as f64).exp()).collect()
}

pub const LOG_AXIS_FORMULA: &str = "exp(ln(lo) + (i + 0.5) * (ln(hi) - ln(lo)) / n), i = 0..n-1";

/// Axis description written next to the grid CSVs.
#[derive(Debug, Serialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub formula: &'static str,
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct GridMetadata {
    pub problem: String,
    pub checkpoint: String,
    pub discretization: lsnet_core::Discretization,
    pub eval_nodes: usize,
    /// Rows are ordered with the first axis outermost.
    pub axes: Vec<Axis>,
    pub files: Vec<String>,
}

/// Error quadrature: midpoint nodes for 1D problems; the transmission bounds
/// use the scheme's own rule.
fn eval_rule(deployment: &Deployment, scheme: &Scheme) -> CliResult<QuadratureRule> {
    let problem = &deployment.problem;
    match (problem.kind, &problem.domain) {
        (ProblemKind::Transmission2d, _) => Ok(scheme.quadrature().clone()),
        (_, lsnet_core::Domain::Interval { a, b }) => Ok(midpoint_1d(*a, *b, EVAL_NODES, &problem.breakpoints)?),
        _ => Err(CliError::Config(format!("no evaluation rule for {}", problem.name()))),
    }
}

fn measure(deployment: &Deployment, points: &[Vec<f64>]) -> CliResult<Vec<ErrorReport>> {
    let scheme = Scheme::new(&deployment.problem, &deployment.discretization)?;
    let eval = eval_rule(deployment, &scheme)?;
    Ok(measure_many(&deployment.problem, &deployment.params, points, &scheme, &eval)?)
}

/// Grid mode (oscillator): an `n × n` log grid, one CSV per derivative order
/// plus `grid.json`.
pub fn evaluate_grid(deployment: &Deployment, checkpoint: &Path, n: usize, out_dir: &Path) -> CliResult<()> {
    let problem = &deployment.problem;
    if problem.kind != ProblemKind::Oscillator {
        return Err(CliError::Config(format!("grid mode supports the oscillator only, not {}", problem.name())));
    }
    if n == 0 {
        return Err(CliError::Config("--grid must be positive".into()));
    }
    let axes: Vec<Axis> = problem
        .params
        .iter()
        .map(|c| Axis {
            name: c.name.to_string(),
            lo: c.lo,
            hi: c.hi,
            n,
            formula: LOG_AXIS_FORMULA,
            values: log_axis(c, n),
        })
        .collect();
    let points: Vec<Vec<f64>> =
        axes[0].values.iter().flat_map(|&p1| axes[1].values.iter().map(move |&p2| vec![p1, p2])).collect();
    let reports = measure(deployment, &points)?;
    let names = ["value", "d1", "d2"];
    let mut files = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let mut csv = String::from("p1,p2,error_pct\n");
        for (p, r) in points.iter().zip(&reports) {
            let ErrorReport::Oscillator { value_pct, d1_pct, d2_pct } = *r else { unreachable!("oscillator report") };
            let e = [value_pct, d1_pct, d2_pct][k];
            csv.push_str(&format!("{},{},{}\n", num(p[0]), num(p[1]), num(e)));
        }
        let file = format!("error_{name}.csv");
        write_file(&out_dir.join(&file), &csv)?;
        files.push(file);
    }
    let meta = GridMetadata {
        problem: problem.name().into(),
        checkpoint: checkpoint.display().to_string(),
        discretization: deployment.discretization.clone(),
        eval_nodes: EVAL_NODES,
        axes,
        files,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Output(e.to_string()))?;
    write_file(&out_dir.join("grid.json"), &(json + "\n"))
}

/// Sample mode: `count` parameters from the problem's sampling laws on the
/// evaluation stream of `seed`, one CSV row per draw.
pub fn evaluate_samples(deployment: &Deployment, count: usize, seed: u64, out: &Path) -> CliResult<()> {
    let problem = &deployment.problem;
    let points = sample_parameters(problem, count, &mut stream_rng(seed, Stream::Evaluation));
    let reports = measure(deployment, &points)?;
    let mut header: Vec<String> = problem.param_names().iter().map(|s| s.to_string()).collect();
    header.extend(
        match problem.kind {
            ProblemKind::Oscillator => &["value_pct", "d1_pct", "d2_pct"][..],
            ProblemKind::Helmholtz1d => &["h1_pct"][..],
            ProblemKind::Transmission2d => &["lower_pct", "upper_pct"][..],
        }
        .iter()
        .map(|s| s.to_string()),
    );
    let mut csv = header.join(",") + "\n";
    for (p, r) in points.iter().zip(&reports) {
        let errors = match *r {
            ErrorReport::Oscillator { value_pct, d1_pct, d2_pct } => vec![value_pct, d1_pct, d2_pct],
            ErrorReport::Helmholtz { h1_pct } => vec![h1_pct],
            ErrorReport::Transmission { lower_pct, upper_pct } => vec![lower_pct, upper_pct],
        };
        let row: Vec<String> = p.iter().chain(&errors).map(|&v| num(v)).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_file(out, &csv)
}
