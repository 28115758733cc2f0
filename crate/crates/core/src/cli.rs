//! Command-line front end. `recipbp <command> <input> [flags]`; every
//! command reads JSON (or `-` for stdin) and writes JSON or CSV.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical degeneracy,
//! 3 I/O or schema error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::bp::{bp_run, compute_beliefs, default_t_max, init_messages, BpOptions, InitMode, DEFAULT_TOL};
use crate::diagnostics::{accuracy_decomposition, binary_correction, diagnose_model, BinaryCorrection};
use crate::error::{Error, ErrorKind, Result};
use crate::exact::joint::{exact_marginals_bruteforce, joint_table, DEFAULT_ENUMERATION_CAP};
use crate::exact::transfer::{exact_marginals_transfer, sample_joint};
use crate::gaussian::{
    assemble_precision, ci_pattern, markov_subclass_check, sample_gaussian_rp, validate_blocks, BlockReport,
    SecondOrderBlocks,
};
use crate::io::{parse_blocks, parse_model, parse_model_unchecked, read_input};
use crate::model::{validate_model, BeliefSet, HiddenReciprocalModel, Violation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Tolerance for zero blocks and corner tests in `gauss` output.
const BLOCK_ZERO_TOL: f64 = 1e-12;

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Validation => EXIT_VALIDATION,
        ErrorKind::Numerical => EXIT_NUMERICAL,
        ErrorKind::Io => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "recipbp", version, about = "Belief propagation, exact oracles and diagnostics for hidden cyclic chains")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitArg {
    Uniform,
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Convergence tolerance (Hilbert distance between sweeps).
    #[arg(long, global = true, env = "RECIPBP_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Sweep budget; defaults to 10 L D^2.
    #[arg(long, global = true, env = "RECIPBP_T_MAX")]
    pub t_max: Option<usize>,
    #[arg(long, global = true, env = "RECIPBP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Message initialization; `random` draws from `--seed`.
    #[arg(long, global = true, env = "RECIPBP_INIT", value_enum, default_value_t = InitArg::Uniform)]
    pub init: InitArg,
    /// Emit CSV rows instead of JSON where supported.
    #[arg(long, global = true, env = "RECIPBP_CSV")]
    pub csv: bool,
    /// Largest number of configurations brute-force enumeration may visit.
    #[arg(long, global = true, env = "RECIPBP_CAP", default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
    /// Restrict per-node reports to this node.
    #[arg(long, global = true, env = "RECIPBP_NODE")]
    pub node: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(short, long, global = true, env = "RECIPBP_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file and list every invariant violation.
    Validate { input: String },
    /// Run parallel loopy BP and report beliefs with the convergence trace.
    Smooth { input: String },
    /// Exact marginals by transfer matrices and by enumeration.
    Exact { input: String },
    /// Spectral, stability, contraction and accuracy reports per node.
    Diagnose { input: String },
    /// Binary correction of BP beliefs to exact marginals.
    Correct { input: String },
    /// BP vs exact vs corrected, with per-node gaps.
    Compare { input: String },
    /// Exact samples from a model (or from a Gaussian block model).
    Sample {
        input: String,
        #[arg(short = 'n', long, default_value_t = 1000)]
        num_samples: usize,
        /// Input is a Gaussian block file.
        #[arg(long)]
        gaussian: bool,
    },
    /// Gaussian second-order models.
    Gauss {
        #[command(subcommand)]
        verb: GaussVerb,
    },
}

#[derive(Debug, Subcommand)]
pub enum GaussVerb {
    /// Assemble the precision matrix.
    Assemble { input: String },
    /// Check constraints, positive definiteness and structure.
    Check { input: String },
    /// Draw samples (CSV, one row per sample).
    Sample {
        input: String,
        #[arg(short = 'n', long, default_value_t = 1000)]
        num_samples: usize,
    },
}

/// What a command produced: the text to emit and its exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, code: EXIT_OK }
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Debug, Serialize)]
struct ErrorDetail<'a> {
    kind: &'a str,
    exit_code: i32,
    message: String,
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Validation => "validation",
        ErrorKind::Numerical => "numerical",
        ErrorKind::Io => "io",
    }
}

pub fn error_json(e: &Error) -> String {
    let body = ErrorBody {
        error: ErrorDetail {
            kind: kind_name(e.kind()),
            exit_code: exit_code(e.kind()),
            message: e.to_string(),
        },
    };
    serde_json::to_string(&body).expect("error body serializes")
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn check_config(cfg: &RunConfig) -> Result<()> {
    if !(cfg.tol > 0.0 && cfg.tol.is_finite()) {
        return Err(Error::Dimension(format!("--tol must be positive, got {}", cfg.tol)));
    }
    Ok(())
}

fn load_model(input: &str) -> Result<HiddenReciprocalModel> {
    parse_model(&read_input(input)?)
}

fn load_blocks(input: &str) -> Result<SecondOrderBlocks> {
    parse_blocks(&read_input(input)?)
}

fn check_node(cfg: &RunConfig, model: &HiddenReciprocalModel) -> Result<Vec<usize>> {
    match cfg.node {
        Some(k) if k >= model.num_nodes() => Err(Error::Dimension(format!(
            "--node {k} out of range for {} nodes",
            model.num_nodes()
        ))),
        Some(k) => Ok(vec![k]),
        None => Ok((0..model.num_nodes()).collect()),
    }
}

fn belief_csv(header: &str, nodes: &[usize], rows: &[Vec<f64>]) -> String {
    let d = rows.first().map_or(0, Vec::len);
    let mut s = String::from(header);
    for x in 0..d {
        write!(s, ",p{x}").unwrap();
    }
    s.push('\n');
    for (k, row) in nodes.iter().zip(rows) {
        write!(s, "{k}").unwrap();
        for v in row {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

fn matrix_csv(m: &DMatrix<f64>, prefix: &str) -> String {
    let mut s = String::new();
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("{prefix}{j}")).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    alphabet_size: usize,
    num_nodes: usize,
    violations: Vec<ViolationEntry>,
}

#[derive(Serialize)]
struct ViolationEntry {
    #[serde(flatten)]
    violation: Violation,
    message: String,
}

fn cmd_validate(input: &str) -> Result<Outcome> {
    let model = parse_model_unchecked(&read_input(input)?)?;
    let violations: Vec<ViolationEntry> = validate_model(&model)
        .into_iter()
        .map(|v| ViolationEntry {
            message: v.to_string(),
            violation: v,
        })
        .collect();
    let report = ValidateReport {
        valid: violations.is_empty(),
        alphabet_size: model.alphabet_size(),
        num_nodes: model.num_nodes(),
        violations,
    };
    Ok(Outcome {
        code: if report.valid { EXIT_OK } else { EXIT_VALIDATION },
        text: to_json(&report),
    })
}

#[derive(Serialize)]
struct SmoothReport {
    converged: bool,
    sweeps: usize,
    tol: f64,
    t_max: usize,
    init: InitArg,
    seed: u64,
    beliefs: Vec<Vec<f64>>,
    trace: Vec<f64>,
}

fn run_bp(cfg: &RunConfig, model: &HiddenReciprocalModel) -> Result<(BeliefSet, crate::bp::BpRun, usize)> {
    let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(model));
    let mode = match cfg.init {
        InitArg::Uniform => InitMode::Uniform,
        InitArg::Random => InitMode::SeededRandom(cfg.seed),
    };
    let opts = BpOptions {
        tol: cfg.tol,
        t_max,
        normalize: true,
    };
    let run = bp_run(model, &init_messages(model, mode), opts)?;
    let beliefs = compute_beliefs(model, &run.messages)?;
    Ok((beliefs, run, t_max))
}

fn cmd_smooth(cfg: &RunConfig, input: &str) -> Result<Outcome> {
    let model = load_model(input)?;
    let nodes = check_node(cfg, &model)?;
    let (beliefs, run, t_max) = run_bp(cfg, &model)?;
    let rows: Vec<Vec<f64>> = nodes.iter().map(|&k| beliefs.get(k).iter().copied().collect()).collect();
    if cfg.csv {
        return Ok(Outcome::ok(belief_csv("node", &nodes, &rows)));
    }
    Ok(Outcome::ok(to_json(&SmoothReport {
        converged: run.converged,
        sweeps: run.messages.t,
        tol: cfg.tol,
        t_max,
        init: cfg.init,
        seed: cfg.seed,
        beliefs: rows,
        trace: run.trace,
    })))
}

#[derive(Serialize)]
struct ExactReport {
    transfer: Vec<Vec<f64>>,
    bruteforce: Option<Vec<Vec<f64>>>,
    partition_function: Option<f64>,
    max_abs_diff: Option<f64>,
    bruteforce_error: Option<String>,
}

fn cmd_exact(cfg: &RunConfig, input: &str) -> Result<Outcome> {
    let model = load_model(input)?;
    let transfer = exact_marginals_transfer(&model)?;
    let (brute, z, err, code) = match joint_table(&model, cfg.cap) {
        Ok(t) => {
            let b = exact_marginals_bruteforce(&t);
            (Some(b), t.partition_function(), None, EXIT_OK)
        }
        Err(e) => {
            let code = exit_code(e.kind());
            (None, None, Some(e.to_string()), code)
        }
    };
    if cfg.csv {
        let nodes: Vec<usize> = (0..model.num_nodes()).collect();
        return Ok(Outcome {
            text: belief_csv("node", &nodes, &transfer.to_rows()),
            code,
        });
    }
    let report = ExactReport {
        max_abs_diff: brute.as_ref().map(|b| b.max_abs_diff(&transfer)),
        transfer: transfer.to_rows(),
        bruteforce: brute.map(|b| b.to_rows()),
        partition_function: z,
        bruteforce_error: err,
    };
    Ok(Outcome {
        text: to_json(&report),
        code,
    })
}

fn cmd_diagnose(cfg: &RunConfig, input: &str) -> Result<Outcome> {
    let model = load_model(input)?;
    let nodes = check_node(cfg, &model)?;
    let mut report = diagnose_model(&model)?;
    report.nodes.retain(|n| nodes.contains(&n.node));
    Ok(Outcome::ok(to_json(&report)))
}

#[derive(Serialize)]
struct CorrectReport {
    nodes: Vec<BinaryCorrection>,
}

fn cmd_correct(cfg: &RunConfig, input: &str) -> Result<Outcome> {
    let model = load_model(input)?;
    let nodes = check_node(cfg, &model)?;
    let corrections = nodes
        .iter()
        .map(|&k| binary_correction(&model, k))
        .collect::<Result<Vec<_>>>()?;
    if cfg.csv {
        let rows: Vec<Vec<f64>> = corrections.iter().map(|c| c.corrected.clone()).collect();
        return Ok(Outcome::ok(belief_csv("node", &nodes, &rows)));
    }
    Ok(Outcome::ok(to_json(&CorrectReport { nodes: corrections })))
}

#[derive(Serialize)]
struct CompareNode {
    node: usize,
    bp: Vec<f64>,
    exact: Vec<f64>,
    corrected: Option<Vec<f64>>,
    beta: f64,
    /// `‖b - p‖_∞`
    bp_vs_exact: f64,
    /// `|1 - β| ‖q - b‖_∞`, equal to the gap above at the fixed point
    predicted_gap: Option<f64>,
    corrected_vs_exact: Option<f64>,
}

#[derive(Serialize)]
struct CompareReport {
    converged: bool,
    sweeps: usize,
    max_bp_vs_exact: f64,
    max_corrected_vs_exact: Option<f64>,
    nodes: Vec<CompareNode>,
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn cmd_compare(cfg: &RunConfig, input: &str) -> Result<Outcome> {
    let model = load_model(input)?;
    let nodes = check_node(cfg, &model)?;
    let (beliefs, run, _) = run_bp(cfg, &model)?;
    let exact = exact_marginals_transfer(&model)?;
    let binary = model.alphabet_size() == 2;
    let mut out = Vec::with_capacity(nodes.len());
    for &k in &nodes {
        let bp: Vec<f64> = beliefs.get(k).iter().copied().collect();
        let p: Vec<f64> = exact.get(k).iter().copied().collect();
        let acc = accuracy_decomposition(&model, k)?;
        let predicted_gap = acc
            .q_residual
            .as_ref()
            .map(|q| (1.0 - acc.beta).abs() * linf(q, &acc.belief));
        let corrected = if binary { Some(binary_correction(&model, k)?.corrected) } else { None };
        out.push(CompareNode {
            node: k,
            bp_vs_exact: linf(&bp, &p),
            corrected_vs_exact: corrected.as_ref().map(|c| linf(c, &p)),
            beta: acc.beta,
            predicted_gap,
            bp,
            exact: p,
            corrected,
        });
    }
    if cfg.csv {
        let mut s = String::from("node,bp_vs_exact,corrected_vs_exact,predicted_gap\n");
        for n in &out {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            writeln!(s, "{},{},{},{}", n.node, n.bp_vs_exact, opt(n.corrected_vs_exact), opt(n.predicted_gap)).unwrap();
        }
        return Ok(Outcome::ok(s));
    }
    let report = CompareReport {
        converged: run.converged,
        sweeps: run.messages.t,
        max_bp_vs_exact: out.iter().map(|n| n.bp_vs_exact).fold(0.0, f64::max),
        max_corrected_vs_exact: binary
            .then(|| out.iter().filter_map(|n| n.corrected_vs_exact).fold(0.0, f64::max)),
        nodes: out,
    };
    Ok(Outcome::ok(to_json(&report)))
}

#[derive(Serialize)]
struct SampleReport {
    seed: u64,
    samples: Vec<Vec<usize>>,
}

#[derive(Serialize)]
struct GaussianSampleReport {
    seed: u64,
    samples: Vec<Vec<f64>>,
}

fn cmd_sample(cfg: &RunConfig, input: &str, n: usize, gaussian: bool) -> Result<Outcome> {
    if gaussian {
        let blocks = load_blocks(input)?;
        let s = sample_gaussian_rp(&blocks, n, cfg.seed)?;
        if cfg.csv {
            return Ok(Outcome::ok(matrix_csv(&s, "x")));
        }
        let samples = s.row_iter().map(|r| r.iter().copied().collect()).collect();
        return Ok(Outcome::ok(to_json(&GaussianSampleReport { seed: cfg.seed, samples })));
    }
    let model = load_model(input)?;
    let samples = sample_joint(&model, n, cfg.seed)?;
    if cfg.csv {
        let mut s = (0..model.num_nodes()).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",");
        s.push('\n');
        for row in &samples {
            s.push_str(&row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        return Ok(Outcome::ok(s));
    }
    Ok(Outcome::ok(to_json(&SampleReport { seed: cfg.seed, samples })))
}

#[derive(Serialize)]
struct AssembleReport {
    block_dim: usize,
    num_blocks: usize,
    precision: Vec<Vec<f64>>,
    ci_pattern: Vec<(usize, usize)>,
    markov_subclass: bool,
}

#[derive(Serialize)]
struct CheckReport {
    #[serde(flatten)]
    report: BlockReport,
    ci_pattern: Option<Vec<(usize, usize)>>,
    markov_subclass: bool,
}

fn cmd_gauss(cfg: &RunConfig, verb: &GaussVerb) -> Result<Outcome> {
    match verb {
        GaussVerb::Assemble { input } => {
            let blocks = load_blocks(input)?;
            let p = assemble_precision(&blocks)?;
            if cfg.csv {
                return Ok(Outcome::ok(matrix_csv(&p.matrix, "c")));
            }
            let report = AssembleReport {
                block_dim: blocks.block_dim(),
                num_blocks: blocks.num_blocks(),
                ci_pattern: ci_pattern(&p.matrix, blocks.block_dim(), BLOCK_ZERO_TOL)?.into_iter().collect(),
                markov_subclass: markov_subclass_check(&blocks, BLOCK_ZERO_TOL),
                precision: p.matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
            };
            Ok(Outcome::ok(to_json(&report)))
        }
        GaussVerb::Check { input } => {
            let blocks = load_blocks(input)?;
            let report = validate_blocks(&blocks, true);
            let pattern = match assemble_precision(&blocks) {
                Ok(p) => Some(ci_pattern(&p.matrix, blocks.block_dim(), BLOCK_ZERO_TOL)?.into_iter().collect()),
                Err(_) => None,
            };
            let code = if report.valid { EXIT_OK } else { EXIT_VALIDATION };
            Ok(Outcome {
                text: to_json(&CheckReport {
                    markov_subclass: markov_subclass_check(&blocks, BLOCK_ZERO_TOL),
                    report,
                    ci_pattern: pattern,
                }),
                code,
            })
        }
        GaussVerb::Sample { input, num_samples } => {
            let blocks = load_blocks(input)?;
            let s = sample_gaussian_rp(&blocks, *num_samples, cfg.seed)?;
            Ok(Outcome::ok(matrix_csv(&s, "x")))
        }
    }
}

/// Runs one parsed command. Errors that abort the command are returned as
/// `Err`; partial results with a nonzero status come back as `Ok`.
pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let cfg = &cli.config;
    check_config(cfg)?;
    match &cli.command {
        Command::Validate { input } => cmd_validate(input),
        Command::Smooth { input } => cmd_smooth(cfg, input),
        Command::Exact { input } => cmd_exact(cfg, input),
        Command::Diagnose { input } => cmd_diagnose(cfg, input),
        Command::Correct { input } => cmd_correct(cfg, input),
        Command::Compare { input } => cmd_compare(cfg, input),
        Command::Sample {
            input,
            num_samples,
            gaussian,
        } => cmd_sample(cfg, input, *num_samples, *gaussian),
        Command::Gauss { verb } => cmd_gauss(cfg, verb),
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command, writes its output and returns the exit
/// status. Errors go to stderr as a JSON body.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = dispatch(&cli).and_then(|out| {
        emit(&cli.config, &out.text)?;
        Ok(out.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(e.kind())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::model_to_json;
    use crate::model::random_model;
    use std::io::Write;

    fn write_tmp(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn run_cmd(args: &[&str]) -> Outcome {
        let cli = Cli::try_parse_from(std::iter::once("recipbp").chain(args.iter().copied())).unwrap();
        match dispatch(&cli) {
            Ok(o) => o,
            Err(e) => Outcome {
                text: error_json(&e),
                code: exit_code(e.kind()),
            },
        }
    }

    #[test]
    fn smooth_uniform() {
        let f = write_tmp(&model_to_json(&HiddenReciprocalModel::uniform(2, 4).unwrap()));
        let out = run_cmd(&["smooth", f.path().to_str().unwrap()]);
        assert_eq!(out.code, 0);
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert_eq!(v["converged"], true);
        for b in v["beliefs"].as_array().unwrap() {
            assert_eq!(b, &serde_json::json!([0.5, 0.5]));
        }
    }

    #[test]
    fn exact_cap_exceeded_still_emits_transfer() {
        let f = write_tmp(&model_to_json(&HiddenReciprocalModel::uniform(4, 20).unwrap()));
        let out = run_cmd(&["exact", f.path().to_str().unwrap()]);
        assert_eq!(out.code, EXIT_NUMERICAL);
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert_eq!(v["transfer"].as_array().unwrap().len(), 20);
        assert!(v["bruteforce"].is_null());
        assert!(v["bruteforce_error"].as_str().unwrap().contains("exceeds the cap"));
    }

    #[test]
    fn compare_binary_model() {
        let f = write_tmp(&model_to_json(&random_model(2, 5, 3, 0.0).unwrap()));
        let out = run_cmd(&["compare", f.path().to_str().unwrap()]);
        assert_eq!(out.code, 0);
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert!(v["max_corrected_vs_exact"].as_f64().unwrap() <= 1e-8);
        for n in v["nodes"].as_array().unwrap() {
            let gap = n["bp_vs_exact"].as_f64().unwrap();
            let predicted = n["predicted_gap"].as_f64().unwrap();
            assert!((gap - predicted).abs() <= 1e-8);
        }
    }

    #[test]
    fn exit_codes() {
        let bad = write_tmp(r#"{"alphabet_size": 2, "edge_potentials": [[1,1,1,1],[1,1,1,1]]}"#);
        let p = bad.path().to_str().unwrap();
        assert_eq!(run_cmd(&["validate", p]).code, EXIT_VALIDATION);
        assert_eq!(run_cmd(&["smooth", p]).code, EXIT_VALIDATION);
        assert_eq!(run_cmd(&["smooth", "/nonexistent/model.json"]).code, EXIT_IO);
        let junk = write_tmp("{\"alphabet_size\": true}");
        assert_eq!(run_cmd(&["smooth", junk.path().to_str().unwrap()]).code, EXIT_IO);
        let good = write_tmp(&model_to_json(&HiddenReciprocalModel::uniform(2, 4).unwrap()));
        let g = good.path().to_str().unwrap();
        assert_eq!(run_cmd(&["smooth", g, "--tol", "0"]).code, EXIT_VALIDATION);
        let ternary = write_tmp(&model_to_json(&HiddenReciprocalModel::uniform(3, 4).unwrap()));
        assert_eq!(run_cmd(&["correct", ternary.path().to_str().unwrap()]).code, EXIT_VALIDATION);
        assert_eq!(run_cmd(&["diagnose", g, "--node", "9"]).code, EXIT_VALIDATION);
    }

    #[test]
    fn outputs_are_reproducible() {
        let f = write_tmp(&model_to_json(&random_model(3, 5, 8, 0.0).unwrap()));
        let p = f.path().to_str().unwrap();
        for args in [
            vec!["smooth", p, "--init", "random", "--seed", "4"],
            vec!["diagnose", p],
            vec!["sample", p, "-n", "50", "--seed", "2", "--csv"],
        ] {
            assert_eq!(run_cmd(&args), run_cmd(&args));
        }
    }

    #[test]
    fn gauss_verbs() {
        let f = write_tmp(&crate::io::blocks_to_json(&SecondOrderBlocks::scalar_stationary(4, 1.0, 0.6).unwrap()));
        let p = f.path().to_str().unwrap();
        let a = run_cmd(&["gauss", "assemble", p]);
        assert_eq!(a.code, 0);
        let v: serde_json::Value = serde_json::from_str(&a.text).unwrap();
        assert_eq!(v["precision"][0], serde_json::json!([1.0, -0.6, 0.0, -0.6]));
        let c = run_cmd(&["gauss", "check", p]);
        assert_eq!(c.code, EXIT_VALIDATION);
        assert!(c.text.contains("\"positive_definite\": false"));
        assert_eq!(run_cmd(&["gauss", "sample", p]).code, EXIT_NUMERICAL);
    }
}
