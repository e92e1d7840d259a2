//! Command-line experiment runner.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cem::{
    chain_asymptote, chain_purity_series, chain_spectrum, chain_worst_closed_form, grid_boundary_stats,
    grid_ordering_example,
};
use crate::error::Error;
use crate::fit::{fit_power_law, FitMode};
use crate::graph::{boundary_fraction, Bipartition, EdgeProcess, Graph, GraphFile, PartitionFile, SweepKind};
use crate::oracle::{estimate_moments_with, OracleOptions};
use crate::perm::{single_edge_alpha_moment, single_edge_purity_variance};
use crate::rem::{complete_graph_asymptote, complete_graph_purity, rem_alpha_purity, rem_purity, rem_variance, renyi2_bound};
use crate::reproduce::{fmt_float, gap_study, reproduce_all, ReproduceConfig, Table};
use crate::swap::{evolve, EvolveMode};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "RQC_PURITY_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(String),
    #[error("{0} acceptance check(s) failed")]
    Acceptance(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Invalid(_)) => 2,
            CliError::Core(Error::Capacity(_)) => 3,
            CliError::Core(Error::Numerical(_)) | CliError::Io(_) => 1,
            CliError::Acceptance(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rqc-purity", version, about = "Ensemble purity of random quantum circuits on graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Haar moments of one two-site gate across the cut
    SingleEdge(SingleEdgeArgs),
    /// Random edge model closed forms for a boundary fraction q
    Rem(RemArgs),
    /// Random edge model on the complete graph K_n
    RemComplete(RemCompleteArgs),
    /// Spectral gap and conditioning of the K_n operator over a range of n
    GapScan(GapScanArgs),
    /// Contiguous edge model on a chain
    CemChain(CemChainArgs),
    /// Boundary statistics on a square grid and the four-site ordering example
    CemGrid(CemGridArgs),
    /// Exact averaged purity for a graph file and partition
    Evolve(EvolveArgs),
    /// Monte Carlo statevector estimate of Tr(rho_A^alpha)
    Oracle(OracleArgs),
    /// Regenerate every table and run all reference checks
    ReproduceAll(ReproduceArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Output file; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SingleEdgeArgs {
    /// Local dimension d
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Renyi order alpha
    #[arg(long, default_value_t = 2)]
    pub alpha: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct RemArgs {
    /// Boundary edge fraction q = |dA|/|E|
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Number of steps
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Renyi order for the one-step general-alpha value
    #[arg(long, default_value_t = 2)]
    pub alpha: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct RemCompleteArgs {
    /// Number of vertices N
    #[arg(long)]
    pub n: usize,
    /// Subsystem size N_A
    #[arg(long)]
    pub na: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GapScanArgs {
    #[arg(long, default_value_t = 8)]
    pub n_min: usize,
    #[arg(long, default_value_t = 64)]
    pub n_max: usize,
    #[arg(long, default_value_t = 4)]
    pub step: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Accuracy for the iteration-count columns
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// CSV output; the fit summary goes to --fit-out or standard output
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CemChainArgs {
    /// Chain length L
    #[arg(long)]
    pub l: usize,
    /// Sites in A (the left end of the chain)
    #[arg(long)]
    pub la: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Number of sweeps n_c
    #[arg(long, default_value_t = 20)]
    pub nc: usize,
    /// Include the leading eigenvalues of both sweep operators (JSON only)
    #[arg(long)]
    pub spectrum: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CemGridArgs {
    /// Boundary length l (number of disjoint crossing edges)
    #[arg(long)]
    pub l: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessArg {
    Uniform,
    Fixed,
    Markov,
}

#[derive(Debug, Args, Serialize)]
pub struct CircuitArgs {
    /// Graph file {"n": .., "d": .., "edges": [[..], ..]}
    #[arg(long)]
    pub graph: PathBuf,
    /// Partition file {"A": [..]}
    #[arg(long)]
    pub partition: PathBuf,
    #[arg(long, value_enum, default_value_t = ProcessArg::Uniform)]
    pub process: ProcessArg,
    /// Comma-separated edge indices for --process fixed
    #[arg(long, value_delimiter = ',')]
    pub sequence: Vec<usize>,
    /// Markov file {"initial": [..], "kernel": [[..], ..]} for --process markov
    #[arg(long)]
    pub markov: Option<PathBuf>,
    /// Number of steps
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Expectation,
    Sampled,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Expectation)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, default_value_t = 2)]
    pub alpha: usize,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    /// Rotate the product fiducial state by random local unitaries
    #[arg(long)]
    pub random_fiducial: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ReproduceArgs {
    /// Directory receiving the CSV tables and the report
    #[arg(long, default_value = "reproduce-out")]
    pub outdir: PathBuf,
    /// Skip the L_A = 200 spectrum and shorten the gap scan and sampling
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 20_240_901)]
    pub seed: u64,
}

/// Files to write and a one-line summary, produced before anything touches disk.
pub struct Outcome {
    pub files: Vec<(Option<PathBuf>, String)>,
    pub summary: String,
    pub failures: usize,
}

impl Outcome {
    fn single(path: Option<PathBuf>, body: String, summary: String) -> Self {
        Self { files: vec![(path, body)], summary, failures: 0 }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::SingleEdge(a) => single_edge(a),
        Command::Rem(a) => rem(a),
        Command::RemComplete(a) => rem_complete(a),
        Command::GapScan(a) => gap_scan_cmd(a),
        Command::CemChain(a) => cem_chain(a),
        Command::CemGrid(a) => cem_grid(a),
        Command::Evolve(a) => evolve_cmd(a),
        Command::Oracle(a) => oracle_cmd(a),
        Command::ReproduceAll(a) => reproduce_cmd(a),
    }
}

/// Writes every file of an outcome, creating parent directories.
pub fn write_outcome(outcome: &Outcome) -> Result<(), CliError> {
    for (path, body) in &outcome.files {
        match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
                }
                fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            }
            None => print!("{body}"),
        }
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::Invalid(msg.into()))
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

fn config<T: Serialize>(name: &str, args: &T) -> Value {
    let mut v = serde_json::to_value(args).expect("serializable args");
    v["command"] = json!(name);
    v
}

fn single_edge(a: &SingleEdgeArgs) -> Result<Outcome, CliError> {
    let m = single_edge_alpha_moment(a.alpha, a.d)?;
    let variance = if a.alpha == 2 { Some(single_edge_purity_variance(a.d)?) } else { None };
    let body = json!({"config": config("single-edge", a), "mean": m.value, "variance": variance});
    let summary = format!("single-edge d={} alpha={}: mean {}", a.d, a.alpha, fmt_float(m.value));
    Ok(Outcome::single(a.output.out.clone(), to_json(&body), summary))
}

fn rem(a: &RemArgs) -> Result<Outcome, CliError> {
    let mut t = Table::new("rem", &["k", "purity", "renyi2_bound_bits", "renyi2_linearized_bits"]);
    for k in 0..=a.k {
        let b = renyi2_bound(a.q, a.d, k)?;
        t.rows.push(vec![k as f64, rem_purity(a.q, a.d, k)?, b.bound, b.linearized]);
    }
    let alpha = rem_alpha_purity(a.q, a.d, a.alpha)?;
    let var = rem_variance(a.q, a.d, false)?;
    let var_approx = rem_variance(a.q, a.d, true)?;
    let body = match a.format {
        Format::Csv => t.to_csv(),
        Format::Json => to_json(&json!({
            "config": config("rem", a),
            "purity": t.rows.iter().map(|r| r[1]).collect::<Vec<_>>(),
            "renyi2_bound_bits": t.rows.iter().map(|r| r[2]).collect::<Vec<_>>(),
            "renyi2_linearized_bits": t.rows.iter().map(|r| r[3]).collect::<Vec<_>>(),
            "alpha_purity": alpha,
            "variance": var,
            "variance_small_q": var_approx,
        })),
    };
    let summary = format!("rem q={} d={}: purity after {} steps {}", a.q, a.d, a.k, fmt_float(t.rows[a.k][1]));
    Ok(Outcome::single(a.output.out.clone(), body, summary))
}

fn rem_complete(a: &RemCompleteArgs) -> Result<Outcome, CliError> {
    let s = complete_graph_purity(a.n, a.na, a.d, a.k)?;
    let p_inf = complete_graph_asymptote(a.n, a.na, a.d)?;
    let body = match a.format {
        Format::Csv => {
            let mut t = Table::new("rem-complete", &["k", "purity", "asymptote"]);
            for (k, v) in s.values.iter().enumerate() {
                t.rows.push(vec![k as f64, *v, p_inf]);
            }
            t.to_csv()
        }
        Format::Json => to_json(&json!({"config": config("rem-complete", a), "series": s, "asymptote": p_inf})),
    };
    let summary = format!("rem-complete n={} n_a={}: P_{} = {}, limit {}", a.n, a.na, a.k, fmt_float(s.last()), fmt_float(p_inf));
    Ok(Outcome::single(a.output.out.clone(), body, summary))
}

fn gap_scan_cmd(a: &GapScanArgs) -> Result<Outcome, CliError> {
    if a.step == 0 {
        return Err(invalid("--step must be positive"));
    }
    if a.n_min < 2 || a.n_max < a.n_min {
        return Err(invalid(format!("--n-min {} / --n-max {} do not form a range with n >= 2", a.n_min, a.n_max)));
    }
    let ns: Vec<usize> = (a.n_min..=a.n_max).step_by(a.step).collect();
    let study = gap_study(&ns, a.d, a.eps)?;
    let mut t = Table::new("gap-scan", &["n", "delta", "norm_product", "k_min", "k_emp"]);
    for (i, r) in study.reports.iter().enumerate() {
        t.rows.push(vec![r.n as f64, r.delta, r.norm_product, study.k_min[i] as f64, study.k_emp[i] as f64]);
    }
    let col = |j: usize| t.rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let x = col(0);
    let fits = if ns.len() >= 3 {
        json!({
            "delta_loglog": fit_power_law(&x, &col(1), FitMode::LogLog)?,
            "norm_product_semilog": fit_power_law(&x, &col(2), FitMode::SemiLog)?,
            "k_min_loglog": fit_power_law(&x, &col(3), FitMode::LogLog)?,
        })
    } else {
        Value::Null
    };
    let body = to_json(&json!({"config": config("gap-scan", a), "fits": fits}));
    let summary = match fits.get("delta_loglog") {
        Some(f) => format!("gap-scan {} sizes: delta slope {}", ns.len(), f["slope"]),
        None => format!("gap-scan {} sizes", ns.len()),
    };
    let mut outcome = Outcome::single(a.output.out.clone(), t.to_csv(), summary);
    outcome.files.push((a.fit_out.clone(), body));
    Ok(outcome)
}

fn cem_chain(a: &CemChainArgs) -> Result<Outcome, CliError> {
    let best = chain_purity_series(a.l, a.la, a.d, SweepKind::Best, a.nc)?;
    let worst = chain_purity_series(a.l, a.la, a.d, SweepKind::Worst, a.nc)?;
    let p_inf = chain_asymptote(a.l, a.la, a.d)?;
    let l_b = a.l - a.la;
    // the binomial sum is exact only while n_c <= L_A <= L_B
    let closed = |n_c: usize| -> Result<Option<f64>, CliError> {
        if n_c <= a.la && a.la <= l_b {
            Ok(Some(chain_worst_closed_form(n_c, a.d, false)?))
        } else {
            Ok(None)
        }
    };
    let body = match a.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(["n_c", "purity_best", "purity_worst", "closed_form", "asymptote"]).map_err(io)?;
            for c in 0..=a.nc {
                let cf = closed(c)?.map(fmt_float).unwrap_or_default();
                w.write_record([c.to_string(), fmt_float(best.values[c]), fmt_float(worst.values[c]), cf, fmt_float(p_inf)])
                    .map_err(io)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("utf-8 csv")
        }
        Format::Json => {
            let closed_form: Vec<Option<f64>> = (0..=a.nc).map(closed).collect::<Result<_, _>>()?;
            let spectrum = if a.spectrum {
                json!({
                    "best": chain_spectrum(a.l, a.la, SweepKind::Best, a.d)?,
                    "worst": chain_spectrum(a.l, a.la, SweepKind::Worst, a.d)?,
                })
            } else {
                Value::Null
            };
            to_json(&json!({
                "config": config("cem-chain", a),
                "purity_best": best.values,
                "purity_worst": worst.values,
                "closed_form": closed_form,
                "asymptote": p_inf,
                "spectrum": spectrum,
            }))
        }
    };
    let summary = format!(
        "cem-chain L={} L_A={}: best {} worst {} after {} sweeps, limit {}",
        a.l,
        a.la,
        fmt_float(best.last()),
        fmt_float(worst.last()),
        a.nc,
        fmt_float(p_inf)
    );
    Ok(Outcome::single(a.output.out.clone(), body, summary))
}

fn cem_grid(a: &CemGridArgs) -> Result<Outcome, CliError> {
    let s = grid_boundary_stats(a.l, a.d)?;
    let o = grid_ordering_example(a.d)?;
    let body = json!({"config": config("cem-grid", a), "purity": s.purity, "variance": s.variance, "ordering": o});
    let summary = format!("cem-grid l={}: purity {} variance {}", a.l, fmt_float(s.purity), fmt_float(s.variance));
    Ok(Outcome::single(a.output.out.clone(), to_json(&body), summary))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkovFile {
    initial: Vec<f64>,
    kernel: Vec<Vec<f64>>,
}

fn read(path: &Path, flag: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| invalid(format!("--{flag} {}: {e}", path.display())))
}

fn load_circuit(c: &CircuitArgs) -> Result<(Graph, Bipartition, EdgeProcess), CliError> {
    let g = GraphFile::parse(&read(&c.graph, "graph")?).map_err(|e| e.context("--graph"))?;
    let p = PartitionFile::parse(&read(&c.partition, "partition")?, &g).map_err(|e| e.context("--partition"))?;
    let proc = match c.process {
        ProcessArg::Uniform => EdgeProcess::uniform(&g),
        ProcessArg::Fixed => {
            if c.sequence.is_empty() {
                return Err(invalid("--process fixed needs --sequence"));
            }
            EdgeProcess::fixed_indices(&g, c.sequence.clone()).map_err(|e| e.context("--sequence"))?
        }
        ProcessArg::Markov => {
            let path = c.markov.as_ref().ok_or_else(|| invalid("--process markov needs --markov"))?;
            let m: MarkovFile =
                serde_json::from_str(&read(path, "markov")?).map_err(|e| invalid(format!("--markov: {e}")))?;
            EdgeProcess::markov(&g, m.initial, m.kernel).map_err(|e| e.context("--markov"))?
        }
    };
    Ok((g, p, proc))
}

fn evolve_cmd(a: &EvolveArgs) -> Result<Outcome, CliError> {
    let (g, p, proc) = load_circuit(&a.circuit)?;
    let mode = match a.mode {
        ModeArg::Expectation => EvolveMode::Expectation,
        ModeArg::Sampled => EvolveMode::Sampled { seed: a.circuit.seed },
    };
    let s = evolve(&g, &p, &proc, a.circuit.k, mode)?;
    let q = boundary_fraction(&g, &p);
    let body = match a.format {
        Format::Csv => {
            let t = match &s.gate_counts {
                Some(gc) => {
                    let mut t = Table::new("evolve", &["step", "gate_count", "purity"]);
                    t.rows = s.values.iter().enumerate().map(|(k, v)| vec![k as f64, gc[k] as f64, *v]).collect();
                    t
                }
                None => {
                    let mut t = Table::new("evolve", &["step", "purity"]);
                    t.rows = s.values.iter().enumerate().map(|(k, v)| vec![k as f64, *v]).collect();
                    t
                }
            };
            t.to_csv()
        }
        Format::Json => to_json(&json!({"config": config("evolve", a), "boundary_fraction": q, "series": s})),
    };
    let summary = format!("evolve: purity after {} steps {}", a.circuit.k, fmt_float(s.last()));
    Ok(Outcome::single(a.output.out.clone(), body, summary))
}

fn oracle_cmd(a: &OracleArgs) -> Result<Outcome, CliError> {
    let (g, p, proc) = load_circuit(&a.circuit)?;
    let opts = OracleOptions { alpha: a.alpha, samples: a.samples, seed: a.circuit.seed, random_fiducial: a.random_fiducial };
    let s = estimate_moments_with(&g, &proc, &p, a.circuit.k, &opts)?;
    let body = json!({
        "config": config("oracle", a),
        "mean": s.mean,
        "variance": s.variance(),
        "stderr": s.stderr(),
        "samples": s.n_samples,
        "seed": a.circuit.seed,
    });
    let summary = format!("oracle: mean {} +- {}", fmt_float(s.mean), fmt_float(s.stderr()));
    Ok(Outcome::single(a.output.out.clone(), to_json(&body), summary))
}

fn reproduce_cmd(a: &ReproduceArgs) -> Result<Outcome, CliError> {
    let cfg = ReproduceConfig::new(a.quick, a.seed);
    let report = reproduce_all(&cfg)?;
    let mut files: Vec<(Option<PathBuf>, String)> =
        report.tables.iter().map(|t| (Some(a.outdir.join(format!("{}.csv", t.name))), t.to_csv())).collect();
    let text = report.to_text();
    files.push((Some(a.outdir.join("report.txt")), text.clone()));
    let json_report = json!({"config": config("reproduce-all", a), "resolved": cfg, "report": report});
    files.push((Some(a.outdir.join("report.json")), to_json(&json_report)));
    files.push((None, text));
    let failures = report.count(crate::reproduce::Status::Fail);
    let summary = format!(
        "reproduce-all: {} passed, {} failed, {} skipped; output in {}",
        report.count(crate::reproduce::Status::Pass),
        failures,
        report.count(crate::reproduce::Status::Skip),
        a.outdir.display()
    );
    Ok(Outcome { files, summary, failures })
}
