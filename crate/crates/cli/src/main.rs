use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use neurocactus::control::{controllability_rank, structural_controllability_test, TolerancePolicy};
use neurocactus::dynamics::{NetworkParams, Waveform};
use neurocactus::graph::{
    decomposition_to_json, generate_generalized_with, graph_to_json, load_decomposition, load_graph_document,
    validate_generalized, GeneratorOptions, Verdict, WeightBounds,
};
use neurocactus::scenario::{load_scenario, load_target, run_scenario, write_outputs, LqrSpec};
use neurocactus::Error;

/// Simulate and analyse neuromimetic networks with Hebbian weights.
///
/// Every run prints one summary line on standard output. Exit status is 0
/// on success, 1 when a check fails and 2 on usage or input errors.
/// Logging goes to standard error; set NEUROCACTUS_LOG to error, info or debug.
#[derive(Parser)]
#[command(name = "neurocactus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and check its expectations.
    Simulate {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Also write state.svg and weights.svg.
        #[arg(long)]
        plot: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check a generalized sym-cactus certificate against a graph.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        decomposition: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Rank test at the initial weights plus random admissible weights.
    Controllability {
        #[arg(long)]
        graph: PathBuf,
        /// Number of random weight draws.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Decay rate used to form H = -c_n I + A.
        #[arg(long, default_value_t = 4.1)]
        c_n: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario under LQR feedback towards a target.
    Lqr {
        /// Scenario JSON file; its open-loop inputs are replaced by the feedback.
        #[arg(long)]
        scenario: PathBuf,
        /// Target file; defaults to the scenario's own lqr block.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Keep the gain designed for the initial weights.
        #[arg(long)]
        fixed_gain: bool,
        /// Also write state.svg and weights.svg.
        #[arg(long)]
        plot: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a random generalized sym-cactus graph.
    Generate {
        /// Number of nodes.
        #[arg(long)]
        nodes: usize,
        /// Comma-separated control nodes, one cactus each.
        #[arg(long, value_delimiter = ',', required = true)]
        roots: Vec<usize>,
        /// Degree cap for every node, at least 3.
        #[arg(long)]
        max_degree: Option<usize>,
        /// Probability that an edge is excitatory.
        #[arg(long, default_value_t = 0.8)]
        sign_ratio: f64,
        /// Edges added across cacti; defaults to one fewer than the number of cacti.
        #[arg(long)]
        extra_edges: Option<usize>,
        /// File stem for NAME.graph.json and NAME.decomposition.json.
        #[arg(long, default_value = "generated")]
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print the version.
    Version {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Encoding of the summary line.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    /// Values only, in the key order of the JSON form.
    Csv,
}

enum Failure {
    Input(Error),
    Check(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Control(_) => Failure::Check(e),
            other => Failure::Input(other),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NEUROCACTUS_LOG", "warn")).init();
    let cli = Cli::parse();
    let format = match &cli.command {
        Command::Simulate { common, .. }
        | Command::Validate { common, .. }
        | Command::Controllability { common, .. }
        | Command::Lqr { common, .. }
        | Command::Generate { common, .. }
        | Command::Version { common } => common.format,
    };
    match run(cli.command) {
        Ok((summary, ok)) => {
            println!("{}", render(&summary, format));
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Check(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn render(summary: &Map<String, Value>, format: Format) -> String {
    match format {
        Format::Json => Value::Object(summary.clone()).to_string(),
        Format::Csv => summary
            .values()
            .map(|v| match v {
                Value::String(s) if !s.contains(',') && !s.contains('"') => s.clone(),
                Value::String(s) => format!("\"{}\"", s.replace('"', "\"\"")),
                other => {
                    let s = other.to_string();
                    if s.contains(',') {
                        format!("\"{}\"", s.replace('"', "\"\""))
                    } else {
                        s
                    }
                }
            })
            .collect::<Vec<_>>()
            .join(","),
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("summaries are objects"),
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn pretty(value: Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("serializable");
    s.push('\n');
    s
}

fn run(command: Command) -> Result<(Map<String, Value>, bool), Failure> {
    match command {
        Command::Simulate { scenario, plot, common } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = common.seed {
                s.seed = seed;
            }
            let out = common.out.unwrap_or_else(|| PathBuf::from(&s.name));
            let run = run_scenario(&s)?;
            write_outputs(&run, &s, &out, plot)?;
            let failed: Vec<&str> = run
                .report
                .checks
                .iter()
                .filter(|c| c.enforced && !c.passed)
                .map(|c| c.check.as_str())
                .collect();
            log::info!("{} samples, {} checks", run.report.samples, run.report.checks.len());
            Ok((
                object(json!({
                    "command": "simulate",
                    "scenario": s.name,
                    "passed": run.report.passed,
                    "checks": run.report.checks.len(),
                    "failed": failed.join(" "),
                    "max_state_norm": run.report.monitor.max_state_norm,
                    "final_state_norm": run.report.monitor.final_state_norm,
                    "out": out.display().to_string(),
                })),
                run.report.passed,
            ))
        }
        Command::Validate {
            graph,
            decomposition,
            common,
        } => {
            let g = load_graph_document(&graph)?.into_graph(None)?;
            let gd = load_decomposition(&decomposition)?;
            let verdict = validate_generalized(&g, &gd);
            if let Some(out) = &common.out {
                write_file(out, "verdict.json", &pretty(json!(verdict)))?;
            }
            let ok = verdict.is_accept();
            let reason = match &verdict {
                Verdict::Accept => String::new(),
                Verdict::Reject(r) => r.to_string(),
            };
            Ok((
                object(json!({
                    "command": "validate",
                    "verdict": if ok { "accept" } else { "reject" },
                    "reason": reason,
                    "cacti": gd.cacti.len(),
                })),
                ok,
            ))
        }
        Command::Controllability {
            graph,
            samples,
            c_n,
            common,
        } => {
            let doc = load_graph_document(&graph)?;
            let bounds = doc.bounds.unwrap_or_default();
            let g = doc.into_graph(None)?;
            let p = NetworkParams {
                c_n,
                bounds,
                ..NetworkParams::default()
            };
            p.validate().map_err(|e| Failure::Input(e.into()))?;
            let seed = common.seed.unwrap_or(0);
            let initial = controllability_rank(
                &p.state_matrix(&g.initial_weights()),
                &g.input_matrix(),
                TolerancePolicy::Spectral,
            )
            .map_err(Error::from)?;
            let sampled = structural_controllability_test(&g, &p, samples, seed).map_err(Error::from)?;
            if let Some(out) = &common.out {
                write_file(
                    out,
                    "controllability.json",
                    &pretty(json!({"initial": initial, "sampled": sampled, "seed": seed})),
                )?;
            }
            let ok = sampled.controllable;
            Ok((
                object(json!({
                    "command": "controllability",
                    "controllable": ok,
                    "rank": initial.rank,
                    "n": initial.n,
                    "initial_controllable": initial.controllable,
                    "sample_fraction": sampled.sample_fraction_full_rank,
                    "samples": samples,
                    "seed": seed,
                })),
                ok,
            ))
        }
        Command::Lqr {
            scenario,
            target,
            fixed_gain,
            plot,
            common,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = common.seed {
                s.seed = seed;
            }
            let n = s.graph.n();
            let recompute = !fixed_gain && s.lqr.as_ref().is_none_or(|l| l.recompute_each_slot);
            let target = match (target, &s.lqr) {
                (Some(path), _) => load_target(path, n)?,
                (None, Some(l)) => l.target.clone(),
                (None, None) => {
                    return Err(Failure::Input(Error::Schema {
                        pointer: "/lqr".into(),
                        message: "scenario has no lqr block and no --target was given".into(),
                    }))
                }
            };
            s.inputs = vec![Waveform::Zero; s.inputs.len()];
            s.lqr = Some(LqrSpec {
                target: target.clone(),
                recompute_each_slot: recompute,
            });
            let out = common.out.unwrap_or_else(|| PathBuf::from(format!("{}-lqr", s.name)));
            let run = run_scenario(&s)?;
            write_outputs(&run, &s, &out, plot)?;
            let design = run.report.lqr.as_ref().expect("lqr run");
            write_file(&out, "lqr.json", &pretty(json!(design)))?;
            let gap = (run.trajectory.final_state() - &target).amax();
            Ok((
                object(json!({
                    "command": "lqr",
                    "scenario": s.name,
                    "passed": run.report.passed,
                    "recompute_each_slot": recompute,
                    "care_residual": design.solution.care_residual,
                    "target_residual": design.target_residual,
                    "steady_state_gap": gap,
                    "out": out.display().to_string(),
                })),
                run.report.passed,
            ))
        }
        Command::Generate {
            nodes,
            roots,
            max_degree,
            sign_ratio,
            extra_edges,
            name,
            common,
        } => {
            let seed = common.seed.unwrap_or(0);
            let opts = GeneratorOptions {
                sign_ratio,
                max_degree,
                extra_edges,
                ..GeneratorOptions::default()
            };
            let bounds = WeightBounds::default();
            let (g, gd) = generate_generalized_with(nodes, &roots, seed, &bounds, &opts).map_err(Error::from)?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("."));
            let graph_path = write_file(&out, &format!("{name}.graph.json"), &graph_to_json(&g, None))?;
            let dec_path = write_file(&out, &format!("{name}.decomposition.json"), &decomposition_to_json(&gd))?;
            Ok((
                object(json!({
                    "command": "generate",
                    "nodes": nodes,
                    "edges": g.edges().len(),
                    "max_degree": g.max_out_degree(),
                    "seed": seed,
                    "graph": graph_path.display().to_string(),
                    "decomposition": dec_path.display().to_string(),
                })),
                true,
            ))
        }
        Command::Version { .. } => Ok((
            object(json!({"command": "version", "version": env!("CARGO_PKG_VERSION")})),
            true,
        )),
    }
}
