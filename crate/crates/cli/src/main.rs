//! Command-line driver for the decision-DNNF toolkit.
//!
//! Exit codes: 0 = ok, 1 = a validator or lower-bound check found a
//! violation, 2 = usage or input error.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use decdnnf_core::compiler::{
    compile_with_stats, min_obdd_size, reduced_obdd, CachePolicy, CompileConfig, CompileMode,
    OrderHeuristic,
};
use decdnnf_core::experiments::{
    best_split_matching, parse_experiment_config, rows_to_csv, run_experiment,
};
use decdnnf_core::instances::{
    build_f2_g, build_f_g, cycle, cycle_decomposition, disjoint_edges,
    disjoint_edges_decomposition, grid, grid_decomposition, random_partial_ktree,
    validate_decomposition, CnfFormula, Graph, TreeDecomposition,
};
use decdnnf_core::io;
use decdnnf_core::semantics::{condition, model_count};
use decdnnf_core::structure::{respects_order, respects_vtree, VariableOrder};
use decdnnf_core::transforms::{linearize, remove_vertex, strip_guard_clause, structured_to_fbdd};
use decdnnf_core::{Circuit, VarPool};

#[derive(Parser)]
#[command(
    name = "decdnnf",
    version,
    about = "Compile CNF formulas into decision-DNNF circuits, validate their structure, \
and run the size lower-bound oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph from a named family.
    GenGraph(GenGraphArgs),
    /// Build a CNF instance from a graph file.
    #[command(subcommand)]
    GenCnf(GenCnfCommand),
    /// Compile a CNF formula into a circuit.
    Compile(CompileArgs),
    /// Count the models of a circuit, optionally under an assignment.
    Count(CountArgs),
    /// Check structural invariants of a circuit (and optionally order,
    /// vtree, and decomposition witnesses). Exits 1 on violations.
    Validate(ValidateArgs),
    /// Rewrite circuits: linearize, to-fbdd, strip-guard, remove-vertex.
    #[command(subcommand)]
    Transform(TransformCommand),
    /// Minimum reduced-OBDD size over all orders (at most 8 variables).
    MinObdd(MinObddArgs),
    /// Search for the pivot/matching witness behind the two-copy size
    /// bound; `--check` compares it against the reduced OBDD.
    SplitMatching(SplitMatchingArgs),
    /// Run a configured sweep and emit CSV rows.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Cycle,
    Grid,
    DisjointEdges,
    Ktree,
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Cycle length, grid length, edge count, or vertex count.
    #[arg(long)]
    n: usize,
    /// Grid height or k-tree bag-size parameter.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Seed for the randomized k-tree family.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file for the graph (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the width witness (tree decomposition).
    #[arg(long)]
    decomposition_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCnfCommand {
    /// Edge clauses plus the guard clause over the graph variables.
    Fg(GenCnfArgs),
    /// The two-copy variant with doubled variables and guards.
    F2g(GenCnfArgs),
}

#[derive(Args)]
struct GenCnfArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HeuristicArg {
    Mindegree,
    Lexfirst,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    cnf: PathBuf,
    /// Inline fixed order, e.g. "x y z" (commas also accepted).
    #[arg(long, conflicts_with = "order_file")]
    order: Option<String>,
    /// File containing an `order ...` line.
    #[arg(long)]
    order_file: Option<PathBuf>,
    /// Branch heuristic when no fixed order is given.
    #[arg(long, value_enum, default_value_t = HeuristicArg::Mindegree)]
    heuristic: HeuristicArg,
    /// Disable the residual-formula cache.
    #[arg(long)]
    no_cache: bool,
    /// Disable decomposable AND nodes at component splits.
    #[arg(long)]
    no_components: bool,
    /// Print size and cache statistics to stderr.
    #[arg(long)]
    stats: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Partial assignment such as "x=1,y=0" applied before counting.
    #[arg(long)]
    assignment: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Inline order the circuit must respect.
    #[arg(long, conflicts_with = "order_file")]
    order: Option<String>,
    #[arg(long)]
    order_file: Option<PathBuf>,
    /// Vtree file the circuit must respect.
    #[arg(long)]
    vtree: Option<PathBuf>,
    /// Graph file for the decomposition check.
    #[arg(long, requires = "decomposition")]
    graph: Option<PathBuf>,
    /// Tree-decomposition file validated against --graph.
    #[arg(long, requires = "graph")]
    decomposition: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TransformCommand {
    /// Remove AND nodes from a circuit structured by a linear vtree.
    Linearize(VtreeTransformArgs),
    /// Linearize along the order witnessed by a decision path.
    ToFbdd(VtreeTransformArgs),
    /// Restrict a guard-clause circuit to the edge clauses only.
    StripGuard(GraphTransformArgs),
    /// Condition a graph-family circuit to the graph minus one vertex.
    RemoveVertex(RemoveVertexArgs),
}

#[derive(Args)]
struct VtreeTransformArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    vtree: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphTransformArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RemoveVertexArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// Vertex name to assign true.
    #[arg(long)]
    vertex: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinObddArgs {
    #[arg(long)]
    cnf: PathBuf,
}

#[derive(Args)]
struct SplitMatchingArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Inline order over the copy variables, e.g. "a_1 b_1 a_2 b_2".
    #[arg(long, conflicts_with = "order_file")]
    order: Option<String>,
    #[arg(long)]
    order_file: Option<PathBuf>,
    /// Also compare the bound against the reduced-OBDD size; exits 1 if
    /// the inequality fails.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Configuration file: `key = value` lines or a JSON object.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seeds with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

const OK: ExitCode = ExitCode::SUCCESS;
/// Exit status signalling that a validator found a violation.
fn violation() -> ExitCode {
    ExitCode::from(1)
}

fn err<E: Display>(e: E) -> String {
    e.to_string()
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_circuit(path: &Path) -> Result<Circuit, String> {
    io::parse_circuit(&read(path)?).map_err(err)
}

fn load_graph(path: &Path) -> Result<Graph, String> {
    io::parse_graph(&read(path)?).map_err(err)
}

fn load_cnf(path: &Path) -> Result<CnfFormula, String> {
    io::parse_dimacs(&read(path)?).map_err(err)
}

/// Resolves an order from an inline name list or an order file.
fn resolve_order(
    inline: &Option<String>,
    file: &Option<PathBuf>,
    pool: &VarPool,
) -> Result<Option<VariableOrder>, String> {
    match (inline, file) {
        (Some(names), _) => {
            let seq = names
                .split([',', ' '])
                .filter(|s| !s.is_empty())
                .map(|name| {
                    pool.var(name)
                        .ok_or_else(|| format!("unknown variable {name:?}"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Some(VariableOrder::new(seq).map_err(err)?))
        }
        (None, Some(path)) => Ok(Some(io::parse_order(&read(path)?, pool).map_err(err)?)),
        (None, None) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::GenGraph(args) => gen_graph(args),
        Command::GenCnf(cmd) => gen_cnf(cmd),
        Command::Compile(args) => compile_cmd(args),
        Command::Count(args) => count_cmd(args),
        Command::Validate(args) => validate_cmd(args),
        Command::Transform(cmd) => transform_cmd(cmd),
        Command::MinObdd(args) => min_obdd_cmd(args),
        Command::SplitMatching(args) => split_matching_cmd(args),
        Command::Experiment(args) => experiment_cmd(args),
    }
}

fn gen_graph(args: GenGraphArgs) -> Result<ExitCode, String> {
    let (graph, decomposition): (Graph, TreeDecomposition) = match args.family {
        FamilyArg::Cycle => (
            cycle(args.n).map_err(err)?,
            cycle_decomposition(args.n).map_err(err)?,
        ),
        FamilyArg::Grid => (
            grid(args.n, args.k).map_err(err)?,
            grid_decomposition(args.n, args.k).map_err(err)?,
        ),
        FamilyArg::DisjointEdges => (
            disjoint_edges(args.n).map_err(err)?,
            disjoint_edges_decomposition(args.n).map_err(err)?,
        ),
        FamilyArg::Ktree => {
            let (g, d) = random_partial_ktree(args.n, args.k, args.seed).map_err(err)?;
            (g, d)
        }
    };
    emit(&args.out, &io::write_graph(&graph))?;
    if let Some(path) = &args.decomposition_out {
        let width = validate_decomposition(&graph, &decomposition).map_err(err)?;
        fs::write(path, io::write_decomposition(&decomposition, &graph))
            .map_err(|e| format!("{}: {e}", path.display()))?;
        eprintln!("decomposition width {width}");
    }
    Ok(OK)
}

fn gen_cnf(cmd: GenCnfCommand) -> Result<ExitCode, String> {
    let (args, two_copy) = match &cmd {
        GenCnfCommand::Fg(a) => (a, false),
        GenCnfCommand::F2g(a) => (a, true),
    };
    let graph = load_graph(&args.graph)?;
    let formula = if two_copy {
        build_f2_g(&graph).map_err(err)?
    } else {
        build_f_g(&graph).map_err(err)?
    };
    emit(&args.out, &io::write_dimacs(&formula))?;
    Ok(OK)
}

fn compile_cmd(args: CompileArgs) -> Result<ExitCode, String> {
    let formula = load_cnf(&args.cnf)?;
    if formula.scope.is_empty() {
        return Err("the formula declares no variables".into());
    }
    let mode = match resolve_order(&args.order, &args.order_file, &formula.pool)? {
        Some(order) => {
            if !order.covers(&formula.occurring_vars()) {
                return Err("the fixed order must cover every occurring variable".into());
            }
            CompileMode::FixedOrder(order)
        }
        None => CompileMode::DynamicHeuristic(match args.heuristic {
            HeuristicArg::Mindegree => OrderHeuristic::MinDegree,
            HeuristicArg::Lexfirst => OrderHeuristic::LexFirst,
        }),
    };
    let cfg = CompileConfig {
        mode,
        caching: if args.no_cache {
            CachePolicy::Off
        } else {
            CachePolicy::ResidualFormulaKey
        },
        component_split: !args.no_components,
    };
    let (circuit, stats) = compile_with_stats(&formula, &cfg);
    if args.stats {
        eprintln!(
            "nodes {} size {} decisions {} ands {} cache-hits {} cache-misses {}",
            circuit.node_count(),
            circuit.size(),
            stats.decision_nodes,
            stats.and_nodes,
            stats.cache_hits,
            stats.cache_misses,
        );
    }
    emit(&args.out, &io::write_circuit(&circuit))?;
    Ok(OK)
}

fn count_cmd(args: CountArgs) -> Result<ExitCode, String> {
    let circuit = load_circuit(&args.circuit)?;
    let counted = match &args.assignment {
        None => model_count(&circuit, circuit.scope()).map_err(err)?,
        Some(text) => {
            let assignment = io::parse_assignment(text, circuit.pool()).map_err(err)?;
            for v in assignment.domain() {
                if !circuit.scope().contains(&v) {
                    return Err(format!(
                        "assigned variable {:?} is outside the circuit scope",
                        circuit.pool().name(v)
                    ));
                }
            }
            let conditioned = condition(&circuit, &assignment);
            let scope = conditioned.scope().clone();
            model_count(&conditioned, &scope).map_err(err)?
        }
    };
    println!("{}", counted.count);
    Ok(OK)
}

fn validate_cmd(args: ValidateArgs) -> Result<ExitCode, String> {
    let mut failed = false;
    let mut checked = false;
    if let Some(path) = &args.circuit {
        checked = true;
        // Structural invariants are enforced while reading; a file that
        // parses but breaks them is a found violation, not a usage error.
        let circuit = match io::parse_circuit(&read(path)?) {
            Ok(z) => z,
            Err(io::ParseError::Circuit(e)) => {
                println!("circuit: violation ({e})");
                return Ok(violation());
            }
            Err(e) => return Err(e.to_string()),
        };
        for (what, report) in [
            ("read-once", circuit.validate_read_once()),
            ("decomposable", circuit.validate_decomposable()),
        ] {
            if report.ok() {
                println!("{what}: ok");
            } else {
                failed = true;
                for v in &report.violations {
                    println!("{what}: violation {v:?}");
                }
            }
        }
        if let Some(order) = resolve_order(&args.order, &args.order_file, circuit.pool())? {
            let report = respects_order(&circuit, &order);
            if report.ok() {
                println!("order: ok");
            } else {
                failed = true;
                for v in &report.violations {
                    println!("order: violation {v:?}");
                }
            }
        }
        if let Some(path) = &args.vtree {
            let vtree = io::parse_vtree(&read(path)?, circuit.pool()).map_err(err)?;
            match respects_vtree(&circuit, &vtree) {
                Ok(report) if report.ok() => println!("vtree: ok"),
                Ok(report) => {
                    failed = true;
                    for v in &report.violations {
                        println!("vtree: violation {v:?}");
                    }
                }
                Err(e) => {
                    failed = true;
                    println!("vtree: violation ({e})");
                }
            }
        }
    } else if args.order.is_some() || args.order_file.is_some() || args.vtree.is_some() {
        return Err("--order and --vtree require --circuit".into());
    }
    if let (Some(graph_path), Some(d_path)) = (&args.graph, &args.decomposition) {
        checked = true;
        let graph = load_graph(graph_path)?;
        let decomposition = io::parse_decomposition(&read(d_path)?, &graph).map_err(err)?;
        match validate_decomposition(&graph, &decomposition) {
            Ok(width) => println!("decomposition: ok width {width}"),
            Err(e) => {
                failed = true;
                println!("decomposition: violation ({e})");
            }
        }
    }
    if !checked {
        return Err("nothing to validate; pass --circuit or --graph with --decomposition".into());
    }
    Ok(if failed { violation() } else { OK })
}

fn transform_cmd(cmd: TransformCommand) -> Result<ExitCode, String> {
    match cmd {
        TransformCommand::Linearize(args) => {
            let circuit = load_circuit(&args.circuit)?;
            let vtree = io::parse_vtree(&read(&args.vtree)?, circuit.pool()).map_err(err)?;
            let (out, trace) = linearize(&circuit, &vtree).map_err(err)?;
            eprintln!(
                "size {} -> {} ({} unary rewrites)",
                trace.size_before,
                trace.size_after,
                trace.steps.len()
            );
            emit(&args.out, &io::write_circuit(&out))?;
            Ok(OK)
        }
        TransformCommand::ToFbdd(args) => {
            let circuit = load_circuit(&args.circuit)?;
            let vtree = io::parse_vtree(&read(&args.vtree)?, circuit.pool()).map_err(err)?;
            let (out, trace) = structured_to_fbdd(&circuit, &vtree).map_err(err)?;
            eprintln!(
                "size {} -> {} ({} unary rewrites)",
                trace.size_before,
                trace.size_after,
                trace.steps.len()
            );
            emit(&args.out, &io::write_circuit(&out))?;
            Ok(OK)
        }
        TransformCommand::StripGuard(args) => {
            let circuit = load_circuit(&args.circuit)?;
            let graph = load_graph(&args.graph)?;
            let out = strip_guard_clause(&circuit, &graph).map_err(err)?;
            eprintln!("size {} -> {}", circuit.size(), out.size());
            emit(&args.out, &io::write_circuit(&out))?;
            Ok(OK)
        }
        TransformCommand::RemoveVertex(args) => {
            let circuit = load_circuit(&args.circuit)?;
            let graph = load_graph(&args.graph)?;
            let vertex = graph
                .index_of(&args.vertex)
                .ok_or_else(|| format!("unknown vertex {:?}", args.vertex))?;
            let out = remove_vertex(&circuit, &graph, vertex).map_err(err)?;
            emit(&args.out, &io::write_circuit(&out))?;
            Ok(OK)
        }
    }
}

fn min_obdd_cmd(args: MinObddArgs) -> Result<ExitCode, String> {
    let formula = load_cnf(&args.cnf)?;
    let (size, order) = min_obdd_size(&formula).map_err(err)?;
    println!("size {size}");
    print!("{}", io::write_order(&order, &formula.pool));
    Ok(OK)
}

fn split_matching_cmd(args: SplitMatchingArgs) -> Result<ExitCode, String> {
    let graph = load_graph(&args.graph)?;
    let formula = build_f2_g(&graph).map_err(err)?;
    let order = resolve_order(&args.order, &args.order_file, &formula.pool)?
        .ok_or("an order is required; pass --order or --order-file")?;
    let witness = best_split_matching(&graph, &order).map_err(err)?;
    match witness.pivot {
        Some(p) => println!("pivot {}", formula.pool.name(p)),
        None => println!("pivot none"),
    }
    for &(a, b) in &witness.pairs {
        println!("pair {} {}", formula.pool.name(a), formula.pool.name(b));
    }
    println!("matching {}", witness.matching_size());
    println!("bound {}", witness.bound);
    if args.check {
        let reduced = reduced_obdd(&formula, &order).map_err(err)?;
        println!("reduced-obdd-size {}", reduced.size());
        if (reduced.size() as u64) < witness.bound {
            println!("lower-bound: VIOLATED");
            return Ok(violation());
        }
        println!("lower-bound: ok");
    }
    Ok(OK)
}

/// Accepts a flat JSON object as an alternative configuration syntax
/// and rewrites it into `key = value` lines.
fn json_to_config(text: &str) -> Result<String, String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("invalid JSON config: {e}"))?;
    let Some(object) = value.as_object() else {
        return Err("the JSON config must be an object of settings".into());
    };
    let mut out = String::new();
    for (key, value) in object {
        let rendered = match value {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Bool(b) => if *b { "on" } else { "off" }.to_string(),
            serde_json::Value::Array(items) => items
                .iter()
                .map(|item| match item {
                    serde_json::Value::Number(n) => Ok(n.to_string()),
                    serde_json::Value::String(s) => Ok(s.clone()),
                    _ => Err(format!("unsupported list entry for {key:?}")),
                })
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            _ => return Err(format!("unsupported value for {key:?}")),
        };
        out.push_str(&format!("{key} = {rendered}\n"));
    }
    Ok(out)
}

fn experiment_cmd(args: ExperimentArgs) -> Result<ExitCode, String> {
    let raw = read(&args.config)?;
    let text = if raw.trim_start().starts_with('{') {
        json_to_config(&raw)?
    } else {
        raw
    };
    let mut cfg = parse_experiment_config(&text).map_err(err)?;
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    let rows = run_experiment(&cfg).map_err(err)?;
    emit(&args.out, &rows_to_csv(&rows))?;
    Ok(OK)
}
