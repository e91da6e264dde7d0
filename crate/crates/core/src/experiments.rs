//! Lower-bound witnesses and the batch experiment harness.
//!
//! [`best_split_matching`] searches for the witness that drives the
//! two-copy size bound: a pivot variable u and a set M of pairs
//! (v¹, w²) with v¹ ≤ u < w² in the supplied order whose underlying
//! edges form an induced matching; any circuit respecting the order
//! then has size at least 2^(|M|−2). [`theorem13_check`] pits that
//! bound against the measurable reduced-OBDD size.
//! [`run_experiment`] drives instance generators, compilation, and the
//! oracles from a plain-text configuration and emits CSV rows.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Var};
use crate::compiler::{
    compile, min_obdd_size, reduced_obdd, CachePolicy, CompileConfig, CompileError, CompileMode,
    OrderHeuristic, OBDD_VAR_LIMIT, SWEEP_VAR_LIMIT,
};
use crate::instances::{
    build_f2_g, build_f_g, cycle, cycle_decomposition, disjoint_edges,
    disjoint_edges_decomposition, grid, grid_decomposition, is_induced_matching,
    random_partial_ktree, validate_decomposition, Graph, InstanceError, Vertex,
};
use crate::structure::{has_decision_path, VariableOrder};

/// Hard cap on the exhaustive pivot/matching search.
pub const SPLIT_VERTEX_LIMIT: usize = 10;

/// First-copy variable of a vertex in a two-copy formula (id layout of
/// the builder: copies are interned pairwise per vertex).
pub fn first_copy(v: Vertex) -> Var {
    Var(2 * v.0)
}

/// Second-copy variable of a vertex in a two-copy formula.
pub fn second_copy(v: Vertex) -> Var {
    Var(2 * v.0 + 1)
}

/// Witness for the two-copy size lower bound: every pair (v¹, w²)
/// straddles the pivot in the order, and the underlying edges form an
/// induced matching of the graph.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SplitWitness {
    /// None when no pair straddles any pivot (the bound degenerates to 1).
    pub pivot: Option<Var>,
    /// Pairs (v¹, w²), sorted by variable id.
    pub pairs: Vec<(Var, Var)>,
    /// max(1, 2^(|pairs| − 2)).
    pub bound: u64,
}

impl SplitWitness {
    pub fn matching_size(&self) -> usize {
        self.pairs.len()
    }

    /// The underlying graph edges, normalized and sorted.
    pub fn matching_edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut edges: Vec<(Vertex, Vertex)> = self
            .pairs
            .iter()
            .map(|&(a, b)| {
                let (u, v) = (Vertex(a.0 / 2), Vertex(b.0 / 2));
                if u.0 <= v.0 {
                    (u, v)
                } else {
                    (v, u)
                }
            })
            .collect();
        edges.sort();
        edges
    }
}

fn split_bound(matching_size: usize) -> u64 {
    if matching_size >= 2 {
        1u64 << (matching_size - 2)
    } else {
        1
    }
}

/// Every induced matching of `g` (including the empty one), enumerated
/// by include/skip recursion over the sorted edge list.
fn all_induced_matchings(g: &Graph) -> Vec<Vec<(Vertex, Vertex)>> {
    fn compatible(g: &Graph, m: &[(Vertex, Vertex)], e: (Vertex, Vertex)) -> bool {
        m.iter().all(|&(a, b)| {
            [e.0, e.1]
                .iter()
                .all(|&x| [a, b].iter().all(|&y| x != y && !g.has_edge(x, y)))
        })
    }
    fn rec(
        g: &Graph,
        edges: &[(Vertex, Vertex)],
        i: usize,
        cur: &mut Vec<(Vertex, Vertex)>,
        out: &mut Vec<Vec<(Vertex, Vertex)>>,
    ) {
        if i == edges.len() {
            out.push(cur.clone());
            return;
        }
        rec(g, edges, i + 1, cur, out);
        if compatible(g, cur, edges[i]) {
            cur.push(edges[i]);
            rec(g, edges, i + 1, cur, out);
            cur.pop();
        }
    }
    let edges = g.edges();
    let mut out = Vec::new();
    rec(g, &edges, 0, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive search (all pivots × all induced matchings, both copy
/// assignments per edge) for the largest valid witness under `order`,
/// which must consist of exactly the two copy variables of every
/// vertex. When nothing straddles any pivot the result has an empty
/// matching and bound 1.
pub fn best_split_matching(g: &Graph, order: &VariableOrder) -> Result<SplitWitness, CompileError> {
    let n = g.vertex_count();
    if n > SPLIT_VERTEX_LIMIT {
        return Err(CompileError::TooManyVertices {
            n,
            limit: SPLIT_VERTEX_LIMIT,
        });
    }
    let copies: BTreeSet<Var> = g
        .vertices()
        .flat_map(|v| [first_copy(v), second_copy(v)])
        .collect();
    assert!(
        order.len() == copies.len() && order.covers(&copies),
        "order must cover exactly the copy variables"
    );
    let pos = |v: Var| order.position(v).expect("covered");
    let matchings = all_induced_matchings(g);
    let mut best: Option<(Vec<(Var, Var)>, Var)> = None;
    for &u in order.seq() {
        for m in &matchings {
            let mut pairs = Vec::new();
            for &(v, w) in m {
                if pos(first_copy(v)) <= pos(u) && pos(u) < pos(second_copy(w)) {
                    pairs.push((first_copy(v), second_copy(w)));
                } else if pos(first_copy(w)) <= pos(u) && pos(u) < pos(second_copy(v)) {
                    pairs.push((first_copy(w), second_copy(v)));
                }
            }
            if best
                .as_ref()
                .map_or(!pairs.is_empty(), |(b, _)| pairs.len() > b.len())
            {
                best = Some((pairs, u));
            }
        }
    }
    let witness = match best {
        Some((mut pairs, pivot)) => {
            pairs.sort();
            let bound = split_bound(pairs.len());
            SplitWitness {
                pivot: Some(pivot),
                pairs,
                bound,
            }
        }
        None => SplitWitness {
            pivot: None,
            pairs: Vec::new(),
            bound: 1,
        },
    };
    debug_assert!(is_induced_matching(g, &witness.matching_edges()));
    Ok(witness)
}

/// Outcome of the size lower-bound check on one (graph, order) pair.
#[derive(Clone, Debug)]
pub struct LowerBoundReport {
    /// Size of the canonical reduced OBDD for the two-copy formula.
    pub reduced_size: usize,
    pub witness: SplitWitness,
}

impl LowerBoundReport {
    pub fn holds(&self) -> bool {
        self.reduced_size as u64 >= self.witness.bound
    }
}

/// Checks the two-copy size bound against the reduced OBDD. The bound
/// applies because a reduced OBDD respecting the order is in particular
/// an ordered circuit with decomposable ANDs (it has none), so the
/// witness-based lower bound covers it. Panics if the inequality ever
/// failed, and returns both numbers for reporting.
pub fn theorem13_check(g: &Graph, order: &VariableOrder) -> Result<LowerBoundReport, CompileError> {
    let f2 = build_f2_g(g).expect("graph must be nonempty");
    let reduced = reduced_obdd(&f2, order)?;
    let witness = best_split_matching(g, order)?;
    let report = LowerBoundReport {
        reduced_size: reduced.size(),
        witness,
    };
    assert!(
        report.holds(),
        "size lower bound violated: reduced size {} < bound {}",
        report.reduced_size,
        report.witness.bound
    );
    Ok(report)
}

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Malformed { line: usize, text: String },
    #[error("unknown configuration key {key:?}")]
    UnknownKey { key: String },
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key {key:?}")]
    MissingKey { key: &'static str },
    #[error("instance construction failed: {0}")]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Family {
    Cycle,
    Grid,
    DisjointEdges,
    PartialKtree,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Cycle => "cycle",
            Family::Grid => "grid",
            Family::DisjointEdges => "disjoint_edges",
            Family::PartialKtree => "ktree",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OrderStyle {
    /// Copy variables in id order (the two copies of each vertex are
    /// adjacent).
    Sorted,
    /// All first copies, then all second copies — the adversarial
    /// layout for the split bound.
    Split,
    /// Seeded shuffles of the copy variables.
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ModeKind {
    Fixed,
    MinDegree,
    LexFirst,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Fixed => "fixed",
            ModeKind::MinDegree => "mindegree",
            ModeKind::LexFirst => "lexfirst",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: Family,
    /// Size parameter per instance: cycle length, grid length, edge
    /// count, or vertex count depending on the family.
    pub sizes: Vec<usize>,
    /// Grid height or bag-size parameter for the partial-k-tree family.
    pub k: usize,
    /// Graph seeds (only the partial-k-tree family is randomized, but
    /// every instance is replicated per seed for uniform row shapes).
    pub seeds: Vec<u64>,
    pub order_style: OrderStyle,
    /// Number of random orders per instance (ignored otherwise).
    pub order_count: usize,
    pub mode: ModeKind,
    pub min_obdd: bool,
    pub caching: bool,
    pub component_split: bool,
}

impl ExperimentConfig {
    fn compile_config(&self, order: &VariableOrder) -> CompileConfig {
        let mode = match self.mode {
            ModeKind::Fixed => CompileMode::FixedOrder(order.clone()),
            ModeKind::MinDegree => CompileMode::DynamicHeuristic(OrderHeuristic::MinDegree),
            ModeKind::LexFirst => CompileMode::DynamicHeuristic(OrderHeuristic::LexFirst),
        };
        CompileConfig {
            mode,
            caching: if self.caching {
                CachePolicy::ResidualFormulaKey
            } else {
                CachePolicy::Off
            },
            component_split: self.component_split,
        }
    }
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// `a..b` (inclusive), `a,b,c`, or a single number.
fn parse_number_list(key: &str, value: &str) -> Result<Vec<u64>, ConfigError> {
    let parse_one = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| invalid(key, value, "expected a non-negative integer"))
    };
    if let Some((a, b)) = value.split_once("..") {
        let (a, b) = (parse_one(a)?, parse_one(b)?);
        if a > b {
            return Err(invalid(key, value, "range start exceeds range end"));
        }
        return Ok((a..=b).collect());
    }
    let items: Vec<u64> = value.split(',').map(parse_one).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(invalid(key, value, "expected at least one number"));
    }
    Ok(items)
}

fn parse_flag(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(invalid(key, value, "expected on/off")),
    }
}

/// Parses the plain `key = value` configuration format (one pair per
/// line, `#` starts a comment). Required keys: `family`, `n`. Optional:
/// `k`, `seeds`, `orders`, `order_count`, `mode`, `min_obdd`,
/// `caching`, `components`.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut family = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut k = 2usize;
    let mut seeds = vec![0u64];
    let mut order_style = OrderStyle::Sorted;
    let mut order_count = 1usize;
    let mut mode = ModeKind::Fixed;
    let mut min_obdd = false;
    let mut caching = true;
    let mut component_split = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Malformed {
                line: i + 1,
                text: line.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "family" => {
                family = Some(match value {
                    "cycle" => Family::Cycle,
                    "grid" => Family::Grid,
                    "disjoint_edges" => Family::DisjointEdges,
                    "ktree" => Family::PartialKtree,
                    _ => {
                        return Err(invalid(
                            key,
                            value,
                            "expected cycle/grid/disjoint_edges/ktree",
                        ))
                    }
                });
            }
            "n" => {
                sizes = Some(
                    parse_number_list(key, value)?
                        .into_iter()
                        .map(|v| v as usize)
                        .collect(),
                );
            }
            "k" => {
                k = value
                    .parse()
                    .map_err(|_| invalid(key, value, "expected an integer"))?;
            }
            "seeds" => seeds = parse_number_list(key, value)?,
            "orders" => {
                order_style = match value {
                    "sorted" => OrderStyle::Sorted,
                    "split" => OrderStyle::Split,
                    "random" => OrderStyle::Random,
                    _ => return Err(invalid(key, value, "expected sorted/split/random")),
                };
            }
            "order_count" => {
                order_count = value
                    .parse()
                    .map_err(|_| invalid(key, value, "expected an integer"))?;
                if order_count == 0 {
                    return Err(invalid(key, value, "need at least one order"));
                }
            }
            "mode" => {
                mode = match value {
                    "fixed" => ModeKind::Fixed,
                    "mindegree" => ModeKind::MinDegree,
                    "lexfirst" => ModeKind::LexFirst,
                    _ => return Err(invalid(key, value, "expected fixed/mindegree/lexfirst")),
                };
            }
            "min_obdd" => min_obdd = parse_flag(key, value)?,
            "caching" => caching = parse_flag(key, value)?,
            "components" => component_split = parse_flag(key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                })
            }
        }
    }
    let family = family.ok_or(ConfigError::MissingKey { key: "family" })?;
    let sizes = sizes.ok_or(ConfigError::MissingKey { key: "n" })?;
    Ok(ExperimentConfig {
        family,
        sizes,
        k,
        seeds,
        order_style,
        order_count,
        mode,
        min_obdd,
        caching,
        component_split,
    })
}

/// One measurement: an instance under one variable order and one
/// compilation mode. Optional cells stay empty in the CSV when the
/// corresponding oracle is out of range or disabled.
#[derive(Clone, Debug)]
pub struct ExperimentRow {
    pub instance: String,
    pub family: String,
    /// Vertex count of the graph.
    pub n: usize,
    /// Width of the validated decomposition witness.
    pub width: Option<usize>,
    pub seed: u64,
    pub order_id: usize,
    pub order_seed: u64,
    pub mode: String,
    /// Size of the compiled two-copy circuit.
    pub compiled_size: usize,
    /// Whether the compiled single-copy circuit has a root-to-sink
    /// decision path testing every scope variable.
    pub decision_path: bool,
    pub reduced_obdd_size: Option<usize>,
    pub min_obdd_size: Option<usize>,
    pub split_matching_size: Option<usize>,
    pub split_bound: Option<u64>,
    pub wall_ms: u128,
}

pub const CSV_HEADER: &str = "instance,family,n,width,seed,order_id,order_seed,mode,\
compiled_size,decision_path,reduced_obdd_size,min_obdd_size,split_matching_size,\
split_bound,wall_ms";

fn cell<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), T::to_string)
}

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance,
            self.family,
            self.n,
            cell(&self.width),
            self.seed,
            self.order_id,
            self.order_seed,
            self.mode,
            self.compiled_size,
            self.decision_path,
            cell(&self.reduced_obdd_size),
            cell(&self.min_obdd_size),
            cell(&self.split_matching_size),
            cell(&self.split_bound),
            self.wall_ms,
        )
    }
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

struct Prepared {
    name: String,
    n: usize,
    seed: u64,
    graph: Graph,
    width: Option<usize>,
    fg: crate::instances::CnfFormula,
    f2: crate::instances::CnfFormula,
    /// (order_id, order_seed, order over the copy variables).
    orders: Vec<(usize, u64, VariableOrder)>,
}

fn prepare(cfg: &ExperimentConfig, size: usize, seed: u64) -> Result<Prepared, ConfigError> {
    let (graph, decomposition) = match cfg.family {
        Family::Cycle => (cycle(size)?, Some(cycle_decomposition(size)?)),
        Family::Grid => (grid(size, cfg.k)?, Some(grid_decomposition(size, cfg.k)?)),
        Family::DisjointEdges => (
            disjoint_edges(size)?,
            Some(disjoint_edges_decomposition(size)?),
        ),
        Family::PartialKtree => {
            let (g, d) = random_partial_ktree(size, cfg.k, seed)?;
            (g, Some(d))
        }
    };
    let width = decomposition
        .map(|d| validate_decomposition(&graph, &d).expect("generator emits a valid witness"));
    let fg = build_f_g(&graph)?;
    let f2 = build_f2_g(&graph)?;
    let sorted: Vec<Var> = f2.scope.iter().copied().collect();
    let orders = match cfg.order_style {
        OrderStyle::Sorted => {
            vec![(
                0,
                0,
                VariableOrder::new(sorted).expect("distinct variables"),
            )]
        }
        OrderStyle::Split => {
            let mut seq: Vec<Var> = graph.vertices().map(first_copy).collect();
            seq.extend(graph.vertices().map(second_copy));
            vec![(0, 0, VariableOrder::new(seq).expect("distinct variables"))]
        }
        OrderStyle::Random => (0..cfg.order_count)
            .map(|t| {
                let order_seed = seed.wrapping_mul(1_000_003).wrapping_add(t as u64);
                let mut seq = sorted.clone();
                seq.shuffle(&mut ChaCha8Rng::seed_from_u64(order_seed));
                (
                    t,
                    order_seed,
                    VariableOrder::new(seq).expect("distinct variables"),
                )
            })
            .collect(),
    };
    Ok(Prepared {
        name: format!("{}_n{}_s{}", cfg.family.name(), size, seed),
        n: graph.vertex_count(),
        seed,
        graph,
        width,
        fg,
        f2,
        orders,
    })
}

/// Whether the circuit has a root-to-sink decision path testing every
/// scope variable.
fn full_decision_path(z: &Circuit) -> bool {
    z.tested_vars() == *z.scope() && has_decision_path(z).is_some()
}

fn measure(cfg: &ExperimentConfig, p: &Prepared, order_idx: usize) -> ExperimentRow {
    let (order_id, order_seed, order) = &p.orders[order_idx];
    let start = Instant::now();
    let compiled = compile(&p.f2, &cfg.compile_config(order));
    let fg_order = VariableOrder::sorted(&p.fg.scope);
    let fg_circuit = compile(&p.fg, &cfg.compile_config(&fg_order));
    let decision_path = full_decision_path(&fg_circuit);
    let reduced_obdd_size = (2 * p.n <= OBDD_VAR_LIMIT).then(|| {
        reduced_obdd(&p.f2, order)
            .expect("within the oracle limit")
            .size()
    });
    let min_size = (cfg.min_obdd && 2 * p.n <= SWEEP_VAR_LIMIT)
        .then(|| min_obdd_size(&p.f2).expect("within the sweep limit").0);
    let witness = (p.n <= SPLIT_VERTEX_LIMIT)
        .then(|| best_split_matching(&p.graph, order).expect("within the search limit"));
    if let (Some(reduced), Some(w)) = (reduced_obdd_size, &witness) {
        assert!(
            w.bound <= reduced as u64,
            "split bound must not exceed the reduced-OBDD size"
        );
    }
    ExperimentRow {
        instance: p.name.clone(),
        family: cfg.family.name().to_string(),
        n: p.n,
        width: p.width,
        seed: p.seed,
        order_id: *order_id,
        order_seed: *order_seed,
        mode: cfg.mode.name().to_string(),
        compiled_size: compiled.size(),
        decision_path,
        reduced_obdd_size,
        min_obdd_size: min_size,
        split_matching_size: witness.as_ref().map(SplitWitness::matching_size),
        split_bound: witness.as_ref().map(|w| w.bound),
        wall_ms: start.elapsed().as_millis(),
    }
}

/// Runs the configured sweep: one row per (instance, order). Rows are
/// deterministic given the seeds (wall time aside) and ordered by
/// (size, seed, order). Instances are prepared up front; measurements
/// run in parallel over the immutable prepared inputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, ConfigError> {
    let mut prepared = Vec::new();
    for &size in &cfg.sizes {
        for &seed in &cfg.seeds {
            prepared.push(prepare(cfg, size, seed)?);
        }
    }
    let specs: Vec<(usize, usize)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(i, p)| (0..p.orders.len()).map(move |j| (i, j)))
        .collect();
    if specs.is_empty() {
        return Ok(Vec::new());
    }
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(8);
    let chunk = specs.len().div_ceil(workers);
    let prepared = &prepared;
    let chunks: Vec<Vec<ExperimentRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = specs
            .chunks(chunk)
            .map(|slice| {
                s.spawn(move || {
                    slice
                        .iter()
                        .map(|&(i, j)| measure(cfg, &prepared[i], j))
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("measurement worker panicked"))
            .collect()
    });
    Ok(chunks.into_iter().flatten().collect())
}
