//! CNF-to-circuit compilation and canonical OBDD oracles.
//!
//! [`compile`] is an exhaustive search procedure whose trace is the
//! output circuit: Shannon expansion on a branch variable produces
//! decision nodes, variable-disjoint components of the residual clause
//! set produce decomposable AND nodes, and a cache keyed by the
//! canonical residual clause set merges identical subproblems. There is
//! no unit propagation: only expansion and component splitting shape
//! the trace.
//!
//! [`ObddOracle`] and [`reduced_obdd`] build the canonical reduced
//! ordered BDD for a formula under a given variable order (isomorphic
//! subfunctions merged, redundant tests elided), which is minimal for
//! that order and serves as the measurable proxy in lower-bound checks.
//! [`min_obdd_size`] sweeps all orders of up to 8 variables.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use thiserror::Error;

use crate::circuit::{Circuit, Node, NodeId, Var, VarPool};
use crate::instances::{CnfFormula, Lit};
use crate::structure::VariableOrder;

/// Hard cap on reduced-OBDD construction (truth-table based).
pub const OBDD_VAR_LIMIT: usize = 16;
/// Hard cap on the factorial order sweep.
pub const SWEEP_VAR_LIMIT: usize = 8;

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum CompileError {
    #[error("{vars} variables exceed the limit of {limit} for this oracle")]
    ScopeTooLarge { vars: usize, limit: usize },
    #[error("{n} vertices exceed the limit of {limit} for the exhaustive search")]
    TooManyVertices { n: usize, limit: usize },
}

/// How the branch variable is chosen.
#[derive(Clone, Debug)]
pub enum CompileMode {
    /// Always the earliest order variable occurring in the residual; the
    /// output then respects this order on every path.
    FixedOrder(VariableOrder),
    DynamicHeuristic(OrderHeuristic),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OrderHeuristic {
    /// Fewest co-occurring variables in the residual; ties broken
    /// lexicographically by name.
    MinDegree,
    /// Lexicographically smallest name.
    LexFirst,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CachePolicy {
    Off,
    /// Key subproblems by their canonical residual clause set.
    ResidualFormulaKey,
}

#[derive(Clone, Debug)]
pub struct CompileConfig {
    pub mode: CompileMode,
    pub caching: CachePolicy,
    pub component_split: bool,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig {
            mode: CompileMode::DynamicHeuristic(OrderHeuristic::MinDegree),
            caching: CachePolicy::ResidualFormulaKey,
            component_split: true,
        }
    }
}

impl CompileConfig {
    pub fn fixed(order: VariableOrder) -> Self {
        CompileConfig {
            mode: CompileMode::FixedOrder(order),
            ..Default::default()
        }
    }

    pub fn dynamic(h: OrderHeuristic) -> Self {
        CompileConfig {
            mode: CompileMode::DynamicHeuristic(h),
            ..Default::default()
        }
    }

    pub fn with_caching(mut self, caching: CachePolicy) -> Self {
        self.caching = caching;
        self
    }

    pub fn with_component_split(mut self, on: bool) -> Self {
        self.component_split = on;
        self
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct CompileStats {
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub decision_nodes: u64,
    pub and_nodes: u64,
}

type Residual = Vec<Vec<Lit>>;
type ResidualKey = Vec<Vec<(u32, bool)>>;

fn canonical_key(residual: &Residual) -> ResidualKey {
    let mut key: ResidualKey = residual
        .iter()
        .map(|c| c.iter().map(|l| (l.var.0, l.positive)).collect())
        .collect();
    key.sort();
    key.dedup();
    key
}

fn occurring(residual: &Residual) -> BTreeSet<Var> {
    residual.iter().flatten().map(|l| l.var).collect()
}

/// Clauses under the extra binding `var = value`: satisfied clauses
/// vanish, falsified literals are dropped.
fn assign(residual: &Residual, var: Var, value: bool) -> Residual {
    let mut out = Vec::with_capacity(residual.len());
    for clause in residual {
        if clause.iter().any(|l| l.var == var && l.positive == value) {
            continue;
        }
        out.push(clause.iter().filter(|l| l.var != var).copied().collect());
    }
    out
}

struct Compiler<'a> {
    pool: &'a VarPool,
    cfg: &'a CompileConfig,
    arena: Vec<Node>,
    cache: HashMap<ResidualKey, NodeId>,
    stats: CompileStats,
}

impl<'a> Compiler<'a> {
    fn sink(&self, value: bool) -> NodeId {
        NodeId(u32::from(value))
    }

    fn go(&mut self, residual: Residual) -> NodeId {
        if residual.iter().any(Vec::is_empty) {
            return self.sink(false);
        }
        if residual.is_empty() {
            return self.sink(true);
        }
        let key = match self.cfg.caching {
            CachePolicy::ResidualFormulaKey => {
                let key = canonical_key(&residual);
                if let Some(&id) = self.cache.get(&key) {
                    self.stats.cache_hits += 1;
                    return id;
                }
                self.stats.cache_misses += 1;
                Some(key)
            }
            CachePolicy::Off => None,
        };
        let id = if self.cfg.component_split {
            let components = split_components(&residual);
            if components.len() > 1 {
                let ids: Vec<NodeId> = components.into_iter().map(|c| self.go(c)).collect();
                let mut acc = ids[0];
                for &next in &ids[1..] {
                    self.arena.push(Node::And {
                        left: acc,
                        right: next,
                    });
                    self.stats.and_nodes += 1;
                    acc = NodeId(self.arena.len() as u32 - 1);
                }
                acc
            } else {
                self.branch(residual)
            }
        } else {
            self.branch(residual)
        };
        if let Some(key) = key {
            self.cache.insert(key, id);
        }
        id
    }

    fn branch(&mut self, residual: Residual) -> NodeId {
        let x = self.pick_var(&residual);
        let lo = self.go(assign(&residual, x, false));
        let hi = self.go(assign(&residual, x, true));
        self.arena.push(Node::Decision { var: x, lo, hi });
        self.stats.decision_nodes += 1;
        NodeId(self.arena.len() as u32 - 1)
    }

    fn pick_var(&self, residual: &Residual) -> Var {
        let occ = occurring(residual);
        debug_assert!(!occ.is_empty(), "branching on a clause-free residual");
        match &self.cfg.mode {
            CompileMode::FixedOrder(order) => *order
                .seq()
                .iter()
                .find(|v| occ.contains(v))
                .expect("order covers the occurring variables"),
            CompileMode::DynamicHeuristic(OrderHeuristic::LexFirst) => occ
                .into_iter()
                .min_by_key(|&v| self.pool.name(v))
                .expect("nonempty"),
            CompileMode::DynamicHeuristic(OrderHeuristic::MinDegree) => {
                let mut adj: BTreeMap<Var, BTreeSet<Var>> =
                    occ.iter().map(|&v| (v, BTreeSet::new())).collect();
                for clause in residual {
                    for a in clause {
                        for b in clause {
                            if a.var != b.var {
                                adj.get_mut(&a.var).expect("occurring").insert(b.var);
                            }
                        }
                    }
                }
                adj.into_iter()
                    .min_by_key(|(v, n)| (n.len(), self.pool.name(*v)))
                    .map(|(v, _)| v)
                    .expect("nonempty")
            }
        }
    }
}

/// Variable-disjoint clause groups of the residual, ordered by their
/// smallest variable id; clause order within a group is preserved.
fn split_components(residual: &Residual) -> Vec<Residual> {
    let n = residual.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    let mut owner: HashMap<Var, usize> = HashMap::new();
    for (i, clause) in residual.iter().enumerate() {
        for l in clause {
            match owner.entry(l.var) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(i);
                }
                std::collections::hash_map::Entry::Occupied(e) => {
                    let a = find(&mut parent, *e.get());
                    let b = find(&mut parent, i);
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Residual> = BTreeMap::new();
    for (i, clause) in residual.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(clause.clone());
    }
    let mut out: Vec<Residual> = groups.into_values().collect();
    out.sort_by_key(|g| g.iter().flatten().map(|l| l.var).min());
    out
}

/// Compiles a formula into a decomposable read-once circuit; the trace
/// of the search is the circuit. See the module docs for the three
/// shaping mechanisms. Unsatisfiable formulas yield a circuit
/// equivalent to constant 0.
///
/// Contract: the formula's scope is nonempty, and in fixed-order mode
/// the order covers every occurring variable.
pub fn compile(f: &CnfFormula, cfg: &CompileConfig) -> Circuit {
    compile_with_stats(f, cfg).0
}

pub fn compile_with_stats(f: &CnfFormula, cfg: &CompileConfig) -> (Circuit, CompileStats) {
    assert!(!f.scope.is_empty(), "compilation requires a nonempty scope");
    if let CompileMode::FixedOrder(order) = &cfg.mode {
        assert!(
            order.covers(&f.occurring_vars()),
            "fixed order must cover every occurring variable"
        );
    }
    let mut compiler = Compiler {
        pool: &f.pool,
        cfg,
        arena: vec![Node::Sink(false), Node::Sink(true)],
        cache: HashMap::new(),
        stats: CompileStats::default(),
    };
    let residual: Residual = f.clauses.iter().map(|c| c.lits.clone()).collect();
    let root = compiler.go(residual);
    let circuit = Circuit::build(f.pool.clone(), compiler.arena, root, f.scope.clone())
        .expect("compilation preserves structural invariants");
    (circuit, compiler.stats)
}

/// Merges structurally identical subcircuits (same sink value, or same
/// variable and children after merging below). The function and the
/// scope are unchanged; the size can only shrink. Kept separate from
/// construction so that reported sizes always count the DAG as given.
pub fn merge_isomorphic(z: &Circuit) -> Circuit {
    #[derive(PartialEq, Eq, Hash)]
    enum Key {
        Sink(bool),
        Decision(Var, NodeId, NodeId),
        And(NodeId, NodeId),
    }
    let mut canon: HashMap<Key, NodeId> = HashMap::new();
    let mut repl: Vec<NodeId> = vec![NodeId(0); z.node_count()];
    let mut arena: Vec<Node> = Vec::new();
    for id in z.topo_order() {
        let (key, node) = match *z.node(id) {
            Node::Sink(b) => (Key::Sink(b), Node::Sink(b)),
            Node::Decision { var, lo, hi } => {
                let (l, h) = (repl[lo.index()], repl[hi.index()]);
                (
                    Key::Decision(var, l, h),
                    Node::Decision { var, lo: l, hi: h },
                )
            }
            Node::And { left, right } => {
                let (l, r) = (repl[left.index()], repl[right.index()]);
                (Key::And(l, r), Node::And { left: l, right: r })
            }
        };
        repl[id.index()] = *canon.entry(key).or_insert_with(|| {
            arena.push(node);
            NodeId(arena.len() as u32 - 1)
        });
    }
    let root = repl[z.root().index()];
    Circuit::build(z.pool().clone(), arena, root, z.scope().clone())
        .expect("merging preserves structural invariants")
}

/// [`merge_isomorphic`] followed by a deterministic renumbering (DFS
/// from the root, low/left child first, post-order). Two circuits are
/// isomorphic exactly when their canonical forms coincide node-for-node.
pub fn canonical_form(z: &Circuit) -> Circuit {
    let m = merge_isomorphic(z);
    // Post-order DFS with a fixed child order.
    let mut order = Vec::with_capacity(m.node_count());
    let mut state = vec![0u8; m.node_count()];
    let mut stack = vec![m.root()];
    while let Some(&id) = stack.last() {
        match state[id.index()] {
            0 => {
                state[id.index()] = 1;
                let children: Vec<NodeId> = m.node(id).children().collect();
                for c in children.into_iter().rev() {
                    if state[c.index()] == 0 {
                        stack.push(c);
                    }
                }
            }
            1 => {
                state[id.index()] = 2;
                order.push(id);
                stack.pop();
            }
            _ => {
                stack.pop();
            }
        }
    }
    let mut remap = vec![NodeId(0); m.node_count()];
    for (new, old) in order.iter().enumerate() {
        remap[old.index()] = NodeId(new as u32);
    }
    let mut arena = vec![Node::Sink(false); m.node_count()];
    for &old in &order {
        arena[remap[old.index()].index()] = match *m.node(old) {
            Node::Decision { var, lo, hi } => Node::Decision {
                var,
                lo: remap[lo.index()],
                hi: remap[hi.index()],
            },
            Node::And { left, right } => Node::And {
                left: remap[left.index()],
                right: remap[right.index()],
            },
            s => s,
        };
    }
    let root = remap[m.root().index()];
    Circuit::build(m.pool().clone(), arena, root, m.scope().clone())
        .expect("renumbering preserves structural invariants")
}

/// Whether two circuits are isomorphic as labelled DAGs (variables
/// matched by name), ignoring node numbering and duplicate subcircuits.
pub fn isomorphic(a: &Circuit, b: &Circuit) -> bool {
    let ca = canonical_form(a);
    let cb = canonical_form(b);
    if ca.node_count() != cb.node_count() || ca.root() != cb.root() {
        return false;
    }
    ca.nodes()
        .iter()
        .zip(cb.nodes())
        .all(|(x, y)| match (x, y) {
            (Node::Sink(p), Node::Sink(q)) => p == q,
            (
                Node::Decision {
                    var: v,
                    lo: l,
                    hi: h,
                },
                Node::Decision {
                    var: w,
                    lo: m,
                    hi: k,
                },
            ) => ca.pool().name(*v) == cb.pool().name(*w) && l == m && h == k,
            (Node::And { left: l, right: r }, Node::And { left: m, right: s }) => l == m && r == s,
            _ => false,
        })
}

/// Truth-table oracle for one formula, able to produce the canonical
/// reduced OBDD (and its size) for any order of the occurring variables.
pub struct ObddOracle {
    pool: VarPool,
    scope: BTreeSet<Var>,
    /// Occurring variables in id order.
    vars: Vec<Var>,
    /// Bit i of the index is the value of `vars[i]`.
    table: Vec<bool>,
}

impl ObddOracle {
    pub fn new(f: &CnfFormula) -> Result<ObddOracle, CompileError> {
        let vars: Vec<Var> = f.occurring_vars().into_iter().collect();
        if vars.len() > OBDD_VAR_LIMIT {
            return Err(CompileError::ScopeTooLarge {
                vars: vars.len(),
                limit: OBDD_VAR_LIMIT,
            });
        }
        let n = vars.len();
        let mut table = vec![false; 1 << n];
        let position: HashMap<Var, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        for (idx, slot) in table.iter_mut().enumerate() {
            *slot = f.clauses.iter().all(|c| {
                c.lits
                    .iter()
                    .any(|l| ((idx >> position[&l.var]) & 1 == 1) == l.positive)
            });
        }
        Ok(ObddOracle {
            pool: f.pool.clone(),
            scope: f.scope.clone(),
            vars,
            table,
        })
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    /// Restriction of `order` to the occurring variables, checked for
    /// coverage.
    fn seq_for(&self, order: &VariableOrder) -> Vec<Var> {
        let seq: Vec<Var> = order
            .seq()
            .iter()
            .copied()
            .filter(|v| self.vars.binary_search(v).is_ok())
            .collect();
        assert_eq!(
            seq.len(),
            self.vars.len(),
            "order must cover the occurring variables"
        );
        seq
    }

    /// Permutes the table so that bit k of an index is the value of
    /// seq[k]; subfunctions after fixing a prefix are then strided
    /// slices.
    fn permuted_table(&self, seq: &[Var]) -> Vec<bool> {
        let n = seq.len();
        let sorted_pos: HashMap<Var, usize> =
            self.vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut permuted = vec![false; 1 << n];
        for (idx, slot) in permuted.iter_mut().enumerate() {
            let mut orig = 0usize;
            for (k, v) in seq.iter().enumerate() {
                if (idx >> k) & 1 == 1 {
                    orig |= 1 << sorted_pos[v];
                }
            }
            *slot = self.table[orig];
        }
        permuted
    }

    /// The canonical reduced OBDD under `order`, which must cover the
    /// occurring variables (entries for other variables are ignored —
    /// the canonical form never tests them).
    pub fn reduced(&self, order: &VariableOrder) -> Circuit {
        let seq = self.seq_for(order);
        let permuted = self.permuted_table(&seq);

        let mut arena: Vec<Node> = vec![Node::Sink(false), Node::Sink(true)];
        let mut unique: HashMap<(Var, NodeId, NodeId), NodeId> = HashMap::new();
        let mut memo: HashMap<(usize, Vec<u64>), NodeId> = HashMap::new();

        fn subfn_key(table: &[bool], depth: usize, prefix: usize, n: usize) -> Vec<u64> {
            let words = (1usize << (n - depth)).div_ceil(64);
            let mut bits = vec![0u64; words];
            for m in 0..(1usize << (n - depth)) {
                if table[prefix | (m << depth)] {
                    bits[m / 64] |= 1 << (m % 64);
                }
            }
            bits
        }

        fn build(
            table: &[bool],
            seq: &[Var],
            depth: usize,
            prefix: usize,
            arena: &mut Vec<Node>,
            unique: &mut HashMap<(Var, NodeId, NodeId), NodeId>,
            memo: &mut HashMap<(usize, Vec<u64>), NodeId>,
        ) -> NodeId {
            let n = seq.len();
            if depth == n {
                return NodeId(u32::from(table[prefix]));
            }
            let key = subfn_key(table, depth, prefix, n);
            if let Some(&id) = memo.get(&(depth, key.clone())) {
                return id;
            }
            let lo = build(table, seq, depth + 1, prefix, arena, unique, memo);
            let hi = build(
                table,
                seq,
                depth + 1,
                prefix | (1 << depth),
                arena,
                unique,
                memo,
            );
            let id = if lo == hi {
                lo
            } else {
                *unique.entry((seq[depth], lo, hi)).or_insert_with(|| {
                    arena.push(Node::Decision {
                        var: seq[depth],
                        lo,
                        hi,
                    });
                    NodeId(arena.len() as u32 - 1)
                })
            };
            memo.insert((depth, key), id);
            id
        }

        let root = build(&permuted, &seq, 0, 0, &mut arena, &mut unique, &mut memo);
        Circuit::build(self.pool.clone(), arena, root, self.scope.clone())
            .expect("reduction preserves structural invariants")
    }

    /// Size (edge count) of the canonical reduced OBDD under `order`,
    /// computed without materializing the circuit. Every decision node
    /// contributes two edges.
    pub fn reduced_size(&self, order: &VariableOrder) -> usize {
        self.reduced_size_seq(&self.seq_for(order))
    }

    /// Bottom-up layered variant of the reduction: level d holds one
    /// subfunction id per d-bit prefix of the order; a level allocates
    /// a node exactly when the two child ids differ, and equal (lo, hi)
    /// pairs within a level share one node. Node ids are unique across
    /// levels, so propagated ids never collide with new ones.
    fn reduced_size_seq(&self, seq: &[Var]) -> usize {
        let n = seq.len();
        let permuted = self.permuted_table(seq);
        let mut ids: Vec<u32> = permuted.iter().map(|&b| u32::from(b)).collect();
        let mut unique: HashMap<(u32, u32), u32> = HashMap::new();
        let mut count = 0usize;
        let mut next_id = 2u32;
        for d in (0..n).rev() {
            unique.clear();
            let half = 1usize << d;
            let mut cur = vec![0u32; half];
            for (p, slot) in cur.iter_mut().enumerate() {
                let (lo, hi) = (ids[p], ids[p + half]);
                *slot = if lo == hi {
                    lo
                } else {
                    *unique.entry((lo, hi)).or_insert_with(|| {
                        count += 1;
                        next_id += 1;
                        next_id - 1
                    })
                };
            }
            ids = cur;
        }
        2 * count
    }
}

/// Canonical reduced OBDD of `f` under `order` (at most 16 occurring
/// variables).
pub fn reduced_obdd(f: &CnfFormula, order: &VariableOrder) -> Result<Circuit, CompileError> {
    Ok(ObddOracle::new(f)?.reduced(order))
}

/// Minimum reduced-OBDD size over every order of the occurring
/// variables (at most 8, a sweep over up to 40320 permutations),
/// together with a witness order. Ties resolve to the earliest
/// lexicographic permutation of the variables in id order. The sweep
/// runs on multiple threads over the shared read-only oracle.
pub fn min_obdd_size(f: &CnfFormula) -> Result<(usize, VariableOrder), CompileError> {
    let occurring: Vec<Var> = f.occurring_vars().into_iter().collect();
    if occurring.len() > SWEEP_VAR_LIMIT {
        return Err(CompileError::ScopeTooLarge {
            vars: occurring.len(),
            limit: SWEEP_VAR_LIMIT,
        });
    }
    let oracle = ObddOracle::new(f)?;
    if occurring.is_empty() {
        return Ok((0, VariableOrder::new(Vec::new()).expect("empty order")));
    }
    let perms: Vec<Vec<Var>> = occurring
        .iter()
        .copied()
        .permutations(occurring.len())
        .collect();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(8);
    let chunk = perms.len().div_ceil(workers);
    let best = std::thread::scope(|s| {
        let mut handles = Vec::new();
        for (c, slice) in perms.chunks(chunk).enumerate() {
            let oracle = &oracle;
            handles.push(s.spawn(move || {
                let mut local: Option<(usize, usize)> = None;
                for (i, perm) in slice.iter().enumerate() {
                    let entry = (oracle.reduced_size_seq(perm), c * chunk + i);
                    if local.is_none_or(|b| entry < b) {
                        local = Some(entry);
                    }
                }
                local
            }));
        }
        handles
            .into_iter()
            .filter_map(|h| h.join().expect("sweep worker panicked"))
            .min()
            .expect("at least one permutation")
    });
    let order = VariableOrder::new(perms[best.1].clone()).expect("permutation");
    Ok((best.0, order))
}
