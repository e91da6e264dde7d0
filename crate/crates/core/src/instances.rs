//! Graphs, CNF formulas, the two graph-derived clause families, tree
//! decompositions with validators and width-preserving lifts, induced
//! matchings, and instance generators.
//!
//! For a graph G, `build_f_g` produces the formula with one positive
//! clause per edge plus one guard clause containing every vertex
//! negatively; its models are the vertex covers that leave at least one
//! vertex out. `build_f2_g` is the two-copy variant used for ordered
//! lower bounds: every vertex v becomes v_1 and v_2, every edge {u,v}
//! yields the cross clauses (u_1 ∨ v_2) and (u_2 ∨ v_1), and two guard
//! clauses C1 and C2 collect the negated first and second copies.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Var, VarPool};

/// Dense vertex identifier within one [`Graph`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Vertex(pub u32);

impl Vertex {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum DecompositionError {
    #[error("bag links do not form a tree")]
    NotATree,
    #[error("bag {bag} contains unknown vertex {vertex:?}")]
    UnknownVertex { bag: usize, vertex: Vertex },
    #[error("edge ({u:?}, {v:?}) is not inside any bag")]
    EdgeNotCovered { u: Vertex, v: Vertex },
    #[error("occurrence bags of vertex {v:?} are not connected")]
    VertexOccurrenceDisconnected { v: Vertex },
}

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum InstanceError {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("bad generator parameters: {0}")]
    BadParameters(String),
    #[error("not a matching: {0}")]
    NotAMatching(String),
    #[error("input decomposition invalid: {0}")]
    InvalidInputDecomposition(#[from] DecompositionError),
    #[error("clause {clause} has no bag containing all its variables")]
    ClauseNotInAnyBag { clause: usize },
}

/// Simple undirected graph with named vertices and no self-loops.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Graph {
    names: Vec<String>,
    index: HashMap<String, Vertex>,
    adj: Vec<BTreeSet<Vertex>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: &str) -> Vertex {
        assert!(VarPool::valid_name(name), "invalid vertex name {name:?}");
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = Vertex(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        self.adj.push(BTreeSet::new());
        v
    }

    pub fn add_edge(&mut self, u: Vertex, v: Vertex) {
        assert!(u != v, "self-loops are not allowed");
        assert!(u.index() < self.adj.len() && v.index() < self.adj.len());
        self.adj[u.index()].insert(v);
        self.adj[v.index()].insert(u);
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        (0..self.names.len() as u32).map(Vertex)
    }

    pub fn name(&self, v: Vertex) -> &str {
        &self.names[v.index()]
    }

    pub fn index_of(&self, name: &str) -> Option<Vertex> {
        self.index.get(name).copied()
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj[v.index()].iter().copied()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v.index()].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adj[u.index()].contains(&v)
    }

    /// Edges as ordered pairs (u < v), sorted.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::new();
        for u in self.vertices() {
            for &v in &self.adj[u.index()] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// The graph with vertex `x` (and its incident edges) removed.
    /// Remaining vertices are re-indexed but keep their names.
    pub fn remove_vertex(&self, x: Vertex) -> Graph {
        let mut g = Graph::new();
        let mut map = BTreeMap::new();
        for v in self.vertices() {
            if v != x {
                map.insert(v, g.add_vertex(self.name(v)));
            }
        }
        for (u, v) in self.edges() {
            if u != x && v != x {
                g.add_edge(map[&u], map[&v]);
            }
        }
        g
    }

    pub fn is_connected(&self) -> bool {
        if self.names.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.names.len()];
        let mut stack = vec![Vertex(0)];
        while let Some(v) = stack.pop() {
            if seen[v.index()] {
                continue;
            }
            seen[v.index()] = true;
            stack.extend(self.neighbors(v));
        }
        seen.iter().all(|&b| b)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph g {\n");
        for v in self.vertices() {
            s.push_str(&format!("  {};\n", self.name(v)));
        }
        for (u, v) in self.edges() {
            s.push_str(&format!("  {} -- {};\n", self.name(u), self.name(v)));
        }
        s.push_str("}\n");
        s
    }
}

/// Literal: a variable with a polarity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Lit {
    pub var: Var,
    pub positive: bool,
}

impl Lit {
    pub fn pos(var: Var) -> Lit {
        Lit {
            var,
            positive: true,
        }
    }

    pub fn neg(var: Var) -> Lit {
        Lit {
            var,
            positive: false,
        }
    }
}

/// Disjunction of literals, kept sorted and duplicate-free.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Clause {
    pub lits: Vec<Lit>,
    pub name: Option<String>,
}

impl Clause {
    pub fn new(mut lits: Vec<Lit>, name: Option<String>) -> Clause {
        lits.sort();
        lits.dedup();
        Clause { lits, name }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.lits.iter().map(|l| l.var).collect()
    }
}

/// CNF formula over an explicit scope (which may strictly contain the
/// occurring variables, as with unused DIMACS indices).
#[derive(Clone, PartialEq, Debug)]
pub struct CnfFormula {
    pub pool: VarPool,
    pub scope: BTreeSet<Var>,
    pub clauses: Vec<Clause>,
}

impl CnfFormula {
    /// var(F): variables occurring in some clause.
    pub fn occurring_vars(&self) -> BTreeSet<Var> {
        self.clauses
            .iter()
            .flat_map(|c| c.lits.iter().map(|l| l.var))
            .collect()
    }

    pub fn clause_index_by_name(&self, name: &str) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| c.name.as_deref() == Some(name))
    }

    /// The formula without the clause of the given name; scope unchanged.
    pub fn without_clause_named(&self, name: &str) -> CnfFormula {
        CnfFormula {
            pool: self.pool.clone(),
            scope: self.scope.clone(),
            clauses: self
                .clauses
                .iter()
                .filter(|c| c.name.as_deref() != Some(name))
                .cloned()
                .collect(),
        }
    }
}

/// Name of the guard clause of `build_f_g`.
pub const GUARD_CLAUSE: &str = "CG";
/// Names of the two guard clauses of `build_f2_g`.
pub const GUARD_CLAUSE_1: &str = "C1";
pub const GUARD_CLAUSE_2: &str = "C2";

/// One positive clause `(u ∨ v)` per edge, then the guard clause with
/// every vertex negated (named `CG`, last). Variables are the vertex
/// names; edge clauses are named `e_<u>_<v>`.
pub fn build_f_g(g: &Graph) -> Result<CnfFormula, InstanceError> {
    if g.vertex_count() == 0 {
        return Err(InstanceError::EmptyGraph);
    }
    let mut pool = VarPool::new();
    let vars: Vec<Var> = g.vertices().map(|v| pool.intern(g.name(v))).collect();
    let mut clauses = Vec::new();
    for (u, v) in g.edges() {
        clauses.push(Clause::new(
            vec![Lit::pos(vars[u.index()]), Lit::pos(vars[v.index()])],
            Some(format!("e_{}_{}", g.name(u), g.name(v))),
        ));
    }
    clauses.push(Clause::new(
        vars.iter().map(|&v| Lit::neg(v)).collect(),
        Some(GUARD_CLAUSE.to_string()),
    ));
    let scope = vars.iter().copied().collect();
    Ok(CnfFormula {
        pool,
        scope,
        clauses,
    })
}

/// Two-copy family: variables `<v>_1`, `<v>_2` interned pairwise per
/// vertex (ids 2i and 2i+1); per edge {u,v} the clauses `e_<u>_<v>_12`
/// = (u_1 ∨ v_2) and `e_<u>_<v>_21` = (u_2 ∨ v_1); guard clauses `C1`
/// and `C2` last.
pub fn build_f2_g(g: &Graph) -> Result<CnfFormula, InstanceError> {
    if g.vertex_count() == 0 {
        return Err(InstanceError::EmptyGraph);
    }
    let mut pool = VarPool::new();
    let mut first = Vec::new();
    let mut second = Vec::new();
    for v in g.vertices() {
        first.push(pool.intern(&format!("{}_1", g.name(v))));
        second.push(pool.intern(&format!("{}_2", g.name(v))));
    }
    let mut clauses = Vec::new();
    for (u, v) in g.edges() {
        clauses.push(Clause::new(
            vec![Lit::pos(first[u.index()]), Lit::pos(second[v.index()])],
            Some(format!("e_{}_{}_12", g.name(u), g.name(v))),
        ));
        clauses.push(Clause::new(
            vec![Lit::pos(second[u.index()]), Lit::pos(first[v.index()])],
            Some(format!("e_{}_{}_21", g.name(u), g.name(v))),
        ));
    }
    clauses.push(Clause::new(
        first.iter().map(|&v| Lit::neg(v)).collect(),
        Some(GUARD_CLAUSE_1.to_string()),
    ));
    clauses.push(Clause::new(
        second.iter().map(|&v| Lit::neg(v)).collect(),
        Some(GUARD_CLAUSE_2.to_string()),
    ));
    let scope = pool.vars().collect();
    Ok(CnfFormula {
        pool,
        scope,
        clauses,
    })
}

/// Primal graph: one vertex per occurring variable, an edge between two
/// variables that share a clause.
pub fn primal_graph(f: &CnfFormula) -> Graph {
    let mut g = Graph::new();
    let occurring: Vec<Var> = f.occurring_vars().into_iter().collect();
    let mut vmap = BTreeMap::new();
    for &v in &occurring {
        vmap.insert(v, g.add_vertex(f.pool.name(v)));
    }
    for c in &f.clauses {
        let vars: Vec<Var> = c.vars().into_iter().collect();
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                g.add_edge(vmap[&vars[i]], vmap[&vars[j]]);
            }
        }
    }
    g
}

/// Incidence graph: occurring variables (in id order) followed by one
/// vertex per clause, with an edge between a clause and each of its
/// variables. The bipartition is recoverable from `var_count`.
#[derive(Clone, Debug)]
pub struct IncidenceGraph {
    pub graph: Graph,
    pub var_count: usize,
    occurring: Vec<Var>,
}

impl IncidenceGraph {
    /// Incidence vertex of an occurring variable.
    pub fn var_vertex(&self, v: Var) -> Option<Vertex> {
        self.occurring
            .binary_search(&v)
            .ok()
            .map(|i| Vertex(i as u32))
    }

    pub fn clause_vertex(&self, clause: usize) -> Vertex {
        Vertex((self.var_count + clause) as u32)
    }

    pub fn is_clause_vertex(&self, v: Vertex) -> bool {
        v.index() >= self.var_count
    }
}

pub fn incidence_graph(f: &CnfFormula) -> IncidenceGraph {
    let mut g = Graph::new();
    let occurring: Vec<Var> = f.occurring_vars().into_iter().collect();
    for &v in &occurring {
        g.add_vertex(f.pool.name(v));
    }
    let var_count = occurring.len();
    for (i, c) in f.clauses.iter().enumerate() {
        let base = c.name.clone().unwrap_or_else(|| format!("c{i}"));
        let mut name = base.clone();
        let mut salt = 0;
        while g.index_of(&name).is_some() {
            salt += 1;
            name = format!("{base}.{salt}");
        }
        let cv = g.add_vertex(&name);
        for v in c.vars() {
            let vi = occurring.binary_search(&v).expect("clause variable occurs");
            g.add_edge(Vertex(vi as u32), cv);
        }
    }
    IncidenceGraph {
        graph: g,
        var_count,
        occurring,
    }
}

/// Bags of vertices linked into a tree (edges reference bag indices).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TreeDecomposition {
    pub bags: Vec<BTreeSet<Vertex>>,
    pub edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    /// Largest bag size minus one; 0 for an empty decomposition.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(BTreeSet::len)
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }
}

/// Checks the two decomposition conditions (every edge inside some bag,
/// occurrence bags of every vertex forming a connected nonempty
/// subtree) plus tree-ness of the bag links. Returns the width.
pub fn validate_decomposition(
    g: &Graph,
    d: &TreeDecomposition,
) -> Result<usize, DecompositionError> {
    let n = d.bags.len();
    for &(a, b) in &d.edges {
        if a >= n || b >= n || a == b {
            return Err(DecompositionError::NotATree);
        }
    }
    if n > 0 {
        if d.edges.len() != n - 1 {
            return Err(DecompositionError::NotATree);
        }
        // Connectivity over the bag links.
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &d.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            stack.extend(&adj[i]);
        }
        if !seen.iter().all(|&b| b) {
            return Err(DecompositionError::NotATree);
        }
    }
    for (i, bag) in d.bags.iter().enumerate() {
        for &v in bag {
            if v.index() >= g.vertex_count() {
                return Err(DecompositionError::UnknownVertex { bag: i, vertex: v });
            }
        }
    }
    for (u, v) in g.edges() {
        if !d.bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            return Err(DecompositionError::EdgeNotCovered { u, v });
        }
    }
    for v in g.vertices() {
        let occ: Vec<usize> = (0..n).filter(|&i| d.bags[i].contains(&v)).collect();
        if occ.is_empty() {
            return Err(DecompositionError::VertexOccurrenceDisconnected { v });
        }
        let inside: BTreeSet<usize> = occ.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut stack = vec![occ[0]];
        while let Some(i) = stack.pop() {
            if !seen.insert(i) {
                continue;
            }
            for &(a, b) in &d.edges {
                let other = if a == i {
                    b
                } else if b == i {
                    a
                } else {
                    continue;
                };
                if inside.contains(&other) {
                    stack.push(other);
                }
            }
        }
        if seen.len() != occ.len() {
            return Err(DecompositionError::VertexOccurrenceDisconnected { v });
        }
    }
    Ok(d.width())
}

/// Turns a decomposition of the primal graph into one of the incidence
/// graph: original bags keep their variable vertices; each clause gets a
/// pendant bag (its variables plus the clause vertex) attached to a bag
/// containing all of them, which exists because clause variables form a
/// clique in the primal graph. Width grows by at most one.
pub fn primal_to_incidence_decomposition(
    f: &CnfFormula,
    d: &TreeDecomposition,
) -> Result<TreeDecomposition, InstanceError> {
    let primal = primal_graph(f);
    validate_decomposition(&primal, &d.clone()).map_err(InstanceError::from)?;
    let inc = incidence_graph(f);
    // Primal vertices and incidence variable vertices are both the
    // occurring variables in id order, so bag contents carry over.
    let mut out = TreeDecomposition {
        bags: d.bags.clone(),
        edges: d.edges.clone(),
    };
    for (i, c) in f.clauses.iter().enumerate() {
        let cvars: BTreeSet<Vertex> = c
            .vars()
            .into_iter()
            .map(|v| inc.var_vertex(v).expect("clause variable occurs"))
            .collect();
        let host = d.bags.iter().position(|b| cvars.is_subset(b));
        let mut bag = cvars;
        bag.insert(inc.clause_vertex(i));
        let new_idx = out.bags.len();
        out.bags.push(bag);
        match host {
            Some(h) => out.edges.push((new_idx, h)),
            // An empty clause has an isolated incidence vertex; its bag
            // can hang off any earlier bag without breaking validity.
            None if c.lits.is_empty() => {
                if new_idx > 0 {
                    out.edges.push((new_idx, new_idx - 1));
                }
            }
            None => return Err(InstanceError::ClauseNotInAnyBag { clause: i }),
        }
    }
    Ok(out)
}

/// Decomposition of the incidence graph of `build_f_g(g)` from a
/// decomposition of G: variable bags are kept, each edge clause becomes
/// a pendant bag {u, v, clause}, and the guard clause vertex joins every
/// original bag (its variable edges are covered there). Width is at most
/// width(d) + 1.
pub fn lift_decomposition_fg(
    g: &Graph,
    d: &TreeDecomposition,
) -> Result<TreeDecomposition, InstanceError> {
    validate_decomposition(g, d)?;
    let f = build_f_g(g)?;
    let inc = incidence_graph(&f);
    let guard_idx = f
        .clause_index_by_name(GUARD_CLAUSE)
        .expect("guard clause present");
    let to_inc = |v: Vertex| -> Vertex {
        let var = f.pool.var(g.name(v)).expect("vertex variable interned");
        inc.var_vertex(var)
            .expect("every variable occurs in the guard clause")
    };
    let mut out = TreeDecomposition::default();
    for bag in &d.bags {
        let mut b: BTreeSet<Vertex> = bag.iter().map(|&v| to_inc(v)).collect();
        b.insert(inc.clause_vertex(guard_idx));
        out.bags.push(b);
    }
    out.edges = d.edges.clone();
    for (i, c) in f.clauses.iter().enumerate() {
        if i == guard_idx {
            continue;
        }
        let cvars: BTreeSet<Vertex> = c
            .vars()
            .into_iter()
            .map(|v| inc.var_vertex(v).unwrap())
            .collect();
        let host = d
            .bags
            .iter()
            .position(|b| cvars.iter().all(|cv| b.iter().any(|&gv| to_inc(gv) == *cv)))
            .expect("edge endpoints share a bag in a valid decomposition");
        let mut bag = cvars;
        bag.insert(inc.clause_vertex(i));
        let idx = out.bags.len();
        out.bags.push(bag);
        out.edges.push((idx, host));
    }
    Ok(out)
}

/// Same lift for `build_f2_g(g)`: every original bag doubles its
/// vertices (v_1 and v_2 per vertex) and receives both guard clause
/// vertices; edge clauses become pendant bags. Width is at most
/// 2·width(d) + 3.
pub fn lift_decomposition_f2g(
    g: &Graph,
    d: &TreeDecomposition,
) -> Result<TreeDecomposition, InstanceError> {
    validate_decomposition(g, d)?;
    let f = build_f2_g(g)?;
    let inc = incidence_graph(&f);
    let g1 = f
        .clause_index_by_name(GUARD_CLAUSE_1)
        .expect("guard clause C1 present");
    let g2 = f
        .clause_index_by_name(GUARD_CLAUSE_2)
        .expect("guard clause C2 present");
    // Copy i of graph vertex v: interning order guarantees ids 2v and 2v+1.
    let copy = |v: Vertex, second: bool| -> Vertex {
        let var = Var(2 * v.0 + u32::from(second));
        inc.var_vertex(var)
            .expect("every copy occurs in a guard clause")
    };
    let mut out = TreeDecomposition::default();
    for bag in &d.bags {
        let mut b = BTreeSet::new();
        for &v in bag {
            b.insert(copy(v, false));
            b.insert(copy(v, true));
        }
        b.insert(inc.clause_vertex(g1));
        b.insert(inc.clause_vertex(g2));
        out.bags.push(b);
    }
    out.edges = d.edges.clone();
    for (i, c) in f.clauses.iter().enumerate() {
        if i == g1 || i == g2 {
            continue;
        }
        let cvars: BTreeSet<Vertex> = c
            .vars()
            .into_iter()
            .map(|v| inc.var_vertex(v).unwrap())
            .collect();
        let host = d
            .bags
            .iter()
            .position(|b| {
                let doubled: BTreeSet<Vertex> = b
                    .iter()
                    .flat_map(|&v| [copy(v, false), copy(v, true)])
                    .collect();
                cvars.is_subset(&doubled)
            })
            .expect("edge endpoints share a bag in a valid decomposition");
        let mut bag = cvars;
        bag.insert(inc.clause_vertex(i));
        let idx = out.bags.len();
        out.bags.push(bag);
        out.edges.push((idx, host));
    }
    Ok(out)
}

/// Whether `edges` is an induced matching of `g`: edges of the graph,
/// pairwise vertex-disjoint, with no graph edge joining two of them.
pub fn is_induced_matching(g: &Graph, edges: &[(Vertex, Vertex)]) -> bool {
    let mut used = BTreeSet::new();
    for &(u, v) in edges {
        if u == v || !g.has_edge(u, v) || !used.insert(u) || !used.insert(v) {
            return false;
        }
    }
    for (i, &(a, b)) in edges.iter().enumerate() {
        for &(c, d) in &edges[i + 1..] {
            if g.has_edge(a, c) || g.has_edge(a, d) || g.has_edge(b, c) || g.has_edge(b, d) {
                return false;
            }
        }
    }
    true
}

/// Greedy extraction of an induced matching from a matching `m` of a
/// graph with maximum degree d: repeatedly keep the first remaining edge
/// and drop every remaining edge adjacent to it. Each round discards at
/// most 2d edges, so the result has at least ⌈|m| / 2d⌉ edges.
pub fn extract_induced_matching(
    g: &Graph,
    m: &[(Vertex, Vertex)],
) -> Result<Vec<(Vertex, Vertex)>, InstanceError> {
    let mut used = BTreeSet::new();
    let mut edges = Vec::new();
    for &(u, v) in m {
        if u == v || u.index() >= g.vertex_count() || v.index() >= g.vertex_count() {
            return Err(InstanceError::NotAMatching(format!(
                "bad pair ({u:?}, {v:?})"
            )));
        }
        if !g.has_edge(u, v) {
            return Err(InstanceError::NotAMatching(format!(
                "({}, {}) is not a graph edge",
                g.name(u),
                g.name(v)
            )));
        }
        if !used.insert(u) || !used.insert(v) {
            return Err(InstanceError::NotAMatching("edges share a vertex".into()));
        }
        edges.push(if u < v { (u, v) } else { (v, u) });
    }
    edges.sort();
    let mut result = Vec::new();
    while let Some(&(u, v)) = edges.first() {
        result.push((u, v));
        edges.retain(|&(a, b)| {
            !(a == u && b == v)
                && !g.has_edge(u, a)
                && !g.has_edge(u, b)
                && !g.has_edge(v, a)
                && !g.has_edge(v, b)
        });
    }
    debug_assert!(is_induced_matching(g, &result));
    Ok(result)
}

/// w·h grid, vertices `v0..` in row-major order, 4-neighbour adjacency.
pub fn grid(w: usize, h: usize) -> Result<Graph, InstanceError> {
    if w == 0 || h == 0 {
        return Err(InstanceError::BadParameters(
            "grid sides must be positive".into(),
        ));
    }
    let mut g = Graph::new();
    let vs: Vec<Vertex> = (0..w * h).map(|i| g.add_vertex(&format!("v{i}"))).collect();
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                g.add_edge(vs[r * w + c], vs[r * w + c + 1]);
            }
            if r + 1 < h {
                g.add_edge(vs[r * w + c], vs[(r + 1) * w + c]);
            }
        }
    }
    Ok(g)
}

/// Path decomposition of the grid with width min(w, h): a sliding
/// window of min+1 vertices over the short-side-major linearization.
pub fn grid_decomposition(w: usize, h: usize) -> Result<TreeDecomposition, InstanceError> {
    if w == 0 || h == 0 {
        return Err(InstanceError::BadParameters(
            "grid sides must be positive".into(),
        ));
    }
    let short = w.min(h);
    // Linearize so that consecutive indices differ by 1 along the short
    // side; the long-side neighbour is `short` positions away.
    let mut seq = Vec::with_capacity(w * h);
    if h <= w {
        for c in 0..w {
            for r in 0..h {
                seq.push(Vertex((r * w + c) as u32));
            }
        }
    } else {
        for r in 0..h {
            for c in 0..w {
                seq.push(Vertex((r * w + c) as u32));
            }
        }
    }
    let n = seq.len();
    let mut bags = Vec::new();
    if n <= short {
        bags.push(seq.iter().copied().collect());
    } else {
        for i in 0..n - short {
            bags.push(seq[i..=i + short].iter().copied().collect());
        }
    }
    let edges = (1..bags.len()).map(|i| (i - 1, i)).collect();
    Ok(TreeDecomposition { bags, edges })
}

/// Cycle on n ≥ 3 vertices `v0..`.
pub fn cycle(n: usize) -> Result<Graph, InstanceError> {
    if n < 3 {
        return Err(InstanceError::BadParameters(
            "cycle needs at least 3 vertices".into(),
        ));
    }
    let mut g = Graph::new();
    let vs: Vec<Vertex> = (0..n).map(|i| g.add_vertex(&format!("v{i}"))).collect();
    for i in 0..n {
        g.add_edge(vs[i], vs[(i + 1) % n]);
    }
    Ok(g)
}

/// Width-2 decomposition of the cycle: bags {v0, vi, vi+1}.
pub fn cycle_decomposition(n: usize) -> Result<TreeDecomposition, InstanceError> {
    if n < 3 {
        return Err(InstanceError::BadParameters(
            "cycle needs at least 3 vertices".into(),
        ));
    }
    let bags = (1..n - 1)
        .map(|i| {
            [Vertex(0), Vertex(i as u32), Vertex(i as u32 + 1)]
                .into_iter()
                .collect()
        })
        .collect::<Vec<_>>();
    let edges = (1..bags.len()).map(|i| (i - 1, i)).collect();
    Ok(TreeDecomposition { bags, edges })
}

/// m pairwise disjoint edges (2m vertices).
pub fn disjoint_edges(m: usize) -> Result<Graph, InstanceError> {
    if m == 0 {
        return Err(InstanceError::BadParameters(
            "need at least one edge".into(),
        ));
    }
    let mut g = Graph::new();
    for i in 0..m {
        let a = g.add_vertex(&format!("v{}", 2 * i));
        let b = g.add_vertex(&format!("v{}", 2 * i + 1));
        g.add_edge(a, b);
    }
    Ok(g)
}

/// Width-1 decomposition of m disjoint edges: one bag per edge, chained.
pub fn disjoint_edges_decomposition(m: usize) -> Result<TreeDecomposition, InstanceError> {
    if m == 0 {
        return Err(InstanceError::BadParameters(
            "need at least one edge".into(),
        ));
    }
    Ok(TreeDecomposition {
        bags: (0..m)
            .map(|i| {
                [Vertex(2 * i as u32), Vertex(2 * i as u32 + 1)]
                    .into_iter()
                    .collect()
            })
            .collect(),
        edges: (1..m).map(|i| (i - 1, i)).collect(),
    })
}

/// Random subgraph of a random k-tree on n vertices, together with the
/// width-k decomposition inherited from the k-tree construction (each
/// added vertex forms a bag with its k attachment neighbours). Roughly a
/// quarter of the edges are deleted; the witness stays valid because
/// bags only ever over-cover.
pub fn random_partial_ktree(
    n: usize,
    k: usize,
    seed: u64,
) -> Result<(Graph, TreeDecomposition), InstanceError> {
    if n == 0 || k + 1 > n {
        return Err(InstanceError::BadParameters(format!(
            "need k + 1 <= n, got n={n} k={k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new();
    let vs: Vec<Vertex> = (0..n).map(|i| g.add_vertex(&format!("v{i}"))).collect();
    let mut bags: Vec<BTreeSet<Vertex>> = vec![(0..=k).map(|i| vs[i]).collect()];
    let mut tree = Vec::new();
    let mut ktree_edges: Vec<(Vertex, Vertex)> = Vec::new();
    for i in 0..=k {
        for j in i + 1..=k {
            ktree_edges.push((vs[i], vs[j]));
        }
    }
    for &v in vs.iter().skip(k + 1) {
        let host = rng.gen_range(0..bags.len());
        let mut clique: Vec<Vertex> = bags[host].iter().copied().collect();
        if k > 0 {
            clique.remove(rng.gen_range(0..clique.len()));
        } else {
            clique.clear();
        }
        for &u in &clique {
            ktree_edges.push((u, v));
        }
        let mut bag: BTreeSet<Vertex> = clique.into_iter().collect();
        bag.insert(v);
        tree.push((bags.len(), host));
        bags.push(bag);
    }
    for &(u, v) in &ktree_edges {
        if rng.gen_bool(0.75) {
            g.add_edge(u, v);
        }
    }
    let d = TreeDecomposition { bags, edges: tree };
    debug_assert!(validate_decomposition(&g, &d).is_ok());
    Ok((g, d))
}

/// A maximal matching of `g`, greedily over shuffled edges. Useful as a
/// starting point for induced-matching extraction.
pub fn random_maximal_matching(g: &Graph, seed: u64) -> Vec<(Vertex, Vertex)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = g.edges();
    edges.shuffle(&mut rng);
    let mut used = vec![false; g.vertex_count()];
    let mut m = Vec::new();
    for (u, v) in edges {
        if !used[u.index()] && !used[v.index()] {
            used[u.index()] = true;
            used[v.index()] = true;
            m.push((u, v));
        }
    }
    m.sort();
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        let mut g = Graph::new();
        let x = g.add_vertex("x");
        let y = g.add_vertex("y");
        let z = g.add_vertex("z");
        g.add_edge(x, y);
        g.add_edge(y, z);
        g.add_edge(x, z);
        g
    }

    fn lits(f: &CnfFormula, c: &Clause) -> Vec<String> {
        c.lits
            .iter()
            .map(|l| {
                format!(
                    "{}{}",
                    if l.positive { "" } else { "-" },
                    f.pool.name(l.var)
                )
            })
            .collect()
    }

    #[test]
    fn f_g_of_triangle() {
        let f = build_f_g(&triangle()).unwrap();
        assert_eq!(f.clauses.len(), 4);
        let guard = f.clause_index_by_name(GUARD_CLAUSE).unwrap();
        assert_eq!(guard, 3);
        assert_eq!(lits(&f, &f.clauses[guard]), vec!["-x", "-y", "-z"]);
        assert_eq!(lits(&f, &f.clauses[0]), vec!["x", "y"]);
    }

    #[test]
    fn f_g_of_single_vertex() {
        let mut g = Graph::new();
        g.add_vertex("x");
        let f = build_f_g(&g).unwrap();
        assert_eq!(f.clauses.len(), 1);
        assert_eq!(lits(&f, &f.clauses[0]), vec!["-x"]);
    }

    #[test]
    fn f_g_rejects_empty_graph() {
        assert!(matches!(
            build_f_g(&Graph::new()),
            Err(InstanceError::EmptyGraph)
        ));
    }

    #[test]
    fn f2_g_of_triangle_matches_reference_clauses() {
        let f = build_f2_g(&triangle()).unwrap();
        assert_eq!(f.clauses.len(), 8);
        let expect: BTreeSet<Vec<String>> = [
            vec!["x_1", "y_2"],
            vec!["x_2", "y_1"],
            vec!["z_1", "y_2"],
            vec!["z_2", "y_1"],
            vec!["x_1", "z_2"],
            vec!["x_2", "z_1"],
            vec!["-x_1", "-y_1", "-z_1"],
            vec!["-x_2", "-y_2", "-z_2"],
        ]
        .into_iter()
        .map(|mut v| {
            v.sort();
            v.into_iter().map(String::from).collect()
        })
        .collect();
        let got: BTreeSet<Vec<String>> = f
            .clauses
            .iter()
            .map(|c| {
                let mut v = lits(&f, c);
                v.sort();
                v
            })
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn f2_g_of_single_edge() {
        let g = disjoint_edges(1).unwrap();
        let f = build_f2_g(&g).unwrap();
        assert_eq!(f.clauses.len(), 4);
        assert_eq!(f.scope.len(), 4);
        assert_eq!(f.clauses[0].name.as_deref(), Some("e_v0_v1_12"));
    }

    #[test]
    fn primal_graph_of_f_g_is_complete_on_guard() {
        // The guard clause makes every pair of variables adjacent.
        let mut g = Graph::new();
        let a = g.add_vertex("a");
        let b = g.add_vertex("b");
        g.add_vertex("c");
        g.add_edge(a, b);
        let p = primal_graph(&build_f_g(&g).unwrap());
        assert_eq!(p.vertex_count(), 3);
        assert_eq!(p.edge_count(), 3);
    }

    #[test]
    fn incidence_graph_is_bipartite_with_stable_names() {
        let f = build_f_g(&triangle()).unwrap();
        let inc = incidence_graph(&f);
        assert_eq!(inc.var_count, 3);
        assert_eq!(inc.graph.vertex_count(), 3 + 4);
        assert!(inc.graph.index_of("CG").is_some());
        assert!(inc.graph.index_of("e_x_y").is_some());
        // Edges only between the two sides.
        for (u, v) in inc.graph.edges() {
            assert_ne!(inc.is_clause_vertex(u), inc.is_clause_vertex(v));
        }
        // The guard clause touches every variable.
        let cg = inc.graph.index_of("CG").unwrap();
        assert_eq!(inc.graph.degree(cg), 3);
    }

    #[test]
    fn validate_accepts_single_bag_of_triangle() {
        let g = triangle();
        let d = TreeDecomposition {
            bags: vec![g.vertices().collect()],
            edges: vec![],
        };
        assert_eq!(validate_decomposition(&g, &d), Ok(2));
    }

    #[test]
    fn validate_flags_uncovered_edge() {
        let g = triangle();
        let d = TreeDecomposition {
            bags: vec![
                [Vertex(0), Vertex(1)].into_iter().collect(),
                [Vertex(1), Vertex(2)].into_iter().collect(),
            ],
            edges: vec![(0, 1)],
        };
        assert_eq!(
            validate_decomposition(&g, &d),
            Err(DecompositionError::EdgeNotCovered {
                u: Vertex(0),
                v: Vertex(2)
            })
        );
    }

    #[test]
    fn validate_flags_disconnected_occurrence() {
        let mut g = Graph::new();
        let a = g.add_vertex("a");
        let b = g.add_vertex("b");
        let c = g.add_vertex("c");
        g.add_edge(a, b);
        g.add_edge(b, c);
        let d = TreeDecomposition {
            bags: vec![
                [a, b].into_iter().collect(),
                [b, c].into_iter().collect(),
                [a, c].into_iter().collect(),
            ],
            edges: vec![(0, 1), (1, 2)],
        };
        assert_eq!(
            validate_decomposition(&g, &d),
            Err(DecompositionError::VertexOccurrenceDisconnected { v: a })
        );
    }

    #[test]
    fn validate_flags_non_tree_links() {
        let g = triangle();
        let d = TreeDecomposition {
            bags: vec![g.vertices().collect(), g.vertices().collect()],
            edges: vec![],
        };
        assert_eq!(
            validate_decomposition(&g, &d),
            Err(DecompositionError::NotATree)
        );
    }

    #[test]
    fn primal_to_incidence_adds_one_to_width_at_most() {
        let g = triangle();
        let f = build_f_g(&g).unwrap();
        let d = TreeDecomposition {
            bags: vec![primal_graph(&f).vertices().collect()],
            edges: vec![],
        };
        let out = primal_to_incidence_decomposition(&f, &d).unwrap();
        let inc = incidence_graph(&f);
        assert!(validate_decomposition(&inc.graph, &out).is_ok());
        assert!(out.width() <= d.width() + 1);
    }

    #[test]
    fn lift_fg_triangle_width_bound() {
        let g = triangle();
        let d = TreeDecomposition {
            bags: vec![g.vertices().collect()],
            edges: vec![],
        };
        let out = lift_decomposition_fg(&g, &d).unwrap();
        let inc = incidence_graph(&build_f_g(&g).unwrap());
        assert!(validate_decomposition(&inc.graph, &out).is_ok());
        assert!(
            out.width() <= d.width() + 1,
            "width {} > {}",
            out.width(),
            d.width() + 1
        );
    }

    #[test]
    fn lift_fg_single_edge_width_two() {
        let g = disjoint_edges(1).unwrap();
        let d = TreeDecomposition {
            bags: vec![g.vertices().collect()],
            edges: vec![],
        };
        let out = lift_decomposition_fg(&g, &d).unwrap();
        let inc = incidence_graph(&build_f_g(&g).unwrap());
        assert!(validate_decomposition(&inc.graph, &out).is_ok());
        assert!(out.width() <= 2);
    }

    #[test]
    fn lift_f2g_triangle_has_doubled_guard_bag() {
        let g = triangle();
        let d = TreeDecomposition {
            bags: vec![g.vertices().collect()],
            edges: vec![],
        };
        let out = lift_decomposition_f2g(&g, &d).unwrap();
        let inc = incidence_graph(&build_f2_g(&g).unwrap());
        assert!(validate_decomposition(&inc.graph, &out).is_ok());
        // Doubled bag: 6 variable copies plus both guard clause vertices.
        assert_eq!(out.bags[0].len(), 8);
        assert!(out.width() <= 2 * d.width() + 3);
    }

    #[test]
    fn lift_rejects_invalid_input_decomposition() {
        let g = triangle();
        let d = TreeDecomposition {
            bags: vec![[Vertex(0), Vertex(1)].into_iter().collect()],
            edges: vec![],
        };
        assert!(matches!(
            lift_decomposition_fg(&g, &d),
            Err(InstanceError::InvalidInputDecomposition(_))
        ));
    }

    #[test]
    fn extract_on_four_cycle_perfect_matching() {
        let g = cycle(4).unwrap();
        let m = vec![(Vertex(0), Vertex(1)), (Vertex(2), Vertex(3))];
        let out = extract_induced_matching(&g, &m).unwrap();
        assert_eq!(out.len(), 1); // ⌈2 / (2·2)⌉
        assert!(is_induced_matching(&g, &out));
    }

    #[test]
    fn extract_on_path_keeps_far_apart_edges() {
        // Path v0-v1-v2-v3-v4-v5 with matching {01, 23, 45}.
        let mut g = Graph::new();
        let vs: Vec<Vertex> = (0..6).map(|i| g.add_vertex(&format!("v{i}"))).collect();
        for i in 0..5 {
            g.add_edge(vs[i], vs[i + 1]);
        }
        let m = vec![(vs[0], vs[1]), (vs[2], vs[3]), (vs[4], vs[5])];
        let out = extract_induced_matching(&g, &m).unwrap();
        assert_eq!(out, vec![(vs[0], vs[1]), (vs[4], vs[5])]);
    }

    #[test]
    fn extract_rejects_non_matching() {
        let g = triangle();
        let shared = vec![(Vertex(0), Vertex(1)), (Vertex(1), Vertex(2))];
        assert!(matches!(
            extract_induced_matching(&g, &shared),
            Err(InstanceError::NotAMatching(_))
        ));
        let non_edge = vec![(Vertex(0), Vertex(0))];
        assert!(extract_induced_matching(&g, &non_edge).is_err());
    }

    #[test]
    fn extract_of_empty_matching_is_empty() {
        assert_eq!(extract_induced_matching(&triangle(), &[]).unwrap(), vec![]);
    }

    #[test]
    fn grid_2x2_is_a_four_cycle() {
        let g = grid(2, 2).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert!(g.vertices().all(|v| g.degree(v) == 2));
        let d = grid_decomposition(2, 2).unwrap();
        assert_eq!(validate_decomposition(&g, &d), Ok(2));
    }

    #[test]
    fn grid_decomposition_width_is_short_side() {
        for (w, h) in [(1, 1), (4, 1), (2, 3), (3, 5), (5, 3)] {
            let g = grid(w, h).unwrap();
            let d = grid_decomposition(w, h).unwrap();
            let width = validate_decomposition(&g, &d).unwrap();
            assert_eq!(
                width,
                w.min(h).min(w * h - 1).max(if w * h == 1 { 0 } else { 1 })
            );
        }
    }

    #[test]
    fn cycle_has_width_two_witness() {
        for n in [3, 4, 7] {
            let g = cycle(n).unwrap();
            let d = cycle_decomposition(n).unwrap();
            let width = validate_decomposition(&g, &d).unwrap();
            assert_eq!(width, 2);
        }
        assert!(cycle(2).is_err());
    }

    #[test]
    fn disjoint_edges_have_width_one_witness() {
        for m in [1, 3] {
            let g = disjoint_edges(m).unwrap();
            let d = disjoint_edges_decomposition(m).unwrap();
            assert_eq!(validate_decomposition(&g, &d).unwrap(), 1);
        }
        assert!(disjoint_edges_decomposition(0).is_err());
    }

    #[test]
    fn partial_ktree_witness_validates_with_width_k() {
        for (n, k, seed) in [(8, 2, 1), (12, 3, 5), (5, 4, 9), (6, 1, 3)] {
            let (g, d) = random_partial_ktree(n, k, seed).unwrap();
            assert_eq!(g.vertex_count(), n);
            let width = validate_decomposition(&g, &d).unwrap();
            assert_eq!(width, k);
        }
        assert!(random_partial_ktree(3, 4, 0).is_err());
    }

    #[test]
    fn partial_ktree_is_deterministic_per_seed() {
        let (g1, d1) = random_partial_ktree(10, 3, 42).unwrap();
        let (g2, d2) = random_partial_ktree(10, 3, 42).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(d1, d2);
        let (g3, _) = random_partial_ktree(10, 3, 43).unwrap();
        assert_ne!(g1, g3);
    }

    #[test]
    fn remove_vertex_drops_incident_edges() {
        let g = triangle();
        let h = g.remove_vertex(Vertex(1));
        assert_eq!(h.vertex_count(), 2);
        assert_eq!(h.edge_count(), 1);
        assert_eq!(h.name(Vertex(0)), "x");
        assert_eq!(h.name(Vertex(1)), "z");
    }
}
