//! Plain-text formats for every artifact: circuits, DIMACS CNF,
//! graphs, variable orders, vtrees, tree decompositions, and
//! assignments. Functions convert between values and strings; reading
//! and writing files is left to the caller.
//!
//! Shared conventions: `#` starts a comment, blank lines are ignored,
//! and names follow the variable-name rules (nonempty, no whitespace
//! or parentheses).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Node, NodeId, Var, VarPool};
use crate::instances::{Clause, CnfFormula, Graph, Lit, TreeDecomposition, Vertex};
use crate::semantics::PartialAssignment;
use crate::structure::{StructureError, VariableOrder, Vtree, VtreeNode, VtreeNodeId};

#[derive(Error, Debug)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid circuit: {0}")]
    Circuit(#[from] CircuitError),
    #[error("invalid structure: {0}")]
    Structure(#[from] StructureError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Content lines as (1-based line number, whitespace tokens), with
/// comments stripped.
fn tokenized_lines(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.is_empty() {
                None
            } else {
                Some((i + 1, tokens))
            }
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T, ParseError> {
    token
        .parse()
        .map_err(|_| syntax(line, format!("expected {what}, found {token:?}")))
}

// ---------------------------------------------------------------------
// Circuits
//
//     afbdd <node count> <root id>
//     scope <name> <name> ...
//     <id> S <0|1>
//     <id> D <var> <lo id> <hi id>
//     <id> A <left id> <right id>

pub fn write_circuit(z: &Circuit) -> String {
    let mut out = format!("afbdd {} {}\n", z.node_count(), z.root().0);
    out.push_str("scope");
    for &v in z.scope() {
        out.push(' ');
        out.push_str(z.pool().name(v));
    }
    out.push('\n');
    for (i, node) in z.nodes().iter().enumerate() {
        match node {
            Node::Sink(b) => out.push_str(&format!("{i} S {}\n", u8::from(*b))),
            Node::Decision { var, lo, hi } => out.push_str(&format!(
                "{i} D {} {} {}\n",
                z.pool().name(*var),
                lo.0,
                hi.0
            )),
            Node::And { left, right } => out.push_str(&format!("{i} A {} {}\n", left.0, right.0)),
        }
    }
    out
}

pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let lines = tokenized_lines(text);
    let Some((first_line, header)) = lines.first() else {
        return Err(syntax(0, "empty input"));
    };
    if header.len() != 3 || header[0] != "afbdd" {
        return Err(syntax(
            *first_line,
            "expected header `afbdd <node count> <root id>`",
        ));
    }
    let count: usize = parse_num(*first_line, header[1], "a node count")?;
    let root: u32 = parse_num(*first_line, header[2], "a root id")?;
    let mut pool = VarPool::new();
    let mut nodes: Vec<Option<Node>> = vec![None; count];
    for (line, tokens) in &lines[1..] {
        if tokens[0] == "scope" {
            for name in &tokens[1..] {
                if !VarPool::valid_name(name) {
                    return Err(syntax(*line, format!("invalid variable name {name:?}")));
                }
                pool.intern(name);
            }
            continue;
        }
        let id: usize = parse_num(*line, tokens[0], "a node id")?;
        if id >= count {
            return Err(syntax(
                *line,
                format!("node id {id} out of range 0..{count}"),
            ));
        }
        if nodes[id].is_some() {
            return Err(syntax(*line, format!("duplicate node id {id}")));
        }
        let child = |token: &str| -> Result<NodeId, ParseError> {
            Ok(NodeId(parse_num(*line, token, "a child id")?))
        };
        let node = match (tokens.get(1).copied(), tokens.len()) {
            (Some("S"), 3) => match tokens[2] {
                "0" => Node::Sink(false),
                "1" => Node::Sink(true),
                other => return Err(syntax(*line, format!("expected 0 or 1, found {other:?}"))),
            },
            (Some("D"), 5) => {
                let var = pool.var(tokens[2]).ok_or_else(|| {
                    syntax(
                        *line,
                        format!("variable {:?} is not in the scope", tokens[2]),
                    )
                })?;
                Node::Decision {
                    var,
                    lo: child(tokens[3])?,
                    hi: child(tokens[4])?,
                }
            }
            (Some("A"), 4) => Node::And {
                left: child(tokens[2])?,
                right: child(tokens[3])?,
            },
            _ => {
                return Err(syntax(
                    *line,
                    "expected `S <0|1>`, `D <var> <lo> <hi>`, or `A <l> <r>`",
                ))
            }
        };
        nodes[id] = Some(node);
    }
    let arena: Vec<Node> = nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.ok_or_else(|| syntax(0, format!("missing node {i}"))))
        .collect::<Result<_, _>>()?;
    let scope: BTreeSet<Var> = pool.vars().collect();
    Ok(Circuit::build(pool, arena, NodeId(root), scope)?)
}

// ---------------------------------------------------------------------
// CNF formulas: DIMACS with name comments
//
//     c var <index> <name>
//     c clause <index> <name>
//     p cnf <variables> <clauses>
//     <lit> ... 0

pub fn write_dimacs(f: &CnfFormula) -> String {
    let vars: Vec<Var> = f.pool.vars().collect();
    assert!(
        f.scope.len() == vars.len(),
        "the DIMACS format carries the full variable pool as the scope"
    );
    let mut out = String::new();
    for (i, &v) in vars.iter().enumerate() {
        out.push_str(&format!("c var {} {}\n", i + 1, f.pool.name(v)));
    }
    for (j, clause) in f.clauses.iter().enumerate() {
        if let Some(name) = &clause.name {
            out.push_str(&format!("c clause {} {}\n", j + 1, name));
        }
    }
    out.push_str(&format!("p cnf {} {}\n", vars.len(), f.clauses.len()));
    for clause in &f.clauses {
        for lit in &clause.lits {
            let idx = lit.var.0 as i64 + 1;
            out.push_str(&format!("{} ", if lit.positive { idx } else { -idx }));
        }
        out.push_str("0\n");
    }
    out
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, ParseError> {
    let mut var_names: BTreeMap<usize, String> = BTreeMap::new();
    let mut clause_names: BTreeMap<usize, String> = BTreeMap::new();
    let mut header: Option<(usize, usize, usize)> = None;
    let mut literals: Vec<(usize, i64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.first().copied() {
            None => continue,
            Some("c") => match tokens.get(1).copied() {
                Some("var") if tokens.len() == 4 => {
                    let idx: usize = parse_num(line, tokens[2], "a variable index")?;
                    if !VarPool::valid_name(tokens[3]) {
                        return Err(syntax(
                            line,
                            format!("invalid variable name {:?}", tokens[3]),
                        ));
                    }
                    var_names.insert(idx, tokens[3].to_string());
                }
                Some("clause") if tokens.len() == 4 => {
                    let idx: usize = parse_num(line, tokens[2], "a clause index")?;
                    clause_names.insert(idx, tokens[3].to_string());
                }
                _ => {} // free-form comment
            },
            Some("p") => {
                if header.is_some() {
                    return Err(syntax(line, "duplicate `p cnf` header"));
                }
                if tokens.len() != 4 || tokens[1] != "cnf" {
                    return Err(syntax(line, "expected `p cnf <variables> <clauses>`"));
                }
                header = Some((
                    line,
                    parse_num(line, tokens[2], "a variable count")?,
                    parse_num(line, tokens[3], "a clause count")?,
                ));
            }
            Some(_) => {
                if header.is_none() {
                    return Err(syntax(line, "clause before the `p cnf` header"));
                }
                for t in &tokens {
                    literals.push((line, parse_num(line, t, "a literal")?));
                }
            }
        }
    }
    let Some((header_line, nvars, nclauses)) = header else {
        return Err(syntax(0, "missing `p cnf` header"));
    };
    let mut pool = VarPool::new();
    for i in 1..=nvars {
        let default = format!("v{i}");
        let name = var_names.get(&i).unwrap_or(&default);
        pool.intern(name);
        if pool.vars().count() != i {
            return Err(syntax(
                header_line,
                format!("duplicate variable name {name:?}"),
            ));
        }
    }
    let mut clauses = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    for (line, lit) in literals {
        if lit == 0 {
            clauses.push(Clause::new(
                std::mem::take(&mut current),
                clause_names.get(&(clauses.len() + 1)).cloned(),
            ));
            continue;
        }
        let idx = lit.unsigned_abs() as usize;
        if idx > nvars {
            return Err(syntax(
                line,
                format!("literal {lit} exceeds {nvars} variables"),
            ));
        }
        let var = Var(idx as u32 - 1);
        current.push(if lit > 0 {
            Lit::pos(var)
        } else {
            Lit::neg(var)
        });
    }
    if !current.is_empty() {
        return Err(syntax(0, "unterminated clause (missing trailing 0)"));
    }
    if clauses.len() != nclauses {
        return Err(syntax(
            header_line,
            format!(
                "header announces {nclauses} clauses, found {}",
                clauses.len()
            ),
        ));
    }
    let scope: BTreeSet<Var> = pool.vars().collect();
    Ok(CnfFormula {
        pool,
        scope,
        clauses,
    })
}

// ---------------------------------------------------------------------
// Graphs
//
//     vertices <name> <name> ...
//     edge <name> <name>

pub fn write_graph(g: &Graph) -> String {
    let mut out = String::from("vertices");
    for v in g.vertices() {
        out.push(' ');
        out.push_str(g.name(v));
    }
    out.push('\n');
    for (u, v) in g.edges() {
        out.push_str(&format!("edge {} {}\n", g.name(u), g.name(v)));
    }
    out
}

pub fn parse_graph(text: &str) -> Result<Graph, ParseError> {
    let mut g = Graph::new();
    for (line, tokens) in tokenized_lines(text) {
        match tokens[0] {
            "vertices" => {
                for name in &tokens[1..] {
                    if !VarPool::valid_name(name) {
                        return Err(syntax(line, format!("invalid vertex name {name:?}")));
                    }
                    if g.index_of(name).is_some() {
                        return Err(syntax(line, format!("duplicate vertex {name:?}")));
                    }
                    g.add_vertex(name);
                }
            }
            "edge" => {
                if tokens.len() != 3 {
                    return Err(syntax(line, "expected `edge <u> <v>`"));
                }
                let lookup = |name: &str| {
                    g.index_of(name)
                        .ok_or_else(|| syntax(line, format!("unknown vertex {name:?}")))
                };
                let (u, v) = (lookup(tokens[1])?, lookup(tokens[2])?);
                if u == v {
                    return Err(syntax(line, "self-loops are not allowed"));
                }
                g.add_edge(u, v);
            }
            other => {
                return Err(syntax(
                    line,
                    format!("expected `vertices` or `edge`, found {other:?}"),
                ))
            }
        }
    }
    Ok(g)
}

// ---------------------------------------------------------------------
// Variable orders
//
//     order <name> <name> ...

pub fn write_order(o: &VariableOrder, pool: &VarPool) -> String {
    let mut out = String::from("order");
    for &v in o.seq() {
        out.push(' ');
        out.push_str(pool.name(v));
    }
    out.push('\n');
    out
}

/// Reads an order whose names resolve in an existing pool (so that the
/// result is directly comparable against a circuit or formula).
pub fn parse_order(text: &str, pool: &VarPool) -> Result<VariableOrder, ParseError> {
    let lines = tokenized_lines(text);
    let [(line, tokens)] = lines.as_slice() else {
        return Err(syntax(0, "expected a single `order ...` line"));
    };
    if tokens[0] != "order" {
        return Err(syntax(*line, "expected `order <name> ...`"));
    }
    let seq: Vec<Var> = tokens[1..]
        .iter()
        .map(|name| {
            pool.var(name)
                .ok_or_else(|| syntax(*line, format!("unknown variable {name:?}")))
        })
        .collect::<Result<_, _>>()?;
    Ok(VariableOrder::new(seq)?)
}

// ---------------------------------------------------------------------
// Vtrees: nested pairs, e.g. `(x (y z))`

pub fn write_vtree(t: &Vtree, pool: &VarPool) -> String {
    let mut out = t.render(pool);
    out.push('\n');
    out
}

/// Reads a vtree whose leaf names resolve in an existing pool.
pub fn parse_vtree(text: &str, pool: &VarPool) -> Result<Vtree, ParseError> {
    let mut tokens = Vec::new();
    for (line, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let spaced = content.replace('(', " ( ").replace(')', " ) ");
        for t in spaced.split_whitespace() {
            tokens.push((line + 1, t.to_string()));
        }
    }
    if tokens.is_empty() {
        return Err(syntax(0, "empty vtree"));
    }
    let mut nodes: Vec<VtreeNode> = Vec::new();
    // Recursive descent over `node := leaf | ( node node )`, returning
    // the id of the subtree pushed last.
    fn node(
        tokens: &[(usize, String)],
        at: &mut usize,
        nodes: &mut Vec<VtreeNode>,
        pool: &VarPool,
    ) -> Result<VtreeNodeId, ParseError> {
        let Some((line, token)) = tokens.get(*at) else {
            let line = tokens.last().map_or(0, |(l, _)| *l);
            return Err(syntax(line, "unexpected end of vtree"));
        };
        *at += 1;
        match token.as_str() {
            "(" => {
                let left = node(tokens, at, nodes, pool)?;
                let right = node(tokens, at, nodes, pool)?;
                match tokens.get(*at) {
                    Some((_, t)) if t == ")" => *at += 1,
                    _ => return Err(syntax(*line, "expected `)` after two children")),
                }
                nodes.push(VtreeNode::Internal(left, right));
                Ok(VtreeNodeId(nodes.len() as u32 - 1))
            }
            ")" => Err(syntax(*line, "unexpected `)`")),
            name => {
                let v = pool
                    .var(name)
                    .ok_or_else(|| syntax(*line, format!("unknown variable {name:?}")))?;
                nodes.push(VtreeNode::Leaf(v));
                Ok(VtreeNodeId(nodes.len() as u32 - 1))
            }
        }
    }
    let mut at = 0;
    let root = node(&tokens, &mut at, &mut nodes, pool)?;
    if at != tokens.len() {
        let (line, t) = &tokens[at];
        return Err(syntax(
            *line,
            format!("trailing input after the vtree: {t:?}"),
        ));
    }
    Ok(Vtree::build(nodes, root)?)
}

// ---------------------------------------------------------------------
// Tree decompositions (relative to a graph)
//
//     bag <index> <vertex> ...
//     link <bag> <bag>

pub fn write_decomposition(d: &TreeDecomposition, g: &Graph) -> String {
    let mut out = String::new();
    for (i, bag) in d.bags.iter().enumerate() {
        out.push_str(&format!("bag {i}"));
        for &v in bag {
            out.push(' ');
            out.push_str(g.name(v));
        }
        out.push('\n');
    }
    for &(a, b) in &d.edges {
        out.push_str(&format!("link {a} {b}\n"));
    }
    out
}

/// Reads a decomposition with vertex names resolved against `g`. Bag
/// indices must cover 0..k exactly once. Structural validity (tree
/// shape, coverage, connectivity) is the validator's job, not the
/// parser's.
pub fn parse_decomposition(text: &str, g: &Graph) -> Result<TreeDecomposition, ParseError> {
    let mut bags: BTreeMap<usize, BTreeSet<Vertex>> = BTreeMap::new();
    let mut edges = Vec::new();
    for (line, tokens) in tokenized_lines(text) {
        match tokens[0] {
            "bag" => {
                if tokens.len() < 2 {
                    return Err(syntax(line, "expected `bag <index> <vertex> ...`"));
                }
                let idx: usize = parse_num(line, tokens[1], "a bag index")?;
                if bags.contains_key(&idx) {
                    return Err(syntax(line, format!("duplicate bag {idx}")));
                }
                let bag: BTreeSet<Vertex> = tokens[2..]
                    .iter()
                    .map(|name| {
                        g.index_of(name)
                            .ok_or_else(|| syntax(line, format!("unknown vertex {name:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                bags.insert(idx, bag);
            }
            "link" => {
                if tokens.len() != 3 {
                    return Err(syntax(line, "expected `link <bag> <bag>`"));
                }
                edges.push((
                    parse_num(line, tokens[1], "a bag index")?,
                    parse_num(line, tokens[2], "a bag index")?,
                ));
            }
            other => {
                return Err(syntax(
                    line,
                    format!("expected `bag` or `link`, found {other:?}"),
                ))
            }
        }
    }
    let count = bags.len();
    if bags.keys().next_back().is_some_and(|&max| max + 1 != count) {
        return Err(syntax(
            0,
            format!("bag indices must cover 0..{count} without gaps"),
        ));
    }
    for &(a, b) in &edges {
        if a >= count || b >= count {
            return Err(syntax(
                0,
                format!("link ({a}, {b}) references a missing bag"),
            ));
        }
    }
    Ok(TreeDecomposition {
        bags: bags.into_values().collect(),
        edges,
    })
}

// ---------------------------------------------------------------------
// Assignments: `x=1,y=0` (comma or whitespace separated)

pub fn write_assignment(t: &PartialAssignment, pool: &VarPool) -> String {
    t.domain()
        .map(|v| {
            format!(
                "{}={}",
                pool.name(v),
                u8::from(t.get(v).expect("in domain"))
            )
        })
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_assignment(text: &str, pool: &VarPool) -> Result<PartialAssignment, ParseError> {
    let mut out = PartialAssignment::new();
    for item in text
        .split([',', ' ', '\n'])
        .filter(|s| !s.trim().is_empty())
    {
        let Some((name, value)) = item.trim().split_once('=') else {
            return Err(syntax(0, format!("expected `name=0|1`, found {item:?}")));
        };
        let var = pool
            .var(name.trim())
            .ok_or_else(|| syntax(0, format!("unknown variable {name:?}")))?;
        let value = match value.trim() {
            "0" | "false" => false,
            "1" | "true" => true,
            other => return Err(syntax(0, format!("expected 0 or 1, found {other:?}"))),
        };
        if out.get(var).is_some_and(|prev| prev != value) {
            return Err(syntax(0, format!("conflicting values for {name:?}")));
        }
        out.set(var, value);
    }
    Ok(out)
}
