//! Arena representation of ∧-FBDD / decision-DNNF circuits.
//!
//! A circuit is a rooted DAG of decision nodes, binary AND nodes and
//! constant sinks over a declared variable scope. [`Circuit::build`]
//! enforces the structural invariants that do not depend on a variable
//! order or vtree: acyclicity, read-once paths, no dangling references
//! and tested variables inside the scope. Decomposability of AND nodes
//! is a separate check ([`Circuit::validate_decomposable`]) so that
//! plain ∧-FBDDs can be represented too.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Dense variable identifier assigned by a [`VarPool`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijective mapping between variable names and dense ids.
///
/// Ids are assigned in interning order starting from 0 and are never
/// reused, so every consumer of a pool sees a stable numbering.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VarPool {
    names: Vec<String>,
    index: HashMap<String, Var>,
}

impl VarPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns whether `name` is usable as a variable name in every text
    /// format of this crate.
    pub fn valid_name(name: &str) -> bool {
        !name.is_empty() && !name.contains(|c: char| c.is_whitespace() || c == '(' || c == ')')
    }

    /// Interns `name`, returning its id. Panics on names that would be
    /// ambiguous in the text formats; parsers validate before calling.
    pub fn intern(&mut self, name: &str) -> Var {
        assert!(Self::valid_name(name), "invalid variable name {name:?}");
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = Var(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        v
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.index.get(name).copied()
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.index()]
    }

    pub fn contains(&self, v: Var) -> bool {
        v.index() < self.names.len()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// All registered variables in id order.
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.names.len() as u32).map(Var)
    }
}

/// Node id within one [`Circuit`]. Identity is the structural position;
/// two distinct nodes with identical shape stay distinct.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Node {
    /// Decision on `var`; `lo` is the 0-edge target, `hi` the 1-edge target.
    Decision { var: Var, lo: NodeId, hi: NodeId },
    /// Binary conjunction. Decomposability (children testing disjoint
    /// variable sets) is validated separately.
    And { left: NodeId, right: NodeId },
    /// Constant sink.
    Sink(bool),
}

impl Node {
    pub fn children(&self) -> impl Iterator<Item = NodeId> {
        let pair = match *self {
            Node::Decision { lo, hi, .. } => [Some(lo), Some(hi)],
            Node::And { left, right } => [Some(left), Some(right)],
            Node::Sink(_) => [None, None],
        };
        pair.into_iter().flatten()
    }

    pub fn is_sink(&self) -> bool {
        matches!(self, Node::Sink(_))
    }
}

/// Structural violation discovered by a validator, with a witness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    /// A directed cycle (sequence of node ids closing on itself).
    Acyclicity { cycle: Vec<NodeId> },
    /// A root-to-node path testing `var` twice; `path` runs from the
    /// first test to the second.
    ReadOnce { var: Var, path: Vec<NodeId> },
    /// An AND node whose children both test `var`.
    Decomposability { and_node: NodeId, var: Var },
    /// A decision on a later-or-equal variable reachable from `from`.
    OrderRespect { from: NodeId, to: NodeId },
    /// A node violating the vtree respect condition.
    VtreeRespect { node: NodeId },
}

/// Outcome of a structural validator: empty means the property holds.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum CircuitError {
    #[error("cycle through nodes {0:?}")]
    CyclicGraph(Vec<NodeId>),
    #[error("variable {var} tested twice on a path through nodes {path:?}")]
    RepeatedVariableOnPath { var: String, path: Vec<NodeId> },
    #[error("node {node:?} references missing node {child:?}")]
    DanglingRef { node: NodeId, child: NodeId },
    #[error("node {node:?} tests variable {var} outside the declared scope")]
    VarOutsideScope { node: NodeId, var: String },
    #[error("AND node {and_node:?} is not decomposable: children share {var}")]
    NotDecomposable { and_node: NodeId, var: String },
    #[error("variable {0} does not exist in the target pool")]
    UnknownVariable(String),
}

/// Rooted DAG of decision, AND and sink nodes with a declared scope.
///
/// The declared scope may strictly contain the tested variables; model
/// counting accounts for the gap. Every node is reachable from the root
/// (`build` garbage-collects), and no path tests a variable twice.
#[derive(Clone, Debug)]
pub struct Circuit {
    pool: VarPool,
    scope: BTreeSet<Var>,
    nodes: Vec<Node>,
    root: NodeId,
}

impl Circuit {
    /// Validates and assembles a circuit. Unreachable nodes are dropped;
    /// surviving nodes keep their relative order, so when every node is
    /// reachable the ids are preserved as given.
    pub fn build(
        pool: VarPool,
        nodes: Vec<Node>,
        root: NodeId,
        scope: BTreeSet<Var>,
    ) -> Result<Circuit, CircuitError> {
        if root.index() >= nodes.len() {
            return Err(CircuitError::DanglingRef {
                node: root,
                child: root,
            });
        }
        for (i, n) in nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            for c in n.children() {
                if c.index() >= nodes.len() {
                    return Err(CircuitError::DanglingRef { node: id, child: c });
                }
            }
        }
        if let Some(cycle) = find_cycle(&nodes, root) {
            return Err(CircuitError::CyclicGraph(cycle));
        }

        // Unreachable arena entries are garbage-collected below, so only
        // the part reachable from the root is held to the scope rule.
        let reachable = reachable_set(&nodes, root);
        for (i, n) in nodes.iter().enumerate() {
            if !reachable[i] {
                continue;
            }
            if let Node::Decision { var, .. } = n {
                if !pool.contains(*var) || !scope.contains(var) {
                    return Err(CircuitError::VarOutsideScope {
                        node: NodeId(i as u32),
                        var: if pool.contains(*var) {
                            pool.name(*var).to_string()
                        } else {
                            format!("#{}", var.0)
                        },
                    });
                }
            }
        }

        // Garbage-collect unreachable nodes, keeping relative order.
        let mut remap = vec![NodeId(u32::MAX); nodes.len()];
        let mut kept = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if reachable[i] {
                remap[i] = NodeId(kept.len() as u32);
                kept.push(*n);
            }
        }
        for n in &mut kept {
            *n = match *n {
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
        let root = remap[root.index()];

        let circuit = Circuit {
            pool,
            scope,
            nodes: kept,
            root,
        };
        if let Some((var, path)) = circuit.find_repeated_test() {
            return Err(CircuitError::RepeatedVariableOnPath {
                var: circuit.pool.name(var).to_string(),
                path,
            });
        }
        Ok(circuit)
    }

    /// Single-sink circuit computing a constant over `scope`.
    pub fn constant(pool: VarPool, scope: BTreeSet<Var>, value: bool) -> Circuit {
        Circuit {
            pool,
            scope,
            nodes: vec![Node::Sink(value)],
            root: NodeId(0),
        }
    }

    /// The same circuit expressed over another pool, matching variables
    /// by name. Fails when a scope variable's name is absent there.
    pub fn translate(&self, pool: VarPool) -> Result<Circuit, CircuitError> {
        let mut map = std::collections::HashMap::new();
        for &v in &self.scope {
            let name = self.pool.name(v);
            let w = pool
                .var(name)
                .ok_or_else(|| CircuitError::UnknownVariable(name.into()))?;
            map.insert(v, w);
        }
        let nodes = self
            .nodes
            .iter()
            .map(|n| match *n {
                Node::Decision { var, lo, hi } => Node::Decision {
                    var: map[&var],
                    lo,
                    hi,
                },
                other => other,
            })
            .collect();
        let scope = self.scope.iter().map(|v| map[v]).collect();
        Circuit::build(pool, nodes, self.root, scope)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn scope(&self) -> &BTreeSet<Var> {
        &self.scope
    }

    pub fn pool(&self) -> &VarPool {
        &self.pool
    }

    /// |Z|: the number of edges of the underlying DAG.
    pub fn size(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Sink(_) => 0,
                _ => 2,
            })
            .sum()
    }

    /// Ids in some topological order (children before parents).
    pub fn topo_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut state = vec![0u8; self.nodes.len()]; // 0 new, 1 open, 2 done
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                state[id.index()] = 2;
                order.push(id);
                continue;
            }
            if state[id.index()] != 0 {
                continue;
            }
            state[id.index()] = 1;
            stack.push((id, true));
            for c in self.nodes[id.index()].children() {
                if state[c.index()] == 0 {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    /// var(Z_v) for every node: the variables tested in the sub-DAG.
    pub fn subcircuit_vars(&self) -> Vec<BTreeSet<Var>> {
        let mut vars: Vec<BTreeSet<Var>> = vec![BTreeSet::new(); self.nodes.len()];
        for id in self.topo_order() {
            let mut set = BTreeSet::new();
            match self.nodes[id.index()] {
                Node::Decision { var, lo, hi } => {
                    set.insert(var);
                    set.extend(vars[lo.index()].iter().copied());
                    set.extend(vars[hi.index()].iter().copied());
                }
                Node::And { left, right } => {
                    set.extend(vars[left.index()].iter().copied());
                    set.extend(vars[right.index()].iter().copied());
                }
                Node::Sink(_) => {}
            }
            vars[id.index()] = set;
        }
        vars
    }

    /// var(Z): the variables tested anywhere in the circuit.
    pub fn tested_vars(&self) -> BTreeSet<Var> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Decision { var, .. } => Some(*var),
                _ => None,
            })
            .collect()
    }

    /// Checks that no path tests a variable twice. The property is
    /// enforced by `build`; this re-checks it on demand.
    pub fn validate_read_once(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if let Some((var, path)) = self.find_repeated_test() {
            report.violations.push(Violation::ReadOnce { var, path });
        }
        report
    }

    /// Checks that the children of every AND node test disjoint variable
    /// sets (each AND is reported once, with the smallest shared variable).
    pub fn validate_decomposable(&self) -> ValidationReport {
        let vars = self.subcircuit_vars();
        let mut report = ValidationReport::default();
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::And { left, right } = n {
                if let Some(&v) = vars[left.index()].intersection(&vars[right.index()]).next() {
                    report.violations.push(Violation::Decomposability {
                        and_node: NodeId(i as u32),
                        var: v,
                    });
                }
            }
        }
        report
    }

    /// Rebuilds the circuit so that the sub-DAGs under the two children
    /// of every AND node are node-disjoint and every sink has exactly one
    /// incoming edge. Variable-free internal nodes compute constants and
    /// are replaced by sinks. The computed function is unchanged and the
    /// size never grows.
    pub fn normalize(&self) -> Result<Circuit, CircuitError> {
        let report = self.validate_decomposable();
        if let Some(Violation::Decomposability { and_node, var }) = report.violations.first() {
            return Err(CircuitError::NotDecomposable {
                and_node: *and_node,
                var: self.pool.name(*var).to_string(),
            });
        }
        let vars = self.subcircuit_vars();
        // Constant value of every variable-free sub-DAG: false iff a
        // 0-sink occurs in it (all its nodes are reached when it is).
        let mut const_val = vec![true; self.nodes.len()];
        for id in self.topo_order() {
            const_val[id.index()] = match self.nodes[id.index()] {
                Node::Sink(b) => b,
                Node::And { left, right } => const_val[left.index()] && const_val[right.index()],
                Node::Decision { .. } => true, // unused: never variable-free
            };
        }

        let mut out: Vec<Node> = Vec::new();
        let mut map = vec![NodeId(u32::MAX); self.nodes.len()];
        // Children before parents so that `map` is ready when referenced.
        for id in self.topo_order() {
            let i = id.index();
            if vars[i].is_empty() {
                continue; // referenced via a fresh sink per incoming edge
            }
            let resolve = |c: NodeId, out: &mut Vec<Node>| -> NodeId {
                if vars[c.index()].is_empty() {
                    let s = NodeId(out.len() as u32);
                    out.push(Node::Sink(const_val[c.index()]));
                    s
                } else {
                    map[c.index()]
                }
            };
            let node = match self.nodes[i] {
                Node::Decision { var, lo, hi } => {
                    let lo = resolve(lo, &mut out);
                    let hi = resolve(hi, &mut out);
                    Node::Decision { var, lo, hi }
                }
                Node::And { left, right } => {
                    let left = resolve(left, &mut out);
                    let right = resolve(right, &mut out);
                    Node::And { left, right }
                }
                Node::Sink(_) => unreachable!("sinks are variable-free"),
            };
            map[i] = NodeId(out.len() as u32);
            out.push(node);
        }
        let root = if vars[self.root.index()].is_empty() {
            let s = NodeId(out.len() as u32);
            out.push(Node::Sink(const_val[self.root.index()]));
            s
        } else {
            map[self.root.index()]
        };
        Ok(
            Circuit::build(self.pool.clone(), out, root, self.scope.clone())
                .expect("normalization preserves structural invariants"),
        )
    }

    /// The sub-DAG rooted at `id` as a circuit of its own; the scope is
    /// exactly the variables tested below `id`.
    pub fn subcircuit(&self, id: NodeId) -> Circuit {
        let mut nodes = Vec::new();
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        let mut order = Vec::new();
        let mut state = vec![0u8; self.nodes.len()];
        let mut stack = vec![(id, false)];
        while let Some((n, expanded)) = stack.pop() {
            if expanded {
                order.push(n);
                state[n.index()] = 2;
                continue;
            }
            if state[n.index()] != 0 {
                continue;
            }
            state[n.index()] = 1;
            stack.push((n, true));
            for c in self.nodes[n.index()].children() {
                if state[c.index()] == 0 {
                    stack.push((c, false));
                }
            }
        }
        for n in order {
            let node = match self.nodes[n.index()] {
                Node::Decision { var, lo, hi } => Node::Decision {
                    var,
                    lo: map[&lo],
                    hi: map[&hi],
                },
                Node::And { left, right } => Node::And {
                    left: map[&left],
                    right: map[&right],
                },
                s => s,
            };
            map.insert(n, NodeId(nodes.len() as u32));
            nodes.push(node);
        }
        let root = map[&id];
        let scope = {
            let mut s = BTreeSet::new();
            for n in &nodes {
                if let Node::Decision { var, .. } = n {
                    s.insert(*var);
                }
            }
            s
        };
        Circuit::build(self.pool.clone(), nodes, root, scope)
            .expect("sub-DAG of a valid circuit is valid")
    }

    /// Graphviz rendering: solid edges are 1-edges, dashed are 0-edges.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph circuit {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Decision { var, .. } => {
                    s.push_str(&format!(
                        "  n{} [shape=circle, label=\"{}\"];\n",
                        i,
                        self.pool.name(*var)
                    ));
                }
                Node::And { .. } => {
                    s.push_str(&format!("  n{i} [shape=circle, label=\"&\"];\n"));
                }
                Node::Sink(b) => {
                    s.push_str(&format!(
                        "  n{} [shape=box, label=\"{}\"];\n",
                        i,
                        u8::from(*b)
                    ));
                }
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Decision { lo, hi, .. } => {
                    s.push_str(&format!("  n{} -> n{} [style=dashed];\n", i, lo.index()));
                    s.push_str(&format!("  n{} -> n{};\n", i, hi.index()));
                }
                Node::And { left, right } => {
                    s.push_str(&format!("  n{} -> n{};\n", i, left.index()));
                    s.push_str(&format!("  n{} -> n{};\n", i, right.index()));
                }
                Node::Sink(_) => {}
            }
        }
        s.push_str("}\n");
        s
    }

    /// Finds a repeated variable test on some root path, if any.
    /// Returns the variable and a path from the earlier test to the later.
    fn find_repeated_test(&self) -> Option<(Var, Vec<NodeId>)> {
        // below[v] = decision variables tested strictly below v.
        let mut below: Vec<BTreeSet<Var>> = vec![BTreeSet::new(); self.nodes.len()];
        let order = self.topo_order();
        for &id in &order {
            let mut set = BTreeSet::new();
            for c in self.nodes[id.index()].children() {
                set.extend(below[c.index()].iter().copied());
                if let Node::Decision { var, .. } = self.nodes[c.index()] {
                    set.insert(var);
                }
            }
            below[id.index()] = set;
        }
        for &id in order.iter().rev() {
            if let Node::Decision { var, .. } = self.nodes[id.index()] {
                if below[id.index()].contains(&var) {
                    let path = self
                        .path_to_test(id, var)
                        .expect("a repeated test implies a witness path");
                    return Some((var, path));
                }
            }
        }
        None
    }

    /// A directed path from `from` to some decision node testing `var`
    /// (excluding `from` itself in the variable check).
    fn path_to_test(&self, from: NodeId, var: Var) -> Option<Vec<NodeId>> {
        let mut path = vec![from];
        let mut current = from;
        'outer: loop {
            for c in self.nodes[current.index()].children() {
                if self.reaches_test(c, var) {
                    path.push(c);
                    if matches!(self.nodes[c.index()], Node::Decision { var: v, .. } if v == var) {
                        return Some(path);
                    }
                    current = c;
                    continue 'outer;
                }
            }
            return None;
        }
    }

    fn reaches_test(&self, from: NodeId, var: Var) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            if seen[id.index()] {
                continue;
            }
            seen[id.index()] = true;
            if matches!(self.nodes[id.index()], Node::Decision { var: v, .. } if v == var) {
                return true;
            }
            stack.extend(self.nodes[id.index()].children());
        }
        false
    }
}

fn reachable_set(nodes: &[Node], root: NodeId) -> Vec<bool> {
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if seen[id.index()] {
            continue;
        }
        seen[id.index()] = true;
        stack.extend(nodes[id.index()].children());
    }
    seen
}

/// Three-colour DFS; returns the node sequence of a cycle if one exists.
fn find_cycle(nodes: &[Node], root: NodeId) -> Option<Vec<NodeId>> {
    let mut state = vec![0u8; nodes.len()];
    let mut parent: Vec<Option<NodeId>> = vec![None; nodes.len()];
    let mut stack = vec![(root, false)];
    while let Some((id, expanded)) = stack.pop() {
        if expanded {
            state[id.index()] = 2;
            continue;
        }
        if state[id.index()] == 2 {
            continue;
        }
        state[id.index()] = 1;
        stack.push((id, true));
        for c in nodes[id.index()].children() {
            match state[c.index()] {
                0 => {
                    parent[c.index()] = Some(id);
                    stack.push((c, false));
                }
                1 => {
                    // Back edge id -> c: walk parents from id back to c.
                    let mut cycle = vec![c];
                    let mut cur = id;
                    while cur != c {
                        cycle.push(cur);
                        cur = parent[cur.index()].expect("open nodes have parents");
                    }
                    cycle.reverse();
                    return Some(cycle);
                }
                _ => {}
            }
        }
    }
    None
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "circuit({} nodes, size {})",
            self.nodes.len(),
            self.size()
        )
    }
}

/// Test pool over x, y, z (shared by tests in sibling modules).
#[cfg(test)]
pub(crate) fn pool_xyz() -> (VarPool, Var, Var, Var) {
    let mut p = VarPool::new();
    let x = p.intern("x");
    let y = p.intern("y");
    let z = p.intern("z");
    (p, x, y, z)
}

/// Circuit for "exactly two of x, y, z are true": root decision on x,
/// the x=0 branch an AND of unary y- and z-circuits, the x=1 branch a
/// y-decision into ANDs pairing a constant with a z-circuit.
#[cfg(test)]
pub(crate) fn exactly_two() -> Circuit {
    let (p, x, y, z) = pool_xyz();
    let nodes = vec![
        Node::Sink(false), // 0
        Node::Sink(true),  // 1
        Node::Decision {
            var: y,
            lo: NodeId(0),
            hi: NodeId(1),
        }, // 2: y
        Node::Decision {
            var: z,
            lo: NodeId(0),
            hi: NodeId(1),
        }, // 3: z
        Node::And {
            left: NodeId(2),
            right: NodeId(3),
        }, // 4: y ∧ z
        Node::Decision {
            var: z,
            lo: NodeId(1),
            hi: NodeId(0),
        }, // 5: ¬z
        Node::And {
            left: NodeId(1),
            right: NodeId(5),
        }, // 6: 1 ∧ ¬z
        Node::And {
            left: NodeId(1),
            right: NodeId(3),
        }, // 7: 1 ∧ z
        Node::Decision {
            var: y,
            lo: NodeId(7),
            hi: NodeId(6),
        }, // 8
        Node::Decision {
            var: x,
            lo: NodeId(4),
            hi: NodeId(8),
        }, // 9: root
    ];
    let scope = [x, y, z].into_iter().collect();
    Circuit::build(p, nodes, NodeId(9), scope).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_accepts_reference_circuit() {
        let c = exactly_two();
        assert_eq!(c.node_count(), 10);
        assert_eq!(c.scope().len(), 3);
        assert_eq!(c.tested_vars().len(), 3);
    }

    #[test]
    fn build_rejects_cycle() {
        let (p, x, y, _) = pool_xyz();
        let nodes = vec![
            Node::Decision {
                var: x,
                lo: NodeId(1),
                hi: NodeId(1),
            },
            Node::Decision {
                var: y,
                lo: NodeId(0),
                hi: NodeId(0),
            },
        ];
        let err = Circuit::build(p, nodes, NodeId(0), [x, y].into_iter().collect()).unwrap_err();
        assert!(matches!(err, CircuitError::CyclicGraph(_)));
    }

    #[test]
    fn build_rejects_repeated_variable() {
        let (p, x, _, _) = pool_xyz();
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Decision {
                var: x,
                lo: NodeId(0),
                hi: NodeId(1),
            },
            Node::Decision {
                var: x,
                lo: NodeId(2),
                hi: NodeId(1),
            },
        ];
        let err = Circuit::build(p, nodes, NodeId(3), [x].into_iter().collect()).unwrap_err();
        match err {
            CircuitError::RepeatedVariableOnPath { var, path } => {
                assert_eq!(var, "x");
                assert_eq!(path, vec![NodeId(3), NodeId(2)]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn build_rejects_dangling_reference() {
        let (p, x, _, _) = pool_xyz();
        let nodes = vec![Node::Decision {
            var: x,
            lo: NodeId(7),
            hi: NodeId(0),
        }];
        let err = Circuit::build(p, nodes, NodeId(0), [x].into_iter().collect()).unwrap_err();
        assert!(matches!(err, CircuitError::DanglingRef { .. }));
    }

    #[test]
    fn build_garbage_collects_unreachable_nodes() {
        let (p, x, _, _) = pool_xyz();
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Sink(true), // unreachable
            Node::Decision {
                var: x,
                lo: NodeId(0),
                hi: NodeId(1),
            },
        ];
        let c = Circuit::build(p, nodes, NodeId(3), [x].into_iter().collect()).unwrap();
        assert_eq!(c.node_count(), 3);
        assert_eq!(c.size(), 2);
    }

    #[test]
    fn size_counts_edges() {
        assert_eq!(exactly_two().size(), 16);
        let (p, x, _, _) = pool_xyz();
        let single = Circuit::constant(p.clone(), [x].into_iter().collect(), true);
        assert_eq!(single.size(), 0);
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Decision {
                var: x,
                lo: NodeId(0),
                hi: NodeId(1),
            },
        ];
        let c = Circuit::build(p, nodes, NodeId(2), [x].into_iter().collect()).unwrap();
        assert_eq!(c.size(), 2);
    }

    #[test]
    fn subcircuit_vars_on_reference_circuit() {
        let c = exactly_two();
        let vars = c.subcircuit_vars();
        let names =
            |id: usize| -> Vec<&str> { vars[id].iter().map(|&v| c.pool().name(v)).collect() };
        assert_eq!(names(9), vec!["x", "y", "z"]);
        assert_eq!(names(4), vec!["y", "z"]);
        assert_eq!(names(6), vec!["z"]);
        assert_eq!(names(0), Vec::<&str>::new());
    }

    #[test]
    fn decomposability_flags_shared_variables() {
        let c = exactly_two();
        assert!(c.validate_decomposable().ok());

        let (p, x, y, _) = pool_xyz();
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Decision {
                var: y,
                lo: NodeId(0),
                hi: NodeId(1),
            },
            Node::Decision {
                var: x,
                lo: NodeId(0),
                hi: NodeId(2),
            },
            Node::Decision {
                var: y,
                lo: NodeId(1),
                hi: NodeId(0),
            },
            Node::And {
                left: NodeId(3),
                right: NodeId(4),
            },
        ];
        let c = Circuit::build(p, nodes, NodeId(5), [x, y].into_iter().collect()).unwrap();
        let report = c.validate_decomposable();
        assert_eq!(
            report.violations,
            vec![Violation::Decomposability {
                and_node: NodeId(5),
                var: y
            }]
        );
    }

    #[test]
    fn normalize_splits_shared_sinks() {
        // Two AND nodes sharing one 1-sink between their children.
        let (p, x, y, _) = pool_xyz();
        let nodes = vec![
            Node::Sink(true),  // 0 shared
            Node::Sink(false), // 1
            Node::Decision {
                var: y,
                lo: NodeId(1),
                hi: NodeId(0),
            }, // 2
            Node::And {
                left: NodeId(0),
                right: NodeId(2),
            }, // 3
            Node::Decision {
                var: x,
                lo: NodeId(0),
                hi: NodeId(3),
            }, // 4
        ];
        let c = Circuit::build(p, nodes, NodeId(4), [x, y].into_iter().collect()).unwrap();
        let n = c.normalize().unwrap();
        assert_eq!(n.size(), c.size());
        // Every sink now has exactly one incoming edge.
        let mut fanin = vec![0usize; n.node_count()];
        for node in n.nodes() {
            for ch in node.children() {
                fanin[ch.index()] += 1;
            }
        }
        for (i, node) in n.nodes().iter().enumerate() {
            if node.is_sink() {
                assert!(fanin[i] <= 1, "sink {i} has fan-in {}", fanin[i]);
            }
        }
    }

    #[test]
    fn normalize_replaces_variable_free_nodes_by_sinks() {
        let (p, x, _, _) = pool_xyz();
        let nodes = vec![
            Node::Sink(true),  // 0
            Node::Sink(false), // 1
            Node::And {
                left: NodeId(0),
                right: NodeId(1),
            }, // 2: constant 0
            Node::Decision {
                var: x,
                lo: NodeId(0),
                hi: NodeId(2),
            }, // 3
        ];
        let c = Circuit::build(p, nodes, NodeId(3), [x].into_iter().collect()).unwrap();
        let n = c.normalize().unwrap();
        assert!(n.size() <= c.size());
        for node in n.nodes() {
            assert!(!matches!(node, Node::And { .. }), "constant AND survived");
        }
        match n.node(n.root()) {
            Node::Decision { lo, hi, .. } => {
                assert_eq!(*n.node(*lo), Node::Sink(true));
                assert_eq!(*n.node(*hi), Node::Sink(false));
            }
            other => panic!("unexpected root {other:?}"),
        }
    }

    #[test]
    fn normalize_rejects_non_decomposable_input() {
        let (p, x, y, _) = pool_xyz();
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Decision {
                var: y,
                lo: NodeId(0),
                hi: NodeId(1),
            },
            Node::Decision {
                var: y,
                lo: NodeId(1),
                hi: NodeId(0),
            },
            Node::And {
                left: NodeId(2),
                right: NodeId(3),
            },
        ];
        let c = Circuit::build(p, nodes, NodeId(4), [x, y].into_iter().collect()).unwrap();
        assert!(matches!(
            c.normalize(),
            Err(CircuitError::NotDecomposable { .. })
        ));
    }

    #[test]
    fn normalize_is_idempotent_in_size() {
        let c = exactly_two().normalize().unwrap();
        let again = c.normalize().unwrap();
        assert_eq!(c.size(), again.size());
        assert_eq!(c.node_count(), again.node_count());
    }

    #[test]
    fn subcircuit_extracts_standalone_circuit() {
        let c = exactly_two();
        let sub = c.subcircuit(NodeId(4)); // y ∧ z
        assert_eq!(sub.scope().len(), 2);
        assert_eq!(sub.size(), 6);
        assert!(sub.validate_decomposable().ok());
    }
}
