//! Variable orders, vtrees, and the structural predicates that relate
//! them to circuits: order respect (decision variables strictly increase
//! along every path), vtree respect (every AND and decision splits along
//! some vtree node), linearity of vtrees, and source-to-sink decision
//! paths.
//!
//! Vtree respect is orientation-insensitive: a vtree node certifies a
//! circuit node no matter which of its two subtrees hosts which side.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::circuit::{Circuit, Node, NodeId, ValidationReport, Var, Violation};

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum StructureError {
    #[error("variable {0} appears twice")]
    DuplicateVariable(String),
    #[error("order must not be empty")]
    EmptyOrder,
    #[error("vtree node {node:?} references missing node {child:?}")]
    DanglingRef {
        node: VtreeNodeId,
        child: VtreeNodeId,
    },
    #[error("vtree nodes do not form a single rooted tree")]
    NotATree,
    #[error("vtree leaves differ from the circuit scope (circuit-only: {circuit_only:?}, vtree-only: {vtree_only:?})")]
    ScopeMismatch {
        circuit_only: Vec<String>,
        vtree_only: Vec<String>,
    },
}

/// Total order on a set of variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VariableOrder {
    seq: Vec<Var>,
    pos: HashMap<Var, u32>,
}

impl VariableOrder {
    pub fn new(seq: Vec<Var>) -> Result<VariableOrder, StructureError> {
        let mut pos = HashMap::new();
        for (i, &v) in seq.iter().enumerate() {
            if pos.insert(v, i as u32).is_some() {
                return Err(StructureError::DuplicateVariable(format!("#{}", v.0)));
            }
        }
        Ok(VariableOrder { seq, pos })
    }

    /// The order listing `scope` in increasing id order.
    pub fn sorted(scope: &BTreeSet<Var>) -> VariableOrder {
        VariableOrder::new(scope.iter().copied().collect()).expect("a set has no duplicates")
    }

    pub fn seq(&self) -> &[Var] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn position(&self, v: Var) -> Option<usize> {
        self.pos.get(&v).map(|&i| i as usize)
    }

    pub fn contains(&self, v: Var) -> bool {
        self.pos.contains_key(&v)
    }

    pub fn covers(&self, vars: &BTreeSet<Var>) -> bool {
        vars.iter().all(|v| self.contains(*v))
    }

    /// Whether `vars` is exactly the set of the first |vars| entries.
    pub fn is_prefix(&self, vars: &BTreeSet<Var>) -> bool {
        vars.len() <= self.seq.len() && self.seq[..vars.len()].iter().all(|v| vars.contains(v))
    }

    pub fn prefix(&self, k: usize) -> &[Var] {
        &self.seq[..k]
    }

    pub fn suffix(&self, k: usize) -> &[Var] {
        &self.seq[k..]
    }

    /// The induced order on a subset of the variables.
    pub fn restricted(&self, keep: &BTreeSet<Var>) -> VariableOrder {
        VariableOrder::new(
            self.seq
                .iter()
                .copied()
                .filter(|v| keep.contains(v))
                .collect(),
        )
        .expect("restriction preserves distinctness")
    }

    pub fn render(&self, pool: &crate::circuit::VarPool) -> String {
        self.seq
            .iter()
            .map(|&v| pool.name(v))
            .collect::<Vec<_>>()
            .join(" < ")
    }
}

/// Node id within one [`Vtree`] arena.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VtreeNodeId(pub u32);

impl VtreeNodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VtreeNode {
    Leaf(Var),
    Internal(VtreeNodeId, VtreeNodeId),
}

/// Full binary tree whose leaves carry distinct variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Vtree {
    nodes: Vec<VtreeNode>,
    root: VtreeNodeId,
    /// Variables below each node, computed at build time.
    vars: Vec<BTreeSet<Var>>,
}

impl Vtree {
    /// Validates that `nodes` under `root` form a single tree (every
    /// non-root node has exactly one parent) with distinct leaf
    /// variables, and precomputes per-node variable sets.
    pub fn build(nodes: Vec<VtreeNode>, root: VtreeNodeId) -> Result<Vtree, StructureError> {
        let n = nodes.len();
        if root.index() >= n {
            return Err(StructureError::DanglingRef {
                node: root,
                child: root,
            });
        }
        let mut parents = vec![0usize; n];
        for (i, node) in nodes.iter().enumerate() {
            if let VtreeNode::Internal(l, r) = node {
                for &c in &[*l, *r] {
                    if c.index() >= n {
                        return Err(StructureError::DanglingRef {
                            node: VtreeNodeId(i as u32),
                            child: c,
                        });
                    }
                    parents[c.index()] += 1;
                }
            }
        }
        if parents[root.index()] != 0 {
            return Err(StructureError::NotATree);
        }
        if (0..n).any(|i| i != root.index() && parents[i] != 1) {
            return Err(StructureError::NotATree);
        }
        // With the parent counts above, reachability from the root plus
        // node count equality rules out cycles and stray components.
        let mut vars: Vec<Option<BTreeSet<Var>>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut stack = vec![(root, false)];
        let mut reached = 0usize;
        while let Some((id, expanded)) = stack.pop() {
            match nodes[id.index()] {
                VtreeNode::Leaf(v) => {
                    if !seen[id.index()] {
                        seen[id.index()] = true;
                        reached += 1;
                        vars[id.index()] = Some([v].into_iter().collect());
                    }
                }
                VtreeNode::Internal(l, r) => {
                    if expanded {
                        let mut set = vars[l.index()].clone().expect("child computed");
                        for &v in vars[r.index()].as_ref().expect("child computed") {
                            if !set.insert(v) {
                                return Err(StructureError::DuplicateVariable(format!("#{}", v.0)));
                            }
                        }
                        vars[id.index()] = Some(set);
                    } else if !seen[id.index()] {
                        seen[id.index()] = true;
                        reached += 1;
                        stack.push((id, true));
                        stack.push((l, false));
                        stack.push((r, false));
                    }
                }
            }
        }
        if reached != n {
            return Err(StructureError::NotATree);
        }
        let vars = vars
            .into_iter()
            .map(|s| s.expect("all nodes computed"))
            .collect();
        Ok(Vtree { nodes, root, vars })
    }

    pub fn root(&self) -> VtreeNodeId {
        self.root
    }

    pub fn node(&self, id: VtreeNodeId) -> &VtreeNode {
        &self.nodes[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = VtreeNodeId> {
        (0..self.nodes.len() as u32).map(VtreeNodeId)
    }

    /// Variables at the leaves below `id`.
    pub fn vars_below(&self, id: VtreeNodeId) -> &BTreeSet<Var> {
        &self.vars[id.index()]
    }

    /// All leaf variables.
    pub fn leaves(&self) -> &BTreeSet<Var> {
        &self.vars[self.root.index()]
    }

    /// Linear: every internal node has at least one leaf child.
    pub fn is_linear(&self) -> bool {
        self.nodes.iter().all(|n| match n {
            VtreeNode::Leaf(_) => true,
            VtreeNode::Internal(l, r) => {
                matches!(self.nodes[l.index()], VtreeNode::Leaf(_))
                    || matches!(self.nodes[r.index()], VtreeNode::Leaf(_))
            }
        })
    }

    /// The variable order read off a linear vtree: at each internal
    /// node, the leaf-child variable comes first (left child on ties).
    /// `None` if the vtree is not linear.
    pub fn linear_order(&self) -> Option<VariableOrder> {
        if !self.is_linear() {
            return None;
        }
        let mut seq = Vec::new();
        let mut cur = self.root;
        loop {
            match self.nodes[cur.index()] {
                VtreeNode::Leaf(v) => {
                    seq.push(v);
                    break;
                }
                VtreeNode::Internal(l, r) => {
                    if let VtreeNode::Leaf(v) = self.nodes[l.index()] {
                        seq.push(v);
                        cur = r;
                    } else {
                        let VtreeNode::Leaf(v) = self.nodes[r.index()] else {
                            unreachable!()
                        };
                        seq.push(v);
                        cur = l;
                    }
                }
            }
        }
        Some(VariableOrder::new(seq).expect("leaf variables are distinct"))
    }

    pub fn render(&self, pool: &crate::circuit::VarPool) -> String {
        fn go(t: &Vtree, id: VtreeNodeId, pool: &crate::circuit::VarPool, out: &mut String) {
            match t.node(id) {
                VtreeNode::Leaf(v) => out.push_str(pool.name(*v)),
                VtreeNode::Internal(l, r) => {
                    out.push('(');
                    go(t, *l, pool, out);
                    out.push(' ');
                    go(t, *r, pool, out);
                    out.push(')');
                }
            }
        }
        let mut s = String::new();
        go(self, self.root, pool, &mut s);
        s
    }
}

/// The right-deep ("caterpillar") linear vtree of an order: the first
/// variable is the left leaf at the root, the rest hang down the right
/// spine.
pub fn linear_vtree_from_order(order: &VariableOrder) -> Result<Vtree, StructureError> {
    if order.is_empty() {
        return Err(StructureError::EmptyOrder);
    }
    let mut nodes = Vec::new();
    let seq = order.seq();
    // Build from the tail up: last leaf first, then (leaf, rest) pairs.
    let mut cur = {
        nodes.push(VtreeNode::Leaf(seq[seq.len() - 1]));
        VtreeNodeId(0)
    };
    for &v in seq[..seq.len() - 1].iter().rev() {
        nodes.push(VtreeNode::Leaf(v));
        let leaf = VtreeNodeId(nodes.len() as u32 - 1);
        nodes.push(VtreeNode::Internal(leaf, cur));
        cur = VtreeNodeId(nodes.len() as u32 - 1);
    }
    Vtree::build(nodes, cur)
}

/// Checks that decision variables strictly increase along every
/// root-to-sink path. Violations pair a decision node with a descendant
/// decision on an earlier-or-equal variable; a decision on a variable
/// missing from the order reports the node paired with itself.
pub fn respects_order(z: &Circuit, order: &VariableOrder) -> ValidationReport {
    let sub = z.subcircuit_vars();
    let mut report = ValidationReport::default();
    for (i, node) in z.nodes().iter().enumerate() {
        let Node::Decision { var, lo, hi } = *node else {
            continue;
        };
        let id = NodeId(i as u32);
        let Some(p) = order.position(var) else {
            report
                .violations
                .push(Violation::OrderRespect { from: id, to: id });
            continue;
        };
        let offending: BTreeSet<Var> = [lo, hi]
            .into_iter()
            .flat_map(|c| sub[c.index()].iter().copied())
            .filter(|&w| order.position(w).is_none_or(|q| q <= p))
            .collect();
        if offending.is_empty() {
            continue;
        }
        // Witness: first decision below `id` testing an offending variable.
        let mut stack = vec![lo, hi];
        let mut seen = BTreeSet::new();
        while let Some(c) = stack.pop() {
            if !seen.insert(c) {
                continue;
            }
            if let Node::Decision { var: w, .. } = z.node(c) {
                if offending.contains(w) {
                    report
                        .violations
                        .push(Violation::OrderRespect { from: id, to: c });
                    break;
                }
            }
            stack.extend(z.node(c).children());
        }
    }
    report
}

/// Checks vtree respect. For an AND node, some internal vtree node must
/// separate the variables of the two children into its two subtrees;
/// for a decision node, some internal vtree node must put the decision
/// variable on one side and all variables of both branches on the
/// other. Both checks accept either orientation. The vtree leaves must
/// coincide with the circuit scope.
pub fn respects_vtree(z: &Circuit, t: &Vtree) -> Result<ValidationReport, StructureError> {
    let scope = z.scope();
    let leaves = t.leaves();
    if scope != leaves {
        let name = |v: &Var| z.pool().name(*v).to_string();
        return Err(StructureError::ScopeMismatch {
            circuit_only: scope.difference(leaves).map(name).collect(),
            vtree_only: leaves.difference(scope).map(name).collect(),
        });
    }
    let sub = z.subcircuit_vars();
    let internals: Vec<(&BTreeSet<Var>, &BTreeSet<Var>)> = t
        .node_ids()
        .filter_map(|id| match t.node(id) {
            VtreeNode::Internal(l, r) => Some((t.vars_below(*l), t.vars_below(*r))),
            VtreeNode::Leaf(_) => None,
        })
        .collect();
    let mut report = ValidationReport::default();
    for (i, node) in z.nodes().iter().enumerate() {
        let id = NodeId(i as u32);
        let ok = match *node {
            Node::Sink(_) => true,
            Node::And { left, right } => {
                let (a, b) = (&sub[left.index()], &sub[right.index()]);
                if internals.is_empty() {
                    // Single-leaf vtree: only variable-free products fit.
                    a.is_empty() && b.is_empty()
                } else {
                    internals.iter().any(|(t1, t2)| {
                        (a.is_subset(t1) && b.is_subset(t2)) || (a.is_subset(t2) && b.is_subset(t1))
                    })
                }
            }
            Node::Decision { var, lo, hi } => {
                let below: BTreeSet<Var> =
                    sub[lo.index()].union(&sub[hi.index()]).copied().collect();
                if internals.is_empty() {
                    // Single-leaf vtree: a decision on that one variable
                    // with variable-free branches.
                    leaves.contains(&var) && below.is_empty()
                } else {
                    internals.iter().any(|(t1, t2)| {
                        (t1.contains(&var) && below.is_subset(t2))
                            || (t2.contains(&var) && below.is_subset(t1))
                    })
                }
            }
        };
        if !ok {
            report.violations.push(Violation::VtreeRespect { node: id });
        }
    }
    Ok(report)
}

/// A source-to-sink path that uses only decision nodes and tests every
/// variable of the circuit. Returns the node sequence (ending in the
/// sink) if one exists. A sink root trivially qualifies.
pub fn has_decision_path(z: &Circuit) -> Option<Vec<NodeId>> {
    let all = z.tested_vars();
    if let Node::Sink(_) = z.node(z.root()) {
        return Some(vec![z.root()]);
    }
    let mut path = vec![z.root()];
    let mut tested = BTreeSet::new();
    fn go(
        z: &Circuit,
        all: &BTreeSet<Var>,
        path: &mut Vec<NodeId>,
        tested: &mut BTreeSet<Var>,
    ) -> bool {
        let cur = *path.last().expect("path nonempty");
        let Node::Decision { var, lo, hi } = *z.node(cur) else {
            return false;
        };
        tested.insert(var);
        for child in [hi, lo] {
            path.push(child);
            match z.node(child) {
                Node::Sink(_) if tested.len() == all.len() => return true,
                Node::Decision { .. } if go(z, all, path, tested) => {
                    return true;
                }
                _ => {}
            }
            path.pop();
        }
        tested.remove(&var);
        false
    }
    if go(z, &all, &mut path, &mut tested) {
        Some(path)
    } else {
        None
    }
}
