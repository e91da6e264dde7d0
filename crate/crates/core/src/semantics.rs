//! Assignment-based semantics of circuits and CNF formulas.
//!
//! Evaluation follows paths: an edge leaving a decision node on `v` is
//! traversable under an assignment τ only when `v` is assigned and the
//! edge label matches τ(v); edges leaving AND nodes are always
//! traversable. An assignment satisfies a circuit when no 0-sink is
//! reachable through traversable edges. Model counting works bottom-up
//! and corrects for variables that a sub-DAG does not test.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::circuit::{Circuit, Node, NodeId, Var, VarPool};
use crate::instances::{CnfFormula, Lit};
use crate::structure::VariableOrder;

/// Default cap on brute-force enumeration (2^20 assignments).
pub const BRUTEFORCE_LIMIT: usize = 20;

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum SemanticsError {
    #[error("assignment leaves {0} scope variable(s) unassigned")]
    IncompleteAssignment(usize),
    #[error("circuit has a non-decomposable AND node")]
    NotDecomposable,
    #[error("scope of {0} variables exceeds the brute-force limit of {1}")]
    ScopeTooLarge(usize, usize),
    #[error("assignment domain is not a prefix of the given order")]
    NotAPrefix,
    #[error("circuit does not respect the given order")]
    NotOrdered,
}

/// Partial mapping from variables to truth values.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PartialAssignment {
    map: BTreeMap<Var, bool>,
}

impl PartialAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, bool)>) -> Self {
        Self {
            map: pairs.into_iter().collect(),
        }
    }

    pub fn set(&mut self, v: Var, value: bool) {
        self.map.insert(v, value);
    }

    pub fn get(&self, v: Var) -> Option<bool> {
        self.map.get(&v).copied()
    }

    pub fn domain(&self) -> impl Iterator<Item = Var> + '_ {
        self.map.keys().copied()
    }

    pub fn domain_set(&self) -> BTreeSet<Var> {
        self.map.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_total_on(&self, vars: &BTreeSet<Var>) -> bool {
        vars.iter().all(|v| self.map.contains_key(v))
    }

    pub fn restrict(&self, vars: &BTreeSet<Var>) -> PartialAssignment {
        Self {
            map: self
                .map
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(v, b)| (*v, *b))
                .collect(),
        }
    }

    /// Union of two assignments with disjoint or agreeing domains.
    /// Panics if the assignments disagree on a shared variable.
    pub fn union(&self, other: &PartialAssignment) -> PartialAssignment {
        let mut map = self.map.clone();
        for (&v, &b) in &other.map {
            let old = map.insert(v, b);
            assert!(
                old.is_none() || old == Some(b),
                "assignments disagree on a variable"
            );
        }
        PartialAssignment { map }
    }

    /// The τ-th total assignment over `vars` (bit i of `index` gives the
    /// value of the i-th variable in sorted order). Used by enumerators.
    pub fn nth_over(vars: &BTreeSet<Var>, index: u64) -> PartialAssignment {
        let mut map = BTreeMap::new();
        for (i, &v) in vars.iter().enumerate() {
            map.insert(v, (index >> i) & 1 == 1);
        }
        PartialAssignment { map }
    }

    pub fn render(&self, pool: &VarPool) -> String {
        self.map
            .iter()
            .map(|(&v, &b)| format!("{}={}", pool.name(v), u8::from(b)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Model count together with the scope it was taken over.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CountResult {
    pub count: BigUint,
    pub scope: BTreeSet<Var>,
}

/// Nodes reachable from the root through τ-traversable edges.
pub fn reached_nodes(z: &Circuit, t: &PartialAssignment) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![z.root()];
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        match *z.node(id) {
            Node::Decision { var, lo, hi } => {
                if let Some(b) = t.get(var) {
                    stack.push(if b { hi } else { lo });
                }
            }
            Node::And { left, right } => {
                stack.push(left);
                stack.push(right);
            }
            Node::Sink(_) => {}
        }
    }
    seen
}

/// Whether τ satisfies the circuit: no 0-sink is reached.
/// τ must assign every scope variable (extra bindings are ignored).
pub fn evaluate(z: &Circuit, t: &PartialAssignment) -> Result<bool, SemanticsError> {
    let missing = z.scope().iter().filter(|v| t.get(**v).is_none()).count();
    if missing > 0 {
        return Err(SemanticsError::IncompleteAssignment(missing));
    }
    Ok(!reached_nodes(z, t)
        .iter()
        .any(|id| matches!(z.node(*id), Node::Sink(false))))
}

/// Nodes where the τ-guided traversal halts: reached sinks and reached
/// decision nodes on unassigned variables. No τ-compatible path extends
/// past such a node, so nothing strictly below is reached *through* it
/// (variable-free nodes below, like the shared sinks, may still be
/// reached along other branches). When the domain of τ is a prefix of
/// an order the circuit respects, the restriction Z\[τ\] is equivalent to
/// the conjunction of the sub-circuits rooted here, and their variable
/// sets are pairwise disjoint; [`maximal_reached_nodes_checked`]
/// verifies that precondition.
pub fn maximal_reached_nodes(z: &Circuit, t: &PartialAssignment) -> BTreeSet<NodeId> {
    reached_nodes(z, t)
        .into_iter()
        .filter(|&id| match *z.node(id) {
            Node::Sink(_) => true,
            Node::Decision { var, .. } => t.get(var).is_none(),
            Node::And { .. } => false,
        })
        .collect()
}

/// [`maximal_reached_nodes`] with its precondition verified: the circuit
/// respects `order` and the domain of τ is a prefix of it.
pub fn maximal_reached_nodes_checked(
    z: &Circuit,
    order: &VariableOrder,
    t: &PartialAssignment,
) -> Result<BTreeSet<NodeId>, SemanticsError> {
    if !crate::structure::respects_order(z, order).ok() {
        return Err(SemanticsError::NotOrdered);
    }
    let domain = t.domain_set();
    if !order.is_prefix(&domain) {
        return Err(SemanticsError::NotAPrefix);
    }
    Ok(maximal_reached_nodes(z, t))
}

/// Restriction Z\[τ\]: decision nodes on assigned variables are bypassed
/// toward the child selected by τ, the scope loses the assigned
/// variables, and unreachable nodes are collected. The size never grows.
/// Panics if the domain of τ is not inside the scope.
pub fn condition(z: &Circuit, t: &PartialAssignment) -> Circuit {
    for v in t.domain() {
        assert!(
            z.scope().contains(&v),
            "conditioned variable outside circuit scope"
        );
    }
    // Resolve every reference through the chain of bypassed decisions.
    let mut target: Vec<NodeId> = (0..z.node_count() as u32).map(NodeId).collect();
    for id in z.topo_order() {
        if let Node::Decision { var, lo, hi } = *z.node(id) {
            if let Some(b) = t.get(var) {
                let next = if b { hi } else { lo };
                target[id.index()] = target[next.index()];
            }
        }
    }
    let nodes = z
        .nodes()
        .iter()
        .map(|n| match *n {
            Node::Decision { var, lo, hi } => Node::Decision {
                var,
                lo: target[lo.index()],
                hi: target[hi.index()],
            },
            Node::And { left, right } => Node::And {
                left: target[left.index()],
                right: target[right.index()],
            },
            s => s,
        })
        .collect();
    let scope = z
        .scope()
        .iter()
        .copied()
        .filter(|v| t.get(*v).is_none())
        .collect();
    let root = target[z.root().index()];
    Circuit::build(z.pool().clone(), nodes, root, scope)
        .expect("conditioning preserves structural invariants")
}

/// Number of satisfying assignments over `scope`, which must contain the
/// tested variables. Requires a decomposable circuit: a decision node
/// contributes c0·2^(gap0) + c1·2^(gap1) where each gap counts scope
/// variables of the node's sub-DAG missing from the child's sub-DAG, and
/// an AND node multiplies its children.
pub fn model_count(z: &Circuit, scope: &BTreeSet<Var>) -> Result<CountResult, SemanticsError> {
    if !z.validate_decomposable().ok() {
        return Err(SemanticsError::NotDecomposable);
    }
    let vars = z.subcircuit_vars();
    assert!(
        vars[z.root().index()].is_subset(scope),
        "circuit tests variables outside the counting scope"
    );
    let mut counts: Vec<BigUint> = vec![BigUint::zero(); z.node_count()];
    for id in z.topo_order() {
        let i = id.index();
        counts[i] = match *z.node(id) {
            Node::Sink(b) => {
                if b {
                    BigUint::one()
                } else {
                    BigUint::zero()
                }
            }
            Node::And { left, right } => &counts[left.index()] * &counts[right.index()],
            Node::Decision { lo, hi, .. } => {
                let gap = |child: NodeId| -> u32 {
                    (vars[i].len() - 1 - vars[child.index()].len()) as u32
                };
                &counts[lo.index()] * BigUint::from(2u32).pow(gap(lo))
                    + &counts[hi.index()] * BigUint::from(2u32).pow(gap(hi))
            }
        };
    }
    let tested = &vars[z.root().index()];
    let outer = (scope.len() - tested.len()) as u32;
    let count = &counts[z.root().index()] * BigUint::from(2u32).pow(outer);
    Ok(CountResult {
        count,
        scope: scope.clone(),
    })
}

/// Whether two circuits agree on every total assignment over `scope`.
pub fn equivalent_bruteforce(
    a: &Circuit,
    b: &Circuit,
    scope: &BTreeSet<Var>,
) -> Result<bool, SemanticsError> {
    equivalent_bruteforce_with_limit(a, b, scope, BRUTEFORCE_LIMIT)
}

pub fn equivalent_bruteforce_with_limit(
    a: &Circuit,
    b: &Circuit,
    scope: &BTreeSet<Var>,
    limit: usize,
) -> Result<bool, SemanticsError> {
    if scope.len() > limit {
        return Err(SemanticsError::ScopeTooLarge(scope.len(), limit));
    }
    assert!(a.scope().is_subset(scope) && b.scope().is_subset(scope));
    for idx in 0..(1u64 << scope.len()) {
        let t = PartialAssignment::nth_over(scope, idx);
        if evaluate(a, &t)? != evaluate(b, &t)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Clause-by-clause CNF evaluation. τ must assign every scope variable.
pub fn cnf_evaluate(f: &CnfFormula, t: &PartialAssignment) -> Result<bool, SemanticsError> {
    let missing = f.scope.iter().filter(|v| t.get(**v).is_none()).count();
    if missing > 0 {
        return Err(SemanticsError::IncompleteAssignment(missing));
    }
    let lit_sat = |l: &Lit| t.get(l.var) == Some(l.positive);
    Ok(f.clauses.iter().all(|c| c.lits.iter().any(lit_sat)))
}

/// Model count of a CNF formula by exhaustive enumeration over `scope`,
/// which must contain every occurring variable.
pub fn cnf_count_bruteforce(
    f: &CnfFormula,
    scope: &BTreeSet<Var>,
) -> Result<CountResult, SemanticsError> {
    cnf_count_bruteforce_with_limit(f, scope, BRUTEFORCE_LIMIT)
}

pub fn cnf_count_bruteforce_with_limit(
    f: &CnfFormula,
    scope: &BTreeSet<Var>,
    limit: usize,
) -> Result<CountResult, SemanticsError> {
    if scope.len() > limit {
        return Err(SemanticsError::ScopeTooLarge(scope.len(), limit));
    }
    assert!(
        f.occurring_vars().is_subset(scope),
        "formula variables outside scope"
    );
    let mut count = BigUint::zero();
    for idx in 0..(1u64 << scope.len()) {
        let t = PartialAssignment::nth_over(scope, idx);
        let sat = f
            .clauses
            .iter()
            .all(|c| c.lits.iter().any(|l| t.get(l.var) == Some(l.positive)));
        if sat {
            count += BigUint::one();
        }
    }
    Ok(CountResult {
        count,
        scope: scope.clone(),
    })
}
