//! Circuit rewrites: AND-node elimination for circuits respecting a
//! linear vtree, the conversion of structured circuits with a full
//! decision path into decision-only circuits, stripping the guard
//! clause from circuits computing the edge-guard family, and vertex
//! removal by conditioning.
//!
//! AND elimination exploits linearity: some internal vtree node
//! certifies each AND, and in a linear vtree one side of that node is a
//! single leaf, so one AND child depends on at most one variable. A
//! circuit over at most one variable computes one of four functions
//! (false, true, the variable, its negation), and each case absorbs the
//! AND into a sink, the sibling, or a fresh decision node — never
//! increasing the edge count.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Node, NodeId, ValidationReport, Var};
use crate::instances::{Graph, Vertex};
use crate::semantics::{condition, PartialAssignment};
use crate::structure::{has_decision_path, respects_vtree, StructureError, Vtree};

#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum TransformError {
    #[error("vtree is not linear")]
    NotLinearVtree,
    #[error("circuit has a non-decomposable AND node")]
    NotDecomposable,
    #[error("circuit does not respect the vtree ({} violation(s))", .0.violations.len())]
    NotStructured(ValidationReport),
    #[error("circuit and vtree disagree on variables: {0}")]
    ScopeMismatch(StructureError),
    #[error("no source-to-sink decision path tests every variable")]
    NoDecisionPath,
    #[error("circuit contains an AND node ({0:?}) but must be decision-only")]
    HasAndNodes(NodeId),
    #[error("graph has {0} vertex/vertices but at least 2 are needed")]
    TooFewVertices(usize),
    #[error("graph vertex {0} has no variable in the circuit")]
    UnknownVertexVar(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// What a one-variable AND child turned out to compute.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum UnaryKind {
    ConstZero,
    ConstOne,
    Positive,
    Negative,
}

/// Record of one AND-elimination run: which original AND was resolved
/// how, plus the edge counts before and after.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransformTrace {
    pub steps: Vec<(NodeId, UnaryKind)>,
    pub size_before: usize,
    pub size_after: usize,
}

/// For every node with at most one tested variable, its value at
/// variable-equals-false and variable-equals-true; `None` elsewhere.
fn unary_values(z: &Circuit, sub: &[BTreeSet<Var>]) -> Vec<Option<(bool, bool)>> {
    let mut uval: Vec<Option<(bool, bool)>> = vec![None; z.node_count()];
    for id in z.topo_order() {
        let i = id.index();
        if sub[i].len() > 1 {
            continue;
        }
        uval[i] = match *z.node(id) {
            Node::Sink(b) => Some((b, b)),
            Node::Decision { lo, hi, .. } => {
                // The one tested variable is this node's own variable;
                // children are variable-free.
                match (uval[lo.index()], uval[hi.index()]) {
                    (Some(l), Some(h)) => Some((l.0, h.1)),
                    _ => None,
                }
            }
            Node::And { left, right } => match (uval[left.index()], uval[right.index()]) {
                (Some(l), Some(r)) => Some((l.0 && r.0, l.1 && r.1)),
                _ => None,
            },
        };
    }
    uval
}

/// Removes every AND node from a decomposable circuit respecting the
/// linear vtree `t`. The result is decision-only, computes the same
/// function, and is never larger.
pub fn linearize(z: &Circuit, t: &Vtree) -> Result<(Circuit, TransformTrace), TransformError> {
    if !t.is_linear() {
        return Err(TransformError::NotLinearVtree);
    }
    if !z.validate_decomposable().ok() {
        return Err(TransformError::NotDecomposable);
    }
    let report = respects_vtree(z, t).map_err(TransformError::ScopeMismatch)?;
    if !report.ok() {
        return Err(TransformError::NotStructured(report));
    }
    let sub = z.subcircuit_vars();
    let uval = unary_values(z, &sub);
    let mut out: Vec<Node> = Vec::with_capacity(z.node_count());
    let mut repl: Vec<NodeId> = vec![NodeId(0); z.node_count()];
    let mut steps = Vec::new();
    for id in z.topo_order() {
        let i = id.index();
        repl[i] = match *z.node(id) {
            Node::Sink(b) => {
                out.push(Node::Sink(b));
                NodeId(out.len() as u32 - 1)
            }
            Node::Decision { var, lo, hi } => {
                out.push(Node::Decision {
                    var,
                    lo: repl[lo.index()],
                    hi: repl[hi.index()],
                });
                NodeId(out.len() as u32 - 1)
            }
            Node::And { left, right } => {
                // One child tests at most one variable; prefer the left
                // on ties. Linearity plus vtree respect guarantee this.
                let (unary, other) = if sub[left.index()].len() <= 1 {
                    (left, right)
                } else {
                    assert!(
                        sub[right.index()].len() <= 1,
                        "no unary side under a linear vtree"
                    );
                    (right, left)
                };
                let kind = match uval[unary.index()].expect("side with at most one variable") {
                    (false, false) => UnaryKind::ConstZero,
                    (true, true) => UnaryKind::ConstOne,
                    (false, true) => UnaryKind::Positive,
                    (true, false) => UnaryKind::Negative,
                };
                steps.push((id, kind));
                match kind {
                    UnaryKind::ConstZero => {
                        out.push(Node::Sink(false));
                        NodeId(out.len() as u32 - 1)
                    }
                    UnaryKind::ConstOne => repl[other.index()],
                    UnaryKind::Positive | UnaryKind::Negative => {
                        let x = *sub[unary.index()]
                            .iter()
                            .next()
                            .expect("a non-constant unary side tests its variable");
                        out.push(Node::Sink(false));
                        let zero = NodeId(out.len() as u32 - 1);
                        let keep = repl[other.index()];
                        let (lo, hi) = if kind == UnaryKind::Positive {
                            (zero, keep)
                        } else {
                            (keep, zero)
                        };
                        out.push(Node::Decision { var: x, lo, hi });
                        NodeId(out.len() as u32 - 1)
                    }
                }
            }
        };
    }
    let root = repl[z.root().index()];
    let result = Circuit::build(z.pool().clone(), out, root, z.scope().clone())?;
    let trace = TransformTrace {
        steps,
        size_before: z.size(),
        size_after: result.size(),
    };
    debug_assert!(trace.size_after <= trace.size_before);
    Ok((result, trace))
}

/// Converts a circuit that respects `t` and has a source-to-sink
/// decision path testing every variable into a decision-only circuit.
/// Under these premises every respected vtree is linear, so this checks
/// the premises in order and then delegates to [`linearize`].
pub fn structured_to_fbdd(
    z: &Circuit,
    t: &Vtree,
) -> Result<(Circuit, TransformTrace), TransformError> {
    let report = respects_vtree(z, t).map_err(TransformError::ScopeMismatch)?;
    if !report.ok() {
        return Err(TransformError::NotStructured(report));
    }
    if has_decision_path(z).is_none() {
        return Err(TransformError::NoDecisionPath);
    }
    if !t.is_linear() {
        // Unreachable for circuits that truly satisfy both premises;
        // kept as a defensive error for inconsistent inputs.
        return Err(TransformError::NotLinearVtree);
    }
    linearize(z, t)
}

/// From a decision-only circuit computing the edge-guard family of `g`,
/// builds a decision-only circuit computing just the edge clauses
/// (u ∨ v for every edge), over the same scope.
///
/// The construction walks the vertices x1 < x2 < … < xn (graph order):
/// a chain of decisions where the 1-edge of xi advances to x(i+1) and
/// the 0-edge enters a private copy of the input conditioned on
/// x1 = … = x(i-1) = 1, xi = 0; the final 1-edge accepts. Under that
/// prefix the guard clause is already satisfied, so the conditioned
/// input computes exactly the remaining edge clauses. The copies are
/// materially disjoint; the result has at most |V| times the input's
/// edges.
pub fn strip_guard_clause(z: &Circuit, g: &Graph) -> Result<Circuit, TransformError> {
    if let Some(and) = z
        .nodes()
        .iter()
        .position(|n| matches!(n, Node::And { .. }))
        .map(|i| NodeId(i as u32))
    {
        return Err(TransformError::HasAndNodes(and));
    }
    if g.vertex_count() == 0 {
        return Err(TransformError::TooFewVertices(0));
    }
    let mut vars = Vec::new();
    for v in g.vertices() {
        let var = z
            .pool()
            .var(g.name(v))
            .filter(|var| z.scope().contains(var))
            .ok_or_else(|| TransformError::UnknownVertexVar(g.name(v).to_string()))?;
        vars.push(var);
    }
    let n = vars.len();
    let mut out: Vec<Node> = vec![Node::Sink(true)];
    let mut next = NodeId(0); // target of the last 1-edge: accept
    for i in (0..n).rev() {
        let mut tau = PartialAssignment::new();
        for &earlier in &vars[..i] {
            tau.set(earlier, true);
        }
        tau.set(vars[i], false);
        let copy = condition(z, &tau);
        let offset = out.len() as u32;
        for node in copy.nodes() {
            out.push(match *node {
                Node::Decision { var, lo, hi } => Node::Decision {
                    var,
                    lo: NodeId(lo.0 + offset),
                    hi: NodeId(hi.0 + offset),
                },
                Node::And { left, right } => Node::And {
                    left: NodeId(left.0 + offset),
                    right: NodeId(right.0 + offset),
                },
                s => s,
            });
        }
        let lo = NodeId(copy.root().0 + offset);
        out.push(Node::Decision {
            var: vars[i],
            lo,
            hi: next,
        });
        next = NodeId(out.len() as u32 - 1);
    }
    Ok(Circuit::build(
        z.pool().clone(),
        out,
        next,
        z.scope().clone(),
    )?)
}

/// Conditions a circuit for the edge-guard family of `g` on vertex
/// `x` = 1, which computes the family of `g` with `x` removed (the
/// clauses mentioning `x` positively are satisfied and the guard clause
/// merely shrinks). Requires at least two vertices so that the smaller
/// family exists.
pub fn remove_vertex(z: &Circuit, g: &Graph, x: Vertex) -> Result<Circuit, TransformError> {
    if g.vertex_count() < 2 {
        return Err(TransformError::TooFewVertices(g.vertex_count()));
    }
    let var = z
        .pool()
        .var(g.name(x))
        .filter(|var| z.scope().contains(var))
        .ok_or_else(|| TransformError::UnknownVertexVar(g.name(x).to_string()))?;
    Ok(condition(z, &PartialAssignment::from_pairs([(var, true)])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{exactly_two, pool_xyz, VarPool};
    use crate::semantics::{equivalent_bruteforce, evaluate, model_count};
    use crate::structure::{linear_vtree_from_order, VariableOrder, VtreeNode, VtreeNodeId};
    use num_bigint::BigUint;

    fn vtree_x_yz() -> Vtree {
        let (_, x, y, z) = pool_xyz();
        linear_vtree_from_order(&VariableOrder::new(vec![x, y, z]).unwrap()).unwrap()
    }

    fn is_decision_only(z: &Circuit) -> bool {
        z.nodes().iter().all(|n| !matches!(n, Node::And { .. }))
    }

    #[test]
    fn linearize_removes_every_and_and_preserves_models() {
        let c = exactly_two();
        let t = vtree_x_yz();
        let (fbdd, trace) = linearize(&c, &t).unwrap();
        assert!(is_decision_only(&fbdd));
        assert!(fbdd.size() <= c.size());
        assert_eq!(trace.size_before, 16);
        assert_eq!(trace.size_after, fbdd.size());
        assert_eq!(fbdd.size(), 10);
        assert!(equivalent_bruteforce(&c, &fbdd, c.scope()).unwrap());
        // One AND had a positive unary side (y ∧ z), the other two were
        // absorbed constants (1 ∧ ·).
        let mut steps = trace.steps.clone();
        steps.sort();
        assert_eq!(
            steps,
            vec![
                (NodeId(4), UnaryKind::Positive),
                (NodeId(6), UnaryKind::ConstOne),
                (NodeId(7), UnaryKind::ConstOne),
            ]
        );
    }

    #[test]
    fn linearize_handles_negative_and_zero_sides() {
        // (¬y ∧ z-circuit) under x, and a 0 ∧ y dead branch.
        let (p, x, y, z) = pool_xyz();
        let nodes = vec![
            Node::Sink(false), // 0
            Node::Sink(true),  // 1
            Node::Decision {
                var: y,
                lo: NodeId(1),
                hi: NodeId(0),
            }, // 2: ¬y
            Node::Decision {
                var: z,
                lo: NodeId(0),
                hi: NodeId(1),
            }, // 3: z
            Node::And {
                left: NodeId(2),
                right: NodeId(3),
            }, // 4: ¬y ∧ z
            Node::Decision {
                var: y,
                lo: NodeId(0),
                hi: NodeId(1),
            }, // 5: y
            Node::And {
                left: NodeId(0),
                right: NodeId(5),
            }, // 6: 0 ∧ y
            Node::Decision {
                var: x,
                lo: NodeId(4),
                hi: NodeId(6),
            }, // 7
        ];
        let c = Circuit::build(p, nodes, NodeId(7), [x, y, z].into_iter().collect()).unwrap();
        let t = vtree_x_yz();
        let (fbdd, trace) = linearize(&c, &t).unwrap();
        assert!(is_decision_only(&fbdd));
        assert!(equivalent_bruteforce(&c, &fbdd, c.scope()).unwrap());
        let mut steps = trace.steps;
        steps.sort();
        assert_eq!(
            steps,
            vec![
                (NodeId(4), UnaryKind::Negative),
                (NodeId(6), UnaryKind::ConstZero)
            ]
        );
    }

    #[test]
    fn linearize_rejects_nonlinear_vtree() {
        let mut p = VarPool::new();
        let vs: Vec<Var> = ["a", "b", "c", "d"].iter().map(|n| p.intern(n)).collect();
        let nodes = vec![
            VtreeNode::Leaf(vs[0]),
            VtreeNode::Leaf(vs[1]),
            VtreeNode::Leaf(vs[2]),
            VtreeNode::Leaf(vs[3]),
            VtreeNode::Internal(VtreeNodeId(0), VtreeNodeId(1)),
            VtreeNode::Internal(VtreeNodeId(2), VtreeNodeId(3)),
            VtreeNode::Internal(VtreeNodeId(4), VtreeNodeId(5)),
        ];
        let t = Vtree::build(nodes, VtreeNodeId(6)).unwrap();
        let scope: BTreeSet<Var> = vs.iter().copied().collect();
        let c = Circuit::constant(p, scope, true);
        assert_eq!(
            linearize(&c, &t).unwrap_err(),
            TransformError::NotLinearVtree
        );
    }

    #[test]
    fn linearize_rejects_unstructured_circuit() {
        // Root decision on y with branches covering x and z does not fit
        // the vtree (x (y z)).
        let (p, x, y, z) = pool_xyz();
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Decision {
                var: x,
                lo: NodeId(0),
                hi: NodeId(1),
            },
            Node::Decision {
                var: z,
                lo: NodeId(0),
                hi: NodeId(2),
            },
            Node::Decision {
                var: y,
                lo: NodeId(3),
                hi: NodeId(1),
            },
        ];
        let c = Circuit::build(p, nodes, NodeId(4), [x, y, z].into_iter().collect()).unwrap();
        assert!(matches!(
            linearize(&c, &vtree_x_yz()),
            Err(TransformError::NotStructured(_))
        ));
    }

    #[test]
    fn linearize_rejects_scope_mismatch() {
        let (p, x, y, _) = pool_xyz();
        let c = Circuit::constant(p, [x, y].into_iter().collect(), true);
        assert!(matches!(
            linearize(&c, &vtree_x_yz()),
            Err(TransformError::ScopeMismatch(_))
        ));
    }

    /// Structured circuit with an AND node and a full decision path:
    /// the x = 0 branch is a plain y-z chain, the x = 1 branch an AND.
    fn structured_with_path() -> Circuit {
        let (p, x, y, z) = pool_xyz();
        let nodes = vec![
            Node::Sink(false), // 0
            Node::Sink(true),  // 1
            Node::Decision {
                var: z,
                lo: NodeId(0),
                hi: NodeId(1),
            }, // 2: z
            Node::Decision {
                var: y,
                lo: NodeId(2),
                hi: NodeId(0),
            }, // 3: ¬y ∧ z
            Node::Decision {
                var: z,
                lo: NodeId(1),
                hi: NodeId(0),
            }, // 4: ¬z
            Node::And {
                left: NodeId(1),
                right: NodeId(4),
            }, // 5: 1 ∧ ¬z
            Node::Decision {
                var: y,
                lo: NodeId(5),
                hi: NodeId(2),
            }, // 6
            Node::Decision {
                var: x,
                lo: NodeId(3),
                hi: NodeId(6),
            }, // 7
        ];
        Circuit::build(p, nodes, NodeId(7), [x, y, z].into_iter().collect()).unwrap()
    }

    #[test]
    fn structured_to_fbdd_follows_a_decision_path() {
        let c = structured_with_path();
        let t = vtree_x_yz();
        assert!(has_decision_path(&c).is_some());
        let (fbdd, _) = structured_to_fbdd(&c, &t).unwrap();
        assert!(is_decision_only(&fbdd));
        assert!(equivalent_bruteforce(&c, &fbdd, c.scope()).unwrap());
    }

    #[test]
    fn structured_to_fbdd_requires_a_decision_path() {
        // Every root-to-sink route of the reference circuit crosses an
        // AND node, so the premise fails.
        assert_eq!(
            structured_to_fbdd(&exactly_two(), &vtree_x_yz()).unwrap_err(),
            TransformError::NoDecisionPath
        );
    }

    /// Decision-only circuit for the edge-guard family of a single edge
    /// (a, b): a=0 demands b, a=1 forbids b.
    fn single_edge_circuit() -> (Circuit, Graph) {
        let mut g = Graph::new();
        let a = g.add_vertex("a");
        let b = g.add_vertex("b");
        g.add_edge(a, b);
        let mut p = VarPool::new();
        let va = p.intern("a");
        let vb = p.intern("b");
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Decision {
                var: vb,
                lo: NodeId(0),
                hi: NodeId(1),
            },
            Node::Decision {
                var: vb,
                lo: NodeId(1),
                hi: NodeId(0),
            },
            Node::Decision {
                var: va,
                lo: NodeId(2),
                hi: NodeId(3),
            },
        ];
        let c = Circuit::build(p, nodes, NodeId(4), [va, vb].into_iter().collect()).unwrap();
        (c, g)
    }

    #[test]
    fn strip_guard_keeps_only_edge_clauses() {
        let (c, g) = single_edge_circuit();
        let stripped = strip_guard_clause(&c, &g).unwrap();
        assert!(is_decision_only(&stripped));
        assert!(stripped.size() <= g.vertex_count() * c.size());
        // The result computes a ∨ b: three models instead of two.
        assert_eq!(
            model_count(&stripped, stripped.scope()).unwrap().count,
            BigUint::from(3u32)
        );
        let a = stripped.pool().var("a").unwrap();
        let b = stripped.pool().var("b").unwrap();
        let all_ones = PartialAssignment::from_pairs([(a, true), (b, true)]);
        assert_eq!(evaluate(&stripped, &all_ones), Ok(true));
        assert_eq!(evaluate(&c, &all_ones), Ok(false));
    }

    #[test]
    fn strip_guard_rejects_and_nodes() {
        let mut g = Graph::new();
        let x = g.add_vertex("x");
        let y = g.add_vertex("y");
        g.add_edge(x, y);
        assert!(matches!(
            strip_guard_clause(&exactly_two(), &g),
            Err(TransformError::HasAndNodes(_))
        ));
    }

    #[test]
    fn strip_guard_needs_matching_variables() {
        let (c, _) = single_edge_circuit();
        let mut h = Graph::new();
        h.add_vertex("w");
        assert!(matches!(
            strip_guard_clause(&c, &h),
            Err(TransformError::UnknownVertexVar(_))
        ));
    }

    #[test]
    fn remove_vertex_conditions_to_the_smaller_family() {
        let (c, g) = single_edge_circuit();
        let removed = remove_vertex(&c, &g, Vertex(0)).unwrap();
        // The family of the remaining single vertex b is ¬b.
        let mut p2 = VarPool::new();
        let b2 = p2.intern("b");
        let not_b = Circuit::build(
            p2,
            vec![
                Node::Sink(false),
                Node::Sink(true),
                Node::Decision {
                    var: b2,
                    lo: NodeId(1),
                    hi: NodeId(0),
                },
            ],
            NodeId(2),
            [b2].into_iter().collect(),
        )
        .unwrap();
        let aligned = not_b.translate(c.pool().clone()).unwrap();
        assert!(equivalent_bruteforce(&removed, &aligned, removed.scope()).unwrap());
    }

    #[test]
    fn remove_vertex_needs_two_vertices() {
        let (c, _) = single_edge_circuit();
        let mut tiny = Graph::new();
        tiny.add_vertex("a");
        assert_eq!(
            remove_vertex(&c, &tiny, Vertex(0)).unwrap_err(),
            TransformError::TooFewVertices(1)
        );
    }

    #[test]
    fn translation_matches_variables_by_name() {
        let c = exactly_two();
        let mut big = VarPool::new();
        big.intern("padding");
        big.intern("z");
        big.intern("y");
        big.intern("x");
        let moved = c.translate(big).unwrap();
        let x = moved.pool().var("x").unwrap();
        let y = moved.pool().var("y").unwrap();
        let z = moved.pool().var("z").unwrap();
        let t = PartialAssignment::from_pairs([(x, false), (y, true), (z, true)]);
        assert_eq!(evaluate(&moved, &t), Ok(true));
        assert!(matches!(
            c.translate(VarPool::new()),
            Err(CircuitError::UnknownVariable(_))
        ));
    }
}
