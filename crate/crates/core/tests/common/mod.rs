//! Shared generators for the integration suites: random circuits that
//! respect a linear vtree, random order-respecting circuits with
//! decomposable AND nodes, and random or exhaustively enumerated graphs.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use decdnnf_core::circuit::{Circuit, Node, NodeId, Var, VarPool};
use decdnnf_core::instances::Graph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pool with variables `x0 .. x{n-1}`, returned in interning order.
pub fn indexed_pool(n: usize) -> (VarPool, Vec<Var>) {
    let mut pool = VarPool::new();
    let vars = (0..n).map(|i| pool.intern(&format!("x{i}"))).collect();
    (pool, vars)
}

/// Node arena pre-seeded with the two sinks at ids 0 and 1.
pub struct ArenaBuilder {
    nodes: Vec<Node>,
}

impl ArenaBuilder {
    pub fn new() -> Self {
        Self {
            nodes: vec![Node::Sink(false), Node::Sink(true)],
        }
    }

    pub fn sink(&self, value: bool) -> NodeId {
        NodeId(u32::from(value))
    }

    pub fn decision(&mut self, var: Var, lo: NodeId, hi: NodeId) -> NodeId {
        self.nodes.push(Node::Decision { var, lo, hi });
        NodeId(self.nodes.len() as u32 - 1)
    }

    pub fn and(&mut self, left: NodeId, right: NodeId) -> NodeId {
        self.nodes.push(Node::And { left, right });
        NodeId(self.nodes.len() as u32 - 1)
    }

    pub fn finish(self, pool: VarPool, root: NodeId, scope: BTreeSet<Var>) -> Circuit {
        Circuit::build(pool, self.nodes, root, scope).expect("generated circuit is well formed")
    }
}

/// Random decomposable circuit respecting the linear vtree of `order`:
/// every AND pairs a circuit over at most the first remaining variable
/// with a circuit over the later ones, and decision-variable positions
/// strictly increase downward.
pub fn random_structured_circuit(r: &mut ChaCha8Rng, pool: &VarPool, order: &[Var]) -> Circuit {
    fn gen(b: &mut ArenaBuilder, r: &mut ChaCha8Rng, order: &[Var], j: usize) -> NodeId {
        if j >= order.len() || r.gen_bool(0.18) {
            return b.sink(r.gen_bool(0.65));
        }
        // Occasionally skip the next variable entirely.
        let j = if j + 1 < order.len() && r.gen_bool(0.12) {
            j + 1
        } else {
            j
        };
        let x = order[j];
        // A single-leaf vtree admits only variable-free ANDs, so ANDs
        // need at least two variables overall.
        if order.len() >= 2 && r.gen_bool(0.4) {
            // AND of a single-variable side with the rest.
            let unary = match r.gen_range(0..4u8) {
                0 => b.sink(true),
                1 => {
                    let (s0, s1) = (b.sink(false), b.sink(true));
                    b.decision(x, s0, s1) // the literal x
                }
                2 => {
                    let (s0, s1) = (b.sink(false), b.sink(true));
                    b.decision(x, s1, s0) // the literal ¬x
                }
                _ => {
                    let c0 = b.sink(r.gen_bool(0.5));
                    let c1 = b.sink(r.gen_bool(0.5));
                    b.decision(x, c0, c1)
                }
            };
            let rest = gen(b, r, order, j + 1);
            if r.gen_bool(0.5) {
                b.and(unary, rest)
            } else {
                b.and(rest, unary)
            }
        } else {
            let lo = gen(b, r, order, j + 1);
            let hi = gen(b, r, order, j + 1);
            b.decision(x, lo, hi)
        }
    }
    let mut b = ArenaBuilder::new();
    let root = gen(&mut b, r, order, 0);
    b.finish(pool.clone(), root, order.iter().copied().collect())
}

/// Random circuit whose decision variables strictly increase along every
/// path of `order` and whose AND nodes split the remaining variables
/// into two disjoint (possibly interleaved) groups.
pub fn random_ordered_circuit(r: &mut ChaCha8Rng, pool: &VarPool, order: &[Var]) -> Circuit {
    fn gen(b: &mut ArenaBuilder, r: &mut ChaCha8Rng, order: &[Var], avail: &[usize]) -> NodeId {
        if avail.is_empty() || r.gen_bool(0.15) {
            return b.sink(r.gen_bool(0.65));
        }
        if avail.len() >= 2 && r.gen_bool(0.3) {
            // Decomposable AND over a random split of the remaining
            // positions; both sides stay internally increasing.
            let mut left = Vec::new();
            let mut right = Vec::new();
            for &p in avail {
                if r.gen_bool(0.5) {
                    left.push(p);
                } else {
                    right.push(p);
                }
            }
            if left.is_empty() {
                left.push(right.remove(0));
            } else if right.is_empty() {
                right.push(left.remove(0));
            }
            let l = gen(b, r, order, &left);
            let rt = gen(b, r, order, &right);
            return b.and(l, rt);
        }
        // Decide the first remaining position (or occasionally a later
        // one, leaving the skipped variables untested).
        let i = if avail.len() > 1 && r.gen_bool(0.15) {
            1
        } else {
            0
        };
        let lo = gen(b, r, order, &avail[i + 1..]);
        let hi = gen(b, r, order, &avail[i + 1..]);
        b.decision(order[avail[i]], lo, hi)
    }
    let mut b = ArenaBuilder::new();
    let avail: Vec<usize> = (0..order.len()).collect();
    let root = gen(&mut b, r, order, &avail);
    b.finish(pool.clone(), root, order.iter().copied().collect())
}

/// Connected graph on `n` vertices `v0..`: a random spanning tree plus
/// each extra edge independently with probability `extra`.
pub fn random_connected_graph(r: &mut ChaCha8Rng, n: usize, extra: f64) -> Graph {
    let mut g = Graph::new();
    let vs: Vec<_> = (0..n).map(|i| g.add_vertex(&format!("v{i}"))).collect();
    for i in 1..n {
        let j = r.gen_range(0..i);
        g.add_edge(vs[j], vs[i]);
    }
    for i in 0..n {
        for j in i + 1..n {
            if !g.has_edge(vs[i], vs[j]) && r.gen_bool(extra) {
                g.add_edge(vs[i], vs[j]);
            }
        }
    }
    g
}

/// Random graph on `n` vertices with maximum degree at most `dmax`:
/// candidate edges in random order, each kept while both endpoints have
/// spare degree and a coin flip passes.
pub fn random_bounded_degree_graph(r: &mut ChaCha8Rng, n: usize, dmax: usize) -> Graph {
    let mut g = Graph::new();
    let vs: Vec<_> = (0..n).map(|i| g.add_vertex(&format!("v{i}"))).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    pairs.shuffle(r);
    for (i, j) in pairs {
        if g.degree(vs[i]) < dmax && g.degree(vs[j]) < dmax && r.gen_bool(0.6) {
            g.add_edge(vs[i], vs[j]);
        }
    }
    g
}

/// All connected graphs on exactly `n` labelled vertices, one
/// representative per isomorphism class (canonical form = the minimal
/// edge bitmask over all vertex permutations). Feasible for n ≤ 6.
#[allow(clippy::needless_range_loop)] // symmetric matrix fill reads best with indices
pub fn connected_graphs_up_to_iso(n: usize) -> Vec<Graph> {
    assert!(
        (1..=6).contains(&n),
        "exhaustive enumeration is for 1..=6 vertices"
    );
    let mut pairs = Vec::new();
    let mut bitm = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            bitm[i][j] = pairs.len();
            bitm[j][i] = pairs.len();
            pairs.push((i, j));
        }
    }
    let bit = |i: usize, j: usize| -> usize { bitm[i][j] };
    let connected = |mask: u32| -> bool {
        let mut seen = 1u32; // vertex 0
        let mut frontier = vec![0usize];
        while let Some(v) = frontier.pop() {
            for w in 0..n {
                if w != v && seen & (1 << w) == 0 && mask & (1 << bit(v, w)) != 0 {
                    seen |= 1 << w;
                    frontier.push(w);
                }
            }
        }
        seen.count_ones() as usize == n
    };
    let mut perms: Vec<Vec<usize>> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        perms.push(idx.clone());
        // Next lexicographic permutation.
        let Some(k) = (0..n.saturating_sub(1))
            .rev()
            .find(|&k| idx[k] < idx[k + 1])
        else {
            break;
        };
        let l = (k + 1..n).rev().find(|&l| idx[l] > idx[k]).unwrap();
        idx.swap(k, l);
        idx[k + 1..].reverse();
    }
    let canonical = |mask: u32| -> u32 {
        perms
            .iter()
            .map(|p| {
                let mut m = 0u32;
                for (e, &(i, j)) in pairs.iter().enumerate() {
                    if mask & (1 << e) != 0 {
                        m |= 1 << bit(p[i], p[j]);
                    }
                }
                m
            })
            .min()
            .unwrap()
    };
    let mut reps = BTreeSet::new();
    for mask in 0..(1u32 << pairs.len()) {
        if connected(mask) {
            reps.insert(canonical(mask));
        }
    }
    reps.into_iter()
        .map(|mask| {
            let mut g = Graph::new();
            let vs: Vec<_> = (0..n).map(|i| g.add_vertex(&format!("v{i}"))).collect();
            for (e, &(i, j)) in pairs.iter().enumerate() {
                if mask & (1 << e) != 0 {
                    g.add_edge(vs[i], vs[j]);
                }
            }
            g
        })
        .collect()
}
