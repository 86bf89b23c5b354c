//! The dot digraph of a 2-semilattice: an edge `a → b` whenever `a·b = b`.
//!
//! Strongly connected components quasi-ordered by reachability have a unique
//! minimal component, and restriction to it is the first reduction step of
//! the 2-semilattice solver.

use crate::algebra::{
    binary_reduct, subuniverse_closure, Element, ElementSet, FiniteAlgebra, Term,
};
use crate::error::{Error, Result};

/// Default universe-size bound for absorption-freeness enumeration.
pub const ABSORPTION_ENUMERATION_BOUND: usize = 10;

/// The dot digraph over a verified 2-semilattice.
#[derive(Debug, Clone)]
pub struct SemilatticeDigraph {
    adj: Vec<Vec<usize>>,
}

impl SemilatticeDigraph {
    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// DOT-format text, one vertex per element and one edge per arrow.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph semilattice {\n");
        for v in 0..self.adj.len() {
            out.push_str(&format!("  v{v};\n"));
        }
        for (v, succs) in self.adj.iter().enumerate() {
            for &w in succs {
                out.push_str(&format!("  v{v} -> v{w};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Build the dot digraph of `alg`: `a → b` iff `dot(a, b) = b`. The term is
/// verified to be a 2-semilattice operation first.
pub fn build_digraph(alg: &FiniteAlgebra, dot: &Term) -> Result<SemilatticeDigraph> {
    if let Some(identity) = alg.two_semilattice_violation(dot)? {
        return Err(Error::NotTwoSemilattice {
            identity: identity.to_string(),
        });
    }
    let n = alg.size();
    let mut adj = vec![Vec::new(); n];
    for (a, out) in adj.iter_mut().enumerate() {
        for b in 0..n {
            if alg.eval_term(dot, &[a, b])? == b {
                out.push(b);
            }
        }
    }
    Ok(SemilatticeDigraph { adj })
}

/// Strongly connected components plus the quasi-order between them.
/// Components are indexed by their least vertex.
#[derive(Debug, Clone)]
pub struct SccDecomposition {
    component_of: Vec<usize>,
    components: Vec<Vec<usize>>,
    /// Edges `(u, v)` of the component order, meaning component `u` ≥ `v`
    /// (some vertex of `u` points into `v`). Deduplicated and sorted.
    order_edges: Vec<(usize, usize)>,
}

impl SccDecomposition {
    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn order_edges(&self) -> &[(usize, usize)] {
        &self.order_edges
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Components with no order-edge to another component: the minimal ones.
    pub fn minimal_components(&self) -> Vec<usize> {
        (0..self.components.len())
            .filter(|&c| self.order_edges.iter().all(|&(u, _)| u != c))
            .collect()
    }
}

/// Kosaraju-style SCC over an adjacency list.
pub(crate) fn scc_of_adjacency(adj: &[Vec<usize>]) -> SccDecomposition {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    // iterative post-order
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut rev = vec![Vec::new(); n];
    for (v, succs) in adj.iter().enumerate() {
        for &w in succs {
            rev[w].push(v);
        }
    }
    let mut component_of = vec![usize::MAX; n];
    let mut raw_components: Vec<Vec<usize>> = Vec::new();
    for &start in order.iter().rev() {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = raw_components.len();
        let mut members = vec![start];
        component_of[start] = id;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &rev[v] {
                if component_of[w] == usize::MAX {
                    component_of[w] = id;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        raw_components.push(members);
    }
    // re-index components by least vertex for determinism
    let mut perm: Vec<usize> = (0..raw_components.len()).collect();
    perm.sort_by_key(|&c| raw_components[c][0]);
    let mut new_id = vec![0; raw_components.len()];
    for (fresh, &old) in perm.iter().enumerate() {
        new_id[old] = fresh;
    }
    let mut components = vec![Vec::new(); raw_components.len()];
    for (old, members) in raw_components.into_iter().enumerate() {
        components[new_id[old]] = members;
    }
    for c in component_of.iter_mut() {
        *c = new_id[*c];
    }
    let mut order_edges: Vec<(usize, usize)> = Vec::new();
    for (v, succs) in adj.iter().enumerate() {
        for &w in succs {
            let (cu, cv) = (component_of[v], component_of[w]);
            if cu != cv {
                order_edges.push((cu, cv));
            }
        }
    }
    order_edges.sort_unstable();
    order_edges.dedup();
    SccDecomposition {
        component_of,
        components,
        order_edges,
    }
}

pub fn scc(dg: &SemilatticeDigraph) -> SccDecomposition {
    scc_of_adjacency(&dg.adj)
}

pub fn is_strongly_connected(dg: &SemilatticeDigraph) -> bool {
    scc(dg).num_components() == 1
}

/// The unique minimal component of the dot digraph, cross-checked against
/// the reachability characterization: a vertex belongs to it iff there is a
/// directed walk to it from every vertex.
pub fn minimal_component(dg: &SemilatticeDigraph) -> Result<ElementSet> {
    let dec = scc(dg);
    let minimal = dec.minimal_components();
    if minimal.len() != 1 {
        return Err(Error::InternalInconsistency(format!(
            "{} minimal components; the digraph did not come from a 2-semilattice",
            minimal.len()
        )));
    }
    let comp = dec.components()[minimal[0]].clone();
    // reachable-from-everywhere cross-check
    let n = dg.num_vertices();
    let mut reach_count = vec![0usize; n];
    for start in 0..n {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in dg.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        for v in 0..n {
            if seen[v] {
                reach_count[v] += 1;
            }
        }
    }
    let universally_reachable: Vec<usize> = (0..n).filter(|&v| reach_count[v] == n).collect();
    if universally_reachable != comp {
        return Err(Error::InternalInconsistency(
            "minimal component disagrees with the reachability characterization".into(),
        ));
    }
    Ok(comp)
}

/// True iff no proper nonempty subuniverse `B` absorbs under `dot`
/// (`B·A ⊆ B` and `A·B ⊆ B`). Subuniverses are enumerated by closing every
/// subset, so the universe size is bounded.
pub fn check_binary_absorption_free(alg: &FiniteAlgebra, dot: &Term) -> Result<bool> {
    check_binary_absorption_free_bounded(alg, dot, ABSORPTION_ENUMERATION_BOUND)
}

pub fn check_binary_absorption_free_bounded(
    alg: &FiniteAlgebra,
    dot: &Term,
    bound: usize,
) -> Result<bool> {
    let n = alg.size();
    if n > bound {
        return Err(Error::SizeBoundExceeded { size: n, bound });
    }
    let reduct = binary_reduct(alg, dot, "dot")?;
    let mut seen = std::collections::BTreeSet::new();
    for mask in 1u64..(1 << n) {
        let seed: Vec<Element> = (0..n).filter(|&a| mask & (1 << a) != 0).collect();
        let sub = subuniverse_closure(alg, &seed)?;
        if sub.len() == n || !seen.insert(sub.clone()) {
            continue;
        }
        let absorbs = sub.iter().all(|&b| {
            (0..n).all(|a| {
                let ba = reduct.eval_op_idx(0, &[b, a]);
                let ab = reduct.eval_op_idx(0, &[a, b]);
                sub.binary_search(&ba).is_ok() && sub.binary_search(&ab).is_ok()
            })
        });
        if absorbs {
            return Ok(false);
        }
    }
    Ok(true)
}
