//! Equivalence relations and congruences on finite algebras.
//!
//! A [`Partition`] is stored as a representative array: `repr[a]` is the
//! least element of `a`'s block, so equality of representatives decides
//! equivalence and the array doubles as a canonical key for ordering and
//! deduplication.

use std::collections::BTreeSet;
use std::fmt;

use crate::algebra::{for_each_tuple, quotient_algebra, Element, FiniteAlgebra, Term};
use crate::error::{Error, Result};

/// Default universe-size bound for congruence-lattice enumeration.
pub const CONGRUENCE_ENUMERATION_BOUND: usize = 12;

/// An equivalence relation on `0..n`, in canonical least-representative form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    repr: Vec<Element>,
}

impl Partition {
    /// The diagonal relation: every block a singleton.
    pub fn identity(n: usize) -> Partition {
        Partition {
            repr: (0..n).collect(),
        }
    }

    /// The full relation: one block.
    pub fn full(n: usize) -> Partition {
        Partition { repr: vec![0; n] }
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<Element>]) -> Result<Partition> {
        let mut repr = vec![usize::MAX; n];
        let mut seen = 0;
        for block in blocks {
            if block.is_empty() {
                return Err(Error::MalformedInput("empty block in partition".into()));
            }
            let least = *block.iter().min().unwrap();
            for &a in block {
                if a >= n {
                    return Err(Error::ElementOutOfRange { element: a, size: n });
                }
                if repr[a] != usize::MAX {
                    return Err(Error::MalformedInput(format!(
                        "element {a} appears in two blocks"
                    )));
                }
                repr[a] = least;
                seen += 1;
            }
        }
        if seen != n {
            return Err(Error::PartitionSizeMismatch { expected: n, got: seen });
        }
        Ok(Partition { repr })
    }

    pub(crate) fn from_union_find(uf: &mut UnionFind) -> Partition {
        let n = uf.len();
        let mut least = vec![usize::MAX; n];
        for a in 0..n {
            let r = uf.find(a);
            if least[r] == usize::MAX {
                least[r] = a;
            }
        }
        let repr = (0..n).map(|a| least[uf.find(a)]).collect();
        Partition { repr }
    }

    pub fn universe_size(&self) -> usize {
        self.repr.len()
    }

    /// Least element of `a`'s block.
    pub fn repr(&self, a: Element) -> Element {
        self.repr[a]
    }

    pub fn same(&self, a: Element, b: Element) -> bool {
        self.repr[a] == self.repr[b]
    }

    /// Blocks ordered by least element, elements sorted within each.
    pub fn blocks(&self) -> Vec<Vec<Element>> {
        let mut blocks: Vec<Vec<Element>> = Vec::new();
        let mut index_of = vec![usize::MAX; self.repr.len()];
        for a in 0..self.repr.len() {
            let r = self.repr[a];
            if index_of[r] == usize::MAX {
                index_of[r] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[index_of[r]].push(a);
        }
        blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.repr
            .iter()
            .enumerate()
            .filter(|&(a, &r)| a == r)
            .count()
    }

    /// Position of `a`'s block in the least-element ordering.
    pub fn block_index_of(&self, a: Element) -> usize {
        let r = self.repr[a];
        self.repr
            .iter()
            .enumerate()
            .filter(|&(b, &rb)| b == rb && rb < r)
            .count()
    }

    /// True iff every block of `self` is contained in a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        debug_assert_eq!(self.repr.len(), other.repr.len());
        (0..self.repr.len()).all(|a| other.same(a, self.repr[a]))
    }

    /// Join of two equivalence relations: transitive closure of the union.
    pub fn join(&self, other: &Partition) -> Partition {
        let n = self.repr.len();
        let mut uf = UnionFind::new(n);
        for a in 0..n {
            uf.union(a, self.repr[a]);
            uf.union(a, other.repr[a]);
        }
        Partition::from_union_find(&mut uf)
    }

    /// Canonical key: the representative array itself.
    pub fn canonical_key(&self) -> &[Element] {
        &self.repr
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks = self.blocks();
        write!(f, "{{")?;
        for (i, block) in blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{")?;
            for (j, a) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Plain union-find with path compression.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn find(&mut self, a: usize) -> usize {
        if self.parent[a] != a {
            let r = self.find(self.parent[a]);
            self.parent[a] = r;
        }
        self.parent[a]
    }

    /// Returns true if the two classes were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        // keep the smaller root so representatives stay least elements
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// True iff `part` is compatible with every basic operation. Replacing a
/// single argument by an equivalent one must preserve the block of the
/// result; transitivity extends this to simultaneous replacement.
pub fn is_congruence(alg: &FiniteAlgebra, part: &Partition) -> Result<bool> {
    Ok(congruence_violation(alg, part)?.is_none())
}

fn congruence_violation(
    alg: &FiniteAlgebra,
    part: &Partition,
) -> Result<Option<(String, Element, Element)>> {
    if part.universe_size() != alg.size() {
        return Err(Error::PartitionSizeMismatch {
            expected: alg.size(),
            got: part.universe_size(),
        });
    }
    let n = alg.size();
    let mut violation = None;
    for (op_idx, (name, arity)) in alg.signature().symbols().iter().enumerate() {
        for_each_tuple(n, *arity, &mut |args| {
            let out = alg.eval_op_idx(op_idx, args);
            let mut probe = args.to_vec();
            for pos in 0..*arity {
                let orig = args[pos];
                for v in 0..n {
                    if v != orig && part.same(v, orig) {
                        probe[pos] = v;
                        let other = alg.eval_op_idx(op_idx, &probe);
                        if !part.same(out, other) {
                            violation = Some((name.clone(), out, other));
                            return false;
                        }
                    }
                }
                probe[pos] = orig;
            }
            true
        });
        if violation.is_some() {
            break;
        }
    }
    Ok(violation)
}

/// Least congruence containing `(a, b)`: merge the pair, then repeatedly
/// merge `f(..u..)` with `f(..v..)` for every equivalent pair `(u, v)`,
/// argument position, and context tuple, until nothing changes.
pub fn principal_congruence(alg: &FiniteAlgebra, a: Element, b: Element) -> Result<Partition> {
    let n = alg.size();
    for &e in &[a, b] {
        if e >= n {
            return Err(Error::ElementOutOfRange { element: e, size: n });
        }
    }
    let mut uf = UnionFind::new(n);
    uf.union(a, b);
    loop {
        let mut changed = false;
        for (op_idx, (_, arity)) in alg.signature().symbols().iter().enumerate() {
            if *arity == 0 {
                continue;
            }
            for u in 0..n {
                for v in (u + 1)..n {
                    if uf.find(u) != uf.find(v) {
                        continue;
                    }
                    for pos in 0..*arity {
                        // context ranges over the remaining arity-1 positions
                        let mut merged = false;
                        for_each_tuple(n, *arity - 1, &mut |ctx| {
                            let mut args_u = Vec::with_capacity(*arity);
                            let mut args_v = Vec::with_capacity(*arity);
                            let mut ci = 0;
                            for p in 0..*arity {
                                if p == pos {
                                    args_u.push(u);
                                    args_v.push(v);
                                } else {
                                    args_u.push(ctx[ci]);
                                    args_v.push(ctx[ci]);
                                    ci += 1;
                                }
                            }
                            let out_u = alg.eval_op_idx(op_idx, &args_u);
                            let out_v = alg.eval_op_idx(op_idx, &args_v);
                            if uf.union(out_u, out_v) {
                                merged = true;
                            }
                            true
                        });
                        if merged {
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Partition::from_union_find(&mut uf))
}

/// The full congruence lattice, by closing the principal congruences under
/// pairwise join. Deterministic order: canonical keys ascending.
pub fn all_congruences(alg: &FiniteAlgebra) -> Result<Vec<Partition>> {
    all_congruences_bounded(alg, CONGRUENCE_ENUMERATION_BOUND)
}

pub fn all_congruences_bounded(alg: &FiniteAlgebra, bound: usize) -> Result<Vec<Partition>> {
    let n = alg.size();
    if n > bound {
        return Err(Error::SizeBoundExceeded { size: n, bound });
    }
    let mut set: BTreeSet<Partition> = BTreeSet::new();
    set.insert(Partition::identity(n));
    for a in 0..n {
        for b in (a + 1)..n {
            set.insert(principal_congruence(alg, a, b)?);
        }
    }
    // close under pairwise join
    loop {
        let current: Vec<Partition> = set.iter().cloned().collect();
        let mut grew = false;
        for i in 0..current.len() {
            for j in (i + 1)..current.len() {
                let joined = current[i].join(&current[j]);
                if set.insert(joined) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    Ok(set.into_iter().collect())
}

/// Congruences strictly below the full relation and maximal in the
/// refinement order. Empty only for one-element algebras.
pub fn maximal_congruences(alg: &FiniteAlgebra) -> Result<Vec<Partition>> {
    maximal_congruences_bounded(alg, CONGRUENCE_ENUMERATION_BOUND)
}

pub fn maximal_congruences_bounded(alg: &FiniteAlgebra, bound: usize) -> Result<Vec<Partition>> {
    let all = all_congruences_bounded(alg, bound)?;
    let full = Partition::full(alg.size());
    let proper: Vec<Partition> = all.into_iter().filter(|p| *p != full).collect();
    Ok(proper
        .iter()
        .filter(|p| {
            !proper
                .iter()
                .any(|q| *p != q && p.refines(q))
        })
        .cloned()
        .collect())
}

/// Why a binary term fails to induce the witness congruence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThetaFailure {
    /// `a·a ≠ a` for some element, so the relation is not reflexive.
    NotReflexive { element: Element },
    /// The relation relates `(a,b)` and `(b,c)` but not `(a,c)`.
    NotTransitive { a: Element, b: Element, c: Element },
    /// The induced equivalence is not compatible with some operation.
    NotCongruence { symbol: String },
    /// `a·b ≠ a` for two elements of a common block.
    BlockNotProjection { a: Element, b: Element },
    /// The induced operation on the quotient violates a 2-semilattice identity.
    QuotientNotTwoSemilattice { identity: String },
}

impl fmt::Display for ThetaFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaFailure::NotReflexive { element } => {
                write!(f, "relation not reflexive at {element} (dot is not idempotent)")
            }
            ThetaFailure::NotTransitive { a, b, c } => {
                write!(f, "relation not transitive: ({a},{b}) and ({b},{c}) but not ({a},{c})")
            }
            ThetaFailure::NotCongruence { symbol } => {
                write!(f, "relation is not a congruence (operation `{symbol}`)")
            }
            ThetaFailure::BlockNotProjection { a, b } => {
                write!(f, "dot is not the first projection inside a block: {a}·{b} ≠ {a}")
            }
            ThetaFailure::QuotientNotTwoSemilattice { identity } => {
                write!(f, "dot is not a 2-semilattice operation on the quotient: {identity} fails")
            }
        }
    }
}

/// Staged analysis shared by [`theta_witness`] and the hypothesis report.
#[derive(Debug, Clone)]
pub struct ThetaAnalysis {
    /// The relation as a partition, if it is an equivalence and a congruence.
    pub partition: std::result::Result<Partition, ThetaFailure>,
    /// Whether dot is the first projection on every block.
    pub block_projection: Option<std::result::Result<(), ThetaFailure>>,
    /// Whether dot is a 2-semilattice operation on the quotient.
    pub quotient_two_semilattice: Option<std::result::Result<(), ThetaFailure>>,
}

pub fn analyze_theta(alg: &FiniteAlgebra, dot: &Term) -> Result<ThetaAnalysis> {
    let n = alg.size();
    // dot value table
    let mut prod = vec![0; n * n];
    for a in 0..n {
        for b in 0..n {
            prod[a * n + b] = alg.eval_term(dot, &[a, b])?;
        }
    }
    let related = |a: Element, b: Element| prod[a * n + b] == a && prod[b * n + a] == b;

    // reflexivity (symmetry holds by the shape of the defining condition)
    for a in 0..n {
        if !related(a, a) {
            return Ok(ThetaAnalysis {
                partition: Err(ThetaFailure::NotReflexive { element: a }),
                block_projection: None,
                quotient_two_semilattice: None,
            });
        }
    }
    // transitivity
    for a in 0..n {
        for b in 0..n {
            if !related(a, b) {
                continue;
            }
            for c in 0..n {
                if related(b, c) && !related(a, c) {
                    return Ok(ThetaAnalysis {
                        partition: Err(ThetaFailure::NotTransitive { a, b, c }),
                        block_projection: None,
                        quotient_two_semilattice: None,
                    });
                }
            }
        }
    }
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in (a + 1)..n {
            if related(a, b) {
                uf.union(a, b);
            }
        }
    }
    let partition = Partition::from_union_find(&mut uf);

    if let Some((symbol, _, _)) = congruence_violation(alg, &partition)? {
        return Ok(ThetaAnalysis {
            partition: Err(ThetaFailure::NotCongruence { symbol }),
            block_projection: None,
            quotient_two_semilattice: None,
        });
    }

    // first projection inside each block
    let mut block_projection = Ok(());
    'blocks: for a in 0..n {
        for b in 0..n {
            if partition.same(a, b) && prod[a * n + b] != a {
                block_projection = Err(ThetaFailure::BlockNotProjection { a, b });
                break 'blocks;
            }
        }
    }

    // 2-semilattice identities on the quotient
    let (qalg, _) = quotient_algebra(alg, &partition)?;
    let quotient_two_semilattice = match qalg.two_semilattice_violation(dot)? {
        None => Ok(()),
        Some(identity) => Err(ThetaFailure::QuotientNotTwoSemilattice {
            identity: identity.to_string(),
        }),
    };

    Ok(ThetaAnalysis {
        partition: Ok(partition),
        block_projection: Some(block_projection),
        quotient_two_semilattice: Some(quotient_two_semilattice),
    })
}

/// The relation `{(a,b) : a·b = a and b·a = b}`, verified to be an
/// equivalence, a congruence, first-projection-like inside each block, and
/// 2-semilattice-like on the quotient. The first violated check is reported.
pub fn theta_witness(alg: &FiniteAlgebra, dot: &Term) -> Result<Partition> {
    let analysis = analyze_theta(alg, dot)?;
    let partition = analysis.partition.map_err(Error::Theta)?;
    if let Some(Err(f)) = analysis.block_projection {
        return Err(Error::Theta(f));
    }
    if let Some(Err(f)) = analysis.quotient_two_semilattice {
        return Err(Error::Theta(f));
    }
    Ok(partition)
}
