//! Finite algebras as operation tables.
//!
//! Universes are dense index ranges `0..n`; named elements live only in the
//! I/O layer. An operation table for a k-ary symbol is stored row-major with
//! the most significant argument first, so the entry for `(a_0, ..., a_{k-1})`
//! sits at `a_0 * n^(k-1) + a_1 * n^(k-2) + ... + a_{k-1}`.
//!
//! Alongside the core evaluation/identity machinery this module provides the
//! constructions used everywhere else: products, subuniverse closure,
//! quotients, restrictions, and the derivation of a binary term from an edge
//! term.

use crate::error::{Error, Result};

/// An element of a finite universe `0..n`.
pub type Element = usize;

/// A sorted, duplicate-free subset of a universe.
pub type ElementSet = Vec<Element>;

/// Sort and deduplicate a set of elements.
pub fn normalize_set(mut set: Vec<Element>) -> ElementSet {
    set.sort_unstable();
    set.dedup();
    set
}

/// An ordered list of operation symbols with arities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    symbols: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(symbols: Vec<(String, usize)>) -> Result<Self> {
        for (i, (name, _)) in symbols.iter().enumerate() {
            if symbols[..i].iter().any(|(other, _)| other == name) {
                return Err(Error::DuplicateSymbol(name.clone()));
            }
        }
        Ok(Signature { symbols })
    }

    pub fn symbols(&self) -> &[(String, usize)] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|(s, _)| s == name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.symbols
            .iter()
            .find(|(s, _)| s == name)
            .map(|&(_, k)| k)
    }
}

/// An operation given as a closure: name, arity, and the function to
/// tabulate.
pub type OpFn<'a> = (&'a str, usize, &'a dyn Fn(&[Element]) -> Element);

/// A finite algebra: a universe `0..size` and one full operation table per
/// signature symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAlgebra {
    size: usize,
    signature: Signature,
    tables: Vec<Vec<Element>>,
}

impl FiniteAlgebra {
    pub fn new(size: usize, signature: Signature, tables: Vec<Vec<Element>>) -> Result<Self> {
        if size == 0 {
            return Err(Error::MalformedInput("universe must be nonempty".into()));
        }
        if tables.len() != signature.len() {
            return Err(Error::MalformedInput(format!(
                "{} tables for {} symbols",
                tables.len(),
                signature.len()
            )));
        }
        for ((name, arity), table) in signature.symbols().iter().zip(&tables) {
            let expected = size.pow(*arity as u32);
            if table.len() != expected {
                return Err(Error::TableSizeMismatch {
                    symbol: name.clone(),
                    expected,
                    got: table.len(),
                });
            }
            for &entry in table {
                if entry >= size {
                    return Err(Error::ElementOutOfRange {
                        element: entry,
                        size,
                    });
                }
            }
        }
        Ok(FiniteAlgebra {
            size,
            signature,
            tables,
        })
    }

    /// Convenience constructor from `(name, arity, table)` triples.
    pub fn from_ops(size: usize, ops: Vec<(&str, usize, Vec<Element>)>) -> Result<Self> {
        let signature = Signature::new(
            ops.iter()
                .map(|(name, arity, _)| (name.to_string(), *arity))
                .collect(),
        )?;
        let tables = ops.into_iter().map(|(_, _, table)| table).collect();
        FiniteAlgebra::new(size, signature, tables)
    }

    /// Build an algebra by tabulating closures.
    pub fn from_fns(size: usize, ops: Vec<OpFn<'_>>) -> Result<Self> {
        let mut triples = Vec::new();
        for (name, arity, f) in ops {
            let mut table = Vec::with_capacity(size.pow(arity as u32));
            for_each_tuple(size, arity, &mut |args| {
                table.push(f(args));
                true
            });
            triples.push((name, arity, table));
        }
        FiniteAlgebra::from_ops(size, triples)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn table(&self, symbol: &str) -> Option<&[Element]> {
        self.signature.index_of(symbol).map(|i| &self.tables[i][..])
    }

    /// Table lookup for a basic operation.
    pub fn eval_op(&self, symbol: &str, args: &[Element]) -> Result<Element> {
        let idx = self
            .signature
            .index_of(symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))?;
        let arity = self.signature.symbols()[idx].1;
        if args.len() != arity {
            return Err(Error::ArityMismatch {
                symbol: symbol.to_string(),
                expected: arity,
                got: args.len(),
            });
        }
        for &a in args {
            if a >= self.size {
                return Err(Error::ElementOutOfRange {
                    element: a,
                    size: self.size,
                });
            }
        }
        Ok(self.eval_op_idx(idx, args))
    }

    /// Table lookup by symbol index; arguments must already be in range.
    pub(crate) fn eval_op_idx(&self, op_index: usize, args: &[Element]) -> Element {
        let mut pos = 0;
        for &a in args {
            pos = pos * self.size + a;
        }
        self.tables[op_index][pos]
    }

    /// Evaluate a term under an assignment; `Var(i)` reads `assignment[i]`.
    pub fn eval_term(&self, term: &Term, assignment: &[Element]) -> Result<Element> {
        for &a in assignment {
            if a >= self.size {
                return Err(Error::ElementOutOfRange {
                    element: a,
                    size: self.size,
                });
            }
        }
        self.eval_term_inner(term, assignment)
    }

    fn eval_term_inner(&self, term: &Term, assignment: &[Element]) -> Result<Element> {
        match term {
            Term::Var(i) => assignment.get(*i).copied().ok_or(Error::VariableOutOfRange {
                index: *i,
                var_count: assignment.len(),
            }),
            Term::App(symbol, children) => {
                let idx = self
                    .signature
                    .index_of(symbol)
                    .ok_or_else(|| Error::UnknownSymbol(symbol.clone()))?;
                let arity = self.signature.symbols()[idx].1;
                if children.len() != arity {
                    return Err(Error::ArityMismatch {
                        symbol: symbol.clone(),
                        expected: arity,
                        got: children.len(),
                    });
                }
                let mut args = Vec::with_capacity(children.len());
                for child in children {
                    args.push(self.eval_term_inner(child, assignment)?);
                }
                Ok(self.eval_op_idx(idx, &args))
            }
        }
    }

    /// Exhaustively decide whether `lhs ≈ rhs` over all `size^var_count`
    /// assignments. Keep `var_count` small; the identities used here never
    /// need more than three variables.
    pub fn check_identity(&self, lhs: &Term, rhs: &Term, var_count: usize) -> Result<bool> {
        self.find_identity_witness(lhs, rhs, var_count)
            .map(|w| w.is_none())
    }

    /// Like [`check_identity`](Self::check_identity) but returns the first
    /// assignment on which the two sides differ.
    pub fn find_identity_witness(
        &self,
        lhs: &Term,
        rhs: &Term,
        var_count: usize,
    ) -> Result<Option<Vec<Element>>> {
        let mut witness = None;
        let mut first_err = None;
        for_each_tuple(self.size, var_count, &mut |asg| {
            match (self.eval_term_inner(lhs, asg), self.eval_term_inner(rhs, asg)) {
                (Ok(l), Ok(r)) => {
                    if l != r {
                        witness = Some(asg.to_vec());
                        false
                    } else {
                        true
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    first_err = Some(e);
                    false
                }
            }
        });
        if let Some(e) = first_err {
            return Err(e);
        }
        Ok(witness)
    }

    /// True iff every basic operation maps constant tuples to the constant.
    pub fn is_idempotent(&self) -> bool {
        for (idx, (_, arity)) in self.signature.symbols().iter().enumerate() {
            let mut args = Vec::with_capacity(*arity);
            for a in 0..self.size {
                args.clear();
                args.resize(*arity, a);
                if self.eval_op_idx(idx, &args) != a {
                    return false;
                }
            }
        }
        true
    }

    /// True iff `dot` is idempotent, commutative and satisfies
    /// `x·(x·y) ≈ x·y` on this algebra.
    pub fn is_two_semilattice(&self, dot: &Term) -> Result<bool> {
        Ok(self.two_semilattice_violation(dot)?.is_none())
    }

    /// Name of the first 2-semilattice identity `dot` violates, if any.
    pub fn two_semilattice_violation(&self, dot: &Term) -> Result<Option<&'static str>> {
        require_binary(dot)?;
        let x = Term::var(0);
        let y = Term::var(1);
        // x·x ≈ x
        let xx = dot.substitute(&[x.clone(), x.clone()]);
        if !self.check_identity(&xx, &x, 1)? {
            return Ok(Some("x·x ≈ x"));
        }
        // x·y ≈ y·x
        let yx = dot.substitute(&[y.clone(), x.clone()]);
        if !self.check_identity(dot, &yx, 2)? {
            return Ok(Some("x·y ≈ y·x"));
        }
        // x·(x·y) ≈ x·y
        let nested = dot.substitute(&[x, dot.clone()]);
        if !self.check_identity(&nested, dot, 2)? {
            return Ok(Some("x·(x·y) ≈ x·y"));
        }
        Ok(None)
    }

    /// True iff the value of `term` can change when only variable `k` changes.
    pub fn depends_on(&self, term: &Term, var_count: usize, k: usize) -> Result<bool> {
        if k >= var_count {
            return Err(Error::VariableOutOfRange {
                index: k,
                var_count,
            });
        }
        let mut depends = false;
        let mut first_err = None;
        for_each_tuple(self.size, var_count, &mut |asg| {
            let base = match self.eval_term_inner(term, asg) {
                Ok(v) => v,
                Err(e) => {
                    first_err = Some(e);
                    return false;
                }
            };
            let mut probe = asg.to_vec();
            for v in 0..self.size {
                probe[k] = v;
                match self.eval_term_inner(term, &probe) {
                    Ok(other) if other != base => {
                        depends = true;
                        return false;
                    }
                    Ok(_) => {}
                    Err(e) => {
                        first_err = Some(e);
                        return false;
                    }
                }
            }
            true
        });
        if let Some(e) = first_err {
            return Err(e);
        }
        Ok(depends)
    }

    /// Dependency set of a term: all variable indices it depends on.
    pub fn dependency_set(&self, term: &Term, var_count: usize) -> Result<Vec<usize>> {
        (0..var_count)
            .filter_map(|k| match self.depends_on(term, var_count, k) {
                Ok(true) => Some(Ok(k)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            })
            .collect()
    }

    /// True iff `e` is a k-edge operation here: it satisfies every identity
    /// in the edge system (`e(y,y,x,...,x) ≈ x`, `e(y,x,y,x,...,x) ≈ x`, and
    /// `e(x,..,x,y,x,..,x) ≈ x` with `y` alone in each position from the
    /// fourth on).
    pub fn is_edge_operation(&self, e: &Term, k: usize) -> Result<bool> {
        if k < 2 {
            return Err(Error::MalformedInput("edge operations need k >= 2".into()));
        }
        require_arity(e, k + 1)?;
        let x = Term::var(0);
        for row in edge_identity_rows(k) {
            let args: Vec<Term> = (0..k + 1)
                .map(|p| if row.contains(&p) { Term::var(1) } else { Term::var(0) })
                .collect();
            let lhs = e.substitute(&args);
            if !self.check_identity(&lhs, &x, 2)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn require_binary(term: &Term) -> Result<()> {
    require_arity(term, 2)
}

fn require_arity(term: &Term, arity: usize) -> Result<()> {
    match term.max_var() {
        Some(m) if m >= arity => Err(Error::TermArityMismatch {
            expected: arity,
            offending: m,
        }),
        _ => Ok(()),
    }
}

/// The y-position sets of the k-edge identity system, 0-based.
///
/// Row 0 puts y in positions {0,1}, row 1 in {0,2}, and each later row in a
/// single position from 3 up to k.
pub fn edge_identity_rows(k: usize) -> Vec<Vec<usize>> {
    let mut rows = vec![vec![0, 1], vec![0, 2]];
    for p in 3..=k {
        rows.push(vec![p]);
    }
    rows
}

/// A term over a signature: a variable or a symbol applied to subterms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }

    pub fn app(symbol: &str, args: Vec<Term>) -> Term {
        Term::App(symbol.to_string(), args)
    }

    /// Largest variable index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Term::Var(i) => Some(*i),
            Term::App(_, children) => children.iter().filter_map(Term::max_var).max(),
        }
    }

    /// Replace `Var(i)` by `subs[i]` throughout. Every mentioned variable
    /// must have a replacement.
    pub fn substitute(&self, subs: &[Term]) -> Term {
        match self {
            Term::Var(i) => subs
                .get(*i)
                .cloned()
                .unwrap_or_else(|| panic!("no substitution for variable x{i}")),
            Term::App(symbol, children) => Term::App(
                symbol.clone(),
                children.iter().map(|c| c.substitute(subs)).collect(),
            ),
        }
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Term::Var(i) => write!(f, "x{i}"),
            Term::App(symbol, children) => {
                write!(f, "{symbol}(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Call `f` on every length-`k` tuple over `0..n` in lexicographic order,
/// reusing one buffer. `f` returns false to stop early.
pub(crate) fn for_each_tuple(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    let mut tuple = vec![0usize; k];
    if k == 0 {
        f(&tuple);
        return;
    }
    if n == 0 {
        return;
    }
    loop {
        if !f(&tuple) {
            return;
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

/// Translates between tuples of factor elements and flat product elements.
/// The first factor is most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCodec {
    sizes: Vec<usize>,
}

impl ProductCodec {
    pub fn arity(&self) -> usize {
        self.sizes.len()
    }

    pub fn encode(&self, tuple: &[Element]) -> Element {
        assert_eq!(tuple.len(), self.sizes.len());
        let mut idx = 0;
        for (&t, &s) in tuple.iter().zip(&self.sizes) {
            debug_assert!(t < s);
            idx = idx * s + t;
        }
        idx
    }

    pub fn decode(&self, mut element: Element) -> Vec<Element> {
        let mut tuple = vec![0; self.sizes.len()];
        for i in (0..self.sizes.len()).rev() {
            tuple[i] = element % self.sizes[i];
            element /= self.sizes[i];
        }
        tuple
    }
}

/// Direct product of similar algebras, with the tuple/element codec.
pub fn product_algebra(algs: &[&FiniteAlgebra]) -> Result<(FiniteAlgebra, ProductCodec)> {
    let first = *algs.first().ok_or(Error::EmptyProduct)?;
    for alg in &algs[1..] {
        if alg.signature() != first.signature() {
            return Err(Error::SignatureMismatch);
        }
    }
    let sizes: Vec<usize> = algs.iter().map(|a| a.size()).collect();
    let codec = ProductCodec { sizes };
    let total: usize = algs.iter().map(|a| a.size()).product();

    let mut tables = Vec::with_capacity(first.signature().len());
    for (op_idx, (_, arity)) in first.signature().symbols().iter().enumerate() {
        let mut table = Vec::with_capacity(total.pow(*arity as u32));
        for_each_tuple(total, *arity, &mut |args| {
            let decoded: Vec<Vec<Element>> = args.iter().map(|&a| codec.decode(a)).collect();
            let mut out = Vec::with_capacity(algs.len());
            for (u, alg) in algs.iter().enumerate() {
                let comp_args: Vec<Element> = decoded.iter().map(|t| t[u]).collect();
                out.push(alg.eval_op_idx(op_idx, &comp_args));
            }
            table.push(codec.encode(&out));
            true
        });
        tables.push(table);
    }
    let alg = FiniteAlgebra::new(total, first.signature().clone(), tables)?;
    Ok((alg, codec))
}

/// Least subuniverse containing `seed`, by worklist closure under every
/// basic operation.
pub fn subuniverse_closure(alg: &FiniteAlgebra, seed: &[Element]) -> Result<ElementSet> {
    for &a in seed {
        if a >= alg.size() {
            return Err(Error::ElementOutOfRange {
                element: a,
                size: alg.size(),
            });
        }
    }
    let mut member = vec![false; alg.size()];
    for &a in seed {
        member[a] = true;
    }
    loop {
        let current: Vec<Element> = (0..alg.size()).filter(|&a| member[a]).collect();
        let mut grew = false;
        for (op_idx, (_, arity)) in alg.signature().symbols().iter().enumerate() {
            for_each_tuple(current.len(), *arity, &mut |idxs| {
                let args: Vec<Element> = idxs.iter().map(|&i| current[i]).collect();
                let out = alg.eval_op_idx(op_idx, &args);
                if !member[out] {
                    member[out] = true;
                    grew = true;
                }
                true
            });
        }
        if !grew {
            break;
        }
    }
    Ok((0..alg.size()).filter(|&a| member[a]).collect())
}

/// True iff `sub` is closed under every basic operation.
pub fn is_subuniverse(alg: &FiniteAlgebra, sub: &[Element]) -> bool {
    closure_violation(alg, sub).is_none()
}

fn closure_violation(alg: &FiniteAlgebra, sub: &[Element]) -> Option<(String, Element)> {
    let mut violation = None;
    for (op_idx, (name, arity)) in alg.signature().symbols().iter().enumerate() {
        for_each_tuple(sub.len(), *arity, &mut |idxs| {
            let args: Vec<Element> = idxs.iter().map(|&i| sub[i]).collect();
            let out = alg.eval_op_idx(op_idx, &args);
            if sub.binary_search(&out).is_err() {
                violation = Some((name.clone(), out));
                false
            } else {
                true
            }
        });
        if violation.is_some() {
            break;
        }
    }
    violation
}

/// Maps between blocks of a quotient and elements of the original algebra.
/// Blocks are indexed in order of their least element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientCodec {
    block_of: Vec<usize>,
    blocks: Vec<Vec<Element>>,
}

impl QuotientCodec {
    pub fn block_of(&self, element: Element) -> usize {
        self.block_of[element]
    }

    pub fn blocks(&self) -> &[Vec<Element>] {
        &self.blocks
    }

    /// Least element of the given block.
    pub fn representative(&self, block: usize) -> Element {
        self.blocks[block][0]
    }
}

/// Quotient by a congruence. The construction audits well-definedness: it
/// fails with [`Error::NotACongruence`] if two equivalent tuples map to
/// inequivalent results, so callers do not have to be trusted.
pub fn quotient_algebra(
    alg: &FiniteAlgebra,
    cong: &crate::congruence::Partition,
) -> Result<(FiniteAlgebra, QuotientCodec)> {
    if cong.universe_size() != alg.size() {
        return Err(Error::PartitionSizeMismatch {
            expected: alg.size(),
            got: cong.universe_size(),
        });
    }
    let blocks = cong.blocks();
    let block_of: Vec<usize> = (0..alg.size()).map(|a| cong.block_index_of(a)).collect();
    let codec = QuotientCodec { block_of, blocks };
    let nblocks = codec.blocks.len();

    let mut tables = Vec::with_capacity(alg.signature().len());
    for (op_idx, (name, arity)) in alg.signature().symbols().iter().enumerate() {
        let mut table = vec![usize::MAX; nblocks.pow(*arity as u32)];
        // Fill from representatives, then audit every tuple against its
        // representative tuple. Transitivity makes the audit complete.
        let mut flat = 0usize;
        for_each_tuple(nblocks, *arity, &mut |blks| {
            let reps: Vec<Element> = blks.iter().map(|&b| codec.representative(b)).collect();
            table[flat] = codec.block_of[alg.eval_op_idx(op_idx, &reps)];
            flat += 1;
            true
        });
        let mut audit_failure = None;
        for_each_tuple(alg.size(), *arity, &mut |args| {
            let mut pos = 0;
            for &a in args {
                pos = pos * nblocks + codec.block_of[a];
            }
            let got = codec.block_of[alg.eval_op_idx(op_idx, args)];
            if got != table[pos] {
                audit_failure = Some(Error::NotACongruence {
                    symbol: name.clone(),
                    lhs: codec.representative(table[pos]),
                    rhs: codec.representative(got),
                });
                false
            } else {
                true
            }
        });
        if let Some(e) = audit_failure {
            return Err(e);
        }
        tables.push(table);
    }
    let qalg = FiniteAlgebra::new(nblocks, alg.signature().clone(), tables)?;
    Ok((qalg, codec))
}

/// Maps between elements of a restricted algebra and the original universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubCodec {
    members: Vec<Element>,
}

impl SubCodec {
    pub fn members(&self) -> &[Element] {
        &self.members
    }

    /// Original element for a local index.
    pub fn to_global(&self, local: Element) -> Element {
        self.members[local]
    }

    pub fn to_local(&self, global: Element) -> Option<Element> {
        self.members.binary_search(&global).ok()
    }
}

/// Induced algebra on a subuniverse, re-indexed to `0..|sub|`. Closure is
/// verified and [`Error::NotClosed`] names the escaping value.
pub fn restrict_to_subuniverse(
    alg: &FiniteAlgebra,
    sub: &[Element],
) -> Result<(FiniteAlgebra, SubCodec)> {
    let members = normalize_set(sub.to_vec());
    if members.is_empty() {
        return Err(Error::MalformedInput("cannot restrict to the empty set".into()));
    }
    for &a in &members {
        if a >= alg.size() {
            return Err(Error::ElementOutOfRange {
                element: a,
                size: alg.size(),
            });
        }
    }
    if let Some((symbol, result)) = closure_violation(alg, &members) {
        return Err(Error::NotClosed { symbol, result });
    }
    let codec = SubCodec { members };
    let m = codec.members.len();
    let mut tables = Vec::with_capacity(alg.signature().len());
    for (op_idx, (_, arity)) in alg.signature().symbols().iter().enumerate() {
        let mut table = Vec::with_capacity(m.pow(*arity as u32));
        for_each_tuple(m, *arity, &mut |idxs| {
            let args: Vec<Element> = idxs.iter().map(|&i| codec.members[i]).collect();
            let out = alg.eval_op_idx(op_idx, &args);
            table.push(codec.to_local(out).expect("closure was verified"));
            true
        });
        tables.push(table);
    }
    let ralg = FiniteAlgebra::new(m, alg.signature().clone(), tables)?;
    Ok((ralg, codec))
}

/// Tabulate a binary term as a fresh single-operation algebra on the same
/// universe. The new symbol is named `symbol`.
pub fn binary_reduct(alg: &FiniteAlgebra, dot: &Term, symbol: &str) -> Result<FiniteAlgebra> {
    require_binary(dot)?;
    let n = alg.size();
    let mut table = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            table.push(alg.eval_term(dot, &[a, b])?);
        }
    }
    FiniteAlgebra::from_ops(n, vec![(symbol, 2, table)])
}

/// Derive a binary term from an edge term `e` and a binary term `star`,
/// following the dependency-set case split. `dep_set` holds the 0-based
/// argument positions `e` depends on, computed on a designated algebra
/// standing in for the 2-semilattice side (the caller supplies it).
///
/// `fallback_identity_row`, when given, overrides the edge-identity row used
/// in the multi-dependency case; it is an index into
/// [`edge_identity_rows`]`(k)` and must put `y` on at least one dependency
/// position and `x` on another.
pub fn derive_dot_term(
    e: &Term,
    k: usize,
    star: &Term,
    dep_set: &[usize],
    fallback_identity_row: Option<usize>,
) -> Result<Term> {
    if k < 2 {
        return Err(Error::MalformedInput("edge terms need k >= 2".into()));
    }
    require_arity(e, k + 1)?;
    require_binary(star)?;
    let deps = normalize_set(dep_set.to_vec());
    if let Some(&m) = deps.last() {
        if m > k {
            return Err(Error::VariableOutOfRange {
                index: m,
                var_count: k + 1,
            });
        }
    }
    let x = Term::var(0);
    let star_xy = star.clone();

    let subset_of = |allowed: &[usize]| deps.iter().all(|d| allowed.contains(d));

    // star in the given positions, x elsewhere
    let star_at = |positions: &[usize]| -> Term {
        let args: Vec<Term> = (0..k + 1)
            .map(|p| {
                if positions.contains(&p) {
                    star_xy.clone()
                } else {
                    x.clone()
                }
            })
            .collect();
        e.substitute(&args)
    };

    if subset_of(&[0, 1]) {
        return Ok(star_at(&[0, 1]));
    }
    if subset_of(&[0, 2]) {
        return Ok(star_at(&[0, 2]));
    }
    if deps.len() == 1 && deps[0] >= 3 {
        return Ok(star_at(&[deps[0]]));
    }
    if deps.len() >= 2 {
        let rows = edge_identity_rows(k);
        let row_idx = match fallback_identity_row {
            Some(r) => {
                if r >= rows.len() {
                    return Err(Error::NoApplicableCase(format!(
                        "identity row {r} out of range (the system has {} rows)",
                        rows.len()
                    )));
                }
                r
            }
            None => {
                // Second-smallest dependency position selects the row: it is
                // a y-position there while some other dependency carries x.
                let j = deps[1];
                match j {
                    1 => 0,
                    2 => 1,
                    _ => j - 1,
                }
            }
        };
        let y_positions = &rows[row_idx];
        let hits_y = deps.iter().any(|d| y_positions.contains(d));
        let hits_x = deps.iter().any(|d| !y_positions.contains(d));
        if !hits_y || !hits_x {
            return Err(Error::NoApplicableCase(format!(
                "identity row {row_idx} does not separate the dependency set {deps:?}"
            )));
        }
        let args: Vec<Term> = (0..k + 1)
            .map(|p| {
                if y_positions.contains(&p) {
                    Term::var(1)
                } else {
                    Term::var(0)
                }
            })
            .collect();
        return Ok(e.substitute(&args));
    }
    Err(Error::NoApplicableCase(format!(
        "dependency set {deps:?} matches no derivation case"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn meet() -> FiniteAlgebra {
        fixtures::meet_two()
    }

    fn d9() -> FiniteAlgebra {
        fixtures::counterexample_algebra()
    }

    fn q_term(a: Term, b: Term, c: Term) -> Term {
        Term::app("q", vec![a, b, c])
    }

    #[test]
    fn eval_op_meet() {
        let alg = meet();
        assert_eq!(alg.eval_op("meet", &[1, 0]).unwrap(), 0);
        assert_eq!(alg.eval_op("meet", &[1, 1]).unwrap(), 1);
    }

    #[test]
    fn eval_op_counterexample_sum() {
        // (0,1) + (1,0) + (1,1) = (0,0)
        assert_eq!(d9().eval_op("q", &[2, 3, 4]).unwrap(), 1);
    }

    #[test]
    fn eval_op_errors_are_distinct() {
        let alg = meet();
        assert!(matches!(
            alg.eval_op("join", &[0, 0]),
            Err(Error::UnknownSymbol(_))
        ));
        assert!(matches!(
            alg.eval_op("meet", &[0]),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            alg.eval_op("meet", &[0, 5]),
            Err(Error::ElementOutOfRange { .. })
        ));
    }

    #[test]
    fn eval_term_projection_and_nesting() {
        let alg = meet();
        assert_eq!(alg.eval_term(&Term::var(0), &[1]).unwrap(), 1);
        // x0 ∧ (x1 ∧ x0) at (1,0)
        let t = Term::app(
            "meet",
            vec![Term::var(0), Term::app("meet", vec![Term::var(1), Term::var(0)])],
        );
        assert_eq!(alg.eval_term(&t, &[1, 0]).unwrap(), 0);
    }

    #[test]
    fn eval_term_counterexample_dot() {
        // q(x0,x1,x1) at (⊤, (0,1)) picks the first projective argument
        let dot = q_term(Term::var(0), Term::var(1), Term::var(1));
        assert_eq!(d9().eval_term(&dot, &[0, 2]).unwrap(), 2);
    }

    #[test]
    fn eval_term_variable_out_of_range() {
        let alg = meet();
        assert!(matches!(
            alg.eval_term(&Term::var(1), &[0]),
            Err(Error::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn identities_on_meet_and_counterexample() {
        let alg = meet();
        let comm_lhs = Term::app("meet", vec![Term::var(0), Term::var(1)]);
        let comm_rhs = Term::app("meet", vec![Term::var(1), Term::var(0)]);
        assert!(alg.check_identity(&comm_lhs, &comm_rhs, 2).unwrap());

        // x·y with x·y := q(x,y,y) is not commutative on the counterexample
        let d = d9();
        let dot = q_term(Term::var(0), Term::var(1), Term::var(1));
        let tod = q_term(Term::var(1), Term::var(0), Term::var(0));
        assert!(!d.check_identity(&dot, &tod, 2).unwrap());
        let w = d.find_identity_witness(&dot, &tod, 2).unwrap().unwrap();
        let l = d.eval_term(&dot, &w).unwrap();
        let r = d.eval_term(&tod, &w).unwrap();
        assert_ne!(l, r);

        // q(x,y,y) ≈ q(y,x,y) holds on all of D: in every mixed case both
        // sides pick the same group argument
        let lhs = q_term(Term::var(0), Term::var(1), Term::var(1));
        let rhs = q_term(Term::var(1), Term::var(0), Term::var(1));
        assert!(d.check_identity(&lhs, &rhs, 2).unwrap());
        // total symmetry is what fails on D while holding on the group block
        let sym_l = q_term(Term::var(0), Term::var(1), Term::var(2));
        let sym_r = q_term(Term::var(0), Term::var(2), Term::var(1));
        assert!(!d.check_identity(&sym_l, &sym_r, 3).unwrap());
        let (block, _) = restrict_to_subuniverse(&d, &[1, 2, 3, 4]).unwrap();
        assert!(block.check_identity(&sym_l, &sym_r, 3).unwrap());
        assert!(block.check_identity(&lhs, &rhs, 2).unwrap());
    }

    #[test]
    fn idempotence() {
        assert!(meet().is_idempotent());
        assert!(d9().is_idempotent());
        let constant = FiniteAlgebra::from_ops(2, vec![("z", 1, vec![0, 0])]).unwrap();
        assert!(!constant.is_idempotent());
    }

    #[test]
    fn two_semilattice_checks() {
        let meet_dot = Term::app("meet", vec![Term::var(0), Term::var(1)]);
        assert!(meet().is_two_semilattice(&meet_dot).unwrap());

        let rps = fixtures::rps();
        let rps_dot = Term::app("dot", vec![Term::var(0), Term::var(1)]);
        assert!(rps.is_two_semilattice(&rps_dot).unwrap());

        let dot = q_term(Term::var(0), Term::var(1), Term::var(1));
        assert!(!d9().is_two_semilattice(&dot).unwrap());
        assert_eq!(
            d9().two_semilattice_violation(&dot).unwrap(),
            Some("x·y ≈ y·x")
        );

        let ternary = q_term(Term::var(0), Term::var(1), Term::var(2));
        assert!(matches!(
            d9().is_two_semilattice(&ternary),
            Err(Error::TermArityMismatch { .. })
        ));
    }

    #[test]
    fn product_of_one_is_isomorphic_copy() {
        let alg = meet();
        let (prod, codec) = product_algebra(&[&alg]).unwrap();
        assert_eq!(prod.size(), 2);
        assert_eq!(codec.encode(&[1]), 1);
        assert_eq!(prod.eval_op("meet", &[1, 0]).unwrap(), 0);
    }

    #[test]
    fn product_meet_squared() {
        let alg = meet();
        let (prod, codec) = product_algebra(&[&alg, &alg]).unwrap();
        assert_eq!(prod.size(), 4);
        let a = codec.encode(&[1, 0]);
        let b = codec.encode(&[0, 1]);
        let out = prod.eval_op("meet", &[a, b]).unwrap();
        assert_eq!(codec.decode(out), vec![0, 0]);
    }

    #[test]
    fn product_sizes_multiply() {
        let two = meet();
        let three = fixtures::chain_min(3);
        assert!(matches!(
            product_algebra(&[&two, &three]),
            Err(Error::SignatureMismatch)
        ));
        let (p, _) = product_algebra(&[&fixtures::chain_min(2), &three]).unwrap();
        assert_eq!(p.size(), 6);
        assert!(matches!(product_algebra(&[]), Err(Error::EmptyProduct)));
    }

    #[test]
    fn closure_examples() {
        let chain = fixtures::chain_min(3);
        assert_eq!(subuniverse_closure(&chain, &[1, 2]).unwrap(), vec![1, 2]);
        assert_eq!(
            subuniverse_closure(&chain, &[0, 1, 2]).unwrap(),
            vec![0, 1, 2]
        );
        assert_eq!(subuniverse_closure(&d9(), &[1, 2]).unwrap(), vec![1, 2]);
        assert!(matches!(
            subuniverse_closure(&chain, &[7]),
            Err(Error::ElementOutOfRange { .. })
        ));
    }

    #[test]
    fn quotient_by_bounds() {
        use crate::congruence::Partition;
        let d = d9();
        let zero = Partition::identity(d.size());
        let (q0, _) = quotient_algebra(&d, &zero).unwrap();
        assert_eq!(q0.size(), d.size());
        let one = Partition::full(d.size());
        let (q1, _) = quotient_algebra(&d, &one).unwrap();
        assert_eq!(q1.size(), 1);
    }

    #[test]
    fn quotient_counterexample_by_witness() {
        use crate::congruence::Partition;
        let d = d9();
        let theta = Partition::from_blocks(5, &[vec![0], vec![1, 2, 3, 4]]).unwrap();
        let (q, codec) = quotient_algebra(&d, &theta).unwrap();
        assert_eq!(q.size(), 2);
        assert_eq!(codec.representative(1), 1);
        // the dot arrow runs from the top block to the group block
        let dot = q_term(Term::var(0), Term::var(1), Term::var(1));
        assert_eq!(q.eval_term(&dot, &[0, 1]).unwrap(), 1);
        assert_eq!(q.eval_term(&dot, &[1, 0]).unwrap(), 1);
    }

    #[test]
    fn quotient_audit_rejects_non_congruence() {
        use crate::congruence::Partition;
        let bad = Partition::from_blocks(5, &[vec![0, 1], vec![2, 3, 4]]).unwrap();
        assert!(matches!(
            quotient_algebra(&d9(), &bad),
            Err(Error::NotACongruence { .. })
        ));
    }

    #[test]
    fn restriction_examples() {
        let d = d9();
        let (block, codec) = restrict_to_subuniverse(&d, &[1, 2, 3, 4]).unwrap();
        assert_eq!(block.size(), 4);
        assert_eq!(codec.to_global(0), 1);
        // q acts as coordinatewise xor on the group block
        assert_eq!(block.eval_op("q", &[1, 2, 3]).unwrap(), 0);

        let chain = fixtures::chain_min(3);
        let (sub, c) = restrict_to_subuniverse(&chain, &[0, 2]).unwrap();
        assert_eq!(sub.size(), 2);
        assert_eq!(sub.eval_op("min", &[1, 0]).unwrap(), 0);
        assert_eq!(c.to_global(1), 2);

        assert!(matches!(
            restrict_to_subuniverse(&chain, &[1, 2, 5]),
            Err(Error::ElementOutOfRange { .. })
        ));
        // {1,2,3} is not closed: q(1,2,3) lands on 4
        assert!(matches!(
            restrict_to_subuniverse(&d, &[1, 2, 3]),
            Err(Error::NotClosed { .. })
        ));
    }

    #[test]
    fn dependency_examples() {
        let alg = meet();
        assert!(alg.depends_on(&Term::var(0), 2, 0).unwrap());
        assert!(!alg.depends_on(&Term::var(0), 2, 1).unwrap());
        let and = Term::app("meet", vec![Term::var(0), Term::var(1)]);
        assert!(alg.depends_on(&and, 2, 0).unwrap());
        assert!(alg.depends_on(&and, 2, 1).unwrap());

        let dot3 = q_term(Term::var(0), Term::var(1), Term::var(1));
        assert!(!d9().depends_on(&dot3, 3, 2).unwrap());
        assert_eq!(d9().dependency_set(&dot3, 3).unwrap(), vec![0, 1]);
    }

    #[test]
    fn edge_operation_examples() {
        // Boolean group: m(x,y,z) = x+y+z is a 2-edge (Maltsev) operation
        let z2 = FiniteAlgebra::from_ops(2, vec![("m", 3, vec![0, 1, 1, 0, 1, 0, 0, 1])]).unwrap();
        let m = Term::app("m", vec![Term::var(0), Term::var(1), Term::var(2)]);
        assert!(z2.is_edge_operation(&m, 2).unwrap());

        // x∧y∧z is not: e(y,y,x) = x∧y
        let meet3 = FiniteAlgebra::from_fns(2, vec![("e", 3, &|a| a[0] & a[1] & a[2])]).unwrap();
        let e = Term::app("e", vec![Term::var(0), Term::var(1), Term::var(2)]);
        assert!(!meet3.is_edge_operation(&e, 2).unwrap());

        // third projection satisfies e(y,y,x) ≈ x but not e(y,x,y) ≈ x
        let proj3 = FiniteAlgebra::from_fns(2, vec![("e", 3, &|a| a[2])]).unwrap();
        assert!(!proj3.is_edge_operation(&e, 2).unwrap());

        assert!(matches!(
            z2.is_edge_operation(&m, 1),
            Err(Error::MalformedInput(_))
        ));
    }

    #[test]
    fn derive_dot_syntactic_cases() {
        let star = Term::app("s", vec![Term::var(0), Term::var(1)]);
        let x = Term::var(0);
        let y = Term::var(1);

        // dependencies {0,1}: e(x*y, x*y, x)
        let e3 = Term::app("e", vec![Term::var(0), Term::var(1), Term::var(2)]);
        let t = derive_dot_term(&e3, 2, &star, &[0, 1], None).unwrap();
        assert_eq!(
            t,
            Term::app("e", vec![star.clone(), star.clone(), x.clone()])
        );

        // dependency {4} with k = 6: star alone in that position
        let e7 = Term::app("e", (0..7).map(Term::var).collect());
        let t = derive_dot_term(&e7, 6, &star, &[4], None).unwrap();
        let expected = Term::app(
            "e",
            vec![
                x.clone(),
                x.clone(),
                x.clone(),
                x.clone(),
                star.clone(),
                x.clone(),
                x.clone(),
            ],
        );
        assert_eq!(t, expected);

        // dependencies {0,2,4}: the row with y in positions {0,2}
        let t = derive_dot_term(&e7, 6, &star, &[0, 2, 4], None).unwrap();
        let expected = Term::app(
            "e",
            vec![
                y.clone(),
                x.clone(),
                y.clone(),
                x.clone(),
                x.clone(),
                x.clone(),
                x.clone(),
            ],
        );
        assert_eq!(t, expected);

        // dependencies {0,2}: e(x*y, x, x*y)
        let t = derive_dot_term(&e3, 2, &star, &[0, 2], None).unwrap();
        assert_eq!(t, Term::app("e", vec![star.clone(), x.clone(), star.clone()]));

        // a fallback row that fails to separate the dependencies is refused:
        // row 0 puts y in positions {0,1}, disjoint from dependencies {3,4}
        assert!(matches!(
            derive_dot_term(&e7, 6, &star, &[3, 4], Some(0)),
            Err(Error::NoApplicableCase(_))
        ));
    }

    #[test]
    fn term_display_reads_naturally() {
        let dot = q_term(Term::var(0), Term::var(1), Term::var(1));
        assert_eq!(dot.to_string(), "q(x0, x1, x1)");
    }
}
