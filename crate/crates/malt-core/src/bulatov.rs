//! Constructive solver for nonempty standard instances over a 2-semilattice.
//!
//! The solver alternates two reductions until every potato is a singleton:
//! replacing each potato and relation by the minimal strongly connected
//! component of its dot digraph, and splitting on a maximal congruence of a
//! pivot potato with more than one element. The unique assignment of the
//! terminal instance is a solution of the input, and the chain of steps is
//! returned as a [`ReductionTrace`].
//!
//! Everything here works over the binary dot reduct of the instance ambient:
//! other operations play no role in the reductions, and congruence classes of
//! the reduct need not be closed under them. The instances produced by
//! [`scc_restrict`], [`decompose`] and the trace therefore carry the reduct
//! as their ambient algebra.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{binary_reduct, restrict_to_subuniverse, Element, ElementSet, FiniteAlgebra, Term};
use crate::congruence::maximal_congruences;
use crate::digraph::scc_of_adjacency;
use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, Pair};

/// Default cap on enumerated solutions for the walk oracle.
pub const WALK_ORACLE_BOUND: usize = 10_000;

/// One reduction step of a solving run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TraceStep {
    /// Potatoes and relations replaced by their minimal components.
    SccRestrict {
        potato_size_before: usize,
        potato_size_after: usize,
    },
    /// Split on a maximal congruence of the pivot's potato.
    Decompose {
        pivot: usize,
        alpha_blocks: Vec<Vec<Element>>,
        w: Vec<usize>,
        chosen_block: usize,
        potato_size_before: usize,
        potato_size_after: usize,
    },
}

/// The full chain of reduction steps from the input down to a
/// singleton-potato instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReductionTrace {
    pub steps: Vec<TraceStep>,
}

/// Result of one congruence decomposition: the pivot data and one
/// subinstance per congruence block.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub pivot: usize,
    /// Blocks of the chosen maximal congruence, as ambient elements,
    /// ordered by least element.
    pub alpha_blocks: Vec<Vec<Element>>,
    /// Variables whose relation to the pivot induces a function onto blocks.
    pub w: Vec<usize>,
    /// For each variable in `w`: the block index of each potato element
    /// (indexed by position in the potato).
    pub block_maps: Vec<Option<Vec<usize>>>,
    pub instances: Vec<Instance>,
}

/// Rebuild an instance over the binary dot reduct of its ambient algebra.
/// The reduct operation is named `dot`, so the returned term is
/// `dot(x0, x1)`.
pub fn to_dot_reduct(inst: &Instance, dot: &Term) -> Result<(Instance, Term)> {
    let reduct = binary_reduct(inst.ambient(), dot, "dot")?;
    let rterm = Term::app("dot", vec![Term::var(0), Term::var(1)]);
    let rinst = Instance::new(
        Arc::new(reduct),
        inst.variables().to_vec(),
        inst.potatoes().to_vec(),
        (0..inst.num_vars())
            .flat_map(|x| (0..inst.num_vars()).map(move |y| (x, y)))
            .map(|(x, y)| inst.relation(x, y).to_vec())
            .collect(),
    )?;
    Ok((rinst, rterm))
}

/// Verify that `dot` acts as a 2-semilattice operation on every potato and,
/// componentwise, on every relation of the instance.
pub fn check_two_semilattice_on_parts(inst: &Instance, dot: &Term) -> Result<()> {
    let alg = inst.ambient();
    let dotv = |a: Element, b: Element| alg.eval_term(dot, &[a, b]);
    for potato in inst.potatoes() {
        for &a in potato {
            if dotv(a, a)? != a {
                return Err(Error::NotTwoSemilattice {
                    identity: "x·x ≈ x".into(),
                });
            }
            for &b in potato {
                let ab = dotv(a, b)?;
                if ab != dotv(b, a)? {
                    return Err(Error::NotTwoSemilattice {
                        identity: "x·y ≈ y·x".into(),
                    });
                }
                if dotv(a, ab)? != ab {
                    return Err(Error::NotTwoSemilattice {
                        identity: "x·(x·y) ≈ x·y".into(),
                    });
                }
            }
        }
    }
    for x in 0..inst.num_vars() {
        for y in 0..inst.num_vars() {
            let rel = inst.relation(x, y);
            for &(a1, a2) in rel {
                for &(b1, b2) in rel {
                    let ab = (dotv(a1, b1)?, dotv(a2, b2)?);
                    let ba = (dotv(b1, a1)?, dotv(b2, a2)?);
                    if ab != ba {
                        return Err(Error::NotTwoSemilattice {
                            identity: "x·y ≈ y·x".into(),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn require_standard_nonempty(inst: &Instance) -> Result<()> {
    if inst.is_empty_instance() || inst.num_vars() == 0 {
        return Err(Error::EmptyInstance);
    }
    let report = inst.validate_standard();
    if !report.is_standard() {
        return Err(Error::NotStandard(report.first_failure().unwrap_or_default()));
    }
    Ok(())
}

/// Minimal-component restriction of a set under the dot digraph.
fn minimal_component_of_set(
    alg: &FiniteAlgebra,
    dot: &Term,
    values: &[Element],
) -> Result<Vec<Element>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let m = values.len();
    let mut adj = vec![Vec::new(); m];
    for i in 0..m {
        for j in 0..m {
            if alg.eval_term(dot, &[values[i], values[j]])? == values[j] {
                adj[i].push(j);
            }
        }
    }
    let local = unique_minimal_component(&adj)?;
    Ok(local.into_iter().map(|i| values[i]).collect())
}

/// Minimal-component restriction of a pair set under the componentwise dot
/// digraph.
fn minimal_component_of_pairs(
    alg: &FiniteAlgebra,
    dot: &Term,
    pairs: &[Pair],
) -> Result<Vec<Pair>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let m = pairs.len();
    let mut adj = vec![Vec::new(); m];
    for i in 0..m {
        for j in 0..m {
            let first = alg.eval_term(dot, &[pairs[i].0, pairs[j].0])?;
            let second = alg.eval_term(dot, &[pairs[i].1, pairs[j].1])?;
            if (first, second) == pairs[j] {
                adj[i].push(j);
            }
        }
    }
    let local = unique_minimal_component(&adj)?;
    Ok(local.into_iter().map(|i| pairs[i]).collect())
}

fn unique_minimal_component(adj: &[Vec<usize>]) -> Result<Vec<usize>> {
    let dec = scc_of_adjacency(adj);
    let minimal = dec.minimal_components();
    if minimal.len() != 1 {
        return Err(Error::InternalInconsistency(format!(
            "{} minimal components in a dot digraph",
            minimal.len()
        )));
    }
    Ok(dec.components()[minimal[0]].clone())
}

fn is_strongly_connected_set(alg: &FiniteAlgebra, dot: &Term, values: &[Element]) -> Result<bool> {
    Ok(minimal_component_of_set(alg, dot, values)?.len() == values.len())
}

fn is_strongly_connected_pairs(alg: &FiniteAlgebra, dot: &Term, pairs: &[Pair]) -> Result<bool> {
    Ok(minimal_component_of_pairs(alg, dot, pairs)?.len() == pairs.len())
}

fn scc_restrict_impl(inst: &Instance, dot: &Term) -> Result<Instance> {
    let alg = inst.ambient();
    let k = inst.num_vars();
    let mut potatoes = Vec::with_capacity(k);
    for x in 0..k {
        potatoes.push(minimal_component_of_set(alg, dot, inst.potato(x))?);
    }
    let mut relations = Vec::with_capacity(k * k);
    for x in 0..k {
        for y in 0..k {
            relations.push(minimal_component_of_pairs(alg, dot, inst.relation(x, y))?);
        }
    }
    Instance::new(
        inst.ambient().clone(),
        inst.variables().to_vec(),
        potatoes,
        relations,
    )
}

/// Replace every potato and relation by the minimal component of its dot
/// digraph. Input must be standard and nonempty with a genuine 2-semilattice
/// dot on all parts; the output is standard and nonempty again, over the dot
/// reduct.
pub fn scc_restrict(inst: &Instance, dot: &Term) -> Result<Instance> {
    require_standard_nonempty(inst)?;
    check_two_semilattice_on_parts(inst, dot)?;
    let (rinst, rdot) = to_dot_reduct(inst, dot)?;
    let out = scc_restrict_impl(&rinst, &rdot)?;
    require_standard_nonempty(&out).map_err(|e| {
        Error::InternalInconsistency(format!("restriction to minimal components broke the instance: {e}"))
    })?;
    Ok(out)
}

fn decompose_impl(inst: &Instance, dot: &Term, pivot: usize, audit: bool) -> Result<Decomposition> {
    let alg = inst.ambient();
    let k = inst.num_vars();
    let potato = inst.potato(pivot).clone();
    if potato.len() < 2 {
        return Err(Error::MalformedInstance(format!(
            "pivot variable {pivot} has a singleton potato"
        )));
    }
    let (pivot_alg, codec) = restrict_to_subuniverse(alg, &potato)?;
    let maxes = maximal_congruences(&pivot_alg)?;
    let alpha = maxes
        .iter()
        .min_by(|a, b| a.canonical_key().cmp(b.canonical_key()))
        .ok_or_else(|| {
            Error::InternalInconsistency("no maximal congruence on a multi-element potato".into())
        })?
        .clone();
    let alpha_blocks: Vec<Vec<Element>> = alpha
        .blocks()
        .into_iter()
        .map(|block| block.into_iter().map(|i| codec.to_global(i)).collect())
        .collect();
    let nblocks = alpha_blocks.len();
    let block_of_pivot_elem = |b: Element| -> usize {
        let local = codec.to_local(b).expect("relation element inside the pivot potato");
        alpha.block_index_of(local)
    };

    // W: variables whose relation to the pivot induces a function onto the
    // blocks. Single-valuedness is the test; subdirectness of a standard
    // instance makes the induced map total, and surjectivity is checked
    // outright because block preimages must be nonempty.
    let mut w = Vec::new();
    let mut block_maps: Vec<Option<Vec<usize>>> = vec![None; k];
    for (x, slot) in block_maps.iter_mut().enumerate() {
        let rel = inst.relation(x, pivot);
        let px = inst.potato(x);
        let mut map = vec![usize::MAX; px.len()];
        let mut functional = true;
        'outer: for (pos, &a) in px.iter().enumerate() {
            for &(u, v) in rel {
                if u != a {
                    continue;
                }
                let blk = block_of_pivot_elem(v);
                if map[pos] == usize::MAX {
                    map[pos] = blk;
                } else if map[pos] != blk {
                    functional = false;
                    break 'outer;
                }
            }
            if map[pos] == usize::MAX {
                functional = false;
                break;
            }
        }
        if functional {
            let mut seen = vec![false; nblocks];
            for &blk in &map {
                seen[blk] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::InternalInconsistency(format!(
                    "induced map of variable {x} onto pivot blocks is not surjective"
                )));
            }
            if audit {
                audit_homomorphism(alg, dot, px, &map, nblocks, x)?;
            }
            w.push(x);
            *slot = Some(map);
        }
    }

    let mut instances = Vec::with_capacity(nblocks);
    for i in 0..nblocks {
        let mut new_potatoes: Vec<ElementSet> = Vec::with_capacity(k);
        for (x, map) in block_maps.iter().enumerate() {
            match map {
                Some(map) => {
                    new_potatoes.push(
                        inst.potato(x)
                            .iter()
                            .zip(map)
                            .filter(|&(_, &blk)| blk == i)
                            .map(|(&a, _)| a)
                            .collect(),
                    );
                }
                None => new_potatoes.push(inst.potato(x).clone()),
            }
        }
        let block_inst = inst.restrict(&new_potatoes)?;
        if audit {
            let report = block_inst.validate_standard();
            if !report.is_standard() || block_inst.is_empty_instance() {
                return Err(Error::InternalInconsistency(format!(
                    "decomposition block {i} is not a nonempty standard instance: {}",
                    report.first_failure().unwrap_or_else(|| "empty".into())
                )));
            }
        }
        instances.push(block_inst);
    }
    Ok(Decomposition {
        pivot,
        alpha_blocks,
        w,
        block_maps,
        instances,
    })
}

fn audit_homomorphism(
    alg: &FiniteAlgebra,
    dot: &Term,
    potato: &[Element],
    map: &[usize],
    nblocks: usize,
    var: usize,
) -> Result<()> {
    let block_of = |a: Element| -> usize {
        let pos = potato.binary_search(&a).expect("element of the potato");
        map[pos]
    };
    // blockwise dot table must be well defined and match the induced map
    let mut table = vec![usize::MAX; nblocks * nblocks];
    for &a in potato {
        for &b in potato {
            let ab = alg.eval_term(dot, &[a, b])?;
            let (ba, bb) = (block_of(a), block_of(b));
            let out = block_of(ab);
            let cell = &mut table[ba * nblocks + bb];
            if *cell == usize::MAX {
                *cell = out;
            } else if *cell != out {
                return Err(Error::InternalInconsistency(format!(
                    "induced map of variable {var} is not a homomorphism"
                )));
            }
        }
    }
    Ok(())
}

/// Split a strongly connected standard instance on a maximal congruence of
/// the pivot's potato. Returns one subinstance per block (over the dot
/// reduct) together with the pivot data.
pub fn decompose(inst: &Instance, dot: &Term, pivot: usize) -> Result<Decomposition> {
    require_standard_nonempty(inst)?;
    check_two_semilattice_on_parts(inst, dot)?;
    if pivot >= inst.num_vars() {
        return Err(Error::MalformedInstance(format!("unknown pivot {pivot}")));
    }
    let (rinst, rdot) = to_dot_reduct(inst, dot)?;
    for x in 0..rinst.num_vars() {
        if !is_strongly_connected_set(rinst.ambient(), &rdot, rinst.potato(x))? {
            return Err(Error::MalformedInstance(format!(
                "potato of variable {x} is not strongly connected"
            )));
        }
        for y in 0..rinst.num_vars() {
            if !is_strongly_connected_pairs(rinst.ambient(), &rdot, rinst.relation(x, y))? {
                return Err(Error::MalformedInstance(format!(
                    "relation ({x},{y}) is not strongly connected"
                )));
            }
        }
    }
    decompose_impl(&rinst, &rdot, pivot, true)
}

/// Run the full reduction chain and return the solution it pins down, plus
/// the trace. The instance must be standard and nonempty, and `dot` must be
/// a 2-semilattice operation on all of its parts.
pub fn bulatov_solution(inst: &Instance, dot: &Term) -> Result<(Assignment, ReductionTrace)> {
    bulatov_solution_with(inst, dot, false)
}

pub fn bulatov_solution_with(
    inst: &Instance,
    dot: &Term,
    audit: bool,
) -> Result<(Assignment, ReductionTrace)> {
    require_standard_nonempty(inst)?;
    check_two_semilattice_on_parts(inst, dot)?;
    let (mut current, rdot) = to_dot_reduct(inst, dot)?;
    let mut trace = ReductionTrace::default();

    loop {
        if current.potatoes().iter().all(|p| p.len() == 1) {
            let assignment = Assignment(current.potatoes().iter().map(|p| p[0]).collect());
            if audit && !inst.is_solution(&assignment)? {
                return Err(Error::InternalInconsistency(
                    "terminal assignment does not solve the input instance".into(),
                ));
            }
            return Ok((assignment, trace));
        }

        let before = current.total_potato_size();
        let restricted = scc_restrict_impl(&current, &rdot)?;
        if audit {
            require_standard_nonempty(&restricted)?;
        }
        trace.steps.push(TraceStep::SccRestrict {
            potato_size_before: before,
            potato_size_after: restricted.total_potato_size(),
        });
        current = restricted;

        let pivot = (0..current.num_vars()).find(|&x| current.potato(x).len() > 1);
        let Some(pivot) = pivot else {
            continue;
        };
        let before = current.total_potato_size();
        let dec = decompose_impl(&current, &rdot, pivot, audit)?;
        let chosen = dec.instances[0].clone();
        trace.steps.push(TraceStep::Decompose {
            pivot,
            alpha_blocks: dec.alpha_blocks,
            w: dec.w,
            chosen_block: 0,
            potato_size_before: before,
            potato_size_after: chosen.total_potato_size(),
        });
        current = chosen;
    }
}

/// Search the solution digraph for a directed walk from `s` to `r`. Both
/// must be solutions; the solution set is enumerated, so this is an
/// oracle-scale test hook.
pub fn verify_walk_to_bulatov(
    inst: &Instance,
    dot: &Term,
    s: &Assignment,
    r: &Assignment,
) -> Result<bool> {
    verify_walk_to_bulatov_bounded(inst, dot, s, r, WALK_ORACLE_BOUND)
}

pub fn verify_walk_to_bulatov_bounded(
    inst: &Instance,
    dot: &Term,
    s: &Assignment,
    r: &Assignment,
    cap: usize,
) -> Result<bool> {
    for (name, asg) in [("start", s), ("target", r)] {
        if !inst.is_solution(asg)? {
            return Err(Error::NotASolution(format!("{name} assignment")));
        }
    }
    let solutions = inst
        .enumerate_solutions(cap)?
        .ok_or(Error::OracleBoundExceeded { bound: cap })?;
    let index_of = |asg: &Assignment| solutions.binary_search(asg).ok();
    let start = index_of(s).expect("verified solution is enumerated");
    let target = index_of(r).expect("verified solution is enumerated");

    let mut seen = vec![false; solutions.len()];
    let mut queue = std::collections::VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(i) = queue.pop_front() {
        if i == target {
            return Ok(true);
        }
        for j in 0..solutions.len() {
            if seen[j] {
                continue;
            }
            let combined = inst.pointwise_dot(&solutions[i], &solutions[j], dot)?;
            if combined == solutions[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    Ok(false)
}
