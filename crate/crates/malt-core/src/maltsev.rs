//! The quotient-then-block decision procedure.
//!
//! Given an algebra whose binary term `dot` induces a witness congruence θ
//! (first projection inside each block, 2-semilattice on the quotient), a
//! standard instance is decided by: quotienting every potato and relation by
//! θ, finding the canonical solution of the quotient with the 2-semilattice
//! solver, restricting the original instance to the chosen blocks, and
//! handing the restricted instance to a pluggable exact block solver.
//!
//! Soundness is unconditional: a YES is always backed by a verified witness.
//! Completeness additionally needs the exchange identity
//! `x·(y·z) ≈ x·(z·y)`; when it fails the solver still runs but tags its
//! verdict, and [`build_counterexample`] produces the built-in instance on
//! which that failure makes the algorithm answer NO despite a solution.

use std::sync::Arc;

use crate::algebra::{quotient_algebra, restrict_to_subuniverse, Element, FiniteAlgebra, Term};
use crate::bulatov::{bulatov_solution_with, ReductionTrace};
use crate::congruence::{analyze_theta, Partition, ThetaFailure};
use crate::error::{Error, Result};
use crate::instance::{
    two_three_consistency, Assignment, Instance, RawConstraint, RawInstance, BRUTE_FORCE_BOUND,
};

/// Verdicts for the solver's algebra-level hypotheses.
///
/// Block membership in an abstract tractable class is not decidable from an
/// operation table; the block solver's declared exactness class stands in
/// for it.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub idempotent: bool,
    /// The witness congruence, when the defining relation is an equivalence
    /// compatible with all operations.
    pub witness_congruence: Option<Partition>,
    pub witness_failure: Option<ThetaFailure>,
    /// Whether dot is a 2-semilattice operation on the quotient by the
    /// witness congruence. Unknown when the congruence does not exist.
    pub quotient_two_semilattice: Option<bool>,
    /// Whether dot is the first projection inside every block.
    pub projection_on_blocks: Option<bool>,
    /// Whether the ambient algebra satisfies `x·(y·z) ≈ x·(z·y)`.
    pub exchange_identity: bool,
    /// An assignment `[x, y, z]` violating the exchange identity, if any.
    pub exchange_witness: Option<Vec<Element>>,
}

impl HypothesisReport {
    /// The hypotheses the solver refuses to run without.
    pub fn core_pass(&self) -> bool {
        self.idempotent
            && self.witness_congruence.is_some()
            && self.quotient_two_semilattice == Some(true)
            && self.projection_on_blocks == Some(true)
    }

    pub fn all_pass(&self) -> bool {
        self.core_pass() && self.exchange_identity
    }

    pub fn failed_core(&self) -> Vec<String> {
        let mut failed = Vec::new();
        if !self.idempotent {
            failed.push("ambient algebra is not idempotent".to_string());
        }
        if let Some(f) = &self.witness_failure {
            failed.push(format!("witness congruence: {f}"));
        }
        if self.quotient_two_semilattice == Some(false) {
            failed.push("dot is not a 2-semilattice operation on the quotient".to_string());
        }
        if self.projection_on_blocks == Some(false) {
            failed.push("dot is not the first projection inside every block".to_string());
        }
        failed
    }
}

/// Check the solver's algebra-level hypotheses on `alg` with the given dot
/// term. Diagnostic: every verdict is reported, nothing is an error.
pub fn hypothesis_check(alg: &FiniteAlgebra, dot: &Term) -> Result<HypothesisReport> {
    let analysis = analyze_theta(alg, dot)?;
    let (witness_congruence, witness_failure) = match analysis.partition {
        Ok(p) => (Some(p), None),
        Err(f) => (None, Some(f)),
    };
    let projection_on_blocks = analysis.block_projection.map(|r| r.is_ok());
    let quotient_two_semilattice = analysis.quotient_two_semilattice.map(|r| r.is_ok());

    let x = Term::var(0);
    let yz = dot.substitute(&[Term::var(1), Term::var(2)]);
    let zy = dot.substitute(&[Term::var(2), Term::var(1)]);
    let lhs = dot.substitute(&[x.clone(), yz]);
    let rhs = dot.substitute(&[x, zy]);
    let exchange_witness = alg.find_identity_witness(&lhs, &rhs, 3)?;

    Ok(HypothesisReport {
        idempotent: alg.is_idempotent(),
        witness_congruence,
        witness_failure,
        quotient_two_semilattice,
        projection_on_blocks,
        exchange_identity: exchange_witness.is_none(),
        exchange_witness,
    })
}

/// Per-variable quotient data: the witness congruence of each potato and the
/// translation between its blocks and elements of the quotient ambient.
#[derive(Debug, Clone)]
pub struct QuotientMap {
    ambient_theta: Partition,
    potato_thetas: Vec<Partition>,
    /// Per variable: `(quotient element, members of the fiber)`, sorted.
    fibers: Vec<Vec<(Element, Vec<Element>)>>,
}

impl QuotientMap {
    pub fn ambient_theta(&self) -> &Partition {
        &self.ambient_theta
    }

    /// Witness congruence of the potato of `x`, over local potato indices.
    pub fn potato_theta(&self, x: usize) -> &Partition {
        &self.potato_thetas[x]
    }

    /// Quotient element holding `a`, for `a` in the potato of `x`.
    pub fn block_of(&self, x: usize, a: Element) -> Option<Element> {
        self.fibers[x]
            .iter()
            .find(|(_, members)| members.binary_search(&a).is_ok())
            .map(|&(q, _)| q)
    }

    /// Members of the potato of `x` mapping to quotient element `q`.
    pub fn fiber(&self, x: usize, q: Element) -> Option<&[Element]> {
        self.fibers[x]
            .iter()
            .find(|&&(qe, _)| qe == q)
            .map(|(_, members)| &members[..])
    }

    /// Blockwise image of an assignment: the unique quotient assignment the
    /// given one passes through.
    pub fn quotient_assignment(&self, s: &Assignment) -> Result<Assignment> {
        let mut out = Vec::with_capacity(s.len());
        for (x, &a) in s.0.iter().enumerate() {
            out.push(self.block_of(x, a).ok_or_else(|| {
                Error::MalformedInput(format!("element {a} is not in the potato of variable {x}"))
            })?);
        }
        Ok(Assignment(out))
    }
}

/// Quotient a standard nonempty instance by the witness congruence of every
/// potato. The quotient instance lives over the quotient of the ambient
/// algebra by its own witness congruence; each potato quotient embeds into
/// it block-for-block because the defining relation is pointwise.
pub fn build_quotient_instance(inst: &Instance, dot: &Term) -> Result<(Instance, QuotientMap)> {
    if inst.num_vars() == 0 || inst.is_empty_instance() {
        return Err(Error::EmptyInstance);
    }
    let report = inst.validate_standard();
    if !report.is_standard() {
        return Err(Error::NotStandard(report.first_failure().unwrap_or_default()));
    }
    let ambient = inst.ambient();
    let k = inst.num_vars();

    let mut potato_thetas = Vec::with_capacity(k);
    for x in 0..k {
        let (potato_alg, _) = restrict_to_subuniverse(ambient, inst.potato(x))?;
        let theta = crate::congruence::theta_witness(&potato_alg, dot).map_err(|e| match e {
            Error::Theta(failure) => Error::ThetaOnPotato { var: x, failure },
            other => other,
        })?;
        potato_thetas.push(theta);
    }

    let ambient_theta = crate::congruence::theta_witness(ambient, dot)?;
    let (qalg, qcodec) = quotient_algebra(ambient, &ambient_theta)?;

    let mut fibers = Vec::with_capacity(k);
    let mut qpotatoes = Vec::with_capacity(k);
    for (x, potato_theta) in potato_thetas.iter().enumerate() {
        let mut local: Vec<(Element, Vec<Element>)> = Vec::new();
        for &a in inst.potato(x) {
            let q = qcodec.block_of(a);
            match local.iter_mut().find(|(qe, _)| *qe == q) {
                Some((_, members)) => members.push(a),
                None => local.push((q, vec![a])),
            }
        }
        local.sort_by_key(|&(q, _)| q);
        if local.len() != potato_theta.num_blocks() {
            return Err(Error::InternalInconsistency(format!(
                "potato {x}: ambient blocks disagree with the potato's own witness congruence"
            )));
        }
        qpotatoes.push(local.iter().map(|&(q, _)| q).collect::<Vec<_>>());
        fibers.push(local);
    }

    let mut qrelations = Vec::with_capacity(k * k);
    for x in 0..k {
        for y in 0..k {
            let mut pairs: Vec<(Element, Element)> = inst
                .relation(x, y)
                .iter()
                .map(|&(a, b)| (qcodec.block_of(a), qcodec.block_of(b)))
                .collect();
            pairs.sort_unstable();
            pairs.dedup();
            qrelations.push(pairs);
        }
    }

    let qinst = Instance::new(
        Arc::new(qalg),
        inst.variables().to_vec(),
        qpotatoes,
        qrelations,
    )?;
    let qreport = qinst.validate_standard();
    if !qreport.is_standard() || qinst.is_empty_instance() {
        return Err(Error::InternalInconsistency(format!(
            "quotient instance is not standard: {}",
            qreport.first_failure().unwrap_or_else(|| "empty".into())
        )));
    }
    Ok((
        qinst,
        QuotientMap {
            ambient_theta,
            potato_thetas,
            fibers,
        },
    ))
}

/// True iff the block of `s(x)` is `phi(x)` for every variable.
pub fn passes_through(s: &Assignment, phi: &Assignment, qm: &QuotientMap) -> Result<bool> {
    if s.len() != phi.len() {
        return Err(Error::AssignmentLengthMismatch {
            expected: s.len(),
            got: phi.len(),
        });
    }
    Ok(qm.quotient_assignment(s)? == *phi)
}

/// Move a solution across a quotient arrow: from a solution `s` through
/// `phi` to a solution through `psi`, by pointwise dot with elements of the
/// target blocks. Requires the exchange identity on the ambient algebra,
/// which makes the choice of target element immaterial.
pub fn transfer_solution(
    s: &Assignment,
    phi: &Assignment,
    psi: &Assignment,
    inst: &Instance,
    qm: &QuotientMap,
    dot: &Term,
) -> Result<Assignment> {
    let ambient = inst.ambient();
    let x0 = Term::var(0);
    let yz = dot.substitute(&[Term::var(1), Term::var(2)]);
    let zy = dot.substitute(&[Term::var(2), Term::var(1)]);
    let lhs = dot.substitute(&[x0.clone(), yz]);
    let rhs = dot.substitute(&[x0, zy]);
    if let Some(w) = ambient.find_identity_witness(&lhs, &rhs, 3)? {
        return Err(Error::HypothesisRefused(format!(
            "exchange identity x·(y·z) ≈ x·(z·y) fails at {w:?}; transfers are not well defined"
        )));
    }
    if !inst.is_solution(s)? {
        return Err(Error::NotASolution("start assignment".into()));
    }
    if !passes_through(s, phi, qm)? {
        return Err(Error::MalformedInput(
            "start solution does not pass through the given quotient solution".into(),
        ));
    }
    let k = inst.num_vars();
    // pointwise quotient arrow phi -> psi, evaluated on fiber representatives
    for x in 0..k {
        let a = qm.fiber(x, phi.get(x)).and_then(|f| f.first().copied());
        let b = qm.fiber(x, psi.get(x)).and_then(|f| f.first().copied());
        let (Some(a), Some(b)) = (a, b) else {
            return Err(Error::MalformedInput(format!(
                "quotient assignment uses a block missing from the potato of variable {x}"
            )));
        };
        let ab = ambient.eval_term(dot, &[a, b])?;
        if qm.block_of(x, ab) != Some(psi.get(x)) {
            return Err(Error::MalformedInput(format!(
                "no quotient arrow at variable {x}"
            )));
        }
    }
    // psi must be a solution of the quotient instance
    for x in 0..k {
        for y in 0..k {
            let hit = inst.relation(x, y).iter().any(|&(a, b)| {
                qm.block_of(x, a) == Some(psi.get(x)) && qm.block_of(y, b) == Some(psi.get(y))
            });
            if !hit {
                return Err(Error::MalformedInput(format!(
                    "target quotient assignment violates relation ({x},{y})"
                )));
            }
        }
    }

    let mut out = Vec::with_capacity(k);
    for x in 0..k {
        let fiber = qm.fiber(x, psi.get(x)).expect("checked above");
        let b = fiber[0];
        let t = ambient.eval_term(dot, &[s.get(x), b])?;
        #[cfg(debug_assertions)]
        for &b_alt in fiber {
            debug_assert_eq!(
                ambient.eval_term(dot, &[s.get(x), b_alt])?,
                t,
                "transfer target choice must not matter under the exchange identity"
            );
        }
        out.push(t);
    }
    let t = Assignment(out);
    if !inst.is_solution(&t)? || !passes_through(&t, psi, qm)? {
        return Err(Error::InternalInconsistency(
            "transferred assignment is not a solution through the target".into(),
        ));
    }
    Ok(t)
}

/// An exact decision procedure for the restricted block instances.
pub trait BlockSolver {
    fn name(&self) -> &str;
    /// Description of the input class on which this solver is exact.
    fn exactness_class(&self) -> &str;
    fn solve(&self, inst: &Instance) -> Result<Option<Assignment>>;
}

/// Exhaustive backtracking, exact on everything within its search bound.
#[derive(Debug, Clone)]
pub struct BruteForceBlockSolver {
    pub bound: u128,
}

impl BlockSolver for BruteForceBlockSolver {
    fn name(&self) -> &str {
        "brute"
    }

    fn exactness_class(&self) -> &str {
        "all instances with assignment space within the bound"
    }

    fn solve(&self, inst: &Instance) -> Result<Option<Assignment>> {
        inst.brute_force_solve_bounded(self.bound)
    }
}

pub fn default_block_solver() -> BruteForceBlockSolver {
    BruteForceBlockSolver {
        bound: BRUTE_FORCE_BOUND,
    }
}

/// Outcome of a solving run.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solvable: bool,
    /// Verified witness, when the verdict is YES and the block solver
    /// produced one.
    pub witness: Option<Assignment>,
    pub hypotheses: HypothesisReport,
    /// Set when the exchange identity fails: a NO from this run may be
    /// wrong. YES verdicts are verified regardless.
    pub unsound_no_possible: bool,
    /// The quotient solution the instance was restricted to.
    pub quotient_solution: Option<Assignment>,
    pub trace: Option<ReductionTrace>,
}

/// Decide a standard instance: quotient, solve the quotient, restrict, run
/// the block solver, verify any witness.
pub fn main_solve(inst: &Instance, dot: &Term, blocks: &dyn BlockSolver) -> Result<SolveOutcome> {
    main_solve_with(inst, dot, blocks, false)
}

pub fn main_solve_with(
    inst: &Instance,
    dot: &Term,
    blocks: &dyn BlockSolver,
    audit: bool,
) -> Result<SolveOutcome> {
    let report = inst.validate_standard();
    if !report.is_standard() {
        return Err(Error::NotStandard(report.first_failure().unwrap_or_default()));
    }
    let hypotheses = hypothesis_check(inst.ambient(), dot)?;

    if inst.num_vars() == 0 {
        return Ok(SolveOutcome {
            solvable: true,
            witness: Some(Assignment(Vec::new())),
            hypotheses,
            unsound_no_possible: false,
            quotient_solution: None,
            trace: None,
        });
    }
    if inst.is_empty_instance() {
        return Ok(SolveOutcome {
            solvable: false,
            witness: None,
            hypotheses,
            unsound_no_possible: false,
            quotient_solution: None,
            trace: None,
        });
    }
    if !hypotheses.core_pass() {
        return Err(Error::HypothesisRefused(hypotheses.failed_core().join("; ")));
    }
    let unsound_no_possible = !hypotheses.exchange_identity;

    let (qinst, qm) = build_quotient_instance(inst, dot)?;
    let (phi, trace) = bulatov_solution_with(&qinst, dot, audit)?;

    let mut new_potatoes = Vec::with_capacity(inst.num_vars());
    for x in 0..inst.num_vars() {
        let fiber = qm.fiber(x, phi.get(x)).ok_or_else(|| {
            Error::InternalInconsistency(format!(
                "quotient solution uses a block missing from the potato of variable {x}"
            ))
        })?;
        new_potatoes.push(fiber.to_vec());
    }
    let restricted = inst.restrict(&new_potatoes)?;
    let witness = blocks.solve(&restricted)?;

    if let Some(w) = &witness {
        if !inst.is_solution(w)? {
            return Err(Error::InternalInconsistency(format!(
                "block solver `{}` returned an invalid witness",
                blocks.name()
            )));
        }
    }
    Ok(SolveOutcome {
        solvable: witness.is_some(),
        witness,
        hypotheses,
        unsound_no_possible,
        quotient_solution: Some(phi),
        trace: Some(trace),
    })
}

/// The built-in counterexample: the five-element algebra whose ternary
/// operation is symmetric on the four-element group block, together with
/// `dot = q(x, y, y)` and a standard instance that has the all-top solution
/// while its group-block restriction is unsolvable.
///
/// The group-block system puts one GF(2) equation on each edge of the
/// complete graph on the four variables, using the three nonzero functionals
/// of the 2-bit space arranged by a proper edge coloring; every triangle
/// composition is then full, so consistency keeps the system intact, while
/// the sum of all six equations is the inconsistent 0 = 1.
pub fn build_counterexample() -> Result<(FiniteAlgebra, Term, Instance)> {
    let algebra = crate::fixtures::counterexample_algebra();
    let dot = Term::app("q", vec![Term::var(0), Term::var(1), Term::var(1)]);
    let variables: Vec<String> = ["w", "x", "y", "z"].iter().map(|s| s.to_string()).collect();

    // functionals on the group block {1..4}, reading e-1 as two bits
    let functionals: [fn(Element) -> usize; 3] = [
        |e| (e - 1) >> 1,                     // hi
        |e| (e - 1) & 1,                      // lo
        |e| ((e - 1) >> 1) ^ ((e - 1) & 1),   // hi ⊕ lo
    ];
    // edge coloring of K4: (u, v, functional index, twist)
    let edges = [
        (0, 1, 0, 1), // w-x carries the hi bit, twisted
        (2, 3, 0, 0), // y-z carries the hi bit
        (0, 2, 1, 0), // w-y carries the lo bit
        (1, 3, 1, 0), // x-z carries the lo bit
        (0, 3, 2, 0), // w-z carries hi⊕lo
        (1, 2, 2, 0), // x-y carries hi⊕lo
    ];
    let mut constraints = Vec::new();
    for &(u, v, f, t) in &edges {
        let func = functionals[f];
        let mut pairs = vec![(0, 0)];
        for a in 1..=4 {
            for b in 1..=4 {
                if func(a) ^ func(b) == t {
                    pairs.push((a, b));
                }
            }
        }
        constraints.push(RawConstraint::Binary { x: u, y: v, pairs });
    }
    let raw = RawInstance::new(Arc::new(algebra.clone()), variables, constraints)?;
    let inst = two_three_consistency(&raw)?;

    // frozen expectations; these hold by construction and are re-verified
    // so the fixture can never silently drift
    let full: Vec<Element> = (0..5).collect();
    if inst.potatoes().iter().any(|p| *p != full) {
        return Err(Error::InternalInconsistency(
            "counterexample potatoes are not the full universe".into(),
        ));
    }
    if !inst.validate_standard().is_standard() {
        return Err(Error::InternalInconsistency(
            "counterexample instance is not standard".into(),
        ));
    }
    match inst.brute_force_solve()? {
        Some(s) if s == Assignment(vec![0, 0, 0, 0]) => {}
        other => {
            return Err(Error::InternalInconsistency(format!(
                "counterexample solution set changed: {other:?}"
            )));
        }
    }
    let group_block: Vec<Element> = (1..=4).collect();
    let z_restricted = inst.restrict(&vec![group_block; 4])?;
    if z_restricted.brute_force_solve()?.is_some() {
        return Err(Error::InternalInconsistency(
            "counterexample group-block restriction became solvable".into(),
        ));
    }
    Ok((algebra, dot, inst))
}
