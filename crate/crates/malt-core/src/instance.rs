//! CSP instances over a fixed finite algebra.
//!
//! An [`Instance`] keeps one potato (element subset) per variable and one
//! binary relation per ordered variable pair. Construction validates the
//! structural invariants: every relation sits inside the product of its
//! potatoes, every potato is a subuniverse of the ambient algebra, and every
//! relation is a subuniverse of its square.
//!
//! [`two_three_consistency`] turns an arbitrary [`RawInstance`] into a
//! standard instance with the same solutions, by initializing full relations,
//! folding in the constraints, and deleting pairs without triangle support
//! until the fixpoint.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{for_each_tuple, is_subuniverse, Element, ElementSet, FiniteAlgebra, Term};
use crate::error::{Error, Result};

/// Default bound on the assignment search space for brute force.
pub const BRUTE_FORCE_BOUND: u128 = 10_000_000;

pub type Pair = (Element, Element);

/// An assignment of one element per variable, in variable-list order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(pub Vec<Element>);

impl Assignment {
    pub fn get(&self, var: usize) -> Element {
        self.0[var]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn pair_in(rel: &[Pair], pair: Pair) -> bool {
    rel.binary_search(&pair).is_ok()
}

fn normalize_pairs(mut pairs: Vec<Pair>) -> Vec<Pair> {
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

fn invert_pairs(pairs: &[Pair]) -> Vec<Pair> {
    normalize_pairs(pairs.iter().map(|&(a, b)| (b, a)).collect())
}

/// Closure check for a pair set under the componentwise action of `alg`.
fn pair_set_closure_violation(alg: &FiniteAlgebra, rel: &[Pair]) -> Option<(String, Pair)> {
    let mut violation = None;
    for (op_idx, (name, arity)) in alg.signature().symbols().iter().enumerate() {
        for_each_tuple(rel.len(), *arity, &mut |idxs| {
            let mut firsts = Vec::with_capacity(*arity);
            let mut seconds = Vec::with_capacity(*arity);
            for &i in idxs {
                firsts.push(rel[i].0);
                seconds.push(rel[i].1);
            }
            let out = (
                alg.eval_op_idx(op_idx, &firsts),
                alg.eval_op_idx(op_idx, &seconds),
            );
            if !pair_in(rel, out) {
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

/// A CSP instance: variables, potatoes, and one relation per ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    ambient: Arc<FiniteAlgebra>,
    variables: Vec<String>,
    potatoes: Vec<ElementSet>,
    relations: Vec<Vec<Pair>>,
}

impl Instance {
    pub fn new(
        ambient: Arc<FiniteAlgebra>,
        variables: Vec<String>,
        potatoes: Vec<Vec<Element>>,
        relations: Vec<Vec<Pair>>,
    ) -> Result<Self> {
        let k = variables.len();
        for (i, name) in variables.iter().enumerate() {
            if variables[..i].contains(name) {
                return Err(Error::MalformedInstance(format!(
                    "duplicate variable name `{name}`"
                )));
            }
        }
        if potatoes.len() != k {
            return Err(Error::MalformedInstance(format!(
                "{} potatoes for {k} variables",
                potatoes.len()
            )));
        }
        if relations.len() != k * k {
            return Err(Error::MalformedInstance(format!(
                "{} relations for {k} variables (need {})",
                relations.len(),
                k * k
            )));
        }
        let d = ambient.size();
        let potatoes: Vec<ElementSet> = potatoes
            .into_iter()
            .map(crate::algebra::normalize_set)
            .collect();
        for potato in &potatoes {
            if let Some(&a) = potato.iter().find(|&&a| a >= d) {
                return Err(Error::ElementOutOfRange { element: a, size: d });
            }
        }
        let relations: Vecs = relations.into_iter().map(normalize_pairs).collect();
        let inst = Instance {
            ambient,
            variables,
            potatoes,
            relations,
        };
        inst.validate_structure()?;
        Ok(inst)
    }

    fn validate_structure(&self) -> Result<()> {
        let k = self.num_vars();
        let d = self.ambient.size();
        for x in 0..k {
            let potato = &self.potatoes[x];
            // full universes are trivially closed
            if potato.len() < d && !is_subuniverse(&self.ambient, potato) {
                return Err(Error::MalformedInstance(format!(
                    "potato of variable {x} is not a subuniverse"
                )));
            }
        }
        for x in 0..k {
            for y in 0..k {
                let rel = self.relation(x, y);
                for &(a, b) in rel {
                    if self.potatoes[x].binary_search(&a).is_err()
                        || self.potatoes[y].binary_search(&b).is_err()
                    {
                        return Err(Error::MalformedInstance(format!(
                            "relation ({x},{y}) contains ({a},{b}) outside its potatoes"
                        )));
                    }
                }
                // a full product of subuniverse potatoes is closed
                if rel.len() == self.potatoes[x].len() * self.potatoes[y].len() {
                    continue;
                }
                if let Some((symbol, pair)) = pair_set_closure_violation(&self.ambient, rel) {
                    return Err(Error::MalformedInstance(format!(
                        "relation ({x},{y}) is not a subuniverse: `{symbol}` escapes to {pair:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The instance with every potato full and every off-diagonal relation
    /// the full product.
    pub fn full(ambient: Arc<FiniteAlgebra>, variables: Vec<String>) -> Result<Self> {
        let k = variables.len();
        let d = ambient.size();
        let all: ElementSet = (0..d).collect();
        let full_rel: Vec<Pair> = (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .collect();
        let diag: Vec<Pair> = (0..d).map(|a| (a, a)).collect();
        let mut relations = Vec::with_capacity(k * k);
        for x in 0..k {
            for y in 0..k {
                relations.push(if x == y { diag.clone() } else { full_rel.clone() });
            }
        }
        Instance::new(ambient, variables, vec![all; k], relations)
    }

    pub fn ambient(&self) -> &Arc<FiniteAlgebra> {
        &self.ambient
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn potato(&self, x: usize) -> &ElementSet {
        &self.potatoes[x]
    }

    pub fn potatoes(&self) -> &[ElementSet] {
        &self.potatoes
    }

    pub fn relation(&self, x: usize, y: usize) -> &[Pair] {
        &self.relations[x * self.num_vars() + y]
    }

    /// True iff some potato is empty (for standard instances: all of them).
    pub fn is_empty_instance(&self) -> bool {
        self.num_vars() > 0 && self.potatoes.iter().any(|p| p.is_empty())
    }

    pub fn total_potato_size(&self) -> usize {
        self.potatoes.iter().map(|p| p.len()).sum()
    }

    /// Diagnostic check of the four standard-instance conditions, with a
    /// concrete witness for each failure.
    pub fn validate_standard(&self) -> StandardReport {
        let k = self.num_vars();
        let mut report = StandardReport {
            empty: self.is_empty_instance(),
            diagonal: None,
            triangle_support: None,
            subdirect: None,
            symmetric: None,
        };

        // diagonal: R_xx is exactly the diagonal of P_x
        'diag: for x in 0..k {
            let rel = self.relation(x, x);
            for &(a, b) in rel {
                if a != b {
                    report.diagonal = Some(DiagonalWitness { var: x, pair: (a, b) });
                    break 'diag;
                }
            }
            for &a in &self.potatoes[x] {
                if !pair_in(rel, (a, a)) {
                    report.diagonal = Some(DiagonalWitness { var: x, pair: (a, a) });
                    break 'diag;
                }
            }
        }

        // triangle support: every pair of every relation extends to every
        // third variable
        'tri: for x in 0..k {
            for y in 0..k {
                for z in 0..k {
                    for &(a, b) in self.relation(x, y) {
                        let supported = self.potatoes[z].iter().any(|&c| {
                            pair_in(self.relation(x, z), (a, c))
                                && pair_in(self.relation(y, z), (b, c))
                        });
                        if !supported {
                            report.triangle_support = Some(TriangleWitness {
                                x,
                                y,
                                z,
                                pair: (a, b),
                            });
                            break 'tri;
                        }
                    }
                }
            }
        }

        // subdirectness: both projections of R_xy cover their potatoes
        'sub: for x in 0..k {
            for y in 0..k {
                if self.potatoes[x].is_empty() || self.potatoes[y].is_empty() {
                    continue;
                }
                let rel = self.relation(x, y);
                for &a in &self.potatoes[x] {
                    if !rel.iter().any(|&(u, _)| u == a) {
                        report.subdirect = Some(SubdirectWitness {
                            x,
                            y,
                            element: a,
                            side: 0,
                        });
                        break 'sub;
                    }
                }
                for &b in &self.potatoes[y] {
                    if !rel.iter().any(|&(_, v)| v == b) {
                        report.subdirect = Some(SubdirectWitness {
                            x,
                            y,
                            element: b,
                            side: 1,
                        });
                        break 'sub;
                    }
                }
            }
        }

        // symmetry: R_yx is the converse of R_xy
        'sym: for x in 0..k {
            for y in 0..k {
                let inv = invert_pairs(self.relation(x, y));
                if inv != self.relation(y, x) {
                    let pair = inv
                        .iter()
                        .find(|p| !pair_in(self.relation(y, x), **p))
                        .or_else(|| {
                            self.relation(y, x).iter().find(|p| !pair_in(&inv, **p))
                        })
                        .copied()
                        .unwrap_or((0, 0));
                    report.symmetric = Some(SymmetricWitness { x, y, pair });
                    break 'sym;
                }
            }
        }

        report
    }

    /// Shrink potatoes and intersect relations accordingly. Each new potato
    /// must be contained in the old one.
    pub fn restrict(&self, new_potatoes: &[ElementSet]) -> Result<Instance> {
        let k = self.num_vars();
        if new_potatoes.len() != k {
            return Err(Error::MalformedInstance(format!(
                "{} potatoes for {k} variables",
                new_potatoes.len()
            )));
        }
        let new_potatoes: Vec<ElementSet> = new_potatoes
            .iter()
            .map(|p| crate::algebra::normalize_set(p.clone()))
            .collect();
        for (x, potato) in new_potatoes.iter().enumerate() {
            for &a in potato {
                if self.potatoes[x].binary_search(&a).is_err() {
                    return Err(Error::PotatoNotContained { var: x, element: a });
                }
            }
        }
        let mut relations = Vec::with_capacity(k * k);
        for x in 0..k {
            for y in 0..k {
                relations.push(
                    self.relation(x, y)
                        .iter()
                        .filter(|&&(a, b)| {
                            new_potatoes[x].binary_search(&a).is_ok()
                                && new_potatoes[y].binary_search(&b).is_ok()
                        })
                        .copied()
                        .collect(),
                );
            }
        }
        Instance::new(
            self.ambient.clone(),
            self.variables.clone(),
            new_potatoes,
            relations,
        )
    }

    /// True iff `asg` lands in every potato and every relation.
    pub fn is_solution(&self, asg: &Assignment) -> Result<bool> {
        let k = self.num_vars();
        if asg.len() != k {
            return Err(Error::AssignmentLengthMismatch {
                expected: k,
                got: asg.len(),
            });
        }
        for x in 0..k {
            if self.potatoes[x].binary_search(&asg.get(x)).is_err() {
                return Ok(false);
            }
        }
        for x in 0..k {
            for y in 0..k {
                if !pair_in(self.relation(x, y), (asg.get(x), asg.get(y))) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Exact backtracking search returning the lexicographically least
    /// solution, or none. Refuses when the assignment space exceeds the
    /// default bound.
    pub fn brute_force_solve(&self) -> Result<Option<Assignment>> {
        self.brute_force_solve_bounded(BRUTE_FORCE_BOUND)
    }

    pub fn brute_force_solve_bounded(&self, bound: u128) -> Result<Option<Assignment>> {
        self.check_search_space(bound)?;
        let mut partial = Vec::with_capacity(self.num_vars());
        Ok(self.search_first(&mut partial))
    }

    fn check_search_space(&self, bound: u128) -> Result<()> {
        let mut space: u128 = 1;
        for p in &self.potatoes {
            space = space.saturating_mul(p.len() as u128);
        }
        if space > bound {
            return Err(Error::SearchSpaceExceeded { space, bound });
        }
        Ok(())
    }

    fn prefix_consistent(&self, partial: &[Element], x: usize, a: Element) -> bool {
        if !pair_in(self.relation(x, x), (a, a)) {
            return false;
        }
        for (y, &b) in partial.iter().enumerate() {
            if !pair_in(self.relation(y, x), (b, a)) || !pair_in(self.relation(x, y), (a, b)) {
                return false;
            }
        }
        true
    }

    fn search_first(&self, partial: &mut Vec<Element>) -> Option<Assignment> {
        let x = partial.len();
        if x == self.num_vars() {
            return Some(Assignment(partial.clone()));
        }
        for i in 0..self.potatoes[x].len() {
            let a = self.potatoes[x][i];
            if self.prefix_consistent(partial, x, a) {
                partial.push(a);
                if let Some(found) = self.search_first(partial) {
                    return Some(found);
                }
                partial.pop();
            }
        }
        None
    }

    /// All solutions in lexicographic order, or `None` when there are more
    /// than `cap`.
    pub fn enumerate_solutions(&self, cap: usize) -> Result<Option<Vec<Assignment>>> {
        self.check_search_space(BRUTE_FORCE_BOUND)?;
        let mut out = Vec::new();
        let mut partial = Vec::with_capacity(self.num_vars());
        let complete = self.search_all(&mut partial, cap, &mut out);
        Ok(if complete { Some(out) } else { None })
    }

    fn search_all(&self, partial: &mut Vec<Element>, cap: usize, out: &mut Vec<Assignment>) -> bool {
        let x = partial.len();
        if x == self.num_vars() {
            if out.len() == cap {
                return false;
            }
            out.push(Assignment(partial.clone()));
            return true;
        }
        for i in 0..self.potatoes[x].len() {
            let a = self.potatoes[x][i];
            if self.prefix_consistent(partial, x, a) {
                partial.push(a);
                let ok = self.search_all(partial, cap, out);
                partial.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    /// Test hook: the pointwise dot of two solutions is again a solution
    /// whenever relations are subuniverses.
    pub fn solution_closure_check(
        &self,
        s1: &Assignment,
        s2: &Assignment,
        dot: &Term,
    ) -> Result<bool> {
        for (name, s) in [("first", s1), ("second", s2)] {
            if !self.is_solution(s)? {
                return Err(Error::NotASolution(format!("{name} argument")));
            }
        }
        let combined = self.pointwise_dot(s1, s2, dot)?;
        self.is_solution(&combined)
    }

    /// Pointwise `dot` of two assignments.
    pub fn pointwise_dot(&self, s1: &Assignment, s2: &Assignment, dot: &Term) -> Result<Assignment> {
        let mut out = Vec::with_capacity(self.num_vars());
        for x in 0..self.num_vars() {
            out.push(self.ambient.eval_term(dot, &[s1.get(x), s2.get(x)])?);
        }
        Ok(Assignment(out))
    }
}

type Vecs = Vec<Vec<Pair>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiagonalWitness {
    pub var: usize,
    pub pair: Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TriangleWitness {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub pair: Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubdirectWitness {
    pub x: usize,
    pub y: usize,
    pub element: Element,
    /// 0 when the first projection misses the element, 1 for the second.
    pub side: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SymmetricWitness {
    pub x: usize,
    pub y: usize,
    pub pair: Pair,
}

/// Outcome of the standardness check: a witness per violated condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StandardReport {
    pub empty: bool,
    pub diagonal: Option<DiagonalWitness>,
    pub triangle_support: Option<TriangleWitness>,
    pub subdirect: Option<SubdirectWitness>,
    pub symmetric: Option<SymmetricWitness>,
}

impl StandardReport {
    pub fn is_standard(&self) -> bool {
        self.diagonal.is_none()
            && self.triangle_support.is_none()
            && self.subdirect.is_none()
            && self.symmetric.is_none()
    }

    pub fn first_failure(&self) -> Option<String> {
        if let Some(w) = &self.diagonal {
            return Some(format!("diagonal fails at variable {} with {:?}", w.var, w.pair));
        }
        if let Some(w) = &self.triangle_support {
            return Some(format!(
                "triangle support fails for {:?} in relation ({},{}) at variable {}",
                w.pair, w.x, w.y, w.z
            ));
        }
        if let Some(w) = &self.subdirect {
            return Some(format!(
                "subdirectness fails in relation ({},{}): element {} uncovered",
                w.x, w.y, w.element
            ));
        }
        if let Some(w) = &self.symmetric {
            return Some(format!(
                "symmetry fails between relations ({},{}) and ({},{}) at {:?}",
                w.x, w.y, w.y, w.x, w.pair
            ));
        }
        None
    }
}

/// One constraint of a raw instance: a unary domain restriction or a binary
/// relation on an ordered pair of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawConstraint {
    Unary { var: usize, allowed: ElementSet },
    Binary { x: usize, y: usize, pairs: Vec<Pair> },
}

/// A general binary CSP input, before consistency: a constraint list over an
/// ambient algebra. Every constraint relation must be a subuniverse of the
/// matching power of the ambient algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInstance {
    ambient: Arc<FiniteAlgebra>,
    variables: Vec<String>,
    constraints: Vec<RawConstraint>,
}

impl RawInstance {
    pub fn new(
        ambient: Arc<FiniteAlgebra>,
        variables: Vec<String>,
        constraints: Vec<RawConstraint>,
    ) -> Result<Self> {
        let k = variables.len();
        for (i, name) in variables.iter().enumerate() {
            if variables[..i].contains(name) {
                return Err(Error::MalformedInstance(format!(
                    "duplicate variable name `{name}`"
                )));
            }
        }
        let d = ambient.size();
        let mut normalized = Vec::with_capacity(constraints.len());
        for c in constraints {
            match c {
                RawConstraint::Unary { var, allowed } => {
                    if var >= k {
                        return Err(Error::MalformedInstance(format!(
                            "constraint on unknown variable {var}"
                        )));
                    }
                    let allowed = crate::algebra::normalize_set(allowed);
                    if let Some(&a) = allowed.iter().find(|&&a| a >= d) {
                        return Err(Error::ElementOutOfRange { element: a, size: d });
                    }
                    if !is_subuniverse(&ambient, &allowed) {
                        return Err(Error::MalformedInstance(format!(
                            "unary constraint on variable {var} is not a subuniverse"
                        )));
                    }
                    normalized.push(RawConstraint::Unary { var, allowed });
                }
                RawConstraint::Binary { x, y, pairs } => {
                    if x >= k || y >= k {
                        return Err(Error::MalformedInstance(format!(
                            "constraint on unknown variable pair ({x},{y})"
                        )));
                    }
                    let pairs = normalize_pairs(pairs);
                    for &(a, b) in &pairs {
                        let bad = if a >= d { Some(a) } else if b >= d { Some(b) } else { None };
                        if let Some(e) = bad {
                            return Err(Error::ElementOutOfRange { element: e, size: d });
                        }
                    }
                    if let Some((symbol, pair)) = pair_set_closure_violation(&ambient, &pairs) {
                        return Err(Error::MalformedInstance(format!(
                            "binary constraint on ({x},{y}) is not a subuniverse: `{symbol}` escapes to {pair:?}"
                        )));
                    }
                    normalized.push(RawConstraint::Binary { x, y, pairs });
                }
            }
        }
        Ok(RawInstance {
            ambient,
            variables,
            constraints: normalized,
        })
    }

    pub fn ambient(&self) -> &Arc<FiniteAlgebra> {
        &self.ambient
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn constraints(&self) -> &[RawConstraint] {
        &self.constraints
    }

    /// The naive instance with the same solutions: potatoes cut by unary
    /// constraints, relations the intersections of the binary ones. This is
    /// the oracle-side reading of the constraint list; no consistency is run.
    pub fn to_direct_instance(&self) -> Result<Instance> {
        let k = self.num_vars();
        let d = self.ambient.size();
        let mut potatoes: Vec<ElementSet> = vec![(0..d).collect(); k];
        for c in &self.constraints {
            if let RawConstraint::Unary { var, allowed } = c {
                potatoes[*var].retain(|a| allowed.binary_search(a).is_ok());
            }
        }
        let full: Vec<Pair> = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).collect();
        let mut relations: Vec<Vec<Pair>> = Vec::with_capacity(k * k);
        for x in 0..k {
            for y in 0..k {
                relations.push(if x == y {
                    (0..d).map(|a| (a, a)).collect()
                } else {
                    full.clone()
                });
            }
        }
        for c in &self.constraints {
            if let RawConstraint::Binary { x, y, pairs } = c {
                if x == y {
                    relations[x * k + y].retain(|&(a, b)| a == b && pair_in(pairs, (a, a)));
                } else {
                    relations[x * k + y].retain(|p| pair_in(pairs, *p));
                    let inv = invert_pairs(pairs);
                    relations[y * k + x].retain(|p| pair_in(&inv, *p));
                }
            }
        }
        // cut relations down to the potato products
        for x in 0..k {
            for y in 0..k {
                let (px, py) = (potatoes[x].clone(), potatoes[y].clone());
                relations[x * k + y].retain(|&(a, b)| {
                    px.binary_search(&a).is_ok() && py.binary_search(&b).is_ok()
                });
            }
        }
        Instance::new(
            self.ambient.clone(),
            self.variables.clone(),
            potatoes,
            relations,
        )
    }

    /// Exact solvability of the raw constraint list, via the direct instance.
    pub fn brute_force_solve(&self) -> Result<Option<Assignment>> {
        self.to_direct_instance()?.brute_force_solve()
    }
}

/// Deletion counts from a consistency run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsistencyStats {
    pub deletions: usize,
    pub sweeps: usize,
}

/// Run the (2,3)-consistency procedure on a raw instance. The output has the
/// same solutions and is standard or empty.
pub fn two_three_consistency(raw: &RawInstance) -> Result<Instance> {
    two_three_consistency_stats(raw).map(|(inst, _)| inst)
}

pub fn two_three_consistency_stats(raw: &RawInstance) -> Result<(Instance, ConsistencyStats)> {
    let d = raw.ambient.size();
    if d > 64 {
        return Err(Error::SizeBoundExceeded { size: d, bound: 64 });
    }
    let k = raw.num_vars();
    let full: u64 = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };

    // rel[x*k + y][a] = bitmask of b with (a,b) currently in R_xy
    let mut rel: Vec<Vec<u64>> = Vec::with_capacity(k * k);
    for x in 0..k {
        for y in 0..k {
            rel.push(if x == y {
                (0..d).map(|a| 1u64 << a).collect()
            } else {
                vec![full; d]
            });
        }
    }

    // fold the constraints and their converses
    for c in &raw.constraints {
        match c {
            RawConstraint::Unary { var, allowed } => {
                let mask: u64 = allowed.iter().fold(0, |m, &a| m | (1 << a));
                let rows = &mut rel[var * k + var];
                for (a, row) in rows.iter_mut().enumerate() {
                    if mask & (1 << a) == 0 {
                        *row = 0;
                    }
                }
            }
            RawConstraint::Binary { x, y, pairs } => {
                let mut fwd = vec![0u64; d];
                let mut bwd = vec![0u64; d];
                for &(a, b) in pairs {
                    fwd[a] |= 1 << b;
                    bwd[b] |= 1 << a;
                }
                {
                    let rows = &mut rel[x * k + y];
                    for (a, row) in rows.iter_mut().enumerate() {
                        *row &= fwd[a];
                    }
                }
                {
                    let rows = &mut rel[y * k + x];
                    for (b, row) in rows.iter_mut().enumerate() {
                        *row &= bwd[b];
                    }
                }
            }
        }
    }

    // triangle-support deletion to the fixpoint, in fixed scan order
    let mut deletions = 0usize;
    let mut sweeps = 0usize;
    let mut dirty = true;
    while dirty {
        dirty = false;
        sweeps += 1;
        for x in 0..k {
            for y in 0..k {
                for z in 0..k {
                    for a in 0..d {
                        let mut bits = rel[x * k + y][a];
                        while bits != 0 {
                            let b = bits.trailing_zeros() as usize;
                            bits &= bits - 1;
                            if rel[x * k + z][a] & rel[y * k + z][b] == 0 {
                                rel[x * k + y][a] &= !(1u64 << b);
                                rel[y * k + x][b] &= !(1u64 << a);
                                deletions += 1;
                                dirty = true;
                            }
                        }
                    }
                }
            }
        }
    }

    // potatoes are the first projections of the diagonal relations
    let mut potatoes = Vec::with_capacity(k);
    for x in 0..k {
        let rows = &rel[x * k + x];
        potatoes.push((0..d).filter(|&a| rows[a] != 0).collect::<Vec<_>>());
    }
    let mut relations = Vec::with_capacity(k * k);
    for x in 0..k {
        for y in 0..k {
            let rows = &rel[x * k + y];
            let mut pairs = Vec::new();
            for (a, row) in rows.iter().enumerate() {
                let mut bits = *row;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    pairs.push((a, b));
                }
            }
            relations.push(pairs);
        }
    }
    let inst = Instance::new(
        raw.ambient.clone(),
        raw.variables.clone(),
        potatoes,
        relations,
    )?;
    Ok((inst, ConsistencyStats { deletions, sweeps }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn meet_arc() -> Arc<FiniteAlgebra> {
        Arc::new(fixtures::meet_two())
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    #[test]
    fn full_instance_is_standard() {
        let inst = Instance::full(meet_arc(), names(3)).unwrap();
        let report = inst.validate_standard();
        assert!(report.is_standard());
        assert!(!report.empty);
    }

    #[test]
    fn empty_instance_is_standard_and_flagged() {
        let amb = meet_arc();
        let inst = Instance::new(amb, names(2), vec![vec![], vec![]], vec![vec![]; 4]).unwrap();
        let report = inst.validate_standard();
        assert!(report.is_standard());
        assert!(report.empty);
        assert_eq!(inst.brute_force_solve().unwrap(), None);
    }

    #[test]
    fn subdirectness_failure_has_a_witness() {
        let amb = meet_arc();
        // P = {0,1} on both variables but R_xy = {(1,1)}
        let inst = Instance::new(
            amb,
            names(2),
            vec![vec![0, 1], vec![0, 1]],
            vec![
                vec![(0, 0), (1, 1)],
                vec![(1, 1)],
                vec![(1, 1)],
                vec![(0, 0), (1, 1)],
            ],
        )
        .unwrap();
        let report = inst.validate_standard();
        assert!(!report.is_standard());
        let w = report.subdirect.unwrap();
        assert_eq!(w.element, 0);
    }

    #[test]
    fn consistency_with_no_constraints_is_full() {
        let amb = meet_arc();
        let raw = RawInstance::new(amb.clone(), names(3), vec![]).unwrap();
        let inst = two_three_consistency(&raw).unwrap();
        assert_eq!(inst, Instance::full(amb, names(3)).unwrap());
    }

    #[test]
    fn consistency_propagates_a_singleton() {
        let amb = meet_arc();
        let raw = RawInstance::new(
            amb,
            vec!["x".into(), "y".into()],
            vec![RawConstraint::Binary {
                x: 0,
                y: 1,
                pairs: vec![(1, 1)],
            }],
        )
        .unwrap();
        let inst = two_three_consistency(&raw).unwrap();
        assert_eq!(inst.potato(0), &vec![1]);
        assert_eq!(inst.potato(1), &vec![1]);
        assert_eq!(inst.relation(0, 1), &[(1, 1)]);
        assert!(inst.validate_standard().is_standard());
    }

    #[test]
    fn consistency_detects_plain_unsolvability() {
        let amb = meet_arc();
        // x must be 0 and 1 at the same time
        let raw = RawInstance::new(
            amb,
            names(2),
            vec![
                RawConstraint::Unary { var: 0, allowed: vec![0] },
                RawConstraint::Binary { x: 0, y: 1, pairs: vec![(1, 1)] },
            ],
        )
        .unwrap();
        assert_eq!(raw.brute_force_solve().unwrap(), None);
        let inst = two_three_consistency(&raw).unwrap();
        assert!(inst.is_empty_instance());
        assert!(inst.validate_standard().is_standard());
    }

    #[test]
    fn consistency_folds_diagonal_binary_constraints() {
        let amb = meet_arc();
        let raw = RawInstance::new(
            amb,
            names(2),
            vec![RawConstraint::Binary {
                x: 0,
                y: 0,
                pairs: vec![(0, 0)],
            }],
        )
        .unwrap();
        let inst = two_three_consistency(&raw).unwrap();
        assert_eq!(inst.potato(0), &vec![0]);
        assert_eq!(inst.potato(1), &vec![0, 1]);
    }

    #[test]
    fn restrict_examples() {
        let inst = Instance::full(meet_arc(), names(2)).unwrap();
        let same = inst.restrict(&[vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(same, inst);

        let shrunk = inst.restrict(&[vec![0], vec![0]]).unwrap();
        assert_eq!(shrunk.relation(0, 1), &[(0, 0)]);

        assert!(matches!(
            inst.restrict(&[vec![0, 1], vec![5]]),
            Err(Error::PotatoNotContained { .. })
        ));
    }

    #[test]
    fn solution_checks() {
        let inst = Instance::full(meet_arc(), names(2)).unwrap();
        assert!(inst.is_solution(&Assignment(vec![0, 1])).unwrap());
        assert!(matches!(
            inst.is_solution(&Assignment(vec![0])),
            Err(Error::AssignmentLengthMismatch { .. })
        ));

        let singleton = inst.restrict(&[vec![1], vec![0]]).unwrap();
        assert_eq!(
            singleton.brute_force_solve().unwrap(),
            Some(Assignment(vec![1, 0]))
        );
    }

    #[test]
    fn brute_force_bound_is_loud() {
        let inst = Instance::full(meet_arc(), names(3)).unwrap();
        assert!(matches!(
            inst.brute_force_solve_bounded(4),
            Err(Error::SearchSpaceExceeded { .. })
        ));
    }

    #[test]
    fn closure_of_solutions() {
        let inst = Instance::full(meet_arc(), names(3)).unwrap();
        let dot = Term::app("meet", vec![Term::var(0), Term::var(1)]);
        let s1 = Assignment(vec![0, 1, 1]);
        let s2 = Assignment(vec![1, 0, 1]);
        assert!(inst.solution_closure_check(&s1, &s1, &dot).unwrap());
        assert!(inst.solution_closure_check(&s1, &s2, &dot).unwrap());

        let singleton = inst.restrict(&[vec![0], vec![0], vec![0]]).unwrap();
        let bad = Assignment(vec![1, 1, 1]);
        assert!(matches!(
            singleton.solution_closure_check(&bad, &bad, &dot),
            Err(Error::NotASolution(_))
        ));
    }

    #[test]
    fn enumerate_solutions_caps() {
        let inst = Instance::full(meet_arc(), names(2)).unwrap();
        let all = inst.enumerate_solutions(10).unwrap().unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(inst.enumerate_solutions(3).unwrap(), None);
    }

    #[test]
    fn raw_constraints_must_be_subuniverses() {
        let amb = meet_arc();
        // {(0,1)} is not closed under meet: (0,1)∧(0,1)... it is closed;
        // {(0,1),(1,0)} is not: meet gives (0,0)
        let err = RawInstance::new(
            amb,
            names(2),
            vec![RawConstraint::Binary {
                x: 0,
                y: 1,
                pairs: vec![(0, 1), (1, 0)],
            }],
        );
        assert!(matches!(err, Err(Error::MalformedInstance(_))));
    }

    #[test]
    fn solutions_survive_consistency() {
        let amb = Arc::new(fixtures::rps());
        let raw = RawInstance::new(
            amb,
            names(3),
            vec![
                RawConstraint::Binary { x: 0, y: 1, pairs: vec![(0, 0), (1, 1), (2, 2)] },
                RawConstraint::Unary { var: 2, allowed: vec![1] },
            ],
        )
        .unwrap();
        let direct = raw.to_direct_instance().unwrap();
        let inst = two_three_consistency(&raw).unwrap();
        let direct_sols = direct.enumerate_solutions(100).unwrap().unwrap();
        let inst_sols = inst.enumerate_solutions(100).unwrap().unwrap();
        assert_eq!(direct_sols, inst_sols);
        assert!(!direct_sols.is_empty());
    }
}
