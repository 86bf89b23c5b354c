//! Acceptance suite. Each test covers one shipping criterion, pins its
//! tolerances in code, and prints a `PASS:` line with the measured numbers
//! (visible with `cargo test --test acceptance -- --nocapture`).

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{standard_corpus, walkers_to};
use malt_core::algebra::{self, Element, FiniteAlgebra, Term};
use malt_core::bulatov::{bulatov_solution, verify_walk_to_bulatov};
use malt_core::congruence::{all_congruences, is_congruence, Partition};
use malt_core::digraph::{
    build_digraph, check_binary_absorption_free, is_strongly_connected, minimal_component, scc,
};
use malt_core::fixtures;
use malt_core::instance::{two_three_consistency, Instance};
use malt_core::maltsev::{self, hypothesis_check, main_solve};
use malt_core::subuniverse_closure;

const TWO_SEMILATTICE_CORPUS: &[&str] = &[
    "meet2",
    "chain3",
    "rps",
    "rps-bottom",
    "tournament5",
    "meet2x2",
];

/// Criterion: over at least 500 random nonempty standard instances on
/// 2-semilattice fixtures (universe ≤ 5, ≤ 6 variables), the constructive
/// solver returns an assignment that solves the instance, every time, within
/// 60 seconds overall.
#[test]
fn solver_solves_every_random_standard_instance() {
    let started = Instant::now();
    let corpus = standard_corpus(TWO_SEMILATTICE_CORPUS, 84, 6, 0xacce_0001);
    assert!(corpus.len() >= 500, "corpus too small: {}", corpus.len());
    let mut solved = 0;
    for case in &corpus {
        let (assignment, trace) = bulatov_solution(&case.instance, &case.dot)
            .unwrap_or_else(|e| panic!("solver failed on a {} instance: {e}", case.fixture));
        assert!(
            case.instance.is_solution(&assignment).unwrap(),
            "output is not a solution on a {} instance",
            case.fixture
        );
        assert!(trace.steps.len() <= 2 * case.instance.total_potato_size());
        solved += 1;
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "took {elapsed:?}, budget is 60s"
    );
    println!(
        "PASS: constructive solver solved {solved}/{} random standard instances in {elapsed:?}",
        corpus.len()
    );
}

/// Criterion: for at least 100 instances with solution sets of size at most
/// 10^4, every brute-force solution has a directed walk to the computed
/// canonical solution, every time.
#[test]
fn every_solution_walks_to_the_canonical_solution() {
    let corpus = standard_corpus(TWO_SEMILATTICE_CORPUS, 20, 5, 0xacce_0002);
    let mut instances_checked = 0;
    let mut walks_checked = 0usize;
    for case in &corpus {
        let Some(solutions) = case.instance.enumerate_solutions(10_000).unwrap() else {
            continue;
        };
        let (canonical, _) = bulatov_solution(&case.instance, &case.dot).unwrap();
        let reached = walkers_to(&case.instance, &case.dot, &solutions, &canonical);
        for (i, ok) in reached.iter().enumerate() {
            assert!(
                ok,
                "{}: solution {:?} has no walk to the canonical solution",
                case.fixture, solutions[i]
            );
        }
        // exercise the public walk oracle on a sample
        for s in solutions.iter().take(3) {
            assert!(verify_walk_to_bulatov(&case.instance, &case.dot, s, &canonical).unwrap());
        }
        walks_checked += solutions.len();
        instances_checked += 1;
    }
    assert!(
        instances_checked >= 100,
        "only {instances_checked} instances within the solution-set bound"
    );
    println!(
        "PASS: {walks_checked} solutions across {instances_checked} instances all walk to the canonical solution"
    );
}

/// Criterion: on at least 500 random raw instances, consistency output is
/// standard or empty AND solvability agrees with brute force, every time,
/// with each instance processed in under 100 ms.
#[test]
fn consistency_contract_on_random_raw_instances() {
    let names = [
        "meet2",
        "chain3",
        "rps",
        "rps-bottom",
        "tournament5",
        "meet2x2",
        "counterexample",
        "blocks-top",
    ];
    let mut total = 0;
    let mut slowest = Duration::ZERO;
    for (fi, name) in names.iter().enumerate() {
        let entry = fixtures::fixture(name).unwrap();
        let raws = common::raw_corpus(&entry, 63, 6, 0xacce_0003 ^ fi as u64);
        for raw in &raws {
            let started = Instant::now();
            let inst = two_three_consistency(raw).unwrap();
            let elapsed = started.elapsed();
            slowest = slowest.max(elapsed);
            assert!(
                elapsed < Duration::from_millis(100),
                "{name}: consistency took {elapsed:?}"
            );
            assert!(
                inst.validate_standard().is_standard(),
                "{name}: output neither standard nor empty"
            );
            let direct = raw.brute_force_solve().unwrap();
            let after = inst.brute_force_solve().unwrap();
            assert_eq!(
                direct.is_some(),
                after.is_some(),
                "{name}: consistency changed solvability"
            );
            if let Some(s) = &after {
                assert!(raw.to_direct_instance().unwrap().is_solution(s).unwrap());
            }
            if let Some(s) = &direct {
                assert!(inst.is_solution(s).unwrap());
            }
            total += 1;
        }
    }
    assert!(total >= 500);
    println!(
        "PASS: consistency contract held on {total} raw instances (slowest {slowest:?})"
    );
}

/// Criterion: on at least 200 random instances over the hypothesis-satisfying
/// block-family fixtures (affine cubes over a 2-semilattice quotient,
/// exchange identity verified before inclusion), the quotient-then-block
/// verdict equals brute force, every time.
#[test]
fn quotient_then_block_verdict_matches_brute_force() {
    let family = ["blocks-top", "blocks-meet2", "blocks-rps"];
    for name in family {
        let entry = fixtures::fixture(name).unwrap();
        let report = hypothesis_check(&entry.algebra, &entry.dot).unwrap();
        assert!(report.all_pass(), "{name} must satisfy every hypothesis");
    }
    let mut corpus = standard_corpus(&family, 67, 5, 0xacce_0004);
    assert!(corpus.len() >= 200);
    // add linear coset systems over the two-cube fixture: one GF(2)
    // equation per variable pair, solvable exactly when the twists cancel
    let entry = fixtures::fixture("blocks-meet2").unwrap();
    let ambient = Arc::new(entry.algebra.clone());
    for pattern in 0u8..24 {
        let twists: Vec<u8> = (0..6).map(|b| (pattern >> b) & 1).collect();
        let raw = coset_system_raw(&ambient, &twists);
        let inst = two_three_consistency(&raw).unwrap();
        assert!(!inst.is_empty_instance() && inst.validate_standard().is_standard());
        corpus.push(common::StandardCase {
            fixture: "blocks-meet2",
            instance: inst,
            dot: entry.dot.clone(),
        });
    }
    let solver = maltsev::default_block_solver();
    let (mut yes, mut no) = (0, 0);
    for case in &corpus {
        let outcome = main_solve(&case.instance, &case.dot, &solver).unwrap();
        let truth = case.instance.brute_force_solve().unwrap();
        assert_eq!(
            outcome.solvable,
            truth.is_some(),
            "verdict mismatch on a {} instance",
            case.fixture
        );
        assert!(!outcome.unsound_no_possible);
        if outcome.solvable {
            yes += 1;
            assert!(case
                .instance
                .is_solution(&outcome.witness.unwrap())
                .unwrap());
        } else {
            no += 1;
        }
    }
    assert!(no > 0, "corpus exercised no unsolvable instances");
    println!(
        "PASS: verdicts matched brute force on {} block-family instances ({yes} yes / {no} no)",
        corpus.len()
    );
}

/// One GF(2) equation per pair of four variables over the two-cube fixture,
/// functionals arranged by the edge coloring of the complete graph, the same
/// pattern in both blocks. The system is solvable exactly when the twists
/// sum to zero.
fn coset_system_raw(
    ambient: &Arc<FiniteAlgebra>,
    twists: &[u8],
) -> malt_core::RawInstance {
    let functionals: [fn(usize) -> usize; 3] =
        [|l| l >> 1, |l| l & 1, |l| (l >> 1) ^ (l & 1)];
    let edges = [(0, 1, 0), (2, 3, 0), (0, 2, 1), (1, 3, 1), (0, 3, 2), (1, 2, 2)];
    let variables: Vec<String> = (0..4).map(|i| format!("x{i}")).collect();
    let mut constraints = Vec::new();
    for (e, &(u, v, f)) in edges.iter().enumerate() {
        let func = functionals[f];
        let mut pairs = Vec::new();
        for la in 0..4 {
            for lb in 0..4 {
                if func(la) ^ func(lb) == twists[e] as usize {
                    pairs.push((la, lb));
                    pairs.push((4 + la, 4 + lb));
                }
            }
        }
        constraints.push(malt_core::RawConstraint::Binary { x: u, y: v, pairs });
    }
    malt_core::RawInstance::new(ambient.clone(), variables, constraints)
        .expect("coset relations are closed")
}

/// Criterion: the built-in counterexample reproduces exactly: the solver
/// answers NO with the unsound tag, brute force finds the all-top solution,
/// and the hypothesis report shows precisely the exchange identity failing.
#[test]
fn counterexample_reproduces_the_unsound_no() {
    let (algebra, dot, inst) = maltsev::build_counterexample().unwrap();
    let solver = maltsev::default_block_solver();
    let outcome = main_solve(&inst, &dot, &solver).unwrap();
    assert!(!outcome.solvable, "the algorithm must answer NO");
    assert!(outcome.unsound_no_possible, "the NO must carry the unsound tag");

    let oracle = inst.brute_force_solve().unwrap();
    assert_eq!(
        oracle,
        Some(malt_core::Assignment(vec![0, 0, 0, 0])),
        "brute force must find the all-top solution"
    );

    let report = hypothesis_check(&algebra, &dot).unwrap();
    assert!(report.idempotent);
    assert!(report.witness_congruence.is_some());
    assert_eq!(report.quotient_two_semilattice, Some(true));
    assert_eq!(report.projection_on_blocks, Some(true));
    assert!(!report.exchange_identity, "only the exchange identity may fail");
    println!("PASS: counterexample yields NO+unsound-tag against a brute-force YES, with exactly the exchange identity failing");
}

/// Criterion: the dot-digraph invariant suite holds exhaustively on every
/// built-in 2-semilattice fixture: loop/product edges, a unique minimal
/// component reachable from everywhere and characterized by reachability,
/// absorption of the minimal component, two-element semilattices on edges,
/// quotients of strongly connected algebras staying strongly connected, and
/// strong connectivity implying binary absorption-freeness.
#[test]
fn dot_digraph_invariant_suite() {
    let mut fixtures_checked = 0;
    for name in TWO_SEMILATTICE_CORPUS {
        let entry = fixtures::fixture(name).unwrap();
        let alg = &entry.algebra;
        let dot = &entry.dot;
        let n = alg.size();
        let dg = build_digraph(alg, dot).unwrap();
        let dotv = |a: Element, b: Element| alg.eval_term(dot, &[a, b]).unwrap();

        // every element loops; products absorb from both sides
        for a in 0..n {
            assert!(dg.has_edge(a, a), "{name}: missing loop at {a}");
            for b in 0..n {
                let ab = dotv(a, b);
                assert!(dg.has_edge(a, ab), "{name}: missing {a} -> {a}·{b}");
                assert!(dg.has_edge(b, ab), "{name}: missing {b} -> {a}·{b}");
            }
        }

        // unique minimal component, reachable from every vertex
        let minimal = minimal_component(&dg).unwrap();
        let reach_from = |start: Element| -> Vec<bool> {
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
            seen
        };
        let reachability: Vec<Vec<bool>> = (0..n).map(reach_from).collect();
        for b in 0..n {
            assert!(
                minimal.iter().any(|&a| dg.has_edge(b, a)),
                "{name}: no single edge from {b} into the minimal component"
            );
        }
        for a in 0..n {
            let universally_reachable = reachability.iter().all(|from_b| from_b[a]);
            assert_eq!(
                minimal.binary_search(&a).is_ok(),
                universally_reachable,
                "{name}: reachability characterization fails at {a}"
            );
        }

        // the minimal component absorbs under dot
        let reduct = algebra::binary_reduct(alg, dot, "dot").unwrap();
        for &a in &minimal {
            for b in 0..n {
                assert!(minimal.binary_search(&dotv(a, b)).is_ok());
                assert!(minimal.binary_search(&dotv(b, a)).is_ok());
            }
        }

        // each edge spans a two-element semilattice with the head absorbing
        for a in 0..n {
            for &b in dg.neighbors(a) {
                if a == b {
                    continue;
                }
                let closure = subuniverse_closure(&reduct, &[a, b]).unwrap();
                let mut expected = vec![a, b];
                expected.sort_unstable();
                assert_eq!(closure, expected, "{name}: edge {a}->{b} generates more");
                assert_eq!(dotv(a, b), b);
                assert_eq!(dotv(b, a), b);
            }
        }

        // quotients of strongly connected fixtures stay strongly connected
        if is_strongly_connected(&dg) {
            for cong in all_congruences(alg).unwrap() {
                let (qalg, _) = algebra::quotient_algebra(alg, &cong).unwrap();
                let qdg = build_digraph(&qalg, dot).unwrap();
                assert!(
                    is_strongly_connected(&qdg),
                    "{name}: quotient by {cong} breaks strong connectivity"
                );
            }
            // strong connectivity implies binary absorption-freeness
            assert!(
                check_binary_absorption_free(alg, dot).unwrap(),
                "{name}: strongly connected but has a binary absorbing subuniverse"
            );
        }

        // component order sanity: the decomposition exposes the same minimal
        let dec = scc(&dg);
        let minimal_ids = dec.minimal_components();
        assert_eq!(minimal_ids.len(), 1);
        assert_eq!(dec.components()[minimal_ids[0]], minimal);

        fixtures_checked += 1;
    }
    println!("PASS: digraph invariant suite held exhaustively on {fixtures_checked} fixtures");
}

/// Criterion: congruence enumeration equals brute-force filtering of all set
/// partitions, as exact set equality, on every fixture of size at most 6.
#[test]
fn congruence_enumeration_matches_partition_filter() {
    let mut algebras_checked = 0;
    let mut congruences_seen = 0;
    for entry in fixtures::all_fixtures() {
        let n = entry.algebra.size();
        if n > 6 {
            continue;
        }
        let enumerated = all_congruences(&entry.algebra).unwrap();
        let mut filtered: Vec<Partition> = all_partitions(n)
            .into_iter()
            .filter(|p| is_congruence(&entry.algebra, p).unwrap())
            .collect();
        filtered.sort();
        assert_eq!(
            enumerated, filtered,
            "{}: congruence lattices disagree",
            entry.name
        );
        congruences_seen += enumerated.len();
        algebras_checked += 1;
    }
    assert!(algebras_checked >= 6);
    println!(
        "PASS: congruence enumeration matched the partition filter on {algebras_checked} algebras ({congruences_seen} congruences)"
    );
}

/// All partitions of `0..n` via restricted growth strings.
fn all_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn recurse(rgs: &mut Vec<usize>, pos: usize, max_used: usize, out: &mut Vec<Partition>) {
        let n = rgs.len();
        if pos == n {
            let nblocks = max_used + 1;
            let mut blocks = vec![Vec::new(); nblocks];
            for (a, &b) in rgs.iter().enumerate() {
                blocks[b].push(a);
            }
            out.push(Partition::from_blocks(n, &blocks).unwrap());
            return;
        }
        for b in 0..=max_used + 1 {
            rgs[pos] = b;
            recurse(rgs, pos + 1, max_used.max(b), out);
        }
    }
    if n == 0 {
        return out;
    }
    recurse(&mut rgs, 1, 0, &mut out);
    out
}

/// Criterion: deriving a binary term from an edge term reproduces, exactly,
/// a first projection on the Maltsev side and a 2-semilattice operation on
/// the semilattice side, across the dependency-set cases.
#[test]
fn edge_term_derivation_contract() {
    let mut cases_checked = 0;

    // shared signature: a ternary edge symbol and a binary star symbol
    let ternary_pair = |t_table: Vec<Element>| -> (FiniteAlgebra, FiniteAlgebra) {
        let w_side = FiniteAlgebra::from_ops(
            2,
            vec![
                ("e", 3, vec![0, 1, 1, 0, 1, 0, 0, 1]), // x+y+z on Z2
                ("s", 2, vec![0, 0, 1, 1]),             // first projection
            ],
        )
        .unwrap();
        let t_side = FiniteAlgebra::from_ops(
            2,
            vec![("e", 3, t_table), ("s", 2, vec![0, 0, 0, 1])], // s = meet
        )
        .unwrap();
        (w_side, t_side)
    };

    let e = Term::app("e", (0..3).map(Term::var).collect());
    let star = Term::app("s", vec![Term::var(0), Term::var(1)]);
    let x = Term::var(0);

    // T-side interpretations of e with different dependency sets
    let t_tables: Vec<(Vec<Element>, Vec<usize>)> = vec![
        // min(x,y,z): depends on all three
        (vec![0, 0, 0, 0, 0, 0, 0, 1], vec![0, 1, 2]),
        // second projection: depends on {1}
        (vec![0, 0, 1, 1, 0, 0, 1, 1], vec![1]),
        // third projection: depends on {2}
        (vec![0, 1, 0, 1, 0, 1, 0, 1], vec![2]),
        // min(x,y): depends on {0,1}
        (vec![0, 0, 0, 0, 0, 0, 1, 1], vec![0, 1]),
        // min(x,z): depends on {0,2}
        (vec![0, 0, 0, 0, 0, 1, 0, 1], vec![0, 2]),
    ];
    for (t_table, expected_deps) in t_tables {
        let (w_side, t_side) = ternary_pair(t_table);
        assert!(w_side.is_edge_operation(&e, 2).unwrap());
        let deps = t_side.dependency_set(&e, 3).unwrap();
        assert_eq!(deps, expected_deps);
        let derived = algebra::derive_dot_term(&e, 2, &star, &deps, None).unwrap();
        assert!(
            w_side.check_identity(&derived, &x, 2).unwrap(),
            "derived term is not the first projection on the Maltsev side"
        );
        assert!(
            t_side.is_two_semilattice(&derived).unwrap(),
            "derived term is not a 2-semilattice operation on the semilattice side"
        );
        cases_checked += 1;
    }

    // a 3-edge (4-ary) pair: e = x1+x2+x3 on Z2, fourth projection on the
    // semilattice side
    let e4 = Term::app("e", (0..4).map(Term::var).collect());
    let mut w_table = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for _d in 0..2 {
                    w_table.push(a ^ b ^ c);
                }
            }
        }
    }
    let w_side = FiniteAlgebra::from_ops(
        2,
        vec![("e", 4, w_table), ("s", 2, vec![0, 0, 1, 1])],
    )
    .unwrap();
    let mut t_table = Vec::new();
    for _a in 0..2 {
        for _b in 0..2 {
            for _c in 0..2 {
                for d in 0..2 {
                    t_table.push(d);
                }
            }
        }
    }
    let t_side = FiniteAlgebra::from_ops(
        2,
        vec![("e", 4, t_table), ("s", 2, vec![0, 0, 0, 1])],
    )
    .unwrap();
    assert!(w_side.is_edge_operation(&e4, 3).unwrap());
    let deps = t_side.dependency_set(&e4, 4).unwrap();
    assert_eq!(deps, vec![3]);
    let derived = algebra::derive_dot_term(&e4, 3, &star, &deps, None).unwrap();
    assert!(w_side.check_identity(&derived, &x, 2).unwrap());
    assert!(t_side.is_two_semilattice(&derived).unwrap());
    cases_checked += 1;

    println!("PASS: edge-term derivation produced projection/2-semilattice terms in {cases_checked} dependency cases");
}

/// Criterion: consistency on 50 variables over a 4-element algebra with 200
/// random constraints finishes in under 10 seconds, and the constructive
/// solver on a 30-variable instance over the 3-cycle finishes in under 10
/// seconds.
#[test]
fn scale_smoke_consistency_and_solver() {
    let entry = fixtures::fixture("rps-bottom").unwrap();
    let ambient = Arc::new(entry.algebra.clone());
    let mut rng = fixtures::seeded_rng(0xacce_0009);
    let raw = fixtures::random_raw_instance(&ambient, 50, 200, &mut rng);
    let started = Instant::now();
    let inst = two_three_consistency(&raw).unwrap();
    let consistency_time = started.elapsed();
    assert!(
        consistency_time < Duration::from_secs(10),
        "consistency took {consistency_time:?}"
    );
    assert!(inst.validate_standard().is_standard());

    let entry = fixtures::fixture("rps").unwrap();
    let names = (0..30).map(|i| format!("x{i}")).collect();
    let big = Instance::full(Arc::new(entry.algebra.clone()), names).unwrap();
    let started = Instant::now();
    let (assignment, _) = bulatov_solution(&big, &entry.dot).unwrap();
    let solver_time = started.elapsed();
    assert!(
        solver_time < Duration::from_secs(10),
        "solver took {solver_time:?}"
    );
    assert!(big.is_solution(&assignment).unwrap());
    println!(
        "PASS: scale smoke finished (consistency {consistency_time:?} on 50 vars, solver {solver_time:?} on 30 vars)"
    );
}
