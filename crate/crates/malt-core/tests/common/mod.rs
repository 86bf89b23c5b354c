#![allow(dead_code)] // each test target uses a different subset

//! Shared helpers for the integration suites: deterministic corpora of
//! random standard instances over the built-in fixtures, and small
//! independent oracles.

use std::sync::Arc;

use malt_core::fixtures::{self, FixtureEntry};
use malt_core::instance::{two_three_consistency, Assignment, Instance, RawInstance};
use malt_core::Term;

pub struct StandardCase {
    pub fixture: &'static str,
    pub instance: Instance,
    pub dot: Term,
}

/// Raw instances over one fixture, deterministic in `seed`.
pub fn raw_corpus(entry: &FixtureEntry, count: usize, max_vars: usize, seed: u64) -> Vec<RawInstance> {
    let ambient = Arc::new(entry.algebra.clone());
    let mut rng = fixtures::seeded_rng(seed);
    (0..count)
        .map(|i| {
            let nvars = 2 + i % (max_vars - 1);
            let ncons = 1 + i % (nvars + 2);
            fixtures::random_raw_instance(&ambient, nvars, ncons, &mut rng)
        })
        .collect()
}

/// Nonempty standard instances over the named fixtures, `per_fixture` each,
/// produced by running consistency on random raw instances.
pub fn standard_corpus(
    names: &[&'static str],
    per_fixture: usize,
    max_vars: usize,
    seed: u64,
) -> Vec<StandardCase> {
    let mut out = Vec::new();
    for (fi, &name) in names.iter().enumerate() {
        let entry = fixtures::fixture(name).unwrap();
        let ambient = Arc::new(entry.algebra.clone());
        let mut rng = fixtures::seeded_rng(seed.wrapping_add(fi as u64));
        let mut found = 0;
        let mut attempts = 0;
        while found < per_fixture {
            attempts += 1;
            assert!(
                attempts <= per_fixture * 200,
                "could not generate {per_fixture} nonempty standard instances over {name}"
            );
            let nvars = 2 + attempts % (max_vars - 1);
            let ncons = 1 + attempts % (nvars + 2);
            let raw = fixtures::random_raw_instance(&ambient, nvars, ncons, &mut rng);
            let inst = two_three_consistency(&raw).unwrap();
            if inst.is_empty_instance() {
                continue;
            }
            assert!(
                inst.validate_standard().is_standard(),
                "consistency produced a nonempty non-standard instance over {name}"
            );
            out.push(StandardCase {
                fixture: name,
                instance: inst,
                dot: entry.dot.clone(),
            });
            found += 1;
        }
    }
    out
}

/// Every solution that has a directed walk to `target` in the solution
/// digraph (edge s → t iff pointwise s·t = t), by backward search from the
/// target.
pub fn walkers_to(
    inst: &Instance,
    dot: &Term,
    solutions: &[Assignment],
    target: &Assignment,
) -> Vec<bool> {
    let n = solutions.len();
    let target_idx = solutions
        .iter()
        .position(|s| s == target)
        .expect("target must be an enumerated solution");
    let mut reached = vec![false; n];
    reached[target_idx] = true;
    let mut queue = std::collections::VecDeque::from([target_idx]);
    while let Some(t) = queue.pop_front() {
        for s in 0..n {
            if reached[s] {
                continue;
            }
            let combined = inst
                .pointwise_dot(&solutions[s], &solutions[t], dot)
                .unwrap();
            if combined == solutions[t] {
                reached[s] = true;
                queue.push_back(s);
            }
        }
    }
    reached
}

/// Solvability of a GF(2) linear system given as rows of variable indices
/// (coefficient 1) with a right-hand-side bit. Plain Gaussian elimination;
/// independent of everything in the crate.
pub fn gf2_system_solvable(rows: &[(Vec<usize>, u8)], nvars: usize) -> bool {
    assert!(nvars < 128);
    let mut pivots: Vec<Option<(u128, u8)>> = vec![None; nvars];
    for (vars, rhs) in rows {
        let mut bits: u128 = 0;
        for &v in vars {
            assert!(v < nvars);
            bits ^= 1 << v;
        }
        let mut rhs = *rhs;
        loop {
            if bits == 0 {
                if rhs != 0 {
                    return false;
                }
                break;
            }
            let lead = bits.trailing_zeros() as usize;
            match pivots[lead] {
                Some((pbits, prhs)) => {
                    bits ^= pbits;
                    rhs ^= prhs;
                }
                None => {
                    pivots[lead] = Some((bits, rhs));
                    break;
                }
            }
        }
    }
    true
}
