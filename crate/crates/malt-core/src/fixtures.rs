//! Built-in algebras, their canonical dot terms, and a seeded random
//! instance generator.
//!
//! The corpus covers the shapes the solvers care about: plain semilattices,
//! non-associative 2-semilattices (conservative tournaments), a product
//! lattice, the five-element counterexample algebra, and a family whose
//! blocks are affine cubes glued over a 2-semilattice quotient.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{product_algebra, Element, FiniteAlgebra, Term};
use crate::error::{Error, Result};
use crate::instance::{RawConstraint, RawInstance};

/// Two-element meet semilattice.
pub fn meet_two() -> FiniteAlgebra {
    FiniteAlgebra::from_ops(2, vec![("meet", 2, vec![0, 0, 0, 1])]).unwrap()
}

/// Chain `0 < 1 < ... < n-1` under min.
pub fn chain_min(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(n, vec![("min", 2, &|a| a[0].min(a[1]))]).unwrap()
}

/// Rock-paper-scissors: the 3-cycle tournament, a simple strongly connected
/// 2-semilattice that is not a semilattice.
pub fn rps() -> FiniteAlgebra {
    tournament(3, &[1])
}

/// Rock-paper-scissors with an absorbing bottom adjoined.
pub fn rps_bottom() -> FiniteAlgebra {
    FiniteAlgebra::from_fns(4, vec![("dot", 2, &|args| {
        let (a, b) = (args[0], args[1]);
        if a == 0 || b == 0 {
            0
        } else if (b + 3 - a) % 3 == 1 {
            b
        } else {
            a
        }
    })])
    .unwrap()
}

/// The 5-cycle tournament where each element beats the next two.
pub fn tournament_five() -> FiniteAlgebra {
    tournament(5, &[1, 2])
}

fn tournament(n: usize, winner_offsets: &[usize]) -> FiniteAlgebra {
    let offsets = winner_offsets.to_vec();
    FiniteAlgebra::from_fns(n, vec![("dot", 2, &move |args: &[usize]| {
        let (a, b) = (args[0], args[1]);
        if a == b || offsets.contains(&((b + n - a) % n)) {
            b
        } else {
            a
        }
    })])
    .unwrap()
}

/// Square of the two-element meet semilattice: the diamond under meet.
pub fn meet_square() -> FiniteAlgebra {
    let m = meet_two();
    product_algebra(&[&m, &m]).unwrap().0
}

/// The five-element counterexample algebra: a top element over the Klein
/// group, with the ternary `q` acting as x+y+z on the group block and as
/// first-group-argument selection on mixed tuples.
pub fn counterexample_algebra() -> FiniteAlgebra {
    FiniteAlgebra::from_fns(5, vec![("q", 3, &|args: &[usize]| {
        if args.iter().all(|&a| a == 0) {
            0
        } else if args.iter().all(|&a| a > 0) {
            ((args[0] - 1) ^ (args[1] - 1) ^ (args[2] - 1)) + 1
        } else {
            *args.iter().find(|&&a| a > 0).unwrap()
        }
    })])
    .unwrap()
}

/// Glue one affine cube `Z2^dims[i]` per element of a 2-semilattice
/// quotient. The ternary `q` is x+y+z inside a block; a mixed tuple maps
/// into the target block `T = C1·(C2·C3)`: to the first argument itself when
/// it already lies in `T`, otherwise to the element of `T` with the first
/// argument's local index (mod the target size). With `dot = q(x,y,y)` the
/// witness congruence is exactly the block partition, dot is the first
/// projection inside blocks and the quotient operation on blocks, and the
/// exchange identity holds because the mixed value depends only on the first
/// argument and the target block.
pub fn maltsev_block_algebra(
    quotient: &FiniteAlgebra,
    qdot: &Term,
    block_dims: &[u32],
) -> Result<FiniteAlgebra> {
    if block_dims.len() != quotient.size() {
        return Err(Error::MalformedInput(format!(
            "{} block dimensions for a quotient of size {}",
            block_dims.len(),
            quotient.size()
        )));
    }
    if let Some(identity) = quotient.two_semilattice_violation(qdot)? {
        return Err(Error::NotTwoSemilattice {
            identity: identity.to_string(),
        });
    }
    let nblocks = quotient.size();
    let mut offsets = Vec::with_capacity(nblocks + 1);
    let mut total = 0usize;
    for &d in block_dims {
        offsets.push(total);
        total += 1usize << d;
    }
    offsets.push(total);
    let block_of =
        |a: usize| -> usize { offsets[..nblocks].iter().rposition(|&off| off <= a).unwrap() };
    let mut qdot_table = vec![0usize; nblocks * nblocks];
    for c1 in 0..nblocks {
        for c2 in 0..nblocks {
            qdot_table[c1 * nblocks + c2] = quotient.eval_term(qdot, &[c1, c2])?;
        }
    }
    let q = |args: &[usize]| -> usize {
        let b0 = block_of(args[0]);
        let b1 = block_of(args[1]);
        let b2 = block_of(args[2]);
        if b0 == b1 && b1 == b2 {
            let off = offsets[b0];
            ((args[0] - off) ^ (args[1] - off) ^ (args[2] - off)) + off
        } else {
            let inner = qdot_table[b1 * nblocks + b2];
            let target = qdot_table[b0 * nblocks + inner];
            if target == b0 {
                args[0]
            } else {
                let size = offsets[target + 1] - offsets[target];
                offsets[target] + (args[0] - offsets[b0]) % size
            }
        }
    };
    FiniteAlgebra::from_fns(total, vec![("q", 3, &q)])
}

/// A named fixture: the algebra plus its canonical dot term.
#[derive(Debug, Clone)]
pub struct FixtureEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub algebra: FiniteAlgebra,
    pub dot: Term,
}

fn binary_dot(symbol: &str) -> Term {
    Term::app(symbol, vec![Term::var(0), Term::var(1)])
}

fn q_dot() -> Term {
    Term::app("q", vec![Term::var(0), Term::var(1), Term::var(1)])
}

pub fn all_fixtures() -> Vec<FixtureEntry> {
    vec![
        FixtureEntry {
            name: "meet2",
            description: "two-element meet semilattice",
            algebra: meet_two(),
            dot: binary_dot("meet"),
        },
        FixtureEntry {
            name: "chain3",
            description: "three-element chain under min",
            algebra: chain_min(3),
            dot: binary_dot("min"),
        },
        FixtureEntry {
            name: "rps",
            description: "rock-paper-scissors tournament",
            algebra: rps(),
            dot: binary_dot("dot"),
        },
        FixtureEntry {
            name: "rps-bottom",
            description: "rock-paper-scissors with an absorbing bottom",
            algebra: rps_bottom(),
            dot: binary_dot("dot"),
        },
        FixtureEntry {
            name: "tournament5",
            description: "5-cycle tournament, each element beats the next two",
            algebra: tournament_five(),
            dot: binary_dot("dot"),
        },
        FixtureEntry {
            name: "meet2x2",
            description: "diamond: square of the two-element meet semilattice",
            algebra: meet_square(),
            dot: binary_dot("meet"),
        },
        FixtureEntry {
            name: "counterexample",
            description: "top element over the Klein group; fails only the exchange identity",
            algebra: counterexample_algebra(),
            dot: q_dot(),
        },
        FixtureEntry {
            name: "blocks-top",
            description: "singleton top block over one affine 4-cube, exchange identity holds",
            algebra: maltsev_block_algebra(&meet_two(), &binary_dot("meet"), &[0, 2]).unwrap(),
            dot: q_dot(),
        },
        FixtureEntry {
            name: "blocks-meet2",
            description: "two affine 4-cubes over the meet semilattice",
            algebra: maltsev_block_algebra(&meet_two(), &binary_dot("meet"), &[2, 2]).unwrap(),
            dot: q_dot(),
        },
        FixtureEntry {
            name: "blocks-rps",
            description: "three affine squares over rock-paper-scissors",
            algebra: maltsev_block_algebra(&rps(), &binary_dot("dot"), &[1, 1, 1]).unwrap(),
            dot: q_dot(),
        },
    ]
}

pub fn fixture_names() -> Vec<&'static str> {
    all_fixtures().iter().map(|f| f.name).collect()
}

pub fn fixture(name: &str) -> Result<FixtureEntry> {
    all_fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFixture(name.to_string()))
}

/// Fixtures whose dot is a 2-semilattice operation on the whole algebra.
pub fn two_semilattice_fixture_names() -> Vec<&'static str> {
    vec!["meet2", "chain3", "rps", "rps-bottom", "tournament5", "meet2x2"]
}

/// Deterministic generator state from a seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Close a pair set under the componentwise action of every operation.
fn pair_closure(alg: &FiniteAlgebra, seeds: &[(Element, Element)]) -> Vec<(Element, Element)> {
    let mut pairs: Vec<(Element, Element)> = seeds.to_vec();
    pairs.sort_unstable();
    pairs.dedup();
    loop {
        let mut fresh = Vec::new();
        for (op_idx, (_, arity)) in alg.signature().symbols().iter().enumerate() {
            crate::algebra::for_each_tuple(pairs.len(), *arity, &mut |idxs| {
                let mut firsts = Vec::with_capacity(*arity);
                let mut seconds = Vec::with_capacity(*arity);
                for &i in idxs {
                    firsts.push(pairs[i].0);
                    seconds.push(pairs[i].1);
                }
                let out = (
                    alg.eval_op_idx(op_idx, &firsts),
                    alg.eval_op_idx(op_idx, &seconds),
                );
                if pairs.binary_search(&out).is_err() && !fresh.contains(&out) {
                    fresh.push(out);
                }
                true
            });
        }
        if fresh.is_empty() {
            return pairs;
        }
        pairs.extend(fresh);
        pairs.sort_unstable();
        pairs.dedup();
    }
}

/// Generate a random raw instance over the given ambient algebra: mostly
/// binary constraints whose relations are closures of a few random seed
/// pairs, with occasional unary domain cuts.
pub fn random_raw_instance(
    ambient: &Arc<FiniteAlgebra>,
    num_vars: usize,
    num_constraints: usize,
    rng: &mut ChaCha8Rng,
) -> RawInstance {
    let d = ambient.size();
    let variables: Vec<String> = (0..num_vars).map(|i| format!("x{i}")).collect();
    let mut constraints = Vec::with_capacity(num_constraints);
    for _ in 0..num_constraints {
        if num_vars > 1 && rng.random_range(0..5) > 0 {
            let x = rng.random_range(0..num_vars);
            let mut y = rng.random_range(0..num_vars - 1);
            if y >= x {
                y += 1;
            }
            let nseeds = rng.random_range(2..=3.min(d * d));
            let seeds: Vec<(Element, Element)> = (0..nseeds)
                .map(|_| (rng.random_range(0..d), rng.random_range(0..d)))
                .collect();
            constraints.push(RawConstraint::Binary {
                x,
                y,
                pairs: pair_closure(ambient, &seeds),
            });
        } else {
            let var = rng.random_range(0..num_vars);
            let nseeds = rng.random_range(1..=2.min(d));
            let seeds: Vec<Element> = (0..nseeds).map(|_| rng.random_range(0..d)).collect();
            let allowed = crate::algebra::subuniverse_closure(ambient, &seeds)
                .expect("seed elements are in range");
            constraints.push(RawConstraint::Unary { var, allowed });
        }
    }
    RawInstance::new(ambient.clone(), variables, constraints)
        .expect("generated constraints are closed by construction")
}
