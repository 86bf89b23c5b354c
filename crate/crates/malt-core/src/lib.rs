//! Constraint satisfaction over finite idempotent algebras.
//!
//! The crate provides, bottom up:
//!
//! - [`algebra`]: finite algebras as operation tables, term evaluation,
//!   identity checking, products, subuniverse closure, quotients,
//!   restrictions, and the derivation of a binary term from an edge term.
//! - [`congruence`]: partitions, congruence tests, principal congruences,
//!   congruence-lattice enumeration, and the witness congruence induced by a
//!   binary term (`a ~ b` iff `a·b = a` and `b·a = b`).
//! - [`digraph`]: the dot digraph of a 2-semilattice (`a → b` iff
//!   `a·b = b`), strongly connected components, the unique minimal
//!   component, and binary absorption checks.
//! - [`instance`]: CSP instances with one potato per variable and one
//!   relation per ordered pair, the standardness report,
//!   (2,3)-consistency, and an exact brute-force oracle.
//! - [`bulatov`]: the constructive solver for nonempty standard instances
//!   over a 2-semilattice, alternating minimal-component restriction with
//!   maximal-congruence decomposition.
//! - [`maltsev`]: the quotient-then-block decision procedure, its
//!   hypothesis checker, solution transfer along quotient arrows, and the
//!   built-in counterexample where only the exchange identity fails.
//! - [`fixtures`]: named algebras and a seeded random instance generator.
//! - [`json`]: the canonical JSON schemas used by the CLI.

pub mod algebra;
pub mod bulatov;
pub mod congruence;
pub mod digraph;
pub mod error;
pub mod fixtures;
pub mod instance;
pub mod json;
pub mod maltsev;

pub use algebra::{
    binary_reduct, derive_dot_term, edge_identity_rows, product_algebra, quotient_algebra,
    restrict_to_subuniverse, subuniverse_closure, Element, ElementSet, FiniteAlgebra, Signature,
    Term,
};
pub use bulatov::{
    bulatov_solution, decompose, scc_restrict, verify_walk_to_bulatov, Decomposition,
    ReductionTrace, TraceStep,
};
pub use congruence::{
    all_congruences, is_congruence, maximal_congruences, principal_congruence, theta_witness,
    Partition, ThetaFailure,
};
pub use digraph::{
    build_digraph, check_binary_absorption_free, is_strongly_connected, minimal_component, scc,
    SccDecomposition, SemilatticeDigraph,
};
pub use error::{Error, Result};
pub use instance::{
    two_three_consistency, Assignment, Instance, RawConstraint, RawInstance, StandardReport,
};
pub use maltsev::{
    build_counterexample, build_quotient_instance, default_block_solver, hypothesis_check,
    main_solve, passes_through, transfer_solution, BlockSolver, BruteForceBlockSolver,
    HypothesisReport, QuotientMap, SolveOutcome,
};
