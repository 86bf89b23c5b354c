//! Crate-wide error type.
//!
//! Every failure mode that callers can act on gets its own variant, and
//! [`Error::code`] gives a stable machine-readable string for each one
//! (the CLI emits it in error JSON).

use crate::congruence::ThetaFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("duplicate operation symbol `{0}` in signature")]
    DuplicateSymbol(String),

    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),

    #[error("operation `{symbol}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },

    #[error("element {element} out of range for universe of size {size}")]
    ElementOutOfRange { element: usize, size: usize },

    #[error("table for `{symbol}` has {got} entries, expected {expected}")]
    TableSizeMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },

    #[error("variable x{index} out of range (assignment has {var_count} entries)")]
    VariableOutOfRange { index: usize, var_count: usize },

    #[error("term is not {expected}-ary (uses variable x{offending})")]
    TermArityMismatch { expected: usize, offending: usize },

    #[error("product of zero algebras")]
    EmptyProduct,

    #[error("signature mismatch between product factors")]
    SignatureMismatch,

    #[error("partition covers {got} elements, algebra has {expected}")]
    PartitionSizeMismatch { expected: usize, got: usize },

    #[error("partition is not a congruence: op `{symbol}` maps equivalent arguments to inequivalent results ({lhs} vs {rhs})")]
    NotACongruence {
        symbol: String,
        lhs: usize,
        rhs: usize,
    },

    #[error("subset is not closed: `{symbol}` applied inside the subset yields {result} outside it")]
    NotClosed { symbol: String, result: usize },

    #[error("universe size {size} exceeds the configured bound {bound} for this operation")]
    SizeBoundExceeded { size: usize, bound: usize },

    #[error("search space of {space} assignments exceeds the configured bound {bound}")]
    SearchSpaceExceeded { space: u128, bound: u128 },

    #[error("witness-congruence check failed: {0}")]
    Theta(ThetaFailure),

    #[error("witness-congruence check failed on the potato of variable {var}: {failure}")]
    ThetaOnPotato { var: usize, failure: ThetaFailure },

    #[error("term is not a 2-semilattice operation here: identity `{identity}` fails")]
    NotTwoSemilattice { identity: String },

    #[error("instance is not standard: {0}")]
    NotStandard(String),

    #[error("instance is empty")]
    EmptyInstance,

    #[error("instance structure invalid: {0}")]
    MalformedInstance(String),

    #[error("new potato for variable {var} is not contained in the old one (element {element})")]
    PotatoNotContained { var: usize, element: usize },

    #[error("assignment covers {got} variables, instance has {expected}")]
    AssignmentLengthMismatch { expected: usize, got: usize },

    #[error("assignment is not a solution ({0})")]
    NotASolution(String),

    #[error("no applicable derivation case: {0}")]
    NoApplicableCase(String),

    #[error("solver hypotheses not met: {0}")]
    HypothesisRefused(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("solution-set oracle bound of {bound} exceeded")]
    OracleBoundExceeded { bound: usize },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),
}

impl Error {
    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateSymbol(_) => "duplicate_symbol",
            Error::UnknownSymbol(_) => "unknown_symbol",
            Error::ArityMismatch { .. } => "arity_mismatch",
            Error::ElementOutOfRange { .. } => "element_out_of_range",
            Error::TableSizeMismatch { .. } => "table_size_mismatch",
            Error::VariableOutOfRange { .. } => "variable_out_of_range",
            Error::TermArityMismatch { .. } => "term_arity_mismatch",
            Error::EmptyProduct => "empty_product",
            Error::SignatureMismatch => "signature_mismatch",
            Error::PartitionSizeMismatch { .. } => "partition_size_mismatch",
            Error::NotACongruence { .. } => "not_a_congruence",
            Error::NotClosed { .. } => "not_closed",
            Error::SizeBoundExceeded { .. } => "size_bound_exceeded",
            Error::SearchSpaceExceeded { .. } => "search_space_exceeded",
            Error::Theta(_) => "theta_failure",
            Error::ThetaOnPotato { .. } => "theta_failure_on_potato",
            Error::NotTwoSemilattice { .. } => "not_two_semilattice",
            Error::NotStandard(_) => "not_standard",
            Error::EmptyInstance => "empty_instance",
            Error::MalformedInstance(_) => "malformed_instance",
            Error::PotatoNotContained { .. } => "potato_not_contained",
            Error::AssignmentLengthMismatch { .. } => "assignment_length_mismatch",
            Error::NotASolution(_) => "not_a_solution",
            Error::NoApplicableCase(_) => "no_applicable_case",
            Error::HypothesisRefused(_) => "hypothesis_refused",
            Error::InternalInconsistency(_) => "internal_inconsistency",
            Error::OracleBoundExceeded { .. } => "oracle_bound_exceeded",
            Error::UnknownFixture(_) => "unknown_fixture",
            Error::MalformedInput(_) => "malformed_input",
        }
    }
}
