//! JSON schemas for algebras, terms, partitions, instances and results.
//!
//! Emission is canonical: object keys are sorted, element lists and pair
//! lists are sorted, and instances are written with their algebra inline, so
//! identical inputs always produce byte-identical output.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{FiniteAlgebra, Signature, Term};
use crate::congruence::Partition;
use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, RawConstraint, RawInstance};
use crate::maltsev::{HypothesisReport, SolveOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpJson {
    pub name: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub size: usize,
    pub ops: Vec<OpJson>,
}

pub fn algebra_to_json(alg: &FiniteAlgebra) -> AlgebraJson {
    AlgebraJson {
        size: alg.size(),
        ops: alg
            .signature()
            .symbols()
            .iter()
            .map(|(name, arity)| OpJson {
                name: name.clone(),
                arity: *arity,
                table: alg.table(name).unwrap().to_vec(),
            })
            .collect(),
    }
}

pub fn algebra_from_json(j: &AlgebraJson) -> Result<FiniteAlgebra> {
    let signature = Signature::new(
        j.ops
            .iter()
            .map(|op| (op.name.clone(), op.arity))
            .collect(),
    )?;
    FiniteAlgebra::new(
        j.size,
        signature,
        j.ops.iter().map(|op| op.table.clone()).collect(),
    )
}

/// `{ "var": i }` or `{ "op": s, "args": [...] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TermJson {
    Var { var: usize },
    App { op: String, args: Vec<TermJson> },
}

pub fn term_to_json(term: &Term) -> TermJson {
    match term {
        Term::Var(i) => TermJson::Var { var: *i },
        Term::App(op, args) => TermJson::App {
            op: op.clone(),
            args: args.iter().map(term_to_json).collect(),
        },
    }
}

pub fn term_from_json(j: &TermJson) -> Term {
    match j {
        TermJson::Var { var } => Term::Var(*var),
        TermJson::App { op, args } => {
            Term::App(op.clone(), args.iter().map(term_from_json).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub blocks: Vec<Vec<usize>>,
}

pub fn partition_to_json(p: &Partition) -> PartitionJson {
    PartitionJson { blocks: p.blocks() }
}

pub fn partition_from_json(n: usize, j: &PartitionJson) -> Result<Partition> {
    Partition::from_blocks(n, &j.blocks)
}

/// A fixture name or an inline algebra.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Name(String),
    Inline(AlgebraJson),
}

pub fn resolve_algebra(r: &AlgebraRef) -> Result<FiniteAlgebra> {
    match r {
        AlgebraRef::Name(name) => Ok(crate::fixtures::fixture(name)?.algebra),
        AlgebraRef::Inline(j) => algebra_from_json(j),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub algebra: AlgebraRef,
    pub variables: Vec<String>,
    pub potatoes: BTreeMap<String, Vec<usize>>,
    pub relations: BTreeMap<String, Vec<(usize, usize)>>,
}

pub fn instance_to_json(inst: &Instance) -> InstanceJson {
    let mut potatoes = BTreeMap::new();
    let mut relations = BTreeMap::new();
    for (x, name) in inst.variables().iter().enumerate() {
        potatoes.insert(name.clone(), inst.potato(x).clone());
        for (y, other) in inst.variables().iter().enumerate() {
            relations.insert(format!("{name},{other}"), inst.relation(x, y).to_vec());
        }
    }
    InstanceJson {
        algebra: AlgebraRef::Inline(algebra_to_json(inst.ambient())),
        variables: inst.variables().to_vec(),
        potatoes,
        relations,
    }
}

fn require_unique_variables(variables: &[String]) -> Result<()> {
    for (i, name) in variables.iter().enumerate() {
        if variables[..i].contains(name) {
            return Err(Error::MalformedInput(format!(
                "duplicate variable name `{name}`"
            )));
        }
    }
    Ok(())
}

pub fn instance_from_json(j: &InstanceJson) -> Result<Instance> {
    require_unique_variables(&j.variables)?;
    let algebra = Arc::new(resolve_algebra(&j.algebra)?);
    let k = j.variables.len();
    let index_of = |name: &str| -> Result<usize> {
        j.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::MalformedInput(format!("unknown variable `{name}`")))
    };
    let mut potatoes = vec![Vec::new(); k];
    for (name, potato) in &j.potatoes {
        potatoes[index_of(name)?] = potato.clone();
    }
    for name in &j.variables {
        if !j.potatoes.contains_key(name) {
            return Err(Error::MalformedInput(format!(
                "missing potato for variable `{name}`"
            )));
        }
    }
    let mut relations = vec![None; k * k];
    for (key, pairs) in &j.relations {
        let (xname, yname) = key.split_once(',').ok_or_else(|| {
            Error::MalformedInput(format!("relation key `{key}` is not of the form `x,y`"))
        })?;
        let (x, y) = (index_of(xname.trim())?, index_of(yname.trim())?);
        relations[x * k + y] = Some(pairs.clone());
    }
    let mut resolved = Vec::with_capacity(k * k);
    for x in 0..k {
        for y in 0..k {
            match relations[x * k + y].take() {
                Some(pairs) => resolved.push(pairs),
                None => {
                    return Err(Error::MalformedInput(format!(
                        "missing relation `{},{}`",
                        j.variables[x], j.variables[y]
                    )));
                }
            }
        }
    }
    Instance::new(algebra, j.variables.clone(), potatoes, resolved)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawConstraintJson {
    pub scope: Vec<String>,
    pub relation: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInstanceJson {
    pub algebra: AlgebraRef,
    pub variables: Vec<String>,
    pub constraints: Vec<RawConstraintJson>,
}

pub fn raw_instance_to_json(raw: &RawInstance) -> RawInstanceJson {
    let variables = raw.variables().to_vec();
    let constraints = raw
        .constraints()
        .iter()
        .map(|c| match c {
            RawConstraint::Unary { var, allowed } => RawConstraintJson {
                scope: vec![variables[*var].clone()],
                relation: json!(allowed),
            },
            RawConstraint::Binary { x, y, pairs } => RawConstraintJson {
                scope: vec![variables[*x].clone(), variables[*y].clone()],
                relation: json!(pairs),
            },
        })
        .collect();
    RawInstanceJson {
        algebra: AlgebraRef::Inline(algebra_to_json(raw.ambient())),
        variables,
        constraints,
    }
}

pub fn raw_instance_from_json(j: &RawInstanceJson) -> Result<RawInstance> {
    require_unique_variables(&j.variables)?;
    let algebra = Arc::new(resolve_algebra(&j.algebra)?);
    let index_of = |name: &str| -> Result<usize> {
        j.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::MalformedInput(format!("unknown variable `{name}`")))
    };
    let mut constraints = Vec::with_capacity(j.constraints.len());
    for c in &j.constraints {
        match c.scope.len() {
            1 => {
                let var = index_of(&c.scope[0])?;
                let allowed: Vec<usize> = serde_json::from_value(c.relation.clone())
                    .map_err(|e| Error::MalformedInput(format!("unary relation: {e}")))?;
                constraints.push(RawConstraint::Unary { var, allowed });
            }
            2 => {
                let x = index_of(&c.scope[0])?;
                let y = index_of(&c.scope[1])?;
                let pairs: Vec<(usize, usize)> = serde_json::from_value(c.relation.clone())
                    .map_err(|e| Error::MalformedInput(format!("binary relation: {e}")))?;
                constraints.push(RawConstraint::Binary { x, y, pairs });
            }
            n => {
                return Err(Error::MalformedInput(format!(
                    "constraint scope of arity {n}; only 1 and 2 are supported"
                )));
            }
        }
    }
    RawInstance::new(algebra, j.variables.clone(), constraints)
}

/// Witness assignments serialize as `{ variable: element }` objects.
pub fn assignment_to_json(asg: &Assignment, variables: &[String]) -> Value {
    let map: BTreeMap<String, usize> = variables
        .iter()
        .cloned()
        .zip(asg.0.iter().copied())
        .collect();
    json!(map)
}

pub fn assignment_from_json(v: &Value, variables: &[String]) -> Result<Assignment> {
    let map: BTreeMap<String, usize> = serde_json::from_value(v.clone())
        .map_err(|e| Error::MalformedInput(format!("assignment: {e}")))?;
    let mut out = Vec::with_capacity(variables.len());
    for name in variables {
        out.push(*map.get(name).ok_or_else(|| {
            Error::MalformedInput(format!("assignment missing variable `{name}`"))
        })?);
    }
    Ok(Assignment(out))
}

pub fn hypothesis_report_to_json(r: &HypothesisReport) -> Value {
    json!({
        "idempotent": r.idempotent,
        "witness_congruence": r.witness_congruence.as_ref().map(partition_to_json),
        "witness_failure": r.witness_failure.as_ref().map(|f| f.to_string()),
        "quotient_two_semilattice": r.quotient_two_semilattice,
        "projection_on_blocks": r.projection_on_blocks,
        "exchange_identity": r.exchange_identity,
        "exchange_witness": r.exchange_witness,
    })
}

pub fn solve_outcome_to_json(
    outcome: &SolveOutcome,
    variables: &[String],
    include_trace: bool,
) -> Value {
    let mut v = json!({
        "solvable": outcome.solvable,
        "witness": outcome.witness.as_ref().map(|w| assignment_to_json(w, variables)),
        "hypotheses": hypothesis_report_to_json(&outcome.hypotheses),
        "unsound_no_possible": outcome.unsound_no_possible,
    });
    if include_trace {
        let obj = v.as_object_mut().unwrap();
        obj.insert(
            "quotient_solution".into(),
            outcome
                .quotient_solution
                .as_ref()
                .map(|q| assignment_to_json(q, variables))
                .unwrap_or(Value::Null),
        );
        obj.insert(
            "trace".into(),
            serde_json::to_value(&outcome.trace).unwrap_or(Value::Null),
        );
    }
    v
}
