//! Per-category consistency constraints over a single table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{check_cond, eval_cond, parse_cond, CondExpr, EvalContext, EvalError, ExprError, TypeError};
use crate::schema::SchemaSet;
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: String,
    pub category: String,
    pub predicate: CondExpr,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown extractor '{0}'")]
    UnknownExtractor(String),
    #[error("unknown key '{key}' for category '{category}'")]
    UnknownKey { category: String, key: String },
    #[error("unknown category '{0}'")]
    UnknownCategory(String),
    #[error("incomparable kinds: {0}")]
    IncomparableKinds(String),
}

impl From<ExprError> for ConstraintError {
    fn from(e: ExprError) -> Self {
        match e {
            ExprError::Syntax { pos, message } => ConstraintError::Syntax { pos, message },
            ExprError::UnknownExtractor(x) => ConstraintError::UnknownExtractor(x),
        }
    }
}

/// Parses `source` as a predicate for `category`, type-checking it against
/// the category schema when one is available.
pub fn parse_constraint(
    id: &str,
    category: &str,
    source: &str,
    schemas: Option<&SchemaSet>,
) -> Result<Constraint, ConstraintError> {
    if source.trim().is_empty() {
        return Err(ConstraintError::Syntax { pos: 0, message: "empty constraint".into() });
    }
    let predicate = parse_cond(source, 0)?;
    if let Some(schemas) = schemas {
        let schema = schemas.get(category).ok_or_else(|| ConstraintError::UnknownCategory(category.to_string()))?;
        check_cond(&predicate, schema).map_err(|e| match e {
            TypeError::UnknownKey(key) => ConstraintError::UnknownKey { category: category.to_string(), key },
            TypeError::IncomparableKinds(m) => ConstraintError::IncomparableKinds(m),
        })?;
    }
    Ok(Constraint { id: id.to_string(), category: category.to_string(), predicate })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    Violated,
    /// The predicate could not be evaluated; lists the responsible keys.
    Inapplicable(Vec<String>),
}

/// Evaluates one constraint. Missing keys, indices or extractions make the
/// constraint inapplicable rather than violated, so row deletion never
/// strands a table.
pub fn check(constraint: &Constraint, table: &Table) -> Verdict {
    let ctx = EvalContext::default();
    match eval_cond(&constraint.predicate, table, &ctx) {
        Ok(true) => Verdict::Satisfied,
        Ok(false) => Verdict::Violated,
        Err(EvalError::Extract(e)) => Verdict::Inapplicable(vec![e.key().to_string()]),
        Err(EvalError::IncomparableKinds(_)) => {
            let mut keys: Vec<String> = constraint.predicate.slots().iter().map(|s| s.key.clone()).collect();
            keys.dedup();
            Verdict::Inapplicable(keys)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub verdicts: Vec<(String, Verdict)>,
    pub pass: bool,
}

impl CheckReport {
    pub fn violated(&self) -> impl Iterator<Item = &str> {
        self.verdicts.iter().filter(|(_, v)| *v == Verdict::Violated).map(|(id, _)| id.as_str())
    }
}

/// Checks every constraint of the table's category.
pub fn check_all(table: &Table, constraints: &[Constraint]) -> CheckReport {
    let verdicts: Vec<(String, Verdict)> = constraints
        .iter()
        .filter(|c| c.category == table.category())
        .map(|c| (c.id.clone(), check(c, table)))
        .collect();
    let pass = verdicts.iter().all(|(_, v)| *v != Verdict::Violated);
    CheckReport { verdicts, pass }
}

/// Constraints grouped for repeated lookups.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Self { constraints }
    }

    pub fn all(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn check_all(&self, table: &Table) -> CheckReport {
        check_all(table, &self.constraints)
    }

    /// Keys referenced by constraints the table violates.
    pub fn offending_keys(&self, table: &Table) -> Vec<String> {
        let mut keys: Vec<String> = self
            .constraints
            .iter()
            .filter(|c| c.category == table.category() && check(c, table) == Verdict::Violated)
            .flat_map(|c| c.predicate.slots().into_iter().map(|s| s.key.clone()))
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }
}
