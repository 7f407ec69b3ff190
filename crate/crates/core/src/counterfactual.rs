//! Counterfactual tables: per-row mutations drawn from category value pools,
//! rejected and repaired against the constraint set.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::ConstraintSet;
use crate::schema::{CategorySchema, SchemaSet};
use crate::seed::rng_for;
use crate::table::{Row, Table};
use crate::value::TypedValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationOp {
    Keep,
    AddValue,
    Substitute,
    Delete,
    AddMissingKey,
}

impl MutationOp {
    pub const ALL: [MutationOp; 5] =
        [MutationOp::Keep, MutationOp::AddValue, MutationOp::Substitute, MutationOp::Delete, MutationOp::AddMissingKey];
}

/// How the probability `p` is applied to a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpSelection {
    /// With probability `p` the row is altered by one applicable operation
    /// chosen uniformly.
    #[default]
    PerRowThenUniform,
    /// Each applicable operation fires independently with probability `p`;
    /// one of the fired operations is applied.
    PerOp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub p: f64,
    pub n_counterfactuals: usize,
    pub max_attempts: usize,
    pub seed: u64,
    pub op_selection: OpSelection,
    pub allowed_ops: Vec<MutationOp>,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            p: 0.3,
            n_counterfactuals: 5,
            max_attempts: 50,
            seed: 0,
            op_selection: OpSelection::default(),
            allowed_ops: MutationOp::ALL.to_vec(),
        }
    }
}

impl MutationConfig {
    pub fn validate(&self) -> Result<(), CounterfactualError> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(CounterfactualError::InvalidConfig(format!("p must be in (0, 1], got {}", self.p)));
        }
        if self.n_counterfactuals == 0 {
            return Err(CounterfactualError::InvalidConfig("n_counterfactuals must be at least 1".into()));
        }
        if self.max_attempts == 0 {
            return Err(CounterfactualError::InvalidConfig("max_attempts must be at least 1".into()));
        }
        Ok(())
    }

    fn allows(&self, op: MutationOp) -> bool {
        self.allowed_ops.contains(&op)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CounterfactualError {
    #[error("key '{0}' not found")]
    KeyNotFound(String),
    #[error("key '{0}' already present")]
    KeyAlreadyPresent(String),
    #[error("key '{0}' is not in the category schema")]
    KeyNotInSchema(String),
    #[error("no distinct pool value for '{0}'")]
    PoolExhausted(String),
    #[error("deleting '{0}' would leave the table empty")]
    WouldEmptyTable(String),
    #[error("table '{0}' is already a counterfactual")]
    NotOriginal(String),
    #[error("no schema for category '{0}'")]
    MissingSchema(String),
    #[error("table '{table}': no valid counterfactual differing from the parent after {attempts} attempts")]
    Degenerate { table: String, attempts: usize },
    #[error("invalid mutation config: {0}")]
    InvalidConfig(String),
}

/// Distinct values per (category, key), sorted by raw text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValuePools {
    pools: BTreeMap<String, BTreeMap<String, Vec<TypedValue>>>,
}

impl ValuePools {
    pub fn get(&self, category: &str, key: &str) -> &[TypedValue] {
        self.pools.get(category).and_then(|m| m.get(key)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn keys(&self, category: &str) -> impl Iterator<Item = &str> {
        self.pools.get(category).into_iter().flat_map(|m| m.keys().map(String::as_str))
    }
}

/// Harvests pools from `tables`. With schemas, values whose inferred kind
/// differs from the key's schema kind are left out.
pub fn build_pools(tables: &[Table], schemas: Option<&SchemaSet>) -> ValuePools {
    let mut raw: BTreeMap<String, BTreeMap<String, BTreeMap<String, TypedValue>>> = BTreeMap::new();
    for t in tables {
        for row in t.rows() {
            let expected = schemas.and_then(|s| s.key(t.category(), row.key())).map(|k| k.value_kind);
            for v in row.values() {
                if expected.is_some_and(|k| k != v.kind()) {
                    continue;
                }
                raw.entry(t.category().to_string())
                    .or_default()
                    .entry(row.key().to_string())
                    .or_default()
                    .entry(v.raw().to_string())
                    .or_insert_with(|| v.clone());
            }
        }
    }
    ValuePools {
        pools: raw
            .into_iter()
            .map(|(c, keys)| (c, keys.into_iter().map(|(k, vals)| (k, vals.into_values().collect())).collect()))
            .collect(),
    }
}

fn same_values(a: &[TypedValue], b: &[TypedValue]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.raw() == y.raw())
}

fn add_candidates<'a>(row: &Row, pool: &'a [TypedValue]) -> Vec<&'a TypedValue> {
    pool.iter().filter(|v| row.values().iter().all(|x| x.raw() != v.raw())).collect()
}

fn substitute_candidates<'a>(row: &Row, pool: &'a [TypedValue]) -> Vec<&'a TypedValue> {
    pool.iter().filter(|v| !same_values(row.values(), std::slice::from_ref(*v))).collect()
}

/// Operations whose preconditions hold for an existing row.
fn applicable_ops(
    table: &Table,
    row: &Row,
    pools: &ValuePools,
    schema: &CategorySchema,
    cfg: &MutationConfig,
) -> Vec<MutationOp> {
    let pool = pools.get(table.category(), row.key());
    let multi = schema.key(row.key()).is_some_and(|k| k.multi_valued);
    let mut ops = Vec::new();
    if cfg.allows(MutationOp::AddValue) && multi && !add_candidates(row, pool).is_empty() {
        ops.push(MutationOp::AddValue);
    }
    if cfg.allows(MutationOp::Substitute) && !substitute_candidates(row, pool).is_empty() {
        ops.push(MutationOp::Substitute);
    }
    if cfg.allows(MutationOp::Delete) && table.key_count() > 1 {
        ops.push(MutationOp::Delete);
    }
    ops
}

fn apply_op<R: Rng + ?Sized>(
    table: &mut Table,
    key: &str,
    op: MutationOp,
    pools: &ValuePools,
    schema: &CategorySchema,
    rng: &mut R,
) -> Result<(), CounterfactualError> {
    let pool = pools.get(table.category(), key);
    let idx = table.rows().iter().position(|r| r.key() == key);
    match op {
        MutationOp::AddMissingKey => {
            if idx.is_some() {
                return Err(CounterfactualError::KeyAlreadyPresent(key.to_string()));
            }
            let target = schema.position(key).ok_or_else(|| CounterfactualError::KeyNotInSchema(key.to_string()))?;
            let value = pool.choose(rng).ok_or_else(|| CounterfactualError::PoolExhausted(key.to_string()))?;
            let at = table
                .rows()
                .iter()
                .rposition(|r| schema.position(r.key()).is_some_and(|p| p < target))
                .map_or(0, |i| i + 1);
            let row = Row::new(key, vec![value.clone()]).expect("pool values are non-empty");
            table.rows_mut().insert(at, row);
        }
        _ => {
            let i = idx.ok_or_else(|| CounterfactualError::KeyNotFound(key.to_string()))?;
            match op {
                MutationOp::Keep | MutationOp::AddMissingKey => {}
                MutationOp::AddValue => {
                    let v = (*add_candidates(&table.rows()[i], pool)
                        .choose(rng)
                        .ok_or_else(|| CounterfactualError::PoolExhausted(key.to_string()))?)
                    .clone();
                    table.rows_mut()[i].push_value(v);
                }
                MutationOp::Substitute => {
                    let v = (*substitute_candidates(&table.rows()[i], pool)
                        .choose(rng)
                        .ok_or_else(|| CounterfactualError::PoolExhausted(key.to_string()))?)
                    .clone();
                    table.rows_mut()[i].set_values(vec![v]);
                }
                MutationOp::Delete => {
                    if table.key_count() == 1 {
                        return Err(CounterfactualError::WouldEmptyTable(key.to_string()));
                    }
                    table.rows_mut().remove(i);
                }
            }
        }
    }
    Ok(())
}

/// Applies one operation to a copy of `table`; the input is untouched.
pub fn mutate_row<R: Rng + ?Sized>(
    table: &Table,
    row_key: &str,
    op: MutationOp,
    pools: &ValuePools,
    schema: &CategorySchema,
    rng: &mut R,
) -> Result<Table, CounterfactualError> {
    let mut out = table.clone();
    apply_op(&mut out, row_key, op, pools, schema, rng)?;
    Ok(out)
}

/// One randomized pass over the rows plus missing-key insertions.
fn mutate_once<R: Rng + ?Sized>(
    parent: &Table,
    id: &str,
    pools: &ValuePools,
    schema: &CategorySchema,
    cfg: &MutationConfig,
    rng: &mut R,
) -> Table {
    let mut t = parent.derive_counterfactual(id.to_string());
    for row in parent.rows() {
        let ops = applicable_ops(&t, t.row(row.key()).expect("rows are visited once"), pools, schema, cfg);
        let op = match cfg.op_selection {
            OpSelection::PerRowThenUniform => {
                if ops.is_empty() || !rng.gen_bool(cfg.p) {
                    MutationOp::Keep
                } else {
                    *ops.choose(rng).expect("non-empty")
                }
            }
            OpSelection::PerOp => {
                let fired: Vec<MutationOp> = ops.into_iter().filter(|_| rng.gen_bool(cfg.p)).collect();
                fired.choose(rng).copied().unwrap_or(MutationOp::Keep)
            }
        };
        if op != MutationOp::Keep {
            apply_op(&mut t, row.key(), op, pools, schema, rng).expect("op was applicable");
        }
    }
    if cfg.allows(MutationOp::AddMissingKey) {
        for k in &schema.keys {
            if !parent.has_key(&k.key) && !pools.get(parent.category(), &k.key).is_empty() && rng.gen_bool(cfg.p) {
                apply_op(&mut t, &k.key, MutationOp::AddMissingKey, pools, schema, rng).expect("key absent");
            }
        }
    }
    t
}

fn differs(a: &Table, b: &Table) -> bool {
    a.rows() != b.rows()
}

/// Puts the parent's version of `key` back (or removes an inserted row).
fn revert_key(t: &mut Table, parent: &Table, key: &str, schema: &CategorySchema) {
    let pos = t.rows().iter().position(|r| r.key() == key);
    match (parent.row(key), pos) {
        (Some(orig), Some(i)) => t.rows_mut()[i] = orig.clone(),
        (Some(orig), None) => {
            let parent_pos = parent.rows().iter().position(|r| r.key() == key).unwrap_or(0);
            let at = t
                .rows()
                .iter()
                .rposition(|r| {
                    parent.rows().iter().position(|p| p.key() == r.key()).is_some_and(|p| p < parent_pos)
                        || schema.position(r.key()) < schema.position(key)
                })
                .map_or(0, |i| i + 1);
            t.rows_mut().insert(at, orig.clone());
        }
        (None, Some(i)) => {
            t.rows_mut().remove(i);
        }
        (None, None) => {}
    }
}

/// Produces the `index`-th counterfactual of an original table.
pub fn generate_counterfactual(
    table: &Table,
    index: usize,
    pools: &ValuePools,
    constraints: &ConstraintSet,
    schema: &CategorySchema,
    cfg: &MutationConfig,
) -> Result<Table, CounterfactualError> {
    if table.is_counterfactual() {
        return Err(CounterfactualError::NotOriginal(table.id().to_string()));
    }
    let id = format!("{}-cf{}", table.id(), index);
    let mut rng = rng_for(cfg.seed, table.id(), "counterfactual", index as u64);
    let mut last = None;
    for _ in 0..cfg.max_attempts {
        let cand = mutate_once(table, &id, pools, schema, cfg, &mut rng);
        if differs(&cand, table) && constraints.check_all(&cand).pass {
            return Ok(cand);
        }
        if differs(&cand, table) {
            last = Some(cand);
        }
    }
    // Repair the last differing attempt by undoing rows that break constraints.
    if let Some(mut cand) = last {
        for _ in 0..=cand.key_count() + table.key_count() {
            let offending = constraints.offending_keys(&cand);
            if offending.is_empty() {
                break;
            }
            for k in &offending {
                revert_key(&mut cand, table, k, schema);
            }
        }
        if differs(&cand, table) && constraints.check_all(&cand).pass {
            return Ok(cand);
        }
    }
    Err(CounterfactualError::Degenerate { table: table.id().to_string(), attempts: cfg.max_attempts })
}

/// All counterfactuals of one original, in index order, plus any failures.
pub fn generate_counterfactuals(
    table: &Table,
    pools: &ValuePools,
    constraints: &ConstraintSet,
    schema: &CategorySchema,
    cfg: &MutationConfig,
) -> (Vec<Table>, Vec<CounterfactualError>) {
    let mut out = Vec::with_capacity(cfg.n_counterfactuals);
    let mut errs = Vec::new();
    for i in 1..=cfg.n_counterfactuals {
        match generate_counterfactual(table, i, pools, constraints, schema, cfg) {
            Ok(t) => out.push(t),
            Err(e) => errs.push(e),
        }
    }
    (out, errs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    /// Originals first, then each original's counterfactuals in order.
    pub tables: Vec<Table>,
    /// Counterfactuals that could not be produced.
    pub skipped: Vec<CounterfactualError>,
}

/// Expands a corpus of originals with `n_counterfactuals` each. Tables are
/// processed independently (in parallel when enabled); output order does not
/// depend on scheduling.
pub fn expand_corpus(
    tables: &[Table],
    pools: &ValuePools,
    constraints: &ConstraintSet,
    schemas: &SchemaSet,
    cfg: &MutationConfig,
) -> Result<Expansion, CounterfactualError> {
    cfg.validate()?;
    for t in tables {
        if t.is_counterfactual() {
            return Err(CounterfactualError::NotOriginal(t.id().to_string()));
        }
        if schemas.get(t.category()).is_none() {
            return Err(CounterfactualError::MissingSchema(t.category().to_string()));
        }
    }
    let work = |t: &Table| {
        let schema = schemas.get(t.category()).expect("checked above");
        generate_counterfactuals(t, pools, constraints, schema, cfg)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(Vec<Table>, Vec<CounterfactualError>)> = {
        use rayon::prelude::*;
        tables.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(Vec<Table>, Vec<CounterfactualError>)> = tables.iter().map(work).collect();

    let mut out = tables.to_vec();
    let mut skipped = Vec::new();
    for (cfs, errs) in results {
        for e in &errs {
            log::warn!("{e}");
        }
        out.extend(cfs);
        skipped.extend(errs);
    }
    Ok(Expansion { tables: out, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::parse_constraint;
    use crate::table::{ingest_table, TableRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn schemas() -> SchemaSet {
        SchemaSet::from_json(
            r#"{"category":"Person","keys":[
                {"key":"Born","entity_type":"date-time","value_kind":"date"},
                {"key":"Died","entity_type":"date-time","value_kind":"date"},
                {"key":"Children","entity_type":"person","value_kind":"entity-name","multi_valued":true},
                {"key":"Alma Mater","entity_type":"organization","value_kind":"entity-name"},
                {"key":"Occupation","entity_type":"person-type","value_kind":"free-text"}]}"#,
        )
        .unwrap()
    }

    fn table(json: &str) -> Table {
        let rec: TableRecord = serde_json::from_str(json).unwrap();
        ingest_table(&rec, Some(&schemas())).unwrap()
    }

    fn corpus() -> Vec<Table> {
        vec![
            table(
                r#"{"id":"janet","title":"Janet Leigh","category":"Person","rows":[
                {"key":"Born","values":["July 6, 1927"]},{"key":"Died","values":["October 3, 2004"]},
                {"key":"Children","values":["Kelly Curtis; Jamie Lee Curtis"]},
                {"key":"Alma Mater","values":["Stanford University"]},{"key":"Occupation","values":["Actress"]}]}"#,
            ),
            table(
                r#"{"id":"other","title":"Other","category":"Person","rows":[
                {"key":"Born","values":["March 2, 1901"]},{"key":"Died","values":["January 13, 1994"]},
                {"key":"Alma Mater","values":["University of California"]},{"key":"Occupation","values":["Scientist"]}]}"#,
            ),
        ]
    }

    #[test]
    fn pools_are_sorted_unions() {
        let pools = build_pools(&corpus(), Some(&schemas()));
        let alma: Vec<&str> = pools.get("Person", "Alma Mater").iter().map(|v| v.raw()).collect();
        assert_eq!(alma, vec!["Stanford University", "University of California"]);
        let single = build_pools(&corpus()[..1], Some(&schemas()));
        assert_eq!(single.get("Person", "Died").len(), 1);
    }

    #[test]
    fn row_operations() {
        let c = corpus();
        let pools = build_pools(&c, Some(&schemas()));
        let schema = schemas();
        let schema = schema.get("Person").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let janet = &c[0];
        let before = janet.to_json();

        let kept = mutate_row(janet, "Born", MutationOp::Keep, &pools, schema, &mut rng).unwrap();
        assert_eq!(&kept, janet);
        let sub = mutate_row(janet, "Died", MutationOp::Substitute, &pools, schema, &mut rng).unwrap();
        assert_eq!(sub.row("Died").unwrap().values()[0].raw(), "January 13, 1994");
        let del = mutate_row(janet, "Children", MutationOp::Delete, &pools, schema, &mut rng).unwrap();
        assert_eq!(del.key_count(), 4);
        assert!(!del.has_key("Children"));
        for r in del.rows() {
            assert_eq!(r, janet.row(r.key()).unwrap());
        }
        assert_eq!(janet.to_json(), before);

        let other = &c[1];
        let added = mutate_row(other, "Children", MutationOp::AddMissingKey, &pools, schema, &mut rng).unwrap();
        assert_eq!(added.rows()[2].key(), "Children");
        assert_eq!(
            mutate_row(janet, "Children", MutationOp::AddMissingKey, &pools, schema, &mut rng),
            Err(CounterfactualError::KeyAlreadyPresent("Children".into()))
        );
        assert_eq!(
            mutate_row(other, "Children", MutationOp::Delete, &pools, schema, &mut rng),
            Err(CounterfactualError::KeyNotFound("Children".into()))
        );
        let single = build_pools(&c[..1], Some(&schemas()));
        assert_eq!(
            mutate_row(janet, "Died", MutationOp::Substitute, &single, schema, &mut rng),
            Err(CounterfactualError::PoolExhausted("Died".into()))
        );
    }

    #[test]
    fn counterfactuals_respect_constraints() {
        let c = corpus();
        let pools = build_pools(&c, Some(&schemas()));
        let constraints =
            ConstraintSet::new(vec![parse_constraint("c1", "Person", "Born:Date <= Died:Date", None).unwrap()]);
        let cfg = MutationConfig { p: 0.9, seed: 11, ..Default::default() };
        let exp = expand_corpus(&c, &pools, &constraints, &schemas(), &cfg).unwrap();
        assert_eq!(exp.tables.len(), 12);
        for t in &exp.tables[2..] {
            assert!(constraints.check_all(t).pass);
            let parent = c.iter().find(|p| Some(p.id()) == t.parent_id()).unwrap();
            assert_ne!(t.rows(), parent.rows());
        }
    }

    #[test]
    fn keep_only_is_degenerate() {
        let c = corpus();
        let pools = build_pools(&c, Some(&schemas()));
        let cfg = MutationConfig { allowed_ops: vec![MutationOp::Keep], max_attempts: 3, ..Default::default() };
        let schema = schemas();
        let r =
            generate_counterfactual(&c[0], 1, &pools, &ConstraintSet::default(), schema.get("Person").unwrap(), &cfg);
        assert!(matches!(r, Err(CounterfactualError::Degenerate { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(MutationConfig { p: 0.0, ..Default::default() }.validate().is_err());
        assert!(MutationConfig { n_counterfactuals: 0, ..Default::default() }.validate().is_err());
        assert!(MutationConfig::default().validate().is_ok());
    }
}
