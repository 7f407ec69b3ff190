//! Browser demo: renders templates against the bundled toy corpus, produces
//! counterfactual tables, and recomputes the hardness-ranked split.
//!
//! Every export returns a JSON string; errors surface as JS exceptions.

use std::collections::BTreeMap;

use serde::Serialize;
use tabnli::counterfactual::{build_pools, generate_counterfactuals, ValuePools};
use tabnli::hypothesis::{generate_for_table, TemplateLibrary};
use tabnli::split::{
    assignment_from, below_threshold_counts, hardness_assignment, HardnessMatrix, Sizing, SplitName,
    PUBLISHED_CATEGORY_ASSIGNMENT, PUBLISHED_ENTITY_ASSIGNMENT,
};
use tabnli::template::{truth_of, Purpose, ReasoningTag};
use tabnli::{Bundle, BundleText, GenerationConfig, MutationConfig, PartialDate, Table, Template};
use wasm_bindgen::prelude::*;

const SCHEMAS: &str = include_str!("../../../data/toy/schemas.json");
const TABLES: &str = include_str!("../../../data/toy/tables.jsonl");
const TEMPLATES: &str = include_str!("../../../data/toy/templates.tsv");
const PARAPHRASES: &str = include_str!("../../../data/toy/paraphrases.tsv");
const CONSTRAINTS: &str = include_str!("../../../data/toy/constraints.tsv");
const CATEGORY_HARDNESS: &str = include_str!("../../../data/hardness/category_hardness.csv");
const ENTITY_HARDNESS: &str = include_str!("../../../data/hardness/entity_hardness.csv");

fn bundle() -> Result<Bundle, String> {
    Bundle::load(BundleText {
        schemas: SCHEMAS,
        tables: TABLES,
        templates: TEMPLATES,
        paraphrases: PARAPHRASES,
        constraints: CONSTRAINTS,
    })
    .map_err(|e| e.to_string())
}

fn find<'a>(b: &'a Bundle, table_id: &str) -> Result<&'a Table, String> {
    b.tables.iter().find(|t| t.id() == table_id).ok_or_else(|| format!("no table '{table_id}'"))
}

fn pools(b: &Bundle) -> ValuePools {
    build_pools(&b.tables, Some(&b.schemas))
}

fn rows(t: &Table) -> Vec<(String, Vec<String>)> {
    t.rows().iter().map(|r| (r.key().to_string(), r.values().iter().map(|v| v.raw().to_string()).collect())).collect()
}

#[derive(Serialize)]
struct CatalogTable {
    id: String,
    title: String,
    category: String,
    rows: Vec<(String, Vec<String>)>,
}

#[derive(Serialize)]
struct CatalogTemplate {
    id: String,
    category: String,
    body: String,
}

#[derive(Serialize)]
struct Catalog {
    tables: Vec<CatalogTable>,
    templates: Vec<CatalogTemplate>,
}

/// Tables and hypothesis templates of the toy bundle.
pub fn catalog_json() -> Result<String, String> {
    let b = bundle()?;
    let catalog = Catalog {
        tables: b
            .tables
            .iter()
            .map(|t| CatalogTable {
                id: t.id().to_string(),
                title: t.title().to_string(),
                category: t.category().to_string(),
                rows: rows(t),
            })
            .collect(),
        templates: b
            .library
            .all_hypotheses()
            .map(|t| CatalogTemplate { id: t.id.clone(), category: t.category.clone(), body: t.body() })
            .collect(),
    };
    serde_json::to_string(&catalog).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RenderedPair {
    label: String,
    sentence: String,
    strategy: String,
    /// Re-evaluated claim truth; always agrees with `label`.
    holds: bool,
}

#[derive(Serialize)]
struct RenderResult {
    premise: String,
    pairs: Vec<RenderedPair>,
}

/// Renders an edited template body against one table as an entailed and a
/// contradicted hypothesis.
pub fn render_json(table_id: &str, body: &str, seed: u64) -> Result<String, String> {
    let b = bundle()?;
    let table = find(&b, table_id)?;
    let tpl = Template::new("edited", table.category(), ReasoningTag::Lexical, Purpose::Hypothesis, body)
        .map_err(|e| e.to_string())?;
    if let Some(schema) = b.schemas.get(table.category()) {
        if let Some(problem) = tpl.check_schema(schema).into_iter().next() {
            return Err(problem.to_string());
        }
    }
    let lib = TemplateLibrary::new(b.library.all_paraphrases().cloned().chain([tpl.clone()]));
    let cfg = GenerationConfig { seed, reference_date: PartialDate::parse_iso("2024-01-01"), ..Default::default() };
    let generated = generate_for_table(table, &lib, &pools(&b), &cfg).map_err(|e| e.to_string())?;
    let ctx = tabnli::expr::EvalContext { reference_date: cfg.reference_date };
    let mut premise = String::new();
    let mut pairs = Vec::new();
    for p in generated {
        let holds = match &p.binding {
            Some(binding) => truth_of(&tpl, binding, table, &ctx).map_err(|e| e.to_string())?,
            None => false,
        };
        premise = p.premise;
        pairs.push(RenderedPair {
            label: p.label.code().to_string(),
            sentence: p.hypothesis,
            strategy: format!("{:?}", p.strategy),
            holds,
        });
    }
    if pairs.is_empty() {
        return Err(format!("template does not apply to '{table_id}'"));
    }
    serde_json::to_string(&RenderResult { premise, pairs }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RowDiff {
    key: String,
    before: Vec<String>,
    after: Vec<String>,
}

#[derive(Serialize)]
struct Counterfactual {
    id: String,
    changes: Vec<RowDiff>,
}

#[derive(Serialize)]
struct CounterfactualResult {
    original: Vec<(String, Vec<String>)>,
    counterfactuals: Vec<Counterfactual>,
    skipped: Vec<String>,
}

fn diff(original: &Table, cf: &Table) -> Vec<RowDiff> {
    let before: BTreeMap<String, Vec<String>> = rows(original).into_iter().collect();
    let after: BTreeMap<String, Vec<String>> = rows(cf).into_iter().collect();
    let mut keys: Vec<&String> = before.keys().chain(after.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter(|k| before.get(*k) != after.get(*k))
        .map(|k| RowDiff {
            key: k.clone(),
            before: before.get(k).cloned().unwrap_or_default(),
            after: after.get(k).cloned().unwrap_or_default(),
        })
        .collect()
}

/// Counterfactual versions of one table with their row-level differences.
pub fn counterfactuals_json(table_id: &str, p: f64, n: usize, seed: u64) -> Result<String, String> {
    let b = bundle()?;
    let table = find(&b, table_id)?;
    let schema = b.schemas.get(table.category()).ok_or_else(|| format!("no schema for {}", table.category()))?;
    let cfg = MutationConfig { p, n_counterfactuals: n, seed, ..Default::default() };
    cfg.validate().map_err(|e| e.to_string())?;
    let (made, skipped) = generate_counterfactuals(table, &pools(&b), &b.constraints, schema, &cfg);
    let result = CounterfactualResult {
        original: rows(table),
        counterfactuals: made
            .iter()
            .map(|cf| Counterfactual { id: cf.id().to_string(), changes: diff(table, cf) })
            .collect(),
        skipped: skipped.iter().map(ToString::to_string).collect(),
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct UnitRow {
    unit: String,
    hard_count: usize,
    ranked: String,
    published: String,
}

#[derive(Serialize)]
struct HardnessResult {
    units: Vec<UnitRow>,
    matches_published: bool,
}

/// Hard-cell counts per unit at `threshold`, the split they induce, and the
/// published split for comparison. `matrix` is "category" or "entity".
pub fn hardness_json(matrix: &str, threshold: f64) -> Result<String, String> {
    let (csv, published) = match matrix {
        "category" => (CATEGORY_HARDNESS, assignment_from(&PUBLISHED_CATEGORY_ASSIGNMENT)),
        "entity" => (ENTITY_HARDNESS, assignment_from(&PUBLISHED_ENTITY_ASSIGNMENT)),
        other => return Err(format!("unknown matrix '{other}'")),
    };
    let m = HardnessMatrix::from_csv(csv).map_err(|e| e.to_string())?;
    let counts = below_threshold_counts(&m, threshold);
    let ranked = hardness_assignment(&m, None, &Sizing::Counts([5, 3, 3]), threshold).map_err(|e| e.to_string())?;
    let name = |s: Option<&SplitName>| s.map_or("-", |s| s.as_str()).to_string();
    let mut units: Vec<UnitRow> = counts
        .iter()
        .map(|(u, n)| UnitRow {
            unit: u.clone(),
            hard_count: *n,
            ranked: name(ranked.get(u)),
            published: name(published.get(u)),
        })
        .collect();
    units.sort_by(|a, b| b.hard_count.cmp(&a.hard_count).then_with(|| a.unit.cmp(&b.unit)));
    serde_json::to_string(&HardnessResult { units, matches_published: ranked == published }).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn catalog() -> Result<String, JsValue> {
    catalog_json().map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn render_template(table_id: &str, body: &str, seed: u32) -> Result<String, JsValue> {
    render_json(table_id, body, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn counterfactuals(table_id: &str, p: f64, n: u32, seed: u32) -> Result<String, JsValue> {
    counterfactuals_json(table_id, p, n as usize, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn hardness(matrix: &str, threshold: f64) -> Result<String, JsValue> {
    hardness_json(matrix, threshold).map_err(|e| JsValue::from_str(&e))
}
