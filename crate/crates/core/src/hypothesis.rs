//! Turning tables and templates into labelled premise/hypothesis pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counterfactual::ValuePools;
use crate::expr::{extract_all, extract_value, EvalContext, Extractor};
use crate::schema::SchemaSet;
use crate::seed::{rng_for, seed_trace};
use crate::table::Table;
pub use crate::template::Label;
use crate::template::{bind, realize, render, Binding, BoundSlot, Control, Node, Purpose, Rendering, Template};
use crate::value::PartialDate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    ChoiceFlip,
    PivotShift,
    ConditionalFlip,
    PoolSubstitute,
    Direct,
}

impl Strategy {
    /// The strategy that produces `label` for a template with `control`.
    pub fn infer(control: Control, label: Label) -> Self {
        match (control, label) {
            (Control::Choice, _) => Strategy::ChoiceFlip,
            (Control::Pivot, _) => Strategy::PivotShift,
            (Control::Conditional, _) => Strategy::ConditionalFlip,
            (Control::None, Label::Entail) => Strategy::Direct,
            (Control::None, Label::Contradict) => Strategy::PoolSubstitute,
        }
    }

    pub fn is_flip(self) -> bool {
        matches!(self, Strategy::ChoiceFlip | Strategy::PivotShift | Strategy::ConditionalFlip)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPair {
    pub table_id: String,
    pub category: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
    pub template_id: String,
    pub keys_used: Vec<String>,
    pub strategy: Strategy,
    pub is_counterfactual: bool,
    pub seed_trace: String,
    /// Paraphrase template ids used for the premise, one per row.
    pub premise_templates: Vec<String>,
    /// The binding the hypothesis was realized from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<Binding>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HypothesisError {
    #[error("table '{0}' has no applicable templates")]
    NoApplicableTemplates(String),
    #[error("table '{table}': no paraphrase applies to key '{key}'")]
    MissingParaphrase { table: String, key: String },
    #[error("no distinct pool value for template '{0}'")]
    PoolExhausted(String),
    #[error("sample of {k} exceeds {n} pairs")]
    SampleTooLarge { k: usize, n: usize },
    #[error("template '{0}' is not a hypothesis template")]
    NotHypothesis(String),
}

/// Hypothesis templates by category and paraphrases by (category, key).
#[derive(Debug, Clone, Default)]
pub struct TemplateLibrary {
    hypotheses: BTreeMap<String, Vec<Template>>,
    paraphrases: BTreeMap<(String, String), Vec<Template>>,
}

impl TemplateLibrary {
    pub fn new(templates: impl IntoIterator<Item = Template>) -> Self {
        let mut lib = Self::default();
        for t in templates {
            lib.insert(t);
        }
        lib
    }

    pub fn insert(&mut self, t: Template) {
        match t.purpose {
            Purpose::Hypothesis => {
                let v = self.hypotheses.entry(t.category.clone()).or_default();
                v.push(t);
                v.sort_by(|a, b| a.id.cmp(&b.id));
            }
            Purpose::PremiseParaphrase => {
                let key = t.keys_used().into_iter().next().unwrap_or_default();
                let v = self.paraphrases.entry((t.category.clone(), key)).or_default();
                v.push(t);
                v.sort_by(|a, b| a.id.cmp(&b.id));
            }
        }
    }

    pub fn hypotheses(&self, category: &str) -> &[Template] {
        self.hypotheses.get(category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn paraphrases(&self, category: &str, key: &str) -> &[Template] {
        self.paraphrases.get(&(category.to_string(), key.to_string())).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_hypotheses(&self) -> impl Iterator<Item = &Template> {
        self.hypotheses.values().flatten()
    }

    pub fn all_paraphrases(&self) -> impl Iterator<Item = &Template> {
        self.paraphrases.values().flatten()
    }

    pub fn hypothesis(&self, id: &str) -> Option<&Template> {
        self.all_hypotheses().find(|t| t.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalanceMode {
    #[default]
    Global,
    PerTable,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub seed: u64,
    /// Desired Entail:Contradict ratio.
    pub balance_target: f64,
    pub balance: BalanceMode,
    pub reference_date: Option<PartialDate>,
    /// Restricts premise paraphrases to these ids when set.
    pub paraphrase_filter: Option<BTreeSet<String>>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            balance_target: 1.0,
            balance: BalanceMode::Global,
            reference_date: None,
            paraphrase_filter: None,
        }
    }
}

impl GenerationConfig {
    fn ctx(&self) -> EvalContext {
        EvalContext { reference_date: self.reference_date }
    }
}

/// One sentence per row, each from a uniformly chosen applicable paraphrase.
/// Returns the premise and the paraphrase ids used.
pub fn linearize_premise<R: Rng + ?Sized>(
    table: &Table,
    lib: &TemplateLibrary,
    filter: Option<&BTreeSet<String>>,
    ctx: &EvalContext,
    rng: &mut R,
) -> Result<(String, Vec<String>), HypothesisError> {
    let mut sentences = Vec::with_capacity(table.key_count());
    let mut ids = Vec::with_capacity(table.key_count());
    for row in table.rows() {
        let rendered: Vec<(&Template, String)> = lib
            .paraphrases(table.category(), row.key())
            .iter()
            .filter(|t| filter.is_none_or(|f| f.contains(&t.id)))
            .filter_map(|t| {
                let b = bind(t, table, ctx, rng).ok()?;
                realize(t, &b).ok().map(|s| (t, s))
            })
            .collect();
        let (t, s) = rendered.choose(rng).ok_or_else(|| HypothesisError::MissingParaphrase {
            table: table.id().to_string(),
            key: row.key().to_string(),
        })?;
        sentences.push(s.clone());
        ids.push(t.id.clone());
    }
    Ok((sentences.join(" "), ids))
}

/// Replaces one slot with a pool value whose extraction differs from every
/// value of that slot in the table, yielding a contradiction.
pub fn pool_substitute_contradict<R: Rng + ?Sized>(
    tpl: &Template,
    binding: &Binding,
    table: &Table,
    pools: &ValuePools,
    rng: &mut R,
) -> Result<Rendering, HypothesisError> {
    let mut options: Vec<(usize, Vec<BoundSlot>)> = Vec::new();
    for (i, n) in tpl.nodes.iter().enumerate() {
        let Node::Slot(s) = n else { continue };
        if s.extractor == Some(Extractor::Count) || binding.implicit_anchor == Some(i) {
            continue;
        }
        let actual = extract_all(table, s).unwrap_or_default();
        let mut seen = BTreeSet::new();
        let candidates: Vec<BoundSlot> = pools
            .get(table.category(), &s.key)
            .iter()
            .filter_map(|v| extract_value(&s.key, v, s.extractor).ok())
            .filter(|e| actual.iter().all(|a| !a.scalar.same_as(&e.scalar) && a.text != e.text))
            .filter(|e| seen.insert(e.text.clone()))
            .map(|e| BoundSlot { text: e.text, scalar: e.scalar })
            .collect();
        if !candidates.is_empty() {
            options.push((i, candidates));
        }
    }
    let (node, candidates) = options.choose(rng).ok_or_else(|| HypothesisError::PoolExhausted(tpl.id.clone()))?;
    let mut b = binding.clone();
    b.set_slot(*node, candidates.choose(rng).expect("non-empty").clone());
    let sentence = realize(tpl, &b).map_err(|_| HypothesisError::PoolExhausted(tpl.id.clone()))?;
    Ok(Rendering { sentence, label: Label::Contradict, binding: b })
}

/// Entail and contradict pairs for every applicable template of the table's
/// category.
pub fn generate_for_table(
    table: &Table,
    lib: &TemplateLibrary,
    pools: &ValuePools,
    cfg: &GenerationConfig,
) -> Result<Vec<GeneratedPair>, HypothesisError> {
    let ctx = cfg.ctx();
    let mut prng = rng_for(cfg.seed, table.id(), "premise", 0);
    let (premise, premise_templates) = linearize_premise(table, lib, cfg.paraphrase_filter.as_ref(), &ctx, &mut prng)?;
    let mut pairs = Vec::new();
    for tpl in lib.hypotheses(table.category()) {
        let purpose = format!("hypothesis:{}", tpl.id);
        let mut rng = rng_for(cfg.seed, table.id(), &purpose, 0);
        let binding = match bind(tpl, table, &ctx, &mut rng) {
            Ok(b) => b,
            Err(e) => {
                log::debug!("template '{}' skipped on '{}': {e}", tpl.id, table.id());
                continue;
            }
        };
        let mut emit = |r: Rendering, strategy: Strategy| {
            pairs.push(GeneratedPair {
                table_id: table.id().to_string(),
                category: table.category().to_string(),
                premise: premise.clone(),
                hypothesis: r.sentence,
                label: r.label,
                template_id: tpl.id.clone(),
                keys_used: tpl.keys_used(),
                strategy,
                is_counterfactual: table.is_counterfactual(),
                seed_trace: seed_trace(cfg.seed, table.id(), &purpose, 0),
                premise_templates: premise_templates.clone(),
                binding: Some(r.binding),
            })
        };
        let control = tpl.control();
        let Ok(entail) = render(tpl, &binding, Label::Entail) else { continue };
        emit(entail, Strategy::infer(control, Label::Entail));
        let contradict = if control == Control::None {
            pool_substitute_contradict(tpl, &binding, table, pools, &mut rng).ok()
        } else {
            render(tpl, &binding, Label::Contradict).ok()
        };
        match contradict {
            Some(r) => emit(r, Strategy::infer(control, Label::Contradict)),
            None => log::debug!("template '{}' has no contradiction on '{}'", tpl.id, table.id()),
        }
    }
    if pairs.is_empty() {
        return Err(HypothesisError::NoApplicableTemplates(table.id().to_string()));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub pairs: Vec<GeneratedPair>,
    /// Pairs removed to reach the label balance target.
    pub dropped_for_balance: usize,
    /// Tables that produced no pairs, with the reason.
    pub skipped_tables: Vec<HypothesisError>,
}

/// Generates pairs for every table, sorts them canonically (table id,
/// template id, label) and balances labels.
pub fn generate_pairs(tables: &[Table], lib: &TemplateLibrary, pools: &ValuePools, cfg: &GenerationConfig) -> PairSet {
    let work = |t: &Table| generate_for_table(t, lib, pools, cfg);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Vec<GeneratedPair>, HypothesisError>> = {
        use rayon::prelude::*;
        tables.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Vec<GeneratedPair>, HypothesisError>> = tables.iter().map(work).collect();

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(p) => pairs.extend(p),
            Err(e) => {
                log::warn!("{e}");
                skipped.push(e);
            }
        }
    }
    pairs.sort_by(|a, b| {
        (a.table_id.as_str(), a.template_id.as_str(), a.label).cmp(&(
            b.table_id.as_str(),
            b.template_id.as_str(),
            b.label,
        ))
    });
    let before = pairs.len();
    let pairs = match cfg.balance {
        BalanceMode::Off => pairs,
        BalanceMode::Global => balance_labels(pairs, cfg.balance_target, cfg.seed, "global"),
        BalanceMode::PerTable => {
            let mut out = Vec::with_capacity(pairs.len());
            let mut start = 0;
            while start < pairs.len() {
                let id = pairs[start].table_id.clone();
                let end = pairs[start..].iter().position(|p| p.table_id != id).map_or(pairs.len(), |n| start + n);
                out.extend(balance_labels(pairs[start..end].to_vec(), cfg.balance_target, cfg.seed, &id));
                start = end;
            }
            out
        }
    };
    PairSet { dropped_for_balance: before - pairs.len(), pairs, skipped_tables: skipped }
}

/// Down-samples the majority label toward `target` = Entail:Contradict,
/// preferring pairs whose (table, key) keeps another pair. Order is kept.
pub fn balance_labels(pairs: Vec<GeneratedPair>, target: f64, seed: u64, scope: &str) -> Vec<GeneratedPair> {
    let e = pairs.iter().filter(|p| p.label == Label::Entail).count();
    let c = pairs.len() - e;
    let (majority, excess) = if e as f64 > target * c as f64 {
        (Label::Entail, e - ((target * c as f64).round() as usize).min(e))
    } else {
        let keep = if target > 0.0 { (e as f64 / target).round() as usize } else { c };
        (Label::Contradict, c - keep.min(c))
    };
    if excess == 0 {
        return pairs;
    }
    let mut candidates: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].label == majority).collect();
    let mut rng = rng_for(seed, scope, "balance", 0);
    candidates.shuffle(&mut rng);

    let mut per_key: HashMap<(&str, &str), usize> = HashMap::new();
    for p in &pairs {
        for k in &p.keys_used {
            *per_key.entry((p.table_id.as_str(), k.as_str())).or_default() += 1;
        }
    }
    let mut removed = vec![false; pairs.len()];
    let mut left = excess;
    for strict in [true, false] {
        for &i in &candidates {
            if left == 0 {
                break;
            }
            if removed[i] {
                continue;
            }
            let p = &pairs[i];
            let safe = p.keys_used.iter().all(|k| per_key[&(p.table_id.as_str(), k.as_str())] > 1);
            if strict && !safe {
                continue;
            }
            for k in &p.keys_used {
                *per_key.get_mut(&(p.table_id.as_str(), k.as_str())).expect("counted") -= 1;
            }
            removed[i] = true;
            left -= 1;
        }
    }
    pairs.into_iter().zip(removed).filter_map(|(p, r)| (!r).then_some(p)).collect()
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyCoverage {
    pub category: String,
    pub key: String,
    pub hypothesis_templates: usize,
    pub paraphrases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverageViolation {
    TooFewHypotheses { category: String, key: String, found: usize, required: usize },
    TooFewParaphrases { category: String, key: String, found: usize, required: usize },
    SchemaMinimumTooLow { category: String, key: String },
    UnknownCategory { template: String, category: String },
    UnknownKey { template: String, category: String, key: String },
}

impl std::fmt::Display for CoverageViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoverageViolation::TooFewHypotheses { category, key, found, required } => {
                write!(f, "{category}/{key}: {found} hypothesis templates, need {required}")
            }
            CoverageViolation::TooFewParaphrases { category, key, found, required } => {
                write!(f, "{category}/{key}: {found} paraphrases, need {required}")
            }
            CoverageViolation::SchemaMinimumTooLow { category, key } => {
                write!(f, "{category}/{key}: schema minimums below 2 templates / 3 paraphrases")
            }
            CoverageViolation::UnknownCategory { template, category } => {
                write!(f, "template '{template}': unknown category '{category}'")
            }
            CoverageViolation::UnknownKey { template, category, key } => {
                write!(f, "template '{template}': key '{key}' not in {category} schema")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub keys: Vec<KeyCoverage>,
    pub violations: Vec<CoverageViolation>,
}

/// Counts templates and paraphrases per schema key and flags shortfalls.
pub fn coverage_report<'a>(
    hypotheses: impl IntoIterator<Item = &'a Template>,
    paraphrases: impl IntoIterator<Item = &'a Template>,
    schemas: &SchemaSet,
) -> CoverageReport {
    let mut h: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut p: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut violations = Vec::new();
    for (templates, counts) in
        [(hypotheses.into_iter().collect::<Vec<_>>(), &mut h), (paraphrases.into_iter().collect(), &mut p)]
    {
        for t in templates {
            let Some(schema) = schemas.get(&t.category) else {
                violations
                    .push(CoverageViolation::UnknownCategory { template: t.id.clone(), category: t.category.clone() });
                continue;
            };
            for k in t.keys_used() {
                if schema.key(&k).is_none() {
                    violations.push(CoverageViolation::UnknownKey {
                        template: t.id.clone(),
                        category: t.category.clone(),
                        key: k,
                    });
                    continue;
                }
                *counts.entry((t.category.clone(), k)).or_default() += 1;
            }
        }
    }
    let mut keys = Vec::new();
    for schema in schemas.iter() {
        for k in &schema.keys {
            let id = (schema.category.clone(), k.key.clone());
            let cov = KeyCoverage {
                category: schema.category.clone(),
                key: k.key.clone(),
                hypothesis_templates: h.get(&id).copied().unwrap_or(0),
                paraphrases: p.get(&id).copied().unwrap_or(0),
            };
            if k.min_hypothesis_templates < 2 || k.min_premise_paraphrases < 3 {
                violations.push(CoverageViolation::SchemaMinimumTooLow { category: id.0.clone(), key: id.1.clone() });
            }
            let (req_h, req_p) = (k.min_hypothesis_templates.max(2), k.min_premise_paraphrases.max(3));
            if cov.hypothesis_templates < req_h {
                violations.push(CoverageViolation::TooFewHypotheses {
                    category: id.0.clone(),
                    key: id.1.clone(),
                    found: cov.hypothesis_templates,
                    required: req_h,
                });
            }
            if cov.paraphrases < req_p {
                violations.push(CoverageViolation::TooFewParaphrases {
                    category: id.0.clone(),
                    key: id.1.clone(),
                    found: cov.paraphrases,
                    required: req_p,
                });
            }
            keys.push(cov);
        }
    }
    CoverageReport { keys, violations }
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOnly {
    pub hypothesis: String,
    pub label: Label,
    pub template_id: String,
    pub is_counterfactual: bool,
}

pub fn export_hypothesis_only(pairs: &[GeneratedPair]) -> Vec<HypothesisOnly> {
    pairs
        .iter()
        .map(|p| HypothesisOnly {
            hypothesis: p.hypothesis.clone(),
            label: p.label,
            template_id: p.template_id.clone(),
            is_counterfactual: p.is_counterfactual,
        })
        .collect()
}

/// Uniform sample of `k` distinct pair indices, in ascending order.
pub fn sample_audit<R: Rng + ?Sized>(
    pairs: &[GeneratedPair],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, HypothesisError> {
    if k > pairs.len() {
        return Err(HypothesisError::SampleTooLarge { k, n: pairs.len() });
    }
    let mut idx = rand::seq::index::sample(rng, pairs.len(), k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterfactual::build_pools;
    use crate::table::{ingest_table, TableRecord};
    use crate::template::ReasoningTag;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(id: &str, alma: &str) -> Table {
        let rec: TableRecord = serde_json::from_str(&format!(
            r#"{{"id":"{id}","title":"Janet Leigh","category":"Person","rows":[
            {{"key":"Born","values":["July 6, 1927"]}},{{"key":"Alma Mater","values":["{alma}"]}}]}}"#
        ))
        .unwrap();
        ingest_table(&rec, None).unwrap()
    }

    fn tpl(id: &str, purpose: Purpose, body: &str) -> Template {
        Template::new(id, "Person", ReasoningTag::SimpleLookup, purpose, body).unwrap()
    }

    fn library() -> TemplateLibrary {
        TemplateLibrary::new([
            tpl("h1", Purpose::Hypothesis, "<@Title> graduated from <Alma Mater>."),
            tpl("h2", Purpose::Hypothesis, "<@Title> was born {before/after} {~<Born:Year>±25}."),
            tpl("p1", Purpose::PremiseParaphrase, "<@Title> earned a degree from <Alma Mater>."),
            tpl("p2", Purpose::PremiseParaphrase, "<@Title> is a graduate of <Alma Mater>."),
            tpl("p3", Purpose::PremiseParaphrase, "<Alma Mater> is a alma mater of <@Title>."),
            tpl("p4", Purpose::PremiseParaphrase, "<@Title> was born on <Born>."),
        ])
    }

    #[test]
    fn pool_substitution_changes_the_value() {
        let tables = vec![table("a", "Stanford University"), table("b", "University of California")];
        let pools = build_pools(&tables, None);
        let lib = library();
        let pairs = generate_for_table(&tables[0], &lib, &pools, &GenerationConfig::default()).unwrap();
        let c = pairs.iter().find(|p| p.template_id == "h1" && p.label == Label::Contradict).unwrap();
        assert_eq!(c.hypothesis, "Janet Leigh graduated from University of California.");
        assert_eq!(c.strategy, Strategy::PoolSubstitute);
        assert_eq!(pairs.iter().filter(|p| p.template_id == "h2").count(), 2);
    }

    #[test]
    fn singleton_pool_is_exhausted() {
        let tables = vec![table("a", "Stanford University")];
        let pools = build_pools(&tables, None);
        let lib = library();
        let t = lib.hypothesis("h1").unwrap();
        let b = bind(t, &tables[0], &EvalContext::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(
            pool_substitute_contradict(t, &b, &tables[0], &pools, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(HypothesisError::PoolExhausted("h1".into()))
        );
    }

    #[test]
    fn premise_has_one_sentence_per_row_and_replays() {
        let t = table("a", "Stanford University");
        let lib = library();
        let ctx = EvalContext::default();
        let (p1, ids) = linearize_premise(&t, &lib, None, &ctx, &mut rng_for(5, "a", "premise", 0)).unwrap();
        let (p2, _) = linearize_premise(&t, &lib, None, &ctx, &mut rng_for(5, "a", "premise", 0)).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(ids.len(), 2);
        assert_eq!(ids[0], "p4");
        let only: BTreeSet<String> = ["p4".to_string()].into();
        assert!(matches!(
            linearize_premise(&t, &lib, Some(&only), &ctx, &mut rng_for(5, "a", "premise", 0)),
            Err(HypothesisError::MissingParaphrase { .. })
        ));
    }

    #[test]
    fn balancing_hits_target() {
        let mut pairs = Vec::new();
        for i in 0..30 {
            let label = if i < 20 { Label::Entail } else { Label::Contradict };
            pairs.push(GeneratedPair {
                table_id: format!("t{}", i % 5),
                category: "Person".into(),
                premise: "p".into(),
                hypothesis: "h".into(),
                label,
                template_id: format!("h{i}"),
                keys_used: vec!["Born".into()],
                strategy: Strategy::Direct,
                is_counterfactual: false,
                seed_trace: String::new(),
                premise_templates: vec![],
                binding: None,
            });
        }
        let out = balance_labels(pairs, 1.0, 3, "global");
        let e = out.iter().filter(|p| p.label == Label::Entail).count();
        assert_eq!((e, out.len() - e), (10, 10));
    }

    #[test]
    fn audit_and_export() {
        let tables = vec![table("a", "Stanford University"), table("b", "University of California")];
        let pools = build_pools(&tables, None);
        let set = generate_pairs(&tables, &library(), &pools, &GenerationConfig::default());
        let ho = export_hypothesis_only(&set.pairs);
        assert_eq!(ho.len(), set.pairs.len());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_audit(&set.pairs, 0, &mut rng).unwrap().is_empty());
        let idx = sample_audit(&set.pairs, 3, &mut rng).unwrap();
        assert_eq!(idx.len(), 3);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(matches!(sample_audit(&set.pairs, 999, &mut rng), Err(HypothesisError::SampleTooLarge { .. })));
    }
}
