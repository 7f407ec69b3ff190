//! Train/dev/test partitions over categories, keys, entity types, tables and
//! paraphrase templates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypothesis::{linearize_premise, GeneratedPair, GenerationConfig, TemplateLibrary};
use crate::schema::SchemaSet;
use crate::seed::rng_for;
use crate::table::Table;

/// Lowercase, trimmed, with `-` and `_` read as spaces and runs of
/// whitespace collapsed.
pub fn normalize_unit(s: &str) -> String {
    s.trim().to_lowercase().replace(['-', '_'], " ").split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStrategy {
    CategoryRandom,
    CrossCategory,
    KeyRandom,
    KeyEntity,
    NoPara,
    CrossPara,
}

impl SplitStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitStrategy::CategoryRandom => "category-random",
            SplitStrategy::CrossCategory => "cross-category",
            SplitStrategy::KeyRandom => "key-random",
            SplitStrategy::KeyEntity => "key-entity",
            SplitStrategy::NoPara => "no-para",
            SplitStrategy::CrossPara => "cross-para",
        }
    }
}

impl FromStr for SplitStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let all = [
            SplitStrategy::CategoryRandom,
            SplitStrategy::CrossCategory,
            SplitStrategy::KeyRandom,
            SplitStrategy::KeyEntity,
            SplitStrategy::NoPara,
            SplitStrategy::CrossPara,
        ];
        let norm = normalize_unit(s);
        all.into_iter()
            .find(|x| normalize_unit(x.as_str()) == norm)
            .ok_or_else(|| format!("unknown split strategy '{s}'"))
    }
}

/// The published category assignment.
pub const PUBLISHED_CATEGORY_ASSIGNMENT: [(&str, SplitName); 11] = [
    ("book", SplitName::Train),
    ("paint", SplitName::Train),
    ("sports & events", SplitName::Train),
    ("food & drinks", SplitName::Train),
    ("album", SplitName::Train),
    ("person", SplitName::Dev),
    ("movie", SplitName::Dev),
    ("city", SplitName::Dev),
    ("organization", SplitName::Test),
    ("festival", SplitName::Test),
    ("university", SplitName::Test),
];

/// The published entity-type assignment.
pub const PUBLISHED_ENTITY_ASSIGNMENT: [(&str, SplitName); 11] = [
    ("url", SplitName::Train),
    ("event", SplitName::Train),
    ("person type", SplitName::Train),
    ("skill", SplitName::Train),
    ("product", SplitName::Train),
    ("quantity", SplitName::Dev),
    ("other", SplitName::Dev),
    ("person", SplitName::Dev),
    ("date time", SplitName::Test),
    ("organization", SplitName::Test),
    ("location", SplitName::Test),
];

pub fn assignment_from(pairs: &[(&str, SplitName)]) -> BTreeMap<String, SplitName> {
    pairs.iter().map(|(u, s)| (normalize_unit(u), *s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sizing {
    /// Fractions for train/dev/test summing to 1.
    Ratios([f64; 3]),
    Counts([usize; 3]),
    Explicit(BTreeMap<String, SplitName>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub strategy: SplitStrategy,
    pub sizing: Sizing,
    /// Accuracy percentage below which a cell counts as hard.
    pub hardness_threshold: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(strategy: SplitStrategy, seed: u64) -> Self {
        Self { strategy, sizing: Sizing::Ratios([0.6, 0.2, 0.2]), hardness_threshold: 80.0, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("need at least {needed} units, found {found}")]
    TooFewUnits { found: usize, needed: usize },
    #[error("unit '{0}' has no assignment")]
    MissingUnit(String),
    #[error("key '{0}' has no entity type in the schema")]
    UnmappedKey(String),
    #[error("{category}/{key} has {found} paraphrases; three are needed to split")]
    InsufficientParaphrases { category: String, key: String, found: usize },
    #[error("invalid sizing: {0}")]
    InvalidSizing(String),
    #[error("hardness matrix: {0}")]
    Matrix(String),
    #[error("strategy {0} needs {1}")]
    MissingInput(&'static str, &'static str),
    #[error("pair refers to unknown table '{0}'")]
    UnknownTable(String),
}

/// Square grid of accuracies: rows are the unit trained on, columns the unit
/// evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessMatrix {
    units: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl HardnessMatrix {
    pub fn new(units: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, SplitError> {
        let n = units.len();
        if n == 0 {
            return Err(SplitError::Matrix("empty matrix".into()));
        }
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(SplitError::Matrix(format!("matrix must be {n}x{n}")));
        }
        if let Some(v) = values.iter().flatten().find(|v| !(0.0..=100.0).contains(*v)) {
            return Err(SplitError::Matrix(format!("value {v} outside [0, 100]")));
        }
        let units: Vec<String> = units.iter().map(|u| normalize_unit(u)).collect();
        let distinct: BTreeSet<&String> = units.iter().collect();
        if distinct.len() != n {
            return Err(SplitError::Matrix("duplicate unit names".into()));
        }
        Ok(Self { units, values })
    }

    /// Reads a CSV whose header row names the units (an optional leading
    /// label column is ignored) and whose rows hold the accuracies.
    pub fn from_csv(text: &str) -> Result<Self, SplitError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> =
            rdr.headers().map_err(|e| SplitError::Matrix(e.to_string()))?.iter().map(str::to_string).collect();
        let mut rows: Vec<Vec<String>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| SplitError::Matrix(e.to_string()))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        let labelled = header.len() == rows.len() + 1;
        let units: Vec<String> = if labelled { header[1..].to_vec() } else { header };
        let mut values = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let cells = if labelled {
                if normalize_unit(&row[0]) != normalize_unit(&units[i]) {
                    return Err(SplitError::Matrix(format!(
                        "row {} is labelled '{}', expected '{}'",
                        i + 1,
                        row[0],
                        units[i]
                    )));
                }
                &row[1..]
            } else {
                &row[..]
            };
            let parsed: Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
            values.push(parsed.map_err(|e| SplitError::Matrix(format!("row {}: {e}", i + 1)))?);
        }
        Self::new(units, values)
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn get(&self, trained_on: usize, evaluated_on: usize) -> f64 {
        self.values[trained_on][evaluated_on]
    }
}

/// For each unit, how many other units' models score below `threshold` when
/// evaluated on it (its column, diagonal excluded).
pub fn below_threshold_counts(matrix: &HardnessMatrix, threshold: f64) -> BTreeMap<String, usize> {
    let n = matrix.units.len();
    (0..n)
        .map(|j| {
            let count = (0..n).filter(|&i| i != j && matrix.get(i, j) < threshold).count();
            (matrix.units[j].clone(), count)
        })
        .collect()
}

/// Split sizes for `n` units: largest remainder over the ratios, with every
/// split getting at least one unit.
pub fn split_sizes(n: usize, sizing: &Sizing) -> Result<[usize; 3], SplitError> {
    if n < 3 {
        return Err(SplitError::TooFewUnits { found: n, needed: 3 });
    }
    match sizing {
        Sizing::Counts(c) => {
            if c.iter().sum::<usize>() != n || c.contains(&0) {
                return Err(SplitError::InvalidSizing(format!("counts {c:?} do not partition {n} units")));
            }
            Ok(*c)
        }
        Sizing::Ratios(r) => {
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > 1e-6 || r.iter().any(|x| *x < 0.0) {
                return Err(SplitError::InvalidSizing(format!("ratios {r:?} must be non-negative and sum to 1")));
            }
            let exact: Vec<f64> = r.iter().map(|x| x * n as f64).collect();
            let mut sizes: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
            let mut order: Vec<usize> = (0..3).collect();
            order.sort_by(|&a, &b| {
                let fa = exact[a] - sizes[a] as f64;
                let fb = exact[b] - sizes[b] as f64;
                fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            });
            let mut left = n - sizes.iter().sum::<usize>();
            for &i in order.iter().cycle() {
                if left == 0 {
                    break;
                }
                sizes[i] += 1;
                left -= 1;
            }
            for i in 0..3 {
                if sizes[i] == 0 {
                    let donor = (0..3).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).expect("three splits");
                    sizes[donor] -= 1;
                    sizes[i] = 1;
                }
            }
            Ok([sizes[0], sizes[1], sizes[2]])
        }
        Sizing::Explicit(_) => Err(SplitError::InvalidSizing("explicit assignment has no sizes".into())),
    }
}

fn assign_in_order(ordered: &[String], sizes: [usize; 3]) -> BTreeMap<String, SplitName> {
    let mut out = BTreeMap::new();
    let mut it = ordered.iter();
    for (split, n) in [(SplitName::Test, sizes[2]), (SplitName::Dev, sizes[1]), (SplitName::Train, sizes[0])] {
        for u in it.by_ref().take(n) {
            out.insert(u.clone(), split);
        }
    }
    out
}

/// Ranks units by below-threshold count (descending, ties by name) and fills
/// test, then dev, then train.
pub fn hardness_assignment(
    matrix: &HardnessMatrix,
    units: Option<&BTreeSet<String>>,
    sizing: &Sizing,
    threshold: f64,
) -> Result<BTreeMap<String, SplitName>, SplitError> {
    let counts = below_threshold_counts(matrix, threshold);
    let universe: Vec<String> = match units {
        Some(present) => {
            for u in present {
                if !counts.contains_key(u) {
                    return Err(SplitError::MissingUnit(u.clone()));
                }
            }
            present.iter().cloned().collect()
        }
        None => matrix.units.clone(),
    };
    let mut ranked = universe;
    ranked.sort_by(|a, b| counts[b].cmp(&counts[a]).then_with(|| a.cmp(b)));
    let sizes = split_sizes(ranked.len(), sizing)?;
    Ok(assign_in_order(&ranked, sizes))
}

fn random_assignment(
    units: &BTreeSet<String>,
    sizing: &Sizing,
    seed: u64,
    scope: &str,
) -> Result<BTreeMap<String, SplitName>, SplitError> {
    if let Sizing::Explicit(a) = sizing {
        return explicit(units, a);
    }
    let sizes = split_sizes(units.len(), sizing)?;
    let mut order: Vec<String> = units.iter().cloned().collect();
    order.shuffle(&mut rng_for(seed, scope, "split", 0));
    Ok(assign_in_order(&order, sizes))
}

fn explicit(
    units: &BTreeSet<String>,
    a: &BTreeMap<String, SplitName>,
) -> Result<BTreeMap<String, SplitName>, SplitError> {
    let a: BTreeMap<String, SplitName> = a.iter().map(|(k, v)| (normalize_unit(k), *v)).collect();
    let mut out = BTreeMap::new();
    for u in units {
        out.insert(u.clone(), *a.get(u).ok_or_else(|| SplitError::MissingUnit(u.clone()))?);
    }
    Ok(out)
}

/// A finished split: unit assignment and the pairs of each split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    pub strategy: SplitStrategy,
    pub units: BTreeMap<String, SplitName>,
    pub splits: [Vec<GeneratedPair>; 3],
    /// Pairs whose units fell into different splits (or whose premise could
    /// not be rebuilt from the split's paraphrases).
    pub dropped: usize,
    /// Paraphrase ids available to each split (cross-paraphrase only).
    pub paraphrase_groups: Option<[BTreeSet<String>; 3]>,
}

impl SplitAssignment {
    pub fn get(&self, s: SplitName) -> &[GeneratedPair] {
        &self.splits[s.index()]
    }

    pub fn manifest(&self, spec: &SplitSpec) -> SplitManifest {
        SplitManifest {
            strategy: self.strategy.as_str().to_string(),
            seed: spec.seed,
            hardness_threshold: spec.hardness_threshold,
            units: self.units.iter().map(|(u, s)| (u.clone(), s.as_str().to_string())).collect(),
            counts: SplitName::ALL.iter().map(|s| (s.as_str().to_string(), self.get(*s).len())).collect(),
            dropped: self.dropped,
            paraphrase_groups: self.paraphrase_groups.as_ref().map(|g| {
                SplitName::ALL
                    .iter()
                    .map(|s| (s.as_str().to_string(), g[s.index()].iter().cloned().collect()))
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub strategy: String,
    pub seed: u64,
    pub hardness_threshold: f64,
    pub units: BTreeMap<String, String>,
    pub counts: BTreeMap<String, usize>,
    pub dropped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paraphrase_groups: Option<BTreeMap<String, Vec<String>>>,
}

/// Everything a split strategy might consult besides the pairs.
#[derive(Debug, Clone, Copy, Default)]
pub struct SplitInputs<'a> {
    pub tables: Option<&'a [Table]>,
    pub schemas: Option<&'a SchemaSet>,
    pub library: Option<&'a TemplateLibrary>,
    pub matrix: Option<&'a HardnessMatrix>,
    pub generation: Option<&'a GenerationConfig>,
}

/// Distributes pairs by the units returned from `units_of`; pairs spanning
/// several splits are dropped.
fn partition<F>(
    pairs: &[GeneratedPair],
    assignment: &BTreeMap<String, SplitName>,
    units_of: F,
) -> Result<([Vec<GeneratedPair>; 3], usize), SplitError>
where
    F: Fn(&GeneratedPair) -> Result<Vec<String>, SplitError>,
{
    let mut splits: [Vec<GeneratedPair>; 3] = Default::default();
    let mut dropped = 0;
    for p in pairs {
        let mut targets = BTreeSet::new();
        for u in units_of(p)? {
            targets.insert(*assignment.get(&u).ok_or_else(|| SplitError::MissingUnit(u.clone()))?);
        }
        match targets.len() {
            1 => splits[targets.into_iter().next().expect("one").index()].push(p.clone()),
            _ => dropped += 1,
        }
    }
    Ok((splits, dropped))
}

pub fn split_by_category(pairs: &[GeneratedPair], spec: &SplitSpec) -> Result<SplitAssignment, SplitError> {
    let units: BTreeSet<String> = pairs.iter().map(|p| normalize_unit(&p.category)).collect();
    let assignment = random_assignment(&units, &spec.sizing, spec.seed, "category")?;
    let (splits, dropped) = partition(pairs, &assignment, |p| Ok(vec![normalize_unit(&p.category)]))?;
    Ok(SplitAssignment {
        strategy: SplitStrategy::CategoryRandom,
        units: assignment,
        splits,
        dropped,
        paraphrase_groups: None,
    })
}

pub fn split_by_hardness(
    pairs: &[GeneratedPair],
    matrix: &HardnessMatrix,
    spec: &SplitSpec,
) -> Result<SplitAssignment, SplitError> {
    let units: BTreeSet<String> = pairs.iter().map(|p| normalize_unit(&p.category)).collect();
    let assignment = match &spec.sizing {
        Sizing::Explicit(a) => explicit(&units, a)?,
        sizing => hardness_assignment(matrix, Some(&units), sizing, spec.hardness_threshold)?,
    };
    let (splits, dropped) = partition(pairs, &assignment, |p| Ok(vec![normalize_unit(&p.category)]))?;
    Ok(SplitAssignment {
        strategy: SplitStrategy::CrossCategory,
        units: assignment,
        splits,
        dropped,
        paraphrase_groups: None,
    })
}

pub fn split_by_key(pairs: &[GeneratedPair], spec: &SplitSpec) -> Result<SplitAssignment, SplitError> {
    let units: BTreeSet<String> = pairs.iter().flat_map(|p| p.keys_used.iter().map(|k| normalize_unit(k))).collect();
    let assignment = random_assignment(&units, &spec.sizing, spec.seed, "key")?;
    let (splits, dropped) =
        partition(pairs, &assignment, |p| Ok(p.keys_used.iter().map(|k| normalize_unit(k)).collect()))?;
    Ok(SplitAssignment {
        strategy: SplitStrategy::KeyRandom,
        units: assignment,
        splits,
        dropped,
        paraphrase_groups: None,
    })
}

/// Assigns pairs by the entity types of their keys. Without a matrix or an
/// explicit assignment the published entity assignment is used.
pub fn split_by_key_entity(
    pairs: &[GeneratedPair],
    schemas: &SchemaSet,
    matrix: Option<&HardnessMatrix>,
    spec: &SplitSpec,
) -> Result<SplitAssignment, SplitError> {
    let entity_of = |p: &GeneratedPair| -> Result<Vec<String>, SplitError> {
        p.keys_used
            .iter()
            .map(|k| {
                schemas
                    .key(&p.category, k)
                    .map(|ks| ks.entity_type.unit_name().to_string())
                    .ok_or_else(|| SplitError::UnmappedKey(format!("{}/{k}", p.category)))
            })
            .collect()
    };
    let mut units = BTreeSet::new();
    for p in pairs {
        units.extend(entity_of(p)?);
    }
    let assignment = match (&spec.sizing, matrix) {
        (Sizing::Explicit(a), _) => explicit(&units, a)?,
        (sizing, Some(m)) => hardness_assignment(m, Some(&units), sizing, spec.hardness_threshold)?,
        (_, None) => explicit(&units, &assignment_from(&PUBLISHED_ENTITY_ASSIGNMENT))?,
    };
    let (splits, dropped) = partition(pairs, &assignment, entity_of)?;
    Ok(SplitAssignment {
        strategy: SplitStrategy::KeyEntity,
        units: assignment,
        splits,
        dropped,
        paraphrase_groups: None,
    })
}

/// Table-family partition. In cross-paraphrase mode each key's paraphrases
/// are also divided three ways and premises are rebuilt from the split's own
/// group.
pub fn split_paraphrase(
    pairs: &[GeneratedPair],
    tables: &[Table],
    mode: SplitStrategy,
    library: Option<&TemplateLibrary>,
    generation: Option<&GenerationConfig>,
    spec: &SplitSpec,
) -> Result<SplitAssignment, SplitError> {
    let family: BTreeMap<&str, &str> = tables.iter().map(|t| (t.id(), t.family_id())).collect();
    let family_of = |p: &GeneratedPair| -> Result<Vec<String>, SplitError> {
        family
            .get(p.table_id.as_str())
            .map(|f| vec![f.to_string()])
            .ok_or_else(|| SplitError::UnknownTable(p.table_id.clone()))
    };
    let mut units = BTreeSet::new();
    for p in pairs {
        units.extend(family_of(p)?);
    }
    let assignment = random_assignment(&units, &spec.sizing, spec.seed, "table")?;
    let (mut splits, mut dropped) = partition(pairs, &assignment, family_of)?;
    if mode != SplitStrategy::CrossPara {
        return Ok(SplitAssignment {
            strategy: SplitStrategy::NoPara,
            units: assignment,
            splits,
            dropped,
            paraphrase_groups: None,
        });
    }

    let library = library.ok_or(SplitError::MissingInput("cross-para", "a template library"))?;
    let default_gen = GenerationConfig::default();
    let generation = generation.unwrap_or(&default_gen);
    let mut by_key: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for t in library.all_paraphrases() {
        if let Some(k) = t.keys_used().into_iter().next() {
            by_key.entry((t.category.clone(), k)).or_default().push(t.id.clone());
        }
    }
    let mut groups: [BTreeSet<String>; 3] = Default::default();
    for ((category, key), mut ids) in by_key {
        if ids.len() < 3 {
            return Err(SplitError::InsufficientParaphrases { category, key, found: ids.len() });
        }
        ids.sort();
        ids.shuffle(&mut rng_for(spec.seed, &format!("{category}/{key}"), "cross-para", 0));
        let sizes = split_sizes(ids.len(), &Sizing::Ratios([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]))?;
        let mut it = ids.into_iter();
        for (g, n) in groups.iter_mut().zip(sizes) {
            g.extend(it.by_ref().take(n));
        }
    }

    let by_id: BTreeMap<&str, &Table> = tables.iter().map(|t| (t.id(), t)).collect();
    let ctx = crate::expr::EvalContext { reference_date: generation.reference_date };
    for (si, split) in splits.iter_mut().enumerate() {
        let mut premises: BTreeMap<String, Option<(String, Vec<String>)>> = BTreeMap::new();
        let mut kept = Vec::with_capacity(split.len());
        for mut p in std::mem::take(split) {
            let entry = premises.entry(p.table_id.clone()).or_insert_with(|| {
                let table = by_id[p.table_id.as_str()];
                let mut rng = rng_for(generation.seed, table.id(), "premise", 0);
                linearize_premise(table, library, Some(&groups[si]), &ctx, &mut rng).ok()
            });
            match entry {
                Some((premise, ids)) => {
                    p.premise = premise.clone();
                    p.premise_templates = ids.clone();
                    kept.push(p);
                }
                None => dropped += 1,
            }
        }
        *split = kept;
    }
    Ok(SplitAssignment {
        strategy: SplitStrategy::CrossPara,
        units: assignment,
        splits,
        dropped,
        paraphrase_groups: Some(groups),
    })
}

/// Dispatches to the strategy named in `spec`.
pub fn build_split(
    pairs: &[GeneratedPair],
    inputs: &SplitInputs<'_>,
    spec: &SplitSpec,
) -> Result<SplitAssignment, SplitError> {
    match spec.strategy {
        SplitStrategy::CategoryRandom => split_by_category(pairs, spec),
        SplitStrategy::CrossCategory => match (inputs.matrix, &spec.sizing) {
            (Some(m), _) => split_by_hardness(pairs, m, spec),
            (None, Sizing::Explicit(_)) => split_by_category(pairs, spec).map(|mut a| {
                a.strategy = SplitStrategy::CrossCategory;
                a
            }),
            (None, _) => Err(SplitError::MissingInput("cross-category", "a hardness matrix or explicit assignment")),
        },
        SplitStrategy::KeyRandom => split_by_key(pairs, spec),
        SplitStrategy::KeyEntity => {
            let schemas = inputs.schemas.ok_or(SplitError::MissingInput("key-entity", "schemas"))?;
            split_by_key_entity(pairs, schemas, inputs.matrix, spec)
        }
        mode @ (SplitStrategy::NoPara | SplitStrategy::CrossPara) => {
            let tables = inputs.tables.ok_or(SplitError::MissingInput("paraphrase splits", "tables"))?;
            split_paraphrase(pairs, tables, mode, inputs.library, inputs.generation, spec)
        }
    }
}
