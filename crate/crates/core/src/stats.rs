//! Corpus-level counts and averages.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::hypothesis::GeneratedPair;
use crate::table::{Table, TableError};
use crate::template::Label;

/// Which tables an average is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageBase {
    #[default]
    AllTables,
    OriginalsOnly,
}

/// An exact quotient of two totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    /// The quotient, or 0 for an empty base.
    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub unique_key_count: usize,
    pub table_count: usize,
    pub original_count: usize,
    pub counterfactual_count: usize,
    pub average_base: AverageBase,
    pub avg_keys_per_table: Ratio,
    pub avg_pairs_per_table: Ratio,
    pub label_counts: BTreeMap<String, usize>,
    pub counterfactual_ratio: Ratio,
    pub pairs_per_category: BTreeMap<String, usize>,
}

pub fn corpus_stats(tables: &[Table], pairs: &[GeneratedPair], base: AverageBase) -> Result<CorpusStats, TableError> {
    let by_id: HashMap<&str, &Table> = tables.iter().map(|t| (t.id(), t)).collect();
    let in_base = |t: &Table| base == AverageBase::AllTables || !t.is_counterfactual();

    let mut label_counts: BTreeMap<String, usize> =
        [(Label::Entail, 0), (Label::Contradict, 0)].into_iter().map(|(l, n)| (l.code().to_string(), n)).collect();
    let mut pairs_per_category: BTreeMap<String, usize> = BTreeMap::new();
    let mut base_pairs = 0u64;
    for p in pairs {
        let t = by_id.get(p.table_id.as_str()).ok_or_else(|| TableError::UnknownTableId(p.table_id.clone()))?;
        *label_counts.entry(p.label.code().to_string()).or_default() += 1;
        *pairs_per_category.entry(t.category().to_string()).or_default() += 1;
        if in_base(t) {
            base_pairs += 1;
        }
    }
    let base_tables: Vec<&Table> = tables.iter().filter(|t| in_base(t)).collect();
    let keys: BTreeSet<&str> = tables.iter().flat_map(|t| t.rows().iter().map(|r| r.key())).collect();
    let counterfactual_count = tables.iter().filter(|t| t.is_counterfactual()).count();
    Ok(CorpusStats {
        unique_key_count: keys.len(),
        table_count: tables.len(),
        original_count: tables.len() - counterfactual_count,
        counterfactual_count,
        average_base: base,
        avg_keys_per_table: Ratio::new(
            base_tables.iter().map(|t| t.key_count() as u64).sum(),
            base_tables.len() as u64,
        ),
        avg_pairs_per_table: Ratio::new(base_pairs, base_tables.len() as u64),
        label_counts,
        counterfactual_ratio: Ratio::new(counterfactual_count as u64, tables.len() as u64),
        pairs_per_category,
    })
}
