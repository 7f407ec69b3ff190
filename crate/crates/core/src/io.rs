//! Text formats: template and constraint files, pair TSVs and audit sheets.

use std::collections::HashMap;

use thiserror::Error;

use crate::constraint::{parse_constraint, Constraint};
use crate::hypothesis::{GeneratedPair, Strategy, TemplateLibrary};
use crate::schema::SchemaSet;
use crate::table::Table;
use crate::template::{Label, Purpose, ReasoningTag, Template};

/// A problem with one line of an input file (1-based).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

/// Parses `id TAB category TAB reasoning_tag TAB purpose TAB body` records.
/// Returns the templates that parsed, each with its line, and the errors.
pub fn parse_template_file(text: &str) -> (Vec<(usize, Template)>, Vec<RecordError>) {
    let mut ok = Vec::new();
    let mut errs = Vec::new();
    for (line, l) in records(text) {
        let fields: Vec<&str> = l.splitn(5, '\t').collect();
        let err = |message: String| RecordError { line, message };
        if fields.len() != 5 {
            errs.push(err(format!("expected 5 tab-separated fields, found {}", fields.len())));
            continue;
        }
        let tag = match fields[2].parse::<ReasoningTag>() {
            Ok(t) => t,
            Err(e) => {
                errs.push(err(e));
                continue;
            }
        };
        let purpose = match fields[3].parse::<Purpose>() {
            Ok(p) => p,
            Err(e) => {
                errs.push(err(e));
                continue;
            }
        };
        match Template::new(fields[0].trim(), fields[1].trim(), tag, purpose, fields[4]) {
            Ok(t) => ok.push((line, t)),
            Err(e) => errs.push(err(format!("template '{}': {e}", fields[0].trim()))),
        }
    }
    (ok, errs)
}

/// Parses `id TAB category TAB predicate` records.
pub fn parse_constraint_file(text: &str, schemas: Option<&SchemaSet>) -> (Vec<(usize, Constraint)>, Vec<RecordError>) {
    let mut ok = Vec::new();
    let mut errs = Vec::new();
    for (line, l) in records(text) {
        let fields: Vec<&str> = l.splitn(3, '\t').collect();
        if fields.len() != 3 {
            errs.push(RecordError {
                line,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
            continue;
        }
        match parse_constraint(fields[0].trim(), fields[1].trim(), fields[2], schemas) {
            Ok(c) => ok.push((line, c)),
            Err(e) => errs.push(RecordError { line, message: format!("constraint '{}': {e}", fields[0].trim()) }),
        }
    }
    (ok, errs)
}

/// Replaces tabs and line breaks so a field fits in one TSV cell.
pub fn sanitize(s: &str) -> String {
    s.replace(['\t', '\r', '\n'], " ")
}

pub const PAIR_HEADER: &str = "index\ttable_id\tpremise\thypothesis\tlabel\ttemplate_id\tis_counterfactual";
pub const HYPOTHESIS_ONLY_HEADER: &str = "index\thypothesis\tlabel\ttemplate_id\tis_counterfactual";
pub const AUDIT_HEADER: &str =
    "index\ttable_id\tpremise\thypothesis\tlabel\ttemplate_id\tverified_label\tgrammar\tcomplexity";

pub fn write_pairs_tsv(pairs: &[GeneratedPair]) -> String {
    let mut out = String::from(PAIR_HEADER);
    out.push('\n');
    for (i, p) in pairs.iter().enumerate() {
        out.push_str(&format!(
            "{i}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            sanitize(&p.table_id),
            sanitize(&p.premise),
            sanitize(&p.hypothesis),
            p.label.code(),
            sanitize(&p.template_id),
            p.is_counterfactual
        ));
    }
    out
}

pub fn write_hypothesis_only_tsv(pairs: &[GeneratedPair]) -> String {
    let mut out = String::from(HYPOTHESIS_ONLY_HEADER);
    out.push('\n');
    for (i, h) in crate::hypothesis::export_hypothesis_only(pairs).iter().enumerate() {
        out.push_str(&format!(
            "{i}\t{}\t{}\t{}\t{}\n",
            sanitize(&h.hypothesis),
            h.label.code(),
            sanitize(&h.template_id),
            h.is_counterfactual
        ));
    }
    out
}

/// Audit sheet rows for the sampled pair indices, with blank review columns.
pub fn write_audit_tsv(pairs: &[GeneratedPair], sample: &[usize]) -> String {
    let mut out = String::from(AUDIT_HEADER);
    out.push('\n');
    for &i in sample {
        let p = &pairs[i];
        out.push_str(&format!(
            "{i}\t{}\t{}\t{}\t{}\t{}\t\t\t\n",
            sanitize(&p.table_id),
            sanitize(&p.premise),
            sanitize(&p.hypothesis),
            p.label.code(),
            sanitize(&p.template_id)
        ));
    }
    out
}

/// Reads a pair TSV back. Category, keys and strategy are recovered from the
/// tables and template library when given.
pub fn read_pairs_tsv(
    text: &str,
    tables: Option<&[Table]>,
    library: Option<&TemplateLibrary>,
) -> Result<Vec<GeneratedPair>, RecordError> {
    let by_id: HashMap<&str, &Table> = tables.unwrap_or(&[]).iter().map(|t| (t.id(), t)).collect();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == PAIR_HEADER => {}
        Some(_) => return Err(RecordError { line: 1, message: "unexpected header".into() }),
        None => return Ok(Vec::new()),
    }
    let mut out = Vec::new();
    for (i, l) in lines {
        let line = i + 1;
        let l = l.trim_end_matches('\r');
        if l.is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 7 {
            return Err(RecordError { line, message: format!("expected 7 fields, found {}", f.len()) });
        }
        let label =
            Label::from_code(f[4]).ok_or_else(|| RecordError { line, message: format!("bad label '{}'", f[4]) })?;
        let is_counterfactual: bool =
            f[6].parse().map_err(|_| RecordError { line, message: format!("bad is_counterfactual '{}'", f[6]) })?;
        let tpl = library.and_then(|lib| lib.hypothesis(f[5]));
        let category = by_id
            .get(f[1])
            .map(|t| t.category().to_string())
            .or_else(|| tpl.map(|t| t.category.clone()))
            .unwrap_or_default();
        out.push(GeneratedPair {
            table_id: f[1].to_string(),
            category,
            premise: f[2].to_string(),
            hypothesis: f[3].to_string(),
            label,
            template_id: f[5].to_string(),
            keys_used: tpl.map(|t| t.keys_used()).unwrap_or_default(),
            strategy: tpl.map_or(Strategy::Direct, |t| Strategy::infer(t.control(), label)),
            is_counterfactual,
            seed_trace: String::new(),
            premise_templates: Vec::new(),
            binding: None,
        });
    }
    Ok(out)
}
