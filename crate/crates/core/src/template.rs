//! The hypothesis and premise-paraphrase template language.
//!
//! A template body mixes literal text with placeholders:
//!
//! | form | meaning |
//! |------|---------|
//! | `<Key>`, `<Key[2]>`, `<Key:Year>` | value slot, optionally indexed and extracted |
//! | `<@Title>` | the table's subject entity |
//! | `{before/after}` | choice: first option claims base < anchor, second base > anchor |
//! | `{~<Born:Year>±25}` | pivot: a synthesized number near the true value |
//! | `{more ?? <Died> - <Born> > 70 :: less}` | conditional: then-text claims the condition |
//!
//! `\` escapes the next character. A choice compares against the template's
//! pivot, or failing that against the first numeric slot, which then renders
//! as a synthesized literal instead of its true value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{
    self, check_cond, eval_cond, eval_term, extract, extract_all, find_unescaped, format_plain, parse_cond,
    parse_slot_body, parse_term_str, slot_kind, CondExpr, EvalContext, EvalError, ExprError, ExtractError, Extractor,
    Operand, Scalar, SlotRef, StaticKind, Term, TypeError,
};
use crate::schema::CategorySchema;
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReasoningTag {
    Numerical,
    CoReference,
    MultiRow,
    Kcs,
    Temporal,
    SyntacticAlt,
    SimpleLookup,
    EntityType,
    Ellipsis,
    SubjectiveOot,
    NameId,
    Lexical,
    Quantification,
    Negation,
}

impl ReasoningTag {
    pub const ALL: [ReasoningTag; 14] = [
        ReasoningTag::Numerical,
        ReasoningTag::CoReference,
        ReasoningTag::MultiRow,
        ReasoningTag::Kcs,
        ReasoningTag::Temporal,
        ReasoningTag::SyntacticAlt,
        ReasoningTag::SimpleLookup,
        ReasoningTag::EntityType,
        ReasoningTag::Ellipsis,
        ReasoningTag::SubjectiveOot,
        ReasoningTag::NameId,
        ReasoningTag::Lexical,
        ReasoningTag::Quantification,
        ReasoningTag::Negation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReasoningTag::Numerical => "numerical",
            ReasoningTag::CoReference => "co-reference",
            ReasoningTag::MultiRow => "multi-row",
            ReasoningTag::Kcs => "KCS",
            ReasoningTag::Temporal => "temporal",
            ReasoningTag::SyntacticAlt => "syntactic-alt",
            ReasoningTag::SimpleLookup => "simple-lookup",
            ReasoningTag::EntityType => "entity-type",
            ReasoningTag::Ellipsis => "ellipsis",
            ReasoningTag::SubjectiveOot => "subjective-oot",
            ReasoningTag::NameId => "name-id",
            ReasoningTag::Lexical => "lexical",
            ReasoningTag::Quantification => "quantification",
            ReasoningTag::Negation => "negation",
        }
    }
}

impl FromStr for ReasoningTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ReasoningTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown reasoning tag '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    Hypothesis,
    PremiseParaphrase,
}

impl Purpose {
    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::Hypothesis => "hypothesis",
            Purpose::PremiseParaphrase => "premise-paraphrase",
        }
    }
}

impl FromStr for Purpose {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hypothesis" => Ok(Purpose::Hypothesis),
            "premise-paraphrase" | "paraphrase" => Ok(Purpose::PremiseParaphrase),
            other => Err(format!("unknown purpose '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Literal(String),
    Slot(SlotRef),
    Title,
    Pivot { base: Term, window: Option<u32> },
    Choice { first: String, second: String },
    Conditional { cond: CondExpr, then_text: String, else_text: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown extractor '{0}'")]
    UnknownExtractor(String),
    #[error("template has more than one choice")]
    MultipleChoiceNodes,
    #[error("template has more than one pivot")]
    MultiplePivots,
    #[error("template has more than one conditional")]
    MultipleConditionals,
    #[error("a conditional cannot be combined with a choice or pivot")]
    ConflictingControls,
    #[error("premise paraphrases cannot contain choices or pivots")]
    ControlInParaphrase,
    #[error("premise paraphrase must reference exactly one key, found {0:?}")]
    ParaphraseKeys(Vec<String>),
    #[error("pivot window must be at least 1")]
    ZeroWindow,
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("incomparable kinds: {0}")]
    IncomparableKinds(String),
    #[error("count extractor on single-valued key '{0}'")]
    CountOnSingleValued(String),
    #[error("category mismatch: template '{template}' vs table '{table}'")]
    CategoryMismatch { template: String, table: String },
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("choice has no pivot or numeric slot to compare against")]
    NoComparisonAnchor,
    #[error("pivot has no candidate literal")]
    EmptyPivotRange,
    #[error("template has no controllable element; contradictions need pool substitution")]
    Uncontrollable,
    #[error("binding is missing node {0}")]
    MissingBinding(usize),
}

impl From<ExprError> for TemplateError {
    fn from(e: ExprError) -> Self {
        match e {
            ExprError::Syntax { pos, message } => TemplateError::Syntax { pos, message },
            ExprError::UnknownExtractor(x) => TemplateError::UnknownExtractor(x),
        }
    }
}

impl From<EvalError> for TemplateError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Extract(x) => TemplateError::Extract(x),
            EvalError::IncomparableKinds(m) => TemplateError::IncomparableKinds(m),
        }
    }
}

impl From<TypeError> for TemplateError {
    fn from(e: TypeError) -> Self {
        match e {
            TypeError::UnknownKey(k) => TemplateError::UnknownKey(k),
            TypeError::IncomparableKinds(m) => TemplateError::IncomparableKinds(m),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing and printing
// ---------------------------------------------------------------------------

/// Parses a template body into nodes and checks structural invariants.
pub fn parse_template(source: &str) -> Result<Vec<Node>, TemplateError> {
    if source.trim().is_empty() {
        return Err(TemplateError::Syntax { pos: 0, message: "empty template".into() });
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut lit = String::new();
    let mut i = 0;
    while i < source.len() {
        let c = source[i..].chars().next().expect("in bounds");
        match c {
            '\\' => {
                let next = source[i + 1..]
                    .chars()
                    .next()
                    .ok_or(TemplateError::Syntax { pos: i, message: "dangling escape".into() })?;
                lit.push(next);
                i += 1 + next.len_utf8();
            }
            '<' => {
                let close = find_unescaped(&source[i + 1..], '>')
                    .ok_or(TemplateError::Syntax { pos: i, message: "unclosed '<'".into() })?;
                let body = &source[i + 1..i + 1 + close];
                flush(&mut nodes, &mut lit);
                if body.trim_start().starts_with('@') {
                    nodes.push(Node::Title);
                } else {
                    nodes.push(Node::Slot(parse_slot_body(body, i + 1)?));
                }
                i += close + 2;
            }
            '{' => {
                let close = find_group_end(&source[i + 1..])
                    .ok_or(TemplateError::Syntax { pos: i, message: "unclosed '{'".into() })?;
                let body = &source[i + 1..i + 1 + close];
                flush(&mut nodes, &mut lit);
                nodes.push(parse_group(body, i + 1)?);
                i += close + 2;
            }
            '}' => {
                return Err(TemplateError::Syntax { pos: i, message: "unmatched '}'".into() });
            }
            _ => {
                lit.push(c);
                i += c.len_utf8();
            }
        }
    }
    flush(&mut nodes, &mut lit);
    check_structure(&nodes)?;
    Ok(nodes)
}

fn flush(nodes: &mut Vec<Node>, lit: &mut String) {
    if lit.is_empty() {
        return;
    }
    if let Some(Node::Literal(prev)) = nodes.last_mut() {
        prev.push_str(lit);
    } else {
        nodes.push(Node::Literal(lit.clone()));
    }
    lit.clear();
}

/// Finds the `}` closing a group, skipping escapes and `<...>` slots.
fn find_group_end(s: &str) -> Option<usize> {
    let mut escaped = false;
    let mut in_slot = false;
    for (i, c) in s.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            '<' if !in_slot => {
                // `<` followed by space or `=` is a comparison, not a slot.
                in_slot = !matches!(s[i + 1..].chars().next(), None | Some(' ' | '=' | '>'));
            }
            '>' if in_slot => in_slot = false,
            '}' if !in_slot => return Some(i),
            '{' if !in_slot => return None,
            _ => {}
        }
    }
    None
}

fn find_unescaped_seq(s: &str, seq: &str) -> Option<usize> {
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if s[i..].starts_with(seq) {
            return Some(i);
        }
    }
    None
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out.trim().to_string()
}

fn parse_group(body: &str, offset: usize) -> Result<Node, TemplateError> {
    let trimmed = body.trim_start();
    if let Some(rest) = trimmed.strip_prefix('~') {
        let start = offset + (body.len() - rest.len());
        let (term_src, window) =
            match rest.find('±').map(|p| (p, '±'.len_utf8())).or_else(|| rest.find("+-").map(|p| (p, 2))) {
                Some((p, len)) => {
                    let w = rest[p + len..].trim();
                    let w: u32 = w.parse().map_err(|_| TemplateError::Syntax {
                        pos: start + p,
                        message: format!("bad pivot window '{w}'"),
                    })?;
                    if w == 0 {
                        return Err(TemplateError::ZeroWindow);
                    }
                    (&rest[..p], Some(w))
                }
                None => (rest, None),
            };
        let base = parse_term_str(term_src, start)?;
        return Ok(Node::Pivot { base, window });
    }
    if let Some(q) = find_unescaped_seq(body, "??") {
        let then_text = unescape(&body[..q]);
        let after = &body[q + 2..];
        let c = find_unescaped_seq(after, "::")
            .ok_or(TemplateError::Syntax { pos: offset + q, message: "conditional needs '::'".into() })?;
        let cond = parse_cond(&after[..c], offset + q + 2)?;
        let else_text = unescape(&after[c + 2..]);
        return Ok(Node::Conditional { cond, then_text, else_text });
    }
    let Some(slash) = find_unescaped(body, '/') else {
        return Err(TemplateError::Syntax {
            pos: offset,
            message: "group is not a choice, pivot or conditional".into(),
        });
    };
    let second = &body[slash + 1..];
    if find_unescaped(second, '/').is_some() {
        return Err(TemplateError::Syntax { pos: offset + slash, message: "choice takes exactly two options".into() });
    }
    Ok(Node::Choice { first: unescape(&body[..slash]), second: unescape(second) })
}

fn check_structure(nodes: &[Node]) -> Result<(), TemplateError> {
    let count = |f: fn(&Node) -> bool| nodes.iter().filter(|n| f(n)).count();
    let choices = count(|n| matches!(n, Node::Choice { .. }));
    let pivots = count(|n| matches!(n, Node::Pivot { .. }));
    let conds = count(|n| matches!(n, Node::Conditional { .. }));
    if choices > 1 {
        return Err(TemplateError::MultipleChoiceNodes);
    }
    if pivots > 1 {
        return Err(TemplateError::MultiplePivots);
    }
    if conds > 1 {
        return Err(TemplateError::MultipleConditionals);
    }
    if conds == 1 && choices + pivots > 0 {
        return Err(TemplateError::ConflictingControls);
    }
    Ok(())
}

fn escape_into(out: &mut String, text: &str, special: &[char]) {
    for c in text.chars() {
        if c == '\\' || special.contains(&c) {
            out.push('\\');
        }
        out.push(c);
    }
}

/// Prints nodes back to template syntax; `parse_template` inverts it.
pub fn print_template(nodes: &[Node]) -> String {
    let mut out = String::new();
    for n in nodes {
        match n {
            Node::Literal(t) => escape_into(&mut out, t, &['<', '{', '}']),
            Node::Slot(s) => out.push_str(&format!("<{s}>")),
            Node::Title => out.push_str("<@Title>"),
            Node::Pivot { base, window } => {
                out.push_str(&format!("{{~{base}"));
                if let Some(w) = window {
                    out.push_str(&format!("±{w}"));
                }
                out.push('}');
            }
            Node::Choice { first, second } => {
                out.push('{');
                escape_into(&mut out, first, &['/', '{', '}', '<', '?']);
                out.push('/');
                escape_into(&mut out, second, &['/', '{', '}', '<', '?']);
                out.push('}');
            }
            Node::Conditional { cond, then_text, else_text } => {
                out.push('{');
                escape_into(&mut out, then_text, &['/', '{', '}', '<', '?', ':']);
                out.push_str(&format!(" ?? {cond} :: "));
                escape_into(&mut out, else_text, &['/', '{', '}', '<', '?', ':']);
                out.push('}');
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub category: String,
    pub reasoning_tag: ReasoningTag,
    pub purpose: Purpose,
    pub nodes: Vec<Node>,
}

/// What drives a template's truth value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Choice,
    Pivot,
    Conditional,
    None,
}

impl Template {
    pub fn new(
        id: impl Into<String>,
        category: impl Into<String>,
        reasoning_tag: ReasoningTag,
        purpose: Purpose,
        body: &str,
    ) -> Result<Self, TemplateError> {
        let nodes = parse_template(body)?;
        let tpl = Self { id: id.into(), category: category.into(), reasoning_tag, purpose, nodes };
        if purpose == Purpose::PremiseParaphrase {
            if tpl.nodes.iter().any(|n| matches!(n, Node::Choice { .. } | Node::Pivot { .. })) {
                return Err(TemplateError::ControlInParaphrase);
            }
            let keys = tpl.keys_used();
            if keys.len() != 1 {
                return Err(TemplateError::ParaphraseKeys(keys));
            }
        }
        Ok(tpl)
    }

    pub fn body(&self) -> String {
        print_template(&self.nodes)
    }

    pub fn control(&self) -> Control {
        let has = |f: fn(&Node) -> bool| self.nodes.iter().any(f);
        if has(|n| matches!(n, Node::Conditional { .. })) {
            Control::Conditional
        } else if has(|n| matches!(n, Node::Choice { .. })) {
            Control::Choice
        } else if has(|n| matches!(n, Node::Pivot { .. })) {
            Control::Pivot
        } else {
            Control::None
        }
    }

    /// Distinct keys referenced anywhere, in first-use order.
    pub fn keys_used(&self) -> Vec<String> {
        let mut keys: Vec<String> = Vec::new();
        let mut add = |s: &SlotRef| {
            if !keys.contains(&s.key) {
                keys.push(s.key.clone());
            }
        };
        for n in &self.nodes {
            match n {
                Node::Slot(s) => add(s),
                Node::Pivot { base, .. } => term_slots(base).into_iter().for_each(&mut add),
                Node::Conditional { cond, .. } => cond.slots().into_iter().for_each(&mut add),
                _ => {}
            }
        }
        keys
    }

    /// Schema checks: keys exist, comparisons are well-typed, counts are
    /// taken only on multi-valued keys.
    pub fn check_schema(&self, schema: &CategorySchema) -> Vec<TemplateError> {
        let mut errs = Vec::new();
        let check_slot = |s: &SlotRef, errs: &mut Vec<TemplateError>| match schema.key(&s.key) {
            None => errs.push(TemplateError::UnknownKey(s.key.clone())),
            Some(k) if s.extractor == Some(Extractor::Count) && !k.multi_valued => {
                errs.push(TemplateError::CountOnSingleValued(s.key.clone()))
            }
            _ => {}
        };
        for n in &self.nodes {
            match n {
                Node::Slot(s) => check_slot(s, &mut errs),
                Node::Pivot { base, .. } => {
                    let slots = term_slots(base);
                    slots.iter().for_each(|s| check_slot(s, &mut errs));
                    if slots.iter().all(|s| schema.key(&s.key).is_some()) {
                        if let Term::Operand(Operand::Slot(s)) = base {
                            if slot_kind(s, schema) == Ok(StaticKind::Text) {
                                errs.push(TemplateError::IncomparableKinds(format!("pivot over text slot '{s}'")));
                            }
                        } else if let Err(e) = check_cond(
                            &CondExpr::Compare {
                                left: base.clone(),
                                op: expr::Comparator::Eq,
                                right: Term::Operand(Operand::Number(0.0)),
                            },
                            schema,
                        ) {
                            errs.push(e.into());
                        }
                    }
                }
                Node::Conditional { cond, .. } => {
                    cond.slots().into_iter().for_each(|s| check_slot(s, &mut errs));
                    if cond.slots().iter().all(|s| schema.key(&s.key).is_some()) {
                        if let Err(e) = check_cond(cond, schema) {
                            errs.push(e.into());
                        }
                    }
                }
                _ => {}
            }
        }
        errs
    }
}

fn term_slots(t: &Term) -> Vec<&SlotRef> {
    let ops: Vec<&Operand> = match t {
        Term::Operand(o) => vec![o],
        Term::Diff(a, b) | Term::Months(a, b) => vec![a, b],
    };
    ops.into_iter()
        .filter_map(|o| match o {
            Operand::Slot(s) => Some(s),
            Operand::Number(_) => None,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Binding, rendering and truth
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Entail,
    Contradict,
}

impl Label {
    pub fn code(self) -> &'static str {
        match self {
            Label::Entail => "E",
            Label::Contradict => "C",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s.trim() {
            "E" => Some(Label::Entail),
            "C" => Some(Label::Contradict),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A slot's concrete surface text and comparable value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSlot {
    pub text: String,
    pub scalar: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotBinding {
    /// The base's value in the bound table.
    pub true_value: f64,
    /// The synthesized literal; never equal to `true_value`.
    pub literal: f64,
}

/// Concrete values for one template instance, plus the switches that decide
/// which branch is realized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub title: String,
    /// Slot values keyed by node index.
    pub slots: BTreeMap<usize, BoundSlot>,
    pub pivot: Option<PivotBinding>,
    /// Node index of a slot promoted to the comparison anchor.
    pub implicit_anchor: Option<usize>,
    /// Whether the first choice option is true for the bound table.
    pub choice_first_true: Option<bool>,
    /// Whether the conditional holds for the bound table.
    pub cond_true: Option<bool>,
    pub choice_first: bool,
    pub cond_then: bool,
    /// For a pivot without a choice: show the literal instead of the true value.
    pub show_literal: bool,
}

impl Binding {
    pub fn set_slot(&mut self, node: usize, slot: BoundSlot) {
        self.slots.insert(node, slot);
    }

    pub fn set_pivot_literal(&mut self, literal: f64) {
        if let Some(p) = &mut self.pivot {
            p.literal = literal;
        }
    }

    pub fn set_choice_first(&mut self, first: bool) {
        self.choice_first = first;
    }

    pub fn set_cond_then(&mut self, then: bool) {
        self.cond_then = then;
    }

    pub fn set_show_literal(&mut self, show: bool) {
        self.show_literal = show;
    }
}

/// Default pivot half-width for a base.
fn default_window(base: &Term, value: f64) -> u32 {
    match base {
        Term::Operand(Operand::Slot(s)) => match s.extractor {
            Some(Extractor::Count) => 2,
            Some(Extractor::Year | Extractor::Date) => 25,
            Some(Extractor::Month) => 2,
            Some(Extractor::Day) => 3,
            _ => number_window(value),
        },
        _ => number_window(value),
    }
}

fn number_window(value: f64) -> u32 {
    ((value.abs() / 10.0).round() as u32).max(2)
}

fn scalar_number(s: &Scalar) -> Option<f64> {
    match s {
        Scalar::Num(n) => Some(*n),
        Scalar::Date(d) => Some(f64::from(d.year())),
        Scalar::Text(_) => None,
    }
}

/// Draws an integer uniformly from `[v-w, v+w] \ {v}`, clamped at zero when
/// `non_negative`.
pub fn sample_pivot<R: Rng + ?Sized>(value: f64, window: u32, non_negative: bool, rng: &mut R) -> Option<f64> {
    let w = f64::from(window);
    let mut lo = (value - w).ceil() as i64;
    let hi = (value + w).floor() as i64;
    if non_negative {
        lo = lo.max(0);
    }
    let candidates: Vec<i64> = (lo..=hi).filter(|c| (*c as f64) != value).collect();
    if candidates.is_empty() {
        return None;
    }
    Some(candidates[rng.gen_range(0..candidates.len())] as f64)
}

fn base_is_non_negative(base: &Term, table: &Table, ctx: &EvalContext) -> bool {
    match base {
        Term::Operand(Operand::Slot(s)) => match s.extractor {
            Some(Extractor::Count | Extractor::Year | Extractor::Month | Extractor::Day) => true,
            Some(Extractor::Number) | None => {
                extract(table, s).ok().and_then(|e| scalar_number(&e.scalar)).is_some_and(|v| v >= 0.0)
            }
            _ => false,
        },
        // Differences keep their sign: a non-negative gap stays non-negative.
        other => eval_term(other, table, ctx).ok().and_then(|v| scalar_number(&v)).is_some_and(|v| v >= 0.0),
    }
}

fn join_values(texts: &[String]) -> String {
    match texts.len() {
        0 => String::new(),
        1 => texts[0].clone(),
        n => format!("{} and {}", texts[..n - 1].join(", "), texts[n - 1]),
    }
}

/// Resolves every slot of `tpl` against `table`, samples the pivot literal
/// and records which branches are true.
pub fn bind<R: Rng + ?Sized>(
    tpl: &Template,
    table: &Table,
    ctx: &EvalContext,
    rng: &mut R,
) -> Result<Binding, TemplateError> {
    if !tpl.category.is_empty() && tpl.category != table.category() {
        return Err(TemplateError::CategoryMismatch {
            template: tpl.category.clone(),
            table: table.category().to_string(),
        });
    }
    let mut binding = Binding {
        title: table.title().to_string(),
        slots: BTreeMap::new(),
        pivot: None,
        implicit_anchor: None,
        choice_first_true: None,
        cond_true: None,
        choice_first: true,
        cond_then: true,
        show_literal: false,
    };
    for (i, n) in tpl.nodes.iter().enumerate() {
        if let Node::Slot(s) = n {
            let bound = if tpl.purpose == Purpose::PremiseParaphrase && s.index.is_none() && s.extractor.is_none() {
                let all = extract_all(table, s)?;
                let texts: Vec<String> = all.iter().map(|e| e.text.clone()).collect();
                BoundSlot { text: join_values(&texts), scalar: all[0].scalar.clone() }
            } else {
                let e = extract(table, s)?;
                BoundSlot { text: e.text, scalar: e.scalar }
            };
            binding.slots.insert(i, bound);
        }
    }

    let pivot_node = tpl.nodes.iter().find_map(|n| match n {
        Node::Pivot { base, window } => Some((base, *window)),
        _ => None,
    });
    let has_choice = tpl.nodes.iter().any(|n| matches!(n, Node::Choice { .. }));
    if let Some((base, window)) = pivot_node {
        let v = scalar_number(&eval_term(base, table, ctx)?)
            .ok_or_else(|| TemplateError::IncomparableKinds(format!("pivot base '{base}' is not numeric")))?;
        let w = window.unwrap_or_else(|| default_window(base, v));
        let literal =
            sample_pivot(v, w, base_is_non_negative(base, table, ctx), rng).ok_or(TemplateError::EmptyPivotRange)?;
        binding.pivot = Some(PivotBinding { true_value: v, literal });
    } else if has_choice {
        let anchor = tpl.nodes.iter().enumerate().find_map(|(i, n)| match n {
            Node::Slot(s) => binding.slots.get(&i).and_then(|b| scalar_number(&b.scalar)).map(|v| (i, s, v)),
            _ => None,
        });
        let (i, s, v) = anchor.ok_or(TemplateError::NoComparisonAnchor)?;
        let base = Term::Operand(Operand::Slot(s.clone()));
        let w = default_window(&base, v);
        let literal =
            sample_pivot(v, w, base_is_non_negative(&base, table, ctx), rng).ok_or(TemplateError::EmptyPivotRange)?;
        binding.pivot = Some(PivotBinding { true_value: v, literal });
        binding.implicit_anchor = Some(i);
    }
    if has_choice {
        let p = binding.pivot.as_ref().expect("choice always has an anchor");
        binding.choice_first_true = Some(p.true_value < p.literal);
    }
    if let Some(cond) = tpl.nodes.iter().find_map(|n| match n {
        Node::Conditional { cond, .. } => Some(cond),
        _ => None,
    }) {
        binding.cond_true = Some(eval_cond(cond, table, ctx)?);
    }
    binding.choice_first = binding.choice_first_true.unwrap_or(true);
    binding.cond_then = binding.cond_true.unwrap_or(true);
    Ok(binding)
}

/// A realized sentence, its label and the switches that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rendering {
    pub sentence: String,
    pub label: Label,
    pub binding: Binding,
}

/// Realizes `tpl` so that its claim has the requested label. A contradiction
/// flips exactly one element: the choice, the conditional branch, or (for a
/// lone pivot) the shown number.
pub fn render(tpl: &Template, binding: &Binding, label: Label) -> Result<Rendering, TemplateError> {
    let mut b = binding.clone();
    let flip = label == Label::Contradict;
    match tpl.control() {
        Control::Conditional => b.cond_then = b.cond_true.ok_or(TemplateError::MissingBinding(0))? != flip,
        Control::Choice => b.choice_first = b.choice_first_true.ok_or(TemplateError::MissingBinding(0))? != flip,
        Control::Pivot => b.show_literal = flip,
        Control::None if flip => return Err(TemplateError::Uncontrollable),
        Control::None => {}
    }
    let sentence = realize(tpl, &b)?;
    Ok(Rendering { sentence, label, binding: b })
}

/// Produces surface text from a binding as-is.
pub fn realize(tpl: &Template, b: &Binding) -> Result<String, TemplateError> {
    let mut out = String::new();
    for (i, n) in tpl.nodes.iter().enumerate() {
        match n {
            Node::Literal(t) => out.push_str(t),
            Node::Title => out.push_str(&b.title),
            Node::Slot(_) => {
                if b.implicit_anchor == Some(i) {
                    let p = b.pivot.as_ref().ok_or(TemplateError::MissingBinding(i))?;
                    out.push_str(&format_plain(p.literal));
                } else {
                    out.push_str(&b.slots.get(&i).ok_or(TemplateError::MissingBinding(i))?.text);
                }
            }
            Node::Pivot { .. } => {
                let p = b.pivot.as_ref().ok_or(TemplateError::MissingBinding(i))?;
                let has_choice = tpl.nodes.iter().any(|n| matches!(n, Node::Choice { .. }));
                let shown = if has_choice || b.show_literal { p.literal } else { p.true_value };
                out.push_str(&format_plain(shown));
            }
            Node::Choice { first, second } => out.push_str(if b.choice_first { first } else { second }),
            Node::Conditional { then_text, else_text, .. } => {
                out.push_str(if b.cond_then { then_text } else { else_text })
            }
        }
    }
    Ok(surface_fix(&out))
}

/// Whether the claim realized by `binding` holds in `table`.
pub fn truth_of(tpl: &Template, b: &Binding, table: &Table, ctx: &EvalContext) -> Result<bool, TemplateError> {
    let mut truth = true;
    for (i, n) in tpl.nodes.iter().enumerate() {
        match n {
            Node::Title => truth &= b.title == table.title(),
            Node::Slot(s) if b.implicit_anchor != Some(i) => {
                let bound = b.slots.get(&i).ok_or(TemplateError::MissingBinding(i))?;
                let found = match extract_all(table, s) {
                    Ok(all) => all.iter().any(|e| e.scalar.same_as(&bound.scalar)),
                    Err(_) => false,
                };
                truth &= found;
            }
            _ => {}
        }
    }
    if let Some(p) = &b.pivot {
        let actual = match tpl.nodes.iter().find_map(|n| match n {
            Node::Pivot { base, .. } => Some(base.clone()),
            _ => None,
        }) {
            Some(base) => eval_term(&base, table, ctx)?,
            None => {
                let i = b.implicit_anchor.ok_or(TemplateError::NoComparisonAnchor)?;
                match &tpl.nodes[i] {
                    Node::Slot(s) => extract(table, s)?.scalar,
                    _ => return Err(TemplateError::MissingBinding(i)),
                }
            }
        };
        let v = scalar_number(&actual)
            .ok_or_else(|| TemplateError::IncomparableKinds("pivot base is not numeric".into()))?;
        if tpl.nodes.iter().any(|n| matches!(n, Node::Choice { .. })) {
            truth &= if b.choice_first { v < p.literal } else { v > p.literal };
        } else {
            let shown = if b.show_literal { p.literal } else { p.true_value };
            truth &= v == shown;
        }
    }
    if let Some(cond) = tpl.nodes.iter().find_map(|n| match n {
        Node::Conditional { cond, .. } => Some(cond),
        _ => None,
    }) {
        truth &= eval_cond(cond, table, ctx)? == b.cond_then;
    }
    Ok(truth)
}

// ---------------------------------------------------------------------------
// Surface clean-up
// ---------------------------------------------------------------------------

const AN_EXCEPTIONS: [&str; 4] = ["hour", "honest", "honor", "heir"];
const A_EXCEPTIONS: [&str; 7] = ["uni", "use", "usu", "one", "once", "eu", "u.s"];

fn wants_an(word: &str) -> bool {
    let w: String = word.trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    if w.is_empty() {
        return false;
    }
    if AN_EXCEPTIONS.iter().any(|p| w.starts_with(p)) {
        return true;
    }
    if A_EXCEPTIONS.iter().any(|p| w.starts_with(p)) {
        return false;
    }
    let first = w.chars().next().unwrap_or(' ');
    if first.is_ascii_digit() {
        let digits: String = w.chars().take_while(|c| c.is_ascii_digit()).collect();
        return first == '8' || digits == "11" || digits == "18";
    }
    matches!(first, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Whitespace collapse, article agreement, leading capital and no space
/// before punctuation.
pub fn surface_fix(text: &str) -> String {
    let mut words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    for i in 0..words.len().saturating_sub(1) {
        let lower = words[i].to_lowercase();
        if lower == "a" || lower == "an" {
            let an = wants_an(&words[i + 1]);
            let upper = words[i].starts_with('A');
            words[i] = match (an, upper) {
                (true, true) => "An",
                (true, false) => "an",
                (false, true) => "A",
                (false, false) => "a",
            }
            .to_string();
        }
    }
    let mut out = String::with_capacity(text.len());
    for w in &words {
        let punct_only = w.chars().all(|c| matches!(c, '.' | ',' | ';' | ':' | '!' | '?'));
        if !out.is_empty() && !punct_only {
            out.push(' ');
        }
        out.push_str(w);
    }
    let mut chars = out.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => out,
    }
}

/// Token-level edit distance between two sentences.
pub fn token_distance(a: &str, b: &str) -> usize {
    let x: Vec<&str> = a.split_whitespace().collect();
    let y: Vec<&str> = b.split_whitespace().collect();
    let mut prev: Vec<usize> = (0..=y.len()).collect();
    for i in 1..=x.len() {
        let mut cur = vec![i; y.len() + 1];
        for j in 1..=y.len() {
            let sub = prev[j - 1] + usize::from(x[i - 1] != y[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[y.len()]
}
