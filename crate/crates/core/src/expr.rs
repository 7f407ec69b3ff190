//! Slot references, value extraction and the comparison language shared by
//! template conditionals and table constraints.
//!
//! Grammar (whitespace-insensitive between tokens):
//!
//! ```text
//! cond     := "leap" "(" slot ")" | term cmp term
//! term     := "months" "(" operand "," operand ")" | operand ( "-" operand )?
//! operand  := "<" slot-body ">" | number | slot-body
//! slot-body:= key ( "[" int "]" )? ( ":" extractor )?
//! cmp      := "<" | "<=" | "≤" | "=" | "==" | "!=" | "≠" | ">=" | "≥" | ">"
//! ```

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::CategorySchema;
use crate::table::Table;
use crate::value::{is_leap_year, Parsed, PartialDate, TypedValue, ValueKind, MONTHS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Extractor {
    Year,
    Month,
    Day,
    Count,
    Number,
    Location,
    Name,
    Date,
}

impl Extractor {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "year" => Extractor::Year,
            "month" => Extractor::Month,
            "day" => Extractor::Day,
            "count" => Extractor::Count,
            "number" | "num" => Extractor::Number,
            "location" | "loc" => Extractor::Location,
            "name" => Extractor::Name,
            "date" => Extractor::Date,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Extractor::Year => "Year",
            Extractor::Month => "Month",
            Extractor::Day => "Day",
            Extractor::Count => "Count",
            Extractor::Number => "Number",
            Extractor::Location => "Location",
            Extractor::Name => "Name",
            Extractor::Date => "Date",
        }
    }
}

/// A reference to one cell of a table row: `Key`, `Key[2]`, `Key:Year`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotRef {
    pub key: String,
    /// 1-based position within a multi-valued row. `None` means "the row":
    /// the first value when rendering, any value when judging truth.
    pub index: Option<usize>,
    pub extractor: Option<Extractor>,
}

impl SlotRef {
    pub fn new(key: impl Into<String>) -> Self {
        Self { key: key.into(), index: None, extractor: None }
    }

    pub fn with_extractor(mut self, e: Extractor) -> Self {
        self.extractor = Some(e);
        self
    }

    pub fn with_index(mut self, i: usize) -> Self {
        self.index = Some(i);
        self
    }
}

impl fmt::Display for SlotRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.key.chars() {
            if matches!(c, '\\' | '<' | '>' | '[' | ':' | '{' | '}') {
                f.write_str("\\")?;
            }
            write!(f, "{c}")?;
        }
        if let Some(i) = self.index {
            write!(f, "[{i}]")?;
        }
        if let Some(e) = self.extractor {
            write!(f, ":{}", e.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Comparator {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
        }
    }

    fn is_ordering(self) -> bool {
        !matches!(self, Comparator::Eq | Comparator::Ne)
    }

    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Comparator::Lt => ord == Ordering::Less,
            Comparator::Le => ord != Ordering::Greater,
            Comparator::Eq => ord == Ordering::Equal,
            Comparator::Ne => ord != Ordering::Equal,
            Comparator::Ge => ord != Ordering::Less,
            Comparator::Gt => ord == Ordering::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Operand {
    Slot(SlotRef),
    Number(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Term {
    Operand(Operand),
    /// `a - b`; two dates give whole years elapsed.
    Diff(Operand, Operand),
    /// `months(a, b)`: whole months from date `b` to date `a`.
    Months(Operand, Operand),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CondExpr {
    Compare { left: Term, op: Comparator, right: Term },
    LeapYear(SlotRef),
}

impl CondExpr {
    pub fn slots(&self) -> Vec<&SlotRef> {
        fn operand<'a>(o: &'a Operand, out: &mut Vec<&'a SlotRef>) {
            if let Operand::Slot(s) = o {
                out.push(s);
            }
        }
        fn term<'a>(t: &'a Term, out: &mut Vec<&'a SlotRef>) {
            match t {
                Term::Operand(o) => operand(o, out),
                Term::Diff(a, b) | Term::Months(a, b) => {
                    operand(a, out);
                    operand(b, out);
                }
            }
        }
        let mut out = Vec::new();
        match self {
            CondExpr::Compare { left, right, .. } => {
                term(left, &mut out);
                term(right, &mut out);
            }
            CondExpr::LeapYear(s) => out.push(s),
        }
        out
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Slot(s) => write!(f, "<{s}>"),
            Operand::Number(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Operand(o) => write!(f, "{o}"),
            Term::Diff(a, b) => write!(f, "{a} - {b}"),
            Term::Months(a, b) => write!(f, "months({a}, {b})"),
        }
    }
}

impl fmt::Display for CondExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondExpr::Compare { left, op, right } => write!(f, "{left} {} {right}", op.as_str()),
            CondExpr::LeapYear(s) => write!(f, "leap(<{s}>)"),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown extractor '{0}'")]
    UnknownExtractor(String),
}

pub(crate) fn syntax(pos: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax { pos, message: message.into() }
}

/// Parses the inside of `<...>`: `Key`, `Key[2]`, `Key:Year`.
pub(crate) fn parse_slot_body(body: &str, offset: usize) -> Result<SlotRef, ExprError> {
    let mut key = String::new();
    let mut chars = body.char_indices().peekable();
    let mut index = None;
    let mut extractor = None;
    while let Some(&(i, c)) = chars.peek() {
        match c {
            '\\' => {
                chars.next();
                match chars.next() {
                    Some((_, e)) => key.push(e),
                    None => return Err(syntax(offset + i, "dangling escape")),
                }
            }
            '[' => {
                chars.next();
                let mut digits = String::new();
                loop {
                    match chars.next() {
                        Some((_, ']')) => break,
                        Some((_, d)) => digits.push(d),
                        None => return Err(syntax(offset + i, "unclosed '['")),
                    }
                }
                let n: usize = digits
                    .trim()
                    .parse()
                    .ok()
                    .filter(|n| *n >= 1)
                    .ok_or_else(|| syntax(offset + i, format!("bad index '{digits}'")))?;
                index = Some(n);
            }
            ':' => {
                chars.next();
                let rest: String = chars.by_ref().map(|(_, c)| c).collect();
                extractor =
                    Some(Extractor::parse(&rest).ok_or_else(|| ExprError::UnknownExtractor(rest.trim().to_string()))?);
            }
            _ => {
                if index.is_some() {
                    return Err(syntax(offset + i, "text after index"));
                }
                key.push(c);
                chars.next();
            }
        }
    }
    let key = key.trim().to_string();
    if key.is_empty() {
        return Err(syntax(offset, "empty key"));
    }
    Ok(SlotRef { key, index, extractor })
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    base: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        syntax(self.base + self.pos, message)
    }
}

/// Parses a comparison. `base` offsets reported positions.
pub fn parse_cond(src: &str, base: usize) -> Result<CondExpr, ExprError> {
    let mut c = Cursor { src, pos: 0, base };
    c.skip_ws();
    let cond = if c.rest().to_ascii_lowercase().starts_with("leap") && c.rest()[4..].trim_start().starts_with('(') {
        c.pos += 4;
        c.skip_ws();
        c.eat("(");
        c.skip_ws();
        let slot = match parse_operand(&mut c)? {
            Operand::Slot(s) => s,
            Operand::Number(_) => return Err(c.err("leap() takes a slot")),
        };
        c.skip_ws();
        if !c.eat(")") {
            return Err(c.err("expected ')'"));
        }
        CondExpr::LeapYear(slot)
    } else {
        let left = parse_term(&mut c)?;
        c.skip_ws();
        let op = parse_cmp(&mut c)?;
        c.skip_ws();
        let right = parse_term(&mut c)?;
        CondExpr::Compare { left, op, right }
    };
    c.skip_ws();
    if c.pos != src.len() {
        return Err(c.err(format!("unexpected '{}'", c.rest())));
    }
    Ok(cond)
}

fn parse_cmp(c: &mut Cursor<'_>) -> Result<Comparator, ExprError> {
    const OPS: [(&str, Comparator); 11] = [
        ("<=", Comparator::Le),
        (">=", Comparator::Ge),
        ("==", Comparator::Eq),
        ("!=", Comparator::Ne),
        ("<>", Comparator::Ne),
        ("≤", Comparator::Le),
        ("≥", Comparator::Ge),
        ("≠", Comparator::Ne),
        ("<", Comparator::Lt),
        (">", Comparator::Gt),
        ("=", Comparator::Eq),
    ];
    for (tok, op) in OPS {
        if c.eat(tok) {
            return Ok(op);
        }
    }
    Err(c.err("expected comparison operator"))
}

/// Parses a standalone term (used for pivot bases).
pub fn parse_term_str(src: &str, base: usize) -> Result<Term, ExprError> {
    let mut c = Cursor { src, pos: 0, base };
    c.skip_ws();
    let term = parse_term(&mut c)?;
    c.skip_ws();
    if c.pos != src.len() {
        return Err(c.err(format!("unexpected '{}'", c.rest())));
    }
    Ok(term)
}

fn parse_term(c: &mut Cursor<'_>) -> Result<Term, ExprError> {
    if c.rest().to_ascii_lowercase().starts_with("months") && c.rest()[6..].trim_start().starts_with('(') {
        c.pos += 6;
        c.skip_ws();
        c.eat("(");
        c.skip_ws();
        let a = parse_operand(c)?;
        c.skip_ws();
        if !c.eat(",") {
            return Err(c.err("expected ','"));
        }
        c.skip_ws();
        let b = parse_operand(c)?;
        c.skip_ws();
        if !c.eat(")") {
            return Err(c.err("expected ')'"));
        }
        return Ok(Term::Months(a, b));
    }
    let first = parse_operand(c)?;
    let save = c.pos;
    c.skip_ws();
    if c.peek() == Some('-') {
        c.pos += 1;
        c.skip_ws();
        let second = parse_operand(c)?;
        return Ok(Term::Diff(first, second));
    }
    c.pos = save;
    Ok(Term::Operand(first))
}

fn parse_operand(c: &mut Cursor<'_>) -> Result<Operand, ExprError> {
    let start = c.pos;
    match c.peek() {
        None => Err(c.err("expected operand")),
        Some('<') => {
            c.pos += 1;
            let rest = c.rest();
            let close = find_unescaped(rest, '>').ok_or_else(|| c.err("unclosed '<'"))?;
            let slot = parse_slot_body(&rest[..close], c.base + c.pos)?;
            c.pos += close + 1;
            Ok(Operand::Slot(slot))
        }
        Some(ch) if ch.is_ascii_digit() || (ch == '-' && c.rest()[1..].starts_with(|d: char| d.is_ascii_digit())) => {
            let len = c.rest()[1..]
                .find(|d: char| !(d.is_ascii_digit() || d == '.'))
                .map(|n| n + 1)
                .unwrap_or(c.rest().len());
            let text = &c.rest()[..len];
            let n: f64 = text.parse().map_err(|_| c.err(format!("bad number '{text}'")))?;
            c.pos += len;
            Ok(Operand::Number(n))
        }
        Some(_) => {
            let rest = c.rest();
            let mut end = rest.len();
            let mut in_index = false;
            for (i, ch) in rest.char_indices() {
                match ch {
                    '[' => in_index = true,
                    ']' => in_index = false,
                    '<' | '>' | '=' | '!' | '≤' | '≥' | '≠' | '(' | ')' | ',' | '±' | '+' if !in_index => {
                        end = i;
                        break;
                    }
                    '-' if !in_index && rest[..i].ends_with(char::is_whitespace) => {
                        end = i;
                        break;
                    }
                    _ => {}
                }
            }
            let body = rest[..end].trim_end();
            if body.is_empty() {
                return Err(c.err("expected operand"));
            }
            let slot = parse_slot_body(body, c.base + start)?;
            c.pos += end;
            Ok(Operand::Slot(slot))
        }
    }
}

pub(crate) fn find_unescaped(s: &str, target: char) -> Option<usize> {
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == target {
            return Some(i);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Extraction and evaluation
// ---------------------------------------------------------------------------

/// A comparable value produced by extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scalar {
    Num(f64),
    Date(PartialDate),
    Text(String),
}

impl Scalar {
    /// Ordering at common precision; dates against numbers compare by year.
    pub fn compare(&self, other: &Scalar) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Num(a), Scalar::Num(b)) => a.partial_cmp(b),
            (Scalar::Date(a), Scalar::Date(b)) => Some(a.cmp_common(b)),
            (Scalar::Date(a), Scalar::Num(b)) => f64::from(a.year()).partial_cmp(b),
            (Scalar::Num(a), Scalar::Date(b)) => a.partial_cmp(&f64::from(b.year())),
            (Scalar::Text(a), Scalar::Text(b)) => Some(a.trim().cmp(b.trim())),
            _ => None,
        }
    }

    pub fn same_as(&self, other: &Scalar) -> bool {
        self.compare(other) == Some(Ordering::Equal)
    }

    fn is_text(&self) -> bool {
        matches!(self, Scalar::Text(_))
    }
}

/// An extracted cell: its comparable value and its surface text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extracted {
    pub scalar: Scalar,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("missing key '{0}'")]
    MissingKey(String),
    #[error("index {index} out of range for '{key}' ({len} values)")]
    IndexOutOfRange { key: String, index: usize, len: usize },
    #[error("cannot extract {extractor} from '{raw}' of '{key}'")]
    ExtractorFailed { key: String, extractor: &'static str, raw: String },
}

impl ExtractError {
    pub fn key(&self) -> &str {
        match self {
            ExtractError::MissingKey(k) => k,
            ExtractError::IndexOutOfRange { key, .. } | ExtractError::ExtractorFailed { key, .. } => key,
        }
    }
}

/// Extracts the referenced value (the first one when no index is given).
pub fn extract(table: &Table, slot: &SlotRef) -> Result<Extracted, ExtractError> {
    let row = table.row(&slot.key).ok_or_else(|| ExtractError::MissingKey(slot.key.clone()))?;
    if slot.extractor == Some(Extractor::Count) {
        let n = row.values().len();
        return Ok(Extracted { scalar: Scalar::Num(n as f64), text: n.to_string() });
    }
    let i = slot.index.unwrap_or(1);
    let value = row.values().get(i - 1).ok_or_else(|| ExtractError::IndexOutOfRange {
        key: slot.key.clone(),
        index: i,
        len: row.values().len(),
    })?;
    extract_value(&slot.key, value, slot.extractor)
}

/// Extracts from every value of the row (or just the indexed one).
pub fn extract_all(table: &Table, slot: &SlotRef) -> Result<Vec<Extracted>, ExtractError> {
    if slot.index.is_some() || slot.extractor == Some(Extractor::Count) {
        return extract(table, slot).map(|e| vec![e]);
    }
    let row = table.row(&slot.key).ok_or_else(|| ExtractError::MissingKey(slot.key.clone()))?;
    let mut out = Vec::new();
    for v in row.values() {
        if let Ok(e) = extract_value(&slot.key, v, slot.extractor) {
            out.push(e);
        }
    }
    if out.is_empty() {
        return extract_value(&slot.key, &row.values()[0], slot.extractor).map(|e| vec![e]);
    }
    Ok(out)
}

/// Applies an extractor to a single value.
pub fn extract_value(key: &str, value: &TypedValue, extractor: Option<Extractor>) -> Result<Extracted, ExtractError> {
    let fail = |e: Extractor| ExtractError::ExtractorFailed {
        key: key.to_string(),
        extractor: e.as_str(),
        raw: value.raw().to_string(),
    };
    let num = |n: f64| Extracted { scalar: Scalar::Num(n), text: format_plain(n) };
    Ok(match extractor {
        None => match value.parsed() {
            Parsed::Date(d) => Extracted { scalar: Scalar::Date(*d), text: value.head().to_string() },
            Parsed::Number { magnitude, .. } => {
                Extracted { scalar: Scalar::Num(*magnitude), text: value.raw().to_string() }
            }
            _ => Extracted { scalar: Scalar::Text(value.raw().to_string()), text: value.raw().to_string() },
        },
        Some(e @ Extractor::Year) => {
            let d = value.as_date().ok_or_else(|| fail(e))?;
            num(f64::from(d.year()))
        }
        Some(e @ Extractor::Month) => {
            let m = value.as_date().and_then(|d| d.month()).ok_or_else(|| fail(e))?;
            Extracted { scalar: Scalar::Num(f64::from(m)), text: MONTHS[m as usize - 1].to_string() }
        }
        Some(e @ Extractor::Day) => num(f64::from(value.as_date().and_then(|d| d.day()).ok_or_else(|| fail(e))?)),
        Some(Extractor::Count) => num(1.0),
        Some(e @ Extractor::Number) => {
            let n = value.as_number().ok_or_else(|| fail(e))?;
            Extracted { scalar: Scalar::Num(n), text: value.raw().to_string() }
        }
        Some(e @ Extractor::Date) => {
            let d = value.as_date().ok_or_else(|| fail(e))?;
            Extracted { scalar: Scalar::Date(d), text: value.head().to_string() }
        }
        Some(e @ Extractor::Location) => {
            let text = match (value.parenthetical(), value.kind()) {
                (Some(p), _) => p.to_string(),
                (None, ValueKind::Location | ValueKind::EntityName) => value.raw().to_string(),
                _ => return Err(fail(e)),
            };
            Extracted { scalar: Scalar::Text(text.clone()), text }
        }
        Some(e @ Extractor::Name) => {
            let text = match value.kind() {
                ValueKind::EntityName | ValueKind::Location => value.head().to_string(),
                _ => return Err(fail(e)),
            };
            Extracted { scalar: Scalar::Text(text.clone()), text }
        }
    })
}

/// Plain decimal rendering for synthesized numbers.
pub fn format_plain(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalContext {
    /// Stands in for a missing end date in a date difference (a living
    /// person's age).
    pub reference_date: Option<PartialDate>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("incomparable kinds: {0}")]
    IncomparableKinds(String),
}

fn eval_operand(o: &Operand, table: &Table) -> Result<Scalar, EvalError> {
    match o {
        Operand::Number(n) => Ok(Scalar::Num(*n)),
        Operand::Slot(s) => Ok(extract(table, s)?.scalar),
    }
}

pub fn eval_term(term: &Term, table: &Table, ctx: &EvalContext) -> Result<Scalar, EvalError> {
    match term {
        Term::Operand(o) => eval_operand(o, table),
        Term::Diff(a, b) => {
            let right = eval_operand(b, table)?;
            let left = match eval_operand(a, table) {
                Err(EvalError::Extract(ExtractError::MissingKey(_))) if matches!(right, Scalar::Date(_)) => {
                    match ctx.reference_date {
                        Some(d) => Scalar::Date(d),
                        None => return eval_operand(a, table),
                    }
                }
                other => other?,
            };
            match (&left, &right) {
                (Scalar::Date(x), Scalar::Date(y)) => Ok(Scalar::Num(y.whole_years_until(x) as f64)),
                (Scalar::Num(x), Scalar::Num(y)) => Ok(Scalar::Num(x - y)),
                (Scalar::Date(x), Scalar::Num(y)) => Ok(Scalar::Num(f64::from(x.year()) - y)),
                (Scalar::Num(x), Scalar::Date(y)) => Ok(Scalar::Num(x - f64::from(y.year()))),
                _ => Err(EvalError::IncomparableKinds(format!("cannot subtract {left:?} and {right:?}"))),
            }
        }
        Term::Months(a, b) => match (eval_operand(a, table)?, eval_operand(b, table)?) {
            (Scalar::Date(x), Scalar::Date(y)) => months_between(&y, &x)
                .map(|m| Scalar::Num(m as f64))
                .ok_or_else(|| EvalError::IncomparableKinds("months() needs month precision".into())),
            (l, r) => Err(EvalError::IncomparableKinds(format!("months() of {l:?} and {r:?}"))),
        },
    }
}

/// Whole months from `from` to `to`, when both carry a month.
pub fn months_between(from: &PartialDate, to: &PartialDate) -> Option<i64> {
    let (m0, m1) = (from.month()?, to.month()?);
    let mut months = (i64::from(to.year()) - i64::from(from.year())) * 12 + i64::from(m1) - i64::from(m0);
    if let (Some(d0), Some(d1)) = (from.day(), to.day()) {
        if months > 0 && d1 < d0 {
            months -= 1;
        } else if months < 0 && d1 > d0 {
            months += 1;
        }
    }
    Some(months)
}

pub fn eval_cond(cond: &CondExpr, table: &Table, ctx: &EvalContext) -> Result<bool, EvalError> {
    match cond {
        CondExpr::LeapYear(slot) => match extract(table, slot)?.scalar {
            Scalar::Num(y) if y.fract() == 0.0 => Ok(is_leap_year(y as i64)),
            Scalar::Date(d) => Ok(is_leap_year(i64::from(d.year()))),
            other => Err(EvalError::IncomparableKinds(format!("leap() needs a year, got {other:?}"))),
        },
        CondExpr::Compare { left, op, right } => {
            let l = eval_term(left, table, ctx)?;
            let r = eval_term(right, table, ctx)?;
            if op.is_ordering() && (l.is_text() || r.is_text()) {
                return Err(EvalError::IncomparableKinds(format!("'{}' orders text", op.as_str())));
            }
            let ord = l.compare(&r).ok_or_else(|| EvalError::IncomparableKinds(format!("{l:?} vs {r:?}")))?;
            Ok(op.holds(ord))
        }
    }
}

// ---------------------------------------------------------------------------
// Static checking against a schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticKind {
    Numeric,
    Date,
    Text,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("incomparable kinds: {0}")]
    IncomparableKinds(String),
}

pub fn slot_kind(slot: &SlotRef, schema: &CategorySchema) -> Result<StaticKind, TypeError> {
    let key = schema.key(&slot.key).ok_or_else(|| TypeError::UnknownKey(slot.key.clone()))?;
    Ok(match slot.extractor {
        Some(Extractor::Year | Extractor::Month | Extractor::Day | Extractor::Count | Extractor::Number) => {
            StaticKind::Numeric
        }
        Some(Extractor::Date) => StaticKind::Date,
        Some(Extractor::Location | Extractor::Name) => StaticKind::Text,
        None => match key.value_kind {
            ValueKind::Date => StaticKind::Date,
            ValueKind::Number => StaticKind::Numeric,
            _ => StaticKind::Text,
        },
    })
}

fn operand_kind(o: &Operand, schema: &CategorySchema) -> Result<StaticKind, TypeError> {
    match o {
        Operand::Number(_) => Ok(StaticKind::Numeric),
        Operand::Slot(s) => slot_kind(s, schema),
    }
}

fn term_kind(t: &Term, schema: &CategorySchema) -> Result<StaticKind, TypeError> {
    match t {
        Term::Operand(o) => operand_kind(o, schema),
        Term::Diff(a, b) => {
            let (ka, kb) = (operand_kind(a, schema)?, operand_kind(b, schema)?);
            if ka == StaticKind::Text || kb == StaticKind::Text {
                return Err(TypeError::IncomparableKinds(format!("cannot subtract text in '{t}'")));
            }
            Ok(StaticKind::Numeric)
        }
        Term::Months(a, b) => {
            if operand_kind(a, schema)? != StaticKind::Date || operand_kind(b, schema)? != StaticKind::Date {
                return Err(TypeError::IncomparableKinds(format!("months() needs two dates in '{t}'")));
            }
            Ok(StaticKind::Numeric)
        }
    }
}

/// Checks keys exist and both sides of a comparison are comparable.
pub fn check_cond(cond: &CondExpr, schema: &CategorySchema) -> Result<(), TypeError> {
    match cond {
        CondExpr::LeapYear(s) => match slot_kind(s, schema)? {
            StaticKind::Text => Err(TypeError::IncomparableKinds(format!("leap() on text slot '{s}'"))),
            _ => Ok(()),
        },
        CondExpr::Compare { left, op, right } => {
            let (l, r) = (term_kind(left, schema)?, term_kind(right, schema)?);
            let ok = match (l, r) {
                (StaticKind::Text, StaticKind::Text) => !op.is_ordering(),
                (StaticKind::Text, _) | (_, StaticKind::Text) => false,
                _ => true,
            };
            if ok {
                Ok(())
            } else {
                Err(TypeError::IncomparableKinds(format!("{cond}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bare_constraint_forms() {
        let c = parse_cond("Born:Date <= Died:Date", 0).unwrap();
        assert_eq!(
            c,
            CondExpr::Compare {
                left: Term::Operand(Operand::Slot(SlotRef::new("Born").with_extractor(Extractor::Date))),
                op: Comparator::Le,
                right: Term::Operand(Operand::Slot(SlotRef::new("Died").with_extractor(Extractor::Date))),
            }
        );
        let c = parse_cond("Release[1]:Location != Release[2]:Location", 0).unwrap();
        assert_eq!(c.slots()[1], &SlotRef::new("Release").with_index(2).with_extractor(Extractor::Location));
        let c = parse_cond("Lowest Elevation <= Highest Elevation", 0).unwrap();
        assert_eq!(c.slots()[0].key, "Lowest Elevation");
    }

    #[test]
    fn parses_angle_forms_and_differences() {
        let c = parse_cond("<Box Office:Number> - <Budget:Number> > 0", 0).unwrap();
        match c {
            CondExpr::Compare {
                left: Term::Diff(..),
                op: Comparator::Gt,
                right: Term::Operand(Operand::Number(n)),
            } => {
                assert_eq!(n, 0.0)
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_cond("leap(<Born:Year>)", 0).unwrap(), CondExpr::LeapYear(_)));
        assert!(matches!(parse_cond("Budget:Number ≥ 0", 0).unwrap(), CondExpr::Compare { op: Comparator::Ge, .. }));
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(parse_cond("Born:Epoch < 3", 0), Err(ExprError::UnknownExtractor(_))));
        assert!(matches!(parse_cond("Born:Year", 0), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_cond("<Born:Year < 3", 0), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn display_reparses() {
        for src in [
            "Born:Date <= Died:Date",
            "<Box Office:Number> - <Budget:Number> > 0",
            "leap(<Born:Year>)",
            "Release[1]:Location != Release[2]:Location",
            "<Died> - <Born> >= 70.5",
            "months(<Release[2]:Date>, <Release[1]:Date>) > 3",
        ] {
            let c = parse_cond(src, 0).unwrap();
            assert_eq!(parse_cond(&c.to_string(), 0).unwrap(), c, "{src}");
        }
    }
}
