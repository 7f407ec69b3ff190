//! Typed cell values and the inference that turns raw Infobox strings into them.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The coarse kind of a cell value, as used in schemas and hints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    Date,
    Number,
    EntityName,
    Location,
    Url,
    Boolean,
    FreeText,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Date => "date",
            ValueKind::Number => "number",
            ValueKind::EntityName => "entity-name",
            ValueKind::Location => "location",
            ValueKind::Url => "url",
            ValueKind::Boolean => "boolean",
            ValueKind::FreeText => "free-text",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A calendar date of varying precision. A day implies a month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialDate {
    year: i32,
    month: Option<u8>,
    day: Option<u8>,
}

impl PartialDate {
    pub fn new(year: i32, month: Option<u8>, day: Option<u8>) -> Option<Self> {
        if day.is_some() && month.is_none() {
            return None;
        }
        if let Some(m) = month {
            if !(1..=12).contains(&m) {
                return None;
            }
            if let Some(d) = day {
                if d == 0 || d > days_in_month(year, m) {
                    return None;
                }
            }
        }
        Some(Self { year, month, day })
    }

    pub fn year_only(year: i32) -> Self {
        Self { year, month: None, day: None }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> Option<u8> {
        self.month
    }

    pub fn day(&self) -> Option<u8> {
        self.day
    }

    /// Compares at the finest precision both dates share.
    pub fn cmp_common(&self, other: &Self) -> Ordering {
        self.year.cmp(&other.year).then_with(|| match (self.month, other.month) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| match (self.day, other.day) {
                (Some(x), Some(y)) => x.cmp(&y),
                _ => Ordering::Equal,
            }),
            _ => Ordering::Equal,
        })
    }

    /// Whole years elapsed from `self` to `later`, using month and day when
    /// both dates carry them.
    pub fn whole_years_until(&self, later: &Self) -> i64 {
        let mut years = i64::from(later.year) - i64::from(self.year);
        if let (Some(m0), Some(m1)) = (self.month, later.month) {
            let before_anniversary = match m1.cmp(&m0) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => match (self.day, later.day) {
                    (Some(d0), Some(d1)) => d1 < d0,
                    _ => false,
                },
            };
            if before_anniversary {
                years -= 1;
            }
        }
        years
    }

    /// Parses `YYYY-MM-DD`, `YYYY-MM` or `YYYY`.
    pub fn parse_iso(s: &str) -> Option<Self> {
        let mut parts = s.trim().split('-');
        let year = parts.next()?.parse().ok()?;
        let month = parts.next().map(str::parse).transpose().ok()?;
        let day = parts.next().map(str::parse).transpose().ok()?;
        if parts.next().is_some() {
            return None;
        }
        Self::new(year, month, day)
    }
}

impl fmt::Display for PartialDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.month, self.day) {
            (Some(m), Some(d)) => write!(f, "{} {}, {}", MONTHS[m as usize - 1], d, self.year),
            (Some(m), None) => write!(f, "{} {}", MONTHS[m as usize - 1], self.year),
            _ => write!(f, "{}", self.year),
        }
    }
}

pub fn is_leap_year(year: i64) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        2 if is_leap_year(i64::from(year)) => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

pub const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

fn month_from_name(s: &str) -> Option<u8> {
    let s = s.trim_end_matches('.').to_ascii_lowercase();
    if s.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| {
            let m = m.to_ascii_lowercase();
            m == s || (s.len() == 3 && m.starts_with(&s)) || (s == "sept" && m == "september")
        })
        .map(|i| i as u8 + 1)
}

/// Unit tag carried by a number.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Money,
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Parsed {
    Date(PartialDate),
    Number { magnitude: f64, unit: Option<Unit> },
    EntityName,
    Location,
    Url,
    Boolean(bool),
    FreeText,
}

/// A raw cell string together with its inferred interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedValue {
    raw: String,
    parsed: Parsed,
}

impl TypedValue {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn parsed(&self) -> &Parsed {
        &self.parsed
    }

    pub fn kind(&self) -> ValueKind {
        match self.parsed {
            Parsed::Date(_) => ValueKind::Date,
            Parsed::Number { .. } => ValueKind::Number,
            Parsed::EntityName => ValueKind::EntityName,
            Parsed::Location => ValueKind::Location,
            Parsed::Url => ValueKind::Url,
            Parsed::Boolean(_) => ValueKind::Boolean,
            Parsed::FreeText => ValueKind::FreeText,
        }
    }

    pub fn as_date(&self) -> Option<PartialDate> {
        match self.parsed {
            Parsed::Date(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self.parsed {
            Parsed::Number { magnitude, .. } => Some(magnitude),
            _ => None,
        }
    }

    /// The raw text with any trailing parenthetical removed.
    pub fn head(&self) -> &str {
        split_parenthetical(&self.raw).0
    }

    /// Text inside the trailing parenthetical, e.g. the place in
    /// `"May 2, 2008 (United States)"`.
    pub fn parenthetical(&self) -> Option<&str> {
        split_parenthetical(&self.raw).1
    }
}

fn split_parenthetical(raw: &str) -> (&str, Option<&str>) {
    let t = raw.trim();
    if let (Some(open), true) = (t.rfind('('), t.ends_with(')')) {
        let inner = t[open + 1..t.len() - 1].trim();
        let head = t[..open].trim_end();
        if !head.is_empty() && !inner.is_empty() {
            return (head, Some(inner));
        }
    }
    (t, None)
}

/// Infers the most specific interpretation of `raw`.
///
/// Structured hints (date, number, boolean, url) win when the text parses
/// under them and degrade to free text otherwise; textual hints always win.
pub fn infer_value(raw: &str, hint: Option<ValueKind>) -> TypedValue {
    let raw = raw.trim().to_string();
    let parsed = match hint {
        Some(ValueKind::Date) => parse_date(&raw, true).map(Parsed::Date),
        Some(ValueKind::Number) => parse_number(&raw).map(|(magnitude, unit)| Parsed::Number { magnitude, unit }),
        Some(ValueKind::Boolean) => parse_bool(&raw).map(Parsed::Boolean),
        Some(ValueKind::Url) => looks_like_url(&raw).then_some(Parsed::Url),
        Some(ValueKind::EntityName) => Some(Parsed::EntityName),
        Some(ValueKind::Location) => Some(Parsed::Location),
        Some(ValueKind::FreeText) => Some(Parsed::FreeText),
        None => Some(infer_unhinted(&raw)),
    }
    .unwrap_or(Parsed::FreeText);
    TypedValue { raw, parsed }
}

fn infer_unhinted(raw: &str) -> Parsed {
    if looks_like_url(raw) {
        return Parsed::Url;
    }
    if let Some(b) = parse_bool(raw) {
        return Parsed::Boolean(b);
    }
    if let Some(d) = parse_date(raw, false) {
        return Parsed::Date(d);
    }
    if let Some((magnitude, unit)) = parse_number(raw) {
        return Parsed::Number { magnitude, unit };
    }
    if looks_like_location(raw) {
        return Parsed::Location;
    }
    if looks_like_name(raw) {
        return Parsed::EntityName;
    }
    Parsed::FreeText
}

fn looks_like_url(s: &str) -> bool {
    if s.contains(char::is_whitespace) || s.is_empty() {
        return false;
    }
    let lower = s.to_ascii_lowercase();
    if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
        return true;
    }
    let host = lower.split('/').next().unwrap_or("");
    match host.rsplit_once('.') {
        Some((name, tld)) => {
            !name.is_empty()
                && (2..=6).contains(&tld.len())
                && tld.chars().all(|c| c.is_ascii_lowercase())
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.')
                && name.chars().any(|c| c.is_ascii_alphabetic())
        }
        None => false,
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "yes" | "true" => Some(true),
        "no" | "false" => Some(false),
        _ => None,
    }
}

/// Accepts "Month D, YYYY", "D Month YYYY", "Month YYYY", "YYYY" and ISO
/// dates, ignoring a trailing parenthetical. A bare year needs four digits
/// unless `lenient`.
fn parse_date(raw: &str, lenient: bool) -> Option<PartialDate> {
    let (head, _) = split_parenthetical(raw);
    if head.contains('-') {
        return PartialDate::parse_iso(head);
    }
    let tokens: Vec<&str> = head.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
    let year = |t: &str| -> Option<i32> {
        let ok =
            t.chars().all(|c| c.is_ascii_digit()) && if lenient { (1..=4).contains(&t.len()) } else { t.len() == 4 };
        if ok {
            t.parse().ok().filter(|y| *y > 0)
        } else {
            None
        }
    };
    let day = |t: &str| -> Option<u8> {
        let t = t.trim_end_matches("st").trim_end_matches("nd").trim_end_matches("rd").trim_end_matches("th");
        (t.len() <= 2 && t.chars().all(|c| c.is_ascii_digit())).then(|| t.parse().ok()).flatten()
    };
    match tokens.as_slice() {
        [y] => year(y).map(PartialDate::year_only),
        [m, y] => PartialDate::new(year(y)?, Some(month_from_name(m)?), None),
        [a, b, y] => {
            let y = year(y)?;
            if let (Some(m), Some(d)) = (month_from_name(a), day(b)) {
                PartialDate::new(y, Some(m), Some(d))
            } else {
                PartialDate::new(y, Some(month_from_name(b)?), Some(day(a)?))
            }
        }
        _ => None,
    }
}

const SCALES: [(&str, f64); 4] = [("thousand", 1e3), ("million", 1e6), ("billion", 1e9), ("trillion", 1e12)];

/// Parses "$140 million", "585.8 million", "1,234", "120 minutes".
fn parse_number(raw: &str) -> Option<(f64, Option<Unit>)> {
    let (head, _) = split_parenthetical(raw);
    let mut rest = head.trim();
    let mut unit = None;
    for prefix in ["US$", "$", "€", "£", "¥", "₹"] {
        if let Some(r) = rest.strip_prefix(prefix) {
            rest = r.trim_start();
            unit = Some(Unit::Money);
            break;
        }
    }
    let end = rest
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || *c == ',' || *c == '.'))
        .map(|(i, _)| i)
        .unwrap_or(rest.len());
    let digits = &rest[..end];
    if !digits.starts_with(|c: char| c.is_ascii_digit()) || digits.ends_with(['.', ',']) {
        return None;
    }
    if !valid_grouping(digits) {
        return None;
    }
    let mut magnitude: f64 = digits.replace(',', "").parse().ok()?;
    let mut words = rest[end..].split_whitespace().peekable();
    if let Some(w) = words.peek() {
        let lw = w.to_ascii_lowercase();
        if let Some((_, scale)) = SCALES.iter().find(|(name, _)| *name == lw) {
            magnitude *= scale;
            words.next();
        }
    }
    let tail: Vec<&str> = words.collect();
    if !tail.is_empty() {
        if tail.len() > 2
            || !tail
                .iter()
                .all(|w| w.chars().all(|c| c.is_alphabetic() || c == '²' || c == '³' || c == '/' || c == '.'))
        {
            return None;
        }
        let tag = tail.join(" ");
        let money = ["usd", "dollars", "eur", "euros", "gbp", "pounds", "inr", "rupees"];
        if money.contains(&tag.to_ascii_lowercase().as_str()) {
            unit = Some(Unit::Money);
        } else if unit.is_none() {
            unit = Some(Unit::Other(tag));
        } else {
            return None;
        }
    }
    Some((magnitude, unit))
}

fn valid_grouping(digits: &str) -> bool {
    let int_part = digits.split('.').next().unwrap_or("");
    if digits.matches('.').count() > 1 {
        return false;
    }
    if !int_part.contains(',') {
        return true;
    }
    let groups: Vec<&str> = int_part.split(',').collect();
    (1..=3).contains(&groups[0].len()) && groups[1..].iter().all(|g| g.len() == 3)
}

const CONNECTORS: [&str; 11] = ["of", "the", "and", "de", "for", "&", "in", "on", "at", "la", "du"];

fn looks_like_name(s: &str) -> bool {
    let words: Vec<&str> = s.split_whitespace().collect();
    if words.is_empty() || words.len() > 8 {
        return false;
    }
    words[0].starts_with(|c: char| c.is_uppercase())
        && words
            .iter()
            .all(|w| w.starts_with(|c: char| c.is_uppercase() || c.is_ascii_digit()) || CONNECTORS.contains(w))
}

fn looks_like_location(s: &str) -> bool {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    parts.len() >= 2 && parts.iter().all(|p| !p.is_empty() && looks_like_name(p))
}
