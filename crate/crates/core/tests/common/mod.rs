//! Independent oracles for integration and acceptance tests. Nothing here
//! calls the library's parsers or evaluators: tables are read from their raw
//! strings, dates go through chrono and claims are recognized by regex.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};
use regex::Regex;
use tabnli::Table;

pub const TOY_SCHEMAS: &str = include_str!("../../../../data/toy/schemas.json");
pub const TOY_TABLES: &str = include_str!("../../../../data/toy/tables.jsonl");
pub const TOY_TEMPLATES: &str = include_str!("../../../../data/toy/templates.tsv");
pub const TOY_PARAPHRASES: &str = include_str!("../../../../data/toy/paraphrases.tsv");
pub const TOY_CONSTRAINTS: &str = include_str!("../../../../data/toy/constraints.tsv");
pub const CATEGORY_HARDNESS: &str = include_str!("../../../../data/hardness/category_hardness.csv");
pub const ENTITY_HARDNESS: &str = include_str!("../../../../data/hardness/entity_hardness.csv");

pub fn toy_bundle() -> tabnli::Bundle {
    tabnli::Bundle::load(tabnli::BundleText {
        schemas: TOY_SCHEMAS,
        tables: TOY_TABLES,
        templates: TOY_TEMPLATES,
        paraphrases: TOY_PARAPHRASES,
        constraints: TOY_CONSTRAINTS,
    })
    .expect("toy bundle loads")
}

/// A table reduced to raw strings.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub id: String,
    pub title: String,
    pub category: String,
    pub rows: Vec<(String, Vec<String>)>,
}

impl RawTable {
    pub fn of(t: &Table) -> Self {
        let rec = t.to_record();
        RawTable {
            id: rec.id.unwrap_or_default(),
            title: rec.title.unwrap_or_default(),
            category: rec.category.unwrap_or_default(),
            rows: rec.rows.into_iter().map(|r| (r.key, r.values)).collect(),
        }
    }

    pub fn values(&self, key: &str) -> Option<&[String]> {
        self.rows.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_slice())
    }

    pub fn first(&self, key: &str) -> Option<&str> {
        self.values(key).and_then(|v| v.first()).map(String::as_str)
    }

    /// Rows without the id, for parent/child content comparison.
    pub fn content(&self) -> String {
        format!("{}|{}|{:?}", self.title, self.category, self.rows)
    }
}

/// (year, month, day) with optional month and day.
pub type Ymd = (i32, Option<u32>, Option<u32>);

fn strip_paren(s: &str) -> &str {
    s.split('(').next().unwrap_or(s).trim()
}

pub fn paren(s: &str) -> Option<String> {
    let start = s.find('(')?;
    let end = s[start..].find(')')? + start;
    Some(s[start + 1..end].trim().to_string())
}

pub fn parse_date(s: &str) -> Option<Ymd> {
    let s = strip_paren(s);
    for fmt in ["%B %d, %Y", "%b %d, %Y", "%d %B %Y", "%Y-%m-%d"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return Some((d.year(), Some(d.month()), Some(d.day())));
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(&format!("1 {s}"), "%d %B %Y") {
        return Some((d.year(), Some(d.month()), None));
    }
    let year = compiled(r"^\d{3,4}$");
    if year.is_match(s) {
        return s.parse().ok().map(|y| (y, None, None));
    }
    None
}

pub fn year(s: &str) -> Option<i32> {
    parse_date(s).map(|d| d.0)
}

/// Compares two dates at the precision both carry.
pub fn date_cmp(a: Ymd, b: Ymd) -> std::cmp::Ordering {
    let mut ord = a.0.cmp(&b.0);
    if let (Some(x), Some(y)) = (a.1, b.1) {
        ord = ord.then(x.cmp(&y));
        if let (Some(x), Some(y)) = (a.2, b.2) {
            ord = ord.then(x.cmp(&y));
        }
    }
    ord
}

/// Leading number scaled by a following million/billion word.
pub fn parse_number(s: &str) -> Option<f64> {
    let re = compiled(r"(-?[\d,]*\.?\d+)\s*(million|billion|thousand)?");
    let c = re.captures(s)?;
    let n: f64 = c[1].replace(',', "").parse().ok()?;
    let scale = match c.get(2).map(|m| m.as_str()) {
        Some("thousand") => 1e3,
        Some("million") => 1e6,
        Some("billion") => 1e9,
        _ => 1.0,
    };
    Some(n * scale)
}

/// Whole years from `a` to `b`, both full dates.
pub fn whole_years(a: Ymd, b: Ymd) -> Option<i64> {
    let (am, ad, bm, bd) = (a.1?, a.2?, b.1?, b.2?);
    let mut y = i64::from(b.0 - a.0);
    if (bm, bd) < (am, ad) {
        y -= 1;
    }
    Some(y)
}

/// Whole months from `a` to `b`.
pub fn whole_months(a: Ymd, b: Ymd) -> Option<i64> {
    let (am, bm) = (a.1?, b.1?);
    let mut m = i64::from(b.0 - a.0) * 12 + i64::from(bm) - i64::from(am);
    if let (Some(ad), Some(bd)) = (a.2, b.2) {
        if bd < ad {
            m -= 1;
        }
    }
    Some(m)
}

pub fn is_leap(y: i32) -> bool {
    NaiveDate::from_ymd_opt(y, 2, 29).is_some()
}

// ---------------------------------------------------------------------------
// Constraint oracle
// ---------------------------------------------------------------------------

/// Ids of toy constraints the table violates. A constraint whose inputs are
/// missing or unparsable is skipped.
pub fn toy_constraint_violations(t: &RawTable) -> Vec<&'static str> {
    let mut bad = Vec::new();
    let num = |k: &str| t.first(k).and_then(parse_number);
    let date = |k: &str| t.first(k).and_then(parse_date);
    match t.category.as_str() {
        "Person" => {
            if let (Some(b), Some(d)) = (date("Born"), date("Died")) {
                if date_cmp(b, d).is_gt() {
                    bad.push("person-born-before-died");
                }
            }
            if let Some(b) = date("Born") {
                if b.0 < 1800 {
                    bad.push("person-born-modern");
                }
            }
            if let Some(c) = t.values("Children") {
                if c.len() > 12 {
                    bad.push("person-few-children");
                }
            }
        }
        "Movie" => {
            if num("Budget").is_some_and(|v| v < 0.0) {
                bad.push("movie-budget-nonneg");
            }
            if num("Box Office").is_some_and(|v| v < 0.0) {
                bad.push("movie-box-office-nonneg");
            }
            if let Some(r) = t.values("Release") {
                if r.len() >= 2 {
                    if let (Some(a), Some(b)) = (paren(&r[0]), paren(&r[1])) {
                        if a == b {
                            bad.push("movie-release-places");
                        }
                    }
                    if let (Some(a), Some(b)) = (parse_date(&r[0]), parse_date(&r[1])) {
                        if date_cmp(a, b).is_gt() {
                            bad.push("movie-release-order");
                        }
                    }
                }
            }
            if num("Running time").is_some_and(|v| v <= 0.0) {
                bad.push("movie-running-positive");
            }
        }
        "City" => {
            if let (Some(lo), Some(hi)) = (num("Lowest Elevation"), num("Highest Elevation")) {
                if lo > hi {
                    bad.push("city-elevation-order");
                }
            }
            if num("Population").is_some_and(|v| v < 0.0) {
                bad.push("city-population-nonneg");
            }
            if date("Founded").is_some_and(|d| d.0 > 2024) {
                bad.push("city-founded-past");
            }
        }
        _ => {}
    }
    bad
}

// ---------------------------------------------------------------------------
// Claim oracle
// ---------------------------------------------------------------------------

fn compiled(pattern: &str) -> Regex {
    thread_local! {
        static CACHE: std::cell::RefCell<std::collections::HashMap<String, Regex>> = Default::default();
    }
    CACHE.with(|c| c.borrow_mut().entry(pattern.to_string()).or_insert_with(|| Regex::new(pattern).unwrap()).clone())
}

fn caps(pattern: &str, text: &str) -> Option<Vec<String>> {
    let re = compiled(&format!("(?i)^{pattern}$"));
    let c = re.captures(text)?;
    Some((1..c.len()).map(|i| c.get(i).map_or(String::new(), |m| m.as_str().to_string())).collect())
}

fn int(s: &str) -> i64 {
    s.parse().expect("integer capture")
}

fn any_text(vals: Option<&[String]>, s: &str) -> bool {
    vals.is_some_and(|v| v.iter().any(|x| strip_paren(x) == s || x == s))
}

fn any_number(vals: Option<&[String]>, s: &str) -> bool {
    let Some(n) = parse_number(s) else { return false };
    vals.is_some_and(|v| v.iter().any(|x| parse_number(x) == Some(n)))
}

/// Truth of a toy hypothesis against a table, re-derived from the sentence.
/// `None` when the sentence does not match the template's surface pattern.
pub fn toy_claim(template_id: &str, sentence: &str, t: &RawTable, reference: Ymd) -> Option<bool> {
    let title = regex::escape(&t.title);
    let date = |k: &str| t.first(k).and_then(parse_date);
    let num = |k: &str| t.first(k).and_then(parse_number);
    let before_after =
        |which: &str, v: i64, lit: i64| if which.eq_ignore_ascii_case("before") { v < lit } else { v > lit };
    Some(match template_id {
        "person-born-pivot" => {
            let c = caps(&format!(r"{title} was born (before|after) (\d+)\."), sentence)?;
            before_after(&c[0], i64::from(date("Born")?.0), int(&c[1]))
        }
        "person-died-year" => {
            let c = caps(&format!(r"{title} died (before|after) (\d+)\."), sentence)?;
            before_after(&c[0], i64::from(date("Died")?.0), int(&c[1]))
        }
        "person-age-70" => {
            let c = caps(&format!(r"The age of {title} is (more than|at most) 70\."), sentence)?;
            let age = whole_years(date("Born")?, date("Died").unwrap_or(reference))?;
            (age > 70) == (c[0] == "more than")
        }
        "person-leap-birth" => {
            let c = caps(&format!(r"The birth year of {title} (was|was not) a leap year\."), sentence)?;
            is_leap(date("Born")?.0) == (c[0] == "was")
        }
        "person-children-count" => {
            let c = caps(&format!(r"{title} has (\d+) children\."), sentence)?;
            t.values("Children").map_or(0, |v| v.len()) as i64 == int(&c[0])
        }
        "person-children-compare" => {
            let c = caps(&format!(r"{title} has (fewer|more) than (\d+) children\."), sentence)?;
            let n = t.values("Children").map_or(0, |v| v.len()) as i64;
            if c[0] == "fewer" {
                n < int(&c[1])
            } else {
                n > int(&c[1])
            }
        }
        "person-children-name" => {
            let c = caps(&format!(r"(.+) is a child of {title}\."), sentence)?;
            any_text(t.values("Children"), &c[0])
        }
        "person-alma-mater" => {
            let c = caps(&format!(r"{title} graduated from (.+)\."), sentence)?;
            any_text(t.values("Alma Mater"), &c[0])
        }
        "person-alma-mater-where" => {
            let c = caps(&format!(r"(.+) is where {title} studied\."), sentence)?;
            any_text(t.values("Alma Mater"), &c[0])
        }
        "person-occupation" => {
            let c = caps(&format!(r"{title} worked as an? (.+)\."), sentence)?;
            any_text(t.values("Occupation"), &c[0])
        }
        "person-occupation-known" => {
            let c = caps(&format!(r"{title} was known as an? (.+)\."), sentence)?;
            any_text(t.values("Occupation"), &c[0])
        }
        "movie-hit-flop" => {
            let c = caps(&format!(r"The movie {title} was a (hit|flop)\."), sentence)?;
            (num("Box Office")? - num("Budget")? > 0.0) == (c[0] == "hit")
        }
        "movie-budget" => {
            let c = caps(&format!(r"{title} had a budget of (.+)\."), sentence)?;
            any_number(t.values("Budget"), &c[0])
        }
        "movie-box-office" => {
            let c = caps(&format!(r"{title} grossed (.+) at the box office\."), sentence)?;
            any_number(t.values("Box Office"), &c[0])
        }
        "movie-director" => {
            let c = caps(&format!(r"{title} was directed by (.+)\."), sentence)?;
            any_text(t.values("Directed by"), &c[0])
        }
        "movie-director-name" => {
            let c = caps(&format!(r"(.+) is the director of {title}\."), sentence)?;
            any_text(t.values("Directed by"), &c[0])
        }
        "movie-release-year" => {
            let c = caps(&format!(r"{title} was first released (before|after) (\d+)\."), sentence)?;
            before_after(&c[0], i64::from(date("Release")?.0), int(&c[1]))
        }
        "movie-release-gap" => {
            let c = caps(&format!(r"{title} opened in (.+) (\d+) months before (.+)\."), sentence)?;
            let r = t.values("Release")?;
            let (a, b) = (r.first()?, r.get(1)?);
            paren(a)? == c[0] && paren(b)? == c[2] && whole_months(parse_date(a)?, parse_date(b)?)? == int(&c[1])
        }
        "movie-running-long" => {
            let c = caps(&format!(r"{title} runs (more|no more) than 120 minutes\."), sentence)?;
            (num("Running time")? > 120.0) == (c[0] == "more")
        }
        "movie-running-pivot" => {
            let c = caps(&format!(r"{title} is (\d+) minutes long\."), sentence)?;
            num("Running time")? == int(&c[0]) as f64
        }
        "movie-country" => {
            let c = caps(&format!(r"{title} was produced in (.+)\."), sentence)?;
            any_text(t.values("Country"), &c[0])
        }
        "movie-country-origin" => {
            let c = caps(&format!(r"(.+) is the country of origin of {title}\."), sentence)?;
            any_text(t.values("Country"), &c[0])
        }
        "city-country" => {
            let c = caps(&format!(r"{title} is located in (.+)\."), sentence)?;
            any_text(t.values("Country"), &c[0])
        }
        "city-country-city" => {
            let c = caps(&format!(r"{title} is a city in (.+)\."), sentence)?;
            any_text(t.values("Country"), &c[0])
        }
        "city-founded-pivot" => {
            let c = caps(&format!(r"{title} was founded (before|after) (\d+)\."), sentence)?;
            before_after(&c[0], i64::from(date("Founded")?.0), int(&c[1]))
        }
        "city-founded-year" => {
            let c = caps(&format!(r"{title} was founded in (\d+)\."), sentence)?;
            t.values("Founded")?.iter().any(|v| year(v) == Some(int(&c[0]) as i32))
        }
        "city-population-million" => {
            let c = caps(&format!(r"{title} has (more than|at most) one million residents\."), sentence)?;
            (num("Population")? > 1e6) == (c[0] == "more than")
        }
        "city-population" => {
            let c = caps(&format!(r"The population of {title} is (.+)\."), sentence)?;
            any_number(t.values("Population"), &c[0])
        }
        "city-elevation-range" => {
            let c = caps(&format!(r"The elevation range of {title} is (-?\d+) feet\."), sentence)?;
            num("Highest Elevation")? - num("Lowest Elevation")? == int(&c[0]) as f64
        }
        "city-highest-500" => {
            let c = caps(&format!(r"The highest point of {title} is (above|not above) 500 feet\."), sentence)?;
            (num("Highest Elevation")? > 500.0) == (c[0] == "above")
        }
        "city-lowest" => {
            let c = caps(&format!(r"The lowest point of {title} is (.+)\."), sentence)?;
            any_number(t.values("Lowest Elevation"), &c[0])
        }
        "city-mayor-governs" => {
            let c = caps(&format!(r"The governing of {title} is supervised by (.+)\."), sentence)?;
            any_text(t.values("Mayor"), &c[0])
        }
        "city-mayor" => {
            let c = caps(&format!(r"(.+) is the mayor of {title}\."), sentence)?;
            any_text(t.values("Mayor"), &c[0])
        }
        _ => return None,
    })
}

// ---------------------------------------------------------------------------
// Other oracles
// ---------------------------------------------------------------------------

/// Token-level edit distance over whitespace tokens.
pub fn whitespace_token_distance(a: &str, b: &str) -> usize {
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

/// Union of raw values per (category, key) across tables.
pub fn pool_union(tables: &[RawTable]) -> BTreeMap<(String, String), BTreeSet<String>> {
    let mut out: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for t in tables {
        for (k, vs) in &t.rows {
            out.entry((t.category.clone(), k.clone())).or_default().extend(vs.iter().cloned());
        }
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
