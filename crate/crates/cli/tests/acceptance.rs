//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any failed.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use common::*;
use tabnli::counterfactual::{build_pools, expand_corpus, Expansion};
use tabnli::expr::EvalContext;
use tabnli::hypothesis::BalanceMode;
use tabnli::split::{
    assignment_from, hardness_assignment, HardnessMatrix, Sizing, SplitName, PUBLISHED_CATEGORY_ASSIGNMENT,
};
use tabnli::table::{RowRecord, TableRecord};
use tabnli::template::{bind, realize, render, truth_of, Binding};
use tabnli::{
    generate_pairs, ingest_table, Bundle, GenerationConfig, Label, MutationConfig, PartialDate, Table, Template,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Template, binding, table it is judged against, expected sentence.
type Case<'a> = (&'a Template, &'a Binding, &'a Table, &'static str);

const REFERENCE: Ymd = (2024, Some(1), Some(1));

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tabnli")
}

fn toy_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}

fn ctx() -> EvalContext {
    EvalContext { reference_date: PartialDate::parse_iso("2024-01-01") }
}

fn table(b: &Bundle, id: &str, title: &str, category: &str, rows: &[(&str, &str)], parent: Option<&str>) -> Table {
    let record = TableRecord {
        id: Some(id.into()),
        title: Some(title.into()),
        category: Some(category.into()),
        rows: rows.iter().map(|(k, v)| RowRecord { key: k.to_string(), values: vec![v.to_string()] }).collect(),
        is_counterfactual: parent.map(|_| true),
        parent_id: parent.map(str::to_string),
    };
    ingest_table(&record, Some(&b.schemas)).expect("hand-built table ingests")
}

fn label(truth: bool) -> Label {
    if truth {
        Label::Entail
    } else {
        Label::Contradict
    }
}

/// Expands the toy corpus with `n` counterfactuals per original.
fn expand(b: &Bundle, tables: &[Table], seed: u64, n: usize) -> Expansion {
    let pools = build_pools(tables, Some(&b.schemas));
    let cfg = MutationConfig { seed, n_counterfactuals: n, ..Default::default() };
    expand_corpus(tables, &pools, &b.constraints, &b.schemas, &cfg).expect("expansion runs")
}

fn gen_cfg(seed: u64, balance: BalanceMode) -> GenerationConfig {
    GenerationConfig { seed, balance, reference_date: PartialDate::parse_iso("2024-01-01"), ..Default::default() }
}

fn pairs_for(b: &Bundle, tables: &[Table], cfg: &GenerationConfig) -> Vec<tabnli::GeneratedPair> {
    let pools = build_pools(tables, Some(&b.schemas));
    generate_pairs(tables, &b.library, &pools, cfg).pairs
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

/// Four hypotheses about one biography, checked against the original table
/// and a counterfactual with a different death date, child list and school.
fn c1_janet_leigh() -> Outcome {
    let b = toy_bundle();
    let original = table(
        &b,
        "jl",
        "Janet Leigh",
        "Person",
        &[
            ("Born", "July 6, 1927"),
            ("Died", "October 3, 2004"),
            ("Children", "Kelly Curtis; Jamie Lee Curtis"),
            ("Alma Mater", "Stanford University"),
            ("Occupation", "None"),
        ],
        None,
    );
    let cf = table(
        &b,
        "jl-cf1",
        "Janet Leigh",
        "Person",
        &[
            ("Born", "July 6, 1927"),
            ("Died", "January 13, 1994"),
            ("Children", "Kelly Curtis"),
            ("Alma Mater", "University of California"),
            ("Occupation", "Scientist"),
        ],
        Some("jl"),
    );
    let tpl = |id: &str| -> Result<&Template, String> {
        b.library.hypothesis(id).ok_or(format!("toy template {id} missing"))
    };
    let mut rng = tabnli::seed::rng_for(1, "jl", "acceptance", 0);
    let mut bound = |t: &Template, on: &Table, f: &dyn Fn(&mut Binding)| -> Result<Binding, String> {
        let mut x = bind(t, on, &ctx(), &mut rng).map_err(|e| e.to_string())?;
        f(&mut x);
        Ok(x)
    };

    let born = tpl("person-born-pivot")?;
    let age = tpl("person-age-70")?;
    let count = tpl("person-children-count")?;
    let compare = tpl("person-children-compare")?;
    let school = tpl("person-alma-mater")?;

    let h1 = bound(born, &original, &|x| {
        x.set_pivot_literal(1940.0);
        x.set_choice_first(true);
    })?;
    let h1c = bound(born, &cf, &|x| {
        x.set_pivot_literal(1915.0);
        x.set_choice_first(false);
    })?;
    let h2 = bound(age, &original, &|x| x.set_cond_then(true))?;
    let h3 = bound(count, &original, &|x| {
        x.set_pivot_literal(1.0);
        x.set_show_literal(true);
    })?;
    let h3c = bound(compare, &cf, &|x| {
        x.set_pivot_literal(2.0);
        x.set_choice_first(false);
    })?;
    let h4 = bound(school, &original, &|_| {})?;

    let cases: [Case; 8] = [
        (born, &h1, &original, "Janet Leigh was born before 1940."),
        (age, &h2, &original, "The age of Janet Leigh is more than 70."),
        (count, &h3, &original, "Janet Leigh has 1 children."),
        (school, &h4, &original, "Janet Leigh graduated from Stanford University."),
        (born, &h1c, &cf, "Janet Leigh was born after 1915."),
        (age, &h2, &cf, "The age of Janet Leigh is more than 70."),
        (compare, &h3c, &cf, "Janet Leigh has more than 2 children."),
        (school, &h4, &cf, "Janet Leigh graduated from Stanford University."),
    ];
    let mut labels = String::new();
    for (t, x, on, want) in cases {
        let sentence = realize(t, x).map_err(|e| e.to_string())?;
        ensure!(sentence == want, "{}: realized '{sentence}', expected '{want}'", t.id);
        let l = label(truth_of(t, x, on, &ctx()).map_err(|e| e.to_string())?);
        let oracle = toy_claim(&t.id, &sentence, &RawTable::of(on), REFERENCE)
            .ok_or(format!("oracle cannot read '{sentence}'"))?;
        ensure!(label(oracle) == l, "'{sentence}' on {}: library {l}, oracle {}", on.id(), label(oracle));
        labels.push_str(l.code());
    }
    ensure!(labels == "EECEECCC", "labels {labels}, expected EECE then ECCC");
    Ok("original E,E,C,E; counterfactual E,C,C,C".into())
}

fn c2_ironman() -> Outcome {
    let b = toy_bundle();
    let t = table(&b, "im", "Ironman", "Movie", &[("Budget", "$140 million"), ("Box Office", "$585.8 million")], None);
    let tpl = b.library.hypothesis("movie-hit-flop").ok_or("movie-hit-flop missing")?;
    let mut rng = tabnli::seed::rng_for(1, "im", "acceptance", 0);
    let x = bind(tpl, &t, &ctx(), &mut rng).map_err(|e| e.to_string())?;
    let e = render(tpl, &x, Label::Entail).map_err(|e| e.to_string())?;
    let c = render(tpl, &x, Label::Contradict).map_err(|e| e.to_string())?;
    ensure!(e.sentence == "The movie Ironman was a hit.", "entail rendered '{}'", e.sentence);
    ensure!(c.sentence == "The movie Ironman was a flop.", "contradict rendered '{}'", c.sentence);
    for r in [&e, &c] {
        let truth = truth_of(tpl, &r.binding, &t, &ctx()).map_err(|e| e.to_string())?;
        ensure!(label(truth) == r.label, "'{}' evaluates to {}", r.sentence, label(truth));
    }
    Ok("hit=E, flop=C".into())
}

fn c3_counterfactual_validity() -> Outcome {
    let b = toy_bundle();
    let started = Instant::now();
    let x = expand(&b, &b.tables, 20240613, 55);
    let elapsed = started.elapsed();
    let parents: BTreeMap<&str, RawTable> = b.tables.iter().map(|t| (t.id(), RawTable::of(t))).collect();
    let (mut n, mut invalid, mut identical) = (0usize, 0usize, 0usize);
    for t in x.tables.iter().filter(|t| t.is_counterfactual()) {
        n += 1;
        let raw = RawTable::of(t);
        if !toy_constraint_violations(&raw).is_empty() {
            invalid += 1;
        }
        let parent = t.parent_id().ok_or("counterfactual without parent")?;
        if raw.content() == parents[parent].content() {
            identical += 1;
        }
    }
    ensure!(n >= 1000, "only {n} counterfactuals ({} skipped)", x.skipped.len());
    ensure!(invalid == 0, "{invalid}/{n} violate a constraint under brute-force recheck");
    ensure!(identical == 0, "{identical}/{n} identical to their parent");
    ensure!(elapsed.as_secs() < 30, "took {elapsed:?}");
    Ok(format!("{n} counterfactuals, 100% valid, 0% identical, {:.2}s", elapsed.as_secs_f64()))
}

fn c4_expansion_size() -> Outcome {
    let b = toy_bundle();
    let originals = &b.tables[..10];
    let x = expand(&b, originals, 20240613, 5);
    ensure!(x.tables.len() == 60, "{} tables, {} skipped", x.tables.len(), x.skipped.len());
    let ids: BTreeSet<&str> = x.tables.iter().map(|t| t.id()).collect();
    ensure!(ids.len() == 60, "duplicate table ids");
    Ok("10 originals x (1 + 5) = 60 tables".into())
}

fn c5_balance() -> Outcome {
    let b = toy_bundle();
    let mut report = Vec::new();
    for seed in [20240613u64, 1, 2] {
        let x = expand(&b, &b.tables, seed, 5);
        let pairs = pairs_for(&b, &x.tables, &gen_cfg(seed, BalanceMode::Global));
        let e = pairs.iter().filter(|p| p.label == Label::Entail).count();
        let frac = e as f64 / pairs.len() as f64;
        ensure!(pairs.len() >= 1000, "seed {seed}: only {} pairs", pairs.len());
        ensure!((0.45..=0.55).contains(&frac), "seed {seed}: entail fraction {frac:.4}");
        report.push(format!("{frac:.3} of {}", pairs.len()));
    }
    Ok(format!("entail fraction {}", report.join(", ")))
}

fn c6_minimal_flips() -> Outcome {
    let b = toy_bundle();
    let x = expand(&b, &b.tables, 20240613, 5);
    let pairs = pairs_for(&b, &x.tables, &gen_cfg(20240613, BalanceMode::Off));
    let mut by: BTreeMap<(&str, &str), Vec<&tabnli::GeneratedPair>> = BTreeMap::new();
    for p in &pairs {
        by.entry((&p.table_id, &p.template_id)).or_default().push(p);
    }
    let (mut checked, mut worst) = (0usize, 0usize);
    for sib in by.values().filter(|v| v.len() == 2 && v[0].strategy.is_flip()) {
        let d = whitespace_token_distance(&sib[0].hypothesis, &sib[1].hypothesis);
        ensure!(d <= 2, "'{}' vs '{}' differ by {d} tokens", sib[0].hypothesis, sib[1].hypothesis);
        worst = worst.max(d);
        checked += 1;
    }
    ensure!(checked > 0, "no flip siblings found");
    Ok(format!("{checked} sibling pairs, max distance {worst}"))
}

fn c7_label_soundness() -> Outcome {
    let b = toy_bundle();
    let x = expand(&b, &b.tables, 20240613, 5);
    let raw: BTreeMap<&str, RawTable> = x.tables.iter().map(|t| (t.id(), RawTable::of(t))).collect();
    let pairs = pairs_for(&b, &x.tables, &gen_cfg(20240613, BalanceMode::Off));
    for p in &pairs {
        let truth = toy_claim(&p.template_id, &p.hypothesis, &raw[p.table_id.as_str()], REFERENCE)
            .ok_or(format!("oracle cannot read '{}' ({})", p.hypothesis, p.template_id))?;
        ensure!(
            label(truth) == p.label,
            "{} on {}: '{}' labelled {}",
            p.template_id,
            p.table_id,
            p.hypothesis,
            p.label
        );
    }
    Ok(format!("{} of {} labels agree with the oracle", pairs.len(), pairs.len()))
}

fn c8_hardness_split() -> Outcome {
    let m = HardnessMatrix::from_csv(CATEGORY_HARDNESS).map_err(|e| e.to_string())?;
    let got = hardness_assignment(&m, None, &Sizing::Counts([5, 3, 3]), 80.0).map_err(|e| e.to_string())?;
    let want = assignment_from(&PUBLISHED_CATEGORY_ASSIGNMENT);
    let test = |a: &BTreeMap<String, SplitName>| {
        a.iter().filter(|(_, s)| **s == SplitName::Test).map(|(u, _)| u.clone()).collect::<Vec<_>>().join(", ")
    };
    ensure!(
        got == want,
        "threshold ranking puts {{{}}} in test; published test set is {{{}}}",
        test(&got),
        test(&want)
    );
    Ok("ranking reproduces the published assignment".into())
}

fn run(args: &[&str]) -> Result<Output, String> {
    Command::new(bin()).args(args).output().map_err(|e| format!("spawning {}: {e}", bin()))
}

fn digests(dir: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.is_file() {
            let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), sha256_hex(&bytes));
        }
    }
    Ok(out)
}

fn c9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = toy_dir().join("config.toml");
    let mut runs = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = tmp.path().join(name);
        let o =
            run(&["generate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs])?;
        ensure!(o.status.success(), "generate --jobs {jobs} failed: {}", String::from_utf8_lossy(&o.stderr));
        runs.push(digests(&out)?);
    }
    ensure!(runs[0].len() >= 4, "only {} output files", runs[0].len());
    ensure!(runs[0] == runs[1], "two runs with --jobs 1 differ");
    ensure!(runs[0] == runs[2], "--jobs 1 and --jobs 4 differ");
    Ok(format!("{} files byte-identical across 3 runs", runs[0].len()))
}

fn violation_lines(o: &Output) -> usize {
    String::from_utf8_lossy(&o.stdout).lines().filter(|l| !l.starts_with("ok:")).count()
}

fn c10_validate() -> Outcome {
    let config = toy_dir().join("config.toml");
    let clean = run(&["validate", "--config", config.to_str().unwrap()])?;
    ensure!(clean.status.code() == Some(0), "clean bundle exits {:?}", clean.status.code());
    ensure!(violation_lines(&clean) == 0, "clean bundle reports:\n{}", String::from_utf8_lossy(&clean.stdout));

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pruned: String = TOY_TEMPLATES
        .lines()
        .filter(|l| !l.starts_with("person-occupation-known\t"))
        .map(|l| format!("{l}\n"))
        .collect();
    ensure!(pruned.lines().count() + 1 == TOY_TEMPLATES.lines().count(), "template to remove not found");
    let path = tmp.path().join("templates.tsv");
    std::fs::write(&path, pruned).map_err(|e| e.to_string())?;
    let broken = run(&["validate", "--config", config.to_str().unwrap(), "--templates", path.to_str().unwrap()])?;
    ensure!(broken.status.code() == Some(1), "pruned bundle exits {:?}", broken.status.code());
    let n = violation_lines(&broken);
    ensure!(n == 1, "pruned bundle reports {n} violations:\n{}", String::from_utf8_lossy(&broken.stdout));
    Ok("0 violations on the toy bundle, 1 after removing a template".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("worked biography example", c1_janet_leigh),
        ("hit/flop conditional", c2_ironman),
        ("counterfactual validity", c3_counterfactual_validity),
        ("expansion size", c4_expansion_size),
        ("label balance", c5_balance),
        ("minimal flips", c6_minimal_flips),
        ("label soundness", c7_label_soundness),
        ("hardness split", c8_hardness_split),
        ("determinism", c9_determinism),
        ("validate", c10_validate),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let ms = started.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({ms} ms)", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
