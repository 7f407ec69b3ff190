//! End-to-end runs of the subcommands against the toy bundle.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::commands::Failure;
use crate::{run, Cli};

fn toy(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy").join(name)
}

fn hardness(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/hardness").join(name)
}

fn tabnli(args: &[&str]) -> Result<(), Failure> {
    let cli = Cli::try_parse_from(std::iter::once("tabnli").chain(args.iter().copied())).expect("arguments parse");
    run(cli)
}

fn code(r: &Result<(), Failure>) -> u8 {
    r.as_ref().err().map_or(0, Failure::code)
}

fn message(r: &Result<(), Failure>) -> String {
    match r {
        Err(Failure::Domain(e) | Failure::Io(e)) => format!("{e:#}"),
        Err(Failure::Violations(n)) => format!("{n} violation(s)"),
        Ok(()) => String::new(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(out: &Path, extra: &[&str]) {
    let config = toy("config.toml");
    let mut args = vec!["generate", "--config", s(&config), "--out", s(out)];
    args.extend_from_slice(extra);
    let r = tabnli(&args);
    assert!(r.is_ok(), "{}", message(&r));
}

/// Rows of a pair file without the header, the per-file index and the
/// premise (cross-para rewrites premises).
fn rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            [&cols[1..2], &cols[3..]].concat().join("\t")
        })
        .collect()
}

#[test]
fn validate_exit_codes() {
    let config = toy("config.toml");
    assert_eq!(code(&tabnli(&["validate", "--config", s(&config)])), 0);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("constraints.tsv");
    std::fs::write(&bad, "broken\tPerson\tBorn:Year >=\n").unwrap();
    let o = tabnli(&["validate", "--config", s(&config), "--constraints", s(&bad)]);
    assert!(matches!(o, Err(Failure::Violations(1))), "{}", message(&o));

    let missing = dir.path().join("nope.tsv");
    let o = tabnli(&["validate", "--config", s(&config), "--templates", s(&missing)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_seed_is_a_usage_error() {
    let o = tabnli(&[
        "validate",
        "--tables",
        s(&toy("tables.jsonl")),
        "--templates",
        s(&toy("templates.tsv")),
        "--paraphrases",
        s(&toy("paraphrases.tsv")),
        "--constraints",
        s(&toy("constraints.tsv")),
        "--schemas",
        s(&toy("schemas.json")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(message(&o).contains("seed"));
}

#[test]
fn seed_flag_changes_output_and_manifest_records_it() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    generate(&a, &["--seed", "1"]);
    generate(&b, &["--seed", "2"]);
    assert_ne!(std::fs::read(a.join("pairs.tsv")).unwrap(), std::fs::read(b.join("pairs.tsv")).unwrap());
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert!(manifest["outputs"]["pairs.tsv"].is_string());
}

#[test]
fn splits_partition_the_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    generate(&out, &["--n-counterfactuals", "2"]);
    let mut all = rows(&out.join("pairs.tsv"));
    all.sort();
    let config = toy("config.toml");
    for strategy in ["category-random", "key-random", "no-para", "cross-para"] {
        let o = tabnli(&["split", "--config", s(&config), "--out", s(&out), "--strategy", strategy]);
        assert!(o.is_ok(), "{strategy}: {}", message(&o));
        let base = out.join("splits").join(strategy);
        let mut kept: Vec<String> =
            ["train", "dev", "test"].iter().flat_map(|n| rows(&base.join(format!("{n}.tsv")))).collect();
        kept.sort();
        // Every kept row is a generated pair, used once.
        let mut rest = all.clone();
        for row in &kept {
            let i = rest.binary_search(row).unwrap_or_else(|_| panic!("{strategy}: row not generated or repeated"));
            rest.remove(i);
        }
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(base.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["strategy"], strategy);
        assert_eq!(manifest["dropped"].as_u64().unwrap() as usize, rest.len(), "{strategy}");
        if strategy == "category-random" {
            assert!(rest.is_empty());
        }
    }
}

#[test]
fn cross_para_groups_are_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    generate(&out, &["--n-counterfactuals", "1"]);
    let config = toy("config.toml");
    let o = tabnli(&["split", "--config", s(&config), "--out", s(&out), "--strategy", "cross-para"]);
    assert!(o.is_ok(), "{}", message(&o));
    let text = std::fs::read_to_string(out.join("splits/cross-para/manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    let groups = manifest["paraphrase_groups"].as_object().expect("paraphrase groups recorded");
    let sets: Vec<BTreeSet<String>> = groups
        .values()
        .map(|v| v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect())
        .collect();
    assert_eq!(sets.len(), 3);
    for i in 0..3 {
        assert!(!sets[i].is_empty());
        for j in i + 1..3 {
            assert!(sets[i].is_disjoint(&sets[j]));
        }
    }
}

#[test]
fn too_few_units_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    generate(&out, &["--n-counterfactuals", "1"]);
    // Keep only Person pairs: one category cannot fill three splits.
    let text = std::fs::read_to_string(out.join("pairs.tsv")).unwrap();
    let mut lines = text.lines();
    let mut person = format!("{}\n", lines.next().unwrap());
    for l in lines.filter(|l| l.contains("\tperson-")) {
        person.push_str(l);
        person.push('\n');
    }
    let one = dir.path().join("person.tsv");
    std::fs::write(&one, person).unwrap();
    let config = toy("config.toml");
    let o = tabnli(&[
        "split",
        "--config",
        s(&config),
        "--out",
        s(&out),
        "--pairs",
        s(&one),
        "--strategy",
        "category-random",
    ]);
    assert_eq!(code(&o), 1);
    assert!(message(&o).contains("need at least 3 units, found 1"), "{}", message(&o));

    let empty = dir.path().join("empty.tsv");
    std::fs::write(&empty, "").unwrap();
    let o = tabnli(&[
        "split",
        "--config",
        s(&config),
        "--out",
        s(&out),
        "--pairs",
        s(&empty),
        "--strategy",
        "category-random",
    ]);
    assert_eq!(code(&o), 1, "{}", message(&o));
}

#[test]
fn cross_category_uses_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    generate(&out, &["--n-counterfactuals", "1"]);
    let config = toy("config.toml");
    let matrix = hardness("category_hardness.csv");
    let o = tabnli(&[
        "split",
        "--config",
        s(&config),
        "--out",
        s(&out),
        "--strategy",
        "cross-category",
        "--matrix",
        s(&matrix),
    ]);
    assert!(o.is_ok(), "{}", message(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("splits/cross-category/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["strategy"], "cross-category");
    assert_eq!(manifest["dropped"], 0);
}

#[test]
fn stats_on_empty_pairs_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    generate(&out, &["--n-counterfactuals", "1"]);
    let empty = dir.path().join("empty.tsv");
    std::fs::write(&empty, "").unwrap();
    let config = toy("config.toml");
    let o = tabnli(&["stats", "--config", s(&config), "--out", s(&out), "--pairs", s(&empty)]);
    assert_eq!(code(&o), 0, "{}", message(&o));
    let stats: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["label_counts"]["E"], 0);
    assert_eq!(stats["label_counts"]["C"], 0);
    assert_eq!(stats["avg_pairs_per_table"]["num"], 0);
}

#[test]
fn missing_generated_artifact_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy("config.toml");
    for cmd in ["split", "stats", "audit"] {
        let mut args = vec![cmd, "--config", s(&config), "--out", s(dir.path())];
        if cmd == "split" {
            args.extend(["--strategy", "key-random"]);
        }
        let o = tabnli(&args);
        assert_eq!(code(&o), 2, "{cmd}: {}", message(&o));
    }
}

#[test]
fn counterfactual_command_writes_tables_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cf");
    let config = toy("config.toml");
    let o = tabnli(&["counterfactual", "--config", s(&config), "--out", s(&out), "--n-counterfactuals", "2"]);
    assert!(o.is_ok(), "{}", message(&o));
    let tables = std::fs::read_to_string(out.join("tables.jsonl")).unwrap();
    assert!(tables.lines().count() > 20);
    assert!(!out.join("pairs.tsv").exists());
}
