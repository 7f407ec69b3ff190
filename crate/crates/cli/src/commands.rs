use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tabnli::counterfactual::{build_pools, expand_corpus};
use tabnli::hypothesis::sample_audit;
use tabnli::io::{read_pairs_tsv, write_audit_tsv, write_hypothesis_only_tsv, write_pairs_tsv};
use tabnli::seed::rng_for;
use tabnli::split::{build_split, HardnessMatrix, Sizing, SplitInputs, SplitName, SplitSpec};
use tabnli::stats::{corpus_stats, AverageBase, CorpusStats};
use tabnli::{generate_pairs, parse_corpus, Bundle, BundleText, GeneratedPair, GenerationConfig, Label, Table};

use crate::config::{Fingerprint, Inputs, RunConfig};

/// Why a command stopped. Violations have already been printed.
#[derive(Debug)]
pub enum Failure {
    Violations(usize),
    Domain(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Violations(_) | Failure::Domain(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    pub fn report(&self) {
        match self {
            Failure::Violations(n) => eprintln!("{n} violation(s)"),
            Failure::Domain(e) => eprintln!("error: {e:#}"),
            Failure::Io(e) => eprintln!("error: {e:#}"),
        }
    }
}

fn domain(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Domain(e.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Io)
}

fn write(path: &Path, contents: &str) -> Result<String, Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::Io)?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(Failure::Io)?;
    Ok(sha256_hex(contents.as_bytes()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build().map_err(domain)
}

/// Input texts plus their hashes, keyed by artifact name.
struct Loaded {
    bundle: Bundle,
    hashes: BTreeMap<&'static str, String>,
}

fn read_inputs(inputs: &Inputs) -> Result<BTreeMap<&'static str, String>, Failure> {
    inputs.named().into_iter().map(|(name, path)| Ok((name, read(path)?))).collect()
}

fn load(inputs: &Inputs) -> Result<Loaded, Failure> {
    let texts = read_inputs(inputs)?;
    let bundle = Bundle::load(BundleText {
        schemas: &texts["schemas"],
        tables: &texts["tables"],
        templates: &texts["templates"],
        paraphrases: &texts["paraphrases"],
        constraints: &texts["constraints"],
    })
    .map_err(domain)?;
    let hashes = texts.iter().map(|(k, v)| (*k, sha256_hex(v.as_bytes()))).collect();
    Ok(Loaded { bundle, hashes })
}

/// Every problem in the bundle, one printable line each.
fn violations(inputs: &Inputs, bundle: &Bundle) -> Vec<String> {
    let path_of = |artifact: &str| {
        inputs
            .named()
            .into_iter()
            .find(|(n, _)| *n == artifact)
            .map_or_else(|| artifact.to_string(), |(_, p)| p.display().to_string())
    };
    let mut lines: Vec<String> =
        bundle.validate().iter().map(|f| format!("{}: {}", path_of(f.artifact), f.message)).collect();
    for t in &bundle.tables {
        for id in bundle.constraints.check_all(t).violated() {
            lines.push(format!("{}: table '{}' violates constraint '{id}'", path_of("tables"), t.id()));
        }
    }
    lines
}

fn validated(cfg: &RunConfig) -> Result<Loaded, Failure> {
    let inputs = cfg.inputs().map_err(Failure::Io)?;
    let loaded = match load(inputs) {
        Ok(l) => l,
        Err(Failure::Domain(e)) => {
            println!("{e:#}");
            return Err(Failure::Violations(1));
        }
        Err(e) => return Err(e),
    };
    let lines = violations(inputs, &loaded.bundle);
    if !lines.is_empty() {
        for l in &lines {
            println!("{l}");
        }
        return Err(Failure::Violations(lines.len()));
    }
    Ok(loaded)
}

pub fn validate(cfg: &RunConfig) -> Result<(), Failure> {
    let b = validated(cfg)?.bundle;
    println!(
        "ok: {} tables, {} hypothesis templates, {} paraphrases, {} constraints",
        b.tables.len(),
        b.library.all_hypotheses().count(),
        b.library.all_paraphrases().count(),
        b.constraints.all().len()
    );
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    command: &'static str,
    seed: u64,
    config_sha256: String,
    config: Fingerprint<'a>,
    inputs: BTreeMap<&'static str, String>,
    outputs: BTreeMap<&'static str, String>,
    counts: BTreeMap<&'static str, usize>,
}

impl Manifest<'_> {
    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

fn config_sha(cfg: &RunConfig) -> String {
    sha256_hex(serde_json::to_string(&cfg.fingerprint()).expect("config serializes").as_bytes())
}

fn corpus_jsonl(tables: &[Table]) -> String {
    tables.iter().map(|t| t.to_json() + "\n").collect()
}

fn expand(cfg: &RunConfig, b: &Bundle) -> Result<tabnli::counterfactual::Expansion, Failure> {
    let pools = build_pools(&b.tables, Some(&b.schemas));
    expand_corpus(&b.tables, &pools, &b.constraints, &b.schemas, &cfg.mutation).map_err(domain)
}

pub fn counterfactual(cfg: &RunConfig) -> Result<(), Failure> {
    let loaded = validated(cfg)?;
    let b = &loaded.bundle;
    let x = thread_pool(cfg.jobs)?.install(|| expand(cfg, b))?;
    let mut outputs = BTreeMap::new();
    outputs.insert("tables.jsonl", write(&cfg.out.join("tables.jsonl"), &corpus_jsonl(&x.tables))?);
    let counts = BTreeMap::from([
        ("originals", b.tables.len()),
        ("counterfactuals", x.tables.len() - b.tables.len()),
        ("skipped_counterfactuals", x.skipped.len()),
    ]);
    let manifest = Manifest {
        tool: concat!("tabnli ", env!("CARGO_PKG_VERSION")),
        command: "counterfactual",
        seed: cfg.seed,
        config_sha256: config_sha(cfg),
        config: cfg.fingerprint(),
        inputs: loaded.hashes.clone(),
        outputs,
        counts,
    };
    write(&cfg.out.join("counterfactual_manifest.json"), &manifest.to_json())?;
    println!(
        "{} originals -> {} tables ({} counterfactuals skipped) in {}",
        b.tables.len(),
        x.tables.len(),
        x.skipped.len(),
        cfg.out.display()
    );
    Ok(())
}

fn generation(cfg: &RunConfig) -> GenerationConfig {
    GenerationConfig {
        seed: cfg.seed,
        balance_target: cfg.balance,
        balance: cfg.balance_mode,
        reference_date: cfg.reference_date,
        paraphrase_filter: None,
    }
}

fn stats_json(stats: &CorpusStats) -> String {
    let mut s = serde_json::to_string_pretty(stats).expect("stats serialize");
    s.push('\n');
    s
}

pub fn generate(cfg: &RunConfig) -> Result<(), Failure> {
    if !(cfg.balance > 0.0 && cfg.balance.is_finite()) {
        return Err(domain(anyhow!("balance must be a positive ratio, got {}", cfg.balance)));
    }
    let loaded = validated(cfg)?;
    let b = &loaded.bundle;
    let gen = generation(cfg);
    let (x, set) = thread_pool(cfg.jobs)?.install(|| -> Result<_, Failure> {
        let x = expand(cfg, b)?;
        let pools = build_pools(&b.tables, Some(&b.schemas));
        let set = generate_pairs(&x.tables, &b.library, &pools, &gen);
        Ok((x, set))
    })?;
    let stats = corpus_stats(&x.tables, &set.pairs, AverageBase::AllTables).map_err(domain)?;

    let mut outputs = BTreeMap::new();
    outputs.insert("tables.jsonl", write(&cfg.out.join("tables.jsonl"), &corpus_jsonl(&x.tables))?);
    outputs.insert("pairs.tsv", write(&cfg.out.join("pairs.tsv"), &write_pairs_tsv(&set.pairs))?);
    outputs.insert(
        "hypothesis_only.tsv",
        write(&cfg.out.join("hypothesis_only.tsv"), &write_hypothesis_only_tsv(&set.pairs))?,
    );
    outputs.insert("stats.json", write(&cfg.out.join("stats.json"), &stats_json(&stats))?);
    let counts = BTreeMap::from([
        ("originals", b.tables.len()),
        ("counterfactuals", x.tables.len() - b.tables.len()),
        ("skipped_counterfactuals", x.skipped.len()),
        ("pairs", set.pairs.len()),
        ("dropped_for_balance", set.dropped_for_balance),
        ("skipped_tables", set.skipped_tables.len()),
    ]);
    let manifest = Manifest {
        tool: concat!("tabnli ", env!("CARGO_PKG_VERSION")),
        command: "generate",
        seed: cfg.seed,
        config_sha256: config_sha(cfg),
        config: cfg.fingerprint(),
        inputs: loaded.hashes.clone(),
        outputs,
        counts,
    };
    write(&cfg.out.join("manifest.json"), &manifest.to_json())?;
    let e = stats.label_counts.get(Label::Entail.code()).copied().unwrap_or(0);
    println!(
        "{} tables, {} pairs ({} E / {} C) written to {}",
        x.tables.len(),
        set.pairs.len(),
        e,
        set.pairs.len() - e,
        cfg.out.display()
    );
    Ok(())
}

/// Locations of previously generated artifacts.
pub struct Artifacts {
    pairs: Option<PathBuf>,
    corpus: Option<PathBuf>,
}

impl Artifacts {
    pub fn new(pairs: Option<PathBuf>, corpus: Option<PathBuf>) -> Self {
        Self { pairs, corpus }
    }

    fn pairs(&self, cfg: &RunConfig) -> PathBuf {
        self.pairs.clone().unwrap_or_else(|| cfg.out.join("pairs.tsv"))
    }

    fn corpus(&self, cfg: &RunConfig) -> PathBuf {
        self.corpus.clone().unwrap_or_else(|| cfg.out.join("tables.jsonl"))
    }
}

fn read_corpus(path: &Path, schemas: Option<&tabnli::SchemaSet>) -> Result<Vec<Table>, Failure> {
    parse_corpus(&read(path)?, schemas).with_context(|| format!("parsing {}", path.display())).map_err(Failure::Domain)
}

fn read_pairs(
    path: &Path,
    tables: &[Table],
    library: Option<&tabnli::hypothesis::TemplateLibrary>,
) -> Result<Vec<GeneratedPair>, Failure> {
    let text = read(path)?;
    read_pairs_tsv(&text, Some(tables), library)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Domain)
}

pub fn split(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), Failure> {
    let strategy =
        cfg.split.strategy.ok_or_else(|| Failure::Io(anyhow!("a split strategy is required (--strategy)")))?;
    let loaded = load(cfg.inputs().map_err(Failure::Io)?)?;
    let b = &loaded.bundle;
    let corpus = read_corpus(&artifacts.corpus(cfg), Some(&b.schemas))?;
    let pairs_path = artifacts.pairs(cfg);
    let pairs = read_pairs(&pairs_path, &corpus, Some(&b.library))?;
    let matrix = match &cfg.split.matrix {
        Some(p) => Some(
            HardnessMatrix::from_csv(&read(p)?)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(Failure::Domain)?,
        ),
        None => None,
    };
    let mut spec = SplitSpec::new(strategy, cfg.seed);
    spec.hardness_threshold = cfg.split.threshold;
    if let Some(r) = cfg.split.ratios {
        spec.sizing = Sizing::Ratios(r);
    }
    let gen = generation(cfg);
    let inputs = SplitInputs {
        tables: Some(&corpus),
        schemas: Some(&b.schemas),
        library: Some(&b.library),
        matrix: matrix.as_ref(),
        generation: Some(&gen),
    };
    let a = build_split(&pairs, &inputs, &spec).map_err(domain)?;
    let dir = cfg.out.join("splits").join(strategy.as_str());
    for s in SplitName::ALL {
        write(&dir.join(format!("{}.tsv", s.as_str())), &write_pairs_tsv(a.get(s)))?;
    }
    let mut manifest = serde_json::to_value(a.manifest(&spec)).expect("split manifest serializes");
    manifest["pairs_sha256"] = serde_json::Value::String(sha256_hex(read(&pairs_path)?.as_bytes()));
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write(&dir.join("manifest.json"), &text)?;
    println!(
        "{}: train {} / dev {} / test {} ({} dropped) in {}",
        strategy.as_str(),
        a.get(SplitName::Train).len(),
        a.get(SplitName::Dev).len(),
        a.get(SplitName::Test).len(),
        a.dropped,
        dir.display()
    );
    Ok(())
}

pub fn stats(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), Failure> {
    let schemas = match cfg.inputs.as_ref() {
        Some(i) => Some(tabnli::SchemaSet::from_json(&read(&i.schemas)?).map_err(domain)?),
        None => None,
    };
    let corpus = read_corpus(&artifacts.corpus(cfg), schemas.as_ref())?;
    let pairs = read_pairs(&artifacts.pairs(cfg), &corpus, None)?;
    let stats = corpus_stats(&corpus, &pairs, AverageBase::AllTables).map_err(domain)?;
    write(&cfg.out.join("stats.json"), &stats_json(&stats))?;
    println!("tables                 {:>8}", stats.table_count);
    println!("  originals            {:>8}", stats.original_count);
    println!("  counterfactuals      {:>8}", stats.counterfactual_count);
    println!("unique keys            {:>8}", stats.unique_key_count);
    println!("avg keys per table     {:>8.2}", stats.avg_keys_per_table.value());
    println!("pairs                  {:>8}", pairs.len());
    for (label, n) in &stats.label_counts {
        println!("  {label}                    {n:>8}");
    }
    println!("avg pairs per table    {:>8.2}", stats.avg_pairs_per_table.value());
    for (cat, n) in &stats.pairs_per_category {
        println!("  {cat:<20} {n:>8}");
    }
    Ok(())
}

pub fn audit(cfg: &RunConfig, artifacts: &Artifacts) -> Result<(), Failure> {
    let corpus = read_corpus(&artifacts.corpus(cfg), None)?;
    let pairs = read_pairs(&artifacts.pairs(cfg), &corpus, None)?;
    let k = cfg.audit_k.min(pairs.len());
    if k < cfg.audit_k {
        log::warn!("only {} pairs available; sampling all of them", pairs.len());
    }
    let mut rng = rng_for(cfg.seed, "audit", "audit", 0);
    let sample = sample_audit(&pairs, k, &mut rng).map_err(domain)?;
    let path = cfg.out.join("audit.tsv");
    write(&path, &write_audit_tsv(&pairs, &sample))?;
    println!("{k} pairs sampled into {}", path.display());
    Ok(())
}
