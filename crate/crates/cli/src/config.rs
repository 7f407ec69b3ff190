use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use tabnli::counterfactual::{MutationOp, OpSelection};
use tabnli::hypothesis::BalanceMode;
use tabnli::split::SplitStrategy;
use tabnli::{MutationConfig, PartialDate};

/// The TOML file as written. Every field can also come from a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub tables: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub paraphrases: Option<PathBuf>,
    pub constraints: Option<PathBuf>,
    pub schemas: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub reference_date: Option<String>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub mutation: MutationSection,
    #[serde(default)]
    pub generation: GenerationSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub audit: AuditSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationSection {
    pub p: Option<f64>,
    pub n_counterfactuals: Option<usize>,
    pub max_attempts: Option<usize>,
    pub op_selection: Option<OpSelection>,
    pub allowed_ops: Option<Vec<MutationOp>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSection {
    pub balance: Option<f64>,
    pub balance_mode: Option<BalanceMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub strategy: Option<String>,
    pub threshold: Option<f64>,
    pub matrix: Option<PathBuf>,
    pub ratios: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub k: Option<usize>,
}

impl FileConfig {
    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.tables,
            &mut cfg.templates,
            &mut cfg.paraphrases,
            &mut cfg.constraints,
            &mut cfg.schemas,
            &mut cfg.out,
            &mut cfg.split.matrix,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Input artifact paths.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub tables: PathBuf,
    pub templates: PathBuf,
    pub paraphrases: PathBuf,
    pub constraints: PathBuf,
    pub schemas: PathBuf,
}

impl Inputs {
    pub fn named(&self) -> [(&'static str, &Path); 5] {
        [
            ("schemas", &self.schemas),
            ("tables", &self.tables),
            ("templates", &self.templates),
            ("paraphrases", &self.paraphrases),
            ("constraints", &self.constraints),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct SplitSettings {
    pub strategy: Option<SplitStrategy>,
    pub threshold: f64,
    pub matrix: Option<PathBuf>,
    pub ratios: Option<[f64; 3]>,
}

/// Fully resolved run settings: file values overridden by flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub inputs: Option<Inputs>,
    pub out: PathBuf,
    pub mutation: MutationConfig,
    pub balance: f64,
    pub balance_mode: BalanceMode,
    pub reference_date: Option<PartialDate>,
    pub jobs: Option<usize>,
    pub split: SplitSettings,
    pub audit_k: usize,
}

/// The settings that determine output bytes. Paths, output location and
/// parallelism are left out on purpose.
#[derive(Debug, Serialize)]
pub struct Fingerprint<'a> {
    pub seed: u64,
    pub mutation: &'a MutationConfig,
    pub balance: f64,
    pub balance_mode: BalanceMode,
    pub reference_date: Option<String>,
}

impl RunConfig {
    pub fn fingerprint(&self) -> Fingerprint<'_> {
        Fingerprint {
            seed: self.seed,
            mutation: &self.mutation,
            balance: self.balance,
            balance_mode: self.balance_mode,
            reference_date: self.reference_date.map(iso),
        }
    }

    pub fn inputs(&self) -> anyhow::Result<&Inputs> {
        self.inputs
            .as_ref()
            .context("input paths are incomplete: give --config or all of --tables --templates --paraphrases --constraints --schemas")
    }
}

fn iso(d: PartialDate) -> String {
    match (d.month(), d.day()) {
        (Some(m), Some(day)) => format!("{:04}-{m:02}-{day:02}", d.year()),
        (Some(m), None) => format!("{:04}-{m:02}", d.year()),
        _ => format!("{:04}", d.year()),
    }
}

/// Values given on the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tables: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub paraphrases: Option<PathBuf>,
    pub constraints: Option<PathBuf>,
    pub schemas: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub p: Option<f64>,
    pub n_counterfactuals: Option<usize>,
    pub balance: Option<f64>,
    pub balance_mode: Option<BalanceMode>,
    pub strategy: Option<String>,
    pub threshold: Option<f64>,
    pub matrix: Option<PathBuf>,
    pub ratios: Option<[f64; 3]>,
    pub k: Option<usize>,
}

pub fn resolve(file: FileConfig, o: Overrides) -> anyhow::Result<RunConfig> {
    let Some(seed) = o.seed.or(file.seed) else {
        bail!("a seed is required (--seed or `seed` in the config)");
    };
    let pick = |flag: Option<PathBuf>, file: Option<PathBuf>| flag.or(file);
    let inputs = match (
        pick(o.tables, file.tables),
        pick(o.templates, file.templates),
        pick(o.paraphrases, file.paraphrases),
        pick(o.constraints, file.constraints),
        pick(o.schemas, file.schemas),
    ) {
        (Some(tables), Some(templates), Some(paraphrases), Some(constraints), Some(schemas)) => {
            Some(Inputs { tables, templates, paraphrases, constraints, schemas })
        }
        _ => None,
    };
    let defaults = MutationConfig::default();
    let m = file.mutation;
    let mutation = MutationConfig {
        p: o.p.or(m.p).unwrap_or(defaults.p),
        n_counterfactuals: o.n_counterfactuals.or(m.n_counterfactuals).unwrap_or(defaults.n_counterfactuals),
        max_attempts: m.max_attempts.unwrap_or(defaults.max_attempts),
        seed,
        op_selection: m.op_selection.unwrap_or(defaults.op_selection),
        allowed_ops: m.allowed_ops.unwrap_or(defaults.allowed_ops),
    };
    let reference_date = match file.reference_date {
        Some(s) => {
            Some(PartialDate::parse_iso(&s).with_context(|| format!("reference_date '{s}' is not YYYY[-MM[-DD]]"))?)
        }
        None => None,
    };
    let strategy = match o.strategy.or(file.split.strategy) {
        Some(s) => Some(s.parse::<SplitStrategy>().map_err(anyhow::Error::msg)?),
        None => None,
    };
    Ok(RunConfig {
        seed,
        inputs,
        out: o.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        mutation,
        balance: o.balance.or(file.generation.balance).unwrap_or(1.0),
        balance_mode: o.balance_mode.or(file.generation.balance_mode).unwrap_or_default(),
        reference_date,
        jobs: o.jobs.or(file.jobs),
        split: SplitSettings {
            strategy,
            threshold: o.threshold.or(file.split.threshold).unwrap_or(80.0),
            matrix: o.matrix.or(file.split.matrix),
            ratios: o.ratios.or(file.split.ratios),
        },
        audit_k: o.k.or(file.audit.k).unwrap_or(100),
    })
}
