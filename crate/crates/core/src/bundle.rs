//! Loading a complete input bundle (schemas, tables, templates, paraphrases,
//! constraints) from its text artifacts.

use thiserror::Error;

use crate::constraint::{Constraint, ConstraintSet};
use crate::hypothesis::{coverage_report, CoverageReport, TemplateLibrary};
use crate::io::{parse_constraint_file, parse_template_file, RecordError};
use crate::schema::SchemaSet;
use crate::table::{parse_corpus, CorpusError, Table};
use crate::template::{Purpose, Template};

/// Raw text of each artifact.
#[derive(Debug, Clone, Copy)]
pub struct BundleText<'a> {
    pub schemas: &'a str,
    pub tables: &'a str,
    pub templates: &'a str,
    pub paraphrases: &'a str,
    pub constraints: &'a str,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("schemas: {0}")]
    Schemas(#[from] serde_json::Error),
    #[error("tables: {0}")]
    Tables(#[from] CorpusError),
}

/// A problem found while validating a bundle, tagged with its artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub artifact: &'static str,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.artifact, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub schemas: SchemaSet,
    pub tables: Vec<Table>,
    pub library: TemplateLibrary,
    pub constraints: ConstraintSet,
    /// Record-level problems: unparsable lines, schema mismatches, templates
    /// filed under the wrong purpose.
    pub findings: Vec<Finding>,
}

impl Bundle {
    /// Parses every artifact. Schemas and tables must parse; bad template and
    /// constraint records are reported in `findings` and left out.
    pub fn load(text: BundleText<'_>) -> Result<Self, BundleError> {
        let schemas = SchemaSet::from_json(text.schemas)?;
        let tables = parse_corpus(text.tables, Some(&schemas))?;
        let mut findings = Vec::new();
        let mut templates: Vec<Template> = Vec::new();
        for (artifact, src, purpose) in [
            ("templates", text.templates, Purpose::Hypothesis),
            ("paraphrases", text.paraphrases, Purpose::PremiseParaphrase),
        ] {
            let (ok, errs) = parse_template_file(src);
            findings.extend(errs.into_iter().map(|e| record(artifact, e)));
            for (line, t) in ok {
                if t.purpose != purpose {
                    findings.push(Finding {
                        artifact,
                        message: format!("line {line}: template '{}' has purpose {:?}", t.id, t.purpose),
                    });
                    continue;
                }
                let Some(schema) = schemas.get(&t.category) else {
                    findings
                        .push(Finding { artifact, message: format!("line {line}: unknown category '{}'", t.category) });
                    continue;
                };
                let problems = t.check_schema(schema);
                if problems.is_empty() {
                    templates.push(t);
                } else {
                    findings.extend(
                        problems
                            .into_iter()
                            .map(|p| Finding { artifact, message: format!("line {line}: template '{}': {p}", t.id) }),
                    );
                }
            }
        }
        let (ok, errs) = parse_constraint_file(text.constraints, Some(&schemas));
        findings.extend(errs.into_iter().map(|e| record("constraints", e)));
        let constraints: Vec<Constraint> = ok.into_iter().map(|(_, c)| c).collect();
        Ok(Self {
            schemas,
            tables,
            library: TemplateLibrary::new(templates),
            constraints: ConstraintSet::new(constraints),
            findings,
        })
    }

    pub fn coverage(&self) -> CoverageReport {
        coverage_report(self.library.all_hypotheses(), self.library.all_paraphrases(), &self.schemas)
    }

    /// Record findings plus coverage violations, in that order.
    pub fn validate(&self) -> Vec<Finding> {
        let mut out = self.findings.clone();
        out.extend(
            self.coverage().violations.into_iter().map(|v| Finding { artifact: "coverage", message: v.to_string() }),
        );
        out
    }
}

fn record(artifact: &'static str, e: RecordError) -> Finding {
    Finding { artifact, message: e.to_string() }
}
