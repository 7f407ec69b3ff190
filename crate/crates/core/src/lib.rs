//! Generation of tabular natural-language-inference corpora from entity
//! tables, hypothesis templates and consistency constraints.

pub mod bundle;
pub mod constraint;
pub mod counterfactual;
pub mod expr;
pub mod hypothesis;
pub mod io;
pub mod schema;
pub mod seed;
pub mod split;
pub mod stats;
pub mod table;
pub mod template;
pub mod value;

pub use bundle::{Bundle, BundleText};
pub use constraint::{check_all, Constraint, ConstraintSet, Verdict};
pub use counterfactual::{expand_corpus, generate_counterfactuals, MutationConfig};
pub use hypothesis::{generate_pairs, GeneratedPair, GenerationConfig, Label, Strategy};
pub use schema::{CategorySchema, EntityType, KeySchema, SchemaSet};
pub use split::{build_split, SplitStrategy};
pub use table::{ingest_table, parse_corpus, Row, Table, TableError};
pub use template::{parse_template, Template, TemplateError};
pub use value::{infer_value, PartialDate, TypedValue, ValueKind};
