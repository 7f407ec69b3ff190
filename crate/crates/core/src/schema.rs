use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::value::ValueKind;

/// Named-entity class of a key's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntityType {
    Person,
    PersonType,
    Skill,
    Organization,
    Quantity,
    DateTime,
    Location,
    Event,
    Url,
    Product,
    Other,
}

impl EntityType {
    pub const ALL: [EntityType; 11] = [
        EntityType::Person,
        EntityType::PersonType,
        EntityType::Skill,
        EntityType::Organization,
        EntityType::Quantity,
        EntityType::DateTime,
        EntityType::Location,
        EntityType::Event,
        EntityType::Url,
        EntityType::Product,
        EntityType::Other,
    ];

    /// Space-separated lowercase name, the form used for split units.
    pub fn unit_name(self) -> &'static str {
        match self {
            EntityType::Person => "person",
            EntityType::PersonType => "person type",
            EntityType::Skill => "skill",
            EntityType::Organization => "organization",
            EntityType::Quantity => "quantity",
            EntityType::DateTime => "date time",
            EntityType::Location => "location",
            EntityType::Event => "event",
            EntityType::Url => "url",
            EntityType::Product => "product",
            EntityType::Other => "other",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.unit_name())
    }
}

impl FromStr for EntityType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = crate::split::normalize_unit(s);
        EntityType::ALL.into_iter().find(|e| e.unit_name() == norm).ok_or_else(|| format!("unknown entity type '{s}'"))
    }
}

fn default_min_hypotheses() -> usize {
    2
}

fn default_min_paraphrases() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeySchema {
    pub key: String,
    pub entity_type: EntityType,
    pub value_kind: ValueKind,
    #[serde(default = "default_min_hypotheses")]
    pub min_hypothesis_templates: usize,
    #[serde(default = "default_min_paraphrases")]
    pub min_premise_paraphrases: usize,
    /// Whether a row of this key may hold several values (children, genres).
    #[serde(default)]
    pub multi_valued: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySchema {
    pub category: String,
    pub keys: Vec<KeySchema>,
}

impl CategorySchema {
    pub fn key(&self, key: &str) -> Option<&KeySchema> {
        self.keys.iter().find(|k| k.key == key)
    }

    /// Position of `key` in schema order.
    pub fn position(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k.key == key)
    }

    /// Number of unique keys the category admits.
    pub fn unique_key_count(&self) -> usize {
        self.keys.len()
    }
}

/// All category schemas of a corpus, keyed by category name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaSet {
    categories: BTreeMap<String, CategorySchema>,
}

impl SchemaSet {
    pub fn new(schemas: impl IntoIterator<Item = CategorySchema>) -> Self {
        Self { categories: schemas.into_iter().map(|s| (s.category.clone(), s)).collect() }
    }

    pub fn get(&self, category: &str) -> Option<&CategorySchema> {
        self.categories.get(category)
    }

    pub fn key(&self, category: &str, key: &str) -> Option<&KeySchema> {
        self.get(category)?.key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CategorySchema> {
        self.categories.values()
    }

    pub fn insert(&mut self, schema: CategorySchema) {
        self.categories.insert(schema.category.clone(), schema);
    }

    /// Parses either a single category object or an array of them.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum OneOrMany {
            One(CategorySchema),
            Many(Vec<CategorySchema>),
        }
        Ok(match serde_json::from_str(text)? {
            OneOrMany::One(s) => Self::new([s]),
            OneOrMany::Many(v) => Self::new(v),
        })
    }
}
