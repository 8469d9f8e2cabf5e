//! Examination catalogs, eligibility and the follow-up schedule.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Month marks of the follow-up examinations.
pub const POST_NEONATAL_SCHEDULE: [u32; 8] = [3, 6, 9, 12, 15, 18, 21, 24];

/// Item names of the neonatal examination, compared case-insensitively.
pub const NEONATAL_ITEM_NAMES: [&str; 10] = [
    "posture",
    "arm recoil",
    "arm traction",
    "leg recoil",
    "leg traction",
    "popliteal angle",
    "head control (extensor tone)",
    "head control (flexor tone)",
    "head lag",
    "ventral suspension",
];

pub const MIN_TEMPLATES: usize = 4;
pub const MAX_TEMPLATES: usize = 5;

/// Days per month used for corrected-age months.
pub const DAYS_PER_MONTH: f64 = 365.25 / 12.0;

const BUNDLED_NEONATAL: &str = include_str!("../catalogs/neonatal.json");
const BUNDLED_POST_NEONATAL: &str = include_str!("../catalogs/post_neonatal.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Neonatal,
    PostNeonatal,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Neonatal => "neonatal",
            Category::PostNeonatal => "post_neonatal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "neonatal" => Some(Category::Neonatal),
            "post_neonatal" => Some(Category::PostNeonatal),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Neurological,
    MotorMilestones,
    Behaviour,
    Neonatal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateOption {
    pub id: String,
    pub label: String,
    pub score: i64,
    /// Path of the template picture, relative to the catalog file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExamItem {
    pub id: String,
    pub name: String,
    pub section: Section,
    pub templates: Vec<TemplateOption>,
}

impl ExamItem {
    pub fn template(&self, id: &str) -> Option<&TemplateOption> {
        self.templates.iter().find(|t| t.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExamCatalog {
    pub category: Category,
    pub items: Vec<ExamItem>,
    #[serde(default)]
    pub schedule_months: Vec<u32>,
}

impl ExamCatalog {
    pub fn item(&self, id: &str) -> Option<&ExamItem> {
        self.items.iter().find(|i| i.id == id)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error("catalog is not valid JSON: {0}")]
    Parse(String),
    #[error("catalog rejected: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Parses and validates a catalog document. Either every rule holds or the
/// full list of broken rules is returned.
pub fn load_catalog(doc: &str) -> Result<ExamCatalog, CatalogError> {
    let catalog: ExamCatalog =
        serde_json::from_str(doc).map_err(|e| CatalogError::Parse(e.to_string()))?;
    let problems = validate(&catalog);
    if problems.is_empty() {
        Ok(catalog)
    } else {
        Err(CatalogError::Validation(problems))
    }
}

fn validate(catalog: &ExamCatalog) -> Vec<String> {
    let mut problems = Vec::new();
    let mut item_ids = HashSet::new();
    for item in &catalog.items {
        if item.id.trim().is_empty() {
            problems.push("item with empty id".to_string());
        }
        if item.name.trim().is_empty() {
            problems.push(format!("item {:?} has an empty name", item.id));
        }
        if !item_ids.insert(item.id.as_str()) {
            problems.push(format!("duplicate item id {:?}", item.id));
        }
        let n = item.templates.len();
        if !(MIN_TEMPLATES..=MAX_TEMPLATES).contains(&n) {
            problems.push(format!(
                "item {:?} has {n} templates, expected {MIN_TEMPLATES} to {MAX_TEMPLATES}",
                item.id
            ));
        }
        let mut template_ids = HashSet::new();
        for t in &item.templates {
            if t.id.trim().is_empty() {
                problems.push(format!(
                    "item {:?} has a template with an empty id",
                    item.id
                ));
            }
            if !template_ids.insert(t.id.as_str()) {
                problems.push(format!("item {:?} repeats template id {:?}", item.id, t.id));
            }
        }
        let section_ok = match catalog.category {
            Category::Neonatal => item.section == Section::Neonatal,
            Category::PostNeonatal => item.section != Section::Neonatal,
        };
        if !section_ok {
            problems.push(format!(
                "item {:?} has section {:?}, not allowed in a {} catalog",
                item.id, item.section, catalog.category
            ));
        }
    }

    match catalog.category {
        Category::Neonatal => {
            if catalog.items.len() != NEONATAL_ITEM_NAMES.len() {
                problems.push(format!(
                    "neonatal catalog has {} items, expected {}",
                    catalog.items.len(),
                    NEONATAL_ITEM_NAMES.len()
                ));
            }
            let names: BTreeSet<String> = catalog
                .items
                .iter()
                .map(|i| i.name.trim().to_lowercase())
                .collect();
            for expected in NEONATAL_ITEM_NAMES {
                if !names.contains(expected) {
                    problems.push(format!("neonatal catalog lacks item {expected:?}"));
                }
            }
            for name in &names {
                if !NEONATAL_ITEM_NAMES.contains(&name.as_str()) {
                    problems.push(format!("unexpected neonatal item {name:?}"));
                }
            }
            if !catalog.schedule_months.is_empty() {
                problems.push("neonatal catalog must not carry a schedule".to_string());
            }
        }
        Category::PostNeonatal => {
            if catalog.items.is_empty() {
                problems.push("post-neonatal catalog has no items".to_string());
            }
            if catalog.schedule_months != POST_NEONATAL_SCHEDULE {
                problems.push(format!(
                    "schedule_months is {:?}, expected {:?}",
                    catalog.schedule_months, POST_NEONATAL_SCHEDULE
                ));
            }
        }
    }
    problems
}

/// The neonatal and post-neonatal catalogs in force.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalogs {
    neonatal: ExamCatalog,
    post_neonatal: ExamCatalog,
    version: String,
}

impl Catalogs {
    pub fn new(neonatal: ExamCatalog, post_neonatal: ExamCatalog) -> Result<Self, CatalogError> {
        let mut problems = Vec::new();
        if neonatal.category != Category::Neonatal {
            problems.push("first catalog must be neonatal".to_string());
        }
        if post_neonatal.category != Category::PostNeonatal {
            problems.push("second catalog must be post_neonatal".to_string());
        }
        if !problems.is_empty() {
            return Err(CatalogError::Validation(problems));
        }
        let mut hasher = Sha256::new();
        for c in [&neonatal, &post_neonatal] {
            hasher.update(serde_json::to_vec(c).expect("catalog serializes"));
            hasher.update(b"\n");
        }
        let version = hex::encode(hasher.finalize())[..16].to_string();
        Ok(Self {
            neonatal,
            post_neonatal,
            version,
        })
    }

    pub fn bundled() -> Self {
        Self::from_documents(BUNDLED_NEONATAL, BUNDLED_POST_NEONATAL)
            .expect("bundled catalogs are valid")
    }

    pub fn from_documents(neonatal: &str, post_neonatal: &str) -> Result<Self, CatalogError> {
        Self::new(load_catalog(neonatal)?, load_catalog(post_neonatal)?)
    }

    pub fn from_files(neonatal: &Path, post_neonatal: &Path) -> Result<Self, CatalogError> {
        Self::from_documents(&read(neonatal)?, &read(post_neonatal)?)
    }

    pub fn get(&self, category: Category) -> &ExamCatalog {
        match category {
            Category::Neonatal => &self.neonatal,
            Category::PostNeonatal => &self.post_neonatal,
        }
    }

    /// Digest of the canonical serialization of both catalogs.
    pub fn version(&self) -> &str {
        &self.version
    }
}

pub fn read(path: &Path) -> Result<String, CatalogError> {
    std::fs::read_to_string(path).map_err(|e| CatalogError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Which examination an infant may receive on a given day.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eligibility {
    Neonatal,
    PostNeonatal,
    None,
}

impl Eligibility {
    pub fn allows(self, category: Category) -> bool {
        matches!(
            (self, category),
            (Eligibility::Neonatal, Category::Neonatal)
                | (Eligibility::PostNeonatal, Category::PostNeonatal)
        )
    }
}

/// Age figures derived from the birth record on a given day.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfantAge {
    pub chronological_days: i64,
    /// Chronological age minus the weeks born short of term; negative before
    /// term-equivalent age.
    pub corrected_days: i64,
    pub gestational_weeks: i64,
}

impl InfantAge {
    pub fn corrected_months(&self) -> f64 {
        self.corrected_days as f64 / DAYS_PER_MONTH
    }

    pub fn corrected_weeks(&self) -> i64 {
        self.corrected_days.div_euclid(7)
    }

    pub fn chronological_weeks(&self) -> i64 {
        self.chronological_days / 7
    }
}

pub fn infant_age(
    gestational_week_at_birth: u32,
    birth: NaiveDate,
    on: NaiveDate,
) -> Result<InfantAge, CatalogError> {
    if !(20..=44).contains(&gestational_week_at_birth) {
        return Err(CatalogError::InvalidInput(format!(
            "gestational week at birth {gestational_week_at_birth} is outside 20..44"
        )));
    }
    if birth > on {
        return Err(CatalogError::InvalidInput(format!(
            "birth date {birth} is after {on}"
        )));
    }
    let days = (on - birth).num_days();
    let gw = i64::from(gestational_week_at_birth);
    Ok(InfantAge {
        chronological_days: days,
        corrected_days: days - (40 - gw) * 7,
        gestational_weeks: gw + days / 7,
    })
}

/// Neonatal needs a gestational age of at least 40 weeks, a corrected age
/// under two months and no earlier neonatal examination. Post-neonatal
/// covers corrected ages from 2 to 24 months inclusive.
pub fn eligible_category(
    gestational_week_at_birth: u32,
    birth: NaiveDate,
    on: NaiveDate,
    has_prior_neonatal: bool,
) -> Result<Eligibility, CatalogError> {
    let age = infant_age(gestational_week_at_birth, birth, on)?;
    let months = age.corrected_months();
    Ok(
        if age.gestational_weeks >= 40 && months < 2.0 && !has_prior_neonatal {
            Eligibility::Neonatal
        } else if (2.0..=24.0).contains(&months) {
            Eligibility::PostNeonatal
        } else {
            Eligibility::None
        },
    )
}

/// Smallest schedule mark at or after the whole-month corrected age that has
/// not been completed.
pub fn next_due(corrected_age_months: f64, completed: &BTreeSet<u32>) -> Option<u32> {
    let floor = corrected_age_months.max(0.0).floor();
    POST_NEONATAL_SCHEDULE
        .into_iter()
        .find(|&m| f64::from(m) >= floor && !completed.contains(&m))
}
