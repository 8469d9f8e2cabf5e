//! Patients, examination sessions and the follow-up timeline.
//!
//! State is held in memory and mirrored to an append-only log under the data
//! directory. Every accepted write is on disk before the call returns; a
//! rejected write leaves the log untouched.

mod log;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use ulid::Generator;

use crate::catalog::{self, CatalogError, Catalogs, Category, Eligibility, InfantAge};
use crate::media::{MediaError, MediaRef, MediaStore};
use log::Log;

pub const LOG_FILE: &str = "records.log";

/// Registration fields as entered at the desk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientInfo {
    pub name: String,
    pub date_of_birth: NaiveDate,
    pub mother_name: String,
    pub father_name: String,
    pub gestational_week_at_birth: u32,
    /// Weeks, as recorded at registration.
    pub corrected_age_at_registration: i32,
    /// Grams.
    pub birth_weight: u32,
    #[serde(default)]
    pub discharge_diagnosis: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Patient {
    pub id: String,
    pub name: String,
    pub date_of_birth: NaiveDate,
    pub mother_name: String,
    pub father_name: String,
    pub gestational_week_at_birth: u32,
    pub corrected_age_at_registration: i32,
    pub birth_weight: u32,
    pub discharge_diagnosis: String,
}

impl Patient {
    fn new(id: String, info: PatientInfo) -> Self {
        Self {
            id,
            name: info.name,
            date_of_birth: info.date_of_birth,
            mother_name: info.mother_name,
            father_name: info.father_name,
            gestational_week_at_birth: info.gestational_week_at_birth,
            corrected_age_at_registration: info.corrected_age_at_registration,
            birth_weight: info.birth_weight,
            discharge_diagnosis: info.discharge_diagnosis,
        }
    }

    pub fn info(&self) -> PatientInfo {
        PatientInfo {
            name: self.name.clone(),
            date_of_birth: self.date_of_birth,
            mother_name: self.mother_name.clone(),
            father_name: self.father_name.clone(),
            gestational_week_at_birth: self.gestational_week_at_birth,
            corrected_age_at_registration: self.corrected_age_at_registration,
            birth_weight: self.birth_weight,
            discharge_diagnosis: self.discharge_diagnosis.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemResult {
    pub item_id: String,
    pub selected_template_id: String,
    /// Catalog score of the template when it was recorded.
    pub score: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default)]
    pub media: Vec<MediaRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemScore {
    pub item_id: String,
    pub score: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSummary {
    pub session_id: String,
    pub scores: Vec<ItemScore>,
    pub total: i64,
    /// Fewer items recorded than the catalog holds.
    pub incomplete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExamSession {
    pub id: String,
    pub patient_id: String,
    pub category: Category,
    pub timestamp: DateTime<Utc>,
    /// Chronological age in whole weeks.
    pub age_at_exam: i64,
    /// Corrected age in whole weeks, recomputed for this session.
    pub corrected_age_at_exam: i64,
    pub month_mark: Option<u32>,
    pub items: Vec<ItemResult>,
    pub status: SessionStatus,
    pub version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SessionSummary>,
}

impl ExamSession {
    pub fn total(&self) -> i64 {
        self.items.iter().map(|i| i.score).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub session_id: String,
    pub category: Category,
    pub timestamp: DateTime<Utc>,
    pub status: SessionStatus,
    pub month_mark: Option<u32>,
    pub age_at_exam: i64,
    pub corrected_age_at_exam: i64,
    pub items: Vec<ItemResult>,
    pub total: i64,
    pub incomplete: bool,
}

/// An accepted item result and the session version it produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedItem {
    pub result: ItemResult,
    pub version: u64,
}

/// Full-store document for export and import.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportDocument {
    pub patients: Vec<Patient>,
    pub sessions: Vec<ExamSession>,
    pub catalog_version: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordsError {
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("not eligible for a {requested} examination: {reason}")]
    NotEligible {
        requested: Category,
        eligible: Eligibility,
        reason: String,
    },
    #[error("patient already has open session {session_id}")]
    SessionOpen { session_id: String },
    #[error("session {session_id} is closed")]
    SessionClosed { session_id: String },
    #[error("template {template_id:?} does not belong to item {item_id:?}")]
    InvalidTemplate {
        item_id: String,
        template_id: String,
    },
    #[error("session is at version {actual}, request expected {expected}")]
    StaleVersion { expected: u64, actual: u64 },
    #[error("{0}")]
    Conflict(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

fn invalid(field: &str, message: impl Into<String>) -> RecordsError {
    RecordsError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn storage(e: impl std::fmt::Display) -> RecordsError {
    RecordsError::Storage(e.to_string())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum Entry {
    Patient { patient: Patient },
    Session { session: ExamSession },
}

struct State {
    log: Log,
    ids: Generator,
    patients: BTreeMap<String, Patient>,
    sessions: BTreeMap<String, ExamSession>,
}

impl State {
    fn apply(&mut self, entry: Entry) {
        match entry {
            Entry::Patient { patient } => {
                self.patients.insert(patient.id.clone(), patient);
            }
            Entry::Session { session } => {
                self.sessions.insert(session.id.clone(), session);
            }
        }
    }

    /// Persists, then applies.
    fn commit(&mut self, entries: Vec<Entry>) -> Result<(), RecordsError> {
        self.log.append(&entries).map_err(storage)?;
        for e in entries {
            self.apply(e);
        }
        Ok(())
    }

    fn fresh_id(&mut self) -> Result<String, RecordsError> {
        self.ids.generate().map(|u| u.to_string()).map_err(storage)
    }

    fn patient_sessions<'a>(
        &'a self,
        patient_id: &'a str,
    ) -> impl Iterator<Item = &'a ExamSession> + 'a {
        self.sessions
            .values()
            .filter(move |s| s.patient_id == patient_id)
    }

    fn session(&self, id: &str) -> Result<&ExamSession, RecordsError> {
        self.sessions.get(id).ok_or_else(|| RecordsError::NotFound {
            kind: "session",
            id: id.to_string(),
        })
    }

    fn patient(&self, id: &str) -> Result<&Patient, RecordsError> {
        self.patients.get(id).ok_or_else(|| RecordsError::NotFound {
            kind: "patient",
            id: id.to_string(),
        })
    }
}

/// The records service. Cheap to share behind an `Arc`; reads run in
/// parallel and writes are serialized.
pub struct Records {
    catalogs: Arc<Catalogs>,
    media: Arc<MediaStore>,
    state: RwLock<State>,
}

impl std::fmt::Debug for Records {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Records")
            .field("log", &self.log_path())
            .finish_non_exhaustive()
    }
}

fn validate_info(info: &PatientInfo, today: NaiveDate) -> Result<(), RecordsError> {
    for (field, value) in [
        ("name", &info.name),
        ("mother_name", &info.mother_name),
        ("father_name", &info.father_name),
    ] {
        if value.trim().is_empty() {
            return Err(invalid(field, "must not be empty"));
        }
    }
    if !(20..=44).contains(&info.gestational_week_at_birth) {
        return Err(invalid(
            "gestational_week_at_birth",
            "must be between 20 and 44 weeks",
        ));
    }
    if !(300..=6000).contains(&info.birth_weight) {
        return Err(invalid(
            "birth_weight",
            "must be between 300 and 6000 grams",
        ));
    }
    if !(-24..=130).contains(&info.corrected_age_at_registration) {
        return Err(invalid(
            "corrected_age_at_registration",
            "must be between -24 and 130 weeks",
        ));
    }
    if info.date_of_birth > today {
        return Err(invalid("date_of_birth", "must not be in the future"));
    }
    Ok(())
}

fn summarize(session: &ExamSession, catalog_items: usize) -> SessionSummary {
    SessionSummary {
        session_id: session.id.clone(),
        scores: session
            .items
            .iter()
            .map(|i| ItemScore {
                item_id: i.item_id.clone(),
                score: i.score,
            })
            .collect(),
        total: session.total(),
        incomplete: session.items.len() < catalog_items,
    }
}

fn check_version(session: &ExamSession, expected: Option<u64>) -> Result<(), RecordsError> {
    match expected {
        Some(expected) if expected != session.version => Err(RecordsError::StaleVersion {
            expected,
            actual: session.version,
        }),
        _ => Ok(()),
    }
}

fn ensure_open(session: &ExamSession) -> Result<(), RecordsError> {
    if session.status == SessionStatus::Closed {
        return Err(RecordsError::SessionClosed {
            session_id: session.id.clone(),
        });
    }
    Ok(())
}

fn age_error(e: CatalogError) -> RecordsError {
    invalid("timestamp", e.to_string())
}

impl Records {
    /// Opens or creates the store in `dir`, replaying its log.
    pub fn open(
        dir: &Path,
        catalogs: Arc<Catalogs>,
        media: Arc<MediaStore>,
    ) -> Result<Self, RecordsError> {
        std::fs::create_dir_all(dir).map_err(storage)?;
        let (log, entries) = Log::open::<Entry>(&dir.join(LOG_FILE)).map_err(storage)?;
        let mut state = State {
            log,
            ids: Generator::new(),
            patients: BTreeMap::new(),
            sessions: BTreeMap::new(),
        };
        for e in entries {
            state.apply(e);
        }
        Ok(Self {
            catalogs,
            media,
            state: RwLock::new(state),
        })
    }

    pub fn catalogs(&self) -> &Catalogs {
        &self.catalogs
    }

    pub fn log_path(&self) -> std::path::PathBuf {
        self.read().log.path().to_path_buf()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn register_patient(&self, info: PatientInfo) -> Result<Patient, RecordsError> {
        validate_info(&info, Utc::now().date_naive())?;
        let mut state = self.write();
        let patient = Patient::new(state.fresh_id()?, info);
        state.commit(vec![Entry::Patient {
            patient: patient.clone(),
        }])?;
        Ok(patient)
    }

    /// Exact, case-sensitive id match.
    pub fn lookup_patient(&self, id: &str) -> Result<Patient, RecordsError> {
        self.read().patient(id).cloned()
    }

    pub fn get_session(&self, id: &str) -> Result<ExamSession, RecordsError> {
        self.read().session(id).cloned()
    }

    /// Eligibility of a registered patient at `on`, counting every neonatal
    /// session already started.
    pub fn eligibility(
        &self,
        patient_id: &str,
        on: DateTime<Utc>,
    ) -> Result<Eligibility, RecordsError> {
        let state = self.read();
        let patient = state.patient(patient_id)?;
        let prior = state
            .patient_sessions(patient_id)
            .any(|s| s.category == Category::Neonatal);
        catalog::eligible_category(
            patient.gestational_week_at_birth,
            patient.date_of_birth,
            on.date_naive(),
            prior,
        )
        .map_err(age_error)
    }

    pub fn start_session(
        &self,
        patient_id: &str,
        category: Category,
        timestamp: DateTime<Utc>,
    ) -> Result<ExamSession, RecordsError> {
        let mut state = self.write();
        let patient = state.patient(patient_id)?.clone();
        let on = timestamp.date_naive();
        let age: InfantAge =
            catalog::infant_age(patient.gestational_week_at_birth, patient.date_of_birth, on)
                .map_err(age_error)?;
        let prior_neonatal = state
            .patient_sessions(patient_id)
            .any(|s| s.category == Category::Neonatal);
        let eligible = catalog::eligible_category(
            patient.gestational_week_at_birth,
            patient.date_of_birth,
            on,
            prior_neonatal,
        )
        .map_err(age_error)?;
        if !eligible.allows(category) {
            let reason = match (category, prior_neonatal) {
                (Category::Neonatal, true) => {
                    "the neonatal examination is done only once".to_string()
                }
                _ => format!(
                    "gestational age {} weeks, corrected age {:.2} months",
                    age.gestational_weeks,
                    age.corrected_months()
                ),
            };
            return Err(RecordsError::NotEligible {
                requested: category,
                eligible,
                reason,
            });
        }
        if let Some(open) = state
            .patient_sessions(patient_id)
            .find(|s| s.status == SessionStatus::Open)
        {
            return Err(RecordsError::SessionOpen {
                session_id: open.id.clone(),
            });
        }
        let month_mark = match category {
            Category::Neonatal => None,
            Category::PostNeonatal => {
                let done: BTreeSet<u32> = state
                    .patient_sessions(patient_id)
                    .filter_map(|s| s.month_mark)
                    .collect();
                let mark = catalog::next_due(age.corrected_months(), &done);
                if mark.is_none() {
                    return Err(RecordsError::NotEligible {
                        requested: category,
                        eligible,
                        reason: "every remaining follow-up mark is complete".to_string(),
                    });
                }
                mark
            }
        };
        let session = ExamSession {
            id: state.fresh_id()?,
            patient_id: patient_id.to_string(),
            category,
            timestamp,
            age_at_exam: age.chronological_weeks(),
            corrected_age_at_exam: age.corrected_weeks(),
            month_mark,
            items: Vec::new(),
            status: SessionStatus::Open,
            version: 0,
            summary: None,
        };
        state.commit(vec![Entry::Session {
            session: session.clone(),
        }])?;
        Ok(session)
    }

    /// Records the chosen template for one item. Recording an item again
    /// replaces its earlier result. `media` holds content hashes that must
    /// already be in the media store.
    pub fn record_item(
        &self,
        session_id: &str,
        item_id: &str,
        template_id: &str,
        media: &[String],
        note: Option<String>,
        expected_version: Option<u64>,
    ) -> Result<RecordedItem, RecordsError> {
        let mut state = self.write();
        let mut session = state.session(session_id)?.clone();
        ensure_open(&session)?;
        check_version(&session, expected_version)?;
        let item = self
            .catalogs
            .get(session.category)
            .item(item_id)
            .ok_or_else(|| RecordsError::NotFound {
                kind: "item",
                id: item_id.to_string(),
            })?;
        let template = item
            .template(template_id)
            .ok_or_else(|| RecordsError::InvalidTemplate {
                item_id: item_id.to_string(),
                template_id: template_id.to_string(),
            })?;
        let media = media
            .iter()
            .map(|hash| match self.media.get(hash) {
                Ok(r) => Ok(r),
                Err(MediaError::NotFound(_)) => Err(RecordsError::NotFound {
                    kind: "media",
                    id: hash.clone(),
                }),
                Err(e) => Err(storage(e)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let result = ItemResult {
            item_id: item.id.clone(),
            selected_template_id: template.id.clone(),
            score: template.score,
            note: note.filter(|n| !n.trim().is_empty()),
            media,
        };
        match session.items.iter_mut().find(|r| r.item_id == item_id) {
            Some(slot) => *slot = result.clone(),
            None => session.items.push(result.clone()),
        }
        session.version += 1;
        let version = session.version;
        state.commit(vec![Entry::Session { session }])?;
        Ok(RecordedItem { result, version })
    }

    pub fn close_session(
        &self,
        session_id: &str,
        expected_version: Option<u64>,
    ) -> Result<SessionSummary, RecordsError> {
        let mut state = self.write();
        let mut session = state.session(session_id)?.clone();
        ensure_open(&session)?;
        check_version(&session, expected_version)?;
        let summary = summarize(&session, self.catalogs.get(session.category).items.len());
        session.status = SessionStatus::Closed;
        session.version += 1;
        session.summary = Some(summary.clone());
        state.commit(vec![Entry::Session { session }])?;
        Ok(summary)
    }

    /// Every session of the patient, oldest first.
    pub fn history(&self, patient_id: &str) -> Result<Vec<HistoryEntry>, RecordsError> {
        let state = self.read();
        state.patient(patient_id)?;
        let mut sessions: Vec<&ExamSession> = state.patient_sessions(patient_id).collect();
        sessions.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        Ok(sessions
            .into_iter()
            .map(|s| HistoryEntry {
                session_id: s.id.clone(),
                category: s.category,
                timestamp: s.timestamp,
                status: s.status,
                month_mark: s.month_mark,
                age_at_exam: s.age_at_exam,
                corrected_age_at_exam: s.corrected_age_at_exam,
                items: s.items.clone(),
                total: s.total(),
                incomplete: s.items.len() < self.catalogs.get(s.category).items.len(),
            })
            .collect())
    }

    pub fn is_empty(&self) -> bool {
        let state = self.read();
        state.patients.is_empty() && state.sessions.is_empty()
    }

    pub fn export_document(&self) -> ExportDocument {
        let state = self.read();
        ExportDocument {
            patients: state.patients.values().cloned().collect(),
            sessions: state.sessions.values().cloned().collect(),
            catalog_version: self.catalogs.version().to_string(),
        }
    }

    /// Pretty-printed export with records in id order.
    pub fn export(&self) -> String {
        let mut out =
            serde_json::to_string_pretty(&self.export_document()).expect("export serializes");
        out.push('\n');
        out
    }

    /// Loads an export into this store, which must be empty.
    pub fn import(&self, doc: &str) -> Result<(), RecordsError> {
        let doc: ExportDocument =
            serde_json::from_str(doc).map_err(|e| invalid("document", e.to_string()))?;
        let mut state = self.write();
        if !state.patients.is_empty() || !state.sessions.is_empty() {
            return Err(RecordsError::Conflict(
                "import needs an empty store".to_string(),
            ));
        }
        if doc.catalog_version != self.catalogs.version() {
            return Err(invalid(
                "catalog_version",
                format!(
                    "document was written against catalogs {}, this store uses {}",
                    doc.catalog_version,
                    self.catalogs.version()
                ),
            ));
        }
        self.check_document(&doc)?;
        let entries = doc
            .patients
            .into_iter()
            .map(|patient| Entry::Patient { patient })
            .chain(
                doc.sessions
                    .into_iter()
                    .map(|session| Entry::Session { session }),
            )
            .collect();
        state.commit(entries)
    }

    fn check_document(&self, doc: &ExportDocument) -> Result<(), RecordsError> {
        let mut patient_ids = HashSet::new();
        for p in &doc.patients {
            if p.id.is_empty() || !patient_ids.insert(p.id.as_str()) {
                return Err(invalid(
                    "patients",
                    format!("duplicate or empty id {:?}", p.id),
                ));
            }
            validate_info(&p.info(), NaiveDate::MAX)
                .map_err(|e| invalid("patients", format!("{}: {e}", p.id)))?;
        }
        let mut session_ids = HashSet::new();
        let mut neonatal = HashSet::new();
        let mut open = HashSet::new();
        for s in &doc.sessions {
            let bad = |msg: String| invalid("sessions", format!("{}: {msg}", s.id));
            if s.id.is_empty() || !session_ids.insert(s.id.as_str()) {
                return Err(bad("duplicate or empty id".into()));
            }
            if !patient_ids.contains(s.patient_id.as_str()) {
                return Err(bad(format!("unknown patient {}", s.patient_id)));
            }
            if s.category == Category::Neonatal && !neonatal.insert(s.patient_id.as_str()) {
                return Err(bad("second neonatal session for the patient".into()));
            }
            if s.status == SessionStatus::Open && !open.insert(s.patient_id.as_str()) {
                return Err(bad("second open session for the patient".into()));
            }
            let catalog = self.catalogs.get(s.category);
            let mut items = HashSet::new();
            for r in &s.items {
                let template = catalog
                    .item(&r.item_id)
                    .and_then(|i| i.template(&r.selected_template_id))
                    .ok_or_else(|| {
                        bad(format!(
                            "unknown item/template {}/{}",
                            r.item_id, r.selected_template_id
                        ))
                    })?;
                if template.score != r.score || !items.insert(r.item_id.as_str()) {
                    return Err(bad(format!("inconsistent result for item {}", r.item_id)));
                }
                if let Some(m) = r.media.iter().find(|m| !self.media.contains(&m.hash)) {
                    return Err(bad(format!("media {} is not in the store", m.hash)));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn info() -> PatientInfo {
        PatientInfo {
            name: "Baby Rahman".into(),
            date_of_birth: NaiveDate::from_ymd_opt(2026, 1, 1).unwrap(),
            mother_name: "Ayesha".into(),
            father_name: "Karim".into(),
            gestational_week_at_birth: 36,
            corrected_age_at_registration: -4,
            birth_weight: 2400,
            discharge_diagnosis: "Preterm, no complications".into(),
        }
    }

    fn store(dir: &Path) -> Records {
        let media = Arc::new(MediaStore::open(dir.join("media")).unwrap());
        Records::open(dir, Arc::new(Catalogs::bundled()), media).unwrap()
    }

    fn at(y: i32, m: u32, d: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, m, d, 10, 0, 0).unwrap()
    }

    #[test]
    fn registration_rules() {
        let dir = tempfile::tempdir().unwrap();
        let r = store(dir.path());
        let a = r.register_patient(info()).unwrap();
        let b = r.register_patient(info()).unwrap();
        assert_eq!(a.id.len(), 26);
        assert_ne!(a.id, b.id);
        assert_eq!(r.lookup_patient(&a.id).unwrap().info(), info());
        assert!(matches!(
            r.lookup_patient(&a.id.to_lowercase()),
            Err(RecordsError::NotFound { .. })
        ));
        assert!(matches!(
            r.lookup_patient(&format!(" {}", a.id)),
            Err(RecordsError::NotFound { .. })
        ));

        let mut bad = info();
        bad.name = "  ".into();
        assert!(
            matches!(r.register_patient(bad), Err(RecordsError::Validation { field, .. }) if field == "name")
        );
        let mut bad = info();
        bad.birth_weight = 100;
        assert!(
            matches!(r.register_patient(bad), Err(RecordsError::Validation { field, .. }) if field == "birth_weight")
        );
    }

    #[test]
    fn session_lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let r = store(dir.path());
        let p = r.register_patient(info()).unwrap();
        let s = r
            .start_session(&p.id, Category::Neonatal, at(2026, 1, 29))
            .unwrap();
        assert_eq!(
            (s.age_at_exam, s.corrected_age_at_exam, s.version),
            (4, 0, 0)
        );

        let first = r
            .record_item(&s.id, "posture", "posture.2", &[], None, Some(0))
            .unwrap();
        assert_eq!((first.result.score, first.version), (2, 1));
        r.record_item(&s.id, "arm_recoil", "arm_recoil.3", &[], None, None)
            .unwrap();
        r.record_item(
            &s.id,
            "head_lag",
            "head_lag.1",
            &[],
            Some("calm".into()),
            None,
        )
        .unwrap();
        // replacing keeps one result per item
        r.record_item(&s.id, "posture", "posture.2", &[], None, None)
            .unwrap();
        assert!(matches!(
            r.record_item(&s.id, "posture", "posture.1", &[], None, Some(1)),
            Err(RecordsError::StaleVersion {
                expected: 1,
                actual: 4
            })
        ));
        assert!(matches!(
            r.record_item(&s.id, "posture", "arm_recoil.1", &[], None, None),
            Err(RecordsError::InvalidTemplate { .. })
        ));
        assert!(matches!(
            r.record_item(&s.id, "walking", "walking.1", &[], None, None),
            Err(RecordsError::NotFound { kind: "item", .. })
        ));
        let summary = r.close_session(&s.id, None).unwrap();
        assert_eq!(summary.total, 6);
        assert!(summary.incomplete);
        assert!(matches!(
            r.close_session(&s.id, None),
            Err(RecordsError::SessionClosed { .. })
        ));
        assert!(matches!(
            r.record_item(&s.id, "posture", "posture.1", &[], None, None),
            Err(RecordsError::SessionClosed { .. })
        ));
        assert!(matches!(
            r.start_session(&p.id, Category::Neonatal, at(2026, 2, 2)),
            Err(RecordsError::NotEligible { .. })
        ));
    }

    #[test]
    fn empty_session_closes_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        let r = store(dir.path());
        let p = r.register_patient(info()).unwrap();
        let s = r
            .start_session(&p.id, Category::Neonatal, at(2026, 1, 29))
            .unwrap();
        let summary = r.close_session(&s.id, None).unwrap();
        assert_eq!((summary.total, summary.incomplete), (0, true));
    }

    #[test]
    fn follow_up_marks() {
        let dir = tempfile::tempdir().unwrap();
        let r = store(dir.path());
        let mut term = info();
        term.gestational_week_at_birth = 40;
        term.corrected_age_at_registration = 0;
        let p = r.register_patient(term).unwrap();
        // 7.5 months after a term birth
        let s = r
            .start_session(&p.id, Category::PostNeonatal, at(2026, 8, 16))
            .unwrap();
        assert_eq!(s.month_mark, Some(9));
        assert!(matches!(
            r.start_session(&p.id, Category::PostNeonatal, at(2026, 8, 17)),
            Err(RecordsError::SessionOpen { .. })
        ));
        r.close_session(&s.id, None).unwrap();
        let next = r
            .start_session(&p.id, Category::PostNeonatal, at(2026, 9, 20))
            .unwrap();
        assert_eq!(next.month_mark, Some(12));
        assert!(matches!(
            r.start_session(&p.id, Category::Neonatal, at(2026, 9, 20)),
            Err(RecordsError::NotEligible { .. })
        ));
    }

    #[test]
    fn media_must_resolve() {
        let dir = tempfile::tempdir().unwrap();
        let r = store(dir.path());
        let p = r.register_patient(info()).unwrap();
        let s = r
            .start_session(&p.id, Category::Neonatal, at(2026, 1, 29))
            .unwrap();
        let missing = "ab".repeat(32);
        assert!(matches!(
            r.record_item(&s.id, "posture", "posture.0", &[missing], None, None),
            Err(RecordsError::NotFound { kind: "media", .. })
        ));
        assert_eq!(r.get_session(&s.id).unwrap().version, 0);
    }
}
