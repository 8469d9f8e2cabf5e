//! Examination catalogs, patient records and media storage for the
//! infant neurological examination workstation.

pub mod catalog;
pub mod media;
pub mod records;

pub use catalog::{
    load_catalog, CatalogError, Catalogs, Category, Eligibility, ExamCatalog, ExamItem,
    TemplateOption,
};
pub use media::{CameraTag, MediaError, MediaKind, MediaRef, MediaStore, DEFAULT_MAX_DIMENSION};
pub use records::{
    ExamSession, ExportDocument, HistoryEntry, ItemResult, Patient, PatientInfo, RecordedItem,
    Records, RecordsError, SessionStatus, SessionSummary,
};
