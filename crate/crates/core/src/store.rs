//! Append-only JSON Lines store for references and submissions, plus the
//! per-reference misconception statistics.
//!
//! Each line is one JSON object whose last member is `"crc32"`, the CRC-32
//! of the same object serialized without that member. A damaged final line
//! (a torn write) is skipped with a warning; damage anywhere else is an error.
//! Records identify submissions only, never students.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, TimeZone, Utc};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{Category, DiffReport};
use crate::feedback::FeedbackBundle;
use crate::misconception::{MisconceptionCode, MisconceptionTag};
use crate::model::DiagramKind;
use crate::plantuml::{parse_plantuml, ParseError};

pub const REFERENCES_FILE: &str = "references.jsonl";
pub const SUBMISSIONS_FILE: &str = "submissions.jsonl";
const CRC_MEMBER: &str = ",\"crc32\":";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub id: String,
    pub name: String,
    pub kind: DiagramKind,
    pub plantuml: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub id: String,
    pub reference_id: String,
    pub student_plantuml: String,
    pub diff_report: DiffReport,
    pub tags: Vec<MisconceptionTag>,
    pub feedback: FeedbackBundle,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisconceptionStats {
    pub reference_id: String,
    pub total_submissions: u64,
    pub counts: BTreeMap<MisconceptionCode, u64>,
    pub per_category: BTreeMap<Category, u64>,
}

impl MisconceptionStats {
    pub fn empty(reference_id: &str) -> Self {
        MisconceptionStats {
            reference_id: reference_id.to_string(),
            total_submissions: 0,
            counts: MisconceptionCode::ALL.iter().map(|c| (*c, 0)).collect(),
            per_category: Category::ALL.iter().map(|c| (*c, 0)).collect(),
        }
    }

    pub fn add(&mut self, submission: &SubmissionRecord) {
        self.total_submissions += 1;
        for tag in &submission.tags {
            *self.counts.entry(tag.code).or_default() += tag.occurrences();
        }
        for d in &submission.diff_report.differences {
            *self.per_category.entry(d.category).or_default() += 1;
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no reference with id `{0}`")]
    UnknownReference(String),
    #[error("no submission with id `{0}`")]
    UnknownSubmission(String),
    #[error("{file} line {line}: {message}")]
    CorruptRecord { file: String, line: usize, message: String },
    #[error("reference plantuml does not parse: {0}")]
    InvalidReference(ParseError),
    #[error("store i/o on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::UnknownReference(_) => "unknown_reference",
            StoreError::UnknownSubmission(_) => "unknown_submission",
            StoreError::CorruptRecord { .. } => "corrupt_record",
            StoreError::InvalidReference(e) => e.code(),
            StoreError::Io { .. } => "store_io",
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.display().to_string(), source }
}

/// Serializes `value` as one checksummed line, newline included.
pub fn encode_line<T: Serialize>(value: &T) -> String {
    let body = serde_json::to_string(value).expect("records serialize");
    assert!(body.ends_with('}') && body.len() > 2, "records are non-empty JSON objects");
    let crc = crc32fast::hash(body.as_bytes());
    format!("{}{CRC_MEMBER}{crc}}}\n", &body[..body.len() - 1])
}

/// Verifies and decodes one line written by [`encode_line`].
pub fn decode_line<T: DeserializeOwned>(line: &str) -> Result<T, String> {
    let at = line.rfind(CRC_MEMBER).ok_or("checksum member missing")?;
    let digits = line[at + CRC_MEMBER.len()..].strip_suffix('}').ok_or("line is truncated")?;
    let stored: u32 = digits.parse().map_err(|_| "checksum is not a number")?;
    let body = format!("{}}}", &line[..at]);
    let actual = crc32fast::hash(body.as_bytes());
    if actual != stored {
        return Err(format!("checksum mismatch (stored {stored}, computed {actual})"));
    }
    serde_json::from_str(&body).map_err(|e| e.to_string())
}

/// Reads every record of a JSONL file. A bad final line is reported in
/// `warnings` and skipped.
fn read_log<T: DeserializeOwned>(path: &Path, warnings: &mut Vec<String>) -> Result<Vec<T>, StoreError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_error(path)(e)),
    };
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty()).collect();
    let mut out = Vec::with_capacity(lines.len());
    for (k, (number, line)) in lines.iter().enumerate() {
        match decode_line(line) {
            Ok(record) => out.push(record),
            Err(message) if k + 1 == lines.len() => {
                let warning = format!("{} line {number}: skipped damaged final record: {message}", path.display());
                log::warn!("{warning}");
                warnings.push(warning);
            }
            Err(message) => {
                return Err(StoreError::CorruptRecord { file: path.display().to_string(), line: *number, message })
            }
        }
    }
    Ok(out)
}

const CROCKFORD: &[u8; 32] = b"0123456789ABCDEFGHJKMNPQRSTVWXYZ";

/// 26-character Crockford base32 text of a 128-bit id.
pub fn encode_id(value: u128) -> String {
    (0..26).rev().map(|i| CROCKFORD[((value >> (i * 5)) & 31) as usize] as char).collect()
}

pub fn decode_id(text: &str) -> Option<u128> {
    if text.len() != 26 {
        return None;
    }
    text.bytes().try_fold(0u128, |acc, b| {
        let digit = CROCKFORD.iter().position(|c| *c == b.to_ascii_uppercase())? as u128;
        acc.checked_mul(32).map(|v| v | digit)
    })
}

pub type Clock = Box<dyn Fn() -> DateTime<Utc> + Send + Sync>;

/// Sortable ids: 48 bits of milliseconds then 80 random bits. Ids issued
/// within one millisecond (or while the clock runs backwards) increment the
/// previous id, so issue order equals sort order.
pub struct IdGenerator {
    clock: Clock,
    rng: ChaCha8Rng,
    last: u128,
}

impl IdGenerator {
    pub fn new(clock: Clock, rng: ChaCha8Rng) -> Self {
        IdGenerator { clock, rng, last: 0 }
    }

    pub fn system() -> Self {
        IdGenerator::new(Box::new(Utc::now), ChaCha8Rng::from_entropy())
    }

    /// Fixed start time, one millisecond per call and a seeded RNG.
    pub fn deterministic(seed: u64) -> Self {
        let start = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let tick = std::sync::atomic::AtomicI64::new(0);
        let clock = move || start + chrono::Duration::milliseconds(tick.fetch_add(1, std::sync::atomic::Ordering::SeqCst));
        IdGenerator::new(Box::new(clock), ChaCha8Rng::seed_from_u64(seed))
    }

    fn observe(&mut self, id: &str) {
        if let Some(v) = decode_id(id) {
            self.last = self.last.max(v);
        }
    }

    pub fn next(&mut self) -> (String, DateTime<Utc>) {
        let now = (self.clock)();
        let millis = now.timestamp_millis().clamp(0, (1i64 << 48) - 1) as u128;
        let mut random = [0u8; 16];
        self.rng.fill_bytes(&mut random[6..]);
        let candidate = (millis << 80) | (u128::from_be_bytes(random) & ((1u128 << 80) - 1));
        let id = if (candidate >> 80) > (self.last >> 80) { candidate } else { self.last + 1 };
        self.last = id;
        (encode_id(id), now)
    }
}

struct Inner {
    references: Vec<ReferenceRecord>,
    submissions: Vec<SubmissionRecord>,
}

/// The store. Writes are serialized by one lock and appended durably before
/// the in-memory view changes; reads share the view.
pub struct Store {
    dir: PathBuf,
    inner: RwLock<Inner>,
    ids: Mutex<IdGenerator>,
    warnings: Vec<String>,
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        Store::open_with(dir, IdGenerator::system())
    }

    pub fn open_with(dir: impl Into<PathBuf>, mut ids: IdGenerator) -> Result<Self, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(io_error(&dir))?;
        let mut warnings = Vec::new();
        let references: Vec<ReferenceRecord> = read_log(&dir.join(REFERENCES_FILE), &mut warnings)?;
        let submissions: Vec<SubmissionRecord> = read_log(&dir.join(SUBMISSIONS_FILE), &mut warnings)?;
        for id in references.iter().map(|r| &r.id).chain(submissions.iter().map(|s| &s.id)) {
            ids.observe(id);
        }
        Ok(Store { dir, inner: RwLock::new(Inner { references, submissions }), ids: Mutex::new(ids), warnings })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Damaged trailing records skipped while opening.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn append(&self, file: &str, line: &str) -> Result<(), StoreError> {
        let path = self.dir.join(file);
        let mut f: File = OpenOptions::new().create(true).append(true).open(&path).map_err(io_error(&path))?;
        f.write_all(line.as_bytes()).map_err(io_error(&path))?;
        f.sync_data().map_err(io_error(&path))
    }

    /// Stores a reference after checking that its PlantUML parses as `kind`.
    pub fn put_reference(&self, name: &str, kind: DiagramKind, plantuml: &str) -> Result<ReferenceRecord, StoreError> {
        parse_plantuml(plantuml, Some(kind)).map_err(StoreError::InvalidReference)?;
        let mut inner = self.inner.write().unwrap();
        let (id, created_at) = self.ids.lock().unwrap().next();
        let record = ReferenceRecord { id, name: name.to_string(), kind, plantuml: plantuml.to_string(), created_at };
        self.append(REFERENCES_FILE, &encode_line(&record))?;
        inner.references.push(record.clone());
        Ok(record)
    }

    pub fn put_submission(
        &self,
        reference_id: &str,
        student_plantuml: &str,
        diff_report: DiffReport,
        tags: Vec<MisconceptionTag>,
        feedback: FeedbackBundle,
    ) -> Result<SubmissionRecord, StoreError> {
        let mut inner = self.inner.write().unwrap();
        if !inner.references.iter().any(|r| r.id == reference_id) {
            return Err(StoreError::UnknownReference(reference_id.to_string()));
        }
        let (id, created_at) = self.ids.lock().unwrap().next();
        let record = SubmissionRecord {
            id,
            reference_id: reference_id.to_string(),
            student_plantuml: student_plantuml.to_string(),
            diff_report,
            tags,
            feedback,
            created_at,
        };
        self.append(SUBMISSIONS_FILE, &encode_line(&record))?;
        inner.submissions.push(record.clone());
        Ok(record)
    }

    pub fn get_reference(&self, id: &str) -> Result<ReferenceRecord, StoreError> {
        let inner = self.inner.read().unwrap();
        inner.references.iter().find(|r| r.id == id).cloned().ok_or_else(|| StoreError::UnknownReference(id.to_string()))
    }

    pub fn get_submission(&self, id: &str) -> Result<SubmissionRecord, StoreError> {
        let inner = self.inner.read().unwrap();
        inner.submissions.iter().find(|s| s.id == id).cloned().ok_or_else(|| StoreError::UnknownSubmission(id.to_string()))
    }

    pub fn list_references(&self) -> Vec<ReferenceRecord> {
        let mut out = self.inner.read().unwrap().references.clone();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    /// Submissions for `reference_id` in id order.
    pub fn list_submissions(&self, reference_id: &str) -> Result<Vec<SubmissionRecord>, StoreError> {
        let inner = self.inner.read().unwrap();
        if !inner.references.iter().any(|r| r.id == reference_id) {
            return Err(StoreError::UnknownReference(reference_id.to_string()));
        }
        let mut out: Vec<_> = inner.submissions.iter().filter(|s| s.reference_id == reference_id).cloned().collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    pub fn aggregate(&self, reference_id: &str) -> Result<MisconceptionStats, StoreError> {
        let mut stats = MisconceptionStats::empty(reference_id);
        for s in self.list_submissions(reference_id)? {
            stats.add(&s);
        }
        Ok(stats)
    }

    /// Deletes every stored record. Returns (references, submissions) removed.
    pub fn purge(&self) -> Result<(usize, usize), StoreError> {
        let mut inner = self.inner.write().unwrap();
        for file in [REFERENCES_FILE, SUBMISSIONS_FILE] {
            let path = self.dir.join(file);
            match std::fs::remove_file(&path) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(io_error(&path)(e)),
                _ => {}
            }
        }
        let counts = (inner.references.len(), inner.submissions.len());
        inner.references.clear();
        inner.submissions.clear();
        Ok(counts)
    }
}
