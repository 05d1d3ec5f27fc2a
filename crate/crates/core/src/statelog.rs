//! Application-state logging: canonical attribute encoding, SHA-256
//! digests, change-only rows, CSV persistence and golden-log checking.
//!
//! Every iteration, each (entity, component, attribute) triple is encoded
//! to a canonical byte string and hashed. A row enters the log only when
//! its digest differs from the previous recording of the same attribute,
//! so a log stays small enough to commit next to the configuration that
//! produced it and serves directly as an acceptance test.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::attr::AttrValue;
use crate::config::{self, ConfigError, Registry};
use crate::ecs::{EcsError, EntityId, StepObserver, World};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("unsupported attribute value: {0}")]
    UnsupportedType(String),
    #[error("line {line}: {message}")]
    FormatError { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One logged state: who, when, what, and the digest of its value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateRow {
    pub entity: EntityId,
    pub iteration: u64,
    pub component: String,
    pub attribute: String,
    pub digest: [u8; 32],
}

impl StateRow {
    /// Canonical ordering key: iteration, entity, component, attribute.
    fn key(&self) -> (u64, u64, &str, &str) {
        (self.iteration, self.entity.0, &self.component, &self.attribute)
    }
}

/// Identity of an attribute stream, ignoring the iteration.
type AttrKey = (u64, String, String);

/// Ordered change-only rows of hashed component state.
#[derive(Debug, Default, Clone)]
pub struct StateLog {
    rows: Vec<StateRow>,
    last: HashMap<AttrKey, [u8; 32]>,
}

impl StateLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[StateRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Highest iteration present, or 0 for an empty log.
    pub fn max_iteration(&self) -> u64 {
        self.rows.iter().map(|r| r.iteration).max().unwrap_or(0)
    }

    /// Appends the row unless the same attribute already carries the same
    /// digest. Returns whether the row was kept.
    pub fn push_if_changed(&mut self, row: StateRow) -> bool {
        let key = (row.entity.0, row.component.clone(), row.attribute.clone());
        if self.last.get(&key) == Some(&row.digest) {
            return false;
        }
        self.last.insert(key, row.digest);
        self.rows.push(row);
        true
    }

    /// Serializes to the CSV log format with rows in canonical order,
    /// independent of insertion order.
    pub fn to_csv(&self) -> String {
        let mut sorted: Vec<&StateRow> = self.rows.iter().collect();
        sorted.sort_by(|a, b| a.key().cmp(&b.key()));
        let mut out = String::from("entity,iteration,component,attribute,hash\n");
        for row in sorted {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.entity.0,
                row.iteration,
                row.component,
                row.attribute,
                hex::encode(row.digest)
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<StateLog, LogError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "entity,iteration,component,attribute,hash")) => {}
            Some((i, other)) => {
                return Err(LogError::FormatError {
                    line: i + 1,
                    message: format!("unexpected header {other:?}"),
                })
            }
            None => {
                return Err(LogError::FormatError { line: 1, message: "empty log file".into() })
            }
        }
        let mut log = StateLog::new();
        let mut seen: HashMap<(u64, u64, String, String), ()> = HashMap::new();
        for (i, line) in lines {
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(LogError::FormatError {
                    line: lineno,
                    message: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let entity: u64 = fields[0].parse().map_err(|_| LogError::FormatError {
                line: lineno,
                message: format!("bad entity id {:?}", fields[0]),
            })?;
            let iteration: u64 = fields[1].parse().map_err(|_| LogError::FormatError {
                line: lineno,
                message: format!("bad iteration {:?}", fields[1]),
            })?;
            let digest = parse_digest(fields[4]).ok_or_else(|| LogError::FormatError {
                line: lineno,
                message: format!("digest must be 64 lowercase hex chars, got {:?}", fields[4]),
            })?;
            let key = (entity, iteration, fields[2].to_string(), fields[3].to_string());
            if seen.insert(key, ()).is_some() {
                return Err(LogError::FormatError {
                    line: lineno,
                    message: "duplicate (entity, iteration, component, attribute) row".into(),
                });
            }
            log.rows.push(StateRow {
                entity: EntityId(entity),
                iteration,
                component: fields[2].to_string(),
                attribute: fields[3].to_string(),
                digest,
            });
        }
        // Rebuild change-tracking state by replaying rows in canonical order.
        let mut sorted: Vec<StateRow> = log.rows.clone();
        sorted.sort_by(|a, b| a.key().cmp(&b.key()));
        for row in &sorted {
            log.last
                .insert((row.entity.0, row.component.clone(), row.attribute.clone()), row.digest);
        }
        Ok(log)
    }
}

fn parse_digest(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return None;
    }
    let bytes = hex::decode(s).ok()?;
    let mut digest = [0u8; 32];
    digest.copy_from_slice(&bytes);
    Some(digest)
}

/// Writes the log in canonical CSV form to any sink.
pub fn write_log<W: Write>(log: &StateLog, sink: &mut W) -> Result<(), LogError> {
    sink.write_all(log.to_csv().as_bytes())?;
    Ok(())
}

/// Reads a log previously produced by [`write_log`].
pub fn read_log<R: Read>(source: &mut R) -> Result<StateLog, LogError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    StateLog::from_csv(&text)
}

pub fn read_log_file(path: &Path) -> Result<StateLog, LogError> {
    StateLog::from_csv(&std::fs::read_to_string(path)?)
}

pub fn write_log_file(log: &StateLog, path: &Path) -> Result<(), LogError> {
    std::fs::write(path, log.to_csv())?;
    Ok(())
}

/// Canonical binary encoding of an attribute value.
///
/// Layout: rank as u64 little-endian, then each dim as u64 little-endian,
/// then the payload in row-major order. Scalars have rank 0. Floats are
/// IEEE-754 bit patterns (NaN canonicalized to the quiet pattern), ints
/// two's complement little-endian, booleans a single 0/1 byte, text a u64
/// byte length followed by UTF-8 bytes.
pub fn encode_attribute(value: &AttrValue) -> Result<Vec<u8>, LogError> {
    if !value.shape_is_consistent() {
        return Err(LogError::UnsupportedType(format!(
            "array data length does not match dims {:?}",
            value.dims()
        )));
    }
    let dims = value.dims();
    let mut out = Vec::with_capacity(16 + dims.len() * 8);
    out.extend_from_slice(&(dims.len() as u64).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    match value {
        AttrValue::Float(v) => out.extend_from_slice(&canonical_f64_bits(*v).to_le_bytes()),
        AttrValue::Int(v) => out.extend_from_slice(&v.to_le_bytes()),
        AttrValue::Bool(v) => out.push(u8::from(*v)),
        AttrValue::Text(v) => {
            out.extend_from_slice(&(v.len() as u64).to_le_bytes());
            out.extend_from_slice(v.as_bytes());
        }
        AttrValue::FloatArray { data, .. } => {
            for v in data {
                out.extend_from_slice(&canonical_f64_bits(*v).to_le_bytes());
            }
        }
        AttrValue::IntArray { data, .. } => {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        AttrValue::UintArray { data, .. } => {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// NaN payloads are collapsed to the quiet-NaN pattern so logically equal
/// states hash identically.
fn canonical_f64_bits(v: f64) -> u64 {
    if v.is_nan() {
        0x7FF8_0000_0000_0000
    } else {
        v.to_bits()
    }
}

/// SHA-256 of a byte sequence.
pub fn hash_attribute(bytes: &[u8]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().into()
}

/// Records one iteration of world state into the log.
///
/// Attributes are visited in canonical order (entity ascending, component
/// name ascending, attribute name ascending); a row is appended only when
/// its digest changed. Returns the number of appended rows. Intended to
/// run as a step observer, after all processors.
pub fn record_iteration(world: &World, log: &mut StateLog) -> Result<usize, LogError> {
    let iteration = world.iteration();
    let mut appended = 0;
    let types: Vec<String> = world.component_types().map(String::from).collect();
    for &entity in world.entities() {
        for type_name in &types {
            if !world.has_component(entity, type_name) {
                continue;
            }
            let component = world
                .component_dyn(entity, type_name)
                .map_err(|e| LogError::UnsupportedType(e.to_string()))?;
            let mut attr_names: Vec<&'static str> = component.attribute_names().to_vec();
            attr_names.sort_unstable();
            for attr in attr_names {
                let value = component.attribute(attr).ok_or_else(|| {
                    LogError::UnsupportedType(format!(
                        "{type_name} declares attribute {attr:?} but does not expose it"
                    ))
                })?;
                let digest = hash_attribute(&encode_attribute(&value)?);
                let row = StateRow {
                    entity,
                    iteration,
                    component: type_name.clone(),
                    attribute: attr.to_string(),
                    digest,
                };
                if log.push_if_changed(row) {
                    appended += 1;
                }
            }
        }
    }
    Ok(appended)
}

/// Step observer that feeds a [`StateLog`].
#[derive(Default)]
pub struct StateLogObserver {
    pub log: StateLog,
}

impl StateLogObserver {
    pub fn new() -> Self {
        Self::default()
    }
}

impl StepObserver for StateLogObserver {
    fn after_step(&mut self, world: &World) -> Result<(), EcsError> {
        record_iteration(world, &mut self.log).map_err(|e| EcsError::Attribute {
            component: "statelog".into(),
            attribute: "record".into(),
            message: e.to_string(),
        })?;
        Ok(())
    }
}

/// Differences between a golden log and a candidate log.
#[derive(Debug, Default, Clone)]
pub struct DiffReport {
    /// Rows present in the golden log but absent from the candidate.
    pub missing: Vec<StateRow>,
    /// Rows present in the candidate but absent from the golden log.
    pub extra: Vec<StateRow>,
    /// Same row key, different digest: (key row from golden, golden digest, candidate digest).
    pub changed: Vec<(StateRow, [u8; 32], [u8; 32])>,
}

impl DiffReport {
    pub fn passes(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.changed.is_empty()
    }

    /// Human-readable one-line-per-difference rendering, canonical order.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for row in &self.missing {
            out.push(format!(
                "missing  entity={} iter={} {}.{} golden={}",
                row.entity,
                row.iteration,
                row.component,
                row.attribute,
                hex::encode(row.digest)
            ));
        }
        for row in &self.extra {
            out.push(format!(
                "extra    entity={} iter={} {}.{} candidate={}",
                row.entity,
                row.iteration,
                row.component,
                row.attribute,
                hex::encode(row.digest)
            ));
        }
        for (row, golden, candidate) in &self.changed {
            out.push(format!(
                "changed  entity={} iter={} {}.{} golden={} candidate={}",
                row.entity,
                row.iteration,
                row.component,
                row.attribute,
                hex::encode(golden),
                hex::encode(candidate)
            ));
        }
        out
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Compares two logs row-by-row on canonical keys.
pub fn compare_logs(golden: &StateLog, candidate: &StateLog) -> DiffReport {
    use std::collections::BTreeMap;
    let index = |log: &StateLog| -> BTreeMap<(u64, u64, String, String), StateRow> {
        log.rows
            .iter()
            .map(|r| {
                (
                    (r.iteration, r.entity.0, r.component.clone(), r.attribute.clone()),
                    r.clone(),
                )
            })
            .collect()
    };
    let g = index(golden);
    let c = index(candidate);
    let mut report = DiffReport::default();
    for (key, row) in &g {
        match c.get(key) {
            None => report.missing.push(row.clone()),
            Some(other) if other.digest != row.digest => {
                report.changed.push((row.clone(), row.digest, other.digest));
            }
            Some(_) => {}
        }
    }
    for (key, row) in &c {
        if !g.contains_key(key) {
            report.extra.push(row.clone());
        }
    }
    report
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("golden log error: {0}")]
    Log(#[from] LogError),
    #[error("runtime error at iteration {iteration}: {source}")]
    Runtime { iteration: u64, source: EcsError },
}

/// Rebuilds the world from `config_path`, re-runs it for as many
/// iterations as the golden log covers, and diffs the fresh log against
/// the golden one. The report passes iff the states are identical.
pub fn acceptance_check(
    config_path: &Path,
    golden_path: &Path,
    registry: &Registry,
) -> Result<DiffReport, CheckError> {
    let golden = read_log_file(golden_path)?;
    let doc = config::load_document(config_path)?;
    let mut world = config::build_world(&doc, registry)?;
    let mut observer = StateLogObserver::new();
    let iterations = golden.max_iteration();
    world.run(iterations, &mut [&mut observer]).map_err(|e| CheckError::Runtime {
        iteration: world.iteration(),
        source: e,
    })?;
    Ok(compare_logs(&golden, &observer.log))
}
