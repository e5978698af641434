//! Content-addressed media store.
//!
//! Objects live in `<root>/objects/<hex>.<ext>`, keyed by (digest,
//! extension). The catalog of objects plus one path dictionary per ingested
//! archive is the master index, `<root>/cdn-index.json`. Object files are
//! written under a temporary name and renamed into place, so concurrent
//! writers of the same digest converge on one file; catalog updates are
//! single-writer and go through `&mut self`.

mod hash;
mod rewrite;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use hash::{hash_content, ContentHash, DigestAlgorithm};
pub use rewrite::{rewrite_references, Rewrite, DEFAULT_CDN_PREFIX};
pub use stats::{compute_stats, decrease_pct, decrease_tenths, ArchiveStats, ClassStats, Inventory};

use crate::diagnostics::Diagnostic;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::media::{extension_of, MediaKind};

pub const INDEX_FILE: &str = "cdn-index.json";
pub const OBJECTS_DIR: &str = "objects";
const INDEX_VERSION: u64 = 1;

/// Identity of a stored object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectKey {
    pub hash: ContentHash,
    pub ext: String,
}

impl ObjectKey {
    pub fn stored_name(&self) -> String {
        stored_name(&self.hash, &self.ext)
    }
}

fn stored_name(hash: &ContentHash, ext: &str) -> String {
    if ext.is_empty() {
        hash.to_string()
    } else {
        format!("{hash}.{ext}")
    }
}

/// Splits `<hex>[.<ext>]` back into a key.
pub fn parse_stored_name(name: &str) -> Option<ObjectKey> {
    let (hex, ext) = name.split_once('.').unwrap_or((name, ""));
    let hash: ContentHash = hex.parse().ok()?;
    if ext.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()) {
        Some(ObjectKey {
            hash,
            ext: ext.to_owned(),
        })
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredObject {
    pub hash: ContentHash,
    pub ext: String,
    pub size: u64,
    pub kind: MediaKind,
    pub first_seen: DateTime<Utc>,
    /// Original file names (last path segment) observed for these bytes.
    pub names: BTreeSet<String>,
}

impl StoredObject {
    pub fn key(&self) -> ObjectKey {
        ObjectKey {
            hash: self.hash.clone(),
            ext: self.ext.clone(),
        }
    }

    pub fn stored_name(&self) -> String {
        stored_name(&self.hash, &self.ext)
    }
}

/// Where an original path ended up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictEntry {
    Stored(String),
    /// The link existed but the file was absent or unreadable.
    Missing,
}

impl DictEntry {
    pub fn stored(&self) -> Option<&str> {
        match self {
            DictEntry::Stored(s) => Some(s),
            DictEntry::Missing => None,
        }
    }
}

impl Serialize for DictEntry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.stored().unwrap_or("missing"))
    }
}

impl<'de> Deserialize<'de> for DictEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "missing" {
            Ok(DictEntry::Missing)
        } else if parse_stored_name(&s).is_some() {
            Ok(DictEntry::Stored(s))
        } else {
            Err(serde::de::Error::custom(format!("{s:?} is not a stored object name")))
        }
    }
}

/// Original path (relative to the export root) → stored name, for one archive.
pub type PathDictionary = BTreeMap<String, DictEntry>;

#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    version: u64,
    objects: Vec<StoredObject>,
    dictionaries: BTreeMap<String, PathDictionary>,
}

#[derive(Debug)]
pub struct ContentStore {
    root: PathBuf,
    algorithm: DigestAlgorithm,
    objects: BTreeMap<ObjectKey, StoredObject>,
    dictionaries: BTreeMap<String, PathDictionary>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `dest` via a temporary file in the same directory,
/// creating missing parent directories.
pub(crate) fn write_atomic(dest: &Path, bytes: &[u8]) -> Result<()> {
    let dir = dest.parent().unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let write = || -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, dest)
    };
    write().map_err(|source| {
        let _ = fs::remove_file(&tmp);
        Error::StoreWrite {
            path: dest.to_path_buf(),
            source,
        }
    })
}

/// Result of ingesting one file's bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub object: StoredObject,
    /// False when identical bytes were already stored.
    pub newly_written: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MergeReport {
    pub objects_added: u64,
    pub objects_deduplicated: u64,
    pub bytes_added: u64,
    pub bytes_saved: u64,
    pub dictionaries_merged: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegrityProblem {
    pub object: String,
    pub problem: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IntegrityReport {
    pub checked: u64,
    pub problems: Vec<IntegrityProblem>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.problems.is_empty()
    }
}

impl ContentStore {
    /// Opens the store at `root`, creating the directory layout if needed
    /// and loading `cdn-index.json` when present.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        Self::open_with(root, DigestAlgorithm::default())
    }

    pub fn open_with(root: impl Into<PathBuf>, algorithm: DigestAlgorithm) -> Result<Self> {
        let root = root.into();
        let objects_dir = root.join(OBJECTS_DIR);
        fs::create_dir_all(&objects_dir).map_err(|e| Error::io(&objects_dir, e))?;
        let mut store = ContentStore {
            root,
            algorithm,
            objects: BTreeMap::new(),
            dictionaries: BTreeMap::new(),
        };
        let index_path = store.index_path();
        if index_path.exists() {
            let bytes = fs::read(&index_path).map_err(|e| Error::io(&index_path, e))?;
            let de = &mut serde_json::Deserializer::from_slice(&bytes);
            let file: IndexFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Malformed {
                pointer: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
            if file.version != INDEX_VERSION {
                return Err(Error::SchemaVersion {
                    found: file.version.to_string(),
                    expected: INDEX_VERSION,
                });
            }
            store.objects = file.objects.into_iter().map(|o| (o.key(), o)).collect();
            store.dictionaries = file.dictionaries;
        }
        Ok(store)
    }

    /// Opens an existing store, failing if it has no master index.
    pub fn open_existing(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let index = root.join(INDEX_FILE);
        if !index.exists() {
            return Err(Error::io(
                index,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no cdn-index.json; run ingest first"),
            ));
        }
        Self::open(root)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    pub fn objects_dir(&self) -> PathBuf {
        self.root.join(OBJECTS_DIR)
    }

    pub fn object_path(&self, stored_name: &str) -> PathBuf {
        self.objects_dir().join(stored_name)
    }

    pub fn algorithm(&self) -> DigestAlgorithm {
        self.algorithm
    }

    pub fn objects(&self) -> impl Iterator<Item = &StoredObject> {
        self.objects.values()
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn get(&self, key: &ObjectKey) -> Option<&StoredObject> {
        self.objects.get(key)
    }

    pub fn get_by_name(&self, stored_name: &str) -> Option<&StoredObject> {
        parse_stored_name(stored_name).and_then(|k| self.objects.get(&k))
    }

    pub fn dictionaries(&self) -> &BTreeMap<String, PathDictionary> {
        &self.dictionaries
    }

    pub fn dictionary(&self, archive_id: &str) -> Option<&PathDictionary> {
        self.dictionaries.get(archive_id)
    }

    /// Object that an archive's original path maps to, if stored.
    pub fn lookup(&self, archive_id: &str, original_path: &str) -> Option<&StoredObject> {
        let name = self.dictionaries.get(archive_id)?.get(original_path)?.stored()?;
        self.get_by_name(name)
    }

    /// Hashes `bytes` and makes sure the object file exists. Safe to call
    /// from many threads; does not touch the catalog.
    fn put_object(&self, original_path: &str, bytes: &[u8]) -> Result<(ObjectKey, bool)> {
        let key = ObjectKey {
            hash: self.algorithm.hash(bytes),
            ext: extension_of(original_path),
        };
        let dest = self.object_path(&key.stored_name());
        if dest.exists() {
            return Ok((key, false));
        }
        write_atomic(&dest, bytes)?;
        Ok((key, true))
    }

    fn record(
        &mut self,
        archive_id: &str,
        original_path: &str,
        key: ObjectKey,
        size: u64,
        seen_at: DateTime<Utc>,
    ) -> StoredObject {
        let name = original_path
            .rsplit('/')
            .next()
            .unwrap_or(original_path)
            .to_owned();
        let obj = self.objects.entry(key.clone()).or_insert_with(|| StoredObject {
            kind: MediaKind::from_extension(&key.ext),
            hash: key.hash.clone(),
            ext: key.ext.clone(),
            size,
            first_seen: seen_at,
            names: BTreeSet::new(),
        });
        obj.names.insert(name);
        obj.first_seen = obj.first_seen.min(seen_at);
        let obj = obj.clone();
        self.dictionaries
            .entry(archive_id.to_owned())
            .or_default()
            .insert(original_path.to_owned(), DictEntry::Stored(key.stored_name()));
        obj
    }

    /// Stores one file's bytes under its digest and maps
    /// `(archive_id, original_path)` to it. Identical bytes with the same
    /// extension are written once; later copies only add a source name.
    pub fn ingest_file(
        &mut self,
        archive_id: &str,
        original_path: &str,
        bytes: &[u8],
        seen_at: DateTime<Utc>,
    ) -> Result<Ingested> {
        let (key, written) = self.put_object(original_path, bytes)?;
        let newly_written = written && !self.objects.contains_key(&key);
        let object = self.record(archive_id, original_path, key, bytes.len() as u64, seen_at);
        Ok(Ingested {
            object,
            newly_written,
        })
    }

    /// Records that an archive links to a file that could not be read.
    pub fn mark_missing(&mut self, archive_id: &str, original_path: &str) {
        let dict = self.dictionaries.entry(archive_id.to_owned()).or_default();
        dict.entry(original_path.to_owned()).or_insert(DictEntry::Missing);
    }

    /// Reads, hashes and stores many files. Reading, hashing and object
    /// writes run under `exec`; catalog updates are applied afterwards in
    /// input order, so the result does not depend on the execution mode.
    /// Unreadable files are recorded as missing with a diagnostic.
    pub fn ingest_files(
        &mut self,
        archive_id: &str,
        files: &[(String, PathBuf)],
        seen_at: DateTime<Utc>,
        exec: Exec,
    ) -> Result<Vec<Diagnostic>> {
        let this = &*self;
        let staged = exec.map(files, |(original, abs)| match fs::read(abs) {
            Ok(bytes) => this
                .put_object(original, &bytes)
                .map(|(key, _)| Some((key, bytes.len() as u64))),
            Err(_) => Ok(None),
        });
        let mut diagnostics = Vec::new();
        for ((original, abs), staged) in files.iter().zip(staged) {
            match staged? {
                Some((key, size)) => {
                    self.record(archive_id, original, key, size, seen_at);
                }
                None => {
                    diagnostics.push(
                        Diagnostic::new(
                            "missing_media",
                            format!("cannot read {}", abs.display()),
                        )
                        .at(original.clone()),
                    );
                    self.mark_missing(archive_id, original);
                }
            }
        }
        Ok(diagnostics)
    }

    /// Atomically rewrites `cdn-index.json`.
    pub fn save(&self) -> Result<()> {
        let file = IndexFile {
            version: INDEX_VERSION,
            objects: self.objects.values().cloned().collect(),
            dictionaries: self.dictionaries.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&file)?;
        bytes.push(b'\n');
        write_atomic(&self.index_path(), &bytes)
    }

    /// Folds `other` into this store: the object set becomes the union keyed
    /// by (digest, extension), duplicate objects contribute no bytes, and all
    /// path dictionaries are merged. The catalog is checked before any file
    /// is copied; a key present in both stores with different sizes aborts
    /// the merge. The updated index is written atomically.
    pub fn merge_from(&mut self, other: &ContentStore) -> Result<MergeReport> {
        for (key, theirs) in &other.objects {
            if let Some(ours) = self.objects.get(key) {
                if ours.size != theirs.size {
                    return Err(Error::Integrity {
                        key: key.stored_name(),
                        expected: ours.size,
                        found: theirs.size,
                    });
                }
            }
        }

        let mut report = MergeReport::default();
        let same_root = same_dir(&self.root, &other.root);
        for (key, theirs) in &other.objects {
            match self.objects.get_mut(key) {
                Some(ours) => {
                    report.objects_deduplicated += 1;
                    report.bytes_saved += theirs.size;
                    ours.names.extend(theirs.names.iter().cloned());
                    ours.first_seen = ours.first_seen.min(theirs.first_seen);
                }
                None => {
                    let name = key.stored_name();
                    let dest = self.object_path(&name);
                    if !same_root && !dest.exists() {
                        let src = other.object_path(&name);
                        let bytes = fs::read(&src).map_err(|e| Error::io(&src, e))?;
                        if bytes.len() as u64 != theirs.size {
                            return Err(Error::Integrity {
                                key: name,
                                expected: theirs.size,
                                found: bytes.len() as u64,
                            });
                        }
                        write_atomic(&dest, &bytes)?;
                    }
                    report.objects_added += 1;
                    report.bytes_added += theirs.size;
                    self.objects.insert(key.clone(), theirs.clone());
                }
            }
        }
        for (archive, dict) in &other.dictionaries {
            report.dictionaries_merged += 1;
            let ours = self.dictionaries.entry(archive.clone()).or_default();
            for (path, entry) in dict {
                match ours.get(path) {
                    None | Some(DictEntry::Missing) => {
                        ours.insert(path.clone(), entry.clone());
                    }
                    Some(DictEntry::Stored(_)) => {}
                }
            }
        }
        self.save()?;
        Ok(report)
    }

    /// Re-hashes every object and checks size and name against the catalog.
    pub fn verify_integrity(&self) -> IntegrityReport {
        self.verify_integrity_with(Exec::default())
    }

    pub fn verify_integrity_with(&self, exec: Exec) -> IntegrityReport {
        let objects: Vec<&StoredObject> = self.objects.values().collect();
        let results = exec.map(&objects, |obj| {
            let name = obj.stored_name();
            let problem = match fs::read(self.object_path(&name)) {
                Err(e) => Some(format!("unreadable: {e}")),
                Ok(bytes) if bytes.len() as u64 != obj.size => Some(format!(
                    "size {} differs from catalog size {}",
                    bytes.len(),
                    obj.size
                )),
                Ok(bytes) => {
                    let actual = self.algorithm.hash(&bytes);
                    (actual != obj.hash).then(|| format!("content digest is {actual}"))
                }
            };
            problem.map(|problem| IntegrityProblem {
                object: name,
                problem,
            })
        });
        IntegrityReport {
            checked: objects.len() as u64,
            problems: results.into_iter().flatten().collect(),
        }
    }

    /// Inventory of every distinct (archive, path) that was stored.
    pub fn inventory_before(&self, archive_ids: Option<&[String]>) -> Inventory {
        let mut inv = Inventory::default();
        for (archive, dict) in &self.dictionaries {
            if archive_ids.is_some_and(|ids| !ids.contains(archive)) {
                continue;
            }
            for entry in dict.values() {
                if let Some(obj) = entry.stored().and_then(|n| self.get_by_name(n)) {
                    inv.push(obj.kind, obj.size);
                }
            }
        }
        inv
    }

    /// Inventory of distinct objects referenced by the given archives (all
    /// objects when `None`).
    pub fn inventory_after(&self, archive_ids: Option<&[String]>) -> Inventory {
        let mut inv = Inventory::default();
        match archive_ids {
            None => {
                for obj in self.objects.values() {
                    inv.push(obj.kind, obj.size);
                }
            }
            Some(ids) => {
                let names: BTreeSet<&str> = ids
                    .iter()
                    .filter_map(|a| self.dictionaries.get(a))
                    .flat_map(|d| d.values().filter_map(DictEntry::stored))
                    .collect();
                for obj in names.into_iter().filter_map(|n| self.get_by_name(n)) {
                    inv.push(obj.kind, obj.size);
                }
            }
        }
        inv
    }

    /// Before/after statistics over the whole store.
    pub fn stats(&self) -> ArchiveStats {
        compute_stats(&self.inventory_before(None), &self.inventory_after(None))
    }

    /// Before/after statistics restricted to some archives.
    pub fn archive_stats(&self, archive_ids: &[String]) -> ArchiveStats {
        compute_stats(
            &self.inventory_before(Some(archive_ids)),
            &self.inventory_after(Some(archive_ids)),
        )
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}
