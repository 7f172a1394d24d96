//! Keyword dispatcher: maps a task's keywords to integer plane coordinates.
//!
//! A field is an ordered keyword vocabulary. A task marks which of the
//! field's keywords it uses; that presence vector is split in two halves and
//! each half is read as a binary number, least significant bit first. The
//! lower half gives `x`, the upper half gives `y`.
//!
//! On disk, `Fields/<field>/<keyword>.txt` defines vocabularies (file
//! contents are ignored) and every file in the items folder is one task:
//! the first non-blank line names the field, each further line is a keyword.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported vocabulary; each half must fit in 63 bits.
pub const MAX_KEYWORDS: usize = 126;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("field {0:?} has no keywords")]
    EmptyField(String),
    #[error("field {field:?} has duplicate keywords after case folding: {}", .keywords.join(", "))]
    DuplicateKeywords { field: String, keywords: Vec<String> },
    #[error("field {field:?} has {count} keywords; at most {MAX_KEYWORDS} are supported")]
    FieldTooLarge { field: String, count: usize },
    #[error("field too small to split: {0} keyword(s)")]
    FieldTooSmall(usize),
    #[error("duplicate field {0:?}")]
    DuplicateField(String),
    #[error("item {item:?} names unknown domain {domain:?}")]
    UnknownDomain { item: String, domain: String },
    #[error("item {item:?} uses keywords unknown to field {field:?}: {}", .keywords.join(", "))]
    UnknownKeywords {
        item: String,
        field: String,
        keywords: Vec<String>,
    },
    #[error("item {0:?} is empty; expected the domain name on its first line")]
    EmptyItem(String),
    #[error("item {item:?} belongs to field {item_field:?}, not {field:?}")]
    FieldMismatch {
        item: String,
        item_field: String,
        field: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DispatchError + '_ {
    move |source| DispatchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn fold(word: &str) -> String {
    word.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordField {
    pub name: String,
    /// Significance order: the first keyword is the least significant bit.
    keywords: Vec<String>,
}

impl KeywordField {
    /// Builds a field, case-folding and sorting the keywords.
    pub fn new(
        name: impl Into<String>,
        keywords: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Result<Self, DispatchError> {
        let name = name.into();
        let mut folded: Vec<String> = keywords.into_iter().map(|k| fold(k.as_ref())).collect();
        if folded.is_empty() {
            return Err(DispatchError::EmptyField(name));
        }
        folded.sort();
        let mut dups: Vec<String> = folded
            .windows(2)
            .filter(|w| w[0] == w[1])
            .map(|w| w[0].clone())
            .collect();
        if !dups.is_empty() {
            dups.dedup();
            return Err(DispatchError::DuplicateKeywords {
                field: name,
                keywords: dups,
            });
        }
        if folded.len() > MAX_KEYWORDS {
            return Err(DispatchError::FieldTooLarge {
                field: name,
                count: folded.len(),
            });
        }
        Ok(Self { name, keywords: folded })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn contains(&self, keyword: &str) -> bool {
        self.keywords.binary_search(&fold(keyword)).is_ok()
    }

    /// Exclusive upper limits of the coordinate plane, `(2^⌈n/2⌉, 2^⌊n/2⌋)`.
    pub fn extent(&self) -> (u64, u64) {
        let n = self.len();
        (1u64 << n.div_ceil(2), 1u64 << (n / 2))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub name: String,
    pub field_name: String,
    pub keywords: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskCoordinates {
    pub x: u64,
    pub y: u64,
}

/// Unknown item keywords are an error in `Strict` mode and dropped in `Lenient`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeywordMode {
    #[default]
    Strict,
    Lenient,
}

/// Set of fields indexed by case-folded name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldSet {
    fields: BTreeMap<String, KeywordField>,
}

impl FieldSet {
    pub fn new(fields: impl IntoIterator<Item = KeywordField>) -> Result<Self, DispatchError> {
        let mut map = BTreeMap::new();
        for f in fields {
            let key = fold(&f.name);
            if map.contains_key(&key) {
                return Err(DispatchError::DuplicateField(f.name));
            }
            map.insert(key, f);
        }
        Ok(Self { fields: map })
    }

    pub fn get(&self, name: &str) -> Option<&KeywordField> {
        self.fields.get(&fold(name))
    }

    pub fn iter(&self) -> impl Iterator<Item = &KeywordField> {
        self.fields.values()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Validates a task against its field and returns it with keywords folded.
    pub fn make_item(
        &self,
        name: impl Into<String>,
        domain: &str,
        keywords: impl IntoIterator<Item = impl AsRef<str>>,
        mode: KeywordMode,
    ) -> Result<TaskItem, DispatchError> {
        let name = name.into();
        let field = self.get(domain).ok_or_else(|| DispatchError::UnknownDomain {
            item: name.clone(),
            domain: domain.trim().to_string(),
        })?;
        let mut known = BTreeSet::new();
        let mut unknown = BTreeSet::new();
        for k in keywords {
            let k = fold(k.as_ref());
            if k.is_empty() {
                continue;
            }
            if field.contains(&k) {
                known.insert(k);
            } else {
                unknown.insert(k);
            }
        }
        if mode == KeywordMode::Strict && !unknown.is_empty() {
            return Err(DispatchError::UnknownKeywords {
                item: name,
                field: field.name.clone(),
                keywords: unknown.into_iter().collect(),
            });
        }
        Ok(TaskItem {
            name,
            field_name: field.name.clone(),
            keywords: known,
        })
    }

    /// Coordinates of an item in its own field.
    pub fn locate(&self, item: &TaskItem) -> Result<TaskCoordinates, DispatchError> {
        let field = self.get(&item.field_name).ok_or_else(|| DispatchError::UnknownDomain {
            item: item.name.clone(),
            domain: item.field_name.clone(),
        })?;
        coordinates(field, item)
    }
}

/// Reads one field per subdirectory of `root`. Keywords are file base names.
pub fn load_fields(root: &Path) -> Result<Vec<KeywordField>, DispatchError> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let path = entry.path();
        if path.is_dir() && !is_hidden(&path) {
            dirs.push(path);
        }
    }
    dirs.sort();
    let mut fields = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let name = file_name(&dir);
        let mut keywords = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.is_file() && !is_hidden(&path) {
                if let Some(stem) = path.file_stem() {
                    keywords.push(stem.to_string_lossy().into_owned());
                }
            }
        }
        fields.push(KeywordField::new(name, keywords)?);
    }
    Ok(fields)
}

/// Reads every file in `root` as a task item, sorted by item name.
pub fn load_items(root: &Path, fields: &FieldSet, mode: KeywordMode) -> Result<Vec<TaskItem>, DispatchError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let path = entry.map_err(io_err(root))?.path();
        if path.is_file() && !is_hidden(&path) {
            files.push(path);
        }
    }
    files.sort();
    let mut items = Vec::with_capacity(files.len());
    for path in files {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        items.push(parse_item(&name, &text, fields, mode)?);
    }
    items.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(items)
}

/// Parses an item document: domain on the first non-blank line, then keywords.
pub fn parse_item(name: &str, text: &str, fields: &FieldSet, mode: KeywordMode) -> Result<TaskItem, DispatchError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let domain = lines.next().ok_or_else(|| DispatchError::EmptyItem(name.to_string()))?;
    fields.make_item(name, domain, lines, mode)
}

/// Presence bits over the field's keyword order; index 0 is the LSB.
pub fn encode_bits(field: &KeywordField, item: &TaskItem) -> Result<Vec<bool>, DispatchError> {
    if fold(&field.name) != fold(&item.field_name) {
        return Err(DispatchError::FieldMismatch {
            item: item.name.clone(),
            item_field: item.field_name.clone(),
            field: field.name.clone(),
        });
    }
    Ok(field.keywords.iter().map(|k| item.keywords.contains(k)).collect())
}

/// Lower half takes the first `⌈n/2⌉` bits.
pub fn split_halves(bits: &[bool]) -> Result<(&[bool], &[bool]), DispatchError> {
    if bits.len() < 2 {
        return Err(DispatchError::FieldTooSmall(bits.len()));
    }
    Ok(bits.split_at(bits.len().div_ceil(2)))
}

/// `Σ b_i · 2^i`. Callers keep `bits.len() ≤ 64`.
pub fn bits_to_decimal(bits: &[bool]) -> u64 {
    debug_assert!(bits.len() <= 64);
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0, |acc, (i, _)| acc | (1u64 << i))
}

pub fn coordinates(field: &KeywordField, item: &TaskItem) -> Result<TaskCoordinates, DispatchError> {
    let bits = encode_bits(field, item)?;
    let (lower, upper) = split_halves(&bits)?;
    Ok(TaskCoordinates {
        x: bits_to_decimal(lower),
        y: bits_to_decimal(upper),
    })
}

/// `item,field,x,y` rows in the given order.
pub fn coordinates_csv(rows: &[(TaskItem, TaskCoordinates)]) -> String {
    let mut out = String::from("item,field,x,y\n");
    for (item, c) in rows {
        out.push_str(&format!("{},{},{},{}\n", item.name, item.field_name, c.x, c.y));
    }
    out
}

fn is_hidden(path: &Path) -> bool {
    path.file_name()
        .map(|n| n.to_string_lossy().starts_with('.'))
        .unwrap_or(false)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
