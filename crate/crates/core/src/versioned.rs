//! Parsing for documents that carry a `schema` version field.

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{Error, Result};

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses a versioned document: the `schema` field is checked before the
/// shape, so a future version is reported as such rather than as noise.
pub(crate) fn parse_versioned<T: DeserializeOwned>(bytes: &[u8], expected: u64) -> Result<T> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| Error::Malformed {
        pointer: "/".into(),
        message: e.to_string(),
    })?;
    match value.get("schema") {
        None => {
            return Err(Error::Malformed {
                pointer: "/schema".into(),
                message: "missing schema version".into(),
            })
        }
        Some(v) if v.as_u64() != Some(expected) => {
            return Err(Error::SchemaVersion {
                found: v.to_string(),
                expected,
            })
        }
        Some(_) => {}
    }
    serde_path_to_error::deserialize(value).map_err(|e| Error::Malformed {
        pointer: pointer_of(e.path()),
        message: e.inner().to_string(),
    })
}

