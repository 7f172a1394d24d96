//! Versioned JSON wire format.
//!
//! Every message is a JSON object whose first member is `"v":1`, followed by
//! the message body. Decoding rejects other versions and unknown fields and
//! reports where the problem is.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

pub const VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("message must be a JSON object")]
    NotObject,
    #[error("missing protocol version field `v`")]
    MissingVersion,
    #[error("unsupported protocol version {0}; expected 1")]
    Version(String),
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
}

impl WireError {
    pub fn code(&self) -> &'static str {
        match self {
            WireError::Syntax { .. } | WireError::NotObject => "malformed",
            WireError::MissingVersion | WireError::Version(_) => "version",
            WireError::Schema { .. } => "schema",
        }
    }
}

/// Serializes `body` with the version prefix. `body` must serialize to an object.
pub fn encode<T: Serialize>(body: &T) -> String {
    let text = serde_json::to_string(body).expect("wire types always serialize");
    debug_assert!(text.starts_with('{'), "wire bodies are JSON objects");
    if text == "{}" {
        format!("{{\"v\":{VERSION}}}")
    } else {
        format!("{{\"v\":{VERSION},{}", &text[1..])
    }
}

/// Pretty-printed variant of [`encode`], used for files on disk.
pub fn encode_pretty<T: Serialize>(body: &T) -> String {
    let mut value = serde_json::to_value(body).expect("wire types always serialize");
    let Value::Object(map) = &mut value else {
        panic!("wire bodies are JSON objects");
    };
    let mut out = serde_json::Map::new();
    out.insert("v".into(), VERSION.into());
    out.append(map);
    serde_json::to_string_pretty(&Value::Object(out)).expect("value serializes")
}

/// Message types accepted by [`decode`]. The default decoding tracks the
/// JSON path of schema errors; tagged enums override it so that variant
/// fields keep their paths and unknown members are still rejected.
pub trait WireDecode: Sized {
    fn from_object(map: Map<String, Value>) -> Result<Self, WireError>;
}

pub fn plain<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, WireError> {
    serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| WireError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

/// Decodes `{"type": tag, ...fields}` through an externally tagged mirror `B`.
pub fn tagged<B: DeserializeOwned>(mut map: Map<String, Value>) -> Result<B, WireError> {
    let tag = match map.remove("type") {
        Some(Value::String(t)) => t,
        Some(_) => {
            return Err(WireError::Schema {
                path: "type".into(),
                message: "expected a string".into(),
            })
        }
        None => {
            return Err(WireError::Schema {
                path: ".".into(),
                message: "missing field `type`".into(),
            })
        }
    };
    let mut outer = Map::new();
    outer.insert(tag.clone(), Value::Object(map));
    serde_path_to_error::deserialize(Value::Object(outer)).map_err(|e| {
        let path = e.path().to_string();
        let inner = path
            .strip_prefix(&tag)
            .map(|p| p.trim_start_matches('.'))
            .filter(|p| !p.is_empty())
            .unwrap_or(if path == tag { "." } else { "type" });
        let message = e.into_inner().to_string();
        WireError::Schema {
            path: inner.to_string(),
            message: message.replace("unknown variant", "unknown message type"),
        }
    })
}

pub fn decode<T: WireDecode>(text: &str) -> Result<T, WireError> {
    let value: Value = serde_json::from_str(text).map_err(|e| WireError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    decode_value(value)
}

pub fn decode_value<T: WireDecode>(value: Value) -> Result<T, WireError> {
    let Value::Object(mut map) = value else {
        return Err(WireError::NotObject);
    };
    match map.remove("v") {
        None => return Err(WireError::MissingVersion),
        Some(Value::Number(n)) if n.as_u64() == Some(VERSION) => {}
        Some(other) => return Err(WireError::Version(other.to_string())),
    }
    T::from_object(map)
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}
