//! Canonical JSON output: object keys sorted, two-space indentation, trailing newline.

use serde::Serialize;

use crate::error::Result;

/// Serialize through `serde_json::Value`, whose maps are ordered by key.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
