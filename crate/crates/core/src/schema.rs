//! Accessors that turn loosely-typed JSON into contract errors with paths.

use serde_json::{Map, Value};

use crate::report::ContractError;

pub(crate) fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ContractError> {
    v.as_object()
        .ok_or_else(|| ContractError::schema(path, format!("expected an object, found {}", kind(v))))
}

pub(crate) fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, ContractError> {
    obj.get(key)
        .ok_or_else(|| ContractError::schema(join(path, key), format!("missing key \"{key}\"")))
}

pub(crate) fn string<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, ContractError> {
    let v = field(obj, key, path)?;
    v.as_str()
        .ok_or_else(|| ContractError::schema(join(path, key), format!("expected a string, found {}", kind(v))))
}

pub(crate) fn array<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Vec<Value>, ContractError> {
    let v = field(obj, key, path)?;
    v.as_array()
        .ok_or_else(|| ContractError::schema(join(path, key), format!("expected a list, found {}", kind(v))))
}

/// Row indices, each checked against `row_count`.
pub(crate) fn row_indices(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
    row_count: usize,
) -> Result<Vec<usize>, ContractError> {
    let here = join(path, key);
    let mut out = Vec::new();
    for (i, item) in array(obj, key, path)?.iter().enumerate() {
        let item_path = format!("{here}[{i}]");
        let row = item.as_u64().ok_or_else(|| {
            ContractError::schema(
                &item_path,
                format!("expected a non-negative integer, found {}", kind(item)),
            )
        })?;
        if row >= row_count as u64 {
            return Err(ContractError::IndexOutOfRange {
                path: item_path,
                row,
                row_count,
            });
        }
        out.push(row as usize);
    }
    Ok(out)
}

pub(crate) fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

pub(crate) fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "a list",
        Value::Object(_) => "an object",
    }
}
