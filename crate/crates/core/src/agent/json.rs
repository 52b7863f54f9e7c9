//! Pulls the JSON payload out of a free-form model reply.
//!
//! Replies arrive wrapped in Markdown fences, prefixed with chatter, or
//! followed by explanations. The scanner walks candidate `{`/`[` starts,
//! finds the balanced closing delimiter while honoring string literals and
//! escapes, and hands the slice to `serde_json`.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("no JSON object or array found in reply")]
    NoJsonFound,
    #[error("malformed JSON starting at byte {position}: {reason}")]
    MalformedJson { position: usize, reason: String },
}

/// Returns the first syntactically complete top-level JSON object or array
/// in `raw`; values nested inside a truncated or rejected one are never
/// returned. Content inside a Markdown code fence is preferred.
pub fn extract_json(raw: &str) -> Result<Value, ExtractError> {
    let mut first_error = None;
    for (offset, body) in fenced_blocks(raw) {
        match scan(body) {
            Ok(v) => return Ok(v),
            Err(ExtractError::MalformedJson { position, reason }) => {
                first_error.get_or_insert(ExtractError::MalformedJson {
                    position: offset + position,
                    reason,
                });
            }
            Err(ExtractError::NoJsonFound) => {}
        }
    }
    match scan(raw) {
        Ok(v) => Ok(v),
        Err(ExtractError::NoJsonFound) => Err(first_error.unwrap_or(ExtractError::NoJsonFound)),
        Err(e) => Err(first_error.unwrap_or(e)),
    }
}

/// `(byte offset, body)` of every ``` fenced block, info string removed.
/// Fence markers count only at the start of a line, so backticks inside a
/// JSON string (which cannot span lines) are never mistaken for one.
fn fenced_blocks(raw: &str) -> Vec<(usize, &str)> {
    let mut blocks = Vec::new();
    let mut pos = 0;
    while let Some(open) = find_fence(raw, pos) {
        // the info string ("json", "JSON", ...) runs to the end of the line
        let body_start = match raw[open + 3..].find('\n') {
            Some(nl) => open + 3 + nl + 1,
            None => break,
        };
        match find_fence(raw, body_start) {
            Some(close) => {
                blocks.push((body_start, &raw[body_start..close]));
                pos = close + 3;
            }
            None => {
                blocks.push((body_start, &raw[body_start..]));
                break;
            }
        }
    }
    blocks
}

/// Byte offset of the next ``` at or after `from` preceded on its line by
/// nothing but spaces or tabs.
fn find_fence(raw: &str, from: usize) -> Option<usize> {
    let mut pos = from;
    while let Some(rel) = raw[pos..].find("```") {
        let at = pos + rel;
        let line_start = raw[..at].rfind('\n').map_or(0, |nl| nl + 1);
        if raw[line_start..at].chars().all(|c| c == ' ' || c == '\t') {
            return Some(at);
        }
        pos = at + 3;
    }
    None
}

fn scan(text: &str) -> Result<Value, ExtractError> {
    let bytes = text.as_bytes();
    let mut first_error = None;
    let mut start = 0;
    while let Some(rel) = bytes[start..].iter().position(|&b| b == b'{' || b == b'[') {
        let open = start + rel;
        match balanced_end(bytes, open) {
            Some(end) => match serde_json::from_str::<Value>(&text[open..end]) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    first_error.get_or_insert(ExtractError::MalformedJson {
                        position: open,
                        reason: e.to_string(),
                    });
                    // values nested inside a rejected one are not top-level
                    start = end;
                }
            },
            None => {
                // everything after an unclosed opener is nested inside it
                return Err(first_error.unwrap_or(ExtractError::MalformedJson {
                    position: open,
                    reason: "unbalanced delimiters".to_string(),
                }));
            }
        }
    }
    Err(first_error.unwrap_or(ExtractError::NoJsonFound))
}

/// Byte index one past the delimiter closing the one at `open`, or `None`
/// when the input ends first or a closer does not match its opener.
fn balanced_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut stack = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => stack.push(b'}'),
            b'[' => stack.push(b']'),
            b'}' | b']' => {
                if stack.pop() != Some(b) {
                    return None;
                }
                if stack.is_empty() {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn prose_prefix() {
        assert_eq!(extract_json("Sure! {\"a\": 1}").unwrap(), json!({"a": 1}));
    }

    #[test]
    fn fenced_array_with_braces_in_strings() {
        let raw = "```json\n[{\"x\": \"b}r{ace\"}]\n```";
        assert_eq!(extract_json(raw).unwrap(), json!([{"x": "b}r{ace"}]));
    }

    #[test]
    fn escaped_quotes_inside_strings() {
        let raw = r#"here: {"q": "say \"}\" now", "n": [1, 2]} thanks"#;
        assert_eq!(extract_json(raw).unwrap(), json!({"q": "say \"}\" now", "n": [1, 2]}));
    }

    #[test]
    fn no_json() {
        assert_eq!(extract_json("no json here"), Err(ExtractError::NoJsonFound));
        assert_eq!(extract_json(""), Err(ExtractError::NoJsonFound));
    }

    #[test]
    fn skips_bracketed_prose_before_payload() {
        let raw = "Result [see below]:\n{\"Description\": \"x\"}";
        assert_eq!(extract_json(raw).unwrap(), json!({"Description": "x"}));
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let err = extract_json("prefix {\"a\": [1, 2").unwrap_err();
        assert!(matches!(err, ExtractError::MalformedJson { position: 7, .. }));
    }

    #[test]
    fn trailing_comma_is_malformed() {
        assert!(matches!(
            extract_json("{\"a\": 1,}"),
            Err(ExtractError::MalformedJson { position: 0, .. })
        ));
    }

    #[test]
    fn fence_preferred_over_surrounding_braces() {
        let raw = "Use {curly} style.\n```json\n{\"ok\": true}\n```\n";
        assert_eq!(extract_json(raw).unwrap(), json!({"ok": true}));
    }

    #[test]
    fn backticks_inside_strings_are_not_fences() {
        let raw = "Here: {\"a\": \"``` x {\\\"b\\\": 1} ```\", \"c\": 2} done";
        assert_eq!(extract_json(raw).unwrap(), json!({"a": "``` x {\"b\": 1} ```", "c": 2}));
    }

    #[test]
    fn nested_value_of_truncated_payload_is_not_returned() {
        assert!(matches!(
            extract_json("{\"a\": {\"b\": 1}, \"c\": \"tru"),
            Err(ExtractError::MalformedJson { position: 0, .. })
        ));
    }

    fn arb_json() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            Just(Value::Null),
            any::<bool>().prop_map(Value::Bool),
            any::<i64>().prop_map(|n| json!(n)),
            "[ -~]{0,12}".prop_map(Value::String),
        ];
        leaf.prop_recursive(4, 32, 6, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..5).prop_map(Value::Array),
                prop::collection::btree_map("[a-z{}\\[\\]\"]{1,6}", inner, 0..5)
                    .prop_map(|m| Value::Object(m.into_iter().collect())),
            ]
        })
    }

    proptest! {
        #[test]
        fn round_trips_containers(v in arb_json(), pretty in any::<bool>()) {
            let v = match v {
                Value::Array(_) | Value::Object(_) => v,
                other => json!({"value": other}),
            };
            let s = if pretty { serde_json::to_string_pretty(&v).unwrap() } else { v.to_string() };
            prop_assert_eq!(extract_json(&s).unwrap(), v.clone());
            let wrapped = format!("Here you go:\n```json\n{s}\n```\nLet me know.");
            prop_assert_eq!(extract_json(&wrapped).unwrap(), v);
        }
    }
}
