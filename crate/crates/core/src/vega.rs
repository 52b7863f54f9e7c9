//! Structural queries over Vega-Lite specs. No schema validation happens
//! here; the renderer is the authority on deep validity.

use serde_json::{Map, Value};

use crate::report::Violation;

pub fn mark_type(mark: &Value) -> Option<&str> {
    match mark {
        Value::String(s) => Some(s.as_str()),
        Value::Object(o) => o.get("type").and_then(Value::as_str),
        _ => None,
    }
}

/// One drawable layer with inherited encoding and data resolved.
#[derive(Debug, Clone)]
pub struct View<'a> {
    pub path: String,
    pub mark: &'a Value,
    pub encoding: Map<String, Value>,
    pub data: Option<&'a Value>,
    pub transform: Option<&'a Value>,
}

impl View<'_> {
    pub fn mark_type(&self) -> Option<&str> {
        mark_type(self.mark)
    }

    /// `line` marks declared with `"point": true` draw their own points.
    pub fn has_inline_points(&self) -> bool {
        match self.mark.get("point") {
            Some(Value::Bool(b)) => *b,
            Some(Value::Object(_)) => true,
            _ => false,
        }
    }

    pub fn channel_field(&self, channel: &str) -> Option<&str> {
        self.encoding
            .get(channel)
            .and_then(|c| c.get("field"))
            .and_then(Value::as_str)
    }
}

/// Flattens a single-view or (nested) layered spec into drawable views, in
/// drawing order.
pub fn views(spec: &Value) -> Vec<View<'_>> {
    let mut out = Vec::new();
    collect_views(spec, "$", &Map::new(), None, None, &mut out);
    out
}

fn collect_views<'a>(
    node: &'a Value,
    path: &str,
    inherited: &Map<String, Value>,
    data: Option<&'a Value>,
    transform: Option<&'a Value>,
    out: &mut Vec<View<'a>>,
) {
    let Some(obj) = node.as_object() else { return };
    let mut encoding = inherited.clone();
    if let Some(Value::Object(enc)) = obj.get("encoding") {
        for (k, v) in enc {
            encoding.insert(k.clone(), v.clone());
        }
    }
    let data = obj.get("data").or(data);
    let transform = obj.get("transform").or(transform);
    if let Some(mark) = obj.get("mark") {
        out.push(View {
            path: path.to_string(),
            mark,
            encoding: encoding.clone(),
            data,
            transform,
        });
    }
    if let Some(Value::Array(layers)) = obj.get("layer") {
        for (i, layer) in layers.iter().enumerate() {
            collect_views(layer, &format!("{path}.layer[{i}]"), &encoding, data, transform, out);
        }
    }
}

/// Every `field` referenced from any `encoding` block, with its path.
pub fn encoding_fields(spec: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    walk_encodings(spec, "$", &mut out);
    out
}

fn walk_encodings(node: &Value, path: &str, out: &mut Vec<(String, String)>) {
    match node {
        Value::Object(obj) => {
            for (k, v) in obj {
                let here = format!("{path}.{k}");
                if k == "encoding" {
                    if let Value::Object(channels) = v {
                        for (channel, def) in channels {
                            let cpath = format!("{here}.{channel}");
                            channel_fields(def, &cpath, out);
                        }
                    }
                } else {
                    walk_encodings(v, &here, out);
                }
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                walk_encodings(item, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

fn channel_fields(def: &Value, path: &str, out: &mut Vec<(String, String)>) {
    match def {
        Value::Object(o) => {
            if let Some(Value::String(f)) = o.get("field") {
                out.push((format!("{path}.field"), f.clone()));
            }
            // conditional encodings nest further definitions
            if let Some(cond) = o.get("condition") {
                channel_fields(cond, &format!("{path}.condition"), out);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                channel_fields(item, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

pub fn title_text(spec: &Value) -> Option<String> {
    fn text(v: &Value) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            Value::Array(lines) => Some(lines.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(" ")),
            Value::Object(o) => o.get("text").and_then(text),
            _ => None,
        }
    }
    spec.get("title").and_then(text)
}

/// Single-view specs need `mark` and `encoding`; layered specs keep every
/// `mark` and `encoding` inside the `layer` list.
pub fn structural_violations(spec: &Value) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(obj) = spec.as_object() else {
        out.push(Violation::new(
            "spec-structure",
            "$",
            "specification must be a JSON object",
        ));
        return out;
    };
    match obj.get("layer") {
        Some(Value::Array(layers)) => {
            for key in ["mark", "encoding"] {
                if obj.contains_key(key) {
                    out.push(Violation::new(
                        "layer-rule",
                        format!("$.{key}"),
                        format!("\"{key}\" must be inside the \"layer\" list when \"layer\" is present"),
                    ));
                }
            }
            if layers.is_empty() {
                out.push(Violation::new("spec-structure", "$.layer", "\"layer\" list is empty"));
            }
            for (i, layer) in layers.iter().enumerate() {
                check_layer_item(layer, &format!("$.layer[{i}]"), &mut out);
            }
        }
        Some(_) => out.push(Violation::new("spec-structure", "$.layer", "\"layer\" must be a list")),
        None => {
            for key in ["mark", "encoding"] {
                if !obj.contains_key(key) {
                    out.push(Violation::new(
                        "spec-structure",
                        "$",
                        format!("single-view specification is missing \"{key}\""),
                    ));
                }
            }
        }
    }
    out
}

fn check_layer_item(layer: &Value, path: &str, out: &mut Vec<Violation>) {
    let Some(obj) = layer.as_object() else {
        out.push(Violation::new("spec-structure", path, "layer entry must be an object"));
        return;
    };
    match obj.get("layer") {
        Some(Value::Array(inner)) => {
            for key in ["mark", "encoding"] {
                if obj.contains_key(key) {
                    out.push(Violation::new(
                        "layer-rule",
                        format!("{path}.{key}"),
                        format!("\"{key}\" must be inside the nested \"layer\" list"),
                    ));
                }
            }
            for (i, item) in inner.iter().enumerate() {
                check_layer_item(item, &format!("{path}.layer[{i}]"), out);
            }
        }
        Some(_) => out.push(Violation::new(
            "spec-structure",
            format!("{path}.layer"),
            "\"layer\" must be a list",
        )),
        None => {
            if !obj.contains_key("mark") {
                out.push(Violation::new(
                    "spec-structure",
                    path,
                    "layer entry is missing \"mark\"",
                ));
            }
        }
    }
}
