use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Duration;

use serde_json::{Map, Value};

use super::{run_tool, MediaError};
use crate::model::{Cell, VisualizationSpec};
use crate::svg::{escape, parse_svg};
use crate::vega::{self, View};

/// Turns a Vega-Lite spec into SVG. Mark elements sit directly under groups
/// classed `role-mark` and carry `data-row` (semicolon-joined row indices)
/// and, for series marks, `data-series`. Axis, legend and title groups are
/// classed `role-axis`, `role-legend` and `role-title`.
pub trait Renderer: Send + Sync {
    fn render(&self, spec: &Value) -> Result<String, MediaError>;
    fn name(&self) -> &str;
}

pub fn render_visualization(spec: &VisualizationSpec, renderer: &dyn Renderer) -> Result<String, MediaError> {
    let svg = renderer.render(&spec.spec)?;
    check_render_contract(&svg)?;
    Ok(svg)
}

/// The output parses as SVG and every mark element carries row metadata.
pub fn check_render_contract(svg: &str) -> Result<(), MediaError> {
    let doc = parse_svg(svg).map_err(|e| MediaError::InvalidSvg(e.to_string()))?;
    for (_, el) in doc.iter() {
        let in_marks = el.parent.is_some_and(|p| doc.get(p).has_class("role-mark"));
        if in_marks && el.attr("data-row").is_none() {
            return Err(MediaError::MetadataMissing(el.id.clone()));
        }
    }
    Ok(())
}

/// External renderer: spec JSON on stdin, SVG on stdout. Exit status 1
/// means the spec was rejected; anything else non-zero is a crash.
#[derive(Debug, Clone)]
pub struct CommandRenderer {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl Renderer for CommandRenderer {
    fn render(&self, spec: &Value) -> Result<String, MediaError> {
        let input = serde_json::to_vec(spec).expect("JSON values serialize");
        let out = run_tool(&self.program, &self.args, None, &input, self.timeout)?;
        match out.code {
            Some(0) => String::from_utf8(out.stdout).map_err(|_| MediaError::InvalidSvg("output is not UTF-8".into())),
            Some(1) => Err(MediaError::RendererRejectedSpec(out.stderr.trim().to_string())),
            Some(code) => Err(MediaError::RendererCrashed(format!(
                "exit code {code}: {}",
                out.stderr.trim()
            ))),
            None => Err(MediaError::RendererCrashed("terminated by signal".into())),
        }
    }

    fn name(&self) -> &str {
        &self.program
    }
}

const PALETTE: [&str; 10] = [
    "#4c78a8", "#f58518", "#e45756", "#72b7b2", "#54a24b", "#eeca3b", "#b279a2", "#ff9da6", "#9d755d", "#bab0ac",
];

const KNOWN_MARKS: &[&str] = &[
    "bar", "line", "area", "trail", "point", "circle", "square", "tick", "text", "rule", "rect", "arc",
];

/// Deterministic stand-in renderer. It understands single-view and layered
/// specs with inline `data.values`, draws one element per datum (one per
/// series for line, area and arc marks), and rejects fields the data does
/// not have.
#[derive(Debug, Clone)]
pub struct MockRenderer {
    pub width: f64,
    pub height: f64,
}

impl Default for MockRenderer {
    fn default() -> Self {
        Self {
            width: 400.0,
            height: 300.0,
        }
    }
}

struct Layer<'a> {
    view: View<'a>,
    /// Each datum with the top-level rows it corresponds to.
    data: Vec<(&'a Map<String, Value>, Vec<usize>)>,
}

#[derive(Debug)]
enum Scale {
    Linear { min: f64, max: f64, r0: f64, r1: f64 },
    Band { domain: Vec<String>, r0: f64, r1: f64 },
}

impl Scale {
    fn build(values: &[&Value], r0: f64, r1: f64, zero: bool) -> Scale {
        let nums: Option<Vec<f64>> = values.iter().map(|v| v.as_f64()).collect();
        match nums {
            Some(nums) if !nums.is_empty() => {
                let mut min = nums.iter().copied().fold(f64::INFINITY, f64::min);
                let mut max = nums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if zero {
                    min = min.min(0.0);
                    max = max.max(0.0);
                }
                if max - min < 1e-12 {
                    max = min + 1.0;
                }
                Scale::Linear { min, max, r0, r1 }
            }
            _ => {
                let mut domain: Vec<String> = Vec::new();
                for v in values {
                    let t = value_text(v);
                    if !domain.contains(&t) {
                        domain.push(t);
                    }
                }
                Scale::Band { domain, r0, r1 }
            }
        }
    }

    fn map(&self, v: &Value) -> f64 {
        match self {
            Scale::Linear { min, max, r0, r1 } => {
                let x = v.as_f64().unwrap_or(*min);
                r0 + (x - min) / (max - min) * (r1 - r0)
            }
            Scale::Band { domain, r0, r1 } => {
                let t = value_text(v);
                let i = domain.iter().position(|d| *d == t).unwrap_or(0);
                r0 + (i as f64 + 0.5) * self.step() * (r1 - r0).signum()
            }
        }
    }

    fn step(&self) -> f64 {
        match self {
            Scale::Linear { .. } => 0.0,
            Scale::Band { domain, r0, r1 } => (r1 - r0).abs() / domain.len().max(1) as f64,
        }
    }

    fn baseline(&self) -> f64 {
        match self {
            Scale::Linear { min, max, r0, r1 } => {
                let zero = 0.0f64.clamp(*min, *max);
                r0 + (zero - min) / (max - min) * (r1 - r0)
            }
            Scale::Band { r0, .. } => *r0,
        }
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        match self {
            Scale::Linear { min, max, .. } => (0..5)
                .map(|i| {
                    let v = min + (max - min) * i as f64 / 4.0;
                    let v = (v * 100.0).round() / 100.0;
                    (self.map(&Value::from(v)), Cell::Number(v).to_string())
                })
                .collect(),
            Scale::Band { domain, .. } => {
                let every = domain.len().div_ceil(6).max(1);
                domain
                    .iter()
                    .step_by(every)
                    .map(|d| (self.map(&Value::String(d.clone())), d.clone()))
                    .collect()
            }
        }
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n
            .as_f64()
            .map_or_else(|| n.to_string(), |f| Cell::Number(f).to_string()),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn num(v: f64) -> String {
    if v.abs() < 0.005 {
        "0.00".to_string()
    } else {
        format!("{v:.2}")
    }
}

fn rows_attr(rows: &[usize]) -> String {
    rows.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn same_value(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

/// Rows of the top-level data that agree with `datum` on every shared key.
fn matching_rows(datum: &Map<String, Value>, top: &[&Map<String, Value>]) -> Vec<usize> {
    top.iter()
        .enumerate()
        .filter(|(_, row)| {
            let mut shared = 0;
            for (k, v) in datum {
                if let Some(r) = row.get(k) {
                    if !same_value(v, r) {
                        return false;
                    }
                    shared += 1;
                }
            }
            shared > 0
        })
        .map(|(i, _)| i)
        .collect()
}

fn objects(values: Option<&Value>) -> Result<Vec<&Map<String, Value>>, MediaError> {
    let Some(data) = values else { return Ok(Vec::new()) };
    if data.get("url").is_some() {
        return Err(MediaError::RendererRejectedSpec(
            "data loaded from a URL is not supported".into(),
        ));
    }
    let Some(values) = data.get("values") else {
        return Ok(Vec::new());
    };
    let rows = values
        .as_array()
        .ok_or_else(|| MediaError::RendererRejectedSpec("data.values must be a list".into()))?;
    rows.iter()
        .map(|r| {
            r.as_object()
                .ok_or_else(|| MediaError::RendererRejectedSpec("data.values entries must be objects".into()))
        })
        .collect()
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn element(&mut self, depth: usize, tag: &str, attrs: &[(&str, String)], text: Option<&str>) {
        let _ = write!(self.out, "{}<{tag}", "  ".repeat(depth));
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", escape(v));
        }
        match text {
            Some(t) => {
                let _ = writeln!(self.out, ">{}</{tag}>", escape(t));
            }
            None => self.out.push_str("/>\n"),
        }
    }

    fn open(&mut self, depth: usize, attrs: &[(&str, String)]) {
        let _ = write!(self.out, "{}<g", "  ".repeat(depth));
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", escape(v));
        }
        self.out.push_str(">\n");
    }

    fn close(&mut self, depth: usize) {
        let _ = writeln!(self.out, "{}</g>", "  ".repeat(depth));
    }
}

impl Renderer for MockRenderer {
    fn name(&self) -> &str {
        "mock"
    }

    fn render(&self, spec: &Value) -> Result<String, MediaError> {
        let obj = spec
            .as_object()
            .ok_or_else(|| MediaError::RendererRejectedSpec("specification must be an object".into()))?;
        for key in ["hconcat", "vconcat", "concat", "facet", "repeat"] {
            if obj.contains_key(key) {
                return Err(MediaError::RendererRejectedSpec(format!("`{key}` is not supported")));
            }
        }
        let top_data = obj.get("data");
        let top = objects(top_data)?;

        let mut layers = Vec::new();
        for view in vega::views(spec) {
            let mark = view
                .mark_type()
                .ok_or_else(|| MediaError::RendererRejectedSpec(format!("{}: mark has no type", view.path)))?;
            if !KNOWN_MARKS.contains(&mark) {
                return Err(MediaError::RendererRejectedSpec(format!(
                    "{}: unsupported mark `{mark}`",
                    view.path
                )));
            }
            let is_top = match (view.data, top_data) {
                (Some(a), Some(b)) => std::ptr::eq(a, b),
                (None, None) => true,
                _ => false,
            };
            let data: Vec<_> = if is_top {
                top.iter().enumerate().map(|(i, d)| (*d, vec![i])).collect()
            } else {
                objects(view.data)?
                    .into_iter()
                    .map(|d| (d, matching_rows(d, &top)))
                    .collect()
            };
            if view.transform.is_none() && !data.is_empty() {
                for (channel, def) in &view.encoding {
                    if let Some(field) = def.get("field").and_then(Value::as_str) {
                        if !data.iter().any(|(d, _)| d.contains_key(field)) {
                            return Err(MediaError::RendererRejectedSpec(format!(
                                "{}.encoding.{channel}: unknown field \"{field}\"",
                                view.path
                            )));
                        }
                    }
                }
            }
            layers.push(Layer { view, data });
        }
        if layers.is_empty() {
            return Err(MediaError::RendererRejectedSpec("specification has no mark".into()));
        }

        let width = obj
            .get("width")
            .and_then(Value::as_f64)
            .map_or(self.width, |w| w + 150.0);
        let height = obj
            .get("height")
            .and_then(Value::as_f64)
            .map_or(self.height, |h| h + 80.0);
        let (left, top_edge, right, bottom) = (50.0, 40.0, width - 100.0, height - 40.0);

        let channel_values = |channels: &[&str]| -> Vec<&Value> {
            let mut out = Vec::new();
            for layer in &layers {
                if layer.view.mark_type() == Some("arc") {
                    continue;
                }
                for ch in channels {
                    if let Some(field) = layer.view.channel_field(ch) {
                        out.extend(layer.data.iter().filter_map(|(d, _)| d.get(field)));
                    }
                }
            }
            out
        };
        let xs = channel_values(&["x", "x2"]);
        let ys = channel_values(&["y", "y2"]);
        let bar_like = layers
            .iter()
            .any(|l| matches!(l.view.mark_type(), Some("bar" | "area")));
        let x_scale = Scale::build(&xs, left, right, false);
        let y_scale = Scale::build(&ys, bottom, top_edge, bar_like);

        let mut series_domain: Vec<String> = Vec::new();
        for layer in &layers {
            if let Some(field) = layer.view.channel_field("color") {
                for (d, _) in &layer.data {
                    if let Some(v) = d.get(field) {
                        let t = value_text(v);
                        if !series_domain.contains(&t) {
                            series_domain.push(t);
                        }
                    }
                }
            }
        }
        let color_of = |key: Option<&str>| -> String {
            key.and_then(|k| series_domain.iter().position(|d| d == k))
                .map_or(PALETTE[0], |i| PALETTE[i % PALETTE.len()])
                .to_string()
        };

        let mut c = Canvas { out: String::new() };
        let _ = writeln!(
            c.out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" class=\"marks\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
            w = num(width),
            h = num(height)
        );
        c.element(
            1,
            "rect",
            &[
                ("class", "background".into()),
                ("width", num(width)),
                ("height", num(height)),
                ("fill", "white".into()),
            ],
            None,
        );

        if let Some(title) = vega::title_text(spec) {
            c.open(1, &[("class", "mark-group role-title".into())]);
            c.element(
                2,
                "text",
                &[
                    ("x", num(width / 2.0)),
                    ("y", "24.00".into()),
                    ("text-anchor", "middle".into()),
                    ("font-size", "16".into()),
                ],
                Some(&title),
            );
            c.close(1);
        }

        let has_axes = layers.iter().any(|l| {
            l.view.mark_type() != Some("arc")
                && (l.view.channel_field("x").is_some() || l.view.channel_field("y").is_some())
        });
        if has_axes {
            let x_field = layers.iter().find_map(|l| l.view.channel_field("x"));
            let y_field = layers.iter().find_map(|l| l.view.channel_field("y"));
            if !xs.is_empty() {
                c.open(
                    1,
                    &[("class", "mark-group role-axis".into()), ("data-axis", "x".into())],
                );
                c.element(
                    2,
                    "line",
                    &[
                        ("x1", num(left)),
                        ("y1", num(bottom)),
                        ("x2", num(right)),
                        ("y2", num(bottom)),
                        ("stroke", "#888".into()),
                    ],
                    None,
                );
                for (pos, label) in x_scale.ticks() {
                    c.element(
                        2,
                        "text",
                        &[
                            ("x", num(pos)),
                            ("y", num(bottom + 16.0)),
                            ("text-anchor", "middle".into()),
                        ],
                        Some(&label),
                    );
                }
                if let Some(f) = x_field {
                    c.element(
                        2,
                        "text",
                        &[
                            ("class", "axis-title".into()),
                            ("x", num((left + right) / 2.0)),
                            ("y", num(bottom + 32.0)),
                        ],
                        Some(f),
                    );
                }
                c.close(1);
            }
            if !ys.is_empty() {
                c.open(
                    1,
                    &[("class", "mark-group role-axis".into()), ("data-axis", "y".into())],
                );
                c.element(
                    2,
                    "line",
                    &[
                        ("x1", num(left)),
                        ("y1", num(top_edge)),
                        ("x2", num(left)),
                        ("y2", num(bottom)),
                        ("stroke", "#888".into()),
                    ],
                    None,
                );
                for (pos, label) in y_scale.ticks() {
                    c.element(
                        2,
                        "text",
                        &[("x", num(left - 6.0)), ("y", num(pos)), ("text-anchor", "end".into())],
                        Some(&label),
                    );
                }
                if let Some(f) = y_field {
                    c.element(
                        2,
                        "text",
                        &[
                            ("class", "axis-title".into()),
                            ("x", num(12.0)),
                            ("y", num((top_edge + bottom) / 2.0)),
                        ],
                        Some(f),
                    );
                }
                c.close(1);
            }
        }

        for (li, layer) in layers.iter().enumerate() {
            let view = &layer.view;
            let mark = view.mark_type().unwrap_or_default();
            let series_field = view.channel_field("color").or_else(|| view.channel_field("detail"));
            let key_of = |d: &Map<String, Value>| series_field.and_then(|f| d.get(f)).map(value_text);
            let pos = |d: &Map<String, Value>, ch: &str, scale: &Scale, fallback: f64| {
                view.channel_field(ch)
                    .and_then(|f| d.get(f))
                    .map_or(fallback, |v| scale.map(v))
            };

            match mark {
                "line" | "area" | "trail" | "arc" => {
                    // one element per series, in order of first appearance
                    let mut groups: Vec<(Option<String>, Vec<usize>)> = Vec::new();
                    for (i, (d, _)) in layer.data.iter().enumerate() {
                        let k = key_of(d);
                        match groups.iter_mut().find(|(g, _)| *g == k) {
                            Some((_, members)) => members.push(i),
                            None => groups.push((k, vec![i])),
                        }
                    }
                    c.open(
                        1,
                        &[
                            ("class", format!("mark-{mark} role-mark")),
                            ("data-layer", li.to_string()),
                        ],
                    );
                    let theta_total: f64 = if mark == "arc" {
                        layer
                            .data
                            .iter()
                            .map(|(d, _)| {
                                view.channel_field("theta")
                                    .and_then(|f| d.get(f))
                                    .and_then(Value::as_f64)
                                    .unwrap_or(1.0)
                            })
                            .sum::<f64>()
                            .max(1e-12)
                    } else {
                        0.0
                    };
                    let mut angle = 0.0f64;
                    for (key, members) in &groups {
                        let rows: BTreeSet<usize> =
                            members.iter().flat_map(|&i| layer.data[i].1.iter().copied()).collect();
                        let rows: Vec<usize> = rows.into_iter().collect();
                        let color = color_of(key.as_deref());
                        let d_attr = if mark == "arc" {
                            let share: f64 = members
                                .iter()
                                .map(|&i| {
                                    view.channel_field("theta")
                                        .and_then(|f| layer.data[i].0.get(f))
                                        .and_then(Value::as_f64)
                                        .unwrap_or(1.0)
                                })
                                .sum::<f64>()
                                / theta_total;
                            let (cx, cy) = ((left + right) / 2.0, (top_edge + bottom) / 2.0);
                            let r = ((right - left).min(bottom - top_edge)) / 2.0;
                            let a0 = angle;
                            let a1 = angle + share * std::f64::consts::TAU;
                            angle = a1;
                            let large = if a1 - a0 > std::f64::consts::PI { 1 } else { 0 };
                            format!(
                                "M{},{}L{},{}A{},{} 0 {large} 1 {},{}Z",
                                num(cx),
                                num(cy),
                                num(cx + r * a0.sin()),
                                num(cy - r * a0.cos()),
                                num(r),
                                num(r),
                                num(cx + r * a1.sin()),
                                num(cy - r * a1.cos())
                            )
                        } else {
                            let pts: Vec<(f64, f64)> = members
                                .iter()
                                .map(|&i| {
                                    let d = layer.data[i].0;
                                    (pos(d, "x", &x_scale, left), pos(d, "y", &y_scale, bottom))
                                })
                                .collect();
                            let mut s = String::new();
                            for (j, (x, y)) in pts.iter().enumerate() {
                                let _ = write!(s, "{}{},{}", if j == 0 { 'M' } else { 'L' }, num(*x), num(*y));
                            }
                            if mark == "area" {
                                if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
                                    let base = y_scale.baseline();
                                    let _ = write!(s, "L{},{}L{},{}Z", num(last.0), num(base), num(first.0), num(base));
                                }
                            }
                            s
                        };
                        let mut attrs = vec![("d", d_attr), ("data-row", rows_attr(&rows))];
                        if let Some(k) = key {
                            attrs.push(("data-series", k.clone()));
                        }
                        if mark == "line" || mark == "trail" {
                            attrs.push(("fill", "none".into()));
                            attrs.push(("stroke", color));
                            attrs.push(("stroke-width", "2".into()));
                        } else {
                            attrs.push(("fill", color));
                        }
                        c.element(2, "path", &attrs, None);
                    }
                    c.close(1);
                    if mark == "line" && view.has_inline_points() {
                        c.open(
                            1,
                            &[
                                ("class", "mark-symbol role-mark".into()),
                                ("data-layer", li.to_string()),
                            ],
                        );
                        for (d, rows) in &layer.data {
                            let mut attrs = vec![
                                ("cx", num(pos(d, "x", &x_scale, left))),
                                ("cy", num(pos(d, "y", &y_scale, bottom))),
                                ("r", "3.00".into()),
                                ("fill", color_of(key_of(d).as_deref())),
                                ("data-row", rows_attr(rows)),
                            ];
                            if let Some(k) = key_of(d) {
                                attrs.push(("data-series", k));
                            }
                            c.element(2, "circle", &attrs, None);
                        }
                        c.close(1);
                    }
                }
                _ => {
                    c.open(
                        1,
                        &[
                            ("class", format!("mark-{mark} role-mark")),
                            ("data-layer", li.to_string()),
                        ],
                    );
                    for (d, rows) in &layer.data {
                        let x = pos(d, "x", &x_scale, (left + right) / 2.0);
                        let y = pos(d, "y", &y_scale, (top_edge + bottom) / 2.0);
                        let key = key_of(d);
                        let color = color_of(key.as_deref());
                        let mut attrs: Vec<(&str, String)> = Vec::new();
                        let mut text = None;
                        let tag = match mark {
                            "bar" | "rect" | "square" => {
                                let (rx, ry, w, h) = match (&x_scale, &y_scale, mark) {
                                    (Scale::Band { .. }, Scale::Linear { .. }, "bar") => {
                                        let bw = x_scale.step() * 0.8;
                                        let base = y_scale.baseline();
                                        (x - bw / 2.0, y.min(base), bw, (base - y).abs())
                                    }
                                    (Scale::Linear { .. }, Scale::Band { .. }, "bar") => {
                                        let bh = y_scale.step() * 0.8;
                                        let base = x_scale.baseline();
                                        (x.min(base), y - bh / 2.0, (x - base).abs(), bh)
                                    }
                                    _ => (x - 3.0, y - 3.0, 6.0, 6.0),
                                };
                                attrs.extend([
                                    ("x", num(rx)),
                                    ("y", num(ry)),
                                    ("width", num(w)),
                                    ("height", num(h)),
                                    ("fill", color),
                                ]);
                                "rect"
                            }
                            "point" | "circle" => {
                                let filled = mark == "circle"
                                    || view.mark.get("filled").and_then(Value::as_bool).unwrap_or(false);
                                attrs.extend([("cx", num(x)), ("cy", num(y)), ("r", "4.00".into())]);
                                if filled {
                                    attrs.push(("fill", color));
                                } else {
                                    attrs.extend([("fill", "none".into()), ("stroke", color)]);
                                }
                                "circle"
                            }
                            "text" => {
                                let dx = view.mark.get("dx").and_then(Value::as_f64).unwrap_or(0.0);
                                let dy = view.mark.get("dy").and_then(Value::as_f64).unwrap_or(0.0);
                                attrs.extend([("x", num(x + dx)), ("y", num(y + dy)), ("fill", "#333".into())]);
                                let enc = view.encoding.get("text");
                                text = Some(
                                    enc.and_then(|e| e.get("field"))
                                        .and_then(Value::as_str)
                                        .and_then(|f| d.get(f))
                                        .map(value_text)
                                        .or_else(|| enc.and_then(|e| e.get("value")).map(value_text))
                                        .or_else(|| view.mark.get("text").map(value_text))
                                        .unwrap_or_default(),
                                );
                                "text"
                            }
                            "rule" | "tick" => {
                                let has_x = view.channel_field("x").is_some();
                                let has_y = view.channel_field("y").is_some();
                                let (x1, y1, x2, y2) = if mark == "tick" {
                                    (x - 5.0, y, x + 5.0, y)
                                } else if view.channel_field("x2").is_some() || view.channel_field("y2").is_some() {
                                    (x, y, pos(d, "x2", &x_scale, x), pos(d, "y2", &y_scale, y))
                                } else if has_y && !has_x {
                                    (left, y, right, y)
                                } else if has_x && !has_y {
                                    (x, top_edge, x, bottom)
                                } else {
                                    (x - 5.0, y, x + 5.0, y)
                                };
                                attrs.extend([
                                    ("x1", num(x1)),
                                    ("y1", num(y1)),
                                    ("x2", num(x2)),
                                    ("y2", num(y2)),
                                    ("stroke", color),
                                ]);
                                "line"
                            }
                            _ => unreachable!("mark types are checked above"),
                        };
                        attrs.push(("data-row", rows_attr(rows)));
                        if let Some(k) = key {
                            attrs.push(("data-series", k));
                        }
                        c.element(2, tag, &attrs, text.as_deref());
                    }
                    c.close(1);
                }
            }
        }

        if !series_domain.is_empty() {
            c.open(1, &[("class", "mark-group role-legend".into())]);
            for (i, key) in series_domain.iter().enumerate() {
                let y = top_edge + 16.0 * i as f64;
                c.open(2, &[("class", "legend-entry".into())]);
                c.element(
                    3,
                    "circle",
                    &[
                        ("cx", num(right + 16.0)),
                        ("cy", num(y)),
                        ("r", "5.00".into()),
                        ("fill", PALETTE[i % PALETTE.len()].into()),
                    ],
                    None,
                );
                c.element(3, "text", &[("x", num(right + 26.0)), ("y", num(y + 4.0))], Some(key));
                c.close(2);
            }
            c.close(1);
        }
        c.out.push_str("</svg>\n");
        Ok(c.out)
    }
}
