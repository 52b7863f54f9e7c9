//! Rendered SVG as an immutable element tree, plus the mark index that
//! binds elements to table rows and the base-versus-annotated diff.

mod binding;
mod diff;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

pub use binding::{
    index_marks, index_marks_with_annotations, resolve_targets, BindingError, IndexedElement, MarkIndex, Role,
};
pub use diff::{diff_annotations, match_annotation_directives, removed_count, AnnotationAssignment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SvgError {
    #[error("XML parse error at {position}: {message}")]
    XmlParseError { position: String, message: String },
    #[error("document root is <{0}>, not <svg>")]
    NotSvg(String),
    #[error("duplicate element id `{0}`")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgElement {
    pub id: String,
    pub tag: String,
    pub classes: Vec<String>,
    /// Attributes in source order, excluding `id`.
    pub attributes: Vec<(String, String)>,
    /// Concatenated direct text content.
    pub text: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl SvgElement {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes.iter().any(|c| c == class)
    }
}

/// Element tree in document order; index 0 is the `<svg>` root. Elements
/// without an `id` get a positional one (`e<n>`).
#[derive(Debug, Clone, PartialEq)]
pub struct SvgDoc {
    elements: Vec<SvgElement>,
    by_id: HashMap<String, usize>,
}

const SVG_NS: &str = "http://www.w3.org/2000/svg";

pub fn parse_svg(raw: &str) -> Result<SvgDoc, SvgError> {
    let opts = roxmltree::ParsingOptions {
        allow_dtd: true,
        ..Default::default()
    };
    let xml = roxmltree::Document::parse_with_options(raw, opts).map_err(|e| SvgError::XmlParseError {
        position: e.pos().to_string(),
        message: e.to_string(),
    })?;
    let root = xml.root_element();
    if root.tag_name().name() != "svg" {
        return Err(SvgError::NotSvg(root.tag_name().name().to_string()));
    }

    let mut elements = Vec::new();
    let mut explicit: Vec<Option<String>> = Vec::new();
    let mut stack = vec![(root, None::<usize>)];
    while let Some((node, parent)) = stack.pop() {
        let idx = elements.len();
        let mut attributes = Vec::new();
        let mut id = None;
        let mut classes = Vec::new();
        for a in node.attributes() {
            let name = match a.namespace() {
                Some(ns) if ns != SVG_NS => match node.lookup_prefix(ns) {
                    Some(prefix) => format!("{prefix}:{}", a.name()),
                    None => a.name().to_string(),
                },
                _ => a.name().to_string(),
            };
            if name == "id" {
                id = Some(a.value().to_string());
                continue;
            }
            if name == "class" {
                classes = a.value().split_whitespace().map(str::to_string).collect();
            }
            attributes.push((name, a.value().to_string()));
        }
        let mut text: String = node
            .children()
            .filter(|c| c.is_text())
            .filter_map(|c| c.text())
            .collect();
        // indentation between child elements is not content
        if text.trim().is_empty() {
            text.clear();
        }
        elements.push(SvgElement {
            id: String::new(),
            tag: node.tag_name().name().to_string(),
            classes,
            attributes,
            text,
            parent,
            children: Vec::new(),
        });
        explicit.push(id);
        if let Some(p) = parent {
            elements[p].children.push(idx);
        }
        let kids: Vec<_> = node.children().filter(|c| c.is_element()).collect();
        for child in kids.into_iter().rev() {
            stack.push((child, Some(idx)));
        }
    }

    let mut used = HashSet::new();
    for id in explicit.iter().flatten() {
        if !used.insert(id.clone()) {
            return Err(SvgError::DuplicateId(id.clone()));
        }
    }
    let mut by_id = HashMap::new();
    for (idx, id) in explicit.into_iter().enumerate() {
        let id = id.unwrap_or_else(|| {
            let mut candidate = format!("e{idx}");
            while used.contains(&candidate) {
                candidate.push('_');
            }
            used.insert(candidate.clone());
            candidate
        });
        by_id.insert(id.clone(), idx);
        elements[idx].id = id;
    }
    Ok(SvgDoc { elements, by_id })
}

impl SvgDoc {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn root(&self) -> &SvgElement {
        &self.elements[0]
    }

    pub fn get(&self, idx: usize) -> &SvgElement {
        &self.elements[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn element(&self, id: &str) -> Option<&SvgElement> {
        self.index_of(id).map(|i| &self.elements[i])
    }

    /// Elements in document order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &SvgElement)> {
        self.elements.iter().enumerate()
    }

    /// Ancestors of `idx`, nearest first.
    pub fn ancestors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.elements[idx].parent, move |&i| self.elements[i].parent)
    }

    pub fn width_height(&self) -> Option<(f64, f64)> {
        let root = self.root();
        let w = root.attr("width").and_then(parse_length);
        let h = root.attr("height").and_then(parse_length);
        match (w, h) {
            (Some(w), Some(h)) => Some((w, h)),
            _ => root.attr("viewBox").and_then(|vb| {
                let nums: Vec<f64> = vb
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .filter_map(|s| s.parse().ok())
                    .collect();
                (nums.len() == 4).then(|| (nums[2], nums[3]))
            }),
        }
    }

    /// Serializes the tree with every id written out, so animation output
    /// can address elements by id.
    pub fn to_svg_string(&self) -> String {
        let mut out = String::new();
        self.write_element(0, 0, &mut out);
        out
    }

    pub(crate) fn write_element(&self, idx: usize, depth: usize, out: &mut String) {
        self.write_element_with(idx, depth, out, &|_| None);
    }

    /// Like `to_svg_string`, with `extra_class(id)` appended to class lists.
    pub(crate) fn write_element_with(
        &self,
        idx: usize,
        depth: usize,
        out: &mut String,
        extra_class: &dyn Fn(&str) -> Option<&'static str>,
    ) {
        let el = &self.elements[idx];
        let indent = "  ".repeat(depth);
        let _ = write!(out, "{indent}<{} id=\"{}\"", el.tag, escape(&el.id));
        if idx == 0 && el.attr("xmlns").is_none() {
            let _ = write!(out, " xmlns=\"{SVG_NS}\"");
        }
        let extra = extra_class(&el.id);
        let mut wrote_class = false;
        for (k, v) in &el.attributes {
            if k == "class" {
                if let Some(x) = extra {
                    let _ = write!(out, " class=\"{} {x}\"", escape(v));
                    wrote_class = true;
                    continue;
                }
            }
            let _ = write!(out, " {k}=\"{}\"", escape(v));
        }
        if let (Some(x), false) = (extra, wrote_class) {
            let _ = write!(out, " class=\"{x}\"");
        }
        if el.children.is_empty() && el.text.is_empty() {
            out.push_str("/>\n");
            return;
        }
        out.push('>');
        out.push_str(&escape(&el.text));
        if !el.children.is_empty() {
            out.push('\n');
            for &c in &el.children {
                self.write_element_with(c, depth + 1, out, extra_class);
            }
            out.push_str(&indent);
        }
        let _ = writeln!(out, "</{}>", el.tag);
    }

    /// Absolute anchor point of an element, from its own geometry attributes
    /// plus ancestor `translate` transforms.
    pub fn position(&self, idx: usize) -> Option<(f64, f64)> {
        let el = &self.elements[idx];
        let num = |k: &str| el.attr(k).and_then(parse_length);
        let own = if let (Some(x), Some(y)) = (num("cx"), num("cy")) {
            Some((x, y))
        } else if let (Some(x1), Some(y1), Some(x2), Some(y2)) = (num("x1"), num("y1"), num("x2"), num("y2")) {
            Some(((x1 + x2) / 2.0, (y1 + y2) / 2.0))
        } else if let (Some(x), Some(y)) = (num("x"), num("y")) {
            let w = num("width").unwrap_or(0.0);
            let h = num("height").unwrap_or(0.0);
            Some((x + w / 2.0, y + h / 2.0))
        } else {
            el.attr("d").and_then(first_path_point)
        };
        let own_translate = el.attr("transform").and_then(parse_translate);
        let base = match (own, own_translate) {
            (Some((x, y)), Some((tx, ty))) => (x + tx, y + ty),
            (Some(p), None) => p,
            (None, Some(t)) => t,
            (None, None) => return None,
        };
        let (mut x, mut y) = base;
        for a in self.ancestors(idx) {
            if let Some((tx, ty)) = self.elements[a].attr("transform").and_then(parse_translate) {
                x += tx;
                y += ty;
            }
        }
        Some((x, y))
    }
}

fn parse_length(s: &str) -> Option<f64> {
    s.trim().trim_end_matches("px").parse().ok()
}

fn parse_translate(s: &str) -> Option<(f64, f64)> {
    let start = s.find("translate(")? + "translate(".len();
    let end = s[start..].find(')')? + start;
    let nums: Vec<f64> = s[start..end]
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .filter_map(|p| p.parse().ok())
        .collect();
    match nums.as_slice() {
        [x] => Some((*x, 0.0)),
        [x, y, ..] => Some((*x, *y)),
        _ => None,
    }
}

fn first_path_point(d: &str) -> Option<(f64, f64)> {
    let rest = d.trim_start().strip_prefix(['M', 'm'])?;
    let nums: Vec<f64> = rest
        .split(|c: char| c == ',' || c.is_whitespace() || c.is_ascii_alphabetic())
        .filter(|p| !p.is_empty())
        .take(2)
        .filter_map(|p| p.parse().ok())
        .collect();
    (nums.len() == 2).then(|| (nums[0], nums[1]))
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}
