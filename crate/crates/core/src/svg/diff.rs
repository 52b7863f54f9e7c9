use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::binding::{MarkIndex, Role};
use super::SvgDoc;
use crate::model::AnnotationDirective;
use crate::report::ValidationReport;

/// Layout-dependent attributes, ignored when matching elements across
/// renderings.
const GEOMETRY: &[&str] = &[
    "x",
    "y",
    "x1",
    "x2",
    "y1",
    "y2",
    "cx",
    "cy",
    "r",
    "rx",
    "ry",
    "d",
    "transform",
    "width",
    "height",
    "points",
    "viewBox",
];

const ROLE_TOKENS: &[&str] = &["role-mark", "role-axis", "role-legend", "role-title"];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ElementKey {
    tag: String,
    role_path: Vec<String>,
    attributes: Vec<(String, String)>,
    text: String,
}

fn key(doc: &SvgDoc, idx: usize) -> ElementKey {
    let el = doc.get(idx);
    let mut role_path: Vec<String> = doc
        .ancestors(idx)
        .filter_map(|a| {
            let anc = doc.get(a);
            let roles: Vec<&str> = anc
                .classes
                .iter()
                .map(String::as_str)
                .filter(|c| ROLE_TOKENS.contains(c))
                .collect();
            (!roles.is_empty()).then(|| format!("{}.{}", anc.tag, roles.join(".")))
        })
        .collect();
    role_path.reverse();
    let mut attributes: Vec<(String, String)> = el
        .attributes
        .iter()
        .filter(|(k, _)| !GEOMETRY.contains(&k.as_str()))
        .cloned()
        .collect();
    attributes.sort();
    ElementKey {
        tag: el.tag.clone(),
        role_path,
        attributes,
        text: el.text.trim().to_string(),
    }
}

fn key_counts(doc: &SvgDoc) -> HashMap<ElementKey, usize> {
    let mut counts = HashMap::new();
    for (idx, _) in doc.iter() {
        *counts.entry(key(doc, idx)).or_insert(0) += 1;
    }
    counts
}

/// Ids of elements in `annotated` with no matching counterpart in `base`,
/// in document order. Keys ignore geometry and ids, so re-layout and
/// reordering do not produce false positives. When a key occurs more often
/// in `annotated`, the later occurrences are reported.
pub fn diff_annotations(base: &SvgDoc, annotated: &SvgDoc) -> Vec<String> {
    let mut available = key_counts(base);
    let mut out = Vec::new();
    for (idx, el) in annotated.iter() {
        let k = key(annotated, idx);
        match available.get_mut(&k) {
            Some(n) if *n > 0 => *n -= 1,
            _ => out.push(el.id.clone()),
        }
    }
    out
}

/// Number of base elements with no counterpart in `annotated`. Non-zero
/// means the annotated chart changed base marks rather than adding layers.
pub fn removed_count(base: &SvgDoc, annotated: &SvgDoc) -> usize {
    let mut available = key_counts(annotated);
    let mut missing = 0;
    for (idx, _) in base.iter() {
        match available.get_mut(&key(base, idx)) {
            Some(n) if *n > 0 => *n -= 1,
            _ => missing += 1,
        }
    }
    missing
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnnotationAssignment {
    /// Element ids per annotation directive, parallel to the directive list.
    pub elements: Vec<BTreeSet<String>>,
    pub report: ValidationReport,
}

/// Assigns each annotation element to one directive: by shared data rows
/// first, then by distance to the marks of each directive's rows, then to
/// the earliest directive.
pub fn match_annotation_directives(
    annotation_ids: &[String],
    directives: &[AnnotationDirective],
    index: &MarkIndex,
    doc: &SvgDoc,
) -> AnnotationAssignment {
    let mut out = AnnotationAssignment {
        elements: vec![BTreeSet::new(); directives.len()],
        report: ValidationReport::default(),
    };
    if directives.is_empty() {
        if !annotation_ids.is_empty() {
            out.report.advisory(
                "unassigned-annotation",
                "",
                format!(
                    "{} annotation element(s) have no annotation directive",
                    annotation_ids.len()
                ),
            );
        }
        return out;
    }

    // anchor points of the marks bound to each directive's rows
    let anchors: Vec<Vec<(f64, f64)>> = directives
        .iter()
        .map(|d| {
            let rows: BTreeSet<usize> = d.index.iter().copied().collect();
            index
                .elements()
                .iter()
                .filter(|e| e.roles.contains(&Role::Mark) && !e.data_rows.is_disjoint(&rows))
                .filter_map(|e| doc.index_of(&e.id).and_then(|i| doc.position(i)))
                .collect()
        })
        .collect();

    for id in annotation_ids {
        let rows = index.get(id).map(|e| e.data_rows.clone()).unwrap_or_default();
        let by_rows = (!rows.is_empty())
            .then(|| {
                directives
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (d.index.iter().filter(|r| rows.contains(r)).count(), i))
                    .filter(|(n, _)| *n > 0)
                    .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
                    .map(|(_, i)| i)
            })
            .flatten();
        let by_position = || {
            let pos = doc.index_of(id).and_then(|i| doc.position(i))?;
            anchors
                .iter()
                .enumerate()
                .filter_map(|(i, pts)| {
                    pts.iter()
                        .map(|p| (p.0 - pos.0).hypot(p.1 - pos.1))
                        .min_by(f64::total_cmp)
                        .map(|d| (d, i))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, i)| i)
        };
        let chosen = by_rows.or_else(by_position).unwrap_or(0);
        out.elements[chosen].insert(id.clone());
    }

    for (i, set) in out.elements.iter().enumerate() {
        if set.is_empty() {
            out.report.advisory(
                "empty-annotation",
                format!("Annotated_Narration_for_Annotation[{i}]"),
                "no annotation element was matched to this directive",
            );
        }
    }
    out
}
