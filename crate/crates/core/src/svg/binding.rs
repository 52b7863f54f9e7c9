use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use super::SvgDoc;
use crate::model::{AnimationDirective, Cell, DataTable, VisualizationSpec};
use crate::vega;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Mark,
    Axis,
    Legend,
    Title,
    Annotation,
}

impl Role {
    fn group_class(self) -> &'static str {
        match self {
            Role::Mark => "role-mark",
            Role::Axis => "role-axis",
            Role::Legend => "role-legend",
            Role::Title => "role-title",
            Role::Annotation => "role-annotation",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BindingError {
    #[error("mark element `{0}` carries no data-row metadata")]
    UnboundMark(String),
    #[error("mark element `{id}` is bound to row {row}, but the table has {row_count} rows")]
    RowOutOfRange { id: String, row: usize, row_count: usize },
    #[error("target \"{target}\" (index {index:?}) resolves to no elements")]
    UnresolvedTarget { target: String, index: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexedElement {
    pub id: String,
    pub roles: BTreeSet<Role>,
    pub data_rows: BTreeSet<usize>,
    pub series_key: Option<String>,
}

/// Elements bound to table rows and chart structure, in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MarkIndex {
    elements: Vec<IndexedElement>,
    #[serde(skip)]
    positions: BTreeMap<String, usize>,
}

impl MarkIndex {
    pub fn elements(&self) -> &[IndexedElement] {
        &self.elements
    }

    pub fn get(&self, id: &str) -> Option<&IndexedElement> {
        self.positions.get(id).map(|&i| &self.elements[i])
    }

    pub fn ids_with_role(&self, role: Role) -> impl Iterator<Item = &str> {
        self.elements
            .iter()
            .filter(move |e| e.roles.contains(&role))
            .map(|e| e.id.as_str())
    }

    pub fn mark_ids(&self) -> Vec<String> {
        self.ids_with_role(Role::Mark).map(str::to_string).collect()
    }

    pub fn series_keys(&self) -> BTreeSet<&str> {
        self.elements
            .iter()
            .filter(|e| e.roles.contains(&Role::Mark))
            .filter_map(|e| e.series_key.as_deref())
            .collect()
    }

    fn push(&mut self, element: IndexedElement) {
        self.positions.insert(element.id.clone(), self.elements.len());
        self.elements.push(element);
    }
}

pub fn index_marks(svg: &SvgDoc, spec: &VisualizationSpec, table: &DataTable) -> Result<MarkIndex, BindingError> {
    index_marks_with_annotations(svg, spec, table, &[])
}

/// Like `index_marks`, but `annotation_ids` (from the base/annotated diff)
/// take the annotation role instead of any structural one.
pub fn index_marks_with_annotations(
    svg: &SvgDoc,
    spec: &VisualizationSpec,
    table: &DataTable,
    annotation_ids: &[String],
) -> Result<MarkIndex, BindingError> {
    let annotations: HashSet<&str> = annotation_ids.iter().map(String::as_str).collect();
    let series_field = series_field(spec);
    let mut index = MarkIndex::default();

    for (_, el) in svg.iter() {
        let in_mark_group = el
            .parent
            .is_some_and(|p| svg.get(p).has_class(Role::Mark.group_class()));
        let mut roles = BTreeSet::new();
        let mut data_rows = BTreeSet::new();
        let mut series_key = None;

        if in_mark_group {
            let raw = el
                .attr("data-row")
                .ok_or_else(|| BindingError::UnboundMark(el.id.clone()))?;
            for part in raw.split(';').map(str::trim).filter(|p| !p.is_empty()) {
                let row: usize = part.parse().map_err(|_| BindingError::UnboundMark(el.id.clone()))?;
                if row >= table.row_count() {
                    return Err(BindingError::RowOutOfRange {
                        id: el.id.clone(),
                        row,
                        row_count: table.row_count(),
                    });
                }
                data_rows.insert(row);
            }
            series_key = el
                .attr("data-series")
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .or_else(|| shared_value(table, series_field.as_deref(), &data_rows));
            roles.insert(Role::Mark);
        }
        for role in [Role::Axis, Role::Legend, Role::Title] {
            if el.has_class(role.group_class()) {
                roles.insert(role);
            }
        }
        if annotations.contains(el.id.as_str()) {
            roles.clear();
            roles.insert(Role::Annotation);
        }
        if roles.is_empty() {
            continue;
        }
        index.push(IndexedElement {
            id: el.id.clone(),
            roles,
            data_rows,
            series_key,
        });
    }
    Ok(index)
}

fn series_field(spec: &VisualizationSpec) -> Option<String> {
    vega::views(&spec.spec).iter().find_map(|v| {
        v.channel_field("color")
            .or_else(|| v.channel_field("detail"))
            .map(str::to_string)
    })
}

fn shared_value(table: &DataTable, field: Option<&str>, rows: &BTreeSet<usize>) -> Option<String> {
    let column = table.column(field?)?;
    let mut values = rows.iter().map(|&r| &column.values[r]);
    let first = values.next()?;
    if matches!(first, Cell::Null) || values.any(|v| v != first) {
        return None;
    }
    Some(first.to_string())
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

const ALL_WORDS: &[&str] = &["all", "every", "everything", "entire", "whole"];
const MARK_WORDS: &[&str] = &["lines", "bars", "points", "dots", "marks", "sectors", "slices"];
/// Select every mark only when no structural keyword qualifies them
/// ("the chart" vs "the chart title").
const GENERIC_WORDS: &[&str] = &["chart", "data"];

/// Element ids a directive animates. A non-empty row index selects the
/// marks bound to those rows; otherwise the target text is matched against
/// series keys, falling back to "all ..." phrases. Axis, legend and title
/// keywords always add those structural elements.
pub fn resolve_targets(directive: &AnimationDirective, index: &MarkIndex) -> Result<BTreeSet<String>, BindingError> {
    let mut out = BTreeSet::new();
    let target = words(&directive.target);
    let has = |options: &[&str]| target.iter().any(|w| options.contains(&w.as_str()));

    let mut structural = false;
    for (role, keywords) in [
        (Role::Axis, &["axis", "axes"][..]),
        (Role::Legend, &["legend", "legends"][..]),
        (Role::Title, &["title"][..]),
    ] {
        if has(keywords) {
            structural = true;
            out.extend(index.ids_with_role(role).map(str::to_string));
        }
    }

    if !directive.index.is_empty() {
        let wanted: BTreeSet<usize> = directive.index.iter().copied().collect();
        for e in index.elements() {
            if e.roles.contains(&Role::Mark) && !e.data_rows.is_disjoint(&wanted) {
                out.insert(e.id.clone());
            }
        }
    } else {
        let mut matched = false;
        for e in index.elements() {
            if !e.roles.contains(&Role::Mark) {
                continue;
            }
            if let Some(key) = &e.series_key {
                if contains_run(&target, &words(key)) {
                    out.insert(e.id.clone());
                    matched = true;
                }
            }
        }
        if !matched && (has(ALL_WORDS) || has(MARK_WORDS) || (!structural && has(GENERIC_WORDS))) {
            out.extend(index.mark_ids());
        }
    }

    if out.is_empty() {
        return Err(BindingError::UnresolvedTarget {
            target: directive.target.clone(),
            index: directive.index.clone(),
        });
    }
    Ok(out)
}
