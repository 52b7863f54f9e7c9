//! The data-video-designer role: animation directives anchored in the
//! narration, plus an annotated copy of the chart.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use crate::agent::{extract_json, repair_loop, ChatSession, RepairReport};
use crate::analyst::{AgentConfig, AgentError};
use crate::ingest::{render_table_text, DEFAULT_PROMPT_ROWS};
use crate::model::{
    AnimationCategory, AnimationDirective, AnimationType, AnnotationDirective, AnnotationType, DataTable,
    DesignerOutput, VisualizationSpec,
};
use crate::prompt::{render, PromptText, TemplateId};
use crate::report::{ContractError, ValidationReport, Violation};
use crate::schema;
use crate::svg::{resolve_targets, MarkIndex};
use crate::timeline::{locate_in_order, locate_span, Span};
use crate::vega;

/// Text annotations should stay under this many words.
pub const MAX_ANNOTATION_WORDS: usize = 6;

const ANIMATIONS: &str = "Annotated_Narration_for_Animation";
const ANNOTATIONS: &str = "Annotated_Narration_for_Annotation";

pub fn build_designer_prompt(vis: &VisualizationSpec, narration: &str, table: &DataTable) -> PromptText {
    build_designer_prompt_with(vis, narration, table, Some(DEFAULT_PROMPT_ROWS))
}

pub fn build_designer_prompt_with(
    vis: &VisualizationSpec,
    narration: &str,
    table: &DataTable,
    max_rows: Option<usize>,
) -> PromptText {
    let spec = serde_json::to_string(&vis.spec).expect("JSON values serialize");
    let table_text = render_table_text(table, max_rows);
    render(
        TemplateId::Designer,
        &[
            ("visualization", &spec),
            ("narration", narration),
            ("table", &table_text),
        ],
    )
    .expect("designer template placeholders are fixed")
}

fn non_empty_string<'a>(
    obj: &'a serde_json::Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'a str, ContractError> {
    let s = schema::string(obj, key, path)?;
    if s.trim().is_empty() {
        return Err(ContractError::schema(schema::join(path, key), "must not be empty"));
    }
    Ok(s)
}

fn optional_string(obj: &serde_json::Map<String, Value>, key: &str, path: &str) -> Result<String, ContractError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(String::new()),
        Some(_) => Ok(schema::string(obj, key, path)?.to_string()),
    }
}

pub fn parse_designer_response(raw: &str, table: &DataTable) -> Result<DesignerOutput, ContractError> {
    let value = extract_json(raw)?;
    let obj = schema::as_object(&value, "$")?;
    for key in ["Annotated_Visualization", ANIMATIONS, ANNOTATIONS] {
        schema::field(obj, key, "")?;
    }
    let annotated = schema::field(obj, "Annotated_Visualization", "")?;
    schema::as_object(annotated, "Annotated_Visualization")?;

    let mut animation_directives = Vec::new();
    for (i, item) in schema::array(obj, ANIMATIONS, "")?.iter().enumerate() {
        let path = format!("{ANIMATIONS}[{i}]");
        let item = schema::as_object(item, &path)?;
        animation_directives.push(AnimationDirective {
            animation: AnimationType::parse(schema::string(item, "animation", &path)?)?,
            narration: non_empty_string(item, "narration", &path)?.to_string(),
            target: schema::string(item, "target", &path)?.to_string(),
            index: schema::row_indices(item, "index", &path, table.row_count())?,
            explanation: optional_string(item, "explanation", &path)?,
        });
    }

    let mut annotation_directives = Vec::new();
    for (i, item) in schema::array(obj, ANNOTATIONS, "")?.iter().enumerate() {
        let path = format!("{ANNOTATIONS}[{i}]");
        let item = schema::as_object(item, &path)?;
        let raw_types = schema::array(item, "type", &path)?;
        // the prompt asks for items with no type to be left out
        if raw_types.is_empty() {
            continue;
        }
        let mut types = Vec::with_capacity(raw_types.len());
        for (j, t) in raw_types.iter().enumerate() {
            let name = t.as_str().ok_or_else(|| {
                ContractError::schema(format!("{path}.type[{j}]"), "annotation type must be a string")
            })?;
            types.push(AnnotationType::parse(name)?);
        }
        annotation_directives.push(AnnotationDirective {
            types,
            description: optional_string(item, "description", &path)?,
            index: schema::row_indices(item, "index", &path, table.row_count())?,
            nar: non_empty_string(item, "nar", &path)?.to_string(),
        });
    }

    Ok(DesignerOutput {
        annotated_visualization: annotated.clone(),
        animation_directives,
        annotation_directives,
    })
}

/// Drops repeated (animation, segment, target) directives, keeping the first.
pub fn collapse_duplicates(output: &mut DesignerOutput) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    let mut kept = Vec::with_capacity(output.animation_directives.len());
    for (i, d) in output.animation_directives.drain(..).enumerate() {
        let key = (
            d.animation,
            d.narration.split_whitespace().collect::<Vec<_>>().join(" "),
            d.target.trim().to_lowercase(),
        );
        if seen.insert(key) {
            kept.push(d);
        } else {
            report.advisory(
                "duplicate-directive",
                format!("{ANIMATIONS}[{i}]"),
                format!("duplicate {} on \"{}\" was dropped", d.animation, d.narration),
            );
        }
    }
    output.animation_directives = kept;
    report
}

/// Resolved element set per directive, or why it could not be resolved.
pub type TargetSets = Vec<Result<BTreeSet<String>, String>>;

/// Element sets for each directive from a base-chart mark index.
pub fn target_sets(directives: &[AnimationDirective], index: &MarkIndex) -> TargetSets {
    directives
        .iter()
        .map(|d| resolve_targets(d, index).map_err(|e| e.to_string()))
        .collect()
}

/// Stand-in identities when no rendering is available: bound rows, or the
/// normalized target text.
pub fn pseudo_target_sets(directives: &[AnimationDirective]) -> TargetSets {
    directives
        .iter()
        .map(|d| {
            Ok(if d.index.is_empty() {
                BTreeSet::from([format!(
                    "target:{}",
                    d.target.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
                )])
            } else {
                d.index.iter().map(|r| format!("row:{r}")).collect()
            })
        })
        .collect()
}

/// Char offset just past the first sentence: the first `.`, `!` or `?`
/// followed by whitespace or the end of the text.
pub fn first_sentence_end(narration: &str) -> usize {
    let chars: Vec<char> = narration.chars().collect();
    for (i, c) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) {
            return i + 1;
        }
    }
    chars.len()
}

pub fn validate_animation_sequence(directives: &[AnimationDirective], narration: &str) -> ValidationReport {
    validate_animation_sequence_with(directives, narration, &pseudo_target_sets(directives))
}

/// Legality of the directive sequence:
/// Axes-fade-in only in the first sentence; no emphasis or exit before an
/// element's entrance; no emphasis after its exit; every segment verbatim
/// in the narration; every target resolvable.
pub fn validate_animation_sequence_with(
    directives: &[AnimationDirective],
    narration: &str,
    targets: &TargetSets,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let spans = locate_in_order(narration, directives.iter().map(|d| d.narration.as_str()));
    let first_end = first_sentence_end(narration);
    let path = |i: usize| format!("{ANIMATIONS}[{i}]");

    // (start, category, directive) for every located, resolved directive
    let mut events: BTreeMap<&str, Vec<(usize, AnimationCategory, usize)>> = BTreeMap::new();
    for (i, d) in directives.iter().enumerate() {
        let span: Span = match &spans[i] {
            Ok(s) => *s,
            Err(_) => {
                report.violation(
                    "segment-not-found",
                    path(i),
                    format!("\"{}\" is not a verbatim part of the narration", d.narration),
                );
                continue;
            }
        };
        if d.animation == AnimationType::AxesFadeIn && span.end_char > first_end {
            report.violation(
                "first-sentence",
                path(i),
                format!("Axes-fade-in on \"{}\" is outside the first sentence", d.narration),
            );
        }
        match targets.get(i) {
            Some(Ok(set)) => {
                for id in set {
                    events
                        .entry(id.as_str())
                        .or_default()
                        .push((span.start_char, d.animation.category(), i));
                }
            }
            Some(Err(why)) => report.violation("unresolved-target", path(i), why.clone()),
            None => report.violation("unresolved-target", path(i), "no target set supplied"),
        }
    }

    let mut flagged = BTreeSet::new();
    for list in events.values() {
        let entrances: Vec<usize> = list
            .iter()
            .filter(|e| e.1 == AnimationCategory::Entrance)
            .map(|e| e.0)
            .collect();
        for &(start, category, i) in list {
            if category == AnimationCategory::Entrance {
                continue;
            }
            let d = &directives[i];
            if !entrances.is_empty() && entrances.iter().all(|&e| e > start) {
                if flagged.insert(("appear-before-emphasis", i)) {
                    report.violation(
                        "appear-before-emphasis",
                        path(i),
                        format!(
                            "{} on \"{}\" comes before the target's entrance",
                            d.animation, d.narration
                        ),
                    );
                }
                continue;
            }
            if category == AnimationCategory::Emphasis {
                let latest = list
                    .iter()
                    .filter(|e| e.1 != AnimationCategory::Emphasis && e.0 < start)
                    .map(|e| e.0)
                    .max();
                let after_exit =
                    latest.is_some_and(|t| list.iter().any(|e| e.0 == t && e.1 == AnimationCategory::Exit));
                if after_exit && flagged.insert(("emphasis-after-exit", i)) {
                    report.violation(
                        "emphasis-after-exit",
                        path(i),
                        format!(
                            "{} on \"{}\" comes after the target has faded out",
                            d.animation, d.narration
                        ),
                    );
                }
            }
        }
    }
    report
}

fn annotation_segment_violations(output: &DesignerOutput, narration: &str) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (i, a) in output.annotation_directives.iter().enumerate() {
        if locate_span(narration, &a.nar, 0).is_err() {
            report.violation(
                "segment-not-found",
                format!("{ANNOTATIONS}[{i}].nar"),
                format!("\"{}\" is not a verbatim part of the narration", a.nar),
            );
        }
    }
    report
}

fn text_annotation_advisories(spec: &Value) -> ValidationReport {
    let mut report = ValidationReport::default();
    for view in vega::views(spec) {
        if view.mark_type() != Some("text") {
            continue;
        }
        let mut texts: Vec<String> = Vec::new();
        if let Some(s) = view.mark.get("text").and_then(Value::as_str) {
            texts.push(s.to_string());
        }
        if let Some(enc) = view.encoding.get("text") {
            if let Some(s) = enc.get("value").and_then(Value::as_str) {
                texts.push(s.to_string());
            }
            if let (Some(field), Some(rows)) = (
                enc.get("field").and_then(Value::as_str),
                view.data.and_then(|d| d.get("values")).and_then(Value::as_array),
            ) {
                texts.extend(rows.iter().filter_map(|r| r.get(field)?.as_str().map(str::to_string)));
            }
        }
        for t in texts {
            if t.split_whitespace().count() >= MAX_ANNOTATION_WORDS {
                report.advisory(
                    "long-text-annotation",
                    &view.path,
                    format!("\"{t}\" should be shorter than {MAX_ANNOTATION_WORDS} words"),
                );
            }
        }
    }
    report
}

/// Reply contract for one designer completion. Target identity comes from
/// `index` when a base rendering is available.
pub fn designer_contract(
    raw: &str,
    narration: &str,
    table: &DataTable,
    index: Option<&MarkIndex>,
) -> Result<(DesignerOutput, ValidationReport), Vec<Violation>> {
    let mut output = parse_designer_response(raw, table).map_err(|e| vec![e.to_violation()])?;
    let mut report = collapse_duplicates(&mut output);
    for v in vega::structural_violations(&output.annotated_visualization) {
        report.violations.push(Violation::new(
            v.code,
            format!("Annotated_Visualization{}", v.path.trim_start_matches('$')),
            v.message,
        ));
    }
    let targets = match index {
        Some(index) => target_sets(&output.animation_directives, index),
        None => pseudo_target_sets(&output.animation_directives),
    };
    report.merge(validate_animation_sequence_with(
        &output.animation_directives,
        narration,
        &targets,
    ));
    report.merge(annotation_segment_violations(&output, narration));
    report.merge(text_annotation_advisories(&output.annotated_visualization));
    if report.is_passing() {
        Ok((output, report))
    } else {
        Err(report.violations)
    }
}

#[derive(Debug, Clone)]
pub struct DesignerRun {
    pub prompt: PromptText,
    pub output: DesignerOutput,
    pub validation: ValidationReport,
    pub repair: RepairReport,
}

pub fn run_designer(
    session: &mut ChatSession,
    vis: &VisualizationSpec,
    narration: &str,
    table: &DataTable,
    index: Option<&MarkIndex>,
    config: &AgentConfig,
) -> Result<DesignerRun, AgentError> {
    if narration.trim().is_empty() {
        return Err(AgentError::Precondition("the narration is empty".to_string()));
    }
    let prompt = build_designer_prompt_with(vis, narration, table, config.prompt_rows);
    let ((output, validation), repair) = repair_loop(session, &prompt, config.max_attempts, |raw| {
        designer_contract(raw, narration, table, index)
    })?;
    Ok(DesignerRun {
        prompt,
        output,
        validation,
        repair,
    })
}
