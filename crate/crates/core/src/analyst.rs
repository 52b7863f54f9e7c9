//! The data-analyst role: insights, a base Vega-Lite chart, and narration in
//! a single completion.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::agent::{extract_json, repair_loop, ChatSession, RepairError, RepairReport};
use crate::ingest::{render_table_text, DEFAULT_PROMPT_ROWS};
use crate::model::{
    AnalystOutput, DataDescription, DataTable, Insight, InsightType, VisualizationSpec, VisualizationType,
};
use crate::prompt::{render, PromptText, TemplateId};
use crate::report::{ContractError, ValidationReport};
use crate::schema;
use crate::vega;

/// Insight counts outside this band produce an advisory.
pub const INSIGHT_COUNT_BAND: (usize, usize) = (1, 10);
/// Titles must stay under this many words.
pub const MAX_TITLE_WORDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub max_attempts: u32,
    /// Table rows embedded in prompts; `None` embeds every row.
    pub prompt_rows: Option<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            max_attempts: crate::agent::DEFAULT_MAX_ATTEMPTS,
            prompt_rows: Some(DEFAULT_PROMPT_ROWS),
        }
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Repair(#[from] RepairError),
}

impl AgentError {
    pub fn repair_report(&self) -> Option<&RepairReport> {
        match self {
            AgentError::Repair(e) => e.report(),
            AgentError::Precondition(_) => None,
        }
    }
}

pub fn build_analyst_prompt(description: &DataDescription, table: &DataTable) -> PromptText {
    build_analyst_prompt_with(description, table, Some(DEFAULT_PROMPT_ROWS))
}

pub fn build_analyst_prompt_with(
    description: &DataDescription,
    table: &DataTable,
    max_rows: Option<usize>,
) -> PromptText {
    let table_text = render_table_text(table, max_rows);
    render(
        TemplateId::Analyst,
        &[("description", description.as_str()), ("table", &table_text)],
    )
    .expect("analyst template placeholders are fixed")
}

pub fn parse_analyst_response(raw: &str) -> Result<AnalystOutput, ContractError> {
    let value = extract_json(raw)?;
    let obj = schema::as_object(&value, "$")?;
    for key in ["Insights", "Visualization", "Visualization_Type", "Narration"] {
        schema::field(obj, key, "")?;
    }

    let items = schema::array(obj, "Insights", "")?;
    if items.is_empty() {
        return Err(ContractError::schema("Insights", "at least one insight is required"));
    }
    let mut insights = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let path = format!("Insights[{i}]");
        let item = schema::as_object(item, &path)?;
        let text = schema::string(item, "insight", &path)?;
        if text.trim().is_empty() {
            return Err(ContractError::schema(
                format!("{path}.insight"),
                "insight text is empty",
            ));
        }
        let raw_types = schema::array(item, "type", &path)?;
        if raw_types.is_empty() {
            return Err(ContractError::schema(
                format!("{path}.type"),
                "each insight needs at least one insight type",
            ));
        }
        let mut types = Vec::with_capacity(raw_types.len());
        for (j, t) in raw_types.iter().enumerate() {
            let name = t
                .as_str()
                .ok_or_else(|| ContractError::schema(format!("{path}.type[{j}]"), "insight type must be a string"))?;
            types.push(InsightType::parse(name)?);
        }
        insights.push(Insight {
            insight: text.to_string(),
            types,
        });
    }

    let visualization = schema::field(obj, "Visualization", "")?;
    schema::as_object(visualization, "Visualization")?;
    let vis_type = VisualizationType::parse(schema::string(obj, "Visualization_Type", "")?)?;
    let narration = schema::string(obj, "Narration", "")?;
    if narration.trim().is_empty() {
        return Err(ContractError::schema("Narration", "narration is empty"));
    }
    Ok(AnalystOutput {
        insights,
        visualization: visualization.clone(),
        vis_type,
        narration: narration.to_string(),
    })
}

fn expected_marks(vis_type: VisualizationType) -> &'static [&'static str] {
    match vis_type {
        VisualizationType::Bar => &["bar"],
        VisualizationType::Line => &["line"],
        VisualizationType::Scatter => &["point", "circle", "square"],
        VisualizationType::Pie => &["arc"],
    }
}

/// Structural checks on the analyst's chart. Never fails; problems are
/// reported as violations (blocking) or advisories.
pub fn validate_visualization(spec: &VisualizationSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    report.violations.extend(vega::structural_violations(&spec.spec));
    for (path, field) in vega::encoding_fields(&spec.spec) {
        if field == "index" {
            report.violation("index-encoded", path, "the index column must not be visualized");
        }
    }

    let views = vega::views(&spec.spec);
    let marks: Vec<&str> = views.iter().filter_map(|v| v.mark_type()).collect();
    if !marks.iter().any(|m| expected_marks(spec.vis_type).contains(m)) && !views.is_empty() {
        report.advisory(
            "vis-type-mismatch",
            "$",
            format!(
                "declared type `{}` but the marks are [{}]",
                spec.vis_type,
                marks.join(", ")
            ),
        );
    }
    let has_line = spec.vis_type == VisualizationType::Line || marks.contains(&"line");
    let has_points = marks.iter().any(|m| matches!(*m, "point" | "circle"))
        || views
            .iter()
            .any(|v| v.mark_type() == Some("line") && v.has_inline_points());
    if has_line && !has_points {
        report.advisory("line-without-points", "$", "line charts should include data points");
    }
    let is_pie = spec.vis_type == VisualizationType::Pie || marks.contains(&"arc");
    if is_pie && !marks.contains(&"text") {
        report.advisory(
            "pie-without-labels",
            "$",
            "pie sectors should carry their percentage as a text layer",
        );
    }
    if let Some(title) = vega::title_text(&spec.spec) {
        let words = title.split_whitespace().count();
        if words >= MAX_TITLE_WORDS {
            report.advisory(
                "title-too-long",
                "$.title",
                format!("title has {words} words; keep it under {MAX_TITLE_WORDS}"),
            );
        }
    }
    report
}

/// Advisories that need the table: insight count band and encoded fields
/// that are not table columns.
pub fn table_advisories(output: &AnalystOutput, table: &DataTable) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (lo, hi) = INSIGHT_COUNT_BAND;
    let n = output.insights.len();
    if n < lo || n > hi {
        report.advisory(
            "insight-count",
            "Insights",
            format!("{n} insights; expected between {lo} and {hi}"),
        );
    }
    for (path, field) in vega::encoding_fields(&output.visualization) {
        if field != "index" && table.column(&field).is_none() && !is_inline_field(&output.visualization, &field) {
            report.advisory(
                "unknown-field",
                path,
                format!("field `{field}` is not a column of the table"),
            );
        }
    }
    report
}

/// Fields supplied by inline data or created by a transform's `as`.
fn is_inline_field(spec: &Value, field: &str) -> bool {
    fn derived(node: &Value, field: &str) -> bool {
        match node {
            Value::Object(o) => o.iter().any(|(k, v)| {
                (k == "as"
                    && match v {
                        Value::String(s) => s == field,
                        Value::Array(a) => a.iter().any(|x| x.as_str() == Some(field)),
                        _ => false,
                    })
                    || derived(v, field)
            }),
            Value::Array(a) => a.iter().any(|x| derived(x, field)),
            _ => false,
        }
    }
    vega::views(spec).iter().any(|v| {
        v.data
            .and_then(|d| d.get("values"))
            .and_then(Value::as_array)
            .is_some_and(|rows| rows.iter().any(|r| r.get(field).is_some()))
    }) || derived(spec, field)
}

/// Reply contract for one analyst completion.
pub fn analyst_contract(
    raw: &str,
    table: &DataTable,
) -> Result<(AnalystOutput, ValidationReport), Vec<crate::report::Violation>> {
    let output = parse_analyst_response(raw).map_err(|e| vec![e.to_violation()])?;
    let mut report = validate_visualization(&output.visualization_spec());
    report.merge(table_advisories(&output, table));
    if report.is_passing() {
        Ok((output, report))
    } else {
        Err(report.violations)
    }
}

#[derive(Debug, Clone)]
pub struct AnalystRun {
    pub prompt: PromptText,
    pub output: AnalystOutput,
    pub validation: ValidationReport,
    pub repair: RepairReport,
}

pub fn run_analyst(
    session: &mut ChatSession,
    description: &DataDescription,
    table: &DataTable,
    config: &AgentConfig,
) -> Result<AnalystRun, AgentError> {
    if table.row_count() == 0 {
        return Err(AgentError::Precondition("the table has no rows to analyse".to_string()));
    }
    let prompt = build_analyst_prompt_with(description, table, config.prompt_rows);
    let ((output, validation), repair) = repair_loop(session, &prompt, config.max_attempts, |raw| {
        analyst_contract(raw, table)
    })?;
    Ok(AnalystRun {
        prompt,
        output,
        validation,
        repair,
    })
}
