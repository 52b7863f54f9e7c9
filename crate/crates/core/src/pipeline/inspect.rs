use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::manifest::{ProjectManifest, Stage, StageRecord, MANIFEST_FILE};
use super::sha256_hex;
use crate::analyst::analyst_contract;
use crate::designer::designer_contract;
use crate::ingest::parse_description_response;
use crate::media::check_render_contract;
use crate::model::{AnalystOutput, DataTable, DesignerOutput, VisualizationSpec};
use crate::report::ValidationReport;
use crate::svg::{index_marks, parse_svg};
use crate::timeline::{attach_char_spans, Timeline, WordTiming};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InspectError {
    #[error("no manifest at {0}")]
    ManifestNotFound(PathBuf),
    #[error("unknown stage `{0}`; expected one of: ingest, description, analyst, render_base, designer, render_annotated, binding, tts, timeline, export")]
    UnknownStage(String),
    #[error("stage `{0}` has not run in this project")]
    StageNotRun(String),
    #[error("{0}")]
    Io(String),
}

fn load_manifest(project: &Path) -> Result<ProjectManifest, InspectError> {
    let path = project.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(InspectError::ManifestNotFound(path));
    }
    ProjectManifest::load(project).map_err(|e| InspectError::Io(format!("{}: {e}", path.display())))
}

fn read(project: &Path, rel: &str) -> Result<String, String> {
    std::fs::read_to_string(project.join(rel)).map_err(|e| format!("{rel}: {e}"))
}

fn read_json<T: for<'de> Deserialize<'de>>(project: &Path, rel: &str) -> Result<T, String> {
    serde_json::from_str(&read(project, rel)?).map_err(|e| format!("{rel}: {e}"))
}

/// Human-readable summary of one stage: artifacts, validation and repair
/// reports, then a stage-specific digest of the persisted output.
pub fn inspect(project: &Path, stage_name: &str) -> Result<String, InspectError> {
    let manifest = load_manifest(project)?;
    let stage = Stage::parse(stage_name).ok_or_else(|| InspectError::UnknownStage(stage_name.to_string()))?;
    let mut out = String::new();
    let Some(record) = manifest.stage(stage) else {
        if let Some(f) = manifest.failure.as_ref().filter(|f| f.stage == stage) {
            let _ = writeln!(out, "stage: {stage} (failed, {:?})", f.class);
            let _ = writeln!(out, "error: {}", f.message);
            if let Some(r) = &f.repair {
                write_repair(&mut out, r);
            }
            return Ok(out);
        }
        return Err(InspectError::StageNotRun(stage_name.to_string()));
    };
    let _ = writeln!(out, "stage: {stage}");
    let _ = writeln!(
        out,
        "duration: {} ms",
        record.finished_at_ms.saturating_sub(record.started_at_ms)
    );
    out.push_str("artifacts:\n");
    for a in &record.artifacts {
        let _ = writeln!(out, "  {:<24} {}", a.path, &a.sha256[..12.min(a.sha256.len())]);
    }
    write_report(&mut out, &record.validation);
    if let Some(r) = &record.repair {
        write_repair(&mut out, r);
    }
    let detail = match stage {
        Stage::Description => describe_description(project),
        Stage::Analyst => describe_analyst(project),
        Stage::Designer => describe_designer(project),
        Stage::Binding => describe_binding(project),
        Stage::Tts => describe_tts(project),
        Stage::Timeline => describe_timeline(project),
        _ => Ok(String::new()),
    };
    match detail {
        Ok(d) => out.push_str(&d),
        Err(e) => {
            let _ = writeln!(out, "(could not read stage output: {e})");
        }
    }
    Ok(out)
}

fn write_report(out: &mut String, report: &ValidationReport) {
    let _ = writeln!(
        out,
        "validation: {} violation(s), {} advisory(ies)",
        report.violations.len(),
        report.advisories.len()
    );
    for v in &report.violations {
        let _ = writeln!(out, "  error    {v}");
    }
    for v in &report.advisories {
        let _ = writeln!(out, "  advisory {v}");
    }
}

fn write_repair(out: &mut String, r: &crate::agent::RepairReport) {
    let _ = writeln!(
        out,
        "repair: {} attempt(s), final status {:?}",
        r.attempts, r.final_status
    );
    for (i, vs) in r.violations_per_attempt.iter().enumerate() {
        let _ = writeln!(out, "  attempt {}: {} violation(s)", i + 1, vs.len());
        for v in vs {
            let _ = writeln!(out, "    {v}");
        }
    }
}

fn describe_description(project: &Path) -> Result<String, String> {
    let v: Value = read_json(project, "description.json")?;
    Ok(format!("description: {}\n", v["Description"].as_str().unwrap_or("")))
}

fn describe_analyst(project: &Path) -> Result<String, String> {
    let a: AnalystOutput = read_json(project, "analyst.json")?;
    let mut out = format!("chart: {}\ninsights:\n", a.vis_type);
    for i in &a.insights {
        let types: Vec<_> = i.types.iter().map(|t| t.as_str()).collect();
        let _ = writeln!(out, "  - [{}] {}", types.join(", "), i.insight);
    }
    let _ = writeln!(out, "narration: {}", a.narration);
    Ok(out)
}

fn describe_designer(project: &Path) -> Result<String, String> {
    let d: DesignerOutput = read_json(project, "designer.json")?;
    let bindings: Option<Value> = read_json(project, "bindings.json").ok();
    let mut out = String::from("animations:\n");
    let _ = writeln!(
        out,
        "  {:<3} {:<36} {:<9} {:<28} segment",
        "#", "animation", "category", "target"
    );
    for (i, a) in d.animation_directives.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {:<3} {:<36} {:<9} {:<28} \"{}\"",
            i,
            a.animation.as_str(),
            format!("{:?}", a.animation.category()).to_lowercase(),
            a.target,
            a.narration
        );
        if let Some(els) = bindings
            .as_ref()
            .and_then(|b| b["animations"][i]["elements"].as_array())
        {
            let ids: Vec<_> = els.iter().filter_map(Value::as_str).collect();
            let _ = writeln!(out, "      -> {}", ids.join(", "));
        }
    }
    out.push_str("annotations:\n");
    for (i, a) in d.annotation_directives.iter().enumerate() {
        let types: Vec<_> = a.types.iter().map(|t| t.as_str()).collect();
        let _ = writeln!(
            out,
            "  {:<3} [{}] rows {:?} \"{}\"",
            i,
            types.join(", "),
            a.index,
            a.nar
        );
    }
    Ok(out)
}

fn describe_binding(project: &Path) -> Result<String, String> {
    let b: Value = read_json(project, "bindings.json")?;
    let marks = b["marks"].as_array().map_or(0, Vec::len);
    let ann: Vec<_> = b["annotation_elements"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_str).collect())
        .unwrap_or_default();
    Ok(format!(
        "indexed elements: {marks}\nannotation elements: {}\n",
        ann.join(", ")
    ))
}

#[derive(Deserialize)]
struct WordTimingsFile {
    duration: f64,
    audio: String,
    words: Vec<WordTiming>,
}

fn describe_tts(project: &Path) -> Result<String, String> {
    let w: WordTimingsFile = read_json(project, "word_timings.json")?;
    Ok(format!(
        "audio: {}\nwords: {}\nduration: {} s\n",
        w.audio,
        w.words.len(),
        w.duration
    ))
}

fn describe_timeline(project: &Path) -> Result<String, String> {
    let t: Timeline = read_json(project, "timeline.json")?;
    let hidden: Vec<_> = t
        .initial_visibility
        .keys()
        .filter(|id| t.is_hidden_initially(id))
        .map(String::as_str)
        .collect();
    Ok(format!(
        "duration: {} s\ntracks: {}\nkeyframes: {}\nhidden initially ({}): {}\n",
        t.duration,
        t.tracks.len(),
        t.keyframe_count(),
        hidden.len(),
        hidden.join(", ")
    ))
}

/// Validation result for one recorded stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageValidation {
    pub stage: Stage,
    pub report: ValidationReport,
}

/// Re-runs every validator on the persisted artifacts: file hashes, stage
/// order, and each stage's own contract.
pub fn validate_project(project: &Path) -> Result<Vec<StageValidation>, InspectError> {
    let manifest = load_manifest(project)?;
    let mut results = Vec::new();
    let mut previous: Option<Stage> = None;
    for record in &manifest.stages {
        let mut report = ValidationReport::default();
        if previous.is_some_and(|p| p >= record.stage) {
            report.violation(
                "stage-order",
                record.stage.as_str(),
                "stage recorded out of pipeline order",
            );
        }
        previous = Some(record.stage);
        check_hashes(project, record, &mut report);
        if let Err(e) = check_stage(project, record.stage, &mut report) {
            report.violation("unreadable-artifact", record.stage.as_str(), e);
        }
        results.push(StageValidation {
            stage: record.stage,
            report,
        });
    }
    Ok(results)
}

fn check_hashes(project: &Path, record: &StageRecord, report: &mut ValidationReport) {
    for a in &record.artifacts {
        let path = if Path::new(&a.path).is_absolute() {
            PathBuf::from(&a.path)
        } else {
            project.join(&a.path)
        };
        match std::fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {}
            Ok(_) => report.violation("artifact-hash", &a.path, "content does not match the recorded hash"),
            Err(_) => report.violation("artifact-missing", &a.path, "file listed in the manifest is missing"),
        }
    }
}

fn narration(project: &Path) -> Result<String, String> {
    read_json::<AnalystOutput>(project, "analyst.json").map(|a| a.narration)
}

fn check_stage(project: &Path, stage: Stage, report: &mut ValidationReport) -> Result<(), String> {
    let contract = |report: &mut ValidationReport, r: Result<ValidationReport, Vec<crate::report::Violation>>| match r {
        Ok(v) => report.merge(v),
        Err(vs) => report.violations.extend(vs),
    };
    match stage {
        Stage::Ingest => {
            read_json::<DataTable>(project, "table.json")?;
        }
        Stage::Description => {
            if let Err(e) = parse_description_response(&read(project, "description.json")?) {
                report.violations.push(e.to_violation());
            }
        }
        Stage::Analyst => {
            let table: DataTable = read_json(project, "table.json")?;
            let raw = read(project, "analyst.json")?;
            contract(report, analyst_contract(&raw, &table).map(|(_, r)| r));
        }
        Stage::RenderBase | Stage::RenderAnnotated => {
            let file = if stage == Stage::RenderBase {
                "base.svg"
            } else {
                "annotated.svg"
            };
            if let Err(e) = check_render_contract(&read(project, file)?) {
                report.violation("render-contract", file, e.to_string());
            }
        }
        Stage::Designer => {
            let table: DataTable = read_json(project, "table.json")?;
            let analyst: AnalystOutput = read_json(project, "analyst.json")?;
            let base = VisualizationSpec {
                spec: read_json(project, "base_spec.json")?,
                vis_type: analyst.vis_type,
            };
            let doc = parse_svg(&read(project, "base.svg")?).map_err(|e| e.to_string())?;
            let index = index_marks(&doc, &base, &table).map_err(|e| e.to_string())?;
            let raw = read(project, "designer.json")?;
            contract(
                report,
                designer_contract(&raw, &analyst.narration, &table, Some(&index)).map(|(_, r)| r),
            );
        }
        Stage::Binding => {
            read_json::<Value>(project, "bindings.json")?;
        }
        Stage::Tts => {
            let w: WordTimingsFile = read_json(project, "word_timings.json")?;
            let raw: Vec<_> = w.words.iter().map(|t| (t.word.clone(), t.start, t.end)).collect();
            match attach_char_spans(&narration(project)?, &raw) {
                Ok(spans) if spans == w.words => {}
                Ok(_) => report.violation(
                    "word-timings",
                    "word_timings.json",
                    "character spans do not match the narration",
                ),
                Err(e) => report.violation("word-timings", "word_timings.json", e.to_string()),
            }
        }
        Stage::Timeline => {
            let t: Timeline = read_json(project, "timeline.json")?;
            report.merge(t.check());
            if let Ok(w) = read_json::<WordTimingsFile>(project, "word_timings.json") {
                if t.duration != w.duration {
                    report.violation(
                        "timeline-duration",
                        "timeline.json",
                        format!("duration {} differs from the audio duration {}", t.duration, w.duration),
                    );
                }
            }
        }
        Stage::Export => {}
    }
    Ok(())
}
