//! The controller: runs every stage in a fixed order, persists each stage's
//! artifacts into the project directory, and records them in a manifest.

mod config;
mod inspect;
mod manifest;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::agent::{backend_from_config, repair_loop, ChatBackend, ChatSession, RepairError, RepairReport};
use crate::analyst::{run_analyst, AgentError};
use crate::designer::run_designer;
use crate::ingest::{build_description_prompt_with, parse_csv, parse_description_response};
use crate::media::{export_html, render_visualization, synthesize_speech, synthesize_video, MediaError, VideoInputs};
use crate::model::{AnnotationType, DataTable, VisualizationSpec};
use crate::prompt::PromptText;
use crate::report::ValidationReport;
use crate::svg::{
    diff_annotations, index_marks, index_marks_with_annotations, match_annotation_directives, parse_svg, removed_count,
    resolve_targets, BindingError, IndexedElement, Role, SvgDoc,
};
use crate::timeline::{
    align_segments, compile_timeline, locate_in_order, ScheduledAnimation, ScheduledAnnotation, TimelineError,
    TimelineInput, WordTiming,
};

pub use config::{ExportKind, ProjectConfig, ToolConfig, ToolKind};
pub use inspect::{inspect, validate_project, InspectError, StageValidation};
pub use manifest::{
    sha256_hex, ArtifactRecord, FailureClass, FailureRecord, ProjectManifest, Stage, StageRecord, MANIFEST_FILE,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineError {
    pub stage: Option<Stage>,
    pub class: FailureClass,
    pub message: String,
    pub repair: Option<RepairReport>,
}

impl PipelineError {
    pub fn precondition(message: impl Into<String>) -> Self {
        Self {
            stage: None,
            class: FailureClass::Precondition,
            message: message.into(),
            repair: None,
        }
    }

    fn at(stage: Stage, class: FailureClass, message: impl Into<String>) -> Self {
        Self {
            stage: Some(stage),
            class,
            message: message.into(),
            repair: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(stage) => write!(f, "stage {stage}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for PipelineError {}

fn agent_failure(stage: Stage, e: AgentError) -> PipelineError {
    let repair = e.repair_report().cloned();
    let class = match &e {
        AgentError::Precondition(_) | AgentError::Repair(RepairError::InvalidMaxAttempts) => FailureClass::Precondition,
        AgentError::Repair(RepairError::Exhausted { .. }) => FailureClass::Contract,
        AgentError::Repair(RepairError::Backend { .. }) => FailureClass::Adapter,
    };
    PipelineError {
        repair,
        ..PipelineError::at(stage, class, e.to_string())
    }
}

fn media_failure(stage: Stage, e: MediaError) -> PipelineError {
    let class = match e {
        MediaError::EmptyNarration => FailureClass::Precondition,
        MediaError::Io(_) => FailureClass::Io,
        _ => FailureClass::Adapter,
    };
    PipelineError::at(stage, class, e.to_string())
}

fn binding_failure(stage: Stage, e: BindingError) -> PipelineError {
    let class = match e {
        BindingError::UnresolvedTarget { .. } => FailureClass::Contract,
        BindingError::UnboundMark(_) | BindingError::RowOutOfRange { .. } => FailureClass::Adapter,
    };
    PipelineError::at(stage, class, e.to_string())
}

fn timeline_failure(stage: Stage, e: TimelineError) -> PipelineError {
    PipelineError::at(stage, FailureClass::Contract, e.to_string())
}

/// Replaces the top-level data of `spec` with the full table, so the
/// renderer binds marks to every row even when the prompt showed a prefix.
pub fn inject_table_data(spec: &Value, table: &DataTable) -> Value {
    let mut out = spec.clone();
    if let Some(obj) = out.as_object_mut() {
        obj.insert("data".into(), json!({ "values": table.rows_as_json() }));
    }
    out
}

/// Writes artifacts and keeps the manifest current.
struct Recorder {
    dir: PathBuf,
    manifest: ProjectManifest,
    stage: Option<(Stage, u64)>,
    artifacts: Vec<ArtifactRecord>,
}

impl Recorder {
    fn io(&self, e: impl fmt::Display) -> PipelineError {
        PipelineError {
            stage: self.stage.map(|s| s.0),
            class: FailureClass::Io,
            message: e.to_string(),
            repair: None,
        }
    }

    fn begin(&mut self, stage: Stage) {
        self.stage = Some((stage, manifest::now_ms()));
        self.artifacts.clear();
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| self.io(e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| self.io(format!("{}: {e}", path.display())))?;
        self.artifacts.push(ArtifactRecord {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), PipelineError> {
        let text = serde_json::to_string_pretty(value).expect("artifacts serialize") + "\n";
        self.write(rel, text.as_bytes())
    }

    /// Records a file some tool wrote; returns its manifest path.
    fn adopt(&mut self, path: &Path) -> Result<String, PipelineError> {
        let bytes = std::fs::read(path).map_err(|e| self.io(format!("{}: {e}", path.display())))?;
        let rel = path
            .strip_prefix(&self.dir)
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_else(|_| path.to_string_lossy().into_owned());
        self.artifacts.push(ArtifactRecord {
            path: rel.clone(),
            sha256: sha256_hex(&bytes),
        });
        Ok(rel)
    }

    fn finish(&mut self, validation: ValidationReport, repair: Option<RepairReport>) -> Result<(), PipelineError> {
        let (stage, started) = self.stage.take().expect("a stage is open");
        self.manifest.stages.push(StageRecord {
            stage,
            started_at_ms: started,
            finished_at_ms: manifest::now_ms(),
            artifacts: std::mem::take(&mut self.artifacts),
            validation,
            repair,
        });
        self.manifest.save(&self.dir).map_err(|e| self.io(e))
    }
}

/// Shape of bindings.json.
#[derive(Serialize)]
struct Bindings<'a> {
    marks: &'a [IndexedElement],
    annotation_elements: &'a [String],
    animations: Vec<BoundAnimation<'a>>,
    annotations: Vec<BoundAnnotation<'a>>,
}

#[derive(Serialize)]
struct BoundAnimation<'a> {
    animation: &'a str,
    narration: &'a str,
    target: &'a str,
    index: &'a [usize],
    elements: &'a BTreeSet<String>,
}

#[derive(Serialize)]
struct BoundAnnotation<'a> {
    #[serde(rename = "type")]
    types: &'a [AnnotationType],
    nar: &'a str,
    index: &'a [usize],
    elements: &'a BTreeSet<String>,
}

/// Shape of schedule.json: every directive's segment in narration and audio time.
#[derive(Serialize)]
struct ScheduleEntry<'a> {
    kind: &'static str,
    directive: usize,
    segment: &'a str,
    start_char: usize,
    end_char: usize,
    start: f64,
    end: f64,
}

#[derive(Serialize)]
struct WordTimingsFile<'a> {
    duration: f64,
    audio: &'a str,
    words: &'a [WordTiming],
}

/// Runs every stage. On failure the partial manifest, with a failure
/// record, is still written to the project directory.
pub fn run_pipeline(config: &ProjectConfig) -> Result<ProjectManifest, PipelineError> {
    config.validate()?;
    let input = config.input_csv.as_deref().expect("validated");
    let title = config.title.clone().expect("validated");
    let raw = std::fs::read_to_string(input)
        .map_err(|e| PipelineError::precondition(format!("cannot read {}: {e}", input.display())))?;
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError {
        class: FailureClass::Io,
        ..PipelineError::precondition(format!("cannot create {}: {e}", dir.display()))
    })?;

    let mut rec = Recorder {
        dir,
        manifest: ProjectManifest {
            title: title.clone(),
            input_sha256: sha256_hex(raw.as_bytes()),
            stages: Vec::new(),
            failure: None,
        },
        stage: None,
        artifacts: Vec::new(),
    };
    match run_stages(&mut rec, config, &raw, &title) {
        Ok(()) => Ok(rec.manifest),
        Err(mut e) => {
            if e.stage.is_none() {
                e.stage = rec.stage.map(|s| s.0);
            }
            rec.manifest.failure = e.stage.map(|stage| FailureRecord {
                stage,
                class: e.class,
                message: e.message.clone(),
                repair: e.repair.clone(),
            });
            // the stage error matters more than a failure to record it
            let _ = rec.manifest.save(&rec.dir);
            Err(e)
        }
    }
}

fn save_prompt(rec: &mut Recorder, name: &str, prompt: &PromptText) -> Result<(), PipelineError> {
    rec.write(&format!("prompts/{name}.txt"), prompt.text().as_bytes())
}

fn run_stages(rec: &mut Recorder, config: &ProjectConfig, raw: &str, title: &str) -> Result<(), PipelineError> {
    let agent = config.agent_config();

    rec.begin(Stage::Ingest);
    let table = parse_csv(raw, title)
        .map_err(|e| PipelineError::at(Stage::Ingest, FailureClass::Precondition, e.to_string()))?;
    rec.write_json("table.json", &table)?;
    rec.finish(ValidationReport::default(), None)?;

    rec.begin(Stage::Description);
    let cache_dir = if config.no_cache {
        None
    } else {
        Some(config.cache_dir.clone().unwrap_or_else(|| rec.dir.join(".cache")))
    };
    let backend: Arc<dyn ChatBackend> = backend_from_config(&config.effective_backend(), cache_dir.as_deref())
        .map_err(|e| PipelineError::at(Stage::Description, FailureClass::Precondition, e.to_string()))?;
    let prompt = build_description_prompt_with(&table, agent.prompt_rows);
    save_prompt(rec, "description", &prompt)?;
    let mut session = ChatSession::new(backend.clone());
    let (description, repair) = repair_loop(&mut session, &prompt, agent.max_attempts, |raw| {
        parse_description_response(raw).map_err(|e| vec![e.to_violation()])
    })
    .map_err(|e| agent_failure(Stage::Description, e.into()))?;
    rec.write_json("description.json", &json!({ "Description": description.as_str() }))?;
    rec.finish(ValidationReport::default(), Some(repair))?;

    rec.begin(Stage::Analyst);
    let mut session = ChatSession::new(backend.clone());
    let analyst =
        run_analyst(&mut session, &description, &table, &agent).map_err(|e| agent_failure(Stage::Analyst, e))?;
    save_prompt(rec, "analyst", &analyst.prompt)?;
    rec.write_json("analyst.json", &analyst.output)?;
    rec.finish(analyst.validation.clone(), Some(analyst.repair.clone()))?;
    let vis = analyst.output.visualization_spec();
    let narration = analyst.output.narration.clone();

    rec.begin(Stage::RenderBase);
    let renderer = config.renderer()?;
    let base_vis = VisualizationSpec {
        spec: inject_table_data(&vis.spec, &table),
        vis_type: vis.vis_type,
    };
    rec.write_json("base_spec.json", &base_vis.spec)?;
    let base_svg =
        render_visualization(&base_vis, renderer.as_ref()).map_err(|e| media_failure(Stage::RenderBase, e))?;
    rec.write("base.svg", base_svg.as_bytes())?;
    let base_doc =
        parse_svg(&base_svg).map_err(|e| media_failure(Stage::RenderBase, MediaError::InvalidSvg(e.to_string())))?;
    let base_index = index_marks(&base_doc, &base_vis, &table).map_err(|e| binding_failure(Stage::RenderBase, e))?;
    rec.finish(ValidationReport::default(), None)?;

    rec.begin(Stage::Designer);
    let mut session = ChatSession::new(backend);
    let designer = run_designer(&mut session, &vis, &narration, &table, Some(&base_index), &agent)
        .map_err(|e| agent_failure(Stage::Designer, e))?;
    save_prompt(rec, "designer", &designer.prompt)?;
    rec.write_json("designer.json", &designer.output)?;
    rec.finish(designer.validation.clone(), Some(designer.repair.clone()))?;
    let design = designer.output;

    rec.begin(Stage::RenderAnnotated);
    let ann_vis = VisualizationSpec {
        spec: inject_table_data(&design.annotated_visualization, &table),
        vis_type: vis.vis_type,
    };
    rec.write_json("annotated_spec.json", &ann_vis.spec)?;
    let ann_svg =
        render_visualization(&ann_vis, renderer.as_ref()).map_err(|e| media_failure(Stage::RenderAnnotated, e))?;
    rec.write("annotated.svg", ann_svg.as_bytes())?;
    let ann_doc = parse_svg(&ann_svg)
        .map_err(|e| media_failure(Stage::RenderAnnotated, MediaError::InvalidSvg(e.to_string())))?;
    rec.finish(ValidationReport::default(), None)?;

    rec.begin(Stage::Binding);
    let mut report = ValidationReport::default();
    let annotation_ids = leaf_annotations(&base_doc, &ann_doc);
    let removed = removed_count(&base_doc, &ann_doc);
    if removed > 0 {
        report.advisory(
            "non-additive-annotation",
            "annotated.svg",
            format!("{removed} base element(s) are missing or changed in the annotated rendering"),
        );
    }
    let index = index_marks_with_annotations(&ann_doc, &ann_vis, &table, &annotation_ids)
        .map_err(|e| binding_failure(Stage::Binding, e))?;
    let targets: Vec<BTreeSet<String>> = design
        .animation_directives
        .iter()
        .map(|d| resolve_targets(d, &index))
        .collect::<Result<_, _>>()
        .map_err(|e| binding_failure(Stage::Binding, e))?;
    let assignment = match_annotation_directives(&annotation_ids, &design.annotation_directives, &index, &ann_doc);
    report.merge(assignment.report.clone());
    let bindings = Bindings {
        marks: index.elements(),
        annotation_elements: &annotation_ids,
        animations: design
            .animation_directives
            .iter()
            .zip(&targets)
            .map(|(d, t)| BoundAnimation {
                animation: d.animation.as_str(),
                narration: &d.narration,
                target: &d.target,
                index: &d.index,
                elements: t,
            })
            .collect(),
        annotations: design
            .annotation_directives
            .iter()
            .zip(&assignment.elements)
            .map(|(d, e)| BoundAnnotation {
                types: &d.types,
                nar: &d.nar,
                index: &d.index,
                elements: e,
            })
            .collect(),
    };
    rec.write_json("bindings.json", &bindings)?;
    rec.finish(report, None)?;

    rec.begin(Stage::Tts);
    let tts = config.tts()?;
    let speech = synthesize_speech(&narration, tts.as_ref(), &rec.dir).map_err(|e| media_failure(Stage::Tts, e))?;
    let audio_rel = rec.adopt(&speech.audio_path)?;
    rec.write_json(
        "word_timings.json",
        &WordTimingsFile {
            duration: speech.duration,
            audio: &audio_rel,
            words: &speech.timings,
        },
    )?;
    rec.finish(speech.report.clone(), None)?;

    rec.begin(Stage::Timeline);
    let anim_intervals = schedule(
        &narration,
        design.animation_directives.iter().map(|d| d.narration.as_str()),
        &speech.timings,
    )?;
    let ann_intervals = schedule(
        &narration,
        design.annotation_directives.iter().map(|d| d.nar.as_str()),
        &speech.timings,
    )?;
    let mut entries = Vec::new();
    for (kind, list, segs) in [
        (
            "animation",
            &anim_intervals,
            design
                .animation_directives
                .iter()
                .map(|d| d.narration.as_str())
                .collect::<Vec<_>>(),
        ),
        (
            "annotation",
            &ann_intervals,
            design.annotation_directives.iter().map(|d| d.nar.as_str()).collect(),
        ),
    ] {
        for (i, ((span, (start, end)), seg)) in list.iter().zip(segs).enumerate() {
            entries.push(ScheduleEntry {
                kind,
                directive: i,
                segment: seg,
                start_char: span.start_char,
                end_char: span.end_char,
                start: *start,
                end: *end,
            });
        }
    }
    let input = TimelineInput {
        duration: speech.duration,
        elements: index.elements().iter().map(|e| e.id.clone()).collect(),
        marks: index.ids_with_role(Role::Mark).map(str::to_string).collect(),
        legends: index.ids_with_role(Role::Legend).map(str::to_string).collect(),
        animations: design
            .animation_directives
            .iter()
            .zip(&targets)
            .zip(&anim_intervals)
            .map(|((d, t), (_, interval))| ScheduledAnimation {
                animation: d.animation,
                targets: t.clone(),
                interval: *interval,
            })
            .collect(),
        annotations: assignment
            .elements
            .iter()
            .zip(&ann_intervals)
            .filter(|(e, _)| !e.is_empty())
            .map(|(e, (_, interval))| ScheduledAnnotation {
                elements: e.clone(),
                interval: *interval,
            })
            .collect(),
    };
    let (timeline, mut report) = compile_timeline(&input);
    report.merge(timeline.check());
    rec.write_json("schedule.json", &entries)?;
    rec.write_json("timeline.json", &timeline)?;
    if !report.is_passing() {
        let first = report.violations[0].to_string();
        rec.finish(report, None)?;
        return Err(PipelineError::at(Stage::Timeline, FailureClass::Contract, first));
    }
    rec.finish(report, None)?;

    rec.begin(Stage::Export);
    let annotation_set: BTreeSet<String> = annotation_ids.iter().cloned().collect();
    if config.export.html() {
        let html = export_html(&timeline, &ann_doc, &annotation_set, Some(&audio_rel));
        rec.write("index.html", html.as_bytes())?;
    }
    if config.export.video() {
        let synth = config.synth()?;
        let inputs = VideoInputs {
            timeline: &timeline,
            timeline_path: &rec.dir.join("timeline.json"),
            base_svg: &rec.dir.join("base.svg"),
            annotated_svg: &rec.dir.join("annotated.svg"),
            audio: &speech.audio_path,
            out_dir: &rec.dir,
            fps: config.fps,
        };
        let video = synthesize_video(&inputs, synth.as_ref()).map_err(|e| media_failure(Stage::Export, e))?;
        rec.adopt(&video)?;
    }
    rec.finish(ValidationReport::default(), None)
}

/// Annotation elements that are leaves of the annotated tree; a new group
/// wrapping new elements is not animated on its own.
fn leaf_annotations(base: &SvgDoc, annotated: &SvgDoc) -> Vec<String> {
    diff_annotations(base, annotated)
        .into_iter()
        .filter(|id| annotated.element(id).is_some_and(|e| e.children.is_empty()))
        .collect()
}

type Scheduled = Vec<(crate::timeline::Span, (f64, f64))>;

fn schedule<'a>(
    narration: &str,
    segments: impl IntoIterator<Item = &'a str>,
    timings: &[WordTiming],
) -> Result<Scheduled, PipelineError> {
    let spans = locate_in_order(narration, segments)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| timeline_failure(Stage::Timeline, e))?;
    let intervals = align_segments(&spans, timings).map_err(|e| timeline_failure(Stage::Timeline, e))?;
    Ok(spans.into_iter().zip(intervals).collect())
}
