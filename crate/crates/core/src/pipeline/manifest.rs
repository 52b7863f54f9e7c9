use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::RepairReport;
use crate::report::ValidationReport;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Description,
    Analyst,
    RenderBase,
    Designer,
    RenderAnnotated,
    Binding,
    Tts,
    Timeline,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::Description,
        Stage::Analyst,
        Stage::RenderBase,
        Stage::Designer,
        Stage::RenderAnnotated,
        Stage::Binding,
        Stage::Tts,
        Stage::Timeline,
        Stage::Export,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Description => "description",
            Stage::Analyst => "analyst",
            Stage::RenderBase => "render_base",
            Stage::Designer => "designer",
            Stage::RenderAnnotated => "render_annotated",
            Stage::Binding => "binding",
            Stage::Tts => "tts",
            Stage::Timeline => "timeline",
            Stage::Export => "export",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.as_str() == name)
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Relative to the project directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
    pub artifacts: Vec<ArtifactRecord>,
    pub validation: ValidationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<RepairReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    Precondition,
    Contract,
    Adapter,
    Io,
}

impl FailureClass {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureClass::Io => 1,
            FailureClass::Precondition => 2,
            FailureClass::Contract => 3,
            FailureClass::Adapter => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: Stage,
    pub class: FailureClass,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<RepairReport>,
}

/// What a run produced, stage by stage. Rewritten after every stage so an
/// interrupted run leaves a usable partial record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectManifest {
    pub title: String,
    pub input_sha256: String,
    pub stages: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureRecord>,
}

impl ProjectManifest {
    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none() && self.stages.last().map(|r| r.stage) == Some(Stage::Export)
    }

    pub fn load(project: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(project.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn save(&self, project: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(project.join(MANIFEST_FILE), text + "\n")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}
