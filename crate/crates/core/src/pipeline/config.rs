use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::agent::{BackendConfig, BackendKind};
use crate::media::{
    CommandRenderer, CommandSynth, CommandTts, MockRenderer, MockSynth, MockTts, Renderer, SpeechSynth, VideoSynth,
    DEFAULT_FPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolKind {
    #[default]
    Mock,
    Command,
}

fn default_tool_timeout() -> u64 {
    120
}

/// One external tool: the built-in mock, or a program speaking the adapter
/// protocol on stdin/stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolConfig {
    #[serde(default)]
    pub kind: ToolKind,
    #[serde(default)]
    pub program: Option<String>,
    #[serde(default)]
    pub args: Vec<String>,
    /// Voice name passed to a command TTS.
    #[serde(default)]
    pub voice: Option<String>,
    #[serde(default = "default_tool_timeout")]
    pub timeout_secs: u64,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            kind: ToolKind::Mock,
            program: None,
            args: Vec::new(),
            voice: None,
            timeout_secs: default_tool_timeout(),
        }
    }
}

impl ToolConfig {
    fn program(&self, tool: &str) -> Result<String, PipelineError> {
        self.program
            .clone()
            .filter(|p| !p.is_empty())
            .ok_or_else(|| PipelineError::precondition(format!("[{tool}] kind = \"command\" requires `program`")))
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportKind {
    Html,
    Video,
    Both,
}

impl ExportKind {
    pub fn html(self) -> bool {
        matches!(self, ExportKind::Html | ExportKind::Both)
    }

    pub fn video(self) -> bool {
        matches!(self, ExportKind::Video | ExportKind::Both)
    }
}

fn default_fps() -> u32 {
    DEFAULT_FPS
}
fn default_attempts() -> u32 {
    crate::agent::DEFAULT_MAX_ATTEMPTS
}
fn default_prompt_rows() -> Option<usize> {
    Some(crate::ingest::DEFAULT_PROMPT_ROWS)
}
fn default_output() -> PathBuf {
    PathBuf::from("project")
}
fn default_export() -> ExportKind {
    ExportKind::Both
}

/// Everything a run needs. Loaded from TOML; relative paths are resolved
/// against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectConfig {
    #[serde(default)]
    pub input_csv: Option<PathBuf>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Bypass the completion cache for live backends.
    #[serde(default)]
    pub no_cache: bool,
    #[serde(default)]
    pub mock_mode: bool,
    #[serde(default = "default_attempts")]
    pub max_repair_attempts: u32,
    /// Table rows shown in prompts; 0 shows all of them.
    #[serde(default = "default_prompt_rows")]
    pub prompt_rows: Option<usize>,
    #[serde(default = "default_fps")]
    pub fps: u32,
    #[serde(default = "default_export")]
    pub export: ExportKind,
    pub backend: BackendConfig,
    #[serde(default)]
    pub renderer: ToolConfig,
    #[serde(default)]
    pub tts: ToolConfig,
    #[serde(default)]
    pub synth: ToolConfig,
}

impl ProjectConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut config: ProjectConfig =
            toml::from_str(text).map_err(|e| PipelineError::precondition(format!("config: {e}")))?;
        config.resolve_paths(base_dir);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::precondition(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.input_csv.as_mut() {
            fix(p);
        }
        fix(&mut self.output_dir);
        if let Some(p) = self.cache_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.backend.transcript_path.as_mut() {
            fix(p);
        }
    }

    /// Forces the mock backend and mock tools.
    pub fn force_mock(&mut self) {
        self.mock_mode = true;
    }

    /// Checks everything that can be checked before any stage runs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let input = self
            .input_csv
            .as_deref()
            .ok_or_else(|| PipelineError::precondition("no input CSV given"))?;
        if !input.is_file() {
            return Err(PipelineError::precondition(format!(
                "input file {} does not exist",
                input.display()
            )));
        }
        if self.title.as_deref().is_none_or(|t| t.trim().is_empty()) {
            return Err(PipelineError::precondition("no title given"));
        }
        if self.fps == 0 {
            return Err(PipelineError::precondition("fps must be positive"));
        }
        if self.max_repair_attempts == 0 {
            return Err(PipelineError::precondition("max_repair_attempts must be at least 1"));
        }
        let backend = self.effective_backend();
        backend
            .validate()
            .map_err(|e| PipelineError::precondition(e.to_string()))?;
        if backend.kind == BackendKind::Mock {
            let t = backend.transcript_path.as_deref().expect("validated");
            if !t.is_file() {
                return Err(PipelineError::precondition(format!(
                    "mock transcript {} does not exist",
                    t.display()
                )));
            }
        }
        if !self.mock_mode {
            for (name, tool) in [("renderer", &self.renderer), ("tts", &self.tts), ("synth", &self.synth)] {
                if tool.kind == ToolKind::Command {
                    tool.program(name)?;
                }
            }
        }
        Ok(())
    }

    pub fn effective_backend(&self) -> BackendConfig {
        let mut b = self.backend.clone();
        if self.mock_mode {
            b.kind = BackendKind::Mock;
        }
        b
    }

    pub(crate) fn agent_config(&self) -> crate::analyst::AgentConfig {
        crate::analyst::AgentConfig {
            max_attempts: self.max_repair_attempts,
            prompt_rows: self.prompt_rows.filter(|&n| n > 0),
        }
    }

    pub(crate) fn renderer(&self) -> Result<Box<dyn Renderer>, PipelineError> {
        Ok(match (self.mock_mode, self.renderer.kind) {
            (false, ToolKind::Command) => Box::new(CommandRenderer {
                program: self.renderer.program("renderer")?,
                args: self.renderer.args.clone(),
                timeout: self.renderer.timeout(),
            }),
            _ => Box::new(MockRenderer::default()),
        })
    }

    pub(crate) fn tts(&self) -> Result<Box<dyn SpeechSynth>, PipelineError> {
        Ok(match (self.mock_mode, self.tts.kind) {
            (false, ToolKind::Command) => Box::new(CommandTts {
                program: self.tts.program("tts")?,
                args: self.tts.args.clone(),
                voice: self.tts.voice.clone(),
                timeout: self.tts.timeout(),
            }),
            _ => Box::new(MockTts::default()),
        })
    }

    pub(crate) fn synth(&self) -> Result<Box<dyn VideoSynth>, PipelineError> {
        Ok(match (self.mock_mode, self.synth.kind) {
            (false, ToolKind::Command) => Box::new(CommandSynth {
                program: self.synth.program("synth")?,
                args: self.synth.args.clone(),
                timeout: self.synth.timeout(),
            }),
            _ => Box::new(MockSynth),
        })
    }
}
