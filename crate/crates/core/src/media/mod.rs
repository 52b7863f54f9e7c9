//! Adapters for the external tools: chart renderer, text-to-speech and video
//! synthesizer. Each has a subprocess implementation and a deterministic
//! mock that satisfies the same contract.

mod html;
mod render;
mod synth;
mod tts;

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use thiserror::Error;
use wait_timeout::ChildExt;

pub use html::export_html;
pub use render::{check_render_contract, render_visualization, CommandRenderer, MockRenderer, Renderer};
pub use synth::{
    synthesize_video, CommandSynth, FrameSegment, MockSynth, VideoInputs, VideoManifest, VideoSynth, DEFAULT_FPS,
};
pub use tts::{
    estimate_timings, synthesize_speech, write_silent_wav, CommandTts, MockTts, SpeechResult, SpeechSynth,
    MOCK_WORD_MILLIS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediaError {
    #[error("renderer rejected the specification: {0}")]
    RendererRejectedSpec(String),
    #[error("renderer crashed ({0})")]
    RendererCrashed(String),
    #[error("rendered mark element `{0}` carries no data-row metadata")]
    MetadataMissing(String),
    #[error("renderer output is not a usable SVG: {0}")]
    InvalidSvg(String),
    #[error("narration is empty")]
    EmptyNarration,
    #[error("text-to-speech failed: {0}")]
    TtsFailure(String),
    #[error("video synthesis failed: {0}")]
    SynthFailure(String),
    #[error("`{program}` timed out after {seconds} s")]
    Timeout { program: String, seconds: u64 },
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MediaError {
    fn from(e: std::io::Error) -> Self {
        MediaError::Io(e.to_string())
    }
}

/// Exit status and captured output of an external tool.
#[derive(Debug)]
pub(crate) struct ToolOutput {
    pub code: Option<i32>,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

/// Runs `program` with `stdin` piped in, killing it after `timeout`.
pub(crate) fn run_tool(
    program: &str,
    args: &[String],
    cwd: Option<&Path>,
    stdin: &[u8],
    timeout: Duration,
) -> Result<ToolOutput, MediaError> {
    let mut cmd = Command::new(program);
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    let mut child = cmd
        .spawn()
        .map_err(|e| MediaError::Io(format!("cannot start `{program}`: {e}")))?;

    let mut pipe_in = child.stdin.take().expect("stdin is piped");
    let input = stdin.to_vec();
    let writer = std::thread::spawn(move || {
        // a tool may exit without reading its input
        let _ = pipe_in.write_all(&input);
    });
    let mut pipe_out = child.stdout.take().expect("stdout is piped");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe_out.read_to_end(&mut buf);
        buf
    });
    let mut pipe_err = child.stderr.take().expect("stderr is piped");
    let err_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = pipe_err.read_to_string(&mut buf);
        buf
    });

    let status = match child.wait_timeout(timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(MediaError::Timeout {
                program: program.to_string(),
                seconds: timeout.as_secs(),
            });
        }
    };
    let _ = writer.join();
    let stdout = reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    Ok(ToolOutput {
        code: status.code(),
        stdout,
        stderr,
    })
}
