use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{run_tool, MediaError};
use crate::svg::parse_svg;
use crate::timeline::{Property, Timeline};

pub const DEFAULT_FPS: u32 = 30;

/// Files and settings handed to the synthesizer.
#[derive(Debug, Clone, Copy)]
pub struct VideoInputs<'a> {
    pub timeline: &'a Timeline,
    pub timeline_path: &'a Path,
    pub base_svg: &'a Path,
    pub annotated_svg: &'a Path,
    pub audio: &'a Path,
    pub out_dir: &'a Path,
    pub fps: u32,
}

pub trait VideoSynth: Send + Sync {
    /// Produces the video (or its stand-in) and returns its path.
    fn synthesize(&self, inputs: &VideoInputs<'_>) -> Result<PathBuf, MediaError>;
}

pub fn synthesize_video(inputs: &VideoInputs<'_>, synth: &dyn VideoSynth) -> Result<PathBuf, MediaError> {
    if !(inputs.timeline.duration > 0.0) {
        return Err(MediaError::SynthFailure("timeline has zero duration".into()));
    }
    if inputs.fps == 0 {
        return Err(MediaError::SynthFailure("fps must be positive".into()));
    }
    for path in [inputs.base_svg, inputs.annotated_svg, inputs.audio] {
        if !path.is_file() {
            return Err(MediaError::SynthFailure(format!("missing input {}", path.display())));
        }
    }
    synth.synthesize(inputs)
}

/// Consecutive frames showing the same state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSegment {
    pub start_frame: u64,
    /// Inclusive.
    pub end_frame: u64,
    pub digest: String,
    pub visible: Vec<String>,
    /// Visible elements drawn at reduced opacity.
    pub dimmed: Vec<String>,
}

/// What the mock synthesizer writes instead of pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub fps: u32,
    pub duration: f64,
    pub frame_count: u64,
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub audio: String,
    pub segments: Vec<FrameSegment>,
}

impl VideoManifest {
    pub fn segment_at(&self, frame: u64) -> Option<&FrameSegment> {
        self.segments
            .iter()
            .find(|s| s.start_frame <= frame && frame <= s.end_frame)
    }
}

/// Samples the timeline at every frame and records run-length segments of
/// identical visible state.
#[derive(Debug, Clone, Default)]
pub struct MockSynth;

pub(crate) fn frame_state(timeline: &Timeline, t: f64) -> (String, Vec<String>, Vec<String>) {
    let mut hasher = Sha256::new();
    let mut visible = Vec::new();
    let mut dimmed = Vec::new();
    for id in timeline.initial_visibility.keys() {
        if !timeline.visible_at(id, t) {
            continue;
        }
        hasher.update(id.as_bytes());
        for p in Property::ALL {
            let v = (timeline.value_at(id, p, t) * 1000.0).round() as i64;
            hasher.update(v.to_le_bytes());
        }
        if timeline.value_at(id, Property::Opacity, t) < 1.0 - 1e-9 {
            dimmed.push(id.clone());
        }
        visible.push(id.clone());
    }
    (hex::encode(hasher.finalize()), visible, dimmed)
}

impl VideoSynth for MockSynth {
    fn synthesize(&self, inputs: &VideoInputs<'_>) -> Result<PathBuf, MediaError> {
        let tl = inputs.timeline;
        let svg = std::fs::read_to_string(inputs.annotated_svg)?;
        let size = parse_svg(&svg).ok().and_then(|d| d.width_height());
        let frame_count = (tl.duration * inputs.fps as f64).round() as u64;
        let mut segments: Vec<FrameSegment> = Vec::new();
        for f in 0..frame_count {
            let (digest, visible, dimmed) = frame_state(tl, f as f64 / inputs.fps as f64);
            match segments.last_mut() {
                Some(s) if s.digest == digest => s.end_frame = f,
                _ => segments.push(FrameSegment {
                    start_frame: f,
                    end_frame: f,
                    digest,
                    visible,
                    dimmed,
                }),
            }
        }
        let manifest = VideoManifest {
            fps: inputs.fps,
            duration: tl.duration,
            frame_count,
            width: size.map(|s| s.0),
            height: size.map(|s| s.1),
            audio: inputs
                .audio
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            segments,
        };
        let path = inputs.out_dir.join("video_manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// External synthesizer. Receives the input paths and fps as JSON on stdin
/// and prints `{"video": path}`.
#[derive(Debug, Clone)]
pub struct CommandSynth {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

#[derive(Deserialize)]
struct SynthReply {
    video: PathBuf,
}

impl VideoSynth for CommandSynth {
    fn synthesize(&self, inputs: &VideoInputs<'_>) -> Result<PathBuf, MediaError> {
        let request = serde_json::json!({
            "timeline": inputs.timeline_path,
            "base_svg": inputs.base_svg,
            "annotated_svg": inputs.annotated_svg,
            "audio": inputs.audio,
            "fps": inputs.fps,
            "output_dir": inputs.out_dir,
        });
        let out = run_tool(
            &self.program,
            &self.args,
            Some(inputs.out_dir),
            request.to_string().as_bytes(),
            self.timeout,
        )?;
        if out.code != Some(0) {
            return Err(MediaError::SynthFailure(format!(
                "exit status {:?}: {}",
                out.code,
                out.stderr.trim()
            )));
        }
        let reply: SynthReply = serde_json::from_slice(&out.stdout)
            .map_err(|e| MediaError::SynthFailure(format!("unreadable reply: {e}")))?;
        let path = if reply.video.is_absolute() {
            reply.video
        } else {
            inputs.out_dir.join(reply.video)
        };
        if !path.is_file() {
            return Err(MediaError::SynthFailure(format!("{} was not written", path.display())));
        }
        Ok(path)
    }
}
