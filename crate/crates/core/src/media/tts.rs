use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use super::{run_tool, MediaError};
use crate::report::ValidationReport;
use crate::timeline::{attach_char_spans, tokenize, WordTiming};

/// Speaking time per token in the mock voice.
pub const MOCK_WORD_MILLIS: u64 = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct SpeechResult {
    pub audio_path: PathBuf,
    pub timings: Vec<WordTiming>,
    pub duration: f64,
    pub report: ValidationReport,
}

pub trait SpeechSynth: Send + Sync {
    /// Speaks `narration` into an audio file inside `out_dir`.
    fn synthesize(&self, narration: &str, out_dir: &Path) -> Result<SpeechResult, MediaError>;
}

pub fn synthesize_speech(narration: &str, tts: &dyn SpeechSynth, out_dir: &Path) -> Result<SpeechResult, MediaError> {
    if narration.trim().is_empty() {
        return Err(MediaError::EmptyNarration);
    }
    tts.synthesize(narration, out_dir)
}

/// Writes `seconds` of 16-bit mono silence.
pub fn write_silent_wav(path: &Path, seconds: f64, sample_rate: u32) -> Result<(), MediaError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let to_err = |e: hound::Error| MediaError::Io(e.to_string());
    let mut writer = hound::WavWriter::create(path, spec).map_err(to_err)?;
    let samples = (seconds * sample_rate as f64).round() as u64;
    {
        let mut w = writer.get_i16_writer(samples as u32);
        for _ in 0..samples {
            w.write_sample(0);
        }
        w.flush().map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}

/// Fixed-rate voice: every token takes `MOCK_WORD_MILLIS`, back to back,
/// over a silent audio file of the same length.
#[derive(Debug, Clone)]
pub struct MockTts {
    pub sample_rate: u32,
}

impl Default for MockTts {
    fn default() -> Self {
        Self { sample_rate: 8000 }
    }
}

impl SpeechSynth for MockTts {
    fn synthesize(&self, narration: &str, out_dir: &Path) -> Result<SpeechResult, MediaError> {
        if narration.trim().is_empty() {
            return Err(MediaError::EmptyNarration);
        }
        let raw: Vec<(String, f64, f64)> = tokenize(narration)
            .into_iter()
            .enumerate()
            .map(|(i, (word, _))| {
                let i = i as u64;
                (
                    word,
                    (i * MOCK_WORD_MILLIS) as f64 / 1000.0,
                    ((i + 1) * MOCK_WORD_MILLIS) as f64 / 1000.0,
                )
            })
            .collect();
        let duration = raw.last().map_or(0.0, |w| w.2);
        let timings = attach_char_spans(narration, &raw).map_err(|e| MediaError::TtsFailure(e.to_string()))?;
        let audio_path = out_dir.join("audio.wav");
        write_silent_wav(&audio_path, duration, self.sample_rate)?;
        Ok(SpeechResult {
            audio_path,
            timings,
            duration,
            report: ValidationReport::default(),
        })
    }
}

/// Spreads `duration` over the narration's tokens in proportion to their
/// character counts.
pub fn estimate_timings(narration: &str, duration: f64) -> Vec<(String, f64, f64)> {
    let tokens = tokenize(narration);
    let total: usize = tokens.iter().map(|(w, _)| w.chars().count()).sum();
    let mut acc = 0usize;
    tokens
        .into_iter()
        .map(|(word, _)| {
            let start = duration * acc as f64 / total as f64;
            acc += word.chars().count();
            let end = duration * acc as f64 / total as f64;
            (word, start, end)
        })
        .collect()
}

/// External voice. Receives `{"text", "voice", "output"}` as JSON on stdin
/// and prints `{"audio", "duration", "words": [{"word", "start", "end"}]}`.
/// `words` may be omitted, in which case timings are estimated.
#[derive(Debug, Clone)]
pub struct CommandTts {
    pub program: String,
    pub args: Vec<String>,
    pub voice: Option<String>,
    pub timeout: Duration,
}

#[derive(Deserialize)]
struct TtsReply {
    audio: PathBuf,
    duration: f64,
    #[serde(default)]
    words: Option<Vec<TtsWord>>,
}

#[derive(Deserialize)]
struct TtsWord {
    word: String,
    start: f64,
    end: f64,
}

impl SpeechSynth for CommandTts {
    fn synthesize(&self, narration: &str, out_dir: &Path) -> Result<SpeechResult, MediaError> {
        if narration.trim().is_empty() {
            return Err(MediaError::EmptyNarration);
        }
        let request = serde_json::json!({
            "text": narration,
            "voice": self.voice,
            "output": out_dir.join("audio.wav"),
        });
        let out = run_tool(
            &self.program,
            &self.args,
            Some(out_dir),
            request.to_string().as_bytes(),
            self.timeout,
        )?;
        if out.code != Some(0) {
            return Err(MediaError::TtsFailure(format!(
                "exit status {:?}: {}",
                out.code,
                out.stderr.trim()
            )));
        }
        let reply: TtsReply = serde_json::from_slice(&out.stdout)
            .map_err(|e| MediaError::TtsFailure(format!("unreadable reply: {e}")))?;
        if !(reply.duration > 0.0) {
            return Err(MediaError::TtsFailure("reply has no positive duration".into()));
        }
        let mut report = ValidationReport::default();
        let raw = match reply.words {
            Some(words) if !words.is_empty() => words.into_iter().map(|w| (w.word, w.start, w.end)).collect(),
            _ => {
                report.advisory(
                    "estimated-timings",
                    "word_timings",
                    "the voice returned no word timings; they were estimated from character counts",
                );
                estimate_timings(narration, reply.duration)
            }
        };
        let timings = attach_char_spans(narration, &raw).map_err(|e| MediaError::TtsFailure(e.to_string()))?;
        let audio_path = if reply.audio.is_absolute() {
            reply.audio
        } else {
            out_dir.join(reply.audio)
        };
        Ok(SpeechResult {
            audio_path,
            timings,
            duration: reply.duration,
            report,
        })
    }
}
