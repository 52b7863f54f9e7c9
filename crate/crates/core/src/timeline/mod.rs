//! The narration is the clock: directive segments are located in the
//! narration text, mapped to audio time through word timings, and compiled
//! into per-element keyframe tracks.

mod compile;
mod recipes;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compile::{
    compile_timeline, Keyframe, ScheduledAnimation, ScheduledAnnotation, Timeline, TimelineInput, Visibility,
};
pub use recipes::{
    keyframes_for, Easing, Effect, ElementKeyframe, Property, RecipeContext, ANNOTATION_FADE_SECONDS, EMPHASIS_RAMP,
};

/// Half-open character range into the narration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start_char: usize,
    pub end_char: usize,
}

impl Span {
    pub fn intersects(&self, other: &Span) -> bool {
        self.start_char < other.end_char && other.start_char < self.end_char
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordTiming {
    pub word: String,
    pub start: f64,
    pub end: f64,
    pub char_span: Span,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimelineError {
    #[error("narration segment not found: \"{0}\"")]
    SegmentNotFound(String),
    #[error("narration segment is empty")]
    EmptySegment,
    #[error("span {}..{} covers no spoken word", .0.start_char, .0.end_char)]
    NoWordOverlap(Span),
    #[error("word timings do not match the narration: {0}")]
    TimingMismatch(String),
}

/// Whitespace-delimited tokens with their character spans.
pub fn tokenize(narration: &str) -> Vec<(String, Span)> {
    let mut out = Vec::new();
    let mut current: Option<(String, usize)> = None;
    for (i, c) in narration.chars().enumerate() {
        if c.is_whitespace() {
            if let Some((word, start)) = current.take() {
                out.push((
                    word,
                    Span {
                        start_char: start,
                        end_char: i,
                    },
                ));
            }
        } else {
            match current.as_mut() {
                Some((word, _)) => word.push(c),
                None => current = Some((c.to_string(), i)),
            }
        }
    }
    if let Some((word, start)) = current {
        let end = start + word.chars().count();
        out.push((
            word,
            Span {
                start_char: start,
                end_char: end,
            },
        ));
    }
    out
}

/// Pairs `(word, start, end)` timings with the narration's tokens. Words
/// must match the tokens one for one, and times must be sorted.
pub fn attach_char_spans(narration: &str, timings: &[(String, f64, f64)]) -> Result<Vec<WordTiming>, TimelineError> {
    let tokens = tokenize(narration);
    if tokens.len() != timings.len() {
        return Err(TimelineError::TimingMismatch(format!(
            "{} timings for {} words",
            timings.len(),
            tokens.len()
        )));
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut last_end = 0.0;
    for (i, ((token, span), (word, start, end))) in tokens.into_iter().zip(timings).enumerate() {
        if &token != word {
            return Err(TimelineError::TimingMismatch(format!(
                "word {i} is \"{word}\", narration has \"{token}\""
            )));
        }
        if !(*start >= last_end && end > start) {
            return Err(TimelineError::TimingMismatch(format!(
                "word {i} timing {start}..{end} is not sorted and non-overlapping"
            )));
        }
        last_end = *end;
        out.push(WordTiming {
            word: token,
            start: *start,
            end: *end,
            char_span: span,
        });
    }
    Ok(out)
}

/// First occurrence of `segment` starting at or after char offset `cursor`.
/// Runs of whitespace compare equal to a single space; leading and trailing
/// whitespace in the segment is ignored.
pub fn locate_span(narration: &str, segment: &str, cursor: usize) -> Result<Span, TimelineError> {
    let (text, starts, ends) = normalize(narration);
    let (needle, _, _) = normalize(segment);
    let needle: Vec<char> = trim_spaces(&needle).to_vec();
    if needle.is_empty() {
        return Err(TimelineError::EmptySegment);
    }
    if needle.len() <= text.len() {
        for k in 0..=text.len() - needle.len() {
            if starts[k] >= cursor && text[k..k + needle.len()] == needle[..] {
                return Ok(Span {
                    start_char: starts[k],
                    end_char: ends[k + needle.len() - 1],
                });
            }
        }
    }
    Err(TimelineError::SegmentNotFound(segment.to_string()))
}

/// Collapses whitespace runs to one space, keeping for every output char the
/// original char range it stands for.
fn normalize(s: &str) -> (Vec<char>, Vec<usize>, Vec<usize>) {
    let chars: Vec<char> = s.chars().collect();
    let (mut out, mut starts, mut ends) = (Vec::new(), Vec::new(), Vec::new());
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            out.push(' ');
            starts.push(i);
            ends.push(j);
            i = j;
        } else {
            out.push(chars[i]);
            starts.push(i);
            ends.push(i + 1);
            i += 1;
        }
    }
    (out, starts, ends)
}

fn trim_spaces(s: &[char]) -> &[char] {
    let start = s.iter().position(|c| *c != ' ').unwrap_or(s.len());
    let end = s.iter().rposition(|c| *c != ' ').map_or(start, |e| e + 1);
    &s[start..end]
}

/// Audio interval of each span: from the first intersecting word's start to
/// the last intersecting word's end.
pub fn align_segments(spans: &[Span], timings: &[WordTiming]) -> Result<Vec<(f64, f64)>, TimelineError> {
    spans
        .iter()
        .map(|span| {
            let mut hits = timings.iter().filter(|w| w.char_span.intersects(span));
            let first = hits.next().ok_or(TimelineError::NoWordOverlap(*span))?;
            let last = hits.next_back().unwrap_or(first);
            Ok((first.start, last.end))
        })
        .collect()
}

/// Locates every segment in list order, each search starting where the
/// previous match began. A segment not found after the cursor is searched
/// again from the start of the narration.
pub fn locate_in_order<'a, I>(narration: &str, segments: I) -> Vec<Result<Span, TimelineError>>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut cursor = 0;
    segments
        .into_iter()
        .map(|seg| {
            let found = locate_span(narration, seg, cursor).or_else(|e| match e {
                TimelineError::SegmentNotFound(_) if cursor > 0 => locate_span(narration, seg, 0),
                other => Err(other),
            });
            if let Ok(span) = &found {
                cursor = cursor.max(span.start_char);
            }
            found
        })
        .collect()
}
