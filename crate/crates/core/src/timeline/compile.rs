use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::recipes::{keyframes_for, Easing, Effect, Property, RecipeContext, ANNOTATION_FADE_SECONDS};
use crate::model::AnimationType;
use crate::report::ValidationReport;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub time: f64,
    pub property: Property,
    pub value: f64,
    /// Easing of the segment that starts at this keyframe.
    pub easing: Easing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Visible,
    Hidden,
}

/// Per-element keyframe tracks over the audio duration. Each track is
/// ordered by time, then property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TimelineRepr", from = "TimelineRepr")]
pub struct Timeline {
    pub duration: f64,
    pub initial_visibility: BTreeMap<String, Visibility>,
    pub tracks: BTreeMap<String, Vec<Keyframe>>,
}

#[derive(Serialize, Deserialize)]
struct TimelineRepr {
    duration: f64,
    initial_visibility: BTreeMap<String, Visibility>,
    tracks: Vec<TrackRepr>,
}

#[derive(Serialize, Deserialize)]
struct TrackRepr {
    element_id: String,
    keyframes: Vec<Keyframe>,
}

impl From<Timeline> for TimelineRepr {
    fn from(t: Timeline) -> Self {
        TimelineRepr {
            duration: t.duration,
            initial_visibility: t.initial_visibility,
            tracks: t
                .tracks
                .into_iter()
                .map(|(element_id, keyframes)| TrackRepr { element_id, keyframes })
                .collect(),
        }
    }
}

impl From<TimelineRepr> for Timeline {
    fn from(r: TimelineRepr) -> Self {
        let mut tracks: BTreeMap<String, Vec<Keyframe>> = BTreeMap::new();
        for t in r.tracks {
            tracks.entry(t.element_id).or_default().extend(t.keyframes);
        }
        for track in tracks.values_mut() {
            sort_track(track);
        }
        Timeline {
            duration: r.duration,
            initial_visibility: r.initial_visibility,
            tracks,
        }
    }
}

fn sort_track(track: &mut [Keyframe]) {
    track.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.property.cmp(&b.property)));
}

impl Timeline {
    pub fn empty(duration: f64) -> Self {
        Timeline {
            duration,
            initial_visibility: BTreeMap::new(),
            tracks: BTreeMap::new(),
        }
    }

    pub fn is_hidden_initially(&self, id: &str) -> bool {
        self.initial_visibility.get(id) == Some(&Visibility::Hidden)
    }

    pub fn keyframes(&self, id: &str) -> &[Keyframe] {
        self.tracks.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn keyframe_count(&self) -> usize {
        self.tracks.values().map(Vec::len).sum()
    }

    /// Interpolated value of `property` at `t`. Before the first keyframe the
    /// first value holds, after the last the last value holds.
    pub fn value_at(&self, id: &str, property: Property, t: f64) -> f64 {
        let kfs: Vec<&Keyframe> = self.keyframes(id).iter().filter(|k| k.property == property).collect();
        let (Some(first), Some(last)) = (kfs.first(), kfs.last()) else {
            return property.rest_value();
        };
        if t <= first.time {
            return first.value;
        }
        if t >= last.time {
            return last.value;
        }
        for pair in kfs.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t >= a.time && t < b.time {
                let span = b.time - a.time;
                if span <= 0.0 {
                    return b.value;
                }
                let f = a.easing.apply((t - a.time) / span);
                return a.value + (b.value - a.value) * f;
            }
        }
        last.value
    }

    /// Hidden-initial elements stay hidden until their first keyframe;
    /// after that, and for everything else, visibility is opacity > 0.
    pub fn visible_at(&self, id: &str, t: f64) -> bool {
        if self.is_hidden_initially(id) {
            match self.keyframes(id).first() {
                Some(k) if t >= k.time => {}
                _ => return false,
            }
        }
        self.value_at(id, Property::Opacity, t) > EPS
    }

    /// Range and ordering checks on a compiled or reloaded timeline.
    pub fn check(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if !(self.duration > 0.0) {
            report.violation("timeline-duration", "duration", "duration must be positive");
        }
        for (id, track) in &self.tracks {
            let mut last: BTreeMap<Property, f64> = BTreeMap::new();
            for (i, k) in track.iter().enumerate() {
                let path = format!("tracks.{id}[{i}]");
                if k.time < -EPS || k.time > self.duration + EPS {
                    report.violation(
                        "keyframe-time",
                        &path,
                        format!("time {} is outside [0, {}]", k.time, self.duration),
                    );
                }
                if let Some(prev) = last.insert(k.property, k.time) {
                    if k.time <= prev {
                        report.violation(
                            "track-order",
                            &path,
                            "keyframes of one property must be strictly time-sorted",
                        );
                    }
                }
                let unit = matches!(
                    k.property,
                    Property::Opacity | Property::ClipFraction | Property::WheelFraction
                );
                if unit && !(-EPS..=1.0 + EPS).contains(&k.value) {
                    report.violation(
                        "keyframe-value",
                        &path,
                        format!("{} must lie in [0, 1]", k.property.as_str()),
                    );
                }
            }
        }
        report
    }

    fn apply(&mut self, effect: Effect, report: &mut ValidationReport) {
        let mut groups: BTreeMap<(String, Property), Vec<Keyframe>> = BTreeMap::new();
        for ek in effect.keyframes {
            let mut k = ek.keyframe;
            k.time = k.time.clamp(0.0, self.duration);
            groups.entry((ek.element_id, k.property)).or_default().push(k);
        }
        for ((id, property), new) in groups {
            let a = new.iter().map(|k| k.time).fold(f64::INFINITY, f64::min);
            let b = new.iter().map(|k| k.time).fold(f64::NEG_INFINITY, f64::max);
            let track = self.tracks.entry(id.clone()).or_default();
            let mut conflict = false;
            track.retain(|k| {
                if k.property != property || k.time < a - EPS || k.time > b + EPS {
                    return true;
                }
                let interior = k.time > a + EPS && k.time < b - EPS;
                let replaced = new.iter().find(|n| (n.time - k.time).abs() <= EPS);
                if interior || replaced.is_none_or(|n| (n.value - k.value).abs() > EPS) {
                    conflict = true;
                }
                false
            });
            if conflict {
                report.advisory(
                    "overlapping-animation",
                    &id,
                    format!(
                        "{} keyframes in [{a:.3}, {b:.3}] were replaced by a later directive",
                        property.as_str()
                    ),
                );
            }
            track.extend(new);
            sort_track(track);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledAnimation {
    pub animation: AnimationType,
    pub targets: BTreeSet<String>,
    pub interval: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledAnnotation {
    pub elements: BTreeSet<String>,
    /// Audio interval of the directive's narration segment.
    pub interval: (f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimelineInput {
    pub duration: f64,
    /// Every element the timeline addresses; each gets an initial visibility.
    pub elements: Vec<String>,
    pub marks: BTreeSet<String>,
    pub legends: BTreeSet<String>,
    pub animations: Vec<ScheduledAnimation>,
    pub annotations: Vec<ScheduledAnnotation>,
}

/// Compiles scheduled directives into a timeline. Animations apply in
/// narration order; a later directive replaces earlier keyframes of the
/// same element and property within its interval.
pub fn compile_timeline(input: &TimelineInput) -> (Timeline, ValidationReport) {
    let mut report = ValidationReport::default();
    let mut timeline = Timeline::empty(input.duration);
    for id in &input.elements {
        timeline.initial_visibility.insert(id.clone(), Visibility::Visible);
    }

    let blank = Timeline::empty(input.duration);
    let blank_ctx = RecipeContext {
        marks: &input.marks,
        legends: &input.legends,
        state: &blank,
    };
    for a in &input.animations {
        let fx = keyframes_for(a.animation, &a.targets, a.interval, &blank_ctx);
        for id in fx.starts_hidden {
            timeline.initial_visibility.insert(id, Visibility::Hidden);
        }
    }
    for ann in &input.annotations {
        for id in &ann.elements {
            timeline.initial_visibility.insert(id.clone(), Visibility::Hidden);
        }
    }

    let mut order: Vec<&ScheduledAnimation> = input.animations.iter().collect();
    order.sort_by(|a, b| a.interval.0.total_cmp(&b.interval.0));
    for a in order {
        let fx = keyframes_for(
            a.animation,
            &a.targets,
            a.interval,
            &RecipeContext {
                marks: &input.marks,
                legends: &input.legends,
                state: &timeline,
            },
        );
        timeline.apply(fx, &mut report);
    }

    for ann in &input.annotations {
        let (start, end) = ann.interval;
        let fade_end = (start + ANNOTATION_FADE_SECONDS).min(end);
        let mut fx = Effect::default();
        for id in &ann.elements {
            for (time, value) in [(start, 0.0), (fade_end, 1.0)] {
                fx.keyframes.push(super::ElementKeyframe {
                    element_id: id.clone(),
                    keyframe: Keyframe {
                        time,
                        property: Property::Opacity,
                        value,
                        easing: Easing::Linear,
                    },
                });
            }
        }
        timeline.apply(fx, &mut report);
    }

    for (id, vis) in &timeline.initial_visibility {
        if *vis == Visibility::Hidden && timeline.keyframes(id).is_empty() {
            report.advisory("never-shown", id, "element starts hidden and is never revealed");
        }
    }
    (timeline, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn input(animations: Vec<ScheduledAnimation>) -> TimelineInput {
        TimelineInput {
            duration: 10.0,
            elements: vec!["a".into(), "b".into(), "axis".into()],
            marks: ids(&["a", "b"]),
            legends: BTreeSet::new(),
            animations,
            annotations: Vec::new(),
        }
    }

    fn anim(animation: AnimationType, targets: &[&str], interval: (f64, f64)) -> ScheduledAnimation {
        ScheduledAnimation {
            animation,
            targets: ids(targets),
            interval,
        }
    }

    #[test]
    fn nothing_scheduled() {
        let (t, report) = compile_timeline(&input(vec![]));
        assert!(t.tracks.is_empty());
        assert!(t.initial_visibility.values().all(|v| *v == Visibility::Visible));
        assert_eq!(t.duration, 10.0);
        assert!(report.advisories.is_empty());
    }

    #[test]
    fn line_wipe_hides_until_start() {
        let (t, _) = compile_timeline(&input(vec![anim(AnimationType::LineWipeIn, &["a"], (1.0, 2.5))]));
        assert!(t.is_hidden_initially("a"));
        assert!(!t.visible_at("a", 0.99));
        assert!(t.visible_at("a", 1.0));
        assert_eq!(t.value_at("a", Property::ClipFraction, 1.0), 0.0);
        assert_eq!(t.value_at("a", Property::ClipFraction, 1.75), 0.5);
        assert_eq!(t.value_at("a", Property::ClipFraction, 2.5), 1.0);
        assert!(t.visible_at("b", 0.0));
    }

    #[test]
    fn annotation_fade() {
        let mut inp = input(vec![]);
        inp.elements.push("note".into());
        inp.annotations.push(ScheduledAnnotation {
            elements: ids(&["note"]),
            interval: (4.2, 6.0),
        });
        let (t, _) = compile_timeline(&inp);
        let k = t.keyframes("note");
        assert_eq!(k.len(), 2);
        assert_eq!((k[0].time, k[0].value), (4.2, 0.0));
        assert!((k[1].time - 4.7).abs() < 1e-12);
        assert_eq!(k[1].value, 1.0);
        assert!(!t.visible_at("note", 4.1));

        inp.annotations[0].interval = (1.0, 1.2);
        let (t, _) = compile_timeline(&inp);
        assert_eq!(t.keyframes("note")[1].time, 1.2);
    }

    #[test]
    fn entrance_then_exit() {
        let (t, _) = compile_timeline(&input(vec![
            anim(AnimationType::FadeOut, &["a"], (5.0, 6.0)),
            anim(AnimationType::FadeIn, &["a"], (1.0, 2.0)),
        ]));
        assert!(!t.visible_at("a", 0.5));
        assert!(t.visible_at("a", 3.0));
        assert!(!t.visible_at("a", 6.5));
        assert!(t.check().is_passing());
    }

    #[test]
    fn emphasis_skips_hidden_elements() {
        let (t, _) = compile_timeline(&input(vec![
            anim(AnimationType::HighlightOneAndFadeOthers, &["a"], (1.0, 2.0)),
            anim(AnimationType::FadeIn, &["b"], (3.0, 4.0)),
        ]));
        assert_eq!(t.keyframes("b").len(), 2);
    }

    #[test]
    fn overlap_is_last_writer_wins() {
        let (t, report) = compile_timeline(&input(vec![
            anim(AnimationType::ShineInAShortDuration, &["a"], (1.0, 4.0)),
            anim(AnimationType::FadeOut, &["a"], (2.0, 3.0)),
        ]));
        assert!(report.advisories.iter().any(|a| a.code == "overlapping-animation"));
        assert!(t.check().is_passing());
        assert_eq!(t.value_at("a", Property::Opacity, 3.0), 0.0);
    }

    #[test]
    fn json_shape_round_trips() {
        let (t, _) = compile_timeline(&input(vec![anim(AnimationType::FadeIn, &["a"], (1.0, 2.0))]));
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["tracks"][0]["element_id"], "a");
        assert_eq!(v["tracks"][0]["keyframes"][0]["property"], "opacity");
        assert_eq!(v["tracks"][0]["keyframes"][0]["easing"], "linear");
        assert_eq!(v["initial_visibility"]["a"], "hidden");
        let back: Timeline = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }
}
