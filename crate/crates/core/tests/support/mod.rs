//! Fixture loaders, generators and oracles shared by the integration tests
//! and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use datavideo_core::analyst::analyst_contract;
use datavideo_core::designer::designer_contract;
use datavideo_core::ingest::{parse_csv, parse_description_response};
use datavideo_core::media::{MockTts, SpeechSynth};
use datavideo_core::model::{AnimationCategory, AnimationDirective, AnimationType};
use datavideo_core::timeline::{
    align_segments, compile_timeline, locate_in_order, ScheduledAnimation, Span, Timeline, TimelineInput,
};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

// ---------------------------------------------------------------- contracts

#[derive(Deserialize)]
struct CaseFile {
    table_csv: String,
    narration: String,
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    name: String,
    agent: String,
    reply: String,
    expect: String,
}

#[derive(Debug)]
pub struct CaseOutcome {
    pub name: String,
    pub expected: String,
    pub got: String,
}

impl CaseOutcome {
    pub fn ok(&self) -> bool {
        self.expected == self.got
    }
}

/// Runs every reply in `contract_cases.json` through its agent's contract.
/// The outcome is `ok` or the code of the first violation.
pub fn run_contract_cases() -> Vec<CaseOutcome> {
    let text = std::fs::read_to_string(fixtures().join("contract_cases.json")).unwrap();
    let file: CaseFile = serde_json::from_str(&text).unwrap();
    let table = parse_csv(&file.table_csv, "Product sales").unwrap();
    let first_code = |vs: Vec<datavideo_core::report::Violation>| vs[0].code.clone();
    file.cases
        .into_iter()
        .map(|c| {
            let got = match c.agent.as_str() {
                "description" => parse_description_response(&c.reply)
                    .map(|_| "ok".to_string())
                    .unwrap_or_else(|e| e.code().to_string()),
                "analyst" => analyst_contract(&c.reply, &table)
                    .map(|_| "ok".to_string())
                    .unwrap_or_else(first_code),
                "designer" => designer_contract(&c.reply, &file.narration, &table, None)
                    .map(|_| "ok".to_string())
                    .unwrap_or_else(first_code),
                other => panic!("unknown agent {other}"),
            };
            CaseOutcome {
                name: c.name,
                expected: c.expect,
                got,
            }
        })
        .collect()
}

// ------------------------------------------------------------ extract fuzz

const PROSE: &[&str] = &[
    "Here is the result:",
    "Sure! The answer follows.",
    "I thought about it step by step.",
    "Final output below",
    "Hope this helps.",
    "Let me know if you need changes.",
];

const STRING_PIECES: &[&str] = &[
    "plain",
    "with {braces}",
    "with [brackets]",
    "quote \" inside",
    "back\\slash",
    "```",
    "é ü 日本",
    "}{][",
    "",
];

fn random_string(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| *STRING_PIECES.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_value(rng: &mut ChaCha8Rng, depth: u32) -> Value {
    let leaf = depth >= 3 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..5) {
            0 => Value::Null,
            1 => Value::Bool(rng.gen()),
            2 => json!(rng.gen_range(-1000..1000)),
            3 => json!(rng.gen_range(-1e3..1e3f64)),
            _ => Value::String(random_string(rng)),
        };
    }
    random_container(rng, depth)
}

fn random_container(rng: &mut ChaCha8Rng, depth: u32) -> Value {
    let n = rng.gen_range(0..4);
    if rng.gen_bool(0.7) {
        let mut m = Map::new();
        for i in 0..n {
            m.insert(format!("k{i}_{}", random_string(rng)), random_value(rng, depth + 1));
        }
        Value::Object(m)
    } else {
        Value::Array((0..n).map(|_| random_value(rng, depth + 1)).collect())
    }
}

fn wrap(rng: &mut ChaCha8Rng, payload: &str) -> String {
    let before = *PROSE.choose(rng).unwrap();
    let after = *PROSE.choose(rng).unwrap();
    match rng.gen_range(0..4) {
        0 => payload.to_string(),
        1 => format!("```json\n{payload}\n```"),
        2 => format!("{before}\n```\n{payload}\n```\n{after}"),
        _ => format!("{before} {payload} {after}"),
    }
}

/// One fuzz case: the wrapped reply and what a reference parser makes of the
/// embedded payload (`None` when the payload is not valid JSON).
pub struct FuzzCase {
    pub reply: String,
    pub reference: Option<Value>,
}

/// 40 valid nested payloads plus 10 broken flat ones, each wrapped in
/// prose and/or fences. Broken payloads have no nested delimiters, so no
/// complete inner value can be recovered from them.
pub fn extract_fuzz_corpus(seed: u64) -> Vec<FuzzCase> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..40 {
        let v = random_container(&mut rng, 0);
        let payload = if i % 2 == 0 {
            serde_json::to_string(&v).unwrap()
        } else {
            serde_json::to_string_pretty(&v).unwrap()
        };
        let reply = wrap(&mut rng, &payload);
        out.push(FuzzCase {
            reference: serde_json::from_str(&payload).ok(),
            reply,
        });
    }
    for i in 0..10 {
        let payload = match i % 5 {
            0 => "{\"a\": 1, \"b\": \"two\",}".to_string(),
            1 => "{\"a\": 1, \"b\": \"tw".to_string(),
            2 => "[1, 2, 3".to_string(),
            3 => "{'a': 1}".to_string(),
            _ => "{\"a\" 1}".to_string(),
        };
        let reply = wrap(&mut rng, &payload);
        out.push(FuzzCase {
            reference: serde_json::from_str(&payload).ok(),
            reply,
        });
    }
    out
}

// ---------------------------------------------------------- animation rules

pub const SENTENCES: usize = 8;
pub const ROWS: usize = 6;

pub fn sentence(i: usize) -> String {
    format!("In part {i} the value of item {i} changes.")
}

pub fn segment(i: usize) -> String {
    format!("the value of item {i}")
}

pub fn legality_narration() -> String {
    (0..SENTENCES).map(sentence).collect::<Vec<_>>().join(" ")
}

fn directive(animation: AnimationType, s: usize, rows: &[usize]) -> (usize, AnimationDirective) {
    let target = if rows.is_empty() {
        "the axes".to_string()
    } else {
        format!("item row {}", rows[0])
    };
    (
        s,
        AnimationDirective {
            animation,
            narration: segment(s),
            target,
            index: rows.to_vec(),
            explanation: String::new(),
        },
    )
}

const ROW_ENTRANCES: &[AnimationType] = &[
    AnimationType::BarGrowIn,
    AnimationType::LineWipeIn,
    AnimationType::PieWheelIn,
    AnimationType::ScatterFadeIn,
    AnimationType::FadeIn,
    AnimationType::FloatIn,
    AnimationType::FlyIn,
    AnimationType::ZoomIn,
];

const EMPHASES: &[AnimationType] = &[
    AnimationType::BarBounce,
    AnimationType::ZoomInThenZoomOut,
    AnimationType::ShineInAShortDuration,
    AnimationType::HighlightOneAndFadeOthers,
];

/// A legal directive list over [`legality_narration`]: axes in sentence 0,
/// row entrances in sentences 1 to 3, emphases after them, exits last, and
/// sentences 6 and 7 left free. Row 0 always has an entrance.
pub fn clean_directives(rng: &mut ChaCha8Rng) -> Vec<AnimationDirective> {
    let mut list = vec![directive(AnimationType::AxesFadeIn, 0, &[])];
    for r in 0..ROWS {
        let entrance = r == 0 || rng.gen_bool(0.6);
        let mut s = if entrance {
            let s = rng.gen_range(1..=3);
            list.push(directive(*ROW_ENTRANCES.choose(rng).unwrap(), s, &[r]));
            s + 1
        } else {
            1
        };
        while s <= 5 && rng.gen_bool(0.5) {
            let at = rng.gen_range(s..=5);
            list.push(directive(*EMPHASES.choose(rng).unwrap(), at, &[r]));
            s = at + 1;
        }
        if s <= 5 && rng.gen_bool(0.3) {
            list.push(directive(AnimationType::FadeOut, rng.gen_range(s..=5), &[r]));
        }
    }
    list.sort_by_key(|(s, _)| *s);
    list.into_iter().map(|(_, d)| d).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleClass {
    FirstSentence,
    AppearBeforeEmphasis,
    EmphasisAfterExit,
    VerbatimSegment,
}

impl RuleClass {
    pub const ALL: [RuleClass; 4] = [
        RuleClass::FirstSentence,
        RuleClass::AppearBeforeEmphasis,
        RuleClass::EmphasisAfterExit,
        RuleClass::VerbatimSegment,
    ];

    pub fn code(self) -> &'static str {
        match self {
            RuleClass::FirstSentence => "first-sentence",
            RuleClass::AppearBeforeEmphasis => "appear-before-emphasis",
            RuleClass::EmphasisAfterExit => "emphasis-after-exit",
            RuleClass::VerbatimSegment => "segment-not-found",
        }
    }
}

fn sentence_of(d: &AnimationDirective) -> usize {
    d.narration.rsplit(' ').next().unwrap().parse().unwrap()
}

fn insert_sorted(list: &mut Vec<AnimationDirective>, d: AnimationDirective) {
    let s = sentence_of(&d);
    let pos = list.iter().position(|x| sentence_of(x) > s).unwrap_or(list.len());
    list.insert(pos, d);
}

/// Breaks exactly one rule of `class` in a clean directive list.
pub fn inject(rng: &mut ChaCha8Rng, clean: &[AnimationDirective], class: RuleClass) -> Vec<AnimationDirective> {
    let mut list = clean.to_vec();
    match class {
        RuleClass::FirstSentence => {
            let (_, d) = directive(AnimationType::AxesFadeIn, rng.gen_range(1..SENTENCES), &[]);
            insert_sorted(&mut list, d);
        }
        RuleClass::AppearBeforeEmphasis => {
            let entered: Vec<(usize, usize)> = list
                .iter()
                .filter(|d| d.animation.category() == AnimationCategory::Entrance && !d.index.is_empty())
                .map(|d| (d.index[0], sentence_of(d)))
                .collect();
            let (row, s) = *entered.choose(rng).unwrap();
            let (_, d) = directive(*EMPHASES.choose(rng).unwrap(), rng.gen_range(0..s), &[row]);
            insert_sorted(&mut list, d);
        }
        RuleClass::EmphasisAfterExit => {
            let row = rng.gen_range(0..ROWS);
            insert_sorted(&mut list, directive(AnimationType::FadeOut, 6, &[row]).1);
            insert_sorted(&mut list, directive(*EMPHASES.choose(rng).unwrap(), 7, &[row]).1);
        }
        RuleClass::VerbatimSegment => {
            let i = rng.gen_range(0..list.len());
            list[i].narration = list[i].narration.replace("value", "amount");
        }
    }
    list
}

// ---------------------------------------------------------- segment oracle

/// Every position at or after `cursor` where the segment's words occur
/// separated by whitespace runs; the first such match.
pub fn brute_force_locate(narration: &str, segment: &str, cursor: usize) -> Option<Span> {
    let words: Vec<String> = segment.split_whitespace().map(regex::escape).collect();
    if words.is_empty() {
        return None;
    }
    let re = Regex::new(&format!("^(?:{})", words.join(r"\s+"))).unwrap();
    let starts: Vec<(usize, usize)> = narration.char_indices().enumerate().map(|(c, (b, _))| (c, b)).collect();
    starts.iter().filter(|(c, _)| *c >= cursor).find_map(|&(c, b)| {
        re.find(&narration[b..]).map(|m| Span {
            start_char: c,
            end_char: c + m.as_str().chars().count(),
        })
    })
}

const VOCAB: &[&str] = &[
    "sales", "rose", "fell", "a", "an", "the", "A", "B", "2021", "peak", "low", "rose.",
];
const GAPS: &[&str] = &[" ", " ", " ", "  ", "\t", "\n", " \n "];

/// Narration with irregular whitespace, a segment that usually occurs in it,
/// and a cursor.
pub fn random_locate_triple(rng: &mut ChaCha8Rng) -> (String, String, usize) {
    let n = rng.gen_range(1..25);
    let words: Vec<&str> = (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect();
    let mut narration = String::new();
    if rng.gen_bool(0.2) {
        narration.push(' ');
    }
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            narration.push_str(GAPS.choose(rng).unwrap());
        }
        narration.push_str(w);
    }
    let segment = if rng.gen_bool(0.8) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(a..n) + 1;
        let mut s = words[a..b].join(GAPS.choose(rng).unwrap());
        if rng.gen_bool(0.2) {
            s = format!(" {s} ");
        }
        if rng.gen_bool(0.2) && s.len() > 1 {
            s = s[1..].trim_start().to_string();
        }
        s
    } else {
        let k = rng.gen_range(0..3);
        (0..k)
            .map(|_| *VOCAB.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let len = narration.chars().count();
    let cursor = rng.gen_range(0..=len);
    (narration, segment, if rng.gen_bool(0.3) { 0 } else { cursor })
}

// ------------------------------------------------------- random timelines

pub struct GeneratedTimeline {
    pub narration: String,
    pub audio_duration: f64,
    pub animations: Vec<ScheduledAnimation>,
    pub timeline: Timeline,
}

pub fn mark_id(r: usize) -> String {
    format!("mark-{r}")
}

/// A legal one-directive-per-sentence plan over random rows, scheduled with
/// the mock voice and compiled.
pub fn random_timeline(rng: &mut ChaCha8Rng, audio_dir: &Path) -> GeneratedTimeline {
    let rows = rng.gen_range(1..=5);
    let sentences = rng.gen_range(3..=12);
    let narration = (0..sentences).map(sentence).collect::<Vec<_>>().join(" ");

    // per row: not yet shown (0), visible (1), gone (2)
    let mut state: Vec<u8> = (0..rows).map(|_| if rng.gen_bool(0.5) { 0 } else { 1 }).collect();
    let mut plan = vec![(AnimationType::AxesFadeIn, BTreeSet::from(["axis".to_string()]))];
    for _ in 1..sentences {
        let r = rng.gen_range(0..rows);
        let animation = match state[r] {
            0 => {
                state[r] = 1;
                *ROW_ENTRANCES.choose(rng).unwrap()
            }
            1 if rng.gen_bool(0.2) => {
                state[r] = 2;
                AnimationType::FadeOut
            }
            1 => *EMPHASES.choose(rng).unwrap(),
            _ => AnimationType::FadeOut,
        };
        plan.push((animation, BTreeSet::from([mark_id(r)])));
    }
    let segments: Vec<String> = (0..sentences).map(segment).collect();

    let speech = MockTts::default().synthesize(&narration, audio_dir).unwrap();
    let spans: Vec<Span> = locate_in_order(&narration, segments.iter().map(String::as_str))
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let intervals = align_segments(&spans, &speech.timings).unwrap();
    let animations: Vec<ScheduledAnimation> = plan
        .into_iter()
        .zip(intervals)
        .map(|((animation, targets), interval)| ScheduledAnimation {
            animation,
            targets,
            interval,
        })
        .collect();
    let marks: BTreeSet<String> = (0..rows).map(mark_id).collect();
    let mut elements: Vec<String> = marks.iter().cloned().collect();
    elements.push("axis".into());
    let input = TimelineInput {
        duration: speech.duration,
        elements,
        marks,
        legends: BTreeSet::new(),
        animations: animations.clone(),
        annotations: Vec::new(),
    };
    let (timeline, _) = compile_timeline(&input);
    GeneratedTimeline {
        narration,
        audio_duration: speech.duration,
        animations,
        timeline,
    }
}

/// Names of the invariants a generated timeline breaks.
pub fn timeline_invariant_failures(g: &GeneratedTimeline) -> Vec<String> {
    use datavideo_core::timeline::Property;
    let t = &g.timeline;
    let mut out = Vec::new();
    if t.duration != g.audio_duration {
        out.push(format!("duration {} != audio {}", t.duration, g.audio_duration));
    }
    for (id, track) in &t.tracks {
        if track.iter().any(|k| k.time < 0.0 || k.time > t.duration) {
            out.push(format!("{id}: keyframe outside [0, duration]"));
        }
        if track.windows(2).any(|w| w[0].time > w[1].time) {
            out.push(format!("{id}: track not sorted"));
        }
        for p in Property::ALL {
            let times: Vec<f64> = track.iter().filter(|k| k.property == p).map(|k| k.time).collect();
            if times.windows(2).any(|w| w[0] >= w[1]) {
                out.push(format!("{id}: {} keyframes not strictly increasing", p.as_str()));
            }
        }
    }
    let ids: Vec<&String> = t.initial_visibility.keys().collect();
    let mut first_seen = BTreeSet::new();
    for a in &g.animations {
        let (s, e) = a.interval;
        match a.animation.category() {
            AnimationCategory::Emphasis => {
                for id in &ids {
                    for p in Property::ALL {
                        let before = t.value_at(id, p, s);
                        let after = t.value_at(id, p, e);
                        if (before - after).abs() > 1e-9 {
                            out.push(format!("{id}: {} not restored after {}", p.as_str(), a.animation));
                        }
                    }
                }
            }
            AnimationCategory::Entrance => {
                for id in &a.targets {
                    if first_seen.insert(id.clone()) {
                        if !t.is_hidden_initially(id) || t.visible_at(id, s - 1e-6) {
                            out.push(format!("{id}: visible before its entrance"));
                        }
                        if !t.visible_at(id, e) {
                            out.push(format!("{id}: not visible after its entrance"));
                        }
                    }
                }
            }
            AnimationCategory::Exit => {
                for id in &a.targets {
                    first_seen.insert(id.clone());
                    if t.visible_at(id, e) || t.visible_at(id, t.duration) {
                        out.push(format!("{id}: visible after its exit"));
                    }
                }
            }
        }
        for id in &a.targets {
            first_seen.insert(id.clone());
        }
    }
    out
}

// ------------------------------------------------------------ svg documents

const FILLS: &[&str] = &["#4c78a8", "#f58518", "#e45756", "#72b7b2"];

/// A random chart-like SVG: role groups holding rects, circles, paths and
/// labelled text, with random geometry.
pub fn random_svg_parts(rng: &mut ChaCha8Rng) -> Vec<(String, Vec<String>)> {
    let groups = [
        "role-axis",
        "role-mark mark-bar",
        "role-mark mark-point",
        "role-legend",
        "role-title",
    ];
    let mut out = Vec::new();
    for g in groups {
        if g != "role-axis" && rng.gen_bool(0.3) {
            continue;
        }
        let n = rng.gen_range(1..8);
        let mut children = Vec::new();
        for i in 0..n {
            let x = rng.gen_range(0..400);
            let y = rng.gen_range(0..300);
            let fill = FILLS.choose(rng).unwrap();
            let el = match rng.gen_range(0..4) {
                0 => format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"10\" height=\"{}\" fill=\"{fill}\" data-row=\"{i}\"/>",
                    rng.gen_range(1..90)
                ),
                1 => format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{fill}\" data-row=\"{i}\"/>"),
                2 => format!("<path d=\"M{x},{y}L{},{}\" stroke=\"{fill}\"/>", x + 5, y + 5),
                _ => format!("<text x=\"{x}\" y=\"{y}\">{}</text>", VOCAB.choose(rng).unwrap()),
            };
            children.push(el);
        }
        out.push((g.to_string(), children));
    }
    out
}

pub fn assemble_svg(parts: &[(String, Vec<String>)]) -> String {
    let mut s = String::from("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"300\">");
    for (class, children) in parts {
        s.push_str(&format!("<g class=\"{class}\">"));
        for c in children {
            s.push_str(c);
        }
        s.push_str("</g>");
    }
    s.push_str("</svg>");
    s
}

/// Shuffles children within each group and the groups themselves, and moves
/// every element by re-randomizing its x/y coordinates.
pub fn permute_svg(rng: &mut ChaCha8Rng, parts: &[(String, Vec<String>)]) -> Vec<(String, Vec<String>)> {
    let coord = Regex::new(r#"\b(x|y|cx|cy)="\d+""#).unwrap();
    let mut out: Vec<(String, Vec<String>)> = parts
        .iter()
        .map(|(g, children)| {
            let mut c: Vec<String> = children
                .iter()
                .map(|el| {
                    coord
                        .replace_all(el, |caps: &regex::Captures| {
                            format!("{}=\"{}\"", &caps[1], rng.gen_range(0..400))
                        })
                        .into_owned()
                })
                .collect();
            c.shuffle(rng);
            (g.clone(), c)
        })
        .collect();
    out.shuffle(rng);
    out
}

/// Adds `k` annotation leaves with explicit ids at random places; returns
/// the new parts and the injected ids.
pub fn inject_svg(
    rng: &mut ChaCha8Rng,
    parts: &[(String, Vec<String>)],
    k: usize,
) -> (Vec<(String, Vec<String>)>, Vec<String>) {
    let mut out = parts.to_vec();
    let mut ids = Vec::new();
    for i in 0..k {
        let id = format!("note-{i}");
        let el = if rng.gen_bool(0.5) {
            format!("<text id=\"{id}\" class=\"annotation\" data-note=\"{i}\" x=\"5\" y=\"5\">note {i}</text>")
        } else {
            format!("<circle id=\"{id}\" class=\"annotation\" data-note=\"{i}\" cx=\"1\" cy=\"1\" r=\"8\"/>")
        };
        let g = rng.gen_range(0..out.len());
        let pos = rng.gen_range(0..=out[g].1.len());
        out[g].1.insert(pos, el);
        ids.push(id);
    }
    (out, ids)
}

// ------------------------------------------------------------- stock run

use datavideo_core::media::VideoManifest;
use datavideo_core::model::DesignerOutput;
use datavideo_core::pipeline::{ProjectConfig, ProjectManifest};
use datavideo_core::svg::{diff_annotations, parse_svg};

pub const COMPANIES: [&str; 4] = ["Apple", "Microsoft", "Alphabet", "Amazon"];

/// The bundled stock configuration writing into `out`.
pub fn stock_config(out: &Path) -> ProjectConfig {
    let mut c = ProjectConfig::load(&fixtures().join("stock/config.toml")).unwrap();
    c.output_dir = out.to_path_buf();
    c
}

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, rel: &str) -> T {
    serde_json::from_str(&std::fs::read_to_string(dir.join(rel)).unwrap()).unwrap()
}

/// `(check, passed, detail)` for the structural expectations on a finished
/// stock project.
pub fn stock_project_checks(dir: &Path) -> Vec<(&'static str, bool, String)> {
    let mut out = Vec::new();
    let analyst: Value = read_json(dir, "analyst.json");
    let bindings: Value = read_json(dir, "bindings.json");
    let designer: DesignerOutput = read_json(dir, "designer.json");
    let schedule: Vec<Value> = read_json(dir, "schedule.json");
    let video: VideoManifest = read_json(dir, "video_manifest.json");

    let marks = bindings["marks"].as_array().unwrap();
    let annotation_ids: BTreeSet<String> = bindings["annotation_elements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let series_of = |company: &str| -> BTreeSet<String> {
        marks
            .iter()
            .filter(|m| m["series_key"].as_str() == Some(company))
            .map(|m| m["id"].as_str().unwrap().to_string())
            .filter(|id| !annotation_ids.contains(id))
            .collect()
    };
    let series: BTreeSet<&str> = marks.iter().filter_map(|m| m["series_key"].as_str()).collect();
    out.push((
        "line chart with 4 series",
        analyst["Visualization_Type"] == "line" && series == BTreeSet::from(COMPANIES),
        format!("type {}, series {series:?}", analyst["Visualization_Type"]),
    ));

    let mut highlight_intervals: Vec<(String, f64, f64)> = Vec::new();
    let mut resolved = 0;
    for company in COMPANIES {
        let expected = series_of(company);
        let hit = designer.animation_directives.iter().enumerate().any(|(i, d)| {
            let els: BTreeSet<String> = bindings["animations"][i]["elements"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_str().unwrap().to_string())
                .collect();
            let ok = d.animation.category() == AnimationCategory::Emphasis
                && d.narration.starts_with(company)
                && els == expected;
            if ok && d.animation == AnimationType::HighlightOneAndFadeOthers {
                let s = schedule
                    .iter()
                    .find(|e| e["kind"] == "animation" && e["directive"] == i)
                    .unwrap();
                highlight_intervals.push((
                    company.to_string(),
                    s["start"].as_f64().unwrap(),
                    s["end"].as_f64().unwrap(),
                ));
            }
            ok
        });
        resolved += hit as usize;
    }
    out.push((
        "each company emphasized on exactly its series",
        resolved == 4 && COMPANIES.iter().all(|c| series_of(c).len() == 13),
        format!("{resolved}/4 companies"),
    ));

    let base = parse_svg(&std::fs::read_to_string(dir.join("base.svg")).unwrap()).unwrap();
    let annotated = parse_svg(&std::fs::read_to_string(dir.join("annotated.svg")).unwrap()).unwrap();
    let diffed: BTreeSet<String> = diff_annotations(&base, &annotated)
        .into_iter()
        .filter(|id| {
            let idx = annotated.index_of(id).unwrap();
            annotated.get(idx).children.is_empty()
        })
        .collect();
    let per_directive_ok = bindings["annotations"].as_array().unwrap().iter().all(|a| {
        let tags: BTreeSet<String> = a["elements"]
            .as_array()
            .unwrap()
            .iter()
            .map(|id| annotated.element(id.as_str().unwrap()).unwrap().tag.clone())
            .collect();
        tags.contains("text") && tags.len() == 2
    });
    out.push((
        "annotation diff finds the point and text annotations",
        diffed == annotation_ids && annotation_ids.len() == 8 && per_directive_ok,
        format!("{} diffed, {} bound", diffed.len(), annotation_ids.len()),
    ));

    let fps = video.fps as f64;
    let frame_tol = 1.0 / fps;
    let entrance_end = schedule
        .iter()
        .filter(|e| e["kind"] == "animation")
        .filter(|e| {
            let i = e["directive"].as_u64().unwrap() as usize;
            designer.animation_directives[i].animation.category() == AnimationCategory::Entrance
        })
        .map(|e| e["end"].as_f64().unwrap())
        .fold(0.0, f64::max);
    let all_series: BTreeSet<String> = COMPANIES.iter().flat_map(|c| series_of(c)).collect();
    let mut stray = 0;
    let mut missing = 0;
    for frame in 0..video.frame_count {
        let t = frame as f64 / fps;
        let seg = video.segment_at(frame).unwrap();
        let dimmed: BTreeSet<&String> = seg.dimmed.iter().collect();
        let inside = highlight_intervals
            .iter()
            .find(|(_, s, e)| t >= s - frame_tol && t <= e + frame_tol);
        match inside {
            None if t >= entrance_end => stray += all_series.iter().filter(|id| dimmed.contains(id)).count(),
            Some((company, s, e)) if t > s + 0.2 && t < e - 0.2 => {
                let own = series_of(company);
                let others = all_series.difference(&own);
                missing += others.filter(|id| !dimmed.contains(id)).count();
                missing += own.iter().filter(|id| dimmed.contains(id)).count();
            }
            _ => {}
        }
    }
    out.push((
        "others dimmed only inside each highlight interval",
        stray == 0 && missing == 0 && highlight_intervals.len() == 4,
        format!(
            "{} highlights, {stray} stray dimmed, {missing} missing",
            highlight_intervals.len()
        ),
    ));
    out
}

/// Manifest with run timestamps cleared.
pub fn manifest_without_times(dir: &Path) -> ProjectManifest {
    let mut m = ProjectManifest::load(dir).unwrap();
    for s in &mut m.stages {
        s.started_at_ms = 0;
        s.finished_at_ms = 0;
    }
    m
}

/// Relative paths and bytes of every file under `dir` except the manifest.
pub fn tree_bytes(dir: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut std::collections::BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.file_name().unwrap() != "manifest.json" {
                out.insert(
                    p.strip_prefix(root).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    let mut out = Default::default();
    walk(dir, dir, &mut out);
    out
}

// -------------------------------------------------------- alignment cases

const FOX: &str = "The quick brown fox jumps over the lazy dog.";
const SALES: &str = "Sales  rose\tin 2021.\nThen they fell.";

/// `(narration, segment, interval)` with intervals worked out by hand at
/// 0.3 s per word.
pub const ALIGN_FIXTURES: [(&str, &str, (f64, f64)); 10] = [
    (FOX, "brown fox", (0.6, 1.2)),
    (FOX, "The", (0.0, 0.3)),
    (FOX, "dog.", (2.4, 2.7)),
    (FOX, "lazy dog", (2.1, 2.7)),
    (FOX, "the lazy", (1.8, 2.4)),
    (FOX, "ick bro", (0.3, 0.9)),
    (SALES, "rose in", (0.3, 0.9)),
    (SALES, "2021. Then", (0.9, 1.5)),
    (SALES, "fell", (1.8, 2.1)),
    (SALES, "Sales rose in 2021. Then they fell.", (0.0, 2.1)),
];

/// Fixtures whose computed interval differs from the hand-computed one.
pub fn align_mismatches(audio_dir: &Path) -> Vec<String> {
    use datavideo_core::timeline::locate_span;
    let mut out = Vec::new();
    for (narration, segment, expected) in ALIGN_FIXTURES {
        let speech = MockTts::default().synthesize(narration, audio_dir).unwrap();
        let span = locate_span(narration, segment, 0).unwrap();
        let got = align_segments(&[span], &speech.timings).unwrap()[0];
        if got != expected {
            out.push(format!("\"{segment}\": {got:?} != {expected:?}"));
        }
    }
    out
}
