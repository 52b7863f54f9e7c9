use std::collections::BTreeSet;
use std::fmt::Write;

use crate::svg::{escape, SvgDoc};
use crate::timeline::{Property, Timeline};

/// Samples inserted between consecutive keyframe times so that eased
/// segments survive the conversion to linear CSS keyframes.
const SUBSTEPS: usize = 4;

/// Self-contained HTML page that plays the timeline as CSS animations over
/// the annotated SVG, started together with the narration audio.
pub fn export_html(
    timeline: &Timeline,
    svg: &SvgDoc,
    annotations: &BTreeSet<String>,
    audio_ref: Option<&str>,
) -> String {
    let mut css = String::new();
    let duration = timeline.duration.max(0.0);
    for (n, id) in timeline.initial_visibility.keys().enumerate() {
        let track = timeline.keyframes(id);
        let selector = format!("[id=\"{}\"]", css_string(id));
        if track.is_empty() {
            if timeline.is_hidden_initially(id) {
                let _ = writeln!(css, "{selector} {{ opacity: 0; }}");
            }
            continue;
        }
        if duration <= 0.0 {
            continue;
        }
        let used: BTreeSet<_> = track.iter().map(|k| k.property).collect();
        let name = format!("dv-{n}");
        let _ = writeln!(css, "@keyframes {name} {{");
        for t in sample_times(timeline, id, duration) {
            let pct = t / duration * 100.0;
            let _ = writeln!(css, "  {} {{ {} }}", fmt_pct(pct), declarations(timeline, id, &used, t));
        }
        css.push_str("}\n");
        let _ = writeln!(
            css,
            "{selector} {{ animation: {name} {}s linear both paused; transform-box: fill-box; transform-origin: 50% 100%; }}",
            fmt_num(duration)
        );
    }

    let mut body = String::new();
    svg.write_element_with(0, 2, &mut body, &|id| {
        annotations.contains(id).then_some("dv-annotation")
    });

    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>data video</title>\n<style>\n");
    out.push_str("body { font-family: sans-serif; margin: 1em; }\n#dv-stage svg { display: block; }\n");
    out.push_str(&css);
    out.push_str("</style>\n</head>\n<body>\n<div id=\"dv-stage\">\n");
    out.push_str(&body);
    out.push_str("</div>\n<button id=\"dv-play\">Play</button>\n");
    if let Some(src) = audio_ref {
        let _ = writeln!(
            out,
            "<audio id=\"dv-audio\" src=\"{}\" preload=\"auto\"></audio>",
            escape(src)
        );
    }
    out.push_str(SCRIPT);
    out.push_str("</body>\n</html>\n");
    out
}

const SCRIPT: &str = r#"<script>
(function () {
  var audio = document.getElementById("dv-audio");
  var anims = function () { return document.getElementById("dv-stage").getAnimations({ subtree: true }); };
  var sync = function () {
    if (!audio) return;
    anims().forEach(function (a) { a.currentTime = audio.currentTime * 1000; });
  };
  document.getElementById("dv-play").addEventListener("click", function () {
    sync();
    anims().forEach(function (a) { a.play(); });
    if (audio) audio.play();
  });
  if (audio) {
    audio.addEventListener("pause", function () { anims().forEach(function (a) { a.pause(); }); sync(); });
    audio.addEventListener("seeked", sync);
  }
})();
</script>
"#;

fn sample_times(timeline: &Timeline, id: &str, duration: f64) -> Vec<f64> {
    let mut knots: Vec<f64> = timeline
        .keyframes(id)
        .iter()
        .map(|k| k.time.clamp(0.0, duration))
        .chain([0.0, duration])
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut times = Vec::new();
    for w in knots.windows(2) {
        for s in 0..SUBSTEPS {
            times.push(w[0] + (w[1] - w[0]) * s as f64 / SUBSTEPS as f64);
        }
    }
    times.push(duration);
    times
}

fn declarations(timeline: &Timeline, id: &str, used: &BTreeSet<Property>, t: f64) -> String {
    let v = |p| timeline.value_at(id, p, t);
    let opacity = if timeline.visible_at(id, t) {
        v(Property::Opacity)
    } else {
        0.0
    };
    let mut d = format!("opacity: {};", fmt_num(opacity));
    let transformed = [
        Property::Scale,
        Property::ScaleY,
        Property::TranslateX,
        Property::TranslateY,
    ]
    .iter()
    .any(|p| used.contains(p));
    if transformed {
        let s = v(Property::Scale);
        let _ = write!(
            d,
            " transform: translate({}px, {}px) scale({}, {});",
            fmt_num(v(Property::TranslateX)),
            fmt_num(v(Property::TranslateY)),
            fmt_num(s),
            fmt_num(s * v(Property::ScaleY))
        );
    }
    if used.contains(&Property::ClipFraction) {
        let hidden = (1.0 - v(Property::ClipFraction).clamp(0.0, 1.0)) * 100.0;
        let _ = write!(d, " clip-path: inset(0 {}% 0 0);", fmt_num(hidden));
    } else if used.contains(&Property::WheelFraction) {
        let _ = write!(d, " clip-path: {};", wedge(v(Property::WheelFraction)));
    }
    d
}

/// Polygon covering the sweep `fraction` of a full turn, clockwise from 12
/// o'clock, around the element's centre.
fn wedge(fraction: f64) -> String {
    let f = fraction.clamp(0.0, 1.0);
    let mut pts = vec!["50% 50%".to_string()];
    for i in 0..=16 {
        let a = std::f64::consts::TAU * f * i as f64 / 16.0;
        // radius large enough to cover the corners of the box
        let x = 50.0 + 75.0 * a.sin();
        let y = 50.0 - 75.0 * a.cos();
        pts.push(format!("{}% {}%", fmt_num(x), fmt_num(y)));
    }
    format!("polygon({})", pts.join(", "))
}

fn fmt_num(x: f64) -> String {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn fmt_pct(p: f64) -> String {
    format!("{}%", fmt_num(p.clamp(0.0, 100.0)))
}

fn css_string(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
