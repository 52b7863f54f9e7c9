//! Acceptance harness: one PASS/FAIL line per criterion, each with its
//! pinned tolerance and time budget. Exits non-zero when any criterion fails.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use datavideo_core::agent::extract_json;
use datavideo_core::analyst::build_analyst_prompt;
use datavideo_core::designer::{build_designer_prompt, validate_animation_sequence};
use datavideo_core::ingest::{build_description_prompt, parse_csv};
use datavideo_core::model::{DataDescription, VisualizationSpec, VisualizationType};
use datavideo_core::pipeline::{run_pipeline, sha256_hex, validate_project, FailureClass, ProjectConfig};
use datavideo_core::prompt::TemplateId;
use datavideo_core::svg::{diff_annotations, parse_svg};
use datavideo_core::timeline::locate_span;

use support::RuleClass;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

/// Golden SHA-256 of each stored template, placeholders blank.
const GOLDEN: [(TemplateId, &str); 3] = [
    (
        TemplateId::Description,
        "eef957638e17cbbe857837ea8a852ed4e86acb5e0d3d809febbeca9927cf6274",
    ),
    (
        TemplateId::Analyst,
        "c71a022760c808a6dc36805d67fa1629c711359fdf962cb09b97fd28a25b065b",
    ),
    (
        TemplateId::Designer,
        "16a65c0da2551b2409c143b1a87478dbe336570188c8b1fd328fed6a09e34085",
    ),
];

fn prompt_fidelity() -> Outcome {
    let csv = std::fs::read_to_string(support::fixtures().join("stock/stock_prices.csv")).unwrap();
    let table = parse_csv(&csv, "Big Tech Stock Prices in 2023").unwrap();
    let description = DataDescription::new("Month-end prices of four stocks.").unwrap();
    let vis = VisualizationSpec {
        spec: serde_json::json!({"mark": "line"}),
        vis_type: VisualizationType::Line,
    };
    let prompts = [
        (
            build_description_prompt(&table),
            "Give a short and consistent description",
        ),
        (build_analyst_prompt(&description, &table), "You are a data analyst."),
        (
            build_designer_prompt(&vis, "Apple rose.", &table),
            "You are a data video designer.",
        ),
    ];
    let mut bad = Vec::new();
    for ((prompt, anchor), (id, sha)) in prompts.iter().zip(GOLDEN) {
        if sha256_hex(prompt.reblank().as_bytes()) != sha || prompt.reblank() != id.source() {
            bad.push(format!("{} reblank differs", id.name()));
        }
        if !prompt.text().contains(anchor) {
            bad.push(format!("{} lacks anchor", id.name()));
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            "3/3 templates byte-identical, anchors present".into()
        } else {
            bad.join("; ")
        },
    )
}

fn contract_parsing() -> Outcome {
    let outcomes = support::run_contract_cases();
    let wrong: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.ok())
        .map(|o| format!("{}: expected {}, got {}", o.name, o.expected, o.got))
        .collect();
    let corpus = support::extract_fuzz_corpus(7);
    let disagreements = corpus
        .iter()
        .filter(|c| {
            let got = extract_json(&c.reply).ok();
            match &c.reference {
                Some(v) => got.as_ref() != Some(v),
                None => got.is_some(),
            }
        })
        .count();
    verdict(
        outcomes.len() >= 30 && wrong.is_empty() && corpus.len() == 50 && disagreements == 0,
        format!(
            "{}/{} fixture replies as labelled, {}/{} fuzz cases agree with serde_json{}",
            outcomes.len() - wrong.len(),
            outcomes.len(),
            corpus.len() - disagreements,
            corpus.len(),
            if wrong.is_empty() {
                String::new()
            } else {
                format!(" [{}]", wrong.join("; "))
            }
        ),
    )
}

const CASES_PER_CLASS: usize = 25;

fn animation_legality() -> Outcome {
    let narration = support::legality_narration();
    let mut false_positives = 0;
    let mut false_negatives = Vec::new();
    let mut clean_count = 0;
    for (c, class) in RuleClass::ALL.into_iter().enumerate() {
        for i in 0..CASES_PER_CLASS {
            let mut rng = ChaCha8Rng::seed_from_u64((c * 1000 + i) as u64);
            let clean = support::clean_directives(&mut rng);
            clean_count += 1;
            if !validate_animation_sequence(&clean, &narration).is_passing() {
                false_positives += 1;
            }
            let broken = support::inject(&mut rng, &clean, class);
            if !validate_animation_sequence(&broken, &narration).has_code(class.code()) {
                false_negatives.push(format!("{}#{i}", class.code()));
            }
        }
    }
    verdict(
        false_positives == 0 && false_negatives.is_empty(),
        format!(
            "{} injected per class x 4 classes: {} missed; {clean_count} clean lists: {false_positives} flagged",
            CASES_PER_CLASS,
            false_negatives.len()
        ),
    )
}

fn segments_and_alignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    let mut found = 0;
    for _ in 0..1000 {
        let (narration, segment, cursor) = support::random_locate_triple(&mut rng);
        let expected = support::brute_force_locate(&narration, &segment, cursor);
        found += expected.is_some() as usize;
        if locate_span(&narration, &segment, cursor).ok() != expected {
            mismatches += 1;
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let align = support::align_mismatches(dir.path());
    verdict(
        mismatches == 0 && align.is_empty(),
        format!(
            "1000 triples ({found} located): {mismatches} differ from oracle; {}/10 alignments exact{}",
            10 - align.len(),
            if align.is_empty() {
                String::new()
            } else {
                format!(" [{}]", align.join("; "))
            }
        ),
    )
}

fn annotation_diff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut identity, mut permuted, mut injected) = (0, 0, 0);
    for _ in 0..100 {
        let parts = support::random_svg_parts(&mut rng);
        let base = parse_svg(&support::assemble_svg(&parts)).unwrap();
        identity += diff_annotations(&base, &base).is_empty() as usize;
        let p = parse_svg(&support::assemble_svg(&support::permute_svg(&mut rng, &parts))).unwrap();
        permuted += diff_annotations(&base, &p).is_empty() as usize;
        let k = rng.gen_range(1..=10);
        let (with_notes, mut ids) = support::inject_svg(&mut rng, &parts, k);
        let annotated = parse_svg(&support::assemble_svg(&with_notes)).unwrap();
        let mut got = diff_annotations(&base, &annotated);
        got.sort();
        ids.sort();
        injected += (got == ids) as usize;
    }
    verdict(
        identity == 100 && permuted == 100 && injected == 100,
        format!("identity {identity}/100 empty, permutation {permuted}/100 empty, injection {injected}/100 exact"),
    )
}

fn timeline_invariants() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failing = Vec::new();
    let mut keyframes = 0;
    for i in 0..200 {
        let g = support::random_timeline(&mut rng, dir.path());
        keyframes += g.timeline.keyframe_count();
        let f = support::timeline_invariant_failures(&g);
        if !f.is_empty() {
            failing.push(format!("#{i}: {}", f[0]));
        }
    }
    verdict(
        failing.is_empty(),
        format!(
            "200 timelines ({keyframes} keyframes): {} violate an invariant{}",
            failing.len(),
            failing.first().map(|f| format!(" [{f}]")).unwrap_or_default()
        ),
    )
}

fn stock_reproduction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    if let Err(e) = run_pipeline(&support::stock_config(&a)) {
        return Outcome::Fail(format!("run failed: {e}"));
    }
    if let Err(e) = run_pipeline(&support::stock_config(&b)) {
        return Outcome::Fail(format!("second run failed: {e}"));
    }
    let mut checks = support::stock_project_checks(&a);
    let same_manifest = support::manifest_without_times(&a) == support::manifest_without_times(&b);
    let (ta, tb) = (support::tree_bytes(&a), support::tree_bytes(&b));
    checks.push((
        "byte-identical re-run",
        same_manifest && ta == tb,
        format!("{} files compared", ta.len()),
    ));
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.1)
        .map(|c| format!("{} ({})", c.0, c.2))
        .collect();
    let summary: Vec<String> = checks.iter().map(|c| c.2.clone()).collect();
    verdict(
        failed.is_empty(),
        if failed.is_empty() {
            summary.join("; ")
        } else {
            failed.join("; ")
        },
    )
}

/// Set to a project config that points at a live chat endpoint.
const LIVE_CONFIG_VAR: &str = "DATAVIDEO_LIVE_CONFIG";

fn live_smoke() -> Outcome {
    let Some(path) = std::env::var_os(LIVE_CONFIG_VAR).map(PathBuf::from) else {
        return Outcome::Skip(format!("{LIVE_CONFIG_VAR} not set"));
    };
    let mut config = match ProjectConfig::load(&path) {
        Ok(c) => c,
        Err(e) => return Outcome::Fail(format!("config: {e}")),
    };
    let dir = tempfile::tempdir().unwrap();
    config.output_dir = dir.path().join("project");
    let run = catch_unwind(AssertUnwindSafe(|| run_pipeline(&config)));
    let classified = match &run {
        Err(_) => return Outcome::Fail("pipeline panicked".into()),
        Ok(Ok(_)) => "completed".to_string(),
        Ok(Err(e)) if e.class == FailureClass::Contract => format!("contract failure: {e}"),
        Ok(Err(e)) => return Outcome::Fail(format!("unclassified failure: {e}")),
    };
    match validate_project(&config.output_dir) {
        Ok(results) => {
            let bad: Vec<_> = results
                .iter()
                .filter(|r| !r.report.is_passing())
                .map(|r| r.stage.as_str())
                .collect();
            verdict(bad.is_empty(), format!("{classified}; invalid stages: {bad:?}"))
        }
        Err(e) => Outcome::Fail(format!("{classified}; validate: {e}")),
    }
}

fn main() {
    type Criterion = (&'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("prompt fidelity (exact bytes)", 1, prompt_fidelity),
        ("contract parsing (exact outcome per reply)", 5, contract_parsing),
        ("animation legality (0 FN, 0 FP)", 5, animation_legality),
        ("segment location and alignment (exact)", 5, segments_and_alignment),
        ("annotation diff (exact id sets)", 5, annotation_diff),
        (
            "timeline invariants (restoration 1e-9, duration exact)",
            10,
            timeline_invariants,
        ),
        (
            "stock example end to end (offline, byte-identical)",
            10,
            stock_reproduction,
        ),
        ("live backend smoke", 600, live_smoke),
    ];
    let mut failures = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(run).unwrap_or_else(|_| Outcome::Fail("panicked".into()));
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (status, detail) = match outcome {
            Outcome::Pass(d) if over => ("FAIL", format!("{d}; over the {budget} s budget")),
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skip(d) => ("SKIP", d),
        };
        failures += (status == "FAIL") as usize;
        println!(
            "{status} {name}: {detail} [{:.2} s / {budget} s]",
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
