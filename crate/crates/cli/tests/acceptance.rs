//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{FlatParams, SpecParams};
use rand::Rng;
use vcsys::analysis::governance_centrality;
use vcsys::sim::{conservation_check, replay, run};
use vcsys::{fixtures, flatten, parse, print, FlatGraph, HistoryPolicy};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture_flats() -> Vec<(&'static str, FlatGraph)> {
    fixtures::all()
        .into_iter()
        .map(|(name, spec)| (name, flatten(&spec).expect("fixture flattens")))
        .collect()
}

/// Random models for the simulator criteria: half integer, half real.
fn sim_cases(count: u64) -> Vec<(FlatGraph, u64, bool)> {
    (0..count)
        .map(|seed| {
            let integer = seed % 2 == 0;
            let mut f = common::random_flat(seed, FlatParams { max_nodes: 12, integer });
            f.history_policy = HistoryPolicy::Record;
            let steps = common::rng(seed ^ 0x5eed).random_range(0..=50);
            (f, steps, integer)
        })
        .collect()
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut total = 0;
    for seed in 0..200 {
        let spec = common::random_spec(seed, SpecParams::default());
        total += 1;
        if parse(&print(&spec)).root.as_ref() != Some(&spec) {
            failures.push(format!("seed {seed}"));
        }
    }
    for (name, spec) in fixtures::all() {
        total += 1;
        let canonical = spec.canonical();
        if parse(&print(&spec)).root.as_ref() != Some(&canonical) {
            failures.push(name.to_string());
        }
    }
    let elapsed = start.elapsed();
    let fast = elapsed < Duration::from_secs(10);
    outcome(
        failures.is_empty() && fast,
        format!("{total} specs, {} failures {:?}, {:.2?}", failures.len(), failures, elapsed),
    )
}

fn flatten_oracle() -> Outcome {
    let mut mismatches = Vec::new();
    for seed in 0..150 {
        let spec = common::random_spec(seed, SpecParams::default());
        let flat = match flatten(&spec) {
            Ok(f) => f,
            Err(e) => {
                mismatches.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let want = common::count_oracle(&spec);
        if (flat.nodes.len() as u64, flat.edges.len() as u64) != want {
            mismatches.push(format!("seed {seed}"));
        }
    }
    outcome(mismatches.is_empty(), format!("150 specs, {} mismatches {:?}", mismatches.len(), mismatches))
}

fn conservation() -> Outcome {
    let mut bad = Vec::new();
    let mut worst_real: f64 = 0.0;
    let cases = sim_cases(200);
    for (i, (f, steps, integer)) in cases.iter().enumerate() {
        let (state, log) = run(f, *steps).expect("run");
        let report = conservation_check(f, &state, &log);
        for b in &report.balances {
            let ok = if *integer {
                b.exact && b.error == 0.0
            } else {
                worst_real = worst_real.max(b.error.abs());
                b.error.abs() <= 1e-9
            };
            if !ok || !report.checked {
                bad.push(format!("case {i} {}: error {}", b.substance, b.error));
            }
        }
    }
    for (name, mut f) in fixture_flats() {
        f.history_policy = HistoryPolicy::Record;
        let (state, log) = run(&f, 50).expect("run");
        if !conservation_check(&f, &state, &log).passed() {
            bad.push(name.to_string());
        }
    }
    outcome(
        bad.is_empty(),
        format!("100 integer + 100 real models and fixtures, {} violations, worst real error {worst_real:e}", bad.len()),
    )
}

fn replay_fidelity() -> Outcome {
    let mut bad = Vec::new();
    let mut total = 0;
    let fixtures = fixture_flats().into_iter().map(|(name, mut f)| {
        f.history_policy = HistoryPolicy::Record;
        (name.to_string(), f, 50)
    });
    let random = sim_cases(120)
        .into_iter()
        .enumerate()
        .map(|(i, (f, n, _))| (format!("case {i}"), f, n));
    for (label, f, steps) in fixtures.chain(random) {
        total += 1;
        let (state, log) = run(&f, steps).expect("run");
        let text = log.to_jsonl();
        let parsed = vcsys::sim::HistoryLog::read_jsonl(text.as_bytes()).expect("log reads back");
        match replay(&f, &parsed) {
            Ok(again) if again.bit_eq(&state) => {}
            _ => bad.push(label),
        }
    }
    outcome(bad.is_empty(), format!("{total} runs, {} mismatches {:?}", bad.len(), bad))
}

fn null_history() -> Outcome {
    let mut bad = Vec::new();
    for (name, f) in fixture_flats() {
        let mut rec = f.clone();
        rec.history_policy = HistoryPolicy::Record;
        let mut null = f;
        null.history_policy = HistoryPolicy::Null;
        let (a, _) = run(&rec, 50).expect("run");
        let (b, log) = run(&null, 50).expect("run");
        if !a.bit_eq(&b) || !log.records().is_empty() {
            bad.push(name);
        }
    }
    outcome(bad.is_empty(), format!("{} fixtures, {} differ {:?}", fixtures::ALL_SOURCES.len(), bad.len(), bad))
}

fn governance() -> Outcome {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0..80 {
        let f = common::random_flat(seed, FlatParams { max_nodes: 8, integer: true });
        let report = governance_centrality(&f);
        let oracle = common::governance_oracle(&f);
        for s in &report.scores {
            let d = (s.score - oracle[&s.node]).abs();
            worst = worst.max(d);
            if d > 1e-9 {
                bad.push(format!("seed {seed} {}", s.node));
            }
        }
    }
    let demo = governance_centrality(&flatten(&fixtures::demo_chain()).expect("demo flattens"));
    let demo_ok = demo.score("P#1") == Some(1.0) && demo.score("T#1") == Some(1.0);
    outcome(
        bad.is_empty() && demo_ok,
        format!(
            "80 graphs, {} mismatches, worst {worst:e}; demo P={:?} T={:?}",
            bad.len(),
            demo.score("P#1"),
            demo.score("T#1")
        ),
    )
}

fn demo_trajectory() -> Outcome {
    let f = flatten(&fixtures::demo_chain()).expect("demo flattens");
    let caps: Vec<f64> = ["S->P", "P->T", "T->M"]
        .iter()
        .map(|id| f.edge(id).map_or(f64::NAN, |e| e.knowledge.capacity))
        .collect();
    let simulated: Vec<f64> = (1..=3)
        .map(|n| run(&f, n).expect("run").0.received("M", "grain"))
        .collect();
    let reference: Vec<f64> = common::reference_sink_trajectory(&f, 3)
        .iter()
        .map(|m| m.get("M").copied().unwrap_or(0.0))
        .collect();
    outcome(
        caps == [4.0, 3.0, 5.0] && simulated == [0.0, 0.0, 3.0] && reference == simulated,
        format!("simulator {simulated:?}, reference {reference:?}"),
    )
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("vcsys-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let fixture_dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures"));
    let mut bad = Vec::new();
    for (name, _) in fixtures::ALL_SOURCES {
        let input = fixture_dir.join(format!("{name}.vcs"));
        let mut runs = Vec::new();
        for k in 0..2 {
            let log = dir.join(format!("{name}-{k}.jsonl"));
            let out = Command::new(env!("CARGO_BIN_EXE_vcsys"))
                .arg("simulate")
                .arg(&input)
                .args(["--steps", "50", "--log"])
                .arg(&log)
                .output()
                .expect("binary runs");
            let bytes = std::fs::read(&log).unwrap_or_default();
            runs.push((out.status.success(), out.stdout, bytes));
        }
        if !runs[0].0 || runs[0] != runs[1] || runs[0].2.is_empty() {
            bad.push(name);
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(bad.is_empty(), format!("{} fixtures x 2 runs, {} differ {:?}", fixtures::ALL_SOURCES.len(), bad.len(), bad))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("round-trip", round_trip),
        ("flatten-oracle", flatten_oracle),
        ("conservation", conservation),
        ("replay-fidelity", replay_fidelity),
        ("null-history-equivalence", null_history),
        ("governance-oracle", governance),
        ("demo-trajectory", demo_trajectory),
        ("cli-determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name:<26} {} ({:.2?})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
