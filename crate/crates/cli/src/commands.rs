use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use vcsys::analysis::{
    classify_linkages, end_market_reachability, governance_centrality, value_added_profile,
    weak_linkage_report, LinkageClass,
};
use vcsys::sim::{conservation_check, run, ConservationReport, SimulationState};
use vcsys::{
    depth_with, export_dot, export_json_string, flatten_with, parse_bytes, ComponentBody, EnvKind,
    FlatGraph, SystemSpec, DEFAULT_MAX_DEPTH,
};

use crate::{Command, Format, Metric};

pub const EXIT_FINDINGS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn findings(message: impl Into<String>) -> Self {
        Failure { code: EXIT_FINDINGS, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Failure { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }
}

type Result<T> = std::result::Result<T, Failure>;

pub struct Context {
    max_depth: u32,
}

impl Context {
    pub fn from_env() -> Result<Self> {
        let max_depth = match std::env::var("VCSYS_MAX_DEPTH") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("VCSYS_MAX_DEPTH must be a non-negative integer, got {v:?}")))?,
            Err(_) => DEFAULT_MAX_DEPTH,
        };
        Ok(Context { max_depth })
    }

    pub fn dispatch(&self, command: Command, output: Option<PathBuf>) -> Result<()> {
        let out = match command {
            Command::Validate { file } => {
                self.load(&file)?;
                eprintln!("OK");
                return Ok(());
            }
            Command::Inspect { file } => self.inspect(&file)?,
            Command::Flatten { file, json } => {
                let flat = self.load_flat(&file)?;
                if json {
                    to_json(&flat)
                } else {
                    flat_text(&flat)
                }
            }
            Command::Simulate { file, steps, log, strict, sweep } => {
                if sweep.is_some() && log.is_some() {
                    return Err(Failure::usage("--log cannot be combined with --sweep"));
                }
                let flat = self.load_flat(&file)?;
                let (out, ok) = match sweep {
                    Some(spec) => sweep_runs(&flat, steps, &spec)?,
                    None => simulate(&flat, steps, log.as_deref())?,
                };
                write_output(output.as_deref(), &out)?;
                return strict_result(strict, ok, "conservation check failed");
            }
            Command::Analyze { file, metric, threshold, strict } => {
                let flat = self.load_flat(&file)?;
                let (out, findings) = analyze(&flat, metric, threshold)?;
                write_output(output.as_deref(), &out)?;
                return strict_result(strict, findings.is_none(), findings.unwrap_or_default());
            }
            Command::Export { file, format } => match format {
                Format::Json => export_json_string(&self.load(&file)?),
                Format::Dot => export_dot(&self.load_flat(&file)?),
            },
        };
        write_output(output.as_deref(), &out)
    }

    /// Reads, parses and validates a model, reporting diagnostics on stderr.
    fn load(&self, path: &Path) -> Result<SystemSpec> {
        let (name, bytes) = read_input(path)?;
        let doc = parse_bytes(&name, &bytes, self.max_depth);
        if doc.diagnostics.is_empty() {
            if let Some(spec) = doc.root {
                return Ok(spec);
            }
        }
        for d in &doc.diagnostics {
            eprintln!("{name}:{d}");
        }
        Err(Failure::findings(format!(
            "{name}: {} problem(s) found",
            doc.diagnostics.len().max(1)
        )))
    }

    fn load_flat(&self, path: &Path) -> Result<FlatGraph> {
        let spec = self.load(path)?;
        flatten_with(&spec, self.max_depth).map_err(|e| Failure::findings(e.to_string()))
    }

    fn inspect(&self, path: &Path) -> Result<String> {
        let spec = self.load(path)?;
        let depth = depth_with(&spec, self.max_depth).map_err(|e| Failure::findings(e.to_string()))?;
        let components: Vec<Value> = spec
            .components
            .iter()
            .map(|c| {
                let kind = match &c.body {
                    ComponentBody::Atomic(_) => "atomic",
                    ComponentBody::Subsystem(_) => "subsystem",
                };
                json!({ "type_id": c.type_id, "multiplicity": c.multiplicity, "kind": kind })
            })
            .collect();
        let env = |pred: fn(&EnvKind) -> bool| {
            spec.interface.env_nodes.iter().filter(|n| pred(&n.kind)).count()
        };
        let summary = json!({
            "id": spec.id,
            "level": spec.level,
            "depth": depth,
            "component_types": spec.components.len(),
            "instances": spec.instance_count(),
            "components": components,
            "network_edges": spec.network.edges.len(),
            "interface_edges": spec.interface.edges.len(),
            "sources": env(|k| matches!(k, EnvKind::Source { .. })),
            "sinks": env(|k| matches!(k, EnvKind::Sink { .. })),
            "entities": env(|k| matches!(k, EnvKind::OtherEntity)),
            "conserved_substances": spec.boundary.conserved_substances,
            "history_policy": spec.history_policy.as_str(),
        });
        Ok(to_json(&summary))
    }
}

fn strict_result(strict: bool, ok: bool, message: impl Into<String>) -> Result<()> {
    if strict && !ok {
        Err(Failure::findings(message))
    } else {
        Ok(())
    }
}

fn read_input(path: &Path) -> Result<(String, Vec<u8>)> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::io(path, e))?;
        Ok(("<stdin>".to_string(), buf))
    } else {
        let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
        Ok((path.display().to_string(), bytes))
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|e| Failure::io(p, e)),
        _ => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn flat_text(flat: &FlatGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "flat {}: {} nodes, {} environment nodes, {} edges",
        flat.name,
        flat.nodes.len(),
        flat.env_nodes.len(),
        flat.edges.len()
    );
    for n in &flat.nodes {
        let tier = n.role.tier.map_or_else(|| "-".to_string(), |t| t.to_string());
        let _ = write!(out, "node {} {} tier={tier}", n.id, n.role.kind);
        if let Some(v) = &n.variation {
            let _ = write!(out, " variation={v}");
        }
        out.push('\n');
    }
    for n in &flat.env_nodes {
        let _ = match &n.kind {
            EnvKind::Source { rate, substance } => {
                writeln!(out, "source {} rate={rate} substance={substance}", n.id)
            }
            EnvKind::Sink { scope } => writeln!(out, "sink {} scope={}", n.id, scope.as_str()),
            EnvKind::OtherEntity => writeln!(out, "entity {}", n.id),
        };
    }
    for e in &flat.edges {
        let k = &e.knowledge;
        let _ = writeln!(
            out,
            "edge {}: {} -> {} substance={} capacity={} strength={}",
            e.id, e.tail, e.head, k.substance, k.capacity, k.strength
        );
    }
    out
}

fn state_json(state: &SimulationState, report: &ConservationReport) -> Value {
    json!({
        "tick": state.tick,
        "stocks": state.stocks,
        "sink_received": state.sink_received,
        "conservation": report,
    })
}

fn simulate(flat: &FlatGraph, steps: u64, log_path: Option<&Path>) -> Result<(String, bool)> {
    let (state, log) = run(flat, steps).map_err(|e| Failure::findings(e.to_string()))?;
    if let Some(p) = log_path {
        let file = fs::File::create(p).map_err(|e| Failure::io(p, e))?;
        let mut w = io::BufWriter::new(file);
        log.write_jsonl(&mut w)
            .and_then(|()| w.flush())
            .map_err(|e| Failure::io(p, e))?;
    }
    let report = conservation_check(flat, &state, &log);
    if !report.checked {
        eprintln!("conservation check skipped: history policy is null");
    }
    for b in report.violations() {
        eprintln!(
            "conservation violated for {}: emitted {} != stocked {} + delivered {}",
            b.substance, b.emitted, b.stocked, b.delivered
        );
    }
    Ok((to_json(&state_json(&state, &report)), report.passed()))
}

/// `SOURCE=R1,R2,...`: one independent run per rate, in parallel.
fn sweep_runs(flat: &FlatGraph, steps: u64, spec: &str) -> Result<(String, bool)> {
    let (source, rates) = spec
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("--sweep expects SOURCE=R1,R2,.. got {spec:?}")))?;
    let rates: Vec<f64> = rates
        .split(',')
        .map(|r| r.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::usage(format!("--sweep rates must be numbers: {rates:?}")))?;
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Failure::usage("--sweep rates must be non-negative"));
    }
    match flat.env_node(source).map(|n| &n.kind) {
        Some(EnvKind::Source { .. }) => {}
        _ => return Err(Failure::usage(format!("--sweep: {source} is not a source"))),
    }
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = rates
            .iter()
            .map(|&rate| {
                let mut variant = flat.clone();
                scope.spawn(move || {
                    for n in &mut variant.env_nodes {
                        if n.id == source {
                            if let EnvKind::Source { rate: r, .. } = &mut n.kind {
                                *r = rate;
                            }
                        }
                    }
                    run(&variant, steps).map(|(state, log)| {
                        let report = conservation_check(&variant, &state, &log);
                        (rate, state, report)
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut all_ok = true;
    let mut variants = Vec::new();
    for r in results {
        let (rate, state, report) = r.map_err(|e| Failure::findings(e.to_string()))?;
        all_ok &= report.passed();
        let mut v = state_json(&state, &report);
        v["source"] = json!(source);
        v["rate"] = json!(rate);
        variants.push(v);
    }
    Ok((to_json(&variants), all_ok))
}

/// Renders one analysis; the second value describes findings, if any.
fn analyze(flat: &FlatGraph, metric: Metric, threshold: Option<f64>) -> Result<(String, Option<String>)> {
    let failed = |e: vcsys::AnalysisError| Failure::findings(e.to_string());
    Ok(match metric {
        Metric::Linkages => {
            let classes = classify_linkages(flat).map_err(failed)?;
            let count = |c: LinkageClass| classes.values().filter(|&&x| x == c).count();
            let out = json!({
                "edges": classes,
                "counts": {
                    "vertical": count(LinkageClass::Vertical),
                    "horizontal": count(LinkageClass::Horizontal),
                    "interface": count(LinkageClass::Interface),
                },
            });
            (to_json(&out), None)
        }
        Metric::Governance => {
            let report = governance_centrality(flat);
            let findings = report
                .no_path
                .then(|| "no sink is reachable from any source".to_string());
            (to_json(&report), findings)
        }
        Metric::Reachability => {
            let reach = end_market_reachability(flat);
            let stranded: Vec<&str> = reach
                .iter()
                .filter(|(_, sinks)| sinks.is_empty())
                .map(|(n, _)| n.as_str())
                .collect();
            let findings = (!stranded.is_empty())
                .then(|| format!("no end market reachable from {}", stranded.join(", ")));
            (to_json(&reach), findings)
        }
        Metric::Weak => {
            let t = threshold.ok_or_else(|| Failure::usage("--metric weak requires --threshold"))?;
            let report = weak_linkage_report(flat, t).map_err(|e| Failure::usage(e.to_string()))?;
            let n = report.weak.len() + report.missing.len();
            let findings = (n > 0).then(|| format!("{n} weak or missing linkage(s)"));
            (to_json(&report), findings)
        }
        Metric::ValueAdded => (to_json(&value_added_profile(flat)), None),
    })
}
