use std::collections::BTreeSet;
use std::fmt::Write;

use crate::model::{ComponentBody, Edge, EnvKind, HistoryPolicy, SystemSpec};

/// Renders `spec` in canonical form: components, environment nodes and
/// edges sorted by id, two-space indentation, one declaration per line.
pub fn print(spec: &SystemSpec) -> String {
    let mut out = String::new();
    let _ = write!(out, "system {}", quote(&spec.id));
    if spec.level != 0 {
        let _ = write!(out, " level {}", spec.level);
    }
    out.push_str(" {\n");
    body(spec, 1, &mut out);
    out.push_str("}\n");
    out
}

/// Formats a quantity so that it parses back to the same value.
pub(crate) fn quantity(q: f64) -> String {
    // `{}` on f64 is the shortest round-tripping decimal and never uses an
    // exponent; -0 prints as 0.
    if q == 0.0 {
        "0".to_string()
    } else {
        format!("{q}")
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn list(set: &BTreeSet<String>) -> String {
    let items: Vec<&str> = set.iter().map(String::as_str).collect();
    format!("[{}]", items.join(", "))
}

fn body(spec: &SystemSpec, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);

    let mut comps: Vec<_> = spec.components.iter().collect();
    comps.sort_by(|a, b| a.type_id.cmp(&b.type_id));
    for c in comps {
        let _ = write!(out, "{pad}component {}", c.type_id);
        if c.multiplicity != 1 {
            let _ = write!(out, " * {}", c.multiplicity);
        }
        if !c.variations.is_empty() {
            let vs: Vec<String> = c
                .variations
                .iter()
                .map(|v| format!("{}={}", v.label, v.count))
                .collect();
            let _ = write!(out, " vary [{}]", vs.join(", "));
        }
        match &c.body {
            ComponentBody::Atomic(role) => {
                let _ = write!(out, " atomic role={}", role.kind);
                if let Some(t) = role.tier {
                    let _ = write!(out, " tier={t}");
                }
                out.push('\n');
            }
            ComponentBody::Subsystem(sub) => {
                out.push_str(" {\n");
                body(sub, depth + 1, out);
                let _ = writeln!(out, "{pad}}}");
            }
        }
    }

    let mut env: Vec<_> = spec.interface.env_nodes.iter().collect();
    env.sort_by(|a, b| a.id.cmp(&b.id));
    for n in env {
        let _ = match &n.kind {
            EnvKind::Source { rate, substance } => writeln!(
                out,
                "{pad}source {} rate={} substance={substance}",
                n.id,
                quantity(*rate)
            ),
            EnvKind::Sink { scope } => {
                writeln!(out, "{pad}sink {} scope={}", n.id, scope.as_str())
            }
            EnvKind::OtherEntity => writeln!(out, "{pad}entity {}", n.id),
        };
    }

    let mut edges: Vec<&Edge> = spec.edges().collect();
    edges.sort_by(|a, b| a.id.cmp(&b.id));
    for e in edges {
        let _ = write!(out, "{pad}edge ");
        if e.id != Edge::default_id(&e.tail, &e.head) {
            let _ = write!(out, "{}: ", e.id);
        }
        let _ = write!(out, "{} -> {}", e.tail, e.head);
        if let Some(k) = spec.knowledge.get(&e.id) {
            let _ = write!(
                out,
                " {{ substance={} capacity={} strength={} }}",
                k.substance,
                quantity(k.capacity),
                quantity(k.strength)
            );
        }
        out.push('\n');
    }

    let b = &spec.boundary;
    if !b.is_default() {
        let mut parts = Vec::new();
        if let Some(allow) = &b.allowed_substances {
            parts.push(format!("allow={}", list(allow)));
        }
        if !b.conserved_substances.is_empty() {
            parts.push(format!("conserve={}", list(&b.conserved_substances)));
        }
        if !b.frozen_component_types {
            parts.push("frozen=false".to_string());
        }
        if let Some(permit) = &b.permitted_env_ids {
            parts.push(format!("permit={}", list(permit)));
        }
        let _ = writeln!(out, "{pad}boundary {{ {} }}", parts.join(" "));
    }
    if spec.history_policy == HistoryPolicy::Null {
        let _ = writeln!(out, "{pad}history null");
    }
}
