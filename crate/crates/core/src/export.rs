//! JSON and Graphviz renderings.

use std::fmt::Write;

use serde_json::{json, Map, Value};

use crate::flatten::FlatGraph;
use crate::model::{is_identifier, ComponentBody, Edge, EnvKind, EnvNode, SystemSpec};
use crate::sdl::printer::quantity;

/// JSON document mirroring the system tuple: `components`, `network`,
/// `interface`, `boundary`, `knowledge`, `history_policy`, plus `level` and
/// the system `id`. Subsystems nest under `components[].body.subsystem`.
///
/// Objects use sorted keys, so rendering is stable.
pub fn export_json(spec: &SystemSpec) -> Value {
    let components: Vec<Value> = spec
        .components
        .iter()
        .map(|c| {
            let body = match &c.body {
                ComponentBody::Atomic(role) => json!({
                    "atomic": { "role": role.kind.as_str(), "tier": role.tier }
                }),
                ComponentBody::Subsystem(sub) => json!({ "subsystem": export_json(sub) }),
            };
            json!({
                "type_id": c.type_id,
                "multiplicity": c.multiplicity,
                "variations": c.variations.iter()
                    .map(|v| json!({ "label": v.label, "count": v.count }))
                    .collect::<Vec<_>>(),
                "body": body,
            })
        })
        .collect();
    let edges = |list: &[Edge]| -> Vec<Value> {
        list.iter()
            .map(|e| json!({ "id": e.id, "tail": e.tail.to_string(), "head": e.head.to_string() }))
            .collect()
    };
    let env: Vec<Value> = spec.interface.env_nodes.iter().map(env_json).collect();
    let knowledge: Vec<Value> = spec
        .knowledge
        .iter()
        .map(|(id, k)| {
            json!({
                "edge": id,
                "capacity": k.capacity,
                "substance": k.substance,
                "strength": k.strength,
                "rule": "throughput",
            })
        })
        .collect();
    let b = &spec.boundary;
    json!({
        "id": spec.id,
        "level": spec.level,
        "components": components,
        "network": { "edges": edges(&spec.network.edges) },
        "interface": { "env_nodes": env, "edges": edges(&spec.interface.edges) },
        "boundary": {
            "allowed_substances": b.allowed_substances,
            "conserved_substances": b.conserved_substances,
            "frozen_component_types": b.frozen_component_types,
            "permitted_env_ids": b.permitted_env_ids,
        },
        "knowledge": knowledge,
        "history_policy": spec.history_policy.as_str(),
    })
}

fn env_json(n: &EnvNode) -> Value {
    let mut m = Map::new();
    m.insert("id".into(), json!(n.id));
    match &n.kind {
        EnvKind::Source { rate, substance } => {
            m.insert("kind".into(), json!("source"));
            m.insert("rate".into(), json!(rate));
            m.insert("substance".into(), json!(substance));
        }
        EnvKind::Sink { scope } => {
            m.insert("kind".into(), json!("sink"));
            m.insert("scope".into(), json!(scope.as_str()));
        }
        EnvKind::OtherEntity => {
            m.insert("kind".into(), json!("other"));
        }
    }
    Value::Object(m)
}

pub fn export_json_string(spec: &SystemSpec) -> String {
    let mut s = serde_json::to_string_pretty(&export_json(spec)).expect("json value serializes");
    s.push('\n');
    s
}

fn dot_id(s: &str) -> String {
    if is_identifier(s) {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

fn dot_str(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph of a flat graph. Sources are houses, sinks inverted
/// houses; zero-capacity edges are dashed.
pub fn export_dot(flat: &FlatGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", dot_id(&flat.name));
    for n in &flat.env_nodes {
        let shape = match n.kind {
            EnvKind::Source { .. } => "house",
            EnvKind::Sink { .. } => "invhouse",
            EnvKind::OtherEntity => "ellipse",
        };
        let _ = writeln!(
            out,
            "  \"{}\" [shape={shape}, label=\"{}\"];",
            dot_str(&n.id),
            dot_str(&n.id)
        );
    }
    for n in &flat.nodes {
        let tier = n.role.tier.map_or_else(|| "-".to_string(), |t| t.to_string());
        let _ = writeln!(
            out,
            "  \"{}\" [shape=box, label=\"{}\\n{}:{tier}\"];",
            dot_str(&n.id),
            dot_str(&n.id),
            n.role.kind
        );
    }
    for e in &flat.edges {
        let k = &e.knowledge;
        let style = if k.capacity == 0.0 { ", style=dashed" } else { "" };
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{} cap={}\"{style}];",
            dot_str(&e.tail),
            dot_str(&e.head),
            dot_str(&k.substance),
            quantity(k.capacity)
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flatten::flatten;
    use crate::model::HistoryPolicy;

    #[test]
    fn empty_system_skeleton() {
        let v = export_json(&SystemSpec::new("demo"));
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in [
            "components",
            "network",
            "interface",
            "boundary",
            "knowledge",
            "history_policy",
            "level",
        ] {
            assert!(keys.contains(&k), "{k}");
        }
        assert_eq!(v["level"], 0);
        assert_eq!(v["history_policy"], "record");
    }

    #[test]
    fn demo_knowledge_entries() {
        let v = export_json(&fixtures::demo_chain());
        let k = v["knowledge"].as_array().unwrap();
        assert_eq!(k.len(), 3);
        for entry in k {
            assert!(entry["capacity"].is_number());
            assert_eq!(entry["substance"], "grain");
            assert_eq!(entry["strength"], 1.0);
        }
    }

    #[test]
    fn null_history_rendered() {
        let mut s = fixtures::demo_chain();
        s.history_policy = HistoryPolicy::Null;
        assert_eq!(export_json(&s)["history_policy"], "null");
    }

    #[test]
    fn json_is_stable() {
        let s = fixtures::three_level();
        assert_eq!(export_json_string(&s), export_json_string(&s.clone()));
    }

    #[test]
    fn empty_dot() {
        assert_eq!(export_dot(&FlatGraph::empty("demo")), "digraph demo {\n}\n");
    }

    #[test]
    fn demo_dot_statements() {
        let dot = export_dot(&flatten(&fixtures::demo_chain()).unwrap());
        let nodes = dot.lines().filter(|l| l.contains("[shape=")).count();
        let edges = dot.lines().filter(|l| l.contains(" -> ")).count();
        assert_eq!((nodes, edges), (4, 3));
        assert!(dot.contains("\"S\" [shape=house"));
        assert!(dot.contains("\"M\" [shape=invhouse"));
        assert!(dot.contains("label=\"P#1\\nproducer:0\""));
        assert!(dot.contains("\"P#1\" -> \"T#1\" [label=\"grain cap=3\"];"));
    }

    #[test]
    fn zero_capacity_is_dashed() {
        let mut f = flatten(&fixtures::demo_chain()).unwrap();
        f.edges[0].knowledge.capacity = 0.0;
        let dot = export_dot(&f);
        assert!(dot.contains("cap=0\", style=dashed]"));
        assert_eq!(dot.matches("dashed").count(), 1);
    }
}
