//! Expansion of a [`SystemSpec`] tree into a single atomic-level graph.
//!
//! Every component is materialized `multiplicity` times, named `type_id#k`
//! with `k` counting from 1, depth-first in declaration order. Nested
//! instances are addressed by their path, e.g. `farm#2/plot#1`.
//!
//! Subsystems connect to their parent through ports: the environment nodes
//! declared inside a subsystem. A parent edge that ends at `farm.inp` is
//! spliced onto every internal node the subsystem's interface edges feed from
//! `inp`; a parent edge leaving `farm.out` starts at every internal node that
//! feeds `out`. The spliced edge carries the parent edge's knowledge with
//! capacity and strength capped by the interface edges it passes through.
//! Only the root system's environment nodes survive in the flat graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ModelError;
use crate::model::{
    BoundarySpec, ComponentBody, Edge, EdgeKnowledge, Endpoint, EnvKind, EnvNode, HistoryPolicy,
    NodeRole, SystemSpec, DEFAULT_MAX_DEPTH,
};
use crate::tree::depth_with;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatNode {
    pub id: String,
    pub role: NodeRole,
    /// Instance names from the root down to this node.
    pub origin: Vec<String>,
    pub variation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatEdge {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub knowledge: EdgeKnowledge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatGraph {
    pub name: String,
    pub nodes: Vec<FlatNode>,
    pub edges: Vec<FlatEdge>,
    pub env_nodes: Vec<EnvNode>,
    pub boundary: BoundarySpec,
    pub history_policy: HistoryPolicy,
}

impl FlatGraph {
    pub fn empty(name: impl Into<String>) -> Self {
        FlatGraph {
            name: name.into(),
            nodes: Vec::new(),
            edges: Vec::new(),
            env_nodes: Vec::new(),
            boundary: BoundarySpec::default(),
            history_policy: HistoryPolicy::Record,
        }
    }

    pub fn node(&self, id: &str) -> Option<&FlatNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn env_node(&self, id: &str) -> Option<&EnvNode> {
        self.env_nodes.iter().find(|n| n.id == id)
    }

    pub fn edge(&self, id: &str) -> Option<&FlatEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn sources(&self) -> impl Iterator<Item = &EnvNode> {
        self.env_nodes.iter().filter(|n| n.is_source())
    }

    pub fn sinks(&self) -> impl Iterator<Item = &EnvNode> {
        self.env_nodes.iter().filter(|n| n.is_sink())
    }

    pub fn substances(&self) -> BTreeSet<&str> {
        self.edges
            .iter()
            .map(|e| e.knowledge.substance.as_str())
            .collect()
    }

    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn model_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("flat graph serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn flatten(spec: &SystemSpec) -> Result<FlatGraph, ModelError> {
    flatten_with(spec, DEFAULT_MAX_DEPTH)
}

pub fn flatten_with(spec: &SystemSpec, max_depth: u32) -> Result<FlatGraph, ModelError> {
    depth_with(spec, max_depth)?;
    let mut out = FlatGraph {
        name: spec.id.clone(),
        nodes: Vec::new(),
        edges: Vec::new(),
        env_nodes: spec.interface.env_nodes.clone(),
        boundary: spec.boundary.clone(),
        history_policy: spec.history_policy,
    };
    expand(spec, &[], true, &mut out)?;
    Ok(out)
}

/// A flat node reached through zero or more interface edges, with the
/// tightest capacity and strength seen on the way.
#[derive(Clone, Debug)]
struct Terminal {
    node: String,
    capacity: f64,
    strength: f64,
    substance: Option<String>,
}

impl Terminal {
    fn plain(node: String) -> Self {
        Terminal {
            node,
            capacity: f64::INFINITY,
            strength: f64::INFINITY,
            substance: None,
        }
    }

    fn through(&self, k: &EdgeKnowledge) -> Result<Terminal, ModelError> {
        check_substance(&self.substance, &k.substance, &self.node)?;
        Ok(Terminal {
            node: self.node.clone(),
            capacity: self.capacity.min(k.capacity),
            strength: self.strength.min(k.strength),
            substance: Some(k.substance.clone()),
        })
    }
}

fn check_substance(seen: &Option<String>, want: &str, at: &str) -> Result<(), ModelError> {
    match seen {
        Some(s) if s != want => Err(ModelError::SpliceError(format!(
            "substance {want} spliced onto {s} at {at}"
        ))),
        _ => Ok(()),
    }
}

/// Ports exported by one subsystem instance, keyed by port name.
#[derive(Default)]
struct Ports {
    /// Terminals a parent edge ending at the port is spliced onto.
    inbound: BTreeMap<String, Vec<Terminal>>,
    /// Terminals a parent edge leaving the port starts from.
    outbound: BTreeMap<String, Vec<Terminal>>,
}

enum Instance {
    Atomic(String),
    Subsystem(Ports),
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Tail,
    Head,
}

fn expand(
    spec: &SystemSpec,
    prefix: &[String],
    is_root: bool,
    out: &mut FlatGraph,
) -> Result<Ports, ModelError> {
    let mut instances: BTreeMap<&str, Vec<Instance>> = BTreeMap::new();
    for c in &spec.components {
        let list = instances.entry(c.type_id.as_str()).or_default();
        for k in 1..=c.multiplicity {
            let mut path = prefix.to_vec();
            path.push(format!("{}#{k}", c.type_id));
            match &c.body {
                ComponentBody::Atomic(role) => {
                    let id = path.join("/");
                    out.nodes.push(FlatNode {
                        id: id.clone(),
                        role: *role,
                        origin: path,
                        variation: c.variation_of(k).map(str::to_string),
                    });
                    list.push(Instance::Atomic(id));
                }
                ComponentBody::Subsystem(sub) => {
                    list.push(Instance::Subsystem(expand(sub, &path, false, out)?));
                }
            }
        }
    }

    let scope = prefix.join("/");
    let resolve = |ep: &Endpoint, side: Side| -> Result<Vec<Terminal>, ModelError> {
        if ep.port.is_none() && spec.env_node(&ep.node).is_some() {
            return Ok(vec![Terminal::plain(ep.node.clone())]);
        }
        let list = instances.get(ep.node.as_str()).ok_or_else(|| {
            ModelError::SpliceError(format!("unresolved endpoint {ep} in {scope:?}"))
        })?;
        let mut terms = Vec::new();
        for inst in list {
            match (inst, &ep.port) {
                (Instance::Atomic(id), None) => terms.push(Terminal::plain(id.clone())),
                (Instance::Subsystem(ports), Some(p)) => {
                    let map = match side {
                        Side::Tail => &ports.outbound,
                        Side::Head => &ports.inbound,
                    };
                    match map.get(p) {
                        Some(t) => terms.extend(t.iter().cloned()),
                        None => {
                            return Err(ModelError::SpliceError(format!(
                                "no port {ep} facing this direction in {scope:?}"
                            )))
                        }
                    }
                }
                _ => {
                    return Err(ModelError::SpliceError(format!(
                        "endpoint {ep} does not match its component kind"
                    )))
                }
            }
        }
        Ok(terms)
    };
    let knowledge = |e: &Edge| {
        spec.knowledge.get(&e.id).ok_or_else(|| {
            ModelError::SpliceError(format!("edge {} has no knowledge entry", e.id))
        })
    };

    let mut emitted: Vec<&Edge> = spec.network.edges.iter().collect();
    if is_root {
        emitted.extend(spec.interface.edges.iter());
    }
    for e in emitted {
        let k = knowledge(e)?;
        let tails = resolve(&e.tail, Side::Tail)?;
        let heads = resolve(&e.head, Side::Head)?;
        let combos = tails.len() * heads.len();
        let base = if scope.is_empty() {
            e.id.clone()
        } else {
            format!("{scope}/{}", e.id)
        };
        let mut i = 0;
        for t in &tails {
            for h in &heads {
                i += 1;
                check_substance(&t.substance, &k.substance, &t.node)?;
                check_substance(&h.substance, &k.substance, &h.node)?;
                let mut kn = k.clone();
                kn.capacity = kn.capacity.min(t.capacity).min(h.capacity);
                kn.strength = kn.strength.min(t.strength).min(h.strength);
                out.edges.push(FlatEdge {
                    id: if combos > 1 {
                        format!("{base}[{i}]")
                    } else {
                        base.clone()
                    },
                    tail: t.node.clone(),
                    head: h.node.clone(),
                    knowledge: kn,
                });
            }
        }
    }

    // Wired ports of this scope's subsystems, by direction.
    let mut wired: BTreeSet<(&str, &str, bool)> = BTreeSet::new();
    for e in spec.edges() {
        if let Some(p) = &e.tail.port {
            wired.insert((e.tail.node.as_str(), p.as_str(), true));
        }
        if let Some(p) = &e.head.port {
            wired.insert((e.head.node.as_str(), p.as_str(), false));
        }
    }
    for c in &spec.components {
        if c.is_atomic() {
            continue;
        }
        for inst in &instances[c.type_id.as_str()] {
            let Instance::Subsystem(ports) = inst else { continue };
            for (map, outbound) in [(&ports.outbound, true), (&ports.inbound, false)] {
                for (p, terms) in map {
                    if !terms.is_empty() && !wired.contains(&(c.type_id.as_str(), p.as_str(), outbound)) {
                        return Err(ModelError::SpliceError(format!(
                            "port {}.{p} has no matching parent connection",
                            c.type_id
                        )));
                    }
                }
            }
        }
    }

    let mut ports = Ports::default();
    if !is_root {
        for n in &spec.interface.env_nodes {
            match n.kind {
                EnvKind::Source { .. } => {
                    ports.inbound.entry(n.id.clone()).or_default();
                }
                EnvKind::Sink { .. } => {
                    ports.outbound.entry(n.id.clone()).or_default();
                }
                EnvKind::OtherEntity => {
                    ports.inbound.entry(n.id.clone()).or_default();
                    ports.outbound.entry(n.id.clone()).or_default();
                }
            }
        }
        for e in &spec.interface.edges {
            let k = knowledge(e)?;
            let tail_env = e.tail.port.is_none() && spec.env_node(&e.tail.node).is_some();
            let (port, terms) = if tail_env {
                (&e.tail.node, resolve(&e.head, Side::Head)?)
            } else {
                (&e.head.node, resolve(&e.tail, Side::Tail)?)
            };
            let map = if tail_env {
                &mut ports.inbound
            } else {
                &mut ports.outbound
            };
            let slot = map.entry(port.clone()).or_default();
            for t in terms {
                slot.push(t.through(k)?);
            }
        }
    }
    Ok(ports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{ComponentDecl, RoleKind, Variation};

    #[test]
    fn multiplicity_three_no_edges() {
        let mut s = SystemSpec::new("m");
        s.components.push(
            ComponentDecl::atomic("P", NodeRole::new(RoleKind::Producer, 0)).with_multiplicity(3),
        );
        let f = flatten(&s).unwrap();
        let ids: Vec<_> = f.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["P#1", "P#2", "P#3"]);
        assert!(f.edges.is_empty());
    }

    #[test]
    fn demo_chain_counts() {
        let f = flatten(&fixtures::demo_chain()).unwrap();
        assert_eq!(f.nodes.len(), 2);
        assert_eq!(f.env_nodes.len(), 2);
        assert_eq!(f.edges.len(), 3);
        let e: Vec<_> = f
            .edges
            .iter()
            .map(|e| (e.id.as_str(), e.tail.as_str(), e.head.as_str(), e.knowledge.capacity))
            .collect();
        assert_eq!(
            e,
            [
                ("P->T", "P#1", "T#1", 3.0),
                ("S->P", "S", "P#1", 4.0),
                ("T->M", "T#1", "M", 5.0)
            ]
        );
    }

    #[test]
    fn nested_instances_and_splices() {
        let f = flatten(&fixtures::nested_two_level()).unwrap();
        let ids: Vec<_> = f.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(
            ids,
            ["T#1", "farm#1/plot#1", "farm#1/plot#2", "farm#2/plot#1", "farm#2/plot#2"]
        );
        // 4 plots fed by S, 4 plots feeding T, T to M.
        assert_eq!(f.edges.len(), 9);
        let into_plot = f.edges.iter().find(|e| e.head == "farm#2/plot#1").unwrap();
        assert_eq!(into_plot.tail, "S");
        // min(parent 8, interface 3)
        assert_eq!(into_plot.knowledge.capacity, 3.0);
        let n = f.node("farm#1/plot#2").unwrap();
        assert_eq!(n.origin, ["farm#1", "plot#2"]);
    }

    #[test]
    fn variation_labels_tag_instances() {
        let mut s = SystemSpec::new("v");
        let mut c =
            ComponentDecl::atomic("P", NodeRole::new(RoleKind::Producer, 0)).with_multiplicity(3);
        c.variations = vec![
            Variation { label: "big".into(), count: 2 },
            Variation { label: "small".into(), count: 1 },
        ];
        s.components.push(c);
        let f = flatten(&s).unwrap();
        let v: Vec<_> = f.nodes.iter().map(|n| n.variation.as_deref()).collect();
        assert_eq!(v, [Some("big"), Some("big"), Some("small")]);
    }

    #[test]
    fn unwired_port_is_splice_error() {
        let mut s = fixtures::nested_two_level();
        s.network.edges.retain(|e| e.tail.port.is_none());
        assert!(matches!(flatten(&s), Err(ModelError::SpliceError(_))));
    }

    #[test]
    fn flatten_is_deterministic() {
        for (_, s) in fixtures::all() {
            assert_eq!(flatten(&s).unwrap(), flatten(&s).unwrap());
        }
    }

    #[test]
    fn every_edge_has_one_knowledge() {
        let f = flatten(&fixtures::three_level()).unwrap();
        let ids: BTreeSet<_> = f.edges.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids.len(), f.edges.len());
    }

    #[test]
    fn model_hash_distinguishes_models() {
        let a = flatten(&fixtures::demo_chain()).unwrap();
        let mut b = a.clone();
        b.edges[0].knowledge.capacity = 7.0;
        assert_eq!(a.model_hash(), a.clone().model_hash());
        assert_ne!(a.model_hash(), b.model_hash());
        assert_eq!(a.model_hash().len(), 64);
    }
}
