//! Structural checks over a [`SystemSpec`] tree. Violations are collected as
//! data; nothing here fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::{
    is_identifier, ComponentBody, Edge, Endpoint, EnvKind, SystemSpec, DEFAULT_MAX_DEPTH,
};
use crate::tree::raw_depth;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Component type path from the root system to the offending scope.
    pub scope: Vec<String>,
    /// Element inside the scope, e.g. `edge P->T` or `component farm`.
    pub item: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.scope.join("/"), self.item, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(spec: &SystemSpec) -> ValidationReport {
    validate_with(spec, DEFAULT_MAX_DEPTH)
}

pub fn validate_with(spec: &SystemSpec, max_depth: u32) -> ValidationReport {
    let mut v = Validator {
        out: Vec::new(),
        scope: vec![spec.id.clone()],
    };
    let depth = raw_depth(spec);
    if depth > max_depth {
        v.push(
            "system",
            format!("nesting depth {depth} exceeds max_depth {max_depth}"),
        );
    }
    v.system(spec);
    ValidationReport { violations: v.out }
}

/// Which side of an edge an endpoint sits on.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Tail,
    Head,
}

struct Validator {
    out: Vec<Violation>,
    scope: Vec<String>,
}

impl Validator {
    fn push(&mut self, item: impl Into<String>, message: impl Into<String>) {
        self.out.push(Violation {
            scope: self.scope.clone(),
            item: item.into(),
            message: message.into(),
        });
    }

    fn system(&mut self, spec: &SystemSpec) {
        self.components(spec);
        self.env_nodes(spec);
        self.edge_ids(spec);
        for edge in &spec.network.edges {
            self.network_edge(spec, edge);
        }
        for edge in &spec.interface.edges {
            self.interface_edge(spec, edge);
        }
        self.knowledge(spec);
        self.boundary(spec);
        self.ports(spec);
        self.identifiers(spec);

        for c in &spec.components {
            if let ComponentBody::Subsystem(sub) = &c.body {
                if sub.level != spec.level + 1 {
                    self.push(
                        format!("component {}", c.type_id),
                        format!(
                            "subsystem level {} should be {}",
                            sub.level,
                            spec.level + 1
                        ),
                    );
                }
                self.scope.push(c.type_id.clone());
                self.system(sub);
                self.scope.pop();
            }
        }
    }

    fn components(&mut self, spec: &SystemSpec) {
        let mut seen = BTreeSet::new();
        for c in &spec.components {
            let item = format!("component {}", c.type_id);
            if !seen.insert(c.type_id.as_str()) {
                self.push(&item, format!("duplicate component type {}", c.type_id));
            }
            if c.multiplicity < 1 {
                self.push(&item, "multiplicity must be at least 1");
            }
            if !c.variations.is_empty() {
                let mut labels = BTreeSet::new();
                let mut total: u64 = 0;
                for var in &c.variations {
                    if var.count < 1 {
                        self.push(&item, format!("variation {} has count 0", var.label));
                    }
                    if !labels.insert(var.label.as_str()) {
                        self.push(&item, format!("duplicate variation {}", var.label));
                    }
                    total += u64::from(var.count);
                }
                if total != u64::from(c.multiplicity) {
                    self.push(
                        &item,
                        format!(
                            "variation counts sum to {total}, multiplicity is {}",
                            c.multiplicity
                        ),
                    );
                }
            }
        }
    }

    fn env_nodes(&mut self, spec: &SystemSpec) {
        let mut seen = BTreeSet::new();
        for n in &spec.interface.env_nodes {
            let item = format!("env {}", n.id);
            if !seen.insert(n.id.as_str()) {
                self.push(&item, format!("duplicate environment node {}", n.id));
            }
            if spec.component(&n.id).is_some() {
                self.push(&item, format!("{} is both a component and an environment node", n.id));
            }
            if let EnvKind::Source { rate, .. } = &n.kind {
                if !(rate.is_finite() && *rate >= 0.0) {
                    self.push(&item, "source rate must be a non-negative number");
                }
            }
        }
    }

    fn edge_ids(&mut self, spec: &SystemSpec) {
        let mut seen = BTreeSet::new();
        for e in spec.edges() {
            if !seen.insert(e.id.as_str()) {
                self.push(format!("edge {}", e.id), format!("duplicate edge id {}", e.id));
            }
        }
    }

    /// Checks that `ep` names a component (or subsystem port) usable on `side`.
    fn internal_endpoint(&mut self, spec: &SystemSpec, edge: &Edge, ep: &Endpoint, side: Side) {
        let item = format!("edge {}", edge.id);
        let Some(comp) = spec.component(&ep.node) else {
            self.push(item, format!("unresolved endpoint {}", ep.node));
            return;
        };
        match (&comp.body, &ep.port) {
            (ComponentBody::Atomic(_), None) => {}
            (ComponentBody::Atomic(_), Some(p)) => {
                self.push(item, format!("atomic component {} has no port {p}", ep.node));
            }
            (ComponentBody::Subsystem(_), None) => {
                self.push(
                    item,
                    format!("subsystem {} must be connected through a port", ep.node),
                );
            }
            (ComponentBody::Subsystem(sub), Some(p)) => match sub.env_node(p) {
                None => self.push(item, format!("unresolved endpoint {ep}")),
                Some(port) => {
                    let ok = matches!(
                        (&port.kind, side),
                        (EnvKind::Source { .. }, Side::Head)
                            | (EnvKind::Sink { .. }, Side::Tail)
                            | (EnvKind::OtherEntity, _)
                    );
                    if !ok {
                        let dir = if side == Side::Tail { "output" } else { "input" };
                        self.push(item, format!("port {ep} cannot be used as an {dir}"));
                    } else if let Some(k) = spec.knowledge.get(&edge.id) {
                        for s in port_substances(sub, p, side) {
                            if s != k.substance {
                                self.push(
                                    format!("edge {}", edge.id),
                                    format!(
                                        "substance {} does not match port {ep} substance {s}",
                                        k.substance
                                    ),
                                );
                            }
                        }
                    }
                }
            },
        }
    }

    fn network_edge(&mut self, spec: &SystemSpec, edge: &Edge) {
        for (ep, side) in [(&edge.tail, Side::Tail), (&edge.head, Side::Head)] {
            if ep.port.is_none() && spec.env_node(&ep.node).is_some() {
                self.push(
                    format!("edge {}", edge.id),
                    format!("network edge touches environment node {}", ep.node),
                );
            } else {
                self.internal_endpoint(spec, edge, ep, side);
            }
        }
    }

    fn interface_edge(&mut self, spec: &SystemSpec, edge: &Edge) {
        let item = format!("edge {}", edge.id);
        let env = |ep: &Endpoint| {
            if ep.port.is_none() {
                spec.env_node(&ep.node)
            } else {
                None
            }
        };
        match (env(&edge.tail), env(&edge.head)) {
            (Some(_), Some(_)) => {
                self.push(item, "interface edge joins two environment nodes");
            }
            (None, None) => {
                // Neither side is an environment node; report dangling names.
                self.internal_endpoint(spec, edge, &edge.tail, Side::Tail);
                self.internal_endpoint(spec, edge, &edge.head, Side::Head);
                self.push(item, "interface edge has no environment endpoint");
            }
            (Some(src), None) => {
                if src.is_sink() {
                    self.push(&item, format!("sink {} used as an edge tail", src.id));
                }
                if let (EnvKind::Source { substance, .. }, Some(k)) =
                    (&src.kind, spec.knowledge.get(&edge.id))
                {
                    if *substance != k.substance {
                        self.push(
                            &item,
                            format!(
                                "source {} emits {substance} but edge carries {}",
                                src.id, k.substance
                            ),
                        );
                    }
                }
                self.internal_endpoint(spec, edge, &edge.head, Side::Head);
            }
            (None, Some(dst)) => {
                if dst.is_source() {
                    self.push(&item, format!("source {} used as an edge head", dst.id));
                }
                self.internal_endpoint(spec, edge, &edge.tail, Side::Tail);
            }
        }
    }

    fn knowledge(&mut self, spec: &SystemSpec) {
        let ids: BTreeSet<&str> = spec.edges().map(|e| e.id.as_str()).collect();
        for e in spec.edges() {
            let item = format!("edge {}", e.id);
            match spec.knowledge.get(&e.id) {
                None => self.push(item, "edge has no knowledge entry"),
                Some(k) => {
                    if !(k.capacity.is_finite() && k.capacity >= 0.0) {
                        self.push(&item, "capacity must be a non-negative number");
                    }
                    if !(k.strength.is_finite() && k.strength >= 0.0) {
                        self.push(&item, "strength must be a non-negative number");
                    }
                    if !spec.boundary.allows(&k.substance) {
                        self.push(
                            &item,
                            format!("substance {} is not allowed by the boundary", k.substance),
                        );
                    }
                }
            }
        }
        for id in spec.knowledge.keys() {
            if !ids.contains(id.as_str()) {
                self.push(
                    format!("knowledge {id}"),
                    format!("knowledge entry for unknown edge {id}"),
                );
            }
        }
    }

    fn boundary(&mut self, spec: &SystemSpec) {
        let b = &spec.boundary;
        if let Some(allowed) = &b.allowed_substances {
            for s in b.conserved_substances.difference(allowed) {
                self.push("boundary", format!("conserved substance {s} is not allowed"));
            }
        }
        if let Some(permitted) = &b.permitted_env_ids {
            for n in &spec.interface.env_nodes {
                if !permitted.contains(&n.id) {
                    self.push(
                        format!("env {}", n.id),
                        format!("environment node {} is not permitted by the boundary", n.id),
                    );
                }
            }
        }
    }

    fn identifiers(&mut self, spec: &SystemSpec) {
        let mut bad: Vec<(String, String)> = Vec::new();
        let mut check = |item: String, what: &str, name: &str| {
            if !is_identifier(name) {
                bad.push((item, format!("{what} {name:?} is not a valid identifier")));
            }
        };
        for c in &spec.components {
            let item = format!("component {}", c.type_id);
            check(item.clone(), "component type", &c.type_id);
            for v in &c.variations {
                check(item.clone(), "variation label", &v.label);
            }
        }
        for n in &spec.interface.env_nodes {
            check(format!("env {}", n.id), "environment node id", &n.id);
            if let EnvKind::Source { substance, .. } = &n.kind {
                check(format!("env {}", n.id), "substance", substance);
            }
        }
        for e in spec.edges() {
            if e.id != Edge::default_id(&e.tail, &e.head) {
                check(format!("edge {}", e.id), "edge id", &e.id);
            }
        }
        for (id, k) in &spec.knowledge {
            check(format!("edge {id}"), "substance", &k.substance);
        }
        let b = &spec.boundary;
        let sets = [
            b.allowed_substances.as_ref(),
            Some(&b.conserved_substances),
            b.permitted_env_ids.as_ref(),
        ];
        for s in sets.into_iter().flatten().flatten() {
            check("boundary".into(), "boundary entry", s);
        }
        for (item, message) in bad {
            self.push(item, message);
        }
    }

    /// Every subsystem port that carries interface edges must be wired by a
    /// parent edge in the matching direction.
    fn ports(&mut self, spec: &SystemSpec) {
        let mut used: BTreeMap<(&str, &str), BTreeSet<Side>> = BTreeMap::new();
        for e in spec.edges() {
            for (ep, side) in [(&e.tail, Side::Tail), (&e.head, Side::Head)] {
                if let Some(p) = &ep.port {
                    used.entry((ep.node.as_str(), p.as_str()))
                        .or_default()
                        .insert(side);
                }
            }
        }
        for c in &spec.components {
            let ComponentBody::Subsystem(sub) = &c.body else {
                continue;
            };
            for port in &sub.interface.env_nodes {
                for side in [Side::Tail, Side::Head] {
                    if !port_has_edges(sub, &port.id, side) {
                        continue;
                    }
                    let wired = used
                        .get(&(c.type_id.as_str(), port.id.as_str()))
                        .is_some_and(|s| s.contains(&side));
                    if !wired {
                        self.push(
                            format!("component {}", c.type_id),
                            format!("port {}.{} is not connected", c.type_id, port.id),
                        );
                    }
                }
            }
        }
    }
}

/// Whether port `p` of `sub` has interface edges feeding a parent edge on `side`.
///
/// A parent edge whose tail is the port draws from interface edges that end
/// at the port, and vice versa.
fn port_has_edges(sub: &SystemSpec, p: &str, side: Side) -> bool {
    sub.interface.edges.iter().any(|e| match side {
        Side::Tail => e.head.port.is_none() && e.head.node == p,
        Side::Head => e.tail.port.is_none() && e.tail.node == p,
    })
}

fn port_substances<'a>(sub: &'a SystemSpec, p: &'a str, side: Side) -> Vec<&'a str> {
    let mut out: Vec<&str> = sub
        .interface
        .edges
        .iter()
        .filter(|e| match side {
            Side::Tail => e.head.port.is_none() && e.head.node == p,
            Side::Head => e.tail.port.is_none() && e.tail.node == p,
        })
        .filter_map(|e| sub.knowledge.get(&e.id).map(|k| k.substance.as_str()))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
