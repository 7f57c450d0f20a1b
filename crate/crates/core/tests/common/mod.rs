//! Seeded model generators and brute-force oracles shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcsys::{
    BoundarySpec, ComponentBody, ComponentDecl, Edge, EdgeKnowledge, Endpoint, EnvKind, EnvNode,
    FlatEdge, FlatGraph, FlatNode, HistoryPolicy, MarketScope, NodeRole, RoleKind, SystemSpec,
    Variation,
};

pub const SUBSTANCES: [&str; 3] = ["grain", "milk", "coffee_beans"];
const NAMES: [&str; 8] = ["farm", "mill", "coop", "trader", "plot", "hub", "depot", "shop"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug)]
pub struct SpecParams {
    pub max_depth: u32,
    pub max_components: usize,
}

impl Default for SpecParams {
    fn default() -> Self {
        SpecParams {
            max_depth: 4,
            max_components: 6,
        }
    }
}

/// A valid, canonical spec of nesting depth at most `max_depth`.
pub fn random_spec(seed: u64, params: SpecParams) -> SystemSpec {
    let mut r = rng(seed);
    let substance = SUBSTANCES[r.random_range(0..SUBSTANCES.len())];
    let level = r.random_range(0..3);
    let mut spec = gen_system(&mut r, &format!("sys{seed}"), level, params.max_depth, substance, true, params);
    if r.random_bool(0.3) {
        spec.history_policy = HistoryPolicy::Null;
    }
    random_boundary(&mut r, &mut spec);
    spec.canonicalize();
    spec
}

fn quantity(r: &mut ChaCha8Rng) -> f64 {
    match r.random_range(0..4) {
        0 => 0.0,
        1 => f64::from(r.random_range(1..20)) / 4.0,
        2 => r.random_range(0.0..10.0),
        _ => f64::from(r.random_range(1..11)),
    }
}

fn gen_system(
    r: &mut ChaCha8Rng,
    id: &str,
    level: u32,
    depth_left: u32,
    substance: &str,
    is_root: bool,
    params: SpecParams,
) -> SystemSpec {
    let mut spec = SystemSpec::new(id);
    spec.level = level;

    let n = r.random_range(1..=params.max_components);
    let mut subsystems = Vec::new();
    for i in 0..n {
        let type_id = format!("{}{i}", NAMES[r.random_range(0..NAMES.len())]);
        let mult = r.random_range(1..=3);
        let mut c = if depth_left > 0 && r.random_bool(0.3) {
            subsystems.push(type_id.clone());
            let sub = gen_system(r, &type_id, level + 1, depth_left - 1, substance, false, params);
            ComponentDecl::subsystem(type_id, sub)
        } else {
            let kind = RoleKind::ALL[r.random_range(0..RoleKind::ALL.len())];
            let tier = r.random_bool(0.8).then(|| r.random_range(0..4));
            ComponentDecl::atomic(type_id, NodeRole { kind, tier })
        }
        .with_multiplicity(mult);
        if mult >= 2 && r.random_bool(0.3) {
            let first = r.random_range(1..mult);
            c.variations = vec![
                Variation { label: "big".into(), count: first },
                Variation { label: "small".into(), count: mult - first },
            ];
        }
        spec.components.push(c);
    }

    // Environment: real sources and sinks at the root, ports below it.
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    if is_root {
        for i in 0..r.random_range(1..=2) {
            let id = format!("src{i}");
            spec.interface.env_nodes.push(EnvNode::source(&id, quantity(r), substance));
            sources.push(id);
        }
        for i in 0..r.random_range(1..=2) {
            let scope = MarketScope::ALL[r.random_range(0..4)];
            let id = format!("mkt{i}");
            spec.interface.env_nodes.push(EnvNode::sink(&id, scope));
            sinks.push(id);
        }
        if r.random_bool(0.3) {
            spec.interface.env_nodes.push(EnvNode::other("gov"));
        }
    } else {
        spec.interface.env_nodes.push(EnvNode::source("inp", quantity(r), substance));
        spec.interface.env_nodes.push(EnvNode::sink("out", MarketScope::Local));
        sources.push("inp".to_string());
        sinks.push("out".to_string());
    }

    let atomics: Vec<String> = spec
        .components
        .iter()
        .filter(|c| c.is_atomic())
        .map(|c| c.type_id.clone())
        .collect();
    let mut tails: Vec<Endpoint> = atomics.iter().map(|a| Endpoint::node(a.as_str())).collect();
    let mut heads = tails.clone();
    for s in &subsystems {
        tails.push(Endpoint::port(s.as_str(), "out"));
        heads.push(Endpoint::port(s.as_str(), "inp"));
    }

    let mut ids = BTreeSet::new();
    let mut add = |spec: &mut SystemSpec, r: &mut ChaCha8Rng, tail: Endpoint, head: Endpoint| {
        let touches_port = tail.port.is_some() || head.port.is_some();
        let is_env = |ep: &Endpoint| ep.port.is_none() && spec.env_node(&ep.node).is_some();
        let env_edge = is_env(&tail) || is_env(&head);
        let id = if r.random_bool(0.2) {
            format!("e{}", ids.len())
        } else {
            Edge::default_id(&tail, &head)
        };
        if !ids.insert(id.clone()) {
            return;
        }
        let sub = if touches_port || env_edge {
            substance
        } else {
            SUBSTANCES[r.random_range(0..SUBSTANCES.len())]
        };
        let strength = [1.0, 0.5, 2.0, 0.25][r.random_range(0..4)];
        let edge = Edge::new(id.clone(), tail, head);
        if env_edge {
            spec.interface.edges.push(edge);
        } else {
            spec.network.edges.push(edge);
        }
        spec.knowledge
            .insert(id, EdgeKnowledge::new(sub, quantity(r)).with_strength(strength));
    };

    // Every port below the root carries edges, and every subsystem port is wired.
    if !is_root {
        let h = heads[r.random_range(0..heads.len())].clone();
        add(&mut spec, r, Endpoint::node("inp"), h);
        let t = tails[r.random_range(0..tails.len())].clone();
        add(&mut spec, r, t, Endpoint::node("out"));
    }
    for s in &subsystems {
        let mut inbound: Vec<Endpoint> = sources.iter().map(|x| Endpoint::node(x.as_str())).collect();
        inbound.extend(tails.iter().filter(|t| &t.node != s).cloned());
        let t = inbound[r.random_range(0..inbound.len())].clone();
        add(&mut spec, r, t, Endpoint::port(s.as_str(), "inp"));
        let mut outbound: Vec<Endpoint> = sinks.iter().map(|x| Endpoint::node(x.as_str())).collect();
        outbound.extend(heads.iter().filter(|h| &h.node != s).cloned());
        let h = outbound[r.random_range(0..outbound.len())].clone();
        add(&mut spec, r, Endpoint::port(s.as_str(), "out"), h);
    }
    if is_root {
        for src in &sources {
            let h = heads[r.random_range(0..heads.len())].clone();
            add(&mut spec, r, Endpoint::node(src.as_str()), h);
        }
        for snk in &sinks {
            let t = tails[r.random_range(0..tails.len())].clone();
            add(&mut spec, r, t, Endpoint::node(snk.as_str()));
        }
    }
    for _ in 0..r.random_range(0..=2 * n) {
        let t = tails[r.random_range(0..tails.len())].clone();
        let h = heads[r.random_range(0..heads.len())].clone();
        add(&mut spec, r, t, h);
    }
    spec
}

fn random_boundary(r: &mut ChaCha8Rng, spec: &mut SystemSpec) {
    let used: BTreeSet<String> = spec.knowledge.values().map(|k| k.substance.clone()).collect();
    let mut b = BoundarySpec::default();
    if r.random_bool(0.5) {
        let mut allow = used.clone();
        if r.random_bool(0.5) {
            allow.insert("cocoa".into());
        }
        b.allowed_substances = Some(allow);
    }
    b.conserved_substances = used.into_iter().filter(|_| r.random_bool(0.7)).collect();
    b.frozen_component_types = r.random_bool(0.8);
    if r.random_bool(0.3) {
        b.permitted_env_ids = Some(spec.interface.env_nodes.iter().map(|n| n.id.clone()).collect());
    }
    spec.boundary = b;
}

/// Internal node and edge counts of the flattened graph, by walking the tree.
pub fn count_oracle(spec: &SystemSpec) -> (u64, u64) {
    (count_nodes(spec), count_edges(spec, true))
}

fn count_nodes(spec: &SystemSpec) -> u64 {
    spec.components
        .iter()
        .map(|c| {
            let n = u64::from(c.multiplicity);
            match &c.body {
                ComponentBody::Atomic(_) => n,
                ComponentBody::Subsystem(sub) => n * count_nodes(sub),
            }
        })
        .sum()
}

/// Number of flat endpoints an endpoint stands for, looking through ports.
fn endpoint_count(spec: &SystemSpec, ep: &Endpoint, as_tail: bool) -> u64 {
    let Some(c) = spec.component(&ep.node) else {
        return 1;
    };
    let n = u64::from(c.multiplicity);
    match (&c.body, &ep.port) {
        (ComponentBody::Atomic(_), _) => n,
        (ComponentBody::Subsystem(sub), Some(p)) => {
            let inner: u64 = sub
                .edges()
                .filter_map(|e| {
                    if as_tail && e.head.node == *p && e.head.port.is_none() {
                        Some(endpoint_count(sub, &e.tail, true))
                    } else if !as_tail && e.tail.node == *p && e.tail.port.is_none() {
                        Some(endpoint_count(sub, &e.head, false))
                    } else {
                        None
                    }
                })
                .sum();
            n * inner
        }
        (ComponentBody::Subsystem(_), None) => 0,
    }
}

fn count_edges(spec: &SystemSpec, is_root: bool) -> u64 {
    let own_env = |ep: &Endpoint| ep.port.is_none() && spec.env_node(&ep.node).is_some();
    let here: u64 = spec
        .edges()
        .filter(|e| is_root || !(own_env(&e.tail) || own_env(&e.head)))
        .map(|e| endpoint_count(spec, &e.tail, true) * endpoint_count(spec, &e.head, false))
        .sum();
    let below: u64 = spec
        .components
        .iter()
        .map(|c| match &c.body {
            ComponentBody::Atomic(_) => 0,
            ComponentBody::Subsystem(sub) => u64::from(c.multiplicity) * count_edges(sub, false),
        })
        .sum();
    here + below
}

#[derive(Clone, Copy, Debug)]
pub struct FlatParams {
    pub max_nodes: usize,
    pub integer: bool,
}

/// A random flat model: internal nodes, sources, sinks and possibly an
/// entity, with cycles, parallel edges and self-loops allowed. At most
/// `max_nodes` nodes in total.
pub fn random_flat(seed: u64, params: FlatParams) -> FlatGraph {
    let mut r = rng(seed);
    let total = r.random_range(3..=params.max_nodes.max(3));
    let n_src = r.random_range(1..=2.min(total - 2));
    let n_snk = r.random_range(1..=2.min(total - n_src - 1));
    let mut rest = total - n_src - n_snk;
    let entity = rest > 1 && r.random_bool(0.2);
    if entity {
        rest -= 1;
    }
    let substances = &SUBSTANCES[..r.random_range(1..=2)];
    let mut f = FlatGraph::empty(format!("g{seed}"));
    let cap = |r: &mut ChaCha8Rng| {
        if params.integer {
            f64::from(r.random_range(0..=10))
        } else if r.random_bool(0.1) {
            0.0
        } else {
            r.random_range(0.0..10.0)
        }
    };
    for i in 0..rest {
        let kind = RoleKind::ALL[r.random_range(0..RoleKind::ALL.len())];
        f.nodes.push(FlatNode {
            id: format!("n{i}"),
            role: NodeRole { kind, tier: Some(r.random_range(0..3)) },
            origin: vec![format!("n{i}")],
            variation: None,
        });
    }
    for i in 0..n_src {
        let s = substances[r.random_range(0..substances.len())];
        let rate = cap(&mut r);
        f.env_nodes.push(EnvNode::source(format!("S{i}"), rate, s));
    }
    for i in 0..n_snk {
        f.env_nodes.push(EnvNode::sink(format!("M{i}"), MarketScope::ALL[i % 4]));
    }
    if entity {
        f.env_nodes.push(EnvNode::other("E"));
    }
    let internal: Vec<String> = f.nodes.iter().map(|n| n.id.clone()).collect();
    let all_tails: Vec<String> = internal
        .iter()
        .cloned()
        .chain(f.env_nodes.iter().filter(|n| !n.is_sink()).map(|n| n.id.clone()))
        .collect();
    let all_heads: Vec<String> = internal
        .iter()
        .cloned()
        .chain(f.env_nodes.iter().filter(|n| !n.is_source()).map(|n| n.id.clone()))
        .collect();
    let source_substance: BTreeMap<String, String> = f
        .env_nodes
        .iter()
        .filter_map(|n| match &n.kind {
            EnvKind::Source { substance, .. } => Some((n.id.clone(), substance.clone())),
            _ => None,
        })
        .collect();
    let m = r.random_range(total..=3 * total);
    for i in 0..m {
        let tail = all_tails[r.random_range(0..all_tails.len())].clone();
        let head = all_heads[r.random_range(0..all_heads.len())].clone();
        if f.env_node(&tail).is_some() && f.env_node(&head).is_some() {
            continue;
        }
        let substance = source_substance
            .get(&tail)
            .cloned()
            .unwrap_or_else(|| substances[r.random_range(0..substances.len())].to_string());
        let knowledge = EdgeKnowledge::new(substance, cap(&mut r));
        f.edges.push(FlatEdge { id: format!("e{i:02}"), tail, head, knowledge });
    }
    f.boundary.conserved_substances = substances.iter().map(|s| s.to_string()).collect();
    f
}

/// Governance scores by enumerating every simple path between each
/// source/sink pair and keeping the shortest ones.
pub fn governance_oracle(f: &FlatGraph) -> BTreeMap<String, f64> {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in &f.edges {
        if e.tail != e.head {
            adj.entry(e.tail.as_str()).or_default().insert(e.head.as_str());
        }
    }
    fn walk<'a>(
        adj: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        at: &'a str,
        target: &str,
        path: &mut Vec<&'a str>,
        found: &mut Vec<Vec<&'a str>>,
    ) {
        if at == target {
            found.push(path.clone());
            return;
        }
        for &next in adj.get(at).into_iter().flatten() {
            if !path.contains(&next) {
                path.push(next);
                walk(adj, next, target, path, found);
                path.pop();
            }
        }
    }
    let mut totals: BTreeMap<String, f64> = f.nodes.iter().map(|n| (n.id.clone(), 0.0)).collect();
    let mut pairs = 0usize;
    for s in f.sources() {
        for t in f.sinks() {
            let mut found = Vec::new();
            walk(&adj, &s.id, &t.id, &mut vec![s.id.as_str()], &mut found);
            let Some(best) = found.iter().map(Vec::len).min() else {
                continue;
            };
            pairs += 1;
            let shortest: Vec<_> = found.iter().filter(|p| p.len() == best).collect();
            for (node, total) in totals.iter_mut() {
                let through = shortest.iter().filter(|p| p.contains(&node.as_str())).count();
                *total += through as f64 / shortest.len() as f64;
            }
        }
    }
    if pairs > 0 {
        for v in totals.values_mut() {
            *v /= pairs as f64;
        }
    }
    totals
}

/// Straightforward tick-by-tick interpreter for models where every node
/// has at most one out-edge per substance. Returns cumulative sink receipts
/// after each tick.
pub fn reference_sink_trajectory(f: &FlatGraph, ticks: usize) -> Vec<BTreeMap<String, f64>> {
    let mut stock: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut received: BTreeMap<String, f64> = BTreeMap::new();
    let mut out = Vec::new();
    for _ in 0..ticks {
        let mut moves = Vec::new();
        for e in &f.edges {
            let k = &e.knowledge;
            let amount = match (f.env_node(&e.tail).map(|n| &n.kind), f.node(&e.tail)) {
                (Some(EnvKind::Source { rate, .. }), _) => rate.min(k.capacity),
                (None, Some(_)) => {
                    let have = stock.get(&(e.tail.clone(), k.substance.clone())).copied().unwrap_or(0.0);
                    have.min(k.capacity)
                }
                _ => 0.0,
            };
            if matches!(f.env_node(&e.head).map(|n| &n.kind), Some(EnvKind::OtherEntity)) {
                continue;
            }
            moves.push((e.tail.clone(), e.head.clone(), k.substance.clone(), amount));
        }
        for (tail, head, sub, amount) in moves {
            if f.node(&tail).is_some() {
                *stock.entry((tail, sub.clone())).or_default() -= amount;
            }
            if f.node(&head).is_some() {
                *stock.entry((head, sub)).or_default() += amount;
            } else {
                *received.entry(head).or_default() += amount;
            }
        }
        out.push(received.clone());
    }
    out
}
