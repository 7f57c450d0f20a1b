//! Structural diagnostics over a flattened graph: linkage classes, governance
//! centrality, end-market reachability, weak or missing vertical linkages and
//! a value-added proxy.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::AnalysisError;
use crate::flatten::FlatGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkageClass {
    /// Between actors at different tiers.
    Vertical,
    /// Between actors at the same tier.
    Horizontal,
    /// Touching an environment node.
    Interface,
}

/// Classifies every edge by the tiers of its endpoints.
pub fn classify_linkages(
    flat: &FlatGraph,
) -> Result<BTreeMap<String, LinkageClass>, AnalysisError> {
    let mut out = BTreeMap::new();
    for e in &flat.edges {
        let class = if flat.env_node(&e.tail).is_some() || flat.env_node(&e.head).is_some() {
            LinkageClass::Interface
        } else {
            let tier = |id: &str| {
                let node = flat.node(id).ok_or_else(|| AnalysisError::UnknownNode {
                    edge: e.id.clone(),
                    node: id.to_string(),
                })?;
                node.role
                    .tier
                    .ok_or_else(|| AnalysisError::MissingTier(id.to_string()))
            };
            if tier(&e.tail)? == tier(&e.head)? {
                LinkageClass::Horizontal
            } else {
                LinkageClass::Vertical
            }
        };
        out.insert(e.id.clone(), class);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GovernanceScore {
    pub node: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GovernanceReport {
    /// One entry per internal node, in graph order.
    pub scores: Vec<GovernanceScore>,
    /// Source/sink pairs joined by at least one directed path.
    pub connected_pairs: usize,
    /// True when no sink is reachable from any source; all scores are 0.
    pub no_path: bool,
}

impl GovernanceReport {
    pub fn score(&self, node: &str) -> Option<f64> {
        self.scores.iter().find(|s| s.node == node).map(|s| s.score)
    }
}

/// Directed adjacency over all nodes (internal and environment), with
/// parallel edges and self-loops collapsed.
struct Topology {
    index: BTreeMap<String, usize>,
    out: Vec<Vec<usize>>,
    rev: Vec<Vec<usize>>,
}

impl Topology {
    fn new(flat: &FlatGraph, keep: impl Fn(&crate::flatten::FlatEdge) -> bool) -> Self {
        let mut index = BTreeMap::new();
        for id in flat
            .nodes
            .iter()
            .map(|n| &n.id)
            .chain(flat.env_nodes.iter().map(|n| &n.id))
        {
            let next = index.len();
            index.entry(id.clone()).or_insert(next);
        }
        let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); index.len()];
        for e in flat.edges.iter().filter(|e| keep(e)) {
            if let (Some(&t), Some(&h)) = (index.get(&e.tail), index.get(&e.head)) {
                if t != h {
                    out[t].insert(h);
                }
            }
        }
        let mut rev = vec![Vec::new(); index.len()];
        for (t, hs) in out.iter().enumerate() {
            for &h in hs {
                rev[h].push(t);
            }
        }
        Topology {
            index,
            out: out.into_iter().map(|s| s.into_iter().collect()).collect(),
            rev,
        }
    }

    /// Hop distances and shortest-path counts from `start` along `adj`.
    fn bfs(adj: &[Vec<usize>], start: usize) -> (Vec<Option<u32>>, Vec<f64>) {
        let mut dist = vec![None; adj.len()];
        let mut sigma = vec![0.0; adj.len()];
        dist[start] = Some(0);
        sigma[start] = 1.0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have a distance");
            for &v in &adj[u] {
                match dist[v] {
                    None => {
                        dist[v] = Some(du + 1);
                        sigma[v] = sigma[u];
                        queue.push_back(v);
                    }
                    Some(dv) if dv == du + 1 => sigma[v] += sigma[u],
                    Some(_) => {}
                }
            }
        }
        (dist, sigma)
    }
}

/// Betweenness restricted to source-to-sink pairs over hop-count shortest
/// paths, normalized by the number of connected pairs.
///
/// Each internal node `v` scores the sum over connected (source, sink)
/// pairs of the fraction of shortest paths through `v`. Capacity and
/// strength do not enter; zero-capacity edges still count as structure.
pub fn governance_centrality(flat: &FlatGraph) -> GovernanceReport {
    let topo = Topology::new(flat, |_| true);
    let idx = |id: &String| topo.index[id];
    let sources: Vec<usize> = flat.sources().map(|n| idx(&n.id)).collect();
    let sinks: Vec<usize> = flat.sinks().map(|n| idx(&n.id)).collect();
    let internal: Vec<usize> = flat.nodes.iter().map(|n| idx(&n.id)).collect();

    let backward: Vec<_> = sinks.iter().map(|&t| Topology::bfs(&topo.rev, t)).collect();
    let mut totals = vec![0.0; topo.index.len()];
    let mut connected = 0;
    for &s in &sources {
        let (ds, ss) = Topology::bfs(&topo.out, s);
        for (&t, (dt, st)) in sinks.iter().zip(&backward) {
            let Some(d_st) = ds[t] else { continue };
            connected += 1;
            for &v in &internal {
                if v == s || v == t {
                    continue;
                }
                if let (Some(a), Some(b)) = (ds[v], dt[v]) {
                    if a + b == d_st {
                        totals[v] += ss[v] * st[v] / ss[t];
                    }
                }
            }
        }
    }
    let scores = flat
        .nodes
        .iter()
        .map(|n| GovernanceScore {
            node: n.id.clone(),
            score: if connected == 0 {
                0.0
            } else {
                totals[idx(&n.id)] / connected as f64
            },
        })
        .collect();
    GovernanceReport {
        scores,
        connected_pairs: connected,
        no_path: connected == 0,
    }
}

/// For each internal node and source, the sinks reachable along edges with
/// positive capacity.
pub fn end_market_reachability(flat: &FlatGraph) -> BTreeMap<String, BTreeSet<String>> {
    let topo = Topology::new(flat, |e| e.knowledge.capacity > 0.0);
    let mut names = vec![""; topo.index.len()];
    for (name, &i) in &topo.index {
        names[i] = name;
    }
    let mut out: BTreeMap<String, BTreeSet<String>> = flat
        .nodes
        .iter()
        .map(|n| &n.id)
        .chain(flat.sources().map(|n| &n.id))
        .map(|id| (id.clone(), BTreeSet::new()))
        .collect();
    for sink in flat.sinks() {
        let (dist, _) = Topology::bfs(&topo.rev, topo.index[&sink.id]);
        for (i, d) in dist.iter().enumerate() {
            if d.is_some() {
                if let Some(set) = out.get_mut(names[i]) {
                    set.insert(sink.id.clone());
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakLink {
    pub edge: String,
    pub tail: String,
    pub head: String,
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MissingLink {
    pub from_tier: u32,
    pub to_tier: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakLinkageReport {
    pub threshold: f64,
    pub weak: Vec<WeakLink>,
    pub missing: Vec<MissingLink>,
}

/// Vertical edges below `threshold` capacity, and adjacent populated tiers
/// `(t, t+1)` with no edge from tier `t` to tier `t+1`.
///
/// Edges whose endpoints lack a tier are not vertical and are skipped.
pub fn weak_linkage_report(
    flat: &FlatGraph,
    threshold: f64,
) -> Result<WeakLinkageReport, AnalysisError> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(AnalysisError::InvalidThreshold);
    }
    let tier_of = |id: &str| flat.node(id).and_then(|n| n.role.tier);
    let mut weak = Vec::new();
    let mut linked: BTreeSet<(u32, u32)> = BTreeSet::new();
    for e in &flat.edges {
        let (Some(a), Some(b)) = (tier_of(&e.tail), tier_of(&e.head)) else {
            continue;
        };
        linked.insert((a, b));
        if a != b && e.knowledge.capacity < threshold {
            weak.push(WeakLink {
                edge: e.id.clone(),
                tail: e.tail.clone(),
                head: e.head.clone(),
                capacity: e.knowledge.capacity,
            });
        }
    }
    let tiers: BTreeSet<u32> = flat.nodes.iter().filter_map(|n| n.role.tier).collect();
    let missing = tiers
        .iter()
        .filter(|&&t| tiers.contains(&(t + 1)) && !linked.contains(&(t, t + 1)))
        .map(|&t| MissingLink {
            from_tier: t,
            to_tier: t + 1,
        })
        .collect();
    Ok(WeakLinkageReport {
        threshold,
        weak,
        missing,
    })
}

/// Per internal node: outgoing capacity x strength minus incoming
/// capacity x strength.
pub fn value_added_profile(flat: &FlatGraph) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> =
        flat.nodes.iter().map(|n| (n.id.clone(), 0.0)).collect();
    for e in &flat.edges {
        let v = e.knowledge.capacity * e.knowledge.strength;
        if let Some(x) = out.get_mut(&e.tail) {
            *x += v;
        }
        if let Some(x) = out.get_mut(&e.head) {
            *x -= v;
        }
    }
    out
}
