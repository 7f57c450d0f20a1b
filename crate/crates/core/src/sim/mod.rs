//! Deterministic discrete-time flow simulation over a [`FlatGraph`].
//!
//! Each tick every flow is computed from the stocks held at the start of the
//! tick and then applied at once. Sources emit `min(rate, capacity)` on each
//! of their edges. An internal node ships along each out-edge up to the
//! edge capacity; when its stock of a substance cannot cover every out-edge
//! carrying that substance, the stock is split in proportion to capacity.
//! Integer stocks and capacities are split with the largest-remainder rule
//! (ties to the smaller edge id) so that every flow stays integral. Edges
//! touching an `entity` environment node carry nothing.

mod conservation;
mod history;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::flatten::FlatGraph;
use crate::model::{EnvKind, HistoryPolicy};

pub use conservation::{conservation_check, ConservationReport, SubstanceBalance};
pub use history::{HistoryLog, LogHeader, TransitionRecord};

/// Quantities per node and substance.
pub type Ledger = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationState {
    pub tick: u64,
    /// Internal node -> substance -> stock.
    pub stocks: Ledger,
    /// Sink -> substance -> cumulative amount received.
    pub sink_received: Ledger,
}

impl SimulationState {
    pub fn stock(&self, node: &str, substance: &str) -> f64 {
        lookup(&self.stocks, node, substance)
    }

    pub fn received(&self, sink: &str, substance: &str) -> f64 {
        lookup(&self.sink_received, sink, substance)
    }

    /// Equality down to the bit pattern of every quantity.
    pub fn bit_eq(&self, other: &SimulationState) -> bool {
        fn same(a: &Ledger, b: &Ledger) -> bool {
            a.len() == b.len()
                && a.iter().zip(b).all(|((ka, va), (kb, vb))| {
                    ka == kb
                        && va.len() == vb.len()
                        && va
                            .iter()
                            .zip(vb)
                            .all(|((sa, xa), (sb, xb))| sa == sb && xa.to_bits() == xb.to_bits())
                })
        }
        self.tick == other.tick
            && same(&self.stocks, &other.stocks)
            && same(&self.sink_received, &other.sink_received)
    }
}

fn lookup(l: &Ledger, node: &str, substance: &str) -> f64 {
    l.get(node)
        .and_then(|m| m.get(substance))
        .copied()
        .unwrap_or(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Flow {
    /// From a source; the tail holds no stock.
    Emit { rate: f64 },
    /// Between internal nodes.
    Transfer,
    /// From an internal node into a sink.
    Deliver,
    /// Touches an entity node (or is otherwise malformed); never carries flow.
    Inert,
}

#[derive(Clone, Copy, PartialEq)]
enum NodeKind {
    Internal,
    Source(f64),
    Sink,
    Other,
}

/// Per-edge flow roles and lookup tables derived from a flat graph.
struct Plan<'a> {
    flat: &'a FlatGraph,
    kinds: HashMap<&'a str, NodeKind>,
    flows: Vec<Flow>,
    edge_index: HashMap<&'a str, usize>,
}

impl<'a> Plan<'a> {
    fn new(flat: &'a FlatGraph) -> Self {
        let mut kinds = HashMap::new();
        for n in &flat.nodes {
            kinds.insert(n.id.as_str(), NodeKind::Internal);
        }
        for n in &flat.env_nodes {
            let k = match &n.kind {
                EnvKind::Source { rate, .. } => NodeKind::Source(*rate),
                EnvKind::Sink { .. } => NodeKind::Sink,
                EnvKind::OtherEntity => NodeKind::Other,
            };
            kinds.insert(n.id.as_str(), k);
        }
        let flows = flat
            .edges
            .iter()
            .map(|e| {
                let t = kinds.get(e.tail.as_str()).copied().unwrap_or(NodeKind::Other);
                let h = kinds.get(e.head.as_str()).copied().unwrap_or(NodeKind::Other);
                match (t, h) {
                    (NodeKind::Source(rate), NodeKind::Internal) => Flow::Emit { rate },
                    (NodeKind::Internal, NodeKind::Internal) => Flow::Transfer,
                    (NodeKind::Internal, NodeKind::Sink) => Flow::Deliver,
                    _ => Flow::Inert,
                }
            })
            .collect();
        let edge_index = flat
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();
        Plan {
            flat,
            kinds,
            flows,
            edge_index,
        }
    }

    fn check(&self, state: &SimulationState) -> Result<(), SimError> {
        for node in state.stocks.keys() {
            if self.kinds.get(node.as_str()) != Some(&NodeKind::Internal) {
                return Err(SimError::InconsistentState(node.clone()));
            }
        }
        for sink in state.sink_received.keys() {
            if self.kinds.get(sink.as_str()) != Some(&NodeKind::Sink) {
                return Err(SimError::InconsistentState(sink.clone()));
            }
        }
        Ok(())
    }

    fn init(&self) -> SimulationState {
        let mut stocks = Ledger::new();
        let mut sink_received = Ledger::new();
        for (e, flow) in self.flat.edges.iter().zip(&self.flows) {
            let s = &e.knowledge.substance;
            match flow {
                Flow::Emit { .. } => {
                    zero(&mut stocks, &e.head, s);
                }
                Flow::Transfer => {
                    zero(&mut stocks, &e.tail, s);
                    zero(&mut stocks, &e.head, s);
                }
                Flow::Deliver => {
                    zero(&mut stocks, &e.tail, s);
                    zero(&mut sink_received, &e.head, s);
                }
                Flow::Inert => {}
            }
        }
        SimulationState {
            tick: 0,
            stocks,
            sink_received,
        }
    }

    /// Flow on every edge for one tick, computed from `state`'s stocks.
    fn flows(&self, state: &SimulationState) -> Vec<f64> {
        let edges = &self.flat.edges;
        let mut amounts = vec![0.0; edges.len()];
        let mut groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
        for (i, (e, flow)) in edges.iter().zip(&self.flows).enumerate() {
            let cap = e.knowledge.capacity.max(0.0);
            match flow {
                Flow::Emit { rate } => amounts[i] = rate.max(0.0).min(cap),
                Flow::Transfer | Flow::Deliver => groups
                    .entry((e.tail.as_str(), e.knowledge.substance.as_str()))
                    .or_default()
                    .push(i),
                Flow::Inert => {}
            }
        }
        for ((node, substance), idx) in groups {
            let stock = state.stock(node, substance);
            let caps: Vec<f64> = idx
                .iter()
                .map(|&i| edges[i].knowledge.capacity.max(0.0))
                .collect();
            let ids: Vec<&str> = idx.iter().map(|&i| edges[i].id.as_str()).collect();
            for (&i, a) in idx.iter().zip(allocate(stock, &caps, &ids)) {
                amounts[i] = a;
            }
        }
        amounts
    }

    /// Applies `records` in order, failing if a stock would go negative.
    fn apply(&self, state: &mut SimulationState, records: &[TransitionRecord]) -> Result<(), SimError> {
        for r in records {
            let &i = self
                .edge_index
                .get(r.edge.as_str())
                .ok_or_else(|| SimError::UnknownEdge(r.edge.clone()))?;
            let e = &self.flat.edges[i];
            if e.knowledge.substance != r.substance {
                return Err(SimError::SubstanceMismatch {
                    edge: r.edge.clone(),
                    expected: e.knowledge.substance.clone(),
                    found: r.substance.clone(),
                });
            }
            let s = &r.substance;
            match self.flows[i] {
                Flow::Emit { .. } => {
                    *slot(&mut state.stocks, &e.head, s) += r.amount;
                }
                Flow::Transfer | Flow::Deliver => {
                    let tail = slot(&mut state.stocks, &e.tail, s);
                    let left = *tail - r.amount;
                    if left.is_nan() || left < 0.0 {
                        return Err(SimError::NegativeStock {
                            tick: r.tick,
                            edge: r.edge.clone(),
                            node: e.tail.clone(),
                        });
                    }
                    *tail = left;
                    let ledger = if self.flows[i] == Flow::Transfer {
                        &mut state.stocks
                    } else {
                        &mut state.sink_received
                    };
                    *slot(ledger, &e.head, s) += r.amount;
                }
                Flow::Inert => {
                    if r.amount != 0.0 {
                        return Err(SimError::UnknownEdge(r.edge.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    fn step(&self, state: &SimulationState) -> Result<(SimulationState, Vec<TransitionRecord>), SimError> {
        self.check(state)?;
        let tick = state.tick + 1;
        let records: Vec<TransitionRecord> = self
            .flows(state)
            .into_iter()
            .zip(&self.flat.edges)
            .filter(|(a, _)| *a > 0.0)
            .map(|(amount, e)| TransitionRecord {
                tick,
                edge: e.id.clone(),
                substance: e.knowledge.substance.clone(),
                amount,
            })
            .collect();
        let mut next = state.clone();
        self.apply(&mut next, &records)?;
        next.tick = tick;
        Ok((next, records))
    }
}

fn zero(l: &mut Ledger, node: &str, substance: &str) {
    l.entry(node.to_string())
        .or_default()
        .entry(substance.to_string())
        .or_insert(0.0);
}

fn slot<'l>(l: &'l mut Ledger, node: &str, substance: &str) -> &'l mut f64 {
    l.entry(node.to_string())
        .or_default()
        .entry(substance.to_string())
        .or_insert(0.0)
}

const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

fn is_whole(x: f64) -> bool {
    x.fract() == 0.0 && x <= EXACT_LIMIT
}

/// Splits `stock` over edges with capacities `caps`.
///
/// Without contention every edge gets its capacity. Otherwise shares are
/// proportional to capacity: whole-number inputs use largest remainder with
/// ties broken by ascending id, and fractional inputs take proportional
/// shares drawn down in order so the total never exceeds `stock`.
pub(crate) fn allocate(stock: f64, caps: &[f64], ids: &[&str]) -> Vec<f64> {
    let stock = stock.max(0.0);
    let total: f64 = caps.iter().sum();
    if total <= 0.0 || stock <= 0.0 {
        return vec![0.0; caps.len()];
    }
    let whole = is_whole(stock) && is_whole(total) && caps.iter().all(|&c| is_whole(c));
    if whole {
        let s = stock as u128;
        let c_total = total as u128;
        if s >= c_total {
            return caps.to_vec();
        }
        let mut shares: Vec<u128> = Vec::with_capacity(caps.len());
        let mut rems: Vec<(u128, usize)> = Vec::with_capacity(caps.len());
        for (i, &c) in caps.iter().enumerate() {
            let num = s * c as u128;
            shares.push(num / c_total);
            rems.push((num % c_total, i));
        }
        let assigned: u128 = shares.iter().sum();
        let mut leftover = s - assigned;
        rems.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| ids[a.1].cmp(ids[b.1])));
        for (rem, i) in rems {
            if leftover == 0 || rem == 0 {
                break;
            }
            shares[i] += 1;
            leftover -= 1;
        }
        return shares.into_iter().map(|x| x as f64).collect();
    }
    let contended = total > stock;
    let mut remaining = stock;
    caps.iter()
        .map(|&c| {
            let want = if contended {
                (stock * c / total).min(c)
            } else {
                c
            };
            let take = want.min(remaining);
            remaining -= take;
            take
        })
        .collect()
}

/// All stocks zero at tick 0, one entry per (node, substance) the node can hold.
pub fn init_state(flat: &FlatGraph) -> SimulationState {
    Plan::new(flat).init()
}

/// Advances one tick and returns the new state with the transitions that
/// produced it (one record per edge with positive flow).
pub fn step(
    state: &SimulationState,
    flat: &FlatGraph,
) -> Result<(SimulationState, Vec<TransitionRecord>), SimError> {
    Plan::new(flat).step(state)
}

/// Runs `steps` ticks from [`init_state`]. The log holds every transition
/// when the model records history and only its header otherwise.
pub fn run(flat: &FlatGraph, steps: u64) -> Result<(SimulationState, HistoryLog), SimError> {
    let plan = Plan::new(flat);
    let mut state = plan.init();
    let mut log = HistoryLog::new(LogHeader {
        model_hash: flat.model_hash(),
        seed: 0,
        start_tick: 0,
        steps,
        history: flat.history_policy,
    });
    for _ in 0..steps {
        let (next, records) = plan.step(&state)?;
        if flat.history_policy == HistoryPolicy::Record {
            for r in records {
                log.append(r)?;
            }
        }
        state = next;
    }
    Ok((state, log))
}

/// Rebuilds the final state of the run that produced `log`.
pub fn replay(flat: &FlatGraph, log: &HistoryLog) -> Result<SimulationState, SimError> {
    let header = log.header();
    let expected = flat.model_hash();
    if header.model_hash != expected {
        return Err(SimError::HashMismatch {
            expected,
            found: header.model_hash.clone(),
        });
    }
    if header.history == HistoryPolicy::Null {
        return Err(SimError::NullHistory);
    }
    let plan = Plan::new(flat);
    let mut state = plan.init();
    state.tick = header.start_tick;
    plan.apply(&mut state, log.records())?;
    state.tick = header.start_tick + header.steps;
    Ok(state)
}
