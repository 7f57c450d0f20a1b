use serde::Serialize;

use super::{HistoryLog, SimulationState};
use crate::flatten::FlatGraph;
use crate::model::HistoryPolicy;

/// Tolerance for fractional quantities; whole-number balances must match exactly.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubstanceBalance {
    pub substance: String,
    /// Total emitted by sources according to the log.
    pub emitted: f64,
    /// Held in internal stocks at the end of the run.
    pub stocked: f64,
    /// Cumulative amount received by sinks.
    pub delivered: f64,
    /// `emitted - stocked - delivered`.
    pub error: f64,
    pub exact: bool,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservationReport {
    /// False when the log holds no history, in which case nothing is checked.
    pub checked: bool,
    pub balances: Vec<SubstanceBalance>,
}

impl ConservationReport {
    pub fn passed(&self) -> bool {
        self.balances.iter().all(|b| b.ok)
    }

    pub fn violations(&self) -> impl Iterator<Item = &SubstanceBalance> {
        self.balances.iter().filter(|b| !b.ok)
    }
}

/// For every conserved substance, checks that what sources emitted equals
/// what internal nodes hold plus what sinks received.
pub fn conservation_check(
    flat: &FlatGraph,
    state: &SimulationState,
    log: &HistoryLog,
) -> ConservationReport {
    if log.header().history == HistoryPolicy::Null {
        return ConservationReport {
            checked: false,
            balances: Vec::new(),
        };
    }
    let balances = flat
        .boundary
        .conserved_substances
        .iter()
        .map(|s| {
            let emitted: f64 = log
                .records()
                .iter()
                .filter(|r| &r.substance == s)
                .filter(|r| {
                    flat.edge(&r.edge)
                        .is_some_and(|e| flat.env_node(&e.tail).is_some_and(|n| n.is_source()))
                })
                .map(|r| r.amount)
                .sum();
            let stocked: f64 = state.stocks.values().filter_map(|m| m.get(s)).sum();
            let delivered: f64 = state.sink_received.values().filter_map(|m| m.get(s)).sum();
            let error = emitted - stocked - delivered;
            let exact = [emitted, stocked, delivered].iter().all(|x| x.fract() == 0.0);
            let ok = if exact { error == 0.0 } else { error.abs() <= TOLERANCE };
            SubstanceBalance {
                substance: s.clone(),
                emitted,
                stocked,
                delivered,
                error,
                exact,
                ok,
            }
        })
        .collect();
    ConservationReport {
        checked: true,
        balances,
    }
}
