//! Reference models shipped with the crate, used by tests, the CLI examples
//! and the Python smoke test.

use crate::model::{
    BoundarySpec, ComponentDecl, Edge, EdgeKnowledge, EnvNode, MarketScope, NodeRole, RoleKind,
    SystemSpec,
};
use crate::sdl;

pub const DEMO: &str = include_str!("../fixtures/demo.vcs");
pub const TWO_SINKS: &str = include_str!("../fixtures/two_sinks.vcs");
pub const DIAMOND: &str = include_str!("../fixtures/diamond.vcs");
pub const NESTED: &str = include_str!("../fixtures/nested.vcs");
pub const THREE_LEVEL: &str = include_str!("../fixtures/three_level.vcs");
pub const MIXED: &str = include_str!("../fixtures/mixed.vcs");

/// Every fixture source, by name.
pub const ALL_SOURCES: [(&str, &str); 6] = [
    ("demo", DEMO),
    ("two_sinks", TWO_SINKS),
    ("diamond", DIAMOND),
    ("nested", NESTED),
    ("three_level", THREE_LEVEL),
    ("mixed", MIXED),
];

fn parse_fixture(text: &str) -> SystemSpec {
    let doc = sdl::parse(text);
    assert!(doc.diagnostics.is_empty(), "fixture: {:?}", doc.diagnostics);
    doc.root.expect("fixture parses")
}

/// Source S (rate 4) -> producer P -> trader T -> global market M, grain
/// capacities 4, 3 and 5. Built by hand rather than parsed.
pub fn demo_chain() -> SystemSpec {
    let mut s = SystemSpec::new("demo");
    s.components.push(ComponentDecl::atomic(
        "P",
        NodeRole::new(RoleKind::Producer, 0),
    ));
    s.components.push(ComponentDecl::atomic(
        "T",
        NodeRole::new(RoleKind::ProcessorTrader, 1),
    ));
    s.interface.env_nodes = vec![
        EnvNode::sink("M", MarketScope::Global),
        EnvNode::source("S", 4.0, "grain"),
    ];
    s.network.edges.push(Edge::new("P->T", "P", "T"));
    s.interface.edges.push(Edge::new("S->P", "S", "P"));
    s.interface.edges.push(Edge::new("T->M", "T", "M"));
    for (id, cap) in [("P->T", 3.0), ("S->P", 4.0), ("T->M", 5.0)] {
        s.knowledge
            .insert(id.to_string(), EdgeKnowledge::new("grain", cap));
    }
    let grain: std::collections::BTreeSet<String> = ["grain".to_string()].into();
    s.boundary = BoundarySpec {
        allowed_substances: Some(grain.clone()),
        conserved_substances: grain,
        ..BoundarySpec::default()
    };
    s
}

pub fn two_sinks() -> SystemSpec {
    parse_fixture(TWO_SINKS)
}

pub fn diamond() -> SystemSpec {
    parse_fixture(DIAMOND)
}

/// Two farms of two plots each, spliced through `inp`/`out` ports.
pub fn nested_two_level() -> SystemSpec {
    parse_fixture(NESTED)
}

pub fn three_level() -> SystemSpec {
    parse_fixture(THREE_LEVEL)
}

pub fn mixed() -> SystemSpec {
    parse_fixture(MIXED)
}

/// Every text fixture with its name.
pub fn all() -> Vec<(&'static str, SystemSpec)> {
    ALL_SOURCES.iter().map(|(n, t)| (*n, parse_fixture(t))).collect()
}
