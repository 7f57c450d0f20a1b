//! The recursive system representation: components, internal network,
//! environment interface, boundary conditions, edge knowledge and history
//! policy at one level of decomposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Flow quantity, measured per tick.
pub type Quantity = f64;

/// Whether `s` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c == '_' || c.is_ascii_alphabetic())
        && chars.all(|c| c == '_' || c.is_ascii_alphanumeric())
}

/// Default bound on nesting depth.
pub const DEFAULT_MAX_DEPTH: u32 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub id: String,
    pub level: u32,
    pub components: Vec<ComponentDecl>,
    pub network: InternalGraph,
    pub interface: InterfaceGraph,
    pub boundary: BoundarySpec,
    pub knowledge: KnowledgeMap,
    pub history_policy: HistoryPolicy,
}

impl SystemSpec {
    /// An empty system: no components, no edges, default boundary, history recorded.
    pub fn new(id: impl Into<String>) -> Self {
        SystemSpec {
            id: id.into(),
            level: 0,
            components: Vec::new(),
            network: InternalGraph::default(),
            interface: InterfaceGraph::default(),
            boundary: BoundarySpec::default(),
            knowledge: KnowledgeMap::new(),
            history_policy: HistoryPolicy::Record,
        }
    }

    pub fn component(&self, type_id: &str) -> Option<&ComponentDecl> {
        self.components.iter().find(|c| c.type_id == type_id)
    }

    pub fn env_node(&self, id: &str) -> Option<&EnvNode> {
        self.interface.env_nodes.iter().find(|n| n.id == id)
    }

    /// All edges of the system, network first, then interface.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.network.edges.iter().chain(self.interface.edges.iter())
    }

    /// Sorts components, environment nodes and edges by id, recursively, and
    /// names every subsystem after its component type.
    ///
    /// Two specs that differ only in declaration order have equal canonical
    /// forms; this is the structural equality the text printer preserves.
    pub fn canonicalize(&mut self) {
        self.components.sort_by(|a, b| a.type_id.cmp(&b.type_id));
        for c in &mut self.components {
            if let ComponentBody::Subsystem(sub) = &mut c.body {
                sub.id.clone_from(&c.type_id);
                sub.canonicalize();
            }
        }
        self.network.edges.sort_by(|a, b| a.id.cmp(&b.id));
        self.interface.edges.sort_by(|a, b| a.id.cmp(&b.id));
        self.interface.env_nodes.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn canonical(&self) -> SystemSpec {
        let mut s = self.clone();
        s.canonicalize();
        s
    }

    /// Number of leaf instances after multiplicity expansion.
    pub fn instance_count(&self) -> u64 {
        self.components
            .iter()
            .map(|c| {
                let inner = match &c.body {
                    ComponentBody::Atomic(_) => 1,
                    ComponentBody::Subsystem(sub) => sub.instance_count(),
                };
                u64::from(c.multiplicity) * inner
            })
            .sum()
    }
}

/// One `{c_i, n_i}` entry of the component multiset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentDecl {
    pub type_id: String,
    pub multiplicity: u32,
    pub body: ComponentBody,
    /// Distinct variations of this type; counts sum to `multiplicity` when present.
    pub variations: Vec<Variation>,
}

impl ComponentDecl {
    pub fn atomic(type_id: impl Into<String>, role: NodeRole) -> Self {
        ComponentDecl {
            type_id: type_id.into(),
            multiplicity: 1,
            body: ComponentBody::Atomic(role),
            variations: Vec::new(),
        }
    }

    pub fn subsystem(type_id: impl Into<String>, spec: SystemSpec) -> Self {
        ComponentDecl {
            type_id: type_id.into(),
            multiplicity: 1,
            body: ComponentBody::Subsystem(Box::new(spec)),
            variations: Vec::new(),
        }
    }

    pub fn with_multiplicity(mut self, n: u32) -> Self {
        self.multiplicity = n;
        self
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.body, ComponentBody::Atomic(_))
    }

    /// Variation label of the `k`-th instance (1-based), if variations are declared.
    pub fn variation_of(&self, k: u32) -> Option<&str> {
        let mut upper = 0;
        for v in &self.variations {
            upper += v.count;
            if k <= upper {
                return Some(&v.label);
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentBody {
    Atomic(NodeRole),
    Subsystem(Box<SystemSpec>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variation {
    pub label: String,
    pub count: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    InputSupplier,
    Producer,
    ProcessorTrader,
    Buyer,
    Exporter,
    SupportService,
    BeeFactor,
}

impl RoleKind {
    pub const ALL: [RoleKind; 7] = [
        RoleKind::InputSupplier,
        RoleKind::Producer,
        RoleKind::ProcessorTrader,
        RoleKind::Buyer,
        RoleKind::Exporter,
        RoleKind::SupportService,
        RoleKind::BeeFactor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::InputSupplier => "input_supplier",
            RoleKind::Producer => "producer",
            RoleKind::ProcessorTrader => "processor_trader",
            RoleKind::Buyer => "buyer",
            RoleKind::Exporter => "exporter",
            RoleKind::SupportService => "support_service",
            RoleKind::BeeFactor => "bee_factor",
        }
    }

    pub fn parse(s: &str) -> Option<RoleKind> {
        RoleKind::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Role of an atomic actor and its position along the chain (0 = most upstream).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRole {
    pub kind: RoleKind,
    pub tier: Option<u32>,
}

impl NodeRole {
    pub fn new(kind: RoleKind, tier: u32) -> Self {
        NodeRole {
            kind,
            tier: Some(tier),
        }
    }
}

/// Edge endpoint: a component type, an environment node, or an exported
/// port (`component.port`) of a subsystem component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<String>,
}

impl Endpoint {
    pub fn node(node: impl Into<String>) -> Self {
        Endpoint {
            node: node.into(),
            port: None,
        }
    }

    pub fn port(node: impl Into<String>, port: impl Into<String>) -> Self {
        Endpoint {
            node: node.into(),
            port: Some(port.into()),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.port {
            Some(p) => write!(f, "{}.{}", self.node, p),
            None => f.write_str(&self.node),
        }
    }
}

impl From<&str> for Endpoint {
    fn from(s: &str) -> Self {
        match s.split_once('.') {
            Some((n, p)) => Endpoint::port(n, p),
            None => Endpoint::node(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub tail: Endpoint,
    pub head: Endpoint,
}

impl Edge {
    pub fn new(id: impl Into<String>, tail: impl Into<Endpoint>, head: impl Into<Endpoint>) -> Self {
        Edge {
            id: id.into(),
            tail: tail.into(),
            head: head.into(),
        }
    }

    /// Id given to an edge declared without an explicit name.
    pub fn default_id(tail: &Endpoint, head: &Endpoint) -> String {
        format!("{tail}->{head}")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InternalGraph {
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InterfaceGraph {
    pub env_nodes: Vec<EnvNode>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvNode {
    pub id: String,
    pub kind: EnvKind,
}

impl EnvNode {
    pub fn source(id: impl Into<String>, rate: Quantity, substance: impl Into<String>) -> Self {
        EnvNode {
            id: id.into(),
            kind: EnvKind::Source {
                rate,
                substance: substance.into(),
            },
        }
    }

    pub fn sink(id: impl Into<String>, scope: MarketScope) -> Self {
        EnvNode {
            id: id.into(),
            kind: EnvKind::Sink { scope },
        }
    }

    pub fn other(id: impl Into<String>) -> Self {
        EnvNode {
            id: id.into(),
            kind: EnvKind::OtherEntity,
        }
    }

    pub fn is_source(&self) -> bool {
        matches!(self.kind, EnvKind::Source { .. })
    }

    pub fn is_sink(&self) -> bool {
        matches!(self.kind, EnvKind::Sink { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Source { rate: Quantity, substance: String },
    Sink { scope: MarketScope },
    OtherEntity,
}

/// Reach of an end market.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketScope {
    Local,
    National,
    Regional,
    Global,
}

impl MarketScope {
    pub const ALL: [MarketScope; 4] = [
        MarketScope::Local,
        MarketScope::National,
        MarketScope::Regional,
        MarketScope::Global,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MarketScope::Local => "local",
            MarketScope::National => "national",
            MarketScope::Regional => "regional",
            MarketScope::Global => "global",
        }
    }

    pub fn parse(s: &str) -> Option<MarketScope> {
        MarketScope::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

/// Conditions that keep the system's identity.
///
/// `None` for `allowed_substances` or `permitted_env_ids` means unrestricted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub allowed_substances: Option<BTreeSet<String>>,
    pub conserved_substances: BTreeSet<String>,
    pub frozen_component_types: bool,
    pub permitted_env_ids: Option<BTreeSet<String>>,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec {
            allowed_substances: None,
            conserved_substances: BTreeSet::new(),
            frozen_component_types: true,
            permitted_env_ids: None,
        }
    }
}

impl BoundarySpec {
    pub fn allows(&self, substance: &str) -> bool {
        self.allowed_substances
            .as_ref()
            .is_none_or(|set| set.contains(substance))
    }

    pub fn is_default(&self) -> bool {
        *self == BoundarySpec::default()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    #[default]
    Throughput,
}

/// Parameters attached to one edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeKnowledge {
    pub capacity: Quantity,
    pub substance: String,
    pub strength: f64,
    pub rule: RuleKind,
}

impl EdgeKnowledge {
    pub fn new(substance: impl Into<String>, capacity: Quantity) -> Self {
        EdgeKnowledge {
            capacity,
            substance: substance.into(),
            strength: 1.0,
            rule: RuleKind::Throughput,
        }
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }
}

/// Edge id to its knowledge entry, covering network and interface edges.
pub type KnowledgeMap = BTreeMap<String, EdgeKnowledge>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryPolicy {
    #[default]
    Record,
    Null,
}

impl HistoryPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            HistoryPolicy::Record => "record",
            HistoryPolicy::Null => "null",
        }
    }
}
