use std::collections::{BTreeSet, HashMap};

use super::lexer::{tokenize, Pos, Tok, Token};
use super::{Diagnostic, SdlDocument, Severity};
use crate::model::{
    ComponentBody, ComponentDecl, Edge, EdgeKnowledge, Endpoint, EnvKind, EnvNode, HistoryPolicy,
    MarketScope, NodeRole, RoleKind, RuleKind, SystemSpec, Variation,
};
use crate::validate::validate_with;

/// Nested `{` blocks deeper than this are rejected before recursion gets deep.
const MAX_BLOCK_NESTING: usize = 64;

type PResult<T> = Result<T, Diagnostic>;

pub(super) fn parse_document(source_name: &str, text: &str, max_depth: u32) -> SdlDocument {
    let mut doc = SdlDocument {
        source_name: source_name.to_string(),
        root: None,
        diagnostics: Vec::new(),
    };
    let toks = match tokenize(text) {
        Ok(t) => t,
        Err(e) => {
            doc.diagnostics.push(error_at(e.pos, e.message));
            return doc;
        }
    };
    let mut p = Parser {
        toks,
        i: 0,
        scope: Vec::new(),
        positions: HashMap::new(),
    };
    let root = match p.document() {
        Ok(root) => root,
        Err(d) => {
            doc.diagnostics.push(d);
            return doc;
        }
    };
    let report = validate_with(&root, max_depth);
    let fallback = p.positions.get(&(vec![root.id.clone()], "system".to_string())).copied();
    for v in report.violations {
        let pos = p
            .positions
            .get(&(v.scope.clone(), v.item.clone()))
            .copied()
            .or(fallback)
            .unwrap_or(Pos { line: 1, column: 1 });
        doc.diagnostics.push(error_at(pos, v.to_string()));
    }
    doc.root = Some(root);
    doc
}

fn error_at(pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        severity: Severity::Error,
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    scope: Vec<String>,
    /// Where each validated item was declared, keyed like validation violations.
    positions: HashMap<(Vec<String>, String), Pos>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if t.tok != Tok::Eof {
            self.i += 1;
        }
        t
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        Err(error_at(
            self.pos(),
            format!("expected {wanted}, found {}", self.peek()),
        ))
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.unexpected(&tok.to_string())
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            _ => self.unexpected(&format!("`{kw}`")),
        }
    }

    fn quantity(&mut self, what: &str) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let pos = self.pos();
                self.next();
                let v: f64 = s
                    .parse()
                    .map_err(|_| error_at(pos, format!("malformed number `{s}`")))?;
                if !v.is_finite() {
                    return Err(error_at(pos, format!("{what} is out of range")));
                }
                Ok(v)
            }
            _ => self.unexpected(what),
        }
    }

    fn integer(&mut self, what: &str) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let pos = self.pos();
                self.next();
                s.parse()
                    .map_err(|_| error_at(pos, format!("{what} must be a whole number, found `{s}`")))
            }
            _ => self.unexpected(what),
        }
    }

    fn record(&mut self, item: String, pos: Pos) {
        self.positions.insert((self.scope.clone(), item), pos);
    }

    fn document(&mut self) -> PResult<SystemSpec> {
        let start = self.pos();
        self.keyword("system")?;
        let id = match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                s
            }
            _ => return self.unexpected("system name string"),
        };
        let mut spec = SystemSpec::new(id.clone());
        if matches!(self.peek(), Tok::Ident(s) if s == "level") {
            self.next();
            spec.level = self.integer("level")?;
        }
        self.scope.push(id);
        self.record("system".into(), start);
        self.block(&mut spec, 0)?;
        self.eat(&Tok::Semi);
        if *self.peek() != Tok::Eof {
            return self.unexpected("end of input");
        }
        Ok(spec)
    }

    /// Parses `{ item* }` into `spec`.
    fn block(&mut self, spec: &mut SystemSpec, nesting: usize) -> PResult<()> {
        let open = self.pos();
        if nesting > MAX_BLOCK_NESTING {
            return Err(error_at(open, "system blocks nested too deeply"));
        }
        self.expect(Tok::LBrace)?;
        let mut edges: Vec<Edge> = Vec::new();
        loop {
            let pos = self.pos();
            let kw = match self.peek().clone() {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Eof => {
                    return Err(error_at(
                        pos,
                        format!(
                            "unclosed `{{` opened at line {}, column {}",
                            open.line, open.column
                        ),
                    ))
                }
                Tok::Semi => {
                    self.next();
                    continue;
                }
                Tok::Ident(kw) => kw,
                _ => return self.unexpected("a declaration or `}`"),
            };
            self.next();
            match kw.as_str() {
                "component" => {
                    let c = self.component(spec.level, nesting)?;
                    self.record(format!("component {}", c.type_id), pos);
                    spec.components.push(c);
                }
                "edge" => {
                    let (edge, k) = self.edge()?;
                    self.record(format!("edge {}", edge.id), pos);
                    spec.knowledge.insert(edge.id.clone(), k);
                    edges.push(edge);
                }
                "source" | "sink" | "entity" => {
                    let n = self.env_node(&kw)?;
                    self.record(format!("env {}", n.id), pos);
                    spec.interface.env_nodes.push(n);
                }
                "boundary" => {
                    self.record("boundary".into(), pos);
                    self.boundary(spec)?;
                }
                "history" => {
                    let v = self.ident("`record` or `null`")?;
                    spec.history_policy = match v.as_str() {
                        "record" => HistoryPolicy::Record,
                        "null" => HistoryPolicy::Null,
                        _ => {
                            return Err(error_at(
                                pos,
                                format!("history must be `record` or `null`, found `{v}`"),
                            ))
                        }
                    };
                }
                other => {
                    return Err(error_at(pos, format!("unknown declaration `{other}`")));
                }
            }
        }
        let env: BTreeSet<&str> = spec
            .interface
            .env_nodes
            .iter()
            .map(|n| n.id.as_str())
            .collect();
        let touches_env = |ep: &Endpoint| ep.port.is_none() && env.contains(ep.node.as_str());
        let (iface, net): (Vec<Edge>, Vec<Edge>) = edges
            .into_iter()
            .partition(|e| touches_env(&e.tail) || touches_env(&e.head));
        spec.network.edges = net;
        spec.interface.edges = iface;
        Ok(())
    }

    fn component(&mut self, parent_level: u32, nesting: usize) -> PResult<ComponentDecl> {
        let type_id = self.ident("component type")?;
        let mut multiplicity = 1;
        if self.eat(&Tok::Star) {
            multiplicity = self.integer("multiplicity")?;
        }
        let mut variations = Vec::new();
        if matches!(self.peek(), Tok::Ident(s) if s == "vary") {
            self.next();
            self.expect(Tok::LBracket)?;
            if !self.eat(&Tok::RBracket) {
                loop {
                    let label = self.ident("variation label")?;
                    self.expect(Tok::Eq)?;
                    let count = self.integer("variation count")?;
                    variations.push(Variation { label, count });
                    if self.eat(&Tok::RBracket) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
        }
        let body = match self.peek().clone() {
            Tok::Ident(s) if s == "atomic" => {
                self.next();
                ComponentBody::Atomic(self.role()?)
            }
            Tok::LBrace => {
                let mut sub = SystemSpec::new(type_id.clone());
                sub.level = parent_level + 1;
                self.scope.push(type_id.clone());
                let r = self.block(&mut sub, nesting + 1);
                self.scope.pop();
                r?;
                ComponentBody::Subsystem(Box::new(sub))
            }
            _ => return self.unexpected("`atomic` or `{`"),
        };
        Ok(ComponentDecl {
            type_id,
            multiplicity,
            body,
            variations,
        })
    }

    fn role(&mut self) -> PResult<NodeRole> {
        let mut kind = None;
        let mut tier = None;
        while let Tok::Ident(key) = self.peek().clone() {
            if key != "role" && key != "tier" {
                break;
            }
            let pos = self.pos();
            self.next();
            self.expect(Tok::Eq)?;
            match key.as_str() {
                "role" => {
                    let vpos = self.pos();
                    let v = self.ident("role name")?;
                    kind = Some(RoleKind::parse(&v).ok_or_else(|| {
                        error_at(vpos, format!("unknown role `{v}`"))
                    })?);
                }
                _ => {
                    if tier.is_some() {
                        return Err(error_at(pos, "duplicate `tier`"));
                    }
                    tier = Some(self.integer("tier")?);
                }
            }
        }
        match kind {
            Some(kind) => Ok(NodeRole { kind, tier }),
            None => self.unexpected("`role=`"),
        }
    }

    fn endpoint(&mut self) -> PResult<Endpoint> {
        let node = self.ident("edge endpoint")?;
        if self.eat(&Tok::Dot) {
            let port = self.ident("port name")?;
            Ok(Endpoint::port(node, port))
        } else {
            Ok(Endpoint::node(node))
        }
    }

    fn edge(&mut self) -> PResult<(Edge, EdgeKnowledge)> {
        let first = self.endpoint()?;
        let (id, tail) = if first.port.is_none() && self.eat(&Tok::Colon) {
            (Some(first.node), self.endpoint()?)
        } else {
            (None, first)
        };
        self.expect(Tok::Arrow)?;
        let head = self.endpoint()?;
        let open = self.pos();
        self.expect(Tok::LBrace)?;
        let mut substance = None;
        let mut capacity = None;
        let mut strength = None;
        let mut rule = None;
        while let Tok::Ident(key) = self.peek().clone() {
            let pos = self.pos();
            self.next();
            self.expect(Tok::Eq)?;
            let dup = match key.as_str() {
                "substance" => substance.replace(self.ident("substance")?).is_some(),
                "capacity" => capacity.replace(self.quantity("capacity")?).is_some(),
                "strength" => strength.replace(self.quantity("strength")?).is_some(),
                "rule" => {
                    let v = self.ident("rule")?;
                    if v != "throughput" {
                        return Err(error_at(pos, format!("unknown rule `{v}`")));
                    }
                    rule.replace(RuleKind::Throughput).is_some()
                }
                _ => return Err(error_at(pos, format!("unknown edge attribute `{key}`"))),
            };
            if dup {
                return Err(error_at(pos, format!("duplicate `{key}`")));
            }
        }
        self.expect(Tok::RBrace)?;
        let (Some(substance), Some(capacity)) = (substance, capacity) else {
            return Err(error_at(open, "edge needs `substance=` and `capacity=`"));
        };
        let id = id.unwrap_or_else(|| Edge::default_id(&tail, &head));
        let k = EdgeKnowledge {
            capacity,
            substance,
            strength: strength.unwrap_or(1.0),
            rule: rule.unwrap_or_default(),
        };
        Ok((Edge { id, tail, head }, k))
    }

    fn env_node(&mut self, kw: &str) -> PResult<EnvNode> {
        let id = self.ident("environment node id")?;
        let at = self.pos();
        let mut rate = None;
        let mut substance = None;
        let mut scope = None;
        while let Tok::Ident(key) = self.peek().clone() {
            let accepted = match kw {
                "source" => key == "rate" || key == "substance",
                "sink" => key == "scope",
                _ => false,
            };
            if !accepted {
                break;
            }
            let pos = self.pos();
            self.next();
            self.expect(Tok::Eq)?;
            let dup = match key.as_str() {
                "rate" => rate.replace(self.quantity("rate")?).is_some(),
                "substance" => substance.replace(self.ident("substance")?).is_some(),
                _ => {
                    let vpos = self.pos();
                    let v = self.ident("market scope")?;
                    let s = MarketScope::parse(&v)
                        .ok_or_else(|| error_at(vpos, format!("unknown scope `{v}`")))?;
                    scope.replace(s).is_some()
                }
            };
            if dup {
                return Err(error_at(pos, format!("duplicate `{key}`")));
            }
        }
        let kind = match kw {
            "source" => match (rate, substance) {
                (Some(rate), Some(substance)) => EnvKind::Source { rate, substance },
                _ => return Err(error_at(at, "source needs `rate=` and `substance=`")),
            },
            "sink" => match scope {
                Some(scope) => EnvKind::Sink { scope },
                None => return Err(error_at(at, "sink needs `scope=`")),
            },
            _ => EnvKind::OtherEntity,
        };
        Ok(EnvNode { id, kind })
    }

    fn id_list(&mut self) -> PResult<BTreeSet<String>> {
        self.expect(Tok::LBracket)?;
        let mut out = BTreeSet::new();
        if self.eat(&Tok::RBracket) {
            return Ok(out);
        }
        loop {
            out.insert(self.ident("identifier")?);
            if self.eat(&Tok::RBracket) {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn boundary(&mut self, spec: &mut SystemSpec) -> PResult<()> {
        self.expect(Tok::LBrace)?;
        let mut seen = BTreeSet::new();
        loop {
            let pos = self.pos();
            let key = match self.peek().clone() {
                Tok::RBrace => {
                    self.next();
                    return Ok(());
                }
                Tok::Ident(k) => k,
                _ => return self.unexpected("boundary setting or `}`"),
            };
            self.next();
            if !seen.insert(key.clone()) {
                return Err(error_at(pos, format!("duplicate `{key}`")));
            }
            self.expect(Tok::Eq)?;
            let b = &mut spec.boundary;
            match key.as_str() {
                "allow" => b.allowed_substances = Some(self.id_list()?),
                "conserve" => b.conserved_substances = self.id_list()?,
                "permit" => b.permitted_env_ids = Some(self.id_list()?),
                "frozen" => {
                    let vpos = self.pos();
                    b.frozen_component_types = match self.ident("`true` or `false`")?.as_str() {
                        "true" => true,
                        "false" => false,
                        v => return Err(error_at(vpos, format!("expected `true` or `false`, found `{v}`"))),
                    }
                }
                _ => return Err(error_at(pos, format!("unknown boundary setting `{key}`"))),
            }
        }
    }
}
