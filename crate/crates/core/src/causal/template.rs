//! Causal templates: typed nodes, directed edges, bidirected (correlation)
//! edges and no-signalling forbidden-influence pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while building or validating a [`CausalTemplate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("invalid identifier `{0}` (expected [A-Za-z][A-Za-z0-9_]*)")]
    InvalidLabel(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop forbidden on `{0}`")]
    SelfLoop(String),
    #[error("edge {from} -> {to} would close a directed cycle")]
    Cycle { from: String, to: String },
    #[error("selection node `{0}` cannot have outgoing edges")]
    SelectionHasChildren(String),
    #[error("selection node `{0}` cannot appear in a correlation")]
    SelectionInCorrelation(String),
    #[error("correlations connect only outcome nodes; `{0}` is not an outcome")]
    CorrelationNotOutcome(String),
    #[error(
        "nosignal pair must be setting(i) !-> outcome(j) with i != j, got {setting} !-> {outcome}"
    )]
    InvalidNoSignal { setting: String, outcome: String },
    #[error("expanded diagram has {0} nodes; at most {max} are supported", max = crate::causal::MAX_DAG_NODES)]
    TooLarge(usize),
}

/// Node label, unique within a template.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(label: impl Into<String>) -> Result<Self, TemplateError> {
        let label = label.into();
        if is_identifier(&label) {
            Ok(Self(label))
        } else {
            Err(TemplateError::InvalidLabel(label))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// `[A-Za-z][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for NodeId {
    type Err = TemplateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for NodeId {
    type Error = TemplateError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.0
    }
}

/// Role of a node in a Bell-scenario diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Measurement setting chosen by the given party.
    Setting(usize),
    /// Measurement outcome observed by the given party.
    Outcome(usize),
    Hidden,
    /// Postselection variable; always conditioned on in practice.
    Selection,
}

impl NodeKind {
    pub fn is_setting(self) -> bool {
        matches!(self, NodeKind::Setting(_))
    }

    pub fn is_outcome(self) -> bool {
        matches!(self, NodeKind::Outcome(_))
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Setting(p) => write!(f, "setting({p})"),
            NodeKind::Outcome(p) => write!(f, "outcome({p})"),
            NodeKind::Hidden => f.write_str("hidden"),
            NodeKind::Selection => f.write_str("selection"),
        }
    }
}

/// A causal diagram before expansion of its bidirected edges.
///
/// Every mutator checks the template invariants, so a value of this type is
/// always well formed: the directed part is acyclic, selection nodes are
/// sinks outside every correlation, correlations join outcome nodes only, and
/// each no-signalling pair runs from a setting to another party's outcome.
///
/// Nodes and edges live in ordered sets, so two templates built in different
/// declaration orders compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CausalTemplate {
    name: String,
    nodes: BTreeMap<NodeId, NodeKind>,
    directed: BTreeSet<(NodeId, NodeId)>,
    bidirected: BTreeSet<(NodeId, NodeId)>,
    ns_forbidden: BTreeSet<(NodeId, NodeId)>,
}

impl CausalTemplate {
    pub fn new(name: impl Into<String>) -> Result<Self, TemplateError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(TemplateError::InvalidLabel(name));
        }
        Ok(Self {
            name,
            nodes: BTreeMap::new(),
            directed: BTreeSet::new(),
            bidirected: BTreeSet::new(),
            ns_forbidden: BTreeSet::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, NodeKind)> + '_ {
        self.nodes.iter().map(|(id, kind)| (id, *kind))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn kind(&self, label: &str) -> Option<NodeKind> {
        self.nodes.get(label).copied()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.kind(label).is_some()
    }

    pub fn directed_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.directed
    }

    /// Unordered pairs, stored with the smaller label first.
    pub fn bidirected_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.bidirected
    }

    /// `(setting, outcome)` pairs along which no influence may flow.
    pub fn ns_forbidden(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.ns_forbidden
    }

    pub fn add_node(&mut self, id: NodeId, kind: NodeKind) -> Result<(), TemplateError> {
        if self.nodes.contains_key(&id) {
            return Err(TemplateError::DuplicateNode(id.0));
        }
        self.nodes.insert(id, kind);
        Ok(())
    }

    fn lookup(&self, label: &str) -> Result<(NodeId, NodeKind), TemplateError> {
        self.nodes
            .get_key_value(label)
            .map(|(id, kind)| (id.clone(), *kind))
            .ok_or_else(|| TemplateError::UnknownNode(label.to_string()))
    }

    pub fn add_edge(&mut self, from: &str, to: &str) -> Result<(), TemplateError> {
        let (from_id, from_kind) = self.lookup(from)?;
        let (to_id, _) = self.lookup(to)?;
        if from_id == to_id {
            return Err(TemplateError::SelfLoop(from_id.0));
        }
        if from_kind == NodeKind::Selection {
            return Err(TemplateError::SelectionHasChildren(from_id.0));
        }
        if self.reaches(&to_id, &from_id) {
            return Err(TemplateError::Cycle {
                from: from_id.0,
                to: to_id.0,
            });
        }
        self.directed.insert((from_id, to_id));
        Ok(())
    }

    pub fn add_corr(&mut self, a: &str, b: &str) -> Result<(), TemplateError> {
        let (a_id, a_kind) = self.lookup(a)?;
        let (b_id, b_kind) = self.lookup(b)?;
        if a_id == b_id {
            return Err(TemplateError::SelfLoop(a_id.0));
        }
        for (id, kind) in [(&a_id, a_kind), (&b_id, b_kind)] {
            match kind {
                NodeKind::Selection => {
                    return Err(TemplateError::SelectionInCorrelation(id.0.clone()))
                }
                NodeKind::Outcome(_) => {}
                _ => return Err(TemplateError::CorrelationNotOutcome(id.0.clone())),
            }
        }
        let pair = if a_id < b_id {
            (a_id, b_id)
        } else {
            (b_id, a_id)
        };
        self.bidirected.insert(pair);
        Ok(())
    }

    pub fn add_nosignal(&mut self, setting: &str, outcome: &str) -> Result<(), TemplateError> {
        let (s_id, s_kind) = self.lookup(setting)?;
        let (o_id, o_kind) = self.lookup(outcome)?;
        match (s_kind, o_kind) {
            (NodeKind::Setting(i), NodeKind::Outcome(j)) if i != j => {
                self.ns_forbidden.insert((s_id, o_id));
                Ok(())
            }
            _ => Err(TemplateError::InvalidNoSignal {
                setting: s_id.0,
                outcome: o_id.0,
            }),
        }
    }

    /// Adds `(S, O)` for every setting `S` of party i and outcome `O` of party j != i.
    pub fn add_all_nosignal(&mut self) {
        let settings: Vec<_> = self
            .nodes
            .iter()
            .filter_map(|(id, k)| match k {
                NodeKind::Setting(p) => Some((id.clone(), *p)),
                _ => None,
            })
            .collect();
        let outcomes: Vec<_> = self
            .nodes
            .iter()
            .filter_map(|(id, k)| match k {
                NodeKind::Outcome(p) => Some((id.clone(), *p)),
                _ => None,
            })
            .collect();
        for (s, i) in &settings {
            for (o, j) in &outcomes {
                if i != j {
                    self.ns_forbidden.insert((s.clone(), o.clone()));
                }
            }
        }
    }

    /// Copy of this template with every no-signalling pair dropped.
    pub fn without_nosignal(&self) -> Self {
        let mut t = self.clone();
        t.ns_forbidden.clear();
        t
    }

    /// Copy with the given no-signalling pairs (validated) in place of the current ones.
    pub fn with_nosignal<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, TemplateError> {
        let mut t = self.without_nosignal();
        for (s, o) in pairs {
            t.add_nosignal(s, o)?;
        }
        Ok(t)
    }

    fn reaches(&self, from: &NodeId, to: &NodeId) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if !seen.insert(v) {
                continue;
            }
            stack.extend(self.directed.iter().filter(|(a, _)| a == v).map(|(_, b)| b));
        }
        false
    }

    /// Re-checks every invariant. Templates built through the mutators always
    /// pass; this guards deserialized values.
    pub fn validate(&self) -> Result<(), TemplateError> {
        if !is_identifier(&self.name) {
            return Err(TemplateError::InvalidLabel(self.name.clone()));
        }
        let mut rebuilt = CausalTemplate::new(self.name.clone())?;
        for (id, kind) in &self.nodes {
            if !is_identifier(id.as_str()) {
                return Err(TemplateError::InvalidLabel(id.0.clone()));
            }
            rebuilt.add_node(id.clone(), *kind)?;
        }
        for (a, b) in &self.directed {
            rebuilt.add_edge(a.as_str(), b.as_str())?;
        }
        for (a, b) in &self.bidirected {
            rebuilt.add_corr(a.as_str(), b.as_str())?;
        }
        for (s, o) in &self.ns_forbidden {
            rebuilt.add_nosignal(s.as_str(), o.as_str())?;
        }
        Ok(())
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn small() -> CausalTemplate {
        let mut t = CausalTemplate::new("t").unwrap();
        t.add_node(id("X"), NodeKind::Setting(0)).unwrap();
        t.add_node(id("Y"), NodeKind::Setting(1)).unwrap();
        t.add_node(id("A"), NodeKind::Outcome(0)).unwrap();
        t.add_node(id("B"), NodeKind::Outcome(1)).unwrap();
        t.add_node(id("K"), NodeKind::Selection).unwrap();
        t
    }

    #[test]
    fn labels_are_identifiers() {
        assert!(NodeId::new("Lambda").is_ok());
        assert!(NodeId::new("A_1").is_ok());
        assert!(NodeId::new("").is_err());
        assert!(NodeId::new("1A").is_err());
        assert!(NodeId::new("H(A,B)").is_err());
    }

    #[test]
    fn rejects_invariant_violations() {
        let mut t = small();
        assert_eq!(
            t.add_node(id("A"), NodeKind::Hidden),
            Err(TemplateError::DuplicateNode("A".into()))
        );
        assert_eq!(
            t.add_edge("X", "X"),
            Err(TemplateError::SelfLoop("X".into()))
        );
        assert_eq!(
            t.add_edge("X", "Q"),
            Err(TemplateError::UnknownNode("Q".into()))
        );
        t.add_edge("A", "K").unwrap();
        assert!(matches!(
            t.add_edge("K", "B"),
            Err(TemplateError::SelectionHasChildren(_))
        ));
        assert!(matches!(
            t.add_corr("A", "K"),
            Err(TemplateError::SelectionInCorrelation(_))
        ));
        assert!(matches!(
            t.add_corr("A", "X"),
            Err(TemplateError::CorrelationNotOutcome(_))
        ));
        assert!(matches!(
            t.add_nosignal("X", "A"),
            Err(TemplateError::InvalidNoSignal { .. })
        ));
        assert!(matches!(
            t.add_nosignal("A", "B"),
            Err(TemplateError::InvalidNoSignal { .. })
        ));
        t.add_nosignal("X", "B").unwrap();
        t.add_edge("X", "A").unwrap();
        t.add_edge("A", "B").unwrap();
        assert!(matches!(
            t.add_edge("B", "X"),
            Err(TemplateError::Cycle { .. })
        ));
        t.validate().unwrap();
    }

    #[test]
    fn declaration_order_does_not_matter() {
        let mut a = small();
        a.add_edge("X", "A").unwrap();
        a.add_corr("B", "A").unwrap();
        let mut b = small();
        b.add_corr("A", "B").unwrap();
        b.add_edge("X", "A").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_nosignal_covers_cross_party_pairs() {
        let mut t = small();
        t.add_all_nosignal();
        let pairs: Vec<_> = t
            .ns_forbidden()
            .iter()
            .map(|(s, o)| (s.as_str(), o.as_str()))
            .collect();
        assert_eq!(pairs, vec![("X", "B"), ("Y", "A")]);
    }
}
