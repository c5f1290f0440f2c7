//! Influence diagrams: chance, decision and value nodes over an acyclic
//! graph whose arcs live on the child as an ordered parent list.
//!
//! Tables are flat and row-major. A chance table has one row per joint
//! state of the parents (rightmost parent fastest) and one column per own
//! state; a value table has one entry per joint parent state. Parent order
//! is therefore the table-axis order, and every operation that touches
//! parents keeps tables in step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::subst::{match_instance, Substitution};
use crate::term::{cross_product, Proposition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Chance(Vec<f64>),
    Decision,
    Value(Vec<f64>),
}

impl NodeKind {
    pub fn tag(&self) -> &'static str {
        match self {
            NodeKind::Chance(_) => "chance",
            NodeKind::Decision => "decision",
            NodeKind::Value(_) => "value",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Ground except for restricted positions (value labels keep their one
    /// value variable).
    pub label: Proposition,
    pub kind: NodeKind,
    pub parents: Vec<NodeId>,
    /// Outcome names of the label; empty for the value node.
    pub states: Vec<String>,
}

impl Node {
    pub fn chance(id: NodeId, label: Proposition, parents: Vec<NodeId>, table: Vec<f64>) -> Self {
        let states = label.outcomes().iter().map(|o| o.name()).collect();
        Node { id, label, kind: NodeKind::Chance(table), parents, states }
    }

    pub fn decision(id: NodeId, label: Proposition, parents: Vec<NodeId>) -> Self {
        let states = label.outcomes().iter().map(|o| o.name()).collect();
        Node { id, label, kind: NodeKind::Decision, parents, states }
    }

    pub fn value(id: NodeId, label: Proposition, parents: Vec<NodeId>, table: Vec<f64>) -> Self {
        Node { id, label, kind: NodeKind::Value(table), parents, states: Vec::new() }
    }

    pub fn is_chance(&self) -> bool {
        matches!(self.kind, NodeKind::Chance(_))
    }

    pub fn is_decision(&self) -> bool {
        matches!(self.kind, NodeKind::Decision)
    }

    pub fn is_value(&self) -> bool {
        matches!(self.kind, NodeKind::Value(_))
    }

    pub fn table(&self) -> Option<&[f64]> {
        match &self.kind {
            NodeKind::Chance(t) | NodeKind::Value(t) => Some(t),
            NodeKind::Decision => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DiagramError {
    #[error("node {0} already exists")]
    DuplicateId(NodeId),
    #[error("the diagram already has a value node")]
    SecondValueNode,
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("arc {from} -> {to} would close a cycle")]
    Cycle { from: NodeId, to: NodeId },
    #[error("the value node {0} cannot have successors")]
    ValueSuccessor(NodeId),
    #[error("node {node} has a table of {found} entries, expected {expected}")]
    TableShape { node: NodeId, expected: usize, found: usize },
    #[error("row {row} of node {node} sums to {sum}")]
    BadRow { node: NodeId, row: usize, sum: f64 },
}

/// A decision rule: the chosen alternative (as a state index) for each joint
/// state of the decision's informational parents, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionRule {
    pub parents: Vec<NodeId>,
    pub choices: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Policy {
    pub rules: BTreeMap<NodeId, DecisionRule>,
}

impl Policy {
    pub fn new() -> Self {
        Self::default()
    }

    /// The alternative chosen by `decision` when its parents take `states`.
    pub fn choice(
        &self,
        diagram: &InfluenceDiagram,
        decision: NodeId,
        states: &BTreeMap<NodeId, usize>,
    ) -> Option<usize> {
        let rule = self.rules.get(&decision)?;
        let radices = diagram.radices(&rule.parents);
        let config: Vec<usize> = rule.parents.iter().map(|p| states[p]).collect();
        Some(rule.choices[config_index(&radices, &config)])
    }
}

/// Row-major index of `config` under `radices`, rightmost fastest.
pub fn config_index(radices: &[usize], config: &[usize]) -> usize {
    radices.iter().zip(config).fold(0, |acc, (&r, &c)| acc * r + c)
}

/// Tolerance for chance-table rows during validation.
pub const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InfluenceDiagram {
    nodes: BTreeMap<NodeId, Node>,
    value_node: Option<NodeId>,
    next: usize,
}

impl InfluenceDiagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The id the next created node should take.
    pub fn next_id(&self) -> NodeId {
        NodeId(self.next)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    /// Nodes in creation order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn value_node(&self) -> Option<NodeId> {
        self.value_node
    }

    pub fn state_count(&self, id: NodeId) -> usize {
        self.nodes[&id].states.len()
    }

    pub fn radices(&self, ids: &[NodeId]) -> Vec<usize> {
        ids.iter().map(|&p| self.state_count(p)).collect()
    }

    fn expected_table_len(&self, node: &Node) -> Option<usize> {
        let rows: usize = self.radices(&node.parents).iter().product();
        match node.kind {
            NodeKind::Chance(_) => Some(rows * node.states.len()),
            NodeKind::Value(_) => Some(rows),
            NodeKind::Decision => None,
        }
    }

    pub fn add_node(&self, node: Node) -> Result<InfluenceDiagram, DiagramError> {
        if self.nodes.contains_key(&node.id) {
            return Err(DiagramError::DuplicateId(node.id));
        }
        if node.is_value() && self.value_node.is_some() {
            return Err(DiagramError::SecondValueNode);
        }
        for p in &node.parents {
            match self.nodes.get(p) {
                None => return Err(DiagramError::UnknownNode(*p)),
                Some(n) if n.is_value() => return Err(DiagramError::ValueSuccessor(*p)),
                Some(_) => {}
            }
        }
        if let (Some(expected), Some(t)) = (self.expected_table_len(&node), node.table()) {
            if t.len() != expected {
                return Err(DiagramError::TableShape { node: node.id, expected, found: t.len() });
            }
        }
        let mut out = self.clone();
        out.next = out.next.max(node.id.0 + 1);
        if node.is_value() {
            out.value_node = Some(node.id);
        }
        out.nodes.insert(node.id, node);
        Ok(out)
    }

    /// Adds `from` as the last parent of `to`. Tables of `to` are widened so
    /// that they do not depend on the new parent.
    pub fn add_arc(&self, from: NodeId, to: NodeId) -> Result<InfluenceDiagram, DiagramError> {
        for id in [from, to] {
            if !self.nodes.contains_key(&id) {
                return Err(DiagramError::UnknownNode(id));
            }
        }
        if self.nodes[&from].is_value() {
            return Err(DiagramError::ValueSuccessor(from));
        }
        if from == to || self.has_path(to, from) {
            return Err(DiagramError::Cycle { from, to });
        }
        if self.nodes[&to].parents.contains(&from) {
            return Ok(self.clone());
        }
        let k = self.state_count(from);
        let mut out = self.clone();
        let node = out.nodes.get_mut(&to).expect("checked");
        let own = node.states.len().max(1);
        match &mut node.kind {
            NodeKind::Chance(t) | NodeKind::Value(t) => {
                let mut wide = Vec::with_capacity(t.len() * k);
                for row in t.chunks(own) {
                    for _ in 0..k {
                        wide.extend_from_slice(row);
                    }
                }
                *t = wide;
            }
            NodeKind::Decision => {}
        }
        node.parents.push(from);
        Ok(out)
    }

    /// True when a directed path of length ≥ 1 leads from `from` to `to`.
    pub fn has_path(&self, from: NodeId, to: NodeId) -> bool {
        let mut stack = self.successors(from);
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                stack.extend(self.successors(n));
            }
        }
        false
    }

    pub fn predecessors(&self, id: NodeId) -> &[NodeId] {
        self.nodes.get(&id).map(|n| n.parents.as_slice()).unwrap_or(&[])
    }

    /// Children of `id` in creation order.
    pub fn successors(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes.values().filter(|n| n.parents.contains(&id)).map(|n| n.id).collect()
    }

    /// Kahn's algorithm, always releasing the earliest-created ready node.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let mut indeg: BTreeMap<NodeId, usize> = self.nodes.iter().map(|(&id, n)| (id, n.parents.len())).collect();
        let mut ready: BTreeSet<NodeId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
        let mut out = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_first() {
            out.push(id);
            for child in self.successors(id) {
                let d = indeg.get_mut(&child).expect("node");
                *d -= 1;
                if *d == 0 {
                    ready.insert(child);
                }
            }
        }
        out
    }

    /// Earliest-created chance or decision node of which `p` is an instance
    /// pattern: the returned substitution makes `p` equal to the label
    /// without binding or narrowing anything in the label.
    pub fn find_unifying_node(&self, p: &Proposition) -> Option<(NodeId, Substitution)> {
        self.nodes
            .values()
            .filter(|n| !n.is_value())
            .find_map(|n| match_instance(&n.label, p, &Substitution::new()).map(|s| (n.id, s)))
    }

    pub fn validate(&self) -> Result<(), DiagramError> {
        for node in self.nodes.values() {
            for p in &node.parents {
                match self.nodes.get(p) {
                    None => return Err(DiagramError::UnknownNode(*p)),
                    Some(n) if n.is_value() => return Err(DiagramError::ValueSuccessor(*p)),
                    Some(_) => {}
                }
            }
            if let (Some(expected), Some(t)) = (self.expected_table_len(node), node.table()) {
                if t.len() != expected {
                    return Err(DiagramError::TableShape { node: node.id, expected, found: t.len() });
                }
            }
            if let NodeKind::Chance(t) = &node.kind {
                for (row, r) in t.chunks(node.states.len()).enumerate() {
                    let sum: f64 = r.iter().sum();
                    if (sum - 1.0).abs() > ROW_TOLERANCE || r.iter().any(|p| !(0.0..=1.0 + ROW_TOLERANCE).contains(p)) {
                        return Err(DiagramError::BadRow { node: node.id, row, sum });
                    }
                }
            }
        }
        if self.topological_order().len() != self.nodes.len() {
            let n = self.ids()[0];
            return Err(DiagramError::Cycle { from: n, to: n });
        }
        Ok(())
    }

    /// Replaces or inserts a node without checks; callers restore the
    /// invariants before handing the diagram out.
    pub(crate) fn put(&mut self, node: Node) {
        self.next = self.next.max(node.id.0 + 1);
        if node.is_value() {
            self.value_node = Some(node.id);
        }
        self.nodes.insert(node.id, node);
    }

    pub(crate) fn take(&mut self, id: NodeId) -> Option<Node> {
        if self.value_node == Some(id) {
            self.value_node = None;
        }
        self.nodes.remove(&id)
    }

    /// Label-based form independent of node numbering: one entry per node,
    /// sorted by label, with parents named by label.
    pub fn canonical(&self) -> Vec<CanonicalNode> {
        let mut out: Vec<CanonicalNode> = self
            .nodes
            .values()
            .map(|n| CanonicalNode {
                label: n.label.to_string(),
                kind: n.kind.tag(),
                parents: n.parents.iter().map(|p| self.nodes[p].label.to_string()).collect(),
                table: n.table().map(|t| t.iter().map(|x| x.to_bits()).collect()).unwrap_or_default(),
            })
            .collect();
        out.sort_by(|a, b| a.label.cmp(&b.label));
        out
    }

    pub fn structurally_equal(&self, other: &InfluenceDiagram) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph influence {\n");
        for n in self.nodes.values() {
            let shape = match n.kind {
                NodeKind::Chance(_) => "ellipse",
                NodeKind::Decision => "box",
                NodeKind::Value(_) => "diamond",
            };
            let _ = writeln!(out, "  {} [label=\"{}\", shape={shape}];", n.id, n.label);
        }
        for n in self.nodes.values() {
            for p in &n.parents {
                let _ = writeln!(out, "  {p} -> {};", n.id);
            }
        }
        out.push_str("}\n");
        out
    }

    /// Plain-text listing of nodes, kinds, parents and tables.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for n in self.nodes.values() {
            let _ = writeln!(out, "{} {} {}", n.id, n.kind.tag(), n.label);
            let parents: Vec<String> = n.parents.iter().map(|p| format!("{p} {}", self.nodes[p].label)).collect();
            let _ =
                writeln!(out, "  parents: {}", if parents.is_empty() { "-".to_string() } else { parents.join("; ") });
            let rows = self.parent_state_names(&n.parents);
            match &n.kind {
                NodeKind::Decision => {
                    let _ = writeln!(out, "  alternatives: {}", n.states.join(", "));
                }
                NodeKind::Chance(t) => {
                    let _ = writeln!(out, "  states: {}", n.states.join(", "));
                    for (names, row) in rows.iter().zip(t.chunks(n.states.len())) {
                        let probs: Vec<String> = row.iter().map(|p| format!("{p:.6}")).collect();
                        let _ = writeln!(out, "  {}: {}", names.join(", "), probs.join(" "));
                    }
                }
                NodeKind::Value(t) => {
                    for (names, v) in rows.iter().zip(t) {
                        let _ = writeln!(out, "  {}: {v:.6}", names.join(", "));
                    }
                }
            }
        }
        out
    }

    /// Joint parent states as outcome names, in table row order.
    pub fn parent_state_names(&self, parents: &[NodeId]) -> Vec<Vec<String>> {
        cross_product(&self.radices(parents))
            .into_iter()
            .map(|cfg| cfg.iter().zip(parents).map(|(&s, p)| self.nodes[p].states[s].clone()).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalNode {
    pub label: String,
    pub kind: &'static str,
    pub parents: Vec<String>,
    pub table: Vec<u64>,
}
