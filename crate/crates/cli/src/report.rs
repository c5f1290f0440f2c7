//! Query results as plain data. Both the text and the JSON output are
//! rendered from these types; the JSON form is documented in
//! `docs/json-schema.json`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use ikb_core::construct::{ConstructionResult, TraceStep};
use ikb_core::{InfluenceDiagram, Policy, SolveReport, Substitution};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub query: String,
    /// `logic`, `dist` or `decide`.
    pub query_kind: String,
    /// `ok` or `failed`.
    pub status: String,
    /// Construction or solution failure, kebab-case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub models: Vec<ModelReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    /// `logical`, `probabilistic` or `decision`.
    pub result_kind: String,
    pub nodes: usize,
    pub arcs: usize,
    /// One map per answer, variable name (without `?`) to term.
    pub bindings: Vec<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<OutcomeProb>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<DecisionReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<f64>,
    pub trace: Vec<TraceEntry>,
    /// Solver transformations, one per entry, as in `--explain`.
    pub operations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProb {
    pub outcome: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub decision: String,
    pub observed: Vec<String>,
    pub rules: Vec<PolicyRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    /// Outcome of each observed proposition, in `observed` order.
    pub context: Vec<String>,
    pub choice: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub depth: usize,
    pub rule: String,
    pub guard: bool,
    pub subgoal: Vec<String>,
    pub chosen: String,
    pub substitution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requires: Vec<String>,
}

impl From<&TraceStep> for TraceEntry {
    fn from(s: &TraceStep) -> Self {
        TraceEntry {
            depth: s.depth,
            rule: s.rule.tag().to_string(),
            guard: s.guard,
            subgoal: s.subgoal.iter().map(ToString::to_string).collect(),
            chosen: s.chosen.to_string(),
            substitution: s.theta.to_string(),
            node: s.node.map(|n| n.to_string()),
            requires: s.guards.iter().map(ToString::to_string).collect(),
        }
    }
}

/// Bindings worth showing: AltSet bindings just restate the question.
pub fn bindings_of(answer: &Substitution) -> BTreeMap<String, String> {
    answer.iter().filter(|(_, t)| t.as_altset().is_none()).map(|(v, t)| (v.to_string(), t.to_string())).collect()
}

pub fn model_skeleton(model: &ConstructionResult) -> ModelReport {
    let d = &model.diagram;
    ModelReport {
        result_kind: model.kind.as_str().to_string(),
        nodes: d.len(),
        arcs: d.nodes().map(|n| n.parents.len()).sum(),
        bindings: Vec::new(),
        distribution: None,
        policy: None,
        expected_value: None,
        trace: model.trace.iter().map(TraceEntry::from).collect(),
        operations: Vec::new(),
    }
}

pub fn operations_of(report: &SolveReport, d: &InfluenceDiagram) -> Vec<String> {
    report.render(d).lines().map(str::to_string).collect()
}

pub fn policy_of(policy: &Policy, d: &InfluenceDiagram) -> Vec<DecisionReport> {
    policy
        .rules
        .iter()
        .map(|(id, rule)| {
            let node = d.node(*id).expect("decision in diagram");
            let contexts = d.parent_state_names(&rule.parents);
            DecisionReport {
                decision: node.label.to_string(),
                observed: rule.parents.iter().map(|p| d.node(*p).expect("parent").label.to_string()).collect(),
                rules: contexts
                    .into_iter()
                    .zip(&rule.choices)
                    .map(|(context, &c)| PolicyRow { context, choice: node.states[c].clone() })
                    .collect(),
            }
        })
        .collect()
}

impl ModelReport {
    pub fn render_text(&self, query_kind: &str, out: &mut String) {
        if self.result_kind == "logical" {
            if query_kind == "logic" && self.bindings.iter().all(BTreeMap::is_empty) {
                out.push_str("yes\n");
            }
            for b in self.bindings.iter().filter(|b| !b.is_empty()) {
                let parts: Vec<String> = b.iter().map(|(v, t)| format!("?{v} = {t}")).collect();
                out.push_str(&parts.join(", "));
                out.push('\n');
            }
            if query_kind != "logic" && self.bindings.iter().all(BTreeMap::is_empty) {
                out.push_str("certain\n");
            }
        }
        if let Some(dist) = &self.distribution {
            for o in dist {
                out.push_str(&format!("{} {:.6}\n", o.outcome, o.probability));
            }
        }
        if let Some(policy) = &self.policy {
            for dec in policy {
                if dec.observed.is_empty() {
                    out.push_str(&format!("decision {}\n", dec.decision));
                } else {
                    out.push_str(&format!("decision {} given {}\n", dec.decision, dec.observed.join(", ")));
                }
                for row in &dec.rules {
                    if row.context.is_empty() {
                        out.push_str(&format!("  -> {}\n", row.choice));
                    } else {
                        out.push_str(&format!("  {} -> {}\n", row.context.join(", "), row.choice));
                    }
                }
            }
        }
        if let Some(eu) = self.expected_value {
            out.push_str(&format!("expected value: {eu:.6}\n"));
        }
    }

    pub fn render_trace(&self, out: &mut String) {
        out.push_str("trace:\n");
        for s in &self.trace {
            out.push_str(&"  ".repeat(s.depth + 1));
            out.push_str(&s.rule);
            if s.guard {
                out.push_str(" guard");
            }
            out.push_str(&format!(" {} => {} {}", s.subgoal.join(", "), s.chosen, s.substitution));
            if let Some(n) = &s.node {
                out.push_str(&format!(" -> {n}"));
            }
            if !s.requires.is_empty() {
                out.push_str(&format!(" requires {}", s.requires.join(", ")));
            }
            out.push('\n');
        }
    }

    pub fn render_operations(&self, out: &mut String) {
        out.push_str("solution:\n");
        if self.operations.is_empty() {
            out.push_str("  (no transformations)\n");
        }
        for op in &self.operations {
            out.push_str(&format!("  {op}\n"));
        }
    }
}
