//! Query-directed construction of influence diagrams.
//!
//! A goal state holds a stack of pending subgoals, a draft diagram and the
//! accumulated substitution. Each step pops the most recent subgoal and
//! tries, in order: a logical proof (rule i), reuse of an existing node
//! (rule ii), a prior (rule iii), an informational influence when deciding,
//! and finally a conditional influence (rule iv), whose conditions become
//! new subgoals. Candidates within a rule follow declaration order and the
//! search backtracks chronologically.
//!
//! Restricted conditions become table axes of the node that spawned them.
//! While building, every axis is a slot that ends up bound to a parent node
//! or, when rule i proves one outcome outright, fixed to that outcome; the
//! final diagram slices fixed axes out of the table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diagram::{config_index, InfluenceDiagram, Node, NodeId, NodeKind};
use crate::kb::{Influence, KnowledgeBase, Query};
use crate::logic::{prove, ProofConfig};
use crate::subst::{unify, Substitution};
use crate::term::{cross_product, Proposition, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// Logical proof.
    I,
    /// Reuse of an existing node.
    Ii,
    /// Prior distribution.
    Iii,
    /// Conditional influence, chaining backwards.
    Iv,
    Info,
    Value,
    /// Subgoal postponed because it was not yet instantiated enough.
    Delay,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::I => "i",
            Rule::Ii => "ii",
            Rule::Iii => "iii",
            Rule::Iv => "iv",
            Rule::Info => "info",
            Rule::Value => "value",
            Rule::Delay => "delay",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Chosen {
    Proof,
    Node {
        id: NodeId,
        label: Proposition,
    },
    /// `index` is the 0-based position among the knowledge base's influences.
    Influence {
        index: usize,
        keyword: &'static str,
        subject: Proposition,
    },
    Delay,
}

impl fmt::Display for Chosen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chosen::Proof => f.write_str("proof"),
            Chosen::Node { id, label } => write!(f, "node {id} {label}"),
            Chosen::Influence { index, keyword, subject } => write!(f, "{keyword}#{} {subject}", index + 1),
            Chosen::Delay => f.write_str("postponed"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub rule: Rule,
    /// The subgoal as it stood when selected (a conjunction for logic queries).
    pub subgoal: Vec<Proposition>,
    /// Number of subgoals between this one and the query.
    pub depth: usize,
    pub chosen: Chosen,
    /// Substitution found by this step.
    pub theta: Substitution,
    /// The subgoal was a deterministic guard, provable only by logic.
    pub guard: bool,
    /// Guards the chosen influence requires; they are proved by later steps.
    pub guards: Vec<Proposition>,
    /// Node created or reused by this step.
    pub node: Option<NodeId>,
    /// Index of this successor among those produced by [`Constructor::step`].
    pub choice: usize,
}

impl TraceStep {
    pub fn render(&self) -> String {
        let goal: Vec<String> = self.subgoal.iter().map(ToString::to_string).collect();
        let mut line = format!(
            "{}{}{} {} => {} {}",
            "  ".repeat(self.depth),
            self.rule.tag(),
            if self.guard { " guard" } else { "" },
            goal.join(", "),
            self.chosen,
            self.theta
        );
        if let Some(n) = self.node {
            line.push_str(&format!(" -> {n}"));
        }
        if !self.guards.is_empty() {
            let g: Vec<String> = self.guards.iter().map(ToString::to_string).collect();
            line.push_str(&format!(" requires {}", g.join(", ")));
        }
        line
    }
}

/// One line per step, indented by subgoal depth.
pub fn render_trace(trace: &[TraceStep]) -> String {
    trace.iter().map(|s| s.render() + "\n").collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResultKind {
    Logical,
    Probabilistic,
    Decision,
}

impl ResultKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResultKind::Logical => "logical",
            ResultKind::Probabilistic => "probabilistic",
            ResultKind::Decision => "decision",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstructionResult {
    pub diagram: InfluenceDiagram,
    /// Node answering a distribution query, or the value node of a decision
    /// query.
    pub query_node: Option<NodeId>,
    /// Accumulated substitution restricted to the query's variables.
    pub answer: Substitution,
    pub trace: Vec<TraceStep>,
    pub kind: ResultKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConstructionFailure {
    #[error("exhausted")]
    Exhausted,
    #[error("cycle")]
    Cycle,
    #[error("depth")]
    Depth,
    #[error("decision-in-dist-query")]
    DecisionInDistQuery,
    #[error("unordered-decisions")]
    UnorderedDecisions,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InstantiateError {
    #[error("{0} still has a free variable outside its restricted positions")]
    Floundering(Proposition),
    #[error("logic clauses do not instantiate to nodes")]
    NotANode,
}

/// An influence instantiated under a substitution, before its axes are
/// resolved: the label, the node kind with its table laid out over the
/// restricted conditions, those conditions, and the guards.
#[derive(Clone, Debug, PartialEq)]
pub struct Instantiated {
    pub label: Proposition,
    pub kind: NodeKind,
    pub axes: Vec<Proposition>,
    pub guards: Vec<Proposition>,
}

/// Builds the node content an influence contributes under `theta`.
pub fn instantiate_influence(inf: &Influence, theta: &Substitution) -> Result<Instantiated, InstantiateError> {
    let label = theta.apply(inf.subject());
    let free = label.variables().len();
    let allowed = usize::from(matches!(inf, Influence::Value { .. }));
    if free > allowed {
        return Err(InstantiateError::Floundering(label));
    }
    let conds: Vec<Proposition> = inf.conditions().iter().map(|c| theta.apply(c)).collect();
    let (axes, guards): (Vec<_>, Vec<_>) = conds.into_iter().partition(Proposition::is_restricted);
    let kind = match inf {
        Influence::Prior { dist, .. } => NodeKind::Chance(dist.probs.clone()),
        Influence::Prob { table, .. } => NodeKind::Chance(table.flat()),
        Influence::Info { .. } => NodeKind::Decision,
        Influence::Value { table, .. } => NodeKind::Value(table.values.clone()),
        Influence::Logic { .. } => return Err(InstantiateError::NotANode),
    };
    Ok(Instantiated { label, kind, axes, guards })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Pending,
    Parent(NodeId),
    Fixed(usize),
}

#[derive(Clone, Debug)]
struct DraftNode {
    label: Proposition,
    kind: NodeKind,
    axis_radices: Vec<usize>,
    slots: Vec<Slot>,
}

impl DraftNode {
    fn parents(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.slots.iter().filter_map(|s| match s {
            Slot::Parent(p) => Some(*p),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, Default)]
struct Draft {
    nodes: BTreeMap<NodeId, DraftNode>,
    next: usize,
}

impl Draft {
    /// True when `to` is `from` or one of its ancestors.
    fn reaches_up(&self, from: NodeId, to: NodeId) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                stack.extend(self.nodes[&n].parents());
            }
        }
        false
    }

    fn find_instance(&self, p: &Proposition) -> Option<(NodeId, Substitution)> {
        self.nodes
            .iter()
            .filter(|(_, n)| !matches!(n.kind, NodeKind::Value(_)))
            .find_map(|(&id, n)| crate::subst::match_instance(&n.label, p, &Substitution::new()).map(|s| (id, s)))
    }

    fn has_unifying_label(&self, label: &Proposition) -> bool {
        self.nodes.values().any(|n| unify(&n.label, label, &Substitution::new()).is_some())
    }

    fn finalize(&self) -> InfluenceDiagram {
        // insert in a parent-first order; ties by id
        let mut done: BTreeSet<NodeId> = BTreeSet::new();
        let mut d = InfluenceDiagram::new();
        while done.len() < self.nodes.len() {
            let (&id, dn) = self
                .nodes
                .iter()
                .find(|(id, n)| !done.contains(id) && n.parents().all(|p| done.contains(&p)))
                .expect("draft is acyclic");
            let mut parents: Vec<NodeId> = Vec::new();
            for p in dn.parents() {
                if !parents.contains(&p) {
                    parents.push(p);
                }
            }
            let radices: Vec<usize> = parents.iter().map(|p| self.nodes[p].label.outcome_count()).collect();
            let slice = |table: &[f64], own: usize| -> Vec<f64> {
                let mut out = Vec::new();
                for cfg in cross_product(&radices) {
                    let axis_cfg: Vec<usize> = dn
                        .slots
                        .iter()
                        .map(|s| match s {
                            Slot::Fixed(k) => *k,
                            Slot::Parent(p) => cfg[parents.iter().position(|q| q == p).expect("parent")],
                            Slot::Pending => unreachable!("finalized with a pending axis"),
                        })
                        .collect();
                    let row = config_index(&dn.axis_radices, &axis_cfg);
                    out.extend_from_slice(&table[row * own..(row + 1) * own]);
                }
                out
            };
            let table = match &dn.kind {
                NodeKind::Chance(t) => Some(slice(t, dn.label.outcome_count())),
                NodeKind::Value(t) => Some(slice(t, 1)),
                NodeKind::Decision => None,
            };
            let node = match (&dn.kind, table) {
                (NodeKind::Chance(_), Some(t)) => Node::chance(id, dn.label.clone(), parents, t),
                (NodeKind::Value(_), Some(t)) => Node::value(id, dn.label.clone(), parents, t),
                _ => Node::decision(id, dn.label.clone(), parents),
            };
            d = d.add_node(node).expect("finalized node is well formed");
            done.insert(id);
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// The query itself.
    Root,
    /// A restricted condition: an axis of its consumer.
    Condition,
    /// An unrestricted condition that only logic may discharge.
    Guard,
}

#[derive(Clone, Debug)]
pub struct Subgoal {
    /// One proposition, or the whole conjunction of a logic query.
    pub goals: Vec<Proposition>,
    pub role: Role,
    /// Node whose table this subgoal feeds.
    pub consumer: Option<NodeId>,
    axis: Option<usize>,
    delayed: bool,
    /// Subgoals this one descends from, the query first.
    ancestry: Vec<Proposition>,
}

#[derive(Clone, Debug)]
pub struct GoalState {
    /// Pending subgoals; the next one to be selected is last.
    pub pending: Vec<Subgoal>,
    /// Composition of every step substitution so far.
    pub theta: Substitution,
    pub trace: Vec<TraceStep>,
    draft: Draft,
    root_node: Option<NodeId>,
    fresh: usize,
}

impl GoalState {
    pub fn is_complete(&self) -> bool {
        self.pending.is_empty()
    }

    /// Labels of the draft's nodes in creation order.
    pub fn node_labels(&self) -> Vec<&Proposition> {
        self.draft.nodes.values().map(|n| &n.label).collect()
    }

    /// The diagram as built so far. Only meaningful once complete.
    pub fn diagram(&self) -> InfluenceDiagram {
        self.draft.finalize()
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Flags {
    depth: bool,
    decision_in_dist: bool,
    cycle: bool,
    unordered: bool,
}

impl Flags {
    fn merge(&mut self, o: Flags) {
        self.depth |= o.depth;
        self.decision_in_dist |= o.decision_in_dist;
        self.cycle |= o.cycle;
        self.unordered |= o.unordered;
    }

    fn failure(self) -> ConstructionFailure {
        if self.depth {
            ConstructionFailure::Depth
        } else if self.decision_in_dist {
            ConstructionFailure::DecisionInDistQuery
        } else if self.cycle {
            ConstructionFailure::Cycle
        } else if self.unordered {
            ConstructionFailure::UnorderedDecisions
        } else {
            ConstructionFailure::Exhausted
        }
    }
}

/// Successor states of one step, plus what went wrong with rejected ones.
pub struct StepOutcome {
    pub successors: Vec<GoalState>,
    flags: Flags,
}

/// Renames every variable `v` to `v@n`. Distinct from the logic engine's
/// `#` suffix so the two never capture each other's variables.
fn rename_influence(p: &Proposition, n: usize) -> Proposition {
    Proposition::new(
        p.relation.clone(),
        p.args
            .iter()
            .map(|t| match t {
                Term::Variable(v) => Term::Variable(format!("{v}@{n}")),
                other => other.clone(),
            })
            .collect(),
    )
}

fn rename_influence_all(inf: &Influence, n: usize) -> Influence {
    let r = |p: &Proposition| rename_influence(p, n);
    let rs = |ps: &[Proposition]| ps.iter().map(r).collect::<Vec<_>>();
    match inf {
        Influence::Logic { head, body } => Influence::Logic { head: r(head), body: rs(body) },
        Influence::Prior { subject, dist } => Influence::Prior { subject: r(subject), dist: dist.clone() },
        Influence::Prob { subject, conditions, table } => {
            Influence::Prob { subject: r(subject), conditions: rs(conditions), table: table.clone() }
        }
        Influence::Info { decision, observed } => Influence::Info { decision: r(decision), observed: rs(observed) },
        Influence::Value { subject, conditions, table } => {
            Influence::Value { subject: r(subject), conditions: rs(conditions), table: table.clone() }
        }
    }
}

pub struct Constructor<'a> {
    pub query: Query,
    pub kb: &'a KnowledgeBase,
    pub cfg: ProofConfig,
}

impl<'a> Constructor<'a> {
    pub fn new(query: &Query, kb: &'a KnowledgeBase, cfg: &ProofConfig) -> Self {
        Constructor { query: query.clone(), kb, cfg: cfg.clone() }
    }

    fn is_decide(&self) -> bool {
        matches!(self.query, Query::Decide(_))
    }

    pub fn initial_state(&self) -> GoalState {
        GoalState {
            pending: vec![Subgoal {
                goals: self.query.goals(),
                role: Role::Root,
                consumer: None,
                axis: None,
                delayed: false,
                ancestry: Vec::new(),
            }],
            theta: Substitution::new(),
            trace: Vec::new(),
            draft: Draft::default(),
            root_node: None,
            fresh: 0,
        }
    }

    /// Expands the most recent pending subgoal into every successor state,
    /// ordered by rule precedence and then declaration order.
    pub fn step(&self, state: &GoalState) -> StepOutcome {
        let mut flags = Flags::default();
        let mut base = state.clone();
        let Some(sg) = base.pending.pop() else {
            return StepOutcome { successors: Vec::new(), flags };
        };
        base.fresh += 1;
        let n = base.fresh;
        let goals: Vec<Proposition> = sg.goals.iter().map(|g| base.theta.apply(g)).collect();
        let mut out = Vec::new();

        if sg.ancestry.len() >= self.cfg.depth_limit {
            flags.depth = true;
            return StepOutcome { successors: out, flags };
        }
        if sg.ancestry.iter().any(|a| base.theta.apply(a) == goals[0]) {
            return StepOutcome { successors: out, flags };
        }

        // rule i
        self.logic_candidates(&base, &sg, &goals, n, &mut out, &mut flags);
        let logic_only = sg.role == Role::Guard || matches!(self.query, Query::Logic(_));
        if !logic_only {
            let goal = &goals[0];
            if sg.role == Role::Root && self.is_decide() {
                self.influence_candidates(&base, &sg, goal, n, Rule::Value, &mut out, &mut flags);
            } else if !self.instantiated_enough(goal) {
                if !sg.delayed {
                    let mut s = base.clone();
                    let mut later = sg.clone();
                    later.delayed = true;
                    s.pending.insert(0, later);
                    s.trace.push(self.trace_step(
                        &sg,
                        &goals,
                        Rule::Delay,
                        Chosen::Delay,
                        Substitution::new(),
                        None,
                        vec![],
                    ));
                    out.push(s);
                }
            } else {
                self.reuse_candidate(&base, &sg, goal, &mut out, &mut flags);
                for rule in [Rule::Iii, Rule::Info, Rule::Iv] {
                    self.influence_candidates(&base, &sg, goal, n, rule, &mut out, &mut flags);
                }
            }
        }
        for (i, s) in out.iter_mut().enumerate() {
            s.trace.last_mut().expect("step recorded").choice = i;
        }
        StepOutcome { successors: out, flags }
    }

    /// Positions without a domain declaration must be ground before a
    /// subgoal can be matched against the model-building rules.
    fn instantiated_enough(&self, goal: &Proposition) -> bool {
        goal.args.iter().enumerate().all(|(i, t)| !t.is_variable() || self.kb.domain(&goal.relation, i).is_some())
    }

    #[allow(clippy::too_many_arguments)]
    fn trace_step(
        &self,
        sg: &Subgoal,
        goals: &[Proposition],
        rule: Rule,
        chosen: Chosen,
        theta: Substitution,
        node: Option<NodeId>,
        guards: Vec<Proposition>,
    ) -> TraceStep {
        TraceStep {
            rule,
            subgoal: goals.to_vec(),
            depth: sg.ancestry.len(),
            chosen,
            theta,
            guard: sg.role == Role::Guard,
            guards,
            node,
            choice: 0,
        }
    }

    fn logic_candidates(
        &self,
        base: &GoalState,
        sg: &Subgoal,
        goals: &[Proposition],
        n: usize,
        out: &mut Vec<GoalState>,
        flags: &mut Flags,
    ) {
        // restricted positions are replaced by fresh variables; a proof
        // must then pin each of them to one member
        let mut fresh: Vec<(String, crate::term::AltSet)> = Vec::new();
        let opened: Vec<Proposition> = goals
            .iter()
            .map(|g| {
                let args = g
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::AltSet(s) => {
                            let v = format!("alt{}@{n}", fresh.len());
                            fresh.push((v.clone(), s.clone()));
                            Term::Variable(v)
                        }
                        other => other.clone(),
                    })
                    .collect();
                Proposition::new(g.relation.clone(), args)
            })
            .collect();
        let mut stream = prove(&opened, self.kb, &self.cfg);
        let mut renamed = 0usize;
        for answer in stream.by_ref() {
            let mut choice = Vec::with_capacity(fresh.len());
            let mut ok = true;
            for (v, set) in &fresh {
                match answer.get(v).and_then(|t| match t {
                    Term::Constant(c) => set.index_of(c),
                    _ => None,
                }) {
                    Some(k) => choice.push((k, set.len())),
                    None => ok = false,
                }
            }
            if !ok {
                continue;
            }
            // give the proof's internal variables names of our own
            let mut pairs = Vec::new();
            for (v, t) in answer.iter() {
                if fresh.iter().any(|(f, _)| f == v) {
                    continue;
                }
                let t = match t {
                    Term::Variable(x) if x.contains('#') => {
                        renamed += 1;
                        Term::Variable(format!("_{renamed}@{n}"))
                    }
                    other => other.clone(),
                };
                pairs.push((v.to_string(), t));
            }
            let step = Substitution::from_pairs(pairs);
            let mut s = base.clone();
            s.theta = s.theta.compose(&step);
            if let (Some(c), Some(axis)) = (sg.consumer, sg.axis) {
                let radices: Vec<usize> = choice.iter().map(|&(_, r)| r).collect();
                let cfg: Vec<usize> = choice.iter().map(|&(k, _)| k).collect();
                s.draft.nodes.get_mut(&c).expect("consumer").slots[axis] = Slot::Fixed(config_index(&radices, &cfg));
            }
            s.trace.push(self.trace_step(sg, goals, Rule::I, Chosen::Proof, step, None, vec![]));
            out.push(s);
        }
        flags.depth |= stream.depth_limited();
    }

    fn reuse_candidate(
        &self,
        base: &GoalState,
        sg: &Subgoal,
        goal: &Proposition,
        out: &mut Vec<GoalState>,
        flags: &mut Flags,
    ) {
        let Some((id, step)) = base.draft.find_instance(goal) else { return };
        let mut s = base.clone();
        match (sg.consumer, sg.axis) {
            (Some(c), Some(axis)) => {
                if s.draft.reaches_up(id, c) {
                    flags.cycle = true;
                    return;
                }
                s.draft.nodes.get_mut(&c).expect("consumer").slots[axis] = Slot::Parent(id);
            }
            _ => s.root_node = Some(id),
        }
        s.theta = s.theta.compose(&step);
        let label = s.draft.nodes[&id].label.clone();
        s.trace.push(self.trace_step(
            sg,
            std::slice::from_ref(goal),
            Rule::Ii,
            Chosen::Node { id, label },
            step,
            Some(id),
            vec![],
        ));
        out.push(s);
    }

    #[allow(clippy::too_many_arguments)]
    fn influence_candidates(
        &self,
        base: &GoalState,
        sg: &Subgoal,
        goal: &Proposition,
        n: usize,
        rule: Rule,
        out: &mut Vec<GoalState>,
        flags: &mut Flags,
    ) {
        for (index, inf) in self.kb.influences.iter().enumerate() {
            let wanted = match inf {
                Influence::Prior { .. } => Rule::Iii,
                Influence::Prob { .. } => Rule::Iv,
                Influence::Info { .. } => Rule::Info,
                Influence::Value { .. } => Rule::Value,
                Influence::Logic { .. } => continue,
            };
            if wanted != rule {
                continue;
            }
            let renamed = rename_influence_all(inf, n);
            let Some(step) = unify(renamed.subject(), goal, &Substitution::new()) else { continue };
            if rule == Rule::Info && !self.is_decide() {
                flags.decision_in_dist = true;
                continue;
            }
            let theta = base.theta.compose(&step);
            let Ok(inst) = instantiate_influence(&renamed, &theta) else { continue };
            let chosen = Chosen::Influence { index, keyword: inf.keyword(), subject: inf.subject().clone() };
            if let Some(s) = self.attach(base, sg, goal, rule, chosen, step, theta, inst, renamed.conditions()) {
                out.push(s);
            }
        }
    }

    /// Adds the node for an instantiated influence, links it to the
    /// subgoal's consumer and pushes its conditions as new subgoals.
    #[allow(clippy::too_many_arguments)]
    fn attach(
        &self,
        base: &GoalState,
        sg: &Subgoal,
        goal: &Proposition,
        rule: Rule,
        chosen: Chosen,
        step: Substitution,
        theta: Substitution,
        inst: Instantiated,
        conditions: &[Proposition],
    ) -> Option<GoalState> {
        if base.draft.has_unifying_label(&inst.label) {
            return None;
        }
        let mut s = base.clone();
        let id = NodeId(s.draft.next);
        s.draft.next += 1;
        s.draft.nodes.insert(
            id,
            DraftNode {
                label: inst.label.clone(),
                kind: inst.kind,
                axis_radices: inst.axes.iter().map(Proposition::outcome_count).collect(),
                slots: vec![Slot::Pending; inst.axes.len()],
            },
        );
        match (sg.consumer, sg.axis) {
            (Some(c), Some(axis)) => s.draft.nodes.get_mut(&c).expect("consumer").slots[axis] = Slot::Parent(id),
            _ => s.root_node = Some(id),
        }
        s.theta = theta;
        let mut ancestry = sg.ancestry.clone();
        ancestry.push(goal.clone());
        let mut axis = 0;
        let mut spawned = Vec::with_capacity(conditions.len());
        for c in conditions {
            let restricted = c.is_restricted();
            spawned.push(Subgoal {
                goals: vec![c.clone()],
                role: if restricted { Role::Condition } else { Role::Guard },
                consumer: restricted.then_some(id),
                axis: restricted.then_some(axis),
                delayed: false,
                ancestry: ancestry.clone(),
            });
            axis += usize::from(restricted);
        }
        // the first condition is selected first
        s.pending.extend(spawned.into_iter().rev());
        s.trace.push(self.trace_step(sg, std::slice::from_ref(goal), rule, chosen, step, Some(id), inst.guards));
        Some(s)
    }

    /// Finishes a complete state, or reports why it cannot be a model.
    fn complete(&self, state: &GoalState) -> Result<ConstructionResult, Flags> {
        let diagram = state.draft.finalize();
        let decisions: Vec<NodeId> = diagram.nodes().filter(|n| n.is_decision()).map(|n| n.id).collect();
        for (i, &a) in decisions.iter().enumerate() {
            for &b in &decisions[i + 1..] {
                if !diagram.has_path(a, b) && !diagram.has_path(b, a) {
                    return Err(Flags { unordered: true, ..Flags::default() });
                }
            }
        }
        debug_assert!(diagram.validate().is_ok());
        let vars = self.query.variables();
        let answer = state.theta.restrict(vars.iter().map(String::as_str));
        let kind = if diagram.is_empty() {
            ResultKind::Logical
        } else if self.is_decide() {
            ResultKind::Decision
        } else {
            ResultKind::Probabilistic
        };
        let query_node = if self.is_decide() { diagram.value_node() } else { state.root_node };
        Ok(ConstructionResult { diagram, query_node, answer, trace: state.trace.clone(), kind })
    }

    /// Every model in backtracking order.
    pub fn solutions(&self) -> Solutions<'_, 'a> {
        Solutions { ctor: self, stack: vec![vec![self.initial_state()].into_iter()], flags: Flags::default() }
    }
}

/// Depth-first enumeration of complete constructions.
pub struct Solutions<'c, 'a> {
    ctor: &'c Constructor<'a>,
    stack: Vec<std::vec::IntoIter<GoalState>>,
    flags: Flags,
}

impl Solutions<'_, '_> {
    /// Why no (further) model was found, judged from everything pruned so far.
    pub fn failure(&self) -> ConstructionFailure {
        self.flags.failure()
    }
}

impl Iterator for Solutions<'_, '_> {
    type Item = ConstructionResult;

    fn next(&mut self) -> Option<ConstructionResult> {
        loop {
            let top = self.stack.last_mut()?;
            let Some(state) = top.next() else {
                self.stack.pop();
                continue;
            };
            if state.is_complete() {
                match self.ctor.complete(&state) {
                    Ok(r) => return Some(r),
                    Err(f) => self.flags.merge(f),
                }
                continue;
            }
            let outcome = self.ctor.step(&state);
            self.flags.merge(outcome.flags);
            self.stack.push(outcome.successors.into_iter());
        }
    }
}

/// The first model for `query`.
pub fn construct(
    query: &Query,
    kb: &KnowledgeBase,
    cfg: &ProofConfig,
) -> Result<ConstructionResult, ConstructionFailure> {
    let ctor = Constructor::new(query, kb, cfg);
    let mut sols = ctor.solutions();
    match sols.next() {
        Some(r) => Ok(r),
        None => Err(sols.failure()),
    }
}

/// Up to `limit` structurally distinct models, in backtracking order.
pub fn enumerate_models(query: &Query, kb: &KnowledgeBase, cfg: &ProofConfig, limit: usize) -> Vec<ConstructionResult> {
    let ctor = Constructor::new(query, kb, cfg);
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for r in ctor.solutions() {
        if out.len() >= limit {
            break;
        }
        let key = (r.diagram.canonical(), r.answer.clone());
        if !seen.contains(&key) {
            seen.push(key);
            out.push(r);
        }
    }
    out
}

/// Re-runs construction following the choices recorded in `trace`.
pub fn replay(query: &Query, kb: &KnowledgeBase, cfg: &ProofConfig, trace: &[TraceStep]) -> Option<ConstructionResult> {
    let ctor = Constructor::new(query, kb, cfg);
    let mut state = ctor.initial_state();
    for step in trace {
        let mut succ = ctor.step(&state).successors;
        if step.choice >= succ.len() {
            return None;
        }
        state = succ.swap_remove(step.choice);
    }
    if !state.is_complete() {
        return None;
    }
    ctor.complete(&state).ok()
}
