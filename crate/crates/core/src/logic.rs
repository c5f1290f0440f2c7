//! Horn-clause proof by depth-first SLD resolution.
//!
//! Facts are tried before clauses, each group in declaration order, and
//! subgoals are solved left to right. Answers come out lazily through an
//! [`AnswerStream`] that remembers whether any branch was cut by the depth
//! limit, so callers can tell "no" from "gave up".

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use crate::kb::KnowledgeBase;
use crate::subst::{rename_apart, rename_prop, unify, Substitution};
use crate::term::{Proposition, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofConfig {
    /// Maximum resolution-tree depth; the root goals are at depth 1.
    pub depth_limit: usize,
    /// Stop after this many distinct answers.
    pub solution_limit: Option<usize>,
}

impl Default for ProofConfig {
    fn default() -> Self {
        ProofConfig { depth_limit: 64, solution_limit: None }
    }
}

enum Ancestry {
    Root,
    Child(Proposition, Rc<Ancestry>),
}

impl Ancestry {
    fn contains(&self, p: &Proposition, theta: &Substitution) -> bool {
        let mut cur = self;
        while let Ancestry::Child(q, parent) = cur {
            if theta.apply(q) == *p {
                return true;
            }
            cur = parent;
        }
        false
    }
}

struct Goal {
    prop: Proposition,
    depth: usize,
    ancestry: Rc<Ancestry>,
}

struct Frame {
    /// Pending goals, next one last.
    goals: Vec<Rc<Goal>>,
    theta: Substitution,
    renames: usize,
    next_candidate: usize,
}

/// Lazily produced answers of one proof, in discovery order.
pub struct AnswerStream<'a> {
    facts: &'a [Proposition],
    clauses: Vec<(&'a Proposition, &'a [Proposition])>,
    query_vars: Vec<String>,
    stack: Vec<Frame>,
    seen: BTreeSet<Substitution>,
    emitted: usize,
    cfg: ProofConfig,
    depth_limited: bool,
}

impl AnswerStream<'_> {
    /// True once some branch has been pruned by the depth limit.
    pub fn depth_limited(&self) -> bool {
        self.depth_limited
    }

    fn candidates(&self) -> usize {
        self.facts.len() + self.clauses.len()
    }

    /// Tries candidate `k` against the current goal of the top frame.
    fn resolve(&mut self, k: usize) -> Option<Frame> {
        let top = self.stack.last().expect("frame");
        let goal = top.goals.last().expect("goal");
        let rest = &top.goals[..top.goals.len() - 1];
        if k < self.facts.len() {
            let theta = unify(&goal.prop, &self.facts[k], &top.theta)?;
            return Some(Frame { goals: rest.to_vec(), theta, renames: top.renames, next_candidate: 0 });
        }
        let (head, body) = self.clauses[k - self.facts.len()];
        if goal.depth >= self.cfg.depth_limit {
            self.depth_limited = true;
            return None;
        }
        let suffix = top.renames + 1;
        let theta = unify(&goal.prop, &rename_prop(head, suffix), &top.theta)?;
        let ancestry = Rc::new(Ancestry::Child(goal.prop.clone(), goal.ancestry.clone()));
        let mut goals = rest.to_vec();
        for b in rename_apart(body, suffix).into_iter().rev() {
            goals.push(Rc::new(Goal { prop: b, depth: goal.depth + 1, ancestry: ancestry.clone() }));
        }
        Some(Frame { goals, theta, renames: suffix, next_candidate: 0 })
    }
}

impl Iterator for AnswerStream<'_> {
    type Item = Substitution;

    fn next(&mut self) -> Option<Substitution> {
        if self.cfg.solution_limit.is_some_and(|n| self.emitted >= n) {
            return None;
        }
        loop {
            let top = self.stack.last_mut()?;
            let Some(goal) = top.goals.last().cloned() else {
                let frame = self.stack.pop().expect("frame");
                let answer = restrict_answer(&frame.theta, &self.query_vars);
                if self.seen.insert(answer.clone()) {
                    self.emitted += 1;
                    return Some(answer);
                }
                continue;
            };
            if top.next_candidate == 0 {
                // a goal identical to one of its ancestors cannot have a
                // shorter proof than that ancestor; prune it
                let current = top.theta.apply(&goal.prop);
                if goal.ancestry.contains(&current, &top.theta) {
                    self.stack.pop();
                    continue;
                }
            }
            let mut child = None;
            while child.is_none() {
                let k = self.stack.last().expect("frame").next_candidate;
                if k >= self.candidates() {
                    break;
                }
                self.stack.last_mut().expect("frame").next_candidate = k + 1;
                child = self.resolve(k);
            }
            match child {
                Some(f) => self.stack.push(f),
                None => {
                    self.stack.pop();
                }
            }
        }
    }
}

fn restrict_answer(theta: &Substitution, vars: &[String]) -> Substitution {
    Substitution::from_pairs(vars.iter().map(|v| (v.clone(), theta.apply_term(&Term::Variable(v.clone())))))
}

/// Proves the conjunction `goal` from the facts and logic clauses of `kb`.
///
/// Each answer binds the goal's variables; applying it to the goal gives a
/// logical consequence of the knowledge base. Duplicate answers are dropped.
pub fn prove<'a>(goal: &[Proposition], kb: &'a KnowledgeBase, cfg: &ProofConfig) -> AnswerStream<'a> {
    let mut query_vars: Vec<String> = Vec::new();
    for p in goal {
        for v in p.variables() {
            if !query_vars.iter().any(|q| q == v) {
                query_vars.push(v.to_string());
            }
        }
    }
    let root = Rc::new(Ancestry::Root);
    let goals =
        goal.iter().rev().map(|p| Rc::new(Goal { prop: p.clone(), depth: 1, ancestry: root.clone() })).collect();
    AnswerStream {
        facts: &kb.facts,
        clauses: kb.logic_clauses().collect(),
        query_vars,
        stack: vec![Frame { goals, theta: Substitution::new(), renames: 0, next_candidate: 0 }],
        seen: BTreeSet::new(),
        emitted: 0,
        cfg: cfg.clone(),
        depth_limited: false,
    }
}

/// Ground consequences of the knowledge base reachable in at most `bound`
/// rounds of bottom-up rule application.
pub fn derivable_facts(kb: &KnowledgeBase, bound: usize) -> BTreeSet<Proposition> {
    let mut known: BTreeSet<Proposition> = kb.facts.iter().cloned().collect();
    let clauses: Vec<_> = kb.logic_clauses().collect();
    for _ in 0..bound {
        let mut added = Vec::new();
        for (head, body) in &clauses {
            for theta in body_matches(body, &known) {
                let h = theta.apply(head);
                if h.is_ground() && !known.contains(&h) {
                    added.push(h);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        known.extend(added);
    }
    known
}

/// All substitutions that map every body atom onto a known fact.
fn body_matches(body: &[Proposition], known: &BTreeSet<Proposition>) -> Vec<Substitution> {
    // index by relation so joins only scan plausible facts
    let mut by_rel: BTreeMap<&str, Vec<&Proposition>> = BTreeMap::new();
    for f in known {
        by_rel.entry(f.relation.as_str()).or_default().push(f);
    }
    let mut partial = vec![Substitution::new()];
    for atom in body {
        let facts = by_rel.get(atom.relation.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        partial = partial.iter().flat_map(|theta| facts.iter().filter_map(move |f| unify(atom, f, theta))).collect();
        if partial.is_empty() {
            break;
        }
    }
    partial
}
