//! Exact solution of influence diagrams by graph transformations: barren
//! node removal, arc reversal (Bayes' rule), expectation of a chance node
//! into the value node, and maximization over a decision node.
//!
//! The solver repeatedly applies the cheapest available transformation:
//! barren removal first, then chance-into-value (fewest parents), then
//! decision removal (latest decision first), and only then arc reversals.
//! A reversal step commits to eliminating one chance node by reversing all
//! of its arcs into chance children, picking the node whose eventual parent
//! set is smallest.

use std::collections::BTreeMap;
use std::fmt;

use crate::diagram::{config_index, DecisionRule, InfluenceDiagram, Node, NodeId, NodeKind, Policy};
use crate::kb::Distribution;
use crate::term::cross_product;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} is not a chance node")]
    NotChance(NodeId),
    #[error("node {0} is not a decision node")]
    NotDecision(NodeId),
    #[error("there is no arc {0} -> {1}")]
    NoArc(NodeId, NodeId),
    #[error("another path leads from {0} to {1}")]
    AlternatePath(NodeId, NodeId),
    #[error("node {0} is the protected query node")]
    Protected(NodeId),
    #[error("node {0} still has successors")]
    NotBarren(NodeId),
    #[error("node {0} has successors other than the value node")]
    NotOnlyValue(NodeId),
    #[error("the value node depends on something decision {0} does not observe")]
    MissingInformation(NodeId),
    #[error("the diagram has no value node")]
    NoValueNode,
    #[error("distribution queries cannot contain decision or value nodes")]
    NotProbabilistic,
    #[error("no transformation applies; the diagram cannot be reduced")]
    Stuck,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operation {
    RemoveBarren(NodeId),
    /// Reverse `from -> to`; `zero_rows` contexts had probability zero and
    /// got a uniform conditional.
    Reverse {
        from: NodeId,
        to: NodeId,
        zero_rows: usize,
    },
    ChanceIntoValue(NodeId),
    RemoveDecision(NodeId),
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::RemoveBarren(n) => write!(f, "remove barren {n}"),
            Operation::Reverse { from, to, zero_rows: 0 } => write!(f, "reverse {from} -> {to}"),
            Operation::Reverse { from, to, zero_rows } => {
                write!(f, "reverse {from} -> {to} ({zero_rows} zero-probability rows set uniform)")
            }
            Operation::ChanceIntoValue(n) => write!(f, "expect {n} into value"),
            Operation::RemoveDecision(n) => write!(f, "maximize over {n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveResult {
    Distribution(Distribution),
    Decision { policy: Policy, expected_value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub result: SolveResult,
    pub operations: Vec<Operation>,
}

impl SolveReport {
    /// One transformation per line, naming nodes by label.
    pub fn render(&self, original: &InfluenceDiagram) -> String {
        let label = |n: &NodeId| original.node(*n).map(|x| x.label.to_string()).unwrap_or_default();
        let mut out = String::new();
        for op in &self.operations {
            let names = match op {
                Operation::Reverse { from, to, .. } => format!("{} -> {}", label(from), label(to)),
                Operation::RemoveBarren(n) | Operation::ChanceIntoValue(n) | Operation::RemoveDecision(n) => label(n),
            };
            out.push_str(&format!("{op}  % {names}\n"));
        }
        out
    }
}

fn node(d: &InfluenceDiagram, id: NodeId) -> Result<&Node, EvalError> {
    d.node(id).ok_or(EvalError::UnknownNode(id))
}

fn chance(d: &InfluenceDiagram, id: NodeId) -> Result<&Node, EvalError> {
    let n = node(d, id)?;
    if n.is_chance() {
        Ok(n)
    } else {
        Err(EvalError::NotChance(id))
    }
}

/// Table entry of `n` for the parent states in `assign` and own state `own`
/// (ignored for the value node).
fn entry(d: &InfluenceDiagram, n: &Node, assign: &BTreeMap<NodeId, usize>, own: usize) -> f64 {
    let cfg: Vec<usize> = n.parents.iter().map(|p| assign[p]).collect();
    let row = config_index(&d.radices(&n.parents), &cfg);
    match &n.kind {
        NodeKind::Chance(t) => t[row * n.states.len() + own],
        NodeKind::Value(t) => t[row],
        NodeKind::Decision => unreachable!("decisions have no table"),
    }
}

fn assignment(ids: &[NodeId], cfg: &[usize]) -> BTreeMap<NodeId, usize> {
    ids.iter().copied().zip(cfg.iter().copied()).collect()
}

fn union(first: &[NodeId], rest: &[NodeId]) -> Vec<NodeId> {
    let mut out = first.to_vec();
    for p in rest {
        if !out.contains(p) {
            out.push(*p);
        }
    }
    out
}

/// Reverses the arc `i -> j` between two chance nodes by Bayes' rule.
///
/// Afterwards `j` has parents `pa(j) \ {i}` followed by the new members of
/// `pa(i)`, and `i` has `pa(i)`, then the new members of `pa(j) \ {i}`, then
/// `j`. Returns the new diagram and the number of zero-probability contexts
/// whose conditional for `i` was set uniform.
pub fn reverse_arc(d: &InfluenceDiagram, i: NodeId, j: NodeId) -> Result<(InfluenceDiagram, usize), EvalError> {
    let ni = chance(d, i)?;
    let nj = chance(d, j)?;
    if !nj.parents.contains(&i) {
        return Err(EvalError::NoArc(i, j));
    }
    for c in d.successors(i) {
        if c != j && d.has_path(c, j) {
            return Err(EvalError::AlternatePath(i, j));
        }
    }
    let cj: Vec<NodeId> = nj.parents.iter().copied().filter(|&p| p != i).collect();
    let j_par = union(&cj, &ni.parents);
    let mut i_par = union(&ni.parents, &cj);
    i_par.push(j);
    let (ki, kj) = (ni.states.len(), nj.states.len());
    let i_rad: Vec<usize> = i_par.iter().map(|&p| if p == j { kj } else { d.state_count(p) }).collect();
    let i_rows: usize = i_rad.iter().product();

    let mut tj = Vec::new();
    let mut ti = vec![0.0; i_rows * ki];
    let mut zero_rows = 0;
    for cfg in cross_product(&d.radices(&j_par)) {
        let mut assign = assignment(&j_par, &cfg);
        let mut joint = vec![vec![0.0; kj]; ki];
        for (xi, row) in joint.iter_mut().enumerate() {
            assign.insert(i, xi);
            let pi = entry(d, ni, &assign, xi);
            for (xj, cell) in row.iter_mut().enumerate() {
                *cell = entry(d, nj, &assign, xj) * pi;
            }
        }
        assign.remove(&i);
        let marg: Vec<f64> = (0..kj).map(|xj| joint.iter().map(|r| r[xj]).sum()).collect();
        tj.extend_from_slice(&marg);
        for (xj, &m) in marg.iter().enumerate() {
            assign.insert(j, xj);
            let icfg: Vec<usize> = i_par.iter().map(|p| assign[p]).collect();
            let row = config_index(&i_rad, &icfg);
            if m > 0.0 {
                for xi in 0..ki {
                    ti[row * ki + xi] = joint[xi][xj] / m;
                }
            } else {
                zero_rows += 1;
                for xi in 0..ki {
                    ti[row * ki + xi] = 1.0 / ki as f64;
                }
            }
        }
    }
    let mut out = d.clone();
    out.put(Node::chance(j, nj.label.clone(), j_par, tj));
    out.put(Node::chance(i, ni.label.clone(), i_par, ti));
    Ok((out, zero_rows))
}

/// Deletes a chance or decision node without successors.
pub fn remove_barren(
    d: &InfluenceDiagram,
    n: NodeId,
    protected: Option<NodeId>,
) -> Result<InfluenceDiagram, EvalError> {
    let x = node(d, n)?;
    if protected == Some(n) {
        return Err(EvalError::Protected(n));
    }
    if x.is_value() {
        return Err(EvalError::NotChance(n));
    }
    if !d.successors(n).is_empty() {
        return Err(EvalError::NotBarren(n));
    }
    let mut out = d.clone();
    out.take(n);
    Ok(out)
}

/// Replaces the value table by its conditional expectation over chance
/// node `n`, whose only successor must be the value node.
pub fn remove_chance_into_value(d: &InfluenceDiagram, n: NodeId) -> Result<InfluenceDiagram, EvalError> {
    let v = d.value_node().ok_or(EvalError::NoValueNode)?;
    let x = chance(d, n)?;
    if d.successors(n) != [v] {
        return Err(EvalError::NotOnlyValue(n));
    }
    let vn = node(d, v)?;
    let rest: Vec<NodeId> = vn.parents.iter().copied().filter(|&p| p != n).collect();
    let parents = union(&rest, &x.parents);
    let mut table = Vec::new();
    for cfg in cross_product(&d.radices(&parents)) {
        let mut assign = assignment(&parents, &cfg);
        let mut sum = 0.0;
        for s in 0..x.states.len() {
            assign.insert(n, s);
            sum += entry(d, x, &assign, s) * entry(d, vn, &assign, 0);
        }
        table.push(sum);
    }
    let mut out = d.clone();
    out.take(n);
    out.put(Node::value(v, vn.label.clone(), parents, table));
    Ok(out)
}

/// Maximizes the value node over decision `n`. Every other parent of the
/// value node must be observed by `n`. Ties go to the first alternative.
pub fn remove_decision(d: &InfluenceDiagram, n: NodeId) -> Result<(InfluenceDiagram, DecisionRule), EvalError> {
    let v = d.value_node().ok_or(EvalError::NoValueNode)?;
    let x = node(d, n)?;
    if !x.is_decision() {
        return Err(EvalError::NotDecision(n));
    }
    if d.successors(n) != [v] {
        return Err(EvalError::NotOnlyValue(n));
    }
    let vn = node(d, v)?;
    if vn.parents.iter().any(|p| *p != n && !x.parents.contains(p)) {
        return Err(EvalError::MissingInformation(n));
    }
    let best = |assign: &mut BTreeMap<NodeId, usize>| -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..x.states.len() {
            assign.insert(n, a);
            let val = entry(d, vn, assign, 0);
            if val > best.1 {
                best = (a, val);
            }
        }
        best
    };
    let choices = cross_product(&d.radices(&x.parents))
        .into_iter()
        .map(|cfg| best(&mut assignment(&x.parents, &cfg)).0)
        .collect();
    let parents: Vec<NodeId> = vn.parents.iter().copied().filter(|&p| p != n).collect();
    let table =
        cross_product(&d.radices(&parents)).into_iter().map(|cfg| best(&mut assignment(&parents, &cfg)).1).collect();
    let mut out = d.clone();
    out.take(n);
    out.put(Node::value(v, vn.label.clone(), parents, table));
    Ok((out, DecisionRule { parents: x.parents.clone(), choices }))
}

/// Applies one logged operation.
fn apply(
    d: &InfluenceDiagram,
    op: &Operation,
    protected: Option<NodeId>,
    policy: &mut Policy,
) -> Result<InfluenceDiagram, EvalError> {
    match op {
        Operation::RemoveBarren(n) => {
            let x = node(d, *n)?;
            if x.is_decision() {
                // an ignored decision: any rule is optimal, take the first
                let rows: usize = d.radices(&x.parents).iter().product();
                policy.rules.insert(*n, DecisionRule { parents: x.parents.clone(), choices: vec![0; rows] });
            }
            remove_barren(d, *n, protected)
        }
        Operation::Reverse { from, to, .. } => reverse_arc(d, *from, *to).map(|(d, _)| d),
        Operation::ChanceIntoValue(n) => remove_chance_into_value(d, *n),
        Operation::RemoveDecision(n) => {
            let (out, rule) = remove_decision(d, *n)?;
            policy.rules.insert(*n, rule);
            Ok(out)
        }
    }
}

/// Parent set `n` would end up with after all its chance-child arcs were
/// reversed, counted for the elimination heuristic.
fn elimination_cost(d: &InfluenceDiagram, n: NodeId) -> usize {
    let mut set: Vec<NodeId> = d.predecessors(n).to_vec();
    for c in d.successors(n) {
        if d.node(c).is_some_and(Node::is_chance) {
            set = union(&set, d.predecessors(c));
            if !set.contains(&c) {
                set.push(c);
            }
        }
    }
    set.retain(|&p| p != n);
    set.len()
}

/// Picks the next batch of operations, or `None` when the diagram is fully
/// reduced.
fn next_ops(d: &InfluenceDiagram, protected: Option<NodeId>) -> Result<Option<Vec<Operation>>, EvalError> {
    let value = d.value_node();
    let done = match (protected, value) {
        (Some(q), _) => d.len() == 1 && d.predecessors(q).is_empty(),
        (None, Some(_)) => d.len() == 1,
        (None, None) => d.is_empty(),
    };
    if done {
        return Ok(None);
    }
    // barren nodes
    if let Some(n) = d.nodes().find(|n| !n.is_value() && Some(n.id) != protected && d.successors(n.id).is_empty()) {
        return Ok(Some(vec![Operation::RemoveBarren(n.id)]));
    }
    if let Some(v) = value {
        let into_value =
            d.nodes().filter(|n| n.is_chance() && d.successors(n.id) == [v]).min_by_key(|n| (n.parents.len(), n.id));
        if let Some(n) = into_value {
            return Ok(Some(vec![Operation::ChanceIntoValue(n.id)]));
        }
        let order = d.topological_order();
        let latest =
            order.iter().rev().find(|&&n| d.node(n).is_some_and(Node::is_decision) && remove_decision(d, n).is_ok());
        if let Some(&n) = latest {
            return Ok(Some(vec![Operation::RemoveDecision(n)]));
        }
    }
    // eliminate one chance node by turning its chance children into parents;
    // nodes observed by a decision must wait for that decision
    let candidate = d
        .nodes()
        .filter(|n| n.is_chance() && Some(n.id) != protected)
        .filter(|n| {
            let succ = d.successors(n.id);
            succ.iter().all(|&s| !d.node(s).is_some_and(Node::is_decision))
                && succ.iter().any(|&s| d.node(s).is_some_and(Node::is_chance))
        })
        .min_by_key(|n| (elimination_cost(d, n.id), n.id));
    let Some(n) = candidate else {
        return Err(EvalError::Stuck);
    };
    let order = d.topological_order();
    let children: Vec<NodeId> = order
        .into_iter()
        .filter(|&c| d.predecessors(c).contains(&n.id) && d.node(c).is_some_and(Node::is_chance))
        .collect();
    Ok(Some(children.into_iter().map(|c| Operation::Reverse { from: n.id, to: c, zero_rows: 0 }).collect()))
}

fn reduce(
    d: &InfluenceDiagram,
    protected: Option<NodeId>,
) -> Result<(InfluenceDiagram, Policy, Vec<Operation>), EvalError> {
    let mut d = d.clone();
    let mut policy = Policy::new();
    let mut log = Vec::new();
    while let Some(ops) = next_ops(&d, protected)? {
        for mut op in ops {
            if let Operation::Reverse { from, to, zero_rows } = &mut op {
                let (next, z) = reverse_arc(&d, *from, *to)?;
                *zero_rows = z;
                d = next;
            } else {
                d = apply(&d, &op, protected, &mut policy)?;
            }
            debug_assert!(d.validate().is_ok(), "{op} broke the diagram");
            log.push(op);
        }
    }
    Ok((d, policy, log))
}

/// Marginal distribution of `query` by eliminating every other node.
pub fn solve_distribution(d: &InfluenceDiagram, query: NodeId) -> Result<(Distribution, SolveReport), EvalError> {
    let q = chance(d, query)?;
    if d.nodes().any(|n| !n.is_chance()) {
        return Err(EvalError::NotProbabilistic);
    }
    let (reduced, _, operations) = reduce(d, Some(query))?;
    let probs = reduced.node(query).and_then(Node::table).ok_or(EvalError::Stuck)?.to_vec();
    let dist = Distribution::from_parts(q.label.outcomes(), probs);
    Ok((dist.clone(), SolveReport { result: SolveResult::Distribution(dist), operations }))
}

/// Optimal policy and its expected value.
pub fn solve_decision(d: &InfluenceDiagram) -> Result<(Policy, f64, SolveReport), EvalError> {
    let v = d.value_node().ok_or(EvalError::NoValueNode)?;
    let (reduced, policy, operations) = reduce(d, None)?;
    let eu = reduced.node(v).and_then(Node::table).ok_or(EvalError::Stuck)?[0];
    Ok((policy.clone(), eu, SolveReport { result: SolveResult::Decision { policy, expected_value: eu }, operations }))
}

/// Re-applies a logged operation sequence and reads off the result.
pub fn replay_operations(
    d: &InfluenceDiagram,
    query: Option<NodeId>,
    ops: &[Operation],
) -> Result<SolveResult, EvalError> {
    let mut cur = d.clone();
    let mut policy = Policy::new();
    for op in ops {
        cur = apply(&cur, op, query, &mut policy)?;
    }
    match (query, d.value_node()) {
        (Some(q), _) => {
            let probs = cur.node(q).and_then(Node::table).ok_or(EvalError::Stuck)?.to_vec();
            Ok(SolveResult::Distribution(Distribution::from_parts(node(d, q)?.label.outcomes(), probs)))
        }
        (None, Some(v)) => Ok(SolveResult::Decision {
            policy,
            expected_value: cur.node(v).and_then(Node::table).ok_or(EvalError::Stuck)?[0],
        }),
        (None, None) => Err(EvalError::NoValueNode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Proposition, Term};

    fn prop(name: &str, states: &[&str]) -> Proposition {
        Proposition::new(name, vec![Term::alts(states.iter().copied())])
    }

    fn payoff() -> Proposition {
        Proposition::new("payoff", vec![Term::var("v")])
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    fn two(pi: Vec<f64>, pj: Vec<f64>) -> InfluenceDiagram {
        InfluenceDiagram::new()
            .add_node(Node::chance(NodeId(0), prop("i", &["a", "b"]), vec![], pi))
            .unwrap()
            .add_node(Node::chance(NodeId(1), prop("j", &["u", "v"]), vec![NodeId(0)], pj))
            .unwrap()
    }

    #[test]
    fn reversal_of_independent_pair() {
        let d = two(vec![0.5, 0.5], vec![0.3, 0.7, 0.3, 0.7]);
        let (r, zero) = reverse_arc(&d, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(zero, 0);
        assert!(close(r.node(NodeId(1)).unwrap().table().unwrap(), &[0.3, 0.7]));
        assert!(close(r.node(NodeId(0)).unwrap().table().unwrap(), &[0.5, 0.5, 0.5, 0.5]));
        assert_eq!(r.predecessors(NodeId(0)), &[NodeId(1)]);
        assert!(r.predecessors(NodeId(1)).is_empty());
    }

    #[test]
    fn reversal_applies_bayes_rule() {
        // weather prior, forecast given weather
        let d = InfluenceDiagram::new()
            .add_node(Node::chance(NodeId(0), prop("w", &["fair", "cloudy", "rainy"]), vec![], vec![0.7, 0.2, 0.1]))
            .unwrap()
            .add_node(Node::chance(
                NodeId(1),
                prop("f", &["good", "bad"]),
                vec![NodeId(0)],
                vec![0.8, 0.2, 0.5, 0.5, 0.1, 0.9],
            ))
            .unwrap();
        let (r, _) = reverse_arc(&d, NodeId(0), NodeId(1)).unwrap();
        let good = 0.7 * 0.8 + 0.2 * 0.5 + 0.1 * 0.1;
        assert!(close(r.node(NodeId(1)).unwrap().table().unwrap(), &[good, 1.0 - good]));
        let post_good = [0.7 * 0.8 / good, 0.2 * 0.5 / good, 0.1 * 0.1 / good];
        assert!(close(&r.node(NodeId(0)).unwrap().table().unwrap()[..3], &post_good));
    }

    #[test]
    fn zero_denominator_gives_uniform_row() {
        let d = two(vec![1.0, 0.0], vec![1.0, 0.0, 0.5, 0.5]);
        let (r, zero) = reverse_arc(&d, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(zero, 1);
        assert!(close(r.node(NodeId(0)).unwrap().table().unwrap(), &[1.0, 0.0, 0.5, 0.5]));
    }

    #[test]
    fn reversal_with_alternate_path_rejected() {
        let d = two(vec![0.5, 0.5], vec![0.3, 0.7, 0.3, 0.7])
            .add_node(Node::chance(NodeId(2), prop("k", &["y", "n"]), vec![NodeId(0)], vec![0.5; 4]))
            .unwrap()
            .add_arc(NodeId(2), NodeId(1))
            .unwrap();
        assert_eq!(reverse_arc(&d, NodeId(0), NodeId(1)), Err(EvalError::AlternatePath(NodeId(0), NodeId(1))));
    }

    #[test]
    fn barren_removal() {
        let d = two(vec![0.5, 0.5], vec![0.3, 0.7, 0.3, 0.7]);
        let r = remove_barren(&d, NodeId(1), None).unwrap();
        assert_eq!(r.node(NodeId(0)), d.node(NodeId(0)));
        assert_eq!(remove_barren(&d, NodeId(1), Some(NodeId(1))), Err(EvalError::Protected(NodeId(1))));
        assert_eq!(remove_barren(&d, NodeId(0), None), Err(EvalError::NotBarren(NodeId(0))));
    }

    fn weather_value(values: Vec<f64>) -> InfluenceDiagram {
        InfluenceDiagram::new()
            .add_node(Node::chance(NodeId(0), prop("w", &["fair", "cloudy", "rainy"]), vec![], vec![0.7, 0.2, 0.1]))
            .unwrap()
            .add_node(Node::value(NodeId(1), payoff(), vec![NodeId(0)], values))
            .unwrap()
    }

    #[test]
    fn expectation_into_value() {
        let r = remove_chance_into_value(&weather_value(vec![100.0, 40.0, 0.0]), NodeId(0)).unwrap();
        assert!((r.node(NodeId(1)).unwrap().table().unwrap()[0] - 78.0).abs() < 1e-12);
        let c = remove_chance_into_value(&weather_value(vec![5.0; 3]), NodeId(0)).unwrap();
        assert!((c.node(NodeId(1)).unwrap().table().unwrap()[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_needs_value_as_only_successor() {
        let d = weather_value(vec![100.0, 40.0, 0.0])
            .add_node(Node::chance(NodeId(2), prop("f", &["good", "bad"]), vec![NodeId(0)], vec![0.5; 6]))
            .unwrap();
        assert_eq!(remove_chance_into_value(&d, NodeId(0)), Err(EvalError::NotOnlyValue(NodeId(0))));
    }

    #[test]
    fn decision_ties_pick_first_alternative() {
        let d = InfluenceDiagram::new()
            .add_node(Node::decision(NodeId(0), prop("act", &["go", "stay", "wait"]), vec![]))
            .unwrap()
            .add_node(Node::value(NodeId(1), payoff(), vec![NodeId(0)], vec![3.0, 3.0, 3.0]))
            .unwrap();
        let (r, rule) = remove_decision(&d, NodeId(0)).unwrap();
        assert_eq!(rule.choices, [0]);
        assert_eq!(r.node(NodeId(1)).unwrap().table().unwrap(), &[3.0]);
    }

    #[test]
    fn decision_with_chance_successor_rejected() {
        let d = InfluenceDiagram::new()
            .add_node(Node::decision(NodeId(0), prop("act", &["go", "stay"]), vec![]))
            .unwrap()
            .add_node(Node::chance(NodeId(1), prop("w", &["y", "n"]), vec![NodeId(0)], vec![0.5; 4]))
            .unwrap()
            .add_node(Node::value(NodeId(2), payoff(), vec![NodeId(0), NodeId(1)], vec![1.0; 4]))
            .unwrap();
        assert_eq!(remove_decision(&d, NodeId(0)).unwrap_err(), EvalError::NotOnlyValue(NodeId(0)));
    }

    #[test]
    fn distribution_of_single_prior_and_chain() {
        let single = InfluenceDiagram::new()
            .add_node(Node::chance(NodeId(0), prop("w", &["fair", "cloudy", "rainy"]), vec![], vec![0.7, 0.2, 0.1]))
            .unwrap();
        let (dist, report) = solve_distribution(&single, NodeId(0)).unwrap();
        assert_eq!(dist.probs, vec![0.7, 0.2, 0.1]);
        assert!(report.operations.is_empty());

        let chain = two(vec![0.6, 0.4], vec![0.9, 0.1, 0.2, 0.8]);
        let (dist, report) = solve_distribution(&chain, NodeId(1)).unwrap();
        assert!(close(&dist.probs, &[0.6 * 0.9 + 0.4 * 0.2, 0.6 * 0.1 + 0.4 * 0.8]));
        assert_eq!(replay_operations(&chain, Some(NodeId(1)), &report.operations).unwrap(), report.result);
    }

    #[test]
    fn decision_without_chance_is_argmax() {
        let d = InfluenceDiagram::new()
            .add_node(Node::decision(NodeId(0), prop("act", &["go", "stay", "wait"]), vec![]))
            .unwrap()
            .add_node(Node::value(NodeId(1), payoff(), vec![NodeId(0)], vec![1.0, 7.0, 3.0]))
            .unwrap();
        let (policy, eu, _) = solve_decision(&d).unwrap();
        assert_eq!(policy.rules[&NodeId(0)].choices, [1]);
        assert_eq!(eu, 7.0);
    }

    #[test]
    fn uninformed_decision_maximizes_expectation() {
        // act without observing the weather
        let d = weather_value(vec![0.0; 3])
            .add_node(Node::decision(NodeId(2), prop("act", &["out", "in"]), vec![]))
            .unwrap();
        let d = {
            let mut d = d;
            let v = d.node(NodeId(1)).unwrap().clone();
            d.put(Node::value(v.id, v.label, vec![NodeId(0), NodeId(2)], vec![100.0, 50.0, 40.0, 50.0, 0.0, 50.0]));
            d
        };
        let (policy, eu, report) = solve_decision(&d).unwrap();
        // out: 0.7*100 + 0.2*40 = 78 beats in: 50
        assert_eq!(policy.rules[&NodeId(2)].choices, [0]);
        assert!((eu - 78.0).abs() < 1e-12);
        assert_eq!(replay_operations(&d, None, &report.operations).unwrap(), report.result);
    }
}
