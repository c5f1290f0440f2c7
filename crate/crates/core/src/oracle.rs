//! Brute-force reference solvers. They enumerate the full joint state space
//! and, for decisions, every deterministic policy. Exponential by design;
//! used to check the transformation-based evaluator on small diagrams.

use std::collections::BTreeMap;

use crate::diagram::{config_index, DecisionRule, InfluenceDiagram, Node, NodeId, NodeKind, Policy};
use crate::kb::Distribution;

/// Largest joint state space the oracle will enumerate.
pub const MAX_JOINT_ENTRIES: usize = 1_000_000;

/// Largest number of (policy, joint state) pairs visited by [`oracle_policy`].
pub const MAX_POLICY_WORK: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("joint state space has {0} entries, above the limit of {MAX_JOINT_ENTRIES}")]
    TooLarge(usize),
    #[error("policy search would visit {0} states, above the limit of {MAX_POLICY_WORK}")]
    TooManyPolicies(usize),
    #[error("decision {0} has no rule in the policy")]
    MissingRule(NodeId),
    #[error("node {0} is not a chance node")]
    NotChance(NodeId),
    #[error("the diagram has no value node")]
    NoValueNode,
}

/// Probability of every joint state of the chance and decision nodes,
/// row-major over `nodes` (last node fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    pub nodes: Vec<NodeId>,
    pub radices: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointTable {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal over the nodes in `keep`, in the order given.
    pub fn marginal(&self, keep: &[NodeId]) -> Vec<f64> {
        let pos: Vec<usize> =
            keep.iter().map(|k| self.nodes.iter().position(|n| n == k).expect("node in joint")).collect();
        let rad: Vec<usize> = pos.iter().map(|&p| self.radices[p]).collect();
        let mut out = vec![0.0; rad.iter().product()];
        let mut state = vec![0; self.nodes.len()];
        for &p in &self.probs {
            let sub: Vec<usize> = pos.iter().map(|&i| state[i]).collect();
            out[config_index(&rad, &sub)] += p;
            advance(&mut state, &self.radices);
        }
        out
    }
}

/// Odometer increment, rightmost fastest. Returns false after wrapping.
fn advance(state: &mut [usize], radices: &[usize]) -> bool {
    for i in (0..state.len()).rev() {
        state[i] += 1;
        if state[i] < radices[i] {
            return true;
        }
        state[i] = 0;
    }
    false
}

fn joint_size(d: &InfluenceDiagram, nodes: &[NodeId]) -> Result<usize, OracleError> {
    let mut size = 1usize;
    for &n in nodes {
        size = size.saturating_mul(d.state_count(n));
    }
    if size > MAX_JOINT_ENTRIES {
        Err(OracleError::TooLarge(size))
    } else {
        Ok(size)
    }
}

fn parent_row(d: &InfluenceDiagram, n: &Node, index: &BTreeMap<NodeId, usize>, state: &[usize]) -> usize {
    let cfg: Vec<usize> = n.parents.iter().map(|p| state[index[p]]).collect();
    config_index(&d.radices(&n.parents), &cfg)
}

/// Probability of one joint state: product of chance entries, times 1 or 0
/// for each decision depending on whether the policy picks its state.
fn state_prob(
    d: &InfluenceDiagram,
    nodes: &[&Node],
    index: &BTreeMap<NodeId, usize>,
    state: &[usize],
    policy: Option<&Policy>,
) -> Result<f64, OracleError> {
    let mut p = 1.0;
    for (k, n) in nodes.iter().enumerate() {
        let row = parent_row(d, n, index, state);
        match &n.kind {
            NodeKind::Chance(t) => p *= t[row * n.states.len() + state[k]],
            NodeKind::Decision => {
                let rule = policy.and_then(|pol| pol.rules.get(&n.id)).ok_or(OracleError::MissingRule(n.id))?;
                if rule.choices[row] != state[k] {
                    return Ok(0.0);
                }
            }
            NodeKind::Value(_) => unreachable!("value node excluded"),
        }
        if p == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(p)
}

fn non_value(d: &InfluenceDiagram) -> Vec<NodeId> {
    d.nodes().filter(|n| !n.is_value()).map(|n| n.id).collect()
}

/// Joint distribution of all chance and decision nodes, decisions fixed by
/// `policy`. Node order is creation order.
pub fn enumerate_joint(d: &InfluenceDiagram, policy: Option<&Policy>) -> Result<JointTable, OracleError> {
    let ids = non_value(d);
    let size = joint_size(d, &ids)?;
    let nodes: Vec<&Node> = ids.iter().map(|&i| d.node(i).expect("node")).collect();
    let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let radices = d.radices(&ids);
    let mut probs = Vec::with_capacity(size);
    let mut state = vec![0; ids.len()];
    loop {
        probs.push(state_prob(d, &nodes, &index, &state, policy)?);
        if !advance(&mut state, &radices) {
            break;
        }
    }
    Ok(JointTable { nodes: ids, radices, probs })
}

/// Marginal of `query` from the full joint.
pub fn oracle_distribution(d: &InfluenceDiagram, query: NodeId) -> Result<Distribution, OracleError> {
    let q = d.node(query).filter(|n| n.is_chance()).ok_or(OracleError::NotChance(query))?;
    let joint = enumerate_joint(d, None)?;
    Ok(Distribution::from_parts(q.label.outcomes(), joint.marginal(&[query])))
}

/// Expected value of the value node under `policy`.
pub fn expected_value(d: &InfluenceDiagram, policy: &Policy) -> Result<f64, OracleError> {
    let v = d.node(d.value_node().ok_or(OracleError::NoValueNode)?).expect("value node");
    let ids = non_value(d);
    joint_size(d, &ids)?;
    let nodes: Vec<&Node> = ids.iter().map(|&i| d.node(i).expect("node")).collect();
    let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let radices = d.radices(&ids);
    let mut state = vec![0; ids.len()];
    let mut eu = 0.0;
    loop {
        let p = state_prob(d, &nodes, &index, &state, Some(policy))?;
        if p != 0.0 {
            eu += p * v.table().expect("value table")[parent_row(d, v, &index, &state)];
        }
        if !advance(&mut state, &radices) {
            break;
        }
    }
    Ok(eu)
}

/// Best deterministic policy by exhaustive search. Policies are visited in
/// odometer order over (decision in creation order, parent configuration)
/// and only a strictly better one replaces the incumbent, so ties resolve
/// to the earliest alternatives.
pub fn oracle_policy(d: &InfluenceDiagram) -> Result<(Policy, f64), OracleError> {
    d.value_node().ok_or(OracleError::NoValueNode)?;
    let decisions: Vec<&Node> = d.nodes().filter(|n| n.is_decision()).collect();
    let size = joint_size(d, &non_value(d))?;
    let rows: Vec<usize> = decisions.iter().map(|n| d.radices(&n.parents).iter().product()).collect();
    if decisions.len() == 1 {
        return single_decision(d, decisions[0]);
    }
    // one odometer digit per (decision, row)
    let mut radices = Vec::new();
    for (n, &r) in decisions.iter().zip(&rows) {
        radices.extend(std::iter::repeat_n(n.states.len(), r));
    }
    let mut count = 1usize;
    for &r in &radices {
        count = count.saturating_mul(r);
    }
    let work = count.saturating_mul(size);
    if work > MAX_POLICY_WORK {
        return Err(OracleError::TooManyPolicies(work));
    }
    let build = |digits: &[usize]| {
        let mut policy = Policy::new();
        let mut at = 0;
        for (n, &r) in decisions.iter().zip(&rows) {
            policy
                .rules
                .insert(n.id, DecisionRule { parents: n.parents.clone(), choices: digits[at..at + r].to_vec() });
            at += r;
        }
        policy
    };
    let mut digits = vec![0; radices.len()];
    let mut best = (build(&digits), f64::NEG_INFINITY);
    loop {
        let policy = build(&digits);
        let eu = expected_value(d, &policy)?;
        if eu > best.1 {
            best = (policy, eu);
        }
        if !advance(&mut digits, &radices) {
            break;
        }
    }
    Ok(best)
}

/// With one decision the expected value separates over its parent
/// configurations, so each row is optimized on its own. Picking the first
/// best alternative per row gives the same answer as the odometer search.
fn single_decision(d: &InfluenceDiagram, dec: &Node) -> Result<(Policy, f64), OracleError> {
    let v = d.node(d.value_node().expect("value node")).expect("value node");
    let ids = non_value(d);
    let nodes: Vec<&Node> = ids.iter().map(|&i| d.node(i).expect("node")).collect();
    let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let radices = d.radices(&ids);
    let rows: usize = d.radices(&dec.parents).iter().product();
    let k = dec.states.len();
    let di = index[&dec.id];
    let mut m = vec![vec![0.0; k]; rows];
    let mut state = vec![0; ids.len()];
    loop {
        let mut p = 1.0;
        for (idx, n) in nodes.iter().enumerate() {
            if let NodeKind::Chance(t) = &n.kind {
                p *= t[parent_row(d, n, &index, &state) * n.states.len() + state[idx]];
            }
        }
        if p != 0.0 {
            let ctx = parent_row(d, dec, &index, &state);
            m[ctx][state[di]] += p * v.table().expect("value table")[parent_row(d, v, &index, &state)];
        }
        if !advance(&mut state, &radices) {
            break;
        }
    }
    let mut choices = Vec::with_capacity(rows);
    let mut eu = 0.0;
    for row in &m {
        let mut best = 0;
        for a in 1..k {
            if row[a] > row[best] {
                best = a;
            }
        }
        choices.push(best);
        eu += row[best];
    }
    let mut policy = Policy::new();
    policy.rules.insert(dec.id, DecisionRule { parents: dec.parents.clone(), choices });
    Ok((policy, eu))
}
