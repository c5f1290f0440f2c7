//! Generators and independent reference implementations shared by the
//! integration tests of both crates.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use ikb_core::{InfluenceDiagram, KnowledgeBase, Node, NodeId, Proposition, Term};
use rand::seq::SliceRandom;
use rand::Rng;

/// Strictly positive distribution over `k` outcomes.
pub fn positive_dist<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn label(name: &str, k: usize) -> Proposition {
    let states: Vec<String> = (0..k).map(|i| format!("s{i}")).collect();
    Proposition::new(name, vec![Term::alts(states)])
}

pub struct DiagramSpec {
    pub max_chance: usize,
    pub max_parents: usize,
    pub decision: bool,
}

/// Random diagram: chance nodes with 2–3 outcomes and strictly positive
/// tables, optionally one decision with 2–4 alternatives, and a value node
/// when a decision is present. The decision always feeds the value node.
pub fn random_diagram<R: Rng>(rng: &mut R, spec: &DiagramSpec) -> InfluenceDiagram {
    let n_chance = rng.gen_range(1..=spec.max_chance);
    let decision_at = spec.decision.then(|| rng.gen_range(0..=n_chance));
    let mut d = InfluenceDiagram::new();
    let mut created: Vec<NodeId> = Vec::new();
    let total = n_chance + usize::from(spec.decision);
    for i in 0..total {
        let id = NodeId(i);
        let mut pool = created.clone();
        pool.shuffle(rng);
        let n_par = rng.gen_range(0..=spec.max_parents.min(pool.len()));
        let mut parents: Vec<NodeId> = pool.into_iter().take(n_par).collect();
        if decision_at == Some(i) {
            // observations are chance nodes only
            parents.retain(|p| d.node(*p).is_some_and(|n| n.is_chance()));
            let k = rng.gen_range(2..=4);
            d = d.add_node(Node::decision(id, label(&format!("d{i}"), k), parents)).unwrap();
        } else {
            let k = rng.gen_range(2..=3);
            let rows: usize = d.radices(&parents).iter().product();
            let table: Vec<f64> = (0..rows).flat_map(|_| positive_dist(rng, k)).collect();
            d = d.add_node(Node::chance(id, label(&format!("c{i}"), k), parents, table)).unwrap();
        }
        created.push(id);
    }
    if let Some(di) = decision_at {
        let mut parents: Vec<NodeId> = created.iter().copied().filter(|&n| n != NodeId(di)).collect();
        parents.shuffle(rng);
        let n_par = rng.gen_range(0..=spec.max_parents.min(parents.len()));
        parents.truncate(n_par);
        parents.push(NodeId(di));
        let rows: usize = d.radices(&parents).iter().product();
        let values: Vec<f64> = (0..rows).map(|_| rng.gen_range(0.0..100.0)).collect();
        let v = Proposition::new("u", vec![Term::var("v")]);
        d = d.add_node(Node::value(NodeId(total), v, parents, values)).unwrap();
    }
    d.validate().unwrap();
    d
}

/// Arcs `i -> j` between chance nodes with no other directed path.
pub fn reversible_arcs(d: &InfluenceDiagram) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for n in d.nodes().filter(|n| n.is_chance()) {
        for &p in &n.parents {
            if !d.node(p).unwrap().is_chance() {
                continue;
            }
            let alt = d.successors(p).into_iter().any(|c| c != n.id && d.has_path(c, n.id));
            if !alt {
                out.push((p, n.id));
            }
        }
    }
    out
}

/// Joint probability of every state of `d`'s chance nodes, computed
/// directly from the chain rule. Keys are states in node-id order.
pub fn chain_rule_joint(d: &InfluenceDiagram) -> BTreeMap<Vec<usize>, f64> {
    let ids = d.ids();
    let radices = d.radices(&ids);
    let pos: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let mut out = BTreeMap::new();
    let total: usize = radices.iter().product();
    for mut code in 0..total {
        let mut state = vec![0; ids.len()];
        for k in (0..ids.len()).rev() {
            state[k] = code % radices[k];
            code /= radices[k];
        }
        let mut p = 1.0;
        for (k, id) in ids.iter().enumerate() {
            let n = d.node(*id).unwrap();
            let mut row = 0;
            for par in &n.parents {
                row = row * d.state_count(*par) + state[pos[par]];
            }
            p *= n.table().unwrap()[row * n.states.len() + state[k]];
        }
        out.insert(state, p);
    }
    out
}

// ---------------------------------------------------------------------------
// Herbrand fixpoint oracle for pure Horn knowledge bases

type Atom = (String, Vec<String>);

fn ground_atom(p: &Proposition) -> Atom {
    let args = p
        .args
        .iter()
        .map(|t| match t {
            Term::Constant(c) => c.clone(),
            other => panic!("fact argument {other} is not a constant"),
        })
        .collect();
    (p.relation.clone(), args)
}

/// Extends `env` so that pattern `p` matches ground atom `a`.
fn match_atom(p: &Proposition, a: &Atom, env: &BTreeMap<String, String>) -> Option<BTreeMap<String, String>> {
    if p.relation != a.0 || p.args.len() != a.1.len() {
        return None;
    }
    let mut env = env.clone();
    for (t, c) in p.args.iter().zip(&a.1) {
        match t {
            Term::Constant(k) if k == c => {}
            Term::Variable(v) => match env.get(v) {
                Some(bound) if bound != c => return None,
                Some(_) => {}
                None => {
                    env.insert(v.clone(), c.clone());
                }
            },
            _ => return None,
        }
    }
    Some(env)
}

fn solve_body(
    body: &[Proposition],
    facts: &BTreeSet<Atom>,
    env: BTreeMap<String, String>,
    out: &mut Vec<BTreeMap<String, String>>,
) {
    match body.split_first() {
        None => out.push(env),
        Some((first, rest)) => {
            for a in facts {
                if let Some(e) = match_atom(first, a, &env) {
                    solve_body(rest, facts, e, out);
                }
            }
        }
    }
}

fn instantiate(p: &Proposition, env: &BTreeMap<String, String>) -> Option<Atom> {
    let args = p
        .args
        .iter()
        .map(|t| match t {
            Term::Constant(c) => Some(c.clone()),
            Term::Variable(v) => env.get(v).cloned(),
            Term::AltSet(_) => None,
        })
        .collect::<Option<Vec<_>>>()?;
    Some((p.relation.clone(), args))
}

/// Least Herbrand model by naive iteration. Range-restricted clauses only.
pub fn herbrand_model(kb: &KnowledgeBase) -> BTreeSet<Atom> {
    let mut facts: BTreeSet<Atom> = kb.facts.iter().map(ground_atom).collect();
    loop {
        let mut new = Vec::new();
        for (head, body) in kb.logic_clauses() {
            let mut envs = Vec::new();
            solve_body(body, &facts, BTreeMap::new(), &mut envs);
            for env in envs {
                let atom = instantiate(head, &env).expect("range-restricted clause");
                if !facts.contains(&atom) {
                    new.push(atom);
                }
            }
        }
        if new.is_empty() {
            return facts;
        }
        facts.extend(new);
    }
}

/// Answers to a conjunctive query against the least model, restricted to
/// the query's variables.
pub fn herbrand_answers(kb: &KnowledgeBase, goals: &[Proposition]) -> BTreeSet<BTreeMap<String, String>> {
    let model = herbrand_model(kb);
    let mut envs = Vec::new();
    solve_body(goals, &model, BTreeMap::new(), &mut envs);
    envs.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Random knowledge-base text

/// A syntactically and semantically valid knowledge base with `decls`
/// influence and fact declarations, written the way a person would.
pub fn random_kb_text<R: Rng>(rng: &mut R, decls: usize) -> String {
    let mut out = String::new();
    let n_rel = rng.gen_range(2..=4);
    // restricted relations: (rK <domain> c) with a domain at position 0
    let mut domains: Vec<Vec<String>> = Vec::new();
    for r in 0..n_rel {
        let k = rng.gen_range(2..=3);
        let vals: Vec<String> = (0..k).map(|i| format!("v{r}x{i}")).collect();
        let _ = writeln!(out, "domain r{r}/2 @1 {{{}}}.", vals.join(", "));
        domains.push(vals);
    }
    let consts = ["ka", "kb", "kc"];
    let mut var = 0;
    let mut fresh = || {
        var += 1;
        format!("?q{var}")
    };
    for _ in 0..decls {
        match rng.gen_range(0..7) {
            0 => {
                let _ = writeln!(out, "fact (g{} {}).", rng.gen_range(0..3), consts.choose(rng).unwrap());
            }
            1 => {
                let x = fresh();
                let _ = writeln!(
                    out,
                    "logic (h{} {x}) <- (g{} {x}), (g{} {}).",
                    rng.gen_range(0..3),
                    rng.gen_range(0..3),
                    rng.gen_range(0..3),
                    consts.choose(rng).unwrap()
                );
            }
            2 => {
                let r = rng.gen_range(0..n_rel);
                let p = positive_dist(rng, domains[r].len());
                let entries: Vec<String> = domains[r].iter().zip(&p).map(|(v, p)| format!("{v}: {p}")).collect();
                let _ = writeln!(
                    out,
                    "prior (r{r} {} {}) = {{{}}}.",
                    fresh(),
                    consts.choose(rng).unwrap(),
                    entries.join(", ")
                );
            }
            3 | 4 => {
                let r = rng.gen_range(0..n_rel);
                let conds: Vec<usize> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..n_rel)).collect();
                let mut parts: Vec<String> =
                    conds.iter().map(|c| format!("(r{c} {} {})", fresh(), consts.choose(rng).unwrap())).collect();
                if rng.gen_bool(0.3) {
                    parts.push(format!("(g{} {})", rng.gen_range(0..3), consts.choose(rng).unwrap()));
                }
                let radices: Vec<usize> = conds.iter().map(|&c| domains[c].len()).collect();
                let mut rows = String::new();
                for cfg in odometer(&radices) {
                    let keys: Vec<&str> = cfg.iter().zip(&conds).map(|(&s, &c)| domains[c][s].as_str()).collect();
                    let probs: Vec<String> =
                        positive_dist(rng, domains[r].len()).iter().map(|p| p.to_string()).collect();
                    let _ = writeln!(rows, "  {}: {};", keys.join(", "), probs.join(", "));
                }
                let given = if parts.is_empty() { String::new() } else { format!(" |p {}", parts.join(", ")) };
                let _ = writeln!(out, "prob (r{r} {} {}){given} = {{\n{rows}}}.", fresh(), consts.choose(rng).unwrap());
            }
            5 => {
                let r = rng.gen_range(0..n_rel);
                let c = rng.gen_range(0..n_rel);
                let _ =
                    writeln!(out, "info (r{r} {} kd) |i (r{c} {} {}).", fresh(), fresh(), consts.choose(rng).unwrap());
            }
            _ => {
                let conds: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..n_rel)).collect();
                let parts: Vec<String> = conds.iter().map(|c| format!("(r{c} {} ke)", fresh())).collect();
                let radices: Vec<usize> = conds.iter().map(|&c| domains[c].len()).collect();
                let mut rows = String::new();
                for cfg in odometer(&radices) {
                    let keys: Vec<&str> = cfg.iter().zip(&conds).map(|(&s, &c)| domains[c][s].as_str()).collect();
                    let _ = writeln!(rows, "  {}: {};", keys.join(", "), rng.gen_range(-50..150) as f64 / 4.0);
                }
                let _ = writeln!(out, "value (w {}) |v {} = {{\n{rows}}}.", fresh(), parts.join(", "));
            }
        }
    }
    out
}

fn odometer(radices: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &r in radices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..r).map(move |s| {
                    let mut v = prefix.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

// ---------------------------------------------------------------------------
// Fixtures

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture(name: &str) -> KnowledgeBase {
    ikb_core::parse_kb_named(&fixture_text(name), name).unwrap_or_else(|e| panic!("{e:?}"))
}

/// Every `.ikb` file under the fixtures directory, relative names, sorted.
pub fn all_fixtures() -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![fixtures_dir()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "ikb") {
                out.push(path.strip_prefix(fixtures_dir()).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out.sort();
    out
}

/// Pure Horn fixtures with the query from their `% query:` header line.
pub fn horn_corpus() -> Vec<(String, KnowledgeBase, String)> {
    all_fixtures()
        .into_iter()
        .filter(|f| f.starts_with("horn/"))
        .map(|f| {
            let text = fixture_text(&f);
            let query = text
                .lines()
                .find_map(|l| l.strip_prefix("% query: "))
                .unwrap_or_else(|| panic!("{f} has no query line"))
                .to_string();
            let kb = fixture(&f);
            (f, kb, query)
        })
        .collect()
}
