//! Substitutions and most-general unification over flat propositions.

use std::collections::BTreeMap;
use std::fmt;

use crate::term::{Proposition, Term};

/// A finite mapping from variable names to terms.
///
/// Substitutions built by [`unify`] are kept normalized: no bound variable
/// occurs in any binding's range, so applying one twice equals applying it
/// once.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a substitution from raw pairs. Identity bindings are dropped.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Term)>,
        S: Into<String>,
    {
        let mut bindings = BTreeMap::new();
        for (v, t) in pairs {
            let v = v.into();
            if t != Term::Variable(v.clone()) {
                bindings.insert(v, t);
            }
        }
        Substitution { bindings }
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn domain(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        match t {
            Term::Variable(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            other => other.clone(),
        }
    }

    pub fn apply(&self, p: &Proposition) -> Proposition {
        Proposition { relation: p.relation.clone(), args: p.args.iter().map(|t| self.apply_term(t)).collect() }
    }

    /// The substitution that behaves as `self` followed by `other`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut bindings: BTreeMap<String, Term> = BTreeMap::new();
        for (v, t) in &self.bindings {
            let t = other.apply_term(t);
            if t != Term::Variable(v.clone()) {
                bindings.insert(v.clone(), t);
            }
        }
        for (v, t) in &other.bindings {
            if !self.bindings.contains_key(v) {
                bindings.insert(v.clone(), t.clone());
            }
        }
        Substitution { bindings }
    }

    /// Keeps only the bindings for `vars`.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a str>) -> Substitution {
        let mut bindings = BTreeMap::new();
        for v in vars {
            if let Some(t) = self.bindings.get(v) {
                bindings.insert(v.to_string(), t.clone());
            }
        }
        Substitution { bindings }
    }

    pub fn without(&self, var: &str) -> Substitution {
        let mut out = self.clone();
        out.bindings.remove(var);
        out
    }

    pub fn is_idempotent(&self) -> bool {
        self.bindings.values().all(|t| match t {
            Term::Variable(v) => !self.bindings.contains_key(v),
            _ => true,
        })
    }

    /// Adds `var/term` and rewrites existing ranges so the result stays
    /// normalized. `term` must already be resolved against `self`.
    fn bind(&mut self, var: &str, term: Term) -> bool {
        if term == Term::Variable(var.to_string()) {
            return true;
        }
        // flat terms: the only way a binding could contain its own variable
        // is the identity binding handled above
        if occurs(var, &term) {
            return false;
        }
        let single = Substitution::from_pairs([(var, term.clone())]);
        for t in self.bindings.values_mut() {
            *t = single.apply_term(t);
        }
        self.bindings.insert(var.to_string(), term);
        true
    }
}

fn occurs(var: &str, t: &Term) -> bool {
    matches!(t, Term::Variable(v) if v == var)
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "?{v}/{t}")?;
        }
        f.write_str("}")
    }
}

/// Most general unifier of `p` and `q` extending `theta`, or `None`.
///
/// A variable unifies with anything by binding. Two restricted positions
/// unify only when their alternative sets are identical, order included. A
/// constant unifies with a restricted position when it is a member; that
/// narrows the position to the constant and records no binding.
pub fn unify(p: &Proposition, q: &Proposition, theta: &Substitution) -> Option<Substitution> {
    if p.relation != q.relation || p.args.len() != q.args.len() {
        return None;
    }
    let mut out = theta.clone();
    for (a, b) in p.args.iter().zip(&q.args) {
        let a = out.apply_term(a);
        let b = out.apply_term(b);
        let ok = match (&a, &b) {
            (Term::Variable(x), Term::Variable(y)) if x == y => true,
            (Term::Variable(x), t) | (t, Term::Variable(x)) => {
                let x = x.clone();
                let t = t.clone();
                out.bind(&x, t)
            }
            (Term::Constant(c), Term::Constant(d)) => c == d,
            (Term::AltSet(s), Term::AltSet(t)) => s == t,
            (Term::Constant(c), Term::AltSet(s)) | (Term::AltSet(s), Term::Constant(c)) => s.contains(c),
        };
        if !ok {
            return None;
        }
    }
    Some(out)
}

/// Matches `pattern` against `target` binding only the pattern's variables,
/// so that `pattern·θ` is syntactically `target`. `target` is left untouched:
/// no narrowing of restricted positions and no binding of its variables.
pub fn match_instance(target: &Proposition, pattern: &Proposition, theta: &Substitution) -> Option<Substitution> {
    let out = unify(target, pattern, theta)?;
    let left = out.apply(pattern);
    if left == *target && out.apply(target) == *target {
        Some(out)
    } else {
        None
    }
}

/// Renames every variable `v` in `props` to `v#suffix`.
pub fn rename_apart(props: &[Proposition], suffix: usize) -> Vec<Proposition> {
    props.iter().map(|p| rename_prop(p, suffix)).collect()
}

pub fn rename_prop(p: &Proposition, suffix: usize) -> Proposition {
    Proposition {
        relation: p.relation.clone(),
        args: p
            .args
            .iter()
            .map(|t| match t {
                Term::Variable(v) => Term::Variable(format!("{v}#{suffix}")),
                other => other.clone(),
            })
            .collect(),
    }
}
