//! Terms, propositions and their alternative outcomes.
//!
//! A proposition is a relation symbol applied to a flat list of terms. A term
//! is an object constant, a variable, or a restricted position carrying the
//! ordered set of mutually exclusive, collectively exhaustive values that the
//! position may take.

use std::fmt;

/// An ordered set of at least two distinct symbols.
///
/// Order is semantic: it indexes table rows and columns, so two sets with the
/// same members in a different order are different sets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AltSet(Vec<String>);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AltSetError {
    #[error("an alternative set needs at least two members, got {0}")]
    TooSmall(usize),
    #[error("alternative `{0}` appears more than once")]
    Duplicate(String),
}

impl AltSet {
    pub fn new<I, S>(members: I) -> Result<Self, AltSetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let members: Vec<String> = members.into_iter().map(Into::into).collect();
        if members.len() < 2 {
            return Err(AltSetError::TooSmall(members.len()));
        }
        for (i, m) in members.iter().enumerate() {
            if members[..i].contains(m) {
                return Err(AltSetError::Duplicate(m.clone()));
            }
        }
        Ok(AltSet(members))
    }

    pub fn members(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.0.iter().any(|m| m == symbol)
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.0.iter().position(|m| m == symbol)
    }
}

impl fmt::Display for AltSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Constant(String),
    /// Variable name without the leading `?`.
    Variable(String),
    AltSet(AltSet),
}

impl Term {
    pub fn constant(s: impl Into<String>) -> Self {
        Term::Constant(s.into())
    }

    pub fn var(s: impl Into<String>) -> Self {
        Term::Variable(s.into())
    }

    pub fn alts<I, S>(members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Term::AltSet(AltSet::new(members).expect("valid alternative set"))
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn as_altset(&self) -> Option<&AltSet> {
        match self {
            Term::AltSet(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(c) => f.write_str(c),
            Term::Variable(v) => write!(f, "?{v}"),
            Term::AltSet(a) => a.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Proposition {
    pub relation: String,
    pub args: Vec<Term>,
}

impl Proposition {
    pub fn new(relation: impl Into<String>, args: Vec<Term>) -> Self {
        Proposition { relation: relation.into(), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// No variables and no restricted positions.
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Constant(_)))
    }

    /// At least one restricted position.
    pub fn is_restricted(&self) -> bool {
        self.args.iter().any(|t| matches!(t, Term::AltSet(_)))
    }

    /// True when every position that is not restricted holds a constant.
    pub fn is_ground_except_restricted(&self) -> bool {
        !self.args.iter().any(Term::is_variable)
    }

    pub fn restricted_positions(&self) -> impl Iterator<Item = (usize, &AltSet)> {
        self.args.iter().enumerate().filter_map(|(i, t)| t.as_altset().map(|a| (i, a)))
    }

    /// Variables in order of first occurrence.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.args {
            if let Term::Variable(v) = t {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Number of alternative outcomes (product of restricted set sizes).
    pub fn outcome_count(&self) -> usize {
        self.restricted_positions().map(|(_, a)| a.len()).product()
    }

    pub fn outcomes(&self) -> Vec<Outcome> {
        let positions: Vec<(usize, &AltSet)> = self.restricted_positions().collect();
        cross_product(&positions.iter().map(|(_, a)| a.len()).collect::<Vec<_>>())
            .into_iter()
            .map(|idx| Outcome {
                base: self.clone(),
                choice: idx.iter().zip(&positions).map(|(&k, (_, a))| a.members()[k].clone()).collect(),
            })
            .collect()
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.relation)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// One alternative outcome of a restricted proposition: a member chosen for
/// every restricted position, left to right.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome {
    pub base: Proposition,
    pub choice: Vec<String>,
}

impl Outcome {
    /// The ground proposition this outcome asserts.
    pub fn ground(&self) -> Proposition {
        let mut choices = self.choice.iter();
        let args = self
            .base
            .args
            .iter()
            .map(|t| match t {
                Term::AltSet(_) => Term::Constant(choices.next().expect("choice per position").clone()),
                other => other.clone(),
            })
            .collect();
        Proposition::new(self.base.relation.clone(), args)
    }

    /// Short name used in tables: the chosen symbols joined by `&`.
    pub fn name(&self) -> String {
        self.choice.join("&")
    }
}

/// A member of the cross product of several propositions' outcomes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointOutcome(pub Vec<Outcome>);

impl JointOutcome {
    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(Outcome::name).collect()
    }
}

impl fmt::Display for JointOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join(", "))
    }
}

/// Joint outcomes of a conjunction of restricted propositions, in declaration
/// order with the rightmost component varying fastest.
pub fn alternative_outcomes(props: &[Proposition]) -> Vec<JointOutcome> {
    let per_prop: Vec<Vec<Outcome>> = props.iter().map(Proposition::outcomes).collect();
    cross_product(&per_prop.iter().map(Vec::len).collect::<Vec<_>>())
        .into_iter()
        .map(|idx| JointOutcome(idx.iter().zip(&per_prop).map(|(&k, outs)| outs[k].clone()).collect()))
        .collect()
}

/// Index tuples of a mixed-radix odometer, rightmost digit fastest. An empty
/// radix list yields a single empty tuple.
pub fn cross_product(radices: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = radices.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; radices.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for pos in (0..radices.len()).rev() {
            cur[pos] += 1;
            if cur[pos] < radices[pos] {
                break;
            }
            cur[pos] = 0;
        }
    }
    out
}
