//! Knowledge-base contents: domain declarations, facts and influences.

use std::fmt;

use crate::term::{alternative_outcomes, AltSet, JointOutcome, Outcome, Proposition};

/// Row sums of declared distributions must be within this of one.
pub const PROB_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("probabilities sum to {0}, expected 1")]
    BadSum(f64),
    #[error("expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("value {0} is not finite")]
    NotFinite(f64),
}

fn check_row(probs: &[f64], expected: usize) -> Result<(), TableError> {
    if probs.len() != expected {
        return Err(TableError::Shape { expected, found: probs.len() });
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(TableError::OutOfRange(p));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(TableError::BadSum(sum));
    }
    Ok(())
}

/// A probability for every alternative outcome of one restricted proposition,
/// in outcome order.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub outcomes: Vec<Outcome>,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn new(subject: &Proposition, probs: Vec<f64>) -> Result<Self, TableError> {
        let outcomes = subject.outcomes();
        check_row(&probs, outcomes.len())?;
        Ok(Distribution { outcomes, probs })
    }

    /// Skips validation; used for computed results that carry their own
    /// tolerance.
    pub fn from_parts(outcomes: Vec<Outcome>, probs: Vec<f64>) -> Self {
        Distribution { outcomes, probs }
    }

    pub fn prob_of(&self, name: &str) -> Option<f64> {
        self.outcomes.iter().position(|o| o.name() == name).map(|i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, f64)> {
        self.outcomes.iter().zip(self.probs.iter().copied())
    }
}

/// Conditional distributions of a subject given each joint outcome of the
/// restricted conditions (`row_axes`). Rows follow the joint outcome order of
/// the axes; entries within a row follow the subject's outcome order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable {
    pub row_axes: Vec<Proposition>,
    pub rows: Vec<Vec<f64>>,
}

impl ConditionalTable {
    pub fn new(subject: &Proposition, row_axes: Vec<Proposition>, rows: Vec<Vec<f64>>) -> Result<Self, TableError> {
        let n_rows: usize = row_axes.iter().map(Proposition::outcome_count).product();
        if rows.len() != n_rows {
            return Err(TableError::Shape { expected: n_rows, found: rows.len() });
        }
        let width = subject.outcome_count();
        for r in &rows {
            check_row(r, width)?;
        }
        Ok(ConditionalTable { row_axes, rows })
    }

    pub fn row_outcomes(&self) -> Vec<JointOutcome> {
        alternative_outcomes(&self.row_axes)
    }

    pub fn row(&self, condition: &JointOutcome) -> Option<&[f64]> {
        self.row_outcomes().iter().position(|o| o == condition).map(|i| self.rows[i].as_slice())
    }

    /// Row-major flattening: condition rows outermost, subject outcome fastest.
    pub fn flat(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }
}

/// A utility for each joint outcome of the row axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    pub row_axes: Vec<Proposition>,
    pub values: Vec<f64>,
}

impl ValueTable {
    pub fn new(row_axes: Vec<Proposition>, values: Vec<f64>) -> Result<Self, TableError> {
        let n_rows: usize = row_axes.iter().map(Proposition::outcome_count).product();
        if values.len() != n_rows {
            return Err(TableError::Shape { expected: n_rows, found: values.len() });
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(TableError::NotFinite(v));
        }
        Ok(ValueTable { row_axes, values })
    }

    pub fn value(&self, condition: &JointOutcome) -> Option<f64> {
        alternative_outcomes(&self.row_axes).iter().position(|o| o == condition).map(|i| self.values[i])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Influence {
    /// `head <- body`: a Horn clause.
    Logic { head: Proposition, body: Vec<Proposition> },
    /// Unconditional distribution over a restricted proposition.
    Prior { subject: Proposition, dist: Distribution },
    /// `subject |p conditions`. Restricted conditions are the table axes,
    /// unrestricted ones are guards that must be proved logically.
    Prob { subject: Proposition, conditions: Vec<Proposition>, table: ConditionalTable },
    /// `decision |i observed`.
    Info { decision: Proposition, observed: Vec<Proposition> },
    /// `subject |v conditions`: utilities for the value proposition.
    Value { subject: Proposition, conditions: Vec<Proposition>, table: ValueTable },
}

impl Influence {
    pub fn keyword(&self) -> &'static str {
        match self {
            Influence::Logic { .. } => "logic",
            Influence::Prior { .. } => "prior",
            Influence::Prob { .. } => "prob",
            Influence::Info { .. } => "info",
            Influence::Value { .. } => "value",
        }
    }

    pub fn subject(&self) -> &Proposition {
        match self {
            Influence::Logic { head, .. } => head,
            Influence::Prior { subject, .. } | Influence::Prob { subject, .. } | Influence::Value { subject, .. } => {
                subject
            }
            Influence::Info { decision, .. } => decision,
        }
    }

    /// Body, conditions or observed propositions, in declaration order.
    pub fn conditions(&self) -> &[Proposition] {
        match self {
            Influence::Logic { body, .. } => body,
            Influence::Prior { .. } => &[],
            Influence::Prob { conditions, .. } | Influence::Value { conditions, .. } => conditions,
            Influence::Info { observed, .. } => observed,
        }
    }
}

/// Declares that argument `position` (0-based) of `relation/arity` ranges
/// over `values`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub relation: String,
    pub arity: usize,
    pub position: usize,
    pub values: AltSet,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnowledgeBase {
    pub domains: Vec<Domain>,
    pub facts: Vec<Proposition>,
    pub influences: Vec<Influence>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty() && self.facts.is_empty() && self.influences.is_empty()
    }

    pub fn domain(&self, relation: &str, position: usize) -> Option<&Domain> {
        self.domains.iter().find(|d| d.relation == relation && d.position == position)
    }

    pub fn logic_clauses(&self) -> impl Iterator<Item = (&Proposition, &[Proposition])> {
        self.influences.iter().filter_map(|i| match i {
            Influence::Logic { head, body } => Some((head, body.as_slice())),
            _ => None,
        })
    }

    pub fn has_logic_clauses(&self) -> bool {
        self.logic_clauses().next().is_some()
    }

    pub fn declaration_count(&self) -> usize {
        self.domains.len() + self.facts.len() + self.influences.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    /// Prove a conjunction.
    Logic(Vec<Proposition>),
    /// Distribution over the alternatives of a proposition pattern.
    Dist(Proposition),
    /// Optimal policy and expected value for a value proposition.
    Decide(Proposition),
}

impl Query {
    pub fn goals(&self) -> Vec<Proposition> {
        match self {
            Query::Logic(ps) => ps.clone(),
            Query::Dist(p) | Query::Decide(p) => vec![p.clone()],
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Query::Logic(_) => "logic",
            Query::Dist(_) => "dist",
            Query::Decide(_) => "decide",
        }
    }

    /// Variables of the query in order of first occurrence.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in self.goals() {
            for v in p.variables() {
                if !out.iter().any(|o| o == v) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{} ", self.kind_name())?;
        let goals: Vec<String> = self.goals().iter().map(ToString::to_string).collect();
        write!(f, "{}.", goals.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    fn weather(day: &str) -> Proposition {
        Proposition::new("weather", vec![Term::alts(["fair", "cloudy", "rainy"]), Term::constant(day)])
    }

    #[test]
    fn distribution_validates_sum() {
        let d = Distribution::new(&weather("monday"), vec![0.7, 0.2, 0.1]).unwrap();
        assert_eq!(d.prob_of("cloudy"), Some(0.2));
        assert!(matches!(Distribution::new(&weather("monday"), vec![0.7, 0.2, 0.2]), Err(TableError::BadSum(_))));
        assert!(matches!(
            Distribution::new(&weather("monday"), vec![0.7, 0.3]),
            Err(TableError::Shape { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn conditional_table_rows_follow_axes() {
        let fc = Proposition::new("forecast", vec![Term::alts(["good", "bad"]), Term::constant("monday")]);
        let t =
            ConditionalTable::new(&fc, vec![weather("monday")], vec![vec![0.8, 0.2], vec![0.5, 0.5], vec![0.1, 0.9]])
                .unwrap();
        let rainy = &t.row_outcomes()[2];
        assert_eq!(rainy.to_string(), "rainy");
        assert_eq!(t.row(rainy), Some(&[0.1, 0.9][..]));
        assert!(ConditionalTable::new(&fc, vec![weather("monday")], vec![vec![0.8, 0.2]]).is_err());
    }

    #[test]
    fn value_table_is_total() {
        let t = ValueTable::new(vec![weather("monday")], vec![100.0, 40.0, 0.0]).unwrap();
        assert_eq!(t.value(&alternative_outcomes(&t.row_axes)[1]), Some(40.0));
        assert!(ValueTable::new(vec![weather("monday")], vec![1.0]).is_err());
    }
}
