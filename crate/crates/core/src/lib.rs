//! Influence knowledge bases: first-order Horn clauses mixed with
//! probabilistic, informational and value influences, from which a
//! query-specific influence diagram is constructed and then solved.
//!
//! Typical flow: [`parse_kb`] a knowledge base, [`parse_query`] a query,
//! [`construct`] a diagram for it, then [`solve_distribution`] or
//! [`solve_decision`].

pub mod construct;
pub mod diagram;
pub mod evaluate;
pub mod kb;
pub mod logic;
pub mod oracle;
pub mod parser;
pub mod subst;
pub mod term;

pub use construct::{
    construct, enumerate_models, replay, ConstructionFailure, ConstructionResult, Constructor, ResultKind, Rule,
    TraceStep,
};
pub use diagram::{DecisionRule, DiagramError, InfluenceDiagram, Node, NodeId, NodeKind, Policy};
pub use evaluate::{
    remove_barren, remove_chance_into_value, remove_decision, replay_operations, reverse_arc, solve_decision,
    solve_distribution, EvalError, Operation, SolveReport, SolveResult,
};
pub use kb::{ConditionalTable, Distribution, Domain, Influence, KnowledgeBase, Query, TableError, ValueTable};
pub use logic::{derivable_facts, prove, AnswerStream, ProofConfig};
pub use oracle::{enumerate_joint, oracle_distribution, oracle_policy, JointTable, OracleError};
pub use parser::{
    parse_kb, parse_kb_named, parse_query, serialize_kb, validate_query, ParseError, ParseErrorKind, SourceSpan,
};
pub use subst::{unify, Substitution};
pub use term::{alternative_outcomes, AltSet, JointOutcome, Outcome, Proposition, Term};
