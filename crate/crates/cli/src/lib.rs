//! Library side of the `ikb` command: runs one query against a loaded
//! knowledge base and renders the outcome. `main.rs` only handles
//! arguments, files and exit codes.

pub mod report;

use std::path::PathBuf;

use ikb_core::construct::ConstructionResult;
use ikb_core::{
    construct, enumerate_models, oracle_distribution, oracle_policy, parse_query, prove, solve_decision,
    solve_distribution, validate_query, KnowledgeBase, ProofConfig, Query, ResultKind,
};

use report::{bindings_of, model_skeleton, operations_of, policy_of, ModelReport, OutcomeProb, Report, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub trace: bool,
    pub explain: bool,
    pub dot: Option<PathBuf>,
    pub models: Option<usize>,
    pub depth: Option<usize>,
    pub format: Format,
}

impl RunOptions {
    fn proof_config(&self) -> ProofConfig {
        let mut cfg = ProofConfig::default();
        if let Some(d) = self.depth {
            cfg.depth_limit = d;
        }
        cfg
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Output {
    fn error(code: i32, message: String) -> Self {
        Output { stdout: String::new(), stderr: message + "\n", code }
    }
}

fn parse_checked(kb: &KnowledgeBase, text: &str) -> Result<Query, Output> {
    let q = parse_query(text).map_err(|e| Output::error(EXIT_PARSE, e.to_string()))?;
    validate_query(&q, kb).map_err(|e| Output::error(EXIT_PARSE, e.to_string()))?;
    Ok(q)
}

/// Solves one constructed model. Solver errors are returned as text.
fn solve_model(
    q: &Query,
    kb: &KnowledgeBase,
    cfg: &ProofConfig,
    m: &ConstructionResult,
) -> Result<ModelReport, String> {
    let mut r = model_skeleton(m);
    match (q, m.kind) {
        (Query::Logic(goals), _) => {
            r.bindings = prove(goals, kb, cfg).map(|a| bindings_of(&a)).collect();
        }
        (_, ResultKind::Logical) => r.bindings = vec![bindings_of(&m.answer)],
        (_, ResultKind::Probabilistic) => {
            let qn = m.query_node.ok_or("no query node")?;
            let (dist, rep) = solve_distribution(&m.diagram, qn).map_err(|e| e.to_string())?;
            r.distribution =
                Some(dist.iter().map(|(o, p)| OutcomeProb { outcome: o.name(), probability: p }).collect());
            r.operations = operations_of(&rep, &m.diagram);
            let b = bindings_of(&m.answer);
            if !b.is_empty() {
                r.bindings = vec![b];
            }
        }
        (_, ResultKind::Decision) => {
            let (policy, eu, rep) = solve_decision(&m.diagram).map_err(|e| e.to_string())?;
            r.policy = Some(policy_of(&policy, &m.diagram));
            r.expected_value = Some(eu);
            r.operations = operations_of(&rep, &m.diagram);
        }
    }
    Ok(r)
}

/// Runs one query. Failures are reported through the exit code, with the
/// failure kind on standard output so it is part of the golden text.
pub fn execute(kb: &KnowledgeBase, query_text: &str, opts: &RunOptions) -> Output {
    let q = match parse_checked(kb, query_text) {
        Ok(q) => q,
        Err(out) => return out,
    };
    let cfg = opts.proof_config();
    let built = match opts.models {
        Some(k) if !matches!(q, Query::Logic(_)) => {
            let models = enumerate_models(&q, kb, &cfg, k);
            if models.is_empty() {
                Err(construct(&q, kb, &cfg).err().map(|f| f.to_string()).unwrap_or_else(|| "exhausted".into()))
            } else {
                Ok(models)
            }
        }
        _ => construct(&q, kb, &cfg).map(|m| vec![m]).map_err(|f| f.to_string()),
    };
    let mut report = Report {
        schema: SCHEMA_VERSION,
        query: q.to_string(),
        query_kind: q.kind_name().to_string(),
        status: "ok".into(),
        failure: None,
        models: Vec::new(),
    };
    let mut code = EXIT_OK;
    let mut stderr = String::new();
    match built {
        Err(kind) => {
            report.status = "failed".into();
            report.failure = Some(kind);
            code = EXIT_FAILED;
        }
        Ok(models) => {
            if let (Some(path), Some(first)) = (&opts.dot, models.first()) {
                if let Err(e) = std::fs::write(path, first.diagram.to_dot()) {
                    return Output::error(EXIT_IO, format!("{}: {e}", path.display()));
                }
            }
            for m in &models {
                match solve_model(&q, kb, &cfg, m) {
                    Ok(r) => report.models.push(r),
                    Err(e) => {
                        stderr.push_str(&format!("solve failed: {e}\n"));
                        report.status = "failed".into();
                        report.failure = Some("solve".into());
                        code = EXIT_FAILED;
                        break;
                    }
                }
            }
        }
    }
    let stdout = match opts.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Text => render_text(&report, opts),
    };
    Output { stdout, stderr, code }
}

pub fn render_text(report: &Report, opts: &RunOptions) -> String {
    let mut out = String::new();
    let numbered = opts.models.is_some() && report.query_kind != "logic";
    for (k, m) in report.models.iter().enumerate() {
        if numbered {
            out.push_str(&format!("model {} ({}, {} nodes)\n", k + 1, m.result_kind, m.nodes));
        }
        m.render_text(&report.query_kind, &mut out);
        if opts.trace {
            m.render_trace(&mut out);
        }
        if opts.explain && m.result_kind != "logical" {
            m.render_operations(&mut out);
        }
    }
    if let Some(f) = &report.failure {
        if report.query_kind == "logic" && report.models.is_empty() {
            out.push_str("no\n");
        }
        out.push_str(&format!("construction failed: {f}\n"));
    }
    out
}

/// Reference answers by brute-force enumeration over the first model, at
/// full precision. Used to produce golden values.
pub fn oracle(kb: &KnowledgeBase, query_text: &str, depth: Option<usize>) -> Output {
    let q = match parse_checked(kb, query_text) {
        Ok(q) => q,
        Err(out) => return out,
    };
    let mut cfg = ProofConfig::default();
    if let Some(d) = depth {
        cfg.depth_limit = d;
    }
    let m = match construct(&q, kb, &cfg) {
        Ok(m) => m,
        Err(f) => {
            return Output { stdout: format!("construction failed: {f}\n"), stderr: String::new(), code: EXIT_FAILED }
        }
    };
    let mut out = String::new();
    let result = match m.kind {
        ResultKind::Logical => {
            out.push_str("logical\n");
            Ok(())
        }
        ResultKind::Probabilistic => oracle_distribution(&m.diagram, m.query_node.expect("query node")).map(|d| {
            for (o, p) in d.iter() {
                out.push_str(&format!("{} {p:?}\n", o.name()));
            }
        }),
        ResultKind::Decision => oracle_policy(&m.diagram).map(|(policy, eu)| {
            for dec in policy_of(&policy, &m.diagram) {
                out.push_str(&format!("decision {}\n", dec.decision));
                for row in dec.rules {
                    out.push_str(&format!("  {} -> {}\n", row.context.join(", "), row.choice));
                }
            }
            out.push_str(&format!("expected value: {eu:?}\n"));
        }),
    };
    match result {
        Ok(()) => Output { stdout: out, stderr: String::new(), code: EXIT_OK },
        Err(e) => Output::error(EXIT_FAILED, format!("oracle failed: {e}")),
    }
}

/// Declaration counts, in source keyword order.
pub fn summarize(kb: &KnowledgeBase) -> String {
    let mut out = format!("domains: {}\nfacts: {}\n", kb.domains.len(), kb.facts.len());
    for kw in ["logic", "prior", "prob", "info", "value"] {
        let n = kb.influences.iter().filter(|i| i.keyword() == kw).count();
        out.push_str(&format!("{kw}: {n}\n"));
    }
    out
}
