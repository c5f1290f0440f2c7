//! Reader and writer for the `.ikb` knowledge-base format and query syntax.
//!
//! The grammar is documented in `docs/language.md`. Parsing happens in two
//! passes: a recursive-descent pass producing raw declarations (recovering
//! at the next `.` after a syntax error), then a validation pass that checks
//! relations, arities, domains and tables and expands variables written at
//! declared restricted positions into their alternative sets.

use std::collections::BTreeMap;
use std::fmt;

use crate::kb::{ConditionalTable, Distribution, Domain, Influence, KnowledgeBase, Query, TableError, ValueTable};
use crate::term::{alternative_outcomes, AltSet, Proposition, Term};

/// Errors collected before giving up.
pub const MAX_ERRORS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownRelation,
    ArityMismatch,
    BadDistribution,
    DuplicateDomain,
}

impl ParseErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnknownRelation => "unknown-relation",
            ParseErrorKind::ArityMismatch => "arity-mismatch",
            ParseErrorKind::BadDistribution => "bad-distribution",
            ParseErrorKind::DuplicateDomain => "duplicate-domain",
        }
    }

    /// Lexical and grammatical errors, as opposed to semantic validation.
    pub fn is_syntactic(self) -> bool {
        self == ParseErrorKind::Syntax
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {}: {message}", kind.as_str())]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
    pub message: String,
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Dot,
    Eq,
    Slash,
    At,
    Amp,
    Arrow,
    BarP,
    BarI,
    BarV,
    Ident(String),
    Var(String),
    Num(f64),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Slash => "`/`".into(),
            Tok::At => "`@`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Arrow => "`<-`".into(),
            Tok::BarP => "`|p`".into(),
            Tok::BarI => "`|i`".into(),
            Tok::BarV => "`|v`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Var(s) => format!("variable `?{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn lex(text: &str, file: &str, errors: &mut Vec<ParseError>) -> Vec<(Tok, Pos)> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! adv {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            adv!();
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                adv!();
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            ';' => Some(Tok::Semi),
            '.' => Some(Tok::Dot),
            '=' => Some(Tok::Eq),
            '/' => Some(Tok::Slash),
            '@' => Some(Tok::At),
            '&' => Some(Tok::Amp),
            _ => None,
        };
        if let Some(t) = single {
            toks.push((t, pos));
            adv!();
            continue;
        }
        if c == '<' && chars.get(i + 1) == Some(&'-') {
            toks.push((Tok::Arrow, pos));
            adv!();
            adv!();
            continue;
        }
        if c == '|' {
            let t = match chars.get(i + 1) {
                Some('p') => Some(Tok::BarP),
                Some('i') => Some(Tok::BarI),
                Some('v') => Some(Tok::BarV),
                _ => None,
            };
            let followed = chars.get(i + 2).is_some_and(|&c| is_ident_char(c));
            match t {
                Some(t) if !followed => {
                    toks.push((t, pos));
                    adv!();
                    adv!();
                }
                _ => {
                    errors.push(err_at(file, pos, ParseErrorKind::Syntax, "expected `|p`, `|i` or `|v`"));
                    adv!();
                }
            }
            continue;
        }
        if c == '?' {
            adv!();
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                adv!();
            }
            if start == i || !is_ident_start(chars[start]) {
                errors.push(err_at(file, pos, ParseErrorKind::Syntax, "expected a variable name after `?`"));
                continue;
            }
            let name: String = chars[start..i].iter().collect();
            toks.push((Tok::Var(name.to_lowercase()), pos));
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                adv!();
            }
            let name: String = chars[start..i].iter().collect();
            toks.push((Tok::Ident(name.to_lowercase()), pos));
            continue;
        }
        if c.is_ascii_digit() || (c == '-' || c == '+') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
            let start = i;
            adv!();
            while i < chars.len() && chars[i].is_ascii_digit() {
                adv!();
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                adv!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    adv!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = (i, line, col);
                adv!();
                if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                    adv!();
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        adv!();
                    }
                } else {
                    (i, line, col) = save;
                }
            }
            let lexeme: String = chars[start..i].iter().collect();
            match lexeme.parse::<f64>() {
                Ok(n) => toks.push((Tok::Num(n), pos)),
                Err(_) => errors.push(err_at(file, pos, ParseErrorKind::Syntax, format!("bad number `{lexeme}`"))),
            }
            continue;
        }
        errors.push(err_at(file, pos, ParseErrorKind::Syntax, format!("unexpected character `{c}`")));
        adv!();
    }
    toks.push((Tok::Eof, Pos { line, column: col }));
    toks
}

fn err_at(file: &str, pos: Pos, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
    ParseError {
        span: SourceSpan { file: file.to_string(), line: pos.line, column: pos.column },
        kind,
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// raw syntax

#[derive(Clone, Debug)]
struct RawProp {
    prop: Proposition,
    pos: Pos,
}

#[derive(Clone, Debug)]
struct RawRow {
    keys: Vec<String>,
    nums: Vec<f64>,
    pos: Pos,
}

#[derive(Clone, Debug)]
enum RawDecl {
    Domain { relation: String, arity: f64, position: f64, values: Vec<String> },
    Fact(RawProp),
    Logic(RawProp, Vec<RawProp>),
    Prior(RawProp, Vec<RawRow>),
    Prob(RawProp, Vec<RawProp>, Vec<RawRow>),
    Info(RawProp, Vec<RawProp>),
    Value(RawProp, Vec<RawProp>, Vec<RawRow>),
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    file: &'a str,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        err_at(self.file, self.pos(), ParseErrorKind::Syntax, msg)
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", want.describe(), self.peek().describe())))
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == want {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected an identifier, found {}", other.describe()))),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            other => Err(self.error(format!("expected a number, found {}", other.describe()))),
        }
    }

    /// Skips to just past the next `.`.
    fn recover(&mut self) {
        loop {
            match self.bump() {
                Tok::Dot | Tok::Eof => return,
                _ => {}
            }
        }
    }

    fn altset_members(&mut self) -> PResult<Vec<String>> {
        self.expect(Tok::LBrace)?;
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn prop(&mut self) -> PResult<RawProp> {
        let pos = self.pos();
        self.expect(Tok::LParen)?;
        let relation = self.ident()?;
        let mut args = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::RParen => {
                    self.bump();
                    break;
                }
                Tok::Ident(s) => {
                    self.bump();
                    args.push(Term::Constant(s));
                }
                Tok::Var(v) => {
                    self.bump();
                    args.push(Term::Variable(v));
                }
                Tok::LBrace => {
                    let at = self.pos();
                    let members = self.altset_members()?;
                    let set = AltSet::new(members)
                        .map_err(|e| err_at(self.file, at, ParseErrorKind::Syntax, e.to_string()))?;
                    args.push(Term::AltSet(set));
                }
                other => return Err(self.error(format!("expected a term or `)`, found {}", other.describe()))),
            }
        }
        Ok(RawProp { prop: Proposition::new(relation, args), pos })
    }

    fn prop_list(&mut self) -> PResult<Vec<RawProp>> {
        let mut out = vec![self.prop()?];
        while self.eat(&Tok::Comma) {
            out.push(self.prop()?);
        }
        Ok(out)
    }

    fn outcome_key(&mut self) -> PResult<String> {
        let mut key = self.ident()?;
        while self.eat(&Tok::Amp) {
            key.push('&');
            key.push_str(&self.ident()?);
        }
        Ok(key)
    }

    /// `{ name: p, ... }`
    fn named_dist(&mut self) -> PResult<Vec<RawRow>> {
        self.expect(Tok::LBrace)?;
        let mut rows = Vec::new();
        loop {
            let pos = self.pos();
            let key = self.outcome_key()?;
            self.expect(Tok::Colon)?;
            let p = self.number()?;
            rows.push(RawRow { keys: vec![key], nums: vec![p], pos });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(rows)
    }

    /// `{ k1, k2: n1, n2; ... }`
    fn rows(&mut self) -> PResult<Vec<RawRow>> {
        self.expect(Tok::LBrace)?;
        let mut rows = Vec::new();
        while *self.peek() != Tok::RBrace {
            let pos = self.pos();
            let mut keys = Vec::new();
            if *self.peek() != Tok::Colon {
                keys.push(self.outcome_key()?);
                while self.eat(&Tok::Comma) {
                    keys.push(self.outcome_key()?);
                }
            }
            self.expect(Tok::Colon)?;
            let mut nums = vec![self.number()?];
            while self.eat(&Tok::Comma) {
                nums.push(self.number()?);
            }
            self.expect(Tok::Semi)?;
            rows.push(RawRow { keys, nums, pos });
        }
        self.expect(Tok::RBrace)?;
        Ok(rows)
    }

    fn conditions(&mut self, bar: Tok) -> PResult<Vec<RawProp>> {
        if self.eat(&bar) {
            self.prop_list()
        } else {
            Ok(Vec::new())
        }
    }

    fn decl(&mut self) -> PResult<(RawDecl, Pos)> {
        let pos = self.pos();
        let kw = self.ident()?;
        let decl = match kw.as_str() {
            "domain" => {
                let relation = self.ident()?;
                self.expect(Tok::Slash)?;
                let arity = self.number()?;
                self.expect(Tok::At)?;
                let position = self.number()?;
                let values = self.altset_members()?;
                RawDecl::Domain { relation, arity, position, values }
            }
            "fact" => RawDecl::Fact(self.prop()?),
            "logic" => {
                let head = self.prop()?;
                let body = if self.eat(&Tok::Arrow) { self.prop_list()? } else { Vec::new() };
                RawDecl::Logic(head, body)
            }
            "prior" => {
                let subject = self.prop()?;
                self.expect(Tok::Eq)?;
                RawDecl::Prior(subject, self.named_dist()?)
            }
            "prob" => {
                let subject = self.prop()?;
                let conds = self.conditions(Tok::BarP)?;
                self.expect(Tok::Eq)?;
                RawDecl::Prob(subject, conds, self.rows()?)
            }
            "info" => {
                let subject = self.prop()?;
                RawDecl::Info(subject, self.conditions(Tok::BarI)?)
            }
            "value" => {
                let subject = self.prop()?;
                let conds = self.conditions(Tok::BarV)?;
                self.expect(Tok::Eq)?;
                RawDecl::Value(subject, conds, self.rows()?)
            }
            other => {
                return Err(err_at(
                    self.file,
                    pos,
                    ParseErrorKind::Syntax,
                    format!("unknown declaration keyword `{other}`"),
                ))
            }
        };
        self.expect(Tok::Dot)?;
        Ok((decl, pos))
    }
}

// ---------------------------------------------------------------------------
// validation

struct Validator<'a> {
    file: &'a str,
    errors: Vec<ParseError>,
    arities: BTreeMap<String, usize>,
    domains: Vec<Domain>,
}

impl<'a> Validator<'a> {
    fn err(&mut self, pos: Pos, kind: ParseErrorKind, msg: impl Into<String>) {
        self.errors.push(err_at(self.file, pos, kind, msg));
    }

    fn domain(&self, relation: &str, position: usize) -> Option<&Domain> {
        self.domains.iter().find(|d| d.relation == relation && d.position == position)
    }

    fn has_domain(&self, relation: &str) -> bool {
        self.domains.iter().any(|d| d.relation == relation)
    }

    fn check_arity(&mut self, rp: &RawProp) -> bool {
        let p = &rp.prop;
        match self.arities.get(&p.relation) {
            Some(&a) if a != p.arity() => {
                self.err(
                    rp.pos,
                    ParseErrorKind::ArityMismatch,
                    format!("`{}` used with {} arguments, declared with {a}", p.relation, p.arity()),
                );
                false
            }
            Some(_) => true,
            None => {
                self.arities.insert(p.relation.clone(), p.arity());
                true
            }
        }
    }

    /// Constants at restricted positions must be members; alternative sets
    /// may only appear where declared, matching the declaration exactly.
    /// With `expand`, variables at restricted positions become the declared
    /// set.
    fn check_positions(&mut self, rp: &RawProp, expand: bool) -> Option<Proposition> {
        let mut args = Vec::with_capacity(rp.prop.args.len());
        let mut ok = true;
        for (i, t) in rp.prop.args.iter().enumerate() {
            let dom = self.domain(&rp.prop.relation, i).map(|d| d.values.clone());
            let out = match (t, dom) {
                (Term::Variable(_), Some(set)) if expand => Term::AltSet(set),
                (Term::AltSet(s), Some(set)) => {
                    if *s != set {
                        self.err(
                            rp.pos,
                            ParseErrorKind::ArityMismatch,
                            format!(
                                "alternatives {s} at position {} of `{}` differ from the declared {set}",
                                i + 1,
                                rp.prop.relation
                            ),
                        );
                        ok = false;
                    }
                    t.clone()
                }
                (Term::AltSet(s), None) => {
                    self.err(
                        rp.pos,
                        ParseErrorKind::ArityMismatch,
                        format!(
                            "alternatives {s} at position {} of `{}` have no domain declaration",
                            i + 1,
                            rp.prop.relation
                        ),
                    );
                    ok = false;
                    t.clone()
                }
                (Term::Constant(c), Some(set)) if !set.contains(c) => {
                    self.err(
                        rp.pos,
                        ParseErrorKind::ArityMismatch,
                        format!("`{c}` is not one of {set} at position {} of `{}`", i + 1, rp.prop.relation),
                    );
                    ok = false;
                    t.clone()
                }
                _ => t.clone(),
            };
            args.push(out);
        }
        ok.then(|| Proposition::new(rp.prop.relation.clone(), args))
    }

    /// Subject of a prior, prob or info declaration: every declared position
    /// restricted, at least one such position.
    fn restricted_subject(&mut self, rp: &RawProp) -> Option<Proposition> {
        if !self.has_domain(&rp.prop.relation) {
            self.err(
                rp.pos,
                ParseErrorKind::UnknownRelation,
                format!("`{}` has no domain declaration, so it has no alternatives", rp.prop.relation),
            );
            return None;
        }
        let p = self.check_positions(rp, true)?;
        for (i, t) in p.args.iter().enumerate() {
            if self.domain(&p.relation, i).is_some() && !matches!(t, Term::AltSet(_)) {
                self.err(
                    rp.pos,
                    ParseErrorKind::ArityMismatch,
                    format!("position {} of `{}` is restricted and must stay open in a subject", i + 1, p.relation),
                );
                return None;
            }
        }
        Some(p)
    }

    fn rows_for(
        &mut self,
        axes: &[Proposition],
        rows: &[RawRow],
        width: usize,
        decl_pos: Pos,
    ) -> Option<Vec<Vec<f64>>> {
        let outcomes = alternative_outcomes(axes);
        let mut table: Vec<Option<Vec<f64>>> = vec![None; outcomes.len()];
        let mut ok = true;
        for row in rows {
            if row.keys.len() != axes.len() {
                self.err(
                    row.pos,
                    ParseErrorKind::BadDistribution,
                    format!("row names {} conditions, expected {}", row.keys.len(), axes.len()),
                );
                ok = false;
                continue;
            }
            let Some(idx) = outcomes.iter().position(|o| o.names() == row.keys) else {
                self.err(
                    row.pos,
                    ParseErrorKind::BadDistribution,
                    format!("`{}` is not a joint outcome of the conditions", row.keys.join(", ")),
                );
                ok = false;
                continue;
            };
            if table[idx].is_some() {
                self.err(
                    row.pos,
                    ParseErrorKind::BadDistribution,
                    format!("row `{}` appears twice", row.keys.join(", ")),
                );
                ok = false;
                continue;
            }
            if row.nums.len() != width {
                self.err(
                    row.pos,
                    ParseErrorKind::BadDistribution,
                    format!("row has {} entries, expected {width}", row.nums.len()),
                );
                ok = false;
                continue;
            }
            table[idx] = Some(row.nums.clone());
        }
        if let Some(missing) = table.iter().position(Option::is_none) {
            if ok {
                self.err(
                    decl_pos,
                    ParseErrorKind::BadDistribution,
                    format!("no row for condition `{}`", outcomes[missing]),
                );
            }
            return None;
        }
        ok.then(|| table.into_iter().map(Option::unwrap).collect())
    }

    fn table_error(&mut self, pos: Pos, e: TableError) {
        self.err(pos, ParseErrorKind::BadDistribution, e.to_string());
    }
}

fn validate(decls: Vec<(RawDecl, Pos)>, file: &str) -> Result<KnowledgeBase, Vec<ParseError>> {
    let mut v = Validator { file, errors: Vec::new(), arities: BTreeMap::new(), domains: Vec::new() };

    // domains first: they govern expansion everywhere else
    for (d, pos) in &decls {
        let RawDecl::Domain { relation, arity, position, values } = d else {
            continue;
        };
        let (arity, position) = (*arity, *position);
        if arity.fract() != 0.0 || arity < 1.0 || position.fract() != 0.0 || position < 1.0 || position > arity {
            v.err(
                *pos,
                ParseErrorKind::ArityMismatch,
                format!("position {position} is not within arity {arity} of `{relation}`"),
            );
            continue;
        }
        let (arity, position) = (arity as usize, position as usize - 1);
        let values = match AltSet::new(values.clone()) {
            Ok(s) => s,
            Err(e) => {
                v.err(*pos, ParseErrorKind::Syntax, e.to_string());
                continue;
            }
        };
        if v.domain(relation, position).is_some() {
            v.err(
                *pos,
                ParseErrorKind::DuplicateDomain,
                format!("position {} of `{relation}` is already declared", position + 1),
            );
            continue;
        }
        match v.arities.get(relation) {
            Some(&a) if a != arity => {
                v.err(
                    *pos,
                    ParseErrorKind::ArityMismatch,
                    format!("`{relation}` declared with arity {arity}, earlier with {a}"),
                );
                continue;
            }
            _ => {
                v.arities.insert(relation.clone(), arity);
            }
        }
        v.domains.push(Domain { relation: relation.clone(), arity, position, values });
    }

    let mut kb = KnowledgeBase { domains: v.domains.clone(), ..KnowledgeBase::default() };

    for (d, pos) in decls {
        if v.errors.len() >= MAX_ERRORS {
            break;
        }
        match d {
            RawDecl::Domain { .. } => {}
            RawDecl::Fact(rp) => {
                if !v.check_arity(&rp) {
                    continue;
                }
                if !rp.prop.is_ground() {
                    v.err(rp.pos, ParseErrorKind::Syntax, format!("fact {} is not ground", rp.prop));
                    continue;
                }
                if let Some(p) = v.check_positions(&rp, false) {
                    kb.facts.push(p);
                }
            }
            RawDecl::Logic(head, body) => {
                let mut ok = v.check_arity(&head);
                for b in &body {
                    ok &= v.check_arity(b);
                }
                if !ok {
                    continue;
                }
                let head = v.check_positions(&head, false);
                let body: Option<Vec<Proposition>> = body.iter().map(|b| v.check_positions(b, false)).collect();
                if let (Some(head), Some(body)) = (head, body) {
                    if head.is_restricted() || body.iter().any(Proposition::is_restricted) {
                        v.err(pos, ParseErrorKind::Syntax, "logic clauses cannot mention alternative sets");
                        continue;
                    }
                    kb.influences.push(Influence::Logic { head, body });
                }
            }
            RawDecl::Prior(subject, rows) => {
                if !v.check_arity(&subject) {
                    continue;
                }
                let Some(subject) = v.restricted_subject(&subject) else { continue };
                let outcomes = subject.outcomes();
                let mut probs: Vec<Option<f64>> = vec![None; outcomes.len()];
                let mut ok = true;
                for r in &rows {
                    match outcomes.iter().position(|o| o.name() == r.keys[0]) {
                        Some(i) if probs[i].is_none() => probs[i] = Some(r.nums[0]),
                        Some(_) => {
                            v.err(r.pos, ParseErrorKind::BadDistribution, format!("`{}` listed twice", r.keys[0]));
                            ok = false;
                        }
                        None => {
                            v.err(
                                r.pos,
                                ParseErrorKind::BadDistribution,
                                format!("`{}` is not an alternative of {subject}", r.keys[0]),
                            );
                            ok = false;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                if let Some(i) = probs.iter().position(Option::is_none) {
                    v.err(pos, ParseErrorKind::BadDistribution, format!("no probability for `{}`", outcomes[i].name()));
                    continue;
                }
                match Distribution::new(&subject, probs.into_iter().map(Option::unwrap).collect()) {
                    Ok(dist) => kb.influences.push(Influence::Prior { subject, dist }),
                    Err(e) => v.table_error(pos, e),
                }
            }
            RawDecl::Prob(subject, conds, rows) => {
                let mut ok = v.check_arity(&subject);
                for c in &conds {
                    ok &= v.check_arity(c);
                }
                if !ok {
                    continue;
                }
                let Some(subject) = v.restricted_subject(&subject) else { continue };
                let Some(conditions) = conds.iter().map(|c| v.check_positions(c, true)).collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                let axes: Vec<Proposition> = conditions.iter().filter(|c| c.is_restricted()).cloned().collect();
                let Some(table) = v.rows_for(&axes, &rows, subject.outcome_count(), pos) else { continue };
                match ConditionalTable::new(&subject, axes, table) {
                    Ok(table) => kb.influences.push(Influence::Prob { subject, conditions, table }),
                    Err(e) => v.table_error(pos, e),
                }
            }
            RawDecl::Info(decision, observed) => {
                let mut ok = v.check_arity(&decision);
                for c in &observed {
                    ok &= v.check_arity(c);
                }
                if !ok {
                    continue;
                }
                let Some(decision) = v.restricted_subject(&decision) else { continue };
                if let Some(observed) = observed.iter().map(|c| v.check_positions(c, true)).collect() {
                    kb.influences.push(Influence::Info { decision, observed });
                }
            }
            RawDecl::Value(subject, conds, rows) => {
                let mut ok = v.check_arity(&subject);
                for c in &conds {
                    ok &= v.check_arity(c);
                }
                if !ok {
                    continue;
                }
                if v.has_domain(&subject.prop.relation) {
                    v.err(
                        subject.pos,
                        ParseErrorKind::ArityMismatch,
                        format!("value relation `{}` cannot have restricted positions", subject.prop.relation),
                    );
                    continue;
                }
                if subject.prop.args.iter().filter(|t| t.is_variable()).count() != 1 {
                    v.err(
                        subject.pos,
                        ParseErrorKind::Syntax,
                        format!("value subject {} must have exactly one variable", subject.prop),
                    );
                    continue;
                }
                let subject = subject.prop.clone();
                let Some(conditions) = conds.iter().map(|c| v.check_positions(c, true)).collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                let axes: Vec<Proposition> = conditions.iter().filter(|c| c.is_restricted()).cloned().collect();
                let Some(table) = v.rows_for(&axes, &rows, 1, pos) else { continue };
                match ValueTable::new(axes, table.into_iter().map(|r| r[0]).collect()) {
                    Ok(table) => kb.influences.push(Influence::Value { subject, conditions, table }),
                    Err(e) => v.table_error(pos, e),
                }
            }
        }
    }

    if v.errors.is_empty() {
        Ok(kb)
    } else {
        v.errors.truncate(MAX_ERRORS);
        Err(v.errors)
    }
}

/// Parses a knowledge base; spans name the file `<input>`.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, Vec<ParseError>> {
    parse_kb_named(text, "<input>")
}

pub fn parse_kb_named(text: &str, file: &str) -> Result<KnowledgeBase, Vec<ParseError>> {
    let mut errors = Vec::new();
    let toks = lex(text, file, &mut errors);
    let mut p = Parser { toks, at: 0, file };
    let mut decls = Vec::new();
    while *p.peek() != Tok::Eof && errors.len() < MAX_ERRORS {
        match p.decl() {
            Ok(d) => decls.push(d),
            Err(e) => {
                errors.push(e);
                p.recover();
            }
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| (e.span.line, e.span.column));
        errors.truncate(MAX_ERRORS);
        return Err(errors);
    }
    validate(decls, file)
}

/// Parses `?logic p1, p2.`, `?dist p.` or `?decide p.`.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let file = "<query>";
    let mut errors = Vec::new();
    let toks = lex(text, file, &mut errors);
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    let mut p = Parser { toks, at: 0, file };
    let kind = match p.bump() {
        Tok::Var(k) if matches!(k.as_str(), "logic" | "dist" | "decide") => k,
        other => {
            return Err(err_at(
                file,
                Pos { line: 1, column: 1 },
                ParseErrorKind::Syntax,
                format!("expected `?logic`, `?dist` or `?decide`, found {}", other.describe()),
            ))
        }
    };
    let mut goals = p.prop_list()?;
    p.expect(Tok::Dot)?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("unexpected input after the query"));
    }
    match kind.as_str() {
        "logic" => Ok(Query::Logic(goals.into_iter().map(|g| g.prop).collect())),
        _ if goals.len() != 1 => {
            Err(err_at(file, goals[1].pos, ParseErrorKind::Syntax, format!("`?{kind}` takes a single proposition")))
        }
        "dist" => Ok(Query::Dist(goals.remove(0).prop)),
        _ => Ok(Query::Decide(goals.remove(0).prop)),
    }
}

/// Checks a parsed query against the knowledge base's domain declarations:
/// written alternative sets must match, constants at restricted positions
/// must be members.
pub fn validate_query(query: &Query, kb: &KnowledgeBase) -> Result<(), ParseError> {
    let span = SourceSpan { file: "<query>".into(), line: 1, column: 1 };
    for g in query.goals() {
        for (i, t) in g.args.iter().enumerate() {
            let dom = kb.domain(&g.relation, i).map(|d| &d.values);
            let bad = match (t, dom) {
                (Term::AltSet(s), Some(set)) if s != set => Some(format!("{s} differs from the declared {set}")),
                (Term::AltSet(s), None) => Some(format!("{s} has no domain declaration")),
                (Term::Constant(c), Some(set)) if !set.contains(c) => Some(format!("`{c}` is not one of {set}")),
                _ => None,
            };
            if let Some(msg) = bad {
                return Err(ParseError {
                    span: span.clone(),
                    kind: ParseErrorKind::ArityMismatch,
                    message: format!("position {} of `{}`: {msg}", i + 1, g.relation),
                });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// writer

fn join_props(ps: &[Proposition]) -> String {
    ps.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn write_rows(out: &mut String, axes: &[Proposition], rows: impl Iterator<Item = Vec<f64>>) {
    out.push_str("{\n");
    for (cond, nums) in alternative_outcomes(axes).iter().zip(rows) {
        let nums: Vec<String> = nums.iter().map(|n| format!("{n}")).collect();
        out.push_str(&format!("  {}: {};\n", cond.names().join(", "), nums.join(", ")));
    }
    out.push('}');
}

/// Renders a knowledge base in the `.ikb` format: domains, then facts, then
/// influences, each group in declaration order. Numbers use the shortest
/// representation that reads back to the same `f64`.
pub fn serialize_kb(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for d in &kb.domains {
        out.push_str(&format!("domain {}/{} @{} {}.\n", d.relation, d.arity, d.position + 1, d.values));
    }
    for f in &kb.facts {
        out.push_str(&format!("fact {f}.\n"));
    }
    for inf in &kb.influences {
        match inf {
            Influence::Logic { head, body } if body.is_empty() => out.push_str(&format!("logic {head}.\n")),
            Influence::Logic { head, body } => out.push_str(&format!("logic {head} <- {}.\n", join_props(body))),
            Influence::Prior { subject, dist } => {
                let entries: Vec<String> = dist.iter().map(|(o, p)| format!("{}: {p}", o.name())).collect();
                out.push_str(&format!("prior {subject} = {{{}}}.\n", entries.join(", ")));
            }
            Influence::Prob { subject, conditions, table } => {
                out.push_str(&format!("prob {subject} "));
                if !conditions.is_empty() {
                    out.push_str(&format!("|p {} ", join_props(conditions)));
                }
                out.push_str("= ");
                write_rows(&mut out, &table.row_axes, table.rows.iter().cloned());
                out.push_str(".\n");
            }
            Influence::Info { decision, observed } => {
                out.push_str(&format!("info {decision}"));
                if !observed.is_empty() {
                    out.push_str(&format!(" |i {}", join_props(observed)));
                }
                out.push_str(".\n");
            }
            Influence::Value { subject, conditions, table } => {
                out.push_str(&format!("value {subject} "));
                if !conditions.is_empty() {
                    out.push_str(&format!("|v {} ", join_props(conditions)));
                }
                out.push_str("= ");
                write_rows(&mut out, &table.row_axes, table.values.iter().map(|v| vec![*v]));
                out.push_str(".\n");
            }
        }
    }
    out
}
