//! Reader and writer for the Prolog-style fact files describing applications,
//! infrastructures, thresholds and change-event scripts.
//!
//! The grammar is a closed subset of Prolog facts:
//!
//! ```text
//! file  := { fact }
//! fact  := atom [ "(" term { "," term } ")" ] "."
//! term  := atom | number | list
//! list  := "[" [ atom { "," atom } ] "]"
//! atom  := [a-z][A-Za-z0-9_]*
//! number:= digits [ "." digits ]
//! ```
//!
//! `%` starts a comment running to the end of the line. The atom `inf` stands
//! for unbounded hardware capacity.

mod lexer;
mod write;

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::model::{
    Amount, AppSpec, Capacity, ChangeEvent, Id, Infrastructure, Labels, LinkSpec, NodeSpec, S2SReq, ServiceSpec,
    Thresholds,
};
use lexer::{tokenize, Tok};

pub use write::{parse_placement, serialize_app, serialize_infrastructure, serialize_placement, serialize_problem};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownFunctor,
    ArityMismatch,
    DuplicateKey,
    DanglingReference,
    InvalidValue,
    EmptyScript,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownFunctor => "unknown functor",
            ParseErrorKind::ArityMismatch => "arity mismatch",
            ParseErrorKind::DuplicateKey => "duplicate key",
            ParseErrorKind::DanglingReference => "dangling reference",
            ParseErrorKind::InvalidValue => "invalid value",
            ParseErrorKind::EmptyScript => "empty script",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, pos: Pos, message: impl Into<String>) -> Self {
        ParseError { kind, pos, message: message.into() }
    }
}

/// An application and/or infrastructure loaded from one file.
#[derive(Clone, Debug, Default)]
pub struct ProblemFile {
    pub app: Option<AppSpec>,
    pub infra: Infrastructure,
    pub hw_threshold: Option<Amount>,
    pub bw_threshold: Option<Amount>,
}

impl ProblemFile {
    /// Declared thresholds, zero where absent.
    pub fn thresholds(&self) -> Thresholds {
        Thresholds { hw: self.hw_threshold.unwrap_or(Amount::ZERO), bw: self.bw_threshold.unwrap_or(Amount::ZERO) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptItem {
    Event(ChangeEvent),
    Query,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventScript(pub Vec<ScriptItem>);

#[derive(Clone, Debug)]
pub(crate) enum Term {
    Atom(Id, Pos),
    Number(String, Pos),
    List(Vec<Id>, Pos),
}

impl Term {
    fn pos(&self) -> Pos {
        match self {
            Term::Atom(_, p) | Term::Number(_, p) | Term::List(_, p) => *p,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Fact {
    pub functor: String,
    pub args: Vec<Term>,
    pub pos: Pos,
}

impl Fact {
    fn atom(&self, i: usize) -> Result<Id, ParseError> {
        match &self.args[i] {
            Term::Atom(a, _) => Ok(a.clone()),
            t => Err(invalid(t.pos(), format!("argument {} of {} must be an atom", i + 1, self.functor))),
        }
    }

    fn list(&self, i: usize) -> Result<Labels, ParseError> {
        match &self.args[i] {
            Term::List(items, p) => {
                let set: Labels = items.iter().cloned().collect();
                if set.len() != items.len() {
                    return Err(ParseError::new(ParseErrorKind::DuplicateKey, *p, "repeated list element"));
                }
                Ok(set)
            }
            t => Err(invalid(t.pos(), format!("argument {} of {} must be a list", i + 1, self.functor))),
        }
    }

    fn ordered_list(&self, i: usize) -> Result<Vec<Id>, ParseError> {
        match &self.args[i] {
            Term::List(items, _) => Ok(items.clone()),
            t => Err(invalid(t.pos(), format!("argument {} of {} must be a list", i + 1, self.functor))),
        }
    }

    fn amount(&self, i: usize) -> Result<Amount, ParseError> {
        match &self.args[i] {
            Term::Number(n, p) => n.parse().map_err(|e| invalid(*p, format!("`{n}`: {e}"))),
            t => Err(invalid(t.pos(), format!("argument {} of {} must be a finite number", i + 1, self.functor))),
        }
    }

    fn capacity(&self, i: usize) -> Result<Capacity, ParseError> {
        match &self.args[i] {
            Term::Atom(a, _) if a.as_str() == "inf" => Ok(Capacity::Infinite),
            _ => self.amount(i).map(Capacity::Finite),
        }
    }
}

fn invalid(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::InvalidValue, pos, msg)
}

struct FactParser<'a> {
    toks: Vec<(Tok<'a>, Pos)>,
    at: usize,
    end: Pos,
    interned: HashSet<Id>,
}

impl<'a> FactParser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let toks = tokenize(src)?;
        let last_line = src.lines().count().max(1);
        let end = Pos { line: last_line, column: src.lines().last().map_or(0, str::len) + 1 };
        Ok(FactParser { toks, at: 0, end, interned: HashSet::new() })
    }

    fn intern(&mut self, s: &str) -> Id {
        if let Some(id) = self.interned.get(s) {
            return id.clone();
        }
        let id = Id::new(s);
        self.interned.insert(id.clone());
        id
    }

    fn peek(&self) -> Option<&(Tok<'a>, Pos)> {
        self.toks.get(self.at)
    }

    fn next(&mut self, expected: &str) -> Result<(Tok<'a>, Pos), ParseError> {
        match self.toks.get(self.at) {
            Some(t) => {
                self.at += 1;
                Ok(t.clone())
            }
            None => Err(ParseError::new(
                ParseErrorKind::Syntax,
                self.end,
                format!("unexpected end of input, expected {expected}"),
            )),
        }
    }

    fn expect(&mut self, want: Tok<'static>, expected: &str) -> Result<Pos, ParseError> {
        let (t, p) = self.next(expected)?;
        if t == want {
            Ok(p)
        } else {
            Err(unexpected(&t, p, expected))
        }
    }

    fn facts(mut self) -> Result<Vec<Fact>, ParseError> {
        let mut out = Vec::new();
        while self.peek().is_some() {
            out.push(self.fact()?);
        }
        Ok(out)
    }

    fn fact(&mut self) -> Result<Fact, ParseError> {
        let (t, pos) = self.next("a fact")?;
        let Tok::Atom(functor) = t else {
            return Err(unexpected(&t, pos, "a functor"));
        };
        let mut args = Vec::new();
        if matches!(self.peek(), Some((Tok::LParen, _))) {
            self.at += 1;
            loop {
                args.push(self.term()?);
                let (t, p) = self.next("`,` or `)`")?;
                match t {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    other => return Err(unexpected(&other, p, "`,` or `)`")),
                }
            }
        }
        self.expect(Tok::Period, "`.` terminating the fact")?;
        Ok(Fact { functor: functor.to_string(), args, pos })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let (t, p) = self.next("an argument")?;
        match t {
            Tok::Atom(a) => Ok(Term::Atom(self.intern(a), p)),
            Tok::Number(n) => Ok(Term::Number(n.to_string(), p)),
            Tok::LBracket => {
                let mut items = Vec::new();
                if matches!(self.peek(), Some((Tok::RBracket, _))) {
                    self.at += 1;
                    return Ok(Term::List(items, p));
                }
                loop {
                    let (t, q) = self.next("a list element")?;
                    match t {
                        Tok::Atom(a) => items.push(self.intern(a)),
                        other => return Err(unexpected(&other, q, "an atom list element")),
                    }
                    let (t, q) = self.next("`,` or `]`")?;
                    match t {
                        Tok::Comma => continue,
                        Tok::RBracket => break,
                        other => return Err(unexpected(&other, q, "`,` or `]`")),
                    }
                }
                Ok(Term::List(items, p))
            }
            other => Err(unexpected(&other, p, "an argument")),
        }
    }
}

fn unexpected(t: &Tok<'_>, p: Pos, expected: &str) -> ParseError {
    ParseError::new(ParseErrorKind::Syntax, p, format!("expected {expected}, found {}", t.describe()))
}

pub(crate) fn parse_facts(text: &str) -> Result<Vec<Fact>, ParseError> {
    FactParser::new(text)?.facts()
}

fn check_arity(f: &Fact, arity: usize) -> Result<(), ParseError> {
    if f.args.len() != arity {
        return Err(ParseError::new(
            ParseErrorKind::ArityMismatch,
            f.pos,
            format!("{} expects {} arguments, got {}", f.functor, arity, f.args.len()),
        ));
    }
    Ok(())
}

fn duplicate(pos: Pos, what: String) -> ParseError {
    ParseError::new(ParseErrorKind::DuplicateKey, pos, what)
}

fn dangling(pos: Pos, what: String) -> ParseError {
    ParseError::new(ParseErrorKind::DanglingReference, pos, what)
}

fn node_fact(f: &Fact) -> Result<NodeSpec, ParseError> {
    check_arity(f, 4)?;
    Ok(NodeSpec { id: f.atom(0)?, sw_caps: f.list(1)?, hw_caps: f.capacity(2)?, thing_caps: f.list(3)? })
}

fn link_fact(f: &Fact) -> Result<LinkSpec, ParseError> {
    check_arity(f, 4)?;
    let link = LinkSpec { src: f.atom(0)?, dst: f.atom(1)?, latency: f.amount(2)?, bandwidth: f.amount(3)? };
    if link.src == link.dst {
        return Err(invalid(f.pos, format!("link from `{}` to itself", link.src)));
    }
    Ok(link)
}

/// Parses an application and/or infrastructure description.
pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let facts = parse_facts(text)?;

    let mut app_decl: Option<(Id, Vec<Id>, Pos)> = None;
    let mut services: HashMap<Id, (ServiceSpec, Pos)> = HashMap::new();
    let mut s2s: Vec<(S2SReq, Pos)> = Vec::new();
    let mut s2s_keys = HashSet::new();
    let mut links: Vec<(LinkSpec, Pos)> = Vec::new();
    let mut out = ProblemFile::default();

    for f in &facts {
        match f.functor.as_str() {
            "application" | "app" => {
                check_arity(f, 2)?;
                if app_decl.is_some() {
                    return Err(duplicate(f.pos, "second application declaration".into()));
                }
                app_decl = Some((f.atom(0)?, f.ordered_list(1)?, f.pos));
            }
            "service" => {
                check_arity(f, 4)?;
                let s =
                    ServiceSpec { id: f.atom(0)?, sw_reqs: f.list(1)?, hw_reqs: f.amount(2)?, thing_reqs: f.list(3)? };
                if services.contains_key(&s.id) {
                    return Err(duplicate(f.pos, format!("service `{}` declared twice", s.id)));
                }
                services.insert(s.id.clone(), (s, f.pos));
            }
            "s2s" => {
                check_arity(f, 4)?;
                let r =
                    S2SReq { from: f.atom(0)?, to: f.atom(1)?, max_latency: f.amount(2)?, min_bandwidth: f.amount(3)? };
                if r.from == r.to {
                    return Err(invalid(f.pos, format!("requirement from `{}` to itself", r.from)));
                }
                if r.max_latency.is_zero() {
                    return Err(invalid(f.args[2].pos(), "latency bound must be positive"));
                }
                if !s2s_keys.insert((r.from.clone(), r.to.clone())) {
                    return Err(duplicate(f.pos, format!("s2s {} -> {} declared twice", r.from, r.to)));
                }
                s2s.push((r, f.pos));
            }
            "node" => {
                let n = node_fact(f)?;
                let id = n.id.clone();
                out.infra.add_node(n).map_err(|_| duplicate(f.pos, format!("node `{id}` declared twice")))?;
            }
            "link" => {
                let l = link_fact(f)?;
                links.push((l, f.pos));
            }
            "hwTh" | "bwTh" => {
                check_arity(f, 1)?;
                let v = f.amount(0)?;
                let slot = if f.functor == "hwTh" { &mut out.hw_threshold } else { &mut out.bw_threshold };
                if slot.replace(v).is_some() {
                    return Err(duplicate(f.pos, format!("{} declared twice", f.functor)));
                }
            }
            other => {
                return Err(ParseError::new(
                    ParseErrorKind::UnknownFunctor,
                    f.pos,
                    format!("unknown functor `{other}`"),
                ))
            }
        }
    }

    for (l, pos) in links {
        for end in [&l.src, &l.dst] {
            if !out.infra.contains_node(end) {
                return Err(dangling(pos, format!("link endpoint `{end}` is not a declared node")));
            }
        }
        let (s, d) = (l.src.clone(), l.dst.clone());
        out.infra.add_link(l).map_err(|_| duplicate(pos, format!("link {s} -> {d} declared twice")))?;
    }

    for (r, pos) in &s2s {
        for end in [&r.from, &r.to] {
            if !services.contains_key(end) {
                return Err(dangling(*pos, format!("s2s endpoint `{end}` is not a declared service")));
            }
        }
    }

    match app_decl {
        Some((id, listed, pos)) => {
            let mut ordered = Vec::with_capacity(listed.len());
            let mut seen = HashSet::new();
            for sid in listed {
                if !seen.insert(sid.clone()) {
                    return Err(duplicate(pos, format!("service `{sid}` listed twice")));
                }
                match services.remove(&sid) {
                    Some((s, _)) => ordered.push(s),
                    None => return Err(dangling(pos, format!("service `{sid}` has no service/4 fact"))),
                }
            }
            if let Some((s, spos)) = services.values().min_by_key(|(_, p)| (p.line, p.column)) {
                return Err(dangling(*spos, format!("service `{}` is not part of application `{id}`", s.id)));
            }
            let reqs = s2s.into_iter().map(|(r, _)| r).collect();
            out.app = Some(AppSpec::new(id, ordered, reqs).map_err(|e| invalid(pos, e.to_string()))?);
        }
        None => {
            if let Some((s, pos)) = services.values().min_by_key(|(_, p)| (p.line, p.column)) {
                return Err(dangling(*pos, format!("service `{}` declared without an application", s.id)));
            }
            if let Some((r, pos)) = s2s.first() {
                return Err(dangling(*pos, format!("s2s {} -> {} declared without an application", r.from, r.to)));
            }
        }
    }
    Ok(out)
}

/// Parses a change-event script.
pub fn parse_events(text: &str) -> Result<EventScript, ParseError> {
    let facts = parse_facts(text)?;
    if facts.is_empty() {
        return Err(ParseError::new(ParseErrorKind::EmptyScript, Pos { line: 1, column: 1 }, "script has no events"));
    }
    let mut items = Vec::with_capacity(facts.len());
    for f in &facts {
        let item = match f.functor.as_str() {
            "set_node" => ScriptItem::Event(ChangeEvent::UpsertNode(node_fact(f)?)),
            "remove_node" => {
                check_arity(f, 1)?;
                ScriptItem::Event(ChangeEvent::RemoveNode(f.atom(0)?))
            }
            "set_link" => ScriptItem::Event(ChangeEvent::UpsertLink(link_fact(f)?)),
            "remove_link" => {
                check_arity(f, 2)?;
                ScriptItem::Event(ChangeEvent::RemoveLink(f.atom(0)?, f.atom(1)?))
            }
            "query" => {
                check_arity(f, 0)?;
                ScriptItem::Query
            }
            other => {
                return Err(ParseError::new(ParseErrorKind::UnknownFunctor, f.pos, format!("unknown event `{other}`")))
            }
        };
        items.push(item);
    }
    Ok(EventScript(items))
}
