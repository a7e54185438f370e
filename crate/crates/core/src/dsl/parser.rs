use std::collections::BTreeMap;
use std::fmt;

use super::types::*;
use super::validate::{validate, ValidationIssue};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DslError {
    #[error("{0}")]
    Parse(ParseError),
    #[error("{} validation issue(s): {}", .0.len(), .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ValidationIssue>),
}

impl DslError {
    /// Render in `file:line:col: message` form, one line per problem.
    pub fn located(&self, file: &str) -> String {
        match self {
            DslError::Parse(e) => format!("{file}:{e}"),
            DslError::Validation(issues) => issues
                .iter()
                .map(|i| format!("{file}:{}:{}: {}", i.line.unwrap_or(0), i.col.unwrap_or(0), i))
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Newline,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err<T>(line: usize, col: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        col,
        message: message.into(),
    })
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut open: Vec<(char, usize, usize)> = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: tl, col: tc });
        match c {
            '\n' => {
                if open.is_empty() {
                    push(&mut out, Tok::Newline);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' | '[' => {
                open.push((c, tl, tc));
                push(&mut out, if c == '(' { Tok::LParen } else { Tok::LBracket });
            }
            ')' | ']' => {
                let want = if c == ')' { '(' } else { '[' };
                match open.pop() {
                    Some((o, _, _)) if o == want => {}
                    Some((o, ol, oc)) => {
                        return err(tl, tc, format!("'{c}' does not match '{o}' opened at {ol}:{oc}"));
                    }
                    None => return err(tl, tc, format!("unmatched '{c}'")),
                }
                push(&mut out, if c == ')' { Tok::RParen } else { Tok::RBracket });
            }
            ',' => push(&mut out, Tok::Comma),
            '=' => push(&mut out, Tok::Eq),
            '\'' | '"' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                col += 1;
                loop {
                    if i >= chars.len() || chars[i] == '\n' {
                        return err(tl, tc, "unterminated string literal");
                    }
                    let ch = chars[i];
                    if ch == quote {
                        break;
                    }
                    if ch == '\\' {
                        i += 1;
                        col += 1;
                        match chars.get(i) {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(&e @ ('\\' | '\'' | '"')) => s.push(e),
                            Some(&e) => return err(line, col, format!("unknown escape '\\{e}'")),
                            None => return err(tl, tc, "unterminated string literal"),
                        }
                    } else {
                        s.push(ch);
                    }
                    i += 1;
                    col += 1;
                }
                push(&mut out, Tok::Str(s));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                push(&mut out, Tok::Ident(word));
                continue;
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '.' | '/' | '-' | '+')) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                push(&mut out, Tok::Num(word));
                continue;
            }
            other => return err(tl, tc, format!("unexpected character {other:?}")),
        }
        i += 1;
        col += 1;
    }
    if let Some((o, ol, oc)) = open.last() {
        return err(*ol, *oc, format!("'{o}' is never closed"));
    }
    out.push(Token {
        tok: Tok::Newline,
        line,
        col,
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Ident(String),
    Str(String),
    Num(String),
    List(Vec<Arg>),
}

#[derive(Clone, Debug, PartialEq)]
struct Arg {
    key: Option<String>,
    value: Value,
    line: usize,
    col: usize,
}

struct Call {
    name: String,
    args: Vec<Arg>,
    line: usize,
    col: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            err(t.line, t.col, format!("expected {what}, found {}", describe(&t.tok)))
        }
    }

    fn statement(&mut self) -> Result<Option<Call>, ParseError> {
        while !self.at_end() && self.peek().tok == Tok::Newline {
            self.next();
        }
        if self.at_end() {
            return Ok(None);
        }
        let t = self.next();
        let name = match t.tok {
            Tok::Ident(n) => n,
            other => return err(t.line, t.col, format!("expected statement name, found {}", describe(&other))),
        };
        self.expect(Tok::LParen, "'('")?;
        let args = self.args(Tok::RParen)?;
        let end = self.next();
        if end.tok != Tok::Newline {
            return err(end.line, end.col, format!("expected end of line after statement, found {}", describe(&end.tok)));
        }
        Ok(Some(Call {
            name,
            args,
            line: t.line,
            col: t.col,
        }))
    }

    fn args(&mut self, close: Tok) -> Result<Vec<Arg>, ParseError> {
        let mut out = Vec::new();
        if self.peek().tok == close {
            self.next();
            return Ok(out);
        }
        loop {
            let start = self.peek().clone();
            let mut key = None;
            if let Tok::Ident(k) = &start.tok {
                if self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Eq) {
                    key = Some(k.clone());
                    self.next();
                    self.next();
                }
            }
            let value = self.value()?;
            out.push(Arg {
                key,
                value,
                line: start.line,
                col: start.col,
            });
            let t = self.next();
            if t.tok == close {
                return Ok(out);
            }
            if t.tok != Tok::Comma {
                return err(t.line, t.col, format!("expected ',' or closing bracket, found {}", describe(&t.tok)));
            }
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        let t = self.next();
        Ok(match t.tok {
            Tok::Ident(s) => Value::Ident(s),
            Tok::Str(s) => Value::Str(s),
            Tok::Num(s) => Value::Num(s),
            Tok::LBracket => Value::List(self.args(Tok::RBracket)?),
            other => return err(t.line, t.col, format!("expected a value, found {}", describe(&other))),
        })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Num(s) => format!("number '{s}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::LBracket => "'['".into(),
        Tok::RBracket => "']'".into(),
        Tok::Comma => "','".into(),
        Tok::Eq => "'='".into(),
        Tok::Newline => "end of line".into(),
    }
}

fn is_none(v: &Value) -> bool {
    matches!(v, Value::Ident(s) if s == "None")
}

fn scalar(arg: &Arg, what: &str) -> Result<String, ParseError> {
    match &arg.value {
        Value::Ident(s) | Value::Str(s) | Value::Num(s) => Ok(s.clone()),
        Value::List(_) => err(arg.line, arg.col, format!("{what} must be a scalar, not a list")),
    }
}

fn name_arg(arg: &Arg, what: &str) -> Result<String, ParseError> {
    let s = scalar(arg, what)?;
    if !is_identifier(&s) {
        return err(arg.line, arg.col, format!("{what} '{s}' is not a valid identifier"));
    }
    Ok(s)
}

fn opt_kind(arg: &Arg, what: &str) -> Result<Option<String>, ParseError> {
    if is_none(&arg.value) {
        Ok(None)
    } else {
        scalar(arg, what).map(Some)
    }
}

fn name_list(arg: &Arg, what: &str) -> Result<Vec<String>, ParseError> {
    match &arg.value {
        v if is_none(v) => Ok(Vec::new()),
        Value::List(items) => items
            .iter()
            .map(|a| {
                if a.key.is_some() {
                    return err(a.line, a.col, format!("{what} entries cannot be key=value"));
                }
                name_arg(a, what)
            })
            .collect(),
        _ => err(arg.line, arg.col, format!("{what} must be a list or None")),
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse a constraint value such as `'10s'`, `'<=500ms'` or `'>=100req/s'`.
pub fn parse_constraint(metric: &str, text: &str) -> Result<PerfConstraint, String> {
    let metric = Metric::from_keyword(metric).ok_or_else(|| format!("unknown constraint metric '{metric}'"))?;
    let t = text.trim();
    let (direction, rest) = if let Some(r) = t.strip_prefix("<=") {
        (Direction::Upper, r)
    } else if let Some(r) = t.strip_prefix(">=") {
        (Direction::Lower, r)
    } else {
        (metric.default_direction(), t)
    };
    let rest = rest.trim();
    let split = rest
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || c == '-' || c == '+'))
        .unwrap_or(rest.len());
    let (num, unit) = rest.split_at(split);
    let bound: f64 = num.parse().map_err(|_| format!("bad constraint number '{num}'"))?;
    let unit = match (metric, unit.trim()) {
        (Metric::ExecTime | Metric::Latency, "us") => Unit::Micros,
        (Metric::ExecTime | Metric::Latency, "ms") => Unit::Millis,
        (Metric::ExecTime | Metric::Latency, "s" | "") => Unit::Seconds,
        (Metric::Throughput, "req/s" | "rps" | "") => Unit::ReqPerSec,
        (Metric::Cost, "fs" | "") => Unit::FunctionSeconds,
        (_, u) => return Err(format!("unit '{u}' not valid for {}", metric.keyword())),
    };
    Ok(PerfConstraint {
        metric,
        bound,
        unit,
        direction,
    })
}

/// Parse without semantic validation. Syntax problems and statement-shape
/// problems are reported as located `ParseError`s.
pub fn parse_unchecked(src: &str) -> Result<(TaskGraph, SourceMap), ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut g = TaskGraph::default();
    let mut map = SourceMap::default();
    let mut seen_graph = false;
    let mut declared_parents: BTreeMap<String, Option<Vec<String>>> = BTreeMap::new();
    let mut declared_children: BTreeMap<String, Option<Vec<String>>> = BTreeMap::new();

    while let Some(call) = p.statement()? {
        let pos = (call.line, call.col);
        let positional: Vec<&Arg> = call.args.iter().filter(|a| a.key.is_none()).collect();
        let keyed: Vec<&Arg> = call.args.iter().filter(|a| a.key.is_some()).collect();
        if let Some(a) = call.args.iter().skip_while(|a| a.key.is_none()).find(|a| a.key.is_none()) {
            return err(a.line, a.col, "positional argument after keyword argument");
        }
        match call.name.as_str() {
            "TaskGraph" => {
                if seen_graph {
                    return err(call.line, call.col, "duplicate TaskGraph statement");
                }
                seen_graph = true;
                map.graph = Some(pos);
                let mut list_arg = positional.first().copied();
                let mut cons_arg = positional.get(1).copied();
                if positional.len() > 2 {
                    let a = positional[2];
                    return err(a.line, a.col, "TaskGraph takes at most two arguments");
                }
                for a in &keyed {
                    match a.key.as_deref() {
                        Some("list" | "edgeList") => list_arg = Some(*a),
                        Some("constraint" | "constraints") => cons_arg = Some(*a),
                        Some(k) => return err(a.line, a.col, format!("unknown TaskGraph argument '{k}'")),
                        None => unreachable!(),
                    }
                }
                if let Some(a) = list_arg {
                    g.listed = name_list(a, "task list entry")?;
                }
                if let Some(a) = cons_arg {
                    let items = match &a.value {
                        v if is_none(v) => Vec::new(),
                        Value::List(items) => items.clone(),
                        _ => return err(a.line, a.col, "constraint must be a list"),
                    };
                    for c in items {
                        let Some(k) = &c.key else {
                            return err(c.line, c.col, "constraint entries must be metric='bound'");
                        };
                        let text = scalar(&c, "constraint bound")?;
                        let pc = parse_constraint(k, &text).map_err(|m| ParseError {
                            line: c.line,
                            col: c.col,
                            message: m,
                        })?;
                        g.constraints.push(pc);
                    }
                }
            }
            "Task" => {
                if positional.len() != 4 {
                    return err(
                        call.line,
                        call.col,
                        format!("Task expects name, dataIn, dataOut, code; got {} positional argument(s)", positional.len()),
                    );
                }
                let name = name_arg(positional[0], "task name")?;
                if !seen_graph {
                    return err(call.line, call.col, format!("Task '{name}' appears before the TaskGraph statement"));
                }
                let mut t = TaskDef::new(name.clone());
                t.data_in = opt_kind(positional[1], "dataIn")?;
                t.data_out = opt_kind(positional[2], "dataOut")?;
                t.code_ref = scalar(positional[3], "code")?;
                let mut parents = None;
                let mut children = None;
                for a in &keyed {
                    match a.key.as_deref().unwrap() {
                        "parentTask" => parents = Some(name_list(a, "parentTask")?),
                        "childTask" => children = Some(name_list(a, "childTask")?),
                        k => {
                            if t.task_args.contains_key(k) {
                                return err(a.line, a.col, format!("duplicate task argument '{k}'"));
                            }
                            t.task_args.insert(k.to_string(), scalar(a, "task argument")?);
                        }
                    }
                }
                map.tasks.entry(name.clone()).or_insert(pos);
                declared_parents.insert(name.clone(), parents);
                declared_children.insert(name.clone(), children);
                g.tasks.push(t);
            }
            kw => {
                if let Some(kind) = OrderingKind::from_keyword(kw) {
                    if positional.len() != 2 || !keyed.is_empty() {
                        return err(call.line, call.col, format!("{kw} expects exactly two positional arguments"));
                    }
                    let first = name_arg(positional[0], "task name")?;
                    let second = if kind == OrderingKind::Synchronize {
                        scalar(positional[1], "condition")?
                    } else {
                        name_arg(positional[1], "task name")?
                    };
                    let o = OrderingDirective::new(kind, first, second);
                    if !g.orderings.contains(&o) {
                        map.orderings.push(pos);
                        g.orderings.push(o);
                    }
                } else if let Some(kind) = DirectiveKind::from_keyword(kw) {
                    if positional.is_empty() {
                        return err(call.line, call.col, format!("{kw} expects a task name"));
                    }
                    let mut d = ManagementDirective::new(kind, name_arg(positional[0], "task name")?);
                    if positional.len() > 2 || (positional.len() == 2 && kind.positional_key().is_none()) {
                        let a = positional[positional.len() - 1];
                        return err(a.line, a.col, format!("too many positional arguments for {kw}"));
                    }
                    if let (Some(a), Some(key)) = (positional.get(1), kind.positional_key()) {
                        d.payload.insert(key.to_string(), scalar(a, key)?);
                    }
                    for a in &keyed {
                        let k = a.key.clone().unwrap();
                        if d.payload.contains_key(&k) {
                            return err(a.line, a.col, format!("duplicate argument '{k}'"));
                        }
                        d.payload.insert(k, scalar(a, "directive argument")?);
                    }
                    map.directives.push(pos);
                    g.directives.push(d);
                } else {
                    return err(call.line, call.col, format!("unknown statement '{kw}'"));
                }
            }
        }
    }

    // inline sync arguments imply a Synchronize ordering
    for t in &g.tasks {
        if let Some(cond) = t.sync_condition() {
            let o = OrderingDirective::new(OrderingKind::Synchronize, t.name.clone(), cond);
            if !g.orderings.contains(&o) {
                map.orderings.push(map.tasks[&t.name]);
                g.orderings.push(o);
            }
        }
    }

    // union of edges declared from either side
    let names: Vec<String> = g.tasks.iter().map(|t| t.name.clone()).collect();
    let mut edges: Vec<(String, String)> = Vec::new();
    for n in &names {
        for c in declared_children.get(n).cloned().flatten().unwrap_or_default() {
            if !edges.contains(&(n.clone(), c.clone())) {
                edges.push((n.clone(), c));
            }
        }
        for pa in declared_parents.get(n).cloned().flatten().unwrap_or_default() {
            if !edges.contains(&(pa.clone(), n.clone())) {
                edges.push((pa, n.clone()));
            }
        }
    }
    for t in g.tasks.iter_mut() {
        let parents: Vec<String> = edges.iter().filter(|(_, c)| *c == t.name).map(|(p, _)| p.clone()).collect();
        let children: Vec<String> = edges.iter().filter(|(p, _)| *p == t.name).map(|(_, c)| c.clone()).collect();
        // keep the author's order where given; append inferred entries
        t.parents = merge_order(declared_parents.get(&t.name).cloned().flatten(), parents);
        t.children = merge_order(declared_children.get(&t.name).cloned().flatten(), children);
    }
    // inconsistencies between explicitly given lists
    for (p, c) in &edges {
        let child_says = declared_parents.get(c).cloned().flatten();
        let parent_says = declared_children.get(p).cloned().flatten();
        if let (Some(cp), Some(pc)) = (&child_says, &parent_says) {
            if !cp.contains(p) || !pc.contains(c) {
                map.inconsistent.push((p.clone(), c.clone()));
            }
        }
    }
    Ok((g, map))
}

fn merge_order(declared: Option<Vec<String>>, all: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in declared.unwrap_or_default().into_iter().chain(all) {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

/// Statement positions retained for located validation messages.
#[derive(Clone, Debug, Default)]
pub struct SourceMap {
    pub graph: Option<(usize, usize)>,
    pub tasks: BTreeMap<String, (usize, usize)>,
    pub orderings: Vec<(usize, usize)>,
    pub directives: Vec<(usize, usize)>,
    /// Edges where both endpoints listed each other inconsistently.
    pub inconsistent: Vec<(String, String)>,
}

/// Parse and validate a program.
pub fn parse_program(src: &str) -> Result<TaskGraph, DslError> {
    let (g, map) = parse_unchecked(src).map_err(DslError::Parse)?;
    let issues = validate_located(&g, &map);
    if issues.is_empty() {
        Ok(g)
    } else {
        Err(DslError::Validation(issues))
    }
}

/// Validation issues annotated with source positions.
pub fn validate_located(g: &TaskGraph, map: &SourceMap) -> Vec<ValidationIssue> {
    let mut issues = validate(g);
    for (p, c) in &map.inconsistent {
        if !issues.iter().any(|i| i.rule == super::validate::Rule::InconsistentEdge && i.subject == *c) {
            issues.push(ValidationIssue::new(
                super::validate::Rule::InconsistentEdge,
                c.clone(),
                format!("parentTask of '{c}' and childTask of '{p}' disagree"),
            ));
        }
    }
    for i in issues.iter_mut() {
        let pos = match i.directive_index {
            Some(super::validate::DirectiveRef::Ordering(k)) => map.orderings.get(k).copied(),
            Some(super::validate::DirectiveRef::Management(k)) => map.directives.get(k).copied(),
            None => map.tasks.get(&i.subject).copied().or(map.graph),
        };
        if let Some((l, c)) = pos {
            i.line = Some(l);
            i.col = Some(c);
        }
    }
    issues
}
