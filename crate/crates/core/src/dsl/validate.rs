use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::types::*;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    DuplicateTask,
    UndeclaredTask,
    UnlistedTask,
    InconsistentEdge,
    Cycle,
    DataKindMismatch,
    ConflictingOrdering,
    DuplicatePlace,
    BadPlaceLocation,
    SourceOnCloud,
    ActuationOnCloud,
    BadLearnScope,
    NonPositiveBound,
}

impl Rule {
    pub fn label(self) -> &'static str {
        match self {
            Rule::DuplicateTask => "duplicate task",
            Rule::UndeclaredTask => "undeclared task",
            Rule::UnlistedTask => "task not listed in TaskGraph",
            Rule::InconsistentEdge => "inconsistent parent/child lists",
            Rule::Cycle => "cycle",
            Rule::DataKindMismatch => "data kind mismatch",
            Rule::ConflictingOrdering => "conflicting ordering",
            Rule::DuplicatePlace => "more than one Place directive",
            Rule::BadPlaceLocation => "invalid Place location",
            Rule::SourceOnCloud => "source task must run on edge",
            Rule::ActuationOnCloud => "actuation task must run on edge",
            Rule::BadLearnScope => "invalid Learn scope",
            Rule::NonPositiveBound => "constraint bound must be positive",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum DirectiveRef {
    Ordering(usize),
    Management(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub rule: Rule,
    /// Task (or constraint metric) the issue is about.
    pub subject: String,
    pub message: String,
    pub directive_index: Option<DirectiveRef>,
    pub line: Option<usize>,
    pub col: Option<usize>,
}

impl ValidationIssue {
    pub fn new(rule: Rule, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            rule,
            subject: subject.into(),
            message: message.into(),
            directive_index: None,
            line: None,
            col: None,
        }
    }

    fn at(mut self, r: DirectiveRef) -> Self {
        self.directive_index = Some(r);
        self
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule.label(), self.message)
    }
}

/// Parsed form of a Place `location` payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlaceTarget {
    Cloud,
    EdgeAll,
    EdgeDevices(Vec<String>),
}

pub fn parse_place(loc: &str) -> Option<PlaceTarget> {
    match loc.trim() {
        "Cloud" | "cloud" => Some(PlaceTarget::Cloud),
        "Edge" | "edge" | "Edge:all" | "edge:all" => Some(PlaceTarget::EdgeAll),
        s => {
            let rest = s.strip_prefix("Edge:").or_else(|| s.strip_prefix("edge:"))?;
            let ids: Vec<String> = rest.split(',').map(|d| d.trim().to_string()).collect();
            if ids.iter().any(|d| d.is_empty()) {
                return None;
            }
            Some(PlaceTarget::EdgeDevices(ids))
        }
    }
}

/// Check every TaskGraph invariant. Returns an empty list iff the graph is valid.
pub fn validate(g: &TaskGraph) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let mut names = BTreeSet::new();
    for t in &g.tasks {
        if !names.insert(t.name.as_str()) {
            issues.push(ValidationIssue::new(Rule::DuplicateTask, &t.name, format!("task '{}' declared twice", t.name)));
        }
    }
    for n in &g.listed {
        if !names.contains(n.as_str()) {
            issues.push(ValidationIssue::new(
                Rule::UndeclaredTask,
                n,
                format!("TaskGraph lists '{n}' but no Task statement declares it"),
            ));
        }
    }
    for t in &g.tasks {
        if !g.listed.contains(&t.name) {
            issues.push(ValidationIssue::new(
                Rule::UnlistedTask,
                &t.name,
                format!("task '{}' is missing from the TaskGraph list", t.name),
            ));
        }
    }

    for t in &g.tasks {
        for (rel, list) in [("parent", &t.parents), ("child", &t.children)] {
            for n in list {
                if !names.contains(n.as_str()) {
                    issues.push(ValidationIssue::new(
                        Rule::UndeclaredTask,
                        &t.name,
                        format!("task '{}' names undeclared {rel} '{n}'", t.name),
                    ));
                    continue;
                }
                let other = g.task(n).unwrap();
                let back = if rel == "parent" { &other.children } else { &other.parents };
                if !back.contains(&t.name) {
                    issues.push(ValidationIssue::new(
                        Rule::InconsistentEdge,
                        &t.name,
                        format!("'{}' lists '{n}' as {rel} but '{n}' does not list it back", t.name),
                    ));
                }
            }
        }
    }

    if let Some(cycle) = find_cycle(g) {
        issues.push(ValidationIssue::new(
            Rule::Cycle,
            &cycle[0],
            format!("cycle through {}", cycle.join(" -> ")),
        ));
    }

    for t in &g.tasks {
        if let Some(kind) = &t.data_in {
            if t.parents.is_empty() {
                continue;
            }
            let produced: Vec<&str> = t
                .parents
                .iter()
                .filter_map(|p| g.task(p))
                .filter_map(|p| p.data_out.as_deref())
                .collect();
            if !produced.contains(&kind.as_str()) {
                issues.push(ValidationIssue::new(
                    Rule::DataKindMismatch,
                    &t.name,
                    format!("task '{}' consumes '{kind}' but its parents produce {produced:?}", t.name),
                ));
            }
        }
    }

    let mut pair_kinds: BTreeMap<(String, String), (OrderingKind, usize)> = BTreeMap::new();
    for (i, o) in g.orderings.iter().enumerate() {
        for s in o.task_subjects() {
            if !names.contains(s) {
                issues.push(
                    ValidationIssue::new(
                        Rule::UndeclaredTask,
                        s,
                        format!("{} refers to undeclared task '{s}'", o.kind.keyword()),
                    )
                    .at(DirectiveRef::Ordering(i)),
                );
            }
        }
        if o.kind == OrderingKind::Synchronize {
            continue;
        }
        let key = if o.first <= o.second {
            (o.first.clone(), o.second.clone())
        } else {
            (o.second.clone(), o.first.clone())
        };
        match pair_kinds.get(&key) {
            Some((k, _)) if *k != o.kind => issues.push(
                ValidationIssue::new(
                    Rule::ConflictingOrdering,
                    &o.first,
                    format!("{}({}, {}) conflicts with {}", o.kind.keyword(), o.first, o.second, k.keyword()),
                )
                .at(DirectiveRef::Ordering(i)),
            ),
            Some(_) => {}
            None => {
                pair_kinds.insert(key, (o.kind, i));
            }
        }
    }

    let mut placed = BTreeSet::new();
    for (i, d) in g.directives.iter().enumerate() {
        let r = DirectiveRef::Management(i);
        let Some(task) = g.task(&d.subject) else {
            issues.push(
                ValidationIssue::new(
                    Rule::UndeclaredTask,
                    &d.subject,
                    format!("{} refers to undeclared task '{}'", d.kind.keyword(), d.subject),
                )
                .at(r),
            );
            continue;
        };
        match d.kind {
            DirectiveKind::Place => {
                if !placed.insert(d.subject.as_str()) {
                    issues.push(
                        ValidationIssue::new(Rule::DuplicatePlace, &d.subject, format!("task '{}' placed twice", d.subject)).at(r),
                    );
                }
                let loc = d.payload.get("location").map(String::as_str).unwrap_or("");
                match parse_place(loc) {
                    None => issues.push(
                        ValidationIssue::new(Rule::BadPlaceLocation, &d.subject, format!("'{loc}' is not Cloud, Edge:all or Edge:<devices>"))
                            .at(r),
                    ),
                    Some(PlaceTarget::Cloud) if task.is_source() => issues.push(
                        ValidationIssue::new(
                            Rule::SourceOnCloud,
                            &d.subject,
                            format!("'{}' has no input data and is pinned to Cloud", d.subject),
                        )
                        .at(r),
                    ),
                    Some(PlaceTarget::Cloud) if task.is_actuation() => issues.push(
                        ValidationIssue::new(
                            Rule::ActuationOnCloud,
                            &d.subject,
                            format!("'{}' drives actuators and is pinned to Cloud", d.subject),
                        )
                        .at(r),
                    ),
                    _ => {}
                }
            }
            DirectiveKind::Learn => {
                let scope = d.payload.get("scope").map(String::as_str).unwrap_or("Global");
                if !matches!(scope, "Global" | "Local" | "Off") {
                    issues.push(
                        ValidationIssue::new(Rule::BadLearnScope, &d.subject, format!("scope '{scope}' is not Global, Local or Off")).at(r),
                    );
                }
            }
            _ => {}
        }
    }

    for c in &g.constraints {
        if c.bound.is_nan() || c.bound <= 0.0 {
            issues.push(ValidationIssue::new(
                Rule::NonPositiveBound,
                c.metric.keyword(),
                format!("{} bound {} is not > 0", c.metric.keyword(), c.bound),
            ));
        }
    }
    issues
}

/// Depth-first search for a back edge; returns the cycle's task names.
pub fn find_cycle(g: &TaskGraph) -> Option<Vec<String>> {
    #[derive(Copy, Clone, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let n = g.tasks.len();
    let adj: Vec<Vec<usize>> = g
        .tasks
        .iter()
        .map(|t| t.children.iter().filter_map(|c| g.task_index(c)).collect())
        .collect();
    let mut mark = vec![Mark::White; n];
    let mut stack_path: Vec<usize> = Vec::new();
    for root in 0..n {
        if mark[root] != Mark::White {
            continue;
        }
        // iterative DFS: (node, next child index)
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Grey;
        stack_path.push(root);
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            if *k < adj[v].len() {
                let w = adj[v][*k];
                *k += 1;
                match mark[w] {
                    Mark::White => {
                        mark[w] = Mark::Grey;
                        stack_path.push(w);
                        stack.push((w, 0));
                    }
                    Mark::Grey => {
                        let from = stack_path.iter().position(|&x| x == w).unwrap();
                        let mut cyc: Vec<String> = stack_path[from..].iter().map(|&i| g.tasks[i].name.clone()).collect();
                        cyc.push(g.tasks[w].name.clone());
                        return Some(cyc);
                    }
                    Mark::Black => {}
                }
            } else {
                mark[v] = Mark::Black;
                stack_path.pop();
                stack.pop();
            }
        }
    }
    None
}
