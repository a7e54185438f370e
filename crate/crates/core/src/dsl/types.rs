use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One task of a program: its data kinds, code handle, arguments and
/// declared neighbours.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDef {
    pub name: String,
    pub data_in: Option<String>,
    pub data_out: Option<String>,
    pub code_ref: String,
    pub task_args: BTreeMap<String, String>,
    pub parents: Vec<String>,
    pub children: Vec<String>,
}

impl TaskDef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            data_in: None,
            data_out: None,
            code_ref: String::new(),
            task_args: BTreeMap::new(),
            parents: Vec::new(),
            children: Vec::new(),
        }
    }

    /// Sensor sources have no input data kind.
    pub fn is_source(&self) -> bool {
        self.data_in.is_none()
    }

    pub fn is_actuation(&self) -> bool {
        self.task_args.get("actuation").is_some_and(|v| v.eq_ignore_ascii_case("true"))
    }

    /// Condition of an inline `sync=` argument, if any.
    pub fn sync_condition(&self) -> Option<&str> {
        self.task_args.get("sync").map(String::as_str)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OrderingKind {
    Parallel,
    Overlap,
    Serial,
    Synchronize,
}

impl OrderingKind {
    pub fn keyword(self) -> &'static str {
        match self {
            OrderingKind::Parallel => "Parallel",
            OrderingKind::Overlap => "Overlap",
            OrderingKind::Serial => "Serial",
            OrderingKind::Synchronize => "Synchronize",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "Parallel" => OrderingKind::Parallel,
            "Overlap" => OrderingKind::Overlap,
            "Serial" => OrderingKind::Serial,
            "Synchronize" => OrderingKind::Synchronize,
            _ => return None,
        })
    }
}

/// Timing relation between two tasks. For `Synchronize`, `second` holds the
/// opaque condition string instead of a task name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingDirective {
    pub kind: OrderingKind,
    pub first: String,
    pub second: String,
}

impl OrderingDirective {
    pub fn new(kind: OrderingKind, first: impl Into<String>, second: impl Into<String>) -> Self {
        Self {
            kind,
            first: first.into(),
            second: second.into(),
        }
    }

    /// Task names this directive refers to.
    pub fn task_subjects(&self) -> Vec<&str> {
        match self.kind {
            OrderingKind::Synchronize => vec![self.first.as_str()],
            _ => vec![self.first.as_str(), self.second.as_str()],
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DirectiveKind {
    Schedule,
    Isolate,
    Place,
    Restore,
    Learn,
    Persist,
}

impl DirectiveKind {
    pub fn keyword(self) -> &'static str {
        match self {
            DirectiveKind::Schedule => "Schedule",
            DirectiveKind::Isolate => "Isolate",
            DirectiveKind::Place => "Place",
            DirectiveKind::Restore => "Restore",
            DirectiveKind::Learn => "Learn",
            DirectiveKind::Persist => "Persist",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "Schedule" => DirectiveKind::Schedule,
            "Isolate" => DirectiveKind::Isolate,
            "Place" => DirectiveKind::Place,
            "Restore" => DirectiveKind::Restore,
            "Learn" => DirectiveKind::Learn,
            "Persist" => DirectiveKind::Persist,
            _ => return None,
        })
    }

    /// Payload key used for the optional second positional argument.
    pub fn positional_key(self) -> Option<&'static str> {
        match self {
            DirectiveKind::Place => Some("location"),
            DirectiveKind::Learn => Some("scope"),
            DirectiveKind::Restore => Some("policy"),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManagementDirective {
    pub kind: DirectiveKind,
    pub subject: String,
    pub payload: BTreeMap<String, String>,
}

impl ManagementDirective {
    pub fn new(kind: DirectiveKind, subject: impl Into<String>) -> Self {
        Self {
            kind,
            subject: subject.into(),
            payload: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.payload.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Median end-to-end job execution time.
    ExecTime,
    /// Tail (p99) end-to-end job latency.
    Latency,
    /// Completed jobs per second.
    Throughput,
    /// Cloud function-seconds.
    Cost,
}

impl Metric {
    pub fn keyword(self) -> &'static str {
        match self {
            Metric::ExecTime => "execTime",
            Metric::Latency => "latency",
            Metric::Throughput => "throughput",
            Metric::Cost => "cost",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "execTime" | "exec_time" => Metric::ExecTime,
            "latency" => Metric::Latency,
            "throughput" => Metric::Throughput,
            "cost" => Metric::Cost,
            _ => return None,
        })
    }

    pub fn default_direction(self) -> Direction {
        match self {
            Metric::Throughput => Direction::Lower,
            _ => Direction::Upper,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Micros,
    Millis,
    Seconds,
    ReqPerSec,
    FunctionSeconds,
}

impl Unit {
    pub fn suffix(self) -> &'static str {
        match self {
            Unit::Micros => "us",
            Unit::Millis => "ms",
            Unit::Seconds => "s",
            Unit::ReqPerSec => "req/s",
            Unit::FunctionSeconds => "fs",
        }
    }
}

/// Whether the bound is a ceiling (`Upper`) or a floor (`Lower`).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfConstraint {
    pub metric: Metric,
    pub bound: f64,
    pub unit: Unit,
    pub direction: Direction,
}

impl PerfConstraint {
    /// Bound converted to the metric's canonical unit: milliseconds for time
    /// metrics, req/s for throughput, function-seconds for cost.
    pub fn canonical_bound(&self) -> f64 {
        match self.unit {
            Unit::Micros => self.bound / 1_000.0,
            Unit::Millis => self.bound,
            Unit::Seconds => self.bound * 1_000.0,
            Unit::ReqPerSec | Unit::FunctionSeconds => self.bound,
        }
    }

    pub fn is_met_by(&self, value: f64) -> bool {
        match self.direction {
            Direction::Upper => value <= self.canonical_bound(),
            Direction::Lower => value >= self.canonical_bound(),
        }
    }
}

impl fmt::Display for PerfConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.direction {
            Direction::Upper => "<=",
            Direction::Lower => ">=",
        };
        write!(f, "{}{}{}{}", self.metric.keyword(), op, fmt_number(self.bound), self.unit.suffix())
    }
}

pub(crate) fn fmt_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// A parsed program: tasks, ordering relations, management directives and
/// performance constraints.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskGraph {
    /// Task names as listed by the `TaskGraph` statement.
    pub listed: Vec<String>,
    pub tasks: Vec<TaskDef>,
    pub orderings: Vec<OrderingDirective>,
    pub directives: Vec<ManagementDirective>,
    pub constraints: Vec<PerfConstraint>,
}

impl TaskGraph {
    pub fn task(&self, name: &str) -> Option<&TaskDef> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }

    /// Parent→child edges in task declaration order.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for t in &self.tasks {
            for c in &t.children {
                out.push((t.name.clone(), c.clone()));
            }
        }
        out
    }

    /// Ordering plus management directives.
    pub fn directive_count(&self) -> usize {
        self.orderings.len() + self.directives.len()
    }

    pub fn directives_of(&self, kind: DirectiveKind, task: &str) -> impl Iterator<Item = &ManagementDirective> {
        let task = task.to_string();
        self.directives.iter().filter(move |d| d.kind == kind && d.subject == task)
    }

    pub fn has_directive(&self, kind: DirectiveKind, task: &str) -> bool {
        self.directives_of(kind, task).next().is_some()
    }

    /// Whether `task` acts as a swarm-wide synchronization point.
    pub fn is_synchronized(&self, task: &str) -> bool {
        self.orderings
            .iter()
            .any(|o| o.kind == OrderingKind::Synchronize && o.first == task)
    }

    /// Task indices in a topological order (declaration order breaks ties).
    /// Returns `None` when the parent/child relation has a cycle.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.tasks.len();
        let mut indeg = vec![0usize; n];
        let mut adj = vec![Vec::new(); n];
        for (i, t) in self.tasks.iter().enumerate() {
            for c in &t.children {
                if let Some(j) = self.task_index(c) {
                    adj[i].push(j);
                    indeg[j] += 1;
                }
            }
        }
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(i);
            for &j in &adj[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}
