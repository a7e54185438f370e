use super::parser::is_identifier;
use super::types::*;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn kind(k: &Option<String>) -> String {
    match k {
        None => "None".to_string(),
        Some(s) if is_identifier(s) && s != "None" => s.clone(),
        Some(s) => quote(s),
    }
}

fn list(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|s| quote(s)).collect();
    format!("[{}]", inner.join(","))
}

/// Render a graph as program text that parses back to an equal graph.
pub fn render_program(g: &TaskGraph) -> String {
    let mut out = String::new();
    let cons: Vec<String> = g
        .constraints
        .iter()
        .map(|c| {
            let op = match c.direction {
                Direction::Upper => "<=",
                Direction::Lower => ">=",
            };
            format!("{}={}", c.metric.keyword(), quote(&format!("{op}{}{}", fmt_number(c.bound), c.unit.suffix())))
        })
        .collect();
    out.push_str(&format!("TaskGraph(list={}, constraint=[{}])\n", list(&g.listed), cons.join(", ")));

    for t in &g.tasks {
        out.push('\n');
        let mut parts = vec![t.name.clone(), kind(&t.data_in), kind(&t.data_out), quote(&t.code_ref)];
        for (k, v) in &t.task_args {
            parts.push(format!("{k}={}", quote(v)));
        }
        parts.push(format!("parentTask={}", list(&t.parents)));
        parts.push(format!("childTask={}", list(&t.children)));
        out.push_str(&format!("Task({})\n", parts.join(", ")));
    }

    if !g.orderings.is_empty() {
        out.push('\n');
    }
    for o in &g.orderings {
        let second = match o.kind {
            OrderingKind::Synchronize => quote(&o.second),
            _ => o.second.clone(),
        };
        out.push_str(&format!("{}({}, {})\n", o.kind.keyword(), o.first, second));
    }

    if !g.directives.is_empty() {
        out.push('\n');
    }
    for d in &g.directives {
        let mut parts = vec![d.subject.clone()];
        let pos_key = d.kind.positional_key();
        if let Some(v) = pos_key.and_then(|k| d.payload.get(k)) {
            parts.push(quote(v));
        }
        for (k, v) in &d.payload {
            if Some(k.as_str()) != pos_key {
                parts.push(format!("{k}={}", quote(v)));
            }
        }
        out.push_str(&format!("{}({})\n", d.kind.keyword(), parts.join(", ")));
    }
    out
}
