use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

const LISTING: &str = include_str!("../../../../scenarios/scenario_b.hive");

#[test]
fn listing_parses_with_expected_shape() {
    let g = parse_program(LISTING).unwrap();
    assert_eq!(g.tasks.len(), 5);
    let edges = g.edges();
    assert_eq!(edges.len(), 4);
    for (p, c) in [
        ("createRoute", "collectImage"),
        ("collectImage", "obstacleAvoidance"),
        ("collectImage", "faceRecognition"),
        ("faceRecognition", "deduplication"),
    ] {
        assert!(edges.contains(&(p.to_string(), c.to_string())), "{p}->{c}");
    }
    assert_eq!(g.directive_count(), 7);
    let kinds: Vec<_> = g.orderings.iter().map(|o| o.kind).collect();
    assert_eq!(kinds, vec![OrderingKind::Parallel, OrderingKind::Serial, OrderingKind::Synchronize]);
    let place = g.directives_of(DirectiveKind::Place, "obstacleAvoidance").next().unwrap();
    assert_eq!(place.payload["location"], "Edge:all");
    let learn = g.directives_of(DirectiveKind::Learn, "faceRecognition").next().unwrap();
    assert_eq!(learn.payload["scope"], "Global");
    assert_eq!(g.directives.iter().filter(|d| d.kind == DirectiveKind::Persist).count(), 2);
    assert_eq!(g.constraints[0].metric, Metric::ExecTime);
    assert_eq!(g.constraints[0].canonical_bound(), 10_000.0);
    assert!(validate(&g).is_empty());
    assert_eq!(g.task("collectImage").unwrap().data_in, None);
    assert_eq!(g.task("createRoute").unwrap().task_args["load_balancer"], "round robin");
}

#[test]
fn listing_round_trips() {
    let g = parse_program(LISTING).unwrap();
    let text = render_program(&g);
    assert_eq!(parse_program(&text).unwrap(), g);
    assert_eq!(render_program(&parse_program(&text).unwrap()), text);
}

#[test]
fn empty_graph() {
    let g = parse_program("TaskGraph(list=[],constraint=[])").unwrap();
    assert!(g.tasks.is_empty());
    assert!(g.edges().is_empty());
    let text = render_program(&g);
    assert_eq!(text.trim(), "TaskGraph(list=[], constraint=[])");
    assert_eq!(parse_program(&text).unwrap(), g);
}

#[test]
fn cycle_is_rejected() {
    let src = "TaskGraph(list=['A','B','C'])\n\
               Task(A, None, x, 'a', parentTask=['C'], childTask=['B'])\n\
               Task(B, x, x, 'b', parentTask=['A'], childTask=['C'])\n\
               Task(C, x, x, 'c', parentTask=['B'], childTask=['A'])\n";
    match parse_program(src) {
        Err(DslError::Validation(issues)) => {
            assert!(issues.iter().any(|i| i.rule == Rule::Cycle), "{issues:?}");
            assert!(issues.iter().any(|i| i.to_string().contains("cycle")));
        }
        other => panic!("expected cycle, got {other:?}"),
    }
}

#[test]
fn conflicting_ordering_single_issue() {
    let src = "TaskGraph(list=['a','b'])\n\
               Task(a, None, x, 'a', childTask=['b'])\n\
               Task(b, x, None, 'b')\n\
               Parallel(a, b)\nSerial(a, b)\n";
    let (g, _) = parse_unchecked(src).unwrap();
    let issues = validate(&g);
    assert_eq!(issues.len(), 1, "{issues:?}");
    assert_eq!(issues[0].rule, Rule::ConflictingOrdering);
    assert!(issues[0].to_string().contains("conflicting ordering"));
}

#[test]
fn source_on_cloud_single_issue() {
    let src = "TaskGraph(list=['t'])\nTask(t, None, x, 'c')\nPlace(t, 'Cloud')\n";
    let (g, _) = parse_unchecked(src).unwrap();
    let issues = validate(&g);
    assert_eq!(issues.len(), 1);
    assert!(issues[0].to_string().contains("source task must run on edge"));
}

#[test]
fn syntax_errors_are_located() {
    let cases = [
        ("TaskGraph(list=[]\n", 1),
        ("TaskGraph(list=[])\nFoo(a)\n", 2),
        ("TaskGraph(list=['a')\n", 1),
        ("Task(a, None, x, 'c')\n", 1),
        ("TaskGraph(list=['a'])\nTask(a, None, x, 'unterminated)\n", 2),
        ("TaskGraph(list=[]) extra\n", 1),
    ];
    for (src, line) in cases {
        match parse_program(src) {
            Err(DslError::Parse(e)) => assert_eq!(e.line, line, "{src:?}: {e}"),
            other => panic!("{src:?}: expected parse error, got {other:?}"),
        }
    }
    let e = parse_program("TaskGraph(list=[])\nFoo(a)\n").unwrap_err();
    assert_eq!(e.located("x.hive"), "x.hive:2:1: unknown statement 'Foo'");
}

#[test]
fn inconsistent_explicit_lists() {
    let src = "TaskGraph(list=['a','b'])\n\
               Task(a, None, x, 'a', childTask=['b'])\n\
               Task(b, x, None, 'b', parentTask=[])\n";
    let e = parse_program(src).unwrap_err();
    assert!(matches!(&e, DslError::Validation(v) if v.iter().any(|i| i.rule == Rule::InconsistentEdge)), "{e}");
}

#[test]
fn edges_from_one_side_are_completed() {
    let src = "TaskGraph(list=['a','b'])\nTask(a, None, x, 'a')\nTask(b, x, None, 'b', parentTask=['a'])\n";
    let g = parse_program(src).unwrap();
    assert_eq!(g.task("a").unwrap().children, vec!["b".to_string()]);
}

#[test]
fn data_kind_mismatch() {
    let src = "TaskGraph(list=['a','b'])\nTask(a, None, x, 'a', childTask=['b'])\nTask(b, y, None, 'b')\n";
    let e = parse_program(src).unwrap_err();
    assert!(e.to_string().contains("data kind mismatch"));
}

#[test]
fn constraint_units() {
    let c = parse_constraint("latency", "500ms").unwrap();
    assert_eq!((c.canonical_bound(), c.direction), (500.0, Direction::Upper));
    let c = parse_constraint("throughput", "100req/s").unwrap();
    assert_eq!(c.direction, Direction::Lower);
    assert!(c.is_met_by(150.0) && !c.is_met_by(50.0));
    assert_eq!(parse_constraint("latency", "1us").unwrap().canonical_bound(), 0.001);
    assert!(parse_constraint("latency", "5req/s").is_err());
    assert!(parse_constraint("speed", "5").is_err());
}

/// Independent acyclicity oracle: Kahn's algorithm over the child lists.
fn kahn_acyclic(g: &TaskGraph) -> bool {
    let n = g.tasks.len();
    let idx = |s: &str| g.tasks.iter().position(|t| t.name == s).unwrap();
    let mut indeg = vec![0; n];
    for t in &g.tasks {
        for c in &t.children {
            indeg[idx(c)] += 1;
        }
    }
    let mut q: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = q.pop() {
        seen += 1;
        for c in &g.tasks[i].children {
            let j = idx(c);
            indeg[j] -= 1;
            if indeg[j] == 0 {
                q.push(j);
            }
        }
    }
    seen == n
}

fn arbitrary_digraph(n: usize, edges: &[(usize, usize)]) -> TaskGraph {
    let mut g = TaskGraph::default();
    for i in 0..n {
        let mut t = TaskDef::new(format!("n{i}"));
        t.data_out = Some("d".into());
        t.data_in = Some("d".into());
        g.listed.push(t.name.clone());
        g.tasks.push(t);
    }
    for &(a, b) in edges {
        let (a, b) = (a % n, b % n);
        let (na, nb) = (format!("n{a}"), format!("n{b}"));
        if !g.tasks[a].children.contains(&nb) {
            g.tasks[a].children.push(nb);
            g.tasks[b].parents.push(na);
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip_random_graphs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 12);
        prop_assert!(validate(&g).is_empty(), "{:?}", validate(&g));
        let text = render_program(&g);
        let back = parse_program(&text);
        prop_assert_eq!(back.as_ref().ok(), Some(&g), "{}", text);
    }

    #[test]
    fn cycle_check_matches_kahn(n in 1usize..=12, edges in proptest::collection::vec((0usize..12, 0usize..12), 0..30)) {
        let g = arbitrary_digraph(n, &edges);
        let dfs_cycle = find_cycle(&g).is_some();
        prop_assert_eq!(dfs_cycle, !kahn_acyclic(&g));
        prop_assert_eq!(validate(&g).iter().any(|i| i.rule == Rule::Cycle), dfs_cycle);
        prop_assert_eq!(g.topo_order().is_some(), !dfs_cycle);
    }

    #[test]
    fn parsing_is_total(src in "\\PC{0,200}") {
        let _ = parse_program(&src);
    }

    #[test]
    fn parsing_is_total_on_near_programs(seed in any::<u64>(), cut in 0usize..400, junk in "[()\\[\\],='#a-z\\n ]{0,5}") {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = render_program(&random_graph(&mut rng, 6));
        let cut = cut.min(text.len());
        let cut = (0..=cut).rev().find(|&i| text.is_char_boundary(i)).unwrap();
        let mangled = format!("{}{}{}", &text[..cut], junk, &text[cut..]);
        match parse_program(&mangled) {
            Ok(_) => {}
            Err(DslError::Parse(e)) => prop_assert!(e.line >= 1),
            Err(DslError::Validation(v)) => prop_assert!(!v.is_empty()),
        }
    }
}
