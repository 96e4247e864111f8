//! End-to-end acceptance checks. Prints one PASS or FAIL line per criterion
//! and exits non-zero when any fails.

mod common;
#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use chrono::{NaiveDate, Utc};
use common::Client;
use modcanvas_core::analysis::{validate, IssueCode};
use modcanvas_core::condition::{evaluate, parse, print, Comparator, Condition, Metric};
use modcanvas_core::h5p::{
    export_composition, extract_composition, read_package, write_package, H5pError,
};
use modcanvas_core::model::{
    new_composition_with_ids, AssessmentKind, CompositionGraph, CompositionId, ContentId,
    ContentRef, Licence, ModuleDescriptor, ModuleId, NodeId, OutcomeRecord, ReviewItemId,
    SessionStatus, UserId,
};
use modcanvas_core::registry::{ModuleRegistry, Registry};
use modcanvas_core::remix::{merge, Catalog, MergeAttribute};
use modcanvas_core::scheduler::{review, ReviewItem, MIN_EASINESS};
use modcanvas_core::session::{start_session, submit_outcome};
use oracles::archive::zip_fixture;
use oracles::condition::{for_each_condition, grid, render, truth_table, Expr, Point};
use oracles::graph::Closure;
use oracles::merge::{partition, random_base, random_edits, Plain};
use oracles::sm2::Sm2;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("condition language matches the reference interpreter", condition_grid),
        ("printed conditions parse back unchanged", condition_round_trip),
        ("never-ends verdicts match transitive closure", never_ends),
        ("branch example is deterministic", branch_example),
        ("package round trip and composition export", package_round_trip),
        ("scheduler intervals and easiness floor", scheduler),
        ("reward asymmetry and recursion", rewards),
        ("three-way merge", merging),
        ("service contract", service_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let began = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let text = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {text}"))
        });
        let elapsed = began.elapsed();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{elapsed:.2?}]"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason} [{elapsed:.2?}]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// Conditions

fn outcome(node: &str, p: &Point) -> OutcomeRecord {
    OutcomeRecord::new(
        NodeId::new(node),
        p.score,
        p.completed,
        p.attempts,
        p.duration,
        AssessmentKind::MultipleChoice,
    )
    .unwrap()
}

fn structural(expr: &Expr, atoms: &[(Expr, Condition)]) -> Condition {
    match expr {
        Expr::Not(a) => Condition::not(structural(a, atoms)),
        Expr::And(a, b) => Condition::And(vec![structural(a, atoms), structural(b, atoms)]),
        Expr::Or(a, b) => Condition::Or(vec![structural(a, atoms), structural(b, atoms)]),
        atom => atoms.iter().find(|(e, _)| e == atom).unwrap().1.clone(),
    }
}

fn condition_grid() -> Outcome {
    let began = Instant::now();
    let points = grid();
    let outcomes: Vec<OutcomeRecord> = points.iter().map(|p| outcome("x", p)).collect();
    let atoms: Vec<(Expr, Condition)> = oracles::condition::atoms()
        .into_iter()
        .map(|a| {
            let parsed = parse(&render(&a)).unwrap();
            (a, parsed)
        })
        .collect();
    let (mut count, mut disagreements) = (0usize, 0usize);
    for_each_condition(|expr| {
        let expected = truth_table(expr, &points);
        let built = structural(expr, &atoms);
        let actual = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| evaluate(&built, o))
            .fold(0u64, |bits, (i, _)| bits | 1 << i);
        if actual != expected {
            disagreements += 1;
        }
        count += 1;
    });
    let elapsed = began.elapsed();
    ensure(disagreements == 0, || format!("{disagreements} of {count} conditions disagree"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:.2?}"))?;
    Ok(format!("{count} conditions x {} outcomes agree in {elapsed:.2?}", points.len()))
}

fn literal(metric: Metric) -> BoxedStrategy<f64> {
    match metric {
        Metric::Score => (0u32..=10_000).prop_map(|c| f64::from(c) / 100.0).boxed(),
        Metric::Attempts => (0u32..50).prop_map(f64::from).boxed(),
        Metric::Duration => (-500i32..5_000).prop_map(|t| f64::from(t) / 4.0).boxed(),
    }
}

fn any_condition() -> impl Strategy<Value = Condition> {
    let leaf = prop_oneof![
        1 => Just(Condition::Completed),
        4 => (prop::sample::select(Metric::ALL.to_vec()), prop::sample::select(Comparator::ALL.to_vec()))
            .prop_flat_map(|(m, c)| literal(m).prop_map(move |v| Condition::compare(m, c, v))),
    ];
    leaf.prop_recursive(6, 48, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(Condition::not),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Condition::And),
            prop::collection::vec(inner, 2..4).prop_map(Condition::Or),
        ]
    })
}

fn condition_round_trip() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let cases = std::cell::Cell::new(0u32);
    runner
        .run(&any_condition(), |c| {
            cases.set(cases.get() + 1);
            let text = print(&c);
            let parsed = parse(&text).map_err(|d| TestCaseError::fail(format!("{text}: {d:?}")))?;
            prop_assert_eq!(&parsed, &c);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure(cases.get() >= 1000, || format!("only {} cases ran", cases.get()))?;
    Ok(format!("{} random trees, zero failures", cases.get()))
}

// Graph analysis

fn atomic(id: &str, content_type: &str) -> ModuleDescriptor {
    ModuleDescriptor {
        module_id: ModuleId::new(id),
        title: id.into(),
        author_id: UserId::new("author"),
        content: ContentRef::Atomic(ContentId::new(id)),
        content_type: content_type.into(),
        licence: Licence::CcBySa,
        version: 1,
        parent_id: None,
    }
}

fn build(plain: &Plain) -> CompositionGraph {
    serde_json::from_value(plain.to_document()).unwrap()
}

fn plain(graph: &CompositionGraph) -> Plain {
    Plain::from_document(&serde_json::to_value(graph).unwrap())
}

fn never_ends() -> Outcome {
    let mut registry = Registry::default();
    for i in 1..=4 {
        registry.insert_module(atomic(&format!("m{i}"), "quiz"));
    }
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut flagged = 0;
    for trial in 0..500 {
        let plain = random_base(&mut rng, "g", 8);
        ensure(plain.nodes.len() <= 8 && plain.edges.len() <= 16, || format!("graph {trial} too large"))?;
        let report = validate(&build(&plain), &registry);
        let names: Vec<String> = plain.nodes.keys().cloned().collect();
        let edges: Vec<(String, String)> =
            plain.edges.iter().map(|((f, _), (t, _))| (f.clone(), t.clone())).collect();
        let expected = Closure::new(&names, &edges).never_ends("start");
        let found: Vec<BTreeSet<String>> = report
            .errors
            .iter()
            .filter(|i| i.code == IssueCode::NeverEnds)
            .map(|i| i.subject.iter().map(|n| n.as_str().to_owned()).collect())
            .collect();
        match found.as_slice() {
            [] => ensure(expected.is_empty(), || format!("graph {trial}: missed {expected:?}"))?,
            [subject] => {
                ensure(*subject == expected, || format!("graph {trial}: {subject:?} != {expected:?}"))?;
                flagged += 1;
            }
            _ => return Err(format!("graph {trial}: more than one NeverEnds issue")),
        }
    }
    Ok(format!("500 graphs agree, {flagged} flagged"))
}

// Sessions

fn branch_example() -> Outcome {
    let mut registry = Registry::default();
    for id in ["a", "b", "c"] {
        registry.insert_module(atomic(id, "quiz"));
    }
    let composition = CompositionId::new("branch");
    let (descriptor, graph) =
        new_composition_with_ids("branch", &UserId::new("author"), ModuleId::new("branch"), composition.clone())
            .unwrap();
    let (graph, a) = graph.add_node(ModuleId::new("a"), &registry).unwrap();
    let (graph, b) = graph.add_node(ModuleId::new("b"), &registry).unwrap();
    let (graph, c) = graph.add_node(ModuleId::new("c"), &registry).unwrap();
    let start = graph.start_node_id().clone();
    let graph = graph
        .add_edge(&start, &a, None, 0)
        .and_then(|g| g.add_edge(&a, &b, Some(parse("score > 80").unwrap()), 0))
        .and_then(|g| g.add_edge(&a, &c, None, 1))
        .unwrap();
    registry.insert_composition(descriptor, graph.clone());

    let mut seen = BTreeMap::new();
    for _ in 0..100 {
        for score in [92.0, 40.0, 80.0] {
            let session = start_session(&composition, &UserId::new("learner"), &registry).unwrap();
            let done = OutcomeRecord::new(start.clone(), 0.0, true, 1, 0.0, AssessmentKind::Reading).unwrap();
            let session = submit_outcome(&session, &graph, done).unwrap();
            let at_a = OutcomeRecord::new(a.clone(), score, true, 1, 30.0, AssessmentKind::MultipleChoice).unwrap();
            let session = submit_outcome(&session, &graph, at_a).unwrap();
            ensure(session.status == SessionStatus::Active, || "session ended early".into())?;
            let target = if session.current_node == b { "b" } else if session.current_node == c { "c" } else { "?" };
            let previous = seen.insert(score as u32, target);
            ensure(previous.is_none() || previous == Some(target), || format!("score {score} varied"))?;
        }
    }
    let expected = BTreeMap::from([(92, "b"), (40, "c"), (80, "c")]);
    ensure(seen == expected, || format!("routes {seen:?}"))?;
    Ok("92 -> b, 40 -> c, 80 -> c (strict >), identical over 100 reruns".into())
}

// Packages

fn package_round_trip() -> Outcome {
    for name in ["minimal", "quiz"] {
        let package = read_package(&zip_fixture(name, |_| false)).map_err(|e| format!("{name}: {e}"))?;
        let written = write_package(&package).map_err(|e| format!("{name}: {e}"))?;
        for _ in 0..5 {
            ensure(write_package(&package).unwrap() == written, || format!("{name}: bytes differ"))?;
        }
        ensure(read_package(&written).as_ref() == Ok(&package), || format!("{name}: read . write differs"))?;
    }
    ensure(
        matches!(read_package(&zip_fixture("dangling", |_| false)), Err(H5pError::DanglingDependency { .. })),
        || "dangling dependency accepted".into(),
    )?;
    ensure(
        matches!(read_package(&zip_fixture("bad-content", |_| false)), Err(H5pError::SemanticsViolation { .. })),
        || "content outside its semantics accepted".into(),
    )?;

    // Start, a video, then a quiz on a good score, an article otherwise.
    let mut registry = Registry::default();
    let minimal = read_package(&zip_fixture("minimal", |_| false)).unwrap();
    let quiz_package = read_package(&zip_fixture("quiz", |_| false)).unwrap();
    registry.insert_package(atomic("video", "video"), minimal.clone());
    registry.insert_package(atomic("quiz", "quiz"), quiz_package);
    registry.insert_package(atomic("article", "article"), minimal);
    let (_, graph) = new_composition_with_ids(
        "Owl course",
        &UserId::new("author"),
        ModuleId::new("course"),
        CompositionId::new("course"),
    )
    .unwrap();
    let (graph, video) = graph.add_node(ModuleId::new("video"), &registry).unwrap();
    let (graph, quiz) = graph.add_node(ModuleId::new("quiz"), &registry).unwrap();
    let (graph, article) = graph.add_node(ModuleId::new("article"), &registry).unwrap();
    let start = graph.start_node_id().clone();
    let graph = graph
        .add_edge(&start, &video, None, 0)
        .and_then(|g| g.add_edge(&video, &quiz, Some(parse("score >= 80").unwrap()), 0))
        .and_then(|g| g.add_edge(&video, &article, None, 1))
        .and_then(|g| g.add_edge(&article, &quiz, None, 0))
        .unwrap();
    let report = validate(&graph, &registry);
    ensure(!report.has_errors(), || format!("example graph invalid: {report:?}"))?;

    let exported = export_composition(&graph, &registry).map_err(|e| e.to_string())?;
    let bytes = write_package(&exported.package).map_err(|e| e.to_string())?;
    ensure(write_package(&exported.package).unwrap() == bytes, || "export not deterministic".into())?;
    let reread = read_package(&bytes).map_err(|e| format!("re-import: {e}"))?;
    let embedded = reread.content["subContents"].as_array().map_or(0, Vec::len);
    ensure(embedded == 3, || format!("{embedded} embedded modules"))?;
    let back = extract_composition(&reread).map_err(|e| e.to_string())?;
    ensure(back == graph, || "re-imported graph differs".into())?;
    Ok(format!("2 fixtures round trip, 2 bad fixtures refused, 3-node export re-imports ({} bytes)", bytes.len()))
}

// Scheduler

fn scheduler() -> Outcome {
    let day0 = NaiveDate::from_ymd_opt(2026, 1, 5).unwrap();
    let mut item = ReviewItem::new(ReviewItemId::new("i"), ModuleId::new("m"), day0);
    let mut intervals = Vec::new();
    for _ in 0..15 {
        item = review(&item, 5, item.due_date).map_err(|e| e.to_string())?;
        intervals.push(item.interval_days as u64);
    }
    ensure(intervals[1] == 5, || format!("second interval {}", intervals[1]))?;
    let increasing = intervals.windows(2).take_while(|w| w[1] > w[0]).count();
    ensure(increasing >= 10, || format!("intervals {intervals:?}"))?;

    let mut rng = StdRng::seed_from_u64(0x5312);
    let mut reviews = 0u64;
    for _ in 0..10_000 {
        let mut engine = ReviewItem::new(ReviewItemId::new("r"), ModuleId::new("m"), day0);
        let mut oracle = Sm2::new();
        for _ in 0..rng.gen_range(1..40) {
            let grade = rng.gen_range(0..=5);
            engine = review(&engine, grade, day0).map_err(|e| e.to_string())?;
            oracle = oracle.step(grade);
            reviews += 1;
            ensure(engine.easiness >= MIN_EASINESS, || format!("easiness {}", engine.easiness))?;
            ensure((engine.easiness - oracle.easiness()).abs() < 1e-9, || "easiness drifted from reference".into())?;
        }
    }
    Ok(format!("intervals {:?}..., {reviews} random reviews stay >= 1.3", &intervals[..6]))
}

// Rewards

fn chain_user(i: usize) -> UserId {
    UserId::new(format!("u{i}"))
}

fn chain_module(j: usize) -> ModuleId {
    ModuleId::new(format!("m{j}"))
}

fn totals(catalog: &Catalog, users: usize) -> Vec<u64> {
    (0..users)
        .map(|i| catalog.ledger(&chain_user(i)).map_or(0, |l| l.total_points()))
        .collect()
}

/// Publishes a chain, checking every ledger total after each step.
fn publish_chain(authors: &[usize], modified: &[bool], users: usize) -> Result<Catalog, String> {
    let mut catalog = Catalog::new();
    let (descriptor, graph) =
        new_composition_with_ids("root", &chain_user(authors[0]), chain_module(0), CompositionId::new("m0"))
            .unwrap();
    catalog.create_composite(descriptor, graph).unwrap();
    catalog.publish(&chain_module(0), Utc::now()).unwrap();
    let mut before = totals(&catalog, users);
    for j in 1..authors.len() {
        let id = chain_module(j);
        catalog.derive(&chain_module(j - 1), &chain_user(authors[j]), id.clone()).unwrap();
        if modified[j] {
            let graph = catalog.module_graph(&id).unwrap().clone();
            let start = graph.start_node_id().clone();
            let edited = graph.set_display_label(&start, Some(format!("edited in {id}"))).unwrap();
            catalog.update_composition(&id, edited).unwrap();
        }
        catalog.publish(&id, Utc::now()).unwrap();
        let after = totals(&catalog, users);
        ensure(before.iter().zip(&after).all(|(b, a)| a >= b), || format!("totals fell at link {j}"))?;
        before = after;
    }
    Ok(catalog)
}

fn rewards() -> Outcome {
    for ancestors in 1..=5usize {
        let authors: Vec<usize> = (0..=ancestors).collect();
        let modified = vec![true; ancestors + 1];
        let before = publish_chain(&authors[..ancestors], &modified[..ancestors], ancestors + 1)?;
        let after = publish_chain(&authors, &modified, ancestors + 1)?;
        let delta: Vec<u64> = totals(&after, ancestors + 1)
            .iter()
            .zip(totals(&before, ancestors + 1))
            .map(|(a, b)| a - b)
            .collect();
        let remixer = delta[ancestors];
        let passive = &delta[..ancestors];
        ensure(passive.iter().all(|p| remixer > *p), || format!("chain {ancestors}: {delta:?}"))?;
        ensure(passive.iter().sum::<u64>() == ancestors as u64, || format!("chain {ancestors}: {delta:?}"))?;
    }

    let mut chains = 0;
    for length in 1..=5u32 {
        for code in 0..3usize.pow(length) * 2usize.pow(length - 1) {
            let (mut a, mut m) = (code, code / 3usize.pow(length));
            let authors: Vec<usize> = (0..length).map(|_| { let x = a % 3; a /= 3; x }).collect();
            let modified: Vec<bool> = (0..length).map(|j| j > 0 && { let bit = m & 1 == 1; m >>= 1; bit }).collect();
            let catalog = publish_chain(&authors, &modified, 3)?;
            let expected = oracles::rewards::chain(&authors, &modified);
            for (author, points) in &expected.points {
                let actual = catalog.ledger(&chain_user(*author)).map_or(0, |l| l.total_points());
                ensure(actual == *points, || format!("{authors:?} {modified:?}: u{author} has {actual}, expected {points}"))?;
            }
            for user in 0..3 {
                if let Some(ledger) = catalog.ledger(&chain_user(user)) {
                    ensure(ledger.events.iter().all(|e| e.points > 0), || "a replayed event lowers a total".into())?;
                }
            }
            chains += 1;
        }
    }
    Ok(format!("remixer 3 > passive 1 for chains 1..5, passive sum = length, {chains} chains match enumeration"))
}

// Merge

fn merging() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x3e26);
    for trial in 0..200 {
        let x = build(&random_base(&mut rng, "orig", 8));
        let result = merge(&x, &x, &x);
        ensure(result.is_clean() && result.merged == x, || format!("graph {trial}: merge(x, x, x) != x"))?;
    }
    for trial in 0..500 {
        let base = random_base(&mut rng, "orig", 4);
        let (a_nodes, b_nodes) = partition(&base);
        let a = random_edits(&mut rng, &base, &a_nodes, "a", 1);
        let b = random_edits(&mut rng, &base, &b_nodes, "b", 1);
        let original = base.apply(&a);
        let mut remix = base.apply(&b);
        remix.id = "remix".into();
        let expected = original.apply(&b);
        ensure(expected.nodes.len() <= 6, || format!("trial {trial}: {} nodes", expected.nodes.len()))?;
        let result = merge(&build(&original), &build(&remix), &build(&base));
        ensure(result.is_clean(), || format!("trial {trial}: {:?}", result.conflicts))?;
        ensure(plain(&result.merged) == expected, || format!("trial {trial}: merged differs from both-applied"))?;
    }
    for trial in 0..200 {
        let base = random_base(&mut rng, "orig", 6);
        let node = base.nodes.keys().filter(|n| *n != "start").nth(trial % (base.nodes.len() - 1)).unwrap().clone();
        let (mut ours, mut theirs) = (base.clone(), base.clone());
        let attribute = if trial % 2 == 0 {
            ours.nodes.get_mut(&node).unwrap().1 = Some("ours".into());
            theirs.nodes.get_mut(&node).unwrap().1 = Some("theirs".into());
            MergeAttribute::DisplayLabel
        } else {
            let current = &base.nodes[&node].0;
            let others: Vec<String> = (1..=4).map(|i| format!("m{i}")).filter(|m| m != current).collect();
            ours.nodes.get_mut(&node).unwrap().0 = others[0].clone();
            theirs.nodes.get_mut(&node).unwrap().0 = others[1].clone();
            MergeAttribute::ModuleRef
        };
        let result = merge(&build(&ours), &build(&theirs), &build(&base));
        ensure(result.conflicts.len() == 1, || format!("trial {trial}: {:?}", result.conflicts))?;
        ensure(result.conflicts[0].attribute == attribute, || format!("trial {trial}: {:?}", result.conflicts))?;
    }
    Ok("200 self-merges are identity, 500 disjoint merges apply both sides, 200 divergent edits give one conflict".into())
}

// Service

fn service_contract() -> Outcome {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    let registrations = runtime.block_on(duplicate_registration())?;
    let likes = runtime.block_on(like_idempotence())?;
    let search = runtime.block_on(search_ordering())?;
    Ok(format!("{registrations}; {likes}; {search}; no UI package in the workspace"))
}

async fn duplicate_registration() -> Outcome {
    for trial in 0..100 {
        let client = Client::new();
        let racers: Vec<_> = (0..4)
            .map(|_| {
                let client = client.clone();
                tokio::spawn(async move {
                    client
                        .post("/users", None, json!({"logonId": "twin", "password": "correct-horse"}))
                        .await
                })
            })
            .collect();
        let mut created = 0;
        for racer in racers {
            let reply = racer.await.map_err(|e| e.to_string())?;
            match reply.status {
                StatusCode::CREATED => created += 1,
                StatusCode::CONFLICT if reply.error() == "LogonIdTaken" => {}
                other => return Err(format!("trial {trial}: unexpected {other}")),
            }
        }
        ensure(created == 1, || format!("trial {trial}: {created} winners"))?;
    }
    Ok("100 races of 4 registrations, one winner each".into())
}

async fn like_idempotence() -> Outcome {
    let client = Client::new();
    let (_, author) = client.user("author").await;
    let module = client.import(&author, zip_fixture("quiz", |_| false), "Quiz", "quiz").await;
    client.publish(&author, &module).await;
    let mut fans = Vec::new();
    for i in 0..3 {
        fans.push(client.user(&format!("fan{i}")).await.1);
    }
    let mut likes = Vec::new();
    for round in 0..4 {
        let tasks: Vec<_> = fans
            .iter()
            .map(|token| {
                let (client, token, uri) = (client.clone(), token.clone(), format!("/modules/{module}/like"));
                tokio::spawn(async move { client.post(&uri, Some(&token), json!({})).await })
            })
            .collect();
        for task in tasks {
            let reply = task.await.map_err(|e| e.to_string())?;
            ensure(reply.status == StatusCode::OK, || format!("round {round}: {}", reply.status))?;
        }
        let found = client.get(&format!("/modules/{module}"), &author).await.json();
        likes.push(find_likes(&found).ok_or_else(|| format!("no like count in {found}"))?);
    }
    ensure(likes.iter().all(|l| *l == 3), || format!("like counts {likes:?}"))?;
    Ok("3 users x 4 rounds of likes count 3".into())
}

fn find_likes(value: &Value) -> Option<u64> {
    match value {
        Value::Object(map) => map
            .get("likes")
            .and_then(Value::as_u64)
            .or_else(|| map.values().find_map(find_likes)),
        _ => None,
    }
}

async fn search_ordering() -> Outcome {
    let client = Client::new();
    let (_, author) = client.user("author").await;
    let mut users = Vec::new();
    for i in 0..4 {
        users.push(client.user(&format!("reader{i}")).await.1);
    }
    let mut rng = StdRng::seed_from_u64(0x5ea7);
    let titles = ["Quiz", "quiz", "Quiz basics", "Owls quiz", "A quiz", "quiz", "QUIZ night", "Birds"];
    let mut modules = Vec::new();
    for title in titles {
        let id = client
            .import(&author, zip_fixture("quiz", |_| false), &title.replace(' ', "%20"), "quiz")
            .await;
        client.publish(&author, &id).await;
        modules.push((id, title));
    }
    let mut likes: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for _ in 0..20 {
        let (user, (module, _)) = (rng.gen_range(0..users.len()), &modules[rng.gen_range(0..modules.len())]);
        client.post(&format!("/modules/{module}/like"), Some(&users[user]), json!({})).await;
        likes.entry(module.as_str()).or_default().insert(user);
    }
    let favourite = &modules[rng.gen_range(0..modules.len())].0;
    client.post(&format!("/modules/{favourite}/favourite"), Some(&users[0]), json!({})).await;

    // Favourite first, then most liked, then title bytes, then id.
    let mut expected: Vec<(bool, usize, &str, &str)> = modules
        .iter()
        .filter(|(_, t)| t.to_lowercase().contains("quiz"))
        .map(|(id, t)| (id == favourite, likes.get(id.as_str()).map_or(0, BTreeSet::len), *t, id.as_str()))
        .collect();
    expected.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.as_bytes().cmp(b.2.as_bytes())).then(a.3.cmp(b.3)));
    let expected: Vec<&str> = expected.iter().map(|e| e.3).collect();

    let first = client.get("/search?q=qUiZ", &users[0]).await.json();
    for _ in 0..10 {
        ensure(client.get("/search?q=qUiZ", &users[0]).await.json() == first, || "search results vary".into())?;
    }
    let results = first["results"].as_array().ok_or("no results")?;
    let ids: Vec<&str> = results
        .iter()
        .filter(|e| e["entry"] == "module")
        .map(|e| e["moduleId"].as_str().unwrap_or_default())
        .collect();
    ensure(ids == expected, || format!("order {ids:?}, expected {expected:?}"))?;
    ensure(results.last().map(|e| e["entry"].clone()) == Some(json!("createNew")), || "no create-new entry".into())?;
    Ok(format!("search order over {} matches is stable and ranked", ids.len()))
}
