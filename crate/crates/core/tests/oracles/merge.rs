//! Graphs as plain maps, random non-overlapping edit scripts, and the
//! expected merge obtained by applying both scripts in turn.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

pub const CONDITIONS: [&str; 5] = [
    "score >= 80",
    "score < 50",
    "completed",
    "attempts > 2 and not completed",
    "duration <= 300 or score == 100",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plain {
    pub id: String,
    pub start: String,
    /// node id -> (module ref, display label)
    pub nodes: BTreeMap<String, (String, Option<String>)>,
    /// (from, priority) -> (to, condition source)
    pub edges: BTreeMap<(String, u32), (String, Option<String>)>,
}

impl Plain {
    /// Reads the canonical graph JSON document.
    pub fn from_document(doc: &Value) -> Plain {
        let text = |v: &Value| v.as_str().map(str::to_owned);
        Plain {
            id: doc["compositionId"].as_str().unwrap().into(),
            start: doc["startNodeId"].as_str().unwrap().into(),
            nodes: doc["nodes"]
                .as_array()
                .unwrap()
                .iter()
                .map(|n| {
                    (
                        text(&n["nodeId"]).unwrap(),
                        (text(&n["moduleRef"]).unwrap(), text(&n["displayLabel"])),
                    )
                })
                .collect(),
            edges: doc["edges"]
                .as_array()
                .unwrap()
                .iter()
                .map(|e| {
                    (
                        (text(&e["from"]).unwrap(), e["priority"].as_u64().unwrap() as u32),
                        (text(&e["to"]).unwrap(), text(&e["condition"])),
                    )
                })
                .collect(),
        }
    }

    pub fn to_document(&self) -> Value {
        json!({
            "compositionId": self.id,
            "startNodeId": self.start,
            "nodes": self.nodes.iter().map(|(id, (module, label))| json!({
                "nodeId": id, "moduleRef": module, "displayLabel": label,
            })).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|((from, priority), (to, condition))| json!({
                "from": from, "to": to, "condition": condition, "priority": priority,
            })).collect::<Vec<_>>(),
        })
    }

    fn has_default(&self, from: &str) -> bool {
        self.edges
            .iter()
            .any(|((f, _), (_, c))| f == from && c.is_none())
    }

    pub fn apply(&self, edits: &[Edit]) -> Plain {
        let mut next = self.clone();
        for edit in edits {
            match edit {
                Edit::Label(node, label) => next.nodes.get_mut(node).unwrap().1 = label.clone(),
                Edit::Module(node, module) => next.nodes.get_mut(node).unwrap().0 = module.clone(),
                Edit::AddNode(node, module) => {
                    next.nodes.insert(node.clone(), (module.clone(), None));
                }
                Edit::AddEdge(from, priority, to, condition) => {
                    next.edges.insert((from.clone(), *priority), (to.clone(), condition.clone()));
                }
                Edit::RemoveEdge(from, priority) => {
                    next.edges.remove(&(from.clone(), *priority));
                }
                Edit::Retarget(from, priority, to) => {
                    next.edges.get_mut(&(from.clone(), *priority)).unwrap().0 = to.clone();
                }
            }
        }
        next
    }
}

#[derive(Debug, Clone)]
pub enum Edit {
    Label(String, Option<String>),
    Module(String, String),
    AddNode(String, String),
    AddEdge(String, u32, String, Option<String>),
    RemoveEdge(String, u32),
    Retarget(String, u32, String),
}

/// A random graph of at most `max_nodes` nodes (`start` plus `n1..nk`) and
/// at most 16 edges, every node with at most one default edge.
pub fn random_base(rng: &mut impl Rng, id: &str, max_nodes: usize) -> Plain {
    let k = rng.gen_range(1..max_nodes);
    let mut nodes = BTreeMap::new();
    nodes.insert("start".to_string(), ("builtin:start".to_string(), None));
    for i in 1..=k {
        let label = rng.gen_bool(0.3).then(|| format!("step {i}"));
        nodes.insert(format!("n{i}"), (format!("m{}", rng.gen_range(1..=4)), label));
    }
    let mut plain = Plain {
        id: id.into(),
        start: "start".into(),
        nodes,
        edges: BTreeMap::new(),
    };
    let ids: Vec<String> = plain.nodes.keys().cloned().collect();
    for _ in 0..rng.gen_range(0..=(2 * k).min(16)) {
        let from = ids.choose(rng).unwrap().clone();
        let to = ids.choose(rng).unwrap().clone();
        let priority = rng.gen_range(0..4);
        if plain.edges.contains_key(&(from.clone(), priority)) {
            continue;
        }
        let condition = random_condition(rng, &plain, &from);
        plain.edges.insert((from, priority), (to, condition));
    }
    plain
}

fn random_condition(rng: &mut impl Rng, plain: &Plain, from: &str) -> Option<String> {
    if plain.has_default(from) || rng.gen_bool(0.6) {
        Some(CONDITIONS.choose(rng).unwrap().to_string())
    } else {
        None
    }
}

/// An edit script touching only nodes `owned` and at most `max_new` new
/// nodes prefixed `side`. Edges are keyed by their source, so edges out of
/// owned nodes are owned too.
pub fn random_edits(
    rng: &mut impl Rng,
    base: &Plain,
    owned: &[String],
    side: &str,
    max_new: usize,
) -> Vec<Edit> {
    let mut edits = Vec::new();
    let mut current = base.clone();
    let mut mine: Vec<String> = owned.to_vec();
    let mut fresh = 0;
    for _ in 0..rng.gen_range(0..=6) {
        let choice = match (mine.is_empty(), fresh < max_new) {
            (true, true) => 2,
            (true, false) => break,
            (false, true) => rng.gen_range(0..6),
            (false, false) => [0, 1, 3, 4, 5][rng.gen_range(0..5)],
        };
        let edit = match choice {
            0 => {
                let node = mine.choose(rng).unwrap().clone();
                let label = rng.gen_bool(0.7).then(|| format!("{side} label {}", rng.gen_range(0..100)));
                Edit::Label(node, label)
            }
            1 => {
                let candidates: Vec<&String> = mine.iter().filter(|n| **n != base.start).collect();
                let Some(node) = candidates.choose(rng).map(|n| (*n).clone()) else {
                    continue;
                };
                Edit::Module(node, format!("{side}-module-{}", rng.gen_range(0..100)))
            }
            2 => {
                fresh += 1;
                let node = format!("{side}{fresh}");
                mine.push(node.clone());
                Edit::AddNode(node, format!("m{}", rng.gen_range(1..=4)))
            }
            3 => {
                let from = mine.choose(rng).unwrap().clone();
                let targets: Vec<&String> = base.nodes.keys().chain(mine.iter()).collect();
                let to = (*targets.choose(rng).unwrap()).clone();
                let priority = (0..).find(|p| !current.edges.contains_key(&(from.clone(), *p))).unwrap();
                let condition = random_condition(rng, &current, &from);
                Edit::AddEdge(from, priority, to, condition)
            }
            4 => {
                let Some((from, priority)) = owned_edge(rng, &current, &mine) else {
                    continue;
                };
                Edit::RemoveEdge(from, priority)
            }
            _ => {
                let Some((from, priority)) = owned_edge(rng, &current, &mine) else {
                    continue;
                };
                let to = mine.choose(rng).unwrap().clone();
                Edit::Retarget(from, priority, to)
            }
        };
        current = current.apply(std::slice::from_ref(&edit));
        edits.push(edit);
    }
    edits
}

fn owned_edge(rng: &mut impl Rng, plain: &Plain, mine: &[String]) -> Option<(String, u32)> {
    let keys: Vec<&(String, u32)> = plain.edges.keys().filter(|(f, _)| mine.contains(f)).collect();
    keys.choose(rng).map(|k| (*k).clone())
}

/// Splits the base nodes alternately between two editors; `start` goes to
/// the first.
pub fn partition(base: &Plain) -> (Vec<String>, Vec<String>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, id) in base.nodes.keys().filter(|n| **n != base.start).enumerate() {
        if i % 2 == 0 { a.push(id.clone()) } else { b.push(id.clone()) }
    }
    a.push(base.start.clone());
    (a, b)
}

/// A graph that passes validation: every node with outgoing edges has a
/// forward default edge, so a terminal node is always reachable.
/// Conditional edges may point backwards.
pub fn random_runnable(rng: &mut impl Rng, id: &str, max_nodes: usize) -> Plain {
    let k = rng.gen_range(1..max_nodes);
    let order: Vec<String> = std::iter::once("start".to_string())
        .chain((1..=k).map(|i| format!("n{i}")))
        .collect();
    let mut plain = Plain {
        id: id.into(),
        start: "start".into(),
        nodes: BTreeMap::new(),
        edges: BTreeMap::new(),
    };
    for (i, node) in order.iter().enumerate() {
        let module = if i == 0 { "builtin:start".to_string() } else { format!("m{}", rng.gen_range(1..=4)) };
        plain.nodes.insert(node.clone(), (module, None));
        if i + 1 == order.len() || (i > 0 && rng.gen_bool(0.15)) {
            continue;
        }
        let conditional = rng.gen_range(0..=3);
        for p in 0..conditional {
            let to = order.choose(rng).unwrap().clone();
            let condition = CONDITIONS.choose(rng).unwrap().to_string();
            plain.edges.insert((node.clone(), p), (to, Some(condition)));
        }
        let forward = order[rng.gen_range(i + 1..order.len())].clone();
        plain.edges.insert((node.clone(), conditional), (forward, None));
    }
    plain
}
