//! Three-way structural merge of composition graphs.
//!
//! Nodes are matched by node id, edges by `(from, priority)`. Each
//! attribute merges independently: a change on one side applies, the same
//! change on both sides applies once, and different changes on both sides
//! conflict.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::model::{CompositionGraph, FlowEdge, ModuleId, NodeId, NodeInstance};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum MergeSubject {
    Graph,
    Node { node_id: NodeId },
    Edge { from: NodeId, priority: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MergeAttribute {
    /// Deleted on one side, changed on the other; or left dangling.
    Presence,
    StartNode,
    ModuleRef,
    DisplayLabel,
    Target,
    Condition,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MergeConflict {
    pub subject: MergeSubject,
    pub attribute: MergeAttribute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeResult {
    /// Carries the original's composition id. Conflicting attributes keep
    /// the base value, except display labels, which are dropped.
    pub merged: CompositionGraph,
    /// Sorted and free of duplicates.
    pub conflicts: Vec<MergeConflict>,
}

impl MergeResult {
    pub fn is_clean(&self) -> bool {
        self.conflicts.is_empty()
    }
}

/// Outcome of merging one attribute.
enum Merged<T> {
    Agreed(T),
    Conflict,
}

fn three_way<T: PartialEq + Clone>(base: &T, original: &T, remix: &T) -> Merged<T> {
    if original == remix || remix == base {
        Merged::Agreed(original.clone())
    } else if original == base {
        Merged::Agreed(remix.clone())
    } else {
        Merged::Conflict
    }
}

#[derive(Clone, PartialEq)]
struct NodeAttrs {
    module_ref: ModuleId,
    display_label: Option<String>,
}

#[derive(Clone, PartialEq)]
struct EdgeAttrs {
    to: NodeId,
    condition: Option<Condition>,
}

pub fn merge(
    original: &CompositionGraph,
    remix: &CompositionGraph,
    base: &CompositionGraph,
) -> MergeResult {
    let mut conflicts = BTreeSet::new();

    let node_map = |g: &CompositionGraph| -> BTreeMap<NodeId, NodeAttrs> {
        g.nodes()
            .map(|n| {
                let attrs = NodeAttrs {
                    module_ref: n.module_ref.clone(),
                    display_label: n.display_label.clone(),
                };
                (n.node_id.clone(), attrs)
            })
            .collect()
    };
    let edge_map = |g: &CompositionGraph| -> BTreeMap<(NodeId, u32), EdgeAttrs> {
        g.edges()
            .iter()
            .map(|e| {
                let attrs = EdgeAttrs {
                    to: e.to.clone(),
                    condition: e.condition.clone(),
                };
                ((e.from.clone(), e.priority), attrs)
            })
            .collect()
    };

    let (bn, on, rn) = (node_map(base), node_map(original), node_map(remix));
    let mut nodes: BTreeMap<NodeId, NodeAttrs> = BTreeMap::new();
    for id in keys(&bn, &on, &rn) {
        let subject = MergeSubject::Node { node_id: id.clone() };
        let merged = merge_element(
            bn.get(&id),
            on.get(&id),
            rn.get(&id),
            &subject,
            &mut conflicts,
            |b, o, r, conflicts| {
                let module_ref = match three_way(&b.module_ref, &o.module_ref, &r.module_ref) {
                    Merged::Agreed(v) => v,
                    Merged::Conflict => {
                        conflicts.insert(conflict(&subject, MergeAttribute::ModuleRef));
                        b.module_ref.clone()
                    }
                };
                let display_label =
                    match three_way(&b.display_label, &o.display_label, &r.display_label) {
                        Merged::Agreed(v) => v,
                        Merged::Conflict => {
                            conflicts.insert(conflict(&subject, MergeAttribute::DisplayLabel));
                            None
                        }
                    };
                NodeAttrs {
                    module_ref,
                    display_label,
                }
            },
            |o, r, conflicts| {
                // Added on both sides: a label-only difference keeps the node.
                if o.module_ref != r.module_ref {
                    conflicts.insert(conflict(&subject, MergeAttribute::ModuleRef));
                    if o.display_label != r.display_label {
                        conflicts.insert(conflict(&subject, MergeAttribute::DisplayLabel));
                    }
                    None
                } else {
                    conflicts.insert(conflict(&subject, MergeAttribute::DisplayLabel));
                    Some(NodeAttrs {
                        module_ref: o.module_ref.clone(),
                        display_label: None,
                    })
                }
            },
        );
        if let Some(attrs) = merged {
            nodes.insert(id, attrs);
        }
    }

    let (be, oe, re) = (edge_map(base), edge_map(original), edge_map(remix));
    let mut edges: BTreeMap<(NodeId, u32), EdgeAttrs> = BTreeMap::new();
    for key in keys(&be, &oe, &re) {
        let subject = MergeSubject::Edge {
            from: key.0.clone(),
            priority: key.1,
        };
        let merged = merge_element(
            be.get(&key),
            oe.get(&key),
            re.get(&key),
            &subject,
            &mut conflicts,
            |b, o, r, conflicts| {
                let to = match three_way(&b.to, &o.to, &r.to) {
                    Merged::Agreed(v) => v,
                    Merged::Conflict => {
                        conflicts.insert(conflict(&subject, MergeAttribute::Target));
                        b.to.clone()
                    }
                };
                let condition = match three_way(&b.condition, &o.condition, &r.condition) {
                    Merged::Agreed(v) => v,
                    Merged::Conflict => {
                        conflicts.insert(conflict(&subject, MergeAttribute::Condition));
                        b.condition.clone()
                    }
                };
                EdgeAttrs { to, condition }
            },
            |o, r, conflicts| {
                if o.to != r.to {
                    conflicts.insert(conflict(&subject, MergeAttribute::Target));
                }
                if o.condition != r.condition {
                    conflicts.insert(conflict(&subject, MergeAttribute::Condition));
                }
                None
            },
        );
        if let Some(attrs) = merged {
            edges.insert(key, attrs);
        }
    }

    let mut start = match three_way(base.start_node_id(), original.start_node_id(), remix.start_node_id())
    {
        Merged::Agreed(v) => v,
        Merged::Conflict => {
            conflicts.insert(conflict(&MergeSubject::Graph, MergeAttribute::StartNode));
            base.start_node_id().clone()
        }
    };
    if !nodes.contains_key(&start) {
        conflicts.insert(conflict(&MergeSubject::Graph, MergeAttribute::StartNode));
        start = base.start_node_id().clone();
        let attrs = bn.get(&start).cloned().unwrap_or(NodeAttrs {
            module_ref: ModuleId::start(),
            display_label: None,
        });
        nodes.entry(start.clone()).or_insert(attrs);
    }

    // Edges whose ends vanished, and second defaults, cannot be kept.
    let mut has_default = BTreeSet::new();
    edges.retain(|(from, priority), attrs| {
        let subject = MergeSubject::Edge {
            from: from.clone(),
            priority: *priority,
        };
        if !nodes.contains_key(from) || !nodes.contains_key(&attrs.to) {
            conflicts.insert(conflict(&subject, MergeAttribute::Presence));
            return false;
        }
        if attrs.condition.is_none() && !has_default.insert(from.clone()) {
            conflicts.insert(conflict(&subject, MergeAttribute::Condition));
            return false;
        }
        true
    });

    let merged = CompositionGraph::from_parts(
        original.composition_id().clone(),
        start,
        nodes
            .into_iter()
            .map(|(node_id, a)| NodeInstance {
                node_id,
                module_ref: a.module_ref,
                display_label: a.display_label,
            })
            .collect(),
        edges
            .into_iter()
            .map(|((from, priority), a)| FlowEdge {
                from,
                to: a.to,
                condition: a.condition,
                priority,
            })
            .collect(),
    )
    .expect("merge output satisfies graph invariants");

    MergeResult {
        merged,
        conflicts: conflicts.into_iter().collect(),
    }
}

fn conflict(subject: &MergeSubject, attribute: MergeAttribute) -> MergeConflict {
    MergeConflict {
        subject: subject.clone(),
        attribute,
    }
}

fn keys<K: Ord + Clone, V>(a: &BTreeMap<K, V>, b: &BTreeMap<K, V>, c: &BTreeMap<K, V>) -> BTreeSet<K> {
    a.keys().chain(b.keys()).chain(c.keys()).cloned().collect()
}

/// Merges presence, delegating to `attrs` when the element exists on all
/// three sides and to `both_added` when both sides added it differently.
fn merge_element<T: Clone + PartialEq>(
    base: Option<&T>,
    original: Option<&T>,
    remix: Option<&T>,
    subject: &MergeSubject,
    conflicts: &mut BTreeSet<MergeConflict>,
    attrs: impl FnOnce(&T, &T, &T, &mut BTreeSet<MergeConflict>) -> T,
    both_added: impl FnOnce(&T, &T, &mut BTreeSet<MergeConflict>) -> Option<T>,
) -> Option<T> {
    if let Merged::Agreed(v) = three_way(&base, &original, &remix) {
        return v.cloned();
    }
    match (base, original, remix) {
        (Some(b), Some(o), Some(r)) => Some(attrs(b, o, r, conflicts)),
        (None, Some(o), Some(r)) => both_added(o, r, conflicts),
        // Deleted on one side and changed on the other.
        (Some(b), _, _) => {
            conflicts.insert(conflict(subject, MergeAttribute::Presence));
            Some(b.clone())
        }
        (None, _, _) => unreachable!("an element absent from base and one side merges cleanly"),
    }
}
