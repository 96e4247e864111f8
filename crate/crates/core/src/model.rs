//! Shared domain types: modules, compositions, outcomes and sessions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::{self, Condition, ParseDiagnostic};
use crate::registry::ModuleRegistry;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            /// A fresh random identifier.
            pub fn fresh() -> Self {
                $name(uuid::Uuid::new_v4().to_string())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                $name(id.to_owned())
            }
        }
    };
}

string_id!(ModuleId);
string_id!(CompositionId);
string_id!(
    /// Identifier of a node, unique within one composition.
    NodeId
);
string_id!(UserId);
string_id!(SessionId);
string_id!(
    /// Identifier of stored package content backing an atomic module.
    ContentId
);
string_id!(ReviewItemId);

/// Module reference of the synthetic start node every new composition gets.
/// It always resolves and carries no content.
pub const START_MODULE: &str = "builtin:start";

impl ModuleId {
    pub fn start() -> ModuleId {
        ModuleId::new(START_MODULE)
    }

    pub fn is_builtin(&self) -> bool {
        self.0 == START_MODULE
    }
}

/// All shared modules and assets carry the same content licence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Licence {
    #[default]
    #[serde(rename = "CC-BY-SA")]
    CcBySa,
}

impl Licence {
    pub fn tag(self) -> &'static str {
        "CC-BY-SA"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ModuleKind {
    Atomic,
    Composite,
}

/// What a module's content is. The variant determines the module kind, so a
/// composite module can only ever address a composition graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "contentRef", rename_all = "camelCase")]
pub enum ContentRef {
    Atomic(ContentId),
    Composite(CompositionId),
}

impl ContentRef {
    pub fn kind(&self) -> ModuleKind {
        match self {
            ContentRef::Atomic(_) => ModuleKind::Atomic,
            ContentRef::Composite(_) => ModuleKind::Composite,
        }
    }

    pub fn composition(&self) -> Option<&CompositionId> {
        match self {
            ContentRef::Composite(id) => Some(id),
            ContentRef::Atomic(_) => None,
        }
    }
}

/// Content type tag given to every composite module.
pub const COMPOSITION_CONTENT_TYPE: &str = "composition";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModuleDescriptor {
    pub module_id: ModuleId,
    pub title: String,
    pub author_id: UserId,
    #[serde(flatten)]
    pub content: ContentRef,
    /// Coarse content type used by search filters, e.g. `quiz` or `video`.
    pub content_type: String,
    pub licence: Licence,
    pub version: u32,
    pub parent_id: Option<ModuleId>,
}

impl ModuleDescriptor {
    pub fn kind(&self) -> ModuleKind {
        self.content.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeInstance {
    pub node_id: NodeId,
    pub module_ref: ModuleId,
    pub display_label: Option<String>,
}

/// A flow arrow. An absent condition makes this the node's default edge,
/// taken when no conditional edge fires.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub condition: Option<Condition>,
    pub priority: u32,
}

impl FlowEdge {
    pub fn is_default(&self) -> bool {
        self.condition.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("title must not be empty")]
    EmptyTitle,
    #[error("adding module {0} would make the composition contain itself")]
    CyclicComposition(ModuleId),
    #[error("node {0} already has a default edge")]
    DuplicateDefault(NodeId),
    #[error("node {node} already has an edge with priority {priority}")]
    DuplicatePriority { node: NodeId, priority: u32 },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("the start node cannot be removed")]
    StartNodeRemoval,
    #[error("no edge from {from} with priority {priority}")]
    UnknownEdge { from: NodeId, priority: u32 },
    #[error("invalid condition on edge from {from}: {diagnostic}")]
    InvalidCondition {
        from: NodeId,
        diagnostic: ParseDiagnostic,
    },
}

/// The canvas document: module nodes joined by prioritised flow edges.
///
/// Values are immutable in spirit; the editing operations return a new graph
/// and leave the receiver untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDocument", into = "GraphDocument")]
pub struct CompositionGraph {
    composition_id: CompositionId,
    start_node_id: NodeId,
    nodes: BTreeMap<NodeId, NodeInstance>,
    /// Sorted by `(from, priority)`.
    edges: Vec<FlowEdge>,
}

impl CompositionGraph {
    /// A graph holding only `start`.
    pub fn new(composition_id: CompositionId, start: NodeInstance) -> Self {
        let start_node_id = start.node_id.clone();
        CompositionGraph {
            composition_id,
            start_node_id,
            nodes: BTreeMap::from([(start.node_id.clone(), start)]),
            edges: Vec::new(),
        }
    }

    /// Builds a graph from parts, checking every structural invariant.
    pub fn from_parts(
        composition_id: CompositionId,
        start_node_id: NodeId,
        nodes: Vec<NodeInstance>,
        mut edges: Vec<FlowEdge>,
    ) -> Result<Self, ModelError> {
        sort_edges(&mut edges);
        let mut map = BTreeMap::new();
        for node in nodes {
            if let Some(previous) = map.insert(node.node_id.clone(), node) {
                return Err(ModelError::DuplicateNode(previous.node_id));
            }
        }
        let graph = CompositionGraph {
            composition_id,
            start_node_id,
            nodes: map,
            edges,
        };
        graph.check_invariants()?;
        Ok(graph)
    }

    pub fn composition_id(&self) -> &CompositionId {
        &self.composition_id
    }

    pub fn start_node_id(&self) -> &NodeId {
        &self.start_node_id
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeInstance> {
        self.nodes.values()
    }

    pub fn node(&self, id: &NodeId) -> Option<&NodeInstance> {
        self.nodes.get(id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains_node(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    /// Outgoing edges of `node` in ascending priority.
    pub fn outgoing(&self, node: &NodeId) -> Vec<&FlowEdge> {
        let mut out: Vec<&FlowEdge> = self.edges.iter().filter(|e| &e.from == node).collect();
        out.sort_by_key(|e| e.priority);
        out
    }

    /// Same graph under another identifier; used when deep-copying.
    pub fn with_composition_id(&self, composition_id: CompositionId) -> Self {
        CompositionGraph {
            composition_id,
            ..self.clone()
        }
    }

    pub fn check_invariants(&self) -> Result<(), ModelError> {
        if !self.nodes.contains_key(&self.start_node_id) {
            return Err(ModelError::UnknownNode(self.start_node_id.clone()));
        }
        let mut priorities = BTreeSet::new();
        let mut defaults = BTreeSet::new();
        for edge in &self.edges {
            for end in [&edge.from, &edge.to] {
                if !self.nodes.contains_key(end) {
                    return Err(ModelError::UnknownNode(end.clone()));
                }
            }
            if !priorities.insert((&edge.from, edge.priority)) {
                return Err(ModelError::DuplicatePriority {
                    node: edge.from.clone(),
                    priority: edge.priority,
                });
            }
            if edge.is_default() && !defaults.insert(&edge.from) {
                return Err(ModelError::DuplicateDefault(edge.from.clone()));
            }
            if let Some(c) = &edge.condition {
                c.check().map_err(|message| ModelError::InvalidCondition {
                    from: edge.from.clone(),
                    diagnostic: ParseDiagnostic::new(1, 1, message, None),
                })?;
            }
        }
        Ok(())
    }

    /// Adds a node referencing `module_ref` under a fresh node id.
    ///
    /// Fails with [`ModelError::CyclicComposition`] when `module_ref` is a
    /// composite module that (transitively) contains this graph.
    pub fn add_node(
        &self,
        module_ref: ModuleId,
        registry: &dyn ModuleRegistry,
    ) -> Result<(CompositionGraph, NodeId), ModelError> {
        if module_contains(registry, &module_ref, &self.composition_id) {
            return Err(ModelError::CyclicComposition(module_ref));
        }
        let node_id = self.fresh_node_id();
        let mut next = self.clone();
        next.nodes.insert(
            node_id.clone(),
            NodeInstance {
                node_id: node_id.clone(),
                module_ref,
                display_label: None,
            },
        );
        Ok((next, node_id))
    }

    pub fn add_edge(
        &self,
        from: &NodeId,
        to: &NodeId,
        condition: Option<Condition>,
        priority: u32,
    ) -> Result<CompositionGraph, ModelError> {
        for end in [from, to] {
            if !self.nodes.contains_key(end) {
                return Err(ModelError::UnknownNode(end.clone()));
            }
        }
        let outgoing = self.edges.iter().filter(|e| &e.from == from);
        for edge in outgoing {
            if edge.priority == priority {
                return Err(ModelError::DuplicatePriority {
                    node: from.clone(),
                    priority,
                });
            }
            if condition.is_none() && edge.is_default() {
                return Err(ModelError::DuplicateDefault(from.clone()));
            }
        }
        if let Some(c) = &condition {
            c.check().map_err(|message| ModelError::InvalidCondition {
                from: from.clone(),
                diagnostic: ParseDiagnostic::new(1, 1, message, None),
            })?;
        }
        let mut next = self.clone();
        next.edges.push(FlowEdge {
            from: from.clone(),
            to: to.clone(),
            condition,
            priority,
        });
        sort_edges(&mut next.edges);
        Ok(next)
    }

    pub fn remove_edge(&self, from: &NodeId, priority: u32) -> Result<CompositionGraph, ModelError> {
        let index = self
            .edges
            .iter()
            .position(|e| &e.from == from && e.priority == priority)
            .ok_or_else(|| ModelError::UnknownEdge {
                from: from.clone(),
                priority,
            })?;
        let mut next = self.clone();
        next.edges.remove(index);
        Ok(next)
    }

    /// Removes a node together with every edge touching it.
    pub fn remove_node(&self, node: &NodeId) -> Result<CompositionGraph, ModelError> {
        if node == &self.start_node_id {
            return Err(ModelError::StartNodeRemoval);
        }
        if !self.nodes.contains_key(node) {
            return Err(ModelError::UnknownNode(node.clone()));
        }
        let mut next = self.clone();
        next.nodes.remove(node);
        next.edges.retain(|e| &e.from != node && &e.to != node);
        Ok(next)
    }

    pub fn set_display_label(
        &self,
        node: &NodeId,
        label: Option<String>,
    ) -> Result<CompositionGraph, ModelError> {
        let mut next = self.clone();
        let instance = next
            .nodes
            .get_mut(node)
            .ok_or_else(|| ModelError::UnknownNode(node.clone()))?;
        instance.display_label = label;
        Ok(next)
    }

    fn fresh_node_id(&self) -> NodeId {
        (self.nodes.len() + 1..)
            .map(|k| NodeId::new(format!("n{k}")))
            .find(|id| !self.nodes.contains_key(id))
            .expect("unbounded range")
    }

    /// Canonical JSON text: sorted nodes and edges, conditions as source text.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<CompositionGraph, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn sort_edges(edges: &mut [FlowEdge]) {
    edges.sort_by(|a, b| (&a.from, a.priority).cmp(&(&b.from, b.priority)));
}

/// True when `module` is, or transitively contains, `target`.
pub fn module_contains(
    registry: &dyn ModuleRegistry,
    module: &ModuleId,
    target: &CompositionId,
) -> bool {
    let mut stack = vec![module.clone()];
    let mut seen = BTreeSet::new();
    while let Some(current) = stack.pop() {
        if !seen.insert(current.clone()) {
            continue;
        }
        let Some(composition) = registry
            .module(&current)
            .and_then(|m| m.content.composition().cloned())
        else {
            continue;
        };
        if &composition == target {
            return true;
        }
        if let Some(graph) = registry.composition(&composition) {
            stack.extend(graph.nodes().map(|n| n.module_ref.clone()));
        }
    }
    false
}

/// Creates a composite module at version 1 with a graph holding only the
/// synthetic start node.
pub fn new_composition(
    title: &str,
    author: &UserId,
) -> Result<(ModuleDescriptor, CompositionGraph), ModelError> {
    new_composition_with_ids(title, author, ModuleId::fresh(), CompositionId::fresh())
}

pub fn new_composition_with_ids(
    title: &str,
    author: &UserId,
    module_id: ModuleId,
    composition_id: CompositionId,
) -> Result<(ModuleDescriptor, CompositionGraph), ModelError> {
    if title.trim().is_empty() {
        return Err(ModelError::EmptyTitle);
    }
    let graph = CompositionGraph::new(
        composition_id.clone(),
        NodeInstance {
            node_id: NodeId::new("start"),
            module_ref: ModuleId::start(),
            display_label: None,
        },
    );
    let descriptor = ModuleDescriptor {
        module_id,
        title: title.to_owned(),
        author_id: author.clone(),
        content: ContentRef::Composite(composition_id),
        content_type: COMPOSITION_CONTENT_TYPE.to_owned(),
        licence: Licence::CcBySa,
        version: 1,
        parent_id: None,
    };
    Ok((descriptor, graph))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GraphDocument {
    composition_id: CompositionId,
    start_node_id: NodeId,
    nodes: Vec<NodeInstance>,
    edges: Vec<EdgeDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EdgeDocument {
    from: NodeId,
    to: NodeId,
    condition: Option<String>,
    priority: u32,
}

impl From<CompositionGraph> for GraphDocument {
    fn from(graph: CompositionGraph) -> Self {
        let mut edges: Vec<EdgeDocument> = graph
            .edges
            .into_iter()
            .map(|e| EdgeDocument {
                from: e.from,
                to: e.to,
                condition: e.condition.as_ref().map(condition::print),
                priority: e.priority,
            })
            .collect();
        edges.sort_by(|a, b| (&a.from, a.priority).cmp(&(&b.from, b.priority)));
        GraphDocument {
            composition_id: graph.composition_id,
            start_node_id: graph.start_node_id,
            nodes: graph.nodes.into_values().collect(),
            edges,
        }
    }
}

impl TryFrom<GraphDocument> for CompositionGraph {
    type Error = ModelError;

    fn try_from(doc: GraphDocument) -> Result<Self, Self::Error> {
        let edges = doc
            .edges
            .into_iter()
            .map(|e| {
                let condition = match e.condition {
                    Some(src) => Some(condition::parse(&src).map_err(|diagnostic| {
                        ModelError::InvalidCondition {
                            from: e.from.clone(),
                            diagnostic,
                        }
                    })?),
                    None => None,
                };
                Ok(FlowEdge {
                    from: e.from,
                    to: e.to,
                    condition,
                    priority: e.priority,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        CompositionGraph::from_parts(doc.composition_id, doc.start_node_id, doc.nodes, edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AssessmentKind {
    Reading,
    MultipleChoice,
    Generation,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutcomeError {
    #[error("score {0} outside 0..=100")]
    ScoreOutOfRange(String),
    #[error("attempts must be at least 1")]
    NoAttempts,
    #[error("duration {0} must be a non-negative number")]
    NegativeDuration(String),
}

/// The result a learner produced at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutcomeRecord {
    pub node_id: NodeId,
    pub score_percent: f64,
    pub completed: bool,
    pub attempts: u32,
    pub duration_seconds: f64,
    pub assessment_kind: AssessmentKind,
    pub recorded_at: DateTime<Utc>,
}

impl OutcomeRecord {
    pub fn new(
        node_id: NodeId,
        score_percent: f64,
        completed: bool,
        attempts: u32,
        duration_seconds: f64,
        assessment_kind: AssessmentKind,
    ) -> Result<Self, OutcomeError> {
        let record = OutcomeRecord {
            node_id,
            score_percent,
            completed,
            attempts,
            duration_seconds,
            assessment_kind,
            recorded_at: Utc::now(),
        };
        record.validate()?;
        Ok(record)
    }

    pub fn recorded_at(mut self, at: DateTime<Utc>) -> Self {
        self.recorded_at = at;
        self
    }

    pub fn validate(&self) -> Result<(), OutcomeError> {
        if !(0.0..=100.0).contains(&self.score_percent) {
            return Err(OutcomeError::ScoreOutOfRange(self.score_percent.to_string()));
        }
        if self.attempts < 1 {
            return Err(OutcomeError::NoAttempts);
        }
        if !(self.duration_seconds >= 0.0 && self.duration_seconds.is_finite()) {
            return Err(OutcomeError::NegativeDuration(self.duration_seconds.to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SessionStatus {
    Active,
    Finished,
    Stuck,
}

/// One learner's walk through a composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub session_id: SessionId,
    pub composition_id: CompositionId,
    pub user_id: UserId,
    pub current_node: NodeId,
    pub trace: Vec<OutcomeRecord>,
    pub status: SessionStatus,
}
