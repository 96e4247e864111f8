//! Static validation of compositions.
//!
//! Errors block running and exporting a composition; warnings are hints for
//! the author. Every check is a plain reachability question on the flow
//! graph, with edge conditions treated as "may fire".

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{CompositionGraph, CompositionId, NodeId};
use crate::registry::ModuleRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    NeverEnds,
    UnknownModuleRef,
    NoDefaultEdge,
    UnreachableNode,
    Revisit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl IssueCode {
    pub fn severity(self) -> Severity {
        match self {
            IssueCode::NeverEnds | IssueCode::UnknownModuleRef | IssueCode::NoDefaultEdge => {
                Severity::Error
            }
            IssueCode::UnreachableNode | IssueCode::Revisit => Severity::Warning,
        }
    }

    /// English message template; `{nodes}` is replaced by the subject list.
    pub fn template(self) -> &'static str {
        match self {
            IssueCode::NeverEnds => "The composition never ends: {nodes} cannot reach an ending.",
            IssueCode::UnknownModuleRef => "{nodes} refers to a module that does not exist.",
            IssueCode::NoDefaultEdge => {
                "{nodes} has conditional arrows but no default arrow, so a learner could get stuck."
            }
            IssueCode::UnreachableNode => "{nodes} can never be reached from the start.",
            IssueCode::Revisit => "This module is visited two times: {nodes} may be reached more than once.",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub subject: BTreeSet<NodeId>,
    pub message: String,
}

impl ValidationIssue {
    fn new(code: IssueCode, subject: BTreeSet<NodeId>) -> Self {
        let nodes = subject
            .iter()
            .map(NodeId::as_str)
            .collect::<Vec<_>>()
            .join(", ");
        let message = code.template().replace("{nodes}", &nodes);
        ValidationIssue {
            code,
            subject,
            message,
        }
    }

    fn single(code: IssueCode, node: &NodeId) -> Self {
        ValidationIssue::new(code, BTreeSet::from([node.clone()]))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    pub warnings: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }

    pub fn issues(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.errors.iter().chain(&self.warnings)
    }

    pub fn codes(&self) -> Vec<IssueCode> {
        self.issues().map(|i| i.code).collect()
    }
}

/// Adjacency view over distinct successor and predecessor nodes.
struct Adjacency<'g> {
    successors: BTreeMap<&'g NodeId, BTreeSet<&'g NodeId>>,
    predecessors: BTreeMap<&'g NodeId, BTreeSet<&'g NodeId>>,
}

impl<'g> Adjacency<'g> {
    fn new(graph: &'g CompositionGraph) -> Self {
        let mut successors: BTreeMap<&NodeId, BTreeSet<&NodeId>> =
            graph.node_ids().map(|n| (n, BTreeSet::new())).collect();
        let mut predecessors = successors.clone();
        for edge in graph.edges() {
            successors.entry(&edge.from).or_default().insert(&edge.to);
            predecessors.entry(&edge.to).or_default().insert(&edge.from);
        }
        Adjacency {
            successors,
            predecessors,
        }
    }

    fn closure(
        step: &BTreeMap<&'g NodeId, BTreeSet<&'g NodeId>>,
        roots: impl IntoIterator<Item = &'g NodeId>,
    ) -> BTreeSet<&'g NodeId> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&NodeId> = roots.into_iter().collect();
        while let Some(node) = queue.pop_front() {
            if seen.insert(node) {
                queue.extend(step.get(node).into_iter().flatten().copied());
            }
        }
        seen
    }

    fn forward(&self, roots: impl IntoIterator<Item = &'g NodeId>) -> BTreeSet<&'g NodeId> {
        Self::closure(&self.successors, roots)
    }

    fn backward(&self, roots: impl IntoIterator<Item = &'g NodeId>) -> BTreeSet<&'g NodeId> {
        Self::closure(&self.predecessors, roots)
    }

    fn on_cycle(&self, node: &'g NodeId) -> bool {
        self.forward(self.successors[node].iter().copied()).contains(node)
    }
}

/// Validates one composition.
pub fn validate(graph: &CompositionGraph, registry: &dyn ModuleRegistry) -> ValidationReport {
    let adjacency = Adjacency::new(graph);
    let mut issues = Vec::new();

    let terminals = graph
        .node_ids()
        .filter(|n| adjacency.successors[n].is_empty());
    let reachable = adjacency.forward([graph.start_node_id()]);
    let can_finish = adjacency.backward(terminals);
    let never_ends: BTreeSet<NodeId> = reachable
        .iter()
        .filter(|n| !can_finish.contains(*n))
        .map(|n| (*n).clone())
        .collect();
    if !never_ends.is_empty() {
        issues.push(ValidationIssue::new(IssueCode::NeverEnds, never_ends));
    }

    for node in graph.nodes() {
        let id = &node.node_id;
        if !registry.resolves(&node.module_ref) {
            issues.push(ValidationIssue::single(IssueCode::UnknownModuleRef, id));
        }
        let outgoing = graph.outgoing(id);
        if !outgoing.is_empty() && outgoing.iter().all(|e| !e.is_default()) {
            issues.push(ValidationIssue::single(IssueCode::NoDefaultEdge, id));
        }
        if !reachable.contains(id) {
            issues.push(ValidationIssue::single(IssueCode::UnreachableNode, id));
        }
        if adjacency.predecessors[id].len() >= 2 || adjacency.on_cycle(id) {
            issues.push(ValidationIssue::single(IssueCode::Revisit, id));
        }
    }

    issues.sort_by(|a, b| (a.code, &a.subject).cmp(&(b.code, &b.subject)));
    let (errors, warnings) = issues
        .into_iter()
        .partition(|i| i.code.severity() == Severity::Error);
    ValidationReport { errors, warnings }
}

/// Validates `graph` and every composition nested inside it, keyed by
/// composition id. Used when publishing.
pub fn validate_transitive(
    graph: &CompositionGraph,
    registry: &dyn ModuleRegistry,
) -> BTreeMap<CompositionId, ValidationReport> {
    let mut reports = BTreeMap::new();
    let mut pending = vec![graph];
    while let Some(current) = pending.pop() {
        if reports.contains_key(current.composition_id()) {
            continue;
        }
        reports.insert(current.composition_id().clone(), validate(current, registry));
        pending.extend(
            current
                .nodes()
                .filter_map(|n| registry.module_graph(&n.module_ref)),
        );
    }
    reports
}
