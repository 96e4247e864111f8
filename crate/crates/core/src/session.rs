//! Runs a validated composition for one learner.

use thiserror::Error;

use crate::analysis::{validate, ValidationReport};
use crate::condition::evaluate;
use crate::model::{
    CompositionGraph, CompositionId, FlowEdge, NodeId, OutcomeError, OutcomeRecord, SessionId,
    SessionState, SessionStatus, UserId,
};
use crate::registry::ModuleRegistry;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("unknown composition {0}")]
    UnknownComposition(CompositionId),
    #[error("composition has {} validation error(s)", .0.errors.len())]
    ValidationErrorsPresent(ValidationReport),
    #[error("session is {0:?}, not active")]
    SessionNotActive(SessionStatus),
    #[error("outcome is for node {got}, but the session is at {expected}")]
    WrongNode { expected: NodeId, got: NodeId },
    #[error("session has not finished")]
    SessionNotFinished,
    #[error("session belongs to composition {session}, not {graph}")]
    CompositionMismatch {
        session: CompositionId,
        graph: CompositionId,
    },
    #[error(transparent)]
    InvalidOutcome(#[from] OutcomeError),
}

pub fn start_session(
    composition_id: &CompositionId,
    user_id: &UserId,
    registry: &dyn ModuleRegistry,
) -> Result<SessionState, SessionError> {
    start_session_with_id(SessionId::fresh(), composition_id, user_id, registry)
}

pub fn start_session_with_id(
    session_id: SessionId,
    composition_id: &CompositionId,
    user_id: &UserId,
    registry: &dyn ModuleRegistry,
) -> Result<SessionState, SessionError> {
    let graph = registry
        .composition(composition_id)
        .ok_or_else(|| SessionError::UnknownComposition(composition_id.clone()))?;
    let report = validate(graph, registry);
    if report.has_errors() {
        return Err(SessionError::ValidationErrorsPresent(report));
    }
    Ok(SessionState {
        session_id,
        composition_id: composition_id.clone(),
        user_id: user_id.clone(),
        current_node: graph.start_node_id().clone(),
        trace: Vec::new(),
        status: SessionStatus::Active,
    })
}

/// The edge that fires for `outcome` at `node`: the first in ascending
/// priority whose condition holds, a default edge always holding.
pub fn select_edge<'g>(
    graph: &'g CompositionGraph,
    node: &NodeId,
    outcome: &OutcomeRecord,
) -> Option<&'g FlowEdge> {
    graph
        .outgoing(node)
        .into_iter()
        .find(|edge| edge.condition.as_ref().map_or(true, |c| evaluate(c, outcome)))
}

/// Records `outcome` for the current node and follows the first firing edge.
pub fn submit_outcome(
    session: &SessionState,
    graph: &CompositionGraph,
    outcome: OutcomeRecord,
) -> Result<SessionState, SessionError> {
    if session.status != SessionStatus::Active {
        return Err(SessionError::SessionNotActive(session.status));
    }
    if &session.composition_id != graph.composition_id() {
        return Err(SessionError::CompositionMismatch {
            session: session.composition_id.clone(),
            graph: graph.composition_id().clone(),
        });
    }
    if outcome.node_id != session.current_node {
        return Err(SessionError::WrongNode {
            expected: session.current_node.clone(),
            got: outcome.node_id,
        });
    }
    outcome.validate()?;

    let mut next = session.clone();
    let has_edges = !graph.outgoing(&session.current_node).is_empty();
    match select_edge(graph, &session.current_node, &outcome) {
        Some(edge) => next.current_node = edge.to.clone(),
        None if has_edges => next.status = SessionStatus::Stuck,
        None => next.status = SessionStatus::Finished,
    }
    next.trace.push(outcome);
    Ok(next)
}

/// The outcome a finished nested session contributes to `node` of the
/// parent composition: mean score, summed duration, one completed attempt.
pub fn aggregate_outcome(session: &SessionState, node: NodeId) -> Result<OutcomeRecord, SessionError> {
    if session.status != SessionStatus::Finished {
        return Err(SessionError::SessionNotFinished);
    }
    let last = session.trace.last().ok_or(SessionError::SessionNotFinished)?;
    let count = session.trace.len() as f64;
    let score = session.trace.iter().map(|o| o.score_percent).sum::<f64>() / count;
    let duration = session.trace.iter().map(|o| o.duration_seconds).sum();
    Ok(OutcomeRecord {
        node_id: node,
        score_percent: score.clamp(0.0, 100.0),
        completed: true,
        attempts: 1,
        duration_seconds: duration,
        assessment_kind: last.assessment_kind,
        recorded_at: last.recorded_at,
    })
}

/// The trace as JSON lines, one outcome per line.
pub fn trace_json_lines(session: &SessionState) -> String {
    let mut out = String::new();
    for outcome in &session.trace {
        out.push_str(&serde_json::to_string(outcome).expect("outcomes always serialize"));
        out.push('\n');
    }
    out
}
