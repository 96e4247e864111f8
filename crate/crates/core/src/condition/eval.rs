use super::ast::{Condition, Metric};
use crate::model::OutcomeRecord;

/// Evaluates `condition` against the outcome of the node an edge leaves.
pub fn evaluate(condition: &Condition, outcome: &OutcomeRecord) -> bool {
    match condition {
        Condition::Completed => outcome.completed,
        Condition::Comparison(c) => c.comparator.holds(metric_value(c.metric, outcome), c.value),
        Condition::Not(inner) => !evaluate(inner, outcome),
        Condition::And(children) => children.iter().all(|c| evaluate(c, outcome)),
        Condition::Or(children) => children.iter().any(|c| evaluate(c, outcome)),
    }
}

fn metric_value(metric: Metric, outcome: &OutcomeRecord) -> f64 {
    match metric {
        Metric::Score => outcome.score_percent,
        Metric::Attempts => f64::from(outcome.attempts),
        Metric::Duration => outcome.duration_seconds,
    }
}
