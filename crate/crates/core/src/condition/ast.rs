use std::fmt;

use serde::{Deserialize, Serialize};

/// Outcome metric a comparison reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Score,
    Attempts,
    Duration,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Score, Metric::Attempts, Metric::Duration];

    pub fn keyword(self) -> &'static str {
        match self {
            Metric::Score => "score",
            Metric::Attempts => "attempts",
            Metric::Duration => "duration",
        }
    }

    pub(crate) fn from_keyword(word: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.keyword() == word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl Comparator {
    pub const ALL: [Comparator; 6] = [
        Comparator::Ge,
        Comparator::Gt,
        Comparator::Le,
        Comparator::Lt,
        Comparator::Eq,
        Comparator::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Lt => "<",
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: Metric,
    pub comparator: Comparator,
    pub value: f64,
}

/// A parsed flow condition.
///
/// `And` and `Or` always hold at least two children; the parser never
/// produces a single-child connective and [`Condition::and`] /
/// [`Condition::or`] collapse one-element inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Condition {
    Comparison(Comparison),
    Completed,
    Not(Box<Condition>),
    And(Vec<Condition>),
    Or(Vec<Condition>),
}

impl Condition {
    pub fn compare(metric: Metric, comparator: Comparator, value: f64) -> Condition {
        Condition::Comparison(Comparison {
            metric,
            comparator,
            value,
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Condition) -> Condition {
        Condition::Not(Box::new(inner))
    }

    pub fn and(mut children: Vec<Condition>) -> Condition {
        assert!(!children.is_empty(), "conjunction needs at least one operand");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Condition::And(children)
        }
    }

    pub fn or(mut children: Vec<Condition>) -> Condition {
        assert!(!children.is_empty(), "disjunction needs at least one operand");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Condition::Or(children)
        }
    }

    /// Tree depth; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Condition::Comparison(_) | Condition::Completed => 1,
            Condition::Not(inner) => 1 + inner.depth(),
            Condition::And(cs) | Condition::Or(cs) => {
                1 + cs.iter().map(Condition::depth).max().unwrap_or(0)
            }
        }
    }

    /// Number of leaves (comparisons and `completed`).
    pub fn atom_count(&self) -> usize {
        match self {
            Condition::Comparison(_) | Condition::Completed => 1,
            Condition::Not(inner) => inner.atom_count(),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().map(Condition::atom_count).sum(),
        }
    }

    /// Checks the structural invariants a parsed condition always satisfies.
    pub fn check(&self) -> Result<(), String> {
        if self.depth() > super::MAX_DEPTH {
            return Err(format!(
                "condition nesting depth {} exceeds {}",
                self.depth(),
                super::MAX_DEPTH
            ));
        }
        self.check_nodes()
    }

    fn check_nodes(&self) -> Result<(), String> {
        match self {
            Condition::Completed => Ok(()),
            Condition::Comparison(c) => {
                if !c.value.is_finite() {
                    return Err(format!("literal {} is not finite", c.value));
                }
                if c.metric == Metric::Score && !(0.0..=100.0).contains(&c.value) {
                    return Err(format!("score literal {} outside 0..=100", c.value));
                }
                Ok(())
            }
            Condition::Not(inner) => inner.check_nodes(),
            Condition::And(cs) | Condition::Or(cs) => {
                if cs.len() < 2 {
                    return Err("connective with fewer than two operands".into());
                }
                cs.iter().try_for_each(Condition::check_nodes)
            }
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::printer::write_condition(f, self)
    }
}
