//! Canonical text form of a condition.
//!
//! Keywords are lowercase, binary operators are separated by single spaces
//! and parentheses appear only where the tree shape would otherwise be lost,
//! so that parsing the printed text yields a structurally equal tree.

use std::fmt::{self, Write};

use super::ast::{Comparison, Condition};

/// Renders `condition` in canonical form.
pub fn print(condition: &Condition) -> String {
    condition.to_string()
}

pub(crate) fn write_condition<W: Write>(out: &mut W, condition: &Condition) -> fmt::Result {
    match condition {
        Condition::Completed => out.write_str("completed"),
        Condition::Comparison(c) => write_comparison(out, c),
        Condition::Not(inner) => {
            out.write_str("not ")?;
            write_grouped(out, inner, matches!(**inner, Condition::And(_) | Condition::Or(_)))
        }
        Condition::And(children) => write_joined(out, children, " and ", |c| {
            matches!(c, Condition::And(_) | Condition::Or(_))
        }),
        Condition::Or(children) => {
            write_joined(out, children, " or ", |c| matches!(c, Condition::Or(_)))
        }
    }
}

fn write_comparison<W: Write>(out: &mut W, c: &Comparison) -> fmt::Result {
    // f64's Display is the shortest text that reads back to the same value
    // and never uses exponent notation, which the lexer does not accept.
    write!(
        out,
        "{} {} {}",
        c.metric.keyword(),
        c.comparator.symbol(),
        c.value
    )
}

fn write_joined<W: Write>(
    out: &mut W,
    children: &[Condition],
    separator: &str,
    needs_parens: impl Fn(&Condition) -> bool,
) -> fmt::Result {
    for (i, child) in children.iter().enumerate() {
        if i > 0 {
            out.write_str(separator)?;
        }
        write_grouped(out, child, needs_parens(child))?;
    }
    Ok(())
}

fn write_grouped<W: Write>(out: &mut W, condition: &Condition, parens: bool) -> fmt::Result {
    if parens {
        out.write_char('(')?;
        write_condition(out, condition)?;
        out.write_char(')')
    } else {
        write_condition(out, condition)
    }
}
