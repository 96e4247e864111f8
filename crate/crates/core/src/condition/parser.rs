//! Recursive-descent parser for flow conditions.
//!
//! ```text
//! cond  := or
//! or    := and ("or" and)*
//! and   := unary ("and" unary)*
//! unary := "not" unary | atom
//! atom  := "(" cond ")" | "completed" | metric cmp number
//! ```

use super::ast::{Comparison, Condition, Metric};
use super::lexer::{tokenize, Token, TokenKind};
use super::{ParseDiagnostic, MAX_DEPTH, MAX_SOURCE_LEN};

pub fn parse(source: &str) -> Result<Condition, ParseDiagnostic> {
    let length = source.chars().count();
    if length > MAX_SOURCE_LEN {
        return Err(ParseDiagnostic::new(
            1,
            1,
            format!("condition is {length} characters long; the limit is {MAX_SOURCE_LEN}"),
            None,
        ));
    }
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let condition = parser.condition(0)?;
    let tail = parser.peek();
    if tail.kind != TokenKind::Eof {
        return Err(parser.error_at(tail, "unexpected input after condition", "'and', 'or' or end of input"));
    }
    Ok(condition)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if token.kind != TokenKind::Eof {
            self.pos += 1;
        }
        token
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Word(w) if w == word)
    }

    fn error_at(&self, token: &Token, message: &str, expected: &str) -> ParseDiagnostic {
        ParseDiagnostic::new(token.line, token.column, message, Some(expected))
    }

    /// `nesting` counts enclosing connectives, negations and parentheses so
    /// that pathological input fails before the stack does.
    fn enter(&self, nesting: usize) -> Result<usize, ParseDiagnostic> {
        if nesting >= MAX_DEPTH {
            let token = self.peek();
            return Err(ParseDiagnostic::new(
                token.line,
                token.column,
                format!("condition nested deeper than {MAX_DEPTH} levels"),
                None,
            ));
        }
        Ok(nesting + 1)
    }

    fn condition(&mut self, nesting: usize) -> Result<Condition, ParseDiagnostic> {
        let start = self.peek().clone();
        let condition = self.disjunction(nesting)?;
        if condition.depth() > MAX_DEPTH {
            return Err(ParseDiagnostic::new(
                start.line,
                start.column,
                format!("condition nested deeper than {MAX_DEPTH} levels"),
                None,
            ));
        }
        Ok(condition)
    }

    fn disjunction(&mut self, nesting: usize) -> Result<Condition, ParseDiagnostic> {
        let mut operands = vec![self.conjunction(nesting)?];
        while self.at_word("or") {
            self.advance();
            operands.push(self.conjunction(nesting)?);
        }
        Ok(Condition::or(operands))
    }

    fn conjunction(&mut self, nesting: usize) -> Result<Condition, ParseDiagnostic> {
        let mut operands = vec![self.unary(nesting)?];
        while self.at_word("and") {
            self.advance();
            operands.push(self.unary(nesting)?);
        }
        Ok(Condition::and(operands))
    }

    fn unary(&mut self, nesting: usize) -> Result<Condition, ParseDiagnostic> {
        if self.at_word("not") {
            let nesting = self.enter(nesting)?;
            self.advance();
            return Ok(Condition::not(self.unary(nesting)?));
        }
        self.atom(nesting)
    }

    fn atom(&mut self, nesting: usize) -> Result<Condition, ParseDiagnostic> {
        let token = self.advance();
        match &token.kind {
            TokenKind::LParen => {
                let nesting = self.enter(nesting)?;
                let inner = self.condition(nesting)?;
                let close = self.advance();
                if close.kind != TokenKind::RParen {
                    return Err(self.error_at(&close, "unclosed parenthesis", "')'"));
                }
                Ok(inner)
            }
            TokenKind::Word(w) if w == "completed" => Ok(Condition::Completed),
            TokenKind::Word(w) => match Metric::from_keyword(w) {
                Some(metric) => self.comparison(metric),
                None => Err(self.error_at(
                    &token,
                    &format!("unknown word '{w}'"),
                    "'score', 'attempts', 'duration', 'completed', 'not' or '('",
                )),
            },
            TokenKind::Eof => Err(self.error_at(
                &token,
                "unexpected end of input",
                "'score', 'attempts', 'duration', 'completed', 'not' or '('",
            )),
            _ => Err(self.error_at(
                &token,
                "unexpected token",
                "'score', 'attempts', 'duration', 'completed', 'not' or '('",
            )),
        }
    }

    fn comparison(&mut self, metric: Metric) -> Result<Condition, ParseDiagnostic> {
        let op = self.advance();
        let TokenKind::Comparator(comparator) = op.kind else {
            return Err(self.error_at(&op, "expected a comparison operator", "'>=', '>', '<=', '<', '==' or '!='"));
        };
        let literal = self.advance();
        let TokenKind::Number(value) = literal.kind else {
            let message = if literal.kind == TokenKind::Eof {
                "unexpected end of input"
            } else {
                "expected a number"
            };
            return Err(self.error_at(&literal, message, "number"));
        };
        if metric == Metric::Score && !(0.0..=100.0).contains(&value) {
            return Err(self.error_at(
                &literal,
                &format!("score literal {value} is outside 0..100"),
                "number between 0 and 100",
            ));
        }
        Ok(Condition::Comparison(Comparison {
            metric,
            comparator,
            value,
        }))
    }
}
