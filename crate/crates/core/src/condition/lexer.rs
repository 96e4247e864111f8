use super::ast::Comparator;
use super::ParseDiagnostic;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    /// Lowercased word: keyword or metric name.
    Word(String),
    Number(f64),
    Comparator(Comparator),
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(source: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let (mut line, mut column) = (1, 1);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let start = (line, column);
        let token = |kind| Token {
            kind,
            line: start.0,
            column: start.1,
        };
        let len;
        match c {
            '(' => {
                tokens.push(token(TokenKind::LParen));
                len = 1;
            }
            ')' => {
                tokens.push(token(TokenKind::RParen));
                len = 1;
            }
            '>' | '<' | '=' | '!' => {
                let next = chars.get(i + 1).copied();
                let (cmp, width) = match (c, next) {
                    ('>', Some('=')) => (Comparator::Ge, 2),
                    ('>', _) => (Comparator::Gt, 1),
                    ('<', Some('=')) => (Comparator::Le, 2),
                    ('<', _) => (Comparator::Lt, 1),
                    ('=', Some('=')) => (Comparator::Eq, 2),
                    ('!', Some('=')) => (Comparator::Ne, 2),
                    _ => {
                        return Err(ParseDiagnostic::new(
                            start.0,
                            start.1,
                            format!("unexpected character '{c}'"),
                            Some(if c == '=' { "'=='" } else { "'!='" }),
                        ))
                    }
                };
                tokens.push(token(TokenKind::Comparator(cmp)));
                len = width;
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if c == '-' && j == i + 1 {
                    return Err(ParseDiagnostic::new(
                        start.0,
                        start.1 + 1,
                        "'-' must be followed by digits",
                        Some("number"),
                    ));
                }
                if j < chars.len() && chars[j] == '.' {
                    let frac_start = j + 1;
                    j = frac_start;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == frac_start {
                        return Err(ParseDiagnostic::new(
                            start.0,
                            start.1 + (j - i),
                            "missing digits after decimal point",
                            Some("digit"),
                        ));
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let value: f64 = text.parse().map_err(|_| {
                    ParseDiagnostic::new(start.0, start.1, format!("invalid number '{text}'"), None)
                })?;
                if !value.is_finite() {
                    return Err(ParseDiagnostic::new(
                        start.0,
                        start.1,
                        format!("number '{text}' is out of range"),
                        None,
                    ));
                }
                tokens.push(token(TokenKind::Number(value)));
                len = j - i;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect::<String>().to_lowercase();
                tokens.push(token(TokenKind::Word(word)));
                len = j - i;
            }
            other => {
                return Err(ParseDiagnostic::new(
                    start.0,
                    start.1,
                    format!("unexpected character '{other}'"),
                    None,
                ))
            }
        }
        i += len;
        column += len;
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        column,
    });
    Ok(tokens)
}
