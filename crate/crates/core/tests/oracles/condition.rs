//! A brute-force interpreter for condition source text built from its own
//! binary tree type.

pub const OPERATORS: [&str; 6] = [">=", ">", "<=", "<", "==", "!="];

/// One literal per metric, each placed on the outcome grid.
pub const LITERALS: [(&str, f64); 3] = [("score", 80.0), ("attempts", 4.0), ("duration", 120.0)];

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Completed,
    Cmp(&'static str, &'static str, f64),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub score: f64,
    pub attempts: u32,
    pub duration: f64,
    pub completed: bool,
}

/// score {0,50,80,100} x attempts {1,4} x duration {10,120} x completed {t,f}.
pub fn grid() -> Vec<Point> {
    let mut points = Vec::new();
    for score in [0.0, 50.0, 80.0, 100.0] {
        for attempts in [1, 4] {
            for duration in [10.0, 120.0] {
                for completed in [true, false] {
                    points.push(Point {
                        score,
                        attempts,
                        duration,
                        completed,
                    });
                }
            }
        }
    }
    points
}

pub fn eval(e: &Expr, p: &Point) -> bool {
    match e {
        Expr::Completed => p.completed,
        Expr::Cmp(metric, op, v) => {
            let x = match *metric {
                "score" => p.score,
                "attempts" => p.attempts as f64,
                "duration" => p.duration,
                other => panic!("unknown metric {other}"),
            };
            match *op {
                ">=" => x >= *v,
                ">" => x > *v,
                "<=" => x <= *v,
                "<" => x < *v,
                "==" => x == *v,
                "!=" => x != *v,
                other => panic!("unknown operator {other}"),
            }
        }
        Expr::Not(a) => !eval(a, p),
        Expr::And(a, b) => eval(a, p) && eval(b, p),
        Expr::Or(a, b) => eval(a, p) || eval(b, p),
    }
}

/// Fully parenthesised source text.
pub fn render(e: &Expr) -> String {
    match e {
        Expr::Completed => "completed".to_string(),
        Expr::Cmp(m, op, v) => format!("{m} {op} {v}"),
        Expr::Not(a) => format!("not ({})", render(a)),
        Expr::And(a, b) => format!("({}) and ({})", render(a), render(b)),
        Expr::Or(a, b) => format!("({}) or ({})", render(a), render(b)),
    }
}

pub fn atoms() -> Vec<Expr> {
    let mut out = vec![Expr::Completed];
    for (metric, value) in LITERALS {
        for op in OPERATORS {
            out.push(Expr::Cmp(metric, op, value));
        }
    }
    out
}

/// Atoms and their negations.
pub fn leaves() -> Vec<Expr> {
    let atoms = atoms();
    let negated: Vec<Expr> = atoms.iter().map(|a| Expr::Not(Box::new(a.clone()))).collect();
    atoms.into_iter().chain(negated).collect()
}

fn join(and: bool, a: Expr, b: Expr) -> Expr {
    if and {
        Expr::And(Box::new(a), Box::new(b))
    } else {
        Expr::Or(Box::new(a), Box::new(b))
    }
}

fn maybe_not(negate: bool, e: Expr) -> Expr {
    if negate {
        Expr::Not(Box::new(e))
    } else {
        e
    }
}

/// Calls `f` on every condition of one to three atoms: every leaf, every
/// and/or over two leaves, and both bracketings over three, each internal
/// node optionally negated.
pub fn for_each_condition(mut f: impl FnMut(&Expr)) {
    let leaves = leaves();
    for a in &leaves {
        f(a);
    }
    let flags = [false, true];
    for a in &leaves {
        for b in &leaves {
            for and in flags {
                for neg in flags {
                    f(&maybe_not(neg, join(and, a.clone(), b.clone())));
                }
            }
        }
    }
    for a in &leaves {
        for b in &leaves {
            for c in &leaves {
                for outer_and in flags {
                    for inner_and in flags {
                        for inner_neg in flags {
                            for outer_neg in flags {
                                let left = maybe_not(inner_neg, join(inner_and, a.clone(), b.clone()));
                                f(&maybe_not(outer_neg, join(outer_and, left, c.clone())));
                                let right = maybe_not(inner_neg, join(inner_and, b.clone(), c.clone()));
                                f(&maybe_not(outer_neg, join(outer_and, a.clone(), right)));
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Truth table of `e` over `points`, bit i standing for `points[i]`.
pub fn truth_table(e: &Expr, points: &[Point]) -> u64 {
    let all = if points.len() == 64 { u64::MAX } else { (1u64 << points.len()) - 1 };
    match e {
        Expr::Not(a) => !truth_table(a, points) & all,
        Expr::And(a, b) => truth_table(a, points) & truth_table(b, points),
        Expr::Or(a, b) => truth_table(a, points) | truth_table(b, points),
        leaf => points
            .iter()
            .enumerate()
            .filter(|(_, p)| eval(leaf, p))
            .fold(0, |bits, (i, _)| bits | 1 << i),
    }
}
