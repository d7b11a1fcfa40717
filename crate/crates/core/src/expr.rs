//! Measurement propositions.
//!
//! Concrete syntax:
//!
//! ```text
//! query  := expr '|' LABEL
//! expr   := term ('+' term)*
//! term   := factor ('&' factor)*
//! factor := LABEL | '(' expr ')'
//! ```
//!
//! `&` is the non-commutative sequence ("and then"), `+` the alternative.
//! `&` binds tighter than `+` and chains to the left, but measurements act
//! right to left: in `d & b & a` the measurement `a` happens first. The parser
//! keeps exactly the structure that was written; nothing is ever distributed
//! or simplified.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MeasurementExpr {
    Label(String),
    /// `left & right`: `right` acts first.
    Seq(Box<MeasurementExpr>, Box<MeasurementExpr>),
    /// Two or more alternatives, never directly nested.
    Alt(Vec<MeasurementExpr>),
}

impl MeasurementExpr {
    pub fn label(name: impl Into<String>) -> Self {
        Self::Label(name.into())
    }

    pub fn seq(left: MeasurementExpr, right: MeasurementExpr) -> Self {
        Self::Seq(Box::new(left), Box::new(right))
    }

    /// Builds an alternative, splicing in the children of nested alternatives.
    pub fn alt(children: Vec<MeasurementExpr>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Self::Alt(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        assert!(flat.len() >= 2, "alternative needs at least two children");
        Self::Alt(flat)
    }

    /// Flattens nested `Seq` nodes into textual order (leftmost = last applied).
    pub fn chain(&self) -> Vec<&MeasurementExpr> {
        match self {
            Self::Seq(l, r) => {
                let mut v = l.chain();
                v.extend(r.chain());
                v
            }
            other => vec![other],
        }
    }

    fn collect_labels<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Self::Label(l) => {
                if !out.contains(&l.as_str()) {
                    out.push(l);
                }
            }
            Self::Seq(l, r) => {
                l.collect_labels(out);
                r.collect_labels(out);
            }
            Self::Alt(cs) => cs.iter().for_each(|c| c.collect_labels(out)),
        }
    }

    /// Distinct labels in textual order.
    pub fn labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }
}

impl fmt::Display for MeasurementExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Label(l) => f.write_str(l),
            Self::Seq(l, r) => {
                match l.as_ref() {
                    Self::Alt(_) => write!(f, "({l})")?,
                    _ => write!(f, "{l}")?,
                }
                f.write_str(" & ")?;
                match r.as_ref() {
                    // a right-nested Seq needs parentheses to survive reparsing
                    Self::Alt(_) | Self::Seq(..) => write!(f, "({r})"),
                    Self::Label(_) => write!(f, "{r}"),
                }
            }
            Self::Alt(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

/// A proposition conditioned on a preparation: `℘(expr | preparation)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub expr: MeasurementExpr,
    pub preparation: String,
}

impl Query {
    pub fn new(expr: MeasurementExpr, preparation: impl Into<String>) -> Result<Self> {
        let preparation = preparation.into();
        if expr.labels().contains(&preparation.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "preparation `{preparation}` is also used as a measurement label"
            )));
        }
        Ok(Self { expr, preparation })
    }

    pub fn labels(&self) -> Vec<&str> {
        self.expr.labels()
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {}", self.expr, self.preparation)
    }
}

impl std::str::FromStr for Query {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

pub fn render(q: &Query) -> String {
    q.to_string()
}

pub fn labels_of(q: &Query) -> Vec<String> {
    q.labels().into_iter().map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Label(String),
    And,
    Or,
    Bar,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, ch)) = chars.peek() {
        match ch {
            c if c.is_whitespace() => {
                chars.next();
            }
            '&' | '+' | '|' | '(' | ')' => {
                chars.next();
                let t = match ch {
                    '&' => Tok::And,
                    '+' => Tok::Or,
                    '|' => Tok::Bar,
                    '(' => Tok::Open,
                    _ => Tok::Close,
                };
                toks.push((pos, t));
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push((pos, Tok::Label(name)));
            }
            other => {
                return Err(Error::Syntax {
                    position: pos,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.pos(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<MeasurementExpr> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            MeasurementExpr::alt(terms)
        })
    }

    fn term(&mut self) -> Result<MeasurementExpr> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            let rhs = self.factor()?;
            acc = MeasurementExpr::seq(acc, rhs);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<MeasurementExpr> {
        match self.peek().cloned() {
            Some(Tok::Label(l)) => {
                self.at += 1;
                Ok(MeasurementExpr::Label(l))
            }
            Some(Tok::Open) => {
                self.at += 1;
                if self.peek() == Some(&Tok::Close) {
                    return self.err("empty parentheses");
                }
                let e = self.expr()?;
                if self.peek() != Some(&Tok::Close) {
                    return self.err("expected `)`");
                }
                self.at += 1;
                Ok(e)
            }
            Some(t) => self.err(format!("expected a label or `(`, found {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses a bare proposition without `| preparation`.
pub fn parse_expr(text: &str) -> Result<MeasurementExpr> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

pub fn parse(text: &str) -> Result<Query> {
    let toks = tokenize(text)?;
    let bars: Vec<usize> = toks
        .iter()
        .enumerate()
        .filter(|(_, (_, t))| *t == Tok::Bar)
        .map(|(i, _)| i)
        .collect();
    let split = match bars.as_slice() {
        [] => return Err(Error::IncompleteQuery("missing `| <preparation>` conditioning".into())),
        [one] => *one,
        [_, second, ..] => {
            return Err(Error::Syntax {
                position: toks[*second].0,
                message: "`|` may appear only once, for the preparation".into(),
            })
        }
    };
    let mut p = Parser {
        toks: toks[..split].to_vec(),
        at: 0,
        end: toks[split].0,
    };
    if p.toks.is_empty() {
        return p.err("empty proposition before `|`");
    }
    let expr = p.expr()?;
    if p.at != p.toks.len() {
        return p.err("trailing input before `|`");
    }
    let prep = match &toks[split + 1..] {
        [(_, Tok::Label(l))] => l.clone(),
        [] => {
            return Err(Error::IncompleteQuery("no preparation label after `|`".into()));
        }
        [(pos, _), ..] => {
            return Err(Error::Syntax {
                position: *pos,
                message: "preparation must be a single label".into(),
            })
        }
    };
    Query::new(expr, prep).map_err(|e| Error::Syntax {
        position: toks[split + 1].0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use MeasurementExpr as E;

    fn l(s: &str) -> E {
        E::label(s)
    }

    #[test]
    fn atomic_alternative_inside_sequence() {
        let q = parse("d & (a + b) | s").unwrap();
        assert_eq!(q.expr, E::seq(l("d"), E::alt(vec![l("a"), l("b")])));
        assert_eq!(q.preparation, "s");
    }

    #[test]
    fn alternative_of_sequences() {
        let q = parse("(d & a) + (d & b) | s").unwrap();
        assert_eq!(q.expr, E::alt(vec![E::seq(l("d"), l("a")), E::seq(l("d"), l("b"))]));
        // same without parentheses since & binds tighter
        assert_eq!(parse("d & a + d & b | s").unwrap(), q);
    }

    #[test]
    fn indefinite_order_expression() {
        let q = parse("k & ((a & b) + (b & a)) | s").unwrap();
        let inner = E::alt(vec![E::seq(l("a"), l("b")), E::seq(l("b"), l("a"))]);
        assert_eq!(q.expr, E::seq(l("k"), inner));
    }

    #[test]
    fn sequence_is_left_associative_and_ordered() {
        let q = parse("d&b&a|s").unwrap();
        assert_eq!(q.expr, E::seq(E::seq(l("d"), l("b")), l("a")));
        assert_ne!(q.expr, parse("d & a & b | s").unwrap().expr);
    }

    #[test]
    fn nested_alternatives_flatten() {
        let q = parse("d & (a + (b + c)) | s").unwrap();
        assert_eq!(q.expr, E::seq(l("d"), E::alt(vec![l("a"), l("b"), l("c")])));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("d & (a + b)"), Err(Error::IncompleteQuery(_))));
        assert!(matches!(parse("d & () | s"), Err(Error::Syntax { position: 5, .. })));
        assert!(matches!(parse("d & | s"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("d & a | s | t"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("d & a | "), Err(Error::IncompleteQuery(_))));
        assert!(matches!(parse("d & a | a"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("d & a$ | s"), Err(Error::Syntax { position: 5, .. })));
        assert!(matches!(parse("(d & a | s"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn labels_in_textual_order() {
        let q = parse("d & (a + b) | s").unwrap();
        assert_eq!(labels_of(&q), ["d", "a", "b"]);
        assert_eq!(labels_of(&parse("d & a & a | s").unwrap()), ["d", "a"]);
        assert_eq!(
            labels_of(&parse("(k & i & j) + (k & j & i) | s").unwrap()),
            ["k", "i", "j"]
        );
    }

    #[test]
    fn render_examples() {
        let q = parse("d&(a+b)|s").unwrap();
        assert_eq!(render(&q), "d & (a + b) | s");
        assert_eq!(parse(&render(&q)).unwrap(), q);
        let q = parse("c + a + b | s").unwrap();
        assert_eq!(render(&q), "c + a + b | s");
        let q = parse("d & (a & b) | s").unwrap();
        assert_eq!(render(&q), "d & (a & b) | s");
        assert_eq!(parse(&render(&q)).unwrap(), q);
    }

    fn arb_expr() -> impl Strategy<Value = E> {
        let leaf = prop::sample::select(vec!["a", "b", "c", "d", "k", "q_1"]).prop_map(E::label);
        leaf.prop_recursive(5, 64, 4, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| E::seq(a, b)),
                prop::collection::vec(inner, 2..4).prop_map(E::alt),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn render_round_trips(e in arb_expr()) {
            let q = Query::new(e, "s").unwrap();
            let back = parse(&render(&q)).unwrap();
            prop_assert_eq!(back, q);
        }
    }
}
