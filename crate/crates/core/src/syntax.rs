//! Named λ-terms: construction, parsing, printing and α-aware operations.
//!
//! Grammar (ASCII, `λ` accepted for `\`):
//!
//! ```text
//! Term   ::= '\' ident (':' Type)? '.' Term | AppSeq
//! AppSeq ::= Atom+
//! Atom   ::= ident | '(' Term ')'
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::db;
use crate::error::ParseError;
use crate::types::{Ty, TypeParser, TypeStore};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// Binder name, optional type annotation, body.
    Lam(String, Option<Ty>, Box<Term>),
    App(Box<Term>, Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TermMetrics {
    pub size: u64,
    pub height: u64,
}

/// One step from a node to a child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Step {
    Body,
    Fun,
    Arg,
}

/// Position of a subterm, read from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Path(pub Vec<Step>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn child(&self, step: Step) -> Self {
        let mut v = self.0.clone();
        v.push(step);
        Path(v)
    }

    pub fn subterm<'a>(&self, t: &'a Term) -> Option<&'a Term> {
        let mut cur = t;
        for step in &self.0 {
            cur = match (step, cur) {
                (Step::Body, Term::Lam(_, _, b)) => b,
                (Step::Fun, Term::App(f, _)) => f,
                (Step::Arg, Term::App(_, a)) => a,
                _ => return None,
            };
        }
        Some(cur)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(match s {
                Step::Body => "body",
                Step::Fun => "fun",
                Step::Arg => "arg",
            })?;
        }
        Ok(())
    }
}

impl Serialize for Path {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Term {
    pub fn var(x: impl Into<String>) -> Term {
        Term::Var(x.into())
    }

    pub fn lam(x: impl Into<String>, body: Term) -> Term {
        Term::Lam(x.into(), None, Box::new(body))
    }

    pub fn lam_typed(x: impl Into<String>, ty: Ty, body: Term) -> Term {
        Term::Lam(x.into(), Some(ty), Box::new(body))
    }

    /// `\x1. ... \xn. body`
    pub fn lams<S: AsRef<str>>(names: &[S], body: Term) -> Term {
        names
            .iter()
            .rev()
            .fold(body, |acc, x| Term::lam(x.as_ref(), acc))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    /// `head a1 ... an`, left-associated.
    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn metrics(&self) -> TermMetrics {
        match self {
            Term::Var(_) => TermMetrics { size: 1, height: 1 },
            Term::Lam(_, _, b) => {
                let m = b.metrics();
                TermMetrics {
                    size: m.size + 1,
                    height: m.height + 1,
                }
            }
            Term::App(f, a) => {
                let (mf, ma) = (f.metrics(), a.metrics());
                TermMetrics {
                    size: mf.size + ma.size + 1,
                    height: mf.height.max(ma.height) + 1,
                }
            }
        }
    }

    pub fn size(&self) -> u64 {
        self.metrics().size
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go<'a>(t: &'a Term, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
            match t {
                Term::Var(x) => {
                    if !bound.contains(&x.as_str()) {
                        out.insert(x.clone());
                    }
                }
                Term::Lam(x, _, b) => {
                    bound.push(x);
                    go(b, bound, out);
                    bound.pop();
                }
                Term::App(f, a) => {
                    go(f, bound, out);
                    go(a, bound, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Drops every binder annotation.
    pub fn erase(&self) -> Term {
        match self {
            Term::Var(x) => Term::Var(x.clone()),
            Term::Lam(x, _, b) => Term::Lam(x.clone(), None, Box::new(b.erase())),
            Term::App(f, a) => Term::app(f.erase(), a.erase()),
        }
    }

    fn binder_counts(&self) -> (usize, usize) {
        match self {
            Term::Var(_) => (0, 0),
            Term::Lam(_, ann, b) => {
                let (x, y) = b.binder_counts();
                if ann.is_some() {
                    (x + 1, y)
                } else {
                    (x, y + 1)
                }
            }
            Term::App(f, a) => {
                let (x1, y1) = f.binder_counts();
                let (x2, y2) = a.binder_counts();
                (x1 + x2, y1 + y2)
            }
        }
    }

    /// Every binder carries a type annotation.
    pub fn is_church(&self) -> bool {
        self.binder_counts().1 == 0
    }

    /// No binder carries a type annotation.
    pub fn is_curry(&self) -> bool {
        self.binder_counts().0 == 0
    }

    /// No β-redex anywhere.
    pub fn is_beta_normal(&self) -> bool {
        match self {
            Term::Var(_) => true,
            Term::Lam(_, _, b) => b.is_beta_normal(),
            Term::App(f, a) => {
                !matches!(**f, Term::Lam(..)) && f.is_beta_normal() && a.is_beta_normal()
            }
        }
    }

    /// Head and arguments of an application spine.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Term::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// Printer that also writes binder annotations.
    pub fn display_typed<'a>(&'a self, store: &'a TypeStore) -> impl fmt::Display + 'a {
        TypedDisplay { term: self, store }
    }
}

/// α-equivalence.
pub fn alpha_eq(t: &Term, u: &Term) -> bool {
    db::alpha_eq(&db::from_term(t), &db::from_term(u))
}

/// Capture-avoiding `t{x := u}`.
pub fn substitute(t: &Term, x: &str, u: &Term) -> Term {
    let body = db::from_term(t);
    if !db::has_free(&body, x) {
        return t.clone();
    }
    let value = db::from_term(u);
    db::to_term(&db::subst_free(&body, x, &value))
}

struct TypedDisplay<'a> {
    term: &'a Term,
    store: &'a TypeStore,
}

impl fmt::Display for TypedDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self.term, Some(self.store), true, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self, None, true, f)
    }
}

// `rightmost`: nothing follows this term inside its enclosing parentheses,
// so a trailing abstraction may stay unparenthesized.
fn write_term(
    t: &Term,
    store: Option<&TypeStore>,
    rightmost: bool,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    match t {
        Term::Var(x) => f.write_str(x),
        Term::Lam(x, ann, body) => {
            write!(f, "\\{x}")?;
            if let (Some(store), Some(ty)) = (store, ann) {
                write!(f, ":{}", store.display(*ty))?;
            }
            f.write_str(".")?;
            write_term(body, store, true, f)
        }
        Term::App(..) => {
            let (head, args) = t.spine();
            if matches!(head, Term::Lam(..)) {
                f.write_str("(")?;
                write_term(head, store, true, f)?;
                f.write_str(")")?;
            } else {
                write_term(head, store, false, f)?;
            }
            let last = args.len() - 1;
            for (i, a) in args.iter().enumerate() {
                f.write_str(" ")?;
                let bare_lam = matches!(a, Term::Lam(..)) && i == last && rightmost;
                if matches!(a, Term::App(..)) || (matches!(a, Term::Lam(..)) && !bare_lam) {
                    f.write_str("(")?;
                    write_term(a, store, true, f)?;
                    f.write_str(")")?;
                } else {
                    write_term(a, store, rightmost && i == last, f)?;
                }
            }
            Ok(())
        }
    }
}

pub fn parse_term(text: &str, store: &TypeStore) -> Result<Term, ParseError> {
    let mut p = TermParser {
        src: text,
        pos: 0,
        store,
        annotated: None,
    };
    let t = p.term()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(ParseError::new(p.pos, "unexpected trailing input"));
    }
    Ok(t)
}

struct TermParser<'a> {
    src: &'a str,
    pos: usize,
    store: &'a TypeStore,
    // Style fixed by the first binder seen: Church (true) or Curry (false).
    annotated: Option<bool>,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

impl TermParser<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self, c: char) {
        self.pos += c.len_utf8();
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut chars = self.src[self.pos..].char_indices();
        match chars.next() {
            Some((_, c)) if ident_start(c) => {}
            _ => return Err(ParseError::new(start, "expected identifier")),
        }
        let end = chars
            .find(|&(_, c)| !ident_char(c))
            .map(|(i, _)| start + i)
            .unwrap_or(self.src.len());
        self.pos = end;
        Ok(self.src[start..end].to_string())
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(c @ ('\\' | 'λ')) => {
                let lam_pos = self.pos;
                self.bump(c);
                let x = self.ident()?;
                let ann = if self.peek() == Some(':') {
                    self.pos += 1;
                    let mut tp = TypeParser {
                        src: self.src,
                        pos: self.pos,
                        store: self.store,
                    };
                    let ty = tp.ty()?;
                    self.pos = tp.pos;
                    Some(ty)
                } else {
                    None
                };
                match self.annotated {
                    None => self.annotated = Some(ann.is_some()),
                    Some(style) if style != ann.is_some() => {
                        return Err(ParseError::new(
                            lam_pos,
                            "mixed annotated and unannotated binders",
                        ));
                    }
                    Some(_) => {}
                }
                if self.peek() != Some('.') {
                    return Err(ParseError::new(self.pos, "expected `.` after binder"));
                }
                self.pos += 1;
                let body = self.term()?;
                Ok(Term::Lam(x, ann, Box::new(body)))
            }
            _ => {
                let mut t = self.atom()?;
                loop {
                    match self.peek() {
                        Some('\\' | 'λ') => {
                            let last = self.term()?;
                            return Ok(Term::app(t, last));
                        }
                        Some(c) if c == '(' || ident_start(c) => {
                            let a = self.atom()?;
                            t = Term::app(t, a);
                        }
                        _ => return Ok(t),
                    }
                }
            }
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let t = self.term()?;
                if self.peek() != Some(')') {
                    return Err(ParseError::new(self.pos, "expected `)`"));
                }
                self.pos += 1;
                Ok(t)
            }
            Some(c) if ident_start(c) => Ok(Term::Var(self.ident()?)),
            Some(_) => Err(ParseError::new(self.pos, "expected identifier or `(`")),
            None => Err(ParseError::new(self.pos, "unexpected end of input")),
        }
    }
}
