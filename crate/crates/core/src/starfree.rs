//! Star-free expressions: parsing, membership by span tables, and bounded
//! emptiness and equivalence by exhaustive enumeration.

use std::fmt;

use crate::church::{ascii_word, Alphabet, BOX};
use crate::error::ParseError;

pub const DEFAULT_ENUM_CAP: u64 = 2_000_000;

/// Characters with a fixed meaning in the expression syntax.
pub const RESERVED: &[char] = &['0', 'e', '~', '|', '.', '(', ')'];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Empty,
    Eps,
    Letter(char),
    Union(Box<Expr>, Box<Expr>),
    Concat(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn union(a: Expr, b: Expr) -> Expr {
        Expr::Union(Box::new(a), Box::new(b))
    }

    pub fn concat(a: Expr, b: Expr) -> Expr {
        Expr::Concat(Box::new(a), Box::new(b))
    }

    pub fn not(a: Expr) -> Expr {
        Expr::Not(Box::new(a))
    }

    /// Number of constructors.
    pub fn size(&self) -> usize {
        match self {
            Expr::Empty | Expr::Eps | Expr::Letter(_) => 1,
            Expr::Not(a) => 1 + a.size(),
            Expr::Union(a, b) | Expr::Concat(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn letters_ok(&self, sigma: &Alphabet) -> Result<(), char> {
        match self {
            Expr::Empty | Expr::Eps => Ok(()),
            Expr::Letter(c) if sigma.contains(*c) => Ok(()),
            Expr::Letter(c) => Err(*c),
            Expr::Not(a) => a.letters_ok(sigma),
            Expr::Union(a, b) | Expr::Concat(a, b) => {
                a.letters_ok(sigma)?;
                b.letters_ok(sigma)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // precedence: 0 union, 1 concat, 2 complement and atoms
        fn go(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let prec = match e {
                Expr::Union(..) => 0,
                Expr::Concat(..) => 1,
                _ => 2,
            };
            if prec < min {
                f.write_str("(")?;
            }
            match e {
                Expr::Empty => f.write_str("0")?,
                Expr::Eps => f.write_str("e")?,
                Expr::Letter(c) => f.write_str(&ascii_word(&c.to_string()))?,
                Expr::Not(a) => {
                    f.write_str("~")?;
                    go(a, 2, f)?;
                }
                Expr::Union(a, b) => {
                    go(a, 0, f)?;
                    f.write_str("|")?;
                    go(b, 1, f)?;
                }
                Expr::Concat(a, b) => {
                    go(a, 1, f)?;
                    f.write_str(".")?;
                    go(b, 2, f)?;
                }
            }
            if prec < min {
                f.write_str(")")?;
            }
            Ok(())
        }
        go(self, 0, f)
    }
}

/// An expression together with its alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StarFreeExpr {
    pub expr: Expr,
    pub alphabet: Alphabet,
}

impl StarFreeExpr {
    pub fn new(expr: Expr, alphabet: Alphabet) -> Result<Self, StarFreeError> {
        expr.letters_ok(&alphabet)
            .map_err(StarFreeError::LetterNotInAlphabet)?;
        Ok(StarFreeExpr { expr, alphabet })
    }

    pub fn size(&self) -> usize {
        self.expr.size()
    }
}

impl fmt::Display for StarFreeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StarFreeError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error("letter {0:?} is not in the alphabet")]
    LetterNotInAlphabet(char),
    #[error("letter {0:?} is reserved by the expression syntax")]
    ReservedLetter(char),
    #[error("expressions are over different alphabets")]
    AlphabetMismatch,
    #[error("enumerating {needed} words exceeds the cap of {cap}")]
    BudgetExceeded { needed: u64, cap: u64 },
}

/// Parses `E ::= E '|' T | T`, `T ::= T '.' F | T F | F`,
/// `F ::= '~' F | '0' | 'e' | letter | '(' E ')'`. `_` stands for `□`.
pub fn parse_expr(text: &str, sigma: &Alphabet) -> Result<StarFreeExpr, StarFreeError> {
    if let Some(&c) = sigma.letters().iter().find(|c| RESERVED.contains(c) || c.is_whitespace()) {
        return Err(StarFreeError::ReservedLetter(c));
    }
    let mut p = ExprParser {
        chars: text.char_indices().collect(),
        pos: 0,
        len: text.len(),
        sigma,
    };
    let e = p.union()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.err("unexpected character").into());
    }
    Ok(StarFreeExpr {
        expr: e,
        alphabet: sigma.clone(),
    })
}

struct ExprParser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    len: usize,
    sigma: &'a Alphabet,
}

impl ExprParser<'_> {
    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn err(&self, msg: &str) -> ParseError {
        ParseError::new(self.offset(), msg)
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn union(&mut self) -> Result<Expr, StarFreeError> {
        let mut e = self.concat()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            let r = self.concat()?;
            e = Expr::union(e, r);
        }
        Ok(e)
    }

    fn starts_factor(&self, c: char) -> bool {
        !matches!(c, '|' | '.' | ')')
    }

    fn concat(&mut self) -> Result<Expr, StarFreeError> {
        let mut e = self.factor()?;
        loop {
            match self.peek() {
                Some('.') => {
                    self.pos += 1;
                    let r = self.factor()?;
                    e = Expr::concat(e, r);
                }
                Some(c) if self.starts_factor(c) => {
                    let r = self.factor()?;
                    e = Expr::concat(e, r);
                }
                _ => return Ok(e),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, StarFreeError> {
        let Some(c) = self.peek() else {
            return Err(self.err("expression expected").into());
        };
        match c {
            '~' => {
                self.pos += 1;
                Ok(Expr::not(self.factor()?))
            }
            '0' => {
                self.pos += 1;
                Ok(Expr::Empty)
            }
            'e' => {
                self.pos += 1;
                Ok(Expr::Eps)
            }
            '(' => {
                self.pos += 1;
                let e = self.union()?;
                if self.peek() != Some(')') {
                    return Err(self.err("')' expected").into());
                }
                self.pos += 1;
                Ok(e)
            }
            '|' | '.' | ')' => Err(self.err("expression expected").into()),
            c => {
                let letter = if c == '_' && !self.sigma.contains('_') { BOX } else { c };
                if !self.sigma.contains(letter) {
                    return Err(StarFreeError::LetterNotInAlphabet(c));
                }
                self.pos += 1;
                Ok(Expr::Letter(letter))
            }
        }
    }
}

/// Membership tables for one word: `table[node][i][j]` says whether the
/// span `w[i..j]` belongs to the language of subexpression `node`.
struct Spans<'a> {
    word: &'a [char],
    tables: Vec<Vec<bool>>,
}

impl Spans<'_> {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.word.len() + 1) + j
    }

    /// Fills tables bottom-up; returns the node id of `e`.
    fn build(&mut self, e: &Expr) -> usize {
        let n = self.word.len();
        let mut t = vec![false; (n + 1) * (n + 1)];
        match e {
            Expr::Empty => {}
            Expr::Eps => {
                for i in 0..=n {
                    t[self.idx(i, i)] = true;
                }
            }
            Expr::Letter(c) => {
                for i in 0..n {
                    if self.word[i] == *c {
                        t[self.idx(i, i + 1)] = true;
                    }
                }
            }
            Expr::Not(a) => {
                let a = self.build(a);
                for i in 0..=n {
                    for j in i..=n {
                        let k = self.idx(i, j);
                        t[k] = !self.tables[a][k];
                    }
                }
            }
            Expr::Union(a, b) => {
                let (a, b) = (self.build(a), self.build(b));
                for i in 0..=n {
                    for j in i..=n {
                        let k = self.idx(i, j);
                        t[k] = self.tables[a][k] || self.tables[b][k];
                    }
                }
            }
            Expr::Concat(a, b) => {
                let (a, b) = (self.build(a), self.build(b));
                for i in 0..=n {
                    for j in i..=n {
                        t[self.idx(i, j)] = (i..=j)
                            .any(|m| self.tables[a][self.idx(i, m)] && self.tables[b][self.idx(m, j)]);
                    }
                }
            }
        }
        self.tables.push(t);
        self.tables.len() - 1
    }
}

/// Whether `w` belongs to the language of `e`. Letters outside the
/// alphabet simply make the word fail every letter test.
pub fn member_expr(e: &Expr, w: &[char]) -> bool {
    let mut s = Spans {
        word: w,
        tables: Vec::new(),
    };
    let root = s.build(e);
    s.tables[root][s.idx(0, w.len())]
}

pub fn member(e: &StarFreeExpr, w: &str) -> bool {
    member_expr(&e.expr, &w.chars().collect::<Vec<_>>())
}

/// Number of words of length at most `max_len` over `k` letters, saturating.
pub fn words_up_to(k: usize, max_len: usize) -> u64 {
    let mut total: u64 = 0;
    let mut layer: u64 = 1;
    for _ in 0..=max_len {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(k as u64);
    }
    total
}

/// All words of length at most `max_len`, in length-lexicographic order
/// (letters ordered as in the alphabet).
pub fn words(sigma: &Alphabet, max_len: usize) -> impl Iterator<Item = String> + '_ {
    let k = sigma.len();
    (0..=max_len).flat_map(move |len| {
        let count = (k as u64).saturating_pow(len as u32);
        (0..count).map(move |mut code| {
            let mut w = vec![' '; len];
            for slot in w.iter_mut().rev() {
                *slot = sigma.letters()[(code % k as u64) as usize];
                code /= k as u64;
            }
            w.into_iter().collect()
        })
    })
}

fn check_cap(sigma: &Alphabet, max_len: usize, cap: u64) -> Result<(), StarFreeError> {
    let needed = words_up_to(sigma.len(), max_len);
    if needed > cap {
        return Err(StarFreeError::BudgetExceeded { needed, cap });
    }
    Ok(())
}

/// Least word (length-lexicographic) of length at most `max_len` in the language.
pub fn nonempty_up_to(
    e: &StarFreeExpr,
    max_len: usize,
    cap: u64,
) -> Result<Option<String>, StarFreeError> {
    check_cap(&e.alphabet, max_len, cap)?;
    Ok(words(&e.alphabet, max_len).find(|w| member(e, w)))
}

/// `¬(¬E ∪ F) ∪ ¬(E ∪ ¬F)`, empty exactly when `E` and `F` are equivalent.
pub fn mk_equiv_expr(e: &StarFreeExpr, f: &StarFreeExpr) -> Result<StarFreeExpr, StarFreeError> {
    if e.alphabet != f.alphabet {
        return Err(StarFreeError::AlphabetMismatch);
    }
    let (a, b) = (e.expr.clone(), f.expr.clone());
    let left = Expr::not(Expr::union(Expr::not(a.clone()), b.clone()));
    let right = Expr::not(Expr::union(a, Expr::not(b)));
    Ok(StarFreeExpr {
        expr: Expr::union(left, right),
        alphabet: e.alphabet.clone(),
    })
}

/// Least word of length at most `max_len` on which `e` and `f` disagree.
pub fn first_difference(
    e: &StarFreeExpr,
    f: &StarFreeExpr,
    max_len: usize,
    cap: u64,
) -> Result<Option<String>, StarFreeError> {
    if e.alphabet != f.alphabet {
        return Err(StarFreeError::AlphabetMismatch);
    }
    check_cap(&e.alphabet, max_len, cap)?;
    Ok(words(&e.alphabet, max_len).find(|w| member(e, w) != member(f, w)))
}

pub fn equivalent_up_to(
    e: &StarFreeExpr,
    f: &StarFreeExpr,
    max_len: usize,
    cap: u64,
) -> Result<bool, StarFreeError> {
    first_difference(e, f, max_len, cap).map(|d| d.is_none())
}
