//! Church encodings of booleans, words and numerals, the boolean and
//! concatenation combinators, tower numerals, and decoders working on
//! β-normal forms.

use std::fmt;

use crate::normalize::{normalize_naive, Budget, NormalizeError};
use crate::syntax::Term;
use crate::types::{Ty, TypeStore};

/// Separator letter added by the compiler.
pub const HASH: char = '#';
/// Marker letter added by the compiler, printed as `_` in ASCII output.
pub const BOX: char = '□';

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ChurchError {
    #[error("alphabet must not be empty")]
    EmptyAlphabet,
    #[error("letter {0:?} occurs twice in the alphabet")]
    DuplicateLetter(char),
    #[error("letter {0:?} is not in the alphabet")]
    LetterNotInAlphabet(char),
    #[error("normal form is not a Church-encoded string: {0}")]
    NotAStringNormalForm(String),
    #[error("normal form is not a Church boolean: {0}")]
    NotABoolean(String),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// An ordered alphabet of distinct letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet(Vec<char>);

impl Alphabet {
    pub fn new(letters: impl IntoIterator<Item = char>) -> Result<Self, ChurchError> {
        let v: Vec<char> = letters.into_iter().collect();
        if v.is_empty() {
            return Err(ChurchError::EmptyAlphabet);
        }
        for (i, c) in v.iter().enumerate() {
            if v[..i].contains(c) {
                return Err(ChurchError::DuplicateLetter(*c));
            }
        }
        Ok(Alphabet(v))
    }

    pub fn parse(letters: &str) -> Result<Self, ChurchError> {
        Alphabet::new(letters.chars())
    }

    pub fn letters(&self) -> &[char] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.0.iter().position(|&d| d == c)
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }

    /// This alphabet with `c` appended as the last letter.
    pub fn with(&self, c: char) -> Result<Self, ChurchError> {
        Alphabet::new(self.0.iter().copied().chain([c]))
    }

    /// Binder of the letter at `i` in encodings over this alphabet.
    pub fn binder(&self, i: usize) -> String {
        letter_binder(self.0[i])
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&ascii_word(&self.0.iter().collect::<String>()))
    }
}

/// Replaces `□` by `_` for ASCII output.
pub fn ascii_word(w: &str) -> String {
    w.chars().map(|c| if c == BOX { '_' } else { c }).collect()
}

fn letter_binder(c: char) -> String {
    match c {
        HASH => "f_hash".into(),
        BOX => "f_box".into(),
        c if c.is_ascii_alphanumeric() => format!("f_{c}"),
        c => format!("f_u{:04x}", c as u32),
    }
}

/// A closed term with the type it is certified at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedValue {
    pub term: Term,
    pub claimed_type: Ty,
}

fn v(x: &str) -> Term {
    Term::var(x)
}

fn lams(names: &[&str], body: Term) -> Term {
    Term::lams(names, body)
}

pub fn true_term() -> Term {
    lams(&["x", "y"], v("x"))
}

pub fn false_term() -> Term {
    lams(&["x", "y"], v("y"))
}

pub fn bool_term(b: bool) -> Term {
    if b {
        true_term()
    } else {
        false_term()
    }
}

/// `λb₁b₂xy. b₁ (b₂ x y) y`
pub fn and_term() -> Term {
    let inner = Term::apps(v("b2"), [v("x"), v("y")]);
    lams(&["b1", "b2", "x", "y"], Term::apps(v("b1"), [inner, v("y")]))
}

/// `λb₁b₂xy. b₁ x (b₂ x y)`
pub fn or_term() -> Term {
    let inner = Term::apps(v("b2"), [v("x"), v("y")]);
    lams(&["b1", "b2", "x", "y"], Term::apps(v("b1"), [v("x"), inner]))
}

/// `λbxy. b y x`
pub fn not_term() -> Term {
    lams(&["b", "x", "y"], Term::apps(v("b"), [v("y"), v("x")]))
}

pub struct BoolOps {
    pub and: EncodedValue,
    pub or: EncodedValue,
    pub not: EncodedValue,
}

pub fn bool_ops(store: &TypeStore) -> BoolOps {
    let b = store.bool_ty();
    let bin = store.arrows(&[b, b], b);
    BoolOps {
        and: EncodedValue {
            term: and_term(),
            claimed_type: bin,
        },
        or: EncodedValue {
            term: or_term(),
            claimed_type: bin,
        },
        not: EncodedValue {
            term: not_term(),
            claimed_type: store.arrow(b, b),
        },
    }
}

/// The Church encoding of `w`; the first letter is applied outermost.
pub fn word_term(sigma: &Alphabet, w: &str) -> Result<Term, ChurchError> {
    let mut body = v("x");
    for c in w.chars().rev() {
        let i = sigma.index_of(c).ok_or(ChurchError::LetterNotInAlphabet(c))?;
        body = Term::app(v(&sigma.binder(i)), body);
    }
    let names: Vec<String> = (0..sigma.len()).map(|i| sigma.binder(i)).collect();
    Ok(Term::lams(&names, Term::lams(&["x"], body)))
}

pub fn encode_word(store: &TypeStore, sigma: &Alphabet, w: &str) -> Result<EncodedValue, ChurchError> {
    Ok(EncodedValue {
        term: word_term(sigma, w)?,
        claimed_type: store.str_ty(sigma.len()),
    })
}

/// The one-letter alphabet whose words are the numerals.
pub fn unary() -> Alphabet {
    Alphabet(vec!['I'])
}

pub fn nat_term(n: usize) -> Term {
    word_term(&unary(), &"I".repeat(n)).expect("unary letter")
}

pub fn encode_nat(store: &TypeStore, n: usize) -> EncodedValue {
    EncodedValue {
        term: nat_term(n),
        claimed_type: store.nat_ty(),
    }
}

/// `λs₁…s_k f₁…f_n x. s₁ f⃗ (s₂ f⃗ (… (s_k f⃗ x)))`
pub fn cat_k_term(sigma: &Alphabet, k: usize) -> Term {
    assert!(k >= 1, "cat_k needs at least one operand");
    let fs: Vec<String> = (0..sigma.len()).map(|i| sigma.binder(i)).collect();
    let ss: Vec<String> = (1..=k).map(|i| format!("s{i}")).collect();
    let mut body = v("x");
    for s in ss.iter().rev() {
        body = Term::apps(v(s), fs.iter().map(|f| v(f)).chain([body]));
    }
    Term::lams(&ss, Term::lams(&fs, Term::lams(&["x"], body)))
}

pub fn cat_term(sigma: &Alphabet) -> Term {
    cat_k_term(sigma, 2)
}

pub fn cat_k(store: &TypeStore, sigma: &Alphabet, k: usize) -> EncodedValue {
    let s = store.str_ty(sigma.len());
    EncodedValue {
        term: cat_k_term(sigma, k),
        claimed_type: store.arrows(&vec![s; k], s),
    }
}

pub fn cat(store: &TypeStore, sigma: &Alphabet) -> EncodedValue {
    cat_k(store, sigma, 2)
}

/// `2̄ 2̄ … 2̄` (`n` copies, left-associated); `1̄` for `n = 0`.
pub fn tow_term(n: usize) -> Term {
    if n == 0 {
        return nat_term(1);
    }
    let two = nat_term(2);
    Term::apps(two.clone(), std::iter::repeat_n(two, n - 1))
}

pub fn tow(store: &TypeStore, n: usize) -> EncodedValue {
    EncodedValue {
        term: tow_term(n),
        claimed_type: store.nat_ty(),
    }
}

/// `tower(0) = 1`, `tower(n+1) = 2^tower(n)`; `None` on overflow.
pub fn tower(n: usize) -> Option<u64> {
    let mut t: u64 = 1;
    for _ in 0..n {
        t = 1u64.checked_shl(u32::try_from(t).ok()?).filter(|_| t < 64)?;
    }
    Some(t)
}

/// Reads a word off a β-normal term of the shape `λf₁…f_k x. f_{i₁} (… x)`.
pub fn decode_normal_word(t: &Term, sigma: &Alphabet) -> Result<String, ChurchError> {
    let bad = |why: &str| ChurchError::NotAStringNormalForm(format!("{why} in {t}"));
    let mut binders = Vec::new();
    let mut body = t;
    while let Term::Lam(x, _, b) = body {
        binders.push(x.as_str());
        body = b;
    }
    if binders.len() != sigma.len() + 1 {
        return Err(bad(&format!(
            "expected {} binders, found {}",
            sigma.len() + 1,
            binders.len()
        )));
    }
    // Binder names may repeat; the innermost binding wins.
    let resolve = |name: &str| binders.iter().rposition(|b| *b == name);
    let mut word = String::new();
    let mut cur = body;
    loop {
        match cur {
            Term::Var(x) if resolve(x) == Some(sigma.len()) => return Ok(word),
            Term::App(f, a) => {
                let Term::Var(fname) = &**f else {
                    return Err(bad("head is not a letter variable"));
                };
                match resolve(fname) {
                    Some(i) if i < sigma.len() => word.push(sigma.letters()[i]),
                    _ => return Err(bad("head is not a letter variable")),
                }
                cur = a;
            }
            _ => return Err(bad("unexpected subterm")),
        }
    }
}

/// Normalizes `t` and decodes it as a word over `sigma`.
pub fn decode_word(t: &Term, sigma: &Alphabet, budget: &Budget) -> Result<String, ChurchError> {
    decode_normal_word(&normalize_naive(t, budget)?, sigma)
}

/// `true`/`false` from a β-normal term.
pub fn decode_normal_bool(t: &Term) -> Result<bool, ChurchError> {
    if let Term::Lam(x, _, b) = t {
        if let Term::Lam(y, _, body) = &**b {
            if let Term::Var(z) = &**body {
                if z == y {
                    return Ok(false);
                }
                if z == x {
                    return Ok(true);
                }
            }
        }
    }
    Err(ChurchError::NotABoolean(t.to_string()))
}

/// Normalizes `t` and decodes it as a boolean.
pub fn decode_bool(t: &Term, budget: &Budget) -> Result<bool, ChurchError> {
    decode_normal_bool(&normalize_naive(t, budget)?)
}
