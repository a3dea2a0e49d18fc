//! Locally nameless working representation.
//!
//! Bound variables are de Bruijn indices, free variables keep their names.
//! Every node caches its tree size, height and `lift`, the number of
//! enclosing binders its free indices reach past (0 for a locally closed
//! node). Shifting and substitution return the input `Rc` untouched whenever
//! `lift` shows that nothing below can change.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use crate::syntax::Term;
use crate::types::Ty;

pub(crate) type Db = Rc<DbNode>;

pub(crate) struct DbNode {
    pub kind: Kind,
    pub size: u64,
    pub height: u64,
    pub lift: u32,
}

pub(crate) enum Kind {
    Bound(u32),
    Free(Rc<str>),
    Lam(Rc<str>, Option<Ty>, Db),
    App(Db, Db),
}

pub(crate) fn bound(i: u32) -> Db {
    Rc::new(DbNode {
        kind: Kind::Bound(i),
        size: 1,
        height: 1,
        lift: i + 1,
    })
}

pub(crate) fn free(name: Rc<str>) -> Db {
    Rc::new(DbNode {
        kind: Kind::Free(name),
        size: 1,
        height: 1,
        lift: 0,
    })
}

pub(crate) fn lam(name: Rc<str>, ann: Option<Ty>, body: Db) -> Db {
    Rc::new(DbNode {
        size: body.size.saturating_add(1),
        height: body.height.saturating_add(1),
        lift: body.lift.saturating_sub(1),
        kind: Kind::Lam(name, ann, body),
    })
}

pub(crate) fn app(f: Db, a: Db) -> Db {
    Rc::new(DbNode {
        size: f.size.saturating_add(a.size).saturating_add(1),
        height: f.height.max(a.height).saturating_add(1),
        lift: f.lift.max(a.lift),
        kind: Kind::App(f, a),
    })
}

pub(crate) fn from_term(t: &Term) -> Db {
    let mut scope: Vec<&str> = Vec::new();
    let mut names: HashMap<&str, Rc<str>> = HashMap::new();
    from_term_rec(t, &mut scope, &mut names)
}

fn intern<'a>(names: &mut HashMap<&'a str, Rc<str>>, s: &'a str) -> Rc<str> {
    names.entry(s).or_insert_with(|| Rc::from(s)).clone()
}

fn from_term_rec<'a>(
    t: &'a Term,
    scope: &mut Vec<&'a str>,
    names: &mut HashMap<&'a str, Rc<str>>,
) -> Db {
    match t {
        Term::Var(x) => match scope.iter().rev().position(|b| *b == x.as_str()) {
            Some(i) => bound(i as u32),
            None => free(intern(names, x)),
        },
        Term::Lam(x, ann, body) => {
            scope.push(x);
            let b = from_term_rec(body, scope, names);
            scope.pop();
            lam(intern(names, x), *ann, b)
        }
        Term::App(f, a) => {
            let f = from_term_rec(f, scope, names);
            let a = from_term_rec(a, scope, names);
            app(f, a)
        }
    }
}

/// Replaces free variable `name` by the locally closed `value`.
pub(crate) fn subst_free(t: &Db, name: &str, value: &Db) -> Db {
    match &t.kind {
        Kind::Free(x) if &**x == name => value.clone(),
        Kind::Free(_) | Kind::Bound(_) => t.clone(),
        Kind::Lam(x, ann, body) => lam(x.clone(), *ann, subst_free(body, name, value)),
        Kind::App(f, a) => app(subst_free(f, name, value), subst_free(a, name, value)),
    }
}

pub(crate) fn has_free(t: &Db, name: &str) -> bool {
    match &t.kind {
        Kind::Free(x) => &**x == name,
        Kind::Bound(_) => false,
        Kind::Lam(_, _, body) => has_free(body, name),
        Kind::App(f, a) => has_free(f, name) || has_free(a, name),
    }
}

/// Adds `by` to every index `>= cutoff`.
pub(crate) fn shift(t: &Db, by: u32, cutoff: u32) -> Db {
    if by == 0 || t.lift <= cutoff {
        return t.clone();
    }
    match &t.kind {
        Kind::Bound(i) => bound(i + by),
        Kind::Free(_) => t.clone(),
        Kind::Lam(x, ann, body) => lam(x.clone(), *ann, shift(body, by, cutoff + 1)),
        Kind::App(f, a) => app(shift(f, by, cutoff), shift(a, by, cutoff)),
    }
}

/// Removes one binder level: every index `> cutoff` is decremented.
/// Index `cutoff` must not occur.
pub(crate) fn unshift(t: &Db, cutoff: u32) -> Db {
    if t.lift <= cutoff {
        return t.clone();
    }
    match &t.kind {
        Kind::Bound(i) => {
            debug_assert!(*i != cutoff);
            bound(i - 1)
        }
        Kind::Free(_) => t.clone(),
        Kind::Lam(x, ann, body) => lam(x.clone(), *ann, unshift(body, cutoff + 1)),
        Kind::App(f, a) => app(unshift(f, cutoff), unshift(a, cutoff)),
    }
}

/// `body[0 := value]` where `body` is the body of a binder and `value`
/// lives in the binder's outer scope.
pub(crate) fn instantiate(body: &Db, value: &Db) -> Db {
    subst_at(body, 0, value)
}

fn subst_at(t: &Db, depth: u32, value: &Db) -> Db {
    if t.lift <= depth {
        return t.clone();
    }
    match &t.kind {
        Kind::Bound(i) => {
            if *i == depth {
                shift(value, depth, 0)
            } else {
                bound(i - 1)
            }
        }
        Kind::Free(_) => t.clone(),
        Kind::Lam(x, ann, body) => lam(x.clone(), *ann, subst_at(body, depth + 1, value)),
        Kind::App(f, a) => app(subst_at(f, depth, value), subst_at(a, depth, value)),
    }
}

/// Whether bound index `idx` (relative to `t`) occurs in `t`.
pub(crate) fn mentions(t: &Db, idx: u32) -> bool {
    if t.lift <= idx {
        return false;
    }
    match &t.kind {
        Kind::Bound(i) => *i == idx,
        Kind::Free(_) => false,
        Kind::Lam(_, _, body) => mentions(body, idx + 1),
        Kind::App(f, a) => mentions(f, idx) || mentions(a, idx),
    }
}

pub(crate) fn is_normal(t: &Db) -> bool {
    match &t.kind {
        Kind::Bound(_) | Kind::Free(_) => true,
        Kind::Lam(_, _, body) => is_normal(body),
        Kind::App(f, a) => !matches!(f.kind, Kind::Lam(..)) && is_normal(f) && is_normal(a),
    }
}

/// Structural equality up to binder names. Annotations must agree when
/// both sides carry one.
pub(crate) fn alpha_eq(a: &Db, b: &Db) -> bool {
    if Rc::ptr_eq(a, b) {
        return true;
    }
    if a.size != b.size {
        return false;
    }
    match (&a.kind, &b.kind) {
        (Kind::Bound(i), Kind::Bound(j)) => i == j,
        (Kind::Free(x), Kind::Free(y)) => x == y,
        (Kind::Lam(_, ta, ba), Kind::Lam(_, tb, bb)) => {
            let ann_ok = match (ta, tb) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            };
            ann_ok && alpha_eq(ba, bb)
        }
        (Kind::App(fa, xa), Kind::App(fb, xb)) => alpha_eq(fa, fb) && alpha_eq(xa, xb),
        _ => false,
    }
}

fn collect_free<'a>(t: &'a Db, out: &mut HashSet<&'a str>) {
    match &t.kind {
        Kind::Free(x) => {
            out.insert(x);
        }
        Kind::Bound(_) => {}
        Kind::Lam(_, _, body) => collect_free(body, out),
        Kind::App(f, a) => {
            collect_free(f, out);
            collect_free(a, out);
        }
    }
}

/// Converts back to a named term. Binders keep their recorded names unless
/// that would capture a free variable or shadow an enclosing binder; then
/// the name gets a `_N` suffix.
pub(crate) fn to_term(t: &Db) -> Term {
    let mut free_names = HashSet::new();
    collect_free(t, &mut free_names);
    let mut rb = Readback {
        free: free_names,
        in_scope: HashMap::new(),
        stack: Vec::new(),
    };
    rb.go(t)
}

struct Readback<'a> {
    free: HashSet<&'a str>,
    in_scope: HashMap<String, usize>,
    stack: Vec<String>,
}

impl Readback<'_> {
    fn taken(&self, name: &str) -> bool {
        self.free.contains(name) || self.in_scope.get(name).is_some_and(|&n| n > 0)
    }

    fn choose(&self, hint: &str) -> String {
        if !self.taken(hint) {
            return hint.to_string();
        }
        let base = strip_suffix(hint);
        (1u64..)
            .map(|n| format!("{base}_{n}"))
            .find(|cand| !self.taken(cand))
            .expect("unbounded candidate supply")
    }

    fn go(&mut self, t: &Db) -> Term {
        match &t.kind {
            Kind::Bound(i) => {
                let name = &self.stack[self.stack.len() - 1 - *i as usize];
                Term::Var(name.clone())
            }
            Kind::Free(x) => Term::Var(x.to_string()),
            Kind::Lam(hint, ann, body) => {
                let name = self.choose(hint);
                *self.in_scope.entry(name.clone()).or_insert(0) += 1;
                self.stack.push(name.clone());
                let b = self.go(body);
                self.stack.pop();
                *self.in_scope.get_mut(&name).expect("pushed above") -= 1;
                Term::Lam(name, *ann, Box::new(b))
            }
            Kind::App(f, a) => {
                let f = self.go(f);
                let a = self.go(a);
                Term::App(Box::new(f), Box::new(a))
            }
        }
    }
}

fn strip_suffix(name: &str) -> &str {
    if let Some(pos) = name.rfind('_') {
        let tail = &name[pos + 1..];
        if pos > 0 && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            return &name[..pos];
        }
    }
    name
}
