//! Safety, long-safety and homogeneous long-safety (hls) checking.
//!
//! The checkers are positional: a Church-style term is walked once,
//! computing for every subterm its type and its free variables, and every
//! subterm that sits in an unsafe position is required not to have a free
//! variable of order strictly below the order of its own type.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use serde_json::json;

use crate::infer::{infer_at, Context, InferError, TypeCheckError, Typing, type_check};
use crate::syntax::{Path, Step, Term};
use crate::types::{Ty, TypeStore};

/// Which unsafe-position clause applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    WholeTerm,
    Argument,
    /// Head of an application that is not itself an application.
    AppliedHead,
    /// Non-abstraction directly under a λ (long-safety only).
    AbstractionBody,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::WholeTerm => "whole term",
            Clause::Argument => "argument position",
            Clause::AppliedHead => "applied non-application",
            Clause::AbstractionBody => "non-abstraction body under λ",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Safe,
    LongSafe,
    Hls,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Safe => "safe",
            Mode::LongSafe => "long-safe",
            Mode::Hls => "hls",
        })
    }
}

/// A subterm `u : A` in unsafe position with a free `x : B`, `ord(B) < ord(A)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub path: Path,
    pub subterm_type: Ty,
    pub subterm_order: u32,
    pub var: String,
    pub var_type: Ty,
    pub var_order: u32,
    pub clause: Clause,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Unsafe(Witness),
    /// A subterm (or context entry, when `path` is `None`) has a
    /// non-homogeneous type.
    NonHomogeneous { path: Option<Path>, var: Option<String>, ty: Ty },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetyReport {
    pub mode: Mode,
    pub verdict: Verdict,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.verdict == Verdict::Safe
    }

    /// Machine-readable form; types are given both as text and as DAG node lists.
    pub fn to_json(&self, store: &TypeStore) -> serde_json::Value {
        let ty = |t: Ty| json!({ "text": store.display(t), "dag": store.serialize_dag(t) });
        match &self.verdict {
            Verdict::Safe => json!({ "mode": self.mode, "verdict": "safe" }),
            Verdict::Unsafe(w) => json!({
                "mode": self.mode,
                "verdict": "unsafe",
                "path": w.path,
                "clause": w.clause,
                "subterm_type": ty(w.subterm_type),
                "subterm_order": w.subterm_order,
                "var": w.var,
                "var_type": ty(w.var_type),
                "var_order": w.var_order,
            }),
            Verdict::NonHomogeneous { path, var, ty: t } => json!({
                "mode": self.mode,
                "verdict": "non-homogeneous",
                "path": path,
                "var": var,
                "type": ty(*t),
            }),
        }
    }

    pub fn display<'a>(&'a self, store: &'a TypeStore) -> impl fmt::Display + 'a {
        ReportDisplay { r: self, store }
    }
}

struct ReportDisplay<'a> {
    r: &'a SafetyReport,
    store: &'a TypeStore,
}

impl fmt::Display for ReportDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.store;
        match &self.r.verdict {
            Verdict::Safe => write!(f, "Safe ({})", self.r.mode),
            Verdict::Unsafe(w) => write!(
                f,
                "Unsafe ({}): subterm at {} of type {} (order {}) in {} has free {} : {} (order {})",
                self.r.mode,
                w.path,
                s.display(w.subterm_type),
                w.subterm_order,
                w.clause,
                w.var,
                s.display(w.var_type),
                w.var_order
            ),
            Verdict::NonHomogeneous { path: Some(p), ty, .. } => write!(
                f,
                "NonHomogeneous ({}): subterm at {} has type {}",
                self.r.mode,
                p,
                s.display(*ty)
            ),
            Verdict::NonHomogeneous { var, ty, .. } => write!(
                f,
                "NonHomogeneous ({}): context entry {} has type {}",
                self.r.mode,
                var.as_deref().unwrap_or("?"),
                s.display(*ty)
            ),
        }
    }
}

/// Infimum of the orders of a context; `Infinite` for the empty context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum InfOrd {
    Finite(u32),
    Infinite,
}

pub fn inford(store: &TypeStore, ctx: &Context) -> InfOrd {
    ctx.values()
        .map(|t| store.order(*t))
        .min()
        .map_or(InfOrd::Infinite, InfOrd::Finite)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pos {
    Root,
    Arg,
    Head,
    Body,
    Other,
}

struct Walker<'a> {
    store: &'a TypeStore,
    ctx: &'a Context,
    long: bool,
    visited: usize,
    found: Option<(usize, Witness)>,
}

type Free<'t> = BTreeMap<&'t str, Ty>;

impl<'a> Walker<'a> {
    fn lookup(&self, x: &str, scope: &[(&str, Ty)]) -> Ty {
        scope
            .iter()
            .rev()
            .find(|(b, _)| *b == x)
            .map(|(_, t)| *t)
            .or_else(|| self.ctx.get(x).copied())
            .expect("term was type-checked")
    }

    fn go<'t>(
        &mut self,
        t: &'t Term,
        pos: Pos,
        scope: &mut Vec<(&'t str, Ty)>,
        path: &mut Vec<Step>,
    ) -> (Ty, Free<'t>) {
        let index = self.visited;
        self.visited += 1;
        let (ty, free) = match t {
            Term::Var(x) => {
                let ty = self.lookup(x, scope);
                (ty, BTreeMap::from([(x.as_str(), ty)]))
            }
            Term::Lam(x, ann, body) => {
                let dom = ann.expect("term was type-checked");
                scope.push((x, dom));
                path.push(Step::Body);
                let (cod, mut free) = self.go(body, Pos::Body, scope, path);
                path.pop();
                scope.pop();
                free.remove(x.as_str());
                (self.store.arrow(dom, cod), free)
            }
            Term::App(f, a) => {
                let fpos = if matches!(**f, Term::App(..)) { Pos::Other } else { Pos::Head };
                path.push(Step::Fun);
                let (tf, mut free) = self.go(f, fpos, scope, path);
                path.pop();
                path.push(Step::Arg);
                let (_, fa) = self.go(a, Pos::Arg, scope, path);
                path.pop();
                free.extend(fa);
                let cod = self.store.split_arrow(tf).expect("term was type-checked").1;
                (cod, free)
            }
        };
        let clause = match pos {
            Pos::Root => Some(Clause::WholeTerm),
            Pos::Arg => Some(Clause::Argument),
            Pos::Head => Some(Clause::AppliedHead),
            Pos::Body if self.long && !matches!(t, Term::Lam(..)) => Some(Clause::AbstractionBody),
            _ => None,
        };
        if let Some(clause) = clause {
            let ord = self.store.order(ty);
            let low = free
                .iter()
                .map(|(x, b)| (self.store.order(*b), *x, *b))
                .min();
            if let Some((vord, var, vty)) = low {
                if vord < ord && self.found.as_ref().is_none_or(|(i, _)| index < *i) {
                    // Report the first offender in preorder.
                    self.found = Some((index, Witness {
                        path: Path(path.clone()),
                        subterm_type: ty,
                        subterm_order: ord,
                        var: var.to_string(),
                        var_type: vty,
                        var_order: vord,
                        clause,
                    }));
                }
            }
        }
        (ty, free)
    }
}

fn positional(store: &TypeStore, t: &Typing, long: bool) -> Result<Verdict, TypeCheckError> {
    type_check(store, &t.subject, &t.context)?;
    let mut w = Walker {
        store,
        ctx: &t.context,
        long,
        visited: 0,
        found: None,
    };
    w.go(&t.subject, Pos::Root, &mut Vec::new(), &mut Vec::new());
    Ok(match w.found {
        Some((_, wit)) => Verdict::Unsafe(wit),
        None => Verdict::Safe,
    })
}

/// Safety of a Church-style typing.
pub fn check_safe(store: &TypeStore, t: &Typing) -> Result<SafetyReport, TypeCheckError> {
    Ok(SafetyReport {
        mode: Mode::Safe,
        verdict: positional(store, t, false)?,
    })
}

/// Long-safety of a Church-style typing.
pub fn check_long_safe(store: &TypeStore, t: &Typing) -> Result<SafetyReport, TypeCheckError> {
    Ok(SafetyReport {
        mode: Mode::LongSafe,
        verdict: positional(store, t, true)?,
    })
}

/// First subterm (preorder) or context entry whose type is not homogeneous.
pub fn find_non_homogeneous(store: &TypeStore, t: &Typing) -> Option<Verdict> {
    for (x, ty) in &t.context {
        if !store.is_homogeneous(*ty) {
            return Some(Verdict::NonHomogeneous {
                path: None,
                var: Some(x.clone()),
                ty: *ty,
            });
        }
    }
    fn go<'t>(
        store: &TypeStore,
        t: &'t Term,
        ctx: &Context,
        scope: &mut Vec<(&'t str, Ty)>,
        path: &mut Vec<Step>,
        bad: &mut Option<(Path, Ty)>,
    ) -> Ty {
        let depth = path.len();
        let ty = match t {
            Term::Var(x) => scope
                .iter()
                .rev()
                .find(|(b, _)| *b == x.as_str())
                .map(|(_, t)| *t)
                .or_else(|| ctx.get(x).copied())
                .expect("term was type-checked"),
            Term::Lam(x, ann, body) => {
                let dom = ann.expect("term was type-checked");
                scope.push((x, dom));
                path.push(Step::Body);
                let cod = go(store, body, ctx, scope, path, bad);
                path.pop();
                scope.pop();
                store.arrow(dom, cod)
            }
            Term::App(f, a) => {
                path.push(Step::Fun);
                let tf = go(store, f, ctx, scope, path, bad);
                path.pop();
                path.push(Step::Arg);
                go(store, a, ctx, scope, path, bad);
                path.pop();
                store.split_arrow(tf).expect("term was type-checked").1
            }
        };
        // Post-order, so an enclosing offender replaces the ones inside it.
        if !store.is_homogeneous(ty) && bad.as_ref().is_none_or(|(p, _)| p.0.len() > depth) {
            *bad = Some((Path(path.clone()), ty));
        }
        ty
    }
    let mut bad = None;
    go(store, &t.subject, &t.context, &mut Vec::new(), &mut Vec::new(), &mut bad);
    bad.map(|(path, ty)| Verdict::NonHomogeneous {
        path: Some(path),
        var: None,
        ty,
    })
}

/// Homogeneous long-safety of a Church-style typing.
pub fn check_hls_typing(store: &TypeStore, t: &Typing) -> Result<SafetyReport, TypeCheckError> {
    type_check(store, &t.subject, &t.context)?;
    if let Some(v) = find_non_homogeneous(store, t) {
        return Ok(SafetyReport {
            mode: Mode::Hls,
            verdict: v,
        });
    }
    Ok(SafetyReport {
        mode: Mode::Hls,
        verdict: positional(store, t, true)?,
    })
}

/// Elaborates `t` at type `a` and decides `⊢_hls t : a`.
pub fn check_hls(store: &TypeStore, t: &Term, a: Ty) -> Result<SafetyReport, InferError> {
    check_hls_elaborated(store, t, a).map(|(_, r)| r)
}

/// [`check_hls`], also returning the elaboration it judged.
pub fn check_hls_elaborated(
    store: &TypeStore,
    t: &Term,
    a: Ty,
) -> Result<(Typing, SafetyReport), InferError> {
    let typing = infer_at(store, t, a).map_err(|e| match e {
        InferError::NotTypable { path, clash } => InferError::NotTypableAtGivenType {
            path,
            reason: clash.to_string(),
        },
        other => other,
    })?;
    let report = check_hls_typing(store, &typing).expect("elaborated terms type-check");
    Ok((typing, report))
}
