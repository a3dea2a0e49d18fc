//! Curry-to-Church elaboration by first-order unification.
//!
//! Unknown types live in a private union-find arena. Arrow classes are
//! merged before their children are unified, which keeps the procedure
//! terminating without an eager occurs check; cycles (infinite types) are
//! detected once the whole problem has been solved, and only then is the
//! equation list replayed to locate the offending subterm. Solved types are
//! read back into the shared [`TypeStore`], so the annotations of the result
//! are DAG-shared and linear in the size of the input. Metavariables left
//! unconstrained default to `o`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::syntax::{Path, Step, Term};
use crate::types::{Ty, TyNode, TypeStore};

pub type Context = BTreeMap<String, Ty>;

/// A Church-style term together with the context and type it was elaborated at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Typing {
    pub subject: Term,
    pub context: Context,
    pub ty: Ty,
}

impl Typing {
    /// The underlying Curry-style term.
    pub fn erase(&self) -> Term {
        self.subject.erase()
    }
}

/// The untyped term underlying a typing.
pub fn erase(t: &Typing) -> Term {
    t.erase()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clash {
    /// A type would have to contain itself.
    Occurs,
    /// `o` against an arrow.
    Shape,
}

impl fmt::Display for Clash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clash::Occurs => f.write_str("occurs check failed (infinite type)"),
            Clash::Shape => f.write_str("base type against arrow type"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InferError {
    #[error("not typable: {clash} at {path}")]
    NotTypable { path: Path, clash: Clash },
    #[error("no common type: {0}")]
    NoCommonType(String),
    #[error("not in β-normal form: redex at {path}")]
    NotNormalForm { path: Path },
    #[error("not typable at the given type: {reason} at {path}")]
    NotTypableAtGivenType { path: Path, reason: String },
}

#[derive(Clone, Copy)]
enum UNode {
    Meta,
    Base,
    Arrow(u32, u32),
}

struct Unifier<'s> {
    store: &'s TypeStore,
    nodes: Vec<UNode>,
    parent: Vec<u32>,
    imported: HashMap<Ty, u32>,
}

impl<'s> Unifier<'s> {
    fn new(store: &'s TypeStore) -> Self {
        Unifier {
            store,
            nodes: Vec::new(),
            parent: Vec::new(),
            imported: HashMap::new(),
        }
    }

    fn push(&mut self, n: UNode) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(n);
        self.parent.push(id);
        id
    }

    fn fresh(&mut self) -> u32 {
        self.push(UNode::Meta)
    }

    fn arrow(&mut self, a: u32, b: u32) -> u32 {
        self.push(UNode::Arrow(a, b))
    }

    fn import(&mut self, t: Ty) -> u32 {
        if let Some(&id) = self.imported.get(&t) {
            return id;
        }
        let id = match self.store.node(t) {
            TyNode::Base => self.push(UNode::Base),
            TyNode::Arrow(a, b) => {
                let a = self.import(a);
                let b = self.import(b);
                self.arrow(a, b)
            }
        };
        self.imported.insert(t, id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn unify(&mut self, a: u32, b: u32) -> Result<(), Clash> {
        let mut work = vec![(a, b)];
        while let Some((a, b)) = work.pop() {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            match (self.nodes[ra as usize], self.nodes[rb as usize]) {
                (UNode::Meta, _) => self.parent[ra as usize] = rb,
                (_, UNode::Meta) => self.parent[rb as usize] = ra,
                (UNode::Base, UNode::Base) => self.parent[ra as usize] = rb,
                (UNode::Arrow(a1, a2), UNode::Arrow(b1, b2)) => {
                    self.parent[ra as usize] = rb;
                    work.push((a2, b2));
                    work.push((a1, b1));
                }
                _ => return Err(Clash::Shape),
            }
        }
        Ok(())
    }

    /// Reads a solved class back as a store type; `Err` on a cycle.
    fn resolve(&mut self, x: u32, memo: &mut HashMap<u32, Ty>) -> Result<Ty, Clash> {
        let root = self.find(x);
        if let Some(&t) = memo.get(&root) {
            return Ok(t);
        }
        // Iterative post-order; `marks` holds classes currently being expanded.
        let mut marks = std::collections::HashSet::new();
        let mut stack = vec![(root, false)];
        while let Some((r, expanded)) = stack.pop() {
            if memo.contains_key(&r) {
                continue;
            }
            match self.nodes[r as usize] {
                UNode::Meta => {
                    memo.insert(r, self.store.base());
                }
                UNode::Base => {
                    memo.insert(r, self.store.base());
                }
                UNode::Arrow(a, b) => {
                    let (ra, rb) = (self.find(a), self.find(b));
                    if expanded {
                        marks.remove(&r);
                        let t = self.store.arrow(memo[&ra], memo[&rb]);
                        memo.insert(r, t);
                    } else {
                        if !marks.insert(r) {
                            return Err(Clash::Occurs);
                        }
                        stack.push((r, true));
                        for c in [rb, ra] {
                            if !memo.contains_key(&c) {
                                if marks.contains(&c) {
                                    return Err(Clash::Occurs);
                                }
                                stack.push((c, false));
                            }
                        }
                    }
                }
            }
        }
        Ok(memo[&root])
    }

    /// Whether the solved graph contains a cycle.
    fn has_cycle(&mut self) -> bool {
        let mut memo = HashMap::new();
        (0..self.nodes.len() as u32).any(|i| self.resolve(i, &mut memo).is_err())
    }
}

struct Equation {
    lhs: u32,
    rhs: u32,
    path: Path,
}

struct Elaborator<'s> {
    u: Unifier<'s>,
    free: BTreeMap<String, u32>,
    binders: Vec<u32>,
    equations: Vec<Equation>,
}

impl<'s> Elaborator<'s> {
    fn new(store: &'s TypeStore) -> Self {
        Elaborator {
            u: Unifier::new(store),
            free: BTreeMap::new(),
            binders: Vec::new(),
            equations: Vec::new(),
        }
    }

    fn equate(&mut self, lhs: u32, rhs: u32, path: &[Step]) -> Result<(), InferError> {
        let path = Path(path.to_vec());
        let res = self.u.unify(lhs, rhs);
        self.equations.push(Equation {
            lhs,
            rhs,
            path: path.clone(),
        });
        res.map_err(|clash| InferError::NotTypable { path, clash })
    }

    fn gen<'t>(
        &mut self,
        t: &'t Term,
        scope: &mut Vec<(&'t str, u32)>,
        path: &mut Vec<Step>,
    ) -> Result<u32, InferError> {
        match t {
            Term::Var(x) => {
                if let Some(&(_, n)) = scope.iter().rev().find(|(b, _)| *b == x.as_str()) {
                    return Ok(n);
                }
                if let Some(&n) = self.free.get(x) {
                    return Ok(n);
                }
                let n = self.u.fresh();
                self.free.insert(x.clone(), n);
                Ok(n)
            }
            Term::Lam(x, ann, body) => {
                let dom = match ann {
                    Some(ty) => self.u.import(*ty),
                    None => self.u.fresh(),
                };
                self.binders.push(dom);
                scope.push((x, dom));
                path.push(Step::Body);
                let cod = self.gen(body, scope, path);
                path.pop();
                scope.pop();
                let cod = cod?;
                Ok(self.u.arrow(dom, cod))
            }
            Term::App(f, a) => {
                path.push(Step::Fun);
                let tf = self.gen(f, scope, path);
                path.pop();
                let tf = tf?;
                path.push(Step::Arg);
                let ta = self.gen(a, scope, path);
                path.pop();
                let ta = ta?;
                let res = self.u.fresh();
                let expect = self.u.arrow(ta, res);
                self.equate(tf, expect, path)?;
                Ok(res)
            }
        }
    }

    /// After a cycle was found, replays the equations to blame the first one
    /// that closes it.
    fn blame_cycle(&self) -> InferError {
        let store = self.u.store;
        let mut replay = Unifier::new(store);
        replay.nodes = self.u.nodes.clone();
        replay.parent = (0..self.u.nodes.len() as u32).collect();
        for eq in &self.equations {
            if replay.unify(eq.lhs, eq.rhs).is_err() || replay.has_cycle() {
                return InferError::NotTypable {
                    path: eq.path.clone(),
                    clash: Clash::Occurs,
                };
            }
        }
        InferError::NotTypable {
            path: Path::root(),
            clash: Clash::Occurs,
        }
    }

    fn annotate(&self, t: &Term, types: &[Ty], next: &mut usize) -> Term {
        match t {
            Term::Var(x) => Term::Var(x.clone()),
            Term::Lam(x, _, body) => {
                let ty = types[*next];
                *next += 1;
                Term::Lam(x.clone(), Some(ty), Box::new(self.annotate(body, types, next)))
            }
            Term::App(f, a) => {
                let f = self.annotate(f, types, next);
                let a = self.annotate(a, types, next);
                Term::app(f, a)
            }
        }
    }

    fn finish(&mut self, terms: &[(&Term, u32)]) -> Result<Vec<Typing>, InferError> {
        let mut memo = HashMap::new();
        let mut resolved = Vec::with_capacity(self.binders.len());
        for i in 0..self.binders.len() {
            match self.u.resolve(self.binders[i], &mut memo) {
                Ok(t) => resolved.push(t),
                Err(_) => return Err(self.blame_cycle()),
            }
        }
        let mut context = Context::new();
        let free: Vec<(String, u32)> = self.free.iter().map(|(k, v)| (k.clone(), *v)).collect();
        for (name, n) in free {
            match self.u.resolve(n, &mut memo) {
                Ok(t) => {
                    context.insert(name, t);
                }
                Err(_) => return Err(self.blame_cycle()),
            }
        }
        let mut out = Vec::new();
        let mut next = 0;
        for (t, root) in terms {
            let ty = match self.u.resolve(*root, &mut memo) {
                Ok(ty) => ty,
                Err(_) => return Err(self.blame_cycle()),
            };
            let subject = self.annotate(t, &resolved, &mut next);
            let fv = t.free_vars();
            let ctx = context
                .iter()
                .filter(|(k, _)| fv.contains(*k))
                .map(|(k, v)| (k.clone(), *v))
                .collect();
            out.push(Typing {
                subject,
                context: ctx,
                ty,
            });
        }
        Ok(out)
    }
}

/// Principal typing of `t`, residual unknowns defaulted to `o`.
///
/// Existing annotations are kept and act as constraints.
pub fn infer(store: &TypeStore, t: &Term) -> Result<Typing, InferError> {
    infer_in(store, t, &Context::new(), None)
}

/// Like [`infer`], additionally requiring the result type to be `target`.
pub fn infer_at(store: &TypeStore, t: &Term, target: Ty) -> Result<Typing, InferError> {
    infer_in(store, t, &Context::new(), Some(target))
}

/// Inference with known types for some free variables.
pub fn infer_in(
    store: &TypeStore,
    t: &Term,
    ctx: &Context,
    target: Option<Ty>,
) -> Result<Typing, InferError> {
    let mut el = Elaborator::new(store);
    for (name, ty) in ctx {
        let n = el.u.import(*ty);
        el.free.insert(name.clone(), n);
    }
    let root = el.gen(t, &mut Vec::new(), &mut Vec::new())?;
    if let Some(target) = target {
        let want = el.u.import(target);
        el.equate(root, want, &[])?;
    }
    let mut out = el.finish(&[(t, root)])?;
    Ok(out.pop().expect("one typing per term"))
}

/// Jointly types `t` and `u` at one common type. Free variables with the
/// same name are identified.
pub fn infer_pair(store: &TypeStore, t: &Term, u: &Term) -> Result<(Typing, Typing), InferError> {
    let mut el = Elaborator::new(store);
    let wrap = |side: &str, e: InferError| InferError::NoCommonType(format!("{side}: {e}"));
    let rt = el
        .gen(t, &mut Vec::new(), &mut Vec::new())
        .map_err(|e| wrap("left term", e))?;
    let ru = el
        .gen(u, &mut Vec::new(), &mut Vec::new())
        .map_err(|e| wrap("right term", e))?;
    el.equate(rt, ru, &[])
        .map_err(|e| wrap("types of the two terms", e))?;
    let mut out = el
        .finish(&[(t, rt), (u, ru)])
        .map_err(|e| wrap("joint problem", e))?;
    let second = out.pop().expect("two typings");
    let first = out.pop().expect("two typings");
    Ok((first, second))
}

/// Position of the leftmost-outermost β-redex, if any.
pub fn first_redex(t: &Term) -> Option<Path> {
    fn go(t: &Term, path: &mut Vec<Step>) -> Option<Path> {
        match t {
            Term::Var(_) => None,
            Term::Lam(_, _, b) => {
                path.push(Step::Body);
                let r = go(b, path);
                path.pop();
                r
            }
            Term::App(f, a) => {
                if matches!(**f, Term::Lam(..)) {
                    return Some(Path(path.clone()));
                }
                path.push(Step::Fun);
                let r = go(f, path);
                path.pop();
                if r.is_some() {
                    return r;
                }
                path.push(Step::Arg);
                let r = go(a, path);
                path.pop();
                r
            }
        }
    }
    go(t, &mut Vec::new())
}

/// The unique Church-style annotation of a β-normal term at type `a`.
pub fn reconstruct_normal(store: &TypeStore, t: &Term, a: Ty) -> Result<Typing, InferError> {
    reconstruct_normal_in(store, t, a, &Context::new())
}

/// [`reconstruct_normal`] with given types for the free variables.
pub fn reconstruct_normal_in(
    store: &TypeStore,
    t: &Term,
    a: Ty,
    ctx: &Context,
) -> Result<Typing, InferError> {
    if let Some(path) = first_redex(t) {
        return Err(InferError::NotNormalForm { path });
    }
    let r = Reconstructor { store, ctx };
    let subject = r.check(t, a, &mut Vec::new(), &mut Vec::new())?;
    let fv = t.free_vars();
    Ok(Typing {
        subject,
        context: ctx
            .iter()
            .filter(|(k, _)| fv.contains(*k))
            .map(|(k, v)| (k.clone(), *v))
            .collect(),
        ty: a,
    })
}

struct Reconstructor<'a> {
    store: &'a TypeStore,
    ctx: &'a Context,
}

impl Reconstructor<'_> {
    fn fail(&self, path: &[Step], reason: impl Into<String>) -> InferError {
        InferError::NotTypableAtGivenType {
            path: Path(path.to_vec()),
            reason: reason.into(),
        }
    }

    fn check<'t>(
        &self,
        t: &'t Term,
        a: Ty,
        scope: &mut Vec<(&'t str, Ty)>,
        path: &mut Vec<Step>,
    ) -> Result<Term, InferError> {
        match t {
            Term::Lam(x, ann, body) => {
                let Some((dom, cod)) = self.store.split_arrow(a) else {
                    return Err(self.fail(path, "abstraction checked against `o`"));
                };
                if let Some(given) = ann {
                    if *given != dom {
                        return Err(self.fail(path, "annotation disagrees with expected domain"));
                    }
                }
                scope.push((x, dom));
                path.push(Step::Body);
                let b = self.check(body, cod, scope, path);
                path.pop();
                scope.pop();
                Ok(Term::Lam(x.clone(), Some(dom), Box::new(b?)))
            }
            _ => {
                let (term, ty) = self.synth(t, scope, path)?;
                if ty != a {
                    return Err(self.fail(
                        path,
                        format!(
                            "neutral term has type {} but {} was expected",
                            self.store.display(ty),
                            self.store.display(a)
                        ),
                    ));
                }
                Ok(term)
            }
        }
    }

    fn synth<'t>(
        &self,
        t: &'t Term,
        scope: &mut Vec<(&'t str, Ty)>,
        path: &mut Vec<Step>,
    ) -> Result<(Term, Ty), InferError> {
        match t {
            Term::Var(x) => {
                let ty = scope
                    .iter()
                    .rev()
                    .find(|(b, _)| *b == x.as_str())
                    .map(|(_, ty)| *ty)
                    .or_else(|| self.ctx.get(x).copied())
                    .ok_or_else(|| self.fail(path, format!("unknown type for free variable {x}")))?;
                Ok((Term::Var(x.clone()), ty))
            }
            Term::App(f, a) => {
                path.push(Step::Fun);
                let head = self.synth(f, scope, path);
                path.pop();
                let (f2, fty) = head?;
                let Some((dom, cod)) = self.store.split_arrow(fty) else {
                    return Err(self.fail(path, "applied term has type `o`"));
                };
                path.push(Step::Arg);
                let arg = self.check(a, dom, scope, path);
                path.pop();
                Ok((Term::app(f2, arg?), cod))
            }
            Term::Lam(..) => Err(InferError::NotNormalForm {
                path: Path(path.to_vec()),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("ill-typed Church term at {path}: {message}")]
pub struct TypeCheckError {
    pub path: Path,
    pub message: String,
}

/// Independent checker for Church-style terms: returns the type of `t`
/// using only its annotations and `ctx`.
pub fn type_check(store: &TypeStore, t: &Term, ctx: &Context) -> Result<Ty, TypeCheckError> {
    fn go<'t>(
        store: &TypeStore,
        t: &'t Term,
        ctx: &Context,
        scope: &mut Vec<(&'t str, Ty)>,
        path: &mut Vec<Step>,
    ) -> Result<Ty, TypeCheckError> {
        let err = |path: &[Step], msg: String| TypeCheckError {
            path: Path(path.to_vec()),
            message: msg,
        };
        match t {
            Term::Var(x) => scope
                .iter()
                .rev()
                .find(|(b, _)| *b == x.as_str())
                .map(|(_, ty)| *ty)
                .or_else(|| ctx.get(x).copied())
                .ok_or_else(|| err(path, format!("unbound variable {x}"))),
            Term::Lam(x, ann, body) => {
                let dom = ann.ok_or_else(|| err(path, format!("binder {x} lacks an annotation")))?;
                scope.push((x, dom));
                path.push(Step::Body);
                let cod = go(store, body, ctx, scope, path);
                path.pop();
                scope.pop();
                Ok(store.arrow(dom, cod?))
            }
            Term::App(f, a) => {
                path.push(Step::Fun);
                let tf = go(store, f, ctx, scope, path);
                path.pop();
                let tf = tf?;
                path.push(Step::Arg);
                let ta = go(store, a, ctx, scope, path);
                path.pop();
                let ta = ta?;
                match store.split_arrow(tf) {
                    Some((dom, cod)) if dom == ta => Ok(cod),
                    Some((dom, _)) => Err(err(
                        path,
                        format!(
                            "argument of type {} where {} was expected",
                            store.display(ta),
                            store.display(dom)
                        ),
                    )),
                    None => Err(err(path, "applying a term of type o".into())),
                }
            }
        }
    }
    go(store, t, ctx, &mut Vec::new(), &mut Vec::new())
}

/// Re-checks a typing with [`type_check`].
pub fn verify_typing(store: &TypeStore, typing: &Typing) -> Result<(), TypeCheckError> {
    if !typing.subject.is_church() {
        return Err(TypeCheckError {
            path: Path::root(),
            message: "subject is not fully annotated".into(),
        });
    }
    let ty = type_check(store, &typing.subject, &typing.context)?;
    if ty != typing.ty {
        return Err(TypeCheckError {
            path: Path::root(),
            message: "checked type differs from the recorded type".into(),
        });
    }
    Ok(())
}
