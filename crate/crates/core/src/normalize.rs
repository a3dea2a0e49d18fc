//! β-normalization: parallel reduction, the degree-indexed driver, a
//! leftmost-outermost reference normalizer and η-reduction.
//!
//! All reducers work on the locally nameless representation, where
//! substitution shares the argument instead of copying it. Sizes are tree
//! sizes, so budgets are expressed in term nodes regardless of sharing.

use std::fmt;

use serde::Serialize;

use crate::db::{self, Db, Kind};
use crate::infer::{infer_pair, type_check, Context, InferError, TypeCheckError, Typing};
use crate::syntax::{alpha_eq, Path, Step, Term};
use crate::types::{Ty, TypeStore};

pub const DEFAULT_SIZE_BUDGET: u64 = 10_000_000;
pub const DEFAULT_STEP_BUDGET: u64 = 50_000_000;

/// Limits applied to every normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// β-contractions (naive reducer) or parallel steps (parallel reducer).
    pub steps: u64,
    /// Largest term, in nodes, that may be built.
    pub size: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            steps: DEFAULT_STEP_BUDGET,
            size: DEFAULT_SIZE_BUDGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    Steps,
    Size,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::Steps => "step",
            Resource::Size => "size",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error("{resource} budget of {limit} exceeded")]
    BudgetExceeded { resource: Resource, limit: u64 },
    #[error(transparent)]
    IllTyped(#[from] TypeCheckError),
    #[error(transparent)]
    NotTypable(#[from] InferError),
    #[error("η-reduction needs a β-normal term; redex at {path}")]
    NotBetaNormal { path: Path },
}

/// A β-redex `(λx:A.t) u` inside a Church-style term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RedexInfo {
    pub path: Path,
    /// The type `A → B` of the abstraction.
    pub redex_type: Ty,
    pub degree: u32,
}

/// Metrics of the term after one parallel step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub size: u64,
    pub height: u64,
    /// `None` when normalizing without a typing.
    pub max_degree: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizationTrace {
    /// The input's metrics.
    pub initial: TraceRow,
    /// One row per parallel step, taken after the step.
    pub steps: Vec<TraceRow>,
    pub result: Term,
}

/// Parallel reduction ⊲: contracts every redex present in `t` in one pass.
pub fn parallel_step(t: &Term) -> Term {
    db::to_term(&par(&db::from_term(t)))
}

fn par(t: &Db) -> Db {
    match &t.kind {
        Kind::Bound(_) | Kind::Free(_) => t.clone(),
        Kind::Lam(x, ann, body) => db::lam(x.clone(), *ann, par(body)),
        Kind::App(f, a) => {
            let f2 = par(f);
            let a2 = par(a);
            match &f2.kind {
                Kind::Lam(_, _, body) => db::instantiate(body, &a2),
                _ => db::app(f2, a2),
            }
        }
    }
}

fn row(t: &Db, max_degree: Option<u32>) -> TraceRow {
    TraceRow {
        size: t.size,
        height: t.height,
        max_degree,
    }
}

/// All β-redexes of a Church-style term, in preorder.
pub fn redexes(store: &TypeStore, t: &Typing) -> Result<Vec<RedexInfo>, NormalizeError> {
    type_check(store, &t.subject, &t.context)?;
    let mut out = Vec::new();
    collect_redexes(store, &t.subject, &t.context, &mut Vec::new(), &mut Vec::new(), &mut out);
    Ok(out)
}

fn collect_redexes<'t>(
    store: &TypeStore,
    t: &'t Term,
    ctx: &Context,
    scope: &mut Vec<(&'t str, Ty)>,
    path: &mut Vec<Step>,
    out: &mut Vec<RedexInfo>,
) -> Ty {
    match t {
        Term::Var(x) => scope
            .iter()
            .rev()
            .find(|(b, _)| *b == x.as_str())
            .map(|(_, ty)| *ty)
            .or_else(|| ctx.get(x).copied())
            .expect("checked beforehand"),
        Term::Lam(x, ann, body) => {
            let dom = ann.expect("checked beforehand");
            scope.push((x, dom));
            path.push(Step::Body);
            let cod = collect_redexes(store, body, ctx, scope, path, out);
            path.pop();
            scope.pop();
            store.arrow(dom, cod)
        }
        Term::App(f, a) => {
            let slot = out.len();
            path.push(Step::Fun);
            let tf = collect_redexes(store, f, ctx, scope, path, out);
            path.pop();
            if matches!(**f, Term::Lam(..)) {
                out.insert(
                    slot,
                    RedexInfo {
                        path: Path(path.clone()),
                        redex_type: tf,
                        degree: store.degree(tf),
                    },
                );
            }
            path.push(Step::Arg);
            collect_redexes(store, a, ctx, scope, path, out);
            path.pop();
            store.split_arrow(tf).expect("checked beforehand").1
        }
    }
}

/// Largest redex degree of a Church-style term, 0 when β-normal.
pub fn max_redex_degree(store: &TypeStore, t: &Typing) -> Result<u32, NormalizeError> {
    Ok(redexes(store, t)?.iter().map(|r| r.degree).max().unwrap_or(0))
}

/// Type and maximal redex degree of a well-typed locally nameless term.
fn db_degree(store: &TypeStore, t: &Db, env: &mut Vec<Ty>, ctx: &Context) -> (Ty, u32) {
    match &t.kind {
        Kind::Bound(i) => (env[env.len() - 1 - *i as usize], 0),
        Kind::Free(x) => (*ctx.get(&**x).expect("typed term"), 0),
        Kind::Lam(_, ann, body) => {
            let dom = ann.expect("Church-style term");
            env.push(dom);
            let (cod, d) = db_degree(store, body, env, ctx);
            env.pop();
            (store.arrow(dom, cod), d)
        }
        Kind::App(f, a) => {
            let (tf, df) = db_degree(store, f, env, ctx);
            let (_, da) = db_degree(store, a, env, ctx);
            let mut d = df.max(da);
            if matches!(f.kind, Kind::Lam(..)) {
                d = d.max(store.degree(tf));
            }
            (store.split_arrow(tf).expect("typed term").1, d)
        }
    }
}

fn check_size(t: &Db, budget: &Budget) -> Result<(), NormalizeError> {
    if t.size > budget.size {
        return Err(NormalizeError::BudgetExceeded {
            resource: Resource::Size,
            limit: budget.size,
        });
    }
    Ok(())
}

/// Degree-indexed normalization of a Church-style typing: iterates ⊲
/// until no redex is left, which takes at most `max_redex_degree` steps.
pub fn normalize_parallel(
    store: &TypeStore,
    t: &Typing,
    budget: &Budget,
) -> Result<NormalizationTrace, NormalizeError> {
    type_check(store, &t.subject, &t.context)?;
    let mut cur = db::from_term(&t.subject);
    let mut d = db_degree(store, &cur, &mut Vec::new(), &t.context).1;
    let initial = row(&cur, Some(d));
    let mut steps = Vec::new();
    while d > 0 {
        if steps.len() as u64 >= budget.steps {
            return Err(NormalizeError::BudgetExceeded {
                resource: Resource::Steps,
                limit: budget.steps,
            });
        }
        cur = par(&cur);
        check_size(&cur, budget)?;
        d = db_degree(store, &cur, &mut Vec::new(), &t.context).1;
        steps.push(row(&cur, Some(d)));
    }
    Ok(NormalizationTrace {
        initial,
        steps,
        result: db::to_term(&cur),
    })
}

/// Iterates ⊲ on an untyped term until it is β-normal.
pub fn normalize_parallel_untyped(
    t: &Term,
    budget: &Budget,
) -> Result<NormalizationTrace, NormalizeError> {
    let mut cur = db::from_term(t);
    let initial = row(&cur, None);
    let mut steps = Vec::new();
    while !db::is_normal(&cur) {
        if steps.len() as u64 >= budget.steps {
            return Err(NormalizeError::BudgetExceeded {
                resource: Resource::Steps,
                limit: budget.steps,
            });
        }
        cur = par(&cur);
        check_size(&cur, budget)?;
        steps.push(row(&cur, None));
    }
    Ok(NormalizationTrace {
        initial,
        steps,
        result: db::to_term(&cur),
    })
}

struct Naive {
    budget: Budget,
    steps: u64,
}

impl Naive {
    fn tick(&mut self) -> Result<(), NormalizeError> {
        self.steps += 1;
        if self.steps > self.budget.steps {
            return Err(NormalizeError::BudgetExceeded {
                resource: Resource::Steps,
                limit: self.budget.steps,
            });
        }
        Ok(())
    }

    fn nf(&mut self, t: &Db) -> Result<Db, NormalizeError> {
        let mut cur = t.clone();
        loop {
            let mut args = Vec::new();
            let mut head = cur.clone();
            while let Kind::App(f, a) = &head.kind {
                args.push(a.clone());
                let next = f.clone();
                head = next;
            }
            args.reverse();
            match &head.kind {
                Kind::Lam(_, _, body) if !args.is_empty() => {
                    self.tick()?;
                    let mut next = db::instantiate(body, &args[0]);
                    for a in &args[1..] {
                        next = db::app(next, a.clone());
                    }
                    check_size(&next, &self.budget)?;
                    cur = next;
                }
                Kind::Lam(x, ann, body) => {
                    let b = self.nf(body)?;
                    return Ok(db::lam(x.clone(), *ann, b));
                }
                _ => {
                    let mut acc = head.clone();
                    for a in &args {
                        let a = self.nf(a)?;
                        acc = db::app(acc, a);
                        check_size(&acc, &self.budget)?;
                    }
                    return Ok(acc);
                }
            }
        }
    }
}

/// Leftmost-outermost β-normalization, one contraction at a time.
pub fn normalize_naive(t: &Term, budget: &Budget) -> Result<Term, NormalizeError> {
    normalize_naive_counted(t, budget).map(|(t, _)| t)
}

/// [`normalize_naive`] also reporting the number of contractions.
pub fn normalize_naive_counted(t: &Term, budget: &Budget) -> Result<(Term, u64), NormalizeError> {
    let mut n = Naive {
        budget: *budget,
        steps: 0,
    };
    let r = n.nf(&db::from_term(t))?;
    Ok((db::to_term(&r), n.steps))
}

/// Whether `t` and `u` have α-equal β-normal forms. Both are typed
/// jointly first and normalized with the degree-indexed driver.
pub fn beta_convertible(
    store: &TypeStore,
    t: &Term,
    u: &Term,
    budget: &Budget,
) -> Result<bool, NormalizeError> {
    let (a, b) = joint_normal_forms(store, t, u, budget)?;
    Ok(alpha_eq(&a, &b))
}

fn joint_normal_forms(
    store: &TypeStore,
    t: &Term,
    u: &Term,
    budget: &Budget,
) -> Result<(Term, Term), NormalizeError> {
    let (ta, tb) = infer_pair(store, t, u)?;
    let a = normalize_parallel(store, &ta, budget)?.result;
    let b = normalize_parallel(store, &tb, budget)?.result;
    Ok((a.erase(), b.erase()))
}

/// η-reduces a β-normal term to η-short form.
pub fn eta_reduce(t: &Term) -> Result<Term, NormalizeError> {
    if let Some(path) = crate::infer::first_redex(t) {
        return Err(NormalizeError::NotBetaNormal { path });
    }
    Ok(db::to_term(&eta(&db::from_term(t))))
}

fn eta(t: &Db) -> Db {
    match &t.kind {
        Kind::Bound(_) | Kind::Free(_) => t.clone(),
        Kind::App(f, a) => db::app(eta(f), eta(a)),
        Kind::Lam(x, ann, body) => {
            let b = eta(body);
            if let Kind::App(m, arg) = &b.kind {
                if matches!(arg.kind, Kind::Bound(0)) && !db::mentions(m, 0) {
                    return db::unshift(m, 0);
                }
            }
            db::lam(x.clone(), *ann, b)
        }
    }
}

/// β-normal form followed by η-reduction, for a typable term.
pub fn beta_eta_normal(store: &TypeStore, t: &Term, budget: &Budget) -> Result<Term, NormalizeError> {
    let typing = crate::infer::infer(store, t)?;
    let nf = normalize_parallel(store, &typing, budget)?.result.erase();
    eta_reduce(&nf)
}

/// Whether `t` and `u` have α-equal βη-normal forms.
pub fn beta_eta_convertible(
    store: &TypeStore,
    t: &Term,
    u: &Term,
    budget: &Budget,
) -> Result<bool, NormalizeError> {
    let (a, b) = joint_normal_forms(store, t, u, budget)?;
    Ok(alpha_eq(&eta_reduce(&a)?, &eta_reduce(&b)?))
}
