//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use safelam::church::Alphabet;
use safelam::infer::{type_check, Context, Typing};
use safelam::starfree::Expr;
use safelam::syntax::Term;
use safelam::types::{Ty, TyNode, TypeStore};

/// Runs `f` on a thread with a large stack (deep recursion in normalizers).
pub fn big_stack<R: Send + 'static>(f: impl FnOnce() -> R + Send + 'static) -> R {
    std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(f)
        .expect("spawn test thread")
        .join()
        .expect("test thread panicked")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small types of order at most 2.
pub fn type_pool(s: &TypeStore) -> Vec<Ty> {
    ["o", "o -> o", "o -> o -> o", "(o -> o) -> o", "(o -> o) -> o -> o"]
        .iter()
        .map(|t| s.parse(t).unwrap())
        .collect()
}

/// Free variables available to the typed generators.
pub fn free_context(s: &TypeStore) -> Context {
    let mut c = Context::new();
    c.insert("c".into(), s.base());
    c.insert("g".into(), s.parse("o -> o").unwrap());
    c.insert("h".into(), s.parse("(o -> o) -> o").unwrap());
    c
}

const NAMES: &[&str] = &["x", "y", "z", "f", "k"];

/// Random Church-style terms with redexes, types of order at most 3.
pub struct TypedGen<'s> {
    pub store: &'s TypeStore,
    pub rng: ChaCha8Rng,
    pool: Vec<Ty>,
    ctx: Context,
}

impl<'s> TypedGen<'s> {
    pub fn new(store: &'s TypeStore, seed: u64) -> Self {
        TypedGen {
            store,
            rng: rng(seed),
            pool: type_pool(store),
            ctx: free_context(store),
        }
    }

    fn pick_type(&mut self) -> Ty {
        *self.pool.choose(&mut self.rng).unwrap()
    }

    fn name(&mut self) -> String {
        NAMES.choose(&mut self.rng).unwrap().to_string()
    }

    /// Visible variables: innermost binding of each name, then free ones.
    fn visible(&self, scope: &[(String, Ty)]) -> Vec<(String, Ty)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (x, t) in scope.iter().rev() {
            if seen.insert(x.clone()) {
                out.push((x.clone(), *t));
            }
        }
        for (x, t) in &self.ctx {
            if seen.insert(x.clone()) {
                out.push((x.clone(), *t));
            }
        }
        out
    }

    fn fallback(&mut self, ty: Ty, scope: &mut Vec<(String, Ty)>) -> Term {
        match self.store.node(ty) {
            TyNode::Arrow(a, b) => {
                let x = self.name();
                scope.push((x.clone(), a));
                let body = self.fallback(b, scope);
                scope.pop();
                Term::lam_typed(x, a, body)
            }
            TyNode::Base => {
                let cands: Vec<String> = self
                    .visible(scope)
                    .into_iter()
                    .filter(|(_, t)| *t == ty)
                    .map(|(x, _)| x)
                    .collect();
                Term::var(cands.choose(&mut self.rng).cloned().unwrap_or_else(|| "c".into()))
            }
        }
    }

    pub fn term(&mut self, ty: Ty, scope: &mut Vec<(String, Ty)>, fuel: i32) -> Term {
        if fuel <= 0 {
            return self.fallback(ty, scope);
        }
        let s = self.store;
        loop {
            match self.rng.gen_range(0..10) {
                0..=2 => {
                    if let Some((a, b)) = s.split_arrow(ty) {
                        let x = self.name();
                        scope.push((x.clone(), a));
                        let body = self.term(b, scope, fuel - 1);
                        scope.pop();
                        return Term::lam_typed(x, a, body);
                    }
                }
                3..=5 => {
                    // variable head applied to enough arguments
                    let mut heads = Vec::new();
                    for (x, t) in self.visible(scope) {
                        let mut args = Vec::new();
                        let mut cur = t;
                        loop {
                            if cur == ty {
                                heads.push((x.clone(), args.clone()));
                            }
                            match s.split_arrow(cur) {
                                Some((a, b)) => {
                                    args.push(a);
                                    cur = b;
                                }
                                None => break,
                            }
                        }
                    }
                    if let Some((x, args)) = heads.choose(&mut self.rng).cloned() {
                        let share = (fuel - 1) / (args.len() as i32).max(1);
                        let args: Vec<Term> =
                            args.iter().map(|a| self.term(*a, scope, share)).collect();
                        return Term::apps(Term::var(x), args);
                    }
                }
                6..=8 => {
                    let b = self.pick_type();
                    let x = self.name();
                    let split = self.rng.gen_range(0..fuel.max(1));
                    scope.push((x.clone(), b));
                    let body = self.term(ty, scope, split);
                    scope.pop();
                    let arg = self.term(b, scope, fuel - 1 - split);
                    return Term::app(Term::lam_typed(x, b, body), arg);
                }
                _ => {
                    if s.order(ty) <= 2 {
                        let b = self.pick_type();
                        let split = self.rng.gen_range(0..fuel.max(1));
                        let f = self.term(s.arrow(b, ty), scope, split);
                        let a = self.term(b, scope, fuel - 1 - split);
                        return Term::app(f, a);
                    }
                }
            }
        }
    }

    /// A typing of size at most `max_size` at a random pool type.
    pub fn typing(&mut self, max_size: u64) -> Typing {
        loop {
            let ty = if self.rng.gen_bool(0.2) {
                self.store.parse("((o -> o) -> o) -> o").unwrap()
            } else {
                self.pick_type()
            };
            let fuel = self.rng.gen_range(4..30);
            // spread sizes over the whole range instead of favouring tiny terms
            let min_size = self.rng.gen_range(1..=max_size * 7 / 8);
            let t = self.term(ty, &mut Vec::new(), fuel);
            if (min_size..=max_size).contains(&t.size()) {
                return self.close(t, ty);
            }
        }
    }

    pub fn typing_at(&mut self, ty: Ty, max_size: u64) -> Typing {
        loop {
            let fuel = self.rng.gen_range(2..16);
            let t = self.term(ty, &mut Vec::new(), fuel);
            if t.size() <= max_size {
                return self.close(t, ty);
            }
        }
    }

    fn close(&self, t: Term, ty: Ty) -> Typing {
        let fv = t.free_vars();
        let context: Context = self
            .ctx
            .iter()
            .filter(|(k, _)| fv.contains(*k))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        let checked = type_check(self.store, &t, &context).expect("generator is well-typed");
        assert_eq!(checked, ty);
        Typing {
            subject: t,
            context,
            ty,
        }
    }

    /// Closed term of type `ty` without free constants, or `None`.
    pub fn closed_at(&mut self, ty: Ty, max_size: u64) -> Option<Typing> {
        let saved = std::mem::take(&mut self.ctx);
        let mut out = None;
        for _ in 0..50 {
            let fuel = self.rng.gen_range(3..16);
            let t = self.term(ty, &mut Vec::new(), fuel);
            if t.is_closed() && t.size() <= max_size {
                out = Some(t);
                break;
            }
        }
        self.ctx = saved;
        out.map(|t| Typing {
            subject: t,
            context: Context::new(),
            ty,
        })
    }

    /// A random β-normal Church term of type `ty` (closed), if one is found.
    pub fn normal_at(&mut self, ty: Ty, max_size: u64) -> Option<Term> {
        for _ in 0..50 {
            let fuel = self.rng.gen_range(2..12);
            if let Some(t) = self.nf(ty, &mut Vec::new(), fuel) {
                if t.size() <= max_size {
                    return Some(t);
                }
            }
        }
        None
    }

    fn nf(&mut self, ty: Ty, scope: &mut Vec<(String, Ty)>, fuel: i32) -> Option<Term> {
        let s = self.store;
        let mut heads = Vec::new();
        let mut seen = BTreeSet::new();
        for (x, t) in scope.iter().rev() {
            if !seen.insert(x.clone()) {
                continue;
            }
            let mut args = Vec::new();
            let mut cur = *t;
            loop {
                if cur == ty {
                    heads.push((x.clone(), args.clone()));
                }
                match s.split_arrow(cur) {
                    Some((a, b)) => {
                        args.push(a);
                        cur = b;
                    }
                    None => break,
                }
            }
        }
        let use_lam = s.split_arrow(ty).is_some()
            && (heads.is_empty() || fuel <= 0 || self.rng.gen_bool(0.6));
        if use_lam {
            let (a, b) = s.split_arrow(ty).unwrap();
            let x = self.name();
            scope.push((x.clone(), a));
            let body = self.nf(b, scope, fuel - 1);
            scope.pop();
            return Some(Term::lam_typed(x, a, body?));
        }
        if fuel < -6 {
            return None;
        }
        if fuel <= 0 {
            let fewest = heads.iter().map(|(_, a)| a.len()).min()?;
            heads.retain(|(_, a)| a.len() == fewest);
        }
        let (x, args) = heads.choose(&mut self.rng).cloned()?;
        let mut out = Vec::new();
        for a in args {
            out.push(self.nf(a, scope, fuel - 1)?);
        }
        Some(Term::apps(Term::var(x), out))
    }
}

/// Random untyped terms, possibly open (free `a`, `b`) and untypable.
pub fn untyped_term(r: &mut ChaCha8Rng, max_size: u64) -> Term {
    fn go(r: &mut ChaCha8Rng, scope: &mut Vec<String>, budget: u64) -> Term {
        if budget <= 2 || (budget < 4 && r.gen_bool(0.5)) {
            let mut pool: Vec<String> = scope.clone();
            pool.push("a".into());
            pool.push("b".into());
            return Term::var(pool.choose(r).unwrap().clone());
        }
        if r.gen_bool(0.4) {
            let x = NAMES.choose(r).unwrap().to_string();
            scope.push(x.clone());
            let b = go(r, scope, budget - 1);
            scope.pop();
            Term::lam(x, b)
        } else {
            let left = r.gen_range(1..budget - 1);
            let f = go(r, scope, left);
            let a = go(r, scope, budget - 1 - left);
            Term::app(f, a)
        }
    }
    let budget = r.gen_range(1..=max_size);
    go(r, &mut Vec::new(), budget)
}

/// Church type of a term (annotations and context only); `None` if ill-typed.
pub fn church_type(s: &TypeStore, t: &Term, scope: &mut Vec<(String, Ty)>, ctx: &Context) -> Option<Ty> {
    match t {
        Term::Var(x) => scope
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, t)| *t)
            .or_else(|| ctx.get(x).copied()),
        Term::Lam(x, ann, b) => {
            let a = (*ann)?;
            scope.push((x.clone(), a));
            let r = church_type(s, b, scope, ctx);
            scope.pop();
            Some(s.arrow(a, r?))
        }
        Term::App(f, a) => {
            let tf = church_type(s, f, scope, ctx)?;
            let ta = church_type(s, a, scope, ctx)?;
            let (d, c) = s.split_arrow(tf)?;
            (d == ta).then_some(c)
        }
    }
}

/// Free variables of a Church term with their types.
fn typed_free(t: &Term, scope: &mut Vec<(String, Ty)>, ctx: &Context, out: &mut BTreeMap<String, Ty>) {
    match t {
        Term::Var(x) => {
            // only variables not bound inside `t` are reported; `scope` holds binders inside t
            if !scope.iter().any(|(y, _)| y == x) {
                out.insert(x.clone(), ctx[x]);
            }
        }
        Term::Lam(x, ann, b) => {
            scope.push((x.clone(), ann.unwrap()));
            typed_free(b, scope, ctx, out);
            scope.pop();
        }
        Term::App(f, a) => {
            typed_free(f, scope, ctx, out);
            typed_free(a, scope, ctx, out);
        }
    }
}

/// Derivation search in the long-safe rule system.
///
/// Contexts are kept minimal (exactly the free variables of the subject):
/// weakening only lowers `inford`, so a derivation exists iff one exists in
/// which weakening is applied only directly to premises. Multi-abstractions
/// and multi-applications are split in every possible way.
pub struct RuleSearch<'s> {
    pub store: &'s TypeStore,
}

impl RuleSearch<'_> {
    /// Whether `Γ ⊢ t : A` is derivable, where `env` types every free
    /// variable of `t`, and `A` is the Church type of `t`.
    pub fn derivable(&self, t: &Term, env: &Context) -> bool {
        let s = self.store;
        let Some(ty) = church_type(s, t, &mut Vec::new(), env) else {
            return false;
        };
        let mut fv = BTreeMap::new();
        typed_free(t, &mut Vec::new(), env, &mut fv);
        let inford = fv.values().map(|b| s.order(*b)).min();
        let side_ok = inford.is_none_or(|m| s.order(ty) <= m);
        match t {
            Term::Var(_) => true,
            Term::Lam(..) => {
                if !side_ok {
                    return false;
                }
                // try every n ≥ 1 binders of the block
                let mut env2 = env.clone();
                let mut cur = t;
                while let Term::Lam(x, ann, b) = cur {
                    env2.insert(x.clone(), ann.unwrap());
                    if self.derivable(b, &env2) {
                        return true;
                    }
                    cur = b;
                }
                false
            }
            Term::App(..) => {
                if !side_ok {
                    return false;
                }
                let (head, args) = t.spine();
                // last rule: (head a₁…a_k) applied to a_{k+1}…a_m, for every k < m
                for k in 0..args.len() {
                    let inner = Term::apps(head.clone(), args[..k].iter().map(|a| (*a).clone()));
                    if self.derivable(&inner, env) && args[k..].iter().all(|a| self.derivable(a, env)) {
                        return true;
                    }
                }
                false
            }
        }
    }
}

/// Every Church term of size `n` whose binders and free variables use pool
/// types and whose subterms all have types of order at most `max_order`.
/// Free variables are drawn from `free`.
pub fn enumerate_church(
    s: &TypeStore,
    pool: &[Ty],
    free: &[(String, Ty)],
    n: usize,
    max_order: u32,
) -> Vec<(Term, Ty)> {
    fn go(
        s: &TypeStore,
        pool: &[Ty],
        free: &[(String, Ty)],
        scope: &mut Vec<Ty>,
        n: usize,
        max_order: u32,
    ) -> Vec<(Term, Ty)> {
        let mut out = Vec::new();
        if n == 1 {
            for (i, t) in scope.iter().enumerate() {
                out.push((Term::var(format!("x{i}")), *t));
            }
            for (x, t) in free {
                out.push((Term::var(x.clone()), *t));
            }
            return out;
        }
        for &a in pool {
            scope.push(a);
            let bodies = go(s, pool, free, scope, n - 1, max_order);
            scope.pop();
            let x = format!("x{}", scope.len());
            for (b, bt) in bodies {
                let ty = s.arrow(a, bt);
                if s.order(ty) <= max_order {
                    out.push((Term::lam_typed(x.clone(), a, b), ty));
                }
            }
        }
        for left in 1..n - 1 {
            let fs = go(s, pool, free, scope, left, max_order);
            if fs.iter().all(|(_, t)| s.split_arrow(*t).is_none()) {
                continue;
            }
            let args = go(s, pool, free, scope, n - 1 - left, max_order);
            for (f, ft) in &fs {
                if let Some((d, c)) = s.split_arrow(*ft) {
                    for (a, at) in &args {
                        if *at == d {
                            out.push((Term::app(f.clone(), a.clone()), c));
                        }
                    }
                }
            }
        }
        out
    }
    go(s, pool, free, &mut Vec::new(), n, max_order)
}

/// η-redex positions `λx. M x` with `x ∉ fv(M)`, as paths.
fn eta_redexes(t: &Term, path: &mut Vec<safelam::Step>, out: &mut Vec<Vec<safelam::Step>>) {
    use safelam::Step;
    match t {
        Term::Var(_) => {}
        Term::Lam(x, _, b) => {
            if let Term::App(m, arg) = &**b {
                if matches!(&**arg, Term::Var(y) if y == x) && !m.free_vars().contains(x) {
                    out.push(path.clone());
                }
            }
            path.push(Step::Body);
            eta_redexes(b, path, out);
            path.pop();
        }
        Term::App(f, a) => {
            path.push(Step::Fun);
            eta_redexes(f, path, out);
            path.pop();
            path.push(Step::Arg);
            eta_redexes(a, path, out);
            path.pop();
        }
    }
}

fn contract_eta_at(t: &Term, path: &[safelam::Step]) -> Term {
    use safelam::Step;
    match (path.first(), t) {
        (None, Term::Lam(_, _, b)) => match &**b {
            Term::App(m, _) => (**m).clone(),
            _ => unreachable!("not an η-redex"),
        },
        (Some(Step::Body), Term::Lam(x, ann, b)) => {
            Term::Lam(x.clone(), *ann, Box::new(contract_eta_at(b, &path[1..])))
        }
        (Some(Step::Fun), Term::App(f, a)) => Term::app(contract_eta_at(f, &path[1..]), (**a).clone()),
        (Some(Step::Arg), Term::App(f, a)) => Term::app((**f).clone(), contract_eta_at(a, &path[1..])),
        _ => unreachable!("path does not match term"),
    }
}

/// η-normalizes by contracting randomly chosen η-redexes one at a time.
pub fn eta_random_order(t: &Term, r: &mut ChaCha8Rng) -> Term {
    let mut cur = t.clone();
    loop {
        let mut reds = Vec::new();
        eta_redexes(&cur, &mut Vec::new(), &mut reds);
        let Some(p) = reds.choose(r) else {
            return cur;
        };
        cur = contract_eta_at(&cur, p);
    }
}

/// All expressions of exactly `size` constructors.
pub fn exprs_of_size(sigma: &Alphabet, size: usize) -> Vec<Expr> {
    let mut table: Vec<Vec<Expr>> = vec![Vec::new()];
    for n in 1..=size {
        let mut v = Vec::new();
        if n == 1 {
            v.push(Expr::Empty);
            v.push(Expr::Eps);
            v.extend(sigma.letters().iter().map(|c| Expr::Letter(*c)));
        } else {
            v.extend(table[n - 1].iter().map(|e| Expr::not(e.clone())));
            for i in 1..n - 1 {
                for a in &table[i] {
                    for b in &table[n - 1 - i] {
                        v.push(Expr::union(a.clone(), b.clone()));
                        v.push(Expr::concat(a.clone(), b.clone()));
                    }
                }
            }
        }
        table.push(v);
    }
    table.swap_remove(size)
}

pub fn exprs_up_to(sigma: &Alphabet, size: usize) -> Vec<Expr> {
    (1..=size).flat_map(|n| exprs_of_size(sigma, n)).collect()
}

pub fn random_expr(r: &mut ChaCha8Rng, sigma: &Alphabet, size: usize) -> Expr {
    if size <= 1 {
        return match r.gen_range(0..4) {
            0 => Expr::Empty,
            1 => Expr::Eps,
            _ => Expr::Letter(*sigma.letters().choose(r).unwrap()),
        };
    }
    if size == 2 || r.gen_bool(0.25) {
        return Expr::not(random_expr(r, sigma, size - 1));
    }
    let left = r.gen_range(1..size - 1);
    let a = random_expr(r, sigma, left);
    let b = random_expr(r, sigma, size - 1 - left);
    if r.gen_bool(0.5) {
        Expr::union(a, b)
    } else {
        Expr::concat(a, b)
    }
}

/// Membership by plain recursion over all splits, no tables.
pub fn member_naive(e: &Expr, w: &[char]) -> bool {
    match e {
        Expr::Empty => false,
        Expr::Eps => w.is_empty(),
        Expr::Letter(c) => w == [*c],
        Expr::Union(a, b) => member_naive(a, w) || member_naive(b, w),
        Expr::Concat(a, b) => (0..=w.len()).any(|i| member_naive(a, &w[..i]) && member_naive(b, &w[i..])),
        Expr::Not(a) => !member_naive(a, w),
    }
}

/// `w ∈ ⟦(E□)*F⟧` where `□` does not occur in `E`, `F`: the segments
/// between markers must be in `E`, the last one in `F`.
pub fn member_box_star(e: &Expr, f: &Expr, w: &[char]) -> bool {
    let segs: Vec<&[char]> = w.split(|c| *c == safelam::church::BOX).collect();
    let (last, init) = segs.split_last().unwrap();
    init.iter().all(|s| member_naive(e, s)) && member_naive(f, last)
}

/// The closed formula of split: `□w # w₁□w₂… # … # w□`.
pub fn split_formula(w: &str) -> String {
    let cs: Vec<char> = w.chars().collect();
    (0..=cs.len())
        .map(|i| {
            let mut s: String = cs[..i].iter().collect();
            s.push(safelam::church::BOX);
            s.extend(&cs[i..]);
            s
        })
        .collect::<Vec<_>>()
        .join("#")
}

/// `f_n(x)` of the enumeration lemma.
pub fn enum_formula(sigma: &Alphabet, n: usize, x: &str) -> String {
    if n == 0 {
        return x.to_string();
    }
    let mut out = x.to_string();
    for c in sigma.letters() {
        out.push_str(&enum_formula(sigma, n - 1, &format!("{c}{x}")));
    }
    out
}

/// All words over `sigma` of length at most `n`.
pub fn all_words(sigma: &Alphabet, n: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|w| sigma.letters().iter().map(move |c| format!("{w}{c}")))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
