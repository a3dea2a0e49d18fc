//! Property tests for the invariants of each module.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::*;
use safelam::church::{cat_term, decode_normal_word, encode_word, word_term, Alphabet, BOX};
use safelam::compiler::compile;
use safelam::infer::{infer, infer_in, reconstruct_normal, verify_typing, Context, Typing};
use safelam::normalize::{
    beta_eta_normal, max_redex_degree, normalize_naive, normalize_parallel, parallel_step, Budget,
};
use safelam::safety::{check_hls, check_long_safe, check_safe, Clause, Verdict};
use safelam::starfree::{member, member_expr, mk_equiv_expr, Expr, StarFreeExpr};
use safelam::{alpha_eq, parse_term, substitute, Path, Step, Term, Ty, TypeStore};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// Renames every binder to a fresh name not occurring in `avoid`.
fn rename_binders(t: &Term, r: &mut ChaCha8Rng, avoid: &BTreeSet<String>) -> Term {
    fn go(t: &Term, r: &mut ChaCha8Rng, avoid: &BTreeSet<String>, map: &mut Vec<(String, String)>) -> Term {
        match t {
            Term::Var(x) => Term::var(
                map.iter()
                    .rev()
                    .find(|(a, _)| a == x)
                    .map(|(_, b)| b.clone())
                    .unwrap_or_else(|| x.clone()),
            ),
            Term::Lam(x, ann, b) => {
                // distinct fresh names; the random offset varies them between cases
                let fresh = loop {
                    let cand = format!("v{}", map.len() * 1000 + r.gen_range(0..1000));
                    if !avoid.contains(&cand) && !map.iter().any(|(_, b)| *b == cand) {
                        break cand;
                    }
                };
                map.push((x.clone(), fresh.clone()));
                let body = go(b, r, avoid, map);
                map.pop();
                Term::Lam(fresh, *ann, Box::new(body))
            }
            Term::App(f, a) => Term::app(go(f, r, avoid, map), go(a, r, avoid, map)),
        }
    }
    go(t, r, avoid, &mut Vec::new())
}

fn all_names(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(x) => {
            out.insert(x.clone());
        }
        Term::Lam(x, _, b) => {
            out.insert(x.clone());
            all_names(b, out);
        }
        Term::App(f, a) => {
            all_names(f, out);
            all_names(a, out);
        }
    }
}

/// Free variables of the subterm at `path`, with the types of the binders
/// and context entries they refer to.
fn free_at(t: &Typing, path: &Path) -> Vec<(String, Ty)> {
    let mut scope: Vec<(String, Ty)> = Vec::new();
    let mut cur = &t.subject;
    for step in &path.0 {
        cur = match (step, cur) {
            (Step::Body, Term::Lam(x, ann, b)) => {
                scope.push((x.clone(), ann.unwrap()));
                b
            }
            (Step::Fun, Term::App(f, _)) => f,
            (Step::Arg, Term::App(_, a)) => a,
            _ => panic!("path does not address a subterm"),
        };
    }
    cur.free_vars()
        .into_iter()
        .map(|x| {
            let ty = scope
                .iter()
                .rev()
                .find(|(y, _)| *y == x)
                .map(|(_, t)| *t)
                .unwrap_or_else(|| t.context[&x]);
            (x, ty)
        })
        .collect()
}

/// Whether the clause named in a witness applies at its path.
fn clause_applies(t: &Term, path: &Path, clause: Clause) -> bool {
    let parent = || Path(path.0[..path.0.len() - 1].to_vec()).subterm(t).unwrap();
    let here = path.subterm(t).unwrap();
    match clause {
        Clause::WholeTerm => path.0.is_empty(),
        Clause::Argument => path.0.last() == Some(&Step::Arg),
        Clause::AppliedHead => path.0.last() == Some(&Step::Fun) && !matches!(here, Term::App(..)),
        Clause::AbstractionBody => {
            path.0.last() == Some(&Step::Body) && matches!(parent(), Term::Lam(..)) && !matches!(here, Term::Lam(..))
        }
    }
}

fn ab() -> Alphabet {
    Alphabet::parse("ab").unwrap()
}

fn random_word(r: &mut ChaCha8Rng, sigma: &Alphabet, max: usize) -> String {
    let n = r.gen_range(0..=max);
    (0..n).map(|_| sigma.letters()[r.gen_range(0..sigma.len())]).collect()
}

/// All types of exactly `n` tree nodes (leaves and arrows).
fn types_of_size(s: &TypeStore, n: usize) -> Vec<Ty> {
    if n == 1 {
        return vec![s.base()];
    }
    let mut out = Vec::new();
    for l in (1..n - 1).step_by(2) {
        for a in types_of_size(s, l) {
            for b in types_of_size(s, n - 1 - l) {
                out.push(s.arrow(a, b));
            }
        }
    }
    out
}

// syntax

proptest! {
    #![proptest_config(cfg(300))]

    #[test]
    fn substitution_is_alpha_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = untyped_term(&mut r, 30);
        let u = untyped_term(&mut r, 10);
        let mut avoid = BTreeSet::new();
        all_names(&t, &mut avoid);
        all_names(&u, &mut avoid);
        let t2 = rename_binders(&t, &mut r, &avoid);
        prop_assert!(alpha_eq(&t, &t2));
        for x in ["a", "b", "x"] {
            prop_assert!(alpha_eq(&substitute(&t, x, &u), &substitute(&t2, x, &u)));
        }
    }

    #[test]
    fn metrics_bounds(seed in any::<u64>()) {
        let t = untyped_term(&mut rng(seed), 40);
        let m = t.metrics();
        prop_assert!(m.height <= m.size);
        prop_assert!(m.size <= 1u64 << m.height.min(63));
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let s = TypeStore::new();
        let t = untyped_term(&mut rng(seed), 40);
        let back = parse_term(&t.to_string(), &s).unwrap();
        prop_assert!(alpha_eq(&t, &back));
        let typed = TypedGen::new(&s, seed).typing(40).subject;
        let back = parse_term(&typed.display_typed(&s).to_string(), &s).unwrap();
        prop_assert_eq!(back, typed);
    }
}

// types

#[test]
fn order_is_at_most_degree_and_homogeneity_is_closed_under_subst_base() {
    let s = TypeStore::new();
    let small: Vec<Ty> = (1..=7).step_by(2).flat_map(|n| types_of_size(&s, n)).collect();
    let homogeneous: Vec<Ty> = small.iter().copied().filter(|t| s.is_homogeneous(*t)).collect();
    assert!(homogeneous.len() > 3);
    for &a in &small {
        assert!(s.order(a) <= s.degree(a));
    }
    for &a in &homogeneous {
        for &b in &homogeneous {
            let c = s.subst_base(a, b);
            assert!(s.is_homogeneous(c), "{} [{}]", s.display(a), s.display(b));
            if s.order(a) > 0 {
                assert_eq!(s.order(c), s.order(a) + s.order(b));
            } else {
                assert_eq!(c, b);
            }
        }
    }
}

#[test]
fn hash_consing_identifies_equal_trees() {
    let s = TypeStore::new();
    for n in [1, 3, 5, 7] {
        for t in types_of_size(&s, n) {
            assert_eq!(s.parse(&s.display(t)).unwrap(), t);
        }
    }
}

// inference

proptest! {
    #![proptest_config(cfg(300))]

    #[test]
    fn inference_is_sound(seed in any::<u64>()) {
        let s = TypeStore::new();
        let t = TypedGen::new(&s, seed).typing(40);
        let erased = t.subject.erase();
        let inferred = infer_in(&s, &erased, &t.context, None).unwrap();
        verify_typing(&s, &inferred).unwrap();
        prop_assert_eq!(inferred.subject.erase(), erased.clone());
        // untyped terms either fail or produce a checkable typing
        let u = untyped_term(&mut rng(seed), 30);
        if let Ok(ty) = infer(&s, &u) {
            verify_typing(&s, &ty).unwrap();
            prop_assert!(alpha_eq(&ty.subject.erase(), &u));
        }
    }

    #[test]
    fn normal_forms_are_reconstructed(seed in any::<u64>()) {
        let s = TypeStore::new();
        let pool = type_pool(&s);
        let mut g = TypedGen::new(&s, seed);
        let ty = pool[1 + (seed % (pool.len() as u64 - 1)) as usize];
        if let Some(t) = g.normal_at(ty, 40) {
            let back = reconstruct_normal(&s, &t.erase(), ty).unwrap();
            prop_assert_eq!(back.subject, t);
        }
        // any normal form reached from a corpus term
        let c = g.typing(30);
        let nf = normalize_parallel(&s, &c, &Budget::default()).unwrap().result;
        if c.context.is_empty() {
            let back = reconstruct_normal(&s, &nf.erase(), c.ty).unwrap();
            prop_assert!(alpha_eq(&back.subject, &nf));
            verify_typing(&s, &back).unwrap();
        }
    }
}

// normalization

proptest! {
    #![proptest_config(cfg(300))]

    #[test]
    fn degree_decreases_and_strategies_agree(seed in any::<u64>()) {
        let s = TypeStore::new();
        let t = TypedGen::new(&s, seed).typing(40);
        let d = max_redex_degree(&s, &t).unwrap();
        let mut cur = t.clone();
        for _ in 0..d {
            cur.subject = parallel_step(&cur.subject);
        }
        prop_assert!(cur.subject.is_beta_normal());
        if d > 0 {
            let one = Typing { subject: parallel_step(&t.subject), ..t.clone() };
            prop_assert!(max_redex_degree(&s, &one).unwrap() < d);
        }
        let par = normalize_parallel(&s, &t, &Budget::default()).unwrap();
        prop_assert!(par.steps.len() as u32 <= d);
        let naive = normalize_naive(&t.subject, &Budget::default()).unwrap();
        prop_assert!(alpha_eq(&par.result, &naive));
    }

    #[test]
    fn eta_order_does_not_matter(seed in any::<u64>()) {
        let s = TypeStore::new();
        let t = TypedGen::new(&s, seed).typing(40);
        let nf = normalize_naive(&t.subject, &Budget::default()).unwrap().erase();
        let canonical = eta_random_order(&nf, &mut rng(seed));
        let mut r = rng(seed ^ 0xe7a);
        for _ in 0..4 {
            prop_assert!(alpha_eq(&eta_random_order(&nf, &mut r), &canonical));
        }
        let mut ctx_free = t.subject.erase();
        for (x, _) in &t.context {
            ctx_free = Term::lam(x.clone(), ctx_free);
        }
        let closed_nf = beta_eta_normal(&s, &ctx_free, &Budget::default()).unwrap();
        prop_assert!(alpha_eq(&closed_nf, &eta_random_order(&normalize_naive(&ctx_free, &Budget::default()).unwrap(), &mut r)));
    }
}

// safety

proptest! {
    #![proptest_config(cfg(500))]

    #[test]
    fn witnesses_revalidate(seed in any::<u64>()) {
        let s = TypeStore::new();
        let t = TypedGen::new(&s, seed).typing(40);
        let safe = check_safe(&s, &t).unwrap();
        let long = check_long_safe(&s, &t).unwrap();
        if long.is_safe() {
            prop_assert!(safe.is_safe());
        }
        for r in [&safe, &long] {
            if let Verdict::Unsafe(w) = &r.verdict {
                prop_assert!(w.var_order < w.subterm_order);
                prop_assert_eq!(s.order(w.subterm_type), w.subterm_order);
                prop_assert_eq!(s.order(w.var_type), w.var_order);
                let fv = free_at(&t, &w.path);
                prop_assert!(fv.contains(&(w.var.clone(), w.var_type)));
                prop_assert!(clause_applies(&t.subject, &w.path, w.clause));
                if r.mode == safelam::safety::Mode::Safe {
                    prop_assert!(w.clause != Clause::AbstractionBody);
                }
            }
        }
    }
}

#[test]
fn hls_is_closed_under_base_substitution() {
    let s = TypeStore::new();
    let sigma = ab();
    let params = [s.bool_ty(), s.str_ty(2), s.parse("(o -> o) -> o").unwrap()];
    let mut r = rng(17);
    for _ in 0..40 {
        let n = r.gen_range(1..=5);
        let x = StarFreeExpr::new(random_expr(&mut r, &sigma, n), sigma.clone()).unwrap();
        let c = compile(&s, &x);
        assert!(check_hls(&s, &c.term, c.full_type).unwrap().is_safe());
        for b in params {
            let a = s.subst_base(c.full_type, b);
            assert!(check_hls(&s, &c.term, a).unwrap().is_safe(), "{x} at [{}]", s.display(b));
        }
    }
    for w in ["", "a", "ab", "bba"] {
        let t = word_term(&sigma, w).unwrap();
        for b in params {
            assert!(check_hls(&s, &t, s.subst_base(s.str_ty(2), b)).unwrap().is_safe());
        }
    }
}

// church

proptest! {
    #![proptest_config(cfg(300))]

    #[test]
    fn words_round_trip_and_concatenate(seed in any::<u64>()) {
        let s = TypeStore::new();
        let mut r = rng(seed);
        let sigma = Alphabet::parse(["a", "ab", "abc", "x#_"][r.gen_range(0..4)]).unwrap();
        let u = random_word(&mut r, &sigma, 6);
        let v = random_word(&mut r, &sigma, 6);
        let enc = encode_word(&s, &sigma, &u).unwrap();
        prop_assert_eq!(decode_normal_word(&enc.term, &sigma).unwrap(), u.clone());
        let t = Term::apps(cat_term(&sigma), [enc.term, word_term(&sigma, &v).unwrap()]);
        let nf = normalize_naive(&t, &Budget::default()).unwrap();
        prop_assert_eq!(decode_normal_word(&nf, &sigma).unwrap(), format!("{u}{v}"));
    }

    #[test]
    fn closed_booleans_decode(seed in any::<u64>()) {
        let s = TypeStore::new();
        if let Some(t) = TypedGen::new(&s, seed).closed_at(s.bool_ty(), 40) {
            prop_assert!(safelam::church::decode_bool(&t.subject, &Budget::default()).is_ok());
        }
    }
}

// starfree

proptest! {
    #![proptest_config(cfg(300))]

    #[test]
    fn membership_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = ab();
        let n = r.gen_range(1..=7);
        let m = r.gen_range(1..=7);
        let e = StarFreeExpr::new(random_expr(&mut r, &sigma, n), sigma.clone()).unwrap();
        let f = StarFreeExpr::new(random_expr(&mut r, &sigma, m), sigma.clone()).unwrap();
        let eq = mk_equiv_expr(&e, &f).unwrap();
        let nor = Expr::not(Expr::union(e.expr.clone(), f.expr.clone()));
        for w in all_words(&sigma, 5) {
            let cs: Vec<char> = w.chars().collect();
            prop_assert_eq!(member(&eq, &w), member(&e, &w) != member(&f, &w));
            prop_assert_eq!(member_expr(&nor, &cs), !(member(&e, &w) || member(&f, &w)));
            prop_assert_eq!(member(&e, &w), member_naive(&e.expr, &cs));
        }
        for _ in 0..5 {
            let w = random_word(&mut r, &sigma, 6);
            let cs: Vec<char> = w.chars().collect();
            prop_assert_eq!(member(&e, &w), member_naive(&e.expr, &cs));
        }
    }

    #[test]
    fn printed_expressions_reparse(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = ab();
        let n = r.gen_range(1..=10);
        let e = random_expr(&mut r, &sigma, n);
        let back = safelam::starfree::parse_expr(&e.to_string(), &sigma).unwrap();
        prop_assert_eq!(back.expr, e);
    }
}

#[test]
fn bounded_emptiness_spot_check() {
    use safelam::church::tower;
    use safelam::starfree::{equivalent_up_to, nonempty_up_to, DEFAULT_ENUM_CAP};
    let sigma = ab();
    let empty = StarFreeExpr::new(Expr::Empty, sigma.clone()).unwrap();
    for e in exprs_up_to(&sigma, 4) {
        let x = StarFreeExpr::new(e, sigma.clone()).unwrap();
        let bound = tower(x.size() - 1).map_or(16, |t| t.min(16) as usize);
        if nonempty_up_to(&x, bound, DEFAULT_ENUM_CAP).unwrap().is_none() {
            assert!(equivalent_up_to(&x, &empty, bound, DEFAULT_ENUM_CAP).unwrap());
            // nothing longer shows up either
            assert!(nonempty_up_to(&x, bound.min(12) + 2, DEFAULT_ENUM_CAP).unwrap().is_none(), "{x}");
        }
    }
}

// compiler

fn occurrences(t: &Term, sub: &Term) -> usize {
    let here = usize::from(t == sub);
    here + match t {
        Term::Var(_) => 0,
        Term::Lam(_, _, b) => occurrences(b, sub),
        Term::App(f, a) => occurrences(f, sub) + occurrences(a, sub),
    }
}

#[test]
fn compiled_operands_occur_once() {
    let s = TypeStore::new();
    let sigma = ab();
    let mut r = rng(23);
    let mut checked = 0;
    while checked < 60 {
        let (n, m) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let e = StarFreeExpr::new(random_expr(&mut r, &sigma, n), sigma.clone()).unwrap();
        let f = StarFreeExpr::new(random_expr(&mut r, &sigma, m), sigma.clone()).unwrap();
        let te = compile(&s, &e).term;
        let tf = compile(&s, &f).term;
        // a count is only meaningful when neither operand contains the other
        if occurrences(&te, &tf) + occurrences(&tf, &te) > 0 {
            continue;
        }
        for op in [Expr::union, Expr::concat] {
            let whole = StarFreeExpr::new(op(e.expr.clone(), f.expr.clone()), sigma.clone()).unwrap();
            let t = compile(&s, &whole).term;
            assert_eq!(occurrences(&t, &te), 1, "{whole}");
            assert_eq!(occurrences(&t, &tf), 1, "{whole}");
        }
        checked += 1;
    }
}

proptest! {
    #![proptest_config(cfg(300))]

    #[test]
    fn box_star_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = ab();
        let (n, m) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let e = random_expr(&mut r, &sigma, n);
        let f = random_expr(&mut r, &sigma, m);
        let u: Vec<char> = random_word(&mut r, &sigma, 4).chars().collect();
        let v: Vec<char> = random_word(&mut r, &sigma, 4).chars().collect();
        let mut w = u.clone();
        w.push(BOX);
        w.extend(&v);
        // one marker: (E□)*F agrees with E□F
        let direct = member_naive(&e, &u) && member_naive(&f, &v);
        prop_assert_eq!(member_box_star(&e, &f, &w), direct);
        // concatenation is the disjunction over the split list
        let uv: Vec<char> = u.iter().chain(&v).copied().collect();
        let word: String = uv.iter().collect();
        let via_split = split_formula(&word)
            .split('#')
            .any(|seg| member_box_star(&e, &f, &seg.chars().collect::<Vec<_>>()));
        prop_assert_eq!(via_split, member_naive(&Expr::concat(e, f), &uv));
    }
}

#[test]
fn compiled_terms_infer() {
    let s = TypeStore::new();
    let sigma = ab();
    for e in exprs_up_to(&sigma, 3) {
        let x = StarFreeExpr::new(e, sigma.clone()).unwrap();
        let c = compile(&s, &x);
        let t = infer(&s, &c.term).unwrap();
        verify_typing(&s, &t).unwrap();
        let at = infer_in(&s, &c.term, &Context::new(), Some(c.full_type)).unwrap();
        assert_eq!(at.ty, c.full_type);
    }
}
