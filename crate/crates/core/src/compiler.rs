//! Compilation of star-free expressions into homogeneous long-safe terms
//! recognizing their languages, and the helper families used by it: `any`
//! (existential test over a `#`-separated list), `split` (all ways of
//! marking one cut of a word), `enum` (all words up to a length) and the
//! closed boolean `b_E`.
//!
//! Terms are emitted Curry-style. Every construction comes with the type it
//! is meant to be checked at; the types are built in a shared store and can
//! be exponentially large when unfolded.

use serde::Serialize;

use crate::church::{
    and_term, cat_k_term, cat_term, false_term, nat_term, not_term, or_term, true_term, tow_term,
    word_term, Alphabet, BOX, HASH,
};
use crate::normalize::Budget;
use crate::safety::{check_hls, SafetyReport};
use crate::starfree::{Expr, StarFreeExpr};
use crate::syntax::Term;
use crate::types::{SerializedType, Ty, TypeStore};

/// The output of [`compile`]: `t_E` with `⊢_hls t_E : Str_Σ[A_E] → Bool`.
#[derive(Clone, Debug)]
pub struct CompiledLanguage {
    pub term: Term,
    /// `A_E`.
    pub base_type: Ty,
    /// `ord(A_E)` as computed by the recursion, without looking at the type.
    pub base_order: u32,
    /// `Str_Σ[A_E] → Bool`.
    pub full_type: Ty,
    pub alphabet: Alphabet,
}

fn v(x: &str) -> Term {
    Term::var(x)
}

fn lams(names: &[&str], body: Term) -> Term {
    Term::lams(names, body)
}

fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
    Term::apps(head, args)
}

fn word(sigma: &Alphabet, w: &str) -> Term {
    word_term(sigma, w).expect("letters come from the alphabet")
}

fn letter(sigma: &Alphabet, i: usize) -> Term {
    word(sigma, &sigma.letters()[i].to_string())
}

fn eps(sigma: &Alphabet) -> Term {
    word(sigma, "")
}

fn with_box(sigma: &Alphabet) -> Alphabet {
    sigma
        .with(BOX)
        .expect("the marker letter is not an input letter")
}

fn with_hash(sigma: &Alphabet) -> Alphabet {
    sigma
        .with(HASH)
        .expect("the separator letter is not an input letter")
}

/// `Γ = Σ ∪ {□, #}`, in that order.
pub fn split_output_alphabet(sigma: &Alphabet) -> Alphabet {
    with_hash(&with_box(sigma))
}

fn str_over(store: &TypeStore, sigma: &Alphabet, a: Ty) -> Ty {
    store.subst_base(store.str_ty(sigma.len()), a)
}

/// `F_any(A) = (Str_Σ[A] → Bool) → Str_Σ[A] → Bool`, the accumulator type of [`any_term`].
pub fn f_any(store: &TypeStore, sigma: &Alphabet, a: Ty) -> Ty {
    let s = str_over(store, sigma, a);
    let pred = store.arrow(s, store.bool_ty());
    store.arrows(&[pred, s], store.bool_ty())
}

/// `A_split = (Nat → Str_Γ) → (Str_Γ → Str_Γ) → Str_Γ`.
pub fn a_split(store: &TypeStore, sigma: &Alphabet) -> Ty {
    let g = store.str_ty(sigma.len() + 2);
    let x = store.arrow(store.nat_ty(), g);
    let f = store.arrow(g, g);
    store.arrows(&[x, f], g)
}

/// `A_enum = Str_{Σ∪#} → Str_{Σ∪#}`.
pub fn a_enum(store: &TypeStore, sigma: &Alphabet) -> Ty {
    let s = store.str_ty(sigma.len() + 1);
    store.arrow(s, s)
}

/// `any_Σ = λsp. s u₁ … u_k u_# (λp.p) p ε̄` with
/// `u_i = λfpx. f p (cat x c̄_i)` and `u_# = λfpx. or (p x) (f p ε̄)`.
///
/// The predicate `p` is passed along the fold instead of being captured by
/// the `#` step, which keeps every argument closed.
pub fn any_term(sigma: &Alphabet) -> Term {
    let mut args: Vec<Term> = (0..sigma.len())
        .map(|i| {
            let body = apps(v("f"), [v("p"), apps(cat_term(sigma), [v("x"), letter(sigma, i)])]);
            lams(&["f", "p", "x"], body)
        })
        .collect();
    let hash = apps(
        or_term(),
        [apps(v("p"), [v("x")]), apps(v("f"), [v("p"), eps(sigma)])],
    );
    args.push(lams(&["f", "p", "x"], hash));
    args.push(lams(&["p"], v("p")));
    args.push(v("p"));
    args.push(eps(sigma));
    lams(&["s", "p"], apps(v("s"), args))
}

/// `λsp. s u₁ … u_k (λfx. or (p x) (f ε̄)) p ε̄` with `u_i = λfx. f (cat x c̄_i)`,
/// at `Str_{Σ∪#}[F] → F → Bool` where `F = Str_Σ[A] → Bool`. Not long-safe:
/// the `#` step has `p` free in argument position.
pub fn any_term_as_displayed(sigma: &Alphabet) -> Term {
    let mut args: Vec<Term> = (0..sigma.len())
        .map(|i| {
            let body = apps(v("f"), [apps(cat_term(sigma), [v("x"), letter(sigma, i)])]);
            lams(&["f", "x"], body)
        })
        .collect();
    let hash = apps(
        or_term(),
        [apps(v("p"), [v("x")]), apps(v("f"), [eps(sigma)])],
    );
    args.push(lams(&["f", "x"], hash));
    args.push(v("p"));
    args.push(eps(sigma));
    lams(&["s", "p"], apps(v("s"), args))
}

/// `split_Σ = λs. s v_{c₁} … v_{c_k} (λxf. cat₃ (f #̄) (x 0̄) □̄) (λn.ε̄) (λy.ε̄)`.
pub fn split_term(sigma: &Alphabet) -> Term {
    let gamma = split_output_alphabet(sigma);
    let zero = || nat_term(0);
    let mut args: Vec<Term> = sigma
        .letters()
        .iter()
        .map(|&c| {
            let c_bar = word(&gamma, &c.to_string());
            let x0 = || apps(v("x"), [zero()]);
            let new_x = lams(&["n"], apps(cat_term(&gamma), [x0(), c_bar.clone()]));
            let shifted = apps(v("f"), [apps(cat_term(&gamma), [c_bar.clone(), v("y")])]);
            let new_f = lams(
                &["y"],
                apps(
                    cat_k_term(&gamma, 4),
                    [shifted, x0(), word(&gamma, &format!("{BOX}{c}")), v("y")],
                ),
            );
            lams(&["k", "x", "f"], apps(v("k"), [new_x, new_f]))
        })
        .collect();
    let finish = apps(
        cat_k_term(&gamma, 3),
        [
            apps(v("f"), [word(&gamma, &HASH.to_string())]),
            apps(v("x"), [zero()]),
            word(&gamma, &BOX.to_string()),
        ],
    );
    args.push(lams(&["x", "f"], finish));
    args.push(lams(&["n"], eps(&gamma)));
    args.push(lams(&["y"], eps(&gamma)));
    lams(&["s"], apps(v("s"), args))
}

/// `enum_Σ = λn. n (λfs. cat_{k+1} s (f (cat c̄₁ s)) … (f (cat c̄_k s))) (λy.y) #̄`,
/// over `Σ ∪ {#}`.
pub fn enum_term(sigma: &Alphabet) -> Term {
    let out = with_hash(sigma);
    let mut parts = vec![v("s")];
    for i in 0..sigma.len() {
        parts.push(apps(v("f"), [apps(cat_term(&out), [letter(&out, i), v("s")])]));
    }
    let step = lams(&["f", "s"], apps(cat_k_term(&out, sigma.len() + 1), parts));
    let body = apps(
        v("n"),
        [step, lams(&["y"], v("y")), word(&out, &HASH.to_string())],
    );
    lams(&["n"], body)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HelperKind {
    Any,
    Split,
    Enum,
}

/// A helper term whose hls type depends on a homogeneous parameter type.
#[derive(Clone, Debug)]
pub struct CompiledHelper {
    pub kind: HelperKind,
    pub term: Term,
    pub alphabet: Alphabet,
}

impl CompiledHelper {
    /// The type the helper is certified at for parameter `a`:
    /// - any: `Str_{Σ∪#}[F_any(A)] → (Str_Σ[A] → Bool) → Bool`
    /// - split: `Str_Σ[A_split[A]] → Str_Γ[A]`
    /// - enum: `Nat[A_enum[A]] → Str_{Σ∪#}[A]`
    pub fn type_at(&self, store: &TypeStore, a: Ty) -> Ty {
        let sigma = &self.alphabet;
        match self.kind {
            HelperKind::Any => {
                let list = str_over(store, &with_hash(sigma), f_any(store, sigma, a));
                let pred = store.arrow(str_over(store, sigma, a), store.bool_ty());
                store.arrows(&[list, pred], store.bool_ty())
            }
            HelperKind::Split => {
                let input = str_over(store, sigma, store.subst_base(a_split(store, sigma), a));
                let output = str_over(store, &split_output_alphabet(sigma), a);
                store.arrow(input, output)
            }
            HelperKind::Enum => {
                let n = store.subst_base(store.nat_ty(), store.subst_base(a_enum(store, sigma), a));
                store.arrow(n, str_over(store, &with_hash(sigma), a))
            }
        }
    }

    pub fn scheme(&self) -> &'static str {
        match self.kind {
            HelperKind::Any => "Str_{S+#}[F_any(A)] -> (Str_S[A] -> Bool) -> Bool, F_any(A) = (Str_S[A] -> Bool) -> Str_S[A] -> Bool",
            HelperKind::Split => "Str_S[A_split[A]] -> Str_G[A], A_split = (Nat -> Str_G) -> (Str_G -> Str_G) -> Str_G, G = S+_+#",
            HelperKind::Enum => "Nat[A_enum[A]] -> Str_{S+#}[A], A_enum = Str_{S+#} -> Str_{S+#}",
        }
    }
}

pub fn build_any(sigma: &Alphabet) -> CompiledHelper {
    CompiledHelper {
        kind: HelperKind::Any,
        term: any_term(sigma),
        alphabet: sigma.clone(),
    }
}

pub fn build_split(sigma: &Alphabet) -> CompiledHelper {
    CompiledHelper {
        kind: HelperKind::Split,
        term: split_term(sigma),
        alphabet: sigma.clone(),
    }
}

pub fn build_enum(sigma: &Alphabet) -> CompiledHelper {
    CompiledHelper {
        kind: HelperKind::Enum,
        term: enum_term(sigma),
        alphabet: sigma.clone(),
    }
}

/// Type at which [`any_term_as_displayed`] would have to be checked.
pub fn any_as_displayed_type(store: &TypeStore, sigma: &Alphabet, a: Ty) -> Ty {
    let pred = store.arrow(str_over(store, sigma, a), store.bool_ty());
    let list = str_over(store, &with_hash(sigma), pred);
    store.arrows(&[list, pred], store.bool_ty())
}

/// `t_∅ = λs. false`
fn t_empty() -> Term {
    lams(&["s"], false_term())
}

/// `t_ε = λs. s (λx.false) … (λx.false) true`
fn t_eps(sigma: &Alphabet) -> Term {
    let mut args: Vec<Term> = (0..sigma.len()).map(|_| lams(&["x"], false_term())).collect();
    args.push(true_term());
    lams(&["s"], apps(v("s"), args))
}

fn state(i: usize) -> Term {
    lams(&["z0", "z1", "z2"], v(["z0", "z1", "z2"][i]))
}

/// Three-state automaton for the one-letter word `c_i`.
fn t_letter(sigma: &Alphabet, i: usize) -> Term {
    let mut args: Vec<Term> = (0..sigma.len())
        .map(|j| {
            if j == i {
                let step = apps(v("q"), [v("z1"), v("z2"), v("z2")]);
                lams(&["q", "z0", "z1", "z2"], step)
            } else {
                lams(&["q"], state(2))
            }
        })
        .collect();
    args.push(state(0));
    args.extend([v("y"), v("x"), v("y")]);
    lams(&["s", "x", "y"], apps(v("s"), args))
}

fn t_not(t: Term) -> Term {
    lams(&["s"], apps(not_term(), [apps(t, [v("s")])]))
}

/// Union with `ord(A_E) ≥ ord(A_F)`: fold both copies, then `or`.
fn t_union(sigma: &Alphabet, te: Term, tf: Term) -> Term {
    let mut args: Vec<Term> = (0..sigma.len())
        .map(|i| {
            let body = apps(
                v("k"),
                [
                    apps(cat_term(sigma), [v("x"), letter(sigma, i)]),
                    apps(cat_term(sigma), [v("y"), letter(sigma, i)]),
                ],
            );
            lams(&["k", "x", "y"], body)
        })
        .collect();
    let base = apps(or_term(), [apps(te, [v("x")]), apps(tf, [v("y")])]);
    args.push(lams(&["x", "y"], base));
    args.push(eps(sigma));
    args.push(eps(sigma));
    lams(&["s"], apps(v("s"), args))
}

/// `t'_{E,F}`, recognizing `(E□)*F` over `Σ ∪ {□}`. With `swapped` the
/// accumulator takes the `F` copy first.
fn t_prime(sigma: &Alphabet, te: Term, tf: Term, swapped: bool) -> Term {
    let mut args: Vec<Term> = (0..sigma.len())
        .map(|i| {
            let body = apps(
                v("f"),
                [
                    apps(cat_term(sigma), [v("x"), letter(sigma, i)]),
                    apps(cat_term(sigma), [v("y"), letter(sigma, i)]),
                ],
            );
            lams(&["f", "x", "y"], body)
        })
        .collect();
    let (e_copy, f_copy) = if swapped { ("y", "x") } else { ("x", "y") };
    let rest = apps(v("f"), [eps(sigma), eps(sigma)]);
    args.push(lams(
        &["f", "x", "y"],
        apps(and_term(), [apps(te, [v(e_copy)]), rest]),
    ));
    args.push(lams(&["x", "y"], apps(tf, [v(f_copy)])));
    args.push(eps(sigma));
    args.push(eps(sigma));
    lams(&["s"], apps(v("s"), args))
}

fn t_concat(sigma: &Alphabet, te: Term, tf: Term, swapped: bool) -> Term {
    let inner = apps(any_term(&with_box(sigma)), [apps(split_term(sigma), [v("s")]), t_prime(sigma, te, tf, swapped)]);
    lams(&["s"], inner)
}

struct Compiler<'a> {
    store: &'a TypeStore,
    sigma: &'a Alphabet,
}

impl Compiler<'_> {
    /// `(t_E, A_E, ord(A_E))`.
    fn go(&self, e: &Expr) -> (Term, Ty, u32) {
        let s = self.store;
        let sigma = self.sigma;
        match e {
            Expr::Empty => (t_empty(), s.base(), 0),
            Expr::Eps => (t_eps(sigma), s.bool_ty(), 1),
            Expr::Letter(c) => {
                let i = sigma.index_of(*c).expect("expression letters are in the alphabet");
                let o = s.base();
                (t_letter(sigma, i), s.arrows(&[o, o, o], o), 1)
            }
            Expr::Not(a) => {
                let (t, ty, ord) = self.go(a);
                (t_not(t), ty, ord)
            }
            Expr::Union(a, b) => {
                let (mut l, mut r) = (self.go(a), self.go(b));
                if l.2 < r.2 {
                    std::mem::swap(&mut l, &mut r);
                }
                let ty = self.pair_type(l.1, r.1);
                (t_union(sigma, l.0, r.0), ty, l.2 + 3)
            }
            Expr::Concat(a, b) => {
                let (te, ae, oe) = self.go(a);
                let (tf, af, of) = self.go(b);
                let swapped = oe < of;
                let k = if swapped { self.pair_type(af, ae) } else { self.pair_type(ae, af) };
                let h = f_any(s, &with_box(sigma), k);
                let ty = s.subst_base(a_split(s, sigma), h);
                (t_concat(sigma, te, tf, swapped), ty, oe.max(of) + 11)
            }
        }
    }

    /// `Str_Σ[A] → Str_Σ[B] → Bool`
    fn pair_type(&self, a: Ty, b: Ty) -> Ty {
        let s = self.store;
        s.arrows(
            &[str_over(s, self.sigma, a), str_over(s, self.sigma, b)],
            s.bool_ty(),
        )
    }
}

/// Compiles `e` into `t_E`. Purely syntactic; the result is not checked.
pub fn compile(store: &TypeStore, e: &StarFreeExpr) -> CompiledLanguage {
    let c = Compiler {
        store,
        sigma: &e.alphabet,
    };
    let (term, base_type, base_order) = c.go(&e.expr);
    let full_type = store.arrow(str_over(store, &e.alphabet, base_type), store.bool_ty());
    CompiledLanguage {
        term,
        base_type,
        base_order,
        full_type,
        alphabet: e.alphabet.clone(),
    }
}

impl CompiledLanguage {
    /// `t_E w̄`.
    pub fn applied_to(&self, w: &str) -> Result<Term, crate::church::ChurchError> {
        Ok(Term::app(self.term.clone(), word_term(&self.alphabet, w)?))
    }

    /// Decides `w ∈ ⟦E⟧` by normalizing `t_E w̄`.
    pub fn accepts(&self, w: &str, budget: &Budget) -> Result<bool, crate::church::ChurchError> {
        crate::church::decode_bool(&self.applied_to(w)?, budget)
    }
}

/// One component of `b_E` and the type it is used at.
#[derive(Clone, Debug)]
pub struct Instantiation {
    pub component: &'static str,
    pub ty: Ty,
}

#[derive(Clone, Debug)]
pub struct ReductionInstance {
    /// `b_E = any_Σ (enum_Σ tow_n) t_E`
    pub term: Term,
    pub compiled: CompiledLanguage,
    pub n: usize,
    /// How the generic types of the parts are lined up.
    pub chain: Vec<Instantiation>,
}

/// Builds `b_E` with `b_E =β true` iff `⟦E⟧` has a word of length at most `tower(n)`.
/// The input binder of `t_E` is annotated with `Str_Σ[A_E]`.
pub fn build_b(store: &TypeStore, e: &StarFreeExpr, n: usize) -> ReductionInstance {
    let sigma = &e.alphabet;
    let compiled = compile(store, e);
    let a = compiled.base_type;
    let h = f_any(store, sigma, a);
    let any = build_any(sigma);
    let en = build_enum(sigma);
    let enum_ty = en.type_at(store, h);
    let nat_in = store.split_arrow(enum_ty).expect("arrow").0;
    let chain = vec![
        Instantiation {
            component: "t_E",
            ty: compiled.full_type,
        },
        Instantiation {
            component: "any",
            ty: any.type_at(store, a),
        },
        Instantiation {
            component: "enum",
            ty: enum_ty,
        },
        Instantiation {
            component: "tow",
            ty: nat_in,
        },
    ];
    // Sub-expressions such as `0` ignore their input, so nothing else in
    // `b_E` pins `A`; the binder annotation fixes it to `A_E`.
    let input = str_over(store, sigma, a);
    let t_e = match compiled.term.clone() {
        Term::Lam(x, None, body) => Term::Lam(x, Some(input), body),
        t => t,
    };
    let term = apps(any.term, [Term::app(en.term, tow_term(n)), t_e]);
    ReductionInstance {
        term,
        compiled,
        n,
        chain,
    }
}

/// Per-constructor term-size overheads for an alphabet size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SizeOverheads {
    pub empty: u64,
    pub eps: u64,
    pub letter: u64,
    pub not: u64,
    pub union: u64,
    pub concat: u64,
}

impl SizeOverheads {
    /// `C` with `|t_E| ≤ C·|E|`: every constructor contributes at most this much.
    pub fn constant(&self) -> u64 {
        [self.empty, self.eps, self.letter, self.not, self.union, self.concat]
            .into_iter()
            .max()
            .expect("non-empty")
    }
}

/// Measures the size each constructor adds around its subterms.
pub fn size_overheads(sigma: &Alphabet) -> SizeOverheads {
    let hole = || v("hole");
    let letter = (0..sigma.len())
        .map(|i| t_letter(sigma, i).size())
        .max()
        .expect("non-empty alphabet");
    let concat = [false, true]
        .into_iter()
        .map(|sw| t_concat(sigma, hole(), hole(), sw).size() - 2)
        .max()
        .expect("two variants");
    SizeOverheads {
        empty: t_empty().size(),
        eps: t_eps(sigma).size(),
        letter,
        not: t_not(hole()).size() - 1,
        union: t_union(sigma, hole(), hole()).size() - 2,
        concat,
    }
}

pub fn size_constant(sigma: &Alphabet) -> u64 {
    size_overheads(sigma).constant()
}

/// Coefficient bounding `ord(A_E) ≤ C'·|E|`: each constructor raises the
/// order by at most this much.
pub const ORDER_CONSTANT: u32 = 11;

/// Machine-readable account of a compilation.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub expression: String,
    pub alphabet: String,
    pub expression_size: usize,
    pub term_size: u64,
    pub size_constant: u64,
    pub base_order: u32,
    pub base_type: SerializedType,
    pub declared_type: SerializedType,
    pub hls: serde_json::Value,
}

pub fn certificate(store: &TypeStore, e: &StarFreeExpr, c: &CompiledLanguage) -> Certificate {
    let report: serde_json::Value = match check_hls(store, &c.term, c.full_type) {
        Ok(r) => r.to_json(store),
        Err(err) => serde_json::json!({ "verdict": "ill-typed", "error": err.to_string() }),
    };
    Certificate {
        expression: e.to_string(),
        alphabet: c.alphabet.to_string(),
        expression_size: e.size(),
        term_size: c.term.size(),
        size_constant: size_constant(&c.alphabet),
        base_order: c.base_order,
        base_type: store.serialize_dag(c.base_type),
        declared_type: store.serialize_dag(c.full_type),
        hls: report,
    }
}

/// `check_hls` of a compiled language at its declared type.
pub fn certify(store: &TypeStore, c: &CompiledLanguage) -> Result<SafetyReport, crate::infer::InferError> {
    check_hls(store, &c.term, c.full_type)
}
