//! Simple types `A, B ::= o | A -> B`, hash-consed into a [`TypeStore`].
//!
//! Every type is a [`Ty`] handle into a store. Structurally equal trees get
//! the same handle, so `==` on handles is structural equality. Degree, order,
//! homogeneity and unfolded size are computed once when a node is inserted,
//! which makes every metric query O(1) regardless of how large the unfolded
//! tree is.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::RwLock;

use serde::Serialize;

use crate::error::ParseError;

static NEXT_STORE_ID: AtomicU32 = AtomicU32::new(1);

/// Handle to a type node in a [`TypeStore`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ty {
    store: u32,
    idx: u32,
}

impl Ty {
    /// Position of the node inside its store's node table.
    pub fn index(self) -> u32 {
        self.idx
    }
}

impl fmt::Debug for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ty#{}", self.idx)
    }
}

/// One node of the type DAG as seen from outside the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TyNode {
    Base,
    Arrow(Ty, Ty),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Base,
    Arrow(u32, u32),
}

#[derive(Clone, Copy)]
struct Metrics {
    degree: u32,
    order: u32,
    homogeneous: bool,
    unfold: Option<u64>,
}

struct Inner {
    nodes: Vec<Node>,
    metrics: Vec<Metrics>,
    index: HashMap<Node, u32>,
}

/// The unfolded tree would not fit in a `u64` node count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unfolded type size overflows u64")]
pub struct SizeOverflow;

/// Append-only, hash-consed table of simple types.
///
/// Reads may proceed concurrently; insertions take a write lock.
pub struct TypeStore {
    id: u32,
    inner: RwLock<Inner>,
}

impl Default for TypeStore {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for TypeStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TypeStore")
            .field("id", &self.id)
            .field("nodes", &self.len())
            .finish()
    }
}

impl TypeStore {
    pub fn new() -> Self {
        let base = Metrics {
            degree: 0,
            order: 0,
            homogeneous: true,
            unfold: Some(1),
        };
        let mut index = HashMap::new();
        index.insert(Node::Base, 0);
        TypeStore {
            id: NEXT_STORE_ID.fetch_add(1, Ordering::Relaxed),
            inner: RwLock::new(Inner {
                nodes: vec![Node::Base],
                metrics: vec![base],
                index,
            }),
        }
    }

    /// Number of distinct nodes stored so far.
    pub fn len(&self) -> usize {
        self.read().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().expect("type store lock poisoned")
    }

    fn handle(&self, idx: u32) -> Ty {
        Ty { store: self.id, idx }
    }

    fn own(&self, t: Ty) -> u32 {
        assert_eq!(
            t.store, self.id,
            "type handle from a different TypeStore (store {} used with store {})",
            t.store, self.id
        );
        t.idx
    }

    /// Whether `t` was produced by this store.
    pub fn owns(&self, t: Ty) -> bool {
        t.store == self.id && (t.idx as usize) < self.len()
    }

    pub fn base(&self) -> Ty {
        self.handle(0)
    }

    pub fn arrow(&self, a: Ty, b: Ty) -> Ty {
        let (a, b) = (self.own(a), self.own(b));
        let node = Node::Arrow(a, b);
        if let Some(&idx) = self.read().index.get(&node) {
            return self.handle(idx);
        }
        let mut inner = self.inner.write().expect("type store lock poisoned");
        if let Some(&idx) = inner.index.get(&node) {
            return self.handle(idx);
        }
        let ma = inner.metrics[a as usize];
        let mb = inner.metrics[b as usize];
        let head_ok = match inner.nodes[b as usize] {
            Node::Base => true,
            Node::Arrow(b1, _) => ma.order >= inner.metrics[b1 as usize].order,
        };
        let metrics = Metrics {
            degree: ma.degree.max(mb.degree) + 1,
            order: (ma.order + 1).max(mb.order),
            homogeneous: ma.homogeneous && mb.homogeneous && head_ok,
            unfold: ma
                .unfold
                .zip(mb.unfold)
                .and_then(|(x, y)| x.checked_add(y))
                .and_then(|s| s.checked_add(1)),
        };
        let idx = inner.nodes.len() as u32;
        inner.nodes.push(node);
        inner.metrics.push(metrics);
        inner.index.insert(node, idx);
        self.handle(idx)
    }

    /// `args[0] -> ... -> args[n-1] -> result`.
    pub fn arrows(&self, args: &[Ty], result: Ty) -> Ty {
        args.iter().rev().fold(result, |acc, &a| self.arrow(a, acc))
    }

    pub fn node(&self, t: Ty) -> TyNode {
        let idx = self.own(t);
        match self.read().nodes[idx as usize] {
            Node::Base => TyNode::Base,
            Node::Arrow(a, b) => TyNode::Arrow(self.handle(a), self.handle(b)),
        }
    }

    /// Domain and codomain of an arrow, `None` on the base type.
    pub fn split_arrow(&self, t: Ty) -> Option<(Ty, Ty)> {
        match self.node(t) {
            TyNode::Base => None,
            TyNode::Arrow(a, b) => Some((a, b)),
        }
    }

    /// Writes `t` as `A1 -> ... -> An -> o` and returns `[A1, ..., An]`.
    pub fn args(&self, t: Ty) -> Vec<Ty> {
        let mut out = Vec::new();
        let mut cur = t;
        while let Some((a, b)) = self.split_arrow(cur) {
            out.push(a);
            cur = b;
        }
        out
    }

    fn metrics(&self, t: Ty) -> Metrics {
        let idx = self.own(t);
        self.read().metrics[idx as usize]
    }

    /// Height of the syntax tree: `deg(o) = 0`, `deg(A->B) = max(deg A, deg B) + 1`.
    pub fn degree(&self, t: Ty) -> u32 {
        self.metrics(t).degree
    }

    /// `ord(o) = 0`, `ord(A->B) = max(ord A + 1, ord B)`.
    pub fn order(&self, t: Ty) -> u32 {
        self.metrics(t).order
    }

    /// `A1 -> ... -> An -> o` with every `Ai` homogeneous and
    /// `ord(A1) >= ... >= ord(An)`.
    pub fn is_homogeneous(&self, t: Ty) -> bool {
        self.metrics(t).homogeneous
    }

    /// Node count of the fully unfolded tree.
    pub fn unfold_size(&self, t: Ty) -> Result<u64, SizeOverflow> {
        self.metrics(t).unfold.ok_or(SizeOverflow)
    }

    /// `A[B]`: every occurrence of `o` in `a` replaced by `b`.
    pub fn subst_base(&self, a: Ty, b: Ty) -> Ty {
        self.own(b);
        let mut memo: HashMap<u32, Ty> = HashMap::new();
        self.subst_rec(a, b, &mut memo)
    }

    fn subst_rec(&self, a: Ty, b: Ty, memo: &mut HashMap<u32, Ty>) -> Ty {
        if let Some(&r) = memo.get(&self.own(a)) {
            return r;
        }
        let r = match self.node(a) {
            TyNode::Base => b,
            TyNode::Arrow(x, y) => {
                let x = self.subst_rec(x, b, memo);
                let y = self.subst_rec(y, b, memo);
                self.arrow(x, y)
            }
        };
        memo.insert(a.idx, r);
        r
    }

    /// `o -> o -> o`.
    pub fn bool_ty(&self) -> Ty {
        let o = self.base();
        self.arrows(&[o, o], o)
    }

    /// `Str` over an alphabet of `letters` letters: `(o->o)^letters -> o -> o`.
    pub fn str_ty(&self, letters: usize) -> Ty {
        let o = self.base();
        let oo = self.arrow(o, o);
        let mut args = vec![oo; letters];
        args.push(o);
        self.arrows(&args, o)
    }

    /// `(o -> o) -> o -> o`.
    pub fn nat_ty(&self) -> Ty {
        self.str_ty(1)
    }

    /// Nodes reachable from `t`, children before parents; the last entry is `t`.
    pub fn dag_nodes(&self, t: Ty) -> Vec<(u32, TyNode)> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![(t, false)];
        while let Some((cur, expanded)) = stack.pop() {
            if seen.contains(&cur.idx) {
                continue;
            }
            let node = self.node(cur);
            if expanded {
                seen.insert(cur.idx);
                out.push((cur.idx, node));
                continue;
            }
            stack.push((cur, true));
            if let TyNode::Arrow(a, b) = node {
                stack.push((b, false));
                stack.push((a, false));
            }
        }
        out
    }

    /// Indexed node-list serialization of the DAG below `t`.
    pub fn serialize_dag(&self, t: Ty) -> SerializedType {
        let nodes = self.dag_nodes(t);
        let mut renumber = HashMap::new();
        let mut list = Vec::with_capacity(nodes.len());
        for (i, (idx, node)) in nodes.iter().enumerate() {
            renumber.insert(*idx, i);
            list.push(match node {
                TyNode::Base => SerializedNode::Base,
                TyNode::Arrow(a, b) => SerializedNode::Arrow(renumber[&a.idx], renumber[&b.idx]),
            });
        }
        SerializedType {
            root: list.len() - 1,
            nodes: list,
        }
    }

    pub fn parse(&self, text: &str) -> Result<Ty, ParseError> {
        let mut p = TypeParser {
            src: text,
            pos: 0,
            store: self,
        };
        let t = p.ty()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(ParseError::new(p.pos, "trailing input after type"));
        }
        Ok(t)
    }

    /// Prints the unfolded tree. Exponential in the worst case.
    pub fn display(&self, t: Ty) -> String {
        let mut out = String::new();
        self.write_ty(t, &mut out);
        out
    }

    fn write_ty(&self, t: Ty, out: &mut String) {
        let mut cur = t;
        while let Some((a, b)) = self.split_arrow(cur) {
            if self.split_arrow(a).is_some() {
                out.push('(');
                self.write_ty(a, out);
                out.push(')');
            } else {
                out.push('o');
            }
            out.push_str(" -> ");
            cur = b;
        }
        out.push('o');
    }
}

/// A type DAG written as a node list; children always precede parents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SerializedType {
    pub root: usize,
    pub nodes: Vec<SerializedNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SerializedNode {
    Base,
    Arrow(usize, usize),
}

/// Parser for `Type ::= Atom ('->' Type)?`, `Atom ::= 'o' | '(' Type ')'`.
pub(crate) struct TypeParser<'a> {
    pub(crate) src: &'a str,
    pub(crate) pos: usize,
    pub(crate) store: &'a TypeStore,
}

impl TypeParser<'_> {
    pub(crate) fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    pub(crate) fn ty(&mut self) -> Result<Ty, ParseError> {
        let left = self.atom()?;
        self.skip_ws();
        if self.src[self.pos..].starts_with("->") {
            self.pos += 2;
            let right = self.ty()?;
            Ok(self.store.arrow(left, right))
        } else {
            Ok(left)
        }
    }

    fn atom(&mut self) -> Result<Ty, ParseError> {
        match self.peek() {
            Some('o') => {
                let after = self.src[self.pos + 1..].chars().next();
                if after.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
                    return Err(ParseError::new(self.pos, "expected base type `o`"));
                }
                self.pos += 1;
                Ok(self.store.base())
            }
            Some('(') => {
                self.pos += 1;
                let t = self.ty()?;
                if self.peek() != Some(')') {
                    return Err(ParseError::new(self.pos, "expected `)` in type"));
                }
                self.pos += 1;
                Ok(t)
            }
            _ => Err(ParseError::new(self.pos, "expected `o` or `(` in type")),
        }
    }
}
