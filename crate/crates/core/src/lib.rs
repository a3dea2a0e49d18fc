//! Simply typed λ-calculus toolkit: hash-consed types, Curry/Church terms,
//! type inference, normalization, safety checking, Church encodings,
//! star-free expressions and a compiler from star-free expressions to
//! long-safe homogeneous terms.

mod db;
pub mod church;
pub mod compiler;
pub mod error;
pub mod infer;
pub mod normalize;
pub mod safety;
pub mod starfree;
pub mod syntax;
pub mod types;

pub use error::ParseError;
pub use infer::{infer, infer_at, infer_pair, reconstruct_normal, Typing};
pub use syntax::{alpha_eq, parse_term, substitute, Path, Step, Term};
pub use types::{Ty, TyNode, TypeStore};
